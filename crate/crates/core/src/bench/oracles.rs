//! Sequential native oracles the benchmark harness verifies runs against.
//! Each is an independent implementation: plain recursion or iteration in
//! Rust, no runtime or compiler machinery involved.

use crate::compiler::ast::lcg_next;

pub fn fib(n: i64) -> i64 {
    let (mut a, mut b) = (0i64, 1i64);
    for _ in 0..n {
        let next = a + b;
        a = b;
        b = next;
    }
    a
}

/// Bitmask backtracking solution count.
pub fn nqueens(n: i64) -> i64 {
    fn go(n: i64, depth: i64, cols: i64, d1: i64, d2: i64) -> i64 {
        if depth == n {
            return 1;
        }
        let mask = (1i64 << n) - 1;
        let mut avail = !(cols | d1 | d2) & mask;
        let mut total = 0;
        while avail != 0 {
            let bit = avail & avail.wrapping_neg();
            avail ^= bit;
            total += go(n, depth + 1, cols | bit, ((d1 | bit) << 1) & mask, (d2 | bit) >> 1);
        }
        total
    }
    go(n, 0, 0, 0, 0)
}

/// Sort-and-compare check; returns the first violating index on failure.
pub fn check_sorted_permutation(input: &[i64], output: &[i64]) -> Result<(), String> {
    if input.len() != output.len() {
        return Err(format!(
            "length changed: {} -> {}",
            input.len(),
            output.len()
        ));
    }
    for (i, w) in output.windows(2).enumerate() {
        if w[0] > w[1] {
            return Err(format!("output unsorted at index {i}: {} > {}", w[0], w[1]));
        }
    }
    let mut expected = input.to_vec();
    expected.sort_unstable();
    if expected != output {
        let first = expected
            .iter()
            .zip(output.iter())
            .position(|(a, b)| a != b)
            .unwrap_or(0);
        return Err(format!(
            "output is not a permutation of the input (first difference at index {first})"
        ));
    }
    Ok(())
}

/// Full binary tree of depth `d` has 2^(d+1) - 1 nodes.
pub fn ftree_count(depth: i64) -> i64 {
    (1i64 << (depth + 1)) - 1
}

/// Mirror of the DSL's counter-based pruning draw.
fn mix(seed: i64, key: i64) -> i64 {
    (lcg_next(lcg_next(seed ^ key)) >> 17) & 2147483647
}

/// Regenerate the pruned b-ary tree deterministically and count its nodes.
pub fn ptree_count(maxd: i64, branching: i64, seed: i64) -> i64 {
    fn go(d: i64, maxd: i64, id: i64, seed: i64, b: i64) -> i64 {
        let mut total = 1;
        if d < maxd {
            for k in 0..b {
                let key = id.wrapping_mul(b).wrapping_add(k + 1);
                if mix(seed, key).rem_euclid(maxd) < maxd - d {
                    total += go(d + 1, maxd, key, seed, b);
                }
            }
        }
        total
    }
    go(0, maxd, 0, seed, branching)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fib_reference_values() {
        assert_eq!(fib(3), 2);
        assert_eq!(fib(10), 55);
        assert_eq!(fib(25), 75025);
        assert_eq!(fib(28), 317811);
    }

    #[test]
    fn nqueens_reference_values() {
        assert_eq!(nqueens(6), 4);
        assert_eq!(nqueens(8), 92);
        assert_eq!(nqueens(10), 724);
    }

    #[test]
    fn sorted_permutation_catches_mutations() {
        assert!(check_sorted_permutation(&[3, 1, 2], &[1, 2, 3]).is_ok());
        assert!(check_sorted_permutation(&[3, 1, 2], &[1, 3, 2]).is_err());
        assert!(check_sorted_permutation(&[3, 1, 2], &[1, 2, 4]).is_err());
    }

    #[test]
    fn ftree_counts() {
        assert_eq!(ftree_count(0), 1);
        assert_eq!(ftree_count(4), 31);
        assert_eq!(ftree_count(16), 131071);
    }

    #[test]
    fn ptree_is_a_pure_function_of_its_key() {
        let a = ptree_count(8, 3, 12345);
        let b = ptree_count(8, 3, 12345);
        assert_eq!(a, b);
        assert!(a >= 1);
        // Different seeds give different shapes (overwhelmingly likely).
        let c = ptree_count(8, 3, 54321);
        assert_ne!(a, c);
    }
}
