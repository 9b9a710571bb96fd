use super::ast::Span;
use super::Diagnostic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    KwTask,
    KwFn,
    KwBuffer,
    KwLet,
    KwIf,
    KwElse,
    KwWhile,
    KwReturn,
    KwSpawn,
    KwTaskwait,
    KwQueue,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Assign,
    Question,
    Colon,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Amp,
    AmpAmp,
    Pipe,
    PipePipe,
    Caret,
    Tilde,
    Bang,
    BangEq,
    EqEq,
    Lt,
    Le,
    Gt,
    Ge,
    Shl,
    Shr,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Tok::Ident(name) => return write!(f, "identifier `{name}`"),
            Tok::Int(v) => return write!(f, "integer `{v}`"),
            Tok::KwTask => "task",
            Tok::KwFn => "fn",
            Tok::KwBuffer => "buffer",
            Tok::KwLet => "let",
            Tok::KwIf => "if",
            Tok::KwElse => "else",
            Tok::KwWhile => "while",
            Tok::KwReturn => "return",
            Tok::KwSpawn => "spawn",
            Tok::KwTaskwait => "taskwait",
            Tok::KwQueue => "queue",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Assign => "=",
            Tok::Question => "?",
            Tok::Colon => ":",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Amp => "&",
            Tok::AmpAmp => "&&",
            Tok::Pipe => "|",
            Tok::PipePipe => "||",
            Tok::Caret => "^",
            Tok::Tilde => "~",
            Tok::Bang => "!",
            Tok::BangEq => "!=",
            Tok::EqEq => "==",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Shl => "<<",
            Tok::Shr => ">>",
            Tok::Eof => "end of input",
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut tokens = Vec::new();
    let mut chars = source.chars().peekable();
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    loop {
        let span = Span { line, col };
        let Some(&c) = chars.peek() else {
            tokens.push(Token {
                tok: Tok::Eof,
                span,
            });
            return Ok(tokens);
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
                continue;
            }
            '/' => {
                bump!();
                if chars.peek() == Some(&'/') {
                    while let Some(&n) = chars.peek() {
                        if n == '\n' {
                            break;
                        }
                        bump!();
                    }
                    continue;
                }
                tokens.push(Token {
                    tok: Tok::Slash,
                    span,
                });
            }
            '0'..='9' => {
                let mut text = String::new();
                let mut hex = false;
                while let Some(&n) = chars.peek() {
                    if n.is_ascii_digit()
                        || (hex && n.is_ascii_hexdigit())
                        || (text == "0" && (n == 'x' || n == 'X'))
                    {
                        if n == 'x' || n == 'X' {
                            hex = true;
                        }
                        text.push(n);
                        bump!();
                    } else {
                        break;
                    }
                }
                let parsed = if let Some(hex_digits) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
                    u64::from_str_radix(hex_digits, 16).map(|v| v as i64)
                } else {
                    // Accept the full u64 range so masks like
                    // 0x8000000000000000 round-trip through two's complement.
                    text.parse::<u64>().map(|v| v as i64)
                };
                match parsed {
                    Ok(value) => tokens.push(Token {
                        tok: Tok::Int(value),
                        span,
                    }),
                    Err(_) => {
                        return Err(Diagnostic::new(span, format!("invalid integer literal `{text}`")))
                    }
                }
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut text = String::new();
                while let Some(&n) = chars.peek() {
                    if n.is_ascii_alphanumeric() || n == '_' {
                        text.push(n);
                        bump!();
                    } else {
                        break;
                    }
                }
                let tok = match text.as_str() {
                    "task" => Tok::KwTask,
                    "fn" => Tok::KwFn,
                    "buffer" => Tok::KwBuffer,
                    "let" => Tok::KwLet,
                    "if" => Tok::KwIf,
                    "else" => Tok::KwElse,
                    "while" => Tok::KwWhile,
                    "return" => Tok::KwReturn,
                    "spawn" => Tok::KwSpawn,
                    "taskwait" => Tok::KwTaskwait,
                    "queue" => Tok::KwQueue,
                    _ => Tok::Ident(text),
                };
                tokens.push(Token { tok, span });
            }
            _ => {
                bump!();
                let two = |chars: &mut std::iter::Peekable<std::str::Chars>, expect: char| {
                    chars.peek() == Some(&expect)
                };
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '?' => Tok::Question,
                    ':' => Tok::Colon,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '%' => Tok::Percent,
                    '^' => Tok::Caret,
                    '~' => Tok::Tilde,
                    '=' => {
                        if two(&mut chars, '=') {
                            bump!();
                            Tok::EqEq
                        } else {
                            Tok::Assign
                        }
                    }
                    '!' => {
                        if two(&mut chars, '=') {
                            bump!();
                            Tok::BangEq
                        } else {
                            Tok::Bang
                        }
                    }
                    '&' => {
                        if two(&mut chars, '&') {
                            bump!();
                            Tok::AmpAmp
                        } else {
                            Tok::Amp
                        }
                    }
                    '|' => {
                        if two(&mut chars, '|') {
                            bump!();
                            Tok::PipePipe
                        } else {
                            Tok::Pipe
                        }
                    }
                    '<' => {
                        if two(&mut chars, '<') {
                            bump!();
                            Tok::Shl
                        } else if two(&mut chars, '=') {
                            bump!();
                            Tok::Le
                        } else {
                            Tok::Lt
                        }
                    }
                    '>' => {
                        if two(&mut chars, '>') {
                            bump!();
                            Tok::Shr
                        } else if two(&mut chars, '=') {
                            bump!();
                            Tok::Ge
                        } else {
                            Tok::Gt
                        }
                    }
                    other => {
                        return Err(Diagnostic::new(
                            span,
                            format!("unexpected character `{other}`"),
                        ))
                    }
                };
                tokens.push(Token { tok, span });
            }
        }
    }
}
