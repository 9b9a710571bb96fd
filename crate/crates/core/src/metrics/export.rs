//! Report serialization. CSV carries the timeline as rows with the run's
//! scalars as leading `#` metadata lines; JSON is the full report. Both are
//! byte-stable for deterministic runs.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, RuntimeError};

use super::{RunReport, SegmentKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> ReportFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

pub fn report_to_csv(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# seed={}", report.seed);
    let _ = writeln!(
        out,
        "# config={}",
        serde_json::to_string(&report.config).expect("config serializes")
    );
    let _ = writeln!(out, "# root_result={:?}", report.root_result);
    let _ = writeln!(out, "# makespan={}", report.makespan);
    let _ = writeln!(out, "# wall_time_ns={:?}", report.wall_time_ns);
    let _ = writeln!(out, "# invocations={}", report.invocations);
    let _ = writeln!(out, "# total_work={}", report.work_span.total_work);
    let _ = writeln!(out, "# critical_path={}", report.work_span.critical_path);
    let _ = writeln!(
        out,
        "# divergence: batches={} mean_distinct_paths={} lane_utilization={}",
        report.divergence.batches,
        report.divergence.mean_distinct_paths,
        report.divergence.lane_utilization
    );
    let histogram: Vec<String> = report
        .divergence
        .histogram
        .iter()
        .map(|(k, v)| format!("{k}:{v}"))
        .collect();
    let _ = writeln!(out, "# divergence_histogram={}", histogram.join(","));
    let q = &report.queue_counters;
    let _ = writeln!(
        out,
        "# queues: pop_claims={} steal_claims={} push_publishes={} lock_acquisitions={} \
         failed_steals={} tasks_pushed={} tasks_popped={} tasks_stolen={}",
        q.pop_claims,
        q.steal_claims,
        q.push_publishes,
        q.lock_acquisitions,
        q.failed_steals,
        q.tasks_pushed,
        q.tasks_popped,
        q.tasks_stolen
    );
    let p = &report.pool_counters;
    let _ = writeln!(
        out,
        "# pool: allocs={} finishes={} join_rmw_ops={} child_result_writes={} zero_transitions={}",
        p.allocs, p.finishes, p.join_rmw_ops, p.child_result_writes, p.zero_transitions
    );
    out.push_str("worker,t_start,t_end,kind,active_lanes\n");
    for s in &report.timelines {
        let kind = match s.kind {
            SegmentKind::TaskExec => "task_exec",
            SegmentKind::Idle => "idle",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.worker, s.t_start, s.t_end, kind, s.active_lanes
        );
    }
    out
}

pub fn report_to_json(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Write the report to `path` in the requested (or extension-derived) format.
pub fn export_report(
    report: &RunReport,
    path: &Path,
    format: Option<ReportFormat>,
) -> Result<()> {
    let format = format.unwrap_or_else(|| ReportFormat::from_path(path));
    let body = match format {
        ReportFormat::Csv => report_to_csv(report),
        ReportFormat::Json => report_to_json(report),
    };
    std::fs::write(path, body)
        .map_err(|e| RuntimeError::Usage(format!("cannot write {}: {e}", path.display())))
}
