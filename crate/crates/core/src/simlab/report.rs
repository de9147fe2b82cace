//! Report writers: metrics.csv, trace.jsonl, and a plain-text summary.
//! Output is byte-deterministic for identical runs.

use std::fmt::Write as _;
use std::path::Path;

use super::replay::RunReport;
use super::SimlabError;

/// Write `metrics.csv` (one row per profile), `trace.jsonl` (one line per
/// interaction), and `summary.txt` into `out_dir`.
pub fn write_report(report: &RunReport, out_dir: impl AsRef<Path>) -> Result<(), SimlabError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| SimlabError::Io {
        path: out_dir.display().to_string(),
        message: e.to_string(),
    })?;
    write_file(out_dir.join("metrics.csv"), &render_metrics_csv(report))?;
    write_file(out_dir.join("trace.jsonl"), &render_trace_jsonl(report))?;
    write_file(out_dir.join("summary.txt"), &render_summary(report))?;
    Ok(())
}

fn write_file(path: std::path::PathBuf, contents: &str) -> Result<(), SimlabError> {
    std::fs::write(&path, contents).map_err(|e| SimlabError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn render_metrics_csv(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(
        "profile,omitted,in_domain_total,in_domain_granted,in_domain_access_rate,\
         out_domain_total,out_domain_granted,out_domain_access_rate,benign_total,\
         passthrough,relax,normal,strict,relax_share,normal_share,strict_share,\
         revalidations,blocked\n",
    );
    for row in &report.rows {
        let (relax_share, normal_share, strict_share) = row.shares();
        writeln!(
            out,
            "{},{},{},{},{:.6},{},{},{:.6},{},{},{},{},{},{:.6},{:.6},{:.6},{},{}",
            row.user_id,
            row.omitted,
            row.in_domain_total,
            row.in_domain_granted,
            row.in_domain_access_rate(),
            row.out_domain_total,
            row.out_domain_granted,
            row.out_domain_access_rate(),
            row.benign_total,
            row.passthrough,
            row.relax,
            row.normal,
            row.strict,
            relax_share,
            normal_share,
            strict_share,
            row.revalidations,
            row.blocked,
        )
        .expect("string write");
    }
    out
}

pub fn render_trace_jsonl(report: &RunReport) -> String {
    let mut out = String::new();
    for trace in &report.traces {
        out.push_str(&serde_json::to_string(trace).expect("trace serializes"));
        out.push('\n');
    }
    out
}

pub fn render_summary(report: &RunReport) -> String {
    let mut out = String::new();
    writeln!(out, "replay summary (omitted: {})", report.omitted).expect("string write");
    writeln!(out, "profiles: {}", report.rows.len()).expect("string write");
    for row in &report.rows {
        let (relax, normal, strict) = row.shares();
        writeln!(
            out,
            "- {}: in-domain {}/{} ({:.2}%), out-domain {}/{} ({:.2}%), \
             levels relax {:.2}% / normal {:.2}% / strict {:.2}%, \
             passthrough {}, revalidations {}, blocked {}",
            row.user_id,
            row.in_domain_granted,
            row.in_domain_total,
            100.0 * row.in_domain_access_rate(),
            row.out_domain_granted,
            row.out_domain_total,
            100.0 * row.out_domain_access_rate(),
            100.0 * relax,
            100.0 * normal,
            100.0 * strict,
            row.passthrough,
            row.revalidations,
            row.blocked,
        )
        .expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simlab::replay::ProfileMetrics;

    fn report() -> RunReport {
        RunReport {
            omitted: "none".into(),
            rows: vec![ProfileMetrics {
                user_id: "u1".into(),
                omitted: "none".into(),
                in_domain_total: 10,
                in_domain_granted: 9,
                out_domain_total: 20,
                out_domain_granted: 1,
                benign_total: 30,
                passthrough: 30,
                relax: 10,
                normal: 15,
                strict: 5,
                revalidations: 1,
                blocked: 0,
            }],
            traces: Vec::new(),
        }
    }

    #[test]
    fn metrics_csv_is_deterministic_and_shaped() {
        let a = render_metrics_csv(&report());
        let b = render_metrics_csv(&report());
        assert_eq!(a, b);
        let mut lines = a.lines();
        let header = lines.next().unwrap();
        assert_eq!(header.split(',').count(), 18);
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 18);
        assert!(row.starts_with("u1,none,10,9,0.900000,20,1,0.050000,"));
    }

    #[test]
    fn shares_sum_to_one_in_summary() {
        let text = render_summary(&report());
        assert!(text.contains("relax 33.33% / normal 50.00% / strict 16.67%"));
    }
}
