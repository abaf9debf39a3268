use std::fmt::Write as _;
use std::path::PathBuf;

use evince_core::crit::{CritReport, Gate};
use evince_core::protocol::VerdictKind;
use evince_core::store::TranscriptRecord;
use serde::Serialize;

use crate::Format;

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

pub fn transcript(record: &TranscriptRecord, format: Format) -> String {
    let t = &record.transcript;
    let mut out = String::new();
    match format {
        Format::Json => return record.to_json(),
        Format::Csv => {
            out.push_str("round,wd,kl_ab,kl_ba,jsd,delta,phase,sim_a,sim_b,crit_a,crit_b\n");
            for r in &t.rounds {
                let s = &r.snapshot;
                let _ = writeln!(
                    out,
                    "{},{:.4},{:.4},{:.4},{:.4},{:.4},{},{},{},{},{}",
                    r.index,
                    s.wd,
                    s.kl_ab,
                    s.kl_ba,
                    s.jsd,
                    r.delta,
                    r.phase,
                    opt(r.sim_a),
                    opt(r.sim_b),
                    opt(r.crit_a),
                    opt(r.crit_b)
                );
            }
            return out;
        }
        Format::Md => {}
    }
    let _ = writeln!(out, "Transcript {}\nSubject: {}\n", record.id, t.subject);
    out.push_str("| Round | WD | KL | JS | Delta | Phase |\n|---:|---:|---:|---:|---:|---|\n");
    for r in &t.rounds {
        let s = &r.snapshot;
        let _ = writeln!(
            out,
            "| {} | {:.4} | {:.4} | {:.4} | {:.3} | {} |",
            r.index, s.wd, s.kl_ab, s.jsd, r.delta, r.phase
        );
    }
    let _ = writeln!(out, "\nVerdict: {} ({})", t.verdict.kind, t.verdict.reason);
    if let Some(c) = &t.verdict.consensus {
        let parts: Vec<String> = c
            .scale()
            .labels()
            .iter()
            .zip(c.probs())
            .map(|(l, p)| format!("{l} {:.1}%", p * 100.0))
            .collect();
        let _ = writeln!(out, "Consensus: {}", parts.join(", "));
    }
    if let Some(a) = &t.aborted {
        let _ = writeln!(
            out,
            "Aborted: agent {} in round {} after {} attempt(s): {}",
            a.side, a.round, a.attempts, a.error
        );
    }
    for note in &t.annotations {
        let _ = writeln!(out, "Note: {note}");
    }
    out
}

pub fn crit(report: &CritReport, tau: f64, gate: &Gate, format: Format) -> String {
    let status = match gate {
        Gate::Pass => "pass",
        Gate::Flag(_) => "flag",
    };
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                gate: &'a str,
                tau: f64,
                report: &'a CritReport,
            }
            serde_json::to_string_pretty(&Out {
                gate: status,
                tau,
                report,
            })
            .expect("report serializes")
                + "\n"
        }
        Format::Csv => {
            let mut out = String::from("reason,kind,rival,gamma,theta\n");
            for a in report.assessments() {
                let text = a.reason.replace('"', "\"\"");
                let kind = serde_json::to_value(a.kind).expect("kind serializes");
                let _ = writeln!(
                    out,
                    "\"{text}\",{},{},{},{}",
                    kind.as_str().unwrap_or(""),
                    a.is_rival,
                    a.gamma,
                    a.theta
                );
            }
            out
        }
        Format::Md => {
            let mut out = format!(
                "Claim: {}\n\n| Reason | Rival | gamma | theta |\n|---|---|---:|---:|\n",
                report.claim
            );
            for a in report.assessments() {
                let _ = writeln!(
                    out,
                    "| {} | {} | {:.2} | {:.2} |",
                    a.reason,
                    if a.is_rival { "yes" } else { "no" },
                    a.gamma,
                    a.theta
                );
            }
            let _ = writeln!(
                out,
                "\nGamma: {:.4} (threshold {tau}, {status})",
                report.gamma_total
            );
            if !report.justification.is_empty() {
                let _ = writeln!(out, "Justification: {}", report.justification);
            }
            out
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ReviewEntry {
    pub path: PathBuf,
    pub id: String,
    pub kind: &'static str,
    pub detail: String,
}

/// Every non-converged verdict and every argument scored below the CRIT threshold.
pub fn review_entries(records: &[(PathBuf, TranscriptRecord)]) -> Vec<ReviewEntry> {
    let mut entries = Vec::new();
    for (path, record) in records {
        let t = &record.transcript;
        let entry = |kind, detail| ReviewEntry {
            path: path.clone(),
            id: record.id.clone(),
            kind,
            detail,
        };
        if t.verdict.kind != VerdictKind::Converged {
            entries.push(entry(
                "verdict",
                format!("{}: {}", t.verdict.kind, t.verdict.reason),
            ));
        }
        for r in &t.rounds {
            for (side, score) in [("A", r.crit_a), ("B", r.crit_b)] {
                if let Some(s) = score.filter(|s| !t.config.crit_passes(*s)) {
                    entries.push(entry(
                        "crit",
                        format!(
                            "round {} agent {side}: CRIT {s:.4} below {}",
                            r.index, t.config.tau_crit
                        ),
                    ));
                }
            }
        }
    }
    entries
}

pub fn review_queue(entries: &[ReviewEntry], format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(entries).expect("entries serialize") + "\n",
        Format::Csv => {
            let mut out = String::from("path,id,kind,detail\n");
            for e in entries {
                let _ = writeln!(
                    out,
                    "{},{},{},\"{}\"",
                    e.path.display(),
                    e.id,
                    e.kind,
                    e.detail.replace('"', "\"\"")
                );
            }
            out
        }
        Format::Md => entries
            .iter()
            .map(|e| format!("{}\t{}\t{}\n", e.path.display(), e.kind, e.detail))
            .collect(),
    }
}
