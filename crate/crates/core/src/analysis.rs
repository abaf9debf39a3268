//! Bias distances between partisan annotators and the debate outcome, and
//! aggregate reports over annotated article sets.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::LabelScale;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("unknown rating label {0:?}")]
    UnknownLabel(String),
    #[error("article {id} has no {role} rating")]
    MissingRole { id: String, role: Role },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("report CSV: {0}")]
    Csv(String),
}

/// Who produced a rating: Democrat and Republican annotators, the debate
/// system, and two single-model baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    D,
    R,
    S,
    #[serde(rename = "c")]
    C,
    #[serde(rename = "g")]
    G,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::D, Role::R, Role::S, Role::C, Role::G];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::D => "D",
            Role::R => "R",
            Role::S => "S",
            Role::C => "c",
            Role::G => "g",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedArticle {
    pub id: String,
    pub category: String,
    pub source: String,
    /// Canonical scale labels by role.
    pub ratings: BTreeMap<Role, String>,
    #[serde(default)]
    pub justification: Option<String>,
}

impl AnnotatedArticle {
    pub fn rating(&self, role: Role) -> Option<&str> {
        self.ratings.get(&role).map(String::as_str)
    }
}

/// Negativity ordinal: the first (most negative) label of an `n`-label scale
/// maps to `n`, the last to 1.
pub fn rating_to_ordinal(label: &str, scale: &LabelScale) -> Result<i64, AnalysisError> {
    let idx = scale
        .index_of(label)
        .ok_or_else(|| AnalysisError::UnknownLabel(label.to_string()))?;
    Ok((scale.len() - idx) as i64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasDistanceTriple {
    pub dr: u32,
    pub ds: u32,
    pub sr: u32,
}

impl BiasDistanceTriple {
    fn add(self, o: Self) -> Self {
        Self {
            dr: self.dr + o.dr,
            ds: self.ds + o.ds,
            sr: self.sr + o.sr,
        }
    }
}

impl fmt::Display for BiasDistanceTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}, {}", self.dr, self.ds, self.sr)
    }
}

fn ordinal_of(
    article: &AnnotatedArticle,
    role: Role,
    scale: &LabelScale,
) -> Result<i64, AnalysisError> {
    let label = article
        .rating(role)
        .ok_or_else(|| AnalysisError::MissingRole {
            id: article.id.clone(),
            role,
        })?;
    rating_to_ordinal(label, scale)
}

pub fn bias_distances(
    article: &AnnotatedArticle,
    scale: &LabelScale,
) -> Result<BiasDistanceTriple, AnalysisError> {
    let d = ordinal_of(article, Role::D, scale)?;
    let r = ordinal_of(article, Role::R, scale)?;
    let s = ordinal_of(article, Role::S, scale)?;
    Ok(BiasDistanceTriple {
        dr: d.abs_diff(r) as u32,
        ds: d.abs_diff(s) as u32,
        sr: s.abs_diff(r) as u32,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRow {
    pub id: String,
    pub category: String,
    pub source: String,
    pub triple: BiasDistanceTriple,
    /// |g - S| when both are rated.
    pub gap_g_s: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub rows: Vec<ArticleRow>,
    pub totals: BiasDistanceTriple,
    pub gap_mean: Option<f64>,
    pub gap_count: usize,
    pub gap_skipped: usize,
    /// Rating counts per role, one entry per scale label in scale order.
    /// Role c is counted here but excluded from every distance.
    pub histograms: BTreeMap<Role, Vec<usize>>,
    pub labels: Vec<String>,
}

impl AggregateReport {
    /// Pair names ordered by total distance, smallest first; ties keep DR, DS, SR order.
    pub fn ordering(&self) -> Vec<(&'static str, u32)> {
        let mut pairs = vec![
            ("DR", self.totals.dr),
            ("DS", self.totals.ds),
            ("SR", self.totals.sr),
        ];
        pairs.sort_by_key(|&(_, v)| v);
        pairs
    }

    /// Whether the system sits between the two annotators: DS < SR < DR or
    /// SR < DS < DR, i.e. D-R is strictly the largest distance.
    pub fn system_is_central(&self) -> bool {
        let t = self.totals;
        t.dr > t.ds && t.dr > t.sr
    }
}

pub fn aggregate(
    dataset: &[AnnotatedArticle],
    scale: &LabelScale,
) -> Result<AggregateReport, AnalysisError> {
    if dataset.is_empty() {
        return Err(AnalysisError::EmptyDataset);
    }
    let mut rows = Vec::with_capacity(dataset.len());
    let mut totals = BiasDistanceTriple::default();
    let mut gap_sum = 0u32;
    let mut gap_count = 0;
    let mut histograms: BTreeMap<Role, Vec<usize>> = BTreeMap::new();
    for article in dataset {
        let triple = bias_distances(article, scale)?;
        totals = totals.add(triple);
        let gap_g_s = match article.rating(Role::G) {
            Some(_) => {
                let g = ordinal_of(article, Role::G, scale)?;
                let s = ordinal_of(article, Role::S, scale)?;
                Some(g.abs_diff(s) as u32)
            }
            None => None,
        };
        if let Some(gap) = gap_g_s {
            gap_sum += gap;
            gap_count += 1;
        }
        for (&role, label) in &article.ratings {
            let idx = scale
                .index_of(label)
                .ok_or_else(|| AnalysisError::UnknownLabel(label.clone()))?;
            histograms
                .entry(role)
                .or_insert_with(|| vec![0; scale.len()])[idx] += 1;
        }
        rows.push(ArticleRow {
            id: article.id.clone(),
            category: article.category.clone(),
            source: article.source.clone(),
            triple,
            gap_g_s,
        });
    }
    Ok(AggregateReport {
        rows,
        totals,
        gap_mean: (gap_count > 0).then(|| f64::from(gap_sum) / gap_count as f64),
        gap_count,
        gap_skipped: dataset.len() - gap_count,
        histograms,
        labels: scale.labels().to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
}

pub const CSV_HEADER: [&str; 7] = ["id", "category", "DR", "DS", "SR", "gap_g_s", "source"];
const TOTAL_ID: &str = "TOTAL";

pub fn emit_report(report: &AggregateReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => emit_markdown(report),
        ReportFormat::Csv => emit_csv(report),
    }
}

fn emit_csv(report: &AggregateReport) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let opt = |v: Option<u32>| v.map(|g| g.to_string()).unwrap_or_default();
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in &report.rows {
        let t = row.triple;
        w.write_record([
            row.id.clone(),
            row.category.clone(),
            t.dr.to_string(),
            t.ds.to_string(),
            t.sr.to_string(),
            opt(row.gap_g_s),
            row.source.clone(),
        ])
        .expect("in-memory write");
    }
    let t = report.totals;
    let gap = report
        .gap_mean
        .map(|g| format!("{g:.4}"))
        .unwrap_or_default();
    w.write_record([
        TOTAL_ID,
        "",
        &t.dr.to_string(),
        &t.ds.to_string(),
        &t.sr.to_string(),
        &gap,
        "",
    ])
    .expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn emit_markdown(report: &AggregateReport) -> String {
    let mut out = String::new();
    out.push_str("| ID | Category | DR | DS | SR | g-S | Source |\n");
    out.push_str("|---|---|---:|---:|---:|---:|---|\n");
    for row in &report.rows {
        let t = row.triple;
        let gap = row
            .gap_g_s
            .map(|g| g.to_string())
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {gap} | {} |",
            row.id, row.category, t.dr, t.ds, t.sr, row.source
        );
    }
    let _ = writeln!(out, "\nTotals (DR, DS, SR): {}", report.totals);
    match report.gap_mean {
        Some(g) => {
            let _ = writeln!(
                out,
                "Mean |g - S| gap: {g:.4} over {} articles ({} skipped without g)",
                report.gap_count, report.gap_skipped
            );
        }
        None => {
            let _ = writeln!(
                out,
                "Mean |g - S| gap: n/a ({} articles without g)",
                report.gap_skipped
            );
        }
    }
    let order: Vec<String> = report
        .ordering()
        .iter()
        .map(|(n, v)| format!("{n} {v}"))
        .collect();
    let _ = writeln!(out, "Ordering: {}", order.join(" <= "));

    out.push_str("\n| Role |");
    for label in &report.labels {
        let _ = write!(out, " {label} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(report.labels.len()));
    out.push('\n');
    for (role, counts) in &report.histograms {
        let _ = write!(out, "| {role} |");
        for c in counts {
            let _ = write!(out, " {c} |");
        }
        out.push('\n');
    }
    out
}

/// Totals and gap mean read back from CSV emitted by [`emit_report`]. The
/// totals are recomputed from the data rows and checked against the total row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTotals {
    pub rows: usize,
    pub totals: BiasDistanceTriple,
    pub gap_mean: Option<f64>,
}

pub fn parse_report_csv(text: &str) -> Result<CsvTotals, AnalysisError> {
    let err = |m: String| AnalysisError::Csv(m);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| err(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(err(format!("unexpected header {header:?}")));
    }
    let mut sum = BiasDistanceTriple::default();
    let (mut gap_sum, mut gap_n) = (0u32, 0usize);
    let mut rows = 0;
    let mut total_row = None;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let num = |j: usize| -> Result<u32, AnalysisError> {
            rec[j].parse().map_err(|_| {
                err(format!(
                    "row {}: bad {} value {:?}",
                    i + 2,
                    CSV_HEADER[j],
                    &rec[j]
                ))
            })
        };
        let t = BiasDistanceTriple {
            dr: num(2)?,
            ds: num(3)?,
            sr: num(4)?,
        };
        if &rec[0] == TOTAL_ID {
            total_row = Some(t);
            continue;
        }
        rows += 1;
        sum = sum.add(t);
        if !rec[5].is_empty() {
            gap_sum += num(5)?;
            gap_n += 1;
        }
    }
    match total_row {
        Some(t) if t == sum => {}
        Some(t) => return Err(err(format!("total row {t} disagrees with row sum {sum}"))),
        None => return Err(err("missing total row".into())),
    }
    Ok(CsvTotals {
        rows,
        totals: sum,
        gap_mean: (gap_n > 0).then(|| f64::from(gap_sum) / gap_n as f64),
    })
}
