//! Report bundle: the moment table plus high-vs-low comparisons, RI
//! distributions, binned curves and distinguishing terms.
//!
//! File names and column orders are fixed:
//!
//! | file                  | columns |
//! |-----------------------|---------|
//! | `moments.csv`         | conversation_id, k, outcome, half, piv, piv_label, range, ri, response_time_s, reply_len_chars, error, text |
//! | `response_times.csv`  | measure, n_high, n_low, high_mean, low_mean, diff_mean, high_p75, low_p75, diff_p75, u_statistic, p_value |
//! | `ri_distribution.csv` | label, n, mean_abs_ri, median_abs_ri, p75_abs_ri |
//! | `curves.csv`          | outcome, bin, center, mean, stderr, count |
//! | `terms.csv`           | outcome, half, label, rank, term, z |
//! | `summary.json`        | run digest, thresholds, counts, tests |

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::curves::{binned_curve, Field, GroupCurve};
use super::fightin::{fightin_words_with, FightinConfig, TermScore};
use super::stats::{ks_two_sample, mann_whitney, TestResult};
use super::{AnalysisError, Half, MomentRecord, MomentTable};
use crate::conversation::Outcome;
use crate::measures::{nearest_rank, PivLabel, Thresholds};

pub const REPORT_FILES: [&str; 6] = [
    "moments.csv",
    "response_times.csv",
    "ri_distribution.csv",
    "curves.csv",
    "terms.csv",
    "summary.json",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub n_bins: usize,
    pub top_terms: usize,
    pub fightin: FightinConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            n_bins: 10,
            top_terms: 10,
            fightin: FightinConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: Option<f64>,
    pub p75: Option<f64>,
}

impl GroupSummary {
    fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            n: values.len(),
            mean: (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64),
            p75: (!values.is_empty()).then(|| nearest_rank(&sorted, 75.0)),
        }
    }
}

/// High-PIV vs Low-PIV comparison of one per-moment measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub measure: String,
    pub high: GroupSummary,
    pub low: GroupSummary,
    pub diff_mean: Option<f64>,
    pub diff_p75: Option<f64>,
    pub test: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub label: PivLabel,
    pub n: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub p75: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermCell {
    pub outcome: Outcome,
    pub half: Half,
    pub label: PivLabel,
    pub terms: Vec<TermScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub run_digest: String,
    pub thresholds: Option<Thresholds>,
    pub comparisons: Vec<Comparison>,
    pub abs_ri: Vec<DistributionSummary>,
    /// K-S test of |RI| after High vs Low moments.
    pub ri_test: Option<TestResult>,
    pub curves: Vec<GroupCurve>,
    pub terms: Vec<TermCell>,
}

fn values_for(table: &MomentTable, label: PivLabel, field: Field) -> Vec<f64> {
    table
        .records
        .iter()
        .filter(|r| r.piv.is_some() && r.piv_label == label)
        .filter_map(|r| field.get(r))
        .collect()
}

fn compare(table: &MomentTable, field: Field) -> Comparison {
    let high = values_for(table, PivLabel::High, field);
    let low = values_for(table, PivLabel::Low, field);
    let hs = GroupSummary::of(&high);
    let ls = GroupSummary::of(&low);
    let diff = |a: Option<f64>, b: Option<f64>| Some(a? - b?);
    Comparison {
        measure: field.name().into(),
        diff_mean: diff(hs.mean, ls.mean),
        diff_p75: diff(hs.p75, ls.p75),
        high: hs,
        low: ls,
        test: mann_whitney(&high, &low).ok(),
    }
}

fn distribution(label: PivLabel, values: &[f64]) -> DistributionSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nonempty = !sorted.is_empty();
    DistributionSummary {
        label,
        n: values.len(),
        mean: nonempty.then(|| values.iter().sum::<f64>() / values.len() as f64),
        median: nonempty.then(|| nearest_rank(&sorted, 50.0)),
        p75: nonempty.then(|| nearest_rank(&sorted, 75.0)),
    }
}

fn term_cells(table: &MomentTable, config: &AnalysisConfig) -> Vec<TermCell> {
    let mut cells = Vec::new();
    for outcome in [Outcome::Success, Outcome::Disengaged] {
        for half in [Half::First, Half::Second] {
            let texts = |label: PivLabel| -> Vec<&str> {
                table
                    .records
                    .iter()
                    .filter(|r| r.outcome == outcome && r.half == half && r.piv.is_some() && r.piv_label == label)
                    .map(|r| r.text.as_str())
                    .collect()
            };
            let (high, low) = (texts(PivLabel::High), texts(PivLabel::Low));
            let Ok(scores) = fightin_words_with(&high, &low, &config.fightin) else {
                continue;
            };
            let top_high: Vec<TermScore> = scores.iter().filter(|s| s.z > 0.0).take(config.top_terms).cloned().collect();
            let top_low: Vec<TermScore> = scores
                .iter()
                .rev()
                .filter(|s| s.z < 0.0)
                .take(config.top_terms)
                .cloned()
                .collect();
            cells.push(TermCell {
                outcome,
                half,
                label: PivLabel::High,
                terms: top_high,
            });
            cells.push(TermCell {
                outcome,
                half,
                label: PivLabel::Low,
                terms: top_low,
            });
        }
    }
    cells
}

/// Runs every analysis the report needs. Pure in `table` and `config`.
pub fn analyze(table: &MomentTable, config: &AnalysisConfig) -> Result<AnalysisBundle, AnalysisError> {
    table.validate()?;
    let high_ri = values_for(table, PivLabel::High, Field::AbsRi);
    let low_ri = values_for(table, PivLabel::Low, Field::AbsRi);
    let curves = match binned_curve(table, Field::Piv, Field::Ri, config.n_bins) {
        Ok(c) => c,
        Err(AnalysisError::FieldMissing(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    Ok(AnalysisBundle {
        run_digest: table.run_digest.clone(),
        thresholds: table.thresholds,
        comparisons: vec![compare(table, Field::ResponseTime), compare(table, Field::ReplyLength)],
        ri_test: ks_two_sample(&high_ri, &low_ri).ok(),
        abs_ri: vec![distribution(PivLabel::High, &high_ri), distribution(PivLabel::Low, &low_ri)],
        curves,
        terms: term_cells(table, config),
    })
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn io(e: impl std::fmt::Display) -> AnalysisError {
    AnalysisError::Io(e.to_string())
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn moment_row(r: &MomentRecord) -> Vec<String> {
    vec![
        r.conversation_id.clone(),
        r.k.to_string(),
        r.outcome.as_str().into(),
        r.half.as_str().into(),
        num(r.piv),
        r.piv_label.as_str().into(),
        num(r.range),
        num(r.ri),
        num(r.response_time_s),
        r.reply_len_chars.map(|n| n.to_string()).unwrap_or_default(),
        r.error.clone().unwrap_or_default(),
        r.text.clone(),
    ]
}

#[derive(Serialize)]
struct Summary<'a> {
    run_digest: &'a str,
    thresholds: &'a Option<Thresholds>,
    n_records: usize,
    n_scored: usize,
    n_failed: usize,
    comparisons: &'a [Comparison],
    abs_ri: &'a [DistributionSummary],
    ri_test: &'a Option<TestResult>,
    files: [&'static str; 6],
}

/// Writes the bundle into `dir` and returns the written paths in [`REPORT_FILES`] order.
pub fn emit_report(table: &MomentTable, bundle: &AnalysisBundle, dir: &Path) -> Result<Vec<PathBuf>, AnalysisError> {
    if table.records.is_empty() {
        return Err(AnalysisError::InvalidConfig("moment table is empty".into()));
    }
    fs::create_dir_all(dir).map_err(io)?;
    let paths: Vec<PathBuf> = REPORT_FILES.iter().map(|f| dir.join(f)).collect();

    write_csv(
        &paths[0],
        &[
            "conversation_id",
            "k",
            "outcome",
            "half",
            "piv",
            "piv_label",
            "range",
            "ri",
            "response_time_s",
            "reply_len_chars",
            "error",
            "text",
        ],
        table.records.iter().map(moment_row).collect(),
    )?;

    write_csv(
        &paths[1],
        &[
            "measure",
            "n_high",
            "n_low",
            "high_mean",
            "low_mean",
            "diff_mean",
            "high_p75",
            "low_p75",
            "diff_p75",
            "u_statistic",
            "p_value",
        ],
        bundle
            .comparisons
            .iter()
            .map(|c| {
                vec![
                    c.measure.clone(),
                    c.high.n.to_string(),
                    c.low.n.to_string(),
                    num(c.high.mean),
                    num(c.low.mean),
                    num(c.diff_mean),
                    num(c.high.p75),
                    num(c.low.p75),
                    num(c.diff_p75),
                    num(c.test.as_ref().map(|t| t.statistic)),
                    num(c.test.as_ref().map(|t| t.p_value)),
                ]
            })
            .collect(),
    )?;

    write_csv(
        &paths[2],
        &["label", "n", "mean_abs_ri", "median_abs_ri", "p75_abs_ri"],
        bundle
            .abs_ri
            .iter()
            .map(|d| {
                vec![
                    d.label.as_str().into(),
                    d.n.to_string(),
                    num(d.mean),
                    num(d.median),
                    num(d.p75),
                ]
            })
            .collect(),
    )?;

    write_csv(
        &paths[3],
        &["outcome", "bin", "center", "mean", "stderr", "count"],
        bundle
            .curves
            .iter()
            .flat_map(|curve| {
                curve.bins.iter().enumerate().map(move |(i, b)| {
                    vec![
                        curve.group.as_str().into(),
                        i.to_string(),
                        b.center.to_string(),
                        num(b.mean),
                        num(b.stderr),
                        b.count.to_string(),
                    ]
                })
            })
            .collect(),
    )?;

    write_csv(
        &paths[4],
        &["outcome", "half", "label", "rank", "term", "z"],
        bundle
            .terms
            .iter()
            .flat_map(|cell| {
                cell.terms.iter().enumerate().map(move |(i, t)| {
                    vec![
                        cell.outcome.as_str().into(),
                        cell.half.as_str().into(),
                        cell.label.as_str().into(),
                        (i + 1).to_string(),
                        t.term.clone(),
                        t.z.to_string(),
                    ]
                })
            })
            .collect(),
    )?;

    let n_scored = table.records.iter().filter(|r| r.piv.is_some()).count();
    let summary = Summary {
        run_digest: &bundle.run_digest,
        thresholds: &bundle.thresholds,
        n_records: table.records.len(),
        n_scored,
        n_failed: table.records.len() - n_scored,
        comparisons: &bundle.comparisons,
        abs_ri: &bundle.abs_ri,
        ri_test: &bundle.ri_test,
        files: REPORT_FILES,
    };
    let mut json = serde_json::to_string_pretty(&summary).map_err(io)?;
    json.push('\n');
    fs::write(&paths[5], json).map_err(io)?;
    Ok(paths)
}
