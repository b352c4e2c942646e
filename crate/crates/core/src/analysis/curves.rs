//! Binned percentile curves, e.g. mean RI as a function of PIV percentile.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, MomentRecord, MomentTable};
use crate::conversation::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Piv,
    Range,
    Ri,
    AbsRi,
    ResponseTime,
    ReplyLength,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Piv => "piv",
            Field::Range => "range",
            Field::Ri => "ri",
            Field::AbsRi => "abs_ri",
            Field::ResponseTime => "response_time_s",
            Field::ReplyLength => "reply_len_chars",
        }
    }

    pub fn get(self, r: &MomentRecord) -> Option<f64> {
        match self {
            Field::Piv => r.piv,
            Field::Range => r.range,
            Field::Ri => r.ri,
            Field::AbsRi => r.ri.map(f64::abs),
            Field::ResponseTime => r.response_time_s,
            Field::ReplyLength => r.reply_len_chars.map(|n| n as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBin {
    pub center: f64,
    /// `None` for empty bins.
    pub mean: Option<f64>,
    /// Standard error of the mean; `None` below two points.
    pub stderr: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCurve {
    pub group: Outcome,
    pub bins: Vec<CurveBin>,
}

/// Percentile rank in (0, 100) using mid-ranks: 100·(rank − ½)/n.
fn percentile_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let midrank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = 100.0 * (midrank - 0.5) / n as f64;
        }
        start = end;
    }
    out
}

/// Converts `x` to its within-table percentile rank, splits [0, 100] into
/// `n_bins` equal-width bins, and averages `y` per bin within each outcome group.
pub fn binned_curve(table: &MomentTable, x: Field, y: Field, n_bins: usize) -> Result<Vec<GroupCurve>, AnalysisError> {
    if n_bins < 2 {
        return Err(AnalysisError::InvalidConfig("need at least two bins".into()));
    }
    let with_x: Vec<(&MomentRecord, f64)> = table.records.iter().filter_map(|r| x.get(r).map(|v| (r, v))).collect();
    if with_x.is_empty() {
        return Err(AnalysisError::FieldMissing(x.name()));
    }
    if !table.records.iter().any(|r| y.get(r).is_some()) {
        return Err(AnalysisError::FieldMissing(y.name()));
    }
    let ranks = percentile_ranks(&with_x.iter().map(|(_, v)| *v).collect::<Vec<_>>());

    let mut groups: BTreeMap<Outcome, Vec<Vec<f64>>> = BTreeMap::new();
    for ((record, _), pct) in with_x.iter().zip(ranks) {
        let Some(yv) = y.get(record) else { continue };
        let bin = ((pct / 100.0 * n_bins as f64).floor() as usize).min(n_bins - 1);
        groups.entry(record.outcome).or_insert_with(|| vec![Vec::new(); n_bins])[bin].push(yv);
    }
    let width = 100.0 / n_bins as f64;
    Ok(groups
        .into_iter()
        .map(|(group, bins)| GroupCurve {
            group,
            bins: bins
                .into_iter()
                .enumerate()
                .map(|(i, ys)| summarize_bin((i as f64 + 0.5) * width, &ys))
                .collect(),
        })
        .collect())
}

fn summarize_bin(center: f64, ys: &[f64]) -> CurveBin {
    let count = ys.len();
    if count == 0 {
        return CurveBin {
            center,
            mean: None,
            stderr: None,
            count,
        };
    }
    let mean = ys.iter().sum::<f64>() / count as f64;
    let stderr = (count >= 2).then(|| {
        let var = ys.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        (var / count as f64).sqrt()
    });
    CurveBin {
        center,
        mean: Some(mean),
        stderr,
        count,
    }
}

/// Mean of the top bin minus mean of the bottom bin, when both are populated.
pub fn top_bottom_slope(bins: &[CurveBin]) -> Option<f64> {
    Some(bins.last()?.mean? - bins.first()?.mean?)
}
