//! Individual-level probes: the sensitive-attribute flip test and the
//! mean-shift stress test.
//!
//! The flip test swaps only the sensitive column. Features correlated with
//! it are left as they are, so a model that reads a proxy instead of the
//! sensitive attribute itself can discriminate without flipping anyone.

use serde::{Deserialize, Serialize};

use crate::data::{ColumnRole, Dataset, Values};
use crate::error::{Error, Result};
use crate::metrics::{base_rates, disparity_metrics, ContingencyTable, DisparityMetrics};
use crate::model::{check_threshold, decide, decisions, ScoringModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipTestResult {
    pub total: usize,
    pub threshold: f64,
    /// Negative decisions that become positive once the sensitive modality
    /// is swapped.
    pub to_positive: usize,
    pub to_negative: usize,
    pub to_positive_rows: Vec<usize>,
    pub to_negative_rows: Vec<usize>,
    pub flip_rate: f64,
    /// The model does not read the sensitive column, so nothing can flip.
    pub vacuous: bool,
}

pub fn flip_test(m: &dyn ScoringModel, d: &Dataset, threshold: f64) -> Result<FlipTestResult> {
    check_threshold(threshold)?;
    let n = d.n_rows();
    let mut out = FlipTestResult {
        total: n,
        threshold,
        to_positive: 0,
        to_negative: 0,
        to_positive_rows: vec![],
        to_negative_rows: vec![],
        flip_rate: 0.0,
        vacuous: !m.uses_sensitive(d),
    };
    if out.vacuous {
        return Ok(out);
    }
    let before = m.scores(d)?;
    let after = m.scores(&d.with_swapped_sensitive()?)?;
    for (i, (b, a)) in before.iter().zip(&after).enumerate() {
        match (decide(*b, threshold), decide(*a, threshold)) {
            (false, true) => out.to_positive_rows.push(i),
            (true, false) => out.to_negative_rows.push(i),
            _ => {}
        }
    }
    out.to_positive = out.to_positive_rows.len();
    out.to_negative = out.to_negative_rows.len();
    out.flip_rate = (out.to_positive + out.to_negative) as f64 / n as f64;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftResponse {
    pub feature: String,
    pub delta: f64,
    pub baseline_rate: f64,
    pub shifted_rate: f64,
    pub response: f64,
}

fn positive_rate(m: &dyn ScoringModel, d: &Dataset, threshold: f64) -> Result<f64> {
    let s = m.scores(d)?;
    Ok(decisions(&s, threshold).iter().filter(|&&b| b).count() as f64 / s.len() as f64)
}

/// Positive-decision rate after adding `delta` to `feature` on every row.
pub fn stress_shift(
    m: &dyn ScoringModel,
    d: &Dataset,
    feature: &str,
    delta: f64,
    threshold: f64,
) -> Result<ShiftResponse> {
    check_threshold(threshold)?;
    if !delta.is_finite() {
        return Err(Error::arg("shift must be finite"));
    }
    let col = d.column(feature)?;
    if *col.role() != ColumnRole::Numeric {
        return Err(Error::WrongRole {
            column: feature.to_string(),
            role: col.role().kind().into(),
            expected: "numeric",
        });
    }
    if !m.input_columns().iter().any(|c| c == feature) {
        return Err(Error::EncodingMismatch(format!("the model does not read '{feature}'")));
    }
    let shifted: Vec<Option<f64>> = d.numeric(feature)?.iter().map(|x| x.map(|x| x + delta)).collect();
    let baseline_rate = positive_rate(m, d, threshold)?;
    let shifted_rate = positive_rate(m, &d.with_values(feature, Values::Numeric(shifted))?, threshold)?;
    Ok(ShiftResponse {
        feature: feature.to_string(),
        delta,
        baseline_rate,
        shifted_rate,
        response: shifted_rate - baseline_rate,
    })
}

/// Disparity of the model's own thresholded decisions on `d`.
pub fn model_disparity(
    m: &dyn ScoringModel,
    d: &Dataset,
    threshold: f64,
) -> Result<(ContingencyTable, DisparityMetrics)> {
    check_threshold(threshold)?;
    let dec = decisions(&m.scores(d)?, threshold);
    let t = ContingencyTable::from_masks(&d.protected_mask(), &dec)?;
    let metrics = disparity_metrics(&base_rates(&t)?)?;
    Ok((t, metrics))
}
