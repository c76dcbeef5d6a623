//! Confidence intervals for ratio statistics.
//!
//! The primary route is the delta method on the log scale: for a ratio of
//! two independent proportions `p1 / p2` estimated from `n1` and `n2`
//! trials,
//!
//! ```text
//! se(log ratio) = sqrt((1 - p1) / (n1 p1) + (1 - p2) / (n2 p2))
//! interval      = exp(log ratio -/+ z_{(1+level)/2} se)
//! ```
//!
//! A group-stratified percentile bootstrap serves as the independent check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{base_rates, disparity_metrics, ConfusionPair, ContingencyTable, Interval};
use crate::rng::CounterRng;
use crate::stats::{normal_quantile, quantile_sorted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMethod {
    Delta,
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub statistic: String,
    pub method: IntervalMethod,
    pub level: f64,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    /// Bootstrap replicates on which the statistic was undefined.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub undefined_replicates: Option<usize>,
}

impl IntervalEstimate {
    pub fn interval(&self) -> Interval {
        Interval {
            lo: self.lo,
            hi: self.hi,
            level: self.level,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::arg(format!("confidence level {level} outside (0, 1)")))
    }
}

fn log_ratio_interval(
    name: &str,
    (p1, n1): (f64, u64),
    (p2, n2): (f64, u64),
    level: f64,
) -> Result<IntervalEstimate> {
    check_level(level)?;
    if n1 < 2 || n2 < 2 {
        return Err(Error::InsufficientData(format!(
            "{name}: group sizes {n1} and {n2}, need at least 2 each"
        )));
    }
    if !(p1 > 0.0 && p2 > 0.0 && p1 <= 1.0 && p2 <= 1.0) {
        return Err(Error::DegenerateRates(format!("{name}: rates {p1} and {p2}")));
    }
    let se = ((1.0 - p1) / (n1 as f64 * p1) + (1.0 - p2) / (n2 as f64 * p2)).sqrt();
    let z = normal_quantile(0.5 * (1.0 + level));
    let ratio = p1 / p2;
    let centre = ratio.ln();
    Ok(IntervalEstimate {
        statistic: name.to_string(),
        method: IntervalMethod::Delta,
        level,
        estimate: ratio,
        lo: (centre - z * se).exp(),
        hi: (centre + z * se).exp(),
        replicates: None,
        seed: None,
        undefined_replicates: None,
    })
}

/// Delta-method interval for disparate impact. Zero cells fall back to the
/// corrected rates of [`base_rates`].
pub fn di_ci_delta(t: &ContingencyTable, level: f64) -> Result<IntervalEstimate> {
    let r = base_rates(t)?;
    log_ratio_interval("disparate_impact", (r.p1, t.n1()), (r.p2, t.n2()), level)
}

/// Delta-method interval for the equal-opportunity ratio
/// `TPR_protected / TPR_non_protected`, computed on the outcome-positive rows.
pub fn eo_ci_delta(gc: &ConfusionPair, level: f64) -> Result<IntervalEstimate> {
    let (p, q) = (&gc.protected, &gc.non_protected);
    for (g, label) in [(p, "protected"), (q, "non-protected")] {
        if g.tp + g.fn_ < 2 {
            return Err(Error::InsufficientData(format!(
                "{label} group has {} outcome-positive rows, need at least 2",
                g.tp + g.fn_
            )));
        }
        if g.tp == 0 {
            return Err(Error::DegenerateRates(format!("{label} group has no true positives")));
        }
    }
    log_ratio_interval(
        "equal_opportunity_ratio",
        (p.tpr().unwrap(), p.tp + p.fn_),
        (q.tpr().unwrap(), q.tp + q.fn_),
        level,
    )
}

/// Evaluator of a statistic on a resample, given as row indices into the
/// bound dataset. `None` marks an undefined value.
pub type BoundStatistic = Box<dyn Fn(&[usize]) -> Option<f64> + Send + Sync>;

/// A named statistic over a dataset.
pub trait Statistic: Sync {
    fn name(&self) -> &str;

    /// Precomputes whatever the statistic needs from `d`.
    fn bind(&self, d: &Dataset) -> Result<BoundStatistic>;
}

/// Built-in group statistics over the audit columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupStatistic {
    /// Decision-rate ratio, with the zero-cell correction.
    DisparateImpact,
    RiskDifference,
    /// TPR ratio; undefined when a group has no outcome-positive rows or the
    /// non-protected TPR is zero.
    EqualOpportunity,
}

impl Statistic for GroupStatistic {
    fn name(&self) -> &str {
        match self {
            GroupStatistic::DisparateImpact => "disparate_impact",
            GroupStatistic::RiskDifference => "risk_difference",
            GroupStatistic::EqualOpportunity => "equal_opportunity_ratio",
        }
    }

    fn bind(&self, d: &Dataset) -> Result<BoundStatistic> {
        let group = d.protected_mask();
        let decision = d.decision_positive()?;
        let kind = *self;
        match kind {
            GroupStatistic::DisparateImpact | GroupStatistic::RiskDifference => {
                Ok(Box::new(move |rows: &[usize]| {
                    let g: Vec<bool> = rows.iter().map(|&i| group[i]).collect();
                    let y: Vec<bool> = rows.iter().map(|&i| decision[i]).collect();
                    let t = ContingencyTable::from_masks(&g, &y).ok()?;
                    let m = disparity_metrics(&base_rates(&t).ok()?).ok()?;
                    match kind {
                        GroupStatistic::DisparateImpact => m.di.estimate,
                        _ => m.dr.estimate,
                    }
                }))
            }
            GroupStatistic::EqualOpportunity => {
                let outcome = d.outcome_positive()?;
                Ok(Box::new(move |rows: &[usize]| {
                    let pick = |v: &[bool]| rows.iter().map(|&i| v[i]).collect::<Vec<_>>();
                    let pair =
                        ConfusionPair::from_masks(&pick(&group), &pick(&decision), &pick(&outcome))
                            .ok()?;
                    let (p, q) = (pair.protected.tpr()?, pair.non_protected.tpr()?);
                    (q > 0.0).then(|| p / q)
                }))
            }
        }
    }
}

/// Statistic from a plain function of a dataset. Each resample is
/// materialised, so this is slower than the built-ins.
pub struct FnStatistic<F> {
    name: String,
    f: F,
}

impl<F> FnStatistic<F>
where
    F: Fn(&Dataset) -> Option<f64> + Clone + Send + Sync + 'static,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnStatistic {
            name: name.into(),
            f,
        }
    }
}

impl<F> Statistic for FnStatistic<F>
where
    F: Fn(&Dataset) -> Option<f64> + Clone + Send + Sync + 'static,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn bind(&self, d: &Dataset) -> Result<BoundStatistic> {
        let d = d.clone();
        let f = self.f.clone();
        Ok(Box::new(move |rows: &[usize]| f(&d.take(rows))))
    }
}

/// Percentile bootstrap interval with resampling inside each sensitive
/// group, so both group sizes are preserved.
///
/// Replicate `i` draws from its own sub-stream of `seed`, which makes the
/// result independent of scheduling; replicates run in parallel. Fails if
/// the statistic is undefined on more than 10% of replicates; otherwise the
/// undefined ones are dropped and counted.
pub fn bootstrap_ci(
    statistic: &dyn Statistic,
    d: &Dataset,
    replicates: usize,
    seed: u64,
    level: f64,
) -> Result<IntervalEstimate> {
    check_level(level)?;
    if replicates < 100 {
        return Err(Error::arg(format!("{replicates} bootstrap replicates, need at least 100")));
    }
    let eval = statistic.bind(d)?;
    let all: Vec<usize> = (0..d.n_rows()).collect();
    let estimate = eval(&all).ok_or_else(|| {
        Error::DegenerateRates(format!("{} undefined on the full sample", statistic.name()))
    })?;
    let mask = d.protected_mask();
    let groups: Vec<Vec<usize>> = [true, false]
        .iter()
        .map(|&g| all.iter().copied().filter(|&i| mask[i] == g).collect::<Vec<_>>())
        .filter(|rows| !rows.is_empty())
        .collect();

    let draws: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = CounterRng::derived(seed, b as u64);
            let mut rows = Vec::with_capacity(all.len());
            for g in &groups {
                for _ in 0..g.len() {
                    rows.push(g[rng.below(g.len() as u64) as usize]);
                }
            }
            eval(&rows).filter(|v| v.is_finite())
        })
        .collect();

    let mut values: Vec<f64> = draws.iter().flatten().copied().collect();
    let failed = replicates - values.len();
    if failed * 10 > replicates {
        return Err(Error::UndefinedStatistic {
            failed,
            total: replicates,
            fraction: failed as f64 / replicates as f64,
        });
    }
    values.sort_by(f64::total_cmp);
    let alpha = 0.5 * (1.0 - level);
    Ok(IntervalEstimate {
        statistic: statistic.name().to_string(),
        method: IntervalMethod::Bootstrap,
        level,
        estimate,
        lo: quantile_sorted(&values, alpha),
        hi: quantile_sorted(&values, 1.0 - alpha),
        replicates: Some(replicates),
        seed: Some(seed),
        undefined_replicates: Some(failed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Confusion;
    use crate::synth::table_dataset;
    use approx::assert_abs_diff_eq;

    #[test]
    fn delta_interval_reference_table() {
        let t = ContingencyTable::new(40, 60, 60, 40).unwrap();
        let iv = di_ci_delta(&t, 0.95).unwrap();
        assert_abs_diff_eq!(iv.estimate, 2.0 / 3.0, epsilon = 1e-12);
        // independent evaluation of the closed form
        assert_abs_diff_eq!(iv.lo, 0.4995917594930339, epsilon = 1e-8);
        assert_abs_diff_eq!(iv.hi, 0.8896152428443762, epsilon = 1e-8);
        assert_abs_diff_eq!(iv.lo, 0.500, epsilon = 0.005);
        assert_abs_diff_eq!(iv.hi, 0.890, epsilon = 0.005);
    }

    #[test]
    fn delta_interval_symmetric_on_log_scale() {
        let t = ContingencyTable::new(30, 70, 30, 70).unwrap();
        let iv = di_ci_delta(&t, 0.95).unwrap();
        assert_abs_diff_eq!(iv.lo.ln(), -iv.hi.ln(), epsilon = 1e-12);
    }

    #[test]
    fn higher_level_contains_lower() {
        let t = ContingencyTable::new(40, 60, 60, 40).unwrap();
        let a = di_ci_delta(&t, 0.95).unwrap();
        let b = di_ci_delta(&t, 0.99).unwrap();
        assert!(b.lo < a.lo && b.hi > a.hi);
        assert_abs_diff_eq!(b.lo, 0.45629446766231413, epsilon = 1e-8);
    }

    #[test]
    fn delta_interval_errors() {
        let t = ContingencyTable::new(1, 0, 3, 4).unwrap();
        assert!(matches!(di_ci_delta(&t, 0.95), Err(Error::InsufficientData(_))));
        let t = ContingencyTable::new(40, 60, 60, 40).unwrap();
        assert!(di_ci_delta(&t, 1.0).is_err());
    }

    #[test]
    fn equal_opportunity_interval() {
        let same = ConfusionPair {
            protected: Confusion::new(20, 5, 30, 10),
            non_protected: Confusion::new(20, 5, 30, 10),
        };
        let iv = eo_ci_delta(&same, 0.95).unwrap();
        assert!(iv.contains(1.0));

        let pair = ConfusionPair {
            protected: Confusion::new(30, 10, 50, 30),
            non_protected: Confusion::new(48, 10, 50, 12),
        };
        let iv = eo_ci_delta(&pair, 0.95).unwrap();
        assert_abs_diff_eq!(iv.estimate, 0.625, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.lo, 0.47099864455859347, epsilon = 1e-8);
        assert_abs_diff_eq!(iv.hi, 0.8293548283266985, epsilon = 1e-8);

        let thin = ConfusionPair {
            protected: Confusion::new(1, 10, 50, 0),
            non_protected: Confusion::new(48, 10, 50, 12),
        };
        assert!(matches!(eo_ci_delta(&thin, 0.95), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn bootstrap_constant_statistic() {
        let d = table_dataset(&ContingencyTable::new(4, 6, 6, 4).unwrap());
        let s = FnStatistic::new("const", |_: &Dataset| Some(3.5));
        let iv = bootstrap_ci(&s, &d, 200, 1, 0.9).unwrap();
        assert_eq!((iv.lo, iv.hi, iv.estimate), (3.5, 3.5, 3.5));
    }

    #[test]
    fn bootstrap_is_deterministic_and_agrees_with_delta() {
        let t = ContingencyTable::new(40, 60, 60, 40).unwrap();
        let d = table_dataset(&t);
        let a = bootstrap_ci(&GroupStatistic::DisparateImpact, &d, 20_000, 1, 0.95).unwrap();
        let b = bootstrap_ci(&GroupStatistic::DisparateImpact, &d, 20_000, 1, 0.95).unwrap();
        assert_eq!(a.lo.to_bits(), b.lo.to_bits());
        assert_eq!(a.hi.to_bits(), b.hi.to_bits());
        let delta = di_ci_delta(&t, 0.95).unwrap();
        assert!((a.lo - delta.lo).abs() < 0.05, "{a:?} vs {delta:?}");
        assert!((a.hi - delta.hi).abs() < 0.05, "{a:?} vs {delta:?}");
    }

    #[test]
    fn bootstrap_equal_opportunity_agrees_with_delta() {
        // 60 outcome-positive rows per group: TP 30 vs 48
        let mut sens = Vec::new();
        let mut dec = Vec::new();
        let mut out = Vec::new();
        for (g, tp, fn_, fp, tn) in [("P", 30, 30, 10, 50), ("N", 48, 12, 10, 50)] {
            for (y, o, k) in [("1", "1", tp), ("0", "1", fn_), ("1", "0", fp), ("0", "0", tn)] {
                for _ in 0..k {
                    sens.push(g);
                    dec.push(y);
                    out.push(o);
                }
            }
        }
        use crate::data::{Column, ColumnRole};
        let d = Dataset::new(vec![
            Column::text("s", ColumnRole::Sensitive { protected: "P".into() }, sens),
            Column::text("y", ColumnRole::Decision { positive: "1".into() }, dec),
            Column::text("o", ColumnRole::Outcome { positive: "1".into() }, out),
        ])
        .unwrap();
        let delta = eo_ci_delta(&crate::metrics::group_confusion(&d).unwrap(), 0.95).unwrap();
        let boot = bootstrap_ci(&GroupStatistic::EqualOpportunity, &d, 20_000, 1, 0.95).unwrap();
        assert!((boot.lo - delta.lo).abs() < 0.05, "{boot:?} vs {delta:?}");
        assert!((boot.hi - delta.hi).abs() < 0.05, "{boot:?} vs {delta:?}");
    }

    #[test]
    fn bootstrap_rejects_mostly_undefined() {
        let d = table_dataset(&ContingencyTable::new(4, 6, 6, 4).unwrap());
        let s = FnStatistic::new("flaky", |d: &Dataset| {
            let first = d.numeric("row").ok()?[0]?;
            (first as usize).is_multiple_of(2).then_some(1.0)
        });
        let d = d
            .with_values("row", crate::data::Values::Numeric((0..20).map(|i| Some(f64::from(i))).collect()))
            .unwrap();
        match bootstrap_ci(&s, &d, 100, 3, 0.95) {
            Err(Error::UndefinedStatistic { fraction, .. }) => assert!(fraction > 0.1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(bootstrap_ci(&GroupStatistic::DisparateImpact, &d, 50, 1, 0.95).is_err());
    }
}
