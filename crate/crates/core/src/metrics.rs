//! Group disparity measures, per-group confusion matrices and AUC.
//!
//! Orientation is fixed throughout: "1" quantities refer to the protected
//! group and "2" quantities to the non-protected group, ratios are
//! protected / non-protected and differences are protected - non-protected.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Decision-by-group counts.
///
/// | group         | positive | negative | margin      |
/// |---------------|----------|----------|-------------|
/// | protected     | a        | b        | n1 = a + b  |
/// | non-protected | c        | d        | n2 = c + d  |
/// | margin        | m1       | m2       | n = n1 + n2 |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Result<Self> {
        let t = ContingencyTable { a, b, c, d };
        if t.n() == 0 {
            return Err(Error::Empty);
        }
        Ok(t)
    }

    pub fn n1(&self) -> u64 {
        self.a + self.b
    }

    pub fn n2(&self) -> u64 {
        self.c + self.d
    }

    pub fn m1(&self) -> u64 {
        self.a + self.c
    }

    pub fn m2(&self) -> u64 {
        self.b + self.d
    }

    pub fn n(&self) -> u64 {
        self.n1() + self.n2()
    }

    /// The same table with the group labels exchanged.
    pub fn swapped(&self) -> Self {
        ContingencyTable {
            a: self.c,
            b: self.d,
            c: self.a,
            d: self.b,
        }
    }

    /// Counts from row-aligned group and decision indicators.
    pub fn from_masks(protected: &[bool], positive: &[bool]) -> Result<Self> {
        if protected.len() != positive.len() {
            return Err(Error::Ragged(format!(
                "{} group labels vs {} decisions",
                protected.len(),
                positive.len()
            )));
        }
        let mut t = ContingencyTable {
            a: 0,
            b: 0,
            c: 0,
            d: 0,
        };
        for (&g, &y) in protected.iter().zip(positive) {
            match (g, y) {
                (true, true) => t.a += 1,
                (true, false) => t.b += 1,
                (false, true) => t.c += 1,
                (false, false) => t.d += 1,
            }
        }
        if t.n1() == 0 {
            return Err(Error::EmptyGroup("protected"));
        }
        if t.n2() == 0 {
            return Err(Error::EmptyGroup("non-protected"));
        }
        Ok(t)
    }
}

/// Contingency table of the dataset's sensitive and decision columns.
pub fn contingency(d: &Dataset) -> Result<ContingencyTable> {
    ContingencyTable::from_masks(&d.protected_mask(), &d.decision_positive()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub p1: f64,
    pub p2: f64,
    pub p: f64,
    /// Set when a zero cell forced the +0.5/+1 correction.
    pub corrected: bool,
}

/// Positive-decision rates per group.
///
/// When `a` or `c` is zero both group rates switch to the Haldane-Anscombe
/// form `(count + 0.5) / (size + 1)` and the result is flagged; the pooled
/// rate `p` is always the raw `m1 / n`.
pub fn base_rates(t: &ContingencyTable) -> Result<GroupRates> {
    if t.n1() == 0 {
        return Err(Error::EmptyGroup("protected"));
    }
    if t.n2() == 0 {
        return Err(Error::EmptyGroup("non-protected"));
    }
    let p = t.m1() as f64 / t.n() as f64;
    if t.a == 0 || t.c == 0 {
        Ok(GroupRates {
            p1: (t.a as f64 + 0.5) / (t.n1() as f64 + 1.0),
            p2: (t.c as f64 + 0.5) / (t.n2() as f64 + 1.0),
            p,
            corrected: true,
        })
    } else {
        Ok(GroupRates {
            p1: t.a as f64 / t.n1() as f64,
            p2: t.c as f64 / t.n2() as f64,
            p,
            corrected: false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub name: String,
    /// `None` when the statistic is undefined (zero denominator).
    pub estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub interval: Option<Interval>,
    pub corrected: bool,
}

impl MetricEstimate {
    pub fn new(name: &str, estimate: Option<f64>, corrected: bool) -> Self {
        MetricEstimate {
            name: name.to_string(),
            estimate,
            interval: None,
            corrected,
        }
    }

    pub fn with_interval(mut self, interval: Interval) -> Self {
        self.interval = Some(interval);
        self
    }

    pub fn value(&self) -> Result<f64> {
        self.estimate
            .ok_or_else(|| Error::DegenerateRates(format!("{} is undefined", self.name)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityMetrics {
    /// Risk difference `p1 - p2`.
    pub dr: MetricEstimate,
    /// Disparate impact (relative risk) `p1 / p2`.
    pub di: MetricEstimate,
    /// Relative chance `(1 - p1) / (1 - p2)`.
    pub cr: MetricEstimate,
    /// Odds ratio `DI / CR`.
    pub or: MetricEstimate,
}

pub fn disparity_metrics(r: &GroupRates) -> Result<DisparityMetrics> {
    if r.p2 <= 0.0 {
        return Err(Error::DegenerateRates("p2 = 0, disparate impact undefined".into()));
    }
    if r.p2 >= 1.0 {
        return Err(Error::DegenerateRates("p2 = 1, relative chance undefined".into()));
    }
    let di = r.p1 / r.p2;
    let cr = (1.0 - r.p1) / (1.0 - r.p2);
    if cr == 0.0 {
        return Err(Error::DegenerateRates("p1 = 1, odds ratio undefined".into()));
    }
    let m = |name, v| MetricEstimate::new(name, Some(v), r.corrected);
    Ok(DisparityMetrics {
        dr: m("risk_difference", r.p1 - r.p2),
        di: m("disparate_impact", di),
        cr: m("relative_chance", cr),
        or: m("odds_ratio", di / cr),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Four-fifths rule. Point mode fails iff `DI < threshold` (so `DI ==
/// threshold` passes). Interval mode fails iff the whole interval is below
/// the threshold, passes iff it lies entirely at or above it, and is
/// inconclusive otherwise.
pub fn eighty_percent_verdict(
    di: &MetricEstimate,
    threshold: f64,
    use_interval: bool,
) -> Result<Verdict> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::arg(format!("threshold {threshold} outside (0, 1]")));
    }
    if use_interval {
        let iv = di
            .interval
            .ok_or_else(|| Error::arg("interval verdict requested but no interval attached"))?;
        Ok(if iv.hi < threshold {
            Verdict::Fail
        } else if iv.lo >= threshold {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        })
    } else if di.value()? < threshold {
        Ok(Verdict::Fail)
    } else {
        Ok(Verdict::Pass)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Confusion { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn tpr(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn fpr(&self) -> Option<f64> {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn fnr(&self) -> Option<f64> {
        ratio(self.fn_, self.tp + self.fn_)
    }

    pub fn ppv(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    /// Outcome prevalence `(TP + FN) / total`.
    pub fn base_rate(&self) -> Option<f64> {
        ratio(self.tp + self.fn_, self.total())
    }

    fn record(&mut self, decision: bool, outcome: bool) {
        match (decision, outcome) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionPair {
    pub protected: Confusion,
    pub non_protected: Confusion,
}

impl ConfusionPair {
    pub fn from_masks(protected: &[bool], decision: &[bool], outcome: &[bool]) -> Result<Self> {
        if protected.len() != decision.len() || decision.len() != outcome.len() {
            return Err(Error::Ragged("group, decision and outcome lengths differ".into()));
        }
        let mut pair = ConfusionPair {
            protected: Confusion::default(),
            non_protected: Confusion::default(),
        };
        for ((&g, &y), &o) in protected.iter().zip(decision).zip(outcome) {
            if g {
                pair.protected.record(y, o);
            } else {
                pair.non_protected.record(y, o);
            }
        }
        if pair.protected.total() == 0 {
            return Err(Error::EmptyGroup("protected"));
        }
        if pair.non_protected.total() == 0 {
            return Err(Error::EmptyGroup("non-protected"));
        }
        Ok(pair)
    }
}

/// Per-group confusion matrices of decisions against outcomes.
pub fn group_confusion(d: &Dataset) -> Result<ConfusionPair> {
    ConfusionPair::from_masks(
        &d.protected_mask(),
        &d.decision_positive()?,
        &d.outcome_positive()?,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionGaps {
    /// Equal opportunity: `TPR_protected / TPR_non_protected`.
    pub tpr_ratio: MetricEstimate,
    /// Conditional precision: `PPV_protected / PPV_non_protected`.
    pub ppv_ratio: MetricEstimate,
    pub fpr_difference: MetricEstimate,
    pub fnr_difference: MetricEstimate,
    pub accuracy_difference: MetricEstimate,
    /// TPR and PPV differences, for readers who prefer additive gaps.
    pub tpr_difference: MetricEstimate,
    pub ppv_difference: MetricEstimate,
}

pub fn confusion_gaps(gc: &ConfusionPair) -> ConfusionGaps {
    let (p, q) = (&gc.protected, &gc.non_protected);
    let rate_ratio = |name, f: fn(&Confusion) -> Option<f64>| {
        let v = match (f(p), f(q)) {
            (Some(x), Some(y)) if y > 0.0 => Some(x / y),
            _ => None,
        };
        MetricEstimate::new(name, v, false)
    };
    let rate_diff = |name, f: fn(&Confusion) -> Option<f64>| {
        let v = f(p).zip(f(q)).map(|(x, y)| x - y);
        MetricEstimate::new(name, v, false)
    };
    ConfusionGaps {
        tpr_ratio: rate_ratio("equal_opportunity_ratio", Confusion::tpr),
        ppv_ratio: rate_ratio("conditional_precision_ratio", Confusion::ppv),
        fpr_difference: rate_diff("fpr_difference", Confusion::fpr),
        fnr_difference: rate_diff("fnr_difference", Confusion::fnr),
        accuracy_difference: rate_diff("accuracy_difference", Confusion::accuracy),
        tpr_difference: rate_diff("tpr_difference", Confusion::tpr),
        ppv_difference: rate_diff("ppv_difference", Confusion::ppv),
    }
}

/// False-positive rate implied by base rate, PPV and TPR:
/// `FPR = p / (1 - p) * (1 - PPV) / PPV * TPR`.
pub fn implied_fpr(base_rate: f64, ppv: f64, tpr: f64) -> f64 {
    base_rate / (1.0 - base_rate) * (1.0 - ppv) / ppv * tpr
}

/// `FPR - implied_fpr(p, PPV, TPR)` for one group; zero up to rounding for
/// any actual confusion matrix. Equal PPV across groups with different base
/// rates therefore forces different false-positive rates.
pub fn impossibility_residual(g: &Confusion) -> Result<f64> {
    let undefined = |what: &str| Error::DegenerateRates(format!("{what} undefined"));
    let p = g.base_rate().ok_or_else(|| undefined("base rate"))?;
    let ppv = g.ppv().ok_or_else(|| undefined("PPV"))?;
    let tpr = g.tpr().ok_or_else(|| undefined("TPR"))?;
    let fpr = g.fpr().ok_or_else(|| undefined("FPR"))?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DegenerateRates(format!("base rate {p} not in (0, 1)")));
    }
    if !(ppv > 0.0 && ppv < 1.0) {
        return Err(Error::DegenerateRates(format!("PPV {ppv} not in (0, 1)")));
    }
    Ok(fpr - implied_fpr(p, ppv, tpr))
}

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties
/// counting one half. Runs in O(n log n) and is exact: the pair count is
/// accumulated in half-units as an integer.
pub fn auc(scores: &[f64], outcomes: &[bool]) -> Result<MetricEstimate> {
    if scores.len() != outcomes.len() {
        return Err(Error::Ragged(format!(
            "{} scores vs {} outcomes",
            scores.len(),
            outcomes.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::arg("scores contain NaN"));
    }
    let n_pos = outcomes.iter().filter(|&&o| o).count() as u64;
    let n_neg = outcomes.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InsufficientData(
            "AUC needs at least one positive and one negative outcome".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let mut twice_u: u128 = 0;
    let mut neg_below: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        // -0.0 and 0.0 tie
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let pos = order[start..end].iter().filter(|&&i| outcomes[i]).count() as u64;
        let neg = (end - start) as u64 - pos;
        twice_u += 2 * pos as u128 * neg_below as u128 + pos as u128 * neg as u128;
        neg_below += neg;
        start = end;
    }
    let value = twice_u as f64 / (2 * n_pos as u128 * n_neg as u128) as f64;
    Ok(MetricEstimate::new("auc", Some(value), false))
}
