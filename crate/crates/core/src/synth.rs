//! Synthetic biased data with a known disparate impact.
//!
//! Each row draws its group (protected with probability `protected_fraction`),
//! two unit-variance normal features centred on the group mean, a decision
//! `Bernoulli(logistic(w.x + b + bias * [protected]))` and an outcome
//! `Bernoulli(logistic(v.x + offset_group))`. Given the group, the decision
//! logit is normal, so the group's positive rate is a one-dimensional
//! logistic-normal integral; the true DI is the ratio of the two.

use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnRole, Dataset};
use crate::error::{Error, Result};
use crate::metrics::ContingencyTable;
use crate::rng::CounterRng;
use crate::stats::{logistic, logistic_normal_mean};

pub const PROTECTED_LABEL: &str = "0";
pub const NON_PROTECTED_LABEL: &str = "1";
pub const POSITIVE_LABEL: &str = "1";
pub const NEGATIVE_LABEL: &str = "0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    pub protected_fraction: f64,
    pub mean_protected: [f64; 2],
    pub mean_non_protected: [f64; 2],
    pub decision_weights: [f64; 2],
    pub decision_intercept: f64,
    /// Added to the decision logit of protected rows.
    pub sensitive_bias: f64,
    pub outcome_weights: [f64; 2],
    pub outcome_offset_protected: f64,
    pub outcome_offset_non_protected: f64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    /// `x1` drives the decision; `x2` does not enter it but separates the
    /// groups, so it acts as a proxy for the sensitive attribute.
    fn default() -> Self {
        GeneratorSpec {
            n: 2000,
            protected_fraction: 0.5,
            mean_protected: [0.0, -4.0],
            mean_non_protected: [0.0, 4.0],
            decision_weights: [5.0, 0.0],
            decision_intercept: 3.0,
            sensitive_bias: 0.0,
            outcome_weights: [1.5, 0.0],
            outcome_offset_protected: 0.0,
            outcome_offset_non_protected: 0.0,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::arg("generator needs n >= 1"));
        }
        if !(self.protected_fraction > 0.0 && self.protected_fraction < 1.0) {
            return Err(Error::arg(format!(
                "protected fraction {} outside (0, 1)",
                self.protected_fraction
            )));
        }
        let finite = self
            .mean_protected
            .iter()
            .chain(&self.mean_non_protected)
            .chain(&self.decision_weights)
            .chain(&self.outcome_weights)
            .chain(&[
                self.decision_intercept,
                self.sensitive_bias,
                self.outcome_offset_protected,
                self.outcome_offset_non_protected,
            ])
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::arg("generator parameters must be finite"));
        }
        Ok(())
    }

    fn logit_mean(&self, protected: bool) -> f64 {
        let mu = if protected {
            self.mean_protected
        } else {
            self.mean_non_protected
        };
        let w = self.decision_weights;
        let bias = if protected { self.sensitive_bias } else { 0.0 };
        w[0] * mu[0] + w[1] * mu[1] + self.decision_intercept + bias
    }

    fn logit_sd(&self) -> f64 {
        self.decision_weights[0].hypot(self.decision_weights[1])
    }

    /// True positive-decision rate `P(Y = 1 | group)`.
    pub fn true_rate(&self, protected: bool) -> f64 {
        logistic_normal_mean(self.logit_mean(protected), self.logit_sd())
    }

    /// `P(Y = 1 | protected) / P(Y = 1 | non-protected)`.
    pub fn true_di(&self) -> f64 {
        self.true_rate(true) / self.true_rate(false)
    }

    /// Copy whose `sensitive_bias` is solved by bisection so that the true
    /// DI equals `target`.
    pub fn with_target_di(&self, target: f64) -> Result<GeneratorSpec> {
        if !(target > 0.0 && target.is_finite()) {
            return Err(Error::arg(format!("target DI {target} must be positive")));
        }
        let at = |bias: f64| {
            let mut s = self.clone();
            s.sensitive_bias = bias;
            s.true_di() - target
        };
        let (mut lo, mut hi) = (-60.0, 60.0);
        if at(lo) > 0.0 || at(hi) < 0.0 {
            return Err(Error::arg(format!("target DI {target} is out of reach for this spec")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        let mut s = self.clone();
        s.sensitive_bias = 0.5 * (lo + hi);
        Ok(s)
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub true_di: f64,
    pub true_rate_protected: f64,
    pub true_rate_non_protected: f64,
}

/// Column roles of generated data.
pub fn schema() -> crate::data::Schema {
    crate::data::Schema::new()
        .with("x1", ColumnRole::Numeric)
        .with("x2", ColumnRole::Numeric)
        .with("s", ColumnRole::Sensitive { protected: PROTECTED_LABEL.into() })
        .with("decision", ColumnRole::Decision { positive: POSITIVE_LABEL.into() })
        .with("outcome", ColumnRole::Outcome { positive: POSITIVE_LABEL.into() })
}

pub fn generate(spec: &GeneratorSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = CounterRng::new(spec.seed);
    let n = spec.n;
    let (mut x1, mut x2) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut s, mut y, mut o) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let label = |b: bool| if b { POSITIVE_LABEL } else { NEGATIVE_LABEL };
    for _ in 0..n {
        let protected = rng.next_f64() < spec.protected_fraction;
        let mu = if protected {
            spec.mean_protected
        } else {
            spec.mean_non_protected
        };
        let a = mu[0] + rng.next_normal();
        let b = mu[1] + rng.next_normal();
        let w = spec.decision_weights;
        let bias = if protected { spec.sensitive_bias } else { 0.0 };
        let decision = rng.next_f64() < logistic(w[0] * a + w[1] * b + spec.decision_intercept + bias);
        let v = spec.outcome_weights;
        let offset = if protected {
            spec.outcome_offset_protected
        } else {
            spec.outcome_offset_non_protected
        };
        let outcome = rng.next_f64() < logistic(v[0] * a + v[1] * b + offset);
        x1.push(a);
        x2.push(b);
        s.push(if protected { PROTECTED_LABEL } else { NON_PROTECTED_LABEL });
        y.push(label(decision));
        o.push(label(outcome));
    }
    let schema = schema();
    let role = |name: &str| schema.role(name).unwrap().clone();
    let dataset = Dataset::new(vec![
        Column::reals("x1", x1),
        Column::reals("x2", x2),
        Column::text("s", role("s"), s),
        Column::text("decision", role("decision"), y),
        Column::text("outcome", role("outcome"), o),
    ])?;
    let (rp, rn) = (spec.true_rate(true), spec.true_rate(false));
    Ok(Synthetic {
        dataset,
        true_di: rp / rn,
        true_rate_protected: rp,
        true_rate_non_protected: rn,
    })
}

/// Dataset realising exactly the counts of `t`: a numeric `row` index, the
/// sensitive column `s` and the decision column `y`.
pub fn table_dataset(t: &ContingencyTable) -> Dataset {
    let mut s = Vec::new();
    let mut y = Vec::new();
    for (group, decision, count) in [
        (PROTECTED_LABEL, POSITIVE_LABEL, t.a),
        (PROTECTED_LABEL, NEGATIVE_LABEL, t.b),
        (NON_PROTECTED_LABEL, POSITIVE_LABEL, t.c),
        (NON_PROTECTED_LABEL, NEGATIVE_LABEL, t.d),
    ] {
        for _ in 0..count {
            s.push(group);
            y.push(decision);
        }
    }
    Dataset::new(vec![
        Column::reals("row", (0..s.len()).map(|i| i as f64)),
        Column::text("s", ColumnRole::Sensitive { protected: PROTECTED_LABEL.into() }, s),
        Column::text("y", ColumnRole::Decision { positive: POSITIVE_LABEL.into() }, y),
    ])
    .expect("table with n >= 1")
}
