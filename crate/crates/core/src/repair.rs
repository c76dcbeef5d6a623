//! Geometric repair of numeric features.
//!
//! Each feature's protected and non-protected samples define empirical
//! quantile functions `Q_P`, `Q_N` (linear interpolation between order
//! statistics, position `u * (n - 1)`). The target is their size-weighted
//! average `Q_T`, the one-dimensional Wasserstein barycenter. A value `x` of
//! group `g` is ranked under `Q_g` (ties at mid-rank) and moved to
//! `x + lambda * (Q_T(u) - x)`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnRole, Dataset, Values};
use crate::error::{Error, Result};

/// Sorted sample defining a piecewise-linear empirical quantile function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuantileMap {
    values: Vec<f64>,
}

impl QuantileMap {
    /// Needs at least two finite values.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a quantile map needs at least 2 values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::arg("quantile map values must be finite"));
        }
        values.sort_by(f64::total_cmp);
        Ok(QuantileMap { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Q(u)` for `u` in `[0, 1]` (clamped).
    pub fn quantile(&self, u: f64) -> f64 {
        let v = &self.values;
        let pos = u.clamp(0.0, 1.0) * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        if lo + 1 >= v.len() {
            return v[v.len() - 1];
        }
        let frac = pos - lo as f64;
        if frac == 0.0 {
            v[lo]
        } else {
            v[lo] + frac * (v[lo + 1] - v[lo])
        }
    }

    /// Inverse of [`quantile`](Self::quantile): the `u` with `Q(u) = x`,
    /// taking the middle of a run of tied order statistics. Values outside
    /// the sample range clamp to 0 or 1; the flag reports clamping.
    pub fn rank(&self, x: f64) -> (f64, bool) {
        let v = &self.values;
        let last = (v.len() - 1) as f64;
        if x < v[0] {
            return (0.0, true);
        }
        if x > v[v.len() - 1] {
            return (1.0, true);
        }
        let lo = v.partition_point(|&y| y < x);
        let hi = v.partition_point(|&y| y <= x);
        let pos = if hi > lo {
            (lo + hi - 1) as f64 / 2.0
        } else {
            let (a, b) = (v[lo - 1], v[lo]);
            (lo - 1) as f64 + (x - a) / (b - a)
        };
        (pos / last, false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePlan {
    pub feature: String,
    pub protected: QuantileMap,
    pub non_protected: QuantileMap,
}

impl FeaturePlan {
    pub fn n_protected(&self) -> usize {
        self.protected.len()
    }

    pub fn n_non_protected(&self) -> usize {
        self.non_protected.len()
    }

    /// Barycentric target `Q_T(u)`.
    pub fn target(&self, u: f64) -> f64 {
        let (n1, n2) = (self.n_protected() as f64, self.n_non_protected() as f64);
        (n1 * self.protected.quantile(u) + n2 * self.non_protected.quantile(u)) / (n1 + n2)
    }

    /// Repaired value of `x` from the given group.
    pub fn transport(&self, x: f64, protected: bool, lambda: f64) -> (f64, bool) {
        let map = if protected {
            &self.protected
        } else {
            &self.non_protected
        };
        let (u, clamped) = map.rank(x);
        if lambda == 0.0 {
            return (x, clamped);
        }
        (x + lambda * (self.target(u) - x), clamped)
    }
}

/// Fitted repair, serializable for fit-once/apply-many use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairPlan {
    pub sensitive: String,
    pub protected: String,
    pub features: Vec<FeaturePlan>,
}

impl RepairPlan {
    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.feature.as_str()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Fits group quantile maps for each listed feature. Categorical features
/// are skipped with a warning.
pub fn fit_repair(d: &Dataset, features: &[&str]) -> Result<RepairPlan> {
    let mask = d.protected_mask();
    let mut plans = Vec::with_capacity(features.len());
    for &name in features {
        let col = d.column(name)?;
        if *col.role() == ColumnRole::Categorical {
            warn!("categorical feature '{name}' is not repaired");
            continue;
        }
        let values = d.numeric(name)?;
        let (mut p, mut q) = (Vec::new(), Vec::new());
        for (x, &prot) in values.iter().zip(&mask) {
            if let Some(x) = *x {
                if prot {
                    p.push(x);
                } else {
                    q.push(x);
                }
            }
        }
        let map = |v: Vec<f64>, group: &str| {
            QuantileMap::new(v).map_err(|_| {
                Error::InsufficientData(format!(
                    "feature '{name}' needs at least 2 non-missing {group} values"
                ))
            })
        };
        plans.push(FeaturePlan {
            feature: name.to_string(),
            protected: map(p, "protected")?,
            non_protected: map(q, "non-protected")?,
        });
    }
    Ok(RepairPlan {
        sensitive: d.sensitive().name().to_string(),
        protected: d.protected_modality().to_string(),
        features: plans,
    })
}

#[derive(Debug, Clone)]
pub struct Repaired {
    pub dataset: Dataset,
    /// Per feature, values outside the fit-time support whose rank was
    /// clamped.
    pub clamped: Vec<(String, usize)>,
}

/// Applies `plan` with repair amount `lambda` in `[0, 1]`. Missing values
/// stay missing; other columns are untouched.
pub fn apply_repair(plan: &RepairPlan, d: &Dataset, lambda: f64) -> Result<Repaired> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::arg(format!("lambda {lambda} outside [0, 1]")));
    }
    if d.sensitive().name() != plan.sensitive || d.protected_modality() != plan.protected {
        return Err(Error::EncodingMismatch(format!(
            "plan was fitted with sensitive column '{}' (protected '{}')",
            plan.sensitive, plan.protected
        )));
    }
    let mask = d.protected_mask();
    let mut out = d.clone();
    let mut clamped = Vec::with_capacity(plan.features.len());
    for f in &plan.features {
        let values = d.numeric(&f.feature)?;
        let mut count = 0;
        let repaired = values
            .iter()
            .zip(&mask)
            .map(|(x, &prot)| {
                x.map(|x| {
                    let (y, c) = f.transport(x, prot, lambda);
                    count += c as usize;
                    y
                })
            })
            .collect();
        out = out.with_values(&f.feature, Values::Numeric(repaired))?;
        clamped.push((f.feature.clone(), count));
    }
    Ok(Repaired {
        dataset: out,
        clamped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    /// Mean absolute displacement per feature.
    pub features: Vec<(String, f64)>,
    pub overall: f64,
}

pub fn repair_distortion(original: &Dataset, repaired: &Dataset, features: &[&str]) -> Result<Distortion> {
    if original.n_rows() != repaired.n_rows() {
        return Err(Error::arg(format!(
            "row counts differ: {} vs {}",
            original.n_rows(),
            repaired.n_rows()
        )));
    }
    let mut out = Vec::with_capacity(features.len());
    for &name in features {
        let (a, b) = (original.numeric(name)?, repaired.numeric(name)?);
        let (mut sum, mut k) = (0.0, 0usize);
        for (x, y) in a.iter().zip(b) {
            match (x, y) {
                (Some(x), Some(y)) => {
                    sum += (y - x).abs();
                    k += 1;
                }
                (None, None) => {}
                _ => {
                    return Err(Error::arg(format!(
                        "feature '{name}' has different missing cells in the two datasets"
                    )))
                }
            }
        }
        out.push((name.to_string(), if k == 0 { 0.0 } else { sum / k as f64 }));
    }
    let overall = if out.is_empty() {
        0.0
    } else {
        out.iter().map(|(_, v)| v).sum::<f64>() / out.len() as f64
    };
    Ok(Distortion {
        features: out,
        overall,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut best) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}
