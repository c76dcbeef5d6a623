//! Permutation importance and local linear surrogates.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Values};
use crate::error::{Error, Result};
use crate::model::{misclassification, ScoringModel};
use crate::rng::{sub_seed, CounterRng};
use crate::stats::{mean, sample_std_dev, std_dev};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    /// Baseline accuracy minus mean accuracy with the column permuted.
    pub importance: f64,
    /// Spread of the decrease across repeats (0 for one repeat).
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationImportance {
    pub baseline_accuracy: f64,
    pub threshold: f64,
    pub repeats: usize,
    pub seed: u64,
    pub features: Vec<FeatureImportance>,
}

/// Mean decrease in accuracy for every feature column and the sensitive
/// column. Feature `j`, repeat `r` is shuffled with
/// `CounterRng::derived(sub_seed(seed, j), r)`.
pub fn permutation_importance(
    m: &dyn ScoringModel,
    d: &Dataset,
    threshold: f64,
    repeats: usize,
    seed: u64,
) -> Result<PermutationImportance> {
    if repeats == 0 {
        return Err(Error::arg("permutation importance needs at least one repeat"));
    }
    let baseline = 1.0 - misclassification(m, d, threshold)?;
    let mut names: Vec<&str> = d.feature_names();
    names.push(d.sensitive().name());
    let n = d.n_rows();
    let features = names
        .par_iter()
        .enumerate()
        .map(|(j, &name)| {
            let values = d.column(name)?.values();
            let drops = (0..repeats)
                .map(|r| {
                    let mut perm: Vec<usize> = (0..n).collect();
                    CounterRng::derived(sub_seed(seed, j as u64), r as u64).shuffle(&mut perm);
                    let shuffled = d.with_values(name, values.take(&perm))?;
                    Ok(baseline - (1.0 - misclassification(m, &shuffled, threshold)?))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(FeatureImportance {
                feature: name.to_string(),
                importance: mean(&drops),
                sd: if repeats > 1 { sample_std_dev(&drops) } else { 0.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PermutationImportance {
        baseline_accuracy: baseline,
        threshold,
        repeats,
        seed,
        features,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSurrogate {
    pub row: usize,
    /// Numeric feature values of the probed row (missing values imputed by
    /// the column mean).
    pub instance: Vec<(String, f64)>,
    pub instance_score: f64,
    /// Surrogate `score ~ intercept + sum(coef * x)` in feature units.
    pub intercept: f64,
    pub coefficients: Vec<(String, f64)>,
    /// In standardized units.
    pub kernel_width: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub r_squared: f64,
    /// The normal equations needed a ridge term.
    pub regularized: bool,
}

pub fn default_kernel_width(n_numeric: usize) -> f64 {
    0.75 * (n_numeric as f64).sqrt()
}

/// Weighted least-squares fit of the model's score around `row`.
/// Perturbations are Gaussian with each feature's dataset standard
/// deviation; weights are `exp(-dist^2 / width^2)` on the standardized
/// distance. Features with zero spread are held fixed and get coefficient 0.
pub fn local_surrogate(
    m: &dyn ScoringModel,
    d: &Dataset,
    row: usize,
    n_samples: usize,
    kernel_width: Option<f64>,
    seed: u64,
) -> Result<LocalSurrogate> {
    if row >= d.n_rows() {
        return Err(Error::arg(format!("row {row} out of range ({} rows)", d.n_rows())));
    }
    let names: Vec<&str> = d.numeric_feature_names();
    let k = names.len();
    if k == 0 {
        return Err(Error::arg("local surrogate needs at least one numeric feature"));
    }
    if n_samples < 10 * k {
        return Err(Error::arg(format!(
            "{n_samples} perturbations for {k} numeric features; need at least {}",
            10 * k
        )));
    }
    let width = kernel_width.unwrap_or_else(|| default_kernel_width(k));
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::arg(format!("kernel width {width} must be positive")));
    }

    let mut x0 = Vec::with_capacity(k);
    let mut sd = Vec::with_capacity(k);
    for &name in &names {
        let xs: Vec<f64> = d.numeric(name)?.iter().flatten().copied().collect();
        if xs.is_empty() {
            return Err(Error::InsufficientData(format!("numeric feature '{name}' is entirely missing")));
        }
        x0.push(d.numeric(name)?[row].unwrap_or_else(|| mean(&xs)));
        sd.push(std_dev(&xs));
    }
    let active: Vec<usize> = (0..k).filter(|&j| sd[j] > 0.0).collect();

    let mut rng = CounterRng::new(seed);
    let eps: Vec<Vec<f64>> = (0..n_samples)
        .map(|_| active.iter().map(|_| rng.next_normal()).collect())
        .collect();
    let mut probe = d.take(&vec![row; n_samples]);
    for (a, &j) in active.iter().enumerate() {
        let v = eps.iter().map(|e| Some(x0[j] + sd[j] * e[a])).collect();
        probe = probe.with_values(names[j], Values::Numeric(v))?;
    }
    let y = m.scores(&probe)?;
    let instance_score = m.scores(&d.take(&[row]))?[0];
    let w: Vec<f64> = eps
        .iter()
        .map(|e| (-e.iter().map(|z| z * z).sum::<f64>() / (width * width)).exp())
        .collect();

    let p = active.len() + 1;
    let design = DMatrix::from_fn(n_samples, p, |i, c| if c == 0 { 1.0 } else { eps[i][c - 1] });
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for i in 0..n_samples {
        let xi = design.row(i);
        for a in 0..p {
            rhs[a] += w[i] * xi[a] * y[i];
            for b in 0..p {
                gram[(a, b)] += w[i] * xi[a] * xi[b];
            }
        }
    }
    let mut regularized = false;
    let beta = match gram.clone().cholesky() {
        Some(c) => c.solve(&rhs),
        None => {
            warn!("singular normal equations in local surrogate; adding ridge 1e-8");
            regularized = true;
            let ridged = gram + DMatrix::<f64>::identity(p, p) * 1e-8;
            ridged
                .cholesky()
                .ok_or_else(|| Error::InsufficientData("surrogate normal equations are singular".into()))?
                .solve(&rhs)
        }
    };

    let wsum: f64 = w.iter().sum();
    let ybar = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / wsum;
    let fitted = &design * &beta;
    let ss_res: f64 = (0..n_samples).map(|i| w[i] * (y[i] - fitted[i]).powi(2)).sum();
    let ss_tot: f64 = (0..n_samples).map(|i| w[i] * (y[i] - ybar).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };

    let mut coef = vec![0.0; k];
    for (a, &j) in active.iter().enumerate() {
        coef[j] = beta[a + 1] / sd[j];
    }
    let intercept = beta[0] - coef.iter().zip(&x0).map(|(c, x)| c * x).sum::<f64>();
    Ok(LocalSurrogate {
        row,
        instance: names.iter().map(|s| s.to_string()).zip(x0).collect(),
        instance_score,
        intercept,
        coefficients: names.iter().map(|s| s.to_string()).zip(coef).collect(),
        kernel_width: width,
        n_samples,
        seed,
        r_squared,
        regularized,
    })
}
