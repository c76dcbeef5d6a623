//! Logistic regression baseline and error estimation.
//!
//! Features are encoded from a training dataset: numeric columns are
//! mean-imputed and standardized (constant columns dropped), categorical
//! columns are one-hot coded against their lexicographically first modality,
//! and the sensitive column, when included, becomes a 0/1 indicator equal to
//! 1 for non-protected rows. Training is full-batch gradient descent on the
//! mean log loss plus `(l2 / 2) * |w|^2` with the intercept unpenalized.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split, ColumnRole, Dataset};
use crate::error::{Error, Result};
use crate::rng::{sub_seed, CounterRng};
use crate::stats::{logistic, mean, sample_std_dev, softplus, std_dev};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[default]
    Decision,
    Outcome,
}

impl Target {
    pub fn labels(self, d: &Dataset) -> Result<Vec<bool>> {
        match self {
            Target::Decision => d.decision_positive(),
            Target::Outcome => d.outcome_positive(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncodedFeature {
    Numeric { name: String, mean: f64, sd: f64 },
    /// One indicator per non-reference modality.
    Categorical { name: String, modalities: Vec<String> },
    /// 1 for non-protected rows.
    Sensitive { name: String, protected: String },
}

impl EncodedFeature {
    pub fn column(&self) -> &str {
        match self {
            EncodedFeature::Numeric { name, .. }
            | EncodedFeature::Categorical { name, .. }
            | EncodedFeature::Sensitive { name, .. } => name,
        }
    }

    fn width(&self) -> usize {
        match self {
            EncodedFeature::Categorical { modalities, .. } => modalities.len().saturating_sub(1),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoding {
    pub features: Vec<EncodedFeature>,
}

impl FeatureEncoding {
    pub fn fit(d: &Dataset, include_sensitive: bool) -> Result<Self> {
        let mut features = Vec::new();
        for c in d.columns() {
            match c.role() {
                ColumnRole::Numeric => {
                    let xs: Vec<f64> = c.as_numeric().unwrap().iter().flatten().copied().collect();
                    if xs.is_empty() {
                        warn!("numeric column '{}' is entirely missing; dropped", c.name());
                        continue;
                    }
                    let (m, sd) = (mean(&xs), std_dev(&xs));
                    if sd.is_nan() || sd <= 0.0 {
                        warn!("numeric column '{}' is constant; dropped", c.name());
                        continue;
                    }
                    features.push(EncodedFeature::Numeric {
                        name: c.name().to_string(),
                        mean: m,
                        sd,
                    });
                }
                ColumnRole::Categorical => {
                    let modalities = c.modalities();
                    if modalities.len() < 2 {
                        warn!("categorical column '{}' has one modality; dropped", c.name());
                        continue;
                    }
                    features.push(EncodedFeature::Categorical {
                        name: c.name().to_string(),
                        modalities,
                    });
                }
                ColumnRole::Sensitive { protected } if include_sensitive => {
                    features.push(EncodedFeature::Sensitive {
                        name: c.name().to_string(),
                        protected: protected.clone(),
                    });
                }
                _ => {}
            }
        }
        Ok(FeatureEncoding { features })
    }

    pub fn dim(&self) -> usize {
        self.features.iter().map(EncodedFeature::width).sum()
    }

    /// Names of the encoded coordinates.
    pub fn coordinate_names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.dim());
        for f in &self.features {
            match f {
                EncodedFeature::Categorical { name, modalities } => {
                    out.extend(modalities[1..].iter().map(|m| format!("{name}={m}")))
                }
                _ => out.push(f.column().to_string()),
            }
        }
        out
    }

    /// Dataset columns the encoding reads.
    pub fn input_columns(&self) -> Vec<&str> {
        self.features.iter().map(EncodedFeature::column).collect()
    }

    pub fn uses_sensitive(&self) -> bool {
        self.features
            .iter()
            .any(|f| matches!(f, EncodedFeature::Sensitive { .. }))
    }

    /// Row-major design matrix, `n_rows * dim`.
    pub fn encode(&self, d: &Dataset) -> Result<Vec<f64>> {
        let (n, k) = (d.n_rows(), self.dim());
        let mut x = vec![0.0; n * k];
        let mut offset = 0;
        for f in &self.features {
            let col = d
                .column(f.column())
                .map_err(|_| Error::EncodingMismatch(format!("column '{}' is missing", f.column())))?;
            let wrong = |expected: &str| {
                Error::EncodingMismatch(format!(
                    "column '{}' has role {}, the model expects {expected}",
                    f.column(),
                    col.role().kind()
                ))
            };
            match f {
                EncodedFeature::Numeric { mean, sd, .. } => {
                    let v = col.as_numeric().ok_or_else(|| wrong("numeric"))?;
                    for (i, xi) in v.iter().enumerate() {
                        x[i * k + offset] = (xi.unwrap_or(*mean) - mean) / sd;
                    }
                }
                EncodedFeature::Categorical { modalities, name } => {
                    let v = col.as_text().ok_or_else(|| wrong("categorical"))?;
                    let mut unknown = 0usize;
                    for (i, xi) in v.iter().enumerate() {
                        match xi.as_deref().map(|m| modalities.iter().position(|r| r == m)) {
                            Some(Some(0)) => {}
                            Some(Some(j)) => x[i * k + offset + j - 1] = 1.0,
                            _ => unknown += 1,
                        }
                    }
                    if unknown > 0 {
                        warn!("{unknown} rows of '{name}' have an unknown or missing modality; coded as the reference");
                    }
                }
                EncodedFeature::Sensitive { protected, .. } => {
                    if !matches!(col.role(), ColumnRole::Sensitive { .. }) {
                        return Err(wrong("sensitive"));
                    }
                    let v = col.as_text().unwrap();
                    for (i, xi) in v.iter().enumerate() {
                        x[i * k + offset] = if xi.as_deref() == Some(protected.as_str()) { 0.0 } else { 1.0 };
                    }
                }
            }
            offset += f.width();
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
    pub target: Target,
    /// Standard deviation of the random initial weights; 0 starts from zero
    /// and makes the seed irrelevant.
    pub init_sd: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1.0,
            iterations: 5000,
            l2: 1e-3,
            target: Target::Decision,
            init_sd: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::arg("learning rate must be positive"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::arg("l2 strength must be non-negative"));
        }
        if !(self.init_sd >= 0.0 && self.init_sd.is_finite()) {
            return Err(Error::arg("init_sd must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub encoding: FeatureEncoding,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub config: TrainConfig,
    pub converged: bool,
    pub iterations_run: usize,
}

/// Anything that maps rows of a dataset to scores in `[0, 1]`.
pub trait ScoringModel: Sync {
    fn scores(&self, d: &Dataset) -> Result<Vec<f64>>;

    /// Dataset columns read by [`scores`](Self::scores).
    fn input_columns(&self) -> Vec<String>;

    fn target(&self) -> Target;

    fn uses_sensitive(&self, d: &Dataset) -> bool {
        let s = d.sensitive().name();
        self.input_columns().iter().any(|c| c == s)
    }
}

impl LogisticModel {
    pub fn linear_term(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
    }

    /// Score of one row of `d`.
    pub fn predict_score(&self, d: &Dataset, row: usize) -> Result<f64> {
        if row >= d.n_rows() {
            return Err(Error::arg(format!("row {row} out of range ({} rows)", d.n_rows())));
        }
        Ok(self.scores(&d.take(&[row]))?[0])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: LogisticModel = serde_json::from_str(text)?;
        if m.weights.len() != m.encoding.dim() {
            return Err(Error::EncodingMismatch(format!(
                "{} weights for an encoding of dimension {}",
                m.weights.len(),
                m.encoding.dim()
            )));
        }
        if m.weights.iter().chain([&m.intercept]).any(|w| !w.is_finite()) {
            return Err(Error::arg("model weights must be finite"));
        }
        Ok(m)
    }
}

impl ScoringModel for LogisticModel {
    fn scores(&self, d: &Dataset) -> Result<Vec<f64>> {
        let k = self.encoding.dim();
        let x = self.encoding.encode(d)?;
        if k == 0 {
            return Ok(vec![logistic(self.intercept); d.n_rows()]);
        }
        Ok(x.chunks(k).map(|r| logistic(self.linear_term(r))).collect())
    }

    fn input_columns(&self) -> Vec<String> {
        self.encoding.input_columns().into_iter().map(String::from).collect()
    }

    fn target(&self) -> Target {
        self.config.target
    }
}

/// A score supplied as a numeric column of the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreColumn {
    pub column: String,
    pub target: Target,
}

impl ScoringModel for ScoreColumn {
    fn scores(&self, d: &Dataset) -> Result<Vec<f64>> {
        let v = d.numeric(&self.column)?;
        v.iter()
            .enumerate()
            .map(|(i, x)| match x {
                Some(x) if (0.0..=1.0).contains(x) => Ok(*x),
                _ => Err(Error::arg(format!(
                    "score column '{}' row {i} is missing or outside [0, 1]",
                    self.column
                ))),
            })
            .collect()
    }

    fn input_columns(&self) -> Vec<String> {
        vec![self.column.clone()]
    }

    fn target(&self) -> Target {
        self.target
    }
}

/// Positive iff `score >= threshold`.
pub fn decide(score: f64, threshold: f64) -> bool {
    score >= threshold
}

pub fn decisions(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&s| decide(s, threshold)).collect()
}

pub(crate) fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::arg(format!("threshold {threshold} outside (0, 1)")))
    }
}

/// Penalized mean log loss and its gradient. `theta` is `[intercept, w..]`;
/// `x` is row-major with `y.len()` rows.
pub fn objective(theta: &[f64], x: &[f64], y: &[f64], l2: f64) -> (f64, Vec<f64>) {
    let k = theta.len() - 1;
    let n = y.len();
    let mut grad = vec![0.0; k + 1];
    let mut loss = 0.0;
    for i in 0..n {
        let row = &x[i * k..(i + 1) * k];
        let z = theta[0] + theta[1..].iter().zip(row).map(|(w, x)| w * x).sum::<f64>();
        loss += softplus(z) - y[i] * z;
        let r = logistic(z) - y[i];
        grad[0] += r;
        for (g, xj) in grad[1..].iter_mut().zip(row) {
            *g += r * xj;
        }
    }
    let nf = n as f64;
    loss /= nf;
    for g in &mut grad {
        *g /= nf;
    }
    for (g, w) in grad[1..].iter_mut().zip(&theta[1..]) {
        *g += l2 * w;
    }
    loss += 0.5 * l2 * theta[1..].iter().map(|w| w * w).sum::<f64>();
    (loss, grad)
}

const GRAD_TOL: f64 = 1e-6;

/// Fits a logistic model to `config.target`.
pub fn train_logistic(d: &Dataset, include_sensitive: bool, config: &TrainConfig) -> Result<LogisticModel> {
    config.validate()?;
    let labels = config.target.labels(d)?;
    let encoding = FeatureEncoding::fit(d, include_sensitive)?;
    let k = encoding.dim();
    let n = d.n_rows();
    if n < k + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} rows for {k} encoded features; need at least {}",
            k + 1
        )));
    }
    let y: Vec<f64> = labels.iter().map(|&b| b as u8 as f64).collect();
    let rate = mean(&y);
    if rate == 0.0 || rate == 1.0 {
        let r = rate.clamp(1e-6, 1.0 - 1e-6);
        return Ok(LogisticModel {
            encoding,
            weights: vec![0.0; k],
            intercept: (r / (1.0 - r)).ln(),
            config: config.clone(),
            converged: true,
            iterations_run: 0,
        });
    }
    let x = encoding.encode(d)?;
    let mut theta = vec![0.0; k + 1];
    if config.init_sd > 0.0 {
        let mut rng = CounterRng::new(config.seed);
        for t in &mut theta[1..] {
            *t = config.init_sd * rng.next_normal();
        }
    }
    let (mut loss, mut grad) = objective(&theta, &x, &y, config.l2);
    let mut lr = config.learning_rate;
    let mut converged = false;
    let mut iterations_run = 0;
    for it in 0..config.iterations {
        if grad.iter().all(|g| g.abs() < GRAD_TOL) {
            converged = true;
            break;
        }
        iterations_run = it + 1;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - lr * g).collect();
            let (l, g) = objective(&cand, &x, &y, config.l2);
            if l <= loss {
                theta = cand;
                loss = l;
                grad = g;
                break;
            }
            lr *= 0.5;
            if lr < 1e-14 {
                break;
            }
        }
        if lr < 1e-14 {
            warn!("step size underflow after {iterations_run} iterations");
            break;
        }
    }
    if !converged {
        converged = grad.iter().all(|g| g.abs() < GRAD_TOL);
    }
    if !converged {
        warn!("logistic regression stopped after {iterations_run} iterations without converging");
    }
    Ok(LogisticModel {
        encoding,
        weights: theta[1..].to_vec(),
        intercept: theta[0],
        config: config.clone(),
        converged,
        iterations_run,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorScheme {
    Holdout,
    MonteCarloCv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub rate: f64,
    pub sd: Option<f64>,
    pub scheme: ErrorScheme,
    pub replicates: usize,
    pub seed: Option<u64>,
}

/// Fraction of `model`'s thresholded decisions that differ from its target.
pub fn misclassification(model: &dyn ScoringModel, d: &Dataset, threshold: f64) -> Result<f64> {
    check_threshold(threshold)?;
    let labels = model.target().labels(d)?;
    let scores = model.scores(d)?;
    let wrong = scores
        .iter()
        .zip(&labels)
        .filter(|(s, y)| decide(**s, threshold) != **y)
        .count();
    Ok(wrong as f64 / d.n_rows() as f64)
}

pub fn test_error(model: &dyn ScoringModel, d: &Dataset, threshold: f64) -> Result<ErrorEstimate> {
    Ok(ErrorEstimate {
        rate: misclassification(model, d, threshold)?,
        sd: None,
        scheme: ErrorScheme::Holdout,
        replicates: 1,
        seed: None,
    })
}

/// Monte-Carlo cross-validation: replicate `r` splits with
/// `sub_seed(seed, r)`, trains and measures the test error at 0.5.
pub fn cross_validate(
    d: &Dataset,
    replicates: usize,
    test_fraction: f64,
    seed: u64,
    include_sensitive: bool,
    config: &TrainConfig,
) -> Result<ErrorEstimate> {
    if replicates < 2 {
        return Err(Error::arg("cross-validation needs at least 2 replicates"));
    }
    let errors: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let (train, test) = split(d, test_fraction, sub_seed(seed, r as u64))?;
            let m = train_logistic(&train, include_sensitive, config)?;
            misclassification(&m, &test, 0.5)
        })
        .collect::<Result<_>>()?;
    Ok(ErrorEstimate {
        rate: mean(&errors),
        sd: Some(sample_std_dev(&errors)),
        scheme: ErrorScheme::MonteCarloCv,
        replicates,
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, Values};

    fn toy() -> Dataset {
        let x: Vec<f64> = (0..20).map(|i| if i < 10 { -1.0 - i as f64 * 0.3 } else { 1.0 + (i - 10) as f64 * 0.3 }).collect();
        let y: Vec<&str> = (0..20).map(|i| if i < 10 { "0" } else { "1" }).collect();
        let s: Vec<&str> = (0..20).map(|i| if i % 2 == 0 { "a" } else { "b" }).collect();
        Dataset::new(vec![
            Column::reals("x", x),
            Column::text("s", ColumnRole::Sensitive { protected: "a".into() }, s),
            Column::text("y", ColumnRole::Decision { positive: "1".into() }, y),
        ])
        .unwrap()
    }

    fn config(l2: f64) -> TrainConfig {
        TrainConfig {
            l2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn separable_toy_is_fitted_exactly() {
        let d = toy();
        let m = train_logistic(&d, false, &config(0.01)).unwrap();
        assert_eq!(test_error(&m, &d, 0.5).unwrap().rate, 0.0);
        assert!(m.converged);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn flipped_labels_give_complement_error() {
        let d = toy();
        let m = train_logistic(&d, false, &config(0.01)).unwrap();
        let labels = d.decision_positive().unwrap();
        let flipped = Values::Text(labels.iter().map(|&b| Some(if b { "0" } else { "1" }.to_string())).collect());
        let f = d.with_values("y", flipped).unwrap();
        let e = test_error(&m, &d, 0.5).unwrap().rate;
        assert_eq!(test_error(&m, &f, 0.5).unwrap().rate, 1.0 - e);
    }

    #[test]
    fn constant_target_gives_intercept_only_model() {
        let d = toy();
        let ones = Values::Text(vec![Some("1".to_string()); 20]);
        let d = d.with_values("y", ones).unwrap();
        let m = train_logistic(&d, false, &config(0.01)).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        assert!((m.intercept - (0.999999f64 / 1e-6).ln()).abs() < 1e-9);
        assert_eq!(test_error(&m, &d, 0.5).unwrap().rate, 0.0);
    }

    #[test]
    fn constant_model_on_balanced_data_errs_half() {
        let d = toy();
        let m = LogisticModel {
            encoding: FeatureEncoding { features: vec![] },
            weights: vec![],
            intercept: 1.0,
            config: TrainConfig::default(),
            converged: true,
            iterations_run: 0,
        };
        assert_eq!(test_error(&m, &d, 0.5).unwrap().rate, 0.5);
    }

    fn sensitive_model(weight: f64, intercept: f64) -> LogisticModel {
        LogisticModel {
            encoding: FeatureEncoding {
                features: vec![EncodedFeature::Sensitive {
                    name: "s".into(),
                    protected: "a".into(),
                }],
            },
            weights: vec![weight],
            intercept,
            config: TrainConfig::default(),
            converged: true,
            iterations_run: 0,
        }
    }

    #[test]
    fn score_examples() {
        let d = toy();
        assert_eq!(sensitive_model(0.0, 0.0).predict_score(&d, 0).unwrap(), 0.5);
        let s = sensitive_model(4.0, -2.0).predict_score(&d, 1).unwrap();
        assert!((s - 0.8807970779778823).abs() < 1e-15);
        let low = sensitive_model(0.0, -600.0).predict_score(&d, 0).unwrap();
        assert!(low > 0.0 && low.is_finite());
        assert!(decide(0.5, 0.5));
        assert!(decide(0.8808, 0.5));
        assert!(!decide(0.1192, 0.5));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = CounterRng::new(11);
        let k = 3;
        let x: Vec<f64> = (0..50 * k).map(|_| rng.next_normal()).collect();
        let y: Vec<f64> = (0..50).map(|_| (rng.next_f64() < 0.4) as u8 as f64).collect();
        for _ in 0..10 {
            let theta: Vec<f64> = (0..=k).map(|_| rng.next_normal()).collect();
            let (_, g) = objective(&theta, &x, &y, 0.1);
            for j in 0..=k {
                let h = 1e-5;
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[j] += h;
                tm[j] -= h;
                let fd = (objective(&tp, &x, &y, 0.1).0 - objective(&tm, &x, &y, 0.1).0) / (2.0 * h);
                let rel = (fd - g[j]).abs() / g[j].abs().max(1e-8);
                assert!(rel < 1e-5, "coordinate {j}: {fd} vs {}", g[j]);
            }
        }
    }

    fn noisy(n: usize, seed: u64) -> Dataset {
        let mut rng = CounterRng::new(seed);
        let x1: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let x2: Vec<f64> = (0..n).map(|_| 3.0 + 2.0 * rng.next_normal()).collect();
        let y: Vec<&str> = x1
            .iter()
            .zip(&x2)
            .map(|(a, b)| if rng.next_f64() < logistic(1.5 * a - 0.5 * (b - 3.0)) { "1" } else { "0" })
            .collect();
        let s: Vec<&str> = (0..n).map(|i| if i % 3 == 0 { "a" } else { "b" }).collect();
        Dataset::new(vec![
            Column::reals("x1", x1),
            Column::reals("x2", x2),
            Column::text("s", ColumnRole::Sensitive { protected: "a".into() }, s),
            Column::text("y", ColumnRole::Decision { positive: "1".into() }, y),
        ])
        .unwrap()
    }

    #[test]
    fn rescaling_a_feature_leaves_scores_unchanged() {
        let d = noisy(300, 2);
        let scaled: Vec<Option<f64>> = d.numeric("x2").unwrap().iter().map(|x| x.map(|x| x * 1000.0)).collect();
        let d2 = d.with_values("x2", Values::Numeric(scaled)).unwrap();
        let a = train_logistic(&d, false, &TrainConfig::default()).unwrap().scores(&d).unwrap();
        let b = train_logistic(&d2, false, &TrainConfig::default()).unwrap().scores(&d2).unwrap();
        for (a, b) in a.iter().zip(&b) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn loss_never_increases() {
        let d = noisy(200, 3);
        let enc = FeatureEncoding::fit(&d, true).unwrap();
        let x = enc.encode(&d).unwrap();
        let y: Vec<f64> = d.decision_positive().unwrap().iter().map(|&b| b as u8 as f64).collect();
        let mut prev = f64::INFINITY;
        for iters in [1, 2, 5, 20, 100, 400] {
            let cfg = TrainConfig {
                iterations: iters,
                ..TrainConfig::default()
            };
            let m = train_logistic(&d, true, &cfg).unwrap();
            let theta: Vec<f64> = std::iter::once(m.intercept).chain(m.weights.iter().copied()).collect();
            let (l, _) = objective(&theta, &x, &y, cfg.l2);
            assert!(l <= prev);
            prev = l;
        }
    }

    #[test]
    fn categorical_one_hot_and_unknown_modality() {
        let d = Dataset::new(vec![
            Column::text("c", ColumnRole::Categorical, ["b", "a", "c", "a"]),
            Column::text("s", ColumnRole::Sensitive { protected: "p".into() }, ["p", "q", "p", "q"]),
        ])
        .unwrap();
        let enc = FeatureEncoding::fit(&d, true).unwrap();
        assert_eq!(enc.coordinate_names(), ["c=b", "c=c", "s"]);
        assert_eq!(enc.encode(&d).unwrap(), [1., 0., 0., 0., 0., 1., 0., 1., 0., 0., 0., 1.]);
        let other = Dataset::new(vec![
            Column::text("c", ColumnRole::Categorical, ["z"]),
            Column::text("s", ColumnRole::Sensitive { protected: "p".into() }, ["p"]),
        ])
        .unwrap();
        assert_eq!(enc.encode(&other).unwrap(), [0., 0., 0.]);
    }

    #[test]
    fn missing_column_is_an_encoding_mismatch() {
        let d = noisy(50, 1);
        let m = train_logistic(&d, false, &TrainConfig::default()).unwrap();
        let other = toy();
        assert!(matches!(m.scores(&other), Err(Error::EncodingMismatch(_))));
    }

    #[test]
    fn model_json_round_trip() {
        let d = noisy(100, 4);
        let m = train_logistic(&d, true, &TrainConfig::default()).unwrap();
        assert_eq!(LogisticModel::from_json(&m.to_json().unwrap()).unwrap(), m);
    }

    #[test]
    fn cross_validation_examples() {
        let d = toy();
        let e = cross_validate(&d, 10, 0.3, 5, false, &config(0.01)).unwrap();
        assert_eq!((e.rate, e.sd), (0.0, Some(0.0)));

        let mut rng = CounterRng::new(8);
        let n = 2000;
        let x: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let y: Vec<&str> = (0..n).map(|_| if rng.next_f64() < 0.5 { "1" } else { "0" }).collect();
        let s: Vec<&str> = (0..n).map(|i| if i % 2 == 0 { "a" } else { "b" }).collect();
        let coin = Dataset::new(vec![
            Column::reals("x", x),
            Column::text("s", ColumnRole::Sensitive { protected: "a".into() }, s),
            Column::text("y", ColumnRole::Decision { positive: "1".into() }, y),
        ])
        .unwrap();
        let e = cross_validate(&coin, 20, 0.3, 9, false, &TrainConfig::default()).unwrap();
        assert!((e.rate - 0.5).abs() < 0.05, "{}", e.rate);
        assert_eq!(cross_validate(&coin, 20, 0.3, 9, false, &TrainConfig::default()).unwrap(), e);
    }

    #[test]
    fn sensitive_weight_is_used_on_biased_data() {
        use crate::synth::{generate, GeneratorSpec};
        let spec = GeneratorSpec {
            n: 3000,
            seed: 4,
            ..GeneratorSpec::default()
        }
        .with_target_di(0.6)
        .unwrap();
        let d = generate(&spec).unwrap().dataset;
        let with = train_logistic(&d, true, &TrainConfig::default()).unwrap();
        let names = with.encoding.coordinate_names();
        let j = names.iter().position(|c| c == "s").unwrap();
        assert!(with.weights[j].abs() > 0.1);
        let enc = &with.encoding;
        let x = enc.encode(&d).unwrap();
        let y: Vec<f64> = d.decision_positive().unwrap().iter().map(|&b| b as u8 as f64).collect();
        let theta: Vec<f64> = std::iter::once(with.intercept).chain(with.weights.iter().copied()).collect();
        let mut dropped = theta.clone();
        dropped[j + 1] = 0.0;
        assert!(objective(&dropped, &x, &y, 0.0).0 > objective(&theta, &x, &y, 0.0).0);
    }
}
