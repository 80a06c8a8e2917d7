//! L1-regularised logistic regression with exact linear attribution.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, Feature, FeatureVector};
use crate::scaler::ScalerParams;

const TOLERANCE: f64 = 1e-6;
/// Upper bound on the logistic loss curvature.
const LIPSCHITZ: f64 = 0.25;

fn default_max_iterations() -> usize {
    1000
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub features: Vec<Feature>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub l1_strength: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    pub trained_on: String,
    #[serde(default = "default_true")]
    pub converged: bool,
    /// Scaler fitted alongside the model; raw feature vectors pass through it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<ScalerParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contribution {
    pub feature: Feature,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attribution {
    pub contributions: Vec<Contribution>,
    pub intercept: f64,
    pub logit: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub l1_strength: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l1_strength: 0.01,
            max_iterations: default_max_iterations(),
            seed: 0,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

impl ModelParams {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelParams = serde_json::from_str(text).map_err(|e| Error::Parse {
            offset: crate::corpus::byte_offset(text, e.line(), e.column()),
            message: e.to_string(),
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.weights.len() {
            return Err(Error::Contract(format!(
                "{} features but {} weights",
                self.features.len(),
                self.weights.len()
            )));
        }
        let mut seen = self.features.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.features.len() {
            return Err(Error::Contract("duplicate feature in model".into()));
        }
        if !self.intercept.is_finite() || self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Contract("model weights must be finite".into()));
        }
        if self.l1_strength.is_nan() || self.l1_strength < 0.0 {
            return Err(Error::Contract("l1_strength must be >= 0".into()));
        }
        if let Some(s) = &self.scaler {
            s.validate()?;
            for f in &self.features {
                if !s.features.contains(f) {
                    return Err(Error::Contract(format!("scaler lacks feature `{f}`")));
                }
            }
        }
        Ok(())
    }

    pub fn weight(&self, f: Feature) -> Option<f64> {
        self.features
            .iter()
            .position(|&g| g == f)
            .map(|j| self.weights[j])
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.features.len() {
            return Err(Error::Contract(format!(
                "expected {} features, got {}",
                self.features.len(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Check that `names` matches the model's feature order exactly.
    pub fn check_alignment(&self, names: &[Feature]) -> Result<()> {
        if names != self.features.as_slice() {
            return Err(Error::Contract(
                "feature names are not aligned with the model".into(),
            ));
        }
        Ok(())
    }

    pub fn logit(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
    }

    /// Probability of the positive (closed / effective) class for a scaled row.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.logit(x).map(sigmoid)
    }

    pub fn attribute(&self, x: &[f64]) -> Result<Attribution> {
        self.check_len(x)?;
        let contributions: Vec<Contribution> = self
            .features
            .iter()
            .zip(&self.weights)
            .zip(x)
            .map(|((&feature, w), v)| Contribution {
                feature,
                contribution: w * v,
            })
            .collect();
        let logit =
            self.intercept + contributions.iter().map(|c| c.contribution).sum::<f64>();
        Ok(Attribution {
            contributions,
            intercept: self.intercept,
            logit,
            probability: sigmoid(logit),
        })
    }

    /// Select the model's features from a raw vector and scale them with the
    /// embedded scaler (or `fallback` when the model carries none).
    pub fn scale_vector(
        &self,
        v: &FeatureVector,
        fallback: Option<&ScalerParams>,
    ) -> Result<Vec<f64>> {
        let raw = v.select(&self.features);
        match self.scaler.as_ref().or(fallback) {
            Some(s) => s.apply(&self.features, &raw),
            None => Ok(raw),
        }
    }
}

/// Fit weights and intercept on a scaled matrix (`true` = positive class).
///
/// Minimises mean log loss + `l1_strength`·‖w‖₁ by cyclic coordinate descent.
/// Each coordinate takes a proximal step against the 0.25 curvature bound;
/// the seed fixes the coordinate order.
pub fn train_l1_logistic(
    x: &DMatrix<f64>,
    y: &[bool],
    features: &[Feature],
    config: &TrainConfig,
) -> Result<ModelParams> {
    let (n, p) = x.shape();
    if y.len() != n || features.len() != p {
        return Err(Error::Contract("X, y and feature names disagree in size".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("non-finite value in training matrix".into()));
    }
    if !config.l1_strength.is_finite() || config.l1_strength < 0.0 {
        return Err(Error::Argument("l1_strength must be a finite value >= 0".into()));
    }
    let positives = y.iter().filter(|&&b| b).count();
    if positives == 0 || positives == n {
        return Err(Error::Training("labels contain a single class".into()));
    }
    let nf = n as f64;
    let target: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let curvature: Vec<f64> = (0..p)
        .map(|j| LIPSCHITZ * x.column(j).norm_squared() / nf)
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));

    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut eta = vec![0.0; n];
    let mut converged = false;
    for _ in 0..config.max_iterations {
        let mut max_step: f64 = 0.0;

        let g: f64 = (0..n).map(|i| sigmoid(eta[i]) - target[i]).sum::<f64>() / nf;
        let step = -g / LIPSCHITZ;
        b += step;
        eta.iter_mut().for_each(|e| *e += step);
        max_step = max_step.max(step.abs());

        for &j in &order {
            let l = curvature[j];
            if l == 0.0 {
                continue;
            }
            let col = x.column(j);
            let g: f64 = (0..n)
                .map(|i| (sigmoid(eta[i]) - target[i]) * col[i])
                .sum::<f64>()
                / nf;
            let new = soft_threshold(w[j] - g / l, config.l1_strength / l);
            let delta = new - w[j];
            if delta != 0.0 {
                w[j] = new;
                for i in 0..n {
                    eta[i] += delta * col[i];
                }
            }
            max_step = max_step.max(delta.abs());
        }
        if max_step < TOLERANCE {
            converged = true;
            break;
        }
    }
    Ok(ModelParams {
        features: features.to_vec(),
        weights: w,
        intercept: b,
        l1_strength: config.l1_strength,
        max_iterations: config.max_iterations,
        trained_on: String::new(),
        converged,
        scaler: None,
    })
}

/// Fit a robust scaler on `data`, then the model on the scaled matrix; the
/// scaler is embedded in the returned parameters.
pub fn fit_pipeline(data: &Dataset, config: &TrainConfig) -> Result<ModelParams> {
    let scaler = ScalerParams::fit(&data.x, &data.features)?;
    let scaled = scaler.apply_matrix(&data.features, &data.x)?;
    let mut m = train_l1_logistic(&scaled, &data.y, &data.features, config)?;
    m.scaler = Some(scaler);
    Ok(m)
}

/// Fraction of rows whose thresholded prediction matches the label.
pub fn accuracy(model: &ModelParams, data: &Dataset) -> Result<f64> {
    model.check_alignment(&data.features)?;
    if data.is_empty() {
        return Err(Error::EmptyInput("no rows to evaluate".into()));
    }
    let x = match &model.scaler {
        Some(s) => s.apply_matrix(&data.features, &data.x)?,
        None => data.x.clone(),
    };
    let mut hits = 0;
    for (i, &label) in data.y.iter().enumerate() {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        if (model.predict_proba(&row)? >= 0.5) == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

/// Assign rows to `k` folds, dealing each class's shuffled rows round-robin.
pub fn stratified_folds(y: &[bool], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Argument("k must be at least 2".into()));
    }
    if y.len() < k {
        return Err(Error::Argument(format!("{} rows cannot form {k} folds", y.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; y.len()];
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if idx.len() < k {
            return Err(Error::Stratification(format!(
                "class {} has {} rows, fewer than {k} folds",
                if class { "closed" } else { "open" },
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (r, i) in idx.into_iter().enumerate() {
            fold[i] = r % k;
        }
    }
    Ok(fold)
}

fn subset(data: &Dataset, rows: &[usize]) -> Dataset {
    Dataset {
        features: data.features.clone(),
        x: data.x.select_rows(rows),
        y: rows.iter().map(|&i| data.y[i]).collect(),
    }
}

/// Stratified k-fold cross-validation; the scaler and the model are refitted
/// on each training split.
pub fn cross_validate(data: &Dataset, k: usize, config: &TrainConfig) -> Result<CvResult> {
    let fold = stratified_folds(&data.y, k, config.seed)?;
    let mut fold_accuracies = Vec::with_capacity(k);
    for f in 0..k {
        let train: Vec<usize> = (0..data.len()).filter(|&i| fold[i] != f).collect();
        let test: Vec<usize> = (0..data.len()).filter(|&i| fold[i] == f).collect();
        let model = fit_pipeline(&subset(data, &train), config)?;
        fold_accuracies.push(accuracy(&model, &subset(data, &test))?);
    }
    Ok(CvResult {
        mean_accuracy: fold_accuracies.iter().sum::<f64>() / k as f64,
        fold_accuracies,
    })
}
