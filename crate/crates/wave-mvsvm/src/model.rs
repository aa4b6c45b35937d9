//! User-facing classifier: fit on a two-view dataset, decide via the
//! weighted two-view rule, persist to JSON.
//!
//! The decision value for a new pair `(x1, x2)` is
//!
//! ```text
//! f(x1, x2) = γ·Σᵢ α1ᵢ·k1(s1ᵢ, x1) + Σᵢ α2ᵢ·k2(s2ᵢ, x2)
//! ```
//!
//! over the stored support rows `s1`, `s2`; the label is `sign(f)` with
//! `sign(0) = +1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{PcaProjection, StandardizeStats, TwoViewDataset};
use crate::error::{Error, Result};
use crate::kernel::{cross_gram, gaussian_kernel, GramPair, KernelConfig};
use crate::solver::{admm_solve, ConvergenceTrace, Hyperparams};

/// Current model-file schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Preprocessing fitted at training time and carried with the model so
/// prediction can reproduce it: optional per-view standardization and the
/// optional PCA map that synthesized view 2 from view 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub scaler: Option<StandardizeStats>,
    pub pca_view2: Option<PcaProjection>,
}

/// A trained two-view classifier.
///
/// Kernel methods need their training features at prediction time, so the
/// support matrices are stored verbatim; coefficients keep full precision
/// through serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub alpha1_star: DVector<f64>,
    pub alpha2_star: DVector<f64>,
    /// Decision weight of view 1 (the same γ that regularizes view 1).
    pub gamma: f64,
    pub kernel1: KernelConfig,
    pub kernel2: KernelConfig,
    pub support1: DMatrix<f64>,
    pub support2: DMatrix<f64>,
    pub hyperparams: Hyperparams,
    pub preprocessing: Preprocessing,
    pub schema_version: u32,
}

impl TrainedModel {
    fn validate(&self) -> Result<()> {
        let n = self.support1.nrows();
        if self.alpha1_star.len() != n
            || self.alpha2_star.len() != n
            || self.support2.nrows() != n
        {
            return Err(Error::Shape(format!(
                "coefficient/support lengths disagree: α1 {}, α2 {}, support rows {} / {}",
                self.alpha1_star.len(),
                self.alpha2_star.len(),
                n,
                self.support2.nrows()
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Input(format!("gamma must be positive, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Trains on the dataset: assembles both Gram matrices, runs the ADMM
/// solver from the zero initialization, and packages the coefficients with
/// the kernel configs and training features.
pub fn fit(dataset: &TwoViewDataset, hp: &Hyperparams) -> Result<(TrainedModel, ConvergenceTrace)> {
    hp.validate()?;
    if dataset.len() < 2 {
        return Err(Error::Input(format!(
            "training needs at least 2 samples, got {}",
            dataset.len()
        )));
    }
    let grams = GramPair::assemble(&dataset.view1, &dataset.view2, &hp.kernel1, &hp.kernel2)?;
    let (state, trace) = admm_solve(&grams, &dataset.labels, hp)?;
    let model = TrainedModel {
        alpha1_star: state.alpha1,
        alpha2_star: state.alpha2,
        gamma: hp.gamma,
        kernel1: hp.kernel1,
        kernel2: hp.kernel2,
        support1: dataset.view1.clone(),
        support2: dataset.view2.clone(),
        hyperparams: *hp,
        preprocessing: Preprocessing::default(),
        schema_version: SCHEMA_VERSION,
    };
    Ok((model, trace))
}

/// The weighted two-view decision value `f(x1, x2)`.
pub fn decision_function(model: &TrainedModel, x1: &[f64], x2: &[f64]) -> Result<f64> {
    model.validate()?;
    if x1.len() != model.support1.ncols() || x2.len() != model.support2.ncols() {
        return Err(Error::Shape(format!(
            "feature dimensions ({}, {}) do not match the model's ({}, {})",
            x1.len(),
            x2.len(),
            model.support1.ncols(),
            model.support2.ncols()
        )));
    }
    let n = model.support1.nrows();
    let mut row1 = vec![0.0; model.support1.ncols()];
    let mut row2 = vec![0.0; model.support2.ncols()];
    let mut f = 0.0;
    for i in 0..n {
        for (c, v) in row1.iter_mut().enumerate() {
            *v = model.support1[(i, c)];
        }
        for (c, v) in row2.iter_mut().enumerate() {
            *v = model.support2[(i, c)];
        }
        f += model.gamma * model.alpha1_star[i] * gaussian_kernel(&row1, x1, &model.kernel1)?;
        f += model.alpha2_star[i] * gaussian_kernel(&row2, x2, &model.kernel2)?;
    }
    Ok(f)
}

/// Decision values for whole test matrices at once (rows are samples).
pub fn decision_function_batch(
    model: &TrainedModel,
    view1: &DMatrix<f64>,
    view2: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    model.validate()?;
    if view1.nrows() != view2.nrows() {
        return Err(Error::Shape(format!(
            "test views disagree on sample count: {} vs {}",
            view1.nrows(),
            view2.nrows()
        )));
    }
    let cg1 = cross_gram(&model.support1, view1, &model.kernel1)?;
    let cg2 = cross_gram(&model.support2, view2, &model.kernel2)?;
    Ok(&cg1 * &model.alpha1_star * model.gamma + &cg2 * &model.alpha2_star)
}

/// The sign rule applied to a decision value; ties break to +1 so repeated
/// runs agree.
pub fn sign_label(f: f64) -> f64 {
    if f >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Predicted ±1 label: `sign(f)` with `sign(0) = +1`.
pub fn predict(model: &TrainedModel, x1: &[f64], x2: &[f64]) -> Result<f64> {
    Ok(sign_label(decision_function(model, x1, x2)?))
}

/// Predicted ±1 labels for whole test matrices.
pub fn predict_batch(
    model: &TrainedModel,
    view1: &DMatrix<f64>,
    view2: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    Ok(decision_function_batch(model, view1, view2)?.map(sign_label))
}

/// On-disk layout of a trained model. Plain vectors keep the JSON schema
/// independent of the linear-algebra backend; numbers are written in
/// shortest round-trip decimal form, so coefficients reload bit-exactly.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    gamma: f64,
    kernel1: KernelConfig,
    kernel2: KernelConfig,
    hyperparams: Hyperparams,
    alpha1_star: Vec<f64>,
    alpha2_star: Vec<f64>,
    support1: Vec<Vec<f64>>,
    support2: Vec<Vec<f64>>,
    #[serde(default)]
    preprocessing: Preprocessing,
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Format("support matrix has no rows".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Format("support matrix rows have uneven lengths".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

/// Serializes the model to pretty-printed JSON at `path`.
pub fn save<P: AsRef<std::path::Path>>(model: &TrainedModel, path: P) -> Result<()> {
    model.validate()?;
    let file = ModelFile {
        schema_version: model.schema_version,
        gamma: model.gamma,
        kernel1: model.kernel1,
        kernel2: model.kernel2,
        hyperparams: model.hyperparams,
        alpha1_star: model.alpha1_star.iter().copied().collect(),
        alpha2_star: model.alpha2_star.iter().copied().collect(),
        support1: matrix_to_rows(&model.support1),
        support2: matrix_to_rows(&model.support2),
        preprocessing: model.preprocessing.clone(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Format(format!("could not serialize model: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Loads a model saved by [`save`]; rejects unknown schema versions and
/// malformed files without constructing a partial model.
pub fn load<P: AsRef<std::path::Path>>(path: P) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(&path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("malformed model file: {e}")))?;
    let version = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Format("model file is missing schema_version".into()))?;
    if version != u64::from(SCHEMA_VERSION) {
        return Err(Error::Format(format!(
            "unsupported schema version {version} (this build reads version {SCHEMA_VERSION})"
        )));
    }
    let file: ModelFile = serde_json::from_value(value)
        .map_err(|e| Error::Format(format!("malformed model file: {e}")))?;
    let model = TrainedModel {
        schema_version: file.schema_version,
        gamma: file.gamma,
        kernel1: file.kernel1,
        kernel2: file.kernel2,
        hyperparams: file.hyperparams,
        alpha1_star: DVector::from_vec(file.alpha1_star),
        alpha2_star: DVector::from_vec(file.alpha2_star),
        support1: rows_to_matrix(&file.support1)?,
        support2: rows_to_matrix(&file.support2)?,
        preprocessing: file.preprocessing,
    };
    model.validate()?;
    Ok(model)
}
