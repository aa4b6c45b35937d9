//! Gaussian kernel evaluation and Gram-matrix assembly for both views.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian kernel width, one per view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Width σ of `k(x, x') = exp(−‖x−x'‖² / (2σ²))`.
    pub sigma: f64,
}

impl KernelConfig {
    /// Validates `sigma > 0`.
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!(
                "kernel sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        Self::new(self.sigma).map(|_| ())
    }
}

/// The two training Gram matrices, one per view.
///
/// Each matrix is symmetric with a unit diagonal and positive semidefinite
/// up to floating-point slack.
#[derive(Debug, Clone, PartialEq)]
pub struct GramPair {
    pub k1: DMatrix<f64>,
    pub k2: DMatrix<f64>,
}

impl GramPair {
    /// Assembles both Gram matrices from the per-view sample matrices
    /// (rows are samples).
    pub fn assemble(
        view1: &DMatrix<f64>,
        view2: &DMatrix<f64>,
        cfg1: &KernelConfig,
        cfg2: &KernelConfig,
    ) -> Result<Self> {
        if view1.nrows() != view2.nrows() {
            return Err(Error::Shape(format!(
                "views disagree on sample count: {} vs {}",
                view1.nrows(),
                view2.nrows()
            )));
        }
        Ok(Self {
            k1: gram_matrix(view1, cfg1)?,
            k2: gram_matrix(view2, cfg2)?,
        })
    }

    pub fn len(&self) -> usize {
        self.k1.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.k1.nrows() == 0
    }
}

/// Squared Euclidean distance in the expanded form, guarded to be ≥ 0.
#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut na = 0.0;
    let mut nb = 0.0;
    let mut dot = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        na += x * x;
        nb += y * y;
        dot += x * y;
    }
    (na + nb - 2.0 * dot).max(0.0)
}

/// Gaussian kernel between two feature vectors; the value lives in `(0, 1]`.
pub fn gaussian_kernel(x: &[f64], x2: &[f64], cfg: &KernelConfig) -> Result<f64> {
    cfg.validate()?;
    if x.len() != x2.len() {
        return Err(Error::Shape(format!(
            "kernel arguments disagree on dimension: {} vs {}",
            x.len(),
            x2.len()
        )));
    }
    Ok((-squared_distance(x, x2) / (2.0 * cfg.sigma * cfg.sigma)).exp())
}

fn copy_row(x: &DMatrix<f64>, i: usize, buf: &mut [f64]) {
    for (j, v) in buf.iter_mut().enumerate() {
        *v = x[(i, j)];
    }
}

/// Full n×n Gram matrix of `X` against itself (rows are samples).
///
/// The upper triangle is computed and mirrored, so the result equals its own
/// transpose exactly, with ones on the diagonal.
pub fn gram_matrix(x: &DMatrix<f64>, cfg: &KernelConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    let n = x.nrows();
    if n == 0 || x.ncols() == 0 {
        return Err(Error::Shape("cannot build a Gram matrix from an empty matrix".into()));
    }
    let m = x.ncols();
    let mut row_i = vec![0.0; m];
    let mut row_j = vec![0.0; m];
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        copy_row(x, i, &mut row_i);
        for j in (i + 1)..n {
            copy_row(x, j, &mut row_j);
            let v = gaussian_kernel(&row_i, &row_j, cfg)?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// t×n matrix of kernel evaluations between test rows and training rows;
/// entry `(j, i)` is `k(test_j, train_i)`.
pub fn cross_gram(
    train: &DMatrix<f64>,
    test: &DMatrix<f64>,
    cfg: &KernelConfig,
) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    if train.ncols() != test.ncols() {
        return Err(Error::Shape(format!(
            "train and test disagree on feature dimension: {} vs {}",
            train.ncols(),
            test.ncols()
        )));
    }
    if train.nrows() == 0 || test.nrows() == 0 {
        return Err(Error::Shape("cannot build a cross-Gram matrix from an empty matrix".into()));
    }
    let m = train.ncols();
    let mut test_row = vec![0.0; m];
    let mut train_row = vec![0.0; m];
    let mut k = DMatrix::zeros(test.nrows(), train.nrows());
    for j in 0..test.nrows() {
        copy_row(test, j, &mut test_row);
        for i in 0..train.nrows() {
            copy_row(train, i, &mut train_row);
            k[(j, i)] = gaussian_kernel(&test_row, &train_row, cfg)?;
        }
    }
    Ok(k)
}
