//! Metrics, cross-validated grid search, rank statistics for comparing
//! classifiers across datasets, and the generalization-bound evaluator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::TwoViewDataset;
use crate::error::{Error, Result};
use crate::kernel::{gaussian_kernel, GramPair};
use crate::model::{self, TrainedModel};
use crate::solver::Hyperparams;

/// Fraction of agreeing entries between two ±1 vectors.
pub fn accuracy(pred: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "prediction and truth lengths disagree: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Input("cannot score empty predictions".into()));
    }
    let hits = pred.iter().zip(truth.iter()).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// ROC curve by threshold sweep over the unique scores, descending.
///
/// The returned points start at (0, 0), end at (1, 1), and are monotone
/// nondecreasing in both coordinates; tied scores advance as one group.
pub fn roc_curve(scores: &DVector<f64>, truth: &DVector<f64>) -> Result<Vec<(f64, f64)>> {
    if scores.len() != truth.len() {
        return Err(Error::Shape(format!(
            "score and truth lengths disagree: {} vs {}",
            scores.len(),
            truth.len()
        )));
    }
    let n_pos = truth.iter().filter(|&&y| y == 1.0).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Input(
            "ROC needs both classes present in the truth labels".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    Ok(points)
}

/// Area under a ROC curve by the trapezoidal rule.
pub fn auc(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
        .sum()
}

/// Test-set evaluation: accuracy, confusion counts, ROC points, and AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub roc_points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl EvalReport {
    /// Two-column CSV of the ROC points.
    pub fn roc_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (fpr, tpr) in &self.roc_points {
            out.push_str(&format!("{fpr},{tpr}\n"));
        }
        out
    }
}

/// Scores a trained model on a labeled test set.
pub fn evaluate(model: &TrainedModel, test: &TwoViewDataset) -> Result<EvalReport> {
    let scores = model::decision_function_batch(model, &test.view1, &test.view2)?;
    let preds = scores.map(model::sign_label);
    let acc = accuracy(&preds, &test.labels)?;
    let mut tp = 0;
    let mut tn = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for i in 0..preds.len() {
        match (preds[i] == 1.0, test.labels[i] == 1.0) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    let roc_points = roc_curve(&scores, &test.labels)?;
    let auc_value = auc(&roc_points);
    Ok(EvalReport { accuracy: acc, tp, tn, fp, fn_, roc_points, auc: auc_value })
}

/// Mean validation accuracy for every grid entry, aligned with the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchTable {
    pub mean_accuracies: Vec<f64>,
    pub best_index: usize,
}

/// Stratified k-fold assignment: within each class the (seeded, shuffled)
/// indices are dealt round-robin, keeping per-fold class ratios within one
/// sample of the global ratio.
pub fn stratified_folds(
    labels: &DVector<f64>,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    if k < 2 {
        return Err(Error::Input(format!("k must be at least 2, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::Input(format!(
            "cannot make {k} folds from {} samples",
            labels.len()
        )));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1.0).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == -1.0).collect();
    if pos.len() < k || neg.len() < k {
        return Err(Error::Stratification(format!(
            "every fold must keep both classes: {} positive and {} negative samples \
             cannot fill {k} folds",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (j, &i) in pos.iter().enumerate() {
        folds[j % k].push(i);
    }
    for (j, &i) in neg.iter().enumerate() {
        folds[j % k].push(i);
    }
    Ok(folds)
}

/// Five-fold (or k-fold) grid search by mean validation accuracy.
///
/// Ties resolve deterministically: smaller `c1` wins, then smaller view-1
/// kernel width, then the earlier grid position.
pub fn kfold_grid_search(
    dataset: &TwoViewDataset,
    grid: &[Hyperparams],
    k: usize,
    seed: u64,
) -> Result<(Hyperparams, GridSearchTable)> {
    if grid.is_empty() {
        return Err(Error::Input("hyperparameter grid is empty".into()));
    }
    let folds = stratified_folds(&dataset.labels, k, seed)?;
    let mut mean_accuracies = Vec::with_capacity(grid.len());
    for hp in grid {
        let mut total = 0.0;
        for held_out in 0..k {
            let train_idx: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != held_out)
                .flat_map(|(_, f)| f.iter().copied())
                .collect();
            let train = dataset.select(&train_idx);
            let valid = dataset.select(&folds[held_out]);
            let (m, _) = model::fit(&train, hp)?;
            let preds = model::predict_batch(&m, &valid.view1, &valid.view2)?;
            total += accuracy(&preds, &valid.labels)?;
        }
        mean_accuracies.push(total / k as f64);
    }
    let mut best = 0;
    for i in 1..grid.len() {
        let better = mean_accuracies[i] > mean_accuracies[best];
        let tied = mean_accuracies[i] == mean_accuracies[best];
        let smaller_key = (grid[i].c1, grid[i].kernel1.sigma)
            < (grid[best].c1, grid[best].kernel1.sigma);
        if better || (tied && smaller_key) {
            best = i;
        }
    }
    Ok((grid[best], GridSearchTable { mean_accuracies, best_index: best }))
}

/// Mid-rank ranking of one dataset's accuracies: higher accuracy → lower
/// (better) rank; ties share the average of the ranks they span.
fn column_ranks(values: &[f64]) -> Vec<f64> {
    let p = values.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    let mut ranks = vec![0.0; p];
    let mut i = 0;
    while i < p {
        let mut j = i;
        while j < p && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i..j (0-based) share ranks i+1..j, averaged.
        let mid = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = mid;
        }
        i = j;
    }
    ranks
}

/// Per-dataset mid-ranks of a p×N accuracy matrix (rows are models,
/// columns are datasets) and the per-model average ranks.
pub fn friedman_ranks(acc: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (p, n) = (acc.nrows(), acc.ncols());
    if p < 2 || n < 1 {
        return Err(Error::Input(format!(
            "rank table needs at least 2 models and 1 dataset, got {p}×{n}"
        )));
    }
    let mut ranks = DMatrix::zeros(p, n);
    for c in 0..n {
        let col: Vec<f64> = (0..p).map(|r| acc[(r, c)]).collect();
        for (r, v) in column_ranks(&col).into_iter().enumerate() {
            ranks[(r, c)] = v;
        }
    }
    let avg = DVector::from_fn(p, |r, _| ranks.row(r).sum() / n as f64);
    Ok((ranks, avg))
}

/// The rank chi-squared statistic from average ranks:
/// `χ²_F = (12N / (p(p+1))) · (Σⱼ Rⱼ² − p(p+1)²/4)`.
pub fn friedman_chi2(avg_ranks: &[f64], n_datasets: usize) -> f64 {
    let p = avg_ranks.len() as f64;
    let n = n_datasets as f64;
    let sum_sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
    12.0 * n / (p * (p + 1.0)) * (sum_sq - p * (p + 1.0) * (p + 1.0) / 4.0)
}

/// The F-form of the statistic: `F_F = (N−1)·χ²_F / (N(p−1) − χ²_F)`.
pub fn friedman_f(chi2: f64, n_datasets: usize, p_models: usize) -> Result<f64> {
    let denom = (n_datasets * (p_models - 1)) as f64 - chi2;
    if denom <= 0.0 {
        return Err(Error::DegenerateStatistic(format!(
            "N(p−1) − χ²_F = {denom} is not positive"
        )));
    }
    Ok((n_datasets as f64 - 1.0) * chi2 / denom)
}

/// Friedman test over a p×N accuracy matrix: returns the average ranks and
/// both statistics.
pub fn friedman_test(acc: &DMatrix<f64>) -> Result<(DVector<f64>, f64, f64)> {
    let (p, n) = (acc.nrows(), acc.ncols());
    if p < 2 || n < 2 {
        return Err(Error::Input(format!(
            "Friedman test needs at least 2 models and 2 datasets, got {p}×{n}"
        )));
    }
    let (_, avg) = friedman_ranks(acc)?;
    let chi2 = friedman_chi2(avg.as_slice(), n);
    let f = friedman_f(chi2, n, p)?;
    Ok((avg, chi2, f))
}

/// Nemenyi critical difference `q_α · √(p(p+1) / (6N))`.
pub fn nemenyi_cd(p_models: usize, n_datasets: usize, q_alpha: f64) -> Result<f64> {
    if p_models < 2 || n_datasets < 1 {
        return Err(Error::Input(format!(
            "critical difference needs p ≥ 2 and N ≥ 1, got p={p_models}, N={n_datasets}"
        )));
    }
    if !(q_alpha >= 0.0) || !q_alpha.is_finite() {
        return Err(Error::Input(format!("q_alpha must be nonnegative, got {q_alpha}")));
    }
    let p = p_models as f64;
    Ok(q_alpha * (p * (p + 1.0) / (6.0 * n_datasets as f64)).sqrt())
}

/// Two-tailed Nemenyi critical values at α = 0.05 for p = 2..=10
/// (the usual studentized-range-based table).
pub fn nemenyi_q_alpha_05(p_models: usize) -> Option<f64> {
    const TABLE: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
    if (2..=10).contains(&p_models) {
        Some(TABLE[p_models - 2])
    } else {
        None
    }
}

/// Accuracy matrix with ranks and comparison statistics, ready for export.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    /// p×N accuracies (rows are models, columns are datasets).
    pub accuracies: DMatrix<f64>,
    pub ranks: DMatrix<f64>,
    pub avg_ranks: DVector<f64>,
    pub chi2_f: f64,
    pub f_f: f64,
    pub cd: f64,
}

impl RankTable {
    pub fn compute(accuracies: DMatrix<f64>, q_alpha: f64) -> Result<Self> {
        let (avg_ranks, chi2_f, f_f) = friedman_test(&accuracies)?;
        let (ranks, _) = friedman_ranks(&accuracies)?;
        let cd = nemenyi_cd(accuracies.nrows(), accuracies.ncols(), q_alpha)?;
        Ok(Self { accuracies, ranks, avg_ranks, chi2_f, f_f, cd })
    }
}

/// The closed-form upper bound on the misclassification probability:
///
/// ```text
/// slack_sum/(n(1+δ)) + 3·√(ln(2/θ)/(2n)) + (4N/(n(1+δ)))·√(diag_sum)
/// ```
///
/// with `slack_sum = Σᵢ (ζ1ᵢ + δ·ζ2ᵢ)` and
/// `diag_sum = Σᵢ (k1(xᵢ,xᵢ) + δ²·k2(xᵢ,xᵢ))`.
pub fn bound_value(
    n: usize,
    slack_sum: f64,
    delta: f64,
    theta: f64,
    norm_bound: f64,
    kernel_diag_sum: f64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Input("bound needs at least one sample".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Input(format!("delta must be positive, got {delta}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Input(format!("theta must lie in (0, 1), got {theta}")));
    }
    if !(norm_bound > 0.0) {
        return Err(Error::Input(format!("norm bound must be positive, got {norm_bound}")));
    }
    let nf = n as f64;
    let slack_term = slack_sum / (nf * (1.0 + delta));
    let confidence_term = 3.0 * ((2.0 / theta).ln() / (2.0 * nf)).sqrt();
    let complexity_term = 4.0 * norm_bound / (nf * (1.0 + delta)) * kernel_diag_sum.sqrt();
    Ok(slack_term + confidence_term + complexity_term)
}

/// Evaluates the bound for a trained model on its training set with the
/// solver's final slacks.
///
/// When `norm_bound` is `None` the empirical surrogate
/// `√(γ·α1ᵀK1α1 + α2ᵀK2α2)` is used.
pub fn generalization_bound(
    model: &TrainedModel,
    train: &TwoViewDataset,
    zeta1: &DVector<f64>,
    zeta2: &DVector<f64>,
    delta: f64,
    theta: f64,
    norm_bound: Option<f64>,
) -> Result<f64> {
    let n = train.len();
    if zeta1.len() != n || zeta2.len() != n {
        return Err(Error::Shape(format!(
            "slack lengths ({}, {}) disagree with the training size {n}",
            zeta1.len(),
            zeta2.len()
        )));
    }
    let slack_sum: f64 = (0..n).map(|i| zeta1[i] + delta * zeta2[i]).sum();
    let mut diag_sum = 0.0;
    let mut row1 = vec![0.0; train.view1.ncols()];
    let mut row2 = vec![0.0; train.view2.ncols()];
    for i in 0..n {
        for (c, v) in row1.iter_mut().enumerate() {
            *v = train.view1[(i, c)];
        }
        for (c, v) in row2.iter_mut().enumerate() {
            *v = train.view2[(i, c)];
        }
        diag_sum += gaussian_kernel(&row1, &row1, &model.kernel1)?
            + delta * delta * gaussian_kernel(&row2, &row2, &model.kernel2)?;
    }
    let norm = match norm_bound {
        Some(v) => v,
        None => {
            let grams =
                GramPair::assemble(&model.support1, &model.support2, &model.kernel1, &model.kernel2)?;
            (model.gamma * model.alpha1_star.dot(&(&grams.k1 * &model.alpha1_star))
                + model.alpha2_star.dot(&(&grams.k2 * &model.alpha2_star)))
            .max(0.0)
            .sqrt()
        }
    };
    bound_value(n, slack_sum, delta, theta, norm, diag_sum)
}
