//! Dataset ingestion, second-view synthesis via PCA, splits,
//! standardization, label-noise injection, and synthetic fixtures.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Paired feature matrices (rows are samples) with ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoViewDataset {
    pub view1: DMatrix<f64>,
    pub view2: DMatrix<f64>,
    pub labels: DVector<f64>,
}

impl TwoViewDataset {
    /// Validates equal row counts, a ±1 label alphabet, and finite features.
    pub fn new(view1: DMatrix<f64>, view2: DMatrix<f64>, labels: DVector<f64>) -> Result<Self> {
        let n = view1.nrows();
        if n == 0 {
            return Err(Error::Input("dataset must contain at least one sample".into()));
        }
        if view2.nrows() != n || labels.len() != n {
            return Err(Error::Shape(format!(
                "row counts disagree: view1 {n}, view2 {}, labels {}",
                view2.nrows(),
                labels.len()
            )));
        }
        for &y in labels.iter() {
            if y != 1.0 && y != -1.0 {
                return Err(Error::Input(format!("labels must be +1 or -1, got {y}")));
            }
        }
        if view1.iter().chain(view2.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("feature values must be finite".into()));
        }
        Ok(Self { view1, view2, labels })
    }

    pub fn len(&self) -> usize {
        self.view1.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// New dataset from the given row indices (in order, duplicates allowed).
    pub fn select(&self, indices: &[usize]) -> Self {
        let pick = |m: &DMatrix<f64>| {
            DMatrix::from_fn(indices.len(), m.ncols(), |r, c| m[(indices[r], c)])
        };
        Self {
            view1: pick(&self.view1),
            view2: pick(&self.view2),
            labels: DVector::from_fn(indices.len(), |r, _| self.labels[indices[r]]),
        }
    }
}

/// Where the label lives in a CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelColumn {
    /// Last column of the file (the default layout).
    Last,
    /// Zero-based column index.
    Index(usize),
}

/// How to read a CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvSchema {
    /// Skip the first line.
    pub has_header: bool,
    /// Column holding the label; `None` reads a pure feature matrix.
    pub label_column: Option<LabelColumn>,
    /// Remap {0, 1} labels to {−1, +1}.
    pub map_zero_one: bool,
}

impl CsvSchema {
    pub fn features(has_header: bool) -> Self {
        Self { has_header, label_column: None, map_zero_one: false }
    }

    pub fn labeled(has_header: bool, map_zero_one: bool) -> Self {
        Self { has_header, label_column: Some(LabelColumn::Last), map_zero_one }
    }
}

fn parse_label(raw: &str, map_zero_one: bool, line_no: usize) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| {
        Error::Format(format!("line {line_no}: could not parse label '{raw}' as a number"))
    })?;
    if map_zero_one {
        match v {
            v if v == 0.0 => Ok(-1.0),
            v if v == 1.0 => Ok(1.0),
            _ => Err(Error::Format(format!(
                "line {line_no}: unknown label {v} (expected 0 or 1)"
            ))),
        }
    } else {
        match v {
            v if v == 1.0 => Ok(1.0),
            v if v == -1.0 => Ok(-1.0),
            _ => Err(Error::Format(format!(
                "line {line_no}: unknown label {v} (expected -1 or +1)"
            ))),
        }
    }
}

/// Reads a comma-separated numeric file. Returns the feature matrix and,
/// when the schema names a label column, the ±1 label vector.
///
/// Errors carry 1-based line numbers for ragged rows, non-numeric cells,
/// and unknown labels.
pub fn load_csv<P: AsRef<std::path::Path>>(
    path: P,
    schema: &CsvSchema,
) -> Result<(DMatrix<f64>, Option<DVector<f64>>)> {
    let text = std::fs::read_to_string(&path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;
    let skip = usize::from(schema.has_header);
    for (idx, line) in text.lines().enumerate().skip(skip) {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Format(format!(
                    "line {line_no}: ragged row ({} fields, expected {w})",
                    fields.len()
                )));
            }
            _ => {}
        }
        let label_idx = match schema.label_column {
            Some(LabelColumn::Last) => Some(fields.len() - 1),
            Some(LabelColumn::Index(i)) => {
                if i >= fields.len() {
                    return Err(Error::Format(format!(
                        "line {line_no}: label column {i} out of range ({} fields)",
                        fields.len()
                    )));
                }
                Some(i)
            }
            None => None,
        };
        let mut row = Vec::with_capacity(fields.len());
        for (col, raw) in fields.iter().enumerate() {
            if Some(col) == label_idx {
                labels.push(parse_label(raw, schema.map_zero_one, line_no)?);
            } else {
                let v: f64 = raw.trim().parse().map_err(|_| {
                    Error::Format(format!(
                        "line {line_no}: could not parse '{raw}' as a number (column {})",
                        col + 1
                    ))
                })?;
                row.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format(format!(
            "{}: no data rows",
            path.as_ref().display()
        )));
    }
    let ncols = rows[0].len();
    let matrix = DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]);
    let labels = schema
        .label_column
        .map(|_| DVector::from_vec(labels));
    Ok((matrix, labels))
}

/// Reads a one-label-per-line file (a single CSV column).
pub fn load_labels_csv<P: AsRef<std::path::Path>>(
    path: P,
    has_header: bool,
    map_zero_one: bool,
) -> Result<DVector<f64>> {
    let text = std::fs::read_to_string(&path)?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(usize::from(has_header)) {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if line.contains(',') {
            return Err(Error::Format(format!(
                "line {line_no}: labels file must hold a single column"
            )));
        }
        labels.push(parse_label(line, map_zero_one, line_no)?);
    }
    if labels.is_empty() {
        return Err(Error::Format(format!(
            "{}: no labels found",
            path.as_ref().display()
        )));
    }
    Ok(DVector::from_vec(labels))
}

/// Writes a numeric matrix as plain CSV (full f64 round-trip precision).
pub fn write_matrix_csv<P: AsRef<std::path::Path>>(matrix: &DMatrix<f64>, path: P) -> Result<()> {
    let mut out = String::new();
    for r in 0..matrix.nrows() {
        for c in 0..matrix.ncols() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", matrix[(r, c)]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// How to lay labels out when writing a dataset back to CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelLayout {
    /// Append the label as the last column of the view-1 file.
    InlineView1,
    /// Write labels to their own single-column file.
    Separate(std::path::PathBuf),
}

/// Writes a dataset as a view-1/view-2 CSV pair, labels inline or separate.
pub fn save_dataset<P: AsRef<std::path::Path>>(
    ds: &TwoViewDataset,
    view1_path: P,
    view2_path: P,
    labels: &LabelLayout,
) -> Result<()> {
    match labels {
        LabelLayout::InlineView1 => {
            let mut wide = DMatrix::zeros(ds.len(), ds.view1.ncols() + 1);
            for r in 0..ds.len() {
                for c in 0..ds.view1.ncols() {
                    wide[(r, c)] = ds.view1[(r, c)];
                }
                wide[(r, ds.view1.ncols())] = ds.labels[r];
            }
            write_matrix_csv(&wide, view1_path)?;
        }
        LabelLayout::Separate(label_path) => {
            write_matrix_csv(&ds.view1, view1_path)?;
            let col = DMatrix::from_fn(ds.len(), 1, |r, _| ds.labels[r]);
            write_matrix_csv(&col, label_path)?;
        }
    }
    write_matrix_csv(&ds.view2, view2_path)
}

/// A fitted PCA map: centering vector plus the retained components
/// (columns), with deterministic component signs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    /// m×k loading matrix; column j is the j-th retained component.
    pub components: Vec<Vec<f64>>,
}

impl PcaProjection {
    pub fn output_dim(&self) -> usize {
        self.components.first().map_or(0, Vec::len)
    }

    /// Projects rows of `x` onto the retained components.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let m = self.mean.len();
        if x.ncols() != m {
            return Err(Error::Shape(format!(
                "PCA projection expects {m} features, got {}",
                x.ncols()
            )));
        }
        let k = self.output_dim();
        let mut out = DMatrix::zeros(x.nrows(), k);
        for r in 0..x.nrows() {
            for j in 0..k {
                let mut s = 0.0;
                for c in 0..m {
                    s += (x[(r, c)] - self.mean[c]) * self.components[c][j];
                }
                out[(r, j)] = s;
            }
        }
        Ok(out)
    }
}

/// Fits the PCA map keeping the smallest number of leading components whose
/// cumulative explained variance reaches `variance_threshold`.
///
/// Component signs are fixed by making each component's largest-magnitude
/// loading positive, so identical inputs give identical scores.
pub fn pca_projection(view1: &DMatrix<f64>, variance_threshold: f64) -> Result<PcaProjection> {
    let n = view1.nrows();
    let m = view1.ncols();
    if n < 2 {
        return Err(Error::Input(format!("PCA needs at least 2 samples, got {n}")));
    }
    if !(variance_threshold > 0.0 && variance_threshold <= 1.0) {
        return Err(Error::Input(format!(
            "variance threshold must lie in (0, 1], got {variance_threshold}"
        )));
    }
    let mean: Vec<f64> = (0..m)
        .map(|c| (0..n).map(|r| view1[(r, c)]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, m, |r, c| view1[(r, c)] - mean[c]);
    let svd = nalgebra::SVD::new(centered.clone(), false, true);
    let v_t = svd.v_t.as_ref().expect("SVD with V requested");
    let mut sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // nalgebra returns descending singular values; the defensive sort above
    // only matters if that ever changes, and the V rows are consumed in the
    // library's own order below.
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    if total <= f64::EPSILON * (n * m) as f64 {
        return Err(Error::Input(
            "degenerate input: the data carries no variance to decompose".into(),
        ));
    }
    let rank_tol = (n.max(m) as f64) * f64::EPSILON * sigma[0];

    // Order component indices by singular value, descending.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });

    let mut cumulative = 0.0;
    let mut keep: Vec<usize> = Vec::new();
    for &j in &order {
        let s = svd.singular_values[j];
        if s <= rank_tol {
            break;
        }
        keep.push(j);
        cumulative += s * s;
        if cumulative / total >= variance_threshold {
            break;
        }
    }
    if keep.is_empty() {
        return Err(Error::Input("degenerate input: no components above rank tolerance".into()));
    }

    let mut components = vec![vec![0.0; keep.len()]; m];
    for (out_j, &j) in keep.iter().enumerate() {
        // Row j of Vᵀ is the component; fix its sign.
        let mut best = 0;
        for c in 1..m {
            if v_t[(j, c)].abs() > v_t[(j, best)].abs() {
                best = c;
            }
        }
        let flip = if v_t[(j, best)] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..m {
            components[c][out_j] = flip * v_t[(j, c)];
        }
    }
    Ok(PcaProjection { mean, components })
}

/// Synthesizes a second view as the PCA scores of the first view at the
/// given explained-variance threshold (0.95 keeps the usual "95% variance"
/// reading).
pub fn synthesize_view2_pca(view1: &DMatrix<f64>, variance_threshold: f64) -> Result<DMatrix<f64>> {
    let projection = pca_projection(view1, variance_threshold)?;
    projection.apply(view1)
}

/// Seeded uniform shuffle; the training side receives `⌊fraction·n + 0.5⌋`
/// rows. The parts are disjoint and exhaustive.
pub fn train_test_split(
    ds: &TwoViewDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(TwoViewDataset, TwoViewDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Input(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = ds.len();
    if n < 2 {
        return Err(Error::Input("need at least 2 samples to split".into()));
    }
    let n_train = (train_fraction * n as f64 + 0.5).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Input(format!(
            "split of {n} samples at fraction {train_fraction} leaves one side empty"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let train = ds.select(&indices[..n_train]);
    let test = ds.select(&indices[n_train..]);
    Ok((train, test))
}

/// Per-column mean and standard deviation of one view's training features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    /// Population standard deviation; exactly 0.0 marks a constant column,
    /// which is centered but not scaled.
    pub std: Vec<f64>,
}

impl ColumnStats {
    fn fit(m: &DMatrix<f64>) -> Self {
        let n = m.nrows() as f64;
        let mean: Vec<f64> = (0..m.ncols())
            .map(|c| (0..m.nrows()).map(|r| m[(r, c)]).sum::<f64>() / n)
            .collect();
        let std: Vec<f64> = (0..m.ncols())
            .map(|c| {
                let var = (0..m.nrows())
                    .map(|r| {
                        let d = m[(r, c)] - mean[c];
                        d * d
                    })
                    .sum::<f64>()
                    / n;
                var.sqrt()
            })
            .collect();
        Self { mean, std }
    }

    /// z-scores the matrix with these statistics.
    pub fn apply(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.ncols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "standardization expects {} features, got {}",
                self.mean.len(),
                m.ncols()
            )));
        }
        Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
            let centered = m[(r, c)] - self.mean[c];
            if self.std[c] > 0.0 {
                centered / self.std[c]
            } else {
                centered
            }
        }))
    }

    /// Undoes [`ColumnStats::apply`].
    pub fn invert(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.ncols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "standardization expects {} features, got {}",
                self.mean.len(),
                m.ncols()
            )));
        }
        Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
            let scaled = if self.std[c] > 0.0 { m[(r, c)] * self.std[c] } else { m[(r, c)] };
            scaled + self.mean[c]
        }))
    }
}

/// Train-fitted standardization statistics for both views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizeStats {
    pub view1: ColumnStats,
    pub view2: ColumnStats,
}

/// z-scores both datasets per feature using the training statistics only;
/// constant features are centered, not scaled.
pub fn standardize(
    train: &TwoViewDataset,
    test: &TwoViewDataset,
) -> Result<(TwoViewDataset, TwoViewDataset, StandardizeStats)> {
    let stats = StandardizeStats {
        view1: ColumnStats::fit(&train.view1),
        view2: ColumnStats::fit(&train.view2),
    };
    let train_out = TwoViewDataset {
        view1: stats.view1.apply(&train.view1)?,
        view2: stats.view2.apply(&train.view2)?,
        labels: train.labels.clone(),
    };
    let test_out = TwoViewDataset {
        view1: stats.view1.apply(&test.view1)?,
        view2: stats.view2.apply(&test.view2)?,
        labels: test.labels.clone(),
    };
    Ok((train_out, test_out, stats))
}

/// Flips exactly `⌊rate·n + 0.5⌋` labels, chosen uniformly without
/// replacement under the seed.
pub fn inject_label_noise(labels: &DVector<f64>, rate: f64, seed: u64) -> Result<DVector<f64>> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Input(format!("noise rate must lie in [0, 1], got {rate}")));
    }
    let n = labels.len();
    let count = (rate * n as f64 + 0.5).floor() as usize;
    let count = count.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, n, count);
    let mut out = labels.clone();
    for i in chosen.iter() {
        out[i] = -out[i];
    }
    Ok(out)
}

/// Synthetic two-view fixture: one Gaussian blob per class per view, class
/// means at `±separation·u` along a seeded unit direction, both views
/// independent noisy renderings of the same latent class. Labels alternate
/// +1/−1. `separation ≥ 4·noise_std` yields linearly separable samples with
/// overwhelming margin at the sizes used in tests.
pub fn make_synthetic_two_view(
    n: usize,
    separation: f64,
    noise_std: f64,
    seed: u64,
) -> Result<TwoViewDataset> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::Input(format!("n must be even and at least 4, got {n}")));
    }
    if !separation.is_finite() || separation < 0.0 {
        return Err(Error::Input(format!("separation must be nonnegative, got {separation}")));
    }
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(Error::Input(format!("noise_std must be nonnegative, got {noise_std}")));
    }
    const DIM1: usize = 4;
    const DIM2: usize = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng, dim: usize| -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    };
    let u1 = unit(&mut rng, DIM1);
    let u2 = unit(&mut rng, DIM2);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let labels = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
    let mut view1 = DMatrix::zeros(n, DIM1);
    let mut view2 = DMatrix::zeros(n, DIM2);
    for i in 0..n {
        let y = labels[i];
        for c in 0..DIM1 {
            view1[(i, c)] = y * separation * u1[c] + noise_std * normal.sample(&mut rng);
        }
        for c in 0..DIM2 {
            view2[(i, c)] = y * separation * u2[c] + noise_std * normal.sample(&mut rng);
        }
    }
    TwoViewDataset::new(view1, view2, labels)
}
