//! ADMM outer loop with closed-form coefficient updates, orthant
//! projections, and dual ascent, plus the gradient-descent inner solver for
//! the slack vectors.
//!
//! The trained objective, with Gram matrices `K1`, `K2`, label matrix
//! `Y = diag(y)` and slack vectors `ζ1`, `ζ2`, is
//!
//! ```text
//! (γ/2)·α1ᵀK1α1 + (1/2)·α2ᵀK2α2
//!   + C1·Σᵢ wave(ζ1ᵢ, yᵢ) + C2·Σᵢ wave(ζ2ᵢ, yᵢ)
//!   + D·‖K1α1 − K2α2‖²
//! ```
//!
//! subject to `Y Kv αv ≥ e − ζv` and `ζv ≥ 0`, rewritten with nonnegative
//! auxiliaries `η1..η4` into four equality constraints and solved on the
//! augmented Lagrangian. One outer iteration updates, in order: `α1`, `α2`
//! (linear solves), `ζ1`, `ζ2` (inner gradient descent), `η1..η4`
//! (projections), `ϑ1..ϑ4` (dual ascent).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{GramPair, KernelConfig};
use crate::loss::{self, WaveParams};

/// Upper bound (exclusive) for the dual step lengths: (√5 + 1) / 2.
pub const TAU_LIMIT: f64 = 1.618033988749895;

/// Every tunable scalar of the objective, the two solvers, and the kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// View-1 regularization weight γ; also weighs view 1 in the decision
    /// function. View 2 carries an implicit weight of 1.
    pub gamma: f64,
    /// Loss weight for view 1.
    pub c1: f64,
    /// Loss weight for view 2.
    pub c2: f64,
    /// Co-regularization weight on `‖K1α1 − K2α2‖²`.
    pub d: f64,
    /// Wave-loss parameters (λ1, a1) for view 1.
    pub wave1: WaveParams,
    /// Wave-loss parameters (λ2, a2) for view 2.
    pub wave2: WaveParams,
    /// Gaussian kernel width for view 1.
    pub kernel1: KernelConfig,
    /// Gaussian kernel width for view 2.
    pub kernel2: KernelConfig,
    /// ADMM penalty for the view-1 margin constraint.
    pub kappa1: f64,
    /// ADMM penalty for the view-2 margin constraint.
    pub kappa2: f64,
    /// ADMM penalty for the view-1 slack-nonnegativity constraint.
    pub kappa3: f64,
    /// ADMM penalty for the view-2 slack-nonnegativity constraint.
    pub kappa4: f64,
    /// Dual step length for view-1 multipliers, in (0, (√5+1)/2).
    pub tau1: f64,
    /// Dual step length for view-2 multipliers, in (0, (√5+1)/2).
    pub tau2: f64,
    /// Initial step size δ of the inner gradient descent.
    pub gd_rate: f64,
    /// Outer (ADMM) iteration cap.
    pub t1_max: usize,
    /// Inner (gradient descent) iteration cap per outer iteration.
    pub t2_max: usize,
    /// Stop when the relative objective change falls below this...
    pub tol_obj: f64,
    /// ...and the largest primal residual ∞-norm falls below this.
    pub tol_res: f64,
    /// Inner loop stops once `‖∇‖∞` falls below this.
    pub tol_grad: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            c1: 1.0,
            c2: 1.0,
            d: 0.25,
            wave1: WaveParams { lambda: 1.0, a: 1.0 },
            wave2: WaveParams { lambda: 1.0, a: 1.0 },
            kernel1: KernelConfig { sigma: 1.0 },
            kernel2: KernelConfig { sigma: 1.0 },
            kappa1: 1.0,
            kappa2: 1.0,
            kappa3: 1.0,
            kappa4: 1.0,
            tau1: 1.0,
            tau2: 1.0,
            gd_rate: 1e-2,
            t1_max: 500,
            t2_max: 50,
            tol_obj: 1e-6,
            tol_res: 1e-4,
            tol_grad: 1e-6,
        }
    }
}

impl Hyperparams {
    /// Checks every positivity and interval constraint.
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("gamma", self.gamma),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("kappa3", self.kappa3),
            ("kappa4", self.kappa4),
            ("gd_rate", self.gd_rate),
            ("tol_obj", self.tol_obj),
            ("tol_res", self.tol_res),
            ("tol_grad", self.tol_grad),
        ];
        for (name, v) in positives {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Input(format!("{name} must be positive, got {v}")));
            }
        }
        // Zero loss or coupling weights are legitimate (they switch the term
        // off); negative ones are not.
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("d", self.d)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Input(format!("{name} must be nonnegative, got {v}")));
            }
        }
        for (name, v) in [("tau1", self.tau1), ("tau2", self.tau2)] {
            if !(v > 0.0 && v < TAU_LIMIT) {
                return Err(Error::Input(format!(
                    "{name} must lie in (0, {TAU_LIMIT}), got {v}"
                )));
            }
        }
        if self.t1_max == 0 || self.t2_max == 0 {
            return Err(Error::Input("iteration caps must be positive".into()));
        }
        self.wave1.validate()?;
        self.wave2.validate()?;
        self.kernel1.validate()?;
        self.kernel2.validate()?;
        Ok(())
    }
}

/// The full ADMM variable set plus iteration bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub alpha1: DVector<f64>,
    pub alpha2: DVector<f64>,
    pub zeta1: DVector<f64>,
    pub zeta2: DVector<f64>,
    pub eta1: DVector<f64>,
    pub eta2: DVector<f64>,
    pub eta3: DVector<f64>,
    pub eta4: DVector<f64>,
    pub theta1: DVector<f64>,
    pub theta2: DVector<f64>,
    pub theta3: DVector<f64>,
    pub theta4: DVector<f64>,
    pub iter: usize,
    pub objective: f64,
}

impl SolverState {
    /// Zero initialization; feasible for all projections.
    pub fn zeros(n: usize) -> Self {
        let z = || DVector::zeros(n);
        Self {
            alpha1: z(),
            alpha2: z(),
            zeta1: z(),
            zeta2: z(),
            eta1: z(),
            eta2: z(),
            eta3: z(),
            eta4: z(),
            theta1: z(),
            theta2: z(),
            theta3: z(),
            theta4: z(),
            iter: 0,
            objective: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.alpha1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha1.is_empty()
    }
}

/// One recorded outer iteration: objective value and the ∞-norms of the four
/// primal equality-constraint residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    pub res1: f64,
    pub res2: f64,
    pub res3: f64,
    pub res4: f64,
}

impl TraceRecord {
    pub fn max_residual(&self) -> f64 {
        self.res1.max(self.res2).max(self.res3).max(self.res4)
    }
}

/// Per-iteration convergence records, exportable as CSV.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first_objective(&self) -> Option<f64> {
        self.records.first().map(|r| r.objective)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }

    /// Six columns with a header row: iter, objective, res1..res4.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("iter,objective,res1,res2,res3,res4\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iter, r.objective, r.res1, r.res2, r.res3, r.res4
            ));
        }
        out
    }

    pub fn write_csv<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

fn check_labels(labels: &DVector<f64>) -> Result<()> {
    for &y in labels.iter() {
        if y != 1.0 && y != -1.0 {
            return Err(Error::Input(format!("labels must be +1 or -1, got {y}")));
        }
    }
    Ok(())
}

fn check_dims(grams: &GramPair, labels: &DVector<f64>, n: usize) -> Result<()> {
    if grams.k1.nrows() != n || grams.k1.ncols() != n || grams.k2.nrows() != n || grams.k2.ncols() != n
    {
        return Err(Error::Shape(format!(
            "Gram matrices must be {n}x{n}, got {}x{} and {}x{}",
            grams.k1.nrows(),
            grams.k1.ncols(),
            grams.k2.nrows(),
            grams.k2.ncols()
        )));
    }
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "labels length {} does not match sample count {n}",
            labels.len()
        )));
    }
    check_labels(labels)
}

/// `y ∘ (K α) − e`, the margin part of the view-v equality constraint.
fn margin_base(k: &DMatrix<f64>, alpha: &DVector<f64>, labels: &DVector<f64>) -> DVector<f64> {
    let ka = k * alpha;
    DVector::from_fn(labels.len(), |i, _| labels[i] * ka[i] - 1.0)
}

/// The training objective (see the module docs) at the given variables.
pub fn objective(
    alpha1: &DVector<f64>,
    alpha2: &DVector<f64>,
    zeta1: &DVector<f64>,
    zeta2: &DVector<f64>,
    grams: &GramPair,
    labels: &DVector<f64>,
    hp: &Hyperparams,
) -> Result<f64> {
    let n = alpha1.len();
    if alpha2.len() != n || zeta1.len() != n || zeta2.len() != n {
        return Err(Error::Shape("objective arguments disagree on length".into()));
    }
    check_dims(grams, labels, n)?;
    let k1a1 = &grams.k1 * alpha1;
    let k2a2 = &grams.k2 * alpha2;
    let quad = 0.5 * hp.gamma * alpha1.dot(&k1a1) + 0.5 * alpha2.dot(&k2a2);
    let mut loss_sum = 0.0;
    for i in 0..n {
        loss_sum += hp.c1 * loss::loss_raw(zeta1[i], hp.wave1.lambda, hp.wave1.a * labels[i]);
        loss_sum += hp.c2 * loss::loss_raw(zeta2[i], hp.wave2.lambda, hp.wave2.a * labels[i]);
    }
    let coupling = (&k1a1 - &k2a2).norm_squared();
    Ok(quad + loss_sum + hp.d * coupling)
}

/// Factorized system matrix for one view's coefficient update. The matrix
/// `γv·Kv + (2D + κv)·Kv²` is constant across ADMM iterations, so it is
/// factorized once per fit and reused.
pub struct AlphaUpdate {
    system: DMatrix<f64>,
    factor: Factor,
}

enum Factor {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl AlphaUpdate {
    /// Builds and factorizes `γv·Kv + (2D + κv)·Kv²`; falls back to a ridge
    /// jitter of `1e-8·I` and then to full-pivot LU when the Cholesky
    /// factorization fails.
    pub fn new(k: &DMatrix<f64>, gamma_v: f64, d: f64, kappa_v: f64) -> Result<Self> {
        let k2 = k * k;
        let system = k * gamma_v + k2 * (2.0 * d + kappa_v);
        if let Some(chol) = nalgebra::Cholesky::new(system.clone()) {
            return Ok(Self { system, factor: Factor::Cholesky(chol) });
        }
        let jittered = &system + DMatrix::identity(k.nrows(), k.nrows()) * 1e-8;
        if let Some(chol) = nalgebra::Cholesky::new(jittered.clone()) {
            return Ok(Self { system: jittered, factor: Factor::Cholesky(chol) });
        }
        let lu = jittered.clone().full_piv_lu();
        if !lu.is_invertible() {
            return Err(Error::Numerical(
                "coefficient system is singular even after ridge jitter".into(),
            ));
        }
        Ok(Self { system: jittered, factor: Factor::Lu(lu) })
    }

    fn solve_once(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.factor {
            Factor::Cholesky(c) => Ok(c.solve(rhs)),
            Factor::Lu(lu) => lu
                .solve(rhs)
                .ok_or_else(|| Error::Numerical("LU solve failed on coefficient system".into())),
        }
    }

    /// Solves the system with one step of iterative refinement and verifies
    /// the residual against `1e-10 · (1 + ‖rhs‖)`.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let mut x = self.solve_once(rhs)?;
        let tol = 1e-10 * (1.0 + rhs.norm());
        let residual = rhs - &self.system * &x;
        if residual.norm() > tol {
            x += self.solve_once(&residual)?;
        }
        let res_norm = (rhs - &self.system * &x).norm();
        if res_norm > tol {
            return Err(Error::Numerical(format!(
                "coefficient solve residual {res_norm:e} exceeds tolerance {tol:e} \
                 (system size {}, rhs norm {:e})",
                rhs.len(),
                rhs.norm()
            )));
        }
        Ok(x)
    }

    /// The assembled system matrix (for residual checks).
    pub fn system(&self) -> &DMatrix<f64> {
        &self.system
    }
}

fn alpha1_rhs(
    state: &SolverState,
    grams: &GramPair,
    labels: &DVector<f64>,
    hp: &Hyperparams,
) -> DVector<f64> {
    // K1 · (2D·K2α2 − y∘ϑ1 + κ1·y∘(e − ζ1 + η1))
    let k2a2 = &grams.k2 * &state.alpha2;
    let inner = DVector::from_fn(labels.len(), |i, _| {
        2.0 * hp.d * k2a2[i] - labels[i] * state.theta1[i]
            + hp.kappa1 * labels[i] * (1.0 - state.zeta1[i] + state.eta1[i])
    });
    &grams.k1 * inner
}

fn alpha2_rhs(
    state: &SolverState,
    grams: &GramPair,
    labels: &DVector<f64>,
    hp: &Hyperparams,
) -> DVector<f64> {
    let k1a1 = &grams.k1 * &state.alpha1;
    let inner = DVector::from_fn(labels.len(), |i, _| {
        2.0 * hp.d * k1a1[i] - labels[i] * state.theta2[i]
            + hp.kappa2 * labels[i] * (1.0 - state.zeta2[i] + state.eta2[i])
    });
    &grams.k2 * inner
}

/// The view-1 coefficient update: solves
/// `(γ·K1 + (2D + κ1)·K1²) α = K1·(2D·K2α2 − Yϑ1 + κ1·Y(e − ζ1 + η1))`.
pub fn update_alpha1(
    state: &SolverState,
    grams: &GramPair,
    labels: &DVector<f64>,
    hp: &Hyperparams,
) -> Result<DVector<f64>> {
    hp.validate()?;
    check_dims(grams, labels, state.len())?;
    let update = AlphaUpdate::new(&grams.k1, hp.gamma, hp.d, hp.kappa1)?;
    update.solve(&alpha1_rhs(state, grams, labels, hp))
}

/// The view-2 coefficient update; mirror of [`update_alpha1`] with
/// `(K2, κ2, ϑ2, ζ2, η2)`, unit regularization weight, and coupling against
/// the freshly updated `α1`.
pub fn update_alpha2(
    state: &SolverState,
    grams: &GramPair,
    labels: &DVector<f64>,
    hp: &Hyperparams,
) -> Result<DVector<f64>> {
    hp.validate()?;
    check_dims(grams, labels, state.len())?;
    let update = AlphaUpdate::new(&grams.k2, 1.0, hp.d, hp.kappa2)?;
    update.solve(&alpha2_rhs(state, grams, labels, hp))
}

/// Everything the inner slack solver needs that stays fixed while ζ moves.
struct ZetaProblem<'a> {
    base1: DVector<f64>, // y∘(K1α1) − e
    base2: DVector<f64>,
    labels: &'a DVector<f64>,
    state: &'a SolverState,
    hp: &'a Hyperparams,
}

impl<'a> ZetaProblem<'a> {
    fn new(
        state: &'a SolverState,
        grams: &GramPair,
        labels: &'a DVector<f64>,
        hp: &'a Hyperparams,
    ) -> Self {
        Self {
            base1: margin_base(&grams.k1, &state.alpha1, labels),
            base2: margin_base(&grams.k2, &state.alpha2, labels),
            labels,
            state,
            hp,
        }
    }

    /// The inner objective: loss terms plus every Lagrangian term touching ζ.
    fn value(&self, zeta1: &DVector<f64>, zeta2: &DVector<f64>) -> f64 {
        let hp = self.hp;
        let st = self.state;
        let mut total = 0.0;
        for i in 0..zeta1.len() {
            let y = self.labels[i];
            total += hp.c1 * loss::loss_raw(zeta1[i], hp.wave1.lambda, hp.wave1.a * y);
            total += hp.c2 * loss::loss_raw(zeta2[i], hp.wave2.lambda, hp.wave2.a * y);
            let r1 = self.base1[i] + zeta1[i] - st.eta1[i];
            let r2 = self.base2[i] + zeta2[i] - st.eta2[i];
            let r3 = zeta1[i] - st.eta3[i];
            let r4 = zeta2[i] - st.eta4[i];
            total += st.theta1[i] * r1 + st.theta2[i] * r2;
            total += st.theta3[i] * r3 + st.theta4[i] * r4;
            total += 0.5 * hp.kappa1 * r1 * r1 + 0.5 * hp.kappa2 * r2 * r2;
            total += 0.5 * hp.kappa3 * r3 * r3 + 0.5 * hp.kappa4 * r4 * r4;
        }
        total
    }

    fn gradient(&self, zeta1: &DVector<f64>, zeta2: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let hp = self.hp;
        let st = self.state;
        let n = zeta1.len();
        let mut g1 = DVector::zeros(n);
        let mut g2 = DVector::zeros(n);
        for i in 0..n {
            let y = self.labels[i];
            g1[i] = hp.c1 * loss::grad_raw(zeta1[i], hp.wave1.lambda, hp.wave1.a * y)
                + st.theta1[i]
                + st.theta3[i]
                + hp.kappa1 * (self.base1[i] + zeta1[i] - st.eta1[i])
                + hp.kappa3 * (zeta1[i] - st.eta3[i]);
            g2[i] = hp.c2 * loss::grad_raw(zeta2[i], hp.wave2.lambda, hp.wave2.a * y)
                + st.theta2[i]
                + st.theta4[i]
                + hp.kappa2 * (self.base2[i] + zeta2[i] - st.eta2[i])
                + hp.kappa4 * (zeta2[i] - st.eta4[i]);
        }
        (g1, g2)
    }
}

/// The inner objective the gradient descent minimizes, evaluated at the
/// given slack vectors with everything else taken from `state`.
pub fn zeta_objective(
    zeta1: &DVector<f64>,
    zeta2: &DVector<f64>,
    state: &SolverState,
    grams: &GramPair,
    labels: &DVector<f64>,
    hp: &Hyperparams,
) -> Result<f64> {
    check_dims(grams, labels, state.len())?;
    if zeta1.len() != state.len() || zeta2.len() != state.len() {
        return Err(Error::Shape("slack vectors disagree with state length".into()));
    }
    Ok(ZetaProblem::new(state, grams, labels, hp).value(zeta1, zeta2))
}

/// Gradient of the inner objective with respect to `(ζ1, ζ2)`:
///
/// ```text
/// ∇ζv = Cv·wave'(ζv, y) + ϑv + ϑ(v+2)
///       + κv·(y∘(Kvαv) − e + ζv − ηv) + κ(v+2)·(ζv − η(v+2))
/// ```
pub fn zeta_gradient(
    zeta1: &DVector<f64>,
    zeta2: &DVector<f64>,
    state: &SolverState,
    grams: &GramPair,
    labels: &DVector<f64>,
    hp: &Hyperparams,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_dims(grams, labels, state.len())?;
    if zeta1.len() != state.len() || zeta2.len() != state.len() {
        return Err(Error::Shape("slack vectors disagree with state length".into()));
    }
    Ok(ZetaProblem::new(state, grams, labels, hp).gradient(zeta1, zeta2))
}

/// Inner gradient descent on the slack vectors, starting from the state's
/// current `(ζ1, ζ2)`.
///
/// Runs `ζ ← ζ − δ·∇` for at most `t2_max` steps or until `‖∇‖∞ ≤ tol_grad`.
/// Each step starts from `δ = gd_rate` and halves it (up to 30 times) until
/// the inner objective does not increase, so the returned slacks never make
/// the inner objective worse.
pub fn gd_zeta(
    state: &SolverState,
    grams: &GramPair,
    labels: &DVector<f64>,
    hp: &Hyperparams,
) -> Result<(DVector<f64>, DVector<f64>)> {
    hp.validate()?;
    check_dims(grams, labels, state.len())?;
    let problem = ZetaProblem::new(state, grams, labels, hp);
    let mut z1 = state.zeta1.clone();
    let mut z2 = state.zeta2.clone();
    let mut value = problem.value(&z1, &z2);
    if !value.is_finite() {
        return Err(Error::Numerical(format!(
            "inner objective is not finite at the starting slacks: {value}"
        )));
    }
    for _ in 0..hp.t2_max {
        let (g1, g2) = problem.gradient(&z1, &z2);
        let grad_inf = g1.amax().max(g2.amax());
        if grad_inf <= hp.tol_grad {
            break;
        }
        let mut step = hp.gd_rate;
        let mut accepted = false;
        for _ in 0..=30 {
            let cand1 = &z1 - &g1 * step;
            let cand2 = &z2 - &g2 * step;
            let cand_value = problem.value(&cand1, &cand2);
            if !cand_value.is_finite() {
                return Err(Error::Numerical(format!(
                    "inner objective became non-finite during descent: {cand_value}"
                )));
            }
            if cand_value <= value {
                z1 = cand1;
                z2 = cand2;
                value = cand_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break; // no step length improves: already at numerical stationarity
        }
    }
    Ok((z1, z2))
}

/// Orthant projections of the four auxiliary vectors:
///
/// ```text
/// η1 = Π₊(ϑ1/κ1 + y∘(K1α1) − e + ζ1)    η3 = Π₊(ϑ3/κ3 + ζ1)
/// η2 = Π₊(ϑ2/κ2 + y∘(K2α2) − e + ζ2)    η4 = Π₊(ϑ4/κ4 + ζ2)
/// ```
pub fn update_eta(
    state: &SolverState,
    grams: &GramPair,
    labels: &DVector<f64>,
    hp: &Hyperparams,
) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
    hp.validate()?;
    check_dims(grams, labels, state.len())?;
    let base1 = margin_base(&grams.k1, &state.alpha1, labels);
    let base2 = margin_base(&grams.k2, &state.alpha2, labels);
    let n = state.len();
    let proj = |v: f64| v.max(0.0);
    let eta1 = DVector::from_fn(n, |i, _| {
        proj(state.theta1[i] / hp.kappa1 + base1[i] + state.zeta1[i])
    });
    let eta2 = DVector::from_fn(n, |i, _| {
        proj(state.theta2[i] / hp.kappa2 + base2[i] + state.zeta2[i])
    });
    let eta3 = DVector::from_fn(n, |i, _| proj(state.theta3[i] / hp.kappa3 + state.zeta1[i]));
    let eta4 = DVector::from_fn(n, |i, _| proj(state.theta4[i] / hp.kappa4 + state.zeta2[i]));
    Ok((eta1, eta2, eta3, eta4))
}

/// Dual ascent on the four multiplier vectors:
///
/// ```text
/// ϑ1 += τ1·κ1·(y∘(K1α1) − e + ζ1 − η1)    ϑ3 += τ1·κ3·(ζ1 − η3)
/// ϑ2 += τ2·κ2·(y∘(K2α2) − e + ζ2 − η2)    ϑ4 += τ2·κ4·(ζ2 − η4)
/// ```
pub fn update_duals(
    state: &SolverState,
    grams: &GramPair,
    labels: &DVector<f64>,
    hp: &Hyperparams,
) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
    hp.validate()?;
    check_dims(grams, labels, state.len())?;
    let base1 = margin_base(&grams.k1, &state.alpha1, labels);
    let base2 = margin_base(&grams.k2, &state.alpha2, labels);
    let n = state.len();
    let theta1 = DVector::from_fn(n, |i, _| {
        state.theta1[i] + hp.tau1 * hp.kappa1 * (base1[i] + state.zeta1[i] - state.eta1[i])
    });
    let theta2 = DVector::from_fn(n, |i, _| {
        state.theta2[i] + hp.tau2 * hp.kappa2 * (base2[i] + state.zeta2[i] - state.eta2[i])
    });
    let theta3 = DVector::from_fn(n, |i, _| {
        state.theta3[i] + hp.tau1 * hp.kappa3 * (state.zeta1[i] - state.eta3[i])
    });
    let theta4 = DVector::from_fn(n, |i, _| {
        state.theta4[i] + hp.tau2 * hp.kappa4 * (state.zeta2[i] - state.eta4[i])
    });
    Ok((theta1, theta2, theta3, theta4))
}

/// Relative-change test used by the stopping rule and the trace consumers.
pub fn relative_change(current: f64, previous: f64) -> f64 {
    (current - previous).abs() / previous.abs().max(1.0)
}

/// Runs the full ADMM loop from the zero initialization.
///
/// Stops when the relative objective change drops below `tol_obj` while the
/// largest primal residual ∞-norm is below `tol_res`, or after `t1_max`
/// iterations. A trace record is written every iteration. Divergence
/// (objective above `1e6·initial + 1e6` or non-finite) aborts with the trace
/// attached.
pub fn admm_solve(
    grams: &GramPair,
    labels: &DVector<f64>,
    hp: &Hyperparams,
) -> Result<(SolverState, ConvergenceTrace)> {
    hp.validate()?;
    let n = grams.len();
    if n == 0 {
        return Err(Error::Shape("cannot solve with zero samples".into()));
    }
    check_dims(grams, labels, n)?;

    let update1 = AlphaUpdate::new(&grams.k1, hp.gamma, hp.d, hp.kappa1)?;
    let update2 = AlphaUpdate::new(&grams.k2, 1.0, hp.d, hp.kappa2)?;

    let mut state = SolverState::zeros(n);
    let mut trace = ConvergenceTrace::default();
    let mut previous_objective = f64::NAN;

    for t in 1..=hp.t1_max {
        state.alpha1 = update1.solve(&alpha1_rhs(&state, grams, labels, hp))?;
        state.alpha2 = update2.solve(&alpha2_rhs(&state, grams, labels, hp))?;

        let (z1, z2) = gd_zeta(&state, grams, labels, hp)?;
        state.zeta1 = z1;
        state.zeta2 = z2;

        let (e1, e2, e3, e4) = update_eta(&state, grams, labels, hp)?;
        state.eta1 = e1;
        state.eta2 = e2;
        state.eta3 = e3;
        state.eta4 = e4;

        let (t1, t2, t3, t4) = update_duals(&state, grams, labels, hp)?;
        state.theta1 = t1;
        state.theta2 = t2;
        state.theta3 = t3;
        state.theta4 = t4;

        let obj = objective(
            &state.alpha1,
            &state.alpha2,
            &state.zeta1,
            &state.zeta2,
            grams,
            labels,
            hp,
        )?;
        let base1 = margin_base(&grams.k1, &state.alpha1, labels);
        let base2 = margin_base(&grams.k2, &state.alpha2, labels);
        let record = TraceRecord {
            iter: t,
            objective: obj,
            res1: (&base1 + &state.zeta1 - &state.eta1).amax(),
            res2: (&base2 + &state.zeta2 - &state.eta2).amax(),
            res3: (&state.zeta1 - &state.eta3).amax(),
            res4: (&state.zeta2 - &state.eta4).amax(),
        };
        trace.records.push(record);
        state.iter = t;
        state.objective = obj;

        let initial = trace.first_objective().unwrap_or(obj);
        if !obj.is_finite() || obj > 1e6 * initial.abs() + 1e6 {
            return Err(Error::Divergence { iter: t, objective: obj, trace });
        }

        if t >= 2
            && relative_change(obj, previous_objective) < hp.tol_obj
            && record.max_residual() < hp.tol_res
        {
            break;
        }
        previous_objective = obj;
    }
    Ok((state, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::gram_matrix;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_grams() -> GramPair {
        GramPair { k1: dmatrix![1.0], k2: dmatrix![1.0] }
    }

    fn random_instance(n: usize, seed: u64) -> (GramPair, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x1 = DMatrix::from_fn(n, 3, |_, _| rng.random_range(-2.0..2.0));
        let x2 = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-2.0..2.0));
        let cfg = KernelConfig { sigma: 1.0 };
        let grams = GramPair {
            k1: gram_matrix(&x1, &cfg).unwrap(),
            k2: gram_matrix(&x2, &cfg).unwrap(),
        };
        let labels =
            DVector::from_fn(n, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        (grams, labels)
    }

    fn random_state(n: usize, seed: u64) -> SolverState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = || DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut state = SolverState::zeros(n);
        state.alpha1 = v();
        state.alpha2 = v();
        state.zeta1 = v();
        state.zeta2 = v();
        state.eta1 = v().map(f64::abs);
        state.eta2 = v().map(f64::abs);
        state.eta3 = v().map(f64::abs);
        state.eta4 = v().map(f64::abs);
        state.theta1 = v();
        state.theta2 = v();
        state.theta3 = v();
        state.theta4 = v();
        state
    }

    /// Naive summation oracle for the training objective: explicit loops,
    /// no shared code with the implementation's matrix path.
    fn naive_objective(
        a1: &DVector<f64>,
        a2: &DVector<f64>,
        z1: &DVector<f64>,
        z2: &DVector<f64>,
        grams: &GramPair,
        labels: &DVector<f64>,
        hp: &Hyperparams,
    ) -> f64 {
        let n = a1.len();
        let mut quad1 = 0.0;
        let mut quad2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad1 += a1[i] * grams.k1[(i, j)] * a1[j];
                quad2 += a2[i] * grams.k2[(i, j)] * a2[j];
            }
        }
        let mut losses = 0.0;
        for i in 0..n {
            losses += hp.c1
                * crate::loss::labeled_wave_loss(z1[i], labels[i], &hp.wave1).unwrap();
            losses += hp.c2
                * crate::loss::labeled_wave_loss(z2[i], labels[i], &hp.wave2).unwrap();
        }
        let mut coupling = 0.0;
        for i in 0..n {
            let mut k1a = 0.0;
            let mut k2a = 0.0;
            for j in 0..n {
                k1a += grams.k1[(i, j)] * a1[j];
                k2a += grams.k2[(i, j)] * a2[j];
            }
            coupling += (k1a - k2a) * (k1a - k2a);
        }
        0.5 * hp.gamma * quad1 + 0.5 * quad2 + losses + hp.d * coupling
    }

    /// The full augmented Lagrangian, written naively; the oracle for the
    /// coefficient updates (their argmin property) via finite differences.
    fn aug_lagrangian(
        a1: &DVector<f64>,
        a2: &DVector<f64>,
        st: &SolverState,
        grams: &GramPair,
        labels: &DVector<f64>,
        hp: &Hyperparams,
    ) -> f64 {
        let base = naive_objective(a1, a2, &st.zeta1, &st.zeta2, grams, labels, hp);
        let n = a1.len();
        let mut extra = 0.0;
        for i in 0..n {
            let mut k1a = 0.0;
            let mut k2a = 0.0;
            for j in 0..n {
                k1a += grams.k1[(i, j)] * a1[j];
                k2a += grams.k2[(i, j)] * a2[j];
            }
            let r1 = labels[i] * k1a - 1.0 + st.zeta1[i] - st.eta1[i];
            let r2 = labels[i] * k2a - 1.0 + st.zeta2[i] - st.eta2[i];
            let r3 = st.zeta1[i] - st.eta3[i];
            let r4 = st.zeta2[i] - st.eta4[i];
            extra += st.theta1[i] * r1 + 0.5 * hp.kappa1 * r1 * r1;
            extra += st.theta2[i] * r2 + 0.5 * hp.kappa2 * r2 * r2;
            extra += st.theta3[i] * r3 + 0.5 * hp.kappa3 * r3 * r3;
            extra += st.theta4[i] * r4 + 0.5 * hp.kappa4 * r4 * r4;
        }
        base + extra
    }

    #[test]
    fn objective_is_zero_at_the_origin() {
        let (grams, labels) = random_instance(6, 1);
        let z = DVector::zeros(6);
        let hp = Hyperparams::default();
        let v = objective(&z, &z, &z, &z, &grams, &labels, &hp).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn objective_hand_case() {
        // n=1: (γ/2)·1 + 0 + 0 + D·(1 − 0)² = 1 + 1 = 2 with γ=2, D=1.
        let grams = unit_grams();
        let labels = DVector::from_element(1, 1.0);
        let hp = Hyperparams { gamma: 2.0, d: 1.0, ..Default::default() };
        let a1 = DVector::from_element(1, 1.0);
        let a2 = DVector::zeros(1);
        let z = DVector::zeros(1);
        let v = objective(&a1, &a2, &z, &z, &grams, &labels, &hp).unwrap();
        assert!((v - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn objective_matches_naive_oracle() {
        let (grams, labels) = random_instance(7, 3);
        let st = random_state(7, 4);
        let hp = Hyperparams { gamma: 0.7, c1: 1.3, c2: 0.4, d: 0.9, ..Default::default() };
        let fast = objective(&st.alpha1, &st.alpha2, &st.zeta1, &st.zeta2, &grams, &labels, &hp)
            .unwrap();
        let naive =
            naive_objective(&st.alpha1, &st.alpha2, &st.zeta1, &st.zeta2, &grams, &labels, &hp);
        assert!((fast - naive).abs() <= 1e-10, "{fast} vs {naive}");
    }

    #[test]
    fn alpha1_update_with_zero_rhs_is_zero() {
        let (grams, labels) = random_instance(5, 7);
        let mut st = SolverState::zeros(5);
        st.zeta1 = DVector::from_element(5, 1.0); // e − ζ1 + η1 = 0
        let hp = Hyperparams { d: 0.0, ..Default::default() };
        let a = update_alpha1(&st, &grams, &labels, &hp).unwrap();
        assert!(a.amax() <= 1e-12);
    }

    #[test]
    fn alpha1_update_hand_case() {
        // n=1, K=[1], γ=1, D=0, κ1=1, y=+1: system 2α = 1.
        let grams = unit_grams();
        let labels = DVector::from_element(1, 1.0);
        let st = SolverState::zeros(1);
        let hp = Hyperparams { gamma: 1.0, d: 0.0, kappa1: 1.0, ..Default::default() };
        let a = update_alpha1(&st, &grams, &labels, &hp).unwrap();
        assert!((a[0] - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn alpha_updates_leave_tiny_system_residuals() {
        let (grams, labels) = random_instance(5, 11);
        let st = random_state(5, 12);
        let hp = Hyperparams { gamma: 1.4, d: 0.6, kappa1: 2.0, kappa2: 0.7, ..Default::default() };

        let a1 = update_alpha1(&st, &grams, &labels, &hp).unwrap();
        let system1 = &grams.k1 * hp.gamma + (&grams.k1 * &grams.k1) * (2.0 * hp.d + hp.kappa1);
        let rhs1 = alpha1_rhs(&st, &grams, &labels, &hp);
        let res1 = (&rhs1 - &system1 * &a1).norm();
        assert!(res1 <= 1e-10 * (1.0 + rhs1.norm()), "residual {res1}");

        let a2 = update_alpha2(&st, &grams, &labels, &hp).unwrap();
        let system2 = &grams.k2 * 1.0 + (&grams.k2 * &grams.k2) * (2.0 * hp.d + hp.kappa2);
        let rhs2 = alpha2_rhs(&st, &grams, &labels, &hp);
        let res2 = (&rhs2 - &system2 * &a2).norm();
        assert!(res2 <= 1e-10 * (1.0 + rhs2.norm()), "residual {res2}");
    }

    #[test]
    fn alpha_updates_minimize_the_lagrangian() {
        // Finite-difference oracle: the updated coefficients must be a
        // stationary point of the augmented Lagrangian in each block.
        let (grams, labels) = random_instance(5, 21);
        let st = random_state(5, 22);
        let hp = Hyperparams { gamma: 0.8, d: 0.5, kappa1: 1.3, kappa2: 0.9, ..Default::default() };
        let a1 = update_alpha1(&st, &grams, &labels, &hp).unwrap();
        let a2 = update_alpha2(&st, &grams, &labels, &hp).unwrap();
        let h = 1e-6;
        for i in 0..5 {
            let mut up = a1.clone();
            let mut dn = a1.clone();
            up[i] += h;
            dn[i] -= h;
            let d1 = (aug_lagrangian(&up, &st.alpha2, &st, &grams, &labels, &hp)
                - aug_lagrangian(&dn, &st.alpha2, &st, &grams, &labels, &hp))
                / (2.0 * h);
            assert!(d1.abs() <= 1e-6, "∂L/∂α1[{i}] = {d1}");

            let mut up = a2.clone();
            let mut dn = a2.clone();
            up[i] += h;
            dn[i] -= h;
            let d2 = (aug_lagrangian(&st.alpha1, &up, &st, &grams, &labels, &hp)
                - aug_lagrangian(&st.alpha1, &dn, &st, &grams, &labels, &hp))
                / (2.0 * h);
            assert!(d2.abs() <= 1e-6, "∂L/∂α2[{i}] = {d2}");
        }
    }

    #[test]
    fn alpha2_decouples_from_alpha1_without_coupling() {
        let (grams, labels) = random_instance(5, 31);
        let mut st = random_state(5, 32);
        let hp = Hyperparams { d: 0.0, ..Default::default() };
        let first = update_alpha2(&st, &grams, &labels, &hp).unwrap();
        st.alpha1 = DVector::from_element(5, 42.0);
        let second = update_alpha2(&st, &grams, &labels, &hp).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn zeta_gradient_matches_finite_differences() {
        let (grams, labels) = random_instance(6, 41);
        let st = random_state(6, 42);
        let hp = Hyperparams { c1: 1.7, c2: 0.6, kappa3: 1.4, kappa4: 0.8, ..Default::default() };
        let z1 = st.zeta1.clone();
        let z2 = st.zeta2.clone();
        let (g1, g2) = zeta_gradient(&z1, &z2, &st, &grams, &labels, &hp).unwrap();
        let h = 1e-5;
        for i in 0..6 {
            let mut up = z1.clone();
            let mut dn = z1.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (zeta_objective(&up, &z2, &st, &grams, &labels, &hp).unwrap()
                - zeta_objective(&dn, &z2, &st, &grams, &labels, &hp).unwrap())
                / (2.0 * h);
            let scale = fd.abs().max(g1[i].abs()).max(1.0);
            assert!((fd - g1[i]).abs() <= 1e-6 * scale, "view1[{i}]: {fd} vs {}", g1[i]);

            let mut up = z2.clone();
            let mut dn = z2.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (zeta_objective(&z1, &up, &st, &grams, &labels, &hp).unwrap()
                - zeta_objective(&z1, &dn, &st, &grams, &labels, &hp).unwrap())
                / (2.0 * h);
            let scale = fd.abs().max(g2[i].abs()).max(1.0);
            assert!((fd - g2[i]).abs() <= 1e-6 * scale, "view2[{i}]: {fd} vs {}", g2[i]);
        }
    }

    #[test]
    fn zeta_gradient_vanishes_when_every_term_does() {
        // C1 = C2 = 0, ϑ = 0, η3 = ζ1, η4 = ζ2, and y∘(Kα) = e − ζ make
        // every summand of the gradient zero.
        let (grams, labels) = random_instance(5, 51);
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let zeta1 = DVector::from_fn(5, |_, _| rng.random_range(0.0..1.0));
        let zeta2 = DVector::from_fn(5, |_, _| rng.random_range(0.0..1.0));
        let mut st = SolverState::zeros(5);
        // Solve Kv αv = y ∘ (e − ζv) so the margin base equals −ζv.
        let target1 = DVector::from_fn(5, |i, _| labels[i] * (1.0 - zeta1[i]));
        let target2 = DVector::from_fn(5, |i, _| labels[i] * (1.0 - zeta2[i]));
        st.alpha1 = grams.k1.clone().full_piv_lu().solve(&target1).unwrap();
        st.alpha2 = grams.k2.clone().full_piv_lu().solve(&target2).unwrap();
        st.zeta1 = zeta1.clone();
        st.zeta2 = zeta2.clone();
        st.eta3 = zeta1.clone();
        st.eta4 = zeta2.clone();
        let mut hp = Hyperparams::default();
        hp.c1 = 0.0;
        hp.c2 = 0.0;
        let (g1, g2) = zeta_gradient(&zeta1, &zeta2, &st, &grams, &labels, &hp).unwrap();
        assert!(g1.amax() <= 1e-9, "{}", g1.amax());
        assert!(g2.amax() <= 1e-9, "{}", g2.amax());
    }

    /// Per-coordinate bisection on the gradient: the inner objective is
    /// separable across coordinates, so each stationary slack solves a 1-D
    /// first-order condition.
    fn stationary_zetas(
        st: &SolverState,
        grams: &GramPair,
        labels: &DVector<f64>,
        hp: &Hyperparams,
    ) -> (DVector<f64>, DVector<f64>) {
        let n = st.len();
        let mut z1 = st.zeta1.clone();
        let mut z2 = st.zeta2.clone();
        for view in 0..2 {
            for i in 0..n {
                let grad_at = |v: f64, z1: &mut DVector<f64>, z2: &mut DVector<f64>| {
                    if view == 0 { z1[i] = v } else { z2[i] = v };
                    let (g1, g2) = zeta_gradient(z1, z2, st, grams, labels, hp).unwrap();
                    if view == 0 { g1[i] } else { g2[i] }
                };
                let mut lo = -50.0;
                let mut hi = 50.0;
                assert!(grad_at(lo, &mut z1, &mut z2) < 0.0);
                assert!(grad_at(hi, &mut z1, &mut z2) > 0.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if grad_at(mid, &mut z1, &mut z2) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let v = 0.5 * (lo + hi);
                if view == 0 { z1[i] = v } else { z2[i] = v };
            }
        }
        (z1, z2)
    }

    #[test]
    fn gd_returns_stationary_slacks_unchanged() {
        let (grams, labels) = random_instance(4, 61);
        let mut st = random_state(4, 62);
        let hp = Hyperparams::default();
        let (z1, z2) = stationary_zetas(&st, &grams, &labels, &hp);
        let (g1, g2) = zeta_gradient(&z1, &z2, &st, &grams, &labels, &hp).unwrap();
        assert!(g1.amax() <= 1e-8 && g2.amax() <= 1e-8);
        st.zeta1 = z1.clone();
        st.zeta2 = z2.clone();
        let (out1, out2) = gd_zeta(&st, &grams, &labels, &hp).unwrap();
        assert_eq!(out1, z1);
        assert_eq!(out2, z2);
    }

    #[test]
    fn gd_single_small_step_strictly_decreases() {
        let (grams, labels) = random_instance(5, 71);
        let st = random_state(5, 72);
        let hp = Hyperparams { gd_rate: 1e-4, t2_max: 1, ..Default::default() };
        let before =
            zeta_objective(&st.zeta1, &st.zeta2, &st, &grams, &labels, &hp).unwrap();
        let (z1, z2) = gd_zeta(&st, &grams, &labels, &hp).unwrap();
        let after = zeta_objective(&z1, &z2, &st, &grams, &labels, &hp).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn gd_backtracks_an_oversized_step_into_a_decrease() {
        let (grams, labels) = random_instance(5, 81);
        let st = random_state(5, 82);
        let hp = Hyperparams { gd_rate: 1e6, t2_max: 5, ..Default::default() };
        let before =
            zeta_objective(&st.zeta1, &st.zeta2, &st, &grams, &labels, &hp).unwrap();
        let (z1, z2) = gd_zeta(&st, &grams, &labels, &hp).unwrap();
        let after = zeta_objective(&z1, &z2, &st, &grams, &labels, &hp).unwrap();
        assert!(after <= before + 1e-12);
        assert!(after < before, "backtracking should still find a decrease");
    }

    #[test]
    fn eta_projection_clips_negatives_only() {
        // Pre-projection vector (−1, 2) must come out as (0, 2).
        let grams = GramPair {
            k1: DMatrix::identity(2, 2),
            k2: DMatrix::identity(2, 2),
        };
        let labels = DVector::from_vec(vec![1.0, 1.0]);
        let mut st = SolverState::zeros(2);
        st.theta3 = DVector::from_vec(vec![-1.0, 2.0]);
        let hp = Hyperparams::default();
        let (e1, _e2, e3, _e4) = update_eta(&st, &grams, &labels, &hp).unwrap();
        assert_eq!(e3, DVector::from_vec(vec![0.0, 2.0]));
        assert_eq!(e1, DVector::zeros(2)); // its argument is −e
    }

    #[test]
    fn eta_all_zero_arguments_give_zero() {
        // ζ = 0, ϑ = 0, and y∘(Kα) = e make all four projection arguments zero.
        let (grams, labels) = random_instance(3, 91);
        let mut st = SolverState::zeros(3);
        st.alpha1 = grams.k1.clone().full_piv_lu().solve(&labels).unwrap();
        st.alpha2 = grams.k2.clone().full_piv_lu().solve(&labels).unwrap();
        let hp = Hyperparams::default();
        let (e1, e2, e3, e4) = update_eta(&st, &grams, &labels, &hp).unwrap();
        for v in [&e1, &e2, &e3, &e4] {
            assert!(v.amax() <= 1e-10, "{}", v.amax());
        }
    }

    #[test]
    fn eta_outputs_are_zero_or_preprojection() {
        let (grams, labels) = random_instance(6, 101);
        let st = random_state(6, 102);
        let hp = Hyperparams { kappa1: 0.7, kappa3: 2.2, ..Default::default() };
        let base1 = margin_base(&grams.k1, &st.alpha1, &labels);
        let (e1, _, e3, _) = update_eta(&st, &grams, &labels, &hp).unwrap();
        for i in 0..6 {
            let pre1 = st.theta1[i] / hp.kappa1 + base1[i] + st.zeta1[i];
            assert!(e1[i] >= 0.0);
            assert!(e1[i] == 0.0 || e1[i] == pre1);
            let pre3 = st.theta3[i] / hp.kappa3 + st.zeta1[i];
            assert!(e3[i] >= 0.0);
            assert!(e3[i] == 0.0 || e3[i] == pre3);
        }
    }

    #[test]
    fn duals_unchanged_when_residuals_vanish() {
        let (grams, labels) = random_instance(4, 111);
        let mut st = SolverState::zeros(4);
        st.zeta1 = DVector::from_element(4, 1.0);
        st.zeta2 = DVector::from_element(4, 1.0);
        st.eta3 = st.zeta1.clone();
        st.eta4 = st.zeta2.clone();
        st.theta1 = DVector::from_vec(vec![0.3, -0.4, 0.0, 2.0]);
        let hp = Hyperparams::default();
        let (t1, t2, t3, t4) = update_duals(&st, &grams, &labels, &hp).unwrap();
        assert_eq!(t1, st.theta1);
        assert_eq!(t2, st.theta2);
        assert_eq!(t3, st.theta3);
        assert_eq!(t4, st.theta4);
    }

    #[test]
    fn duals_reject_zero_step_length() {
        let (grams, labels) = random_instance(3, 121);
        let st = SolverState::zeros(3);
        let hp = Hyperparams { tau1: 0.0, ..Default::default() };
        assert!(matches!(
            update_duals(&st, &grams, &labels, &hp),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn duals_hand_case() {
        // n=2, identity kernels, y = (+1, −1), α1 = (0.5, 0.2), ζ1 = (0.1, 0.3),
        // η1 = (0, 0.1), ϑ1 = (1, 1), τ1 = 0.5, κ1 = 2:
        //   base = y∘α1 − e = (−0.5, −1.2)
        //   r1 = base + ζ1 − η1 = (−0.4, −1.0)
        //   ϑ1' = ϑ1 + 0.5·2·r1 = (0.6, 0.0)
        let grams = GramPair { k1: DMatrix::identity(2, 2), k2: DMatrix::identity(2, 2) };
        let labels = DVector::from_vec(vec![1.0, -1.0]);
        let mut st = SolverState::zeros(2);
        st.alpha1 = DVector::from_vec(vec![0.5, 0.2]);
        st.zeta1 = DVector::from_vec(vec![0.1, 0.3]);
        st.eta1 = DVector::from_vec(vec![0.0, 0.1]);
        st.theta1 = DVector::from_vec(vec![1.0, 1.0]);
        let hp = Hyperparams { tau1: 0.5, kappa1: 2.0, ..Default::default() };
        let (t1, _, _, _) = update_duals(&st, &grams, &labels, &hp).unwrap();
        assert!((t1[0] - 0.6).abs() <= 1e-15);
        assert!((t1[1] - 0.0).abs() <= 1e-15);
    }

    #[test]
    fn admm_trains_a_separable_instance_to_zero_error() {
        let ds = crate::data::make_synthetic_two_view(8, 10.0, 1.0, 7).unwrap();
        let hp = Hyperparams {
            kernel1: KernelConfig { sigma: 5.0 },
            kernel2: KernelConfig { sigma: 5.0 },
            ..Default::default()
        };
        let grams = GramPair::assemble(&ds.view1, &ds.view2, &hp.kernel1, &hp.kernel2).unwrap();
        let (state, _trace) = admm_solve(&grams, &ds.labels, &hp).unwrap();
        let k1a = &grams.k1 * &state.alpha1;
        let k2a = &grams.k2 * &state.alpha2;
        for i in 0..8 {
            let f = hp.gamma * k1a[i] + k2a[i];
            let pred = if f >= 0.0 { 1.0 } else { -1.0 };
            assert_eq!(pred, ds.labels[i], "sample {i}: decision {f}");
        }
    }

    #[test]
    fn admm_stabilizes_on_the_fifty_sample_fixture() {
        let ds = crate::data::make_synthetic_two_view(50, 10.0, 1.0, 13).unwrap();
        let hp = Hyperparams {
            kernel1: KernelConfig { sigma: 5.0 },
            kernel2: KernelConfig { sigma: 5.0 },
            ..Default::default()
        };
        let grams = GramPair::assemble(&ds.view1, &ds.view2, &hp.kernel1, &hp.kernel2).unwrap();
        let (state, trace) = admm_solve(&grams, &ds.labels, &hp).unwrap();
        assert!(state.iter <= 500);
        let records = &trace.records;
        assert!(records.len() >= 2);
        let last = records[records.len() - 1].objective;
        let prev = records[records.len() - 2].objective;
        assert!(relative_change(last, prev) < 1e-4);
        assert!(last <= trace.first_objective().unwrap() + 1e-12);
        // η's stay in the nonnegative orthant after every update.
        for v in [&state.eta1, &state.eta2, &state.eta3, &state.eta4] {
            assert!(v.min() >= 0.0);
        }
    }

    #[test]
    fn admm_view_decoupling_sends_alpha2_to_zero() {
        let ds = crate::data::make_synthetic_two_view(20, 10.0, 1.0, 17).unwrap();
        let mut hp = Hyperparams {
            kernel1: KernelConfig { sigma: 5.0 },
            kernel2: KernelConfig { sigma: 5.0 },
            t1_max: 2000,
            ..Default::default()
        };
        hp.d = 0.0;
        hp.c2 = 0.0;
        let grams = GramPair::assemble(&ds.view1, &ds.view2, &hp.kernel1, &hp.kernel2).unwrap();
        let (state, _trace) = admm_solve(&grams, &ds.labels, &hp).unwrap();
        assert!(
            state.alpha2.amax() <= 1e-3,
            "view-2 coefficients should vanish, got ‖α2‖∞ = {}",
            state.alpha2.amax()
        );
    }

    #[test]
    fn admm_is_deterministic() {
        let ds = crate::data::make_synthetic_two_view(12, 6.0, 1.0, 19).unwrap();
        let hp = Hyperparams::default();
        let grams = GramPair::assemble(&ds.view1, &ds.view2, &hp.kernel1, &hp.kernel2).unwrap();
        let (s1, t1) = admm_solve(&grams, &ds.labels, &hp).unwrap();
        let (s2, t2) = admm_solve(&grams, &ds.labels, &hp).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(t1, t2);
    }

    #[test]
    fn trace_csv_has_header_and_six_columns() {
        let trace = ConvergenceTrace {
            records: vec![TraceRecord {
                iter: 1,
                objective: 2.5,
                res1: 0.1,
                res2: 0.2,
                res3: 0.3,
                res4: 0.4,
            }],
        };
        let csv = trace.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iter,objective,res1,res2,res3,res4");
        assert_eq!(lines.next().unwrap().split(',').count(), 6);
    }

    #[test]
    fn hyperparams_validation_rejects_bad_values() {
        let mut hp = Hyperparams::default();
        hp.gamma = 0.0;
        assert!(hp.validate().is_err());
        let mut hp = Hyperparams::default();
        hp.tau2 = TAU_LIMIT;
        assert!(hp.validate().is_err());
        let mut hp = Hyperparams::default();
        hp.kappa3 = -1.0;
        assert!(hp.validate().is_err());
        assert!(Hyperparams::default().validate().is_ok());
    }
}
