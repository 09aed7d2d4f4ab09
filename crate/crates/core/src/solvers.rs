//! Minimum-norm interpolation, the hard-margin SVM, and the slackness
//! certificate that decides when the two coincide.
//!
//! Everything runs through the n x n Gram matrix `A = phi phi^T`: the
//! interpolator is `alpha = phi^T A^-1 targets`, and the SVM is solved in its
//! dual `max_beta y^T beta - 1/2 beta^T A beta` subject to `y_i beta_i >= 0`
//! by cyclic coordinate ascent with exact per-coordinate line search and
//! projection, warm-started at the clipped unconstrained optimum `A^-1 y`.
//! When `min_i y_i (A^-1 y)_i > 0` that warm start is already optimal and the
//! SVM equals minimum-norm interpolation of the labels.

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky};
use ndarray::{Array1, Array2};
use serde::Serialize;

/// Which solver produced a coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolverKind {
    MinNormReal,
    MinNormBinary,
    Svm,
}

/// A fitted coefficient vector in feature space.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub alpha: Array1<f64>,
    pub solver: SolverKind,
    /// Max interpolation residual (min-norm) or margin-constraint violation
    /// (SVM), measured against the actual feature matrix.
    pub residual_inf: f64,
}

/// SVM dual variables and convergence diagnostics.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub beta: Array1<f64>,
    /// Coordinate-ascent sweeps performed (0 when the warm start was optimal).
    pub iterations: usize,
    /// Max violation across feasibility, complementary slackness, and sign
    /// constraints at the returned iterate.
    pub kkt_gap: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    /// Sweep cap for the SVM; refinement cap for linear solves.
    pub max_iter: usize,
    /// Diagonal jitter for the one-shot factorization retry; `0` selects
    /// `1e-10 * trace(A) / n` automatically.
    pub jitter: f64,
}

impl SolverOptions {
    /// Defaults for interpolation solves.
    pub fn linear() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 2, jitter: 0.0 }
    }

    /// Defaults for the SVM dual (tolerance applies to the KKT gap).
    pub fn svm() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 50_000, jitter: 0.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParams("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::linear()
    }
}

/// Margin tolerance of the support-vector count.
pub const DEFAULT_SV_MARGIN_TOL: f64 = 1e-6;

/// `phi phi^T`, averaged to exact symmetry.
pub fn gram_matrix(phi: &Array2<f64>) -> Array2<f64> {
    let mut a = phi.dot(&phi.t());
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
    }
    a
}

/// Factors `a`, retrying once with diagonal jitter on a copy. `a` itself is
/// never modified; the second tuple entry reports the jitter used (0 when the
/// plain factorization succeeded). A jittered factor is only a preconditioner
/// and callers must measure residuals against the true matrix.
fn factor_gram(a: &Array2<f64>, opts: &SolverOptions) -> Result<(Cholesky, f64)> {
    if let Some(ch) = Cholesky::factor(&a.view()) {
        return Ok((ch, 0.0));
    }
    let n = a.nrows();
    let trace: f64 = a.diag().sum();
    let jitter = if opts.jitter > 0.0 { opts.jitter } else { 1e-10 * trace / n as f64 };
    let mut damped = a.clone();
    linalg::add_jitter(&mut damped, jitter);
    match Cholesky::factor(&damped.view()) {
        Some(ch) => Ok((ch, jitter)),
        None => Err(Error::SingularGram {
            cond_estimate: linalg::diag_condition_estimate(&damped.view()),
        }),
    }
}

fn max_abs(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn is_binary(targets: &Array1<f64>) -> bool {
    targets.iter().all(|&v| v == 1.0 || v == -1.0)
}

/// Minimum-l2-norm interpolation: `alpha = phi^T A^-1 targets`.
///
/// One step of iterative refinement runs if the measured residual
/// `‖phi alpha − targets‖_∞` misses `tol * (1 + ‖targets‖_∞)`; failure after
/// `max_iter` refinements reports the factorization as singular.
pub fn min_norm_interpolate(
    phi: &Array2<f64>,
    targets: &Array1<f64>,
    opts: &SolverOptions,
) -> Result<Coefficients> {
    opts.validate()?;
    let n = phi.nrows();
    if targets.len() != n {
        return Err(Error::InvalidParams(format!(
            "targets length {} does not match {n} rows",
            targets.len()
        )));
    }
    let a = gram_matrix(phi);
    let (ch, _) = factor_gram(&a, opts)?;
    let mut w = targets.to_owned();
    ch.solve_in_place(w.as_slice_mut().expect("contiguous"));
    let mut alpha = phi.t().dot(&w);
    let scale = 1.0 + max_abs(targets);
    let mut residual = max_abs(&(phi.dot(&alpha) - targets));
    let mut refinements = 0;
    while residual > opts.tol * scale && refinements < opts.max_iter {
        let mut dw = targets - phi.dot(&alpha);
        ch.solve_in_place(dw.as_slice_mut().expect("contiguous"));
        w += &dw;
        alpha = phi.t().dot(&w);
        residual = max_abs(&(phi.dot(&alpha) - targets));
        refinements += 1;
    }
    if residual > opts.tol * scale {
        return Err(Error::SingularGram { cond_estimate: ch.condition_estimate() });
    }
    let solver = if is_binary(targets) { SolverKind::MinNormBinary } else { SolverKind::MinNormReal };
    Ok(Coefficients { alpha, solver, residual_inf: residual })
}

/// KKT-family violations `(margin deficit, complementary slackness, sign)`
/// computed from the dual gradient `g = y - A beta`, where `m_i = 1 - y_i g_i`.
fn families_from_gradient(beta: &Array1<f64>, g: &Array1<f64>, y: &Array1<f64>) -> (f64, f64, f64) {
    let mut feas = 0.0f64;
    let mut slack = 0.0f64;
    let mut sign = 0.0f64;
    for i in 0..beta.len() {
        feas = feas.max(y[i] * g[i]); // margin deficit 1 - m_i
        slack = slack.max((beta[i] * g[i]).abs()); // |beta_i| * |m_i - 1|
        sign = sign.max(-y[i] * beta[i]); // sign constraint
    }
    (feas.max(0.0), slack, sign.max(0.0))
}

/// Same three families measured from honest primal margins.
fn families_from_margins(beta: &Array1<f64>, margins: &Array1<f64>, y: &Array1<f64>) -> (f64, f64, f64) {
    let mut feas = 0.0f64;
    let mut slack = 0.0f64;
    let mut sign = 0.0f64;
    for i in 0..beta.len() {
        feas = feas.max(1.0 - margins[i]);
        slack = slack.max((beta[i] * (margins[i] - 1.0)).abs());
        sign = sign.max(-y[i] * beta[i]);
    }
    (feas.max(0.0), slack, sign.max(0.0))
}

/// Stopping test. Margin deficit and sign are absolute; complementary
/// slackness is held to `tol * beta_scale`. Pass 1 for a strict absolute
/// test; pass `1 + |beta|_inf` at a stalled iterate, where on a badly
/// conditioned Gram the optimal `beta` reaches 1e8 and |beta_i| *
/// ulp(margin) alone exceeds any absolute tolerance f64 can satisfy.
fn families_ok(families: (f64, f64, f64), beta_scale: f64, tol: f64) -> bool {
    let (feas, slack, sign) = families;
    feas <= tol && slack <= tol * beta_scale && sign <= tol
}

/// Hard-margin SVM via dual coordinate ascent.
///
/// Returns primal coefficients `alpha = phi^T beta` together with the dual
/// iterate. The reported `kkt_gap` and `residual_inf` are recomputed from
/// honest primal margins `y_i <phi_i, alpha>`, not the cached dual gradient.
/// The stopping test is absolute in all three KKT families; once the sweep
/// stalls at f64 precision the slackness requirement relaxes to
/// `tol * (1 + |beta|_inf)`, which is all a Gram with condition ~1e8 admits.
/// `Infeasible` is raised only when a stalled iterate's honest margin is
/// still more than `tol` short of 1.
pub fn solve_svm_hard_margin(
    phi: &Array2<f64>,
    y: &Array1<f64>,
    opts: &SolverOptions,
) -> Result<(Coefficients, DualSolution)> {
    opts.validate()?;
    let n = phi.nrows();
    if y.len() != n {
        return Err(Error::InvalidParams(format!("labels length {} does not match {n} rows", y.len())));
    }
    if !is_binary(y) {
        return Err(Error::InvalidParams("labels must lie in {-1, +1}".into()));
    }
    let a = gram_matrix(phi);
    let (ch, jitter_used) = factor_gram(&a, opts)?;

    // Warm start: unconstrained dual optimum clipped to the sign constraints.
    // Skipped when the factorization needed jitter or is near-singular; a
    // solve against such a factor is not a useful iterate.
    let mut beta = Array1::zeros(n);
    if jitter_used == 0.0 && ch.condition_estimate() < 1e12 {
        beta.assign(y);
        ch.solve_in_place(beta.as_slice_mut().expect("contiguous"));
        for i in 0..n {
            if y[i] * beta[i] < 0.0 {
                beta[i] = 0.0;
            }
        }
    }
    let mut g = y - &a.dot(&beta);
    let a_flat = a.as_slice().expect("gram is standard layout");

    // Convergence requires the cheap cached-gradient families AND the families
    // measured from honest primal margins y_i <phi_i, phi^T beta>; the latter
    // catch inconsistencies the dual cannot see (for example jitter on `a`).
    let honest = |beta: &Array1<f64>| -> (Array1<f64>, Array1<f64>) {
        let alpha = phi.t().dot(beta);
        let margins = y * &phi.dot(&alpha);
        (alpha, margins)
    };

    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = false;
    loop {
        if families_ok(families_from_gradient(&beta, &g, y), 1.0, opts.tol) {
            g = y - &a.dot(&beta);
            if families_ok(families_from_gradient(&beta, &g, y), 1.0, opts.tol) {
                let (_, margins) = honest(&beta);
                if families_ok(families_from_margins(&beta, &margins, y), 1.0, opts.tol) {
                    converged = true;
                    break;
                }
            }
        }
        if stalled {
            // No coordinate can move. Either the margins genuinely cannot
            // reach 1 (non-separable data) or the iterate is as converged as
            // f64 allows, so decide from honest margins and stop.
            let (_, margins) = honest(&beta);
            let families = families_from_margins(&beta, &margins, y);
            if families.0 > opts.tol {
                return Err(Error::Infeasible { violation: families.0 });
            }
            converged = families_ok(families, 1.0 + max_abs(&beta), opts.tol);
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;
        let mut max_step = 0.0f64;
        for i in 0..n {
            let aii = a_flat[i * n + i];
            if aii <= 0.0 {
                continue; // zero feature row: its margin constraint cannot move
            }
            let target = beta[i] + g[i] / aii;
            let fresh = if y[i] * target < 0.0 { 0.0 } else { target };
            let delta = fresh - beta[i];
            if delta != 0.0 {
                beta[i] = fresh;
                max_step = max_step.max(delta.abs());
                let row = &a_flat[i * n..(i + 1) * n];
                for (gk, &ak) in g.iter_mut().zip(row) {
                    *gk -= delta * ak;
                }
            }
        }
        if iterations % 32 == 0 {
            g = y - &a.dot(&beta); // cancel incremental drift
        }
        stalled = max_step <= 1e-14 * (1.0 + max_abs(&beta));
    }

    let (alpha, margins) = honest(&beta);
    let mut feas = 0.0f64;
    let mut slack = 0.0f64;
    let mut sign = 0.0f64;
    for i in 0..n {
        feas = feas.max(1.0 - margins[i]);
        slack = slack.max((beta[i] * (margins[i] - 1.0)).abs());
        sign = sign.max(-y[i] * beta[i]);
    }
    let kkt_gap = feas.max(slack).max(sign).max(0.0);
    if !converged {
        return Err(Error::NotConverged {
            iterations,
            kkt_gap,
            best_beta: beta.to_vec().into_boxed_slice(),
        });
    }
    let coeff = Coefficients { alpha, solver: SolverKind::Svm, residual_inf: feas.max(0.0) };
    Ok((coeff, DualSolution { beta, iterations, kkt_gap }))
}

/// Verifier output for a candidate primal/dual SVM pair.
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    pub feasible: bool,
    /// `‖alpha − phi^T beta‖_∞` (stationarity).
    pub stationarity_gap: f64,
    /// `max_i |beta_i (m_i − 1)|` (complementary slackness).
    pub slackness_gap: f64,
    pub margin_min: f64,
    /// `max_i max(0, −y_i beta_i)`.
    pub sign_violation: f64,
}

/// Checks the three KKT families for a candidate solution, independently of
/// how it was produced.
pub fn kkt_check(
    phi: &Array2<f64>,
    y: &Array1<f64>,
    alpha: &Array1<f64>,
    beta: &Array1<f64>,
    tol: f64,
) -> KktReport {
    let margins = y * &phi.dot(alpha);
    let margin_min = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let stationarity_gap = max_abs(&(alpha - &phi.t().dot(beta)));
    let mut slackness_gap = 0.0f64;
    let mut sign_violation = 0.0f64;
    for i in 0..y.len() {
        slackness_gap = slackness_gap.max((beta[i] * (margins[i] - 1.0)).abs());
        sign_violation = sign_violation.max(-y[i] * beta[i]);
    }
    sign_violation = sign_violation.max(0.0);
    let feasible = margin_min >= 1.0 - tol
        && stationarity_gap <= tol * (1.0 + max_abs(alpha))
        && slackness_gap <= tol
        && sign_violation <= tol;
    KktReport { feasible, stationarity_gap, slackness_gap, margin_min, sign_violation }
}

/// Fraction of training points whose margin is within `tol` of active:
/// `y_i <phi_i, alpha> <= 1 + tol`. Margin-based rather than `beta_i != 0`
/// because dual magnitudes can be tiny yet active.
pub fn support_vector_fraction(
    phi: &Array2<f64>,
    y: &Array1<f64>,
    alpha: &Array1<f64>,
    tol: f64,
) -> f64 {
    let margins = y * &phi.dot(alpha);
    let hits = margins.iter().filter(|&&m| m <= 1.0 + tol).count();
    hits as f64 / y.len() as f64
}

/// Outcome of the all-support-vector certificate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlacknessReport {
    pub all_sv: bool,
    /// `min_i y_i (A^-1 y)_i`.
    pub min_value: f64,
}

/// Evaluates the slackness certificate: with `beta* = A^-1 y`, if every
/// `y_i beta*_i` is positive then `beta*` is dual feasible with all margins
/// exactly 1, so the SVM solution equals minimum-norm interpolation of the
/// labels and every training point is a support vector.
pub fn slackness_predictor(phi: &Array2<f64>, y: &Array1<f64>) -> Result<SlacknessReport> {
    let n = phi.nrows();
    if y.len() != n {
        return Err(Error::InvalidParams(format!("labels length {} does not match {n} rows", y.len())));
    }
    let opts = SolverOptions::linear();
    let a = gram_matrix(phi);
    let (ch, _) = factor_gram(&a, &opts)?;
    let mut beta = y.to_owned();
    ch.solve_in_place(beta.as_slice_mut().expect("contiguous"));
    // one refinement against the true gram, then demand an honest residual
    let mut r = y - &a.dot(&beta);
    if max_abs(&r) > opts.tol * 2.0 {
        ch.solve_in_place(r.as_slice_mut().expect("contiguous"));
        beta += &r;
    }
    let residual = max_abs(&(y - &a.dot(&beta)));
    if residual > 1e-8 * 2.0 {
        return Err(Error::SingularGram { cond_estimate: ch.condition_estimate() });
    }
    let min_value = (0..n).map(|i| y[i] * beta[i]).fold(f64::INFINITY, f64::min);
    Ok(SlacknessReport { all_sv: min_value > 0.0, min_value })
}
