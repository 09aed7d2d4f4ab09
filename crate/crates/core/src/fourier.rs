//! Weighted Fourier features on a regular grid: a fully solvable miniature
//! of overparameterized interpolation. With n odd grid points and d = c*n
//! features, every frequency above the grid's resolution collapses onto a
//! low frequency exactly (an alias), so the minimum-weighted-norm
//! interpolator has a closed form and survival/contamination can be checked
//! against it to machine precision.
//!
//! On the grid `x_i = -pi + (2i+1) pi/n`, `n x_i` is an even multiple of pi,
//! hence `cos(n x_i) = 1` and `sin(n x_i) = 0`. It follows that
//! `cos((kn +- j) x) = cos(j x)`, `sin((kn + j) x) = sin(j x)`, and
//! `sin((kn - j) x) = -sin(j x)` exactly on the grid: each frequency
//! `j in 1..=(n-1)/2` picks up `d/n - 1` aliases per trigonometric family.

use crate::error::{Error, Result};
use crate::solvers::{self, SolverOptions};
use ndarray::{Array1, Array2};
use serde::Serialize;

const SQRT_PI: f64 = 1.772_453_850_905_516;
const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;

/// Feature layout bookkeeping: frequency of column `j` (0-based). Column 0
/// is the constant, then sin/cos pairs of frequencies 1, 2, ...
pub fn column_frequency(j: usize) -> usize {
    (j + 1) / 2
}

/// The n odd regularly spaced points `-pi + (2i+1) pi/n`, symmetric about 0.
pub fn regular_grid(n: usize) -> Result<Vec<f64>> {
    if n % 2 == 0 {
        return Err(Error::EvenN { n });
    }
    if n < 3 {
        return Err(Error::InvalidParams(format!("need at least 3 grid points, got {n}")));
    }
    Ok((0..n)
        .map(|i| -std::f64::consts::PI + (2 * i + 1) as f64 * std::f64::consts::PI / n as f64)
        .collect())
}

/// Feature matrix: column 0 is `1/sqrt(2 pi)`, then `sin(f x)/sqrt(pi)`,
/// `cos(f x)/sqrt(pi)` for frequencies `f = 1..=(d-1)/2`.
pub fn fourier_features(points: &[f64], d: usize) -> Result<Array2<f64>> {
    if d % 2 == 0 {
        return Err(Error::EvenD { d });
    }
    let mut phi = Array2::zeros((points.len(), d));
    for (i, &x) in points.iter().enumerate() {
        phi[[i, 0]] = 1.0 / SQRT_TWO_PI;
        for f in 1..=(d - 1) / 2 {
            let (s, c) = (f as f64 * x).sin_cos();
            phi[[i, 2 * f - 1]] = s / SQRT_PI;
            phi[[i, 2 * f]] = c / SQRT_PI;
        }
    }
    Ok(phi)
}

/// A weighted Fourier interpolation problem: grid size, feature count, and
/// one positive weight per frequency (shared by that frequency's sin and
/// cos columns).
#[derive(Debug, Clone)]
pub struct FourierDesign {
    n: usize,
    d: usize,
    weights: Vec<f64>,
}

impl FourierDesign {
    /// `weights[f]` is the norm weight of frequency `f`, `f = 0..=(d-1)/2`;
    /// they must be positive and non-increasing. `d` must be an odd
    /// multiple of `n` so alias classes have uniform size `d/n`.
    pub fn new(n: usize, d: usize, weights: Vec<f64>) -> Result<Self> {
        if n % 2 == 0 {
            return Err(Error::EvenN { n });
        }
        if n < 3 {
            return Err(Error::InvalidParams(format!("need at least 3 grid points, got {n}")));
        }
        if d % 2 == 0 {
            return Err(Error::EvenD { d });
        }
        if d % n != 0 {
            return Err(Error::InvalidParams(format!("d = {d} is not a multiple of n = {n}")));
        }
        if weights.len() != (d - 1) / 2 + 1 {
            return Err(Error::InvalidParams(format!(
                "need {} frequency weights for d = {d}, got {}",
                (d - 1) / 2 + 1,
                weights.len()
            )));
        }
        for pair in weights.windows(2) {
            if pair[1] > pair[0] {
                return Err(Error::InvalidParams("weights must be non-increasing".into()));
            }
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParams("weights must be positive finite reals".into()));
        }
        Ok(FourierDesign { n, d, weights })
    }

    /// Two-level weights: `lambda_h >= 1` on frequencies `0..=favored`,
    /// weight 1 on the rest.
    pub fn bilevel(n: usize, d: usize, favored: usize, lambda_h: f64) -> Result<Self> {
        if !(lambda_h >= 1.0) {
            return Err(Error::InvalidParams(format!(
                "favored weight must be >= 1 to stay non-increasing, got {lambda_h}"
            )));
        }
        if d == 0 || favored > (d - 1) / 2 {
            return Err(Error::InvalidParams(format!(
                "favored frequency {favored} exceeds maximum {}",
                d.saturating_sub(1) / 2
            )));
        }
        let weights = (0..=(d - 1) / 2)
            .map(|f| if f <= favored { lambda_h } else { 1.0 })
            .collect();
        Self::new(n, d, weights)
    }

    /// Polynomially decaying weights `max(1, f)^(-m)`, `m >= 0`.
    pub fn poly(n: usize, d: usize, m: f64) -> Result<Self> {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::InvalidParams(format!("decay exponent must be >= 0, got {m}")));
        }
        let weights = (0..=(d.saturating_sub(1)) / 2)
            .map(|f| (f.max(1) as f64).powf(-m))
            .collect();
        Self::new(n, d, weights)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of aliases each frequency family has on this grid.
    pub fn alias_count(&self) -> usize {
        self.d / self.n - 1
    }

    /// Features of the design's own grid.
    pub fn feature_matrix(&self) -> Array2<f64> {
        let grid = regular_grid(self.n).expect("validated by constructor");
        fourier_features(&grid, self.d).expect("validated by constructor")
    }

    /// Grid features with each column scaled by the square root of its
    /// frequency weight; the design matrix of the equivalent unweighted
    /// problem (and of weight-aware max-margin fits).
    pub fn scaled_feature_matrix(&self) -> Array2<f64> {
        let mut phi = self.feature_matrix();
        for (j, mut col) in phi.columns_mut().into_iter().enumerate() {
            let w = self.weights[column_frequency(j)].sqrt();
            col.mapv_inplace(|v| v * w);
        }
        phi
    }

    /// Minimizes `sum_j alpha_j^2 / w_j` subject to exact interpolation of
    /// `targets` on the grid, by substituting `alpha = sqrt(w) beta` and
    /// solving the unweighted minimum-norm problem for `beta`.
    ///
    /// Targets must have zero grid mean: the constant column's scaling
    /// differs from its cosine aliases, and zero-mean targets never touch
    /// that family.
    pub fn weighted_min_norm(&self, targets: &Array1<f64>) -> Result<Array1<f64>> {
        if targets.len() != self.n {
            return Err(Error::InvalidParams(format!(
                "targets length {} does not match grid size {}",
                targets.len(),
                self.n
            )));
        }
        let mean = targets.sum() / self.n as f64;
        if mean.abs() > 1e-9 {
            return Err(Error::NonzeroMean { mean });
        }
        let phi = self.scaled_feature_matrix();
        let coeff = solvers::min_norm_interpolate(&phi, targets, &SolverOptions::linear())?;
        let mut alpha = coeff.alpha;
        for (j, a) in alpha.iter_mut().enumerate() {
            *a *= self.weights[column_frequency(j)].sqrt();
        }
        Ok(alpha)
    }

    /// Predictions of a coefficient vector at arbitrary points.
    pub fn evaluate(&self, alpha: &Array1<f64>, points: &[f64]) -> Result<Array1<f64>> {
        if alpha.len() != self.d {
            return Err(Error::InvalidParams(format!(
                "coefficient length {} does not match d = {}",
                alpha.len(),
                self.d
            )));
        }
        Ok(fourier_features(points, self.d)?.dot(alpha))
    }
}

/// Raw function-space coefficient of column `j`: the feature columns carry
/// a `1/sqrt(pi)` normalization (`1/sqrt(2 pi)` for the constant), so the
/// fitted function is `sum_j alpha_j * phi_j(x)` with this factor undone.
fn raw_coefficient(alpha_j: f64, j: usize) -> f64 {
    if j == 0 {
        alpha_j / SQRT_TWO_PI
    } else {
        alpha_j / SQRT_PI
    }
}

/// How a fitted coefficient vector distributes over the alias family of one
/// target cosine frequency.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FamilyRecovery {
    /// Raw cosine coefficient recovered on the target frequency itself.
    pub on_target: f64,
    /// Smallest raw coefficient among the target's cosine aliases.
    pub alias_min: f64,
    /// Largest raw coefficient among the target's cosine aliases.
    pub alias_max: f64,
    /// Number of cosine aliases found (must equal `d/n - 1`).
    pub alias_count: usize,
    /// Largest raw coefficient magnitude on any column outside the target's
    /// cosine family: sines, the constant, and unrelated frequencies. Zero
    /// for an exact single-cosine fit.
    pub off_family_max: f64,
}

/// Splits `alpha` into the cosine family of target frequency `f` (the
/// frequencies `kn +- f`, which coincide with `cos(f x)` on the grid) and
/// everything else.
pub fn alias_family_recovery(
    design: &FourierDesign,
    alpha: &Array1<f64>,
    f: usize,
) -> Result<FamilyRecovery> {
    let (n, d) = (design.n(), design.d());
    if alpha.len() != d {
        return Err(Error::InvalidParams(format!(
            "coefficient length {} does not match d = {d}",
            alpha.len()
        )));
    }
    if f == 0 || f > (n - 1) / 2 {
        return Err(Error::InvalidParams(format!(
            "target frequency {f} outside the grid-resolvable band 1..={}",
            (n - 1) / 2
        )));
    }
    let mut rec = FamilyRecovery {
        on_target: 0.0,
        alias_min: f64::INFINITY,
        alias_max: f64::NEG_INFINITY,
        alias_count: 0,
        off_family_max: 0.0,
    };
    for j in 0..d {
        let g = column_frequency(j);
        let is_cos = j > 0 && j % 2 == 0;
        let in_family = is_cos && (g % n == f || g % n == n - f);
        let raw = raw_coefficient(alpha[j], j);
        if in_family && g == f {
            rec.on_target = raw;
        } else if in_family {
            rec.alias_min = rec.alias_min.min(raw);
            rec.alias_max = rec.alias_max.max(raw);
            rec.alias_count += 1;
        } else {
            rec.off_family_max = rec.off_family_max.max(raw.abs());
        }
    }
    debug_assert_eq!(rec.alias_count, design.alias_count());
    Ok(rec)
}

/// Sup-norm check of the grid collapse identities for frequency `f`: every
/// alias cosine column must equal the target cosine column, and alias sine
/// columns the target sine column up to the sign of `kn - f` vs `kn + f`.
/// Returns the largest absolute deviation over all alias columns and grid
/// points; exact arithmetic would give 0.
pub fn alias_identity_deviation(design: &FourierDesign, f: usize) -> Result<f64> {
    let (n, d) = (design.n(), design.d());
    if f == 0 || f > (n - 1) / 2 {
        return Err(Error::InvalidParams(format!(
            "target frequency {f} outside the grid-resolvable band 1..={}",
            (n - 1) / 2
        )));
    }
    let phi = design.feature_matrix();
    let mut dev = 0.0f64;
    for g in (f + 1)..=(d - 1) / 2 {
        let (same, flipped) = (g % n == f, g % n == n - f);
        if !(same || flipped) {
            continue;
        }
        for i in 0..n {
            dev = dev.max((phi[[i, 2 * g]] - phi[[i, 2 * f]]).abs());
            let target_sin = if same { phi[[i, 2 * f - 1]] } else { -phi[[i, 2 * f - 1]] };
            dev = dev.max((phi[[i, 2 * g - 1]] - target_sin).abs());
        }
    }
    Ok(dev)
}

/// Exact alias-averaged solution of the two-level weighted problem for a
/// single-frequency target.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClosedForm {
    /// Coefficient surviving on the true frequency.
    pub a: f64,
    /// Coefficient on each of the `d/n - 1` aliases.
    pub b: f64,
    /// Contamination scale `sqrt(d/n - 1) * b`.
    pub sigma_cn: f64,
}

/// With weight `lambda_h` on the true frequency and 1 on its `m = d/n - 1`
/// aliases, minimizing `a^2/lambda_h + sum b_k^2` under the interpolation
/// constraint `a + sum b_k = 1` gives
/// `a = lambda_h/(lambda_h + m)`, `b = 1/(lambda_h + m)`.
pub fn closed_form_alias(n: usize, d: usize, lambda_h: f64) -> Result<ClosedForm> {
    if n == 0 || d % n != 0 || d == 0 {
        return Err(Error::InvalidParams(format!("d = {d} must be a positive multiple of n = {n}")));
    }
    if !(lambda_h > 0.0) || !lambda_h.is_finite() {
        return Err(Error::InvalidParams(format!("lambda_h must be positive, got {lambda_h}")));
    }
    let m = (d / n - 1) as f64;
    let a = lambda_h / (lambda_h + m);
    let b = 1.0 / (lambda_h + m);
    Ok(ClosedForm { a, b, sigma_cn: m.sqrt() * b })
}

/// Power-law approximations to the closed form under the scaling
/// `lambda_h = n^(p-r-q)`, `m = n^(p-1)`; good to within a factor of 2 on
/// either side of the knee `q = 1 - r`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeApprox {
    pub a_approx: f64,
    pub sigma_cn_approx: f64,
}

pub fn fourier_regime_approx(p: f64, q: f64, r: f64, n: usize) -> Result<RegimeApprox> {
    if !(p > 1.0) || !(0.0..1.0).contains(&r) || !(q > 0.0 && q <= p - r) {
        return Err(Error::InvalidParams(format!("inadmissible exponents ({p}, {q}, {r})")));
    }
    if n < 2 {
        return Err(Error::InvalidParams(format!("need n >= 2, got {n}")));
    }
    let knee = 1.0 - r;
    if (q - knee).abs() <= crate::theory::BOUNDARY_TOL {
        return Err(Error::BoundaryCase { q });
    }
    let nf = n as f64;
    let (a_approx, sigma_cn_approx) = if q < knee {
        (1.0, nf.powf(-((p + 1.0) / 2.0 - (q + r))))
    } else {
        (nf.powf(-(q - knee)), nf.powf(-(p - 1.0) / 2.0))
    };
    Ok(RegimeApprox { a_approx, sigma_cn_approx })
}

/// Union-bound misclassification rate for the two-level Fourier model in
/// the regime where classification succeeds: with
/// `eps = (p-1)/2 - (q - (1-r)) > 0`, the error is at most
/// `(2/pi) asin(n^(-eps/2)) + n^(-eps/2)` (arcsine argument clamped to 1).
pub fn fourier_cls_upper_bound(p: f64, q: f64, r: f64, n: usize) -> Result<f64> {
    if !(p > 1.0) || !(0.0..1.0).contains(&r) || !(q > 0.0 && q <= p - r) {
        return Err(Error::InvalidParams(format!("inadmissible exponents ({p}, {q}, {r})")));
    }
    if n < 2 {
        return Err(Error::InvalidParams(format!("need n >= 2, got {n}")));
    }
    let eps = (p - 1.0) / 2.0 - (q - (1.0 - r));
    if eps <= 0.0 {
        return Err(Error::InvalidRegime { exponent: eps });
    }
    let tail = (n as f64).powf(-eps / 2.0);
    Ok(2.0 / std::f64::consts::PI * tail.min(1.0).asin() + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sign_pm;
    use ndarray::Array1;
    use std::f64::consts::PI;

    #[test]
    fn grid_n3_and_symmetry() {
        let g = regular_grid(3).unwrap();
        let expect = [-2.0 * PI / 3.0, 0.0, 2.0 * PI / 3.0];
        for (a, b) in g.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let g49 = regular_grid(49).unwrap();
        assert_eq!(g49.len(), 49);
        for w in g49.windows(2) {
            assert!((w[1] - w[0] - 2.0 * PI / 49.0).abs() < 1e-12);
        }
        assert!(g49.iter().sum::<f64>().abs() < 1e-12);
        assert!(matches!(regular_grid(4), Err(Error::EvenN { n: 4 })));
        assert!(regular_grid(1).is_err());
    }

    #[test]
    fn features_reject_even_d() {
        let g = regular_grid(3).unwrap();
        assert!(matches!(fourier_features(&g, 4), Err(Error::EvenD { d: 4 })));
    }

    #[test]
    fn column_gram_is_scaled_identity_at_d_eq_n() {
        let n = 9;
        let g = regular_grid(n).unwrap();
        let phi = fourier_features(&g, n).unwrap();
        let gram = phi.t().dot(&phi);
        let scale = n as f64 / (2.0 * PI);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { scale } else { 0.0 };
                assert!(
                    (gram[[i, j]] - expect).abs() < 1e-10,
                    "gram[{i}][{j}] = {}",
                    gram[[i, j]]
                );
            }
        }
    }

    #[test]
    fn alias_identities_exact() {
        let n = 9;
        let d = 45;
        let g = regular_grid(n).unwrap();
        let phi = fourier_features(&g, d).unwrap();
        let col = |j: usize| phi.column(j);
        for j in 1..=(n - 1) / 2 {
            for k in 1.. {
                let up = k * n + j;
                if up > (d - 1) / 2 {
                    break;
                }
                let down = k * n - j;
                for i in 0..n {
                    assert!((col(2 * up)[i] - col(2 * j)[i]).abs() < 1e-12, "cos up alias");
                    assert!((col(2 * down)[i] - col(2 * j)[i]).abs() < 1e-12, "cos down alias");
                    assert!((col(2 * up - 1)[i] - col(2 * j - 1)[i]).abs() < 1e-12, "sin up alias");
                    assert!(
                        (col(2 * down - 1)[i] + col(2 * j - 1)[i]).abs() < 1e-12,
                        "sin down alias negates"
                    );
                }
            }
        }
        // frequency multiples of n: cosine aliases the constant, sine dies
        for i in 0..n {
            assert!((col(2 * n)[i] - 1.0 / SQRT_PI).abs() < 1e-12);
            assert!(col(2 * n - 1)[i].abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_arithmetic() {
        let cf = closed_form_alias(49, 441, 23.81).unwrap();
        assert!((cf.a - 23.81 / 31.81).abs() < 1e-15);
        assert!((cf.b - 1.0 / 31.81).abs() < 1e-15);
        assert!((cf.sigma_cn - 8.0f64.sqrt() / 31.81).abs() < 1e-15);
        // interpolation identity a + m b = 1
        assert!((cf.a + 8.0 * cf.b - 1.0).abs() < 1e-15);
        // strong preference limit
        let hard = closed_form_alias(49, 441, 1e9).unwrap();
        assert!(hard.a > 0.999_999_99);
        assert!(hard.sigma_cn < 1e-8);
    }

    #[test]
    fn closed_form_bilevel_parameterization() {
        // lambda_h = n^(p-r-q) with m = n^(p-1) aliases gives
        // a = 1/(1 + n^(q-(1-r)))
        let n = 49usize;
        let (p, q, r) = (1.5, 0.55, 0.5);
        let m = (n as f64).powf(p - 1.0).round() as usize; // 7
        let cf = closed_form_alias(n, n * (m + 1), (n as f64).powf(p - r - q)).unwrap();
        let direct = 1.0 / (1.0 + (n as f64).powf(q - (1.0 - r)));
        assert!((cf.a - direct).abs() < 1e-12);
    }

    #[test]
    fn weighted_min_norm_matches_closed_form() {
        let n = 49;
        let d = 441;
        for lambda_h in [23.81, 5.53, 1.89] {
            let design = FourierDesign::bilevel(n, d, 1, lambda_h).unwrap();
            let grid = regular_grid(n).unwrap();
            let targets = Array1::from_iter(grid.iter().map(|&x| x.cos()));
            let alpha = design.weighted_min_norm(&targets).unwrap();
            let cf = closed_form_alias(n, d, lambda_h).unwrap();
            // the raw coefficient carries the 1/sqrt(pi) column scaling
            assert!(
                (alpha[2] / SQRT_PI - cf.a).abs() < 1e-8,
                "a at lambda_h = {lambda_h}: {} vs {}",
                alpha[2] / SQRT_PI,
                cf.a
            );
            let mut off_family = 0.0f64;
            let mut aliases = 0;
            for j in 0..d {
                if j == 2 {
                    continue; // the true cosine column, checked above
                }
                let f = column_frequency(j);
                let is_cos = j % 2 == 0;
                let aliases_freq_one = f > 1 && (f % n == 1 || f % n == n - 1);
                if is_cos && aliases_freq_one {
                    aliases += 1;
                    assert!(
                        (alpha[j] / SQRT_PI - cf.b).abs() < 1e-8,
                        "alias coefficient at column {j}"
                    );
                } else {
                    off_family = off_family.max(alpha[j].abs());
                }
            }
            assert_eq!(aliases, d / n - 1);
            assert!(off_family < 1e-10, "off-family mass {off_family}");
            // interpolation on the grid
            let fitted = design.evaluate(&alpha, &grid).unwrap();
            for (f, t) in fitted.iter().zip(&targets) {
                assert!((f - t).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn family_recovery_reports_closed_form_values() {
        let (n, d, lambda_h) = (49, 441, 5.53);
        let design = FourierDesign::bilevel(n, d, 1, lambda_h).unwrap();
        let grid = regular_grid(n).unwrap();
        let targets = Array1::from_iter(grid.iter().map(|&x| x.cos()));
        let alpha = design.weighted_min_norm(&targets).unwrap();
        let cf = closed_form_alias(n, d, lambda_h).unwrap();
        let rec = alias_family_recovery(&design, &alpha, 1).unwrap();
        assert_eq!(rec.alias_count, d / n - 1);
        assert!((rec.on_target - cf.a).abs() < 1e-8);
        assert!((rec.alias_min - cf.b).abs() < 1e-8);
        assert!((rec.alias_max - cf.b).abs() < 1e-8);
        assert!(rec.off_family_max < 1e-10, "off-family mass {}", rec.off_family_max);
        assert!(alias_family_recovery(&design, &alpha, 0).is_err());
        assert!(alias_family_recovery(&design, &alpha, 25).is_err());
    }

    #[test]
    fn grid_collapse_identities_are_exact() {
        for (n, c) in [(9usize, 7usize), (49, 9)] {
            let design = FourierDesign::poly(n, n * c, 0.0).unwrap();
            for f in 1..=(n - 1) / 2 {
                let dev = alias_identity_deviation(&design, f).unwrap();
                assert!(dev <= 1e-12, "n = {n}, f = {f}: deviation {dev}");
            }
        }
    }

    #[test]
    fn weighted_min_norm_equal_weights_is_plain_projection() {
        let n = 9;
        let design = FourierDesign::new(n, n, vec![1.0; 5]).unwrap();
        let grid = regular_grid(n).unwrap();
        let targets = Array1::from_iter(grid.iter().map(|&x| (2.0 * x).sin() - x.cos()));
        let alpha = design.weighted_min_norm(&targets).unwrap();
        // square orthogonal design: alpha = (2 pi / n) phi^T targets
        let oracle = design.feature_matrix().t().dot(&targets) * (2.0 * PI / n as f64);
        for (a, o) in alpha.iter().zip(&oracle) {
            assert!((a - o).abs() < 1e-9);
        }
    }

    #[test]
    fn weighted_min_norm_rejects_nonzero_mean_and_zero_maps_to_zero() {
        let design = FourierDesign::bilevel(9, 27, 1, 2.0).unwrap();
        let bad = Array1::from_elem(9, 0.5);
        assert!(matches!(design.weighted_min_norm(&bad), Err(Error::NonzeroMean { .. })));
        let alpha = design.weighted_min_norm(&Array1::zeros(9)).unwrap();
        assert!(alpha.iter().all(|&a| a.abs() < 1e-12));
    }

    #[test]
    fn design_validation() {
        assert!(FourierDesign::new(9, 26, vec![1.0; 13]).is_err()); // even d
        assert!(FourierDesign::new(9, 25, vec![1.0; 13]).is_err()); // not multiple
        assert!(FourierDesign::new(9, 27, vec![1.0; 5]).is_err()); // wrong count
        assert!(FourierDesign::new(9, 27, {
            let mut w = vec![1.0; 14];
            w[5] = 2.0;
            w
        })
        .is_err()); // increasing
        assert!(FourierDesign::bilevel(9, 27, 0, 0.5).is_err()); // lambda_h < 1
        assert!(FourierDesign::poly(9, 27, -1.0).is_err());
        assert!(FourierDesign::poly(9, 27, 2.0).is_ok());
    }

    #[test]
    fn regime_approx_branches_and_factor_two() {
        let (p, r) = (1.5, 0.5);
        let low = fourier_regime_approx(p, 0.3, r, 121).unwrap();
        assert_eq!(low.a_approx, 1.0);
        let high = fourier_regime_approx(p, 0.7, r, 121).unwrap();
        assert!((high.a_approx - (121f64).powf(-0.2)).abs() < 1e-15);
        assert!(matches!(
            fourier_regime_approx(p, 0.5, r, 121),
            Err(Error::BoundaryCase { .. })
        ));
        for &n in &[49usize, 121, 225, 441] {
            for q10 in 1..=9 {
                let q = q10 as f64 / 10.0;
                if (q - 0.5).abs() < 1e-9 {
                    continue;
                }
                let nf = n as f64;
                let approx = fourier_regime_approx(p, q, r, n).unwrap();
                let a_exact = 1.0 / (1.0 + nf.powf(q - (1.0 - r)));
                let lambda_h = nf.powf(p - r - q);
                let m = nf.powf(p - 1.0);
                let sigma_exact = m.sqrt() / (lambda_h + m);
                let ratio_a = approx.a_approx / a_exact;
                let ratio_s = approx.sigma_cn_approx / sigma_exact;
                assert!(ratio_a <= 2.0 && ratio_a >= 0.5, "a off at (q={q}, n={n}): {ratio_a}");
                assert!(ratio_s <= 2.0 && ratio_s >= 0.5, "sigma off at (q={q}, n={n}): {ratio_s}");
            }
        }
    }

    #[test]
    fn cls_bound_shrinks_with_n_and_rejects_bad_regime() {
        let (p, q, r) = (1.5, 0.55, 0.5);
        let b49 = fourier_cls_upper_bound(p, q, r, 49).unwrap();
        let b225 = fourier_cls_upper_bound(p, q, r, 225).unwrap();
        let b_huge = fourier_cls_upper_bound(p, q, r, 100_000_000).unwrap();
        assert!(b49 > b225 && b225 > b_huge);
        assert!(b_huge < 0.3); // decay is n^(-0.1) at these exponents

        // eps = 0.25 - (q - 0.5) <= 0 from q >= 0.75
        assert!(matches!(
            fourier_cls_upper_bound(p, 0.8, r, 49),
            Err(Error::InvalidRegime { .. })
        ));
    }

    #[test]
    fn bound_beats_monte_carlo_error() {
        let (p, q, r) = (1.5, 0.55, 0.5);
        for &n in &[49usize, 121, 225] {
            // aliases per family ~ n^(p-1), rounded up to make d/n odd
            let mut c = (n as f64).powf(p - 1.0).round() as usize + 1;
            if c % 2 == 0 {
                c += 1;
            }
            let d = n * c;
            let lambda_h = (n as f64).powf(p - r - q);
            let design = FourierDesign::bilevel(n, d, 1, lambda_h).unwrap();
            let grid = regular_grid(n).unwrap();
            let targets = Array1::from_iter(grid.iter().map(|&x| x.cos()));
            let alpha = design.weighted_min_norm(&targets).unwrap();
            // deterministic uniform test points, avoiding the sign boundary
            let n_test = 2000;
            let points: Vec<f64> =
                (0..n_test).map(|i| -PI + (2 * i + 1) as f64 * PI / n_test as f64).collect();
            let preds = design.evaluate(&alpha, &points).unwrap();
            let mut errors = 0usize;
            for (i, &x) in points.iter().enumerate() {
                if sign_pm(x.cos()) != sign_pm(preds[i]) {
                    errors += 1;
                }
            }
            let err_hat = errors as f64 / n_test as f64;
            let bound = fourier_cls_upper_bound(p, q, r, n).unwrap();
            assert!(err_hat <= bound, "n = {n}: err {err_hat} vs bound {bound}");
        }
    }
}
