//! Survival/contamination decomposition of a fitted coefficient vector,
//! the exact analytic excess risks it implies, Monte-Carlo estimates of the
//! same risks, and a Frobenius-norm margin bound.
//!
//! For a 1-sparse ground truth on coordinate `t` (weight `1/sqrt(lambda_t)`),
//! a predictor splits into the part that survives on `t` and the weighted
//! mass it places elsewhere:
//!
//!   su = sqrt(lambda_t) * alpha_t
//!   cn = sqrt(sum_{j != t} lambda_j alpha_j^2)
//!
//! Because test features are Gaussian with diagonal covariance, the excess
//! risks are exact functions of this pair: excess MSE is `(1-su)^2 + cn^2`
//! and excess classification error is `1/2 - arctan(su/cn)/pi` (the ratio of
//! two independent centered Gaussians is Cauchy).

use crate::ensembles::Spectrum;
use crate::error::{Error, Result};
use crate::rng::{self, tags};
use crate::sign_pm;
use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Survival/contamination split of a coefficient vector.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SuCnReport {
    pub su: f64,
    /// Non-negative by construction.
    pub cn: f64,
    /// `su/cn`; `+inf`/`-inf` by the sign of `su` when `cn = 0`, NaN when
    /// both vanish.
    pub snr: f64,
}

/// Exact excess risks implied by a survival/contamination pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossReport {
    pub excess_mse: f64,
    pub excess_cls: f64,
}

/// Monte-Carlo risk estimates on a fresh test sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EmpiricalReport {
    pub mse_hat: f64,
    pub err_hat: f64,
    pub n_test: usize,
    /// Binomial standard error `sqrt(err_hat (1 - err_hat) / n_test)`.
    pub std_err: f64,
    /// Sample standard deviation of the squared errors (divide by
    /// `sqrt(n_test)` for the standard error of `mse_hat`).
    pub mse_std: f64,
}

/// Margin bound pieces; `bound = ramp_term + complexity_term +
/// confidence_term`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MarginReport {
    /// Minimum unnormalized margin `min_i y_i <phi_i, alpha>`.
    pub gamma: f64,
    /// `gamma / ‖alpha‖_2`, invariant under positive rescaling of `alpha`.
    pub gamma_n: f64,
    /// `‖phi‖_F` of the training features.
    pub frob: f64,
    /// Average ramp loss at scale `gamma`; identically zero when every
    /// margin reaches `gamma`, computed rather than assumed.
    pub ramp_term: f64,
    /// `(4 / gamma_n) * frob / n`.
    pub complexity_term: f64,
    /// `(8 / gamma + 1) * sqrt(ln(4 / delta) / (2 n))`; scales with the
    /// predictor, unlike the complexity term.
    pub confidence_term: f64,
    pub bound: f64,
    pub delta: f64,
}

fn check_index(t: usize, d: usize) -> Result<usize> {
    if t == 0 || t > d {
        return Err(Error::IndexOutOfRange { index: t, len: d });
    }
    Ok(t - 1)
}

/// `sqrt(lambda_t) * alpha_t` for a 1-based coordinate `t`.
pub fn survival(alpha: &Array1<f64>, spectrum: &Spectrum, t: usize) -> Result<f64> {
    let t0 = check_index(t, spectrum.dim().min(alpha.len()))?;
    Ok(spectrum.lambda(t0).sqrt() * alpha[t0])
}

/// `sqrt(sum_{j != t} lambda_j alpha_j^2)` for a 1-based coordinate `t`.
pub fn contamination(alpha: &Array1<f64>, spectrum: &Spectrum, t: usize) -> Result<f64> {
    let t0 = check_index(t, spectrum.dim().min(alpha.len()))?;
    let mut acc = 0.0;
    for (j, &aj) in alpha.iter().enumerate() {
        if j != t0 {
            acc += spectrum.lambda(j) * aj * aj;
        }
    }
    Ok(acc.sqrt())
}

/// Survival, contamination, and their ratio in one pass.
pub fn su_cn(alpha: &Array1<f64>, spectrum: &Spectrum, t: usize) -> Result<SuCnReport> {
    let su = survival(alpha, spectrum, t)?;
    let cn = contamination(alpha, spectrum, t)?;
    let snr = if cn > 0.0 {
        su / cn
    } else if su > 0.0 {
        f64::INFINITY
    } else if su < 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::NAN
    };
    Ok(SuCnReport { su, cn, snr })
}

/// Exact excess risks as functions of the survival/contamination pair.
///
/// `excess_mse = (1 - su)^2 + cn^2`. `excess_cls = 1/2 - arctan(su/cn)/pi`;
/// at `cn = 0` the arctan expression is taken in the limit: 0 for `su > 0`,
/// 1 for `su < 0`, `1/2` for `su = 0`.
pub fn analytic_losses(su: f64, cn: f64) -> LossReport {
    debug_assert!(cn >= 0.0);
    let excess_mse = (1.0 - su) * (1.0 - su) + cn * cn;
    let excess_cls = if cn > 0.0 {
        0.5 - (su / cn).atan() / std::f64::consts::PI
    } else if su > 0.0 {
        0.0
    } else if su < 0.0 {
        1.0
    } else {
        0.5
    };
    LossReport { excess_mse, excess_cls }
}

/// Monte-Carlo excess risks of `alpha` against the 1-sparse ground truth on
/// coordinate `t` (1-based), over `n_test` fresh diagonal-Gaussian feature
/// draws. Rows stream through per-row substreams of `seed`, so the estimate
/// is deterministic and independent of any training draw.
pub fn empirical_losses(
    alpha: &Array1<f64>,
    t: usize,
    spectrum: &Spectrum,
    n_test: usize,
    seed: u64,
) -> Result<EmpiricalReport> {
    if n_test == 0 {
        return Err(Error::InvalidParams("n_test must be at least 1".into()));
    }
    let d = spectrum.dim();
    if alpha.len() != d {
        return Err(Error::InvalidParams(format!(
            "alpha length {} does not match spectrum dimension {d}",
            alpha.len()
        )));
    }
    let t0 = check_index(t, d)?;
    // feature value is sqrt(lambda_j) xi_j, so fold the scaling into alpha
    let weights: Vec<f64> = (0..d).map(|j| spectrum.lambda(j).sqrt() * alpha[j]).collect();

    let mut errors = 0usize;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for i in 0..n_test {
        let mut stream = rng::stream(rng::derive_seed(seed, tags::TEST_ROW, i as u64));
        let mut u = 0.0f64;
        let mut z = 0.0f64;
        for (j, w) in weights.iter().enumerate() {
            let xi: f64 = StandardNormal.sample(&mut stream);
            u += w * xi;
            if j == t0 {
                z = xi; // <phi, alpha*> with alpha* = e_t / sqrt(lambda_t)
            }
        }
        if sign_pm(z) != sign_pm(u) {
            errors += 1;
        }
        let sq = (z - u) * (z - u);
        let k = (i + 1) as f64;
        let delta = sq - mean;
        mean += delta / k;
        m2 += delta * (sq - mean);
    }
    let err_hat = errors as f64 / n_test as f64;
    let mse_std = if n_test > 1 { (m2 / (n_test as f64 - 1.0)).sqrt() } else { 0.0 };
    Ok(EmpiricalReport {
        mse_hat: mean,
        err_hat,
        n_test,
        std_err: (err_hat * (1.0 - err_hat) / n_test as f64).sqrt(),
        mse_std,
    })
}

/// Monte-Carlo risks on the replicated-signal ensemble (`phi_j = x + w_j`),
/// against the latent target `x ~ N(0, sigma^2)`.
///
/// A fresh point's prediction collapses exactly to two Gaussians:
/// `pred = sum(alpha) * x + |alpha|_2 * g` with `g` standard normal
/// independent of `x`, so no test features need materializing even at large
/// `d`. Rows stream through per-row substreams of `seed` like
/// [`empirical_losses`]. The MSE is against `x` on its own scale.
pub fn weak_features_empirical_losses(
    alpha: &Array1<f64>,
    sigma: f64,
    n_test: usize,
    seed: u64,
) -> Result<EmpiricalReport> {
    if n_test == 0 {
        return Err(Error::InvalidParams("n_test must be at least 1".into()));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
    }
    if alpha.is_empty() {
        return Err(Error::InvalidParams("alpha must be non-empty".into()));
    }
    let coef_sum = alpha.sum();
    let noise_scale = alpha.dot(alpha).sqrt();

    let mut errors = 0usize;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for i in 0..n_test {
        let mut stream = rng::stream(rng::derive_seed(seed, tags::TEST_ROW, i as u64));
        let g1: f64 = StandardNormal.sample(&mut stream);
        let g2: f64 = StandardNormal.sample(&mut stream);
        let x = sigma * g1;
        let pred = coef_sum * x + noise_scale * g2;
        if sign_pm(x) != sign_pm(pred) {
            errors += 1;
        }
        let sq = (pred - x) * (pred - x);
        let k = (i + 1) as f64;
        let delta = sq - mean;
        mean += delta / k;
        m2 += delta * (sq - mean);
    }
    let err_hat = errors as f64 / n_test as f64;
    let mse_std = if n_test > 1 { (m2 / (n_test as f64 - 1.0)).sqrt() } else { 0.0 };
    Ok(EmpiricalReport {
        mse_hat: mean,
        err_hat,
        n_test,
        std_err: (err_hat * (1.0 - err_hat) / n_test as f64).sqrt(),
        mse_std,
    })
}

/// Statistical self-test: the ratio of two independent standard normals is
/// standard Cauchy. Returns the Kolmogorov sup-distance between the
/// empirical CDF of `n_samples` such ratios and `F(t) = 1/2 + arctan(t)/pi`.
pub fn cauchy_ratio_check(n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples < 10_000 {
        return Err(Error::InvalidParams(format!(
            "need at least 10^4 samples for a meaningful sup-distance, got {n_samples}"
        )));
    }
    let mut stream = rng::stream(rng::derive_seed(seed, tags::GENERIC, 0));
    let mut ratios: Vec<f64> = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let u: f64 = StandardNormal.sample(&mut stream);
        let v: f64 = StandardNormal.sample(&mut stream);
        ratios.push(v / u);
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("ratios are comparable"));
    let n = n_samples as f64;
    let mut sup = 0.0f64;
    for (i, &r) in ratios.iter().enumerate() {
        let cdf = 0.5 + r.atan() / std::f64::consts::PI;
        sup = sup.max((cdf - i as f64 / n).abs());
        sup = sup.max(((i + 1) as f64 / n - cdf).abs());
    }
    Ok(sup)
}

/// Frobenius-norm margin bound on test misclassification, with the three
/// addends reported separately (only `complexity_term` is invariant under
/// rescaling of `alpha`).
pub fn margin_bound(
    phi: &Array2<f64>,
    y: &Array1<f64>,
    alpha: &Array1<f64>,
    delta: f64,
) -> Result<MarginReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!("delta must be in (0, 1), got {delta}")));
    }
    let n = phi.nrows();
    if y.len() != n {
        return Err(Error::InvalidParams(format!("labels length {} does not match {n} rows", y.len())));
    }
    let margins = y * &phi.dot(alpha);
    let gamma = margins.iter().copied().fold(f64::INFINITY, f64::min);
    if !(gamma > 0.0) {
        return Err(Error::NotSeparating { min_margin: gamma });
    }
    let norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    let gamma_n = gamma / norm;
    let frob = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
    // ramp loss at scale gamma: 1 below 0, linear on (0, gamma], 0 above
    let ramp_term = margins
        .iter()
        .map(|&m| {
            if m <= 0.0 {
                1.0
            } else if m <= gamma {
                1.0 - m / gamma
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / n as f64;
    let complexity_term = 4.0 / gamma_n * frob / n as f64;
    let confidence_term = (8.0 / gamma + 1.0) * ((4.0 / delta).ln() / (2.0 * n as f64)).sqrt();
    Ok(MarginReport {
        gamma,
        gamma_n,
        frob,
        ramp_term,
        complexity_term,
        confidence_term,
        bound: ramp_term + complexity_term + confidence_term,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{EnsembleSpec, build_spectrum};
    use ndarray::array;

    fn iso(d: usize) -> Spectrum {
        build_spectrum(&EnsembleSpec::Isotropic { n: 2, d }).unwrap()
    }

    #[test]
    fn survival_of_truth_is_one() {
        let sp = iso(4);
        let alpha = array![0.0, 1.0, 0.0, 0.0]; // e_t / sqrt(lambda_t), lambda = 1
        assert_eq!(survival(&alpha, &sp, 2).unwrap(), 1.0);
        assert_eq!(survival(&Array1::zeros(4), &sp, 2).unwrap(), 0.0);
        assert_eq!(contamination(&alpha, &sp, 2).unwrap(), 0.0);
    }

    #[test]
    fn contamination_single_term() {
        let sp = iso(4);
        let alpha = array![1.0, 1.0, 0.0, 0.0];
        assert_eq!(contamination(&alpha, &sp, 1).unwrap(), 1.0);
    }

    #[test]
    fn index_bounds_are_one_based() {
        let sp = iso(3);
        let alpha = Array1::zeros(3);
        assert!(matches!(survival(&alpha, &sp, 0), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(survival(&alpha, &sp, 4), Err(Error::IndexOutOfRange { .. })));
        assert!(survival(&alpha, &sp, 3).is_ok());
    }

    #[test]
    fn snr_conventions_at_zero_contamination() {
        let sp = iso(2);
        let rep = su_cn(&array![1.0, 0.0], &sp, 1).unwrap();
        assert_eq!(rep.snr, f64::INFINITY);
        let rep = su_cn(&array![-1.0, 0.0], &sp, 1).unwrap();
        assert_eq!(rep.snr, f64::NEG_INFINITY);
        let rep = su_cn(&array![0.0, 0.0], &sp, 1).unwrap();
        assert!(rep.snr.is_nan());
    }

    #[test]
    fn analytic_losses_conventions() {
        let perfect = analytic_losses(1.0, 0.0);
        assert_eq!(perfect.excess_mse, 0.0);
        assert_eq!(perfect.excess_cls, 0.0);
        assert_eq!(analytic_losses(-1.0, 0.0).excess_cls, 1.0);
        assert_eq!(analytic_losses(0.0, 0.0).excess_cls, 0.5);
        assert_eq!(analytic_losses(0.0, 0.7).excess_cls, 0.5);
        for c in [0.3, 1.0, 7.5] {
            assert!((analytic_losses(c, c).excess_cls - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn excess_cls_strictly_decreasing_in_snr() {
        let mut prev = f64::INFINITY;
        for k in -40..=40 {
            let snr = k as f64 / 10.0;
            let cls = analytic_losses(snr, 1.0).excess_cls;
            assert!(cls < prev, "not decreasing at snr = {snr}");
            prev = cls;
        }
    }

    #[test]
    fn empirical_losses_of_truth_vanish() {
        let sp = iso(6);
        let mut alpha = Array1::zeros(6);
        alpha[2] = 1.0;
        let rep = empirical_losses(&alpha, 3, &sp, 500, 7).unwrap();
        assert_eq!(rep.mse_hat, 0.0);
        assert_eq!(rep.err_hat, 0.0);
        assert_eq!(rep.std_err, 0.0);
    }

    #[test]
    fn empirical_losses_of_negated_truth() {
        let sp = iso(6);
        let mut alpha = Array1::zeros(6);
        alpha[2] = -1.0;
        let rep = empirical_losses(&alpha, 3, &sp, 100_000, 11).unwrap();
        assert_eq!(rep.err_hat, 1.0);
        assert!((rep.mse_hat - 4.0).abs() < 0.1, "mse_hat = {}", rep.mse_hat);
    }

    #[test]
    fn empirical_losses_deterministic() {
        let sp = iso(5);
        let alpha = array![0.4, -0.1, 0.8, 0.0, 0.3];
        let a = empirical_losses(&alpha, 3, &sp, 2000, 99).unwrap();
        let b = empirical_losses(&alpha, 3, &sp, 2000, 99).unwrap();
        assert_eq!(a.mse_hat, b.mse_hat);
        assert_eq!(a.err_hat, b.err_hat);
        let c = empirical_losses(&alpha, 3, &sp, 2000, 100).unwrap();
        assert_ne!(a.mse_hat, c.mse_hat);
    }

    #[test]
    fn cauchy_ratio_statistic() {
        let d = cauchy_ratio_check(100_000, 5).unwrap();
        assert!(d <= 0.01, "sup-distance {d}");
        let a = cauchy_ratio_check(10_000, 5).unwrap();
        let b = cauchy_ratio_check(10_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(cauchy_ratio_check(100, 5).is_err());
    }

    #[test]
    fn margin_bound_rejects_non_separating() {
        let phi = array![[1.0, 0.0], [0.0, 1.0]];
        let y = array![1.0, -1.0];
        let alpha = array![1.0, 1.0];
        assert!(matches!(
            margin_bound(&phi, &y, &alpha, 0.05),
            Err(Error::NotSeparating { .. })
        ));
    }

    #[test]
    fn margin_bound_components() {
        let phi = array![[2.0, 0.0], [0.0, 1.0]];
        let y = array![1.0, -1.0];
        let alpha = array![1.0, -1.0];
        let rep = margin_bound(&phi, &y, &alpha, 0.05).unwrap();
        assert_eq!(rep.gamma, 1.0); // margins are 2 and 1
        assert!((rep.gamma_n - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
        assert!((rep.frob - 5.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(rep.ramp_term, 0.0); // both margins reach gamma
        assert!((rep.bound - (rep.ramp_term + rep.complexity_term + rep.confidence_term)).abs() < 1e-15);
    }

    #[test]
    fn gamma_n_invariant_under_rescaling() {
        let phi = array![[2.0, 0.3], [0.1, 1.0]];
        let y = array![1.0, -1.0];
        let alpha = array![1.0, -1.5];
        let base = margin_bound(&phi, &y, &alpha, 0.05).unwrap();
        for c in [0.5, 3.0, 111.0] {
            let scaled = margin_bound(&phi, &y, &alpha.mapv(|v| c * v), 0.05).unwrap();
            assert!((scaled.gamma_n - base.gamma_n).abs() <= 1e-12);
            assert!((scaled.complexity_term - base.complexity_term).abs() <= 1e-12 * base.complexity_term);
        }
    }

    #[test]
    fn weak_features_risk_matches_its_gaussian_form() {
        // pred = S x + |alpha| g, so the misclassification rate is the
        // arctan law at snr = S sigma / |alpha| and the MSE is
        // (S - 1)^2 sigma^2 + |alpha|^2.
        let alpha = array![0.3, 0.2, 0.1, 0.2];
        let sigma = 0.5;
        let n_test = 200_000;
        let rep = weak_features_empirical_losses(&alpha, sigma, n_test, 99).unwrap();
        let coef_sum: f64 = alpha.sum();
        let norm = alpha.dot(&alpha).sqrt();
        let err_expect = analytic_losses(coef_sum * sigma, norm).excess_cls;
        let mse_expect = (coef_sum - 1.0).powi(2) * sigma * sigma + norm * norm;
        assert!(
            (rep.err_hat - err_expect).abs() <= 4.0 * rep.std_err,
            "err {} vs {err_expect}",
            rep.err_hat
        );
        assert!(
            (rep.mse_hat - mse_expect).abs() <= 5.0 * rep.mse_std / (n_test as f64).sqrt(),
            "mse {} vs {mse_expect}",
            rep.mse_hat
        );
    }

    #[test]
    fn weak_features_risk_is_deterministic_and_validates() {
        let alpha = array![0.5, -0.25];
        let a = weak_features_empirical_losses(&alpha, 1.0, 5000, 7).unwrap();
        let b = weak_features_empirical_losses(&alpha, 1.0, 5000, 7).unwrap();
        assert_eq!(a.err_hat, b.err_hat);
        assert_eq!(a.mse_hat, b.mse_hat);
        let c = weak_features_empirical_losses(&alpha, 1.0, 5000, 8).unwrap();
        assert!(a.mse_hat != c.mse_hat);
        assert!(weak_features_empirical_losses(&alpha, 0.0, 100, 7).is_err());
        assert!(weak_features_empirical_losses(&alpha, 1.0, 0, 7).is_err());
        assert!(weak_features_empirical_losses(&Array1::zeros(0), 1.0, 100, 7).is_err());
    }
}
