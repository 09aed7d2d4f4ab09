//! Closed-form predictions for bi-level ensembles: which risks converge in
//! the large-n limit, when every training point becomes a support vector,
//! and the power-law exponents the survival/contamination statistics follow.
//! These are the targets the Monte-Carlo harness checks itself against.

use crate::ensembles::Spectrum;
use crate::error::{Error, Result};
use serde::Serialize;

/// Tolerance used to flag parameter points sitting on a regime threshold.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// q < 1 - r: both excess risks vanish.
    BothSucceed,
    /// 1 - r < q < (1 - r) + (p - 1) / 2: classification error vanishes
    /// while excess MSE tends to 1.
    ClassificationOnly,
    /// q above both thresholds: MSE tends to 1, classification to 1/2.
    BothFail,
    /// q within `BOUNDARY_TOL` of a threshold; no limit assigned.
    Boundary,
}

/// Regime classification with its thresholds and limiting risks.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeVerdict {
    pub regime: Regime,
    /// `1 - r`.
    pub q_low: f64,
    /// `(1 - r) + (p - 1) / 2`.
    pub q_high: f64,
    /// Limit of excess MSE (`None` on a boundary).
    pub limit_mse: Option<f64>,
    /// Limit of excess classification error (`None` on a boundary).
    pub limit_cls: Option<f64>,
}

/// One side of an all-support-vector condition, kept as raw numbers so
/// near-misses are visible.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SupportCondition {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Large-n limits and power-law exponents for the survival/contamination
/// pair under binary-label interpolation. An exponent `e` means the
/// statistic scales as `n^e` (up to logarithmic factors on the upper
/// bounds).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AsymptoticPrediction {
    pub su_limit: f64,
    pub su_exponent: f64,
    pub cn_upper_exponent: f64,
    pub cn_lower_exponent: f64,
    pub snr_lower_exponent: f64,
    pub snr_upper_exponent: f64,
}

/// Log-log least-squares fit of `values` against `ns`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

fn validate_pqr(p: f64, q: f64, r: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParams(format!("p must be finite and > 1, got {p}")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParams(format!("r must lie in [0, 1), got {r}")));
    }
    if !(q > 0.0 && q <= p - r) {
        return Err(Error::InvalidParams(format!(
            "q must lie in (0, p - r] = (0, {}], got {q}",
            p - r
        )));
    }
    Ok(())
}

/// Places an admissible `(p, q, r)` into its limiting-risk regime.
pub fn classify_regime(p: f64, q: f64, r: f64) -> Result<RegimeVerdict> {
    validate_pqr(p, q, r)?;
    let q_low = 1.0 - r;
    let q_high = (1.0 - r) + (p - 1.0) / 2.0;
    let on_low = (q - q_low).abs() <= BOUNDARY_TOL;
    let on_high = (q - q_high).abs() <= BOUNDARY_TOL;
    let (regime, limit_mse, limit_cls) = if on_low || on_high {
        (Regime::Boundary, None, None)
    } else if q < q_low {
        (Regime::BothSucceed, Some(0.0), Some(0.0))
    } else if q < q_high {
        (Regime::ClassificationOnly, Some(1.0), Some(0.0))
    } else {
        (Regime::BothFail, Some(1.0), Some(0.5))
    };
    Ok(RegimeVerdict { regime, q_low, q_high, limit_mse, limit_cls })
}

/// General spectral condition guaranteeing every training point is a
/// support vector:
/// `‖λ‖₁ ≥ 72 (‖λ‖₂ n √ln n + ‖λ‖_∞ n^{3/2} ln n + 1)`.
pub fn all_sv_condition_general(spectrum: &Spectrum, n: usize) -> Result<SupportCondition> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("need n >= 2, got {n}")));
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let lhs = spectrum.l1();
    let rhs = 72.0
        * (spectrum.l2() * nf * ln_n.sqrt() + spectrum.linf() * nf.powf(1.5) * ln_n + 1.0);
    Ok(SupportCondition { holds: lhs >= rhs, lhs, rhs })
}

/// Sharper isotropic-only condition: all-support-vector behaviour whenever
/// `d > 10 n ln n + n - 1` (strict).
pub fn all_sv_condition_isotropic(n: usize, d: usize) -> Result<SupportCondition> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("need n >= 2, got {n}")));
    }
    let nf = n as f64;
    let rhs = 10.0 * nf * nf.ln() + nf - 1.0;
    let lhs = d as f64;
    Ok(SupportCondition { holds: lhs > rhs, lhs, rhs })
}

/// Sufficient exponent conditions for the bi-level ensemble to be in the
/// all-support-vector regime asymptotically: `p > 2` and `q > 3/2 - r`,
/// both strict. Known to be conservative; all-SV behaviour shows up
/// empirically well below these thresholds.
pub fn bilevel_sv_sufficient(p: f64, q: f64, r: f64) -> Result<bool> {
    validate_pqr(p, q, r)?;
    Ok(p > 2.0 && q > 1.5 - r)
}

/// Limits and exponents for survival, contamination, and their ratio under
/// binary-label interpolation with label noise `nu_star`.
///
/// The two branches meet at `q = 1 - r`, where neither applies; that knee
/// is reported as `BoundaryCase`.
pub fn predicted_scalings(p: f64, q: f64, r: f64, nu_star: f64) -> Result<AsymptoticPrediction> {
    validate_pqr(p, q, r)?;
    if !(0.0..0.5).contains(&nu_star) {
        return Err(Error::InvalidParams(format!("nu_star must lie in [0, 1/2), got {nu_star}")));
    }
    let knee = 1.0 - r;
    if (q - knee).abs() <= BOUNDARY_TOL {
        return Err(Error::BoundaryCase { q });
    }
    let half_p = (p - 1.0) / 2.0;
    let (su_limit, su_exponent, cn_upper_exponent, cn_lower_exponent) = if q < knee {
        (
            (2.0 / std::f64::consts::PI).sqrt() * (1.0 - 2.0 * nu_star),
            0.0,
            -f64::min(p - 1.0, 1.0 - r) / 2.0,
            q - (1.0 - r) - half_p,
        )
    } else {
        (
            0.0,
            (1.0 - r) - q,
            -f64::min(p - 1.0, 2.0 * q + r - 1.0) / 2.0,
            -half_p,
        )
    };
    // snr = su/cn, so the ratio's lower exponent pairs su with the
    // contamination upper bound and vice versa
    let snr_lower_exponent = su_exponent - cn_upper_exponent;
    let snr_upper_exponent = su_exponent - cn_lower_exponent;
    Ok(AsymptoticPrediction {
        su_limit,
        su_exponent,
        cn_upper_exponent,
        cn_lower_exponent,
        snr_lower_exponent,
        snr_upper_exponent,
    })
}

/// Ordinary least squares of `ln(values)` on `ln(ns)`: the slope estimates
/// the power-law exponent of `values` in `n`.
pub fn fit_exponent(ns: &[usize], values: &[f64]) -> Result<ExponentFit> {
    if ns.len() < 3 {
        return Err(Error::InvalidParams(format!("need at least 3 points, got {}", ns.len())));
    }
    if ns.len() != values.len() {
        return Err(Error::InvalidParams(format!(
            "{} sizes vs {} values",
            ns.len(),
            values.len()
        )));
    }
    if ns.iter().any(|&n| n == 0) {
        return Err(Error::InvalidParams("sizes must be positive".into()));
    }
    if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParams("values must be positive finite reals".into()));
    }
    if ns.iter().all(|&n| n == ns[0]) {
        return Err(Error::DegenerateInput("all sizes equal; slope unidentifiable".into()));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|&v| v.ln()).collect();
    let k = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / k;
    let y_mean = ys.iter().sum::<f64>() / k;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        let fitted = intercept + slope * x;
        ss_res += (y - fitted) * (y - fitted);
        ss_tot += (y - y_mean) * (y - y_mean);
    }
    // constant data: a flat line explains everything
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ExponentFit { slope, intercept, r_squared })
}
