//! Gaussian feature ensembles: covariance spectra, dimension schedules, and
//! dataset sampling.
//!
//! All sampling is deterministic in the seed. Column `j` of a design matrix
//! comes from its own substream (`tags::COLUMN`, index `j`), label noise from
//! `tags::NOISE`, and weak-features raw inputs from `tags::SIGNAL`, so any
//! part of a dataset can be regenerated independently of the rest.

use crate::error::{Error, Result};
use crate::rng::{self, tags};
use crate::sign_pm;
use ndarray::{Array1, Array2, ShapeBuilder};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Hard cap on feature dimensions produced by parameter schedules.
pub const MAX_DIMENSION: usize = 1 << 26;

/// Eigenvalues of a diagonal feature covariance: positive, non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    lambdas: Vec<f64>,
}

impl Spectrum {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidParams("spectrum must be non-empty".into()));
        }
        for (j, &l) in lambdas.iter().enumerate() {
            if !l.is_finite() || l <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "eigenvalue {j} is {l}; all must be finite and positive"
                )));
            }
            if j > 0 && l > lambdas[j - 1] {
                return Err(Error::InvalidParams(format!(
                    "eigenvalues must be non-increasing (violated at index {j})"
                )));
            }
        }
        Ok(Spectrum { lambdas })
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Eigenvalue at 0-based index `j`.
    pub fn lambda(&self, j: usize) -> f64 {
        self.lambdas[j]
    }

    /// `‖λ‖₁`; equals the trace of the covariance.
    pub fn l1(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    pub fn l2(&self) -> f64 {
        self.lambdas.iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn trace(&self) -> f64 {
        self.l1()
    }
}

/// Feature ensemble parameterizations.
///
/// `n` is the nominal training-set size; dimension schedules (`BiLevel`) are
/// functions of it. Sampling takes the number of rows separately, so test
/// sets can be drawn from the same ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "variant")]
pub enum EnsembleSpec {
    /// Identity covariance in `d` dimensions.
    Isotropic { n: usize, d: usize },
    /// Two-level spectrum: `d = round(n^p)` features, the top `s = round(n^r)`
    /// carry a fraction `a = n^-q` of the total trace `d`.
    BiLevel { n: usize, p: f64, q: f64, r: f64 },
    /// One informative scalar replicated across all `d` coordinates plus
    /// independent unit noise: `phi_ij = x_i + w_ij`, `x_i ~ N(0, sigma^2)`.
    /// The covariance is not diagonal, so no spectrum is defined.
    WeakFeatures { n: usize, d: usize, sigma: f64 },
    /// Polynomial decay `lambda_k = k^-m`, `k = 1..=d`.
    PolyDecay { n: usize, d: usize, m: f64 },
    /// Spectrum given verbatim.
    Explicit { lambdas: Vec<f64> },
}

impl EnsembleSpec {
    /// Nominal training-set size.
    pub fn n(&self) -> usize {
        match *self {
            EnsembleSpec::Isotropic { n, .. }
            | EnsembleSpec::BiLevel { n, .. }
            | EnsembleSpec::WeakFeatures { n, .. }
            | EnsembleSpec::PolyDecay { n, .. } => n,
            EnsembleSpec::Explicit { ref lambdas } => lambdas.len(),
        }
    }

    /// Feature dimension after resolving any schedule.
    pub fn dim(&self) -> Result<usize> {
        match *self {
            EnsembleSpec::Isotropic { d, .. }
            | EnsembleSpec::WeakFeatures { d, .. }
            | EnsembleSpec::PolyDecay { d, .. } => Ok(d),
            EnsembleSpec::BiLevel { n, p, r, .. } => Ok(bilevel_dims(n, p, r)?.0),
            EnsembleSpec::Explicit { ref lambdas } => Ok(lambdas.len()),
        }
    }

    /// Largest valid 1-based signal index for this ensemble: `s` for the
    /// bi-level schedule (the signal must sit on the favored block), `d`
    /// otherwise.
    pub fn signal_cap(&self) -> Result<usize> {
        match *self {
            EnsembleSpec::BiLevel { n, p, r, .. } => Ok(bilevel_dims(n, p, r)?.1),
            _ => self.dim(),
        }
    }
}

/// Manual deserialization: rejects unknown keys and keys that do not belong
/// to the named variant, so config typos fail loudly.
impl<'de> Deserialize<'de> for EnsembleSpec {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        use serde::de::Error as DeError;

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            variant: String,
            n: Option<usize>,
            d: Option<usize>,
            p: Option<f64>,
            q: Option<f64>,
            r: Option<f64>,
            sigma: Option<f64>,
            m: Option<f64>,
            lambdas: Option<Vec<f64>>,
        }

        let raw = Raw::deserialize(deserializer)?;
        fn need<T, E: DeError>(v: Option<T>, variant: &str, key: &str) -> std::result::Result<T, E> {
            v.ok_or_else(|| E::custom(format!("ensemble variant {variant} requires key `{key}`")))
        }
        fn forbid<T, E: DeError>(
            v: &Option<T>,
            variant: &str,
            key: &str,
        ) -> std::result::Result<(), E> {
            if v.is_some() {
                return Err(E::custom(format!(
                    "ensemble variant {variant} does not accept key `{key}`"
                )));
            }
            Ok(())
        }

        let v = raw.variant.as_str();
        match v {
            "Isotropic" => {
                forbid(&raw.p, v, "p")?;
                forbid(&raw.q, v, "q")?;
                forbid(&raw.r, v, "r")?;
                forbid(&raw.sigma, v, "sigma")?;
                forbid(&raw.m, v, "m")?;
                forbid(&raw.lambdas, v, "lambdas")?;
                Ok(EnsembleSpec::Isotropic { n: need(raw.n, v, "n")?, d: need(raw.d, v, "d")? })
            }
            "BiLevel" => {
                forbid(&raw.d, v, "d")?;
                forbid(&raw.sigma, v, "sigma")?;
                forbid(&raw.m, v, "m")?;
                forbid(&raw.lambdas, v, "lambdas")?;
                Ok(EnsembleSpec::BiLevel {
                    n: need(raw.n, v, "n")?,
                    p: need(raw.p, v, "p")?,
                    q: need(raw.q, v, "q")?,
                    r: need(raw.r, v, "r")?,
                })
            }
            "WeakFeatures" => {
                forbid(&raw.p, v, "p")?;
                forbid(&raw.q, v, "q")?;
                forbid(&raw.r, v, "r")?;
                forbid(&raw.m, v, "m")?;
                forbid(&raw.lambdas, v, "lambdas")?;
                Ok(EnsembleSpec::WeakFeatures {
                    n: need(raw.n, v, "n")?,
                    d: need(raw.d, v, "d")?,
                    sigma: need(raw.sigma, v, "sigma")?,
                })
            }
            "PolyDecay" => {
                forbid(&raw.p, v, "p")?;
                forbid(&raw.q, v, "q")?;
                forbid(&raw.r, v, "r")?;
                forbid(&raw.sigma, v, "sigma")?;
                forbid(&raw.lambdas, v, "lambdas")?;
                Ok(EnsembleSpec::PolyDecay {
                    n: need(raw.n, v, "n")?,
                    d: need(raw.d, v, "d")?,
                    m: need(raw.m, v, "m")?,
                })
            }
            "Explicit" => {
                forbid(&raw.n, v, "n")?;
                forbid(&raw.d, v, "d")?;
                forbid(&raw.p, v, "p")?;
                forbid(&raw.q, v, "q")?;
                forbid(&raw.r, v, "r")?;
                forbid(&raw.sigma, v, "sigma")?;
                forbid(&raw.m, v, "m")?;
                Ok(EnsembleSpec::Explicit { lambdas: need(raw.lambdas, v, "lambdas")? })
            }
            other => Err(D::Error::custom(format!("unknown ensemble variant `{other}`"))),
        }
    }
}

/// Location and noise level of the planted signal.
///
/// The clean label of a point is the sign of its 1-based coordinate-`t`
/// feature value rescaled to unit variance; each label flips independently
/// with probability `nu_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    /// 1-based index of the signal feature.
    pub t: usize,
    /// Label flip probability, in `[0, 1/2)`.
    pub nu_star: f64,
}

impl SignalSpec {
    pub fn noiseless(t: usize) -> Self {
        SignalSpec { t, nu_star: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::InvalidSignal { t: 0, max: 0 });
        }
        if !(0.0..0.5).contains(&self.nu_star) {
            return Err(Error::InvalidParams(format!(
                "nu_star = {} outside [0, 0.5)",
                self.nu_star
            )));
        }
        Ok(())
    }
}

/// A sampled design with latent real targets and noisy binary labels.
///
/// `phi` is column-major: feature columns are contiguous, matching the
/// per-column generation scheme.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub phi: Array2<f64>,
    /// Latent targets `z_i = <phi_i, alpha*>`, exact by construction.
    pub z: Array1<f64>,
    /// Labels in `{-1, +1}`: `sign(z_i)`, flipped w.p. `nu_star`.
    pub y: Array1<f64>,
    pub seed: u64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    pub fn d(&self) -> usize {
        self.phi.ncols()
    }
}

/// Resolves the bi-level dimension schedule: `d = round(n^p)`,
/// `s = round(n^r)` (at least 1).
pub fn bilevel_dims(n: usize, p: f64, r: f64) -> Result<(usize, usize)> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("bi-level needs n >= 2, got {n}")));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParams(format!("bi-level needs p > 1, got {p}")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParams(format!("bi-level needs 0 <= r < 1, got {r}")));
    }
    let df = (n as f64).powf(p).round();
    if !df.is_finite() || df > MAX_DIMENSION as f64 {
        return Err(Error::Overflow { d: df as u128, max: MAX_DIMENSION });
    }
    let d = df as usize;
    let s = ((n as f64).powf(r).round() as usize).max(1);
    debug_assert!(s < d);
    Ok((d, s))
}

/// Builds the eigenvalue spectrum of a diagonal ensemble.
///
/// Fails with [`Error::NotDiagonal`] for `WeakFeatures`, whose covariance
/// `sigma^2 11^T + I` has no diagonal representation in the feature basis.
pub fn build_spectrum(spec: &EnsembleSpec) -> Result<Spectrum> {
    match *spec {
        EnsembleSpec::Isotropic { d, .. } => {
            if d == 0 {
                return Err(Error::InvalidParams("isotropic needs d >= 1".into()));
            }
            Spectrum::new(vec![1.0; d])
        }
        EnsembleSpec::BiLevel { n, p, q, r } => {
            let (d, s) = bilevel_dims(n, p, r)?;
            if !(q > 0.0) || q > p - r {
                return Err(Error::InvalidParams(format!(
                    "bi-level needs 0 < q <= p - r = {}, got q = {q}",
                    p - r
                )));
            }
            let a = (n as f64).powf(-q);
            let high = a * d as f64 / s as f64;
            let low = (1.0 - a) * d as f64 / (d - s) as f64;
            let mut lambdas = vec![high; s];
            lambdas.resize(d, low);
            // q <= p - r guarantees high >= low up to rounding of (d, s);
            // equality holds at q = p - r where the spectrum degenerates to
            // isotropic. Rounding can leave `low` infinitesimally above
            // `high` there, which Spectrum::new would reject.
            if low > high {
                let mid = 0.5 * (low + high);
                if (low - high) / mid > 1e-9 {
                    return Err(Error::InvalidParams(format!(
                        "bi-level levels inverted: high = {high}, low = {low}"
                    )));
                }
                lambdas = vec![mid; d];
            }
            Spectrum::new(lambdas)
        }
        EnsembleSpec::WeakFeatures { .. } => Err(Error::NotDiagonal),
        EnsembleSpec::PolyDecay { d, m, .. } => {
            if d == 0 {
                return Err(Error::InvalidParams("poly decay needs d >= 1".into()));
            }
            if !(m >= 0.0) {
                return Err(Error::InvalidParams(format!("poly decay needs m >= 0, got {m}")));
            }
            Spectrum::new((1..=d).map(|k| (k as f64).powf(-m)).collect())
        }
        EnsembleSpec::Explicit { ref lambdas } => Spectrum::new(lambdas.clone()),
    }
}

/// Samples `rows` points from the ensemble with the planted signal.
///
/// Deterministic in `(spec, signal, rows, seed)`. For diagonal ensembles,
/// `phi[i, j] = sqrt(lambda_j) * g_ij` with `g_ij` standard normal, and
/// `z_i = phi[i, t-1] / sqrt(lambda_t)`, the inner product with the unit-
/// variance signal direction. Labels are `sign(z_i)` (with `sign(0) = +1`)
/// flipped independently with probability `nu_star`.
pub fn sample_dataset(
    spec: &EnsembleSpec,
    signal: &SignalSpec,
    rows: usize,
    seed: u64,
) -> Result<Dataset> {
    signal.validate()?;
    match *spec {
        EnsembleSpec::WeakFeatures { d, sigma, .. } => {
            if d == 0 {
                return Err(Error::InvalidParams("weak features needs d >= 1".into()));
            }
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::InvalidParams(format!("weak features needs sigma > 0, got {sigma}")));
            }
            let x = Array1::from_vec(
                rng::normal_vector(rng::derive_seed(seed, tags::SIGNAL, 0), rows)
                    .into_iter()
                    .map(|g| sigma * g)
                    .collect(),
            );
            let mut phi = Array2::zeros((rows, d).f());
            let mut buf = vec![0.0; rows];
            for j in 0..d {
                let mut r = rng::stream(rng::derive_seed(seed, tags::COLUMN, j as u64));
                rng::fill_standard_normal(&mut r, &mut buf);
                for (k, dst) in phi.column_mut(j).iter_mut().enumerate() {
                    *dst = x[k] + buf[k];
                }
            }
            let y = draw_labels(&x, signal.nu_star, seed);
            Ok(Dataset { phi, z: x, y, seed })
        }
        _ => {
            let spectrum = build_spectrum(spec)?;
            let d = spectrum.dim();
            let cap = spec.signal_cap()?;
            if signal.t > cap {
                return Err(Error::InvalidSignal { t: signal.t, max: cap });
            }
            let t0 = signal.t - 1;
            let mut phi = Array2::zeros((rows, d).f());
            let mut buf = vec![0.0; rows];
            for j in 0..d {
                let mut r = rng::stream(rng::derive_seed(seed, tags::COLUMN, j as u64));
                rng::fill_standard_normal(&mut r, &mut buf);
                let scale = spectrum.lambda(j).sqrt();
                for (dst, &g) in phi.column_mut(j).iter_mut().zip(buf.iter()) {
                    *dst = scale * g;
                }
            }
            let inv_scale = 1.0 / spectrum.lambda(t0).sqrt();
            let z = Array1::from_iter(phi.column(t0).iter().map(|&v| v * inv_scale));
            let y = draw_labels(&z, signal.nu_star, seed);
            Ok(Dataset { phi, z, y, seed })
        }
    }
}

/// Samples a noiseless evaluation set: same ensemble and signal, flip
/// probability forced to zero, and a seed substream disjoint from training
/// draws so passing the same seed cannot reproduce training rows.
pub fn sample_test_set(
    spec: &EnsembleSpec,
    signal: &SignalSpec,
    n_test: usize,
    seed: u64,
) -> Result<Dataset> {
    let clean = SignalSpec { t: signal.t, nu_star: 0.0 };
    sample_dataset(spec, &clean, n_test, rng::derive_seed(seed, tags::TEST_ROW, 0))
}

fn draw_labels(z: &Array1<f64>, nu_star: f64, seed: u64) -> Array1<f64> {
    let mut r = rng::stream(rng::derive_seed(seed, tags::NOISE, 0));
    z.mapv(|v| {
        let s = sign_pm(v);
        // Draw unconditionally so the stream advances identically at nu = 0.
        let u: f64 = r.random();
        if u < nu_star {
            -s
        } else {
            s
        }
    })
}
