//! Experiment configuration: what to sweep, over which ensemble, with which
//! tolerances. A config is a single JSON document mirroring
//! [`ExperimentConfig`] field for field; unknown keys are errors.

use crate::error::{HarnessError, Result};
use minterp::ensembles::{EnsembleSpec, SignalSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    /// Support-vector fraction of the hard-margin SVM as the ensemble's
    /// free knob moves: `q` for BiLevel, the decay exponent for PolyDecay,
    /// `d` for Isotropic and WeakFeatures.
    SvFractionSweep,
    /// Survival/contamination and analytic excess risks of min-norm
    /// interpolation on a BiLevel ensemble, sweeping `q`.
    RegimeSweepQ,
    /// Same metrics sweeping `n` with `(p, q, r)` fixed.
    RegimeSweepN,
    /// SVM margin-bound pieces plus Monte-Carlo test risk, sweeping `d` on
    /// Isotropic or WeakFeatures.
    MarginSweep,
    /// Weighted Fourier recovery against the alias closed form, sweeping
    /// the favored-frequency weight.
    FourierSweep,
    /// SVM vs min-norm-of-labels coefficient agreement together with the
    /// slackness certificate, sweeping `d` (Isotropic) or `q` (BiLevel).
    EquivalenceCheck,
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Experiment::SvFractionSweep => "SvFractionSweep",
            Experiment::RegimeSweepQ => "RegimeSweepQ",
            Experiment::RegimeSweepN => "RegimeSweepN",
            Experiment::MarginSweep => "MarginSweep",
            Experiment::FourierSweep => "FourierSweep",
            Experiment::EquivalenceCheck => "EquivalenceCheck",
        }
    }

    pub fn from_id(s: &str) -> Option<Self> {
        Some(match s {
            "SvFractionSweep" => Experiment::SvFractionSweep,
            "RegimeSweepQ" => Experiment::RegimeSweepQ,
            "RegimeSweepN" => Experiment::RegimeSweepN,
            "MarginSweep" => Experiment::MarginSweep,
            "FourierSweep" => Experiment::FourierSweep,
            "EquivalenceCheck" => Experiment::EquivalenceCheck,
            _ => return None,
        })
    }

    /// Tolerance keys this experiment reads, at run time or verdict time.
    /// [`ExperimentConfig::validate`] requires all of them.
    pub fn required_tolerances(&self) -> &'static [&'static str] {
        match self {
            Experiment::SvFractionSweep => &["sv_saturation_threshold", "sv_saturation_from"],
            Experiment::RegimeSweepQ => &["cls_ordering_margin"],
            Experiment::RegimeSweepN => &["trend_tol"],
            Experiment::MarginSweep => &["delta", "bound_min"],
            Experiment::FourierSweep => &["coef_tol", "alias_tol"],
            Experiment::EquivalenceCheck => &["coef_gap_tol", "min_all_sv_fraction"],
        }
    }

    fn uses_n_test(&self) -> bool {
        matches!(self, Experiment::MarginSweep)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One point of a sweep: kept as written in the config so integer sweeps
/// (dimensions, sample sizes) stay exact and format as integers in the CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Int(i64),
    Real(f64),
}

impl SweepValue {
    pub fn as_f64(&self) -> f64 {
        match *self {
            SweepValue::Int(i) => i as f64,
            SweepValue::Real(r) => r,
        }
    }

    /// The value as a positive dimension or sample count. Real-typed values
    /// are rejected even when integral, so config intent stays unambiguous.
    pub fn as_count(&self) -> Option<usize> {
        match *self {
            SweepValue::Int(i) if i >= 1 => Some(i as usize),
            _ => None,
        }
    }

    /// CSV cell: integers plain, reals in full 17-significant-digit form.
    pub fn to_cell(&self) -> String {
        match *self {
            SweepValue::Int(i) => i.to_string(),
            SweepValue::Real(r) => format!("{r:.16e}"),
        }
    }

    pub fn parse_cell(cell: &str) -> Option<SweepValue> {
        if cell.contains(['e', 'E', '.']) {
            cell.parse::<f64>().ok().map(SweepValue::Real)
        } else {
            cell.parse::<i64>().ok().map(SweepValue::Int)
        }
    }
}

fn default_max_elements() -> usize {
    20_000_000
}

/// A full experiment description. `sweep_values` drive the ensemble's free
/// knob per [`Experiment`]; `tolerances` hold the named thresholds the run
/// and verdict read; `max_elements` caps the per-trial design size `n * d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub ensemble: EnsembleSpec,
    pub signal: SignalSpec,
    pub sweep_values: Vec<SweepValue>,
    pub trials: u64,
    pub n_test: usize,
    pub base_seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub output_path: String,
    #[serde(default = "default_max_elements")]
    pub max_elements: usize,
}

fn config_err(path: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config { path: path.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_json_str(json: &str) -> Result<Self> {
        serde_json::from_str(json)
            .map_err(|e| config_err("<json>", e.to_string()))
    }

    /// The ensemble with sweep value `idx` substituted for its free knob.
    /// For `FourierSweep` the Isotropic spec only carries `(n, d)` and the
    /// value is the favored-frequency weight, used by the job directly.
    pub fn resolved_ensemble(&self, idx: usize) -> Result<EnsembleSpec> {
        let value = *self
            .sweep_values
            .get(idx)
            .ok_or_else(|| config_err("sweep_values", format!("index {idx} out of range")))?;
        let path = format!("sweep_values[{idx}]");
        let count = |what: &str| -> Result<usize> {
            value.as_count().ok_or_else(|| {
                config_err(&path, format!("{what} sweeps need positive JSON integers, got {value:?}"))
            })
        };
        match (self.experiment, &self.ensemble) {
            (
                Experiment::SvFractionSweep
                | Experiment::RegimeSweepQ
                | Experiment::EquivalenceCheck,
                &EnsembleSpec::BiLevel { n, p, r, .. },
            ) => Ok(EnsembleSpec::BiLevel { n, p, q: value.as_f64(), r }),
            (Experiment::SvFractionSweep, &EnsembleSpec::PolyDecay { n, d, .. }) => {
                Ok(EnsembleSpec::PolyDecay { n, d, m: value.as_f64() })
            }
            (
                Experiment::SvFractionSweep | Experiment::MarginSweep | Experiment::EquivalenceCheck,
                &EnsembleSpec::Isotropic { n, .. },
            ) => Ok(EnsembleSpec::Isotropic { n, d: count("dimension")? }),
            (
                Experiment::SvFractionSweep | Experiment::MarginSweep,
                &EnsembleSpec::WeakFeatures { n, sigma, .. },
            ) => Ok(EnsembleSpec::WeakFeatures { n, d: count("dimension")?, sigma }),
            (Experiment::RegimeSweepN, &EnsembleSpec::BiLevel { p, q, r, .. }) => {
                let n = count("sample-size")?;
                Ok(EnsembleSpec::BiLevel { n, p, q, r })
            }
            (Experiment::FourierSweep, &EnsembleSpec::Isotropic { n, d }) => {
                if !(value.as_f64() >= 1.0) {
                    return Err(config_err(&path, "favored weights must be >= 1"));
                }
                Ok(EnsembleSpec::Isotropic { n, d })
            }
            (exp, ens) => Err(config_err(
                "ensemble",
                format!("{exp} cannot sweep over a {} ensemble", ensemble_name(ens)),
            )),
        }
    }

    /// Static validation: field sanity, experiment/ensemble compatibility of
    /// every sweep value, required tolerance keys, and the memory cap.
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(config_err("trials", "need at least one trial"));
        }
        if self.sweep_values.is_empty() {
            return Err(config_err("sweep_values", "need at least one value"));
        }
        if self.output_path.is_empty() {
            return Err(config_err("output_path", "must not be empty"));
        }
        self.signal
            .validate()
            .map_err(|e| config_err("signal", e.to_string()))?;
        for key in self.experiment.required_tolerances() {
            if !self.tolerances.contains_key(*key) {
                return Err(config_err(
                    &format!("tolerances.{key}"),
                    format!("{} requires this tolerance", self.experiment),
                ));
            }
        }
        if self.experiment.uses_n_test() && self.n_test < 1 {
            return Err(config_err("n_test", "this experiment estimates test risk; need n_test >= 1"));
        }
        if let Some(delta) = self.tolerances.get("delta") {
            if !(*delta > 0.0 && *delta < 1.0) {
                return Err(config_err("tolerances.delta", format!("confidence level must be in (0, 1), got {delta}")));
            }
        }
        if self.experiment == Experiment::FourierSweep {
            match self.ensemble {
                EnsembleSpec::Isotropic { n, d } => {
                    if n % 2 == 0 || n < 3 || d % 2 == 0 || d % n != 0 {
                        return Err(config_err(
                            "ensemble",
                            format!("Fourier grids need odd n >= 3 and odd d a multiple of n, got n = {n}, d = {d}"),
                        ));
                    }
                }
                _ => {
                    return Err(config_err(
                        "ensemble",
                        "FourierSweep reads grid size and feature count from an Isotropic {n, d} entry",
                    ))
                }
            }
        }
        let mut worst = 0usize;
        for idx in 0..self.sweep_values.len() {
            let spec = self.resolved_ensemble(idx)?;
            let d = spec
                .dim()
                .map_err(|e| config_err(&format!("sweep_values[{idx}]"), e.to_string()))?;
            match spec {
                EnsembleSpec::WeakFeatures { sigma, .. } => {
                    if !(sigma > 0.0) || !sigma.is_finite() {
                        return Err(config_err("ensemble", format!("weak features need sigma > 0, got {sigma}")));
                    }
                }
                _ if self.experiment != Experiment::FourierSweep => {
                    minterp::ensembles::build_spectrum(&spec)
                        .map_err(|e| config_err(&format!("sweep_values[{idx}]"), e.to_string()))?;
                }
                _ => {}
            }
            if self.experiment != Experiment::FourierSweep {
                let cap = spec
                    .signal_cap()
                    .map_err(|e| config_err(&format!("sweep_values[{idx}]"), e.to_string()))?;
                if self.signal.t > cap {
                    return Err(config_err(
                        "signal.t",
                        format!("index {} exceeds the resolved cap {cap} at sweep_values[{idx}]", self.signal.t),
                    ));
                }
            }
            worst = worst.max(spec.n() * d);
        }
        if worst > self.max_elements {
            return Err(HarnessError::MemoryCap { required: worst, cap: self.max_elements });
        }
        Ok(())
    }

    /// Canonical JSON for hashing: struct field order, sorted tolerance keys.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialization cannot fail")
    }

    pub fn sha256_hex(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            use fmt::Write;
            write!(out, "{byte:02x}").expect("writing to string");
        }
        out
    }
}

fn ensemble_name(spec: &EnsembleSpec) -> &'static str {
    match spec {
        EnsembleSpec::Isotropic { .. } => "Isotropic",
        EnsembleSpec::BiLevel { .. } => "BiLevel",
        EnsembleSpec::WeakFeatures { .. } => "WeakFeatures",
        EnsembleSpec::PolyDecay { .. } => "PolyDecay",
        EnsembleSpec::Explicit { .. } => "Explicit",
    }
}
