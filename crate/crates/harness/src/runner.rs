//! Seeded parallel sweep execution. Trials are the unit of parallelism; each
//! job derives its own seed from (base_seed, value index, trial index), so
//! results depend only on the config, never on scheduling or thread count.
//! Rows come back in (value, trial) order and one writer emits them.

use crate::config::{Experiment, ExperimentConfig, SweepValue};
use crate::error::{HarnessError, Result};
use crate::rows::{write_csv, ResultRow, SCHEMA_VERSION};
use minterp::ensembles::{build_spectrum, sample_dataset, EnsembleSpec};
use minterp::fourier::{
    alias_family_recovery, alias_identity_deviation, closed_form_alias, regular_grid,
    FourierDesign,
};
use minterp::metrics::{
    analytic_losses, empirical_losses, margin_bound, su_cn, weak_features_empirical_losses,
};
use minterp::rng::{derive_seed, tags};
use minterp::solvers::{
    min_norm_interpolate, slackness_predictor, solve_svm_hard_margin, support_vector_fraction,
    SolverOptions, DEFAULT_SV_MARGIN_TOL,
};
use minterp::theory::{classify_regime, Regime};
use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub wall_time_seconds: f64,
    pub threads: usize,
}

/// Sidecar recorded next to the CSV. Wall time and thread count vary run to
/// run by design; the CSV itself must not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub schema_version: u32,
    pub config_sha256: String,
    pub artifact_version: String,
    pub wall_time_seconds: f64,
    pub n_rows: usize,
    pub threads: usize,
}

pub fn job_seed(base_seed: u64, value_idx: usize, trial: u64) -> u64 {
    derive_seed(derive_seed(base_seed, tags::VALUE, value_idx as u64), tags::TRIAL, trial)
}

pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutput> {
    config.validate()?;
    let jobs: Vec<(usize, u64)> = (0..config.sweep_values.len())
        .flat_map(|vi| (0..config.trials).map(move |t| (vi, t)))
        .collect();
    let start = Instant::now();
    let run_all = || -> Result<Vec<ResultRow>> {
        jobs.par_iter().map(|&(vi, trial)| run_job(config, vi, trial)).collect()
    };
    let (rows, threads) = match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| HarnessError::Config { path: "threads".to_string(), message: e.to_string() })?;
            (pool.install(run_all)?, pool.current_num_threads())
        }
        None => (run_all()?, rayon::current_num_threads()),
    };
    Ok(RunOutput { rows, wall_time_seconds: start.elapsed().as_secs_f64(), threads })
}

/// Writes the CSV and its `<out>.meta.json` sidecar; returns the meta.
pub fn write_outputs(config: &ExperimentConfig, output: &RunOutput, path: &Path) -> Result<RunMeta> {
    write_csv(path, &output.rows)?;
    let meta = RunMeta {
        schema_version: SCHEMA_VERSION,
        config_sha256: config.sha256_hex(),
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: output.wall_time_seconds,
        n_rows: output.rows.len(),
        threads: output.threads,
    };
    let mut meta_path = path.as_os_str().to_owned();
    meta_path.push(".meta.json");
    std::fs::write(meta_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(meta)
}

fn regime_name(regime: Regime) -> &'static str {
    match regime {
        Regime::BothSucceed => "BothSucceed",
        Regime::ClassificationOnly => "ClassificationOnly",
        Regime::BothFail => "BothFail",
        Regime::Boundary => "Boundary",
    }
}

fn bilevel_s(spec: &EnsembleSpec) -> Option<usize> {
    match *spec {
        EnsembleSpec::BiLevel { n, p, r, .. } => {
            minterp::ensembles::bilevel_dims(n, p, r).ok().map(|(_, s)| s)
        }
        _ => None,
    }
}

fn run_job(config: &ExperimentConfig, value_idx: usize, trial: u64) -> Result<ResultRow> {
    let value = config.sweep_values[value_idx];
    let spec = config.resolved_ensemble(value_idx)?;
    let seed = job_seed(config.base_seed, value_idx, trial);
    let mut row = ResultRow::new(config.experiment, value, trial, seed, spec.n(), spec.dim()?);
    row.s = bilevel_s(&spec);
    match config.experiment {
        Experiment::SvFractionSweep => sv_fraction_job(config, &spec, seed, &mut row)?,
        Experiment::RegimeSweepQ | Experiment::RegimeSweepN => regime_job(config, &spec, seed, &mut row)?,
        Experiment::MarginSweep => margin_job(config, &spec, seed, &mut row)?,
        Experiment::FourierSweep => fourier_job(&spec, value, &mut row)?,
        Experiment::EquivalenceCheck => equivalence_job(config, &spec, seed, &mut row)?,
    }
    Ok(row)
}

fn sv_fraction_job(
    config: &ExperimentConfig,
    spec: &EnsembleSpec,
    seed: u64,
    row: &mut ResultRow,
) -> Result<()> {
    let ds = sample_dataset(spec, &config.signal, spec.n(), seed)?;
    // The certificate is advisory here: a near-singular Gram (fast spectral
    // decay) fails its residual gate without invalidating the SVM run, so
    // its fields just stay empty.
    if let Ok(report) = slackness_predictor(&ds.phi, &ds.y) {
        row.all_sv = Some(report.all_sv);
        row.slack_min = Some(report.min_value);
    }
    let (coef, dual) = solve_svm_hard_margin(&ds.phi, &ds.y, &SolverOptions::svm())?;
    row.sv_fraction = Some(support_vector_fraction(&ds.phi, &ds.y, &coef.alpha, DEFAULT_SV_MARGIN_TOL));
    row.iterations = Some(dual.iterations);
    row.kkt_gap = Some(dual.kkt_gap);
    Ok(())
}

fn regime_job(
    config: &ExperimentConfig,
    spec: &EnsembleSpec,
    seed: u64,
    row: &mut ResultRow,
) -> Result<()> {
    let ds = sample_dataset(spec, &config.signal, spec.n(), seed)?;
    let spectrum = build_spectrum(spec)?;
    let opts = SolverOptions::linear();
    let real = min_norm_interpolate(&ds.phi, &ds.z, &opts)?;
    let binary = min_norm_interpolate(&ds.phi, &ds.y, &opts)?;
    let sr = su_cn(&real.alpha, &spectrum, config.signal.t)?;
    let sb = su_cn(&binary.alpha, &spectrum, config.signal.t)?;
    row.su_real = Some(sr.su);
    row.cn_real = Some(sr.cn);
    row.su_binary = Some(sb.su);
    row.cn_binary = Some(sb.cn);
    // Regression quality is judged on the real-target fit, classification on
    // the binary fit; each gets its exact risk from its own survival pair.
    row.excess_mse_analytic = Some(analytic_losses(sr.su, sr.cn).excess_mse);
    row.excess_cls_analytic = Some(analytic_losses(sb.su, sb.cn).excess_cls);
    if let EnsembleSpec::BiLevel { p, q, r, .. } = *spec {
        row.regime = Some(regime_name(classify_regime(p, q, r)?.regime).to_string());
    }
    Ok(())
}

fn margin_job(
    config: &ExperimentConfig,
    spec: &EnsembleSpec,
    seed: u64,
    row: &mut ResultRow,
) -> Result<()> {
    let delta = config.tolerances["delta"];
    let ds = sample_dataset(spec, &config.signal, spec.n(), seed)?;
    let (coef, dual) = solve_svm_hard_margin(&ds.phi, &ds.y, &SolverOptions::svm())?;
    row.sv_fraction = Some(support_vector_fraction(&ds.phi, &ds.y, &coef.alpha, DEFAULT_SV_MARGIN_TOL));
    row.iterations = Some(dual.iterations);
    row.kkt_gap = Some(dual.kkt_gap);
    let mb = margin_bound(&ds.phi, &ds.y, &coef.alpha, delta)?;
    row.gamma = Some(mb.gamma);
    row.gamma_n = Some(mb.gamma_n);
    row.frob = Some(mb.frob);
    row.ramp_term = Some(mb.ramp_term);
    row.complexity_term = Some(mb.complexity_term);
    row.confidence_term = Some(mb.confidence_term);
    row.bound = Some(mb.bound);
    let report = match *spec {
        EnsembleSpec::WeakFeatures { sigma, .. } => {
            weak_features_empirical_losses(&coef.alpha, sigma, config.n_test, seed)?
        }
        _ => {
            let spectrum = build_spectrum(spec)?;
            empirical_losses(&coef.alpha, config.signal.t, &spectrum, config.n_test, seed)?
        }
    };
    row.mse_hat = Some(report.mse_hat);
    row.mse_std = Some(report.mse_std);
    row.err_hat = Some(report.err_hat);
    row.std_err = Some(report.std_err);
    Ok(())
}

fn fourier_job(spec: &EnsembleSpec, value: SweepValue, row: &mut ResultRow) -> Result<()> {
    let (n, d) = match *spec {
        EnsembleSpec::Isotropic { n, d } => (n, d),
        _ => unreachable!("validated to be the Isotropic carrier"),
    };
    let lambda_h = value.as_f64();
    let closed = closed_form_alias(n, d, lambda_h)?;
    let design = FourierDesign::bilevel(n, d, 1, lambda_h)?;
    let grid = regular_grid(n)?;
    let targets = Array1::from_iter(grid.iter().map(|&x| x.cos()));
    let alpha = design.weighted_min_norm(&targets)?;
    let recovery = alias_family_recovery(&design, &alpha, 1)?;
    row.a_closed = Some(closed.a);
    row.b_closed = Some(closed.b);
    row.sigma_cn_closed = Some(closed.sigma_cn);
    row.a_recovered = Some(recovery.on_target);
    row.alias_dev = Some(
        (recovery.alias_min - closed.b).abs().max((recovery.alias_max - closed.b).abs()),
    );
    row.off_family_max = Some(recovery.off_family_max);
    row.alias_identity_dev = Some(alias_identity_deviation(&design, 1)?);
    Ok(())
}

fn equivalence_job(
    config: &ExperimentConfig,
    spec: &EnsembleSpec,
    seed: u64,
    row: &mut ResultRow,
) -> Result<()> {
    let ds = sample_dataset(spec, &config.signal, spec.n(), seed)?;
    let certificate = slackness_predictor(&ds.phi, &ds.y)?;
    row.all_sv = Some(certificate.all_sv);
    row.slack_min = Some(certificate.min_value);
    let (svm, dual) = solve_svm_hard_margin(&ds.phi, &ds.y, &SolverOptions::svm())?;
    let mn = min_norm_interpolate(&ds.phi, &ds.y, &SolverOptions::linear())?;
    let denom = mn.alpha.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())).max(1e-300);
    let gap = svm
        .alpha
        .iter()
        .zip(mn.alpha.iter())
        .fold(0.0f64, |acc, (&a, &b)| acc.max((a - b).abs()));
    row.coef_gap_rel_inf = Some(gap / denom);
    row.sv_fraction = Some(support_vector_fraction(&ds.phi, &ds.y, &svm.alpha, DEFAULT_SV_MARGIN_TOL));
    row.iterations = Some(dual.iterations);
    row.kkt_gap = Some(dual.kkt_gap);
    Ok(())
}
