use clap::{Parser, Subcommand};
use harness::{config::ExperimentConfig, rows, runner, verdict};
use minterp::ensembles::{build_spectrum, EnsembleSpec};
use minterp::fourier::{
    alias_family_recovery, alias_identity_deviation, closed_form_alias, regular_grid,
    FourierDesign,
};
use minterp::theory::{all_sv_condition_general, all_sv_condition_isotropic, bilevel_sv_sufficient, classify_regime};
use ndarray::Array1;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "minterp", version, about = "Seeded experiment sweeps for overparameterized interpolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured sweep; write `<out>` CSV plus `<out>.meta.json`.
    Sweep {
        /// JSON config file mirroring ExperimentConfig.
        config: PathBuf,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's trials per sweep value.
        #[arg(long)]
        trials: Option<u64>,
        /// Worker threads (default: one per core).
        #[arg(long)]
        threads: Option<usize>,
        /// Override the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-read a finished sweep and evaluate its pass/fail checks.
    Check {
        config: PathBuf,
        results: PathBuf,
    },
    /// Summarize a diagonal ensemble: spectrum stats and support conditions.
    Spectrum {
        /// EnsembleSpec as JSON, e.g. '{"variant":"BiLevel","n":529,"p":1.5,"q":0.5,"r":0.5}'.
        ensemble: String,
    },
    /// Check the two-level Fourier recovery against its closed form.
    Fourier {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long = "lambda-high")]
        lambda_high: f64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(path)?;
    Ok(ExperimentConfig::from_json_str(&text)?)
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Sweep { config, seed, trials, threads, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.base_seed = seed;
            }
            if let Some(trials) = trials {
                cfg.trials = trials;
            }
            if let Some(out) = out {
                cfg.output_path = out.to_string_lossy().into_owned();
            }
            let output = runner::run_experiment(&cfg, threads)?;
            let path = PathBuf::from(&cfg.output_path);
            let meta = runner::write_outputs(&cfg, &output, &path)?;
            println!(
                "wrote {} rows to {} ({:.2} s, {} threads, config {})",
                meta.n_rows,
                path.display(),
                meta.wall_time_seconds,
                meta.threads,
                &meta.config_sha256[..12],
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { config, results } => {
            let cfg = load_config(&config)?;
            let rows = rows::read_csv(&results)?;
            let report = verdict::verdict(&cfg, &rows)?;
            for check in &report.checks {
                let tag = if check.pass { "PASS" } else { "FAIL" };
                println!("{tag} {}: {}", check.name, check.detail);
            }
            if report.pass() {
                println!("verdict: PASS ({} rows)", rows.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("verdict: FAIL");
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Spectrum { ensemble } => {
            let spec: EnsembleSpec = serde_json::from_str(&ensemble)?;
            print_spectrum(&spec)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Fourier { n, d, lambda_high } => {
            print_fourier(n, d, lambda_high)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_spectrum(spec: &EnsembleSpec) -> Result<(), Box<dyn std::error::Error>> {
    let n = spec.n();
    let spectrum = build_spectrum(spec)?;
    let lambdas = spectrum.lambdas();
    println!("n = {n}, d = {}", spectrum.dim());
    println!(
        "trace = {:.6}, l1 = {:.6}, l2 = {:.6}, linf = {:.6}",
        spectrum.trace(),
        spectrum.l1(),
        spectrum.l2(),
        spectrum.linf()
    );
    println!("lambda[0] = {:.6e}, lambda[d-1] = {:.6e}", lambdas[0], lambdas[spectrum.dim() - 1]);
    let general = all_sv_condition_general(&spectrum, n)?;
    println!(
        "all-SV spectral condition: holds = {} (lhs {:.4e} vs rhs {:.4e})",
        general.holds, general.lhs, general.rhs
    );
    match *spec {
        EnsembleSpec::Isotropic { n, d } => {
            let iso = all_sv_condition_isotropic(n, d)?;
            println!(
                "isotropic threshold: holds = {} (d {:.4e} vs {:.4e})",
                iso.holds, iso.lhs, iso.rhs
            );
        }
        EnsembleSpec::BiLevel { n, p, q, r } => {
            let verdict = classify_regime(p, q, r)?;
            println!(
                "regime: {:?} (q_low = {:.4}, q_high = {:.4}), limits mse = {:?}, cls = {:?}",
                verdict.regime, verdict.q_low, verdict.q_high, verdict.limit_mse, verdict.limit_cls
            );
            println!("bi-level all-SV sufficient condition: {}", bilevel_sv_sufficient(p, q, r)?);
            let (_, s) = minterp::ensembles::bilevel_dims(n, p, r)?;
            println!("s = {s} favored directions");
        }
        _ => {}
    }
    Ok(())
}

fn print_fourier(n: usize, d: usize, lambda_high: f64) -> Result<(), Box<dyn std::error::Error>> {
    let closed = closed_form_alias(n, d, lambda_high)?;
    println!(
        "closed form: a = {:.12}, b = {:.12}, sigma_cn = {:.12}, aliases = {}",
        closed.a,
        closed.b,
        closed.sigma_cn,
        d / n - 1
    );
    let design = FourierDesign::bilevel(n, d, 1, lambda_high)?;
    let grid = regular_grid(n)?;
    let targets = Array1::from_iter(grid.iter().map(|&x| x.cos()));
    let alpha = design.weighted_min_norm(&targets)?;
    let recovery = alias_family_recovery(&design, &alpha, 1)?;
    println!(
        "recovered: a = {:.12} (dev {:.3e}), alias dev {:.3e}, off-family {:.3e}",
        recovery.on_target,
        (recovery.on_target - closed.a).abs(),
        (recovery.alias_min - closed.b).abs().max((recovery.alias_max - closed.b).abs()),
        recovery.off_family_max
    );
    println!("grid collapse identity deviation: {:.3e}", alias_identity_deviation(&design, 1)?);
    Ok(())
}
