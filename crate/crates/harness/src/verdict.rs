//! Pass/fail evaluation of a completed sweep against the config's named
//! thresholds. Each experiment gets the predicates its headline claim
//! needs: monotone medians, saturation levels, per-row ceilings.

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::rows::ResultRow;
use crate::runner::job_seed;
use minterp::ensembles::EnsembleSpec;
use minterp::theory;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerdictReport {
    pub experiment: Experiment,
    pub checks: Vec<Check>,
}

impl VerdictReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn incomplete(message: String) -> HarnessError {
    HarnessError::IncompleteData { message }
}

/// Groups rows by sweep value in config order, checking the (value, trial)
/// grid is complete, unique, and seeded as the config dictates.
fn group_rows<'a>(
    config: &ExperimentConfig,
    rows: &'a [ResultRow],
) -> Result<Vec<Vec<&'a ResultRow>>> {
    let trials = config.trials;
    let mut grid: Vec<Vec<Option<&ResultRow>>> =
        vec![vec![None; trials as usize]; config.sweep_values.len()];
    for row in rows {
        if row.experiment != config.experiment {
            return Err(incomplete(format!(
                "row for {} in a {} run",
                row.experiment, config.experiment
            )));
        }
        let vi = config
            .sweep_values
            .iter()
            .position(|v| *v == row.sweep_value)
            .ok_or_else(|| incomplete(format!("row with foreign sweep value {:?}", row.sweep_value)))?;
        if row.trial >= trials {
            return Err(incomplete(format!("trial {} outside 0..{trials}", row.trial)));
        }
        if row.seed != job_seed(config.base_seed, vi, row.trial) {
            return Err(incomplete(format!(
                "row ({:?}, {}) was produced under a different base seed",
                row.sweep_value, row.trial
            )));
        }
        let slot = &mut grid[vi][row.trial as usize];
        if slot.is_some() {
            return Err(incomplete(format!("duplicate row ({:?}, {})", row.sweep_value, row.trial)));
        }
        *slot = Some(row);
    }
    grid.into_iter()
        .enumerate()
        .map(|(vi, value_rows)| {
            value_rows
                .into_iter()
                .enumerate()
                .map(|(t, slot)| {
                    slot.ok_or_else(|| {
                        incomplete(format!(
                            "missing row ({:?}, {t})",
                            config.sweep_values[vi]
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("metrics are comparable"));
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Median of one metric per sweep value, sorted by ascending value.
fn medians_by_value(
    config: &ExperimentConfig,
    groups: &[Vec<&ResultRow>],
    name: &str,
    metric: impl Fn(&ResultRow) -> Option<f64>,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(groups.len());
    for (vi, group) in groups.iter().enumerate() {
        let mut values = Vec::with_capacity(group.len());
        for row in group {
            values.push(metric(row).ok_or_else(|| {
                incomplete(format!("row ({:?}, {}) lacks {name}", row.sweep_value, row.trial))
            })?);
        }
        out.push((config.sweep_values[vi].as_f64(), median(values)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("sweep values are comparable"));
    Ok(out)
}

fn fmt_series(series: &[(f64, f64)]) -> String {
    series
        .iter()
        .map(|(v, m)| format!("{v:.4}:{m:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn verdict(config: &ExperimentConfig, rows: &[ResultRow]) -> Result<VerdictReport> {
    config.validate()?;
    let groups = group_rows(config, rows)?;
    let tol = |key: &str| config.tolerances[key];
    let mut checks = Vec::new();
    match config.experiment {
        Experiment::SvFractionSweep => {
            let series = medians_by_value(config, &groups, "sv_fraction", |r| r.sv_fraction)?;
            let monotone = series.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12);
            checks.push(Check {
                name: "median_sv_fraction_non_decreasing",
                pass: monotone,
                detail: fmt_series(&series),
            });
            let threshold = tol("sv_saturation_threshold");
            let from = tol("sv_saturation_from");
            let saturated = series.iter().filter(|(v, _)| *v >= from).all(|(_, m)| *m >= threshold);
            checks.push(Check {
                name: "median_sv_fraction_saturates",
                pass: saturated,
                detail: format!(">= {threshold} for values >= {from}; {}", fmt_series(&series)),
            });
        }
        Experiment::RegimeSweepQ => {
            let margin = tol("cls_ordering_margin");
            let series =
                medians_by_value(config, &groups, "excess_cls_analytic", |r| r.excess_cls_analytic)?;
            let increasing = series.windows(2).all(|w| w[1].1 - w[0].1 > margin);
            checks.push(Check {
                name: "median_excess_cls_increasing_in_q",
                pass: increasing,
                detail: format!("gap > {margin}; {}", fmt_series(&series)),
            });
        }
        Experiment::RegimeSweepN => {
            let slack = tol("trend_tol");
            let cls =
                medians_by_value(config, &groups, "excess_cls_analytic", |r| r.excess_cls_analytic)?;
            let mse =
                medians_by_value(config, &groups, "excess_mse_analytic", |r| r.excess_mse_analytic)?;
            checks.push(Check {
                name: "median_excess_cls_non_increasing_in_n",
                pass: cls.windows(2).all(|w| w[1].1 <= w[0].1 + slack),
                detail: fmt_series(&cls),
            });
            checks.push(Check {
                name: "median_excess_mse_non_decreasing_in_n",
                pass: mse.windows(2).all(|w| w[1].1 >= w[0].1 - slack),
                detail: fmt_series(&mse),
            });
            // Optional power-law leg, armed by the presence of `exponent_tol`:
            // the log-log slope of median binary contamination against n must
            // land in the predicted exponent band.
            if let Some(&etol) = config.tolerances.get("exponent_tol") {
                let EnsembleSpec::BiLevel { p, q, r, .. } = config.ensemble else {
                    return Err(HarnessError::Config {
                        path: "ensemble".into(),
                        message: "the exponent check needs a BiLevel ensemble".into(),
                    });
                };
                let cn = medians_by_value(config, &groups, "cn_binary", |r| r.cn_binary)?;
                let ns: Vec<usize> = cn.iter().map(|w| w.0 as usize).collect();
                let medians: Vec<f64> = cn.iter().map(|w| w.1).collect();
                let fit = theory::fit_exponent(&ns, &medians)?;
                let pred = theory::predicted_scalings(p, q, r, config.signal.nu_star)?;
                let lo = pred.cn_lower_exponent - etol;
                let hi = pred.cn_upper_exponent + etol;
                checks.push(Check {
                    name: "cn_exponent_within_predicted_band",
                    pass: (lo..=hi).contains(&fit.slope),
                    detail: format!(
                        "slope {:.4} in [{lo:.4}, {hi:.4}], r2 {:.4}",
                        fit.slope, fit.r_squared
                    ),
                });
            }
        }
        Experiment::MarginSweep => {
            let floor = tol("bound_min");
            let mut worst = f64::INFINITY;
            for group in &groups {
                for row in group {
                    let b = row.bound.ok_or_else(|| {
                        incomplete(format!("row ({:?}, {}) lacks bound", row.sweep_value, row.trial))
                    })?;
                    worst = worst.min(b);
                }
            }
            checks.push(Check {
                name: "every_bound_exceeds_floor",
                pass: worst > floor,
                detail: format!("min bound {worst:.4} vs floor {floor}"),
            });
        }
        Experiment::FourierSweep => {
            let coef_tol = tol("coef_tol");
            let alias_tol = tol("alias_tol");
            let (mut coef_dev, mut off_max, mut ident_dev) = (0.0f64, 0.0f64, 0.0f64);
            for group in &groups {
                for row in group {
                    let missing = |what: &str| {
                        incomplete(format!("row ({:?}, {}) lacks {what}", row.sweep_value, row.trial))
                    };
                    let a_rec = row.a_recovered.ok_or_else(|| missing("a_recovered"))?;
                    let a_cl = row.a_closed.ok_or_else(|| missing("a_closed"))?;
                    coef_dev = coef_dev.max((a_rec - a_cl).abs());
                    coef_dev = coef_dev.max(row.alias_dev.ok_or_else(|| missing("alias_dev"))?);
                    off_max = off_max.max(row.off_family_max.ok_or_else(|| missing("off_family_max"))?);
                    ident_dev =
                        ident_dev.max(row.alias_identity_dev.ok_or_else(|| missing("alias_identity_dev"))?);
                }
            }
            checks.push(Check {
                name: "coefficients_match_closed_form",
                pass: coef_dev <= coef_tol,
                detail: format!("max deviation {coef_dev:.3e} vs {coef_tol:.1e}"),
            });
            checks.push(Check {
                name: "off_family_coefficients_vanish",
                pass: off_max <= coef_tol,
                detail: format!("max off-family {off_max:.3e} vs {coef_tol:.1e}"),
            });
            checks.push(Check {
                name: "alias_identities_hold",
                pass: ident_dev <= alias_tol,
                detail: format!("max deviation {ident_dev:.3e} vs {alias_tol:.1e}"),
            });
        }
        Experiment::EquivalenceCheck => {
            let gap_tol = tol("coef_gap_tol");
            let min_fraction = tol("min_all_sv_fraction");
            let mut certified = 0usize;
            let mut total = 0usize;
            let mut worst_gap = 0.0f64;
            let mut all_match = true;
            for group in &groups {
                for row in group {
                    let missing = |what: &str| {
                        incomplete(format!("row ({:?}, {}) lacks {what}", row.sweep_value, row.trial))
                    };
                    total += 1;
                    if row.all_sv.ok_or_else(|| missing("all_sv"))? {
                        certified += 1;
                        let gap = row.coef_gap_rel_inf.ok_or_else(|| missing("coef_gap_rel_inf"))?;
                        let fraction = row.sv_fraction.ok_or_else(|| missing("sv_fraction"))?;
                        worst_gap = worst_gap.max(gap);
                        if gap > gap_tol || fraction != 1.0 {
                            all_match = false;
                        }
                    }
                }
            }
            checks.push(Check {
                name: "certified_rows_match_min_norm",
                pass: all_match,
                detail: format!("worst relative gap {worst_gap:.3e} vs {gap_tol:.1e}, sv fraction 1 required"),
            });
            let fraction = certified as f64 / total as f64;
            checks.push(Check {
                name: "all_sv_certificate_frequency",
                pass: fraction >= min_fraction,
                detail: format!("{certified}/{total} certified ({fraction:.3} vs {min_fraction})"),
            });
        }
    }
    Ok(VerdictReport { experiment: config.experiment, checks })
}
