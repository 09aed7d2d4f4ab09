//! The flat result schema. Every experiment writes the same column superset;
//! metrics an experiment does not produce stay empty. Floats are written
//! with 17 significant digits so parsing them back is exact, which makes
//! byte-identical reruns and lossless `check` runs possible.

use crate::config::{Experiment, SweepValue};
use crate::error::{HarnessError, Result};
use std::fs;
use std::path::Path;

/// Bumped whenever a column changes meaning; appending columns keeps the
/// version and extends [`HEADER`] on the right.
pub const SCHEMA_VERSION: u32 = 1;

pub const HEADER: &str = "schema,experiment,sweep_value,trial,seed,n,d,s,regime,\
sv_fraction,all_sv,slack_min,iterations,kkt_gap,coef_gap_rel_inf,\
su_real,cn_real,su_binary,cn_binary,excess_mse_analytic,excess_cls_analytic,\
mse_hat,mse_std,err_hat,std_err,\
gamma,gamma_n,frob,ramp_term,complexity_term,confidence_term,bound,\
a_closed,b_closed,sigma_cn_closed,a_recovered,alias_dev,off_family_max,alias_identity_dev";

const FIELD_COUNT: usize = 39;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub sweep_value: SweepValue,
    pub trial: u64,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub s: Option<usize>,
    pub regime: Option<String>,
    pub sv_fraction: Option<f64>,
    pub all_sv: Option<bool>,
    pub slack_min: Option<f64>,
    pub iterations: Option<usize>,
    pub kkt_gap: Option<f64>,
    pub coef_gap_rel_inf: Option<f64>,
    pub su_real: Option<f64>,
    pub cn_real: Option<f64>,
    pub su_binary: Option<f64>,
    pub cn_binary: Option<f64>,
    pub excess_mse_analytic: Option<f64>,
    pub excess_cls_analytic: Option<f64>,
    pub mse_hat: Option<f64>,
    pub mse_std: Option<f64>,
    pub err_hat: Option<f64>,
    pub std_err: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_n: Option<f64>,
    pub frob: Option<f64>,
    pub ramp_term: Option<f64>,
    pub complexity_term: Option<f64>,
    pub confidence_term: Option<f64>,
    pub bound: Option<f64>,
    pub a_closed: Option<f64>,
    pub b_closed: Option<f64>,
    pub sigma_cn_closed: Option<f64>,
    pub a_recovered: Option<f64>,
    pub alias_dev: Option<f64>,
    pub off_family_max: Option<f64>,
    pub alias_identity_dev: Option<f64>,
}

impl ResultRow {
    pub fn new(
        experiment: Experiment,
        sweep_value: SweepValue,
        trial: u64,
        seed: u64,
        n: usize,
        d: usize,
    ) -> Self {
        ResultRow {
            experiment,
            sweep_value,
            trial,
            seed,
            n,
            d,
            s: None,
            regime: None,
            sv_fraction: None,
            all_sv: None,
            slack_min: None,
            iterations: None,
            kkt_gap: None,
            coef_gap_rel_inf: None,
            su_real: None,
            cn_real: None,
            su_binary: None,
            cn_binary: None,
            excess_mse_analytic: None,
            excess_cls_analytic: None,
            mse_hat: None,
            mse_std: None,
            err_hat: None,
            std_err: None,
            gamma: None,
            gamma_n: None,
            frob: None,
            ramp_term: None,
            complexity_term: None,
            confidence_term: None,
            bound: None,
            a_closed: None,
            b_closed: None,
            sigma_cn_closed: None,
            a_recovered: None,
            alias_dev: None,
            off_family_max: None,
            alias_identity_dev: None,
        }
    }

    pub fn to_record(&self) -> String {
        let f = fmt_opt_f64;
        let cells: [String; FIELD_COUNT] = [
            SCHEMA_VERSION.to_string(),
            self.experiment.id().to_string(),
            self.sweep_value.to_cell(),
            self.trial.to_string(),
            self.seed.to_string(),
            self.n.to_string(),
            self.d.to_string(),
            self.s.map(|v| v.to_string()).unwrap_or_default(),
            self.regime.clone().unwrap_or_default(),
            f(self.sv_fraction),
            self.all_sv.map(|v| v.to_string()).unwrap_or_default(),
            f(self.slack_min),
            self.iterations.map(|v| v.to_string()).unwrap_or_default(),
            f(self.kkt_gap),
            f(self.coef_gap_rel_inf),
            f(self.su_real),
            f(self.cn_real),
            f(self.su_binary),
            f(self.cn_binary),
            f(self.excess_mse_analytic),
            f(self.excess_cls_analytic),
            f(self.mse_hat),
            f(self.mse_std),
            f(self.err_hat),
            f(self.std_err),
            f(self.gamma),
            f(self.gamma_n),
            f(self.frob),
            f(self.ramp_term),
            f(self.complexity_term),
            f(self.confidence_term),
            f(self.bound),
            f(self.a_closed),
            f(self.b_closed),
            f(self.sigma_cn_closed),
            f(self.a_recovered),
            f(self.alias_dev),
            f(self.off_family_max),
            f(self.alias_identity_dev),
        ];
        cells.join(",")
    }

    pub fn parse_line(line: &str, lineno: usize) -> Result<ResultRow> {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != FIELD_COUNT {
            return Err(bad_row(lineno, format!("{} fields, expected {FIELD_COUNT}", cells.len())));
        }
        let schema: u32 = cells[0]
            .parse()
            .map_err(|_| bad_row(lineno, format!("bad schema cell `{}`", cells[0])))?;
        if schema != SCHEMA_VERSION {
            return Err(bad_row(lineno, format!("schema {schema}, this build reads {SCHEMA_VERSION}")));
        }
        let experiment = Experiment::from_id(cells[1])
            .ok_or_else(|| bad_row(lineno, format!("unknown experiment `{}`", cells[1])))?;
        let sweep_value = SweepValue::parse_cell(cells[2])
            .ok_or_else(|| bad_row(lineno, format!("bad sweep value `{}`", cells[2])))?;
        let int = |cell: &str, name: &str| -> Result<u64> {
            cell.parse().map_err(|_| bad_row(lineno, format!("bad {name} `{cell}`")))
        };
        let opt_int = |cell: &str, name: &str| -> Result<Option<usize>> {
            if cell.is_empty() {
                Ok(None)
            } else {
                Ok(Some(int(cell, name)? as usize))
            }
        };
        let opt_f = |cell: &str, name: &str| -> Result<Option<f64>> {
            if cell.is_empty() {
                Ok(None)
            } else {
                cell.parse()
                    .map(Some)
                    .map_err(|_| bad_row(lineno, format!("bad {name} `{cell}`")))
            }
        };
        let all_sv = match cells[10] {
            "" => None,
            "true" => Some(true),
            "false" => Some(false),
            other => return Err(bad_row(lineno, format!("bad all_sv `{other}`"))),
        };
        Ok(ResultRow {
            experiment,
            sweep_value,
            trial: int(cells[3], "trial")?,
            seed: int(cells[4], "seed")?,
            n: int(cells[5], "n")? as usize,
            d: int(cells[6], "d")? as usize,
            s: opt_int(cells[7], "s")?,
            regime: if cells[8].is_empty() { None } else { Some(cells[8].to_string()) },
            sv_fraction: opt_f(cells[9], "sv_fraction")?,
            all_sv,
            slack_min: opt_f(cells[11], "slack_min")?,
            iterations: opt_int(cells[12], "iterations")?,
            kkt_gap: opt_f(cells[13], "kkt_gap")?,
            coef_gap_rel_inf: opt_f(cells[14], "coef_gap_rel_inf")?,
            su_real: opt_f(cells[15], "su_real")?,
            cn_real: opt_f(cells[16], "cn_real")?,
            su_binary: opt_f(cells[17], "su_binary")?,
            cn_binary: opt_f(cells[18], "cn_binary")?,
            excess_mse_analytic: opt_f(cells[19], "excess_mse_analytic")?,
            excess_cls_analytic: opt_f(cells[20], "excess_cls_analytic")?,
            mse_hat: opt_f(cells[21], "mse_hat")?,
            mse_std: opt_f(cells[22], "mse_std")?,
            err_hat: opt_f(cells[23], "err_hat")?,
            std_err: opt_f(cells[24], "std_err")?,
            gamma: opt_f(cells[25], "gamma")?,
            gamma_n: opt_f(cells[26], "gamma_n")?,
            frob: opt_f(cells[27], "frob")?,
            ramp_term: opt_f(cells[28], "ramp_term")?,
            complexity_term: opt_f(cells[29], "complexity_term")?,
            confidence_term: opt_f(cells[30], "confidence_term")?,
            bound: opt_f(cells[31], "bound")?,
            a_closed: opt_f(cells[32], "a_closed")?,
            b_closed: opt_f(cells[33], "b_closed")?,
            sigma_cn_closed: opt_f(cells[34], "sigma_cn_closed")?,
            a_recovered: opt_f(cells[35], "a_recovered")?,
            alias_dev: opt_f(cells[36], "alias_dev")?,
            off_family_max: opt_f(cells[37], "off_family_max")?,
            alias_identity_dev: opt_f(cells[38], "alias_identity_dev")?,
        })
    }
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn bad_row(lineno: usize, message: String) -> HarnessError {
    HarnessError::IncompleteData { message: format!("line {lineno}: {message}") }
}

/// The full CSV document, header first, one `\n` per line including the last.
pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 256 + HEADER.len() + 1);
    out.push_str(HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_record());
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    fs::write(path, csv_string(rows))?;
    Ok(())
}

pub fn parse_csv_str(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        Some(h) => {
            return Err(HarnessError::IncompleteData {
                message: format!("header mismatch: `{}...`", &h[..h.len().min(40)]),
            })
        }
        None => return Err(HarnessError::IncompleteData { message: "empty file".to_string() }),
    }
    lines
        .enumerate()
        .map(|(i, line)| ResultRow::parse_line(line, i + 2))
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    parse_csv_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> ResultRow {
        let mut row = ResultRow::new(Experiment::RegimeSweepQ, SweepValue::Real(0.6), 3, 777, 529, 12167);
        row.s = Some(23);
        row.regime = Some("ClassificationOnly".to_string());
        row.su_binary = Some(0.123456789012345678);
        row.cn_binary = Some(1.5e-7);
        row.excess_cls_analytic = Some(0.25);
        row
    }

    #[test]
    fn header_width_matches_records() {
        assert_eq!(HEADER.split(',').count(), FIELD_COUNT);
        assert_eq!(sample_row().to_record().split(',').count(), FIELD_COUNT);
    }

    #[test]
    fn records_roundtrip_exactly() {
        let row = sample_row();
        let parsed = ResultRow::parse_line(&row.to_record(), 2).unwrap();
        assert_eq!(parsed, row);
        let doc = csv_string(&[row.clone(), row.clone()]);
        let rows = parse_csv_str(&doc).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], row);
    }

    #[test]
    fn rejects_foreign_headers_and_schemas() {
        assert!(parse_csv_str("nope\n").is_err());
        let mut doc = csv_string(&[sample_row()]);
        doc = doc.replacen("\n1,", "\n9,", 1);
        assert!(parse_csv_str(&doc).is_err());
    }
}
