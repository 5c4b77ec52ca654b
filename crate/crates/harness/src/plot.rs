//! Column-stable CSV tables for external plotting.
//!
//! | selector | file | columns |
//! |----------|------|---------|
//! | `entropy-curve` | `entropy_curve_<pair>.csv` | `t, D, dD_analytic, dD_fd, d2D_analytic, d2D_fd, l, local_gap, plain_gap, sigma_gap` |
//! | `gap-vs-t` | `gap_vs_t.csv` | `curve, t, plain_gap, sigma_gap` |
//! | `measure-ci` | `measure_ci.csv` | `name, estimate, std_error, ci_low, ci_high, uncertain_fraction, exact` |
//!
//! Floats use Rust's shortest round-trip formatting, so reruns with the same
//! seed produce byte-identical files.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::report::SuiteReport;
use crate::HarnessError;

pub const ENTROPY_CURVE_COLUMNS: [&str; 10] = [
    "t",
    "D",
    "dD_analytic",
    "dD_fd",
    "d2D_analytic",
    "d2D_fd",
    "l",
    "local_gap",
    "plain_gap",
    "sigma_gap",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotSelector {
    EntropyCurve,
    GapVsT,
    MeasureCi,
}

impl PlotSelector {
    pub const ALL: [PlotSelector; 3] = [PlotSelector::EntropyCurve, PlotSelector::GapVsT, PlotSelector::MeasureCi];
}

impl FromStr for PlotSelector {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "entropy-curve" => Ok(Self::EntropyCurve),
            "gap-vs-t" => Ok(Self::GapVsT),
            "measure-ci" => Ok(Self::MeasureCi),
            other => Err(HarnessError::UnknownSelector(other.into())),
        }
    }
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| HarnessError::Io(path.to_path_buf(), e))
}

/// Writes the tables for `which` into `dir` and returns their paths.
pub fn emit_plot_data(report: &SuiteReport, which: &str, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let sel: PlotSelector = which.parse()?;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(dir.to_path_buf(), e))?;
    let mut out = Vec::new();
    match sel {
        PlotSelector::EntropyCurve => {
            for rec in &report.curves {
                let c = &rec.curve;
                let path = dir.join(format!("entropy_curve_{}.csv", file_stem(&rec.name)));
                let rows = (0..c.t_grid.len()).map(|k| {
                    vec![
                        num(c.t_grid[k]),
                        num(c.entropy[k]),
                        num(c.first_derivative_analytic[k]),
                        num(c.first_derivative_fd[k]),
                        num(c.second_derivative_analytic[k]),
                        num(c.second_derivative_fd[k]),
                        num(c.l_values[k]),
                        c.local_gap.get(k).map_or(String::new(), |v| num(*v)),
                        num(c.plain_gap[k]),
                        num(c.sigma_gap[k]),
                    ]
                });
                write_table(&path, &ENTROPY_CURVE_COLUMNS, rows)?;
                out.push(path);
            }
        }
        PlotSelector::GapVsT => {
            let path = dir.join("gap_vs_t.csv");
            let rows = report.curves.iter().flat_map(|rec| {
                let c = &rec.curve;
                (0..c.t_grid.len()).map(move |k| vec![rec.name.clone(), num(c.t_grid[k]), num(c.plain_gap[k]), num(c.sigma_gap[k])])
            });
            write_table(&path, &["curve", "t", "plain_gap", "sigma_gap"], rows)?;
            out.push(path);
        }
        PlotSelector::MeasureCi => {
            let path = dir.join("measure_ci.csv");
            let rows = report.measures.iter().map(|m| {
                vec![
                    m.name.clone(),
                    num(m.estimate),
                    num(m.std_error),
                    num(m.ci_low),
                    num(m.ci_high),
                    num(m.uncertain_fraction),
                    m.exact.to_string(),
                ]
            });
            write_table(
                &path,
                &["name", "estimate", "std_error", "ci_low", "ci_high", "uncertain_fraction", "exact"],
                rows,
            )?;
            out.push(path);
        }
    }
    Ok(out)
}

/// Every table, in selector order.
pub fn emit_all(report: &SuiteReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut out = Vec::new();
    for which in ["entropy-curve", "gap-vs-t", "measure-ci"] {
        out.extend(emit_plot_data(report, which, dir)?);
    }
    Ok(out)
}
