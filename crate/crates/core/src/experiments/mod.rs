//! Monte Carlo verification of the deviation bounds and limit theorems.
//!
//! Every replicate is keyed by its stream index and results are collected in
//! index order, so reports are byte-identical for any worker count.

mod apply;
mod inference;
mod limits;
pub mod report;
mod tail;

pub use apply::{
    local_time_check, local_time_estimate, verify_apply, ApplyReport, ApplyRow, ApplySetup, LocalTimeCheck,
    LocalTimeEstimate, DEFAULT_DELTA,
};
pub use inference::{
    bm_sup_tail, ks_critical_value, ks_distance, ks_null_std_error, score_interval, trend_verdict, z_for_level,
    TrendReport, TrendVerdict,
};
pub use limits::{
    isometry_suite, quadratic_variation_check, variation_convergence, verify_conv00, verify_wlln, Conv00Report,
    Conv00Row, Conv00Setup, IsometryRow, QuadraticVariationCheck, VariationConvergence, VariationGap, WllnReport,
    WllnRow, WllnSetup,
};
pub use report::{to_csv, CsvRow, Report, RunMetadata};
pub use tail::{
    conditioning_statistic, pilot_nu, verify_bound, verify_bounds, verify_classical, verify_fixed_time, FixedTimeLevel,
    TailEstimate, TailSetup, DEFAULT_PILOT, Z95,
};

use serde::{Deserialize, Serialize};

use crate::bounds::{Case, FixedTimeVariant};
use crate::Result;

/// One inequality of a tail experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCell {
    #[serde(flatten)]
    pub case: Case,
    #[serde(rename = "L")]
    pub l: f64,
}

/// Complete, serializable description of one experiment. Together with the
/// seed it carries, it determines every number in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Tail {
        setup: TailSetup,
        cells: Vec<TailCell>,
        nu: Option<f64>,
    },
    FixedTime {
        setup: TailSetup,
        variant: FixedTimeVariant,
        level: FixedTimeLevel,
        nu: Option<f64>,
    },
    Classical {
        a_values: Vec<f64>,
        t: f64,
        cells: usize,
        replicates: usize,
        seed: u64,
    },
    Wlln(WllnSetup),
    ApplyFbm(ApplySetup),
    Conv00(Conv00Setup),
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Tail { .. } => "tail",
            ExperimentConfig::FixedTime { .. } => "fixed-time",
            ExperimentConfig::Classical { .. } => "classical",
            ExperimentConfig::Wlln(_) => "wlln",
            ExperimentConfig::ApplyFbm(_) => "apply-fbm",
            ExperimentConfig::Conv00(_) => "conv00",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::Tail { setup, .. } | ExperimentConfig::FixedTime { setup, .. } => setup.seed,
            ExperimentConfig::Classical { seed, .. } => *seed,
            ExperimentConfig::Wlln(s) => s.seed,
            ExperimentConfig::ApplyFbm(s) => s.seed,
            ExperimentConfig::Conv00(s) => s.seed,
        }
    }
}

fn tails_pass(rows: &[TailEstimate]) -> bool {
    rows.iter().all(|r| r.pass)
}

/// Run an experiment and render its CSV table and JSON results.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<Report> {
    let name = config.name().to_string();
    Ok(match config {
        ExperimentConfig::Tail { setup, cells, nu } => {
            let specs: Vec<(Case, f64)> = cells.iter().map(|c| (c.case, c.l)).collect();
            let rows = verify_bounds(setup, &specs, *nu, workers)?;
            Report {
                name,
                csv: to_csv(&rows),
                pass: tails_pass(&rows),
                results: serde_json::to_value(&rows)?,
            }
        }
        ExperimentConfig::FixedTime {
            setup,
            variant,
            level,
            nu,
        } => {
            let rows = vec![verify_fixed_time(setup, *variant, *level, *nu, workers)?];
            Report {
                name,
                csv: to_csv(&rows),
                pass: tails_pass(&rows),
                results: serde_json::to_value(&rows)?,
            }
        }
        ExperimentConfig::Classical {
            a_values,
            t,
            cells,
            replicates,
            seed,
        } => {
            let rows = verify_classical(a_values, *t, *cells, *replicates, *seed, workers)?;
            Report {
                name,
                csv: to_csv(&rows),
                pass: tails_pass(&rows),
                results: serde_json::to_value(&rows)?,
            }
        }
        ExperimentConfig::Wlln(setup) => {
            let rep = verify_wlln(setup, workers)?;
            Report {
                name,
                csv: to_csv(&rep.rows),
                pass: rep.pass(),
                results: serde_json::to_value(&rep)?,
            }
        }
        ExperimentConfig::ApplyFbm(setup) => {
            let rep = verify_apply(setup, workers)?;
            Report {
                name,
                csv: to_csv(&rep.rows),
                pass: rep.pass(),
                results: serde_json::to_value(&rep)?,
            }
        }
        ExperimentConfig::Conv00(setup) => {
            let rep = verify_conv00(setup, workers)?;
            Report {
                name,
                csv: to_csv(&rep.rows),
                pass: rep.pass(),
                results: serde_json::to_value(&rep)?,
            }
        }
    })
}
