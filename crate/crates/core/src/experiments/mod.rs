//! Experiment drivers: seeded Monte Carlo probes of gaps, eigenvalue squeeze and lifting,
//! Wegner counts, initial-scale events, resolvent decay, projector kernels and moments.

mod combes_thomas;
mod config;
mod dynamics;
mod gap_scan;
pub mod harness;
mod ise;
mod lifting;
mod projector;
mod selftest;
mod squeeze;
mod suitability;
mod wegner;

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use combes_thomas::combes_thomas_probe;
pub use config::{
    CombesThomasConfig, ConfigIssue, DynamicsConfig, ExperimentConfig, GapScanConfig,
    GridConfig, IseConfig, LiftingConfig, ProjectorConfig, RunConfig, SqueezeConfig,
    SuitabilityConfig, WegnerConfig,
};
pub use dynamics::dynamical_moments;
pub use gap_scan::gap_scan;
pub use ise::ise_mc;
pub use lifting::{lifting_curve, lifting_fit};
pub use projector::projector_decay;
pub use selftest::selftest;
pub use squeeze::squeeze_check;
pub use suitability::suitability_mc;
pub use wegner::wegner_mc;

use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::report::{ExperimentReport, ManifestEcho};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Driver {
    GapScan,
    Squeeze,
    Lifting,
    Wegner,
    Ise,
    CombesThomas,
    Suitability,
    ProjectorDecay,
    Dynamics,
    Selftest,
}

impl Driver {
    pub const ALL: [Driver; 10] = [
        Driver::GapScan,
        Driver::Squeeze,
        Driver::Lifting,
        Driver::Wegner,
        Driver::Ise,
        Driver::CombesThomas,
        Driver::Suitability,
        Driver::ProjectorDecay,
        Driver::Dynamics,
        Driver::Selftest,
    ];

    /// Name used for report files.
    pub fn name(self) -> &'static str {
        match self {
            Driver::GapScan => "gap_scan",
            Driver::Squeeze => "squeeze",
            Driver::Lifting => "lifting",
            Driver::Wegner => "wegner",
            Driver::Ise => "ise",
            Driver::CombesThomas => "combes_thomas",
            Driver::Suitability => "suitability",
            Driver::ProjectorDecay => "projector_decay",
            Driver::Dynamics => "dynamics",
            Driver::Selftest => "selftest",
        }
    }

    /// Name used on the command line.
    pub fn subcommand(self) -> &'static str {
        match self {
            Driver::GapScan => "gap-scan",
            Driver::Squeeze => "squeeze",
            Driver::Lifting => "lifting",
            Driver::Wegner => "wegner",
            Driver::Ise => "ise",
            Driver::CombesThomas => "combes-thomas",
            Driver::Suitability => "suitability",
            Driver::ProjectorDecay => "projector-decay",
            Driver::Dynamics => "dynamics",
            Driver::Selftest => "selftest",
        }
    }
}

impl FromStr for Driver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Driver::ALL
            .into_iter()
            .find(|d| d.subcommand() == s || d.name() == s)
            .ok_or_else(|| Error::config(0, format!("unknown subcommand {s:?}")))
    }
}

/// Runs one driver and stamps the wall-clock time into its report.
pub fn run_driver(driver: Driver, manifest: &RunManifest) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = match driver {
        Driver::GapScan => gap_scan(manifest),
        Driver::Squeeze => squeeze_check(manifest),
        Driver::Lifting => lifting_curve(manifest),
        Driver::Wegner => wegner_mc(manifest),
        Driver::Ise => ise_mc(manifest),
        Driver::CombesThomas => combes_thomas_probe(manifest),
        Driver::Suitability => suitability_mc(manifest),
        Driver::ProjectorDecay => projector_decay(manifest),
        Driver::Dynamics => dynamical_moments(manifest),
        Driver::Selftest => selftest(manifest),
    }?;
    report.manifest = ManifestEcho::of(manifest);
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Splits per-realization outcomes into successes and flagged failures; fatal errors abort.
pub(crate) fn settle<T>(
    report: &mut ExperimentReport,
    outcomes: Vec<Result<T>>,
) -> Result<Vec<(usize, T)>> {
    let mut done = Vec::with_capacity(outcomes.len());
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(v) => done.push((r, v)),
            Err(e) if harness::is_fatal(&e) => return Err(e),
            Err(e) => report.flag(format!("realization {r}: {e}")),
        }
    }
    report.summarize("realizations_completed", done.len());
    report.summarize("realizations_flagged", report.flagged.len());
    Ok(done)
}

pub(crate) fn require(value: Option<f64>, key: &str) -> Result<f64> {
    value.ok_or_else(|| Error::config(0, format!("{key} is required by this driver")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subcommands_round_trip() {
        for d in Driver::ALL {
            assert_eq!(d.subcommand().parse::<Driver>().unwrap(), d);
            assert_eq!(d.name().parse::<Driver>().unwrap(), d);
        }
        assert!(matches!("nope".parse::<Driver>(), Err(Error::Config { .. })));
    }
}
