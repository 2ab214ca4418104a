//! The six experiments the command line exposes.

use postsel_core::analysis::{summarize, ConfigEcho, ExperimentResult, Report};
use postsel_core::engine::{check_eta, ExperimentConfig, GhzSource, QuantumSource, Selection};
use postsel_core::hidden::{
    ghz_consistency_count, hv_expectation_st, st_product_check, HiddenVariableSource,
    NoncontextualModel,
};
use postsel_core::rng::CounterRng;
use postsel_core::Error;

use crate::runner::Runner;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Joint measurements of `A, B, C, D` on the GHZ state.
    Ghz,
    /// Singlet with perfect detectors and the `qq′` filter.
    Ideal,
    /// Singlet with detector efficiency `eta`.
    Detector,
    /// Uniform non-contextual model next to the singlet, same protocol.
    Hv,
    /// Exhaustive assignment checks.
    Enumerate,
    /// Per-setting means and the CHSH combination of the same runs.
    Chsh,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Ghz => "ghz",
            Experiment::Ideal => "ideal",
            Experiment::Detector => "detector",
            Experiment::Hv => "hv",
            Experiment::Enumerate => "enumerate",
            Experiment::Chsh => "chsh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub trials_per_setting: u64,
    pub eta: f64,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            trials_per_setting: 100_000,
            eta: 1.0,
            seed: 0,
        }
    }
}

pub fn run_experiment(
    experiment: Experiment,
    opts: &RunOptions,
    runner: &Runner,
) -> Result<Report, Error> {
    let eta = if experiment == Experiment::Ideal {
        1.0
    } else {
        opts.eta
    };
    check_eta(eta)?;
    let config = ExperimentConfig::new(opts.trials_per_setting, eta, opts.seed)?;
    let rng = CounterRng::new(config.seed);
    let echo = ConfigEcho {
        trials_per_setting: Some(config.trials_per_setting),
        eta: Some(eta),
        seed: Some(config.seed),
    };
    let singlet = || ExperimentResult::Singlet {
        tally: runner.tally(
            &QuantumSource::singlet(),
            &rng,
            eta,
            config.trials_per_setting,
        ),
        selection: Selection::Postselected,
        eta,
    };

    let (echo, results) = match experiment {
        Experiment::Ghz => {
            let tally = runner.ghz_tally(
                &GhzSource::default(),
                &rng,
                eta,
                4 * config.trials_per_setting,
            );
            (echo, vec![ExperimentResult::Ghz(tally)])
        }
        Experiment::Ideal | Experiment::Detector | Experiment::Chsh => (echo, vec![singlet()]),
        Experiment::Hv => {
            let model = NoncontextualModel::uniform();
            let hv = ExperimentResult::HiddenVariable {
                tally: runner.tally(
                    &HiddenVariableSource::new(&model),
                    &rng,
                    eta,
                    config.trials_per_setting,
                ),
                selection: Selection::Postselected,
                expectation: hv_expectation_st(&model),
            };
            (echo, vec![singlet(), hv])
        }
        Experiment::Enumerate => (
            ConfigEcho::default(),
            vec![ExperimentResult::Enumeration {
                ghz: ghz_consistency_count(),
                st: st_product_check(),
            }],
        ),
    };
    Ok(summarize(experiment.name(), echo, &results))
}
