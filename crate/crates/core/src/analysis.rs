//! CHSH evaluation and report assembly.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::{GhzTally, Selection, Setting, Tally, ValueCounts};
use crate::hidden::{GhzConsistency, StProductCheck};
use crate::quantum::{expectation, GhzOperator, PureState};
use crate::select::{check_bound, closed_form, estimate_from_tally, BoundOutcome, SIGMA_THRESHOLD};
use crate::{Error, Result};

/// A sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mean {
    pub value: f64,
    pub std_error: f64,
    pub count: u64,
}

impl Mean {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            count: 0,
        }
    }

    fn from_counts(c: &ValueCounts) -> Result<Self> {
        let (value, std_error) = c
            .mean()
            .ok_or_else(|| Error::InsufficientData("a setting has no runs".into()))?;
        Ok(Self {
            value,
            std_error,
            count: c.total(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimates {
    pub r: Mean,
    pub r_prime: Mean,
    pub q: Mean,
    pub q_prime: Mean,
}

impl CorrelationEstimates {
    /// Per-setting means with undetected runs counted as zero.
    pub fn from_tally(tally: &Tally) -> Result<Self> {
        Ok(Self {
            r: Mean::from_counts(&tally.setting(Setting::R))?,
            r_prime: Mean::from_counts(&tally.setting(Setting::RPrime))?,
            q: Mean::from_counts(&tally.setting(Setting::Q))?,
            q_prime: Mean::from_counts(&tally.setting(Setting::QPrime))?,
        })
    }

    pub fn exact(r: f64, r_prime: f64, q: f64, q_prime: f64) -> Self {
        Self {
            r: Mean::exact(r),
            r_prime: Mean::exact(r_prime),
            q: Mean::exact(q),
            q_prime: Mean::exact(q_prime),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chsh {
    pub value: f64,
    pub std_error: f64,
    pub satisfied: bool,
}

/// `|⟨R⟩ + ⟨R′⟩ + ⟨Q⟩ − ⟨Q′⟩|`, satisfied when within 3σ of the bound 2.
pub fn chsh(est: &CorrelationEstimates) -> Chsh {
    let value = libm::fabs(est.r.value + est.r_prime.value + est.q.value - est.q_prime.value);
    let std_error = libm::sqrt(
        [est.r, est.r_prime, est.q, est.q_prime]
            .iter()
            .map(|m| m.std_error * m.std_error)
            .sum(),
    );
    Chsh {
        value,
        std_error,
        satisfied: value <= 2.0 + SIGMA_THRESHOLD * std_error,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub trials_per_setting: Option<u64>,
    pub eta: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub name: String,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub config: ConfigEcho,
    /// `ok`, or `insufficient-data: …`.
    pub status: String,
    pub quantities: Vec<Quantity>,
    pub verdicts: Vec<VerdictEntry>,
}

impl Report {
    pub fn quantity(&self, name: &str) -> Option<&Quantity> {
        self.quantities.iter().find(|q| q.name == name)
    }

    pub fn verdict(&self, name: &str) -> Option<&str> {
        self.verdicts
            .iter()
            .find(|v| v.name == name)
            .map(|v| v.verdict.as_str())
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// One completed experiment, ready to be summarized.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentResult {
    Ghz(GhzTally),
    /// Singlet runs at efficiency `eta`; feeds both the selected `⟨ST⟩` and CHSH.
    Singlet {
        tally: Tally,
        selection: Selection,
        eta: f64,
    },
    HiddenVariable {
        tally: Tally,
        selection: Selection,
        /// Closed-form model expectation of `ST`.
        expectation: f64,
    },
    Enumeration {
        ghz: GhzConsistency,
        st: StProductCheck,
    },
}

fn outcome_name(o: BoundOutcome) -> &'static str {
    match o {
        BoundOutcome::QuantumViolation => "quantum-violation",
        BoundOutcome::HvConsistent => "hv-consistent",
        BoundOutcome::InvariantBreach => "invariant-breach",
    }
}

#[derive(Default)]
struct Builder {
    quantities: Vec<Quantity>,
    verdicts: Vec<VerdictEntry>,
}

impl Builder {
    fn value(&mut self, name: impl Into<String>, value: f64) {
        self.full(name, value, None, None);
    }

    fn count(&mut self, name: impl Into<String>, count: u64) {
        self.full(name, count as f64, None, Some(count));
    }

    fn full(
        &mut self,
        name: impl Into<String>,
        value: f64,
        std_error: Option<f64>,
        count: Option<u64>,
    ) {
        self.quantities.push(Quantity {
            name: name.into(),
            value,
            std_error,
            count,
        });
    }

    fn verdict(&mut self, name: impl Into<String>, verdict: impl Into<String>) {
        self.verdicts.push(VerdictEntry {
            name: name.into(),
            verdict: verdict.into(),
        });
    }

    fn proportion(&mut self, name: impl Into<String>, p: f64, n: u64) {
        let se = if n == 0 {
            0.0
        } else {
            libm::sqrt(p * (1.0 - p) / n as f64)
        };
        self.full(name, p, Some(se), Some(n));
    }

    fn ghz(&mut self, tally: &GhzTally) {
        let state = PureState::ghz();
        for op in GhzOperator::ALL {
            let c = tally.operator(op);
            let exact = expectation(&state, &op.observable())
                .expect("GHZ operators act on three particles");
            let sign = if exact > 0.0 { 1 } else { -1 };
            let name = op.name();
            self.value(format!("ghz.{name}.expectation"), exact);
            if let Some((m, se)) = c.mean() {
                self.full(format!("ghz.{name}.mean"), m, Some(se), Some(c.total()));
            }
            self.count(format!("ghz.{name}.plus"), c.plus);
            self.count(format!("ghz.{name}.minus"), c.minus);
            self.count(format!("ghz.{name}.undetected"), c.zero);
            let wrong = if sign > 0 { c.minus } else { c.plus };
            let detected = c.plus + c.minus;
            let verdict = match (wrong, detected) {
                (_, 0) => "no-data",
                (0, _) => "deterministic",
                _ => "not-deterministic",
            };
            self.verdict(format!("ghz.{name}.product"), verdict);
        }
    }

    fn singlet(&mut self, tally: &Tally, selection: Selection, eta: f64) -> Result<()> {
        let est = estimate_from_tally(tally, selection)?;
        let corr = CorrelationEstimates::from_tally(tally)?;
        let c = est.counts;
        self.proportion("qm.p_R_minus", est.p_r_minus, c.r_runs);
        self.proportion("qm.p_Rp_minus", est.p_rp_minus, c.rp_runs);
        self.proportion("qm.p_T_minus", est.p_t_minus, c.t_kept);
        let t_total = c.t_kept + c.t_dropped;
        self.proportion(
            "qm.kept_T_fraction",
            c.t_kept as f64 / t_total as f64,
            t_total,
        );
        self.count("qm.dropped_T_plus", c.t_dropped);
        self.proportion(
            "qm.incomplete_run_fraction",
            tally.incomplete_runs() as f64 / tally.total_runs() as f64,
            tally.total_runs(),
        );
        self.full(
            "qm.st_value",
            est.st_value,
            Some(est.standard_error),
            Some(c.t_kept),
        );
        let joint = est.joint.expect("built from a tally");
        self.full(
            "qm.st_joint",
            joint.value,
            Some(joint.standard_error),
            Some(joint.rounds),
        );
        self.value("qm.st_closed_form", closed_form::st_value(eta, selection));
        self.value("qm.st_order_reference", closed_form::order_reference(eta));

        for (name, m) in [
            ("qm.mean_R", corr.r),
            ("qm.mean_Rp", corr.r_prime),
            ("qm.mean_Q", corr.q),
            ("qm.mean_Qp", corr.q_prime),
        ] {
            self.full(name, m.value, Some(m.std_error), Some(m.count));
        }
        let ch = chsh(&corr);
        self.full(
            "qm.chsh",
            ch.value,
            Some(ch.std_error),
            Some(tally.total_runs()),
        );

        let verdict = check_bound(&est);
        self.verdict("qm.st_bound", outcome_name(verdict.outcome));
        self.verdict("qm.st_joint_bound", outcome_name(joint.outcome()));
        self.verdict(
            "qm.st_upper_limit",
            if verdict.satisfies_upper_limit {
                "satisfied"
            } else {
                "violated"
            },
        );
        self.verdict(
            "qm.chsh",
            if ch.satisfied {
                "satisfied"
            } else {
                "violated"
            },
        );
        self.verdict(
            "qm.chsh_regime",
            if eta < 1.0 {
                "outside-ideal-case"
            } else {
                "ideal-case"
            },
        );
        Ok(())
    }

    fn hidden(&mut self, tally: &Tally, selection: Selection, expectation: f64) -> Result<()> {
        let est = estimate_from_tally(tally, selection)?;
        let c = est.counts;
        self.value("hv.expectation_st", expectation);
        self.proportion("hv.p_R_minus", est.p_r_minus, c.r_runs);
        self.proportion("hv.p_Rp_minus", est.p_rp_minus, c.rp_runs);
        self.proportion("hv.p_T_minus", est.p_t_minus, c.t_kept);
        self.count("hv.dropped_T_plus", c.t_dropped);
        let joint = est.joint.expect("built from a tally");
        self.full(
            "hv.st_joint",
            joint.value,
            Some(joint.standard_error),
            Some(joint.rounds),
        );
        self.full(
            "hv.st_value",
            est.st_value,
            Some(est.standard_error),
            Some(c.t_kept),
        );
        self.verdict("hv.st_joint_bound", outcome_name(joint.outcome()));
        Ok(())
    }

    fn enumeration(&mut self, ghz: &GhzConsistency, st: &StProductCheck) {
        let flag = |b: bool| if b { 1 } else { 0 };
        self.count("enum.ghz.assignments", ghz.assignments as u64);
        self.count("enum.ghz.satisfying", ghz.satisfying as u64);
        self.count("enum.ghz.all_plus", ghz.all_plus as u64);
        self.count(
            "enum.ghz.abcd_product_always_one",
            flag(ghz.abcd_product_always_one),
        );
        self.count("enum.st.assignments", st.assignments as u64);
        self.count("enum.st.all_equal", flag(st.all_equal));
        self.count("enum.st.all_products_one", flag(st.all_products_one));
        self.verdict(
            "enum.ghz",
            if ghz.satisfying == 0 {
                "no-noncontextual-model"
            } else {
                "model-exists"
            },
        );
        self.verdict(
            "enum.st",
            if st.all_products_one {
                "st-always-plus-one"
            } else {
                "st-can-be-negative"
            },
        );
    }
}

/// Assembles a deterministic report. Failures are reported in `status`
/// rather than returned.
pub fn summarize(experiment: &str, config: ConfigEcho, results: &[ExperimentResult]) -> Report {
    let mut b = Builder::default();
    let status = if results.is_empty() {
        Err(Error::InsufficientData("no completed experiment".into()))
    } else {
        results.iter().try_for_each(|r| match r {
            ExperimentResult::Ghz(t) => {
                b.ghz(t);
                Ok(())
            }
            ExperimentResult::Singlet {
                tally,
                selection,
                eta,
            } => b.singlet(tally, *selection, *eta),
            ExperimentResult::HiddenVariable {
                tally,
                selection,
                expectation,
            } => b.hidden(tally, *selection, *expectation),
            ExperimentResult::Enumeration { ghz, st } => {
                b.enumeration(ghz, st);
                Ok(())
            }
        })
    };
    let status = match status {
        Ok(()) => "ok".to_string(),
        Err(Error::InsufficientData(msg)) => format!("insufficient-data: {msg}"),
        Err(e) => format!("error: {e}"),
    };
    Report {
        experiment: experiment.to_string(),
        config,
        status,
        quantities: b.quantities,
        verdicts: b.verdicts,
    }
}
