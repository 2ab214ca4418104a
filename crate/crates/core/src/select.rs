//! Postselection of `T` events and the detector-limited `⟨ST⟩` estimators.
//!
//! Two estimators are produced from the same data:
//!
//! * the factorized value `−P(R=−1)·P(R′=−1)·P(T=−1)`, which relies on the
//!   four settings being measured on independent pairs;
//! * the joint value, the mean of `S·T` over rounds whose `T` event survives
//!   selection, read straight off the paired events with no independence
//!   assumption.
//!
//! For quantum runs the two agree in expectation. A non-contextual model has
//! `υ(S) = υ(T)` on every round, so only the joint value is a faithful reading
//! of what such a model predicts; it can never be negative.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::{CompositeEvent, EventKind, RunRecord, Selection, Setting, Tally, ValueCounts};
use crate::{Error, Result};

/// Decision threshold in standard errors.
pub const SIGMA_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SelectedEnsemble {
    pub kept_s: Vec<CompositeEvent>,
    pub kept_t: Vec<CompositeEvent>,
    pub dropped_t_plus: u64,
}

fn t_kept(value: i8) -> bool {
    value != 1
}

/// Keeps `T` events with `qq′ = −1` or `0`, drops those with `qq′ = +1`.
pub fn select_t(events: &[CompositeEvent]) -> Result<SelectedEnsemble> {
    let mut out = SelectedEnsemble::default();
    for e in events {
        if e.kind != EventKind::T {
            return Err(Error::EventKind {
                expected: 'T',
                found: e.kind.symbol(),
            });
        }
        if t_kept(e.value()) {
            out.kept_t.push(*e);
        } else {
            out.dropped_t_plus += 1;
        }
    }
    Ok(out)
}

/// `S` events pass through untouched; `T` events go through [`select_t`].
pub fn postselect(events: &[CompositeEvent]) -> SelectedEnsemble {
    let (s, t): (Vec<CompositeEvent>, Vec<CompositeEvent>) =
        events.iter().partition(|e| e.kind == EventKind::S);
    let mut out = select_t(&t).expect("partitioned to T events");
    out.kept_s = s;
    out
}

/// Integer counts behind the three selected probabilities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbabilityCounts {
    pub r_runs: u64,
    pub r_minus: u64,
    pub rp_runs: u64,
    pub rp_minus: u64,
    pub t_kept: u64,
    pub t_minus: u64,
    pub t_dropped: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionProbabilities {
    pub p_r_minus: f64,
    pub p_rp_minus: f64,
    pub p_t_minus: f64,
    pub counts: ProbabilityCounts,
}

impl SelectionProbabilities {
    /// `P(T=−1)` is normalized over the kept `T` events, zeros included, and
    /// the `R`, `R′` probabilities over every run, undetected ones included.
    /// An empty kept set reads as `P(T=−1) = 0` when `empty_t_is_zero` holds
    /// and is an error otherwise.
    pub fn from_counts(counts: ProbabilityCounts, empty_t_is_zero: bool) -> Result<Self> {
        if counts.r_runs == 0 || counts.rp_runs == 0 {
            return Err(Error::InsufficientData("no R or R' runs".into()));
        }
        if counts.t_kept == 0 && !empty_t_is_zero {
            return Err(Error::InsufficientData(
                "no T events survive selection".into(),
            ));
        }
        let frac = |k: u64, n: u64| if n == 0 { 0.0 } else { k as f64 / n as f64 };
        Ok(Self {
            p_r_minus: frac(counts.r_minus, counts.r_runs),
            p_rp_minus: frac(counts.rp_minus, counts.rp_runs),
            p_t_minus: frac(counts.t_minus, counts.t_kept),
            counts,
        })
    }
}

pub fn estimate_probabilities(
    runs: &[RunRecord],
    ensemble: &SelectedEnsemble,
) -> Result<SelectionProbabilities> {
    let mut counts = ProbabilityCounts::default();
    for run in runs {
        match run.setting {
            Setting::R => {
                counts.r_runs += 1;
                counts.r_minus += (run.product() == -1) as u64;
            }
            Setting::RPrime => {
                counts.rp_runs += 1;
                counts.rp_minus += (run.product() == -1) as u64;
            }
            _ => {}
        }
    }
    counts.t_kept = ensemble.kept_t.len() as u64;
    counts.t_minus = ensemble.kept_t.iter().filter(|e| e.value() == -1).count() as u64;
    counts.t_dropped = ensemble.dropped_t_plus;
    SelectionProbabilities::from_counts(counts, false)
}

/// Mean of `S·T` over the rounds whose `T` event was kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub rounds: u64,
}

impl JointEstimate {
    pub fn from_counts(counts: &ValueCounts) -> Self {
        let (value, standard_error) = counts.mean().unwrap_or((0.0, 0.0));
        Self {
            value,
            standard_error,
            rounds: counts.total(),
        }
    }

    pub fn outcome(&self) -> BoundOutcome {
        if self.value < -SIGMA_THRESHOLD * self.standard_error {
            BoundOutcome::QuantumViolation
        } else {
            BoundOutcome::HvConsistent
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StEstimate {
    pub p_r_minus: f64,
    pub p_rp_minus: f64,
    pub p_t_minus: f64,
    /// `−P(R=−1)·P(R′=−1)·P(T=−1)`, always in `[−1, 0]`.
    pub st_value: f64,
    /// First-order propagation of the three binomial errors.
    pub standard_error: f64,
    pub counts: ProbabilityCounts,
    /// Present when the estimate was built from paired rounds.
    pub joint: Option<JointEstimate>,
}

fn binomial_var(p: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        p * (1.0 - p) / n as f64
    }
}

pub fn st_estimate(probs: &SelectionProbabilities) -> StEstimate {
    let (a, b, c) = (probs.p_r_minus, probs.p_rp_minus, probs.p_t_minus);
    let n = &probs.counts;
    let var = (b * c) * (b * c) * binomial_var(a, n.r_runs)
        + (a * c) * (a * c) * binomial_var(b, n.rp_runs)
        + (a * b) * (a * b) * binomial_var(c, n.t_kept);
    StEstimate {
        p_r_minus: a,
        p_rp_minus: b,
        p_t_minus: c,
        // `0.0 - x` keeps an exact zero positive
        st_value: 0.0 - a * b * c,
        standard_error: libm::sqrt(var),
        counts: probs.counts,
        joint: None,
    }
}

/// Counts of a tally under the given selection.
pub fn probability_counts(tally: &Tally, selection: Selection) -> ProbabilityCounts {
    let r = tally.setting(Setting::R);
    let rp = tally.setting(Setting::RPrime);
    let t = tally.t_events();
    let (t_kept, t_dropped) = match selection {
        Selection::Postselected => (t.minus + t.zero, t.plus),
        Selection::Ideal => (t.total(), 0),
    };
    ProbabilityCounts {
        r_runs: r.total(),
        r_minus: r.minus,
        rp_runs: rp.total(),
        rp_minus: rp.minus,
        t_kept,
        t_minus: t.minus,
        t_dropped,
    }
}

/// `S·T` value counts over kept rounds.
pub fn joint_counts(tally: &Tally, selection: Selection) -> ValueCounts {
    let mut out = ValueCounts::default();
    for (si, row) in tally.pairs.iter().enumerate() {
        for (ti, &n) in row.iter().enumerate() {
            let (s, t) = (si as i8 - 1, ti as i8 - 1);
            if selection == Selection::Postselected && !t_kept(t) {
                continue;
            }
            match (s * t).signum() {
                -1 => out.minus += n,
                0 => out.zero += n,
                _ => out.plus += n,
            }
        }
    }
    out
}

/// Both estimators from a tally. When no `T` event survives, the selected
/// estimate is defined as zero.
pub fn estimate_from_tally(tally: &Tally, selection: Selection) -> Result<StEstimate> {
    let probs = SelectionProbabilities::from_counts(probability_counts(tally, selection), true)?;
    let mut est = st_estimate(&probs);
    est.joint = Some(JointEstimate::from_counts(&joint_counts(tally, selection)));
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundOutcome {
    /// Negative beyond noise: no non-contextual model can produce it.
    QuantumViolation,
    HvConsistent,
    /// The value lies outside `[−1, 0]`, which no set of probabilities gives.
    InvariantBreach,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: BoundOutcome,
    /// `⟨ST⟩ ≤ 0`.
    pub satisfies_upper_limit: bool,
}

pub fn check_bound(est: &StEstimate) -> Verdict {
    let v = est.st_value;
    let outcome = if !(-1.0..=0.0).contains(&v) {
        BoundOutcome::InvariantBreach
    } else if v < -SIGMA_THRESHOLD * est.standard_error {
        BoundOutcome::QuantumViolation
    } else {
        BoundOutcome::HvConsistent
    };
    Verdict {
        outcome,
        satisfies_upper_limit: v <= 0.0,
    }
}

/// Closed forms of the protocol for an exact singlet with per-detector
/// efficiency `eta`.
pub mod closed_form {
    use crate::engine::Selection;

    /// `P(R=−1) = P(R′=−1) = η²`.
    pub fn p_r_minus(eta: f64) -> f64 {
        eta * eta
    }

    /// Both `Q` and `Q′` runs fully detected (`η⁴`) with `qq′ = −1` (½),
    /// normalized over the kept set.
    pub fn p_t_minus(eta: f64, selection: Selection) -> f64 {
        let e4 = eta * eta * eta * eta;
        match selection {
            Selection::Postselected => (e4 / 2.0) / (1.0 - e4 / 2.0),
            Selection::Ideal => e4 / 2.0,
        }
    }

    pub fn kept_t_fraction(eta: f64, selection: Selection) -> f64 {
        match selection {
            Selection::Postselected => 1.0 - eta * eta * eta * eta / 2.0,
            Selection::Ideal => 1.0,
        }
    }

    pub fn st_value(eta: f64, selection: Selection) -> f64 {
        -p_r_minus(eta) * p_r_minus(eta) * p_t_minus(eta, selection)
    }

    /// The `−(η²)⁴` scale the detector-limited value is of the order of.
    pub fn order_reference(eta: f64) -> f64 {
        -libm::pow(eta * eta, 4.0)
    }
}
