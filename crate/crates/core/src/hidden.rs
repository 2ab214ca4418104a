//! Non-contextual hidden-variable models.
//!
//! An [`Assignment`] fixes a ±1 value for every spin component on a particle
//! × axis grid, independently of what else is measured alongside it. The
//! checks here run over the complete assignment space, so their results are
//! exact statements about every deterministic non-contextual model.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use crate::engine::{
    check_eta, detections, masked_pair, run_rounds, ExperimentConfig, RoundSource, RunRecord,
    Setting, Tally,
};
use crate::quantum::{Axis, GhzOperator, PauliObservable, EXACT_TOL};
use crate::rng::{CounterRng, Purpose};
use crate::select::{estimate_from_tally, StEstimate};
use crate::{Error, Result};

/// The grid every hidden-variable statement here is made on.
pub const HV_AXES: [Axis; 2] = [Axis::X, Axis::Y];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: BTreeMap<(usize, Axis), i8>,
}

impl Assignment {
    pub fn new(values: impl IntoIterator<Item = ((usize, Axis), i8)>) -> Result<Self> {
        let values: BTreeMap<_, _> = values.into_iter().collect();
        if let Some(((p, a), v)) = values.iter().find(|(_, v)| v.abs() != 1) {
            return Err(Error::InvalidModel(format!(
                "value {v} for particle {p} along {} is not ±1",
                a.symbol()
            )));
        }
        Ok(Self { values })
    }

    /// Every grid entry set to `value`.
    pub fn constant(num_particles: usize, axes: &[Axis], value: i8) -> Result<Self> {
        Self::new((0..num_particles).flat_map(|p| axes.iter().map(move |&a| ((p, a), value))))
    }

    pub fn with_value(mut self, particle: usize, axis: Axis, value: i8) -> Result<Self> {
        if value.abs() != 1 {
            return Err(Error::InvalidModel(format!("value {value} is not ±1")));
        }
        self.values.insert((particle, axis), value);
        Ok(self)
    }

    pub fn value(&self, particle: usize, axis: Axis) -> Result<i8> {
        self.values
            .get(&(particle, axis))
            .copied()
            .ok_or(Error::IncompleteAssignment {
                particle,
                axis: axis.symbol(),
            })
    }

    pub fn values(&self) -> impl Iterator<Item = ((usize, Axis), i8)> + '_ {
        self.values.iter().map(|(k, v)| (*k, *v))
    }

    /// `υ(S) = υ(σ₀ₓ)υ(σ₁ₓ)·υ(σ₀ᵧ)υ(σ₁ᵧ)`, the product over the `R` and `R′` parts.
    pub fn s_value(&self) -> Result<i8> {
        Ok(assigned_product(self, &Setting::R.observable())?
            * assigned_product(self, &Setting::RPrime.observable())?)
    }

    /// `υ(T) = υ(σ₀ₓ)υ(σ₁ᵧ)·υ(σ₀ᵧ)υ(σ₁ₓ)`, the product over the `Q` and `Q′` parts.
    pub fn t_value(&self) -> Result<i8> {
        Ok(assigned_product(self, &Setting::Q.observable())?
            * assigned_product(self, &Setting::QPrime.observable())?)
    }
}

/// All `2^(particles·|axes|)` assignments in lexicographic order over the
/// grid `(particle, axis)`, with `+1` ordered before `−1`.
pub fn enumerate_assignments(num_particles: usize, axes: &[Axis]) -> Result<Vec<Assignment>> {
    if !(2..=3).contains(&num_particles) {
        return Err(Error::InvalidModel(format!(
            "{num_particles} particles; only 2 or 3 are supported"
        )));
    }
    if axes.is_empty() {
        return Err(Error::InvalidModel("no axes given".into()));
    }
    let mut sorted = axes.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != axes.len() {
        return Err(Error::InvalidModel("axes must be distinct".into()));
    }
    let grid: Vec<(usize, Axis)> = (0..num_particles)
        .flat_map(|p| sorted.iter().map(move |&a| (p, a)))
        .collect();
    let m = grid.len();
    Ok((0..1u64 << m)
        .map(|code| Assignment {
            values: grid
                .iter()
                .enumerate()
                .map(|(j, &key)| (key, if code >> (m - 1 - j) & 1 == 0 { 1 } else { -1 }))
                .collect(),
        })
        .collect())
}

/// Product of the assigned values over the observable's factors.
pub fn assigned_product(assignment: &Assignment, obs: &PauliObservable) -> Result<i8> {
    obs.factors()
        .iter()
        .try_fold(1i8, |acc, &(p, a)| Ok(acc * assignment.value(p, a)?))
}

/// Local but context-dependent value: each observable is read from its own
/// assignment, one per measurement context.
pub fn contextual_product(contexts: &[Assignment], observables: &[PauliObservable]) -> Result<i8> {
    if contexts.len() != observables.len() {
        return Err(Error::ContextArity {
            contexts: contexts.len(),
            observables: observables.len(),
        });
    }
    contexts
        .iter()
        .zip(observables)
        .try_fold(1i8, |acc, (a, o)| Ok(acc * assigned_product(a, o)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GhzConsistency {
    pub assignments: usize,
    /// Assignments with `A = B = C = +1` and `D = −1`.
    pub satisfying: usize,
    /// Whether `A·B·C·D = +1` for every assignment.
    pub abcd_product_always_one: bool,
    /// Assignments with `A = B = C = D = +1`.
    pub all_plus: usize,
}

pub fn ghz_consistency_count() -> GhzConsistency {
    let assignments = enumerate_assignments(3, &HV_AXES).expect("valid grid");
    let ops = GhzOperator::ALL.map(|op| op.observable());
    let mut out = GhzConsistency {
        assignments: assignments.len(),
        satisfying: 0,
        abcd_product_always_one: true,
        all_plus: 0,
    };
    for a in &assignments {
        let [va, vb, vc, vd] = ops
            .each_ref()
            .map(|o| assigned_product(a, o).expect("complete grid"));
        if va == 1 && vb == 1 && vc == 1 && vd == -1 {
            out.satisfying += 1;
        }
        if va == 1 && vb == 1 && vc == 1 && vd == 1 {
            out.all_plus += 1;
        }
        if va * vb * vc * vd != 1 {
            out.abcd_product_always_one = false;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StProductCheck {
    pub assignments: usize,
    /// `υ(S) = υ(T)` for every assignment.
    pub all_equal: bool,
    /// `υ(S)·υ(T) = +1` for every assignment.
    pub all_products_one: bool,
}

pub fn st_product_check() -> StProductCheck {
    let assignments = enumerate_assignments(2, &HV_AXES).expect("valid grid");
    let mut out = StProductCheck {
        assignments: assignments.len(),
        all_equal: true,
        all_products_one: true,
    };
    for a in &assignments {
        let s = a.s_value().expect("complete grid");
        let t = a.t_value().expect("complete grid");
        out.all_equal &= s == t;
        out.all_products_one &= s * t == 1;
    }
    out
}

/// Weighted mixture of two-particle assignments with an optional detection
/// probability that is independent of the assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct NoncontextualModel {
    support: Vec<(Assignment, f64)>,
    detection_probability: Option<f64>,
}

impl NoncontextualModel {
    pub fn new(
        support: Vec<(Assignment, f64)>,
        detection_probability: Option<f64>,
    ) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidModel("empty support".into()));
        }
        if support.iter().any(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidModel(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = support.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidModel(format!(
                "weights sum to {total}, not 1"
            )));
        }
        for (a, _) in &support {
            for p in 0..2 {
                for axis in HV_AXES {
                    a.value(p, axis)?;
                }
            }
        }
        if let Some(d) = detection_probability {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::InvalidModel(format!(
                    "detection probability {d} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            support,
            detection_probability,
        })
    }

    /// Equal weight on all 16 two-particle assignments.
    pub fn uniform() -> Self {
        let all = enumerate_assignments(2, &HV_AXES).expect("valid grid");
        let w = 1.0 / all.len() as f64;
        Self::new(all.into_iter().map(|a| (a, w)).collect(), None).expect("uniform weights")
    }

    pub fn deterministic(assignment: Assignment) -> Result<Self> {
        Self::new(alloc::vec![(assignment, 1.0)], None)
    }

    pub fn with_detection_probability(self, d: f64) -> Result<Self> {
        Self::new(self.support, Some(d))
    }

    pub fn support(&self) -> &[(Assignment, f64)] {
        &self.support
    }

    pub fn detection_probability(&self) -> f64 {
        self.detection_probability.unwrap_or(1.0)
    }
}

/// `Σ υ(S)υ(T) p(υ(S), υ(T))` over the defined (detected) events. Since
/// `υ(S) = υ(T)` for every assignment this is the detected mass on the
/// matching-sign events and can never be negative.
pub fn hv_expectation_st(model: &NoncontextualModel) -> f64 {
    let d = model.detection_probability();
    // p[s][t] with index 0 ↦ −1, 1 ↦ +1
    let mut p = [[0.0f64; 2]; 2];
    for (a, w) in &model.support {
        let s = a.s_value().expect("validated grid");
        let t = a.t_value().expect("validated grid");
        p[(s > 0) as usize][(t > 0) as usize] += d * w;
    }
    p[1][1] + p[0][0] - p[0][1] - p[1][0]
}

/// Runs of a non-contextual model through the same round protocol as the
/// quantum source. One assignment is drawn per round, shared by the `S` and
/// the `T` event, and each detector still clicks independently.
#[derive(Debug, Clone)]
pub struct HiddenVariableSource {
    cumulative: Vec<f64>,
    /// `(particle 0, particle 1)` values per support entry and setting.
    readings: Vec<[(i8, i8); 4]>,
}

impl HiddenVariableSource {
    pub fn new(model: &NoncontextualModel) -> Self {
        let mut cumulative = Vec::with_capacity(model.support.len());
        let mut acc = 0.0;
        for (_, w) in &model.support {
            acc += w;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        let readings = model
            .support
            .iter()
            .map(|(a, _)| {
                Setting::ALL.map(|s| {
                    let (a0, a1) = s.axes();
                    (
                        a.value(0, a0).expect("validated grid"),
                        a.value(1, a1).expect("validated grid"),
                    )
                })
            })
            .collect();
        Self {
            cumulative,
            readings,
        }
    }

    fn pick(&self, u: f64) -> usize {
        self.cumulative
            .iter()
            .position(|c| u < *c && *c > 0.0)
            .unwrap_or(self.cumulative.len() - 1)
    }
}

impl RoundSource for HiddenVariableSource {
    fn round(&self, rng: &CounterRng, eta: f64, round: u64) -> [RunRecord; 4] {
        let first = 4 * round;
        let lambda = self.pick(rng.trial(first).uniform(Purpose::Assignment));
        core::array::from_fn(|k| {
            let trial = first + k as u64;
            let setting = Setting::ALL[k];
            let [d1, d2, _] = detections(&rng.trial(trial), eta, 2);
            let (o1, o2) = masked_pair(self.readings[lambda][k], d1, d2);
            RunRecord::new(trial, setting, o1, o2)
        })
    }
}

fn check_hv_eta(eta: f64) -> Result<()> {
    // A model may be run with dead detectors; the quantum protocol may not.
    if eta == 0.0 {
        Ok(())
    } else {
        check_eta(eta)
    }
}

/// Tally of a range of rounds of a hidden-variable experiment.
pub fn run_hv_rounds(
    model: &NoncontextualModel,
    config: &ExperimentConfig,
    rounds: Range<u64>,
) -> Result<Tally> {
    check_hv_eta(config.eta)?;
    let source = HiddenVariableSource::new(model);
    Ok(run_rounds(
        &source,
        &CounterRng::new(config.seed),
        config.eta,
        rounds,
    ))
}

/// The hidden-variable counterpart of the detector-limited experiment,
/// estimated with the same selection and estimators as the quantum runs.
pub fn simulate_hv_experiment(
    model: &NoncontextualModel,
    config: &ExperimentConfig,
) -> Result<StEstimate> {
    if config.trials_per_setting == 0 {
        return Err(Error::Config(
            "trials per setting must be at least 1".into(),
        ));
    }
    let tally = run_hv_rounds(model, config, 0..config.trials_per_setting)?;
    estimate_from_tally(&tally, config.selection)
}
