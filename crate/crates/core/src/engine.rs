//! Trial generation: setting schedule, detector-limited runs and pairing of
//! independent runs into composite `S = RR′` and `T = QQ′` events.
//!
//! Trial `t` always uses setting `t mod 4` in the order `R, R′, Q, Q′`, so
//! trials `4i..4i+4` form round `i`: the i-th run of every setting. Rank
//! pairing then only ever joins runs of the same round, which lets a round
//! range be simulated and tallied independently of every other.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::quantum::{
    joint_outcome_distribution, Axis, GhzOperator, JointDistribution, PauliObservable, PureState,
};
use crate::rng::{self, CounterRng, Purpose, TrialDraws};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    R,
    RPrime,
    Q,
    QPrime,
}

impl Setting {
    pub const ALL: [Setting; 4] = [Setting::R, Setting::RPrime, Setting::Q, Setting::QPrime];

    pub fn axes(self) -> (Axis, Axis) {
        match self {
            Setting::R => (Axis::X, Axis::X),
            Setting::RPrime => (Axis::Y, Axis::Y),
            Setting::Q => (Axis::X, Axis::Y),
            Setting::QPrime => (Axis::Y, Axis::X),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Setting::R => "R",
            Setting::RPrime => "R'",
            Setting::Q => "Q",
            Setting::QPrime => "Q'",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn for_trial(trial_index: u64) -> Setting {
        Setting::ALL[(trial_index % 4) as usize]
    }

    pub fn observable(self) -> PauliObservable {
        let (a, b) = self.axes();
        PauliObservable::pair(a, b).with_label(self.name())
    }
}

/// A single detector reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Minus,
    Undetected,
    Plus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Minus => -1,
            Outcome::Undetected => 0,
            Outcome::Plus => 1,
        }
    }

    pub fn from_sign(sign: i8) -> Outcome {
        match sign.signum() {
            1 => Outcome::Plus,
            -1 => Outcome::Minus,
            _ => Outcome::Undetected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub trial_index: u64,
    pub setting: Setting,
    pub outcome1: Outcome,
    pub outcome2: Outcome,
}

impl RunRecord {
    pub fn new(trial_index: u64, setting: Setting, outcome1: Outcome, outcome2: Outcome) -> Self {
        Self {
            trial_index,
            setting,
            outcome1,
            outcome2,
        }
    }

    /// `r`, `r′`, `q` or `q′`; zero when either particle went undetected.
    pub fn product(&self) -> i8 {
        self.outcome1.value() * self.outcome2.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    S,
    T,
}

impl EventKind {
    pub fn symbol(self) -> char {
        match self {
            EventKind::S => 'S',
            EventKind::T => 'T',
        }
    }
}

/// Two runs of different particle pairs read together as `S = RR′` or `T = QQ′`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeEvent {
    pub kind: EventKind,
    pub first: RunRecord,
    pub second: RunRecord,
}

impl CompositeEvent {
    pub fn new(first: RunRecord, second: RunRecord) -> Result<Self> {
        let kind = match (first.setting, second.setting) {
            (Setting::R, Setting::RPrime) => EventKind::S,
            (Setting::Q, Setting::QPrime) => EventKind::T,
            (a, b) => {
                return Err(Error::Pairing(format!(
                    "{} cannot be paired with {}",
                    a.name(),
                    b.name()
                )))
            }
        };
        Ok(Self {
            kind,
            first,
            second,
        })
    }

    pub fn value(&self) -> i8 {
        self.first.product() * self.second.product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Singlet,
    Ghz,
}

/// `Ideal` keeps every `T` event; `Postselected` drops those with `qq′ = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    Ideal,
    Postselected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub trials_per_setting: u64,
    pub eta: f64,
    pub seed: u64,
    pub state: StateKind,
    pub selection: Selection,
}

impl ExperimentConfig {
    /// Postselected singlet experiment.
    pub fn new(trials_per_setting: u64, eta: f64, seed: u64) -> Result<Self> {
        let config = Self {
            trials_per_setting,
            eta,
            seed,
            state: StateKind::Singlet,
            selection: Selection::Postselected,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_state(mut self, state: StateKind) -> Self {
        self.state = state;
        self
    }

    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_setting == 0 {
            return Err(Error::Config(
                "trials per setting must be at least 1".into(),
            ));
        }
        if self.trials_per_setting > u64::MAX / 4 {
            return Err(Error::Config("trials per setting too large".into()));
        }
        check_eta(self.eta)
    }

    /// Trial indices of the whole experiment.
    pub fn trials(&self) -> Range<u64> {
        0..4 * self.trials_per_setting
    }
}

pub fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "detector efficiency {eta} outside (0, 1]"
        )))
    }
}

/// Round-robin `R, R′, Q, Q′`, repeated.
pub fn schedule(trials_per_setting: u64) -> Vec<Setting> {
    (0..4 * trials_per_setting)
        .map(Setting::for_trial)
        .collect()
}

fn mask(outcomes: (i8, i8), detected: (bool, bool)) -> (Outcome, Outcome) {
    let pick = |s: i8, d: bool| {
        if d {
            Outcome::from_sign(s)
        } else {
            Outcome::Undetected
        }
    };
    (pick(outcomes.0, detected.0), pick(outcomes.1, detected.1))
}

fn measure(
    table: &JointDistribution,
    detected: (bool, bool),
    u: impl FnOnce() -> f64,
) -> (Outcome, Outcome) {
    if !detected.0 && !detected.1 {
        return (Outcome::Undetected, Outcome::Undetected);
    }
    let o = table.sample_unit(u());
    mask((o.as_slice()[0], o.as_slice()[1]), detected)
}

pub(crate) fn detections(draws: &TrialDraws, eta: f64, n: u8) -> [bool; 3] {
    let mut out = [false; 3];
    for k in 0..n {
        out[k as usize] = draws.uniform(Purpose::Detect(k)) < eta;
    }
    out
}

/// One run on a fresh pair: both detectors fire independently with
/// probability `eta`, then the joint outcome is drawn. The detection draws
/// come first; no outcome is drawn when neither particle is seen.
pub fn run_trial<R: RngCore + ?Sized>(
    state: &PureState,
    setting: Setting,
    eta: f64,
    trial_index: u64,
    rng: &mut R,
) -> Result<RunRecord> {
    check_eta(eta)?;
    if state.num_particles() != 2 {
        return Err(Error::InvalidState(format!(
            "settings act on particle pairs, state has {} particles",
            state.num_particles()
        )));
    }
    let table = joint_outcome_distribution(state, &setting.observable())?;
    let d1 = rng::uniform(rng) < eta;
    let d2 = rng::uniform(rng) < eta;
    let (o1, o2) = measure(&table, (d1, d2), || rng::uniform(rng));
    Ok(RunRecord::new(trial_index, setting, o1, o2))
}

/// Pairs the i-th `R` run with the i-th `R′` run and the i-th `Q` run with
/// the i-th `Q′` run. Output is `S₀, T₀, S₁, T₁, …`.
pub fn pair_events(records: &[RunRecord]) -> Result<Vec<CompositeEvent>> {
    let by_setting: [Vec<&RunRecord>; 4] =
        Setting::ALL.map(|s| records.iter().filter(|r| r.setting == s).collect());
    let n = by_setting[0].len();
    if by_setting.iter().any(|runs| runs.len() != n) {
        return Err(Error::Pairing(format!(
            "unbalanced setting counts R={} R'={} Q={} Q'={}",
            by_setting[0].len(),
            by_setting[1].len(),
            by_setting[2].len(),
            by_setting[3].len()
        )));
    }
    let [r, rp, q, qp] = &by_setting;
    let mut events = Vec::with_capacity(2 * n);
    for (((r, rp), q), qp) in r.iter().zip(rp).zip(q).zip(qp) {
        events.push(CompositeEvent::new(**r, **rp)?);
        events.push(CompositeEvent::new(**q, **qp)?);
    }
    Ok(events)
}

/// Counts of a ternary value (−1, 0, +1).
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueCounts {
    pub minus: u64,
    pub zero: u64,
    pub plus: u64,
}

impl ValueCounts {
    pub fn add(&mut self, value: i8) {
        match value.signum() {
            -1 => self.minus += 1,
            0 => self.zero += 1,
            _ => self.plus += 1,
        }
    }

    pub fn merge(&mut self, other: &ValueCounts) {
        self.minus += other.minus;
        self.zero += other.zero;
        self.plus += other.plus;
    }

    pub fn total(&self) -> u64 {
        self.minus + self.zero + self.plus
    }

    /// Sample mean and its standard error, zeros included in both.
    pub fn mean(&self) -> Option<(f64, f64)> {
        let n = self.total();
        if n == 0 {
            return None;
        }
        let n_f = n as f64;
        let mean = (self.plus as f64 - self.minus as f64) / n_f;
        let second = (self.plus + self.minus) as f64 / n_f;
        let var = (second - mean * mean).max(0.0);
        Some((mean, libm::sqrt(var / n_f)))
    }
}

/// Integer aggregate of any number of complete rounds. Merging is
/// commutative, so any partition of the rounds gives the same tally.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    /// Run products per setting, indexed by [`Setting::index`].
    pub runs: [ValueCounts; 4],
    /// `pairs[s + 1][t + 1]` counts rounds whose `S` event has value `s` and
    /// whose `T` event has value `t`.
    pub pairs: [[u64; 3]; 3],
}

impl Tally {
    /// `runs` must be the `R, R′, Q, Q′` runs of one round, in that order.
    pub fn record_round(&mut self, runs: &[RunRecord; 4]) {
        for run in runs {
            self.runs[run.setting.index()].add(run.product());
        }
        let s = runs[0].product() * runs[1].product();
        let t = runs[2].product() * runs[3].product();
        self.pairs[(s + 1) as usize][(t + 1) as usize] += 1;
    }

    /// Tally of rank-paired records (see [`pair_events`]).
    pub fn from_records(records: &[RunRecord]) -> Result<Tally> {
        let events = pair_events(records)?;
        let mut tally = Tally::default();
        for run in records {
            tally.runs[run.setting.index()].add(run.product());
        }
        for pair in events.chunks(2) {
            let (s, t) = (pair[0].value(), pair[1].value());
            tally.pairs[(s + 1) as usize][(t + 1) as usize] += 1;
        }
        Ok(tally)
    }

    pub fn merge(&mut self, other: &Tally) {
        for (a, b) in self.runs.iter_mut().zip(&other.runs) {
            a.merge(b);
        }
        for (row, other_row) in self.pairs.iter_mut().zip(&other.pairs) {
            for (a, b) in row.iter_mut().zip(other_row) {
                *a += b;
            }
        }
    }

    pub fn setting(&self, setting: Setting) -> ValueCounts {
        self.runs[setting.index()]
    }

    pub fn rounds(&self) -> u64 {
        self.pairs.iter().flatten().sum()
    }

    pub fn s_events(&self) -> ValueCounts {
        let row = |i: usize| self.pairs[i].iter().sum();
        ValueCounts {
            minus: row(0),
            zero: row(1),
            plus: row(2),
        }
    }

    pub fn t_events(&self) -> ValueCounts {
        let col = |j: usize| self.pairs.iter().map(|r| r[j]).sum();
        ValueCounts {
            minus: col(0),
            zero: col(1),
            plus: col(2),
        }
    }

    /// Runs in which at least one particle went undetected.
    pub fn incomplete_runs(&self) -> u64 {
        self.runs.iter().map(|c| c.zero).sum()
    }

    pub fn total_runs(&self) -> u64 {
        self.runs.iter().map(|c| c.total()).sum()
    }
}

/// Anything that can produce the four runs of a round from counter-based draws.
pub trait RoundSource {
    fn round(&self, rng: &CounterRng, eta: f64, round: u64) -> [RunRecord; 4];
}

/// Born-rule runs on a two-particle state.
#[derive(Debug, Clone)]
pub struct QuantumSource {
    tables: [JointDistribution; 4],
}

impl QuantumSource {
    pub fn new(state: &PureState) -> Result<Self> {
        if state.num_particles() != 2 {
            return Err(Error::InvalidState(format!(
                "settings act on particle pairs, state has {} particles",
                state.num_particles()
            )));
        }
        let t = |s: Setting| joint_outcome_distribution(state, &s.observable());
        Ok(Self {
            tables: [
                t(Setting::R)?,
                t(Setting::RPrime)?,
                t(Setting::Q)?,
                t(Setting::QPrime)?,
            ],
        })
    }

    pub fn singlet() -> Self {
        Self::new(&PureState::singlet()).expect("singlet is a pair state")
    }

    pub fn run(&self, rng: &CounterRng, eta: f64, trial_index: u64) -> RunRecord {
        let setting = Setting::for_trial(trial_index);
        let draws = rng.trial(trial_index);
        let [d1, d2, _] = detections(&draws, eta, 2);
        let (o1, o2) = measure(&self.tables[setting.index()], (d1, d2), || {
            draws.uniform(Purpose::Outcome)
        });
        RunRecord::new(trial_index, setting, o1, o2)
    }
}

impl RoundSource for QuantumSource {
    fn round(&self, rng: &CounterRng, eta: f64, round: u64) -> [RunRecord; 4] {
        core::array::from_fn(|k| self.run(rng, eta, 4 * round + k as u64))
    }
}

pub(crate) fn masked_pair(values: (i8, i8), d1: bool, d2: bool) -> (Outcome, Outcome) {
    mask(values, (d1, d2))
}

/// Sequential tally over a range of rounds.
pub fn run_rounds<S: RoundSource + ?Sized>(
    source: &S,
    rng: &CounterRng,
    eta: f64,
    rounds: Range<u64>,
) -> Tally {
    let mut tally = Tally::default();
    for round in rounds {
        tally.record_round(&source.round(rng, eta, round));
    }
    tally
}

/// Every run of a range of rounds, in trial order.
pub fn collect_runs<S: RoundSource + ?Sized>(
    source: &S,
    rng: &CounterRng,
    eta: f64,
    rounds: Range<u64>,
) -> Vec<RunRecord> {
    rounds.flat_map(|r| source.round(rng, eta, r)).collect()
}

/// Single-threaded singlet experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Tally> {
    config.validate()?;
    if config.state != StateKind::Singlet {
        return Err(Error::Config(
            "the S/T protocol needs the singlet state".into(),
        ));
    }
    let rng = CounterRng::new(config.seed);
    Ok(run_rounds(
        &QuantumSource::singlet(),
        &rng,
        config.eta,
        0..config.trials_per_setting,
    ))
}

/// One joint measurement of a GHZ operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GhzRun {
    pub trial_index: u64,
    pub operator: GhzOperator,
    pub outcomes: [Outcome; 3],
}

impl GhzRun {
    pub fn product(&self) -> i8 {
        self.outcomes.iter().map(|o| o.value()).product()
    }
}

/// Runs of `A, B, C, D` on the GHZ state, cycling with the trial index.
#[derive(Debug, Clone)]
pub struct GhzSource {
    tables: [JointDistribution; 4],
}

impl Default for GhzSource {
    fn default() -> Self {
        let ghz = PureState::ghz();
        Self {
            tables: GhzOperator::ALL.map(|op| {
                joint_outcome_distribution(&ghz, &op.observable()).expect("valid GHZ operator")
            }),
        }
    }
}

impl GhzSource {
    pub fn run(&self, rng: &CounterRng, eta: f64, trial_index: u64) -> GhzRun {
        let index = (trial_index % 4) as usize;
        let draws = rng.trial(trial_index);
        let detected = detections(&draws, eta, 3);
        let outcomes = if detected.iter().any(|d| *d) {
            let o = self.tables[index].sample_unit(draws.uniform(Purpose::Outcome));
            core::array::from_fn(|k| {
                if detected[k] {
                    Outcome::from_sign(o.as_slice()[k])
                } else {
                    Outcome::Undetected
                }
            })
        } else {
            [Outcome::Undetected; 3]
        };
        GhzRun {
            trial_index,
            operator: GhzOperator::ALL[index],
            outcomes,
        }
    }
}

/// Product counts per GHZ operator, indexed like [`GhzOperator::ALL`].
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhzTally {
    pub counts: [ValueCounts; 4],
}

impl GhzTally {
    pub fn merge(&mut self, other: &GhzTally) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.merge(b);
        }
    }

    pub fn operator(&self, op: GhzOperator) -> ValueCounts {
        self.counts[op as usize]
    }
}

pub fn run_ghz(source: &GhzSource, rng: &CounterRng, eta: f64, trials: Range<u64>) -> GhzTally {
    let mut tally = GhzTally::default();
    for t in trials {
        let run = source.run(rng, eta, t);
        tally.counts[run.operator as usize].add(run.product());
    }
    tally
}
