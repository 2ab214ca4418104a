//! Exact pure states of two or three spin-½ particles, products of Pauli
//! operators, Born-rule outcome distributions and sampling.
//!
//! Basis convention: bit `k` of a basis index is particle `k`'s z-spin, with
//! `0` meaning spin up (`|+⟩`) and `1` spin down (`|−⟩`). Particles are
//! indexed from zero.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_PARTICLES: usize = 3;

/// Tolerance for exact-algebra checks.
pub const EXACT_TOL: f64 = 1e-12;

/// Born weights below this are rounding noise and are treated as zero, so a
/// forbidden outcome can never be sampled.
const ZERO_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn symbol(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    /// Eigenvector components `(⟨0|e⟩, ⟨1|e⟩)` for eigenvalue `sign`.
    fn eigenvector(self, sign: i8) -> [Complex64; 2] {
        let h = FRAC_1_SQRT_2;
        match (self, sign > 0) {
            (Axis::X, true) => [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            (Axis::X, false) => [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
            (Axis::Y, true) => [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
            (Axis::Y, false) => [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
            (Axis::Z, true) => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            (Axis::Z, false) => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        }
    }

    /// Action of the Pauli matrix on basis bit `bit`: `σ|bit⟩ = c |bit'⟩`.
    fn act(self, bit: usize) -> (usize, Complex64) {
        match (self, bit) {
            (Axis::X, b) => (b ^ 1, Complex64::new(1.0, 0.0)),
            (Axis::Y, 0) => (1, Complex64::new(0.0, 1.0)),
            (Axis::Y, _) => (0, Complex64::new(0.0, -1.0)),
            (Axis::Z, 0) => (0, Complex64::new(1.0, 0.0)),
            (Axis::Z, _) => (1, Complex64::new(-1.0, 0.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_particles: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(num_particles: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if !(2..=MAX_PARTICLES).contains(&num_particles) {
            return Err(Error::InvalidState(format!(
                "{num_particles} particles; only 2 or 3 are supported"
            )));
        }
        if amplitudes.len() != 1 << num_particles {
            return Err(Error::InvalidState(format!(
                "{} amplitudes for {num_particles} particles",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm} is not 1")));
        }
        Ok(Self {
            num_particles,
            amplitudes,
        })
    }

    /// `(|+−⟩ − |−+⟩)/√2`.
    pub fn singlet() -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 4];
        amplitudes[0b10] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        amplitudes[0b01] = Complex64::new(-FRAC_1_SQRT_2, 0.0);
        Self {
            num_particles: 2,
            amplitudes,
        }
    }

    /// `(|+++⟩ − |−−−⟩)/√2`.
    pub fn ghz() -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 8];
        amplitudes[0b000] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        amplitudes[0b111] = Complex64::new(-FRAC_1_SQRT_2, 0.0);
        Self {
            num_particles: 3,
            amplitudes,
        }
    }

    pub fn num_particles(&self) -> usize {
        self.num_particles
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Amplitude of the z-basis state with the given spins (`+1` up, `−1` down),
    /// particle 0 first.
    pub fn amplitude(&self, spins: &[i8]) -> Option<Complex64> {
        if spins.len() != self.num_particles {
            return None;
        }
        let index = spins
            .iter()
            .enumerate()
            .try_fold(0usize, |acc, (k, &s)| match s {
                1 => Some(acc),
                -1 => Some(acc | 1 << k),
                _ => None,
            })?;
        Some(self.amplitudes[index])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// A tensor product of single-particle spin components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliObservable {
    factors: Vec<(usize, Axis)>,
    label: Option<String>,
}

impl PauliObservable {
    pub fn new(factors: Vec<(usize, Axis)>) -> Result<Self> {
        if factors.is_empty() || factors.len() > MAX_PARTICLES {
            return Err(Error::InvalidObservable(format!(
                "{} factors; expected 1 to {MAX_PARTICLES}",
                factors.len()
            )));
        }
        for (i, (p, _)) in factors.iter().enumerate() {
            if *p >= MAX_PARTICLES {
                return Err(Error::InvalidObservable(format!(
                    "particle index {p} out of range"
                )));
            }
            if factors[..i].iter().any(|(q, _)| q == p) {
                return Err(Error::InvalidObservable(format!(
                    "particle {p} appears twice"
                )));
            }
        }
        Ok(Self {
            factors,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// `σ_{0,first} σ_{1,second}` on a particle pair.
    pub fn pair(first: Axis, second: Axis) -> Self {
        Self {
            factors: vec![(0, first), (1, second)],
            label: None,
        }
    }

    /// `σ_{0,a} σ_{1,b} σ_{2,c}` on three particles.
    pub fn triple(axes: [Axis; 3]) -> Self {
        Self {
            factors: vec![(0, axes[0]), (1, axes[1]), (2, axes[2])],
            label: None,
        }
    }

    pub fn factors(&self) -> &[(usize, Axis)] {
        &self.factors
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    fn check_against(&self, state: &PureState) -> Result<()> {
        match self.factors.iter().find(|(p, _)| *p >= state.num_particles) {
            Some((p, _)) => Err(Error::InvalidObservable(format!(
                "particle {p} does not exist in a {}-particle state",
                state.num_particles
            ))),
            None => Ok(()),
        }
    }

    /// `O|ψ⟩` as a raw amplitude vector.
    fn apply(&self, state: &PureState) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); state.amplitudes.len()];
        for (index, amp) in state.amplitudes.iter().enumerate() {
            let mut target = index;
            let mut coeff = Complex64::new(1.0, 0.0);
            for &(p, axis) in &self.factors {
                let (bit, c) = axis.act((index >> p) & 1);
                target = (target & !(1 << p)) | bit << p;
                coeff *= c;
            }
            out[target] += coeff * amp;
        }
        out
    }
}

/// The four three-particle operators of the GHZ argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GhzOperator {
    A,
    B,
    C,
    D,
}

impl GhzOperator {
    pub const ALL: [GhzOperator; 4] = [
        GhzOperator::A,
        GhzOperator::B,
        GhzOperator::C,
        GhzOperator::D,
    ];

    pub fn axes(self) -> [Axis; 3] {
        use Axis::{X, Y};
        match self {
            GhzOperator::A => [X, Y, Y],
            GhzOperator::B => [Y, X, Y],
            GhzOperator::C => [Y, Y, X],
            GhzOperator::D => [X, X, X],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GhzOperator::A => "A",
            GhzOperator::B => "B",
            GhzOperator::C => "C",
            GhzOperator::D => "D",
        }
    }

    pub fn observable(self) -> PauliObservable {
        PauliObservable::triple(self.axes()).with_label(self.name())
    }
}

/// Per-particle ±1 outcomes of one joint measurement, in factor order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Outcomes {
    signs: [i8; MAX_PARTICLES],
    len: u8,
}

impl Outcomes {
    pub fn new(signs: &[i8]) -> Option<Self> {
        if signs.is_empty() || signs.len() > MAX_PARTICLES || signs.iter().any(|s| s.abs() != 1) {
            return None;
        }
        let mut buf = [0i8; MAX_PARTICLES];
        buf[..signs.len()].copy_from_slice(signs);
        Some(Self {
            signs: buf,
            len: signs.len() as u8,
        })
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.signs[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> Option<i8> {
        self.as_slice().get(i).copied()
    }

    pub fn product(&self) -> i8 {
        self.as_slice().iter().product()
    }
}

/// Born-rule distribution over the joint outcomes of a product observable.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    /// Every outcome tuple, `+1` before `−1`, first factor most significant.
    entries: Vec<(Outcomes, f64)>,
    /// Cumulative weights over the non-zero entries; last one is exactly 1.
    cumulative: Vec<(Outcomes, f64)>,
}

impl JointDistribution {
    pub fn entries(&self) -> &[(Outcomes, f64)] {
        &self.entries
    }

    pub fn probability(&self, outcomes: &Outcomes) -> f64 {
        self.entries
            .iter()
            .find(|(o, _)| o == outcomes)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// Distribution-weighted mean of the outcome product.
    pub fn mean_product(&self) -> f64 {
        self.entries
            .iter()
            .map(|(o, p)| o.product() as f64 * p)
            .sum()
    }

    /// Inverse-CDF draw from a uniform `u ∈ [0, 1)`.
    pub fn sample_unit(&self, u: f64) -> Outcomes {
        self.cumulative
            .iter()
            .find(|(_, c)| u < *c)
            .unwrap_or_else(|| self.cumulative.last().expect("distribution has support"))
            .0
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Outcomes {
        self.sample_unit(crate::rng::uniform(rng))
    }
}

/// `⟨ψ|O|ψ⟩`.
pub fn expectation(state: &PureState, obs: &PauliObservable) -> Result<f64> {
    obs.check_against(state)?;
    let image = obs.apply(state);
    let value: Complex64 = state
        .amplitudes
        .iter()
        .zip(&image)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(value.re)
}

/// Probabilities of the simultaneous single-particle outcomes of `obs`.
///
/// Each outcome tuple's weight is the squared overlap with the product of the
/// corresponding single-particle eigenvectors, summed over the z-basis states
/// of any unmeasured particle.
pub fn joint_outcome_distribution(
    state: &PureState,
    obs: &PauliObservable,
) -> Result<JointDistribution> {
    obs.check_against(state)?;
    let n = state.num_particles;
    let m = obs.factors.len();
    let measured_mask: usize = obs.factors.iter().map(|(p, _)| 1 << p).sum();
    let rest: Vec<usize> = (0..1 << n).filter(|i| i & measured_mask == 0).collect();

    let mut entries = Vec::with_capacity(1 << m);
    for code in 0..1usize << m {
        let signs: Vec<i8> = (0..m)
            .map(|j| if code >> (m - 1 - j) & 1 == 0 { 1 } else { -1 })
            .collect();
        let eigen: Vec<[Complex64; 2]> = obs
            .factors
            .iter()
            .zip(&signs)
            .map(|(&(_, axis), &s)| axis.eigenvector(s))
            .collect();

        let mut weight = 0.0;
        for &base in &rest {
            let mut overlap = Complex64::new(0.0, 0.0);
            for bits in 0..1usize << m {
                let mut index = base;
                let mut coeff = Complex64::new(1.0, 0.0);
                for (j, &(p, _)) in obs.factors.iter().enumerate() {
                    let b = bits >> j & 1;
                    index |= b << p;
                    coeff *= eigen[j][b].conj();
                }
                overlap += coeff * state.amplitudes[index];
            }
            weight += overlap.norm_sqr();
        }
        if weight < ZERO_CUTOFF {
            weight = 0.0;
        }
        entries.push((Outcomes::new(&signs).expect("valid signs"), weight));
    }

    let mut cumulative = Vec::new();
    let mut acc = 0.0;
    for (o, p) in &entries {
        if *p > 0.0 {
            acc += p;
            cumulative.push((*o, acc));
        }
    }
    if let Some(last) = cumulative.last_mut() {
        last.1 = 1.0;
    }
    Ok(JointDistribution {
        entries,
        cumulative,
    })
}

/// One joint measurement of `obs` on `state`.
pub fn sample_joint<R: RngCore + ?Sized>(
    state: &PureState,
    obs: &PauliObservable,
    rng: &mut R,
) -> Result<Outcomes> {
    Ok(joint_outcome_distribution(state, obs)?.sample(rng))
}
