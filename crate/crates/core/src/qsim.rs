//! Dense state-vector simulator.
//!
//! Amplitude `i` belongs to the basis state whose qubit `q` holds bit
//! `(i >> q) & 1`. Bit strings are printed with qubit 0 rightmost.
//!
//! Sampling draws from a ChaCha20 stream seeded with the caller's seed
//! (`rand_chacha::ChaCha20Rng::seed_from_u64`), one stream per call, so
//! counts are reproducible across platforms.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::bn::Distribution;
use crate::circuit::{Circuit, Control, Gate};
use crate::error::{Error, Result};

/// Hard cap on simulated register width.
pub const MAX_QUBITS: usize = 26;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(num_qubits));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { num_qubits, amps })
    }

    /// The computational basis state `index`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let mut s = StateVector::zero(num_qubits)?;
        if index >= s.amps.len() {
            return Err(Error::DimensionMismatch {
                expected: s.amps.len(),
                found: index,
            });
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Takes amplitudes for a power-of-two register; they must be unit norm
    /// within 1e-9.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: len.next_power_of_two(),
                found: len,
            });
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(num_qubits));
        }
        let s = StateVector { num_qubits, amps };
        if (s.norm_sqr() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "state norm² is {}",
                s.norm_sqr()
            )));
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    /// |⟨self|other⟩|.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        assert_eq!(self.amps.len(), other.amps.len());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm()
    }

    /// Applies `gate`, which must already have passed [`Gate::check`].
    pub fn apply(&mut self, gate: &Gate) {
        match gate {
            Gate::Ry { target, angle } => self.ry(*target, *angle, 0, 0),
            Gate::Rz { target, angle } => {
                let bit = 1 << target;
                let lo = Complex64::from_polar(1.0, -angle / 2.0);
                let hi = Complex64::from_polar(1.0, angle / 2.0);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    *a *= if i & bit == 0 { lo } else { hi };
                }
            }
            Gate::X { target } => self.x(*target, 0, 0),
            Gate::Cnot { control, target } => self.x(*target, 1 << control, 1 << control),
            Gate::ControlledRy {
                controls,
                target,
                angle,
            } => {
                let (mask, value) = pattern_mask(controls);
                self.ry(*target, *angle, mask, value);
            }
            Gate::PhaseFlip { pattern } => {
                let (mask, value) = pattern_mask(pattern);
                self.phase_flip(mask, value);
            }
        }
    }

    fn ry(&mut self, target: usize, angle: f64, mask: usize, value: usize) {
        let (s, c) = (angle / 2.0).sin_cos();
        let bit = 1 << target;
        for i in 0..self.amps.len() {
            if i & bit != 0 || i & mask != value {
                continue;
            }
            let a0 = self.amps[i];
            let a1 = self.amps[i | bit];
            self.amps[i] = a0 * c - a1 * s;
            self.amps[i | bit] = a0 * s + a1 * c;
        }
    }

    fn x(&mut self, target: usize, mask: usize, value: usize) {
        let bit = 1 << target;
        for i in 0..self.amps.len() {
            if i & bit == 0 && i & mask == value {
                self.amps.swap(i, i | bit);
            }
        }
    }

    /// Negates amplitudes whose index satisfies `index & mask == value`.
    pub fn phase_flip(&mut self, mask: usize, value: usize) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask == value {
                *a = -*a;
            }
        }
    }

    /// Applies an arbitrary 2×2 matrix `[[m00, m01], [m10, m11]]` to `target`.
    pub fn apply_matrix(&mut self, target: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1 << target;
        for i in 0..self.amps.len() {
            if i & bit != 0 {
                continue;
            }
            let a0 = self.amps[i];
            let a1 = self.amps[i | bit];
            self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    fn pauli(&mut self, target: usize, which: u8) {
        let bit = 1 << target;
        match which {
            1 => self.x(target, 0, 0),
            2 => {
                // Y = [[0, -i], [i, 0]]
                let i_unit = Complex64::new(0.0, 1.0);
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        let a0 = self.amps[i];
                        let a1 = self.amps[i | bit];
                        self.amps[i] = -i_unit * a1;
                        self.amps[i | bit] = i_unit * a0;
                    }
                }
            }
            3 => {
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & bit != 0 {
                        *a = -*a;
                    }
                }
            }
            _ => {}
        }
    }
}

/// (mask, value) pair selecting basis indices that match `controls`.
pub fn pattern_mask(controls: &[Control]) -> (usize, usize) {
    controls.iter().fold((0, 0), |(m, v), c| {
        (
            m | 1 << c.qubit,
            if c.on_one { v | 1 << c.qubit } else { v },
        )
    })
}

/// Runs `circuit` from `initial`, or from |0…0⟩ when `None`.
pub fn simulate(circuit: &Circuit, initial: Option<&StateVector>) -> Result<StateVector> {
    let mut state = match initial {
        Some(s) => s.clone(),
        None => StateVector::zero(circuit.num_qubits)?,
    };
    simulate_into(circuit, &mut state)?;
    Ok(state)
}

/// In-place variant of [`simulate`].
pub fn simulate_into(circuit: &Circuit, state: &mut StateVector) -> Result<()> {
    if circuit.num_qubits != state.num_qubits {
        return Err(Error::DimensionMismatch {
            expected: circuit.num_qubits,
            found: state.num_qubits,
        });
    }
    if circuit.num_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits(circuit.num_qubits));
    }
    for g in &circuit.gates {
        g.check(circuit.num_qubits)?;
    }
    for g in &circuit.gates {
        state.apply(g);
    }
    Ok(())
}

/// A† for a circuit A.
pub fn inverse(circuit: &Circuit) -> Circuit {
    circuit.inverse()
}

/// Marginal over `subset`; the first listed qubit is the most-significant
/// bit of the returned pattern index.
pub fn marginal_probabilities(state: &StateVector, subset: &[usize]) -> Result<Distribution> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    for (i, &q) in subset.iter().enumerate() {
        if q >= state.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                num_qubits: state.num_qubits,
            });
        }
        if subset[..i].contains(&q) {
            return Err(Error::InvalidSpec(format!("qubit {q} listed twice")));
        }
    }
    let mut weights = vec![0.0; 1 << subset.len()];
    for (i, a) in state.amps.iter().enumerate() {
        let pattern = subset.iter().fold(0, |acc, &q| (acc << 1) | ((i >> q) & 1));
        weights[pattern] += a.norm_sqr();
    }
    Distribution::from_weights(weights)
}

/// Measurement outcomes keyed by basis index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShotCounts {
    pub num_qubits: usize,
    pub shots: u64,
    pub counts: BTreeMap<u64, u64>,
}

impl ShotCounts {
    pub fn new(num_qubits: usize) -> Self {
        ShotCounts {
            num_qubits,
            shots: 0,
            counts: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, index: u64, n: u64) {
        if n > 0 {
            *self.counts.entry(index).or_insert(0) += n;
            self.shots += n;
        }
    }

    pub fn get(&self, index: u64) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    /// Basis index as a bit string, qubit 0 rightmost.
    pub fn bitstring(&self, index: u64) -> String {
        (0..self.num_qubits)
            .rev()
            .map(|q| if (index >> q) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn to_bitstrings(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .map(|(&i, &n)| (self.bitstring(i), n))
            .collect()
    }
}

struct Sampler {
    cumulative: Vec<f64>,
}

impl Sampler {
    fn new(state: &StateVector) -> Self {
        let mut acc = 0.0;
        let cumulative = state
            .amps
            .iter()
            .map(|a| {
                acc += a.norm_sqr();
                acc
            })
            .collect();
        Sampler { cumulative }
    }

    fn draw(&self, rng: &mut ChaCha20Rng) -> u64 {
        let total = *self.cumulative.last().expect("non-empty state");
        let u = rng.gen::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1) as u64
    }
}

/// Multinomial draw of `shots` outcomes from |amplitude|².
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> Result<ShotCounts> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let sampler = Sampler::new(state);
    let mut counts = ShotCounts::new(state.num_qubits);
    for _ in 0..shots {
        counts.record(sampler.draw(&mut rng), 1);
    }
    Ok(counts)
}

/// Depolarizing gate noise plus readout flips.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseConfig {
    /// Error probability after each single-qubit gate.
    pub single_qubit: f64,
    /// Error probability after each gate on two or more qubits.
    pub two_qubit: f64,
    /// Readout flip probability per qubit; missing entries are zero.
    pub readout: Vec<f64>,
    /// Number of Monte Carlo trajectories the shots are spread over.
    pub trajectories: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            single_qubit: 0.0,
            two_qubit: 0.0,
            readout: Vec::new(),
            trajectories: 64,
        }
    }
}

impl NoiseConfig {
    pub fn depolarizing(single_qubit: f64, two_qubit: f64) -> Self {
        NoiseConfig {
            single_qubit,
            two_qubit,
            ..NoiseConfig::default()
        }
    }

    pub fn with_readout(mut self, readout: Vec<f64>) -> Self {
        self.readout = readout;
        self
    }

    pub fn with_trajectories(mut self, trajectories: usize) -> Self {
        self.trajectories = trajectories;
        self
    }

    pub fn is_noiseless(&self) -> bool {
        self.single_qubit == 0.0 && self.two_qubit == 0.0 && self.readout.iter().all(|&p| p == 0.0)
    }

    pub fn check(&self) -> Result<()> {
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !in_unit(self.single_qubit) || !in_unit(self.two_qubit) {
            return Err(Error::InvalidNoise(
                "gate error probabilities must lie in [0, 1]".into(),
            ));
        }
        if let Some(p) = self.readout.iter().find(|p| !in_unit(**p)) {
            return Err(Error::InvalidNoise(format!(
                "readout flip probability {p} outside [0, 1]"
            )));
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidNoise("need at least one trajectory".into()));
        }
        Ok(())
    }
}

/// Monte Carlo trajectory simulation.
///
/// After every gate a uniformly chosen non-identity Pauli string hits the
/// gate's qubits with the configured probability. Phase flips are treated as
/// ideal reflections. Each trajectory contributes an equal share of the shots
/// and every shot gets independent readout flips. One RNG stream drives the
/// whole call.
pub fn simulate_noisy(
    circuit: &Circuit,
    noise: &NoiseConfig,
    shots: u64,
    seed: u64,
) -> Result<ShotCounts> {
    noise.check()?;
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    if circuit.num_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits(circuit.num_qubits));
    }
    for g in &circuit.gates {
        g.check(circuit.num_qubits)?;
    }
    let gate_noise = noise.single_qubit > 0.0 || noise.two_qubit > 0.0;
    let trajectories = if gate_noise {
        (noise.trajectories as u64).min(shots)
    } else {
        1
    };

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut counts = ShotCounts::new(circuit.num_qubits);
    let base = shots / trajectories;
    let extra = shots % trajectories;
    for t in 0..trajectories {
        let mut state = StateVector::zero(circuit.num_qubits)?;
        for g in &circuit.gates {
            state.apply(g);
            if !gate_noise {
                continue;
            }
            let qubits = g.qubits();
            let p = match (g, qubits.len()) {
                (Gate::PhaseFlip { .. }, _) | (_, 0) => 0.0,
                (_, 1) => noise.single_qubit,
                _ => noise.two_qubit,
            };
            if p > 0.0 && rng.gen::<f64>() < p {
                // uniform over the 4^k − 1 non-identity Pauli strings
                let strings = 1u64 << (2 * qubits.len());
                let mut code = rng.gen_range(1..strings);
                for &q in &qubits {
                    state.pauli(q, (code & 3) as u8);
                    code >>= 2;
                }
            }
        }
        let sampler = Sampler::new(&state);
        let n = base + u64::from(t < extra);
        for _ in 0..n {
            let mut outcome = sampler.draw(&mut rng);
            for (q, &p) in noise.readout.iter().enumerate().take(circuit.num_qubits) {
                if p > 0.0 && rng.gen::<f64>() < p {
                    outcome ^= 1 << q;
                }
            }
            counts.record(outcome, 1);
        }
    }
    Ok(counts)
}
