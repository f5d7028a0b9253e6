//! Amplitude amplification for posterior estimation.
//!
//! Good states are the basis states consistent with the evidence and with
//! every ancilla at |0⟩. One Grover round applies, in circuit order, the
//! phase oracle S_e, A†, the zero reflection S₀ = I − 2|0⟩⟨0|, and A. Each
//! round rotates the state toward the good subspace while keeping the
//! relative weights inside it fixed, so post-selecting amplified shots
//! estimates the same conditional distribution with fewer wasted samples.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::bn::{Distribution, Evidence};
use crate::circuit::{Circuit, Control, Gate, QubitLayout};
use crate::error::{Error, Result};
use crate::lowering::lower;
use crate::qsim::{simulate_into, ShotCounts, StateVector};

/// Which basis states count as good.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoodStateSpec {
    pub num_qubits: usize,
    /// Required bit per constrained qubit.
    pub constraints: BTreeMap<usize, bool>,
    /// Unconstrained qubits (the inferred variables).
    pub free: Vec<usize>,
}

impl GoodStateSpec {
    pub fn new(
        num_qubits: usize,
        constraints: BTreeMap<usize, bool>,
        free: Vec<usize>,
    ) -> Result<Self> {
        let spec = GoodStateSpec {
            num_qubits,
            constraints,
            free,
        };
        spec.check()?;
        Ok(spec)
    }

    /// Constrains every evidence variable to its state's bit pattern and every
    /// ancilla of `circuit` to 0. All other variable qubits stay free.
    pub fn for_evidence(circuit: &Circuit, evidence: &Evidence) -> Result<Self> {
        let mut constraints = BTreeMap::new();
        for (name, &state) in &evidence.assignments {
            let block = circuit
                .layout
                .block(name)
                .ok_or_else(|| Error::UnknownNode(name.clone()))?;
            if state >= block.num_states {
                return Err(Error::StateOutOfRange {
                    node: name.clone(),
                    state,
                    num_states: block.num_states,
                });
            }
            for c in block.pattern(state) {
                constraints.insert(c.qubit, c.on_one);
            }
        }
        for &a in &circuit.ancillas {
            constraints.insert(a, false);
        }
        let free = circuit
            .layout
            .blocks
            .iter()
            .filter(|b| !evidence.contains(&b.name))
            .flat_map(|b| b.qubits.iter().copied())
            .collect();
        GoodStateSpec::new(circuit.num_qubits, constraints, free)
    }

    pub fn check(&self) -> Result<()> {
        for &q in self.constraints.keys().chain(&self.free) {
            if q >= self.num_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        let free: BTreeSet<usize> = self.free.iter().copied().collect();
        if free.len() != self.free.len() {
            return Err(Error::InvalidSpec("free qubit listed twice".into()));
        }
        if let Some(q) = self.constraints.keys().find(|q| free.contains(q)) {
            return Err(Error::InvalidSpec(format!(
                "qubit {q} is both constrained and free"
            )));
        }
        Ok(())
    }

    pub fn pattern(&self) -> Vec<Control> {
        self.constraints
            .iter()
            .map(|(&qubit, &on_one)| Control { qubit, on_one })
            .collect()
    }

    fn mask_value(&self) -> (usize, usize) {
        crate::qsim::pattern_mask(&self.pattern())
    }

    pub fn is_good(&self, index: u64) -> bool {
        let (mask, value) = self.mask_value();
        index as usize & mask == value
    }
}

/// Diagonal ±1 transform negating basis states with `index & mask == value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reflection {
    pub num_qubits: usize,
    mask: usize,
    value: usize,
}

impl Reflection {
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                found: state.num_qubits(),
            });
        }
        state.phase_flip(self.mask, self.value);
        Ok(())
    }

    /// The same transform as a [`Gate::PhaseFlip`].
    pub fn to_gate(&self) -> Gate {
        let pattern = (0..self.num_qubits)
            .filter(|q| self.mask >> q & 1 == 1)
            .map(|q| Control {
                qubit: q,
                on_one: self.value >> q & 1 == 1,
            })
            .collect();
        Gate::PhaseFlip { pattern }
    }
}

/// S_e: flips the sign of every good state.
pub fn phase_oracle(spec: &GoodStateSpec) -> Result<Reflection> {
    spec.check()?;
    let (mask, value) = spec.mask_value();
    Ok(Reflection {
        num_qubits: spec.num_qubits,
        mask,
        value,
    })
}

/// S₀ = I − 2|0…0⟩⟨0…0|.
pub fn zero_reflection(num_qubits: usize) -> Reflection {
    Reflection {
        num_qubits,
        mask: (1usize << num_qubits) - 1,
        value: 0,
    }
}

/// State preparation A, good-state spec, and the number of Grover rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct GroverPlan {
    pub circuit: Circuit,
    pub spec: GoodStateSpec,
    pub iterations: usize,
}

impl GroverPlan {
    pub fn new(circuit: Circuit, spec: GoodStateSpec, iterations: usize) -> Result<Self> {
        if circuit.num_qubits != spec.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: circuit.num_qubits,
                found: spec.num_qubits,
            });
        }
        spec.check()?;
        Ok(GroverPlan {
            circuit,
            spec,
            iterations,
        })
    }
}

/// G^k A|0…0⟩ by exact simulation.
pub fn grover_apply(plan: &GroverPlan) -> Result<StateVector> {
    let mut state = StateVector::zero(plan.circuit.num_qubits)?;
    simulate_into(&plan.circuit, &mut state)?;
    let rounds = GroverRounds::new(plan)?;
    for _ in 0..plan.iterations {
        rounds.step(&mut state)?;
    }
    Ok(state)
}

struct GroverRounds<'a> {
    prepare: &'a Circuit,
    unprepare: Circuit,
    oracle: Reflection,
    zero: Reflection,
}

impl<'a> GroverRounds<'a> {
    fn new(plan: &'a GroverPlan) -> Result<Self> {
        Ok(GroverRounds {
            prepare: &plan.circuit,
            unprepare: plan.circuit.inverse(),
            oracle: phase_oracle(&plan.spec)?,
            zero: zero_reflection(plan.circuit.num_qubits),
        })
    }

    fn step(&self, state: &mut StateVector) -> Result<()> {
        self.oracle.apply(state)?;
        simulate_into(&self.unprepare, state)?;
        self.zero.apply(state)?;
        simulate_into(self.prepare, state)
    }
}

/// Total probability of the good subspace.
pub fn good_mass(state: &StateVector, spec: &GoodStateSpec) -> f64 {
    let (mask, value) = spec.mask_value();
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| i & mask == value)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Outcome of an exact iteration sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationSweep {
    pub best: usize,
    /// Good-state mass after k rounds, for k = 0..=k_max.
    pub curve: Vec<f64>,
}

/// Sweeps k = 0..=k_max and returns the k maximizing good-state mass,
/// preferring the smallest k when masses tie.
pub fn select_iterations(
    circuit: &Circuit,
    spec: &GoodStateSpec,
    k_max: usize,
) -> Result<IterationSweep> {
    let plan = GroverPlan::new(circuit.clone(), spec.clone(), 0)?;
    let mut state = grover_apply(&plan)?;
    let rounds = GroverRounds::new(&plan)?;
    let mut curve = vec![good_mass(&state, spec)];
    for _ in 0..k_max {
        rounds.step(&mut state)?;
        curve.push(good_mass(&state, spec));
    }
    let mut best = 0;
    for (k, &m) in curve.iter().enumerate() {
        if m > curve[best] + 1e-12 {
            best = k;
        }
    }
    Ok(IterationSweep { best, curve })
}

fn tally_target(
    entries: impl Iterator<Item = (u64, f64)>,
    spec: &GoodStateSpec,
    layout: &QubitLayout,
    target: &str,
) -> Result<(Vec<f64>, f64)> {
    let block = layout
        .block(target)
        .ok_or_else(|| Error::UnknownNode(target.to_string()))?;
    if block
        .qubits
        .iter()
        .any(|q| spec.constraints.contains_key(q))
    {
        return Err(Error::TargetInEvidence(target.to_string()));
    }
    let (mask, value) = spec.mask_value();
    let mut weights = vec![0.0; block.num_states];
    let mut total = 0.0;
    for (index, w) in entries {
        if index as usize & mask != value {
            continue;
        }
        // unused bit patterns of the target are not states
        let s = block.read(index);
        if s < block.num_states {
            weights[s] += w;
            total += w;
        }
    }
    Ok((weights, total))
}

/// Post-selects good shots and tallies them by the target's state.
pub fn posterior_from_counts(
    counts: &ShotCounts,
    spec: &GoodStateSpec,
    layout: &QubitLayout,
    target: &str,
) -> Result<Distribution> {
    let entries = counts.counts.iter().map(|(&i, &n)| (i, n as f64));
    let (weights, total) = tally_target(entries, spec, layout, target)?;
    if total == 0.0 {
        return Err(Error::NoGoodSamples {
            shots: counts.shots,
        });
    }
    Distribution::from_weights(weights)
}

/// Exact counterpart of [`posterior_from_counts`] reading probabilities
/// straight from the state vector.
pub fn posterior_from_state(
    state: &StateVector,
    spec: &GoodStateSpec,
    layout: &QubitLayout,
    target: &str,
) -> Result<Distribution> {
    let entries = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| (i as u64, a.norm_sqr()));
    let (weights, total) = tally_target(entries, spec, layout, target)?;
    if total <= 0.0 {
        return Err(Error::ImpossibleEvidence);
    }
    Distribution::from_weights(weights)
}

/// The whole amplification as one gate list, with S_e and S₀ as phase flips.
pub fn grover_circuit(plan: &GroverPlan) -> Result<Circuit> {
    let oracle = phase_oracle(&plan.spec)?.to_gate();
    let zero = zero_reflection(plan.circuit.num_qubits).to_gate();
    let inverse = plan.circuit.inverse();
    let mut out = plan.circuit.clone();
    for _ in 0..plan.iterations {
        out.push(oracle.clone());
        out.extend(inverse.gates.iter().cloned());
        out.push(zero.clone());
        out.extend(plan.circuit.gates.iter().cloned());
    }
    Ok(out)
}

/// Work ancillas appended by [`export_grover_circuit`]: enough for a phase
/// flip over every qubit of A.
pub fn oracle_work_qubits(num_qubits: usize) -> usize {
    num_qubits.saturating_sub(3)
}

/// Basis-gate realization of [`grover_circuit`], with phase flips lowered to
/// multi-controlled Z ladders over extra work ancillas that start and end in
/// |0⟩.
pub fn export_grover_circuit(plan: &GroverPlan) -> Result<Circuit> {
    let mut circuit = grover_circuit(plan)?;
    let base = circuit.num_qubits;
    let work = oracle_work_qubits(base);
    circuit.num_qubits = base + work;
    circuit.ancillas.extend(base..base + work);
    lower(&circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_study;
    use crate::compiler::compile_static_circuit;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_PI_2;

    fn uniform_two_qubit() -> Circuit {
        let mut c = Circuit::new(2);
        c.push(Gate::ry(0, FRAC_PI_2));
        c.push(Gate::ry(1, FRAC_PI_2));
        c
    }

    fn spec(n: usize, constraints: &[(usize, bool)]) -> GoodStateSpec {
        let constraints: BTreeMap<usize, bool> = constraints.iter().copied().collect();
        let free = (0..n).filter(|q| !constraints.contains_key(q)).collect();
        GoodStateSpec::new(n, constraints, free).unwrap()
    }

    #[test]
    fn oracle_single_flip() {
        let mut s =
            StateVector::from_amplitudes(vec![Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)])
                .unwrap();
        phase_oracle(&spec(1, &[(0, true)]))
            .unwrap()
            .apply(&mut s)
            .unwrap();
        assert_eq!(s.amplitudes()[0].re, 0.6);
        assert_eq!(s.amplitudes()[1].re, -0.8);
    }

    #[test]
    fn empty_oracle_is_global_phase() {
        let c = uniform_two_qubit();
        let mut s = crate::qsim::simulate(&c, None).unwrap();
        let before = s.probabilities();
        phase_oracle(&spec(2, &[])).unwrap().apply(&mut s).unwrap();
        assert_eq!(before, s.probabilities());
        assert!(s.amplitudes().iter().all(|a| a.re < 0.0));
    }

    #[test]
    fn oracle_out_of_range() {
        let s = GoodStateSpec {
            num_qubits: 1,
            constraints: BTreeMap::from([(3, true)]),
            free: vec![],
        };
        assert!(matches!(
            phase_oracle(&s),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert!(GoodStateSpec::new(2, BTreeMap::from([(0, true)]), vec![0]).is_err());
    }

    #[test]
    fn case_study_oracle_flips_two_states() {
        let a = compile_static_circuit(&case_study::static_network()).unwrap();
        let ev = Evidence::new().with("Y", 0).with("X", 1);
        let spec = GoodStateSpec::for_evidence(&a, &ev).unwrap();
        assert_eq!(spec.free, vec![0]);
        assert_eq!(spec.constraints.len(), 7);
        let flipped = (0..256u64).filter(|&i| spec.is_good(i)).count();
        assert_eq!(flipped, 2);
    }

    #[test]
    fn unused_evidence_pattern_rejected() {
        let a = compile_static_circuit(&case_study::static_network()).unwrap();
        let ev = Evidence::new().with("X", 3);
        assert!(matches!(
            GoodStateSpec::for_evidence(&a, &ev),
            Err(Error::StateOutOfRange { .. })
        ));
    }

    #[test]
    fn zero_reflection_examples() {
        let mut s =
            StateVector::from_amplitudes(vec![Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)])
                .unwrap();
        let s0 = zero_reflection(1);
        s0.apply(&mut s).unwrap();
        assert_eq!(s.amplitudes()[0].re, -0.6);
        assert_eq!(s.amplitudes()[1].re, 0.8);
        s0.apply(&mut s).unwrap();
        assert_eq!(s.amplitudes()[0].re, 0.6);

        let u = crate::qsim::simulate(&uniform_two_qubit(), None).unwrap();
        let mut r = u.clone();
        zero_reflection(2).apply(&mut r).unwrap();
        let dot: Complex64 = u
            .amplitudes()
            .iter()
            .zip(r.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!((dot.re - 0.5).abs() < 1e-15);
        assert!(dot.im.abs() < 1e-15);
    }

    #[test]
    fn single_round_finds_marked_state() {
        let plan =
            GroverPlan::new(uniform_two_qubit(), spec(2, &[(0, true), (1, true)]), 1).unwrap();
        let s = grover_apply(&plan).unwrap();
        assert!((s.probabilities()[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rounds_is_preparation() {
        let c = uniform_two_qubit();
        let plan = GroverPlan::new(c.clone(), spec(2, &[(0, true)]), 0).unwrap();
        assert_eq!(
            grover_apply(&plan).unwrap(),
            crate::qsim::simulate(&c, None).unwrap()
        );
    }

    #[test]
    fn sweep_examples() {
        let c = uniform_two_qubit();
        let sweep = select_iterations(&c, &spec(2, &[(0, true), (1, true)]), 4).unwrap();
        assert_eq!(sweep.best, 1);
        assert_eq!(sweep.curve.len(), 5);

        // a = cos²(0.1) ≈ 0.99: amplification only hurts
        let mut high = Circuit::new(1);
        high.push(Gate::ry(0, 0.2));
        let sweep = select_iterations(&high, &spec(1, &[(0, false)]), 5).unwrap();
        assert!(sweep.curve[0] > 0.9);
        assert_eq!(sweep.best, 0);
    }

    #[test]
    fn count_posterior() {
        let a = compile_static_circuit(&case_study::static_network()).unwrap();
        let ev = Evidence::new().with("Y", 0).with("X", 1);
        let spec = GoodStateSpec::for_evidence(&a, &ev).unwrap();
        let good0: u64 = (0..256).find(|&i| spec.is_good(i) && i & 1 == 0).unwrap();
        let good1 = good0 | 1;
        let bad = 0u64;
        let mut counts = ShotCounts::new(8);
        counts.record(good0, 900);
        counts.record(good1, 100);
        counts.record(bad, 50);
        let p = posterior_from_counts(&counts, &spec, &a.layout, "d").unwrap();
        assert_eq!(p.probabilities(), &[0.9, 0.1]);

        let mut all_bad = ShotCounts::new(8);
        all_bad.record(bad, 1000);
        assert_eq!(
            posterior_from_counts(&all_bad, &spec, &a.layout, "d"),
            Err(Error::NoGoodSamples { shots: 1000 })
        );
        assert!(matches!(
            posterior_from_counts(&counts, &spec, &a.layout, "Y"),
            Err(Error::TargetInEvidence(_))
        ));
    }
}
