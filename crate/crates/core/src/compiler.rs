//! Lowering of Bayesian networks into rotation circuits.
//!
//! Each variable gets a contiguous block of ⌈log₂ n⌉ qubits. A distribution
//! over a block is encoded recursively: an RY on the leading qubit splits the
//! mass by leading bit, then the remaining qubits are encoded conditioned on
//! the leading qubit being |1⟩ and |0⟩ in turn. Child variables repeat that
//! encoding once per parent bit pattern, controlled on the parents' qubits.
//!
//! The output of this module still carries polarity-annotated multi-controlled
//! rotations; [`crate::lowering::lower`] turns it into basis gates.

use crate::bn::{DiscreteNetwork, Distribution, TransitionModel};
use crate::circuit::{Circuit, Control, Gate, NodeBlock, QubitLayout};
use crate::error::{Error, Result};

/// ⌈log₂ num_states⌉; a variable needs at least two states.
pub fn qubit_count(num_states: usize) -> Result<usize> {
    if num_states < 2 {
        return Err(Error::TooFewStates(num_states));
    }
    Ok(block_width(num_states))
}

/// Like [`qubit_count`] but a single-state variable still takes one qubit.
fn block_width(num_states: usize) -> usize {
    let mut bits = 1;
    while (1usize << bits) < num_states {
        bits += 1;
    }
    bits
}

/// θ with cos²(θ/2) : sin²(θ/2) = p_zero : p_one, i.e. 2·atan(√(p₁/p₀)).
///
/// `(p, 0)` gives 0 and `(0, p)` gives π.
pub fn rotation_angle(p_zero: f64, p_one: f64) -> Result<f64> {
    if !(p_zero.is_finite() && p_one.is_finite()) || p_zero < 0.0 || p_one < 0.0 {
        return Err(Error::InvalidDistribution(format!(
            "masses must be finite and nonnegative, got ({p_zero}, {p_one})"
        )));
    }
    if p_zero + p_one <= 0.0 {
        return Err(Error::ZeroMass);
    }
    // atan2 covers the p_zero = 0 limit without dividing by zero.
    Ok(2.0 * p_one.sqrt().atan2(p_zero.sqrt()))
}

/// Unreachable branches (no mass on either side) get a zero rotation.
fn branch_angle(p_zero: f64, p_one: f64) -> Result<f64> {
    match rotation_angle(p_zero, p_one) {
        Err(Error::ZeroMass) => Ok(0.0),
        other => other,
    }
}

/// Gates preparing `dist` on `block` starting from |0…0⟩.
pub fn encode_distribution(dist: &Distribution, block: &[usize]) -> Result<Vec<Gate>> {
    encode_conditioned(dist.probabilities(), block, &[])
}

/// [`encode_distribution`] with every rotation additionally conditioned on
/// `controls`.
pub fn encode_conditioned(
    masses: &[f64],
    block: &[usize],
    controls: &[Control],
) -> Result<Vec<Gate>> {
    if masses.is_empty() || block.len() != block_width(masses.len()) {
        return Err(Error::DimensionMismatch {
            expected: block_width(masses.len().max(1)),
            found: block.len(),
        });
    }
    let mut padded = masses.to_vec();
    padded.resize(1 << block.len(), 0.0);
    let mut gates = Vec::new();
    encode_recursive(&padded, block, &mut controls.to_vec(), &mut gates)?;
    Ok(gates)
}

fn encode_recursive(
    masses: &[f64],
    block: &[usize],
    controls: &mut Vec<Control>,
    gates: &mut Vec<Gate>,
) -> Result<()> {
    let (&lead, rest) = block.split_first().expect("non-empty block");
    let half = masses.len() / 2;
    let p0: f64 = masses[..half].iter().sum();
    let p1: f64 = masses[half..].iter().sum();
    let angle = branch_angle(p0, p1)?;
    gates.push(if controls.is_empty() {
        Gate::ry(lead, angle)
    } else {
        Gate::cy(controls.clone(), lead, angle)
    });
    if rest.is_empty() {
        return Ok(());
    }
    controls.push(Control::one(lead));
    encode_recursive(&masses[half..], rest, controls, gates)?;
    controls.pop();
    controls.push(Control::zero(lead));
    encode_recursive(&masses[..half], rest, controls, gates)?;
    controls.pop();
    Ok(())
}

/// Largest control count among multi-controlled rotations.
fn max_controls(gates: &[Gate]) -> usize {
    gates
        .iter()
        .map(|g| match g {
            Gate::ControlledRy { controls, .. } => controls.len(),
            _ => 0,
        })
        .max()
        .unwrap_or(0)
}

fn finish(mut circuit: Circuit, variable_qubits: usize) -> Circuit {
    let ancillas = max_controls(&circuit.gates).saturating_sub(1);
    circuit.num_qubits = variable_qubits + ancillas;
    circuit.ancillas = (variable_qubits..variable_qubits + ancillas).collect();
    circuit
}

/// Encodes a child's CPT: one conditioned section per parent bit pattern in
/// row-major order. Patterns that name no parent state get zero rotations.
fn encode_child(
    parent_blocks: &[&NodeBlock],
    cpt: &[Vec<f64>],
    child: &NodeBlock,
    gates: &mut Vec<Gate>,
) -> Result<()> {
    let parent_bits: usize = parent_blocks.iter().map(|b| b.qubits.len()).sum();
    for combo in 0..(1usize << parent_bits) {
        let mut controls = Vec::with_capacity(parent_bits);
        let mut row = Some(0usize);
        let mut shift = parent_bits;
        for pb in parent_blocks {
            shift -= pb.qubits.len();
            let pattern = (combo >> shift) & ((1 << pb.qubits.len()) - 1);
            controls.extend(pb.pattern(pattern));
            row = match row {
                Some(r) if pattern < pb.num_states => Some(r * pb.num_states + pattern),
                _ => None,
            };
        }
        let masses = match row {
            Some(r) => cpt[r].clone(),
            None => Distribution::point(child.num_states, 0).into_vec(),
        };
        gates.extend(encode_conditioned(&masses, &child.qubits, &controls)?);
    }
    Ok(())
}

/// Compiles the static network into the state-preparation circuit A.
///
/// Variables occupy qubits in network order; ancillas follow, sized for the
/// widest multi-controlled rotation.
pub fn compile_static_circuit(net: &DiscreteNetwork) -> Result<Circuit> {
    let net = net.clone().validated()?;
    let mut blocks = Vec::with_capacity(net.len());
    let mut next = 0;
    for node in net.nodes() {
        let width = block_width(node.num_states());
        blocks.push(NodeBlock {
            name: node.name.clone(),
            num_states: node.num_states(),
            qubits: (next..next + width).collect(),
        });
        next += width;
    }

    let mut gates = Vec::new();
    for (i, node) in net.nodes().iter().enumerate() {
        if node.is_root() {
            gates.extend(encode_conditioned(&node.cpt[0], &blocks[i].qubits, &[])?);
        } else {
            let parents: Vec<&NodeBlock> = node
                .parents
                .iter()
                .map(|p| &blocks[net.index_of(p).expect("validated parent")])
                .collect();
            encode_child(&parents, &node.cpt, &blocks[i], &mut gates)?;
        }
    }

    let circuit = Circuit {
        num_qubits: next,
        gates,
        layout: QubitLayout { blocks },
        ancillas: Vec::new(),
    };
    Ok(finish(circuit, next))
}

/// Layout name of a variable's slot-t block in a transitional circuit.
pub fn current_slot(variable: &str) -> String {
    format!("{variable}[t]")
}

/// Layout name of a variable's slot-(t+1) block in a transitional circuit.
pub fn next_slot(variable: &str) -> String {
    format!("{variable}[t+1]")
}

/// Two-slice circuit: the posterior at t on the first block, then the
/// transition columns conditioned on it on the second block.
pub fn compile_transitional_circuit(
    posterior: &Distribution,
    model: &TransitionModel,
) -> Result<Circuit> {
    model.check()?;
    let n = model.num_states();
    if posterior.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: posterior.len(),
        });
    }
    let width = qubit_count(n)?;
    let current = NodeBlock {
        name: current_slot(&model.variable),
        num_states: n,
        qubits: (0..width).collect(),
    };
    let next = NodeBlock {
        name: next_slot(&model.variable),
        num_states: n,
        qubits: (width..2 * width).collect(),
    };
    let mut gates = encode_distribution(posterior, &current.qubits)?;
    let columns: Vec<Vec<f64>> = (0..n).map(|i| model.column(i)).collect();
    encode_child(&[&current], &columns, &next, &mut gates)?;
    let circuit = Circuit {
        num_qubits: 2 * width,
        gates,
        layout: QubitLayout {
            blocks: vec![current, next],
        },
        ancillas: Vec::new(),
    };
    Ok(finish(circuit, 2 * width))
}
