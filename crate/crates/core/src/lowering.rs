//! Decomposition of multi-controlled gates into {ry, rz, x, cx}.
//!
//! Multi-controlled rotations with m ≥ 2 controls AND their controls into a
//! ladder of m − 1 ancillas with Toffolis, rotate from the last ancilla, then
//! run the ladder backwards so every ancilla returns to |0⟩. Zero-polarity
//! controls are conjugated with X. Results hold up to a global phase.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::circuit::{Circuit, Control, Gate};
use crate::error::{Error, Result};

fn hadamard(q: usize) -> [Gate; 2] {
    // H = X · RY(π/2)
    [Gate::ry(q, FRAC_PI_2), Gate::X { target: q }]
}

fn t(q: usize) -> Gate {
    Gate::Rz {
        target: q,
        angle: FRAC_PI_4,
    }
}

fn tdg(q: usize) -> Gate {
    Gate::Rz {
        target: q,
        angle: -FRAC_PI_4,
    }
}

fn cx(control: usize, target: usize) -> Gate {
    Gate::Cnot { control, target }
}

/// Six-CNOT Toffoli with T realized as RZ(π/4).
pub fn toffoli(a: usize, b: usize, target: usize) -> Vec<Gate> {
    let mut g = Vec::with_capacity(17);
    g.extend(hadamard(target));
    g.extend([
        cx(b, target),
        tdg(target),
        cx(a, target),
        t(target),
        cx(b, target),
        tdg(target),
        cx(a, target),
        t(b),
        t(target),
    ]);
    g.extend(hadamard(target));
    g.extend([cx(a, b), t(a), tdg(b), cx(a, b)]);
    g
}

/// Controlled-RY from the half-angle identity: two CNOTs and two RY(±θ/2).
pub fn controlled_ry(control: usize, target: usize, angle: f64) -> Vec<Gate> {
    vec![
        Gate::ry(target, angle / 2.0),
        cx(control, target),
        Gate::ry(target, -angle / 2.0),
        cx(control, target),
    ]
}

fn flip_zero_controls(controls: &[Control], out: &mut Vec<Gate>) {
    out.extend(
        controls
            .iter()
            .filter(|c| !c.on_one)
            .map(|c| Gate::X { target: c.qubit }),
    );
}

/// Toffoli ladder computing AND(controls) into `ancillas[controls.len() - 2]`.
fn and_ladder(controls: &[usize], ancillas: &[usize]) -> Vec<Gate> {
    let mut g = toffoli(controls[0], controls[1], ancillas[0]);
    for i in 2..controls.len() {
        g.extend(toffoli(ancillas[i - 2], controls[i], ancillas[i - 1]));
    }
    g
}

/// Exact inverse of [`and_ladder`]. The phases picked up by each Toffoli
/// cancel, so a ladder pair leaves no global phase behind.
fn uncompute_ladder(controls: &[usize], ancillas: &[usize]) -> Vec<Gate> {
    and_ladder(controls, ancillas)
        .iter()
        .rev()
        .map(Gate::inverse)
        .collect()
}

fn take_ancillas(pool: &[usize], needed: usize) -> Result<&[usize]> {
    if pool.len() < needed {
        return Err(Error::InsufficientAncillas {
            needed,
            available: pool.len(),
        });
    }
    Ok(&pool[..needed])
}

/// Basis-gate sequence for an RY on `target` conditioned on `controls`.
/// `pool` lists free ancillas in |0⟩; m controls use m − 1 of them.
pub fn lower_multi_controlled(
    controls: &[Control],
    target: usize,
    angle: f64,
    pool: &[usize],
) -> Result<Vec<Gate>> {
    let mut out = Vec::new();
    flip_zero_controls(controls, &mut out);
    let qubits: Vec<usize> = controls.iter().map(|c| c.qubit).collect();
    match qubits.len() {
        0 => out.push(Gate::ry(target, angle)),
        1 => out.extend(controlled_ry(qubits[0], target, angle)),
        m => {
            let anc = take_ancillas(pool, m - 1)?;
            out.extend(and_ladder(&qubits, anc));
            out.extend(controlled_ry(anc[m - 2], target, angle));
            out.extend(uncompute_ladder(&qubits, anc));
        }
    }
    flip_zero_controls(controls, &mut out);
    Ok(out)
}

/// Basis-gate sequence negating the amplitude of every basis state matching
/// `pattern` (a multi-controlled Z with polarities). n pattern qubits use
/// max(0, n − 3) ancillas.
pub fn lower_phase_flip(pattern: &[Control], pool: &[usize]) -> Result<Vec<Gate>> {
    let mut out = Vec::new();
    let Some((last, rest)) = pattern.split_last() else {
        return Ok(out);
    };
    flip_zero_controls(pattern, &mut out);
    let target = last.qubit;
    let controls: Vec<usize> = rest.iter().map(|c| c.qubit).collect();
    match controls.len() {
        // Z = RZ(π) up to phase
        0 => out.push(Gate::Rz { target, angle: PI }),
        1 => {
            out.extend(hadamard(target));
            out.push(cx(controls[0], target));
            out.extend(hadamard(target));
        }
        2 => {
            out.extend(hadamard(target));
            out.extend(toffoli(controls[0], controls[1], target));
            out.extend(hadamard(target));
        }
        k => {
            let anc = take_ancillas(pool, k - 2)?;
            out.extend(hadamard(target));
            let ladder = &controls[..k - 1];
            out.extend(and_ladder(ladder, anc));
            out.extend(toffoli(anc[k - 3], controls[k - 1], target));
            out.extend(uncompute_ladder(ladder, anc));
            out.extend(hadamard(target));
        }
    }
    flip_zero_controls(pattern, &mut out);
    Ok(out)
}

/// Rewrites every non-basis gate using the circuit's ancillas. Ancillas the
/// gate itself touches are never borrowed.
pub fn lower(circuit: &Circuit) -> Result<Circuit> {
    let mut gates = Vec::with_capacity(circuit.gates.len() * 8);
    for g in &circuit.gates {
        let touched = g.qubits();
        let pool: Vec<usize> = circuit
            .ancillas
            .iter()
            .copied()
            .filter(|a| !touched.contains(a))
            .collect();
        match g {
            Gate::ControlledRy {
                controls,
                target,
                angle,
            } => gates.extend(lower_multi_controlled(controls, *target, *angle, &pool)?),
            Gate::PhaseFlip { pattern } => gates.extend(lower_phase_flip(pattern, &pool)?),
            basis => gates.push(basis.clone()),
        }
    }
    Ok(Circuit {
        num_qubits: circuit.num_qubits,
        gates,
        layout: circuit.layout.clone(),
        ancillas: circuit.ancillas.clone(),
    })
}
