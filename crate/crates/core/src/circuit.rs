//! Gate-level circuit representation shared by the compiler and simulator.
//!
//! Qubit 0 is the least-significant bit of a basis-state index. Inside a
//! variable's block the first listed qubit carries the most-significant bit
//! of the state pattern, so a three-state variable on block `[q1, q2]` maps
//! state 1 to `q1 = 0, q2 = 1` (written |01⟩).

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// A control qubit together with the value it must hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Control {
    pub qubit: usize,
    pub on_one: bool,
}

impl Control {
    pub fn one(qubit: usize) -> Self {
        Control {
            qubit,
            on_one: true,
        }
    }

    pub fn zero(qubit: usize) -> Self {
        Control {
            qubit,
            on_one: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    Ry {
        target: usize,
        angle: f64,
    },
    Rz {
        target: usize,
        angle: f64,
    },
    X {
        target: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// RY on `target` applied when every control holds its required value.
    ControlledRy {
        controls: Vec<Control>,
        target: usize,
        angle: f64,
    },
    /// Negates every basis amplitude matching `pattern`. An empty pattern is
    /// a global phase of −1.
    PhaseFlip {
        pattern: Vec<Control>,
    },
}

impl Gate {
    pub fn ry(target: usize, angle: f64) -> Self {
        Gate::Ry { target, angle }
    }

    pub fn cy(controls: Vec<Control>, target: usize, angle: f64) -> Self {
        Gate::ControlledRy {
            controls,
            target,
            angle,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Ry { .. } => "ry",
            Gate::Rz { .. } => "rz",
            Gate::X { .. } => "x",
            Gate::Cnot { .. } => "cx",
            Gate::ControlledRy { .. } => "mcry",
            Gate::PhaseFlip { .. } => "phase_flip",
        }
    }

    /// Every qubit the gate acts on, controls first.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Ry { target, .. } | Gate::Rz { target, .. } | Gate::X { target } => {
                vec![*target]
            }
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::ControlledRy {
                controls, target, ..
            } => controls
                .iter()
                .map(|c| c.qubit)
                .chain(std::iter::once(*target))
                .collect(),
            Gate::PhaseFlip { pattern } => pattern.iter().map(|c| c.qubit).collect(),
        }
    }

    pub fn is_basis(&self) -> bool {
        matches!(
            self,
            Gate::Ry { .. } | Gate::Rz { .. } | Gate::X { .. } | Gate::Cnot { .. }
        )
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Ry { target, angle } => Gate::Ry {
                target: *target,
                angle: -angle,
            },
            Gate::Rz { target, angle } => Gate::Rz {
                target: *target,
                angle: -angle,
            },
            Gate::ControlledRy {
                controls,
                target,
                angle,
            } => Gate::ControlledRy {
                controls: controls.clone(),
                target: *target,
                angle: -angle,
            },
            Gate::X { .. } | Gate::Cnot { .. } | Gate::PhaseFlip { .. } => self.clone(),
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match self {
            Gate::Ry { angle, .. } | Gate::Rz { angle, .. } | Gate::ControlledRy { angle, .. } => {
                Some(*angle)
            }
            _ => None,
        }
    }

    pub fn check(&self, num_qubits: usize) -> Result<()> {
        let qubits = self.qubits();
        for &q in &qubits {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    num_qubits,
                });
            }
        }
        let distinct: BTreeSet<usize> = qubits.iter().copied().collect();
        if distinct.len() != qubits.len() {
            return Err(Error::InvalidGate(format!(
                "{self}: control and target qubits must be distinct"
            )));
        }
        if let Some(a) = self.angle() {
            if !a.is_finite() {
                return Err(Error::NonFiniteAngle);
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Ry { target, angle } => write!(f, "ry({angle}) q{target}"),
            Gate::Rz { target, angle } => write!(f, "rz({angle}) q{target}"),
            Gate::X { target } => write!(f, "x q{target}"),
            Gate::Cnot { control, target } => write!(f, "cx q{control},q{target}"),
            Gate::ControlledRy {
                controls,
                target,
                angle,
            } => {
                write!(f, "mcry({angle}) [")?;
                write_controls(f, controls)?;
                write!(f, "] q{target}")
            }
            Gate::PhaseFlip { pattern } => {
                write!(f, "phase_flip [")?;
                write_controls(f, pattern)?;
                write!(f, "]")
            }
        }
    }
}

fn write_controls(f: &mut fmt::Formatter<'_>, controls: &[Control]) -> fmt::Result {
    for (i, c) in controls.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "q{}={}", c.qubit, u8::from(c.on_one))?;
    }
    Ok(())
}

/// Qubits assigned to one network variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeBlock {
    pub name: String,
    pub num_states: usize,
    /// Most-significant pattern bit first.
    pub qubits: Vec<usize>,
}

impl NodeBlock {
    /// Controls requiring the block to hold `state`'s bit pattern.
    pub fn pattern(&self, state: usize) -> Vec<Control> {
        let b = self.qubits.len();
        self.qubits
            .iter()
            .enumerate()
            .map(|(i, &q)| Control {
                qubit: q,
                on_one: (state >> (b - 1 - i)) & 1 == 1,
            })
            .collect()
    }

    /// Pattern value held by the block in basis state `index`. May exceed
    /// `num_states` for unused patterns.
    pub fn read(&self, index: u64) -> usize {
        self.qubits
            .iter()
            .fold(0, |acc, &q| (acc << 1) | ((index >> q) & 1) as usize)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct QubitLayout {
    pub blocks: Vec<NodeBlock>,
}

impl QubitLayout {
    pub fn block(&self, name: &str) -> Option<&NodeBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn variable_qubits(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .flat_map(|b| b.qubits.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    pub layout: QubitLayout,
    pub ancillas: Vec<usize>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
            layout: QubitLayout::default(),
            ancillas: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) {
        self.gates.extend(gates);
    }

    pub fn is_basis(&self) -> bool {
        self.gates.iter().all(Gate::is_basis)
    }

    /// Reversed gate order with every gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            layout: self.layout.clone(),
            ancillas: self.ancillas.clone(),
        }
    }

    /// Validates gate indices, angles, and that layout blocks and ancillas are
    /// pairwise disjoint.
    pub fn check(&self) -> Result<()> {
        for g in &self.gates {
            g.check(self.num_qubits)?;
        }
        let mut used = BTreeSet::new();
        for q in self
            .layout
            .variable_qubits()
            .into_iter()
            .chain(self.ancillas.iter().copied())
        {
            if q >= self.num_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
            if !used.insert(q) {
                return Err(Error::InvalidGate(format!(
                    "qubit {q} is assigned twice in the layout"
                )));
            }
        }
        Ok(())
    }

    pub fn metrics(&self) -> CircuitMetrics {
        circuit_metrics(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CircuitMetrics {
    pub num_qubits: usize,
    pub depth: usize,
    pub total_gates: usize,
    pub cnot_count: usize,
}

/// Depth is the longest chain of gates that share a qubit.
pub fn circuit_metrics(circuit: &Circuit) -> CircuitMetrics {
    let mut level = vec![0usize; circuit.num_qubits];
    let mut depth = 0;
    for g in &circuit.gates {
        let qubits = g.qubits();
        let Some(start) = qubits.iter().map(|&q| level[q]).max() else {
            continue;
        };
        let l = start + 1;
        for q in qubits {
            level[q] = l;
        }
        depth = depth.max(l);
    }
    CircuitMetrics {
        num_qubits: circuit.num_qubits,
        depth,
        total_gates: circuit.gates.len(),
        cnot_count: circuit
            .gates
            .iter()
            .filter(|g| matches!(g, Gate::Cnot { .. }))
            .count(),
    }
}
