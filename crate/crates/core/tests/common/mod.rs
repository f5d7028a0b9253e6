//! Helpers shared by the integration tests: random models and brute-force
//! reference computations that avoid the library's own inference code.
#![allow(dead_code, clippy::needless_range_loop)]

use dqbn_core::circuit::{Circuit, Control, Gate};
use dqbn_core::{DiscreteNetwork, NodeSpec, Role, StateVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Random probability vector; about one in five entries is zeroed when
/// `sparse` is set, so zero branches get exercised.
pub fn random_probs(rng: &mut ChaCha20Rng, n: usize, sparse: bool) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| {
                if sparse && rng.gen_bool(0.2) {
                    0.0
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 1e-3 {
            return w.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Network over nodes `n0..`, each with 2..=max_states states and parents
/// drawn from earlier nodes. Node 0 is the state variable.
pub fn random_network(
    rng: &mut ChaCha20Rng,
    max_nodes: usize,
    max_states: usize,
) -> DiscreteNetwork {
    let count = rng.gen_range(1..=max_nodes);
    let cards: Vec<usize> = (0..count).map(|_| rng.gen_range(2..=max_states)).collect();
    let mut nodes = Vec::new();
    for i in 0..count {
        let parents: Vec<usize> = (0..i).filter(|_| rng.gen_bool(0.5)).collect();
        let rows: usize = parents.iter().map(|&p| cards[p]).product();
        let cpt = (0..rows)
            .map(|_| random_probs(rng, cards[i], true))
            .collect();
        let names: Vec<String> = parents.iter().map(|p| format!("n{p}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        nodes.push(NodeSpec::new(format!("n{i}"), cards[i], &refs, cpt));
    }
    let mut net = DiscreteNetwork::new(nodes);
    for i in 1..count {
        net = net.with_role(&format!("n{i}"), Role::ObservationVariable);
    }
    net
}

/// Every full assignment in odometer order, last node fastest.
pub fn assignments(cards: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &c in cards {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..c).map(move |s| {
                    let mut v = prefix.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out
}

/// Chain-rule product read straight off the CPT tables.
pub fn oracle_joint(net: &DiscreteNetwork, states: &[usize]) -> f64 {
    let nodes = net.nodes();
    nodes
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let mut row = 0;
            for p in &node.parents {
                let j = nodes.iter().position(|n| &n.name == p).unwrap();
                row = row * nodes[j].num_states() + states[j];
            }
            node.cpt[row][states[i]]
        })
        .product()
}

/// P(target | evidence) by summing oracle_joint over every assignment.
pub fn oracle_posterior(
    net: &DiscreteNetwork,
    target: usize,
    evidence: &[(usize, usize)],
) -> Vec<f64> {
    let cards: Vec<usize> = net.nodes().iter().map(|n| n.num_states()).collect();
    let mut w = vec![0.0; cards[target]];
    for a in assignments(&cards) {
        if evidence.iter().all(|&(n, s)| a[n] == s) {
            w[a[target]] += oracle_joint(net, &a);
        }
    }
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

pub fn card(net: &DiscreteNetwork) -> Vec<usize> {
    net.nodes().iter().map(|n| n.num_states()).collect()
}

/// Basis index of an assignment under a compiled layout: each block holds
/// its state in binary, first qubit most significant.
pub fn index_of(circuit: &Circuit, names: &[String], states: &[usize]) -> usize {
    let mut index = 0;
    for (name, &s) in names.iter().zip(states) {
        let block = circuit.layout.block(name).unwrap();
        let b = block.qubits.len();
        for (k, &q) in block.qubits.iter().enumerate() {
            if (s >> (b - 1 - k)) & 1 == 1 {
                index |= 1 << q;
            }
        }
    }
    index
}

pub fn random_state(rng: &mut ChaCha20Rng, n: usize) -> StateVector {
    let amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn distinct(rng: &mut ChaCha20Rng, n: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for _ in 0..k {
        out.push(pool.swap_remove(rng.gen_range(0..pool.len())));
    }
    out
}

/// Random gate over `n ≥ 2` qubits drawn from every gate kind except
/// phase flips.
pub fn random_gate(rng: &mut ChaCha20Rng, n: usize) -> Gate {
    let angle = rng.gen_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI);
    match rng.gen_range(0..5) {
        0 => Gate::ry(rng.gen_range(0..n), angle),
        1 => Gate::Rz {
            target: rng.gen_range(0..n),
            angle,
        },
        2 => Gate::X {
            target: rng.gen_range(0..n),
        },
        3 => {
            let q = distinct(rng, n, 2);
            Gate::Cnot {
                control: q[0],
                target: q[1],
            }
        }
        _ => {
            let k = rng.gen_range(1..n.min(4));
            let q = distinct(rng, n, k + 1);
            let controls = q[1..]
                .iter()
                .map(|&c| Control {
                    qubit: c,
                    on_one: rng.gen_bool(0.5),
                })
                .collect();
            Gate::cy(controls, q[0], angle)
        }
    }
}

pub fn random_circuit(rng: &mut ChaCha20Rng, n: usize, gates: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..gates {
        c.push(random_gate(rng, n));
    }
    c
}

pub fn max_amp_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub type Matrix = Vec<Vec<Complex64>>;

/// Dense 2ⁿ × 2ⁿ matrix of a gate built from its textbook definition,
/// index bit q belonging to qubit q.
pub fn gate_matrix(gate: &Gate, n: usize) -> Matrix {
    let dim = 1usize << n;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut m = vec![vec![zero; dim]; dim];
    let controls_hold = |i: usize, controls: &[Control]| {
        controls
            .iter()
            .all(|c| ((i >> c.qubit) & 1 == 1) == c.on_one)
    };
    let single = |m: &mut Matrix, target: usize, u: [[Complex64; 2]; 2], controls: &[Control]| {
        for col in 0..dim {
            if !controls_hold(col, controls) {
                m[col][col] = one;
                continue;
            }
            let b = (col >> target) & 1;
            for (r, u_row) in u.iter().enumerate() {
                let row = (col & !(1 << target)) | (r << target);
                m[row][col] += u_row[b];
            }
        }
    };
    let ry = |t: f64| {
        let (s, c) = (t / 2.0).sin_cos();
        [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ]
    };
    let xm = [[zero, one], [one, zero]];
    match gate {
        Gate::Ry { target, angle } => single(&mut m, *target, ry(*angle), &[]),
        Gate::Rz { target, angle } => single(
            &mut m,
            *target,
            [
                [Complex64::from_polar(1.0, -angle / 2.0), zero],
                [zero, Complex64::from_polar(1.0, angle / 2.0)],
            ],
            &[],
        ),
        Gate::X { target } => single(&mut m, *target, xm, &[]),
        Gate::Cnot { control, target } => single(&mut m, *target, xm, &[Control::one(*control)]),
        Gate::ControlledRy {
            controls,
            target,
            angle,
        } => single(&mut m, *target, ry(*angle), controls),
        Gate::PhaseFlip { pattern } => {
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = if controls_hold(i, pattern) { -one } else { one };
            }
        }
    }
    m
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Full unitary of a circuit as the ordered product of gate matrices.
pub fn circuit_matrix(circuit: &Circuit) -> Matrix {
    let dim = 1usize << circuit.num_qubits;
    let mut u: Matrix = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect();
    for g in &circuit.gates {
        u = matmul(&gate_matrix(g, circuit.num_qubits), &u);
    }
    u
}

pub fn apply_matrix(m: &Matrix, state: &StateVector) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(state.amplitudes()).map(|(x, a)| x * a).sum())
        .collect()
}

/// Compiled random network with evidence on a random subset of nodes.
pub fn random_plan(rng: &mut ChaCha20Rng) -> (Circuit, dqbn_core::GoodStateSpec) {
    let net = random_network(rng, 4, 3).validated().unwrap();
    let circuit = dqbn_core::compile_static_circuit(&net).unwrap();
    let mut ev = dqbn_core::Evidence::new();
    for node in net.nodes() {
        if rng.gen_bool(0.5) {
            ev = ev.with(node.name.clone(), rng.gen_range(0..node.num_states()));
        }
    }
    let spec = dqbn_core::GoodStateSpec::for_evidence(&circuit, &ev).unwrap();
    (circuit, spec)
}
