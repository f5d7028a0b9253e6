//! OpenQASM 2.0 export of basis-gate circuits.

use std::fmt::Write;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

/// Angles use Rust's shortest round-trip float formatting, so parsing the
/// text back yields bit-identical angles.
pub fn emit_qasm(circuit: &Circuit) -> Result<String> {
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    writeln!(out, "qreg q[{}];", circuit.num_qubits).unwrap();
    for gate in &circuit.gates {
        match gate {
            Gate::Ry { target, angle } => writeln!(out, "ry({}) q[{target}];", real(*angle)),
            Gate::Rz { target, angle } => writeln!(out, "rz({}) q[{target}];", real(*angle)),
            Gate::X { target } => writeln!(out, "x q[{target}];"),
            Gate::Cnot { control, target } => writeln!(out, "cx q[{control}],q[{target}];"),
            other => return Err(Error::NonBasisGate(other.to_string())),
        }
        .unwrap();
    }
    Ok(out)
}

/// OpenQASM 2.0 real literals need a decimal point, also before an exponent.
fn real(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains('.') {
        s
    } else if let Some(e) = s.find('e') {
        format!("{}.0{}", &s[..e], &s[e..])
    } else {
        format!("{s}.0")
    }
}
