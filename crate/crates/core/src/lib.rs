//! Discrete dynamic Bayesian networks compiled to quantum circuits.
//!
//! A static network is encoded as a rotation circuit `A` whose measurement
//! distribution equals the joint distribution of the network. Posterior
//! queries amplify the evidence-consistent states with Grover rounds and
//! read the target's marginal off the amplified state. Between time steps the
//! tracked posteriors are pushed through transition circuits. Exact
//! enumeration ([`bn::exact_posterior`]) is available throughout as the
//! reference.
//!
//! ```
//! use dqbn_core::{case_study, run_timeline, Backend, EngineConfig};
//!
//! let cfg = EngineConfig::default().with_backends(&[Backend::QuantumExact]);
//! let result = run_timeline(&case_study::model(), &case_study::evidence_sequence(), &cfg).unwrap();
//! assert!(result.rms(Backend::QuantumExact).unwrap() < 1e-6);
//! ```

pub mod bn;
pub mod case_study;
pub mod circuit;
pub mod compiler;
pub mod engine;
pub mod error;
pub mod grover;
pub mod lowering;
pub mod qasm;
pub mod qsim;

pub use bn::{
    evidence_probability, exact_posterior, joint_probability, propagate_transition,
    validate_network, DiscreteNetwork, Distribution, Evidence, NodeSpec, Role, Rule,
    TransitionModel, Violation,
};
pub use circuit::{
    circuit_metrics, Circuit, CircuitMetrics, Control, Gate, NodeBlock, QubitLayout,
};
pub use compiler::{compile_static_circuit, compile_transitional_circuit, rotation_angle};
pub use engine::{
    rms_error, run_step, run_timeline, Backend, DqbnModel, EngineConfig, EvidenceSequence, KPolicy,
    Priors, StepRecord, TimelineResult, TimelineStep,
};
pub use error::{Error, Result};
pub use grover::{GoodStateSpec, GroverPlan};
pub use qasm::emit_qasm;
pub use qsim::{NoiseConfig, ShotCounts, StateVector};
