//! Structural health-monitoring example: degradation `d`, load `X`, response `Y`.
//!
//! `d` and `X` are roots, `Y` depends on both. Only `d` evolves over time.

use crate::bn::{DiscreteNetwork, Evidence, NodeSpec, Role, TransitionModel};
use crate::engine::{DqbnModel, EvidenceSequence};

/// Observed response per step.
pub const RESPONSE_SEQUENCE: [usize; 5] = [0, 1, 1, 1, 2];
/// Observed load per step.
pub const LOAD_SEQUENCE: [usize; 5] = [1, 0, 2, 1, 2];

pub fn static_network() -> DiscreteNetwork {
    let d = NodeSpec::root("d", vec![0.95, 0.05]).with_states(&["Minor", "Major"]);
    let x = NodeSpec::root("X", vec![0.2, 0.5, 0.3]).with_states(&["Low", "Medium", "High"]);
    // rows: (d, X) in row-major order (0,0) (0,1) (0,2) (1,0) (1,1) (1,2)
    let y = NodeSpec::new(
        "Y",
        3,
        &["d", "X"],
        vec![
            vec![0.8, 0.15, 0.05],
            vec![0.75, 0.18, 0.07],
            vec![0.65, 0.23, 0.12],
            vec![0.15, 0.55, 0.3],
            vec![0.05, 0.6, 0.35],
            vec![0.0, 0.35, 0.65],
        ],
    )
    .with_states(&["Low", "Medium", "High"]);
    DiscreteNetwork::new(vec![d, x, y])
        .with_role("X", Role::ObservationVariable)
        .with_role("Y", Role::ObservationVariable)
}

pub fn degradation_transition() -> TransitionModel {
    TransitionModel::new("d", vec![vec![0.9, 0.0], vec![0.1, 1.0]])
        .expect("degradation transition is column-stochastic")
}

pub fn model() -> DqbnModel {
    DqbnModel::new(
        static_network(),
        vec![degradation_transition()],
        vec!["d".into()],
        vec!["X".into(), "Y".into()],
    )
    .expect("case-study model is valid")
}

pub fn evidence_sequence() -> EvidenceSequence {
    EvidenceSequence::new(
        RESPONSE_SEQUENCE
            .iter()
            .zip(LOAD_SEQUENCE.iter())
            .map(|(&y, &x)| Evidence::new().with("Y", y).with("X", x))
            .collect(),
    )
}
