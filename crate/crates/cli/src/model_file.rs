//! JSON model files.
//!
//! ```json
//! {
//!   "nodes": [
//!     {"name": "d", "states": ["Minor", "Major"], "parents": [], "cpt": [[0.95, 0.05]]},
//!     {"name": "Y", "states": ["Low", "High"], "parents": ["d"],
//!      "cpt": [[0.9, 0.1], [0.2, 0.8]]}
//!   ],
//!   "transitions": [{"variable": "d", "matrix": [[0.9, 0.0], [0.1, 1.0]]}],
//!   "tracked": ["d"],
//!   "observations": ["Y"],
//!   "evidence_sequence": [{"Y": "Low"}, {"Y": "High"}]
//! }
//! ```
//!
//! `cpt` holds one probability vector per parent-state combination, in
//! row-major order over `parents` (last parent fastest). A root has a single
//! vector. `matrix[next][current]` is P(next | current), so columns sum to 1.
//! Unknown keys are rejected.

use std::collections::BTreeMap;

use dqbn_core::bn::PROB_TOLERANCE;
use dqbn_core::{
    validate_network, DiscreteNetwork, DqbnModel, Evidence, EvidenceSequence, NodeSpec, Role,
    TransitionModel,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub nodes: Vec<NodeEntry>,
    pub transitions: Vec<TransitionEntry>,
    pub tracked: Vec<String>,
    pub observations: Vec<String>,
    #[serde(default)]
    pub evidence_sequence: Vec<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub name: String,
    pub states: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    pub cpt: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub variable: String,
    pub matrix: Vec<Vec<f64>>,
}

/// A validated model with its evidence sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedModel {
    pub model: DqbnModel,
    pub evidence: EvidenceSequence,
}

impl ParsedModel {
    pub fn labels(&self, variable: &str) -> Vec<String> {
        self.model
            .static_net
            .node(variable)
            .map(|n| n.states.clone())
            .unwrap_or_default()
    }
}

fn check_vector(path: &str, v: &[f64], problems: &mut Vec<String>) {
    if let Some(p) = v.iter().find(|p| !p.is_finite() || **p < 0.0) {
        problems.push(format!("{path}: entry {p} is not a probability"));
        return;
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        problems.push(format!("{path}: probabilities sum to {sum}, expected 1"));
    }
}

impl ModelFile {
    /// Every problem found, each prefixed with the JSON path it concerns.
    pub fn problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let index: BTreeMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.as_str(), i))
            .collect();
        for (i, node) in self.nodes.iter().enumerate() {
            let expected_rows: Option<usize> = node
                .parents
                .iter()
                .map(|p| index.get(p.as_str()).map(|&j| self.nodes[j].states.len()))
                .product();
            if let Some(rows) = expected_rows {
                if node.cpt.len() != rows {
                    problems.push(format!(
                        "nodes[{i}].cpt: expected {rows} probability vectors (one per parent combination), found {}",
                        node.cpt.len()
                    ));
                }
            }
            for (r, row) in node.cpt.iter().enumerate() {
                let path = format!("nodes[{i}].cpt[{r}]");
                if row.len() != node.states.len() {
                    problems.push(format!(
                        "{path}: expected {} entries, found {}",
                        node.states.len(),
                        row.len()
                    ));
                } else {
                    check_vector(&path, row, &mut problems);
                }
            }
            for (s, label) in node.states.iter().enumerate() {
                if node.states[..s].contains(label) {
                    problems.push(format!("nodes[{i}].states[{s}]: duplicate label `{label}`"));
                }
            }
        }
        for (t, tr) in self.transitions.iter().enumerate() {
            let n = tr.matrix.len();
            if let Some(&j) = index.get(tr.variable.as_str()) {
                if self.nodes[j].states.len() != n {
                    problems.push(format!(
                        "transitions[{t}].matrix: `{}` has {} states, matrix has {n} rows",
                        tr.variable,
                        self.nodes[j].states.len()
                    ));
                }
            } else {
                problems.push(format!(
                    "transitions[{t}].variable: unknown node `{}`",
                    tr.variable
                ));
            }
            if let Some(r) = tr.matrix.iter().position(|row| row.len() != n) {
                problems.push(format!(
                    "transitions[{t}].matrix[{r}]: matrix must be square"
                ));
                continue;
            }
            for c in 0..n {
                let column: Vec<f64> = tr.matrix.iter().map(|row| row[c]).collect();
                check_vector(
                    &format!("transitions[{t}].matrix[*][{c}]"),
                    &column,
                    &mut problems,
                );
            }
        }
        for (key, names) in [
            ("tracked", &self.tracked),
            ("observations", &self.observations),
        ] {
            for (k, name) in names.iter().enumerate() {
                if !index.contains_key(name.as_str()) {
                    problems.push(format!("{key}[{k}]: unknown node `{name}`"));
                }
            }
        }
        for (t, step) in self.evidence_sequence.iter().enumerate() {
            for (var, label) in step {
                let path = format!("evidence_sequence[{t}].{var}");
                match index.get(var.as_str()) {
                    None => problems.push(format!("{path}: unknown node `{var}`")),
                    Some(&j) if !self.nodes[j].states.contains(label) => problems.push(format!(
                        "{path}: unknown state label `{label}` (states: {})",
                        self.nodes[j].states.join(", ")
                    )),
                    _ => {}
                }
            }
        }
        if problems.is_empty() {
            let net = self.network();
            for v in validate_network(&net) {
                let path = index
                    .get(v.node.as_str())
                    .map(|i| format!("nodes[{i}]"))
                    .unwrap_or_else(|| "nodes".into());
                problems.push(format!("{path}: {v}"));
            }
        }
        if problems.is_empty() {
            if let Err(e) = self.model() {
                problems.push(format!("model: {e}"));
            }
        }
        problems
    }

    fn network(&self) -> DiscreteNetwork {
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeSpec {
                name: n.name.clone(),
                states: n.states.clone(),
                parents: n.parents.clone(),
                cpt: n.cpt.clone(),
            })
            .collect();
        self.observations
            .iter()
            .fold(DiscreteNetwork::new(nodes), |net, o| {
                net.with_role(o, Role::ObservationVariable)
            })
    }

    fn model(&self) -> dqbn_core::Result<DqbnModel> {
        let transitions = self
            .transitions
            .iter()
            .map(|t| TransitionModel::new(t.variable.clone(), t.matrix.clone()))
            .collect::<dqbn_core::Result<Vec<_>>>()?;
        DqbnModel::new(
            self.network().validated()?,
            transitions,
            self.tracked.clone(),
            self.observations.clone(),
        )
    }

    /// Validates and resolves state labels to indices.
    pub fn resolve(&self) -> CliResult<ParsedModel> {
        let problems = self.problems();
        if !problems.is_empty() {
            return Err(CliError::new("schema", problems.join("; ")));
        }
        let model = self.model()?;
        let steps = self
            .evidence_sequence
            .iter()
            .map(|step| {
                step.iter()
                    .map(|(var, label)| {
                        let node = model.static_net.node(var).expect("checked evidence node");
                        (
                            var.clone(),
                            node.state_index(label).expect("checked evidence label"),
                        )
                    })
                    .collect::<Evidence>()
            })
            .collect();
        Ok(ParsedModel {
            model,
            evidence: EvidenceSequence::new(steps),
        })
    }

    /// Canonical file for a model: nodes in network order, evidence by label.
    pub fn from_parsed(parsed: &ParsedModel) -> Self {
        let net = &parsed.model.static_net;
        ModelFile {
            nodes: net
                .nodes()
                .iter()
                .map(|n| NodeEntry {
                    name: n.name.clone(),
                    states: n.states.clone(),
                    parents: n.parents.clone(),
                    cpt: n.cpt.clone(),
                })
                .collect(),
            transitions: parsed
                .model
                .transitions
                .iter()
                .map(|t| TransitionEntry {
                    variable: t.variable.clone(),
                    matrix: t.matrix.clone(),
                })
                .collect(),
            tracked: parsed.model.tracked.clone(),
            observations: parsed.model.observations.clone(),
            evidence_sequence: parsed
                .evidence
                .steps
                .iter()
                .map(|ev| {
                    ev.assignments
                        .iter()
                        .map(|(var, &s)| {
                            (
                                var.clone(),
                                net.node(var).expect("evidence node").states[s].clone(),
                            )
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }
}

/// Reads the raw file structure, reporting the JSON path of any type error.
pub fn parse_model_file(text: &str) -> CliResult<ModelFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let category = if inner.is_syntax() || inner.is_eof() {
            "syntax"
        } else {
            "schema"
        };
        CliError::new(category, format!("{path}: {inner}"))
    })
}

/// Parses and fully validates a model file.
pub fn parse_model(text: &str) -> CliResult<ParsedModel> {
    parse_model_file(text)?.resolve()
}

pub fn serialize_model(parsed: &ParsedModel) -> String {
    ModelFile::from_parsed(parsed).to_json()
}
