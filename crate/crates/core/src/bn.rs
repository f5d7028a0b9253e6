//! Discrete Bayesian networks and exact inference by enumeration.
//!
//! Every quantum result in this crate is checked against the routines here,
//! so they favour obviously-correct enumeration over clever elimination.
//!
//! CPT layout: `cpt[row][state]`, one row per parent-state combination with
//! rows ordered row-major over the parent list (the first parent varies
//! slowest, the last parent fastest).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on probability sums.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// A categorical probability vector indexed by state.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Builds a distribution, rejecting negative entries and sums off by more
    /// than [`PROB_TOLERANCE`].
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        check_probability_vector(&probabilities).map_err(Error::InvalidDistribution)?;
        Ok(Distribution(probabilities))
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Distribution(
            weights.into_iter().map(|w| w / total).collect(),
        ))
    }

    /// All mass on `state`.
    pub fn point(num_states: usize, state: usize) -> Self {
        assert!(state < num_states, "state {state} >= {num_states}");
        let mut p = vec![0.0; num_states];
        p[state] = 1.0;
        Distribution(p)
    }

    pub fn uniform(num_states: usize) -> Self {
        assert!(num_states > 0);
        Distribution(vec![1.0 / num_states as f64; num_states])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, state: usize) -> f64 {
        self.0[state]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        assert_eq!(self.len(), other.len(), "distribution lengths differ");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_probability_vector(p: &[f64]) -> std::result::Result<(), String> {
    if p.is_empty() {
        return Err("empty probability vector".into());
    }
    for (i, &x) in p.iter().enumerate() {
        if !x.is_finite() {
            return Err(format!("entry {i} is not finite"));
        }
        if x < 0.0 {
            return Err(format!("entry {i} is negative ({x})"));
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(format!("probabilities sum to {sum}, not 1"));
    }
    Ok(())
}

/// Whether a node is a hidden state variable or an observed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    StateVariable,
    ObservationVariable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeSpec {
    pub name: String,
    /// State labels; the node has `states.len()` states.
    pub states: Vec<String>,
    pub parents: Vec<String>,
    pub cpt: Vec<Vec<f64>>,
}

impl NodeSpec {
    /// A node whose states are labelled `"0"`, `"1"`, ...
    pub fn new(
        name: impl Into<String>,
        num_states: usize,
        parents: &[&str],
        cpt: Vec<Vec<f64>>,
    ) -> Self {
        NodeSpec {
            name: name.into(),
            states: (0..num_states).map(|s| s.to_string()).collect(),
            parents: parents.iter().map(|p| p.to_string()).collect(),
            cpt,
        }
    }

    /// A parentless node with the given marginal.
    pub fn root(name: impl Into<String>, marginal: Vec<f64>) -> Self {
        let n = marginal.len();
        NodeSpec::new(name, n, &[], vec![marginal])
    }

    pub fn with_states(mut self, labels: &[&str]) -> Self {
        self.states = labels.iter().map(|l| l.to_string()).collect();
        self
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn is_root(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// The static network of one time slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteNetwork {
    nodes: Vec<NodeSpec>,
    roles: Vec<Role>,
}

impl DiscreteNetwork {
    /// Every node starts as a state variable; see [`DiscreteNetwork::with_role`].
    pub fn new(nodes: Vec<NodeSpec>) -> Self {
        let roles = vec![Role::StateVariable; nodes.len()];
        DiscreteNetwork { nodes, roles }
    }

    pub fn with_role(mut self, name: &str, role: Role) -> Self {
        if let Some(i) = self.index_of(name) {
            self.roles[i] = role;
        }
        self
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn role(&self, name: &str) -> Option<Role> {
        self.index_of(name).map(|i| self.roles[i])
    }

    /// Replaces the CPT of a root node with a new marginal.
    pub fn set_marginal(&mut self, name: &str, marginal: &Distribution) -> Result<()> {
        let i = self
            .index_of(name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))?;
        let node = &mut self.nodes[i];
        if !node.is_root() {
            return Err(Error::InvalidModel(format!(
                "`{name}` has parents; only root marginals can be replaced"
            )));
        }
        if marginal.len() != node.num_states() {
            return Err(Error::DimensionMismatch {
                expected: node.num_states(),
                found: marginal.len(),
            });
        }
        node.cpt = vec![marginal.probabilities().to_vec()];
        Ok(())
    }

    /// `Ok(self)` when [`validate_network`] reports nothing.
    pub fn validated(self) -> Result<Self> {
        let report = validate_network(&self);
        if report.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidNetwork(report))
        }
    }

    fn ensure_valid(&self) -> Result<()> {
        let report = validate_network(self);
        if report.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidNetwork(report))
        }
    }

    /// Parent node indices for every node. Only meaningful on a valid network.
    fn parent_indices(&self) -> Vec<Vec<usize>> {
        self.nodes
            .iter()
            .map(|n| {
                n.parents
                    .iter()
                    .map(|p| self.index_of(p).expect("validated parent"))
                    .collect()
            })
            .collect()
    }

    /// CPT row selected by the parents' states in a full state vector.
    fn cpt_row(&self, parents: &[usize], states: &[usize]) -> usize {
        parents
            .iter()
            .fold(0, |row, &p| row * self.nodes[p].num_states() + states[p])
    }

    fn joint_indexed(&self, parent_idx: &[Vec<usize>], states: &[usize]) -> f64 {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| n.cpt[self.cpt_row(&parent_idx[i], states)][states[i]])
            .product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    EmptyName,
    DuplicateName,
    NoStates,
    UnknownParent,
    DuplicateParent,
    Cycle,
    NotTopological,
    ColumnCount,
    ColumnLength,
    NegativeEntry,
    ColumnSum,
    NoStateVariable,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::EmptyName => "empty name",
            Rule::DuplicateName => "duplicate name",
            Rule::NoStates => "no states",
            Rule::UnknownParent => "unknown parent",
            Rule::DuplicateParent => "duplicate parent",
            Rule::Cycle => "cycle",
            Rule::NotTopological => "not in topological order",
            Rule::ColumnCount => "wrong number of cpt columns",
            Rule::ColumnLength => "wrong cpt column length",
            Rule::NegativeEntry => "negative entry",
            Rule::ColumnSum => "column sum ≠ 1",
            Rule::NoStateVariable => "no state variable",
        };
        f.write_str(s)
    }
}

/// One broken invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub node: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node `{}`: {} ({})", self.node, self.rule, self.detail)
    }
}

/// Checks every structural and numeric invariant of `net`.
pub fn validate_network(net: &DiscreteNetwork) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |node: &str, rule: Rule, detail: String| {
        out.push(Violation {
            node: node.to_string(),
            rule,
            detail,
        })
    };

    let mut seen = BTreeSet::new();
    for n in &net.nodes {
        if n.name.is_empty() {
            push("", Rule::EmptyName, "node names must be non-empty".into());
        }
        if !seen.insert(n.name.as_str()) {
            push(&n.name, Rule::DuplicateName, "name declared twice".into());
        }
        if n.num_states() == 0 {
            push(
                &n.name,
                Rule::NoStates,
                "a node needs at least one state".into(),
            );
        }
    }

    let position: BTreeMap<&str, usize> = net
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.name.as_str(), i))
        .collect();

    let mut structurally_sound = true;
    for n in &net.nodes {
        let mut parent_seen = BTreeSet::new();
        for p in &n.parents {
            if !position.contains_key(p.as_str()) {
                push(
                    &n.name,
                    Rule::UnknownParent,
                    format!("parent `{p}` is not a node"),
                );
                structurally_sound = false;
            }
            if !parent_seen.insert(p.as_str()) {
                push(
                    &n.name,
                    Rule::DuplicateParent,
                    format!("parent `{p}` listed twice"),
                );
            }
        }
    }

    // Kahn's algorithm over known parents; anything left over sits on a cycle.
    let cyclic = cyclic_nodes(net, &position);
    for &i in &cyclic {
        push(
            &net.nodes[i].name,
            Rule::Cycle,
            "node is its own ancestor".into(),
        );
    }
    if !cyclic.is_empty() {
        structurally_sound = false;
    }

    if cyclic.is_empty() {
        for (i, n) in net.nodes.iter().enumerate() {
            for p in &n.parents {
                if let Some(&j) = position.get(p.as_str()) {
                    if j > i {
                        push(
                            &n.name,
                            Rule::NotTopological,
                            format!("parent `{p}` is listed after its child"),
                        );
                    }
                }
            }
        }
    }

    if structurally_sound {
        for n in &net.nodes {
            let expected: usize = n
                .parents
                .iter()
                .map(|p| net.nodes[position[p.as_str()]].num_states())
                .product();
            if n.cpt.len() != expected {
                push(
                    &n.name,
                    Rule::ColumnCount,
                    format!("expected {expected} columns, found {}", n.cpt.len()),
                );
                continue;
            }
            for (c, col) in n.cpt.iter().enumerate() {
                if col.len() != n.num_states() {
                    push(
                        &n.name,
                        Rule::ColumnLength,
                        format!(
                            "column {c} has {} entries, expected {}",
                            col.len(),
                            n.num_states()
                        ),
                    );
                    continue;
                }
                if let Some(x) = col.iter().find(|x| !x.is_finite() || **x < 0.0) {
                    push(
                        &n.name,
                        Rule::NegativeEntry,
                        format!("column {c} contains {x}"),
                    );
                    continue;
                }
                let sum: f64 = col.iter().sum();
                if (sum - 1.0).abs() > PROB_TOLERANCE {
                    push(
                        &n.name,
                        Rule::ColumnSum,
                        format!("column {c} sums to {sum}"),
                    );
                }
            }
        }
    }

    if !net.nodes.is_empty() && !net.roles.contains(&Role::StateVariable) {
        push(
            "",
            Rule::NoStateVariable,
            "at least one state variable is required".into(),
        );
    }
    if net.nodes.is_empty() {
        push("", Rule::NoStateVariable, "network has no nodes".into());
    }
    out
}

fn cyclic_nodes(net: &DiscreteNetwork, position: &BTreeMap<&str, usize>) -> Vec<usize> {
    let n = net.nodes.len();
    let mut indegree = vec![0usize; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, node) in net.nodes.iter().enumerate() {
        for p in &node.parents {
            if let Some(&j) = position.get(p.as_str()) {
                indegree[i] += 1;
                children[j].push(i);
            }
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut removed = vec![false; n];
    while let Some(i) = stack.pop() {
        removed[i] = true;
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                stack.push(c);
            }
        }
    }
    (0..n).filter(|&i| !removed[i]).collect()
}

/// Observed node states.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Evidence {
    pub assignments: BTreeMap<String, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Evidence::default()
    }

    pub fn with(mut self, node: impl Into<String>, state: usize) -> Self {
        self.assignments.insert(node.into(), state);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn get(&self, node: &str) -> Option<usize> {
        self.assignments.get(node).copied()
    }

    pub fn contains(&self, node: &str) -> bool {
        self.assignments.contains_key(node)
    }

    /// Rejects unknown nodes and out-of-range states.
    pub fn check_against(&self, net: &DiscreteNetwork) -> Result<()> {
        for (name, &state) in &self.assignments {
            let node = net
                .node(name)
                .ok_or_else(|| Error::UnknownNode(name.clone()))?;
            if state >= node.num_states() {
                return Err(Error::StateOutOfRange {
                    node: name.clone(),
                    state,
                    num_states: node.num_states(),
                });
            }
        }
        Ok(())
    }
}

impl<S: Into<String>> FromIterator<(S, usize)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (S, usize)>>(iter: I) -> Self {
        Evidence {
            assignments: iter.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

/// Chain-rule product of CPT entries for a full assignment.
pub fn joint_probability(
    net: &DiscreteNetwork,
    assignment: &BTreeMap<String, usize>,
) -> Result<f64> {
    net.ensure_valid()?;
    let mut states = Vec::with_capacity(net.len());
    for node in &net.nodes {
        let s = *assignment
            .get(&node.name)
            .ok_or_else(|| Error::MissingAssignment(node.name.clone()))?;
        if s >= node.num_states() {
            return Err(Error::StateOutOfRange {
                node: node.name.clone(),
                state: s,
                num_states: node.num_states(),
            });
        }
        states.push(s);
    }
    Ok(net.joint_indexed(&net.parent_indices(), &states))
}

/// Calls `f` with every full assignment consistent with `fixed` (indexed by
/// node position) together with its joint probability.
fn for_each_completion(
    net: &DiscreteNetwork,
    fixed: &[Option<usize>],
    mut f: impl FnMut(&[usize], f64),
) {
    let parents = net.parent_indices();
    let radix: Vec<usize> = net.nodes.iter().map(NodeSpec::num_states).collect();
    let free: Vec<usize> = (0..net.len()).filter(|&i| fixed[i].is_none()).collect();
    let mut states: Vec<usize> = fixed.iter().map(|s| s.unwrap_or(0)).collect();
    loop {
        f(&states, net.joint_indexed(&parents, &states));
        // odometer over the free nodes, last node fastest
        let mut carry = true;
        for &i in free.iter().rev() {
            states[i] += 1;
            if states[i] < radix[i] {
                carry = false;
                break;
            }
            states[i] = 0;
        }
        if carry {
            break;
        }
    }
}

/// P(target | evidence) by summing the joint over every completion.
pub fn exact_posterior(
    net: &DiscreteNetwork,
    target: &str,
    evidence: &Evidence,
) -> Result<Distribution> {
    net.ensure_valid()?;
    let t = net
        .index_of(target)
        .ok_or_else(|| Error::UnknownNode(target.to_string()))?;
    if evidence.contains(target) {
        return Err(Error::TargetInEvidence(target.to_string()));
    }
    evidence.check_against(net)?;

    let fixed: Vec<Option<usize>> = net.nodes.iter().map(|n| evidence.get(&n.name)).collect();
    let mut weights = vec![0.0; net.nodes[t].num_states()];
    for_each_completion(net, &fixed, |states, p| weights[states[t]] += p);
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ImpossibleEvidence);
    }
    Ok(Distribution(
        weights.into_iter().map(|w| w / total).collect(),
    ))
}

/// P(evidence), the normalizer of [`exact_posterior`].
pub fn evidence_probability(net: &DiscreteNetwork, evidence: &Evidence) -> Result<f64> {
    net.ensure_valid()?;
    evidence.check_against(net)?;
    let fixed: Vec<Option<usize>> = net.nodes.iter().map(|n| evidence.get(&n.name)).collect();
    let mut total = 0.0;
    for_each_completion(net, &fixed, |_, p| total += p);
    Ok(total)
}

/// Two-slice transition CPT of one state variable.
///
/// `matrix[next][current]` = P(next | current); every column sums to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionModel {
    pub variable: String,
    pub matrix: Vec<Vec<f64>>,
}

impl TransitionModel {
    pub fn new(variable: impl Into<String>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let model = TransitionModel {
            variable: variable.into(),
            matrix,
        };
        model.check()?;
        Ok(model)
    }

    pub fn num_states(&self) -> usize {
        self.matrix.len()
    }

    /// P(next = · | current = `current`).
    pub fn column(&self, current: usize) -> Vec<f64> {
        self.matrix.iter().map(|row| row[current]).collect()
    }

    pub fn identity(variable: impl Into<String>, num_states: usize) -> Self {
        let matrix = (0..num_states)
            .map(|j| {
                (0..num_states)
                    .map(|i| if i == j { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        TransitionModel {
            variable: variable.into(),
            matrix,
        }
    }

    pub fn check(&self) -> Result<()> {
        let n = self.matrix.len();
        if n == 0 {
            return Err(Error::InvalidModel(format!(
                "transition for `{}` is empty",
                self.variable
            )));
        }
        for row in &self.matrix {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
        }
        for i in 0..n {
            check_probability_vector(&self.column(i)).map_err(|e| {
                Error::InvalidModel(format!(
                    "transition for `{}`, column {i}: {e}",
                    self.variable
                ))
            })?;
        }
        Ok(())
    }
}

/// Forward prediction: `next[j] = Σ_i P(j | i) · current[i]`.
pub fn propagate_transition(
    current: &Distribution,
    model: &TransitionModel,
) -> Result<Distribution> {
    model.check()?;
    if current.len() != model.num_states() {
        return Err(Error::DimensionMismatch {
            expected: model.num_states(),
            found: current.len(),
        });
    }
    let next = model
        .matrix
        .iter()
        .map(|row| {
            row.iter()
                .zip(current.probabilities())
                .map(|(p, c)| p * c)
                .sum()
        })
        .collect();
    Ok(Distribution(next))
}
