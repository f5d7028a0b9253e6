//! Time stepping: infer the tracked variables' posteriors on the static
//! network, then push them through their transition models to get the next
//! step's priors.
//!
//! Every backend threads its own priors, so a quantum run is compared
//! against the classical oracle over the whole trajectory, not step by step.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bn::{
    exact_posterior, propagate_transition, DiscreteNetwork, Distribution, Evidence, TransitionModel,
};
use crate::circuit::Circuit;
use crate::compiler::{compile_static_circuit, compile_transitional_circuit, next_slot};
use crate::error::{Error, Result};
use crate::grover::{
    grover_apply, grover_circuit, posterior_from_counts, posterior_from_state, select_iterations,
    GoodStateSpec, GroverPlan,
};
use crate::lowering::lower;
use crate::qsim::{
    marginal_probabilities, sample, simulate, simulate_noisy, NoiseConfig, ShotCounts, StateVector,
};

/// Static network plus one transition model per tracked state variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DqbnModel {
    pub static_net: DiscreteNetwork,
    pub transitions: Vec<TransitionModel>,
    pub tracked: Vec<String>,
    pub observations: Vec<String>,
}

impl DqbnModel {
    pub fn new(
        static_net: DiscreteNetwork,
        transitions: Vec<TransitionModel>,
        tracked: Vec<String>,
        observations: Vec<String>,
    ) -> Result<Self> {
        let model = DqbnModel {
            static_net,
            transitions,
            tracked,
            observations,
        };
        model.check()?;
        Ok(model)
    }

    /// Tracked variables must be roots of the static network, since their
    /// marginal is what changes between steps.
    pub fn check(&self) -> Result<()> {
        let net = self.static_net.clone().validated()?;
        if self.tracked.is_empty() {
            return Err(Error::InvalidModel("no tracked variables".into()));
        }
        for (i, name) in self.tracked.iter().enumerate() {
            let node = net
                .node(name)
                .ok_or_else(|| Error::UnknownNode(name.clone()))?;
            if !node.is_root() {
                return Err(Error::InvalidModel(format!(
                    "tracked variable `{name}` must be a root of the static network"
                )));
            }
            if self.tracked[..i].contains(name) {
                return Err(Error::InvalidModel(format!("`{name}` tracked twice")));
            }
            if self.observations.contains(name) {
                return Err(Error::InvalidModel(format!(
                    "`{name}` is both tracked and observed"
                )));
            }
            let models: Vec<&TransitionModel> = self
                .transitions
                .iter()
                .filter(|t| &t.variable == name)
                .collect();
            if models.len() != 1 {
                return Err(Error::InvalidModel(format!(
                    "tracked variable `{name}` needs exactly one transition model, found {}",
                    models.len()
                )));
            }
            models[0].check()?;
            if models[0].num_states() != node.num_states() {
                return Err(Error::DimensionMismatch {
                    expected: node.num_states(),
                    found: models[0].num_states(),
                });
            }
            if node.num_states() < 2 {
                return Err(Error::TooFewStates(node.num_states()));
            }
        }
        if let Some(t) = self
            .transitions
            .iter()
            .find(|t| !self.tracked.contains(&t.variable))
        {
            return Err(Error::InvalidModel(format!(
                "transition for untracked variable `{}`",
                t.variable
            )));
        }
        for (i, name) in self.observations.iter().enumerate() {
            if net.node(name).is_none() {
                return Err(Error::UnknownNode(name.clone()));
            }
            if self.observations[..i].contains(name) {
                return Err(Error::InvalidModel(format!("`{name}` observed twice")));
            }
        }
        Ok(())
    }

    pub fn transition(&self, variable: &str) -> Option<&TransitionModel> {
        self.transitions.iter().find(|t| t.variable == variable)
    }

    /// Marginals of the tracked variables as written in the static network.
    pub fn initial_priors(&self) -> Priors {
        self.tracked
            .iter()
            .map(|name| {
                let node = self
                    .static_net
                    .node(name)
                    .expect("checked tracked variable");
                let prior = Distribution::new(node.cpt[0].clone()).expect("validated cpt");
                (name.clone(), prior)
            })
            .collect()
    }

    /// The static network with tracked marginals replaced by `priors`.
    pub fn network_with_priors(&self, priors: &Priors) -> Result<DiscreteNetwork> {
        let mut net = self.static_net.clone();
        for name in &self.tracked {
            let prior = priors
                .get(name)
                .ok_or_else(|| Error::InvalidModel(format!("missing prior for `{name}`")))?;
            net.set_marginal(name, prior)?;
        }
        Ok(net)
    }

    fn check_evidence(&self, evidence: &Evidence, partial: bool) -> Result<()> {
        evidence.check_against(&self.static_net)?;
        for name in evidence.assignments.keys() {
            if self.tracked.contains(name) {
                return Err(Error::TargetInEvidence(name.clone()));
            }
            if !self.observations.contains(name) {
                return Err(Error::InvalidModel(format!(
                    "evidence on `{name}`, which is not an observation variable"
                )));
            }
        }
        if !partial {
            if let Some(missing) = self.observations.iter().find(|o| !evidence.contains(o)) {
                return Err(Error::InvalidModel(format!(
                    "no evidence for observation variable `{missing}`"
                )));
            }
        }
        Ok(())
    }
}

/// Evidence per time step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct EvidenceSequence {
    pub steps: Vec<Evidence>,
}

impl EvidenceSequence {
    pub fn new(steps: Vec<Evidence>) -> Self {
        EvidenceSequence { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Exact enumeration.
    Classical,
    /// Amplified state-vector probabilities, no sampling.
    QuantumExact,
    /// Shots sampled from the amplified state.
    QuantumShots,
    /// Shots from noisy trajectories of the basis-gate circuit.
    QuantumNoisy,
}

impl Backend {
    pub const ALL: [Backend; 4] = [
        Backend::Classical,
        Backend::QuantumExact,
        Backend::QuantumShots,
        Backend::QuantumNoisy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Classical => "classical",
            Backend::QuantumExact => "quantum-exact",
            Backend::QuantumShots => "quantum-shots",
            Backend::QuantumNoisy => "quantum-noisy",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Backend::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidModel(format!("unknown backend `{s}`")))
    }
}

/// How many Grover rounds to run at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KPolicy {
    /// Exact sweep over 0..=k_max, keeping the best.
    Sweep {
        k_max: usize,
    },
    Fixed(usize),
}

impl KPolicy {
    /// Three rounds at every step.
    pub const FIXED_THREE: KPolicy = KPolicy::Fixed(3);
}

impl Default for KPolicy {
    fn default() -> Self {
        KPolicy::Sweep { k_max: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineConfig {
    pub shots: u64,
    pub seed: u64,
    pub k_policy: KPolicy,
    /// Backends to run; the classical oracle always runs as well.
    pub backends: Vec<Backend>,
    /// Used by [`Backend::QuantumNoisy`] only.
    pub noise: NoiseConfig,
    /// Sample the transitional circuit instead of reading exact marginals.
    pub transitional_shots: bool,
    /// Allow steps that leave some observation variables unobserved; they
    /// are marginalized out.
    pub partial_evidence: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            shots: 8192,
            seed: 0,
            k_policy: KPolicy::default(),
            backends: vec![Backend::Classical],
            noise: NoiseConfig::default(),
            transitional_shots: false,
            partial_evidence: false,
        }
    }
}

impl EngineConfig {
    pub fn with_backends(mut self, backends: &[Backend]) -> Self {
        self.backends = backends.to_vec();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_shots(mut self, shots: u64) -> Self {
        self.shots = shots;
        self
    }

    pub fn with_k_policy(mut self, policy: KPolicy) -> Self {
        self.k_policy = policy;
        self
    }

    pub fn with_noise(mut self, noise: NoiseConfig) -> Self {
        self.noise = noise;
        self
    }

    fn backends_with_oracle(&self) -> Vec<Backend> {
        let mut all = vec![Backend::Classical];
        for &b in &self.backends {
            if !all.contains(&b) {
                all.push(b);
            }
        }
        all
    }
}

pub type Priors = BTreeMap<String, Distribution>;

/// One backend's view of one time step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub backend: Backend,
    pub step: usize,
    pub priors: Priors,
    pub posteriors: Priors,
    /// Priors handed to step + 1.
    pub next_priors: Priors,
    /// Grover rounds used (quantum backends).
    pub iterations: Option<usize>,
    /// Exact good-state mass after amplification (quantum backends).
    pub good_mass: Option<f64>,
    /// Shots taken, including a retry (sampling backends).
    pub shots: Option<u64>,
    /// Shots that survived post-selection (sampling backends).
    pub good_shots: Option<u64>,
}

/// SplitMix64 finalizer over the inputs; keeps per-step streams independent.
fn derive_seed(seed: u64, step: usize, backend: Backend, salt: u64) -> u64 {
    let mut z = seed
        ^ (step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ backend.tag().wrapping_mul(0xD1B5_4A32_D192_ED03)
        ^ salt.wrapping_mul(0x2545_F491_4F6C_DD1D);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Amplified {
    plan: GroverPlan,
    good_mass: f64,
}

fn amplify(a: Circuit, spec: GoodStateSpec, policy: KPolicy) -> Result<Amplified> {
    let (k, mass) = match policy {
        KPolicy::Sweep { k_max } => {
            let sweep = select_iterations(&a, &spec, k_max)?;
            (sweep.best, sweep.curve[sweep.best])
        }
        KPolicy::Fixed(k) => {
            let plan = GroverPlan::new(a.clone(), spec.clone(), k)?;
            let state = grover_apply(&plan)?;
            (k, crate::grover::good_mass(&state, &spec))
        }
    };
    Ok(Amplified {
        plan: GroverPlan::new(a, spec, k)?,
        good_mass: mass,
    })
}

/// Draws shots, doubling them once when none survive post-selection.
fn shots_with_retry(
    shots: u64,
    mut draw: impl FnMut(u64, u64) -> Result<ShotCounts>,
    mut tally: impl FnMut(&ShotCounts) -> Result<Priors>,
) -> Result<(Priors, ShotCounts, u64)> {
    let first = draw(shots, 0)?;
    match tally(&first) {
        Ok(p) => Ok((p, first, shots)),
        Err(Error::NoGoodSamples { .. }) => {
            let second = draw(2 * shots, 1)?;
            let p = tally(&second)?;
            Ok((p, second, 3 * shots))
        }
        Err(e) => Err(e),
    }
}

fn good_shot_count(counts: &ShotCounts, spec: &GoodStateSpec) -> u64 {
    counts
        .counts
        .iter()
        .filter(|(&i, _)| spec.is_good(i))
        .map(|(_, &n)| n)
        .sum()
}

/// One step of one backend: posterior inference, then forward prediction.
pub fn run_step(
    model: &DqbnModel,
    priors: &Priors,
    evidence: &Evidence,
    backend: Backend,
    config: &EngineConfig,
    step: usize,
) -> Result<StepRecord> {
    model.check_evidence(evidence, config.partial_evidence)?;
    let net = model.network_with_priors(priors)?;
    let mut record = StepRecord {
        backend,
        step,
        priors: priors.clone(),
        posteriors: Priors::new(),
        next_priors: Priors::new(),
        iterations: None,
        good_mass: None,
        shots: None,
        good_shots: None,
    };

    if backend == Backend::Classical {
        for name in &model.tracked {
            record
                .posteriors
                .insert(name.clone(), exact_posterior(&net, name, evidence)?);
        }
    } else {
        let a = compile_static_circuit(&net)?;
        let spec = GoodStateSpec::for_evidence(&a, evidence)?;
        let amplified = amplify(a, spec, config.k_policy)?;
        record.iterations = Some(amplified.plan.iterations);
        record.good_mass = Some(amplified.good_mass);
        let plan = &amplified.plan;
        let tally_counts = |counts: &ShotCounts| -> Result<Priors> {
            model
                .tracked
                .iter()
                .map(|name| {
                    posterior_from_counts(counts, &plan.spec, &plan.circuit.layout, name)
                        .map(|p| (name.clone(), p))
                })
                .collect()
        };
        match backend {
            Backend::QuantumExact => {
                let state = grover_apply(plan)?;
                for name in &model.tracked {
                    let p = posterior_from_state(&state, &plan.spec, &plan.circuit.layout, name)?;
                    record.posteriors.insert(name.clone(), p);
                }
            }
            Backend::QuantumShots => {
                let state = grover_apply(plan)?;
                let (posteriors, counts, used) = shots_with_retry(
                    config.shots,
                    |n, salt| sample(&state, n, derive_seed(config.seed, step, backend, salt)),
                    tally_counts,
                )?;
                record.posteriors = posteriors;
                record.shots = Some(used);
                record.good_shots = Some(good_shot_count(&counts, &plan.spec));
            }
            Backend::QuantumNoisy => {
                let lowered =
                    GroverPlan::new(lower(&plan.circuit)?, plan.spec.clone(), plan.iterations)?;
                let program = grover_circuit(&lowered)?;
                let (posteriors, counts, used) = shots_with_retry(
                    config.shots,
                    |n, salt| {
                        simulate_noisy(
                            &program,
                            &config.noise,
                            n,
                            derive_seed(config.seed, step, backend, salt),
                        )
                    },
                    tally_counts,
                )?;
                record.posteriors = posteriors;
                record.shots = Some(used);
                record.good_shots = Some(good_shot_count(&counts, &plan.spec));
            }
            Backend::Classical => unreachable!(),
        }
    }

    for name in &model.tracked {
        let transition = model.transition(name).expect("checked model");
        let posterior = &record.posteriors[name];
        let next = match backend {
            Backend::Classical => propagate_transition(posterior, transition)?,
            _ => quantum_transition(posterior, transition, backend, config, step)?,
        };
        record.next_priors.insert(name.clone(), next);
    }
    Ok(record)
}

/// Forward prediction through the transitional circuit, no amplification.
fn quantum_transition(
    posterior: &Distribution,
    transition: &TransitionModel,
    backend: Backend,
    config: &EngineConfig,
    step: usize,
) -> Result<Distribution> {
    let circuit = compile_transitional_circuit(posterior, transition)?;
    let block = circuit
        .layout
        .block(&next_slot(&transition.variable))
        .expect("transitional layout")
        .clone();
    let n = transition.num_states();
    if !config.transitional_shots || backend == Backend::QuantumExact {
        let state: StateVector = simulate(&circuit, None)?;
        let marginal = marginal_probabilities(&state, &block.qubits)?;
        return Distribution::from_weights(marginal.into_vec().into_iter().take(n).collect());
    }
    let seed = derive_seed(config.seed, step, backend, 0x7472_616e);
    let counts = if backend == Backend::QuantumNoisy {
        simulate_noisy(&lower(&circuit)?, &config.noise, config.shots, seed)?
    } else {
        sample(&simulate(&circuit, None)?, config.shots, seed)?
    };
    let mut weights = vec![0.0; n];
    for (&index, &c) in &counts.counts {
        let ancillas_clear = circuit.ancillas.iter().all(|&a| (index >> a) & 1 == 0);
        let s = block.read(index);
        if ancillas_clear && s < n {
            weights[s] += c as f64;
        }
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::NoGoodSamples {
            shots: counts.shots,
        });
    }
    Distribution::from_weights(weights)
}

/// Per-step records for every backend that ran.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineStep {
    pub step: usize,
    pub evidence: Evidence,
    pub records: BTreeMap<Backend, StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineResult {
    pub tracked: Vec<String>,
    pub backends: Vec<Backend>,
    pub steps: Vec<TimelineStep>,
    /// RMS (percent) of each backend's state-0 prior/posterior series
    /// against the classical one.
    pub rms_percent: BTreeMap<Backend, f64>,
}

impl TimelineResult {
    /// P(state 0) priors and posteriors of every tracked variable, step by
    /// step: prior₀, posterior₀, prior₁, ...
    pub fn series(&self, backend: Backend) -> Vec<f64> {
        let mut out = Vec::new();
        for step in &self.steps {
            let Some(r) = step.records.get(&backend) else {
                continue;
            };
            for name in &self.tracked {
                out.push(r.priors[name].get(0));
                out.push(r.posteriors[name].get(0));
            }
        }
        out
    }

    pub fn rms(&self, backend: Backend) -> Option<f64> {
        self.rms_percent.get(&backend).copied()
    }
}

/// Folds [`run_step`] over the evidence sequence for every backend.
pub fn run_timeline(
    model: &DqbnModel,
    evidence: &EvidenceSequence,
    config: &EngineConfig,
) -> Result<TimelineResult> {
    model.check()?;
    if evidence.is_empty() {
        return Err(Error::InvalidModel("evidence sequence has no steps".into()));
    }
    let backends = config.backends_with_oracle();
    let mut steps: Vec<TimelineStep> = evidence
        .steps
        .iter()
        .enumerate()
        .map(|(step, ev)| TimelineStep {
            step,
            evidence: ev.clone(),
            records: BTreeMap::new(),
        })
        .collect();
    for &backend in &backends {
        let mut priors = model.initial_priors();
        for (t, ev) in evidence.steps.iter().enumerate() {
            let record = run_step(model, &priors, ev, backend, config, t)?;
            priors = record.next_priors.clone();
            steps[t].records.insert(backend, record);
        }
    }
    let mut result = TimelineResult {
        tracked: model.tracked.clone(),
        backends: backends.clone(),
        steps,
        rms_percent: BTreeMap::new(),
    };
    let reference = result.series(Backend::Classical);
    for &b in &backends {
        let rms = rms_error(&result.series(b), &reference)?;
        result.rms_percent.insert(b, rms);
    }
    Ok(result)
}

/// √(mean((aᵢ − bᵢ)²)) × 100.
pub fn rms_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let mse = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64;
    Ok(mse.sqrt() * 100.0)
}
