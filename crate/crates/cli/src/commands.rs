use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use dqbn_core::grover::{export_grover_circuit, select_iterations};
use dqbn_core::lowering::lower;
use dqbn_core::{
    compile_static_circuit, emit_qasm, run_step, run_timeline, Backend, CircuitMetrics,
    EngineConfig, Evidence, EvidenceSequence, GoodStateSpec, GroverPlan, KPolicy, NoiseConfig,
    Priors,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::model_file::{parse_model, parse_model_file, ParsedModel};
use crate::report;

#[derive(Debug, Parser)]
#[command(
    name = "dqbn",
    version,
    about = "Dynamic Bayesian network inference on a simulated quantum backend"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file and list every problem found
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Emit the basis-gate circuit for one time step as OpenQASM 2.0
    Compile(CompileArgs),
    /// Posterior of the tracked variables for a single step, as JSON
    Infer(InferArgs),
    /// Full timeline: CSV report, optional JSON and SVG
    Run(RunArgs),
    /// RMS error of each backend against exact inference
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    #[arg(long, default_value_t = 8192)]
    pub shots: u64,
    #[arg(long, env = "DQBN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Fixed number of Grover rounds (default: best k in 0..=k-max)
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 6)]
    pub k_max: usize,
    /// Depolarizing probability after single-qubit gates (quantum-noisy)
    #[arg(long, default_value_t = 0.0)]
    pub noise_1q: f64,
    /// Depolarizing probability after two-qubit gates (quantum-noisy)
    #[arg(long, default_value_t = 0.0)]
    pub noise_2q: f64,
    /// Per-qubit readout flip probabilities, comma separated
    #[arg(long, value_delimiter = ',')]
    pub readout: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    pub trajectories: usize,
    /// Sample the transitional circuit instead of using exact marginals
    #[arg(long)]
    pub transitional_shots: bool,
    /// Allow steps that leave observation variables unobserved
    #[arg(long)]
    pub partial_evidence: bool,
}

impl EngineArgs {
    fn config(&self, backends: &[Backend]) -> EngineConfig {
        let noise = NoiseConfig::depolarizing(self.noise_1q, self.noise_2q)
            .with_readout(self.readout.clone())
            .with_trajectories(self.trajectories);
        let k_policy = match self.k {
            Some(k) => KPolicy::Fixed(k),
            None => KPolicy::Sweep { k_max: self.k_max },
        };
        EngineConfig {
            shots: self.shots,
            seed: self.seed,
            k_policy,
            backends: backends.to_vec(),
            noise,
            transitional_shots: self.transitional_shots,
            partial_evidence: self.partial_evidence,
        }
    }
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Time step whose priors are substituted (reached by exact inference)
    #[arg(long, default_value_t = 0)]
    pub step: usize,
    /// OpenQASM output path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Metrics JSON output path (stdout when omitted)
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Export the full amplification circuit for the step's evidence
    #[arg(long)]
    pub grover: bool,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 6)]
    pub k_max: usize,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub step: usize,
    /// Evidence as `var=label,...` (default: the file's evidence for the step)
    #[arg(long)]
    pub evidence: Option<String>,
    #[arg(long, default_value = "classical")]
    pub backend: Backend,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "classical,quantum-shots")]
    pub backends: Vec<Backend>,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// CSV report path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "quantum-exact,quantum-shots,quantum-noisy"
    )]
    pub backends: Vec<Backend>,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> CliResult<ParsedModel> {
    parse_model(&read(path)?)
}

/// Priors at `step`, reached by exact inference over the earlier evidence.
fn priors_at(parsed: &ParsedModel, step: usize, partial: bool) -> CliResult<Priors> {
    if step == 0 {
        return Ok(parsed.model.initial_priors());
    }
    if step > parsed.evidence.len() {
        return Err(CliError::new(
            "usage",
            format!(
                "step {step} is past the {} evidence steps in the model",
                parsed.evidence.len()
            ),
        ));
    }
    let earlier = EvidenceSequence::new(parsed.evidence.steps[..step].to_vec());
    let cfg = EngineConfig {
        partial_evidence: partial,
        ..EngineConfig::default()
    };
    let result = run_timeline(&parsed.model, &earlier, &cfg)?;
    let last = result.steps.last().expect("at least one step");
    Ok(last.records[&Backend::Classical].next_priors.clone())
}

fn step_evidence(parsed: &ParsedModel, step: usize) -> CliResult<Evidence> {
    parsed.evidence.steps.get(step).cloned().ok_or_else(|| {
        CliError::new(
            "usage",
            format!("model has no evidence for step {step}; pass --evidence"),
        )
    })
}

fn parse_evidence(parsed: &ParsedModel, text: &str) -> CliResult<Evidence> {
    let mut ev = Evidence::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (var, label) = item.split_once('=').ok_or_else(|| {
            CliError::new("usage", format!("evidence item `{item}` is not var=label"))
        })?;
        let node = parsed
            .model
            .static_net
            .node(var)
            .ok_or_else(|| CliError::new("evidence", format!("unknown node `{var}`")))?;
        let state = node.state_index(label).ok_or_else(|| {
            CliError::new(
                "evidence",
                format!(
                    "unknown state label `{label}` for `{var}` (states: {})",
                    node.states.join(", ")
                ),
            )
        })?;
        ev = ev.with(var, state);
    }
    Ok(ev)
}

#[derive(Serialize)]
struct CompileReport {
    step: usize,
    num_qubits: usize,
    depth: usize,
    total_gates: usize,
    cnot_count: usize,
    ancillas: Vec<usize>,
    high_level: CircuitMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    grover_iterations: Option<usize>,
}

fn compile(args: &CompileArgs) -> CliResult<()> {
    let parsed = load(&args.model)?;
    let priors = priors_at(&parsed, args.step, false)?;
    let net = parsed.model.network_with_priors(&priors)?;
    let a = compile_static_circuit(&net)?;
    let high_level = a.metrics();
    let (circuit, iterations) = if args.grover {
        let spec = GoodStateSpec::for_evidence(&a, &step_evidence(&parsed, args.step)?)?;
        let k = match args.k {
            Some(k) => k,
            None => select_iterations(&a, &spec, args.k_max)?.best,
        };
        (
            export_grover_circuit(&GroverPlan::new(a.clone(), spec, k)?)?,
            Some(k),
        )
    } else {
        (lower(&a)?, None)
    };
    let m = circuit.metrics();
    let report = CompileReport {
        step: args.step,
        num_qubits: m.num_qubits,
        depth: m.depth,
        total_gates: m.total_gates,
        cnot_count: m.cnot_count,
        ancillas: circuit.ancillas.clone(),
        high_level,
        grover_iterations: iterations,
    };
    emit(args.out.as_deref(), &emit_qasm(&circuit)?)?;
    let json = serde_json::to_string_pretty(&report).expect("metrics serialize") + "\n";
    match &args.metrics {
        Some(p) => emit(Some(p), &json),
        None if args.out.is_some() => emit(None, &json),
        // QASM already went to stdout
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct InferReport<'a> {
    states: std::collections::BTreeMap<&'a str, Vec<String>>,
    #[serde(flatten)]
    record: &'a dqbn_core::StepRecord,
}

fn infer(args: &InferArgs) -> CliResult<()> {
    let parsed = load(&args.model)?;
    let evidence = match &args.evidence {
        Some(text) => parse_evidence(&parsed, text)?,
        None => step_evidence(&parsed, args.step)?,
    };
    let cfg = args.engine.config(&[args.backend]);
    let priors = priors_at(&parsed, args.step, cfg.partial_evidence)?;
    let record = run_step(
        &parsed.model,
        &priors,
        &evidence,
        args.backend,
        &cfg,
        args.step,
    )?;
    let states = parsed
        .model
        .tracked
        .iter()
        .map(|v| (v.as_str(), parsed.labels(v)))
        .collect();
    let json = serde_json::to_string_pretty(&InferReport {
        states,
        record: &record,
    })
    .expect("record serializes");
    emit(args.out.as_deref(), &(json + "\n"))
}

fn timeline(
    parsed: &ParsedModel,
    backends: &[Backend],
    engine: &EngineArgs,
) -> CliResult<dqbn_core::TimelineResult> {
    if parsed.evidence.is_empty() {
        return Err(CliError::new(
            "validation",
            "model file has an empty evidence_sequence",
        ));
    }
    Ok(run_timeline(
        &parsed.model,
        &parsed.evidence,
        &engine.config(backends),
    )?)
}

fn run(args: &RunArgs) -> CliResult<()> {
    let parsed = load(&args.model)?;
    let result = timeline(&parsed, &args.backends, &args.engine)?;
    emit(args.out.as_deref(), &report::timeline_csv(&result, &parsed))?;
    if let Some(p) = &args.json {
        emit(Some(p), &(report::timeline_json(&result, &parsed) + "\n"))?;
    }
    if let Some(p) = &args.svg {
        emit(Some(p), &report::timeline_svg(&result, &parsed))?;
    }
    if args.out.is_some() {
        print!("{}", report::rms_table(&result));
    }
    Ok(())
}

fn compare(args: &CompareArgs) -> CliResult<()> {
    let parsed = load(&args.model)?;
    let result = timeline(&parsed, &args.backends, &args.engine)?;
    print!("{}", report::rms_table(&result));
    if let Some(p) = &args.json {
        let json = serde_json::to_string_pretty(&result.rms_percent).expect("rms serializes");
        emit(Some(p), &(json + "\n"))?;
    }
    Ok(())
}

fn validate(model: &Path) -> CliResult<()> {
    let file = parse_model_file(&read(model)?)?;
    let problems = file.problems();
    if problems.is_empty() {
        println!(
            "valid: {} nodes, {} transitions, {} evidence steps",
            file.nodes.len(),
            file.transitions.len(),
            file.evidence_sequence.len()
        );
        return Ok(());
    }
    for p in &problems {
        println!("{p}");
    }
    Err(CliError::new(
        "validation",
        format!("{} problem(s) in {}", problems.len(), model.display()),
    ))
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Validate { model } => validate(model),
        Command::Compile(a) => compile(a),
        Command::Infer(a) => infer(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
    }
}

/// Parses `args`, runs the command and reports errors on stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let text = text.trim_start_matches("error: ");
            eprintln!("{}", CliError::new("usage", text).line());
            return ExitCode::from(2);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::FAILURE
        }
    }
}
