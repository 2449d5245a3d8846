use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use causal_cloud::counterfactual::{
    approx_counterfactual, counterfactual_certificate, exact_counterfactual, generalized_approx_counterfactual,
    generalized_certificate, CounterfactualQuery,
};
use causal_cloud::harness::format::{read_dataset, write_dataset, ModelDoc, PrivacyDoc, TransportDoc};
use causal_cloud::harness::latency::{run_debug_experiment, LatencyParams};
use causal_cloud::harness::sweep::{grid, run_privacy_sweep, DEFAULT_SAMPLES};
use causal_cloud::model::DEFAULT_SMOOTHING;
use causal_cloud::pipeline::{
    debug_query, integrate_sandbox, optimize_policy, pick_shared_context, predict_outcome, DebugQuery, PolicySpace,
    Utility,
};
use causal_cloud::transport::{approx_transport, transport_bound, transport_certificate};
use causal_cloud::{Assignment, CausalModel, Error, Result, Table, Variable};

#[derive(Parser)]
#[command(name = "causal-cloud", version, about = "Causal inference for cloud systems")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct QueryArgs {
    /// Model document (JSON).
    model: PathBuf,
    /// Target variables, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    target: Vec<String>,
    /// Evidence as `A=a,B=b` using state labels.
    #[arg(long, default_value = "")]
    evidence: String,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model document against every invariant.
    Validate { model: PathBuf },
    /// Conditional query `p(targets | evidence)`.
    Query(QueryArgs),
    /// Interventional query `p(targets | do(set), evidence)`.
    Do {
        #[command(flatten)]
        query: QueryArgs,
        /// Intervention as `X=x,...`.
        #[arg(long)]
        set: String,
    },
    /// Counterfactual query given factual evidence.
    Counterfactual {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long)]
        set: String,
        /// Abduction over the background variables (needs a `background` block).
        #[arg(long, conflicts_with = "approx", required_unless_present = "approx")]
        exact: bool,
        /// Conditioning on the root nodes of the graph.
        #[arg(long)]
        approx: bool,
        /// Separating set replacing the roots in the approximation.
        #[arg(long, value_delimiter = ',', requires = "approx")]
        zset: Vec<String>,
    },
    /// Compute an error certificate.
    #[command(subcommand)]
    Certificate(CertificateCommand),
    /// Approximate outcome distribution from separately held pieces.
    Transport {
        file: PathBuf,
        /// Also count the provider's `H(X_0 | C)` in the bound.
        #[arg(long)]
        include_x0: bool,
    },
    /// Draw a dataset from a model (CSV plus `.meta.json` sidecar; needs `--out`).
    Sample {
        model: PathBuf,
        #[arg(long)]
        n: usize,
        /// Variables randomized uniformly by the experimenter.
        #[arg(long, value_delimiter = ',')]
        randomize: Vec<String>,
    },
    /// Complete a model by fitting a missing CPT on randomized experiment data.
    SandboxIntegrate {
        model: PathBuf,
        #[arg(long)]
        var: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
        smoothing: f64,
    },
    /// Search for the policy for `--var` maximizing expected utility.
    OptimizePolicy {
        model: PathBuf,
        #[arg(long)]
        var: String,
        /// Utility targets, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<String>,
        /// Utility per joint target state, row-major.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Search stochastic policies on a grid with this step.
        #[arg(long)]
        grid: Option<f64>,
    },
    /// Would `Y` have been `--target` had `X` been `--to`, given what was seen?
    DebugQuery {
        model: PathBuf,
        #[arg(long)]
        x: String,
        /// Observed state of `X`.
        #[arg(long)]
        from: String,
        /// Counterfactual state of `X`.
        #[arg(long)]
        to: String,
        #[arg(long)]
        y: String,
        /// Observed state of `Y`.
        #[arg(long)]
        observed: String,
        /// State of `Y` whose counterfactual probability is reported.
        #[arg(long)]
        target: String,
        /// Side evidence `F=f,...`.
        #[arg(long, default_value = "")]
        evidence: String,
        #[arg(long, value_delimiter = ',')]
        zset: Vec<String>,
    },
    /// Choose the shared context from stakeholder disclosures.
    PickContext { file: PathBuf },
    /// Predict the provider's outcome from revealed conditionals.
    PredictOutcome {
        file: PathBuf,
        #[arg(long)]
        include_x0: bool,
    },
    /// Run an experiment.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Subcommand)]
enum CertificateCommand {
    /// Counterfactual approximation error against `H(E | W)`.
    Cf {
        model: PathBuf,
        #[arg(long)]
        set: String,
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<String>,
        /// Evidence variables `E`, comma separated.
        #[arg(long, value_delimiter = ',')]
        evidence_vars: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        zset: Vec<String>,
    },
    /// Transport error against `Σ H(X_k | C)`; the file must carry `joint`.
    Transport {
        file: PathBuf,
        #[arg(long)]
        include_x0: bool,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Confounder sweep over the spot-market toy (CSV).
    Privacy {
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Back-door and sandbox experiments on the latency surrogate (JSON).
    Latency {
        #[arg(long, default_value_t = 100_000)]
        n_obs: usize,
        #[arg(long, default_value_t = 100_000)]
        n_int: usize,
        /// Generator parameters (JSON); defaults otherwise.
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

fn names(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// The model as a CGM; documents with a `background` block are read as an
/// FCM and reduced to the CGM it induces.
fn load_cgm(path: &Path) -> Result<CausalModel> {
    let doc = ModelDoc::load(path)?;
    match doc.background {
        Some(_) => doc.functional()?.induce_cgm(),
        None => doc.causal(),
    }
}

fn state(var: &Variable, label: &str) -> Result<usize> {
    var.state_index(label)
}

#[derive(Serialize)]
struct LabeledTable {
    scope: Vec<String>,
    given: Vec<String>,
    states: Vec<Vec<String>>,
    rows: Vec<Vec<f64>>,
}

fn labeled(t: &Table) -> LabeledTable {
    let v = t.view();
    LabeledTable {
        scope: v.scope,
        given: v.given,
        states: t.scope().iter().chain(t.given()).map(|v| v.states().to_vec()).collect(),
        rows: v.rows,
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Output> {
    Ok(Output::Json(serde_json::to_value(v)?))
}

enum Output {
    Json(serde_json::Value),
    Text(String),
}

fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Validate { model } => {
            let doc = ModelDoc::load(model)?;
            let report = match doc.background {
                Some(_) => doc.functional()?.base().validation_report(),
                None => doc.causal()?.validation_report(),
            };
            to_json(&report)
        }
        Command::Query(q) => {
            let m = load_cgm(&q.model)?;
            let e = Assignment::parse(&q.evidence, m.variables())?;
            to_json(&labeled(&m.query(&names(&q.target), &e)?))
        }
        Command::Do { query: q, set } => {
            let m = load_cgm(&q.model)?;
            let e = Assignment::parse(&q.evidence, m.variables())?;
            let d = Assignment::parse(set, m.variables())?;
            to_json(&labeled(&m.interventional_query(&names(&q.target), &d, &e)?))
        }
        Command::Counterfactual { query: q, set, exact, zset, .. } => {
            let doc = ModelDoc::load(&q.model)?;
            let table = if *exact {
                let f = doc.functional()?;
                let vars = f.base().variables();
                let cq = CounterfactualQuery::new(
                    Assignment::parse(set, vars)?,
                    &names(&q.target),
                    Assignment::parse(&q.evidence, vars)?,
                )?;
                exact_counterfactual(&f, &cq)?
            } else {
                let m = load_cgm(&q.model)?;
                let cq = CounterfactualQuery::new(
                    Assignment::parse(set, m.variables())?,
                    &names(&q.target),
                    Assignment::parse(&q.evidence, m.variables())?,
                )?;
                if zset.is_empty() {
                    approx_counterfactual(&m, &cq)?
                } else {
                    generalized_approx_counterfactual(&m, &names(zset), &cq)?
                }
            };
            to_json(&labeled(&table))
        }
        Command::Certificate(CertificateCommand::Cf { model, set, target, evidence_vars, zset }) => {
            let f = ModelDoc::load(model)?.functional()?;
            let d = Assignment::parse(set, f.base().variables())?;
            let cert = if zset.is_empty() {
                counterfactual_certificate(&f, &d, &names(target), &names(evidence_vars))?
            } else {
                generalized_certificate(&f, &names(zset), &d, &names(target), &names(evidence_vars))?
            };
            Ok(Output::Json(json!({
                "divergence_bits": cert.certificate.divergence.bits(),
                "bound_bits": cert.certificate.bound.bits(),
                "slack_bits": cert.certificate.slack(),
                "preconditions_ok": cert.certificate.preconditions_ok,
                "holds": cert.certificate.holds(),
                "conditioning": cert.conditioning,
            })))
        }
        Command::Certificate(CertificateCommand::Transport { file, include_x0 }) => {
            let doc: TransportDoc = serde_json::from_str(&fs::read_to_string(file)?)?;
            let c = transport_certificate(&doc.joint()?, &doc.inputs()?, *include_x0)?;
            Ok(Output::Json(json!({
                "divergence_bits": c.certificate.divergence.bits(),
                "bound_bits": c.certificate.bound.bits(),
                "slack_bits": c.certificate.slack(),
                "preconditions_ok": c.certificate.preconditions_ok,
                "holds": c.certificate.holds(),
                "includes_x0": c.includes_x0,
                "p_true": c.p_true,
                "p_bar": c.p_bar,
            })))
        }
        Command::Transport { file, include_x0 } => {
            let doc: TransportDoc = serde_json::from_str(&fs::read_to_string(file)?)?;
            let t = doc.inputs()?;
            Ok(Output::Json(json!({
                "p_bar": serde_json::to_value(labeled(&approx_transport(&t)?))?,
                "bound_bits": transport_bound(&t, *include_x0)?.bits(),
                "includes_x0": *include_x0 && t.provider().is_some(),
            })))
        }
        Command::Sample { model, n, randomize } => {
            let out = cli
                .out
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("`sample` needs --out for the CSV file".into()))?;
            let m = ModelDoc::load(model)?.causal()?;
            let d = if randomize.is_empty() {
                m.sample(*n, cli.seed)?
            } else {
                m.sample_randomized(&names(randomize), *n, cli.seed)?
            };
            write_dataset(out, &d)?;
            Ok(Output::Text(String::new()))
        }
        Command::SandboxIntegrate { model, var, data, smoothing } => {
            let partial = ModelDoc::load(model)?.partial()?;
            let d = read_dataset(data, Some(partial.variables()))?;
            let completed = integrate_sandbox(&partial, var, &d, *smoothing)?;
            Ok(Output::Text(ModelDoc::from_causal(&completed).to_json()? + "\n"))
        }
        Command::OptimizePolicy { model, var, target, values, grid } => {
            let m = load_cgm(model)?;
            let u = Utility::new(target.clone(), values.clone())?;
            let space = match grid {
                Some(step) => PolicySpace::StochasticGrid { step: *step },
                None => PolicySpace::Deterministic,
            };
            let (policy, value) = optimize_policy(&m, var, &u, space)?;
            Ok(Output::Json(json!({
                "policy": serde_json::to_value(labeled(policy.table()))?,
                "choices": policy.choices(),
                "expected_utility": value,
            })))
        }
        Command::DebugQuery { model, x, from, to, y, observed, target, evidence, zset } => {
            let m = load_cgm(model)?;
            let (xv, yv) = (m.variable(x)?, m.variable(y)?);
            let q = DebugQuery::new(
                (x, state(xv, from)?, state(xv, to)?),
                (y, state(yv, observed)?, state(yv, target)?),
                Assignment::parse(evidence, m.variables())?,
            )?;
            let z = names(zset);
            to_json(&debug_query(&m, &q, (!z.is_empty()).then_some(&z[..]))?)
        }
        Command::PickContext { file } => {
            let doc: PrivacyDoc = serde_json::from_str(&fs::read_to_string(file)?)?;
            let choice = pick_shared_context(&doc.disclosures()?)?;
            Ok(Output::Json(json!({
                "context": choice.as_ref().map(|c| c.context.clone()),
                "total_bits": choice.as_ref().map(|c| c.total.bits()),
            })))
        }
        Command::PredictOutcome { file, include_x0 } => {
            let doc: PrivacyDoc = serde_json::from_str(&fs::read_to_string(file)?)?;
            let p = predict_outcome(&doc.mechanism()?, &doc.policies()?, &doc.disclosures()?, &doc.prior()?, *include_x0)?;
            Ok(Output::Json(json!({
                "p_bar": serde_json::to_value(labeled(&p.outcome))?,
                "bound_bits": p.bound.bits(),
            })))
        }
        Command::Experiment(ExperimentCommand::Privacy { n, step }) => {
            if !(*step > 0.0 && *step <= 0.5) {
                return Err(Error::InvalidParameter(format!("grid step {step} outside (0, 0.5]")));
            }
            let result = run_privacy_sweep(&grid(*step), *n, cli.seed)?;
            if let Some(out) = &cli.out {
                let mut meta = out.as_os_str().to_owned();
                meta.push(".meta.json");
                fs::write(meta, result.meta_json() + "\n")?;
            }
            Ok(Output::Text(result.to_csv_string()?))
        }
        Command::Experiment(ExperimentCommand::Latency { n_obs, n_int, params }) => {
            let p: LatencyParams = match params {
                Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
                None => LatencyParams::default(),
            };
            to_json(&run_debug_experiment(&p, *n_obs, *n_int, cli.seed)?)
        }
    }
}


fn emit(cli: &Cli, output: Output) -> Result<()> {
    let text = match output {
        Output::Json(v) => serde_json::to_string_pretty(&v)? + "\n",
        Output::Text(t) => t,
    };
    match &cli.out {
        Some(path) if !matches!(cli.command, Command::Sample { .. }) => fs::write(path, text)?,
        Some(_) => {}
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli).and_then(|out| emit(&cli, out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_refusal() { 2 } else { 1 })
        }
    }
}
