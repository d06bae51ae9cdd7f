//! `qvc`: train, evaluate and inspect variational quantum classifiers on a
//! simulated processor, optimize and translate circuits, and generate the
//! bundled synthetic datasets.

mod config;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use qvc_core::model::{EvalMode, ModelSpec};
use qvc_core::train::{evaluate, train, TrainOptions};
use qvc_core::translate::TargetGateSet;
use qvc_core::{data, passes, simulator, write_atomic};

#[derive(Parser)]
#[command(name = "qvc", version, about = "Variational quantum classifier toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier from an experiment config (TOML).
    Train(TrainArgs),
    /// Evaluate a saved model on a CSV dataset.
    Eval(EvalArgs),
    /// Print the exact outcome distribution of a circuit as CSV.
    Simulate(SimulateArgs),
    /// Apply the rewrite passes to a circuit file.
    Optimize(OptimizeArgs),
    /// Translate a bound circuit to a native gate set.
    Translate(TranslateArgs),
    /// Generate a synthetic dataset as CSV (plus a JSON metadata sidecar).
    GenData(GenDataArgs),
    /// Sample a model's predicted class over a 2-D feature grid.
    Boundary(BoundaryArgs),
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Translate(args) => cmd_translate(args),
        Command::GenData(args) => cmd_gen_data(args),
        Command::Boundary(args) => cmd_boundary(args),
    }
}

// ---------------------------------------------------------------------------

#[derive(Args)]
struct TrainArgs {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Parallel restarts (defaults to the number of cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let experiment = config::resolve(config::load(&args.config)?)?;
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("building thread pool")?;
    }
    println!(
        "training `{}`: {} samples ({} test), {} restarts",
        experiment.name,
        experiment.train_set.len(),
        experiment.test_set.len(),
        experiment.restarts
    );

    let runs: Vec<_> = (0..experiment.restarts)
        .into_par_iter()
        .map(|i| {
            let opts = TrainOptions {
                seed: experiment.options.seed + i,
                ..experiment.options.clone()
            };
            let (spec, report) = train(&experiment.template, &experiment.train_set, &opts)?;
            let (accuracy, _) = evaluate(&spec, &experiment.test_set, experiment.eval_mode)?;
            Ok((spec, report, accuracy))
        })
        .collect::<qvc_core::Result<_>>()?;

    let mut accuracies: Vec<f64> = runs.iter().map(|(_, _, a)| *a).collect();
    accuracies.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let median_acc = accuracies[accuracies.len() / 2];
    let (best_spec, best_report, best_acc) = runs
        .iter()
        .min_by(|a, b| a.1.best_loss.partial_cmp(&b.1.best_loss).unwrap())
        .expect("at least one restart");

    let model_path = experiment.out_dir.join("model.json");
    best_spec.save(&model_path)?;
    let trace_path = experiment.out_dir.join("trace.csv");
    let mut csv = String::from("iteration,loss,shots\n");
    for (i, (loss, shots)) in best_report
        .trace
        .iter()
        .zip(&best_report.trace_shots)
        .enumerate()
    {
        csv.push_str(&format!("{i},{loss},{shots}\n"));
    }
    write_atomic(&trace_path, csv.as_bytes())?;

    let report_path = experiment.out_dir.join("report.json");
    let summary = serde_json::json!({
        "experiment": experiment.name,
        "restarts": experiment.restarts,
        "best": {
            "seed": best_report.seed,
            "training_loss": best_report.best_loss,
            "iterations": best_report.iterations,
            "total_shots": best_report.total_shots,
            "test_accuracy": best_acc,
        },
        "median_test_accuracy": median_acc,
        "restart_losses": runs.iter().map(|(_, r, _)| r.best_loss).collect::<Vec<_>>(),
    });
    write_atomic(&report_path, serde_json::to_string_pretty(&summary)?.as_bytes())?;

    let (_, matrix) = evaluate(best_spec, &experiment.test_set, experiment.eval_mode)?;
    println!(
        "best restart: seed {}, training loss {:.6}, total shots {}",
        best_report.seed, best_report.best_loss, best_report.total_shots
    );
    println!("test accuracy: best-loss model {best_acc:.4}, median over restarts {median_acc:.4}");
    println!("confusion matrix (rows = actual, columns = predicted):");
    print!("{matrix}");
    println!("model -> {}", model_path.display());
    println!("loss trace -> {}", trace_path.display());
    println!("report -> {}", report_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV dataset with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated feature column names.
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
    #[arg(long, default_value = "label")]
    label: String,
    /// Evaluate with finite shots instead of exact probabilities.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let spec = ModelSpec::load(&args.model)?;
    let feature_refs: Vec<&str> = args.features.iter().map(String::as_str).collect();
    let ds = data::load_csv(&args.data, &feature_refs, &args.label)?;
    let mode = match args.shots {
        Some(shots) => EvalMode::Sampled {
            shots,
            seed: args.seed,
        },
        None => EvalMode::Exact,
    };
    let (accuracy, matrix) = evaluate(&spec, &ds, mode)?;
    println!("accuracy: {accuracy:.4} on {} samples", ds.len());
    println!("confusion matrix (rows = actual, columns = predicted):");
    print!("{matrix}");
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Comma-separated input angles ω (required when the circuit has w-slots).
    #[arg(long, value_delimiter = ',')]
    omega: Vec<f64>,
    /// Comma-separated parameter angles θ (required when the circuit has t-slots).
    #[arg(long, value_delimiter = ',')]
    theta: Vec<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let circuit = qvc_core::parse_text(&std::fs::read_to_string(&args.circuit)?)?;
    let bound = circuit.bind(&args.omega, &args.theta)?;
    let dist = simulator::distribution(&bound)?;
    let mut csv = String::from("bitstring,probability\n");
    for (i, p) in dist.probabilities().iter().enumerate() {
        csv.push_str(&format!(
            "{},{p}\n",
            simulator::bitstring_of_index(i, dist.width())
        ));
    }
    match args.out {
        Some(path) => write_atomic(&path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Output circuit file (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the rewrite report JSON here (defaults to stderr).
    #[arg(long)]
    report: Option<PathBuf>,
}

fn cmd_optimize(args: OptimizeArgs) -> Result<()> {
    let circuit = qvc_core::parse_text(&std::fs::read_to_string(&args.circuit)?)?;
    let (optimized, report) = passes::optimize(&circuit);
    let text = qvc_core::to_text(&optimized);
    match args.out {
        Some(path) => write_atomic(&path, text.as_bytes())?,
        None => print!("{text}"),
    }
    let report_json = serde_json::to_string_pretty(&report)?;
    match args.report {
        Some(path) => write_atomic(&path, report_json.as_bytes())?,
        None => eprintln!("{report_json}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Args)]
struct TranslateArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Target gate set: cz, cnot or zz.
    #[arg(long)]
    target: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_translate(args: TranslateArgs) -> Result<()> {
    let circuit = qvc_core::parse_text(&std::fs::read_to_string(&args.circuit)?)?;
    let bound = circuit
        .try_into_bound()
        .context("translation needs a fully bound circuit (no w/t slots)")?;
    let target: TargetGateSet = args.target.parse()?;
    let translated = qvc_core::translate::translate(&bound, target)?;
    let text = qvc_core::bound_to_text(&translated);
    match args.out {
        Some(path) => write_atomic(&path, text.as_bytes())?,
        None => print!("{text}"),
    }
    let pulses = translated.pulse_count();
    eprintln!(
        "pulses: {} one-qubit, {} two-qubit",
        pulses.one_qubit, pulses.two_qubit
    );
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Args)]
struct GenDataArgs {
    /// Generator: xor or synth4.
    kind: String,
    #[arg(long, default_value_t = 20)]
    per_center: usize,
    /// Noise level; defaults to the calibrated value for the xor generator.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_gen_data(args: GenDataArgs) -> Result<()> {
    let ds = match args.kind.as_str() {
        "xor" => data::gen_gaussian_xor(
            args.per_center,
            args.sigma.unwrap_or_else(data::xor_sigma_star),
            data::XOR_CENTER_DISTANCE,
            args.seed,
        )?,
        "synth4" => data::gen_synthetic4(args.n, args.seed)?,
        other => bail!("unknown generator `{other}` (expected xor or synth4)"),
    };
    data::write_csv(&ds, &args.out)?;
    if let Some(meta) = &ds.metadata {
        let sidecar = args.out.with_extension("json");
        write_atomic(&sidecar, serde_json::to_string_pretty(meta)?.as_bytes())?;
        println!("wrote {} rows -> {} (+ {})", ds.len(), args.out.display(), sidecar.display());
    } else {
        println!("wrote {} rows -> {}", ds.len(), args.out.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct BoundaryArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = -2.0)]
    min: f64,
    #[arg(long, default_value_t = 2.0)]
    max: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_boundary(args: BoundaryArgs) -> Result<()> {
    let spec = ModelSpec::load(&args.model)?;
    if spec.circuit.num_inputs() != 2 {
        bail!(
            "boundary grids need a 2-feature model; this one takes {} features",
            spec.circuit.num_inputs()
        );
    }
    if args.steps == 0 {
        bail!("steps must be at least 1");
    }
    let coord = |i: usize| {
        if args.steps == 1 {
            (args.min + args.max) / 2.0
        } else {
            args.min + (args.max - args.min) * i as f64 / (args.steps - 1) as f64
        }
    };
    let mut csv = String::from("x0,x1,class,label\n");
    for i in 0..args.steps {
        for j in 0..args.steps {
            let x = [coord(i), coord(j)];
            let class = spec.predict_class(&x, EvalMode::Exact)?;
            csv.push_str(&format!(
                "{},{},{class},{}\n",
                x[0],
                x[1],
                spec.class_map.label(class)
            ));
        }
    }
    write_atomic(&args.out, csv.as_bytes())?;
    println!("wrote {} grid rows -> {}", args.steps * args.steps, args.out.display());
    Ok(())
}
