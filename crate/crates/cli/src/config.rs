//! Experiment configuration: one TOML file per experiment.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use qvc_core::circuit::Preset;
use qvc_core::encoding::{Encoding, EncoderConfig};
use qvc_core::model::ModelTemplate;
use qvc_core::train::{OptimizerKind, ShotSchedule, TrainMode, TrainOptions};
use qvc_core::{data, ClassMap, Circuit};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub data: DataConfig,
    pub circuit: CircuitConfig,
    pub classes: ClassesConfig,
    #[serde(default)]
    pub encoder: EncoderSection,
    pub train: TrainSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub source: String, // csv | xor | synth4
    // csv
    pub path: Option<PathBuf>,
    pub features: Option<Vec<String>>,
    pub label: Option<String>,
    // common
    pub test_fraction: Option<f64>,
    pub split_seed: Option<u64>,
    // xor generator
    pub per_center: Option<usize>,
    pub sigma: Option<f64>,
    pub center_distance: Option<f64>,
    pub gen_seed: Option<u64>,
    pub test_points: Option<usize>,
    pub test_seed: Option<u64>,
    // synth4 generator
    pub n: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub preset: Option<String>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassesConfig {
    pub map: Vec<(String, String)>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EncoderSection {
    pub mode: Option<String>, // standard | identity
    pub alpha: Option<f64>,
    pub q: Option<f64>,
    /// Drop training samples with any standard score beyond q (prediction
    /// always answers every query; this only filters the training set).
    #[serde(default)]
    pub drop_clamped: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub mode: Option<String>,      // exact | sampled
    pub optimizer: Option<String>, // quasi-newton | derivative-free
    pub restarts: u64,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub grad_step: Option<f64>,
    pub initial_step: Option<f64>,
    pub schedule: Option<Vec<(u64, u64)>>,
    pub final_shots: Option<u64>,
    pub eval_shots: Option<u64>,
    pub eval_seed: Option<u64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

pub struct Experiment {
    pub name: String,
    pub train_set: data::Dataset,
    pub test_set: data::Dataset,
    pub template: ModelTemplate,
    pub options: TrainOptions,
    pub restarts: u64,
    pub eval_mode: qvc_core::EvalMode,
    pub out_dir: PathBuf,
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let config: ExperimentConfig = toml::from_str(&text).context("parsing config")?;
    Ok(config)
}

/// Resolve a config into datasets, a model template and training options,
/// verifying all cross-field invariants before any compute starts.
pub fn resolve(config: ExperimentConfig) -> Result<Experiment> {
    if config.train.restarts == 0 {
        bail!("train.restarts must be at least 1");
    }

    let circuit = load_circuit(&config.circuit)?;
    let class_map = ClassMap::new(config.classes.map.clone())
        .context("classes.map")?;
    if class_map.width() != circuit.width() {
        bail!(
            "class bitstrings have length {} but the circuit has {} qubits",
            class_map.width(),
            circuit.width()
        );
    }

    let (train_set, test_set) = load_datasets(&config.data)?;
    if train_set.dim() != circuit.num_inputs() {
        bail!(
            "dataset has {} features but the circuit expects {} input angles",
            train_set.dim(),
            circuit.num_inputs()
        );
    }
    for name in &train_set.class_names {
        if class_map.position_of_label(name).is_none() {
            bail!("dataset class `{name}` is missing from classes.map");
        }
    }

    let encoder_mode = config.encoder.mode.as_deref().unwrap_or("standard");
    let encoder_config = EncoderConfig::new(
        config.encoder.alpha.unwrap_or(0.1),
        config.encoder.q.unwrap_or(3.0),
    )?;
    let (encoding, train_set) = match encoder_mode {
        "identity" => (Encoding::Identity, train_set),
        "standard" => {
            let encoding = Encoding::fit_standard(&train_set.features, encoder_config)?;
            let train_set = if config.encoder.drop_clamped {
                drop_clamped(&train_set, &encoding, encoder_config.q)
            } else {
                train_set
            };
            (encoding, train_set)
        }
        other => bail!("unknown encoder.mode `{other}` (expected standard or identity)"),
    };

    let mode = match config.train.mode.as_deref().unwrap_or("exact") {
        "exact" => TrainMode::Exact,
        "sampled" => {
            let schedule = ShotSchedule::new(
                config.train.schedule.as_deref().unwrap_or(&[(20, 250), (50, 500)]),
                config.train.final_shots.unwrap_or(750),
            )?;
            TrainMode::Sampled { schedule }
        }
        other => bail!("unknown train.mode `{other}` (expected exact or sampled)"),
    };
    let optimizer = match config.train.optimizer.as_deref().unwrap_or(match mode {
        TrainMode::Exact => "quasi-newton",
        TrainMode::Sampled { .. } => "derivative-free",
    }) {
        "quasi-newton" => OptimizerKind::QuasiNewton,
        "derivative-free" => OptimizerKind::DerivativeFree,
        other => bail!("unknown train.optimizer `{other}`"),
    };
    if matches!(mode, TrainMode::Sampled { .. }) && optimizer == OptimizerKind::QuasiNewton {
        bail!("sampled mode requires the derivative-free optimizer");
    }

    let defaults = TrainOptions::default();
    let options = TrainOptions {
        mode,
        optimizer,
        max_iters: config.train.max_iters.unwrap_or(150),
        seed: config.train.seed.unwrap_or(0),
        grad_step: config.train.grad_step.unwrap_or(defaults.grad_step),
        qn_tolerance: defaults.qn_tolerance,
        df_initial_step: config.train.initial_step.unwrap_or(defaults.df_initial_step),
    };

    let eval_mode = match (config.train.eval_shots, config.train.eval_seed) {
        (Some(shots), seed) => qvc_core::EvalMode::Sampled {
            shots,
            seed: seed.unwrap_or(0),
        },
        _ => qvc_core::EvalMode::Exact,
    };

    let out_dir = config
        .output
        .dir
        .or_else(|| std::env::var_os("QVC_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
        .join(&config.name);

    let template = ModelTemplate {
        circuit,
        class_map,
        encoding,
    };
    Ok(Experiment {
        name: config.name,
        train_set,
        test_set,
        template,
        options,
        restarts: config.train.restarts,
        eval_mode,
        out_dir,
    })
}

fn load_circuit(config: &CircuitConfig) -> Result<Circuit> {
    match (&config.preset, &config.file) {
        (Some(name), None) => {
            let preset: Preset = name.parse()?;
            Ok(qvc_core::preset(preset))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading circuit {}", path.display()))?;
            Ok(qvc_core::parse_text(&text)?)
        }
        _ => bail!("circuit needs exactly one of `preset` or `file`"),
    }
}

fn load_datasets(config: &DataConfig) -> Result<(data::Dataset, data::Dataset)> {
    match config.source.as_str() {
        "csv" => {
            let path = config.path.as_ref().context("data.path required for csv")?;
            let features = config.features.as_ref().context("data.features required")?;
            let feature_refs: Vec<&str> = features.iter().map(String::as_str).collect();
            let label = config.label.as_deref().unwrap_or("label");
            let ds = data::load_csv(path, &feature_refs, label)?;
            let fraction = config.test_fraction.unwrap_or(0.4);
            let seed = config.split_seed.unwrap_or(0);
            Ok(data::stratified_split(&ds, fraction, seed)?)
        }
        "xor" => {
            let sigma = config.sigma.unwrap_or_else(data::xor_sigma_star);
            let a = config.center_distance.unwrap_or(data::XOR_CENTER_DISTANCE);
            let train = data::gen_gaussian_xor(
                config.per_center.unwrap_or(20),
                sigma,
                a,
                config.gen_seed.unwrap_or(42),
            )?;
            let test = data::gen_gaussian_xor(
                config.test_points.unwrap_or(100_000) / 4,
                sigma,
                a,
                config.test_seed.unwrap_or(542),
            )?;
            Ok((train, test))
        }
        "synth4" => {
            let ds = data::gen_synthetic4(
                config.n.unwrap_or(5000),
                config.gen_seed.unwrap_or(0),
            )?;
            let fraction = config.test_fraction.unwrap_or(0.4);
            let seed = config.split_seed.unwrap_or(0);
            Ok(data::stratified_split(&ds, fraction, seed)?)
        }
        other => bail!("unknown data.source `{other}` (expected csv, xor or synth4)"),
    }
}

fn drop_clamped(ds: &data::Dataset, encoding: &Encoding, q: f64) -> data::Dataset {
    let Encoding::Standard { stats, .. } = encoding else {
        return ds.clone();
    };
    let keep: Vec<usize> = (0..ds.len())
        .filter(|&i| {
            ds.features[i]
                .iter()
                .zip(stats.mean().iter().zip(stats.std()))
                .all(|(x, (m, s))| ((x - m) / s).abs() <= q)
        })
        .collect();
    data::Dataset {
        features: keep.iter().map(|&i| ds.features[i].clone()).collect(),
        labels: keep.iter().map(|&i| ds.labels[i]).collect(),
        class_names: ds.class_names.clone(),
        metadata: ds.metadata.clone(),
    }
}
