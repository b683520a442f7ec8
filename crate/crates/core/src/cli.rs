//! Command-line front end: `generate`, `train`, `eval`, `analyze-bias` and
//! `sinkhorn`.
//!
//! Run settings resolve as flags over a `key=value` config file over
//! defaults. Every `train` and `analyze-bias` run writes `manifest.txt`
//! holding the resolved settings, input paths with SHA-256 digests and
//! artifact paths; `--from-manifest` replays it.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::encoder::embedding_distance;
use crate::eval::{hit_at_k, mrr, precision_recall_f1, rank_of, Metrics};
use crate::io::{self, DatasetPaths};
use crate::kg::{AlignmentSet, KgPair, Provenance};
use crate::ot::{read_matrix, select_alignments, sinkhorn, write_matrix, CostMatrix, SinkhornConfig};
use crate::pipeline::{run_naive_baseline, run_upl, EnsembleMode, UplConfig, UplRun};
use crate::synth::{generate_pair, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "uplea", version, about = "Entity alignment with optimal-transport pseudo-labeling")]
pub struct Cli {
    /// Maximum worker threads.
    #[arg(long, global = true, env = "UPLEA_THREADS")]
    pub threads: Option<usize>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset with its ground truth.
    Generate(GenerateArgs),
    /// Train and pseudo-label, then evaluate on the test pairs.
    Train(TrainArgs),
    /// Score embeddings or predicted pairs against a test file.
    Eval(EvalArgs),
    /// Per-iteration pseudo-label error composition for both strategies.
    AnalyzeBias(BiasArgs),
    /// Solve a transport problem from a binary cost matrix.
    Sinkhorn(SinkhornArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = SynthConfig::default().n_entities)]
    pub entities: usize,
    #[arg(long, default_value_t = SynthConfig::default().n_relations)]
    pub relations: usize,
    #[arg(long, default_value_t = SynthConfig::default().avg_degree)]
    pub avg_degree: f64,
    /// Fraction of triplets dropped or rewired in the second graph.
    #[arg(long, default_value_t = SynthConfig::default().edge_perturbation)]
    pub perturbation: f64,
    #[arg(long, default_value_t = SynthConfig::default().feature_dim)]
    pub feature_dim: usize,
    /// Standard deviation of the feature noise.
    #[arg(long, default_value_t = SynthConfig::default().feature_noise)]
    pub noise: f64,
    #[arg(long, default_value_t = SynthConfig::default().seed_fraction)]
    pub seed_fraction: f64,
    #[arg(long, default_value_t = SynthConfig::default().rng_seed)]
    pub seed: u64,
}

/// Overrides for run settings; unset flags fall through to the config
/// file, the manifest or the defaults.
#[derive(Debug, Args, Default)]
pub struct SettingsArgs {
    /// `key=value` settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `upl` or `naive`.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Distance threshold of the naive strategy.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub models: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// `intersection` or `majority`.
    #[arg(long)]
    pub ensemble_mode: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sinkhorn_iterations: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repeats: Option<usize>,
}

impl SettingsArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        macro_rules! push {
            ($($field:ident => $key:literal),* $(,)?) => {
                $(if let Some(v) = &self.$field {
                    out.push(($key, v.to_string()));
                })*
            };
        }
        push!(
            strategy => "strategy",
            threshold => "threshold",
            models => "models",
            iterations => "iterations",
            ensemble_mode => "ensemble",
            lambda => "lambda",
            beta => "sinkhorn.beta",
            sinkhorn_iterations => "sinkhorn.max_iterations",
            tolerance => "sinkhorn.tolerance",
            margin => "train.margin",
            negatives => "train.negatives",
            dim => "train.dim",
            layers => "train.layers",
            epochs => "train.epochs",
            batch_size => "train.batch_size",
            lr => "train.learning_rate",
            seed => "seed",
            repeats => "repeats",
        );
        out
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory with the six conventional files.
    #[arg(long, required_unless_present = "from_manifest")]
    pub data: Option<PathBuf>,
    /// Ground-truth pairs, used only for the error decomposition.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, required_unless_present = "from_manifest")]
    pub out: Option<PathBuf>,
    /// Replay the settings and inputs of an earlier run.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct BiasArgs {
    #[arg(long, required_unless_present = "from_manifest")]
    pub data: Option<PathBuf>,
    #[arg(long, required_unless_present = "from_manifest")]
    pub truth: Option<PathBuf>,
    #[arg(long, required_unless_present = "from_manifest")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Test pairs.
    #[arg(long)]
    pub test: PathBuf,
    /// Embeddings of the first and second graph.
    #[arg(long, num_args = 2, value_names = ["EMB1", "EMB2"])]
    pub embeddings: Option<Vec<PathBuf>>,
    /// Seed pairs whose right entities are removed from the candidate pool.
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    /// Predicted pairs for precision, recall and F1.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Dataset directory resolving entity labels when no embeddings are
    /// given.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// CSV output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SinkhornArgs {
    /// Binary cost matrix.
    #[arg(long)]
    pub cost: PathBuf,
    /// Coupling matrix output, same format.
    #[arg(long)]
    pub coupling: PathBuf,
    /// Selected `row<TAB>col` index pairs.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, default_value_t = SinkhornConfig::default().beta)]
    pub beta: f64,
    #[arg(long, default_value_t = SinkhornConfig::default().max_iterations)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = SinkhornConfig::default().tolerance)]
    pub tolerance: f64,
    /// Plain scaling updates instead of log-domain updates.
    #[arg(long)]
    pub scaling: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Upl,
    Naive,
}

/// Fully resolved settings of a `train` or `analyze-bias` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub upl: UplConfig,
    pub strategy: Strategy,
    /// Required by the naive strategy.
    pub threshold: Option<f64>,
    pub repeats: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            upl: UplConfig::default(),
            strategy: Strategy::Upl,
            threshold: None,
            repeats: 1,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> anyhow::Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("invalid value `{value}` for `{key}`: {e}"))
}

impl RunSettings {
    pub fn set(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        let u = &mut self.upl;
        match key {
            "strategy" => {
                self.strategy = match value {
                    "upl" => Strategy::Upl,
                    "naive" => Strategy::Naive,
                    _ => bail!("unknown strategy `{value}`"),
                }
            }
            "threshold" => self.threshold = if value.is_empty() { None } else { Some(parse(key, value)?) },
            "repeats" => self.repeats = parse(key, value)?,
            "models" => u.models = parse(key, value)?,
            "iterations" => u.iterations = parse(key, value)?,
            "ensemble" => u.ensemble = value.parse::<EnsembleMode>()?,
            "lambda" => u.lambda = parse(key, value)?,
            "seed" => u.seed = parse(key, value)?,
            "train.margin" => u.train.margin = parse(key, value)?,
            "train.negatives" => u.train.negatives = parse(key, value)?,
            "train.dim" => u.train.dim = parse(key, value)?,
            "train.layers" => u.train.layers = parse(key, value)?,
            "train.epochs" => u.train.epochs = parse(key, value)?,
            "train.batch_size" => u.train.batch_size = parse(key, value)?,
            "train.learning_rate" => u.train.learning_rate = parse(key, value)?,
            "sinkhorn.beta" => u.sinkhorn.beta = parse(key, value)?,
            "sinkhorn.max_iterations" => u.sinkhorn.max_iterations = parse(key, value)?,
            "sinkhorn.tolerance" => u.sinkhorn.tolerance = parse(key, value)?,
            "sinkhorn.log_domain" => u.sinkhorn.log_domain = parse(key, value)?,
            "sinkhorn.check_every" => u.sinkhorn.check_every = parse(key, value)?,
            _ => bail!("unknown setting `{key}`"),
        }
        Ok(())
    }

    /// Every setting as `(key, value)`, values round-tripping through
    /// [`RunSettings::set`].
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let u = &self.upl;
        vec![
            ("strategy", match self.strategy {
                Strategy::Upl => "upl".into(),
                Strategy::Naive => "naive".into(),
            }),
            ("threshold", self.threshold.map(|t| t.to_string()).unwrap_or_default()),
            ("repeats", self.repeats.to_string()),
            ("models", u.models.to_string()),
            ("iterations", u.iterations.to_string()),
            ("ensemble", u.ensemble.to_string()),
            ("lambda", u.lambda.to_string()),
            ("seed", u.seed.to_string()),
            ("train.margin", u.train.margin.to_string()),
            ("train.negatives", u.train.negatives.to_string()),
            ("train.dim", u.train.dim.to_string()),
            ("train.layers", u.train.layers.to_string()),
            ("train.epochs", u.train.epochs.to_string()),
            ("train.batch_size", u.train.batch_size.to_string()),
            ("train.learning_rate", u.train.learning_rate.to_string()),
            ("sinkhorn.beta", u.sinkhorn.beta.to_string()),
            ("sinkhorn.max_iterations", u.sinkhorn.max_iterations.to_string()),
            ("sinkhorn.tolerance", u.sinkhorn.tolerance.to_string()),
            ("sinkhorn.log_domain", u.sinkhorn.log_domain.to_string()),
            ("sinkhorn.check_every", u.sinkhorn.check_every.to_string()),
        ]
    }

    fn validate(&self) -> anyhow::Result<()> {
        self.upl.validate()?;
        ensure!(self.repeats >= 1, "repeats must be at least 1");
        if self.strategy == Strategy::Naive {
            ensure!(self.threshold.is_some(), "the naive strategy needs --threshold");
        }
        Ok(())
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str, origin: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", origin.display(), n + 1))?;
        out.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(out)
}

fn read_key_values(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_key_values(&text, path)
}

/// Hex SHA-256 of a file's contents.
pub fn file_digest(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Resolved settings plus inputs and outputs of one run, written as
/// sorted `key=value` lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub command: String,
    pub settings: Vec<(&'static str, String)>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub artifacts: BTreeMap<String, PathBuf>,
}

impl RunManifest {
    pub fn render(&self) -> anyhow::Result<String> {
        let mut lines = BTreeMap::new();
        lines.insert("command".to_owned(), self.command.clone());
        for (k, v) in &self.settings {
            lines.insert(format!("config.{k}"), v.clone());
        }
        for (k, p) in &self.inputs {
            lines.insert(format!("input.{k}"), p.display().to_string());
            lines.insert(format!("digest.{k}"), file_digest(p)?);
        }
        for (k, p) in &self.artifacts {
            lines.insert(format!("artifact.{k}"), p.display().to_string());
        }
        let mut out = String::new();
        for (k, v) in lines {
            let _ = writeln!(out, "{k}={v}");
        }
        Ok(out)
    }
}

/// A manifest read back for replay.
struct Replay {
    settings: BTreeMap<String, String>,
    inputs: BTreeMap<String, PathBuf>,
    out: Option<PathBuf>,
}

fn load_replay(path: &Path, command: &str) -> anyhow::Result<Replay> {
    let kv = read_key_values(path)?;
    let found = kv.get("command").map(String::as_str).unwrap_or("");
    ensure!(found == command, "{} is a `{found}` manifest, not `{command}`", path.display());
    let mut settings = BTreeMap::new();
    let mut inputs = BTreeMap::new();
    for (k, v) in &kv {
        if let Some(key) = k.strip_prefix("config.") {
            settings.insert(key.to_owned(), v.clone());
        } else if let Some(key) = k.strip_prefix("input.") {
            let p = PathBuf::from(v);
            if let Some(expected) = kv.get(&format!("digest.{key}")) {
                let actual = file_digest(&p)?;
                ensure!(&actual == expected, "input `{key}` ({}) changed since the manifest was written", p.display());
            }
            inputs.insert(key.to_owned(), p);
        }
    }
    Ok(Replay {
        settings,
        inputs,
        out: kv.get("artifact.out").map(PathBuf::from),
    })
}

fn resolve_settings(replay: Option<&Replay>, args: &SettingsArgs) -> anyhow::Result<RunSettings> {
    let mut s = RunSettings::default();
    if let Some(r) = replay {
        for (k, v) in &r.settings {
            s.set(k, v)?;
        }
    }
    if let Some(path) = &args.config {
        for (k, v) in read_key_values(path)? {
            s.set(&k, &v).with_context(|| format!("in {}", path.display()))?;
        }
    }
    for (k, v) in args.overrides() {
        s.set(k, &v)?;
    }
    s.validate()?;
    Ok(s)
}

/// Parses the process arguments and runs the chosen subcommand.
pub fn run() -> anyhow::Result<()> {
    execute(Cli::parse())
}

/// Like [`run`] with explicit arguments; parse failures are returned as
/// errors.
pub fn run_from<I, T>(args: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    execute(Cli::try_parse_from(args)?)
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        ensure!(n >= 1, "--threads must be at least 1");
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    pool.install(|| match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::AnalyzeBias(a) => cmd_analyze_bias(&a),
        Command::Sinkhorn(a) => cmd_sinkhorn(&a),
    })
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_generate(args: &GenerateArgs) -> anyhow::Result<()> {
    let cfg = SynthConfig {
        n_entities: args.entities,
        n_relations: args.relations,
        avg_degree: args.avg_degree,
        edge_perturbation: args.perturbation,
        feature_dim: args.feature_dim,
        feature_noise: args.noise,
        seed_fraction: args.seed_fraction,
        rng_seed: args.seed,
    };
    let (pair, truth) = generate_pair(&cfg)?;
    create_dir(&args.out)?;
    io::write_dataset(&DatasetPaths::in_dir(&args.out), &pair)?;
    io::write_alignments(
        &DatasetPaths::truth_in_dir(&args.out),
        &truth,
        pair.g1.entities(),
        pair.g2.entities(),
    )?;
    println!(
        "wrote {} entities per graph, {} seeds and {} test pairs to {}",
        cfg.n_entities,
        pair.seeds().len(),
        pair.test().len(),
        args.out.display()
    );
    Ok(())
}

struct Inputs {
    paths: DatasetPaths,
    truth: Option<PathBuf>,
}

impl Inputs {
    fn from_replay(r: &Replay) -> anyhow::Result<Self> {
        let get = |k: &str| {
            r.inputs
                .get(k)
                .cloned()
                .ok_or_else(|| anyhow!("manifest lacks input `{k}`"))
        };
        Ok(Self {
            paths: DatasetPaths {
                triplets1: get("triplets1")?,
                triplets2: get("triplets2")?,
                seeds: get("seeds")?,
                test: get("test")?,
                features1: get("features1")?,
                features2: get("features2")?,
            },
            truth: r.inputs.get("truth").cloned(),
        })
    }

    fn as_map(&self) -> BTreeMap<String, PathBuf> {
        let mut m: BTreeMap<String, PathBuf> =
            self.paths.iter().map(|(k, p)| (k.to_owned(), p.to_owned())).collect();
        if let Some(t) = &self.truth {
            m.insert("truth".into(), t.clone());
        }
        m
    }

    fn load(&self) -> anyhow::Result<(KgPair, Option<AlignmentSet>)> {
        let pair = io::ingest_dataset(&self.paths)?;
        let truth = match &self.truth {
            Some(p) => Some(io::read_alignment_file(
                p,
                pair.g1.entities(),
                pair.g2.entities(),
                Provenance::Truth,
                true,
            )?),
            None => None,
        };
        Ok((pair, truth))
    }
}

fn resolve_inputs(
    replay: Option<&Replay>,
    data: Option<&PathBuf>,
    truth: Option<&PathBuf>,
    out: Option<&PathBuf>,
) -> anyhow::Result<(Inputs, PathBuf)> {
    let mut inputs = match (data, replay) {
        (Some(d), _) => Inputs {
            paths: DatasetPaths::in_dir(d),
            truth: None,
        },
        (None, Some(r)) => Inputs::from_replay(r)?,
        (None, None) => bail!("--data is required"),
    };
    if let Some(t) = truth {
        inputs.truth = Some(t.clone());
    }
    let out = out
        .cloned()
        .or_else(|| replay.and_then(|r| r.out.clone()))
        .ok_or_else(|| anyhow!("--out is required"))?;
    Ok((inputs, out))
}

fn run_strategy(
    pair: KgPair,
    settings: &RunSettings,
    upl: &UplConfig,
    truth: Option<&AlignmentSet>,
) -> anyhow::Result<UplRun> {
    Ok(match settings.strategy {
        Strategy::Upl => run_upl(pair, upl, truth)?,
        Strategy::Naive => run_naive_baseline(pair, upl, settings.threshold.expect("validated"), truth)?,
    })
}

fn write_run_artifacts(dir: &Path, pair: &KgPair, run: &UplRun) -> anyhow::Result<()> {
    create_dir(dir)?;
    let (e1, e2) = (pair.g1.entities(), pair.g2.entities());
    io::write_vectors(&dir.join("embeddings_1.tsv"), e1, run.table.left_block())?;
    io::write_vectors(&dir.join("embeddings_2.tsv"), e2, run.table.right_block())?;
    io::write_alignments(&dir.join("alignments.tsv"), &run.alignment, e1, e2)?;
    io::write_alignments(&dir.join("predictions.tsv"), &run.inference.selected, e1, e2)?;
    write_text(&dir.join("report.csv"), &run.report.to_csv())?;
    write_text(&dir.join("summary.txt"), &run.report.summary())?;
    Ok(())
}

fn metrics_csv(rows: &[(String, Metrics)]) -> String {
    let mut out = format!("run,{}\n", Metrics::CSV_HEADER);
    for (name, m) in rows {
        let _ = writeln!(out, "{name},{}", m.csv_row());
    }
    let all: Vec<Metrics> = rows.iter().map(|(_, m)| *m).collect();
    if let Some(mean) = Metrics::mean(&all) {
        let _ = writeln!(out, "mean,{}", mean.csv_row());
    }
    out
}

pub fn cmd_train(args: &TrainArgs) -> anyhow::Result<()> {
    let replay = args.from_manifest.as_deref().map(|p| load_replay(p, "train")).transpose()?;
    let settings = resolve_settings(replay.as_ref(), &args.settings)?;
    let (inputs, out) = resolve_inputs(replay.as_ref(), args.data.as_ref(), args.truth.as_ref(), args.out.as_ref())?;
    let (pair, truth) = inputs.load()?;
    create_dir(&out)?;

    let mut artifacts = BTreeMap::new();
    let mut rows = Vec::new();
    for r in 0..settings.repeats {
        let upl = UplConfig {
            seed: settings.upl.seed.wrapping_add(r as u64),
            ..settings.upl.clone()
        };
        let run = run_strategy(pair.clone(), &settings, &upl, truth.as_ref())?;
        let dir = if settings.repeats == 1 {
            out.clone()
        } else {
            out.join(format!("run_{r}"))
        };
        write_run_artifacts(&dir, &pair, &run)?;
        if settings.repeats > 1 {
            artifacts.insert(format!("run_{r}"), dir);
        }
        print!("{}", run.report.summary());
        if let Some(m) = run.report.final_metrics {
            rows.push((r.to_string(), m));
        }
    }
    if rows.is_empty() {
        log::warn!("no test pairs; metrics are not available");
    }
    write_text(&out.join("metrics.csv"), &metrics_csv(&rows))?;
    if let Some(mean) = Metrics::mean(&rows.iter().map(|(_, m)| *m).collect::<Vec<_>>()) {
        write_text(&out.join("metrics.txt"), &mean.to_string())?;
    }
    artifacts.insert("out".into(), out.clone());
    let manifest = RunManifest {
        command: "train".into(),
        settings: settings.entries(),
        inputs: inputs.as_map(),
        artifacts,
    };
    write_text(&out.join("manifest.txt"), &manifest.render()?)?;
    Ok(())
}

pub fn cmd_analyze_bias(args: &BiasArgs) -> anyhow::Result<()> {
    let replay = args
        .from_manifest
        .as_deref()
        .map(|p| load_replay(p, "analyze-bias"))
        .transpose()?;
    let settings = resolve_settings(replay.as_ref(), &args.settings)?;
    let threshold = settings
        .threshold
        .ok_or_else(|| anyhow!("analyze-bias needs --threshold for the naive strategy"))?;
    let (inputs, out) = resolve_inputs(replay.as_ref(), args.data.as_ref(), args.truth.as_ref(), args.out.as_ref())?;
    ensure!(inputs.truth.is_some(), "analyze-bias needs --truth");
    let (pair, truth) = inputs.load()?;
    create_dir(&out)?;

    let naive = run_naive_baseline(pair.clone(), &settings.upl, threshold, truth.as_ref())?;
    let upl = run_upl(pair, &settings.upl, truth.as_ref())?;
    write_text(&out.join("bias_naive.csv"), &naive.report.to_csv())?;
    write_text(&out.join("bias_upl.csv"), &upl.report.to_csv())?;
    println!(
        "conflicted misalignments: naive {}, upl {}",
        naive.report.total_conflicted(),
        upl.report.total_conflicted()
    );
    let mut artifacts = BTreeMap::new();
    artifacts.insert("out".into(), out.clone());
    let manifest = RunManifest {
        command: "analyze-bias".into(),
        settings: settings.entries(),
        inputs: inputs.as_map(),
        artifacts,
    };
    write_text(&out.join("manifest.txt"), &manifest.render()?)?;
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> anyhow::Result<()> {
    ensure!(
        args.embeddings.is_some() || args.pred.is_some(),
        "eval needs --embeddings and/or --pred"
    );
    let (left, right, vectors) = match (&args.embeddings, &args.data) {
        (Some(e), _) => {
            let (l, v1) = io::read_vectors(&e[0])?;
            let (r, v2) = io::read_vectors(&e[1])?;
            ensure!(v1.ncols() == v2.ncols(), "embedding dimensions differ");
            (l, r, Some((v1, v2)))
        }
        (None, Some(d)) => {
            let pair = io::ingest_dataset(&DatasetPaths::in_dir(d))?;
            (pair.g1.entities().clone(), pair.g2.entities().clone(), None)
        }
        (None, None) => bail!("--pred without --embeddings needs --data to resolve labels"),
    };
    let test = io::read_alignment_file(&args.test, &left, &right, Provenance::Truth, false)?;
    ensure!(!test.is_empty(), "the test file is empty");

    let mut keys: Vec<(&str, f64)> = Vec::new();
    if let Some((v1, v2)) = &vectors {
        let excluded = match &args.seeds {
            Some(p) => io::read_alignment_file(p, &left, &right, Provenance::Seed, false)?.rights(),
            None => Default::default(),
        };
        let candidates: Vec<usize> = (0..right.len()).filter(|e| !excluded.contains(e)).collect();
        let ranks = rank_by_distance(v1, v2, &test, &candidates);
        keys.push(("hit_at_1", hit_at_k(&ranks, 1)?));
        keys.push(("hit_at_10", hit_at_k(&ranks, 10)?));
        keys.push(("mrr", mrr(&ranks)?));
    }
    if let Some(p) = &args.pred {
        let pred = io::read_alignment_file(p, &left, &right, Provenance::Pseudo(0), false)?;
        if pred.is_empty() {
            log::warn!("{} holds no predictions", p.display());
        }
        let c = precision_recall_f1(&pred, &test)?;
        keys.push(("precision", c.precision));
        keys.push(("recall", c.recall));
        keys.push(("f1", c.f1));
    }
    let mut header = Vec::new();
    let mut row = Vec::new();
    for (k, v) in &keys {
        println!("{k}={v:.6}");
        header.push(*k);
        row.push(format!("{v:.6}"));
    }
    if let Some(path) = &args.csv {
        write_text(path, &format!("{}\n{}\n", header.join(","), row.join(",")))?;
    }
    Ok(())
}

/// 1-based rank of each test pair's right entity among `candidates` by L1
/// distance; a counterpart outside the pool ranks last.
pub fn rank_by_distance(
    left: &ndarray::Array2<f64>,
    right: &ndarray::Array2<f64>,
    test: &AlignmentSet,
    candidates: &[usize],
) -> Vec<usize> {
    test.pairs()
        .map(|p| {
            let scores: Vec<f64> = candidates
                .iter()
                .map(|&c| embedding_distance(left.row(p.left), right.row(c)))
                .collect();
            rank_of(&scores, candidates, p.right).unwrap_or(candidates.len() + 1)
        })
        .collect()
}

pub fn cmd_sinkhorn(args: &SinkhornArgs) -> anyhow::Result<()> {
    let values = read_matrix(&args.cost)?;
    let cfg = SinkhornConfig {
        beta: args.beta,
        max_iterations: args.max_iterations,
        tolerance: args.tolerance,
        log_domain: !args.scaling,
        ..SinkhornConfig::default()
    };
    let out = sinkhorn(&CostMatrix::from_values(values)?, &cfg)?;
    if !out.converged {
        log::warn!(
            "sinkhorn stopped after {} iterations with marginal violation {:.3e}",
            out.iterations,
            out.violation
        );
    }
    write_matrix(&args.coupling, out.coupling.values())?;
    let selected = select_alignments(&out.coupling)?;
    let mut text = String::new();
    for p in selected.pairs() {
        let _ = writeln!(text, "{}\t{}", p.left, p.right);
    }
    write_text(&args.pairs, &text)?;
    println!(
        "iterations={}\nviolation={:.3e}\nconverged={}\nselected={}",
        out.iterations,
        out.violation,
        out.converged,
        selected.len()
    );
    Ok(())
}
