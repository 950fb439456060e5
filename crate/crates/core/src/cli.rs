//! Command-line front end. Flags override an optional key=value config
//! file, which overrides built-in defaults; the fully resolved
//! configuration of every run is written to `run_manifest.json` in the
//! output directory, and `replay` re-executes a manifest verbatim so
//! outputs can be reproduced byte for byte.

use crate::data::{
    generate_synthetic, load_cohort, save_cohort, IndividualSeries, SyntheticSpec,
};
use crate::experiments::{
    export_graphs, run_experiment_a, run_experiment_b, run_experiment_c, write_boxplot_csv,
    write_grid_csv, write_transfer_csv, ExperimentPlan,
};
use crate::graphs::{load_graph, save_graph, Metric};
use crate::models::{save_checkpoint, Family, Forecaster, ModelConfig};
use crate::seed;
use crate::training::{evaluate, train, TrainConfig};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Usage problems exit 2; runtime failures exit 1 with one line on stderr.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

macro_rules! runtime_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Runtime(e.to_string())
            }
        }
    )*};
}
runtime_from!(
    crate::data::DataError,
    crate::graphs::GraphError,
    crate::models::ModelError,
    crate::training::TrainError,
    crate::experiments::ExperimentError,
    std::io::Error,
    serde_json::Error,
    csv::Error
);

#[derive(Parser)]
#[command(
    name = "ema-gnn",
    about = "Per-individual multivariate time-series forecasting with graph neural networks",
    version
)]
struct Cli {
    /// key=value file supplying defaults for any long flag of the chosen
    /// subcommand; explicit flags win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort with planted interaction graphs
    Generate(GenerateArgs),
    /// Build similarity graphs from a cohort, one per individual
    Graph(GraphArgs),
    /// Train one forecaster per individual and record test MSE
    Train(TrainArgs),
    /// Run experiment a, b, or c and write its report tables
    Experiment(ExperimentArgs),
    /// Summarize a cohort or graph file
    Inspect(InspectArgs),
    /// Re-execute a previous run from its manifest
    Replay(ReplayArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// output cohort CSV path (a JSON sidecar is written next to it)
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n_individuals: Option<usize>,
    #[arg(long)]
    n_vars: Option<usize>,
    #[arg(long)]
    n_timepoints: Option<usize>,
    /// planted-graph edge density in (0, 1]
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    missing_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// also export each individual's planted adjacency here
    #[arg(long)]
    planted_dir: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    /// cohort CSV produced by `generate` (or matching its format)
    #[arg(long, value_name = "COHORT_CSV")]
    input: PathBuf,
    /// euc | knn | dtw | corr | rand
    #[arg(long)]
    metric: String,
    #[arg(long)]
    gdt: Option<f64>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_name = "COHORT_CSV")]
    input: PathBuf,
    /// lstm | rgcn_att | st_att_cheb | graph_learn
    #[arg(long)]
    family: String,
    /// graph metric for graph-consuming families
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    gdt: Option<f64>,
    #[arg(long)]
    seq_len: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    /// gradient-norm clip; 0 disables
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// restrict to one individual id
    #[arg(long)]
    individual: Option<String>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// a | b | c
    #[arg(long)]
    which: String,
    /// cohort CSV; omitted → a synthetic cohort is generated
    #[arg(long, value_name = "COHORT_CSV")]
    input: Option<PathBuf>,
    /// synthetic cohort size when no input is given
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    gdt: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    n_random_repeats: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    /// cohort CSV (with sidecar) or graph CSV
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// run_manifest.json from a previous run
    #[arg(long)]
    manifest: PathBuf,
}

/// Fully resolved run configuration; serialized into the manifest and
/// sufficient to reproduce the run exactly.
#[derive(Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
enum Resolved {
    Generate(GenerateCfg),
    Graph(GraphCfg),
    Train(TrainCfg),
    Experiment(ExperimentCfg),
}

#[derive(Serialize, Deserialize)]
struct GenerateCfg {
    out: PathBuf,
    spec: SyntheticSpec,
    planted_dir: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct GraphCfg {
    input: PathBuf,
    metric: String,
    gdt: f64,
    out_dir: PathBuf,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct TrainCfg {
    input: PathBuf,
    family: String,
    metric: String,
    gdt: f64,
    seq_len: usize,
    epochs: usize,
    lr: f64,
    hidden: usize,
    dropout: f64,
    clip_norm: f64,
    seed: u64,
    individual: Option<String>,
    out_dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct ExperimentCfg {
    which: String,
    input: Option<PathBuf>,
    n: usize,
    gdt: f64,
    epochs: usize,
    lr: f64,
    hidden: usize,
    seed: u64,
    workers: usize,
    n_random_repeats: usize,
    out_dir: PathBuf,
}

/// Entry point: parse, resolve, dispatch; returns the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let file_cfg = match cli.config.as_deref().map(read_config_file).transpose() {
        Ok(m) => m.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match dispatch(cli.command, &file_cfg) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

fn dispatch(command: Command, file_cfg: &BTreeMap<String, String>) -> Result<(), CliError> {
    let resolved = match command {
        Command::Generate(a) => resolve_generate(a, file_cfg)?,
        Command::Graph(a) => resolve_graph(a, file_cfg)?,
        Command::Train(a) => resolve_train(a, file_cfg)?,
        Command::Experiment(a) => resolve_experiment(a, file_cfg)?,
        Command::Inspect(a) => return inspect(&a.input),
        Command::Replay(a) => {
            let text = std::fs::read_to_string(&a.manifest)?;
            serde_json::from_str(&text)?
        }
    };
    execute(&resolved)
}

fn execute(resolved: &Resolved) -> Result<(), CliError> {
    match resolved {
        Resolved::Generate(c) => execute_generate(c)?,
        Resolved::Graph(c) => execute_graph(c)?,
        Resolved::Train(c) => execute_train(c)?,
        Resolved::Experiment(c) => execute_experiment(c)?,
    }
    Ok(())
}

// ---- shared helpers -------------------------------------------------------

fn require_file(path: &Path) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::Runtime(format!(
            "input file {} does not exist",
            path.display()
        )));
    }
    Ok(())
}

// ---- config file handling -------------------------------------------------

fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read --config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "--config {} line {}: expected key=value",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Flag wins, then the config file, then the default.
fn pick<T: std::str::FromStr>(
    flag: Option<T>,
    file_cfg: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file_cfg.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|_| CliError::Usage(format!("config key {key}: invalid value {raw:?}"))),
        None => Ok(default),
    }
}

fn check_keys(file_cfg: &BTreeMap<String, String>, allowed: &[&str]) -> Result<(), CliError> {
    for key in file_cfg.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "config key {key} is not recognized by this subcommand"
            )));
        }
    }
    Ok(())
}

fn check_gdt(gdt: f64) -> Result<(), CliError> {
    if !(gdt > 0.0 && gdt <= 1.0) {
        return Err(CliError::Usage(format!(
            "--gdt {gdt} is outside (0, 1]"
        )));
    }
    Ok(())
}

fn parse_metric(s: &str) -> Result<Metric, CliError> {
    match s.to_uppercase().as_str() {
        "EUC" => Ok(Metric::Euc),
        "KNN" => Ok(Metric::Knn),
        "DTW" => Ok(Metric::Dtw),
        "CORR" => Ok(Metric::Corr),
        "RAND" => Ok(Metric::Rand),
        _ => Err(CliError::Usage(format!(
            "--metric {s}: expected euc, knn, dtw, corr or rand"
        ))),
    }
}

fn parse_family(s: &str) -> Result<Family, CliError> {
    match s.to_uppercase().as_str() {
        "LSTM" => Ok(Family::Lstm),
        "RGCN_ATT" => Ok(Family::RgcnAtt),
        "ST_ATT_CHEB" => Ok(Family::StAttCheb),
        "GRAPH_LEARN" => Ok(Family::GraphLearn),
        _ => Err(CliError::Usage(format!(
            "--family {s}: expected lstm, rgcn_att, st_att_cheb or graph_learn"
        ))),
    }
}

// ---- resolution -----------------------------------------------------------

fn resolve_generate(
    a: GenerateArgs,
    f: &BTreeMap<String, String>,
) -> Result<Resolved, CliError> {
    check_keys(
        f,
        &[
            "n-individuals",
            "n-vars",
            "n-timepoints",
            "density",
            "noise-std",
            "missing-rate",
            "seed",
        ],
    )?;
    let d = SyntheticSpec::default();
    let spec = SyntheticSpec {
        n_individuals: pick(a.n_individuals, f, "n-individuals", d.n_individuals)?,
        n_vars: pick(a.n_vars, f, "n-vars", d.n_vars)?,
        n_timepoints: pick(a.n_timepoints, f, "n-timepoints", d.n_timepoints)?,
        density: pick(a.density, f, "density", d.density)?,
        spectral_radius_cap: d.spectral_radius_cap,
        noise_std: pick(a.noise_std, f, "noise-std", d.noise_std)?,
        missing_rate: pick(a.missing_rate, f, "missing-rate", d.missing_rate)?,
        seed: pick(a.seed, f, "seed", d.seed)?,
    };
    Ok(Resolved::Generate(GenerateCfg {
        out: a.out,
        spec,
        planted_dir: a.planted_dir,
    }))
}

fn resolve_graph(a: GraphArgs, f: &BTreeMap<String, String>) -> Result<Resolved, CliError> {
    check_keys(f, &["metric", "gdt", "seed"])?;
    let metric = pick(Some(a.metric), f, "metric", String::new())?;
    parse_metric(&metric)?;
    let gdt = pick(a.gdt, f, "gdt", 0.2)?;
    check_gdt(gdt)?;
    Ok(Resolved::Graph(GraphCfg {
        input: a.input,
        metric: metric.to_uppercase(),
        gdt,
        out_dir: a.out_dir,
        seed: pick(a.seed, f, "seed", 0)?,
    }))
}

fn resolve_train(a: TrainArgs, f: &BTreeMap<String, String>) -> Result<Resolved, CliError> {
    check_keys(
        f,
        &[
            "family", "metric", "gdt", "seq-len", "epochs", "lr", "hidden", "dropout",
            "clip-norm", "seed",
        ],
    )?;
    let family_str = pick(Some(a.family), f, "family", String::new())?;
    let family = parse_family(&family_str)?;
    let metric_str = pick(a.metric, f, "metric", "corr".to_string())?;
    if family != Family::Lstm {
        parse_metric(&metric_str)?;
    }
    let gdt = pick(a.gdt, f, "gdt", 0.2)?;
    check_gdt(gdt)?;
    Ok(Resolved::Train(TrainCfg {
        input: a.input,
        family: family.to_string(),
        metric: metric_str.to_uppercase(),
        gdt,
        seq_len: pick(a.seq_len, f, "seq-len", 5)?,
        epochs: pick(a.epochs, f, "epochs", 300)?,
        lr: pick(a.lr, f, "lr", 0.01)?,
        hidden: pick(a.hidden, f, "hidden", 32)?,
        dropout: pick(a.dropout, f, "dropout", 0.3)?,
        clip_norm: pick(a.clip_norm, f, "clip-norm", 5.0)?,
        seed: pick(a.seed, f, "seed", 0)?,
        individual: a.individual,
        out_dir: a.out_dir,
    }))
}

fn resolve_experiment(
    a: ExperimentArgs,
    f: &BTreeMap<String, String>,
) -> Result<Resolved, CliError> {
    check_keys(
        f,
        &[
            "which", "n", "gdt", "epochs", "lr", "hidden", "seed", "workers",
            "n-random-repeats",
        ],
    )?;
    let which = pick(Some(a.which), f, "which", String::new())?.to_lowercase();
    if !["a", "b", "c"].contains(&which.as_str()) {
        return Err(CliError::Usage(format!(
            "--which {which}: expected a, b or c"
        )));
    }
    let gdt = pick(a.gdt, f, "gdt", 0.2)?;
    check_gdt(gdt)?;
    Ok(Resolved::Experiment(ExperimentCfg {
        which,
        input: a.input,
        n: pick(a.n, f, "n", 20)?,
        gdt,
        epochs: pick(a.epochs, f, "epochs", 300)?,
        lr: pick(a.lr, f, "lr", 0.01)?,
        hidden: pick(a.hidden, f, "hidden", 32)?,
        seed: pick(a.seed, f, "seed", 0)?,
        workers: pick(a.workers, f, "workers", 1)?,
        n_random_repeats: pick(a.n_random_repeats, f, "n-random-repeats", 5)?,
        out_dir: a.out_dir,
    }))
}

// ---- execution ------------------------------------------------------------

fn write_manifest(resolved: &Resolved, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("run_manifest.json"),
        serde_json::to_string_pretty(resolved)?,
    )?;
    Ok(())
}

fn execute_generate(c: &GenerateCfg) -> Result<(), CliError> {
    let out_dir = c.out.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let (cohort, planted) = generate_synthetic(&c.spec)?;
    save_cohort(&cohort, &c.out, Some(c.spec.seed), "synthetic")?;
    if let Some(dir) = &c.planted_dir {
        std::fs::create_dir_all(dir)?;
        for (series, graph) in cohort.iter().zip(&planted) {
            save_graph(graph, &dir.join(format!("{}_planted.csv", series.id)))?;
        }
    }
    write_manifest(
        &Resolved::Generate(GenerateCfg {
            out: c.out.clone(),
            spec: c.spec.clone(),
            planted_dir: c.planted_dir.clone(),
        }),
        out_dir.unwrap_or(Path::new(".")),
    )?;
    println!(
        "wrote cohort of {} individuals to {}",
        cohort.len(),
        c.out.display()
    );
    Ok(())
}

fn execute_graph(c: &GraphCfg) -> Result<(), CliError> {
    let metric = parse_metric(&c.metric)?;
    require_file(&c.input)?;
    let cohort = load_cohort(&c.input)?;
    std::fs::create_dir_all(&c.out_dir)?;
    for (ii, series) in cohort.iter().enumerate() {
        let (train_seg, _) = crate::data::split_sequential(series, 0.7)?;
        let graph = crate::experiments::build_static_graph(
            metric,
            train_seg.view(),
            &series.variable_names,
            c.gdt,
            seed::derive(c.seed, &[seed::label("rand_graph"), ii as u64]),
        )?;
        save_graph(&graph, &c.out_dir.join(format!("{}_{}.csv", series.id, metric)))?;
    }
    write_manifest(
        &Resolved::Graph(GraphCfg {
            input: c.input.clone(),
            metric: c.metric.clone(),
            gdt: c.gdt,
            out_dir: c.out_dir.clone(),
            seed: c.seed,
        }),
        &c.out_dir,
    )?;
    println!("wrote {} graphs to {}", cohort.len(), c.out_dir.display());
    Ok(())
}

fn execute_train(c: &TrainCfg) -> Result<(), CliError> {
    let family = parse_family(&c.family)?;
    require_file(&c.input)?;
    let cohort = load_cohort(&c.input)?;
    let selected: Vec<&IndividualSeries> = match &c.individual {
        Some(id) => {
            let found = cohort.iter().find(|s| &s.id == id).ok_or_else(|| {
                CliError::Runtime(format!("individual {id} not found in {}", c.input.display()))
            })?;
            vec![found]
        }
        None => cohort.iter().collect(),
    };
    std::fs::create_dir_all(c.out_dir.join("checkpoints"))?;
    std::fs::create_dir_all(c.out_dir.join("curves"))?;

    let mut records = csv::Writer::from_path(c.out_dir.join("train_records.csv"))?;
    records.write_record([
        "individual_id",
        "family",
        "metric",
        "gdt",
        "seq_len",
        "seed",
        "test_mse",
    ])?;
    for (ii, series) in selected.iter().enumerate() {
        let run_seed = seed::derive(c.seed, &[seed::label("train_cmd"), ii as u64]);
        let graph = if family == Family::Lstm {
            None
        } else {
            let metric = parse_metric(&c.metric)?;
            let (train_seg, _) = crate::data::split_sequential(series, 0.7)?;
            Some(crate::experiments::build_static_graph(
                metric,
                train_seg.view(),
                &series.variable_names,
                c.gdt,
                seed::derive(run_seed, &[seed::label("rand_graph")]),
            )?)
        };
        let (train_w, test_w) = crate::experiments::windows_for(series, c.seq_len)?;
        let mut model_cfg = ModelConfig::new(family, series.n_vars(), c.seq_len);
        model_cfg.hidden = c.hidden;
        model_cfg.dropout = c.dropout;
        let mut model = Forecaster::new(
            &model_cfg,
            graph.as_ref(),
            seed::derive(run_seed, &[seed::label("init")]),
        )?;
        let tc = TrainConfig {
            epochs: c.epochs,
            lr: c.lr,
            clip_norm: (c.clip_norm > 0.0).then_some(c.clip_norm),
            seed: seed::derive(run_seed, &[seed::label("train")]),
        };
        let report = train(&mut model, &train_w, &tc)?;
        let test_mse = evaluate(&model, &test_w)?;

        save_checkpoint(
            &model,
            &c.out_dir.join("checkpoints").join(format!("{}.json", series.id)),
        )?;
        let mut curve = csv::Writer::from_path(
            c.out_dir.join("curves").join(format!("{}.csv", series.id)),
        )?;
        curve.write_record(["epoch", "loss"])?;
        for (epoch, loss) in report.curve.iter().enumerate() {
            curve.write_record([epoch.to_string(), loss.to_string()])?;
        }
        curve.flush()?;
        records.write_record([
            series.id.clone(),
            family.to_string(),
            if family == Family::Lstm {
                String::new()
            } else {
                c.metric.clone()
            },
            c.gdt.to_string(),
            c.seq_len.to_string(),
            c.seed.to_string(),
            test_mse.to_string(),
        ])?;
    }
    records.flush()?;
    write_manifest(
        &Resolved::Train(TrainCfg {
            input: c.input.clone(),
            family: c.family.clone(),
            metric: c.metric.clone(),
            gdt: c.gdt,
            seq_len: c.seq_len,
            epochs: c.epochs,
            lr: c.lr,
            hidden: c.hidden,
            dropout: c.dropout,
            clip_norm: c.clip_norm,
            seed: c.seed,
            individual: c.individual.clone(),
            out_dir: c.out_dir.clone(),
        }),
        &c.out_dir,
    )?;
    println!(
        "trained {} model(s); records in {}",
        selected.len(),
        c.out_dir.join("train_records.csv").display()
    );
    Ok(())
}

fn execute_experiment(c: &ExperimentCfg) -> Result<(), CliError> {
    let cohort = match &c.input {
        Some(path) => {
            require_file(path)?;
            load_cohort(path)?
        }
        None => {
            let spec = SyntheticSpec {
                n_individuals: c.n,
                seed: seed::derive(c.seed, &[seed::label("cohort")]),
                ..SyntheticSpec::default()
            };
            generate_synthetic(&spec)?.0
        }
    };
    let plan = ExperimentPlan {
        seed: c.seed,
        epochs: c.epochs,
        lr: c.lr,
        hidden: c.hidden,
        gdt: c.gdt,
        workers: c.workers,
        n_random_repeats: c.n_random_repeats,
        ..ExperimentPlan::default()
    };
    std::fs::create_dir_all(&c.out_dir)?;
    match c.which.as_str() {
        "a" => {
            let report = run_experiment_a(&cohort, &plan)?;
            write_grid_csv(&report, &c.out_dir.join("report_a.csv"))?;
        }
        "b" => {
            let report = run_experiment_b(&cohort, &plan)?;
            write_grid_csv(&report, &c.out_dir.join("report_b.csv"))?;
        }
        "c" => {
            let report = run_experiment_c(&cohort, &plan)?;
            write_transfer_csv(&report, &c.out_dir.join("report_c.csv"))?;
            write_boxplot_csv(&report, &c.out_dir.join("boxplot_c.csv"))?;
            export_graphs(&report, &c.out_dir.join("graphs"))?;
        }
        other => return Err(CliError::Usage(format!("--which {other}: expected a, b or c"))),
    }
    write_manifest(
        &Resolved::Experiment(ExperimentCfg {
            which: c.which.clone(),
            input: c.input.clone(),
            n: c.n,
            gdt: c.gdt,
            epochs: c.epochs,
            lr: c.lr,
            hidden: c.hidden,
            seed: c.seed,
            workers: c.workers,
            n_random_repeats: c.n_random_repeats,
            out_dir: c.out_dir.clone(),
        }),
        &c.out_dir,
    )?;
    println!("experiment {} reports written to {}", c.which, c.out_dir.display());
    Ok(())
}

fn inspect(input: &Path) -> Result<(), CliError> {
    if let Ok(cohort) = load_cohort(input) {
        println!("cohort: {} individuals", cohort.len());
        for series in &cohort {
            let (v, t) = series.values.dim();
            let mean: f64 = series.values.iter().sum::<f64>() / (v * t) as f64;
            println!(
                "  {}: {} variables x {} timepoints, mean {:.4}",
                series.id, v, t, mean
            );
        }
        if let Some(first) = cohort.first() {
            println!("variables: {}", first.variable_names.join(", "));
        }
        return Ok(());
    }
    let graph = load_graph(input)
        .map_err(|e| CliError::Runtime(format!("{} is neither a cohort nor a graph: {e}", input.display())))?;
    println!(
        "graph: {} nodes, {} edges, metric {}, gdt {}",
        graph.n_nodes(),
        graph.edge_count(),
        graph.metric,
        graph.gdt
    );
    Ok(())
}
