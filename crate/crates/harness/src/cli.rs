//! The `simest` command line.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use simest_core::em::{em_estimate, EmConfig};
use simest_core::inference::{
    abc_importance_refine, abc_sample, bootstrap_confidence, weighted_summary, SpecPrior,
};
use simest_core::model_file::{load_model, model_to_string, save_model};
use simest_core::network::NetworkModel;
use simest_core::rng::{self, derive_seed};
use simest_core::simulate::SimulatorSpec;
use simest_core::train::train;
use simest_core::Estimator;

use crate::config::{read_config, EstimatorSpec, LoadedEstimator, ScenarioConfig, SeedTag, OUTPUT_DIR_ENV};
use crate::coverage::coverage_experiment;
use crate::error::{HarnessError, Result};
use crate::manifest::RunManifest;
use crate::{io, report};

#[derive(Debug, Parser)]
#[command(name = "simest", version, about = "Simulation-trained estimators: training, intervals, ABC and coverage")]
struct Cli {
    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw parameters and datasets from the scenario's simulator.
    Simulate(SimulateArgs),
    /// Train the scenario's network and write a model file.
    Train(TrainArgs),
    /// Point estimates for every dataset of a CSV file.
    Estimate(EstimateArgs),
    /// Parametric-bootstrap percentile intervals for one dataset.
    Bootstrap(BootstrapArgs),
    /// Rejection ABC with optional importance refinement.
    Abc(AbcArgs),
    /// EM haplotype-frequency estimate from a genotype CSV.
    Em(EmArgs),
    /// Coverage experiment over the scenario's sample sizes.
    Coverage(CoverageArgs),
    /// Print a coverage report as a table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, replaces the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the run manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Sample size; defaults to the first evaluation size.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    datasets: usize,
    /// Dataset CSV; parameters go next to it with suffix `.params.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    epochs: Option<usize>,
    /// Model file; the loss trace goes next to it with suffix `.trace.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimatorArgs {
    /// Trained model file. Without it the scenario must use a closed-form estimator.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Dataset CSV.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    est: EstimatorArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BootstrapArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    est: EstimatorArgs,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AbcArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    est: EstimatorArgs,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    accept_quantile: Option<f64>,
    #[arg(long)]
    refine_scale: Option<f64>,
    #[arg(long)]
    refine_draws: Option<usize>,
    /// Posterior draws CSV; the summary goes next to it with suffix `.summary.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EmArgs {
    /// Genotype CSV with columns g1..gK.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    loci: usize,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CoverageArgs {
    #[command(flatten)]
    common: Common,
    /// Trained model; a network scenario without one is trained first.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    bootstrap_replicates: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Coverage report CSV.
    #[arg(long)]
    input: PathBuf,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli.command, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command, argv: &[String]) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a, argv),
        Command::Train(a) => train_cmd(a, argv),
        Command::Estimate(a) => estimate(a, argv),
        Command::Bootstrap(a) => bootstrap(a, argv),
        Command::Abc(a) => abc(a, argv),
        Command::Em(a) => em(a, argv),
        Command::Coverage(a) => coverage(a, argv),
        Command::Report(a) => report_cmd(a),
    }
}

fn load_config(common: &Common) -> Result<Option<ScenarioConfig>> {
    let Some(path) = &common.config else { return Ok(None) };
    let mut cfg = read_config(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(Some(cfg))
}

fn require_config(common: &Common) -> Result<ScenarioConfig> {
    load_config(common)?.ok_or_else(|| HarnessError::Config("--config is required".into()))
}

fn default_dir(cfg: Option<&ScenarioConfig>) -> PathBuf {
    match cfg {
        Some(c) => c.output_dir.clone(),
        None => std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out")),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Write to `out` and record it, or print to standard output.
fn emit(text: &str, out: Option<&Path>, manifest: &mut RunManifest) -> Result<()> {
    match out {
        Some(p) => {
            write_file(p, text)?;
            manifest.output(p)
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| HarnessError::io("<stdout>", e))
        }
    }
}

fn finish_manifest(manifest: &RunManifest, explicit: Option<&Path>, dir: &Path) -> Result<()> {
    let path = explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join(format!("{}.manifest.json", manifest.subcommand)));
    ensure_parent(&path)?;
    manifest.write(&path)
}

fn simulator_of_model(model: &NetworkModel) -> Result<SimulatorSpec> {
    let json = model.metadata().get("simulator").ok_or_else(|| {
        HarnessError::Config("model file carries no simulator; pass --config".into())
    })?;
    serde_json::from_str(json).map_err(|e| HarnessError::Input(format!("model simulator metadata: {e}")))
}

struct Resolved {
    estimator: LoadedEstimator,
    spec: SimulatorSpec,
    model_hash: Option<String>,
}

fn resolve_estimator(cfg: Option<&ScenarioConfig>, model: Option<&Path>) -> Result<Resolved> {
    if let Some(path) = model {
        let m = load_model(path)?;
        let spec = match cfg {
            Some(c) => c.simulator.clone(),
            None => simulator_of_model(&m)?,
        };
        if m.input_cols() != spec.input_cols() || m.output_dim() != spec.param_dim() {
            return Err(HarnessError::Config(format!(
                "model shape {}→{} does not fit the simulator ({}→{})",
                m.input_cols(),
                m.output_dim(),
                spec.input_cols(),
                spec.param_dim()
            )));
        }
        let hash = hex::encode(Sha256::digest(model_to_string(&m).as_bytes()));
        return Ok(Resolved { estimator: LoadedEstimator::Network(m), spec, model_hash: Some(hash) });
    }
    let cfg = cfg.ok_or_else(|| HarnessError::Config("pass --model or --config".into()))?;
    match &cfg.estimator {
        EstimatorSpec::SampleMean { columns } => Ok(Resolved {
            estimator: LoadedEstimator::sample_mean(&cfg.simulator, columns),
            spec: cfg.simulator.clone(),
            model_hash: None,
        }),
        EstimatorSpec::Network { .. } => {
            Err(HarnessError::Config("scenario uses a network estimator; pass --model".into()))
        }
    }
}

/// Master seed and its per-purpose derivation for runs with or without a scenario.
fn seed_for(cfg: Option<&ScenarioConfig>, flag: Option<u64>, tag: SeedTag) -> u64 {
    match cfg {
        Some(c) => c.derived_seed(tag),
        None => derive_seed(flag.unwrap_or(0), tag as u64),
    }
}

fn simulate(a: SimulateArgs, argv: &[String]) -> Result<()> {
    let cfg = require_config(&a.common)?;
    let spec = &cfg.simulator;
    let n = a.n.unwrap_or(cfg.eval_sample_sizes[0]);
    if n == 0 || a.datasets == 0 {
        return Err(HarnessError::Config("--n and --datasets must be positive".into()));
    }
    let seed = cfg.derived_seed(SeedTag::Simulate);
    let mut params = Vec::with_capacity(a.datasets);
    let mut data = Vec::with_capacity(a.datasets);
    for d in 0..a.datasets {
        let mut r = rng::stream(seed, d as u64);
        let theta = spec.draw_params(&mut r)?;
        data.push(spec.simulate_dataset(&theta, n, &mut r)?);
        params.push(theta);
    }
    let out = a.out.unwrap_or_else(|| cfg.output_dir.join(format!("{}_data.csv", cfg.scenario)));
    let mut manifest = RunManifest::new("simulate", argv, Some(&cfg));
    manifest.seed("simulate", seed);
    emit(&io::datasets_to_csv(&spec.column_names(), &data)?, Some(&out), &mut manifest)?;
    let params_path = sibling(&out, ".params.csv");
    emit(&io::params_to_csv(&spec.param_names(), &params)?, Some(&params_path), &mut manifest)?;
    finish_manifest(&manifest, a.common.manifest.as_deref(), &cfg.output_dir)
}

fn train_network(cfg: &ScenarioConfig) -> Result<(NetworkModel, simest_core::train::TrainingTrace)> {
    let settings = cfg
        .training
        .as_ref()
        .ok_or_else(|| HarnessError::Config("training: section required to train".into()))?;
    let model = cfg.initial_network()?;
    let (mut model, trace) = train(model, &cfg.simulator, &cfg.training_config(settings))?;
    let sim = serde_json::to_string(&cfg.simulator).expect("simulator serialises");
    model.metadata_mut().insert("simulator".into(), sim);
    model.metadata_mut().insert("scenario".into(), cfg.scenario.clone());
    Ok((model, trace))
}

fn train_cmd(a: TrainArgs, argv: &[String]) -> Result<()> {
    let mut cfg = require_config(&a.common)?;
    if let Some(e) = a.epochs {
        let t = cfg
            .training
            .as_mut()
            .ok_or_else(|| HarnessError::Config("training: section required to train".into()))?;
        t.epochs = e;
    }
    let (model, trace) = train_network(&cfg)?;
    let out = a.out.unwrap_or_else(|| cfg.output_dir.join(format!("{}.ffm", cfg.scenario)));
    ensure_parent(&out)?;
    save_model(&model, &out)?;
    let mut manifest = RunManifest::new("train", argv, Some(&cfg));
    manifest.seed("network_init", cfg.derived_seed(SeedTag::NetworkInit));
    manifest.seed("training", cfg.derived_seed(SeedTag::Training));
    manifest.output(&out)?;
    emit(&io::trace_to_csv(&trace)?, Some(&sibling(&out, ".trace.csv")), &mut manifest)?;
    finish_manifest(&manifest, a.common.manifest.as_deref(), &cfg.output_dir)
}

fn estimate(a: EstimateArgs, argv: &[String]) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let r = resolve_estimator(cfg.as_ref(), a.est.model.as_deref())?;
    let datasets = io::read_datasets(&a.est.data, &r.spec.column_names())?;
    let mut rows = Vec::with_capacity(datasets.len());
    for d in &datasets {
        rows.push(r.estimator.estimate(&d.clone().into_batch())?.into_values());
    }
    let mut manifest = RunManifest::new("estimate", argv, cfg.as_ref());
    emit(&io::params_to_csv(&r.spec.param_names(), &rows)?, a.out.as_deref(), &mut manifest)?;
    finish_manifest(&manifest, a.common.manifest.as_deref(), &default_dir(cfg.as_ref()))
}

fn single_dataset(path: &Path, spec: &SimulatorSpec) -> Result<simest_core::Matrix2> {
    let mut sets = io::read_datasets(path, &spec.column_names())?;
    if sets.len() != 1 {
        return Err(HarnessError::Input(format!(
            "{}: expected one dataset, found {}",
            path.display(),
            sets.len()
        )));
    }
    Ok(sets.remove(0))
}

fn bootstrap(a: BootstrapArgs, argv: &[String]) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let r = resolve_estimator(cfg.as_ref(), a.est.model.as_deref())?;
    let data = single_dataset(&a.est.data, &r.spec)?;
    let mut boot = cfg.as_ref().map(|c| c.bootstrap_config()).unwrap_or_default();
    if let Some(v) = a.replicates {
        boot.replicates = v;
    }
    if let Some(v) = a.level {
        boot.level = v;
    }
    let seed = seed_for(cfg.as_ref(), a.common.seed, SeedTag::Bootstrap);
    let res = bootstrap_confidence(&r.estimator, &r.spec, &data, &boot, seed)?;
    let mut manifest = RunManifest::new("bootstrap", argv, cfg.as_ref());
    manifest.seed("bootstrap", seed);
    emit(&io::intervals_to_csv(&r.spec.param_names(), &res)?, a.out.as_deref(), &mut manifest)?;
    finish_manifest(&manifest, a.common.manifest.as_deref(), &default_dir(cfg.as_ref()))
}

fn abc(a: AbcArgs, argv: &[String]) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let r = resolve_estimator(cfg.as_ref(), a.est.model.as_deref())?;
    let data = single_dataset(&a.est.data, &r.spec)?;
    let mut settings = cfg.as_ref().map(|c| c.abc.clone()).unwrap_or_default();
    if let Some(v) = a.draws {
        settings.n_draws = v;
    }
    if let Some(v) = a.accept_quantile {
        settings.accept_quantile = v;
    }
    if let Some(v) = a.refine_scale {
        settings.refine_scale = v;
    }
    if let Some(v) = a.refine_draws {
        settings.refine_draws = v;
    }
    let abc_cfg = simest_core::inference::AbcConfig {
        n_draws: settings.n_draws,
        accept_quantile: settings.accept_quantile,
    };
    let seed = seed_for(cfg.as_ref(), a.common.seed, SeedTag::Abc);
    let prior = SpecPrior(&r.spec);
    let mut post = abc_sample(&r.estimator, &r.spec, &data, &prior, &abc_cfg, seed)?;
    let mut manifest = RunManifest::new("abc", argv, cfg.as_ref());
    manifest.seed("abc", seed);
    if settings.refine_draws > 0 {
        let refine_seed = seed_for(cfg.as_ref(), a.common.seed, SeedTag::AbcRefine);
        post = abc_importance_refine(
            &r.estimator,
            &r.spec,
            &data,
            &prior,
            &post,
            settings.refine_scale,
            settings.refine_draws,
            refine_seed,
        )?;
        manifest.seed("abc_refine", refine_seed);
    }
    let names = r.spec.param_names();
    emit(&io::posterior_to_csv(&names, &post)?, a.out.as_deref(), &mut manifest)?;
    let summary = io::summary_to_csv(&names, &weighted_summary(&post)?)?;
    match &a.out {
        Some(p) => emit(&summary, Some(&sibling(p, ".summary.csv")), &mut manifest)?,
        None => emit(&summary, None, &mut manifest)?,
    }
    finish_manifest(&manifest, a.common.manifest.as_deref(), &default_dir(cfg.as_ref()))
}

fn em(a: EmArgs, argv: &[String]) -> Result<()> {
    let g = io::read_genotypes(&a.input, a.loci)?;
    let cfg = EmConfig { eps: a.eps, max_iter: a.max_iter };
    cfg.validate()?;
    let res = em_estimate(&g, &cfg)?;
    let mut manifest = RunManifest::new("em", argv, None);
    emit(&io::em_result_to_csv(&res)?, a.out.as_deref(), &mut manifest)?;
    finish_manifest(&manifest, a.manifest.as_deref(), &default_dir(None))
}

fn coverage(a: CoverageArgs, argv: &[String]) -> Result<()> {
    let mut cfg = require_config(&a.common)?;
    if let Some(v) = a.replications {
        cfg.replications = v;
    }
    if let Some(v) = a.bootstrap_replicates {
        cfg.bootstrap.replicates = v;
    }
    cfg.validate()?;
    let mut manifest = RunManifest::new("coverage", argv, Some(&cfg));
    let resolved = match (&cfg.estimator, &a.model) {
        (EstimatorSpec::Network { .. }, None) => {
            let (model, trace) = train_network(&cfg)?;
            let path = cfg.output_dir.join(format!("{}.ffm", cfg.scenario));
            ensure_parent(&path)?;
            save_model(&model, &path)?;
            manifest.output(&path)?;
            emit(&io::trace_to_csv(&trace)?, Some(&sibling(&path, ".trace.csv")), &mut manifest)?;
            manifest.seed("network_init", cfg.derived_seed(SeedTag::NetworkInit));
            manifest.seed("training", cfg.derived_seed(SeedTag::Training));
            resolve_estimator(Some(&cfg), Some(&path))?
        }
        (_, model) => resolve_estimator(Some(&cfg), model.as_deref())?,
    };
    let mut rep = coverage_experiment(&cfg, &resolved.estimator)?;
    let estimator_name = match &resolved.estimator {
        LoadedEstimator::Network(_) => "network",
        LoadedEstimator::SampleMean(_) => "sample_mean",
    };
    rep.metadata.insert("estimator".into(), estimator_name.into());
    if let Some(h) = resolved.model_hash {
        rep.metadata.insert("model_sha256".into(), h);
    }
    manifest.seed("coverage", cfg.derived_seed(SeedTag::Coverage));
    let out = a.out.unwrap_or_else(|| cfg.output_dir.join(format!("coverage_{}.csv", cfg.scenario)));
    emit(&report::report_to_string(&rep)?, Some(&out), &mut manifest)?;
    finish_manifest(&manifest, a.common.manifest.as_deref(), &cfg.output_dir)
}

fn report_cmd(a: ReportArgs) -> Result<()> {
    let rep = report::read_report(&a.input)?;
    print!("{}", report::format_table(&rep));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_cli(["simest", "frobnicate"]), 2);
        assert_eq!(run_cli(["simest", "em", "--bogus"]), 2);
        assert_eq!(run_cli(["simest", "--help"]), 0);
    }

    #[test]
    fn missing_config_is_config_error() {
        assert_eq!(run_cli(["simest", "coverage"]), 2);
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("a/m.ffm"), ".trace.csv"), PathBuf::from("a/m.trace.csv"));
    }
}
