use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use cellshape::contour_io::{self, read_label_map, trace_contours, Contour};
use cellshape::descriptors;
use cellshape::evalharness::{self, EvalConfig, FeatureSet, SearchSpace, TrainedModel};
use cellshape::pca::PcaModel;
use cellshape::preprocess::{self, RegisteredContour, DEFAULT_MAX_ITER, DEFAULT_THRESHOLD};
use cellshape::synthgen::{self, GenConfig};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "cellshape",
    version,
    about = "Cell contour shape descriptors and classification"
)]
struct Cli {
    /// Base seed for every random stream [default: 42, or the generator config's seed]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for outputs whose path is not given explicitly
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic contour dataset
    Generate(GenerateArgs),
    /// Normalize contours (or trace a label map) and align them by Procrustes
    Preprocess(PreprocessArgs),
    /// Compute one feature family for registered contours
    Extract(ExtractArgs),
    /// Search hyperparameters and train a model bundle for one family
    Train(TrainArgs),
    /// Cross-validate and compare feature families
    Eval(EvalArgs),
    /// Classify contours with a trained model bundle
    Classify(ClassifyArgs),
    /// Write the gain importances of a trained model
    Importance(ImportanceArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n_per_class: Option<usize>,
    #[arg(long)]
    noise_amplitude: Option<f64>,
    #[arg(long)]
    noise_harmonics: Option<u32>,
    #[arg(long)]
    jitter: Option<f64>,
    /// Full generator config as JSON; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Contour JSONL, or a label map (.pgm or .csv)
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    mean: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
}

#[derive(Args)]
struct ExtractArgs {
    /// Registered contour JSONL
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    family: FeatureSet,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Existing PCA model for pca95/pca99; fitted on the input when absent
    #[arg(long)]
    pca_model: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 20)]
    n_trials: usize,
    /// Search space as JSON (defaults to the built-in space)
    #[arg(long)]
    space: Option<PathBuf>,
    /// Refit the selected configuration on train and validation
    #[arg(long)]
    retrain_on_train_val: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled contour JSONL
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    family: FeatureSet,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Labeled contour JSONL
    #[arg(long = "in")]
    input: PathBuf,
    /// Comma-separated feature families, or `all`
    #[arg(long, default_value = "all")]
    families: String,
    #[arg(long, default_value_t = 20)]
    top_k: usize,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail unless the model was trained on this family
    #[arg(long)]
    family: Option<FeatureSet>,
}

#[derive(Args)]
struct ImportanceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .chain()
                .find_map(|c| c.downcast_ref::<cellshape::Error>())
                .map_or(2, cellshape::Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let out_path = |given: &Option<PathBuf>, default: &str| given.clone().unwrap_or_else(|| cli.out_dir.join(default));
    match &cli.cmd {
        Command::Generate(a) => generate(a, cli.seed, out_path(&a.out, "synth.jsonl")),
        Command::Preprocess(a) => {
            preprocess_cmd(a, out_path(&a.out, "registered.jsonl"), out_path(&a.mean, "mean.json"))
        }
        Command::Extract(a) => extract(a, &cli.out_dir, out_path(&a.out, &format!("features_{}.csv", a.family))),
        Command::Train(a) => train(
            a,
            seed,
            &cli.out_dir,
            out_path(&a.out, &format!("model_{}.json", a.family)),
        ),
        Command::Eval(a) => eval(a, seed, &cli.out_dir),
        Command::Classify(a) => classify(a, out_path(&a.out, "predictions.jsonl")),
        Command::Importance(a) => importance(a, out_path(&a.out, "importance.csv")),
    }
}

fn generate(a: &GenerateArgs, seed: Option<u64>, out: PathBuf) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let s = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&s)
                .map_err(|e| cellshape::Error::InvalidConfig(e.to_string()))
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => GenConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(v) = a.n_per_class {
        cfg.n_per_class = v;
    }
    if let Some(v) = a.noise_amplitude {
        cfg.noise_amplitude = v;
    }
    if let Some(v) = a.noise_harmonics {
        cfg.noise_harmonics = v;
    }
    if let Some(v) = a.jitter {
        cfg.jitter = v;
    }
    let contours = synthgen::generate(&cfg)?;
    contour_io::write_contours(&contours, &out)?;
    let echo = out.with_extension("config.json");
    fs::write(&echo, serde_json::to_string_pretty(&cfg)? + "\n")
        .with_context(|| format!("writing {}", echo.display()))?;
    println!("wrote {} contours to {}", contours.len(), out.display());
    Ok(())
}

fn is_label_map(p: &Path) -> bool {
    matches!(
        p.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("pgm" | "csv")
    )
}

fn read_input_contours(p: &Path) -> Result<Vec<Contour>> {
    if is_label_map(p) {
        Ok(trace_contours(&read_label_map(p)?)?)
    } else {
        Ok(contour_io::read_contours(p)?)
    }
}

/// Normalizes in parallel, dropping (and logging) degenerate contours.
fn normalize_all(contours: &[Contour]) -> Result<Vec<RegisteredContour>> {
    let done: Vec<_> = contours.par_iter().map(preprocess::normalize).collect();
    let mut out = Vec::with_capacity(done.len());
    for (c, r) in contours.iter().zip(done) {
        match r {
            Ok(r) => out.push(r),
            Err(e) => log::warn!("skipping contour {}: {e}", c.id),
        }
    }
    if out.is_empty() {
        return Err(cellshape::Error::InsufficientData("no contour survived normalization".into()).into());
    }
    Ok(out)
}

fn preprocess_cmd(a: &PreprocessArgs, out: PathBuf, mean_path: PathBuf) -> Result<()> {
    let contours = read_input_contours(&a.input)?;
    let registered = normalize_all(&contours)?;
    let alignment = preprocess::procrustes_align(&registered, a.threshold, a.max_iter)?;
    let aligned: Vec<Contour> = alignment.contours.iter().map(RegisteredContour::to_contour).collect();
    contour_io::write_contours(&aligned, &out)?;
    fs::write(&mean_path, serde_json::to_string_pretty(&alignment.mean)? + "\n")
        .with_context(|| format!("writing {}", mean_path.display()))?;
    println!(
        "registered {} of {} contours in {} Procrustes iterations -> {}",
        aligned.len(),
        contours.len(),
        alignment.mean.iterations_used,
        out.display()
    );
    Ok(())
}

fn read_registered(p: &Path) -> Result<Vec<RegisteredContour>> {
    contour_io::read_contours(p)?
        .into_iter()
        .map(|c| RegisteredContour::from_contour(c).map_err(Into::into))
        .collect()
}

fn extract(a: &ExtractArgs, out_dir: &Path, out: PathBuf) -> Result<()> {
    let batch = read_registered(&a.input)?;
    let (matrix, failed) = match (a.family, a.family.pca_threshold()) {
        (FeatureSet::Descriptor(f), _) => {
            let (m, r) = descriptors::extract(&batch, f);
            (m, r.failed)
        }
        (_, Some(t)) => {
            let model = match &a.pca_model {
                Some(p) => PcaModel::load(p)?,
                None => {
                    let m = PcaModel::fit(&batch, t)?;
                    let p = out_dir.join(format!("pca_{}.json", a.family));
                    m.save(&p)?;
                    println!("fitted {} components, saved to {}", m.n_components(), p.display());
                    m
                }
            };
            model.project_batch(&batch)
        }
        (_, None) => unreachable!("PCA sets carry a threshold"),
    };
    for (id, why) in &failed {
        log::warn!("contour {id}: {why}");
    }
    matrix.write_csv(&out)?;
    println!(
        "wrote {} x {} features to {}",
        matrix.n_rows(),
        matrix.n_cols(),
        out.display()
    );
    Ok(())
}

fn eval_config(s: &SearchArgs, seed: u64) -> Result<EvalConfig> {
    let space = match &s.space {
        Some(p) => {
            let txt = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<SearchSpace>(&txt).map_err(|e| cellshape::Error::InvalidConfig(e.to_string()))?
        }
        None => SearchSpace::default(),
    };
    Ok(EvalConfig {
        seed,
        n_trials: s.n_trials,
        space,
        retrain_on_train_val: s.retrain_on_train_val,
        ..EvalConfig::default()
    })
}

fn train(a: &TrainArgs, seed: u64, out_dir: &Path, out: PathBuf) -> Result<()> {
    let cfg = eval_config(&a.search, seed)?;
    let data = normalize_all(&read_input_contours(&a.input)?)?;
    let plan = evalharness::make_splits(&evalharness::labels_of(&data)?, seed)?;
    let fold = evalharness::run_fold(&data, a.family, &plan, 0, &cfg)?;
    fold.model.save(&out)?;
    let outcome = evalharness::FamilyOutcome {
        report: evalharness::EvalReport {
            family: a.family.to_string(),
            n_samples: data.len(),
            n_features: vec![fold.model.gbt.n_features()],
            fold_accuracy: vec![fold.test_accuracy],
            mean_accuracy: fold.test_accuracy,
            std_accuracy: 0.0,
            confusion: fold.confusion,
            best_params: vec![fold.search.best.clone()],
            top_importance: Vec::new(),
            split_hashes: vec![format!("{:016x}", fold.split_hash)],
            excluded_ids: Vec::new(),
        },
        folds: vec![fold],
    };
    evalharness::write_trials_csv(&out_dir.join("trials.csv"), std::slice::from_ref(&outcome))?;
    println!(
        "{}: validation accuracy {:.4}, held-out test accuracy {:.4}; model saved to {}",
        a.family,
        outcome.folds[0].search.best_val_accuracy,
        outcome.folds[0].test_accuracy,
        out.display()
    );
    Ok(())
}

fn parse_families(s: &str) -> Result<Vec<FeatureSet>> {
    if s.trim() == "all" {
        return Ok(FeatureSet::all());
    }
    let sets = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<FeatureSet>())
        .collect::<cellshape::Result<Vec<_>>>()?;
    if sets.is_empty() {
        bail!(cellshape::Error::InvalidConfig("no families given".into()));
    }
    Ok(sets)
}

fn eval(a: &EvalArgs, seed: u64, out_dir: &Path) -> Result<()> {
    let sets = parse_families(&a.families)?;
    let cfg = EvalConfig {
        top_k: a.top_k,
        ..eval_config(&a.search, seed)?
    };
    let data = normalize_all(&read_input_contours(&a.input)?)?;
    let cmp = evalharness::compare_families(&data, &sets, &cfg)?;
    evalharness::write_outputs(out_dir, &cmp, &cfg)?;
    println!(
        "{:<18} {:>9} {:>9} {:>10}",
        "family", "mean_acc", "std_acc", "n_features"
    );
    for r in &cmp.ranking {
        println!(
            "{:<18} {:>9.4} {:>9.4} {:>10}",
            r.family, r.mean_acc, r.std_acc, r.n_features
        );
    }
    Ok(())
}

fn classify(a: &ClassifyArgs, out: PathBuf) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    if let Some(f) = a.family {
        model.expect_feature_set(f)?;
    }
    let contours = read_input_contours(&a.input)?;
    let preds = model.classify(&contours);
    evalharness::write_predictions(&preds, &out)?;
    let failed = preds.iter().filter(|p| p.class.is_none()).count();
    println!(
        "classified {} contours ({failed} unclassifiable) -> {}",
        preds.len() - failed,
        out.display()
    );
    Ok(())
}

fn importance(a: &ImportanceArgs, out: PathBuf) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let imp = model.gbt.feature_importance();
    let mut order: Vec<usize> = (0..imp.len()).collect();
    order.sort_by(|&x, &y| imp.values[y].total_cmp(&imp.values[x]).then(x.cmp(&y)));
    let mut s = String::from("feature,gain\n");
    for i in order {
        s.push_str(&format!("{},{}\n", imp.names[i], contour_io::format_g17(imp.values[i])));
    }
    fs::write(&out, s).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {} importances to {}", imp.len(), out.display());
    Ok(())
}
