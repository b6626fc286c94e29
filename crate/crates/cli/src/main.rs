use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use renalpath_core::diagnosis::cohens_kappa;
use renalpath_core::pipeline::{
    load_config, load_manifest, run_pipeline, PipelineConfig, PipelineContext, RunOptions, RunSummary, Stage,
};
use renalpath_core::slide::{load_flat_image, Patch};
use renalpath_core::stain::{estimate_stain_profile, DEFAULT_ALPHA, DEFAULT_BETA};

/// Whole-slide diagnostic engine for renal cell carcinoma.
#[derive(Parser)]
#[command(name = "renalpath", version, about)]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline config (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Case manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; overrides `paths.output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `run.workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Re-ingest slides even when a cached pyramid exists.
    #[arg(long)]
    force_ingest: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or reuse) the tiled pyramid of every manifest slide.
    Ingest(RunArgs),
    /// Stain reference utilities.
    Stain {
        #[command(subcommand)]
        command: StainCommand,
    },
    /// Tumor detection with triage; writes tumor_map.json per slide.
    Detect(RunArgs),
    /// Subtype classification over the detected tumor region.
    Subtype(RunArgs),
    /// G4 dichotomy and three-way grading over the tumor region.
    Grade(RunArgs),
    /// Heatmaps and the whole-case report from earlier stage outputs.
    Report(RunArgs),
    /// The full pipeline.
    Run(RunArgs),
    /// Cohen's kappa between two label files (one label per line).
    Kappa { a: PathBuf, b: PathBuf },
}

#[derive(Subcommand)]
enum StainCommand {
    /// Estimate a Macenko stain profile from a reference image.
    Fit {
        #[arg(long)]
        image: PathBuf,
        /// Where to write the profile JSON.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
    },
}

/// Failures that map to exit code 2.
struct UsageError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.into())
    }
}

fn prepare(args: &RunArgs) -> Result<(PipelineContext, Vec<renalpath_core::pipeline::CaseManifest>, RunOptions), UsageError> {
    let mut config = match &args.config {
        Some(p) => load_config(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(w) = args.workers {
        config.run.workers = w;
    }
    if let Some(s) = args.seed {
        config.run.seed = s;
    }
    let output = match (&args.out, &config.paths.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => o.clone(),
        (None, None) => return Err(anyhow::anyhow!("no output directory: pass --out or set paths.output").into()),
    };
    let cases = load_manifest(&args.manifest)?;
    let ctx = PipelineContext::load(config)?;
    Ok((ctx, cases, RunOptions { output, force_ingest: args.force_ingest }))
}

fn run_stage(args: &RunArgs, stage: Stage) -> Result<RunSummary, UsageError> {
    let (ctx, cases, opts) = prepare(args)?;
    let summary = run_pipeline(&ctx, &cases, stage, &opts).map_err(|e| UsageError(e.into()))?;
    for s in &summary.slides {
        match &s.error {
            None => println!("{}/{}: ok ({} patches, {} triaged)", s.case_id, s.slide_id, s.stats.grid_patches, s.stats.triaged_patches),
            Some(e) => println!("{}/{}: FAILED: {e}", s.case_id, s.slide_id),
        }
    }
    let t = &summary.totals;
    println!("{} slides, {} ok, {} failed; trigger rate {:.4}", t.slides, t.succeeded, t.failed, t.trigger_rate);
    Ok(summary)
}

fn read_labels(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn kappa(a: &Path, b: &Path) -> anyhow::Result<()> {
    let (la, lb) = (read_labels(a)?, read_labels(b)?);
    let k = cohens_kappa(&la, &lb)?;
    println!("{}", serde_json::json!({ "kappa": k, "n": la.len() }));
    Ok(())
}

fn stain_fit(image: &Path, out: &Path, beta: f64, alpha: f64) -> anyhow::Result<()> {
    let raster = load_flat_image(image)?;
    let (w, h) = (raster.width(), raster.height());
    let patch = Patch::from_pixels(w, h, raster.data().to_vec(), 0.0);
    let profile = estimate_stain_profile::<f64>(&patch, beta, alpha)?;
    std::fs::write(out, profile.to_json()?).with_context(|| format!("writing {}", out.display()))?;
    let [h0, e0] = [profile.column(0), profile.column(1)];
    println!("H = {h0:.4?}, E = {e0:.4?}, max concentrations = {:.4?}", profile.max_concentrations);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match &cli.command {
        Command::Ingest(a) => stage_exit(a, Stage::Ingest),
        Command::Detect(a) => stage_exit(a, Stage::Detect),
        Command::Subtype(a) => stage_exit(a, Stage::Subtype),
        Command::Grade(a) => stage_exit(a, Stage::Grade),
        Command::Report(a) => stage_exit(a, Stage::Report),
        Command::Run(a) => stage_exit(a, Stage::Run),
        Command::Kappa { a, b } => simple_exit(kappa(a, b)),
        Command::Stain { command: StainCommand::Fit { image, out, beta, alpha } } => {
            simple_exit(stain_fit(image, out, *beta, *alpha))
        }
    }
}

fn stage_exit(args: &RunArgs, stage: Stage) -> ExitCode {
    match run_stage(args, stage) {
        Ok(s) if s.all_ok() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(UsageError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn simple_exit(result: anyhow::Result<()>) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
