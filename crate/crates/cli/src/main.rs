//! `see`: enhance saliency maps with edge maps, evaluate them, generate
//! synthetic corpora and run quick self checks.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use config::{FileConfig, PipelineFile};
use see_core::harness::batch::{parse_variants, run_batch, BatchOptions, FullProvider, Variant};
use see_core::harness::ingest::ingest_methods;
use see_core::harness::report::{emit_report, Formats};
use see_core::harness::synth::{generate_synthetic, Corruption, ShapeKind, SyntheticSpec};
use see_core::io::{load_color, load_map, save_color, save_map};
use see_core::pipeline::{reconstruct_pre, see_full, SeeConfig};
use see_core::provider::{ExternalCommand, FixedMaps, MeanThresholdLuma, PrecomputedDirectory, SaliencyProvider};
use see_core::selftest::run_selftest;
use see_core::solver::GreenCache;
use see_core::SeeError;

#[derive(Parser)]
#[command(name = "see", version, about = "Saliency enhancement with edge maps")]
struct Cli {
    /// JSON file with defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance one saliency map, or every key of a dataset with --root.
    Enhance(EnhanceArgs),
    /// Evaluate methods and enhanced variants over a dataset.
    Eval(EvalArgs),
    /// Write a seeded synthetic dataset.
    Synth(SynthArgs),
    /// Run quick property checks.
    Selftest,
}

#[derive(Args, Default)]
struct PipelineArgs {
    /// Smooth-step contrast order (0 disables it).
    #[arg(long)]
    contrast_k: Option<u32>,
    /// Gaussian blur applied to the saliency map before post-processing.
    #[arg(long)]
    blur_sigma: Option<f64>,
    /// Zero padding around every field before integration.
    #[arg(long)]
    pad_margin: Option<usize>,
    #[arg(long, overrides_with = "no_pre")]
    pre: bool,
    /// Skip image pre-processing.
    #[arg(long)]
    no_pre: bool,
    #[arg(long, overrides_with = "no_post")]
    post: bool,
    /// Skip saliency post-processing.
    #[arg(long)]
    no_post: bool,
}

fn switch(on: bool, off: bool) -> Option<bool> {
    match (on, off) {
        (_, true) => Some(false),
        (true, false) => Some(true),
        _ => None,
    }
}

impl PipelineArgs {
    fn resolve(&self, file: &PipelineFile) -> SeeConfig {
        let d = SeeConfig::default();
        SeeConfig {
            contrast_k: self.contrast_k.or(file.contrast_k).unwrap_or(d.contrast_k),
            blur_sigma: self.blur_sigma.or(file.blur_sigma).unwrap_or(d.blur_sigma),
            pad_margin: self.pad_margin.or(file.pad_margin).unwrap_or(d.pad_margin),
            run_pre: switch(self.pre, self.no_pre).or(file.pre).unwrap_or(d.run_pre),
            run_post: switch(self.post, self.no_post).or(file.post).unwrap_or(d.run_post),
        }
    }
}

#[derive(Args)]
struct EnhanceArgs {
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Saliency map of the input image.
    #[arg(long)]
    saliency: Option<PathBuf>,
    /// Saliency map of the reconstructed image, computed offline.
    #[arg(long)]
    reconstructed_saliency: Option<PathBuf>,
    /// Output map, or output directory with --root.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the pre-processed image (a directory with --root).
    #[arg(long)]
    export_reconstructed: Option<PathBuf>,
    /// Saliency program, e.g. "model --in {input} --out {output}".
    #[arg(long)]
    provider_cmd: Option<String>,
    /// Use the built-in mean-thresholded luma provider.
    #[arg(long)]
    toy_provider: bool,
    /// Dataset root for batch mode.
    #[arg(long)]
    root: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Method whose maps are enhanced in batch mode.
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    root: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Comma-separated methods; defaults to every directory under saliency/.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Comma-separated subset of baseline,post,full.
    #[arg(long)]
    variants: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Leave out incomplete keys instead of aborting.
    #[arg(long)]
    skip_incomplete: bool,
    /// Saliency program used by the full variant for every method.
    #[arg(long)]
    provider_cmd: Option<String>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Blur of the corrupted saliency maps.
    #[arg(long)]
    blur_sigma: Option<f64>,
    /// Background noise amplitude.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    hole_probability: Option<f64>,
    /// Share of the object depth removed by a hole.
    #[arg(long)]
    hole_fraction: Option<f64>,
    /// Comma-separated subset of rectangle,disk,l-shape.
    #[arg(long, value_delimiter = ',')]
    shapes: Option<Vec<String>>,
    /// Generate clean saliency maps.
    #[arg(long)]
    no_corruption: bool,
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    SeeError::InvalidParameter(msg.into()).into()
}

fn required<T>(value: Option<T>, flag: &str) -> anyhow::Result<T> {
    value.ok_or_else(|| invalid(format!("--{flag} is required")))
}

fn parse_command(template: &str) -> anyhow::Result<ExternalCommand> {
    Ok(ExternalCommand::parse(template)?)
}

fn enhance(args: EnhanceArgs, file: &FileConfig) -> anyhow::Result<()> {
    let f = &file.enhance;
    let cfg = args.pipeline.resolve(&file.pipeline);
    cfg.validate()?;
    if !cfg.run_pre && !cfg.run_post {
        return Err(invalid("--no-pre and --no-post leave nothing to do"));
    }
    let provider_cmd = args.provider_cmd.or(f.provider_cmd.clone());
    let toy = args.toy_provider || f.toy_provider.unwrap_or(false);
    let export = args.export_reconstructed.or(f.export_reconstructed.clone());
    let out = args.out.or(f.out.clone());
    let cache = GreenCache::new();

    if let Some(root) = args.root.or(f.root.clone()) {
        let method = args.method.or(f.method.clone());
        let manifest = args.manifest.or(f.manifest.clone());
        return enhance_batch(&root, manifest.as_deref(), method, provider_cmd, toy, export, out, &cfg, &cache);
    }

    let image_path = required(args.image.or(f.image.clone()), "image")?;
    let edges_path = required(args.edges.or(f.edges.clone()), "edges")?;
    let image = load_color(&image_path)?;
    let edges = load_map(&edges_path)?;
    if let Some(path) = &export {
        save_color(&reconstruct_pre(&image, &edges, &cfg, &cache)?, path)?;
        log::info!("wrote reconstructed image to {}", path.display());
        if out.is_none() {
            return Ok(());
        }
    }
    let out = required(out, "out")?;
    let load_opt = |p: Option<PathBuf>| p.map(|p| load_map(&p)).transpose();
    let fallback: Option<Box<dyn SaliencyProvider>> = match (&provider_cmd, toy) {
        (Some(cmd), _) => Some(Box::new(parse_command(cmd)?)),
        (None, true) => Some(Box::new(MeanThresholdLuma)),
        (None, false) => None,
    };
    let provider = FixedMaps {
        original: load_opt(args.saliency.or(f.saliency.clone()))?,
        reconstructed: load_opt(args.reconstructed_saliency.or(f.reconstructed_saliency.clone()))?,
        fallback,
    };
    if provider.original.is_none() && provider.fallback.is_none() {
        return Err(invalid("need --saliency, --provider-cmd or --toy-provider"));
    }
    if cfg.run_pre && provider.reconstructed.is_none() && provider.fallback.is_none() {
        return Err(invalid(
            "the pre stage needs --reconstructed-saliency, --provider-cmd or --toy-provider \
             (export the image with --export-reconstructed, or pass --no-pre)",
        ));
    }
    let key = image_path.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
    let result = see_full(key, &image, &edges, &provider, &cfg, &cache)?;
    save_map(&result, &out)?;
    log::info!("wrote {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn enhance_batch(
    root: &Path,
    manifest: Option<&Path>,
    method: Option<String>,
    provider_cmd: Option<String>,
    toy: bool,
    export: Option<PathBuf>,
    out: Option<PathBuf>,
    cfg: &SeeConfig,
    cache: &GreenCache,
) -> anyhow::Result<()> {
    let method = match (method, toy) {
        (Some(m), _) => m,
        (None, true) => MeanThresholdLuma::NAME.to_owned(),
        (None, false) => return Err(invalid("--method is required with --root")),
    };
    if export.is_none() && out.is_none() {
        return Err(invalid("nothing to write: pass --out and/or --export-reconstructed"));
    }
    let data = ingest_methods(root, manifest, Some(std::slice::from_ref(&method)), false)?;
    let command = provider_cmd.as_deref().map(parse_command).transpose()?;
    let mut failures = 0usize;
    for rec in &data.records {
        let image = load_color(&rec.image_path)?;
        let edges = load_map(&rec.edge_path)?;
        if let Some(dir) = &export {
            save_color(&reconstruct_pre(&image, &edges, cfg, cache)?, dir.join(format!("{}.png", rec.key)))?;
        }
        let Some(out) = &out else { continue };
        let provider: Box<dyn SaliencyProvider> = match (&command, rec.saliency_paths.get(&method)) {
            (Some(cmd), _) => Box::new(cmd.clone()),
            (None, Some(path)) => Box::new(PrecomputedDirectory::new(
                &method,
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
            )),
            (None, None) if method == MeanThresholdLuma::NAME => Box::new(MeanThresholdLuma),
            (None, None) => return Err(invalid(format!("no maps for method '{method}'"))),
        };
        match see_full(&rec.key, &image, &edges, provider.as_ref(), cfg, cache) {
            Ok(map) => save_map(&map, out.join(format!("{}.png", rec.key)))?,
            Err(e) => {
                failures += 1;
                log::error!("{}: {e}", rec.key);
            }
        }
    }
    println!("enhanced {} of {} images", data.records.len() - failures, data.records.len());
    if failures > 0 {
        bail!("{failures} images failed");
    }
    Ok(())
}

fn eval(args: EvalArgs, file: &FileConfig) -> anyhow::Result<()> {
    let f = &file.eval;
    let cfg = args.pipeline.resolve(&file.pipeline);
    let root = required(args.root.or(f.root.clone()), "root")?;
    let manifest = args.manifest.or(f.manifest.clone());
    let out = args.out.or(f.out.clone()).unwrap_or_else(|| PathBuf::from("see_report"));
    let variants = match (args.variants, &f.variants) {
        (Some(list), _) => parse_variants(&list)?,
        (None, Some(list)) => parse_variants(&list.join(","))?,
        (None, None) => vec![Variant::Baseline, Variant::Post],
    };
    let jobs = args
        .jobs
        .or(f.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let skip = args.skip_incomplete || f.skip_incomplete.unwrap_or(false);
    let provider = match args.provider_cmd.or(f.provider_cmd.clone()) {
        Some(cmd) => FullProvider::Command(parse_command(&cmd)?),
        None => FullProvider::Precomputed,
    };
    let wanted = args.methods.or(f.methods.clone());

    let data = ingest_methods(&root, manifest.as_deref(), wanted.as_deref(), skip)?;
    let methods = match wanted {
        Some(list) => {
            for m in &list {
                if !data.methods.contains(m) && m != MeanThresholdLuma::NAME {
                    return Err(invalid(format!("method '{m}' not found under {}", root.display())));
                }
            }
            list
        }
        None => data.methods.clone(),
    };
    if methods.is_empty() {
        return Err(invalid(format!(
            "no saliency methods under {}; pass --methods {} for the built-in provider",
            root.display(),
            MeanThresholdLuma::NAME
        )));
    }
    let opts = BatchOptions {
        methods,
        variants,
        config: cfg,
        jobs,
        provider,
    };
    let mut report = run_batch(&data.records, &opts)?;
    report.skipped = data.skipped;
    emit_report(&report, &out, Formats::all())?;

    println!("{:<16} {:<9} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8}", "method", "variant", "images", "F_m", "P_max", "meanPR", "AUC", "MAE");
    for a in &report.aggregate {
        let m = a.mean;
        println!(
            "{:<16} {:<9} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            a.method, a.variant, a.images, m.f_measure, m.p_max, m.mean_pr, m.auc, m.mae
        );
    }
    if !report.skipped.is_empty() {
        println!("skipped {} keys", report.skipped.len());
    }
    if !report.failures.is_empty() {
        println!("{} evaluations failed; see report.json", report.failures.len());
    }
    println!("report written to {}", out.display());
    Ok(())
}

fn parse_shape(name: &str) -> anyhow::Result<ShapeKind> {
    serde_json::from_value(serde_json::Value::String(name.trim().to_owned()))
        .map_err(|_| invalid(format!("unknown shape '{name}' (expected rectangle, disk or l-shape)")))
}

fn synth(args: SynthArgs, file: &FileConfig) -> anyhow::Result<()> {
    let f = &file.synth;
    let d = SyntheticSpec::default();
    let dc = if args.no_corruption { Corruption::none() } else { d.corruption.clone() };
    let shapes = match args.shapes.or(f.shapes.clone()) {
        Some(list) => list.iter().map(|s| parse_shape(s)).collect::<anyhow::Result<Vec<_>>>()?,
        None => d.shapes.clone(),
    };
    let spec = SyntheticSpec {
        count: args.count.or(f.count).unwrap_or(d.count),
        size: args.size.or(f.size).unwrap_or(d.size),
        seed: args.seed.or(f.seed).unwrap_or(d.seed),
        shapes,
        corruption: Corruption {
            blur_sigma: args.blur_sigma.or(f.blur_sigma).unwrap_or(dc.blur_sigma),
            noise_amplitude: args.noise.or(f.noise).unwrap_or(dc.noise_amplitude),
            hole_probability: args.hole_probability.or(f.hole_probability).unwrap_or(dc.hole_probability),
            hole_fraction: args.hole_fraction.or(f.hole_fraction).unwrap_or(dc.hole_fraction),
        },
    };
    let out = required(args.out.or(f.out.clone()), "out")?;
    let records = generate_synthetic(&spec, &out)?;
    println!("wrote {} items to {}", records.len(), out.display());
    Ok(())
}

fn selftest() -> anyhow::Result<()> {
    let mut failed = 0;
    for r in run_selftest() {
        println!("{} {}: {}", if r.passed { "ok  " } else { "FAIL" }, r.name, r.detail);
        failed += usize::from(!r.passed);
    }
    if failed > 0 {
        bail!("{failed} self checks failed");
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Enhance(a) => enhance(a, &file),
        Command::Eval(a) => eval(a, &file),
        Command::Synth(a) => synth(a, &file),
        Command::Selftest => selftest(),
    }
    .context("see failed")
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let validation = err
        .chain()
        .any(|e| e.downcast_ref::<SeeError>().is_some_and(SeeError::is_validation));
    if validation {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
