use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use sfdi_forge::dataset::{build_dataset, collect_composites, collect_sweep_pairs, DatasetOptions, Layout, SplitSpec};
use sfdi_forge::groundtruth::render_ground_truth;
use sfdi_forge::image;
use sfdi_forge::metrics::{evaluate_dataset, load_property_image, write_diff_maps, ChannelScaling, EvalOptions};
use sfdi_forge::scene::{build_template, Overrides, SceneFile, TemplateName};
use sfdi_forge::sweep::{generate, preset, sha256_hex, spec_dir, FactorMode, FrameStatus, SweepSpec};
use sfdi_forge::transport::{render_on, with_workers, RenderSettings, RenderStats};

const OUT_ENV: &str = "SFDI_FORGE_OUT";

#[derive(Parser, Debug)]
#[command(name = "sfdi-forge", version, about = "Synthetic structured-illumination dataset forge")]
struct Cli {
    /// TOML file with default values for any flag (see README).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render one scene: lit image, ground truth and a JSON sidecar.
    Render(RenderArgs),
    /// Run a keyframed sweep (spec file or preset) into a dataset directory.
    Sweep(SweepArgs),
    /// Pair, split and package sweep outputs into train/val composites.
    Dataset(DatasetArgs),
    /// Compare predicted property maps against references.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Scene template name.
    #[arg(long, conflicts_with = "scene")]
    template: Option<String>,
    /// Scene file (TOML with `template` plus parameter overrides).
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Pattern spatial frequency in mm⁻¹.
    #[arg(long, allow_negative_numbers = true)]
    freq: Option<f64>,
    /// Pattern phase in radians.
    #[arg(long, allow_negative_numbers = true)]
    phase: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Samples per pixel.
    #[arg(long)]
    spp: Option<u32>,
    #[arg(long)]
    workers: Option<usize>,
    /// Square image size in pixels.
    #[arg(long)]
    resolution: Option<usize>,
    /// Parameter override `path=value`, repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Sweep spec file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    spec: Option<PathBuf>,
    /// Built-in sweep bundle: rectangular-example, rectangular-family, cylinder-full.
    #[arg(long)]
    preset: Option<String>,
    /// Factors a preset sweeps: final, final-abs, final-sct, all.
    #[arg(long)]
    factors: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    spp: Option<u32>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Base seed; per-frame seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct DatasetArgs {
    /// Sweep output directories, or composite directories with --import.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, requires = "val")]
    train: Option<usize>,
    #[arg(long, requires = "train")]
    val: Option<usize>,
    #[arg(long, conflicts_with_all = ["train", "val"])]
    val_fraction: Option<f64>,
    /// Split seed, recorded in the manifest.
    #[arg(long)]
    seed: Option<u64>,
    /// Zero the blue channel of every composite.
    #[arg(long)]
    drop_blue: bool,
    /// Write ground truth on the left and input on the right.
    #[arg(long)]
    swap_halves: bool,
    /// Inputs are ready-made side-by-side composites.
    #[arg(long)]
    import: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Directory of predicted property maps.
    #[arg(long)]
    pred: PathBuf,
    /// Directory of reference maps or composites (right half is used).
    #[arg(long = "ref")]
    reference: PathBuf,
    /// proxy (raw 0-255) or physical (mm⁻¹).
    #[arg(long)]
    scaling: Option<String>,
    /// Fit a least-squares scale to each prediction first.
    #[arg(long)]
    scale_correct: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-image difference maps (PNG + CSV).
    #[arg(long)]
    diff_maps: bool,
}

/// Defaults read from `--config`. Command-line flags win.
#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    out_root: Option<PathBuf>,
    workers: Option<usize>,
    seed: Option<u64>,
    spp: Option<u32>,
    resolution: Option<usize>,
    template: Option<String>,
    freq: Option<f64>,
    factors: Option<String>,
    dataset: DatasetConfig,
    eval: EvalConfig,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct DatasetConfig {
    train: Option<usize>,
    val: Option<usize>,
    val_fraction: Option<f64>,
    seed: Option<u64>,
    drop_blue: Option<bool>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct EvalConfig {
    scaling: Option<String>,
    scale_correct: Option<bool>,
    diff_maps: Option<bool>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read config", path.display()))?;
    toml::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))
}

fn out_dir(flag: Option<PathBuf>, cfg: &FileConfig, sub: &str) -> PathBuf {
    flag.unwrap_or_else(|| {
        let root = std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .or_else(|| cfg.out_root.clone())
            .unwrap_or_else(|| "out".into());
        root.join(sub)
    })
}

fn workers(flag: Option<usize>, cfg: &FileConfig) -> usize {
    flag.or(cfg.workers).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn parse_set(items: &[String], overrides: &mut Overrides<f64>) -> Result<()> {
    for item in items {
        let (k, v) = item.split_once('=').with_context(|| format!("--set `{item}`: expected PATH=VALUE"))?;
        let value: f64 = v.trim().parse().with_context(|| format!("--set `{item}`: `{v}` is not a number"))?;
        overrides.insert(k.trim().to_string(), value);
    }
    Ok(())
}

fn log_config(name: &str, value: &impl Serialize) {
    log::info!("{name} configuration: {}", serde_json::to_string(value).unwrap_or_default());
}

fn write_png(img: &image::RgbImage, path: &Path) -> Result<String> {
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .with_context(|| format!("{}: encode failed", path.display()))?;
    std::fs::write(path, &bytes).with_context(|| format!("{}: write failed", path.display()))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Serialize)]
struct RenderSidecar<'a> {
    template: TemplateName,
    overrides: &'a Overrides<f64>,
    settings: &'a RenderSettings<f64>,
    workers: usize,
    stats: RenderStats,
    gt_seconds: f64,
    lit: &'static str,
    gt: &'static str,
    lit_sha256: String,
    gt_sha256: String,
}

fn cmd_render(args: RenderArgs, cfg: &FileConfig) -> Result<()> {
    let (template, mut overrides) = match &args.scene {
        Some(path) => {
            let file = SceneFile::<f64>::load(path)?;
            (file.template, file.overrides)
        }
        None => {
            let name = args.template.as_deref().or(cfg.template.as_deref()).unwrap_or("rectangular");
            (name.parse::<TemplateName>()?, Overrides::new())
        }
    };
    if let Some(f) = args.freq.or(cfg.freq) {
        overrides.insert("pattern.frequency".into(), f);
    }
    if let Some(p) = args.phase {
        overrides.insert("pattern.phase".into(), p);
    }
    if let Some(n) = args.resolution.or(cfg.resolution) {
        overrides.insert("camera.width".into(), n as f64);
        overrides.insert("camera.height".into(), n as f64);
    }
    parse_set(&args.set, &mut overrides)?;

    let scene = build_template(template, &overrides)?;
    let mut settings = RenderSettings::<f64>::default();
    if let Some(spp) = args.spp.or(cfg.spp) {
        settings.samples_per_pixel = spp;
    }
    settings.rng_seed = args.seed.or(cfg.seed).unwrap_or(0);
    settings.validate()?;
    let workers = workers(args.workers, cfg);
    let out = out_dir(args.out, cfg, "render");
    log_config(
        "render",
        &serde_json::json!({ "template": template, "overrides": overrides, "settings": settings, "workers": workers, "out": out }),
    );

    std::fs::create_dir_all(&out).with_context(|| format!("{}: cannot create output directory", out.display()))?;
    let lit = render_on(&scene, &settings, workers)?;
    let gt_start = Instant::now();
    let gt = with_workers(workers, || render_ground_truth(&scene))??;
    let gt_seconds = gt_start.elapsed().as_secs_f64();
    let lit_sha256 = write_png(&lit.to_rgb8(), &out.join("lit.png"))?;
    let gt_sha256 = write_png(&gt, &out.join("gt.png"))?;
    let sidecar = RenderSidecar {
        template,
        overrides: &overrides,
        settings: &settings,
        workers,
        stats: lit.stats,
        gt_seconds,
        lit: "lit.png",
        gt: "gt.png",
        lit_sha256,
        gt_sha256,
    };
    let path = out.join("render.json");
    std::fs::write(&path, serde_json::to_string_pretty(&sidecar)?)
        .with_context(|| format!("{}: write failed", path.display()))?;
    println!(
        "rendered {template} {}x{} at {} spp in {:.2}s (ground truth {:.2}s) -> {}",
        scene.camera.width,
        scene.camera.height,
        settings.samples_per_pixel,
        lit.stats.seconds,
        gt_seconds,
        out.display()
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs, cfg: &FileConfig) -> Result<()> {
    let out = out_dir(args.out, cfg, "sweep");
    let (specs, nested) = match (&args.spec, &args.preset) {
        (Some(path), _) => (vec![SweepSpec::<f64>::load(path)?], false),
        (None, Some(name)) => {
            let mode: FactorMode = args.factors.as_deref().or(cfg.factors.as_deref()).unwrap_or("final").parse()?;
            (preset::<f64>(name, mode)?, true)
        }
        (None, None) => bail!("either --spec or --preset is required"),
    };
    let workers = workers(args.workers, cfg);
    let mut total_rendered = 0;
    let mut total_skipped = 0;
    for mut spec in specs {
        if let Some(spp) = args.spp.or(cfg.spp) {
            spec.render.samples_per_pixel = spp;
        }
        if let Some(n) = args.resolution.or(cfg.resolution) {
            spec.overrides.insert("camera.width".into(), n as f64);
            spec.overrides.insert("camera.height".into(), n as f64);
        }
        if let Some(seed) = args.seed.or(cfg.seed) {
            spec.render.rng_seed = seed;
        }
        let dir = if nested { spec_dir(&out, &spec.name) } else { out.clone() };
        log_config("sweep", &serde_json::json!({ "spec": spec, "workers": workers, "out": dir }));
        let name = spec.name.clone();
        let summary = with_workers(workers, || {
            generate(&spec, &dir, |ev| match &ev.status {
                FrameStatus::Rendered { render_seconds, gt_seconds } => println!(
                    "{name} frame {:05} [{}/{}] lit {render_seconds:.2}s gt {gt_seconds:.2}s",
                    ev.frame,
                    ev.index + 1,
                    ev.total
                ),
                FrameStatus::Skipped => log::info!("{name} frame {:05} up to date", ev.frame),
            })
        })?
        .with_context(|| format!("sweep `{}` into {}", spec.name, dir.display()))?;
        println!("{}: {} rendered, {} skipped", spec.name, summary.rendered, summary.skipped);
        total_rendered += summary.rendered;
        total_skipped += summary.skipped;
    }
    println!("{total_rendered} rendered, {total_skipped} skipped");
    Ok(())
}

fn cmd_dataset(args: DatasetArgs, cfg: &FileConfig) -> Result<()> {
    let d = &cfg.dataset;
    let split = match (args.train.or(d.train), args.val.or(d.val), args.val_fraction.or(d.val_fraction)) {
        (_, _, Some(f)) if args.train.is_none() => SplitSpec::ValFraction(f),
        (Some(train), Some(val), _) => SplitSpec::Counts { train, val },
        _ => SplitSpec::ValFraction(0.3),
    };
    let opts = DatasetOptions {
        split,
        seed: args.seed.or(d.seed).or(cfg.seed).unwrap_or(0),
        drop_blue: args.drop_blue || d.drop_blue.unwrap_or(false),
        layout: if args.swap_halves { Layout::GtLeftInputRight } else { Layout::InputLeftGtRight },
        expect_size: None,
    };
    let out = out_dir(args.out, cfg, "dataset");
    log_config(
        "dataset",
        &serde_json::json!({ "input": args.input, "out": out, "split": opts.split, "seed": opts.seed,
            "drop_blue": opts.drop_blue, "layout": opts.layout, "import": args.import }),
    );
    let sources = if args.import { collect_composites(&args.input)? } else { collect_sweep_pairs(&args.input)? };
    let manifest = build_dataset(&sources, &out, &opts)?;
    println!(
        "{} pairs: {} train, {} val ({}x{}, seed {}) -> {}",
        sources.len(),
        manifest.header.train,
        manifest.header.val,
        manifest.header.width,
        manifest.header.height,
        opts.seed,
        out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs, cfg: &FileConfig) -> Result<()> {
    let e = &cfg.eval;
    let scaling = match args.scaling.as_deref().or(e.scaling.as_deref()).unwrap_or("proxy") {
        "proxy" => ChannelScaling::Proxy,
        "physical" => ChannelScaling::Physical,
        other => bail!("--scaling: unknown mode `{other}` (expected proxy or physical)"),
    };
    let opts = EvalOptions { scaling, scale_correct: args.scale_correct || e.scale_correct.unwrap_or(false) };
    let out = out_dir(args.out, cfg, "eval");
    let diff_maps = args.diff_maps || e.diff_maps.unwrap_or(false);
    log_config(
        "eval",
        &serde_json::json!({ "pred": args.pred, "ref": args.reference, "scaling": scaling,
            "scale_correct": opts.scale_correct, "out": out, "diff_maps": diff_maps }),
    );
    let report = evaluate_dataset(&args.pred, &args.reference, opts)?;
    report.write(&out)?;
    if diff_maps {
        let dir = out.join("diff");
        for m in &report.per_image {
            let pred = load_property_image(&args.pred.join(&m.id))?;
            let reference = load_property_image(&args.reference.join(&m.id))?;
            let stem = Path::new(&m.id).file_stem().and_then(|s| s.to_str()).unwrap_or(&m.id);
            write_diff_maps(stem, &pred, &reference, scaling, &dir)?;
        }
    }
    for name in &report.unmatched_pred {
        eprintln!("unmatched prediction: {name}");
    }
    for name in &report.unmatched_ref {
        eprintln!("unmatched reference: {name}");
    }
    println!(
        "{} images: NMAE absorption mean {:.2}% envelope {:.2}%, scattering mean {:.2}% envelope {:.2}% -> {}",
        report.per_image.len(),
        100.0 * report.mean_absorption,
        100.0 * report.envelope_absorption,
        100.0 * report.mean_scattering,
        100.0 * report.envelope_scattering,
        out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Render(a) => cmd_render(a, &cfg),
        Command::Sweep(a) => cmd_sweep(a, &cfg),
        Command::Dataset(a) => cmd_dataset(a, &cfg),
        Command::Eval(a) => cmd_eval(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
