use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nestseg::io;
use nestseg::pipeline::{FineSource, Scene, SceneFiles};
use nestseg::report::{save_reports, ReportRecord};
use nestseg::seqfile::{load_sequence, save_sequence, ModeName, ScopeName};
use nestseg::server::{self, Session};
use nestseg_core::hierarchy::{extract_partition, HierarchyParams};
use nestseg_core::label::{grid_partition, LabelMap};
use nestseg_core::metrics::{evaluate, render_overlay, DEFAULT_BR_EPS};

#[derive(Parser)]
#[command(name = "nestseg", version, about = "Nested hierarchical superpixels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a merge sequence for one image.
    Build(BuildArgs),
    /// Extract partitions with exactly K regions from a merge sequence.
    Extract(ExtractArgs),
    /// Evaluate partitions against ground truth.
    Eval(EvalArgs),
    /// Serve an interactive session over HTTP.
    Serve(ServeArgs),
}

#[derive(Args, Clone)]
struct SceneArgs {
    /// Input image.
    #[arg(long)]
    image: PathBuf,
    /// Fine partition (16-bit label PNG).
    #[arg(long, conflicts_with = "init_grid", required_unless_present = "init_grid")]
    fine: Option<PathBuf>,
    /// Use a regular grid of N regions as the fine partition.
    #[arg(long, value_name = "N")]
    init_grid: Option<usize>,
    /// Object prior map (label PNG); the whole image is one object if omitted.
    #[arg(long)]
    objects: Option<PathBuf>,
    /// Deep feature tensor (HSPF).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Attention map (8/16-bit grayscale PNG).
    #[arg(long)]
    attention: Option<PathBuf>,
    /// Click file (JSON array of {x, y, sign, strength}).
    #[arg(long)]
    clicks: Option<PathBuf>,
    /// Spatial weight coefficient.
    #[arg(long, default_value_t = 5.0)]
    wpos: f64,
    /// Attention weight.
    #[arg(long)]
    watt: Option<f64>,
    /// Attention averaging; defaults to `object` when attention or clicks are given.
    #[arg(long, value_enum)]
    attention_mode: Option<ModeName>,
    /// Phases the attention term applies to.
    #[arg(long, value_enum, default_value_t = ScopeName::Both)]
    attention_scope: ScopeName,
}

impl SceneArgs {
    fn files(&self) -> SceneFiles {
        SceneFiles {
            image: self.image.clone(),
            fine: match (&self.fine, self.init_grid) {
                (Some(path), _) => FineSource::File(path.clone()),
                (None, Some(n)) => FineSource::Grid(n),
                (None, None) => unreachable!("clap requires one of --fine / --init-grid"),
            },
            objects: self.objects.clone(),
            features: self.features.clone(),
            attention: self.attention.clone(),
            clicks: self.clicks.clone(),
        }
    }

    fn params(&self, default_watt: f64) -> HierarchyParams {
        let has_source = self.attention.is_some() || self.clicks.is_some();
        let mode = self
            .attention_mode
            .unwrap_or(if has_source { ModeName::Object } else { ModeName::Off });
        HierarchyParams {
            w_pos: self.wpos,
            w_att: self.watt.unwrap_or(default_watt),
            attention_mode: mode.into(),
            attention_scope: self.attention_scope.into(),
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Output merge sequence (JSON).
    #[arg(long, short)]
    out: PathBuf,
    /// Also write the fine partition used (useful with --init-grid).
    #[arg(long)]
    fine_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Merge sequence (JSON).
    #[arg(long)]
    seq: PathBuf,
    /// Fine partition the sequence was built on.
    #[arg(long, conflicts_with = "init_grid", required_unless_present = "init_grid")]
    fine: Option<PathBuf>,
    /// Regenerate a grid fine partition of N regions (needs --image).
    #[arg(long, value_name = "N", requires = "image")]
    init_grid: Option<usize>,
    /// Image, for grid regeneration and overlays.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Region counts, comma separated.
    #[arg(long, short, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Also write boundary overlays (needs --image).
    #[arg(long, requires = "image")]
    overlay: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Partitions to evaluate.
    #[arg(long, num_args = 1.., conflicts_with = "batch_dir")]
    partition: Vec<PathBuf>,
    /// Ground-truth segmentations; metrics are averaged over them.
    #[arg(long, num_args = 1.., conflicts_with = "gt_dir")]
    gt: Vec<PathBuf>,
    /// Coarser level for nestedness of the coarsest partition.
    #[arg(long)]
    coarser: Option<PathBuf>,
    /// Directory of per-image subdirectories holding partition PNGs.
    #[arg(long, requires = "gt_dir")]
    batch_dir: Option<PathBuf>,
    /// Ground truths per image: `<name>.png` or a `<name>/` directory of PNGs.
    #[arg(long)]
    gt_dir: Option<PathBuf>,
    /// Boundary recall tolerance in pixels.
    #[arg(long, default_value_t = DEFAULT_BR_EPS)]
    eps: usize,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Ground truth enabling /api/metrics.
    #[arg(long, num_args = 1..)]
    gt: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BR_EPS)]
    eps: usize,
    /// Directory of static UI assets served at /.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build(args) => build(args),
        Command::Extract(args) => extract(args),
        Command::Eval(args) => eval(args),
        Command::Serve(args) => serve(args),
    }
}

fn build(args: BuildArgs) -> Result<()> {
    let scene = Scene::load(&args.scene.files())?;
    let params = args.scene.params(0.0);
    let outcome = scene.build(&scene.clicks, &params)?;
    let (intra, inter) = outcome.phase_counts();
    log::info!(
        "{} regions: {intra} phase-1 merges, {inter} phase-2 merges in {:.3}s",
        outcome.seq.n_f,
        outcome.elapsed.as_secs_f64()
    );
    if let Some(path) = &args.fine_out {
        io::save_label_map(path, &scene.fine)?;
    }
    save_sequence(&args.out, &outcome.seq)?;
    Ok(())
}

fn extract(args: ExtractArgs) -> Result<()> {
    let seq = load_sequence(&args.seq)?;
    let image = args.image.as_deref().map(io::load_image).transpose()?;
    let fine = match (&args.fine, args.init_grid, &image) {
        (Some(path), _, _) => io::load_label_map(path)?,
        (None, Some(n), Some(img)) => grid_partition(img.width(), img.height(), n)?,
        _ => bail!("either --fine or --init-grid with --image is required"),
    };
    if let Some(&bad) = args.k.iter().find(|&&k| k == 0 || k > seq.n_f) {
        bail!("k = {bad} is outside [1, {}]", seq.n_f);
    }
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    for &k in &args.k {
        let labels = extract_partition(&seq, &fine, k)?;
        let path = args.out_dir.join(format!("partition_k{k}.png"));
        io::save_label_map(&path, &labels)?;
        if let (true, Some(img)) = (args.overlay, &image) {
            let painted = render_overlay(img, &labels, server::OVERLAY_COLOR)?;
            io::save_rgb_png(&args.out_dir.join(format!("overlay_k{k}.png")), &painted)?;
        }
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn evaluate_levels(
    image: Option<String>,
    paths: &[PathBuf],
    gts: &[LabelMap],
    coarser: Option<&LabelMap>,
    eps: usize,
) -> Result<Vec<ReportRecord>> {
    let mut levels = paths
        .iter()
        .map(|p| io::load_label_map(p).map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    levels.sort_by_key(|l| std::cmp::Reverse(l.count()));
    let mut reports = Vec::with_capacity(levels.len());
    for (i, level) in levels.iter().enumerate() {
        let next = levels.get(i + 1).or(coarser);
        let report = evaluate(level, gts, eps, next)?;
        reports.push(ReportRecord::new(image.clone(), &report));
    }
    Ok(reports)
}

fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

fn eval(args: EvalArgs) -> Result<()> {
    let reports = if let (Some(batch), Some(gt_dir)) = (&args.batch_dir, &args.gt_dir) {
        let mut images: Vec<PathBuf> = std::fs::read_dir(batch)
            .with_context(|| format!("reading {}", batch.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        images.sort();
        let mut all = Vec::new();
        for dir in images {
            let name = dir.file_name().unwrap().to_string_lossy().into_owned();
            let gt_paths = if gt_dir.join(&name).is_dir() {
                png_files(&gt_dir.join(&name))?
            } else {
                vec![gt_dir.join(format!("{name}.png"))]
            };
            let gts = gt_paths
                .iter()
                .map(|p| io::load_label_map(p).map_err(anyhow::Error::from))
                .collect::<Result<Vec<_>>>()
                .with_context(|| format!("ground truth for {name}"))?;
            if gts.is_empty() {
                bail!("no ground truth for {name}");
            }
            all.extend(evaluate_levels(Some(name), &png_files(&dir)?, &gts, None, args.eps)?);
        }
        all
    } else {
        if args.partition.is_empty() {
            bail!("give --partition files or --batch-dir");
        }
        if args.gt.is_empty() {
            bail!("at least one --gt is required");
        }
        let gts = args
            .gt
            .iter()
            .map(|p| io::load_label_map(p).map_err(anyhow::Error::from))
            .collect::<Result<Vec<_>>>()?;
        let coarser = args.coarser.as_deref().map(io::load_label_map).transpose()?;
        evaluate_levels(None, &args.partition, &gts, coarser.as_ref(), args.eps)?
    };
    save_reports(args.json.as_deref(), args.csv.as_deref(), &reports)?;
    if args.json.is_none() {
        println!("{}", nestseg::report::reports_to_json(&reports));
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let scene = Scene::load(&args.scene.files())?;
    let params = args.scene.params(0.5);
    let gts = args
        .gt
        .iter()
        .map(|p| io::load_label_map(p).map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    let session = Arc::new(Session::new(scene, params, gts, args.eps)?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(server::serve(session, args.static_dir, args.port))
}
