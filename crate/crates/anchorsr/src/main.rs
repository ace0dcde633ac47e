use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use anchorsr::eval::{bicubic_dir, evaluate_dir, list_images};
use anchorsr::model_io::{file_digest, load_model, save_model};
use anchorsr::pipeline::{internal_feasible, sr_color, PipelineFlags, SearchMode};
use anchorsr::training::{DictMethod, RegressionMethod, TrainConfig, TrainReport};
use anchorsr::{train_model, Image, LumaConvention};

#[derive(Parser)]
#[command(
    name = "anchorsr",
    version,
    about = "Example-based single-image super-resolution via anchored ridge regression",
    after_help = "Thread count follows RAYON_NUM_THREADS. Exit codes: 0 success, 1 usage, 2 data error."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a model from a directory of sharp images
    Train(TrainArgs),
    /// Upscale one or more images with a trained model
    Sr(SrArgs),
    /// Score a model against a directory of ground-truth images
    Eval(EvalArgs),
    /// Train and score a grid of configurations
    Sweep(SweepArgs),
}

fn parse_dict(s: &str) -> Result<DictMethod, String> {
    DictMethod::parse(s).map_err(|e| e.to_string())
}

fn parse_luma(s: &str) -> Result<LumaConvention, String> {
    LumaConvention::parse(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct TrainArgs {
    /// Directory of high-resolution training images (png/bmp)
    #[arg(long)]
    input: PathBuf,
    /// Where to write the model file
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 3)]
    scale: u32,
    #[arg(long, default_value_t = 1024)]
    anchors: usize,
    /// Training sample budget (patch pairs pooled across the corpus)
    #[arg(long, default_value_t = 500_000)]
    samples: usize,
    /// Cascade length; stages beyond the first refine at scale 1
    #[arg(long, default_value_t = 1)]
    stages: usize,
    /// Skip rotation/flip augmentation of the corpus
    #[arg(long)]
    no_augment: bool,
    /// Specialize each anchor's regressor to 4 surrounding-content cells
    #[arg(long)]
    context: bool,
    /// Accepted for config parity; the coarse search index is derived from
    /// the dictionary at inference time (pass --hier to `sr`/`eval`)
    #[arg(long)]
    hier: bool,
    /// Dictionary learning method: ksvd or kmeans
    #[arg(long, default_value = "ksvd", value_parser = parse_dict)]
    dict: DictMethod,
    /// Build regression neighborhoods from dictionary atoms instead of
    /// training samples
    #[arg(long)]
    atom_neighborhoods: bool,
    /// Samples per regression neighborhood (or atoms, with --atom-neighborhoods)
    #[arg(long, default_value_t = 2048)]
    neighborhood: usize,
    /// Sparse-coding budget inside dictionary learning
    #[arg(long, default_value_t = 3)]
    sparsity: usize,
    #[arg(long, default_value_t = 20)]
    dict_iters: usize,
    #[arg(long, default_value_t = 50_000)]
    dict_samples: usize,
    /// Fraction of feature energy the PCA basis must keep
    #[arg(long, default_value_t = 0.99)]
    pca_energy: f64,
    /// Luma convention: studio (benchmark tables) or full
    #[arg(long, default_value = "studio", value_parser = parse_luma)]
    luma: LumaConvention,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            scale: self.scale,
            anchors: self.anchors,
            samples: self.samples,
            stages: self.stages,
            augment: !self.no_augment,
            context: self.context,
            dict_method: self.dict,
            regression: if self.atom_neighborhoods {
                RegressionMethod::AtomNeighborhoods
            } else {
                RegressionMethod::SampleNeighborhoods
            },
            dict_samples: self.dict_samples,
            dict_iters: self.dict_iters,
            sparsity: self.sparsity,
            neighborhood: self.neighborhood,
            pca_energy: self.pca_energy,
            luma: self.luma,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Args)]
struct SrArgs {
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    /// Output file (single input) or directory (multiple inputs)
    #[arg(long)]
    output: PathBuf,
    /// Input image(s)
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Average the eight symmetry-transformed predictions
    #[arg(long, short = 'e')]
    enhanced: bool,
    /// Iterative back projection against the input after the last stage
    #[arg(long, short = 'b')]
    back_project: bool,
    /// Blend in a model trained on the input image itself
    #[arg(long)]
    self_sim: bool,
    /// Coarse-to-fine anchor search instead of a linear scan
    #[arg(long)]
    hier: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    /// Directory of ground-truth images
    #[arg(long)]
    input: PathBuf,
    #[arg(long, short = 'e')]
    enhanced: bool,
    #[arg(long, short = 'b')]
    back_project: bool,
    #[arg(long)]
    self_sim: bool,
    #[arg(long)]
    hier: bool,
    /// Also score plain bicubic upscaling on the same protocol
    #[arg(long)]
    baseline: bool,
    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Directory of high-resolution training images
    #[arg(long)]
    input: PathBuf,
    /// Ground-truth directory each grid point is scored on
    #[arg(long)]
    eval: PathBuf,
    #[arg(long, default_value_t = 3)]
    scale: u32,
    /// Comma-separated anchor counts
    #[arg(long, default_value = "1024", value_delimiter = ',')]
    anchors: Vec<usize>,
    /// Comma-separated sample budgets
    #[arg(long, default_value = "500000", value_delimiter = ',')]
    samples: Vec<usize>,
    /// Comma-separated cascade lengths
    #[arg(long, default_value = "1", value_delimiter = ',')]
    stages: Vec<usize>,
    #[arg(long)]
    no_augment: bool,
    #[arg(long, default_value = "ksvd", value_parser = parse_dict)]
    dict: DictMethod,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn flags(enhanced: bool, back_project: bool, self_sim: bool, hier: bool) -> PipelineFlags {
    PipelineFlags {
        enhanced,
        back_project,
        internal: self_sim,
        search: if hier { SearchMode::Hierarchical } else { SearchMode::Linear },
    }
}

fn flags_code(f: &PipelineFlags) -> String {
    format!(
        "e{}b{}s{}h{}",
        f.enhanced as u8,
        f.back_project as u8,
        f.internal as u8,
        (f.search == SearchMode::Hierarchical) as u8
    )
}

fn load_dir(dir: &Path) -> anyhow::Result<Vec<Image>> {
    list_images(dir)?
        .iter()
        .map(|p| Ok(Image::load(p)?))
        .collect()
}

fn print_report(report: &TrainReport) {
    println!(
        "pools {:?}  encoders {:?}  flagged anchors {}",
        report.pool_sizes, report.encoder_dims, report.flagged_anchors
    );
}

fn run_train(args: &TrainArgs) -> anyhow::Result<()> {
    let cfg = args.config();
    println!(
        "train: scale {} anchors {} samples {} stages {} dict {:?} context {} augment {} seed {}",
        cfg.scale, cfg.anchors, cfg.samples, cfg.stages, cfg.dict_method, cfg.context,
        cfg.augment, cfg.seed
    );
    if args.hier {
        println!("note: --hier affects inference only; pass it to `sr` or `eval`");
    }
    let images = load_dir(&args.input)?;
    let (model, report) = train_model(&images, &cfg)?;
    save_model(&model, &args.output)?;
    print_report(&report);
    println!("model sha256 {}", file_digest(&args.output)?);
    println!("trained in {:.1}s -> {}", report.seconds, args.output.display());
    Ok(())
}

fn run_sr(args: &SrArgs) -> anyhow::Result<()> {
    let model = load_model(&args.model)?;
    let flags = flags(args.enhanced, args.back_project, args.self_sim, args.hier);
    let to_dir = args.inputs.len() > 1 || args.output.is_dir();
    if to_dir {
        std::fs::create_dir_all(&args.output)
            .with_context(|| format!("creating {}", args.output.display()))?;
    }
    for input in &args.inputs {
        let img = Image::load(input)?;
        if flags.internal && !internal_feasible(&img, model.scale()) {
            eprintln!(
                "warning: {} is too small for self-similar training; using the external model only",
                input.display()
            );
        }
        let out = sr_color(&model, &img, &flags)?;
        let dest = if to_dir {
            let stem = input.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
            args.output.join(format!("{stem}_x{}.png", model.scale().get()))
        } else {
            args.output.clone()
        };
        out.save(&dest)?;
        println!("{} -> {}", input.display(), dest.display());
    }
    Ok(())
}

fn run_eval(args: &EvalArgs) -> anyhow::Result<()> {
    let model = load_model(&args.model)?;
    let flags = flags(args.enhanced, args.back_project, args.self_sim, args.hier);
    let fingerprint = format!("{}:{}", file_digest(&args.model)?, flags_code(&flags));
    let report = evaluate_dir(&model, &flags, &args.input, Some(fingerprint))?;
    let mut text = Vec::new();
    report.write_text(&mut text)?;
    if args.baseline {
        writeln!(&mut text, "# bicubic baseline")?;
        bicubic_dir(&model, &args.input)?.write_text(&mut text)?;
    }
    match &args.output {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&text)?,
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> anyhow::Result<()> {
    let images = load_dir(&args.input)?;
    let quiet = flags(false, false, false, false);
    for &anchors in &args.anchors {
        for &samples in &args.samples {
            for &stages in &args.stages {
                let cfg = TrainConfig {
                    scale: args.scale,
                    anchors,
                    samples,
                    stages,
                    augment: !args.no_augment,
                    dict_method: args.dict,
                    seed: args.seed,
                    ..TrainConfig::default()
                };
                let (model, report) = train_model(&images, &cfg)?;
                let eval = evaluate_dir(&model, &quiet, &args.eval, None)?;
                println!(
                    "anchors={anchors} samples={samples} stages={stages} psnr_db={:.4} train_s={:.1} infer_s={:.3}",
                    eval.mean_psnr(),
                    report.seconds,
                    eval.mean_seconds()
                );
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.cmd {
        Cmd::Train(args) => run_train(args),
        Cmd::Sr(args) => run_sr(args),
        Cmd::Eval(args) => run_eval(args),
        Cmd::Sweep(args) => run_sweep(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
