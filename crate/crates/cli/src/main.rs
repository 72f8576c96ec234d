//! Command-line front end: denoise, inpaint, degrade, synth, metrics, bench.

mod bench;
mod config;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{resolve_params, SolverOverrides};
use twso::degrade::{
    add_gaussian_noise, add_salt_pepper, apply_mask, make_random_mask, make_shapes_fixture,
    make_stripe_fixture, GapGeometry, Seed,
};
use twso::grid::{load_image, load_image_channels, save_image, save_image_rgb};
use twso::metrics::{evaluate, MetricReport};
use twso::solver::{run, run_sotv, run_with_tensor, Problem, RunReport, SolverParams, Task};
use twso::tensor::build_diffusion_tensor;
use twso::{MaskField, ScalarField};

#[derive(Parser)]
#[command(
    name = "twso",
    version,
    about = "Tensor-weighted second-order variational image denoising and inpainting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Remove Gaussian or impulsive noise from an image
    Denoise(DenoiseArgs),
    /// Fill the masked region of an image
    Inpaint(InpaintArgs),
    /// Apply a reproducible degradation to an image
    Degrade {
        #[command(subcommand)]
        kind: DegradeKind,
    },
    /// Generate synthetic test images and masks
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Evaluate a restored image against a reference
    Metrics(MetricsArgs),
    /// Degrade, restore and evaluate every image of a corpus
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Clean image for PSNR/SSIM reporting
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Append a metric row to this CSV file (needs --reference)
    #[arg(long)]
    metrics_csv: Option<PathBuf>,
    /// TOML file with solver parameters; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the isotropic second-order model (identity tensor)
    #[arg(long)]
    sotv: bool,
    /// Process color images channel by channel with a shared luminance tensor
    #[arg(long)]
    channelwise: bool,
    /// Print one residual line per iteration to stderr
    #[arg(long)]
    verbose: bool,
    #[command(flatten)]
    solver: SolverOverrides,
}

#[derive(Args)]
struct InpaintArgs {
    #[arg(long)]
    input: PathBuf,
    /// Mask image: pixels with value >= 128 are treated as missing
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    metrics_csv: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sotv: bool,
    #[arg(long)]
    channelwise: bool,
    #[arg(long)]
    verbose: bool,
    #[command(flatten)]
    solver: SolverOverrides,
}

#[derive(Subcommand)]
enum DegradeKind {
    /// Add zero-mean Gaussian noise
    Gaussian {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        variance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replace a fraction of pixels with black or white impulses
    Saltpepper {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Drop a random fraction of pixels; writes the degraded image and mask
    Mask {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        mask_output: PathBuf,
        #[arg(long)]
        fraction: f64,
        /// Value written into the missing pixels
        #[arg(long, default_value_t = 0.0)]
        fill: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fill the missing pixels of an existing mask with a constant
    Applymask {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        fill: f64,
    },
}

#[derive(Subcommand)]
enum SynthKind {
    /// Black horizontal stripe on white plus a gap mask crossing it
    Stripe {
        /// Square image side in pixels
        #[arg(long, default_value_t = 64)]
        size: usize,
        /// Gap geometry as NAME:WIDTH with NAME one of
        /// straight, wide, slanted, zigzag
        #[arg(long, default_value = "straight:8")]
        gap: String,
        #[arg(long, default_value = "stripe.png")]
        output: PathBuf,
        #[arg(long, default_value = "stripe_mask.png")]
        mask_output: PathBuf,
        /// Also write the truth with the mask filled by this value
        #[arg(long)]
        degraded_output: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        fill: f64,
    },
    /// Piecewise-smooth test image with sharp and smooth structures
    Shapes {
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value = "shapes.png")]
        output: PathBuf,
    },
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long, visible_alias = "ref")]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    metrics_csv: Option<PathBuf>,
}

fn parse_gap(spec: &str) -> Result<GapGeometry> {
    let (name, width) = spec
        .split_once(':')
        .with_context(|| format!("gap spec {spec:?} is not NAME:WIDTH"))?;
    let width: usize = width
        .parse()
        .with_context(|| format!("gap width {width:?} is not an integer"))?;
    Ok(match name {
        "straight" => GapGeometry::Straight { width },
        "wide" => GapGeometry::Wide { width },
        "slanted" => GapGeometry::Slanted { width },
        "zigzag" => GapGeometry::Zigzag { width },
        other => bail!("unknown gap geometry {other:?}"),
    })
}

/// Appends one `command,input,reference,psnr,ssim,mse` row, writing the
/// header first when the file is new.
fn append_metrics_row(
    path: &Path,
    command: &str,
    input: &Path,
    reference: &Path,
    report: &MetricReport,
) -> Result<()> {
    let new_file = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening metrics csv {}", path.display()))?;
    let mut writer = csv::Writer::from_writer(file);
    if new_file {
        writer.write_record(["command", "input", "reference", "psnr", "ssim", "mse"])?;
    }
    writer.write_record([
        command,
        &input.display().to_string(),
        &reference.display().to_string(),
        &report.psnr.to_string(),
        &report.ssim.to_string(),
        &report.mse.to_string(),
    ])?;
    writer.flush()?;
    Ok(())
}

fn log_history(report: &RunReport) {
    for (k, s) in report.history.iter().enumerate() {
        eprintln!(
            "iter {:4}: |u-ut|={:.3e} |Hu-V|={:.3e} |TV-W|={:.3e} rel={:.3e}",
            k + 1,
            s.split_residual,
            s.hessian_residual,
            s.coupling_residual,
            s.relative_change
        );
    }
    eprintln!(
        "finished after {} iterations (converged: {})",
        report.iterations, report.converged
    );
}

/// Runs one restoration task on an already-loaded grayscale image.
fn restore_gray(
    input: ScalarField,
    mask: Option<MaskField>,
    params: &SolverParams,
    sotv: bool,
) -> Result<RunReport> {
    let problem = match mask {
        Some(mask) => Problem::inpaint(input, mask)?,
        None => Problem::denoise(input),
    };
    let report = if sotv {
        run_sotv(&problem, params)?
    } else {
        run(&problem, params)?
    };
    Ok(report)
}

/// Channel-wise color restoration with a tensor built from the channel mean.
fn restore_color(
    channels: Vec<ScalarField>,
    mask: Option<&MaskField>,
    params: &SolverParams,
    sotv: bool,
) -> Result<(Vec<ScalarField>, RunReport)> {
    let luminance = channels[0]
        .zip_map(&channels[1], |a, b| a + b)
        .zip_map(&channels[2], |ab, c| (ab + c) / 3.0);
    let tensor = build_diffusion_tensor(&luminance, &params.tensor);
    let mut outputs = Vec::with_capacity(3);
    let mut last = None;
    for channel in channels {
        let problem = match mask {
            Some(mask) => Problem::inpaint(channel, mask.clone())?,
            None => Problem::denoise(channel),
        };
        let report = if sotv {
            run_sotv(&problem, params)?
        } else {
            run_with_tensor(&problem, params, tensor.clone())?
        };
        outputs.push(report.image.clone());
        last = Some(report);
    }
    Ok((outputs, last.expect("three channels processed")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_restore(
    task: Task,
    input: &Path,
    mask_path: Option<&Path>,
    output: &Path,
    reference: Option<&Path>,
    metrics_csv: Option<&Path>,
    config: Option<&PathBuf>,
    overrides: &SolverOverrides,
    sotv: bool,
    channelwise: bool,
    verbose: bool,
) -> Result<()> {
    let params = resolve_params(task, overrides, config)?;
    let mask = mask_path.map(MaskField::load).transpose()?;
    let command = match task {
        Task::Denoise => "denoise",
        Task::Inpaint => "inpaint",
    };

    let report = if channelwise {
        let channels = load_image_channels(input)?;
        if channels.len() == 3 {
            let (outputs, report) = restore_color(channels, mask.as_ref(), &params, sotv)?;
            save_image_rgb(&[outputs[0].clone(), outputs[1].clone(), outputs[2].clone()], output)?;
            report
        } else {
            let report = restore_gray(channels.into_iter().next().unwrap(), mask, &params, sotv)?;
            save_image(&report.image, output)?;
            report
        }
    } else {
        let report = restore_gray(load_image(input)?, mask, &params, sotv)?;
        save_image(&report.image, output)?;
        report
    };

    if verbose {
        log_history(&report);
    }
    if let Some(reference_path) = reference {
        let reference = load_image(reference_path)?;
        let restored = load_image(output)?;
        let metrics = evaluate(&restored, &reference)?;
        println!(
            "psnr={} ssim={} mse={} iterations={} converged={}",
            metrics.psnr, metrics.ssim, metrics.mse, report.iterations, report.converged
        );
        if let Some(csv_path) = metrics_csv {
            append_metrics_row(csv_path, command, input, reference_path, &metrics)?;
        }
    } else if metrics_csv.is_some() {
        bail!("--metrics-csv needs --reference");
    }
    Ok(())
}

fn cmd_degrade(kind: DegradeKind) -> Result<()> {
    match kind {
        DegradeKind::Gaussian {
            input,
            output,
            variance,
            seed,
        } => {
            if variance < 0.0 {
                bail!("variance must be >= 0");
            }
            let image = load_image(&input)?;
            save_image(&add_gaussian_noise(&image, variance, Seed(seed)), &output)?;
        }
        DegradeKind::Saltpepper {
            input,
            output,
            density,
            seed,
        } => {
            if !(0.0..=1.0).contains(&density) {
                bail!("density must be in [0, 1]");
            }
            let image = load_image(&input)?;
            save_image(&add_salt_pepper(&image, density, Seed(seed)), &output)?;
        }
        DegradeKind::Mask {
            input,
            output,
            mask_output,
            fraction,
            fill,
            seed,
        } => {
            if !(0.0..=1.0).contains(&fraction) {
                bail!("fraction must be in [0, 1]");
            }
            let image = load_image(&input)?;
            let mask = make_random_mask(image.width(), image.height(), fraction, Seed(seed));
            save_image(&apply_mask(&image, &mask, fill), &output)?;
            mask.save(&mask_output)?;
        }
        DegradeKind::Applymask {
            input,
            mask,
            output,
            fill,
        } => {
            let image = load_image(&input)?;
            let mask = MaskField::load(&mask)?;
            if mask.width() != image.width() || mask.height() != image.height() {
                bail!(
                    "mask is {}x{} but image is {}x{}",
                    mask.width(),
                    mask.height(),
                    image.width(),
                    image.height()
                );
            }
            save_image(&apply_mask(&image, &mask, fill), &output)?;
        }
    }
    Ok(())
}

fn cmd_synth(kind: SynthKind) -> Result<()> {
    match kind {
        SynthKind::Stripe {
            size,
            gap,
            output,
            mask_output,
            degraded_output,
            fill,
        } => {
            let gap = parse_gap(&gap)?;
            let (truth, mask) = make_stripe_fixture(size, size, gap)?;
            save_image(&truth, &output)?;
            mask.save(&mask_output)?;
            if let Some(path) = degraded_output {
                save_image(&apply_mask(&truth, &mask, fill), &path)?;
            }
        }
        SynthKind::Shapes { size, output } => {
            if size < 32 {
                bail!("shapes fixture needs --size >= 32");
            }
            save_image(&make_shapes_fixture(size, size), &output)?;
        }
    }
    Ok(())
}

fn cmd_metrics(args: MetricsArgs) -> Result<()> {
    let reference = load_image(&args.reference)?;
    let test = load_image(&args.test)?;
    let report = evaluate(&test, &reference)?;
    println!("psnr={} ssim={} mse={}", report.psnr, report.ssim, report.mse);
    if let Some(path) = args.metrics_csv {
        append_metrics_row(&path, "metrics", &args.test, &args.reference, &report)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Denoise(args) => cmd_restore(
            Task::Denoise,
            &args.input,
            None,
            &args.output,
            args.reference.as_deref(),
            args.metrics_csv.as_deref(),
            args.config.as_ref(),
            &args.solver,
            args.sotv,
            args.channelwise,
            args.verbose,
        ),
        Command::Inpaint(args) => cmd_restore(
            Task::Inpaint,
            &args.input,
            Some(&args.mask),
            &args.output,
            args.reference.as_deref(),
            args.metrics_csv.as_deref(),
            args.config.as_ref(),
            &args.solver,
            args.sotv,
            args.channelwise,
            args.verbose,
        ),
        Command::Degrade { kind } => cmd_degrade(kind),
        Command::Synth { kind } => cmd_synth(kind),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Bench(args) => bench::cmd_bench(args),
    }
}
