//! Corpus benchmark: degrade every image at every level, restore, evaluate,
//! and emit one CSV row per run plus one summary row per level.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use crate::config::SolverOverrides;
use twso::degrade::{add_gaussian_noise, add_salt_pepper, apply_mask, make_random_mask, Seed};
use twso::grid::load_image;
use twso::metrics::evaluate;
use twso::solver::{run, run_sotv, FidelityNorm, Problem, SolverParams, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchTask {
    /// Gaussian noise at the given variances, L2 fidelity
    Gaussian,
    /// Salt-and-pepper noise at the given densities, L1 fidelity
    Saltpepper,
    /// Random pixel loss at the given missing fractions
    Inpaint,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Directory of 8-bit PNG/PGM images
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    task: BenchTask,
    /// Comma-separated degradation levels (variance, density or fraction)
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (overwritten)
    #[arg(long)]
    metrics_csv: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark the isotropic second-order model instead
    #[arg(long)]
    sotv: bool,
    #[command(flatten)]
    solver: SolverOverrides,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

fn corpus_images(dir: &PathBuf) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading corpus directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("png") | Some("pgm")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("corpus {} contains no .png or .pgm images", dir.display());
    }
    Ok(paths)
}

fn task_defaults(task: BenchTask) -> SolverParams {
    match task {
        BenchTask::Gaussian => SolverParams::denoise_defaults(),
        BenchTask::Saltpepper => SolverParams {
            fidelity: FidelityNorm::L1,
            eta: 2.0,
            max_iter: 400,
            ..SolverParams::denoise_defaults()
        },
        BenchTask::Inpaint => SolverParams::inpaint_defaults(),
    }
}

pub fn cmd_bench(args: BenchArgs) -> Result<()> {
    let images = corpus_images(&args.corpus)?;
    let solver_task = match args.task {
        BenchTask::Inpaint => Task::Inpaint,
        _ => Task::Denoise,
    };
    let base = task_defaults(args.task);
    let params = match &args.config {
        Some(path) => args
            .solver
            .clone()
            .over(SolverOverrides::from_file(path)?)
            .apply_to(base)?,
        None => args.solver.apply_to(base)?,
    };

    let task_name = match args.task {
        BenchTask::Gaussian => "gaussian",
        BenchTask::Saltpepper => "saltpepper",
        BenchTask::Inpaint => "inpaint",
    };

    let mut writer = csv::Writer::from_path(&args.metrics_csv)
        .with_context(|| format!("creating {}", args.metrics_csv.display()))?;
    writer.write_record([
        "row_type",
        "image",
        "task",
        "level",
        "seed",
        "psnr",
        "ssim",
        "mse",
        "iterations",
        "wall_time_s",
        "psnr_sd",
        "ssim_sd",
    ])?;

    for (level_idx, &level) in args.levels.iter().enumerate() {
        let mut psnrs = Vec::with_capacity(images.len());
        let mut ssims = Vec::with_capacity(images.len());
        let mut mses = Vec::with_capacity(images.len());
        for (image_idx, path) in images.iter().enumerate() {
            let clean = load_image(path)?;
            let run_seed = splitmix64(
                args.seed ^ splitmix64((level_idx as u64) << 32 | image_idx as u64),
            );
            let started = Instant::now();
            let (problem, params) = match args.task {
                BenchTask::Gaussian => (
                    Problem::denoise(add_gaussian_noise(&clean, level, Seed(run_seed))),
                    params.clone(),
                ),
                BenchTask::Saltpepper => (
                    Problem::denoise(add_salt_pepper(&clean, level, Seed(run_seed))),
                    params.clone(),
                ),
                BenchTask::Inpaint => {
                    let mask =
                        make_random_mask(clean.width(), clean.height(), level, Seed(run_seed));
                    let degraded = apply_mask(&clean, &mask, 0.0);
                    (Problem::inpaint(degraded, mask)?, params.clone())
                }
            };
            debug_assert_eq!(problem.task, solver_task);
            let report = if args.sotv {
                run_sotv(&problem, &params)?
            } else {
                run(&problem, &params)?
            };
            let wall = started.elapsed().as_secs_f64();
            let metrics = evaluate(&report.image, &clean)?;
            psnrs.push(metrics.psnr);
            ssims.push(metrics.ssim);
            mses.push(metrics.mse);
            writer.write_record([
                "run",
                &path.file_name().unwrap_or_default().to_string_lossy(),
                task_name,
                &level.to_string(),
                &run_seed.to_string(),
                &metrics.psnr.to_string(),
                &metrics.ssim.to_string(),
                &metrics.mse.to_string(),
                &report.iterations.to_string(),
                &wall.to_string(),
                "",
                "",
            ])?;
        }
        let (psnr_mean, psnr_sd) = mean_sd(&psnrs);
        let (ssim_mean, ssim_sd) = mean_sd(&ssims);
        let (mse_mean, _) = mean_sd(&mses);
        writer.write_record([
            "summary",
            "",
            task_name,
            &level.to_string(),
            &args.seed.to_string(),
            &psnr_mean.to_string(),
            &ssim_mean.to_string(),
            &mse_mean.to_string(),
            "",
            "",
            &psnr_sd.to_string(),
            &ssim_sd.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Arithmetic mean and population standard deviation.
fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
