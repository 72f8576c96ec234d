//! PSNR and SSIM on [0, 1] grayscale fields.

use crate::grid::ScalarField;
use crate::{Error, Result};

/// SSIM window: 11×11 Gaussian, σ = 1.5.
const SSIM_RADIUS: isize = 5;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// One evaluation of a restored image against its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// Peak signal-to-noise ratio in dB; +infinity when the images match.
    pub psnr: f64,
    /// Mean structural similarity in [−1, 1]; 1 when the images match.
    pub ssim: f64,
    pub mse: f64,
}

fn check_dims(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if !a.same_size(b) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Mean squared error over all pixels.
pub fn mse(test: &ScalarField, reference: &ScalarField) -> Result<f64> {
    check_dims(test, reference)?;
    let total: f64 = test
        .data()
        .iter()
        .zip(reference.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(total / test.len() as f64)
}

/// 10·log10(1/MSE) with peak 1.0; +infinity when MSE = 0.
pub fn psnr(test: &ScalarField, reference: &ScalarField) -> Result<f64> {
    let mse = mse(test, reference)?;
    if mse == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (1.0 / mse).log10())
    }
}

/// Mean SSIM over all fully-interior 11×11 Gaussian windows with the
/// standard constants K1 = 0.01, K2 = 0.03 and dynamic range 1.
pub fn ssim(test: &ScalarField, reference: &ScalarField) -> Result<f64> {
    check_dims(test, reference)?;
    let window = 2 * SSIM_RADIUS as usize + 1;
    if test.width() < window || test.height() < window {
        return Err(Error::ImageTooSmall(format!(
            "ssim needs at least {window}x{window}, got {}x{}",
            test.width(),
            test.height()
        )));
    }

    let mut weights = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for i in -SSIM_RADIUS..=SSIM_RADIUS {
        for j in -SSIM_RADIUS..=SSIM_RADIUS {
            let w = (-((i * i + j * j) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            weights[(i + SSIM_RADIUS) as usize][(j + SSIM_RADIUS) as usize] = w;
            total += w;
        }
    }
    for row in weights.iter_mut() {
        for w in row.iter_mut() {
            *w /= total;
        }
    }

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let (w, h) = (test.width(), test.height());
    let r5 = SSIM_RADIUS as usize;
    let mut acc = 0.0;
    let mut count = 0usize;
    for r in r5..h - r5 {
        for c in r5..w - r5 {
            let (mut mx, mut my, mut mxx, mut myy, mut mxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for di in 0..11 {
                for dj in 0..11 {
                    let weight = weights[di][dj];
                    let x = test.get(r + di - r5, c + dj - r5);
                    let y = reference.get(r + di - r5, c + dj - r5);
                    mx += weight * x;
                    my += weight * y;
                    mxx += weight * (x * x);
                    myy += weight * (y * y);
                    mxy += weight * (x * y);
                }
            }
            let vx = mxx - mx * mx;
            let vy = myy - my * my;
            let cov = mxy - mx * my;
            let value = ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            acc += value;
            count += 1;
        }
    }
    Ok(acc / count as f64)
}

/// PSNR, SSIM and MSE in one pass.
pub fn evaluate(test: &ScalarField, reference: &ScalarField) -> Result<MetricReport> {
    Ok(MetricReport {
        psnr: psnr(test, reference)?,
        ssim: ssim(test, reference)?,
        mse: mse(test, reference)?,
    })
}
