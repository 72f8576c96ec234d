//! Reproducible degradations and synthetic test fixtures.
//!
//! Every generator is a pure function of its inputs and a 64-bit seed; the
//! stream comes from ChaCha8, so repeated runs are bit-identical.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::grid::{MaskField, ScalarField};
use crate::{Error, Result};

/// Seed for the degradation generators; equal seeds give equal outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed(pub u64);

fn rng_for(seed: Seed) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.0)
}

/// Adds i.i.d. zero-mean Gaussian noise of the given variance, then clamps
/// to [0, 1]. Variance 0 returns the input unchanged.
pub fn add_gaussian_noise(u: &ScalarField, variance: f64, seed: Seed) -> ScalarField {
    assert!(variance >= 0.0 && variance.is_finite());
    if variance == 0.0 {
        return u.clone();
    }
    let mut rng = rng_for(seed);
    let normal = Normal::new(0.0, variance.sqrt()).expect("finite std");
    let mut out = u.clone();
    for v in out.data_mut() {
        *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
    }
    out
}

/// Replaces each pixel independently with 0 or 1 (equal probability) with
/// probability `density`.
pub fn add_salt_pepper(u: &ScalarField, density: f64, seed: Seed) -> ScalarField {
    assert!((0.0..=1.0).contains(&density));
    let mut rng = rng_for(seed);
    let mut out = u.clone();
    for v in out.data_mut() {
        if rng.random::<f64>() < density {
            *v = if rng.random::<bool>() { 1.0 } else { 0.0 };
        }
    }
    out
}

/// Marks exactly round(fraction·width·height) pixels missing, chosen
/// uniformly without replacement.
pub fn make_random_mask(width: usize, height: usize, missing_fraction: f64, seed: Seed) -> MaskField {
    assert!((0.0..=1.0).contains(&missing_fraction));
    let n = width * height;
    let count = (missing_fraction * n as f64).round() as usize;
    let mut rng = rng_for(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    let (chosen, _) = indices.partial_shuffle(&mut rng, count);
    let mut missing = vec![false; n];
    for &i in chosen.iter() {
        missing[i] = true;
    }
    MaskField::from_missing(width, height, missing)
}

/// Replaces the missing pixels of `u` by `fill`, producing a degraded
/// observation for inpainting.
pub fn apply_mask(u: &ScalarField, mask: &MaskField, fill: f64) -> ScalarField {
    assert!(u.width() == mask.width() && u.height() == mask.height());
    let flags = mask.missing_flags();
    let mut out = u.clone();
    for i in 0..out.len() {
        if flags[i] {
            out.data_mut()[i] = fill;
        }
    }
    out
}

/// Shape of the inpainting gap cut through the stripe fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapGeometry {
    /// Full-height vertical band of the given width.
    Straight { width: usize },
    /// Straight band at twice the given width.
    Wide { width: usize },
    /// 45-degree band of the given horizontal width.
    Slanted { width: usize },
    /// Triangle-wave band of the given horizontal width.
    Zigzag { width: usize },
}

/// Binary horizontal black stripe on a white background, plus a mask whose
/// missing region crosses the stripe with the requested geometry.
pub fn make_stripe_fixture(
    width: usize,
    height: usize,
    gap: GapGeometry,
) -> Result<(ScalarField, MaskField)> {
    if width < 8 || height < 8 {
        return Err(Error::ImageTooSmall(format!(
            "stripe fixture needs at least 8x8, got {width}x{height}"
        )));
    }
    let band_width = match gap {
        GapGeometry::Straight { width } => width,
        GapGeometry::Wide { width } => 2 * width,
        GapGeometry::Slanted { width } => width,
        GapGeometry::Zigzag { width } => width,
    };
    if band_width == 0 || band_width > width {
        return Err(Error::InvalidParameter(format!(
            "gap width {band_width} does not fit an image {width} wide"
        )));
    }

    let stripe_top = 3 * height / 8;
    let stripe_bottom = 5 * height / 8;
    let mut truth = ScalarField::filled(width, height, 1.0);
    for r in stripe_top..stripe_bottom {
        for c in 0..width {
            truth.set(r, c, 0.0);
        }
    }

    // center column of the missing band on each row
    let center_at = |row: usize| -> isize {
        let mid = width as isize / 2;
        match gap {
            GapGeometry::Straight { .. } | GapGeometry::Wide { .. } => mid,
            GapGeometry::Slanted { .. } => mid + row as isize - height as isize / 2,
            GapGeometry::Zigzag { .. } => {
                let period = (height / 2).max(2) as f64;
                let amplitude = width as f64 / 8.0;
                let phase = (row as f64 % period) / period;
                let tri = 1.0 - 4.0 * (phase - 0.5).abs();
                mid + (amplitude * tri).round() as isize
            }
        }
    };

    let mut missing = vec![false; width * height];
    for r in 0..height {
        let start = center_at(r) - band_width as isize / 2;
        for k in 0..band_width as isize {
            let c = start + k;
            if c >= 0 && (c as usize) < width {
                missing[r * width + c as usize] = true;
            }
        }
    }
    Ok((truth, MaskField::from_missing(width, height, missing)))
}

/// Deterministic piecewise-smooth test image: flat background, a smooth
/// radial bump, a sharp-edged square, and a linear ramp strip.
pub fn make_shapes_fixture(width: usize, height: usize) -> ScalarField {
    assert!(width >= 32 && height >= 32, "shapes fixture needs >= 32x32");
    let mut u = ScalarField::filled(width, height, 0.15);

    // smooth radial bump, C1 at its rim
    let (cy, cx) = (0.3 * height as f64, 0.3 * width as f64);
    let radius = 0.22 * width.min(height) as f64;
    for r in 0..height {
        for c in 0..width {
            let dist = ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)).sqrt();
            if dist < radius {
                let bump = 0.75 * 0.5 * (1.0 + (std::f64::consts::PI * dist / radius).cos());
                u.set(r, c, 0.15 + bump);
            }
        }
    }

    // sharp-edged bright square
    for r in 55 * height / 100..85 * height / 100 {
        for c in 55 * width / 100..85 * width / 100 {
            u.set(r, c, 0.95);
        }
    }

    // linear horizontal ramp strip: zero second difference inside
    let (r0, r1) = (10 * height / 100, 25 * height / 100);
    let (c0, c1) = (55 * width / 100, 95 * width / 100);
    for r in r0..r1 {
        for c in c0..c1 {
            let t = (c - c0) as f64 / (c1 - 1 - c0) as f64;
            u.set(r, c, 0.2 + 0.5 * t);
        }
    }
    u
}
