//! Structure-tensor estimation and diffusion-tensor assembly.
//!
//! The structure tensor is the Gaussian ρ-average of the outer product of
//! the σ-smoothed image gradient. Its eigenvalues are remapped by one of
//! two laws — an edge-stopping law for denoising or a coherence-enhancing
//! law for inpainting — and recombined with its eigenvectors into the
//! symmetric positive semi-definite diffusion tensor that weights the
//! second-order regulariser.

use crate::diffops::{gradient_central, MatrixField};
use crate::grid::ScalarField;
use crate::{Error, Result};

/// Decay constant of the edge-stopping eigenvalue law; paired with the
/// eighth-power contrast ratio it leaves λ1 ≈ 1 for s below the contrast
/// parameter and drives λ1 to 0 above it.
pub const EDGE_DECAY: f64 = 3.31488;

/// Eigenvalues closer than this are treated as equal and get the fixed
/// axis-aligned eigenvector pair.
const DEGENERATE_EPS: f64 = 1e-12;

/// Which eigenvalue remapping law builds the diffusion tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorMode {
    /// Edge-stopping law: halts diffusion across strong gradients, full
    /// diffusion along them. The usual choice for denoising.
    Edge,
    /// Coherence-enhancing law: strong diffusion along line-like structures
    /// only. The usual choice for inpainting.
    Coherence,
}

/// Scales and constants of the tensor estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorParams {
    /// Presmoothing standard deviation in pixels, applied before the gradient.
    pub sigma: f64,
    /// Averaging standard deviation in pixels, applied to the outer products.
    pub rho: f64,
    /// Contrast parameter of the remapping laws, > 0.
    pub contrast: f64,
    /// Baseline eigenvalue of the coherence law, in (0, 1).
    pub gamma: f64,
    pub mode: TensorMode,
}

impl TensorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter("sigma must be >= 0".into()));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter("rho must be >= 0".into()));
        }
        if !(self.contrast > 0.0 && self.contrast.is_finite()) {
            return Err(Error::InvalidParameter("contrast must be > 0".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter("gamma must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Per-pixel symmetric structure tensor (j21 = j12 implicitly).
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTensorField {
    pub j11: ScalarField,
    pub j12: ScalarField,
    pub j22: ScalarField,
}

/// Eigen-analysis of a structure tensor field.
///
/// `mu1 >= mu2` per pixel; `(v1x, v1y)` and `(v2x, v2y)` are the unit
/// eigenvectors and `coh = (mu1 - mu2)^2` is the local coherence.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenField {
    pub mu1: ScalarField,
    pub mu2: ScalarField,
    pub v1x: ScalarField,
    pub v1y: ScalarField,
    pub v2x: ScalarField,
    pub v2y: ScalarField,
    pub coh: ScalarField,
}

/// Per-pixel symmetric positive semi-definite 2×2 diffusion tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionTensorField {
    pub t11: ScalarField,
    pub t12: ScalarField,
    pub t22: ScalarField,
}

impl DiffusionTensorField {
    /// Identity tensor at every pixel; turns the weighted regulariser into
    /// the plain isotropic second-order one.
    pub fn identity(width: usize, height: usize) -> Self {
        Self {
            t11: ScalarField::filled(width, height, 1.0),
            t12: ScalarField::zeros(width, height),
            t22: ScalarField::filled(width, height, 1.0),
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.t11.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.t11.height()
    }

    /// Per-pixel matrix product T·V.
    pub fn apply(&self, v: &MatrixField) -> MatrixField {
        assert!(
            self.t11.same_size(&v.m11),
            "tensor and matrix field sizes differ"
        );
        let n = self.t11.len();
        let mut out = MatrixField::zeros(self.width(), self.height());
        for i in 0..n {
            let (t11, t12, t22) = (self.t11.data()[i], self.t12.data()[i], self.t22.data()[i]);
            out.m11.data_mut()[i] = t11 * v.m11.data()[i] + t12 * v.m21.data()[i];
            out.m21.data_mut()[i] = t12 * v.m11.data()[i] + t22 * v.m21.data()[i];
            out.m12.data_mut()[i] = t11 * v.m12.data()[i] + t12 * v.m22.data()[i];
            out.m22.data_mut()[i] = t12 * v.m12.data()[i] + t22 * v.m22.data()[i];
        }
        out
    }

    /// View as a structure tensor field, e.g. to re-derive the spectrum.
    pub fn as_structure_tensor(&self) -> StructureTensorField {
        StructureTensorField {
            j11: self.t11.clone(),
            j12: self.t12.clone(),
            j22: self.t22.clone(),
        }
    }
}

/// Separable Gaussian convolution with replicate boundary.
///
/// Kernel radius is ceil(3·std) and the kernel is normalised to sum 1;
/// `std = 0` returns the input unchanged.
pub fn gaussian_smooth(u: &ScalarField, std: f64) -> ScalarField {
    assert!(std >= 0.0 && std.is_finite());
    if std == 0.0 {
        return u.clone();
    }
    let radius = (3.0 * std).ceil() as isize;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for k in -radius..=radius {
        kernel.push((-((k * k) as f64) / (2.0 * std * std)).exp());
    }
    let total: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= total;
    }

    let (w, h) = (u.width(), u.height());
    let clamp = |i: isize, n: usize| -> usize { i.clamp(0, n as isize - 1) as usize };

    let mut horizontal = ScalarField::zeros(w, h);
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (ki, weight) in kernel.iter().enumerate() {
                let cc = clamp(c as isize + ki as isize - radius, w);
                acc += weight * u.get(r, cc);
            }
            horizontal.set(r, c, acc);
        }
    }
    let mut out = ScalarField::zeros(w, h);
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (ki, weight) in kernel.iter().enumerate() {
                let rr = clamp(r as isize + ki as isize - radius, h);
                acc += weight * horizontal.get(rr, c);
            }
            out.set(r, c, acc);
        }
    }
    out
}

/// ρ-averaged outer product of a gradient field.
fn structure_tensor_from_gradient(
    ux: &ScalarField,
    uy: &ScalarField,
    rho: f64,
) -> StructureTensorField {
    let j11 = gaussian_smooth(&ux.zip_map(ux, |a, b| a * b), rho);
    let j12 = gaussian_smooth(&ux.zip_map(uy, |a, b| a * b), rho);
    let j22 = gaussian_smooth(&uy.zip_map(uy, |a, b| a * b), rho);
    StructureTensorField { j11, j12, j22 }
}

/// Structure tensor of `u`: smooth with σ, take the central gradient, and
/// ρ-average the per-pixel outer products.
pub fn structure_tensor(u: &ScalarField, params: &TensorParams) -> StructureTensorField {
    let smoothed = gaussian_smooth(u, params.sigma);
    let (ux, uy) = gradient_central(&smoothed);
    structure_tensor_from_gradient(&ux, &uy, params.rho)
}

/// Closed-form eigen-decomposition of a symmetric 2×2 field.
///
/// Degenerate pixels (|μ1 − μ2| <= 1e−12) get the fixed pair (1,0), (0,1).
pub fn eigen_decompose(j: &StructureTensorField) -> EigenField {
    let (w, h) = (j.j11.width(), j.j11.height());
    let mut out = EigenField {
        mu1: ScalarField::zeros(w, h),
        mu2: ScalarField::zeros(w, h),
        v1x: ScalarField::zeros(w, h),
        v1y: ScalarField::zeros(w, h),
        v2x: ScalarField::zeros(w, h),
        v2y: ScalarField::zeros(w, h),
        coh: ScalarField::zeros(w, h),
    };
    for i in 0..w * h {
        let j11 = j.j11.data()[i];
        let j12 = j.j12.data()[i];
        let j22 = j.j22.data()[i];
        let diff = j11 - j22;
        let coh = diff * diff + 4.0 * j12 * j12;
        let gap = coh.sqrt();
        let mu1 = 0.5 * (j11 + j22 + gap);
        let mu2 = 0.5 * (j11 + j22 - gap);
        let (v1x, v1y) = if gap <= DEGENERATE_EPS {
            (1.0, 0.0)
        } else if j12 != 0.0 {
            let vx = j12;
            let vy = mu1 - j11;
            let norm = (vx * vx + vy * vy).sqrt();
            (vx / norm, vy / norm)
        } else if j11 >= j22 {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        out.mu1.data_mut()[i] = mu1;
        out.mu2.data_mut()[i] = mu2;
        out.v1x.data_mut()[i] = v1x;
        out.v1y.data_mut()[i] = v1y;
        out.v2x.data_mut()[i] = -v1y;
        out.v2y.data_mut()[i] = v1x;
        out.coh.data_mut()[i] = coh;
    }
    out
}

/// Edge-stopping eigenvalue law from the smoothed gradient magnitude:
/// λ1 = 1 for s <= 0, otherwise 1 − exp(−3.31488 / (s/C)^8); λ2 = 1.
pub fn edge_eigenvalues(grad_mag: &ScalarField, contrast: f64) -> (ScalarField, ScalarField) {
    assert!(contrast > 0.0);
    let lam1 = grad_mag.map(|s| {
        if s <= 0.0 {
            1.0
        } else {
            1.0 - (-EDGE_DECAY / (s / contrast).powi(8)).exp()
        }
    });
    let lam2 = ScalarField::filled(grad_mag.width(), grad_mag.height(), 1.0);
    (lam1, lam2)
}

/// Coherence-enhancing eigenvalue law: λ1 = γ everywhere and
/// λ2 = γ where μ1 = μ2, otherwise γ + (1 − γ)·exp(−C / Coh).
pub fn coherence_eigenvalues(
    mu1: &ScalarField,
    mu2: &ScalarField,
    coh: &ScalarField,
    gamma: f64,
    contrast: f64,
) -> (ScalarField, ScalarField) {
    assert!(gamma > 0.0 && gamma < 1.0);
    assert!(contrast > 0.0);
    let lam1 = ScalarField::filled(mu1.width(), mu1.height(), gamma);
    let mut lam2 = ScalarField::zeros(mu1.width(), mu1.height());
    for i in 0..lam2.len() {
        let equal = (mu1.data()[i] - mu2.data()[i]).abs() <= DEGENERATE_EPS;
        lam2.data_mut()[i] = if equal {
            gamma
        } else {
            gamma + (1.0 - gamma) * (-contrast / coh.data()[i]).exp()
        };
    }
    (lam1, lam2)
}

/// Spectral reconstruction T = λ1·v1·v1ᵀ + λ2·v2·v2ᵀ per pixel.
pub fn assemble_tensor(
    eigs: &EigenField,
    lam1: &ScalarField,
    lam2: &ScalarField,
) -> DiffusionTensorField {
    let (w, h) = (eigs.mu1.width(), eigs.mu1.height());
    let mut t = DiffusionTensorField {
        t11: ScalarField::zeros(w, h),
        t12: ScalarField::zeros(w, h),
        t22: ScalarField::zeros(w, h),
    };
    for i in 0..w * h {
        let (l1, l2) = (lam1.data()[i], lam2.data()[i]);
        let (v1x, v1y) = (eigs.v1x.data()[i], eigs.v1y.data()[i]);
        let (v2x, v2y) = (eigs.v2x.data()[i], eigs.v2y.data()[i]);
        t.t11.data_mut()[i] = l1 * v1x * v1x + l2 * v2x * v2x;
        t.t12.data_mut()[i] = l1 * v1x * v1y + l2 * v2x * v2y;
        t.t22.data_mut()[i] = l1 * v1y * v1y + l2 * v2y * v2y;
    }
    t
}

/// Full tensor estimation for one image under the given mode.
///
/// Edge mode pairs the edge-stopping λ1 with the gradient-direction
/// eigenvector and λ2 = 1 with the isolevel direction; coherence mode pairs
/// λ1 = γ with the gradient direction and the coherence λ2 with the
/// isolevel direction.
pub fn build_diffusion_tensor(u: &ScalarField, params: &TensorParams) -> DiffusionTensorField {
    let smoothed = gaussian_smooth(u, params.sigma);
    let (ux, uy) = gradient_central(&smoothed);
    let j = structure_tensor_from_gradient(&ux, &uy, params.rho);
    let eigs = eigen_decompose(&j);
    let (lam1, lam2) = match params.mode {
        TensorMode::Edge => {
            let grad_mag = ux.zip_map(&uy, |a, b| (a * a + b * b).sqrt());
            edge_eigenvalues(&grad_mag, params.contrast)
        }
        TensorMode::Coherence => {
            coherence_eigenvalues(&eigs.mu1, &eigs.mu2, &eigs.coh, params.gamma, params.contrast)
        }
    };
    assemble_tensor(&eigs, &lam1, &lam2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(mode: TensorMode) -> TensorParams {
        TensorParams {
            sigma: 1.0,
            rho: 2.0,
            contrast: 0.05,
            gamma: 0.01,
            mode,
        }
    }

    fn noise_field(width: usize, height: usize, seed: u64) -> ScalarField {
        let mut state = seed.wrapping_add(0x9E3779B97F4A7C15);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        ScalarField::from_vec(width, height, (0..width * height).map(|_| next()).collect())
    }

    #[test]
    fn gaussian_smooth_zero_std_is_identity() {
        let u = noise_field(9, 7, 4);
        assert_eq!(gaussian_smooth(&u, 0.0), u);
    }

    #[test]
    fn gaussian_smooth_preserves_constants() {
        let u = ScalarField::filled(12, 9, 0.37);
        for std in [0.5, 1.0, 2.5] {
            assert!(gaussian_smooth(&u, std).max_abs_diff(&u) < 1e-12);
        }
    }

    #[test]
    fn gaussian_smooth_impulse_mass_and_center() {
        let mut u = ScalarField::zeros(21, 21);
        u.set(10, 10, 1.0);
        let std = 1.0;
        let smoothed = gaussian_smooth(&u, std);
        // mass preserved
        let total: f64 = smoothed.data().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // center weight equals the normalized kernel peak squared (two passes)
        let radius = 3;
        let weights: Vec<f64> = (-radius..=radius_i(radius))
            .map(|k| (-((k * k) as f64) / (2.0 * std * std)).exp())
            .collect();
        let peak = weights[radius as usize] / weights.iter().sum::<f64>();
        assert!((smoothed.get(10, 10) - peak * peak).abs() < 1e-12);
    }

    fn radius_i(r: isize) -> isize {
        r
    }

    #[test]
    fn structure_tensor_of_constant_is_zero() {
        let u = ScalarField::filled(16, 16, 0.42);
        let j = structure_tensor(&u, &params(TensorMode::Edge));
        assert_eq!(j.j11.norm_l2(), 0.0);
        assert_eq!(j.j12.norm_l2(), 0.0);
        assert_eq!(j.j22.norm_l2(), 0.0);
    }

    #[test]
    fn structure_tensor_of_ramp_interior() {
        let n = 16;
        let mut u = ScalarField::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                u.set(r, c, c as f64 / n as f64);
            }
        }
        let p = TensorParams {
            sigma: 0.0,
            rho: 0.0,
            ..params(TensorMode::Edge)
        };
        let j = structure_tensor(&u, &p);
        let expected = 1.0 / (n * n) as f64;
        for c in 2..n - 2 {
            assert!((j.j11.get(n / 2, c) - expected).abs() < 1e-15);
            assert_eq!(j.j12.get(n / 2, c), 0.0);
            assert_eq!(j.j22.get(n / 2, c), 0.0);
        }
    }

    #[test]
    fn structure_tensor_stays_positive_semidefinite() {
        for seed in 0..4u64 {
            let u = noise_field(24, 18, seed);
            let j = structure_tensor(&u, &params(TensorMode::Edge));
            for i in 0..j.j11.len() {
                let det = j.j11.data()[i] * j.j22.data()[i] - j.j12.data()[i] * j.j12.data()[i];
                assert!(j.j11.data()[i] >= 0.0);
                assert!(j.j22.data()[i] >= 0.0);
                assert!(det >= -1e-12, "det={det}");
            }
        }
    }

    fn single_pixel_field(j11: f64, j12: f64, j22: f64) -> StructureTensorField {
        StructureTensorField {
            j11: ScalarField::filled(2, 2, j11),
            j12: ScalarField::filled(2, 2, j12),
            j22: ScalarField::filled(2, 2, j22),
        }
    }

    #[test]
    fn eigen_diagonal_case() {
        let eigs = eigen_decompose(&single_pixel_field(2.0, 0.0, 1.0));
        assert_eq!(eigs.mu1.get(0, 0), 2.0);
        assert_eq!(eigs.mu2.get(0, 0), 1.0);
        assert_eq!(eigs.v1x.get(0, 0).abs(), 1.0);
        assert_eq!(eigs.v1y.get(0, 0), 0.0);
    }

    #[test]
    fn eigen_rank_one_case() {
        let eigs = eigen_decompose(&single_pixel_field(1.0, 1.0, 1.0));
        assert!((eigs.mu1.get(0, 0) - 2.0).abs() < 1e-15);
        assert!(eigs.mu2.get(0, 0).abs() < 1e-15);
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert!((eigs.v1x.get(0, 0).abs() - inv_sqrt2).abs() < 1e-12);
        assert!((eigs.v1y.get(0, 0).abs() - inv_sqrt2).abs() < 1e-12);
        assert!((eigs.coh.get(0, 0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_isotropic_case_uses_default_axes() {
        let eigs = eigen_decompose(&single_pixel_field(0.7, 0.0, 0.7));
        assert_eq!(eigs.mu1.get(0, 0), 0.7);
        assert_eq!(eigs.mu2.get(0, 0), 0.7);
        assert_eq!(eigs.coh.get(0, 0), 0.0);
        assert_eq!((eigs.v1x.get(0, 0), eigs.v1y.get(0, 0)), (1.0, 0.0));
        assert_eq!((eigs.v2x.get(0, 0), eigs.v2y.get(0, 0)), (0.0, 1.0));
    }

    proptest! {
        #[test]
        fn eigen_trace_det_and_geometry(j11 in 0.0f64..2.0, j22 in 0.0f64..2.0, q in -1.0f64..1.0) {
            // keep the matrix PSD: |j12| <= sqrt(j11 j22)
            let j12 = q * (j11 * j22).sqrt();
            let eigs = eigen_decompose(&single_pixel_field(j11, j12, j22));
            let (mu1, mu2) = (eigs.mu1.get(0, 0), eigs.mu2.get(0, 0));
            prop_assert!(mu1 >= mu2 - 1e-15);
            prop_assert!(mu2 >= -1e-12);
            prop_assert!((mu1 + mu2 - (j11 + j22)).abs() <= 1e-10);
            prop_assert!((mu1 * mu2 - (j11 * j22 - j12 * j12)).abs() <= 1e-10);
            prop_assert!((eigs.coh.get(0, 0) - (mu1 - mu2).powi(2)).abs() <= 1e-10);
            let (v1x, v1y) = (eigs.v1x.get(0, 0), eigs.v1y.get(0, 0));
            let (v2x, v2y) = (eigs.v2x.get(0, 0), eigs.v2y.get(0, 0));
            prop_assert!(((v1x * v1x + v1y * v1y) - 1.0).abs() <= 1e-12);
            prop_assert!(((v2x * v2x + v2y * v2y) - 1.0).abs() <= 1e-12);
            prop_assert!((v1x * v2x + v1y * v2y).abs() <= 1e-12);
            // residual of the eigen equation for v1
            let r1 = (j11 * v1x + j12 * v1y) - mu1 * v1x;
            let r2 = (j12 * v1x + j22 * v1y) - mu1 * v1y;
            prop_assert!(r1.abs() <= 1e-10 && r2.abs() <= 1e-10);
        }
    }

    #[test]
    fn edge_law_frozen_values() {
        let s = ScalarField::from_vec(3, 1, vec![0.0, 0.05, 0.5]);
        let (lam1, lam2) = edge_eigenvalues(&s, 0.05);
        assert_eq!(lam1.get(0, 0), 1.0);
        // 1 - exp(-3.31488) evaluated independently
        assert!((lam1.get(0, 1) - 0.9636615910752151).abs() < 1e-12);
        assert!(lam1.get(0, 2) > 0.0 && lam1.get(0, 2) < 1e-6);
        assert!(lam2.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn edge_law_is_monotone_decreasing_in_s() {
        // strict decrease holds where the exponential has not saturated
        let s = ScalarField::from_vec(6, 1, vec![0.04, 0.05, 0.07, 0.1, 0.3, 1.0]);
        let (lam1, _) = edge_eigenvalues(&s, 0.05);
        for i in 1..6 {
            assert!(lam1.data()[i] < lam1.data()[i - 1]);
        }
        // saturated tail: flat regions keep full diffusion
        let (tiny, _) = edge_eigenvalues(&ScalarField::filled(1, 1, 1e-4), 0.05);
        assert_eq!(tiny.get(0, 0), 1.0);
    }

    #[test]
    fn coherence_law_frozen_values() {
        let mu1 = ScalarField::from_vec(3, 1, vec![1.0, 2.0, 5.0]);
        let mu2 = ScalarField::from_vec(3, 1, vec![1.0, 1.0, 5.0 - 1e-13]);
        let coh = ScalarField::from_vec(3, 1, vec![0.0, 1.0, 0.0]);
        let (lam1, lam2) = coherence_eigenvalues(&mu1, &mu2, &coh, 0.01, 1.0);
        assert!(lam1.data().iter().all(|&v| v == 0.01));
        assert_eq!(lam2.get(0, 0), 0.01);
        // gamma + (1 - gamma) exp(-1) evaluated independently
        assert!((lam2.get(0, 1) - 0.3742006467597279).abs() < 1e-12);
        assert_eq!(lam2.get(0, 2), 0.01);
    }

    #[test]
    fn coherence_law_saturates_to_one() {
        let mu1 = ScalarField::filled(1, 1, 2.0);
        let mu2 = ScalarField::filled(1, 1, 0.0);
        let coh = ScalarField::filled(1, 1, 1e12);
        let (_, lam2) = coherence_eigenvalues(&mu1, &mu2, &coh, 0.01, 1.0);
        assert!((lam2.get(0, 0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn assemble_identity_and_diagonal() {
        let eigs = eigen_decompose(&single_pixel_field(0.0, 0.0, 0.0));
        let ones = ScalarField::filled(2, 2, 1.0);
        let t = assemble_tensor(&eigs, &ones, &ones);
        assert_eq!(t.t11.get(0, 0), 1.0);
        assert_eq!(t.t12.get(0, 0), 0.0);
        assert_eq!(t.t22.get(0, 0), 1.0);

        let a = ScalarField::filled(2, 2, 0.3);
        let b = ScalarField::filled(2, 2, 0.9);
        let t = assemble_tensor(&eigs, &a, &b);
        assert_eq!(t.t11.get(0, 0), 0.3);
        assert_eq!(t.t22.get(0, 0), 0.9);
        assert_eq!(t.t12.get(0, 0), 0.0);
    }

    proptest! {
        #[test]
        fn assembled_tensor_spectrum_round_trips(
            j11 in 0.0f64..2.0, j22 in 0.0f64..2.0, q in -0.99f64..0.99,
            l1 in 0.01f64..1.0, l2 in 0.01f64..1.0,
        ) {
            let j12 = q * (j11 * j22).sqrt();
            let eigs = eigen_decompose(&single_pixel_field(j11, j12, j22));
            let lam1 = ScalarField::filled(2, 2, l1);
            let lam2 = ScalarField::filled(2, 2, l2);
            let t = assemble_tensor(&eigs, &lam1, &lam2);
            let back = eigen_decompose(&t.as_structure_tensor());
            let (hi, lo) = (l1.max(l2), l1.min(l2));
            prop_assert!((back.mu1.get(0, 0) - hi).abs() <= 1e-10);
            prop_assert!((back.mu2.get(0, 0) - lo).abs() <= 1e-10);
        }
    }

    #[test]
    fn constant_image_tensors() {
        let u = ScalarField::filled(16, 12, 0.6);
        let t = build_diffusion_tensor(&u, &params(TensorMode::Edge));
        assert!(t.t11.map(|v| v - 1.0).norm_l2() < 1e-12);
        assert!(t.t12.norm_l2() < 1e-12);
        assert!(t.t22.map(|v| v - 1.0).norm_l2() < 1e-12);

        let t = build_diffusion_tensor(&u, &params(TensorMode::Coherence));
        assert!(t.t11.map(|v| v - 0.01).norm_l2() < 1e-12);
        assert!(t.t12.norm_l2() < 1e-12);
        assert!(t.t22.map(|v| v - 0.01).norm_l2() < 1e-12);
    }

    #[test]
    fn step_edge_reduces_diffusion_across_the_gradient() {
        let n = 16;
        let mut u = ScalarField::zeros(n, n);
        for r in 0..n {
            for c in n / 2..n {
                u.set(r, c, 1.0);
            }
        }
        let p = TensorParams {
            sigma: 0.5,
            rho: 0.5,
            ..params(TensorMode::Edge)
        };
        let t = build_diffusion_tensor(&u, &p);
        let spectrum = eigen_decompose(&t.as_structure_tensor());
        // on the edge column the smaller tensor eigenvalue is suppressed,
        // the larger one stays at 1
        let r = n / 2;
        let c = n / 2;
        assert!((spectrum.mu1.get(r, c) - 1.0).abs() < 1e-10);
        assert!(spectrum.mu2.get(r, c) < 0.1);
    }

    #[test]
    fn huge_contrast_collapses_edge_tensor_to_identity() {
        let u = noise_field(20, 14, 9);
        let p = TensorParams {
            contrast: 1e12,
            ..params(TensorMode::Edge)
        };
        let t = build_diffusion_tensor(&u, &p);
        let identity = DiffusionTensorField::identity(20, 14);
        assert!(t.t11.max_abs_diff(&identity.t11) <= 1e-6);
        assert!(t.t12.max_abs_diff(&identity.t12) <= 1e-6);
        assert!(t.t22.max_abs_diff(&identity.t22) <= 1e-6);
    }

    #[test]
    fn remap_laws_stay_in_unit_interval() {
        let u = noise_field(24, 24, 5);
        for mode in [TensorMode::Edge, TensorMode::Coherence] {
            let t = build_diffusion_tensor(&u, &params(mode));
            let spectrum = eigen_decompose(&t.as_structure_tensor());
            for i in 0..spectrum.mu1.len() {
                assert!(spectrum.mu1.data()[i] <= 1.0 + 1e-10);
                assert!(spectrum.mu2.data()[i] > 0.0);
            }
        }
    }
}
