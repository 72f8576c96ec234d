//! Frequency-domain closed-form solve of the screened bilaplacian system
//! (θ1·I + θ2·div²∘hessian) u = rhs under periodic boundaries.
//!
//! The composed operator div²∘hessian is translation invariant, so it is
//! diagonal in the DFT basis with the nonnegative symbol
//! 4·(cos(2πq/N) + cos(2πr/M) − 2)²; the solve is a pointwise division.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::diffops::{div2, MatrixField};
use crate::grid::ScalarField;

/// Spectral symbol of div²∘hessian at frequency (q, r) on a width×height grid.
///
/// Equals the DFT of div2(hessian(δ)) for the unit impulse δ. Zero only at
/// the zero frequency, so θ1 > 0 keeps the solve denominator positive.
pub fn bilaplacian_symbol(q: usize, r: usize, width: usize, height: usize) -> f64 {
    debug_assert!(q < width && r < height);
    let wx = 2.0 * std::f64::consts::PI * q as f64 / width as f64;
    let wy = 2.0 * std::f64::consts::PI * r as f64 / height as f64;
    let base = wx.cos() + wy.cos() - 2.0;
    4.0 * base * base
}

/// Precomputed per-frequency denominator θ1 + θ2·symbol(q, r).
#[derive(Debug, Clone)]
pub struct SpectralDenominator {
    width: usize,
    height: usize,
    theta1: f64,
    theta2: f64,
    values: Vec<f64>,
}

impl SpectralDenominator {
    pub fn new(width: usize, height: usize, theta1: f64, theta2: f64) -> Self {
        assert!(theta1 > 0.0 && theta2 > 0.0, "penalty weights must be positive");
        let mut values = Vec::with_capacity(width * height);
        for r in 0..height {
            for q in 0..width {
                values.push(theta1 + theta2 * bilaplacian_symbol(q, r, width, height));
            }
        }
        Self {
            width,
            height,
            theta1,
            theta2,
            values,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn value(&self, q: usize, r: usize) -> f64 {
        self.values[r * self.width + q]
    }

    pub fn matches(&self, width: usize, height: usize, theta1: f64, theta2: f64) -> bool {
        self.width == width && self.height == height && self.theta1 == theta1 && self.theta2 == theta2
    }
}

/// Planned forward/inverse 2-D DFT for one grid size.
struct Dft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    transposed: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Dft2 {
    fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        let row_fwd = planner.plan_fft_forward(width);
        let row_inv = planner.plan_fft_inverse(width);
        let col_fwd = planner.plan_fft_forward(height);
        let col_inv = planner.plan_fft_inverse(height);
        let scratch_len = row_fwd
            .get_inplace_scratch_len()
            .max(row_inv.get_inplace_scratch_len())
            .max(col_fwd.get_inplace_scratch_len())
            .max(col_inv.get_inplace_scratch_len());
        Self {
            width,
            height,
            row_fwd,
            row_inv,
            col_fwd,
            col_inv,
            transposed: vec![Complex64::default(); width * height],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    fn transpose_into(&mut self, buf: &[Complex64]) {
        for r in 0..self.height {
            for c in 0..self.width {
                self.transposed[c * self.height + r] = buf[r * self.width + c];
            }
        }
    }

    fn transpose_back(&self, buf: &mut [Complex64]) {
        for r in 0..self.height {
            for c in 0..self.width {
                buf[r * self.width + c] = self.transposed[c * self.height + r];
            }
        }
    }

    fn forward(&mut self, buf: &mut [Complex64]) {
        self.row_fwd.process_with_scratch(buf, &mut self.scratch);
        self.transpose_into(buf);
        let mut transposed = std::mem::take(&mut self.transposed);
        self.col_fwd
            .process_with_scratch(&mut transposed, &mut self.scratch);
        self.transposed = transposed;
        self.transpose_back(buf);
    }

    fn inverse(&mut self, buf: &mut [Complex64]) {
        self.row_inv.process_with_scratch(buf, &mut self.scratch);
        self.transpose_into(buf);
        let mut transposed = std::mem::take(&mut self.transposed);
        self.col_inv
            .process_with_scratch(&mut transposed, &mut self.scratch);
        self.transposed = transposed;
        self.transpose_back(buf);
        let norm = 1.0 / (self.width * self.height) as f64;
        for v in buf.iter_mut() {
            *v *= norm;
        }
    }
}

/// Cached denominator plus DFT plans, reused across solver iterations.
pub struct SpectralSolver {
    denominator: SpectralDenominator,
    dft: Dft2,
    buffer: Vec<Complex64>,
}

impl SpectralSolver {
    pub fn new(width: usize, height: usize, theta1: f64, theta2: f64) -> Self {
        Self {
            denominator: SpectralDenominator::new(width, height, theta1, theta2),
            dft: Dft2::new(width, height),
            buffer: vec![Complex64::default(); width * height],
        }
    }

    pub fn denominator(&self) -> &SpectralDenominator {
        &self.denominator
    }

    /// Solves (θ1·I + θ2·div²∘hessian) u = θ1·(ũ − s) + θ2·div²(V − d).
    pub fn solve(
        &mut self,
        u_tilde: &ScalarField,
        s: &ScalarField,
        v: &MatrixField,
        d: &MatrixField,
    ) -> ScalarField {
        let denom = &self.denominator;
        assert!(
            u_tilde.width() == denom.width && u_tilde.height() == denom.height,
            "field size does not match the planned grid"
        );
        assert!(u_tilde.same_size(s), "u_tilde and s differ in size");
        assert!(v.same_size(d), "V and d differ in size");
        assert!(
            v.width() == denom.width && v.height() == denom.height,
            "matrix field size does not match the planned grid"
        );

        let correction = div2(&v.zip_map(d, |a, b| a - b));
        let theta1 = denom.theta1;
        let theta2 = denom.theta2;
        let n = u_tilde.len();
        let mut rhs = vec![0.0f64; n];
        for i in 0..n {
            rhs[i] = theta1 * (u_tilde.data()[i] - s.data()[i]) + theta2 * correction.data()[i];
        }

        for i in 0..n {
            self.buffer[i] = Complex64::new(rhs[i], 0.0);
        }
        self.dft.forward(&mut self.buffer);
        for i in 0..n {
            self.buffer[i] /= self.denominator.values[i];
        }
        self.dft.inverse(&mut self.buffer);

        let max_imag = self
            .buffer
            .iter()
            .map(|c| c.im.abs())
            .fold(0.0, f64::max);
        assert!(
            max_imag <= 1e-9,
            "spectral solve produced imaginary residue {max_imag:e}"
        );

        let out = ScalarField::from_vec(
            u_tilde.width(),
            u_tilde.height(),
            self.buffer.iter().map(|c| c.re).collect(),
        );

        #[cfg(debug_assertions)]
        {
            use crate::diffops::hessian;
            let applied = div2(&hessian(&out));
            let mut worst = 0.0f64;
            let mut scale = 1.0f64;
            for i in 0..n {
                let lhs = theta1 * out.data()[i] + theta2 * applied.data()[i];
                worst = worst.max((lhs - rhs[i]).abs());
                scale = scale.max(rhs[i].abs());
            }
            debug_assert!(
                worst <= 1e-8 * scale,
                "spatial residual {worst:e} exceeds tolerance at scale {scale:e}"
            );
        }

        out
    }
}

/// One-shot solve against a prebuilt denominator; plans are created per call.
pub fn solve_u(
    u_tilde: &ScalarField,
    s: &ScalarField,
    v: &MatrixField,
    d: &MatrixField,
    theta1: f64,
    theta2: f64,
    denominator: &SpectralDenominator,
) -> ScalarField {
    assert!(
        denominator.matches(u_tilde.width(), u_tilde.height(), theta1, theta2),
        "denominator was built for different dimensions or weights"
    );
    let mut solver = SpectralSolver {
        denominator: denominator.clone(),
        dft: Dft2::new(denominator.width, denominator.height),
        buffer: vec![Complex64::default(); denominator.width * denominator.height],
    };
    solver.solve(u_tilde, s, v, d)
}
