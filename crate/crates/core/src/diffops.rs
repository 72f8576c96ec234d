//! Forward-backward finite difference stencils under periodic boundaries.
//!
//! All operators index neighbours directly through [`wrap_index`] rather
//! than via convolution, so that the discrete Hessian and the second-order
//! divergence stay exact adjoints of each other and agree with the spectral
//! symbol used by the FFT solve.

use crate::grid::{wrap_index, ScalarField};

/// Per-pixel 2×2 matrix stored as four planes.
///
/// `m11`, `m21`, `m12`, `m22` hold the (1,1), (2,1), (1,2), (2,2) entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    pub m11: ScalarField,
    pub m21: ScalarField,
    pub m12: ScalarField,
    pub m22: ScalarField,
}

impl MatrixField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            m11: ScalarField::zeros(width, height),
            m21: ScalarField::zeros(width, height),
            m12: ScalarField::zeros(width, height),
            m22: ScalarField::zeros(width, height),
        }
    }

    pub fn from_planes(
        m11: ScalarField,
        m21: ScalarField,
        m12: ScalarField,
        m22: ScalarField,
    ) -> Self {
        assert!(
            m11.same_size(&m21) && m11.same_size(&m12) && m11.same_size(&m22),
            "matrix planes differ in size"
        );
        Self { m11, m21, m12, m22 }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.m11.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.m11.height()
    }

    pub fn same_size(&self, other: &MatrixField) -> bool {
        self.m11.same_size(&other.m11)
    }

    pub fn planes(&self) -> [&ScalarField; 4] {
        [&self.m11, &self.m21, &self.m12, &self.m22]
    }

    /// Entry-wise matrix sum over all planes and pixels of `self · other`.
    pub fn dot(&self, other: &MatrixField) -> f64 {
        self.m11.dot(&other.m11)
            + self.m21.dot(&other.m21)
            + self.m12.dot(&other.m12)
            + self.m22.dot(&other.m22)
    }

    /// Euclidean norm over all four planes.
    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Per-pixel Frobenius magnitude sqrt(m11² + m21² + m12² + m22²).
    pub fn frobenius(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.width(), self.height());
        for i in 0..out.len() {
            out.data_mut()[i] = (self.m11.data()[i] * self.m11.data()[i]
                + self.m21.data()[i] * self.m21.data()[i]
                + self.m12.data()[i] * self.m12.data()[i]
                + self.m22.data()[i] * self.m22.data()[i])
                .sqrt();
        }
        out
    }

    /// Entry-wise combination of two matrix fields.
    pub fn zip_map(&self, other: &MatrixField, f: impl Fn(f64, f64) -> f64 + Copy) -> MatrixField {
        MatrixField {
            m11: self.m11.zip_map(&other.m11, f),
            m21: self.m21.zip_map(&other.m21, f),
            m12: self.m12.zip_map(&other.m12, f),
            m22: self.m22.zip_map(&other.m22, f),
        }
    }
}

/// Second difference along x: u(i,j−1) − 2u(i,j) + u(i,j+1), wrapping j.
///
/// This is both ∂x⁺∂x⁻ and ∂x⁻∂x⁺; the two factorisations coincide.
pub fn dxx(u: &ScalarField) -> ScalarField {
    let (w, h) = (u.width(), u.height());
    let mut out = ScalarField::zeros(w, h);
    for r in 0..h {
        for c in 0..w {
            let left = u.get(r, wrap_index(c as isize - 1, w));
            let right = u.get(r, wrap_index(c as isize + 1, w));
            out.set(r, c, left - 2.0 * u.get(r, c) + right);
        }
    }
    out
}

/// Second difference along y: u(i−1,j) − 2u(i,j) + u(i+1,j), wrapping i.
pub fn dyy(u: &ScalarField) -> ScalarField {
    let (w, h) = (u.width(), u.height());
    let mut out = ScalarField::zeros(w, h);
    for r in 0..h {
        let up = wrap_index(r as isize - 1, h);
        let down = wrap_index(r as isize + 1, h);
        for c in 0..w {
            out.set(r, c, u.get(up, c) - 2.0 * u.get(r, c) + u.get(down, c));
        }
    }
    out
}

/// Forward mixed difference ∂x⁺∂y⁺ = ∂y⁺∂x⁺:
/// u(i,j) − u(i+1,j) − u(i,j+1) + u(i+1,j+1), wrapping both axes.
pub fn dxy_forward(u: &ScalarField) -> ScalarField {
    let (w, h) = (u.width(), u.height());
    let mut out = ScalarField::zeros(w, h);
    for r in 0..h {
        let down = wrap_index(r as isize + 1, h);
        for c in 0..w {
            let right = wrap_index(c as isize + 1, w);
            out.set(
                r,
                c,
                u.get(r, c) - u.get(down, c) - u.get(r, right) + u.get(down, right),
            );
        }
    }
    out
}

/// Backward mixed difference ∂x⁻∂y⁻ = ∂y⁻∂x⁻:
/// u(i,j) − u(i,j−1) − u(i−1,j) + u(i−1,j−1), wrapping both axes.
pub fn dxy_backward(u: &ScalarField) -> ScalarField {
    let (w, h) = (u.width(), u.height());
    let mut out = ScalarField::zeros(w, h);
    for r in 0..h {
        let up = wrap_index(r as isize - 1, h);
        for c in 0..w {
            let left = wrap_index(c as isize - 1, w);
            out.set(
                r,
                c,
                u.get(r, c) - u.get(r, left) - u.get(up, c) + u.get(up, left),
            );
        }
    }
    out
}

/// Discrete Hessian: entries (∂x⁻∂x⁺u, ∂y⁺∂x⁺u; ∂x⁺∂y⁺u, ∂y⁻∂y⁺u).
///
/// The two mixed planes are the same field, so `m21 == m12` identically.
pub fn hessian(u: &ScalarField) -> MatrixField {
    let mixed = dxy_forward(u);
    MatrixField {
        m11: dxx(u),
        m21: mixed.clone(),
        m12: mixed,
        m22: dyy(u),
    }
}

/// Second-order divergence, the adjoint of [`hessian`]:
/// ∂x⁺∂x⁻(m11) + ∂y⁻∂x⁻(m21) + ∂x⁻∂y⁻(m12) + ∂y⁺∂y⁻(m22).
pub fn div2(p: &MatrixField) -> ScalarField {
    let a = dxx(&p.m11);
    let b = dxy_backward(&p.m21);
    let c = dxy_backward(&p.m12);
    let d = dyy(&p.m22);
    let mut out = ScalarField::zeros(p.width(), p.height());
    for i in 0..out.len() {
        out.data_mut()[i] = a.data()[i] + b.data()[i] + c.data()[i] + d.data()[i];
    }
    out
}

/// Central differences (ux, uy) with periodic wrap:
/// ux(i,j) = (u(i,j+1) − u(i,j−1))/2 and uy(i,j) = (u(i+1,j) − u(i−1,j))/2.
pub fn gradient_central(u: &ScalarField) -> (ScalarField, ScalarField) {
    let (w, h) = (u.width(), u.height());
    let mut ux = ScalarField::zeros(w, h);
    let mut uy = ScalarField::zeros(w, h);
    for r in 0..h {
        let up = wrap_index(r as isize - 1, h);
        let down = wrap_index(r as isize + 1, h);
        for c in 0..w {
            let left = wrap_index(c as isize - 1, w);
            let right = wrap_index(c as isize + 1, w);
            ux.set(r, c, (u.get(r, right) - u.get(r, left)) / 2.0);
            uy.set(r, c, (u.get(down, c) - u.get(up, c)) / 2.0);
        }
    }
    (ux, uy)
}
