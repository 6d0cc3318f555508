//! Closed-form 2x2 complex linear algebra.

use num_complex::Complex64;

pub type Vec2 = [Complex64; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[ZERO; 2]; 2]);

    pub fn identity() -> Mat2 {
        Mat2::diag(1.0, 1.0)
    }

    pub fn diag(a: f64, d: f64) -> Mat2 {
        Mat2([
            [Complex64::new(a, 0.0), ZERO],
            [ZERO, Complex64::new(d, 0.0)],
        ])
    }

    /// `u u^H`
    pub fn outer(u: &Vec2) -> Mat2 {
        let mut m = Mat2::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = u[i] * u[j].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|v| *v *= s);
        m
    }

    pub fn add(&self, other: &Mat2) -> Mat2 {
        let mut m = *self;
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] += other.0[i][j];
            }
        }
        m
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let mut m = Mat2::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = self.0[i][0] * other.0[0][j] + self.0[i][1] * other.0[1][j];
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn conj_transpose(&self) -> Mat2 {
        let a = &self.0;
        Mat2([[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]])
    }

    /// `(A + A^H) / 2`, with an exactly real diagonal.
    pub fn hermitian_part(&self) -> Mat2 {
        let off = (self.0[0][1] + self.0[1][0].conj()) * 0.5;
        Mat2([
            [Complex64::new(self.0[0][0].re, 0.0), off],
            [off.conj(), Complex64::new(self.0[1][1].re, 0.0)],
        ])
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_error(&self) -> f64 {
        let d = self.add(&self.conj_transpose().scale(-1.0));
        d.0.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `A + eps I`
    pub fn loaded(&self, eps: f64) -> Mat2 {
        let mut m = *self;
        m.0[0][0] += eps;
        m.0[1][1] += eps;
        m
    }

    /// Inverse of a Hermitian matrix. `None` when singular to working
    /// precision (reciprocal condition below 1e-14) or non-finite.
    pub fn hermitian_inverse(&self) -> Option<Mat2> {
        let h = self.hermitian_part();
        let a = h.0[0][0].re;
        let d = h.0[1][1].re;
        let b = h.0[0][1];
        let det = a * d - b.norm_sqr();
        let scale = h.frobenius().powi(2);
        if !det.is_finite() || !h.is_finite() || scale == 0.0 || det.abs() < 1e-14 * scale {
            return None;
        }
        let inv = 1.0 / det;
        Some(Mat2([
            [Complex64::new(d * inv, 0.0), -b * inv],
            [-b.conj() * inv, Complex64::new(a * inv, 0.0)],
        ]))
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let h = self.hermitian_part();
        let a = h.0[0][0].re;
        let d = h.0[1][1].re;
        let mid = 0.5 * (a + d);
        let r = (0.25 * (a - d).powi(2) + h.0[0][1].norm_sqr()).sqrt();
        [mid - r, mid + r]
    }
}

pub fn dot_h(u: &Vec2, v: &Vec2) -> Complex64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

pub fn norm(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub fn scale_vec(v: &Vec2, s: Complex64) -> Vec2 {
    [v[0] * s, v[1] * s]
}

/// Unit-norm eigenvector of the eigenvalue with the largest real part,
/// from the characteristic polynomial. Near-ties (discriminant below
/// `1e-12 * trace^2`) return `[1, 0]`.
pub fn principal_eigenvector(m: &Mat2) -> Vec2 {
    let fallback = [Complex64::new(1.0, 0.0), ZERO];
    let tr = m.trace();
    let half = tr * 0.5;
    let disc = half * half - m.det();
    if disc.norm() <= 1e-12 * tr.norm_sqr() || !disc.re.is_finite() {
        return fallback;
    }
    let root = disc.sqrt();
    let (l1, l2) = (half + root, half - root);
    let lambda = if l1.re >= l2.re { l1 } else { l2 };
    let a = &m.0;
    let u1 = [a[0][1], lambda - a[0][0]];
    let u2 = [lambda - a[1][1], a[1][0]];
    let u = if norm(&u1) >= norm(&u2) { u1 } else { u2 };
    let n = norm(&u);
    if n == 0.0 || !n.is_finite() {
        return fallback;
    }
    scale_vec(&u, Complex64::new(1.0 / n, 0.0))
}

/// Rotate `v` so entry `r` is real and non-negative.
pub fn fix_phase(v: &Vec2, r: usize) -> Vec2 {
    let p = v[r].norm();
    if p == 0.0 {
        return *v;
    }
    let mut out = scale_vec(v, v[r].conj() / p);
    out[r] = Complex64::new(p, 0.0);
    out
}
