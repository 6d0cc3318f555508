use num_complex::Complex64;

use super::linalg::{dot_h, fix_phase, norm, principal_eigenvector, scale_vec, Mat2, Vec2};
use super::{EnhanceError, Mask};
use crate::dsp::Spectrogram;

/// Per-frequency speech and noise spatial covariance matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ScmBank {
    pub r_s: Vec<Mat2>,
    pub r_v: Vec<Mat2>,
    pub frame_count: usize,
}

impl ScmBank {
    pub fn bins(&self) -> usize {
        self.r_s.len()
    }

    /// Hermitian within 1e-12 and PSD within -1e-10 (relative to the trace).
    pub fn check_invariants(&self) -> Result<(), EnhanceError> {
        for (f, m) in self.r_s.iter().chain(&self.r_v).enumerate() {
            let scale = m.trace().re.abs().max(1.0);
            if m.hermitian_error() > 1e-12 * scale {
                return Err(EnhanceError::ScmInvariant { bin: f % self.bins().max(1), what: "not Hermitian" });
            }
            if m.hermitian_eigenvalues()[0] < -1e-10 * scale {
                return Err(EnhanceError::ScmInvariant { bin: f % self.bins().max(1), what: "not PSD" });
            }
        }
        Ok(())
    }
}

fn check_multichannel(mask: &Mask, specs: &[Spectrogram]) -> Result<(), EnhanceError> {
    if specs.len() != 2 {
        return Err(EnhanceError::ChannelCount(specs.len()));
    }
    if !specs[0].same_shape(&specs[1]) || !mask.matches(&specs[0]) {
        return Err(EnhanceError::DimensionMismatch);
    }
    Ok(())
}

/// Mask-weighted SCMs, both normalized by the total frame count:
/// `R_s = 1/T sum M x x^H`, `R_v = 1/T sum (1 - M) x x^H`.
pub fn estimate_scms(mask: &Mask, specs: &[Spectrogram]) -> Result<ScmBank, EnhanceError> {
    check_multichannel(mask, specs)?;
    let (frames, bins) = (mask.frames(), mask.bins());
    let mut r_s = vec![Mat2::ZERO; bins];
    let mut r_v = vec![Mat2::ZERO; bins];
    // accumulate |x1|^2, |x2|^2 and x1 x2^* so the result is exactly Hermitian
    for f in 0..bins {
        let (mut s11, mut s22, mut s12) = (0.0, 0.0, Complex64::default());
        let (mut v11, mut v22, mut v12) = (0.0, 0.0, Complex64::default());
        for t in 0..frames {
            let m = mask.get(t, f);
            let x1 = specs[0].get(t, f);
            let x2 = specs[1].get(t, f);
            let (p1, p2, c12) = (x1.norm_sqr(), x2.norm_sqr(), x1 * x2.conj());
            s11 += m * p1;
            s22 += m * p2;
            s12 += c12 * m;
            let w = 1.0 - m;
            v11 += w * p1;
            v22 += w * p2;
            v12 += c12 * w;
        }
        let inv_t = 1.0 / frames as f64;
        let build = |a: f64, d: f64, b: Complex64| {
            Mat2([
                [Complex64::new(a * inv_t, 0.0), b * inv_t],
                [(b * inv_t).conj(), Complex64::new(d * inv_t, 0.0)],
            ])
        };
        r_s[f] = build(s11, s22, s12);
        r_v[f] = build(v11, v22, v12);
    }
    Ok(ScmBank {
        r_s,
        r_v,
        frame_count: frames,
    })
}

/// Diagonal loading added to R_v before inversion.
pub fn loading(r_v: &Mat2) -> f64 {
    1e-6 * r_v.trace().re.max(0.0) / 2.0 + 1e-12
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringEstimate {
    pub vectors: Vec<Vec2>,
    /// Bins where the loaded R_v was still singular; their steering falls
    /// back to the principal eigenvector of R_s.
    pub flagged: Vec<usize>,
}

/// `a_f = R_v maxeig(R_v^{-1} R_s)` with R_v diagonally loaded, the eigenvector
/// unit-normalized before the product, and the reference entry made real
/// non-negative.
pub fn steering_vector(scms: &ScmBank, ref_channel: usize) -> Result<SteeringEstimate, EnhanceError> {
    if ref_channel > 1 {
        return Err(EnhanceError::RefChannel(ref_channel));
    }
    let mut vectors = Vec::with_capacity(scms.bins());
    let mut flagged = Vec::new();
    for (f, (rs, rv)) in scms.r_s.iter().zip(&scms.r_v).enumerate() {
        let rv_loaded = rv.hermitian_part().loaded(loading(rv));
        let a = match rv_loaded.hermitian_inverse() {
            Some(inv) => {
                let e = principal_eigenvector(&inv.mul(rs));
                rv_loaded.mul_vec(&e)
            }
            None => {
                flagged.push(f);
                principal_eigenvector(&rs.hermitian_part())
            }
        };
        vectors.push(fix_phase(&a, ref_channel));
    }
    Ok(SteeringEstimate { vectors, flagged })
}

/// Per-frequency MVDR filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub steering: Vec<Vec2>,
    pub weights: Vec<Vec2>,
    pub ref_channel: usize,
    /// Bins given pass-through weights because the steering vector was zero
    /// or R_v could not be inverted.
    pub flagged: Vec<usize>,
}

impl Beamformer {
    /// Weights that select `ref_channel` unchanged at every bin.
    pub fn pass_through(bins: usize, ref_channel: usize) -> Beamformer {
        let e = unit(ref_channel);
        Beamformer {
            steering: vec![e; bins],
            weights: vec![e; bins],
            ref_channel,
            flagged: Vec::new(),
        }
    }
}

fn unit(r: usize) -> Vec2 {
    let mut e = [Complex64::default(); 2];
    e[r] = Complex64::new(1.0, 0.0);
    e
}

/// `w_f = a_rf^* R_v^{-1} a_f / (a_f^H R_v^{-1} a_f)`, with the same diagonal
/// loading as [`steering_vector`].
pub fn mvdr_weights(steering: &[Vec2], scms: &ScmBank, ref_channel: usize) -> Result<Beamformer, EnhanceError> {
    if ref_channel > 1 {
        return Err(EnhanceError::RefChannel(ref_channel));
    }
    if steering.len() != scms.bins() {
        return Err(EnhanceError::DimensionMismatch);
    }
    let mut weights = Vec::with_capacity(steering.len());
    let mut flagged = Vec::new();
    for (f, (a, rv)) in steering.iter().zip(&scms.r_v).enumerate() {
        let n = norm(a);
        let inv = rv.hermitian_part().loaded(loading(rv)).hermitian_inverse();
        let w = match inv {
            Some(inv) if n > 0.0 && n.is_finite() => {
                let num = inv.mul_vec(a);
                let den = dot_h(a, &num);
                if den.norm() > 0.0 && den.re.is_finite() {
                    Some(scale_vec(&num, a[ref_channel].conj() / den))
                } else {
                    None
                }
            }
            _ => None,
        };
        weights.push(w.unwrap_or_else(|| {
            flagged.push(f);
            unit(ref_channel)
        }));
    }
    Ok(Beamformer {
        steering: steering.to_vec(),
        weights,
        ref_channel,
        flagged,
    })
}

/// `y_tf = w_f^H x_tf`
pub fn beamform(bf: &Beamformer, specs: &[Spectrogram]) -> Result<Spectrogram, EnhanceError> {
    if specs.len() != 2 {
        return Err(EnhanceError::ChannelCount(specs.len()));
    }
    if !specs[0].same_shape(&specs[1]) || bf.weights.len() != specs[0].bins() {
        return Err(EnhanceError::DimensionMismatch);
    }
    let bins = specs[0].bins();
    let data = specs[0]
        .data()
        .iter()
        .zip(specs[1].data())
        .enumerate()
        .map(|(i, (x1, x2))| {
            let w = &bf.weights[i % bins];
            w[0].conj() * x1 + w[1].conj() * x2
        })
        .collect();
    Ok(specs[0].with_data(data)?)
}
