//! Spatially correlated Rayleigh channels from the SIM output layer.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scenario::{distance, Geometry};
use crate::sim_physics::{CVector, C64};

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        libm::sin(PI * x) / (PI * x)
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub r: DMatrix<f64>,
    /// `E √Λ` with negative eigenvalues clipped to zero.
    pub factor: DMatrix<f64>,
    /// Sum of the magnitudes of the clipped eigenvalues.
    pub clipped_mass: f64,
}

impl CorrelationMatrix {
    pub fn from_matrix(r: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(r.clone());
        let mut clipped_mass = 0.0;
        let roots: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|&v| {
                if v < 0.0 {
                    clipped_mass -= v;
                    0.0
                } else {
                    v.sqrt()
                }
            })
            .collect();
        let mut factor = eig.eigenvectors;
        for (k, s) in roots.iter().enumerate() {
            factor.column_mut(k).scale_mut(*s);
        }
        CorrelationMatrix {
            r,
            factor,
            clipped_mass,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_matrix(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }
}

/// `R[m, m̃] = sinc(2 r_{m,m̃} / λ)` over the output layer.
pub fn build_correlation(geom: &Geometry, lambda: f64) -> CorrelationMatrix {
    let out = geom.output_layer();
    let n = out.len();
    let r = DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            1.0
        } else {
            sinc(2.0 * distance(&out[a], &out[b]) / lambda)
        }
    });
    CorrelationMatrix::from_matrix(r)
}

/// `(λ / 4π)² D^{−α}` with a 1 m reference distance.
pub fn path_loss(d: f64, lambda: f64, exponent: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    Ok((lambda / (4.0 * PI)).powi(2) * d.powf(-exponent))
}

/// `h[i][c]` for user `i` and RB `c`, plus per-user path loss.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h: Vec<Vec<CVector>>,
    pub pathloss: Vec<f64>,
}

impl ChannelSet {
    pub fn get(&self, user: usize, rb: usize) -> &CVector {
        &self.h[user][rb]
    }
}

/// Draws `h = √υ E √Λ g`, `g ~ CN(0, I)`, independently per user and RB.
pub fn sample_channels<R: Rng + ?Sized>(
    rng: &mut R,
    corr: &CorrelationMatrix,
    pathloss: &[f64],
    num_rbs: usize,
) -> ChannelSet {
    let m = corr.dim();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = pathloss
        .iter()
        .map(|&ups| {
            (0..num_rbs)
                .map(|_| {
                    let g = CVector::from_fn(m, |_, _| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        C64::new(re * s, im * s)
                    });
                    let mut h = CVector::zeros(m);
                    for (row, out) in h.iter_mut().enumerate() {
                        let mut acc = C64::new(0.0, 0.0);
                        for (k, gk) in g.iter().enumerate() {
                            acc += gk * corr.factor[(row, k)];
                        }
                        *out = acc * ups.sqrt();
                    }
                    h
                })
                .collect()
        })
        .collect();
    ChannelSet {
        h,
        pathloss: pathloss.to_vec(),
    }
}
