//! Diffraction matrices, the cascaded SIM transfer matrix, steering vectors
//! and beampattern gains.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;

use crate::allocation::AllocationState;
use crate::error::{Error, Result};
use crate::scenario::Geometry;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// `r e^{it}` through the portable `libm` routines.
pub fn cis(r: f64, t: f64) -> C64 {
    C64::new(r * libm::cos(t), r * libm::sin(t))
}

/// Rayleigh–Sommerfeld transmission coefficient between two atoms at distance
/// `r` whose connecting line makes angle `chi` with the source layer normal.
pub fn rs_coefficient(r: f64, chi: f64, lambda: f64, area: f64) -> Result<C64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("propagation distance must be positive, got {r}")));
    }
    // cos(π/2) rounds to 6e-17; grazing propagation carries nothing.
    let cos_chi = if chi.abs() == PI / 2.0 { 0.0 } else { libm::cos(chi) };
    let amp = area * cos_chi / r;
    let near = C64::new(1.0 / (2.0 * PI * r), -1.0 / lambda);
    Ok(near * cis(amp, 2.0 * PI * r / lambda))
}

/// `psi[0]` is `M x N` (antennas to first layer), `psi[l]` is `M x M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrices {
    pub psi: Vec<CMatrix>,
}

impl PropagationMatrices {
    pub fn num_layers(&self) -> usize {
        self.psi.len()
    }

    pub fn atoms(&self) -> usize {
        self.psi[0].nrows()
    }

    pub fn antennas(&self) -> usize {
        self.psi[0].ncols()
    }
}

/// Layers are stacked along +y at spacing `dy`, so the source normal is the
/// y axis. In-plane offsets come from the x/z coordinates only, which keeps
/// congruent layer pairs bit-identical.
fn transmission(src: &[[f64; 3]], dst: &[[f64; 3]], dy: f64, lambda: f64, area: f64) -> Result<CMatrix> {
    let mut out = CMatrix::zeros(dst.len(), src.len());
    for (m, p) in dst.iter().enumerate() {
        for (k, q) in src.iter().enumerate() {
            let r = ((p[0] - q[0]).powi(2) + dy * dy + (p[2] - q[2]).powi(2)).sqrt();
            let chi = (dy / r).clamp(-1.0, 1.0).acos();
            out[(m, k)] = rs_coefficient(r, chi, lambda, area)?;
        }
    }
    Ok(out)
}

pub fn build_propagation(geom: &Geometry, area: f64) -> Result<PropagationMatrices> {
    let lambda = geom.wavelength;
    let mut psi = Vec::with_capacity(geom.atom_positions.len());
    let mut src: &[[f64; 3]] = &geom.antenna_positions;
    for layer in &geom.atom_positions {
        psi.push(transmission(src, layer, geom.layer_spacing, lambda, area)?);
        src = layer;
    }
    Ok(PropagationMatrices { psi })
}

/// Per-layer phase shifts `θ[l][m]` in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPhases {
    pub theta: Vec<Vec<f64>>,
}

impl SimPhases {
    pub fn zeros(layers: usize, atoms: usize) -> Self {
        SimPhases {
            theta: vec![vec![0.0; atoms]; layers],
        }
    }

    pub fn random<R: Rng + ?Sized>(layers: usize, atoms: usize, rng: &mut R) -> Self {
        SimPhases {
            theta: (0..layers)
                .map(|_| (0..atoms).map(|_| rng.gen_range(0.0..2.0 * PI)).collect())
                .collect(),
        }
    }

    pub fn num_layers(&self) -> usize {
        self.theta.len()
    }

    pub fn phi(&self, l: usize, m: usize) -> C64 {
        cis(1.0, self.theta[l][m])
    }

    pub fn layer_phi(&self, l: usize) -> Vec<C64> {
        self.theta[l].iter().map(|&t| cis(1.0, t)).collect()
    }

    /// Maps every angle back into `[0, 2π)`.
    pub fn wrap(&mut self) {
        for t in self.theta.iter_mut().flatten() {
            *t = t.rem_euclid(2.0 * PI);
            if *t >= 2.0 * PI {
                *t = 0.0;
            }
        }
    }
}

fn scale_rows(m: &mut CMatrix, phi: &[C64]) {
    for (r, &p) in phi.iter().enumerate() {
        for v in m.row_mut(r).iter_mut() {
            *v *= p;
        }
    }
}

/// `Θ = Φ_L Ψ_L ⋯ Φ_1 Ψ_1`, accumulated from the antenna side.
pub fn assemble_transfer(phases: &SimPhases, prop: &PropagationMatrices) -> Result<CMatrix> {
    if phases.num_layers() != prop.num_layers() {
        return Err(Error::Shape(format!(
            "{} phase layers for {} propagation layers",
            phases.num_layers(),
            prop.num_layers()
        )));
    }
    let mut w: Option<CMatrix> = None;
    for (l, psi) in prop.psi.iter().enumerate() {
        if phases.theta[l].len() != psi.nrows() {
            return Err(Error::Shape(format!(
                "layer {l}: {} phases for {} atoms",
                phases.theta[l].len(),
                psi.nrows()
            )));
        }
        let mut next = match w {
            None => psi.clone(),
            Some(prev) => {
                if psi.ncols() != prev.nrows() {
                    return Err(Error::Shape(format!("layer {l}: Ψ has {} columns", psi.ncols())));
                }
                psi * prev
            }
        };
        scale_rows(&mut next, &phases.layer_phi(l));
        w = Some(next);
    }
    w.ok_or_else(|| Error::Shape("no layers".into()))
}

/// Planar-array steering vector toward elevation `theta`, azimuth `phi`.
/// Entry `kx * mz + kz` holds `e^{−jπ(kx sinθ sinφ + kz cosθ)} / √(mx mz)`.
pub fn steering_vector(theta: f64, phi: f64, mx: usize, mz: usize) -> Result<CVector> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::Domain(format!("elevation {theta} outside (0, π)")));
    }
    if !(phi > -PI / 2.0 && phi < PI / 2.0) {
        return Err(Error::Domain(format!("azimuth {phi} outside (−π/2, π/2)")));
    }
    let norm = 1.0 / ((mx * mz) as f64).sqrt();
    let ux = libm::sin(theta) * libm::sin(phi);
    let uz = libm::cos(theta);
    Ok(CVector::from_fn(mx * mz, |m, _| {
        let (kx, kz) = ((m / mz) as f64, (m % mz) as f64);
        cis(norm, -PI * (kx * ux + kz * uz))
    }))
}

/// `Σ_c = Σ_j (β + ρ − z)_{j,c} p_{j,c} θ_j θ_jᴴ`, URLLC user `j` using
/// column `j mod N` of `Θ`.
pub fn effective_covariance(alloc: &AllocationState, theta: &CMatrix, c: usize) -> CMatrix {
    let m = theta.nrows();
    let mut sigma = CMatrix::zeros(m, m);
    for j in 0..alloc.beta.rows() {
        let p = alloc.p_u.get(j, c);
        if alloc.urllc_active(j, c) && p > 0.0 {
            let col = theta.column(j % theta.ncols());
            sigma += (col * col.adjoint()) * C64::from(p);
        }
    }
    sigma
}

/// `aᴴ Σ a` after Hermitian symmetrization.
pub fn beampattern_gain(sigma: &CMatrix, a: &CVector) -> f64 {
    let herm = (sigma + sigma.adjoint()) * C64::from(0.5);
    let v = (a.adjoint() * herm * a)[(0, 0)];
    debug_assert!(v.im.abs() <= 1e-9 * sigma.norm().max(f64::MIN_POSITIVE));
    v.re.max(0.0)
}

/// `|aᴴ v|²`, the gain of a rank-one covariance `v vᴴ`.
pub fn directional_gain(a: &CVector, v: &nalgebra::DVectorView<'_, C64>) -> f64 {
    a.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
}
