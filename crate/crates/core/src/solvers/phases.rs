//! Projected gradient ascent over SIM phase shifts.
//!
//! Every objective handled here depends on the phases only through probes
//! `x_k = |u_kᴴ Θ e_{j_k}|²` (a channel or steering vector against one column
//! of the transfer matrix). The phase gradient of a probe follows from
//! `Θ = A_ℓ Φ_ℓ B_ℓ`:
//! `∂x/∂θ_m^(ℓ) = −2 Im(s̄ (uᴴA_ℓ)_m φ_m (B_ℓ e_j)_m)` with `s = uᴴ Θ e_j`.
//! Steps are taken directly in angle form, which keeps every coefficient on
//! the unit circle.

use std::f64::consts::LN_2;

use crate::sim_physics::{CMatrix, CVector, PropagationMatrices, SimPhases, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub u: CVector,
    pub column: usize,
}

/// `weight · max(0, log2(1 + scale · x) − kappa)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTerm {
    pub probe: usize,
    pub weight: f64,
    pub scale: f64,
    pub kappa: f64,
    /// Multiplier in the objective (zero for terms used only by a floor).
    pub coef: f64,
    pub group: Option<usize>,
}

/// Penalized when `base + Σ group rates < target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFloor {
    pub base: f64,
    pub target: f64,
}

/// Penalized as `scale · [1 − Σ p x / need]⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainFloor {
    pub terms: Vec<(usize, f64)>,
    pub need: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseObjective {
    pub probes: Vec<Probe>,
    pub rates: Vec<RateTerm>,
    pub floors: Vec<RateFloor>,
    pub gains: Vec<GainFloor>,
    pub penalty: f64,
}

fn term_rate(t: &RateTerm, x: f64) -> f64 {
    t.weight * ((1.0 + t.scale * x).log2() - t.kappa).max(0.0)
}

fn term_slope(t: &RateTerm, x: f64) -> f64 {
    if (1.0 + t.scale * x).log2() - t.kappa > 0.0 {
        t.weight * t.scale / ((1.0 + t.scale * x) * LN_2)
    } else {
        0.0
    }
}

impl PhaseObjective {
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut f = 0.0;
        let mut group = vec![0.0; self.floors.len()];
        for t in &self.rates {
            let r = term_rate(t, x[t.probe]);
            f += t.coef * r;
            if let Some(g) = t.group {
                group[g] += r;
            }
        }
        for (fl, have) in self.floors.iter().zip(&group) {
            f -= self.penalty * (fl.target - fl.base - have).max(0.0);
        }
        for g in &self.gains {
            let have: f64 = g.terms.iter().map(|&(k, p)| p * x[k]).sum();
            f -= self.penalty * g.scale * (1.0 - have / g.need).max(0.0);
        }
        f
    }

    /// `∂f/∂x_k` for every probe.
    pub fn slopes(&self, x: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; x.len()];
        let mut group = vec![0.0; self.floors.len()];
        for t in &self.rates {
            if let Some(g) = t.group {
                group[g] += term_rate(t, x[t.probe]);
            }
        }
        let short: Vec<bool> = self
            .floors
            .iter()
            .zip(&group)
            .map(|(fl, have)| fl.target - fl.base - have > 0.0)
            .collect();
        for t in &self.rates {
            let mut c = t.coef;
            if let Some(g) = t.group {
                if short[g] {
                    c += self.penalty;
                }
            }
            d[t.probe] += c * term_slope(t, x[t.probe]);
        }
        for g in &self.gains {
            let have: f64 = g.terms.iter().map(|&(k, p)| p * x[k]).sum();
            if have < g.need {
                for &(k, p) in &g.terms {
                    d[k] += self.penalty * g.scale * p / g.need;
                }
            }
        }
        d
    }
}

/// Forward products `B_ℓ` (before `Φ_ℓ` is applied) for every layer.
fn forward(phases: &SimPhases, prop: &PropagationMatrices) -> (Vec<CMatrix>, CMatrix) {
    let mut pre = Vec::with_capacity(prop.num_layers());
    let mut w = prop.psi[0].clone();
    for l in 0..prop.num_layers() {
        if l > 0 {
            w = &prop.psi[l] * &w;
        }
        pre.push(w.clone());
        for (r, phi) in phases.layer_phi(l).into_iter().enumerate() {
            for v in w.row_mut(r).iter_mut() {
                *v *= phi;
            }
        }
    }
    (pre, w)
}

pub fn probe_values(theta: &CMatrix, probes: &[Probe]) -> Vec<C64> {
    probes
        .iter()
        .map(|p| p.u.iter().zip(theta.column(p.column).iter()).map(|(a, b)| a.conj() * b).sum())
        .collect()
}

pub fn evaluate(obj: &PhaseObjective, phases: &SimPhases, prop: &PropagationMatrices) -> f64 {
    let (_, theta) = forward(phases, prop);
    let x: Vec<f64> = probe_values(&theta, &obj.probes).iter().map(|s| s.norm_sqr()).collect();
    obj.value(&x)
}

/// Objective value and its gradient with respect to every phase angle.
pub fn gradient(obj: &PhaseObjective, phases: &SimPhases, prop: &PropagationMatrices) -> (f64, Vec<Vec<f64>>) {
    let (pre, theta) = forward(phases, prop);
    let s = probe_values(&theta, &obj.probes);
    let x: Vec<f64> = s.iter().map(|v| v.norm_sqr()).collect();
    let value = obj.value(&x);
    let d = obj.slopes(&x);
    let layers = prop.num_layers();
    let m = prop.atoms();
    let mut grad = vec![vec![0.0; m]; layers];

    // One backward pass per column with the probe rows folded together.
    for col in 0..theta.ncols() {
        let mut row: Vec<C64> = vec![C64::new(0.0, 0.0); m];
        let mut any = false;
        for (k, p) in obj.probes.iter().enumerate() {
            if p.column != col || d[k] == 0.0 {
                continue;
            }
            any = true;
            let w = s[k].conj() * d[k];
            for (r, uk) in row.iter_mut().zip(p.u.iter()) {
                *r += w * uk.conj();
            }
        }
        if !any {
            continue;
        }
        for l in (0..layers).rev() {
            let phi = phases.layer_phi(l);
            for mm in 0..m {
                let q = row[mm] * phi[mm] * pre[l][(mm, col)];
                grad[l][mm] += -2.0 * q.im;
            }
            if l > 0 {
                let scaled: Vec<C64> = row.iter().zip(&phi).map(|(r, p)| r * p).collect();
                let psi = &prop.psi[l];
                let mut next = vec![C64::new(0.0, 0.0); psi.ncols()];
                for (i, sv) in scaled.iter().enumerate() {
                    if *sv == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for (k, nv) in next.iter_mut().enumerate() {
                        *nv += sv * psi[(i, k)];
                    }
                }
                row = next;
            }
        }
    }
    (value, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgaOutcome {
    pub phases: SimPhases,
    /// Objective after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

/// Ascent with steps of `step` radians along the sup-normalized gradient,
/// halving on any decrease. Stops once a step gains less than `tol` relative
/// to the objective; that last step is not taken.
pub fn solve_phases(
    obj: &PhaseObjective,
    start: &SimPhases,
    prop: &PropagationMatrices,
    step: f64,
    iters: usize,
    tol: f64,
) -> PgaOutcome {
    let mut phases = start.clone();
    let (mut f, mut grad) = gradient(obj, &phases, prop);
    let mut history = vec![f];
    let mut eta = step;
    for _ in 0..iters {
        let gmax = grad.iter().flatten().fold(0.0f64, |a, g| a.max(g.abs()));
        if gmax == 0.0 || !gmax.is_finite() {
            break;
        }
        let mut accepted = None;
        while eta > 1e-9 {
            let mut trial = phases.clone();
            for (tl, gl) in trial.theta.iter_mut().zip(&grad) {
                for (t, g) in tl.iter_mut().zip(gl) {
                    *t += eta * g / gmax;
                }
            }
            trial.wrap();
            let ft = evaluate(obj, &trial, prop);
            if ft > f {
                accepted = Some((trial, ft));
                break;
            }
            eta *= 0.5;
        }
        let Some((trial, ft)) = accepted else { break };
        if ft - f <= tol * ft.abs().max(1.0) {
            break;
        }
        phases = trial;
        f = ft;
        history.push(f);
        grad = gradient(obj, &phases, prop).1;
        eta = (eta * 2.0).min(step);
    }
    PgaOutcome { phases, history }
}
