//! Power allocation by KKT water-filling.
//!
//! Every allocated (user, RB) pair contributes `w log2(1 + g p)` and costs
//! `η p`. Pairs may carry a lower bound (beampattern requirement) and belong
//! to a user group with a rate floor. At the optimum each pair sits at
//! `p = max(ℓ, ν_j w / ln 2 − 1/g)` where the group water level is
//! `ν_j = max(ν₀, ν_j^floor)` and `ν₀ = 1/(η + μ)` is set by the budget.

use std::f64::consts::LN_2;

use crate::allocation::Grid;
use crate::error::{ConstraintKind, Infeasible, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPair {
    pub weight: f64,
    pub gain: f64,
    pub lower: f64,
    pub group: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerProblem {
    pub pairs: Vec<PowerPair>,
    pub eta: f64,
    pub budget: f64,
    /// Per group, a floor on `Σ w log2(1 + g p)`.
    pub floors: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktReport {
    pub stationarity: f64,
    pub complementarity: f64,
    pub primal: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.complementarity).max(self.primal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSolution {
    pub p: Vec<f64>,
    pub nu0: f64,
    /// Budget multiplier.
    pub mu: f64,
    /// Floor multipliers per group.
    pub lambda: Vec<f64>,
    pub objective: f64,
    pub kkt: KktReport,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PowerFailure {
    Floors(Vec<usize>),
    Budget { required: f64, available: f64 },
}

fn pair_power(pair: &PowerPair, nu: f64) -> f64 {
    if pair.gain > 0.0 && pair.weight > 0.0 && nu.is_finite() {
        (nu * pair.weight / LN_2 - 1.0 / pair.gain).max(pair.lower)
    } else {
        pair.lower
    }
}

fn rate(pair: &PowerPair, p: f64) -> f64 {
    pair.weight * (1.0 + pair.gain * p).log2()
}

/// Bisection for the smallest `x` in `[lo, hi]` with `f(x) ≥ target`, `f` non-decreasing.
fn bisect(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

impl PowerProblem {
    fn group_rate(&self, g: usize, nu: f64) -> f64 {
        self.pairs
            .iter()
            .filter(|p| p.group == Some(g))
            .map(|p| rate(p, pair_power(p, nu)))
            .sum()
    }

    fn levels(&self, nu0: f64, floor_nu: &[f64]) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|p| match p.group {
                Some(g) => nu0.max(floor_nu[g]),
                None => nu0,
            })
            .collect()
    }

    fn total_power(&self, nu0: f64, floor_nu: &[f64]) -> f64 {
        self.pairs
            .iter()
            .zip(self.levels(nu0, floor_nu))
            .map(|(p, nu)| pair_power(p, nu))
            .sum()
    }

    pub fn objective(&self, p: &[f64]) -> f64 {
        self.pairs.iter().zip(p).map(|(q, &x)| rate(q, x) - self.eta * x).sum()
    }
}

pub fn solve_power(pr: &PowerProblem) -> std::result::Result<PowerSolution, PowerFailure> {
    let groups = pr.floors.len();
    let mut floor_nu = vec![0.0; groups];
    let mut failed = Vec::new();
    for g in 0..groups {
        let target = pr.floors[g];
        if target <= 0.0 || pr.group_rate(g, 0.0) >= target {
            continue;
        }
        let mut hi = 1.0;
        let mut ok = false;
        for _ in 0..2100 {
            if pr.group_rate(g, hi) >= target {
                ok = true;
                break;
            }
            hi *= 2.0;
            if !hi.is_finite() {
                break;
            }
        }
        if !ok {
            failed.push(g);
            continue;
        }
        floor_nu[g] = bisect(0.0, hi, target, |nu| pr.group_rate(g, nu));
    }
    if !failed.is_empty() {
        return Err(PowerFailure::Floors(failed));
    }

    let required = pr.total_power(0.0, &floor_nu);
    let tol = 1e-12 * pr.budget.max(1e-300);
    if required > pr.budget + tol {
        return Err(PowerFailure::Budget {
            required,
            available: pr.budget,
        });
    }
    let responsive = pr.pairs.iter().any(|p| p.gain > 0.0 && p.weight > 0.0);
    let nu0 = if !responsive {
        if pr.eta > 0.0 {
            1.0 / pr.eta
        } else {
            f64::INFINITY
        }
    } else {
        let cap = if pr.eta > 0.0 { 1.0 / pr.eta } else { f64::INFINITY };
        if cap.is_finite() && pr.total_power(cap, &floor_nu) <= pr.budget {
            cap
        } else {
            let mut hi = if cap.is_finite() { cap } else { 1.0 };
            while !cap.is_finite() && pr.total_power(hi, &floor_nu) <= pr.budget {
                hi *= 2.0;
            }
            // Keep total_power(lo) ≤ budget < total_power(hi).
            let mut lo = 0.0f64;
            for _ in 0..400 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if pr.total_power(mid, &floor_nu) <= pr.budget {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };
    let levels = pr.levels(nu0, &floor_nu);
    let p: Vec<f64> = pr.pairs.iter().zip(&levels).map(|(q, &nu)| pair_power(q, nu)).collect();
    let mu = if nu0.is_finite() && nu0 > 0.0 { (1.0 / nu0 - pr.eta).max(0.0) } else { 0.0 };
    let lambda: Vec<f64> = (0..groups)
        .map(|g| {
            if nu0.is_finite() && floor_nu[g] > nu0 {
                floor_nu[g] / nu0 - 1.0
            } else {
                0.0
            }
        })
        .collect();
    let kkt = kkt_residuals(pr, &p, mu, &lambda);
    Ok(PowerSolution {
        objective: pr.objective(&p),
        p,
        nu0,
        mu,
        lambda,
        kkt,
    })
}

/// Scaled stationarity, complementarity and primal residuals of a candidate
/// primal-dual point.
pub fn kkt_residuals(pr: &PowerProblem, p: &[f64], mu: f64, lambda: &[f64]) -> KktReport {
    let price = pr.eta + mu;
    let scale = if price > 0.0 { price } else { 1.0 };
    let mut rep = KktReport::default();
    for (q, &x) in pr.pairs.iter().zip(p) {
        let l = q.group.map_or(0.0, |g| lambda[g]);
        let marginal = (1.0 + l) * q.weight * q.gain / (LN_2 * (1.0 + q.gain * x));
        let r = if x > q.lower * (1.0 + 1e-12) + 1e-300 {
            (marginal - price).abs() / scale
        } else {
            (marginal - price).max(0.0) / scale
        };
        rep.stationarity = rep.stationarity.max(r);
        rep.primal = rep.primal.max((q.lower - x).max(0.0) / q.lower.max(1e-300));
    }
    let total: f64 = p.iter().sum();
    let budget = pr.budget.max(1e-300);
    rep.primal = rep.primal.max((total - pr.budget).max(0.0) / budget);
    rep.complementarity = rep
        .complementarity
        .max(mu / scale * (pr.budget - total).abs() / budget);
    for (g, &f) in pr.floors.iter().enumerate() {
        let have: f64 = pr
            .pairs
            .iter()
            .zip(p)
            .filter(|(q, _)| q.group == Some(g))
            .map(|(q, &x)| rate(q, x))
            .sum();
        let s = f.abs().max(1.0);
        rep.primal = rep.primal.max((f - have).max(0.0) / s);
        rep.complementarity = rep.complementarity.max(lambda[g] * (have - f).abs() / s);
    }
    rep
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerOutcome {
    pub power: Grid<f64>,
    pub solution: PowerSolution,
}

/// eMBB power step: `weight[i][c]` is the bandwidth times the unpunctured
/// fraction, `floors[i]` the rate floor in bits/s.
pub fn solve_power_embb(
    gain: &Grid<f64>,
    alpha: &Grid<bool>,
    weight: &Grid<f64>,
    eta: f64,
    floors: &[f64],
    budget: f64,
) -> Result<PowerOutcome> {
    let (u, n) = (alpha.rows(), alpha.cols());
    let mut index = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..u {
        for c in 0..n {
            if alpha.get(i, c) {
                index.push((i, c));
                pairs.push(PowerPair {
                    weight: weight.get(i, c),
                    gain: gain.get(i, c),
                    lower: 0.0,
                    group: Some(i),
                });
            }
        }
    }
    let pr = PowerProblem {
        pairs,
        eta,
        budget,
        floors: floors.to_vec(),
    };
    let solution = solve_power(&pr).map_err(|f| match f {
        PowerFailure::Floors(users) => Infeasible::EmbbFloors { users },
        PowerFailure::Budget { required, available } => Infeasible::Budget { required, available },
    })?;
    let mut power = Grid::filled(u, n, 0.0);
    for (&(i, c), &x) in index.iter().zip(&solution.p) {
        power.set(i, c, x);
    }
    Ok(PowerOutcome { power, solution })
}

/// URLLC power step. Data pairs (`β = 1`) use the dispersion-shifted rate
/// `share (log2(1 + g p) − κ)`, so floors move up by `share κ` per data RB.
/// Sensing pairs (`ρ = 1`) carry the beampattern lower bound `sense_lower`.
#[allow(clippy::too_many_arguments)]
pub fn solve_power_urllc(
    gain: &Grid<f64>,
    beta: &Grid<bool>,
    rho: &Grid<bool>,
    sense_lower: &[f64],
    share: f64,
    kappa: f64,
    eta: f64,
    floors: &[f64],
    budget: f64,
) -> Result<PowerOutcome> {
    let (u, n) = (beta.rows(), beta.cols());
    let mut index = Vec::new();
    let mut pairs = Vec::new();
    let mut shifted = floors.to_vec();
    for j in 0..u {
        for c in 0..n {
            let (b, r) = (beta.get(j, c), rho.get(j, c));
            if !(b || r) {
                continue;
            }
            index.push((j, c));
            pairs.push(PowerPair {
                weight: if b { share } else { 0.0 },
                gain: if b { gain.get(j, c) } else { 0.0 },
                lower: if r { sense_lower[j] } else { 0.0 },
                group: b.then_some(j),
            });
            if b && floors[j] > 0.0 {
                shifted[j] += share * kappa;
            }
        }
    }
    let pr = PowerProblem {
        pairs,
        eta,
        budget,
        floors: shifted,
    };
    let solution = solve_power(&pr).map_err(|f| match f {
        PowerFailure::Floors(users) => Infeasible::Urllc {
            violated: vec![ConstraintKind::Reliability, ConstraintKind::Delay],
            users,
        },
        PowerFailure::Budget { required, available } => Infeasible::Budget { required, available },
    })?;
    let mut power = Grid::filled(u, n, 0.0);
    for (&(j, c), &x) in index.iter().zip(&solution.p) {
        power.set(j, c, x);
    }
    Ok(PowerOutcome { power, solution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(w: f64, g: f64) -> PowerPair {
        PowerPair {
            weight: w,
            gain: g,
            lower: 0.0,
            group: None,
        }
    }

    #[test]
    fn scalar_water_filling() {
        let (b, eta, g) = (180e3, 2e5, 40.0);
        let pr = PowerProblem {
            pairs: vec![pair(b, g)],
            eta,
            budget: 100.0,
            floors: vec![],
        };
        let s = solve_power(&pr).unwrap();
        let want = b / (eta * LN_2) - 1.0 / g;
        assert!((s.p[0] - want).abs() < 1e-12 * want);
        assert_eq!(s.mu, 0.0);
        assert!(s.kkt.max() < 1e-8);
    }

    #[test]
    fn dead_channel_gets_nothing() {
        let pr = PowerProblem {
            pairs: vec![pair(1.0, 0.0), pair(1.0, 3.0)],
            eta: 0.1,
            budget: 1.0,
            floors: vec![],
        };
        let s = solve_power(&pr).unwrap();
        assert_eq!(s.p[0], 0.0);
        assert!(s.p[1] > 0.0);
    }

    #[test]
    fn zero_price_saturates_budget() {
        let pr = PowerProblem {
            pairs: vec![pair(1.0, 1.0), pair(1.0, 50.0), pair(1.0, 0.01)],
            eta: 0.0,
            budget: 2.0,
            floors: vec![],
        };
        let s = solve_power(&pr).unwrap();
        let total: f64 = s.p.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
        assert!(s.p[1] > s.p[0] && s.p[2] == 0.0);
        assert!(s.kkt.max() < 1e-8, "{:?}", s.kkt);
    }

    #[test]
    fn lower_bound_alone_binds() {
        let pr = PowerProblem {
            pairs: vec![PowerPair {
                weight: 0.0,
                gain: 0.0,
                lower: 3e-7,
                group: None,
            }],
            eta: 1e6,
            budget: 1.0,
            floors: vec![],
        };
        let s = solve_power(&pr).unwrap();
        assert_eq!(s.p[0], 3e-7);
    }

    #[test]
    fn floors_and_budget_failures() {
        let pr = PowerProblem {
            pairs: vec![PowerPair {
                group: Some(0),
                ..pair(1.0, 1.0)
            }],
            eta: 1.0,
            budget: 1.0,
            floors: vec![3.0],
        };
        // log2(1 + p) ≥ 3 needs p = 7.
        match solve_power(&pr) {
            Err(PowerFailure::Budget { required, available }) => {
                assert!((required - 7.0).abs() < 1e-12);
                assert_eq!(available, 1.0);
            }
            other => panic!("{other:?}"),
        }
        let dead = PowerProblem {
            pairs: vec![PowerPair {
                group: Some(0),
                ..pair(1.0, 0.0)
            }],
            ..pr
        };
        assert_eq!(solve_power(&dead), Err(PowerFailure::Floors(vec![0])));
    }

    #[test]
    fn random_instances_certify() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut solved = 0;
        for _ in 0..200 {
            let groups = rng.gen_range(1..4);
            let pairs: Vec<PowerPair> = (0..rng.gen_range(1..8))
                .map(|_| PowerPair {
                    weight: rng.gen_range(1e4..2e5),
                    gain: rng.gen_range(0.0..100.0),
                    lower: if rng.gen_bool(0.2) { rng.gen_range(0.0..0.05) } else { 0.0 },
                    group: Some(rng.gen_range(0..groups)),
                })
                .collect();
            let pr = PowerProblem {
                pairs,
                eta: rng.gen_range(0.0..1e6),
                budget: rng.gen_range(0.1..5.0),
                floors: (0..groups).map(|_| rng.gen_range(0.0..3e5)).collect(),
            };
            if let Ok(s) = solve_power(&pr) {
                solved += 1;
                assert!(s.kkt.max() < 1e-8, "{:?} {:?}", s.kkt, pr);
            }
        }
        assert!(solved > 50);
    }

    #[test]
    fn permutation_invariant() {
        let a = vec![pair(2.0, 1.0), pair(1.0, 7.0), pair(3.0, 0.5)];
        let mut b = a.clone();
        b.reverse();
        let s = |pairs| {
            solve_power(&PowerProblem {
                pairs,
                eta: 0.3,
                budget: 2.0,
                floors: vec![],
            })
            .unwrap()
            .p
        };
        let (pa, mut pb) = (s(a), s(b));
        pb.reverse();
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_noise_doubles_floor_power() {
        // With the floor binding and no price, p = (2^(F/w) − 1)/g.
        let run = |g: f64| {
            let beta = Grid::filled(1, 1, true);
            let rho = Grid::filled(1, 1, false);
            solve_power_urllc(&Grid::filled(1, 1, g), &beta, &rho, &[0.0], 1.0, 0.5, 1e12, &[2.0], 100.0)
                .unwrap()
                .power
                .get(0, 0)
        };
        let (a, b) = (run(8.0), run(4.0));
        assert!((b / a - 2.0).abs() < 1e-9);
        assert!((a - (2f64.powf(2.5) - 1.0) / 8.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_urllc_is_typed() {
        let beta = Grid::filled(1, 1, true);
        let rho = Grid::filled(1, 1, false);
        let e = solve_power_urllc(&Grid::filled(1, 1, 0.0), &beta, &rho, &[0.0], 1.0, 0.5, 1.0, &[2.0], 1.0);
        assert!(matches!(e, Err(Error::Infeasible(Infeasible::Urllc { .. }))));
    }
}
