//! Slot-level eMBB planning: Dinkelbach outer loop around alternating
//! RB, power and phase steps.

use std::f64::consts::LN_2;

use super::Setup;
use crate::allocation::Grid;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::sim_physics::SimPhases;
use crate::solvers::dinkelbach::dinkelbach_drive;
use crate::solvers::phases::{solve_phases, PhaseObjective, Probe, RateFloor, RateTerm};
use crate::solvers::power::solve_power_embb;
use crate::solvers::rb::{solve_rb_embb, EmbbRbProblem};
use crate::trace::{Diagnostics, Fallback};

const FEAS_TOL: f64 = 1e-9;
const SCALE_STEPS: usize = 40;
const RESTORE_ROUNDS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SlotSolution {
    pub alpha: Grid<bool>,
    pub p_e: Grid<f64>,
    pub phases: SimPhases,
    /// Floors the plan was solved against, after any fallback scaling.
    pub floors: Vec<f64>,
    /// Unpunctured per-user rate at the slot phases.
    pub planned_rate: Vec<f64>,
    /// Planned `Σ r / P`.
    pub ee: f64,
    pub diag: Diagnostics,
    pub fallback: Option<Fallback>,
}

#[derive(Debug, Clone)]
struct Point {
    alpha: Grid<bool>,
    p: Grid<f64>,
    phases: SimPhases,
    rates: Vec<f64>,
    rate_sum: f64,
    power: f64,
    kkt: f64,
    exact: bool,
    nodes: u64,
}

impl Point {
    fn merit(&self, eta: f64) -> f64 {
        self.rate_sum - eta * self.power
    }
}

struct Problem<'a> {
    setup: &'a Setup,
    ch: &'a ChannelSet,
    start: &'a SimPhases,
    floors: Vec<f64>,
    budget: f64,
    phases_on: bool,
}

impl Problem<'_> {
    fn weight(&self) -> Grid<f64> {
        let cfg = &self.setup.cfg;
        Grid::filled(cfg.num_embb, cfg.num_rbs, cfg.rb_bandwidth)
    }

    fn gains(&self, phases: &SimPhases) -> Result<Grid<f64>> {
        Ok(self.setup.embb_gains(self.setup.transfer(phases)?.as_ref(), self.ch))
    }

    fn point(&self, alpha: Grid<bool>, p: Grid<f64>, phases: SimPhases, gain: &Grid<f64>) -> Point {
        let b = self.setup.cfg.rb_bandwidth;
        let rates: Vec<f64> = (0..alpha.rows())
            .map(|i| {
                (0..alpha.cols())
                    .filter(|&c| alpha.get(i, c))
                    .map(|c| b * (1.0 + gain.get(i, c) * p.get(i, c)).log2())
                    .sum()
            })
            .collect();
        let power = (0..alpha.rows())
            .flat_map(|i| (0..alpha.cols()).map(move |c| (i, c)))
            .filter(|&(i, c)| alpha.get(i, c))
            .map(|(i, c)| p.get(i, c))
            .sum();
        Point {
            rate_sum: rates.iter().sum(),
            rates,
            power,
            alpha,
            p,
            phases,
            kkt: 0.0,
            exact: true,
            nodes: 0,
        }
    }

    fn feasible(&self, pt: &Point) -> bool {
        pt.power <= self.budget * (1.0 + FEAS_TOL)
            && pt
                .rates
                .iter()
                .zip(&self.floors)
                .all(|(&r, &f)| r >= f - FEAS_TOL * f.max(1.0))
    }

    /// RB step on candidate powers followed by the KKT power step.
    fn rb_power(&self, gain: &Grid<f64>, eta: f64, phases: &SimPhases) -> Result<Point> {
        let cfg = &self.setup.cfg;
        let (u, n) = (cfg.num_embb, cfg.num_rbs);
        let b = cfg.rb_bandwidth;
        let mut candidates = Vec::new();
        if eta > 0.0 {
            candidates.push(Grid::from_fn(u, n, |i, c| {
                let g = gain.get(i, c);
                if g > 0.0 {
                    (b / (eta * LN_2) - 1.0 / g).clamp(0.0, self.budget)
                } else {
                    0.0
                }
            }));
        }
        candidates.push(Grid::filled(u, n, self.budget / n as f64));
        let mut last = None;
        for cand in candidates {
            let rb = solve_rb_embb(&EmbbRbProblem {
                gain: gain.clone(),
                power: cand,
                bandwidth: b,
                eta,
                floors: self.floors.clone(),
                budget: self.budget,
            });
            let rb = match rb {
                Ok(rb) => rb,
                Err(e) => {
                    last = Some(e);
                    continue;
                }
            };
            match solve_power_embb(gain, &rb.assignment, &self.weight(), eta, &self.floors, self.budget) {
                Ok(pw) => {
                    let mut pt = self.point(rb.assignment, pw.power, phases.clone(), gain);
                    pt.kkt = pw.solution.kkt.max();
                    pt.exact = rb.exact;
                    pt.nodes = rb.nodes;
                    return Ok(pt);
                }
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| Error::Domain("no candidate power".into())))
    }

    fn phase_objective(&self, pt: &Point) -> PhaseObjective {
        let cfg = &self.setup.cfg;
        let mut probes = Vec::new();
        let mut rates = Vec::new();
        for i in 0..cfg.num_embb {
            for c in 0..cfg.num_rbs {
                if pt.alpha.get(i, c) {
                    rates.push(RateTerm {
                        probe: probes.len(),
                        weight: cfg.rb_bandwidth,
                        scale: pt.p.get(i, c) / cfg.noise_power,
                        kappa: 0.0,
                        coef: 1.0,
                        group: Some(i),
                    });
                    probes.push(Probe {
                        u: self.ch.get(i, c).clone(),
                        column: self.setup.column(i),
                    });
                }
            }
        }
        PhaseObjective {
            probes,
            rates,
            floors: self.floors.iter().map(|&f| RateFloor { base: 0.0, target: f }).collect(),
            gains: Vec::new(),
            penalty: cfg.penalty,
        }
    }

    /// One AO pass: RB, power, phases, each accepted only if the subtractive
    /// objective does not drop.
    fn pass(&self, eta: f64, cur: Option<&Point>) -> Result<Point> {
        let phases = cur.map_or_else(|| self.start.clone(), |c| c.phases.clone());
        let gain = self.gains(&phases)?;
        let mut best = match (self.rb_power(&gain, eta, &phases), cur) {
            (Ok(pt), _) => Some(pt),
            (Err(e), None) => return Err(e),
            (Err(_), Some(_)) => None,
        };
        if let Some(c) = cur {
            let mut keep = c.clone();
            if let Ok(pw) = solve_power_embb(&gain, &c.alpha, &self.weight(), eta, &self.floors, self.budget) {
                let mut re = self.point(c.alpha.clone(), pw.power, phases.clone(), &gain);
                re.kkt = pw.solution.kkt.max();
                re.exact = c.exact;
                re.nodes = c.nodes;
                if self.feasible(&re) && re.merit(eta) >= keep.merit(eta) {
                    keep = re;
                }
            }
            best = match best {
                Some(b) if self.feasible(&b) && b.merit(eta) >= keep.merit(eta) => Some(b),
                _ => Some(keep),
            };
        }
        let mut pt = best.expect("either a fresh or an incumbent point exists");
        if self.phases_on && pt.alpha.any() {
            let prop = self.setup.propagation().expect("phase optimization needs a metasurface");
            let obj = self.phase_objective(&pt);
            let cfg = &self.setup.cfg;
            let out = solve_phases(&obj, &pt.phases, prop, cfg.pga_step, cfg.pga_iters, cfg.tol_ao);
            let g = self.gains(&out.phases)?;
            let mut trial = self.point(pt.alpha.clone(), pt.p.clone(), out.phases, &g);
            trial.kkt = pt.kkt;
            trial.exact = pt.exact;
            trial.nodes = pt.nodes;
            if self.feasible(&trial) && trial.merit(eta) >= pt.merit(eta) {
                pt = trial;
            }
        }
        Ok(pt)
    }

    /// AO passes at fixed `eta` until the subtractive objective settles.
    fn inner(&self, eta: f64, inc: Option<&Point>) -> Result<(Point, Vec<f64>)> {
        let cfg = &self.setup.cfg;
        let mut prev = inc.map_or(0.0, |c| c.merit(eta));
        let mut cur: Option<Point> = None;
        let mut history = Vec::new();
        for _ in 0..cfg.n_max.max(1) {
            let next = self.pass(eta, cur.as_ref().or(inc))?;
            let m = next.merit(eta);
            history.push(m);
            cur = Some(next);
            if (m - prev).abs() < cfg.tol_ao * m.abs().max(1.0) {
                break;
            }
            prev = m;
        }
        Ok((cur.expect("at least one pass"), history))
    }

    fn solve(&self) -> Result<SlotSolution> {
        let cfg = &self.setup.cfg;
        let mut ao = Vec::new();
        let mut exact = true;
        let mut nodes = 0;
        let out = dinkelbach_drive(
            |eta, inc| {
                let (pt, hist) = self.inner(eta, inc)?;
                ao.push(hist);
                exact &= pt.exact;
                nodes += pt.nodes;
                let (num, den) = (pt.rate_sum, pt.power);
                Ok((pt, num, den))
            },
            cfg.j_max,
            cfg.tol_dinkelbach,
        )?;
        let pt = out.solution;
        let diag = Diagnostics {
            iterations: out.iterations,
            converged: out.converged,
            gap: out.gap,
            dinkelbach: out.history,
            ao,
            rb_exact: exact,
            rb_nodes: nodes,
            kkt: pt.kkt,
        };
        Ok(SlotSolution {
            ee: if pt.power > 0.0 { pt.rate_sum / pt.power } else { 0.0 },
            alpha: pt.alpha,
            p_e: pt.p,
            phases: pt.phases,
            floors: self.floors.clone(),
            planned_rate: pt.rates,
            diag,
            fallback: None,
        })
    }
}

/// Plans the eMBB RBs, powers and phases of one slot, starting from `start`.
///
/// When the rate floors cannot be met from the current phases, the largest
/// common floor scale `s ∈ [0, 1]` that the RB and power steps can satisfy is
/// found by bisection and solved for, and the full floors are retried from the
/// phases that solve produced. After `RESTORE_ROUNDS` attempts, or once the
/// phases stop moving, the scaled solution is returned and flagged.
pub fn run_embb_slot(setup: &Setup, ch: &ChannelSet, start: &SimPhases) -> Result<SlotSolution> {
    fn problem<'a>(setup: &'a Setup, ch: &'a ChannelSet, scale: f64, phases: &'a SimPhases) -> Problem<'a> {
        Problem {
            setup,
            ch,
            start: phases,
            floors: setup.embb_floors().iter().map(|f| f * scale).collect(),
            budget: setup.slot_budget(),
            phases_on: setup.optimizes_phases(),
        }
    }
    let mut phases = start.clone();
    let mut violated = Vec::new();
    for round in 1..=RESTORE_ROUNDS {
        match problem(setup, ch, 1.0, &phases).solve() {
            Err(Error::Infeasible(inf)) if violated.is_empty() => violated = inf.constraints(),
            Err(Error::Infeasible(_)) => {}
            other => return other,
        }
        let gain = problem(setup, ch, 0.0, &phases).gains(&phases)?;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..SCALE_STEPS {
            let mid = 0.5 * (lo + hi);
            if problem(setup, ch, mid, &phases).rb_power(&gain, 0.0, &phases).is_ok() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut sol = problem(setup, ch, lo, &phases).solve()?;
        if round == RESTORE_ROUNDS || sol.phases == phases {
            sol.fallback = Some(Fallback { scale: lo, violated });
            return Ok(sol);
        }
        phases = sol.phases;
    }
    unreachable!("the last restoration round always returns")
}
