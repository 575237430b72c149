//! Mini-slot URLLC and sensing decisions under the drift-plus-penalty
//! objective `V (Σ r − η P) + Σ_k U_k δ_k ρ_k`.
//!
//! The eMBB plan of the slot is fixed. Puncturing an eMBB RB costs its owner
//! one `I`-th of that RB's slot rate, and the owner's look-ahead rate (what
//! it has received so far, plus this mini-slot, plus the remaining
//! mini-slots assumed unpunctured at the slot phases) must stay above
//! `min(r_min, look-ahead without puncturing)`.

use std::f64::consts::LN_2;

use super::{SlotSolution, Setup};
use crate::allocation::Grid;
use crate::aoi::{dpp_weight, AoiState, VirtualQueues};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::rates::{e2e_delay, fbl_rate_with_penalty};
use crate::sim_physics::SimPhases;
use crate::solvers::dinkelbach::dinkelbach_drive;
use crate::solvers::phases::{solve_phases, GainFloor, PhaseObjective, Probe, RateFloor, RateTerm};
use crate::solvers::power::solve_power_urllc;
use crate::solvers::rb::{solve_rb_urllc, UrllcRbProblem};
use crate::trace::{Diagnostics, Fallback, Residuals};

const FEAS_TOL: f64 = 1e-9;
const SCALE_STEPS: usize = 40;
const RESTORE_ROUNDS: usize = 3;

pub struct MinislotInput<'a> {
    pub channels: &'a ChannelSet,
    pub slot: &'a SlotSolution,
    pub tau: usize,
    /// eMBB rate already delivered in earlier mini-slots of this slot.
    pub delivered: &'a [f64],
    pub arrivals: &'a [u32],
    pub aoi: &'a AoiState,
    pub queues: &'a VirtualQueues,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinislotSolution {
    pub beta: Grid<bool>,
    pub rho: Grid<bool>,
    pub z: Grid<bool>,
    pub p_u: Grid<f64>,
    pub phases: SimPhases,
    pub urllc_rate: Vec<f64>,
    /// eMBB rate delivered in this mini-slot.
    pub embb_rate: Vec<f64>,
    pub power: f64,
    /// `EE^u[t,τ]`, zero when nothing radiates.
    pub ee: f64,
    /// Drift-plus-penalty objective at the final Dinkelbach factor.
    pub dpp: f64,
    pub delay: Vec<Option<f64>>,
    pub residuals: Residuals,
    pub diag: Diagnostics,
    pub fallback: Option<Fallback>,
}

#[derive(Debug, Clone)]
struct Point {
    beta: Grid<bool>,
    rho: Grid<bool>,
    p: Grid<f64>,
    phases: SimPhases,
    rates: Vec<f64>,
    rate_sum: f64,
    power: f64,
    embb_now: Vec<f64>,
    beampattern: Vec<Option<f64>>,
    reward: f64,
    kkt: f64,
    exact: bool,
    nodes: u64,
}

struct Problem<'a> {
    setup: &'a Setup,
    input: &'a MinislotInput<'a>,
    start: SimPhases,
    eligible: Vec<bool>,
    floors: Vec<f64>,
    reward: Vec<f64>,
    budget: f64,
    embb_base: Vec<f64>,
    embb_floor: Vec<f64>,
}

struct Links {
    urllc: Grid<f64>,
    embb: Grid<f64>,
    cross: Grid<f64>,
}

impl<'a> Problem<'a> {
    fn new(setup: &'a Setup, input: &'a MinislotInput<'a>, scale: f64, start: &SimPhases) -> Self {
        let cfg = &setup.cfg;
        let i_count = cfg.minislots_per_slot as f64;
        let eligible: Vec<bool> = input.arrivals.iter().map(|&a| a > 0).collect();
        let floors = (0..cfg.num_urllc)
            .map(|j| if eligible[j] { scale * setup.urllc_floor(j) } else { 0.0 })
            .collect();
        let reward = (0..cfg.num_urllc)
            .map(|k| dpp_weight(input.queues, input.aoi, k, cfg.aoi_max.get(k)).reward)
            .collect();
        let remaining = (cfg.minislots_per_slot - input.tau - 1) as f64 / i_count;
        let embb_base: Vec<f64> = (0..cfg.num_embb)
            .map(|i| input.delivered[i] + remaining * input.slot.planned_rate[i])
            .collect();
        let embb_floor = (0..cfg.num_embb)
            .map(|i| cfg.r_min.get(i).min(embb_base[i] + input.slot.planned_rate[i] / i_count))
            .collect();
        Problem {
            setup,
            input,
            start: start.clone(),
            eligible,
            floors,
            reward,
            budget: cfg.p_max - input.slot.p_e.sum(),
            embb_base,
            embb_floor,
        }
    }

    fn v(&self) -> f64 {
        self.setup.cfg.lyapunov_v
    }

    fn links(&self, phases: &SimPhases) -> Result<Links> {
        let theta = self.setup.transfer(phases)?;
        Ok(Links {
            urllc: self.setup.urllc_gains(theta.as_ref(), self.input.channels),
            embb: self.setup.embb_gains(theta.as_ref(), self.input.channels),
            cross: self.setup.cross(theta.as_ref()),
        })
    }

    /// eMBB rate of RB `c` for its owner in one mini-slot, unpunctured.
    fn embb_rb_rate(&self, links: &Links, i: usize, c: usize) -> f64 {
        let cfg = &self.setup.cfg;
        cfg.rb_bandwidth * (1.0 + links.embb.get(i, c) * self.input.slot.p_e.get(i, c)).log2()
            / cfg.minislots_per_slot as f64
    }

    fn point(&self, beta: Grid<bool>, rho: Grid<bool>, p: Grid<f64>, phases: SimPhases, links: &Links) -> Point {
        let cfg = &self.setup.cfg;
        let (u, n) = (cfg.num_urllc, cfg.num_rbs);
        let alpha = &self.input.slot.alpha;
        let rates: Vec<f64> = (0..u)
            .map(|j| {
                (0..n)
                    .filter(|&c| beta.get(j, c))
                    .map(|c| fbl_rate_with_penalty(links.urllc.get(j, c) * p.get(j, c), self.setup.share, self.setup.kappa))
                    .sum()
            })
            .collect();
        let mut power = 0.0;
        for j in 0..u {
            for c in 0..n {
                if beta.get(j, c) || rho.get(j, c) {
                    power += p.get(j, c);
                }
            }
        }
        let embb_now = (0..cfg.num_embb)
            .map(|i| {
                (0..n)
                    .filter(|&c| alpha.get(i, c) && beta.col_count(c) == 0)
                    .map(|c| self.embb_rb_rate(links, i, c))
                    .sum()
            })
            .collect();
        let beampattern = (0..u)
            .map(|k| {
                (0..n).find(|&c| rho.get(k, c)).map(|c| {
                    let gain: f64 = (0..u)
                        .filter(|&j| beta.get(j, c) || rho.get(j, c))
                        .map(|j| p.get(j, c) * links.cross.get(j, k))
                        .sum();
                    gain / self.setup.sense_need[k]
                })
            })
            .collect::<Vec<_>>();
        let reward = (0..u)
            .filter(|&k| rho.row_count(k) > 0)
            .map(|k| self.reward[k])
            .sum();
        Point {
            rate_sum: rates.iter().sum(),
            rates,
            power,
            embb_now,
            beampattern,
            reward,
            beta,
            rho,
            p,
            phases,
            kkt: 0.0,
            exact: true,
            nodes: 0,
        }
    }

    fn feasible(&self, pt: &Point) -> bool {
        let near = |have: f64, need: f64| have >= need - FEAS_TOL * need.abs().max(1.0);
        pt.power <= self.budget * (1.0 + FEAS_TOL) + FEAS_TOL
            && pt.rates.iter().zip(&self.floors).all(|(&r, &f)| near(r, f))
            && (0..self.embb_floor.len()).all(|i| near(self.embb_base[i] + pt.embb_now[i], self.embb_floor[i]))
            && pt.beampattern.iter().flatten().all(|&x| x >= 1.0 - FEAS_TOL)
    }

    fn merit(&self, pt: &Point, eta: f64) -> f64 {
        self.v() * (pt.rate_sum - eta * pt.power) + pt.reward
    }

    fn rb_problem(&self, links: &Links, power: Grid<f64>, eta: f64) -> UrllcRbProblem {
        let cfg = &self.setup.cfg;
        let alpha = &self.input.slot.alpha;
        let puncture = (0..cfg.num_rbs)
            .map(|c| alpha.owner(c).map(|i| (i, self.embb_rb_rate(links, i, c))))
            .collect();
        let slack = (0..cfg.num_embb)
            .map(|i| {
                let full: f64 = (0..cfg.num_rbs)
                    .filter(|&c| alpha.get(i, c))
                    .map(|c| self.embb_rb_rate(links, i, c))
                    .sum();
                (self.embb_base[i] + full - self.embb_floor[i]).max(0.0)
            })
            .collect();
        UrllcRbProblem {
            gain: links.urllc.clone(),
            power,
            cross: links.cross.clone(),
            sense_need: self.setup.sense_need.clone(),
            share: self.setup.share,
            kappa: self.setup.kappa,
            eta,
            v: self.v(),
            reward: self.reward.clone(),
            eligible: self.eligible.clone(),
            floors: self.floors.clone(),
            puncture,
            slack,
            sensing: self.setup.sensing(),
            budget: self.budget.max(0.0),
        }
    }

    fn sense_lower(&self, rb: &UrllcRbProblem) -> Vec<f64> {
        (0..rb.users()).map(|k| rb.sense_power(k).unwrap_or(f64::INFINITY)).collect()
    }

    /// Power step on fixed maps; `None` if the KKT solve fails.
    fn repower(&self, links: &Links, rb: &UrllcRbProblem, beta: &Grid<bool>, rho: &Grid<bool>, phases: &SimPhases, eta: f64) -> Option<Point> {
        let pw = solve_power_urllc(
            &links.urllc,
            beta,
            rho,
            &self.sense_lower(rb),
            self.setup.share,
            self.setup.kappa,
            eta,
            &self.floors,
            self.budget.max(0.0),
        )
        .ok()?;
        let mut pt = self.point(beta.clone(), rho.clone(), pw.power, phases.clone(), links);
        pt.kkt = pw.solution.kkt.max();
        Some(pt)
    }

    fn better(&self, a: Point, b: Option<Point>, eta: f64) -> Point {
        match b {
            Some(b) if self.feasible(&b) && (!self.feasible(&a) || self.merit(&b, eta) >= self.merit(&a, eta)) => b,
            _ => a,
        }
    }

    /// RB step on candidate powers followed by the KKT power step.
    fn rb_power(&self, eta: f64, phases: &SimPhases) -> Result<Point> {
        let cfg = &self.setup.cfg;
        let (u, n) = (cfg.num_urllc, cfg.num_rbs);
        let links = self.links(phases)?;
        let budget = self.budget.max(0.0);
        let mut candidates = Vec::new();
        if eta > 0.0 {
            candidates.push(Grid::from_fn(u, n, |j, c| {
                let g = links.urllc.get(j, c);
                if g > 0.0 {
                    (self.setup.share / (eta * LN_2) - 1.0 / g).clamp(0.0, budget)
                } else {
                    0.0
                }
            }));
        }
        candidates.push(Grid::filled(u, n, budget / n as f64));
        candidates.push(Grid::filled(u, n, budget));
        let mut last = None;
        for cand in candidates {
            let rb = self.rb_problem(&links, cand, eta);
            match solve_rb_urllc(&rb) {
                Ok(out) => {
                    let maps = out.assignment;
                    let mut pt = self.point(maps.beta.clone(), maps.rho.clone(), maps.power, phases.clone(), &links);
                    let re = self.repower(&links, &rb, &maps.beta, &maps.rho, phases, eta);
                    pt = self.better(pt, re, eta);
                    pt.exact = out.exact;
                    pt.nodes = out.nodes;
                    if self.feasible(&pt) {
                        return Ok(pt);
                    }
                }
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| Error::Domain("no feasible URLLC candidate".into())))
    }

    fn phase_objective(&self, pt: &Point) -> PhaseObjective {
        let setup = self.setup;
        let cfg = &setup.cfg;
        let (ue, uu, n) = (cfg.num_embb, cfg.num_urllc, cfg.num_rbs);
        let ch = self.input.channels;
        let mut probes = Vec::new();
        let mut rates = Vec::new();
        for j in 0..uu {
            for c in 0..n {
                if pt.beta.get(j, c) {
                    rates.push(RateTerm {
                        probe: probes.len(),
                        weight: setup.share,
                        scale: pt.p.get(j, c) / cfg.noise_power,
                        kappa: setup.kappa,
                        coef: self.v(),
                        group: Some(j),
                    });
                    probes.push(Probe {
                        u: ch.get(ue + j, c).clone(),
                        column: setup.column(j),
                    });
                }
            }
        }
        let alpha = &self.input.slot.alpha;
        for i in 0..ue {
            for c in 0..n {
                if alpha.get(i, c) && pt.beta.col_count(c) == 0 {
                    rates.push(RateTerm {
                        probe: probes.len(),
                        weight: cfg.rb_bandwidth / cfg.minislots_per_slot as f64,
                        scale: self.input.slot.p_e.get(i, c) / cfg.noise_power,
                        kappa: 0.0,
                        coef: 0.0,
                        group: Some(uu + i),
                    });
                    probes.push(Probe {
                        u: ch.get(i, c).clone(),
                        column: setup.column(i),
                    });
                }
            }
        }
        let mut floors: Vec<RateFloor> = self.floors.iter().map(|&f| RateFloor { base: 0.0, target: f }).collect();
        floors.extend((0..ue).map(|i| RateFloor {
            base: self.embb_base[i],
            target: self.embb_floor[i],
        }));
        let mut gains = Vec::new();
        for k in 0..uu {
            if let Some(c) = (0..n).find(|&c| pt.rho.get(k, c)) {
                let mut terms = Vec::new();
                for j in (0..uu).filter(|&j| pt.beta.get(j, c) || pt.rho.get(j, c)) {
                    terms.push((probes.len(), pt.p.get(j, c)));
                    probes.push(Probe {
                        u: setup.steering[k].clone(),
                        column: setup.column(j),
                    });
                }
                gains.push(GainFloor {
                    terms,
                    need: setup.sense_need[k],
                    scale: cfg.rb_bandwidth,
                });
            }
        }
        PhaseObjective {
            probes,
            rates,
            floors,
            gains,
            penalty: cfg.penalty,
        }
    }

    fn pass(&self, eta: f64, cur: Option<&Point>) -> Result<Point> {
        let phases = cur.map_or_else(|| self.start.clone(), |c| c.phases.clone());
        let fresh = match (self.rb_power(eta, &phases), cur) {
            (Ok(pt), _) => Some(pt),
            (Err(e), None) => return Err(e),
            (Err(_), Some(_)) => None,
        };
        let mut pt = match cur {
            None => fresh.expect("fresh point exists without an incumbent"),
            Some(c) => {
                let links = self.links(&phases)?;
                let rb = self.rb_problem(&links, c.p.clone(), eta);
                let mut keep = self.better(c.clone(), self.repower(&links, &rb, &c.beta, &c.rho, &phases, eta), eta);
                keep.exact = c.exact;
                keep.nodes = c.nodes;
                self.better(keep, fresh, eta)
            }
        };
        let active = pt.beta.any() || pt.rho.any();
        if self.setup.optimizes_phases() && active {
            let prop = self.setup.propagation().expect("phase optimization needs a metasurface");
            let cfg = &self.setup.cfg;
            let obj = self.phase_objective(&pt);
            let out = solve_phases(&obj, &pt.phases, prop, cfg.pga_step, cfg.pga_iters, cfg.tol_ao);
            let links = self.links(&out.phases)?;
            let mut trial = self.point(pt.beta.clone(), pt.rho.clone(), pt.p.clone(), out.phases, &links);
            trial.kkt = pt.kkt;
            trial.exact = pt.exact;
            trial.nodes = pt.nodes;
            if self.feasible(&trial) && self.merit(&trial, eta) >= self.merit(&pt, eta) {
                pt = trial;
            }
        }
        Ok(pt)
    }

    fn inner(&self, eta: f64, inc: Option<&Point>) -> Result<(Point, Vec<f64>)> {
        let cfg = &self.setup.cfg;
        let mut prev = inc.map_or(0.0, |c| self.merit(c, eta));
        let mut cur: Option<Point> = None;
        let mut history = Vec::new();
        for _ in 0..cfg.n_max.max(1) {
            let next = self.pass(eta, cur.as_ref().or(inc))?;
            let m = self.merit(&next, eta);
            history.push(m);
            cur = Some(next);
            if (m - prev).abs() < cfg.tol_ao * m.abs().max(1.0) {
                break;
            }
            prev = m;
        }
        Ok((cur.expect("at least one pass"), history))
    }

    fn solve(&self) -> Result<MinislotSolution> {
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
        let dpp = self.merit(&pt, out.eta);
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
        let residuals = Residuals {
            embb: (0..cfg.num_embb)
                .map(|i| self.embb_base[i] + pt.embb_now[i] - self.embb_floor[i])
                .collect(),
            urllc: (0..cfg.num_urllc)
                .map(|j| pt.rates[j] - if self.eligible[j] { self.setup.urllc_floor(j) } else { 0.0 })
                .collect(),
            beampattern: pt.beampattern.iter().map(|b| b.map(|x| x - 1.0)).collect(),
            budget: cfg.p_max - self.input.slot.p_e.sum() - pt.power,
        };
        let delay = (0..cfg.num_urllc)
            .map(|j| self.eligible[j].then(|| e2e_delay(pt.rates[j], cfg.packet_size.get(j), cfg.t_comp_max)))
            .collect();
        let z = Grid::from_fn(cfg.num_urllc, cfg.num_rbs, |j, c| pt.beta.get(j, c) && pt.rho.get(j, c));
        Ok(MinislotSolution {
            ee: if pt.power > 0.0 { pt.rate_sum / pt.power } else { 0.0 },
            dpp,
            power: pt.power,
            urllc_rate: pt.rates,
            embb_rate: pt.embb_now,
            p_u: pt.p,
            beta: pt.beta,
            rho: pt.rho,
            z,
            phases: pt.phases,
            delay,
            residuals,
            diag,
            fallback: None,
        })
    }
}

/// Solves one mini-slot, warm-starting the phases from the slot plan.
///
/// Infeasible URLLC floors are handled as in the slot solver: solve at the
/// largest feasible floor scale, retry the full floors from the resulting
/// phases, and flag the mini-slot if they never become reachable.
pub fn run_urllc_minislot(setup: &Setup, input: &MinislotInput<'_>) -> Result<MinislotSolution> {
    let mut phases = input.slot.phases.clone();
    let mut violated = Vec::new();
    for round in 1..=RESTORE_ROUNDS {
        match Problem::new(setup, input, 1.0, &phases).solve() {
            Err(Error::Infeasible(inf)) if violated.is_empty() => violated = inf.constraints(),
            Err(Error::Infeasible(_)) => {}
            other => return other,
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..SCALE_STEPS {
            let mid = 0.5 * (lo + hi);
            if Problem::new(setup, input, mid, &phases).rb_power(0.0, &phases).is_ok() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut sol = Problem::new(setup, input, lo, &phases).solve()?;
        if round == RESTORE_ROUNDS || sol.phases == phases {
            sol.fallback = Some(Fallback { scale: lo, violated });
            return Ok(sol);
        }
        phases = sol.phases;
    }
    unreachable!("the last restoration round always returns")
}
