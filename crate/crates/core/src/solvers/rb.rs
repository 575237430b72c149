//! Binary RB assignment.
//!
//! Both services reduce to choosing one option per RB: "unused", or a user
//! (eMBB), or a (data user, sensed target) combination (URLLC). Options
//! consume shared capacities (power budget, one detection per target,
//! eMBB puncturing slack) and contribute to per-user rate floors.
//! [`solve_columns`] runs depth-first branch-and-bound on that structure and
//! falls back to greedy construction plus single-RB swaps on large instances.
//! [`brute_force_embb`] and [`brute_force_urllc`] enumerate raw binary maps
//! and exist as independent test oracles.

use crate::allocation::Grid;
use crate::error::{ConstraintKind, Error, Infeasible, Result};
use crate::rates::fbl_rate_with_penalty;

const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RbOption {
    pub value: f64,
    /// `(capacity index, amount)`.
    pub uses: Vec<(usize, f64)>,
    /// `(floor index, amount)`.
    pub covers: Vec<(usize, f64)>,
}

impl RbOption {
    pub fn none() -> Self {
        RbOption {
            value: 0.0,
            uses: Vec::new(),
            covers: Vec::new(),
        }
    }
}

/// `options[c][0]` must be the empty option.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnProblem {
    pub options: Vec<Vec<RbOption>>,
    pub limits: Vec<f64>,
    pub floors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSolution {
    pub choice: Vec<usize>,
    pub objective: f64,
    pub exact: bool,
    pub nodes: u64,
}

fn within(used: f64, limit: f64) -> bool {
    used <= limit + FEAS_TOL * limit.abs().max(1.0)
}

fn reached(have: f64, floor: f64) -> bool {
    have >= floor - FEAS_TOL * floor.abs().max(1.0)
}

struct Search<'a> {
    p: &'a ColumnProblem,
    best_rest: Vec<f64>,
    cover_rest: Vec<Vec<f64>>,
    used: Vec<f64>,
    covered: Vec<f64>,
    choice: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    nodes: u64,
    node_limit: u64,
}

impl Search<'_> {
    fn dfs(&mut self, c: usize, value: f64) {
        self.nodes += 1;
        if self.nodes > self.node_limit {
            return;
        }
        let n = self.p.options.len();
        if c == n {
            if self.covered.iter().zip(&self.p.floors).all(|(&h, &f)| reached(h, f))
                && self.best.as_ref().is_none_or(|(b, _)| value > *b)
            {
                self.best = Some((value, self.choice.clone()));
            }
            return;
        }
        if let Some((b, _)) = &self.best {
            if value + self.best_rest[c] <= *b {
                return;
            }
        }
        for k in 0..self.p.floors.len() {
            if !reached(self.covered[k] + self.cover_rest[c][k], self.p.floors[k]) {
                return;
            }
        }
        for (o, opt) in self.p.options[c].iter().enumerate() {
            if !opt
                .uses
                .iter()
                .all(|&(r, a)| within(self.used[r] + a, self.p.limits[r]))
            {
                continue;
            }
            for &(r, a) in &opt.uses {
                self.used[r] += a;
            }
            for &(k, a) in &opt.covers {
                self.covered[k] += a;
            }
            self.choice[c] = o;
            self.dfs(c + 1, value + opt.value);
            for &(r, a) in &opt.uses {
                self.used[r] -= a;
            }
            for &(k, a) in &opt.covers {
                self.covered[k] -= a;
            }
            self.choice[c] = 0;
            if self.nodes > self.node_limit {
                return;
            }
        }
    }
}

fn evaluate(p: &ColumnProblem, choice: &[usize]) -> Option<f64> {
    let mut used = vec![0.0; p.limits.len()];
    let mut covered = vec![0.0; p.floors.len()];
    let mut value = 0.0;
    for (c, &o) in choice.iter().enumerate() {
        let opt = &p.options[c][o];
        value += opt.value;
        for &(r, a) in &opt.uses {
            used[r] += a;
        }
        for &(k, a) in &opt.covers {
            covered[k] += a;
        }
    }
    let ok = used.iter().zip(&p.limits).all(|(&u, &l)| within(u, l))
        && covered.iter().zip(&p.floors).all(|(&h, &f)| reached(h, f));
    ok.then_some(value)
}

/// Exact depth-first branch-and-bound. Returns `None` when no assignment
/// meets every floor and capacity, and `exact = false` when the node limit
/// cut the search short.
pub fn branch_and_bound(p: &ColumnProblem, node_limit: u64) -> Option<ColumnSolution> {
    let n = p.options.len();
    let mut best_rest = vec![0.0; n + 1];
    let mut cover_rest = vec![vec![0.0; p.floors.len()]; n + 1];
    for c in (0..n).rev() {
        let top = p.options[c].iter().map(|o| o.value).fold(0.0, f64::max);
        best_rest[c] = best_rest[c + 1] + top;
        let mut row = cover_rest[c + 1].clone();
        for (k, slot) in row.iter_mut().enumerate() {
            let m = p.options[c]
                .iter()
                .flat_map(|o| o.covers.iter().filter(|(kk, _)| *kk == k).map(|(_, a)| *a))
                .fold(0.0, f64::max);
            *slot += m;
        }
        cover_rest[c] = row;
    }
    let mut s = Search {
        p,
        best_rest,
        cover_rest,
        used: vec![0.0; p.limits.len()],
        covered: vec![0.0; p.floors.len()],
        choice: vec![0; n],
        best: None,
        nodes: 0,
        node_limit,
    };
    s.dfs(0, 0.0);
    let exact = s.nodes <= node_limit;
    let nodes = s.nodes;
    s.best.map(|(objective, choice)| ColumnSolution {
        choice,
        objective,
        exact,
        nodes,
    })
}

/// Floors first (largest remaining deficit reduction per RB), then the best
/// positive-value option per RB, then improving single-RB swaps.
pub fn greedy(p: &ColumnProblem) -> Option<ColumnSolution> {
    let n = p.options.len();
    let mut choice = vec![0usize; n];
    let mut used = vec![0.0; p.limits.len()];
    let mut covered = vec![0.0; p.floors.len()];
    let fits = |used: &[f64], opt: &RbOption| {
        opt.uses.iter().all(|&(r, a)| within(used[r] + a, p.limits[r]))
    };
    let apply = |used: &mut Vec<f64>, covered: &mut Vec<f64>, opt: &RbOption| {
        for &(r, a) in &opt.uses {
            used[r] += a;
        }
        for &(k, a) in &opt.covers {
            covered[k] += a;
        }
    };

    loop {
        let deficit: Vec<f64> = covered
            .iter()
            .zip(&p.floors)
            .map(|(&h, &f)| if reached(h, f) { 0.0 } else { f - h })
            .collect();
        if deficit.iter().all(|&d| d == 0.0) {
            break;
        }
        let mut pick: Option<(f64, f64, usize, usize)> = None;
        for c in (0..n).filter(|&c| choice[c] == 0) {
            for (o, opt) in p.options[c].iter().enumerate().skip(1) {
                if !fits(&used, opt) {
                    continue;
                }
                let gain: f64 = opt
                    .covers
                    .iter()
                    .map(|&(k, a)| a.min(deficit[k]) / p.floors[k].max(f64::MIN_POSITIVE))
                    .sum();
                if gain <= 0.0 {
                    continue;
                }
                let key = (gain, opt.value);
                if pick.is_none_or(|(g, v, _, _)| key.0 > g || (key.0 == g && key.1 > v)) {
                    pick = Some((gain, opt.value, c, o));
                }
            }
        }
        let (_, _, c, o) = pick?;
        choice[c] = o;
        apply(&mut used, &mut covered, &p.options[c][o]);
    }

    for c in 0..n {
        if choice[c] != 0 {
            continue;
        }
        let mut best = (0.0, 0usize);
        for (o, opt) in p.options[c].iter().enumerate().skip(1) {
            if opt.value > best.0 && fits(&used, opt) {
                best = (opt.value, o);
            }
        }
        if best.1 != 0 {
            choice[c] = best.1;
            apply(&mut used, &mut covered, &p.options[c][best.1]);
        }
    }

    let mut objective = evaluate(p, &choice)?;
    let mut improved = true;
    let mut rounds = 0;
    while improved && rounds < 50 {
        improved = false;
        rounds += 1;
        for c in 0..n {
            let current = choice[c];
            for o in 0..p.options[c].len() {
                if o == current {
                    continue;
                }
                choice[c] = o;
                match evaluate(p, &choice) {
                    Some(v) if v > objective + 1e-12 * objective.abs().max(1.0) => {
                        objective = v;
                        improved = true;
                        break;
                    }
                    _ => choice[c] = current,
                }
            }
        }
    }
    Some(ColumnSolution {
        choice,
        objective,
        exact: false,
        nodes: 0,
    })
}

/// Exact search up to `exact_vars` binary variables, heuristic beyond.
pub fn solve_columns(p: &ColumnProblem, binary_vars: usize, exact_vars: usize, node_limit: u64) -> Option<ColumnSolution> {
    if binary_vars <= exact_vars {
        match branch_and_bound(p, node_limit) {
            Some(s) if s.exact => return Some(s),
            Some(s) => {
                let g = greedy(p);
                return match g {
                    Some(g) if g.objective > s.objective => Some(ColumnSolution { nodes: s.nodes, ..g }),
                    _ => Some(s),
                };
            }
            None if node_limit_hit(p, node_limit) => return greedy(p),
            None => return None,
        }
    }
    greedy(p)
}

fn node_limit_hit(p: &ColumnProblem, node_limit: u64) -> bool {
    let leaves: f64 = p.options.iter().map(|o| o.len() as f64).product();
    leaves > node_limit as f64
}

/// Largest exact instance size, counted in binary variables.
pub const EXACT_VARS: usize = 64;
pub const NODE_LIMIT: u64 = 2_000_000;

/// eMBB RB subproblem with powers and phases held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbbRbProblem {
    /// SNR per watt, `|hᴴθ|²/σ²`.
    pub gain: Grid<f64>,
    /// Candidate power per (user, RB).
    pub power: Grid<f64>,
    /// Bandwidth times the remaining (unpunctured) fraction.
    pub bandwidth: f64,
    pub eta: f64,
    pub floors: Vec<f64>,
    pub budget: f64,
}

impl EmbbRbProblem {
    pub fn rate(&self, i: usize, c: usize) -> f64 {
        self.bandwidth * (1.0 + self.gain.get(i, c) * self.power.get(i, c)).log2()
    }

    fn objective(&self, alpha: &Grid<bool>) -> Option<f64> {
        let (u, n) = (self.gain.rows(), self.gain.cols());
        let mut value = 0.0;
        let mut power = 0.0;
        let mut rates = vec![0.0; u];
        for c in 0..n {
            if alpha.col_count(c) > 1 {
                return None;
            }
            for i in 0..u {
                if alpha.get(i, c) {
                    let r = self.rate(i, c);
                    rates[i] += r;
                    power += self.power.get(i, c);
                    value += r - self.eta * self.power.get(i, c);
                }
            }
        }
        let ok = within(power, self.budget) && rates.iter().zip(&self.floors).all(|(&r, &f)| reached(r, f));
        ok.then_some(value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbOutcome<A> {
    pub assignment: A,
    pub objective: f64,
    pub exact: bool,
    pub nodes: u64,
}

pub fn solve_rb_embb(p: &EmbbRbProblem) -> Result<RbOutcome<Grid<bool>>> {
    let (u, n) = (p.gain.rows(), p.gain.cols());
    let unreachable: Vec<usize> = (0..u)
        .filter(|&i| {
            let best: f64 = (0..n).map(|c| p.rate(i, c)).sum();
            !reached(best, p.floors[i])
        })
        .collect();
    if !unreachable.is_empty() {
        return Err(Infeasible::EmbbFloors { users: unreachable }.into());
    }
    let options = (0..n)
        .map(|c| {
            std::iter::once(RbOption::none())
                .chain((0..u).map(|i| RbOption {
                    value: p.rate(i, c) - p.eta * p.power.get(i, c),
                    uses: vec![(0, p.power.get(i, c))],
                    covers: vec![(i, p.rate(i, c))],
                }))
                .collect()
        })
        .collect();
    let problem = ColumnProblem {
        options,
        limits: vec![p.budget],
        floors: p.floors.clone(),
    };
    let sol = solve_columns(&problem, u * n, EXACT_VARS, NODE_LIMIT).ok_or_else(|| {
        Error::from(Infeasible::EmbbFloors {
            users: (0..u).filter(|&i| p.floors[i] > 0.0).collect(),
        })
    })?;
    let alpha = Grid::from_fn(u, n, |i, c| sol.choice[c] == i + 1);
    Ok(RbOutcome {
        assignment: alpha,
        objective: sol.objective,
        exact: sol.exact,
        nodes: sol.nodes,
    })
}

/// URLLC/sensing RB subproblem for one mini-slot, powers and phases fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct UrllcRbProblem {
    /// Data SNR per watt.
    pub gain: Grid<f64>,
    /// Candidate data power per (user, RB).
    pub power: Grid<f64>,
    /// `|a_kᴴ θ_j|²`: beam of user `j` toward target `k`, `cross.get(j, k)`.
    pub cross: Grid<f64>,
    /// `Γ_th υ_k²`.
    pub sense_need: Vec<f64>,
    pub share: f64,
    pub kappa: f64,
    pub eta: f64,
    pub v: f64,
    /// `U_k δ_k`.
    pub reward: Vec<f64>,
    /// Users with pending packets; only these may receive data RBs.
    pub eligible: Vec<bool>,
    pub floors: Vec<f64>,
    /// Per RB: the eMBB user occupying it and the rate lost if punctured.
    pub puncture: Vec<Option<(usize, f64)>>,
    /// Per eMBB user: rate that may still be lost this mini-slot.
    pub slack: Vec<f64>,
    pub sensing: bool,
    pub budget: f64,
}

/// Decisions on one RB.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RbPick {
    pub data: Option<usize>,
    pub sense: Option<usize>,
}

impl UrllcRbProblem {
    pub fn users(&self) -> usize {
        self.gain.rows()
    }

    pub fn rbs(&self) -> usize {
        self.gain.cols()
    }

    pub fn rate_at(&self, j: usize, c: usize, p: f64) -> f64 {
        fbl_rate_with_penalty(self.gain.get(j, c) * p, self.share, self.kappa)
    }

    /// Minimum own-beam power meeting the beampattern threshold for target `k`.
    pub fn sense_power(&self, k: usize) -> Option<f64> {
        let x = self.cross.get(k, k);
        (x > 0.0).then(|| self.sense_need[k] / x * (1.0 + 1e-9))
    }

    /// Per-user powers implied by a pick: `(user, power)` for each active user.
    pub fn pick_powers(&self, c: usize, pick: RbPick) -> Option<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        match (pick.data, pick.sense) {
            (None, None) => {}
            (Some(j), None) => out.push((j, self.power.get(j, c))),
            (None, Some(k)) => out.push((k, self.sense_power(k)?)),
            (Some(j), Some(k)) if j == k => out.push((j, self.power.get(j, c).max(self.sense_power(k)?))),
            (Some(j), Some(k)) => {
                out.push((j, self.power.get(j, c)));
                out.push((k, self.sense_power(k)?));
            }
        }
        Some(out)
    }

    fn enumerate_picks(&self, c: usize) -> Vec<RbPick> {
        let u = self.users();
        let data: Vec<Option<usize>> = std::iter::once(None)
            .chain((0..u).filter(|&j| self.eligible[j]).map(Some))
            .collect();
        let sense: Vec<Option<usize>> = if self.sensing {
            std::iter::once(None).chain((0..u).map(Some)).collect()
        } else {
            vec![None]
        };
        let mut picks = Vec::new();
        for &d in &data {
            for &s in &sense {
                let pick = RbPick { data: d, sense: s };
                if self.pick_powers(c, pick).is_some() {
                    picks.push(pick);
                }
            }
        }
        picks
    }

    fn pick_option(&self, c: usize, pick: RbPick) -> RbOption {
        let u = self.users();
        let powers = self.pick_powers(c, pick).expect("enumerated picks have powers");
        let total: f64 = powers.iter().map(|(_, p)| p).sum();
        let mut value = -self.v * self.eta * total;
        let mut uses = vec![(0, total)];
        let mut covers = Vec::new();
        if let Some(j) = pick.data {
            let p = powers.iter().find(|(q, _)| *q == j).map(|x| x.1).unwrap_or(0.0);
            let r = self.rate_at(j, c, p);
            value += self.v * r;
            covers.push((j, r));
            if let Some((e, loss)) = self.puncture[c] {
                uses.push((1 + u + e, loss));
            }
        }
        if let Some(k) = pick.sense {
            value += self.reward[k];
            uses.push((1 + k, 1.0));
        }
        RbOption { value, uses, covers }
    }

    /// Exact objective of explicit binary maps, or `None` if any constraint fails.
    pub fn objective(&self, beta: &Grid<bool>, rho: &Grid<bool>) -> Option<f64> {
        let (u, n) = (self.users(), self.rbs());
        let mut value = 0.0;
        let mut power = 0.0;
        let mut rates = vec![0.0; u];
        let mut lost = vec![0.0; self.slack.len()];
        for j in 0..u {
            if rho.row_count(j) > 1 {
                return None;
            }
        }
        for c in 0..n {
            if beta.col_count(c) > 1 || rho.col_count(c) > 1 {
                return None;
            }
            let pick = RbPick {
                data: beta.owner(c),
                sense: rho.owner(c),
            };
            if pick.data.is_some_and(|j| !self.eligible[j]) || (pick.sense.is_some() && !self.sensing) {
                return None;
            }
            let powers = self.pick_powers(c, pick)?;
            // Beampattern check through the full effective covariance.
            if let Some(k) = pick.sense {
                let gain: f64 = powers.iter().map(|&(j, p)| p * self.cross.get(j, k)).sum();
                if gain < self.sense_need[k] {
                    return None;
                }
            }
            for &(_, p) in &powers {
                power += p;
            }
            if let Some(j) = pick.data {
                let p = powers.iter().find(|(q, _)| *q == j).map(|x| x.1).unwrap_or(0.0);
                let r = self.rate_at(j, c, p);
                rates[j] += r;
                value += self.v * r;
                if let Some((e, loss)) = self.puncture[c] {
                    lost[e] += loss;
                }
            }
            if let Some(k) = pick.sense {
                value += self.reward[k];
            }
        }
        value -= self.v * self.eta * power;
        let ok = within(power, self.budget)
            && rates.iter().zip(&self.floors).all(|(&r, &f)| reached(r, f))
            && lost.iter().zip(&self.slack).all(|(&l, &s)| within(l, s));
        ok.then_some(value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UrllcMaps {
    pub beta: Grid<bool>,
    pub rho: Grid<bool>,
    pub z: Grid<bool>,
    /// Power each active user radiates on each RB.
    pub power: Grid<f64>,
}

pub fn solve_rb_urllc(p: &UrllcRbProblem) -> Result<RbOutcome<UrllcMaps>> {
    let (u, n) = (p.users(), p.rbs());
    let picks: Vec<Vec<RbPick>> = (0..n).map(|c| p.enumerate_picks(c)).collect();
    let options: Vec<Vec<RbOption>> = picks
        .iter()
        .enumerate()
        .map(|(c, ps)| ps.iter().map(|&pk| p.pick_option(c, pk)).collect())
        .collect();
    let unreachable: Vec<usize> = (0..u)
        .filter(|&j| {
            let best: f64 = options
                .iter()
                .map(|opts| {
                    opts.iter()
                        .flat_map(|o| o.covers.iter().filter(|(k, _)| *k == j).map(|(_, a)| *a))
                        .fold(0.0, f64::max)
                })
                .sum();
            p.floors[j] > 0.0 && !reached(best, p.floors[j])
        })
        .collect();
    if !unreachable.is_empty() {
        return Err(Infeasible::Urllc {
            violated: vec![ConstraintKind::Reliability, ConstraintKind::Delay],
            users: unreachable,
        }
        .into());
    }
    let mut limits = vec![p.budget];
    limits.extend(std::iter::repeat_n(1.0, u));
    limits.extend(p.slack.iter().copied());
    let problem = ColumnProblem {
        options,
        limits,
        floors: p.floors.clone(),
    };
    let sol = solve_columns(&problem, 2 * u * n, 2 * EXACT_VARS, NODE_LIMIT).ok_or_else(|| {
        Error::from(Infeasible::Urllc {
            violated: vec![ConstraintKind::Reliability, ConstraintKind::Delay, ConstraintKind::EmbbRateFloor],
            users: (0..u).filter(|&j| p.floors[j] > 0.0).collect(),
        })
    })?;
    let mut maps = UrllcMaps {
        beta: Grid::filled(u, n, false),
        rho: Grid::filled(u, n, false),
        z: Grid::filled(u, n, false),
        power: Grid::filled(u, n, 0.0),
    };
    for c in 0..n {
        let pick = picks[c][sol.choice[c]];
        if let Some(j) = pick.data {
            maps.beta.set(j, c, true);
        }
        if let Some(k) = pick.sense {
            maps.rho.set(k, c, true);
        }
        for (j, pw) in p.pick_powers(c, pick).unwrap_or_default() {
            maps.power.set(j, c, pw);
        }
    }
    maps.z = Grid::from_fn(u, n, |j, c| maps.beta.get(j, c) && maps.rho.get(j, c));
    Ok(RbOutcome {
        assignment: maps,
        objective: sol.objective,
        exact: sol.exact,
        nodes: sol.nodes,
    })
}

/// Largest number of binary variables the exhaustive oracles accept.
pub const BRUTE_FORCE_VARS: usize = 20;

fn bits_to_grid(bits: u64, rows: usize, cols: usize) -> Grid<bool> {
    Grid::from_fn(rows, cols, |i, c| bits >> (i * cols + c) & 1 == 1)
}

/// Exhaustive optimum over every binary `α`. `None` objective when nothing is feasible.
pub fn brute_force_embb(p: &EmbbRbProblem) -> Result<Option<(f64, Grid<bool>)>> {
    let (u, n) = (p.gain.rows(), p.gain.cols());
    if u * n > BRUTE_FORCE_VARS {
        return Err(Error::TooLarge(u * n));
    }
    let mut best: Option<(f64, Grid<bool>)> = None;
    for bits in 0..(1u64 << (u * n)) {
        let alpha = bits_to_grid(bits, u, n);
        if let Some(v) = p.objective(&alpha) {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, alpha));
            }
        }
    }
    Ok(best)
}

/// Exhaustive optimum over every binary `(β, ρ)` pair with `z = β ρ`.
pub fn brute_force_urllc(p: &UrllcRbProblem) -> Result<Option<(f64, Grid<bool>, Grid<bool>)>> {
    let (u, n) = (p.users(), p.rbs());
    if 2 * u * n > BRUTE_FORCE_VARS {
        return Err(Error::TooLarge(2 * u * n));
    }
    let mut best: Option<(f64, Grid<bool>, Grid<bool>)> = None;
    for bb in 0..(1u64 << (u * n)) {
        let beta = bits_to_grid(bb, u, n);
        for rb in 0..(1u64 << (u * n)) {
            let rho = bits_to_grid(rb, u, n);
            if let Some(v) = p.objective(&beta, &rho) {
                if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
                    best = Some((v, beta.clone(), rho));
                }
            }
        }
    }
    Ok(best)
}
