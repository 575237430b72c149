//! Acceptance criteria at desk scale. Prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simisac::allocation::{puncture_fraction, Grid};
use simisac::aoi::{aoi_next, dpp_weight, drift_bound, AoiState, VirtualQueues};
use simisac::harness::{run_experiment, ExperimentOutput, ExperimentSpec, Sweep};
use simisac::rates::fbl_rate;
use simisac::scenario::ScenarioConfig;
use simisac::scheduler::{run_episode, Baseline};
use simisac::sim_physics::{CMatrix, CVector, PropagationMatrices, SimPhases, C64};
use simisac::solvers::phases::{evaluate, gradient, GainFloor, PhaseObjective, Probe, RateFloor, RateTerm};
use simisac::solvers::power::{solve_power_embb, solve_power_urllc};
use simisac::solvers::rb::{brute_force_embb, brute_force_urllc, solve_rb_embb, solve_rb_urllc, EmbbRbProblem, UrllcRbProblem};

const SEEDS: u64 = 30;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn seeds() -> Vec<u64> {
    (0..SEEDS).collect()
}

fn embb_rb_instance(rng: &mut ChaCha8Rng, u: usize, n: usize) -> EmbbRbProblem {
    EmbbRbProblem {
        gain: Grid::from_fn(u, n, |_, _| rng.gen_range(0.1..50.0)),
        power: Grid::from_fn(u, n, |_, _| rng.gen_range(0.05..1.0)),
        bandwidth: 180e3,
        eta: rng.gen_range(0.0..4e5),
        floors: (0..u).map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..4e5) } else { 0.0 }).collect(),
        budget: rng.gen_range(0.5..3.0),
    }
}

fn urllc_rb_instance(rng: &mut ChaCha8Rng, u: usize, n: usize) -> UrllcRbProblem {
    let eligible: Vec<bool> = (0..u).map(|_| rng.gen_bool(0.7)).collect();
    UrllcRbProblem {
        gain: Grid::from_fn(u, n, |_, _| rng.gen_range(1.0..200.0)),
        power: Grid::from_fn(u, n, |_, _| rng.gen_range(0.05..1.0)),
        cross: Grid::from_fn(u, u, |_, _| rng.gen_range(0.0..1e-3)),
        sense_need: (0..u).map(|_| rng.gen_range(1e-6..1e-4)).collect(),
        share: 180e3 / 3.0,
        kappa: 0.9,
        eta: rng.gen_range(0.0..1e5),
        v: rng.gen_range(0.0..1e-3),
        reward: (0..u).map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..20.0) } else { 0.0 }).collect(),
        floors: eligible
            .iter()
            .map(|&e| if e && rng.gen_bool(0.4) { rng.gen_range(0.0..1e5) } else { 0.0 })
            .collect(),
        eligible,
        puncture: (0..n).map(|c| (c % 2 == 0).then(|| (0, rng.gen_range(0.0..5e4)))).collect(),
        slack: vec![rng.gen_range(0.0..8e4)],
        sensing: true,
        budget: rng.gen_range(0.3..2.0),
    }
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checked = 0;
    let mut mismatches = Vec::new();
    let shapes = [(2, 8), (4, 4), (2, 5), (3, 3)];
    for k in 0..50 {
        let (u, n) = shapes[k % 2];
        let p = embb_rb_instance(&mut rng, u, n);
        let ok = match (solve_rb_embb(&p), brute_force_embb(&p).expect("within oracle size")) {
            (Ok(out), Some((v, _))) => out.exact && close(out.objective, v, 1e-9),
            (Err(_), None) => true,
            _ => false,
        };
        checked += 1;
        if !ok {
            mismatches.push(format!("embb#{k}"));
        }
    }
    for k in 0..50 {
        let (u, n) = shapes[2 + k % 2];
        let p = urllc_rb_instance(&mut rng, u, n);
        let ok = match (solve_rb_urllc(&p), brute_force_urllc(&p).expect("within oracle size")) {
            (Ok(out), Some((v, _, _))) => out.exact && close(out.objective, v, 1e-9),
            (Err(_), None) => true,
            _ => false,
        };
        checked += 1;
        if !ok {
            mismatches.push(format!("urllc#{k}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        mismatches.is_empty() && secs < 60.0,
        format!("{checked} instances, mismatches {mismatches:?}, {secs:.2} s"),
    )
}

/// Best objective over a grid of step `h` on `[0, cap]^k`, or `None` if no
/// grid point is feasible.
fn grid_best(k: usize, cap: f64, feasible: impl Fn(&[f64]) -> bool, value: impl Fn(&[f64]) -> f64) -> Option<f64> {
    let steps = 1000;
    let h = cap / steps as f64;
    let mut best: Option<f64> = None;
    let mut p = vec![0.0; k];
    let total = (steps + 1usize).pow(k as u32);
    for idx in 0..total {
        let mut rest = idx;
        for x in p.iter_mut() {
            *x = (rest % (steps + 1)) as f64 * h;
            rest /= steps + 1;
        }
        if p.iter().sum::<f64>() > cap * (1.0 + 1e-12) || !feasible(&p) {
            continue;
        }
        let v = value(&p);
        if best.is_none_or(|b| v > b) {
            best = Some(v);
        }
    }
    best
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let b = 180e3;
    let mut worst_kkt: f64 = 0.0;
    let mut certified = 0;
    let mut attempts = 0;
    while certified < 200 && attempts < 2000 {
        attempts += 1;
        let (u, n) = (rng.gen_range(1..4), rng.gen_range(1..7));
        let gain = Grid::from_fn(u, n, |_, _| rng.gen_range(0.5..500.0));
        let budget = rng.gen_range(0.2..5.0);
        let eta = rng.gen_range(0.0..5e5);
        let floors: Vec<f64> = (0..u).map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..3e5) } else { 0.0 }).collect();
        let alloc = Grid::from_fn(u, n, |i, c| c % u == i);
        let kkt = if certified % 2 == 0 {
            solve_power_embb(&gain, &alloc, &Grid::filled(u, n, b), eta, &floors, budget)
                .map(|o| o.solution.kkt.max())
        } else {
            let rho = Grid::from_fn(u, n, |_, _| rng.gen_bool(0.3));
            let lower: Vec<f64> = (0..u).map(|_| rng.gen_range(0.0..0.05)).collect();
            solve_power_urllc(&gain, &alloc, &rho, &lower, b / 3.0, 0.9, eta, &floors, budget).map(|o| o.solution.kkt.max())
        };
        if let Ok(k) = kkt {
            worst_kkt = worst_kkt.max(k);
            certified += 1;
        }
    }

    let mut worst_rel: f64 = 0.0;
    for case in 0..40 {
        let k = 1 + case % 2;
        let cap = rng.gen_range(0.5..4.0);
        let gain = Grid::from_fn(1, k, |_, _| rng.gen_range(1.0..400.0));
        let eta = rng.gen_range(1e4..5e5);
        let floor = if case % 4 < 2 { 0.0 } else { rng.gen_range(1e5..4e5) };
        let alloc = Grid::filled(1, k, true);
        let g: Vec<f64> = (0..k).map(|c| gain.get(0, c)).collect();
        let (solver, oracle) = if case % 8 < 4 {
            let rate = |p: &[f64]| p.iter().zip(&g).map(|(&x, &gg)| b * (1.0 + gg * x).log2()).sum::<f64>();
            let out = solve_power_embb(&gain, &alloc, &Grid::filled(1, k, b), eta, &[floor], cap);
            let oracle = grid_best(k, cap, |p| rate(p) >= floor, |p| rate(p) - eta * p.iter().sum::<f64>());
            (out.ok().map(|o| o.solution.objective), oracle)
        } else {
            let share = b / 3.0;
            let kappa = 0.9;
            let floor = floor / 3.0;
            let rate = |p: &[f64]| p.iter().zip(&g).map(|(&x, &gg)| share * (1.0 + gg * x).log2()).sum::<f64>();
            let fbl = |p: &[f64]| p.iter().zip(&g).map(|(&x, &gg)| share * ((1.0 + gg * x).log2() - kappa)).sum::<f64>();
            let out = solve_power_urllc(&gain, &alloc, &Grid::filled(1, k, false), &[0.0], share, kappa, eta, &[floor], cap);
            let oracle = grid_best(k, cap, |p| fbl(p) >= floor, |p| rate(p) - eta * p.iter().sum::<f64>());
            (out.ok().map(|o| o.solution.objective), oracle)
        };
        match (solver, oracle) {
            (Some(s), Some(o)) => worst_rel = worst_rel.max((s - o).abs() / s.abs().max(o.abs()).max(1.0)),
            (None, None) => {}
            (s, o) => return verdict(false, format!("case {case}: solver {s:?} vs grid {o:?}")),
        }
    }
    verdict(
        certified >= 100 && worst_kkt < 1e-8 && worst_rel < 1e-4,
        format!("{certified} certified, worst KKT residual {worst_kkt:.2e}, worst grid gap {worst_rel:.2e}"),
    )
}

fn random_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    let mut coords = 0;
    for inst in 0..20 {
        let layers = 1 + inst % 3;
        let m = [4, 9, 16][inst % 3];
        let n = 1 + inst % 4;
        let mut psi = vec![CMatrix::from_fn(m, n, |_, _| random_c(&mut rng))];
        for _ in 1..layers {
            psi.push(CMatrix::from_fn(m, m, |_, _| random_c(&mut rng)));
        }
        let prop = PropagationMatrices { psi };
        let probes: Vec<Probe> = (0..6)
            .map(|k| Probe {
                u: CVector::from_fn(m, |_, _| random_c(&mut rng)),
                column: k % n,
            })
            .collect();
        let obj = PhaseObjective {
            probes,
            rates: (0..4)
                .map(|k| RateTerm {
                    probe: k,
                    weight: rng.gen_range(1.0..3.0),
                    scale: rng.gen_range(0.01..0.5),
                    kappa: if k == 3 { 0.1 } else { 0.0 },
                    coef: 1.0,
                    group: Some(k % 2),
                })
                .collect(),
            floors: vec![RateFloor { base: 0.0, target: 50.0 }, RateFloor { base: 1.0, target: 0.0 }],
            gains: vec![GainFloor {
                terms: vec![(4, 0.5), (5, 1.0)],
                need: 1e4,
                scale: 2.0,
            }],
            penalty: 3.0,
        };
        let ph = SimPhases::random(layers, m, &mut rng);
        let (_, g) = gradient(&obj, &ph, &prop);
        for _ in 0..10 {
            let (l, k) = (rng.gen_range(0..layers), rng.gen_range(0..m));
            let h = 1e-6;
            let (mut a, mut b) = (ph.clone(), ph.clone());
            a.theta[l][k] += h;
            b.theta[l][k] -= h;
            let fd = (evaluate(&obj, &a, &prop) - evaluate(&obj, &b, &prop)) / (2.0 * h);
            worst = worst.max((fd - g[l][k]).abs() / fd.abs().max(g[l][k].abs()).max(1e-9));
            coords += 1;
        }
    }
    verdict(worst < 1e-4, format!("{coords} coordinates, worst relative error {worst:.2e}"))
}

fn desk_run(cfg: &ScenarioConfig, baselines: Vec<Baseline>, sweep: Option<&str>) -> ExperimentOutput {
    let mut spec = ExperimentSpec::new(cfg.clone(), baselines, seeds());
    spec.sweep = sweep.map(|s| Sweep::parse(s).expect("valid sweep"));
    run_experiment(&spec).expect("valid experiment")
}

fn criterion_4(all: &ExperimentOutput, cfg: &ScenarioConfig) -> Verdict {
    let mut solves = 0;
    let mut bad = Vec::new();
    let mut max_iters = 0;
    for ct in &all.traces {
        let t = &ct.trace;
        let solves_iter = t
            .slots
            .iter()
            .map(|s| (&s.diag, s.power, format!("slot {}", s.t)))
            .chain(t.minislots.iter().map(|m| (&m.diag, m.urllc_power, format!("mini {}.{}", m.t, m.tau))));
        for (d, power, at) in solves_iter {
            solves += 1;
            max_iters = max_iters.max(d.iterations);
            let etas: Vec<f64> = d.dinkelbach.iter().map(|s| s.eta).collect();
            let ok = etas.windows(2).all(|w| w[1] >= w[0])
                && d.converged
                && d.iterations <= cfg.j_max
                && d.gap < cfg.tol_dinkelbach * power.max(1.0);
            if !ok {
                bad.push(format!("{} seed {} {at}", t.baseline, t.seed));
            }
        }
    }
    verdict(
        bad.is_empty(),
        format!("{solves} solves, max {max_iters} iterations, failing {:?}", &bad[..bad.len().min(5)]),
    )
}

fn criterion_5_6() -> (Verdict, Verdict) {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let targets = 4;
    let aoi_max = [1u32, 2, 3, 4];
    let mut state = AoiState::new(targets);
    let mut queues = VirtualQueues::new(targets);
    let (mut delta, mut u) = (vec![0u32; targets], vec![0.0f64; targets]);
    let mut mismatches = 0;
    let mut drift_fail = 0;
    let mut worst_slack = f64::INFINITY;
    for step in 0..1000 {
        let detected: Vec<u8> = (0..targets).map(|_| u8::from(rng.gen_bool(0.35))).collect();
        for k in 0..targets {
            let w = dpp_weight(&queues, &state, k, aoi_max[k]);
            let d = f64::from(delta[k]);
            if (w.reward - u[k] * d).abs() > 1e-12 * (u[k] * d).abs().max(1.0)
                || (w.constant - u[k] * (1.0 + d - f64::from(aoi_max[k]))).abs() > 1e-12 * u[k].max(1.0) * (1.0 + d)
            {
                mismatches += 1;
            }
            if aoi_next(delta[k], detected[k] == 1) != delta[k] + 1 - u32::from(detected[k]) * delta[k] {
                mismatches += 1;
            }
        }
        state = state.step(&detected, step % 3 == 0).expect("valid flags");
        let next_q = queues.update(&state.delta, &aoi_max);
        for k in 0..targets {
            let d_new = if detected[k] == 1 { 1 } else { delta[k] + 1 };
            let u_new = (u[k] + f64::from(d_new) - f64::from(aoi_max[k])).max(0.0);
            if state.delta[k] != d_new || (next_q.u[k] - u_new).abs() > 1e-12 * u_new.max(1.0) {
                mismatches += 1;
            }
            let lhs = 0.5 * (u_new * u_new - u[k] * u[k]);
            let rhs = drift_bound(u[k], d_new, aoi_max[k]);
            worst_slack = worst_slack.min(rhs - lhs);
            if lhs > rhs + 1e-12 * rhs.abs().max(1.0) {
                drift_fail += 1;
            }
            delta[k] = d_new;
            u[k] = u_new;
        }
        queues = next_q;
    }
    (
        verdict(mismatches == 0, format!("1000 steps x {targets} targets, {mismatches} mismatches")),
        verdict(drift_fail == 0, format!("{drift_fail} violations, smallest slack {worst_slack:.3e}")),
    )
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut fbl_fail = 0;
    for _ in 0..10_000 {
        let gamma = 10f64.powf(rng.gen_range(-4.0..6.0));
        let tb = rng.gen_range(1.0..5000.0_f64).floor();
        let (bw, minislots, eps) = (180e3, rng.gen_range(1..8), 10f64.powf(rng.gen_range(-9.0..-1.0)));
        let r = fbl_rate(gamma, bw, minislots, tb, eps).expect("valid arguments");
        if r > bw / minislots as f64 * (1.0 + gamma).log2() {
            fbl_fail += 1;
        }
    }
    let mut recount_fail = 0;
    for _ in 0..100 {
        let (ue, uu, n, i) = (rng.gen_range(1..4), rng.gen_range(1..4), rng.gen_range(1..8), rng.gen_range(1..6));
        let owner: Vec<Option<usize>> = (0..n).map(|_| rng.gen_bool(0.7).then(|| rng.gen_range(0..ue))).collect();
        let alpha = Grid::from_fn(ue, n, |r, c| owner[c] == Some(r));
        let betas: Vec<Grid<bool>> = (0..rng.gen_range(0..=i))
            .map(|_| {
                let user: Vec<Option<usize>> = (0..n).map(|_| rng.gen_bool(0.4).then(|| rng.gen_range(0..uu))).collect();
                Grid::from_fn(uu, n, |j, c| user[c] == Some(j))
            })
            .collect();
        let eta = puncture_fraction(&alpha, &betas, i);
        for r in 0..ue {
            for c in 0..n {
                let mut hits = 0;
                for b in &betas {
                    for j in 0..uu {
                        if alpha.get(r, c) && b.get(j, c) {
                            hits += 1;
                        }
                    }
                }
                let want = 1.0 - hits as f64 / i as f64;
                if (eta.get(r, c) - want).abs() > 1e-12 {
                    recount_fail += 1;
                }
            }
        }
    }
    verdict(
        fbl_fail == 0 && recount_fail == 0,
        format!("FBL above Shannon {fbl_fail}/10000, puncture mismatches {recount_fail}"),
    )
}

fn objective_of(out: &ExperimentOutput, value: &str, baseline: Baseline) -> Vec<f64> {
    let mut v: Vec<(u64, f64)> = out
        .traces
        .iter()
        .filter(|c| c.sweep_value == value && c.trace.baseline == baseline)
        .map(|c| (c.trace.seed, c.trace.summary.objective))
        .collect();
    v.sort_by_key(|x| x.0);
    v.into_iter().map(|x| x.1).collect()
}

fn list(v: &[f64], f: impl Fn(f64) -> String) -> String {
    v.iter().map(|&x| f(x)).collect::<Vec<_>>().join(", ")
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_8(all: &ExperimentOutput) -> Verdict {
    let p = objective_of(all, "-", Baseline::Proposed);
    let r = objective_of(all, "-", Baseline::RandomSim);
    let n = objective_of(all, "-", Baseline::NoSim);
    let wins = p.iter().zip(&n).filter(|(a, b)| a > b).count();
    let ok = p.len() == SEEDS as usize && mean(&p) >= mean(&r) && wins as f64 >= 0.9 * p.len() as f64;
    verdict(
        ok,
        format!(
            "mean EE proposed {:.3e}, random-sim {:.3e}, no-sim {:.3e}; proposed > no-sim on {wins}/{}",
            mean(&p),
            mean(&r),
            mean(&n),
            p.len()
        ),
    )
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks; NaN when either side is constant.
fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn criterion_9(cfg: &ScenarioConfig) -> Verdict {
    let values = [1e-3, 1e-2, 1e-1, 1.0];
    let sweep = format!("V={}", values.map(|v| v.to_string()).join(","));
    let out = desk_run(cfg, vec![Baseline::Proposed], Some(&sweep));
    let ee: Vec<f64> = out.table.rows.iter().map(|r| r.mean_ee).collect();
    let aoi: Vec<f64> = out.table.rows.iter().map(|r| r.mean_aoi).collect();
    let (s_ee, s_aoi) = (spearman(&values, &ee), spearman(&values, &aoi));
    verdict(
        s_ee >= 0.8 && s_aoi >= 0.8,
        format!("V {values:?}: mean EE [{}] (rho {s_ee:.2}), mean AoI [{}] (rho {s_aoi:.2})",
            list(&ee, |x| format!("{x:.3e}")),
            list(&aoi, |x| format!("{x:.4}"))
        ),
    )
}

fn criterion_10(cfg: &ScenarioConfig) -> Verdict {
    let watts = [1.0, 2.0, 5.0, 10.0];
    let per: Vec<Vec<f64>> = watts
        .iter()
        .map(|&w| {
            let c = ScenarioConfig { p_max: w, ..cfg.clone() };
            objective_of(&desk_run(&c, vec![Baseline::Proposed], None), "-", Baseline::Proposed)
        })
        .collect();
    let monotone = (0..SEEDS as usize)
        .filter(|&s| per.windows(2).all(|w| w[1][s] >= w[0][s]))
        .count();
    let means: Vec<f64> = per.iter().map(|v| mean(v)).collect();
    verdict(
        monotone as f64 >= 0.9 * SEEDS as f64,
        format!("P_max {watts:?} W: non-decreasing on {monotone}/{SEEDS} seeds, mean EE [{}]",
            list(&means, |x| format!("{x:.3e}"))
        ),
    )
}

fn criterion_11(cfg: &ScenarioConfig) -> Verdict {
    let start = Instant::now();
    let a = run_episode(cfg, Baseline::Proposed, 11).expect("episode runs");
    let secs = start.elapsed().as_secs_f64();
    let b = run_episode(cfg, Baseline::Proposed, 11).expect("episode runs");
    let same = a.to_text() == b.to_text();
    let c = run_episode(cfg, Baseline::Proposed, 12).expect("episode runs");
    verdict(
        same && secs < 30.0 && c.to_text() != a.to_text(),
        format!("identical traces {same}, single episode {secs:.3} s"),
    )
}

fn main() -> ExitCode {
    let cfg = ScenarioConfig::desk_scale();
    let all = desk_run(&cfg, Baseline::ALL.to_vec(), None);
    let (c5, c6) = criterion_5_6();
    let results = [
        ("ILP oracle equivalence", criterion_1()),
        ("power KKT certificates", criterion_2()),
        ("phase gradient correctness", criterion_3()),
        ("Dinkelbach monotonicity and termination", criterion_4(&all, &cfg)),
        ("AoI and queue recursion oracle", c5),
        ("drift bound", c6),
        ("FBL dominance and puncture recount", criterion_7()),
        ("trend: SIM benefit", criterion_8(&all)),
        ("trend: V trade-off", criterion_9(&cfg)),
        ("trend: power budget", criterion_10(&cfg)),
        ("end-to-end determinism", criterion_11(&cfg)),
    ];
    let mut failed = 0;
    for (k, (name, v)) in results.iter().enumerate() {
        println!("{} criterion {}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, k + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {}/{} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
