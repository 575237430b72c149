//! Episode records and their line-oriented text form.
//!
//! Every record is a single line: a tag (`episode`, `slot`, `mini`,
//! `summary`) followed by space-separated `key=value` fields in a fixed
//! order. Lists are `;`-separated, binary maps are rows of `0`/`1` joined by
//! `/`, real-valued maps are `;`-separated rows joined by `/`, and absent
//! values are written as `-`. Reals use the shortest exponent form that
//! round-trips.

use std::fmt::Write as _;

use crate::allocation::{AllocationState, Grid};
use crate::error::ConstraintKind;
use crate::scheduler::Baseline;
use crate::solvers::dinkelbach::DinkelbachStep;

/// Solver diagnostics for one slot or mini-slot solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub dinkelbach: Vec<DinkelbachStep>,
    pub iterations: usize,
    pub converged: bool,
    /// `|Σr − η P|` from the last subtractive solve, at the factor it used.
    pub gap: f64,
    /// Subtractive objective after each AO pass, grouped by Dinkelbach iteration.
    pub ao: Vec<Vec<f64>>,
    pub rb_exact: bool,
    pub rb_nodes: u64,
    pub kkt: f64,
}

/// Floors were scaled down to `scale` because the full problem was infeasible.
#[derive(Debug, Clone, PartialEq)]
pub struct Fallback {
    pub scale: f64,
    pub violated: Vec<ConstraintKind>,
}

/// Constraint slacks, non-negative when satisfied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Residuals {
    /// eMBB look-ahead rate minus its floor for this mini-slot.
    pub embb: Vec<f64>,
    /// URLLC rate minus the unscaled reliability/delay floor.
    pub urllc: Vec<f64>,
    /// Beampattern gain over threshold minus one, for sensed targets.
    pub beampattern: Vec<Option<f64>>,
    /// `P_max − P^e − P^u`.
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub t: usize,
    pub alpha: Grid<bool>,
    pub p_e: Grid<f64>,
    pub planned_rate: Vec<f64>,
    /// Rate delivered over the slot after puncturing.
    pub realized_rate: Vec<f64>,
    pub power: f64,
    /// Realized `EE^e[t]`.
    pub ee: f64,
    pub diag: Diagnostics,
    pub fallback: Option<Fallback>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinislotRecord {
    pub t: usize,
    pub tau: usize,
    pub arrivals: Vec<u32>,
    pub state: AllocationState,
    pub urllc_rate: Vec<f64>,
    /// eMBB rate delivered in this mini-slot, already divided by `I`.
    pub embb_rate: Vec<f64>,
    pub urllc_power: f64,
    pub ee: f64,
    pub delay: Vec<Option<f64>>,
    pub aoi: Vec<u32>,
    pub queues: Vec<f64>,
    pub residuals: Residuals,
    pub diag: Diagnostics,
    pub fallback: Option<Fallback>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    /// `(1/T) Σ_t EE^e[t] + (1/T) Σ_t Σ_τ EE^u[t,τ]`.
    pub objective: f64,
    pub mean_ee_embb: f64,
    pub mean_ee_urllc: f64,
    pub aoi: Vec<f64>,
    /// Mini-slots whose own solve or enclosing slot solve fell back.
    pub flagged: usize,
    pub minislots: usize,
    pub mean_backlog: f64,
}

impl EpisodeSummary {
    pub fn violation_rate(&self) -> f64 {
        if self.minislots == 0 {
            0.0
        } else {
            self.flagged as f64 / self.minislots as f64
        }
    }

    pub fn mean_aoi(&self) -> f64 {
        if self.aoi.is_empty() {
            0.0
        } else {
            self.aoi.iter().sum::<f64>() / self.aoi.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub baseline: Baseline,
    pub slots: Vec<SlotRecord>,
    pub minislots: Vec<MinislotRecord>,
    pub summary: EpisodeSummary,
}

pub(crate) fn real(x: f64) -> String {
    // Empty float sums produce −0.
    if x == 0.0 {
        return "0e0".into();
    }
    format!("{x:e}")
}

fn reals(v: &[f64]) -> String {
    if v.is_empty() {
        return "-".into();
    }
    v.iter().map(|&x| real(x)).collect::<Vec<_>>().join(";")
}

fn opt_reals(v: &[Option<f64>]) -> String {
    if v.is_empty() {
        return "-".into();
    }
    v.iter()
        .map(|x| x.map_or_else(|| "-".to_string(), real))
        .collect::<Vec<_>>()
        .join(";")
}

fn ints(v: &[u32]) -> String {
    if v.is_empty() {
        return "-".into();
    }
    v.iter().map(u32::to_string).collect::<Vec<_>>().join(";")
}

fn real_grid(g: &Grid<f64>) -> String {
    (0..g.rows()).map(|i| reals(g.row(i))).collect::<Vec<_>>().join("/")
}

fn bits(g: &Grid<bool>) -> String {
    if g.rows() == 0 {
        "-".into()
    } else {
        g.to_bits()
    }
}

fn fallback(f: &Option<Fallback>) -> String {
    match f {
        None => "-".into(),
        Some(f) => {
            let kinds: Vec<&str> = f.violated.iter().map(|k| k.label()).collect();
            format!("{}@{}", kinds.join("+"), real(f.scale))
        }
    }
}

fn diag(out: &mut String, d: &Diagnostics) {
    let etas: Vec<f64> = d.dinkelbach.iter().map(|s| s.eta).collect();
    let passes: Vec<u32> = d.ao.iter().map(|a| a.len() as u32).collect();
    let _ = write!(
        out,
        " dk_iters={} dk_converged={} dk_gap={} eta={} ao_passes={} rb_exact={} rb_nodes={} kkt={}",
        d.iterations,
        u8::from(d.converged),
        real(d.gap),
        reals(&etas),
        ints(&passes),
        u8::from(d.rb_exact),
        d.rb_nodes,
        real(d.kkt)
    );
}

impl SlotRecord {
    pub fn to_line(&self) -> String {
        let mut s = format!(
            "slot t={} alpha={} p_e={} planned={} realized={} power={} ee={}",
            self.t,
            bits(&self.alpha),
            real_grid(&self.p_e),
            reals(&self.planned_rate),
            reals(&self.realized_rate),
            real(self.power),
            real(self.ee)
        );
        diag(&mut s, &self.diag);
        let _ = write!(s, " fallback={}", fallback(&self.fallback));
        s
    }
}

impl MinislotRecord {
    pub fn to_line(&self) -> String {
        let r = &self.residuals;
        let mut s = format!(
            "mini t={} tau={} arrivals={} beta={} rho={} z={} p_u={} rate_u={} rate_e={} power_u={} ee_u={} delay={} aoi={} queues={} res_c1={} res_c23={} res_c5={} res_c10={}",
            self.t,
            self.tau,
            ints(&self.arrivals),
            bits(&self.state.beta),
            bits(&self.state.rho),
            bits(&self.state.z),
            real_grid(&self.state.p_u),
            reals(&self.urllc_rate),
            reals(&self.embb_rate),
            real(self.urllc_power),
            real(self.ee),
            opt_reals(&self.delay),
            ints(&self.aoi),
            reals(&self.queues),
            reals(&r.embb),
            reals(&r.urllc),
            opt_reals(&r.beampattern),
            real(r.budget)
        );
        diag(&mut s, &self.diag);
        let _ = write!(s, " fallback={}", fallback(&self.fallback));
        s
    }
}

impl EpisodeSummary {
    pub fn to_line(&self) -> String {
        format!(
            "summary objective={} ee_e={} ee_u={} aoi={} flagged={} minislots={} backlog={}",
            real(self.objective),
            real(self.mean_ee_embb),
            real(self.mean_ee_urllc),
            reals(&self.aoi),
            self.flagged,
            self.minislots,
            real(self.mean_backlog)
        )
    }
}

impl EpisodeTrace {
    /// Header, one line per slot, one per mini-slot (slot line first), then
    /// the summary. Ends with a newline.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "episode seed={} baseline={} slots={} minislots={}\n",
            self.seed,
            self.baseline,
            self.slots.len(),
            self.minislots.len()
        );
        for slot in &self.slots {
            out.push_str(&slot.to_line());
            out.push('\n');
            for m in self.minislots.iter().filter(|m| m.t == slot.t) {
                out.push_str(&m.to_line());
                out.push('\n');
            }
        }
        out.push_str(&self.summary.to_line());
        out.push('\n');
        out
    }
}
