//! Two-timescale loop: eMBB planning per slot, URLLC and sensing per
//! mini-slot, then AoI and virtual-queue updates after every mini-slot.

mod minislot;
mod slot;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::allocation::{AllocationState, Grid};
use crate::aoi::{average_aoi, AoiState, VirtualQueues};
use crate::channel::{build_correlation, path_loss, sample_channels, ChannelSet, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::rates::{channel_gain, delay_rate_floor, fbl_penalty, reliability_rate_floor};
use crate::scenario::{build_geometry, validate_config, Geometry, ScenarioConfig};
use crate::sim_physics::{assemble_transfer, build_propagation, steering_vector, CMatrix, CVector, PropagationMatrices, SimPhases};
use crate::trace::{EpisodeSummary, EpisodeTrace, MinislotRecord, SlotRecord};

pub use minislot::{run_urllc_minislot, MinislotInput, MinislotSolution};
pub use slot::{run_embb_slot, SlotSolution};

const GEOMETRY_STREAM: u64 = 0;
const CHANNEL_STREAM: u64 = 1;
const ARRIVAL_STREAM: u64 = 2;
const PHASE_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Baseline {
    Proposed,
    /// Fresh uniform phases every slot, never optimized.
    RandomSim,
    /// Direct N-antenna transmission without the metasurface; no sensing.
    NoSim,
    /// Sensing disabled.
    CommOnly,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [Baseline::Proposed, Baseline::RandomSim, Baseline::NoSim, Baseline::CommOnly];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Proposed => "proposed",
            Baseline::RandomSim => "random-sim",
            Baseline::NoSim => "no-sim",
            Baseline::CommOnly => "comm-only",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| format!("unknown baseline {s:?} (expected proposed, random-sim, no-sim or comm-only)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Link {
    Sim(PropagationMatrices),
    Direct,
}

/// Everything about an episode that stays fixed across slots.
#[derive(Debug, Clone)]
pub struct Setup {
    pub cfg: ScenarioConfig,
    pub baseline: Baseline,
    pub geometry: Geometry,
    pub link: Link,
    pub corr: CorrelationMatrix,
    /// Per user, eMBB users first.
    pub pathloss: Vec<f64>,
    /// Steering vector toward each URLLC user, which doubles as a sensing target.
    pub steering: Vec<CVector>,
    /// `Γ_th υ_k²` per target.
    pub sense_need: Vec<f64>,
    pub kappa: f64,
    /// `B / I`.
    pub share: f64,
    pub reliability_floor: Vec<f64>,
    pub delay_floor: Vec<f64>,
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl Setup {
    pub fn new(cfg: &ScenarioConfig, baseline: Baseline, seed: u64) -> Result<Setup> {
        let violations = validate_config(cfg);
        if !violations.is_empty() {
            return Err(Error::InvalidConfig(violations.iter().map(|v| v.to_string()).collect()));
        }
        let geometry = build_geometry(cfg, &mut stream_rng(seed, GEOMETRY_STREAM));
        let lambda = cfg.wavelength();
        let pathloss = geometry
            .users
            .iter()
            .map(|u| path_loss(u.distance, lambda, cfg.pathloss_exponent))
            .collect::<Result<Vec<_>>>()?;
        let (link, corr, steering) = if baseline == Baseline::NoSim {
            (Link::Direct, CorrelationMatrix::identity(cfg.num_antennas), Vec::new())
        } else {
            let prop = build_propagation(&geometry, cfg.atom_area())?;
            let steering = geometry
                .urllc()
                .map(|u| steering_vector(u.elevation, u.azimuth, cfg.atoms_x, cfg.atoms_z))
                .collect::<Result<Vec<_>>>()?;
            (Link::Sim(prop), build_correlation(&geometry, lambda), steering)
        };
        let sense_need = pathloss[cfg.num_embb..]
            .iter()
            .map(|u| cfg.beampattern_threshold * u * u)
            .collect();
        let mut reliability_floor = Vec::new();
        let mut delay_floor = Vec::new();
        for j in 0..cfg.num_urllc {
            let bits = cfg.packet_size.get(j);
            reliability_floor.push(reliability_rate_floor(bits, cfg.arrival_rate.get(j), cfg.reliability)?);
            delay_floor.push(delay_rate_floor(bits, cfg.t_max.get(j), cfg.t_comp_max));
        }
        Ok(Setup {
            kappa: fbl_penalty(f64::from(cfg.blocklength()), cfg.decode_err)?,
            share: cfg.rb_bandwidth / cfg.minislots_per_slot as f64,
            cfg: cfg.clone(),
            baseline,
            geometry,
            link,
            corr,
            pathloss,
            steering,
            sense_need,
            reliability_floor,
            delay_floor,
        })
    }

    pub fn sensing(&self) -> bool {
        matches!(self.link, Link::Sim(_)) && matches!(self.baseline, Baseline::Proposed | Baseline::RandomSim)
    }

    pub fn optimizes_phases(&self) -> bool {
        matches!(self.link, Link::Sim(_)) && matches!(self.baseline, Baseline::Proposed | Baseline::CommOnly)
    }

    pub fn propagation(&self) -> Option<&PropagationMatrices> {
        match &self.link {
            Link::Sim(p) => Some(p),
            Link::Direct => None,
        }
    }

    pub fn random_phases<R: Rng + ?Sized>(&self, rng: &mut R) -> SimPhases {
        SimPhases::random(self.cfg.num_layers, self.cfg.atoms_per_layer(), rng)
    }

    pub fn transfer(&self, phases: &SimPhases) -> Result<Option<CMatrix>> {
        self.propagation().map(|p| assemble_transfer(phases, p)).transpose()
    }

    /// Column of the transfer matrix serving the `index`-th user of a class.
    pub fn column(&self, index: usize) -> usize {
        index % self.cfg.num_antennas
    }

    /// SNR per watt: `|hᴴ θ_col|² / σ²` through the metasurface, `‖h‖² / σ²`
    /// for the direct link.
    pub fn gain(&self, theta: Option<&CMatrix>, h: &CVector, col: usize) -> f64 {
        let g = match theta {
            Some(th) => channel_gain(h, th.column(col).as_slice()),
            None => h.norm_squared(),
        };
        g / self.cfg.noise_power
    }

    pub fn embb_gains(&self, theta: Option<&CMatrix>, ch: &ChannelSet) -> Grid<f64> {
        Grid::from_fn(self.cfg.num_embb, self.cfg.num_rbs, |i, c| self.gain(theta, ch.get(i, c), self.column(i)))
    }

    pub fn urllc_gains(&self, theta: Option<&CMatrix>, ch: &ChannelSet) -> Grid<f64> {
        let ue = self.cfg.num_embb;
        Grid::from_fn(self.cfg.num_urllc, self.cfg.num_rbs, |j, c| self.gain(theta, ch.get(ue + j, c), self.column(j)))
    }

    /// `|a_kᴴ θ_col(j)|²` at `(j, k)`; zero without a metasurface.
    pub fn cross(&self, theta: Option<&CMatrix>) -> Grid<f64> {
        let u = self.cfg.num_urllc;
        Grid::from_fn(u, u, |j, k| match theta {
            Some(th) => channel_gain(&self.steering[k], th.column(self.column(j)).as_slice()),
            None => 0.0,
        })
    }

    /// Slot-level eMBB floors with the puncturing margin.
    pub fn embb_floors(&self) -> Vec<f64> {
        (0..self.cfg.num_embb)
            .map(|i| self.cfg.r_min.get(i) * (1.0 + self.cfg.puncture_margin))
            .collect()
    }

    pub fn urllc_floor(&self, j: usize) -> f64 {
        self.reliability_floor[j].max(self.delay_floor[j])
    }

    pub fn slot_budget(&self) -> f64 {
        (1.0 - self.cfg.power_reserve) * self.cfg.p_max
    }

    pub fn sample_channels<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSet {
        sample_channels(rng, &self.corr, &self.pathloss, self.cfg.num_rbs)
    }
}

/// Runs `T` slots of `I` mini-slots for one seed.
pub fn run_episode(cfg: &ScenarioConfig, baseline: Baseline, seed: u64) -> Result<EpisodeTrace> {
    let setup = Setup::new(cfg, baseline, seed)?;
    let (ue, uu) = (cfg.num_embb, cfg.num_urllc);
    let mut channel_rng = stream_rng(seed, CHANNEL_STREAM);
    let mut arrival_rng = stream_rng(seed, ARRIVAL_STREAM);
    let mut phase_rng = stream_rng(seed, PHASE_STREAM);
    let arrivals: Vec<Poisson<f64>> = (0..uu)
        .map(|j| Poisson::new(cfg.arrival_rate.get(j)).map_err(|e| Error::Domain(e.to_string())))
        .collect::<Result<_>>()?;
    let aoi_max = &cfg.aoi_max.0;

    let mut phases = setup.random_phases(&mut phase_rng);
    let mut aoi = AoiState::new(uu);
    let mut queues = VirtualQueues::new(uu);
    let mut slots = Vec::with_capacity(cfg.num_slots);
    let mut minislots = Vec::with_capacity(cfg.num_slots * cfg.minislots_per_slot);
    let mut backlog = 0.0;

    for t in 0..cfg.num_slots {
        let ch = setup.sample_channels(&mut channel_rng);
        if baseline == Baseline::RandomSim && t > 0 {
            phases = setup.random_phases(&mut phase_rng);
        }
        let slot = run_embb_slot(&setup, &ch, &phases)?;
        let mut delivered = vec![0.0; ue];
        for tau in 0..cfg.minislots_per_slot {
            let arr: Vec<u32> = arrivals.iter().map(|d| d.sample(&mut arrival_rng) as u32).collect();
            let ms = run_urllc_minislot(
                &setup,
                &MinislotInput {
                    channels: &ch,
                    slot: &slot,
                    tau,
                    delivered: &delivered,
                    arrivals: &arr,
                    aoi: &aoi,
                    queues: &queues,
                },
            )?;
            for (d, r) in delivered.iter_mut().zip(&ms.embb_rate) {
                *d += r;
            }
            let detected: Vec<u8> = (0..uu).map(|k| u8::from(ms.rho.row_count(k) > 0)).collect();
            aoi = aoi.step(&detected, tau == 0)?;
            queues = queues.update(&aoi.delta, aoi_max);
            backlog += queues.total();
            let state = AllocationState {
                alpha: slot.alpha.clone(),
                beta: ms.beta.clone(),
                rho: ms.rho.clone(),
                z: ms.z.clone(),
                p_e: slot.p_e.clone(),
                p_u: ms.p_u.clone(),
            };
            minislots.push(MinislotRecord {
                t,
                tau,
                arrivals: arr,
                state,
                urllc_rate: ms.urllc_rate,
                embb_rate: ms.embb_rate,
                urllc_power: ms.power,
                ee: ms.ee,
                delay: ms.delay,
                aoi: aoi.delta.clone(),
                queues: queues.u.clone(),
                residuals: ms.residuals,
                diag: ms.diag,
                fallback: ms.fallback,
            });
        }
        let power = slot.p_e.sum();
        let total: f64 = delivered.iter().sum();
        slots.push(SlotRecord {
            t,
            alpha: slot.alpha.clone(),
            p_e: slot.p_e.clone(),
            planned_rate: slot.planned_rate.clone(),
            realized_rate: delivered,
            power,
            ee: if power > 0.0 { total / power } else { 0.0 },
            diag: slot.diag.clone(),
            fallback: slot.fallback.clone(),
        });
        phases = slot.phases;
    }

    let summary = summarize(&slots, &minislots, &aoi, backlog);
    Ok(EpisodeTrace {
        seed,
        baseline,
        slots,
        minislots,
        summary,
    })
}

fn summarize(slots: &[SlotRecord], minislots: &[MinislotRecord], aoi: &AoiState, backlog: f64) -> EpisodeSummary {
    let t = slots.len().max(1) as f64;
    let ee_e: f64 = slots.iter().map(|s| s.ee).sum::<f64>() / t;
    let ee_u: f64 = minislots.iter().map(|m| m.ee).sum::<f64>() / t;
    let flagged = minislots
        .iter()
        .filter(|m| m.fallback.is_some() || slots.iter().any(|s| s.t == m.t && s.fallback.is_some()))
        .count();
    EpisodeSummary {
        objective: ee_e + ee_u,
        mean_ee_embb: ee_e,
        mean_ee_urllc: ee_u,
        aoi: average_aoi(&aoi.history).unwrap_or_default(),
        flagged,
        minislots: minislots.len(),
        mean_backlog: if minislots.is_empty() { 0.0 } else { backlog / minislots.len() as f64 },
    }
}
