//! Age of information per sensing target and the Lyapunov virtual queues
//! that keep its long-run average below the threshold.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AoiState {
    /// Current age per target, in mini-slots. Zero before the first step.
    pub delta: Vec<u32>,
    /// Post-update ages, one entry per completed mini-slot.
    pub history: Vec<Vec<u32>>,
}

impl AoiState {
    pub fn new(targets: usize) -> Self {
        AoiState {
            delta: vec![0; targets],
            history: Vec::new(),
        }
    }

    /// Advances one mini-slot: ages reset to 1 on detection and grow by one
    /// otherwise. Slot boundaries follow the same rule.
    pub fn step(&self, detected: &[u8], _at_slot_boundary: bool) -> Result<AoiState> {
        if detected.len() != self.delta.len() {
            return Err(Error::Shape(format!(
                "{} detection flags for {} targets",
                detected.len(),
                self.delta.len()
            )));
        }
        if let Some(i) = detected.iter().position(|&d| d > 1) {
            return Err(Error::Domain(format!("target {i} detected {} times", detected[i])));
        }
        let delta: Vec<u32> = self
            .delta
            .iter()
            .zip(detected)
            .map(|(&d, &rho)| if rho == 1 { 1 } else { d + 1 })
            .collect();
        let mut history = self.history.clone();
        history.push(delta.clone());
        Ok(AoiState { delta, history })
    }
}

/// `δ' = δ + 1 − ρ δ`, the linear form used inside the mini-slot objective.
pub fn aoi_next(delta: u32, detected: bool) -> u32 {
    delta + 1 - if detected { delta } else { 0 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualQueues {
    pub u: Vec<f64>,
}

impl VirtualQueues {
    pub fn new(targets: usize) -> Self {
        VirtualQueues { u: vec![0.0; targets] }
    }

    /// `U' = max(0, U + δ' − Δ_max)` per target; `aoi_max` is reused cyclically.
    pub fn update(&self, new_delta: &[u32], aoi_max: &[u32]) -> VirtualQueues {
        VirtualQueues {
            u: self
                .u
                .iter()
                .zip(new_delta)
                .enumerate()
                .map(|(i, (&u, &d))| (u + f64::from(d) - f64::from(aoi_max[i % aoi_max.len()])).max(0.0))
                .collect(),
        }
    }

    /// `L(U) = ½ Σ U²`.
    pub fn lyapunov(&self) -> f64 {
        0.5 * self.u.iter().map(|u| u * u).sum::<f64>()
    }

    pub fn total(&self) -> f64 {
        self.u.iter().sum()
    }
}

/// Drift-plus-penalty coefficients for one target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DppWeight {
    /// `U δ`, earned when the target is detected this mini-slot.
    pub reward: f64,
    /// `U (1 + δ − Δ_max)`, independent of the decision.
    pub constant: f64,
}

pub fn dpp_weight(queues: &VirtualQueues, aoi: &AoiState, target: usize, aoi_max: u32) -> DppWeight {
    let u = queues.u[target];
    let d = f64::from(aoi.delta[target]);
    DppWeight {
        reward: u * d,
        constant: u * (1.0 + d - f64::from(aoi_max)),
    }
}

/// Finite-horizon mean age per target over the recorded history.
pub fn average_aoi(history: &[Vec<u32>]) -> Result<Vec<f64>> {
    let first = history
        .first()
        .ok_or_else(|| Error::Domain("empty AoI history".into()))?;
    let mut sums = vec![0.0; first.len()];
    for step in history {
        for (s, &d) in sums.iter_mut().zip(step) {
            *s += f64::from(d);
        }
    }
    Ok(sums.into_iter().map(|s| s / history.len() as f64).collect())
}

/// Right-hand side of the one-step drift bound,
/// `U (δ' − Δ_max) + ½ (δ' − Δ_max)²`.
pub fn drift_bound(u: f64, new_delta: u32, aoi_max: u32) -> f64 {
    let x = f64::from(new_delta) - f64::from(aoi_max);
    u * x + 0.5 * x * x
}
