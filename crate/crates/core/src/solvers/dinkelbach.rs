//! Dinkelbach iteration for fractional objectives `num / den`.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DinkelbachStep {
    pub numerator: f64,
    pub denominator: f64,
    /// Ratio produced by this step.
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DinkelbachOutcome<S> {
    pub solution: S,
    pub eta: f64,
    /// One entry per accepted iteration.
    pub history: Vec<DinkelbachStep>,
    pub iterations: usize,
    pub converged: bool,
    /// `|num − η · den|` from the last subtractive solve, at the factor `η`
    /// it was solved with.
    pub gap: f64,
}

impl<S> DinkelbachOutcome<S> {
    pub fn etas(&self) -> Vec<f64> {
        self.history.iter().map(|h| h.eta).collect()
    }
}

/// Drives `inner(eta, incumbent)`, which maximizes `num − eta · den` and
/// returns `(solution, num, den)`.
///
/// A zero denominator leaves the ratio at zero. A step that would lower the
/// ratio keeps the incumbent and stops.
pub fn dinkelbach_drive<S, F>(mut inner: F, j_max: usize, tol: f64) -> Result<DinkelbachOutcome<S>>
where
    S: Clone,
    F: FnMut(f64, Option<&S>) -> Result<(S, f64, f64)>,
{
    let mut eta = 0.0;
    let mut best: Option<S> = None;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = 0.0;
    while iterations < j_max.max(1) {
        iterations += 1;
        let (sol, num, den) = inner(eta, best.as_ref())?;
        let next = if den > 0.0 { num / den } else { 0.0 };
        gap = (num - eta * den).abs();
        if best.is_some() && next < eta {
            converged = true;
            break;
        }
        let change = (next - eta).abs();
        eta = next;
        best = Some(sol);
        history.push(DinkelbachStep { numerator: num, denominator: den, eta });
        if change <= tol {
            converged = true;
            break;
        }
    }
    let solution = match best {
        Some(s) => s,
        None => unreachable!("at least one iteration always runs"),
    };
    Ok(DinkelbachOutcome { solution, eta, history, iterations, converged, gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_solution_converges_in_two_steps() {
        let out = dinkelbach_drive(|_, _| Ok(((), 6.0, 3.0)), 10, 1e-9).unwrap();
        assert_eq!(out.iterations, 2);
        assert!(out.converged);
        assert_eq!(out.eta, 2.0);
    }

    #[test]
    fn toy_ratio_reaches_optimum() {
        // max 2x / (x + 1) over x ∈ [0, 1]; the inner problem is linear in x.
        let out = dinkelbach_drive(
            |eta, _| {
                let x = if 2.0 - eta > 0.0 { 1.0 } else { 0.0 };
                Ok((x, 2.0 * x, x + 1.0))
            },
            20,
            1e-12,
        )
        .unwrap();
        let grid = (0..=100_000)
            .map(|k| {
                let x = k as f64 / 100_000.0;
                2.0 * x / (x + 1.0)
            })
            .fold(f64::MIN, f64::max);
        assert!((out.eta - grid).abs() < 1e-12);
        assert_eq!(out.solution, 1.0);
        assert!(out.etas().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn concave_ratio_matches_closed_form() {
        // max ln(1 + x) / (x + 1) on x ≥ 0: optimum at x = e − 1, ratio 1/e.
        // Inner: argmax ln(1+x) − eta(x+1) gives x = 1/eta − 1.
        let out = dinkelbach_drive(
            |eta, _| {
                let x: f64 = if eta > 0.0 { (1.0 / eta - 1.0).clamp(0.0, 1e6) } else { 1e6 };
                Ok((x, (1.0 + x).ln(), x + 1.0))
            },
            60,
            1e-13,
        )
        .unwrap();
        assert!(out.converged);
        assert!((out.eta - (-1.0f64).exp()).abs() < 1e-10, "{}", out.eta);
    }

    #[test]
    fn zero_denominator_reports_zero() {
        let out = dinkelbach_drive(|_, _| Ok(((), 0.0, 0.0)), 5, 1e-9).unwrap();
        assert_eq!(out.eta, 0.0);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn decreasing_step_keeps_incumbent() {
        let mut calls = 0;
        let out = dinkelbach_drive(
            |_, _| {
                calls += 1;
                Ok((calls, if calls == 1 { 4.0 } else { 1.0 }, 1.0))
            },
            10,
            1e-9,
        )
        .unwrap();
        assert_eq!(out.solution, 1);
        assert_eq!(out.eta, 4.0);
    }

    #[test]
    fn iteration_cap() {
        let mut k = 0.0;
        let out = dinkelbach_drive(
            |_, _| {
                k += 1.0;
                Ok(((), k, 1.0))
            },
            3,
            1e-12,
        )
        .unwrap();
        assert_eq!(out.iterations, 3);
        assert!(!out.converged);
    }
}
