//! Service-window calibration: the smallest U_N whose empirical
//! P(T_N <= U_N) reaches a target probability.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mobility::{Flooder, NetworkConfig};
use crate::stats::empirical_quantile;

/// Outcome of a calibration run. `achieved_prob` is the empirical coverage
/// at the returned window and is always at least the target; being an
/// estimate from `trials` samples, it carries one-sided binomial noise of
/// order sqrt(target (1 - target) / trials).
#[derive(Clone, Debug, Serialize)]
pub struct CalibrationRecord {
    pub n_nodes: usize,
    pub alpha: f64,
    pub c: f64,
    pub target_prob: f64,
    pub u_n: u64,
    pub achieved_prob: f64,
    pub trials: u64,
}

/// Cap on a single calibration trial; runs hitting it count as timeouts.
const CALIBRATION_MAX_STEPS: u64 = 1_000_000;

/// Runs single-packet flooding trials and returns the empirical
/// target-quantile of the flooding time.
pub fn calibrate_un<R: Rng>(
    config: &NetworkConfig,
    target_prob: f64,
    trials: u64,
    rng: &mut R,
) -> Result<CalibrationRecord> {
    if !(0.0 < target_prob && target_prob < 1.0) {
        return Err(Error::Parameter(format!(
            "target probability {target_prob} outside (0, 1)"
        )));
    }
    if trials < 1000 {
        return Err(Error::Parameter(format!(
            "need at least 1000 calibration trials, got {trials}"
        )));
    }
    let mut flooder = Flooder::new(config);
    let mut times = Vec::with_capacity(trials as usize);
    let mut timeouts = 0u64;
    for _ in 0..trials {
        match flooder.run(rng, CALIBRATION_MAX_STEPS, false).flooding_time {
            Some(t) => times.push(t),
            None => timeouts += 1,
        }
    }
    let completed_frac = times.len() as f64 / trials as f64;
    if completed_frac < target_prob {
        return Err(Error::Calibration(format!(
            "{timeouts}/{trials} trials timed out at {CALIBRATION_MAX_STEPS} steps; \
             completion rate {completed_frac:.4} below target {target_prob}"
        )));
    }
    // Quantile over all trials with timeouts ranked above every completion.
    let q = target_prob * trials as f64 / times.len() as f64;
    let u_n = empirical_quantile(&times, q.min(1.0 - 1e-12))?;
    let covered = times.iter().filter(|&&t| t <= u_n).count();
    Ok(CalibrationRecord {
        n_nodes: config.n_nodes(),
        alpha: config.alpha(),
        c: config.c(),
        target_prob,
        u_n,
        achieved_prob: covered as f64 / trials as f64,
        trials,
    })
}
