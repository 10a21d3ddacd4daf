//! Metric sweeps over an (alpha, N) grid with deterministic seeding and CSV
//! emission.
//!
//! Rows are produced in grid order (outer loop alphas, inner loop n_values)
//! and every point draws its trial streams from `derive_seed(master, point,
//! trial)`, so a sweep is a pure function of its spec. Per-point failures
//! land in the `error` column and the sweep continues.

use serde::Serialize;

use crate::analytics::{capacity_upper_bound, delay_lower_bound_best};
use crate::error::{Error, Result};
use crate::harness::calibrate::calibrate_un;
use crate::harness::trial_rng;
use crate::mobility::{exact_expected_flooding_time, Flooder, NetworkConfig, EXACT_CHAIN_CAP};
use crate::schemes::{
    md1_wait, simulate_fcfs, simulate_single_hop, single_hop_rate, single_hop_wait, FcfsConfig,
};
use crate::stats::summarize;

/// Swept metric.
///
/// `FloodTime` runs trials_per_point single-packet floods. `FcfsDelay` and
/// `SingleHopWait` run trials_per_point independent replications of the
/// respective simulator and average the per-replication statistic; both pick
/// their arrival rate for utilization 1/2 against the point's calibrated or
/// closed-form service rate. The two bound metrics are pure formula
/// evaluations with zero standard error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Metric {
    FloodTime,
    FcfsDelay,
    SingleHopWait,
    CapacityBound,
    DelayBound,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::FloodTime => "flood_time",
            Metric::FcfsDelay => "fcfs_delay",
            Metric::SingleHopWait => "single_hop_wait",
            Metric::CapacityBound => "capacity_bound",
            Metric::DelayBound => "delay_bound",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Metric, String> {
        match s {
            "flood_time" => Ok(Metric::FloodTime),
            "fcfs_delay" => Ok(Metric::FcfsDelay),
            "single_hop_wait" => Ok(Metric::SingleHopWait),
            "capacity_bound" => Ok(Metric::CapacityBound),
            "delay_bound" => Ok(Metric::DelayBound),
            _ => Err(format!(
                "unknown metric '{s}' (expected flood_time, fcfs_delay, single_hop_wait, \
                 capacity_bound, or delay_bound)"
            )),
        }
    }
}

/// One sweep over the product grid alphas x n_values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    pub n_values: Vec<usize>,
    pub c: f64,
    pub trials_per_point: u64,
    pub seed: u64,
    pub metric: Metric,
}

impl SweepSpec {
    pub fn new(
        alphas: Vec<f64>,
        n_values: Vec<usize>,
        c: f64,
        trials_per_point: u64,
        seed: u64,
        metric: Metric,
    ) -> Result<Self> {
        if alphas.is_empty() || n_values.is_empty() {
            return Err(Error::Parameter("sweep grids must be nonempty".into()));
        }
        if trials_per_point < 1 {
            return Err(Error::Parameter("trials_per_point must be at least 1".into()));
        }
        Ok(SweepSpec {
            alphas,
            n_values,
            c,
            trials_per_point,
            seed,
            metric,
        })
    }
}

/// One CSV row. `oracle` and `zscore` are filled when an exact reference is
/// available for the point; `error` holds a per-point failure message.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub alpha: f64,
    pub c: f64,
    pub metric: &'static str,
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub oracle: Option<f64>,
    pub zscore: Option<f64>,
    pub seed: u64,
    pub error: Option<String>,
}

/// Trial cap for sweep flooding runs.
const SWEEP_MAX_STEPS: u64 = 1_000_000;

/// Replication horizons for the queueing metrics; chosen so one replication
/// reaches steady state at utilization 1/2.
const FCFS_HORIZON: u64 = 100_000;
const FCFS_WARMUP: u64 = 10_000;
const SINGLE_HOP_HORIZON: u64 = 200_000;
const SINGLE_HOP_WARMUP: u64 = 20_000;

pub fn run_sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    let mut point = 0u64;
    for &alpha in &spec.alphas {
        for &n in &spec.n_values {
            rows.push(run_point(spec, n, alpha, point));
            point += 1;
        }
    }
    rows
}

fn run_point(spec: &SweepSpec, n: usize, alpha: f64, point: u64) -> SweepRow {
    let mut row = SweepRow {
        n,
        alpha,
        c: spec.c,
        metric: spec.metric.name(),
        mean: f64::NAN,
        stderr: f64::NAN,
        trials: 0,
        oracle: None,
        zscore: None,
        seed: spec.seed,
        error: None,
    };
    match point_value(spec, n, alpha, point) {
        Ok((mean, stderr, trials, oracle)) => {
            row.mean = mean;
            row.stderr = stderr;
            row.trials = trials;
            row.oracle = oracle;
            row.zscore = oracle.map(|o| {
                if stderr > 0.0 {
                    (mean - o) / stderr
                } else {
                    0.0
                }
            });
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

type PointValue = (f64, f64, u64, Option<f64>);

fn point_value(spec: &SweepSpec, n: usize, alpha: f64, point: u64) -> Result<PointValue> {
    let config = NetworkConfig::new(n, alpha, spec.c)?;
    match spec.metric {
        Metric::FloodTime => {
            let mut flooder = Flooder::new(&config);
            let mut times = Vec::with_capacity(spec.trials_per_point as usize);
            for trial in 0..spec.trials_per_point {
                let mut rng = trial_rng(spec.seed, point, trial);
                match flooder.run(&mut rng, SWEEP_MAX_STEPS, false).flooding_time {
                    Some(t) => times.push(t as f64),
                    None => {
                        return Err(Error::Instability(format!(
                            "flooding trial timed out at {SWEEP_MAX_STEPS} steps"
                        )))
                    }
                }
            }
            let s = summarize(&times)?;
            let oracle = (n <= EXACT_CHAIN_CAP.min(200))
                .then(|| exact_expected_flooding_time(&config))
                .transpose()?;
            Ok((s.mean, s.std_error, spec.trials_per_point, oracle))
        }
        Metric::FcfsDelay => {
            let mut cal_rng = trial_rng(spec.seed, point, u64::MAX);
            let target = 1.0 - 1.0 / n as f64;
            let record = calibrate_un(&config, target, 5_000, &mut cal_rng)?;
            let lambda = 0.5 / (n as f64 * record.u_n as f64);
            let mut means = Vec::new();
            for trial in 0..spec.trials_per_point {
                let mut rng = trial_rng(spec.seed, point, trial);
                let fc = FcfsConfig::new(
                    config.clone(),
                    lambda,
                    record.u_n,
                    FCFS_HORIZON,
                    FCFS_WARMUP,
                )?;
                means.push(simulate_fcfs(&fc, &mut rng).mean_system_time);
            }
            let s = summarize(&means)?;
            let oracle = Some(md1_wait(n, lambda, record.u_n)?);
            Ok((s.mean, s.std_error, spec.trials_per_point, oracle))
        }
        Metric::SingleHopWait => {
            let r = single_hop_rate(&config);
            let lambda = r / 2.0;
            let mut means = Vec::new();
            for trial in 0..spec.trials_per_point {
                let mut rng = trial_rng(spec.seed, point, trial);
                let rep = simulate_single_hop(
                    &config,
                    lambda,
                    SINGLE_HOP_HORIZON,
                    SINGLE_HOP_WARMUP,
                    &mut rng,
                )?;
                means.push(rep.tagged.mean_wait);
            }
            let s = summarize(&means)?;
            let oracle = Some(single_hop_wait(lambda, r)?);
            Ok((s.mean, s.std_error, spec.trials_per_point, oracle))
        }
        Metric::CapacityBound => {
            let v = capacity_upper_bound(&config).value;
            Ok((v, 0.0, 1, None))
        }
        Metric::DelayBound => {
            let v = delay_lower_bound_best(&config).value;
            Ok((v, 0.0, 1, None))
        }
    }
}

/// CSV header matching [`rows_to_csv`].
pub const CSV_HEADER: &str = "n,alpha,c,metric,mean,stderr,trials,oracle,zscore,seed,error";

fn field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Serializes rows with a header line; byte-identical for identical rows.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.alpha,
            r.c,
            r.metric,
            r.mean,
            r.stderr,
            r.trials,
            field(r.oracle),
            field(r.zscore),
            r.seed,
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(metric: Metric, trials: u64) -> SweepSpec {
        SweepSpec::new(vec![1.0], vec![10, 20], 1.0, trials, 5, metric).unwrap()
    }

    #[test]
    fn flood_sweep_matches_oracle() {
        let rows = run_sweep(&spec(Metric::FloodTime, 2000));
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(row.error.is_none());
            let z = row.zscore.unwrap();
            assert!(z.abs() <= 3.5, "n = {}: z = {z}", row.n);
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let a = rows_to_csv(&run_sweep(&spec(Metric::FloodTime, 200)));
        let b = rows_to_csv(&run_sweep(&spec(Metric::FloodTime, 200)));
        assert_eq!(a, b);
        assert!(a.starts_with(CSV_HEADER));
    }

    #[test]
    fn bound_sweeps_have_zero_stderr() {
        for metric in [Metric::CapacityBound, Metric::DelayBound] {
            for row in run_sweep(&spec(metric, 10)) {
                assert!(row.error.is_none());
                assert_eq!(row.stderr, 0.0);
                assert!(row.mean.is_finite());
            }
        }
    }

    #[test]
    fn failed_points_carry_error_and_continue() {
        // n_nodes = 1 is invalid, so the point fails while the sweep still
        // emits its row.
        let s = SweepSpec::new(vec![1.0], vec![1], 1.0, 10, 5, Metric::FloodTime).unwrap();
        let rows = run_sweep(&s);
        assert_eq!(rows.len(), 1);
        assert!(rows[0].error.is_some());
        let csv = rows_to_csv(&rows);
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in [
            Metric::FloodTime,
            Metric::FcfsDelay,
            Metric::SingleHopWait,
            Metric::CapacityBound,
            Metric::DelayBound,
        ] {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("bogus".parse::<Metric>().is_err());
    }
}
