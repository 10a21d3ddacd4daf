//! Command line front end: closed-form bounds, Monte Carlo flooding, the two
//! scheme simulators, service-window calibration, grid sweeps, and scaling
//! fits. Every subcommand is deterministic given its flags, config file, and
//! seed.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cellflood::analytics::{capacity_upper_bound, delay_lower_bound_best, iid_flooding_envelope};
use cellflood::harness::{
    calibrate_un, fit_scaling, rows_to_csv, run_sweep, trial_rng, FileConfig, FitModel, SweepSpec,
};
use cellflood::mobility::{exact_expected_flooding_time, Flooder, NetworkConfig, EXACT_CHAIN_CAP};
use cellflood::schemes::{
    md1_wait, simulate_fcfs, simulate_single_hop, single_hop_rate, single_hop_wait, FcfsConfig,
};
use cellflood::stats::summarize;
use cellflood::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cellflood",
    about = "Broadcast flooding in cell-partitioned mobile networks: simulators and bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config file supplying defaults ([network], [fcfs], [sweep]).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Emit JSON records instead of text/CSV.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Args, Clone)]
struct NetworkArgs {
    /// Node count N.
    #[arg(long)]
    n: Option<usize>,
    /// Cell-count exponent: C is the nearest integer to N^alpha / c.
    #[arg(long)]
    alpha: Option<f64>,
    /// Cell-count divisor.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form capacity and delay bounds for one configuration.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        network: NetworkArgs,
    },
    /// Monte Carlo single-packet flooding times.
    Flood {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        network: NetworkArgs,
        /// Number of flooding trials.
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Per-trial step cap.
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
    },
    /// FCFS flooding scheme simulation.
    Fcfs {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        network: NetworkArgs,
        /// Per-node arrival rate in packets per slot.
        #[arg(long)]
        lambda: Option<f64>,
        /// Service window U_N in slots.
        #[arg(long)]
        u_n: Option<u64>,
        /// Simulated slots; defaults to 1000000.
        #[arg(long)]
        horizon: Option<u64>,
        /// Slots excluded from statistics; defaults to horizon / 10.
        #[arg(long)]
        warmup: Option<u64>,
    },
    /// Single-hop scheme simulation.
    SingleHop {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        network: NetworkArgs,
        /// Per-node arrival rate; defaults to half the closed-form service
        /// rate.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 200_000)]
        horizon: u64,
        #[arg(long, default_value_t = 20_000)]
        warmup: u64,
    },
    /// Calibrate the service window to a flooding-completion target.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        network: NetworkArgs,
        /// Target completion probability; defaults to 1 - 1/N.
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Run the metric sweep from the config file's [sweep] section.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Fit a scaling model to a sweep CSV (columns n and mean).
    Fit {
        #[command(flatten)]
        common: Common,
        /// Sweep CSV produced by the sweep subcommand.
        #[arg(long)]
        input: PathBuf,
        /// power, power_log, or loglog.
        #[arg(long)]
        model: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code: u8 = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                f.write_all(b"\n")?;
            }
            Ok(())
        }
        None => {
            println!("{}", text.trim_end_matches('\n'));
            Ok(())
        }
    }
}

fn file_config(common: &Common) -> Result<FileConfig> {
    match &common.config {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::default()),
    }
}

fn network_config(args: &NetworkArgs, file: &FileConfig) -> Result<NetworkConfig> {
    let section = file.network.as_ref();
    let n = args
        .n
        .or(section.map(|s| s.n_nodes))
        .ok_or_else(|| Error::Parameter("missing --n (or [network] n_nodes)".into()))?;
    let alpha = args
        .alpha
        .or(section.map(|s| s.alpha))
        .ok_or_else(|| Error::Parameter("missing --alpha (or [network] alpha)".into()))?;
    let c = args
        .c
        .or(section.map(|s| s.c))
        .ok_or_else(|| Error::Parameter("missing --c (or [network] c)".into()))?;
    NetworkConfig::new(n, alpha, c)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bounds { common, network } => {
            let file = file_config(&common)?;
            let config = network_config(&network, &file)?;
            let cap = capacity_upper_bound(&config);
            let delay = delay_lower_bound_best(&config);
            let envelope = iid_flooding_envelope(&config, 1.0);
            let text = if common.json {
                serde_json::to_string_pretty(&json!({
                    "capacity_upper_bound": cap,
                    "delay_lower_bound": delay,
                    "flooding_envelope": envelope,
                }))
                .expect("report serializes")
            } else {
                format!(
                    "regime: {}\ncells: {}\ncapacity upper bound: {:.6e}\n\
                     delay lower bound: {:.6} slots (t = {})\n\
                     flooding envelope (unit constant): {:.6}",
                    config.regime(),
                    config.cell_count(),
                    cap.value,
                    delay.value,
                    delay.inputs["t"],
                    envelope.value,
                )
            };
            emit(&common, &text)
        }
        Command::Flood {
            common,
            network,
            trials,
            max_steps,
        } => {
            let file = file_config(&common)?;
            let config = network_config(&network, &file)?;
            if trials < 1 {
                return Err(Error::Parameter("need at least 1 trial".into()));
            }
            let mut flooder = Flooder::new(&config);
            let mut times = Vec::with_capacity(trials as usize);
            let mut timeouts = 0u64;
            for trial in 0..trials {
                let mut rng = trial_rng(common.seed, 0, trial);
                match flooder.run(&mut rng, max_steps, false).flooding_time {
                    Some(t) => times.push(t as f64),
                    None => timeouts += 1,
                }
            }
            if times.is_empty() {
                return Err(Error::Instability(format!(
                    "all {trials} trials timed out at {max_steps} steps"
                )));
            }
            let s = summarize(&times)?;
            let oracle = (config.n_nodes() <= EXACT_CHAIN_CAP)
                .then(|| exact_expected_flooding_time(&config))
                .transpose()?;
            let text = if common.json {
                serde_json::to_string_pretty(&json!({
                    "mean": s.mean,
                    "stderr": s.std_error,
                    "trials": trials,
                    "timeouts": timeouts,
                    "oracle": oracle,
                    "seed": common.seed,
                }))
                .expect("report serializes")
            } else {
                let mut t = format!(
                    "mean flooding time: {:.6} +/- {:.6} ({} trials, {} timeouts)",
                    s.mean, s.std_error, trials, timeouts
                );
                if let Some(o) = oracle {
                    t.push_str(&format!("\nexact expectation: {o:.6}"));
                }
                t
            };
            emit(&common, &text)
        }
        Command::Fcfs {
            common,
            network,
            lambda,
            u_n,
            horizon,
            warmup,
        } => {
            let file = file_config(&common)?;
            let config = network_config(&network, &file)?;
            let section = file.fcfs.as_ref();
            let u_n = match u_n.or(section.and_then(|s| s.service_slots)) {
                Some(u) => u,
                None => {
                    let target = 1.0 - 1.0 / config.n_nodes() as f64;
                    let mut rng = trial_rng(common.seed, u64::MAX, 0);
                    calibrate_un(&config, target, 10_000, &mut rng)?.u_n
                }
            };
            let lambda = lambda
                .or(section.and_then(|s| s.lambda))
                .unwrap_or_else(|| 0.5 / (config.n_nodes() as f64 * u_n as f64));
            let horizon = horizon
                .or(section.and_then(|s| s.horizon_slots))
                .unwrap_or(1_000_000);
            let warmup = warmup
                .or(section.and_then(|s| s.warmup_slots))
                .unwrap_or(horizon / 10);
            let fc = FcfsConfig::new(config.clone(), lambda, u_n, horizon, warmup)?;
            let mut rng = trial_rng(common.seed, 0, 0);
            let stats = simulate_fcfs(&fc, &mut rng);
            let reference = md1_wait(config.n_nodes(), lambda, u_n).ok();
            let text = if common.json {
                serde_json::to_string_pretty(&json!({
                    "u_n": u_n,
                    "lambda": lambda,
                    "utilization": fc.utilization(),
                    "stats": stats,
                    "md1_wait": reference,
                    "seed": common.seed,
                }))
                .expect("report serializes")
            } else {
                format!(
                    "U_N: {u_n} slots, lambda: {lambda:.6e}, utilization: {:.4}\n\
                     mean delay (reception): {:.4} slots\n\
                     mean system time: {:.4} slots{}\n\
                     drop rate: {:.6} ({} delivered, {} dropped)\n\
                     mean queue length: {:.4}",
                    fc.utilization(),
                    stats.mean_delay,
                    stats.mean_system_time,
                    reference
                        .map(|w| format!(" (deterministic-service reference {w:.4})"))
                        .unwrap_or_default(),
                    stats.drop_rate,
                    stats.delivered,
                    stats.dropped,
                    stats.mean_queue_len,
                )
            };
            emit(&common, &text)
        }
        Command::SingleHop {
            common,
            network,
            lambda,
            horizon,
            warmup,
        } => {
            let file = file_config(&common)?;
            let config = network_config(&network, &file)?;
            let r = single_hop_rate(&config);
            let lambda = lambda.unwrap_or(r / 2.0);
            let mut rng = trial_rng(common.seed, 0, 0);
            let rep = simulate_single_hop(&config, lambda, horizon, warmup, &mut rng)?;
            let predicted = single_hop_wait(lambda, r).ok();
            let text = if common.json {
                serde_json::to_string_pretty(&json!({
                    "closed_form_rate": r,
                    "lambda": lambda,
                    "tagged": rep.tagged,
                    "stats": rep.stats,
                    "predicted_wait": predicted,
                    "seed": common.seed,
                }))
                .expect("report serializes")
            } else {
                format!(
                    "closed-form queue rate: {r:.6e}, lambda: {lambda:.6e}\n\
                     tagged queue (0,1): rate {:.6e} +/- {:.2e}, mean wait {:.4}{}\n\
                     broadcast delay: {:.4} slots over {} delivered",
                    rep.tagged.activation_rate,
                    rep.tagged.activation_rate_se,
                    rep.tagged.mean_wait,
                    predicted
                        .map(|w| format!(" (predicted {w:.4})"))
                        .unwrap_or_default(),
                    rep.stats.mean_delay,
                    rep.stats.delivered,
                )
            };
            emit(&common, &text)
        }
        Command::Calibrate {
            common,
            network,
            target,
            trials,
        } => {
            let file = file_config(&common)?;
            let config = network_config(&network, &file)?;
            let target = target.unwrap_or(1.0 - 1.0 / config.n_nodes() as f64);
            let mut rng = trial_rng(common.seed, 0, 0);
            let record = calibrate_un(&config, target, trials, &mut rng)?;
            let text = if common.json {
                serde_json::to_string_pretty(&record).expect("record serializes")
            } else {
                format!(
                    "U_N: {} slots (target {:.6}, achieved {:.6}, {} trials)",
                    record.u_n, record.target_prob, record.achieved_prob, record.trials
                )
            };
            emit(&common, &text)
        }
        Command::Sweep { common } => {
            let file = file_config(&common)?;
            let mut spec: SweepSpec = file
                .sweep
                .ok_or_else(|| Error::Config("sweep needs a [sweep] section in --config".into()))?;
            if common.seed != 0 {
                spec.seed = common.seed;
            }
            let rows = run_sweep(&spec);
            let text = if common.json {
                serde_json::to_string_pretty(&rows).expect("rows serialize")
            } else {
                rows_to_csv(&rows)
            };
            emit(&common, &text)
        }
        Command::Fit {
            common,
            input,
            model,
        } => {
            let model: FitModel = model.parse().map_err(Error::Parameter)?;
            let text = std::fs::read_to_string(&input)?;
            let mut lines = text.lines();
            let header: Vec<&str> = lines
                .next()
                .ok_or_else(|| Error::Parameter("empty input file".into()))?
                .split(',')
                .collect();
            let col = |name: &str| {
                header
                    .iter()
                    .position(|&h| h == name)
                    .ok_or_else(|| Error::Parameter(format!("input lacks a '{name}' column")))
            };
            let (n_col, mean_col) = (col("n")?, col("mean")?);
            let mut ns = Vec::new();
            let mut ys = Vec::new();
            for line in lines {
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split(',').collect();
                let parse = |i: usize| -> Result<f64> {
                    fields
                        .get(i)
                        .and_then(|f| f.parse().ok())
                        .ok_or_else(|| Error::Parameter(format!("bad row: '{line}'")))
                };
                ns.push(parse(n_col)?);
                ys.push(parse(mean_col)?);
            }
            let fit = fit_scaling(&ns, &ys, model)?;
            let text = if common.json {
                serde_json::to_string_pretty(&fit).expect("fit serializes")
            } else {
                format!(
                    "model: {:?}\nexponent: {:.4}\nconstant: {:.4}\nr_squared: {:.6}",
                    fit.model, fit.exponent, fit.constant, fit.r_squared
                )
            };
            emit(&common, &text)
        }
    }
}
