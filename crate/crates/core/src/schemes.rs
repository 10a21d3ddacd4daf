//! The two transmission schemes built on top of the mobility model: FCFS
//! packet flooding with a fixed per-packet service window, and the single-hop
//! scheme with one per-ordered-pair FIFO queue per node pair.
//!
//! Both simulators are deterministic under their RNG and report queueing
//! observables; instability is an observable, never an error.

use std::collections::VecDeque;

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::analytics::{scaling_class, BoundReport};
use crate::error::{Error, Result};
use crate::mobility::{fill_assignment, Flooder, NetworkConfig};

/// FCFS flooding scheme parameters. Utilization rho = N lambda U_N is
/// recorded but never enforced; unstable runs simply show growing backlog.
#[derive(Clone, Debug, Serialize)]
pub struct FcfsConfig {
    pub network: NetworkConfig,
    /// Per-node Poisson arrival rate, packets per slot.
    pub lambda: f64,
    /// Fixed service window U_N in slots.
    pub service_slots: u64,
    pub horizon_slots: u64,
    pub warmup_slots: u64,
}

impl FcfsConfig {
    pub fn new(
        network: NetworkConfig,
        lambda: f64,
        service_slots: u64,
        horizon_slots: u64,
        warmup_slots: u64,
    ) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
        }
        if service_slots < 1 {
            return Err(Error::Parameter("service window must be at least 1 slot".into()));
        }
        if horizon_slots < warmup_slots {
            return Err(Error::Parameter(format!(
                "horizon {horizon_slots} shorter than warmup {warmup_slots}"
            )));
        }
        Ok(FcfsConfig {
            network,
            lambda,
            service_slots,
            horizon_slots,
            warmup_slots,
        })
    }

    /// Utilization rho = N lambda U_N.
    pub fn utilization(&self) -> f64 {
        self.network.n_nodes() as f64 * self.lambda * self.service_slots as f64
    }
}

/// Queueing observables of a scheme run.
///
/// `mean_delay` is arrival to last-destination reception over delivered
/// packets. `mean_system_time` is arrival to service completion over all
/// serviced packets; it is the number the deterministic-service queueing
/// formula predicts, and equals `mean_delay` for the single-hop scheme.
#[derive(Clone, Debug, Serialize)]
pub struct QueueStats {
    pub mean_delay: f64,
    pub mean_system_time: f64,
    pub mean_queue_len: f64,
    pub drop_rate: f64,
    pub delivered: u64,
    pub dropped: u64,
    /// Waiting-copy backlog sampled at a fixed stride over the horizon.
    pub backlog_trajectory: Vec<f64>,
}

fn exp_interarrival<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    // 1 - U lies in (0, 1], so the log is finite.
    -(1.0 - rng.gen::<f64>()).ln() / rate
}

fn trajectory_stride(horizon: u64) -> u64 {
    (horizon / 512).max(1)
}

/// FCFS flooding simulation: pooled Poisson arrivals feed one FIFO; the head
/// packet floods from a uniformly chosen source for exactly `service_slots`
/// slots, then leaves. A packet is dropped when some destination never
/// received it within its window. Service begins at the slot boundary after
/// dequeue, so back-to-back services stay slot-aligned.
pub fn simulate_fcfs<R: Rng>(cfg: &FcfsConfig, rng: &mut R) -> QueueStats {
    let n = cfg.network.n_nodes();
    let rate = n as f64 * cfg.lambda;
    let warmup = cfg.warmup_slots as f64;
    let stride = trajectory_stride(cfg.horizon_slots);

    struct Serving {
        arrival_time: f64,
        start_slot: u64,
        informed: Vec<bool>,
        informed_count: usize,
        full_slot: Option<u64>,
    }

    let mut flooder = Flooder::new(&cfg.network);
    let mut fifo: VecDeque<f64> = VecDeque::new();
    let mut serving: Option<Serving> = None;
    let mut next_arrival = exp_interarrival(rng, rate);

    let mut delivered = 0u64;
    let mut dropped = 0u64;
    let mut reception_sum = 0.0;
    let mut system_sum = 0.0;
    let mut system_count = 0u64;
    let mut queue_len_sum = 0.0;
    let mut queue_len_slots = 0u64;
    let mut trajectory = Vec::new();

    for slot in 0..cfg.horizon_slots {
        while next_arrival < slot as f64 {
            fifo.push_back(next_arrival);
            next_arrival += exp_interarrival(rng, rate);
        }
        if serving.is_none() {
            if let Some(arrival_time) = fifo.pop_front() {
                let source = rng.gen_range(0..n);
                let mut informed = vec![false; n];
                informed[source] = true;
                serving = Some(Serving {
                    arrival_time,
                    start_slot: slot,
                    informed,
                    informed_count: 1,
                    full_slot: None,
                });
            }
        }
        // Work conservation: the server is busy whenever the FIFO holds work.
        debug_assert!(serving.is_some() || fifo.is_empty());

        if let Some(srv) = serving.as_mut() {
            srv.informed_count += flooder.spread_step(rng, &mut srv.informed);
            if srv.informed_count == n && srv.full_slot.is_none() {
                srv.full_slot = Some(slot);
            }
            if slot + 1 - srv.start_slot == cfg.service_slots {
                if srv.arrival_time >= warmup {
                    system_sum += (slot + 1) as f64 - srv.arrival_time;
                    system_count += 1;
                    match srv.full_slot {
                        Some(full) => {
                            delivered += 1;
                            reception_sum += (full + 1) as f64 - srv.arrival_time;
                        }
                        None => dropped += 1,
                    }
                }
                serving = None;
            }
        }

        if slot >= cfg.warmup_slots {
            queue_len_sum += fifo.len() as f64;
            queue_len_slots += 1;
        }
        if slot % stride == 0 {
            trajectory.push(fifo.len() as f64);
        }
    }

    QueueStats {
        mean_delay: if delivered > 0 {
            reception_sum / delivered as f64
        } else {
            f64::NAN
        },
        mean_system_time: if system_count > 0 {
            system_sum / system_count as f64
        } else {
            f64::NAN
        },
        mean_queue_len: if queue_len_slots > 0 {
            queue_len_sum / queue_len_slots as f64
        } else {
            0.0
        },
        drop_rate: if delivered + dropped > 0 {
            dropped as f64 / (delivered + dropped) as f64
        } else {
            0.0
        },
        delivered,
        dropped,
        backlog_trajectory: trajectory,
    }
}

/// Waiting time of an M/D/1 queue with service time u_n at pooled rate
/// N lambda: W = U_N + U_N rho / (2 (1 - rho)), rho = N lambda U_N.
pub fn md1_wait(n_nodes: usize, lambda: f64, u_n: u64) -> Result<f64> {
    let rho = n_nodes as f64 * lambda * u_n as f64;
    if rho >= 1.0 {
        return Err(Error::Instability(format!(
            "utilization {rho} is not below 1"
        )));
    }
    let u = u_n as f64;
    Ok(u + u * rho / (2.0 * (1.0 - rho)))
}

/// FCFS capacity at a target utilization: lambda = rho* / (N U_N), with the
/// regime's symbolic shape echoed in the report.
pub fn fcfs_capacity_envelope(config: &NetworkConfig, u_n: u64, rho_star: f64) -> Result<BoundReport> {
    if u_n < 1 {
        return Err(Error::Parameter("service window must be at least 1 slot".into()));
    }
    if !(rho_star > 0.0 && rho_star < 1.0) {
        return Err(Error::Parameter(format!(
            "target utilization {rho_star} outside (0, 1)"
        )));
    }
    let shape = scaling_class(config.alpha())?.fcfs_capacity;
    Ok(BoundReport {
        value: rho_star / (config.n_nodes() as f64 * u_n as f64),
        regime: config.regime(),
        formula_id: "fcfs_capacity",
        inputs: json!({
            "n": config.n_nodes(),
            "alpha": config.alpha(),
            "c": config.c(),
            "u_n": u_n,
            "rho_star": rho_star,
            "shape": shape,
        }),
    })
}

/// Activation rate of one ordered queue under the single-hop scheme:
/// r = C p / (N (N-1)) with p = 1 - (1-a_N)^N - N a_N (1-a_N)^(N-1), the
/// probability that a given cell holds at least two nodes.
pub fn single_hop_rate(config: &NetworkConfig) -> f64 {
    let n = config.n_nodes() as f64;
    let a = config.cell_prob();
    let miss_all = config.miss_prob(config.n_nodes() as u64);
    let exactly_one = n * a * config.miss_prob(config.n_nodes() as u64 - 1);
    let p = 1.0 - miss_all - exactly_one;
    config.cell_count() as f64 * p / (n * (n - 1.0))
}

/// Stationary waiting time of one single-hop queue:
/// W = (1 - lambda) / (r - lambda).
pub fn single_hop_wait(lambda: f64, r: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(r <= 1.0) {
        return Err(Error::Parameter(format!(
            "need 0 < lambda < r <= 1, got lambda = {lambda}, r = {r}"
        )));
    }
    if lambda >= r {
        return Err(Error::Instability(format!(
            "arrival rate {lambda} at or above service rate {r}"
        )));
    }
    Ok((1.0 - lambda) / (r - lambda))
}

/// Detailed statistics for one ordered queue of the single-hop run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TaggedQueueStats {
    pub pair: (usize, usize),
    /// Fraction of slots in which the pair was activated.
    pub activation_rate: f64,
    pub activation_rate_se: f64,
    /// Mean wait in slots, arrival slot to transmission slot.
    pub mean_wait: f64,
    pub served: u64,
}

/// Full outcome of a single-hop run: broadcast-level stats, the tagged
/// queue's detail, per-pair activation counts, and copy conservation
/// counters.
#[derive(Clone, Debug, Serialize)]
pub struct SingleHopReport {
    pub stats: QueueStats,
    /// Queue (0, 1) detail; any other pair is recoverable from
    /// `activations`.
    pub tagged: TaggedQueueStats,
    /// Activation counts per ordered pair, flattened as tx * N + rx.
    pub activations: Vec<u64>,
    pub observed_slots: u64,
    pub copies_enqueued: u64,
    pub copies_dequeued: u64,
    pub arrivals: u64,
}

/// Single-hop scheme simulation. Per slot, every cell holding at least two
/// nodes activates one uniformly chosen ordered pair; the transmitter sends
/// its head-of-line copy toward the receiver. Each per-node Poisson arrival
/// enqueues one copy per destination at its arrival instant; a packet
/// arriving during slot s becomes transmittable from slot s + 1.
pub fn simulate_single_hop<R: Rng>(
    config: &NetworkConfig,
    lambda: f64,
    horizon_slots: u64,
    warmup_slots: u64,
    rng: &mut R,
) -> Result<SingleHopReport> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if horizon_slots < warmup_slots {
        return Err(Error::Parameter(format!(
            "horizon {horizon_slots} shorter than warmup {warmup_slots}"
        )));
    }
    let n = config.n_nodes();
    let cells_total = config.cell_count() as usize;
    let rate = n as f64 * lambda;
    let warmup = warmup_slots as f64;
    let stride = trajectory_stride(horizon_slots);

    struct Packet {
        arrival_time: f64,
        remaining: u32,
    }

    let mut packets: Vec<Packet> = Vec::new();
    let mut queues: Vec<VecDeque<u32>> = (0..n * n).map(|_| VecDeque::new()).collect();
    let mut occupants: Vec<Vec<u32>> = vec![Vec::new(); cells_total];
    let mut touched: Vec<u32> = Vec::with_capacity(n);
    let mut cells: Vec<u32> = Vec::with_capacity(n);
    let mut activations = vec![0u64; n * n];
    let mut next_arrival = exp_interarrival(rng, rate);

    let mut arrivals = 0u64;
    let mut copies_enqueued = 0u64;
    let mut copies_dequeued = 0u64;
    let mut backlog = 0u64;
    let mut backlog_sum = 0.0;
    let mut backlog_slots = 0u64;
    let mut trajectory = Vec::new();
    let mut delivered = 0u64;
    let mut delay_sum = 0.0;
    let mut tagged_wait_sum = 0.0;
    let mut tagged_served = 0u64;
    let mut observed_slots = 0u64;

    for slot in 0..horizon_slots {
        while next_arrival < slot as f64 {
            let source = rng.gen_range(0..n);
            let id = packets.len() as u32;
            packets.push(Packet {
                arrival_time: next_arrival,
                remaining: n as u32 - 1,
            });
            for dest in 0..n {
                if dest != source {
                    queues[source * n + dest].push_back(id);
                }
            }
            arrivals += 1;
            copies_enqueued += (n - 1) as u64;
            backlog += (n - 1) as u64;
            next_arrival += exp_interarrival(rng, rate);
        }

        fill_assignment(config, rng, &mut cells);
        for &cell in &touched {
            occupants[cell as usize].clear();
        }
        touched.clear();
        for (node, &cell) in cells.iter().enumerate() {
            let bucket = &mut occupants[cell as usize];
            if bucket.is_empty() {
                touched.push(cell);
            }
            bucket.push(node as u32);
        }

        let in_window = slot >= warmup_slots;
        if in_window {
            observed_slots += 1;
        }
        for &cell in &touched {
            let occ = &occupants[cell as usize];
            let m = occ.len();
            if m < 2 {
                continue;
            }
            // Uniform ordered pair: equivalent to an unordered choice plus a
            // fair orientation.
            let i = rng.gen_range(0..m);
            let j = {
                let j = rng.gen_range(0..m - 1);
                if j >= i {
                    j + 1
                } else {
                    j
                }
            };
            let tx = occ[i] as usize;
            let rx = occ[j] as usize;
            if in_window {
                activations[tx * n + rx] += 1;
            }
            if let Some(&id) = queues[tx * n + rx].front() {
                let pkt = &packets[id as usize];
                // Copies become transmittable at the boundary after arrival.
                if pkt.arrival_time < slot as f64 {
                    queues[tx * n + rx].pop_front();
                    copies_dequeued += 1;
                    backlog -= 1;
                    let pkt = &mut packets[id as usize];
                    pkt.remaining -= 1;
                    let counted = pkt.arrival_time >= warmup;
                    if (tx, rx) == (0, 1) && counted {
                        tagged_wait_sum += slot as f64 - pkt.arrival_time.floor();
                        tagged_served += 1;
                    }
                    if pkt.remaining == 0 {
                        if counted {
                            delivered += 1;
                            delay_sum += (slot + 1) as f64 - pkt.arrival_time;
                        }
                    }
                }
            }
        }

        if in_window {
            backlog_sum += backlog as f64;
            backlog_slots += 1;
        }
        if slot % stride == 0 {
            trajectory.push(backlog as f64);
        }
    }

    debug_assert_eq!(copies_enqueued, (n as u64 - 1) * arrivals);
    debug_assert!(copies_dequeued <= copies_enqueued);

    let tagged_activations = activations[1]; // pair (0, 1)
    let rate_hat = if observed_slots > 0 {
        tagged_activations as f64 / observed_slots as f64
    } else {
        0.0
    };
    let mean_delay = if delivered > 0 {
        delay_sum / delivered as f64
    } else {
        f64::NAN
    };
    Ok(SingleHopReport {
        stats: QueueStats {
            mean_delay,
            mean_system_time: mean_delay,
            mean_queue_len: if backlog_slots > 0 {
                backlog_sum / backlog_slots as f64
            } else {
                0.0
            },
            drop_rate: 0.0,
            delivered,
            dropped: 0,
            backlog_trajectory: trajectory,
        },
        tagged: TaggedQueueStats {
            pair: (0, 1),
            activation_rate: rate_hat,
            activation_rate_se: if observed_slots > 0 {
                (rate_hat * (1.0 - rate_hat) / observed_slots as f64).sqrt()
            } else {
                0.0
            },
            mean_wait: if tagged_served > 0 {
                tagged_wait_sum / tagged_served as f64
            } else {
                f64::NAN
            },
            served: tagged_served,
        },
        activations,
        observed_slots,
        copies_enqueued,
        copies_dequeued,
        arrivals,
    })
}
