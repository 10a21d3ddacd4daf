//! Cell-partitioned IID mobility: every node resamples a uniform cell each
//! slot, independently of everything else. Two nodes are neighbors in a slot
//! exactly when they share a cell.
//!
//! Alongside the per-slot simulator this module carries the exact law of the
//! newly-informed count and an absorbing-chain oracle for the expected
//! flooding time, used to cross-validate Monte Carlo runs.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::meg::{FloodingResult, GraphSnapshot};

/// Density regime: sparse means the per-cell occupancy shrinks with N.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    Sparse,
    Dense,
}

impl Regime {
    pub fn from_alpha(alpha: f64) -> Regime {
        if alpha >= 1.0 {
            Regime::Sparse
        } else {
            Regime::Dense
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Sparse => write!(f, "sparse"),
            Regime::Dense => write!(f, "dense"),
        }
    }
}

/// Network parameterization: N nodes over C cells with per-cell probability
/// `a_N = 1/C`, where C is the nearest integer to `N^alpha / c`.
///
/// The cell count must be an integer, so `a_N` is redefined as `1/C` after
/// rounding; every formula in the crate uses this effective value so that
/// simulation and analytics agree exactly.
#[derive(Clone, Debug, Serialize)]
pub struct NetworkConfig {
    n_nodes: usize,
    alpha: f64,
    c: f64,
    cell_count: u64,
    cell_prob: f64,
    clamped: bool,
}

impl NetworkConfig {
    pub fn new(n_nodes: usize, alpha: f64, c: f64) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::Parameter(format!(
                "need at least 2 nodes, got {n_nodes}"
            )));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Parameter(format!("c must be positive, got {c}")));
        }
        let raw = (n_nodes as f64).powf(alpha) / c;
        let rounded = raw.round();
        let clamped = rounded < 1.0;
        let cell_count = if clamped { 1 } else { rounded as u64 };
        Ok(NetworkConfig {
            n_nodes,
            alpha,
            c,
            cell_count,
            cell_prob: 1.0 / cell_count as f64,
            clamped,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn cell_count(&self) -> u64 {
        self.cell_count
    }

    /// Effective cell probability `a_N = 1/C`.
    pub fn cell_prob(&self) -> f64 {
        self.cell_prob
    }

    /// True when the requested parameters implied fewer than one cell and the
    /// count was clamped to 1.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    pub fn regime(&self) -> Regime {
        Regime::from_alpha(self.alpha)
    }

    /// `(1 - a_N)^h`, evaluated in log space.
    pub fn miss_prob(&self, h: u64) -> f64 {
        (h as f64 * (-self.cell_prob).ln_1p()).exp()
    }

    /// `1 - (1 - a_N)^h`: the probability that a fixed node shares a cell
    /// with at least one of `h` given nodes.
    pub fn hit_prob(&self, h: u64) -> f64 {
        -(h as f64 * (-self.cell_prob).ln_1p()).exp_m1()
    }
}

/// One slot's node-to-cell map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellAssignment {
    cells: Vec<u32>,
}

impl CellAssignment {
    pub fn cells(&self) -> &[u32] {
        &self.cells
    }
}

/// Per-node newly-informed law: with `h` informed nodes, each uninformed
/// node is reached with probability `1 - (1 - a_N)^h`. The binomial with
/// these parameters has the exact mean of the newly-informed count, but the
/// per-node hits share the informed nodes' occupied cells and are only
/// conditionally independent, so the joint count is binomial only in the
/// limit where occupancy concentrates (see `exact_expected_flooding_time`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinomialSpec {
    pub trials: u64,
    pub success_prob: f64,
}

impl BinomialSpec {
    pub fn mean(&self) -> f64 {
        self.trials as f64 * self.success_prob
    }
}

/// Samples every node's cell uniformly and independently.
pub fn sample_assignment<R: Rng>(config: &NetworkConfig, rng: &mut R) -> CellAssignment {
    let mut cells = Vec::with_capacity(config.n_nodes);
    fill_assignment(config, rng, &mut cells);
    CellAssignment { cells }
}

pub(crate) fn fill_assignment<R: Rng>(config: &NetworkConfig, rng: &mut R, cells: &mut Vec<u32>) {
    cells.clear();
    if config.cell_count == 1 {
        cells.resize(config.n_nodes, 0);
        return;
    }
    let dist = Uniform::new(0u32, config.cell_count as u32);
    cells.extend((0..config.n_nodes).map(|_| dist.sample(rng)));
}

/// Groups nodes by equal cell ID into a co-cell snapshot.
pub fn induced_snapshot(assignment: &CellAssignment) -> GraphSnapshot {
    let mut by_cell: std::collections::BTreeMap<u32, Vec<u32>> = std::collections::BTreeMap::new();
    for (node, &cell) in assignment.cells.iter().enumerate() {
        by_cell.entry(cell).or_default().push(node as u32);
    }
    GraphSnapshot::new(assignment.cells.len(), by_cell.into_values().collect())
        .expect("assignment always induces a valid partition")
}

/// Exact distribution of the newly-informed count given `h` informed nodes.
pub fn newly_informed_distribution(config: &NetworkConfig, h: u64) -> Result<BinomialSpec> {
    let n = config.n_nodes as u64;
    if h < 1 || h > n {
        return Err(Error::Parameter(format!(
            "informed count {h} out of range 1..={n}"
        )));
    }
    Ok(BinomialSpec {
        trials: n - h,
        success_prob: config.hit_prob(h),
    })
}

/// Reusable single-packet flooding simulator.
///
/// Per slot it draws a fresh cell assignment (node order, one uniform draw per
/// node) and informs every node that shares a cell with an informed node,
/// identical to a [`crate::meg::flood_step`] on the induced snapshot. The
/// scratch buffers make repeated trials allocation-free.
pub struct Flooder {
    config: NetworkConfig,
    cells: Vec<u32>,
    informed: Vec<bool>,
    stamps: Vec<u32>,
    epoch: u32,
}

impl Flooder {
    pub fn new(config: &NetworkConfig) -> Self {
        Flooder {
            config: config.clone(),
            cells: Vec::with_capacity(config.n_nodes),
            informed: vec![false; config.n_nodes],
            stamps: vec![0; config.cell_count as usize],
            epoch: 0,
        }
    }

    /// Runs one flooding trial from a uniformly chosen source node.
    pub fn run<R: Rng>(
        &mut self,
        rng: &mut R,
        max_steps: u64,
        record_trajectory: bool,
    ) -> FloodingResult {
        let n = self.config.n_nodes;
        let source = rng.gen_range(0..n);
        self.run_from(source, rng, max_steps, record_trajectory)
    }

    /// Runs one flooding trial from a fixed source node.
    pub fn run_from<R: Rng>(
        &mut self,
        source: usize,
        rng: &mut R,
        max_steps: u64,
        record_trajectory: bool,
    ) -> FloodingResult {
        let n = self.config.n_nodes;
        let mut informed = std::mem::take(&mut self.informed);
        informed.iter_mut().for_each(|b| *b = false);
        informed[source] = true;
        let mut h = 1usize;
        let mut trajectory = record_trajectory.then(Vec::new);

        let mut flooding_time = None;
        for step in 1..=max_steps {
            h += self.spread_step(rng, &mut informed);
            if let Some(t) = trajectory.as_mut() {
                t.push(h);
            }
            if h == n {
                flooding_time = Some(step);
                break;
            }
        }
        self.informed = informed;
        FloodingResult {
            completed: flooding_time.is_some(),
            flooding_time,
            trajectory,
        }
    }

    /// One slot of spreading over an externally owned informed set: draws a
    /// fresh assignment and informs every node sharing a cell with an
    /// informed node. Returns the newly informed count.
    pub fn spread_step<R: Rng>(&mut self, rng: &mut R, informed: &mut [bool]) -> usize {
        let n = self.config.n_nodes;
        assert_eq!(informed.len(), n, "informed set size mismatch");
        fill_assignment(&self.config, rng, &mut self.cells);
        if self.epoch == u32::MAX {
            self.stamps.iter_mut().for_each(|s| *s = 0);
            self.epoch = 0;
        }
        self.epoch += 1;
        let epoch = self.epoch;
        for node in 0..n {
            if informed[node] {
                self.stamps[self.cells[node] as usize] = epoch;
            }
        }
        let mut newly = 0;
        for node in 0..n {
            if !informed[node] && self.stamps[self.cells[node] as usize] == epoch {
                informed[node] = true;
                newly += 1;
            }
        }
        newly
    }
}

/// Single-packet flooding under IID mobility from a uniformly chosen source.
/// Returns a timeout result when `max_steps` is exhausted.
pub fn simulate_single_packet_flood<R: Rng>(
    config: &NetworkConfig,
    rng: &mut R,
    max_steps: u64,
    record_trajectory: bool,
) -> Result<FloodingResult> {
    if max_steps < 1 {
        return Err(Error::Parameter("max_steps must be at least 1".into()));
    }
    Ok(Flooder::new(config).run(rng, max_steps, record_trajectory))
}

/// Largest N accepted by the exact chain solvers.
pub const EXACT_CHAIN_CAP: usize = 2000;

fn check_chain_cap(config: &NetworkConfig) -> Result<()> {
    if config.n_nodes > EXACT_CHAIN_CAP {
        return Err(Error::Parameter(format!(
            "exact chain solve capped at N = {EXACT_CHAIN_CAP}, got {}",
            config.n_nodes
        )));
    }
    Ok(())
}

/// ln of the Bin(m, p) probability mass at j, with p supplied as (ln p, ln(1-p)).
fn ln_binom_pmf(m: u64, j: u64, ln_p: f64, ln_q: f64) -> f64 {
    let mut v = ln_factorial(m) - ln_factorial(j) - ln_factorial(m - j);
    if j > 0 {
        v += j as f64 * ln_p;
    }
    if m - j > 0 {
        v += (m - j) as f64 * ln_q;
    }
    v
}

/// Occupancy pmf over the number of distinct cells hit by iid uniform
/// placements into `cells` cells; advances `occ` by one placement in place.
/// `occ[k] = P(K = k)` and `occ` never grows past `cells + 1` entries.
fn occupancy_step(occ: &mut Vec<f64>, cells: u64) {
    let c = cells as f64;
    if (occ.len() as u64) <= cells {
        occ.push(0.0);
    }
    // New placement either repeats one of the k occupied cells or opens a
    // fresh one; update downward so each old value is read before overwrite.
    for k in (1..occ.len()).rev() {
        occ[k] = occ[k] * (k as f64 / c) + occ[k - 1] * ((c - (k - 1) as f64) / c);
    }
    occ[0] = 0.0;
}

/// Transition row `P(h -> h + j)` for `j = 0..=m` plus the escape probability
/// `1 - P(h -> h)` computed in log space.
///
/// Although each uninformed node is hit with marginal probability
/// `1 - (1 - a_N)^h`, the hits share the informed nodes' occupied cell set
/// and are only conditionally independent. Given K occupied cells the newly
/// informed count is Bin(m, K * a_N), so the row is the occupancy mixture of
/// those binomials.
fn mixture_row(m: u64, occ: &[f64], config: &NetworkConfig) -> (Vec<f64>, f64) {
    let a = config.cell_prob;
    let cells = config.cell_count;
    let mut row = vec![0.0f64; m as usize + 1];
    let mut escape = 0.0f64;
    for (k, &w) in occ.iter().enumerate() {
        if w < 1e-16 {
            continue;
        }
        let p = (k as f64 * a).min(1.0);
        if k as u64 == cells || p >= 1.0 {
            // Every cell is occupied: all uninformed nodes are reached.
            row[m as usize] += w;
            escape += w;
            continue;
        }
        let ln_p = p.ln();
        let ln_q = (-p).ln_1p();
        for j in 0..=m {
            row[j as usize] += w * ln_binom_pmf(m, j, ln_p, ln_q).exp();
        }
        escape += w * -(m as f64 * ln_q).exp_m1();
    }
    (row, escape)
}

/// Transition rows for h = 1..N-1, indexed by h; rows[0] is unused.
fn transition_rows(config: &NetworkConfig) -> Vec<(Vec<f64>, f64)> {
    let n = config.n_nodes as u64;
    let mut rows = Vec::with_capacity(config.n_nodes);
    rows.push((Vec::new(), 0.0));
    let mut occ = vec![0.0f64, 1.0]; // one informed node occupies one cell
    for h in 1..n {
        rows.push(mixture_row(n - h, &occ, config));
        if h + 1 < n {
            occupancy_step(&mut occ, config.cell_count);
        }
    }
    rows
}

/// Expected flooding time from one informed node, solved exactly on the
/// absorbing informed-count chain.
///
/// The chain only moves upward, so expectations are back-substituted from
/// h = N-1 down: `E_h = (1 + sum_{j>=1} P(h -> h+j) E_{h+j}) / (1 - P(h -> h))`.
pub fn exact_expected_flooding_time(config: &NetworkConfig) -> Result<f64> {
    check_chain_cap(config)?;
    let n = config.n_nodes as u64;
    let rows = transition_rows(config);
    let mut expect = vec![0.0f64; config.n_nodes + 1]; // expect[h], expect[n] = 0
    for h in (1..n).rev() {
        let m = n - h;
        let (row, escape) = &rows[h as usize];
        // a_N > 0 and h >= 1 ensure the self-loop is never 1.
        let mut acc = 0.0;
        for j in 1..=m as usize {
            acc += row[j] * expect[h as usize + j];
        }
        expect[h as usize] = (1.0 + acc) / escape;
    }
    Ok(expect[1])
}

/// `P(T_N <= t)` for `t = 1..=max_steps`, by iterating the informed-count
/// distribution forward. Shares only the transition rows with the
/// back-substitution solver; the time recursion is independent.
pub fn exact_flooding_time_cdf(config: &NetworkConfig, max_steps: u64) -> Result<Vec<f64>> {
    check_chain_cap(config)?;
    let n = config.n_nodes as u64;
    let rows = transition_rows(config);

    let mut dist = vec![0.0f64; config.n_nodes + 1];
    dist[1] = 1.0;
    let mut absorbed = 0.0f64;
    let mut cdf = Vec::with_capacity(max_steps as usize);
    for _ in 0..max_steps {
        let mut next = vec![0.0f64; config.n_nodes + 1];
        for h in 1..n {
            let mass = dist[h as usize];
            if mass == 0.0 {
                continue;
            }
            for (j, &w) in rows[h as usize].0.iter().enumerate() {
                next[h as usize + j] += mass * w;
            }
        }
        absorbed += next[n as usize];
        next[n as usize] = 0.0;
        dist = next;
        cdf.push(absorbed);
    }
    Ok(cdf)
}

/// Smallest t with `P(T_N <= t) >= q`, from the exact chain.
pub fn exact_flooding_time_quantile(config: &NetworkConfig, q: f64) -> Result<u64> {
    if !(0.0 < q && q < 1.0) {
        return Err(Error::Parameter(format!("quantile level {q} outside (0, 1)")));
    }
    // Generous cap: far beyond the expectation the tail is geometric.
    let mean = exact_expected_flooding_time(config)?;
    let cap = ((mean * 200.0) as u64).max(10_000);
    let cdf = exact_flooding_time_cdf(config, cap)?;
    for (i, &p) in cdf.iter().enumerate() {
        if p >= q {
            return Ok(i as u64 + 1);
        }
    }
    Err(Error::Calibration(format!(
        "quantile {q} not reached within {cap} steps"
    )))
}
