//! Closed-form bounds and envelopes: broadcast capacity upper bound, average
//! delay lower bound, the three flooding-time bounds over expander segments
//! and success profiles, regime envelopes with their piecewise rate and
//! profile functions, and the supporting concentration inequalities.
//!
//! Everything here is an exact evaluation of a formula. Asymptotic envelopes
//! carry an explicit multiplicative constant so a calibration step can scale
//! them without touching the shape.

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::meg::ExpanderSegment;
use crate::mobility::{NetworkConfig, Regime};

/// A bound value together with the regime it was evaluated in and an echo of
/// the inputs that produced it.
#[derive(Debug, Serialize)]
pub struct BoundReport {
    pub value: f64,
    pub regime: Regime,
    pub formula_id: &'static str,
    pub inputs: serde_json::Value,
}

/// Per-step success probability p(h), defined for h in 1..=domain_hi.
pub struct SuccessProfile {
    p_of_h: Box<dyn Fn(u64) -> f64 + Send + Sync>,
    domain_hi: u64,
}

impl SuccessProfile {
    pub fn new(p_of_h: Box<dyn Fn(u64) -> f64 + Send + Sync>, domain_hi: u64) -> Self {
        SuccessProfile { p_of_h, domain_hi }
    }

    /// Constant profile p(h) = p on 1..=domain_hi.
    pub fn uniform(p: f64, domain_hi: u64) -> Self {
        SuccessProfile::new(Box::new(move |_| p), domain_hi)
    }

    /// Profile with no domain; usable only where an empty profile is allowed.
    pub fn empty() -> Self {
        SuccessProfile::new(Box::new(|_| 1.0), 0)
    }

    pub fn domain_hi(&self) -> u64 {
        self.domain_hi
    }

    pub fn eval(&self, h: u64) -> Result<f64> {
        if h < 1 || h > self.domain_hi {
            return Err(Error::Parameter(format!(
                "h = {h} outside profile domain 1..={}",
                self.domain_hi
            )));
        }
        let p = (self.p_of_h)(h);
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Parameter(format!(
                "profile value {p} at h = {h} outside (0, 1]"
            )));
        }
        Ok(p)
    }
}

/// Parameters of the geometric-sum tail bound: independent geometric
/// variables with success probabilities `ps` (nondecreasing), deviation
/// parameters c and t.
#[derive(Clone, Debug, Serialize)]
pub struct GeometricTailSpec {
    ps: Vec<f64>,
    c: f64,
    t: f64,
}

impl GeometricTailSpec {
    pub fn new(ps: Vec<f64>, c: f64, t: f64) -> Result<Self> {
        if ps.is_empty() {
            return Err(Error::Parameter("need at least one probability".into()));
        }
        if ps.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Parameter("probabilities must be nondecreasing".into()));
        }
        if !(ps[0] > 0.0) || ps.iter().any(|&p| p > 1.0) {
            return Err(Error::Parameter("probabilities must lie in (0, 1]".into()));
        }
        if !(c >= 2.0) {
            return Err(Error::Parameter(format!("c must be at least 2, got {c}")));
        }
        if !(t >= 0.0) {
            return Err(Error::Parameter(format!("t must be nonnegative, got {t}")));
        }
        Ok(GeometricTailSpec { ps, c, t })
    }

    /// Mean of the sum: sum of 1/p_i.
    pub fn mu(&self) -> f64 {
        self.ps.iter().map(|p| 1.0 / p).sum()
    }

    pub fn ps(&self) -> &[f64] {
        &self.ps
    }
}

/// Configurable constants for the envelope machinery. The asymptotic results
/// fix only shapes, so every multiplicative constant is a knob with a
/// documented default.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundConstants {
    /// Coefficient of the (N-h)h/N^alpha success profile (regime alpha >= 2).
    pub c1_tiny: f64,
    /// Coefficient of the exponential term in the 1 <= alpha < 2 profile.
    pub c4_mid: f64,
    /// Domain cutoff multiplier for the 1 <= alpha < 2 profile:
    /// h1 = beta N^(alpha-1) log N.
    pub beta: f64,
    /// Expansion rate on the low-h branch of the dense piecewise k(h).
    pub c3_dense: f64,
    /// Expansion rate coefficient on the high-h branch of the dense k(h).
    pub c4_dense: f64,
    /// Floor applied when clamping profile values into (0, 1].
    pub min_prob: f64,
}

impl BoundConstants {
    /// Defaults: c1 = e^(-c/4) (the profile's limiting coefficient sandwich),
    /// c4 = 1.1 (the 1 + epsilon slack with epsilon = 0.1), beta = 3/c,
    /// dense rates 0.5c.
    pub fn defaults_for(config: &NetworkConfig) -> Self {
        let c = config.c();
        BoundConstants {
            c1_tiny: (-c / 4.0).exp(),
            c4_mid: 1.1,
            beta: 3.0 / c,
            c3_dense: 0.5 * c,
            c4_dense: 0.5 * c,
            // A fixed positive floor: the clamped region contributes
            // O(N^(alpha-1)) to the geometric sums, below the envelope term.
            min_prob: 0.01,
        }
    }
}

/// Broadcast capacity upper bound:
/// lambda <= (1 / (2(N-1))) (1 - (1 - a_N)^(N-1)).
pub fn capacity_upper_bound(config: &NetworkConfig) -> BoundReport {
    let n = config.n_nodes();
    let value = capacity_formula(n, config.cell_prob());
    BoundReport {
        value,
        regime: config.regime(),
        formula_id: "capacity_ub",
        inputs: json!({
            "n": n,
            "alpha": config.alpha(),
            "c": config.c(),
            "cell_prob": config.cell_prob(),
        }),
    }
}

/// The capacity bound as a function of (N, a) directly.
pub fn capacity_formula(n_nodes: usize, a: f64) -> f64 {
    let m = (n_nodes - 1) as f64;
    -(m * (-a).ln_1p()).exp_m1() / (2.0 * m)
}

/// Average delay lower bound at a chosen step count:
/// E[T_N] >= t (1 - (1/N)(1 + (N-1) a_N)^t).
///
/// Valid for every integer t >= 1; the caller picks t and may get a negative
/// value for overlarge t.
pub fn delay_lower_bound(config: &NetworkConfig, t: u64) -> f64 {
    let n = config.n_nodes() as f64;
    let growth = 1.0 + (n - 1.0) * config.cell_prob();
    t as f64 * (1.0 - growth.powf(t as f64) / n)
}

/// Delay lower bound at the optimizing step count
/// t = floor( (1/2) log N / log(1 + (N-1) a_N) ), with the dense regime
/// using (alpha/2) log N in the numerator. t is floored to an integer >= 1;
/// the bound holds for every integer t so flooring is safe.
pub fn delay_lower_bound_best(config: &NetworkConfig) -> BoundReport {
    let n = config.n_nodes() as f64;
    let growth = 1.0 + (n - 1.0) * config.cell_prob();
    let numerator = match config.regime() {
        Regime::Sparse => 0.5 * n.ln(),
        Regime::Dense => 0.5 * config.alpha() * n.ln(),
    };
    let t = ((numerator / growth.ln()).floor() as u64).max(1);
    let value = delay_lower_bound(config, t).max(0.0);
    BoundReport {
        value,
        regime: config.regime(),
        formula_id: "delay_lb",
        inputs: json!({
            "n": config.n_nodes(),
            "alpha": config.alpha(),
            "c": config.c(),
            "t": t,
        }),
    }
}

/// Flooding-time bound over contiguous expander segments:
/// sum of log(h_i / h_(i-1)) / log(1 + k_i).
pub fn flooding_bound_expander(segments: &[ExpanderSegment]) -> Result<f64> {
    if segments.is_empty() {
        return Ok(0.0);
    }
    if segments[0].h_lo < 1 {
        return Err(Error::Parameter(
            "first segment must start at h_lo >= 1".into(),
        ));
    }
    for w in segments.windows(2) {
        if w[0].h_hi != w[1].h_lo {
            return Err(Error::Parameter(format!(
                "segments not contiguous: [{}, {}] then [{}, {}]",
                w[0].h_lo, w[0].h_hi, w[1].h_lo, w[1].h_hi
            )));
        }
    }
    Ok(segments
        .iter()
        .map(|s| (s.h_hi as f64 / s.h_lo as f64).ln() / (1.0 + s.k).ln())
        .sum())
}

/// Flooding-time bound from a per-step success profile:
/// sum over h = 1..N-1 of 1/p(h).
pub fn flooding_bound_geometric(profile: &SuccessProfile, n_nodes: usize) -> Result<f64> {
    let hi = n_nodes as u64 - 1;
    if profile.domain_hi() < hi {
        return Err(Error::Parameter(format!(
            "profile domain ends at {} but N - 1 = {hi}",
            profile.domain_hi()
        )));
    }
    let mut sum = 0.0;
    for h in 1..=hi {
        sum += 1.0 / profile.eval(h)?;
    }
    Ok(sum)
}

/// Hybrid flooding-time bound: geometric phase up to h1, expander segments
/// from h1 on. The profile's domain must end exactly where the first segment
/// starts.
pub fn flooding_bound_hybrid(
    profile: &SuccessProfile,
    segments: &[ExpanderSegment],
) -> Result<f64> {
    if let Some(first) = segments.first() {
        if profile.domain_hi() != first.h_lo {
            return Err(Error::Parameter(format!(
                "profile ends at {} but first segment starts at {}",
                profile.domain_hi(),
                first.h_lo
            )));
        }
    }
    let mut sum = 0.0;
    for h in 1..=profile.domain_hi() {
        sum += 1.0 / profile.eval(h)?;
    }
    Ok(sum + flooding_bound_expander(segments)?)
}

/// Piecewise expansion rate for the dense regime (0 < alpha < 1):
/// k(h) = c3 N^(1-alpha) for h <= N^alpha, then c4 N/h up to N/2.
pub fn expander_rate_dense(
    config: &NetworkConfig,
    h: u64,
    constants: &BoundConstants,
) -> Result<f64> {
    if config.regime() != Regime::Dense {
        return Err(Error::Parameter(format!(
            "dense expansion rate needs alpha < 1, got {}",
            config.alpha()
        )));
    }
    let n = config.n_nodes() as f64;
    if h < 1 || (h as f64) > n / 2.0 {
        return Err(Error::Parameter(format!(
            "h = {h} outside 1..=N/2 for N = {}",
            config.n_nodes()
        )));
    }
    let breakpoint = n.powf(config.alpha());
    Ok(if (h as f64) <= breakpoint {
        constants.c3_dense * n.powf(1.0 - config.alpha())
    } else {
        constants.c4_dense * n / h as f64
    })
}

/// Contiguous segment cover of [1, N/2] under the dense piecewise k(h): one
/// segment over the constant-rate branch, then doubling segments each using
/// the rate at its upper end (the branch minimum on the segment).
pub fn dense_expander_segments(
    config: &NetworkConfig,
    constants: &BoundConstants,
) -> Result<Vec<ExpanderSegment>> {
    if config.regime() != Regime::Dense {
        return Err(Error::Parameter(format!(
            "dense segments need alpha < 1, got {}",
            config.alpha()
        )));
    }
    let n = config.n_nodes() as u64;
    let half = n / 2;
    let breakpoint = ((config.n_nodes() as f64).powf(config.alpha()).ceil() as u64).min(half);
    let mut segments = Vec::new();
    if breakpoint > 1 {
        segments.push(ExpanderSegment::new(
            1,
            breakpoint,
            expander_rate_dense(config, 1, constants)?,
        )?);
    }
    let mut h = breakpoint.max(1);
    while h < half {
        let hi = (2 * h).min(half);
        segments.push(ExpanderSegment::new(
            h,
            hi,
            expander_rate_dense(config, hi, constants)?,
        )?);
        h = hi;
    }
    Ok(segments)
}

/// Regime-correct success profile for alpha >= 1, with values capped at 1
/// and nonpositive values floored at min_prob.
///
/// alpha >= 2: p(h) = c1 (N-h) h / N^alpha over 1..N-1.
/// 1 <= alpha < 2: p(h) = 1 - c4 exp(-c h / N^(alpha-1)) over
/// 1..beta N^(alpha-1) log N.
pub fn success_profile(config: &NetworkConfig, constants: &BoundConstants) -> Result<SuccessProfile> {
    if config.regime() != Regime::Sparse {
        return Err(Error::Parameter(format!(
            "success profile needs alpha >= 1, got {} (dense uses the expander path)",
            config.alpha()
        )));
    }
    let n = config.n_nodes() as f64;
    let alpha = config.alpha();
    // Floor only nonpositive values: small positive probabilities are real
    // and carry the harmonic growth of the geometric sums.
    let clamp = {
        let floor = constants.min_prob;
        move |p: f64| if p <= 0.0 { floor } else { p.min(1.0) }
    };
    if alpha >= 2.0 {
        let scale = constants.c1_tiny / n.powf(alpha);
        Ok(SuccessProfile::new(
            Box::new(move |h| {
                let h = h as f64;
                clamp(scale * (n - h) * h)
            }),
            config.n_nodes() as u64 - 1,
        ))
    } else {
        let c4 = constants.c4_mid;
        let rate = config.c() / n.powf(alpha - 1.0);
        let domain_hi = (constants.beta * n.powf(alpha - 1.0) * n.ln())
            .ceil()
            .max(1.0) as u64;
        Ok(SuccessProfile::new(
            Box::new(move |h| clamp(1.0 - c4 * (-rate * h as f64).exp())),
            domain_hi.min(config.n_nodes() as u64 - 1),
        ))
    }
}

/// Flooding-time envelope: constant * N^(alpha-1) log N in the sparse
/// regime, constant * max(1, log log N) in the dense regime. The max(1, .)
/// guard keeps the dense formula meaningful for tiny N.
pub fn iid_flooding_envelope(config: &NetworkConfig, constant: f64) -> BoundReport {
    let n = config.n_nodes() as f64;
    let value = match config.regime() {
        Regime::Sparse => constant * n.powf(config.alpha() - 1.0) * n.ln(),
        Regime::Dense => constant * n.ln().ln().max(1.0),
    };
    BoundReport {
        value,
        regime: config.regime(),
        formula_id: "flooding_envelope",
        inputs: json!({
            "n": config.n_nodes(),
            "alpha": config.alpha(),
            "c": config.c(),
            "constant": constant,
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Tail {
    Upper,
    Lower,
}

/// The entropy-like exponent H(a) = 1 - a + a log a, with H(0) = 1 by
/// continuity.
pub fn entropy_h(a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        1.0 - a + a * a.ln()
    }
}

/// Chernoff bound on a Bin(n, p) tail: P(X >= k) <= exp(-mu H(k/mu)) for
/// k >= mu, and P(X <= k) <= exp(-mu H(k/mu)) for k <= mu, with mu = np.
pub fn binomial_chernoff(n: u64, p: f64, k: f64, tail: Tail) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Parameter(format!("p = {p} outside (0, 1]")));
    }
    let mu = n as f64 * p;
    match tail {
        Tail::Upper if k < mu => {
            return Err(Error::Parameter(format!(
                "upper tail needs k >= mu, got k = {k}, mu = {mu}"
            )));
        }
        Tail::Lower if k > mu => {
            return Err(Error::Parameter(format!(
                "lower tail needs k <= mu, got k = {k}, mu = {mu}"
            )));
        }
        _ => {}
    }
    Ok((-mu * entropy_h(k / mu)).exp())
}

/// Tail bound for a sum of independent geometric variables:
/// P(S > c (mu + t)) <= (1 - p_1)^t exp(-(2c - 3) n / 4).
pub fn geometric_sum_tail(spec: &GeometricTailSpec) -> f64 {
    let n = spec.ps().len() as f64;
    let p1 = spec.ps()[0];
    let base = (-(2.0 * spec.c - 3.0) * n / 4.0).exp();
    if p1 >= 1.0 {
        if spec.t >= 1.0 {
            return 0.0;
        }
        return base;
    }
    (spec.t * (1.0 - p1).ln()).exp() * base
}

/// Envelope shape N^power (log N)^log_pow (log log N)^loglog_pow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Shape {
    pub power: f64,
    pub log_pow: f64,
    pub loglog_pow: f64,
}

impl Shape {
    pub fn eval(&self, n: f64) -> f64 {
        n.powf(self.power)
            * n.ln().powf(self.log_pow)
            * n.ln().ln().max(1.0).powf(self.loglog_pow)
    }
}

/// The four scaling envelopes of a regime: capacity upper bound, FCFS
/// flooding capacity, delay lower bound, FCFS flooding delay.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalingClass {
    pub regime: Regime,
    pub capacity: Shape,
    pub fcfs_capacity: Shape,
    pub delay_lb: Shape,
    pub fcfs_delay: Shape,
}

/// Symbolic scaling rows per regime. The alpha = 1 boundary is sparse.
pub fn scaling_class(alpha: f64) -> Result<ScalingClass> {
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    let shape = |power, log_pow, loglog_pow| Shape {
        power,
        log_pow,
        loglog_pow,
    };
    Ok(if alpha >= 1.0 {
        ScalingClass {
            regime: Regime::Sparse,
            capacity: shape(-alpha, 0.0, 0.0),
            fcfs_capacity: shape(-alpha, -1.0, 0.0),
            delay_lb: shape(alpha - 1.0, 1.0, 0.0),
            fcfs_delay: shape(alpha - 1.0, 1.0, 0.0),
        }
    } else {
        ScalingClass {
            regime: Regime::Dense,
            capacity: shape(-1.0, 0.0, 0.0),
            fcfs_capacity: shape(-1.0, 0.0, -1.0),
            delay_lb: shape(0.0, 0.0, 0.0),
            fcfs_delay: shape(0.0, 0.0, 1.0),
        }
    })
}
