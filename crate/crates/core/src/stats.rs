//! Small statistical toolkit shared by the simulators and the experiment
//! harness: sample summaries, ordinary least squares, and a chi-square
//! goodness-of-fit test.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Sample mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

pub fn summarize(samples: &[f64]) -> Result<Summary> {
    if samples.is_empty() {
        return Err(Error::Parameter("cannot summarize an empty sample".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let std_error = if samples.len() < 2 {
        0.0
    } else {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Ok(Summary {
        mean,
        std_error,
        count: samples.len(),
    })
}

/// Simple linear regression y = intercept + slope * x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_std_error: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<Regression> {
    if xs.len() != ys.len() {
        return Err(Error::Parameter(format!(
            "mismatched lengths {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Fit("need at least 2 points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("singular design: all x values equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    let slope_std_error = if xs.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(Regression {
        slope,
        intercept,
        r_squared,
        slope_std_error,
    })
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Clone, Copy, Debug)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Chi-square GOF of observed counts against expected counts. Adjacent bins
/// are merged until every expected count is at least 5.
pub fn chi_square_gof(observed: &[f64], expected: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != expected.len() {
        return Err(Error::Parameter(format!(
            "mismatched lengths {} vs {}",
            observed.len(),
            expected.len()
        )));
    }
    if expected.iter().any(|&e| e < 0.0) {
        return Err(Error::Parameter("negative expected count".into()));
    }
    let mut obs_bins = Vec::new();
    let mut exp_bins = Vec::new();
    let mut o_acc = 0.0;
    let mut e_acc = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        o_acc += o;
        e_acc += e;
        if e_acc >= 5.0 {
            obs_bins.push(o_acc);
            exp_bins.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    // Fold any undersized remainder into the last bin.
    if e_acc > 0.0 || o_acc > 0.0 {
        if let (Some(lo), Some(le)) = (obs_bins.last_mut(), exp_bins.last_mut()) {
            *lo += o_acc;
            *le += e_acc;
        } else {
            obs_bins.push(o_acc);
            exp_bins.push(e_acc);
        }
    }
    if obs_bins.len() < 2 {
        return Err(Error::Parameter(
            "fewer than 2 usable bins after merging".into(),
        ));
    }
    let statistic: f64 = obs_bins
        .iter()
        .zip(&exp_bins)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let degrees_of_freedom = obs_bins.len() - 1;
    let dist = ChiSquared::new(degrees_of_freedom as f64)
        .map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        degrees_of_freedom,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

/// Empirical quantile: smallest sample value v with fraction(samples <= v)
/// >= q. Input need not be sorted.
pub fn empirical_quantile(samples: &[u64], q: f64) -> Result<u64> {
    if samples.is_empty() {
        return Err(Error::Parameter("cannot take quantiles of an empty sample".into()));
    }
    if !(0.0 < q && q < 1.0) {
        return Err(Error::Parameter(format!("quantile level {q} outside (0, 1)")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.saturating_sub(1).min(sorted.len() - 1)])
}
