//! Scaling-law fits of sweep results onto the three envelope shapes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::linear_fit;

/// The three fit models. Model choice is always explicit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FitModel {
    /// y = constant * N^exponent; least squares of log y on log N.
    Power,
    /// y = constant * N^exponent * log N; least squares of
    /// (log y - log log N) on log N.
    PowerLog,
    /// y = intercept + constant * log log N; exponent reported as 0.
    LogLog,
}

impl std::str::FromStr for FitModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<FitModel, String> {
        match s {
            "power" => Ok(FitModel::Power),
            "power_log" | "power-log" => Ok(FitModel::PowerLog),
            "loglog" => Ok(FitModel::LogLog),
            _ => Err(format!(
                "unknown model '{s}' (expected power, power_log, or loglog)"
            )),
        }
    }
}

/// Fitted shape. For the power models `r_squared` is computed on the
/// log-transformed residuals.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    pub exponent: f64,
    pub constant: f64,
    pub r_squared: f64,
}

pub fn fit_scaling(n_values: &[f64], ys: &[f64], model: FitModel) -> Result<FitResult> {
    if n_values.len() != ys.len() {
        return Err(Error::Parameter(format!(
            "mismatched lengths {} vs {}",
            n_values.len(),
            ys.len()
        )));
    }
    if n_values.len() < 3 {
        return Err(Error::Fit("need at least 3 points".into()));
    }
    if n_values.iter().any(|&n| n <= 1.0) || ys.iter().any(|&y| y <= 0.0) {
        return Err(Error::Fit(
            "fit needs N > 1 and strictly positive metric values".into(),
        ));
    }
    match model {
        FitModel::Power => {
            let xs: Vec<f64> = n_values.iter().map(|n| n.ln()).collect();
            let ty: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
            let reg = linear_fit(&xs, &ty)?;
            Ok(FitResult {
                model,
                exponent: reg.slope,
                constant: reg.intercept.exp(),
                r_squared: reg.r_squared,
            })
        }
        FitModel::PowerLog => {
            let xs: Vec<f64> = n_values.iter().map(|n| n.ln()).collect();
            let ty: Vec<f64> = n_values
                .iter()
                .zip(ys)
                .map(|(n, y)| y.ln() - n.ln().ln())
                .collect();
            let reg = linear_fit(&xs, &ty)?;
            Ok(FitResult {
                model,
                exponent: reg.slope,
                constant: reg.intercept.exp(),
                r_squared: reg.r_squared,
            })
        }
        FitModel::LogLog => {
            let xs: Vec<f64> = n_values.iter().map(|n| n.ln().ln()).collect();
            let reg = linear_fit(&xs, ys)?;
            Ok(FitResult {
                model,
                exponent: 0.0,
                constant: reg.slope,
                r_squared: reg.r_squared,
            })
        }
    }
}
