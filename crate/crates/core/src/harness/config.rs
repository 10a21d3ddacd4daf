//! Flat key-value config files with `[section]` headers. Blank lines and
//! `#` comments are ignored; keys mirror the parameter struct fields.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::sweep::{Metric, SweepSpec};

/// `[network]` section: n_nodes, alpha, c.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSection {
    pub n_nodes: usize,
    pub alpha: f64,
    pub c: f64,
}

/// `[fcfs]` section: lambda, service_slots, horizon_slots, warmup_slots.
#[derive(Clone, Debug, PartialEq)]
pub struct FcfsSection {
    pub lambda: Option<f64>,
    pub service_slots: Option<u64>,
    pub horizon_slots: Option<u64>,
    pub warmup_slots: Option<u64>,
}

/// Parsed config file; absent sections stay `None`.
#[derive(Clone, Debug, Default)]
pub struct FileConfig {
    pub network: Option<NetworkSection>,
    pub fcfs: Option<FcfsSection>,
    pub sweep: Option<SweepSpec>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)?;
        FileConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<FileConfig> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim().to_string();
                if !matches!(name.as_str(), "network" | "fcfs" | "sweep") {
                    return Err(Error::Config(format!(
                        "line {}: unknown section [{name}]",
                        lineno + 1
                    )));
                }
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected key = value, got '{line}'",
                    lineno + 1
                )));
            };
            let Some(section) = current.as_ref() else {
                return Err(Error::Config(format!(
                    "line {}: key outside any section",
                    lineno + 1
                )));
            };
            sections
                .get_mut(section)
                .unwrap()
                .insert(key.trim().to_string(), value.trim().to_string());
        }

        let mut out = FileConfig::default();
        if let Some(kv) = sections.get("network") {
            check_keys(kv, &["n_nodes", "alpha", "c"], "network")?;
            out.network = Some(NetworkSection {
                n_nodes: req(kv, "network", "n_nodes")?,
                alpha: req(kv, "network", "alpha")?,
                c: req(kv, "network", "c")?,
            });
        }
        if let Some(kv) = sections.get("fcfs") {
            check_keys(
                kv,
                &["lambda", "service_slots", "horizon_slots", "warmup_slots"],
                "fcfs",
            )?;
            out.fcfs = Some(FcfsSection {
                lambda: opt(kv, "fcfs", "lambda")?,
                service_slots: opt(kv, "fcfs", "service_slots")?,
                horizon_slots: opt(kv, "fcfs", "horizon_slots")?,
                warmup_slots: opt(kv, "fcfs", "warmup_slots")?,
            });
        }
        if let Some(kv) = sections.get("sweep") {
            check_keys(
                kv,
                &["alphas", "n_values", "c", "trials_per_point", "seed", "metric"],
                "sweep",
            )?;
            let alphas = req_list::<f64>(kv, "sweep", "alphas")?;
            let n_values = req_list::<usize>(kv, "sweep", "n_values")?;
            let metric_name: String = req(kv, "sweep", "metric")?;
            let metric = metric_name
                .parse::<Metric>()
                .map_err(|e| Error::Config(format!("[sweep] metric: {e}")))?;
            out.sweep = Some(SweepSpec::new(
                alphas,
                n_values,
                req(kv, "sweep", "c")?,
                req(kv, "sweep", "trials_per_point")?,
                req(kv, "sweep", "seed")?,
                metric,
            )?);
        }
        Ok(out)
    }
}

fn check_keys(kv: &BTreeMap<String, String>, allowed: &[&str], section: &str) -> Result<()> {
    for key in kv.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::Config(format!("[{section}] unknown key '{key}'")));
        }
    }
    Ok(())
}

fn req<T: std::str::FromStr>(kv: &BTreeMap<String, String>, section: &str, key: &str) -> Result<T> {
    let raw = kv
        .get(key)
        .ok_or_else(|| Error::Config(format!("[{section}] missing key '{key}'")))?;
    raw.parse()
        .map_err(|_| Error::Config(format!("[{section}] invalid value for '{key}': '{raw}'")))
}

fn opt<T: std::str::FromStr>(
    kv: &BTreeMap<String, String>,
    section: &str,
    key: &str,
) -> Result<Option<T>> {
    match kv.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("[{section}] invalid value for '{key}': '{raw}'"))),
    }
}

fn req_list<T: std::str::FromStr>(
    kv: &BTreeMap<String, String>,
    section: &str,
    key: &str,
) -> Result<Vec<T>> {
    let raw = kv
        .get(key)
        .ok_or_else(|| Error::Config(format!("[{section}] missing key '{key}'")))?;
    raw.split(',')
        .map(|item| {
            item.trim().parse().map_err(|_| {
                Error::Config(format!("[{section}] invalid list item '{item}' for '{key}'"))
            })
        })
        .collect()
}
