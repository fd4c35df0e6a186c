//! Experiment configuration and its two on-disk forms.
//!
//! A config is either a JSON document mirroring [`ExperimentConfig`] or flat
//! `key = value` text where dotted keys address nested fields:
//!
//! ```text
//! # default study, desk scale
//! n_taps = 60
//! sparsity_list = 3, 6
//! snr_db_list = 5, 10, 20
//! stop.max_iterations = 5000
//! threshold_c_by_snr.5 = 1e-4
//! ```
//!
//! The key-value form is converted to the JSON value tree and then goes
//! through the same deserializer, so both forms accept exactly the same keys.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Number, Value};

use crate::algorithms::{AlgorithmSpec, StopCriterion, ValidationLevel, Variant};
use crate::error::{Error, Result};
use crate::metrics::Modulation;
use crate::signal_model::noise_power_for_snr;

/// Whether Monte-Carlo trials honour the delta tolerance of the stop rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    /// Every trial runs `stop.max_iterations` updates.
    #[default]
    Fixed,
    /// Trials end as soon as `|w(n+1) - w(n)|^2 <= stop.delta_tolerance`.
    Tolerance,
}

/// `C` threshold per received SNR, keyed by dB value.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdBySnr(Vec<(f64, f64)>);

impl ThresholdBySnr {
    pub fn new(entries: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut v: Vec<_> = entries.into_iter().collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self(v)
    }

    pub fn get(&self, snr_db: f64) -> Option<f64> {
        self.0
            .iter()
            .find(|(k, _)| k == &snr_db || (k - snr_db).abs() < 1e-9)
            .map(|&(_, c)| c)
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.0
    }
}

impl Default for ThresholdBySnr {
    fn default() -> Self {
        Self::new([(5.0, 1e-4), (10.0, 1e-5), (20.0, 1e-5)])
    }
}

impl Serialize for ThresholdBySnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, f64> = self.0.iter().map(|(k, c)| (format_snr(*k), *c)).collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ThresholdBySnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = BTreeMap::<String, f64>::deserialize(d)?;
        let entries = raw
            .into_iter()
            .map(|(k, c)| parse_snr(&k).map(|snr| (snr, c)).map_err(serde::de::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self::new(entries))
    }
}

fn format_snr(snr: f64) -> String {
    if snr == f64::INFINITY {
        "inf".into()
    } else {
        snr.to_string()
    }
}

fn parse_snr(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim().trim_end_matches("dB").trim_end_matches("db").trim();
    match t {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("bad SNR value '{s}'")),
    }
}

/// SNR lists accept numbers or the string `"inf"` (noise-free).
mod snr_list {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let out: Vec<Value> = v
            .iter()
            .map(|&x| {
                Number::from_f64(x)
                    .map(Value::Number)
                    .unwrap_or_else(|| Value::String(format_snr(x)))
            })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        Vec::<Entry>::deserialize(d)?
            .into_iter()
            .map(|e| match e {
                Entry::Num(v) => Ok(v),
                Entry::Text(t) => parse_snr(&t).map_err(serde::de::Error::custom),
            })
            .collect()
    }
}

/// Scenario grid, algorithm parameters and output settings of one study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_taps: usize,
    pub sparsity_list: Vec<usize>,
    #[serde(with = "snr_list")]
    pub snr_db_list: Vec<f64>,
    pub runs: usize,
    pub algorithms: Vec<Variant>,
    pub stop: StopCriterion,
    pub horizon: Horizon,
    pub threshold_c_by_snr: ThresholdBySnr,
    pub mu: f64,
    pub mu_max: f64,
    /// `rho_za = rho_za_factor * sigma_n^2`.
    pub rho_za_factor: f64,
    /// `rho_rza = rho_rza_factor * sigma_n^2`.
    pub rho_rza_factor: f64,
    pub eps_rza: f64,
    pub beta: f64,
    pub unnormalized_rza: bool,
    pub validation: ValidationLevel,
    /// Training power `P0`.
    pub signal_power: f64,
    pub es_n0_range_db: [f64; 2],
    pub es_n0_step_db: f64,
    pub modulations: Vec<Modulation>,
    /// Scenario whose steady-state estimators feed the BER sweep.
    pub ber_snr_db: f64,
    pub ber_sparsity: usize,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_taps: 60,
            sparsity_list: vec![3, 6],
            snr_db_list: vec![5.0, 10.0, 20.0],
            runs: 100,
            algorithms: Variant::ALL.to_vec(),
            stop: StopCriterion::default(),
            horizon: Horizon::Fixed,
            threshold_c_by_snr: ThresholdBySnr::default(),
            mu: 0.2,
            mu_max: 2.0,
            rho_za_factor: 0.0002,
            rho_rza_factor: 0.002,
            eps_rza: 20.0,
            beta: AlgorithmSpec::DEFAULT_BETA,
            unnormalized_rza: false,
            validation: ValidationLevel::Paper,
            signal_power: 1.0,
            es_n0_range_db: [12.0, 30.0],
            es_n0_step_db: 1.0,
            modulations: Modulation::TABLE.to_vec(),
            ber_snr_db: 5.0,
            ber_sparsity: 3,
            master_seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn noise_power(&self, snr_db: f64) -> f64 {
        noise_power_for_snr(snr_db, self.signal_power)
    }

    /// Concrete parameters of `variant` at `snr_db`; penalty weights scale
    /// with the noise power of that SNR.
    pub fn resolve_spec(&self, variant: Variant, snr_db: f64) -> Result<AlgorithmSpec> {
        let sigma2 = self.noise_power(snr_db);
        let threshold_c = match self.threshold_c_by_snr.get(snr_db) {
            Some(c) => c,
            None if variant.is_variable() => {
                return Err(Error::config(format!(
                    "no threshold_c_by_snr entry for {} dB (needed by {variant})",
                    format_snr(snr_db)
                )))
            }
            None => AlgorithmSpec::new(variant).threshold_c,
        };
        Ok(AlgorithmSpec::new(variant)
            .with_mu(self.mu)
            .with_mu_max(self.mu_max)
            .with_rho_za(self.rho_za_factor * sigma2)
            .with_rho_rza(self.rho_rza_factor * sigma2)
            .with_eps_rza(self.eps_rza)
            .with_beta(self.beta)
            .with_threshold_c(threshold_c)
            .with_unnormalized_rza(self.unnormalized_rza))
    }

    /// Es/N0 grid from the configured range and step, both ends included.
    pub fn es_n0_grid(&self) -> Vec<f64> {
        let [lo, hi] = self.es_n0_range_db;
        let count = ((hi - lo) / self.es_n0_step_db + 1e-9).floor() as usize + 1;
        (0..count).map(|i| lo + i as f64 * self.es_n0_step_db).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_taps == 0 {
            return Err(Error::config("n_taps must be at least 1"));
        }
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        if self.sparsity_list.is_empty() || self.snr_db_list.is_empty() || self.algorithms.is_empty() {
            return Err(Error::config("sparsity_list, snr_db_list and algorithms must be non-empty"));
        }
        if let Some(k) = self.sparsity_list.iter().find(|&&k| k == 0 || k > self.n_taps) {
            return Err(Error::config(format!(
                "sparsity {k} outside 1..={} (n_taps)",
                self.n_taps
            )));
        }
        if let Some(s) = self.snr_db_list.iter().find(|s| s.is_nan() || **s == f64::NEG_INFINITY) {
            return Err(Error::config(format!("bad SNR {s}")));
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return Err(Error::config("algorithms contains duplicates"));
        }
        self.stop.validate()?;
        if !(self.signal_power > 0.0) || !self.signal_power.is_finite() {
            return Err(Error::config("signal_power must be positive"));
        }
        if !(self.rho_za_factor >= 0.0) || !(self.rho_rza_factor >= 0.0) {
            return Err(Error::config("penalty factors must be non-negative"));
        }
        for &snr in &self.snr_db_list {
            for &variant in &self.algorithms {
                self.resolve_spec(variant, snr)?.validate(self.validation)?;
            }
        }
        let [lo, hi] = self.es_n0_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::config("es_n0_range_db must be a finite [low, high] pair"));
        }
        if !(self.es_n0_step_db > 0.0) {
            return Err(Error::config("es_n0_step_db must be positive"));
        }
        for m in &self.modulations {
            m.validate().map_err(|e| Error::config(e.to_string()))?;
        }
        if !self.ber_snr_db.is_finite() || self.ber_sparsity == 0 {
            return Err(Error::config("ber_snr_db must be finite and ber_sparsity positive"));
        }
        Ok(())
    }

    /// Parses either form; JSON is recognised by a leading `{`.
    pub fn from_text(text: &str) -> Result<Self> {
        let value = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::config(format!("invalid JSON: {e}")))?
        } else {
            key_value_to_json(text)?
        };
        serde_json::from_value(value).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_text(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Renders the key-value form; `from_text` of the output round-trips.
    pub fn to_key_value(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        if let Value::Object(map) = value {
            for (key, v) in map {
                match v {
                    Value::Object(inner) => {
                        for (sub, sv) in inner {
                            out.push_str(&format!("{key}.{sub} = {}\n", scalar_text(&sv)));
                        }
                    }
                    Value::Array(items) => {
                        let joined: Vec<String> = items.iter().map(scalar_text).collect();
                        out.push_str(&format!("{key} = {}\n", joined.join(", ")));
                    }
                    other => out.push_str(&format!("{key} = {}\n", scalar_text(&other))),
                }
            }
        }
        out
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

const LIST_KEYS: [&str; 5] = [
    "sparsity_list",
    "snr_db_list",
    "algorithms",
    "es_n0_range_db",
    "modulations",
];

fn parse_scalar(raw: &str) -> Value {
    let t = raw.trim().trim_matches('"');
    if let Ok(i) = t.parse::<i64>() {
        return Value::Number(i.into());
    }
    if let Ok(f) = t.parse::<f64>() {
        if let Some(n) = Number::from_f64(f) {
            return Value::Number(n);
        }
    }
    match t {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::String(t.to_string()),
    }
}

fn key_value_to_json(text: &str) -> Result<Value> {
    let mut root = Map::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, raw) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let key = key.trim();
        let raw = raw.trim();
        let (head, tail) = match key.split_once('.') {
            Some((h, t)) => (h, Some(t)),
            None => (key, None),
        };
        let value = if LIST_KEYS.contains(&head) {
            let inner = raw.trim_start_matches('[').trim_end_matches(']');
            Value::Array(
                inner
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(parse_scalar)
                    .collect(),
            )
        } else {
            parse_scalar(raw)
        };
        match tail {
            None => {
                root.insert(head.to_string(), value);
            }
            Some(sub) => {
                let slot = root
                    .entry(head.to_string())
                    .or_insert_with(|| Value::Object(Map::new()));
                match slot {
                    Value::Object(m) => {
                        m.insert(sub.to_string(), value);
                    }
                    _ => {
                        return Err(Error::config(format!(
                            "line {}: '{head}' is both a value and a table",
                            lineno + 1
                        )))
                    }
                }
            }
        }
    }
    Ok(Value::Object(root))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_table_ii() {
        let c = ExperimentConfig::default();
        assert_eq!(c.n_taps, 60);
        assert_eq!(c.sparsity_list, vec![3, 6]);
        assert_eq!(c.snr_db_list, vec![5.0, 10.0, 20.0]);
        assert_eq!(c.mu, 0.2);
        assert_eq!(c.mu_max, 2.0);
        assert_eq!(c.eps_rza, 20.0);
        assert_eq!(c.threshold_c_by_snr.get(5.0), Some(1e-4));
        assert_eq!(c.threshold_c_by_snr.get(10.0), Some(1e-5));
        assert_eq!(c.threshold_c_by_snr.get(20.0), Some(1e-5));
        assert_eq!(c.es_n0_range_db, [12.0, 30.0]);
        assert_eq!(c.modulations, Modulation::TABLE.to_vec());
        assert_eq!(c.stop, StopCriterion { delta_tolerance: 1e-5, max_iterations: 5000 });
        c.validate().unwrap();
    }

    #[test]
    fn penalties_scale_with_noise_power() {
        let c = ExperimentConfig::default();
        let spec = c.resolve_spec(Variant::VssRzaNlms, 10.0).unwrap();
        assert!((spec.rho_rza - 0.002 * 0.1).abs() < 1e-18);
        assert!((spec.rho_za - 0.0002 * 0.1).abs() < 1e-18);
        assert_eq!(spec.threshold_c, 1e-5);
        let spec = c.resolve_spec(Variant::IssZaNlms, f64::INFINITY).unwrap();
        assert_eq!(spec.rho_za, 0.0);
        assert!(c.resolve_spec(Variant::VssNlms, 15.0).is_err());
    }

    #[test]
    fn es_n0_grid_includes_both_ends() {
        let g = ExperimentConfig::default().es_n0_grid();
        assert_eq!(g.len(), 19);
        assert_eq!(g[0], 12.0);
        assert_eq!(*g.last().unwrap(), 30.0);
    }

    #[test]
    fn key_value_and_json_agree() {
        let kv = "\
# desk scale
n_taps = 16
sparsity_list = 2
snr_db_list = [10, inf]
runs = 7
algorithms = iss-nlms, vss-za-nlms
stop.max_iterations = 300
threshold_c_by_snr.10 = 2e-5
threshold_c_by_snr.inf = 1e-6
modulations = 8psk, 64qam
master_seed = 99
";
        let from_kv = ExperimentConfig::from_text(kv).unwrap();
        assert_eq!(from_kv.n_taps, 16);
        assert_eq!(from_kv.sparsity_list, vec![2]);
        assert_eq!(from_kv.snr_db_list, vec![10.0, f64::INFINITY]);
        assert_eq!(from_kv.algorithms, vec![Variant::IssNlms, Variant::VssZaNlms]);
        assert_eq!(from_kv.stop.max_iterations, 300);
        assert_eq!(from_kv.stop.delta_tolerance, 1e-5);
        assert_eq!(from_kv.threshold_c_by_snr.get(f64::INFINITY), Some(1e-6));
        from_kv.validate().unwrap();

        let json = serde_json::to_string_pretty(&from_kv).unwrap();
        assert_eq!(ExperimentConfig::from_text(&json).unwrap(), from_kv);
        assert_eq!(ExperimentConfig::from_text(&from_kv.to_key_value()).unwrap(), from_kv);
    }

    #[test]
    fn default_round_trips_through_key_value() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_text(&c.to_key_value()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_text("n_taps 60").is_err());
        assert!(ExperimentConfig::from_text("bogus_key = 1").is_err());
        assert!(ExperimentConfig::from_text("algorithms = lms").is_err());
        assert!(ExperimentConfig::from_text("{ \"n_taps\": -1 }").is_err());

        let bad = |f: fn(&mut ExperimentConfig)| {
            let mut c = ExperimentConfig::default();
            f(&mut c);
            assert!(c.validate().is_err(), "{c:?}");
        };
        bad(|c| c.runs = 0);
        bad(|c| c.sparsity_list = vec![61]);
        bad(|c| c.algorithms = vec![Variant::IssNlms, Variant::IssNlms]);
        bad(|c| c.snr_db_list.push(15.0));
        bad(|c| c.beta = 1.5);
        bad(|c| c.mu_max = 2.5);
        bad(|c| c.es_n0_range_db = [30.0, 12.0]);
        bad(|c| c.stop.max_iterations = 0);
        bad(|c| {
            c.validation = ValidationLevel::Strict;
        });
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = ExperimentConfig::load(Path::new("/nonexistent/table2.conf")).unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("/nonexistent/table2.conf"));
    }
}
