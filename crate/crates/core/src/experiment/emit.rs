//! CSV, SVG and manifest output.
//!
//! Layout under the output directory:
//!
//! ```text
//! <k{K}_snr{S}db>/mse_curves.csv   iteration,algorithm,mean_mse_db,mean_mse
//! <k{K}_snr{S}db>/mse_curves.svg
//! ber_curves.csv                   es_n0_db,modulation,algorithm,ber
//! ber_<modulation>.svg
//! stepsize_trace.csv               iteration,error,step
//! stepsize.svg
//! manifest.txt
//! ```
//!
//! Files are comma-separated with a header row and LF line endings. Numbers
//! use Rust's shortest round-trip formatting, so equal results give equal
//! bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::plot::{Figure, Series, Style};
use super::runner::{scenarios, trial_seed, AggregateResult, ISS_REFERENCE_STEPS};
use crate::error::{Error, Result};

pub const MSE_HEADER: &str = "iteration,algorithm,mean_mse_db,mean_mse";
pub const BER_HEADER: &str = "es_n0_db,modulation,algorithm,ber";
pub const STEPSIZE_HEADER: &str = "iteration,error,step";

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Git-style object hash: SHA-256 over `blob <len>\0<bytes>`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn mse_csv(scenario: &super::runner::ScenarioResult) -> String {
    let mut out = format!("{MSE_HEADER}\n");
    for curve in &scenario.curves {
        for (i, &m) in curve.mean_mse.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", i + 1, curve.algorithm, 10.0 * m.log10(), m);
        }
    }
    out
}

pub fn ber_csv(result: &AggregateResult) -> String {
    let mut out = format!("{BER_HEADER}\n");
    for r in &result.ber {
        let _ = writeln!(out, "{},{},{},{}", r.es_n0_db, r.modulation, r.algorithm, r.ber);
    }
    out
}

pub fn stepsize_csv(result: &AggregateResult) -> String {
    let mut out = format!("{STEPSIZE_HEADER}\n");
    for s in &result.stepsize_trace {
        let _ = writeln!(out, "{},{},{}", s.iteration, s.error, s.step);
    }
    out
}

fn mse_figure(scenario: &super::runner::ScenarioResult) -> Figure {
    let s = scenario.scenario;
    let mut fig = Figure::new(
        format!("Average MSE, K = {}, SNR = {} dB", s.sparsity, s.snr_db),
        "update times",
        "average MSE",
    )
    .log_y();
    for curve in &scenario.curves {
        let pts = curve
            .mean_mse
            .iter()
            .enumerate()
            .map(|(i, &m)| ((i + 1) as f64, m))
            .collect();
        fig.push(Series::line(curve.algorithm.name(), pts));
    }
    fig
}

fn ber_figures(result: &AggregateResult) -> Vec<(String, Figure)> {
    let mut mods: Vec<_> = result.ber.iter().map(|r| r.modulation).collect();
    mods.dedup();
    mods.into_iter()
        .map(|m| {
            let mut fig = Figure::new(format!("Average BER, {m}"), "Es/N0 (dB)", "BER").log_y();
            let mut algs: Vec<_> = result.ber.iter().filter(|r| r.modulation == m).map(|r| r.algorithm).collect();
            algs.dedup();
            for a in algs {
                let pts = result
                    .ber
                    .iter()
                    .filter(|r| r.modulation == m && r.algorithm == a)
                    .map(|r| (r.es_n0_db, r.ber))
                    .collect();
                fig.push(Series::line(a.name(), pts));
            }
            (format!("ber_{m}.svg"), fig)
        })
        .collect()
}

fn stepsize_figure(result: &AggregateResult) -> Figure {
    let mut fig = Figure::new("Step size vs. estimation error", "|e(n)|", "step size");
    fig.push(
        Series::line(
            "VSS",
            result.stepsize_trace.iter().map(|s| (s.error.abs(), s.step)).collect(),
        )
        .with_style(Style::Points),
    );
    let max_err = result
        .stepsize_trace
        .iter()
        .map(|s| s.error.abs())
        .fold(0.0, f64::max)
        .max(1e-3);
    for mu in ISS_REFERENCE_STEPS {
        fig.push(Series::line(format!("ISS mu = {mu}"), vec![(0.0, mu), (max_err, mu)]).with_style(Style::Dashed));
    }
    fig
}

fn manifest(result: &AggregateResult, config: &ExperimentConfig, files: &[(PathBuf, String)]) -> String {
    let config_text = config.to_key_value();
    let canonical = serde_json::to_string(config).expect("config serializes");
    let mut m = String::new();
    let _ = writeln!(m, "# sparse-vss run manifest");
    let _ = writeln!(m, "tool = {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "master_seed = {}", config.master_seed);
    let _ = writeln!(
        m,
        "seed_rule = splitmix64 fold of (master_seed, K, SNR f64 bits, trial); ChaCha8 streams 0/1/2 = channel/training/noise"
    );
    let _ = writeln!(m, "config_hash = sha256-blob:{}", content_hash(canonical.as_bytes()));
    let _ = writeln!(m, "\n[config]\n{config_text}");
    let _ = writeln!(m, "[trial_seeds]");
    for s in scenarios(config) {
        if result.scenario(s.sparsity, s.snr_db).is_none() {
            continue;
        }
        let seeds: Vec<String> = (0..config.runs)
            .map(|t| trial_seed(config.master_seed, s, t).to_string())
            .collect();
        let _ = writeln!(m, "{} = {}", s.label(), seeds.join(","));
    }
    let _ = writeln!(m, "\n[files]");
    for (path, hash) in files {
        let _ = writeln!(m, "{} sha256-blob:{hash}", path.display());
    }
    m
}

/// Writes every CSV, plot and the manifest; returns the written paths.
pub fn emit_results(result: &AggregateResult, config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    let mut put = |rel: PathBuf, body: String| -> Result<()> {
        write(&out_dir.join(&rel), &body)?;
        files.push((rel, content_hash(body.as_bytes())));
        Ok(())
    };

    for scenario in &result.scenarios {
        let dir = PathBuf::from(scenario.scenario.label());
        put(dir.join("mse_curves.csv"), mse_csv(scenario))?;
        put(dir.join("mse_curves.svg"), mse_figure(scenario).to_svg())?;
    }
    put("ber_curves.csv".into(), ber_csv(result))?;
    for (name, fig) in ber_figures(result) {
        put(name.into(), fig.to_svg())?;
    }
    put("stepsize_trace.csv".into(), stepsize_csv(result))?;
    if !result.stepsize_trace.is_empty() {
        put("stepsize.svg".into(), stepsize_figure(result).to_svg())?;
    }

    let manifest = manifest(result, config, &files);
    write(&out_dir.join("manifest.txt"), &manifest)?;
    let mut paths: Vec<PathBuf> = files.into_iter().map(|(p, _)| out_dir.join(p)).collect();
    paths.push(out_dir.join("manifest.txt"));
    Ok(paths)
}
