//! Evaluation quantities: channel MSE, steady-state excess-MSE theory,
//! effective post-estimation SNR and closed-form PSK/QAM BER fits.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// `|truth - estimate|^2` for a single run.
pub fn average_mse(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    check_len(truth.len(), estimate.len())?;
    Ok(truth.iter().zip(estimate).map(|(h, w)| (h - w) * (h - w)).sum())
}

/// Linear MSE to decibels.
pub fn to_db(value: f64) -> f64 {
    10.0 * value.log10()
}

/// Inputs to the steady-state excess-MSE expressions.
#[derive(Debug, Clone)]
pub struct TheoryInputs {
    pub lambda_max: f64,
    pub noise_power: f64,
    pub step: f64,
    /// Input covariance `R`; enables the trace form.
    pub covariance: Option<DMatrix<f64>>,
}

impl TheoryInputs {
    pub fn new(lambda_max: f64, noise_power: f64, step: f64) -> Result<Self> {
        if !(lambda_max > 0.0) || !lambda_max.is_finite() {
            return Err(Error::Domain(format!("lambda_max = {lambda_max} must be positive")));
        }
        if !(noise_power >= 0.0) || !noise_power.is_finite() {
            return Err(Error::Domain(format!("noise power {noise_power} must be >= 0")));
        }
        if !step.is_finite() {
            return Err(Error::Domain("step must be finite".into()));
        }
        Ok(Self {
            lambda_max,
            noise_power,
            step,
            covariance: None,
        })
    }

    /// Takes `lambda_max` from the largest eigenvalue of `covariance`.
    pub fn from_covariance(covariance: DMatrix<f64>, noise_power: f64, step: f64) -> Result<Self> {
        let eig = symmetric_eigenvalues(&covariance)?;
        let scale = eig.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if eig.iter().any(|&v| v < -1e-12 * scale) {
            return Err(Error::Domain("covariance is not positive semidefinite".into()));
        }
        let lambda_max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut inputs = Self::new(lambda_max, noise_power, step)?;
        inputs.covariance = Some(covariance);
        Ok(inputs)
    }
}

fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Dimension {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::Domain("covariance is not symmetric".into()));
    }
    Ok(SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect())
}

/// `Tr[R (I - mu R)^-1]`.
pub fn trace_term(covariance: &DMatrix<f64>, step: f64) -> Result<f64> {
    let eig = symmetric_eigenvalues(covariance)?;
    if eig.iter().any(|&l| (1.0 - step * l).abs() < 1e-12) {
        return Err(Error::Singular);
    }
    let n = covariance.nrows();
    let shifted = DMatrix::<f64>::identity(n, n) - covariance * step;
    let inverse = shifted.try_inverse().ok_or(Error::Singular)?;
    Ok((covariance * inverse).trace())
}

/// Scalar shortcut of [`trace_term`] for white input `R = lambda I`.
pub fn white_trace_term(n_taps: usize, lambda: f64, step: f64) -> f64 {
    n_taps as f64 * lambda / (1.0 - step * lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateMse {
    /// `T sigma^2 / (2 - T)` with `T = Tr[R (I - mu R)^-1]`; `None` without `R`.
    pub trace_form: Option<f64>,
    /// `lambda_max sigma^2 / (2 - 3 mu lambda_max)`.
    pub lower_bound: f64,
}

/// Steady-state excess MSE of plain NLMS and its closed-form lower bound.
pub fn steady_state_mse_nlms(inputs: &TheoryInputs) -> Result<SteadyStateMse> {
    let denom = 2.0 - 3.0 * inputs.step * inputs.lambda_max;
    if denom <= 0.0 {
        return Err(Error::OutOfRegime(format!(
            "2 - 3 mu lambda_max = {denom} is not positive"
        )));
    }
    let lower_bound = inputs.lambda_max * inputs.noise_power / denom;
    let trace_form = match &inputs.covariance {
        None => None,
        Some(r) => {
            let t = trace_term(r, inputs.step)?;
            if 2.0 - t <= 0.0 {
                return Err(Error::OutOfRegime(format!(
                    "2 - Tr[R(I - mu R)^-1] = {} is not positive",
                    2.0 - t
                )));
            }
            Some(t * inputs.noise_power / (2.0 - t))
        }
    };
    Ok(SteadyStateMse {
        trace_form,
        lower_bound,
    })
}

/// Small-step limit of the bound: `lambda_max sigma^2 / 2`.
pub fn steady_state_mse_limit(lambda_max: f64, noise_power: f64) -> f64 {
    lambda_max * noise_power / 2.0
}

/// Symbol SNR left after imperfect channel estimation:
/// `rho (1 - mse) / (rho mse + 1)` with `rho = 10^(snr_db / 10)`.
pub fn effective_snr(snr_db: f64, mse: f64) -> Result<f64> {
    if !snr_db.is_finite() {
        return Err(Error::Domain(format!("snr {snr_db} dB is not finite")));
    }
    if !(0.0..=1.0).contains(&mse) {
        return Err(Error::Domain(format!("mse {mse} outside [0, 1]")));
    }
    let rho = 10f64.powf(snr_db / 10.0);
    Ok(rho * (1.0 - mse) / (rho * mse + 1.0))
}

/// Curve-fit coefficients of the exponential Q-function approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerConstants {
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
}

impl Default for BerConstants {
    fn default() -> Self {
        Self {
            a1: 0.3017,
            a2: 0.438,
            b: 1.0510,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Modulation {
    Psk(u32),
    Qam(u32),
}

impl Modulation {
    pub const TABLE: [Modulation; 4] = [
        Modulation::Psk(8),
        Modulation::Psk(16),
        Modulation::Qam(16),
        Modulation::Qam(64),
    ];

    pub fn levels(self) -> u32 {
        match self {
            Modulation::Psk(m) | Modulation::Qam(m) => m,
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            Modulation::Psk(m) if m < 4 => Err(Error::Domain(format!("PSK needs M >= 4, got {m}"))),
            Modulation::Qam(m) => qam_k_factor(m).map(|_| ()),
            Modulation::Psk(_) => Ok(()),
        }
    }

    /// Clamped BER at effective SNR `gamma_s`.
    pub fn ber(self, gamma_s: f64, consts: &BerConstants) -> Result<f64> {
        match self {
            Modulation::Psk(m) => psk_ber(gamma_s, m, consts),
            Modulation::Qam(m) => qam_ber(gamma_s, m, consts),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulation::Psk(m) => write!(f, "{m}psk"),
            Modulation::Qam(m) => write!(f, "{m}qam"),
        }
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (digits, ctor): (&str, fn(u32) -> Modulation) = if let Some(d) = lower.strip_suffix("psk") {
            (d, Modulation::Psk)
        } else if let Some(d) = lower.strip_suffix("qam") {
            (d, Modulation::Qam)
        } else {
            return Err(Error::config(format!("unknown modulation '{s}'")));
        };
        let m: u32 = digits
            .parse()
            .map_err(|_| Error::config(format!("bad modulation order in '{s}'")))?;
        let modulation = ctor(m);
        modulation
            .validate()
            .map_err(|e| Error::config(format!("{s}: {e}")))?;
        Ok(modulation)
    }
}

impl TryFrom<String> for Modulation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Modulation> for String {
    fn from(m: Modulation) -> String {
        m.to_string()
    }
}

fn check_gamma(gamma_s: f64) -> Result<()> {
    if gamma_s >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("gamma_s = {gamma_s} must be >= 0")))
    }
}

/// `(sqrt(M) - 1) / sqrt(M)`; `M` must be a perfect square >= 4.
pub fn qam_k_factor(levels: u32) -> Result<f64> {
    let root = (levels as f64).sqrt().round() as u32;
    if levels < 4 || root * root != levels {
        return Err(Error::Domain(format!("QAM needs a square M >= 4, got {levels}")));
    }
    Ok((root as f64 - 1.0) / root as f64)
}

/// Unclamped M-PSK fit.
pub fn psk_ber_raw(gamma_s: f64, levels: u32, consts: &BerConstants) -> Result<f64> {
    if levels < 4 {
        return Err(Error::Domain(format!("PSK needs M >= 4, got {levels}")));
    }
    check_gamma(gamma_s)?;
    let s = (PI / levels as f64).sin().powi(2);
    let BerConstants { a1, a2, b } = *consts;
    Ok(a1 * (-b * gamma_s * s).exp() + a2 * (-2.0 * b * gamma_s * s).exp())
}

pub fn psk_ber(gamma_s: f64, levels: u32, consts: &BerConstants) -> Result<f64> {
    psk_ber_raw(gamma_s, levels, consts).map(|v| v.clamp(0.0, 1.0))
}

/// Unclamped square M-QAM fit.
pub fn qam_ber_raw(gamma_s: f64, levels: u32, consts: &BerConstants) -> Result<f64> {
    let k = qam_k_factor(levels)?;
    check_gamma(gamma_s)?;
    let BerConstants { a1, a2, b } = *consts;
    let g = b * gamma_s / (levels as f64 - 1.0);
    let k2 = k * k;
    Ok(2.0 * k * a1 * (-1.5 * g).exp() + (2.0 * k * a2 - k2 * a1 * a1) * (-3.0 * g).exp()
        - k2 * a2 * a2 * (-6.0 * g).exp()
        - 2.0 * k2 * a1 * a2 * (-4.5 * g).exp())
}

pub fn qam_ber(gamma_s: f64, levels: u32, consts: &BerConstants) -> Result<f64> {
    qam_ber_raw(gamma_s, levels, consts).map(|v| v.clamp(0.0, 1.0))
}
