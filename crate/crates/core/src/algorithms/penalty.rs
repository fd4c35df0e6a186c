//! Sparse penalty terms. Both are returned as vectors the caller subtracts.

/// Three-valued sign: `+1`, `0` or `-1`. No dead zone around zero.
#[inline]
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn sign_vector(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(sign).collect()
}

/// `rho_za * sgn(w)`.
pub fn za_penalty(weights: &[f64], rho_za: f64) -> Vec<f64> {
    weights.iter().map(|&w| rho_za * sign(w)).collect()
}

/// `rho_rza * sgn(w) / (1 + eps_rza |w|)`, componentwise.
///
/// Taps with magnitude well above `1 / eps_rza` are barely attracted.
pub fn rza_penalty(weights: &[f64], rho_rza: f64, eps_rza: f64) -> Vec<f64> {
    weights
        .iter()
        .map(|&w| rho_rza * sign(w) / (1.0 + eps_rza * w.abs()))
        .collect()
}
