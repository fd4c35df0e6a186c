//! Variable step-size control: a smoothed projection of the normalized
//! gradient, mapped onto `[0, mu_max)`.

/// `beta * p + (1 - beta) * x e / (x^T x)`.
///
/// The caller must guarantee `x^T x > 0`; see [`super::ENERGY_FLOOR`].
pub fn vss_update_projection(projection: &[f64], regressor: &[f64], error: f64, beta: f64) -> Vec<f64> {
    debug_assert_eq!(projection.len(), regressor.len());
    let energy: f64 = regressor.iter().map(|x| x * x).sum();
    let gain = (1.0 - beta) * error / energy;
    projection
        .iter()
        .zip(regressor)
        .map(|(&p, &x)| beta * p + gain * x)
        .collect()
}

/// `mu_max * |p|^2 / (|p|^2 + C)`; zero iff `p` is zero, always below `mu_max`.
pub fn vss_step_size(projection: &[f64], mu_max: f64, threshold_c: f64) -> f64 {
    let energy: f64 = projection.iter().map(|p| p * p).sum();
    mu_max * energy / (energy + threshold_c)
}
