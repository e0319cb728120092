use super::SolverError;

fn check_box(w: &[f64]) -> Result<(), SolverError> {
    match w.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        Some((i, v)) => Err(SolverError::InvalidInput(format!("w[{i}] = {v} lies outside [0, 1]"))),
        None => Ok(()),
    }
}

/// Squared distance to the nearest integer corner, `Σ min(w, 1 - w)²`.
pub fn regularizer_g(w: &[f64]) -> Result<f64, SolverError> {
    check_box(w)?;
    Ok(w.iter().map(|&v| v.min(1.0 - v).powi(2)).sum())
}

/// Gradient of [`regularizer_g`] away from the kink at 1/2 (the lower branch
/// is used at exactly 1/2).
pub fn regularizer_g_grad(w: &[f64]) -> Vec<f64> {
    w.iter().map(|&v| if v <= 0.5 { 2.0 * v } else { -2.0 * (1.0 - v) }).collect()
}

/// Closed-form minimizer of `(1/2η)(x - w)² + min(x, 1-x)²` for `w ∈ [0, 1]`.
pub fn prox_coord(w: f64, eta_t: f64) -> f64 {
    let inv = 1.0 / eta_t;
    if w <= 0.5 {
        (w * inv) / (inv + 2.0)
    } else {
        (w * inv + 2.0) / (inv + 2.0)
    }
}

pub fn prox(w: &[f64], eta_t: f64) -> Result<Vec<f64>, SolverError> {
    if !(eta_t > 0.0) || !eta_t.is_finite() {
        return Err(SolverError::InvalidInput(format!("prox step must be positive, got {eta_t}")));
    }
    check_box(w)?;
    Ok(w.iter().map(|&v| prox_coord(v, eta_t)).collect())
}

/// `η / √t`.
pub fn step_size(eta: f64, t: usize) -> f64 {
    eta / (t as f64).sqrt()
}

/// Quadratic integrality penalty `λ_p Σ (1 - w) w`.
pub fn penalty(w: &[f64], lambda_p: f64) -> f64 {
    lambda_p * w.iter().map(|&v| (1.0 - v) * v).sum::<f64>()
}

pub fn penalty_grad(w: &[f64], lambda_p: f64) -> Vec<f64> {
    w.iter().map(|&v| lambda_p * (1.0 - 2.0 * v)).collect()
}
