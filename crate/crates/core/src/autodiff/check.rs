use super::{AutodiffError, Graph};

/// Relative discrepancy used by every gradient check in the crate:
/// `|analytic - numeric| / max(|analytic|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(1e-8)
}

/// Central-difference gradient of `f` at `x`.
pub fn central_difference<F>(mut f: F, x: &[f64], perturbation: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + perturbation;
            let up = f(&probe);
            probe[i] = orig - perturbation;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * perturbation)
        })
        .collect()
}

/// Compares reverse-mode gradients of the graph's (scalar) output against
/// central differences for every parameter entry, reusing the inputs of the
/// last forward pass (or running one first if the graph takes no inputs).
///
/// Returns the largest [`relative_error`] found; a graph without parameters
/// yields 0.
pub fn finite_difference_check(graph: &mut Graph, perturbation: f64) -> Result<f64, AutodiffError> {
    if perturbation <= 0.0 || !perturbation.is_finite() {
        return Err(AutodiffError::InvalidTensor(format!(
            "perturbation must be positive, got {perturbation}"
        )));
    }
    let output = graph.output().ok_or(AutodiffError::EmptyGraph)?;
    let inputs = match graph.last_inputs() {
        Some(inputs) => inputs,
        None if graph.inputs().is_empty() => Vec::new(),
        None => return Err(AutodiffError::NotForwarded),
    };
    graph.forward(&inputs)?;
    let grads = graph.backward(output)?;

    let mut worst = 0.0f64;
    for (param, analytic) in grads.iter() {
        for idx in 0..analytic.len() {
            let orig = graph.param_value(param).expect("param").data()[idx];
            *graph.param_entry_mut(param, idx) = orig + perturbation;
            let up = graph.forward(&inputs)?.item();
            *graph.param_entry_mut(param, idx) = orig - perturbation;
            let down = graph.forward(&inputs)?.item();
            *graph.param_entry_mut(param, idx) = orig;
            let numeric = (up - down) / (2.0 * perturbation);
            worst = worst.max(relative_error(analytic.data()[idx], numeric));
        }
    }
    graph.forward(&inputs)?;
    Ok(worst)
}
