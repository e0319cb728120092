use serde::{Deserialize, Serialize};

use super::SolverError;

/// Linear constraint `a·w̄ + b·θ1 + c ≤ 0` with multiplier `λ ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuttingPlane {
    pub id: u64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
    pub lambda: f64,
    /// Consecutive polytope updates at which `λ` was below tolerance.
    pub inactive_count: u32,
}

impl CuttingPlane {
    pub fn value(&self, w: &[f64], theta1: &[f64]) -> f64 {
        dot(&self.a, w) + dot(&self.b, theta1) + self.c
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub planes: Vec<CuttingPlane>,
    next_id: u64,
}

impl Polytope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn lambda_sum(&self) -> f64 {
        self.planes.iter().map(|p| p.lambda).sum()
    }
}

/// Plane ids removed and added by one [`update_polytope`] call.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PolytopeChange {
    pub dropped: Vec<u64>,
    pub added: Option<u64>,
}

/// Settings of the plane add/drop rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneRule {
    pub epsilon: f64,
    pub multiplier_tol: f64,
    pub drop_after: u32,
}

/// Drops planes whose multiplier stayed below tolerance for `drop_after`
/// consecutive calls, then, if `J > ε`, appends the linearization
/// `J + ∇J·(x - x_t) - ε ≤ 0` with multiplier 0.
pub fn update_polytope(
    polytope: &mut Polytope,
    j: f64,
    grad_w: &[f64],
    grad_theta1: &[f64],
    w: &[f64],
    theta1: &[f64],
    rule: PlaneRule,
) -> Result<PolytopeChange, SolverError> {
    if grad_w.len() != w.len() || grad_theta1.len() != theta1.len() {
        return Err(SolverError::InvalidInput(format!(
            "plane gradient lengths ({}, {}) do not match iterate ({}, {})",
            grad_w.len(),
            grad_theta1.len(),
            w.len(),
            theta1.len()
        )));
    }
    let mut change = PolytopeChange::default();
    for plane in polytope.planes.iter_mut() {
        if plane.lambda < rule.multiplier_tol {
            plane.inactive_count += 1;
        } else {
            plane.inactive_count = 0;
        }
    }
    polytope.planes.retain(|p| {
        let drop = p.inactive_count >= rule.drop_after;
        if drop {
            change.dropped.push(p.id);
        }
        !drop
    });
    if j > rule.epsilon {
        let c = j - dot(grad_w, w) - dot(grad_theta1, theta1) - rule.epsilon;
        let id = polytope.next_id;
        polytope.next_id += 1;
        polytope.planes.push(CuttingPlane {
            id,
            a: grad_w.to_vec(),
            b: grad_theta1.to_vec(),
            c,
            lambda: 0.0,
            inactive_count: 0,
        });
        change.added = Some(id);
    }
    Ok(change)
}
