//! Quadrature rules: periodic trapezoid sums on tori and Gauss–Legendre
//! rules on intervals.
//!
//! All integrands in this crate are smooth and periodic in their angular
//! variables, where the trapezoid rule converges faster than any power of
//! the node count (and is exact for trigonometric polynomials of degree
//! below the node count).  Nodes are visited in a fixed odometer order so
//! every sum is bit-reproducible.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::tolerances::{QUADRATURE_ABS_FLOOR, QUADRATURE_DOUBLING_REL};
use crate::C64;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("torus quadrature did not converge: |Δ| = {delta:.3e} at {nodes} nodes per dimension (target {target:.3e})")]
    NotConverged { delta: f64, nodes: usize, target: f64 },
}

/// A converged quadrature value together with its convergence evidence.
#[derive(Debug, Clone, Copy)]
pub struct Converged {
    pub value: C64,
    /// Disagreement between the last two refinement levels.
    pub estimated_error: f64,
    pub nodes_per_dim: usize,
}

/// One pass of the d-dimensional periodic trapezoid rule with `m` nodes per
/// dimension over [0, 2π)^d.
pub fn trapezoid_torus(dims: usize, m: usize, f: &mut dyn FnMut(&[f64]) -> C64) -> C64 {
    assert!(dims > 0, "torus quadrature needs at least one dimension");
    assert!(m > 0, "torus quadrature needs at least one node");
    let step = TAU / m as f64;
    let mut idx = vec![0usize; dims];
    let mut t = vec![0f64; dims];
    let mut acc = C64::new(0.0, 0.0);
    loop {
        for (ti, &ii) in t.iter_mut().zip(idx.iter()) {
            *ti = step * ii as f64;
        }
        acc += f(&t);
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == dims {
                return acc * C64::new(step.powi(dims as i32), 0.0);
            }
        }
    }
}

/// One pass of the product trapezoid rule with a separate node count per
/// dimension: coordinate i runs over `nodes[i]` equispaced points in [0, 2π).
pub fn trapezoid_torus_mixed(nodes: &[usize], f: &mut dyn FnMut(&[f64]) -> C64) -> C64 {
    assert!(!nodes.is_empty(), "torus quadrature needs at least one dimension");
    assert!(nodes.iter().all(|&m| m > 0), "every dimension needs at least one node");
    let dims = nodes.len();
    let steps: Vec<f64> = nodes.iter().map(|&m| TAU / m as f64).collect();
    let cell: f64 = steps.iter().product();
    let mut idx = vec![0usize; dims];
    let mut t = vec![0f64; dims];
    let mut acc = C64::new(0.0, 0.0);
    loop {
        for ((ti, &ii), &si) in t.iter_mut().zip(idx.iter()).zip(steps.iter()) {
            *ti = si * ii as f64;
        }
        acc += f(&t);
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < nodes[d] {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == dims {
                return acc * C64::new(cell, 0.0);
            }
        }
    }
}

/// Mixed-count rule refined by doubling only the trailing `refine` dimensions.
///
/// The leading dimensions keep their node counts across levels: they are
/// meant for averages whose integrands are trigonometric polynomials of
/// known degree, where the count is chosen exactly once.  The trailing
/// dimensions double until two successive levels agree to `rel_tol` (or both
/// sit below the absolute floor).
pub fn trapezoid_torus_mixed_doubling(
    nodes: &[usize],
    refine: usize,
    rel_tol: f64,
    f: &mut dyn FnMut(&[f64]) -> C64,
) -> Result<Converged, QuadratureError> {
    const MAX_DOUBLINGS: usize = 5;
    let dims = nodes.len();
    assert!(refine >= 1 && refine <= dims, "refinement block must be a nonempty suffix");
    let mut counts = nodes.to_vec();
    let first = counts[dims - refine..].iter().copied().max().unwrap_or(2);
    let mut prev = trapezoid_torus_mixed(&counts, f);
    let mut delta = f64::INFINITY;
    let mut target = 0.0;
    for _ in 0..MAX_DOUBLINGS {
        for c in counts[dims - refine..].iter_mut() {
            *c *= 2;
        }
        let next = trapezoid_torus_mixed(&counts, f);
        delta = (next - prev).norm();
        target = (rel_tol * next.norm()).max(QUADRATURE_ABS_FLOOR);
        if delta <= target {
            return Ok(Converged {
                value: next,
                estimated_error: delta,
                nodes_per_dim: counts[dims - refine..].iter().copied().max().unwrap_or(first),
            });
        }
        prev = next;
    }
    Err(QuadratureError::NotConverged {
        delta,
        nodes: counts[dims - refine..].iter().copied().max().unwrap_or(first),
        target,
    })
}

/// Trapezoid rule refined by node doubling until two successive levels agree
/// to `rel_tol`, or until both sit below the absolute floor (values that are
/// exact zeros up to cancellation noise must not be refined forever).
pub fn trapezoid_torus_doubling(
    dims: usize,
    base_nodes: usize,
    rel_tol: f64,
    f: &mut dyn FnMut(&[f64]) -> C64,
) -> Result<Converged, QuadratureError> {
    const MAX_DOUBLINGS: usize = 5;
    let mut m = base_nodes.max(2);
    let mut prev = trapezoid_torus(dims, m, f);
    let mut delta = f64::INFINITY;
    let mut target = 0.0;
    for _ in 0..MAX_DOUBLINGS {
        let next = trapezoid_torus(dims, 2 * m, f);
        delta = (next - prev).norm();
        target = (rel_tol * next.norm()).max(QUADRATURE_ABS_FLOOR);
        if delta <= target {
            return Ok(Converged {
                value: next,
                estimated_error: delta,
                nodes_per_dim: 2 * m,
            });
        }
        prev = next;
        m *= 2;
    }
    Err(QuadratureError::NotConverged {
        delta,
        nodes: 2 * m,
        target,
    })
}

/// Doubling refinement with the crate-default relative tolerance.
pub fn trapezoid_torus_checked(
    dims: usize,
    base_nodes: usize,
    f: &mut dyn FnMut(&[f64]) -> C64,
) -> Result<Converged, QuadratureError> {
    trapezoid_torus_doubling(dims, base_nodes, QUADRATURE_DOUBLING_REL, f)
}

/// Gauss–Legendre nodes and weights on [−1, 1]; exact for polynomials of
/// degree ≤ 2m − 1.  Nodes come out in ascending order.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m > 0);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        // Tricomi-style initial guess, then Newton on P_m.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(m, x);
        nodes[m - 1 - i] = x;
        weights[m - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(a: f64, b: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(m);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| w * half).collect(),
    )
}

/// P_m(x) and P'_m(x) by the three-term recurrence.
fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 1..m {
        let jf = j as f64;
        let p_next = ((2.0 * jf + 1.0) * x * p - jf * p_prev) / (jf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let dp = m as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}
