//! Superpositions of Szegő-kernel coherent states attached to Legendrian
//! submanifolds, and their isotype projections under torus symmetries.
//!
//! The model space is the unit sphere X = S^{2n+1} ⊂ ℂ^{n+1}, viewed as the
//! circle bundle over ℂPⁿ.  Its Hardy space splits into isotypes spanned by
//! the degree-k holomorphic monomials, and the k-th reproducing kernel is
//! Π_k(x, y) = c_{k,n}·⟨x, y⟩^k with ⟨a, b⟩ = Σᵢ aᵢ·conj(bᵢ),
//! with the volume form on X normalized as (round measure)/2π, so that
//! vol(X) = πⁿ/n! and c_{k,1} = (k + 1)/π.  For n ≥ 2 the constant is
//! derived once from the reproducing identity (see [`SzegoKernel::constant`])
//! and cached, rather than hard-coded.
//!
//! A Legendrian immersion ι: Λ → X with amplitude f_λ defines the state
//! u_k(x) = ∫ Π_k(x, ι(t))·f_λ(t)·D_Λ(t) dt over the parameter torus [0, 2π)^d with plain Lebesgue measure dt and the
//! Riemannian density D_Λ of ι.  Under a torus action with weight matrix W,
//! the component of isotype ϖ ∈ ℤ^g is the normalized group average
//! u_{k,ϖ}(x) = (2π)^{−g} ∫ e^{−iϖ·s}·u_k((−s)·x) d^g s over [0, 2π)^g.
//!
//! No circle average ever appears: u_k sits in the k-th circle isotype by
//! construction, which the equivariance tests pin down to quadrature
//! precision.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Mutex, OnceLock};

use thiserror::Error;

use crate::geometry::{BundlePoint, TorusAction};
use crate::legendrian::{LegendrianError, LegendrianImmersion};
use crate::linalg::hermitian;
use crate::quadrature::{self, QuadratureError};
use crate::tolerances::{QUADRATURE_DOUBLING_REL, STATE_NODES_BASE};
use crate::{C64, RVector};

/// Errors from state evaluation and pairing.
#[derive(Debug, Error)]
pub enum StatesError {
    #[error("ambient dimension mismatch: expected ℂ^{expected}, got ℂ^{got}")]
    AmbientMismatch { expected: usize, got: usize },
    #[error("isotype label has {got} components but the acting torus has rank {expected}")]
    IsotypeShape { got: usize, expected: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Legendrian(#[from] LegendrianError),
}

static CONSTANT_CACHE: OnceLock<Mutex<HashMap<(usize, usize), f64>>> = OnceLock::new();

/// The degree-k reproducing kernel on S^{2n+1}, Π_k(x, y) = c_{k,n}⟨x, y⟩^k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SzegoKernel {
    n: usize,
}

impl SzegoKernel {
    /// Kernel for the sphere over ℂPⁿ (ambient ℂ^{n+1}).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "the base must be at least one-dimensional");
        SzegoKernel { n }
    }

    /// Kernel for the sphere containing x.
    pub fn for_point(x: &BundlePoint) -> Self {
        SzegoKernel::new(x.base_dim())
    }

    /// Complex dimension of the base.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Ambient complex dimension n + 1.
    pub fn ambient(&self) -> usize {
        self.n + 1
    }

    /// Normalizing constant c_{k,n}.
    ///
    /// n = 1 carries the textbook value (k + 1)/π.  For n ≥ 2 the constant
    /// is pinned by the reproducing identity ∫_X Π_k(x, y)·y₀^k dvol(y) =
    /// x₀^k: expanding ⟨x, y⟩^k and using monomial orthogonality leaves
    /// 1/c = ∫_X |y₀|^{2k} dvol, and pushing |y₀|² forward to t ∈ [0, 1]
    /// (a Beta marginal of the uniform simplex) turns that into
    /// 1/c_{k,n} = vol(X)·∫₀¹ tᵏ·n(1 − t)^{n−1} dt, a polynomial integral of degree k + n − 1 that a Gauss–Legendre rule
    /// evaluates exactly.  Values are cached per (n, k).
    pub fn constant(&self, k: usize) -> f64 {
        if self.n == 1 {
            return (k as f64 + 1.0) / PI;
        }
        let cache = CONSTANT_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap();
        *map.entry((self.n, k))
            .or_insert_with(|| reproducing_constant(self.n, k))
    }

    /// Kernel value Π_k(x, y).  The complex power is taken directly, which
    /// stays accurate across the level range used here (k up to a few
    /// thousand); |⟨x, y⟩| ≤ 1 rules out overflow.
    pub fn eval(&self, k: usize, x: &BundlePoint, y: &BundlePoint) -> Result<C64, StatesError> {
        for p in [x, y] {
            if p.ambient() != self.ambient() {
                return Err(StatesError::AmbientMismatch {
                    expected: self.ambient(),
                    got: p.ambient(),
                });
            }
        }
        let ip = hermitian(x.coords(), y.coords());
        Ok(ip.powu(k as u32) * C64::new(self.constant(k), 0.0))
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

fn reproducing_constant(n: usize, k: usize) -> f64 {
    let vol_x = PI.powi(n as i32) / factorial(n);
    let nodes = (k + n) / 2 + 2;
    let (xs, ws) = quadrature::gauss_legendre_on(0.0, 1.0, nodes);
    let integral: f64 = xs
        .iter()
        .zip(ws.iter())
        .map(|(&t, &w)| w * t.powi(k as i32) * n as f64 * (1.0 - t).powi(n as i32 - 1))
        .sum();
    1.0 / (vol_x * integral)
}

/// Parameter-space node heuristic for u_k quadrature: max(256, 8⌈√k⌉·d)
/// nodes per dimension.  The kernel power concentrates at scale k^{−1/2}
/// around return points, so the count grows like √k; the doubling check
/// validates the heuristic on every call.
pub fn default_state_nodes(k: usize, dim: usize) -> usize {
    let sqrt_k = (k as f64).sqrt().ceil() as usize;
    STATE_NODES_BASE.max(8 * sqrt_k * dim)
}

/// Node count making the T^g average exact: in each s_j the integrand is a
/// trigonometric polynomial of degree at most k·max|W| + max|ϖ|, and a
/// periodic trapezoid sum with more nodes than the degree is already exact.
/// Twice the degree plus a margin keeps the margin uniform over ϖ sweeps.
pub fn exact_average_nodes(action: &TorusAction, varpi: &[i64], k: usize) -> usize {
    let max_w = action
        .weights()
        .iter()
        .flatten()
        .map(|w| w.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let max_varpi = varpi
        .iter()
        .map(|m| m.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    STATE_NODES_BASE.max(2 * k * max_w + 2 * max_varpi + 8)
}

/// The state u_k attached to Λ, evaluated at x.
pub fn compute_u_k(
    lambda: &LegendrianImmersion,
    k: usize,
    x: &BundlePoint,
) -> Result<C64, StatesError> {
    compute_u_k_with_nodes(lambda, k, x, default_state_nodes(k, lambda.dim()))
}

/// u_k(x) with an explicit base node count per dimension (the doubling check
/// still runs on top of it).  Useful for convergence diagnostics.
pub fn compute_u_k_with_nodes(
    lambda: &LegendrianImmersion,
    k: usize,
    x: &BundlePoint,
    base_nodes: usize,
) -> Result<C64, StatesError> {
    if lambda.ambient() != x.ambient() {
        return Err(StatesError::AmbientMismatch {
            expected: x.ambient(),
            got: lambda.ambient(),
        });
    }
    let constant = SzegoKernel::for_point(x).constant(k);
    let mut failure: Option<LegendrianError> = None;
    let mut integrand = |t: &[f64]| state_integrand(lambda, k, x, t, &mut failure);
    let quad = quadrature::trapezoid_torus_doubling(
        lambda.dim(),
        base_nodes,
        QUADRATURE_DOUBLING_REL,
        &mut integrand,
    );
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(quad?.value * C64::new(constant, 0.0))
}

/// Integrand ⟨x, ι(t)⟩^k·f_λ(t)·D_Λ(t), with the kernel constant hoisted
/// out of the node loop.  Immersion failures are parked in `failure` so the
/// quadrature loop can finish; the caller re-raises them.
fn state_integrand(
    lambda: &LegendrianImmersion,
    k: usize,
    x: &BundlePoint,
    t: &[f64],
    failure: &mut Option<LegendrianError>,
) -> C64 {
    if failure.is_some() {
        return C64::new(0.0, 0.0);
    }
    let y = match lambda.point(t) {
        Ok(y) => y,
        Err(e) => {
            *failure = Some(e);
            return C64::new(0.0, 0.0);
        }
    };
    let density = match lambda.riemannian_density(t) {
        Ok(d) => d,
        Err(e) => {
            *failure = Some(e);
            return C64::new(0.0, 0.0);
        }
    };
    let ip = hermitian(x.coords(), y.coords());
    ip.powu(k as u32) * lambda.amplitude(t) * C64::new(density, 0.0)
}

/// Isotype component u_{k,ϖ}(x) = (2π)^{−g}∫ e^{−iϖ·s}·u_k((−s)·x) d^g s.
///
/// The group average and the Λ-quadrature run as one mixed-count trapezoid
/// sum: the s block keeps the exact count from [`exact_average_nodes`] on
/// every level, while the immersion block doubles until converged.
pub fn compute_u_k_varpi(
    lambda: &LegendrianImmersion,
    action: &TorusAction,
    varpi: &[i64],
    k: usize,
    x: &BundlePoint,
) -> Result<C64, StatesError> {
    if lambda.ambient() != x.ambient() {
        return Err(StatesError::AmbientMismatch {
            expected: x.ambient(),
            got: lambda.ambient(),
        });
    }
    if action.ambient() != x.ambient() {
        return Err(StatesError::AmbientMismatch {
            expected: x.ambient(),
            got: action.ambient(),
        });
    }
    if varpi.len() != action.g() {
        return Err(StatesError::IsotypeShape {
            got: varpi.len(),
            expected: action.g(),
        });
    }
    let g = action.g();
    if g == 0 {
        return compute_u_k(lambda, k, x);
    }
    let d = lambda.dim();
    let m_s = exact_average_nodes(action, varpi, k);
    let m_t = default_state_nodes(k, d);
    let constant = SzegoKernel::for_point(x).constant(k);
    let haar = TAU.powi(g as i32).recip();
    let mut failure: Option<LegendrianError> = None;
    let mut integrand = |st: &[f64]| -> C64 {
        if failure.is_some() {
            return C64::new(0.0, 0.0);
        }
        let s_neg = RVector::from_fn(g, |j, _| -st[j]);
        let moved = action.act(&s_neg, x);
        // χ_ϖ evaluated at −s is exactly the e^{−iϖ·s} average weight.
        let character = action.character(varpi, &s_neg);
        character * state_integrand(lambda, k, &moved, &st[g..], &mut failure)
    };
    let nodes: Vec<usize> = std::iter::repeat(m_s)
        .take(g)
        .chain(std::iter::repeat(m_t).take(d))
        .collect();
    let quad =
        quadrature::trapezoid_torus_mixed_doubling(&nodes, d, QUADRATURE_DOUBLING_REL, &mut integrand);
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(quad?.value * C64::new(constant * haar, 0.0))
}

/// Hermitian L²(X) pairing (u_k^Λ, v_k^Σ), or of the isotype components
/// u_{k,ϖ}, v_{k,ϖ} when an action and a label are supplied.
///
/// The X-integral never has to be carried out: by the reproducing property
/// (u_k, v_k) = ∫ f_λ(t)·conj(v_k(ι_Λ(t)))·D_Λ(t) dt, and since the isotype projection is an orthogonal projector,
/// (u_{k,ϖ}, v_{k,ϖ}) = (u_k, v_{k,ϖ}) collapses onto Λ the same way.
/// Expanding v on the fly gives one joint quadrature over (s, t, τ) with an
/// exact node count in s and a doubling check over (t, τ).
pub fn hermitian_product(
    lambda: &LegendrianImmersion,
    sigma: &LegendrianImmersion,
    k: usize,
    equivariance: Option<(&TorusAction, &[i64])>,
) -> Result<C64, StatesError> {
    let m_s = match equivariance {
        Some((action, varpi)) => exact_average_nodes(action, varpi, k),
        None => 0,
    };
    pairing_core(
        lambda,
        sigma,
        k,
        equivariance,
        m_s,
        default_state_nodes(k, lambda.dim()),
        default_state_nodes(k, sigma.dim()),
    )
}

fn pairing_core(
    lambda: &LegendrianImmersion,
    sigma: &LegendrianImmersion,
    k: usize,
    equivariance: Option<(&TorusAction, &[i64])>,
    m_s: usize,
    m_t: usize,
    m_tau: usize,
) -> Result<C64, StatesError> {
    if sigma.ambient() != lambda.ambient() {
        return Err(StatesError::AmbientMismatch {
            expected: lambda.ambient(),
            got: sigma.ambient(),
        });
    }
    let g = match equivariance {
        Some((action, varpi)) => {
            if action.ambient() != lambda.ambient() {
                return Err(StatesError::AmbientMismatch {
                    expected: lambda.ambient(),
                    got: action.ambient(),
                });
            }
            if varpi.len() != action.g() {
                return Err(StatesError::IsotypeShape {
                    got: varpi.len(),
                    expected: action.g(),
                });
            }
            action.g()
        }
        None => 0,
    };
    assert!(lambda.ambient() >= 2, "states live on S^{{2n+1}} with n ≥ 1");
    let constant = SzegoKernel::new(lambda.ambient() - 1).constant(k);
    let d_l = lambda.dim();
    let d_s = sigma.dim();
    let haar = TAU.powi(g as i32).recip();
    let mut failure: Option<LegendrianError> = None;
    let mut integrand = |u: &[f64]| -> C64 {
        if failure.is_some() {
            return C64::new(0.0, 0.0);
        }
        let (s, rest) = u.split_at(g);
        let (t, tau) = rest.split_at(d_l);
        let (y_l, y_s) = match (lambda.point(t), sigma.point(tau)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                failure = Some(e);
                return C64::new(0.0, 0.0);
            }
        };
        let (dens_l, dens_s) = match (lambda.riemannian_density(t), sigma.riemannian_density(tau))
        {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                failure = Some(e);
                return C64::new(0.0, 0.0);
            }
        };
        // conj(v_{k,ϖ}(y)) = (2π)^{−g}∫ e^{iϖ·s}·c·⟨ι_Σ(τ), (−s)·y⟩^k
        //                      ·conj(f_σ(τ))·D_Σ(τ) dτ ds.
        let (target, character) = match equivariance {
            Some((action, varpi)) => {
                let s_vec = RVector::from_column_slice(s);
                let s_neg = -&s_vec;
                (action.act(&s_neg, &y_l), action.character(varpi, &s_vec))
            }
            None => (y_l, C64::new(1.0, 0.0)),
        };
        let ip = hermitian(y_s.coords(), target.coords());
        character
            * ip.powu(k as u32)
            * lambda.amplitude(t)
            * sigma.amplitude(tau).conj()
            * C64::new(dens_l * dens_s, 0.0)
    };
    let nodes: Vec<usize> = std::iter::repeat(m_s)
        .take(g)
        .chain(std::iter::repeat(m_t).take(d_l))
        .chain(std::iter::repeat(m_tau).take(d_s))
        .collect();
    let quad = quadrature::trapezoid_torus_mixed_doubling(
        &nodes,
        d_l + d_s,
        QUADRATURE_DOUBLING_REL,
        &mut integrand,
    );
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(quad?.value * C64::new(constant * haar, 0.0))
}

/// A labelled map k ↦ value: the hand-off format between state evaluation
/// and asymptotic fitting.  Entries stay sorted by level.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSequence {
    meta: String,
    entries: Vec<(usize, C64)>,
}

impl StateSequence {
    pub fn new(meta: impl Into<String>) -> Self {
        StateSequence {
            meta: meta.into(),
            entries: Vec::new(),
        }
    }

    pub fn from_pairs(
        meta: impl Into<String>,
        pairs: impl IntoIterator<Item = (usize, C64)>,
    ) -> Self {
        let mut seq = StateSequence::new(meta);
        for (k, v) in pairs {
            seq.push(k, v);
        }
        seq
    }

    /// Inserts or replaces the value at level k.
    pub fn push(&mut self, k: usize, value: C64) {
        match self.entries.binary_search_by_key(&k, |&(kk, _)| kk) {
            Ok(i) => self.entries[i].1 = value,
            Err(i) => self.entries.insert(i, (k, value)),
        }
    }

    /// Human-readable description of what the sequence measures.
    pub fn meta(&self) -> &str {
        &self.meta
    }

    /// Entries as (k, value), ascending in k.
    pub fn entries(&self) -> &[(usize, C64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value_at(&self, k: usize) -> Option<C64> {
        self.entries
            .binary_search_by_key(&k, |&(kk, _)| kk)
            .ok()
            .map(|i| self.entries[i].1)
    }
}
