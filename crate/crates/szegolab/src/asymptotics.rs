//! Leading-order predictions for Legendrian states and their pairings,
//! an independent stationary-phase oracle, and classifiers that decide
//! whether a computed sequence follows the predicted power law.
//!
//! Every prediction here is a finite sum over the discrete geometric data
//! located by [`crate::legendrian`]: return elements e^{ih}(s·x) ∈ Λ for a
//! state evaluated at x, crossings e^{ih}(s·ι_Λ(t)) = ι_Σ(τ) for a pairing.
//! Each element contributes one oscillatory term c_j·e^{ikφ_j}, and the
//! whole prediction is k^γ·Σ_j c_j·e^{ikφ_j} with a half-integer growth
//! exponent γ.  The coefficients bundle the amplitude of the immersion,
//! torus characters, the density factor Ξ = det(RᵗR + iRᵗTR)^{−1/2}/V_eff,
//! and a Gaussian factor e^{−S(w)−iP(w)} in the displacement w read in a
//! Heisenberg chart adapted to the tangent space at the landing point.
//!
//! The stationary-phase oracle evaluates ∫ e^{ikS(t)} a(t) dt by locating
//! the real critical points of S on the parameter torus and summing
//! e^{ikS(t_c)}·a(t_c)·det(kS″(t_c)/(2πi))^{−1/2} on the branch continued
//! from positive-definite imaginary part.  It shares no geometry with the
//! predictors, which is what makes the cross-checks between the two routes
//! meaningful.
//!
//! Fits run on (k, value) sequences: a least-squares power law in log-log
//! coordinates after dead interference levels are dropped (optionally
//! dividing out a supplied phase pattern), a geometric-decay classification
//! when log|v| is decisively linear in k itself, and a rapid-decay test
//! that checks |v_k|·k^N stays eventually decreasing for all N up to a cap.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::geometry::{
    effective_potential, heisenberg_chart, horizontal_part, orbit_chart_frame, BundlePoint,
    GeometryError, HeisenbergChart, TorusAction,
};
use crate::legendrian::{
    default_grid, find_crossings, find_return_elements, solve_on_torus, transversality_check,
    LegendrianError, LegendrianImmersion,
};
use crate::linalg::{
    columns_to_matrix, complex_to_real, det_inv_sqrt, hermitian, nullspace, orthonormalize,
    LinalgError,
};
use crate::symplectic::{
    compute_rt, gaussian_fourier, iota_invariant, quadratic_forms_sp, xi_lambda, LagrangianPair,
    RTData, RealSubspace, SymplecticError,
};
use crate::tolerances::{
    DEAD_PHASE_EXPONENT, DEGENERATE_HESSIAN_TOL, FIT_DEAD_LEVEL_REL, FIT_DECAY_ADVANTAGE,
    FIT_DECAY_MIN_DROP, FIT_MIN_LEVELS, FIT_OSCILLATION_RMS, LEGENDRIAN_TOL, MAX_ISOLATED_ROOTS,
    QUADRATURE_ABS_FLOOR, RANK_TOL, ROOT_DEDUP_RADIUS,
};
use crate::{C64, CMatrix, CVector, RMatrix, RVector};

/// Errors from prediction assembly, the stationary-phase oracle, and
/// sequence classification.
#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("ambient mismatch: expected ℂ^{expected}, got ℂ^{got}")]
    AmbientMismatch { got: usize, expected: usize },
    #[error("the immersion is {dim}-dimensional; leading-term predictions need middle dimension n = {n}")]
    NotMiddleDimensional { dim: usize, n: usize },
    #[error("isotype label has {got} entries but the torus has rank {expected}")]
    IsotypeShape { got: usize, expected: usize },
    #[error("displacement has {got} complex entries, expected n = {expected}")]
    DisplacementShape { got: usize, expected: usize },
    #[error("no return elements: the swept-out probe never meets the Legendrian, so the state decays faster than any power of k")]
    NoReturnElements,
    #[error("crossing {index} is not transverse: the pushed tangent space does not graph over the reference coordinates (σ_min = {sigma_min:.3e})")]
    NonTransverseCrossing { index: usize, sigma_min: f64 },
    #[error("crossing {index}: graph matrix symmetry defect {defect:.3e}; the pushed tangent space is not Lagrangian to working precision")]
    NonSymmetricGraph { index: usize, defect: f64 },
    #[error("degenerate stationary point at t = {location:?} (|det S″| = {det:.3e})")]
    DegenerateCriticalPoint { location: Vec<f64>, det: f64 },
    #[error("{found} stationary points survived deduplication; the critical set is not isolated")]
    CriticalSetNotIsolated { found: usize },
    #[error("Im S reaches {min_im:.3e} below zero, so e^{{ikS}} grows exponentially and the expansion does not apply")]
    UnstablePhase { min_im: f64 },
    #[error("need at least {needed} usable levels for an asymptotic fit, got {got}")]
    NotEnoughData { got: usize, needed: usize },
    #[error("log-residuals oscillate with dominant period {period} in k; fit a constant-phase subsequence or supply the interference pattern")]
    OscillatoryResiduals { period: usize },
    #[error("the sequence decays geometrically (ratio ≈ {ratio:.4} per unit k); it has no power-law exponent")]
    GeometricDecay { ratio: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Legendrian(#[from] LegendrianError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One oscillatory contribution c·e^{ikφ} of a leading-term prediction.
#[derive(Debug, Clone)]
pub struct PredictionTerm {
    /// Phase slope φ: the term oscillates as e^{ikφ} in the level k.
    pub phase: f64,
    /// Level-independent complex coefficient.
    pub coefficient: C64,
}

/// A predicted leading term k^γ·Σ_j c_j·e^{ikφ_j}, kept as structured data
/// so interference between the contributions can be evaluated exactly at
/// every level.
#[derive(Debug, Clone)]
pub struct LeadingTermPrediction {
    exponent: f64,
    terms: Vec<PredictionTerm>,
}

impl LeadingTermPrediction {
    /// Assembles a prediction from a growth exponent and explicit terms.
    pub fn new(exponent: f64, terms: Vec<PredictionTerm>) -> Self {
        LeadingTermPrediction { exponent, terms }
    }

    /// Growth exponent γ of k^γ.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// The per-element contributions, in the deterministic element order.
    pub fn terms(&self) -> &[PredictionTerm] {
        &self.terms
    }

    /// Interference coefficient Σ_j c_j·e^{ikφ_j} at level k.
    pub fn coefficient(&self, k: usize) -> C64 {
        self.terms
            .iter()
            .map(|t| t.coefficient * C64::from_polar(1.0, k as f64 * t.phase))
            .sum()
    }

    /// Full predicted value k^γ·Σ_j c_j·e^{ikφ_j}.
    pub fn eval(&self, k: usize) -> C64 {
        self.coefficient(k) * (k as f64).powf(self.exponent)
    }
}

/// Heisenberg chart at `point` whose adapted directions are the projected
/// tangent vectors, in their given order.
fn tangent_adapted_chart(
    point: &BundlePoint,
    tangents: &[CVector],
) -> Result<HeisenbergChart, GeometryError> {
    let projected: Vec<CVector> = tangents
        .iter()
        .map(|v| horizontal_part(point, v))
        .collect();
    heisenberg_chart(point, &projected)
}

/// Adapted chart at a crossing target, with the tangent frame rearranged so
/// its first n−g adapted directions are tangent to the moment zero level.
/// The orbit directions then meet only the last g momentum axes, which is
/// the arrangement the graph matrix of [`predict_pairing_transverse`]
/// assumes.
fn level_refined_chart(
    action: &TorusAction,
    point: &BundlePoint,
    tangents: &[CVector],
) -> Result<HeisenbergChart, GeometryError> {
    let projected: Vec<CVector> = tangents
        .iter()
        .map(|v| horizontal_part(point, v))
        .collect();
    let g = action.g();
    if g == 0 {
        return heisenberg_chart(point, &projected);
    }
    let m = projected.len();
    let coords = point.coords();
    // Moment differentials along the frame: dΦ_a(u) = 2 Σ_r W_{a,r}·Re(x̄_r u_r).
    let level_jac = RMatrix::from_fn(g, m, |a, i| {
        let weights = &action.weights()[a];
        (0..coords.len())
            .map(|r| 2.0 * weights[r] as f64 * (coords[r].conj() * projected[i][r]).re)
            .sum()
    });
    let mut combos = nullspace(&level_jac);
    for i in 0..m {
        let mut e = RVector::zeros(m);
        e[i] = 1.0;
        combos.push(e);
    }
    let arranged: Vec<CVector> = orthonormalize(&combos)
        .iter()
        .map(|c| {
            let mut acc = CVector::zeros(coords.len());
            for (i, u) in projected.iter().enumerate() {
                acc += u * C64::new(c[i], 0.0);
            }
            acc
        })
        .collect();
    heisenberg_chart(point, &arranged)
}

/// Shared prefactor (1/|G_m|)·π^{−n}·√((2π)^{n+g}/2^g) of the equivariant
/// leading terms.
fn leading_prefactor(n: usize, g: usize, stabilizer: u64) -> f64 {
    (TAU.powi((n + g) as i32) / 2f64.powi(g as i32)).sqrt()
        / (PI.powi(n as i32) * stabilizer as f64)
}

/// Chart coordinates of the pushed tangent frame at a landing point.
fn pushed_frame_columns(
    chart: &HeisenbergChart,
    target: &BundlePoint,
    tangents: &[CVector],
    push: impl Fn(&CVector) -> CVector,
) -> Result<Vec<RVector>, GeometryError> {
    tangents
        .iter()
        .map(|v| chart.horizontal_coords(&horizontal_part(target, &push(v))))
        .collect()
}

/// Predicted leading term of the isotype-ϖ state of `lambda` evaluated at
/// the displaced probe x + w/√k, for a torus action with moment zero level
/// meeting Λ transversally.
///
/// The displacement w ∈ ℂⁿ is read in the canonical (unadapted) chart at x;
/// evaluate the state at `heisenberg_chart(x, &[])?.displace(…)` to probe
/// the same point.  Each return element e^{ih_j}(s_j·x) = ι(t_j) contributes
/// χ_ϖ(s_j)·Ξ_Λ(x_j)·e^{−S(w_j)−iP(w_j)}·f_λ(t_j) at phase slope −h_j, with
/// w_j the displacement pushed into the tangent-adapted chart at the landing
/// point; the common prefactor is (1/|G_m|)·π^{−n}·√((2π)^{n+g}/2^g) and the
/// growth exponent is (n−g)/2.
pub fn predict_theorem_main(
    x: &BundlePoint,
    lambda: &LegendrianImmersion,
    action: &TorusAction,
    varpi: &[i64],
    w: &CVector,
) -> Result<LeadingTermPrediction, AsymptoticsError> {
    let n = x.base_dim();
    let g = action.g();
    if lambda.ambient() != x.ambient() {
        return Err(AsymptoticsError::AmbientMismatch {
            got: lambda.ambient(),
            expected: x.ambient(),
        });
    }
    if lambda.dim() != n {
        return Err(AsymptoticsError::NotMiddleDimensional {
            dim: lambda.dim(),
            n,
        });
    }
    if varpi.len() != g {
        return Err(AsymptoticsError::IsotypeShape {
            got: varpi.len(),
            expected: g,
        });
    }
    if w.len() != n {
        return Err(AsymptoticsError::DisplacementShape {
            got: w.len(),
            expected: n,
        });
    }
    if g > 0 {
        transversality_check(lambda, action)?;
    }
    let elements = find_return_elements(x, lambda, Some(action))?;
    if elements.is_empty() {
        return Err(AsymptoticsError::NoReturnElements);
    }

    // V_eff and the stabilizer are constant on the orbit all landing points
    // share with x, so they are computed once.
    let orbit = effective_potential(action, x)?;
    let chart_x = heisenberg_chart(x, &[])?;
    let frame_w = chart_x.frame_vector(&complex_to_real(w));
    let prefactor = leading_prefactor(n, g, orbit.stabilizer_order);

    let mut terms = Vec::with_capacity(elements.len());
    for el in &elements {
        let t = el.t_params.as_slice();
        let chart_j = tangent_adapted_chart(&el.target, &lambda.tangent_frame(t))?;
        let rt = if g == 0 {
            RTData::trivial(n)
        } else {
            compute_rt(&orbit_chart_frame(action, &chart_j)?)?
        };
        let xi = xi_lambda(&rt, orbit.v_eff)?;
        let forms = quadratic_forms_sp(&rt)?;
        let moved = action.act_vector(&el.g_params, &frame_w) * C64::from_polar(1.0, el.h);
        let w_j = chart_j.horizontal_coords(&horizontal_part(&el.target, &moved))?;
        let gauss = C64::new(-forms.s_value(&w_j), -forms.p_value(&w_j)).exp();
        let chi = action.character(varpi, &el.g_params);
        terms.push(PredictionTerm {
            phase: -el.h,
            coefficient: chi * xi * gauss * lambda.amplitude(t) * prefactor,
        });
    }
    Ok(LeadingTermPrediction::new(
        (n as f64 - g as f64) / 2.0,
        terms,
    ))
}

/// Predicted leading term of the plain (action-free) state at the displaced
/// probe x + w/√k: growth k^{n/2}, prefactor (2/π)^{n/2}, and per element
/// the Gaussian e^{−‖w_j^⊥‖² − iΩ(w_j^⊥, w_j^∥)} with w_j split against the
/// tangent space of Λ at the landing point.
pub fn predict_action_free(
    x: &BundlePoint,
    lambda: &LegendrianImmersion,
    w: &CVector,
) -> Result<LeadingTermPrediction, AsymptoticsError> {
    let n = x.base_dim();
    if lambda.ambient() != x.ambient() {
        return Err(AsymptoticsError::AmbientMismatch {
            got: lambda.ambient(),
            expected: x.ambient(),
        });
    }
    if lambda.dim() != n {
        return Err(AsymptoticsError::NotMiddleDimensional {
            dim: lambda.dim(),
            n,
        });
    }
    if w.len() != n {
        return Err(AsymptoticsError::DisplacementShape {
            got: w.len(),
            expected: n,
        });
    }
    let elements = find_return_elements(x, lambda, None)?;
    if elements.is_empty() {
        return Err(AsymptoticsError::NoReturnElements);
    }
    let chart_x = heisenberg_chart(x, &[])?;
    let frame_w = chart_x.frame_vector(&complex_to_real(w));
    let prefactor = (2.0 / PI).powf(n as f64 / 2.0);

    let mut terms = Vec::with_capacity(elements.len());
    for el in &elements {
        let t = el.t_params.as_slice();
        let chart_j = tangent_adapted_chart(&el.target, &lambda.tangent_frame(t))?;
        let moved = &frame_w * C64::from_polar(1.0, el.h);
        let w_j = chart_j.horizontal_coords(&horizontal_part(&el.target, &moved))?;
        let p = w_j.rows(0, n).into_owned();
        let q = w_j.rows(n, n).into_owned();
        let gauss = C64::new(-p.norm_squared(), -p.dot(&q)).exp();
        terms.push(PredictionTerm {
            phase: -el.h,
            coefficient: gauss * lambda.amplitude(t) * prefactor,
        });
    }
    Ok(LeadingTermPrediction::new(n as f64 / 2.0, terms))
}

/// Predicted leading term of the pairing (u_k, v_k) of the states attached
/// to `lambda` and `sigma`, summed over the transverse crossings of the
/// swept-out Λ with Σ.
///
/// Action-free, each crossing contributes at phase slope +h_j the
/// coefficient (2π)^{n/2}·π^{−n}·f_λ·conj(f_σ)·ι_J^{−1}·𝔊(I − iZ_j), where
/// Z_j graphs the pushed tangent space of Λ over the momentum axes of the
/// Σ-adapted chart, ι_J is the Lagrangian-pair invariant of the two tangent
/// spaces, and 𝔊 is the closed-form Gaussian integral.  With `equivariance`
/// present the growth drops to k^{−g/2} and each crossing carries
/// χ_ϖ(s_j)⁻¹·conj(Ξ_Σ(ŷ_j))·√det(A_jᵗA_j)·𝔊(A_jᵗ(S − iP)A_j) instead,
/// with A_j the graph parameterization of the pushed tangent space in the
/// level-refined Σ-adapted chart and S, P the quadratic forms of that
/// chart's orbit data.  Crossings whose tangent data cannot be written as a
/// graph are reported as non-transverse, never patched.
pub fn predict_pairing_transverse(
    lambda: &LegendrianImmersion,
    sigma: &LegendrianImmersion,
    equivariance: Option<(&TorusAction, &[i64])>,
) -> Result<LeadingTermPrediction, AsymptoticsError> {
    if sigma.ambient() != lambda.ambient() {
        return Err(AsymptoticsError::AmbientMismatch {
            got: sigma.ambient(),
            expected: lambda.ambient(),
        });
    }
    let n = lambda.ambient() - 1;
    for dim in [lambda.dim(), sigma.dim()] {
        if dim != n {
            return Err(AsymptoticsError::NotMiddleDimensional { dim, n });
        }
    }
    match equivariance {
        None => pairing_action_free(lambda, sigma, n),
        Some((action, varpi)) => {
            if action.ambient() != lambda.ambient() {
                return Err(AsymptoticsError::AmbientMismatch {
                    got: action.ambient(),
                    expected: lambda.ambient(),
                });
            }
            if varpi.len() != action.g() {
                return Err(AsymptoticsError::IsotypeShape {
                    got: varpi.len(),
                    expected: action.g(),
                });
            }
            pairing_equivariant(lambda, sigma, action, varpi, n)
        }
    }
}

fn pairing_action_free(
    lambda: &LegendrianImmersion,
    sigma: &LegendrianImmersion,
    n: usize,
) -> Result<LeadingTermPrediction, AsymptoticsError> {
    let crossings = find_crossings(lambda, sigma, None)?;
    let mut terms = Vec::with_capacity(crossings.len());
    for (index, el) in crossings.iter().enumerate() {
        let tau = el.tau_params.as_slice();
        let t = el.t_params.as_slice();
        let chart = tangent_adapted_chart(&el.target, &sigma.tangent_frame(tau))?;
        let cols = pushed_frame_columns(&chart, &el.target, &lambda.tangent_frame(t), |v| {
            v * C64::from_polar(1.0, el.h)
        })?;
        let f_mat = columns_to_matrix(&cols, 2 * n);
        let p_block = f_mat.view((0, 0), (n, n)).into_owned();
        let q_block = f_mat.view((n, 0), (n, n)).into_owned();
        let sv = p_block.clone().svd(false, false).singular_values;
        let sigma_min = sv.min();
        if sigma_min <= RANK_TOL * sv.max().max(1.0) {
            return Err(AsymptoticsError::NonTransverseCrossing { index, sigma_min });
        }
        let p_inv = p_block
            .try_inverse()
            .ok_or(AsymptoticsError::NonTransverseCrossing { index, sigma_min })?;
        let z_raw = &q_block * p_inv;
        let defect = (&z_raw - z_raw.transpose()).norm() / (1.0 + z_raw.norm());
        if defect > LEGENDRIAN_TOL {
            return Err(AsymptoticsError::NonSymmetricGraph { index, defect });
        }
        let z = (&z_raw + z_raw.transpose()) * 0.5;

        let momentum_axes: Vec<RVector> = (0..n)
            .map(|i| {
                let mut e = RVector::zeros(2 * n);
                e[n + i] = 1.0;
                e
            })
            .collect();
        let pair = LagrangianPair::new(
            RealSubspace::new(2 * n, &cols)?,
            RealSubspace::new(2 * n, &momentum_axes)?,
        )?;
        let iota = iota_invariant(&pair);

        let gauss_arg = CMatrix::from_fn(n, n, |i, j| {
            C64::new(if i == j { 1.0 } else { 0.0 }, -z[(i, j)])
        });
        let gf = gaussian_fourier(&gauss_arg, &CVector::zeros(n))?;
        let coefficient = gf
            * lambda.amplitude(t)
            * sigma.amplitude(tau).conj()
            * (TAU.powf(n as f64 / 2.0) / (PI.powi(n as i32) * iota));
        terms.push(PredictionTerm {
            phase: el.h,
            coefficient,
        });
    }
    Ok(LeadingTermPrediction::new(0.0, terms))
}

fn pairing_equivariant(
    lambda: &LegendrianImmersion,
    sigma: &LegendrianImmersion,
    action: &TorusAction,
    varpi: &[i64],
    n: usize,
) -> Result<LeadingTermPrediction, AsymptoticsError> {
    let g = action.g();
    let crossings = find_crossings(lambda, sigma, Some(action))?;
    let mut terms = Vec::with_capacity(crossings.len());
    for (index, el) in crossings.iter().enumerate() {
        let tau = el.tau_params.as_slice();
        let t = el.t_params.as_slice();
        let orbit = effective_potential(action, &el.target)?;
        let chart = level_refined_chart(action, &el.target, &sigma.tangent_frame(tau))?;
        let rt = if g == 0 {
            RTData::trivial(n)
        } else {
            compute_rt(&orbit_chart_frame(action, &chart)?)?
        };
        let xi = xi_lambda(&rt, orbit.v_eff)?;
        let forms = quadratic_forms_sp(&rt)?;

        let cols = pushed_frame_columns(&chart, &el.target, &lambda.tangent_frame(t), |v| {
            action.act_vector(&el.g_params, v) * C64::from_polar(1.0, el.h)
        })?;
        let f_mat = columns_to_matrix(&cols, 2 * n);
        // Graph coordinates on the pushed tangent space: the first n−g
        // position components together with the last g momentum components.
        let m_rows = RMatrix::from_fn(n, n, |r, c| {
            if r < n - g {
                f_mat[(r, c)]
            } else {
                f_mat[(n + r, c)]
            }
        });
        let sv = m_rows.clone().svd(false, false).singular_values;
        let sigma_min = sv.min();
        if sigma_min <= RANK_TOL * sv.max().max(1.0) {
            return Err(AsymptoticsError::NonTransverseCrossing { index, sigma_min });
        }
        let m_inv = m_rows
            .try_inverse()
            .ok_or(AsymptoticsError::NonTransverseCrossing { index, sigma_min })?;
        let a = &f_mat * m_inv;
        let density_sq = (a.transpose() * &a).determinant();
        if !(density_sq > 0.0) {
            return Err(AsymptoticsError::NonTransverseCrossing {
                index,
                sigma_min: 0.0,
            });
        }
        let s_proj = a.transpose() * &forms.s * &a;
        let p_proj = a.transpose() * &forms.p * &a;
        let gauss_arg =
            CMatrix::from_fn(n, n, |i, j| C64::new(s_proj[(i, j)], -p_proj[(i, j)]));
        let gf = gaussian_fourier(&gauss_arg, &CVector::zeros(n))?;
        let chi_inv = action.character(varpi, &(-el.g_params.clone()));
        let coefficient = gf
            * chi_inv
            * xi.conj()
            * lambda.amplitude(t)
            * sigma.amplitude(tau).conj()
            * (density_sq.sqrt() * leading_prefactor(n, g, orbit.stabilizer_order));
        terms.push(PredictionTerm {
            phase: el.h,
            coefficient,
        });
    }
    Ok(LeadingTermPrediction::new(-(g as f64) / 2.0, terms))
}

/// A phase S on a parameter torus, with analytic derivatives up to second
/// order.  Phases must keep Im S ≥ 0 for e^{ikS} to stay bounded.
pub trait PhaseFunction {
    /// Number of torus parameters.
    fn dim(&self) -> usize;
    /// S(t).
    fn value(&self, t: &[f64]) -> C64;
    /// ∇S(t).
    fn gradient(&self, t: &[f64]) -> CVector;
    /// S″(t).
    fn hessian(&self, t: &[f64]) -> CMatrix;
}

/// Complex trigonometric polynomial S(t) = Σ_m c_m·e^{i m·t} over integer
/// frequency vectors, with exact derivatives.  The workhorse for randomized
/// oracle cross-checks.
#[derive(Debug, Clone)]
pub struct TrigPolyPhase {
    dim: usize,
    terms: Vec<(C64, Vec<i64>)>,
}

impl TrigPolyPhase {
    /// Builds the polynomial from (coefficient, frequency) pairs.
    pub fn new(dim: usize, terms: Vec<(C64, Vec<i64>)>) -> Self {
        assert!(
            terms.iter().all(|(_, m)| m.len() == dim),
            "every frequency vector needs one entry per dimension"
        );
        TrigPolyPhase { dim, terms }
    }

    /// The damped well i·Σ_j a_j(1 − cos t_j): nonnegative imaginary part,
    /// a single live critical point at the origin with Hessian i·diag(a).
    pub fn damped_well(weights: &[f64]) -> Self {
        let dim = weights.len();
        let mut terms = vec![(C64::new(0.0, weights.iter().sum()), vec![0i64; dim])];
        for (j, &a) in weights.iter().enumerate() {
            for sign in [1i64, -1] {
                let mut m = vec![0i64; dim];
                m[j] = sign;
                terms.push((C64::new(0.0, -a / 2.0), m));
            }
        }
        TrigPolyPhase::new(dim, terms)
    }
}

impl PhaseFunction for TrigPolyPhase {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, t: &[f64]) -> C64 {
        self.terms
            .iter()
            .map(|(c, m)| {
                let angle: f64 = m.iter().zip(t).map(|(&mi, &ti)| mi as f64 * ti).sum();
                c * C64::from_polar(1.0, angle)
            })
            .sum()
    }

    fn gradient(&self, t: &[f64]) -> CVector {
        let mut out = CVector::zeros(self.dim);
        for (c, m) in &self.terms {
            let angle: f64 = m.iter().zip(t).map(|(&mi, &ti)| mi as f64 * ti).sum();
            let osc = c * C64::from_polar(1.0, angle);
            for j in 0..self.dim {
                out[j] += osc * C64::new(0.0, m[j] as f64);
            }
        }
        out
    }

    fn hessian(&self, t: &[f64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (c, m) in &self.terms {
            let angle: f64 = m.iter().zip(t).map(|(&mi, &ti)| mi as f64 * ti).sum();
            let osc = c * C64::from_polar(1.0, angle);
            for j in 0..self.dim {
                for l in 0..self.dim {
                    out[(j, l)] -= osc * (m[j] as f64 * m[l] as f64);
                }
            }
        }
        out
    }
}

/// The phase S(t) = −i·log⟨x, ι(t)⟩ whose oscillatory integral is the
/// state integrand: e^{ikS} = ⟨x, ι(t)⟩^k, Im S = −log|⟨x, ι(t)⟩| ≥ 0, and
/// the critical values are −h_j at the return elements.
pub struct LogKernelPhase<'a> {
    x: &'a BundlePoint,
    lambda: &'a LegendrianImmersion,
}

impl<'a> LogKernelPhase<'a> {
    /// Pairs a probe point with an immersion in the same ambient space.
    pub fn new(
        x: &'a BundlePoint,
        lambda: &'a LegendrianImmersion,
    ) -> Result<Self, AsymptoticsError> {
        if lambda.ambient() != x.ambient() {
            return Err(AsymptoticsError::AmbientMismatch {
                got: lambda.ambient(),
                expected: x.ambient(),
            });
        }
        Ok(LogKernelPhase { x, lambda })
    }

    fn pairing(&self, t: &[f64]) -> C64 {
        hermitian(self.x.coords(), &self.lambda.raw(t))
    }
}

impl PhaseFunction for LogKernelPhase<'_> {
    fn dim(&self) -> usize {
        self.lambda.dim()
    }

    fn value(&self, t: &[f64]) -> C64 {
        self.pairing(t).ln() * C64::new(0.0, -1.0)
    }

    fn gradient(&self, t: &[f64]) -> CVector {
        let ip = self.pairing(t);
        let frame = self.lambda.tangent_frame(t);
        CVector::from_fn(frame.len(), |j, _| {
            hermitian(self.x.coords(), &frame[j]) / ip * C64::new(0.0, -1.0)
        })
    }

    fn hessian(&self, t: &[f64]) -> CMatrix {
        let ip = self.pairing(t);
        let d = self.lambda.dim();
        let frame = self.lambda.tangent_frame(t);
        let first: Vec<C64> = (0..d)
            .map(|j| hermitian(self.x.coords(), &frame[j]))
            .collect();
        CMatrix::from_fn(d, d, |j, l| {
            let second = hermitian(self.x.coords(), &self.lambda.second_derivative(t, j, l));
            (second / ip - first[j] * first[l] / (ip * ip)) * C64::new(0.0, -1.0)
        })
    }
}

/// Report on one contributing stationary point of the oracle.
#[derive(Debug, Clone)]
pub struct StationaryPointReport {
    pub location: RVector,
    pub phase_value: C64,
    pub hessian: CMatrix,
    pub nondegenerate: bool,
}

/// Outcome of the stationary-phase oracle: either the leading sum with its
/// contributing points, or the verdict that no real stationary point exists
/// and the integral decays faster than any power of k.
#[derive(Debug, Clone)]
pub enum OracleOutcome {
    Sum {
        value: C64,
        points: Vec<StationaryPointReport>,
    },
    RapidDecay,
}

/// Minimum of Im S over the seed grid, the cheap global stability check.
fn grid_min_imaginary(phase: &dyn PhaseFunction, grid: usize) -> f64 {
    let d = phase.dim();
    let step = TAU / grid as f64;
    let total = grid.pow(d as u32);
    let mut idx = vec![0usize; d];
    let mut t = vec![0.0f64; d];
    let mut min_im = f64::INFINITY;
    for _ in 0..total {
        for (slot, &i) in t.iter_mut().zip(idx.iter()) {
            *slot = i as f64 * step;
        }
        let im = phase.value(&t).im;
        if im < min_im {
            min_im = im;
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < grid {
                break;
            }
            *slot = 0;
        }
    }
    min_im
}

/// Leading stationary-phase approximation of ∫_{T^d} e^{ikS(t)} a(t) dt:
/// the sum of e^{ikS(t_c)}·a(t_c)·det(kS″(t_c)/(2πi))^{−1/2} over the real
/// critical points of S, on the determinant branch continued from the
/// identity.  Points damped below e^{−40} are dropped; if none survive, or
/// no critical point exists at all, the integral is classified as rapidly
/// decaying.  Degenerate critical points and phases with negative imaginary
/// part are errors: the expansion does not apply and no value is invented.
pub fn stationary_phase_oracle(
    phase: &dyn PhaseFunction,
    amplitude: &mut dyn FnMut(&[f64]) -> C64,
    k: usize,
) -> Result<OracleOutcome, AsymptoticsError> {
    let d = phase.dim();
    assert!(d > 0, "the phase needs at least one parameter");
    assert!(k > 0, "the level must be positive");
    let grid = default_grid(d);

    let min_im = grid_min_imaginary(phase, grid);
    if min_im < -LEGENDRIAN_TOL {
        return Err(AsymptoticsError::UnstablePhase { min_im });
    }

    let residual = |u: &RVector| complex_to_real(&phase.gradient(u.as_slice()));
    let jacobian = |u: &RVector| {
        let h = phase.hessian(u.as_slice());
        RMatrix::from_fn(2 * d, d, |i, j| {
            if i < d {
                h[(i, j)].re
            } else {
                h[(i - d, j)].im
            }
        })
    };
    let roots = solve_on_torus(d, grid, &residual, &jacobian, ROOT_DEDUP_RADIUS);
    if roots.len() > MAX_ISOLATED_ROOTS {
        return Err(AsymptoticsError::CriticalSetNotIsolated { found: roots.len() });
    }

    let mut value = C64::new(0.0, 0.0);
    let mut points = Vec::new();
    for (u, _) in roots {
        let s_c = phase.value(u.as_slice());
        // Exponentially dead points first: their contribution is
        // O(e^{−k·Im S}) whatever the Hessian does, so degeneracy there
        // cannot poison the expansion.
        if (k as f64) * s_c.im > DEAD_PHASE_EXPONENT {
            continue;
        }
        let hess = phase.hessian(u.as_slice());
        let det = hess.determinant();
        if det.norm() < DEGENERATE_HESSIAN_TOL * hess.norm().powi(d as i32).max(f64::MIN_POSITIVE)
        {
            return Err(AsymptoticsError::DegenerateCriticalPoint {
                location: u.as_slice().to_vec(),
                det: det.norm(),
            });
        }
        let scaled = &hess * C64::new(0.0, -(k as f64) / TAU);
        let inv_sqrt = det_inv_sqrt(&scaled)?;
        value += (C64::new(0.0, k as f64) * s_c).exp() * amplitude(u.as_slice()) * inv_sqrt;
        points.push(StationaryPointReport {
            location: u,
            phase_value: s_c,
            hessian: hess,
            nondegenerate: true,
        });
    }
    if points.is_empty() {
        return Ok(OracleOutcome::RapidDecay);
    }
    Ok(OracleOutcome::Sum { value, points })
}

/// Least-squares line through (xs, ys): returns (slope, intercept).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len(), "mismatched sample lengths");
    assert!(xs.len() >= 2, "a line fit needs at least two points");
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = m * sxx - sx * sx;
    assert!(
        denom.abs() > f64::EPSILON * m * sxx.max(1.0),
        "abscissae must not be constant"
    );
    let slope = (m * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / m)
}

/// Result of a power-law fit |v_k| ≈ C·k^e on the usable levels.
#[derive(Debug, Clone)]
pub struct AsymptoticFit {
    /// Fitted exponent e.
    pub exponent: f64,
    /// Fitted modulus C = e^intercept.
    pub coefficient_modulus: f64,
    /// Signed log-space residuals, one per usable level.
    pub residuals: Vec<f64>,
    /// The levels that entered the fit, dead levels excluded.
    pub subsequence: Vec<usize>,
}

fn sum_squared_residuals(xs: &[f64], ys: &[f64], slope: f64, intercept: f64) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| (y - slope * x - intercept).powi(2))
        .sum()
}

/// Fits log|v| against log k by least squares.
///
/// With a `pattern`, each value is divided by the exactly-evaluated
/// interference coefficient Σ_j c_j e^{ikφ_j} first and levels where that
/// coefficient is destructively dead are dropped, so the fitted modulus is
/// the computed-to-predicted ratio (→ 1 when the prediction holds).
/// Without one, levels below the quadrature floor are dropped and the raw
/// modulus is fitted.  Sequences whose log-modulus is decisively linear in
/// k itself are classified as geometric decay, and a failed fit whose
/// residuals carry a dominant period in k is reported as unresolved
/// oscillation; neither is forced into a power law.
pub fn fit_power_law(
    entries: &[(usize, C64)],
    pattern: Option<&LeadingTermPrediction>,
) -> Result<AsymptoticFit, AsymptoticsError> {
    let mass: f64 = pattern
        .map(|p| p.terms().iter().map(|t| t.coefficient.norm()).sum())
        .unwrap_or(0.0);
    let mut levels: Vec<usize> = Vec::new();
    let mut logs: Vec<f64> = Vec::new();
    for &(k, v) in entries {
        if k == 0 || v.norm() < QUADRATURE_ABS_FLOOR {
            continue;
        }
        let magnitude = match pattern {
            Some(p) => {
                let c = p.coefficient(k).norm();
                if c < FIT_DEAD_LEVEL_REL * mass {
                    continue;
                }
                v.norm() / c
            }
            None => v.norm(),
        };
        levels.push(k);
        logs.push(magnitude.ln());
    }
    if levels.len() < FIT_MIN_LEVELS {
        return Err(AsymptoticsError::NotEnoughData {
            got: levels.len(),
            needed: FIT_MIN_LEVELS,
        });
    }

    let kf: Vec<f64> = levels.iter().map(|&k| k as f64).collect();
    let lk: Vec<f64> = kf.iter().map(|&k| k.ln()).collect();
    let (slope_lin, icept_lin) = fit_line(&kf, &logs);
    let (slope_log, icept_log) = fit_line(&lk, &logs);
    let sse_lin = sum_squared_residuals(&kf, &logs, slope_lin, icept_lin);
    let sse_log = sum_squared_residuals(&lk, &logs, slope_log, icept_log);

    let span = kf.iter().fold(f64::MIN, |a, &b| a.max(b))
        - kf.iter().fold(f64::MAX, |a, &b| a.min(b));
    if slope_lin < 0.0
        && slope_lin.abs() * span > FIT_DECAY_MIN_DROP
        && sse_lin < FIT_DECAY_ADVANTAGE * sse_log
    {
        return Err(AsymptoticsError::GeometricDecay {
            ratio: slope_lin.exp(),
        });
    }

    let residuals: Vec<f64> = lk
        .iter()
        .zip(&logs)
        .map(|(&x, &y)| y - slope_log * x - icept_log)
        .collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    if rms > FIT_OSCILLATION_RMS {
        if let Some(period) = dominant_period(&levels, &residuals) {
            return Err(AsymptoticsError::OscillatoryResiduals { period });
        }
    }

    Ok(AsymptoticFit {
        exponent: slope_log,
        coefficient_modulus: icept_log.exp(),
        residuals,
        subsequence: levels,
    })
}

/// Smallest period p ∈ 2..=8 whose residue classes of k explain most of the
/// residual variance, if any does.
fn dominant_period(levels: &[usize], residuals: &[f64]) -> Option<usize> {
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let total: f64 = residuals.iter().map(|r| (r - mean).powi(2)).sum();
    if total <= 0.0 {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for p in 2..=8usize {
        let mut groups: Vec<Vec<f64>> = vec![Vec::new(); p];
        for (&k, &r) in levels.iter().zip(residuals) {
            groups[k % p].push(r);
        }
        if groups.iter().any(|g| !g.is_empty() && g.len() < 2) {
            continue;
        }
        let within: f64 = groups
            .iter()
            .filter(|g| !g.is_empty())
            .map(|g| {
                let gm = g.iter().sum::<f64>() / g.len() as f64;
                g.iter().map(|r| (r - gm).powi(2)).sum::<f64>()
            })
            .sum();
        let score = 1.0 - within / total;
        if score > best.map_or(0.5, |(_, s)| s) {
            best = Some((p, score));
        }
    }
    // Prefer the smallest period within a whisker of the best score: a
    // genuine period p also scores high at its multiples.
    let (_, best_score) = best?;
    for p in 2..=8usize {
        let mut groups: Vec<Vec<f64>> = vec![Vec::new(); p];
        for (&k, &r) in levels.iter().zip(residuals) {
            groups[k % p].push(r);
        }
        if groups.iter().any(|g| !g.is_empty() && g.len() < 2) {
            continue;
        }
        let within: f64 = groups
            .iter()
            .filter(|g| !g.is_empty())
            .map(|g| {
                let gm = g.iter().sum::<f64>() / g.len() as f64;
                g.iter().map(|r| (r - gm).powi(2)).sum::<f64>()
            })
            .sum();
        if 1.0 - within / total >= best_score - 0.05 {
            return Some(p);
        }
    }
    None
}

/// True when the sequence decays faster than every power k^{−N} up to
/// N = n_max: for each N, the participating |v_k|·k^N must be eventually
/// nonincreasing (1% slack on the trailing half) and must end below half
/// its maximum.  Entries at the quadrature floor are exact zeros for this
/// purpose and never violate monotonicity.
pub fn rapid_decay_test(
    entries: &[(usize, C64)],
    n_max: usize,
) -> Result<bool, AsymptoticsError> {
    if entries.len() < FIT_MIN_LEVELS {
        return Err(AsymptoticsError::NotEnoughData {
            got: entries.len(),
            needed: FIT_MIN_LEVELS,
        });
    }
    let mut sorted: Vec<(usize, f64)> = entries.iter().map(|&(k, v)| (k, v.norm())).collect();
    sorted.sort_by_key(|&(k, _)| k);
    for power in 0..=n_max {
        let weighted: Vec<f64> = sorted
            .iter()
            .filter(|&&(_, m)| m >= QUADRATURE_ABS_FLOOR)
            .map(|&(k, m)| m * (k as f64).powi(power as i32))
            .collect();
        if weighted.len() < 2 {
            continue;
        }
        let w_max = weighted.iter().fold(0.0f64, |a, &b| a.max(b));
        for pair in weighted[weighted.len() / 2..].windows(2) {
            if pair[1] > 1.01 * pair[0] {
                return Ok(false);
            }
        }
        if *weighted.last().unwrap() > 0.5 * w_max {
            return Ok(false);
        }
    }
    Ok(true)
}
