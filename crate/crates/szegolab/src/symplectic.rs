//! Symplectic linear algebra on chart coordinates.
//!
//! Chart tangent spaces are ℝ^{2n} with coordinates w = (p, q), identified
//! with ℂⁿ via ζ = p + iq.  The symplectic form is Ω(w, w′) = p·q′ − q·p′,
//! the complex structure J is multiplication by i, and the compatible
//! metric is the Euclidean one.  This module provides:
//!
//! * subspace predicates (isotropic, Lagrangian) on [`RealSubspace`];
//! * the ι_J invariant of a pair of Lagrangian subspaces;
//! * the orbit-adapted R/T matrices, the induced four-component tangent
//!   decomposition, and the quadratic forms S and P governing Gaussian
//!   concentration profiles;
//! * the Ξ density factor det(RᵗR + iRᵗTR)^{−1/2} / V_eff;
//! * closed-form Gaussian integrals ∫ exp(−uᵗAu + i bᵗu) du.

use thiserror::Error;

use crate::linalg::{
    columns_to_matrix, det_inv_sqrt, im_mat, matrix_to_columns, nullspace, orthonormalize,
    positive_definite, re_mat, LinalgError,
};
use crate::tolerances::{ISOTROPY_TOL, RT_CONSTRAINT_TOL};
use crate::{CMatrix, CVector, RMatrix, RVector, C64};

#[derive(Debug, Error)]
pub enum SymplecticError {
    #[error("ambient dimension {ambient} is odd; chart coordinates come in (p, q) pairs")]
    OddAmbient { ambient: usize },
    #[error("vector has length {got}, ambient dimension is {ambient}")]
    DimensionMismatch { got: usize, ambient: usize },
    #[error("spanning set is degenerate: {got} vectors span only {rank} dimensions")]
    DegenerateSpan { got: usize, rank: usize },
    #[error("subspace is not Lagrangian (dimension {dim} in ℝ^{ambient}, max |Ω| on basis pairs = {omega_max:.3e})")]
    NotLagrangian {
        dim: usize,
        ambient: usize,
        omega_max: f64,
    },
    #[error("orbit directions are not orthonormal (max Gram deviation {deviation:.3e})")]
    NonOrthonormalOrbitBasis { deviation: f64 },
    #[error("orbit directions are not isotropic (max |Ω| = {omega_max:.3e}); RᵗTR would not be symmetric")]
    NonIsotropicOrbitBasis { omega_max: f64 },
    #[error("orbit p-components are rank deficient (rank {rank} < g = {g}); the chart is not adapted")]
    RankDeficientOrbitProjection { rank: usize, g: usize },
    #[error("effective potential must be positive, got {v_eff}")]
    NonPositivePotential { v_eff: f64 },
    #[error("Gaussian matrix is not symmetric (max deviation {deviation:.3e})")]
    NotSymmetric { deviation: f64 },
    #[error("Gaussian matrix has non-positive real part; the integral diverges")]
    NotPositive,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A linear subspace of ℝ^{2n}, stored as an orthonormal column basis.
#[derive(Debug, Clone)]
pub struct RealSubspace {
    ambient_dim: usize,
    basis: RMatrix,
}

impl RealSubspace {
    /// Builds the span of the given vectors.  The input must be linearly
    /// independent: a dependent spanning set is reported as an error rather
    /// than silently projected away.
    pub fn new(ambient_dim: usize, spanning: &[RVector]) -> Result<Self, SymplecticError> {
        if ambient_dim % 2 != 0 {
            return Err(SymplecticError::OddAmbient {
                ambient: ambient_dim,
            });
        }
        for v in spanning {
            if v.len() != ambient_dim {
                return Err(SymplecticError::DimensionMismatch {
                    got: v.len(),
                    ambient: ambient_dim,
                });
            }
        }
        let basis = orthonormalize(spanning);
        if basis.len() != spanning.len() {
            return Err(SymplecticError::DegenerateSpan {
                got: spanning.len(),
                rank: basis.len(),
            });
        }
        Ok(RealSubspace {
            ambient_dim,
            basis: columns_to_matrix(&basis, ambient_dim),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal basis, as matrix columns.
    pub fn basis(&self) -> &RMatrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<RVector> {
        matrix_to_columns(&self.basis)
    }
}

/// Symplectic form Ω(w, w′) = p·q′ − q·p′ on stacked (p, q) coordinates.
pub fn omega(w: &RVector, w2: &RVector) -> f64 {
    assert_eq!(w.len(), w2.len());
    assert!(w.len() % 2 == 0);
    let n = w.len() / 2;
    let mut acc = 0.0;
    for i in 0..n {
        acc += w[i] * w2[i + n] - w[i + n] * w2[i];
    }
    acc
}

/// The matrix J with Ω(u, v) = uᵗ J v.
fn omega_matrix(n: usize) -> RMatrix {
    let mut j = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, i + n)] = 1.0;
        j[(i + n, i)] = -1.0;
    }
    j
}

/// Largest |Ω| over basis pairs; zero for isotropic subspaces.
fn max_omega_on_basis(sub: &RealSubspace) -> f64 {
    let cols = sub.basis_vectors();
    let mut worst: f64 = 0.0;
    for i in 0..cols.len() {
        for j in (i + 1)..cols.len() {
            worst = worst.max(omega(&cols[i], &cols[j]).abs());
        }
    }
    worst
}

pub fn is_isotropic(sub: &RealSubspace) -> bool {
    max_omega_on_basis(sub) < ISOTROPY_TOL
}

/// Lagrangian = isotropic of the maximal dimension n.
pub fn is_lagrangian(sub: &RealSubspace) -> bool {
    sub.dim() * 2 == sub.ambient_dim() && is_isotropic(sub)
}

/// A validated pair of Lagrangian subspaces of the same chart space.
#[derive(Debug, Clone)]
pub struct LagrangianPair {
    pub first: RealSubspace,
    pub second: RealSubspace,
}

impl LagrangianPair {
    pub fn new(first: RealSubspace, second: RealSubspace) -> Result<Self, SymplecticError> {
        if first.ambient_dim() != second.ambient_dim() {
            return Err(SymplecticError::DimensionMismatch {
                got: second.ambient_dim(),
                ambient: first.ambient_dim(),
            });
        }
        for sub in [&first, &second] {
            if !is_lagrangian(sub) {
                return Err(SymplecticError::NotLagrangian {
                    dim: sub.dim(),
                    ambient: sub.ambient_dim(),
                    omega_max: max_omega_on_basis(sub),
                });
            }
        }
        Ok(LagrangianPair { first, second })
    }
}

/// The invariant ι_J(L, L′) of a pair of Lagrangian subspaces.
///
/// Writing L = (L ∩ L′) ⊕ U and L′ = (L ∩ L′) ⊕ U′ with orthogonal
/// complements taken inside each subspace, ι_J = |det(Ω(u_i, u′_j))| over
/// orthonormal bases of U and U′.  It is 1 for equal subspaces and |sin ϑ|
/// for two lines meeting at angle ϑ; it vanishes in no transverse
/// configuration.
pub fn iota_invariant(pair: &LagrangianPair) -> f64 {
    let ambient = pair.first.ambient_dim();
    let d1 = pair.first.dim();
    let d2 = pair.second.dim();
    // Intersection from the kernel of [B1 | −B2]: a kernel vector (a, b)
    // means B1·a = B2·b is a shared direction.
    let mut stacked = RMatrix::zeros(ambient, d1 + d2);
    stacked.view_mut((0, 0), (ambient, d1)).copy_from(pair.first.basis());
    stacked
        .view_mut((0, d1), (ambient, d2))
        .copy_from(&(-pair.second.basis()));
    let shared: Vec<RVector> = nullspace(&stacked)
        .iter()
        .map(|ab| pair.first.basis() * ab.rows(0, d1).into_owned())
        .collect();
    let shared = orthonormalize(&shared);

    // Complement of the intersection inside each subspace: orthonormalize
    // the shared part first, then the subspace basis; survivors beyond the
    // shared block are the complement.
    let complement = |sub: &RealSubspace| -> Vec<RVector> {
        let mut pool = shared.clone();
        pool.extend(sub.basis_vectors());
        orthonormalize(&pool).split_off(shared.len())
    };
    let u = complement(&pair.first);
    let v = complement(&pair.second);
    debug_assert_eq!(u.len(), v.len());
    let m = u.len();
    if m == 0 {
        return 1.0;
    }
    let b = RMatrix::from_fn(m, m, |i, j| omega(&u[i], &v[j]));
    b.determinant().abs()
}

/// Orbit data in an adapted chart: R holds the p-components and T maps the
/// p-components to the q-components of an orthonormal basis of the orbit
/// tangent.
#[derive(Debug, Clone)]
pub struct RTData {
    n: usize,
    g: usize,
    r: RMatrix,
    t: RMatrix,
}

impl RTData {
    /// The g = 0 case: no orbit directions at all.
    pub fn trivial(n: usize) -> Self {
        RTData {
            n,
            g: 0,
            r: RMatrix::zeros(n, 0),
            t: RMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn r(&self) -> &RMatrix {
        &self.r
    }

    pub fn t(&self) -> &RMatrix {
        &self.t
    }

    /// RᵗR + i RᵗTR, the complex g×g matrix whose continued inverse square
    /// root enters the Ξ factor.
    pub fn complex_gram(&self) -> CMatrix {
        let rtr = self.r.transpose() * &self.r;
        let rttr = self.r.transpose() * &self.t * &self.r;
        CMatrix::from_fn(self.g, self.g, |i, j| C64::new(rtr[(i, j)], rttr[(i, j)]))
    }

    fn projector_onto_range_r(&self) -> RMatrix {
        if self.g == 0 {
            return RMatrix::zeros(self.n, self.n);
        }
        let rtr_inv = (self.r.transpose() * &self.r)
            .try_inverse()
            .expect("R has full column rank by construction");
        &self.r * rtr_inv * self.r.transpose()
    }
}

/// Builds [`RTData`] from an orthonormal, isotropic family of orbit
/// directions expressed in chart coordinates (each vector is a stacked
/// (p, q) ∈ ℝ^{2n}).
pub fn compute_rt(orbit_directions: &[RVector]) -> Result<RTData, SymplecticError> {
    let g = orbit_directions.len();
    assert!(g > 0, "use RTData::trivial for actions without orbit directions");
    let ambient = orbit_directions[0].len();
    if ambient % 2 != 0 {
        return Err(SymplecticError::OddAmbient { ambient });
    }
    let n = ambient / 2;
    for v in orbit_directions {
        if v.len() != ambient {
            return Err(SymplecticError::DimensionMismatch {
                got: v.len(),
                ambient,
            });
        }
    }
    // Orthonormality: the Gram matrix of the directions is the identity.
    // This is exactly the constraint RᵗR + RᵗTᵗTR = I_g below.
    let mut gram_dev: f64 = 0.0;
    for i in 0..g {
        for j in 0..g {
            let expect = if i == j { 1.0 } else { 0.0 };
            gram_dev = gram_dev.max((orbit_directions[i].dot(&orbit_directions[j]) - expect).abs());
        }
    }
    if gram_dev > RT_CONSTRAINT_TOL {
        return Err(SymplecticError::NonOrthonormalOrbitBasis { deviation: gram_dev });
    }
    // Isotropy: Ω vanishes on the orbit tangent.  This is the symmetry of
    // RᵗTR below.
    let mut omega_max: f64 = 0.0;
    for i in 0..g {
        for j in (i + 1)..g {
            omega_max = omega_max.max(omega(&orbit_directions[i], &orbit_directions[j]).abs());
        }
    }
    if omega_max > ISOTROPY_TOL {
        return Err(SymplecticError::NonIsotropicOrbitBasis { omega_max });
    }
    let r = RMatrix::from_fn(n, g, |i, j| orbit_directions[j][i]);
    let q = RMatrix::from_fn(n, g, |i, j| orbit_directions[j][i + n]);
    let r_rank = crate::linalg::rank(&r);
    if r_rank < g {
        return Err(SymplecticError::RankDeficientOrbitProjection { rank: r_rank, g });
    }
    let rtr_inv = (r.transpose() * &r)
        .try_inverse()
        .ok_or(SymplecticError::RankDeficientOrbitProjection { rank: r_rank, g })?;
    // T sends each p_j to q_j and kills range(R)^⊥.
    let t = &q * rtr_inv * r.transpose();
    let data = RTData { n, g, r, t };
    debug_assert!({
        let rtr = data.r.transpose() * &data.r;
        let tr = &data.t * &data.r;
        let lhs = rtr + tr.transpose() * tr;
        (lhs - RMatrix::identity(g, g)).norm() < 1e-8
    });
    Ok(data)
}

/// The four-component direct-sum decomposition of a chart tangent vector
/// induced by the orbit data:
///
/// * `w_d` lies in the orbit tangent {(Rc, TRc)},
/// * `w_a` is a p-type vector with p-part orthogonal to range(R),
/// * `w_b` is a q-type vector with q-part in range(R),
/// * `w_c` is a q-type vector with q-part orthogonal to range(R).
#[derive(Debug, Clone)]
pub struct TangentDecomposition {
    pub w_a: RVector,
    pub w_b: RVector,
    pub w_c: RVector,
    pub w_d: RVector,
}

pub fn decompose_tangent(rt: &RTData, w: &RVector) -> Result<TangentDecomposition, SymplecticError> {
    let n = rt.n;
    if w.len() != 2 * n {
        return Err(SymplecticError::DimensionMismatch {
            got: w.len(),
            ambient: 2 * n,
        });
    }
    let p = w.rows(0, n).into_owned();
    let q = w.rows(n, n).into_owned();
    let p_r = rt.projector_onto_range_r();
    let p_par = &p_r * &p;
    let p_a = &p - &p_par;
    // T vanishes on range(R)^⊥, so Tp already equals TRc.
    let tp = &rt.t * &p;
    let q_tilde = &q - &tp;
    let q_b = &p_r * &q_tilde;
    let q_c = &q_tilde - &q_b;
    let stack = |pp: &RVector, qq: &RVector| {
        RVector::from_fn(2 * n, |i, _| if i < n { pp[i] } else { qq[i - n] })
    };
    let zero = RVector::zeros(n);
    let dec = TangentDecomposition {
        w_a: stack(&p_a, &zero),
        w_b: stack(&zero, &q_b),
        w_c: stack(&zero, &q_c),
        w_d: stack(&p_par, &tp),
    };
    debug_assert!((&dec.w_a + &dec.w_b + &dec.w_c + &dec.w_d - w).norm() < 1e-9 * w.norm().max(1.0));
    Ok(dec)
}

/// The quadratic forms governing the Gaussian factor e^{−S(w) − iP(w)} of a
/// leading-term profile, as symmetric 2n×2n matrices: S(w) = wᵗ S w and
/// P(w) = wᵗ P w.
#[derive(Debug, Clone)]
pub struct QuadraticFormsSP {
    pub s: RMatrix,
    pub p: RMatrix,
}

impl QuadraticFormsSP {
    pub fn s_value(&self, w: &RVector) -> f64 {
        (w.transpose() * &self.s * w)[(0, 0)]
    }

    pub fn p_value(&self, w: &RVector) -> f64 {
        (w.transpose() * &self.p * w)[(0, 0)]
    }

    /// S + iP as a complex symmetric matrix.
    pub fn complex_form(&self) -> CMatrix {
        CMatrix::from_fn(self.s.nrows(), self.s.ncols(), |i, j| {
            C64::new(self.s[(i, j)], self.p[(i, j)])
        })
    }
}

/// Builds S and P from the orbit data.
///
/// With v(w) = Rᵗ(q_b − 3Tᵗp_a) and F + iG = (RᵗR + iRᵗTR)^{−1}:
///
/// * S(w) = ‖p_a‖² + ¼ v(w)ᵗ F v(w),
/// * P(w) = ¼ v(w)ᵗ G v(w) − C(w),  C(w) = Ω(w − w_d, w_a) + 2Ω(w, w_d).
///
/// In the action-free limit g = 0 this degenerates to S(w) = ‖p‖² and
/// P(w) = p·q.
pub fn quadratic_forms_sp(rt: &RTData) -> Result<QuadraticFormsSP, SymplecticError> {
    let n = rt.n;
    let g = rt.g;
    let two_n = 2 * n;
    let p_r = rt.projector_onto_range_r();
    let i_n = RMatrix::identity(n, n);

    // Π_a^p : w ↦ p_a, as an n×2n matrix.
    let mut pi_a = RMatrix::zeros(n, two_n);
    pi_a.view_mut((0, 0), (n, n)).copy_from(&(&i_n - &p_r));

    // K : w ↦ v(w) = Rᵗ(q − Tp) − 3 RᵗTᵗ p_a, as a g×2n matrix.
    let k = if g == 0 {
        RMatrix::zeros(0, two_n)
    } else {
        let mut k0 = RMatrix::zeros(g, two_n);
        k0.view_mut((0, 0), (g, n))
            .copy_from(&(-(rt.r.transpose() * &rt.t)));
        k0.view_mut((0, n), (g, n)).copy_from(&rt.r.transpose());
        let correction = rt.r.transpose() * rt.t.transpose() * &pi_a;
        k0 - correction * 3.0
    };

    let (f, gmat) = if g == 0 {
        (RMatrix::zeros(0, 0), RMatrix::zeros(0, 0))
    } else {
        let h = rt
            .complex_gram()
            .try_inverse()
            .expect("RᵗR + iRᵗTR has positive-definite real part");
        (re_mat(&h), im_mat(&h))
    };

    let s = pi_a.transpose() * &pi_a + k.transpose() * &f * &k * 0.25;

    // C(w) is assembled from the component maps D_a, D_d (columnwise via
    // the decomposition) and symmetrized.
    let mut d_a = RMatrix::zeros(two_n, two_n);
    let mut d_d = RMatrix::zeros(two_n, two_n);
    for i in 0..two_n {
        let mut e = RVector::zeros(two_n);
        e[i] = 1.0;
        let dec = decompose_tangent(rt, &e)?;
        d_a.set_column(i, &dec.w_a);
        d_d.set_column(i, &dec.w_d);
    }
    let j = omega_matrix(n);
    let c_bilin = (RMatrix::identity(two_n, two_n) - &d_d).transpose() * &j * &d_a
        + &j * &d_d * 2.0;
    let c_sym = (&c_bilin + c_bilin.transpose()) * 0.5;
    let p = k.transpose() * &gmat * &k * 0.25 - c_sym;

    Ok(QuadraticFormsSP { s, p })
}

/// The density factor Ξ = det(RᵗR + iRᵗTR)^{−1/2} / V_eff, on the branch
/// continued from the identity.
pub fn xi_lambda(rt: &RTData, v_eff: f64) -> Result<C64, SymplecticError> {
    if !(v_eff > 0.0) {
        return Err(SymplecticError::NonPositivePotential { v_eff });
    }
    let det_part = det_inv_sqrt(&rt.complex_gram())?;
    Ok(det_part / v_eff)
}

/// Closed-form Gaussian integral ∫_{ℝ^g} exp(−uᵗAu + i bᵗu) du
/// = π^{g/2} det(A)^{−1/2} exp(−¼ bᵗA^{−1}b), for complex symmetric A with
/// positive-definite real part.  The failure of the positivity test is the
/// numerical signature of a non-transverse crossing upstream, so it is
/// reported as an error, never patched over.
pub fn gaussian_fourier(a: &CMatrix, b: &CVector) -> Result<C64, SymplecticError> {
    let g = a.nrows();
    if a.ncols() != g {
        return Err(SymplecticError::DimensionMismatch {
            got: a.ncols(),
            ambient: g,
        });
    }
    if b.len() != g {
        return Err(SymplecticError::DimensionMismatch { got: b.len(), ambient: g });
    }
    if g == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let dev = (a - a.transpose()).norm();
    if dev > RT_CONSTRAINT_TOL * a.norm().max(1.0) {
        return Err(SymplecticError::NotSymmetric { deviation: dev });
    }
    if !positive_definite(&re_mat(a)) {
        return Err(SymplecticError::NotPositive);
    }
    let det_part = det_inv_sqrt(a)?;
    let z = a
        .clone()
        .lu()
        .solve(b)
        .ok_or(SymplecticError::NotPositive)?;
    let mut btz = C64::new(0.0, 0.0);
    for i in 0..g {
        btz += b[i] * z[i];
    }
    let pi_pow = std::f64::consts::PI.powf(g as f64 / 2.0);
    Ok(pi_pow * det_part * (-0.25 * btz).exp())
}
