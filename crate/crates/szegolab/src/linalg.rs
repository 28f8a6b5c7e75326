//! Small dense linear-algebra helpers shared across the crate.
//!
//! Everything operates on dynamically sized `nalgebra` types.  Problem
//! dimensions are tiny (real ambient dimension ≤ 16), so the code favors
//! clarity over allocation thrift.  The one nontrivial routine is
//! [`det_inv_sqrt`], which evaluates det(A)^{−1/2} on the branch that
//! Gaussian integrals and stationary phase require.

use thiserror::Error;

use crate::tolerances::RANK_TOL;
use crate::{CMatrix, CVector, RMatrix, RVector, C64};

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix becomes singular along the continuation path (|det| = {det_norm:.3e} at s = {s:.6})")]
    SingularPath { s: f64, det_norm: f64 },
    #[error("square-root branch tracking failed; the pencil spectrum likely crosses the negative real axis")]
    BranchTracking,
}

/// Hermitian product ⟨a, b⟩ = Σᵢ aᵢ b̄ᵢ, antilinear in the second slot.
///
/// Every inner product in this crate (kernel, contact form, Gram matrices)
/// goes through this function so the convention lives in one place.
pub fn hermitian(a: &CVector, b: &CVector) -> C64 {
    // nalgebra's dotc conjugates the receiver.
    b.dotc(a)
}

/// Entrywise real part.
pub fn re_mat(m: &CMatrix) -> RMatrix {
    m.map(|c| c.re)
}

/// Entrywise imaginary part.
pub fn im_mat(m: &CMatrix) -> RMatrix {
    m.map(|c| c.im)
}

/// Real matrix promoted to a complex one with zero imaginary part.
pub fn to_complex_mat(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

/// Complex n-vector ζ = p + iq as the stacked real 2n-vector (p, q).
pub fn complex_to_real(v: &CVector) -> RVector {
    let n = v.len();
    RVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Inverse of [`complex_to_real`]: (p, q) ↦ p + iq.
pub fn real_to_complex(w: &RVector) -> CVector {
    assert!(w.len() % 2 == 0, "chart vector must have even length");
    let n = w.len() / 2;
    CVector::from_fn(n, |i, _| C64::new(w[i], w[i + n]))
}

/// Stack column vectors into a matrix.
pub fn columns_to_matrix(cols: &[RVector], nrows: usize) -> RMatrix {
    let mut m = RMatrix::zeros(nrows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        assert_eq!(c.len(), nrows);
        m.set_column(j, c);
    }
    m
}

/// The columns of a matrix as owned vectors.
pub fn matrix_to_columns(m: &RMatrix) -> Vec<RVector> {
    (0..m.ncols()).map(|j| m.column(j).into_owned()).collect()
}

/// Modified Gram–Schmidt in input order with a re-orthogonalization pass.
///
/// Vectors numerically dependent on their predecessors are dropped; the
/// span and the order of the survivors are preserved.  Callers rely on the
/// ordering: adapted charts are built by feeding distinguished directions
/// first.
pub fn orthonormalize(vectors: &[RVector]) -> Vec<RVector> {
    let mut basis: Vec<RVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let scale = v.norm().max(1.0);
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let n = w.norm();
        if n > RANK_TOL * scale {
            basis.push(w.map(|x| x / n));
        }
    }
    basis
}

/// Gram–Schmidt over ℂ with respect to [`hermitian`], in input order,
/// dropping dependent vectors.
pub fn orthonormalize_complex(vectors: &[CVector]) -> Vec<CVector> {
    let one = C64::new(1.0, 0.0);
    let mut basis: Vec<CVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let scale = v.norm().max(1.0);
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = hermitian(&w, b);
                w.axpy(-c, b, one);
            }
        }
        let n = w.norm();
        if n > RANK_TOL * scale {
            basis.push(w.map(|x| x / n));
        }
    }
    basis
}

/// Numerical rank via singular values, relative to the largest one.
pub fn rank(m: &RMatrix) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Principal angles (radians, ascending) between the spans of the two
/// column families.  Returns min(dim, dim') angles.
pub fn principal_angles(a: &[RVector], b: &[RVector]) -> Vec<f64> {
    let qa = orthonormalize(a);
    let qb = orthonormalize(b);
    if qa.is_empty() || qb.is_empty() {
        return Vec::new();
    }
    let ma = columns_to_matrix(&qa, qa[0].len());
    let mb = columns_to_matrix(&qb, qb[0].len());
    let mut sv: Vec<f64> = (ma.transpose() * mb)
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv.into_iter().map(|s| s.clamp(-1.0, 1.0).acos()).collect()
}

/// Orthonormal basis of the kernel of `m`.
pub fn nullspace(m: &RMatrix) -> Vec<RVector> {
    let (r, c) = m.shape();
    if c == 0 {
        return Vec::new();
    }
    // Pad wide matrices to square so the thin SVD still exposes the full
    // right-singular basis.
    let mp = if r >= c {
        m.clone()
    } else {
        let mut p = RMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    };
    let svd = mp.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let mut out = Vec::new();
    for i in 0..vt.nrows() {
        let s = if i < sv.len() { sv[i] } else { 0.0 };
        if s <= RANK_TOL * smax.max(1.0) {
            out.push(vt.row(i).transpose());
        }
    }
    out
}

/// Positive definiteness of the symmetric part, decided by Cholesky.
pub fn positive_definite(m: &RMatrix) -> bool {
    let sym = (m + m.transpose()) * 0.5;
    nalgebra::Cholesky::new(sym).is_some()
}

/// Branch-tracked det(A)^{−1/2}.
///
/// The branch is fixed by continuity along the segment (1−s)I + sA starting
/// from value 1 at the identity.  For A with positive-semidefinite real
/// part (and A nonsingular) the segment never meets a singular matrix, so
/// the continuation is well defined; this extends the principal branch
/// through arguments beyond ±π, which matters for products of several
/// right-half-plane eigenvalues.  The argument of det is accumulated over
/// adaptively subdivided steps, each kept below π/2.
pub fn det_inv_sqrt(a: &CMatrix) -> Result<C64, LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "det_inv_sqrt needs a square matrix");
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let det_at = |s: f64| -> C64 {
        let mut m = a * C64::new(s, 0.0);
        for i in 0..n {
            m[(i, i)] += C64::new(1.0 - s, 0.0);
        }
        m.determinant()
    };
    let mut s_prev = 0.0;
    let mut d_prev = C64::new(1.0, 0.0);
    let mut total_arg = 0.0;
    // Uniform initial grid (stack pops ascending s), refined by halving
    // whenever one step turns the argument by more than one radian.  The
    // one-radian gate leaves a wide margin below the 2π − 1 aliasing
    // threshold of a single-step reading.
    let initial = (2 * n).max(16);
    let mut pending: Vec<f64> = (1..=initial).rev().map(|j| j as f64 / initial as f64).collect();
    let mut steps = 0usize;
    while let Some(&s_next) = pending.last() {
        steps += 1;
        if steps > 10_000 {
            return Err(LinalgError::BranchTracking);
        }
        let d = det_at(s_next);
        if d.norm() < 1e-280 {
            return Err(LinalgError::SingularPath {
                s: s_next,
                det_norm: d.norm(),
            });
        }
        let delta = (d / d_prev).arg();
        if delta.abs() > 1.0 {
            if s_next - s_prev < 1e-12 {
                return Err(LinalgError::BranchTracking);
            }
            pending.push(0.5 * (s_prev + s_next));
            continue;
        }
        total_arg += delta;
        d_prev = d;
        s_prev = s_next;
        pending.pop();
    }
    let r = d_prev.norm();
    Ok(C64::from_polar(r.powf(-0.5), -0.5 * total_arg))
}
