//! The concrete model space: the unit sphere X = S^{2n+1} ⊆ ℂ^{n+1}, viewed
//! as a circle bundle over ℂPⁿ through the Hopf map.
//!
//! Conventions used throughout the crate:
//!
//! * the contact form is α_x(v) = Im⟨v, x⟩ and the horizontal space is
//!   H_x = {v : ⟨v, x⟩ = 0};
//! * the volume density on X is the round one divided by 2π, so that
//!   vol(X) = πⁿ/n! equals the Fubini–Study volume of the base;
//! * a torus T^g acts through an integer weight matrix W (g rows, n+1
//!   columns): (s·x)_i = e^{i(Wᵗs)_i} x_i, with moment map components
//!   Φ_j(x) = Σ_i W_{j,i}|x_i|² − shift_j;
//! * the full symmetry group is S¹ × T^g acting by (h, s)·x = e^{ih}(s·x).
//!
//! The Heisenberg chart at x ∈ X built here sends (θ, w) ∈ ℝ × ℝ^{2n} to
//! e^{iθ} U*(1, Aζ)ᵗ/√(1+‖ζ‖²) with ζ = p + iq, where U* is unitary with
//! first column x and A is an n×n unitary aligning the chart axes with
//! prescribed tangent data.  In these coordinates the contact form pulls
//! back to dθ + (p·dq − q·dp)/(1+‖ζ‖²) exactly, which is what makes the
//! chart the right frame for scaling asymptotics.

use thiserror::Error;

use crate::linalg::{complex_to_real, hermitian, orthonormalize, orthonormalize_complex, real_to_complex};
use crate::quadrature::trapezoid_torus;
use crate::tolerances::{
    CHART_RADIUS, LEGENDRIAN_TOL, ORBIT_VOLUME_NODES, SUPPORT_TOL, UNIT_SPHERE_TOL,
};
use crate::{CMatrix, CVector, RMatrix, RVector, C64};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point is not on the unit sphere (norm {norm})")]
    NotOnSphere { norm: f64 },
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("vector is not horizontal at the chart center (|⟨v, x⟩| = {residual:.3e})")]
    NotHorizontal { residual: f64 },
    #[error("adaptation directions are dependent: {got} vectors span {rank} real dimensions")]
    DegenerateAdaptation { got: usize, rank: usize },
    #[error("adaptation directions are not isotropic (max |Im⟨b_i, b_j⟩| = {omega_max:.3e}); no unitary chart rotation aligns them")]
    NonIsotropicAdaptation { omega_max: f64 },
    #[error("chart coordinate has norm {norm:.3} beyond the trusted radius {radius}")]
    ChartDomain { norm: f64, radius: f64 },
    #[error("weight row {row} has {len} entries, expected {expected}")]
    WeightShape { row: usize, len: usize, expected: usize },
    #[error("shift vector has length {got}, expected one entry per torus factor ({expected})")]
    ShiftShape { got: usize, expected: usize },
    #[error("the base point has a positive-dimensional stabilizer (support lattice rank {rank} < g = {g})")]
    PositiveDimensionalStabilizer { rank: usize, g: usize },
    #[error("orbit directions degenerate at the base point (Gram determinant {det:.3e})")]
    DegenerateOrbit { det: f64 },
}

/// A point of X, stored as a unit vector in ℂ^{n+1}.
#[derive(Debug, Clone)]
pub struct BundlePoint {
    coords: CVector,
}

impl BundlePoint {
    /// Accepts a vector within [`UNIT_SPHERE_TOL`] of unit norm and
    /// renormalizes the residual roundoff.
    pub fn new(coords: CVector) -> Result<Self, GeometryError> {
        let norm = coords.norm();
        if (norm - 1.0).abs() > UNIT_SPHERE_TOL {
            return Err(GeometryError::NotOnSphere { norm });
        }
        Ok(BundlePoint {
            coords: coords.map(|c| c / norm),
        })
    }

    /// Projects any nonzero vector to the sphere.
    pub fn normalized(coords: CVector) -> Result<Self, GeometryError> {
        let norm = coords.norm();
        if norm < SUPPORT_TOL {
            return Err(GeometryError::ZeroVector);
        }
        Ok(BundlePoint {
            coords: coords.map(|c| c / norm),
        })
    }

    pub fn coords(&self) -> &CVector {
        &self.coords
    }

    /// Complex dimension of the ambient space, n + 1.
    pub fn ambient(&self) -> usize {
        self.coords.len()
    }

    /// Complex dimension n of the projective base.
    pub fn base_dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// The circle action e^{ih}x on the fiber.
    pub fn circle_shift(&self, h: f64) -> BundlePoint {
        let phase = C64::from_polar(1.0, h);
        BundlePoint {
            coords: self.coords.map(|c| c * phase),
        }
    }
}

/// The image of a bundle point in the projective base.
#[derive(Debug, Clone)]
pub struct ProjectivePoint {
    representative: CVector,
}

impl ProjectivePoint {
    pub fn representative(&self) -> &CVector {
        &self.representative
    }

    /// Fubini–Study distance arccos |⟨x, y⟩| between base points.
    pub fn distance(&self, other: &ProjectivePoint) -> f64 {
        let c = hermitian(&self.representative, &other.representative)
            .norm()
            .clamp(0.0, 1.0);
        c.acos()
    }
}

/// Projection along the Hopf fiber: base points are unit vectors modulo
/// phase, compared through [`ProjectivePoint::distance`].
pub fn hopf_project(x: &BundlePoint) -> ProjectivePoint {
    ProjectivePoint {
        representative: x.coords.clone(),
    }
}

/// Contact form α_x(v) = Im⟨v, x⟩.
pub fn contact_form(x: &BundlePoint, v: &CVector) -> f64 {
    hermitian(v, &x.coords).im
}

/// Component of v in H_x = {⟨v, x⟩ = 0}.
pub fn horizontal_part(x: &BundlePoint, v: &CVector) -> CVector {
    let c = hermitian(v, &x.coords);
    v - x.coords.map(|xi| xi * c)
}

/// Heisenberg chart at a bundle point.
///
/// `unitary_frame` is the (n+1)×(n+1) unitary U* whose first column is the
/// center; `rotation` is the n×n unitary A whose j-th column is −i times
/// the j-th adapted tangent direction, so the q-axes of the chart map onto
/// the adaptation directions in their given order.
#[derive(Debug, Clone)]
pub struct HeisenbergChart {
    center: BundlePoint,
    unitary_frame: CMatrix,
    rotation: CMatrix,
}

/// Builds the chart at `center`, adapted to the given horizontal
/// directions.  The directions must be ℝ-independent and jointly isotropic
/// (Im⟨b_i, b_j⟩ = 0 after projection); both failures are reported, never
/// repaired silently.  Fewer than n directions are completed to a
/// Lagrangian frame deterministically from the standard basis.
pub fn heisenberg_chart(
    center: &BundlePoint,
    adapt_to: &[CVector],
) -> Result<HeisenbergChart, GeometryError> {
    let ambient = center.ambient();
    let n = center.base_dim();
    assert!(n >= 1, "the base must have positive dimension");

    // Unitary U* with first column the center, completed from the standard
    // basis in a fixed order.
    let mut pool: Vec<CVector> = Vec::with_capacity(ambient + 1);
    pool.push(center.coords.clone());
    for i in 0..ambient {
        pool.push(CVector::from_fn(ambient, |r, _| {
            if r == i {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }));
    }
    let columns = orthonormalize_complex(&pool);
    debug_assert_eq!(columns.len(), ambient);
    let mut u_star = CMatrix::zeros(ambient, ambient);
    for (j, c) in columns.iter().enumerate() {
        u_star.set_column(j, c);
    }

    // Push the adaptation directions through U and drop the first (zero)
    // coordinate.
    let u = u_star.adjoint();
    let mut images: Vec<CVector> = Vec::with_capacity(adapt_to.len());
    for v in adapt_to {
        if v.len() != ambient {
            return Err(GeometryError::DimensionMismatch {
                got: v.len(),
                expected: ambient,
            });
        }
        let pairing = hermitian(v, &center.coords).norm();
        if pairing > LEGENDRIAN_TOL * v.norm().max(1.0) {
            return Err(GeometryError::NotHorizontal { residual: pairing });
        }
        let w = &u * v;
        images.push(w.rows(1, n).into_owned());
    }

    // Real orthonormalization in input order; the order is what downstream
    // arrangements rely on.
    let real_images: Vec<RVector> = images.iter().map(complex_to_real).collect();
    let real_basis = orthonormalize(&real_images);
    if real_basis.len() != images.len() {
        return Err(GeometryError::DegenerateAdaptation {
            got: images.len(),
            rank: real_basis.len(),
        });
    }
    let tangent_basis: Vec<CVector> = real_basis.iter().map(real_to_complex).collect();
    let mut omega_max: f64 = 0.0;
    for i in 0..tangent_basis.len() {
        for j in (i + 1)..tangent_basis.len() {
            omega_max = omega_max.max(hermitian(&tangent_basis[i], &tangent_basis[j]).im.abs());
        }
    }
    if omega_max > LEGENDRIAN_TOL {
        return Err(GeometryError::NonIsotropicAdaptation { omega_max });
    }

    // Complete to n columns with complex Gram–Schmidt against everything
    // accepted so far; a complex-orthogonal extension of an isotropic
    // real-orthonormal family keeps the whole family unitary-compatible.
    let mut frame = tangent_basis;
    if frame.len() < n {
        let mut candidates: Vec<CVector> = frame.clone();
        for i in 0..n {
            candidates.push(CVector::from_fn(n, |r, _| {
                if r == i {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }));
        }
        let completed = orthonormalize_complex(&candidates);
        debug_assert_eq!(completed.len(), n);
        frame = completed;
    }

    let minus_i = C64::new(0.0, -1.0);
    let mut rotation = CMatrix::zeros(n, n);
    for (j, b) in frame.iter().enumerate() {
        rotation.set_column(j, &b.map(|c| c * minus_i));
    }

    Ok(HeisenbergChart {
        center: center.clone(),
        unitary_frame: u_star,
        rotation,
    })
}

impl HeisenbergChart {
    pub fn center(&self) -> &BundlePoint {
        &self.center
    }

    pub fn unitary_frame(&self) -> &CMatrix {
        &self.unitary_frame
    }

    pub fn rotation(&self) -> &CMatrix {
        &self.rotation
    }

    /// Complex dimension n of the base.
    pub fn n(&self) -> usize {
        self.rotation.nrows()
    }

    /// The chart map ρ(θ, w) = e^{iθ} U*(1, Aζ)ᵗ/√(1+‖ζ‖²), ζ = p + iq.
    pub fn point(&self, theta: f64, w: &RVector) -> Result<BundlePoint, GeometryError> {
        let n = self.n();
        if w.len() != 2 * n {
            return Err(GeometryError::DimensionMismatch {
                got: w.len(),
                expected: 2 * n,
            });
        }
        let zeta = real_to_complex(w);
        let scale = 1.0 / (1.0 + zeta.norm_squared()).sqrt();
        let rotated = &self.rotation * zeta;
        let mut lifted = CVector::zeros(n + 1);
        lifted[0] = C64::new(1.0, 0.0);
        for i in 0..n {
            lifted[i + 1] = rotated[i];
        }
        let phase = C64::from_polar(scale, theta);
        let coords = &self.unitary_frame * lifted.map(|c| c * phase);
        Ok(BundlePoint { coords })
    }

    /// Scaled displacement ρ(0, w/√k) used by the asymptotic probes.
    pub fn displace(&self, w: &RVector, k: usize) -> Result<BundlePoint, GeometryError> {
        assert!(k > 0);
        let scaled = w / (k as f64).sqrt();
        let norm = scaled.norm();
        if norm > CHART_RADIUS {
            return Err(GeometryError::ChartDomain {
                norm,
                radius: CHART_RADIUS,
            });
        }
        self.point(0.0, &scaled)
    }

    /// Ambient image U*(0, Aζ)ᵗ of a chart tangent vector at the center.
    pub fn frame_vector(&self, w: &RVector) -> CVector {
        let n = self.n();
        assert_eq!(w.len(), 2 * n);
        let rotated = &self.rotation * real_to_complex(w);
        let mut lifted = CVector::zeros(n + 1);
        for i in 0..n {
            lifted[i + 1] = rotated[i];
        }
        &self.unitary_frame * lifted
    }

    /// Chart coordinates of a horizontal vector at the center; exact
    /// inverse of [`Self::frame_vector`].  Vectors with a significant
    /// component outside H_x are rejected.
    pub fn horizontal_coords(&self, v: &CVector) -> Result<RVector, GeometryError> {
        let ambient = self.center.ambient();
        if v.len() != ambient {
            return Err(GeometryError::DimensionMismatch {
                got: v.len(),
                expected: ambient,
            });
        }
        let residual = hermitian(v, &self.center.coords).norm();
        if residual > LEGENDRIAN_TOL * v.norm().max(1.0) {
            return Err(GeometryError::NotHorizontal { residual });
        }
        let through = self.unitary_frame.adjoint() * v;
        let zeta = self.rotation.adjoint() * through.rows(1, self.n()).into_owned();
        Ok(complex_to_real(&zeta))
    }
}

/// A torus T^g acting diagonally with integer weights.
#[derive(Debug, Clone)]
pub struct TorusAction {
    ambient: usize,
    weights: Vec<Vec<i64>>,
    shift: RVector,
}

impl TorusAction {
    pub fn new(ambient: usize, weights: Vec<Vec<i64>>, shift: RVector) -> Result<Self, GeometryError> {
        for (row, w) in weights.iter().enumerate() {
            if w.len() != ambient {
                return Err(GeometryError::WeightShape {
                    row,
                    len: w.len(),
                    expected: ambient,
                });
            }
        }
        if shift.len() != weights.len() {
            return Err(GeometryError::ShiftShape {
                got: shift.len(),
                expected: weights.len(),
            });
        }
        Ok(TorusAction {
            ambient,
            weights,
            shift,
        })
    }

    /// The trivial group (g = 0); the action-free theory is the g = 0
    /// degeneration of the equivariant one.
    pub fn trivial(ambient: usize) -> Self {
        TorusAction {
            ambient,
            weights: Vec::new(),
            shift: RVector::zeros(0),
        }
    }

    pub fn g(&self) -> usize {
        self.weights.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn weights(&self) -> &[Vec<i64>] {
        &self.weights
    }

    pub fn shift(&self) -> &RVector {
        &self.shift
    }

    fn phases(&self, s: &RVector) -> Vec<C64> {
        assert_eq!(s.len(), self.g());
        (0..self.ambient)
            .map(|i| {
                let angle: f64 = self
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(j, row)| row[i] as f64 * s[j])
                    .sum();
                C64::from_polar(1.0, angle)
            })
            .collect()
    }

    /// The torus element at parameter s applied to a point.
    pub fn act(&self, s: &RVector, x: &BundlePoint) -> BundlePoint {
        let phases = self.phases(s);
        BundlePoint {
            coords: CVector::from_fn(self.ambient, |i, _| x.coords[i] * phases[i]),
        }
    }

    /// The same rotation applied to an ambient vector (the action is
    /// linear, so points and tangent vectors transform alike).
    pub fn act_vector(&self, s: &RVector, v: &CVector) -> CVector {
        let phases = self.phases(s);
        CVector::from_fn(self.ambient, |i, _| v[i] * phases[i])
    }

    /// Combined S¹ × T^g action (h, s)·x = e^{ih}(s·x).
    pub fn full_act(&self, h: f64, s: &RVector, x: &BundlePoint) -> BundlePoint {
        self.act(s, x).circle_shift(h)
    }

    /// Moment map components Φ_j(x) = Σ_i W_{j,i}|x_i|² − shift_j.
    pub fn moment_map(&self, x: &BundlePoint) -> RVector {
        RVector::from_fn(self.g(), |j, _| {
            let total: f64 = (0..self.ambient)
                .map(|i| self.weights[j][i] as f64 * x.coords[i].norm_sqr())
                .sum();
            total - self.shift[j]
        })
    }

    /// Infinitesimal generator ξ_j(x) = i·diag(W_j)·x of the j-th factor.
    pub fn orbit_field(&self, j: usize, x: &BundlePoint) -> CVector {
        let i_unit = C64::new(0.0, 1.0);
        CVector::from_fn(self.ambient, |i, _| {
            x.coords[i] * i_unit * self.weights[j][i] as f64
        })
    }

    /// Horizontal parts of all generators at x.
    pub fn horizontal_orbit_fields(&self, x: &BundlePoint) -> Vec<CVector> {
        (0..self.g())
            .map(|j| horizontal_part(x, &self.orbit_field(j, x)))
            .collect()
    }

    /// Character χ_ϖ(s) = e^{iϖ·s} of the isotype ϖ ∈ ℤ^g.
    pub fn character(&self, varpi: &[i64], s: &RVector) -> C64 {
        assert_eq!(varpi.len(), self.g());
        let angle: f64 = varpi
            .iter()
            .zip(s.iter())
            .map(|(&m, &sj)| m as f64 * sj)
            .sum();
        C64::from_polar(1.0, angle)
    }
}

/// Orbit data at a base point: the effective potential (average orbit
/// volume), the stabilizer order of the projected point, and the
/// horizontal orbit tangent frame.
#[derive(Debug, Clone)]
pub struct OrbitData {
    pub base_point: BundlePoint,
    pub v_eff: f64,
    pub stabilizer_order: u64,
    pub orbit_tangent: Vec<CVector>,
}

/// Gram determinant of the horizontal orbit fields at a point.
fn horizontal_gram_det(action: &TorusAction, x: &BundlePoint) -> f64 {
    let fields = action.horizontal_orbit_fields(x);
    let g = fields.len();
    let gram = RMatrix::from_fn(g, g, |i, j| hermitian(&fields[i], &fields[j]).re);
    gram.determinant()
}

/// Effective potential at x: the volume of the horizontal orbit through x,
/// computed as (1/|G_m|) ∫_{T^g} √det Gram(s·x) d^g s with the fixed
/// 256-node trapezoid rule per torus dimension.  The orbit speed is
/// constant along the orbit, so the rule is exact up to roundoff; the
/// quadrature form is kept because it is the definition.
pub fn effective_potential(action: &TorusAction, x: &BundlePoint) -> Result<OrbitData, GeometryError> {
    let g = action.g();
    let stabilizer_order = stabilizer_order(action, x)?;
    if g == 0 {
        return Ok(OrbitData {
            base_point: x.clone(),
            v_eff: 1.0,
            stabilizer_order,
            orbit_tangent: Vec::new(),
        });
    }
    let det_at_base = horizontal_gram_det(action, x);
    if det_at_base < SUPPORT_TOL {
        return Err(GeometryError::DegenerateOrbit { det: det_at_base });
    }
    let mut integrand = |s: &[f64]| {
        let xs = action.act(&RVector::from_column_slice(s), x);
        C64::new(horizontal_gram_det(action, &xs).max(0.0).sqrt(), 0.0)
    };
    let integral = trapezoid_torus(g, ORBIT_VOLUME_NODES, &mut integrand).re;
    Ok(OrbitData {
        base_point: x.clone(),
        v_eff: integral / stabilizer_order as f64,
        stabilizer_order,
        orbit_tangent: action.horizontal_orbit_fields(x),
    })
}

/// |det A| for the change from the weight-generator frame of the orbit to
/// an orthonormal one: 1/((2π)^g √det Gram(x)).  Together with the orbit
/// volume it satisfies |det A| · V_eff · |G_m| = 1.
pub fn orbit_base_change_det(action: &TorusAction, x: &BundlePoint) -> Result<f64, GeometryError> {
    let g = action.g();
    if g == 0 {
        return Ok(1.0);
    }
    let det = horizontal_gram_det(action, x);
    if det < SUPPORT_TOL {
        return Err(GeometryError::DegenerateOrbit { det });
    }
    Ok(1.0 / ((std::f64::consts::TAU).powi(g as i32) * det.sqrt()))
}

/// Order of the stabilizer of the projected point π(x) ∈ ℂPⁿ inside T^g.
///
/// s stabilizes [x] exactly when the supported weight columns all rotate by
/// a common phase, i.e. when (W_{·,j} − W_{·,j₀})·s ≡ 0 (mod 2π) for every
/// supported j.  The solution subgroup is finite precisely when the
/// difference lattice has full rank g, and its order is the product of the
/// elementary divisors.
pub fn stabilizer_order(action: &TorusAction, x: &BundlePoint) -> Result<u64, GeometryError> {
    let g = action.g();
    if g == 0 {
        return Ok(1);
    }
    let support: Vec<usize> = (0..action.ambient)
        .filter(|&i| x.coords[i].norm() > SUPPORT_TOL)
        .collect();
    assert!(!support.is_empty(), "a unit vector has nonempty support");
    let j0 = support[0];
    let rows: Vec<Vec<i64>> = support[1..]
        .iter()
        .map(|&j| {
            (0..g)
                .map(|f| action.weights[f][j] - action.weights[f][j0])
                .collect()
        })
        .collect();
    let divisors = smith_diagonal(rows, g);
    let rank = divisors.iter().filter(|&&d| d != 0).count();
    if rank < g {
        return Err(GeometryError::PositiveDimensionalStabilizer { rank, g });
    }
    Ok(divisors.iter().map(|&d| d.unsigned_abs()).product())
}

/// Diagonal of the Smith form of an integer matrix with `cols` columns,
/// padded with zeros up to `cols` entries.  Unimodular row/column
/// operations preserve the gcds of the k×k minors, so the product of the
/// nonzero diagonal entries is the lattice index we are after; the
/// divisibility chain is not enforced because only rank and product are
/// consumed.
fn smith_diagonal(mut m: Vec<Vec<i64>>, cols: usize) -> Vec<i64> {
    let rows = m.len();
    let size = rows.min(cols);
    let mut diag = vec![0i64; cols];
    let mut t = 0;
    while t < size {
        // Pivot: smallest nonzero entry of the remaining block.
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if m[i][j] != 0 && pivot.map_or(true, |(pi, pj)| m[i][j].abs() < m[pi][pj].abs()) {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else {
            break; // remaining block is zero
        };
        m.swap(t, pi);
        for row in m.iter_mut() {
            row.swap(t, pj);
        }
        // Euclidean elimination of row t and column t.
        let mut clean = false;
        while !clean {
            clean = true;
            for i in (t + 1)..rows {
                if m[i][t] != 0 {
                    let q = m[i][t] / m[t][t];
                    for j in t..cols {
                        m[i][j] -= q * m[t][j];
                    }
                    if m[i][t] != 0 {
                        m.swap(t, i);
                        clean = false;
                    }
                }
            }
            for j in (t + 1)..cols {
                if m[t][j] != 0 {
                    let q = m[t][j] / m[t][t];
                    for row in m.iter_mut() {
                        row[j] -= q * row[t];
                    }
                    if m[t][j] != 0 {
                        for row in m.iter_mut() {
                            row.swap(t, j);
                        }
                        clean = false;
                    }
                }
            }
        }
        diag[t] = m[t][t].abs();
        t += 1;
    }
    diag
}

/// Orthonormal chart-coordinate basis of the horizontal orbit tangent at
/// the chart center, in generator order.  This is the frame [`crate::symplectic::compute_rt`]
/// expects.
pub fn orbit_chart_frame(
    action: &TorusAction,
    chart: &HeisenbergChart,
) -> Result<Vec<RVector>, GeometryError> {
    let x = chart.center();
    let fields = action.horizontal_orbit_fields(x);
    let mut coords = Vec::with_capacity(fields.len());
    for f in &fields {
        coords.push(chart.horizontal_coords(f)?);
    }
    let basis = orthonormalize(&coords);
    if basis.len() != coords.len() {
        let gram = RMatrix::from_fn(coords.len(), coords.len(), |i, j| coords[i].dot(&coords[j]));
        return Err(GeometryError::DegenerateOrbit {
            det: gram.determinant(),
        });
    }
    Ok(basis)
}

/// Convenience check used by validators: true when x sits on the zero
/// level of the moment map.
pub fn on_zero_level(action: &TorusAction, x: &BundlePoint, tol: f64) -> bool {
    action.moment_map(x).amax() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

    fn cpoint(xs: &[(f64, f64)]) -> BundlePoint {
        BundlePoint::new(CVector::from_iterator(
            xs.len(),
            xs.iter().map(|&(r, i)| C64::new(r, i)),
        ))
        .unwrap()
    }

    fn s3_knot_point() -> BundlePoint {
        cpoint(&[(1.0, 0.0), (0.0, 0.0)])
    }

    #[test]
    fn bundle_point_validation() {
        assert!(BundlePoint::new(CVector::from_element(2, C64::new(1.0, 0.0))).is_err());
        let x = BundlePoint::normalized(CVector::from_element(2, C64::new(1.0, 0.0))).unwrap();
        assert!((x.coords().norm() - 1.0).abs() < 1e-15);
        assert_eq!(x.base_dim(), 1);
    }

    #[test]
    fn contact_form_and_horizontality() {
        let x = cpoint(&[(FRAC_1_SQRT_2, 0.0), (FRAC_1_SQRT_2, 0.0)]);
        // The fiber direction ix has α = 1.
        let ix = x.coords().map(|c| c * C64::new(0.0, 1.0));
        assert!((contact_form(&x, &ix) - 1.0).abs() < 1e-15);
        let v = CVector::from_iterator(2, [C64::new(0.0, 1.0), C64::new(1.0, 0.0)]);
        let h = horizontal_part(&x, &v);
        assert!(hermitian(&h, x.coords()).norm() < 1e-15);
    }

    #[test]
    fn chart_frame_matches_the_flat_circle_convention() {
        // At (1, 0) with the knot tangent (0, 1): U* = I and A = [−i], so
        // the p-axis maps to (0, −i) and the q-axis to the tangent itself.
        let x = s3_knot_point();
        let tangent = CVector::from_iterator(2, [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let chart = heisenberg_chart(&x, &[tangent.clone()]).unwrap();
        let p_dir = chart.frame_vector(&RVector::from_column_slice(&[1.0, 0.0]));
        assert!((p_dir[1] - C64::new(0.0, -1.0)).norm() < 1e-14);
        let q_dir = chart.frame_vector(&RVector::from_column_slice(&[0.0, 1.0]));
        assert!((q_dir[1] - C64::new(1.0, 0.0)).norm() < 1e-14);
        // Unitarity of both frames.
        let id = chart.unitary_frame().adjoint() * chart.unitary_frame();
        assert!((id - CMatrix::identity(2, 2)).norm() < 1e-13);
        let id2 = chart.rotation().adjoint() * chart.rotation();
        assert!((id2 - CMatrix::identity(1, 1)).norm() < 1e-13);
    }

    #[test]
    fn chart_point_and_coordinate_round_trip() {
        let x = cpoint(&[(0.5, 0.5), (0.5, -0.3), (0.0, 0.4)]);
        let chart = heisenberg_chart(&x, &[]).unwrap();
        assert!((chart.point(0.0, &RVector::zeros(4)).unwrap().coords() - x.coords()).norm() < 1e-13);
        let w = RVector::from_column_slice(&[0.3, -0.2, 0.1, 0.4]);
        let v = chart.frame_vector(&w);
        let back = chart.horizontal_coords(&v).unwrap();
        assert!((&back - &w).norm() < 1e-12);
        // Chart points are unit vectors for any coordinate.
        let y = chart.point(1.3, &w).unwrap();
        assert!((y.coords().norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn chart_rejects_non_horizontal_adaptation() {
        let x = s3_knot_point();
        let radial = x.coords().clone();
        assert!(matches!(
            heisenberg_chart(&x, &[radial]),
            Err(GeometryError::NotHorizontal { .. })
        ));
        let vertical = x.coords().map(|c| c * C64::new(0.0, 1.0));
        assert!(heisenberg_chart(&x, &[vertical]).is_err());
    }

    #[test]
    fn chart_rejects_non_isotropic_adaptation() {
        // On S⁵ take b and ib: independent over ℝ, but Im⟨b, ib⟩ = −1.
        let x = cpoint(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let b = CVector::from_iterator(3, [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let ib = b.map(|c| c * C64::new(0.0, 1.0));
        assert!(matches!(
            heisenberg_chart(&x, &[b, ib]),
            Err(GeometryError::NonIsotropicAdaptation { .. })
        ));
    }

    #[test]
    fn contact_form_pulls_back_to_the_model_form() {
        // α(dρ(∂θ)) = 1 and α(dρ(∂p_j)) = −q_j/(1+‖ζ‖²),
        // α(dρ(∂q_j)) = +p_j/(1+‖ζ‖²), tested by central differences.
        let x = cpoint(&[(0.5, 0.5), (0.5, -0.3), (0.0, 0.4)]);
        let tangent = {
            // Any horizontal direction works; adapt to it to exercise A ≠ I.
            let raw = CVector::from_iterator(
                3,
                [C64::new(0.1, 0.2), C64::new(-0.3, 0.1), C64::new(0.2, 0.0)],
            );
            horizontal_part(&x, &raw)
        };
        let chart = heisenberg_chart(&x, &[tangent]).unwrap();
        let w = RVector::from_column_slice(&[0.2, -0.1, 0.3, 0.15]);
        let theta = 0.7;
        let delta = 1e-5;
        let base = chart.point(theta, &w).unwrap();
        let denom = 1.0 + w.norm_squared();

        let half_step = C64::new(0.5 / delta, 0.0);
        let dtheta = {
            let plus = chart.point(theta + delta, &w).unwrap();
            let minus = chart.point(theta - delta, &w).unwrap();
            (plus.coords() - minus.coords()) * half_step
        };
        assert!((contact_form(&base, &dtheta) - 1.0).abs() < 1e-8);

        for j in 0..4 {
            let mut wp = w.clone();
            wp[j] += delta;
            let mut wm = w.clone();
            wm[j] -= delta;
            let dv = (chart.point(theta, &wp).unwrap().coords()
                - chart.point(theta, &wm).unwrap().coords())
                * half_step;
            let expect = if j < 2 { -w[j + 2] / denom } else { w[j - 2] / denom };
            assert!(
                (contact_form(&base, &dv) - expect).abs() < 1e-8,
                "direction {j}"
            );
        }
    }

    #[test]
    fn torus_action_basics() {
        let action = TorusAction::new(2, vec![vec![1, -1]], RVector::zeros(1)).unwrap();
        let x = cpoint(&[(FRAC_1_SQRT_2, 0.0), (FRAC_1_SQRT_2, 0.0)]);
        assert!(on_zero_level(&action, &x, 1e-12));
        let s = RVector::from_element(1, PI);
        let moved = action.act(&s, &x);
        assert!((moved.coords()[0] + C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
        assert!((moved.coords()[1] + C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
        let chi = action.character(&[2], &s);
        assert!((chi - C64::new(1.0, 0.0)).norm() < 1e-14);
        // Pole: moment map 1 − 0 = 1.
        let pole = s3_knot_point();
        assert!((action.moment_map(&pole)[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stabilizer_orders() {
        let x = cpoint(&[(FRAC_1_SQRT_2, 0.0), (FRAC_1_SQRT_2, 0.0)]);
        let hopf = TorusAction::new(2, vec![vec![1, -1]], RVector::zeros(1)).unwrap();
        assert_eq!(stabilizer_order(&hopf, &x).unwrap(), 2);
        let asym = TorusAction::new(2, vec![vec![1, 2]], RVector::zeros(1)).unwrap();
        assert_eq!(stabilizer_order(&asym, &x).unwrap(), 1);
        // At a pole the stabilizer is the whole circle.
        let pole = s3_knot_point();
        assert!(matches!(
            stabilizer_order(&hopf, &pole),
            Err(GeometryError::PositiveDimensionalStabilizer { .. })
        ));
        // Rank-2 example on S⁵ with index 3.
        let x5 = cpoint(&[
            (1.0 / 3.0f64.sqrt(), 0.0),
            (1.0 / 3.0f64.sqrt(), 0.0),
            (1.0 / 3.0f64.sqrt(), 0.0),
        ]);
        let t2 = TorusAction::new(
            3,
            vec![vec![1, -1, 0], vec![0, 1, -1]],
            RVector::zeros(2),
        )
        .unwrap();
        assert_eq!(stabilizer_order(&t2, &x5).unwrap(), 3);
        // Trivial group.
        assert_eq!(stabilizer_order(&TorusAction::trivial(2), &x).unwrap(), 1);
    }

    #[test]
    fn smith_diagonal_known_cases() {
        assert_eq!(smith_diagonal(vec![vec![-2]], 1), vec![2]);
        assert_eq!(smith_diagonal(vec![vec![2, 0], vec![0, 3]], 2), vec![2, 3]);
        // Rank deficient.
        assert_eq!(smith_diagonal(vec![vec![2, 4]], 2), vec![2, 0]);
        // Product of divisors equals |det| for square nonsingular input.
        let d = smith_diagonal(vec![vec![-2, 1], vec![-1, -1]], 2);
        assert_eq!(d.iter().product::<i64>(), 3);
        assert_eq!(smith_diagonal(vec![], 2), vec![0, 0]);
    }

    #[test]
    fn effective_potential_of_the_hopf_circle() {
        // Weights (1, −1) at (1, 1)/√2: unit-speed horizontal orbit,
        // stabilizer of the base point has order 2, so V_eff = 2π/2 = π.
        let action = TorusAction::new(2, vec![vec![1, -1]], RVector::zeros(1)).unwrap();
        let x = cpoint(&[(FRAC_1_SQRT_2, 0.0), (FRAC_1_SQRT_2, 0.0)]);
        let orbit = effective_potential(&action, &x).unwrap();
        assert_eq!(orbit.stabilizer_order, 2);
        assert!((orbit.v_eff - PI).abs() < 1e-12);
        assert_eq!(orbit.orbit_tangent.len(), 1);
        assert!((orbit.orbit_tangent[0].norm() - 1.0).abs() < 1e-14);
        // Base-change identity |det A| · V_eff · |G_m| = 1.
        let det_a = orbit_base_change_det(&action, &x).unwrap();
        assert!((det_a * orbit.v_eff * orbit.stabilizer_order as f64 - 1.0).abs() < 1e-12);
        assert!((det_a - 1.0 / TAU).abs() < 1e-14);
    }

    #[test]
    fn orbit_chart_frame_is_orthonormal_and_isotropic() {
        let action = TorusAction::new(2, vec![vec![1, -1]], RVector::zeros(1)).unwrap();
        let x = cpoint(&[(FRAC_1_SQRT_2, 0.0), (FRAC_1_SQRT_2, 0.0)]);
        let chart = heisenberg_chart(&x, &[]).unwrap();
        let frame = orbit_chart_frame(&action, &chart).unwrap();
        assert_eq!(frame.len(), 1);
        assert!((frame[0].norm() - 1.0).abs() < 1e-12);
        // Feeding it to compute_rt must succeed.
        assert!(crate::symplectic::compute_rt(&frame).is_ok());
    }

    #[test]
    fn full_act_composes_phases() {
        let action = TorusAction::new(2, vec![vec![1, -1]], RVector::zeros(1)).unwrap();
        let x = cpoint(&[(FRAC_1_SQRT_2, 0.0), (FRAC_1_SQRT_2, 0.0)]);
        let s = RVector::from_element(1, 0.7);
        let y = action.full_act(0.3, &s, &x);
        let expect0 = C64::from_polar(FRAC_1_SQRT_2, 0.3 + 0.7);
        let expect1 = C64::from_polar(FRAC_1_SQRT_2, 0.3 - 0.7);
        assert!((y.coords()[0] - expect0).norm() < 1e-14);
        assert!((y.coords()[1] - expect1).norm() < 1e-14);
    }
}
