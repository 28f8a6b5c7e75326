//! Parametrized Legendrian immersions ι: T^d → X and the geometric
//! predicates the asymptotic predictors rely on.
//!
//! An immersion carries a weight f_λ on parameters; together with the
//! Riemannian density D_Λ(t) = √det Gram(∂ι/∂t_i) it determines the
//! half-density λ = f_λ·D_Λ^{1/2} that the states integrate.  Built-in
//! families are analytic; user maps get central-difference derivatives.
//!
//! Two searches live here because both are root problems on parameter
//! tori solved by the same seeded Gauss–Newton engine:
//!
//! * return elements: all (h, s, t) with e^{ih}(s·x) = ι(t), the finitely
//!   many group elements carrying a probe point back onto Λ;
//! * zero-level intersections: the set Λ′ = {t : Φ(ι(t)) = 0}, each point
//!   checked for transversality (trivial intersection of TΛ with the
//!   orbit directions, and moment differentials of full rank on TΛ).

use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{BundlePoint, GeometryError, TorusAction};
use crate::linalg::{complex_to_real, hermitian, principal_angles};
use crate::tolerances::{
    FD_STEP, FD_STEP_SECOND, LEVEL_SAMPLE_RADIUS, MAX_ISOLATED_ROOTS, RANK_TOL,
    RETURN_RESIDUAL_TOL, ROOT_DEDUP_RADIUS, SEED_GRID_COARSE, SEED_GRID_DENSE,
};
use crate::{CVector, RMatrix, RVector, C64};

#[derive(Debug, Error)]
pub enum LegendrianError {
    #[error("parameter point t = {t:?} maps off the unit sphere (norm {norm:.6})")]
    OffSphere { t: Vec<f64>, norm: f64 },
    #[error("immersion degenerates at t = {t:?} (tangent Gram determinant {det:.3e})")]
    NotImmersive { t: Vec<f64>, det: f64 },
    #[error("immersion maps into ℂ^{got}, but the ambient context expects ℂ^{expected}")]
    AmbientMismatch { got: usize, expected: usize },
    #[error("return-element search kept {found} solutions after deduplication (cap {cap}); the solution set looks positive-dimensional, violating the isolated-intersection hypothesis")]
    PositiveDimensionalReturnSet { found: usize, cap: usize },
    #[error("tangential zero-level intersection at t = {t:?}: smallest principal angle between TΛ and the orbit directions is {angle:.3e} rad")]
    TangentialIntersection { t: Vec<f64>, angle: f64 },
    #[error("not transverse to the zero level at t = {t:?}: the moment differentials restricted to TΛ have smallest singular value {sigma_min:.3e}")]
    NotTransverseToLevel { t: Vec<f64>, sigma_min: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

type SharedMap = Arc<dyn Fn(&[f64]) -> CVector + Send + Sync>;
type DerivativeFn = Box<dyn Fn(&[f64], usize) -> CVector + Send + Sync>;
type SecondFn = Box<dyn Fn(&[f64], usize, usize) -> CVector + Send + Sync>;
type WeightFn = Box<dyn Fn(&[f64]) -> C64 + Send + Sync>;

/// A parametrized immersion of the d-torus into the unit sphere of
/// ℂ^{ambient}, with first and second derivative access and a weight
/// function f_λ on parameters (default 1).
pub struct LegendrianImmersion {
    name: String,
    dim: usize,
    ambient: usize,
    map: SharedMap,
    derivative: DerivativeFn,
    second: SecondFn,
    f_lambda: WeightFn,
}

impl std::fmt::Debug for LegendrianImmersion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LegendrianImmersion")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("ambient", &self.ambient)
            .finish()
    }
}

impl LegendrianImmersion {
    /// Immersion with analytic derivatives.  `derivative(t, i)` is
    /// ∂ι/∂t_i and `second(t, i, j)` is ∂²ι/∂t_i∂t_j.
    pub fn analytic(
        name: impl Into<String>,
        dim: usize,
        ambient: usize,
        map: impl Fn(&[f64]) -> CVector + Send + Sync + 'static,
        derivative: impl Fn(&[f64], usize) -> CVector + Send + Sync + 'static,
        second: impl Fn(&[f64], usize, usize) -> CVector + Send + Sync + 'static,
    ) -> Self {
        LegendrianImmersion {
            name: name.into(),
            dim,
            ambient,
            map: Arc::new(map),
            derivative: Box::new(derivative),
            second: Box::new(second),
            f_lambda: Box::new(|_| C64::new(1.0, 0.0)),
        }
    }

    /// Immersion from a bare map; derivatives by central differences with
    /// steps [`FD_STEP`] and [`FD_STEP_SECOND`].
    pub fn from_map(
        name: impl Into<String>,
        dim: usize,
        ambient: usize,
        map: impl Fn(&[f64]) -> CVector + Send + Sync + 'static,
    ) -> Self {
        let map: SharedMap = Arc::new(map);
        let first_source = map.clone();
        let derivative = Box::new(move |t: &[f64], i: usize| {
            let mut tp = t.to_vec();
            tp[i] += FD_STEP;
            let mut tm = t.to_vec();
            tm[i] -= FD_STEP;
            (first_source(&tp) - first_source(&tm)) * C64::new(0.5 / FD_STEP, 0.0)
        });
        let second_source = map.clone();
        let second = Box::new(move |t: &[f64], i: usize, j: usize| {
            let h = FD_STEP_SECOND;
            if i == j {
                let mut tp = t.to_vec();
                tp[i] += h;
                let mut tm = t.to_vec();
                tm[i] -= h;
                (second_source(&tp) + second_source(&tm)
                    - second_source(t) * C64::new(2.0, 0.0))
                    * C64::new(1.0 / (h * h), 0.0)
            } else {
                let shifted = |di: f64, dj: f64| {
                    let mut u = t.to_vec();
                    u[i] += di;
                    u[j] += dj;
                    second_source(&u)
                };
                (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h))
                    * C64::new(0.25 / (h * h), 0.0)
            }
        });
        LegendrianImmersion {
            name: name.into(),
            dim,
            ambient,
            map,
            derivative,
            second,
            f_lambda: Box::new(|_| C64::new(1.0, 0.0)),
        }
    }

    /// Replaces the weight f_λ (default 1).
    pub fn with_amplitude(
        mut self,
        f: impl Fn(&[f64]) -> C64 + Send + Sync + 'static,
    ) -> Self {
        self.f_lambda = Box::new(f);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Parameter dimension d.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Ambient complex dimension n + 1.
    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Raw image vector; not validated against the sphere.
    pub fn raw(&self, t: &[f64]) -> CVector {
        debug_assert_eq!(t.len(), self.dim);
        (self.map)(t)
    }

    /// Image as a validated sphere point.
    pub fn point(&self, t: &[f64]) -> Result<BundlePoint, LegendrianError> {
        let raw = self.raw(t);
        let norm = raw.norm();
        BundlePoint::new(raw).map_err(|_| LegendrianError::OffSphere {
            t: t.to_vec(),
            norm,
        })
    }

    /// Tangent vectors ∂ι/∂t_i, in parameter order.
    pub fn tangent_frame(&self, t: &[f64]) -> Vec<CVector> {
        (0..self.dim).map(|i| (self.derivative)(t, i)).collect()
    }

    /// Second derivative ∂²ι/∂t_i∂t_j.
    pub fn second_derivative(&self, t: &[f64], i: usize, j: usize) -> CVector {
        (self.second)(t, i, j)
    }

    /// Riemannian density √det Gram(∂ι/∂t_i) in the round metric.
    pub fn riemannian_density(&self, t: &[f64]) -> Result<f64, LegendrianError> {
        let frame = self.tangent_frame(t);
        let det = real_gram_det(&frame);
        if det < RANK_TOL {
            return Err(LegendrianError::NotImmersive {
                t: t.to_vec(),
                det,
            });
        }
        Ok(det.sqrt())
    }

    /// The weight f_λ at the given parameters.
    pub fn amplitude(&self, t: &[f64]) -> C64 {
        (self.f_lambda)(t)
    }
}

fn real_gram_det(frame: &[CVector]) -> f64 {
    let d = frame.len();
    RMatrix::from_fn(d, d, |i, j| hermitian(&frame[i], &frame[j]).re).determinant()
}

/// The circle ι_a(θ) = (cos θ, e^{ia} sin θ) in S³.  Legendrian for every
/// a; its projection covers the line of slope tan(a) through the origin of
/// the affine chart z₁/z₀.
pub fn builtin_knot(a: f64) -> LegendrianImmersion {
    let phase = C64::from_polar(1.0, a);
    LegendrianImmersion::analytic(
        format!("knot(a={a})"),
        1,
        2,
        move |t: &[f64]| {
            CVector::from_iterator(2, [C64::new(t[0].cos(), 0.0), phase * t[0].sin()])
        },
        move |t: &[f64], _| {
            CVector::from_iterator(2, [C64::new(-t[0].sin(), 0.0), phase * t[0].cos()])
        },
        move |t: &[f64], _, _| {
            CVector::from_iterator(2, [C64::new(-t[0].cos(), 0.0), -phase * t[0].sin()])
        },
    )
}

/// Direct sum of `factors` planar circles, scaled to the unit sphere of
/// ℂ^{2·factors}: ι(t) = (cos t₁, e^{ia₁} sin t₁, …)/√m.  The blocks are
/// mutually orthogonal, so the α-pullback vanishes blockwise and the image
/// is an isotropic m-torus; its density is the constant m^{−m/2}.
pub fn builtin_torus_product(factors: usize, phases: &[f64]) -> LegendrianImmersion {
    assert!(factors >= 2, "a product needs at least two circle factors");
    assert_eq!(phases.len(), factors, "one phase per circle factor");
    let phase: Vec<C64> = phases.iter().map(|&a| C64::from_polar(1.0, a)).collect();
    let scale = 1.0 / (factors as f64).sqrt();
    let ambient = 2 * factors;
    let map_phase = phase.clone();
    let deriv_phase = phase.clone();
    let second_phase = phase;
    LegendrianImmersion::analytic(
        format!("torus-product(m={factors})"),
        factors,
        ambient,
        move |t: &[f64]| {
            CVector::from_fn(ambient, |r, _| {
                let block = r / 2;
                if r % 2 == 0 {
                    C64::new(scale * t[block].cos(), 0.0)
                } else {
                    map_phase[block] * (scale * t[block].sin())
                }
            })
        },
        move |t: &[f64], i: usize| {
            let mut v = CVector::zeros(ambient);
            v[2 * i] = C64::new(-scale * t[i].sin(), 0.0);
            v[2 * i + 1] = deriv_phase[i] * (scale * t[i].cos());
            v
        },
        move |t: &[f64], i: usize, j: usize| {
            let mut v = CVector::zeros(ambient);
            if i == j {
                v[2 * i] = C64::new(-scale * t[i].cos(), 0.0);
                v[2 * i + 1] = second_phase[i] * (-scale * t[i].sin());
            }
            v
        },
    )
}

/// Grid diagnostics for the Legendrian and immersion properties.
#[derive(Debug, Clone)]
pub struct LegendrianCheck {
    /// max |α(∂_j ι)| = max |Im⟨∂_j ι, ι⟩| over the sample grid.
    pub max_alpha: f64,
    /// max |Im⟨∂_i ι, ∂_j ι⟩|: the symplectic form of the projected
    /// tangents, which must vanish for a horizontal isotropic image.
    pub max_omega: f64,
    /// max |‖ι(t)‖ − 1|.
    pub max_sphere_deviation: f64,
    /// min over the grid of √det Gram (immersivity margin).
    pub min_density: f64,
    /// Total number of grid samples inspected.
    pub samples: usize,
}

impl LegendrianCheck {
    /// True when every diagnostic is inside `tol` (density compared
    /// against [`RANK_TOL`]).
    pub fn passes(&self, tol: f64) -> bool {
        self.max_alpha < tol
            && self.max_omega < tol
            && self.max_sphere_deviation < tol
            && self.min_density > RANK_TOL
    }
}

/// Samples the Legendrian diagnostics on a uniform grid with
/// `grid` nodes per parameter-circle.
pub fn legendrian_check(lambda: &LegendrianImmersion, grid: usize) -> LegendrianCheck {
    assert!(grid > 0);
    let d = lambda.dim();
    let total = grid.pow(d as u32);
    let mut report = LegendrianCheck {
        max_alpha: 0.0,
        max_omega: 0.0,
        max_sphere_deviation: 0.0,
        min_density: f64::INFINITY,
        samples: total,
    };
    let step = TAU / grid as f64;
    let mut index = vec![0usize; d];
    let mut t = vec![0.0f64; d];
    for _ in 0..total {
        for (ti, &ix) in t.iter_mut().zip(index.iter()) {
            *ti = ix as f64 * step;
        }
        let x = lambda.raw(&t);
        let frame = lambda.tangent_frame(&t);
        report.max_sphere_deviation = report.max_sphere_deviation.max((x.norm() - 1.0).abs());
        for (i, di) in frame.iter().enumerate() {
            report.max_alpha = report.max_alpha.max(hermitian(di, &x).im.abs());
            for dj in frame.iter().skip(i + 1) {
                report.max_omega = report.max_omega.max(hermitian(di, dj).im.abs());
            }
        }
        report.min_density = report.min_density.min(real_gram_det(&frame).max(0.0).sqrt());
        // Odometer increment over the d-dimensional grid.
        for slot in index.iter_mut() {
            *slot += 1;
            if *slot < grid {
                break;
            }
            *slot = 0;
        }
    }
    report
}

/// A solution of e^{ih}(s·x) = ι(t): the group element (h, s) carrying the
/// probe point x into Λ, together with the landing point.
#[derive(Debug, Clone)]
pub struct ReturnElement {
    pub h: f64,
    pub g_params: RVector,
    pub t_params: RVector,
    pub target: BundlePoint,
    /// Final ‖e^{ih}(s·x) − ι(t)‖ of the polished solution.
    pub residual: f64,
}

/// A solution of e^{ih}(s·ι_Λ(t)) = ι_Σ(τ): a crossing of the swept-out
/// Λ-orbit with Σ, the data a transverse pairing sums over.
#[derive(Debug, Clone)]
pub struct CrossingElement {
    pub h: f64,
    pub g_params: RVector,
    pub t_params: RVector,
    pub tau_params: RVector,
    pub target: BundlePoint,
    pub residual: f64,
}

/// All return elements of `x` on `lambda`, under the optional torus action
/// (`None` means only the circle acts).  Solutions are found from a dense
/// uniform seed grid, polished by damped Gauss–Newton, deduplicated at
/// [`ROOT_DEDUP_RADIUS`] in the torus metric, and sorted lexicographically
/// by (h, s, t).  More than [`MAX_ISOLATED_ROOTS`] survivors are rejected
/// as a positive-dimensional solution set.
pub fn find_return_elements(
    x: &BundlePoint,
    lambda: &LegendrianImmersion,
    action: Option<&TorusAction>,
) -> Result<Vec<ReturnElement>, LegendrianError> {
    let dims = 1 + action.map_or(0, TorusAction::g) + lambda.dim();
    find_return_elements_with_grid(x, lambda, action, default_grid(dims))
}

/// [`find_return_elements`] with an explicit seed-grid density, used by the
/// re-seeding stability tests.
pub fn find_return_elements_with_grid(
    x: &BundlePoint,
    lambda: &LegendrianImmersion,
    action: Option<&TorusAction>,
    grid: usize,
) -> Result<Vec<ReturnElement>, LegendrianError> {
    let trivial = TorusAction::trivial(x.ambient());
    let action = action.unwrap_or(&trivial);
    if lambda.ambient() != x.ambient() {
        return Err(LegendrianError::AmbientMismatch {
            got: lambda.ambient(),
            expected: x.ambient(),
        });
    }
    let g = action.g();
    let d = lambda.dim();
    let dims = 1 + g + d;

    let residual = |u: &RVector| -> RVector {
        let (h, s, t) = split_params(u, g, d);
        let moved = action.full_act(h, &s, x);
        complex_to_real(&(moved.coords() - lambda.raw(&t)))
    };
    let jacobian = |u: &RVector| -> RMatrix {
        let (h, s, t) = split_params(u, g, d);
        let moved = action.full_act(h, &s, x);
        let mut cols: Vec<CVector> = Vec::with_capacity(dims);
        // ∂/∂h multiplies the moved point by i; the torus generators do the
        // same through their weight diagonals; Λ contributes −∂ι/∂t_j.
        cols.push(moved.coords().map(|c| c * crate::I));
        for j in 0..g {
            cols.push(action.orbit_field(j, &moved));
        }
        let frame = lambda.tangent_frame(&t);
        for dj in frame {
            cols.push(dj.map(|c| -c));
        }
        let rows = 2 * x.ambient();
        let mut m = RMatrix::zeros(rows, dims);
        for (j, col) in cols.iter().enumerate() {
            m.set_column(j, &complex_to_real(col));
        }
        m
    };

    let roots = solve_on_torus(dims, grid, &residual, &jacobian, ROOT_DEDUP_RADIUS);
    if roots.len() > MAX_ISOLATED_ROOTS {
        return Err(LegendrianError::PositiveDimensionalReturnSet {
            found: roots.len(),
            cap: MAX_ISOLATED_ROOTS,
        });
    }
    let mut out = Vec::with_capacity(roots.len());
    for (u, res) in roots {
        let (h, s, t) = split_params(&u, g, d);
        let target = lambda.point(t.as_slice())?;
        out.push(ReturnElement {
            h,
            g_params: s,
            t_params: RVector::from_column_slice(&t),
            target,
            residual: res,
        });
    }
    Ok(out)
}

/// All crossings e^{ih}(s·ι_Λ(t)) = ι_Σ(τ) of two immersions under the
/// optional action; same engine and conventions as
/// [`find_return_elements`].
pub fn find_crossings(
    lambda: &LegendrianImmersion,
    sigma: &LegendrianImmersion,
    action: Option<&TorusAction>,
) -> Result<Vec<CrossingElement>, LegendrianError> {
    let dims = 1 + action.map_or(0, TorusAction::g) + lambda.dim() + sigma.dim();
    find_crossings_with_grid(lambda, sigma, action, default_grid(dims))
}

/// [`find_crossings`] with an explicit seed-grid density.
pub fn find_crossings_with_grid(
    lambda: &LegendrianImmersion,
    sigma: &LegendrianImmersion,
    action: Option<&TorusAction>,
    grid: usize,
) -> Result<Vec<CrossingElement>, LegendrianError> {
    let ambient = lambda.ambient();
    let trivial = TorusAction::trivial(ambient);
    let action = action.unwrap_or(&trivial);
    if sigma.ambient() != ambient {
        return Err(LegendrianError::AmbientMismatch {
            got: sigma.ambient(),
            expected: ambient,
        });
    }
    let g = action.g();
    let dl = lambda.dim();
    let ds = sigma.dim();
    let dims = 1 + g + dl + ds;

    let residual = |u: &RVector| -> RVector {
        let (h, s, rest) = split_params(u, g, dl + ds);
        let (t, tau) = rest.split_at(dl);
        let phase = C64::from_polar(1.0, h);
        let moved = action.act_vector(&s, &lambda.raw(t)) * phase;
        complex_to_real(&(moved - sigma.raw(tau)))
    };
    let jacobian = |u: &RVector| -> RMatrix {
        let (h, s, rest) = split_params(u, g, dl + ds);
        let (t, tau) = rest.split_at(dl);
        let phase = C64::from_polar(1.0, h);
        let moved = action.act_vector(&s, &lambda.raw(t)) * phase;
        let mut cols: Vec<CVector> = Vec::with_capacity(dims);
        cols.push(moved.map(|c| c * crate::I));
        for j in 0..g {
            let weights = &action.weights()[j];
            cols.push(CVector::from_fn(ambient, |i, _| {
                moved[i] * crate::I * weights[i] as f64
            }));
        }
        for dj in lambda.tangent_frame(t) {
            cols.push(action.act_vector(&s, &dj) * phase);
        }
        for dj in sigma.tangent_frame(tau) {
            cols.push(dj.map(|c| -c));
        }
        let mut m = RMatrix::zeros(2 * ambient, dims);
        for (j, col) in cols.iter().enumerate() {
            m.set_column(j, &complex_to_real(col));
        }
        m
    };

    let roots = solve_on_torus(dims, grid, &residual, &jacobian, ROOT_DEDUP_RADIUS);
    if roots.len() > MAX_ISOLATED_ROOTS {
        return Err(LegendrianError::PositiveDimensionalReturnSet {
            found: roots.len(),
            cap: MAX_ISOLATED_ROOTS,
        });
    }
    let mut out = Vec::with_capacity(roots.len());
    for (u, res) in roots {
        let (h, s, rest) = split_params(&u, g, dl + ds);
        let (t, tau) = rest.split_at(dl);
        let target = sigma.point(tau)?;
        out.push(CrossingElement {
            h,
            g_params: s,
            t_params: RVector::from_column_slice(t),
            tau_params: RVector::from_column_slice(tau),
            target,
            residual: res,
        });
    }
    Ok(out)
}

/// One verified point of Λ′ = Λ ∩ Φ⁻¹(0).
#[derive(Debug, Clone)]
pub struct TransversalityPoint {
    pub t_params: RVector,
    pub point: BundlePoint,
    /// Tangent frame ∂ι/∂t_i at the point, for adapted-chart construction.
    pub tangent_frame: Vec<CVector>,
    /// max |Φ_j| at the polished point.
    pub moment_residual: f64,
    /// Smallest principal angle between TΛ and the orbit directions.
    pub min_principal_angle: f64,
}

/// Outcome of the zero-level intersection search.
#[derive(Debug, Clone)]
pub struct TransversalityReport {
    /// d − g: the dimension Λ′ must have when the intersection is clean.
    pub expected_dim: i64,
    pub points: Vec<TransversalityPoint>,
    /// min of the per-point angles; +∞ when Λ′ is empty.
    pub min_angle: f64,
}

/// Locates Λ′ = {t : Φ(ι(t)) = 0} and verifies, at every found point, that
/// TΛ meets the orbit directions only in 0 (principal angle above 1e−3
/// rad) and that the moment differentials restricted to TΛ have full rank
/// g.  Either failure is an error naming the offending point.  Isolated
/// intersections (d = g) are deduplicated sharply; higher-dimensional Λ′
/// is reported as a [`LEVEL_SAMPLE_RADIUS`]-spaced sample.
pub fn transversality_check(
    lambda: &LegendrianImmersion,
    action: &TorusAction,
) -> Result<TransversalityReport, LegendrianError> {
    assert!(
        action.g() > 0,
        "the zero level of a trivial action is everything; transversality needs a torus factor"
    );
    if lambda.ambient() != action.ambient() {
        return Err(LegendrianError::AmbientMismatch {
            got: lambda.ambient(),
            expected: action.ambient(),
        });
    }
    let g = action.g();
    let d = lambda.dim();
    let expected_dim = d as i64 - g as i64;

    let residual = |t: &RVector| -> RVector {
        let x = BundlePoint::normalized(lambda.raw(t.as_slice())).expect("immersion image");
        action.moment_map(&x)
    };
    let jacobian = |t: &RVector| -> RMatrix {
        let x = lambda.raw(t.as_slice());
        let frame = lambda.tangent_frame(t.as_slice());
        RMatrix::from_fn(g, d, |j, i| {
            let weights = &action.weights()[j];
            let weighted = CVector::from_fn(x.len(), |r, _| x[r] * weights[r] as f64);
            2.0 * hermitian(&frame[i], &weighted).re
        })
    };

    let dedup = if expected_dim == 0 {
        ROOT_DEDUP_RADIUS
    } else {
        LEVEL_SAMPLE_RADIUS
    };
    let roots = solve_on_torus(d, default_grid(d), &residual, &jacobian, dedup);
    if expected_dim == 0 && roots.len() > MAX_ISOLATED_ROOTS {
        return Err(LegendrianError::PositiveDimensionalReturnSet {
            found: roots.len(),
            cap: MAX_ISOLATED_ROOTS,
        });
    }

    let mut points = Vec::with_capacity(roots.len());
    let mut min_angle = f64::INFINITY;
    for (t, _) in roots {
        let ts = t.as_slice().to_vec();
        let x = lambda.point(&ts)?;
        let frame = lambda.tangent_frame(&ts);
        let moment_residual = action.moment_map(&x).amax();

        // Intersection triviality: TΛ against the orbit directions.
        let tangent_real: Vec<RVector> = frame.iter().map(complex_to_real).collect();
        let orbit_real: Vec<RVector> = (0..g)
            .map(|j| complex_to_real(&action.orbit_field(j, &x)))
            .filter(|v| v.norm() > RANK_TOL)
            .collect();
        let angle = principal_angles(&tangent_real, &orbit_real)
            .first()
            .copied()
            .unwrap_or(FRAC_PI_2);
        if angle <= crate::tolerances::PRINCIPAL_ANGLE_MIN {
            return Err(LegendrianError::TangentialIntersection { t: ts, angle });
        }

        // Full transversality to the level set: dΦ|_{TΛ} must be onto ℝ^g.
        let dphi = jacobian(&t);
        let sv = dphi.svd(false, false).singular_values;
        let sigma_min = if sv.len() < g {
            0.0
        } else {
            sv.iter().copied().fold(f64::INFINITY, f64::min)
        };
        if sigma_min <= RANK_TOL {
            return Err(LegendrianError::NotTransverseToLevel { t: ts, sigma_min });
        }

        min_angle = min_angle.min(angle);
        points.push(TransversalityPoint {
            t_params: t,
            point: x,
            tangent_frame: frame,
            moment_residual,
            min_principal_angle: angle,
        });
    }
    Ok(TransversalityReport {
        expected_dim,
        points,
        min_angle,
    })
}

/// Seed density: dense for small joint dimension, coarse above three where
/// the prefilter carries the load.
pub(crate) fn default_grid(dims: usize) -> usize {
    if dims <= 3 {
        SEED_GRID_DENSE
    } else {
        SEED_GRID_COARSE
    }
}

fn split_params(u: &RVector, g: usize, d: usize) -> (f64, RVector, Vec<f64>) {
    debug_assert_eq!(u.len(), 1 + g + d);
    let h = u[0];
    let s = RVector::from_fn(g, |j, _| u[1 + j]);
    let t: Vec<f64> = (0..d).map(|i| u[1 + g + i]).collect();
    (h, s, t)
}

fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // A polished root sitting within solver tolerance below 2π is the same
    // circle point as 0; snap it so canonical sorting is grid-independent.
    if TAU - w < 1e-9 {
        0.0
    } else {
        w
    }
}

fn torus_distance(a: &RVector, b: &RVector) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| {
            let d = (x - y).rem_euclid(TAU);
            d.min(TAU - d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Seeded, prefiltered, damped Gauss–Newton root search on the
/// `dims`-torus.  Returns wrapped, deduplicated, lexicographically sorted
/// roots paired with their final residual norms, all below
/// [`RETURN_RESIDUAL_TOL`].
pub(crate) fn solve_on_torus<R, J>(
    dims: usize,
    grid: usize,
    residual: &R,
    jacobian: &J,
    dedup_radius: f64,
) -> Vec<(RVector, f64)>
where
    R: Fn(&RVector) -> RVector,
    J: Fn(&RVector) -> RMatrix,
{
    assert!(dims > 0 && grid > 1);
    let total = grid.pow(dims as u32);
    let step = TAU / grid as f64;

    // A seed can sit half a cell diagonal from the nearest root, so any
    // seed worth polishing has residual below lip · (that distance); the
    // slope bound comes from sampled Jacobian norms with safety margin.
    let probe_stride = (total / 128).max(1);
    let mut lip: f64 = 0.0;
    let mut index = vec![0usize; dims];
    let mut seeds: Vec<RVector> = Vec::new();
    let mut kept = 0usize;
    let mut u = RVector::zeros(dims);
    for seed_idx in 0..total {
        for (slot, &ix) in u.iter_mut().zip(index.iter()) {
            *slot = ix as f64 * step;
        }
        if seed_idx % probe_stride == 0 {
            lip = lip.max(jacobian(&u).norm());
        }
        seeds.push(u.clone());
        kept += 1;
        for slot in index.iter_mut() {
            *slot += 1;
            if *slot < grid {
                break;
            }
            *slot = 0;
        }
    }
    debug_assert_eq!(kept, total);
    let cell_reach = std::f64::consts::PI * (dims as f64).sqrt() / grid as f64;
    let threshold = 3.0 * lip.max(1.0) * cell_reach;

    let mut candidates: Vec<(RVector, f64)> = Vec::new();
    for seed in seeds {
        let r0 = residual(&seed);
        if r0.norm() > threshold {
            continue;
        }
        if let Some((root, res)) = polish(&seed, residual, jacobian) {
            if res <= RETURN_RESIDUAL_TOL {
                candidates.push((root.map(wrap_angle), res));
            }
        }
    }

    // Keep the best representative of each dedup ball.
    candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let mut accepted: Vec<(RVector, f64)> = Vec::new();
    for (root, res) in candidates {
        if accepted
            .iter()
            .all(|(kept_root, _)| torus_distance(kept_root, &root) > dedup_radius)
        {
            accepted.push((root, res));
        }
    }
    // Lexicographic order on coordinates quantized well below the dedup
    // radius and well above polish noise, so ties broken by 1e−16 jitter
    // cannot reorder the list between runs or seed grids.
    const SORT_QUANTUM: f64 = 1e-8;
    accepted.sort_by_key(|(root, _)| {
        root.iter()
            .map(|&x| (x / SORT_QUANTUM).round() as i64)
            .collect::<Vec<i64>>()
    });
    accepted
}

fn polish<R, J>(seed: &RVector, residual: &R, jacobian: &J) -> Option<(RVector, f64)>
where
    R: Fn(&RVector) -> RVector,
    J: Fn(&RVector) -> RMatrix,
{
    let mut u = seed.clone();
    let mut r = residual(&u);
    let mut rn = r.norm();
    for _ in 0..60 {
        if rn < 1e-13 {
            break;
        }
        let jm = jacobian(&u);
        let svd = jm.svd(true, true);
        let smax = svd.singular_values.max();
        if smax <= 0.0 {
            return None;
        }
        let delta = svd.solve(&(-&r), RANK_TOL * smax).ok()?;
        let mut improved = false;
        let mut alpha = 1.0f64;
        for _ in 0..9 {
            let trial = &u + &delta * alpha;
            let r_trial = residual(&trial);
            let rn_trial = r_trial.norm();
            if rn_trial < rn * (1.0 - 1e-4 * alpha) {
                u = trial;
                r = r_trial;
                rn = rn_trial;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Some((u, rn))
}
