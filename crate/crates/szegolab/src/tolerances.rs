//! Central numerical tolerances and discretization constants.
//!
//! Every threshold that decides a rank, accepts a root, or gates a
//! convergence check lives here, so call sites never embed magic numbers and
//! tests can reference the same constants the library uses.  Each constant
//! records why its magnitude is appropriate for f64 arithmetic at the
//! problem sizes this crate targets (ambient complex dimension ≤ 8, kernel
//! levels k ≤ 1000).

/// Rank decisions in subspace arithmetic: singular values below this times
/// the largest singular value are treated as zero.
///
/// Basis matrices here are small (≤ 16×16) and well scaled, so f64 QR/SVD
/// resolves rank to ~1e−14; 1e−10 leaves four orders of headroom without
/// admitting genuinely degenerate configurations.
pub const RANK_TOL: f64 = 1e-10;

/// Residual bound for the tangent-decomposition round trip: the four
/// components must recombine to the input vector within this (absolute,
/// on unit-scale inputs).
pub const DECOMP_RESIDUAL_TOL: f64 = 1e-10;

/// Tolerance for the algebraic constraints on the R/T matrices
/// (RᵗR + RᵗTᵗTR = I and symmetry of RᵗTR).
pub const RT_CONSTRAINT_TOL: f64 = 1e-10;

/// A subspace is accepted as Lagrangian/isotropic when the symplectic form
/// on an orthonormal basis stays below this bound.
pub const ISOTROPY_TOL: f64 = 1e-10;

/// Pullback of the contact form along a built-in immersion must vanish
/// below this bound on sample grids.  Looser than ISOTROPY_TOL because the
/// check composes map evaluation, differentiation, and normalization.
pub const LEGENDRIAN_TOL: f64 = 1e-8;

/// Accepted residual ‖(h,g)·x − ι(t)‖ for a polished return element or
/// crossing.  Newton converges quadratically on these trigonometric
/// systems, so accepted roots are in practice at ~1e−13; 1e−9 rejects
/// near-misses firmly.
pub const RETURN_RESIDUAL_TOL: f64 = 1e-9;

/// Two polished roots closer than this (ℓ∞ torus distance in parameters)
/// are the same solution.
pub const ROOT_DEDUP_RADIUS: f64 = 1e-6;

/// Smallest principal angle (radians) between a Legendrian tangent and the
/// orbit tangent below which the configuration is reported as tangential
/// (transversality failure).
pub const PRINCIPAL_ANGLE_MIN: f64 = 1e-3;

/// Relative disagreement allowed between a quadrature value and its
/// node-doubled refinement before the result is declared unconverged.
pub const QUADRATURE_DOUBLING_REL: f64 = 1e-8;

/// Absolute floor for quadrature convergence and decay decisions: values
/// whose magnitude (and node-doubling movement) stay below this are
/// indistinguishable from zero at f64 cancellation levels, e.g. states
/// evaluated far off the orbit of their Legendrian.
pub const QUADRATURE_ABS_FLOOR: f64 = 1e-12;

/// Relative tolerance on the circle-equivariance identity
/// u_k(e^{iθ}x) = e^{ikθ}u_k(x).
pub const EQUIVARIANCE_TOL: f64 = 1e-9;

/// Tolerance for the kernel reproducing-property check at small k.
pub const REPRODUCING_TOL: f64 = 1e-6;

/// Relative tolerance for closed-form Gaussian integrals against the
/// direct quadrature oracle.
pub const GAUSSIAN_ORACLE_TOL: f64 = 1e-6;

/// Relative tolerance for the orbit base-change identity
/// |det A|·V_eff·|stabilizer| = 1 (quadrature on one side, pointwise
/// evaluation on the other).
pub const ORBIT_IDENTITY_TOL: f64 = 1e-6;

/// Chart radius: displacements with ‖z‖ beyond this are rejected rather
/// than silently extrapolated.  The affine-lift chart is a diffeomorphism
/// on this ball with comfortably bounded distortion.
pub const CHART_RADIUS: f64 = 1.0;

/// Allowed deviation of a sphere point's norm from 1.  Constructors
/// normalize inputs that are within this band and reject anything farther.
pub const UNIT_SPHERE_TOL: f64 = 1e-9;

/// A coordinate counts as belonging to the support of a sphere point when
/// its modulus exceeds this.  Stabilizer computations are integer lattice
/// arithmetic on the supported weight columns, so the cut must sit far
/// above roundoff and far below any honest coordinate value.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Central-difference step for derivatives of user-supplied immersions.
/// Truncation error ~h² and roundoff ~ε/h balance near 1e−6 for the
/// unit-scale trigonometric maps this crate works with.
pub const FD_STEP: f64 = 1e-6;

/// Step for second-order central differences.  The optimal balance moves
/// to ~ε^{1/4} because roundoff grows like ε/h² when differencing twice.
pub const FD_STEP_SECOND: f64 = 1e-4;

/// Spacing at which points of a positive-dimensional zero-level
/// intersection are reported.  Finer sampling adds no information to the
/// transversality verdict; this keeps reports readable while still placing
/// several samples on every component at the default seed grids.
pub const LEVEL_SAMPLE_RADIUS: f64 = 5e-2;

/// Grid density (seeds per circle factor) for root searches in up to three
/// combined parameters.  All residual maps are trigonometric polynomials of
/// low degree, whose basins at this density are verified by the re-seeding
/// stability tests.
pub const SEED_GRID_DENSE: usize = 64;

/// Seeds per circle factor when four or more parameters are searched
/// jointly; combined with residual prefiltering this keeps the seed count
/// tractable while the dedup/stability checks still pass.
pub const SEED_GRID_COARSE: usize = 24;

/// Hard cap on deduplicated roots; exceeding it is diagnosed as a
/// positive-dimensional solution set rather than returned as data.
pub const MAX_ISOLATED_ROOTS: usize = 64;

/// Trapezoid nodes per torus dimension for orbit-volume quadrature.
pub const ORBIT_VOLUME_NODES: usize = 256;

/// Baseline trapezoid nodes per torus dimension for state quadrature; the
/// effective count grows with the kernel level (see `states`).
pub const STATE_NODES_BASE: usize = 256;

/// A stationary point whose damping exponent k·Im S exceeds this is dropped
/// from the oracle sum: e^{−40} ≈ 4e−18 sits below f64 resolution of the
/// surviving O(1) terms.
pub const DEAD_PHASE_EXPONENT: f64 = 40.0;

/// A critical point counts as degenerate when |det S″| falls below this
/// times ‖S″‖_F^d.  Honest Hessians in this crate have the ratio O(d^{−d/2});
/// collapsing ones hit f64 noise long before 1e−8.
pub const DEGENERATE_HESSIAN_TOL: f64 = 1e-8;

/// Fewest (k, value) levels a power-law fit or decay classification will
/// accept; below this the least-squares exponent is noise.
pub const FIT_MIN_LEVELS: usize = 8;

/// A level whose predicted interference coefficient is below this times the
/// total coefficient mass is dead (fully destructive) and is excluded from
/// fits rather than divided by.
pub const FIT_DEAD_LEVEL_REL: f64 = 1e-8;

/// RMS of log-residuals above which a power-law fit hunts for a periodic
/// pattern and reports unresolved oscillation instead of an exponent.
pub const FIT_OSCILLATION_RMS: f64 = 0.05;

/// A sequence is classified as geometric decay when the linear-in-k model
/// beats the linear-in-log-k model by this factor in summed squared
/// residuals (and the decay is substantial; see `FIT_DECAY_MIN_DROP`).
pub const FIT_DECAY_ADVANTAGE: f64 = 0.25;

/// Minimal total log-drop |slope|·(k_max − k_min) before the geometric
/// classification may fire; prevents flat noisy sequences from being
/// declared decaying.
pub const FIT_DECAY_MIN_DROP: f64 = 5.0;
