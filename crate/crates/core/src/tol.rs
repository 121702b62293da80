//! Tolerances shared across the crate.
//!
//! Algebraic identities are asserted at [`ALGEBRA`]; everything else is
//! derived from these constants so a single place controls the policy.

/// Pointwise algebraic identities in double precision.
pub const ALGEBRA: f64 = 1e-12;

/// Plane classification (associative / coassociative) default.
pub const PLANE: f64 = 1e-10;

/// Orthogonality checks for normal vectors and normal fields.
pub const NORMAL: f64 = 1e-10;

/// Frames whose Gram condition number exceeds this are rejected.
pub const FRAME_CONDITION: f64 = 1e8;

/// Ruled patches whose node frames exceed this condition number are not immersive.
pub const IMMERSION_CONDITION: f64 = 1e4;

/// A self-dual form with smaller norm counts as degenerate.
pub const DEGENERATE_FORM: f64 = 1e-12;

/// Eigenvalues below this count toward kernel dimension proxies.
pub const KERNEL_EIGENVALUE: f64 = 1e-8;

/// Perturbation bound on `|t_i|` for the almost-instanton linear family.
pub const ALMOST_INSTANTON_DELTA: f64 = 0.1;
