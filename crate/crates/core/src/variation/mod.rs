//! Exact p-variation, two-parameter r-variation, Holder constants, and controls.

mod control;
mod pvar;

pub use control::{control_eval, ControlFunction, ControlTerm};
pub(crate) use pvar::check_exponent;
pub use pvar::{
    holder_constant, interpolation_bound_check, oscillation, p_variation, p_variation_brute,
    p_variation_points, pvar_profile, two_param_variation, InterpolationReport, COARSEN_TOL,
    MAX_EXACT_POINTS,
};
