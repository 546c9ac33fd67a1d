//! Euler, approximate Euler, Milstein and Picard solvers for rough
//! differential equations, plus Young and rough integrals of controlled paths.

mod coefficients;
mod controlled;
mod euler;
mod picard;

pub use coefficients::{
    derivative_check, BuiltinCoefficients, CoefficientSpec, Coefficients, FD_STEP,
};
pub use controlled::{
    controlled_from_solution, rough_integral, young_integral, ControlledPath, YoungIntegral,
};
pub use euler::{
    approximate_euler, euler_on_grid, euler_scheme, hold_on_grid, milstein_reference,
    solve_rde_reference, ReferenceSolution, ReferenceSummary,
};
pub use picard::{solve_rde_picard, PicardOptions, PicardReport};
