//! Level-2 rough paths: Chen reconstruction, canonical and piecewise-constant
//! lifts, the Riemann-integrability diagnostic, and the joint lift of a
//! deterministic path with Brownian motion.

mod canonical;
mod joint;
mod rie;
mod rough_path;

pub use canonical::{
    canonical_lift, iterated_riemann, lambda_defect, lambda_defect_at, piecewise_constant_lift,
    riemann_path, LambdaReport, LiftOptions, LiftReport,
};
pub use joint::{davie_constant, joint_lift_eta_w, quad_covariation, QuadCovReport};
pub use rie::{rie_diagnostic, RieOptions, RieReport, RieWitness, MAX_RIE_LEVEL_POINTS};
pub use rough_path::{rough_distance, second_level_variation, RoughPath};
