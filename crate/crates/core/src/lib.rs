//! Coarse non-wandering structure of maps and semiflows on finite samples.
//!
//! The central quantity is the link level `L(x, y)`: the smallest error
//! budget with which an orbit segment starting near `x` ends near `y`. From
//! the level matrix the crate derives the non-wandering level `lambda(x)`,
//! the robustness level `beta(x)`, the filtration slices over the extended
//! index `(-inf, -0] ⊔ [+0, inf]`, and certificates of wandering behaviour.

pub mod builtins;
pub mod error;
pub mod export;
pub mod filtration;
pub mod finite;
pub mod flow;
pub mod level;
pub mod link;
pub mod space;
pub mod spatial;
pub mod sysfile;
pub mod system;
pub mod wandering;

pub use error::{Error, Result};
pub use export::{export_diagram_json, export_levels_csv, render_svg, DiagramDocument, SystemMeta};
pub use filtration::{
    critical_levels, diagram, nw_level, omega_membership, robustness_level, summarize, DiagramSlice,
    LevelSummary, NegBoundary,
};
pub use finite::{definitional_omega, definitional_reachable, verify_lemmas, FiniteInstance, LemmaReport};
pub use flow::{
    build_flow_grid_system, flow_level_matrix, flow_link_level, flow_nw_level, flow_robustness_level,
    integrate, SemiflowSystem,
};
pub use level::{compare_levels, Branch, ExtendedLevel};
pub use link::{
    horizon_stability, level_matrix, link_level, reachable_set, HorizonStability, LevelMatrix, LinkWitness,
    MatrixOptions,
};
pub use space::{validate_cost_space, Coords, CostSpace, ValidationReport};
pub use sysfile::{LoadedSystem, SystemSpecFile};
pub use system::{build_grid_system, Dynamics, MapSystem, StepWindow, TrajectoryStore};
pub use wandering::{
    certify_point, default_min_gap, find_wandering_certificates, PointCertification, WanderingCertificate,
};
