//! Indeterminacy sets and sampled regularity checks.

mod region;
mod regular;
mod scan;

pub use region::{
    format_complex, linear_form, parse_complex, BallJson, ConeJson, RegionJson, RegionSpec, RegionsConfig, Role,
    Shape, WitnessJson,
};
pub use regular::{
    check_regular, iterated_indeterminacy_containment, Check, ConditionResult, ContainmentReport, Definition,
    RegularityOptions, RegularityReport, WitnessSubspace,
};
pub use scan::{candidate_check, numeric_scan, rational_guess, residual, Cluster, ScanOptions};
