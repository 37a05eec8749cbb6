//! Numerical laboratory for Hardy and Rellich type identities and
//! inequalities on ℝⁿ, built on a mode-by-mode (spherical harmonic)
//! representation of functions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod corpus;
pub mod error;
pub mod euler;
pub mod grid_oracle;
pub mod identities;
pub mod inequalities;
pub mod modes;
pub mod profiles;
pub mod quadrature;
pub mod report;
pub mod sharpness;
pub mod spectral;

pub use corpus::{corpus_rule, generate, CorpusFile, CorpusParams, FunctionSpec, ModeSpec, ProfileSpec};
pub use error::{Error, Result};
pub use euler::{Jet, RadialExpr};
pub use grid_oracle::{compare_with_mode_space, FdStep, OracleComparison, OracleNorms};
pub use identities::{
    check_abstract_equivalence, check_identity, run_identity_suite, CheckOptions, IdentityId, IdentityReport,
};
pub use inequalities::{
    abstract_constant, check_inequality, delta_curve, minimize_delta_curve, run_slack_suite, AbstractConstant,
    AbstractSpectrum, DeltaVariant, InequalityId, SlackReport,
};
pub use modes::{DimensionConstants, ModeFunction, ModeIndex, ModeOp, OperatorKind, Selector};
pub use profiles::{make_polyexp, make_power_cutoff, CutoffChi, SmoothProfile};
pub use quadrature::{AnnulusRule, RadialRule};
pub use report::{write_report, CsvRecord, Format};
pub use sharpness::{LimitScan, N2FailureDemo};
pub use spectral::{best_constant_estimate, BestConstTarget, ConvergenceTable, SplineBasis};
