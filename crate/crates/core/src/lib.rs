//! Global sensitivity analysis for computer codes whose outputs are
//! probability distributions on the real line, either given exactly or
//! approximated by repeated runs of a stochastic simulator.
//!
//! Every index is an instance of one universal ratio built from a family of
//! test functions (see [`indices`]); the three estimation schemes live in
//! [`estimators`].

pub mod design;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod frechet;
pub mod indices;
pub mod models;
pub mod numeric;
pub mod second_level;
pub mod seed;
pub mod stochastic;

pub use design::{
    build_designs, estimate_design, gsa, gsa_many, Code, Design, GsaSettings, IndependentInputs, InputSampler,
    ScalarLaw,
};
pub use distributions::{
    quantile, wasserstein, wasserstein_cost, wasserstein_pow, ContrastFunction, EmpiricalDistribution, QuantileGrid,
};
pub use error::{GsaError, Result};
pub use estimators::{
    chatterjee_xi, pick_freeze_estimate, rank_estimate, ustat_estimate, PickFreezeDesign, RankDesign,
};
pub use frechet::{frechet_feature, wasserstein_variance, DistributionEnsemble};
pub use indices::{
    family_cvm, family_quantile_eval, family_sobol, family_wasserstein_ball, IndexEstimate, IndexSet, Method,
    OutputPoint, ParamSource, TestFunctionFamily,
};
pub use second_level::{second_level_gsa, uniform_interval_family, ParametricFamily, SecondLevelProblem};
pub use stochastic::{
    calibrate_n, empirical_output_measure, stochastic_gsa, CalibrationRegime, StochasticCode, StochasticDesignResult,
};
