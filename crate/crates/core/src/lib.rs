//! Sensitivity of insignificant regression results to added covariates.
//!
//! Given a restricted OLS fit, the crate answers how strong (in partial R²
//! terms) an added covariate must be to make the treatment coefficient
//! significant, and how far a search over covariate subsets can push the
//! treatment t-statistic.

pub mod dist;
pub mod error;
pub mod grid;
mod linalg;
pub mod ols;
pub mod ovb;
pub mod robustness;
pub mod specsearch;

pub use error::{Error, Result};
pub use grid::{grid, GridSheet};
pub use ols::{Dataset, FitResult, ModelSpec};
pub use ovb::{adjust, AdjustedInference, RestrictedFit, StrengthPair, TStat};
pub use robustness::{
    Regime, RobustnessReport, RobustnessValue, StrengthBounds, TMaxSolution, XrviAt,
};
pub use specsearch::{
    enumerate, phack_bound, BoundMode, PhackBound, SearchConfig, SearchProblem, SpecSearchResult,
};
