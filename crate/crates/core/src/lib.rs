//! Constrained Lasso (CLasso) estimation and inference for a few
//! coefficients of interest in a high-dimensional sparse linear model
//! `Y = Xθ + Zγ + w`, with the un-penalized Lasso and de-sparsified Lasso as
//! comparators and a seeded Monte-Carlo harness.
//!
//! ```
//! use classo::{classo_fit, component_ci, ClassoConfig, Matrix, SemiparametricData};
//!
//! // y = 2·x + small perturbation, three nuisance columns
//! let rows: Vec<Vec<f64>> = (0..40)
//!     .map(|i| {
//!         let t = i as f64;
//!         vec![(0.7 * t).sin(), (1.3 * t).cos(), (0.4 * t).sin(), (2.1 * t).cos()]
//!     })
//!     .collect();
//! let u = Matrix::from_rows(&rows).unwrap();
//! let y: Vec<f64> = (0..40).map(|i| 2.0 * u.get(i, 0) + 0.01 * (5.0 * i as f64).sin()).collect();
//! let data = SemiparametricData::from_design(y, u, vec![0]).unwrap();
//!
//! let fit = classo_fit(&data, &ClassoConfig::default()).unwrap();
//! let ci = component_ci(fit.theta[0], fit.xtilde_column(0), fit.sigma_hat, 0.05).unwrap();
//! assert!((fit.theta[0] - 2.0).abs() < 0.05);
//! assert!(ci.contains(fit.theta[0]));
//! ```

mod data;
mod error;
pub mod estimators;
pub mod inference;
pub mod lasso;
pub mod nodewise;
pub mod normal;
pub mod numerics;
pub mod simulate;

pub use data::SemiparametricData;
pub use error::{Error, Result};
pub use estimators::{
    classo_fit, desparsified_estimate, fit_baseline, gamma_update, lambda_schedule, lasso_init,
    theta_update, up_lasso_fit, AlphaMode, Baseline, ClassoConfig, ClassoEstimate,
    DesparsifiedEstimate, FitStatus, NodewiseNoise, Penalty,
};
pub use inference::{
    component_ci, contrast_ci, holm, p_value_component, test_contrast, HolmOutcome, Interval,
    Method, TestResult,
};
pub use lasso::{
    scaled_lasso, solve_lasso, LassoOptions, LassoProblem, LassoSolution, ScaledLassoFit,
};
pub use nodewise::{default_lambdas, fit_alpha, omega_hat, AlphaMatrix, OmegaHat};
pub use numerics::{cholesky, solve, CholeskyFactor, Matrix};
pub use simulate::{
    default_beta_star, make_sigma, run_replicates, sample_instance, DesignKind, DesignSpec,
    SimReport, SimSpec,
};
