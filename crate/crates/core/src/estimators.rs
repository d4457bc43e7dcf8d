//! The constrained Lasso and its two comparators.
//!
//! * CLasso: alternate the zero-bias constraint `n⁻¹X̃ᵀ(Y − Xθ − Zγ) = 0`
//!   (solved exactly for θ) with a Lasso of `Y − Xθ` on `Z` (for γ),
//!   starting from the joint Lasso.
//! * UP Lasso: the same iteration with `α ≡ 0`, i.e. θ unpenalised.
//! * De-sparsified Lasso: a one-step correction of the joint Lasso, for a
//!   single coordinate of interest.

use serde::Serialize;

use crate::data::SemiparametricData;
use crate::error::{Error, Result};
use crate::lasso::{
    coordinate_descent, scaled_lasso_view, LassoOptions, LassoSolution, ScaledLassoOptions,
};
use crate::nodewise::{
    fit_alpha_for, omega_hat, universal_penalty, zero_alpha, AlphaMatrix, OmegaHat,
};
use crate::numerics::{dot, norm1, norm2, norm_inf, solve, Matrix};

/// Relative step below which successive nuisance iterates count as settled.
pub const GAMMA_STEP_TOL: f64 = 1e-6;
/// Constraint residual tolerance, relative to the response RMS.
pub const CONSTRAINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Penalty {
    /// `σ̂·√(2 log q / n)` with σ̂ from the scaled Lasso and q = d + p.
    Auto,
    Fixed(f64),
}

/// Noise level plugged into the automatic node-wise penalty
/// `σ·√(2 log p / n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodewiseNoise {
    /// Scaled-Lasso noise level of each node-wise regression `X_j ~ Z`.
    #[default]
    Column,
    /// The outcome's σ̂ for every column.
    Response,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// Node-wise Lasso; `lambdas: None` picks the penalties automatically.
    Nodewise {
        lambdas: Option<Vec<f64>>,
        noise: NodewiseNoise,
    },
    /// `α ≡ 0`, which turns the iteration into the UP Lasso.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassoConfig {
    pub penalty: Penalty,
    /// The `c` in `λ_t = λ(1 + c‖γ^{t−1} − γ^{t−2}‖₁)`.
    pub schedule_c: f64,
    /// Maximum number of alternations `T`.
    pub iterations: usize,
    /// KKT tolerance of every inner Lasso solve.
    pub inner_tol: f64,
    pub max_sweeps: usize,
    pub record_trace: bool,
    pub alpha: AlphaMode,
    /// Optional cap `λ_t ≤ cap·λ`.
    pub lambda_cap: Option<f64>,
    /// Skip the scaled Lasso and use this noise level.
    pub sigma_hat: Option<f64>,
}

impl Default for ClassoConfig {
    fn default() -> Self {
        ClassoConfig {
            penalty: Penalty::Auto,
            schedule_c: 0.5,
            iterations: 10,
            inner_tol: 1e-8,
            max_sweeps: 10_000,
            record_trace: false,
            alpha: AlphaMode::Nodewise {
                lambdas: None,
                noise: NodewiseNoise::Column,
            },
            lambda_cap: None,
            sigma_hat: None,
        }
    }
}

impl ClassoConfig {
    fn validate(&self) -> Result<()> {
        if let Penalty::Fixed(l) = self.penalty {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::config(format!(
                    "lambda must be finite and > 0, got {l}"
                )));
            }
        }
        if !(self.schedule_c.is_finite() && self.schedule_c >= 0.0) {
            return Err(Error::config("schedule_c must be finite and >= 0"));
        }
        if self.iterations == 0 {
            return Err(Error::config("iterations must be >= 1"));
        }
        if !(self.inner_tol.is_finite() && self.inner_tol > 0.0) {
            return Err(Error::config("inner_tol must be finite and > 0"));
        }
        if let Some(cap) = self.lambda_cap {
            if !(cap.is_finite() && cap >= 1.0) {
                return Err(Error::config("lambda_cap must be finite and >= 1"));
            }
        }
        if let Some(s) = self.sigma_hat {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::config("sigma_hat override must be finite and > 0"));
            }
        }
        Ok(())
    }

    pub(crate) fn lasso_options(&self) -> LassoOptions {
        LassoOptions {
            tol: self.inner_tol,
            max_sweeps: self.max_sweeps,
            ..Default::default()
        }
    }
}

/// Quantities shared by every method and every split of one data set: the
/// noise level, the base penalty, and the joint-Lasso initialiser.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Baseline {
    pub sigma_hat: f64,
    pub lambda: f64,
    /// Joint-Lasso coefficients in the column order of the full design.
    pub init_coef: Vec<f64>,
}

impl Baseline {
    pub fn theta0(&self, data: &SemiparametricData) -> Vec<f64> {
        data.interest_columns()
            .iter()
            .map(|&c| self.init_coef[c])
            .collect()
    }

    pub fn gamma0(&self, data: &SemiparametricData) -> Vec<f64> {
        data.nuisance_columns()
            .iter()
            .map(|&c| self.init_coef[c])
            .collect()
    }
}

/// Noise level, penalty, and joint-Lasso start for `data`. Invariant under
/// [`SemiparametricData::reparameterize`].
pub fn fit_baseline(data: &SemiparametricData, cfg: &ClassoConfig) -> Result<Baseline> {
    cfg.validate()?;
    let all: Vec<usize> = (0..data.design().ncols()).collect();
    let sigma_hat = match cfg.sigma_hat {
        Some(s) => s,
        None => {
            let opts = ScaledLassoOptions {
                lasso: cfg.lasso_options(),
                ..Default::default()
            };
            scaled_lasso_view(&data.view(&all), data.y(), &opts)?.sigma_hat
        }
    };
    let lambda = match cfg.penalty {
        Penalty::Fixed(l) => l,
        Penalty::Auto => universal_penalty(sigma_hat, data.n(), all.len()),
    };
    let init_coef = joint_lasso(data, lambda, &cfg.lasso_options())?.coef;
    Ok(Baseline {
        sigma_hat,
        lambda,
        init_coef,
    })
}

fn joint_lasso(
    data: &SemiparametricData,
    lambda: f64,
    opts: &LassoOptions,
) -> Result<LassoSolution> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::config(format!(
            "lambda must be finite and > 0, got {lambda}"
        )));
    }
    let all: Vec<usize> = (0..data.design().ncols()).collect();
    coordinate_descent(&data.view(&all), data.y(), None, lambda, None, opts)?
        .require_converged("joint lasso initialisation")
}

/// Joint Lasso with both blocks penalised at `lambda`; returns `(θ⁰, γ⁰)`.
pub fn lasso_init(data: &SemiparametricData, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let sol = joint_lasso(data, lambda, &LassoOptions::default())?;
    let pick = |cols: &[usize]| cols.iter().map(|&c| sol.coef[c]).collect::<Vec<f64>>();
    Ok((pick(data.interest_columns()), pick(data.nuisance_columns())))
}

/// The α used for `data` under `cfg`.
pub fn build_alpha(
    data: &SemiparametricData,
    cfg: &ClassoConfig,
    sigma_hat: f64,
) -> Result<AlphaMatrix> {
    match &cfg.alpha {
        AlphaMode::Zero => Ok(zero_alpha(data)),
        AlphaMode::Nodewise { lambdas, noise } => {
            let lambdas = match lambdas {
                Some(l) => l.clone(),
                None => {
                    if data.p() < 2 {
                        return Err(Error::config(
                            "automatic node-wise penalty needs p >= 2 (log p = 0); set the penalties explicitly",
                        ));
                    }
                    let (n, p) = (data.n(), data.p());
                    match noise {
                        NodewiseNoise::Response => {
                            vec![universal_penalty(sigma_hat, n, p); data.d()]
                        }
                        NodewiseNoise::Column => {
                            let opts = ScaledLassoOptions {
                                lasso: cfg.lasso_options(),
                                ..Default::default()
                            };
                            (0..data.d())
                                .map(|j| {
                                    let s = scaled_lasso_view(
                                        &data.nuisance_view(),
                                        data.x_column(j),
                                        &opts,
                                    )?;
                                    Ok(universal_penalty(s.sigma_hat, n, p))
                                })
                                .collect::<Result<Vec<f64>>>()?
                        }
                    }
                }
            };
            fit_alpha_for(data, &lambdas, &cfg.lasso_options())
        }
    }
}

/// Solves the constraint for θ given γ: `θ = [X̃ᵀX]⁻¹ X̃ᵀ(Y − Zγ)`.
struct ThetaStep {
    /// `X̃ᵀX`
    lhs: Matrix,
}

impl ThetaStep {
    fn new(data: &SemiparametricData, alpha: &AlphaMatrix) -> Result<Self> {
        Ok(ThetaStep {
            lhs: alpha.xtilde.tr_matmul(&data.x())?,
        })
    }

    fn apply(
        &self,
        data: &SemiparametricData,
        alpha: &AlphaMatrix,
        gamma: &[f64],
    ) -> Result<Vec<f64>> {
        let theta0 = vec![0.0; data.d()];
        let r = data.full_residual(&theta0, gamma);
        let rhs = Matrix::column_vector(&alpha.xtilde.tr_matvec(&r));
        Ok(solve(&self.lhs, &rhs)?.column(0).to_vec())
    }
}

/// `θ = [(X − Zα)ᵀX]⁻¹ (X − Zα)ᵀ(Y − Zγ)`
pub fn theta_update(
    data: &SemiparametricData,
    alpha: &AlphaMatrix,
    gamma: &[f64],
) -> Result<Vec<f64>> {
    check_len("gamma", data.p(), gamma.len())?;
    ThetaStep::new(data, alpha)?.apply(data, alpha, gamma)
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

fn gamma_solve(
    data: &SemiparametricData,
    theta: &[f64],
    lambda_t: f64,
    warm: Option<&[f64]>,
    opts: &LassoOptions,
) -> Result<LassoSolution> {
    if !(lambda_t.is_finite() && lambda_t > 0.0) {
        return Err(Error::config(format!(
            "lambda_t must be finite and > 0, got {lambda_t}"
        )));
    }
    let resp = data.partial_residual(theta);
    let xty = data.scaled_cross(data.nuisance_columns(), &resp, theta);
    coordinate_descent(
        &data.nuisance_view(),
        &resp,
        Some(xty),
        lambda_t,
        warm,
        opts,
    )?
    .require_converged("gamma update")
}

/// Lasso of `Y − Xθ` on `Z` at `lambda_t`.
pub fn gamma_update(data: &SemiparametricData, theta: &[f64], lambda_t: f64) -> Result<Vec<f64>> {
    check_len("theta", data.d(), theta.len())?;
    Ok(gamma_solve(data, theta, lambda_t, None, &LassoOptions::default())?.coef)
}

/// `λ_1 = λ(1 + c‖γ⁰‖₁)`, `λ_t = λ(1 + c‖γ^{t−1} − γ^{t−2}‖₁)` for t ≥ 2.
///
/// `gamma_prev` is `γ^{t−1}` and `gamma_prev2` is `γ^{t−2}` (ignored at t = 1).
pub fn lambda_schedule(
    lambda_base: f64,
    c: f64,
    t: usize,
    gamma_prev: &[f64],
    gamma_prev2: Option<&[f64]>,
) -> f64 {
    assert!(t >= 1, "iterations are numbered from 1");
    let spread = match (t, gamma_prev2) {
        (1, _) | (_, None) => norm1(gamma_prev),
        (_, Some(older)) => gamma_prev
            .iter()
            .zip(older)
            .map(|(a, b)| (a - b).abs())
            .sum(),
    };
    lambda_base * (1.0 + c * spread)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    /// Both estimating equations hold and the nuisance iterates settled.
    Converged,
    /// `T` alternations ran without meeting the fixed-point tolerances.
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub t: usize,
    pub theta: Vec<f64>,
    /// `‖γ^t − γ^{t−1}‖₁`
    pub gamma_step: f64,
    pub lambda_t: f64,
    /// `‖γ^t‖₁`
    pub gamma_l1: f64,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointResiduals {
    /// `‖n⁻¹X̃ᵀ(Y − Xθ̂ − Zγ̂)‖_∞`
    pub r_a: f64,
    /// KKT violation of γ̂ for the Lasso of `Y − Xθ̂` on `Z` at the final `λ_t`.
    pub r_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassoEstimate {
    pub theta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma_hat: f64,
    pub lambda: f64,
    pub omega: OmegaHat,
    pub alpha: AlphaMatrix,
    pub theta0: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub trace: Vec<IterationRecord>,
    pub fixed_point: FixedPointResiduals,
    pub iterations: usize,
    pub last_lambda: f64,
    pub last_gamma_step: f64,
    pub status: FitStatus,
}

impl ClassoEstimate {
    pub fn is_converged(&self) -> bool {
        self.status == FitStatus::Converged
    }

    /// Column `j` of `X̃`.
    pub fn xtilde_column(&self, j: usize) -> &[f64] {
        self.alpha.xtilde.column(j)
    }
}

/// CLasso: scaled Lasso for σ̂, node-wise α, joint-Lasso start, then up to
/// `T` alternations of the θ and γ updates.
pub fn classo_fit(data: &SemiparametricData, cfg: &ClassoConfig) -> Result<ClassoEstimate> {
    let base = fit_baseline(data, cfg)?;
    let alpha = build_alpha(data, cfg, base.sigma_hat)?;
    classo_iterate(data, cfg, &base, alpha)
}

/// UP Lasso: [`classo_fit`] with `α ≡ 0`.
pub fn up_lasso_fit(data: &SemiparametricData, cfg: &ClassoConfig) -> Result<ClassoEstimate> {
    let cfg = ClassoConfig {
        alpha: AlphaMode::Zero,
        ..cfg.clone()
    };
    classo_fit(data, &cfg)
}

/// Run the alternation from a precomputed baseline and α.
pub fn classo_iterate(
    data: &SemiparametricData,
    cfg: &ClassoConfig,
    base: &Baseline,
    alpha: AlphaMatrix,
) -> Result<ClassoEstimate> {
    cfg.validate()?;
    check_len("alpha columns", data.d(), alpha.d())?;
    let omega = omega_hat(&alpha.xtilde, base.sigma_hat)?;
    let opts = cfg.lasso_options();
    let step = ThetaStep::new(data, &alpha)?;
    let scale = data.response_scale();

    let theta0 = base.theta0(data);
    let gamma0 = base.gamma0(data);
    let mut gamma_prev2: Option<Vec<f64>> = None;
    let mut gamma = gamma0.clone();
    let mut theta = theta0.clone();
    let mut trace = Vec::new();
    let mut status = FitStatus::MaxIterations;
    let mut last_lambda = base.lambda;
    let mut last_step = f64::INFINITY;
    let mut r_b = f64::INFINITY;
    let mut iterations = 0;

    for t in 1..=cfg.iterations {
        theta = step.apply(data, &alpha, &gamma)?;
        let mut lambda_t = lambda_schedule(
            base.lambda,
            cfg.schedule_c,
            t,
            &gamma,
            gamma_prev2.as_deref(),
        );
        if let Some(cap) = cfg.lambda_cap {
            lambda_t = lambda_t.min(cap * base.lambda);
        }
        let sol = gamma_solve(data, &theta, lambda_t, Some(&gamma), &opts)
            .map_err(|e| e.in_context(&format!("iteration {t}")))?;
        let step_l1: f64 = sol
            .coef
            .iter()
            .zip(&gamma)
            .map(|(a, b)| (a - b).abs())
            .sum();
        let gamma_l1 = norm1(&sol.coef);
        log::trace!(
            "iteration {t}: lambda_t={lambda_t:.6e} step={step_l1:.3e} |gamma|_1={gamma_l1:.4}"
        );
        if cfg.record_trace {
            trace.push(IterationRecord {
                t,
                theta: theta.clone(),
                gamma_step: step_l1,
                lambda_t,
                gamma_l1,
                gamma: sol.coef.clone(),
            });
        }
        gamma_prev2 = Some(std::mem::replace(&mut gamma, sol.coef));
        last_lambda = lambda_t;
        last_step = step_l1;
        r_b = sol.kkt_violation;
        iterations = t;

        if step_l1 <= GAMMA_STEP_TOL * (1.0 + gamma_l1) {
            let r_a = constraint_residual(data, &alpha, &theta, &gamma);
            if r_a <= CONSTRAINT_TOL * scale && r_b <= cfg.inner_tol {
                status = FitStatus::Converged;
                break;
            }
        }
    }

    let r_a = constraint_residual(data, &alpha, &theta, &gamma);
    Ok(ClassoEstimate {
        theta,
        gamma,
        sigma_hat: base.sigma_hat,
        lambda: base.lambda,
        omega,
        alpha,
        theta0,
        gamma0,
        trace,
        fixed_point: FixedPointResiduals { r_a, r_b },
        iterations,
        last_lambda,
        last_gamma_step: last_step,
        status,
    })
}

/// `‖n⁻¹X̃ᵀ(Y − Xθ − Zγ)‖_∞`
pub fn constraint_residual(
    data: &SemiparametricData,
    alpha: &AlphaMatrix,
    theta: &[f64],
    gamma: &[f64],
) -> f64 {
    let r = data.full_residual(theta, gamma);
    let n = data.n() as f64;
    norm_inf(
        &alpha
            .xtilde
            .tr_matvec(&r)
            .iter()
            .map(|v| v / n)
            .collect::<Vec<f64>>(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesparsifiedEstimate {
    /// `b̂₁ = θ⁰ + τ̂⁻²·X̃ᵀ(Y − Xθ⁰ − Zγ⁰)/n`
    pub b1: f64,
    /// `τ̂² = n⁻¹‖X̃‖² + 2λ₁‖α₁‖₁`
    pub tau_hat_sq: f64,
    /// `τ̃² = n⁻¹X̃ᵀX`
    pub tau_tilde_sq: f64,
    /// `θ¹ = θ⁰ + τ̃⁻²·X̃ᵀ(Y − Xθ⁰ − Zγ⁰)/n`, the first CLasso iterate.
    pub theta1_first_iterate: f64,
    pub theta0: f64,
    /// Standard error `σ̂‖X̃‖/(n τ̂²)` of `b̂₁`.
    pub std_error: f64,
    pub sigma_hat: f64,
    pub lambda: f64,
    pub node_lambda: f64,
}

/// De-sparsified Lasso for a single coordinate of interest.
pub fn desparsified_estimate(
    data: &SemiparametricData,
    cfg: &ClassoConfig,
) -> Result<DesparsifiedEstimate> {
    let base = fit_baseline(data, cfg)?;
    if data.d() != 1 {
        return Err(Error::config(
            "the de-sparsified estimate is defined for a single coordinate (d = 1)",
        ));
    }
    let alpha = build_alpha(data, cfg, base.sigma_hat)?;
    desparsified_from(data, &base, &alpha)
}

pub fn desparsified_from(
    data: &SemiparametricData,
    base: &Baseline,
    alpha: &AlphaMatrix,
) -> Result<DesparsifiedEstimate> {
    if data.d() != 1 || alpha.d() != 1 {
        return Err(Error::config(
            "the de-sparsified estimate is defined for a single coordinate (d = 1)",
        ));
    }
    let n = data.n() as f64;
    let theta0 = base.theta0(data);
    let gamma0 = base.gamma0(data);
    let xt = alpha.xtilde.column(0);
    let resid = data.full_residual(&theta0, &gamma0);
    let score = dot(xt, &resid) / n;
    let tau_hat_sq = dot(xt, xt) / n + 2.0 * alpha.lambdas[0] * alpha.column_l1(0);
    let tau_tilde_sq = dot(xt, data.x_column(0)) / n;
    if !(tau_hat_sq > 0.0 && tau_tilde_sq > 0.0) {
        return Err(Error::SingularSystem {
            rcond: tau_tilde_sq.min(tau_hat_sq).max(0.0),
        });
    }
    let b1 = theta0[0] + score / tau_hat_sq;
    Ok(DesparsifiedEstimate {
        b1,
        tau_hat_sq,
        tau_tilde_sq,
        theta1_first_iterate: theta0[0] + score / tau_tilde_sq,
        theta0: theta0[0],
        std_error: base.sigma_hat * norm2(xt) / (n * tau_hat_sq),
        sigma_hat: base.sigma_hat,
        lambda: base.lambda,
        node_lambda: alpha.lambdas[0],
    })
}
