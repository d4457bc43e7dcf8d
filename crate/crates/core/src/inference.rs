//! Normal-theory intervals, p-values, contrast tests, Bonferroni–Holm, and
//! per-coordinate inference for each estimator.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::SemiparametricData;
use crate::error::{Error, Result};
use crate::estimators::{
    build_alpha, classo_iterate, desparsified_from, AlphaMode, Baseline, ClassoConfig, FitStatus,
    FixedPointResiduals,
};
use crate::normal;
use crate::numerics::{dot, norm2, solve, Matrix};

/// Below this, `‖x̃_j‖` is treated as zero.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// A two-sided interval. `level` is the significance level α, so the
/// nominal coverage is `1 − level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl Interval {
    fn symmetric(center: f64, half_width: f64, level: f64) -> Self {
        Interval {
            lower: center - half_width,
            upper: center + half_width,
            level,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    /// `(rᵀθ̂ − u) / se`
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HolmOutcome {
    /// Original indices of the rejected hypotheses, smallest p-value first.
    pub rejected_indices: Vec<usize>,
    /// 1-based position `k` of the first sorted p-value above its threshold,
    /// or `m + 1` when none is.
    pub cutoff_index: usize,
}

fn check_level(level_alpha: f64) -> Result<()> {
    if level_alpha > 0.0 && level_alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!(
            "significance level must lie in (0, 1), got {level_alpha}"
        )))
    }
}

fn check_sigma(sigma_hat: f64) -> Result<()> {
    if sigma_hat.is_finite() && sigma_hat > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!(
            "sigma_hat must be finite and > 0, got {sigma_hat}"
        )))
    }
}

/// `σ̂·√(rᵀ(X̃ᵀX̃)⁻¹r)`
pub fn contrast_std_error(r: &[f64], xtilde: &Matrix, sigma_hat: f64) -> Result<f64> {
    check_sigma(sigma_hat)?;
    if r.len() != xtilde.ncols() {
        return Err(Error::DimensionMismatch {
            context: "contrast vector",
            expected: xtilde.ncols(),
            found: r.len(),
        });
    }
    let g = xtilde.gram();
    let sol = solve(&g, &Matrix::column_vector(r))?;
    let quad = dot(r, sol.column(0));
    if !(quad.is_finite() && quad > 0.0) {
        return Err(Error::SingularSystem { rcond: 0.0 });
    }
    Ok(sigma_hat * quad.sqrt())
}

/// `rᵀθ̂ ± z_{1−α/2}·σ̂·√(rᵀ(X̃ᵀX̃)⁻¹r)`
pub fn contrast_ci(
    r: &[f64],
    theta_hat: &[f64],
    xtilde: &Matrix,
    sigma_hat: f64,
    level_alpha: f64,
) -> Result<Interval> {
    check_level(level_alpha)?;
    check_theta(r, theta_hat)?;
    let se = contrast_std_error(r, xtilde, sigma_hat)?;
    Ok(Interval::symmetric(
        dot(r, theta_hat),
        normal::two_sided_critical(level_alpha) * se,
        level_alpha,
    ))
}

fn check_theta(r: &[f64], theta_hat: &[f64]) -> Result<()> {
    if r.len() == theta_hat.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context: "theta_hat",
            expected: r.len(),
            found: theta_hat.len(),
        })
    }
}

fn residual_norm(xtilde_j: &[f64]) -> Result<f64> {
    let norm = norm2(xtilde_j);
    if norm <= DEGENERATE_NORM {
        Err(Error::DegenerateResidual { norm })
    } else {
        Ok(norm)
    }
}

/// `β̂_j ± z_{1−α/2}·σ̂/‖x̃_j‖`
pub fn component_ci(
    beta_hat_j: f64,
    xtilde_j: &[f64],
    sigma_hat: f64,
    level_alpha: f64,
) -> Result<Interval> {
    check_level(level_alpha)?;
    check_sigma(sigma_hat)?;
    let se = sigma_hat / residual_norm(xtilde_j)?;
    Ok(normal_interval(beta_hat_j, se, level_alpha))
}

/// `center ± z_{1−α/2}·se`
pub fn normal_interval(center: f64, se: f64, level_alpha: f64) -> Interval {
    Interval::symmetric(
        center,
        normal::two_sided_critical(level_alpha) * se,
        level_alpha,
    )
}

/// Two-sided p-value `2(1 − Φ(|β̂_j|·‖x̃_j‖/σ̂))` for `H₀: β_j = 0`.
pub fn p_value_component(beta_hat_j: f64, xtilde_j: &[f64], sigma_hat: f64) -> Result<f64> {
    check_sigma(sigma_hat)?;
    let norm = residual_norm(xtilde_j)?;
    Ok(two_sided_p(beta_hat_j * norm / sigma_hat))
}

/// `2(1 − Φ(|z|))`
pub fn two_sided_p(z: f64) -> f64 {
    (2.0 * normal::sf(z.abs())).min(1.0)
}

/// Test `H₀: rᵀθ = u`. Rejects exactly when `u` lies outside
/// [`contrast_ci`] at the same level.
pub fn test_contrast(
    r: &[f64],
    u: f64,
    theta_hat: &[f64],
    xtilde: &Matrix,
    sigma_hat: f64,
    level_alpha: f64,
) -> Result<TestResult> {
    check_level(level_alpha)?;
    check_theta(r, theta_hat)?;
    let se = contrast_std_error(r, xtilde, sigma_hat)?;
    let diff = dot(r, theta_hat) - u;
    let statistic = diff / se;
    let half_width = normal::two_sided_critical(level_alpha) * se;
    Ok(TestResult {
        statistic,
        p_value: two_sided_p(statistic),
        reject: diff.abs() > half_width,
        level: level_alpha,
    })
}

/// Bonferroni–Holm step-down procedure at family-wise level `level_alpha`.
///
/// NaN p-values are ordered last and never rejected.
pub fn holm(p_values: &[f64], level_alpha: f64) -> HolmOutcome {
    let m = p_values.len();
    let key = |i: usize| {
        let p = p_values[i];
        if p.is_nan() {
            f64::INFINITY
        } else {
            p
        }
    };
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
    let k = order
        .iter()
        .enumerate()
        .find(|&(pos, &i)| key(i) > level_alpha / (m - pos) as f64)
        .map_or(m + 1, |(pos, _)| pos + 1);
    HolmOutcome {
        rejected_indices: order[..k - 1].to_vec(),
        cutoff_index: k,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Classo,
    UpLasso,
    DsLasso,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Classo, Method::UpLasso, Method::DsLasso];

    pub fn name(self) -> &'static str {
        match self {
            Method::Classo => "classo",
            Method::UpLasso => "up_lasso",
            Method::DsLasso => "ds_lasso",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Classo => "CLasso",
            Method::UpLasso => "UP Lasso",
            Method::DsLasso => "DS Lasso",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "classo" => Ok(Method::Classo),
            "up_lasso" | "uplasso" | "up" => Ok(Method::UpLasso),
            "ds_lasso" | "dslasso" | "ds" => Ok(Method::DsLasso),
            other => Err(Error::config(format!(
                "unknown method {other:?}; expected classo, up_lasso or ds_lasso"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Estimate, interval and p-value for one column of the design under one
/// method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetInference {
    pub method: Method,
    /// 0-based column of the full design.
    pub column: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub ci: Interval,
    pub p_value: f64,
    pub sigma_hat: f64,
    pub lambda: f64,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<FixedPointResiduals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<FitStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_lambda: Option<f64>,
}

/// Inference for column `column` of `data`'s design with `method`, using a
/// baseline shared across columns (see [`crate::estimators::fit_baseline`]).
pub fn target_inference(
    data: &SemiparametricData,
    column: usize,
    method: Method,
    cfg: &ClassoConfig,
    base: &Baseline,
    level_alpha: f64,
) -> Result<TargetInference> {
    check_level(level_alpha)?;
    let split = data.reparameterize(&[column])?;
    let cfg = match method {
        Method::UpLasso => ClassoConfig {
            alpha: AlphaMode::Zero,
            ..cfg.clone()
        },
        _ => cfg.clone(),
    };
    let alpha = build_alpha(&split, &cfg, base.sigma_hat)?;
    match method {
        Method::Classo | Method::UpLasso => {
            let fit = classo_iterate(&split, &cfg, base, alpha)?;
            let xt = fit.xtilde_column(0);
            let estimate = fit.theta[0];
            let se = base.sigma_hat / residual_norm(xt)?;
            Ok(TargetInference {
                method,
                column,
                estimate,
                std_error: se,
                ci: normal_interval(estimate, se, level_alpha),
                p_value: two_sided_p(estimate / se),
                sigma_hat: base.sigma_hat,
                lambda: base.lambda,
                iterations: fit.iterations,
                fixed_point: Some(fit.fixed_point),
                status: Some(fit.status),
                last_lambda: Some(fit.last_lambda),
            })
        }
        Method::DsLasso => {
            let ds = desparsified_from(&split, base, &alpha)?;
            if ds.std_error <= 0.0 {
                return Err(Error::DegenerateResidual { norm: 0.0 });
            }
            Ok(TargetInference {
                method,
                column,
                estimate: ds.b1,
                std_error: ds.std_error,
                ci: normal_interval(ds.b1, ds.std_error, level_alpha),
                p_value: two_sided_p(ds.b1 / ds.std_error),
                sigma_hat: base.sigma_hat,
                lambda: base.lambda,
                iterations: 0,
                fixed_point: None,
                status: None,
                last_lambda: None,
            })
        }
    }
}

/// [`target_inference`] for each of `columns`, in parallel, results in the
/// order of `columns`.
pub fn columns_inference(
    data: &SemiparametricData,
    columns: &[usize],
    method: Method,
    cfg: &ClassoConfig,
    base: &Baseline,
    level_alpha: f64,
) -> Vec<Result<TargetInference>> {
    columns
        .par_iter()
        .map(|&c| target_inference(data, c, method, cfg, base, level_alpha))
        .collect()
}
