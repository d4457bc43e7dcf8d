//! Node-wise regression of each column of interest on the nuisance block,
//! giving the direction matrix `α`, the residual matrix `X̃ = X − Zα`, and the
//! asymptotic covariance `Ω̂ = σ̂²[n⁻¹X̃ᵀX̃]⁻¹`.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::SemiparametricData;
use crate::error::{Error, Result};
use crate::lasso::{coordinate_descent, LassoOptions};
use crate::numerics::{axpy, inverse, norm1, norm_inf, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatrix {
    /// p×d, column j regresses `X_j` on `Z`.
    pub alpha: Matrix,
    pub lambdas: Vec<f64>,
    /// n×d, `X − Zα`.
    pub xtilde: Matrix,
    /// `‖n⁻¹Zᵀ(X_j − Zα_j)‖_∞` per column.
    pub kkt_certificates: Vec<f64>,
}

impl AlphaMatrix {
    pub fn d(&self) -> usize {
        self.alpha.ncols()
    }

    pub fn column_l1(&self, j: usize) -> f64 {
        norm1(self.alpha.column(j))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaHat {
    #[serde(serialize_with = "serialize_rows")]
    pub omega: Matrix,
    pub sigma_hat: f64,
}

fn serialize_rows<S: serde::Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i)).collect();
    serde::Serialize::serialize(&rows, s)
}

/// `σ̂·√(2 log p / n)` for every column of interest, with `n` rows and `p`
/// nuisance columns.
pub fn default_lambdas(x: &Matrix, z: &Matrix, sigma_hat: f64) -> Vec<f64> {
    vec![universal_penalty(sigma_hat, x.nrows(), z.ncols()); x.ncols()]
}

pub(crate) fn universal_penalty(sigma_hat: f64, n: usize, p: usize) -> f64 {
    sigma_hat * (2.0 * (p as f64).ln() / n as f64).sqrt()
}

/// Node-wise Lasso of each column of `x` on `z`.
pub fn fit_alpha(x: &Matrix, z: &Matrix, lambdas: &[f64]) -> Result<AlphaMatrix> {
    let data = SemiparametricData::new(vec![0.0; x.nrows()], x.clone(), z.clone())?;
    fit_alpha_for(&data, lambdas, &LassoOptions::default())
}

/// Node-wise regressions for the split held in `data`, reusing its cached
/// gram. Columns are fitted independently (in parallel when d > 1).
pub fn fit_alpha_for(
    data: &SemiparametricData,
    lambdas: &[f64],
    opts: &LassoOptions,
) -> Result<AlphaMatrix> {
    let d = data.d();
    if lambdas.len() != d {
        return Err(Error::DimensionMismatch {
            context: "node-wise penalties",
            expected: d,
            found: lambdas.len(),
        });
    }
    if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::config(format!(
            "node-wise penalty must be finite and >= 0, got {bad}"
        )));
    }

    let fit_column = |j: usize| -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let target = data.interest_columns()[j];
        let view = data.nuisance_view();
        let xj = data.x_column(j);
        let xty = data.gram().map(|g| {
            data.nuisance_columns()
                .iter()
                .map(|&c| g.get(c, target))
                .collect::<Vec<f64>>()
        });
        let sol = coordinate_descent(&view, xj, xty, lambdas[j], None, opts)?
            .require_converged(&format!("node-wise regression for column {j}"))?;
        let resid = view.residual(xj, &sol.coef);
        let cert = norm_inf(&view.tr_mul_scaled(&resid));
        if cert > lambdas[j] + opts.tol {
            return Err(Error::NonConverged {
                context: format!("node-wise certificate for column {j}"),
                iterations: sol.sweeps,
                residual: cert - lambdas[j],
            });
        }
        Ok((sol.coef, resid, cert))
    };

    let fits: Vec<Result<(Vec<f64>, Vec<f64>, f64)>> = if d > 1 {
        (0..d).into_par_iter().map(fit_column).collect()
    } else {
        (0..d).map(fit_column).collect()
    };

    let p = data.p();
    let n = data.n();
    let mut alpha = Matrix::zeros(p, d);
    let mut xtilde = Matrix::zeros(n, d);
    let mut certs = Vec::with_capacity(d);
    for (j, fit) in fits.into_iter().enumerate() {
        let (coef, resid, cert) = fit?;
        alpha.column_mut(j).copy_from_slice(&coef);
        xtilde.column_mut(j).copy_from_slice(&resid);
        certs.push(cert);
    }
    Ok(AlphaMatrix {
        alpha,
        lambdas: lambdas.to_vec(),
        xtilde,
        kkt_certificates: certs,
    })
}

/// `α ≡ 0`: `X̃ = X`. The certificates then record `‖n⁻¹ZᵀX_j‖_∞`.
pub fn zero_alpha(data: &SemiparametricData) -> AlphaMatrix {
    let d = data.d();
    let x = data.x();
    let view = data.nuisance_view();
    let certs = (0..d)
        .map(|j| norm_inf(&view.tr_mul_scaled(x.column(j))))
        .collect();
    AlphaMatrix {
        alpha: Matrix::zeros(data.p(), d),
        lambdas: vec![0.0; d],
        xtilde: x,
        kkt_certificates: certs,
    }
}

/// Recompute `X − Zα` from scratch.
pub fn residual_matrix(x: &Matrix, z: &Matrix, alpha: &Matrix) -> Matrix {
    let mut out = x.clone();
    for j in 0..x.ncols() {
        let col = out.column_mut(j);
        for (k, &a) in alpha.column(j).iter().enumerate() {
            if a != 0.0 {
                axpy(-a, z.column(k), col);
            }
        }
    }
    out
}

/// `σ̂²·[n⁻¹X̃ᵀX̃]⁻¹`
pub fn omega_hat(xtilde: &Matrix, sigma_hat: f64) -> Result<OmegaHat> {
    if !(sigma_hat.is_finite() && sigma_hat > 0.0) {
        return Err(Error::config(format!(
            "sigma_hat must be positive, got {sigma_hat}"
        )));
    }
    let n = xtilde.nrows() as f64;
    let info = xtilde.gram().scaled(1.0 / n);
    let inv = inverse(&info)?;
    let d = inv.ncols();
    let mut omega = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let v = 0.5 * (inv.get(i, j) + inv.get(j, i)) * sigma_hat * sigma_hat;
            omega.set(i, j, v);
        }
    }
    crate::numerics::cholesky(&omega).map_err(|_| Error::SingularSystem { rcond: 0.0 })?;
    Ok(OmegaHat { omega, sigma_hat })
}
