//! Worked examples for the estimators and inference APIs, each an
//! independent check returning `Err` with a diagnostic on failure. Run as
//! individual tests by `tests/examples.rs` and in bulk by the acceptance
//! suite.

use classo::estimators::{
    build_alpha, classo_iterate, desparsified_from, fit_baseline, AlphaMode, Baseline,
    ClassoConfig, Penalty,
};
use classo::inference::{component_ci, contrast_ci, holm, p_value_component, test_contrast};
use classo::simulate::{sample_instance, DesignSpec, SimSpec};
use classo::{
    classo_fit, desparsified_estimate, fit_alpha, gamma_update, lambda_schedule, lasso_init,
    theta_update, up_lasso_fit, Matrix, SemiparametricData,
};
use nalgebra::DVector;

use super::{gaussian, gaussian_vec, homotopy_oracle, kkt, to_na, z_oracle};

pub type Check = Result<(), String>;

pub struct Example {
    pub module: &'static str,
    pub name: &'static str,
    pub run: fn() -> Check,
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Toeplitz(0.9) instance from the simulation harness, `X` = column `target`
/// (0-based).
fn toeplitz_instance(
    n: usize,
    p: usize,
    seed: u64,
    rep: usize,
    target: usize,
) -> (SemiparametricData, Vec<f64>) {
    let spec = SimSpec::new(n, DesignSpec::toeplitz(p, 0.9), seed).unwrap();
    let inst = sample_instance(&spec, rep).unwrap();
    (inst.data.reparameterize(&[target]).unwrap(), inst.beta_star)
}

fn split_matrix(u: &Matrix, interest: &[usize]) -> (Matrix, Matrix) {
    let nuis: Vec<usize> = (0..u.ncols()).filter(|c| !interest.contains(c)).collect();
    (u.select_columns(interest), u.select_columns(&nuis))
}

/// ±1 columns of a 2^k Hadamard-type design: exactly orthogonal in sample.
fn walsh(n: usize, cols: usize) -> Matrix {
    let columns: Vec<Vec<f64>> = (0..cols)
        .map(|c| {
            (0..n)
                .map(|i| {
                    if ((i & (c + 1)).count_ones()) % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect()
        })
        .collect();
    Matrix::from_columns(&columns).unwrap()
}

// ---------------------------------------------------------------- estimators

fn lasso_init_zero_response() -> Check {
    let u = gaussian(30, 6, 1);
    let data = SemiparametricData::from_design(vec![0.0; 30], u, vec![0]).map_err(err)?;
    let (t, g) = lasso_init(&data, 0.1).map_err(err)?;
    ensure!(
        t.iter().chain(&g).all(|v| *v == 0.0),
        "nonzero init {t:?} {g:?}"
    );
    Ok(())
}

fn lasso_init_full_shrinkage() -> Check {
    let u = gaussian(40, 8, 2);
    let y = gaussian_vec(40, 2);
    let ua = to_na(&u);
    let lam_max = (ua.transpose() * DVector::from_column_slice(&y) / 40.0).amax();
    let data = SemiparametricData::from_design(y, u, vec![3]).map_err(err)?;
    let (t, g) = lasso_init(&data, lam_max).map_err(err)?;
    ensure!(
        t.iter().chain(&g).all(|v| *v == 0.0),
        "nonzero init at λ_max"
    );
    Ok(())
}

fn lasso_init_matches_oracle() -> Check {
    let (n, p) = (100, 20);
    let u = gaussian(n, p + 1, 3);
    let mut y = gaussian_vec(n, 3);
    for i in 0..n {
        y[i] += 1.5 * u.get(i, 0) - u.get(i, 4) + 0.8 * u.get(i, 9);
    }
    let lambda = 0.12;
    let data = SemiparametricData::from_design(y.clone(), u.clone(), vec![0]).map_err(err)?;
    let (t, g) = lasso_init(&data, lambda).map_err(err)?;
    let exact = homotopy_oracle(&to_na(&u), &DVector::from_vec(y), lambda);
    let ours: Vec<f64> = t.iter().chain(&g).copied().collect();
    let gap = ours
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure!(gap <= 1e-6, "max coefficient gap {gap:e}");
    Ok(())
}

fn theta_update_ols() -> Check {
    let n = 64;
    let u = walsh(n, 4);
    let (x, z) = split_matrix(&u, &[0, 1]);
    let y: Vec<f64> = (0..n)
        .map(|i| 2.0 * x.get(i, 0) - 0.5 * x.get(i, 1) + 0.1 * (i as f64).sin())
        .collect();
    let data = SemiparametricData::new(y.clone(), x.clone(), z.clone()).map_err(err)?;
    let alpha = fit_alpha(&x, &z, &[0.1, 0.1]).map_err(err)?;
    ensure!(
        alpha.alpha.as_slice().iter().all(|v| *v == 0.0),
        "α not zero on orthogonal blocks"
    );
    let theta = theta_update(&data, &alpha, &[0.0, 0.0]).map_err(err)?;
    let xa = to_na(&x);
    let ols = (xa.transpose() * &xa)
        .lu()
        .solve(&(xa.transpose() * DVector::from_vec(y)))
        .unwrap();
    for j in 0..2 {
        ensure!(
            close(theta[j], ols[j], 1e-12),
            "θ_{j} = {} vs OLS {}",
            theta[j],
            ols[j]
        );
    }
    Ok(())
}

fn theta_update_noiseless() -> Check {
    let (n, q) = (80, 12);
    let u = gaussian(n, q, 4);
    let (x, z) = split_matrix(&u, &[2]);
    let theta_star = [1.7];
    let gamma_star: Vec<f64> = (0..q - 1)
        .map(|k| if k % 4 == 0 { 0.5 } else { 0.0 })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            theta_star[0] * x.get(i, 0)
                + (0..q - 1).map(|k| z.get(i, k) * gamma_star[k]).sum::<f64>()
        })
        .collect();
    let data = SemiparametricData::new(y, x.clone(), z.clone()).map_err(err)?;
    let alpha = fit_alpha(&x, &z, &[0.05]).map_err(err)?;
    let theta = theta_update(&data, &alpha, &gamma_star).map_err(err)?;
    ensure!(
        close(theta[0], theta_star[0], 1e-12),
        "θ = {} vs θ* = {}",
        theta[0],
        theta_star[0]
    );
    Ok(())
}

fn theta_update_constraint_residual() -> Check {
    let (n, q) = (200, 30);
    let u = gaussian(n, q, 5);
    let y = gaussian_vec(n, 5);
    let (x, z) = split_matrix(&u, &[2, 6]);
    let data = SemiparametricData::new(y.clone(), x.clone(), z.clone()).map_err(err)?;
    let alpha = fit_alpha(&x, &z, &[0.1, 0.1]).map_err(err)?;
    let gamma: Vec<f64> = gaussian_vec(q - 2, 6).iter().map(|v| 0.3 * v).collect();
    let theta = theta_update(&data, &alpha, &gamma).map_err(err)?;
    let (xa, za) = (to_na(&x), to_na(&z));
    let xt = &xa - &za * to_na(&alpha.alpha);
    let r = DVector::from_vec(y) - &xa * DVector::from_vec(theta) - &za * DVector::from_vec(gamma);
    let res = (xt.transpose() * r / n as f64).amax();
    ensure!(res <= 1e-10, "constraint residual {res:e}");
    Ok(())
}

fn gamma_update_zero_residual() -> Check {
    let (n, q) = (50, 10);
    let u = gaussian(n, q, 7);
    let y: Vec<f64> = (0..n).map(|i| -1.25 * u.get(i, 0)).collect();
    let data = SemiparametricData::from_design(y, u, vec![0]).map_err(err)?;
    let g = gamma_update(&data, &[-1.25], 0.05).map_err(err)?;
    ensure!(g.iter().all(|v| *v == 0.0), "γ = {g:?}");
    Ok(())
}

fn gamma_update_threshold() -> Check {
    let (n, q) = (60, 15);
    let u = gaussian(n, q, 8);
    let y = gaussian_vec(n, 8);
    let data = SemiparametricData::from_design(y.clone(), u.clone(), vec![1]).map_err(err)?;
    let theta = [0.4];
    let (x, z) = split_matrix(&u, &[1]);
    let r = DVector::from_vec(y) - to_na(&x) * DVector::from_column_slice(&theta);
    let thr = (to_na(&z).transpose() * r / n as f64).amax();
    let g = gamma_update(&data, &theta, thr).map_err(err)?;
    ensure!(g.iter().all(|v| *v == 0.0), "γ nonzero at threshold");
    Ok(())
}

fn gamma_update_kkt() -> Check {
    let (data, _) = toeplitz_instance(200, 50, 9, 0, 2);
    let theta = [-1.8];
    let lam = 0.15;
    let g = gamma_update(&data, &theta, lam).map_err(err)?;
    let (x, z) = (to_na(&data.x()), to_na(&data.z()));
    let r = DVector::from_column_slice(data.y()) - x * DVector::from_column_slice(&theta);
    let v = kkt(&z, &r, lam, &g);
    ensure!(v <= 1e-8, "KKT violation {v:e}");
    Ok(())
}

fn schedule_constant() -> Check {
    let (g1, g0) = ([0.3, -2.0, 1.0], [1.0, 0.0, 0.0]);
    for t in 1..6 {
        let l = lambda_schedule(0.25, 0.0, t, &g1, Some(&g0));
        ensure!(l == 0.25, "t={t}: {l}");
    }
    Ok(())
}

fn schedule_first() -> Check {
    let l = lambda_schedule(0.1, 0.5, 1, &[1.5, -0.5], None);
    ensure!(close(l, 0.2, 1e-15), "λ₁ = {l}");
    Ok(())
}

fn schedule_limit() -> Check {
    let g = [0.7, 0.0, -0.2];
    let l = lambda_schedule(0.1, 0.5, 5, &g, Some(&g));
    ensure!(l == 0.1, "λ_t = {l}");
    Ok(())
}

fn classo_noiseless_exact() -> Check {
    let (n, q) = (100, 20);
    let u = gaussian(n, q, 10);
    let theta_star = 2.5;
    let y: Vec<f64> = (0..n).map(|i| theta_star * u.get(i, 0)).collect();
    let lam_max = (to_na(&u).transpose() * DVector::from_column_slice(&y) / n as f64).amax();
    let data = SemiparametricData::from_design(y, u, vec![0]).map_err(err)?;
    let cfg = ClassoConfig {
        penalty: Penalty::Fixed(2.0 * lam_max),
        record_trace: true,
        ..Default::default()
    };
    let fit = classo_fit(&data, &cfg).map_err(err)?;
    ensure!(
        fit.trace.iter().all(|r| r.gamma.iter().all(|v| *v == 0.0)),
        "some γ^t nonzero"
    );
    let t1 = fit.trace[0].theta[0];
    ensure!(close(t1, theta_star, 1e-12), "θ¹ = {t1}");
    ensure!(
        close(fit.theta[0], theta_star, 1e-12),
        "θ̂ = {}",
        fit.theta[0]
    );
    Ok(())
}

fn classo_alpha_zero_is_up_lasso() -> Check {
    let (data, _) = toeplitz_instance(150, 40, 11, 0, 2);
    let base = ClassoConfig {
        record_trace: true,
        ..Default::default()
    };
    let forced = ClassoConfig {
        alpha: AlphaMode::Zero,
        ..base.clone()
    };
    let a = classo_fit(&data, &forced).map_err(err)?;
    let b = up_lasso_fit(&data, &base).map_err(err)?;
    ensure!(a.trace == b.trace, "traces differ");
    ensure!(a.theta == b.theta && a.gamma == b.gamma, "estimates differ");
    Ok(())
}

fn classo_trace_contracts() -> Check {
    let (data, _) = toeplitz_instance(200, 100, 12, 0, 2);
    let cfg = ClassoConfig {
        record_trace: true,
        iterations: 10,
        ..Default::default()
    };
    let fit = classo_fit(&data, &cfg).map_err(err)?;
    let dist: Vec<f64> = fit
        .trace
        .iter()
        .map(|r| {
            r.gamma
                .iter()
                .zip(&fit.gamma)
                .map(|(a, b)| (a - b).abs())
                .sum()
        })
        .collect();
    for w in dist.windows(2) {
        ensure!(
            w[1] < w[0] || w[1] == 0.0,
            "‖γ^t − γ̂‖₁ not decreasing: {dist:?}"
        );
    }
    let scale = data.response_scale();
    ensure!(
        fit.fixed_point.r_a <= 1e-8 * scale && fit.fixed_point.r_b <= cfg.inner_tol,
        "fixed-point residuals r_a = {:e} (limit {:e}), r_b = {:e} after {} iterations, last step {:e}",
        fit.fixed_point.r_a,
        1e-8 * scale,
        fit.fixed_point.r_b,
        fit.iterations,
        fit.last_gamma_step
    );
    Ok(())
}

fn up_lasso_orthogonal_noiseless() -> Check {
    let n = 64;
    let u = walsh(n, 6);
    let (x, z) = split_matrix(&u, &[0]);
    let gamma_star = [1.0, 0.0, -2.0, 0.0, 0.5];
    let y: Vec<f64> = (0..n)
        .map(|i| 3.0 * x.get(i, 0) + (0..5).map(|k| gamma_star[k] * z.get(i, k)).sum::<f64>())
        .collect();
    let data = SemiparametricData::new(y, x, z).map_err(err)?;
    let fit = up_lasso_fit(&data, &ClassoConfig::default()).map_err(err)?;
    ensure!(close(fit.theta[0], 3.0, 1e-12), "θ̂ = {}", fit.theta[0]);
    Ok(())
}

fn up_lasso_zero_response() -> Check {
    let u = gaussian(40, 10, 13);
    let data = SemiparametricData::from_design(vec![0.0; 40], u, vec![0]).map_err(err)?;
    let fit = up_lasso_fit(&data, &ClassoConfig::default()).map_err(err)?;
    ensure!(
        fit.theta == vec![0.0] && fit.gamma.iter().all(|v| *v == 0.0),
        "nonzero fit"
    );
    Ok(())
}

fn up_lasso_worse_than_classo() -> Check {
    let spec = SimSpec::new(500, DesignSpec::toeplitz(100, 0.9), 14).unwrap();
    let reps = 100;
    let mut wins = 0;
    for rep in 0..reps {
        let inst = sample_instance(&spec, rep).map_err(err)?;
        let data = &inst.per_target[0];
        let truth = inst.beta_star[2];
        let cfg = ClassoConfig::default();
        let base = fit_baseline(data, &cfg).map_err(err)?;
        let c = classo_iterate(
            data,
            &cfg,
            &base,
            build_alpha(data, &cfg, base.sigma_hat).map_err(err)?,
        )
        .map_err(err)?;
        let zero = ClassoConfig {
            alpha: AlphaMode::Zero,
            ..cfg
        };
        let u = classo_iterate(
            data,
            &zero,
            &base,
            build_alpha(data, &zero, base.sigma_hat).map_err(err)?,
        )
        .map_err(err)?;
        wins += usize::from((u.theta[0] - truth).abs() > (c.theta[0] - truth).abs());
    }
    ensure!(
        wins * 100 >= 80 * reps,
        "UP Lasso worse in only {wins}/{reps} replicates"
    );
    Ok(())
}

fn ds_zero_correction() -> Check {
    let (n, q) = (80, 10);
    let u = gaussian(n, q, 15);
    let coef: Vec<f64> = (0..q)
        .map(|k| if k < 3 { 1.0 + k as f64 } else { 0.0 })
        .collect();
    let y = u.matvec(&coef);
    let data = SemiparametricData::from_design(y, u, vec![0]).map_err(err)?;
    let cfg = ClassoConfig::default();
    let alpha = build_alpha(&data, &cfg, 1.0).map_err(err)?;
    let base = Baseline {
        sigma_hat: 1.0,
        lambda: 0.1,
        init_coef: coef,
    };
    let ds = desparsified_from(&data, &base, &alpha).map_err(err)?;
    ensure!(ds.b1 == ds.theta0, "b̂₁ = {} vs θ⁰₁ = {}", ds.b1, ds.theta0);
    Ok(())
}

fn ds_alpha_zero_tau() -> Check {
    let (data, _) = toeplitz_instance(100, 30, 16, 0, 0);
    let cfg = ClassoConfig {
        alpha: AlphaMode::Zero,
        ..Default::default()
    };
    let ds = desparsified_estimate(&data, &cfg).map_err(err)?;
    let x = data.x_column(0);
    let expect = x.iter().map(|v| v * v).sum::<f64>() / 100.0;
    ensure!(
        close(ds.tau_hat_sq, expect, 1e-14 * expect),
        "τ̂² = {} vs {}",
        ds.tau_hat_sq,
        expect
    );
    Ok(())
}

fn ds_first_iterate_close() -> Check {
    let spec = SimSpec::new(500, DesignSpec::toeplitz(100, 0.9), 17).unwrap();
    let reps = 100;
    let mut hits = 0;
    let mut ratios = Vec::with_capacity(reps);
    for rep in 0..reps {
        let inst = sample_instance(&spec, rep).map_err(err)?;
        let data = inst.data.reparameterize(&[0]).map_err(err)?;
        let ds = desparsified_estimate(&data, &ClassoConfig::default()).map_err(err)?;
        let gap = (ds.theta1_first_iterate - ds.b1).abs();
        let error = (ds.b1 - inst.beta_star[0]).abs();
        hits += usize::from(gap <= 0.1 * error);
        ratios.push(gap / error);
    }
    ratios.sort_by(f64::total_cmp);
    ensure!(
        hits * 100 >= 90 * reps,
        "|θ¹₁ − b̂₁| ≤ 0.1·|b̂₁ − θ*₁| in {hits}/{reps} replicates (median ratio {:.3})",
        ratios[reps / 2]
    );
    Ok(())
}

// ----------------------------------------------------------------- inference

fn design_with_gram(n: usize, gram_value: f64) -> Matrix {
    // One column with ‖x‖² = gram_value.
    let mut col = vec![0.0; n];
    col[0] = gram_value.sqrt();
    Matrix::from_columns(&[col]).unwrap()
}

fn contrast_ci_reference() -> Check {
    let xt = design_with_gram(20, 100.0);
    let ci = contrast_ci(&[1.0], &[0.0], &xt, 1.0, 0.05).map_err(err)?;
    let want = z_oracle(0.975) * 0.1;
    ensure!(
        close(ci.upper, want, 1e-12) && close(ci.lower, -want, 1e-12),
        "{ci:?} vs ±{want}"
    );
    ensure!(close(ci.upper, 0.19600, 5e-6), "half-width {}", ci.upper);
    Ok(())
}

fn contrast_ci_level_to_one() -> Check {
    let xt = design_with_gram(20, 100.0);
    let mut prev = f64::INFINITY;
    for a in [0.5, 0.9, 0.99, 0.999_999, 1.0 - 1e-12] {
        let w = contrast_ci(&[1.0], &[0.3], &xt, 1.0, a)
            .map_err(err)?
            .width();
        ensure!(w < prev, "width not shrinking at α = {a}");
        prev = w;
    }
    ensure!(prev < 1e-11, "width {prev:e} as α → 1");
    Ok(())
}

fn contrast_ci_sigma_linear() -> Check {
    let xt = gaussian(30, 2, 18);
    let a = contrast_ci(&[1.0, -2.0], &[0.5, 0.1], &xt, 1.0, 0.05).map_err(err)?;
    let b = contrast_ci(&[1.0, -2.0], &[0.5, 0.1], &xt, 2.0, 0.05).map_err(err)?;
    ensure!(
        close(b.width(), 2.0 * a.width(), 1e-14),
        "{} vs 2×{}",
        b.width(),
        a.width()
    );
    Ok(())
}

fn component_ci_reference() -> Check {
    let x = [6.0, 8.0];
    let ci = component_ci(0.0, &x, 1.0, 0.05).map_err(err)?;
    let want = z_oracle(0.975) / 10.0;
    ensure!(
        close(ci.lower, -want, 1e-12) && close(ci.upper, want, 1e-12),
        "{ci:?}"
    );
    ensure!(close(ci.upper, 0.19600, 5e-6), "half-width {}", ci.upper);
    Ok(())
}

fn component_ci_inverse_scaling() -> Check {
    let a = component_ci(1.0, &[3.0, 4.0], 1.3, 0.05).map_err(err)?;
    let b = component_ci(1.0, &[6.0, 8.0], 1.3, 0.05).map_err(err)?;
    ensure!(
        close(b.width(), 0.5 * a.width(), 1e-15),
        "{} vs {}",
        b.width(),
        a.width()
    );
    Ok(())
}

fn component_ci_half_level() -> Check {
    let x = [0.0, 2.0];
    let ci = component_ci(0.0, &x, 1.0, 0.5).map_err(err)?;
    let want = z_oracle(0.75) / 2.0;
    ensure!(close(ci.upper, want, 1e-12), "{} vs {want}", ci.upper);
    ensure!(
        close(2.0 * ci.upper, 0.67449, 5e-6),
        "z_0.25 = {}",
        2.0 * ci.upper
    );
    Ok(())
}

fn p_value_at_zero() -> Check {
    let p = p_value_component(0.0, &[1.0, 2.0], 0.7).map_err(err)?;
    ensure!(p == 1.0, "p = {p}");
    Ok(())
}

fn p_value_at_critical() -> Check {
    let p = p_value_component(1.959_96, &[1.0], 1.0).map_err(err)?;
    let want = 2.0 * (1.0 - super::phi_series(1.959_96));
    ensure!(close(p, want, 1e-12), "p = {p} vs {want}");
    ensure!(close(p, 0.05, 1e-5), "p = {p}");
    Ok(())
}

fn p_value_decreasing() -> Check {
    let x = gaussian_vec(25, 19);
    let mut prev = 2.0;
    for k in 0..60 {
        let p = p_value_component(0.05 * k as f64, &x, 1.1).map_err(err)?;
        ensure!(p < prev, "not strictly decreasing at step {k}");
        prev = p;
    }
    Ok(())
}

fn test_at_estimate() -> Check {
    let xt = gaussian(30, 2, 20);
    let theta = [0.4, -1.1];
    let r = [2.0, 1.0];
    let u = 2.0 * 0.4 - 1.1;
    let t = test_contrast(&r, u, &theta, &xt, 1.0, 0.05).map_err(err)?;
    ensure!(t.statistic == 0.0 && t.p_value == 1.0 && !t.reject, "{t:?}");
    Ok(())
}

fn test_outside_ci_rejects() -> Check {
    let xt = gaussian(30, 2, 21);
    let (theta, r) = ([0.4, -1.1], [1.0, 1.0]);
    let ci = contrast_ci(&r, &theta, &xt, 1.0, 0.05).map_err(err)?;
    for u in [
        ci.upper + 1e-6,
        ci.lower - 1e-6,
        ci.upper - 1e-6,
        ci.center(),
    ] {
        let t = test_contrast(&r, u, &theta, &xt, 1.0, 0.05).map_err(err)?;
        ensure!(t.reject == !ci.contains(u), "duality broken at u = {u}");
    }
    Ok(())
}

fn test_null_calibration() -> Check {
    let spec = SimSpec {
        beta_star: {
            let mut b = vec![0.0; 40];
            b[..4].copy_from_slice(&[1.0, -1.0, 0.8, 0.5]);
            b
        },
        ..SimSpec::new(200, DesignSpec::toeplitz(40, 0.5), 22).unwrap()
    };
    let reps = 1000;
    let mut rejections = 0;
    for rep in 0..reps {
        let inst = sample_instance(&spec, rep).map_err(err)?;
        let data = inst.data.reparameterize(&[10, 20]).map_err(err)?;
        let fit = classo_fit(&data, &ClassoConfig::default()).map_err(err)?;
        let t = test_contrast(
            &[1.0, 1.0],
            0.0,
            &fit.theta,
            &fit.alpha.xtilde,
            fit.sigma_hat,
            0.05,
        )
        .map_err(err)?;
        rejections += usize::from(t.reject);
    }
    let rate = rejections as f64 / reps as f64;
    ensure!((0.03..=0.07).contains(&rate), "type-I error {rate}");
    Ok(())
}

fn holm_all_ones() -> Check {
    let h = holm(&[1.0; 5], 0.05);
    ensure!(
        h.rejected_indices.is_empty() && h.cutoff_index == 1,
        "{h:?}"
    );
    Ok(())
}

fn holm_hand_trace() -> Check {
    let h = holm(&[0.001, 0.02, 0.4], 0.05);
    ensure!(h.cutoff_index == 3, "k = {}", h.cutoff_index);
    ensure!(
        h.rejected_indices == vec![0, 1],
        "rejected {:?}",
        h.rejected_indices
    );
    Ok(())
}

fn holm_all_zero() -> Check {
    let h = holm(&[0.0; 4], 0.05);
    ensure!(
        h.cutoff_index == 5 && h.rejected_indices.len() == 4,
        "{h:?}"
    );
    Ok(())
}

/// `n` random (data, u) pairs; test rejects iff `u` lies outside the CI.
pub fn duality_cases(cases: usize, seed: u64) -> Check {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let d = rng.random_range(1..=3);
        let n = rng.random_range(d + 3..=40);
        let xt = Matrix::from_row_major(
            n,
            d,
            &(0..n * d)
                .map(|_| rng.random_range(-2.0..2.0))
                .collect::<Vec<f64>>(),
        )
        .unwrap();
        let theta: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let r: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sigma = rng.random_range(0.1..3.0);
        let a = rng.random_range(0.001..0.5);
        let Ok(ci) = contrast_ci(&r, &theta, &xt, sigma, a) else {
            continue;
        };
        let spread = ci.width().max(1e-3);
        let u = ci.center() + rng.random_range(-1.5..1.5) * spread;
        let t = test_contrast(&r, u, &theta, &xt, sigma, a).map_err(err)?;
        ensure!(
            t.reject == !ci.contains(u),
            "case {case}: reject = {} with u = {u}, {ci:?}",
            t.reject
        );
        ensure!(
            (t.p_value < a) == t.reject,
            "case {case}: p = {} vs level {a}",
            t.p_value
        );
    }
    Ok(())
}

fn duality_randomized() -> Check {
    duality_cases(1000, 23)
}

pub fn all() -> Vec<Example> {
    macro_rules! ex {
        ($m:literal, $f:ident) => {
            Example {
                module: $m,
                name: stringify!($f),
                run: $f,
            }
        };
    }
    vec![
        ex!("estimators", lasso_init_zero_response),
        ex!("estimators", lasso_init_full_shrinkage),
        ex!("estimators", lasso_init_matches_oracle),
        ex!("estimators", theta_update_ols),
        ex!("estimators", theta_update_noiseless),
        ex!("estimators", theta_update_constraint_residual),
        ex!("estimators", gamma_update_zero_residual),
        ex!("estimators", gamma_update_threshold),
        ex!("estimators", gamma_update_kkt),
        ex!("estimators", schedule_constant),
        ex!("estimators", schedule_first),
        ex!("estimators", schedule_limit),
        ex!("estimators", classo_noiseless_exact),
        ex!("estimators", classo_alpha_zero_is_up_lasso),
        ex!("estimators", classo_trace_contracts),
        ex!("estimators", up_lasso_orthogonal_noiseless),
        ex!("estimators", up_lasso_zero_response),
        ex!("estimators", up_lasso_worse_than_classo),
        ex!("estimators", ds_zero_correction),
        ex!("estimators", ds_alpha_zero_tau),
        ex!("estimators", ds_first_iterate_close),
        ex!("inference", contrast_ci_reference),
        ex!("inference", contrast_ci_level_to_one),
        ex!("inference", contrast_ci_sigma_linear),
        ex!("inference", component_ci_reference),
        ex!("inference", component_ci_inverse_scaling),
        ex!("inference", component_ci_half_level),
        ex!("inference", p_value_at_zero),
        ex!("inference", p_value_at_critical),
        ex!("inference", p_value_decreasing),
        ex!("inference", test_at_estimate),
        ex!("inference", test_outside_ci_rejects),
        ex!("inference", test_null_calibration),
        ex!("inference", holm_all_ones),
        ex!("inference", holm_hand_trace),
        ex!("inference", holm_all_zero),
        ex!("inference", duality_randomized),
    ]
}

pub fn find(name: &str) -> Example {
    all()
        .into_iter()
        .find(|e| e.name == name)
        .unwrap_or_else(|| panic!("no example {name}"))
}
