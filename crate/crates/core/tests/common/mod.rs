//! Independent oracles and instance builders shared by the integration tests.
//! Dense linear algebra here goes through nalgebra, never through the crate.

#![allow(dead_code)]

pub mod examples;

use classo::simulate::{stream_rng, Stream};
use classo::Matrix;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m.get(i, j))
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect();
    Matrix::from_rows(&rows).unwrap()
}

/// i.i.d. standard normal matrix from a seeded stream.
pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = stream_rng(seed, 0, Stream::Design);
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    Matrix::from_row_major(rows, cols, &data).unwrap()
}

pub fn gaussian_vec(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0, Stream::Noise);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// `(2n)⁻¹‖y − Xβ‖² + λ‖β‖₁`, evaluated with nalgebra.
pub fn objective(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, beta: &DVector<f64>) -> f64 {
    let n = x.nrows() as f64;
    let r = y - x * beta;
    r.norm_squared() / (2.0 * n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Largest subgradient violation of the Lasso optimality conditions.
pub fn kkt(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, beta: &[f64]) -> f64 {
    let n = x.nrows() as f64;
    let b = DVector::from_column_slice(beta);
    let g = x.transpose() * (y - x * &b) / n;
    g.iter()
        .zip(beta)
        .map(|(&gj, &bj)| {
            if bj != 0.0 {
                (gj - lambda * bj.signum()).abs()
            } else {
                (gj.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Exact Lasso minimiser by enumerating every sign pattern in {−1, 0, +1}^m
/// and solving the stationarity system of each; returns (coef, objective).
pub fn sign_pattern_oracle(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> (Vec<f64>, f64) {
    let (n, m) = (x.nrows() as f64, x.ncols());
    let mut best = (vec![0.0; m], objective(x, y, lambda, &DVector::zeros(m)));
    let total = 3usize.pow(m as u32);
    for code in 1..total {
        let mut signs = vec![0.0; m];
        let mut c = code;
        for s in signs.iter_mut() {
            *s = [0.0, 1.0, -1.0][c % 3];
            c /= 3;
        }
        let active: Vec<usize> = (0..m).filter(|&j| signs[j] != 0.0).collect();
        let xa = x.select_columns(&active);
        let g = xa.transpose() * &xa / n;
        let rhs = DVector::from_iterator(
            active.len(),
            active
                .iter()
                .enumerate()
                .map(|(k, &j)| (xa.column(k).dot(y)) / n - lambda * signs[j]),
        );
        let Some(sol) = g.lu().solve(&rhs) else {
            continue;
        };
        if active
            .iter()
            .enumerate()
            .any(|(k, &j)| sol[k] * signs[j] <= 0.0)
        {
            continue;
        }
        let mut beta = DVector::zeros(m);
        for (k, &j) in active.iter().enumerate() {
            beta[j] = sol[k];
        }
        let obj = objective(x, y, lambda, &beta);
        if obj < best.1 {
            best = (beta.iter().copied().collect(), obj);
        }
    }
    best
}

/// Exact Lasso solution at `lambda` by following the homotopy path from
/// `λ_max` down, one kink at a time. Requires the active gram blocks to be
/// invertible along the path (true for generic designs with m ≤ n).
pub fn homotopy_oracle(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Vec<f64> {
    let (n, m) = (x.nrows() as f64, x.ncols());
    let gram = x.transpose() * x / n;
    let xty = x.transpose() * y / n;
    let mut beta = DVector::<f64>::zeros(m);
    let mut active: Vec<usize> = Vec::new();
    let mut lam = xty.amax();
    if lambda >= lam {
        return vec![0.0; m];
    }
    let first = (0..m)
        .max_by(|&a, &b| xty[a].abs().total_cmp(&xty[b].abs()))
        .unwrap();
    active.push(first);
    for _ in 0..10 * m + 10 {
        let c = &xty - &gram * &beta;
        let signs = DVector::from_iterator(active.len(), active.iter().map(|&j| c[j].signum()));
        let ga = DMatrix::from_fn(active.len(), active.len(), |a, b| {
            gram[(active[a], active[b])]
        });
        let d = ga.lu().solve(&signs).expect("active gram block invertible");
        let mut dir = DVector::<f64>::zeros(m);
        for (k, &j) in active.iter().enumerate() {
            dir[j] = d[k];
        }
        let a = &gram * &dir;
        // Largest step h = λ_cur − λ_next before the next kink.
        let mut step = lam - lambda;
        let mut event: Option<(usize, bool)> = None;
        for j in 0..m {
            if active.contains(&j) {
                if dir[j] != 0.0 {
                    let h = -beta[j] / dir[j];
                    if h > 1e-14 && h < step {
                        step = h;
                        event = Some((j, false));
                    }
                }
            } else {
                for h in [(c[j] - lam) / (a[j] - 1.0), (c[j] + lam) / (a[j] + 1.0)] {
                    if h.is_finite() && h > 1e-14 && h < step {
                        step = h;
                        event = Some((j, true));
                    }
                }
            }
        }
        beta += &dir * step;
        lam -= step;
        match event {
            None => break,
            Some((j, true)) => active.push(j),
            Some((j, false)) => {
                beta[j] = 0.0;
                active.retain(|&k| k != j);
            }
        }
    }
    beta.iter().copied().collect()
}

/// Scaled-Lasso profile objective `‖Y − Uβ(σ)‖²/(2nσ) + σ/2 + λ̃‖β(σ)‖₁`,
/// with β(σ) the Lasso at `σ·λ̃` computed by the homotopy oracle.
pub fn scaled_profile(x: &DMatrix<f64>, y: &DVector<f64>, universal: f64, sigma: f64) -> f64 {
    let n = x.nrows() as f64;
    let beta = DVector::from_vec(homotopy_oracle(x, y, sigma * universal));
    let r = y - x * &beta;
    r.norm_squared() / (2.0 * n * sigma)
        + sigma / 2.0
        + universal * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Standard normal quantile by bisection on [`phi_series`]; meant for
/// |z| ≤ 3.
pub fn z_oracle(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi_series(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `Φ(x)` from the Taylor series of the error function. Cancellation grows
/// with |x|; about 1e-14 absolute for |x| ≤ 3.
pub fn phi_series(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    if z.abs() > 5.0 {
        return if z > 0.0 { 1.0 } else { 0.0 };
    }
    // erf(z) = 2/√π Σ (−1)^k z^{2k+1} / (k! (2k+1)), summed with a running term.
    let mut term = z;
    let mut sum = z;
    for k in 1..400 {
        term *= -z * z / k as f64;
        let add = term / (2 * k + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (1.0 + 2.0 / std::f64::consts::PI.sqrt() * sum)
}

/// Random small Lasso instances (n ≤ 15, m ≤ 6) checked against
/// [`sign_pattern_oracle`]: coefficients within 1e-6, objective within 1e-10.
pub fn solver_oracle_cases(cases: usize, seed: u64) -> Result<(), String> {
    use classo::{solve_lasso, LassoOptions, LassoProblem};
    let mut rng = stream_rng(seed, 0, Stream::Design);
    let opts = LassoOptions::with_tol(1e-12);
    for case in 0..cases {
        let n = rng.random_range(4..=15);
        let m = rng.random_range(1..=6);
        let x = gaussian(n, m, seed.wrapping_mul(1000) + case as u64);
        let y = gaussian_vec(n, seed.wrapping_mul(1000) + case as u64);
        let (xa, ya) = (to_na(&x), DVector::from_column_slice(&y));
        let lam_max = (xa.transpose() * &ya / n as f64).amax();
        let lambda = lam_max * rng.random_range(0.02..1.1);
        let sol =
            solve_lasso(&LassoProblem::new(&x, &y, lambda), &opts).map_err(|e| e.to_string())?;
        let (exact, obj) = sign_pattern_oracle(&xa, &ya, lambda);
        let gap = sol
            .coef
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let ours = objective(&xa, &ya, lambda, &DVector::from_column_slice(&sol.coef));
        if gap > 1e-6 || (ours - obj).abs() > 1e-10 {
            return Err(format!(
                "case {case} (n={n}, m={m}, λ={lambda:.4}): coef gap {gap:e}, objective gap {:e}",
                (ours - obj).abs()
            ));
        }
    }
    Ok(())
}
