//! Cyclic coordinate descent for `(2n)⁻¹‖y − Xβ‖² + λ‖β‖₁`, its KKT
//! certificate, and the scaled Lasso for joint noise-level estimation.
//!
//! When the problem has no more columns than rows the solver works on the
//! cached gram matrix `n⁻¹XᵀX` and keeps the gradient `n⁻¹Xᵀ(y − Xβ)` up to
//! date; otherwise it keeps the residual `y − Xβ`. Both backends follow the
//! same sweep schedule: a full cyclic pass, then passes over the active set
//! until it settles, then an exact KKT check.

use std::borrow::Cow;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, norm1, norm2, Matrix};

/// `sign(z)·max(|z| − lam, 0)`; exactly zero when `|z| == lam`.
#[inline]
pub fn soft_threshold(z: f64, lam: f64) -> f64 {
    if z > lam {
        z - lam
    } else if z < -lam {
        z + lam
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoOptions {
    /// Stop once the KKT violation is at or below this value.
    pub tol: f64,
    /// Cap on full passes over every coordinate. Between full passes the
    /// solver iterates over the current support only, at most `max_sweeps`
    /// times per round.
    pub max_sweeps: usize,
    /// Cyclic visiting order; a permutation of the column indices.
    pub sweep_order: Option<Vec<usize>>,
    /// Keep the objective value after every pass in
    /// [`LassoSolution::objective_trace`].
    pub record_objective: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            tol: 1e-8,
            max_sweeps: 10_000,
            sweep_order: None,
            record_objective: false,
        }
    }
}

impl LassoOptions {
    pub fn with_tol(tol: f64) -> Self {
        LassoOptions {
            tol,
            ..Default::default()
        }
    }
}

/// A Lasso instance: `design` is n×m, `response` has length n.
#[derive(Debug, Clone, Copy)]
pub struct LassoProblem<'a> {
    pub design: &'a Matrix,
    pub response: &'a [f64],
    pub lambda: f64,
    pub warm_start: Option<&'a [f64]>,
}

impl<'a> LassoProblem<'a> {
    pub fn new(design: &'a Matrix, response: &'a [f64], lambda: f64) -> Self {
        LassoProblem {
            design,
            response,
            lambda,
            warm_start: None,
        }
    }

    pub fn warm_start(mut self, coef: &'a [f64]) -> Self {
        self.warm_start = Some(coef);
        self
    }

    fn validate(&self) -> Result<()> {
        validate_inputs(
            self.design.nrows(),
            self.design.ncols(),
            self.response,
            self.lambda,
            self.warm_start,
        )
    }
}

fn validate_inputs(n: usize, m: usize, y: &[f64], lambda: f64, warm: Option<&[f64]>) -> Result<()> {
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "lasso response length",
            expected: n,
            found: y.len(),
        });
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::config(format!(
            "lasso penalty must be finite and >= 0, got {lambda}"
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::config("lasso response contains non-finite values"));
    }
    if let Some(w) = warm {
        if w.len() != m {
            return Err(Error::DimensionMismatch {
                context: "lasso warm start length",
                expected: m,
                found: w.len(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoSolution {
    pub coef: Vec<f64>,
    /// `(2n)⁻¹‖y − Xβ‖² + λ‖β‖₁` evaluated at `coef`.
    pub objective: f64,
    /// See [`kkt_residual`].
    pub kkt_violation: f64,
    /// Full passes over every coordinate.
    pub sweeps: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
}

impl LassoSolution {
    /// Turn an unconverged solution into [`Error::NonConverged`].
    pub fn require_converged(self, context: &str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConverged {
                context: context.to_string(),
                iterations: self.sweeps,
                residual: self.kkt_violation,
            })
        }
    }
}

/// Solve a Lasso problem; an unconverged run is reported as
/// [`Error::NonConverged`] carrying the final KKT violation.
pub fn solve_lasso(problem: &LassoProblem<'_>, opts: &LassoOptions) -> Result<LassoSolution> {
    solve_lasso_unchecked(problem, opts)?.require_converged("lasso coordinate descent")
}

/// Like [`solve_lasso`] but returns the last iterate even when the sweep
/// budget ran out (`converged == false`).
pub fn solve_lasso_unchecked(
    problem: &LassoProblem<'_>,
    opts: &LassoOptions,
) -> Result<LassoSolution> {
    problem.validate()?;
    let cols: Vec<usize> = (0..problem.design.ncols()).collect();
    let view = DesignView::new(problem.design, &cols);
    coordinate_descent(
        &view,
        problem.response,
        None,
        problem.lambda,
        problem.warm_start,
        opts,
    )
}

/// Largest violation of the Lasso stationarity conditions at `coef`:
/// `|g_j − λ·sign(β_j)|` on the support and `max(|g_j| − λ, 0)` off it,
/// with `g = n⁻¹Xᵀ(y − Xβ)`.
pub fn kkt_residual(problem: &LassoProblem<'_>, coef: &[f64]) -> f64 {
    let x = problem.design;
    assert_eq!(coef.len(), x.ncols(), "kkt_residual: coefficient length");
    let n = x.nrows() as f64;
    let mut r = problem.response.to_vec();
    for (j, &b) in coef.iter().enumerate() {
        if b != 0.0 {
            axpy(-b, x.column(j), &mut r);
        }
    }
    (0..x.ncols())
        .map(|j| kkt_term(dot(x.column(j), &r) / n, coef[j], problem.lambda))
        .fold(0.0, f64::max)
}

/// `(2n)⁻¹‖y − Xβ‖² + λ‖β‖₁`
pub fn lasso_objective(problem: &LassoProblem<'_>, coef: &[f64]) -> f64 {
    let x = problem.design;
    let mut r = problem.response.to_vec();
    for (j, &b) in coef.iter().enumerate() {
        if b != 0.0 {
            axpy(-b, x.column(j), &mut r);
        }
    }
    dot(&r, &r) / (2.0 * x.nrows() as f64) + problem.lambda * norm1(coef)
}

#[inline]
fn kkt_term(g: f64, b: f64, lambda: f64) -> f64 {
    if b > 0.0 {
        (g - lambda).abs()
    } else if b < 0.0 {
        (g + lambda).abs()
    } else {
        (g.abs() - lambda).max(0.0)
    }
}

/// A subset of design columns, optionally backed by a precomputed
/// `n⁻¹XᵀX` over all columns of `x`.
#[derive(Debug, Clone)]
pub(crate) struct DesignView<'a> {
    pub x: &'a Matrix,
    pub cols: Cow<'a, [usize]>,
    pub gram: Option<&'a Matrix>,
}

impl<'a> DesignView<'a> {
    pub fn new(x: &'a Matrix, cols: &'a [usize]) -> Self {
        DesignView {
            x,
            cols: Cow::Borrowed(cols),
            gram: None,
        }
    }

    pub fn with_gram(mut self, gram: Option<&'a Matrix>) -> Self {
        self.gram = gram;
        self
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        self.x.column(self.cols[k])
    }

    /// `n⁻¹ X_viewᵀ v`
    pub fn tr_mul_scaled(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n() as f64;
        self.cols
            .iter()
            .map(|&c| dot(self.x.column(c), v) / n)
            .collect()
    }

    /// `y − X_view β`
    pub fn residual(&self, y: &[f64], beta: &[f64]) -> Vec<f64> {
        let mut r = y.to_vec();
        for (k, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                axpy(-b, self.column(k), &mut r);
            }
        }
        r
    }

    fn uses_gram(&self) -> bool {
        self.m() <= self.n()
    }
}

enum GramSource<'a> {
    Shared(&'a Matrix),
    Local(Matrix),
}

enum Backend<'a> {
    Gram {
        gram: GramSource<'a>,
        /// `n⁻¹X_viewᵀy`
        xty: Vec<f64>,
        /// current `n⁻¹X_viewᵀ(y − Xβ)`
        grad: Vec<f64>,
    },
    Residual {
        resid: Vec<f64>,
    },
}

struct Engine<'v, 'a> {
    view: &'v DesignView<'a>,
    y: &'v [f64],
    yty: f64,
    lambda: f64,
    diag: Vec<f64>,
    beta: Vec<f64>,
    backend: Backend<'v>,
}

impl<'v, 'a> Engine<'v, 'a> {
    fn new(
        view: &'v DesignView<'a>,
        y: &'v [f64],
        xty: Option<Vec<f64>>,
        lambda: f64,
        warm: Option<&[f64]>,
    ) -> Self {
        let n = view.n() as f64;
        let m = view.m();
        let beta = warm.map_or_else(|| vec![0.0; m], <[f64]>::to_vec);
        let (diag, backend) = if view.uses_gram() {
            let gram = match view.gram {
                Some(g) => GramSource::Shared(g),
                None => {
                    let sub = view.x.select_columns(&view.cols);
                    let mut g = sub.gram();
                    for j in 0..m {
                        g.column_mut(j).iter_mut().for_each(|v| *v /= n);
                    }
                    GramSource::Local(g)
                }
            };
            let diag = (0..m)
                .map(|k| match &gram {
                    GramSource::Shared(g) => g.get(view.cols[k], view.cols[k]),
                    GramSource::Local(g) => g.get(k, k),
                })
                .collect();
            let xty = xty.unwrap_or_else(|| view.tr_mul_scaled(y));
            let grad = xty.clone();
            (diag, Backend::Gram { gram, xty, grad })
        } else {
            let diag = (0..m)
                .map(|k| dot(view.column(k), view.column(k)) / n)
                .collect();
            (diag, Backend::Residual { resid: y.to_vec() })
        };
        Engine {
            view,
            y,
            yty: dot(y, y) / n,
            lambda,
            diag,
            beta,
            backend,
        }
    }

    /// Recompute the gradient or residual from `beta` to drop accumulated
    /// rounding drift. Columns are accumulated in sweep order so that a
    /// permuted problem with the matching order rounds identically.
    fn refresh(&mut self, order: &[usize]) {
        let view = self.view;
        match &mut self.backend {
            Backend::Gram { gram, xty, grad } => {
                grad.copy_from_slice(xty);
                for &k in order {
                    let b = self.beta[k];
                    if b != 0.0 {
                        gram_axpy(gram, view, k, -b, grad);
                    }
                }
            }
            Backend::Residual { resid } => {
                resid.copy_from_slice(self.y);
                for &k in order {
                    let b = self.beta[k];
                    if b != 0.0 {
                        axpy(-b, view.column(k), resid);
                    }
                }
            }
        }
    }

    #[inline]
    fn gradient(&self, k: usize) -> f64 {
        match &self.backend {
            Backend::Gram { grad, .. } => grad[k],
            Backend::Residual { resid } => dot(self.view.column(k), resid) / self.view.n() as f64,
        }
    }

    /// Exact coordinate minimisation of coordinate `k`; returns `|Δβ_k|·d_k`.
    #[inline]
    fn update(&mut self, k: usize) -> f64 {
        let d = self.diag[k];
        if d <= 0.0 {
            return 0.0;
        }
        let old = self.beta[k];
        let g = self.gradient(k);
        let new = soft_threshold(g + d * old, self.lambda) / d;
        let delta = new - old;
        if delta != 0.0 {
            self.beta[k] = new;
            let view = self.view;
            match &mut self.backend {
                Backend::Gram { gram, grad, .. } => gram_axpy(gram, view, k, -delta, grad),
                Backend::Residual { resid } => axpy(-delta, view.column(k), resid),
            }
        }
        delta.abs() * d
    }

    fn kkt(&self) -> f64 {
        (0..self.beta.len())
            .map(|k| kkt_term(self.gradient(k), self.beta[k], self.lambda))
            .fold(0.0, f64::max)
    }

    /// Objective from the maintained state, O(m) or O(n).
    fn objective(&self) -> f64 {
        let pen = self.lambda * norm1(&self.beta);
        match &self.backend {
            // ‖y − Xβ‖²/n = yᵀy/n − βᵀ(c + g) with c = n⁻¹Xᵀy, g = c − Gβ.
            Backend::Gram { xty, grad, .. } => {
                let s: f64 = self
                    .beta
                    .iter()
                    .zip(xty.iter().zip(grad))
                    .map(|(b, (c, g))| b * (c + g))
                    .sum();
                0.5 * (self.yty - s) + pen
            }
            Backend::Residual { resid } => dot(resid, resid) / (2.0 * self.view.n() as f64) + pen,
        }
    }
}

#[inline]
fn gram_axpy(gram: &GramSource<'_>, view: &DesignView<'_>, k: usize, a: f64, out: &mut [f64]) {
    match gram {
        GramSource::Shared(g) => {
            let col = g.column(view.cols[k]);
            for (o, &c) in out.iter_mut().zip(view.cols.iter()) {
                *o += a * col[c];
            }
        }
        GramSource::Local(g) => axpy(a, g.column(k), out),
    }
}

/// Core solver over a column view. Never returns `NonConverged`; check
/// [`LassoSolution::converged`].
pub(crate) fn coordinate_descent(
    view: &DesignView<'_>,
    y: &[f64],
    xty: Option<Vec<f64>>,
    lambda: f64,
    warm: Option<&[f64]>,
    opts: &LassoOptions,
) -> Result<LassoSolution> {
    validate_inputs(view.n(), view.m(), y, lambda, warm)?;
    if !(opts.tol > 0.0) || opts.max_sweeps == 0 {
        return Err(Error::config("lasso tol must be > 0 and max_sweeps >= 1"));
    }
    let m = view.m();
    let order: Vec<usize> = match &opts.sweep_order {
        Some(o) => {
            let mut seen = vec![false; m];
            if o.len() != m
                || o.iter()
                    .any(|&k| k >= m || std::mem::replace(&mut seen[k], true))
            {
                return Err(Error::config(
                    "sweep_order must be a permutation of the column indices",
                ));
            }
            o.clone()
        }
        None => (0..m).collect(),
    };

    let mut eng = Engine::new(view, y, xty, lambda, warm);
    if warm.is_some() {
        eng.refresh(&order);
    }
    let mut sweeps = 0;
    let mut trace = Vec::new();
    let mut last_obj = eng.objective();
    let mut kkt = eng.kkt();
    let mut converged = kkt <= opts.tol;

    let record = |eng: &Engine<'_, '_>, last: &mut f64, trace: &mut Vec<f64>| {
        let obj = eng.objective();
        debug_assert!(
            obj <= *last + 1e-10 * (1.0 + last.abs()),
            "lasso objective increased: {} -> {}",
            last,
            obj
        );
        *last = obj;
        if opts.record_objective {
            trace.push(obj);
        }
    };

    while !converged && sweeps < opts.max_sweeps {
        for &k in &order {
            eng.update(k);
        }
        sweeps += 1;
        record(&eng, &mut last_obj, &mut trace);

        for _ in 0..opts.max_sweeps {
            let mut max_change: f64 = 0.0;
            let mut any_active = false;
            for &k in &order {
                if eng.beta[k] != 0.0 {
                    any_active = true;
                    max_change = max_change.max(eng.update(k));
                }
            }
            if !any_active {
                break;
            }
            record(&eng, &mut last_obj, &mut trace);
            if max_change <= 0.1 * opts.tol {
                break;
            }
        }
        eng.refresh(&order);
        kkt = eng.kkt();
        converged = kkt <= opts.tol;
    }

    let r = view.residual(y, &eng.beta);
    let objective = dot(&r, &r) / (2.0 * view.n() as f64) + lambda * norm1(&eng.beta);
    Ok(LassoSolution {
        coef: eng.beta,
        objective,
        kkt_violation: kkt,
        sweeps,
        converged,
        objective_trace: trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledLassoOptions {
    pub max_alternations: usize,
    /// Relative stopping tolerance on successive noise levels.
    pub tol: f64,
    pub lasso: LassoOptions,
}

impl Default for ScaledLassoOptions {
    fn default() -> Self {
        ScaledLassoOptions {
            max_alternations: 100,
            tol: 1e-8,
            lasso: LassoOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledLassoFit {
    pub coef: Vec<f64>,
    pub sigma_hat: f64,
    /// Universal penalty `√(2 log q / n)` for q design columns.
    pub universal_lambda: f64,
    pub sigma_floor: f64,
    pub alternations: usize,
}

/// Joint estimate of coefficients and noise level minimising
/// `‖Y − Uβ‖²/(2nσ) + σ/2 + λ̃‖β‖₁` with `λ̃ = √(2 log q / n)`.
pub fn scaled_lasso(u: &Matrix, y: &[f64]) -> Result<ScaledLassoFit> {
    scaled_lasso_with(u, y, &ScaledLassoOptions::default())
}

pub fn scaled_lasso_with(
    u: &Matrix,
    y: &[f64],
    opts: &ScaledLassoOptions,
) -> Result<ScaledLassoFit> {
    let cols: Vec<usize> = (0..u.ncols()).collect();
    scaled_lasso_view(&DesignView::new(u, &cols), y, opts)
}

/// `1e-4` times the sample standard deviation of `y` (or of a unit scale
/// when `y` is constant).
pub fn sigma_floor(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = if y.len() > 1 {
        y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let sd = var.sqrt();
    1e-4 * if sd > 0.0 { sd } else { 1.0 }
}

pub(crate) fn scaled_lasso_view(
    view: &DesignView<'_>,
    y: &[f64],
    opts: &ScaledLassoOptions,
) -> Result<ScaledLassoFit> {
    let n = view.n();
    let q = view.m();
    if q < 2 || n < 2 {
        return Err(Error::config(format!(
            "scaled lasso needs at least 2 columns and 2 rows (got {q} columns, {n} rows)"
        )));
    }
    let universal_lambda = (2.0 * (q as f64).ln() / n as f64).sqrt();
    let floor = sigma_floor(y);
    let xty = view.tr_mul_scaled(y);
    let mut sigma = (norm2(y) / (n as f64).sqrt()).max(floor);
    let mut coef: Option<Vec<f64>> = None;
    for k in 1..=opts.max_alternations {
        let sol = coordinate_descent(
            view,
            y,
            Some(xty.clone()),
            sigma * universal_lambda,
            coef.as_deref(),
            &opts.lasso,
        )?
        .require_converged("scaled lasso inner solve")?;
        let r = view.residual(y, &sol.coef);
        let next = (norm2(&r) / (n as f64).sqrt()).max(floor);
        let done = (next - sigma).abs() <= opts.tol * sigma;
        sigma = next;
        coef = Some(sol.coef);
        if done {
            return Ok(ScaledLassoFit {
                coef: coef.unwrap_or_default(),
                sigma_hat: sigma,
                universal_lambda,
                sigma_floor: floor,
                alternations: k,
            });
        }
    }
    Err(Error::NonConverged {
        context: "scaled lasso alternation".into(),
        iterations: opts.max_alternations,
        residual: sigma,
    })
}
