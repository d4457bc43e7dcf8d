//! Seeded Gaussian designs and the Monte-Carlo replicate harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::SemiparametricData;
use crate::error::{Error, Result};
use crate::estimators::{fit_baseline, ClassoConfig};
use crate::inference::{columns_inference, holm, Method, TargetInference};
use crate::numerics::{cholesky, Matrix};

/// More than this fraction of failed replicates invalidates a report.
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    /// `Σ_jk = ρ^|j−k|`
    Toeplitz,
    /// `Σ_jk = ρ` off the diagonal.
    Equicorr,
    Identity,
}

impl std::str::FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "toeplitz" => Ok(DesignKind::Toeplitz),
            "equicorr" | "equi_corr" | "equi-corr" => Ok(DesignKind::Equicorr),
            "identity" | "iid" => Ok(DesignKind::Identity),
            other => Err(Error::config(format!(
                "unknown design {other:?}; expected toeplitz, equicorr or identity"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub p: usize,
    pub rho: f64,
}

impl DesignSpec {
    pub fn toeplitz(p: usize, rho: f64) -> Self {
        DesignSpec {
            kind: DesignKind::Toeplitz,
            p,
            rho,
        }
    }

    pub fn equicorr(p: usize, rho: f64) -> Self {
        DesignSpec {
            kind: DesignKind::Equicorr,
            p,
            rho,
        }
    }

    pub fn identity(p: usize) -> Self {
        DesignSpec {
            kind: DesignKind::Identity,
            p,
            rho: 0.0,
        }
    }

    /// 0.9 for Toeplitz, 0.8 for equi-correlation.
    pub fn default_rho(kind: DesignKind) -> f64 {
        match kind {
            DesignKind::Toeplitz => 0.9,
            DesignKind::Equicorr => 0.8,
            DesignKind::Identity => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::config("design needs p >= 1"));
        }
        let ok = match self.kind {
            DesignKind::Toeplitz => self.rho.abs() < 1.0,
            DesignKind::Equicorr => (0.0..1.0).contains(&self.rho),
            DesignKind::Identity => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "rho = {} does not give a positive definite {:?} design",
                self.rho, self.kind
            )))
        }
    }
}

pub fn make_sigma(spec: &DesignSpec) -> Result<Matrix> {
    spec.validate()?;
    let p = spec.p;
    let mut s = Matrix::identity(p);
    match spec.kind {
        DesignKind::Identity => {}
        DesignKind::Toeplitz => {
            for j in 0..p {
                for k in 0..p {
                    if j != k {
                        s.set(j, k, spec.rho.powi(j.abs_diff(k) as i32));
                    }
                }
            }
        }
        DesignKind::Equicorr => {
            for j in 0..p {
                for k in 0..p {
                    if j != k {
                        s.set(j, k, spec.rho);
                    }
                }
            }
        }
    }
    Ok(s)
}

/// `(2, −1, −2, 3, 1, 0, …, 0)`
pub fn default_beta_star(p: usize) -> Result<Vec<f64>> {
    if p < 5 {
        return Err(Error::config(format!(
            "the default signal needs p >= 5, got {p}"
        )));
    }
    let mut b = vec![0.0; p];
    b[..5].copy_from_slice(&[2.0, -1.0, -2.0, 3.0, 1.0]);
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSpec {
    pub n: usize,
    pub design: DesignSpec,
    pub beta_star: Vec<f64>,
    /// Noise standard deviation.
    pub sigma: f64,
    /// 1-based coordinates whose intervals are tracked.
    pub targets: Vec<usize>,
    pub reps: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    /// Interval significance level (0.05 for 95% intervals).
    pub ci_alpha: f64,
    /// Family-wise level of the Holm step-down over all coordinates.
    pub fwer_alpha: f64,
    /// Test every coordinate for power and FWER. Off, only the targets are
    /// fitted.
    pub multiple_testing: bool,
    pub config: ClassoConfig,
}

impl SimSpec {
    /// The standard setting: default signal, noise sd 1, targets 3 and 7,
    /// all three methods, 200 replicates.
    pub fn new(n: usize, design: DesignSpec, base_seed: u64) -> Result<Self> {
        Ok(SimSpec {
            n,
            design,
            beta_star: default_beta_star(design.p)?,
            sigma: 1.0,
            targets: vec![3, 7].into_iter().filter(|&t| t <= design.p).collect(),
            reps: 200,
            base_seed,
            methods: Method::ALL.to_vec(),
            ci_alpha: 0.05,
            fwer_alpha: 0.05,
            multiple_testing: true,
            config: ClassoConfig::default(),
        })
    }

    pub fn p(&self) -> usize {
        self.design.p
    }

    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        let p = self.p();
        if self.beta_star.len() != p {
            return Err(Error::DimensionMismatch {
                context: "beta_star",
                expected: p,
                found: self.beta_star.len(),
            });
        }
        if p < 2 {
            return Err(Error::config("simulation needs p >= 2"));
        }
        if self.n < 2 {
            return Err(Error::config("simulation needs n >= 2"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::config(format!(
                "noise sd must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        if self.reps == 0 {
            return Err(Error::config("reps must be >= 1"));
        }
        if let Some(t) = self.targets.iter().find(|&&t| t == 0 || t > p) {
            return Err(Error::config(format!("target {t} outside 1..={p}")));
        }
        if self.methods.is_empty() {
            return Err(Error::config("at least one method is required"));
        }
        for a in [self.ci_alpha, self.fwer_alpha] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::config(format!("levels must lie in (0, 1), got {a}")));
            }
        }
        Ok(())
    }
}

/// Independent random streams per (seed, replicate, purpose).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Design = 1,
    Noise = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_rng(base_seed: u64, rep: usize, stream: Stream) -> ChaCha12Rng {
    let key = splitmix64(splitmix64(splitmix64(base_seed) ^ rep as u64) ^ stream as u64);
    let mut rng = ChaCha12Rng::seed_from_u64(key);
    rng.set_stream(stream as u64);
    rng
}

/// n draws from `N_p(0, Σ)` given the Cholesky factor of Σ, as an n×p matrix.
pub fn gaussian_design<R: Rng>(n: usize, lower: &Matrix, rng: &mut R) -> Matrix {
    let p = lower.nrows();
    let mut x = Matrix::zeros(n, p);
    let mut g = vec![0.0; p];
    for i in 0..n {
        for v in g.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for j in 0..p {
            let mut s = 0.0;
            for (k, gk) in g.iter().enumerate().take(j + 1) {
                s += lower.get(j, k) * gk;
            }
            x.set(i, j, s);
        }
    }
    x
}

/// One simulated data set.
#[derive(Debug, Clone)]
pub struct Instance {
    pub rep: usize,
    /// Full design; the column of interest is the first target (or column 0).
    pub data: SemiparametricData,
    /// One split per target, the target column as `X`.
    pub per_target: Vec<SemiparametricData>,
    pub beta_star: Vec<f64>,
}

pub fn sample_instance(spec: &SimSpec, rep: usize) -> Result<Instance> {
    spec.validate()?;
    let lower = cholesky(&make_sigma(&spec.design)?)?.into_lower();
    sample_with_factor(spec, rep, &lower)
}

fn sample_with_factor(spec: &SimSpec, rep: usize, lower: &Matrix) -> Result<Instance> {
    let n = spec.n;
    let x = gaussian_design(
        n,
        lower,
        &mut stream_rng(spec.base_seed, rep, Stream::Design),
    );
    let mut y = x.matvec(&spec.beta_star);
    if spec.sigma > 0.0 {
        let mut rng = stream_rng(spec.base_seed, rep, Stream::Noise);
        for v in y.iter_mut() {
            let w: f64 = rng.sample(StandardNormal);
            *v += spec.sigma * w;
        }
    }
    let first = spec.targets.first().map_or(0, |t| t - 1);
    let data = SemiparametricData::from_design(y, x, vec![first])?;
    let per_target = spec
        .targets
        .iter()
        .map(|&t| data.reparameterize(&[t - 1]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance {
        rep,
        data,
        per_target,
        beta_star: spec.beta_star.clone(),
    })
}

/// One row of the per-replicate CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub rep: usize,
    pub method: Method,
    /// 1-based coordinate.
    pub target: usize,
    pub estimate: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub covered: bool,
    pub sq_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetSummary {
    pub method: Method,
    pub target: usize,
    pub truth: f64,
    /// `None` when the noise is zero and coverage is meaningless.
    pub coverage: Option<f64>,
    pub rmse: f64,
    pub mean_ci_length: f64,
    pub degenerate: bool,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Mean fraction of true non-null coordinates rejected by Holm.
    pub power: Option<f64>,
    /// Fraction of replicates rejecting at least one true null.
    pub fwer: Option<f64>,
    pub failures: usize,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub spec: SimSpec,
    pub targets: Vec<TargetSummary>,
    pub methods: Vec<MethodSummary>,
    pub replicates: usize,
    pub failures: usize,
    pub max_failure_rate: f64,
    /// False when any method failed on more than `max_failure_rate` of the
    /// replicates.
    pub valid: bool,
    #[serde(skip)]
    pub records: Vec<ReplicateRecord>,
    #[serde(skip)]
    pub failure_messages: Vec<String>,
}

impl SimReport {
    pub fn target(&self, method: Method, target: usize) -> Option<&TargetSummary> {
        self.targets
            .iter()
            .find(|t| t.method == method && t.target == target)
    }

    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    /// Fixed-width table: one row per method, coverage and RMSE per target,
    /// then power and FWER.
    pub fn summary_table(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = write!(out, "{:<10}", "method");
        for t in &self.spec.targets {
            let _ = write!(
                out,
                " {:>9} {:>9} {:>9}",
                format!("cov_{t}"),
                format!("rmse_{t}"),
                format!("len_{t}")
            );
        }
        let _ = writeln!(out, " {:>7} {:>7} {:>5}", "power", "fwer", "fail");
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        for m in &self.methods {
            let _ = write!(out, "{:<10}", m.method.label());
            for &t in &self.spec.targets {
                match self.target(m.method, t) {
                    Some(s) => {
                        let _ = write!(
                            out,
                            " {:>9} {:>9.4} {:>9.4}",
                            fmt(s.coverage),
                            s.rmse,
                            s.mean_ci_length
                        );
                    }
                    None => {
                        let _ = write!(out, " {:>9} {:>9} {:>9}", "-", "-", "-");
                    }
                }
            }
            let _ = writeln!(
                out,
                " {:>7} {:>7} {:>5}",
                fmt(m.power),
                fmt(m.fwer),
                m.failures
            );
        }
        if !self.valid {
            let _ = writeln!(
                out,
                "report invalid: failure rate above {:.0}%",
                100.0 * self.max_failure_rate
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
struct MethodOutcome {
    targets: Vec<TargetInference>,
    /// (fraction of non-nulls rejected, any null rejected)
    testing: Option<(f64, bool)>,
}

type ReplicateOutcome = Vec<std::result::Result<MethodOutcome, String>>;

fn run_method(
    spec: &SimSpec,
    inst: &Instance,
    base: &crate::estimators::Baseline,
    method: Method,
) -> Result<MethodOutcome> {
    let p = spec.p();
    let columns: Vec<usize> = if spec.multiple_testing {
        (0..p).collect()
    } else {
        spec.targets.iter().map(|t| t - 1).collect()
    };
    let fits = columns_inference(
        &inst.data,
        &columns,
        method,
        &spec.config,
        base,
        spec.ci_alpha,
    )
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let targets = spec
        .targets
        .iter()
        .map(|&t| {
            fits[columns
                .iter()
                .position(|&c| c == t - 1)
                .expect("targets are fitted")]
            .clone()
        })
        .collect();
    let testing = spec.multiple_testing.then(|| {
        let pv: Vec<f64> = fits.iter().map(|f| f.p_value).collect();
        let rejected = holm(&pv, spec.fwer_alpha).rejected_indices;
        let nonnull = inst.beta_star.iter().filter(|b| **b != 0.0).count();
        let hits = rejected
            .iter()
            .filter(|&&j| inst.beta_star[j] != 0.0)
            .count();
        let power = if nonnull == 0 {
            1.0
        } else {
            hits as f64 / nonnull as f64
        };
        (power, rejected.iter().any(|&j| inst.beta_star[j] == 0.0))
    });
    Ok(MethodOutcome { targets, testing })
}

fn run_one(spec: &SimSpec, rep: usize, lower: &Matrix) -> ReplicateOutcome {
    let prepared = sample_with_factor(spec, rep, lower).and_then(|inst| {
        let base = fit_baseline(&inst.data, &spec.config)?;
        Ok((inst, base))
    });
    match prepared {
        Err(e) => vec![Err(e.to_string()); spec.methods.len()],
        Ok((inst, base)) => spec
            .methods
            .iter()
            .map(|&m| run_method(spec, &inst, &base, m).map_err(|e| e.to_string()))
            .collect(),
    }
}

/// Runs `spec.reps` replicates in parallel and aggregates them. The report
/// is bitwise reproducible for a given spec.
pub fn run_replicates(spec: &SimSpec) -> Result<SimReport> {
    spec.validate()?;
    let lower = cholesky(&make_sigma(&spec.design)?)?.into_lower();
    let outcomes: Vec<ReplicateOutcome> = (0..spec.reps)
        .into_par_iter()
        .map(|rep| run_one(spec, rep, &lower))
        .collect();
    Ok(aggregate(spec, outcomes))
}

fn aggregate(spec: &SimSpec, outcomes: Vec<ReplicateOutcome>) -> SimReport {
    let degenerate = spec.sigma == 0.0;
    let mut records = Vec::new();
    let mut failure_messages = Vec::new();
    let mut methods = Vec::new();
    let mut targets = Vec::new();
    let mut any_failed = vec![false; spec.reps];

    for (mi, &method) in spec.methods.iter().enumerate() {
        let mut failures = 0;
        let mut powers = Vec::new();
        let mut fwer_hits = 0usize;
        let mut per_target: Vec<Vec<(f64, f64, bool, f64)>> = vec![Vec::new(); spec.targets.len()];
        for (rep, out) in outcomes.iter().enumerate() {
            match &out[mi] {
                Err(msg) => {
                    failures += 1;
                    any_failed[rep] = true;
                    log::warn!("replicate {rep} ({method}) failed: {msg}");
                    failure_messages.push(format!("replicate {rep} ({method}): {msg}"));
                }
                Ok(o) => {
                    for (ti, (&t, fit)) in spec.targets.iter().zip(&o.targets).enumerate() {
                        let truth = spec.beta_star[t - 1];
                        let err = fit.estimate - truth;
                        let covered = fit.ci.contains(truth);
                        records.push(ReplicateRecord {
                            rep,
                            method,
                            target: t,
                            estimate: fit.estimate,
                            ci_lower: fit.ci.lower,
                            ci_upper: fit.ci.upper,
                            covered,
                            sq_error: err * err,
                        });
                        per_target[ti].push((fit.estimate, err * err, covered, fit.ci.width()));
                    }
                    if let Some((power, any_null)) = o.testing {
                        powers.push(power);
                        fwer_hits += usize::from(any_null);
                    }
                }
            }
        }
        for (ti, &t) in spec.targets.iter().enumerate() {
            let rows = &per_target[ti];
            let k = rows.len();
            let mean = |f: &dyn Fn(&(f64, f64, bool, f64)) -> f64| {
                if k == 0 {
                    f64::NAN
                } else {
                    rows.iter().map(f).sum::<f64>() / k as f64
                }
            };
            targets.push(TargetSummary {
                method,
                target: t,
                truth: spec.beta_star[t - 1],
                coverage: (!degenerate && k > 0).then(|| mean(&|r| f64::from(u8::from(r.2)))),
                rmse: mean(&|r| r.1).sqrt(),
                mean_ci_length: mean(&|r| r.3),
                degenerate,
                replicates: k,
            });
        }
        let done = powers.len();
        methods.push(MethodSummary {
            method,
            power: (done > 0).then(|| powers.iter().sum::<f64>() / done as f64),
            fwer: (done > 0).then(|| fwer_hits as f64 / done as f64),
            failures,
            replicates: spec.reps - failures,
        });
    }
    let valid = methods
        .iter()
        .all(|m| m.failures as f64 <= MAX_FAILURE_RATE * spec.reps as f64);
    records.sort_by_key(|r| {
        (
            r.rep,
            spec.methods.iter().position(|&m| m == r.method),
            r.target,
        )
    });
    SimReport {
        spec: spec.clone(),
        targets,
        methods,
        replicates: spec.reps,
        failures: any_failed.iter().filter(|f| **f).count(),
        max_failure_rate: MAX_FAILURE_RATE,
        valid,
        records,
        failure_messages,
    }
}
