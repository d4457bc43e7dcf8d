//! Response plus a design split into columns of interest and nuisance columns.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::lasso::DesignView;
use crate::numerics::{dot, norm2, Matrix};

#[derive(Debug)]
struct SharedDesign {
    u: Matrix,
    /// `n⁻¹UᵀU`, built on first use.
    gram: OnceLock<Matrix>,
}

/// `Y = Xθ + Zγ + w` with `X` (n×d) and `Z` (n×p) stored as a column split
/// of one design `U`.
///
/// Re-splitting the same design with [`SemiparametricData::reparameterize`]
/// shares the underlying matrix and its cached gram, so fitting every
/// coordinate of a p-column design costs one gram computation.
#[derive(Debug, Clone)]
pub struct SemiparametricData {
    y: Arc<[f64]>,
    design: Arc<SharedDesign>,
    interest: Vec<usize>,
    nuisance: Vec<usize>,
}

impl SemiparametricData {
    pub fn new(y: Vec<f64>, x: Matrix, z: Matrix) -> Result<Self> {
        if x.nrows() != z.nrows() {
            return Err(Error::DimensionMismatch {
                context: "rows of X and Z",
                expected: x.nrows(),
                found: z.nrows(),
            });
        }
        let d = x.ncols();
        let mut columns: Vec<Vec<f64>> = (0..d).map(|j| x.column(j).to_vec()).collect();
        columns.extend((0..z.ncols()).map(|j| z.column(j).to_vec()));
        let u = Matrix::from_columns(&columns)?;
        let q = u.ncols();
        SemiparametricData::from_design(y, u, (0..d).collect()).map(|mut s| {
            s.nuisance = (d..q).collect();
            s
        })
    }

    /// Use columns `interest` of `u` as `X` and the remaining columns, in
    /// their original order, as `Z`.
    pub fn from_design(y: Vec<f64>, u: Matrix, interest: Vec<usize>) -> Result<Self> {
        if y.len() != u.nrows() {
            return Err(Error::DimensionMismatch {
                context: "response length",
                expected: u.nrows(),
                found: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("response contains non-finite values"));
        }
        let data = SemiparametricData {
            y: y.into(),
            design: Arc::new(SharedDesign {
                u,
                gram: OnceLock::new(),
            }),
            interest: Vec::new(),
            nuisance: Vec::new(),
        };
        data.reparameterize(&interest)
    }

    /// Same response and design with a different split.
    pub fn reparameterize(&self, interest: &[usize]) -> Result<Self> {
        let q = self.design.u.ncols();
        if interest.is_empty() {
            return Err(Error::config("at least one column of interest is required"));
        }
        let mut seen = vec![false; q];
        for &c in interest {
            if c >= q {
                return Err(Error::config(format!(
                    "column {c} out of range (design has {q} columns)"
                )));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::config(format!("column {c} listed twice")));
            }
        }
        let nuisance: Vec<usize> = (0..q).filter(|c| !seen[*c]).collect();
        if nuisance.is_empty() {
            return Err(Error::config("at least one nuisance column is required"));
        }
        Ok(SemiparametricData {
            y: self.y.clone(),
            design: self.design.clone(),
            interest: interest.to_vec(),
            nuisance,
        })
    }

    /// Same design and split, different response.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch {
                context: "response length",
                expected: self.n(),
                found: y.len(),
            });
        }
        Ok(SemiparametricData {
            y: y.into(),
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.design.u.nrows()
    }

    pub fn d(&self) -> usize {
        self.interest.len()
    }

    pub fn p(&self) -> usize {
        self.nuisance.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// The full design `U`, in its original column order.
    pub fn design(&self) -> &Matrix {
        &self.design.u
    }

    pub fn interest_columns(&self) -> &[usize] {
        &self.interest
    }

    pub fn nuisance_columns(&self) -> &[usize] {
        &self.nuisance
    }

    pub fn x(&self) -> Matrix {
        self.design.u.select_columns(&self.interest)
    }

    pub fn z(&self) -> Matrix {
        self.design.u.select_columns(&self.nuisance)
    }

    pub fn x_column(&self, j: usize) -> &[f64] {
        self.design.u.column(self.interest[j])
    }

    /// RMS of the response, or 1 for an all-zero response.
    pub fn response_scale(&self) -> f64 {
        let s = norm2(&self.y) / (self.n() as f64).sqrt();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// The scaled gram matrix, available once the nuisance block fits the
    /// covariance-update regime (p ≤ n).
    pub(crate) fn gram(&self) -> Option<&Matrix> {
        if self.p() > self.n() {
            return None;
        }
        Some(self.design.gram.get_or_init(|| {
            let n = self.n() as f64;
            let mut g = self.design.u.gram();
            for j in 0..g.ncols() {
                g.column_mut(j).iter_mut().for_each(|v| *v /= n);
            }
            g
        }))
    }

    pub(crate) fn view<'a>(&'a self, cols: &'a [usize]) -> DesignView<'a> {
        DesignView::new(&self.design.u, cols).with_gram(self.gram())
    }

    pub(crate) fn nuisance_view(&self) -> DesignView<'_> {
        self.view(&self.nuisance)
    }

    /// `n⁻¹ Z_colsᵀ (Y − X θ)` for the given design columns, from the gram
    /// when available.
    pub(crate) fn scaled_cross(&self, cols: &[usize], resp: &[f64], theta: &[f64]) -> Vec<f64> {
        match self.gram() {
            Some(g) => {
                let n = self.n() as f64;
                cols.iter()
                    .map(|&c| {
                        let mut v = dot(self.design.u.column(c), &self.y) / n;
                        for (&i, &t) in self.interest.iter().zip(theta) {
                            v -= g.get(c, i) * t;
                        }
                        v
                    })
                    .collect()
            }
            None => {
                let n = self.n() as f64;
                cols.iter()
                    .map(|&c| dot(self.design.u.column(c), resp) / n)
                    .collect()
            }
        }
    }

    /// `Y − Xθ`
    pub(crate) fn partial_residual(&self, theta: &[f64]) -> Vec<f64> {
        let mut r = self.y.to_vec();
        for (j, &t) in theta.iter().enumerate() {
            if t != 0.0 {
                crate::numerics::axpy(-t, self.x_column(j), &mut r);
            }
        }
        r
    }

    /// `Y − Xθ − Zγ`
    pub(crate) fn full_residual(&self, theta: &[f64], gamma: &[f64]) -> Vec<f64> {
        let mut r = self.partial_residual(theta);
        for (k, &g) in gamma.iter().enumerate() {
            if g != 0.0 {
                crate::numerics::axpy(-g, self.design.u.column(self.nuisance[k]), &mut r);
            }
        }
        r
    }
}
