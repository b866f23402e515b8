//! Linear-Gaussian model `Y = GX + ε` with exponential-kernel covariances.

use nalgebra::{DMatrix, DVector};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::numerics::{cholesky_counted, cholesky_solve_counted, invert_pd, SymMatrix};

const LN_2PI: f64 = 1.837877066409345483560659472811;

/// Forward matrix, prior covariance, and noise covariance, with cached
/// Cholesky factors for sampling and density evaluation.
#[derive(Debug, Clone)]
pub struct LinearGaussianParams {
    g: DMatrix<f64>,
    sigma_x: SymMatrix,
    sigma_eps: SymMatrix,
    chol_x: DMatrix<f64>,
    chol_eps: DMatrix<f64>,
    logdet_eps: f64,
}

/// Exponential kernel `a·exp(−|z_i−z_j|/l)` over the given grid points.
pub fn exponential_kernel(points: &[f64], amplitude: f64, lengthscale: f64) -> Result<SymMatrix> {
    if amplitude <= 0.0 || lengthscale <= 0.0 {
        return Err(Error::Config(
            "kernel amplitude and lengthscale must be positive".into(),
        ));
    }
    let k = points.len();
    SymMatrix::from_matrix(DMatrix::from_fn(k, k, |i, j| {
        amplitude * (-(points[i] - points[j]).abs() / lengthscale).exp()
    }))
}

/// Unit grid `0, 1/(k−1), …, 1` (a single `0.0` when `k = 1`).
pub fn unit_grid(k: usize) -> Vec<f64> {
    if k == 1 {
        vec![0.0]
    } else {
        (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
    }
}

impl LinearGaussianParams {
    /// Defaults used by the benchmark: `Σ_X` from the exponential kernel with
    /// `a = 1`, `l = 1/d`; `Σ_ε` with `a = 0.01`, `l = 1/n`; and
    /// `G_ij = exp(−|u_i − v_j|·max(n,d))` over unit grids.
    pub fn with_kernel_defaults(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Config("n and d must be at least 1".into()));
        }
        let sigma_x = exponential_kernel(&unit_grid(d), 1.0, 1.0 / d as f64)?;
        let sigma_eps = exponential_kernel(&unit_grid(n), 0.01, 1.0 / n as f64)?;
        let u = unit_grid(n);
        let v = unit_grid(d);
        let scale = n.max(d) as f64;
        let g = DMatrix::from_fn(n, d, |i, j| (-(u[i] - v[j]).abs() * scale).exp());
        Self::from_parts(g, sigma_x, sigma_eps)
    }

    pub fn from_parts(g: DMatrix<f64>, sigma_x: SymMatrix, sigma_eps: SymMatrix) -> Result<Self> {
        let n = g.nrows();
        let d = g.ncols();
        if sigma_x.dim() != d {
            return Err(Error::Config(format!(
                "prior covariance is {}x{0}, expected {d}x{d}",
                sigma_x.dim()
            )));
        }
        if sigma_eps.dim() != n {
            return Err(Error::Config(format!(
                "noise covariance is {}x{0}, expected {n}x{n}",
                sigma_eps.dim()
            )));
        }
        let mut scratch = OpCounters::new();
        let chol_x = cholesky_counted(sigma_x.matrix(), &mut scratch)
            .map_err(|(at, pivot)| Error::NotPositiveDefinite { dim: d, pivot, at })?;
        let chol_eps = cholesky_counted(sigma_eps.matrix(), &mut scratch)
            .map_err(|(at, pivot)| Error::NotPositiveDefinite { dim: n, pivot, at })?;
        let logdet_eps = 2.0 * (0..n).map(|i| chol_eps[(i, i)].ln()).sum::<f64>();
        Ok(Self {
            g,
            sigma_x,
            sigma_eps,
            chol_x,
            chol_eps,
            logdet_eps,
        })
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn d(&self) -> usize {
        self.g.ncols()
    }

    pub fn forward_matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn sigma_x(&self) -> &SymMatrix {
        &self.sigma_x
    }

    pub fn sigma_eps(&self) -> &SymMatrix {
        &self.sigma_eps
    }

    pub(crate) fn chol_x(&self) -> &DMatrix<f64> {
        &self.chol_x
    }

    pub(crate) fn chol_eps(&self) -> &DMatrix<f64> {
        &self.chol_eps
    }

    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.g * x
    }

    /// `Σ_ε⁻¹ v` via the cached factor.
    pub(crate) fn noise_solve(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut scratch = OpCounters::new();
        let b = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
        let solved = cholesky_solve_counted(&self.chol_eps, &b, &mut scratch);
        DVector::from_column_slice(solved.column(0).as_slice())
    }

    /// Full-vector Gaussian log density `log N(y; Gx, Σ_ε)`.
    pub fn loglik(&self, y: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
        if y.len() != self.n() || x.len() != self.d() {
            return Err(Error::Domain(format!(
                "expected y of length {} and x of length {}",
                self.n(),
                self.d()
            )));
        }
        let r = y - self.forward(x);
        let quad = r.dot(&self.noise_solve(&r));
        Ok(-0.5 * (self.n() as f64 * LN_2PI + self.logdet_eps + quad))
    }

    /// `∇_y log N(y; Gx, Σ_ε) = −Σ_ε⁻¹ (y − Gx)`.
    pub fn grad_y_loglik(&self, y: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.n() || x.len() != self.d() {
            return Err(Error::Domain(format!(
                "expected y of length {} and x of length {}",
                self.n(),
                self.d()
            )));
        }
        let r = y - self.forward(x);
        Ok(-self.noise_solve(&r))
    }

    /// Closed-form posterior quantities: `Σ_Y`, `Σ_{X|Y}`, and the exact
    /// posterior-score matrix `Σ_ε⁻¹ − Σ_Y⁻¹`.
    pub fn exact_posterior_quantities(&self) -> Result<ExactQuantities> {
        let sigma_y = SymMatrix::from_matrix(
            &self.g * self.sigma_x.matrix() * self.g.transpose() + self.sigma_eps.matrix(),
        )?;
        let sigma_x_inv = invert_pd(&self.sigma_x)?;
        let sigma_eps_inv = invert_pd(&self.sigma_eps)?;
        let precision = SymMatrix::from_matrix(
            sigma_x_inv.matrix() + self.g.transpose() * sigma_eps_inv.matrix() * &self.g,
        )?;
        let sigma_x_given_y = invert_pd(&precision)?;
        let sigma_y_inv = invert_pd(&sigma_y)?;
        let f_exact = SymMatrix::from_matrix(sigma_eps_inv.matrix() - sigma_y_inv.matrix())?;
        Ok(ExactQuantities {
            sigma_y,
            sigma_x_given_y,
            f_exact,
        })
    }
}

/// Closed-form covariances of the linear-Gaussian model.
#[derive(Debug, Clone)]
pub struct ExactQuantities {
    pub sigma_y: SymMatrix,
    pub sigma_x_given_y: SymMatrix,
    pub f_exact: SymMatrix,
}
