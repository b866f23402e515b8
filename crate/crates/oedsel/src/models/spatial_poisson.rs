//! Non-homogeneous spatial Poisson model on a square grid of cells, with a
//! log-Gaussian intensity prior correlated by cell-center distance.

use nalgebra::DMatrix;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::numerics::{cholesky_counted, SymMatrix};

/// Grid geometry, per-cell exposures `b_i = l_i⁻¹ D_i`, and the log-prior
/// covariance `Σ_ij = exp(−2‖c_i − c_j‖)` with its cached Cholesky factor
/// for prior sampling.
#[derive(Debug, Clone)]
pub struct SpatialPoissonParams {
    grid: usize,
    region: f64,
    centers: Vec<(f64, f64)>,
    exposures: Vec<f64>,
    sigma: SymMatrix,
    chol_sigma: DMatrix<f64>,
}

impl SpatialPoissonParams {
    pub fn new(grid: usize, region: f64) -> Result<Self> {
        if grid == 0 {
            return Err(Error::Config(
                "grid must be at least 1 cell per axis".into(),
            ));
        }
        if region <= 0.0 {
            return Err(Error::Config("region side must be positive".into()));
        }
        let cell = region / grid as f64;
        let area = cell * cell;
        let mut centers = Vec::with_capacity(grid * grid);
        for row in 0..grid {
            for col in 0..grid {
                centers.push(((col as f64 + 0.5) * cell, (row as f64 + 0.5) * cell));
            }
        }
        let exposures: Vec<f64> = centers
            .iter()
            .map(|(cx, cy)| {
                let dist = (cx * cx + cy * cy).sqrt();
                area / dist
            })
            .collect();
        if exposures.iter().any(|b| !b.is_finite() || *b <= 0.0) {
            return Err(Error::Config("every cell exposure must be positive".into()));
        }
        let n = centers.len();
        let sigma = SymMatrix::from_matrix(DMatrix::from_fn(n, n, |i, j| {
            let (xi, yi) = centers[i];
            let (xj, yj) = centers[j];
            (-2.0 * ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt()).exp()
        }))?;
        let chol_sigma = cholesky_counted(sigma.matrix(), &mut OpCounters::new())
            .map_err(|(at, pivot)| Error::NotPositiveDefinite { dim: n, pivot, at })?;
        Ok(Self {
            grid,
            region,
            centers,
            exposures,
            sigma,
            chol_sigma,
        })
    }

    /// Benchmark defaults: 25 equal cells over `[0,5]²`.
    pub fn defaults() -> Self {
        Self::new(5, 5.0).expect("defaults are valid")
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn region(&self) -> f64 {
        self.region
    }

    pub fn n(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[(f64, f64)] {
        &self.centers
    }

    pub fn exposures(&self) -> &[f64] {
        &self.exposures
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub(crate) fn chol_sigma(&self) -> &DMatrix<f64> {
        &self.chol_sigma
    }

    fn check_domain(&self, y_i: f64, x_i: f64) -> Result<()> {
        if x_i < 0.0 || !x_i.is_finite() {
            return Err(Error::Domain(format!(
                "intensity multiplier must be nonnegative, got {x_i}"
            )));
        }
        // gamma-extension domain: Γ(y+1) must have a positive argument
        if !y_i.is_finite() || y_i <= -1.0 {
            return Err(Error::Domain(format!(
                "count {y_i} outside the continuous extension range (-1, inf)"
            )));
        }
        Ok(())
    }

    /// Poisson log mass `y_i log(b_i x_i) − b_i x_i − log Γ(y_i+1)` with the
    /// gamma-function continuous extension in `y_i`.
    pub fn loglik_coord(&self, i: usize, y_i: f64, x_i: f64) -> Result<f64> {
        self.check_domain(y_i, x_i)?;
        let rate = self.exposures[i] * x_i;
        if rate == 0.0 {
            return Ok(if y_i == 0.0 { 0.0 } else { f64::NEG_INFINITY });
        }
        Ok(y_i * rate.ln() - rate - ln_gamma(y_i + 1.0))
    }

    /// `log(b_i x_i) − Ψ(y_i+1)`.
    pub fn grad_coord(&self, i: usize, y_i: f64, x_i: f64) -> Result<f64> {
        self.check_domain(y_i, x_i)?;
        let rate = self.exposures[i] * x_i;
        if rate == 0.0 {
            return Err(Error::Domain("gradient undefined at zero intensity".into()));
        }
        Ok(rate.ln() - digamma(y_i + 1.0))
    }
}
