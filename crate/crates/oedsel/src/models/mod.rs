//! Probabilistic model abstraction: prior sampling, likelihood sampling,
//! likelihood density and its gradient with respect to the observations.
//!
//! Three concrete models are provided: a linear-Gaussian model with
//! exponential-kernel covariances, an epidemic transmission model with
//! binomial counts, and a non-homogeneous spatial Poisson model. Discrete
//! counts are differentiated in `y` through the gamma-function continuous
//! extension; sampling still returns integers.

mod epidemic;
mod linear_gaussian;
mod spatial_poisson;

pub use epidemic::EpidemicParams;
pub use linear_gaussian::{exponential_kernel, unit_grid, ExactQuantities, LinearGaussianParams};
pub use spatial_poisson::SpatialPoissonParams;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::numerics::{cholesky_counted, cholesky_solve_counted, select_submatrix};
use crate::stream::stream_rng;

const LN_2PI: f64 = 1.837877066409345483560659472811;

/// One of the three benchmark models.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    LinearGaussian(LinearGaussianParams),
    Epidemic(EpidemicParams),
    SpatialPoisson(SpatialPoissonParams),
}

/// Paired joint draws plus an auxiliary prior bank for score estimation.
///
/// Rows of `x`/`y` are i.i.d. joint draws; `prior_bank` rows are prior draws
/// from an independent stream, so changing the bank size never perturbs the
/// joint samples.
#[derive(Debug, Clone)]
pub struct JointSampleSet {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub prior_bank: DMatrix<f64>,
    pub seed: u64,
}

impl JointSampleSet {
    pub fn joint_len(&self) -> usize {
        self.x.nrows()
    }

    pub fn bank_len(&self) -> usize {
        self.prior_bank.nrows()
    }

    pub fn x_row(&self, r: usize) -> DVector<f64> {
        self.x.row(r).transpose()
    }

    pub fn y_row(&self, r: usize) -> DVector<f64> {
        self.y.row(r).transpose()
    }
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::LinearGaussian(_) => "linear_gaussian",
            ModelSpec::Epidemic(_) => "epidemic",
            ModelSpec::SpatialPoisson(_) => "spatial_poisson",
        }
    }

    /// Number of candidate observations.
    pub fn n(&self) -> usize {
        match self {
            ModelSpec::LinearGaussian(p) => p.n(),
            ModelSpec::Epidemic(p) => p.n(),
            ModelSpec::SpatialPoisson(p) => p.n(),
        }
    }

    /// Parameter dimension.
    pub fn d(&self) -> usize {
        match self {
            ModelSpec::LinearGaussian(p) => p.d(),
            ModelSpec::Epidemic(_) => 1,
            ModelSpec::SpatialPoisson(p) => p.n(),
        }
    }

    pub fn linear_gaussian(&self) -> Option<&LinearGaussianParams> {
        match self {
            ModelSpec::LinearGaussian(p) => Some(p),
            _ => None,
        }
    }

    /// Closed-form posterior covariances; linear-Gaussian only.
    pub fn exact_posterior_quantities(&self) -> Result<ExactQuantities> {
        match self {
            ModelSpec::LinearGaussian(p) => p.exact_posterior_quantities(),
            other => Err(Error::UnsupportedModel {
                required: "linear_gaussian",
                got: other.name().to_string(),
            }),
        }
    }

    /// One draw from the prior.
    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match self {
            ModelSpec::LinearGaussian(p) => {
                let z = DVector::from_fn(p.d(), |_, _| rng.sample::<f64, _>(StandardNormal));
                p.chol_x() * z
            }
            ModelSpec::Epidemic(p) => {
                let z: f64 = rng.sample(StandardNormal);
                DVector::from_element(1, (p.mu_x() + p.sigma_x() * z).exp())
            }
            ModelSpec::SpatialPoisson(p) => {
                let z = DVector::from_fn(p.n(), |_, _| rng.sample::<f64, _>(StandardNormal));
                (p.chol_sigma() * z).map(f64::exp)
            }
        }
    }

    /// One draw of the full observation vector given parameters.
    pub fn sample_likelihood<R: Rng + ?Sized>(
        &self,
        x: &DVector<f64>,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        match self {
            ModelSpec::LinearGaussian(p) => {
                let w = DVector::from_fn(p.n(), |_, _| rng.sample::<f64, _>(StandardNormal));
                Ok(p.forward(x) + p.chol_eps() * w)
            }
            ModelSpec::Epidemic(p) => {
                let rate = x[0];
                if rate < 0.0 {
                    return Err(Error::Domain(format!("negative infection rate {rate}")));
                }
                let mut y = DVector::zeros(p.n());
                for i in 0..p.n() {
                    let prob = p.infection_prob(rate, i).clamp(0.0, 1.0);
                    let dist = Binomial::new(p.population(), prob)
                        .map_err(|e| Error::Domain(format!("binomial setup: {e}")))?;
                    y[i] = dist.sample(rng) as f64;
                }
                Ok(y)
            }
            ModelSpec::SpatialPoisson(p) => {
                let mut y = DVector::zeros(p.n());
                for i in 0..p.n() {
                    let rate = p.exposures()[i] * x[i];
                    if !rate.is_finite() || rate <= 0.0 {
                        return Err(Error::Domain(format!(
                            "nonpositive intensity {rate} in cell {i}"
                        )));
                    }
                    let dist = Poisson::new(rate)
                        .map_err(|e| Error::Domain(format!("poisson setup: {e}")))?;
                    y[i] = dist.sample(rng);
                }
                Ok(y)
            }
        }
    }

    /// Full-vector log likelihood `log π(y|x)`.
    pub fn loglik(&self, y: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
        match self {
            ModelSpec::LinearGaussian(p) => p.loglik(y, x),
            ModelSpec::Epidemic(p) => {
                self.check_lengths(y, x)?;
                let mut total = 0.0;
                for i in 0..p.n() {
                    total += p.loglik_coord(i, y[i], x[0])?;
                }
                Ok(total)
            }
            ModelSpec::SpatialPoisson(p) => {
                self.check_lengths(y, x)?;
                let mut total = 0.0;
                for i in 0..p.n() {
                    total += p.loglik_coord(i, y[i], x[i])?;
                }
                Ok(total)
            }
        }
    }

    /// Log likelihood of the coordinates in `indices` only. For the models
    /// with conditionally independent coordinates this is the partial sum;
    /// for the linear-Gaussian model it is the exact Gaussian marginal of
    /// the selected block.
    pub fn loglik_restricted(
        &self,
        y: &DVector<f64>,
        x: &DVector<f64>,
        indices: &[usize],
    ) -> Result<f64> {
        let profile = self.loglik_profile(y, indices)?;
        Ok(self.profile_loglik(&profile, x))
    }

    /// `∇_y log π(y|x)` as a full vector.
    pub fn grad_y_loglik(&self, y: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            ModelSpec::LinearGaussian(p) => p.grad_y_loglik(y, x),
            ModelSpec::Epidemic(p) => {
                self.check_lengths(y, x)?;
                let mut g = DVector::zeros(p.n());
                for i in 0..p.n() {
                    g[i] = p.grad_coord(i, y[i], x[0])?;
                }
                Ok(g)
            }
            ModelSpec::SpatialPoisson(p) => {
                self.check_lengths(y, x)?;
                let mut g = DVector::zeros(p.n());
                for i in 0..p.n() {
                    g[i] = p.grad_coord(i, y[i], x[i])?;
                }
                Ok(g)
            }
        }
    }

    /// `∇_y π(y|x)`, assembled coordinate-by-coordinate as
    /// `∇_{y_i} π_i · Π_{j≠i} π_j`, which equals `π · ∇_y log π`.
    pub fn grad_y_lik(&self, y: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            ModelSpec::LinearGaussian(p) => {
                let density = p.loglik(y, x)?.exp();
                Ok(p.grad_y_loglik(y, x)?.map(|g| g * density))
            }
            ModelSpec::Epidemic(_) | ModelSpec::SpatialPoisson(_) => {
                self.check_lengths(y, x)?;
                let n = self.n();
                let mut coord_ll = vec![0.0; n];
                let mut coord_grad = vec![0.0; n];
                for i in 0..n {
                    match self {
                        ModelSpec::Epidemic(p) => {
                            coord_ll[i] = p.loglik_coord(i, y[i], x[0])?;
                            coord_grad[i] = p.grad_coord(i, y[i], x[0])?;
                        }
                        ModelSpec::SpatialPoisson(p) => {
                            coord_ll[i] = p.loglik_coord(i, y[i], x[i])?;
                            coord_grad[i] = p.grad_coord(i, y[i], x[i])?;
                        }
                        ModelSpec::LinearGaussian(_) => unreachable!(),
                    }
                }
                let total: f64 = coord_ll.iter().sum();
                let mut g = DVector::zeros(n);
                for i in 0..n {
                    // own-density times the leave-one-out product
                    let rest = total - coord_ll[i];
                    g[i] = coord_grad[i] * (coord_ll[i] + rest).exp();
                }
                Ok(g)
            }
        }
    }

    fn check_lengths(&self, y: &DVector<f64>, x: &DVector<f64>) -> Result<()> {
        if y.len() != self.n() || x.len() != self.d() {
            return Err(Error::Domain(format!(
                "expected y of length {} and x of length {}, got {} and {}",
                self.n(),
                self.d(),
                y.len(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Precompute everything that depends on `(y, indices)` only, for
    /// repeated likelihood evaluation at many parameter values.
    pub fn loglik_profile(&self, y: &DVector<f64>, indices: &[usize]) -> Result<LoglikProfile> {
        if y.len() != self.n() {
            return Err(Error::Domain(format!(
                "expected y of length {}, got {}",
                self.n(),
                y.len()
            )));
        }
        for &i in indices {
            if i >= self.n() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    dim: self.n(),
                });
            }
        }
        let kind = match self {
            ModelSpec::LinearGaussian(p) => {
                let sub = select_submatrix(p.sigma_eps().matrix(), indices, indices)?;
                let mut scratch = OpCounters::new();
                let chol_sub = cholesky_counted(&sub, &mut scratch).map_err(|(at, pivot)| {
                    Error::NotPositiveDefinite {
                        dim: indices.len(),
                        pivot,
                        at,
                    }
                })?;
                let a = indices.len();
                let logdet_sub = 2.0 * (0..a).map(|i| chol_sub[(i, i)].ln()).sum::<f64>();
                let g_sub = DMatrix::from_fn(a, p.d(), |r, c| p.forward_matrix()[(indices[r], c)]);
                let y_sub = DVector::from_fn(a, |r, _| y[indices[r]]);
                ProfileKind::LinearGaussian {
                    chol_sub,
                    g_sub,
                    y_sub,
                    base: -0.5 * (a as f64 * LN_2PI + logdet_sub),
                }
            }
            ModelSpec::Epidemic(p) => {
                let pop = p.population() as f64;
                let mut binom_const = 0.0;
                let mut weighted_pop_time = 0.0;
                let mut y_sub = Vec::with_capacity(indices.len());
                let mut t_sub = Vec::with_capacity(indices.len());
                for &i in indices {
                    let yi = y[i];
                    if !yi.is_finite() || yi <= -1.0 || yi >= pop + 1.0 {
                        return Err(Error::Domain(format!(
                            "count {yi} outside the continuous extension range"
                        )));
                    }
                    binom_const +=
                        ln_gamma(pop + 1.0) - ln_gamma(yi + 1.0) - ln_gamma(pop - yi + 1.0);
                    weighted_pop_time += (pop - yi) * p.times()[i];
                    y_sub.push(yi);
                    t_sub.push(p.times()[i]);
                }
                ProfileKind::Epidemic {
                    y_sub,
                    t_sub,
                    binom_const,
                    weighted_pop_time,
                }
            }
            ModelSpec::SpatialPoisson(p) => {
                let mut const_term = 0.0;
                let mut y_sub = Vec::with_capacity(indices.len());
                let mut b_sub = Vec::with_capacity(indices.len());
                for &i in indices {
                    let yi = y[i];
                    if !yi.is_finite() || yi <= -1.0 {
                        return Err(Error::Domain(format!(
                            "count {yi} outside the continuous extension range"
                        )));
                    }
                    const_term -= ln_gamma(yi + 1.0);
                    y_sub.push(yi);
                    b_sub.push(p.exposures()[i]);
                }
                ProfileKind::SpatialPoisson {
                    idx: indices.to_vec(),
                    y_sub,
                    b_sub,
                    const_term,
                }
            }
        };
        Ok(LoglikProfile { kind })
    }

    /// Evaluate a profile at one parameter value (one model evaluation).
    /// Parameters outside the model domain yield `-inf`.
    pub fn profile_loglik(&self, profile: &LoglikProfile, x: &DVector<f64>) -> f64 {
        match &profile.kind {
            ProfileKind::LinearGaussian {
                chol_sub,
                g_sub,
                y_sub,
                base,
            } => {
                let r = y_sub - g_sub * x;
                let a = r.len();
                if a == 0 {
                    return *base;
                }
                let mut scratch = OpCounters::new();
                let b = DMatrix::from_column_slice(a, 1, r.as_slice());
                let solved = cholesky_solve_counted(chol_sub, &b, &mut scratch);
                let quad: f64 = (0..a).map(|i| r[i] * solved[(i, 0)]).sum();
                base - 0.5 * quad
            }
            ProfileKind::Epidemic {
                y_sub,
                t_sub,
                binom_const,
                weighted_pop_time,
            } => {
                let rate = x[0];
                if rate < 0.0 {
                    return f64::NEG_INFINITY;
                }
                let mut acc = binom_const - rate * weighted_pop_time;
                for (yi, t) in y_sub.iter().zip(t_sub.iter()) {
                    if *yi != 0.0 {
                        acc += yi * (-(-rate * t).exp_m1()).ln();
                    }
                }
                acc
            }
            ProfileKind::SpatialPoisson {
                idx,
                y_sub,
                b_sub,
                const_term,
            } => {
                let mut acc = *const_term;
                for ((i, yi), b) in idx.iter().zip(y_sub.iter()).zip(b_sub.iter()) {
                    let xi = x[*i];
                    if xi < 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    let rate = b * xi;
                    acc -= rate;
                    if *yi != 0.0 {
                        acc += yi * rate.ln();
                    }
                }
                acc
            }
        }
    }

    /// Precompute per-component quantities of a prior bank for repeated
    /// mixture evaluation against many observation vectors.
    pub fn prepare_bank(&self, bank_x: &DMatrix<f64>) -> Result<PriorBank> {
        if bank_x.nrows() == 0 {
            return Err(Error::InsufficientSamples { got: 0, need: 1 });
        }
        if bank_x.ncols() != self.d() {
            return Err(Error::Domain(format!(
                "bank parameter dimension {} does not match model dimension {}",
                bank_x.ncols(),
                self.d()
            )));
        }
        let m = bank_x.nrows();
        let kind = match self {
            ModelSpec::LinearGaussian(p) => {
                let n = p.n();
                let mut v = DMatrix::zeros(n, m);
                let mut half_q = Vec::with_capacity(m);
                for j in 0..m {
                    let xj = bank_x.row(j).transpose();
                    let gx = p.forward(&xj);
                    let vj = p.noise_solve(&gx);
                    half_q.push(0.5 * gx.dot(&vj));
                    v.set_column(j, &vj);
                }
                BankKind::LinearGaussian {
                    v,
                    half_q,
                    base: -0.5 * (n as f64 * LN_2PI + p_logdet_eps(p)),
                }
            }
            ModelSpec::Epidemic(p) => {
                let n = p.n();
                let mut ln_p = DMatrix::zeros(n, m);
                let mut rates = Vec::with_capacity(m);
                for j in 0..m {
                    let rate = bank_x[(j, 0)];
                    if rate < 0.0 {
                        return Err(Error::Domain(format!(
                            "negative infection rate {rate} in bank component {j}"
                        )));
                    }
                    for i in 0..n {
                        ln_p[(i, j)] = (-(-rate * p.times()[i]).exp_m1()).ln();
                    }
                    rates.push(rate);
                }
                BankKind::Epidemic { ln_p, rates }
            }
            ModelSpec::SpatialPoisson(p) => {
                let n = p.n();
                let mut ln_rate = DMatrix::zeros(n, m);
                let mut rate_sums = Vec::with_capacity(m);
                for j in 0..m {
                    let mut sum = 0.0;
                    for i in 0..n {
                        let xi = bank_x[(j, i)];
                        if xi < 0.0 {
                            return Err(Error::Domain(format!(
                                "negative intensity multiplier {xi} in bank component {j}"
                            )));
                        }
                        let rate = p.exposures()[i] * xi;
                        sum += rate;
                        ln_rate[(i, j)] = rate.ln();
                    }
                    rate_sums.push(sum);
                }
                BankKind::SpatialPoisson { ln_rate, rate_sums }
            }
        };
        Ok(PriorBank { kind, size: m })
    }

    /// `log π(y|x_j)` for every bank component (`m` model evaluations).
    pub fn bank_logliks(
        &self,
        bank: &PriorBank,
        y: &DVector<f64>,
        out: &mut Vec<f64>,
        counters: &mut OpCounters,
    ) -> Result<()> {
        out.clear();
        counters.model_evals += bank.size as u64;
        match (&bank.kind, self) {
            (BankKind::LinearGaussian { v, half_q, base }, ModelSpec::LinearGaussian(p)) => {
                let u = p.noise_solve(y);
                let y_quad = 0.5 * y.dot(&u);
                for (j, hq) in half_q.iter().enumerate() {
                    let dot = y.dot(&v.column(j).clone_owned());
                    out.push(base - y_quad + dot - hq);
                }
                Ok(())
            }
            (BankKind::Epidemic { ln_p, rates }, ModelSpec::Epidemic(p)) => {
                let pop = p.population() as f64;
                let mut binom_const = 0.0;
                let mut weighted_pop_time = 0.0;
                for i in 0..p.n() {
                    let yi = y[i];
                    if !yi.is_finite() || yi <= -1.0 || yi >= pop + 1.0 {
                        return Err(Error::Domain(format!(
                            "count {yi} outside the continuous extension range"
                        )));
                    }
                    binom_const +=
                        ln_gamma(pop + 1.0) - ln_gamma(yi + 1.0) - ln_gamma(pop - yi + 1.0);
                    weighted_pop_time += (pop - yi) * p.times()[i];
                }
                for (j, rate) in rates.iter().enumerate() {
                    let mut acc = binom_const - rate * weighted_pop_time;
                    let col = ln_p.column(j);
                    for i in 0..p.n() {
                        let yi = y[i];
                        if yi != 0.0 {
                            acc += yi * col[i];
                        }
                    }
                    out.push(acc);
                }
                Ok(())
            }
            (BankKind::SpatialPoisson { ln_rate, rate_sums }, ModelSpec::SpatialPoisson(p)) => {
                let mut const_term = 0.0;
                for i in 0..p.n() {
                    let yi = y[i];
                    if !yi.is_finite() || yi <= -1.0 {
                        return Err(Error::Domain(format!(
                            "count {yi} outside the continuous extension range"
                        )));
                    }
                    const_term -= ln_gamma(yi + 1.0);
                }
                for (j, rate_sum) in rate_sums.iter().enumerate() {
                    let mut acc = const_term - rate_sum;
                    let col = ln_rate.column(j);
                    for i in 0..p.n() {
                        let yi = y[i];
                        if yi != 0.0 {
                            acc += yi * col[i];
                        }
                    }
                    out.push(acc);
                }
                Ok(())
            }
            _ => Err(Error::Domain(
                "prior bank was prepared for a different model".into(),
            )),
        }
    }

    /// `Σ_j w_j ∇_y log π(y|x_j)` (`m` gradient evaluations).
    pub fn bank_weighted_grad(
        &self,
        bank: &PriorBank,
        y: &DVector<f64>,
        weights: &[f64],
        counters: &mut OpCounters,
    ) -> Result<DVector<f64>> {
        if weights.len() != bank.size {
            return Err(Error::Domain(format!(
                "got {} weights for bank of size {}",
                weights.len(),
                bank.size
            )));
        }
        counters.model_evals += bank.size as u64;
        let w = DVector::from_column_slice(weights);
        match (&bank.kind, self) {
            (BankKind::LinearGaussian { v, .. }, ModelSpec::LinearGaussian(p)) => {
                let u = p.noise_solve(y);
                Ok(v * w - u)
            }
            (BankKind::Epidemic { ln_p, rates }, ModelSpec::Epidemic(p)) => {
                let pop = p.population() as f64;
                let weighted_lnp = ln_p * &w;
                let weighted_rate: f64 = rates.iter().zip(weights.iter()).map(|(r, w)| r * w).sum();
                let mut g = DVector::zeros(p.n());
                for i in 0..p.n() {
                    let yi = y[i];
                    g[i] = digamma(pop - yi + 1.0) - digamma(yi + 1.0)
                        + weighted_lnp[i]
                        + weighted_rate * p.times()[i];
                }
                Ok(g)
            }
            (BankKind::SpatialPoisson { ln_rate, .. }, ModelSpec::SpatialPoisson(p)) => {
                let weighted = ln_rate * &w;
                let mut g = DVector::zeros(p.n());
                for i in 0..p.n() {
                    g[i] = weighted[i] - digamma(y[i] + 1.0);
                }
                Ok(g)
            }
            _ => Err(Error::Domain(
                "prior bank was prepared for a different model".into(),
            )),
        }
    }
}

fn p_logdet_eps(p: &LinearGaussianParams) -> f64 {
    let l = p.chol_eps();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

/// Precomputed `(y, indices)`-dependent state for repeated likelihood
/// evaluation; see [`ModelSpec::loglik_profile`].
#[derive(Debug, Clone)]
pub struct LoglikProfile {
    kind: ProfileKind,
}

#[derive(Debug, Clone)]
enum ProfileKind {
    LinearGaussian {
        chol_sub: DMatrix<f64>,
        g_sub: DMatrix<f64>,
        y_sub: DVector<f64>,
        base: f64,
    },
    Epidemic {
        y_sub: Vec<f64>,
        t_sub: Vec<f64>,
        binom_const: f64,
        weighted_pop_time: f64,
    },
    SpatialPoisson {
        idx: Vec<usize>,
        y_sub: Vec<f64>,
        b_sub: Vec<f64>,
        const_term: f64,
    },
}

/// Precomputed prior-bank state for mixture scoring; see
/// [`ModelSpec::prepare_bank`].
#[derive(Debug, Clone)]
pub struct PriorBank {
    kind: BankKind,
    size: usize,
}

impl PriorBank {
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }
}

#[derive(Debug, Clone)]
enum BankKind {
    LinearGaussian {
        v: DMatrix<f64>,
        half_q: Vec<f64>,
        base: f64,
    },
    Epidemic {
        ln_p: DMatrix<f64>,
        rates: Vec<f64>,
    },
    SpatialPoisson {
        ln_rate: DMatrix<f64>,
        rate_sums: Vec<f64>,
    },
}

/// Draw `m_joint` paired `(x, y)` samples and an independent prior bank of
/// size `m_bank`, deterministically from `seed`.
pub fn sample_joint(
    spec: &ModelSpec,
    m_joint: usize,
    m_bank: usize,
    seed: u64,
) -> Result<JointSampleSet> {
    if m_joint < 2 {
        return Err(Error::InsufficientSamples {
            got: m_joint,
            need: 2,
        });
    }
    if m_bank < 1 {
        return Err(Error::InsufficientSamples {
            got: m_bank,
            need: 1,
        });
    }
    let n = spec.n();
    let d = spec.d();
    let mut rng_joint = stream_rng(seed, "sample_joint.joint", 0);
    let mut x = DMatrix::zeros(m_joint, d);
    let mut y = DMatrix::zeros(m_joint, n);
    for r in 0..m_joint {
        let xr = spec.sample_prior(&mut rng_joint);
        let yr = spec.sample_likelihood(&xr, &mut rng_joint)?;
        for c in 0..d {
            x[(r, c)] = xr[c];
        }
        for c in 0..n {
            y[(r, c)] = yr[c];
        }
    }
    let mut rng_bank = stream_rng(seed, "sample_joint.bank", 0);
    let mut prior_bank = DMatrix::zeros(m_bank, d);
    for r in 0..m_bank {
        let xr = spec.sample_prior(&mut rng_bank);
        for c in 0..d {
            prior_bank[(r, c)] = xr[c];
        }
    }
    Ok(JointSampleSet {
        x,
        y,
        prior_bank,
        seed,
    })
}
