//! Epidemic transmission model: binomial counts of infected individuals at
//! equispaced observation times, with a log-normal infection-rate prior.

use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};

/// Population size, horizon, observation grid, and log-normal prior
/// parameters. The observation times are `t_i = i·T_end/n`, which keeps
/// every infection probability strictly positive.
#[derive(Debug, Clone)]
pub struct EpidemicParams {
    population: u64,
    t_end: f64,
    n: usize,
    mu_x: f64,
    sigma_x: f64,
    times: Vec<f64>,
    ln_gamma_pop_plus_1: f64,
}

impl EpidemicParams {
    pub fn new(population: u64, t_end: f64, n: usize, mu_x: f64, sigma_x: f64) -> Result<Self> {
        if population == 0 {
            return Err(Error::Config("population must be at least 1".into()));
        }
        if t_end <= 0.0 {
            return Err(Error::Config("t_end must be positive".into()));
        }
        if n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if sigma_x <= 0.0 {
            return Err(Error::Config("sigma_x must be positive".into()));
        }
        let times = (1..=n).map(|i| i as f64 * t_end / n as f64).collect();
        Ok(Self {
            population,
            t_end,
            n,
            mu_x,
            sigma_x,
            times,
            ln_gamma_pop_plus_1: ln_gamma(population as f64 + 1.0),
        })
    }

    /// Benchmark defaults: N = 100, T_end = 5, n = 50, log X ~ N(0, 0.25²).
    pub fn defaults() -> Self {
        Self::new(100, 5.0, 50, 0.0, 0.25).expect("defaults are valid")
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu_x(&self) -> f64 {
        self.mu_x
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Infection probability `p_i = 1 − e^{−x t_i}`.
    pub fn infection_prob(&self, rate: f64, i: usize) -> f64 {
        -(-rate * self.times[i]).exp_m1()
    }

    fn check_domain(&self, y_i: f64, rate: f64) -> Result<()> {
        if rate < 0.0 || !rate.is_finite() {
            return Err(Error::Domain(format!(
                "infection rate must be nonnegative, got {rate}"
            )));
        }
        let pop = self.population as f64;
        // gamma-extension domain: both gamma arguments must stay positive
        if !y_i.is_finite() || y_i <= -1.0 || y_i >= pop + 1.0 {
            return Err(Error::Domain(format!(
                "count {y_i} outside the continuous extension range (-1, {})",
                pop + 1.0
            )));
        }
        Ok(())
    }

    /// Log mass of the count at time `t_i`, with the gamma-function
    /// continuous extension in `y_i`. `log(1−p_i)` is evaluated as `−x t_i`
    /// exactly, avoiding cancellation for large `x t_i`.
    pub fn loglik_coord(&self, i: usize, y_i: f64, rate: f64) -> Result<f64> {
        self.check_domain(y_i, rate)?;
        let pop = self.population as f64;
        let t = self.times[i];
        let ln_p = (-(-rate * t).exp_m1()).ln();
        let binom = self.ln_gamma_pop_plus_1 - ln_gamma(y_i + 1.0) - ln_gamma(pop - y_i + 1.0);
        let success = if y_i == 0.0 { 0.0 } else { y_i * ln_p };
        Ok(binom + success + (pop - y_i) * (-rate * t))
    }

    /// `Ψ(N−y_i+1) − Ψ(y_i+1) + log p_i − log(1−p_i)`.
    pub fn grad_coord(&self, i: usize, y_i: f64, rate: f64) -> Result<f64> {
        self.check_domain(y_i, rate)?;
        let pop = self.population as f64;
        let t = self.times[i];
        let ln_p = (-(-rate * t).exp_m1()).ln();
        Ok(digamma(pop - y_i + 1.0) - digamma(y_i + 1.0) + ln_p + rate * t)
    }
}
