//! Mutual-information estimators over a design subset: the closed-form
//! linear-Gaussian expression and nested Monte Carlo for arbitrary models.

use nalgebra::DVector;

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::numerics::{logdet_psd, select_submatrix, Design, SymMatrix};
use crate::stream::stream_rng;

/// Which estimator produced an [`MIEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    ClosedForm,
    Nmc,
}

/// A mutual-information value in nats with its standard error.
#[derive(Debug, Clone)]
pub struct MIEstimate {
    pub value: f64,
    pub stderr: f64,
    pub estimator: Estimator,
    /// `(M_in, M_out)` for the nested estimator.
    pub budgets: Option<(usize, usize)>,
}

/// `log Σ exp(v_i)` with the max-subtraction trick.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Closed-form linear-Gaussian MI with the observation and noise covariances
/// cached, for repeated evaluation over many subsets.
#[derive(Debug, Clone)]
pub struct ClosedFormMi {
    sigma_y: SymMatrix,
    sigma_eps: SymMatrix,
}

impl ClosedFormMi {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let params = spec.linear_gaussian().ok_or(Error::UnsupportedModel {
            required: "linear_gaussian",
            got: spec.name().to_string(),
        })?;
        Ok(Self {
            sigma_y: params.exact_posterior_quantities()?.sigma_y,
            sigma_eps: params.sigma_eps().clone(),
        })
    }

    pub fn from_covariances(sigma_y: SymMatrix, sigma_eps: SymMatrix) -> Self {
        Self { sigma_y, sigma_eps }
    }

    /// `½ log det Σ_{Y_A} − ½ log det Σ_{ε_A}`; zero for the empty set.
    pub fn evaluate(&self, indices: &[usize]) -> Result<f64> {
        if indices.is_empty() {
            return Ok(0.0);
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let y_block =
            SymMatrix::from_matrix(select_submatrix(self.sigma_y.matrix(), &sorted, &sorted)?)?;
        let eps_block =
            SymMatrix::from_matrix(select_submatrix(self.sigma_eps.matrix(), &sorted, &sorted)?)?;
        Ok(0.5 * (logdet_psd(&y_block)? - logdet_psd(&eps_block)?))
    }
}

/// Exact MI for the linear-Gaussian model. The empty design returns zero.
pub fn mi_closed_form(spec: &ModelSpec, design: &Design) -> Result<MIEstimate> {
    let cf = ClosedFormMi::new(spec)?;
    Ok(MIEstimate {
        value: cf.evaluate(design.indices())?,
        stderr: 0.0,
        estimator: Estimator::ClosedForm,
        budgets: None,
    })
}

/// Options for the nested estimator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NmcOptions {
    /// Share one inner prior bank across all outer samples instead of
    /// redrawing it per outer sample. Cheaper, slightly correlated.
    pub recycle_inner: bool,
}

/// Nested-Monte-Carlo MI over the design's coordinates:
/// `Î = mean_j [ log π(y^j_A|x^j) − logmeanexp_i log π(y^j_A|x̃^i) ]`
/// with fresh joint draws `(x^j, y^j)` and prior draws `x̃^i`.
pub fn mi_nmc(
    spec: &ModelSpec,
    design: &Design,
    m_in: usize,
    m_out: usize,
    seed: u64,
    options: NmcOptions,
) -> Result<MIEstimate> {
    let mut scratch = OpCounters::new();
    mi_nmc_counted(spec, design, m_in, m_out, seed, options, &mut scratch)
}

/// Counted variant of [`mi_nmc`].
pub fn mi_nmc_counted(
    spec: &ModelSpec,
    design: &Design,
    m_in: usize,
    m_out: usize,
    seed: u64,
    options: NmcOptions,
    counters: &mut OpCounters,
) -> Result<MIEstimate> {
    if m_in < 2 || m_out < 2 {
        return Err(Error::Config(format!(
            "nested estimator needs inner and outer budgets of at least 2, got ({m_in}, {m_out})"
        )));
    }
    if design.is_empty() {
        return Err(Error::Config(
            "nested estimator needs a nonempty design".into(),
        ));
    }
    counters.mi_evals += 1;
    let indices = design.sorted_indices();

    let mut rng_joint = stream_rng(seed, "mi_nmc.joint", 0);
    let recycled_bank: Option<Vec<DVector<f64>>> = if options.recycle_inner {
        let mut rng = stream_rng(seed, "mi_nmc.inner", 0);
        Some((0..m_in).map(|_| spec.sample_prior(&mut rng)).collect())
    } else {
        None
    };

    let mut terms = Vec::with_capacity(m_out);
    let mut inner_lls = vec![0.0; m_in];
    for j in 0..m_out {
        let x = spec.sample_prior(&mut rng_joint);
        let y = spec.sample_likelihood(&x, &mut rng_joint)?;
        let profile = spec.loglik_profile(&y, &indices)?;
        let own = spec.profile_loglik(&profile, &x);
        match &recycled_bank {
            Some(bank) => {
                for (i, xt) in bank.iter().enumerate() {
                    inner_lls[i] = spec.profile_loglik(&profile, xt);
                }
            }
            None => {
                let mut rng_inner = stream_rng(seed, "mi_nmc.inner", 1 + j as u64);
                for ll in inner_lls.iter_mut() {
                    let xt = spec.sample_prior(&mut rng_inner);
                    *ll = spec.profile_loglik(&profile, &xt);
                }
            }
        }
        counters.model_evals += 1 + m_in as u64;
        let lme = log_sum_exp(&inner_lls);
        if lme == f64::NEG_INFINITY {
            return Err(Error::DegenerateMixture {
                sample_index: Some(j),
            });
        }
        terms.push(own - (lme - (m_in as f64).ln()));
    }

    let mean = terms.iter().sum::<f64>() / m_out as f64;
    let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (m_out as f64 - 1.0);
    Ok(MIEstimate {
        value: mean,
        stderr: (var / m_out as f64).sqrt(),
        estimator: Estimator::Nmc,
        budgets: Some((m_in, m_out)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LinearGaussianParams, ModelSpec};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn scalar_model() -> ModelSpec {
        ModelSpec::LinearGaussian(
            LinearGaussianParams::from_parts(
                DMatrix::from_element(1, 1, 1.0),
                SymMatrix::identity(1),
                SymMatrix::identity(1),
            )
            .unwrap(),
        )
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_relative_eq!(
            log_sum_exp(&[1000.0, 1000.0]),
            1000.0 + 2.0f64.ln(),
            max_relative = 1e-14
        );
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        assert_relative_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn scalar_closed_form_is_half_log_two() {
        let spec = scalar_model();
        let design = Design::from_indices(1, [0]).unwrap();
        let mi = mi_closed_form(&spec, &design).unwrap();
        assert_relative_eq!(mi.value, 0.5 * 2.0f64.ln(), max_relative = 1e-14);
        assert_eq!(mi.stderr, 0.0);
        assert_eq!(mi.estimator, Estimator::ClosedForm);
    }

    #[test]
    fn uninformative_model_has_zero_mi() {
        let spec = ModelSpec::LinearGaussian(
            LinearGaussianParams::from_parts(
                DMatrix::zeros(4, 2),
                SymMatrix::identity(2),
                SymMatrix::identity(4),
            )
            .unwrap(),
        );
        for idx in [vec![0], vec![1, 3], vec![0, 1, 2, 3]] {
            let design = Design::from_indices(4, idx).unwrap();
            let mi = mi_closed_form(&spec, &design).unwrap();
            assert!(mi.value.abs() < 1e-12);
        }
        let empty = Design::empty(4);
        assert_eq!(mi_closed_form(&spec, &empty).unwrap().value, 0.0);
    }

    #[test]
    fn closed_form_telescopes_along_any_order() {
        let spec =
            ModelSpec::LinearGaussian(LinearGaussianParams::with_kernel_defaults(6, 4).unwrap());
        let cf = ClosedFormMi::new(&spec).unwrap();
        let order = [3usize, 0, 5, 1, 4, 2];
        let mut sum_of_gains = 0.0;
        let mut chosen: Vec<usize> = Vec::new();
        for &i in &order {
            let before = cf.evaluate(&chosen).unwrap();
            chosen.push(i);
            let after = cf.evaluate(&chosen).unwrap();
            sum_of_gains += after - before;
        }
        let full = cf.evaluate(&order).unwrap();
        assert!(
            (sum_of_gains - full).abs() < 1e-10,
            "{sum_of_gains} vs {full}"
        );
    }

    #[test]
    fn closed_form_is_monotone_and_order_invariant() {
        let spec =
            ModelSpec::LinearGaussian(LinearGaussianParams::with_kernel_defaults(6, 4).unwrap());
        let cf = ClosedFormMi::new(&spec).unwrap();
        let base = vec![1usize, 4];
        let mi_base = cf.evaluate(&base).unwrap();
        for i in [0usize, 2, 3, 5] {
            let mut bigger = base.clone();
            bigger.push(i);
            assert!(cf.evaluate(&bigger).unwrap() >= mi_base - 1e-10);
        }
        assert_relative_eq!(cf.evaluate(&[4, 1]).unwrap(), mi_base, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_rejects_non_gaussian_models() {
        let spec = ModelSpec::Epidemic(crate::models::EpidemicParams::defaults());
        let design = Design::from_indices(50, [0]).unwrap();
        assert!(matches!(
            mi_closed_form(&spec, &design),
            Err(Error::UnsupportedModel { .. })
        ));
    }

    #[test]
    fn nmc_validates_budgets_and_design() {
        let spec = scalar_model();
        let design = Design::from_indices(1, [0]).unwrap();
        assert!(mi_nmc(&spec, &design, 1, 10, 0, NmcOptions::default()).is_err());
        assert!(mi_nmc(&spec, &design, 10, 1, 0, NmcOptions::default()).is_err());
        let empty = Design::empty(1);
        assert!(mi_nmc(&spec, &empty, 10, 10, 0, NmcOptions::default()).is_err());
    }

    #[test]
    fn nmc_is_deterministic_per_seed() {
        let spec = scalar_model();
        let design = Design::from_indices(1, [0]).unwrap();
        let a = mi_nmc(&spec, &design, 50, 50, 7, NmcOptions::default()).unwrap();
        let b = mi_nmc(&spec, &design, 50, 50, 7, NmcOptions::default()).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.stderr, b.stderr);
        let c = mi_nmc(&spec, &design, 50, 50, 8, NmcOptions::default()).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn nmc_matches_closed_form_on_scalar_model() {
        let spec = scalar_model();
        let design = Design::from_indices(1, [0]).unwrap();
        let truth = 0.5 * 2.0f64.ln();
        let est = mi_nmc(&spec, &design, 2000, 400, 3, NmcOptions::default()).unwrap();
        assert!(
            (est.value - truth).abs() < 3.0 * est.stderr + 0.01,
            "estimate {} ± {} vs {truth}",
            est.value,
            est.stderr
        );
    }

    #[test]
    fn nmc_near_zero_for_uninformative_model() {
        let spec = ModelSpec::LinearGaussian(
            LinearGaussianParams::from_parts(
                DMatrix::zeros(3, 2),
                SymMatrix::identity(2),
                SymMatrix::identity(3),
            )
            .unwrap(),
        );
        let design = Design::from_indices(3, [0, 2]).unwrap();
        let est = mi_nmc(&spec, &design, 500, 200, 5, NmcOptions::default()).unwrap();
        assert!(
            est.value.abs() < 3.0 * est.stderr + 1e-3,
            "estimate {} ± {}",
            est.value,
            est.stderr
        );
    }

    /// Smoke-level statistical check on the full epidemic design: the
    /// estimate is finite with a reported standard error, and two seeds
    /// agree within their combined uncertainty.
    #[test]
    fn nmc_full_epidemic_design_is_seed_stable() {
        let spec = ModelSpec::Epidemic(crate::models::EpidemicParams::defaults());
        let design = Design::from_indices(50, 0..50).unwrap();
        let a = mi_nmc(&spec, &design, 2000, 300, 1, NmcOptions::default()).unwrap();
        let b = mi_nmc(&spec, &design, 2000, 300, 2, NmcOptions::default()).unwrap();
        for est in [&a, &b] {
            assert!(est.value.is_finite());
            assert!(est.stderr > 0.0);
            assert_eq!(est.budgets, Some((2000, 300)));
        }
        let combined = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!(
            (a.value - b.value).abs() < 6.0 * combined,
            "{} vs {} (combined stderr {combined})",
            a.value,
            b.value
        );
    }

    #[test]
    fn nmc_recycled_inner_bank_still_consistent() {
        let spec = scalar_model();
        let design = Design::from_indices(1, [0]).unwrap();
        let truth = 0.5 * 2.0f64.ln();
        let est = mi_nmc(
            &spec,
            &design,
            2000,
            400,
            9,
            NmcOptions {
                recycle_inner: true,
            },
        )
        .unwrap();
        assert!((est.value - truth).abs() < 3.0 * est.stderr + 0.02);
    }

    /// The nested estimator's bias shrinks as the inner budget grows. Each
    /// budget reuses the same seeds, so outer-sampling noise is paired and
    /// cancels in the comparisons; what remains is the inner-budget bias,
    /// which pushes the estimate up and decays with `M_in`.
    #[test]
    fn nmc_bias_decreases_with_inner_budget() {
        let spec = scalar_model();
        let design = Design::from_indices(1, [0]).unwrap();
        let truth = 0.5 * 2.0f64.ln();
        let mut mean_bias = Vec::new();
        for m_in in [100usize, 1000, 10000] {
            let mut biases = Vec::new();
            for seed in 0..20u64 {
                let est = mi_nmc(&spec, &design, m_in, 200, seed, NmcOptions::default()).unwrap();
                biases.push(est.value - truth);
            }
            mean_bias.push(biases.iter().sum::<f64>() / biases.len() as f64);
        }
        assert!(
            mean_bias[0] > mean_bias[1] && mean_bias[0] > mean_bias[2],
            "bias sequence {mean_bias:?}"
        );
    }
}
