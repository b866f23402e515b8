//! Monte Carlo estimation of the posterior score `∇_y log π(x|y)` and
//! assembly of its expected outer-product matrix.
//!
//! The marginal score `∇ log π_Y(y)` is estimated over a recycled prior
//! bank. The ratio `∇π̂_Y/π̂_Y` is computed as a softmax-weighted average of
//! per-component log-likelihood gradients through log-sum-exp, which is
//! algebraically identical but does not underflow for count likelihoods.

use nalgebra::{DMatrix, DVector};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::mi::log_sum_exp;
use crate::models::{JointSampleSet, ModelSpec, PriorBank};
use crate::numerics::SymMatrix;

/// The matrix `F ≈ E[∇_y log π(x|y) ∇_y log π(x|y)ᵀ]`, symmetric PSD by
/// construction as an average of outer products.
#[derive(Debug, Clone)]
pub struct ScoreMatrix {
    matrix: SymMatrix,
    joint_samples: usize,
    bank_size: usize,
}

impl ScoreMatrix {
    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> SymMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn joint_samples(&self) -> usize {
        self.joint_samples
    }

    pub fn bank_size(&self) -> usize {
        self.bank_size
    }
}

/// Softmax over log weights via max subtraction. `None` when every weight
/// is zero.
pub(crate) fn softmax_weights(log_weights: &[f64]) -> Option<Vec<f64>> {
    let lse = log_sum_exp(log_weights);
    if lse == f64::NEG_INFINITY {
        return None;
    }
    Some(log_weights.iter().map(|lw| (lw - lse).exp()).collect())
}

/// Mixture-score estimate `∇ log π̂_Y(y)` over the prior bank.
pub fn mixture_score(
    spec: &ModelSpec,
    y: &DVector<f64>,
    bank: &PriorBank,
    counters: &mut OpCounters,
) -> Result<DVector<f64>> {
    mixture_score_inner(spec, y, bank, counters, None)
}

fn mixture_score_inner(
    spec: &ModelSpec,
    y: &DVector<f64>,
    bank: &PriorBank,
    counters: &mut OpCounters,
    sample_index: Option<usize>,
) -> Result<DVector<f64>> {
    let mut logliks = Vec::with_capacity(bank.len());
    spec.bank_logliks(bank, y, &mut logliks, counters)?;
    let weights = softmax_weights(&logliks).ok_or(Error::DegenerateMixture { sample_index })?;
    spec.bank_weighted_grad(bank, y, &weights, counters)
}

/// Estimated posterior score
/// `∇_y log π(y|x) − ∇ log π̂_Y(y)` at one joint sample.
pub fn grad_log_posterior_hat(
    spec: &ModelSpec,
    x: &DVector<f64>,
    y: &DVector<f64>,
    bank: &PriorBank,
    counters: &mut OpCounters,
) -> Result<DVector<f64>> {
    let own = spec.grad_y_loglik(y, x)?;
    counters.model_evals += 1;
    let marginal = mixture_score_inner(spec, y, bank, counters, None)?;
    Ok(own - marginal)
}

/// `(1/M) Σ v_i v_iᵀ`, mirrored to be exactly symmetric.
pub(crate) fn mean_outer_product(vectors: &[DVector<f64>]) -> Result<SymMatrix> {
    let m = vectors.len();
    if m == 0 {
        return Err(Error::InsufficientSamples { got: 0, need: 1 });
    }
    let n = vectors[0].len();
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for v in vectors {
        for i in 0..n {
            let vi = v[i];
            for j in i..n {
                acc[(i, j)] += vi * v[j];
            }
        }
    }
    acc /= m as f64;
    for i in 0..n {
        for j in 0..i {
            acc[(i, j)] = acc[(j, i)];
        }
    }
    SymMatrix::from_matrix(acc)
}

/// Build the score matrix from joint samples, recycling the prior bank for
/// every sample.
pub fn build_score_matrix(spec: &ModelSpec, samples: &JointSampleSet) -> Result<ScoreMatrix> {
    let mut scratch = OpCounters::new();
    build_score_matrix_counted(spec, samples, &mut scratch)
}

/// Counted variant of [`build_score_matrix`].
pub fn build_score_matrix_counted(
    spec: &ModelSpec,
    samples: &JointSampleSet,
    counters: &mut OpCounters,
) -> Result<ScoreMatrix> {
    let bank = spec.prepare_bank(&samples.prior_bank)?;
    let m = samples.joint_len();
    let mut scores = Vec::with_capacity(m);
    for r in 0..m {
        let x = samples.x_row(r);
        let y = samples.y_row(r);
        let own = spec.grad_y_loglik(&y, &x)?;
        counters.model_evals += 1;
        let marginal = mixture_score_inner(spec, &y, &bank, counters, Some(r))?;
        scores.push(own - marginal);
    }
    Ok(ScoreMatrix {
        matrix: mean_outer_product(&scores)?,
        joint_samples: m,
        bank_size: samples.bank_len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        sample_joint, EpidemicParams, LinearGaussianParams, ModelSpec, SpatialPoissonParams,
    };
    use approx::assert_relative_eq;

    #[test]
    fn single_component_bank_cancels_exactly() {
        // With a one-element bank equal to the conditioning parameter, the
        // mixture score equals the conditional score and the posterior-score
        // estimate vanishes.
        let spec = ModelSpec::Epidemic(EpidemicParams::new(40, 4.0, 5, 0.0, 0.3).unwrap());
        let samples = sample_joint(&spec, 2, 1, 11).unwrap();
        let x = samples.x_row(0);
        let y = samples.y_row(0);
        let bank_x = DMatrix::from_row_slice(1, 1, &[x[0]]);
        let bank = spec.prepare_bank(&bank_x).unwrap();
        let mut c = OpCounters::new();
        let g = grad_log_posterior_hat(&spec, &x, &y, &bank, &mut c).unwrap();
        assert!(g.amax() < 1e-10, "residual {g:?}");
        assert_eq!(c.model_evals, 3); // own gradient + 1 density + 1 gradient
    }

    #[test]
    fn mean_outer_product_rank_one() {
        let e1 = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let f = mean_outer_product(&[e1.clone(), e1.clone(), e1]).unwrap();
        let mut expect = DMatrix::zeros(3, 3);
        expect[(0, 0)] = 1.0;
        assert_eq!(f.matrix(), &expect);
    }

    #[test]
    fn score_matrix_is_symmetric_psd_for_all_models() {
        let specs = vec![
            ModelSpec::LinearGaussian(LinearGaussianParams::with_kernel_defaults(5, 3).unwrap()),
            ModelSpec::Epidemic(EpidemicParams::new(60, 5.0, 6, 0.0, 0.25).unwrap()),
            ModelSpec::SpatialPoisson(SpatialPoissonParams::new(2, 2.0).unwrap()),
        ];
        for (seed, spec) in specs.into_iter().enumerate() {
            let samples = sample_joint(&spec, 60, 40, seed as u64).unwrap();
            let f = build_score_matrix(&spec, &samples).unwrap();
            let m = f.matrix().matrix();
            assert_eq!(m, &m.transpose());
            let eigs = m.clone().symmetric_eigen().eigenvalues;
            let floor = -1e-10 * m.trace();
            assert!(
                eigs.iter().all(|e| *e >= floor),
                "{}: eigenvalues {eigs:?}",
                spec.name()
            );
        }
    }

    /// The softmax-weighted form must agree with the direct density-ratio
    /// form `∇π̂_Y/π̂_Y` on a bank small enough to evaluate in raw space.
    #[test]
    fn softmax_form_equals_ratio_form() {
        let spec = ModelSpec::Epidemic(EpidemicParams::new(20, 3.0, 3, 0.0, 0.4).unwrap());
        let y = DVector::from_column_slice(&[3.0, 8.0, 11.0]);
        let rates = [0.6, 1.4];
        let bank_x = DMatrix::from_row_slice(2, 1, &[rates[0], rates[1]]);
        let bank = spec.prepare_bank(&bank_x).unwrap();
        let mut c = OpCounters::new();
        let softmax_form = mixture_score(&spec, &y, &bank, &mut c).unwrap();

        // ratio form with raw densities
        let mut num = DVector::zeros(3);
        let mut den = 0.0;
        for r in rates {
            let x = DVector::from_element(1, r);
            let density = spec.loglik(&y, &x).unwrap().exp();
            num += spec.grad_y_loglik(&y, &x).unwrap() * density;
            den += density;
        }
        let ratio_form = num / den;
        for i in 0..3 {
            assert_relative_eq!(softmax_form[i], ratio_form[i], max_relative = 1e-12);
        }
    }

    /// Finite differences of the explicit mixture `log Σ_j π(y|x^j) − log m`
    /// as the independent oracle for the mixture score.
    #[test]
    fn mixture_score_matches_mixture_finite_differences() {
        let spec = ModelSpec::SpatialPoisson(SpatialPoissonParams::new(2, 2.0).unwrap());
        let samples = sample_joint(&spec, 2, 6, 19).unwrap();
        let y = samples.y_row(0);
        let bank = spec.prepare_bank(&samples.prior_bank).unwrap();
        let mut c = OpCounters::new();
        let score = mixture_score(&spec, &y, &bank, &mut c).unwrap();

        let mixture_logdensity = |yv: &DVector<f64>| -> f64 {
            let lls: Vec<f64> = (0..samples.bank_len())
                .map(|j| {
                    let xj = samples.prior_bank.row(j).transpose();
                    spec.loglik(yv, &xj).unwrap()
                })
                .collect();
            log_sum_exp(&lls) - (samples.bank_len() as f64).ln()
        };
        for i in 0..y.len() {
            let h = 1e-5 * (1.0 + y[i].abs());
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[i] += h;
            ym[i] -= h;
            let fd = (mixture_logdensity(&yp) - mixture_logdensity(&ym)) / (2.0 * h);
            if score[i].abs() > 1e-8 {
                assert_relative_eq!(score[i], fd, max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn degenerate_bank_is_reported_with_sample_index() {
        // A zero infection rate gives zero likelihood to any positive count.
        let spec = ModelSpec::Epidemic(EpidemicParams::new(30, 3.0, 3, 0.0, 0.3).unwrap());
        let mut samples = sample_joint(&spec, 3, 2, 23).unwrap();
        samples.y[(1, 0)] = 5.0; // ensure a positive count in sample 1
        samples.prior_bank = DMatrix::from_row_slice(2, 1, &[0.0, 0.0]);
        let err = build_score_matrix(&spec, &samples).unwrap_err();
        match err {
            Error::DegenerateMixture { sample_index } => {
                assert!(sample_index.is_some());
            }
            other => panic!("expected DegenerateMixture, got {other:?}"),
        }
    }

    /// Regression of log error against log sample count: the max-norm error
    /// of the estimated score matrix decays at roughly the square-root rate
    /// as the joint-sample and bank budgets grow together.
    #[test]
    fn linear_gaussian_score_matrix_error_decays_at_root_rate() {
        use crate::models::{exponential_kernel, unit_grid};
        let n = 3;
        let params = LinearGaussianParams::from_parts(
            DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.2 }),
            exponential_kernel(&unit_grid(n), 1.0, 1.0 / n as f64).unwrap(),
            exponential_kernel(&unit_grid(n), 1.0, 1.0 / n as f64).unwrap(),
        )
        .unwrap();
        let exact = params.exact_posterior_quantities().unwrap().f_exact;
        let scale = exact.matrix().amax();
        let spec = ModelSpec::LinearGaussian(params);

        let budgets = [100usize, 1000, 10_000];
        let mut log_m = Vec::new();
        let mut log_err = Vec::new();
        for (i, &m) in budgets.iter().enumerate() {
            let samples = sample_joint(&spec, m, m, 40 + i as u64).unwrap();
            let f = build_score_matrix(&spec, &samples).unwrap();
            let err = (f.matrix().matrix() - exact.matrix()).amax() / scale;
            log_m.push((m as f64).ln());
            log_err.push(err.ln());
        }
        assert!(
            log_err[0] > log_err[1] && log_err[1] > log_err[2],
            "errors not decreasing: {log_err:?}"
        );
        // least-squares slope over the three points
        let mx = log_m.iter().sum::<f64>() / 3.0;
        let my = log_err.iter().sum::<f64>() / 3.0;
        let slope = log_m
            .iter()
            .zip(&log_err)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / log_m.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!(
            (-0.85..=-0.25).contains(&slope),
            "observed decay rate {slope} not near -1/2"
        );
    }

    /// Convergence toward the closed-form score matrix for the
    /// linear-Gaussian model (small-scale smoke version of the identity).
    /// Prior and noise scales are comparable here; a noise scale much
    /// narrower than the prior starves the bank of effective components.
    #[test]
    fn linear_gaussian_score_matrix_approaches_exact() {
        use crate::models::{exponential_kernel, unit_grid};
        let n = 3;
        let params = LinearGaussianParams::from_parts(
            DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.2 }),
            exponential_kernel(&unit_grid(n), 1.0, 1.0 / n as f64).unwrap(),
            exponential_kernel(&unit_grid(n), 1.0, 1.0 / n as f64).unwrap(),
        )
        .unwrap();
        let exact = params.exact_posterior_quantities().unwrap().f_exact;
        let spec = ModelSpec::LinearGaussian(params);
        let samples = sample_joint(&spec, 3000, 3000, 31).unwrap();
        let f = build_score_matrix(&spec, &samples).unwrap();
        let scale = exact.matrix().amax();
        let err = (f.matrix().matrix() - exact.matrix()).amax() / scale;
        assert!(err < 0.15, "relative max error {err}");
    }
}
