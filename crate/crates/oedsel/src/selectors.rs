//! The five selection strategies, each producing a design of cardinality `k`
//! with per-step records and operation counters.
//!
//! Ties are always broken toward the lowest original candidate index, and
//! all reported indices are in original coordinates regardless of how the
//! working matrices shrink.

use std::time::Instant;

use itertools::Itertools;
use nalgebra::DMatrix;

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::mi::{mi_nmc_counted, ClosedFormMi, NmcOptions};
use crate::models::{JointSampleSet, ModelSpec};
use crate::numerics::{
    sample_covariance, schur_complement_counted, select_submatrix, Design, IndexMap, SymMatrix,
};
use crate::score::build_score_matrix_counted;
use crate::stream::{derive_seed, stream_rng};

/// Hard cap on the number of subsets the exhaustive selector will evaluate.
pub const EXHAUSTIVE_BUDGET: u128 = 1_000_000;

/// One greedy step: the chosen candidate, its criterion value, and the wall
/// time the step took.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub index: usize,
    pub criterion: f64,
    pub wall_time_ms: f64,
}

/// A selected design with its per-step trace and operation counters.
#[derive(Debug, Clone)]
pub struct SelectorReport {
    pub design: Design,
    pub per_step: Vec<StepRecord>,
    pub counters: OpCounters,
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "cardinality k = {k} must satisfy 1 <= k <= n = {n}"
        )));
    }
    Ok(())
}

/// `diag(F·S)` as row-by-row dot products, never a full matrix product.
pub(crate) fn diag_product(f: &SymMatrix, s: &SymMatrix) -> Vec<f64> {
    let m = f.dim();
    let mut diag = vec![0.0; m];
    for p in 0..m {
        let mut acc = 0.0;
        for q in 0..m {
            acc += f[(p, q)] * s[(q, p)];
        }
        diag[p] = acc;
    }
    diag
}

fn remove_row_col(m: &SymMatrix, pos: usize) -> SymMatrix {
    let keep: Vec<usize> = (0..m.dim()).filter(|&i| i != pos).collect();
    let sub = select_submatrix(m.matrix(), &keep, &keep).expect("positions in range");
    SymMatrix::from_matrix(sub).expect("submatrix of a symmetric matrix")
}

fn lsig_core(
    f: &SymMatrix,
    s: &SymMatrix,
    k: usize,
    counters: &mut OpCounters,
) -> Result<(Design, Vec<StepRecord>)> {
    let n = f.dim();
    if s.dim() != n {
        return Err(Error::Config(format!(
            "score matrix is {n}x{n} but covariance is {}x{0}",
            s.dim()
        )));
    }
    check_k(n, k)?;

    let mut map = IndexMap::full(n);
    let mut f_cur = f.clone();
    let mut s_cur = s.clone();
    let mut design = Design::empty(n);
    let mut per_step = Vec::with_capacity(k);

    for _ in 0..k {
        let start = Instant::now();
        let diag = diag_product(&f_cur, &s_cur);
        // strict '>' keeps the earliest maximum; surviving positions are in
        // ascending original order, so ties resolve to the lowest index
        let mut best_pos = 0;
        for (p, v) in diag.iter().enumerate() {
            if *v > diag[best_pos] {
                best_pos = p;
            }
        }
        let chosen = map.original(best_pos);
        design.push(chosen)?;
        per_step.push(StepRecord {
            index: chosen,
            criterion: diag[best_pos],
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if design.len() == k {
            break;
        }
        f_cur = remove_row_col(&f_cur, best_pos);
        map.remove_original(chosen).expect("chosen index survives");
        // recondition the original covariance on everything selected so far
        s_cur = schur_complement_counted(s, design.indices(), counters).map_err(|e| {
            Error::PartialSelection {
                partial: design.indices().to_vec(),
                source: Box::new(e),
            }
        })?;
    }
    Ok((design, per_step))
}

/// Greedy selection by the largest diagonal entry of `F·S`, with `F` shrunk
/// and `S` reconditioned by Schur complement after every pick.
pub fn lsig_from_matrices(f: &SymMatrix, s: &SymMatrix, k: usize) -> Result<SelectorReport> {
    let mut counters = OpCounters::new();
    let (design, per_step) = lsig_core(f, s, k, &mut counters)?;
    Ok(SelectorReport {
        design,
        per_step,
        counters,
    })
}

/// Sample-based selector: estimates the score matrix from the joint samples
/// and the covariance from the observation draws, then runs the greedy loop.
pub fn select_lsig(spec: &ModelSpec, samples: &JointSampleSet, k: usize) -> Result<SelectorReport> {
    let mut counters = OpCounters::new();
    let f = build_score_matrix_counted(spec, samples, &mut counters)?;
    let s = sample_covariance(&samples.y)?;
    let (design, per_step) = lsig_core(f.matrix(), &s, k, &mut counters)?;
    Ok(SelectorReport {
        design,
        per_step,
        counters,
    })
}

/// Exact-matrix variant for the linear-Gaussian model: plugs the closed-form
/// score matrix and observation covariance into the greedy loop.
pub fn select_lsig_exact(spec: &ModelSpec, k: usize) -> Result<SelectorReport> {
    let exact = spec.exact_posterior_quantities()?;
    let mut counters = OpCounters::new();
    let (design, per_step) = lsig_core(&exact.f_exact, &exact.sigma_y, k, &mut counters)?;
    Ok(SelectorReport {
        design,
        per_step,
        counters,
    })
}

/// Log-determinant with the jitter-once policy of the Schur kernel, for
/// possibly ill-conditioned estimated blocks.
fn logdet_jittered(m: &DMatrix<f64>, indices: &[usize], counters: &mut OpCounters) -> Result<f64> {
    let chol = match crate::numerics::cholesky_counted(m, counters) {
        Ok(l) => l,
        Err(_) => {
            let dim = m.nrows();
            let mean_diag = m.diagonal().iter().sum::<f64>() / dim as f64;
            let jittered = m + DMatrix::identity(dim, dim) * (1e-10 * mean_diag);
            crate::numerics::cholesky_counted(&jittered, counters).map_err(|_| {
                Error::DegenerateBlock {
                    indices: indices.to_vec(),
                }
            })?
        }
    };
    Ok(2.0 * (0..m.nrows()).map(|i| chol[(i, i)].ln()).sum::<f64>())
}

fn gauss_core(
    sigma_y: &SymMatrix,
    sigma_y_given_x: &SymMatrix,
    k: usize,
    counters: &mut OpCounters,
) -> Result<(Design, Vec<StepRecord>)> {
    let n = sigma_y.dim();
    if sigma_y_given_x.dim() != n {
        return Err(Error::Config(format!(
            "covariances disagree: {n} vs {}",
            sigma_y_given_x.dim()
        )));
    }
    check_k(n, k)?;

    let mut design = Design::empty(n);
    let mut per_step = Vec::with_capacity(k);
    for _ in 0..k {
        let start = Instant::now();
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            if design.contains(i) {
                continue;
            }
            let mut idx = design.sorted_indices();
            idx.push(i);
            idx.sort_unstable();
            let y_block = select_submatrix(sigma_y.matrix(), &idx, &idx)?;
            let cond_block = select_submatrix(sigma_y_given_x.matrix(), &idx, &idx)?;
            let crit = logdet_jittered(&y_block, &idx, counters)?
                - logdet_jittered(&cond_block, &idx, counters)?;
            if best.is_none_or(|(bv, _)| crit > bv) {
                best = Some((crit, i));
            }
        }
        let (criterion, chosen) = best.expect("at least one candidate remains");
        design.push(chosen)?;
        per_step.push(StepRecord {
            index: chosen,
            criterion,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok((design, per_step))
}

/// Greedy maximization of `log det Σ_{Y_{A∪i}} − log det Σ_{Y_{A∪i}|X}` from
/// explicit covariances. Every candidate is evaluated with a direct
/// factorization of its block.
pub fn gauss_greedy_from_covariances(
    sigma_y: &SymMatrix,
    sigma_y_given_x: &SymMatrix,
    k: usize,
) -> Result<SelectorReport> {
    let mut counters = OpCounters::new();
    let (design, per_step) = gauss_core(sigma_y, sigma_y_given_x, k, &mut counters)?;
    Ok(SelectorReport {
        design,
        per_step,
        counters,
    })
}

/// Gaussian-approximation greedy: both covariances are estimated from the
/// joint samples, with `Σ̂_{Y|X}` obtained by Schur-complementing the
/// parameter block out of the joint sample covariance.
pub fn select_gauss_greedy(
    spec: &ModelSpec,
    samples: &JointSampleSet,
    k: usize,
) -> Result<SelectorReport> {
    let mut counters = OpCounters::new();
    let d = spec.d();
    let n = spec.n();
    let m = samples.joint_len();
    let mut joint = DMatrix::zeros(m, d + n);
    for r in 0..m {
        for c in 0..d {
            joint[(r, c)] = samples.x[(r, c)];
        }
        for c in 0..n {
            joint[(r, d + c)] = samples.y[(r, c)];
        }
    }
    let joint_cov = sample_covariance(&joint)?;
    let x_block: Vec<usize> = (0..d).collect();
    let sigma_y_given_x = schur_complement_counted(&joint_cov, &x_block, &mut counters)?;
    let sigma_y = SymMatrix::from_matrix(select_submatrix(
        joint_cov.matrix(),
        &(d..d + n).collect::<Vec<_>>(),
        &(d..d + n).collect::<Vec<_>>(),
    )?)?;
    let (design, per_step) = gauss_core(&sigma_y, &sigma_y_given_x, k, &mut counters)?;
    Ok(SelectorReport {
        design,
        per_step,
        counters,
    })
}

/// Exact-covariance variant for the linear-Gaussian model, where
/// `Σ_{Y|X} = Σ_ε` and the criterion greedily maximizes the closed-form MI.
pub fn select_gauss_greedy_exact(spec: &ModelSpec, k: usize) -> Result<SelectorReport> {
    let params = spec.linear_gaussian().ok_or(Error::UnsupportedModel {
        required: "linear_gaussian",
        got: spec.name().to_string(),
    })?;
    let sigma_y = params.exact_posterior_quantities()?.sigma_y;
    let mut counters = OpCounters::new();
    let (design, per_step) = gauss_core(&sigma_y, params.sigma_eps(), k, &mut counters)?;
    Ok(SelectorReport {
        design,
        per_step,
        counters,
    })
}

/// Greedy loop over an arbitrary subset-valued estimator: at each step the
/// candidate maximizing `estimate(A ∪ {i})` joins the design. The shared
/// `I(X;Y_A)` term cancels in the incremental gain, so maximizing the joint
/// value yields the same argmax with one fewer estimate per candidate.
fn greedy_by_estimator<E>(
    n: usize,
    k: usize,
    mut estimate: E,
    counters: &mut OpCounters,
) -> Result<(Design, Vec<StepRecord>)>
where
    E: FnMut(&Design, usize, &mut OpCounters) -> Result<f64>,
{
    check_k(n, k)?;
    let mut design = Design::empty(n);
    let mut per_step = Vec::with_capacity(k);
    for _ in 0..k {
        let start = Instant::now();
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            if design.contains(i) {
                continue;
            }
            let value = estimate(&design, i, counters).map_err(|e| Error::PartialSelection {
                partial: design.indices().to_vec(),
                source: Box::new(e),
            })?;
            if best.is_none_or(|(bv, _)| value > bv) {
                best = Some((value, i));
            }
        }
        let (criterion, chosen) = best.expect("candidates remain while step < k <= n");
        design.push(chosen)?;
        per_step.push(StepRecord {
            index: chosen,
            criterion,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok((design, per_step))
}

/// Standard greedy driven by nested-Monte-Carlo MI estimates. Candidates
/// within one step share a derived seed, so they are compared on common
/// random numbers; steps use fresh streams.
pub fn select_nmc_greedy(
    spec: &ModelSpec,
    k: usize,
    m_in: usize,
    m_out: usize,
    seed: u64,
    options: NmcOptions,
) -> Result<SelectorReport> {
    let n = spec.n();
    let mut counters = OpCounters::new();
    let (design, per_step) = greedy_by_estimator(
        n,
        k,
        |design, candidate, counters| {
            let mut trial = design.clone();
            trial.push(candidate)?;
            let step_seed = derive_seed(seed, "nmc_greedy.step", design.len() as u64);
            let est = mi_nmc_counted(spec, &trial, m_in, m_out, step_seed, options, counters)?;
            Ok(est.value)
        },
        &mut counters,
    )?;
    Ok(SelectorReport {
        design,
        per_step,
        counters,
    })
}

/// Greedy driven by the closed-form linear-Gaussian MI; the idealized limit
/// of [`select_nmc_greedy`] used by oracle tests.
pub fn select_closed_form_greedy(spec: &ModelSpec, k: usize) -> Result<SelectorReport> {
    let cf = ClosedFormMi::new(spec)?;
    let mut counters = OpCounters::new();
    let (design, per_step) = greedy_by_estimator(
        spec.n(),
        k,
        |design, candidate, counters| {
            counters.mi_evals += 1;
            let mut idx = design.indices().to_vec();
            idx.push(candidate);
            cf.evaluate(&idx)
        },
        &mut counters,
    )?;
    Ok(SelectorReport {
        design,
        per_step,
        counters,
    })
}

/// Uniform `k`-subset without replacement, deterministic per seed. The
/// design records the draw order.
pub fn select_random(n: usize, k: usize, seed: u64) -> Result<SelectorReport> {
    check_k(n, k)?;
    let mut rng = stream_rng(seed, "random_selector", 0);
    let picked = rand::seq::index::sample(&mut rng, n, k);
    let mut design = Design::empty(n);
    let mut per_step = Vec::with_capacity(k);
    for i in picked {
        design.push(i)?;
        per_step.push(StepRecord {
            index: i,
            criterion: 0.0,
            wall_time_ms: 0.0,
        });
    }
    Ok(SelectorReport {
        design,
        per_step,
        counters: OpCounters::new(),
    })
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// Exact argmax of the closed-form MI over all `k`-subsets. Refuses when the
/// subset count exceeds [`EXHAUSTIVE_BUDGET`].
pub fn select_exhaustive(spec: &ModelSpec, k: usize) -> Result<Design> {
    let n = spec.n();
    check_k(n, k)?;
    let count = binomial_u128(n, k);
    if count > EXHAUSTIVE_BUDGET {
        return Err(Error::BudgetExceeded {
            count,
            budget: EXHAUSTIVE_BUDGET,
        });
    }
    let cf = ClosedFormMi::new(spec)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for subset in (0..n).combinations(k) {
        let value = cf.evaluate(&subset)?;
        // strict '>' keeps the lexicographically first optimum
        if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
            best = Some((value, subset));
        }
    }
    let (_, indices) = best.expect("at least one subset");
    Design::from_indices(n, indices)
}
