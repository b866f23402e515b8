//! Operation counters backing the complexity report.
//!
//! `mults` counts scalar multiplications and divisions performed inside
//! factorization and triangular-solve kernels. Elementwise products (dot
//! products for the diagonal criterion, covariance assembly, Schur
//! correction outer products) are deliberately excluded: the counter tracks
//! the conditioning-algebra term whose growth distinguishes the selectors.
//! `factorizations` counts factorization calls, `model_evals` counts
//! likelihood/gradient/density evaluations, and `mi_evals` counts calls to a
//! mutual-information estimator.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub mults: u64,
    pub factorizations: u64,
    pub model_evals: u64,
    pub mi_evals: u64,
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn merge(&mut self, other: &OpCounters) {
        self.mults += other.mults;
        self.factorizations += other.factorizations;
        self.model_evals += other.model_evals;
        self.mi_evals += other.mi_evals;
    }
}
