//! Coarse allocation of subchains to cores.
//!
//! The feasible set is restricted: a subchain either runs alone on one or
//! more cores or shares exactly one core, every subchain gets a core and
//! every core a subchain. Under that restriction the optimization reduces to
//! an exact search over set partitions with core multiplicities; the
//! constraint checker keeps the original encoding auditable
//! constraint-by-constraint.

mod check;
mod enumerate;
mod problem;
mod solve;

pub use check::{check_allocation, CheckReport, ConstraintViolation, TightValues};
pub use enumerate::{
    count_a1_configurations, enumerate_a1_configurations, for_each_a1_configuration,
};
pub use problem::{build_stage1_problem, S1Chain, S1First, S1Rest, S1Subchain, Stage1Problem};
pub use solve::{solve_core_allocation, Allocation};

/// Boolean subchain-by-core assignment matrix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AllocMatrix {
    pub n: usize,
    pub k: usize,
    bits: Vec<bool>,
}

impl AllocMatrix {
    pub fn new(n: usize, k: usize) -> Self {
        AllocMatrix {
            n,
            k,
            bits: vec![false; n * k],
        }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Self {
        let n = rows.len();
        let k = rows.first().map_or(0, |r| r.len());
        let mut m = AllocMatrix::new(n, k);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, subchain: usize, core: usize) -> bool {
        self.bits[subchain * self.k + core]
    }

    #[inline]
    pub fn set(&mut self, subchain: usize, core: usize, value: bool) {
        self.bits[subchain * self.k + core] = value;
    }

    /// Cores assigned to a subchain.
    pub fn cores_of(&self, subchain: usize) -> Vec<usize> {
        (0..self.k).filter(|&j| self.get(subchain, j)).collect()
    }

    /// Subchains assigned to a core.
    pub fn subchains_on(&self, core: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.get(i, core)).collect()
    }

    pub fn core_count_of(&self, subchain: usize) -> usize {
        (0..self.k).filter(|&j| self.get(subchain, j)).count()
    }

    /// Cores hosting two or more subchains.
    pub fn shared_core_count(&self) -> usize {
        (0..self.k)
            .filter(|&j| self.subchains_on(j).len() >= 2)
            .count()
    }
}

impl std::fmt::Display for AllocMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.n {
            for j in 0..self.k {
                write!(f, "{}", if self.get(i, j) { '1' } else { '0' })?;
            }
            if i + 1 < self.n {
                write!(f, " ")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
