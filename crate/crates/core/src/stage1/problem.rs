use crate::estimator::Estimates;
use crate::model::{PeriodBounds, SpecIndex};

/// First-position chain term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum S1First {
    /// Decision subchain: contributes its execution time to latency and its
    /// period to the chain period.
    Var(usize),
    /// Constant source period: observed streaming output gap or a fixed
    /// firing rate. Contributes the period to both latency and chain period.
    Const(f64),
}

/// Downstream chain term: execution + one period of waiting, or a constant
/// period for subchains outside the decision set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum S1Rest {
    Var(usize),
    Const(f64),
}

#[derive(Debug, Clone)]
pub struct S1Subchain {
    pub label: String,
    /// Sum of member node compute estimates.
    pub cost_sum_ms: f64,
    /// Largest member node estimate.
    pub cost_max_ms: f64,
    pub parallelizable: bool,
    pub period_weight: f64,
    pub bounds: PeriodBounds,
}

#[derive(Debug, Clone)]
pub struct S1Chain {
    pub label: String,
    pub latency_weight: f64,
    pub period_weight: f64,
    pub first: S1First,
    pub rest: Vec<S1Rest>,
    pub period_bounds: PeriodBounds,
    pub latency_bounds: PeriodBounds,
}

/// Inputs of the core-allocation solve: per-subchain compute estimates and
/// flags, chain structure with weights, and soft-bound policy.
#[derive(Debug, Clone)]
pub struct Stage1Problem {
    pub subchains: Vec<S1Subchain>,
    pub chains: Vec<S1Chain>,
    pub cores: usize,
    pub relax_scale: f64,
    pub relax_cap: f64,
    pub config_guard: u64,
}

pub const DEFAULT_CONFIG_GUARD: u64 = 10_000_000;

impl Stage1Problem {
    pub fn subchain_count(&self) -> usize {
        self.subchains.len()
    }
}

/// Builds the allocation problem over the explicitly scheduled subchains.
/// Chains sourced at streaming subchains use the observed output period when
/// the estimator has one; other non-decision chain members enter as their
/// fixed periods.
pub fn build_stage1_problem(
    index: &SpecIndex,
    estimates: &Estimates,
    cores: usize,
    relax_cap: f64,
) -> Stage1Problem {
    let mut var_of_subchain = vec![None; index.subchain_count];
    let mut subchains = Vec::new();
    for si in 0..index.subchain_count {
        if !index.scheduled[si] {
            continue;
        }
        let costs: Vec<f64> = index.members[si]
            .iter()
            .map(|&ni| estimates.node_ms[ni])
            .collect();
        var_of_subchain[si] = Some(subchains.len());
        subchains.push(S1Subchain {
            label: index.subchain_ids[si].clone(),
            cost_sum_ms: costs.iter().sum(),
            cost_max_ms: costs.iter().cloned().fold(0.0, f64::max),
            parallelizable: index.parallelizable[si],
            period_weight: index.objective.w3[si],
            bounds: index.objective.subchain_period_bounds[si],
        });
    }

    let mut chains = Vec::new();
    for (ci, members) in index.chain_members.iter().enumerate() {
        let w1 = index.objective.w1[ci];
        let w2 = index.objective.w2[ci];
        let const_period = |si: usize| -> f64 {
            if let Some(p) = index.fixed_period_ms[si] {
                p
            } else if let Some(p) = estimates.streaming_period_ms[si] {
                p
            } else {
                0.0
            }
        };
        let first_si = members[0];
        let first = match var_of_subchain[first_si] {
            Some(v) => {
                if index.streaming[first_si] && estimates.streaming_period_ms[first_si].is_some() {
                    S1First::Const(estimates.streaming_period_ms[first_si].unwrap())
                } else {
                    S1First::Var(v)
                }
            }
            None => S1First::Const(const_period(first_si)),
        };
        let rest = members[1..]
            .iter()
            .map(|&si| match var_of_subchain[si] {
                Some(v) => S1Rest::Var(v),
                None => S1Rest::Const(const_period(si)),
            })
            .collect();
        chains.push(S1Chain {
            label: index.chain_ids[ci].clone(),
            latency_weight: w1,
            period_weight: w2,
            first,
            rest,
            period_bounds: index.objective.chain_period_bounds[ci],
            latency_bounds: index.objective.chain_latency_bounds[ci],
        });
    }

    Stage1Problem {
        subchains,
        chains,
        cores,
        relax_scale: index.objective.relax_scale,
        relax_cap,
        config_guard: DEFAULT_CONFIG_GUARD,
    }
}
