//! Standalone feasibility checker for allocation matrices.
//!
//! Violations carry stable numeric codes following the ordering of the
//! original constraint system (2 and 3 for coverage, 4-10 for the
//! no-two-subchains-share-two-cores restriction, 25/26/28 for the soft
//! bounds); the period encodings themselves (11-23) are evaluated at
//! equality when deriving tight values.

use crate::analytics::{self, ChainMetrics, SubchainTiming};
use crate::error::{Error, Result};

use super::problem::{S1First, S1Rest, Stage1Problem};
use super::AllocMatrix;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintViolation {
    /// Code 2: subchain assigned no core.
    SubchainUncovered { subchain: usize },
    /// Code 3: core hosts no subchain.
    CoreUnused { core: usize },
    /// Codes 4-10: a subchain spanning several cores shares one of them.
    ExclusiveOverlap { subchain: usize, core: usize },
    /// Code 26: tight subchain period exceeds its upper period bound.
    SubchainPeriodAboveBound { subchain: usize, period_ms: f64, bound_ms: f64 },
    /// Code 25: chain period outside its bounds.
    ChainPeriodBound { chain: usize, period_ms: f64, lo_ms: f64, hi_ms: f64 },
    /// Code 28: chain latency outside its bounds.
    ChainLatencyBound { chain: usize, latency_ms: f64, lo_ms: f64, hi_ms: f64 },
}

impl ConstraintViolation {
    pub fn code(&self) -> u32 {
        match self {
            ConstraintViolation::SubchainUncovered { .. } => 2,
            ConstraintViolation::CoreUnused { .. } => 3,
            ConstraintViolation::ExclusiveOverlap { .. } => 9,
            ConstraintViolation::ChainPeriodBound { .. } => 25,
            ConstraintViolation::SubchainPeriodAboveBound { .. } => 26,
            ConstraintViolation::ChainLatencyBound { .. } => 28,
        }
    }

    pub fn is_structural(&self) -> bool {
        matches!(
            self,
            ConstraintViolation::SubchainUncovered { .. }
                | ConstraintViolation::CoreUnused { .. }
                | ConstraintViolation::ExclusiveOverlap { .. }
        )
    }
}

/// Minimal values satisfying every lower-bound constraint, plus the metrics
/// and objective they induce.
#[derive(Debug, Clone)]
pub struct TightValues {
    pub period_ms: Vec<f64>,
    pub execution_ms: Vec<f64>,
    pub parallelism: Vec<u32>,
    pub pipeline_width: Vec<u32>,
    pub chain_metrics: Vec<ChainMetrics>,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub violations: Vec<ConstraintViolation>,
    pub tight: Option<TightValues>,
}

impl CheckReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tight period of a subchain alone on `m` cores: the pipeline width is
/// the core count for non-parallelizable subchains, otherwise the best
/// divisor of `m`. Ties prefer smaller parallelism (larger width).
fn exclusive_period(cost_sum: f64, cost_max: f64, parallelizable: bool, m: usize) -> (f64, u32, u32) {
    let widths: Vec<usize> = if parallelizable {
        (1..=m).filter(|b| m % b == 0).collect()
    } else {
        vec![m]
    };
    let mut best: Option<(f64, usize)> = None;
    for &b in &widths {
        let p = (cost_max * b as f64).max(cost_sum) / m as f64;
        best = match best {
            None => Some((p, b)),
            Some((bp, _)) if p < bp - EPS => Some((p, b)),
            // tie: prefer the larger width (smaller q)
            Some((bp, bb)) if (p - bp).abs() <= EPS && b > bb => Some((bp, b)),
            other => other,
        };
    }
    let (p, b) = best.expect("width set never empty");
    (p, (m / b) as u32, b as u32)
}

/// Verifies a matrix against the full constraint system and, when the
/// structure is sound, derives the minimal periods and execution times and
/// evaluates the soft bounds against them.
pub fn check_allocation(problem: &Stage1Problem, alloc: &AllocMatrix) -> Result<CheckReport> {
    let n = problem.subchains.len();
    let k = problem.cores;
    if alloc.n != n || alloc.k != k {
        return Err(Error::DimensionMismatch {
            rows: n,
            cols: k,
            got_rows: alloc.n,
            got_cols: alloc.k,
        });
    }

    let mut violations = Vec::new();
    for i in 0..n {
        if alloc.core_count_of(i) == 0 {
            violations.push(ConstraintViolation::SubchainUncovered { subchain: i });
        }
    }
    for j in 0..k {
        if alloc.subchains_on(j).is_empty() {
            violations.push(ConstraintViolation::CoreUnused { core: j });
        }
    }
    for i in 0..n {
        if alloc.core_count_of(i) >= 2 {
            for j in alloc.cores_of(i) {
                if alloc.subchains_on(j).len() >= 2 {
                    violations.push(ConstraintViolation::ExclusiveOverlap { subchain: i, core: j });
                }
            }
        }
    }
    if violations.iter().any(|v| v.is_structural()) {
        return Ok(CheckReport {
            violations,
            tight: None,
        });
    }

    let mut period = vec![0.0; n];
    let mut execution = vec![0.0; n];
    let mut parallelism = vec![1u32; n];
    let mut width = vec![1u32; n];
    for (i, s) in problem.subchains.iter().enumerate() {
        let m = alloc.core_count_of(i);
        let base = if m >= 2 {
            let (p, q, b) = exclusive_period(s.cost_sum_ms, s.cost_max_ms, s.parallelizable, m);
            parallelism[i] = q;
            width[i] = b;
            p
        } else {
            // equal share with every co-resident, itself included
            let residents = alloc.subchains_on(alloc.cores_of(i)[0]).len();
            s.cost_sum_ms * residents as f64
        };
        // fold period floors (throughput caps) into the tight period
        period[i] = base.max(s.bounds.lo_ms);
        execution[i] = if m >= 2 {
            s.cost_sum_ms
        } else {
            s.cost_sum_ms.max(period[i])
        };
        if period[i] > s.bounds.hi_ms + EPS {
            violations.push(ConstraintViolation::SubchainPeriodAboveBound {
                subchain: i,
                period_ms: period[i],
                bound_ms: s.bounds.hi_ms,
            });
        }
    }

    let mut chain_metrics = Vec::with_capacity(problem.chains.len());
    for (ci, c) in problem.chains.iter().enumerate() {
        let mut timings = Vec::with_capacity(1 + c.rest.len());
        timings.push(match c.first {
            S1First::Var(i) => SubchainTiming {
                period_ms: period[i],
                execution_ms: execution[i],
                parallelism: parallelism[i],
                pipeline_width: width[i],
            },
            S1First::Const(p) => SubchainTiming {
                period_ms: p,
                execution_ms: p,
                parallelism: 1,
                pipeline_width: 1,
            },
        });
        for r in &c.rest {
            timings.push(match *r {
                S1Rest::Var(i) => SubchainTiming {
                    period_ms: period[i],
                    execution_ms: execution[i],
                    parallelism: parallelism[i],
                    pipeline_width: width[i],
                },
                S1Rest::Const(p) => SubchainTiming {
                    period_ms: p,
                    execution_ms: 0.0,
                    parallelism: 1,
                    pipeline_width: 1,
                },
            });
        }
        let m = analytics::chain_metrics_stage1(&timings)?;
        if m.period_ms < c.period_bounds.lo_ms - EPS || m.period_ms > c.period_bounds.hi_ms + EPS {
            violations.push(ConstraintViolation::ChainPeriodBound {
                chain: ci,
                period_ms: m.period_ms,
                lo_ms: c.period_bounds.lo_ms,
                hi_ms: c.period_bounds.hi_ms,
            });
        }
        if m.latency_ms < c.latency_bounds.lo_ms - EPS || m.latency_ms > c.latency_bounds.hi_ms + EPS
        {
            violations.push(ConstraintViolation::ChainLatencyBound {
                chain: ci,
                latency_ms: m.latency_ms,
                lo_ms: c.latency_bounds.lo_ms,
                hi_ms: c.latency_bounds.hi_ms,
            });
        }
        chain_metrics.push(m);
    }

    let objective = analytics::objective(
        &chain_metrics,
        &period,
        &analytics::MetricWeights {
            chain: problem
                .chains
                .iter()
                .map(|c| (c.latency_weight, c.period_weight))
                .collect(),
            subchain: problem.subchains.iter().map(|s| s.period_weight).collect(),
        },
    )?;

    Ok(CheckReport {
        violations,
        tight: Some(TightValues {
            period_ms: period,
            execution_ms: execution,
            parallelism,
            pipeline_width: width,
            chain_metrics,
            objective,
        }),
    })
}
