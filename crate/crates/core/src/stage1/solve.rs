//! Exact core-allocation solve: full scan of the restricted feasible set,
//! re-run on progressively loosened bounds when no allocation meets them.

use crate::error::{Error, Result};

use super::check::{check_allocation, ConstraintViolation, TightValues};
use super::enumerate::{count_a1_configurations, for_each_a1_configuration};
use super::problem::Stage1Problem;
use super::AllocMatrix;

/// Solver output: the assignment matrix with the derived schedule quantities
/// and any soft-bound loosening that was needed to reach feasibility.
#[derive(Debug, Clone)]
pub struct Allocation {
    pub matrix: AllocMatrix,
    pub period_ms: Vec<f64>,
    pub execution_ms: Vec<f64>,
    pub parallelism: Vec<u32>,
    pub pipeline_width: Vec<u32>,
    pub multi_core: Vec<bool>,
    pub objective: f64,
    pub warnings: Vec<String>,
}

struct Candidate {
    matrix: AllocMatrix,
    tight: TightValues,
    shared_cores: usize,
    violation_count: usize,
    violations: Vec<ConstraintViolation>,
}

const EPS: f64 = 1e-9;

fn better(a: &Candidate, b: &Candidate) -> bool {
    // primary objective, then fewer shared cores, then the smaller matrix
    if a.tight.objective < b.tight.objective - EPS {
        return true;
    }
    if a.tight.objective > b.tight.objective + EPS {
        return false;
    }
    (a.shared_cores, &a.matrix) < (b.shared_cores, &b.matrix)
}

fn scan(problem: &Stage1Problem) -> Result<(Option<Candidate>, Option<Candidate>)> {
    let n = problem.subchain_count();
    let count = count_a1_configurations(n, problem.cores);
    if count > problem.config_guard {
        return Err(Error::InstanceTooLarge(format!(
            "{count} feasible configurations exceed the guard of {}",
            problem.config_guard
        )));
    }
    let mut best_feasible: Option<Candidate> = None;
    let mut least_violating: Option<Candidate> = None;
    let mut check_err = None;
    for_each_a1_configuration(n, problem.cores, |m| {
        if check_err.is_some() {
            return;
        }
        let report = match check_allocation(problem, m) {
            Ok(r) => r,
            Err(e) => {
                check_err = Some(e);
                return;
            }
        };
        let Some(tight) = report.tight else { return };
        let cand = Candidate {
            matrix: m.clone(),
            shared_cores: m.shared_core_count(),
            violation_count: report.violations.len(),
            violations: report.violations,
            tight,
        };
        if cand.violation_count == 0 {
            if best_feasible.as_ref().map_or(true, |b| better(&cand, b)) {
                best_feasible = Some(cand);
            }
        } else {
            let replace = least_violating.as_ref().map_or(true, |b| {
                cand.violation_count < b.violation_count
                    || (cand.violation_count == b.violation_count && better(&cand, b))
            });
            if replace {
                least_violating = Some(cand);
            }
        }
    })?;
    if let Some(e) = check_err {
        return Err(e);
    }
    Ok((best_feasible, least_violating))
}

/// Loosens exactly the bounds violated by the least-infeasible allocation:
/// upper bounds grow by the scale factor, lower bounds shrink by it.
fn relax(problem: &mut Stage1Problem, violations: &[ConstraintViolation], warnings: &mut Vec<String>) {
    let s = problem.relax_scale;
    for v in violations {
        match v {
            ConstraintViolation::SubchainPeriodAboveBound { subchain, .. } => {
                let label = problem.subchains[*subchain].label.clone();
                let b = &mut problem.subchains[*subchain].bounds;
                b.hi_ms *= s;
                warnings.push(format!(
                    "relaxed period bound of subchain `{label}` to {:.3} ms",
                    b.hi_ms
                ));
            }
            ConstraintViolation::ChainPeriodBound { chain, period_ms, .. } => {
                let label = problem.chains[*chain].label.clone();
                let b = &mut problem.chains[*chain].period_bounds;
                if *period_ms > b.hi_ms {
                    b.hi_ms *= s;
                } else {
                    b.lo_ms /= s;
                }
                warnings.push(format!("relaxed period bounds of chain `{label}`"));
            }
            ConstraintViolation::ChainLatencyBound { chain, latency_ms, .. } => {
                let label = problem.chains[*chain].label.clone();
                let b = &mut problem.chains[*chain].latency_bounds;
                if *latency_ms > b.hi_ms {
                    b.hi_ms *= s;
                } else {
                    b.lo_ms /= s;
                }
                warnings.push(format!("relaxed latency bounds of chain `{label}`"));
            }
            _ => {}
        }
    }
}

/// Finds the feasible allocation minimizing the weighted metric sum. When no
/// allocation meets the bounds, the bounds violated by the least-infeasible
/// one are loosened round by round (recorded as warnings) up to the
/// cumulative relaxation cap.
pub fn solve_core_allocation(problem: &Stage1Problem) -> Result<Allocation> {
    let mut work = problem.clone();
    let mut warnings = Vec::new();
    // scale^rounds stays within the cumulative cap
    let cap_rounds = (problem.relax_cap.ln() / problem.relax_scale.ln() + 1e-9).floor() as usize;

    for round in 0..=cap_rounds {
        let (feasible, least) = scan(&work)?;
        if let Some(c) = feasible {
            let n = c.matrix.n;
            return Ok(Allocation {
                multi_core: (0..n).map(|i| c.matrix.core_count_of(i) >= 2).collect(),
                matrix: c.matrix,
                period_ms: c.tight.period_ms,
                execution_ms: c.tight.execution_ms,
                parallelism: c.tight.parallelism,
                pipeline_width: c.tight.pipeline_width,
                objective: c.tight.objective,
                warnings,
            });
        }
        let Some(least) = least else {
            return Err(Error::InstanceTooLarge(
                "no structurally valid configuration".into(),
            ));
        };
        if round == cap_rounds {
            break;
        }
        relax(&mut work, &least.violations, &mut warnings);
    }
    Err(Error::InfeasibleAfterRelaxation {
        cap: problem.relax_cap,
    })
}
