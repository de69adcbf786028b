//! Exhaustive reference solver for small fraction problems: full cartesian
//! product of integer reciprocals (up to the configured bound) for
//! non-streaming subchains and of the geometric grid for streaming ones.

use crate::error::{Error, Result};

use super::fractions::{FractionProblem, FractionSolution};

const ORACLE_VAR_GUARD: usize = 4;

pub fn brute_force_fractions(problem: &FractionProblem) -> Result<FractionSolution> {
    if problem.vars.len() > ORACLE_VAR_GUARD {
        return Err(Error::InstanceTooLarge(format!(
            "oracle handles at most {ORACLE_VAR_GUARD} subchains, got {}",
            problem.vars.len()
        )));
    }
    if problem.vars.is_empty() {
        return Err(Error::Invalid("oracle needs at least one subchain".into()));
    }

    let candidates: Vec<Vec<f64>> = (0..problem.vars.len())
        .map(|i| {
            if problem.vars[i].streaming {
                problem.streaming_grid(i)
            } else {
                (1..=problem.max_reciprocal_of(i))
                    .map(|r| 1.0 / r as f64)
                    .collect()
            }
        })
        .collect();

    let n = problem.vars.len();
    let mut idx = vec![0usize; n];
    let mut best: Option<(Vec<f64>, super::fractions::Evaluation)> = None;
    loop {
        let fractions: Vec<f64> = (0..n).map(|i| candidates[i][idx[i]]).collect();
        let eval = problem.evaluate(&fractions);
        if eval.violations.is_empty() {
            let replace = match &best {
                None => true,
                Some((bf, be)) => {
                    let rel = be.objective.abs().max(1.0);
                    if eval.objective < be.objective - 1e-9 * rel {
                        true
                    } else if eval.objective > be.objective + 1e-9 * rel {
                        false
                    } else {
                        // same tie-break as the solver: larger fractions for
                        // higher-priority subchains
                        let mut order: Vec<usize> = (0..n).collect();
                        order.sort_by_key(|&i| problem.vars[i].priority_rank);
                        order
                            .iter()
                            .find_map(|&i| {
                                if (fractions[i] - bf[i]).abs() > 1e-12 {
                                    Some(fractions[i] > bf[i])
                                } else {
                                    None
                                }
                            })
                            .unwrap_or(false)
                    }
                }
            };
            if replace {
                best = Some((fractions, eval));
            }
        }

        let mut carry = 0;
        while carry < n {
            idx[carry] += 1;
            if idx[carry] < candidates[carry].len() {
                break;
            }
            idx[carry] = 0;
            carry += 1;
        }
        if carry == n {
            break;
        }
    }

    let Some((fractions, eval)) = best else {
        return Err(Error::InfeasibleAfterRelaxation {
            cap: problem.relax_cap,
        });
    };
    Ok(FractionSolution {
        reciprocals: (0..n)
            .map(|i| {
                if problem.vars[i].streaming {
                    None
                } else {
                    Some((1.0 / fractions[i]).round() as u32)
                }
            })
            .collect(),
        fractions,
        period_ms: eval.period_ms,
        wall_cycle_ms: eval.wall_cycle_ms,
        objective: eval.objective,
        warnings: vec![],
    })
}
