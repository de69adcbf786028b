//! Fraction assignment for shared cores.
//!
//! One joint problem covers every shared core, because chain terms mix
//! periods from different cores. The solve relaxes the integral-reciprocal
//! rule to continuous fractions, minimizes in log space (where the period
//! expressions and upper bounds are convex) by damped coordinate descent,
//! then rounds each reciprocal to its two neighboring integers and evaluates
//! the resulting grid exactly, re-optimizing streaming fractions per point.
//! Lower bounds, which would break convexity, are enforced only at the exact
//! evaluation; when no grid point is feasible the violated bounds are
//! loosened and the solve restarts.

use crate::analytics;
use crate::error::{Error, Result};
use crate::model::PeriodBounds;

#[derive(Debug, Clone)]
pub struct FracVar {
    pub label: String,
    pub cost_ms: f64,
    pub streaming: bool,
    pub core: usize,
    pub period_weight: f64,
    pub bounds: PeriodBounds,
    pub priority_rank: usize,
}

#[derive(Debug, Clone)]
pub struct FracCore {
    /// Var indices in slot order.
    pub members: Vec<usize>,
    pub switch_ms: f64,
    pub slack_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FracTerm {
    Var(usize),
    Const(f64),
}

#[derive(Debug, Clone)]
pub struct FracChain {
    pub label: String,
    pub latency_weight: f64,
    pub period_weight: f64,
    /// Source first.
    pub terms: Vec<FracTerm>,
    pub period_bounds: PeriodBounds,
    pub latency_bounds: PeriodBounds,
}

#[derive(Debug, Clone)]
pub struct FractionProblem {
    pub vars: Vec<FracVar>,
    pub cores: Vec<FracCore>,
    pub chains: Vec<FracChain>,
    /// Weighted metric terms fully outside the decision variables.
    pub const_objective: f64,
    pub min_cpu_ms: f64,
    pub max_reciprocal: u32,
    pub max_streaming_fraction: f64,
    pub streaming_grid_points: usize,
    pub relax_scale: f64,
    pub relax_cap: f64,
}

#[derive(Debug, Clone)]
pub struct FractionSolution {
    pub fractions: Vec<f64>,
    /// 1/f for non-streaming vars.
    pub reciprocals: Vec<Option<u32>>,
    pub period_ms: Vec<f64>,
    pub wall_cycle_ms: Vec<f64>,
    pub objective: f64,
    pub warnings: Vec<String>,
}

const REL_EPS: f64 = 1e-6;
const DESCENT_TOL: f64 = 1e-6;
const DESCENT_STEP_CAP: usize = 10_000;
const DAMPING: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum FracViolation {
    VarPeriod { var: usize, low_side: bool },
    ChainPeriod { chain: usize, low_side: bool },
    ChainLatency { chain: usize, low_side: bool },
}

pub(crate) struct Evaluation {
    pub objective: f64,
    pub period_ms: Vec<f64>,
    pub wall_cycle_ms: Vec<f64>,
    pub violations: Vec<FracViolation>,
}

impl FractionProblem {
    pub fn var_bounds(&self, i: usize) -> (f64, f64) {
        let v = &self.vars[i];
        if v.streaming {
            let lo = self.min_cpu_ms / v.cost_ms;
            (lo, self.max_streaming_fraction.max(lo))
        } else {
            let lo = (self.min_cpu_ms / v.cost_ms).min(1.0);
            (lo.max(1.0 / self.max_reciprocal as f64), 1.0)
        }
    }

    /// Largest admissible reciprocal for a non-streaming var.
    pub fn max_reciprocal_of(&self, i: usize) -> u32 {
        let (lo, _) = self.var_bounds(i);
        ((1.0 / lo) + 1e-9).floor().max(1.0) as u32
    }

    /// Geometric grid the streaming fractions live on.
    pub fn streaming_grid(&self, i: usize) -> Vec<f64> {
        let (lo, hi) = self.var_bounds(i);
        let g = self.streaming_grid_points.max(2);
        (0..g)
            .map(|t| lo * (hi / lo).powf(t as f64 / (g - 1) as f64))
            .collect()
    }

    /// Wall-clock cycle of one core: per-slot switch overhead plus budgets
    /// scaled up by the idle slack share.
    pub fn wall_cycle_ms(&self, core: usize, fractions: &[f64]) -> f64 {
        let c = &self.cores[core];
        let budgets: f64 = c
            .members
            .iter()
            .map(|&i| fractions[i] * self.vars[i].cost_ms)
            .sum();
        c.members.len() as f64 * c.switch_ms + (1.0 + c.slack_fraction) * budgets
    }

    pub(crate) fn evaluate(&self, fractions: &[f64]) -> Evaluation {
        let wall: Vec<f64> = (0..self.cores.len())
            .map(|j| self.wall_cycle_ms(j, fractions))
            .collect();
        let period: Vec<f64> = self
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| wall[v.core] / fractions[i])
            .collect();

        let mut violations = Vec::new();
        let mut objective = self.const_objective;
        for (i, v) in self.vars.iter().enumerate() {
            objective += v.period_weight * period[i];
            if period[i] < v.bounds.lo_ms * (1.0 - REL_EPS) {
                violations.push(FracViolation::VarPeriod { var: i, low_side: true });
            }
            if period[i] > v.bounds.hi_ms * (1.0 + REL_EPS) {
                violations.push(FracViolation::VarPeriod { var: i, low_side: false });
            }
        }
        for (ci, chain) in self.chains.iter().enumerate() {
            let ps: Vec<f64> = chain
                .terms
                .iter()
                .map(|t| match *t {
                    FracTerm::Var(i) => period[i],
                    FracTerm::Const(p) => p,
                })
                .collect();
            let m = analytics::chain_metrics_stage2(&ps).expect("chains are non-empty");
            objective += chain.latency_weight * m.latency_ms + chain.period_weight * m.period_ms;
            if m.period_ms < chain.period_bounds.lo_ms * (1.0 - REL_EPS) {
                violations.push(FracViolation::ChainPeriod { chain: ci, low_side: true });
            }
            if m.period_ms > chain.period_bounds.hi_ms * (1.0 + REL_EPS) {
                violations.push(FracViolation::ChainPeriod { chain: ci, low_side: false });
            }
            if m.latency_ms < chain.latency_bounds.lo_ms * (1.0 - REL_EPS) {
                violations.push(FracViolation::ChainLatency { chain: ci, low_side: true });
            }
            if m.latency_ms > chain.latency_bounds.hi_ms * (1.0 + REL_EPS) {
                violations.push(FracViolation::ChainLatency { chain: ci, low_side: false });
            }
        }
        Evaluation {
            objective,
            period_ms: period,
            wall_cycle_ms: wall,
            violations,
        }
    }

    /// Objective plus quadratic penalties on the upper (convex) bounds; the
    /// lower bounds are left to the exact evaluation after rounding.
    fn penalized(&self, fractions: &[f64], mu: f64) -> f64 {
        let wall: Vec<f64> = (0..self.cores.len())
            .map(|j| self.wall_cycle_ms(j, fractions))
            .collect();
        let period = |i: usize| wall[self.vars[i].core] / fractions[i];
        let mut total = self.const_objective;
        let mut penalty = 0.0;
        for (i, v) in self.vars.iter().enumerate() {
            let p = period(i);
            total += v.period_weight * p;
            if v.bounds.hi_ms.is_finite() && p > v.bounds.hi_ms {
                let r = (p - v.bounds.hi_ms) / v.bounds.hi_ms;
                penalty += r * r;
            }
        }
        for chain in &self.chains {
            let ps: Vec<f64> = chain
                .terms
                .iter()
                .map(|t| match *t {
                    FracTerm::Var(i) => period(i),
                    FracTerm::Const(p) => p,
                })
                .collect();
            let latency = ps[0] + 2.0 * ps[1..].iter().sum::<f64>();
            let per = ps.iter().cloned().fold(f64::MIN, f64::max);
            total += chain.latency_weight * latency + chain.period_weight * per;
            if chain.period_bounds.hi_ms.is_finite() && per > chain.period_bounds.hi_ms {
                let r = (per - chain.period_bounds.hi_ms) / chain.period_bounds.hi_ms;
                penalty += r * r;
            }
            if chain.latency_bounds.hi_ms.is_finite() && latency > chain.latency_bounds.hi_ms {
                let r = (latency - chain.latency_bounds.hi_ms) / chain.latency_bounds.hi_ms;
                penalty += r * r;
            }
        }
        total + mu * penalty
    }
}

/// Golden-section minimization of a unimodal 1-D function.
fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    if hi - lo < 1e-12 {
        return lo;
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..80 {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Continuous relaxation in log space.
fn continuous_descent(problem: &FractionProblem, start: &[f64]) -> Vec<f64> {
    let n = problem.vars.len();
    let mut x: Vec<f64> = start.iter().map(|f| f.ln()).collect();
    let mut steps = 0usize;
    for &mu in &[1e3, 1e6] {
        let mut prev = f64::INFINITY;
        loop {
            for i in 0..n {
                if steps >= DESCENT_STEP_CAP {
                    break;
                }
                steps += 1;
                let (lo, hi) = problem.var_bounds(i);
                let (llo, lhi) = (lo.ln(), hi.ln());
                if lhi - llo < 1e-12 {
                    x[i] = llo;
                    continue;
                }
                let mut fr: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                let best = golden_min(llo, lhi, |xi| {
                    fr[i] = xi.exp();
                    problem.penalized(&fr, mu)
                });
                x[i] += DAMPING * (best - x[i]);
                x[i] = x[i].clamp(llo, lhi);
            }
            let fr: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            let cur = problem.penalized(&fr, mu);
            if (prev - cur).abs() <= DESCENT_TOL * prev.abs().max(1.0) || steps >= DESCENT_STEP_CAP
            {
                break;
            }
            prev = cur;
        }
    }
    x.iter().map(|v| v.exp()).collect()
}

/// Re-optimizes streaming fractions for fixed reciprocals, then snaps them
/// onto the search grid, picking the better exact neighbor.
fn refit_streaming(problem: &FractionProblem, fractions: &mut Vec<f64>) {
    let streaming: Vec<usize> = (0..problem.vars.len())
        .filter(|&i| problem.vars[i].streaming)
        .collect();
    if streaming.is_empty() {
        return;
    }
    for _ in 0..4 {
        for &i in &streaming {
            let (lo, hi) = problem.var_bounds(i);
            if hi - lo < 1e-12 {
                fractions[i] = lo;
                continue;
            }
            let mut fr = fractions.clone();
            let best = golden_min(lo.ln(), hi.ln(), |xi| {
                fr[i] = xi.exp();
                problem.penalized(&fr, 1e6)
            });
            fractions[i] = best.exp();
        }
    }
    // snap to the grid so the search space matches the exhaustive oracle
    for &i in &streaming {
        let grid = problem.streaming_grid(i);
        let target = fractions[i];
        let mut candidates: Vec<f64> = grid
            .windows(2)
            .find(|w| target >= w[0] && target <= w[1])
            .map(|w| w.to_vec())
            .unwrap_or_else(|| {
                if target < grid[0] {
                    vec![grid[0]]
                } else {
                    vec![*grid.last().unwrap()]
                }
            });
        candidates.dedup();
        let mut best = (f64::INFINITY, usize::MAX, fractions[i]);
        for &c in &candidates {
            let mut fr = fractions.clone();
            fr[i] = c;
            let ev = problem.evaluate(&fr);
            let key = (ev.objective, ev.violations.len(), c);
            if (key.1, key.0) < (best.1, best.0) {
                best = key;
            }
        }
        fractions[i] = best.2;
    }
}

struct GridOutcome {
    fractions: Vec<f64>,
    eval: Evaluation,
}

/// Exhaustive walk of the neighbor-rounding grid.
fn rounding_grid(problem: &FractionProblem, relaxed: &[f64]) -> (Option<GridOutcome>, Option<GridOutcome>) {
    let n = problem.vars.len();
    let candidates: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            if problem.vars[i].streaming {
                vec![relaxed[i]]
            } else {
                let rmax = problem.max_reciprocal_of(i);
                let r = 1.0 / relaxed[i];
                let mut cs: Vec<u32> = [r.floor() as u32, r.ceil() as u32]
                    .iter()
                    .map(|&c| c.clamp(1, rmax))
                    .collect();
                cs.dedup();
                cs.iter().map(|&r| 1.0 / r as f64).collect()
            }
        })
        .collect();

    let mut best_feasible: Option<GridOutcome> = None;
    let mut best_infeasible: Option<GridOutcome> = None;
    let mut idx = vec![0usize; n];
    loop {
        let mut fractions: Vec<f64> = (0..n).map(|i| candidates[i][idx[i]]).collect();
        refit_streaming(problem, &mut fractions);
        let eval = problem.evaluate(&fractions);
        let out = GridOutcome { fractions, eval };
        if out.eval.violations.is_empty() {
            if best_feasible
                .as_ref()
                .map_or(true, |b| grid_better(problem, &out, b))
            {
                best_feasible = Some(out);
            }
        } else if best_infeasible.as_ref().map_or(true, |b| {
            (out.eval.violations.len(), out.eval.objective)
                < (b.eval.violations.len(), b.eval.objective)
        }) {
            best_infeasible = Some(out);
        }

        // advance the mixed-radix counter
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
    (best_feasible, best_infeasible)
}

/// Objective first; on ties prefer larger fractions for higher-priority
/// subchains.
fn grid_better(problem: &FractionProblem, a: &GridOutcome, b: &GridOutcome) -> bool {
    let rel = b.eval.objective.abs().max(1.0);
    if a.eval.objective < b.eval.objective - 1e-9 * rel {
        return true;
    }
    if a.eval.objective > b.eval.objective + 1e-9 * rel {
        return false;
    }
    let mut order: Vec<usize> = (0..problem.vars.len()).collect();
    order.sort_by_key(|&i| problem.vars[i].priority_rank);
    for &i in &order {
        if a.fractions[i] > b.fractions[i] + 1e-12 {
            return true;
        }
        if a.fractions[i] < b.fractions[i] - 1e-12 {
            return false;
        }
    }
    false
}

fn relax_bounds(
    problem: &mut FractionProblem,
    violations: &[FracViolation],
    warnings: &mut Vec<String>,
) {
    let s = problem.relax_scale;
    for v in violations {
        match v {
            FracViolation::VarPeriod { var, low_side } => {
                let label = problem.vars[*var].label.clone();
                let b = &mut problem.vars[*var].bounds;
                if *low_side {
                    b.lo_ms /= s;
                } else {
                    b.hi_ms *= s;
                }
                warnings.push(format!("relaxed period bounds of subchain `{label}`"));
            }
            FracViolation::ChainPeriod { chain, low_side } => {
                let label = problem.chains[*chain].label.clone();
                let b = &mut problem.chains[*chain].period_bounds;
                if *low_side {
                    b.lo_ms /= s;
                } else {
                    b.hi_ms *= s;
                }
                warnings.push(format!("relaxed period bounds of chain `{label}`"));
            }
            FracViolation::ChainLatency { chain, low_side } => {
                let label = problem.chains[*chain].label.clone();
                let b = &mut problem.chains[*chain].latency_bounds;
                if *low_side {
                    b.lo_ms /= s;
                } else {
                    b.hi_ms *= s;
                }
                warnings.push(format!("relaxed latency bounds of chain `{label}`"));
            }
        }
    }
}

fn solution_from(problem: &FractionProblem, out: GridOutcome, warnings: Vec<String>) -> FractionSolution {
    FractionSolution {
        reciprocals: (0..problem.vars.len())
            .map(|i| {
                if problem.vars[i].streaming {
                    None
                } else {
                    Some((1.0 / out.fractions[i]).round() as u32)
                }
            })
            .collect(),
        fractions: out.fractions,
        period_ms: out.eval.period_ms,
        wall_cycle_ms: out.eval.wall_cycle_ms,
        objective: out.eval.objective,
        warnings,
    }
}

/// Joint fraction solve over all shared cores.
pub fn solve_fractions(problem: &FractionProblem) -> Result<FractionSolution> {
    if problem.vars.is_empty() {
        return Ok(FractionSolution {
            fractions: vec![],
            reciprocals: vec![],
            period_ms: vec![],
            wall_cycle_ms: vec![],
            objective: problem.const_objective,
            warnings: vec![],
        });
    }
    for v in &problem.vars {
        if v.cost_ms <= 0.0 {
            return Err(Error::Invalid(format!(
                "subchain `{}` has a non-positive compute estimate",
                v.label
            )));
        }
    }
    let mut work = problem.clone();
    let mut warnings = Vec::new();
    let cap_rounds = (problem.relax_cap.ln() / problem.relax_scale.ln() + 1e-9).floor() as usize;

    for round in 0..=cap_rounds {
        let start: Vec<f64> = (0..work.vars.len())
            .map(|i| {
                let (lo, hi) = work.var_bounds(i);
                if work.vars[i].streaming {
                    (lo * hi).sqrt()
                } else {
                    hi
                }
            })
            .collect();
        let relaxed = continuous_descent(&work, &start);
        let (feasible, infeasible) = rounding_grid(&work, &relaxed);
        if let Some(best) = feasible {
            return Ok(solution_from(problem, best, warnings));
        }
        let Some(least) = infeasible else {
            return Err(Error::Invalid("empty rounding grid".into()));
        };
        if round == cap_rounds {
            break;
        }
        relax_bounds(&mut work, &least.eval.violations, &mut warnings);
    }
    Err(Error::InfeasibleAfterRelaxation {
        cap: problem.relax_cap,
    })
}
