//! Fine-grained scheduling on top of a core allocation: rate and parallelism
//! for exclusive subchains, fraction assignment for shared cores, assembled
//! into one global schedule.

mod fractions;
mod oracle;

pub use fractions::{
    solve_fractions, FracChain, FracCore, FracTerm, FracVar, FractionProblem, FractionSolution,
};
pub use oracle::brute_force_fractions;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::error::Result;
use crate::estimator::Estimates;
use crate::model::{Constants, SpecIndex};
use crate::stage1::Allocation;

/// Per-node cost as a function of the parallelism degree: the live estimate
/// anchors the measured scaling table; nodes without a table scale perfectly
/// when parallelizable and not at all otherwise.
#[derive(Debug, Clone)]
pub struct NodeCostProfile {
    pub base_ms: f64,
    pub nominal_ms: f64,
    pub table: BTreeMap<u32, f64>,
    pub parallelizable: bool,
}

impl NodeCostProfile {
    pub fn cost_at(&self, q: u32) -> f64 {
        if q <= 1 {
            return self.base_ms;
        }
        let anchor = self
            .table
            .get(&1)
            .copied()
            .unwrap_or(self.nominal_ms)
            .max(1e-9);
        if let Some(&c) = self.table.get(&q) {
            return self.base_ms * c / anchor;
        }
        // fall back to the largest measured degree below q
        if let Some((_, &c)) = self.table.range(..q).next_back() {
            return self.base_ms * c / anchor;
        }
        if self.parallelizable {
            self.base_ms / q as f64
        } else {
            self.base_ms
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelinePlan {
    pub subchain: String,
    pub subchain_index: usize,
    pub cores: Vec<usize>,
    pub parallelism: u32,
    pub width: u32,
    /// Trigger period of the source node.
    pub period_ms: f64,
    /// Summed per-node costs at the chosen parallelism plus the period.
    pub predicted_response_time_ms: f64,
}

/// Picks the parallelism degree minimizing the subchain's analytical
/// response time; ties go to the smaller degree.
pub fn select_parallelism(profiles: &[NodeCostProfile], cores: u32) -> (u32, f64, f64) {
    let mut best: Option<(u32, f64, f64)> = None;
    for q in 1..=cores.max(1) {
        let costs: Vec<f64> = profiles.iter().map(|p| p.cost_at(q)).collect();
        let period = analytics::pipelined_period(&costs, cores, q).expect("q in range");
        let rt = costs.iter().sum::<f64>() + period;
        if best.map_or(true, |(_, _, brt)| rt < brt - 1e-9) {
            best = Some((q, period, rt));
        }
    }
    best.expect("at least q=1")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FractionalEntry {
    pub subchain: String,
    pub subchain_index: usize,
    pub fraction: f64,
    /// 1/f for non-streaming subchains; triggers fire every that many cycles.
    pub reciprocal: Option<u32>,
    pub budget_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FractionalSchedule {
    pub core: usize,
    /// Slot order within the cycle.
    pub entries: Vec<FractionalEntry>,
    /// Sum of budgets.
    pub hyperperiod_ms: f64,
    pub slack_ms: f64,
    pub switch_ms: f64,
    /// Budgets plus slack plus one switch per slot: the cycle the executive
    /// actually runs, and the basis of the analytic periods.
    pub wall_cycle_ms: f64,
}

impl FractionalSchedule {
    pub fn period_of_entry(&self, idx: usize) -> f64 {
        self.wall_cycle_ms / self.entries[idx].fraction
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainMetricsEntry {
    pub chain: String,
    pub latency_ms: f64,
    pub period_ms: f64,
    pub response_time_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubchainPeriodEntry {
    pub subchain: String,
    pub subchain_index: usize,
    pub period_ms: f64,
}

/// Union of per-core fractional schedules and per-subchain pipeline plans,
/// with the analytical metrics they imply.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalSchedule {
    pub plans: Vec<PipelinePlan>,
    pub fractional: Vec<FractionalSchedule>,
    pub subchain_periods: Vec<SubchainPeriodEntry>,
    pub chain_metrics: Vec<ChainMetricsEntry>,
    pub objective: f64,
    pub warnings: Vec<String>,
}

impl GlobalSchedule {
    pub fn analytic_period_ms(&self, subchain_index: usize) -> Option<f64> {
        self.subchain_periods
            .iter()
            .find(|e| e.subchain_index == subchain_index)
            .map(|e| e.period_ms)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<GlobalSchedule> {
        serde_json::from_str(text).map_err(|e| crate::Error::Parse(e.to_string()))
    }

    /// Forces the trigger period of an exclusive source subchain (used by
    /// rate sweeps).
    pub fn override_source_period(&mut self, subchain_index: usize, period_ms: f64) -> bool {
        for plan in &mut self.plans {
            if plan.subchain_index == subchain_index {
                let work = plan.predicted_response_time_ms - plan.period_ms;
                plan.period_ms = period_ms;
                plan.predicted_response_time_ms = work + period_ms;
                for e in &mut self.subchain_periods {
                    if e.subchain_index == subchain_index {
                        e.period_ms = period_ms;
                    }
                }
                return true;
            }
        }
        false
    }
}

fn node_profiles(
    index: &SpecIndex,
    spec_nodes: &[crate::model::NodeSpec],
    estimates: &Estimates,
    si: usize,
) -> Vec<NodeCostProfile> {
    index.members[si]
        .iter()
        .map(|&ni| NodeCostProfile {
            base_ms: estimates.node_ms[ni],
            nominal_ms: spec_nodes[ni].compute_model.nominal_ms(),
            table: spec_nodes[ni].max_parallel_cost_table.clone(),
            parallelizable: spec_nodes[ni].parallelizable,
        })
        .collect()
}

/// Builds the full schedule for an allocation: exclusive subchains become
/// pipeline plans, shared cores feed one joint fraction problem, and chain
/// metrics are evaluated on the resulting periods. Streaming subchains at
/// chain sources contribute their observed output period when available.
pub fn build_global_schedule(
    spec: &crate::model::DagSpec,
    index: &SpecIndex,
    alloc: &Allocation,
    estimates: &Estimates,
) -> Result<GlobalSchedule> {
    let constants: &Constants = &spec.constants;
    let sched: Vec<usize> = (0..index.subchain_count)
        .filter(|&si| index.scheduled[si])
        .collect();
    let mut warnings = alloc.warnings.clone();

    // classify each scheduled subchain
    let mut plans = Vec::new();
    let mut var_of: BTreeMap<usize, usize> = BTreeMap::new(); // subchain -> var
    let mut subchain_of_var: Vec<usize> = Vec::new();
    let mut vars: Vec<FracVar> = Vec::new();
    let mut shared_cores: BTreeMap<usize, Vec<usize>> = BTreeMap::new(); // core -> vars
    let mut trigger_ms: BTreeMap<usize, f64> = BTreeMap::new(); // subchain -> exclusive period
    let mut const_objective = 0.0;

    let mut order: Vec<usize> = (0..sched.len()).collect();
    order.sort_by_key(|&row| index.objective.priority_rank[sched[row]]);

    for &row in &order {
        let si = sched[row];
        let cores = alloc.matrix.cores_of(row);
        let exclusive = cores.len() >= 2 || alloc.matrix.subchains_on(cores[0]).len() == 1;
        if exclusive {
            let profiles = node_profiles(index, &spec.nodes, estimates, si);
            let (q, p, rt) = select_parallelism(&profiles, cores.len() as u32);
            let bounds = index.objective.subchain_period_bounds[si];
            let mut trigger = p.max(bounds.lo_ms);
            if trigger > bounds.hi_ms {
                warnings.push(format!(
                    "subchain `{}` cannot reach its period cap of {:.3} ms (best {:.3} ms)",
                    index.subchain_ids[si], bounds.hi_ms, trigger
                ));
                trigger = p;
            }
            let work = rt - p;
            plans.push(PipelinePlan {
                subchain: index.subchain_ids[si].clone(),
                subchain_index: si,
                cores: cores.clone(),
                parallelism: q,
                width: cores.len() as u32 / q,
                period_ms: trigger,
                predicted_response_time_ms: work + trigger,
            });
            trigger_ms.insert(si, trigger);
            const_objective += index.objective.w3[si] * trigger;
        } else {
            let core = cores[0];
            let cost: f64 = index.members[si]
                .iter()
                .map(|&ni| estimates.node_ms[ni])
                .sum();
            let var = vars.len();
            vars.push(FracVar {
                label: index.subchain_ids[si].clone(),
                cost_ms: cost,
                streaming: index.streaming[si],
                core: 0, // patched below once core ids are compacted
                period_weight: index.objective.w3[si],
                bounds: index.objective.subchain_period_bounds[si],
                priority_rank: index.objective.priority_rank[si],
            });
            var_of.insert(si, var);
            subchain_of_var.push(si);
            shared_cores.entry(core).or_default().push(var);
        }
    }

    let core_list: Vec<usize> = shared_cores.keys().copied().collect();
    let cores: Vec<FracCore> = core_list
        .iter()
        .enumerate()
        .map(|(jc, core)| {
            for &v in &shared_cores[core] {
                vars[v].core = jc;
            }
            FracCore {
                members: shared_cores[core].clone(),
                switch_ms: constants.switch_overhead_ms,
                slack_fraction: constants.slack_fraction,
            }
        })
        .collect();

    // chain terms: decision variables on shared cores, constants elsewhere
    let resolve_const = |si: usize, first: bool| -> f64 {
        if let Some(p) = index.fixed_period_ms[si] {
            p
        } else if first && index.streaming[si] {
            estimates.streaming_period_ms[si]
                .or_else(|| trigger_ms.get(&si).copied())
                .unwrap_or(0.0)
        } else if let Some(&t) = trigger_ms.get(&si) {
            t
        } else {
            0.0
        }
    };
    let chains: Vec<FracChain> = index
        .chain_members
        .iter()
        .enumerate()
        .map(|(ci, members)| FracChain {
            label: index.chain_ids[ci].clone(),
            latency_weight: index.objective.w1[ci],
            period_weight: index.objective.w2[ci],
            terms: members
                .iter()
                .enumerate()
                .map(|(pos, &si)| {
                    let first = pos == 0;
                    match var_of.get(&si) {
                        Some(&v)
                            if !(first
                                && index.streaming[si]
                                && estimates.streaming_period_ms[si].is_some()) =>
                        {
                            FracTerm::Var(v)
                        }
                        _ => FracTerm::Const(resolve_const(si, first)),
                    }
                })
                .collect(),
            period_bounds: index.objective.chain_period_bounds[ci],
            latency_bounds: index.objective.chain_latency_bounds[ci],
        })
        .collect();

    let problem = FractionProblem {
        vars,
        cores,
        chains,
        const_objective,
        min_cpu_ms: constants.min_cpu_ms_per_hyperperiod,
        max_reciprocal: constants.max_reciprocal,
        max_streaming_fraction: constants.max_streaming_fraction,
        streaming_grid_points: constants.streaming_grid_points,
        relax_scale: index.objective.relax_scale,
        relax_cap: constants.relax_cap,
    };
    let solution = solve_fractions(&problem)?;
    warnings.extend(solution.warnings.iter().cloned());

    let mut fractional = Vec::new();
    for (jc, core) in core_list.iter().enumerate() {
        let members = &problem.cores[jc].members;
        let entries: Vec<FractionalEntry> = members
            .iter()
            .map(|&v| FractionalEntry {
                subchain: problem.vars[v].label.clone(),
                subchain_index: subchain_of_var[v],
                fraction: solution.fractions[v],
                reciprocal: solution.reciprocals[v],
                budget_ms: solution.fractions[v] * problem.vars[v].cost_ms,
            })
            .collect();
        let hyperperiod: f64 = entries.iter().map(|e| e.budget_ms).sum();
        fractional.push(FractionalSchedule {
            core: *core,
            hyperperiod_ms: hyperperiod,
            slack_ms: constants.slack_fraction * hyperperiod,
            switch_ms: constants.switch_overhead_ms,
            wall_cycle_ms: solution.wall_cycle_ms[jc],
            entries,
        });
    }

    // analytic per-subchain periods
    let mut subchain_periods = Vec::new();
    let mut period_of = vec![None::<f64>; index.subchain_count];
    for si in 0..index.subchain_count {
        let p = if let Some(&v) = var_of.get(&si) {
            Some(solution.period_ms[v])
        } else if let Some(&t) = trigger_ms.get(&si) {
            Some(t)
        } else {
            index.fixed_period_ms[si]
        };
        if let Some(p) = p {
            period_of[si] = Some(p);
            subchain_periods.push(SubchainPeriodEntry {
                subchain: index.subchain_ids[si].clone(),
                subchain_index: si,
                period_ms: p,
            });
        }
    }

    // chain metrics on the resolved periods
    let mut chain_metrics = Vec::new();
    let mut metrics_vec = Vec::new();
    for (ci, members) in index.chain_members.iter().enumerate() {
        let ps: Vec<f64> = members
            .iter()
            .enumerate()
            .map(|(pos, &si)| {
                if pos == 0 && index.streaming[si] {
                    estimates.streaming_period_ms[si]
                        .or(period_of[si])
                        .unwrap_or(0.0)
                } else {
                    period_of[si].unwrap_or(0.0)
                }
            })
            .collect();
        let m = analytics::chain_metrics_stage2(&ps)?;
        metrics_vec.push(m);
        chain_metrics.push(ChainMetricsEntry {
            chain: index.chain_ids[ci].clone(),
            latency_ms: m.latency_ms,
            period_ms: m.period_ms,
            response_time_ms: m.response_time_ms,
        });
    }
    let objective = analytics::objective(
        &metrics_vec,
        &(0..index.subchain_count)
            .map(|si| period_of[si].unwrap_or(0.0))
            .collect::<Vec<_>>(),
        &analytics::MetricWeights {
            chain: index
                .objective
                .w1
                .iter()
                .zip(&index.objective.w2)
                .map(|(&a, &b)| (a, b))
                .collect(),
            subchain: index.objective.w3.clone(),
        },
    )?;

    Ok(GlobalSchedule {
        plans,
        fractional,
        subchain_periods,
        chain_metrics,
        objective,
        warnings,
    })
}

#[cfg(test)]
mod tests;
