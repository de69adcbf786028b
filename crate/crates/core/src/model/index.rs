//! Compiled integer-indexed view of a validated spec, shared by the solvers
//! and the simulator.

use std::collections::BTreeMap;

use super::{DagSpec, ValidationReport};
use crate::error::{Error, Result};

/// Subchain period bounds in milliseconds, folded from the member nodes'
/// throughput bounds (a node runs at its subchain's rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodBounds {
    pub lo_ms: f64,
    pub hi_ms: f64,
}

impl Default for PeriodBounds {
    fn default() -> Self {
        PeriodBounds {
            lo_ms: 0.0,
            hi_ms: f64::INFINITY,
        }
    }
}

impl PeriodBounds {
    pub fn is_trivial(&self) -> bool {
        self.lo_ms <= 0.0 && self.hi_ms.is_infinite()
    }
}

#[derive(Debug, Clone, Default)]
pub struct ResolvedObjective {
    /// Chain latency weight, indexed by chain.
    pub w1: Vec<f64>,
    /// Chain period weight, indexed by chain.
    pub w2: Vec<f64>,
    /// Subchain period weight, indexed by subchain.
    pub w3: Vec<f64>,
    pub subchain_period_bounds: Vec<PeriodBounds>,
    pub chain_period_bounds: Vec<PeriodBounds>,
    pub chain_latency_bounds: Vec<PeriodBounds>,
    /// Priority rank per subchain (0 = highest). Non-scheduled subchains get
    /// ranks after all scheduled ones.
    pub priority_rank: Vec<usize>,
    pub relax_scale: f64,
}

#[derive(Debug, Clone)]
pub struct SpecIndex {
    pub node_count: usize,
    pub subchain_count: usize,
    pub chain_count: usize,
    pub node_ids: Vec<String>,
    pub subchain_ids: Vec<String>,
    pub chain_ids: Vec<String>,
    /// subchain index per node
    pub subchain_of_node: Vec<usize>,
    /// member node indices per subchain, in event order
    pub members: Vec<Vec<usize>>,
    /// cross-subchain upstream edges per node: (upstream node, its subchain)
    pub upstream_of_node: Vec<Vec<(usize, usize)>>,
    /// subchain indices per chain, source first
    pub chain_members: Vec<Vec<usize>>,
    pub scheduled: Vec<bool>,
    pub streaming: Vec<bool>,
    /// parallelizable iff all member nodes are
    pub parallelizable: Vec<bool>,
    /// fixed firing period (us-precision ms) for non-scheduled subchains
    pub fixed_period_ms: Vec<Option<f64>>,
    pub objective: ResolvedObjective,
}

impl SpecIndex {
    /// Builds the index. Fails with the validation report when the spec does
    /// not hold its invariants.
    pub fn build(spec: &DagSpec) -> Result<SpecIndex> {
        let report: ValidationReport = super::validate(spec);
        if !report.is_empty() {
            return Err(Error::Invalid(report.to_string()));
        }
        Ok(Self::build_unchecked(spec))
    }

    pub fn build_unchecked(spec: &DagSpec) -> SpecIndex {
        let node_idx: BTreeMap<&str, usize> = spec
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let sub_idx: BTreeMap<&str, usize> = spec
            .subchains
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect();

        let mut subchain_of_node = vec![usize::MAX; spec.nodes.len()];
        let mut members = Vec::with_capacity(spec.subchains.len());
        for (si, s) in spec.subchains.iter().enumerate() {
            let m: Vec<usize> = s.node_ids.iter().map(|id| node_idx[id.as_str()]).collect();
            for &ni in &m {
                subchain_of_node[ni] = si;
            }
            members.push(m);
        }

        let mut upstream_of_node = vec![Vec::new(); spec.nodes.len()];
        for (a, b) in &spec.edges {
            let (ai, bi) = (node_idx[a.as_str()], node_idx[b.as_str()]);
            if subchain_of_node[ai] != subchain_of_node[bi] {
                upstream_of_node[bi].push((ai, subchain_of_node[ai]));
            }
        }
        for ups in &mut upstream_of_node {
            ups.sort();
            ups.dedup();
        }

        let chain_members: Vec<Vec<usize>> = spec
            .chains
            .iter()
            .map(|c| c.subchain_ids.iter().map(|id| sub_idx[id.as_str()]).collect())
            .collect();

        let scheduled: Vec<bool> = spec
            .subchains
            .iter()
            .map(|s| {
                s.node_ids
                    .iter()
                    .all(|id| spec.node(id).map_or(true, |n| n.explicitly_scheduled))
            })
            .collect();
        let streaming: Vec<bool> = spec
            .subchains
            .iter()
            .map(|s| spec.node(s.head()).map_or(false, |n| n.streaming))
            .collect();
        let parallelizable: Vec<bool> = spec
            .subchains
            .iter()
            .map(|s| {
                s.node_ids
                    .iter()
                    .all(|id| spec.node(id).map_or(false, |n| n.parallelizable))
            })
            .collect();
        let fixed_period_ms: Vec<Option<f64>> = spec
            .subchains
            .iter()
            .enumerate()
            .map(|(si, s)| {
                if scheduled[si] {
                    None
                } else {
                    spec.node(s.head()).and_then(|n| n.fixed_period_ms)
                }
            })
            .collect();

        let objective = resolve_objective(spec, &sub_idx, &members, &scheduled);

        SpecIndex {
            node_count: spec.nodes.len(),
            subchain_count: spec.subchains.len(),
            chain_count: spec.chains.len(),
            node_ids: spec.nodes.iter().map(|n| n.id.clone()).collect(),
            subchain_ids: spec.subchains.iter().map(|s| s.id.clone()).collect(),
            chain_ids: spec.chains.iter().map(|c| c.id.clone()).collect(),
            subchain_of_node,
            members,
            upstream_of_node,
            chain_members,
            scheduled,
            streaming,
            parallelizable,
            fixed_period_ms,
            objective,
        }
    }

    /// Scheduled subchain indices in priority order.
    pub fn scheduled_by_priority(&self) -> Vec<usize> {
        let mut subs: Vec<usize> = (0..self.subchain_count)
            .filter(|&i| self.scheduled[i])
            .collect();
        subs.sort_by_key(|&i| self.objective.priority_rank[i]);
        subs
    }
}

fn resolve_objective(
    spec: &DagSpec,
    sub_idx: &BTreeMap<&str, usize>,
    members: &[Vec<usize>],
    scheduled: &[bool],
) -> ResolvedObjective {
    let o = &spec.objective;
    let nchains = spec.chains.len();
    let nsubs = spec.subchains.len();

    let mut w1 = vec![0.0; nchains];
    let mut w2 = vec![0.0; nchains];
    for (ci, c) in spec.chains.iter().enumerate() {
        w1[ci] = o.w1c.get(&c.id).copied().unwrap_or(0.0);
        w2[ci] = o.w2c.get(&c.id).copied().unwrap_or(0.0);
        // response time = latency + period
        if let Some(&w) = o.response_time_weights.get(&c.id) {
            w1[ci] += w;
            w2[ci] += w;
        }
    }
    let mut w3 = vec![0.0; nsubs];
    for (id, &w) in &o.w3s {
        w3[sub_idx[id.as_str()]] = w;
    }

    let node_bounds: Vec<PeriodBounds> = spec
        .nodes
        .iter()
        .map(|n| {
            let b = o.node_throughput_bounds_hz.get(&n.id);
            PeriodBounds {
                // throughput cap => period floor
                lo_ms: b.and_then(|b| b.max).map_or(0.0, |hz| 1000.0 / hz),
                hi_ms: b
                    .and_then(|b| b.min)
                    .map_or(f64::INFINITY, |hz| 1000.0 / hz),
            }
        })
        .collect();
    let subchain_period_bounds: Vec<PeriodBounds> = members
        .iter()
        .map(|m| PeriodBounds {
            lo_ms: m.iter().map(|&ni| node_bounds[ni].lo_ms).fold(0.0, f64::max),
            hi_ms: m
                .iter()
                .map(|&ni| node_bounds[ni].hi_ms)
                .fold(f64::INFINITY, f64::min),
        })
        .collect();

    let chain_bounds = |map: &BTreeMap<String, super::Bound>| -> Vec<PeriodBounds> {
        spec.chains
            .iter()
            .map(|c| {
                let b = map.get(&c.id);
                PeriodBounds {
                    lo_ms: b.and_then(|b| b.min).unwrap_or(0.0),
                    hi_ms: b.and_then(|b| b.max).unwrap_or(f64::INFINITY),
                }
            })
            .collect()
    };

    // Priority: explicit order first; otherwise by descending weight touching
    // the subchain, ties by declaration order.
    let mut priority_rank = vec![usize::MAX; nsubs];
    if !o.priority.is_empty() {
        for (rank, id) in o.priority.iter().enumerate() {
            priority_rank[sub_idx[id.as_str()]] = rank;
        }
    } else {
        let mut weight_of = vec![0.0f64; nsubs];
        for (si, &w) in w3.iter().enumerate() {
            weight_of[si] = weight_of[si].max(w);
        }
        for (ci, c) in spec.chains.iter().enumerate() {
            let w = w1[ci] + w2[ci];
            for sid in &c.subchain_ids {
                let si = sub_idx[sid.as_str()];
                weight_of[si] = weight_of[si].max(w);
            }
        }
        let mut order: Vec<usize> = (0..nsubs).filter(|&i| scheduled[i]).collect();
        order.sort_by(|&a, &b| {
            weight_of[b]
                .partial_cmp(&weight_of[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for (rank, &si) in order.iter().enumerate() {
            priority_rank[si] = rank;
        }
    }
    // non-scheduled subchains rank last, in declaration order
    let mut next = spec.subchains.len();
    for r in priority_rank.iter_mut() {
        if *r == usize::MAX {
            *r = next;
            next += 1;
        }
    }

    ResolvedObjective {
        w1,
        w2,
        w3,
        subchain_period_bounds,
        chain_period_bounds: chain_bounds(&o.chain_period_bounds_ms),
        chain_latency_bounds: chain_bounds(&o.chain_latency_bounds_ms),
        priority_rank,
        relax_scale: o.relax_scale,
    }
}
