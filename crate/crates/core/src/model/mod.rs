//! Declarative application model: DAG structure, subchain partition, chains,
//! compute-time models, and the objective specification.
//!
//! A spec document is a single JSON file with top-level keys `schema`,
//! `nodes`, `edges`, `subchains`, `chains`, `objective`, `cores`, and
//! `constants`. Times are milliseconds, rates are hertz, weights are
//! dimensionless.

mod compute;
mod index;
mod presets;

pub use compute::{ComputeModel, ComputeSampler};
pub use index::{PeriodBounds, ResolvedObjective, SpecIndex};
pub use presets::preset;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub compute_model: ComputeModel,
    #[serde(default)]
    pub parallelizable: bool,
    /// Measured compute time (ms) when the node may use q cores; keys are q.
    /// When absent and the node is parallelizable, perfect scaling c/q is
    /// assumed.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub max_parallel_cost_table: BTreeMap<u32, f64>,
    /// Buffers and batch-processes inputs instead of taking the latest one.
    #[serde(default)]
    pub streaming: bool,
    /// Nodes the scheduler does not manage (odometry/IMU style) fire at their
    /// own fixed rate with negligible compute.
    #[serde(default = "default_true")]
    pub explicitly_scheduled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_period_ms: Option<f64>,
}

impl NodeSpec {
    pub fn new(id: &str, compute_model: ComputeModel) -> Self {
        NodeSpec {
            id: id.to_string(),
            compute_model,
            parallelizable: false,
            max_parallel_cost_table: BTreeMap::new(),
            streaming: false,
            explicitly_scheduled: true,
            fixed_period_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubchainSpec {
    pub id: String,
    /// Event-driven series: the head is triggered, each output triggers the
    /// next node.
    pub node_ids: Vec<String>,
}

impl SubchainSpec {
    pub fn head(&self) -> &str {
        &self.node_ids[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub id: String,
    /// Ordered source-to-sink list at subchain granularity.
    pub subchain_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Bound {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

fn default_relax_scale() -> f64 {
    2.0
}

/// Weighted objective plus soft bounds.
///
/// `w1c`/`w2c` weight chain latency and period, `w3s` weights subchain
/// periods. A response-time weight is shorthand for equal `w1c` and `w2c`
/// increments since response time = latency + period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub w1c: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub w2c: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub w3s: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub response_time_weights: BTreeMap<String, f64>,
    /// Node throughput bounds in hertz.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub node_throughput_bounds_hz: BTreeMap<String, Bound>,
    /// Chain period bounds in milliseconds.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub chain_period_bounds_ms: BTreeMap<String, Bound>,
    /// Chain latency bounds in milliseconds.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub chain_latency_bounds_ms: BTreeMap<String, Bound>,
    /// Total order over explicitly scheduled subchains, highest priority
    /// first; used for stealing and intra-period ordering. Defaults to an
    /// order derived from weights.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub priority: Vec<String>,
    /// Soft-constraint scale factor: violated bounds are loosened by this
    /// factor per relaxation round.
    #[serde(default = "default_relax_scale")]
    pub relax_scale: f64,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        ObjectiveSpec {
            w1c: BTreeMap::new(),
            w2c: BTreeMap::new(),
            w3s: BTreeMap::new(),
            response_time_weights: BTreeMap::new(),
            node_throughput_bounds_hz: BTreeMap::new(),
            chain_period_bounds_ms: BTreeMap::new(),
            chain_latency_bounds_ms: BTreeMap::new(),
            priority: Vec::new(),
            relax_scale: default_relax_scale(),
        }
    }
}

macro_rules! constants_struct {
    ($($(#[$doc:meta])* $name:ident : $ty:ty = $default:expr),+ $(,)?) => {
        /// Implementation constants with spec-level defaults; all overridable
        /// from the document or `--set` flags.
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default)]
        pub struct Constants {
            $($(#[$doc])* pub $name: $ty,)+
        }

        impl Default for Constants {
            fn default() -> Self {
                Constants { $($name: $default,)+ }
            }
        }

        impl Constants {
            /// Applies a `key=value` override.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $(stringify!($name) => {
                        self.$name = value.parse().map_err(|_| {
                            Error::Parse(format!("bad value `{value}` for constant `{key}`"))
                        })?;
                        Ok(())
                    })+
                    _ => Err(Error::Parse(format!("unknown constant `{key}`"))),
                }
            }
        }
    };
}

constants_struct! {
    /// Cost to pause one node and start the next on a shared core.
    switch_overhead_ms: f64 = 0.12,
    /// Idle share reserved at the end of every shared-core period.
    slack_fraction: f64 = 0.05,
    /// Minimum per-period CPU budget for any scheduled subchain.
    min_cpu_ms_per_hyperperiod: f64 = 1.0,
    stage1_period_s: f64 = 20.0,
    stage2_period_s: f64 = 5.0,
    estimator_window: usize = 50,
    estimator_percentile: f64 = 0.95,
    /// Percentile of inter-output gaps used as the observed rate of
    /// streaming subchains.
    streaming_percentile: f64 = 0.75,
    bootstrap_compute_ms: f64 = 5.0,
    bootstrap_solve_delay_s: f64 = 2.0,
    /// Largest integer reciprocal 1/f considered for non-streaming fractions.
    max_reciprocal: u32 = 8,
    /// Cap on streaming fractions; matches the top of the oracle search grid.
    max_streaming_fraction: f64 = 4.0,
    /// Points in the geometric search grid for streaming fractions.
    streaming_grid_points: usize = 64,
    /// Two clusters are distinct compute modes when their means differ by at
    /// least this ratio.
    mode_ratio_threshold: f64 = 4.0,
    /// ...and each holds at least this share of the window.
    mode_min_share: f64 = 0.10,
    mode_min_samples: usize = 10,
    /// Large constant from the original conditional-constraint encoding;
    /// kept for documentation, the checker evaluates conditions directly.
    big_m: f64 = 50000.0,
    /// Cumulative soft-bound loosening cap; beyond it solving fails.
    relax_cap: f64 = 8.0,
    /// Modeled CPU charge of one core-allocation re-solve.
    stage1_solve_cost_ms: f64 = 60.0,
    /// Modeled CPU charge of one fraction re-solve.
    stage2_solve_cost_ms: f64 = 25.0,
    /// Add a zero-weight sink subchain so leftover cores can stay idle.
    idle_sink: bool = false,
}

fn default_schema() -> u32 {
    1
}
fn default_cores() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagSpec {
    #[serde(default = "default_schema")]
    pub schema: u32,
    #[serde(default = "default_cores")]
    pub cores: usize,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    pub subchains: Vec<SubchainSpec>,
    #[serde(default)]
    pub chains: Vec<ChainSpec>,
    #[serde(default)]
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub constants: Constants,
}

/// Parses a spec document, reporting the error position on bad syntax.
pub fn parse_spec(text: &str) -> Result<DagSpec> {
    let spec: DagSpec = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {}", e.line(), e.column(), e)))?;
    if spec.schema != 1 {
        return Err(Error::Parse(format!(
            "unsupported schema version {} (expected 1)",
            spec.schema
        )));
    }
    spec.check_references()?;
    Ok(spec)
}

/// Serializes a spec so that `parse_spec(render_spec(s))` round-trips.
pub fn render_spec(spec: &DagSpec) -> String {
    serde_json::to_string_pretty(spec).expect("spec serialization cannot fail")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, msg: impl Into<String>) {
        self.violations.push(msg.into());
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "- {v}")?;
        }
        Ok(())
    }
}

impl DagSpec {
    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn subchain(&self, id: &str) -> Option<&SubchainSpec> {
        self.subchains.iter().find(|s| s.id == id)
    }

    /// Checks id uniqueness and reference integrity (hard errors; everything
    /// softer lands in `validate`).
    fn check_references(&self) -> Result<()> {
        let mut node_ids = BTreeSet::new();
        for n in &self.nodes {
            if !node_ids.insert(n.id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "node",
                    id: n.id.clone(),
                });
            }
        }
        let mut sub_ids = BTreeSet::new();
        for s in &self.subchains {
            if !sub_ids.insert(s.id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "subchain",
                    id: s.id.clone(),
                });
            }
            for nid in &s.node_ids {
                if !node_ids.contains(nid.as_str()) {
                    return Err(Error::UnknownReference {
                        kind: "node",
                        id: nid.clone(),
                    });
                }
            }
        }
        let mut chain_ids = BTreeSet::new();
        for c in &self.chains {
            if !chain_ids.insert(c.id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "chain",
                    id: c.id.clone(),
                });
            }
            for sid in &c.subchain_ids {
                if !sub_ids.contains(sid.as_str()) {
                    return Err(Error::UnknownReference {
                        kind: "subchain",
                        id: sid.clone(),
                    });
                }
            }
        }
        for (a, b) in &self.edges {
            for id in [a, b] {
                if !node_ids.contains(id.as_str()) {
                    return Err(Error::UnknownReference {
                        kind: "node",
                        id: id.clone(),
                    });
                }
            }
        }
        for id in self
            .objective
            .w1c
            .keys()
            .chain(self.objective.w2c.keys())
            .chain(self.objective.response_time_weights.keys())
            .chain(self.objective.chain_period_bounds_ms.keys())
            .chain(self.objective.chain_latency_bounds_ms.keys())
        {
            if !chain_ids.contains(id.as_str()) {
                return Err(Error::UnknownReference {
                    kind: "chain",
                    id: id.clone(),
                });
            }
        }
        for id in self.objective.w3s.keys().chain(self.objective.priority.iter()) {
            if !sub_ids.contains(id.as_str()) {
                return Err(Error::UnknownReference {
                    kind: "subchain",
                    id: id.clone(),
                });
            }
        }
        for id in self.objective.node_throughput_bounds_hz.keys() {
            if !node_ids.contains(id.as_str()) {
                return Err(Error::UnknownReference {
                    kind: "node",
                    id: id.clone(),
                });
            }
        }
        Ok(())
    }

    fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edges.iter().any(|(a, b)| a == from && b == to)
    }

    fn node_has_incoming(&self, id: &str) -> bool {
        self.edges.iter().any(|(_, b)| b == id)
    }

    /// A subchain can source chains if its head is a DAG source, if it is
    /// streaming (it re-times its inputs), or if it is outside the
    /// scheduler's control.
    pub fn subchain_is_chain_source(&self, sc: &SubchainSpec) -> bool {
        let head = self.node(sc.head());
        let streaming = head.map_or(false, |n| n.streaming);
        let scheduled = sc
            .node_ids
            .iter()
            .all(|id| self.node(id).map_or(true, |n| n.explicitly_scheduled));
        streaming || !scheduled || !self.node_has_incoming(sc.head())
    }
}

/// Validates every model invariant; an empty report means the spec is usable
/// by the solvers.
pub fn validate(spec: &DagSpec) -> ValidationReport {
    let mut report = ValidationReport::default();

    if spec.cores < 1 {
        report.push("core count must be at least 1");
    }
    if spec.nodes.is_empty() {
        report.push("spec has no nodes");
    }
    if spec.subchains.is_empty() {
        report.push("spec has no subchains");
    }

    for n in &spec.nodes {
        for e in n.compute_model.check() {
            report.push(format!("node `{}`: {e}", n.id));
        }
        if let Some(p) = n.fixed_period_ms {
            if p <= 0.0 {
                report.push(format!("node `{}`: fixed_period_ms must be positive", n.id));
            }
        }
        // c^q must be non-increasing in q and anchored at the nominal cost.
        let mut prev: Option<f64> = None;
        for (&q, &c) in &n.max_parallel_cost_table {
            if c <= 0.0 {
                report.push(format!("node `{}`: cost table entry q={q} not positive", n.id));
            }
            if let Some(p) = prev {
                if c > p + 1e-9 {
                    report.push(format!(
                        "node `{}`: cost table not non-increasing at q={q}",
                        n.id
                    ));
                }
            }
            prev = Some(c);
        }
        if let Some(&c1) = n.max_parallel_cost_table.get(&1) {
            let nominal = n.compute_model.nominal_ms();
            if nominal > 0.0 && (c1 - nominal).abs() > 1e-6 * nominal.max(1.0) {
                report.push(format!(
                    "node `{}`: cost table entry for q=1 ({c1}) must equal the nominal cost ({nominal})",
                    n.id
                ));
            }
        }
    }

    // Subchain partition: every node in exactly one subchain.
    let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
    for s in &spec.subchains {
        if s.node_ids.is_empty() {
            report.push(format!("subchain `{}` has no nodes", s.id));
            continue;
        }
        for nid in &s.node_ids {
            if let Some(other) = seen.insert(nid, &s.id) {
                report.push(format!(
                    "node `{nid}` appears in multiple subchains (`{other}` and `{}`)",
                    s.id
                ));
            }
        }
        for pair in s.node_ids.windows(2) {
            if !spec.has_edge(&pair[0], &pair[1]) {
                report.push(format!(
                    "subchain `{}`: no edge `{}` -> `{}` to carry the event-driven order",
                    s.id, pair[0], pair[1]
                ));
            }
        }
        // streaming nodes must head their own subchain
        for (i, nid) in s.node_ids.iter().enumerate() {
            if let Some(n) = spec.node(nid) {
                if n.streaming && i != 0 {
                    report.push(format!(
                        "streaming node `{nid}` must be the head of its subchain"
                    ));
                }
            }
        }
        // scheduled flag must be uniform within a subchain
        let flags: BTreeSet<bool> = s
            .node_ids
            .iter()
            .filter_map(|id| spec.node(id))
            .map(|n| n.explicitly_scheduled)
            .collect();
        if flags.len() > 1 {
            report.push(format!(
                "subchain `{}` mixes scheduled and non-scheduled nodes",
                s.id
            ));
        }
        // non-scheduled subchains fire at the head's own fixed rate
        if flags.contains(&false) {
            let head_fixed = spec
                .node(s.head())
                .and_then(|n| n.fixed_period_ms)
                .map_or(false, |p| p > 0.0);
            if !head_fixed {
                report.push(format!(
                    "subchain `{}` is not explicitly scheduled; its head needs a fixed_period_ms",
                    s.id
                ));
            }
        }
    }
    for n in &spec.nodes {
        if !seen.contains_key(n.id.as_str()) {
            report.push(format!("node `{}` belongs to no subchain", n.id));
        }
    }

    if let Some(cycle) = find_node_cycle(spec) {
        report.push(format!("cycle detected: {}", cycle.join(" -> ")));
    }

    for c in &spec.chains {
        if c.subchain_ids.is_empty() {
            report.push(format!("chain `{}` is empty", c.id));
            continue;
        }
        for pair in c.subchain_ids.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let connected = match (spec.subchain(a), spec.subchain(b)) {
                (Some(sa), Some(sb)) => sa
                    .node_ids
                    .iter()
                    .any(|x| sb.node_ids.iter().any(|y| spec.has_edge(x, y))),
                _ => false,
            };
            if !connected {
                report.push(format!(
                    "chain `{}`: consecutive subchains `{a}` -> `{b}` share no DAG edge",
                    c.id
                ));
            }
        }
        if let Some(first) = spec.subchain(&c.subchain_ids[0]) {
            if !spec.subchain_is_chain_source(first) {
                report.push(format!(
                    "chain `{}`: first subchain `{}` is not a source",
                    c.id, first.id
                ));
            }
        }
    }

    let o = &spec.objective;
    for (name, map) in [("w1c", &o.w1c), ("w2c", &o.w2c), ("w3s", &o.w3s)] {
        for (id, w) in map {
            if *w < 0.0 {
                report.push(format!("{name}[{id}] is negative"));
            }
        }
    }
    for (id, w) in &o.response_time_weights {
        if *w < 0.0 {
            report.push(format!("response_time_weights[{id}] is negative"));
        }
    }
    let bound_maps: [(&str, Box<dyn Iterator<Item = (&String, &Bound)>>); 3] = [
        ("node throughput", Box::new(o.node_throughput_bounds_hz.iter())),
        ("chain period", Box::new(o.chain_period_bounds_ms.iter())),
        ("chain latency", Box::new(o.chain_latency_bounds_ms.iter())),
    ];
    for (name, it) in bound_maps {
        for (id, b) in it {
            if let (Some(lo), Some(hi)) = (b.min, b.max) {
                if lo > hi {
                    report.push(format!("{name} bound for `{id}`: min {lo} > max {hi}"));
                }
            }
        }
    }
    if !o.priority.is_empty() {
        let scheduled: Vec<&SubchainSpec> = spec
            .subchains
            .iter()
            .filter(|s| {
                s.node_ids
                    .iter()
                    .all(|id| spec.node(id).map_or(true, |n| n.explicitly_scheduled))
            })
            .collect();
        let prio: BTreeSet<&str> = o.priority.iter().map(|s| s.as_str()).collect();
        if prio.len() != o.priority.len() {
            report.push("priority order repeats a subchain");
        }
        for s in scheduled {
            if !prio.contains(s.id.as_str()) {
                report.push(format!(
                    "priority order misses explicitly scheduled subchain `{}`",
                    s.id
                ));
            }
        }
    }
    if o.relax_scale <= 1.0 {
        report.push("relax_scale must exceed 1");
    }

    let k = &spec.constants;
    for (name, v) in [
        ("switch_overhead_ms", k.switch_overhead_ms),
        ("slack_fraction", k.slack_fraction),
        ("min_cpu_ms_per_hyperperiod", k.min_cpu_ms_per_hyperperiod),
        ("stage1_period_s", k.stage1_period_s),
        ("stage2_period_s", k.stage2_period_s),
        ("estimator_percentile", k.estimator_percentile),
        ("streaming_percentile", k.streaming_percentile),
        ("bootstrap_compute_ms", k.bootstrap_compute_ms),
        ("bootstrap_solve_delay_s", k.bootstrap_solve_delay_s),
        ("max_streaming_fraction", k.max_streaming_fraction),
        ("relax_cap", k.relax_cap),
        ("big_m", k.big_m),
    ] {
        if v < 0.0 || (v == 0.0 && !matches!(name, "switch_overhead_ms" | "slack_fraction")) {
            report.push(format!("constant {name} must be positive"));
        }
    }
    if k.estimator_window == 0 || k.max_reciprocal == 0 || k.streaming_grid_points < 2 {
        report.push("window/grid constants must be positive");
    }

    report
}

fn find_node_cycle(spec: &DagSpec) -> Option<Vec<String>> {
    let ids: Vec<&str> = spec.nodes.iter().map(|n| n.id.as_str()).collect();
    let idx: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut adj = vec![Vec::new(); ids.len()];
    for (a, b) in &spec.edges {
        if let (Some(&i), Some(&j)) = (idx.get(a.as_str()), idx.get(b.as_str())) {
            adj[i].push(j);
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; ids.len()];
    let mut stack = Vec::new();
    fn dfs(
        v: usize,
        adj: &[Vec<usize>],
        state: &mut [u8],
        stack: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        state[v] = 1;
        stack.push(v);
        for &w in &adj[v] {
            if state[w] == 1 {
                let pos = stack.iter().position(|&x| x == w).unwrap();
                let mut cyc = stack[pos..].to_vec();
                cyc.push(w);
                return Some(cyc);
            }
            if state[w] == 0 {
                if let Some(c) = dfs(w, adj, state, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        state[v] = 2;
        None
    }
    for v in 0..ids.len() {
        if state[v] == 0 {
            if let Some(cyc) = dfs(v, &adj, &mut state, &mut stack) {
                return Some(cyc.into_iter().map(|i| ids[i].to_string()).collect());
            }
        }
    }
    None
}

const MAX_ENUMERATED_CHAINS: usize = 100_000;

/// Derives all source-to-sink paths of the subchain graph.
///
/// Streaming subchains re-time their inputs, so they cut paths: edges into a
/// streaming subchain are dropped and the streaming subchain starts paths of
/// its own. When the spec declares chains, the derived set must equal the
/// declared set.
pub fn enumerate_chains(spec: &DagSpec) -> Result<Vec<ChainSpec>> {
    if find_node_cycle(spec).is_some() {
        return Err(Error::Invalid("cannot enumerate chains of a cyclic DAG".into()));
    }
    let n = spec.subchains.len();
    let sub_of: BTreeMap<&str, usize> = spec
        .subchains
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.node_ids.iter().map(move |id| (id.as_str(), i)))
        .collect();
    let streaming: Vec<bool> = spec
        .subchains
        .iter()
        .map(|s| spec.node(s.head()).map_or(false, |n| n.streaming))
        .collect();
    let mut adj = vec![BTreeSet::new(); n];
    for (a, b) in &spec.edges {
        if let (Some(&i), Some(&j)) = (sub_of.get(a.as_str()), sub_of.get(b.as_str())) {
            if i != j && !streaming[j] {
                adj[i].insert(j);
            }
        }
    }
    let sources: Vec<usize> = (0..n)
        .filter(|&i| spec.subchain_is_chain_source(&spec.subchains[i]))
        .collect();

    let mut paths: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn walk(
        v: usize,
        adj: &[BTreeSet<usize>],
        stack: &mut Vec<usize>,
        paths: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        stack.push(v);
        let next: Vec<usize> = adj[v].iter().copied().filter(|w| !stack.contains(w)).collect();
        if adj[v].is_empty() {
            paths.push(stack.clone());
            if paths.len() > MAX_ENUMERATED_CHAINS {
                return Err(Error::InstanceTooLarge(format!(
                    "more than {MAX_ENUMERATED_CHAINS} chains"
                )));
            }
        } else {
            // paths blocked before a true sink (only via already-visited
            // subchains) are not chains
            for w in next {
                walk(w, adj, stack, paths)?;
            }
        }
        stack.pop();
        Ok(())
    }
    for s in sources {
        walk(s, &adj, &mut stack, &mut paths)?;
    }
    paths.sort();
    paths.dedup();

    let derived: Vec<ChainSpec> = paths
        .iter()
        .enumerate()
        .map(|(i, p)| ChainSpec {
            id: spec
                .chains
                .iter()
                .find(|c| {
                    c.subchain_ids
                        .iter()
                        .map(|id| spec.subchains.iter().position(|s| &s.id == id).unwrap())
                        .collect::<Vec<_>>()
                        == *p
                })
                .map(|c| c.id.clone())
                .unwrap_or_else(|| format!("chain{i}")),
            subchain_ids: p.iter().map(|&i| spec.subchains[i].id.clone()).collect(),
        })
        .collect();

    if !spec.chains.is_empty() {
        let declared: BTreeSet<Vec<&str>> = spec
            .chains
            .iter()
            .map(|c| c.subchain_ids.iter().map(|s| s.as_str()).collect())
            .collect();
        let found: BTreeSet<Vec<&str>> = derived
            .iter()
            .map(|c| c.subchain_ids.iter().map(|s| s.as_str()).collect())
            .collect();
        if declared != found {
            let missing: Vec<String> = found
                .difference(&declared)
                .map(|p| p.join("->"))
                .collect();
            let extra: Vec<String> = declared
                .difference(&found)
                .map(|p| p.join("->"))
                .collect();
            return Err(Error::ChainMismatch(format!(
                "declared-only: [{}], derived-only: [{}]",
                extra.join(", "),
                missing.join(", ")
            )));
        }
    }
    Ok(derived)
}

#[cfg(test)]
mod tests;
