//! Online compute-time tracking: per-node sliding windows, tail estimation
//! with multimodal handling, and streaming output-rate observation.

use std::collections::VecDeque;

use crate::model::Constants;

/// Nearest-rank percentile: the value at index ceil(q*n) (1-based) of the
/// ascending sort. Always a member of the window.
pub fn nearest_rank(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    Some(sorted[rank - 1])
}

#[derive(Debug, Clone, Default)]
pub struct NodeStats {
    samples: VecDeque<f64>,
    timestamps: VecDeque<f64>,
}

/// One mode of a (possibly multimodal) compute-time distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub share: f64,
    pub p95_ms: f64,
}

#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    pub window: usize,
    pub percentile: f64,
    pub streaming_percentile: f64,
    pub bootstrap_ms: f64,
    pub mode_ratio_threshold: f64,
    pub mode_min_share: f64,
    pub mode_min_samples: usize,
}

impl EstimatorConfig {
    pub fn from_constants(c: &Constants) -> Self {
        EstimatorConfig {
            window: c.estimator_window,
            percentile: c.estimator_percentile,
            streaming_percentile: c.streaming_percentile,
            bootstrap_ms: c.bootstrap_compute_ms,
            mode_ratio_threshold: c.mode_ratio_threshold,
            mode_min_share: c.mode_min_share,
            mode_min_samples: c.mode_min_samples,
        }
    }
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig::from_constants(&Constants::default())
    }
}

/// Splits a window into one or two modes by an exhaustive threshold scan
/// minimizing within-cluster variance. Two modes are accepted only when the
/// cluster means differ by the configured ratio and both clusters carry a
/// minimum share of the samples.
pub fn classify_modes(window: &[f64], cfg: &EstimatorConfig) -> Vec<Vec<f64>> {
    let n = window.len();
    if n < cfg.mode_min_samples {
        return vec![window.to_vec()];
    }
    let mut sorted = window.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // prefix sums for O(1) cluster statistics per split point
    let mut prefix = vec![0.0; n + 1];
    let mut prefix_sq = vec![0.0; n + 1];
    for (i, &v) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
        prefix_sq[i + 1] = prefix_sq[i] + v * v;
    }
    let sse = |a: usize, b: usize| -> f64 {
        // sum of squared deviations of sorted[a..b]
        let m = (b - a) as f64;
        let s = prefix[b] - prefix[a];
        (prefix_sq[b] - prefix_sq[a]) - s * s / m
    };

    let mut best: Option<(f64, usize)> = None;
    for split in 1..n {
        let cost = sse(0, split) + sse(split, n);
        if best.map_or(true, |(c, _)| cost < c - 1e-12) {
            best = Some((cost, split));
        }
    }
    let Some((_, split)) = best else {
        return vec![sorted];
    };
    let low = &sorted[..split];
    let high = &sorted[split..];
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let (m_lo, m_hi) = (mean(low), mean(high));
    let min_count = (cfg.mode_min_share * n as f64).ceil() as usize;
    let distinct = m_lo > 0.0 && m_hi / m_lo >= cfg.mode_ratio_threshold;
    if distinct && low.len() >= min_count && high.len() >= min_count {
        vec![low.to_vec(), high.to_vec()]
    } else {
        vec![sorted]
    }
}

impl NodeStats {
    /// Records one compute-time sample (FIFO within the window).
    pub fn record(&mut self, duration_ms: f64, timestamp_s: f64, window: usize) {
        assert!(duration_ms > 0.0, "durations must be positive");
        self.samples.push_back(duration_ms);
        self.timestamps.push_back(timestamp_s);
        while self.samples.len() > window {
            self.samples.pop_front();
            self.timestamps.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn window(&self) -> Vec<f64> {
        self.samples.iter().copied().collect()
    }

    pub fn modes(&self, cfg: &EstimatorConfig) -> Vec<Mode> {
        let window = self.window();
        classify_modes(&window, cfg)
            .into_iter()
            .map(|m| Mode {
                share: m.len() as f64 / window.len() as f64,
                p95_ms: nearest_rank(&m, cfg.percentile).unwrap(),
            })
            .collect()
    }

    /// Tail estimate: the windowed 95th percentile, or for multimodal nodes
    /// the frequency-weighted sum of per-mode 95th percentiles. Returns the
    /// bootstrap value before the first sample.
    pub fn estimate(&self, cfg: &EstimatorConfig) -> f64 {
        if self.samples.is_empty() {
            return cfg.bootstrap_ms;
        }
        self.modes(cfg)
            .iter()
            .map(|m| m.share * m.p95_ms)
            .sum()
    }
}

/// Tracks output times of one streaming subchain and reports a percentile of
/// the inter-output gaps as the observed output period.
#[derive(Debug, Clone, Default)]
pub struct OutputRate {
    gaps_ms: VecDeque<f64>,
    last_output_s: Option<f64>,
}

impl OutputRate {
    pub fn record_output(&mut self, timestamp_s: f64, window: usize) {
        if let Some(last) = self.last_output_s {
            let gap = (timestamp_s - last) * 1000.0;
            if gap > 0.0 {
                self.gaps_ms.push_back(gap);
                while self.gaps_ms.len() > window {
                    self.gaps_ms.pop_front();
                }
            }
        }
        self.last_output_s = Some(timestamp_s);
    }

    pub fn observed_period_ms(&self, cfg: &EstimatorConfig) -> Option<f64> {
        let gaps: Vec<f64> = self.gaps_ms.iter().copied().collect();
        nearest_rank(&gaps, cfg.streaming_percentile)
    }
}

/// One writer (the event loop) updates; re-solves read consistent snapshots.
#[derive(Debug, Clone)]
pub struct Estimator {
    pub cfg: EstimatorConfig,
    nodes: Vec<NodeStats>,
    streaming: Vec<OutputRate>,
}

/// Frozen view used by the solvers.
#[derive(Debug, Clone)]
pub struct Estimates {
    pub node_ms: Vec<f64>,
    /// Observed output period per subchain; None before enough outputs.
    pub streaming_period_ms: Vec<Option<f64>>,
}

impl Estimator {
    pub fn new(node_count: usize, subchain_count: usize, cfg: EstimatorConfig) -> Self {
        Estimator {
            cfg,
            nodes: vec![NodeStats::default(); node_count],
            streaming: vec![OutputRate::default(); subchain_count],
        }
    }

    pub fn record(&mut self, node: usize, duration_ms: f64, timestamp_s: f64) {
        let window = self.cfg.window;
        self.nodes[node].record(duration_ms, timestamp_s, window);
    }

    pub fn record_output(&mut self, subchain: usize, timestamp_s: f64) {
        let window = self.cfg.window;
        self.streaming[subchain].record_output(timestamp_s, window);
    }

    pub fn node(&self, node: usize) -> &NodeStats {
        &self.nodes[node]
    }

    pub fn estimate(&self, node: usize) -> f64 {
        self.nodes[node].estimate(&self.cfg)
    }

    pub fn snapshot(&self) -> Estimates {
        Estimates {
            node_ms: (0..self.nodes.len()).map(|i| self.estimate(i)).collect(),
            streaming_period_ms: self
                .streaming
                .iter()
                .map(|r| r.observed_period_ms(&self.cfg))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EstimatorConfig {
        EstimatorConfig::default()
    }

    #[test]
    fn ring_buffer_evicts_oldest() {
        let mut s = NodeStats::default();
        for i in 1..=51 {
            s.record(i as f64, i as f64, 50);
        }
        assert_eq!(s.len(), 50);
        let w = s.window();
        assert_eq!(w[0], 2.0);
        assert_eq!(*w.last().unwrap(), 51.0);
    }

    #[test]
    fn singleton_window_estimate() {
        let mut s = NodeStats::default();
        s.record(10.0, 0.0, 50);
        assert_eq!(s.estimate(&cfg()), 10.0);
    }

    #[test]
    fn empty_window_uses_bootstrap() {
        let s = NodeStats::default();
        assert_eq!(s.estimate(&cfg()), 5.0);
    }

    #[test]
    fn percentile_of_one_to_fifty_is_48() {
        let window: Vec<f64> = (1..=50).map(|v| v as f64).collect();
        assert_eq!(nearest_rank(&window, 0.95), Some(48.0));
    }

    #[test]
    fn alternating_bimodal_classifies_and_weights() {
        let mut s = NodeStats::default();
        for i in 0..50 {
            let v = if i % 2 == 0 { 2.0 } else { 40.0 };
            s.record(v, i as f64, 50);
        }
        let modes = s.modes(&cfg());
        assert_eq!(modes.len(), 2);
        assert!((modes[0].share - 0.5).abs() < 1e-9);
        assert_eq!(s.estimate(&cfg()), 0.5 * 2.0 + 0.5 * 40.0);
    }

    #[test]
    fn homogeneous_window_is_one_mode() {
        let window: Vec<f64> = (0..50).map(|i| 10.0 + 0.5 * ((i % 3) as f64 - 1.0)).collect();
        assert_eq!(classify_modes(&window, &cfg()).len(), 1);
    }

    #[test]
    fn small_minority_is_not_a_mode() {
        // 95 cheap + 5 expensive: below the 10% share rule
        let mut window = vec![10.0; 95];
        window.extend(vec![100.0; 5]);
        assert_eq!(classify_modes(&window, &cfg()).len(), 1);
        // ...but a spike share above 5% still lands on the 95th percentile
        let mut s = NodeStats::default();
        for i in 0..50 {
            s.record(if i < 46 { 10.0 } else { 100.0 }, i as f64, 50);
        }
        assert_eq!(classify_modes(&s.window(), &cfg()).len(), 1);
        assert_eq!(s.estimate(&cfg()), 100.0);
    }

    #[test]
    fn mode_split_needs_min_samples() {
        let window = vec![2.0, 40.0, 2.0, 40.0, 2.0];
        assert_eq!(classify_modes(&window, &cfg()).len(), 1);
    }

    #[test]
    fn split_is_order_insensitive() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let mut window: Vec<f64> = (0..30).map(|i| if i < 12 { 3.0 } else { 30.0 }).collect();
        let a = classify_modes(&window, &cfg());
        window.shuffle(&mut rng);
        let b = classify_modes(&window, &cfg());
        assert_eq!(a, b);
    }

    // Monotonicity under window dominance holds within a fixed mode
    // structure; a dominating window that flips the two-mode split can move
    // the weighted estimate either way, so the property is checked when both
    // windows classify the same.
    #[test]
    fn estimate_monotone_under_window_dominance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(6);
        let c = cfg();
        let mut checked = 0;
        for _ in 0..200 {
            let n = rng.gen_range(1..60);
            let w1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..50.0)).collect();
            let w2: Vec<f64> = w1.iter().map(|v| v + rng.gen_range(0.0..10.0)).collect();
            let (mut a, mut b) = (NodeStats::default(), NodeStats::default());
            for (i, (&x, &y)) in w1.iter().zip(&w2).enumerate() {
                a.record(x, i as f64, 50);
                b.record(y, i as f64, 50);
            }
            if a.modes(&c).len() == b.modes(&c).len() {
                assert!(b.estimate(&c) >= a.estimate(&c) - 1e-9);
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn nearest_rank_is_window_member() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..80);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
            let v = nearest_rank(&w, rng.gen_range(0.01..0.999)).unwrap();
            assert!(w.contains(&v));
        }
    }

    #[test]
    fn streaming_rate_percentile() {
        let mut r = OutputRate::default();
        // gaps: 10ms x9, 100ms x1
        let mut t = 0.0;
        r.record_output(t, 50);
        for i in 0..10 {
            t += if i == 9 { 0.1 } else { 0.01 };
            r.record_output(t, 50);
        }
        // 75th percentile of {10x9,100} = 10
        let c = cfg();
        assert!((r.observed_period_ms(&c).unwrap() - 10.0).abs() < 1e-6);
    }

    #[test]
    #[should_panic(expected = "positive")]
    fn non_positive_duration_panics() {
        let mut s = NodeStats::default();
        s.record(0.0, 0.0, 50);
    }
}
