//! Closed-form metric models.
//!
//! All inputs and outputs are in milliseconds; throughput is carried as a
//! period and converted to hertz only at output boundaries.

use crate::error::{Error, Result};

/// Per-subchain timing as seen by the coarse allocation stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubchainTiming {
    /// Trigger period.
    pub period_ms: f64,
    /// Time from trigger to output. Equals the period when the subchain
    /// shares a core; at least the summed member compute otherwise.
    pub execution_ms: f64,
    /// Per-node parallelism degree.
    pub parallelism: u32,
    /// Number of inputs in flight (pipeline width).
    pub pipeline_width: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainMetrics {
    /// Worst-case one-input processing delay.
    pub latency_ms: f64,
    /// Reciprocal average throughput.
    pub period_ms: f64,
    /// latency + period.
    pub response_time_ms: f64,
}

impl ChainMetrics {
    fn new(latency_ms: f64, period_ms: f64) -> ChainMetrics {
        ChainMetrics {
            latency_ms,
            period_ms,
            response_time_ms: latency_ms + period_ms,
        }
    }
}

/// View of the objective restricted to the weight vectors.
#[derive(Debug, Clone, Default)]
pub struct MetricWeights {
    /// (latency weight, period weight) per chain.
    pub chain: Vec<(f64, f64)>,
    /// Period weight per subchain.
    pub subchain: Vec<f64>,
}

/// Steady-state trigger period of a subchain alone on `k` cores when every
/// node may use `q` of them: the slowest node bounds the period from below,
/// as does total work divided across the floor(k/q) pipeline lanes.
pub fn pipelined_period(costs_at_q: &[f64], k: u32, q: u32) -> Result<f64> {
    if q < 1 || q > k {
        return Err(Error::Invalid(format!("parallelism {q} out of range 1..={k}")));
    }
    if costs_at_q.is_empty() {
        return Err(Error::Invalid("empty cost vector".into()));
    }
    let lanes = (k / q) as f64;
    let max = costs_at_q.iter().cloned().fold(f64::MIN, f64::max);
    let sum: f64 = costs_at_q.iter().sum();
    Ok(max.max(sum / lanes))
}

/// Chain metrics from subchain periods alone (fine-grained stage form): an
/// input may wait one full period at every downstream subchain and takes one
/// period to process there, so latency is p1 + sum of 2*p over the rest.
pub fn chain_metrics_stage2(periods_ms: &[f64]) -> Result<ChainMetrics> {
    if periods_ms.is_empty() {
        return Err(Error::Invalid("empty chain".into()));
    }
    let latency = periods_ms[0] + 2.0 * periods_ms[1..].iter().sum::<f64>();
    let period = periods_ms.iter().cloned().fold(f64::MIN, f64::max);
    Ok(ChainMetrics::new(latency, period))
}

/// Chain metrics from subchain timings (coarse allocation form): latency is
/// the source's execution time plus, per downstream subchain, one execution
/// plus one period of waiting.
pub fn chain_metrics_stage1(timings: &[SubchainTiming]) -> Result<ChainMetrics> {
    if timings.is_empty() {
        return Err(Error::Invalid("empty chain".into()));
    }
    let latency = timings[0].execution_ms
        + timings[1..]
            .iter()
            .map(|t| t.execution_ms + t.period_ms)
            .sum::<f64>();
    let period = timings.iter().map(|t| t.period_ms).fold(f64::MIN, f64::max);
    Ok(ChainMetrics::new(latency, period))
}

/// Weighted linear sum of the low-level metrics.
pub fn objective(
    chain_metrics: &[ChainMetrics],
    subchain_periods_ms: &[f64],
    weights: &MetricWeights,
) -> Result<f64> {
    if weights.chain.len() > chain_metrics.len() {
        return Err(Error::Invalid("missing chain metrics for weighted term".into()));
    }
    if weights.subchain.len() > subchain_periods_ms.len() {
        return Err(Error::Invalid("missing subchain period for weighted term".into()));
    }
    let chains: f64 = weights
        .chain
        .iter()
        .zip(chain_metrics)
        .map(|(&(w1, w2), m)| w1 * m.latency_ms + w2 * m.period_ms)
        .sum();
    let subs: f64 = weights
        .subchain
        .iter()
        .zip(subchain_periods_ms)
        .map(|(&w3, &p)| w3 * p)
        .sum();
    Ok(chains + subs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipelined_period_single_core() {
        // total work dominates on one core
        let p = pipelined_period(&[25.0, 60.0, 1.0], 1, 1).unwrap();
        assert_eq!(p, 86.0);
    }

    #[test]
    fn pipelined_period_two_cores() {
        // the slowest node dominates across two lanes
        let p = pipelined_period(&[25.0, 60.0, 1.0], 2, 1).unwrap();
        assert_eq!(p, 60.0);
    }

    #[test]
    fn pipelined_period_single_node() {
        assert_eq!(pipelined_period(&[10.0], 1, 1).unwrap(), 10.0);
    }

    #[test]
    fn pipelined_period_rejects_q_above_k() {
        assert!(pipelined_period(&[10.0], 1, 2).is_err());
    }

    #[test]
    fn stage2_metrics_two_subchains() {
        let m = chain_metrics_stage2(&[10.0, 20.0]).unwrap();
        assert_eq!(m.latency_ms, 50.0);
        assert_eq!(m.period_ms, 20.0);
        assert_eq!(m.response_time_ms, 70.0);
    }

    #[test]
    fn stage2_metrics_single_subchain() {
        let m = chain_metrics_stage2(&[42.0]).unwrap();
        assert_eq!(m.latency_ms, 42.0);
        assert_eq!(m.period_ms, 42.0);
        assert_eq!(m.response_time_ms, 84.0);
    }

    #[test]
    fn stage2_metrics_three_equal() {
        let m = chain_metrics_stage2(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(m.latency_ms, 25.0);
        assert_eq!(m.period_ms, 5.0);
        assert_eq!(m.response_time_ms, 30.0);
    }

    fn timing(ex: f64, p: f64) -> SubchainTiming {
        SubchainTiming {
            period_ms: p,
            execution_ms: ex,
            parallelism: 1,
            pipeline_width: 1,
        }
    }

    #[test]
    fn stage1_metrics_examples() {
        let m = chain_metrics_stage1(&[timing(10.0, 10.0), timing(20.0, 20.0)]).unwrap();
        assert_eq!(m.latency_ms, 50.0);

        let m = chain_metrics_stage1(&[timing(86.0, 86.0)]).unwrap();
        assert_eq!(m.latency_ms, 86.0);
        assert_eq!(m.response_time_ms, 172.0);

        let m = chain_metrics_stage1(&[timing(5.0, 10.0), timing(5.0, 40.0)]).unwrap();
        assert_eq!(m.latency_ms, 50.0);
        assert_eq!(m.period_ms, 40.0);
        assert_eq!(m.response_time_ms, 90.0);
    }

    #[test]
    fn empty_chain_is_an_error() {
        assert!(chain_metrics_stage2(&[]).is_err());
        assert!(chain_metrics_stage1(&[]).is_err());
    }

    #[test]
    fn objective_examples() {
        let metrics = [ChainMetrics::new(50.0, 20.0)];
        // all weights zero
        let w = MetricWeights {
            chain: vec![(0.0, 0.0)],
            subchain: vec![0.0],
        };
        assert_eq!(objective(&metrics, &[10.0], &w).unwrap(), 0.0);
        // unit weights
        let w = MetricWeights {
            chain: vec![(1.0, 1.0)],
            subchain: vec![],
        };
        assert_eq!(objective(&metrics, &[10.0], &w).unwrap(), 70.0);
    }

    #[test]
    fn objective_weighted_sum_matches_hand_total() {
        // three chains + four subchain periods summed by hand
        let metrics = [
            ChainMetrics::new(100.0, 50.0),
            ChainMetrics::new(700.0, 650.0),
            ChainMetrics::new(900.0, 650.0),
        ];
        let periods = [50.0, 650.0, 200.0, 400.0];
        let w = MetricWeights {
            chain: vec![(1.0, 1.0), (0.005, 0.005), (0.005, 0.005)],
            subchain: vec![0.0, 0.5, 0.0, 0.0],
        };
        let got = objective(&metrics, &periods, &w).unwrap();
        let want = (100.0 + 50.0)
            + 0.005 * (700.0 + 650.0)
            + 0.005 * (900.0 + 650.0)
            + 0.5 * 650.0;
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn objective_missing_metric_is_error() {
        let w = MetricWeights {
            chain: vec![(1.0, 1.0)],
            subchain: vec![],
        };
        assert!(objective(&[], &[], &w).is_err());
    }

    #[test]
    fn rt_identity_and_monotonicity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        for _ in 0..300 {
            let n = rng.gen_range(1..6);
            let periods: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..100.0)).collect();
            let m = chain_metrics_stage2(&periods).unwrap();
            assert_eq!(m.response_time_ms, m.latency_ms + m.period_ms);

            // increasing any period never decreases any metric
            let i = rng.gen_range(0..n);
            let mut bumped = periods.clone();
            bumped[i] += rng.gen_range(0.0..50.0);
            let mb = chain_metrics_stage2(&bumped).unwrap();
            assert!(mb.latency_ms >= m.latency_ms);
            assert!(mb.period_ms >= m.period_ms);
            assert!(mb.response_time_ms >= m.response_time_ms);
        }
    }

    #[test]
    fn pipelined_period_dominates_both_terms() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        for _ in 0..300 {
            let m = rng.gen_range(1..5);
            let costs: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..40.0)).collect();
            let k = rng.gen_range(1..5u32);
            let q = rng.gen_range(1..=k);
            let p = pipelined_period(&costs, k, q).unwrap();
            for &c in &costs {
                assert!(p >= c - 1e-12);
            }
            assert!(p >= costs.iter().sum::<f64>() / (k / q) as f64 - 1e-12);
            if k == 1 {
                assert!((p - costs.iter().sum::<f64>()).abs() < 1e-12);
            }
        }
    }

    /// Worst-case soundness of the period-doubling latency form: a discrete
    /// event walk of a two-subchain chain, over a dense grid of phase
    /// offsets, never sees a per-input latency above the analytical bound.
    /// Subchains run one execution per period (shared-core semantics).
    #[test]
    fn stage2_latency_bounds_brute_force_two_subchain_walk() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..40 {
            let p1: f64 = rng.gen_range(1.0..30.0);
            let p2: f64 = rng.gen_range(1.0..30.0);
            let bound = chain_metrics_stage2(&[p1, p2]).unwrap().latency_ms;
            for phase_step in 0..23 {
                let phase = p2 * phase_step as f64 / 23.0;
                // subchain 1 captures at k*p1, outputs at k*p1 + p1
                // subchain 2 triggers at phase + m*p2, consumes the latest
                // subchain-1 output, emits one period later
                let mut worst: f64 = 0.0;
                let mut last_consumed = f64::NEG_INFINITY;
                for m in 0..200 {
                    let t2 = phase + m as f64 * p2;
                    // newest subchain-1 output at or before t2
                    let k = ((t2 - p1) / p1).floor();
                    if k < 0.0 {
                        continue;
                    }
                    let capture = k * p1;
                    if capture <= last_consumed {
                        continue; // stale input, no new sample
                    }
                    last_consumed = capture;
                    let latency = (t2 + p2) - capture;
                    worst = worst.max(latency);
                }
                assert!(
                    worst <= bound + 1e-9,
                    "p1={p1} p2={p2} phase={phase} worst={worst} bound={bound}"
                );
            }
        }
    }
}
