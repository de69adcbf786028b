use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Per-node compute-time model, all values in milliseconds.
///
/// Models compose: `bimodal` and `spike` wrap inner models, so e.g. a node
/// with a slowly growing cost and occasional expensive episodes is
/// `spike { base: drift { .. }, .. }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComputeModel {
    Constant {
        ms: f64,
    },
    Uniform {
        lo_ms: f64,
        hi_ms: f64,
    },
    TruncatedNormal {
        mean_ms: f64,
        std_ms: f64,
        lo_ms: f64,
        hi_ms: f64,
    },
    Bimodal {
        p_cheap: f64,
        cheap: Box<ComputeModel>,
        expensive: Box<ComputeModel>,
    },
    /// Cost grows linearly with simulated time.
    Drift {
        base_ms: f64,
        slope_ms_per_s: f64,
    },
    /// Base model plus additive episodes arriving at `rate_hz`.
    Spike {
        base: Box<ComputeModel>,
        rate_hz: f64,
        spike_ms: f64,
    },
    /// Playback of measured durations from a CSV file (one value per line,
    /// cycled when exhausted).
    Trace {
        path: String,
    },
}

impl ComputeModel {
    /// Conservative planning cost: the worst-case support bound of the model
    /// (at time zero for drifting models). Used by solvers when no measured
    /// estimate is available yet.
    pub fn nominal_ms(&self) -> f64 {
        match self {
            ComputeModel::Constant { ms } => *ms,
            ComputeModel::Uniform { hi_ms, .. } => *hi_ms,
            ComputeModel::TruncatedNormal { hi_ms, .. } => *hi_ms,
            ComputeModel::Bimodal {
                cheap, expensive, ..
            } => cheap.nominal_ms().max(expensive.nominal_ms()),
            ComputeModel::Drift { base_ms, .. } => *base_ms,
            // Spikes are transient; planning uses the base cost.
            ComputeModel::Spike { base, .. } => base.nominal_ms(),
            ComputeModel::Trace { .. } => 0.0, // resolved when the trace is loaded
        }
    }

    pub fn check(&self) -> Vec<String> {
        let mut errs = Vec::new();
        match self {
            ComputeModel::Constant { ms } => {
                if *ms <= 0.0 {
                    errs.push("constant compute must be positive".into());
                }
            }
            ComputeModel::Uniform { lo_ms, hi_ms } => {
                if *lo_ms <= 0.0 || hi_ms < lo_ms {
                    errs.push("uniform compute requires 0 < lo <= hi".into());
                }
            }
            ComputeModel::TruncatedNormal {
                std_ms,
                lo_ms,
                hi_ms,
                ..
            } => {
                if *lo_ms <= 0.0 || hi_ms < lo_ms || *std_ms < 0.0 {
                    errs.push("truncated normal requires 0 < lo <= hi and std >= 0".into());
                }
            }
            ComputeModel::Bimodal {
                p_cheap,
                cheap,
                expensive,
            } => {
                if !(*p_cheap > 0.0 && *p_cheap < 1.0) {
                    errs.push("bimodal requires 0 < p_cheap < 1".into());
                }
                errs.extend(cheap.check());
                errs.extend(expensive.check());
            }
            ComputeModel::Drift {
                base_ms,
                slope_ms_per_s,
            } => {
                if *base_ms <= 0.0 || *slope_ms_per_s < 0.0 {
                    errs.push("drift requires base > 0 and slope >= 0".into());
                }
            }
            ComputeModel::Spike {
                base,
                rate_hz,
                spike_ms,
            } => {
                if *rate_hz < 0.0 || *spike_ms < 0.0 {
                    errs.push("spike requires rate >= 0 and spike cost >= 0".into());
                }
                errs.extend(base.check());
            }
            ComputeModel::Trace { path } => {
                if path.is_empty() {
                    errs.push("trace model requires a file path".into());
                }
            }
        }
        errs
    }
}

/// Stateful per-node sampler driving one `ComputeModel` from a dedicated RNG
/// stream, so draw order depends only on execution order.
pub struct ComputeSampler {
    model: ComputeModel,
    rng: ChaCha12Rng,
    next_spike_s: f64,
    trace_values: Vec<f64>,
    trace_pos: usize,
}

impl ComputeSampler {
    pub fn new(model: ComputeModel, rng: ChaCha12Rng) -> Self {
        ComputeSampler {
            model,
            rng,
            next_spike_s: -1.0,
            trace_values: Vec::new(),
            trace_pos: 0,
        }
    }

    /// Loads trace playback values (ms). Must be called before sampling a
    /// `Trace` model.
    pub fn load_trace(&mut self, values: Vec<f64>) {
        self.trace_values = values;
    }

    /// Draws one execution cost at simulated time `now_s`.
    pub fn sample_ms(&mut self, now_s: f64) -> f64 {
        let model = self.model.clone();
        let v = self.sample_model(&model, now_s);
        v.max(1e-3)
    }

    fn sample_model(&mut self, model: &ComputeModel, now_s: f64) -> f64 {
        match model {
            ComputeModel::Constant { ms } => *ms,
            ComputeModel::Uniform { lo_ms, hi_ms } => {
                if hi_ms > lo_ms {
                    self.rng.gen_range(*lo_ms..*hi_ms)
                } else {
                    *lo_ms
                }
            }
            ComputeModel::TruncatedNormal {
                mean_ms,
                std_ms,
                lo_ms,
                hi_ms,
            } => {
                for _ in 0..64 {
                    let v = mean_ms + std_ms * sample_standard_normal(&mut self.rng);
                    if v >= *lo_ms && v <= *hi_ms {
                        return v;
                    }
                }
                mean_ms.clamp(*lo_ms, *hi_ms)
            }
            ComputeModel::Bimodal {
                p_cheap,
                cheap,
                expensive,
            } => {
                let u: f64 = self.rng.gen();
                if u < *p_cheap {
                    self.sample_model(cheap, now_s)
                } else {
                    self.sample_model(expensive, now_s)
                }
            }
            ComputeModel::Drift {
                base_ms,
                slope_ms_per_s,
            } => base_ms + slope_ms_per_s * now_s,
            ComputeModel::Spike {
                base,
                rate_hz,
                spike_ms,
            } => {
                let mut v = self.sample_model(base, now_s);
                if *rate_hz > 0.0 {
                    if self.next_spike_s < 0.0 {
                        self.next_spike_s = self.draw_exponential(*rate_hz);
                    }
                    if now_s >= self.next_spike_s {
                        v += spike_ms;
                        let gap = self.draw_exponential(*rate_hz);
                        self.next_spike_s = now_s + gap;
                    }
                }
                v
            }
            ComputeModel::Trace { .. } => {
                if self.trace_values.is_empty() {
                    return 1.0;
                }
                let v = self.trace_values[self.trace_pos % self.trace_values.len()];
                self.trace_pos += 1;
                v
            }
        }
    }

    fn draw_exponential(&mut self, rate_hz: f64) -> f64 {
        let u: f64 = self.rng.gen_range(1e-12..1.0);
        -u.ln() / rate_hz
    }
}

/// Box-Muller without caching the second draw, keeping one draw per call.
fn sample_standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
