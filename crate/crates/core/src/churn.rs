//! Weibull churn: per-node alternating online/offline traces.
//!
//! All nodes share one session-length distribution; the offline gaps
//! (inter-arrival times) follow a distribution specific to the node's region.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, SimRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub shape: f64,
    /// Hours.
    pub scale: f64,
}

impl WeibullParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!(
                "weibull shape and scale must be positive, got shape={shape} scale={scale}"
            )));
        }
        Ok(WeibullParams { shape, scale })
    }

    /// Parameters with the given shape whose mean is `mean` hours.
    pub fn with_mean(shape: f64, mean: f64) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(Error::Config(format!(
                "weibull mean must be positive, got {mean}"
            )));
        }
        WeibullParams::new(shape, 1.0).map(|_| WeibullParams {
            shape,
            scale: mean / gamma(1.0 + 1.0 / shape),
        })
    }

    pub fn mean(&self) -> f64 {
        self.scale * gamma(1.0 + 1.0 / self.shape)
    }

    /// Inverse CDF at `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        self.scale * (-(1.0 - u).ln()).powf(1.0 / self.shape)
    }
}

pub fn sample_weibull<R: Rng + ?Sized>(params: &WeibullParams, rng: &mut R) -> f64 {
    params.quantile(rng.gen::<f64>())
}

/// Knobs of the churn model; shapes and region factors are drawn from the
/// scenario seed within the configured ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChurnParams {
    /// Disables churn: every node is online for the whole horizon.
    pub enabled: bool,
    pub session_mean_hours: f64,
    pub session_shape: f64,
    pub interarrival_mean_hours: f64,
    pub interarrival_shape_range: [f64; 2],
    pub region_factor_range: [f64; 2],
}

impl Default for ChurnParams {
    fn default() -> Self {
        ChurnParams {
            enabled: true,
            session_mean_hours: 2.7,
            session_shape: 0.6,
            interarrival_mean_hours: 2.8,
            interarrival_shape_range: [0.5, 1.0],
            region_factor_range: [0.7, 1.3],
        }
    }
}

impl ChurnParams {
    pub fn validate(&self) -> Result<()> {
        WeibullParams::with_mean(self.session_shape, self.session_mean_hours)?;
        let [lo, hi] = self.interarrival_shape_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Config(format!(
                "bad inter-arrival shape range [{lo}, {hi}]"
            )));
        }
        let [flo, fhi] = self.region_factor_range;
        if !(flo > 0.0 && flo <= 1.0 && fhi >= 1.0) {
            return Err(Error::Config(format!(
                "region factor range [{flo}, {fhi}] must be positive and contain 1"
            )));
        }
        if !(self.interarrival_mean_hours > 0.0) {
            return Err(Error::Config("inter-arrival mean must be positive".into()));
        }
        Ok(())
    }
}

/// Resolved distributions for one topology.
#[derive(Debug, Clone, PartialEq)]
pub struct ChurnModel {
    pub enabled: bool,
    pub session: WeibullParams,
    pub interarrival: Vec<WeibullParams>,
}

impl ChurnModel {
    /// Draws per-region inter-arrival shapes and mean factors. The factors are
    /// centred so that their population-weighted mean is exactly 1, which keeps
    /// the node-averaged offline gap at the configured mean.
    pub fn new(params: &ChurnParams, region_populations: &[usize], seed: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = stream_rng(seed, Stream::Churn, u64::MAX);
        let regions = region_populations.len();
        let [slo, shi] = params.interarrival_shape_range;
        let [flo, fhi] = params.region_factor_range;
        let shapes: Vec<f64> = (0..regions).map(|_| rng.gen_range(slo..=shi)).collect();
        let mut dev: Vec<f64> = (0..regions)
            .map(|_| rng.gen_range(flo..=fhi) - 1.0)
            .collect();

        let total: usize = region_populations.iter().sum();
        if total > 0 {
            let centre: f64 = dev
                .iter()
                .zip(region_populations)
                .map(|(d, &p)| d * p as f64)
                .sum::<f64>()
                / total as f64;
            for d in dev.iter_mut() {
                *d -= centre;
            }
        }
        // Shrink towards 1 until every factor is back inside the range.
        let mut shrink: f64 = 1.0;
        for &d in &dev {
            if d > 0.0 && d > fhi - 1.0 {
                shrink = shrink.min((fhi - 1.0) / d);
            } else if d < 0.0 && -d > 1.0 - flo {
                shrink = shrink.min((1.0 - flo) / -d);
            }
        }
        let interarrival = shapes
            .iter()
            .zip(&dev)
            .map(|(&shape, &d)| {
                WeibullParams::with_mean(shape, params.interarrival_mean_hours * (1.0 + d * shrink))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(ChurnModel {
            enabled: params.enabled,
            session: WeibullParams::with_mean(params.session_shape, params.session_mean_hours)?,
            interarrival,
        })
    }

    pub fn trace(&self, seed: u64, node: usize, region: usize, horizon: f64) -> ChurnTrace {
        if !self.enabled {
            return ChurnTrace::always_online(node, horizon);
        }
        let mut rng: SimRng = stream_rng(seed, Stream::Churn, node as u64);
        generate_trace(
            node,
            region,
            horizon,
            &self.session,
            &self.interarrival,
            &mut rng,
        )
    }
}

/// Half-open online interval `[start, end)` in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub start: f64,
    pub end: f64,
}

impl Session {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChurnTrace {
    pub node: usize,
    pub sessions: Vec<Session>,
    pub horizon: f64,
    /// True when the last session was cut at the horizon.
    pub truncated: bool,
}

pub fn generate_trace<R: Rng + ?Sized>(
    node: usize,
    region: usize,
    horizon: f64,
    session: &WeibullParams,
    interarrival_by_region: &[WeibullParams],
    rng: &mut R,
) -> ChurnTrace {
    assert!(horizon > 0.0, "horizon must be positive");
    let gap = &interarrival_by_region[region];
    let mut sessions = Vec::new();
    let mut truncated = false;
    let mut t = sample_weibull(gap, rng);
    while t < horizon {
        let len = sample_weibull(session, rng);
        let end = t + len;
        if end >= horizon {
            truncated = end > horizon;
            if horizon > t {
                sessions.push(Session {
                    start: t,
                    end: horizon,
                });
            }
            break;
        }
        if len > 0.0 {
            sessions.push(Session { start: t, end });
        }
        t = end + sample_weibull(gap, rng);
    }
    ChurnTrace {
        node,
        sessions,
        horizon,
        truncated,
    }
}

impl ChurnTrace {
    pub fn always_online(node: usize, horizon: f64) -> Self {
        ChurnTrace {
            node,
            sessions: vec![Session {
                start: 0.0,
                end: horizon,
            }],
            horizon,
            truncated: true,
        }
    }

    /// Panics for times outside `[0, horizon)`.
    pub fn is_online(&self, time: f64) -> bool {
        assert!(
            (0.0..self.horizon).contains(&time),
            "time {time} outside trace horizon {}",
            self.horizon
        );
        // First session starting after `time`; the candidate is the one before.
        let idx = self.sessions.partition_point(|s| s.start <= time);
        idx > 0 && time < self.sessions[idx - 1].end
    }

    /// Online hours within `[from, to)`.
    pub fn online_time(&self, from: f64, to: f64) -> f64 {
        if to <= from {
            return 0.0;
        }
        let first = self.sessions.partition_point(|s| s.end <= from);
        let mut total = 0.0;
        for s in &self.sessions[first..] {
            if s.start >= to {
                break;
            }
            total += s.end.min(to) - s.start.max(from);
        }
        total
    }

    /// Sessions that ended before the horizon.
    pub fn complete_sessions(&self) -> &[Session] {
        if self.truncated {
            &self.sessions[..self.sessions.len().saturating_sub(1)]
        } else {
            &self.sessions
        }
    }

    /// Offline gaps between consecutive sessions.
    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.sessions.windows(2).map(|w| w[1].start - w[0].end)
    }
}

/// Fraction of slot `slot` (of each `fpti_slots`-slot cycle, slots `ts_hours`
/// long) that the node spent online over the first `cycles_elapsed` cycles.
pub fn availability_probability(
    trace: &ChurnTrace,
    slot: usize,
    cycles_elapsed: usize,
    fpti_slots: usize,
    ts_hours: f64,
) -> f64 {
    assert!(cycles_elapsed >= 1, "need at least one elapsed cycle");
    assert!(
        slot < fpti_slots,
        "slot {slot} outside a {fpti_slots}-slot cycle"
    );
    let cycle_hours = fpti_slots as f64 * ts_hours;
    let online: f64 = (0..cycles_elapsed)
        .map(|c| {
            let start = c as f64 * cycle_hours + slot as f64 * ts_hours;
            trace.online_time(start, start + ts_hours)
        })
        .sum();
    (online / (cycles_elapsed as f64 * ts_hours)).clamp(0.0, 1.0)
}

/// Availability of every slot of the cycle.
pub fn availability_vector(
    trace: &ChurnTrace,
    cycles_elapsed: usize,
    fpti_slots: usize,
    ts_hours: f64,
) -> Vec<f64> {
    (0..fpti_slots)
        .map(|t| availability_probability(trace, t, cycles_elapsed, fpti_slots, ts_hours))
        .collect()
}
