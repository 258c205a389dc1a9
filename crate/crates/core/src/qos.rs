//! Spatial and temporal coherence measurements for one run.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dead_reckoning::DrConfig;
use crate::error::{Error, Result};
use crate::fmt::sig9;
use crate::kinematics::{angle_diff, EntityState};
use crate::netsim::ChannelConfig;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    TightlyCoupled,
    LooselyCoupled,
    Custom,
}

/// Interaction-class QoS budget. Bounds are inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct QosProfile<T> {
    pub name: ProfileKind,
    pub max_latency: T,
    pub max_loss: T,
    /// Positional error budget; only checked for custom profiles.
    pub max_error: Option<T>,
}

impl<T: Real> QosProfile<T> {
    /// DT <= 100 ms, loss <= 2 %.
    pub fn tightly_coupled() -> Self {
        Self { name: ProfileKind::TightlyCoupled, max_latency: T::lit(0.100), max_loss: T::lit(0.02), max_error: None }
    }

    /// DT <= 300 ms, loss <= 5 %.
    pub fn loosely_coupled() -> Self {
        Self { name: ProfileKind::LooselyCoupled, max_latency: T::lit(0.300), max_loss: T::lit(0.05), max_error: None }
    }

    pub fn custom(max_latency: T, max_loss: T, max_error: T) -> Self {
        Self { name: ProfileKind::Custom, max_latency, max_loss, max_error: Some(max_error) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_latency.is_nan() || self.max_latency < T::zero() {
            return Err(Error::validation("profile max_latency must be >= 0"));
        }
        if !(self.max_loss >= T::zero() && self.max_loss <= T::one()) {
            return Err(Error::validation("profile max_loss must lie in [0, 1]"));
        }
        if self.name == ProfileKind::Custom && self.max_error.is_none() {
            return Err(Error::validation("custom profile needs max_error"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ErrorSample<T> {
    pub t: T,
    pub e_pos: T,
    pub e_or: T,
}

/// Uniformly sampled error time series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ErrorSeries<T> {
    pub tick: T,
    pub samples: Vec<ErrorSample<T>>,
    start: Option<T>,
}

impl<T: Real> ErrorSeries<T> {
    pub fn new(tick: T) -> Self {
        Self { tick, samples: Vec::new(), start: None }
    }

    /// Builds a series from raw samples, checking uniform spacing.
    pub fn from_samples(tick: T, samples: Vec<ErrorSample<T>>) -> Result<Self> {
        let mut s = Self::new(tick);
        for x in samples {
            s.check_time(x.t)?;
            s.start.get_or_insert(x.t);
            s.samples.push(x);
        }
        Ok(s)
    }

    /// Time the next sample must carry, once the series has started.
    pub fn next_expected(&self) -> Option<T> {
        self.start.map(|s| s + T::from_count(self.samples.len()) * self.tick)
    }

    fn check_time(&self, t: T) -> Result<()> {
        if let Some(expected) = self.next_expected() {
            // clock rounding grows with |t|; anything well under a tick is the same sample slot
            let tol = (self.tick * T::lit(1e-6)).max(expected.abs() * T::epsilon() * T::lit(64.0));
            if (t - expected).abs() > tol {
                return Err(Error::validation(format!("error sample at t={t}, expected t={expected}")));
            }
        }
        Ok(())
    }

    /// Appends `(t, |dP|, |dtheta| wrapped)` for a truth/displayed pair.
    pub fn record(&mut self, truth: &EntityState<T>, displayed: &EntityState<T>) -> Result<()> {
        if truth.time != displayed.time {
            return Err(Error::validation(format!(
                "truth at t={} paired with display at t={}",
                truth.time, displayed.time
            )));
        }
        self.check_time(truth.time)?;
        self.start.get_or_insert(truth.time);
        self.samples.push(ErrorSample {
            t: truth.time,
            e_pos: (truth.position - displayed.position).norm(),
            e_or: angle_diff(truth.orientation, displayed.orientation).abs(),
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_error(&self) -> T {
        self.samples.iter().map(|s| s.e_pos).fold(T::zero(), T::max)
    }

    /// Left Riemann sum of the positional error, meter-seconds.
    pub fn integrated_error(&self) -> T {
        self.samples.iter().map(|s| s.e_pos * self.tick).sum()
    }

    /// Maximal runs of samples with `e_pos > th_pos`. Each sample stands for
    /// the interval `[t, t + tick)`, so a window ends one tick after its last
    /// violating sample.
    pub fn violation_windows(&self, th_pos: T) -> Vec<ViolationWindow<T>> {
        let mut out = Vec::new();
        let mut open: Option<ViolationWindow<T>> = None;
        for s in &self.samples {
            if s.e_pos > th_pos {
                let w = open.get_or_insert(ViolationWindow { start: s.t, end: s.t, peak: s.e_pos });
                w.end = s.t + self.tick;
                w.peak = w.peak.max(s.e_pos);
            } else if let Some(w) = open.take() {
                out.push(w);
            }
        }
        out.extend(open);
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,e_pos,e_or\n");
        for x in &self.samples {
            let _ = writeln!(s, "{},{},{}", sig9(x.t.as_f64()), sig9(x.e_pos.as_f64()), sig9(x.e_or.as_f64()));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ViolationWindow<T> {
    pub start: T,
    pub end: T,
    pub peak: T,
}

impl<T: Real> ViolationWindow<T> {
    pub fn length(&self) -> T {
        self.end - self.start
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub reasons: Vec<String>,
}

/// Checks a run against a profile: channel latency (`DT + jitter`), channel
/// loss and, for custom profiles, the observed maximum error.
pub fn verdict<T: Real>(max_error: T, profile: &QosProfile<T>, channel: &ChannelConfig<T>) -> Verdict {
    let mut reasons = Vec::new();
    let latency = channel.max_delay();
    if latency > profile.max_latency {
        reasons.push(format!("latency {} s exceeds {} s", sig9(latency.as_f64()), sig9(profile.max_latency.as_f64())));
    }
    if channel.loss > profile.max_loss {
        reasons.push(format!("loss {} exceeds {}", sig9(channel.loss.as_f64()), sig9(profile.max_loss.as_f64())));
    }
    if let (ProfileKind::Custom, Some(budget)) = (profile.name, profile.max_error) {
        if max_error > budget {
            reasons.push(format!("max error {} m exceeds {} m", sig9(max_error.as_f64()), sig9(budget.as_f64())));
        }
    }
    Verdict { pass: reasons.is_empty(), reasons }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CoherenceReport<T> {
    pub max_error: T,
    pub max_orientation_error: T,
    pub integrated_error: T,
    pub violation_windows: Vec<ViolationWindow<T>>,
    pub total_violation_time: T,
    pub messages_sent: u64,
    pub messages_delivered: u64,
    pub messages_dropped: u64,
    pub messages_stale: u64,
    pub bytes_sent: u64,
    pub heartbeats: u64,
    /// Largest send-to-apply delay observed (temporal coherence).
    pub max_propagation_delay: T,
    /// Largest mirror velocity deviation at an emission instant.
    pub max_velocity_deviation: T,
    pub verdict: Verdict,
}

impl<T: Real> CoherenceReport<T> {
    pub const CSV_HEADER: &'static str = "max_error,max_orientation_error,integrated_error,violation_windows,\
total_violation_time,messages_sent,messages_delivered,messages_dropped,messages_stale,bytes_sent,heartbeats,\
max_propagation_delay,max_velocity_deviation,verdict";

    pub fn csv_row(&self) -> String {
        let f = |x: T| sig9(x.as_f64());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f(self.max_error),
            f(self.max_orientation_error),
            f(self.integrated_error),
            self.violation_windows.len(),
            f(self.total_violation_time),
            self.messages_sent,
            self.messages_delivered,
            self.messages_dropped,
            self.messages_stale,
            self.bytes_sent,
            self.heartbeats,
            f(self.max_propagation_delay),
            f(self.max_velocity_deviation),
            if self.verdict.pass { "pass" } else { "fail" }
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }

    pub fn to_text(&self) -> String {
        let f = |x: T| sig9(x.as_f64());
        let mut s = String::new();
        let _ = writeln!(s, "max error            : {} m", f(self.max_error));
        let _ = writeln!(s, "max orientation error: {} rad", f(self.max_orientation_error));
        let _ = writeln!(s, "integrated error     : {} m*s", f(self.integrated_error));
        let _ = writeln!(
            s,
            "violations           : {} windows, {} s total",
            self.violation_windows.len(),
            f(self.total_violation_time)
        );
        let _ = writeln!(
            s,
            "messages             : {} sent, {} delivered, {} dropped, {} stale, {} heartbeats",
            self.messages_sent, self.messages_delivered, self.messages_dropped, self.messages_stale, self.heartbeats
        );
        let _ = writeln!(s, "bytes sent           : {}", self.bytes_sent);
        let _ = writeln!(s, "max propagation delay: {} s", f(self.max_propagation_delay));
        let _ = writeln!(s, "verdict              : {}", if self.verdict.pass { "PASS" } else { "FAIL" });
        for r in &self.verdict.reasons {
            let _ = writeln!(s, "  - {r}");
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EmaxCheck<T> {
    pub bound: T,
    pub observed: T,
    pub satisfied: bool,
}

/// A-priori error bound
/// `E_max = th_pos + accel_bound (heartbeat + DT_max)^2 / 2 + V_dev_max DT_max`
/// with `DT_max = base_delay + jitter`, compared with the observed maximum.
///
/// `accel_bound` must dominate `|A_truth - A_model|` over the run.
pub fn check_emax_bound<T: Real>(
    report: &CoherenceReport<T>,
    series: &ErrorSeries<T>,
    channel: &ChannelConfig<T>,
    dr: &DrConfig<T>,
    accel_bound: T,
) -> EmaxCheck<T> {
    let dt_max = channel.max_delay();
    let span = dr.heartbeat + dt_max;
    let bound = dr.th_pos + accel_bound * span * span * T::lit(0.5) + report.max_velocity_deviation * dt_max;
    let observed = series.max_error().max(report.max_error);
    EmaxCheck { bound, observed, satisfied: observed <= bound }
}
