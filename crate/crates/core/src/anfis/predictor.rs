//! Residual-learning state predictor built from one network per position axis.
//!
//! Each network sees `(position deviation, velocity, heading)` for its axis,
//! where the position deviation is the curvature term `1/2 * A * H^2` at the
//! reference horizon `H`. It learns the part of the true displacement that the
//! second-order polynomial misses. The learned correction is scaled by
//! `(dt / H)^3`, the growth rate of the leading neglected term, so at `dt = 0`
//! the prediction is exactly the second-order one.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{AnfisConfig, AnfisNetwork, RuleBase, Shape};
use super::train::{Regime, TrainingSet};
use crate::error::{Error, Result};
use crate::kinematics::{extrapolate, EntityState, Order};
use crate::scalar::Real;

pub const FORMAT: &str = "drsim-anfis-predictor/1";

/// Training recipe shared by the CLI `train` command and comparison studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct TrainSpec<T> {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    pub eta: T,
    #[serde(default = "default_regime")]
    pub regime: Regime,
    /// Fraction of the ticks, from the start, used for training.
    #[serde(default = "default_split")]
    pub split: T,
    #[serde(default = "default_terms")]
    pub terms: usize,
    #[serde(default = "default_rule_base")]
    pub rule_base: RuleBase,
    #[serde(default = "default_shape")]
    pub shape: Shape,
    /// Reference horizon in ticks for the saved predictor.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub jitter_seed: Option<u64>,
}

fn default_epochs() -> usize {
    200
}
fn default_regime() -> Regime {
    Regime::Hybrid
}
fn default_split<T: Real>() -> T {
    T::lit(0.7)
}
fn default_terms() -> usize {
    7
}
fn default_rule_base() -> RuleBase {
    RuleBase::Compact
}
fn default_shape() -> Shape {
    Shape::Bell
}

impl<T: Real> TrainSpec<T> {
    pub fn new(eta: T) -> Self {
        Self {
            epochs: default_epochs(),
            eta,
            regime: default_regime(),
            split: default_split(),
            terms: default_terms(),
            rule_base: default_rule_base(),
            shape: default_shape(),
            horizon: None,
            jitter_seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::validation("training needs at least one epoch"));
        }
        if !(self.eta.is_finite() && self.eta >= T::zero()) {
            return Err(Error::validation("learning rate must be finite and >= 0"));
        }
        if !(self.split > T::zero() && self.split < T::one()) {
            return Err(Error::validation("train/test split must lie strictly between 0 and 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AnfisPredictor<T> {
    pub format: String,
    /// Reference horizon `H`, seconds.
    pub horizon: T,
    /// One network per position axis (x, y, z).
    pub axes: Vec<AnfisNetwork<T>>,
}

/// Result of training a predictor: the bundle plus per-axis loss curves.
#[derive(Clone, Debug)]
pub struct Trained<T> {
    pub predictor: AnfisPredictor<T>,
    pub initial_loss: [T; 3],
    pub losses: [Vec<T>; 3],
}

impl<T: Real> AnfisPredictor<T> {
    pub const INPUTS: [&'static str; 3] = ["position_deviation", "velocity", "orientation"];

    pub fn validate(&self) -> Result<()> {
        if self.format != FORMAT {
            return Err(Error::validation(format!("unsupported predictor format '{}'", self.format)));
        }
        if !(self.horizon.is_finite() && self.horizon > T::zero()) {
            return Err(Error::validation("predictor horizon must be > 0"));
        }
        if self.axes.len() != 3 {
            return Err(Error::validation(format!("predictor needs 3 axis networks, got {}", self.axes.len())));
        }
        for net in &self.axes {
            net.validate()?;
            if net.arity() != 3 {
                return Err(Error::validation("axis networks must take 3 inputs"));
            }
        }
        Ok(())
    }

    /// Network inputs for `axis` at `state`, before clamping.
    pub fn features(state: &EntityState<T>, axis: usize, horizon: T) -> [T; 3] {
        [
            T::lit(0.5) * state.acceleration[axis] * horizon * horizon,
            state.velocity[axis],
            state.orientation,
        ]
    }

    fn clamped_features(net: &AnfisNetwork<T>, state: &EntityState<T>, axis: usize, horizon: T) -> [T; 3] {
        let mut f = Self::features(state, axis, horizon);
        for (v, input) in f.iter_mut().zip(&net.inputs) {
            *v = v.max(input.range[0]).min(input.range[1]);
        }
        f
    }

    /// Learned correction for every axis at the reference horizon.
    pub fn correction(&self, state: &EntityState<T>) -> Result<[T; 3]> {
        let mut out = [T::zero(); 3];
        for (axis, net) in self.axes.iter().enumerate() {
            out[axis] = net.predict(&Self::clamped_features(net, state, axis, self.horizon))?;
        }
        Ok(out)
    }

    /// Second-order extrapolation of the newest history sample, plus the
    /// learned residual scaled to `horizon`.
    pub fn predict_state(&self, history: &[EntityState<T>], horizon: T) -> Result<EntityState<T>> {
        let base = history.last().ok_or_else(|| Error::validation("prediction needs a non-empty history"))?;
        self.predict_from(base, base.time + horizon)
    }

    /// Same as [`predict_state`](Self::predict_state) with an absolute target time.
    pub fn predict_from(&self, base: &EntityState<T>, t: T) -> Result<EntityState<T>> {
        if self.axes.len() != 3 {
            return Err(Error::validation("invalid predictor bundle"));
        }
        let mut state = extrapolate(base, t, Order::Second)?;
        let ratio = (t - base.time) / self.horizon;
        let scale = ratio * ratio * ratio;
        if scale > T::zero() {
            let c = self.correction(base)?;
            for (axis, value) in c.into_iter().enumerate() {
                let p = state.position.axis(axis) + value * scale;
                state.position = state.position.with_axis(axis, p);
            }
        }
        Ok(state)
    }

    /// Per-axis residual samples: for each base index `i` with `i + h` in
    /// `range`, the input features at `states[i]` and the target
    /// `P(t_{i+h}) - second_order(states[i], t_{i+h})`.
    pub fn residual_sets(
        states: &[EntityState<T>],
        range: std::ops::Range<usize>,
        horizon_ticks: usize,
    ) -> Result<[TrainingSet<T>; 3]> {
        let mut sets: [TrainingSet<T>; 3] = Default::default();
        if horizon_ticks == 0 || range.end > states.len() {
            return Err(Error::validation("invalid residual window"));
        }
        let end = range.end.saturating_sub(horizon_ticks);
        for i in range.start..end {
            let base = &states[i];
            let future = &states[i + horizon_ticks];
            let horizon = future.time - base.time;
            let poly = extrapolate(base, future.time, Order::Second)?;
            let residual = future.position - poly.position;
            for (axis, set) in sets.iter_mut().enumerate() {
                set.push(Self::features(base, axis, horizon).to_vec(), residual[axis]);
            }
        }
        Ok(sets)
    }

    /// Trains a bundle on the residuals of `states[range]` at `horizon_ticks`.
    pub fn train(
        states: &[EntityState<T>],
        range: std::ops::Range<usize>,
        horizon_ticks: usize,
        tick: T,
        spec: &TrainSpec<T>,
    ) -> Result<Trained<T>> {
        spec.validate()?;
        let sets = Self::residual_sets(states, range, horizon_ticks)?;
        if sets[0].is_empty() {
            return Err(Error::validation("training window is shorter than the horizon"));
        }
        let horizon = T::from_count(horizon_ticks) * tick;
        let results: Vec<Result<AxisFit<T>>> = sets
            .par_iter()
            .map(|set| {
                let cfg = AnfisConfig {
                    inputs: input_ranges(set),
                    terms: spec.terms,
                    shape: spec.shape,
                    rule_base: spec.rule_base,
                    eta: spec.eta,
                    jitter_seed: spec.jitter_seed,
                };
                let mut net = AnfisNetwork::initialize(&cfg)?;
                let initial = net.set_loss(set)?;
                let losses = match spec.regime {
                    Regime::Gd => net.train_gd(set, spec.epochs)?,
                    Regime::Hybrid => net.train_hybrid(set, spec.epochs)?,
                };
                Ok((net, initial, losses))
            })
            .collect();

        let mut axes = Vec::with_capacity(3);
        let mut initial_loss = [T::zero(); 3];
        let mut losses: [Vec<T>; 3] = Default::default();
        for (axis, r) in results.into_iter().enumerate() {
            let (net, init, l) = r?;
            axes.push(net);
            initial_loss[axis] = init;
            losses[axis] = l;
        }
        let predictor = AnfisPredictor { format: FORMAT.to_string(), horizon, axes };
        predictor.validate()?;
        Ok(Trained { predictor, initial_loss, losses })
    }

    /// A bundle whose consequents are all zero; predicts exactly second order.
    pub fn untrained(horizon: T, terms: usize) -> Result<Self> {
        let cfg = AnfisConfig::new(default_ranges(), terms, T::lit(0.01));
        let net = AnfisNetwork::initialize(&cfg)?;
        let p = AnfisPredictor { format: FORMAT.to_string(), horizon, axes: vec![net.clone(), net.clone(), net] };
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::validation(format!("serialize predictor: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| Error::Parse { path: "<json>".into(), message: e.to_string() })?;
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let p: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Parse { path: path.display().to_string(), message: e.to_string() })?;
        p.validate()?;
        Ok(p)
    }
}

/// One axis network with its initial loss and loss history.
type AxisFit<T> = (AnfisNetwork<T>, T, Vec<T>);

fn default_ranges<T: Real>() -> Vec<(String, [T; 2])> {
    let half_pi = T::FRAC_PI_2();
    vec![
        (AnfisPredictor::<T>::INPUTS[0].to_string(), [-T::one(), T::one()]),
        (AnfisPredictor::<T>::INPUTS[1].to_string(), [-T::one(), T::one()]),
        (AnfisPredictor::<T>::INPUTS[2].to_string(), [-half_pi, half_pi]),
    ]
}

/// Symmetric declared ranges covering the training data: the deviation and
/// velocity ranges are `[-max|.|, max|.|]`, the heading range is
/// `[-pi/2, pi/2]` unless the data leaves it, in which case `[-pi, pi]`.
fn input_ranges<T: Real>(set: &TrainingSet<T>) -> Vec<(String, [T; 2])> {
    let mut ranges = default_ranges::<T>();
    let max_abs = |k: usize| set.samples.iter().map(|s| s.input[k].abs()).fold(T::zero(), T::max);
    for (k, range) in ranges.iter_mut().enumerate().take(2) {
        let m = max_abs(k);
        if m > T::epsilon() {
            range.1 = [-m, m];
        }
    }
    if max_abs(2) > T::FRAC_PI_2() {
        ranges[2].1 = [-T::PI(), T::PI()];
    }
    ranges
}
