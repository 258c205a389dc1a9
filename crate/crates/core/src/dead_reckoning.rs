//! Sender-side update gating and receiver-side remote entity reconstruction.
//!
//! The sender runs the same predictor as the receiver (the mirror model) and
//! emits an update when the mirror drifts past a threshold or the heartbeat
//! expires. The receiver extrapolates from the newest update and either snaps
//! to it or blends its displayed position over a window.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::anfis::AnfisPredictor;
use crate::error::{Error, Result};
use crate::kinematics::{angle_diff, extrapolate, EntityState, Order};
use crate::scalar::Real;
use crate::vec3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "entity-{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", bound = "T: Real")]
pub enum Convergence<T> {
    Snap,
    /// Linear positional blend over `window` seconds.
    Blend { window: T },
}

#[derive(Clone, Debug)]
pub enum Predictor<T> {
    Polynomial,
    Anfis(Arc<AnfisPredictor<T>>),
}

impl<T: Real> Predictor<T> {
    /// State predicted at `t` from `base`.
    pub fn predict(&self, base: &EntityState<T>, t: T, order: Order) -> Result<EntityState<T>> {
        match self {
            Predictor::Polynomial => extrapolate(base, t, order),
            Predictor::Anfis(p) => p.predict_from(base, t),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DrConfig<T> {
    pub th_pos: T,
    pub th_or: T,
    pub heartbeat: T,
    pub order: Order,
    pub convergence: Convergence<T>,
    pub predictor: Predictor<T>,
}

impl<T: Real> DrConfig<T> {
    /// Second order, snap, polynomial, 5 s heartbeat.
    pub fn new(th_pos: T, th_or: T) -> Self {
        Self {
            th_pos,
            th_or,
            heartbeat: T::lit(5.0),
            order: Order::Second,
            convergence: Convergence::Snap,
            predictor: Predictor::Polynomial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // thresholds may be +inf (gate disabled); NaN is never valid
        if self.th_pos.is_nan() || self.th_pos < T::zero() {
            return Err(Error::validation(format!("th_pos must be >= 0, got {}", self.th_pos)));
        }
        if self.th_or.is_nan() || self.th_or < T::zero() {
            return Err(Error::validation(format!("th_or must be >= 0, got {}", self.th_or)));
        }
        if !(self.heartbeat.is_finite() && self.heartbeat > T::zero()) {
            return Err(Error::validation(format!("heartbeat must be > 0, got {}", self.heartbeat)));
        }
        if let Convergence::Blend { window } = self.convergence {
            if !(window.is_finite() && window > T::zero()) {
                return Err(Error::validation(format!("blend window must be > 0, got {window}")));
            }
        }
        if let Predictor::Anfis(p) = &self.predictor {
            p.validate()?;
        }
        Ok(())
    }

    pub fn predict(&self, base: &EntityState<T>, t: T) -> Result<EntityState<T>> {
        self.predictor.predict(base, t, self.order)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct UpdateMessage<T> {
    pub entity_id: EntityId,
    pub state: EntityState<T>,
    pub seq: u64,
    pub sent_at: T,
}

impl<T: Real> UpdateMessage<T> {
    pub fn validate(&self) -> Result<()> {
        self.state.validate()?;
        if self.sent_at != self.state.time {
            return Err(Error::validation(format!(
                "message {} sent at {} carries a state for t={}",
                self.seq, self.sent_at, self.state.time
            )));
        }
        Ok(())
    }
}

/// Why the sender emitted an update. When several gates fire at once the
/// first in declaration order is reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmitReason {
    Initial,
    Position,
    Orientation,
    Heartbeat,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Emission<T> {
    pub msg: UpdateMessage<T>,
    pub reason: EmitReason,
    /// Mirror-model deviations at the emission instant (zero for the first update).
    pub position_deviation: T,
    pub velocity_deviation: T,
}

#[derive(Clone, Debug)]
pub struct SenderModel<T> {
    pub entity_id: EntityId,
    pub config: DrConfig<T>,
    last_sent: Option<UpdateMessage<T>>,
    next_seq: u64,
    last_step: Option<T>,
}

impl<T: Real> SenderModel<T> {
    pub fn new(entity_id: EntityId, config: DrConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self { entity_id, config, last_sent: None, next_seq: 0, last_step: None })
    }

    pub fn last_sent(&self) -> Option<&UpdateMessage<T>> {
        self.last_sent.as_ref()
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// The mirror model's position at `now`: what the receiver is assumed to show.
    pub fn mirror(&self, now: T) -> Result<Option<EntityState<T>>> {
        self.last_sent.as_ref().map(|m| self.config.predict(&m.state, now)).transpose()
    }

    /// Gates one truth sample; returns the update to transmit, if any.
    pub fn step(&mut self, truth: &EntityState<T>, now: T) -> Result<Option<Emission<T>>> {
        truth.validate()?;
        if truth.time != now {
            return Err(Error::validation(format!("truth sampled at {} but stepped at {now}", truth.time)));
        }
        if let Some(prev) = self.last_step {
            if now < prev {
                return Err(Error::range(format!("sender time regressed from {prev} to {now}")));
            }
        }
        self.last_step = Some(now);

        let (reason, pos_dev, vel_dev) = match &self.last_sent {
            None => (Some(EmitReason::Initial), T::zero(), T::zero()),
            Some(last) => {
                let predicted = self.config.predict(&last.state, now)?;
                let pos_dev = (truth.position - predicted.position).norm();
                let or_dev = angle_diff(truth.orientation, predicted.orientation).abs();
                let vel_dev = (truth.velocity - predicted.velocity).norm();
                // absorbs rounding in tick-multiple clock arithmetic
                let slack = self.config.heartbeat * T::epsilon() * T::lit(64.0);
                let reason = if pos_dev >= self.config.th_pos {
                    Some(EmitReason::Position)
                } else if or_dev >= self.config.th_or {
                    Some(EmitReason::Orientation)
                } else if now - last.sent_at >= self.config.heartbeat - slack {
                    Some(EmitReason::Heartbeat)
                } else {
                    None
                };
                (reason, pos_dev, vel_dev)
            }
        };

        Ok(reason.map(|reason| {
            let msg = UpdateMessage { entity_id: self.entity_id, state: *truth, seq: self.next_seq, sent_at: now };
            self.next_seq += 1;
            self.last_sent = Some(msg);
            Emission { msg, reason, position_deviation: pos_dev, velocity_deviation: vel_dev }
        }))
    }
}

#[derive(Clone, Debug)]
pub struct ReceiverModel<T> {
    pub config: DrConfig<T>,
    last_update: Option<UpdateMessage<T>>,
    display_state: Option<EntityState<T>>,
    converge_until: Option<T>,
    /// Displayed-minus-target offset captured when a blend starts.
    blend_offset: Vec3<T>,
    blend_start: T,
}

impl<T: Real> ReceiverModel<T> {
    pub fn new(config: DrConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            last_update: None,
            display_state: None,
            converge_until: None,
            blend_offset: Vec3::zero(),
            blend_start: T::zero(),
        })
    }

    pub fn last_update(&self) -> Option<&UpdateMessage<T>> {
        self.last_update.as_ref()
    }

    pub fn display_state(&self) -> Option<&EntityState<T>> {
        self.display_state.as_ref()
    }

    pub fn converge_until(&self) -> Option<T> {
        self.converge_until
    }

    fn check_clock(&self, now: T) -> Result<()> {
        if let Some(d) = &self.display_state {
            if now < d.time {
                return Err(Error::range(format!("receiver time regressed from {} to {now}", d.time)));
            }
        }
        Ok(())
    }

    /// Applies a delivered update. Returns `false` when the update is stale
    /// (its sequence number is not newer than the last applied one) and was
    /// discarded.
    pub fn apply(&mut self, msg: &UpdateMessage<T>, now: T) -> Result<bool> {
        msg.validate()?;
        if now < msg.sent_at {
            return Err(Error::range(format!("message {} delivered at {now} before it was sent at {}", msg.seq, msg.sent_at)));
        }
        self.check_clock(now)?;
        if let Some(last) = &self.last_update {
            if msg.seq <= last.seq {
                return Ok(false);
            }
        }

        let target = self.config.predict(&msg.state, now)?;
        match (self.config.convergence, self.display_state.is_some()) {
            (Convergence::Blend { window }, true) => {
                let shown = self.compute(now)?;
                self.blend_offset = shown.position - target.position;
                self.blend_start = now;
                self.converge_until = Some(now + window);
            }
            _ => {
                self.blend_offset = Vec3::zero();
                self.converge_until = None;
            }
        }
        self.last_update = Some(*msg);
        self.display_state = Some(self.compute(now)?);
        Ok(true)
    }

    /// Displayed state at `now`, or `None` before the first update.
    pub fn read(&mut self, now: T) -> Result<Option<EntityState<T>>> {
        self.check_clock(now)?;
        if self.last_update.is_none() {
            return Ok(None);
        }
        let s = self.compute(now)?;
        self.display_state = Some(s);
        Ok(Some(s))
    }

    fn compute(&self, now: T) -> Result<EntityState<T>> {
        let last = self.last_update.as_ref().expect("compute called without an update");
        let mut s = self.config.predict(&last.state, now)?;
        if let (Some(until), Convergence::Blend { window }) = (self.converge_until, self.config.convergence) {
            if now < until {
                let remaining = T::one() - (now - self.blend_start) / window;
                s.position += self.blend_offset * remaining;
            }
        }
        Ok(s)
    }
}
