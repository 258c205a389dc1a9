//! Seeded discrete-event channel: fixed latency, uniform jitter and i.i.d.
//! Bernoulli loss over a single time-ordered event queue.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct ChannelConfig<T> {
    /// Latency DT, seconds.
    pub base_delay: T,
    /// Half-width of the uniform jitter, seconds.
    #[serde(default)]
    pub jitter: T,
    /// Drop probability.
    #[serde(default)]
    pub loss: T,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reorder_allowed: bool,
}

impl<T: Real> ChannelConfig<T> {
    pub fn lossless(base_delay: T) -> Self {
        Self { base_delay, jitter: T::zero(), loss: T::zero(), seed: 0, reorder_allowed: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_delay.is_finite() && self.base_delay >= T::zero()) {
            return Err(Error::validation(format!("base_delay must be >= 0, got {}", self.base_delay)));
        }
        if !(self.jitter.is_finite() && self.jitter >= T::zero()) {
            return Err(Error::validation(format!("jitter must be >= 0, got {}", self.jitter)));
        }
        if self.jitter > self.base_delay {
            return Err(Error::validation(format!(
                "jitter {} exceeds base_delay {}; deliveries could precede sends",
                self.jitter, self.base_delay
            )));
        }
        if !(self.loss >= T::zero() && self.loss <= T::one()) {
            return Err(Error::validation(format!("loss must lie in [0, 1], got {}", self.loss)));
        }
        Ok(())
    }

    /// Worst-case one-way delay `DT + jitter`.
    pub fn max_delay(&self) -> T {
        self.base_delay + self.jitter
    }
}

struct Pending<T, E> {
    due: T,
    seq: u64,
    event: E,
}

impl<T: Real, E> PartialEq for Pending<T, E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real, E> Eq for Pending<T, E> {}

impl<T: Real, E> PartialOrd for Pending<T, E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real, E> Ord for Pending<T, E> {
    // reversed so the max-heap pops the earliest (due, seq) first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .due
            .partial_cmp(&self.due)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Time-ordered event queue; equal due times pop in insertion order.
pub struct EventQueue<T, E> {
    heap: BinaryHeap<Pending<T, E>>,
    now: T,
    next_seq: u64,
}

impl<T: Real, E: Debug> Default for EventQueue<T, E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real, E: Debug> EventQueue<T, E> {
    pub fn new() -> Self {
        Self { heap: BinaryHeap::new(), now: T::zero(), next_seq: 0 }
    }

    pub fn now(&self) -> T {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Due time of the earliest pending event.
    pub fn peek_due(&self) -> Option<T> {
        self.heap.peek().map(|p| p.due)
    }

    /// Latest due time among pending events.
    pub fn max_due(&self) -> Option<T> {
        self.heap.iter().map(|p| p.due).reduce(T::max)
    }

    /// Schedules `event` at `due`; returns its insertion sequence number.
    pub fn schedule(&mut self, due: T, event: E) -> Result<u64> {
        if !due.is_finite() || due < self.now {
            return Err(Error::range(format!("event scheduled at {due}, before the clock {}", self.now)));
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Pending { due, seq, event });
        Ok(seq)
    }

    /// Dispatches every event due at or before `t_end`, in order, then sets
    /// the clock to `t_end`. Returns the number of events dispatched.
    pub fn run_until<F>(&mut self, t_end: T, mut handler: F) -> Result<usize>
    where
        F: FnMut(T, E) -> Result<()>,
    {
        if t_end < self.now {
            return Err(Error::range(format!("run_until({t_end}) is before the clock {}", self.now)));
        }
        let mut count = 0;
        while self.heap.peek().is_some_and(|p| p.due <= t_end) {
            let Pending { due, seq, event } = self.heap.pop().expect("peeked");
            self.now = due;
            let label = format!("{event:?}");
            handler(due, event).map_err(|source| Error::Handler {
                seq,
                due: due.as_f64(),
                event: label,
                source: Box::new(source),
            })?;
            count += 1;
        }
        self.now = t_end;
        Ok(count)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SendOutcome<T> {
    Dropped,
    Scheduled { due: T, jitter: T },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub sent: u64,
    pub dropped: u64,
    pub scheduled: u64,
}

/// One point-to-point channel. Each send draws a loss variate and a jitter
/// variate from the seeded stream, whether or not the packet survives, so
/// changing `loss` does not reshuffle the jitter sequence.
pub struct Channel<T> {
    config: ChannelConfig<T>,
    rng: ChaCha8Rng,
    last_due: Option<T>,
    stats: ChannelStats,
}

impl<T: Real> Channel<T> {
    pub fn new(config: ChannelConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, rng: ChaCha8Rng::seed_from_u64(config.seed), last_due: None, stats: ChannelStats::default() })
    }

    pub fn config(&self) -> &ChannelConfig<T> {
        &self.config
    }

    pub fn stats(&self) -> ChannelStats {
        self.stats
    }

    pub fn send<E: Debug>(&mut self, queue: &mut EventQueue<T, E>, payload: E, now: T) -> Result<SendOutcome<T>> {
        if now != queue.now() {
            return Err(Error::validation(format!("send at {now} but queue clock is {}", queue.now())));
        }
        let u_loss: f64 = self.rng.random();
        let u_jitter: f64 = self.rng.random();
        self.stats.sent += 1;
        if u_loss < self.config.loss.as_f64() {
            self.stats.dropped += 1;
            return Ok(SendOutcome::Dropped);
        }
        let jitter = self.config.jitter * T::lit(2.0 * u_jitter - 1.0);
        let mut due = now + self.config.base_delay + jitter;
        // FIFO channel: never overtake an earlier packet
        if !self.config.reorder_allowed {
            if let Some(last) = self.last_due {
                due = due.max(last);
            }
        }
        // rounding in `now + delay - jitter` must not put delivery before the send
        due = due.max(now);
        self.last_due = Some(due);
        queue.schedule(due, payload)?;
        self.stats.scheduled += 1;
        Ok(SendOutcome::Scheduled { due, jitter })
    }
}
