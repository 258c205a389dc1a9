//! Tick loop: truth -> sender -> channel -> receiver -> metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dead_reckoning::{EmitReason, EntityId, ReceiverModel, SenderModel, UpdateMessage};
use crate::error::{Error, Result};
use crate::fmt::sig9;
use crate::kinematics::EntityState;
use crate::netsim::{Channel, EventQueue, SendOutcome};
use crate::qos::{verdict, CoherenceReport, ErrorSeries};
use crate::scalar::Real;

use super::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Sent,
    Dropped,
    Delivered,
    Stale,
}

impl EventKind {
    fn as_str(self) -> &'static str {
        match self {
            EventKind::Sent => "sent",
            EventKind::Dropped => "dropped",
            EventKind::Delivered => "delivered",
            EventKind::Stale => "stale",
        }
    }
}

/// One line of the message log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MessageEvent<T> {
    pub t: T,
    pub seq: u64,
    pub kind: EventKind,
    /// Emission reason for `Sent`, else `None`.
    pub reason: Option<EmitReason>,
}

#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub report: CoherenceReport<T>,
    pub series: ErrorSeries<T>,
    /// Ground truth at every tick, whether or not the receiver had a state yet.
    pub truth: Vec<EntityState<T>>,
    pub events: Vec<MessageEvent<T>>,
}

impl<T: Real> RunOutput<T> {
    pub const TRUTH_HEADER: &'static str = "t,x,y,z,vx,vy,vz,ax,ay,az,orientation";
    pub const EVENTS_HEADER: &'static str = "t,seq,event,reason";

    pub fn truth_csv(&self) -> String {
        let mut s = String::from(Self::TRUTH_HEADER);
        s.push('\n');
        let f = |x: T| sig9(x.as_f64());
        for st in &self.truth {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                f(st.time),
                f(st.position.x),
                f(st.position.y),
                f(st.position.z),
                f(st.velocity.x),
                f(st.velocity.y),
                f(st.velocity.z),
                f(st.acceleration.x),
                f(st.acceleration.y),
                f(st.acceleration.z),
                f(st.orientation)
            );
        }
        s
    }

    pub fn events_csv(&self) -> String {
        let mut s = String::from(Self::EVENTS_HEADER);
        s.push('\n');
        for e in &self.events {
            let reason = match e.reason {
                Some(EmitReason::Initial) => "initial",
                Some(EmitReason::Position) => "position",
                Some(EmitReason::Orientation) => "orientation",
                Some(EmitReason::Heartbeat) => "heartbeat",
                None => "",
            };
            let _ = writeln!(s, "{},{},{},{}", sig9(e.t.as_f64()), e.seq, e.kind.as_str(), reason);
        }
        s
    }

    /// Send times of every emitted update.
    pub fn send_times(&self) -> Vec<T> {
        self.events.iter().filter(|e| e.kind == EventKind::Sent).map(|e| e.t).collect()
    }
}

#[derive(Default)]
struct Counters<T> {
    sent: u64,
    delivered: u64,
    dropped: u64,
    stale: u64,
    heartbeats: u64,
    max_delay: T,
    max_vdev: T,
}

fn deliver<T: Real>(
    receiver: &mut ReceiverModel<T>,
    counters: &mut Counters<T>,
    events: &mut Vec<MessageEvent<T>>,
    due: T,
    msg: UpdateMessage<T>,
) -> Result<()> {
    let fresh = receiver.apply(&msg, due)?;
    counters.delivered += 1;
    counters.max_delay = counters.max_delay.max(due - msg.sent_at);
    if !fresh {
        counters.stale += 1;
    }
    events.push(MessageEvent {
        t: due,
        seq: msg.seq,
        kind: if fresh { EventKind::Delivered } else { EventKind::Stale },
        reason: None,
    });
    Ok(())
}

/// Runs one scenario to completion. Bit-deterministic for a given scenario.
///
/// The error series starts at the first tick where the receiver has
/// something to display. Messages still in flight after the last tick are
/// drained so that every send is accounted as delivered or dropped.
pub fn run_scenario<T: Real>(sc: &Scenario<T>) -> Result<RunOutput<T>> {
    sc.validate()?;
    let id = EntityId(1);
    let mut sender = SenderModel::new(id, sc.dr.clone())?;
    let mut receiver = ReceiverModel::new(sc.dr.clone())?;
    let mut channel = Channel::new(sc.channel)?;
    let mut queue: EventQueue<T, UpdateMessage<T>> = EventQueue::new();
    let mut series = ErrorSeries::new(sc.tick());
    let mut counters = Counters::<T>::default();
    let mut events = Vec::new();
    let ticks = sc.trajectory.ticks();
    let mut truth_log = Vec::with_capacity(ticks + 1);

    for i in 0..=ticks {
        let now = sc.trajectory.tick_time(i);
        let ctx = |source: Error| Error::Scenario { tick: i, time: now.as_f64(), source: Box::new(source) };
        let step = (|| -> Result<()> {
            // deliveries due before this tick, then the tick's own send
            queue.run_until(now, |due, msg| deliver(&mut receiver, &mut counters, &mut events, due, msg))?;
            let truth = sc.trajectory.sample_truth(now)?;
            if let Some(em) = sender.step(&truth, now)? {
                counters.sent += 1;
                if em.reason == EmitReason::Heartbeat {
                    counters.heartbeats += 1;
                }
                if em.reason != EmitReason::Initial {
                    counters.max_vdev = counters.max_vdev.max(em.velocity_deviation);
                }
                let seq = em.msg.seq;
                events.push(MessageEvent { t: now, seq, kind: EventKind::Sent, reason: Some(em.reason) });
                if channel.send(&mut queue, em.msg, now)? == SendOutcome::Dropped {
                    counters.dropped += 1;
                    events.push(MessageEvent { t: now, seq, kind: EventKind::Dropped, reason: None });
                }
            }
            queue.run_until(now, |due, msg| deliver(&mut receiver, &mut counters, &mut events, due, msg))?;
            if let Some(shown) = receiver.read(now)? {
                series.record(&truth, &shown)?;
            }
            truth_log.push(truth);
            Ok(())
        })();
        step.map_err(ctx)?;
    }

    if let Some(last) = queue.max_due() {
        let end = sc.trajectory.tick_time(ticks);
        let ctx = |source: Error| Error::Scenario { tick: ticks, time: end.as_f64(), source: Box::new(source) };
        queue
            .run_until(last.max(queue.now()), |due, msg| deliver(&mut receiver, &mut counters, &mut events, due, msg))
            .map_err(ctx)?;
    }

    let windows = series.violation_windows(sc.dr.th_pos);
    let total_violation_time = windows.iter().fold(T::zero(), |acc, w| acc + w.length());
    let max_error = series.max_error();
    let max_orientation_error = series.samples.iter().fold(T::zero(), |m, s| m.max(s.e_or));
    let report = CoherenceReport {
        max_error,
        max_orientation_error,
        integrated_error: series.integrated_error(),
        violation_windows: windows,
        total_violation_time,
        messages_sent: counters.sent,
        messages_delivered: counters.delivered,
        messages_dropped: counters.dropped,
        messages_stale: counters.stale,
        bytes_sent: counters.sent * sc.message_size_bytes,
        heartbeats: counters.heartbeats,
        max_propagation_delay: counters.max_delay,
        max_velocity_deviation: counters.max_vdev,
        verdict: verdict(max_error, &sc.profile, &sc.channel),
    };
    Ok(RunOutput { report, series, truth: truth_log, events })
}
