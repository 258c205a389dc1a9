//! Dead-reckoning state synchronisation simulator.
//!
//! Truth trajectories feed a sender-side dead-reckoning filter, updates cross
//! a seeded lossy channel, and a receiver extrapolates between them. The
//! coherence metrics measure how far the displayed state drifts from truth.
//! An optional neuro-fuzzy residual predictor can stand in for the
//! polynomial extrapolator.
//!
//! Everything is generic over the scalar; `f64` and `f32` aliases are below.

// NaN must fail range checks, so `!(a > b)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anfis;
pub mod dead_reckoning;
pub mod error;
pub mod fmt;
pub mod harness;
pub mod kinematics;
pub mod netsim;
pub mod qos;
pub mod scalar;
pub mod vec3;

pub use dead_reckoning::{
    Convergence, DrConfig, EmitReason, Emission, EntityId, Predictor, ReceiverModel, SenderModel, UpdateMessage,
};
pub use error::{Error, Result};
pub use harness::{run_comparison, run_scenario, sweep, ComparisonStudy, Scenario, SweepAxis};
pub use kinematics::{extrapolate, EntityState, Motion, Order, Trajectory, Waypoint};
pub use netsim::{Channel, ChannelConfig, EventQueue};
pub use qos::{check_emax_bound, verdict, CoherenceReport, ErrorSeries, QosProfile};
pub use scalar::Real;
pub use vec3::Vec3;

pub type Vec3f64 = Vec3<f64>;
pub type EntityState64 = EntityState<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type DrConfig64 = DrConfig<f64>;
pub type ChannelConfig64 = ChannelConfig<f64>;
pub type Scenario64 = Scenario<f64>;
pub type CoherenceReport64 = CoherenceReport<f64>;
pub type AnfisNetwork64 = anfis::AnfisNetwork<f64>;
pub type AnfisPredictor64 = anfis::AnfisPredictor<f64>;
pub type ComparisonStudy64 = ComparisonStudy<f64>;

pub type Vec3f32 = Vec3<f32>;
pub type EntityState32 = EntityState<f32>;
pub type Trajectory32 = Trajectory<f32>;
pub type DrConfig32 = DrConfig<f32>;
pub type ChannelConfig32 = ChannelConfig<f32>;
pub type Scenario32 = Scenario<f32>;
pub type CoherenceReport32 = CoherenceReport<f32>;
pub type AnfisNetwork32 = anfis::AnfisNetwork<f32>;
pub type AnfisPredictor32 = anfis::AnfisPredictor<f32>;
pub type ComparisonStudy32 = ComparisonStudy<f32>;
