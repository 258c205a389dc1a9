//! Adaptive neuro-fuzzy inference: a zero-order Sugeno network, its two
//! training regimes and the residual predictor used for dead reckoning.

pub mod membership;
pub mod network;
pub mod predictor;
pub mod train;

pub use membership::{Label, LinguisticTerm, MembershipFn};
pub use network::{layer3_normalize, AnfisConfig, AnfisNetwork, InputVar, ParamClass, Rule, RuleBase, Shape, Trace};
pub use predictor::{AnfisPredictor, TrainSpec, Trained};
pub use train::{Regime, Sample, TrainingSet};
