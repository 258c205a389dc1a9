//! Scenario and study files (TOML).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::anfis::{AnfisPredictor, TrainSpec};
use crate::dead_reckoning::{Convergence, DrConfig, Predictor};
use crate::error::{Error, Result};
use crate::kinematics::{Order, Trajectory};
use crate::netsim::ChannelConfig;
use crate::qos::{ProfileKind, QosProfile};
use crate::scalar::Real;

pub const DEFAULT_MESSAGE_SIZE: u64 = 144;

/// Everything one run needs.
#[derive(Clone, Debug)]
pub struct Scenario<T> {
    pub name: String,
    pub trajectory: Trajectory<T>,
    pub dr: DrConfig<T>,
    pub channel: ChannelConfig<T>,
    pub profile: QosProfile<T>,
    /// Seeds the channel's loss and jitter stream.
    pub seed: u64,
    pub message_size_bytes: u64,
}

impl<T: Real> Scenario<T> {
    pub fn new(name: impl Into<String>, trajectory: Trajectory<T>, dr: DrConfig<T>, channel: ChannelConfig<T>) -> Self {
        let seed = channel.seed;
        Self {
            name: name.into(),
            trajectory,
            dr,
            channel,
            profile: QosProfile::loosely_coupled(),
            seed,
            message_size_bytes: DEFAULT_MESSAGE_SIZE,
        }
    }

    pub fn tick(&self) -> T {
        self.trajectory.tick
    }

    pub fn duration(&self) -> T {
        self.trajectory.duration
    }

    /// Replaces the seed (and with it the channel stream).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.channel.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.trajectory.validate()?;
        self.dr.validate()?;
        self.channel.validate()?;
        self.profile.validate()?;
        if self.channel.seed != self.seed {
            return Err(Error::validation("channel seed must equal the scenario seed"));
        }
        Ok(())
    }

    /// Parses a scenario document. Relative predictor paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let file: ScenarioFile<T> =
            toml::from_str(text).map_err(|e| Error::Parse { path: "<scenario>".into(), message: e.to_string() })?;
        file.resolve(base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: ScenarioFile<T> =
            toml::from_str(&text).map_err(|e| Error::Parse { path: path.display().to_string(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut sc = file.resolve(base)?;
        if sc.name.is_empty() {
            sc.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(sc)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
struct ScenarioFile<T> {
    #[serde(default)]
    name: String,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_message_size")]
    message_size_bytes: u64,
    trajectory: Trajectory<T>,
    dead_reckoning: DrSection<T>,
    channel: ChannelSection<T>,
    profile: ProfileSection<T>,
}

fn default_message_size() -> u64 {
    DEFAULT_MESSAGE_SIZE
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
struct DrSection<T> {
    th_pos: T,
    th_or: T,
    #[serde(default = "default_heartbeat")]
    heartbeat: T,
    #[serde(default = "default_order")]
    order: Order,
    #[serde(default = "default_convergence")]
    convergence: Convergence<T>,
    #[serde(default)]
    predictor: PredictorSpec,
}

fn default_heartbeat<T: Real>() -> T {
    T::lit(5.0)
}
fn default_order() -> Order {
    Order::Second
}
fn default_convergence<T: Real>() -> Convergence<T> {
    Convergence::Snap
}

/// `predictor = "polynomial"` or `predictor = { anfis = "net.json" }`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorSpec {
    #[default]
    Polynomial,
    Anfis(PathBuf),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
struct ChannelSection<T> {
    base_delay: T,
    #[serde(default)]
    jitter: T,
    #[serde(default)]
    loss: T,
    #[serde(default)]
    reorder_allowed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
struct ProfileSection<T> {
    name: ProfileKind,
    #[serde(default)]
    max_latency: Option<T>,
    #[serde(default)]
    max_loss: Option<T>,
    #[serde(default)]
    max_error: Option<T>,
}

impl<T: Real> ScenarioFile<T> {
    fn resolve(self, base_dir: &Path) -> Result<Scenario<T>> {
        let predictor = match &self.dead_reckoning.predictor {
            PredictorSpec::Polynomial => Predictor::Polynomial,
            PredictorSpec::Anfis(path) => {
                let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                Predictor::Anfis(Arc::new(AnfisPredictor::load(&full)?))
            }
        };
        let dr = DrConfig {
            th_pos: self.dead_reckoning.th_pos,
            th_or: self.dead_reckoning.th_or,
            heartbeat: self.dead_reckoning.heartbeat,
            order: self.dead_reckoning.order,
            convergence: self.dead_reckoning.convergence,
            predictor,
        };
        let channel = ChannelConfig {
            base_delay: self.channel.base_delay,
            jitter: self.channel.jitter,
            loss: self.channel.loss,
            seed: self.seed,
            reorder_allowed: self.channel.reorder_allowed,
        };
        let p = &self.profile;
        let profile = match p.name {
            ProfileKind::TightlyCoupled | ProfileKind::LooselyCoupled => {
                if p.max_latency.is_some() || p.max_loss.is_some() || p.max_error.is_some() {
                    return Err(Error::validation("built-in profiles take no bounds; use name = \"custom\""));
                }
                if p.name == ProfileKind::TightlyCoupled {
                    QosProfile::tightly_coupled()
                } else {
                    QosProfile::loosely_coupled()
                }
            }
            ProfileKind::Custom => match (p.max_latency, p.max_loss, p.max_error) {
                (Some(l), Some(s), Some(e)) => QosProfile::custom(l, s, e),
                _ => return Err(Error::validation("custom profile needs max_latency, max_loss and max_error")),
            },
        };
        let sc = Scenario {
            name: self.name,
            trajectory: self.trajectory,
            dr,
            channel,
            profile,
            seed: self.seed,
            message_size_bytes: self.message_size_bytes,
        };
        sc.validate()?;
        Ok(sc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorKind {
    First,
    Second,
    Anfis,
}

impl PredictorKind {
    pub fn column(self) -> &'static str {
        match self {
            PredictorKind::First => "first_order",
            PredictorKind::Second => "second_order",
            PredictorKind::Anfis => "anfis",
        }
    }
}

/// Horizon study over one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct ComparisonStudy<T> {
    #[serde(default)]
    pub name: String,
    pub trajectory: Trajectory<T>,
    /// Prediction horizons, in ticks.
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "default_predictors")]
    pub predictors: Vec<PredictorKind>,
    #[serde(default)]
    pub train: Option<TrainSpec<T>>,
}

fn default_horizons() -> Vec<usize> {
    (1..=10).collect()
}

fn default_predictors() -> Vec<PredictorKind> {
    vec![PredictorKind::First, PredictorKind::Second, PredictorKind::Anfis]
}

impl<T: Real> ComparisonStudy<T> {
    pub fn validate(&self) -> Result<()> {
        self.trajectory.validate()?;
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::validation("horizons must be a non-empty list of positive tick counts"));
        }
        if self.predictors.is_empty() {
            return Err(Error::validation("study needs at least one predictor"));
        }
        if self.predictors.contains(&PredictorKind::Anfis) {
            match &self.train {
                Some(t) => t.validate()?,
                None => return Err(Error::validation("anfis predictor requires a [train] section")),
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| Error::Parse { path: "<study>".into(), message: e.to_string() })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut s: Self =
            toml::from_str(&text).map_err(|e| Error::Parse { path: path.display().to_string(), message: e.to_string() })?;
        s.validate()?;
        if s.name.is_empty() {
            s.name = path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(s)
    }
}
