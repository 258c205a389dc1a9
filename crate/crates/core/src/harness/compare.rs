//! Horizon studies: mean positional error per predictor and horizon.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::anfis::{AnfisPredictor, TrainSpec, Trained};
use crate::error::{Error, Result};
use crate::fmt::sig9;
use crate::kinematics::{extrapolate, EntityState, Order};
use crate::scalar::Real;

use super::{ComparisonStudy, PredictorKind};

/// Rows are horizons, columns follow `predictors`.
#[derive(Clone, Debug)]
pub struct ComparisonTable<T> {
    pub horizons: Vec<usize>,
    pub predictors: Vec<PredictorKind>,
    pub errors: Vec<Vec<T>>,
    /// Test samples averaged per horizon.
    pub samples: Vec<usize>,
    /// Bundles trained for the study, keyed by their reference horizon in ticks.
    pub trained: Vec<(usize, Trained<T>)>,
}

impl<T: Real> ComparisonTable<T> {
    pub fn column(&self, kind: PredictorKind) -> Option<Vec<T>> {
        let j = self.predictors.iter().position(|&p| p == kind)?;
        Some(self.errors.iter().map(|row| row[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("horizon");
        for p in &self.predictors {
            s.push(',');
            s.push_str(p.column());
        }
        s.push('\n');
        for (h, row) in self.horizons.iter().zip(&self.errors) {
            let _ = write!(s, "{h}");
            for v in row {
                let _ = write!(s, ",{}", sig9(v.as_f64()));
            }
            s.push('\n');
        }
        s
    }
}

/// Truth sampled at every tick of the study trajectory.
pub fn study_states<T: Real>(study: &ComparisonStudy<T>) -> Result<Vec<EntityState<T>>> {
    let traj = &study.trajectory;
    (0..=traj.ticks()).map(|i| traj.sample_truth(traj.tick_time(i))).collect()
}

/// Index of the first test tick. Ticks before it train, ticks from it on test.
pub fn split_index<T: Real>(n_states: usize, split: T) -> usize {
    let k = (T::from_count(n_states) * split).floor().to_usize().unwrap_or(0);
    k.min(n_states)
}

fn split_of<T: Real>(study: &ComparisonStudy<T>) -> T {
    study.train.as_ref().map(|t| t.split).unwrap_or_else(|| TrainSpec::<T>::new(T::lit(0.01)).split)
}

/// Trains one bundle on the training ticks of the study.
pub fn train_on_study<T: Real>(study: &ComparisonStudy<T>, horizon_ticks: usize) -> Result<Trained<T>> {
    let spec = study.train.as_ref().ok_or_else(|| Error::validation("study has no [train] section"))?;
    let states = study_states(study)?;
    let split = split_index(states.len(), spec.split);
    AnfisPredictor::train(&states, 0..split, horizon_ticks, study.trajectory.tick, spec)
}

/// Reference horizon for a single bundle: `train.horizon`, else the longest studied horizon.
pub fn reference_horizon<T: Real>(study: &ComparisonStudy<T>) -> usize {
    study
        .train
        .as_ref()
        .and_then(|t| t.horizon)
        .unwrap_or_else(|| study.horizons.iter().copied().max().unwrap_or(1))
}

/// Trains where needed, then averages `|predicted - truth|` over the test ticks.
///
/// With `train.horizon` set one bundle serves every horizon; otherwise each
/// horizon gets its own bundle trained at that horizon.
pub fn run_comparison<T: Real>(study: &ComparisonStudy<T>) -> Result<ComparisonTable<T>> {
    study.validate()?;
    let states = study_states(study)?;
    let n = states.len();
    let split = split_index(n, split_of(study));
    let tick = study.trajectory.tick;

    let mut trained: Vec<(usize, Trained<T>)> = Vec::new();
    if study.predictors.contains(&PredictorKind::Anfis) {
        let spec = study.train.as_ref().expect("validated");
        let refs: Vec<usize> = match spec.horizon {
            Some(h) => vec![h],
            None => study.horizons.clone(),
        };
        let results: Vec<Result<(usize, Trained<T>)>> = refs
            .par_iter()
            .map(|&h| AnfisPredictor::train(&states, 0..split, h, tick, spec).map(|t| (h, t)))
            .collect();
        for r in results {
            trained.push(r?);
        }
    }
    let bundle_for = |h: usize| -> &AnfisPredictor<T> {
        let hit = trained.iter().find(|(r, _)| *r == h).or_else(|| trained.first());
        &hit.expect("anfis bundle trained").1.predictor
    };

    let mut errors = Vec::with_capacity(study.horizons.len());
    let mut samples = Vec::with_capacity(study.horizons.len());
    for &h in &study.horizons {
        if n < h + 1 || split >= n - h {
            return Err(Error::validation(format!("no test samples at horizon {h}: test window too short")));
        }
        let bases = split..n - h;
        let count = bases.len();
        let mut row = Vec::with_capacity(study.predictors.len());
        for &kind in &study.predictors {
            let mut sum = T::zero();
            for i in bases.clone() {
                let target = &states[i + h];
                let pred = match kind {
                    PredictorKind::First => extrapolate(&states[i], target.time, Order::First)?,
                    PredictorKind::Second => extrapolate(&states[i], target.time, Order::Second)?,
                    PredictorKind::Anfis => bundle_for(h).predict_from(&states[i], target.time)?,
                };
                sum = sum + (pred.position - target.position).norm();
            }
            row.push(sum / T::from_count(count));
        }
        errors.push(row);
        samples.push(count);
    }
    Ok(ComparisonTable {
        horizons: study.horizons.clone(),
        predictors: study.predictors.clone(),
        errors,
        samples,
        trained,
    })
}
