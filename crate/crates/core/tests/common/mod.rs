#![allow(dead_code)]

use std::path::PathBuf;

use drsim::anfis::{AnfisConfig, AnfisNetwork, AnfisPredictor, RuleBase, Shape, TrainingSet};
use drsim::harness::study_states;
use drsim::{ComparisonStudy, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn stock_scenario_paths() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(manifest_dir().join("scenarios"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    v.sort();
    v
}

pub fn stock(name: &str) -> Scenario<f64> {
    Scenario::load(&manifest_dir().join("scenarios").join(format!("{name}.toml"))).unwrap()
}

pub fn weave_study() -> ComparisonStudy<f64> {
    ComparisonStudy::load(&manifest_dir().join("studies/weave.toml")).unwrap()
}

/// Network with perturbed premises and random consequents, so every
/// parameter carries a non-trivial gradient.
pub fn random_net(shape: Shape, rule_base: RuleBase, inputs: usize, terms: usize, seed: u64) -> AnfisNetwork<f64> {
    let ranges = (0..inputs).map(|i| (format!("x{i}"), [-1.0, 1.0])).collect();
    let mut cfg = AnfisConfig::new(ranges, terms, 0.01);
    cfg.shape = shape;
    cfg.rule_base = rule_base;
    let mut net = AnfisNetwork::initialize(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_premise = net.premise_param_count();
    let mut p = net.params();
    for (k, v) in p.iter_mut().enumerate() {
        if k < n_premise {
            *v *= 1.0 + rng.random_range(-0.2..0.2);
            *v += rng.random_range(-0.05..0.05);
        } else {
            *v = rng.random_range(-3.0..3.0);
        }
    }
    net.set_params(&p).unwrap();
    net.validate().unwrap();
    net
}

pub fn random_inputs(n: usize, arity: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..arity).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// Lateral-axis residual samples of the stock weave, first `n` base ticks.
pub fn weave_residual_set(n: usize, horizon_ticks: usize) -> TrainingSet<f64> {
    let study = weave_study();
    let states = study_states(&study).unwrap();
    let sets = AnfisPredictor::residual_sets(&states, 0..n + horizon_ticks, horizon_ticks).unwrap();
    sets[1].clone()
}
