mod common;

use common::{random_inputs, random_net};
use drsim::anfis::{
    layer3_normalize, AnfisConfig, AnfisNetwork, AnfisPredictor, MembershipFn, ParamClass, RuleBase, Shape,
    TrainingSet,
};
use drsim::{EntityState, Error, Order, Vec3};
use proptest::prelude::*;

fn fd_check(net: &AnfisNetwork<f64>, data: &TrainingSet<f64>) -> Vec<(ParamClass, f64, f64)> {
    let (_, grad) = net.gradient(data.pairs()).unwrap();
    let p0 = net.params();
    let classes = net.param_classes();
    let mut out = Vec::new();
    for k in 0..p0.len() {
        let h = 1e-6 * p0[k].abs().max(1.0);
        let mut probe = net.clone();
        let mut p = p0.clone();
        p[k] = p0[k] + h;
        probe.set_params(&p).unwrap();
        let up = probe.set_loss(data).unwrap();
        p[k] = p0[k] - h;
        probe.set_params(&p).unwrap();
        let down = probe.set_loss(data).unwrap();
        out.push((classes[k], grad[k], (up - down) / (2.0 * h)));
    }
    out
}

fn assert_gradients(shape: Shape, rule_base: RuleBase, terms: usize) {
    for seed in 0..5 {
        let net = random_net(shape, rule_base, 3, terms, seed);
        let xs = random_inputs(40, 3, 100 + seed);
        let data = TrainingSet::new(
            xs.into_iter()
                .enumerate()
                .map(|(i, x)| drsim::anfis::Sample { target: (i as f64 * 0.37).sin(), input: x })
                .collect(),
        );
        for (class, analytic, numeric) in fd_check(&net, &data) {
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
            assert!(rel <= 1e-4, "{class:?}: analytic {analytic} vs numeric {numeric} (rel {rel})");
        }
    }
}

#[test]
fn gradients_bell_compact() {
    assert_gradients(Shape::Bell, RuleBase::Compact, 7);
}

#[test]
fn gradients_sigmoid_compact() {
    assert_gradients(Shape::Sigmoid, RuleBase::Compact, 7);
}

#[test]
fn gradients_grid() {
    assert_gradients(Shape::Bell, RuleBase::Grid, 3);
    assert_gradients(Shape::Sigmoid, RuleBase::Grid, 3);
}

#[test]
fn every_class_is_covered() {
    let bell = random_net(Shape::Bell, RuleBase::Compact, 3, 7, 1).param_classes();
    let sig = random_net(Shape::Sigmoid, RuleBase::Compact, 3, 7, 1).param_classes();
    for c in [ParamClass::BellA, ParamClass::BellB, ParamClass::BellC, ParamClass::Consequent] {
        assert!(bell.contains(&c));
    }
    for c in [ParamClass::SigmoidA, ParamClass::SigmoidC] {
        assert!(sig.contains(&c));
    }
}

#[test]
fn grid_rule_base_size() {
    let net = random_net(Shape::Bell, RuleBase::Grid, 3, 7, 0);
    assert_eq!(net.rules.len(), 343);
    let net = random_net(Shape::Bell, RuleBase::Compact, 3, 7, 0);
    assert_eq!(net.rules.len(), 7);
}

#[test]
fn table_like_distance_grid_is_monotone_for_nb() {
    let cfg = AnfisConfig::new(vec![("distance".into(), [-0.5, 0.5])], 7, 0.01);
    let net = AnfisNetwork::<f64>::initialize(&cfg).unwrap();
    let grid: Vec<f64> = (0..7).map(|i| -0.5 + i as f64 / 6.0).collect();
    let nb: Vec<f64> = grid.iter().map(|&x| net.layer1(&[x]).unwrap()[0][0]).collect();
    assert!(nb.windows(2).all(|w| w[1] < w[0]), "{nb:?}");
    let pb: Vec<f64> = grid.iter().map(|&x| net.layer1(&[x]).unwrap()[0][6]).collect();
    assert!(pb.windows(2).all(|w| w[1] > w[0]), "{pb:?}");
}

#[test]
fn degenerate_firing_is_an_error() {
    assert!(matches!(layer3_normalize(&[0.0_f64, 0.0]), Err(Error::DegenerateFiring)));
}

#[test]
fn training_is_deterministic() {
    let data = common::weave_residual_set(200, 5);
    let train = || {
        let mut net = random_net(Shape::Bell, RuleBase::Compact, 3, 7, 3);
        net.eta = 1e-3;
        net.train_hybrid(&data, 10).unwrap();
        net.params()
    };
    let a = train();
    let b = train();
    assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

#[test]
fn hybrid_eta_zero_is_pure_lse() {
    let data = common::weave_residual_set(100, 3);
    let mut a = random_net(Shape::Bell, RuleBase::Compact, 3, 7, 4);
    a.eta = 0.0;
    let mut b = a.clone();
    a.train_hybrid(&data, 3).unwrap();
    let mut warned = false;
    b.fit_consequents(&data, &mut warned).unwrap();
    assert_eq!(a.params(), b.params());
}

#[test]
fn constant_velocity_residual_is_learned_as_zero() {
    let states: Vec<EntityState<f64>> = (0..300)
        .map(|i| {
            let t = i as f64 * 0.1;
            let mut s = EntityState::at_rest(t);
            s.velocity = Vec3::new(3.0, -1.0, 0.0);
            s.position = s.velocity * t;
            s.orientation = (-1.0f64).atan2(3.0);
            s
        })
        .collect();
    let spec = drsim::anfis::TrainSpec::new(0.01);
    let trained = AnfisPredictor::train(&states, 0..200, 5, 0.1, &spec).unwrap();
    for i in 200..295 {
        let target = &states[i + 5];
        let a = trained.predictor.predict_from(&states[i], target.time).unwrap();
        let p = drsim::extrapolate(&states[i], target.time, Order::Second).unwrap();
        let ea = (a.position - target.position).norm();
        let ep = (p.position - target.position).norm();
        assert!(ea <= ep + 1e-9, "anfis {ea} vs poly {ep}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_of_unity(x in prop::collection::vec(-1.5f64..1.5, 3), seed in 0u64..50) {
        let net = random_net(Shape::Bell, RuleBase::Compact, 3, 7, seed);
        let (out, trace) = net.forward(&x).unwrap();
        let sum: f64 = trace.beta.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        let z = net.consequents();
        let lo = z.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(out >= lo - 1e-12 && out <= hi + 1e-12);
    }

    #[test]
    fn sigmoid_grid_partition(x in prop::collection::vec(-1.0f64..1.0, 3), seed in 0u64..20) {
        let net = random_net(Shape::Sigmoid, RuleBase::Grid, 3, 3, seed);
        let (out, trace) = net.forward(&x).unwrap();
        prop_assert!((trace.beta.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let z = net.consequents();
        prop_assert!(z.iter().any(|&v| v <= out + 1e-12) && z.iter().any(|&v| v >= out - 1e-12));
    }

    #[test]
    fn constant_consequents_give_constant_output(x in prop::collection::vec(-2.0f64..2.0, 3), k in -10.0f64..10.0) {
        let mut net = random_net(Shape::Bell, RuleBase::Compact, 3, 5, 7);
        let z = vec![k; net.rules.len()];
        net.set_consequents(&z);
        prop_assert!((net.predict(&x).unwrap() - k).abs() <= 1e-12 * k.abs().max(1.0));
    }

    #[test]
    fn membership_ranges(x in -1e3f64..1e3, a in 1e-3f64..10.0, b in 0.1f64..5.0, c in -5.0f64..5.0) {
        let bell = MembershipFn::bell(a, b, c).unwrap().eval(x);
        prop_assert!((0.0..=1.0).contains(&bell));
        let s = MembershipFn::sigmoid(a, c).unwrap().eval(x);
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn bundle_round_trip_is_lossless(seed in 0u64..20) {
        let net = random_net(Shape::Bell, RuleBase::Compact, 3, 7, seed);
        let p = AnfisPredictor { format: AnfisPredictor::<f64>::untrained(0.5, 7).unwrap().format, horizon: 0.5, axes: vec![net.clone(), net.clone(), net] };
        let back = AnfisPredictor::<f64>::from_json(&p.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, p);
    }
}
