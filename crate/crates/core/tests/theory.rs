use poisonbench::aggregators::{rho_lower_bound, AggregatorKind, AggregatorSpec, CcStart};
use poisonbench::theory::{
    build_indistinguishable_sets, lower_bound_value, theorem_error_bound, BoundKind, InstanceId,
    QuadraticInstance, TheoryInputs,
};
use poisonbench::trainer::{measure_a, measure_sigma2, measure_xi, prepare_shards, run, Simulation};
use poisonbench::{AttackSpec, HyperParams, ModelParams, Sample, SampleMode, TrainConfig};

fn all_specs(w: usize, r: usize) -> Vec<AggregatorSpec> {
    let mut v = vec![AggregatorSpec::mean(w), AggregatorSpec::faba(r), AggregatorSpec::cc(10.0, 1, CcStart::Zero)];
    if 2 * r > w {
        v.push(AggregatorSpec::trimean(r));
    }
    v
}

#[test]
fn quadratic_constants_hold_at_any_point() {
    for (w, r) in [(10, 9), (10, 8), (10, 7), (10, 6), (7, 4)] {
        for id in [InstanceId::One, InstanceId::Two] {
            let inst = QuadraticInstance::new(w, r, 1.7, 0.5, id).unwrap();
            let shards = inst.shards();
            let regular: Vec<&[Sample]> = shards[..r].iter().map(Vec::as_slice).collect();
            let poisoned: Vec<&[Sample]> = shards[r..].iter().map(Vec::as_slice).collect();
            let (xi, a) = inst.closed_form_constants();
            for x in [[0.0, 0.0], [3.0, -1.0], [-0.25, 8.0]] {
                let xi_hat = measure_xi(&inst.cost, &x, &regular).unwrap();
                let a_hat = measure_a(&inst.cost, &x, &poisoned, &regular).unwrap().unwrap();
                assert!((xi_hat - xi).abs() < 1e-12, "{id:?} R={r}: ξ̂ {xi_hat} vs {xi}");
                assert!((a_hat - a).abs() < 1e-12, "{id:?} R={r}: Â {a_hat} vs {a}");
                for s in &shards {
                    assert_eq!(measure_sigma2(&inst.cost, &x, s).unwrap(), 0.0);
                }
            }
        }
    }
}

#[test]
fn minimiser_zeroes_the_objective_gradient() {
    for id in [InstanceId::One, InstanceId::Two] {
        let inst = QuadraticInstance::new(10, 7, 2.0, 3.0, id).unwrap();
        let g = inst.objective_gradient(&inst.minimizer());
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15);
    }
}

#[test]
fn both_instances_present_the_same_messages() {
    let one = QuadraticInstance::new(10, 7, 1.0, 1.0, InstanceId::One).unwrap();
    let two = QuadraticInstance::new(10, 7, 1.0, 1.0, InstanceId::Two).unwrap();
    let mut l1: Vec<usize> = (0..10).map(|w| one.label(w)).collect();
    let mut l2: Vec<usize> = (0..10).map(|w| two.label(w)).collect();
    l1.sort();
    l2.sort();
    assert_eq!(l1, l2);
}

#[test]
fn indistinguishable_sets_fool_every_rule() {
    for (rho, w, r) in [(0.3, 10, 5), (0.7, 10, 4), (0.5, 10, 7), (0.9, 10, 6)] {
        let p = build_indistinguishable_sets(rho, w, r).unwrap();
        for spec in all_specs(w, r) {
            let a = spec.aggregate(&p.set1, None).unwrap();
            let b = spec.aggregate(&p.set2, None).unwrap();
            assert_eq!(a, b, "{:?} on ({rho}, {w}, {r})", spec.kind);
            let fails = [&p.set1, &p.set2].iter().any(|set| {
                let ybar = set[..r].iter().map(|m| m[0]).sum::<f64>() / r as f64;
                let spread = set[..r].iter().map(|m| (m[0] - ybar).abs()).fold(0.0, f64::max);
                (a[0] - ybar).abs() > rho * spread
            });
            assert!(fails, "{:?} satisfied ρ = {rho} on both sets", spec.kind);
        }
    }
}

fn average_grad_norm(inst: &QuadraticInstance, spec: AggregatorSpec) -> (f64, f64) {
    let hyper = HyperParams { workers: inst.workers, regular: inst.regular, iterations: 500, gamma: 0.1, alpha: 1.0, seed: 0 };
    let mut cfg = TrainConfig::new(hyper.clone(), spec, AttackSpec::none());
    cfg.sample_mode = SampleMode::Full;
    cfg.log_every = Some(1);
    let sim = Simulation {
        model: &inst.cost,
        shards: prepare_shards(inst.shards(), &hyper, &AttackSpec::none(), 2),
        test: None,
        x0: ModelParams::zeros(2, None).unwrap(),
    };
    let out = run(&sim, &cfg).unwrap();
    let avg = out.records[1..].iter().map(|r| r.grad_norm_sq).sum::<f64>() / 500.0;
    (avg, out.records[500].grad_norm_sq)
}

#[test]
fn no_rule_beats_the_lower_bound() {
    for r in [9, 8, 7] {
        let delta = 1.0 - r as f64 / 10.0;
        let one = QuadraticInstance::new(10, r, 1.0, 1.0, InstanceId::One).unwrap();
        let two = QuadraticInstance::new(10, r, 1.0, 1.0, InstanceId::Two).unwrap();
        for spec in all_specs(10, r) {
            let worse = average_grad_norm(&one, spec).0.max(average_grad_norm(&two, spec).0);
            assert!(worse >= delta * delta / 8.0, "{:?} at δ = {delta}: {worse}", spec.kind);
        }
    }
}

#[test]
fn mean_respects_its_upper_bound_on_the_quadratic() {
    for r in [9, 8, 7] {
        let delta = 1.0 - r as f64 / 10.0;
        let mut worst = (0.0f64, 0.0f64);
        for id in [InstanceId::One, InstanceId::Two] {
            let inst = QuadraticInstance::new(10, r, 1.0, 1.0, id).unwrap();
            let (avg, last) = average_grad_norm(&inst, AggregatorSpec::mean(10));
            worst = (worst.0.max(avg), worst.1.max(last));
        }
        // the mean lands on a known point: its plateau is δ²(1−δ)²c²
        assert!((worst.1 - delta * delta * (1.0 - delta).powi(2)).abs() < 1e-12);
        assert!(worst.1 <= 15.0 * delta * delta);
        for id in [InstanceId::One, InstanceId::Two] {
            let inst = QuadraticInstance::new(10, r, 1.0, 1.0, id).unwrap();
            let (xi, a) = inst.closed_form_constants();
            let bound = theorem_error_bound(&TheoryInputs {
                kind: BoundKind::Mean,
                contraction: delta,
                spread: a,
                xi,
                sigma: 0.0,
                f0: inst.objective(&[0.0, 0.0]) - inst.objective(&inst.minimizer()),
                l: 1.0,
                regular: r,
                iterations: 500,
                grad0_norm: 0.0,
            });
            assert!(average_grad_norm(&inst, AggregatorSpec::mean(10)).0 <= bound);
        }
    }
}

#[test]
fn construction_needs_a_regular_majority() {
    assert!(QuadraticInstance::new(10, 5, 1.0, 1.0, InstanceId::One).is_err());
    assert!(QuadraticInstance::new(10, 11, 1.0, 1.0, InstanceId::One).is_err());
}

#[test]
fn lower_bound_examples() {
    assert!((lower_bound_value(0.1, 1.0, 1.0) - 0.00125).abs() < 1e-18);
    assert_eq!(rho_lower_bound(0.6), 1.0);
    assert_eq!(AggregatorKind::ALL.len(), 4);
}
