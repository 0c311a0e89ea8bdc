//! The theory suite: contraction certificates, the indistinguishable
//! message sets and the quadratic lower-bound instances, reported as JSON.

use poisonbench::aggregators::{certify_contraction, rho_formula, rho_lower_bound};
use poisonbench::theory::{
    build_indistinguishable_sets, theorem_error_bound, BoundKind, InstanceId, QuadraticInstance, TheoryInputs,
};
use poisonbench::trainer::{measure_a, measure_sigma2, measure_xi, prepare_shards, theorem_schedule};
use poisonbench::{
    derive_stream, run, AggregatorKind, AggregatorSpec, AttackSpec, CcStart, HyperParams, ModelParams, Purpose,
    Sample, SampleMode, Simulation, TrainConfig,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub const CERTIFY_TRIALS: usize = 1000;
pub const CERTIFY_DIMS: [usize; 3] = [1, 3, 10];
pub const CERTIFY_TOL: f64 = 1e-9;
const AUDIT_TOL: f64 = 1e-12;

/// Deliberate faults for checking that the suite can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Certify the mean while claiming FABA's constant at `δ = 0.3`.
    MeanAsFaba,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failed_ids(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.id).collect()
    }
}

/// `(δ, W, R)` settings certified for `kind`.
pub fn certification_grid(kind: AggregatorKind) -> Vec<(f64, usize, usize)> {
    let deltas: &[f64] = match kind {
        AggregatorKind::Faba => &[0.1, 0.2, 0.3],
        _ => &[0.1, 0.2, 0.3, 0.4],
    };
    let mut out = Vec::new();
    for &d in deltas {
        for w in [10usize, 20] {
            let r = w - (d * w as f64).round() as usize;
            out.push((d, w, r));
        }
    }
    out
}

fn contraction_check(id: &'static str, kind: AggregatorKind, fault: Option<Fault>) -> Result<Check, CliError> {
    let mut rows = Vec::new();
    let mut passed = true;
    for (delta, w, r) in certification_grid(kind) {
        for dim in CERTIFY_DIMS {
            let spec = match fault {
                Some(Fault::MeanAsFaba) if delta == 0.3 => AggregatorSpec::mean(w),
                _ => AggregatorSpec::new(kind, r),
            };
            let seed = (w * 100 + dim) as u64;
            let mut stream = derive_stream(seed, r as u64, Purpose::Certify);
            let cert = certify_contraction(&spec, CERTIFY_TRIALS, w, r, dim, &mut stream)?;
            let rho = rho_formula(kind, delta, dim, r)?;
            let bad = cert.violations(rho, CERTIFY_TOL);
            passed &= bad == 0;
            rows.push(json!({
                "delta": delta, "workers": w, "regular": r, "dim": dim, "rho": rho,
                "max_ratio": cert.max_ratio(), "violations": bad, "skipped": cert.skipped,
            }));
        }
    }
    Ok(Check { id, passed, detail: Value::Array(rows) })
}

fn all_rules(w: usize, r: usize) -> Vec<AggregatorSpec> {
    let mut v = vec![AggregatorSpec::mean(w), AggregatorSpec::faba(r), AggregatorSpec::cc(10.0, 1, CcStart::Zero)];
    if 2 * r > w {
        v.push(AggregatorSpec::trimean(r));
    }
    v
}

/// `(δ, ρ, W, R)` for the two regimes of the impossibility construction.
pub const INDISTINGUISHABLE_CASES: [(f64, f64, usize, usize); 4] =
    [(0.5, 0.5, 10, 5), (0.6, 0.5, 10, 4), (0.3, 0.5, 10, 7), (0.4, 0.9, 10, 6)];

fn indistinguishability_check() -> Result<Check, CliError> {
    let mut rows = Vec::new();
    let mut passed = true;
    for (delta, rho, w, r) in INDISTINGUISHABLE_CASES {
        let pair = build_indistinguishable_sets(rho, w, r)?;
        let mut a: Vec<f64> = pair.set1.iter().map(|m| m[0]).collect();
        let mut b: Vec<f64> = pair.set2.iter().map(|m| m[0]).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let same_multiset = a == b;
        let mut rules = Vec::new();
        for spec in all_rules(w, r) {
            let o1 = spec.aggregate(&pair.set1, None)?;
            let o2 = spec.aggregate(&pair.set2, None)?;
            let violated = [&pair.set1, &pair.set2].iter().zip([&o1, &o2]).any(|(set, out)| {
                let ybar = set[..r].iter().map(|m| m[0]).sum::<f64>() / r as f64;
                let spread = set[..r].iter().map(|m| (m[0] - ybar).abs()).fold(0.0, f64::max);
                (out[0] - ybar).abs() > rho * spread
            });
            let ok = o1 == o2 && violated;
            passed &= ok;
            rules.push(json!({"rule": spec.kind.name(), "identical": o1 == o2, "violated": violated}));
        }
        let below = delta >= 0.5 || rho < rho_lower_bound(delta);
        passed &= same_multiset && below;
        rows.push(json!({"delta": delta, "rho": rho, "multisets_equal": same_multiset, "rules": rules}));
    }
    Ok(Check { id: "indistinguishable_sets", passed, detail: Value::Array(rows) })
}

/// Poisoned fractions used on the quadratic instances (`W = 10`).
pub const QUADRATIC_REGULAR: [usize; 3] = [9, 8, 7];

fn audit_check() -> Result<Check, CliError> {
    let mut rows = Vec::new();
    let mut passed = true;
    for r in QUADRATIC_REGULAR {
        for id in [InstanceId::One, InstanceId::Two] {
            let inst = QuadraticInstance::new(10, r, 1.0, 1.0, id)?;
            let shards = inst.shards();
            let regular: Vec<&[Sample]> = shards[..r].iter().map(Vec::as_slice).collect();
            let poisoned: Vec<&[Sample]> = shards[r..].iter().map(Vec::as_slice).collect();
            let (xi, a) = inst.closed_form_constants();
            for x in [[0.0, 0.0], [0.7, -1.3]] {
                let xi_hat = measure_xi(&inst.cost, &x, &regular)?;
                let a_hat = measure_a(&inst.cost, &x, &poisoned, &regular)?.unwrap_or(f64::NAN);
                let s2 = shards
                    .iter()
                    .map(|s| measure_sigma2(&inst.cost, &x, s))
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                let ok = (xi_hat - xi).abs() <= AUDIT_TOL && (a_hat - a).abs() <= AUDIT_TOL && s2 <= AUDIT_TOL;
                passed &= ok;
                rows.push(json!({
                    "regular": r, "instance": format!("{id:?}"), "x": x,
                    "xi": [xi_hat, xi], "a": [a_hat, a], "sigma2": s2,
                }));
            }
        }
    }
    Ok(Check { id: "quadratic_assumptions", passed, detail: Value::Array(rows) })
}

/// Squared gradient norms `‖∇f(x^t)‖²` for `t = 0..=T`, full gradients.
pub fn quadratic_trace(inst: &QuadraticInstance, spec: AggregatorSpec, gamma: f64, alpha: f64, iterations: usize) -> Result<Vec<f64>, CliError> {
    let hyper = HyperParams { workers: inst.workers, regular: inst.regular, iterations, gamma, alpha, seed: 0 };
    let mut cfg = TrainConfig::new(hyper.clone(), spec, AttackSpec::none());
    cfg.sample_mode = SampleMode::Full;
    cfg.log_every = Some(1);
    let sim = Simulation {
        model: &inst.cost,
        shards: prepare_shards(inst.shards(), &hyper, &AttackSpec::none(), 2),
        test: None,
        x0: ModelParams::zeros(2, None)?,
    };
    Ok(run(&sim, &cfg)?.records.iter().map(|r| r.grad_norm_sq).collect())
}

fn avg_after_start(trace: &[f64]) -> f64 {
    trace[1..].iter().sum::<f64>() / (trace.len() - 1) as f64
}

fn lower_bound_check() -> Result<Check, CliError> {
    let mut rows = Vec::new();
    let mut passed = true;
    for r in QUADRATIC_REGULAR {
        let delta = 1.0 - r as f64 / 10.0;
        let bound = delta * delta / 8.0;
        for spec in all_rules(10, r) {
            let mut worse = 0.0f64;
            for id in [InstanceId::One, InstanceId::Two] {
                let inst = QuadraticInstance::new(10, r, 1.0, 1.0, id)?;
                worse = worse.max(avg_after_start(&quadratic_trace(&inst, spec, 0.1, 1.0, 500)?));
            }
            passed &= worse >= bound;
            rows.push(json!({"delta": delta, "rule": spec.kind.name(), "worse_average": worse, "bound": bound}));
        }
    }
    Ok(Check { id: "quadratic_lower_bound", passed, detail: Value::Array(rows) })
}

fn mean_upper_bound_check() -> Result<Check, CliError> {
    let mut rows = Vec::new();
    let mut passed = true;
    for r in QUADRATIC_REGULAR {
        let delta = 1.0 - r as f64 / 10.0;
        for id in [InstanceId::One, InstanceId::Two] {
            let inst = QuadraticInstance::new(10, r, 1.0, 1.0, id)?;
            let (xi, a) = inst.closed_form_constants();
            let f0 = inst.objective(&[0.0, 0.0]) - inst.objective(&inst.minimizer());
            let g0 = inst.objective_gradient(&[0.0, 0.0]);
            let (gamma, alpha) = theorem_schedule(BoundKind::Mean, f0, 1.0, 0.0, delta, r, 500);
            let trace = quadratic_trace(&inst, AggregatorSpec::mean(10), gamma, alpha, 500)?;
            let bound = theorem_error_bound(&TheoryInputs {
                kind: BoundKind::Mean,
                contraction: delta,
                spread: a,
                xi,
                sigma: 0.0,
                f0,
                l: 1.0,
                regular: r,
                iterations: 500,
                grad0_norm: g0[0].hypot(g0[1]),
            });
            let avg = avg_after_start(&trace);
            let plateau = quadratic_trace(&inst, AggregatorSpec::mean(10), 0.1, 1.0, 500)?[500];
            let ok = avg <= bound && plateau <= 15.0 * delta * delta;
            passed &= ok;
            rows.push(json!({
                "delta": delta, "instance": format!("{id:?}"), "average": avg, "bound": bound,
                "plateau": plateau, "leading_term": 15.0 * delta * delta * a * a,
            }));
        }
    }
    Ok(Check { id: "mean_upper_bound", passed, detail: Value::Array(rows) })
}

pub fn run_suite(fault: Option<Fault>) -> Result<Report, CliError> {
    let checks = vec![
        contraction_check("trimean_contraction", AggregatorKind::Trimean, None)?,
        contraction_check("cc_contraction", AggregatorKind::Cc, None)?,
        contraction_check("faba_contraction", AggregatorKind::Faba, fault)?,
        indistinguishability_check()?,
        audit_check()?,
        lower_bound_check()?,
        mean_upper_bound_check()?,
    ];
    Ok(Report { passed: checks.iter().all(|c| c.passed), checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_stay_inside_the_valid_ranges() {
        for kind in [AggregatorKind::Trimean, AggregatorKind::Cc, AggregatorKind::Faba] {
            for (d, w, r) in certification_grid(kind) {
                assert!((1.0 - r as f64 / w as f64 - d).abs() < 1e-12);
                assert!(w <= 20);
                assert!(rho_formula(kind, d, 3, r).is_ok());
            }
        }
    }

    #[test]
    fn faulty_faba_is_flagged() {
        let c = contraction_check("faba_contraction", AggregatorKind::Faba, Some(Fault::MeanAsFaba)).unwrap();
        assert!(!c.passed);
    }
}
