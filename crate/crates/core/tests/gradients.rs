//! Analytic gradients against central finite differences.

use poisonbench::models::{LossModel, Mlp, Softmax};
use poisonbench::{derive_stream, Purpose, RngStream, Sample};

const H: f64 = 1e-5;

fn fd_gradient(model: &dyn LossModel, x: &[f64], s: &Sample) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            xp[i] = orig + H;
            let up = model.sample_loss(&xp, s).unwrap();
            xp[i] = orig - H;
            let down = model.sample_loss(&xp, s).unwrap();
            xp[i] = orig;
            (up - down) / (2.0 * H)
        })
        .collect()
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / scale.max(1e-8)
}

fn random_sample(dim: usize, classes: usize, r: &mut RngStream) -> Sample {
    Sample::new((0..dim).map(|_| 2.0 * r.uniform()).collect(), r.index(classes))
}

#[test]
fn softmax_matches_finite_differences_and_norm_bound() {
    let model = Softmax::new(5, 8);
    let mut r = derive_stream(3, 0, Purpose::Custom(41));
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x: Vec<f64> = (0..model.param_dim()).map(|_| 2.0 * r.uniform() - 1.0).collect();
        let s = random_sample(8, 5, &mut r);
        let g = model.sample_gradient(&x, &s).unwrap();
        worst = worst.max(rel_error(&fd_gradient(&model, &x, &s), &g));
        let a = s.feature.iter().map(|v| v * v).sum::<f64>().sqrt();
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(gn <= 2.0 * a + 1e-12, "‖g‖ = {gn} > 2‖a‖ = {}", 2.0 * a);
    }
    assert!(worst < 1e-5, "worst relative error {worst}");
}

/// Pre-activations of both hidden layers, recomputed from the flat layout.
fn pre_activations(d: usize, h: usize, x: &[f64], a: &[f64]) -> Vec<f64> {
    let w1 = &x[..h * d];
    let b1 = &x[h * d..h * d + h];
    let z1: Vec<f64> = (0..h)
        .map(|i| b1[i] + (0..d).map(|j| w1[i * d + j] * a[j]).sum::<f64>())
        .collect();
    let h1: Vec<f64> = z1.iter().map(|z| z.max(0.0)).collect();
    let off = h * d + h;
    let w2 = &x[off..off + h * h];
    let b2 = &x[off + h * h..off + h * h + h];
    let z2: Vec<f64> = (0..h)
        .map(|i| b2[i] + (0..h).map(|j| w2[i * h + j] * h1[j]).sum::<f64>())
        .collect();
    z1.into_iter().chain(z2).collect()
}

#[test]
fn mlp_matches_finite_differences_away_from_kinks() {
    let (d, h, k) = (6, 12, 4);
    let model = Mlp::with_hidden(d, h, k);
    let mut r = derive_stream(5, 0, Purpose::Custom(42));
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 100 {
        let x: Vec<f64> = (0..model.param_dim()).map(|_| r.uniform() - 0.5).collect();
        let s = random_sample(d, k, &mut r);
        // a perturbation of size H moves each pre-activation by well under 1e-3
        if pre_activations(d, h, &x, &s.feature).iter().any(|z| z.abs() < 1e-3) {
            continue;
        }
        let g = model.sample_gradient(&x, &s).unwrap();
        worst = worst.max(rel_error(&fd_gradient(&model, &x, &s), &g));
        checked += 1;
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn full_size_mlp_spot_check() {
    let model = Mlp::new(10, 10);
    let mut r = derive_stream(9, 0, Purpose::Init);
    let x = model.init_params(&mut r).unwrap().into_vec();
    let s = random_sample(10, 10, &mut r);
    if pre_activations(10, 50, &x, &s.feature).iter().all(|z| z.abs() > 1e-3) {
        let g = model.sample_gradient(&x, &s).unwrap();
        assert!(rel_error(&fd_gradient(&model, &x, &s), &g) < 1e-4);
    }
}
