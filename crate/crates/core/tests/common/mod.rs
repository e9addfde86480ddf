#![allow(dead_code)]

use deep_nitsche::benchmarks::{flower_problem, BenchmarkProblem, InterfaceProblem};
use deep_nitsche::loss::{DiscreteLoss, LossModes, NitscheConfig};
use deep_nitsche::network::{NetworkArch, NetworkPair};
use deep_nitsche::sampling::{flower_point, InterfaceSamples, PointCloud, SampleBatch};

/// Two points of every class on the flower problem.
pub fn eight_point_batch() -> SampleBatch {
    let mut inner = PointCloud::new(2);
    inner.push(&[0.1, -0.2]);
    inner.push(&[-0.25, 0.05]);
    let mut outer = PointCloud::new(2);
    outer.push(&[0.8, 0.3]);
    outer.push(&[-0.6, -0.7]);
    let mut points = PointCloud::new(2);
    let mut normals = PointCloud::new(2);
    let mut jacobians = Vec::new();
    let geom = flower_problem().geometry().clone();
    for theta in [0.7, 4.1] {
        let (x, speed) = flower_point(theta);
        points.push(&x);
        normals.push(&geom.unit_normal(&x).unwrap());
        jacobians.push(speed);
    }
    let mut boundary = PointCloud::new(2);
    boundary.push(&[1.0, 0.35]);
    boundary.push(&[-0.4, -1.0]);
    SampleBatch {
        inner_points: inner,
        outer_points: outer,
        interface: InterfaceSamples {
            points,
            normals,
            jacobians,
            param_measure: std::f64::consts::TAU,
        },
        boundary_points: boundary,
        seed: 0,
        epoch_created: 0,
    }
}

pub fn flower_loss(batch: &SampleBatch, modes: LossModes) -> (BenchmarkProblem, DiscreteLoss) {
    let p = flower_problem();
    let cfg = NitscheConfig::new(1.0, 10.0, 1000.0, 5000.0).unwrap();
    let loss = DiscreteLoss::new(&p, batch, &cfg, &p.measures(), modes).unwrap();
    (p, loss)
}

/// Largest componentwise relative difference between the reverse-mode
/// gradient and central differences of the forward-mode loss value. Each
/// component is compared relative to the larger of its own magnitude and
/// 1e-3 of the gradient's max norm, so components that vanish are judged
/// on the scale of the whole gradient.
pub fn gradient_check(loss: &DiscreteLoss, arch: NetworkArch, seed: u64, h: f64) -> f64 {
    gradient_check_pair(loss, &NetworkPair::xavier(arch, seed).unwrap(), h)
}

/// Xavier weights with every entry, biases included, jittered by N(0, 0.1²).
pub fn random_pair(arch: NetworkArch, seed: u64) -> NetworkPair {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut pair = NetworkPair::xavier(arch, seed).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let theta: Vec<f64> = pair.joint_params().iter().map(|t| t + noise.sample(&mut rng)).collect();
    pair.set_joint_params(&theta).unwrap();
    pair
}

pub fn gradient_check_pair(loss: &DiscreteLoss, pair: &NetworkPair, h: f64) -> f64 {
    let (_, grad) = loss.value_and_gradient(pair).unwrap();
    let theta = pair.joint_params();
    let mut probe = pair.clone();
    let mut eval = |t: &[f64]| {
        probe.set_joint_params(t).unwrap();
        loss.value(&probe).unwrap()
    };
    let mut fd = vec![0.0; theta.len()];
    let mut t = theta.clone();
    for i in 0..theta.len() {
        t[i] = theta[i] + h;
        let up = eval(&t);
        t[i] = theta[i] - h;
        let down = eval(&t);
        t[i] = theta[i];
        fd[i] = (up - down) / (2.0 * h);
    }
    let scale = fd.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    grad.iter()
        .zip(&fd)
        .map(|(a, f)| (a - f).abs() / a.abs().max(f.abs()).max(1e-3 * scale))
        .fold(0.0, f64::max)
}
