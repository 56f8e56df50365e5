use super::*;
use crate::nn::{grad_check, Adam, AdamConfig, Layer, Matrix, Parameterized, RngStream};
use crate::pose::{Pose2D, Pose3D};

fn tiny_config() -> CvaeConfig {
    CvaeConfig {
        latent_dim: 2,
        hidden_dim: 8,
        blocks: 1,
        dropout: 0.0,
        k_train: 2,
        k_test: 5,
        epochs: 3,
        batch_size: 4,
        ..CvaeConfig::default()
    }
}

/// Three joints (root + two), two 2D joints: 4 inputs, 6 outputs.
fn tiny_model(seed: u64) -> CvaeModel<f64> {
    CvaeModel::new(tiny_config(), PoseNormalizer::identity(4, 6, 0), &mut RngStream::new(seed)).unwrap()
}

fn random_set(rows: usize, seed: u64) -> TrainingSet<f64> {
    let mut r = RngStream::new(seed);
    let mut m = |c: usize| Matrix::from_vec(rows, c, (0..rows * c).map(|_| r.normal()).collect()).unwrap();
    let inputs = m(4);
    let targets = m(6);
    TrainingSet { inputs, targets }
}

fn last_linear(net: &mut crate::nn::Network<f64>) -> &mut crate::nn::Linear<f64> {
    match net.layers_mut().last_mut() {
        Some(Layer::Linear(l)) => l,
        _ => panic!("network does not end in a linear layer"),
    }
}

#[test]
fn kl_examples() {
    let q = LatentGaussian::new(vec![1.0], vec![0.0]).unwrap();
    assert!((kl_divergence(&q) - 0.5).abs() < 1e-12);
    let q = LatentGaussian::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
    assert_eq!(kl_divergence(&q), 0.0);
    let ln2 = 2f64.ln();
    let q = LatentGaussian::new(vec![0.0], vec![ln2]).unwrap();
    assert!((kl_divergence(&q) - 0.5 * (1.0 - ln2)).abs() < 1e-12);
    let q = LatentGaussian::new(vec![3.0, -1.0], vec![0.0, 0.0]).unwrap();
    assert!((kl_divergence(&q) - 5.0).abs() < 1e-12);
}

#[test]
fn log_var_is_clamped() {
    let q = LatentGaussian::new(vec![0.0, 0.0], vec![-50.0, 50.0]).unwrap();
    assert_eq!(q.log_var(), &[LOG_VAR_MIN, LOG_VAR_MAX]);
    assert!(LatentGaussian::new(vec![f64::NAN], vec![0.0]).is_err());
    assert!(LatentGaussian::new(vec![0.0], vec![0.0, 1.0]).is_err());
}

#[test]
fn reparameterize_matches_moments() {
    let q = LatentGaussian::new(vec![1.5, -2.0], vec![0.0, 4f64.ln()]).unwrap();
    let mut rng = RngStream::new(11);
    let n = 100_000;
    let mut sum = [0.0; 2];
    let mut sq = [0.0; 2];
    for _ in 0..n {
        let z = reparameterize(&q, &mut rng);
        for d in 0..2 {
            sum[d] += z[d];
            sq[d] += z[d] * z[d];
        }
    }
    let expect_mean = [1.5, -2.0];
    let expect_var = [1.0, 4.0];
    for d in 0..2 {
        let mean = sum[d] / n as f64;
        let var = sq[d] / n as f64 - mean * mean;
        assert!((mean - expect_mean[d]).abs() < 0.03, "mean {mean}");
        assert!((var / expect_var[d] - 1.0).abs() < 0.03, "var {var}");
    }
}

#[test]
fn cvae_loss_gradients() {
    let mut model = tiny_model(1);
    let batch = random_set(4, 2);
    let eps = crate::lifter::cvae::normal_matrix::<f64>(&mut RngStream::new(3), 8, 2);
    let report = grad_check(
        &mut model,
        |m| Ok(cvae_loss_with(m, &batch, &eps, 1.0, &mut RngStream::new(0))?.total),
        1e-4,
        None,
    )
    .unwrap();
    assert!(report.max_rel_error < 1e-4, "{report:?}");
    assert!(report.checked > 100);
}

#[test]
fn gsnn_loss_gradients_reach_decoder_only() {
    let mut model = tiny_model(4);
    let batch = random_set(4, 5);
    let z = crate::lifter::cvae::normal_matrix::<f64>(&mut RngStream::new(6), 8, 2);
    let report = grad_check(
        &mut model,
        |m| gsnn_loss_with(m, &batch, &z, 1.0, &mut RngStream::new(0)),
        1e-4,
        None,
    )
    .unwrap();
    assert!(report.max_rel_error < 1e-4, "{report:?}");

    model.zero_grad();
    gsnn_loss_with(&mut model, &batch, &z, 1.0, &mut RngStream::new(0)).unwrap();
    let mut enc = model.encoder.clone();
    assert!(enc.grad_values().iter().all(|g| *g == 0.0));
    assert!(model.decoder.grad_values().iter().any(|g| *g != 0.0));
}

#[test]
fn hybrid_loss_gradients() {
    for alpha in [0.0, 0.3, 1.0] {
        let mut model = tiny_model(7);
        model.config.alpha = alpha;
        let batch = random_set(4, 8);
        let noise = LossNoise::<f64>::draw(&mut RngStream::new(9), 2, 4, 2);
        let report = grad_check(
            &mut model,
            |m| Ok(hybrid_loss_with(m, &batch, &noise, &mut RngStream::new(0))?.total),
            1e-4,
            None,
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-4, "alpha {alpha}: {report:?}");
    }
}

#[test]
fn hybrid_endpoints_and_affinity() {
    let batch = random_set(6, 10);
    let noise = LossNoise::<f64>::draw(&mut RngStream::new(12), 2, 6, 2);
    let eval = |alpha: f64| {
        let mut m = tiny_model(13);
        m.config.alpha = alpha;
        hybrid_loss_with(&mut m, &batch, &noise, &mut RngStream::new(0)).unwrap()
    };
    let mut m = tiny_model(13);
    let cvae = cvae_loss_with(&mut m, &batch, &noise.posterior, 1.0, &mut RngStream::new(0)).unwrap();
    let gsnn = gsnn_loss_with(&mut m, &batch, &noise.prior, 1.0, &mut RngStream::new(0)).unwrap();

    assert!((eval(1.0).total - cvae.total).abs() < 1e-9);
    assert!((eval(0.0).total - gsnn).abs() < 1e-9);
    let h = eval(0.3);
    assert!((h.total - (0.3 * eval(1.0).total + 0.7 * eval(0.0).total)).abs() < 1e-9);
    assert!((h.total - (0.3 * cvae.total + 0.7 * gsnn)).abs() < 1e-9);
}

#[test]
fn hybrid_gradient_is_affine_in_alpha() {
    let batch = random_set(4, 14);
    let noise = LossNoise::<f64>::draw(&mut RngStream::new(15), 2, 4, 2);
    let grads = |alpha: f64| {
        let mut m = tiny_model(16);
        m.config.alpha = alpha;
        m.zero_grad();
        hybrid_loss_with(&mut m, &batch, &noise, &mut RngStream::new(0)).unwrap();
        m.grad_values()
    };
    let (g0, g1, gh) = (grads(0.0), grads(1.0), grads(0.25));
    for i in 0..g0.len() {
        let expect = 0.25 * g1[i] + 0.75 * g0[i];
        assert!((gh[i] - expect).abs() < 1e-9 * (1.0 + expect.abs()));
    }
}

#[test]
fn zero_loss_at_prior_and_exact_decoder() {
    let mut model = tiny_model(17);
    let target = [1.0, -2.0, 0.5, 3.0, 0.0, -1.0];
    let mut batch = random_set(5, 18);
    for r in 0..5 {
        batch.targets.row_mut(r).copy_from_slice(&target);
    }
    let enc = last_linear(&mut model.encoder);
    enc.weight.data_mut().fill(0.0);
    enc.bias.fill(0.0);
    let dec = last_linear(&mut model.decoder);
    dec.weight.data_mut().fill(0.0);
    dec.bias.copy_from_slice(&target);

    let noise = LossNoise::<f64>::draw(&mut RngStream::new(19), 2, 5, 2);
    let loss = hybrid_loss_with(&mut model, &batch, &noise, &mut RngStream::new(0)).unwrap();
    assert_eq!(loss.cvae.kl, 0.0);
    assert_eq!(loss.cvae.recon, 0.0);
    assert_eq!(loss.gsnn, 0.0);
    assert_eq!(loss.total, 0.0);
}

#[test]
fn one_adam_step_descends() {
    let mut failures = 0;
    for seed in 0..20 {
        let mut config = tiny_config();
        config.dropout = 0.2;
        let mut model =
            CvaeModel::<f64>::new(config, PoseNormalizer::identity(4, 6, 0), &mut RngStream::new(100 + seed)).unwrap();
        let batch = random_set(8, 200 + seed);
        let noise = LossNoise::<f64>::draw(&mut RngStream::new(300 + seed), 2, 8, 2);
        let drop_rng = RngStream::new(400 + seed);

        model.zero_grad();
        let before = hybrid_loss_with(&mut model, &batch, &noise, &mut drop_rng.clone()).unwrap().total;
        let mut adam = Adam::new(AdamConfig {
            learning_rate: 1e-4,
            ..AdamConfig::default()
        });
        adam.step(&mut model);
        model.zero_grad();
        let after = hybrid_loss_with(&mut model, &batch, &noise, &mut drop_rng.clone()).unwrap().total;
        if !(after < before) {
            failures += 1;
        }
    }
    assert_eq!(failures, 0);
}

fn tiny_data(n: usize, seed: u64) -> (Vec<Pose2D>, Vec<Pose3D>) {
    let mut r = RngStream::new(seed);
    let mut p2 = Vec::new();
    let mut p3 = Vec::new();
    for _ in 0..n {
        let a = r.normal();
        let b = r.normal();
        p2.push(Pose2D::new(vec![[a, b], [b, -a]]).unwrap());
        p3.push(
            Pose3D::new(vec![
                [0.0, 0.0, 0.0],
                [a, b, 0.5 * a * b],
                [b, -a, r.normal() * 0.1],
            ])
            .unwrap(),
        );
    }
    (p2, p3)
}

#[test]
fn training_is_deterministic() {
    let (p2, p3) = tiny_data(40, 20);
    let run = || {
        let norm = PoseNormalizer::identity(4, 6, 0);
        let data = TrainingSet::<f32>::build(&norm, &p2, &p3).unwrap();
        let mut config = tiny_config();
        config.dropout = 0.3;
        let root = RngStream::new(21);
        let mut m = CvaeModel::<f32>::new(config, norm, &mut root.derive("init")).unwrap();
        let log = train_cvae(&mut m, &data, &root.derive("train"), |_, _| {}).unwrap();
        (m.param_values(), log)
    };
    let (a, la) = run();
    let (b, lb) = run();
    assert_eq!(la, lb);
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn longer_draws_extend_shorter_ones() {
    let model = CvaeModel::<f32>::new(
        CvaeConfig {
            latent_dim: 4,
            hidden_dim: 32,
            ..tiny_config()
        },
        PoseNormalizer::identity(4, 6, 0),
        &mut RngStream::new(22),
    )
    .unwrap();
    let p2d = Pose2D::new(vec![[0.3, -0.2], [1.0, 0.5]]).unwrap();
    let rng = RngStream::new(23);
    let short = sample_candidates(&model, &p2d, 5, &mut rng.clone()).unwrap();
    let long = sample_candidates(&model, &p2d, 200, &mut rng.clone()).unwrap();
    assert_eq!(short.candidates(), &long.candidates()[..5]);
    assert_eq!(long.prefix(5).unwrap(), short);
    for c in long.candidates() {
        assert_eq!(c.joint(0), [0.0, 0.0, 0.0]);
    }
}

#[test]
fn sample_set_validation() {
    assert!(SampleSet::new(vec![]).is_err());
    let a = Pose3D::zeros(3);
    let b = Pose3D::zeros(4);
    assert!(SampleSet::new(vec![a.clone(), b]).is_err());
    let mut s = SampleSet::new(vec![a.clone(), a]).unwrap();
    assert!(s.set_weights(vec![0.7, 0.7]).is_err());
    assert!(s.set_weights(vec![0.5]).is_err());
    s.set_weights(vec![0.25, 0.75]).unwrap();
    assert!(s.prefix(0).is_err());
    assert!(s.prefix(3).is_err());
}

#[test]
fn gaussian_baseline_sampling_variance() {
    let base = Pose3D::new(vec![[0.0, 0.0, 0.0], [10.0, 20.0, 30.0], [-5.0, 0.0, 5.0]]).unwrap();
    let variance = 25.0;
    let k = 20_000;
    let set = baseline_gaussian_sample(&base, variance, k, 0, &mut RngStream::new(24)).unwrap();
    for j in 0..3 {
        for c in 0..3 {
            let vals: Vec<f64> = set.candidates().iter().map(|p| p.joint(j)[c]).collect();
            let mean = vals.iter().sum::<f64>() / k as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k as f64;
            if j == 0 {
                assert_eq!(var, 0.0);
            } else {
                assert!((var / variance - 1.0).abs() < 0.05, "joint {j} axis {c}: {var}");
                assert!((mean - base.joint(j)[c]).abs() < 0.2);
            }
        }
    }
    assert!(baseline_gaussian_sample(&base, 0.0, 1, 0, &mut RngStream::new(0)).is_err());
    assert!(baseline_gaussian_sample(&base, -1.0, 1, 0, &mut RngStream::new(0)).is_err());
    assert!(baseline_gaussian_sample(&base, 1.0, 0, 0, &mut RngStream::new(0)).is_err());
}

fn baseline_config(epochs: usize) -> CvaeConfig {
    CvaeConfig {
        hidden_dim: 32,
        blocks: 1,
        dropout: 0.0,
        epochs,
        batch_size: 8,
        base_lr: 3e-3,
        decay_rate: 1.0,
        ..CvaeConfig::default()
    }
}

fn row(p: &Pose3D) -> Matrix<f64> {
    Matrix::from_vec(1, 3 * p.num_joints(), p.to_flat()).unwrap()
}

#[test]
fn baseline_fits_a_small_set() {
    let (p2, p3) = tiny_data(32, 25);
    let norm = PoseNormalizer::identity(4, 6, 0);
    let data = TrainingSet::<f32>::build(&norm, &p2, &p3).unwrap();
    let root = RngStream::new(26);
    let mut m = BaselineModel::<f32>::new(baseline_config(300), norm, &mut root.derive("init")).unwrap();
    let log = train_baseline(&mut m, &data, &root.derive("train"), |_, _| {}).unwrap();
    let first = log.epoch_losses[0];
    let preds = m.regress_batch(&p2).unwrap();
    let mse = preds
        .iter()
        .zip(&p3)
        .map(|(a, b)| crate::nn::squared_error(&row(a), &row(b)).unwrap().0)
        .sum::<f64>()
        / p2.len() as f64;
    assert!(mse < 0.05 * first, "{first} -> {mse}");
}

#[test]
fn baseline_regresses_to_the_conditional_mean() {
    let x = [[0.5, -0.5], [1.0, 0.0]];
    let up = Pose3D::new(vec![[0.0; 3], [0.0, 1.0, 2.0], [1.0, 1.0, 1.0]]).unwrap();
    let down = Pose3D::new(vec![[0.0; 3], [0.0, 1.0, -2.0], [1.0, 1.0, -1.0]]).unwrap();
    let mut r = RngStream::new(40);
    let mut jittered = || {
        Pose2D::new(x.iter().map(|p| [p[0] + 0.1 * r.normal(), p[1] + 0.1 * r.normal()]).collect()).unwrap()
    };
    let mut p2 = Vec::new();
    let mut p3 = Vec::new();
    for i in 0..1024 {
        p2.push(jittered());
        p3.push(if i % 2 == 0 { up.clone() } else { down.clone() });
    }
    let norm = PoseNormalizer::identity(4, 6, 0);
    let data = TrainingSet::<f32>::build(&norm, &p2, &p3).unwrap();
    let root = RngStream::new(27);
    let mut config = baseline_config(30);
    config.batch_size = 64;
    let mut m = BaselineModel::<f32>::new(config, norm, &mut root.derive("init")).unwrap();
    train_baseline(&mut m, &data, &root.derive("train"), |_, _| {}).unwrap();
    let probes: Vec<Pose2D> = (0..200).map(|_| jittered()).collect();
    let preds = m.regress_batch(&probes).unwrap();
    let mean = [[0.0; 3], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
    for j in 0..3 {
        for c in 0..3 {
            let avg = preds.iter().map(|p| p.joint(j)[c]).sum::<f64>() / preds.len() as f64;
            assert!((avg - mean[j][c]).abs() < 0.2, "joint {j} axis {c}: {avg}");
        }
    }
}

#[test]
fn checkpoint_round_trip() {
    let (p2, p3) = tiny_data(20, 28);
    let skeleton_free_norm = PoseNormalizer::identity(4, 6, 0);
    let data = TrainingSet::<f32>::build(&skeleton_free_norm, &p2, &p3).unwrap();
    let root = RngStream::new(29);
    let mut m = CvaeModel::<f32>::new(tiny_config(), skeleton_free_norm, &mut root.derive("init")).unwrap();
    train_cvae(&mut m, &data, &root.derive("train"), |_, _| {}).unwrap();

    let bytes = LifterModel::Cvae(m.clone()).to_bytes();
    let loaded = LifterModel::from_bytes(&bytes).unwrap().into_cvae().unwrap();
    assert_eq!(loaded.config, m.config);
    assert_eq!(loaded.norm, m.norm);
    let s1 = sample_candidates(&m, &p2[0], 10, &mut RngStream::new(30)).unwrap();
    let s2 = sample_candidates(&loaded, &p2[0], 10, &mut RngStream::new(30)).unwrap();
    assert_eq!(s1, s2);

    let b = BaselineModel::<f32>::new(tiny_config(), PoseNormalizer::identity(4, 6, 0), &mut RngStream::new(31)).unwrap();
    let loaded = LifterModel::from_bytes(&LifterModel::Baseline(b.clone()).to_bytes()).unwrap();
    assert_eq!(loaded.kind(), "baseline");
    assert!(loaded.clone().into_cvae().is_err());
    let lb = loaded.into_baseline().unwrap();
    assert_eq!(baseline_regress(&lb, &p2[1]).unwrap(), baseline_regress(&b, &p2[1]).unwrap());

    let mut bad = bytes.clone();
    bad.truncate(bytes.len() - 3);
    assert!(LifterModel::from_bytes(&bad).is_err());
}

#[test]
fn batch_shape_errors() {
    let mut model = tiny_model(32);
    let bad = TrainingSet {
        inputs: Matrix::<f64>::zeros(4, 3),
        targets: Matrix::zeros(4, 6),
    };
    assert!(cvae_loss(&mut model, &bad, &mut RngStream::new(0)).is_err());
    let good = random_set(4, 33);
    let wrong_noise = Matrix::<f64>::zeros(7, 2);
    assert!(cvae_loss_with(&mut model, &good, &wrong_noise, 1.0, &mut RngStream::new(0)).is_err());
}
