use muboost_core::ensemble::EnsembleSpec;
use muboost_core::gbdt::{grad_hess, logloss, train, StopReason};
use muboost_core::model_io::to_bytes;
use muboost_core::synth::{generate_corpus, SynthConfig};
use muboost_core::{split_train_dev, train_ensemble, FeatureMatrix, GbdtParams, PipelineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn separable(n: usize, seed: u64) -> (FeatureMatrix, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let labels = rows.iter().map(|r| u8::from(r[0] > 0.0)).collect();
    (FeatureMatrix::from_numeric_rows(&rows).unwrap(), labels)
}

#[test]
fn separable_set_reaches_perfect_train_f1() {
    let (m, y) = separable(200, 1);
    let params = GbdtParams {
        iterations: 100,
        depth: 2,
        learning_rate: 0.3,
        ..GbdtParams::desk()
    };
    let (_, log) = train(&m, &y, None, &params).unwrap();
    assert_eq!(log.entries.last().unwrap().train_f1, 1.0);
}

#[test]
fn train_loss_never_increases() {
    for seed in 0..5 {
        let (m, mut y) = separable(300, seed);
        // Label noise so the loss cannot reach zero.
        for i in (0..y.len()).step_by(7) {
            y[i] ^= 1;
        }
        let (_, log) = train(
            &m,
            &y,
            None,
            &GbdtParams {
                iterations: 150,
                ..GbdtParams::desk()
            },
        )
        .unwrap();
        let mut prev = log.initial_logloss;
        for e in &log.entries {
            assert!(e.train_logloss <= prev + 1e-9, "iteration {}", e.iteration);
            prev = e.train_logloss;
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    for _ in 0..50 {
        let z: f64 = rng.random_range(-8.0..8.0);
        let y = u8::from(rng.random_bool(0.5));
        let (g, hess) = grad_hess(z, y);
        let fd_g = (logloss(z + h, y) - logloss(z - h, y)) / (2.0 * h);
        let fd_h = (grad_hess(z + h, y).0 - grad_hess(z - h, y).0) / (2.0 * h);
        assert!((g - fd_g).abs() <= 1e-6, "g at {z}");
        assert!((hess - fd_h).abs() <= 1e-6, "h at {z}");
    }
}

#[test]
fn dev_set_triggers_early_stop() {
    let (m, y) = separable(200, 2);
    let (dm, dy) = separable(50, 3);
    let params = GbdtParams {
        iterations: 2000,
        od_wait: 10,
        ..GbdtParams::desk()
    };
    let (model, log) = train(&m, &y, Some((&dm, &dy)), &params).unwrap();
    assert_eq!(log.stop, StopReason::OverfittingDetector);
    assert_eq!(log.entries.len(), model.best_iteration + 1 + 10);
    assert_eq!(model.used_trees(), model.best_iteration + 1);
}

#[test]
fn thread_count_does_not_change_the_model() {
    let data = generate_corpus(&SynthConfig {
        rows: 1200,
        posts: 50,
        ..Default::default()
    })
    .unwrap();
    let (tr, dev) = split_train_dev(&data, 0.1, 4).unwrap();
    let spec = EnsembleSpec {
        member_seeds: vec![5, 6],
        params: GbdtParams {
            iterations: 30,
            depth: 5,
            ..GbdtParams::desk()
        },
        pipeline: PipelineConfig::default(),
        parallel_members: true,
    };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| to_bytes(&train_ensemble(&tr, &dev, &spec).unwrap().0))
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}
