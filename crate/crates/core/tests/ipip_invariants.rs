use std::collections::BTreeSet;

use film_core::dataset::two_gaussians;
use film_core::ipip::{max_ensemble_models, min_subsets, predict_ipip, train_ipip_traced, IpipConfig};
use film_core::learners::{ForestParams, LearnerSpec, LogisticParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn subset_count_covers_samples_at_confidence() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (alpha, n) in [(0.9, 40), (0.99, 120)] {
        let draws = (0.75 * n as f64).ceil() as usize;
        let b_s = min_subsets(alpha, n, draws);
        let trials = 2000;
        let mut covered = 0usize;
        for _ in 0..trials {
            let mut seen = vec![false; n];
            for _ in 0..b_s * draws {
                seen[rng.gen_range(0..n)] = true;
            }
            covered += seen.iter().filter(|s| **s).count();
        }
        let rate = covered as f64 / (trials * n) as f64;
        let sigma = (alpha * (1.0 - alpha) / trials as f64).sqrt();
        assert!(rate >= alpha - 3.0 * sigma, "alpha {alpha} n {n}: {rate}");
    }
}

#[test]
fn trained_members_respect_bounds_and_trace_to_training_rows() {
    let d = two_gaussians(500, 0.15, 2, 1.2, 3).unwrap();
    let cfg = IpipConfig::default();
    let specs = [
        LearnerSpec::logistic(LogisticParams::default()),
        LearnerSpec::forest(
            ForestParams {
                n_trees: 10,
                max_depth: 4,
                ..Default::default()
            },
            0,
        ),
    ];
    for (s, spec) in specs.iter().enumerate() {
        let (m, trace) = train_ipip_traced(&d, spec, &cfg, 40 + s as u64).unwrap();
        let n_min = trace.holdout_train.n_positive();
        assert_eq!(m.b_s, min_subsets(cfg.alpha, n_min, m.n_min_draw));
        assert_eq!(m.b_e, max_ensemble_models(cfg.alpha, m.n_min_draw));
        assert_eq!(m.ensembles.len(), m.b_s);
        let train_rows: BTreeSet<usize> = trace.holdout_train.origin().iter().map(|o| o.unwrap()).collect();
        for (e, members) in m.ensembles.iter().enumerate() {
            assert!(!members.is_empty() && members.len() <= m.b_e);
            assert!(m.histories[e].windows(2).all(|w| w[1] > w[0]));
            for data in &trace.member_data[e] {
                for (i, o) in data.origin().iter().enumerate() {
                    let src = o.expect("no synthetic rows");
                    assert!(train_rows.contains(&src));
                    assert_eq!(data.row(i), d.row(src));
                    assert_eq!(data.labels()[i], d.labels()[src]);
                }
            }
        }
        let p = predict_ipip(&m, d.features()).unwrap();
        assert_eq!(p.labels.len(), d.len());
        assert!(p.ensemble_votes.iter().all(|&v| v <= m.b_s));
    }
}

#[test]
fn same_seed_same_model_bytes() {
    let d = two_gaussians(300, 0.2, 2, 1.0, 8).unwrap();
    let spec = LearnerSpec::logistic(LogisticParams::default());
    let cfg = IpipConfig::default();
    let a = train_ipip_traced(&d, &spec, &cfg, 5).unwrap().0.to_json().unwrap();
    let b = train_ipip_traced(&d, &spec, &cfg, 5).unwrap().0.to_json().unwrap();
    assert_eq!(a, b);
}
