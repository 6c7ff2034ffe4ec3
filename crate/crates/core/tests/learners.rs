use film_core::dataset::{two_gaussians, Dataset, FeatureMatrix, Label};
use film_core::learners::logistic::{log_loss, log_loss_gradient};
use film_core::learners::{train, Classifier, ForestParams, LearnerSpec, LogisticParams, ModelState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.gen_range(5..40);
        let p = rng.gen_range(1..5);
        let data: Vec<f64> = (0..n * p).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let x = FeatureMatrix::new(data, p).unwrap();
        let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.gen_bool(0.3)))).collect();
        let beta: Vec<f64> = (0..=p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l2 = rng.gen_range(0.0..0.5);
        let g = log_loss_gradient(&beta, &x, &y, l2);
        for j in 0..=p {
            let h = 1e-5;
            let mut up = beta.clone();
            let mut down = beta.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (log_loss(&up, &x, &y, l2) - log_loss(&down, &x, &y, l2)) / (2.0 * h);
            let rel = (fd - g[j]).abs() / g[j].abs().max(1.0);
            assert!(rel < 1e-6, "coordinate {j}: {fd} vs {}", g[j]);
        }
    }
}

fn separable_blobs(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..300 {
        let positive = i < 60;
        let centre = if positive { 4.0 } else { -4.0 };
        rows.push(vec![centre + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        labels.push(if positive { Label::Positive } else { Label::Negative });
    }
    Dataset::from_rows(&rows, labels).unwrap()
}

fn train_accuracy(spec: &LearnerSpec, d: &Dataset) -> f64 {
    let m = train(spec, d).unwrap();
    let pred = m.predict(d.features()).unwrap();
    pred.iter().zip(d.labels()).filter(|(a, b)| a == b).count() as f64 / d.len() as f64
}

#[test]
fn both_learners_fit_separable_blobs() {
    let d = separable_blobs(1);
    let logistic = LearnerSpec::logistic(LogisticParams {
        l2_penalty: 1e-3,
        ..Default::default()
    });
    assert!(train_accuracy(&logistic, &d) >= 0.99);
    let forest = LearnerSpec::forest(
        ForestParams {
            n_trees: 25,
            ..Default::default()
        },
        3,
    );
    assert!(train_accuracy(&forest, &d) >= 0.99);
}

fn forest_of(n_trees: usize, seed: u64, d: &Dataset) -> Vec<film_core::learners::forest::Node> {
    let spec = LearnerSpec::forest(
        ForestParams {
            n_trees,
            max_depth: 5,
            ..Default::default()
        },
        seed,
    );
    match train(&spec, d).unwrap().state {
        ModelState::RandomForest(f) => f.trees,
        ModelState::Logistic(_) => unreachable!(),
    }
}

#[test]
fn forest_is_deterministic_and_extends_by_prefix() {
    let d = two_gaussians(400, 0.2, 3, 1.0, 11).unwrap();
    let a = forest_of(12, 7, &d);
    assert_eq!(a, forest_of(12, 7, &d));
    assert_eq!(&forest_of(20, 7, &d)[..12], &a[..]);
    assert_ne!(forest_of(12, 8, &d), a);
}

#[test]
fn logistic_recovers_the_generating_direction() {
    let d = two_gaussians(2000, 0.3, 2, 2.0, 4).unwrap();
    let m = train(&LearnerSpec::logistic(LogisticParams::default()), &d).unwrap();
    let ModelState::Logistic(l) = &m.state else { unreachable!() };
    let scores: Vec<f64> = d.features().rows().map(|r| l.linear_score(r)).collect();
    let mean = |pos: bool| {
        let v: Vec<f64> = scores
            .iter()
            .zip(d.labels())
            .filter(|(_, lab)| lab.is_positive() == pos)
            .map(|(s, _)| *s)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(true) > mean(false) + 2.0);
}
