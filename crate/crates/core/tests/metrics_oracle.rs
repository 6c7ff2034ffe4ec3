use film_core::dataset::Label;
use film_core::metrics::{
    evaluate, pr_auc, roc_auc, threshold_metrics, threshold_metrics_with, ConfusionMatrix, KappaForm,
    ScoredPredictions,
};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = Ratio<i128>;

fn q(n: u64) -> Q {
    Q::from_integer(n as i128)
}

fn div(a: Q, b: Q) -> Q {
    if b == q(0) {
        q(0)
    } else {
        a / b
    }
}

fn f(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

fn sqrt_q(r: Q) -> f64 {
    f(r).sqrt()
}

struct Oracle {
    acc: Q,
    sens: Q,
    spec: Q,
    prec: Q,
    fpr: Q,
    f1: Q,
    kappa: Q,
    bal_acc: Q,
    gmean_sq: Q,
    mcc: f64,
}

fn oracle(tp: u64, tn: u64, fp: u64, fn_: u64) -> Oracle {
    let (tp_, tn_, fp_, fn__) = (q(tp), q(tn), q(fp), q(fn_));
    let n = tp_ + tn_ + fp_ + fn__;
    let sens = div(tp_, tp_ + fn__);
    let spec = div(tn_, tn_ + fp_);
    let acc = div(tp_ + tn_, n);
    let p_e = div((tp_ + fp_) * (tp_ + fn__) + (fn__ + tn_) * (fp_ + tn_), n * n);
    let kappa = div(acc - p_e, q(1) - p_e);
    let mcc_num = tp_ * tn_ - fn__ * fp_;
    let mcc_den2 = (tp_ + fp_) * (tp_ + fn__) * (tn_ + fp_) * (tn_ + fn__);
    let mcc = if mcc_den2 == q(0) {
        0.0
    } else {
        let mag = sqrt_q(mcc_num * mcc_num / mcc_den2);
        if mcc_num < q(0) {
            -mag
        } else {
            mag
        }
    };
    Oracle {
        acc,
        sens,
        spec,
        prec: div(tp_, tp_ + fp_),
        fpr: div(fp_, fp_ + tn_),
        f1: div(q(2) * tp_, q(2) * tp_ + fp_ + fn__),
        kappa,
        bal_acc: (sens + spec) / q(2),
        gmean_sq: sens * spec,
        mcc,
    }
}

#[test]
fn every_confusion_matrix_up_to_thirty_matches_the_rational_oracle() {
    let tol = 1e-12;
    let mut checked = 0;
    for total in 1..=30u64 {
        for tp in 0..=total {
            for tn in 0..=total - tp {
                for fp in 0..=total - tp - tn {
                    let fn_ = total - tp - tn - fp;
                    let cm = ConfusionMatrix::new(tp, tn, fp, fn_);
                    let m = threshold_metrics(&cm);
                    let o = oracle(tp, tn, fp, fn_);
                    let pairs = [
                        ("acc", m.acc, f(o.acc)),
                        ("sens", m.sens, f(o.sens)),
                        ("recall", m.recall, f(o.sens)),
                        ("spec", m.spec, f(o.spec)),
                        ("prec", m.prec, f(o.prec)),
                        ("fpr", m.fpr, f(o.fpr)),
                        ("f1", m.f1, f(o.f1)),
                        ("kappa", m.kappa, f(o.kappa)),
                        ("bal_acc", m.bal_acc, f(o.bal_acc)),
                        ("gmean", m.gmean, sqrt_q(o.gmean_sq)),
                        ("mcc", m.mcc, o.mcc),
                    ];
                    for (name, got, want) in pairs {
                        assert!((got - want).abs() <= tol, "{name} at {cm:?}: {got} vs {want}");
                    }
                    let agreement = threshold_metrics_with(&cm, KappaForm::Agreement);
                    assert!((agreement.kappa - m.kappa).abs() <= tol, "kappa forms at {cm:?}");
                    checked += 1;
                }
            }
        }
    }
    // C(34, 4) - 1 matrices with 1 <= total <= 30
    assert_eq!(checked, 46_375);
}

fn random_scored(rng: &mut ChaCha8Rng) -> ScoredPredictions {
    let n = rng.gen_range(2..=40);
    let levels = rng.gen_range(2..=12);
    let mut labels: Vec<Label> = (0..n)
        .map(|_| if rng.gen_bool(0.4) { Label::Positive } else { Label::Negative })
        .collect();
    labels[0] = Label::Positive;
    labels[1] = Label::Negative;
    let scores = (0..n).map(|_| rng.gen_range(0..levels) as f64 / (levels - 1) as f64).collect();
    ScoredPredictions::new(scores, labels).unwrap()
}

fn auc_by_pairs(sp: &ScoredPredictions) -> f64 {
    let (mut wins2, mut pairs) = (0u64, 0u64);
    for (i, li) in sp.labels.iter().enumerate() {
        for (j, lj) in sp.labels.iter().enumerate() {
            if li.is_positive() && !lj.is_positive() {
                pairs += 1;
                wins2 += match sp.scores[i].partial_cmp(&sp.scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    wins2 as f64 / (2 * pairs) as f64
}

#[test]
fn roc_auc_equals_pair_enumeration_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..500 {
        let sp = random_scored(&mut rng);
        assert_eq!(roc_auc(&sp).unwrap(), auc_by_pairs(&sp));
    }
}

/// Precision-recall area by sweeping every distinct threshold from scratch.
fn pr_auc_brute(sp: &ScoredPredictions) -> f64 {
    let mut thresholds: Vec<f64> = sp.scores.clone();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let pos = sp.labels.iter().filter(|l| l.is_positive()).count() as f64;
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for t in thresholds {
        let (mut tp, mut fp) = (0.0, 0.0);
        for (s, l) in sp.scores.iter().zip(&sp.labels) {
            if *s >= t {
                if l.is_positive() {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
            }
        }
        let recall = tp / pos;
        area += (recall - prev_recall) * tp / (tp + fp);
        prev_recall = recall;
    }
    area
}

#[test]
fn pr_auc_equals_threshold_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..500 {
        let sp = random_scored(&mut rng);
        assert!((pr_auc(&sp).unwrap() - pr_auc_brute(&sp)).abs() < 1e-12);
    }
}

#[test]
fn roc_auc_is_rank_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..100 {
        let sp = random_scored(&mut rng);
        let squashed: Vec<f64> = sp.scores.iter().map(|s| s * s * 0.5).collect();
        let other = ScoredPredictions::new(squashed, sp.labels.clone()).unwrap();
        assert_eq!(roc_auc(&sp).unwrap(), roc_auc(&other).unwrap());
    }
}

#[test]
fn evaluate_flags_missing_class() {
    let sp = ScoredPredictions::new(vec![0.2, 0.9], vec![Label::Negative; 2]).unwrap();
    let m = evaluate(&sp, None).unwrap();
    assert_eq!(m.roc_auc, Some(0.0));
    assert!(m.degenerate.contains(&film_core::metrics::Metric::RocAuc));
    assert!(m.degenerate.contains(&film_core::metrics::Metric::PrAuc));
}
