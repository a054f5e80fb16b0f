//! Randomised invariants for the Super Learner, targeting step and
//! sensitivity curves. Case counts are small since every case fits models.

use nalgebra::DMatrix;
use proptest::prelude::*;

use causal_pipeline::estimation::{
    LearnerSpec, SuperLearnerSpec, Task, TmleConfig, clever_covariates, clip_propensities, sl_fit, tmle_estimate,
};
use causal_pipeline::identification::{EstimandSpec, Provenance};
use causal_pipeline::scm::ScmSpec;
use causal_pipeline::sensitivity::{Crossing, curve, sensitivity_curve};

const BINARY: &str = "C = gaussian(1.0)
W = uniform(0, 1)
T = logistic(C:1.0, intercept:0) + none
Y = logistic(T:1.0, C:1.0, W:0.5, intercept:-0.5) + none
";

const THREE_ARM: &str = "C = gaussian(1.0)
T = threshold(C:0.8 | -0.5, 0.5) + gaussian(1.0)
Y = linear(T:0.7, C:1.0, intercept:0) + gaussian(1.0)
";

fn cheap() -> TmleConfig {
    TmleConfig {
        outcome_learners: vec![LearnerSpec::InterceptOnly, LearnerSpec::LogisticRidge(0.01), LearnerSpec::Knn(15)],
        propensity_learners: vec![LearnerSpec::InterceptOnly, LearnerSpec::LogisticRidge(0.01)],
        k_folds: 3,
        ..TmleConfig::default()
    }
}

fn estimand(contrasts: &[(f64, f64)], confounders: &[&str]) -> EstimandSpec {
    EstimandSpec {
        treatment: "T".into(),
        outcome: "Y".into(),
        contrasts: contrasts.to_vec(),
        confounders: confounders.iter().map(|s| s.to_string()).collect(),
        precision: vec![],
        provenance: Provenance::UserFixed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn super_learner_weights_live_on_the_simplex(seed in any::<u64>(), classify in any::<bool>()) {
        let ds = ScmSpec::parse(BINARY).unwrap().sample(150, seed).unwrap();
        let (target, task, library) = if classify {
            ("T", Task::Classification, vec![LearnerSpec::InterceptOnly, LearnerSpec::LogisticRidge(0.01), LearnerSpec::Knn(10)])
        } else {
            ("Y", Task::Regression, vec![LearnerSpec::InterceptOnly, LearnerSpec::LinearRidge(1.0), LearnerSpec::Knn(10)])
        };
        let features = if classify { vec!["C", "W"] } else { vec!["T", "C", "W"] };
        let spec = SuperLearnerSpec::new(library, task).with_folds(4).with_seed(seed);
        let fit = sl_fit(&ds, target, &features, &[], &spec).unwrap();
        let w = fit.weights();
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let pred = fit.predict(&ds).unwrap();
        for r in 0..pred.nrows() {
            if classify {
                prop_assert!((pred.row(r).sum() - 1.0).abs() < 1e-9);
            }
            prop_assert!(pred.row(r).iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn targeted_result_invariants(seed in any::<u64>()) {
        let ds = ScmSpec::parse(BINARY).unwrap().sample(300, seed).unwrap();
        let spec = estimand(&[(1.0, 0.0), (0.0, 1.0)], &["C", "W"]);
        let r = tmle_estimate(&ds, &spec, &cheap(), seed).unwrap();
        for c in &r.contrasts {
            let mean = c.influence.iter().sum::<f64>() / c.influence.len() as f64;
            prop_assert!(mean.abs() < 1e-8, "IF mean {}", mean);
            prop_assert!(c.se >= 0.0);
            prop_assert!((0.0..=1.0).contains(&c.p_value));
            prop_assert!((c.ci_lo - (c.psi_targeted - 1.96 * c.se)).abs() < 1e-12);
            prop_assert!((c.ci_hi - (c.psi_targeted + 1.96 * c.se)).abs() < 1e-12);
        }
        let (a, b) = (&r.contrasts[0], &r.contrasts[1]);
        prop_assert!((a.psi_targeted + b.psi_targeted).abs() < 1e-10);
        let again = tmle_estimate(&ds, &spec, &cheap(), seed).unwrap();
        prop_assert_eq!(format!("{r:?}"), format!("{again:?}"));
    }

    #[test]
    fn clipped_binary_propensities_bound_the_clever_covariate(raw in proptest::collection::vec(0.0f64..=1.0, 1..60), t in proptest::collection::vec(any::<bool>(), 60)) {
        let n = raw.len();
        let m = DMatrix::from_fn(n, 2, |i, j| if j == 1 { raw[i] } else { 1.0 - raw[i] });
        let (g, _) = clip_propensities(&m, 0.025, 0.975);
        prop_assert!(g.iter().all(|&p| (0.025 - 1e-12..=0.975 + 1e-12).contains(&p)));
        let treat: Vec<f64> = t[..n].iter().map(|&b| b as u8 as f64).collect();
        let g1: Vec<f64> = g.column(1).iter().copied().collect();
        let g0: Vec<f64> = g.column(0).iter().copied().collect();
        let h = clever_covariates(&treat, &g1, &g0, 1.0, 0.0);
        prop_assert!(h.h.iter().all(|v| v.abs() <= 40.0 + 1e-9));
    }

    #[test]
    fn sensitivity_curve_is_monotone(psi in -1.0f64..1.0, se in 0.0f64..0.3, unadj in -1.0f64..1.0) {
        let ms = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];
        let c = curve("1-0", psi, se, unadj, &ms);
        for w in c.rows.windows(2) {
            prop_assert!(w[1].lo <= w[0].lo && w[1].hi >= w[0].hi);
            prop_assert!(w[1].ci_lo <= w[0].ci_lo && w[1].ci_hi >= w[0].ci_hi);
        }
        for r in &c.rows {
            prop_assert!(((r.hi - r.lo) - 2.0 * r.m * c.delta).abs() < 1e-12);
            prop_assert!(((r.lo + r.hi) / 2.0 - psi).abs() < 1e-12);
        }
        if psi.abs() <= 1.96 * se {
            prop_assert_eq!(c.crossing, Crossing::NonSignificantAtBaseline);
        }
    }
}

#[test]
fn sensitivity_delta_ignores_contrast_order() {
    let ds = ScmSpec::parse(THREE_ARM).unwrap().sample(600, 21).unwrap();
    let forward = estimand(&[(1.0, 0.0), (2.0, 0.0)], &["C"]);
    let backward = estimand(&[(2.0, 0.0), (1.0, 0.0)], &["C"]);
    let ms = [0.0, 1.0, 2.0];
    let (_, _, a) = sensitivity_curve(&ds, &forward, &cheap(), &ms, false, 4).unwrap();
    let (_, _, b) = sensitivity_curve(&ds, &backward, &cheap(), &ms, false, 4).unwrap();
    for c in &a {
        let d = b.iter().find(|x| x.contrast == c.contrast).unwrap();
        assert!((c.delta - d.delta).abs() < 1e-10, "{}: {} vs {}", c.contrast, c.delta, d.delta);
    }
}

#[test]
fn standard_error_shrinks_with_sample_size() {
    let scm = ScmSpec::parse(BINARY).unwrap();
    let cfg = TmleConfig {
        outcome_learners: vec![LearnerSpec::InterceptOnly, LearnerSpec::LogisticRidge(0.01)],
        propensity_learners: vec![LearnerSpec::LogisticRidge(0.01)],
        k_folds: 3,
        ..TmleConfig::default()
    };
    let spec = estimand(&[(1.0, 0.0)], &["C", "W"]);
    let reps = 50;
    let mut ratio = 0.0;
    for rep in 0..reps {
        let small = tmle_estimate(&scm.sample(250, rep).unwrap(), &spec, &cfg, rep).unwrap().contrasts[0].se;
        let large = tmle_estimate(&scm.sample(1000, 10_000 + rep).unwrap(), &spec, &cfg, rep).unwrap().contrasts[0].se;
        ratio += large / small;
    }
    let ratio = ratio / reps as f64;
    assert!((0.4..=0.6).contains(&ratio), "SE(4N)/SE(N) = {ratio}");
}
