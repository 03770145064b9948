mod common;

use craft::chzono::CHZonotope;
use craft::model_io::{model_from_json, model_to_json};
use craft::mondeq::{random_monotone_model, tau_slope, MonDeq, Slopes, SolverConfig};
use craft::numerics::pca_basis;
use craft::oracle::member;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_chz, random_matrix, sample_box, sample_point};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn affine_image_contains_mapped_points(seed in any::<u64>(), p in 1usize..6, q in 1usize..6, k in 0usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_chz(&mut rng, p, k);
        let w = random_matrix(&mut rng, q, p, 2.0);
        let c: Vec<f64> = (0..q).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let img = z.affine(&w, &c);
        for _ in 0..10 {
            let x = sample_point(&mut rng, &z);
            let mut y = w.matvec(&x);
            y.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
            prop_assert!(member(&img, &y));
        }
    }

    #[test]
    fn relu_is_sound_for_any_slope(seed in any::<u64>(), p in 1usize..6, k in 1usize..10, explicit in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_chz(&mut rng, p, k);
        let slopes: Option<Vec<f64>> = explicit.then(|| (0..p).map(|_| rng.gen_range(0.0..=1.0)).collect());
        let out = z.relu(slopes.as_deref()).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = sample_point(&mut rng, &z).into_iter().map(|v| v.max(0.0)).collect();
            prop_assert!(member(&out, &x));
        }
    }

    #[test]
    fn consolidation_is_proper_and_sound(seed in any::<u64>(), p in 1usize..8, extra in 0usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_chz(&mut rng, p, p + extra);
        let c = z.consolidate(&pca_basis(z.gens()), 1e-3, 1e-2).unwrap();
        prop_assert!(c.is_proper());
        prop_assert!(c.contains(&z));
        for _ in 0..10 {
            prop_assert!(member(&c, &sample_point(&mut rng, &z)));
        }
    }

    #[test]
    fn containment_is_reflexive_on_proper(seed in any::<u64>(), p in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_chz(&mut rng, p, 2 * p);
        let c = z.consolidate(&pca_basis(z.gens()), 0.0, 0.0).unwrap();
        prop_assert!(c.contains(&c));
    }

    #[test]
    fn tau_slope_stays_in_unit_interval(default in 0.0f64..=1.0, tau in -3.0f64..3.0) {
        let s = tau_slope(default, tau);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(tau_slope(default, 0.0), default);
    }

    #[test]
    fn model_json_round_trip(seed in any::<u64>(), p in 1usize..6, q in 1usize..4, r in 1usize..4) {
        let prm = random_monotone_model(p, q, r, 1.0, seed);
        let text = model_to_json(&prm);
        prop_assert_eq!(model_from_json(&text).unwrap(), prm);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn abstract_steps_cover_concrete_iterates(seed in any::<u64>(), p in 1usize..6, pr in any::<bool>(), tau in -1.0f64..1.0) {
        let model = MonDeq::new(random_monotone_model(p, 2, 2, 2.0, seed)).unwrap();
        let cfg = if pr { SolverConfig::pr(0.5) } else { SolverConfig::fb(model.fb_alpha_max()) };
        let solver = model.solver(&cfg).unwrap();
        let x0 = [0.3, -0.2];
        let radius = [0.1, 0.05];
        let input = CHZonotope::from_box(x0.to_vec(), &radius);
        let z0 = model.fixpoint(&x0, &cfg).unwrap();
        let mut st = solver.point_state(&z0);
        for _ in 0..4 {
            st = solver.abstract_step(&input, &st, &Slopes::Tau(tau)).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..10 {
            let x = sample_box(&mut rng, &x0, &radius);
            let mut s = solver.lift(&z0);
            for _ in 0..4 {
                s = solver.step(&x, &s);
            }
            prop_assert!(member(&st.s, &s));
        }
    }
}
