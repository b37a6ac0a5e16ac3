//! Randomized structural invariants of the path moduli and tail estimators.

use mma::paths::{modulus_w, modulus_wpp, sup_norm, CadlagPath, PathJump};
use mma::tails::hill;
use nalgebra::DVector;
use proptest::prelude::*;

fn arb_path() -> impl Strategy<Value = CadlagPath> {
    let values = prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 2..12);
    let jumps = prop::collection::vec(
        (0.01f64..0.99, prop::collection::vec(-5.0f64..5.0, 2), prop::collection::vec(-5.0f64..5.0, 2)),
        0..6,
    );
    (values, jumps).prop_map(|(values, jumps)| {
        let m = values.len();
        let grid: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let values: Vec<DVector<f64>> =
            values.into_iter().map(DVector::from_vec).collect();
        let mut jumps: Vec<PathJump> = jumps
            .into_iter()
            .map(|(time, left, right)| PathJump {
                time,
                left: DVector::from_vec(left),
                right: DVector::from_vec(right),
            })
            .collect();
        jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
        jumps.dedup_by(|a, b| a.time == b.time);
        CadlagPath { grid, values, jumps }
    })
}

proptest! {
    /// w''(delta) never exceeds the full-window oscillation w.
    #[test]
    fn wpp_bounded_by_full_oscillation(p in arb_path(), delta in 0.0f64..1.5) {
        let w = modulus_w(&p, (0.0, 1.0 + 1e-9));
        prop_assert!(modulus_wpp(&p, delta) <= w + 1e-12);
    }

    /// Both moduli are monotone in their window/gap parameter.
    #[test]
    fn moduli_monotone(p in arb_path(), d1 in 0.0f64..1.0, d2 in 0.0f64..1.0) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(modulus_wpp(&p, lo) <= modulus_wpp(&p, hi) + 1e-12);
        prop_assert!(
            modulus_w(&p, (0.25, 0.25 + lo)) <= modulus_w(&p, (0.25, 0.25 + hi)) + 1e-12
        );
    }

    /// Scaling every sample scales sup-norm and both moduli linearly.
    #[test]
    fn moduli_scale_equivariant(p in arb_path(), c in 0.1f64..10.0) {
        let scaled = CadlagPath {
            grid: p.grid.clone(),
            values: p.values.iter().map(|v| v * c).collect(),
            jumps: p
                .jumps
                .iter()
                .map(|j| PathJump {
                    time: j.time,
                    left: &j.left * c,
                    right: &j.right * c,
                })
                .collect(),
        };
        let tol = 1e-9;
        prop_assert!((sup_norm(&scaled).0 - c * sup_norm(&p).0).abs() <= tol);
        prop_assert!(
            (modulus_w(&scaled, (0.0, 1.0)) - c * modulus_w(&p, (0.0, 1.0))).abs() <= tol
        );
        prop_assert!((modulus_wpp(&scaled, 0.3) - c * modulus_wpp(&p, 0.3)).abs() <= tol);
    }

    /// The Hill estimator is invariant under multiplying the sample by a
    /// positive constant (it only sees log-spacings of order statistics).
    #[test]
    fn hill_scale_invariant(
        seed in 0u64..1000,
        c in prop::sample::select(vec![0.01f64, 0.5, 3.0, 1e4]),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..500)
            .map(|_| rng.gen_range(1e-9f64..1.0).powf(-1.0 / 1.5))
            .collect();
        let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
        let a = hill(&xs, 50).unwrap().alpha_hat;
        let b = hill(&scaled, 50).unwrap().alpha_hat;
        prop_assert!((a - b).abs() <= 1e-9 * a.abs());
    }
}
