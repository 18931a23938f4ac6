use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;
use wedge_rbm::feq::Estimates;
use wedge_rbm::simulate::{simulate_ensemble, SimConfig};
use wedge_rbm::symmetric::{classify, d_algebraic_reflection, kernel_f, scalar_bvp_condition, RemarkableDensity};
use wedge_rbm::ModelParams;

/// Symmetric parameters with `μ < 0` and `μ − rμ > 0`, i.e. `r > 1`.
fn recurrent_symmetric() -> impl Strategy<Value = ModelParams> {
    (0.3f64..2.5, -0.9f64..0.9, 0.2f64..2.5, 1.01f64..8.0)
        .prop_map(|(s, c, m, r)| ModelParams::symmetric(s, c * s, -m, r).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn recurrent_symmetric_is_never_skew_or_dieker_moriarty(pr in recurrent_symmetric()) {
        prop_assert!(pr.is_recurrent());
        let c = classify(&pr).unwrap();
        prop_assert!(!c.skew_symmetric && !c.dieker_moriarty);
    }

    #[test]
    fn density_is_nonnegative_normalized_and_decays(mu in 0.1f64..4.0, beta in 3.2f64..6.2, t in -1.0f64..1.0, r in 0.01f64..20.0) {
        let d = RemarkableDensity::new(mu, beta).unwrap();
        prop_assert!((d.mass_by_quadrature() - 1.0).abs() < 1e-6);
        let t = t * d.half_angle();
        let a = d.density(r, t).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!(d.density(r * 1.1, t).unwrap() < a);
        prop_assert!(d.density(r, d.half_angle() * 1.001).is_err());
    }

    #[test]
    fn kernel_f_is_real_on_the_real_axis(s in 0.3f64..2.5, c in -0.9f64..0.9, m in 0.2f64..2.5, r in 1.01f64..8.0, p in -3.0f64..-0.01) {
        let pr = ModelParams::symmetric(s, c * s, -m, r).unwrap();
        if let Ok((f, q)) = kernel_f(&pr, C64::new(p, 0.0)) {
            prop_assert_eq!(f.im, 0.0);
            prop_assert!(q.im.abs() < 1e-12 * (1.0 + q.norm()));
        }
    }

    #[test]
    fn d_algebraic_reflection_is_classified_as_such(s in 0.3f64..2.5, c in -0.9f64..0.9, k in -5i64..=5, j in -3i64..=3) {
        if let Ok(r) = d_algebraic_reflection(s, c * s, k, j) {
            let pr = ModelParams::symmetric(s, c * s, -1.0, r).unwrap();
            let rep = classify(&pr).unwrap();
            prop_assert!(rep.d_algebraic_condition);
            let (k2, j2) = rep.d_algebraic_multiple.unwrap();
            let lhs = PI / 2.0 + rep.delta;
            prop_assert!((lhs - k2 as f64 * rep.beta_tilde - j2 as f64 * PI).abs() < 1e-9);
        }
    }
}

#[test]
fn scalar_condition_vanishes_at_real_points() {
    let pr = ModelParams::symmetric(1.0, 0.0, -1.0, 2.0).unwrap();
    let cfg = SimConfig {
        horizon: 200.0,
        burn_in: 20.0,
        replicas: 2,
        seed: 21,
        ..SimConfig::default()
    };
    let paths = simulate_ensemble(&pr, &cfg).unwrap();
    let est = Estimates::new(&pr, &paths);
    for p in [-0.08, -0.05, -0.02] {
        let r = scalar_bvp_condition(&pr, &est, C64::new(p, 0.0)).unwrap();
        assert_eq!(r.residual.norm(), 0.0, "{p}");
    }
}
