use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;
use wedge_rbm::kernel::{hyperbola, kernel_uv, BranchFamily, KernelId, Side, Variable};
use wedge_rbm::ModelParams;

/// Elliptic parameters that satisfy the recurrence conditions.
fn recurrent() -> impl Strategy<Value = ModelParams> {
    (0.3f64..2.5, 0.3f64..2.5, -0.9f64..0.9, 0.2f64..2.5, 0.2f64..2.5, 0.05f64..3.0, 0.05f64..3.0).prop_map(
        |(s1, s2, c, a, b, e1, e2)| {
            let rho = c * (s1 * s2).sqrt();
            ModelParams::new([-a, -b], [s1, s2], rho, [a / b + e1, b / a + e2]).unwrap()
        },
    )
}

fn symmetric() -> impl Strategy<Value = ModelParams> {
    (0.3f64..2.5, -0.9f64..0.9, 0.2f64..2.5, -3.0f64..5.0)
        .prop_map(|(s, c, m, r)| ModelParams::symmetric(s, c * s, -m, r).unwrap())
}

fn arg() -> impl Strategy<Value = C64> {
    (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(a, b)| C64::new(a, b))
}

fn scale(p: C64, q: C64) -> f64 {
    1.0 + p.norm_sqr() + q.norm_sqr()
}

proptest! {
    #[test]
    fn theta_positive_and_validation_pure(s1 in 0.01f64..10.0, s2 in 0.01f64..10.0, c in -0.999f64..0.999, m1 in -5.0f64..5.0, m2 in -5.0f64..5.0) {
        let pr = ModelParams::new([m1, m2], [s1, s2], c * (s1 * s2).sqrt(), [1.0, 1.0]).unwrap();
        prop_assert!(pr.theta() > 0.0);
        prop_assert_eq!(pr.validate(), pr.validate());
        prop_assert_eq!(pr.recurrence(), pr.recurrence());
    }

    #[test]
    fn wedge_angles_of_symmetric_params(pr in symmetric()) {
        let w = pr.wedge_angles().unwrap();
        prop_assert!(w.beta > PI && w.beta < 2.0 * PI);
        prop_assert!((w.beta - 2.0 * w.beta_tilde).abs() < 1e-15);
        prop_assert!(w.beta_tilde > PI / 2.0 && w.beta_tilde < PI);
        prop_assert!(w.delta > 0.0 && w.delta < PI);
    }

    #[test]
    fn roots_solve_the_kernel_and_are_ordered(pr in recurrent(), w in arg()) {
        for id in [KernelId::U, KernelId::V] {
            let fam = BranchFamily::new(&pr, id, Variable::POverQ).unwrap();
            if let Ok([p1, p2]) = fam.eval_both(w) {
                for p in [p1, p2] {
                    let k = kernel_uv(&pr, id, p, w).unwrap();
                    prop_assert!(k.norm() < 1e-12 * scale(p, w), "{:?} {}", id, k);
                }
                prop_assert!(p1.re <= p2.re + 1e-12);
            }
            let fam = BranchFamily::new(&pr, id, Variable::QOverP).unwrap();
            if let Ok([q1, q2]) = fam.eval_both(w) {
                for q in [q1, q2] {
                    let k = kernel_uv(&pr, id, w, q).unwrap();
                    prop_assert!(k.norm() < 1e-12 * scale(w, q));
                }
            }
        }
    }

    #[test]
    fn imaginary_axis_separates_the_branches(pr in recurrent(), x in -50.0f64..50.0) {
        for id in [KernelId::U, KernelId::V] {
            let fam = BranchFamily::new(&pr, id, Variable::POverQ).unwrap();
            let [p1, p2] = fam.eval_both(C64::new(0.0, x)).unwrap();
            prop_assert!(p1.re <= 1e-12 && p2.re >= -1e-12, "{:?} {} {}", id, p1, p2);
        }
    }

    #[test]
    fn cut_images_lie_on_the_hyperbolas(pr in recurrent()) {
        for id in [KernelId::U, KernelId::V] {
            let fam = BranchFamily::new(&pr, id, Variable::POverQ).unwrap();
            let h = hyperbola(&pr, id, Variable::POverQ).unwrap();
            for w in fam.cut_samples(200, 30.0) {
                for i in [1, 2] {
                    for side in [Side::Above, Side::Below] {
                        let p = fam.eval_cut(i, w, side).unwrap();
                        prop_assert!(h.eval(p).abs() < 1e-10 * (1.0 + p.norm_sqr()));
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_kernel_reduction(pr in symmetric(), p in arg(), q in arg()) {
        prop_assert!((pr.theta() - (pr.sigma[0] - pr.rho)).abs() < 1e-15);
        let u = kernel_uv(&pr, KernelId::U, p, q).unwrap();
        let s = kernel_uv(&pr, KernelId::Sym, p, q).unwrap();
        prop_assert!((u - s).norm() < 1e-14 * scale(p, q));
    }

    #[test]
    fn symmetric_branch_points_closed_form(pr in symmetric()) {
        let (s, rho, m) = (pr.sigma[0], pr.rho, pr.mu[0]);
        // discriminant in p of the symmetric kernel is (s−ρ) q (−(s+ρ) q − 4m)
        let fam = BranchFamily::new(&pr, KernelId::Sym, Variable::POverQ).unwrap();
        let (a, b) = (0.0f64, -4.0 * m / (s + rho));
        prop_assert!((fam.bp_low - a.min(b)).abs() < 1e-12);
        prop_assert!((fam.bp_high - a.max(b)).abs() < 1e-12 * (1.0 + b.abs()));
        // discriminant in q: ((s−ρ)p + m)² = 2s(s−ρ)p²
        let fam = BranchFamily::new(&pr, KernelId::Sym, Variable::QOverP).unwrap();
        let r = (2.0 * s * (s - rho)).sqrt();
        let (a, b) = (-m / (s - rho - r), -m / (s - rho + r));
        prop_assert!((fam.bp_low - a.min(b)).abs() < 1e-12 * (1.0 + a.abs()));
        prop_assert!((fam.bp_high - a.max(b)).abs() < 1e-12 * (1.0 + b.abs()));
        let u = BranchFamily::new(&pr, KernelId::U, Variable::POverQ).unwrap();
        prop_assert!((u.bp_low - fam_p_low(&pr)).abs() < 1e-12 * (1.0 + u.bp_low.abs()));
    }
}

fn fam_p_low(pr: &ModelParams) -> f64 {
    BranchFamily::new(pr, KernelId::Sym, Variable::POverQ).unwrap().bp_low
}

#[test]
fn ten_thousand_grid_points_solve_the_kernel() {
    let pr = ModelParams::default();
    let mut worst = 0.0f64;
    for id in [KernelId::U, KernelId::V] {
        let fam = BranchFamily::new(&pr, id, Variable::POverQ).unwrap();
        for i in 0..100 {
            for j in 0..100 {
                let w = C64::new(-5.0 + 10.0 * (i as f64 + 0.37) / 100.0, -5.0 + 10.0 * (j as f64 + 0.61) / 100.0);
                let [p1, p2] = fam.eval_both(w).unwrap();
                assert!(p1.re <= p2.re);
                for p in [p1, p2] {
                    worst = worst.max(kernel_uv(&pr, id, p, w).unwrap().norm() / scale(p, w));
                }
            }
        }
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn branches_are_continuous_off_the_cut() {
    let pr = ModelParams::default();
    let h = 1e-4;
    for id in [KernelId::U, KernelId::V] {
        let fam = BranchFamily::new(&pr, id, Variable::POverQ).unwrap();
        for k in 0..10 {
            // segments in the upper half plane, away from the real cut
            let t = k as f64;
            let a = C64::new(-4.0 + 0.7 * t, 0.2 + 0.3 * t);
            let b = C64::new(3.0 - 0.5 * t, 0.4 + 0.25 * (t * 1.3).sin().abs());
            let n = ((b - a).norm() / h).ceil() as usize;
            let mut prev = fam.eval_both(a).unwrap();
            for s in 1..=n {
                let w = a + (b - a) * (s as f64 / n as f64);
                let cur = fam.eval_both(w).unwrap();
                let step = (b - a).norm() / n as f64;
                for i in 0..2 {
                    assert!((cur[i] - prev[i]).norm() < 50.0 * step, "{id:?} segment {k} at {w}");
                }
                prev = cur;
            }
        }
    }
}
