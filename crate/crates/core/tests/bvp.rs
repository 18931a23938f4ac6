use num_complex::Complex64 as C64;
use proptest::prelude::*;
use wedge_rbm::bvp::{cut_end, delta_forms, g_matrix, nystrom_solve_at, DiskMap};
use wedge_rbm::feq::{check_feq_s1, check_feq_s2, check_feq_sum, sum_check_points, Estimates};
use wedge_rbm::kernel::{BranchFamily, KernelId, Side, Variable};
use wedge_rbm::simulate::{simulate_ensemble, SimConfig};
use wedge_rbm::symmetric::{analytic_bar_residual, search_remarkable_r};
use wedge_rbm::ModelParams;

fn recurrent() -> impl Strategy<Value = ModelParams> {
    (0.3f64..2.5, 0.3f64..2.5, -0.9f64..0.9, 0.2f64..2.5, 0.2f64..2.5, 0.05f64..3.0, 0.05f64..3.0).prop_map(
        |(s1, s2, c, a, b, e1, e2)| {
            let rho = c * (s1 * s2).sqrt();
            ModelParams::new([-a, -b], [s1, s2], rho, [a / b + e1, b / a + e2]).unwrap()
        },
    )
}

fn alt() -> ModelParams {
    ModelParams::new([-1.0, -2.0], [1.5, 0.5], 0.6, [4.0, 3.0]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jump_matrix_is_unimodular(pr in recurrent(), d in 0.001f64..40.0) {
        let q = cut_end(&pr).unwrap() - d;
        let g = g_matrix(&pr, q).unwrap();
        prop_assert!((g.det().norm() - 1.0).abs() < 1e-10);
        prop_assert!((g.det() - g.det_closed_form()).norm() < 1e-10);
        let (d1, d2) = delta_forms(&pr, q).unwrap();
        prop_assert!((d1 - d2).norm() < 1e-10 * (1.0 + d1.norm()));
    }

    #[test]
    fn disk_map_sends_the_boundary_to_the_circle(pr in recurrent(), d in 0.001f64..30.0, x in -3.0f64..3.0, y in 0.0f64..3.0) {
        for id in [KernelId::U, KernelId::V] {
            let m = DiskMap::new(&pr, id).unwrap();
            let fam = BranchFamily::new(&pr, id, Variable::POverQ).unwrap();
            for side in [Side::Above, Side::Below] {
                let p = fam.eval_cut(1, fam.bp_low - d, side).unwrap();
                prop_assert!((m.to_disk(p).unwrap().norm() - 1.0).abs() < 1e-8);
            }
            prop_assert!(m.to_disk(C64::new(m.focus(), 0.0)).unwrap().norm() < 1e-12);
            let p = C64::new(m.focus() + x, y);
            if let Ok(z) = m.to_disk(p) {
                prop_assert!(z.norm() <= 1.0 + 1e-9);
                prop_assert!((m.to_disk(p.conj()).unwrap() - z.conj()).norm() < 1e-12);
                if z.norm() < 0.999 {
                    prop_assert!((m.from_disk(z).unwrap() - p).norm() < 1e-7 * (1.0 + p.norm()));
                }
            }
        }
    }

    #[test]
    fn remarkable_reflection_satisfies_the_adjoint_relation(s in 0.3f64..3.0, c in -0.8f64..0.8, m in 0.2f64..3.0) {
        let found = search_remarkable_r(s, c * s, -m).unwrap();
        prop_assert!((found.r - found.r_closed_form).abs() < 1e-6 * (1.0 + found.r.abs()));
        let pr = ModelParams::symmetric(s, c * s, -m, found.r_closed_form).unwrap();
        prop_assert!(analytic_bar_residual(&pr).unwrap() <= 1e-6);
    }
}

#[test]
fn nystrom_residual_falls_under_refinement() {
    let configs = [
        (ModelParams::default(), [C64::new(0.7, 0.0), C64::new(0.4, 0.0)]),
        (alt(), [C64::new(0.5, 0.0), C64::new(0.6, 0.0)]),
        (ModelParams::symmetric(1.0, 0.0, -1.0, 2.0).unwrap(), [C64::new(0.5, 0.0), C64::new(0.5, 0.0)]),
        (ModelParams::new([-1.5, -1.0], [2.0, 1.0], -0.4, [2.0, 1.5]).unwrap(), [C64::new(0.3, 0.0), C64::new(0.8, 0.0)]),
    ];
    for (pr, inf) in configs {
        let r: Vec<f64> = [32, 64, 128].iter().map(|&n| nystrom_solve_at(&pr, n, inf).unwrap().residual).collect();
        assert!(r[1] < r[0] && r[2] < r[1], "{pr:?}: {r:?}");
    }
}

#[test]
fn the_two_region_equations_add_up_to_the_sum() {
    let pr = ModelParams::default();
    let cfg = SimConfig {
        horizon: 300.0,
        burn_in: 20.0,
        replicas: 2,
        seed: 11,
        ..SimConfig::default()
    };
    let paths = simulate_ensemble(&pr, &cfg).unwrap();
    let est = Estimates::new(&pr, &paths);
    for (x, y) in sum_check_points(10, 4, 2.0) {
        let s1 = check_feq_s1(&pr, &est, x, y).unwrap().residual;
        let s2 = check_feq_s2(&pr, &est, x, y).unwrap().residual;
        let sum = check_feq_sum(&pr, &est, x, y).unwrap().residual;
        assert!((s1 + s2 - sum).norm() < 1e-12 * (1.0 + s1.norm() + s2.norm()), "{x} {y}");
    }
}
