use num_complex::Complex64 as C64;
use proptest::prelude::*;
use wedge_rbm::estimate::{estimate_ell, estimate_l, EstimatorConfig, LRegion};
use wedge_rbm::model::in_state_space;
use wedge_rbm::simulate::{simulate_ensemble, simulate_path, transform_hat, transform_tilde, LtEvent, PathKind, PathRecord, SimConfig};
use wedge_rbm::ModelParams;

fn short(seed: u64, horizon: f64, replicas: usize) -> SimConfig {
    SimConfig {
        horizon,
        burn_in: 10.0,
        seed,
        replicas,
        ..SimConfig::default()
    }
}

fn sym() -> ModelParams {
    ModelParams::symmetric(1.0, 0.0, -1.0, 2.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn states_stay_in_the_state_space(seed in any::<u64>(), a in 0.3f64..2.0, b in 0.3f64..2.0, c in -0.8f64..0.8) {
        let pr = ModelParams::new([-a, -b], [1.0, 1.5], c * 1.5f64.sqrt(), [a / b + 0.5, b / a + 0.5]).unwrap();
        let path = simulate_path(&pr, &short(seed, 40.0, 1), 0).unwrap();
        prop_assert!(path.states.iter().all(|&z| in_state_space(z)));
        let hat = transform_hat(&path);
        prop_assert!(hat.states.iter().all(|&z| z[0] <= z[1] && z[1] >= 0.0));
        let tilde = transform_tilde(&hat);
        prop_assert!(tilde.states.iter().all(|&z| z[0] >= 0.0 && z[1] >= 0.0));
    }

    #[test]
    fn local_times_increase_only_on_their_faces(seed in any::<u64>()) {
        let path = simulate_path(&ModelParams::default(), &short(seed, 40.0, 1), 0).unwrap();
        prop_assert!(!path.events.is_empty());
        let mut total = [0.0; 2];
        for e in &path.events {
            prop_assert!(e.dl[0] >= 0.0 && e.dl[1] >= 0.0);
            if e.dl[0] > 0.0 {
                prop_assert!(e.z[1] == 0.0 && e.z[0] <= 0.0, "face 1 event at {:?}", e.z);
            }
            if e.dl[1] > 0.0 {
                prop_assert!(e.z[0] == 0.0 && e.z[1] <= 0.0, "face 2 event at {:?}", e.z);
            }
            total[0] += e.dl[0];
            total[1] += e.dl[1];
        }
        prop_assert!((total[0] - path.lt_total[0]).abs() < 1e-9 && (total[1] - path.lt_total[1]).abs() < 1e-9);
        prop_assert!(path.events.windows(2).all(|w| w[0].step < w[1].step));
    }

    #[test]
    fn paths_are_a_function_of_the_seed(seed in any::<u64>()) {
        let cfg = short(seed, 15.0, 2);
        let a = simulate_ensemble(&ModelParams::default(), &cfg).unwrap();
        let b = simulate_ensemble(&ModelParams::default(), &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_ne!(&a[0].states, &a[1].states);
        let c = simulate_ensemble(&ModelParams::default(), &SimConfig { seed: seed.wrapping_add(1), ..cfg }).unwrap();
        prop_assert_ne!(&a[0].states, &c[0].states);
    }
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// States spaced well beyond the mixing time, so the samples are close to
/// independent.
fn thinned(path: &PathRecord, every: f64) -> Vec<[f64; 2]> {
    let k = (every / path.record_dt()).round() as usize;
    path.stationary_states().step_by(k).map(|(_, z)| z).collect()
}

#[test]
fn symmetric_marginals_agree() {
    let cfg = SimConfig {
        horizon: 4000.0,
        burn_in: 20.0,
        replicas: 4,
        seed: 99,
        ..SimConfig::default()
    };
    let paths = simulate_ensemble(&sym(), &cfg).unwrap();
    // first coordinate from two replicas, second from the other two
    let a: Vec<f64> = paths[..2].iter().flat_map(|p| thinned(p, 4.0)).map(|z| z[0]).collect();
    let b: Vec<f64> = paths[2..].iter().flat_map(|p| thinned(p, 4.0)).map(|z| z[1]).collect();
    let (n, m) = (a.len() as f64, b.len() as f64);
    let crit = 1.628 * ((n + m) / (n * m)).sqrt();
    let d = ks(a, b);
    assert!(d < crit, "KS {d} vs {crit}");
}

#[test]
fn folded_occupation_is_twice_the_original() {
    let cfg = SimConfig {
        horizon: 1500.0,
        burn_in: 20.0,
        replicas: 8,
        seed: 5,
        ..SimConfig::default()
    };
    let paths = simulate_ensemble(&sym(), &cfg).unwrap();
    let inside = |z: [f64; 2]| (-1.0..0.5).contains(&z[0]) && (0.6..2.0).contains(&z[1]);
    let occ = |p: &PathRecord| {
        let v: Vec<bool> = p.stationary_states().map(|(_, z)| inside(z)).collect();
        v.iter().filter(|b| **b).count() as f64 / v.len() as f64
    };
    let d: Vec<f64> = paths.iter().map(|p| occ(p) - 0.5 * occ(&transform_hat(p))).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let se = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let level = paths.iter().map(occ).sum::<f64>() / n;
    assert!(level > 0.01, "box too rarely visited: {level}");
    assert!(mean.abs() <= 3.0 * se, "{mean} ± {se}");
    assert_eq!(transform_hat(&paths[0]).kind, PathKind::Folded);
}

#[test]
fn standard_error_shrinks_with_horizon() {
    let pr = ModelParams::default();
    let se = |horizon: f64| {
        let paths = simulate_ensemble(&pr, &short(17, horizon, 2)).unwrap();
        let cfg = EstimatorConfig::for_paths(&paths);
        estimate_ell(&paths, &cfg, 1, C64::new(0.3, 0.5)).unwrap().se_norm()
    };
    let ratio = se(1600.0) / se(800.0);
    assert!((0.55..=0.9).contains(&ratio), "{ratio}");
}

#[test]
fn region_transforms_partition_the_whole() {
    let pr = ModelParams::default();
    let paths = simulate_ensemble(&pr, &short(3, 400.0, 2)).unwrap();
    let cfg = EstimatorConfig::for_paths(&paths);
    for k in 0..20 {
        let t = k as f64;
        let (x, y) = (C64::new(0.0, (1.7 * t).sin() * 2.0), C64::new(0.0, (0.9 * t).cos() * 2.0));
        let l1 = estimate_l(&paths, &cfg, LRegion::S1, x, y).unwrap();
        let l2 = estimate_l(&paths, &cfg, LRegion::S2, x, y).unwrap();
        let ls = estimate_l(&paths, &cfg, LRegion::Whole, x, y).unwrap();
        let se = (l1.se_norm().powi(2) + l2.se_norm().powi(2) + ls.se_norm().powi(2)).sqrt();
        assert!((l1.value + l2.value - ls.value).norm() <= 3.0 * se + 1e-12);
    }
    assert!((estimate_l(&paths, &cfg, LRegion::Whole, C64::new(0.0, 0.0), C64::new(0.0, 0.0)).unwrap().value - 1.0).norm() < 1e-12);
}

#[test]
fn boundary_transform_sees_only_its_own_face() {
    let mut path = simulate_path(&ModelParams::default(), &short(8, 20.0, 1), 0).unwrap();
    path.events = vec![
        LtEvent {
            step: path.burn_in_steps + 5,
            z: [0.0, -1.0],
            dl: [0.0, 0.3],
        },
        LtEvent {
            step: path.burn_in_steps + 9,
            z: [0.0, -0.2],
            dl: [0.0, 0.1],
        },
    ];
    let paths = vec![path];
    let cfg = EstimatorConfig {
        n_batches: 1,
        ..EstimatorConfig::for_paths(&paths)
    };
    assert_eq!(estimate_ell(&paths, &cfg, 1, C64::new(0.4, 0.2)).unwrap().value, C64::new(0.0, 0.0));
    assert!(estimate_ell(&paths, &cfg, 2, C64::new(0.4, 0.0)).unwrap().value.norm() > 0.0);
}
