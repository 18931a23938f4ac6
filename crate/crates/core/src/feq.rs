//! Residual checks of the functional equations and of the basic adjoint
//! relationship against Monte Carlo estimates.

use crate::error::{Error, Result};
use crate::estimate::{
    estimate_corner_densities, estimate_ell, estimate_l, estimate_m, estimate_n, estimate_one, linear_combination,
    CornerDensities, EstimatorConfig, Integrand, LRegion, LaplaceEstimate, SeMode,
};
use crate::kernel::{kernel_k, C64};
use crate::model::ModelParams;
use crate::simulate::{LtEvent, PathRecord};
use serde::Serialize;
use std::sync::OnceLock;

pub const Z_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub equation: String,
    pub point: Vec<C64>,
    pub residual: C64,
    pub se: f64,
    pub z: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ResidualReport {
    pub fn new(equation: &str, point: Vec<C64>, residual: C64, se: f64) -> Self {
        let z = if se > 0.0 {
            residual.norm() / se
        } else if residual.norm() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        ResidualReport {
            equation: equation.to_string(),
            point,
            residual,
            se,
            z,
            pass: z <= Z_THRESHOLD,
            note: None,
        }
    }

    pub fn from_estimate(equation: &str, point: Vec<C64>, est: &LaplaceEstimate) -> Self {
        Self::new(equation, point, est.value, est.se_norm())
    }

    pub fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }
}

/// Count of passing reports and the Bonferroni-adjusted threshold for a run of
/// `n` simultaneous checks at the 3-sigma level.
pub fn summarize(reports: &[ResidualReport]) -> Summary {
    let n = reports.len();
    let passed = reports.iter().filter(|r| r.pass).count();
    let alpha = 2.0 * normal_tail(Z_THRESHOLD);
    Summary {
        n,
        passed,
        max_z: reports.iter().map(|r| r.z).fold(0.0, f64::max),
        bonferroni_z: if n > 0 { inverse_normal_tail(alpha / (2.0 * n as f64)) } else { Z_THRESHOLD },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub passed: usize,
    pub max_z: f64,
    pub bonferroni_z: f64,
}

fn normal_tail(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}

fn inverse_normal_tail(p: f64) -> f64 {
    // bisection is plenty for a report field
    let (mut a, mut b) = (0.0, 40.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if normal_tail(m) > p {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Lazily computed estimates from one ensemble.
pub struct Estimates<'a> {
    pub params: ModelParams,
    pub paths: &'a [PathRecord],
    pub cfg: EstimatorConfig,
    pub mode: SeMode,
    corner: OnceLock<Result<CornerDensities>>,
}

impl<'a> Estimates<'a> {
    pub fn new(pr: &ModelParams, paths: &'a [PathRecord]) -> Self {
        Estimates {
            params: *pr,
            paths,
            cfg: EstimatorConfig::for_paths(paths).with_kernel_tail_rates(pr),
            mode: SeMode::Independent,
            corner: OnceLock::new(),
        }
    }

    pub fn with_config(mut self, cfg: EstimatorConfig) -> Self {
        self.cfg = cfg;
        self
    }

    pub fn with_mode(mut self, mode: SeMode) -> Self {
        self.mode = mode;
        self
    }

    fn need(&self) -> Result<()> {
        if self.paths.is_empty() {
            Err(Error::MissingEstimate)
        } else {
            Ok(())
        }
    }

    pub fn l(&self, region: LRegion, x: C64, y: C64) -> Result<LaplaceEstimate> {
        self.need()?;
        estimate_l(self.paths, &self.cfg, region, x, y)
    }

    pub fn m(&self, s: C64) -> Result<LaplaceEstimate> {
        self.need()?;
        estimate_m(self.paths, &self.cfg, s)
    }

    pub fn n(&self, s: C64) -> Result<LaplaceEstimate> {
        self.need()?;
        estimate_n(self.paths, &self.cfg, s)
    }

    /// Boundary transform in the original variable.
    pub fn ell(&self, axis: usize, x: C64) -> Result<LaplaceEstimate> {
        self.need()?;
        estimate_ell(self.paths, &self.cfg, axis, x)
    }

    pub fn corner(&self) -> Result<CornerDensities> {
        self.need()?;
        self.corner
            .get_or_init(|| estimate_corner_densities(&self.params, self.paths, &self.cfg))
            .clone()
    }
}

/// `k(x, y)` of the functional equation in `S1`.
pub fn poly_k(pr: &ModelParams, x: C64, y: C64) -> C64 {
    let th = pr.theta();
    th * (y - x) / 2.0 + (pr.sigma[1] - pr.sigma[0]) * (x + y) / 2.0 + (pr.mu[1] - pr.mu[0])
}

pub fn poly_k1(pr: &ModelParams, x: C64, y: C64) -> C64 {
    pr.refl[0] * x + y
}

pub fn poly_k2(pr: &ModelParams, x: C64, y: C64) -> C64 {
    x + pr.refl[1] * y
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Functional equation in `S1`:
/// `K L1 + k m + θ n + k1 ℓ1(x) + E = 0`.
pub fn check_feq_s1(pr: &ModelParams, est: &Estimates, x: C64, y: C64) -> Result<ResidualReport> {
    let l1 = est.l(LRegion::S1, x, y)?;
    let m = est.m(x + y)?;
    let n = est.n(x + y)?;
    let e1 = est.ell(1, x)?;
    let c = est.corner()?;
    let r = linear_combination(
        &[
            (kernel_k(pr, x, y), &l1),
            (poly_k(pr, x, y), &m),
            (C64::new(pr.theta(), 0.0), &n),
            (poly_k1(pr, x, y), &e1),
            (one(), &c.e),
        ],
        C64::new(0.0, 0.0),
        est.mode,
    );
    Ok(ResidualReport::from_estimate("feq_s1", vec![x, y], &r).with_note("slow convergence: uses corner densities"))
}

/// Functional equation in `S2`:
/// `K L2 − k m − θ n + k2 ℓ2(y) − E = 0`.
pub fn check_feq_s2(pr: &ModelParams, est: &Estimates, x: C64, y: C64) -> Result<ResidualReport> {
    let l2 = est.l(LRegion::S2, x, y)?;
    let m = est.m(x + y)?;
    let n = est.n(x + y)?;
    let e2 = est.ell(2, y)?;
    let c = est.corner()?;
    let r = linear_combination(
        &[
            (kernel_k(pr, x, y), &l2),
            (-poly_k(pr, x, y), &m),
            (C64::new(-pr.theta(), 0.0), &n),
            (poly_k2(pr, x, y), &e2),
            (-one(), &c.e),
        ],
        C64::new(0.0, 0.0),
        est.mode,
    );
    Ok(ResidualReport::from_estimate("feq_s2", vec![x, y], &r).with_note("slow convergence: uses corner densities"))
}

/// Sum of the two equations, free of `m`, `n` and `E`:
/// `K (L1 + L2) + k1 ℓ1(x) + k2 ℓ2(y) = 0`.
pub fn check_feq_sum(pr: &ModelParams, est: &Estimates, x: C64, y: C64) -> Result<ResidualReport> {
    let l1 = est.l(LRegion::S1, x, y)?;
    let l2 = est.l(LRegion::S2, x, y)?;
    let e1 = est.ell(1, x)?;
    let e2 = est.ell(2, y)?;
    let k = kernel_k(pr, x, y);
    let r = linear_combination(
        &[(k, &l1), (k, &l2), (poly_k1(pr, x, y), &e1), (poly_k2(pr, x, y), &e2)],
        C64::new(0.0, 0.0),
        est.mode,
    );
    Ok(ResidualReport::from_estimate("feq_sum", vec![x, y], &r))
}

/// The symmetric form of the `S1` equation, where `n = 0` and `E = 0`:
/// `K L1 + k m + k1 ℓ1(x) = 0`.
pub fn check_feq_s1_symmetric(pr: &ModelParams, est: &Estimates, x: C64, y: C64) -> Result<ResidualReport> {
    pr.require_symmetric()?;
    let l1 = est.l(LRegion::S1, x, y)?;
    let m = est.m(x + y)?;
    let e1 = est.ell(1, x)?;
    let r = linear_combination(
        &[(kernel_k(pr, x, y), &l1), (poly_k(pr, x, y), &m), (poly_k1(pr, x, y), &e1)],
        C64::new(0.0, 0.0),
        est.mode,
    );
    Ok(ResidualReport::from_estimate("feq_s1_symmetric", vec![x, y], &r))
}

/// Points `(i a, i b)` on the common boundary of both convergence domains.
pub fn sum_check_points(n: usize, seed: u64, scale: f64) -> Vec<(C64, C64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (
                C64::new(0.0, rng.random_range(-scale..scale)),
                C64::new(0.0, rng.random_range(-scale..scale)),
            )
        })
        .collect()
}

/// Points inside the `S1` domain: `Re x >= 0`, `Re(x + y) <= 0`.
pub fn s1_check_points(n: usize, seed: u64, scale: f64) -> Vec<(C64, C64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let xr = rng.random_range(0.0..scale);
            let sr = -rng.random_range(0.0..scale);
            let xi = rng.random_range(-scale..scale);
            let yi = rng.random_range(-scale..scale);
            (C64::new(xr, xi), C64::new(sr - xr, yi))
        })
        .collect()
}

/// Second-order jet of a function of two variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub f: C64,
    pub grad: [C64; 2],
    pub hess: [[C64; 2]; 2],
}

impl Jet {
    fn mul(self, o: Jet) -> Jet {
        let mut hess = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                hess[i][j] = self.hess[i][j] * o.f + self.grad[i] * o.grad[j] + self.grad[j] * o.grad[i] + self.f * o.hess[i][j];
            }
        }
        Jet {
            f: self.f * o.f,
            grad: [self.grad[0] * o.f + self.f * o.grad[0], self.grad[1] * o.f + self.f * o.grad[1]],
            hess,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TestFunction {
    /// `f = 1` everywhere, no cutoff.
    Constant,
    /// `e^{x z1 + y z2}` times the cutoff.
    Exponential { x: C64, y: C64 },
    /// `c0 + c1 z1 + c2 z2 + c3 z1² + c4 z1 z2 + c5 z2²` times the cutoff.
    Polynomial { c: [f64; 6] },
}

/// Smooth step: 1 on `|t| <= a`, 0 on `|t| >= 2a`.
fn bump_1d(t: f64, a: f64) -> [f64; 3] {
    let s = (t.abs() - a) / a;
    if s <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    if s >= 1.0 {
        return [0.0, 0.0, 0.0];
    }
    // g(s) = e^{-1/s}, h(s) = g(s) + g(1-s), step = g(1-s)/h
    let g = |u: f64| (-1.0 / u).exp();
    let g1 = |u: f64| g(u) / (u * u);
    let g2 = |u: f64| g(u) * (1.0 - 2.0 * u) / u.powi(4);
    let (a0, a1, a2) = (g(1.0 - s), -g1(1.0 - s), g2(1.0 - s));
    let (b0, b1, b2) = (g(s), g1(s), g2(s));
    let h0 = a0 + b0;
    let h1 = a1 + b1;
    let h2 = a2 + b2;
    let v = a0 / h0;
    let d1 = (a1 * h0 - a0 * h1) / (h0 * h0);
    let d2 = (a2 * h0 - a0 * h2) / (h0 * h0) - 2.0 * h1 * (a1 * h0 - a0 * h1) / (h0 * h0 * h0);
    let sg = t.signum();
    [v, d1 * sg / a, d2 / (a * a)]
}

pub fn cutoff_jet(z: [f64; 2], a: f64) -> Jet {
    let u = bump_1d(z[0], a);
    let v = bump_1d(z[1], a);
    let c = |x: f64| C64::new(x, 0.0);
    Jet {
        f: c(u[0] * v[0]),
        grad: [c(u[1] * v[0]), c(u[0] * v[1])],
        hess: [[c(u[2] * v[0]), c(u[1] * v[1])], [c(u[1] * v[1]), c(u[0] * v[2])]],
    }
}

impl TestFunction {
    pub fn jet(&self, z: [f64; 2], window: f64) -> Jet {
        let zero = C64::new(0.0, 0.0);
        let base = match *self {
            TestFunction::Constant => {
                return Jet {
                    f: one(),
                    grad: [zero; 2],
                    hess: [[zero; 2]; 2],
                }
            }
            TestFunction::Exponential { x, y } => {
                let e = (x * z[0] + y * z[1]).exp();
                Jet {
                    f: e,
                    grad: [x * e, y * e],
                    hess: [[x * x * e, x * y * e], [x * y * e, y * y * e]],
                }
            }
            TestFunction::Polynomial { c } => {
                let [z1, z2] = z;
                let r = |v: f64| C64::new(v, 0.0);
                Jet {
                    f: r(c[0] + c[1] * z1 + c[2] * z2 + c[3] * z1 * z1 + c[4] * z1 * z2 + c[5] * z2 * z2),
                    grad: [r(c[1] + 2.0 * c[3] * z1 + c[4] * z2), r(c[2] + c[4] * z1 + 2.0 * c[5] * z2)],
                    hess: [[r(2.0 * c[3]), r(c[4])], [r(c[4]), r(2.0 * c[5])]],
                }
            }
        };
        base.mul(cutoff_jet(z, window))
    }
}

/// Generator `G f = ½ ∇·Σ∇f + μ·∇f`.
pub fn generator(pr: &ModelParams, j: &Jet) -> C64 {
    0.5 * (pr.sigma[0] * j.hess[0][0] + 2.0 * pr.rho * j.hess[0][1] + pr.sigma[1] * j.hess[1][1])
        + pr.mu[0] * j.grad[0]
        + pr.mu[1] * j.grad[1]
}

/// `R_i · ∇f` on face `i`.
pub fn boundary_term(pr: &ModelParams, j: &Jet, axis: usize) -> C64 {
    match axis {
        1 => pr.refl[0] * j.grad[0] + j.grad[1],
        _ => j.grad[0] + pr.refl[1] * j.grad[1],
    }
}

/// Basic adjoint relationship with time averages in place of `π`, `ν1`, `ν2`:
/// `∫ Gf dπ + ∫ R1·∇f dν1 + ∫ R2·∇f dν2 = 0`. `window` is the half-width of
/// the region where the cutoff equals one.
pub fn check_bar(pr: &ModelParams, paths: &[PathRecord], cfg: &EstimatorConfig, tf: TestFunction, window: f64) -> Result<ResidualReport> {
    if paths.is_empty() {
        return Err(Error::MissingEstimate);
    }
    if tf != TestFunction::Constant {
        let (inside, all) = paths
            .iter()
            .flat_map(|p| p.stationary_states())
            .fold((0usize, 0usize), |(a, b), (_, z)| {
                (a + usize::from(z[0].abs() <= window && z[1].abs() <= window), b + 1)
            });
        if all == 0 || (inside as f64) < 0.9 * all as f64 {
            return Err(Error::CutoffTooTight);
        }
    }
    let state = |z: [f64; 2], out: &mut [C64]| {
        out[0] = generator(pr, &tf.jet(z, window));
    };
    let event = |e: &LtEvent, out: &mut [C64]| {
        let j = tf.jet(e.z, window);
        out[0] = boundary_term(pr, &j, 1) * e.dl[0] + boundary_term(pr, &j, 2) * e.dl[1];
    };
    let est = estimate_one(
        paths,
        cfg.n_batches,
        &Integrand {
            state: Some(&state),
            event: Some(&event),
            diag: None,
        },
    )?;
    let point = match tf {
        TestFunction::Exponential { x, y } => vec![x, y],
        _ => vec![],
    };
    Ok(ResidualReport::from_estimate("bar", point, &est))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let a = 1.5;
        for &t in &[1.6, 2.0, 2.4, -1.9, -2.7] {
            let h = 1e-5;
            let [v, d1, d2] = bump_1d(t, a);
            let p = bump_1d(t + h, a)[0];
            let m = bump_1d(t - h, a)[0];
            assert!(((p - m) / (2.0 * h) - d1).abs() < 1e-6, "d1 at {t}");
            assert!(((p - 2.0 * v + m) / (h * h) - d2).abs() < 1e-3, "d2 at {t}");
        }
        assert_eq!(bump_1d(1.0, 1.5), [1.0, 0.0, 0.0]);
        assert_eq!(bump_1d(3.0, 1.5), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn jet_of_product_matches_finite_differences() {
        let tf = TestFunction::Exponential {
            x: C64::new(0.3, 1.0),
            y: C64::new(-0.5, 0.2),
        };
        let z = [1.7, -0.4];
        let j = tf.jet(z, 1.2);
        let h = 1e-5;
        let f = |a: f64, b: f64| tf.jet([a, b], 1.2).f;
        let gx = (f(z[0] + h, z[1]) - f(z[0] - h, z[1])) / (2.0 * h);
        let gxy = (f(z[0] + h, z[1] + h) - f(z[0] + h, z[1] - h) - f(z[0] - h, z[1] + h) + f(z[0] - h, z[1] - h)) / (4.0 * h * h);
        assert!((gx - j.grad[0]).norm() < 1e-6);
        assert!((gxy - j.hess[0][1]).norm() < 1e-4);
    }

    #[test]
    fn polynomial_kernel_pieces() {
        let pr = ModelParams::symmetric(1.0, 0.0, -1.0, 2.0).unwrap();
        let (x, y) = (C64::new(1.0, 0.0), C64::new(2.0, 0.0));
        assert_eq!(poly_k(&pr, x, y), C64::new(0.5, 0.0));
        assert_eq!(poly_k1(&pr, x, y), C64::new(4.0, 0.0));
        assert_eq!(poly_k2(&pr, x, y), C64::new(5.0, 0.0));
    }

    #[test]
    fn report_threshold() {
        let r = ResidualReport::new("t", vec![], C64::new(3.0, 4.0), 2.0);
        assert_eq!(r.z, 2.5);
        assert!(r.pass);
        let r = ResidualReport::new("t", vec![], C64::new(0.0, 0.0), 0.0);
        assert!(r.pass);
        let s = summarize(&[r]);
        assert!((s.bonferroni_z - 3.0).abs() < 1e-6);
    }
}
