//! The symmetric model: classification, scalar boundary value problem,
//! continuation identity, the folded quadrant path and the closed-form
//! density family.

use std::f64::consts::{FRAC_PI_2, PI};
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::bvp::DiskMap;
use crate::error::{Error, Result};
use crate::estimate::{
    estimate_diag_lt, estimate_many, linear_combination, DensityGrid, EstimatorConfig, Integrand, LRegion, LaplaceEstimate, SeMode,
};
use crate::feq::{Estimates, ResidualReport};
use crate::kernel::{branch_eval, coeffs_abcd, KernelId, Variable};
use crate::model::{in_state_space, ModelParams};
use crate::simulate::{transform_hat, transform_tilde, PathRecord};

const ANGLE_TOL: f64 = 1e-9;
/// Largest `|k|` tried when testing `π/2 + δ ∈ β̃ℤ + πℤ`.
pub const MAX_MULTIPLE: i64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub skew_symmetric: bool,
    pub dieker_moriarty: bool,
    pub d_algebraic_condition: bool,
    /// `(k, j)` with `π/2 + δ = kβ̃ + jπ`, when found.
    pub d_algebraic_multiple: Option<(i64, i64)>,
    pub beta_tilde: f64,
    pub delta: f64,
}

pub fn classify(pr: &ModelParams) -> Result<ClassificationReport> {
    let w = pr.wedge_angles()?;
    let (bt, d) = (w.beta_tilde, w.delta);
    // ε = π/2 after the change of variables
    let skew = (w.epsilon + d - PI).abs() < ANGLE_TOL;
    let dm = {
        let n = -(w.epsilon + d - PI) / bt;
        n > -ANGLE_TOL && (n - n.round()).abs() * bt < ANGLE_TOL
    };
    let mut found = None;
    for k in -MAX_MULTIPLE..=MAX_MULTIPLE {
        let rest = FRAC_PI_2 + d - k as f64 * bt;
        let j = (rest / PI).round();
        if (rest - j * PI).abs() < ANGLE_TOL {
            found = Some((k, j as i64));
            break;
        }
    }
    if pr.is_recurrent() {
        debug_assert!(!skew && !dm, "recurrent symmetric parameters cannot be skew symmetric");
    }
    Ok(ClassificationReport {
        skew_symmetric: skew,
        dieker_moriarty: dm,
        d_algebraic_condition: found.is_some(),
        d_algebraic_multiple: found,
        beta_tilde: bt,
        delta: d,
    })
}

/// Reflection parameter giving `π/2 + δ = kβ̃ + jπ` for the covariance
/// `(σ, ρ)`, if that `δ` lies in `(0, π)`.
pub fn d_algebraic_reflection(sigma: f64, rho: f64, k: i64, j: i64) -> Result<f64> {
    if sigma <= 0.0 || rho.abs() >= sigma {
        return Err(Error::NonElliptic);
    }
    let beta = 2.0 * PI - (-rho / sigma).acos();
    let delta = k as f64 * beta / 2.0 + j as f64 * PI - FRAC_PI_2;
    if delta <= 0.0 || delta >= PI {
        return Err(Error::InvalidConfig(format!("delta = {delta} is outside (0, pi)")));
    }
    // tan δ = sin β / (r + cos β)
    Ok(beta.sin() / delta.tan() - beta.cos())
}

/// `F(p, Q₁(p)) = C/A` along the first `q`-branch.
pub fn kernel_f(pr: &ModelParams, p: C64) -> Result<(C64, C64)> {
    pr.require_symmetric()?;
    let q = branch_eval(pr, KernelId::Sym, Variable::QOverP, 1, p)?;
    let c = coeffs_abcd(pr, p, q);
    if c.a.norm() < 1e-10 {
        return Err(Error::PoleNearby);
    }
    Ok((c.c / c.a, q))
}

fn ell1(est: &Estimates, p: C64) -> Result<LaplaceEstimate> {
    est.ell(1, -p)
}

/// `ℓ₁(p)K(p) − ℓ₁(p̄)K(p̄)` for `p` on `H_p₊`.
pub fn scalar_bvp_condition(pr: &ModelParams, est: &Estimates, p: C64) -> Result<ResidualReport> {
    pr.require_symmetric()?;
    let (k, _) = kernel_f(pr, p)?;
    let (kb, _) = kernel_f(pr, p.conj())?;
    let a = ell1(est, p)?;
    let b = ell1(est, p.conj())?;
    let r = linear_combination(&[(k, &a), (-kb, &b)], C64::new(0.0, 0.0), SeMode::Joint);
    Ok(ResidualReport::from_estimate("scalar_bvp", vec![p], &r))
}

/// Points of `H_p₊` in the upper half plane where `ℓ₁` is estimable.
pub fn hp_plus_points(pr: &ModelParams, cfg: &EstimatorConfig, n: usize) -> Result<Vec<C64>> {
    pr.require_symmetric()?;
    let map = DiskMap::new(pr, KernelId::Sym)?;
    let ok = |t: f64| -map.boundary_point(t).re >= cfg.ell_min_re(1);
    if !ok(0.0) || n == 0 {
        return Err(Error::DomainViolation);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while ok(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 64.0 {
            break;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((1..=n).map(|i| map.boundary_point(lo * i as f64 / n as f64)).collect())
}

/// `ℓ₁(p)F(p,Q₁(p)) − ℓ₁(p′)F(p′,Q₁(p))` with `p′ = P₂∘Q₁(p)`.
pub fn continuation_identity(pr: &ModelParams, est: &Estimates, p: C64) -> Result<ResidualReport> {
    pr.require_symmetric()?;
    let (f, q) = kernel_f(pr, p)?;
    let p2 = branch_eval(pr, KernelId::Sym, Variable::POverQ, 2, q)?;
    let c = coeffs_abcd(pr, p2, q);
    if c.a.norm() < 1e-10 {
        return Err(Error::PoleNearby);
    }
    let f2 = c.c / c.a;
    if (p2 - p).norm() < 1e-12 {
        return Ok(ResidualReport::new("continuation", vec![p, p2], C64::new(0.0, 0.0), 0.0).with_note("fixed point"));
    }
    let a = ell1(est, p)?;
    let b = ell1(est, p2)?;
    let r = linear_combination(&[(f, &a), (-f2, &b)], C64::new(0.0, 0.0), SeMode::Joint);
    Ok(ResidualReport::from_estimate("continuation", vec![p, p2], &r))
}

/// Quadrant path `(z2 − z1, z2)` of the process folded onto `S1`.
pub fn tilde_paths(paths: &[PathRecord]) -> Vec<PathRecord> {
    paths.iter().map(|p| transform_tilde(&transform_hat(p))).collect()
}

/// `L̃₁(p, q)`, the transform of half the quadrant path's law.
pub fn estimate_l_tilde(tilde: &[PathRecord], cfg: &EstimatorConfig, p: C64, q: C64) -> Result<LaplaceEstimate> {
    if p.re > -cfg.margin || q.re > -cfg.margin {
        return Err(Error::DomainViolation);
    }
    let g = |z: [f64; 2], out: &mut [C64]| {
        out[0] = 0.5 * (p * z[0] + q * z[1]).exp();
    };
    let f = Integrand {
        state: Some(&g),
        event: None,
        diag: None,
    };
    Ok(estimate_many(tilde, cfg.n_batches, 1, &f)?.remove(0))
}

/// `m(q)` from the diagonal local time, `ν̃ / 2θ`.
pub fn m_from_local_time(pr: &ModelParams, est: &Estimates, q: C64) -> Result<LaplaceEstimate> {
    let t = estimate_diag_lt(est.paths, &est.cfg, q)?;
    let c = C64::new(1.0 / (2.0 * pr.theta()), 0.0);
    Ok(linear_combination(&[(c, &t)], C64::new(0.0, 0.0), SeMode::Joint))
}

/// `U(p,q)L̃₁(p,q) + C(p,q)ℓ₁(p) + A(p,q)m(q)`.
pub fn symmetric_feq_residual(pr: &ModelParams, est: &Estimates, tilde: &[PathRecord], p: C64, q: C64) -> Result<ResidualReport> {
    pr.require_symmetric()?;
    if tilde.is_empty() {
        return Err(Error::MissingEstimate);
    }
    let lt = estimate_l_tilde(tilde, &est.cfg, p, q)?;
    let l1 = ell1(est, p)?;
    let m = m_from_local_time(pr, est, q)?;
    let u = crate::kernel::kernel_uv(pr, KernelId::Sym, p, q)?;
    let c = coeffs_abcd(pr, p, q);
    let r = linear_combination(&[(u, &lt), (c.c, &l1), (c.a, &m)], C64::new(0.0, 0.0), SeMode::Joint);
    Ok(ResidualReport::from_estimate("feq_symmetric", vec![p, q], &r))
}

/// Diagonal local-time transform against `2θ m(q)` from the occupation window.
pub fn check_nu_tilde(pr: &ModelParams, est: &Estimates, q: C64) -> Result<ResidualReport> {
    let t = estimate_diag_lt(est.paths, &est.cfg, q)?;
    let m = est.m(q)?;
    let c = C64::new(-2.0 * pr.theta(), 0.0);
    let r = linear_combination(&[(C64::new(1.0, 0.0), &t), (c, &m)], C64::new(0.0, 0.0), SeMode::Joint);
    Ok(ResidualReport::from_estimate("nu_tilde", vec![q], &r))
}

/// `L₁(x,y) − L̃₁(−x, x+y)`.
pub fn check_l1_tilde(est: &Estimates, tilde: &[PathRecord], x: C64, y: C64) -> Result<ResidualReport> {
    let a = est.l(LRegion::S1, x, y)?;
    let b = estimate_l_tilde(tilde, &est.cfg, -x, x + y)?;
    let one = C64::new(1.0, 0.0);
    let r = linear_combination(&[(one, &a), (-one, &b)], C64::new(0.0, 0.0), SeMode::Joint);
    Ok(ResidualReport::from_estimate("l1_tilde", vec![x, y], &r))
}

/// `n(s)`, which vanishes for symmetric parameters.
pub fn check_n_zero(est: &Estimates, s: C64) -> Result<ResidualReport> {
    let n = est.n(s)?;
    Ok(ResidualReport::from_estimate("n_zero", vec![s], &n))
}

// ---------------------------------------------------------------------------
// Closed-form density

fn gl_rule(n: usize) -> Vec<(f64, f64)> {
    let g = GaussLegendre::new(NonZeroUsize::new(n).expect("positive order"));
    g.iter().map(|(x, w)| (*x, *w)).collect()
}

/// Composite Gauss–Legendre on `[a, b]`.
fn integrate<T, F>(rule: &[(f64, f64)], a: f64, b: f64, panels: usize, mut f: F) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
    F: FnMut(f64) -> T,
{
    let h = (b - a) / panels as f64;
    let mut acc = T::default();
    for k in 0..panels {
        let c = a + (k as f64 + 0.5) * h;
        for &(x, w) in rule {
            acc = acc + f(c + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    acc
}

/// `π(r,t) = (C/√r) cos(t/2) exp(−2r|μ| cos²(t/2))` in the coordinates where
/// the covariance is the identity, with `t = 0` on the bisector of the wedge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemarkableDensity {
    pub mu_norm: f64,
    pub beta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// Angle of the `t = 0` axis in the transformed plane.
    pub t_origin: f64,
    /// `ξ = T z`.
    pub transform: [[f64; 2]; 2],
}

impl RemarkableDensity {
    /// Identity covariance, normalized by quadrature.
    pub fn new(mu_norm: f64, beta: f64) -> Result<Self> {
        if !(mu_norm > 0.0) || !(beta > 0.0 && beta < 2.0 * PI) {
            return Err(Error::InvalidConfig("need |mu| > 0 and beta in (0, 2 pi)".into()));
        }
        let mut d = RemarkableDensity {
            mu_norm,
            beta,
            c: 1.0,
            t_origin: 0.0,
            transform: [[1.0, 0.0], [0.0, 1.0]],
        };
        d.c = 1.0 / d.mass_by_quadrature();
        Ok(d)
    }

    /// The density for symmetric parameters with drift along the diagonal,
    /// in the coordinates `ξ = (z1+z2)/√(2(σ+ρ))`, `η = (z1−z2)/√(2(σ−ρ))`.
    pub fn for_params(pr: &ModelParams) -> Result<Self> {
        pr.require_symmetric()?;
        let s = pr.sigma[0];
        let (sp, sm) = ((2.0 * (s + pr.rho)).sqrt(), (2.0 * (s - pr.rho)).sqrt());
        let w = pr.wedge_angles()?;
        let mut d = Self::new(2.0 * pr.mu[0].abs() / sp, w.beta)?;
        d.transform = [[1.0 / sp, 1.0 / sp], [1.0 / sm, -1.0 / sm]];
        Ok(d)
    }

    pub fn half_angle(&self) -> f64 {
        0.5 * self.beta
    }

    /// `C` in closed form, `(2|μ|)^{3/2} / (2√π tan(β/4))`.
    pub fn c_closed_form(&self) -> f64 {
        (2.0 * self.mu_norm).powf(1.5) / (2.0 * PI.sqrt() * (0.25 * self.beta).tan())
    }

    pub fn density(&self, r: f64, t: f64) -> Result<f64> {
        if !(r > 0.0) || t.abs() > self.half_angle() {
            return Err(Error::OutsideWedge);
        }
        let h = (0.5 * t).cos();
        Ok(self.c / r.sqrt() * h * (-2.0 * r * self.mu_norm * h * h).exp())
    }

    pub fn jacobian(&self) -> f64 {
        let t = self.transform;
        (t[0][0] * t[1][1] - t[0][1] * t[1][0]).abs()
    }

    /// Polar coordinates of `z` in the transformed plane.
    pub fn polar(&self, z: [f64; 2]) -> (f64, f64) {
        let t = self.transform;
        let x = t[0][0] * z[0] + t[0][1] * z[1];
        let y = t[1][0] * z[0] + t[1][1] * z[1];
        let mut a = y.atan2(x) - self.t_origin;
        if a > PI {
            a -= 2.0 * PI;
        } else if a < -PI {
            a += 2.0 * PI;
        }
        (x.hypot(y), a)
    }

    /// Density with respect to Lebesgue measure in the original coordinates.
    pub fn density_at(&self, z: [f64; 2]) -> Result<f64> {
        let (r, t) = self.polar(z);
        Ok(self.density(r, t)? * self.jacobian())
    }

    /// `∬ π r dr dt` by tensor Gauss–Legendre after `r = s²`.
    pub fn mass_by_quadrature(&self) -> f64 {
        let rule = gl_rule(32);
        let phi = self.half_angle();
        integrate(&rule, -phi, phi, 16, |t| {
            let h = (0.5 * t).cos();
            let rate = 2.0 * self.mu_norm * h * h;
            let smax = (60.0 / rate).sqrt();
            // π r dr = 2 C s² cos(t/2) e^{-rate s²} ds
            integrate(&rule, 0.0, smax, 8, |s| 2.0 * self.c * s * s * h * (-rate * s * s).exp())
        })
    }

    /// The point of the original plane with transformed polar coordinates `(r, t)`.
    pub fn point(&self, r: f64, t: f64) -> [f64; 2] {
        let u = self.back(t);
        [r * u[0], r * u[1]]
    }

    /// Unit vector in the original plane along the transformed angle `t`.
    fn back(&self, t: f64) -> [f64; 2] {
        let a = t + self.t_origin;
        let (x, y) = (a.cos(), a.sin());
        let m = self.transform;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [(m[1][1] * x - m[0][1] * y) / det, (-m[1][0] * x + m[0][0] * y) / det]
    }

    /// `∫ e^{x z1 + y z2} π(dz)`, radially in closed form.
    pub fn transform_interior(&self, x: C64, y: C64) -> C64 {
        let rule = gl_rule(32);
        let phi = self.half_angle();
        let g = 0.5 * PI.sqrt();
        integrate(&rule, -phi, phi, 16, |t| {
            let h = (0.5 * t).cos();
            let e = self.back(t);
            let rate = 2.0 * self.mu_norm * h * h - (x * e[0] + y * e[1]);
            self.c * h * g * rate.powf(-1.5)
        })
    }

    /// `∫ e^{x z1 + y z2} π(z) dℓ` along the face at transformed angle `±φ`.
    fn face_integral(&self, upper: bool, x: C64, y: C64) -> C64 {
        let phi = self.half_angle();
        let t = if upper { phi } else { -phi };
        let e = self.back(t);
        let len = e[0].hypot(e[1]);
        let h = (0.5 * t).cos();
        // arclength along the face is len·dr
        let rate = 2.0 * self.mu_norm * h * h - (x * e[0] + y * e[1]);
        self.c * h * self.jacobian() * PI.sqrt() * rate.powf(-0.5) * len
    }

    /// Adjoint relation `K(x,y)·∫f dπ + (r1x+y)·∫f dν1 + (x+r2y)·∫f dν2` for
    /// `f = e^{x z1 + y z2}`, with `ν_i` the face densities `(σ_j/2)π`.
    pub fn bar_residual(&self, pr: &ModelParams, x: C64, y: C64) -> C64 {
        let k = crate::kernel::kernel_k(pr, x, y);
        let up1 = self.face_one_upper();
        let nu1 = 0.5 * pr.sigma[1] * self.face_integral(up1, x, y);
        let nu2 = 0.5 * pr.sigma[0] * self.face_integral(!up1, x, y);
        k * self.transform_interior(x, y) + (pr.refl[0] * x + y) * nu1 + (x + pr.refl[1] * y) * nu2
    }

    /// Does face 1 (`z2 = 0`) map to the edge `t = +φ`?
    fn face_one_upper(&self) -> bool {
        self.polar([-1.0, 0.0]).1 > 0.0
    }
}

/// Imaginary test points for the adjoint relation.
pub fn bar_test_points() -> Vec<(C64, C64)> {
    [(0.3, 0.0), (0.0, 0.7), (0.5, -0.4), (1.1, 0.6), (-0.8, 1.3), (2.0, 0.5)]
        .iter()
        .map(|&(a, b)| (C64::new(0.0, a), C64::new(0.0, b)))
        .collect()
}

pub fn analytic_bar_residual(pr: &ModelParams) -> Result<f64> {
    let d = RemarkableDensity::for_params(pr)?;
    Ok(bar_test_points().iter().map(|&(x, y)| d.bar_residual(pr, x, y).norm()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemarkableSearch {
    pub r: f64,
    pub residual: f64,
    /// `r = (K+1)/(K−1)` with `K = tan(β/4)·√((σ+ρ)/(σ−ρ))`.
    pub r_closed_form: f64,
}

/// Least-squares reflection parameter for the adjoint relation at fixed
/// drift and covariance. The residual is affine in `r`, so the minimizer is
/// exact.
pub fn search_remarkable_r(sigma: f64, rho: f64, mu: f64) -> Result<RemarkableSearch> {
    let at = |r: f64| -> Result<(ModelParams, Vec<C64>)> {
        let pr = ModelParams::symmetric(sigma, rho, mu, r)?;
        let d = RemarkableDensity::for_params(&pr)?;
        let v = bar_test_points().iter().map(|&(x, y)| d.bar_residual(&pr, x, y)).collect();
        Ok((pr, v))
    };
    let (_, a0) = at(0.0)?;
    let (_, a1) = at(1.0)?;
    let slope: Vec<C64> = a1.iter().zip(&a0).map(|(b, a)| b - a).collect();
    let den: f64 = slope.iter().map(|s| s.norm_sqr()).sum();
    let num: f64 = slope.iter().zip(&a0).map(|(s, a)| (s.conj() * a).re).sum();
    if den == 0.0 {
        return Err(Error::NotInFamily);
    }
    let r = -num / den;
    let (pr, v) = at(r)?;
    let residual = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let beta = pr.wedge_angles()?.beta;
    let k = (0.25 * beta).tan() * ((sigma + rho) / (sigma - rho)).sqrt();
    Ok(RemarkableSearch {
        r,
        residual,
        r_closed_form: (k + 1.0) / (k - 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemarkableReport {
    pub bar_residual: f64,
    pub normalization_error: f64,
    pub total_variation: Option<f64>,
    pub bar_pass: bool,
    pub tv_pass: Option<bool>,
}

pub const BAR_TOL: f64 = 1e-6;
pub const FAMILY_TOL: f64 = 1e-4;
pub const TV_TOL: f64 = 0.05;

/// Mass of the closed-form density in each histogram cell and outside.
pub fn cell_masses(d: &RemarkableDensity, lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
    let w = (hi - lo) / n as f64;
    let rule = gl_rule(4);
    let cell = |x0: f64, y0: f64, sub: usize| -> f64 {
        let h = w / sub as f64;
        let mut acc = 0.0;
        for a in 0..sub {
            for b in 0..sub {
                let (cx, cy) = (x0 + (a as f64 + 0.5) * h, y0 + (b as f64 + 0.5) * h);
                for &(u, wu) in &rule {
                    for &(v, wv) in &rule {
                        let z = [cx + 0.5 * h * u, cy + 0.5 * h * v];
                        if in_state_space(z) {
                            acc += d.density_at(z).unwrap_or(0.0) * wu * wv * 0.25 * h * h;
                        }
                    }
                }
            }
        }
        acc
    };
    let mut masses = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let (x0, y0) = (lo + i as f64 * w, lo + j as f64 * w);
            // finer near the corner singularity
            let near = x0.abs().min((x0 + w).abs()) < 2.0 * w && y0.abs().min((y0 + w).abs()) < 2.0 * w;
            masses[i * n + j] = cell(x0, y0, if near { 32 } else { 1 });
        }
    }
    let inside: f64 = masses.iter().sum();
    (masses, (1.0 - inside).max(0.0))
}

/// Total variation between a histogram and the closed-form cell masses,
/// counting the mass outside the window as one more cell.
pub fn total_variation(d: &RemarkableDensity, grid: &DensityGrid) -> f64 {
    let (m, out) = cell_masses(d, grid.lo, grid.hi, grid.n);
    let a = grid.cell_width().powi(2);
    let s: f64 = grid.values.iter().zip(&m).map(|(v, e)| (v * a - e).abs()).sum();
    0.5 * (s + (grid.outside - out).abs())
}

pub fn verify_remarkable(pr: &ModelParams, grid: Option<&DensityGrid>) -> Result<RemarkableReport> {
    let bar = analytic_bar_residual(pr)?;
    if bar > FAMILY_TOL {
        return Err(Error::NotInFamily);
    }
    let d = RemarkableDensity::for_params(pr)?;
    let tv = grid.map(|g| total_variation(&d, g));
    Ok(RemarkableReport {
        bar_residual: bar,
        normalization_error: (d.mass_by_quadrature() - 1.0).abs(),
        total_variation: tv,
        bar_pass: bar <= BAR_TOL,
        tv_pass: tv.map(|t| t <= TV_TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym() -> ModelParams {
        ModelParams::symmetric(1.0, 0.0, -1.0, 2.0).unwrap()
    }

    #[test]
    fn closed_form_constant_matches_quadrature() {
        for (m, b) in [(1.0, PI), (0.7, 1.5 * PI), (2.0, 0.5 * PI), (1.3, 1.9 * PI)] {
            let d = RemarkableDensity::new(m, b).unwrap();
            assert!((d.c / d.c_closed_form() - 1.0).abs() < 1e-9, "{m} {b}");
            assert!((d.mass_by_quadrature() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn density_independent_of_opening() {
        let a = RemarkableDensity::new(1.0, PI).unwrap();
        let mut b = RemarkableDensity::new(1.0, 1.5 * PI).unwrap();
        b.c = a.c;
        assert_eq!(a.density(0.7, 0.4).unwrap(), b.density(0.7, 0.4).unwrap());
        assert_eq!(a.density(0.7, 1.7), Err(Error::OutsideWedge));
        assert!(b.density(0.7, 1.7).is_ok());
        let wide = RemarkableDensity::new(1.0, 2.0 * PI - 1e-8).unwrap();
        assert!(wide.density(1.0, PI - 1e-6).unwrap() < 1e-7);
        for t in [0.0, 1.0, 2.0] {
            assert!(b.density(0.5, t).unwrap() > b.density(2.0, t).unwrap());
        }
    }

    #[test]
    fn remarkable_reflection_found_by_search() {
        let s = search_remarkable_r(1.0, 0.0, -1.0).unwrap();
        assert!((s.r_closed_form - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((s.r - s.r_closed_form).abs() < 1e-9, "{s:?}");
        assert!(s.residual < 1e-10);
        let s = search_remarkable_r(1.3, 0.4, -0.6).unwrap();
        assert!((s.r - s.r_closed_form).abs() < 1e-9, "{s:?}");
        let pr = ModelParams::symmetric(1.0, 0.0, -1.0, s.r_closed_form + 0.5).unwrap();
        let pr0 = ModelParams::symmetric(1.0, 0.0, -1.0, 1.0 + 2f64.sqrt()).unwrap();
        assert_eq!(verify_remarkable(&pr, None), Err(Error::NotInFamily));
        assert!(verify_remarkable(&pr0, None).unwrap().bar_pass);
    }

    #[test]
    fn faces_sit_on_the_wedge_edges() {
        let d = RemarkableDensity::for_params(&sym()).unwrap();
        let phi = d.half_angle();
        let (_, t1) = d.polar([-1.0, 0.0]);
        let (_, t2) = d.polar([0.0, -1.0]);
        assert!((t1.abs() - phi).abs() < 1e-12 && (t2.abs() - phi).abs() < 1e-12);
        assert!(t1 * t2 < 0.0);
        let (_, t0) = d.polar([1.0, 1.0]);
        assert!(t0.abs() < 1e-12);
    }

    #[test]
    fn cell_masses_sum_to_one() {
        let d = RemarkableDensity::for_params(&ModelParams::symmetric(1.0, 0.0, -1.0, 1.0 + 2f64.sqrt()).unwrap()).unwrap();
        let (m, out) = cell_masses(&d, -40.0, 10.0, 100);
        let s: f64 = m.iter().sum();
        assert!((s - 1.0).abs() < 2e-3, "{s}");
        assert!(out < 2e-3);
    }

    #[test]
    fn classification_flags() {
        let c = classify(&sym()).unwrap();
        assert!(!c.skew_symmetric && !c.dieker_moriarty);
        let r = d_algebraic_reflection(1.0, 0.5, 2, 0).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        let c = classify(&ModelParams::symmetric(1.0, 0.5, -1.0, r).unwrap()).unwrap();
        assert!(c.d_algebraic_condition);
        assert!((c.delta - 5.0 * PI / 6.0).abs() < 1e-12);
        // ρ/σ is the skew-symmetric reflection, outside the recurrent range
        let c = classify(&ModelParams::symmetric(1.0, 0.5, -1.0, 0.5).unwrap()).unwrap();
        assert!(c.skew_symmetric);
        assert_eq!(classify(&ModelParams::default()).map(|_| ()), Err(Error::NotSymmetric));
    }

    #[test]
    fn kernel_f_real_on_real_axis_and_hp_plus() {
        let pr = sym();
        let map = DiskMap::new(&pr, KernelId::Sym).unwrap();
        for t in [0.05, 0.2, 0.4] {
            let p = map.boundary_point(t);
            let (_, q) = kernel_f(&pr, p).unwrap();
            assert!(q.im.abs() < 1e-10, "Q1 not real on H_p+: {q}");
            let (_, qb) = kernel_f(&pr, p.conj()).unwrap();
            assert!((qb - q).norm() < 1e-10);
        }
    }
}
