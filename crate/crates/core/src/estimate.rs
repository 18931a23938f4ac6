//! Time-average estimators of the stationary law, its boundary measures and
//! their Laplace transforms, with batch-means standard errors.
//!
//! Batches are cut from the concatenated post-burn-in timeline of all
//! replicas, so every batch covers the same amount of time.

use crate::error::{Error, Result};
use crate::kernel::{BranchFamily, KernelId, Variable, C64};
use crate::model::{in_state_space, region_of, ModelParams, Region};
use crate::simulate::{LtEvent, PathRecord};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub n_batches: usize,
    /// The diagonal window at `u = (z1 + z2)/2` is `|z2 - z1| < max(sector_slope·u, strip_halfwidth)`.
    /// A window that narrows toward the corner keeps the steep rise of the
    /// density there from leaking into the average.
    pub sector_slope: f64,
    pub strip_halfwidth: f64,
    /// The corner values of the boundary densities are read off a fit of
    /// `a + b·sqrt(t) + c·t` to the densities at distance `t` from the corner,
    /// over `corner_exclusion < t < corner_bandwidth`.
    pub corner_bandwidth: f64,
    /// Scheme artifacts pile up within a few `sqrt(h)` of the corner.
    pub corner_exclusion: f64,
    /// Exponential decay rates of `ν1`, `ν2` used to extend the boundary
    /// transforms to `Re x >= -rate / 4`, where the estimator keeps a finite
    /// variance with room to spare. Zero means `Re x >= 0` only.
    pub tail_rate: [f64; 2],
    /// Extra distance required from the edge of a convergence domain.
    pub margin: f64,
}

impl EstimatorConfig {
    pub fn for_step(h: f64) -> Self {
        EstimatorConfig {
            n_batches: 50,
            sector_slope: 0.1,
            strip_halfwidth: 0.125 * h.sqrt(),
            corner_bandwidth: 0.25,
            corner_exclusion: 2.0 * h.sqrt(),
            tail_rate: [0.0; 2],
            margin: 0.0,
        }
    }

    pub fn for_paths(paths: &[PathRecord]) -> Self {
        Self::for_step(paths.first().map(|p| p.step).unwrap_or(1e-3))
    }

    pub fn with_kernel_tail_rates(mut self, pr: &ModelParams) -> Self {
        self.tail_rate = [tail_rate_bound(pr, 1), tail_rate_bound(pr, 2)];
        self
    }

    /// Smallest admissible `Re x` for the boundary transform on `axis`.
    pub fn ell_min_re(&self, axis: usize) -> f64 {
        -self.tail_rate[axis - 1] / 4.0 + self.margin
    }
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self::for_step(1e-3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceEstimate {
    pub value: C64,
    pub se: [f64; 2],
    pub n_effective: f64,
    #[serde(skip)]
    pub batches: Vec<C64>,
}

impl LaplaceEstimate {
    pub fn exact(value: C64) -> Self {
        LaplaceEstimate {
            value,
            se: [0.0, 0.0],
            n_effective: f64::INFINITY,
            batches: Vec::new(),
        }
    }

    pub fn se_norm(&self) -> f64 {
        self.se[0].hypot(self.se[1])
    }

    pub fn from_batches(batches: Vec<C64>, sample_var: f64) -> Self {
        let nb = batches.len() as f64;
        let mean = batches.iter().sum::<C64>() / nb;
        let (mut vr, mut vi) = (0.0, 0.0);
        for b in &batches {
            vr += (b.re - mean.re).powi(2);
            vi += (b.im - mean.im).powi(2);
        }
        let denom = (nb - 1.0).max(1.0) * nb;
        let se = [(vr / denom).sqrt(), (vi / denom).sqrt()];
        let s2 = se[0] * se[0] + se[1] * se[1];
        let n_effective = if s2 > 0.0 { (sample_var / s2).max(1.0) } else { f64::INFINITY };
        LaplaceEstimate {
            value: mean,
            se,
            n_effective,
            batches,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeMode {
    /// Treat the terms as uncorrelated.
    Independent,
    /// Combine batch by batch, which keeps the covariances.
    Joint,
}

/// `constant + Σ c_k X_k` with a propagated standard error.
pub fn linear_combination(terms: &[(C64, &LaplaceEstimate)], constant: C64, mode: SeMode) -> LaplaceEstimate {
    let value = constant + terms.iter().map(|(c, e)| c * e.value).sum::<C64>();
    let nb = terms.iter().map(|(_, e)| e.batches.len()).filter(|&n| n > 0).min().unwrap_or(0);
    let joint_ok = terms.iter().all(|(_, e)| e.batches.len() == nb || e.batches.is_empty());
    if mode == SeMode::Joint && nb > 1 && joint_ok {
        let batches: Vec<C64> = (0..nb)
            .map(|b| {
                constant
                    + terms
                        .iter()
                        .map(|(c, e)| c * e.batches.get(b).copied().unwrap_or(e.value))
                        .sum::<C64>()
            })
            .collect();
        let mut est = LaplaceEstimate::from_batches(batches, 0.0);
        est.value = value;
        est.n_effective = terms.iter().map(|(_, e)| e.n_effective).fold(f64::INFINITY, f64::min);
        return est;
    }
    let (mut vr, mut vi) = (0.0, 0.0);
    for (c, e) in terms {
        let (sa, sb) = (e.se[0], e.se[1]);
        vr += c.re * c.re * sa * sa + c.im * c.im * sb * sb;
        vi += c.im * c.im * sa * sa + c.re * c.re * sb * sb;
    }
    let batches = if nb > 1 && joint_ok {
        (0..nb)
            .map(|b| {
                constant
                    + terms
                        .iter()
                        .map(|(c, e)| c * e.batches.get(b).copied().unwrap_or(e.value))
                        .sum::<C64>()
            })
            .collect()
    } else {
        Vec::new()
    };
    LaplaceEstimate {
        value,
        se: [vr.sqrt(), vi.sqrt()],
        n_effective: terms.iter().map(|(_, e)| e.n_effective).fold(f64::INFINITY, f64::min),
        batches,
    }
}

/// Which recorded quantities an integrand reads.
pub struct Integrand<'a> {
    /// Value at a recorded state; weighted by the recording interval.
    pub state: Option<&'a (dyn Fn([f64; 2], &mut [C64]) + Sync)>,
    /// Contribution of a face local-time event (already weighted by `dl`).
    pub event: Option<&'a (dyn Fn(&LtEvent, &mut [C64]) + Sync)>,
    /// Contribution of a diagonal local-time event.
    pub diag: Option<&'a (dyn Fn(&LtEvent, &mut [C64]) + Sync)>,
}

struct PathAcc {
    sums: Vec<Vec<C64>>,
    sq: Vec<f64>,
    samples: f64,
}

fn batch_of(global: u128, total: u128, nb: usize) -> usize {
    ((global * nb as u128) / total).min(nb as u128 - 1) as usize
}

/// Time averages of `k` integrands over all paths, one estimate each.
pub fn estimate_many(paths: &[PathRecord], nb: usize, k: usize, f: &Integrand) -> Result<Vec<LaplaceEstimate>> {
    if paths.is_empty() {
        return Err(Error::MissingEstimate);
    }
    let n_post: Vec<u64> = paths.iter().map(|p| p.n_steps - p.burn_in_steps).collect();
    let total: u128 = n_post.iter().map(|&n| n as u128).sum();
    if total == 0 || nb == 0 {
        return Err(Error::InvalidConfig("empty estimation window".into()));
    }
    let offsets: Vec<u128> = n_post
        .iter()
        .scan(0u128, |acc, &n| {
            let o = *acc;
            *acc += n as u128;
            Some(o)
        })
        .collect();

    let run = |(path, off): (&PathRecord, u128)| -> PathAcc {
        let mut sums = vec![vec![C64::new(0.0, 0.0); k]; nb];
        let mut sq = vec![0.0; k];
        let mut buf = vec![C64::new(0.0, 0.0); k];
        let mut samples = 0.0;
        let b0 = path.burn_in_steps;
        let dt = path.record_dt();
        let h = path.step;
        if let Some(g) = f.state {
            for (s, z) in path.stationary_states() {
                buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                g(z, &mut buf);
                let b = batch_of(off + (s - b0) as u128, total, nb);
                for j in 0..k {
                    sums[b][j] += buf[j] * dt;
                    sq[j] += buf[j].norm_sqr();
                }
                samples += 1.0;
            }
        }
        let mut event_pass = |events: &mut dyn Iterator<Item = &LtEvent>, g: &(dyn Fn(&LtEvent, &mut [C64]) + Sync)| {
            for e in events {
                buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                g(e, &mut buf);
                let b = batch_of(off + (e.step - 1 - b0.min(e.step - 1)) as u128, total, nb);
                for j in 0..k {
                    sums[b][j] += buf[j];
                    sq[j] += buf[j].norm_sqr() / (h * h) * h / dt;
                }
            }
        };
        if let Some(g) = f.event {
            event_pass(&mut path.stationary_events(), g);
        }
        if let Some(g) = f.diag {
            event_pass(&mut path.stationary_diag(), g);
        }
        if samples == 0.0 {
            samples = ((path.n_steps - b0) as f64 * h / dt).max(1.0);
        }
        PathAcc { sums, sq, samples }
    };

    let items: Vec<(&PathRecord, u128)> = paths.iter().zip(offsets.iter().copied()).collect();
    #[cfg(feature = "parallel")]
    let accs: Vec<PathAcc> = {
        use rayon::prelude::*;
        items.into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let accs: Vec<PathAcc> = items.into_iter().map(run).collect();

    let h = paths[0].step;
    let batch_time = total as f64 * h / nb as f64;
    let mut out = Vec::with_capacity(k);
    let samples: f64 = accs.iter().map(|a| a.samples).sum();
    for j in 0..k {
        let batches: Vec<C64> = (0..nb)
            .map(|b| accs.iter().map(|a| a.sums[b][j]).sum::<C64>() / batch_time)
            .collect();
        let mean = batches.iter().sum::<C64>() / nb as f64;
        let second = accs.iter().map(|a| a.sq[j]).sum::<f64>() / samples;
        out.push(LaplaceEstimate::from_batches(batches, (second - mean.norm_sqr()).max(0.0) / samples));
    }
    Ok(out)
}

pub fn estimate_one(paths: &[PathRecord], nb: usize, f: &Integrand) -> Result<LaplaceEstimate> {
    Ok(estimate_many(paths, nb, 1, f)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LRegion {
    S1,
    S2,
    Whole,
}

/// Bounded-integrand domain: the exponent is nonpositive along the recession
/// directions of the region.
pub fn l_domain_ok(region: LRegion, x: C64, y: C64, margin: f64) -> bool {
    let s = (x + y).re;
    match region {
        LRegion::S1 => x.re >= margin && s <= -margin,
        LRegion::S2 => y.re >= margin && s <= -margin,
        LRegion::Whole => x.re.abs() <= 1e-15 && y.re.abs() <= 1e-15,
    }
}

fn in_region(region: LRegion, z: [f64; 2]) -> bool {
    match region {
        LRegion::Whole => true,
        LRegion::S1 => matches!(region_of(z), Ok(Region::S1)),
        LRegion::S2 => matches!(region_of(z), Ok(Region::S2)),
    }
}

fn cexp(x: C64, y: C64, z: [f64; 2]) -> C64 {
    (x * z[0] + y * z[1]).exp()
}

/// Laplace transform of `π` restricted to a region.
pub fn estimate_l(paths: &[PathRecord], cfg: &EstimatorConfig, region: LRegion, x: C64, y: C64) -> Result<LaplaceEstimate> {
    Ok(estimate_l_many(paths, cfg, region, &[(x, y)])?.remove(0))
}

pub fn estimate_l_many(paths: &[PathRecord], cfg: &EstimatorConfig, region: LRegion, pts: &[(C64, C64)]) -> Result<Vec<LaplaceEstimate>> {
    if pts.iter().any(|&(x, y)| !l_domain_ok(region, x, y, cfg.margin)) {
        return Err(Error::DomainViolation);
    }
    let g = |z: [f64; 2], out: &mut [C64]| {
        if in_region(region, z) {
            for (o, &(x, y)) in out.iter_mut().zip(pts) {
                *o = cexp(x, y, z);
            }
        }
    };
    estimate_many(
        paths,
        cfg.n_batches,
        pts.len(),
        &Integrand {
            state: Some(&g),
            event: None,
            diag: None,
        },
    )
}

impl EstimatorConfig {
    /// Half-width of the diagonal window at `u`.
    pub fn diag_halfwidth(&self, u: f64) -> f64 {
        (self.sector_slope * u).max(self.strip_halfwidth)
    }
}

/// Window average of `e^{s u}` around the diagonal, `u = (z1+z2)/2`, `d = z2 - z1`.
fn strip_many(paths: &[PathRecord], cfg: &EstimatorConfig, ss: &[C64]) -> Result<Vec<LaplaceEstimate>> {
    let g = |z: [f64; 2], out: &mut [C64]| {
        let u = 0.5 * (z[0] + z[1]);
        if u <= 0.0 {
            return;
        }
        let w = cfg.diag_halfwidth(u);
        if (z[1] - z[0]).abs() < w {
            for (o, &s) in out.iter_mut().zip(ss) {
                *o = (s * u).exp() / (2.0 * w);
            }
        }
    };
    estimate_many(
        paths,
        cfg.n_batches,
        ss.len(),
        &Integrand {
            state: Some(&g),
            event: None,
            diag: None,
        },
    )
}

/// Laplace transform of `π` on the diagonal.
pub fn estimate_m(paths: &[PathRecord], cfg: &EstimatorConfig, s: C64) -> Result<LaplaceEstimate> {
    Ok(estimate_m_many(paths, cfg, &[s])?.remove(0))
}

pub fn estimate_m_many(paths: &[PathRecord], cfg: &EstimatorConfig, ss: &[C64]) -> Result<Vec<LaplaceEstimate>> {
    if ss.iter().any(|s| s.re > -cfg.margin) {
        return Err(Error::DomainViolation);
    }
    strip_many(paths, cfg, ss)
}

/// Laplace transform of `(∂1 − ∂2)π` on the diagonal, from two windows offset
/// by `±c` with `c` twice the window half-width: `∂1 − ∂2 = −2 ∂d`.
pub fn estimate_n(paths: &[PathRecord], cfg: &EstimatorConfig, s: C64) -> Result<LaplaceEstimate> {
    Ok(estimate_n_many(paths, cfg, &[s])?.remove(0))
}

pub fn estimate_n_many(paths: &[PathRecord], cfg: &EstimatorConfig, ss: &[C64]) -> Result<Vec<LaplaceEstimate>> {
    if ss.iter().any(|s| s.re > -cfg.margin) {
        return Err(Error::DomainViolation);
    }
    let g = |z: [f64; 2], out: &mut [C64]| {
        let u = 0.5 * (z[0] + z[1]);
        if u <= 0.0 {
            return;
        }
        let w = cfg.diag_halfwidth(u);
        let c = 2.0 * w;
        let d = z[1] - z[0];
        let sign = if (d - c).abs() < w {
            1.0
        } else if (d + c).abs() < w {
            -1.0
        } else {
            return;
        };
        for (o, &s) in out.iter_mut().zip(ss) {
            *o = -sign * (s * u).exp() / (2.0 * w * c);
        }
    };
    estimate_many(
        paths,
        cfg.n_batches,
        ss.len(),
        &Integrand {
            state: Some(&g),
            event: None,
            diag: None,
        },
    )
}

/// Laplace transform of the boundary measure on `axis` (1 or 2), in the
/// original variable: `∫ e^{x z} ν_axis(z) dz` over `z <= 0`.
pub fn estimate_ell(paths: &[PathRecord], cfg: &EstimatorConfig, axis: usize, x: C64) -> Result<LaplaceEstimate> {
    Ok(estimate_ell_many(paths, cfg, axis, &[x])?.remove(0))
}

pub fn ell_domain_ok(cfg: &EstimatorConfig, axis: usize, x: C64) -> bool {
    x.re >= cfg.ell_min_re(axis)
}

pub fn estimate_ell_many(paths: &[PathRecord], cfg: &EstimatorConfig, axis: usize, xs: &[C64]) -> Result<Vec<LaplaceEstimate>> {
    if !(axis == 1 || axis == 2) {
        return Err(Error::InvalidConfig("axis must be 1 or 2".into()));
    }
    if xs.iter().any(|&x| !ell_domain_ok(cfg, axis, x)) {
        return Err(Error::DomainViolation);
    }
    let i = axis - 1;
    let g = |e: &LtEvent, out: &mut [C64]| {
        let dl = e.dl[i];
        if dl > 0.0 {
            for (o, &x) in out.iter_mut().zip(xs) {
                *o = (x * e.z[i]).exp() * dl;
            }
        }
    };
    estimate_many(
        paths,
        cfg.n_batches,
        xs.len(),
        &Integrand {
            state: None,
            event: Some(&g),
            diag: None,
        },
    )
}

/// Laplace transform of the diagonal local-time measure along `u = max(z1, z2)`.
pub fn estimate_diag_lt(paths: &[PathRecord], cfg: &EstimatorConfig, s: C64) -> Result<LaplaceEstimate> {
    if s.re > -cfg.margin {
        return Err(Error::DomainViolation);
    }
    let g = |e: &LtEvent, out: &mut [C64]| {
        out[0] = (s * e.z[0].max(e.z[1])).exp() * e.dl[1];
    };
    estimate_one(
        paths,
        cfg.n_batches,
        &Integrand {
            state: None,
            event: None,
            diag: Some(&g),
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerDensities {
    pub nu1: LaplaceEstimate,
    pub nu2: LaplaceEstimate,
    pub e: LaplaceEstimate,
}

/// Boundary densities at the corner and the constant
/// `E = (1 − r1) ν1(0) − (1 − r2) ν2(0)`.
///
/// The fit is linear in the binned local time, so it is applied event by
/// event and inherits batch-means errors.
pub fn estimate_corner_densities(pr: &ModelParams, paths: &[PathRecord], cfg: &EstimatorConfig) -> Result<CornerDensities> {
    let (w0, w) = (cfg.corner_exclusion, cfg.corner_bandwidth);
    if !(w0 > 0.0 && w > 2.0 * w0) {
        return Err(Error::InvalidConfig("corner window too narrow".into()));
    }
    let coef = corner_fit_weights(w0, w);
    let nbins = coef.len();
    let ratio = (w / w0).ln() / nbins as f64;
    let bin = |t: f64| -> Option<usize> {
        if t <= w0 || t >= w {
            None
        } else {
            Some((((t / w0).ln() / ratio) as usize).min(nbins - 1))
        }
    };
    let near: [f64; 2] = paths.iter().flat_map(|p| p.stationary_events()).fold([0.0, 0.0], |acc, e| {
        [
            acc[0] + if bin(-e.z[0]).is_some() { e.dl[0] } else { 0.0 },
            acc[1] + if bin(-e.z[1]).is_some() { e.dl[1] } else { 0.0 },
        ]
    });
    if near[0] < 100.0 * w || near[1] < 100.0 * w {
        return Err(Error::InsufficientBoundaryVisits);
    }
    let [r1, r2] = pr.refl;
    let g = |e: &LtEvent, out: &mut [C64]| {
        let a = bin(-e.z[0]).map_or(0.0, |k| coef[k] * e.dl[0]);
        let b = bin(-e.z[1]).map_or(0.0, |k| coef[k] * e.dl[1]);
        out[0] = C64::new(a, 0.0);
        out[1] = C64::new(b, 0.0);
        out[2] = C64::new((1.0 - r1) * a - (1.0 - r2) * b, 0.0);
    };
    let mut v = estimate_many(
        paths,
        cfg.n_batches,
        3,
        &Integrand {
            state: None,
            event: Some(&g),
            diag: None,
        },
    )?;
    let e = v.pop().unwrap();
    let nu2 = v.pop().unwrap();
    let nu1 = v.pop().unwrap();
    Ok(CornerDensities { nu1, nu2, e })
}

/// Per-bin weights mapping local time per unit time in geometric bins of
/// `(w0, w)` to the intercept of a least-squares fit of `a + b·sqrt(t) + c·t`
/// to the bin densities.
fn corner_fit_weights(w0: f64, w: f64) -> Vec<f64> {
    const NBINS: usize = 12;
    let ratio = (w / w0).powf(1.0 / NBINS as f64);
    let edges: Vec<f64> = (0..=NBINS).map(|k| w0 * ratio.powi(k as i32)).collect();
    // bin averages of the basis functions
    let x = nalgebra::DMatrix::from_fn(NBINS, 3, |k, j| {
        let (a, b) = (edges[k], edges[k + 1]);
        match j {
            0 => 1.0,
            1 => (2.0 / 3.0) * (b.powf(1.5) - a.powf(1.5)) / (b - a),
            _ => 0.5 * (a + b),
        }
    });
    let xtx = x.transpose() * &x;
    let inv = xtx.try_inverse().expect("corner design has full rank");
    let rows = inv * x.transpose();
    (0..NBINS).map(|k| rows[(0, k)] / (edges[k + 1] - edges[k])).collect()
}

/// Lower bound on the exponential decay rate of `ν_axis`, read off the kernel:
/// the boundary transform is analytic up to the first of the branch point of
/// `Q_1` and the first zero of `C(p, Q_1(p))` (resp. `D`).
pub fn tail_rate_bound(pr: &ModelParams, axis: usize) -> f64 {
    let id = if axis == 1 { KernelId::U } else { KernelId::V };
    let Ok(fam) = BranchFamily::new(pr, id, Variable::QOverP) else {
        return 0.0;
    };
    let p2 = fam.bp_high;
    if p2 <= 0.0 {
        return 0.0;
    }
    let coef = |p: f64| -> f64 {
        let q = fam.quad.roots(C64::new(p, 0.0))[0];
        // V is U with the coordinates swapped, so its C is the original D
        let r = pr.refl[axis - 1];
        (1.0 - r) * p + q.re
    };
    let n = 4000;
    let mut prev = coef(p2 * 1e-6);
    for i in 1..n {
        let p = p2 * i as f64 / n as f64;
        let cur = coef(p);
        if cur == 0.0 || cur.signum() != prev.signum() {
            let (mut a, mut b) = (p2 * (i - 1) as f64 / n as f64, p);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if coef(m).signum() == coef(a).signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            return 0.5 * (a + b);
        }
        prev = cur;
    }
    p2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    /// Row-major, `values[i * n + j]` for `z1` cell `i` and `z2` cell `j`.
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    /// Mass recorded outside the window.
    pub outside: f64,
    /// Diagonal density `π(u, u)` at bin centers `u`.
    pub diag_u: Vec<f64>,
    pub diag: Vec<f64>,
    /// Boundary densities along each face at bin centers `z <= 0`.
    pub ray_z: Vec<f64>,
    pub nu1: Vec<f64>,
    pub nu2: Vec<f64>,
    pub corner: [f64; 2],
    pub e: f64,
}

impl DensityGrid {
    pub fn cell_width(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.cell_width()
    }

    pub fn total_mass(&self) -> f64 {
        let a = self.cell_width().powi(2);
        self.values.iter().sum::<f64>() * a
    }
}

pub fn default_window(pr: &ModelParams) -> f64 {
    5.0 / pr.mu[0].hypot(pr.mu[1])
}

/// Histogram estimate of `π` on `[lo, hi]²` with `n × n` cells, plus the
/// diagonal and boundary profiles.
pub fn estimate_density(pr: &ModelParams, paths: &[PathRecord], cfg: &EstimatorConfig, lo: f64, hi: f64, n: usize) -> Result<DensityGrid> {
    if paths.is_empty() {
        return Err(Error::MissingEstimate);
    }
    let width = (hi - lo) / n as f64;
    let nb = cfg.n_batches;
    let ncell = n * n;
    let mut sums = vec![vec![0.0f64; ncell]; nb];
    let mut outside = 0.0;
    let mut diag_sum = vec![0.0; n];
    let mut ray = [vec![0.0; n], vec![0.0; n]];
    let total: u128 = paths.iter().map(|p| (p.n_steps - p.burn_in_steps) as u128).sum();
    let mut off = 0u128;
    for p in paths {
        let b0 = p.burn_in_steps;
        let dt = p.record_dt();
        for (s, z) in p.stationary_states() {
            let i = ((z[0] - lo) / width).floor();
            let j = ((z[1] - lo) / width).floor();
            if i >= 0.0 && j >= 0.0 && (i as usize) < n && (j as usize) < n {
                let b = batch_of(off + (s - b0) as u128, total, nb);
                sums[b][i as usize * n + j as usize] += dt;
            } else {
                outside += dt;
            }
            let d = z[1] - z[0];
            let u = 0.5 * (z[0] + z[1]);
            let w = cfg.diag_halfwidth(u);
            if u > 0.0 && d.abs() < w {
                let k = ((u - lo) / width).floor();
                if k >= 0.0 && (k as usize) < n {
                    diag_sum[k as usize] += dt / (2.0 * w);
                }
            }
        }
        for e in p.stationary_events() {
            for ax in 0..2 {
                if e.dl[ax] > 0.0 {
                    let k = ((e.z[ax] - lo) / width).floor();
                    if k >= 0.0 && (k as usize) < n {
                        ray[ax][k as usize] += e.dl[ax];
                    }
                }
            }
        }
        off += (p.n_steps - b0) as u128;
    }
    let t_all = total as f64 * paths[0].step;
    let batch_t = t_all / nb as f64;
    let area = width * width;
    let mut values = vec![0.0; ncell];
    let mut se = vec![0.0; ncell];
    for c in 0..ncell {
        let means: Vec<f64> = (0..nb).map(|b| sums[b][c] / batch_t / area).collect();
        let m = means.iter().sum::<f64>() / nb as f64;
        let v = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / ((nb as f64 - 1.0).max(1.0) * nb as f64);
        values[c] = m;
        se[c] = v.sqrt();
    }
    let centers: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * width).collect();
    let diag = diag_sum.iter().map(|v| v / t_all / width).collect();
    let nu1: Vec<f64> = ray[0].iter().map(|v| v / t_all / width).collect();
    let nu2: Vec<f64> = ray[1].iter().map(|v| v / t_all / width).collect();
    let (corner, e) = match estimate_corner_densities(pr, paths, cfg) {
        Ok(c) => ([c.nu1.value.re, c.nu2.value.re], c.e.value.re),
        Err(_) => ([f64::NAN; 2], f64::NAN),
    };
    Ok(DensityGrid {
        lo,
        hi,
        n,
        values,
        se,
        outside: outside / t_all,
        diag_u: centers.clone(),
        diag,
        ray_z: centers,
        nu1,
        nu2,
        corner,
        e,
    })
}

/// Is every cell center in the state space?
pub fn cell_in_state_space(grid: &DensityGrid, i: usize, j: usize) -> bool {
    in_state_space([grid.center(i), grid.center(j)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake_path() -> PathRecord {
        PathRecord {
            kind: crate::simulate::PathKind::Original,
            step: 0.5,
            record_every: 1,
            n_steps: 4,
            burn_in_steps: 0,
            states: vec![[1.0, 1.0], [2.0, 0.5], [-1.0, 0.0], [0.0, -2.0], [3.0, 3.0]],
            events: vec![
                LtEvent {
                    step: 2,
                    z: [-1.0, 0.0],
                    dl: [0.25, 0.0],
                },
                LtEvent {
                    step: 3,
                    z: [0.0, -2.0],
                    dl: [0.0, 0.5],
                },
            ],
            diag: vec![],
            lt_total: [0.25, 0.5],
        }
    }

    #[test]
    fn hand_computed_time_averages() {
        let p = vec![fake_path()];
        let cfg = EstimatorConfig {
            n_batches: 2,
            ..EstimatorConfig::default()
        };
        // states 0..3 stand for the window of length 2
        let l = estimate_l(&p, &cfg, LRegion::Whole, C64::new(0.0, 0.0), C64::new(0.0, 0.0)).unwrap();
        assert!((l.value.re - 1.0).abs() < 1e-15);
        let l1 = estimate_l(&p, &cfg, LRegion::S1, C64::new(0.0, 0.0), C64::new(0.0, 0.0)).unwrap();
        // S1 holds (1,1) and (-1,0)
        assert!((l1.value.re - 0.5).abs() < 1e-15);
        let e1 = estimate_ell(&p, &cfg, 1, C64::new(0.0, 0.0)).unwrap();
        assert!((e1.value.re - 0.125).abs() < 1e-15);
        let e2 = estimate_ell(&p, &cfg, 2, C64::new(1.0, 0.0)).unwrap();
        assert!((e2.value.re - 0.25 * (-2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn domain_rules() {
        let z = C64::new(0.0, 0.0);
        assert!(l_domain_ok(LRegion::S1, z, z, 0.0));
        assert!(!l_domain_ok(LRegion::S1, C64::new(-0.1, 0.0), z, 0.0));
        assert!(!l_domain_ok(LRegion::S1, C64::new(0.1, 0.0), C64::new(0.0, 0.0), 0.0));
        assert!(l_domain_ok(LRegion::Whole, C64::new(0.0, 1.0), C64::new(0.0, -2.0), 0.0));
        assert!(!l_domain_ok(LRegion::Whole, C64::new(0.1, 1.0), z, 0.0));
        let cfg = EstimatorConfig::default();
        assert!(ell_domain_ok(&cfg, 1, z));
        assert!(!ell_domain_ok(&cfg, 1, C64::new(-0.01, 0.0)));
        let p = vec![fake_path()];
        assert_eq!(estimate_m(&p, &cfg, C64::new(0.5, 0.0)).unwrap_err(), Error::DomainViolation);
    }

    #[test]
    fn linear_combination_independent() {
        let a = LaplaceEstimate {
            value: C64::new(1.0, 0.0),
            se: [0.1, 0.2],
            n_effective: 10.0,
            batches: vec![],
        };
        let r = linear_combination(&[(C64::new(0.0, 1.0), &a)], C64::new(1.0, 0.0), SeMode::Independent);
        assert_eq!(r.value, C64::new(1.0, 1.0));
        assert!((r.se[0] - 0.2).abs() < 1e-15 && (r.se[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn tail_rate_symmetric_example() {
        // C(p, Q1(p)) = Q1(p) - p vanishes at p = 0.4, below p2 = sqrt(2) - 1
        let pr = ModelParams::symmetric(1.0, 0.0, -1.0, 2.0).unwrap();
        assert!((tail_rate_bound(&pr, 1) - 0.4).abs() < 1e-9);
        assert!((tail_rate_bound(&pr, 2) - 0.4).abs() < 1e-9);
        let d = ModelParams::default();
        let f = BranchFamily::new(&d, KernelId::U, Variable::QOverP).unwrap();
        assert!((tail_rate_bound(&d, 1) - f.bp_high).abs() < 1e-12);
    }
}
