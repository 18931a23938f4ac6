//! The boundary value problem on the cut `(−∞, q1]`: the matrix `G(q)` with
//! `L⁺ = G L⁻` for `L(q) = [ℓ1(P1ᵘ(q)), ℓ2(P1ᵛ(q))]`, its Monte Carlo check,
//! the conformal map of the domain bounded by the cut image onto the unit
//! disk, and a Nyström solver for the Fredholm equation on the circle.
//!
//! The boundary transforms here use the kernel variable: `ℓ(p)` stands for
//! the estimator's `ℓ` at `x = −p`. The `+` side of the cut is the limit
//! from below.

use crate::error::{Error, Result};
use crate::estimate::{ell_domain_ok, linear_combination, LaplaceEstimate, SeMode};
use crate::feq::{Estimates, ResidualReport};
use crate::kernel::{coeffs_abcd, hyperbola, BranchFamily, KernelId, Side, Variable, C64};
use crate::model::ModelParams;
use nalgebra::{DMatrix, DVector, Matrix2};
use serde::Serialize;
use std::f64::consts::PI;

const CUT_TOL: f64 = 1e-12;
const ZERO_TOL: f64 = 1e-12;

pub type M2 = Matrix2<C64>;

/// One-sided values at a cut point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutValues {
    pub q: f64,
    pub pu: C64,
    pub pv: C64,
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
}

fn families(pr: &ModelParams) -> Result<(BranchFamily, BranchFamily)> {
    Ok((
        BranchFamily::new(pr, KernelId::U, Variable::POverQ)?,
        BranchFamily::new(pr, KernelId::V, Variable::POverQ)?,
    ))
}

/// Upper end `q1` of the cut, shared by both kernels.
pub fn cut_end(pr: &ModelParams) -> Result<f64> {
    Ok(BranchFamily::new(pr, KernelId::U, Variable::POverQ)?.bp_low)
}

pub fn cut_values(pr: &ModelParams, q: f64, side: Side) -> Result<CutValues> {
    let (fu, fv) = families(pr)?;
    if !(q <= fu.bp_low - CUT_TOL) {
        return Err(Error::NotOnCut);
    }
    let pu = fu.eval_cut(1, q, side)?;
    let pv = fv.eval_cut(1, q, side)?;
    let qc = C64::new(q, 0.0);
    let cu = coeffs_abcd(pr, pu, qc);
    let cv = coeffs_abcd(pr, pv, qc);
    Ok(CutValues {
        q,
        pu,
        pv,
        alpha: cu.a,
        beta: cv.b,
        gamma: cu.c,
        delta: cv.d,
    })
}

/// `Δ(q) = −(A(P1ᵘ, q) + B(P1ᵛ, q))` on the `+` side, with the second form
/// `−θ(q + P1ᵘ + P1ᵛ)`.
pub fn delta_q(pr: &ModelParams, q: f64) -> Result<C64> {
    Ok(delta_forms(pr, q)?.0)
}

pub fn delta_forms(pr: &ModelParams, q: f64) -> Result<(C64, C64)> {
    let v = cut_values(pr, q, Side::Below)?;
    let d1 = -(v.alpha + v.beta);
    let d2 = -pr.theta() * (q + v.pu + v.pv);
    if d1.norm() < ZERO_TOL {
        return Err(Error::DeltaZero);
    }
    Ok((d1, d2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GMatrix {
    pub q: f64,
    #[serde(serialize_with = "ser_m2")]
    pub entries: M2,
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
    #[serde(rename = "Delta")]
    pub delta_q: C64,
}

fn ser_m2<S: serde::Serializer>(m: &M2, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]].serialize(s)
}

impl GMatrix {
    pub fn det(&self) -> C64 {
        self.entries.determinant()
    }

    /// `(conj(γδ)/(γδ)) (α+β)/conj(α+β)`, which has modulus one. Expanding the
    /// entries gives `|α+β|²` in the numerator, so there is no leading minus.
    pub fn det_closed_form(&self) -> C64 {
        let gd = self.gamma * self.delta;
        let s = self.alpha + self.beta;
        (gd.conj() / gd) * (s / s.conj())
    }
}

fn g_from_values(v: &CutValues) -> Result<GMatrix> {
    let (a, b, g, d) = (v.alpha, v.beta, v.gamma, v.delta);
    if g.norm() < ZERO_TOL || d.norm() < ZERO_TOL {
        return Err(Error::CoefficientZero);
    }
    let dl = -(a + b);
    if dl.norm() < ZERO_TOL {
        return Err(Error::DeltaZero);
    }
    let k = dl.conj().inv();
    let entries = M2::new(
        -k * g.conj() * (a + b.conj()) / g,
        k * d.conj() * (a.conj() - a) / g,
        k * g.conj() * (b.conj() - b) / d,
        -k * d.conj() * (b + a.conj()) / d,
    );
    Ok(GMatrix {
        q: v.q,
        entries,
        alpha: a,
        beta: b,
        gamma: g,
        delta: d,
        delta_q: dl,
    })
}

/// `G(q)` mapping the values above the cut to the values below.
pub fn g_matrix(pr: &ModelParams, q: f64) -> Result<GMatrix> {
    g_matrix_side(pr, q, Side::Below)
}

/// The matrix sending the `side.flip()` values to the `side` values. For
/// `Side::Above` this is the inverse of `g_matrix`, which is its conjugate.
pub fn g_matrix_side(pr: &ModelParams, q: f64, side: Side) -> Result<GMatrix> {
    g_from_values(&cut_values(pr, q, side)?)
}

fn ell_at(est: &Estimates, axis: usize, p: C64) -> Result<LaplaceEstimate> {
    est.ell(axis, -p)
}

/// Whether the four boundary-transform arguments at `q` are within the
/// estimator's domain.
pub fn cut_point_admissible(pr: &ModelParams, est: &Estimates, q: f64) -> bool {
    match cut_values(pr, q, Side::Below) {
        Ok(v) => ell_domain_ok(&est.cfg, 1, -v.pu) && ell_domain_ok(&est.cfg, 2, -v.pv),
        Err(_) => false,
    }
}

/// `n` cut points `q1 − k·spacing`, split into admissible and rejected.
pub fn scan_cut(pr: &ModelParams, est: &Estimates, n: usize, spacing: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let q1 = cut_end(pr)?;
    let (mut ok, mut bad) = (Vec::new(), Vec::new());
    for k in 1..=n {
        let q = q1 - spacing * k as f64;
        if cut_point_admissible(pr, est, q) {
            ok.push(q);
        } else {
            bad.push(q);
        }
    }
    Ok((ok, bad))
}

/// Residual `L⁺ − G L⁻` at a cut point, one report per component.
pub fn check_boundary_condition(pr: &ModelParams, est: &Estimates, q: f64) -> Result<[ResidualReport; 2]> {
    let g = g_matrix(pr, q)?;
    let v = cut_values(pr, q, Side::Below)?;
    if !cut_point_admissible(pr, est, q) {
        return Err(Error::DomainViolation);
    }
    let l1p = ell_at(est, 1, v.pu)?;
    let l1m = ell_at(est, 1, v.pu.conj())?;
    let l2p = ell_at(est, 2, v.pv)?;
    let l2m = ell_at(est, 2, v.pv.conj())?;
    let e = g.entries;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let r1 = linear_combination(&[(one, &l1p), (-e[(0, 0)], &l1m), (-e[(0, 1)], &l2m)], zero, SeMode::Joint);
    let r2 = linear_combination(&[(one, &l2p), (-e[(1, 0)], &l1m), (-e[(1, 1)], &l2m)], zero, SeMode::Joint);
    let pt = vec![C64::new(q, 0.0)];
    Ok([
        ResidualReport::from_estimate("bvp_vector_1", pt.clone(), &r1),
        ResidualReport::from_estimate("bvp_vector_2", pt, &r2),
    ])
}

/// Branch values off the cut, or the `+` limit on it.
fn p1_pair(pr: &ModelParams, q: C64) -> Result<(C64, C64)> {
    let (fu, fv) = families(pr)?;
    if fu.is_on_cut(q) {
        let v = cut_values(pr, q.re, Side::Below)?;
        return Ok((v.pu, v.pv));
    }
    Ok((fu.eval(1, q)?, fv.eval(1, q)?))
}

/// `m(q)` and `n(q)` assembled from the boundary transforms through the
/// pair of equations on the kernel curves.
pub fn derived_mn(pr: &ModelParams, est: &Estimates, q: C64) -> Result<(LaplaceEstimate, LaplaceEstimate)> {
    let (pu, pv) = p1_pair(pr, q)?;
    let cu = coeffs_abcd(pr, pu, q);
    let cv = coeffs_abcd(pr, pv, q);
    let (a, b, c, d) = (cu.a, cv.b, cu.c, cv.d);
    let dl = -(a + b);
    if dl.norm() < ZERO_TOL {
        return Err(Error::DeltaZero);
    }
    let l1 = ell_at(est, 1, pu)?;
    let l2 = ell_at(est, 2, pv)?;
    let e = est.corner()?.e;
    let th = pr.theta();
    let zero = C64::new(0.0, 0.0);
    let m = linear_combination(&[(c / dl, &l1), (d / dl, &l2)], zero, est.mode);
    let n = linear_combination(
        &[(b * c / (th * dl), &l1), (-a * d / (th * dl), &l2), (C64::new(-1.0 / th, 0.0), &e)],
        zero,
        est.mode,
    );
    Ok((m, n))
}

/// Conformal map of the domain bounded by the cut image `H₊` of a kernel
/// (the component containing the far focus) onto the unit disk.
///
/// With `p = xc − c·cosh(s)`, the domain is the half strip `|Im s| < ψ`
/// folded along `Re s = 0`, and `w = cosh(π s / 2ψ)` takes it onto the right
/// half plane. The focus goes to `0`, the vertex of `H₊` to `−1`, infinity to `1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiskMap {
    pub xc: f64,
    pub c: f64,
    pub psi: f64,
    /// Vertex of `H₊`.
    pub vertex: f64,
}

impl DiskMap {
    pub fn new(pr: &ModelParams, id: KernelId) -> Result<Self> {
        let h = hyperbola(pr, id, Variable::POverQ)?;
        let (xc, al, be) = h.canonical()?;
        let fam = BranchFamily::new(pr, id, Variable::POverQ)?;
        let vertex = fam.eval_cut(1, fam.bp_low, Side::Below)?.re;
        let c = al.hypot(be);
        let v0 = (al / c).acos();
        let psi = if vertex > xc { PI - v0 } else { v0 };
        Ok(DiskMap { xc, c, psi, vertex })
    }

    pub fn focus(&self) -> f64 {
        self.xc - self.c
    }

    fn strip(&self, p: C64) -> C64 {
        let s = (-(p - self.xc) / self.c).acosh();
        if s.re < 0.0 {
            -s
        } else {
            s
        }
    }

    /// `|Im s| − ψ`: negative inside, zero on `H₊`.
    pub fn boundary_gap(&self, p: C64) -> f64 {
        self.strip(p).im.abs() - self.psi
    }

    pub fn to_disk(&self, p: C64) -> Result<C64> {
        if !(p.re.is_finite() && p.im.is_finite()) || self.boundary_gap(p) > 1e-9 {
            return Err(Error::OutsideDomain);
        }
        let w = (self.strip(p) * (PI / (2.0 * self.psi))).cosh();
        let z = (w - 1.0) / (w + 1.0);
        // keep real inputs exactly real
        Ok(if p.im == 0.0 { C64::new(z.re, 0.0) } else { z })
    }

    pub fn from_disk(&self, z: C64) -> Result<C64> {
        if z.norm() > 1.0 + 1e-12 || (z - 1.0).norm() < 1e-15 {
            return Err(Error::OutsideDomain);
        }
        let w = (1.0 + z) / (1.0 - z);
        let s = w.acosh() * (2.0 * self.psi / PI);
        Ok(self.xc - self.c * s.cosh())
    }

    /// Point of `H₊` at the hyperbolic parameter `t`.
    pub fn boundary_point(&self, t: f64) -> C64 {
        let s = C64::new(t.abs(), self.psi * t.signum());
        self.xc - self.c * s.cosh()
    }
}

pub fn conformal_to_disk(pr: &ModelParams, id: KernelId, p: C64) -> Result<C64> {
    DiskMap::new(pr, id)?.to_disk(p)
}

/// The circle version `H(z)` of `G`: for `|z| = 1` the point `ω_u⁻¹(z)` of `H₊ᵘ`
/// fixes `q` and a side of the cut, and the second component follows the
/// same `q`. Then `Φ⁺(z) = H(z) Φ⁻(z)` with `Φ⁻(z) = Φ⁺(1/z)`.
pub struct CircleProblem {
    pub params: ModelParams,
    pub map: DiskMap,
    fam: BranchFamily,
}

impl CircleProblem {
    pub fn new(pr: &ModelParams) -> Result<Self> {
        Ok(CircleProblem {
            params: *pr,
            map: DiskMap::new(pr, KernelId::U)?,
            fam: BranchFamily::new(pr, KernelId::U, Variable::POverQ)?,
        })
    }

    /// Cut point and side for a point of the unit circle.
    pub fn cut_point(&self, z: C64) -> Result<(f64, Side)> {
        let p = self.map.from_disk(z / z.norm())?;
        let k = &self.fam.quad;
        // on the cut Re P = −(b1 q + b0) / 2a
        let q = (-2.0 * k.a * p.re - k.b0) / k.b1;
        let q = q.min(self.fam.bp_low - CUT_TOL);
        let below = self.fam.eval_cut(1, q, Side::Below)?;
        let side = if (below.im >= 0.0) == (p.im >= 0.0) { Side::Below } else { Side::Above };
        Ok((q, side))
    }

    pub fn h(&self, z: C64) -> Result<M2> {
        let (q, side) = self.cut_point(z)?;
        Ok(g_matrix_side(&self.params, q, side)?.entries)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FredholmSolution {
    pub angles: Vec<f64>,
    #[serde(skip)]
    pub nodes: Vec<C64>,
    pub phi_minus: Vec<[C64; 2]>,
    pub phi_inf: [C64; 2],
    /// Largest mismatch of the equation at off-node points, relative to `|Φ⁻(∞)|`.
    pub residual: f64,
    /// Relative size of the wrong-sign Fourier modes of `Φ⁻` and `HΦ⁻`.
    pub analyticity_defect: f64,
    pub condition: f64,
    /// `max_i |Φ⁺_i(0) − Φ⁻_i(∞)| / |Φ⁻(∞)|`.
    pub interior_mismatch: f64,
    #[serde(skip)]
    h_nodes: Vec<M2>,
}

fn nodes(n: usize) -> (Vec<f64>, Vec<C64>) {
    // half-offset nodes avoid z = ±1
    let angles: Vec<f64> = (0..n).map(|k| 2.0 * PI * (k as f64 + 0.5) / n as f64).collect();
    let z = angles.iter().map(|&a| C64::from_polar(1.0, a)).collect();
    (angles, z)
}

fn h_derivative(h: &dyn Fn(C64) -> Result<M2>, phi: f64) -> Result<M2> {
    let eps = 1e-5;
    let hp = h(C64::from_polar(1.0, phi + eps))?;
    let hm = h(C64::from_polar(1.0, phi - eps))?;
    let z = C64::from_polar(1.0, phi);
    // dH/dz = (dH/dφ) / (i z)
    Ok((hp - hm) / (C64::new(2.0 * eps, 0.0) * C64::i() * z))
}

fn inv2(m: &M2) -> Result<M2> {
    m.try_inverse().ok_or(Error::SingularSystem)
}

/// Nyström solution of
/// `Φ⁻(z0) − (1/2πi) ∮ [H(z0)⁻¹ H(z) − I] / (z − z0) Φ⁻(z) dz = Φ⁻(∞)`
/// with the trapezoid rule on `n` equispaced nodes. No pole test.
pub fn nystrom_solve(h: &dyn Fn(C64) -> Result<M2>, n: usize, phi_inf: [C64; 2]) -> Result<FredholmSolution> {
    if n < 16 {
        return Err(Error::InvalidConfig("at least 16 nodes".into()));
    }
    let (angles, z) = nodes(n);
    let hs: Vec<M2> = z.iter().map(|&zk| h(zk)).collect::<Result<_>>()?;
    let hinv: Vec<M2> = hs.iter().map(inv2).collect::<Result<_>>()?;
    let w = 1.0 / n as f64;
    let mut a = DMatrix::<C64>::identity(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let blk = if i == j {
                hinv[i] * h_derivative(h, angles[i])? * (z[i] * w)
            } else {
                (hinv[i] * hs[j] - M2::identity()) * (z[j] * w / (z[j] - z[i]))
            };
            for r in 0..2 {
                for c in 0..2 {
                    a[(2 * i + r, 2 * j + c)] -= blk[(r, c)];
                }
            }
        }
    }
    let sv = a.clone().singular_values();
    let condition = sv.max() / sv.min();
    if !condition.is_finite() || condition > 1e12 {
        return Err(Error::SingularSystem);
    }
    let rhs = DVector::from_fn(2 * n, |k, _| phi_inf[k % 2]);
    let x = a.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    let phi_minus: Vec<[C64; 2]> = (0..n).map(|k| [x[2 * k], x[2 * k + 1]]).collect();
    let mut sol = FredholmSolution {
        angles,
        nodes: z,
        phi_minus,
        phi_inf,
        residual: 0.0,
        analyticity_defect: 0.0,
        condition,
        interior_mismatch: 0.0,
        h_nodes: hs,
    };
    sol.residual = sol.equation_residual(h)?;
    sol.analyticity_defect = sol.defect();
    let at0 = sol.phi_plus(C64::new(0.0, 0.0))?;
    let scale = phi_inf[0].norm().max(phi_inf[1].norm()).max(1e-300);
    sol.interior_mismatch = (0..2).map(|i| (at0[i] - phi_inf[i]).norm()).fold(0.0, f64::max) / scale;
    Ok(sol)
}

/// [`nystrom_solve`], rejecting solutions whose Cauchy reconstruction at the
/// center misses `Φ⁻(∞)` by more than 10%.
pub fn fredholm_solve_with(h: &dyn Fn(C64) -> Result<M2>, n: usize, phi_inf: [C64; 2]) -> Result<FredholmSolution> {
    let sol = nystrom_solve(h, n, phi_inf)?;
    if sol.interior_mismatch > 0.1 {
        return Err(Error::PoleSuspected);
    }
    Ok(sol)
}

fn fourier(values: &[C64]) -> Vec<(i64, C64)> {
    let n = values.len();
    let half = (n / 2) as i64;
    let (angles, _) = nodes(n);
    (-half + 1..=half)
        .map(|m| {
            let c = values
                .iter()
                .zip(&angles)
                .map(|(v, &a)| v * C64::from_polar(1.0, -(m as f64) * a))
                .sum::<C64>()
                / n as f64;
            (m, c)
        })
        .collect()
}

impl FredholmSolution {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Trigonometric interpolant of the nodal `Φ⁻`.
    pub fn phi_minus_interp(&self, phi: f64) -> [C64; 2] {
        let mut out = [C64::new(0.0, 0.0); 2];
        for (i, o) in out.iter_mut().enumerate() {
            let v: Vec<C64> = self.phi_minus.iter().map(|p| p[i]).collect();
            let n = v.len() as i64;
            *o = fourier(&v)
                .into_iter()
                .map(|(m, c)| {
                    // split the Nyquist mode evenly
                    let c = if m == n / 2 { c * 0.5 } else { c };
                    let base = c * C64::from_polar(1.0, m as f64 * phi);
                    if m == n / 2 {
                        base + c * C64::from_polar(1.0, -(m as f64) * phi)
                    } else {
                        base
                    }
                })
                .sum();
        }
        out
    }

    fn lhs_at(&self, h: &dyn Fn(C64) -> Result<M2>, phi0: f64, m: usize) -> Result<[C64; 2]> {
        let z0 = C64::from_polar(1.0, phi0);
        let h0inv = inv2(&h(z0)?)?;
        let mut acc = nalgebra::Vector2::<C64>::zeros();
        for k in 0..m {
            let a = phi0 + 2.0 * PI * (k as f64 + 0.5) / m as f64;
            let zk = C64::from_polar(1.0, a);
            let f = self.phi_minus_interp(a);
            let v = nalgebra::Vector2::new(f[0], f[1]);
            let blk = (h0inv * h(zk)? - M2::identity()) / (zk - z0);
            acc += blk * v * (zk / m as f64);
        }
        let f0 = self.phi_minus_interp(phi0);
        Ok([f0[0] - acc[0], f0[1] - acc[1]])
    }

    /// Equation residual at the midpoints between nodes, with a finer rule.
    fn equation_residual(&self, h: &dyn Fn(C64) -> Result<M2>) -> Result<f64> {
        let n = self.n();
        let scale = self.phi_inf[0].norm().max(self.phi_inf[1].norm()).max(1e-300);
        let mut worst: f64 = 0.0;
        // node midpoints, skipping z = 1
        for k in (0..n - 1).step_by((n / 16).max(1)) {
            let phi0 = 2.0 * PI * (k as f64 + 1.0) / n as f64;
            let l = self.lhs_at(h, phi0, 4 * n)?;
            for i in 0..2 {
                worst = worst.max((l[i] - self.phi_inf[i]).norm() / scale);
            }
        }
        Ok(worst)
    }

    fn defect(&self) -> f64 {
        let (mut bad, mut tot) = (0.0, 0.0);
        for i in 0..2 {
            let minus: Vec<C64> = self.phi_minus.iter().map(|p| p[i]).collect();
            let plus: Vec<C64> = self
                .phi_minus
                .iter()
                .zip(&self.h_nodes)
                .map(|(p, hm)| hm[(i, 0)] * p[0] + hm[(i, 1)] * p[1])
                .collect();
            for (m, c) in fourier(&minus) {
                tot += c.norm_sqr();
                if m > 0 {
                    bad += c.norm_sqr();
                }
            }
            for (m, c) in fourier(&plus) {
                tot += c.norm_sqr();
                if m < 0 {
                    bad += c.norm_sqr();
                }
            }
        }
        (bad / tot.max(1e-300)).sqrt()
    }

    /// `Φ⁺` inside the disk by the Cauchy integral of `H Φ⁻`.
    pub fn phi_plus(&self, z: C64) -> Result<[C64; 2]> {
        if z.norm() >= 1.0 {
            return Err(Error::OutsideDomain);
        }
        let n = self.n() as f64;
        let mut out = [C64::new(0.0, 0.0); 2];
        for ((zk, p), hm) in self.nodes.iter().zip(&self.phi_minus).zip(&self.h_nodes) {
            let k = zk / ((zk - z) * n);
            for (i, o) in out.iter_mut().enumerate() {
                *o += k * (hm[(i, 0)] * p[0] + hm[(i, 1)] * p[1]);
            }
        }
        Ok(out)
    }
}

/// `Φ⁻(∞) = Φ⁺(0)`: the boundary transforms at the focus of each cut image.
pub fn phi_at_infinity(pr: &ModelParams, est: &Estimates) -> Result<[LaplaceEstimate; 2]> {
    let fu = DiskMap::new(pr, KernelId::U)?.focus();
    let fv = DiskMap::new(pr, KernelId::V)?.focus();
    Ok([ell_at(est, 1, C64::new(fu, 0.0))?, ell_at(est, 2, C64::new(fv, 0.0))?])
}

pub fn fredholm_solve(pr: &ModelParams, est: &Estimates, n: usize) -> Result<FredholmSolution> {
    let inf = phi_at_infinity(pr, est)?;
    fredholm_solve_at(pr, n, [inf[0].value, inf[1].value])
}

pub fn fredholm_solve_at(pr: &ModelParams, n: usize, phi_inf: [C64; 2]) -> Result<FredholmSolution> {
    let cp = CircleProblem::new(pr)?;
    fredholm_solve_with(&|z| cp.h(z), n, phi_inf)
}

/// The discretized solve without the pole test, for convergence studies.
pub fn nystrom_solve_at(pr: &ModelParams, n: usize, phi_inf: [C64; 2]) -> Result<FredholmSolution> {
    let cp = CircleProblem::new(pr)?;
    nystrom_solve(&|z| cp.h(z), n, phi_inf)
}

/// The solved first component at a point `p` of the domain.
pub fn probe_ell1(pr: &ModelParams, sol: &FredholmSolution, p: C64) -> Result<C64> {
    let z = DiskMap::new(pr, KernelId::U)?.to_disk(p)?;
    Ok(sol.phi_plus(z)?[0])
}
