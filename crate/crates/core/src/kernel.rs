//! Kernels `K(x, y)`, `U(p, q)`, `V(p, q)` and their algebraic branches.
//!
//! `U` comes from `K` by `p = -x, q = x + y`; `V` by `p = -y, q = x + y`.
//! Each kernel is quadratic in either variable, so a branch family is a
//! quadratic `a z^2 + (b1 w + b0) z + (c2 w^2 + c1 w + c0)` solved for `z`.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use num_complex::Complex64;
use serde::Serialize;

pub type C64 = Complex64;

const ON_CUT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelId {
    U,
    V,
    Sym,
}

/// `POverQ`: solve the kernel for `p` given `q`. `QOverP`: the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variable {
    POverQ,
    QOverP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Above => Side::Below,
            Side::Below => Side::Above,
        }
    }
}

pub fn kernel_k(pr: &ModelParams, x: C64, y: C64) -> C64 {
    let [s1, s2] = pr.sigma;
    let [m1, m2] = pr.mu;
    0.5 * (s1 * x * x + 2.0 * pr.rho * x * y + s2 * y * y) + m1 * x + m2 * y
}

fn uv_params(pr: &ModelParams, id: KernelId) -> Result<ModelParams> {
    match id {
        KernelId::U => Ok(*pr),
        KernelId::V => Ok(pr.swapped()),
        KernelId::Sym => {
            pr.require_symmetric()?;
            Ok(*pr)
        }
    }
}

/// `U(p,q) = θp² + σ₂q²/2 + (σ₂−ρ)pq + (μ₂−μ₁)p + μ₂q`, `V` with indices swapped.
pub fn kernel_uv(pr: &ModelParams, id: KernelId, p: C64, q: C64) -> Result<C64> {
    let pr = uv_params(pr, id)?;
    let [m1, m2] = pr.mu;
    let s2 = pr.sigma[1];
    Ok(pr.theta() * p * p + 0.5 * s2 * q * q + (s2 - pr.rho) * p * q + (m2 - m1) * p + m2 * q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coeffs {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

pub fn coeffs_abcd(pr: &ModelParams, p: C64, q: C64) -> Coeffs {
    let [s1, s2] = pr.sigma;
    let [m1, m2] = pr.mu;
    let [r1, r2] = pr.refl;
    let th = pr.theta();
    let asym = (s2 - s1) * q / 2.0 + (m2 - m1);
    Coeffs {
        a: th * (2.0 * p + q) / 2.0 + asym,
        b: th * (2.0 * p + q) / 2.0 - asym,
        c: (1.0 - r1) * p + q,
        d: (1.0 - r2) * p + q,
    }
}

/// `k(x,y) = θ(y−x)/2 + (σ₂−σ₁)(x+y)/2 + μ₂ − μ₁`.
pub fn poly_k(pr: &ModelParams, x: C64, y: C64) -> C64 {
    pr.theta() * (y - x) / 2.0 + (pr.sigma[1] - pr.sigma[0]) * (x + y) / 2.0 + (pr.mu[1] - pr.mu[0])
}

pub fn poly_k1(pr: &ModelParams, x: C64, y: C64) -> C64 {
    pr.refl[0] * x + y
}

pub fn poly_k2(pr: &ModelParams, x: C64, y: C64) -> C64 {
    x + pr.refl[1] * y
}

/// Coefficients of a value at a fixed second argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCoeffs {
    pub a: f64,
    pub b: C64,
    pub c: C64,
}

/// `a z² + (b1 w + b0) z + (c2 w² + c1 w + c0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadratic {
    pub a: f64,
    pub b1: f64,
    pub b0: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl Quadratic {
    pub fn at(&self, w: C64) -> QuadraticCoeffs {
        QuadraticCoeffs {
            a: self.a,
            b: self.b1 * w + self.b0,
            c: (self.c2 * w + self.c1) * w + self.c0,
        }
    }

    pub fn eval(&self, z: C64, w: C64) -> C64 {
        let k = self.at(w);
        (k.a * z + k.b) * z + k.c
    }

    /// Discriminant `b(w)² − 4a c(w)` as coefficients `[w², w, 1]`.
    pub fn disc_poly(&self) -> [f64; 3] {
        let a = self.a;
        [
            self.b1 * self.b1 - 4.0 * a * self.c2,
            2.0 * self.b1 * self.b0 - 4.0 * a * self.c1,
            self.b0 * self.b0 - 4.0 * a * self.c0,
        ]
    }

    pub fn disc(&self, w: f64) -> f64 {
        let [d2, d1, d0] = self.disc_poly();
        (d2 * w + d1) * w + d0
    }

    /// Both roots, labeled: smaller real part first, ties by smaller imaginary part.
    pub fn roots(&self, w: C64) -> [C64; 2] {
        let k = self.at(w);
        let disc = k.b * k.b - 4.0 * k.a * k.c;
        let mut sq = disc.sqrt();
        if (k.b.conj() * sq).re < 0.0 {
            sq = -sq;
        }
        let t = -(k.b + sq) / 2.0;
        let (z1, z2) = if t == C64::new(0.0, 0.0) {
            let z = -k.b / (2.0 * k.a);
            (z, z)
        } else {
            (t / k.a, k.c / t)
        };
        order(z1, z2)
    }
}

fn order(z1: C64, z2: C64) -> [C64; 2] {
    if z1.re < z2.re || (z1.re == z2.re && z1.im <= z2.im) {
        [z1, z2]
    } else {
        [z2, z1]
    }
}

pub fn quadratic(pr: &ModelParams, id: KernelId, var: Variable) -> Result<Quadratic> {
    let pr = uv_params(pr, id)?;
    let [m1, m2] = pr.mu;
    let s2 = pr.sigma[1];
    let th = pr.theta();
    let cross = s2 - pr.rho;
    Ok(match var {
        Variable::POverQ => Quadratic {
            a: th,
            b1: cross,
            b0: m2 - m1,
            c2: 0.5 * s2,
            c1: m2,
            c0: 0.0,
        },
        Variable::QOverP => Quadratic {
            a: 0.5 * s2,
            b1: cross,
            b0: m2,
            c2: th,
            c1: m2 - m1,
            c0: 0.0,
        },
    })
}

/// Real roots of `a x² + b x + c`, ascending.
pub fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Result<(f64, f64)> {
    let d = b * b - 4.0 * a * c;
    if d < 0.0 || a == 0.0 {
        return Err(Error::ComplexRoots);
    }
    let t = -0.5 * (b + b.signum() * d.sqrt());
    let (x1, x2) = if t == 0.0 { (0.0, 0.0) } else { (t / a, c / t) };
    Ok((x1.min(x2), x1.max(x2)))
}

/// A kernel's two branches over one variable, with cut `(-inf, low] ∪ [high, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchFamily {
    pub kernel: KernelId,
    pub variable: Variable,
    pub quad: Quadratic,
    pub bp_low: f64,
    pub bp_high: f64,
}

impl BranchFamily {
    pub fn new(pr: &ModelParams, id: KernelId, var: Variable) -> Result<Self> {
        let quad = quadratic(pr, id, var)?;
        let [d2, d1, d0] = quad.disc_poly();
        let (lo, hi) = real_quadratic_roots(d2, d1, d0)?;
        Ok(BranchFamily {
            kernel: id,
            variable: var,
            quad,
            bp_low: lo,
            bp_high: hi,
        })
    }

    pub fn on_cut_real(&self, w: f64) -> bool {
        w <= self.bp_low || w >= self.bp_high
    }

    /// On the open cut, where the two one-sided limits differ. The branch
    /// points themselves are fine: the roots coincide there.
    pub fn is_on_cut(&self, w: C64) -> bool {
        w.im.abs() <= ON_CUT_TOL && (w.re < self.bp_low || w.re > self.bp_high)
    }

    /// Branch `i` (1 or 2) off the cut.
    pub fn eval(&self, i: usize, w: C64) -> Result<C64> {
        check_index(i)?;
        if self.is_on_cut(w) {
            return Err(Error::OnCut);
        }
        Ok(self.quad.roots(w)[i - 1])
    }

    pub fn eval_both(&self, w: C64) -> Result<[C64; 2]> {
        if self.is_on_cut(w) {
            return Err(Error::OnCut);
        }
        Ok(self.quad.roots(w))
    }

    /// One-sided limit of branch `i` at a real cut point.
    pub fn eval_cut(&self, i: usize, w: f64, side: Side) -> Result<C64> {
        check_index(i)?;
        if !self.on_cut_real(w) {
            return Err(Error::NotOnCut);
        }
        let q = &self.quad;
        let x = -(q.b1 * w + q.b0) / (2.0 * q.a);
        let y = (-q.disc(w)).max(0.0).sqrt() / (2.0 * q.a.abs());
        let eta = 1e-6 * (1.0 + w.abs());
        let probe = match side {
            Side::Above => C64::new(w, eta),
            Side::Below => C64::new(w, -eta),
        };
        let near = q.roots(probe)[i - 1];
        let (u, v) = (C64::new(x, y), C64::new(x, -y));
        Ok(if (u - near).norm() <= (v - near).norm() { u } else { v })
    }

    /// Sample points on both cut rays: `n` points on each, spaced geometrically
    /// from the branch point out to distance `span`.
    pub fn cut_samples(&self, n: usize, span: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * n);
        for k in 0..n {
            let d = span * ((k as f64 + 0.5) / n as f64).powi(2);
            out.push(self.bp_low - d);
            out.push(self.bp_high + d);
        }
        out
    }
}

fn check_index(i: usize) -> Result<()> {
    if i == 1 || i == 2 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("branch index {i} is not 1 or 2")))
    }
}

pub fn branch_points(pr: &ModelParams, id: KernelId, var: Variable) -> Result<BranchFamily> {
    BranchFamily::new(pr, id, var)
}

pub fn branch_eval(pr: &ModelParams, id: KernelId, var: Variable, i: usize, w: C64) -> Result<C64> {
    BranchFamily::new(pr, id, var)?.eval(i, w)
}

/// Real conic `A x² + B y² + C x + D = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hyperbola {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HyperbolaPart {
    /// Right of the right branch.
    InsidePlus,
    /// Left of the left branch.
    InsideMinus,
    /// Between the branches.
    Between,
}

impl Hyperbola {
    pub fn eval(&self, z: C64) -> f64 {
        let (x, y) = (z.re, z.im);
        self.a * x * x + self.b * y * y + self.c * x + self.d
    }

    /// Rescaled so that `A = 1`.
    pub fn normalized(&self) -> Hyperbola {
        let s = self.a;
        Hyperbola {
            a: 1.0,
            b: self.b / s,
            c: self.c / s,
            d: self.d / s,
        }
    }

    pub fn center_x(&self) -> f64 {
        -self.c / (2.0 * self.a)
    }

    /// Canonical form `(x − xc)²/α² − y²/β² = 1`, returns `(xc, α, β)`.
    pub fn canonical(&self) -> Result<(f64, f64, f64)> {
        let h = self.normalized();
        let xc = h.center_x();
        let rhs = xc * xc - h.d;
        if rhs <= 0.0 || h.b >= 0.0 {
            return Err(Error::InvalidConfig("conic is not a horizontal hyperbola".into()));
        }
        Ok((xc, rhs.sqrt(), (rhs / -h.b).sqrt()))
    }

    pub fn vertices(&self) -> Result<(f64, f64)> {
        let (xc, al, _) = self.canonical()?;
        Ok((xc - al, xc + al))
    }

    /// Distance-like residual `|f| / |∇f|`.
    pub fn distance_estimate(&self, z: C64) -> f64 {
        let (x, y) = (z.re, z.im);
        let gx = 2.0 * self.a * x + self.c;
        let gy = 2.0 * self.b * y;
        let g = gx.hypot(gy);
        if g == 0.0 {
            self.eval(z).abs()
        } else {
            self.eval(z).abs() / g
        }
    }

    pub fn classify(&self, z: C64, tol: f64) -> Result<HyperbolaPart> {
        if self.distance_estimate(z) < tol {
            return Err(Error::RegionAmbiguous);
        }
        let h = self.normalized();
        if h.eval(z) > 0.0 {
            if z.re > h.center_x() {
                Ok(HyperbolaPart::InsidePlus)
            } else {
                Ok(HyperbolaPart::InsideMinus)
            }
        } else {
            Ok(HyperbolaPart::Between)
        }
    }

    /// The conic from the cut image of a branch family: on the cut the two
    /// roots are `x ± iy` with `x = −(b1 w + b0)/(2a)`, `4a²y² = −disc(w)`.
    pub fn from_family(fam: &BranchFamily) -> Hyperbola {
        let q = &fam.quad;
        let [d2, d1, d0] = q.disc_poly();
        // w = −(2a x + b0)/b1, scaled by b1²/(4a²)
        let a = q.a;
        Hyperbola {
            a: d2,
            b: q.b1 * q.b1,
            c: (q.b0 * d2 - 0.5 * q.b1 * d1) / a,
            d: (d2 * q.b0 * q.b0 - d1 * q.b0 * q.b1 + d0 * q.b1 * q.b1) / (4.0 * a * a),
        }
    }
}

/// Hyperbola carrying the cut images of a branch family. For `P` over `q`
/// (`H^u`, `H^v`, symmetric `H_p`) and the symmetric `Q` over `p` (`H_q`) the
/// closed forms are used; other families use the generic construction.
pub fn hyperbola(pr: &ModelParams, id: KernelId, var: Variable) -> Result<Hyperbola> {
    let pr2 = uv_params(pr, id)?;
    let [m1, m2] = pr2.mu;
    let [s1, s2] = pr2.sigma;
    let rho = pr2.rho;
    let th = pr2.theta();
    match (id, var) {
        (KernelId::Sym, Variable::POverQ) => {
            let s = s1;
            Ok(Hyperbola {
                a: 1.0,
                b: -(s - rho) / (s + rho),
                c: -2.0 * m1 / (s + rho),
                d: 0.0,
            })
        }
        (KernelId::Sym, Variable::QOverP) => {
            let s = s1;
            Ok(Hyperbola {
                a: s + rho,
                b: -(s - rho),
                c: 4.0 * m1,
                d: 2.0 * m1 * m1 / s,
            })
        }
        (_, Variable::POverQ) => Ok(Hyperbola {
            a: rho * rho - s1 * s2,
            b: (s2 - rho) * (s2 - rho),
            c: 2.0 * (s2 * m1 - rho * m2),
            d: (m2 - m1) * (s2 * (m1 + m2) - 2.0 * rho * m2) / (2.0 * th),
        }),
        (_, Variable::QOverP) => Ok(Hyperbola::from_family(&BranchFamily::new(pr, id, var)?)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Composition {
    pub value: C64,
    pub returns_p: bool,
    pub expected_identity: bool,
}

/// Result of the four compositions `P_i ∘ Q_j` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutomorphyReport {
    pub p: C64,
    pub region: HyperbolaPart,
    pub p1_q1: Composition,
    pub p2_q1: Composition,
    pub p1_q2: Composition,
    pub p2_q2: Composition,
}

impl AutomorphyReport {
    /// Every composition the table predicts to be the identity is so.
    pub fn consistent(&self) -> bool {
        [self.p1_q1, self.p2_q1, self.p1_q2, self.p2_q2]
            .iter()
            .all(|c| !c.expected_identity || c.returns_p)
    }
}

pub const AUTOMORPHY_TOL: f64 = 1e-8;

pub fn check_automorphy(pr: &ModelParams, p: C64) -> Result<AutomorphyReport> {
    pr.require_symmetric()?;
    let fp = BranchFamily::new(pr, KernelId::Sym, Variable::POverQ)?;
    let fq = BranchFamily::new(pr, KernelId::Sym, Variable::QOverP)?;
    let hp = hyperbola(pr, KernelId::Sym, Variable::POverQ)?;
    let region = hp.classify(p, 1e-10)?;
    let [q1, q2] = fq.eval_both(p)?;
    let [a11, a21] = fp.eval_both(q1)?;
    let [a12, a22] = fp.eval_both(q2)?;
    let tol = AUTOMORPHY_TOL * (1.0 + p.norm());
    let mk = |v: C64, expected: bool| Composition {
        value: v,
        returns_p: (v - p).norm() < tol,
        expected_identity: expected,
    };
    use HyperbolaPart::*;
    Ok(AutomorphyReport {
        p,
        region,
        p1_q1: mk(a11, region != InsidePlus),
        p2_q1: mk(a21, region == InsidePlus),
        p1_q2: mk(a12, region == InsideMinus),
        p2_q2: mk(a22, region != InsideMinus),
    })
}
