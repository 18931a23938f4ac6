//! Model parameters for reflected Brownian motion in the three-quarter plane
//! `S = {z1 >= 0} ∪ {z2 >= 0}`.
//!
//! Face 1 is the ray `{z2 = 0, z1 <= 0}` with reflection `(r1, 1)`, face 2 is
//! `{z1 = 0, z2 <= 0}` with reflection `(1, r2)`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: [f64; 2],
    pub sigma: [f64; 2],
    pub rho: f64,
    pub refl: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RecurrenceReport {
    pub drift_negative: [bool; 2],
    pub reflection_conditions: [bool; 2],
    pub recurrent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WedgeAngles {
    pub beta: f64,
    pub delta: f64,
    pub beta_tilde: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    S1,
    S2,
}

impl ModelParams {
    /// Checks finiteness and ellipticity. Recurrence is checked separately.
    pub fn new(mu: [f64; 2], sigma: [f64; 2], rho: f64, refl: [f64; 2]) -> Result<Self> {
        let p = ModelParams {
            mu,
            sigma,
            rho,
            refl,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.mu[0],
            self.mu[1],
            self.sigma[0],
            self.sigma[1],
            self.rho,
            self.refl[0],
            self.refl[1],
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        if self.sigma[0] <= 0.0 || self.sigma[1] <= 0.0 || self.sigma[0] * self.sigma[1] - self.rho * self.rho <= 0.0 {
            return Err(Error::NonElliptic);
        }
        Ok(())
    }

    /// Symmetric parameters sharing `sigma`, `mu` and `r` between the two coordinates.
    pub fn symmetric(sigma: f64, rho: f64, mu: f64, r: f64) -> Result<Self> {
        Self::new([mu, mu], [sigma, sigma], rho, [r, r])
    }

    pub fn theta(&self) -> f64 {
        (self.sigma[0] + self.sigma[1] - 2.0 * self.rho) / 2.0
    }

    pub fn det(&self) -> f64 {
        self.sigma[0] * self.sigma[1] - self.rho * self.rho
    }

    pub fn is_recurrent(&self) -> bool {
        self.recurrence().recurrent
    }

    pub fn require_recurrent(&self) -> Result<()> {
        if self.is_recurrent() {
            Ok(())
        } else {
            Err(Error::NonRecurrent)
        }
    }

    /// Exact comparison: inputs are user-given.
    pub fn is_symmetric(&self) -> bool {
        self.mu[0] == self.mu[1] && self.sigma[0] == self.sigma[1] && self.refl[0] == self.refl[1]
    }

    pub fn recurrence(&self) -> RecurrenceReport {
        let [m1, m2] = self.mu;
        let [r1, r2] = self.refl;
        let drift_negative = [m1 < 0.0, m2 < 0.0];
        let reflection_conditions = [m1 - r1 * m2 > 0.0, m2 - r2 * m1 > 0.0];
        RecurrenceReport {
            drift_negative,
            reflection_conditions,
            recurrent: drift_negative[0] && drift_negative[1] && reflection_conditions[0] && reflection_conditions[1],
        }
    }

    /// Opening angle and reflection angles after the linear map sending the
    /// covariance to the identity. Symmetric parameters only.
    pub fn wedge_angles(&self) -> Result<WedgeAngles> {
        if !self.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        let s = self.sigma[0];
        let r = self.refl[0];
        let beta = 2.0 * PI - (-self.rho / s).clamp(-1.0, 1.0).acos();
        let den = r + beta.cos();
        // tan(delta) = sin(beta) / den with delta in (0, pi); sin(beta) < 0.
        let delta = if den == 0.0 {
            FRAC_PI_2
        } else {
            FRAC_PI_2 + (den / -beta.sin()).atan()
        };
        Ok(WedgeAngles {
            beta,
            delta,
            beta_tilde: beta / 2.0,
            epsilon: FRAC_PI_2,
        })
    }

    pub fn require_symmetric(&self) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(Error::SymmetryRequired)
        }
    }

    /// Swap the roles of the two coordinates.
    pub fn swapped(&self) -> Self {
        ModelParams {
            mu: [self.mu[1], self.mu[0]],
            sigma: [self.sigma[1], self.sigma[0]],
            rho: self.rho,
            refl: [self.refl[1], self.refl[0]],
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: ModelParams = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }
}

impl Default for ModelParams {
    /// An asymmetric recurrent configuration used throughout the tests.
    fn default() -> Self {
        ModelParams {
            mu: [-1.0, -2.0],
            sigma: [1.0, 2.0],
            rho: 0.3,
            refl: [2.0, 3.0],
        }
    }
}

pub fn in_state_space(z: [f64; 2]) -> bool {
    z[0] >= 0.0 || z[1] >= 0.0
}

/// Region membership: `S1 = {z1 <= z2, z2 >= 0}`, `S2 = {z1 > z2, z1 >= 0}`.
pub fn region_of(z: [f64; 2]) -> Result<Region> {
    let [z1, z2] = z;
    if !(z1.is_finite() && z2.is_finite()) || !in_state_space(z) {
        return Err(Error::OutsideDomain);
    }
    if z1 <= z2 {
        Ok(Region::S1)
    } else {
        Ok(Region::S2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_matches_definition() {
        let p = ModelParams::default();
        assert!((p.theta() - 1.2).abs() < 1e-15);
        let s = ModelParams::symmetric(1.0, 0.0, -1.0, 2.0).unwrap();
        assert_eq!(s.theta(), 1.0);
    }

    #[test]
    fn recurrence_examples() {
        let rep = ModelParams::symmetric(1.0, 0.0, -1.0, 2.0).unwrap().recurrence();
        assert!(rep.recurrent);
        assert_eq!(rep.reflection_conditions, [true, true]);
        let rep = ModelParams::new([1.0, -1.0], [1.0, 1.0], 0.0, [2.0, 2.0]).unwrap().recurrence();
        assert!(!rep.recurrent);
        assert_eq!(rep.drift_negative, [false, true]);
        // symmetric recurrence needs r > 1
        assert!(!ModelParams::symmetric(1.0, 0.0, -1.0, 0.5).unwrap().is_recurrent());
        assert!(!ModelParams::symmetric(1.0, 0.0, -1.0, 1.0).unwrap().is_recurrent());
        assert!(ModelParams::default().is_recurrent());
    }

    #[test]
    fn wedge_angle_examples() {
        let w = ModelParams::symmetric(1.0, 0.0, -1.0, 2.0).unwrap().wedge_angles().unwrap();
        assert!((w.beta - 1.5 * PI).abs() < 1e-15);
        assert!((w.beta_tilde - 0.75 * PI).abs() < 1e-15);
        assert!((w.delta - (PI - 0.5f64.atan())).abs() < 1e-14);
        assert!((w.delta.tan() + 0.5).abs() < 1e-12);
        assert_eq!(w.epsilon, FRAC_PI_2);
        // rho recovered from beta
        let p = ModelParams::symmetric(2.0, 0.7, -1.0, 2.0).unwrap();
        let w = p.wedge_angles().unwrap();
        assert!((-2.0 * w.beta.cos() - 0.7).abs() < 1e-14);
        assert_eq!(ModelParams::default().wedge_angles(), Err(Error::NotSymmetric));
    }

    #[test]
    fn delta_right_angle_case() {
        // r + cos(beta) = 0
        let b = ModelParams::symmetric(1.0, 0.5, -1.0, 2.0).unwrap().wedge_angles().unwrap().beta;
        let p = ModelParams::symmetric(1.0, 0.5, -1.0, -b.cos()).unwrap();
        let w = p.wedge_angles().unwrap();
        assert_eq!(w.delta, FRAC_PI_2);
    }

    #[test]
    fn non_elliptic_rejected() {
        assert_eq!(ModelParams::new([-1.0, -1.0], [1.0, 1.0], 1.0, [0.5, 0.5]), Err(Error::NonElliptic));
        assert_eq!(ModelParams::new([-1.0, -1.0], [-1.0, 1.0], 0.0, [0.5, 0.5]), Err(Error::NonElliptic));
    }

    #[test]
    fn regions() {
        assert_eq!(region_of([-1.0, 0.5]).unwrap(), Region::S1);
        assert_eq!(region_of([0.5, -1.0]).unwrap(), Region::S2);
        assert_eq!(region_of([2.0, 2.0]).unwrap(), Region::S1);
        assert_eq!(region_of([0.0, 0.0]).unwrap(), Region::S1);
        assert_eq!(region_of([-1.0, -1.0]), Err(Error::OutsideDomain));
    }

    #[test]
    fn symmetry_flags() {
        assert!(ModelParams::symmetric(1.0, 0.3, -1.0, 0.5).unwrap().is_symmetric());
        assert!(!ModelParams::default().is_symmetric());
        let p = ModelParams::default();
        assert_eq!(p.swapped().swapped(), p);
    }

    #[test]
    fn json_round_trip() {
        let p = ModelParams::default();
        let q = ModelParams::from_json(&p.to_json()).unwrap();
        assert_eq!(p, q);
        assert!(ModelParams::from_json("{\"mu\":[1]}").is_err());
    }
}
