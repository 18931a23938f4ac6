//! Constrained Euler simulation of the reflected process with local times,
//! and the folded (`hat`) and quadrant (`tilde`) transforms of a path.

use crate::error::{Error, Result};
use crate::model::{in_state_space, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub step: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub replicas: usize,
    pub start: [f64; 2],
    /// Keep every k-th state. Local-time events are always kept at full resolution.
    pub record_every: usize,
    /// Simulate even when the parameters are not recurrent.
    pub allow_transient: bool,
    #[serde(default)]
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scheme {
    /// Euler step, then projection along the reflection vector of the face
    /// crossed first. Local time is biased by `O(√h)`.
    Projected,
    /// Near a face, the normal coordinate is reflected with the exact
    /// Skorokhod map of a Brownian bridge: the push is the overshoot of the
    /// sampled bridge minimum. Removes the `O(√h)` bias away from the corner.
    #[default]
    Bridge,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            step: 1e-3,
            horizon: 2e4,
            burn_in: 1e3,
            seed: 20_240_601,
            replicas: 8,
            start: [1.0, 1.0],
            record_every: 10,
            allow_transient: false,
            scheme: Scheme::Bridge,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig("step must be positive".into()));
        }
        if !(self.horizon > self.burn_in && self.burn_in >= 0.0) {
            return Err(Error::InvalidConfig("need 0 <= burn_in < horizon".into()));
        }
        if self.replicas == 0 || self.record_every == 0 {
            return Err(Error::InvalidConfig("replicas and record_every must be positive".into()));
        }
        if !in_state_space(self.start) {
            return Err(Error::InvalidConfig("start point outside the state space".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> u64 {
        (self.horizon / self.step).round() as u64
    }

    pub fn burn_in_steps(&self) -> u64 {
        (self.burn_in / self.step).round() as u64
    }
}

/// Local-time increment at a step, recorded at the boundary point of the push.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LtEvent {
    pub step: u64,
    pub z: [f64; 2],
    pub dl: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    Original,
    Folded,
    Quadrant,
}

/// A simulated trajectory. `states[k]` is the state after `k * record_every`
/// steps. `events` carry the two local times; `diag` carries the local time
/// of `z2 - z1` at zero, measured by the discrete Tanaka formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub kind: PathKind,
    pub step: f64,
    pub record_every: usize,
    pub n_steps: u64,
    pub burn_in_steps: u64,
    pub states: Vec<[f64; 2]>,
    pub events: Vec<LtEvent>,
    pub diag: Vec<LtEvent>,
    pub lt_total: [f64; 2],
}

impl PathRecord {
    pub fn record_dt(&self) -> f64 {
        self.step * self.record_every as f64
    }

    /// Length of the post-burn-in window.
    pub fn window(&self) -> f64 {
        (self.n_steps - self.burn_in_steps) as f64 * self.step
    }

    /// Step index of a recorded state.
    pub fn state_step(&self, k: usize) -> u64 {
        (k * self.record_every) as u64
    }

    /// Recorded states after burn-in, each standing for `record_dt` of time.
    pub fn stationary_states(&self) -> impl Iterator<Item = (u64, [f64; 2])> + '_ {
        let first = self.burn_in_steps.div_ceil(self.record_every as u64) as usize;
        self.states
            .iter()
            .enumerate()
            .skip(first)
            .map(|(k, z)| (self.state_step(k), *z))
            .filter(move |(s, _)| *s < self.n_steps)
    }

    pub fn stationary_events(&self) -> impl Iterator<Item = &LtEvent> + '_ {
        let b = self.burn_in_steps;
        self.events.iter().filter(move |e| e.step >= b)
    }

    pub fn stationary_diag(&self) -> impl Iterator<Item = &LtEvent> + '_ {
        let b = self.burn_in_steps;
        self.diag.iter().filter(move |e| e.step >= b)
    }

    pub fn final_state(&self) -> [f64; 2] {
        *self.states.last().expect("path has a start state")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOut {
    pub z: [f64; 2],
    pub dl: [f64; 2],
    /// Where the push is recorded on the boundary.
    pub at: [f64; 2],
}

/// Cholesky factor of the covariance, lower triangular.
pub fn cholesky(pr: &ModelParams) -> [[f64; 2]; 2] {
    let l11 = pr.sigma[0].sqrt();
    let l21 = pr.rho / l11;
    let l22 = (pr.sigma[1] - l21 * l21).sqrt();
    [[l11, 0.0], [l21, l22]]
}

/// The face through which the segment `z -> y` first enters `{z1 < 0, z2 < 0}`.
fn first_crossing(z: [f64; 2], y: [f64; 2]) -> Option<usize> {
    // entry time and exit time of {coord < 0} along the segment
    let span = |a: f64, b: f64| -> Option<(f64, f64)> {
        if a < 0.0 {
            let e = if b >= 0.0 { -a / (b - a) } else { f64::INFINITY };
            Some((f64::NEG_INFINITY, e))
        } else if b < 0.0 {
            Some((a / (a - b), f64::INFINITY))
        } else {
            None
        }
    };
    let (s1, e1) = span(z[0], y[0])?;
    let (s2, e2) = span(z[1], y[1])?;
    let s = s1.max(s2);
    if s >= e1.min(e2) || s > 1.0 {
        return None;
    }
    if s2 > s1 {
        Some(0)
    } else if s1 > s2 {
        Some(1)
    } else if -y[1] >= -y[0] {
        Some(0)
    } else {
        Some(1)
    }
}

/// Projects a free move back into the state space along the reflection vector
/// of the face crossed first. Returns the new state and the push magnitudes.
pub fn project(pr: &ModelParams, z: [f64; 2], free: [f64; 2]) -> Result<StepOut> {
    let [r1, r2] = pr.refl;
    let mut from = z;
    let mut y = free;
    let mut dl = [0.0; 2];
    for _ in 0..100 {
        match first_crossing(from, y) {
            None => return Ok(StepOut { z: y, dl, at: y }),
            Some(0) => {
                let a = -y[1];
                y = [y[0] + a * r1, 0.0];
                from = y;
                dl[0] += a;
            }
            Some(_) => {
                let a = -y[0];
                y = [0.0, y[1] + a * r2];
                from = y;
                dl[1] += a;
            }
        }
    }
    Err(Error::StuckAtCorner)
}

/// One constrained Euler step with standard normal input `xi`.
pub fn step_rbm(pr: &ModelParams, z: [f64; 2], xi: [f64; 2], h: f64) -> Result<StepOut> {
    let l = cholesky(pr);
    step_with(pr, &l, z, xi, h.sqrt(), h)
}

#[inline]
fn step_with(pr: &ModelParams, l: &[[f64; 2]; 2], z: [f64; 2], xi: [f64; 2], sh: f64, h: f64) -> Result<StepOut> {
    let free = [
        z[0] + pr.mu[0] * h + sh * l[0][0] * xi[0],
        z[1] + pr.mu[1] * h + sh * (l[1][0] * xi[0] + l[1][1] * xi[1]),
    ];
    // a coordinate that stays nonnegative keeps the whole segment in S
    if (z[0] >= 0.0 && free[0] >= 0.0) || (z[1] >= 0.0 && free[1] >= 0.0) {
        return Ok(StepOut { z: free, dl: [0.0; 2], at: free });
    }
    project(pr, z, free)
}

/// Minimum over `[0, h]` of a Brownian bridge from 0 to `b` with variance
/// rate `var`, from a uniform `u` in `(0, 1]`.
pub fn bridge_min(b: f64, var: f64, h: f64, u: f64) -> f64 {
    0.5 * (b - (b * b - 2.0 * var * h * u.ln()).sqrt())
}

/// Log-probability that the bridge from `x0 > 0` to `x1 > 0` touches zero.
fn log_hit_prob(x0: f64, x1: f64, var: f64, h: f64) -> f64 {
    -2.0 * x0 * x1 / (var * h)
}

/// One step of the bridge scheme. `uniform` is called only when a face may
/// be touched during the step.
pub fn step_bridge(
    pr: &ModelParams,
    l: &[[f64; 2]; 2],
    z: [f64; 2],
    xi: [f64; 2],
    h: f64,
    uniform: &mut dyn FnMut() -> f64,
) -> Result<StepOut> {
    let sh = h.sqrt();
    let b = [
        pr.mu[0] * h + sh * l[0][0] * xi[0],
        pr.mu[1] * h + sh * (l[1][0] * xi[0] + l[1][1] * xi[1]),
    ];
    let free = [z[0] + b[0], z[1] + b[1]];
    // normal coordinate of the face in play, if any
    let face = if z[0] < 0.0 {
        Some(0)
    } else if z[1] < 0.0 {
        Some(1)
    } else if free[0] < 0.0 && free[1] < 0.0 {
        first_crossing(z, free)
    } else if free[0] < 0.0 {
        Some(0)
    } else if free[1] < 0.0 {
        Some(1)
    } else {
        None
    };
    let Some(face) = face else {
        return Ok(StepOut { z: free, dl: [0.0; 2], at: free });
    };
    // face 1 (index 0) is {z2 = 0}: its normal coordinate is z2
    let n = 1 - face;
    let var = pr.sigma[n];
    let x0 = z[n];
    let x1 = free[n];
    if x1 > 0.0 && log_hit_prob(x0, x1, var, h) < -40.0 {
        return Ok(StepOut { z: free, dl: [0.0; 2], at: free });
    }
    let m = bridge_min(b[n], var, h, uniform());
    let push = (-(x0 + m)).max(0.0);
    if push == 0.0 {
        return Ok(StepOut { z: free, dl: [0.0; 2], at: free });
    }
    let mut out = free;
    out[n] += push;
    out[face] += pr.refl[face] * push;
    let mut dl = [0.0; 2];
    dl[face] = push;
    // tangential midpoint of the step, on the face
    let mut at = [0.0; 2];
    at[face] = (0.5 * (z[face] + out[face])).min(0.0);
    Ok(StepOut { z: out, dl, at })
}

/// Per-replica random stream derived from `(seed, replica)`.
pub fn rng_stream(seed: u64, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

fn tanaka(x0: f64, x1: f64) -> f64 {
    let sgn = if x0 > 0.0 {
        1.0
    } else if x0 < 0.0 {
        -1.0
    } else {
        0.0
    };
    (x1.abs() - x0.abs() - sgn * (x1 - x0)).max(0.0)
}

pub fn simulate_path(pr: &ModelParams, cfg: &SimConfig, replica: usize) -> Result<PathRecord> {
    cfg.validate()?;
    pr.validate()?;
    if !cfg.allow_transient {
        pr.require_recurrent()?;
    }
    let n = cfg.n_steps();
    let h = cfg.step;
    let sh = h.sqrt();
    let l = cholesky(pr);
    let mut rng = rng_stream(cfg.seed, replica);
    let k = cfg.record_every as u64;
    let mut states = Vec::with_capacity((n / k + 2) as usize);
    let mut events = Vec::new();
    let mut diag = Vec::new();
    let mut z = cfg.start;
    let mut lt = [0.0; 2];
    states.push(z);
    for s in 1..=n {
        let xi = [rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)];
        let out = match cfg.scheme {
            Scheme::Projected => step_with(pr, &l, z, xi, sh, h)?,
            Scheme::Bridge => step_bridge(pr, &l, z, xi, h, &mut || 1.0 - rng.random::<f64>())?,
        };
        if out.dl[0] > 0.0 || out.dl[1] > 0.0 {
            lt[0] += out.dl[0];
            lt[1] += out.dl[1];
            events.push(LtEvent {
                step: s,
                z: out.at,
                dl: out.dl,
            });
        }
        let d0 = z[1] - z[0];
        let d1 = out.z[1] - out.z[0];
        if (d0 > 0.0) != (d1 > 0.0) || d0 == 0.0 {
            let t = tanaka(d0, d1);
            if t > 0.0 {
                diag.push(LtEvent {
                    step: s,
                    z: out.z,
                    dl: [0.0, t],
                });
            }
        }
        z = out.z;
        if s % k == 0 {
            states.push(z);
        }
    }
    Ok(PathRecord {
        kind: PathKind::Original,
        step: h,
        record_every: cfg.record_every,
        n_steps: n,
        burn_in_steps: cfg.burn_in_steps().min(n),
        states,
        events,
        diag,
        lt_total: lt,
    })
}

/// Runs every replica and applies `f` to each path as it completes, so only
/// the mapped results are held in memory. Parallel over replicas when the
/// `parallel` feature is enabled.
pub fn map_replicas<T, F>(pr: &ModelParams, cfg: &SimConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(PathRecord) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..cfg.replicas)
            .into_par_iter()
            .map(|i| simulate_path(pr, cfg, i).map(&f))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_replicas_seq(pr, cfg, f)
    }
}

pub fn map_replicas_seq<T, F>(pr: &ModelParams, cfg: &SimConfig, f: F) -> Result<Vec<T>>
where
    F: Fn(PathRecord) -> T,
{
    (0..cfg.replicas).map(|i| simulate_path(pr, cfg, i).map(&f)).collect()
}

pub fn simulate_ensemble(pr: &ModelParams, cfg: &SimConfig) -> Result<Vec<PathRecord>> {
    map_replicas(pr, cfg, |p| p)
}

pub fn simulate_ensemble_seq(pr: &ModelParams, cfg: &SimConfig) -> Result<Vec<PathRecord>> {
    map_replicas_seq(pr, cfg, |p| p)
}

fn fold(z: [f64; 2]) -> [f64; 2] {
    if z[0] <= z[1] {
        z
    } else {
        [z[1], z[0]]
    }
}

/// Fold across the diagonal onto `S1`. The first local time becomes the sum of
/// both face local times, the second is the diagonal local time.
pub fn transform_hat(path: &PathRecord) -> PathRecord {
    let states = path.states.iter().map(|&z| fold(z)).collect();
    let mut events: Vec<LtEvent> = path
        .events
        .iter()
        .map(|e| LtEvent {
            step: e.step,
            z: fold(e.z),
            dl: [e.dl[0] + e.dl[1], 0.0],
        })
        .collect();
    let mut diag_total = 0.0;
    events.extend(path.diag.iter().map(|e| {
        diag_total += e.dl[1];
        LtEvent {
            step: e.step,
            z: fold(e.z),
            dl: [0.0, e.dl[1]],
        }
    }));
    events.sort_by_key(|e| e.step);
    PathRecord {
        kind: PathKind::Folded,
        step: path.step,
        record_every: path.record_every,
        n_steps: path.n_steps,
        burn_in_steps: path.burn_in_steps,
        states,
        events,
        diag: path.diag.clone(),
        lt_total: [path.lt_total[0] + path.lt_total[1], diag_total],
    }
}

/// `(z1, z2) -> (z2 - z1, z2)`, mapping `S1` onto the quadrant.
pub fn tilde_point(z: [f64; 2]) -> [f64; 2] {
    [z[1] - z[0], z[1]]
}

pub fn transform_tilde(hat: &PathRecord) -> PathRecord {
    let map_event = |e: &LtEvent| LtEvent {
        step: e.step,
        z: tilde_point(e.z),
        dl: e.dl,
    };
    PathRecord {
        kind: PathKind::Quadrant,
        step: hat.step,
        record_every: hat.record_every,
        n_steps: hat.n_steps,
        burn_in_steps: hat.burn_in_steps,
        states: hat.states.iter().map(|&z| tilde_point(z)).collect(),
        events: hat.events.iter().map(map_event).collect(),
        diag: hat.diag.iter().map(map_event).collect(),
        lt_total: hat.lt_total,
    }
}

/// Realized covariance rate of the recorded increments after burn-in.
pub fn realized_covariance(path: &PathRecord) -> [[f64; 2]; 2] {
    let first = path.burn_in_steps.div_ceil(path.record_every as u64) as usize;
    let mut acc = [[0.0; 2]; 2];
    let mut n = 0usize;
    for w in path.states[first..].windows(2) {
        let d = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
        for i in 0..2 {
            for j in 0..2 {
                acc[i][j] += d[i] * d[j];
            }
        }
        n += 1;
    }
    let t = n as f64 * path.record_dt();
    acc.map(|row| row.map(|v| v / t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn interior_step_is_free_move() {
        let pr = p();
        let out = step_rbm(&pr, [3.0, 4.0], [0.1, -0.2], 1e-3).unwrap();
        let l = cholesky(&pr);
        let s = 1e-3f64.sqrt();
        let want = [
            3.0 - 1e-3 + s * l[0][0] * 0.1,
            4.0 - 2e-3 + s * (l[1][0] * 0.1 - l[1][1] * 0.2),
        ];
        assert_eq!(out.dl, [0.0, 0.0]);
        assert!((out.z[0] - want[0]).abs() < 1e-15 && (out.z[1] - want[1]).abs() < 1e-15);
    }

    #[test]
    fn push_from_face_one() {
        let pr = p();
        let z = [-1.0, 0.0];
        let free = [-1.02, -0.05];
        let out = project(&pr, z, free).unwrap();
        assert_eq!(out.dl, [0.05, 0.0]);
        assert!((out.z[0] - (-1.02 + 0.05 * pr.refl[0])).abs() < 1e-15);
        assert_eq!(out.z[1], 0.0);
    }

    #[test]
    fn push_from_face_two() {
        let pr = p();
        let out = project(&pr, [0.0, -2.0], [-0.03, -2.01]).unwrap();
        assert_eq!(out.dl, [0.0, 0.03]);
        assert_eq!(out.z[0], 0.0);
        assert!((out.z[1] - (-2.01 + 0.03 * pr.refl[1])).abs() < 1e-15);
    }

    #[test]
    fn corner_clipping_uses_first_face() {
        let pr = p();
        // enters the missing quadrant through face 1, leaves through face 2
        let out = project(&pr, [-0.01, 0.001], [0.001, -0.01]).unwrap();
        assert!(out.dl[0] > 0.0 && out.dl[1] == 0.0);
        assert!(in_state_space(out.z));
        // from the corner into the missing quadrant: deeper face wins
        let out = project(&pr, [0.0, 0.0], [-0.01, -0.03]).unwrap();
        assert!(out.dl[0] > 0.0);
        let out = project(&pr, [0.0, 0.0], [-0.03, -0.01]).unwrap();
        assert!(out.dl[1] > 0.0);
    }

    #[test]
    fn small_sim_is_deterministic_and_contained() {
        let pr = p();
        let cfg = SimConfig {
            horizon: 20.0,
            burn_in: 1.0,
            replicas: 2,
            record_every: 1,
            ..SimConfig::default()
        };
        let a = simulate_path(&pr, &cfg, 0).unwrap();
        let b = simulate_path(&pr, &cfg, 0).unwrap();
        let c = simulate_path(&pr, &cfg, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.lt_total, c.lt_total);
        assert!(a.states.iter().all(|&z| in_state_space(z)));
        assert_eq!(a.states.len() as u64, cfg.n_steps() + 1);
        for e in &a.events {
            if e.dl[0] > 0.0 {
                assert!(e.z[1] == 0.0);
            }
            if e.dl[1] > 0.0 {
                assert!(e.z[0] == 0.0);
            }
        }
    }

    #[test]
    fn transient_params_refused_unless_allowed() {
        let pr = ModelParams::new([1.0, -1.0], [1.0, 1.0], 0.0, [2.0, 2.0]).unwrap();
        let mut cfg = SimConfig {
            horizon: 1.0,
            burn_in: 0.0,
            ..SimConfig::default()
        };
        assert_eq!(simulate_path(&pr, &cfg, 0).unwrap_err(), Error::NonRecurrent);
        cfg.allow_transient = true;
        assert!(simulate_path(&pr, &cfg, 0).is_ok());
    }

    #[test]
    fn transform_examples() {
        assert_eq!(fold([2.0, -1.0]), [-1.0, 2.0]);
        assert_eq!(fold([-1.0, 2.0]), [-1.0, 2.0]);
        assert_eq!(tilde_point([-1.0, 2.0]), [3.0, 2.0]);
    }

    #[test]
    fn tanaka_increment() {
        assert_eq!(tanaka(0.1, 0.2), 0.0);
        assert!((tanaka(0.1, -0.3) - 0.6).abs() < 1e-15);
        assert!((tanaka(-0.1, 0.3) - 0.6).abs() < 1e-15);
    }
}
