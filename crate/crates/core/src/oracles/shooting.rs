//! Radial ground state of `Δu - u + u^{2p-1} = 0` by shooting, and the
//! Gagliardo-Nirenberg ratio it attains.
//!
//! The optimiser of the ratio is, up to scaling and dilation, this ground
//! state, so evaluating the ratio at it gives the sharp constant without
//! any variational search. The integrals are carried as extra ODE
//! components, independently of the radial-grid functional used by the
//! optimiser.

use crate::error::{Error, Result};
use crate::theory::check_regime;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundState {
    /// `u(0)`.
    pub center: f64,
    /// `‖u‖_2^2`.
    pub mass: f64,
    /// `‖∇u‖_2^2`.
    pub energy: f64,
    /// `‖u‖_{2p}^{2p}`.
    pub power: f64,
    /// The GN ratio at `u`.
    pub kappa: f64,
    /// Radius where the bracketing trajectories separate.
    pub radius: f64,
}

const STEP: f64 = 1e-3;
const R_START: f64 = 1e-6;
const R_END: f64 = 40.0;

/// Outcome of integrating from one initial height.
enum Shot {
    /// `u` crossed zero: initial height too large.
    Over,
    /// `u'` turned positive while `u > 0`: too small.
    Under,
}

/// State: `[u, u', ∫u² r^{d-1}, ∫u'² r^{d-1}, ∫u^{2p} r^{d-1}]`.
type State = [f64; 5];

fn rhs(d: usize, p: usize, r: f64, y: &State) -> State {
    let (u, du) = (y[0], y[1]);
    let w = r.powi(d as i32 - 1);
    let nonlinear = u.abs().powi(2 * p as i32 - 2) * u;
    [
        du,
        -(d as f64 - 1.0) / r * du + u - nonlinear,
        u * u * w,
        du * du * w,
        u.abs().powi(2 * p as i32) * w,
    ]
}

fn rk4(d: usize, p: usize, r: f64, y: &State, h: f64) -> State {
    let add = |a: &State, b: &State, s: f64| -> State {
        let mut out = *a;
        out.iter_mut().zip(b).for_each(|(o, v)| *o += s * v);
        out
    };
    let k1 = rhs(d, p, r, y);
    let k2 = rhs(d, p, r + h / 2.0, &add(y, &k1, h / 2.0));
    let k3 = rhs(d, p, r + h / 2.0, &add(y, &k2, h / 2.0));
    let k4 = rhs(d, p, r + h, &add(y, &k3, h));
    let mut out = *y;
    for i in 0..5 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates from `u(0) = center` until the trajectory is classified.
/// Returns the class, the state at the classification radius, and that
/// radius.
fn shoot(d: usize, p: usize, center: f64) -> (Shot, State, f64) {
    // series start: u ≈ c + (c - c^{2p-1}) r^2 / (2d)
    let curv = (center - center.powi(2 * p as i32 - 1)) / (2.0 * d as f64);
    let mut y: State = [center + curv * R_START * R_START, 2.0 * curv * R_START, 0.0, 0.0, 0.0];
    let mut r = R_START;
    while r < R_END {
        let next = rk4(d, p, r, &y, STEP);
        r += STEP;
        if next[0] <= 0.0 {
            return (Shot::Over, y, r);
        }
        if next[1] > 0.0 {
            return (Shot::Under, y, r);
        }
        y = next;
    }
    (Shot::Under, y, r)
}

/// Finds the positive radial ground state by bisection on `u(0)` and
/// evaluates the GN ratio at it (surface factors cancel in the ratio but
/// are included so the norms are the true ones).
pub fn ground_state_shooting(d: usize, p: usize) -> Result<GroundState> {
    check_regime(d, p)?;
    // u(0) must exceed 1 for the nonlinearity to win; expand upward
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    let mut guard = 0;
    while matches!(shoot(d, p, hi).0, Shot::Under) {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::NonConvergence {
                what: "ground-state shooting",
                detail: "no overshooting initial height found".into(),
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(d, p, mid).0 {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
        }
    }
    // integrals from the undershooting trajectory up to where it turns;
    // the ground state is below 1e-6 there so the remainder is negligible
    let (_, y, radius) = shoot(d, p, lo);
    let omega = match d {
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    };
    let (mass, energy, power) = (omega * y[2], omega * y[3], omega * y[4]);
    let a = d as f64 * (p as f64 - 1.0) / (2.0 * p as f64);
    let kappa = power.powf(0.5 / p as f64) / (energy.powf(a / 2.0) * mass.powf((1.0 - a) / 2.0));
    Ok(GroundState {
        center: lo,
        mass,
        energy,
        power,
        kappa,
        radius,
    })
}
