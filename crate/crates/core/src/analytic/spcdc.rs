//! Steady-state model of Semi-persistent Contention Density Control.
//!
//! The mean contention density `c_s` must reproduce itself through the
//! access delay it causes: `c_s = lambda (N - 1) E[T_d]`, where `E[T_d]`
//! charges one airtime per contender ahead plus `C` idle slots per contender.
//! The busy-slot probability `gamma` follows from requiring zero expected
//! drift of the contender count, and `gamma` in turn bounds the collision
//! probability from above.

use serde::{Deserialize, Serialize};

use super::{damped_iteration, mean_collision_delay, SolverOptions};
use crate::error::{Error, Result};
use crate::params::{derive_timing, ScenarioParams};

/// Cap applied to `P_ck(0)` inside the drift balance so a cold start with
/// `c_s = 0` does not divide by zero.
pub const P_CK0_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaValue {
    pub value: f64,
    /// The raw drift-balance value fell outside [0, 1].
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpcdcAnalysis {
    /// Mean number of contending packets.
    pub c_s: f64,
    /// P(slot busy | at least one contender).
    pub gamma: f64,
    pub gamma_clamped: bool,
    /// P(no contender).
    pub p_ck0: f64,
    /// Mean packets per busy slot.
    pub n_b: f64,
    /// Busy-slot part of the access delay, s.
    pub e_tdb: f64,
    /// Idle-slot part of the access delay, s.
    pub e_tdi: f64,
    /// Mean delay from generation to end of own transmission, s.
    pub e_td: f64,
    pub p_c_upper: f64,
    pub pdr_lower: f64,
    pub e_tc: f64,
    pub e_tre: f64,
    pub t_tr: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Busy-slot probability that zeroes the expected drift of the contender
/// count:
/// `gamma = lambda N slot / ((1 - P_ck0) (n_b - lambda N (t_tr - slot)))`.
pub fn gamma_from_state(params: &ScenarioParams, t_tr: f64, p_ck0: f64, n_b: f64) -> Result<GammaValue> {
    let load = params.lambda * params.n_vehicles as f64;
    let drain = load * (t_tr - params.slot);
    if n_b <= drain {
        return Err(Error::Saturated { n_b, drain });
    }
    let p_ck0 = p_ck0.min(1.0 - P_CK0_GUARD);
    let raw = load * params.slot / ((1.0 - p_ck0) * (n_b - drain));
    Ok(GammaValue {
        value: raw.clamp(0.0, 1.0),
        clamped: !(0.0..=1.0).contains(&raw),
    })
}

/// Worst-case collision probability:
/// `(1 - P_ck0) (gamma + (1 - gamma) (1 - (1 - gamma)^c_s)^(C (c_s + 1) - 1))`.
pub fn collision_upper_bound(gamma: f64, c_s: f64, p_ck0: f64, c: u32) -> f64 {
    let exponent = c as f64 * (c_s + 1.0) - 1.0;
    let per_slot = 1.0 - (1.0 - gamma).powf(c_s);
    (1.0 - p_ck0) * (gamma + (1.0 - gamma) * per_slot.powf(exponent))
}

/// P(no contender among the other `n - 1` vehicles) at mean density `c_s`.
pub fn zero_contender_prob(n_vehicles: usize, c_s: f64) -> f64 {
    if n_vehicles <= 1 {
        return 1.0;
    }
    let others = (n_vehicles - 1) as f64;
    (1.0 - (c_s / others).clamp(0.0, 1.0)).powf(others)
}

/// Binomial(N - 1, c_s / (N - 1)) distribution of the contender count. Its
/// zero term is exactly [`zero_contender_prob`].
pub fn contender_distribution(n_vehicles: usize, c_s: f64) -> Vec<f64> {
    let n = n_vehicles.saturating_sub(1);
    if n == 0 {
        return vec![1.0];
    }
    let p = (c_s / n as f64).clamp(0.0, 1.0);
    let mut pmf = Vec::with_capacity(n + 1);
    // ln C(n, j) built incrementally keeps large n finite.
    let mut ln_binom = 0.0_f64;
    for j in 0..=n {
        if j > 0 {
            ln_binom += ((n - j + 1) as f64).ln() - (j as f64).ln();
        }
        let term = if p == 0.0 {
            if j == 0 {
                1.0
            } else {
                0.0
            }
        } else if p == 1.0 {
            if j == n {
                1.0
            } else {
                0.0
            }
        } else {
            (ln_binom + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln()).exp()
        };
        pmf.push(term);
    }
    pmf
}

/// Busy-slot delay in summation form, `(1 + sum_j P(j) (j - 1/2)) t_tr`.
pub fn busy_delay_from_distribution(pmf: &[f64], t_tr: f64) -> f64 {
    let tail: f64 = pmf
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, p)| p * (j as f64 - 0.5))
        .sum();
    (1.0 + tail) * t_tr
}

/// Closed form of the busy-slot delay, `(c_s + (1 + P_ck0) / 2) t_tr`.
pub fn busy_delay(c_s: f64, p_ck0: f64, t_tr: f64) -> f64 {
    (c_s + 0.5 * (1.0 + p_ck0)) * t_tr
}

/// Idle-slot delay, `(C (c_s + 1) - c_s) slot`.
pub fn idle_delay(c_s: f64, c: u32, slot: f64) -> f64 {
    (c as f64 * (c_s + 1.0) - c_s) * slot
}

pub fn solve_spcdc_fixed_point(params: &ScenarioParams, opts: &SolverOptions) -> Result<SpcdcAnalysis> {
    let timing = derive_timing(params)?;
    if params.spcdc_c < 1 {
        return Err(Error::invalid("spcdc_c", "SpCDC multiplier must be >= 1"));
    }
    let t_tr = timing.t_tr;
    let others = params.n_vehicles.saturating_sub(1) as f64;
    let c = params.spcdc_c;
    let access_delay = |c_s: f64, p_ck0: f64| busy_delay(c_s, p_ck0, t_tr) + idle_delay(c_s, c, params.slot);

    let fp = damped_iteration("SpCDC", [0.0, 0.0], opts, |&[c_s, p_c]| {
        let p_ck0 = zero_contender_prob(params.n_vehicles, c_s);
        let gamma = gamma_from_state(params, t_tr, p_ck0, 1.0 + p_c)?;
        let c_s_next = params.lambda * others * access_delay(c_s, p_ck0);
        let p_c_next = collision_upper_bound(gamma.value, c_s, p_ck0, c);
        Ok([c_s_next, p_c_next])
    })?;

    let [c_s, p_c] = fp.x;
    let p_ck0 = zero_contender_prob(params.n_vehicles, c_s);
    let n_b = 1.0 + p_c;
    let gamma = gamma_from_state(params, t_tr, p_ck0, n_b)?;
    let p_c_upper = collision_upper_bound(gamma.value, c_s, p_ck0, c);
    let e_tdb = busy_delay(c_s, p_ck0, t_tr);
    let e_tdi = idle_delay(c_s, c, params.slot);
    let e_td = e_tdb + e_tdi;
    let e_tc = mean_collision_delay(p_c_upper, params.lambda)?;
    Ok(SpcdcAnalysis {
        c_s,
        gamma: gamma.value,
        gamma_clamped: gamma.clamped,
        p_ck0,
        n_b,
        e_tdb,
        e_tdi,
        e_td,
        p_c_upper,
        pdr_lower: 1.0 - p_c_upper,
        e_tc,
        e_tre: e_td + e_tc,
        t_tr,
        iterations: fp.iterations,
        residual: fp.residual,
    })
}
