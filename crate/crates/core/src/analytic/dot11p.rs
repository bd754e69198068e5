//! Fixed-point model of 802.11p DCF in periodic broadcast mode.
//!
//! A packet that finds the channel idle for DIFS is sent at once; one that
//! finds it busy waits out the residual transmission, defers DIFS and runs a
//! backoff of `M ~ U{0..CW-1}` slots, each slot possibly interrupted by
//! another vehicle's transmission plus DIFS. Every other vehicle is assumed to
//! transmit in a given slot with probability `rho * pi0`, which couples the
//! collision probability back to the service time through `rho = lambda E[S]`.

use serde::{Deserialize, Serialize};

use super::{damped_iteration, SolverOptions};
use crate::error::{Error, Result};
use crate::params::{derive_timing, ScenarioParams};

/// Mean number of packets involved in a collision. Collisions are taken to
/// be pairwise, so a busy-on-arrival packet is double counted with weight 1/2.
pub const MEAN_COLLIDED_PACKETS: f64 = 2.0;

/// Converged operating point of the 802.11p model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dot11pAnalysis {
    /// Probability a packet is in the buffer.
    pub rho: f64,
    /// Probability the channel is busy on arrival.
    pub p_b: f64,
    pub p_c: f64,
    pub pdr: f64,
    /// Probability the backoff counter is at zero.
    pub pi0: f64,
    /// Stationary distribution of the backoff counter.
    pub pi_m: Vec<f64>,
    pub n_c: f64,
    /// Mean initial backoff counter, slots.
    pub e_m: f64,
    /// Mean interruption per backoff slot, s.
    pub e_ti: f64,
    /// Mean backoff duration, s.
    pub e_tb: f64,
    /// Mean residual of the ongoing transmission, s.
    pub e_tres: f64,
    /// Mean access delay, s.
    pub e_ta: f64,
    /// Mean service time, equal to the mean end-to-end delay (no queueing).
    pub e_s: f64,
    /// Mean collision delay, s.
    pub e_tc: f64,
    /// Mean reception delay, s.
    pub e_tre: f64,
    /// Mean contention density (packets in backoff seen by a vehicle).
    pub cs_prime: f64,
    pub t_tr: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Set when the linearised busy probability had to be clamped to 1.
    pub p_b_clamped: bool,
}

/// Probability of transmitting in a slot, `2 / (1 + cw)`.
pub fn pi0(cw: u32) -> f64 {
    assert!(cw >= 1, "contention window must be >= 1");
    2.0 / (1.0 + cw as f64)
}

/// `pi_m = (cw - m) / cw * pi_0` for `m` in `0..cw`.
pub fn stationary_backoff_distribution(cw: u32) -> Vec<f64> {
    let p0 = pi0(cw);
    let w = cw as f64;
    (0..cw).map(|m| (w - m as f64) / w * p0).collect()
}

/// Mean extra delay from consecutive collisions, `p_c / ((1 - p_c) lambda)`.
pub fn mean_collision_delay(p_c: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_c) {
        return Err(Error::invalid("p_c", format!("must lie in [0, 1], got {p_c}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", "must be > 0"));
    }
    if p_c >= 1.0 {
        return Err(Error::UndefinedAtOne);
    }
    Ok(p_c / ((1.0 - p_c) * lambda))
}

/// Mean contention density of 802.11p: mean backoff counter times the
/// probability that some other vehicle transmits in a slot. The per-slot
/// attempt probability is `pi0`.
pub fn contention_density_dot11p(analysis: &Dot11pAnalysis, params: &ScenarioParams) -> f64 {
    let others = params.n_vehicles.saturating_sub(1) as i32;
    let busy = 1.0 - (1.0 - analysis.rho * analysis.pi0).powi(others);
    (params.cw as f64 - 1.0) * busy / 2.0
}

struct Delays {
    e_ti: f64,
    e_tb: f64,
    e_tres: f64,
    e_ta: f64,
    e_s: f64,
}

struct Model {
    lambda: f64,
    others: i32,
    pi0: f64,
    e_m: f64,
    slot: f64,
    difs: f64,
    t_tr: f64,
}

impl Model {
    fn interrupt_prob(&self, rho: f64) -> f64 {
        1.0 - (1.0 - rho * self.pi0).powi(self.others)
    }

    /// Linearised busy probability, unclamped.
    fn busy_prob(&self, p_c: f64) -> f64 {
        let share = (MEAN_COLLIDED_PACKETS - 1.0) / MEAN_COLLIDED_PACKETS;
        self.others as f64 * self.lambda * self.t_tr * (1.0 - share * p_c)
    }

    fn delays(&self, rho: f64, p_b: f64) -> Delays {
        let e_ti = self.interrupt_prob(rho) * (self.t_tr + self.difs);
        let e_tb = (self.slot + e_ti) * self.e_m;
        let e_tres = self.t_tr / 2.0 + self.difs;
        let e_ta = self.difs + p_b * (e_tb + e_tres);
        Delays {
            e_ti,
            e_tb,
            e_tres,
            e_ta,
            e_s: e_ta + self.t_tr,
        }
    }
}

/// Solves the coupled `(rho, p_b, p_c)` system and evaluates every delay term
/// at the converged point.
pub fn solve_fixed_point(params: &ScenarioParams, opts: &SolverOptions) -> Result<Dot11pAnalysis> {
    let timing = derive_timing(params)?;
    let model = Model {
        lambda: params.lambda,
        others: params.n_vehicles as i32 - 1,
        pi0: pi0(params.cw),
        e_m: (params.cw as f64 - 1.0) / 2.0,
        slot: params.slot,
        difs: params.difs,
        t_tr: timing.t_tr,
    };

    let fp = damped_iteration("802.11p", [0.0, 0.0, 0.0], opts, |&[rho, p_b, p_c]| {
        let p_b_next = model.busy_prob(p_c).clamp(0.0, 1.0);
        let p_c_next = p_b * model.interrupt_prob(rho);
        let rho_next = (model.lambda * model.delays(rho, p_b).e_s).clamp(0.0, 1.0);
        Ok([rho_next, p_b_next, p_c_next])
    })?;

    let [rho, p_b, p_c] = fp.x;
    let d = model.delays(rho, p_b);
    let load = model.lambda * d.e_s;
    if load > 1.0 {
        return Err(Error::Infeasible { rho: load });
    }
    let e_tc = mean_collision_delay(p_c, params.lambda)?;
    let mut out = Dot11pAnalysis {
        rho,
        p_b,
        p_c,
        pdr: 1.0 - p_c,
        pi0: model.pi0,
        pi_m: stationary_backoff_distribution(params.cw),
        n_c: MEAN_COLLIDED_PACKETS,
        e_m: model.e_m,
        e_ti: d.e_ti,
        e_tb: d.e_tb,
        e_tres: d.e_tres,
        e_ta: d.e_ta,
        e_s: d.e_s,
        e_tc,
        e_tre: d.e_s + e_tc,
        cs_prime: 0.0,
        t_tr: timing.t_tr,
        iterations: fp.iterations,
        residual: fp.residual,
        p_b_clamped: model.busy_prob(p_c) > 1.0,
    };
    out.cs_prime = contention_density_dot11p(&out, params);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            ((a - b) / b).abs()
        }
    }

    #[test]
    fn pi0_values() {
        assert_eq!(pi0(1), 1.0);
        assert!(rel(pi0(16), 2.0 / 17.0) < 1e-12);
        assert!(rel(pi0(128), 2.0 / 129.0) < 1e-12);
        assert!((pi0(16) - 0.117647).abs() < 1e-6);
        assert!((pi0(128) - 0.015504).abs() < 1e-6);
    }

    #[test]
    fn stationary_vector_small_windows() {
        assert_eq!(stationary_backoff_distribution(1), vec![1.0]);
        let v = stationary_backoff_distribution(2);
        assert!(rel(v[0], 2.0 / 3.0) < 1e-12 && rel(v[1], 1.0 / 3.0) < 1e-12);
        let v = stationary_backoff_distribution(16);
        assert_eq!(v.len(), 16);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(v[0], pi0(16));
    }

    #[test]
    fn collision_delay_examples() {
        assert_eq!(mean_collision_delay(0.0, 10.0).unwrap(), 0.0);
        assert!(rel(mean_collision_delay(0.5, 10.0).unwrap(), 0.1) < 1e-12);
        assert!(rel(mean_collision_delay(0.2, 2.0).unwrap(), 0.125) < 1e-12);
        assert!(matches!(
            mean_collision_delay(1.0, 2.0),
            Err(Error::UndefinedAtOne)
        ));
    }

    #[test]
    fn single_vehicle_has_no_contention() {
        let p = ScenarioParams::table1(6e6, 10.0, 200.0, 1);
        let a = solve_fixed_point(&p, &SolverOptions::default()).unwrap();
        let t_tr = derive_timing(&p).unwrap().t_tr;
        assert_eq!(a.p_b, 0.0);
        assert_eq!(a.p_c, 0.0);
        assert_eq!(a.pdr, 1.0);
        assert_eq!(a.e_ti, 0.0);
        assert_eq!(a.e_tc, 0.0);
        assert_eq!(a.cs_prime, 0.0);
        assert_eq!(a.e_ta, p.difs);
        assert!(rel(a.e_s, p.difs + t_tr) < 1e-15);
    }

    #[test]
    fn identity_chain_at_convergence() {
        let p = ScenarioParams::table1(6e6, 10.0, 200.0, 200);
        let a = solve_fixed_point(&p, &SolverOptions::default()).unwrap();
        assert_eq!(a.e_tb, (p.slot + a.e_ti) * a.e_m);
        assert_eq!(a.e_ta, p.difs + a.p_b * (a.e_tb + a.e_tres));
        assert_eq!(a.e_tres, a.t_tr / 2.0 + p.difs);
        assert_eq!(a.e_s, a.e_ta + a.t_tr);
        assert_eq!(a.e_tre, a.e_s + a.e_tc);
        assert_eq!(a.pdr, 1.0 - a.p_c);
        assert!((a.rho - p.lambda * a.e_s).abs() < 1e-9);
        assert!(a.pdr < 0.95, "heavy load should lose packets, pdr = {}", a.pdr);
    }

    #[test]
    fn damping_does_not_change_the_answer() {
        let p = ScenarioParams::table1(6e6, 10.0, 200.0, 150);
        let tol = 1e-12;
        let half = solve_fixed_point(
            &p,
            &SolverOptions {
                damping: 0.5,
                ..SolverOptions::with_tol(tol)
            },
        )
        .unwrap();
        let full = solve_fixed_point(
            &p,
            &SolverOptions {
                damping: 1.0,
                ..SolverOptions::with_tol(tol)
            },
        )
        .unwrap();
        for (a, b) in [(half.rho, full.rho), (half.p_b, full.p_b), (half.p_c, full.p_c)] {
            assert!((a - b).abs() < 10.0 * tol, "{a} vs {b}");
        }
    }

    #[test]
    fn iteration_budget_is_reported() {
        let p = ScenarioParams::table1(6e6, 10.0, 200.0, 200);
        let opts = SolverOptions {
            max_iter: 2,
            ..SolverOptions::default()
        };
        match solve_fixed_point(&p, &opts) {
            Err(Error::NoConvergence {
                iterations, iterate, ..
            }) => {
                assert_eq!(iterations, 2);
                assert_eq!(iterate.len(), 3);
            }
            other => panic!("expected no-convergence, got {other:?}"),
        }
    }

    #[test]
    fn contention_density_degenerate_cases() {
        let p = ScenarioParams::table1(6e6, 10.0, 200.0, 50);
        let mut a = solve_fixed_point(&p, &SolverOptions::default()).unwrap();
        a.rho = 0.0;
        assert_eq!(contention_density_dot11p(&a, &p), 0.0);
        let p1 = p.with_cw(1);
        let a1 = solve_fixed_point(&p1, &SolverOptions::default()).unwrap();
        assert_eq!(contention_density_dot11p(&a1, &p1), 0.0);
    }
}
