//! Steady-state fixed-point models of the two broadcast MACs.
//!
//! Both models reduce to a small vector `x` with `x = F(x)`; they are solved
//! by damped simultaneous substitution `x <- (1 - a) x + a F(x)` until the
//! largest component of `F(x) - x` drops below the tolerance.

pub mod dot11p;
pub mod spcdc;

pub use dot11p::{
    contention_density_dot11p, mean_collision_delay, pi0, solve_fixed_point, stationary_backoff_distribution,
    Dot11pAnalysis,
};
pub use spcdc::{
    busy_delay, collision_upper_bound, gamma_from_state, idle_delay, solve_spcdc_fixed_point, GammaValue,
    SpcdcAnalysis,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight of the new iterate, in (0, 1].
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            damping: 0.5,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "tolerance must be > 0"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping", "damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Converged iterate, iteration count and final residual.
pub(crate) struct FixedPoint<const N: usize> {
    pub x: [f64; N],
    pub iterations: usize,
    pub residual: f64,
}

pub(crate) fn damped_iteration<const N: usize>(
    model: &'static str,
    start: [f64; N],
    opts: &SolverOptions,
    mut map: impl FnMut(&[f64; N]) -> Result<[f64; N]>,
) -> Result<FixedPoint<N>> {
    opts.check()?;
    let mut x = start;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let fx = map(&x)?;
        residual = x.iter().zip(&fx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual < opts.tol {
            return Ok(FixedPoint {
                x: fx,
                iterations: it,
                residual,
            });
        }
        for (xi, fi) in x.iter_mut().zip(&fx) {
            *xi += opts.damping * (fi - *xi);
        }
    }
    Err(Error::NoConvergence {
        model,
        iterations: opts.max_iter,
        residual,
        iterate: x.to_vec(),
    })
}
