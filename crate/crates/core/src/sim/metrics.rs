//! Estimators accumulated by one replication and merged across many.

use serde::{Deserialize, Serialize};

use super::trace::Outcome;
use crate::stats::{ci_half_width, sum, CompensatedSum};

/// Confidence level of every reported interval.
pub const CI_LEVEL: f64 = 0.99;

/// Reception delay of one vehicle's packet stream: a delivered packet that
/// follows `f` lost packets waited `f / lambda` extra periods.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReceptionDelay {
    lost_run: u32,
    total: CompensatedSum,
    count: u64,
}

impl ReceptionDelay {
    pub fn lost(&mut self) {
        self.lost_run += 1;
    }

    pub fn delivered(&mut self, service_time: f64, lambda: f64) {
        self.total.add(self.lost_run as f64 / lambda + service_time);
        self.count += 1;
        self.lost_run = 0;
    }

    /// Forgets a partial run, used at the start of the measurement window.
    pub fn reset_run(&mut self) {
        self.lost_run = 0;
    }

    pub fn merge(&mut self, other: &ReceptionDelay) {
        self.total.merge(&other.total);
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn sum(&self) -> f64 {
        self.total.value()
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.total.value() / self.count as f64)
    }
}

/// Mean reception delay of an ordered outcome sequence of one vehicle.
/// A trailing run of collisions with no delivery is discarded.
pub fn reception_delay_accumulate(sequence: &[(Outcome, f64)], lambda: f64) -> Option<f64> {
    let mut acc = ReceptionDelay::default();
    for &(outcome, service) in sequence {
        match outcome {
            Outcome::Delivered => acc.delivered(service, lambda),
            Outcome::Collided => acc.lost(),
        }
    }
    acc.mean()
}

/// Time average of the number of vehicles holding an unsent packet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DensityMeter {
    weighted: u128,
    slots: u64,
}

impl DensityMeter {
    /// `contenders` vehicles were waiting for `slots` consecutive slots.
    pub fn sample(&mut self, contenders: usize, slots: u64) {
        self.weighted += contenders as u128 * slots as u128;
        self.slots += slots;
    }

    pub fn slots(&self) -> u64 {
        self.slots
    }

    pub fn mean(&self) -> f64 {
        if self.slots == 0 {
            0.0
        } else {
            self.weighted as f64 / self.slots as f64
        }
    }
}

/// Raw tallies of one replication over its measurement window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RepMetrics {
    pub seed: u64,
    pub generated: u64,
    pub delivered: u64,
    pub collided: u64,
    /// Packets replaced by the next generation before being sent.
    pub overload_drops: u64,
    pub in_flight: u64,
    pub access_sum: CompensatedSum,
    pub service_sum: CompensatedSum,
    pub reception: ReceptionDelay,
    pub density: DensityMeter,
}

impl RepMetrics {
    pub fn resolved(&self) -> u64 {
        self.delivered + self.collided
    }

    pub fn pdr(&self) -> f64 {
        if self.resolved() == 0 {
            f64::NAN
        } else {
            self.delivered as f64 / self.resolved() as f64
        }
    }

    pub fn mean_service(&self) -> f64 {
        self.service_sum.value() / self.resolved() as f64
    }
}

/// Estimates pooled over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub pdr: f64,
    /// Half-width of the 99% interval of the per-replication PDR.
    pub pdr_ci: Option<f64>,
    pub mean_service: f64,
    pub mean_service_ci: Option<f64>,
    pub mean_access: f64,
    pub mean_reception: f64,
    pub mean_density: f64,
    pub generated: u64,
    pub delivered: u64,
    pub collided: u64,
    pub overload_drops: u64,
    pub in_flight: u64,
    pub replications: usize,
    pub seed: u64,
}

impl SimMetrics {
    /// Merges replications in the given order. Sums are compensated, so the
    /// result does not depend on how the replications were scheduled.
    pub fn from_replications(reps: &[RepMetrics], seed: u64) -> Self {
        let mut access = CompensatedSum::default();
        let mut service = CompensatedSum::default();
        let mut reception = ReceptionDelay::default();
        let (mut generated, mut delivered, mut collided, mut drops, mut in_flight) = (0, 0, 0, 0, 0);
        for r in reps {
            access.merge(&r.access_sum);
            service.merge(&r.service_sum);
            reception.merge(&r.reception);
            generated += r.generated;
            delivered += r.delivered;
            collided += r.collided;
            drops += r.overload_drops;
            in_flight += r.in_flight;
        }
        let resolved = (delivered + collided) as f64;
        let pdrs: Vec<f64> = reps
            .iter()
            .map(RepMetrics::pdr)
            .filter(|x| x.is_finite())
            .collect();
        let services: Vec<f64> = reps
            .iter()
            .filter(|r| r.resolved() > 0)
            .map(RepMetrics::mean_service)
            .collect();
        let density_slots: u64 = reps.iter().map(|r| r.density.slots()).sum();
        let mean_density = if density_slots == 0 {
            0.0
        } else {
            sum(reps.iter().map(|r| r.density.mean() * r.density.slots() as f64)) / density_slots as f64
        };
        SimMetrics {
            pdr: if resolved > 0.0 {
                delivered as f64 / resolved
            } else {
                f64::NAN
            },
            pdr_ci: ci_half_width(&pdrs, CI_LEVEL),
            mean_service: service.value() / resolved,
            mean_service_ci: ci_half_width(&services, CI_LEVEL),
            mean_access: access.value() / resolved,
            mean_reception: reception.mean().unwrap_or(f64::NAN),
            mean_density,
            generated,
            delivered,
            collided,
            overload_drops: drops,
            in_flight,
            replications: reps.len(),
            seed,
        }
    }

    /// Lower edge of the PDR interval (the point estimate with one replication).
    pub fn pdr_lower_edge(&self) -> f64 {
        self.pdr - self.pdr_ci.unwrap_or(0.0)
    }

    pub fn overload_fraction(&self) -> f64 {
        if self.generated == 0 {
            0.0
        } else {
            self.overload_drops as f64 / self.generated as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reception_delay_definition() {
        let all = [(Outcome::Delivered, 1e-3); 5];
        assert!((reception_delay_accumulate(&all, 10.0).unwrap() - 1e-3).abs() < 1e-18);
        let one = [(Outcome::Collided, 1e-3), (Outcome::Delivered, 1e-3)];
        assert!((reception_delay_accumulate(&one, 10.0).unwrap() - 0.101).abs() < 1e-15);
        let trailing = [(Outcome::Delivered, 2e-3), (Outcome::Collided, 1e-3)];
        assert!((reception_delay_accumulate(&trailing, 10.0).unwrap() - 2e-3).abs() < 1e-18);
        assert_eq!(
            reception_delay_accumulate(&[(Outcome::Collided, 1.0)], 10.0),
            None
        );
    }

    #[test]
    fn density_is_slot_weighted() {
        let mut d = DensityMeter::default();
        d.sample(0, 10);
        d.sample(1, 10);
        d.sample(4, 5);
        assert_eq!(d.mean(), 30.0 / 25.0);
    }
}
