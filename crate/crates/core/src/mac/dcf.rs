//! 802.11p DCF in broadcast mode: no ACK, no retransmission, fixed window.

use rand::Rng;

use super::{Arrival, ChannelView, MacPolicy, TxIntent, VehicleId};
use crate::params::{DerivedTiming, ScenarioParams};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DcfVehicleState {
    #[default]
    Empty,
    /// Arrived on an idle channel; sends once DIFS has passed idle.
    Sensing { difs_left: u64 },
    /// Counter decrements only on idle slots after a full idle DIFS.
    Backoff { counter: u32, difs_left: u64 },
}

#[derive(Debug, Clone)]
pub struct DcfPolicy {
    cw: u32,
    difs_slots: u64,
    states: Vec<DcfVehicleState>,
    draws: Option<Vec<(VehicleId, u32)>>,
}

impl DcfPolicy {
    pub fn new(params: &ScenarioParams, timing: &DerivedTiming) -> Self {
        Self {
            cw: params.cw,
            difs_slots: timing.difs_slots,
            states: vec![DcfVehicleState::Empty; params.n_vehicles],
            draws: None,
        }
    }

    /// Keeps every backoff draw for inspection.
    pub fn recording_draws(mut self) -> Self {
        self.draws = Some(Vec::new());
        self
    }

    pub fn draws(&self) -> &[(VehicleId, u32)] {
        self.draws.as_deref().unwrap_or(&[])
    }

    pub fn state(&self, vehicle: VehicleId) -> DcfVehicleState {
        self.states[vehicle]
    }

    fn start_backoff(&mut self, vehicle: VehicleId, rng: &mut SplitMix64) -> DcfVehicleState {
        let counter = rng.gen_range(0..self.cw);
        if let Some(d) = self.draws.as_mut() {
            d.push((vehicle, counter));
        }
        DcfVehicleState::Backoff {
            counter,
            difs_left: self.difs_slots,
        }
    }
}

impl MacPolicy for DcfPolicy {
    fn on_arrival(&mut self, arrival: &Arrival, channel: &ChannelView, rng: &mut SplitMix64) {
        let v = arrival.vehicle;
        self.states[v] = if channel.ongoing_busy {
            self.start_backoff(v, rng)
        } else {
            DcfVehicleState::Sensing {
                difs_left: self.difs_slots,
            }
        };
    }

    fn intent(&self, vehicle: VehicleId, channel: &ChannelView) -> TxIntent {
        if channel.ongoing_busy {
            return TxIntent::Wait;
        }
        match self.states[vehicle] {
            DcfVehicleState::Sensing { difs_left: 0 } => TxIntent::Immediate,
            DcfVehicleState::Backoff {
                counter: 0,
                difs_left: 0,
            } => TxIntent::Slotted,
            _ => TxIntent::Wait,
        }
    }

    fn on_slot_end(&mut self, vehicle: VehicleId, busy: bool, rng: &mut SplitMix64) {
        let next = match self.states[vehicle] {
            DcfVehicleState::Empty => DcfVehicleState::Empty,
            DcfVehicleState::Sensing { .. } if busy => self.start_backoff(vehicle, rng),
            DcfVehicleState::Sensing { difs_left } => DcfVehicleState::Sensing {
                difs_left: difs_left.saturating_sub(1),
            },
            DcfVehicleState::Backoff { counter, .. } if busy => DcfVehicleState::Backoff {
                counter,
                difs_left: self.difs_slots,
            },
            DcfVehicleState::Backoff {
                counter,
                difs_left: 0,
            } => DcfVehicleState::Backoff {
                counter: counter.saturating_sub(1),
                difs_left: 0,
            },
            DcfVehicleState::Backoff { counter, difs_left } => DcfVehicleState::Backoff {
                counter,
                difs_left: difs_left - 1,
            },
        };
        self.states[vehicle] = next;
    }

    fn on_release(&mut self, vehicle: VehicleId) {
        self.states[vehicle] = DcfVehicleState::Empty;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_timing;
    use rand::SeedableRng;

    fn policy(n: usize) -> DcfPolicy {
        let p = ScenarioParams::default().with_vehicles(n);
        DcfPolicy::new(&p, &derive_timing(&p).unwrap())
    }

    fn arrival(v: VehicleId, slot: u64) -> Arrival {
        Arrival {
            vehicle: v,
            gen_time: slot as f64 * 16e-6,
            slot,
            mini_slot: 1,
            pending_others: 0,
        }
    }

    fn idle(slot: u64) -> ChannelView {
        ChannelView {
            slot,
            ongoing_busy: false,
            busy_until: 0,
        }
    }

    fn busy(slot: u64) -> ChannelView {
        ChannelView {
            slot,
            ongoing_busy: true,
            busy_until: slot + 10,
        }
    }

    #[test]
    fn idle_arrival_sends_after_difs() {
        let mut p = policy(1);
        let mut rng = SplitMix64::new(1);
        p.on_arrival(&arrival(0, 0), &idle(0), &mut rng);
        for k in 0..4 {
            assert_eq!(p.intent(0, &idle(k)), TxIntent::Wait);
            p.on_slot_end(0, false, &mut rng);
        }
        assert_eq!(p.intent(0, &idle(4)), TxIntent::Immediate);
    }

    #[test]
    fn busy_arrival_draws_uniform_counter() {
        let mut p = policy(1).recording_draws();
        let mut rng = SplitMix64::seed_from_u64(7);
        let n = 100_000;
        for _ in 0..n {
            p.on_arrival(&arrival(0, 0), &busy(0), &mut rng);
            p.on_release(0);
        }
        let mut counts = [0u32; 16];
        for &(_, c) in p.draws() {
            counts[c as usize] += 1;
        }
        let expected = n as f64 / 16.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square 99.9% quantile with 15 degrees of freedom.
        assert!(chi2 < 37.70, "chi2 = {chi2}");
    }

    #[test]
    fn counter_counts_idle_slots_after_difs() {
        let mut p = policy(1);
        let mut rng = SplitMix64::new(3);
        p.states[0] = DcfVehicleState::Backoff {
            counter: 3,
            difs_left: 0,
        };
        for k in 0..3 {
            assert_eq!(p.intent(0, &idle(k)), TxIntent::Wait);
            p.on_slot_end(0, false, &mut rng);
        }
        assert_eq!(p.intent(0, &idle(3)), TxIntent::Slotted);
    }

    #[test]
    fn interruption_costs_a_fresh_difs() {
        let mut p = policy(1);
        let mut rng = SplitMix64::new(3);
        p.states[0] = DcfVehicleState::Backoff {
            counter: 2,
            difs_left: 0,
        };
        p.on_slot_end(0, false, &mut rng); // counter 1
        for _ in 0..23 {
            p.on_slot_end(0, true, &mut rng);
        }
        assert_eq!(
            p.state(0),
            DcfVehicleState::Backoff {
                counter: 1,
                difs_left: 4
            }
        );
        for _ in 0..4 {
            p.on_slot_end(0, false, &mut rng);
        }
        assert_eq!(p.intent(0, &idle(0)), TxIntent::Wait);
        p.on_slot_end(0, false, &mut rng);
        assert_eq!(p.intent(0, &idle(0)), TxIntent::Slotted);
    }

    #[test]
    fn zero_draw_waits_for_difs_after_busy() {
        let mut p = policy(1);
        let mut rng = SplitMix64::new(3);
        p.states[0] = DcfVehicleState::Backoff {
            counter: 0,
            difs_left: 4,
        };
        assert_eq!(p.intent(0, &busy(0)), TxIntent::Wait);
        for _ in 0..4 {
            assert_eq!(p.intent(0, &idle(0)), TxIntent::Wait);
            p.on_slot_end(0, false, &mut rng);
        }
        assert_eq!(p.intent(0, &idle(0)), TxIntent::Slotted);
    }

    #[test]
    fn sensing_turns_into_backoff_when_busy() {
        let mut p = policy(1);
        let mut rng = SplitMix64::new(3);
        p.on_arrival(&arrival(0, 0), &idle(0), &mut rng);
        p.on_slot_end(0, true, &mut rng);
        assert!(matches!(
            p.state(0),
            DcfVehicleState::Backoff { difs_left: 4, .. }
        ));
    }
}
