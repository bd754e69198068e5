//! Semi-persistent Contention Density Control.
//!
//! Every vehicle remembers, per neighbour, the generation phase carried by
//! the last packet it received from that neighbour. Since packets are
//! generated strictly periodically, that timeline predicts when each
//! neighbour's current packet was generated. On its own generation a vehicle
//! counts the neighbours whose current packet should exist by the end of the
//! present slot but has not been heard yet, adds itself, and waits `C` slots
//! per packet in that count. Once per semi-persistent period the count is
//! shifted by `omega` drawn from {-1, 0, 1}.
//!
//! The counter runs on the channel's slot sequence, in which a whole busy
//! period is a single slot: it ticks once per idle slot and once per busy
//! period, and does not tick during the busy period a packet arrives in.
//!
//! A collided transmission cannot be decoded, but its size is known. The
//! listener assumes the oldest unheard packets were on air, since contenders
//! drain roughly in generation order.

use rand::Rng;

use super::{Arrival, ChannelView, MacPolicy, PacketMeta, TxIntent, VehicleId};
use crate::params::ScenarioParams;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpcdcVehicleState {
    /// Channel slots left before transmitting; `None` with an empty buffer.
    pub counter: Option<u32>,
    /// Contender count (own packet included) behind the current counter.
    pub contenders: u32,
    pub omega: i32,
    /// Start of the current semi-persistent period; NaN before the first packet.
    pub period_start: f64,
    /// The current busy period has already been counted.
    pub in_busy: bool,
}

impl Default for SpcdcVehicleState {
    fn default() -> Self {
        Self {
            counter: None,
            contenders: 0,
            omega: 0,
            period_start: f64::NAN,
            in_busy: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpcdcPolicy {
    n: usize,
    c: u32,
    slot: f64,
    gen_period: f64,
    persist_period: f64,
    oracle: bool,
    /// `phase[rx * n + owner]`: generation phase in [0, 1/lambda), NaN if unknown.
    phase: Vec<f64>,
    /// `heard[rx * n + owner]`: generation time of the newest packet received
    /// or presumed lost; +inf while unknown, and on the diagonal.
    heard: Vec<f64>,
    /// Generation time of each owner's newest delivered packet.
    delivered: Vec<f64>,
    states: Vec<SpcdcVehicleState>,
    scratch: Vec<(f64, VehicleId)>,
}

impl SpcdcPolicy {
    pub fn new(params: &ScenarioParams, oracle: bool) -> Self {
        let n = params.n_vehicles;
        Self {
            n,
            c: params.spcdc_c,
            slot: params.slot,
            gen_period: params.period(),
            persist_period: params.spcdc_period,
            oracle,
            phase: vec![f64::NAN; n * n],
            heard: vec![f64::INFINITY; n * n],
            delivered: vec![f64::NEG_INFINITY; n],
            states: vec![SpcdcVehicleState::default(); n],
            scratch: Vec::new(),
        }
    }

    pub fn state(&self, vehicle: VehicleId) -> &SpcdcVehicleState {
        &self.states[vehicle]
    }

    /// Known generation phase of `owner` as seen by `rx`.
    pub fn timeline(&self, rx: VehicleId, owner: VehicleId) -> Option<f64> {
        let p = self.phase[rx * self.n + owner];
        (!p.is_nan()).then_some(p)
    }

    pub fn timeline_len(&self, rx: VehicleId) -> usize {
        self.phase[rx * self.n..(rx + 1) * self.n]
            .iter()
            .filter(|p| !p.is_nan())
            .count()
    }

    /// Generation time of `owner`'s newest packet created before `horizon`,
    /// as predicted by `rx`'s timeline, if it is still unheard.
    pub fn unheard_instance(&self, rx: VehicleId, owner: VehicleId, horizon: f64) -> Option<f64> {
        let idx = rx * self.n + owner;
        if !self.is_unheard(self.heard[idx], horizon) {
            return None;
        }
        let phase = self.phase[idx];
        Some(phase + ((horizon - phase) / self.gen_period).floor() * self.gen_period)
    }

    /// `heard` is always one of the owner's generation instants, so a newer
    /// packet exists before `horizon` exactly when the next instant does.
    fn is_unheard(&self, heard: f64, horizon: f64) -> bool {
        heard + self.gen_period < horizon
    }

    /// Neighbours whose packet generated up to the end of `slot` has not been
    /// heard by `rx`, according to `rx`'s timeline.
    pub fn unheard_contenders(&self, rx: VehicleId, slot: u64) -> u32 {
        let horizon = (slot + 1) as f64 * self.slot;
        let row = &self.heard[rx * self.n..(rx + 1) * self.n];
        row.iter().filter(|&&h| self.is_unheard(h, horizon)).count() as u32
    }

    /// `rx` sensed an undecodable busy period starting at `start_slot` that
    /// carried `packets` packets it had counted; the oldest unheard ones are
    /// taken as gone.
    pub fn on_sensed_collision(&mut self, rx: VehicleId, start_slot: u64, packets: usize) {
        let owners: Vec<VehicleId> = (0..self.n).collect();
        self.retire_oldest(rx, start_slot, packets, &owners);
    }

    fn retire_oldest(&mut self, rx: VehicleId, start_slot: u64, packets: usize, owners: &[VehicleId]) {
        if packets == 0 {
            return;
        }
        let horizon = start_slot as f64 * self.slot;
        let mut unheard = std::mem::take(&mut self.scratch);
        unheard.clear();
        unheard.extend(
            owners
                .iter()
                .filter_map(|&o| self.unheard_instance(rx, o, horizon).map(|g| (g, o))),
        );
        unheard.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(g, owner) in unheard.iter().take(packets) {
            self.heard[rx * self.n + owner] = g;
        }
        self.scratch = unheard;
    }

    /// Contention estimate of `rx` for a packet generated in `slot`. A packet
    /// on air no longer contends, although its owner is not decoded yet.
    pub fn estimate(&self, rx: VehicleId, slot: u64, on_air: bool) -> u32 {
        self.unheard_contenders(rx, slot).saturating_sub(on_air as u32)
    }

    /// Timeline update of one receiver for one collision-free packet.
    pub fn on_receive(&mut self, rx: VehicleId, packet: &PacketMeta) {
        let phase = packet.gen_time.rem_euclid(self.gen_period);
        self.record(rx, packet, phase);
    }

    fn record(&mut self, rx: VehicleId, packet: &PacketMeta, phase: f64) {
        if rx == packet.owner {
            return;
        }
        let idx = rx * self.n + packet.owner;
        self.phase[idx] = phase;
        let heard = &mut self.heard[idx];
        if heard.is_infinite() || packet.gen_time > *heard {
            *heard = packet.gen_time;
        }
    }

    /// Initial counter `C * count + omega`, clamped at zero.
    pub fn initial_counter(c: u32, contenders: u32, omega: i32) -> u32 {
        (c as i64 * contenders as i64 + omega as i64).max(0) as u32
    }
}

impl MacPolicy for SpcdcPolicy {
    fn on_arrival(&mut self, arrival: &Arrival, channel: &ChannelView, rng: &mut SplitMix64) {
        let v = arrival.vehicle;
        let others = if self.oracle {
            arrival.pending_others as u32
        } else {
            self.estimate(v, arrival.slot, channel.ongoing_busy)
        };
        let persist = self.persist_period;
        let state = &mut self.states[v];
        if state.period_start.is_nan() || arrival.gen_time >= state.period_start + persist {
            state.period_start = arrival.gen_time;
            state.omega = rng.gen_range(-1..=1);
        }
        let contenders = others + 1;
        let counter = Self::initial_counter(self.c, contenders, state.omega);
        state.contenders = contenders;
        state.counter = Some(counter);
        state.in_busy = channel.ongoing_busy;
    }

    fn intent(&self, vehicle: VehicleId, channel: &ChannelView) -> TxIntent {
        match self.states[vehicle].counter {
            Some(0) if !channel.ongoing_busy => TxIntent::Slotted,
            _ => TxIntent::Wait,
        }
    }

    fn on_slot_end(&mut self, vehicle: VehicleId, busy: bool, _rng: &mut SplitMix64) {
        let s = &mut self.states[vehicle];
        if busy {
            if s.in_busy {
                return;
            }
            s.in_busy = true;
        } else {
            s.in_busy = false;
        }
        if let Some(c) = s.counter.as_mut() {
            *c = c.saturating_sub(1);
        }
    }

    fn on_release(&mut self, vehicle: VehicleId) {
        let s = &mut self.states[vehicle];
        s.counter = None;
    }

    fn on_delivered(&mut self, packet: &PacketMeta) {
        let last = &mut self.delivered[packet.owner];
        *last = last.max(packet.gen_time);
        let phase = packet.gen_time.rem_euclid(self.gen_period);
        for rx in 0..self.n {
            self.record(rx, packet, phase);
        }
    }

    fn on_collision(&mut self, senders: &[VehicleId], start_slot: u64) {
        // Only owners whose newest packet was never delivered can be unheard
        // by anyone; scanning just those gives the same result.
        let horizon = start_slot as f64 * self.slot;
        let owners: Vec<VehicleId> = (0..self.n)
            .filter(|&o| self.delivered[o] + self.gen_period < horizon)
            .collect();
        for rx in 0..self.n {
            // A sender never counted its own packet.
            let counted = senders.len() - senders.contains(&rx) as usize;
            self.retire_oldest(rx, start_slot, counted, &owners);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize) -> ScenarioParams {
        ScenarioParams::table1(6e6, 10.0, 200.0, n)
    }

    fn arrival(v: VehicleId, gen_time: f64) -> Arrival {
        Arrival {
            vehicle: v,
            gen_time,
            slot: (gen_time / 16e-6).floor() as u64,
            mini_slot: 1,
            pending_others: 0,
        }
    }

    const IDLE: ChannelView = ChannelView {
        slot: 0,
        ongoing_busy: false,
        busy_until: 0,
    };

    #[test]
    fn lone_packet_waits_c_slots() {
        let mut p = SpcdcPolicy::new(&params(5), false);
        let mut rng = SplitMix64::new(11);
        p.on_arrival(&arrival(0, 0.01), &IDLE, &mut rng);
        let s = p.state(0);
        assert_eq!(s.contenders, 1);
        assert_eq!(s.counter, Some(SpcdcPolicy::initial_counter(3, 1, s.omega)));
        assert!((2..=4).contains(&s.counter.unwrap()));
    }

    #[test]
    fn counter_formula() {
        assert_eq!(SpcdcPolicy::initial_counter(3, 1, 0), 3);
        assert_eq!(SpcdcPolicy::initial_counter(3, 6, 0), 18);
        assert_eq!(SpcdcPolicy::initial_counter(3, 1, -1), 2);
        assert_eq!(SpcdcPolicy::initial_counter(0, 1, -1), 0);
    }

    #[test]
    fn omega_is_uniform_and_fixed_within_a_period() {
        let mut p = SpcdcPolicy::new(&params(2), false);
        let mut rng = SplitMix64::new(5);
        let mut seen = [0u32; 3];
        let mut t = 0.0;
        for _ in 0..3000 {
            p.on_arrival(&arrival(0, t), &IDLE, &mut rng);
            let omega = p.state(0).omega;
            seen[(omega + 1) as usize] += 1;
            // A second packet inside the same period keeps omega.
            p.on_release(0);
            p.on_arrival(&arrival(0, t + 0.5), &IDLE, &mut rng);
            assert_eq!(p.state(0).omega, omega);
            p.on_release(0);
            t += 1.0;
        }
        for s in seen {
            assert!((900..=1100).contains(&s), "{seen:?}");
        }
    }

    #[test]
    fn receive_builds_and_overwrites_timeline() {
        let mut p = SpcdcPolicy::new(&params(3), false);
        let meta = PacketMeta {
            owner: 1,
            gen_time: 0.0123,
            gen_slot: 768,
        };
        p.on_receive(0, &meta);
        assert_eq!(p.timeline_len(0), 1);
        assert!((p.timeline(0, 1).unwrap() - 0.0123).abs() < 1e-15);
        let shifted = PacketMeta {
            owner: 1,
            gen_time: 1.0456,
            gen_slot: 65350,
        };
        p.on_receive(0, &shifted);
        assert_eq!(p.timeline_len(0), 1);
        assert!((p.timeline(0, 1).unwrap() - 0.0456).abs() < 1e-12);
    }

    #[test]
    fn counts_generated_but_unheard_neighbours() {
        let mut p = SpcdcPolicy::new(&params(4), false);
        // Vehicle 0 knows phases 0.010, 0.020 and 0.050 (period 0.1 s).
        for (owner, g) in [(1, 0.010), (2, 0.020), (3, 0.050)] {
            p.on_receive(
                0,
                &PacketMeta {
                    owner,
                    gen_time: g,
                    gen_slot: 0,
                },
            );
        }
        // At t = 0.13 the packets of 1 (0.11) and 2 (0.12) exist and are unheard;
        // 3 generates at 0.15.
        let slot = (0.13_f64 / 16e-6) as u64;
        assert_eq!(p.unheard_contenders(0, slot), 2);
        p.on_receive(
            0,
            &PacketMeta {
                owner: 1,
                gen_time: 0.11,
                gen_slot: 0,
            },
        );
        assert_eq!(p.unheard_contenders(0, slot), 1);
        // Same-slot generation counts as contending.
        let slot_of_2 = (0.12_f64 / 16e-6).floor() as u64;
        assert_eq!(p.unheard_contenders(0, slot_of_2), 1);
        assert_eq!(p.unheard_contenders(0, slot_of_2 - 1), 0);
    }

    #[test]
    fn busy_period_is_one_slot() {
        let mut p = SpcdcPolicy::new(&params(2), false);
        let mut rng = SplitMix64::new(1);
        p.on_arrival(&arrival(0, 0.0), &IDLE, &mut rng);
        let start = p.state(0).counter.unwrap();
        for _ in 0..5 {
            p.on_slot_end(0, true, &mut rng);
        }
        assert_eq!(p.state(0).counter, Some(start - 1));
        p.on_slot_end(0, false, &mut rng);
        p.on_slot_end(0, true, &mut rng);
        assert_eq!(p.state(0).counter, Some(start - 3));
    }

    #[test]
    fn arrival_inside_busy_period_waits_for_its_end() {
        let mut p = SpcdcPolicy::new(&params(2), false);
        let mut rng = SplitMix64::new(1);
        let busy = ChannelView {
            slot: 0,
            ongoing_busy: true,
            busy_until: 10,
        };
        p.on_arrival(&arrival(0, 0.0), &busy, &mut rng);
        let start = p.state(0).counter.unwrap();
        p.on_slot_end(0, true, &mut rng);
        assert_eq!(p.state(0).counter, Some(start));
        p.on_slot_end(0, false, &mut rng);
        assert_eq!(p.state(0).counter, Some(start - 1));
    }

    #[test]
    fn on_air_packet_is_not_counted() {
        let mut p = SpcdcPolicy::new(&params(3), false);
        for (owner, g) in [(1, 0.010), (2, 0.020)] {
            p.on_receive(
                0,
                &PacketMeta {
                    owner,
                    gen_time: g,
                    gen_slot: 0,
                },
            );
        }
        let slot = (0.13_f64 / 16e-6) as u64;
        assert_eq!(p.estimate(0, slot, false), 2);
        assert_eq!(p.estimate(0, slot, true), 1);
    }

    #[test]
    fn collision_retires_oldest_unheard() {
        let mut p = SpcdcPolicy::new(&params(5), false);
        for (owner, g) in [(1, 0.010), (2, 0.020), (3, 0.030), (4, 0.040)] {
            p.on_receive(
                0,
                &PacketMeta {
                    owner,
                    gen_time: g,
                    gen_slot: 0,
                },
            );
        }
        // Next period: all four regenerated by 0.145; a two-packet collision
        // starts at 0.145.
        let start = (0.145_f64 / 16e-6) as u64;
        assert_eq!(p.unheard_contenders(0, start), 4);
        p.on_sensed_collision(0, start, 2);
        assert_eq!(p.unheard_contenders(0, start), 2);
        let h = (start + 1) as f64 * 16e-6;
        assert!(p.unheard_instance(0, 1, h).is_none());
        assert!(p.unheard_instance(0, 2, h).is_none());
        assert!(p.unheard_instance(0, 3, h).is_some());
        // The retired owners count again once they generate anew.
        assert_eq!(p.unheard_contenders(0, (0.225_f64 / 16e-6) as u64), 4);
    }
}
