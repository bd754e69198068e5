//! Slot loop of one replication.
//!
//! Time advances on the backoff-slot grid. A transmission occupies
//! `slots_per_tx` slots; every transmission starting in the same slot
//! collides. Runs of busy slots and idle stretches with nobody waiting are
//! skipped in one step, which requires busy `on_slot_end` calls to be
//! idempotent.

use rand::Rng;

use super::metrics::RepMetrics;
use super::trace::{Outcome, PacketRecord, SimTrace};
use super::SimConfig;
use crate::mac::{Arrival, ChannelView, MacPolicy, PacketMeta, TxIntent, VehicleId};
use crate::params::{DerivedTiming, ScenarioParams};
use crate::rng::SplitMix64;
use crate::sim::metrics::ReceptionDelay;

#[derive(Debug, Clone, Copy)]
struct Pending {
    gen_time: f64,
    gen_slot: u64,
    measured: bool,
}

#[derive(Debug, Clone)]
struct Transmission {
    start: u64,
    end: u64,
    senders: Vec<(VehicleId, Pending)>,
}

/// Channel as seen by the engine.
#[derive(Debug, Clone, Default)]
pub struct ChannelState {
    pub slot: u64,
    /// First slot not covered by the latest transmission.
    pub busy_until: u64,
    /// Vehicles whose transmission started in the latest busy period.
    pub transmitters: Vec<VehicleId>,
    /// Busy flags of the last 64 slots, bit 0 = most recent.
    pub history: u64,
}

impl ChannelState {
    pub fn is_busy(&self, slot: u64) -> bool {
        slot < self.busy_until
    }

    fn push_history(&mut self, busy: bool, slots: u64) {
        for _ in 0..slots.min(64) {
            self.history = (self.history << 1) | busy as u64;
        }
    }
}

/// Result of one replication.
#[derive(Debug, Clone)]
pub struct ReplicationOutput {
    pub metrics: RepMetrics,
    pub trace: Option<SimTrace>,
    /// Phases used, indexed by vehicle.
    pub phases: Vec<f64>,
    /// Transmission start slots that fell inside an earlier transmission;
    /// always zero for a correct engine.
    pub csma_violations: u64,
}

struct Engine<'a> {
    params: &'a ScenarioParams,
    timing: DerivedTiming,
    cfg: &'a SimConfig,
    gen_period: f64,
    end_slot: u64,
    warm_slot: u64,
    /// Vehicles sorted by phase; arrivals cycle through this order.
    order: Vec<(f64, VehicleId)>,
    cursor: usize,
    cycle: u64,
    pending: Vec<Option<Pending>>,
    /// Vehicles holding an unsent packet.
    active: Vec<VehicleId>,
    channel: ChannelState,
    tx: Option<Transmission>,
    reception: Vec<ReceptionDelay>,
    metrics: RepMetrics,
    trace: Option<SimTrace>,
    csma_violations: u64,
}

impl<'a> Engine<'a> {
    fn next_arrival(&self) -> (f64, VehicleId, u64) {
        let (phase, v) = self.order[self.cursor];
        let t = phase + self.cycle as f64 * self.gen_period;
        (t, v, (t / self.params.slot).floor() as u64)
    }

    fn advance_cursor(&mut self) {
        self.cursor += 1;
        if self.cursor == self.order.len() {
            self.cursor = 0;
            self.cycle += 1;
        }
    }

    fn view(&self, slot: u64) -> ChannelView {
        ChannelView {
            slot,
            ongoing_busy: self.channel.is_busy(slot),
            busy_until: self.channel.busy_until,
        }
    }

    fn deactivate(&mut self, v: VehicleId) {
        if let Some(pos) = self.active.iter().position(|&a| a == v) {
            self.active.swap_remove(pos);
        }
    }

    fn arrive<P: MacPolicy + ?Sized>(&mut self, policy: &mut P, rng: &mut SplitMix64, k: u64) {
        let (gen_time, v, _) = self.next_arrival();
        self.advance_cursor();
        if let Some(old) = self.pending[v].take() {
            self.deactivate(v);
            policy.on_release(v);
            if old.measured {
                self.metrics.overload_drops += 1;
                self.reception[v].lost();
            }
        }
        let measured = gen_time >= self.cfg.warmup;
        if measured {
            self.metrics.generated += 1;
        }
        let ongoing = self.channel.is_busy(k);
        let mini_slot = match (&self.tx, ongoing) {
            (Some(tx), true) => k - tx.start + 1,
            _ => 1,
        };
        let arrival = Arrival {
            vehicle: v,
            gen_time,
            slot: k,
            mini_slot,
            pending_others: self.active.len(),
        };
        let view = self.view(k);
        policy.on_arrival(&arrival, &view, rng);
        self.pending[v] = Some(Pending {
            gen_time,
            gen_slot: k,
            measured,
        });
        self.active.push(v);
    }

    fn start_transmission<P: MacPolicy + ?Sized>(&mut self, policy: &mut P, k: u64, senders: &[VehicleId]) {
        if self.channel.is_busy(k) {
            self.csma_violations += 1;
        }
        let mut list = Vec::with_capacity(senders.len());
        for &v in senders {
            self.deactivate(v);
            policy.on_release(v);
            let p = self.pending[v].take().expect("active vehicle holds a packet");
            list.push((v, p));
        }
        let end = k + self.timing.slots_per_tx;
        self.channel.busy_until = end;
        self.channel.transmitters = senders.to_vec();
        self.tx = Some(Transmission {
            start: k,
            end,
            senders: list,
        });
    }

    fn finish_transmission<P: MacPolicy + ?Sized>(&mut self, policy: &mut P) {
        let tx = self.tx.take().expect("transmission in progress");
        let collided = tx.senders.len() > 1;
        let slot = self.params.slot;
        for &(v, p) in &tx.senders {
            let access = (tx.start - p.gen_slot) as f64 * slot;
            let service = access + self.timing.t_tr;
            if p.measured {
                let m = &mut self.metrics;
                if collided {
                    m.collided += 1;
                    self.reception[v].lost();
                } else {
                    m.delivered += 1;
                    self.reception[v].delivered(service, self.params.lambda);
                }
                m.access_sum.add(access);
                m.service_sum.add(service);
                if let Some(trace) = self.trace.as_mut() {
                    trace.records.push(PacketRecord {
                        vehicle_id: v,
                        gen_time_s: p.gen_time,
                        tx_start_s: tx.start as f64 * slot,
                        outcome: if collided {
                            Outcome::Collided
                        } else {
                            Outcome::Delivered
                        },
                        access_delay_s: access,
                        service_time_s: service,
                    });
                }
            }
            if !collided {
                policy.on_delivered(&PacketMeta {
                    owner: v,
                    gen_time: p.gen_time,
                    gen_slot: p.gen_slot,
                });
            }
        }
        if collided {
            let senders: Vec<VehicleId> = tx.senders.iter().map(|&(v, _)| v).collect();
            policy.on_collision(&senders, tx.start);
        }
    }

    /// Vehicles transmitting at the start of slot `k`.
    fn transmitters<P: MacPolicy + ?Sized>(&self, policy: &P, k: u64) -> Vec<VehicleId> {
        let view = self.view(k);
        let mut slotted = Vec::new();
        let mut immediate: Vec<VehicleId> = Vec::new();
        for &v in &self.active {
            match policy.intent(v, &view) {
                TxIntent::Wait => {}
                TxIntent::Slotted => slotted.push(v),
                TxIntent::Immediate => immediate.push(v),
            }
        }
        if !slotted.is_empty() || immediate.is_empty() {
            return slotted;
        }
        // Immediate senders start DIFS after their own generation instant; the
        // earliest one is heard by the rest before they start. Exact ties collide.
        let gen = |v: VehicleId| self.pending[v].expect("active").gen_time;
        let first = immediate.iter().map(|&v| gen(v)).fold(f64::INFINITY, f64::min);
        immediate.retain(|&v| gen(v) == first);
        immediate
    }

    fn sample_density(&mut self, from: u64, slots: u64) {
        let lo = from.max(self.warm_slot);
        let hi = (from + slots).min(self.end_slot);
        if hi > lo {
            self.metrics.density.sample(self.active.len(), hi - lo);
        }
    }

    fn run<P: MacPolicy + ?Sized>(&mut self, policy: &mut P, rng: &mut SplitMix64) {
        let mut k = 0u64;
        while k < self.end_slot {
            self.channel.slot = k;
            if self.tx.as_ref().is_some_and(|t| t.end == k) {
                self.finish_transmission(policy);
            }
            while self.next_arrival().2 <= k {
                self.arrive(policy, rng, k);
            }
            if !self.channel.is_busy(k) && !self.active.is_empty() {
                let senders = self.transmitters(policy, k);
                if !senders.is_empty() {
                    self.start_transmission(policy, k, &senders);
                }
            }
            let busy = self.channel.is_busy(k);
            for i in 0..self.active.len() {
                let v = self.active[i];
                policy.on_slot_end(v, busy, rng);
            }
            self.sample_density(k, 1);
            self.channel.push_history(busy, 1);

            let arrival_slot = self.next_arrival().2;
            let mut next = k + 1;
            if k + 1 < self.channel.busy_until {
                next = self.channel.busy_until.min(arrival_slot).max(k + 1);
            } else if self.active.is_empty() && self.tx.is_none() {
                next = arrival_slot.max(k + 1);
            }
            next = next.min(self.end_slot);
            if next > k + 1 {
                self.sample_density(k + 1, next - k - 1);
                let still_busy = k + 1 < self.channel.busy_until;
                self.channel.push_history(still_busy, next - k - 1);
            }
            k = next;
        }

        let in_flight = self
            .pending
            .iter()
            .flatten()
            .chain(self.tx.iter().flat_map(|t| t.senders.iter().map(|(_, p)| p)))
            .filter(|p| p.measured)
            .count();
        self.metrics.in_flight = in_flight as u64;
        for r in &self.reception {
            self.metrics.reception.merge(r);
        }
    }
}

/// Draws the per-vehicle generation phases, uniform over one period.
pub fn draw_phases(n: usize, gen_period: f64, rng: &mut SplitMix64) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>() * gen_period).collect()
}

/// Runs replication `rep` with an explicit policy instance.
pub fn run_replication_with<P: MacPolicy + ?Sized>(
    params: &ScenarioParams,
    timing: &DerivedTiming,
    policy: &mut P,
    cfg: &SimConfig,
    rep: u64,
    record_trace: bool,
) -> ReplicationOutput {
    let seed = cfg.seed ^ rep;
    let mut rng = SplitMix64::for_replication(cfg.seed, rep);
    let gen_period = params.period();
    let phases = match &cfg.phases {
        Some(p) => p.clone(),
        None => draw_phases(params.n_vehicles, gen_period, &mut rng),
    };
    let mut order: Vec<(f64, VehicleId)> = phases.iter().copied().zip(0..).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let n = params.n_vehicles;
    let mut engine = Engine {
        params,
        timing: *timing,
        cfg,
        gen_period,
        end_slot: (cfg.duration / params.slot).floor() as u64,
        warm_slot: (cfg.warmup / params.slot).ceil() as u64,
        order,
        cursor: 0,
        cycle: 0,
        pending: vec![None; n],
        active: Vec::with_capacity(n),
        channel: ChannelState::default(),
        tx: None,
        reception: vec![ReceptionDelay::default(); n],
        metrics: RepMetrics {
            seed,
            ..RepMetrics::default()
        },
        trace: record_trace.then(SimTrace::default),
        csma_violations: 0,
    };
    engine.run(policy, &mut rng);
    ReplicationOutput {
        metrics: engine.metrics,
        trace: engine.trace,
        phases,
        csma_violations: engine.csma_violations,
    }
}
