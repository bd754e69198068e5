use std::cell::{Cell, RefCell};

use dsrc_mac::analytic::pi0;
use dsrc_mac::mac::{
    Arrival, ChannelView, DcfPolicy, DcfVehicleState, MacPolicy, PolicyKind, SpcdcPolicy, TxIntent, VehicleId,
};
use dsrc_mac::rng::SplitMix64;
use dsrc_mac::sim::{reception_delay_accumulate, run, run_replication_with, Outcome, SimConfig};
use dsrc_mac::{derive_timing, ScenarioParams};

fn short(duration: f64, reps: usize) -> SimConfig {
    SimConfig {
        duration,
        warmup: 0.5,
        replications: reps,
        ..SimConfig::default()
    }
}

#[test]
fn lone_vehicle_sends_after_difs() {
    let p = ScenarioParams::default().with_vehicles(1);
    let cfg = SimConfig {
        duration: 10.0,
        warmup: 0.0,
        replications: 1,
        ..SimConfig::default()
    };
    let m = run(&p, PolicyKind::Dot11p { cw: None }, &cfg).unwrap().metrics;
    assert_eq!(m.generated, 100);
    assert_eq!(m.delivered + m.in_flight, 100);
    assert_eq!(m.collided, 0);
    assert_eq!(m.pdr, 1.0);
    assert!((m.mean_access - p.difs).abs() < 1e-15, "{}", m.mean_access);
}

#[test]
fn packets_are_conserved() {
    let p = ScenarioParams::default().with_vehicles(120);
    for policy in ["dot11p", "dot11p:128", "spcdc", "spcdc-oracle"] {
        let out = run(&p, policy.parse().unwrap(), &short(3.0, 2)).unwrap();
        for r in &out.replications {
            assert_eq!(
                r.generated,
                r.delivered + r.collided + r.overload_drops + r.in_flight,
                "{policy}"
            );
        }
        assert_eq!(out.csma_violations, 0, "{policy}");
    }
}

#[test]
fn reruns_are_bit_identical() {
    let p = ScenarioParams::default().with_vehicles(80);
    for policy in [
        PolicyKind::Dot11p { cw: None },
        PolicyKind::Spcdc { oracle: false },
    ] {
        let cfg = SimConfig {
            trace: true,
            ..short(2.0, 3)
        };
        let a = run(&p, policy, &cfg).unwrap();
        let b = run(&p, policy, &cfg).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.replications, b.replications);
        assert_eq!(a.trace, b.trace);
        assert!(!a.trace.unwrap().records.is_empty());
    }
}

#[test]
fn other_seeds_agree_within_intervals() {
    let p = ScenarioParams::default().with_vehicles(150);
    let cfg = short(4.0, 8);
    let a = run(&p, PolicyKind::Dot11p { cw: None }, &cfg).unwrap().metrics;
    let b = run(
        &p,
        PolicyKind::Dot11p { cw: None },
        &SimConfig { seed: 99, ..cfg },
    )
    .unwrap()
    .metrics;
    assert_ne!(a, b);
    let slack = a.pdr_ci.unwrap() + b.pdr_ci.unwrap();
    assert!(
        (a.pdr - b.pdr).abs() <= slack,
        "{} vs {} (slack {slack})",
        a.pdr,
        b.pdr
    );
}

/// Counts, per backoff, the counter values seen at countable idle slots.
struct BackoffObserver {
    inner: DcfPolicy,
    last: RefCell<Vec<Option<u32>>>,
    seen: Cell<u64>,
    zeros: Cell<u64>,
}

impl MacPolicy for BackoffObserver {
    fn on_arrival(&mut self, arrival: &Arrival, channel: &ChannelView, rng: &mut SplitMix64) {
        self.inner.on_arrival(arrival, channel, rng);
    }

    fn intent(&self, vehicle: VehicleId, channel: &ChannelView) -> TxIntent {
        if let DcfVehicleState::Backoff {
            counter,
            difs_left: 0,
        } = self.inner.state(vehicle)
        {
            let mut last = self.last.borrow_mut();
            if last[vehicle] != Some(counter) {
                last[vehicle] = Some(counter);
                self.seen.set(self.seen.get() + 1);
                if counter == 0 {
                    self.zeros.set(self.zeros.get() + 1);
                }
            }
        }
        self.inner.intent(vehicle, channel)
    }

    fn on_slot_end(&mut self, vehicle: VehicleId, busy: bool, rng: &mut SplitMix64) {
        self.inner.on_slot_end(vehicle, busy, rng);
    }

    fn on_release(&mut self, vehicle: VehicleId) {
        self.last.borrow_mut()[vehicle] = None;
        self.inner.on_release(vehicle);
    }
}

#[test]
fn backoff_slots_transmit_with_pi0() {
    let p = ScenarioParams::default().with_vehicles(100);
    let timing = derive_timing(&p).unwrap();
    let mut policy = BackoffObserver {
        inner: DcfPolicy::new(&p, &timing),
        last: RefCell::new(vec![None; p.n_vehicles]),
        seen: Cell::new(0),
        zeros: Cell::new(0),
    };
    let cfg = short(400.0, 1);
    let out = run_replication_with(&p, &timing, &mut policy, &cfg, 0, false);
    assert_eq!(out.csma_violations, 0);
    let seen = policy.seen.get();
    assert!(seen >= 1_000_000, "only {seen} observations");
    let rate = policy.zeros.get() as f64 / seen as f64;
    let expected = pi0(p.cw);
    assert!((rate / expected - 1.0).abs() < 0.01, "{rate} vs {expected}");
}

#[test]
fn bernoulli_losses_give_geometric_reception_delay() {
    use rand::Rng;
    let (p_c, lambda, service) = (0.2, 10.0, 1e-3);
    let mut rng = SplitMix64::new(7);
    let seq: Vec<(Outcome, f64)> = (0..1_000_000)
        .map(|_| {
            let outcome = if rng.gen::<f64>() < p_c {
                Outcome::Collided
            } else {
                Outcome::Delivered
            };
            (outcome, service)
        })
        .collect();
    let extra = reception_delay_accumulate(&seq, lambda).unwrap() - service;
    let expected = p_c / ((1.0 - p_c) * lambda);
    // sd of f/lambda over ~8e5 deliveries is about 6.2e-5 s.
    assert!((extra - expected).abs() < 2.5e-4, "{extra} vs {expected}");
}

#[test]
fn spcdc_timelines_fill_after_one_clean_period() {
    let p = ScenarioParams::table1(24e6, 2.0, 200.0, 10);
    let timing = derive_timing(&p).unwrap();
    let cfg = SimConfig {
        duration: 1.5 * p.period(),
        warmup: 0.0,
        replications: 1,
        ..SimConfig::default()
    };
    let mut policy = SpcdcPolicy::new(&p, false);
    let out = run_replication_with(&p, &timing, &mut policy, &cfg, 0, false);
    assert_eq!(out.metrics.collided, 0);
    for rx in 0..p.n_vehicles {
        assert_eq!(policy.timeline_len(rx), p.n_vehicles - 1);
        for owner in (0..p.n_vehicles).filter(|&o| o != rx) {
            let phase = policy.timeline(rx, owner).unwrap();
            assert!((phase - out.phases[owner]).abs() < 1e-12);
        }
    }
}
