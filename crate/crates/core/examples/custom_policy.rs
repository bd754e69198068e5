// Plugs a MAC of your own into the simulator. This one is slotted
// p-persistent CSMA: after a busy period every waiting vehicle sends in each
// idle slot with probability p.
//
//     cargo run --example custom_policy

use rand::Rng;

use dsrc_mac::mac::{Arrival, ChannelView, MacPolicy, TxIntent, VehicleId};
use dsrc_mac::rng::SplitMix64;
use dsrc_mac::sim::{run_replication_with, SimConfig};
use dsrc_mac::{derive_timing, ScenarioParams};

struct PPersistent {
    p: f64,
    /// Set when the vehicle decided to send in the coming idle slot.
    ready: Vec<bool>,
}

impl MacPolicy for PPersistent {
    fn on_arrival(&mut self, arrival: &Arrival, channel: &ChannelView, rng: &mut SplitMix64) {
        self.ready[arrival.vehicle] = !channel.ongoing_busy && rng.gen::<f64>() < self.p;
    }

    fn intent(&self, vehicle: VehicleId, channel: &ChannelView) -> TxIntent {
        if self.ready[vehicle] && !channel.ongoing_busy {
            TxIntent::Slotted
        } else {
            TxIntent::Wait
        }
    }

    fn on_slot_end(&mut self, vehicle: VehicleId, busy: bool, rng: &mut SplitMix64) {
        self.ready[vehicle] = !busy && rng.gen::<f64>() < self.p;
    }

    fn on_release(&mut self, vehicle: VehicleId) {
        self.ready[vehicle] = false;
    }
}

pub fn run_example() -> dsrc_mac::Result<()> {
    let params = ScenarioParams::table1(6e6, 10.0, 200.0, 100);
    let timing = derive_timing(&params)?;
    let cfg = SimConfig {
        duration: 3.0,
        warmup: 1.0,
        ..SimConfig::default()
    };
    for p in [0.02, 0.05, 0.2] {
        let mut policy = PPersistent {
            p,
            ready: vec![false; params.n_vehicles],
        };
        let out = run_replication_with(&params, &timing, &mut policy, &cfg, 0, false);
        let m = &out.metrics;
        println!(
            "p = {p:<5} PDR {:.4}  mean delay {:.1} us  drops {}",
            m.pdr(),
            m.mean_service() * 1e6,
            m.overload_drops
        );
    }
    Ok(())
}

fn main() -> dsrc_mac::Result<()> {
    run_example()
}
