// Records the per-packet trace of one replication, writes it as CSV and
// recomputes each vehicle's reception delay from it.
//
//     cargo run --example packet_trace -- trace.csv

use dsrc_mac::mac::PolicyKind;
use dsrc_mac::sim::{reception_delay_accumulate, run_replication, Outcome, SimConfig};
use dsrc_mac::ScenarioParams;

pub fn run_example() -> dsrc_mac::Result<()> {
    record(None)
}

fn record(path: Option<String>) -> dsrc_mac::Result<()> {
    let params = ScenarioParams::table1(6e6, 10.0, 200.0, 120);
    let cfg = SimConfig {
        duration: 3.0,
        warmup: 1.0,
        trace: true,
        ..SimConfig::default()
    };
    let out = run_replication(&params, PolicyKind::Dot11p { cw: None }, &cfg, 0)?;
    let trace = out.trace.expect("trace requested");
    let collided = trace
        .records
        .iter()
        .filter(|r| r.outcome == Outcome::Collided)
        .count();
    println!("{} packets resolved, {collided} collided", trace.records.len());

    let mut worst = (0, 0.0);
    for v in 0..params.n_vehicles {
        if let Some(d) = reception_delay_accumulate(&trace.vehicle_sequence(v), params.lambda) {
            if d > worst.1 {
                worst = (v, d);
            }
        }
    }
    println!(
        "largest mean reception delay: vehicle {} with {:.2} ms",
        worst.0,
        worst.1 * 1e3
    );

    match path {
        Some(path) => {
            trace.write_csv(std::fs::File::create(&path)?)?;
            println!("trace written to {path}");
        }
        None => {
            let mut head = Vec::new();
            trace.write_csv(&mut head)?;
            for line in String::from_utf8_lossy(&head).lines().take(4) {
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> dsrc_mac::Result<()> {
    record(std::env::args().nth(1))
}
