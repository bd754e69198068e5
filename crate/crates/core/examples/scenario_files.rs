// Reads a scenario in both accepted renderings and a sweep file that builds
// on it.
//
//     cargo run --example scenario_files

use dsrc_mac::bench::SweepSpec;
use dsrc_mac::ScenarioParams;

const KV: &str = "
lambda = 10.0
n_vehicles = 150
data_rate = 12e6
payload_bytes = 400.0
";

const JSON: &str = r#"{ "lambda": 10.0, "n_vehicles": 150, "data_rate": 12e6, "payload_bytes": 400.0 }"#;

const SWEEP: &str = "
cw = 32
n_values = [20, 40, 60]
policies = [\"dot11p\", \"spcdc\"]
replications = 5
cases = [
  { data_rate = 6e6, lambda = 10.0, payload_bytes = 200.0 },
  { data_rate = 24e6, lambda = 2.0, payload_bytes = 200.0 },
]
";

pub fn run_example() -> dsrc_mac::Result<()> {
    let kv = ScenarioParams::parse(KV)?;
    let json = ScenarioParams::parse(JSON)?;
    assert_eq!(kv, json);
    let timing = kv.validate()?;
    println!(
        "T_H {:.3} us, T_tr {:.3} us, {} slots per transmission",
        timing.t_header * 1e6,
        timing.t_tr * 1e6,
        timing.slots_per_tx
    );
    print!("{}", kv.to_kv_string());

    let spec = SweepSpec::parse(SWEEP)?;
    spec.validate()?;
    println!(
        "sweep: CW {} over N {:?} for cases {:?}",
        spec.base.cw,
        spec.n_values,
        spec.case_ids()
    );

    let bad = ScenarioParams::parse("slot = 16e-6\ndifs = 50e-6")?;
    if let Err(e) = bad.validate() {
        println!("rejected: {e}");
    }
    Ok(())
}

fn main() -> dsrc_mac::Result<()> {
    run_example()
}
