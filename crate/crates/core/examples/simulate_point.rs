// Simulates one operating point with both MACs and sets the estimates
// beside the analytic predictions.
//
//     cargo run --release --example simulate_point -- 150 20

use dsrc_mac::analytic::{solve_fixed_point, solve_spcdc_fixed_point, SolverOptions};
use dsrc_mac::mac::PolicyKind;
use dsrc_mac::sim::{run, SimConfig};
use dsrc_mac::ScenarioParams;

pub fn run_example() -> dsrc_mac::Result<()> {
    simulate(100, 4.0)
}

fn simulate(n: usize, duration: f64) -> dsrc_mac::Result<()> {
    let params = ScenarioParams::table1(6e6, 10.0, 200.0, n);
    let cfg = SimConfig {
        duration,
        warmup: 1.0,
        replications: 4,
        ..SimConfig::default()
    };
    let opts = SolverOptions::default();
    let dot11p = solve_fixed_point(&params, &opts)?;
    let spcdc = solve_spcdc_fixed_point(&params, &opts)?;

    println!("N = {n}, {} replications of {duration} s", cfg.replications);
    for (policy, pdr, delay) in [
        (PolicyKind::Dot11p { cw: None }, dot11p.pdr, dot11p.e_s),
        (PolicyKind::Spcdc { oracle: false }, spcdc.pdr_lower, spcdc.e_td),
    ] {
        let out = run(&params, policy, &cfg)?;
        let m = &out.metrics;
        println!(
            "{:<10} PDR sim {:.4} ± {:.4} model {:.4} | delay sim {:.1} us model {:.1} us | density {:.2}",
            policy.label(&params),
            m.pdr,
            m.pdr_ci.unwrap_or(0.0),
            pdr,
            m.mean_service * 1e6,
            delay * 1e6,
            m.mean_density
        );
        assert_eq!(out.csma_violations, 0);
    }
    Ok(())
}

fn main() -> dsrc_mac::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let duration = args.next().and_then(|a| a.parse().ok()).unwrap_or(4.0);
    simulate(n, duration)
}
