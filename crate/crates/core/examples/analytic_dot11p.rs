// Solves the 802.11p broadcast model over a range of vehicle counts and
// prints the delay decomposition next to the delivery ratio.
//
//     cargo run --example analytic_dot11p

use dsrc_mac::analytic::{solve_fixed_point, SolverOptions};
use dsrc_mac::ScenarioParams;

pub fn run_example() -> dsrc_mac::Result<()> {
    let base = ScenarioParams::table1(6e6, 10.0, 200.0, 10);
    let opts = SolverOptions::default();
    println!(
        "{:>4} {:>8} {:>8} {:>8} {:>10} {:>10} {:>10} {:>8}",
        "N", "rho", "p_b", "PDR", "E[T_A] us", "E[S] us", "E[T_re] ms", "density"
    );
    for n in [1, 10, 50, 100, 150, 200] {
        let a = solve_fixed_point(&base.with_vehicles(n), &opts)?;
        println!(
            "{n:>4} {:>8.4} {:>8.4} {:>8.4} {:>10.1} {:>10.1} {:>10.3} {:>8.3}",
            a.rho,
            a.p_b,
            a.pdr,
            a.e_ta * 1e6,
            a.e_s * 1e6,
            a.e_tre * 1e3,
            a.cs_prime
        );
    }

    // A wider window trades access delay for fewer collisions.
    let heavy = base.with_vehicles(200);
    for cw in [16, 64, 128] {
        let a = solve_fixed_point(&heavy.with_cw(cw), &opts)?;
        println!("CW={cw:<4} PDR {:.4}  E[S] {:.1} us", a.pdr, a.e_s * 1e6);
    }
    Ok(())
}

fn main() -> dsrc_mac::Result<()> {
    run_example()
}
