// Solves the SpCDC contention-density model and compares its PDR lower
// bound with the 802.11p model at the same operating points.
//
//     cargo run --example analytic_spcdc

use dsrc_mac::analytic::{solve_fixed_point, solve_spcdc_fixed_point, SolverOptions};
use dsrc_mac::ScenarioParams;

pub fn run_example() -> dsrc_mac::Result<()> {
    let opts = SolverOptions::default();
    println!(
        "{:>4} {:>7} {:>7} {:>7} {:>10} {:>10} {:>10} {:>9}",
        "N", "c_s", "gamma", "P_ck0", "E[T_d] us", "PDR low", "11p PDR", "iters"
    );
    for n in [10, 50, 100, 150, 200] {
        let p = ScenarioParams::table1(6e6, 10.0, 200.0, n);
        let s = solve_spcdc_fixed_point(&p, &opts)?;
        let d = solve_fixed_point(&p, &opts)?;
        println!(
            "{n:>4} {:>7.3} {:>7.4} {:>7.4} {:>10.1} {:>10.4} {:>10.4} {:>9}",
            s.c_s,
            s.gamma,
            s.p_ck0,
            s.e_td * 1e6,
            s.pdr_lower,
            d.pdr,
            s.iterations
        );
    }

    // The multiplier C spreads contenders over more idle slots.
    let p = ScenarioParams::table1(6e6, 10.0, 200.0, 200);
    for c in [1, 3, 5] {
        let s = solve_spcdc_fixed_point(
            &ScenarioParams {
                spcdc_c: c,
                ..p.clone()
            },
            &opts,
        )?;
        println!(
            "C={c}  PDR lower bound {:.4}  E[T_d] {:.1} us",
            s.pdr_lower,
            s.e_td * 1e6
        );
    }
    Ok(())
}

fn main() -> dsrc_mac::Result<()> {
    run_example()
}
