// Runs a small grid with both MACs, writes results.csv/json, SVG plots and
// the comparison report into a directory.
//
//     cargo run --release --example sweep_report -- out/

use std::path::{Path, PathBuf};

use dsrc_mac::bench::{self, results, Source, SweepSpec, Thresholds, STANDARD_CASES};

pub fn run_example() -> dsrc_mac::Result<()> {
    sweep(&std::env::temp_dir().join("dsrc-mac-sweep"))
}

fn sweep(dir: &Path) -> dsrc_mac::Result<()> {
    let spec = SweepSpec {
        cases: STANDARD_CASES[..1].to_vec(),
        n_values: vec![50, 100, 150],
        policies: vec!["dot11p:16".into(), "dot11p:128".into(), "spcdc".into()],
        sources: vec![Source::Analytic, Source::Simulation],
        replications: 3,
        duration: 3.0,
        warmup: 1.0,
        ..SweepSpec::default()
    };
    std::fs::create_dir_all(dir)?;
    let mut sink = bench::RowSink::create(dir.join("results.csv"))?;
    let rows = bench::run_sweep(&spec, Some(&mut sink))?;
    results::save(&rows, dir)?;
    let plots = bench::render_plots(&rows, dir.join("plots"))?;

    // Short runs: judge the heavy-load claims at the largest N simulated here.
    let report = bench::compare_report(&rows, &Thresholds::default())?;
    std::fs::write(dir.join("report.txt"), &report.text)?;
    print!("{}", report.text);
    println!("{} rows, {} plots in {}", rows.len(), plots.len(), dir.display());
    Ok(())
}

fn main() -> dsrc_mac::Result<()> {
    match std::env::args().nth(1) {
        Some(dir) => sweep(&PathBuf::from(dir)),
        None => run_example(),
    }
}
