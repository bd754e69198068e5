//! Hand-emitted SVG line plots of result tables.
//!
//! Analytic rows are drawn as polylines, simulation rows as markers with
//! their PDR interval as whiskers. Axes follow the data extents, so the same
//! table always produces the same bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::results::{ResultRow, Source};
use crate::error::{Error, Result};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Pdr,
    Delay,
    ReceptionDelay,
    Density,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Pdr,
        Metric::Delay,
        Metric::ReceptionDelay,
        Metric::Density,
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            Metric::Pdr => "pdr",
            Metric::Delay => "delay",
            Metric::ReceptionDelay => "reception_delay",
            Metric::Density => "contention_density",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Metric::Pdr => "Packet delivery ratio",
            Metric::Delay => "Mean delay",
            Metric::ReceptionDelay => "Mean reception delay",
            Metric::Density => "Contention density",
        }
    }

    fn y_label(self) -> &'static str {
        match self {
            Metric::Pdr => "PDR",
            Metric::Delay | Metric::ReceptionDelay => "delay (ms)",
            Metric::Density => "contending packets",
        }
    }

    /// Plotted value; delays are shown in milliseconds.
    fn value(self, row: &ResultRow) -> f64 {
        match self {
            Metric::Pdr => row.pdr,
            Metric::Delay => row.mean_delay_s * 1e3,
            Metric::ReceptionDelay => row.mean_reception_delay_s * 1e3,
            Metric::Density => row.contention_density,
        }
    }

    fn whisker(self, row: &ResultRow) -> Option<f64> {
        match self {
            Metric::Pdr => row.pdr_ci,
            _ => None,
        }
    }
}

/// Points of one (case, policy) pair, split by source.
struct Series {
    label: String,
    analytic: Vec<(f64, f64)>,
    simulated: Vec<(f64, f64, Option<f64>)>,
}

fn collect_series(rows: &[ResultRow], metric: Metric) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for row in rows.iter().filter(|r| !r.failed()) {
        let y = metric.value(row);
        if !y.is_finite() {
            continue;
        }
        let label = format!("{} {}", row.case_id, row.policy);
        let idx = match series.iter().position(|s| s.label == label) {
            Some(i) => i,
            None => {
                series.push(Series {
                    label,
                    analytic: Vec::new(),
                    simulated: Vec::new(),
                });
                series.len() - 1
            }
        };
        let x = row.n_vehicles as f64;
        match row.source {
            Source::Analytic => series[idx].analytic.push((x, y)),
            Source::Simulation => series[idx].simulated.push((x, y, metric.whisker(row))),
        }
    }
    for s in &mut series {
        s.analytic.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    series
}

/// Round step giving about `target` intervals over `span`.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        (lo - pad, hi + pad)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

/// SVG document of one metric over all series in `rows`, or `None` when no
/// row has a finite value for it.
pub fn render_svg(rows: &[ResultRow], metric: Metric) -> Option<String> {
    let series = collect_series(rows, metric);
    if series.is_empty() {
        return None;
    }
    let xs = series.iter().flat_map(|s| {
        s.analytic
            .iter()
            .map(|p| p.0)
            .chain(s.simulated.iter().map(|p| p.0))
    });
    let (x0, x1) = extent(xs);
    let ys = series.iter().flat_map(|s| {
        s.analytic.iter().map(|p| p.1).chain(
            s.simulated
                .iter()
                .flat_map(|&(_, y, w)| [y - w.unwrap_or(0.0), y + w.unwrap_or(0.0)]),
        )
    });
    let (y0, y1) = extent(ys);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        metric.title()
    );

    let xstep = tick_step(x1 - x0, 8.0);
    let mut t = (x0 / xstep).ceil() * xstep;
    while t <= x1 {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP,
            TOP + plot_h,
            TOP + plot_h + 18.0,
            fmt_tick(t, xstep)
        );
        t += xstep;
    }
    let ystep = tick_step(y1 - y0, 6.0);
    let mut t = (y0 / ystep).ceil() * ystep;
    while t <= y1 {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0,
            fmt_tick(t, ystep)
        );
        t += ystep;
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">number of vehicles</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + plot_h / 2.0,
        metric.y_label()
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.analytic.len() > 1 {
            let points: Vec<String> = s
                .analytic
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                points.join(" ")
            );
        } else if let Some(&(x, y)) = s.analytic.first() {
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="6" height="6" fill="{color}"/>"#,
                sx(x) - 3.0,
                sy(y) - 3.0
            );
        }
        for &(x, y, w) in &s.simulated {
            if let Some(w) = w {
                let _ = writeln!(
                    svg,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"/>"#,
                    sx(x),
                    sy(y - w),
                    sx(x),
                    sy(y + w)
                );
            }
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = TOP + 14.0 + i as f64 * 20.0;
        let lx = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><circle cx="{:.2}" cy="{ly:.2}" r="3.5" fill="none" stroke="{color}" stroke-width="1.5"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 24.0,
            lx + 12.0,
            lx + 32.0,
            ly + 4.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

/// Writes one SVG per metric into `dir` and returns the paths written.
pub fn render_plots(rows: &[ResultRow], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    render_metrics(rows, dir, &Metric::ALL)
}

pub fn render_metrics(rows: &[ResultRow], dir: impl AsRef<Path>, metrics: &[Metric]) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::invalid("results", "nothing to plot in an empty table"));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for &metric in metrics {
        if let Some(svg) = render_svg(rows, metric) {
            let path = dir.join(format!("{}.svg", metric.file_stem()));
            std::fs::write(&path, svg)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(case: &str, n: usize, source: Source, pdr: f64) -> ResultRow {
        ResultRow {
            case_id: case.into(),
            n_vehicles: n,
            policy: "dot11p:16".into(),
            source,
            pdr,
            pdr_ci: (source == Source::Simulation).then_some(0.01),
            mean_delay_s: 1e-3,
            mean_reception_delay_s: 2e-3,
            contention_density: 1.0,
            overload_drops: 0,
            generated: 10,
            runtime_s: 0.0,
            seed: None,
            errors: String::new(),
        }
    }

    #[test]
    fn one_series_per_case_and_policy() {
        let mut rows = Vec::new();
        for case in ["a", "b", "c"] {
            for n in [10, 20, 30] {
                rows.push(row(case, n, Source::Analytic, 1.0 - n as f64 / 100.0));
            }
        }
        let svg = render_svg(&rows, Metric::Pdr).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        for case in ["a", "b", "c"] {
            assert!(svg.contains(&format!(">{case} dot11p:16</text>")));
        }
        assert_eq!(svg, render_svg(&rows, Metric::Pdr).unwrap());
    }

    #[test]
    fn single_point_renders() {
        let svg = render_svg(&[row("a", 10, Source::Simulation, 0.9)], Metric::Pdr).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(tick_step(190.0, 8.0), 20.0);
        assert_eq!(tick_step(0.2, 6.0), 0.05);
        assert_eq!(fmt_tick(0.05, 0.05), "0.05");
    }
}
