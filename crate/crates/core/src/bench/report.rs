//! Comparison report: analytic-vs-simulation residuals, SpCDC against the
//! 802.11p baselines, and pass/fail checks against configurable thresholds.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::results::{ResultRow, Source};
use super::sweep::STANDARD_CASES;
use crate::error::{Error, Result};

/// Limits the report checks the table against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Largest |analytic - simulated| PDR of the 802.11p baseline.
    pub pdr_abs: f64,
    /// Largest relative delay error of either model.
    pub delay_rel: f64,
    /// Smallest SpCDC PDR gain over the 802.11p baseline at the heavy point.
    pub pdr_gain: f64,
    /// Largest SpCDC / wide-window 802.11p reception-delay ratio at the heavy point.
    pub reception_ratio: f64,
    /// Allowed wide-window 802.11p minus SpCDC density at the heavy point.
    pub density_gap: (f64, f64),
    /// Largest fraction of generated packets dropped by overload.
    pub drop_fraction: f64,
    pub heavy_case: String,
    /// Vehicle count of the heavy point; the largest in the table if unset.
    pub heavy_n: Option<usize>,
    /// 802.11p policy whose model is validated and compared on PDR.
    pub baseline: String,
    /// 802.11p policy compared on reception delay and density.
    pub wide_baseline: String,
    pub spcdc: String,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            pdr_abs: 0.03,
            delay_rel: 0.10,
            pdr_gain: 0.10,
            reception_ratio: 0.5,
            density_gap: (5.0, 9.0),
            drop_fraction: 1e-3,
            heavy_case: STANDARD_CASES[0].id(),
            heavy_n: None,
            baseline: "dot11p:16".into(),
            wide_baseline: "dot11p:128".into(),
            spcdc: "spcdc".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The table lacks the rows the check needs.
    Skip,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "PASS"),
            Verdict::Fail => write!(f, "FAIL"),
            Verdict::Skip => write!(f, "SKIP"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            detail,
        }
    }

    fn skip(name: &str, detail: &str) -> Self {
        Self {
            name: name.into(),
            verdict: Verdict::Skip,
            detail: detail.into(),
        }
    }
}

/// Deltas of SpCDC against the baselines at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDelta {
    pub case_id: String,
    pub n_vehicles: usize,
    pub source: Source,
    /// SpCDC PDR minus baseline PDR.
    pub pdr_gain: Option<f64>,
    /// SpCDC reception delay over the wide-window baseline's.
    pub reception_ratio: Option<f64>,
    /// Wide-window baseline density minus SpCDC density.
    pub density_gap: Option<f64>,
}

/// Analytic-vs-simulation residual of one policy at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub case_id: String,
    pub n_vehicles: usize,
    pub policy: String,
    /// Simulated minus analytic PDR.
    pub pdr: f64,
    /// Simulated over analytic delay, minus one.
    pub delay_rel: f64,
    /// For SpCDC, whose analytic PDR is a lower bound: it does not exceed
    /// the simulated interval's lower edge.
    pub bound_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub residuals: Vec<Residual>,
    pub deltas: Vec<PointDelta>,
    pub checks: Vec<Check>,
    pub text: String,
}

impl Report {
    /// No check failed; skipped checks do not count.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_BASELINE_AGREEMENT: &str = "802.11p model agreement";
pub const CHECK_SPCDC_DELAY: &str = "SpCDC delay model agreement";
pub const CHECK_PDR_GAIN: &str = "SpCDC PDR gain at heavy load";
pub const CHECK_RECEPTION: &str = "SpCDC reception delay at heavy load";
pub const CHECK_BOUND: &str = "SpCDC PDR lower bound validity";
pub const CHECK_DENSITY: &str = "contention density gap at heavy load";
pub const CHECK_DROPS: &str = "overload drops";
pub const CHECK_ERRORS: &str = "all points evaluated";

type Key = (String, usize, String, Source);

fn index(rows: &[ResultRow]) -> BTreeMap<Key, &ResultRow> {
    rows.iter()
        .filter(|r| !r.failed())
        .map(|r| ((r.case_id.clone(), r.n_vehicles, r.policy.clone(), r.source), r))
        .collect()
}

/// Grid points in table order.
fn grid(rows: &[ResultRow]) -> Vec<(String, usize)> {
    let mut points: Vec<(String, usize)> = Vec::new();
    for r in rows {
        let p = (r.case_id.clone(), r.n_vehicles);
        if !points.contains(&p) {
            points.push(p);
        }
    }
    points
}

fn of<'a>(residuals: &'a [Residual], policy: &'a str) -> impl Iterator<Item = &'a Residual> {
    residuals.iter().filter(move |r| r.policy == policy)
}

fn rel(sim: f64, analytic: f64) -> f64 {
    sim / analytic - 1.0
}

/// Builds the report. Fails with `Incomparable` when SpCDC and an 802.11p
/// baseline are both present but share no grid point.
pub fn compare_report(rows: &[ResultRow], th: &Thresholds) -> Result<Report> {
    let idx = index(rows);
    let points = grid(rows);
    let has = |policy: &str| rows.iter().any(|r| r.policy == policy);
    for base in [&th.baseline, &th.wide_baseline] {
        if has(&th.spcdc) && has(base) {
            let shared = points.iter().any(|(c, n)| {
                let at = |p: &str| {
                    rows.iter()
                        .any(|r| r.case_id == *c && r.n_vehicles == *n && r.policy == p)
                };
                at(&th.spcdc) && at(base)
            });
            if !shared {
                return Err(Error::Incomparable(format!(
                    "{} and {base} share no grid point",
                    th.spcdc
                )));
            }
        }
    }
    let get = |c: &str, n: usize, p: &str, s: Source| idx.get(&(c.to_string(), n, p.to_string(), s)).copied();

    let mut policies: Vec<String> = Vec::new();
    for r in rows {
        if !policies.contains(&r.policy) {
            policies.push(r.policy.clone());
        }
    }
    let mut residuals = Vec::new();
    for (c, n) in &points {
        for p in &policies {
            if let (Some(a), Some(s)) = (get(c, *n, p, Source::Analytic), get(c, *n, p, Source::Simulation)) {
                residuals.push(Residual {
                    case_id: c.clone(),
                    n_vehicles: *n,
                    policy: p.clone(),
                    pdr: s.pdr - a.pdr,
                    delay_rel: rel(s.mean_delay_s, a.mean_delay_s),
                    bound_holds: (*p == th.spcdc).then(|| a.pdr <= s.pdr_lower_edge()),
                });
            }
        }
    }

    let mut deltas = Vec::new();
    for (c, n) in &points {
        for source in [Source::Simulation, Source::Analytic] {
            let Some(sp) = get(c, *n, &th.spcdc, source) else {
                continue;
            };
            let base = get(c, *n, &th.baseline, source);
            let wide = get(c, *n, &th.wide_baseline, source);
            if base.is_none() && wide.is_none() {
                continue;
            }
            deltas.push(PointDelta {
                case_id: c.clone(),
                n_vehicles: *n,
                source,
                pdr_gain: base.map(|b| sp.pdr - b.pdr),
                reception_ratio: wide.map(|w| sp.mean_reception_delay_s / w.mean_reception_delay_s),
                density_gap: wide.map(|w| w.contention_density - sp.contention_density),
            });
        }
    }

    let mut checks = Vec::new();
    let worst = |it: &mut dyn Iterator<Item = (&Residual, f64)>| {
        it.max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(r, v)| (format!("{} N={}", r.case_id, r.n_vehicles), v))
    };

    let base_pdr = worst(&mut of(&residuals, &th.baseline).map(|r| (r, r.pdr.abs())));
    let base_delay = worst(&mut of(&residuals, &th.baseline).map(|r| (r, r.delay_rel.abs())));
    checks.push(match (base_pdr, base_delay) {
        (Some((pp, pv)), Some((dp, dv))) => Check::new(
            CHECK_BASELINE_AGREEMENT,
            pv <= th.pdr_abs && dv <= th.delay_rel,
            format!(
                "{} points; max |dPDR| {pv:.4} at {pp} (limit {}), max |delay err| {:.1}% at {dp} (limit {:.0}%)",
                of(&residuals, &th.baseline).count(),
                th.pdr_abs,
                dv * 100.0,
                th.delay_rel * 100.0
            ),
        ),
        _ => Check::skip(CHECK_BASELINE_AGREEMENT, "needs analytic and simulated baseline rows"),
    });

    checks.push(
        match worst(&mut of(&residuals, &th.spcdc).map(|r| (r, r.delay_rel.abs()))) {
            Some((at, v)) => Check::new(
                CHECK_SPCDC_DELAY,
                v <= th.delay_rel,
                format!(
                    "{} points; max |delay err| {:.1}% at {at} (limit {:.0}%)",
                    of(&residuals, &th.spcdc).count(),
                    v * 100.0,
                    th.delay_rel * 100.0
                ),
            ),
            None => Check::skip(CHECK_SPCDC_DELAY, "needs analytic and simulated SpCDC rows"),
        },
    );

    let heavy_n = th.heavy_n.or_else(|| {
        rows.iter()
            .filter(|r| r.case_id == th.heavy_case)
            .map(|r| r.n_vehicles)
            .max()
    });
    let heavy = heavy_n.and_then(|n| {
        deltas
            .iter()
            .find(|d| d.case_id == th.heavy_case && d.n_vehicles == n && d.source == Source::Simulation)
    });
    let at = format!(
        "{} N={}",
        th.heavy_case,
        heavy_n.map_or("-".into(), |n| n.to_string())
    );
    checks.push(match heavy.and_then(|d| d.pdr_gain) {
        Some(g) => Check::new(
            CHECK_PDR_GAIN,
            g >= th.pdr_gain,
            format!("gain {g:+.4} at {at} (need >= {})", th.pdr_gain),
        ),
        None => Check::skip(
            CHECK_PDR_GAIN,
            "needs simulated SpCDC and baseline rows at the heavy point",
        ),
    });
    checks.push(match heavy.and_then(|d| d.reception_ratio) {
        Some(q) => Check::new(
            CHECK_RECEPTION,
            q <= th.reception_ratio,
            format!(
                "ratio {q:.3} vs {} at {at} (need <= {})",
                th.wide_baseline, th.reception_ratio
            ),
        ),
        None => Check::skip(
            CHECK_RECEPTION,
            "needs simulated SpCDC and wide-window rows at the heavy point",
        ),
    });

    let bounds: Vec<&Residual> = of(&residuals, &th.spcdc).collect();
    checks.push(if bounds.is_empty() {
        Check::skip(CHECK_BOUND, "needs analytic and simulated SpCDC rows")
    } else {
        let bad: Vec<String> = bounds
            .iter()
            .filter(|r| r.bound_holds == Some(false))
            .map(|r| format!("{} N={}", r.case_id, r.n_vehicles))
            .collect();
        Check::new(
            CHECK_BOUND,
            bad.is_empty(),
            format!(
                "{} violations in {} points {}",
                bad.len(),
                bounds.len(),
                bad.join(", ")
            )
            .trim_end()
            .to_string(),
        )
    });

    let (lo, hi) = th.density_gap;
    checks.push(match heavy.and_then(|d| d.density_gap) {
        Some(g) => Check::new(
            CHECK_DENSITY,
            (lo..=hi).contains(&g),
            format!(
                "{} minus SpCDC {g:.2} at {at} (need [{lo}, {hi}])",
                th.wide_baseline
            ),
        ),
        None => Check::skip(
            CHECK_DENSITY,
            "needs simulated SpCDC and wide-window rows at the heavy point",
        ),
    });

    let sims: Vec<&ResultRow> = idx
        .values()
        .filter(|r| r.source == Source::Simulation)
        .copied()
        .collect();
    checks.push(
        match sims
            .iter()
            .max_by(|a, b| a.overload_fraction().total_cmp(&b.overload_fraction()))
        {
            Some(r) => Check::new(
                CHECK_DROPS,
                r.overload_fraction() < th.drop_fraction,
                format!(
                    "max {:.4}% of generated at {} N={} {} (limit {}%)",
                    r.overload_fraction() * 100.0,
                    r.case_id,
                    r.n_vehicles,
                    r.policy,
                    th.drop_fraction * 100.0
                ),
            ),
            None => Check::skip(CHECK_DROPS, "needs simulated rows"),
        },
    );

    let failed: Vec<String> = rows
        .iter()
        .filter(|r| r.failed())
        .map(|r| {
            format!(
                "{} N={} {} {}: {}",
                r.case_id, r.n_vehicles, r.policy, r.source, r.errors
            )
        })
        .collect();
    checks.push(Check::new(
        CHECK_ERRORS,
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} rows", rows.len())
        } else {
            failed.join("; ")
        },
    ));

    let text = render_text(&residuals, &deltas, &checks);
    Ok(Report {
        residuals,
        deltas,
        checks,
        text,
    })
}

fn render_text(residuals: &[Residual], deltas: &[PointDelta], checks: &[Check]) -> String {
    let mut t = String::new();
    let opt = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
    if !residuals.is_empty() {
        let _ = writeln!(t, "Analytic vs simulation");
        let _ = writeln!(
            t,
            "{:<20} {:>5} {:<14} {:>9} {:>9} {:>6}",
            "case", "N", "policy", "dPDR", "delay", "bound"
        );
        for r in residuals {
            let _ = writeln!(
                t,
                "{:<20} {:>5} {:<14} {:>+9.4} {:>+8.1}% {:>6}",
                r.case_id,
                r.n_vehicles,
                r.policy,
                r.pdr,
                r.delay_rel * 100.0,
                match r.bound_holds {
                    Some(true) => "ok",
                    Some(false) => "no",
                    None => "",
                }
            );
        }
        t.push('\n');
    }
    if !deltas.is_empty() {
        let _ = writeln!(t, "SpCDC vs 802.11p");
        let _ = writeln!(
            t,
            "{:<20} {:>5} {:<10} {:>9} {:>9} {:>9}",
            "case", "N", "source", "dPDR", "Tre ratio", "dDensity"
        );
        for d in deltas {
            let _ = writeln!(
                t,
                "{:<20} {:>5} {:<10} {:>9} {:>9} {:>9}",
                d.case_id,
                d.n_vehicles,
                d.source.to_string(),
                opt(d.pdr_gain, 4),
                opt(d.reception_ratio, 3),
                opt(d.density_gap, 2)
            );
        }
        t.push('\n');
    }
    let _ = writeln!(t, "Checks");
    for c in checks {
        let _ = writeln!(t, "[{}] {}: {}", c.verdict, c.name, c.detail);
    }
    t
}
