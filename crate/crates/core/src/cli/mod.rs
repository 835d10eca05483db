//! Command-line front end: specs, subcommands and artifact emitters.

pub mod report;
pub mod spec;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fronttrack::FrontTrace;
use crate::genfam::build_wavefront;
use crate::iterate::{extract_shocks, iterated_minmax, Subdivision};
use crate::minmax::{exact_minmax, minmax_grid, minmax_step, FiberBox, SamplePlan};
use crate::plfun::{conjugate, EnvelopeKind, PLFunction};
use crate::riemann::{fan_eval, solve_fan};

pub use report::{Report, Series, Style, Table};
pub use spec::{parse_spec, OutputFormat, ProblemSpec, SubdivisionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Profiles,
    Shocks,
    Errors,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// Front tracking to `T`: profile and shock diagram.
    Solve,
    /// One-step minmax profile at `T`; with `at`, pointwise values.
    Minmax { at: Option<f64> },
    /// Iterated minmax over the spec's subdivision (or `steps` uniform steps).
    Iterate { steps: Option<usize>, emit: Emit },
    /// Wave front at `T`.
    Wavefront,
    /// Fan of the single kink of `v`.
    Riemann,
    /// Legendre-Fenchel conjugate of `H`.
    Conjugate,
    /// Envelope of `H` on `interval` (default: the slope range of `v`).
    Envelope { kind: EnvelopeKind, interval: Option<(f64, f64)> },
    /// Front tracking vs one-step and iterated minmax.
    Compare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub reports: Vec<Report>,
    pub summary: String,
}

impl RunOutput {
    /// Writes `<name>.<ext>` for every report and format; returns the paths.
    pub fn write(&self, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for r in &self.reports {
            for &f in formats {
                let path = dir.join(format!("{}.{}", r.name, f.extension()));
                std::fs::write(&path, r.render(f))?;
                paths.push(path);
            }
        }
        Ok(paths)
    }
}

/// Sampling window: the spec's domain, else the kinks of `v` widened by the
/// propagation distance.
pub fn plot_domain(spec: &ProblemSpec) -> (f64, f64) {
    if let Some(d) = spec.domain {
        return d;
    }
    let v = &spec.initial;
    let lip = v.lipschitz();
    let reach = spec.horizon * spec.hamiltonian.lipschitz_on(-lip, lip) + 1.0;
    let kinks = v.kinks();
    match (kinks.first(), kinks.last()) {
        (Some(&a), Some(&b)) => (a - reach, b + reach),
        _ => (-reach, reach),
    }
}

/// Endpoints plus interior breakpoints: the exact graph on `[a, b]`.
pub fn profile_points(u: &PLFunction, a: f64, b: f64) -> Vec<(f64, f64)> {
    std::iter::once(a)
        .chain(u.breakpoints().iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .map(|x| (x, u.eval(x)))
        .collect()
}

fn subdivision(spec: &ProblemSpec, steps: Option<usize>) -> Result<Subdivision> {
    match (steps, &spec.subdivision) {
        (Some(n), _) | (None, &SubdivisionSpec::Count(n)) => Subdivision::uniform(spec.horizon, n),
        (None, SubdivisionSpec::Times(ts)) => Subdivision::explicit(ts.clone()),
    }
}

fn shock_segments(tr: &FrontTrace, horizon: f64) -> Vec<Vec<f64>> {
    tr.shocks
        .iter()
        .map(|s| {
            let (t1, x1) = s.death.unwrap_or((horizon, s.position(horizon)));
            vec![s.birth.0, s.birth.1, t1, x1, s.speed, s.left_slope, s.right_slope]
        })
        .collect()
}

fn solve(spec: &ProblemSpec) -> Result<RunOutput> {
    let (a, b) = plot_domain(spec);
    let t = spec.horizon;
    let tr = FrontTrace::evolve(&spec.initial, &spec.hamiltonian, t)?;
    let u = tr.profile_at(t)?;
    let profile = Report::new("solve_profile", &format!("viscosity solution at t = {t}"), "x", "u")
        .with_series("v", Style::Dashed, profile_points(&spec.initial, a, b))
        .with_series("u", Style::Line, profile_points(&u, a, b));
    let segments = shock_segments(&tr, t);
    let mut shocks = Report::new("solve_shocks", "shock diagram", "x", "t");
    for s in &segments {
        shocks = shocks.with_series("shock", Style::Line, vec![(s[1], s[0]), (s[3], s[2])]);
    }
    shocks = shocks
        .with_series("collision", Style::Points, tr.events.iter().map(|e| (e.x, e.time)).collect())
        .with_table(
            &["t_birth", "x_birth", "t_end", "x_end", "speed", "left_slope", "right_slope"],
            segments,
        );
    let mut summary = format!("shocks: {}\ncollisions: {}\n", tr.shocks.len(), tr.events.len());
    for e in &tr.events {
        let _ = writeln!(summary, "collision at t = {}, x = {}", e.time, e.x);
    }
    Ok(RunOutput {
        reports: vec![profile, shocks],
        summary,
    })
}

fn minmax(spec: &ProblemSpec, at: Option<f64>) -> Result<RunOutput> {
    let (a, b) = plot_domain(spec);
    let (v, h, t) = (&spec.initial, &spec.hamiltonian, spec.horizon);
    let plan = SamplePlan {
        engine: spec.engine,
        domain: Some((a, b)),
        ..SamplePlan::default()
    };
    let u = minmax_step(v, h, t, &plan)?;
    let mut report = Report::new("minmax_profile", &format!("minmax at t = {t}"), "x", "u")
        .with_series("minmax", Style::Line, profile_points(&u, a, b));
    if let Ok(tr) = FrontTrace::evolve(v, h, t) {
        report = report.with_series("viscosity", Style::Dashed, profile_points(&tr.profile_at(t)?, a, b));
    }
    let mut summary = format!("kinks: {}\n", u.kinks().len());
    if let Some(x) = at {
        let exact = exact_minmax(v, h, t, x)?;
        let (nx, ny) = spec.grid;
        let g = minmax_grid(v, h, t, x, FiberBox::auto(v, h, t, x, nx, ny))?;
        report = report.with_table(
            &["x", "exact_minmax", "grid_minmax", "grid_maxmin", "tolerance"],
            vec![vec![x, exact, g.minmax_value, g.maxmin_value, g.tolerance]],
        );
        let _ = writeln!(
            summary,
            "x = {x}: minmax {exact} (grid {} / maxmin {}, tolerance {})",
            g.minmax_value, g.maxmin_value, g.tolerance
        );
    }
    Ok(RunOutput {
        reports: vec![report],
        summary,
    })
}

fn iterate(spec: &ProblemSpec, steps: Option<usize>, emit: Emit) -> Result<RunOutput> {
    let (a, b) = plot_domain(spec);
    let (v, h) = (&spec.initial, &spec.hamiltonian);
    let zeta = subdivision(spec, steps)?;
    let tr = iterated_minmax(v, h, &zeta, spec.engine)?;
    let times = zeta.times();
    let name = match emit {
        Emit::Profiles => "iterate_profiles",
        Emit::Shocks => "iterate_shocks",
        Emit::Errors => "iterate_errors",
    };
    let report = match emit {
        Emit::Profiles => {
            let mut r = Report::new(name, &format!("iterated minmax, {} steps", zeta.steps()), "x", "u");
            for (p, t) in tr.profiles.iter().zip(times) {
                r = r.with_series(&format!("t = {t}"), Style::Line, profile_points(p, a, b));
            }
            r
        }
        Emit::Shocks => {
            let mut r = Report::new(name, "shocks: reference vs iterated", "x", "t");
            if let Ok(ft) = FrontTrace::evolve(v, h, zeta.horizon()) {
                for s in shock_segments(&ft, zeta.horizon()) {
                    if (s[5] - s[6]).abs() >= crate::iterate::SIGNIFICANT_JUMP {
                        r = r.with_series("reference", Style::Line, vec![(s[1], s[0]), (s[3], s[2])]);
                    }
                }
            }
            let mut rows = Vec::new();
            for (i, p) in extract_shocks(&tr, h).iter().enumerate() {
                r = r.with_series("iterated", Style::Dashed, p.points.iter().map(|q| (q.x, q.t)).collect());
                rows.extend(p.points.iter().map(|q| vec![i as f64, q.t, q.x, q.left_slope, q.right_slope]));
            }
            r.with_table(&["path", "t", "x", "left_slope", "right_slope"], rows)
        }
        Emit::Errors => Report::new(name, "sup error vs front tracking", "t", "error").with_table(
            &["t", "error"],
            times.iter().zip(&tr.errors).map(|(&t, &e)| vec![t, e]).collect(),
        ),
    };
    let summary = match tr.final_error() {
        Some(e) => format!("steps: {}\nfinal error: {e:.6e}\n", zeta.steps()),
        None => format!("steps: {}\nfinal error: unavailable\n", zeta.steps()),
    };
    Ok(RunOutput {
        reports: vec![report],
        summary,
    })
}

fn wavefront(spec: &ProblemSpec) -> Result<RunOutput> {
    let (a, b) = plot_domain(spec);
    let t = spec.horizon;
    let front = build_wavefront(&spec.initial, &spec.hamiltonian, t)?;
    let mut r = Report::new("wavefront", &format!("wave front at t = {t}"), "x", "u");
    let mut rows = Vec::new();
    for s in &front.segments {
        let (lo, hi) = s.x_range();
        let (lo, hi) = (lo.max(a), hi.min(b));
        if lo > hi {
            continue;
        }
        let (label, style) = if s.is_fan() { ("fan", Style::Dashed) } else { ("genuine", Style::Line) };
        r = r.with_series(label, style, vec![(lo, s.value(lo)), (hi, s.value(hi))]);
        rows.push(vec![lo, hi, s.slope, s.intercept, f64::from(u8::from(s.is_fan()))]);
    }
    let mut summary = format!("segments in window: {}\n", rows.len());
    for (x, u) in front.triple_points(1e-9) {
        let _ = writeln!(summary, "warning: near-degenerate front, three segments meet at ({x}, {u})");
    }
    Ok(RunOutput {
        reports: vec![r.with_table(&["x_start", "x_end", "slope", "intercept", "fan"], rows)],
        summary,
    })
}

fn riemann(spec: &ProblemSpec) -> Result<RunOutput> {
    let v = &spec.initial;
    let jumps = v.kink_jumps();
    let &[(x0, pm, pp)] = jumps.as_slice() else {
        return Err(Error::Spec {
            field: "v".into(),
            message: format!("riemann needs exactly one kink, found {}", jumps.len()),
        });
    };
    let h = &spec.hamiltonian;
    let t = spec.horizon;
    let fan = solve_fan(pm, pp, h, (0.0, x0));
    let (a, b) = plot_domain(spec);
    let mut xs: Vec<f64> = fan.speeds.iter().map(|s| x0 + t * s).filter(|&x| x > a && x < b).collect();
    xs.insert(0, a);
    xs.push(b);
    let v0 = v.eval(x0);
    let pts = xs
        .iter()
        .map(|&x| fan_eval(&fan, h, v0, t, x).map(|u| (x, u)))
        .collect::<Result<Vec<_>>>()?;
    let rows = fan
        .speeds
        .iter()
        .enumerate()
        .map(|(i, &s)| vec![s, fan.slopes[i], fan.slopes[i + 1]])
        .collect();
    let kind = serde_json::to_string(&fan.kind).unwrap_or_default();
    let r = Report::new("riemann", &format!("Riemann fan at t = {t}"), "x", "u")
        .with_series("u", Style::Line, pts)
        .with_table(&["speed", "left_slope", "right_slope"], rows);
    Ok(RunOutput {
        reports: vec![r],
        summary: format!("fan: {} kind {kind}, {} rays\n", if pm > pp { "concave" } else { "convex" }, fan.speeds.len()),
    })
}

fn conjugate_cmd(spec: &ProblemSpec) -> Result<RunOutput> {
    let g = conjugate(&spec.hamiltonian)?;
    let (lo, hi) = g.domain();
    let pts: Vec<(f64, f64)> = g.breakpoints().iter().zip(g.values()).map(|(&y, &u)| (y + 0.0, u + 0.0)).collect();
    let mut summary = format!("domain [{lo}, {hi}]\n");
    for &(y, u) in &pts {
        let _ = writeln!(summary, "H*({y}) = {u}");
    }
    let r = Report::new("conjugate", "Legendre-Fenchel conjugate of H", "y", "H*")
        .with_series("H*", Style::Line, pts.clone())
        .with_table(&["y", "value"], pts.iter().map(|&(y, u)| vec![y, u]).collect());
    Ok(RunOutput {
        reports: vec![r],
        summary,
    })
}

fn envelope(spec: &ProblemSpec, kind: EnvelopeKind, interval: Option<(f64, f64)>) -> Result<RunOutput> {
    let h = &spec.hamiltonian;
    let (a, b) = match interval {
        Some(i) => i,
        None => spec
            .initial
            .slopes()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s))),
    };
    let env = h.envelope(a, b, kind)?;
    let verts = h.hull_vertices(a, b, kind)?;
    let label = match kind {
        EnvelopeKind::Convex => "convex envelope",
        EnvelopeKind::Concave => "concave envelope",
    };
    let r = Report::new("envelope", &format!("{label} of H on [{a}, {b}]"), "p", "H")
        .with_series("H", Style::Dashed, profile_points(h, a, b))
        .with_series(label, Style::Line, profile_points(&env, a, b))
        .with_table(&["p", "value"], verts.iter().map(|&(p, u)| vec![p, u]).collect());
    Ok(RunOutput {
        reports: vec![r],
        summary: format!("{label}: {} vertices\n", verts.len()),
    })
}

fn compare(spec: &ProblemSpec) -> Result<RunOutput> {
    let (a, b) = plot_domain(spec);
    let (v, h, t) = (&spec.initial, &spec.hamiltonian, spec.horizon);
    let reference = FrontTrace::evolve(v, h, t)?;
    let j = reference.profile_at(t)?;
    let zeta = subdivision(spec, None)?;
    let n = zeta.steps();
    let mut counts: Vec<usize> = std::iter::successors(Some(1usize), |k| Some(k * 2))
        .take_while(|&k| k < n)
        .collect();
    counts.push(n);
    let lip = v.lipschitz();
    let hmax = h.max_abs_on(-lip, lip);
    let k = reference.events.len() as f64;
    let mut rows = Vec::new();
    let mut one = None;
    let mut last = None;
    for &m in &counts {
        let z = if m == n { zeta.clone() } else { Subdivision::uniform(t, m)? };
        let tr = iterated_minmax(v, h, &z, spec.engine)?;
        let err = tr.last().sup_distance_on(&j, a, b);
        rows.push(vec![m as f64, z.mesh(), err, 2.0 * k * hmax * z.mesh()]);
        if m == 1 {
            one = Some(tr.last().clone());
        }
        last = Some(tr.last().clone());
    }
    let one = one.expect("one step is always run");
    let last = last.expect("at least one row");
    let pts = profile_points(&j, a, b);
    let gap = pts
        .iter()
        .map(|&(x, _)| x)
        .chain(one.breakpoints().iter().copied().filter(|&x| x > a && x < b))
        .map(|x| j.eval(x) - one.eval(x))
        .fold(f64::NEG_INFINITY, f64::max);
    let profiles = Report::new("compare_profiles", &format!("profiles at t = {t}"), "x", "u")
        .with_series("front tracking", Style::Line, pts)
        .with_series("1-step minmax", Style::Dashed, profile_points(&one, a, b))
        .with_series(&format!("{n}-step minmax"), Style::Dashed, profile_points(&last, a, b));
    let table = Report::new("compare_errors", "sup error vs front tracking", "steps", "error")
        .with_table(&["steps", "mesh", "error", "bound"], rows.clone());
    let mut summary = String::from("steps,mesh,error,bound\n");
    for r in &rows {
        let _ = writeln!(summary, "{},{},{:.6e},{:.6e}", r[0], r[1], r[2], r[3]);
    }
    let _ = writeln!(summary, "max (J - R) over the window: {gap:.6e}");
    Ok(RunOutput {
        reports: vec![profiles, table],
        summary,
    })
}

pub fn run(spec: &ProblemSpec, command: &Command) -> Result<RunOutput> {
    match command {
        Command::Solve => solve(spec),
        Command::Minmax { at } => minmax(spec, *at),
        Command::Iterate { steps, emit } => iterate(spec, *steps, *emit),
        Command::Wavefront => wavefront(spec),
        Command::Riemann => riemann(spec),
        Command::Conjugate => conjugate_cmd(spec),
        Command::Envelope { kind, interval } => envelope(spec, *kind, *interval),
        Command::Compare => compare(spec),
    }
}

/// Regenerates every format of a report from its JSON dump.
pub fn render_dump(json: &str) -> Result<Report> {
    serde_json::from_str(json).map_err(|e| Error::Spec {
        field: "<dump>".into(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> ProblemSpec {
        parse_spec(text).unwrap()
    }

    const W: &str = r#"{
        "H": {"breakpoints": [-2, -1, 0, 1, 2], "values": [2, 0.5, 0, 0.5, 2], "tails": [-1.5, 1.5]},
        "v": {"breakpoints": [0, 1], "values": [0, -1], "tails": [2, 2]},
        "T": 2, "domain": [-1, 4]
    }"#;

    #[test]
    fn solve_reports_the_collision() {
        let out = run(&spec(W), &Command::Solve).unwrap();
        assert!(out.summary.contains("collision at t = 1, x = 0.5"), "{}", out.summary);
        let shocks = &out.reports[1];
        let coll = shocks.series.iter().find(|s| s.label == "collision").unwrap();
        assert_eq!(coll.points[0], (0.5, 1.0));
    }

    #[test]
    fn conjugate_of_abs() {
        let s = spec(r#"{
            "H": {"breakpoints": [0], "values": [0], "tails": [-1, 1]},
            "v": {"breakpoints": [0], "values": [0], "tails": [0, 0]}
        }"#);
        let out = run(&s, &Command::Conjugate).unwrap();
        assert!(out.summary.starts_with("domain [-1, 1]\n"));
        let t = out.reports[0].table.as_ref().unwrap();
        assert!(t.rows.iter().all(|r| r[1] == 0.0));
    }

    #[test]
    fn every_command_runs_and_is_deterministic() {
        let s = spec(W);
        let commands = [
            Command::Solve,
            Command::Minmax { at: Some(0.5) },
            Command::Iterate { steps: Some(3), emit: Emit::Profiles },
            Command::Iterate { steps: Some(3), emit: Emit::Shocks },
            Command::Iterate { steps: Some(3), emit: Emit::Errors },
            Command::Wavefront,
            Command::Envelope { kind: EnvelopeKind::Convex, interval: None },
            Command::Compare,
        ];
        for c in &commands {
            let a = run(&s, c).unwrap();
            let b = run(&s, c).unwrap();
            assert_eq!(a, b, "{c:?}");
            for r in &a.reports {
                for f in [OutputFormat::Json, OutputFormat::Csv, OutputFormat::Svg] {
                    assert_eq!(r.render(f), b.reports[0..].iter().find(|q| q.name == r.name).unwrap().render(f));
                }
                let back = render_dump(&r.render(OutputFormat::Json)).unwrap();
                assert_eq!(back.render(OutputFormat::Svg), r.render(OutputFormat::Svg));
                assert_eq!(back.render(OutputFormat::Csv), r.render(OutputFormat::Csv));
            }
        }
        assert!(matches!(run(&s, &Command::Riemann), Err(Error::Spec { .. })));
    }
}
