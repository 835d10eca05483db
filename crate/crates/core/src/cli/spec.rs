//! Problem specs (JSON).
//!
//! ```json
//! {
//!   "H": {"poly": [0, 1, 1, -1], "resolution": 200, "interval": [-3, 3]},
//!   "v": {"breakpoints": [0], "values": [0], "tails": [1.2, -0.6667]},
//!   "T": 1.0,
//!   "domain": [-2, 2],
//!   "subdivision": 8,
//!   "grid": {"nx": 512, "ny": 512},
//!   "engine": "exact",
//!   "outputs": ["json", "csv", "svg"]
//! }
//! ```
//!
//! A function is either PL data (`breakpoints`, `values`, `tails`), a
//! polynomial (`poly`, coefficients by ascending degree, so `[0, 1, 1, -1]`
//! is `p + p^2 - p^3`), or piecewise polynomial (`pieces`, each
//! `{"poly": [...], "until": x}`, the last without `until`). Polynomial
//! forms are interpolated at `resolution + 1` uniform nodes of `interval`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minmax::Engine;
use crate::plfun::{pl_approx, PLFunction};

pub const DEFAULT_HORIZON: f64 = 1.0;
pub const DEFAULT_STEPS: usize = 8;
pub const DEFAULT_GRID: usize = 512;
pub const DEFAULT_INTERVAL: [f64; 2] = [-2.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Svg,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Svg => "svg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubdivisionSpec {
    Count(usize),
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub hamiltonian: PLFunction,
    pub initial: PLFunction,
    pub horizon: f64,
    pub domain: Option<(f64, f64)>,
    pub subdivision: SubdivisionSpec,
    pub grid: (usize, usize),
    pub engine: Engine,
    pub outputs: Vec<OutputFormat>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(rename = "H")]
    h: RawFunction,
    v: RawFunction,
    #[serde(rename = "T")]
    t: Option<f64>,
    domain: Option<[f64; 2]>,
    subdivision: Option<SubdivisionSpec>,
    grid: Option<RawGrid>,
    engine: Option<String>,
    outputs: Option<Vec<OutputFormat>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nx: usize,
    ny: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunction {
    breakpoints: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
    tails: Option<[f64; 2]>,
    poly: Option<Vec<f64>>,
    pieces: Option<Vec<RawPiece>>,
    resolution: Option<usize>,
    interval: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPiece {
    poly: Vec<f64>,
    until: Option<f64>,
}

fn spec_err(field: &str, message: impl Into<String>) -> Error {
    Error::Spec {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Field named in a serde message such as "missing field `v` at line 3".
fn field_of(msg: &str) -> String {
    if msg.starts_with("missing field") || msg.starts_with("unknown field") {
        if let Some(f) = msg.split('`').nth(1) {
            return f.to_string();
        }
    }
    "<root>".to_string()
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn build_function(raw: RawFunction, field: &str) -> Result<PLFunction> {
    let forms = [raw.breakpoints.is_some(), raw.poly.is_some(), raw.pieces.is_some()];
    match forms.iter().filter(|&&b| b).count() {
        0 => return Err(spec_err(field, "expected one of `breakpoints`, `poly`, `pieces`")),
        1 => {}
        _ => return Err(spec_err(field, "`breakpoints`, `poly` and `pieces` are exclusive")),
    }
    if let Some(bps) = raw.breakpoints {
        let values = raw
            .values
            .ok_or_else(|| spec_err(&format!("{field}.values"), "missing"))?;
        let tails = raw
            .tails
            .ok_or_else(|| spec_err(&format!("{field}.tails"), "missing"))?;
        if raw.resolution.is_some() || raw.interval.is_some() {
            return Err(spec_err(field, "`resolution` and `interval` apply to polynomial forms only"));
        }
        return PLFunction::new(bps, values, tails[0], tails[1])
            .map_err(|e| spec_err(&format!("{field}.breakpoints"), e.to_string()));
    }
    let resolution = raw
        .resolution
        .ok_or_else(|| spec_err(&format!("{field}.resolution"), "required for polynomial input"))?;
    if resolution < 2 {
        return Err(spec_err(&format!("{field}.resolution"), format!("must be >= 2, got {resolution}")));
    }
    let [a, b] = raw.interval.unwrap_or(DEFAULT_INTERVAL);
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(spec_err(&format!("{field}.interval"), format!("empty interval [{a}, {b}]")));
    }
    let approx = |f: &dyn Fn(f64) -> f64| {
        pl_approx(f, resolution, a, b).map_err(|e| spec_err(field, e.to_string()))
    };
    if let Some(c) = raw.poly {
        if c.is_empty() {
            return Err(spec_err(&format!("{field}.poly"), "no coefficients"));
        }
        return approx(&|x| horner(&c, x));
    }
    let pieces = raw.pieces.unwrap();
    if pieces.is_empty() {
        return Err(spec_err(&format!("{field}.pieces"), "no pieces"));
    }
    for (i, p) in pieces.iter().enumerate() {
        let last = i + 1 == pieces.len();
        if p.poly.is_empty() {
            return Err(spec_err(&format!("{field}.pieces[{i}].poly"), "no coefficients"));
        }
        if last != p.until.is_none() {
            return Err(spec_err(
                &format!("{field}.pieces[{i}].until"),
                "every piece but the last needs `until`",
            ));
        }
    }
    if pieces.windows(2).any(|w| w[0].until >= w[1].until && w[1].until.is_some()) {
        return Err(spec_err(&format!("{field}.pieces"), "`until` must increase"));
    }
    approx(&|x| {
        let p = pieces
            .iter()
            .find(|p| p.until.is_none_or(|u| x <= u))
            .unwrap();
        horner(&p.poly, x)
    })
}

pub fn parse_spec(text: &str) -> Result<ProblemSpec> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        spec_err(&field_of(&msg), msg)
    })?;
    let hamiltonian = build_function(raw.h, "H")?;
    let initial = build_function(raw.v, "v")?;
    let horizon = raw.t.unwrap_or(DEFAULT_HORIZON);
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(spec_err("T", format!("must be > 0, got {horizon}")));
    }
    let domain = match raw.domain {
        Some([a, b]) if !(a < b) || !a.is_finite() || !b.is_finite() => {
            return Err(spec_err("domain", format!("empty interval [{a}, {b}]")))
        }
        d => d.map(|[a, b]| (a, b)),
    };
    let subdivision = raw.subdivision.unwrap_or(SubdivisionSpec::Count(DEFAULT_STEPS));
    match &subdivision {
        SubdivisionSpec::Count(0) => return Err(spec_err("subdivision", "needs at least one step")),
        SubdivisionSpec::Times(ts) => {
            if ts.len() < 2 || ts[0] != 0.0 || ts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(spec_err("subdivision", "times must increase strictly from 0"));
            }
            if (ts[ts.len() - 1] - horizon).abs() > 1e-12 * horizon.max(1.0) {
                return Err(spec_err("subdivision", "last time must equal T"));
            }
        }
        _ => {}
    }
    let grid = raw.grid.map_or((DEFAULT_GRID, DEFAULT_GRID), |g| (g.nx, g.ny));
    if grid.0 < 8 || grid.1 < 8 {
        return Err(spec_err("grid", "nx and ny must be >= 8"));
    }
    let engine = match raw.engine.as_deref() {
        None | Some("exact") => Engine::Exact,
        Some("grid") => Engine::Grid { nx: grid.0, ny: grid.1 },
        Some(other) => return Err(spec_err("engine", format!("unknown engine `{other}`"))),
    };
    let outputs = raw
        .outputs
        .unwrap_or_else(|| vec![OutputFormat::Json, OutputFormat::Csv, OutputFormat::Svg]);
    Ok(ProblemSpec {
        hamiltonian,
        initial,
        horizon,
        domain,
        subdivision,
        grid,
        engine,
        outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "H": {"breakpoints": [-1, 0, 1], "values": [1, 0, 1], "tails": [-1, 1]},
        "v": {"breakpoints": [0], "values": [0], "tails": [1, -1]}
    }"#;

    #[test]
    fn defaults_are_filled() {
        let s = parse_spec(MINIMAL).unwrap();
        assert_eq!(s.horizon, 1.0);
        assert_eq!(s.subdivision, SubdivisionSpec::Count(8));
        assert_eq!(s.grid, (512, 512));
        assert_eq!(s.engine, Engine::Exact);
        assert_eq!(s.outputs.len(), 3);
        assert_eq!(s.domain, None);
    }

    #[test]
    fn polynomial_hamiltonian_is_approximated() {
        let text = r#"{
            "H": {"poly": [0, 1, 1, -1], "resolution": 200, "interval": [-2, 2]},
            "v": {"breakpoints": [0], "values": [0], "tails": [1.2, -0.6]}
        }"#;
        let s = parse_spec(text).unwrap();
        let h = &s.hamiltonian;
        assert_eq!(h.breakpoints().len(), 201);
        for &p in &[-2.0, -1.0, 0.5, 2.0] {
            assert!((h.eval(p) - (-p * p * p + p * p + p)).abs() < 1e-12);
        }
        // interpolation error of a cubic at node spacing 0.02
        assert!((h.eval(0.01) - (-1e-6 + 1e-4 + 0.01)).abs() < 1e-3);
    }

    #[test]
    fn piecewise_polynomial_datum() {
        let text = r#"{
            "H": {"poly": [0, 0, -1, 0, 1], "resolution": 50, "interval": [-1.5, 1.5]},
            "v": {"pieces": [{"poly": [0, 1, 1], "until": 0}, {"poly": [0, -1, 1]}],
                  "resolution": 20, "interval": [-1, 1]}
        }"#;
        let s = parse_spec(text).unwrap();
        assert_eq!(s.initial.eval(0.0), 0.0);
        assert!((s.initial.eval(-0.5) - (-0.25)).abs() < 1e-12);
        assert!((s.initial.eval(0.5) - (-0.25)).abs() < 1e-12);
    }

    #[test]
    fn missing_v_names_the_field() {
        let err = parse_spec(r#"{"H": {"poly": [0, 1], "resolution": 4}}"#).unwrap_err();
        match err {
            Error::Spec { field, message } => {
                assert_eq!(field, "v");
                assert!(message.contains("line"), "{message}");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn field_errors() {
        let cases = [
            (r#"{"H": {"poly": [0, 1], "resolution": 1}, "v": {"poly": [0], "resolution": 2}}"#, "H.resolution"),
            (r#"{"H": {"poly": [0, 1]}, "v": {"poly": [0], "resolution": 2}}"#, "H.resolution"),
            (r#"{"H": {"poly": [0, 1], "resolution": 2}, "v": {"breakpoints": [0], "tails": [0, 0]}}"#, "v.values"),
            (r#"{"H": {"poly": [1], "resolution": 2}, "v": {"poly": [0], "resolution": 2}, "T": -1}"#, "T"),
            (r#"{"H": {"poly": [1], "resolution": 2}, "v": {"poly": [0], "resolution": 2}, "engine": "fast"}"#, "engine"),
            (r#"{"H": {"poly": [1], "resolution": 2}, "v": {"poly": [0], "resolution": 2}, "colour": 1}"#, "colour"),
            (r#"{"H": {"poly": [1], "resolution": 2}, "v": {"poly": [0], "resolution": 2}, "subdivision": [0, 0.5]}"#, "subdivision"),
        ];
        for (text, want) in cases {
            match parse_spec(text) {
                Err(Error::Spec { field, .. }) => assert_eq!(field, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = parse_spec("{\n  \"H\": {\n  \"poly\": [1,,\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }
}
