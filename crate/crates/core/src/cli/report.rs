//! Reports and their CSV/SVG renderings.
//!
//! A [`Report`] is the JSON dump of an artifact; CSV and SVG are pure
//! functions of it, so both can be regenerated from the dump alone.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::spec::OutputFormat;

pub const VIEW_W: f64 = 800.0;
pub const VIEW_H: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Line,
    Dashed,
    Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub style: Style,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    #[serde(default)]
    pub series: Vec<Series>,
    #[serde(default)]
    pub table: Option<Table>,
}

impl Report {
    pub fn new(name: &str, title: &str, x_label: &str, y_label: &str) -> Self {
        Report {
            name: name.into(),
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            table: None,
        }
    }

    pub fn with_series(mut self, label: &str, style: Style, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series {
            label: label.into(),
            style,
            points,
        });
        self
    }

    pub fn with_table(mut self, columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        self.table = Some(Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows,
        });
        self
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            OutputFormat::Csv => to_csv(self),
            OutputFormat::Svg => to_svg(self),
        }
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x > 0.0 {
        "inf".into()
    } else if x < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

/// The table if present, otherwise the series in long form
/// (`series,x,y`).
pub fn to_csv(r: &Report) -> String {
    let mut out = String::new();
    if let Some(t) = &r.table {
        out.push_str(&t.columns.join(","));
        out.push('\n');
        for row in &t.rows {
            let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    } else {
        out.push_str("series,");
        out.push_str(&r.x_label);
        out.push(',');
        out.push_str(&r.y_label);
        out.push('\n');
        for s in &r.series {
            for &(x, y) in &s.points {
                let _ = writeln!(out, "{},{},{}", s.label, num(x), num(y));
            }
        }
    }
    out
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(points: impl Iterator<Item = (f64, f64)>) -> Option<(f64, f64, f64, f64)> {
    let mut b: Option<(f64, f64, f64, f64)> = None;
    for (x, y) in points.filter(|p| p.0.is_finite() && p.1.is_finite()) {
        b = Some(match b {
            None => (x, x, y, y),
            Some((a, c, d, e)) => (a.min(x), c.max(x), d.min(y), e.max(y)),
        });
    }
    b.map(|(x0, x1, y0, y1)| {
        let pad = |a: f64, b: f64| if b - a > 1e-12 { (a, b) } else { (a - 0.5, b + 0.5) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        (x0, x1, y0, y1)
    })
}

/// `x` rightward, `y` upward, fixed 800x600 viewbox.
pub fn to_svg(r: &Report) -> String {
    let mut series = r.series.clone();
    if series.is_empty() {
        if let Some(t) = &r.table {
            for c in 1..t.columns.len() {
                series.push(Series {
                    label: t.columns[c].clone(),
                    style: Style::Line,
                    points: t.rows.iter().map(|row| (row[0], row[c])).collect(),
                });
            }
        }
    }
    let (ml, mr, mt, mb) = (70.0, 150.0, 40.0, 50.0);
    let (pw, ph) = (VIEW_W - ml - mr, VIEW_H - mt - mb);
    let (x0, x1, y0, y1) =
        bounds(series.iter().flat_map(|s| s.points.iter().copied())).unwrap_or((0.0, 1.0, 0.0, 1.0));
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {VIEW_W} {VIEW_H}" width="{VIEW_W}" height="{VIEW_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{VIEW_W}" height="{VIEW_H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        ml + pw / 2.0,
        escape(&r.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.3}</text>"#,
            sx(fx),
            mt + ph + 16.0,
            fx
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            ml - 6.0,
            sy(fy) + 4.0,
            fy
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        VIEW_H - 10.0,
        escape(&r.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(&r.y_label)
    );
    let mut legend: Vec<(String, &str)> = Vec::new();
    for s in &series {
        let color = match legend.iter().find(|(l, _)| l == &s.label) {
            Some(&(_, c)) => c,
            None => {
                let c = COLORS[legend.len() % COLORS.len()];
                legend.push((s.label.clone(), c));
                c
            }
        };
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| (sx(x), sy(y)))
            .collect();
        match s.style {
            Style::Points => {
                for (x, y) in pts {
                    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
                }
            }
            Style::Line | Style::Dashed => {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let dash = if s.style == Style::Dashed { r#" stroke-dasharray="5,4""# } else { "" };
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                    path.join(" ")
                );
            }
        }
    }
    for (i, (label, color)) in legend.iter().take(20).enumerate() {
        let y = mt + 10.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            ml + pw + 12.0,
            y - 9.0,
            ml + pw + 26.0,
            y,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        Report::new("p", "profile <t=1>", "x", "u")
            .with_series("a", Style::Line, vec![(0.0, 0.0), (1.0, 2.0)])
            .with_series("b", Style::Points, vec![(0.5, f64::INFINITY)])
    }

    #[test]
    fn csv_long_form_and_table() {
        let r = sample();
        assert_eq!(to_csv(&r), "series,x,u\na,0,0\na,1,2\nb,0.5,inf\n");
        let t = Report::new("t", "t", "n", "e").with_table(&["n", "err"], vec![vec![1.0, 0.25]]);
        assert_eq!(to_csv(&t), "n,err\n1,0.25\n");
    }

    #[test]
    fn svg_has_fixed_viewbox_and_escapes() {
        let s = to_svg(&sample());
        assert!(s.starts_with(r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 600""#));
        assert!(s.contains("profile &lt;t=1&gt;"));
        assert_eq!(s.matches("<polyline").count(), 1);
        assert!(s.ends_with("</svg>\n"));
    }

    #[test]
    fn json_round_trip_regenerates_artifacts() {
        let finite = Report::new("p", "p", "x", "u").with_series("a", Style::Line, vec![(0.0, 1.0), (2.0, 3.0)]);
        let back: Report = serde_json::from_str(&finite.render(OutputFormat::Json)).unwrap();
        assert_eq!(to_svg(&back), to_svg(&finite));
        assert_eq!(to_csv(&back), to_csv(&finite));
    }
}
