//! Generating family, wave fronts and phase curves of the geometric
//! solution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plfun::{PLFunction, SLOPE_TOL};
use crate::riemann::entropy_ok;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenFamily {
    pub v: PLFunction,
    pub h: PLFunction,
    pub t: f64,
}

impl GenFamily {
    pub fn new(v: PLFunction, h: PLFunction, t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
        }
        Ok(GenFamily { v, h, t })
    }

    /// `S(x, x0, y0) = v(x0) - t H(y0) + (x - x0) y0`.
    pub fn eval(&self, x: f64, x0: f64, y0: f64) -> f64 {
        s_eval(&self.v, &self.h, self.t, x, x0, y0)
    }
}

pub fn s_eval(v: &PLFunction, h: &PLFunction, t: f64, x: f64, x0: f64, y0: f64) -> f64 {
    v.eval(x0) - t * h.eval(y0) + (x - x0) * y0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SegmentLabel {
    /// Transport of the linear piece of `v` on `(from, to)`; `None` is infinite.
    Genuine {
        from: Option<f64>,
        to: Option<f64>,
    },
    /// Part of the fan issued from the kink at `kink`.
    Fan { kink: f64 },
}

/// A piece of the line `u = slope x + intercept` for `x` between `x_start`
/// and `x_end` (either may be infinite, and `x_start > x_end` is allowed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSegment {
    #[serde(with = "opt_inf")]
    pub x_start: f64,
    #[serde(with = "opt_inf")]
    pub x_end: f64,
    pub slope: f64,
    pub intercept: f64,
    pub label: SegmentLabel,
}

mod opt_inf {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            Some(*x).serialize(s)
        } else {
            // infinities are written as strings so the JSON stays valid
            Some(if *x > 0.0 { "inf" } else { "-inf" }).serialize(s)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad bound {s}"))),
        }
    }
}

impl FrontSegment {
    pub fn x_range(&self) -> (f64, f64) {
        (self.x_start.min(self.x_end), self.x_start.max(self.x_end))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    pub fn start(&self) -> Option<(f64, f64)> {
        self.x_start
            .is_finite()
            .then(|| (self.x_start, self.value(self.x_start)))
    }

    pub fn end(&self) -> Option<(f64, f64)> {
        self.x_end
            .is_finite()
            .then(|| (self.x_end, self.value(self.x_end)))
    }

    pub fn is_fan(&self) -> bool {
        matches!(self.label, SegmentLabel::Fan { .. })
    }

    fn covers(&self, x: f64, tol: f64) -> bool {
        let (a, b) = self.x_range();
        x >= a - tol && x <= b + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFrontCurve {
    pub t: f64,
    /// Source order: genuine piece, then the fan of the kink to its right.
    pub segments: Vec<FrontSegment>,
}

/// One-sided slope of `h` at `p`, on the side facing `toward`.
fn facing(h: &PLFunction, p: f64, toward: f64) -> f64 {
    h.one_sided_slope(p, toward < p)
}

/// The wave front at time `t > 0`.
pub fn build_wavefront(v: &PLFunction, h: &PLFunction, t: f64) -> Result<WaveFrontCurve> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be > 0, got {t}")));
    }
    let v = v.normalized();
    let kinks = v.kink_jumps();
    let slopes: Vec<f64> = std::iter::once(v.left_tail_slope())
        .chain(kinks.iter().map(|k| k.2))
        .collect();
    let mut segments = Vec::new();
    for (i, &p) in slopes.iter().enumerate() {
        let from = i.checked_sub(1).map(|j| kinks[j]);
        let to = kinks.get(i).copied();
        let c = match (from, to) {
            (Some(k), _) | (None, Some(k)) => v.eval(k.0) - p * k.0,
            (None, None) => v.values()[0] - p * v.breakpoints()[0],
        };
        let x_start = from.map_or(f64::NEG_INFINITY, |(a, pa, _)| a + t * facing(h, p, pa));
        let x_end = to.map_or(f64::INFINITY, |(b, _, pb)| b + t * facing(h, p, pb));
        segments.push(FrontSegment {
            x_start,
            x_end,
            slope: p,
            intercept: c - t * h.eval(p),
            label: SegmentLabel::Genuine {
                from: from.map(|k| k.0),
                to: to.map(|k| k.0),
            },
        });
        if let Some((xb, pl, pr)) = to {
            segments.extend(fan_segments(&v, h, t, xb, pl, pr));
        }
    }
    Ok(WaveFrontCurve { t, segments })
}

fn fan_segments(v: &PLFunction, h: &PLFunction, t: f64, xb: f64, pm: f64, pp: f64) -> Vec<FrontSegment> {
    let ub = v.eval(xb);
    let seg = |q: f64, c_in: f64, c_out: f64| FrontSegment {
        x_start: xb + t * c_in,
        x_end: xb + t * c_out,
        slope: q,
        intercept: ub - q * xb - t * h.eval(q),
        label: SegmentLabel::Fan { kink: xb },
    };
    let (lo, hi) = (pm.min(pp), pm.max(pp));
    let mut qs: Vec<f64> = h
        .breakpoints()
        .iter()
        .copied()
        .filter(|&q| q > lo && q < hi)
        .collect();
    if pm > pp {
        qs.reverse();
    }
    let mut out = Vec::with_capacity(qs.len() + 2);
    // sweep of dH at a jump endpoint beyond the genuine extremity; it starts
    // where the genuine segment ends
    let spur = |p: f64, toward: f64| -> Option<FrontSegment> {
        let c_in = facing(h, p, toward);
        let c_out = h.one_sided_slope(p, toward > p);
        (c_in != c_out).then(|| seg(p, c_in, c_out))
    };
    out.extend(spur(pm, pp));
    for &q in &qs {
        out.push(seg(q, facing(h, q, pm), facing(h, q, pp)));
    }
    out.extend(spur(pp, pm));
    out
}

impl WaveFrontCurve {
    pub fn genuine(&self) -> impl Iterator<Item = &FrontSegment> {
        self.segments.iter().filter(|s| !s.is_fan())
    }

    pub fn fans(&self) -> impl Iterator<Item = &FrontSegment> {
        self.segments.iter().filter(|s| s.is_fan())
    }

    /// Values of all segments over `x`.
    pub fn values_at(&self, x: f64) -> Vec<f64> {
        self.segments
            .iter()
            .filter(|s| s.covers(x, 1e-12 * x.abs().max(1.0)))
            .map(|s| s.value(x))
            .collect()
    }

    /// Finite x-extent of the front, or `None` if every segment is a full line.
    pub fn finite_extent(&self) -> Option<(f64, f64)> {
        let xs = self
            .segments
            .iter()
            .flat_map(|s| [s.x_start, s.x_end])
            .filter(|x| x.is_finite());
        xs.fold(None, |acc, x| match acc {
            None => Some((x, x)),
            Some((a, b)) => Some((a.min(x), b.max(x))),
        })
    }

    /// Fan extremities that do not meet a genuine endpoint of the same slope,
    /// and gaps inside fans, as `(kink, distance)`.
    pub fn endpoint_mismatches(&self, tol: f64) -> Vec<(f64, f64)> {
        let mut bad = Vec::new();
        let n = self.segments.len();
        let mut i = 0;
        while i < n {
            if !self.segments[i].is_fan() {
                i += 1;
                continue;
            }
            let label = self.segments[i].label;
            let mut j = i;
            while j + 1 < n && self.segments[j + 1].label == label {
                j += 1;
            }
            bad.extend(self.fan_gaps(i - 1, j + 1, tol));
            i = j + 1;
        }
        // kinks whose jump holds no breakpoint of H have no fan segments
        for w in self.segments.windows(2) {
            if !w[0].is_fan() && !w[1].is_fan() {
                let d = dist(w[0].end(), w[1].start());
                if d > tol {
                    let kink = match w[0].label {
                        SegmentLabel::Genuine { to, .. } => to.unwrap_or(f64::NAN),
                        SegmentLabel::Fan { kink } => kink,
                    };
                    bad.push((kink, d));
                }
            }
        }
        bad
    }

    fn fan_gaps(&self, left: usize, right: usize, tol: f64) -> Vec<(f64, f64)> {
        let (gl, gr) = (&self.segments[left], &self.segments[right]);
        let chain = &self.segments[left + 1..right];
        let SegmentLabel::Fan { kink } = chain[0].label else {
            return vec![];
        };
        let mut gaps = Vec::new();
        let mut check = |d: f64| {
            if d > tol {
                gaps.push((kink, d));
            }
        };
        let interior: Vec<&FrontSegment> = chain
            .iter()
            .filter(|s| s.slope != gl.slope && s.slope != gr.slope)
            .collect();
        for s in chain.iter().filter(|s| s.slope == gl.slope) {
            check(dist(s.start(), gl.end()));
        }
        for s in chain.iter().filter(|s| s.slope == gr.slope) {
            check(dist(s.start(), gr.start()));
        }
        match (interior.first(), interior.last()) {
            (Some(a), Some(b)) => {
                check(dist(gl.end(), a.start()));
                check(dist(b.end(), gr.start()));
            }
            _ => check(dist(gl.end(), gr.start())),
        }
        for w in interior.windows(2) {
            check(dist(w[0].end(), w[1].start()));
        }
        gaps
    }

    /// Points where consecutive segments meet and the direction in `x`
    /// reverses. For PL data these are corners rather than cusps.
    pub fn corners(&self) -> Vec<(f64, f64)> {
        self.segments
            .windows(2)
            .filter_map(|w| {
                let d0 = w[0].x_end - w[0].x_start;
                let d1 = w[1].x_end - w[1].x_start;
                (d0 * d1 < 0.0).then(|| w[0].end()).flatten()
            })
            .collect()
    }

    /// Points where three or more non-consecutive segments meet within `tol`.
    /// Typical fronts have none; a hit means the data is near-degenerate.
    pub fn triple_points(&self, tol: f64) -> Vec<(f64, f64)> {
        let segs = &self.segments;
        let n = segs.len();
        let mut found: Vec<(f64, f64)> = Vec::new();
        for i in 0..n {
            for j in i + 2..n {
                let (a, b) = (&segs[i], &segs[j]);
                if (a.slope - b.slope).abs() <= SLOPE_TOL {
                    continue;
                }
                let x = (b.intercept - a.intercept) / (a.slope - b.slope);
                if !a.covers(x, tol) || !b.covers(x, tol) {
                    continue;
                }
                let u = a.value(x);
                let third = (0..n).any(|k| {
                    k.abs_diff(i) > 1
                        && k.abs_diff(j) > 1
                        && segs[k].covers(x, tol)
                        && (segs[k].value(x) - u).abs() <= tol
                });
                if third && !found.iter().any(|p| (p.0 - x).abs() <= tol && (p.1 - u).abs() <= tol) {
                    found.push((x, u));
                }
            }
        }
        found
    }
}

fn dist(a: Option<(f64, f64)>, b: Option<(f64, f64)>) -> f64 {
    match (a, b) {
        (Some(p), Some(q)) => (p.0 - q.0).abs().max((p.1 - q.1).abs()),
        _ => f64::INFINITY,
    }
}

/// True iff the graph of `u` lies within `1e-8` of the front at `10^3`
/// sample abscissae spanning the front's finite part.
pub fn section_check(front: &WaveFrontCurve, u: &PLFunction) -> bool {
    section_defect(front, u) <= 1e-8
}

/// Largest distance from the graph of `u` to the front at the sample abscissae.
pub fn section_defect(front: &WaveFrontCurve, u: &PLFunction) -> f64 {
    let (mut a, mut b) = front.finite_extent().unwrap_or((-1.0, 1.0));
    for &x in u.breakpoints() {
        a = a.min(x);
        b = b.max(x);
    }
    a -= 1.0;
    b += 1.0;
    (0..1000)
        .map(|i| a + (b - a) * (i as f64 + 0.5) / 1000.0)
        .map(|x| {
            let ux = u.eval(x);
            front
                .values_at(x)
                .into_iter()
                .map(|w| (w - ux).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// For a single-kink datum, `(fan vertex x, fan value - viscosity value)` at
/// every fan vertex.
pub fn fan_offsets(front: &WaveFrontCurve, viscosity: &PLFunction) -> Vec<(f64, f64)> {
    front
        .fans()
        .flat_map(|s| [s.start(), s.end()])
        .flatten()
        .map(|(x, w)| (x, w - viscosity.eval(x)))
        .collect()
}

/// Checks that the fan of a Riemann datum lies weakly below (convex jump) or
/// above (concave jump) the viscosity graph. Errors if the datum is not a
/// single kink or its jump fails the chord condition.
pub fn position_check(front: &WaveFrontCurve, v: &PLFunction, h: &PLFunction, viscosity: &PLFunction, tol: f64) -> Result<bool> {
    let jumps = v.normalized().kink_jumps();
    let [(_, pm, pp)] = jumps[..] else {
        return Err(Error::InvalidArgument("position check needs exactly one kink".into()));
    };
    if !entropy_ok(pm, pp, h, false)? {
        return Err(Error::InvalidArgument("jump violates the chord condition".into()));
    }
    let sign = if pm < pp { 1.0 } else { -1.0 };
    Ok(fan_offsets(front, viscosity)
        .iter()
        .all(|&(_, d)| sign * d <= tol))
}

/// Image of the enlarged pseudograph of `dv` under the generalized flow, as
/// a polyline in the `(x, p)` plane. The curve continues horizontally to
/// `-inf` at height `left_level` and to `+inf` at height `right_level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCurve {
    pub t: f64,
    pub points: Vec<(f64, f64)>,
    pub left_level: f64,
    pub right_level: f64,
}

pub fn build_phase_curve(v: &PLFunction, h: &PLFunction, t: f64) -> Result<PhaseCurve> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    let v = v.normalized();
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut push = |p: (f64, f64)| {
        if points.last() != Some(&p) {
            points.push(p);
        }
    };
    for (xb, pm, pp) in v.kink_jumps() {
        let (lo, hi) = (pm.min(pp), pm.max(pp));
        let mut qs: Vec<f64> = h
            .breakpoints()
            .iter()
            .copied()
            .filter(|&q| q > lo && q < hi)
            .collect();
        if pm > pp {
            qs.reverse();
        }
        push((xb + t * h.one_sided_slope(pm, pp > pm), pm));
        push((xb + t * facing(h, pm, pp), pm));
        for &q in &qs {
            push((xb + t * facing(h, q, pm), q));
            push((xb + t * facing(h, q, pp), q));
        }
        push((xb + t * facing(h, pp, pm), pp));
        push((xb + t * h.one_sided_slope(pp, pm > pp), pp));
    }
    Ok(PhaseCurve {
        t,
        points,
        left_level: v.left_tail_slope(),
        right_level: v.right_tail_slope(),
    })
}

impl PhaseCurve {
    /// Number of points of the curve above the abscissa `x` (each horizontal
    /// stratum or vertical sweep counts once).
    pub fn preimages(&self, x: f64) -> usize {
        if self.points.is_empty() {
            return 1;
        }
        let mut count = 0;
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if x < first.0 {
            count += 1;
        }
        if x > last.0 {
            count += 1;
        }
        for w in self.points.windows(2) {
            let (a, b) = (w[0].0.min(w[1].0), w[0].0.max(w[1].0));
            // half-open on the right to avoid double counting shared vertices
            if a == b {
                continue;
            }
            if x >= a && x < b {
                count += 1;
            }
        }
        count
    }
}

/// Fronts on a time grid.
pub fn big_front(v: &PLFunction, h: &PLFunction, times: &[f64]) -> Result<Vec<WaveFrontCurve>> {
    times.iter().map(|&t| build_wavefront(v, h, t)).collect()
}
