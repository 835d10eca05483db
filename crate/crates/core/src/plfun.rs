//! Continuous piecewise-linear functions of one variable.
//!
//! A [`PLFunction`] is stored as an increasing list of breakpoints with the
//! values there, plus one slope per linear piece (including the two affine
//! tails). Slopes are kept explicitly so that functions assembled from exact
//! affine pieces (front tracking, minmax selection) carry exact slopes; the
//! values and slopes agree to rounding.
//!
//! Conjugates of globally Lipschitz convex functions live on a bounded domain
//! and are represented by [`ExtendedPL`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Consecutive breakpoints closer than this are merged.
pub const BREAK_TOL: f64 = 1e-12;
/// Adjacent slopes closer than this (relative to their size) are merged.
pub const SLOPE_TOL: f64 = 1e-12;

fn slopes_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Closed interval of slopes, e.g. a Clarke generalized derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SlopeInterval {
    /// Order-normalizing constructor.
    pub fn new(a: f64, b: f64) -> Self {
        SlopeInterval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn point(p: f64) -> Self {
        SlopeInterval { lo: p, hi: p }
    }

    pub fn contains(&self, p: f64, tol: f64) -> bool {
        p >= self.lo - tol && p <= self.hi + tol
    }

    /// Distance from `p` to the interval (zero inside).
    pub fn distance(&self, p: f64) -> f64 {
        if p < self.lo {
            self.lo - p
        } else if p > self.hi {
            p - self.hi
        } else {
            0.0
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeKind {
    Convex,
    Concave,
}

/// Continuous piecewise-linear function with affine tails.
#[derive(Debug, Clone, PartialEq)]
pub struct PLFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    /// `slopes[0]` is the left tail, `slopes[n]` the right tail and
    /// `slopes[k]` the piece between `breakpoints[k-1]` and `breakpoints[k]`.
    slopes: Vec<f64>,
}

impl PLFunction {
    /// Builds a function from breakpoint data; interior slopes are the secant
    /// slopes of consecutive points.
    pub fn new(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        left_tail_slope: f64,
        right_tail_slope: f64,
    ) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidPl("at least one breakpoint is required".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(Error::InvalidPl(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.iter().chain(&values).any(|v| !v.is_finite())
            || !left_tail_slope.is_finite()
            || !right_tail_slope.is_finite()
        {
            return Err(Error::InvalidPl("non-finite entry".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPl("breakpoints must be strictly increasing".into()));
        }
        let n = breakpoints.len();
        let mut slopes = Vec::with_capacity(n + 1);
        slopes.push(left_tail_slope);
        for k in 1..n {
            slopes.push((values[k] - values[k - 1]) / (breakpoints[k] - breakpoints[k - 1]));
        }
        slopes.push(right_tail_slope);
        if slopes.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidPl("non-finite slope".into()));
        }
        Ok(PLFunction {
            breakpoints,
            values,
            slopes,
        })
    }

    /// Affine function `x -> y0 + slope * (x - x0)`.
    pub fn affine(slope: f64, x0: f64, y0: f64) -> Self {
        PLFunction {
            breakpoints: vec![x0],
            values: vec![y0],
            slopes: vec![slope, slope],
        }
    }

    /// Builds a function from breakpoints, their values and explicit piece
    /// slopes (`slopes.len() == breakpoints.len() + 1`). The caller guarantees
    /// consistency; this is used when pieces are known exactly.
    pub fn from_parts(breakpoints: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty()
            || values.len() != breakpoints.len()
            || slopes.len() != breakpoints.len() + 1
        {
            return Err(Error::InvalidPl("inconsistent part lengths".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPl("breakpoints must be strictly increasing".into()));
        }
        if breakpoints
            .iter()
            .chain(&values)
            .chain(&slopes)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidPl("non-finite entry".into()));
        }
        Ok(PLFunction {
            breakpoints,
            values,
            slopes,
        })
    }

    /// Upper/lower selection of lines: `lines[k] = (slope, intercept)` is
    /// active between `breaks[k-1]` and `breaks[k]`.
    pub fn from_lines(lines: &[(f64, f64)], breaks: &[f64]) -> Result<Self> {
        if lines.len() != breaks.len() + 1 {
            return Err(Error::InvalidPl("need one more line than breaks".into()));
        }
        if breaks.is_empty() {
            let (p, c) = lines[0];
            return Ok(PLFunction::affine(p, 0.0, c));
        }
        let values = breaks
            .iter()
            .enumerate()
            .map(|(k, &x)| lines[k].0 * x + lines[k].1)
            .collect();
        let slopes = lines.iter().map(|l| l.0).collect();
        Ok(PLFunction::from_parts(breaks.to_vec(), values, slopes)?.normalized())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All piece slopes from the left tail to the right tail.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn left_tail_slope(&self) -> f64 {
        self.slopes[0]
    }

    pub fn right_tail_slope(&self) -> f64 {
        self.slopes[self.slopes.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the piece containing `x` (pieces are half-open on the left).
    fn piece_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.piece_index(x);
        if k == 0 {
            self.values[0] + self.slopes[0] * (x - self.breakpoints[0])
        } else {
            self.values[k - 1] + self.slopes[k] * (x - self.breakpoints[k - 1])
        }
    }

    /// Clarke generalized derivative.
    pub fn clarke(&self, x: f64) -> SlopeInterval {
        let k = self.piece_index(x);
        if k < self.breakpoints.len() && (self.breakpoints[k] - x).abs() <= BREAK_TOL {
            return SlopeInterval::new(self.slopes[k], self.slopes[k + 1]);
        }
        if k > 0 && (x - self.breakpoints[k - 1]).abs() <= BREAK_TOL {
            return SlopeInterval::new(self.slopes[k - 1], self.slopes[k]);
        }
        SlopeInterval::point(self.slopes[k])
    }

    /// Slope of the piece right of `x` (left of `x` when `left` is set).
    pub fn one_sided_slope(&self, x: f64, left: bool) -> f64 {
        let k = self.piece_index(x);
        let at_bp = k < self.breakpoints.len() && self.breakpoints[k] == x;
        match (at_bp, left) {
            (true, false) => self.slopes[k + 1],
            _ => self.slopes[k],
        }
    }

    /// Lipschitz constant: the largest absolute slope.
    pub fn lipschitz(&self) -> f64 {
        self.slopes.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Largest absolute slope over pieces meeting `[a, b]`.
    pub fn lipschitz_on(&self, a: f64, b: f64) -> f64 {
        let lo = self.piece_index(a);
        let hi = self.piece_index(b);
        self.slopes[lo..=hi].iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// `max |f|` over `[a, b]`.
    pub fn max_abs_on(&self, a: f64, b: f64) -> f64 {
        self.points_on(a, b)
            .map(|x| self.eval(x).abs())
            .fold(0.0, f64::max)
    }

    /// `[min f, max f]` over `[a, b]`.
    pub fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        self.points_on(a, b)
            .map(|x| self.eval(x))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Endpoints and interior breakpoints of `[a, b]`.
    fn points_on(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(a)
            .chain(self.breakpoints.iter().copied().filter(move |&x| x > a && x < b))
            .chain(std::iter::once(b))
    }

    /// Breakpoints where the slope actually changes.
    pub fn kinks(&self) -> Vec<f64> {
        self.breakpoints
            .iter()
            .enumerate()
            .filter(|(k, _)| !slopes_close(self.slopes[*k], self.slopes[k + 1], SLOPE_TOL))
            .map(|(_, &x)| x)
            .collect()
    }

    /// Jump `(left slope, right slope)` at each kink.
    pub fn kink_jumps(&self) -> Vec<(f64, f64, f64)> {
        self.breakpoints
            .iter()
            .enumerate()
            .filter(|(k, _)| !slopes_close(self.slopes[*k], self.slopes[k + 1], SLOPE_TOL))
            .map(|(k, &x)| (x, self.slopes[k], self.slopes[k + 1]))
            .collect()
    }

    pub fn is_convex(&self) -> bool {
        self.slopes
            .windows(2)
            .all(|w| w[1] >= w[0] - SLOPE_TOL * w[0].abs().max(w[1].abs()).max(1.0))
    }

    pub fn is_concave(&self) -> bool {
        self.slopes
            .windows(2)
            .all(|w| w[1] <= w[0] + SLOPE_TOL * w[0].abs().max(w[1].abs()).max(1.0))
    }

    /// Merges breakpoints closer than [`BREAK_TOL`] and drops breakpoints
    /// joining collinear pieces. Always keeps at least one anchor point.
    pub fn normalized(&self) -> PLFunction {
        let n = self.breakpoints.len();
        let mut bps: Vec<f64> = Vec::with_capacity(n);
        let mut vals: Vec<f64> = Vec::with_capacity(n);
        let mut slopes: Vec<f64> = vec![self.slopes[0]];
        for k in 0..n {
            let x = self.breakpoints[k];
            if let Some(&last) = bps.last() {
                if x - last <= BREAK_TOL {
                    // zero-width piece: keep the earlier point, take the later outgoing slope
                    *slopes.last_mut().unwrap() = self.slopes[k + 1];
                    continue;
                }
            }
            bps.push(x);
            vals.push(self.values[k]);
            slopes.push(self.slopes[k + 1]);
        }
        // drop collinear joints
        let mut out_b = Vec::with_capacity(bps.len());
        let mut out_v = Vec::with_capacity(bps.len());
        let mut out_s = vec![slopes[0]];
        for k in 0..bps.len() {
            let incoming = *out_s.last().unwrap();
            if slopes_close(incoming, slopes[k + 1], SLOPE_TOL) {
                continue;
            }
            out_b.push(bps[k]);
            out_v.push(vals[k]);
            out_s.push(slopes[k + 1]);
        }
        if out_b.is_empty() {
            // affine: anchor at the first original breakpoint
            let s = out_s[0];
            return PLFunction {
                breakpoints: vec![bps[0]],
                values: vec![vals[0]],
                slopes: vec![s, s],
            };
        }
        PLFunction {
            breakpoints: out_b,
            values: out_v,
            slopes: out_s,
        }
    }

    /// Structural comparison after normalization.
    pub fn approx_eq(&self, other: &PLFunction, tol: f64) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        if a.kinks().is_empty() && b.kinks().is_empty() {
            return (a.slopes[0] - b.slopes[0]).abs() <= tol
                && (a.eval(0.0) - b.eval(0.0)).abs() <= tol * (1.0 + a.eval(0.0).abs());
        }
        a.breakpoints.len() == b.breakpoints.len()
            && a.breakpoints
                .iter()
                .zip(&b.breakpoints)
                .all(|(x, y)| (x - y).abs() <= tol)
            && a.values.iter().zip(&b.values).all(|(x, y)| (x - y).abs() <= tol)
            && a.slopes.iter().zip(&b.slopes).all(|(x, y)| (x - y).abs() <= tol)
    }

    /// `sup |f - g|` over the real line (infinite when tail slopes differ).
    pub fn sup_distance(&self, other: &PLFunction) -> f64 {
        if !slopes_close(self.left_tail_slope(), other.left_tail_slope(), 1e-9)
            || !slopes_close(self.right_tail_slope(), other.right_tail_slope(), 1e-9)
        {
            return f64::INFINITY;
        }
        self.breakpoints
            .iter()
            .chain(&other.breakpoints)
            .map(|&x| (self.eval(x) - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    /// `sup |f - g|` over `[a, b]`.
    pub fn sup_distance_on(&self, other: &PLFunction, a: f64, b: f64) -> f64 {
        self.points_on(a, b)
            .chain(other.points_on(a, b))
            .map(|x| (self.eval(x) - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    /// Pointwise `f + g`.
    pub fn add(&self, other: &PLFunction) -> PLFunction {
        self.combine(other, |a, b| a + b)
    }

    /// Pointwise `f - g`.
    pub fn sub(&self, other: &PLFunction) -> PLFunction {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &PLFunction, op: impl Fn(f64, f64) -> f64) -> PLFunction {
        let mut bps: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .copied()
            .collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup_by(|a, b| (*a - *b).abs() <= BREAK_TOL);
        let values: Vec<f64> = bps.iter().map(|&x| op(self.eval(x), other.eval(x))).collect();
        let mut slopes = vec![op(self.left_tail_slope(), other.left_tail_slope())];
        for w in bps.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let s1 = self.slopes[self.piece_index(mid)];
            let s2 = other.slopes[other.piece_index(mid)];
            slopes.push(op(s1, s2));
        }
        slopes.push(op(self.right_tail_slope(), other.right_tail_slope()));
        PLFunction {
            breakpoints: bps,
            values,
            slopes,
        }
        .normalized()
    }

    /// `c * f`.
    pub fn scale(&self, c: f64) -> PLFunction {
        PLFunction {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            slopes: self.slopes.iter().map(|s| c * s).collect(),
        }
        .normalized()
    }

    /// `x -> f(-x)`.
    pub fn reflect(&self) -> PLFunction {
        PLFunction {
            breakpoints: self.breakpoints.iter().rev().map(|x| -x).collect(),
            values: self.values.iter().rev().copied().collect(),
            slopes: self.slopes.iter().rev().map(|s| -s).collect(),
        }
    }

    /// Copy of `f` on `[a, b]` with affine continuation of the end pieces.
    pub fn restricted(&self, a: f64, b: f64) -> PLFunction {
        let mut bps = vec![a];
        bps.extend(self.breakpoints.iter().copied().filter(|&x| x > a && x < b));
        if b > a {
            bps.push(b);
        }
        let values = bps.iter().map(|&x| self.eval(x)).collect();
        let mut slopes = vec![self.one_sided_slope(a, false)];
        for w in bps.windows(2) {
            slopes.push(self.slopes[self.piece_index(0.5 * (w[0] + w[1]))]);
        }
        slopes.push(self.one_sided_slope(b, true));
        PLFunction {
            breakpoints: bps,
            values,
            slopes,
        }
        .normalized()
    }

    /// Convex (resp. concave) envelope of `f` restricted to `[a, b]`; the
    /// result has affine tails continuing its end pieces.
    pub fn envelope(&self, a: f64, b: f64, kind: EnvelopeKind) -> Result<PLFunction> {
        let hull = self.hull_vertices(a, b, kind)?;
        let (xs, ys): (Vec<f64>, Vec<f64>) = hull.into_iter().unzip();
        let n = xs.len();
        let left = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        let right = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
        PLFunction::new(xs, ys, left, right)
    }

    /// Vertices of the convex (resp. concave) envelope on `[a, b]`, always
    /// including both endpoints. Points on a hull chord are dropped.
    pub fn hull_vertices(&self, a: f64, b: f64, kind: EnvelopeKind) -> Result<Vec<(f64, f64)>> {
        if !(a < b) {
            return Err(Error::EmptyInterval { a, b });
        }
        let pts = self.points_on(a, b).map(|x| (x, self.eval(x)));
        Ok(monotone_chain(pts, kind))
    }

    pub fn to_json(&self) -> PlJson {
        PlJson {
            breakpoints: self.breakpoints.clone(),
            values: self.values.clone(),
            tails: [self.left_tail_slope(), self.right_tail_slope()],
        }
    }
}

/// Monotone-chain lower (convex) or upper (concave) hull of points given in
/// increasing `x` order.
pub(crate) fn monotone_chain(
    pts: impl IntoIterator<Item = (f64, f64)>,
    kind: EnvelopeKind,
) -> Vec<(f64, f64)> {
    let sign = match kind {
        EnvelopeKind::Convex => 1.0,
        EnvelopeKind::Concave => -1.0,
    };
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            let scale = ((a.0 - o.0).abs() + (p.0 - o.0).abs())
                * ((a.1 - o.1).abs() + (p.1 - o.1).abs()).max(1.0);
            // keep `a` only for a strict left (convex) / right (concave) turn
            if sign * cross <= 1e-14 * scale {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Convex function that is finite exactly on a compact interval `[a, b]`
/// and `+inf` elsewhere. The degenerate case `a == b` is a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPL {
    points: Vec<f64>,
    values: Vec<f64>,
}

impl ExtendedPL {
    pub fn new(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != values.len() {
            return Err(Error::InvalidPl("extended PL needs matching nonempty data".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPl("breakpoints must be strictly increasing".into()));
        }
        if points.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPl("non-finite entry".into()));
        }
        Ok(ExtendedPL { points, values })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.points[0], self.points[self.points.len() - 1])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Piece slopes on the domain (empty for a single point).
    pub fn slopes(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    pub fn eval(&self, y: f64) -> f64 {
        let (a, b) = self.domain();
        if y < a - BREAK_TOL || y > b + BREAK_TOL {
            return f64::INFINITY;
        }
        if self.points.len() == 1 {
            return self.values[0];
        }
        let y = y.clamp(a, b);
        let k = self.points.partition_point(|&p| p < y).max(1);
        let (x0, x1) = (self.points[k - 1], self.points[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        v0 + (v1 - v0) * (y - x0) / (x1 - x0)
    }

    pub fn is_convex(&self) -> bool {
        self.slopes()
            .windows(2)
            .all(|w| w[1] >= w[0] - SLOPE_TOL * w[0].abs().max(w[1].abs()).max(1.0))
    }

    /// Drops collinear interior points.
    pub fn normalized(&self) -> ExtendedPL {
        if self.points.len() <= 2 {
            return self.clone();
        }
        let slopes = self.slopes();
        let mut pts = vec![self.points[0]];
        let mut vals = vec![self.values[0]];
        for k in 1..self.points.len() - 1 {
            if !slopes_close(slopes[k - 1], slopes[k], SLOPE_TOL) {
                pts.push(self.points[k]);
                vals.push(self.values[k]);
            }
        }
        pts.push(*self.points.last().unwrap());
        vals.push(*self.values.last().unwrap());
        ExtendedPL {
            points: pts,
            values: vals,
        }
    }

    pub fn approx_eq(&self, other: &ExtendedPL, tol: f64) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        a.points.len() == b.points.len()
            && a.points.iter().zip(&b.points).all(|(x, y)| (x - y).abs() <= tol)
            && a.values.iter().zip(&b.values).all(|(x, y)| (x - y).abs() <= tol)
    }

    pub fn to_json(&self) -> PlJson {
        let s = self.slopes();
        let (l, r) = match (s.first(), s.last()) {
            (Some(&l), Some(&r)) => (l, r),
            _ => (0.0, 0.0),
        };
        PlJson {
            breakpoints: self.points.clone(),
            values: self.values.clone(),
            tails: [l, r],
        }
    }
}

/// Legendre-Fenchel conjugate of a globally Lipschitz convex function.
///
/// The result is finite exactly on the slope range of `f`; its breakpoints
/// are the slopes of `f` and its slopes are the breakpoints of `f`.
pub fn conjugate(f: &PLFunction) -> Result<ExtendedPL> {
    if !f.is_convex() {
        return Err(Error::NotConvex);
    }
    let f = f.normalized();
    let n = f.breakpoints.len();
    if f.kinks().is_empty() {
        let s = f.slopes[0];
        let x0 = f.breakpoints[0];
        return ExtendedPL::new(vec![s], vec![x0 * s - f.values[0]]);
    }
    // slopes s_0 < ... < s_n; f*(s_k) = x_k s_k - f(x_k) with s_k in the
    // subdifferential at x_k (use x_{k+1} for s_0 ... any adjacent point works)
    let mut points = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let s = f.slopes[k];
        let j = if k == 0 { 0 } else { k - 1 };
        points.push(s);
        values.push(f.breakpoints[j] * s - f.values[j]);
    }
    ExtendedPL::new(points, values)
}

/// Conjugate of a convex function with bounded domain: a globally Lipschitz
/// convex [`PLFunction`].
pub fn conjugate_extended(g: &ExtendedPL) -> Result<PLFunction> {
    if !g.is_convex() {
        return Err(Error::NotConvex);
    }
    let g = g.normalized();
    let (a, b) = g.domain();
    if g.points.len() == 1 {
        return Ok(PLFunction::affine(a, 0.0, -g.values[0]));
    }
    let slopes = g.slopes();
    // breakpoints of g* are the slopes of g; g*(sigma_k) = sigma_k y_k - g(y_k)
    let bps: Vec<f64> = slopes.clone();
    let vals: Vec<f64> = slopes
        .iter()
        .enumerate()
        .map(|(k, &s)| s * g.points[k] - g.values[k])
        .collect();
    let mut all = vec![a];
    all.extend_from_slice(&g.points[1..g.points.len() - 1]);
    all.push(b);
    PLFunction::from_parts(bps, vals, all)
        .map(|f| f.normalized())
}

/// Interpolates `target` at `k + 1` uniform nodes of `[a, b]`, continuing the
/// end pieces affinely.
pub fn pl_approx(target: impl Fn(f64) -> f64, k: usize, a: f64, b: f64) -> Result<PLFunction> {
    if k == 0 {
        return Err(Error::InvalidArgument("pl_approx needs k >= 1".into()));
    }
    if !(a < b) {
        return Err(Error::EmptyInterval { a, b });
    }
    let h = (b - a) / k as f64;
    let xs: Vec<f64> = (0..=k)
        .map(|i| if i == k { b } else { a + h * i as f64 })
        .collect();
    let mut ys = Vec::with_capacity(xs.len());
    for &x in &xs {
        let y = target(x);
        if !y.is_finite() {
            return Err(Error::NonFinite(x));
        }
        ys.push(y);
    }
    let left = (ys[1] - ys[0]) / (xs[1] - xs[0]);
    let right = (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]);
    PLFunction::new(xs, ys, left, right)
}

/// [`pl_approx`] for tabulated data: the table is linearly interpolated.
pub fn pl_approx_samples(samples: &[(f64, f64)], k: usize, a: f64, b: f64) -> Result<PLFunction> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    if let Some(&(x, _)) = samples.iter().find(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonFinite(x));
    }
    let mut pts = samples.to_vec();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    pts.dedup_by(|p, q| p.0 == q.0);
    let table = PLFunction::new(
        pts.iter().map(|p| p.0).collect(),
        pts.iter().map(|p| p.1).collect(),
        0.0,
        0.0,
    )?;
    let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
    pl_approx(|x| table.eval(x.clamp(lo, hi)), k, a, b)
}

/// JSON form: `{"breakpoints":[...],"values":[...],"tails":[l,r]}` with an
/// optional `"domain":[a,b]` marking an extended (bounded-domain) function.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlJson {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub tails: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExtendedPlJson {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub tails: [f64; 2],
    pub domain: [f64; 2],
}

impl TryFrom<PlJson> for PLFunction {
    type Error = Error;
    fn try_from(j: PlJson) -> Result<Self> {
        PLFunction::new(j.breakpoints, j.values, j.tails[0], j.tails[1])
    }
}

impl From<&PLFunction> for PlJson {
    fn from(f: &PLFunction) -> Self {
        f.to_json()
    }
}

impl From<&ExtendedPL> for ExtendedPlJson {
    fn from(g: &ExtendedPL) -> Self {
        let j = g.to_json();
        ExtendedPlJson {
            breakpoints: j.breakpoints,
            values: j.values,
            tails: j.tails,
            domain: [g.domain().0, g.domain().1],
        }
    }
}

impl TryFrom<ExtendedPlJson> for ExtendedPL {
    type Error = Error;
    fn try_from(j: ExtendedPlJson) -> Result<Self> {
        let g = ExtendedPL::new(j.breakpoints, j.values)?;
        let (a, b) = g.domain();
        if (a - j.domain[0]).abs() > BREAK_TOL || (b - j.domain[1]).abs() > BREAK_TOL {
            return Err(Error::InvalidPl("domain does not match breakpoints".into()));
        }
        Ok(g)
    }
}

impl Serialize for PLFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PLFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PlJson::deserialize(d)?;
        PLFunction::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl Serialize for ExtendedPL {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ExtendedPlJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExtendedPL {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ExtendedPlJson::deserialize(d)?;
        ExtendedPL::try_from(j).map_err(serde::de::Error::custom)
    }
}
