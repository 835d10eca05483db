//! Exact mountain pass of the generating family for PL data.
//!
//! On each cell of the grid built from the kinks of `v` and the breakpoints
//! of `H`, the fiber function is bilinear with a `-x0 y0` cross term, so
//! every sublevel component of a cell contains a corner. With the lines
//! `x0 = x - t c` (`c` a slope of `H`) and `y0 = a` (`a` a slope of `v`)
//! added, every cell saddle is a grid node and the minmax is the
//! bottleneck value of the node graph between the two deep ends.

use crate::error::{Error, Result};
use crate::plfun::PLFunction;

use super::dsu::Dsu;
use super::Line;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactPass {
    pub minmax: f64,
    pub maxmin: f64,
    /// The affine function of `x` that realizes `minmax` near `x`.
    pub minmax_line: Line,
    pub maxmin_line: Line,
}

/// `H` on `[a, b]` with affine extension; a point interval keeps the
/// one-sided slope to the right.
fn restrict(f: &PLFunction, a: f64, b: f64) -> PLFunction {
    if a < b {
        f.restricted(a, b)
    } else {
        PLFunction::affine(f.one_sided_slope(a, false), a, f.eval(a))
    }
}

fn slope_range(f: &PLFunction) -> (f64, f64) {
    f.slopes()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)))
}

/// Replaces `v` and `H` by data that coincide with them where the value at
/// `(t, x)` depends on them: `v` on `[x - tM, x + tM]`, `H` on the slope range.
pub fn localize(v: &PLFunction, h: &PLFunction, t: f64, x: f64) -> (PLFunction, PLFunction) {
    let window = |m: f64| {
        let w = t * m * (1.0 + 1e-9) + 1e-9 * x.abs().max(1.0);
        v.restricted(x - w, x + w)
    };
    let (lo, hi) = slope_range(v);
    let h1 = restrict(h, lo, hi);
    let v1 = window(h1.lipschitz());
    let (lo, hi) = slope_range(&v1);
    let h2 = restrict(h, lo, hi);
    let v2 = window(h2.lipschitz());
    (v2, h2)
}

fn dedup_sorted(xs: &mut Vec<f64>) {
    xs.sort_by(f64::total_cmp);
    let scale = xs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    xs.dedup_by(|b, a| *b - *a <= 1e-14 * scale);
}

struct Complex {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<f64>,
    /// Whether column `i` is fixed (a kink of `v`) or moves with `x`.
    fixed: Vec<bool>,
    ends: Ends,
}

/// Threshold lines of the four deep regions outside the box.
struct Ends {
    a_left: f64,
    a_right: f64,
    x_top: f64,
    x_bottom: f64,
}

impl Complex {
    fn build(v: &PLFunction, h: &PLFunction, t: f64, x: f64) -> Complex {
        let kinks = v.kinks();
        let vs = v.slopes();
        let hs = h.slopes();
        let mut xs: Vec<f64> = kinks.clone();
        xs.extend(hs.iter().map(|c| x - t * c));
        let mut ys: Vec<f64> = h.breakpoints().to_vec();
        ys.extend(vs.iter().copied());
        dedup_sorted(&mut xs);
        dedup_sorted(&mut ys);
        let (x0, x1) = (xs[0], xs[xs.len() - 1]);
        let (y0, y1) = (ys[0], ys[ys.len() - 1]);
        xs.insert(0, x0 - 1.0);
        xs.push(x1 + 1.0);
        ys.insert(0, y0 - 1.0);
        ys.push(y1 + 1.0);
        let fixed = xs.iter().map(|xi| kinks.contains(xi)).collect();
        let hv: Vec<f64> = ys.iter().map(|&y| t * h.eval(y)).collect();
        let mut values = Vec::with_capacity(xs.len() * ys.len());
        for &xi in &xs {
            let vx = v.eval(xi);
            for (j, &y) in ys.iter().enumerate() {
                values.push(vx - hv[j] + (x - xi) * y);
            }
        }
        let ends = Ends {
            a_left: v.left_tail_slope(),
            a_right: v.right_tail_slope(),
            x_top: x - t * h.right_tail_slope(),
            x_bottom: x - t * h.left_tail_slope(),
        };
        Complex {
            xs,
            ys,
            values,
            fixed,
            ends,
        }
    }

    fn ny(&self) -> usize {
        self.ys.len()
    }

    fn node(&self, i: usize, j: usize) -> usize {
        i * self.ny() + j
    }

    /// Node ids touching end I, III (sublevel) or II, IV (superlevel).
    fn end_nodes(&self, which: u8) -> Vec<usize> {
        let (nx, ny) = (self.xs.len(), self.ny());
        let e = &self.ends;
        let mut out = Vec::new();
        match which {
            1 => {
                out.extend((0..ny).filter(|&j| self.ys[j] >= e.a_right).map(|j| self.node(nx - 1, j)));
                out.extend((0..nx).filter(|&i| self.xs[i] >= e.x_top).map(|i| self.node(i, ny - 1)));
            }
            3 => {
                out.extend((0..ny).filter(|&j| self.ys[j] <= e.a_left).map(|j| self.node(0, j)));
                out.extend((0..nx).filter(|&i| self.xs[i] <= e.x_bottom).map(|i| self.node(i, 0)));
            }
            2 => {
                out.extend((0..ny).filter(|&j| self.ys[j] >= e.a_left).map(|j| self.node(0, j)));
                out.extend((0..nx).filter(|&i| self.xs[i] <= e.x_top).map(|i| self.node(i, ny - 1)));
            }
            _ => {
                out.extend((0..ny).filter(|&j| self.ys[j] <= e.a_right).map(|j| self.node(nx - 1, j)));
                out.extend((0..nx).filter(|&i| self.xs[i] >= e.x_bottom).map(|i| self.node(i, 0)));
            }
        }
        out
    }

    /// Bottleneck between two ends. Ascending merges sublevel sets, otherwise
    /// superlevel sets. Returns the node realizing the threshold.
    fn bottleneck(&self, ascending: bool) -> Option<usize> {
        let n = self.values.len();
        let (ea, eb) = if ascending { (1, 3) } else { (2, 4) };
        let (sa, sb) = (n, n + 1);
        let mut dsu = Dsu::new(n + 2);
        let mut is_a = vec![false; n];
        let mut is_b = vec![false; n];
        for id in self.end_nodes(ea) {
            is_a[id] = true;
        }
        for id in self.end_nodes(eb) {
            is_b[id] = true;
        }
        // node insertion order; an edge becomes available when both ends are in
        let mut order: Vec<usize> = (0..n).collect();
        if ascending {
            order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]).then(a.cmp(&b)));
        } else {
            order.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]).then(a.cmp(&b)));
        }
        let mut inserted = vec![false; n];
        let ny = self.ny();
        let nx = self.xs.len();
        for id in order {
            inserted[id] = true;
            let (i, j) = (id / ny, id % ny);
            let mut nb = [usize::MAX; 4];
            if i > 0 {
                nb[0] = id - ny;
            }
            if i + 1 < nx {
                nb[1] = id + ny;
            }
            if j > 0 {
                nb[2] = id - 1;
            }
            if j + 1 < ny {
                nb[3] = id + 1;
            }
            for &m in nb.iter().filter(|&&m| m != usize::MAX) {
                if inserted[m] {
                    dsu.union(id, m);
                }
            }
            if is_a[id] {
                dsu.union(id, sa);
            }
            if is_b[id] {
                dsu.union(id, sb);
            }
            if dsu.same(sa, sb) {
                return Some(id);
            }
        }
        None
    }

    fn line_at(&self, v: &PLFunction, h: &PLFunction, t: f64, x: f64, id: usize) -> Line {
        let (i, j) = (id / self.ny(), id % self.ny());
        let value = self.values[id];
        let slope = if self.fixed[i] {
            self.ys[j]
        } else {
            // the column moves with x: x0 = x - t c
            v.one_sided_slope(self.xs[i], false)
        };
        let _ = (h, t);
        Line {
            slope,
            intercept: value - slope * x,
        }
    }
}

/// Exact minmax and maxmin of `S(t, x, .)`.
pub fn exact_pass(v: &PLFunction, h: &PLFunction, t: f64, x: f64) -> Result<ExactPass> {
    if !(t >= 0.0) || !t.is_finite() || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("bad evaluation point t = {t}, x = {x}")));
    }
    if t == 0.0 {
        let slope = v.one_sided_slope(x, false);
        let line = Line {
            slope,
            intercept: v.eval(x) - slope * x,
        };
        let u = v.eval(x);
        return Ok(ExactPass {
            minmax: u,
            maxmin: u,
            minmax_line: line,
            maxmin_line: line,
        });
    }
    let (vl, hl) = localize(v, h, t, x);
    let cx = Complex::build(&vl, &hl, t, x);
    let up = cx.bottleneck(true).ok_or(Error::BoxTooSmall(0))?;
    let down = cx.bottleneck(false).ok_or(Error::BoxTooSmall(0))?;
    Ok(ExactPass {
        minmax: cx.values[up],
        maxmin: cx.values[down],
        minmax_line: cx.line_at(&vl, &hl, t, x, up),
        maxmin_line: cx.line_at(&vl, &hl, t, x, down),
    })
}

/// Exact minmax value.
pub fn exact_minmax(v: &PLFunction, h: &PLFunction, t: f64, x: f64) -> Result<f64> {
    exact_pass(v, h, t, x).map(|p| p.minmax)
}
