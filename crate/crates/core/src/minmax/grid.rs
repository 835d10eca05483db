//! Discrete mountain pass on a uniform vertex grid of the fiber.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plfun::PLFunction;

use super::dsu::Dsu;

/// Enlargements tried before giving up on the seed gap.
pub const MAX_ENLARGE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberBox {
    pub x0: (f64, f64),
    pub y0: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl FiberBox {
    /// `y0` range `[-L - 1, L + 1]` with `L = |dv|`; `x0` range centered on
    /// `x` with room for every characteristic foot and a corner margin.
    pub fn auto(v: &PLFunction, h: &PLFunction, t: f64, x: f64, nx: usize, ny: usize) -> FiberBox {
        let lip = v.lipschitz();
        let y = lip + 1.0;
        let m = h.lipschitz_on(-y, y);
        let reach = t * m + 1.0;
        let (lo, hi) = v.range_on(x - reach, x + reach);
        let margin = (hi - lo) + t * h.max_abs_on(-y, y) + x.abs() * lip + 1.0;
        FiberBox {
            x0: (x - reach - margin, x + reach + margin),
            y0: (-y, y),
            nx,
            ny,
        }
    }

    /// Doubles the `x0` margin around the center, keeping the resolution.
    pub fn enlarged(&self) -> FiberBox {
        let c = 0.5 * (self.x0.0 + self.x0.1);
        let w = self.x0.1 - self.x0.0;
        FiberBox {
            x0: (c - w, c + w),
            ..*self
        }
    }

    pub fn steps(&self) -> (f64, f64) {
        (
            (self.x0.1 - self.x0.0) / (self.nx - 1) as f64,
            (self.y0.1 - self.y0.0) / (self.ny - 1) as f64,
        )
    }

    fn x(&self, i: usize) -> f64 {
        self.x0.0 + (self.x0.1 - self.x0.0) * i as f64 / (self.nx - 1) as f64
    }

    fn y(&self, j: usize) -> f64 {
        self.y0.0 + (self.y0.1 - self.y0.0) * j as f64 / (self.ny - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassResult {
    pub minmax_value: f64,
    pub maxmin_value: f64,
    /// Grid index `(i, j)` of the vertex where the ascending filtration connects.
    pub saddle_cell: (usize, usize),
    /// Grid index where the descending filtration connects.
    pub dual_cell: (usize, usize),
    pub resolution: (usize, usize),
    /// `2 (hx Lx + hy Ly)`, with `L` the Lipschitz constants of `S` on the box.
    pub tolerance: f64,
    pub fiber_box: FiberBox,
    pub enlargements: usize,
}

impl PassResult {
    pub fn fiber_point(&self) -> (f64, f64) {
        (self.fiber_box.x(self.saddle_cell.0), self.fiber_box.y(self.saddle_cell.1))
    }
}

struct Grid {
    b: FiberBox,
    values: Vec<f64>,
}

impl Grid {
    fn new(v: &PLFunction, h: &PLFunction, t: f64, x: f64, b: FiberBox) -> Grid {
        let hv: Vec<f64> = (0..b.ny).map(|j| t * h.eval(b.y(j))).collect();
        let mut values = Vec::with_capacity(b.nx * b.ny);
        // row-major in (j, i): rows are y0 levels
        for j in 0..b.ny {
            let y = b.y(j);
            for i in 0..b.nx {
                let x0 = b.x(i);
                values.push(v.eval(x0) - hv[j] + (x - x0) * y);
            }
        }
        Grid { b, values }
    }

    fn id(&self, i: usize, j: usize) -> usize {
        j * self.b.nx + i
    }

    /// Connection threshold between two seed vertices. Vertices enter in
    /// increasing value (decreasing if `descending`), ties in index order.
    fn threshold(&self, seeds: (usize, usize), descending: bool, eight: bool) -> (f64, usize) {
        let n = self.values.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let vals = &self.values;
        if descending {
            order.sort_unstable_by(|&a, &b| vals[b as usize].total_cmp(&vals[a as usize]).then(a.cmp(&b)));
        } else {
            order.sort_unstable_by(|&a, &b| vals[a as usize].total_cmp(&vals[b as usize]).then(a.cmp(&b)));
        }
        let (nx, ny) = (self.b.nx as i64, self.b.ny as i64);
        let mut dsu = Dsu::new(n);
        let mut inserted = vec![false; n];
        const N4: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        const N8: [(i64, i64); 8] = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)];
        let nbrs: &[(i64, i64)] = if eight { &N8 } else { &N4 };
        for &k in &order {
            let k = k as usize;
            inserted[k] = true;
            let (i, j) = ((k as i64) % nx, (k as i64) / nx);
            for &(di, dj) in nbrs {
                let (a, b) = (i + di, j + dj);
                if a >= 0 && b >= 0 && a < nx && b < ny {
                    let m = (b * nx + a) as usize;
                    if inserted[m] {
                        dsu.union(k, m);
                    }
                }
            }
            if inserted[seeds.0] && inserted[seeds.1] && dsu.same(seeds.0, seeds.1) {
                return (vals[k], k);
            }
        }
        unreachable!("the grid is connected")
    }

    /// Gap between the seed corners and the core region where critical
    /// points live: positive when both seed pairs are strictly beyond it.
    fn seed_gap(&self, core: (f64, f64)) -> f64 {
        let b = &self.b;
        let (nx, ny) = (b.nx, b.ny);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..ny {
            for i in 0..nx {
                let x0 = b.x(i);
                if x0 >= core.0 && x0 <= core.1 {
                    let s = self.values[self.id(i, j)];
                    lo = lo.min(s);
                    hi = hi.max(s);
                }
            }
        }
        let v = |i, j| self.values[self.id(i, j)];
        let low_seeds = v(nx - 1, ny - 1).max(v(0, 0));
        let high_seeds = v(nx - 1, 0).min(v(0, ny - 1));
        (lo - low_seeds).min(high_seeds - hi)
    }
}

/// Mountain-pass value of `S(t, x, .)` between the deep corners
/// `(x0 max, y0 max)` and `(x0 min, y0 min)`, and the dual threshold.
pub fn minmax_grid(v: &PLFunction, h: &PLFunction, t: f64, x: f64, fiber_box: FiberBox) -> Result<PassResult> {
    if fiber_box.nx < 2 || fiber_box.ny < 2 {
        return Err(Error::InvalidArgument("grid resolution must be at least 2".into()));
    }
    if !(t >= 0.0) || !t.is_finite() || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("bad evaluation point t = {t}, x = {x}")));
    }
    let m = h.lipschitz_on(fiber_box.y0.0, fiber_box.y0.1);
    let core = (x - t * m - 1.0, x + t * m + 1.0);
    let mut b = fiber_box;
    for attempt in 0..=MAX_ENLARGE {
        let g = Grid::new(v, h, t, x, b);
        if g.seed_gap(core) <= 0.0 {
            b = b.enlarged();
            if attempt == MAX_ENLARGE {
                break;
            }
            continue;
        }
        let (nx, ny) = (b.nx, b.ny);
        let (up, ui) = g.threshold((g.id(nx - 1, ny - 1), g.id(0, 0)), false, true);
        let (down, di) = g.threshold((g.id(nx - 1, 0), g.id(0, ny - 1)), true, false);
        let (hx, hy) = b.steps();
        let ymax = b.y0.0.abs().max(b.y0.1.abs());
        let lx = v.lipschitz_on(b.x0.0, b.x0.1) + ymax;
        let ly = (x - b.x0.0).abs().max((b.x0.1 - x).abs()) + t * m;
        return Ok(PassResult {
            minmax_value: up,
            maxmin_value: down,
            saddle_cell: (ui % nx, ui / nx),
            dual_cell: (di % nx, di / nx),
            resolution: (nx, ny),
            tolerance: 2.0 * (hx * lx + hy * ly),
            fiber_box: b,
            enlargements: attempt,
        });
    }
    Err(Error::BoxTooSmall(MAX_ENLARGE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minmax::hopf::hopf_lax;
    use crate::plfun::pl_approx;
    use crate::riemann::{fan_eval, solve_fan};

    fn pl(points: &[(f64, f64)], l: f64, r: f64) -> PLFunction {
        PLFunction::new(
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
            l,
            r,
        )
        .unwrap()
    }

    #[test]
    fn time_zero_gives_v() {
        let v = pl(&[(-1.0, 0.3), (0.0, -0.2), (1.0, 0.4)], 0.5, -0.5);
        let h = pl_approx(|p| p.powi(4) - p * p, 40, -2.0, 2.0).unwrap();
        for &x in &[-1.3, 0.0, 0.4] {
            let r = minmax_grid(&v, &h, 0.0, x, FiberBox::auto(&v, &h, 0.0, x, 256, 256)).unwrap();
            assert!((r.minmax_value - v.eval(x)).abs() <= r.tolerance);
            assert!((r.maxmin_value - v.eval(x)).abs() <= r.tolerance);
        }
    }

    #[test]
    fn convex_hamiltonian_matches_hopf_lax() {
        let h = pl_approx(|p| 0.5 * p * p, 40, -2.0, 2.0).unwrap();
        let v = pl(&[(0.0, 0.0)], -1.0, 1.0);
        let mut errs = vec![];
        for n in [128, 256, 512] {
            let r = minmax_grid(&v, &h, 1.0, 0.5, FiberBox::auto(&v, &h, 1.0, 0.5, n, n)).unwrap();
            let e = (r.minmax_value - hopf_lax(&v, &h, 1.0, 0.5).unwrap()).abs();
            assert!(e <= r.tolerance);
            assert!((r.minmax_value - r.maxmin_value).abs() <= r.tolerance);
            errs.push(e);
        }
        assert!(errs[2] <= errs[0]);
    }

    #[test]
    fn riemann_datum_matches_fan() {
        let h = pl(&[(-1.0, 0.2), (-0.3, -0.5), (0.4, 0.3), (1.2, -0.4)], 0.5, 0.8);
        let v = pl(&[(0.0, 0.0)], 1.1, -0.9);
        let fan = solve_fan(1.1, -0.9, &h, (0.0, 0.0));
        for &x in &[-0.5, 0.0, 0.2, 0.7] {
            let r = minmax_grid(&v, &h, 0.8, x, FiberBox::auto(&v, &h, 0.8, x, 256, 256)).unwrap();
            let u = fan_eval(&fan, &h, 0.0, 0.8, x).unwrap();
            assert!((r.minmax_value - u).abs() <= r.tolerance);
        }
    }

    #[test]
    fn tiny_box_is_rejected() {
        let v = pl(&[(0.0, 0.0)], 1.0, -1.0);
        let h = pl(&[(0.0, 0.0)], -1.0, 1.0);
        let b = FiberBox {
            x0: (-0.01, 0.01),
            y0: (-0.01, 0.01),
            nx: 16,
            ny: 16,
        };
        assert_eq!(minmax_grid(&v, &h, 1.0, 0.0, b), Err(Error::BoxTooSmall(MAX_ENLARGE)));
    }

    #[test]
    fn deterministic() {
        let v = pl(&[(-1.0, 0.0), (1.0, 0.0)], 0.5, 0.5);
        let h = pl(&[(-1.0, 1.0), (1.0, -1.0)], 0.0, 0.0);
        let b = FiberBox::auto(&v, &h, 0.5, 0.1, 64, 64);
        assert_eq!(minmax_grid(&v, &h, 0.5, 0.1, b).unwrap(), minmax_grid(&v, &h, 0.5, 0.1, b).unwrap());
    }
}
