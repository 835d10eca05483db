//! Closed-form solutions for convex data.

use crate::error::{Error, Result};
use crate::plfun::{conjugate, PLFunction};

/// `min_{x0} v(x0) + t H*((x - x0) / t)` for convex `H`. The objective is
/// PL in `x0` on a compact interval, so the minimum is taken over its
/// breakpoints.
pub fn hopf_lax(v: &PLFunction, h: &PLFunction, t: f64, x: f64) -> Result<f64> {
    if !h.is_convex() {
        return Err(Error::NotConvex);
    }
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(v.eval(x));
    }
    let hs = conjugate(h)?;
    let (qa, qb) = hs.domain();
    let (lo, hi) = (x - t * qb, x - t * qa);
    let objective = |x0: f64| {
        let q = ((x - x0) / t).clamp(qa, qb);
        v.eval(x0) + t * hs.eval(q)
    };
    let candidates = v
        .breakpoints()
        .iter()
        .copied()
        .filter(|&x0| x0 > lo && x0 < hi)
        .chain(hs.breakpoints().iter().map(|q| x - t * q))
        .chain([lo, hi]);
    Ok(candidates.map(objective).fold(f64::INFINITY, f64::min))
}

/// `(v* + t H)*(x)` for convex `v`, as the maximum of the PL concave-side
/// objective `x y - v*(y) - t H(y)` over the breakpoints of `dom v*`.
pub fn hopf_conj(v: &PLFunction, h: &PLFunction, t: f64, x: f64) -> Result<f64> {
    let vs = conjugate(v)?;
    let (a, b) = vs.domain();
    let candidates = vs
        .breakpoints()
        .iter()
        .copied()
        .chain(h.breakpoints().iter().copied().filter(|&y| y > a && y < b));
    Ok(candidates
        .map(|y| x * y - vs.eval(y) - t * h.eval(y))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Profile `x -> hopf_conj(v, h, t, x)` as a PL function.
pub fn hopf_conj_profile(v: &PLFunction, h: &PLFunction, t: f64) -> Result<PLFunction> {
    let vs = conjugate(v)?;
    let (a, b) = vs.domain();
    let mut ys: Vec<f64> = vs
        .breakpoints()
        .iter()
        .copied()
        .chain(h.breakpoints().iter().copied().filter(|&y| y > a && y < b))
        .collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let g = crate::plfun::ExtendedPL::new(
        ys.clone(),
        ys.iter().map(|&y| vs.eval(y) + t * h.eval(y)).collect(),
    )?;
    // sup of affine functions of x: the conjugate of the convex envelope of g
    let hull = crate::plfun::monotone_chain(
        g.breakpoints().iter().copied().zip(g.values().iter().copied()),
        crate::plfun::EnvelopeKind::Convex,
    );
    let env = crate::plfun::ExtendedPL::new(
        hull.iter().map(|p| p.0).collect(),
        hull.iter().map(|p| p.1).collect(),
    )?;
    crate::plfun::conjugate_extended(&env)
}

#[cfg(test)]
mod tests {
    use super::*;
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
    fn hopf_lax_of_abs_with_dense_parabola() {
        let h = pl_approx(|p| 0.5 * p * p, 400, -2.0, 2.0).unwrap();
        let v = pl(&[(0.0, 0.0)], -1.0, 1.0);
        let t = 1.0;
        for k in 0..=40 {
            let x = -2.0 + 0.1 * k as f64;
            let exact = if x.abs() <= t { x * x / (2.0 * t) } else { x.abs() - t / 2.0 };
            let u = hopf_lax(&v, &h, t, x).unwrap();
            // PL error of H is 1.25e-5, of H* similar
            assert!((u - exact).abs() < 1e-4, "x={x}: {u} vs {exact}");
            // brute force over a fine x0 grid
            let hs = conjugate(&h).unwrap();
            let (qa, qb) = hs.domain();
            let brute = (0..=20000)
                .map(|i| x - t * (qa + (qb - qa) * i as f64 / 20000.0))
                .chain(hs.breakpoints().iter().map(|q| x - t * q))
                .chain([0.0])
                .map(|x0| v.eval(x0) + t * hs.eval(((x - x0) / t).clamp(qa, qb)))
                .fold(f64::INFINITY, f64::min);
            assert!(u <= brute + 1e-12 && brute - u < 1e-6);
        }
    }

    #[test]
    fn hopf_lax_affine_and_small_time() {
        let h = pl(&[(-1.0, 1.0), (0.0, 0.0), (2.0, 1.0)], -2.0, 3.0);
        let v = PLFunction::affine(0.5, 0.0, 1.0);
        for &x in &[-1.0, 0.0, 2.5] {
            let u = hopf_lax(&v, &h, 0.7, x).unwrap();
            assert!((u - (1.0 + 0.5 * x - 0.7 * h.eval(0.5))).abs() < 1e-14);
        }
        let w = pl(&[(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)], 0.0, 0.0);
        let hmax = h.max_abs_on(-1.0, 1.0);
        for &t in &[1e-1, 1e-2, 1e-3] {
            for k in 0..=20 {
                let x = -2.0 + 0.2 * k as f64;
                assert!((hopf_lax(&w, &h, t, x).unwrap() - w.eval(x)).abs() <= t * hmax + 1e-14);
            }
        }
        assert_eq!(hopf_lax(&w, &h.scale(-1.0), 0.1, 0.0), Err(Error::NotConvex));
    }

    #[test]
    fn hopf_conj_examples() {
        let v = pl(&[(0.0, 0.0)], -1.0, 1.0);
        let h = pl_approx(|p| p.powi(4) - p * p, 40, -2.0, 2.0).unwrap();
        for k in 0..=20 {
            let x = -1.0 + 0.1 * k as f64;
            let brute = (0..=20000)
                .map(|i| -1.0 + 2.0 * i as f64 / 20000.0)
                .map(|y| x * y - 0.5 * h.eval(y))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((hopf_conj(&v, &h, 0.5, x).unwrap() - brute).abs() < 1e-12);
            assert!((hopf_conj(&v, &h, 0.0, x).unwrap() - v.eval(x)).abs() < 1e-15);
        }
        let bump = pl(&[(0.0, 0.0)], 1.0, -1.0);
        assert_eq!(hopf_conj(&bump, &h, 0.5, 0.0), Err(Error::NotConvex));
    }

    #[test]
    fn hopf_conj_matches_convex_riemann_fan() {
        let h = pl(&[(-1.0, 0.3), (-0.2, -0.4), (0.5, 0.6), (1.5, -0.2)], 1.0, -2.0);
        let v = pl(&[(0.3, 0.2)], -1.2, 1.7);
        let fan = solve_fan(-1.2, 1.7, &h, (0.0, 0.3));
        let prof = hopf_conj_profile(&v, &h, 0.8).unwrap();
        for k in 0..=60 {
            let x = -3.0 + 0.1 * k as f64;
            let u = fan_eval(&fan, &h, 0.2, 0.8, x).unwrap();
            assert!((hopf_conj(&v, &h, 0.8, x).unwrap() - u).abs() < 1e-9);
            assert!((prof.eval(x) - u).abs() < 1e-9);
        }
    }
}
