//! Exact entropy solution of the Riemann problem for a piecewise-linear
//! Hamiltonian.
//!
//! For a single kink with slopes `p_minus` (left) and `p_plus` (right) the
//! solution is a fan of shocks whose intermediate states are the vertices of
//! the convex envelope of `H` on `[p_minus, p_plus]` (or of the concave
//! envelope on `[p_plus, p_minus]`), and whose speeds are the chord slopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plfun::{monotone_chain, EnvelopeKind, PLFunction};

/// Breakpoints of `H` this close to a jump endpoint are treated as the
/// endpoint itself.
pub const ENDPOINT_SNAP: f64 = 1e-10;
/// Fan speeds closer than this are merged.
pub const SPEED_MERGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FanKind {
    Convex,
    Concave,
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannFan {
    /// `(t0, x0)`.
    pub apex: (f64, f64),
    /// States from left to right; `slopes[0] = p_minus`, last is `p_plus`.
    pub slopes: Vec<f64>,
    /// `speeds[i]` separates `slopes[i]` and `slopes[i + 1]`.
    pub speeds: Vec<f64>,
    pub kind: FanKind,
}

impl RiemannFan {
    pub fn p_minus(&self) -> f64 {
        self.slopes[0]
    }

    pub fn p_plus(&self) -> f64 {
        self.slopes[self.slopes.len() - 1]
    }

    /// Index into `slopes` of the state at offset `xi = x - x0` after elapsed
    /// time `tau`. Points exactly on a ray belong to the left state.
    pub fn state_index(&self, tau: f64, xi: f64) -> usize {
        self.speeds.partition_point(|&s| xi > tau * s)
    }
}

/// Envelope vertices of `H` on the jump interval, with breakpoints near the
/// endpoints snapped away.
fn envelope_states(h: &PLFunction, a: f64, b: f64, kind: EnvelopeKind) -> Vec<(f64, f64)> {
    let tol = ENDPOINT_SNAP * a.abs().max(b.abs()).max(1.0);
    let pts = std::iter::once(a)
        .chain(
            h.breakpoints()
                .iter()
                .copied()
                .filter(|&q| q > a + tol && q < b - tol),
        )
        .chain(std::iter::once(b))
        .map(|q| (q, h.eval(q)));
    monotone_chain(pts, kind)
}

/// Riemann fan for the jump `p_minus -> p_plus` issued from `apex`.
pub fn solve_fan(p_minus: f64, p_plus: f64, h: &PLFunction, apex: (f64, f64)) -> RiemannFan {
    let trivial = RiemannFan {
        apex,
        slopes: vec![p_minus],
        speeds: vec![],
        kind: FanKind::Trivial,
    };
    if p_minus == p_plus {
        return trivial;
    }
    let (mut states, kind) = if p_minus < p_plus {
        (
            envelope_states(h, p_minus, p_plus, EnvelopeKind::Convex),
            FanKind::Convex,
        )
    } else {
        let mut st = envelope_states(h, p_plus, p_minus, EnvelopeKind::Concave);
        st.reverse();
        (st, FanKind::Concave)
    };
    // exact endpoint slopes, whatever the hull did with rounding
    states[0].0 = p_minus;
    let last = states.len() - 1;
    states[last].0 = p_plus;

    let mut slopes = vec![states[0].0];
    let mut values = vec![states[0].1];
    let mut speeds: Vec<f64> = Vec::new();
    for &(p, hp) in &states[1..] {
        let (p0, h0) = (*slopes.last().unwrap(), *values.last().unwrap());
        let s = (hp - h0) / (p - p0);
        if let Some(&prev) = speeds.last() {
            if (s - prev).abs() <= SPEED_MERGE * s.abs().max(prev.abs()).max(1.0) {
                // drop the intermediate state and recompute the merged chord
                slopes.pop();
                values.pop();
                speeds.pop();
                let (pa, ha) = (*slopes.last().unwrap(), *values.last().unwrap());
                speeds.push((hp - ha) / (p - pa));
                slopes.push(p);
                values.push(hp);
                continue;
            }
        }
        speeds.push(s);
        slopes.push(p);
        values.push(hp);
    }
    RiemannFan {
        apex,
        slopes,
        speeds,
        kind,
    }
}

/// Closed-form value of the fan solution, anchored so that `u = v_apex` at
/// the apex.
pub fn fan_eval(fan: &RiemannFan, h: &PLFunction, v_apex: f64, t: f64, x: f64) -> Result<f64> {
    let (t0, x0) = fan.apex;
    if t < t0 {
        return Err(Error::BeforeApex { t, t0 });
    }
    let tau = t - t0;
    let xi = x - x0;
    let p = fan.slopes[fan.state_index(tau, xi)];
    Ok(v_apex + p * xi - tau * h.eval(p))
}

/// Oleinik entropy condition for the jump `p_minus -> p_plus`.
///
/// For `p_plus < p_minus` the graph of `H` must lie on or below the chord on
/// `[p_plus, p_minus]`, and on or above it for `p_minus < p_plus`. With
/// `strict`, every interior point must lie strictly on the correct side.
pub fn entropy_ok(p_minus: f64, p_plus: f64, h: &PLFunction, strict: bool) -> Result<bool> {
    if p_minus == p_plus {
        return Err(Error::NotAJump(p_minus));
    }
    let (a, b) = (p_minus.min(p_plus), p_minus.max(p_plus));
    let (ha, hb) = (h.eval(a), h.eval(b));
    let chord = |q: f64| ha + (hb - ha) * (q - a) / (b - a);
    // below the chord for a downward jump, above for an upward one
    let sign = if p_plus < p_minus { 1.0 } else { -1.0 };
    let scale = ha.abs().max(hb.abs()).max(1.0);
    let tol = 1e-12 * scale;
    let snap = ENDPOINT_SNAP * a.abs().max(b.abs()).max(1.0);
    let mut any_interior = false;
    for &q in h.breakpoints().iter().filter(|&&q| q > a + snap && q < b - snap) {
        any_interior = true;
        let excess = sign * (h.eval(q) - chord(q));
        if excess > tol || (strict && excess > -tol) {
            return Ok(false);
        }
    }
    Ok(!strict || any_interior)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(points: &[(f64, f64)], l: f64, r: f64) -> PLFunction {
        PLFunction::new(
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
            l,
            r,
        )
        .unwrap()
    }

    /// Hopf value `max_{y in [pm, pp]} (x y - t H(y))` (convex datum) or the
    /// matching minimum (concave datum) on a dense grid plus the breakpoints
    /// of `H`, which makes it exact for piecewise-linear `H`.
    fn hopf_brute(pm: f64, pp: f64, h: &PLFunction, t: f64, x: f64) -> f64 {
        let (a, b) = (pm.min(pp), pm.max(pp));
        let n = 10_000;
        let mut ys: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        ys.extend(h.breakpoints().iter().copied().filter(|&q| q > a && q < b));
        let vals = ys.iter().map(|&y| x * y - t * h.eval(y));
        if pm < pp {
            vals.fold(f64::NEG_INFINITY, f64::max)
        } else {
            vals.fold(f64::INFINITY, f64::min)
        }
    }

    fn w_hat() -> PLFunction {
        pl(&[(-1.0, 0.0), (0.0, -1.0), (1.0, 0.0)], -1.0, 1.0)
    }

    #[test]
    fn convex_fan_through_envelope_breakpoint() {
        let h = w_hat();
        let fan = solve_fan(-1.0, 1.0, &h, (0.0, 0.0));
        assert_eq!(fan.kind, FanKind::Convex);
        assert_eq!(fan.slopes, vec![-1.0, 0.0, 1.0]);
        assert_eq!(fan.speeds, vec![-1.0, 1.0]);
        for &x in &[-2.0, -0.5, 0.0, 0.3, 1.7] {
            let u = fan_eval(&fan, &h, 0.0, 1.0, x).unwrap();
            assert!((u - hopf_brute(-1.0, 1.0, &h, 1.0, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_fan() {
        let h = w_hat();
        let fan = solve_fan(0.3, 0.3, &h, (0.0, 0.0));
        assert_eq!(fan.kind, FanKind::Trivial);
        assert!(fan.speeds.is_empty());
        let u = fan_eval(&fan, &h, 0.0, 2.0, 1.5).unwrap();
        assert!((u - (0.3 * 1.5 - 2.0 * h.eval(0.3))).abs() < 1e-15);
    }

    #[test]
    fn concave_fan_is_chord() {
        let h = pl(&[(0.0, 0.0), (1.0, 0.5), (2.0, 2.0)], 0.0, 1.5);
        let fan = solve_fan(2.0, 0.0, &h, (0.0, 0.0));
        assert_eq!(fan.kind, FanKind::Concave);
        assert_eq!(fan.slopes, vec![2.0, 0.0]);
        assert_eq!(fan.speeds, vec![1.0]);
        for &x in &[-1.0, 0.5, 0.99, 1.01, 3.0] {
            let u = fan_eval(&fan, &h, 0.0, 1.0, x).unwrap();
            assert!((u - hopf_brute(2.0, 0.0, &h, 1.0, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn fan_eval_worked_values() {
        let h = w_hat();
        let fan = solve_fan(-1.0, 1.0, &h, (0.0, 0.0));
        assert!((fan_eval(&fan, &h, 0.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((fan_eval(&fan, &h, 0.0, 1.0, -2.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(
            fan_eval(&fan, &h, 0.0, -0.1, 0.0),
            Err(Error::BeforeApex { .. })
        ));
    }

    #[test]
    fn entropy_examples() {
        let convex = pl(&[(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)], -1.0, 1.0);
        assert!(entropy_ok(1.0, -1.0, &convex, false).unwrap());
        let cap = pl(&[(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)], 1.0, -1.0);
        assert!(!entropy_ok(1.0, -1.0, &cap, false).unwrap());
        assert!(matches!(entropy_ok(0.5, 0.5, &cap, false), Err(Error::NotAJump(_))));

        let cubic = crate::plfun::pl_approx(|p| -p * p * p + p * p + p, 200, -2.0, 2.0).unwrap();
        assert!(!entropy_ok(6.0 / 5.0, -2.0 / 3.0, &cubic, false).unwrap());
    }

    #[test]
    fn entropy_strictness() {
        // linear H between the states: admissible but not strict
        let lin = pl(&[(-2.0, 0.0), (2.0, 4.0)], 1.0, 1.0);
        assert!(entropy_ok(1.0, -1.0, &lin, false).unwrap());
        assert!(!entropy_ok(1.0, -1.0, &lin, true).unwrap());
        let convex = pl(&[(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)], -1.0, 1.0);
        assert!(entropy_ok(1.0, -1.0, &convex, true).unwrap());
    }

    #[test]
    fn endpoints_kept_when_not_breakpoints() {
        let h = w_hat();
        let fan = solve_fan(-0.5, 0.25, &h, (1.0, 2.0));
        assert_eq!(fan.slopes, vec![-0.5, 0.0, 0.25]);
        assert_eq!(fan.speeds.len(), 2);
    }

    #[test]
    fn fans_satisfy_entropy_and_rankine_hugoniot() {
        let h = pl(
            &[(-2.0, 1.0), (-1.0, -0.5), (-0.3, 0.4), (0.5, -0.2), (1.2, 0.9), (2.0, 0.1)],
            0.5,
            -1.0,
        );
        for &(pm, pp) in &[(-2.5, 2.5), (2.5, -2.5), (-1.0, 1.2), (1.1, -0.7), (0.0, 0.6)] {
            let fan = solve_fan(pm, pp, &h, (0.0, 0.0));
            assert!(fan.speeds.windows(2).all(|w| w[1] > w[0]));
            for i in 0..fan.speeds.len() {
                let (a, b) = (fan.slopes[i], fan.slopes[i + 1]);
                let rh = (h.eval(b) - h.eval(a)) / (b - a);
                assert!((fan.speeds[i] - rh).abs() < 1e-12);
                assert!(entropy_ok(a, b, &h, false).unwrap());
            }
            for k in 0..50 {
                let x = -4.0 + 8.0 * k as f64 / 49.0;
                let u = fan_eval(&fan, &h, 0.0, 1.0, x).unwrap();
                assert!((u - hopf_brute(pm, pp, &h, 1.0, x)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn continuity_across_rays() {
        let h = w_hat();
        let fan = solve_fan(-1.0, 1.0, &h, (0.5, -1.0));
        for &t in &[0.6, 1.0, 3.0] {
            for i in 0..fan.speeds.len() {
                let x = -1.0 + fan.speeds[i] * (t - 0.5);
                let l = 0.0 + fan.slopes[i] * (x + 1.0) - (t - 0.5) * h.eval(fan.slopes[i]);
                let r = 0.0 + fan.slopes[i + 1] * (x + 1.0) - (t - 0.5) * h.eval(fan.slopes[i + 1]);
                assert!((l - r).abs() < 1e-12);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        prop_compose! {
            fn any_h()(pts in proptest::collection::vec((0.05f64..1.0, -2.0f64..2.0), 1..9), l in -2.0f64..2.0, r in -2.0f64..2.0) -> PLFunction {
                let mut x = -2.0;
                let (mut xs, mut ys) = (vec![], vec![]);
                for &(dx, y) in &pts {
                    x += dx;
                    xs.push(x);
                    ys.push(y);
                }
                PLFunction::new(xs, ys, l, r).unwrap()
            }
        }

        proptest! {
            #[test]
            fn fan_invariants(h in any_h(), pm in -2.5f64..2.5, pp in -2.5f64..2.5) {
                prop_assume!((pm - pp).abs() > 1e-6);
                let fan = solve_fan(pm, pp, &h, (0.0, 0.0));
                prop_assert_eq!(fan.speeds.len() + 1, fan.slopes.len());
                prop_assert_eq!(fan.p_minus(), pm);
                prop_assert_eq!(fan.p_plus(), pp);
                for w in fan.speeds.windows(2) {
                    prop_assert!(w[0] < w[1]);
                }
                for (i, w) in fan.slopes.windows(2).enumerate() {
                    prop_assert!((w[1] - w[0]) * (pp - pm) > 0.0);
                    let chord = (h.eval(w[1]) - h.eval(w[0])) / (w[1] - w[0]);
                    prop_assert!((fan.speeds[i] - chord).abs() <= 1e-9 * chord.abs().max(1.0));
                    prop_assert!(entropy_ok(w[0], w[1], &h, false).unwrap());
                }
            }

            #[test]
            fn fan_is_continuous_across_rays(h in any_h(), pm in -2.5f64..2.5, pp in -2.5f64..2.5, t in 0.1f64..2.0) {
                prop_assume!((pm - pp).abs() > 1e-6);
                let fan = solve_fan(pm, pp, &h, (0.0, 0.0));
                for (i, &s) in fan.speeds.iter().enumerate() {
                    let x = s * t;
                    let (a, b) = (fan.slopes[i], fan.slopes[i + 1]);
                    let (ua, ub) = (a * x - t * h.eval(a), b * x - t * h.eval(b));
                    prop_assert!((ua - ub).abs() <= 1e-9 * ua.abs().max(1.0));
                }
            }
        }
    }
}
