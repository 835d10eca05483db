//! Iterated minmax over a time subdivision, convergence against front
//! tracking, and shock diagnostics of the iterated profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fronttrack::FrontTrace;
use crate::minmax::{minmax_step_traced, Engine, SamplePlan};
use crate::plfun::PLFunction;

/// Kinks with a smaller slope jump are treated as discretization of a smooth
/// profile, not as shocks.
pub const SIGNIFICANT_JUMP: f64 = 0.1;

/// `0 = t_0 < t_1 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subdivision {
    times: Vec<f64>,
}

impl Subdivision {
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("subdivision needs n >= 1".into()));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon must be > 0, got {horizon}")));
        }
        let times = (0..=n)
            .map(|i| if i == n { horizon } else { horizon * i as f64 / n as f64 })
            .collect();
        Ok(Subdivision { times })
    }

    pub fn explicit(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times[0] != 0.0 {
            return Err(Error::InvalidArgument("subdivision must start at 0 and have a positive step".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("subdivision times must be strictly increasing".into()));
        }
        Ok(Subdivision { times })
    }

    /// Adds the given times (those strictly inside `(0, T)`), dropping any
    /// within `1e-12` of an existing one.
    pub fn refined_with(&self, extra: &[f64]) -> Subdivision {
        let horizon = self.horizon();
        let mut times = self.times.clone();
        times.extend(extra.iter().copied().filter(|&t| t > 0.0 && t < horizon));
        times.sort_by(f64::total_cmp);
        times.dedup_by(|b, a| *b - *a <= 1e-12);
        *times.last_mut().unwrap() = horizon;
        Subdivision { times }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// `|zeta|`, the largest step.
    pub fn mesh(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// `i` with `t_i <= s < t_{i+1}`; `None` outside `[0, T)`.
    pub fn index(&self, s: f64) -> Option<usize> {
        if !(s >= 0.0) || s >= self.horizon() {
            return None;
        }
        Some(self.times.partition_point(|&t| t <= s) - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockPoint {
    pub t: f64,
    pub x: f64,
    pub left_slope: f64,
    pub right_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockPath {
    /// Step index of the first point.
    pub birth_step: usize,
    /// Step at which matching failed, if it did.
    pub death_step: Option<usize>,
    pub points: Vec<ShockPoint>,
    /// `|x' - (H(p+) - H(p-)) / (p+ - p-)|` on each step of the path.
    pub rh_residuals: Vec<f64>,
    /// Distance from `x'` to the nearest one-sided `H'` at either side state.
    pub contact_residuals: Vec<f64>,
}

impl ShockPath {
    pub fn speeds(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| (w[1].x - w[0].x) / (w[1].t - w[0].t))
            .collect()
    }

    pub fn max_jump(&self) -> f64 {
        self.points
            .iter()
            .map(|p| (p.left_slope - p.right_slope).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub subdivision: Subdivision,
    pub engine: Option<Engine>,
    /// `v_0 = v, v_1, ..., v_n`.
    pub profiles: Vec<PLFunction>,
    /// Sample abscissae of each step.
    pub samples: Vec<Vec<f64>>,
    /// Sup distance of `v_k` to the front-tracking solution at `t_k`, when
    /// the reference could be computed.
    pub errors: Vec<f64>,
    /// Number of collision events of the reference.
    pub reference_events: Option<usize>,
}

impl IterationTrace {
    /// Profiles of the front-tracking solution at the subdivision times.
    pub fn from_front(trace: &FrontTrace, zeta: &Subdivision) -> Result<Self> {
        if zeta.horizon() > trace.horizon * (1.0 + 1e-12) {
            return Err(Error::TimeOutOfRange {
                t: zeta.horizon(),
                horizon: trace.horizon,
            });
        }
        let profiles = zeta
            .times()
            .iter()
            .map(|&t| trace.profile_at(t.min(trace.horizon)))
            .collect::<Result<Vec<_>>>()?;
        Ok(IterationTrace {
            subdivision: zeta.clone(),
            engine: None,
            samples: vec![Vec::new(); zeta.steps()],
            errors: vec![0.0; profiles.len()],
            profiles,
            reference_events: Some(trace.events.len()),
        })
    }

    pub fn last(&self) -> &PLFunction {
        self.profiles.last().unwrap()
    }

    pub fn final_error(&self) -> Option<f64> {
        self.errors.last().copied()
    }

    /// `||d v_{k+1}|| <= ||d v_k||` for every step.
    pub fn lipschitz_chain_ok(&self, tol: f64) -> bool {
        self.profiles
            .windows(2)
            .all(|w| w[1].lipschitz() <= w[0].lipschitz() + tol)
    }
}

/// Composes one-step minmax operators over `zeta`.
pub fn iterated_minmax(v: &PLFunction, h: &PLFunction, zeta: &Subdivision, engine: Engine) -> Result<IterationTrace> {
    let mut profiles = vec![v.normalized()];
    let mut samples = Vec::with_capacity(zeta.steps());
    let plan = SamplePlan {
        engine,
        ..SamplePlan::default()
    };
    for w in zeta.times().windows(2) {
        let step = minmax_step_traced(profiles.last().unwrap(), h, w[1] - w[0], &plan)?;
        profiles.push(step.profile);
        samples.push(step.samples);
    }
    let (errors, reference_events) = match FrontTrace::evolve(v, h, zeta.horizon()) {
        Ok(tr) => {
            let errs = zeta
                .times()
                .iter()
                .zip(&profiles)
                .map(|(&t, p)| tr.profile_at(t).map(|r| r.sup_distance(p)))
                .collect::<Result<Vec<_>>>()?;
            (errs, Some(tr.events.len()))
        }
        Err(_) => (Vec::new(), None),
    };
    Ok(IterationTrace {
        subdivision: zeta.clone(),
        engine: Some(engine),
        profiles,
        samples,
        errors,
        reference_events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub mesh: f64,
    pub error: f64,
    /// `2 k max|H| |zeta|` over `|p| <= ||dv||`.
    pub bound: f64,
    pub collisions: usize,
}

/// Sup error at `T` of the iterated minmax on uniform subdivisions.
pub fn convergence_study(v: &PLFunction, h: &PLFunction, horizon: f64, ns: &[usize], engine: Engine) -> Result<Vec<ConvergenceRow>> {
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("step counts must be increasing".into()));
    }
    let reference = FrontTrace::evolve(v, h, horizon)?;
    let target = reference.profile_at(horizon)?;
    let k = reference.events.len();
    let lip = v.lipschitz();
    let hmax = h.max_abs_on(-lip, lip);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let zeta = Subdivision::uniform(horizon, n)?;
        let tr = iterated_minmax(v, h, &zeta, engine)?;
        rows.push(ConvergenceRow {
            steps: n,
            mesh: zeta.mesh(),
            error: tr.last().sup_distance(&target),
            bound: 2.0 * k as f64 * hmax * zeta.mesh(),
            collisions: k,
        });
    }
    Ok(rows)
}

fn chord(h: &PLFunction, a: f64, b: f64) -> f64 {
    (h.eval(b) - h.eval(a)) / (b - a)
}

fn contact_residual(h: &PLFunction, speed: f64, pl: f64, pr: f64) -> f64 {
    [pl, pr]
        .iter()
        .flat_map(|&p| [h.one_sided_slope(p, true), h.one_sided_slope(p, false)])
        .map(|c| (speed - c).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Follows kinks with slope jump `>= min_jump` from step to step.
///
/// A kink at step `k` continues to the nearest unclaimed kink at step `k+1`
/// within `max|H'| dt` (plus a small slack); unmatched kinks end their path
/// and unclaimed ones start a new path.
pub fn extract_shocks_with(trace: &IterationTrace, h: &PLFunction, min_jump: f64) -> Vec<ShockPath> {
    let times = trace.subdivision.times();
    let kinks: Vec<Vec<ShockPoint>> = trace
        .profiles
        .iter()
        .zip(times)
        .map(|(p, &t)| {
            p.kink_jumps()
                .into_iter()
                .filter(|k| (k.1 - k.2).abs() >= min_jump)
                .map(|(x, l, r)| ShockPoint {
                    t,
                    x,
                    left_slope: l,
                    right_slope: r,
                })
                .collect()
        })
        .collect();
    let lip = trace.profiles.iter().map(|p| p.lipschitz()).fold(0.0, f64::max);
    let hlip = h.lipschitz_on(-lip, lip);

    let mut paths: Vec<ShockPath> = Vec::new();
    // path index of each kink at the current step
    let mut owner: Vec<usize> = Vec::new();
    for (k, pts) in kinks.iter().enumerate() {
        let mut next_owner = vec![usize::MAX; pts.len()];
        if k > 0 {
            let dt = times[k] - times[k - 1];
            let window = hlip * dt + 1e-9 * (1.0 + hlip);
            let mut claimed = vec![false; pts.len()];
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for (i, a) in kinks[k - 1].iter().enumerate() {
                for (j, b) in pts.iter().enumerate() {
                    let d = (b.x - a.x).abs();
                    if d <= window {
                        pairs.push((d, i, j));
                    }
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut done = vec![false; kinks[k - 1].len()];
            for (_, i, j) in pairs {
                if done[i] || claimed[j] {
                    continue;
                }
                done[i] = true;
                claimed[j] = true;
                let path = &mut paths[owner[i]];
                let a = kinks[k - 1][i];
                let b = pts[j];
                let speed = (b.x - a.x) / dt;
                // states at either end of the step: a kink may split or
                // merge exactly at a subdivision time
                path.rh_residuals.push(
                    (speed - chord(h, a.left_slope, a.right_slope))
                        .abs()
                        .min((speed - chord(h, b.left_slope, b.right_slope)).abs()),
                );
                path.contact_residuals.push(
                    contact_residual(h, speed, a.left_slope, a.right_slope)
                        .min(contact_residual(h, speed, b.left_slope, b.right_slope)),
                );
                path.points.push(b);
                next_owner[j] = owner[i];
            }
            for (i, d) in done.iter().enumerate() {
                if !d {
                    paths[owner[i]].death_step = Some(k);
                }
            }
        }
        for (j, o) in next_owner.iter_mut().enumerate() {
            if *o == usize::MAX {
                *o = paths.len();
                paths.push(ShockPath {
                    birth_step: k,
                    death_step: None,
                    points: vec![pts[j]],
                    rh_residuals: Vec::new(),
                    contact_residuals: Vec::new(),
                });
            }
        }
        owner = next_owner;
    }
    paths
}

/// [`extract_shocks_with`] at [`SIGNIFICANT_JUMP`].
pub fn extract_shocks(trace: &IterationTrace, h: &PLFunction) -> Vec<ShockPath> {
    extract_shocks_with(trace, h, SIGNIFICANT_JUMP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShockKind {
    /// Rankine-Hugoniot and tangency to characteristics.
    Contact,
    /// Rankine-Hugoniot only.
    Entropy,
    /// Fails Rankine-Hugoniot at the tolerance.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockVerdict {
    pub path: usize,
    pub kind: ShockKind,
    /// Median residuals over the steps of the path.
    pub rh_residual: f64,
    pub contact_residual: f64,
    /// First point of the path.
    pub start: (f64, f64),
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Classifies every extracted shock with at least one step of motion.
pub fn contact_shock_check(trace: &IterationTrace, h: &PLFunction, tol: f64) -> Vec<ShockVerdict> {
    extract_shocks(trace, h)
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.rh_residuals.is_empty())
        .map(|(i, p)| {
            let rh = median(&p.rh_residuals);
            let contact = median(&p.contact_residuals);
            let kind = if rh >= tol {
                ShockKind::Unresolved
            } else if contact < tol {
                ShockKind::Contact
            } else {
                ShockKind::Entropy
            };
            ShockVerdict {
                path: i,
                kind,
                rh_residual: rh,
                contact_residual: contact,
                start: (p.points[0].t, p.points[0].x),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minmax::hopf_lax;
    use crate::plfun::pl_approx;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pl(points: &[(f64, f64)], l: f64, r: f64) -> PLFunction {
        PLFunction::new(
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
            l,
            r,
        )
        .unwrap()
    }

    fn random_pl(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> PLFunction {
        let mut x = rng.gen_range(-2.0..-1.0);
        let mut xs = vec![];
        let mut ys = vec![];
        for _ in 0..n {
            xs.push(x);
            ys.push(rng.gen_range(-amp..amp));
            x += rng.gen_range(0.2..1.0);
        }
        PLFunction::new(xs, ys, rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)).unwrap()
    }

    fn w_hamiltonian() -> PLFunction {
        pl(
            &[(-2.0, 2.0), (-1.0, 0.5), (0.0, 0.0), (1.0, 0.5), (2.0, 2.0)],
            -1.5,
            1.5,
        )
    }

    fn w_datum() -> PLFunction {
        pl(&[(0.0, 0.0), (1.0, -1.0)], 2.0, 2.0)
    }

    #[test]
    fn subdivision_index_map() {
        let z = Subdivision::explicit(vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        assert_eq!(z.index(0.0), Some(0));
        assert_eq!(z.index(0.25), Some(1));
        assert_eq!(z.index(0.99), Some(2));
        assert_eq!(z.index(1.0), None);
        assert_eq!(z.mesh(), 0.5);
        assert!(Subdivision::explicit(vec![0.0, 0.5, 0.5]).is_err());
        assert!(Subdivision::explicit(vec![0.1, 0.5]).is_err());
        let r = Subdivision::uniform(1.0, 2).unwrap().refined_with(&[0.3, 0.5 + 1e-14, 2.0]);
        assert_eq!(r.times(), &[0.0, 0.3, 0.5, 1.0]);
    }

    #[test]
    fn single_step_with_convex_hamiltonian_is_hopf_lax() {
        let h = pl(&[(-1.0, 0.5), (0.0, 0.0), (1.5, 0.6)], -1.2, 2.0);
        let v = pl(&[(-1.0, 0.0), (0.0, 1.0), (0.5, -0.5), (2.0, 0.5)], 0.3, -0.4);
        let tr = iterated_minmax(&v, &h, &Subdivision::uniform(0.8, 1).unwrap(), Engine::Exact).unwrap();
        for k in 0..100 {
            let x = -3.0 + 0.06 * k as f64;
            let e = hopf_lax(&v, &h, 0.8, x).unwrap();
            assert!((tr.last().eval(x) - e).abs() < 1e-9);
        }
    }

    #[test]
    fn collision_times_make_iteration_exact() {
        let h = w_hamiltonian();
        let v = w_datum();
        let reference = FrontTrace::evolve(&v, &h, 2.0).unwrap();
        assert!(!reference.events.is_empty());
        let zeta = Subdivision::uniform(2.0, 3).unwrap().refined_with(&reference.event_times());
        let tr = iterated_minmax(&v, &h, &zeta, Engine::Exact).unwrap();
        assert!(tr.errors.iter().all(|&e| e < 1e-9), "{:?}", tr.errors);
        assert!(tr.lipschitz_chain_ok(1e-12));
    }

    #[test]
    fn random_data_with_collision_times_inserted() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..4 {
            let v = random_pl(&mut rng, 4, 1.0);
            let h = random_pl(&mut rng, 5, 1.0);
            let reference = FrontTrace::evolve(&v, &h, 1.0).unwrap();
            let zeta = Subdivision::uniform(1.0, 2).unwrap().refined_with(&reference.event_times());
            let tr = iterated_minmax(&v, &h, &zeta, Engine::Exact).unwrap();
            assert!(tr.final_error().unwrap() < 1e-9, "{:?}", tr.errors);
        }
    }

    #[test]
    fn convergence_bound_holds() {
        let h = w_hamiltonian();
        let v = w_datum();
        let rows = convergence_study(&v, &h, 2.0, &[1, 2, 4, 8], Engine::Exact).unwrap();
        for r in &rows {
            assert!(r.error <= r.bound + 1e-9, "{r:?}");
        }
        assert!(rows.last().unwrap().error <= rows[0].error + 1e-12);
    }

    #[test]
    fn affine_data_has_no_error_and_no_shocks() {
        let h = w_hamiltonian();
        let v = PLFunction::affine(0.4, 0.0, 0.0);
        let rows = convergence_study(&v, &h, 1.0, &[1, 3], Engine::Exact).unwrap();
        assert!(rows.iter().all(|r| r.error < 1e-12));
        let tr = iterated_minmax(&v, &h, &Subdivision::uniform(1.0, 3).unwrap(), Engine::Exact).unwrap();
        assert!(extract_shocks(&tr, &h).is_empty());
    }

    #[test]
    fn front_fed_trace_satisfies_rankine_hugoniot() {
        let h = pl(&[(-1.0, 0.2), (-0.3, -0.5), (0.4, 0.3), (1.2, -0.4)], 0.5, 0.8);
        let v = pl(&[(-1.0, 0.0), (0.0, 1.0), (1.0, 0.5)], -0.5, 0.7);
        let ft = FrontTrace::evolve(&v, &h, 0.3).unwrap();
        let zeta = Subdivision::uniform(0.3, 6).unwrap();
        let zeta = zeta.refined_with(&ft.event_times());
        let tr = IterationTrace::from_front(&ft, &zeta).unwrap();
        let paths = extract_shocks_with(&tr, &h, 1e-6);
        assert!(!paths.is_empty());
        for p in &paths {
            for r in &p.rh_residuals {
                assert!(*r < 1e-9, "{r}");
            }
        }
    }

    #[test]
    fn convex_hamiltonian_shock_is_not_contact() {
        let h = pl_approx(|p| p * p, 200, -2.0, 2.0).unwrap();
        let v = pl(&[(0.0, 0.0)], 1.0, -1.0);
        let ft = FrontTrace::evolve(&v, &h, 0.5).unwrap();
        let tr = IterationTrace::from_front(&ft, &Subdivision::uniform(0.5, 10).unwrap()).unwrap();
        let verdicts = contact_shock_check(&tr, &h, 0.05);
        assert_eq!(verdicts.len(), 1);
        assert_eq!(verdicts[0].kind, ShockKind::Entropy);
    }

    #[test]
    fn stability_of_composition() {
        let h = w_hamiltonian();
        let v = w_datum();
        let direct = iterated_minmax(&v, &h, &Subdivision::uniform(1.5, 1).unwrap(), Engine::Exact).unwrap();
        let mut last = f64::INFINITY;
        for &s in &[0.5, 0.1, 0.01] {
            let z = Subdivision::explicit(vec![0.0, s, 1.5]).unwrap();
            let tr = iterated_minmax(&v, &h, &z, Engine::Exact).unwrap();
            let d = tr.last().sup_distance(direct.last());
            assert!(d <= last + 1e-12);
            last = d;
        }
        assert!(last < 0.05);
    }

    #[test]
    fn grid_engine_two_steps_beat_one() {
        let h = w_hamiltonian();
        let v = w_datum();
        let grid = Engine::Grid { nx: 128, ny: 128 };
        let one = iterated_minmax(&v, &h, &Subdivision::uniform(2.0, 1).unwrap(), grid).unwrap();
        let two = iterated_minmax(&v, &h, &Subdivision::uniform(2.0, 2).unwrap(), grid).unwrap();
        assert!(two.final_error().unwrap() < one.final_error().unwrap());
    }
}
