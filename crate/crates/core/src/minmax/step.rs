//! One-step minmax operator `v -> R^tau v` as a PL profile.
//!
//! The profile is reconstructed from pointwise evaluations. Each evaluation
//! also reports the affine function of `x` realizing the value, so between
//! two samples with different lines the kink sits at their intersection;
//! the guess is confirmed by sampling it and both half intervals, otherwise
//! the interval is split further.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genfam::build_wavefront;
use crate::plfun::PLFunction;

use super::exact::exact_pass;
use super::grid::{minmax_grid, FiberBox};
use super::Line;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "HJFRONT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Engine {
    /// Exact mountain pass on the cell complex of the data.
    Exact,
    /// Uniform fiber grid; values are snapped to the nearest wave-front line.
    Grid { nx: usize, ny: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub engine: Engine,
    /// Uniform samples before refinement.
    pub initial: usize,
    /// Sampling interval; outside it the profile continues affinely.
    /// Defaults to the data's kinks widened by the propagation distance.
    pub domain: Option<(f64, f64)>,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            engine: Engine::Exact,
            initial: 64,
            domain: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub profile: PLFunction,
    pub samples: Vec<f64>,
    /// Samples whose value could not be matched to a front line within the
    /// grid tolerance (grid engine only).
    pub flagged: usize,
    /// Largest `|grid value - snapped value|` (grid engine only).
    pub snap_gap: f64,
}

pub(crate) fn thread_count() -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .map_or(avail, |n| n.min(avail.max(1)))
}

/// Order-preserving parallel map.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = thread_count().min(items.len().max(1));
    if threads <= 1 || items.len() < 4 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                s.spawn(move || c.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    x: f64,
    line: Line,
    flagged: bool,
    gap: f64,
}

fn sample(v: &PLFunction, h: &PLFunction, tau: f64, engine: Engine, x: f64) -> Result<Sample> {
    match engine {
        Engine::Exact => {
            let p = exact_pass(v, h, tau, x)?;
            Ok(Sample {
                x,
                line: p.minmax_line,
                flagged: false,
                gap: 0.0,
            })
        }
        Engine::Grid { nx, ny } => {
            let r = minmax_grid(v, h, tau, x, FiberBox::auto(v, h, tau, x, nx, ny))?;
            let front = build_wavefront(v, h, tau)?;
            let best = front
                .segments
                .iter()
                .filter(|s| {
                    let (a, b) = s.x_range();
                    x >= a - 1e-12 && x <= b + 1e-12
                })
                .map(|s| Line {
                    slope: s.slope,
                    intercept: s.intercept,
                })
                .min_by(|a, b| {
                    (a.at(x) - r.minmax_value)
                        .abs()
                        .total_cmp(&(b.at(x) - r.minmax_value).abs())
                });
            match best {
                Some(line) => {
                    let gap = (line.at(x) - r.minmax_value).abs();
                    Ok(Sample {
                        x,
                        line,
                        flagged: gap > r.tolerance,
                        gap,
                    })
                }
                None => Err(Error::InvalidArgument(format!("no front line over x = {x}"))),
            }
        }
    }
}

fn default_domain(v: &PLFunction, h: &PLFunction, tau: f64) -> (f64, f64) {
    let lip = v.lipschitz();
    let m = h.lipschitz_on(-lip, lip);
    let kinks = v.kinks();
    let (a, b) = match (kinks.first(), kinks.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (v.breakpoints()[0], v.breakpoints()[0]),
    };
    (a - tau * m - 1.0, b + tau * m + 1.0)
}

fn intersection(a: &Line, b: &Line) -> Option<f64> {
    let ds = a.slope - b.slope;
    (ds != 0.0).then(|| (b.intercept - a.intercept) / ds)
}

/// `R^tau v` as a normalized PL function.
pub fn minmax_step(v: &PLFunction, h: &PLFunction, tau: f64, plan: &SamplePlan) -> Result<PLFunction> {
    minmax_step_traced(v, h, tau, plan).map(|r| r.profile)
}

pub fn minmax_step_traced(v: &PLFunction, h: &PLFunction, tau: f64, plan: &SamplePlan) -> Result<StepResult> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("step must be > 0, got {tau}")));
    }
    let v = v.normalized();
    let (xa, xb) = plan.domain.unwrap_or_else(|| default_domain(&v, h, tau));
    if !(xa < xb) {
        return Err(Error::EmptyInterval { a: xa, b: xb });
    }
    let scale = xa.abs().max(xb.abs()).max(1.0);
    let eps = 1e-11 * scale;
    let min_width = 1e-9 * scale;

    let lip = v.lipschitz();
    let hs = h.restricted(-lip - 1.0, lip + 1.0);
    let (cmin, cmax) = hs
        .slopes()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| (a.min(c), b.max(c)));
    let n = plan.initial.max(2);
    let mut xs: Vec<f64> = (0..n).map(|i| xa + (xb - xa) * i as f64 / (n - 1) as f64).collect();
    for k in v.kinks() {
        xs.extend([k, k + tau * cmin, k + tau * cmax]);
    }
    xs.retain(|&x| x >= xa && x <= xb);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|b, a| *b - *a <= eps);

    let eval = |batch: &[f64]| -> Result<Vec<Sample>> {
        par_map(batch, |&x| sample(&v, h, tau, plan.engine, x))
            .into_iter()
            .collect()
    };
    let mut samples = eval(&xs)?;
    let mut forced = vec![false; 0];
    loop {
        let mut requests = Vec::new();
        forced.clear();
        forced.resize(samples.len(), false);
        for k in 0..samples.len() - 1 {
            let (a, b) = (&samples[k], &samples[k + 1]);
            if a.line.same_as(&b.line, b.x, 1e-12) {
                continue;
            }
            if b.x - a.x < min_width {
                forced[k] = true;
                continue;
            }
            match intersection(&a.line, &b.line) {
                Some(xs) if (xs - a.x).abs() <= eps || (xs - b.x).abs() <= eps => {}
                Some(xs) if xs > a.x && xs < b.x => {
                    requests.extend([xs, 0.5 * (a.x + xs), 0.5 * (xs + b.x)]);
                }
                _ => requests.push(0.5 * (a.x + b.x)),
            }
        }
        if requests.is_empty() {
            break;
        }
        requests.sort_by(f64::total_cmp);
        requests.dedup();
        let new = eval(&requests)?;
        samples.extend(new);
        samples.sort_by(|a, b| a.x.total_cmp(&b.x));
        samples.dedup_by(|b, a| b.x == a.x);
    }

    // assemble: a break wherever the realizing line changes
    let mut lines = vec![samples[0].line];
    let mut breaks: Vec<f64> = Vec::new();
    for (k, w) in samples.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        if a.line.same_as(&b.line, b.x, 1e-12) {
            continue;
        }
        let xk = match intersection(&a.line, &b.line) {
            Some(x) if !forced[k] => x.clamp(a.x, b.x),
            _ => 0.5 * (a.x + b.x),
        };
        match breaks.last() {
            Some(&last) if xk <= last + eps => {
                *lines.last_mut().unwrap() = b.line;
            }
            _ => {
                breaks.push(xk);
                lines.push(b.line);
            }
        }
    }
    let pairs: Vec<(f64, f64)> = lines.iter().map(|l| (l.slope, l.intercept)).collect();
    let profile = if breaks.is_empty() {
        PLFunction::affine(pairs[0].0, 0.0, pairs[0].1)
    } else {
        PLFunction::from_lines(&pairs, &breaks)?
    };
    Ok(StepResult {
        profile,
        samples: samples.iter().map(|s| s.x).collect(),
        flagged: samples.iter().filter(|s| s.flagged).count(),
        snap_gap: samples.iter().fold(0.0, |m, s| m.max(s.gap)),
    })
}
