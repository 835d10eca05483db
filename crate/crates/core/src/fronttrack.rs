//! Event-driven front tracking for piecewise-linear data.
//!
//! The solution is a finite union of affine patches `u = p x - H(p) t + c`
//! separated by straight shock lines. Every kink of `v` issues a Riemann fan;
//! when adjacent shocks meet, they are removed and a new fan is solved at the
//! meeting point.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plfun::{PLFunction, SlopeInterval};
use crate::riemann::{entropy_ok, solve_fan};

/// Shock meetings closer than this (in `t` and `x`) form one event.
pub const GROUP_TOL: f64 = 1e-10;
/// Minimum speed separation for two adjacent shocks to be considered
/// converging.
pub const SPEED_SEP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub slope: f64,
    pub constant: f64,
    pub birth_time: f64,
    pub death_time: Option<f64>,
    /// `None` means the piece extends to `-inf`.
    pub left_shock: Option<usize>,
    /// `None` means the piece extends to `+inf`.
    pub right_shock: Option<usize>,
}

impl Piece {
    pub fn value(&self, h: &PLFunction, t: f64, x: f64) -> f64 {
        self.slope * x - h.eval(self.slope) * t + self.constant
    }

    fn alive_at(&self, t: f64) -> bool {
        self.birth_time <= t && self.death_time.is_none_or(|d| t < d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockTrack {
    pub birth: (f64, f64),
    pub death: Option<(f64, f64)>,
    pub speed: f64,
    pub left_slope: f64,
    pub right_slope: f64,
}

impl ShockTrack {
    pub fn position(&self, t: f64) -> f64 {
        self.birth.1 + self.speed * (t - self.birth.0)
    }

    pub fn alive_at(&self, t: f64) -> bool {
        self.birth.0 <= t && self.death.is_none_or(|d| t < d.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub time: f64,
    pub x: f64,
    /// Shocks killed at the event, left to right.
    pub merged: Vec<usize>,
    /// Shocks of the fan spawned at the event, left to right.
    pub spawned: Vec<usize>,
}

/// A pending meeting of a run of adjacent shocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingEvent {
    pub time: f64,
    pub x: f64,
    pub shocks: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

type QueueEntry = Reverse<(Key, Key, usize, usize)>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontTrace {
    pub pieces: Vec<Piece>,
    pub shocks: Vec<ShockTrack>,
    pub events: Vec<CollisionEvent>,
    pub horizon: f64,
    /// Largest number of simultaneously alive shocks seen so far.
    pub max_alive_shocks: usize,
    hamiltonian: PLFunction,
    initial: PLFunction,
    #[serde(skip)]
    work: Work,
}

#[derive(Debug, Clone, Default)]
struct Work {
    /// Current piece on each side of each shock.
    left_piece: Vec<usize>,
    right_piece: Vec<usize>,
    alive_shocks: usize,
    queue: BinaryHeap<QueueEntry>,
    t_now: f64,
}

fn meeting(a: &ShockTrack, b: &ShockTrack) -> Option<(f64, f64)> {
    let sep = SPEED_SEP * a.speed.abs().max(b.speed.abs()).max(1.0);
    if a.speed <= b.speed + sep {
        return None;
    }
    let alpha_a = a.birth.1 - a.speed * a.birth.0;
    let alpha_b = b.birth.1 - b.speed * b.birth.0;
    let t = (alpha_b - alpha_a) / (a.speed - b.speed);
    // take x from whichever line is anchored closer in time
    let x = if (t - a.birth.0).abs() <= (t - b.birth.0).abs() {
        a.position(t)
    } else {
        b.position(t)
    };
    Some((t, x))
}

fn close(p: (f64, f64), q: (f64, f64)) -> bool {
    let scale = 1.0f64.max(p.0.abs()).max(p.1.abs());
    (p.0 - q.0).abs() <= GROUP_TOL * scale && (p.1 - q.1).abs() <= GROUP_TOL * scale
}

impl FrontTrace {
    /// State at `t = 0+`: one fan per kink of `v`.
    pub fn init(v: &PLFunction, h: &PLFunction) -> FrontTrace {
        let v = v.normalized();
        let mut tr = FrontTrace {
            pieces: Vec::new(),
            shocks: Vec::new(),
            events: Vec::new(),
            horizon: f64::INFINITY,
            max_alive_shocks: 0,
            hamiltonian: h.clone(),
            initial: v.clone(),
            work: Work::default(),
        };
        let slopes = v.slopes();
        let intercept = |k: usize| -> f64 {
            // piece k of v is active left of breakpoint k (or right of the last one)
            let bps = v.breakpoints();
            let j = k.min(bps.len() - 1);
            v.values()[j] - slopes[k] * bps[j]
        };
        let mut current = tr.push_piece(slopes[0], intercept(0), 0.0, None);
        for (k, &x) in v.breakpoints().iter().enumerate() {
            if slopes[k] == slopes[k + 1] {
                continue;
            }
            let u = v.values()[k];
            let (spawned, last) = tr.spawn_fan(current, slopes[k], slopes[k + 1], 0.0, x, u);
            let _ = spawned;
            // the outer right piece of the fan carries v's own constant exactly
            tr.pieces[last].constant = intercept(k + 1);
            current = last;
        }
        tr.work.alive_shocks = tr.shocks.len();
        tr.max_alive_shocks = tr.shocks.len();
        for id in 0..tr.shocks.len() {
            tr.push_pair(id);
        }
        tr
    }

    pub fn hamiltonian(&self) -> &PLFunction {
        &self.hamiltonian
    }

    pub fn initial(&self) -> &PLFunction {
        &self.initial
    }

    fn push_piece(&mut self, slope: f64, constant: f64, t: f64, left: Option<usize>) -> usize {
        self.pieces.push(Piece {
            slope,
            constant,
            birth_time: t,
            death_time: None,
            left_shock: left,
            right_shock: None,
        });
        self.pieces.len() - 1
    }

    /// Appends the fan `p_minus -> p_plus` at `(t, x)` to the right of piece
    /// `left`. Returns the new shock ids and the outermost right piece.
    fn spawn_fan(
        &mut self,
        left: usize,
        p_minus: f64,
        p_plus: f64,
        t: f64,
        x: f64,
        u: f64,
    ) -> (Vec<usize>, usize) {
        let fan = solve_fan(p_minus, p_plus, &self.hamiltonian, (t, x));
        let mut spawned = Vec::with_capacity(fan.speeds.len());
        let mut current = left;
        for (i, &speed) in fan.speeds.iter().enumerate() {
            let id = self.shocks.len();
            self.shocks.push(ShockTrack {
                birth: (t, x),
                death: None,
                speed,
                left_slope: fan.slopes[i],
                right_slope: fan.slopes[i + 1],
            });
            self.pieces[current].right_shock = Some(id);
            let q = fan.slopes[i + 1];
            let c = u - q * x + self.hamiltonian.eval(q) * t;
            let next = self.push_piece(q, c, t, Some(id));
            self.work.left_piece.push(current);
            self.work.right_piece.push(next);
            spawned.push(id);
            current = next;
        }
        (spawned, current)
    }

    fn next_shock(&self, id: usize) -> Option<usize> {
        self.pieces[self.work.right_piece[id]].right_shock
    }

    fn prev_shock(&self, id: usize) -> Option<usize> {
        self.pieces[self.work.left_piece[id]].left_shock
    }

    fn push_pair(&mut self, left: usize) {
        if let Some(right) = self.next_shock(left) {
            if let Some((t, x)) = meeting(&self.shocks[left], &self.shocks[right]) {
                self.work
                    .queue
                    .push(Reverse((Key(t), Key(x), left, right)));
            }
        }
    }

    fn pair_valid(&self, a: usize, b: usize) -> bool {
        a < self.shocks.len()
            && b < self.shocks.len()
            && self.shocks[a].death.is_none()
            && self.shocks[b].death.is_none()
            && self.next_shock(a) == Some(b)
    }

    /// Earliest meeting of adjacent alive shocks at or after `t_now`, with all
    /// shocks passing through the same point grouped together.
    pub fn next_event(&mut self, t_now: f64) -> Option<PendingEvent> {
        loop {
            let &Reverse((Key(t), Key(x), a, b)) = self.work.queue.peek()?;
            if !self.pair_valid(a, b) || t < t_now - GROUP_TOL * t_now.abs().max(1.0) {
                self.work.queue.pop();
                continue;
            }
            let mut run = vec![a, b];
            let mut first = a;
            while let Some(p) = self.prev_shock(first) {
                match meeting(&self.shocks[p], &self.shocks[first]) {
                    Some(m) if close(m, (t, x)) => {
                        run.insert(0, p);
                        first = p;
                    }
                    _ => break,
                }
            }
            let mut last = b;
            while let Some(n) = self.next_shock(last) {
                match meeting(&self.shocks[last], &self.shocks[n]) {
                    Some(m) if close(m, (t, x)) => {
                        run.push(n);
                        last = n;
                    }
                    _ => break,
                }
            }
            return Some(PendingEvent {
                time: t.max(t_now),
                x,
                shocks: run,
            });
        }
    }

    /// Kills the shocks of `event` and spawns the fan of the merged jump.
    pub fn resolve_collision(&mut self, event: &PendingEvent) -> Result<()> {
        let ids = &event.shocks;
        if ids.len() < 2 {
            return Err(Error::StaleEvent(ids.first().copied().unwrap_or(usize::MAX)));
        }
        for w in ids.windows(2) {
            if !self.pair_valid(w[0], w[1]) {
                return Err(Error::StaleEvent(w[0]));
            }
        }
        let (t, x) = (event.time, event.x);
        let first = ids[0];
        let last = *ids.last().unwrap();
        let outer_left = self.work.left_piece[first];
        let outer_right = self.work.right_piece[last];
        let h = self.hamiltonian.clone();
        let u = self.pieces[outer_left].value(&h, t, x);
        let p_minus = self.pieces[outer_left].slope;
        let p_plus = self.pieces[outer_right].slope;
        let left_boundary = self.pieces[outer_left].left_shock;
        let right_boundary = self.pieces[outer_right].right_shock;

        for &id in ids {
            self.shocks[id].death = Some((t, x));
            let lp = self.work.left_piece[id];
            self.pieces[lp].death_time = Some(t);
        }
        self.pieces[outer_right].death_time = Some(t);

        let c = u - p_minus * x + h.eval(p_minus) * t;
        let new_left = self.push_piece(p_minus, c, t, left_boundary);
        if let Some(lb) = left_boundary {
            self.work.right_piece[lb] = new_left;
        }
        let (spawned, new_right) = self.spawn_fan(new_left, p_minus, p_plus, t, x, u);
        self.pieces[new_right].right_shock = right_boundary;
        if let Some(rb) = right_boundary {
            self.work.left_piece[rb] = new_right;
        }

        self.work.alive_shocks = self.work.alive_shocks + spawned.len() - ids.len();
        self.max_alive_shocks = self.max_alive_shocks.max(self.work.alive_shocks);
        self.work.t_now = t;
        if let Some(lb) = left_boundary {
            self.push_pair(lb);
        }
        for &id in &spawned {
            self.push_pair(id);
        }
        self.events.push(CollisionEvent {
            time: t,
            x,
            merged: ids.clone(),
            spawned,
        });
        Ok(())
    }

    /// Exact solution on `[0, horizon]`.
    pub fn evolve(v: &PLFunction, h: &PLFunction, horizon: f64) -> Result<FrontTrace> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        let mut tr = FrontTrace::init(v, h);
        tr.horizon = horizon;
        let budget = 10 * (tr.initial.kinks().len() * h.breakpoints().len() + 100);
        let mut count = 0usize;
        while let Some(ev) = tr.next_event(tr.work.t_now) {
            if ev.time > horizon {
                break;
            }
            count += 1;
            if count > budget {
                return Err(Error::CollisionBudget(budget));
            }
            tr.resolve_collision(&ev)?;
        }
        Ok(tr)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Alive pieces at time `t`, left to right.
    pub fn pieces_at(&self, t: f64) -> Vec<usize> {
        let pos = |s: Option<usize>| s.map_or(f64::NEG_INFINITY, |id| self.shocks[id].position(t));
        let speed = |s: Option<usize>| s.map_or(f64::NEG_INFINITY, |id| self.shocks[id].speed);
        let mut ids: Vec<usize> = (0..self.pieces.len())
            .filter(|&i| self.pieces[i].alive_at(t))
            .collect();
        ids.sort_by(|&a, &b| {
            let (pa, pb) = (&self.pieces[a], &self.pieces[b]);
            pos(pa.left_shock)
                .total_cmp(&pos(pb.left_shock))
                .then(speed(pa.left_shock).total_cmp(&speed(pb.left_shock)))
                .then(a.cmp(&b))
        });
        ids
    }

    /// Alive shocks at time `t`, left to right.
    pub fn shocks_at(&self, t: f64) -> Vec<usize> {
        self.pieces_at(t)
            .iter()
            .filter_map(|&p| self.pieces[p].right_shock)
            .collect()
    }

    fn locate(&self, order: &[usize], t: f64, x: f64) -> (usize, Option<usize>) {
        // number of pieces whose left boundary is strictly left of x
        let k = order.partition_point(|&p| {
            self.pieces[p]
                .left_shock
                .is_none_or(|s| self.shocks[s].position(t) < x)
        });
        let piece = order[k.max(1) - 1];
        let on_shock = order.get(k).and_then(|&p| {
            let s = self.pieces[p].left_shock?;
            let xs = self.shocks[s].position(t);
            ((xs - x).abs() <= 1e-12 * x.abs().max(1.0)).then_some(p)
        });
        (piece, on_shock)
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        self.check_time(t)?;
        let order = self.pieces_at(t);
        let (p, _) = self.locate(&order, t, x);
        Ok(self.pieces[p].value(&self.hamiltonian, t, x))
    }

    /// Clarke derivative in `x`; on a shock this is the jump interval.
    pub fn slope(&self, t: f64, x: f64) -> Result<SlopeInterval> {
        self.check_time(t)?;
        let order = self.pieces_at(t);
        let (p, right) = self.locate(&order, t, x);
        let a = self.pieces[p].slope;
        Ok(match right {
            Some(q) => {
                // walk across zero-width pieces sitting on the same point
                let mut hi = self.pieces[q].slope;
                let mut lo = a.min(hi);
                let mut top = a.max(hi);
                let k = order.iter().position(|&i| i == q).unwrap();
                for &r in &order[k + 1..] {
                    let s = self.pieces[r].left_shock.unwrap();
                    if (self.shocks[s].position(t) - x).abs() > 1e-12 * x.abs().max(1.0) {
                        break;
                    }
                    hi = self.pieces[r].slope;
                    lo = lo.min(hi);
                    top = top.max(hi);
                }
                SlopeInterval::new(lo, top)
            }
            None => SlopeInterval::point(a),
        })
    }

    /// Profile `u(t, .)` as a PL function.
    pub fn profile_at(&self, t: f64) -> Result<PLFunction> {
        self.check_time(t)?;
        let h = &self.hamiltonian;
        let order = self.pieces_at(t);
        let mut lines: Vec<(f64, f64)> = Vec::with_capacity(order.len());
        let mut breaks: Vec<f64> = Vec::with_capacity(order.len());
        for &p in &order {
            let pc = &self.pieces[p];
            let line = (pc.slope, pc.constant - h.eval(pc.slope) * t);
            match pc.left_shock {
                None => lines.push(line),
                Some(s) => {
                    let x = self.shocks[s].position(t);
                    let last = breaks.last().copied().unwrap_or(f64::NEG_INFINITY);
                    if x <= last + 1e-12 * x.abs().max(1.0) {
                        // zero-width piece: the later line takes over
                        *lines.last_mut().unwrap() = line;
                    } else {
                        breaks.push(x);
                        lines.push(line);
                    }
                }
            }
        }
        if breaks.is_empty() {
            let (p, c) = lines[0];
            return Ok(PLFunction::affine(p, 0.0, c));
        }
        PLFunction::from_lines(&lines, &breaks)
    }

    /// Checks ordering, slope matching, the slope alphabet, entropy and
    /// continuity at time `t`. Returns a description of the first violation.
    pub fn check_invariants(&self, t: f64) -> std::result::Result<(), String> {
        let h = &self.hamiltonian;
        let order = self.pieces_at(t);
        let alphabet: Vec<f64> = self
            .initial
            .slopes()
            .iter()
            .chain(h.breakpoints())
            .copied()
            .collect();
        let mut prev_x = f64::NEG_INFINITY;
        for (k, &p) in order.iter().enumerate() {
            let pc = &self.pieces[p];
            if !alphabet.contains(&pc.slope) {
                return Err(format!("piece {p} slope {} not in alphabet", pc.slope));
            }
            if k == 0 {
                if pc.left_shock.is_some() {
                    return Err("leftmost piece has a left shock".into());
                }
                continue;
            }
            let s = pc.left_shock.ok_or("interior piece without left shock")?;
            let sh = &self.shocks[s];
            let left = &self.pieces[order[k - 1]];
            if left.right_shock != Some(s) {
                return Err(format!("shock {s} not shared by adjacent pieces"));
            }
            if sh.left_slope != left.slope || sh.right_slope != pc.slope {
                return Err(format!("shock {s} slopes do not match its pieces"));
            }
            let x = sh.position(t);
            if x <= prev_x && t > sh.birth.0 {
                return Err(format!("shock {s} out of order at t = {t}"));
            }
            prev_x = x;
            match entropy_ok(sh.left_slope, sh.right_slope, h, false) {
                Ok(true) => {}
                _ => return Err(format!("shock {s} violates the entropy condition")),
            }
            let (ul, ur) = (left.value(h, t, x), pc.value(h, t, x));
            if (ul - ur).abs() > 1e-9 * ul.abs().max(1.0) {
                return Err(format!("jump in u across shock {s}: {ul} vs {ur}"));
            }
        }
        if order.last().is_none_or(|&p| self.pieces[p].right_shock.is_some()) {
            return Err("rightmost piece has a right shock".into());
        }
        Ok(())
    }

    /// Event times, ascending and deduplicated.
    pub fn event_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.events.iter().map(|e| e.time).collect();
        ts.dedup();
        ts
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plfun::{conjugate, pl_approx};
    use proptest::prelude::*;

    fn pl(points: &[(f64, f64)], l: f64, r: f64) -> PLFunction {
        PLFunction::new(
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
            l,
            r,
        )
        .unwrap()
    }

    fn half_square() -> PLFunction {
        pl(&[(-1.0, 0.5), (0.0, 0.0), (1.0, 0.5)], -0.5, 0.5)
    }

    fn w_hamiltonian() -> PLFunction {
        pl(
            &[(-2.0, 2.0), (-1.0, 0.5), (0.0, 0.0), (1.0, 0.5), (2.0, 2.0)],
            -1.5,
            1.5,
        )
    }

    /// min over x0 of v(x0) + t H*((x - x0) / t) over a dense grid plus the
    /// points where either term has a kink.
    fn hopf_lax_oracle(v: &PLFunction, h: &PLFunction, t: f64, x: f64) -> f64 {
        let hs = conjugate(h).unwrap();
        let (qa, qb) = hs.domain();
        let mut cands: Vec<f64> = v.breakpoints().to_vec();
        cands.extend(hs.breakpoints().iter().map(|q| x - t * q));
        let (lo, hi) = (x - t * qb, x - t * qa);
        cands.extend((0..=2000).map(|i| lo + (hi - lo) * i as f64 / 2000.0));
        cands
            .into_iter()
            .filter(|&x0| x0 >= lo && x0 <= hi)
            .map(|x0| {
                let q = ((x - x0) / t).clamp(qa, qb);
                v.eval(x0) + t * hs.eval(q)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// max over y of x y - v*(y) - t H(y).
    fn hopf_oracle(v: &PLFunction, h: &PLFunction, t: f64, x: f64) -> f64 {
        let vs = conjugate(v).unwrap();
        let (a, b) = vs.domain();
        let mut ys: Vec<f64> = vs.breakpoints().to_vec();
        ys.extend(h.breakpoints().iter().copied().filter(|&y| y >= a && y <= b));
        ys.extend((0..=2000).map(|i| a + (b - a) * i as f64 / 2000.0));
        ys.into_iter()
            .map(|y| x * y - vs.eval(y) - t * h.eval(y))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn standing_shock() {
        let v = pl(&[(0.0, 0.0)], 1.0, -1.0);
        let tr = FrontTrace::evolve(&v, &half_square(), 2.0).unwrap();
        assert_eq!(tr.shocks.len(), 1);
        assert_eq!(tr.shocks[0].speed, 0.0);
        assert_eq!(tr.eval(1.0, 0.0).unwrap(), -0.5);
        for &x in &[-3.0, -0.2, 0.7, 5.0] {
            assert!((tr.eval(1.5, x).unwrap() - (-f64::abs(x) - 0.75)).abs() < 1e-15);
        }
        assert_eq!(tr.slope(1.0, 0.0).unwrap(), SlopeInterval::new(-1.0, 1.0));
        assert_eq!(tr.slope(1.0, 0.3).unwrap(), SlopeInterval::point(-1.0));
        assert!(matches!(tr.eval(3.0, 0.0), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn affine_data_has_no_shocks() {
        let v = PLFunction::affine(0.7, 1.0, 2.0);
        let tr = FrontTrace::evolve(&v, &w_hamiltonian(), 1.0).unwrap();
        assert!(tr.shocks.is_empty());
        assert_eq!(tr.pieces.len(), 1);
        let u = tr.profile_at(1.0).unwrap();
        assert!(u.approx_eq(&PLFunction::affine(0.7, 1.0, 2.0 - w_hamiltonian().eval(0.7)), 1e-14));
    }

    #[test]
    fn convex_kink_spawns_two_shocks() {
        let v = pl(&[(0.0, 0.0)], -1.0, 1.0);
        let h = pl(&[(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)], -1.0, 1.0);
        let tr = FrontTrace::init(&v, &h);
        let speeds: Vec<f64> = tr.shocks.iter().map(|s| s.speed).collect();
        assert_eq!(speeds, vec![-1.0, 1.0]);
        assert_eq!(tr.shocks[0].right_slope, 0.0);
    }

    #[test]
    fn worked_collision_example() {
        let v = pl(&[(0.0, 0.0), (1.0, -1.0)], 2.0, 2.0);
        let h = w_hamiltonian();
        let tr = FrontTrace::evolve(&v, &h, 2.0).unwrap();
        let born: Vec<(f64, f64)> = tr.shocks[..4].iter().map(|s| (s.birth.1, s.speed)).collect();
        assert_eq!(born, vec![(0.0, 0.5), (1.0, -0.5), (1.0, 0.5), (1.0, 1.5)]);
        let ev = &tr.events[0];
        assert!((ev.time - 1.0).abs() < 1e-14 && (ev.x - 0.5).abs() < 1e-14);
        assert_eq!(ev.merged, vec![0, 1]);
        assert_eq!(ev.spawned.len(), 1);
        assert_eq!(tr.shocks[ev.spawned[0]].speed, 1.0);
        for k in 0..=40 {
            let t = 0.05 * k as f64;
            tr.check_invariants(t).unwrap();
            for j in 0..=30 {
                let x = -2.0 + 0.2 * j as f64;
                if t > 0.0 {
                    let o = hopf_lax_oracle(&v, &h, t, x);
                    assert!((tr.eval(t, x).unwrap() - o).abs() < 1e-9, "t={t} x={x}");
                }
            }
        }
    }

    #[test]
    fn merged_shock_of_opposite_jumps() {
        // slopes (1, 0, -1): shocks (1,0) and (0,-1) meet and merge into (1,-1)
        let v = pl(&[(-1.0, -1.0), (1.0, -1.0)], 1.0, -1.0);
        let tr = FrontTrace::evolve(&v, &half_square(), 4.0).unwrap();
        assert_eq!(tr.events.len(), 1);
        let ev = &tr.events[0];
        assert!((ev.time - 2.0).abs() < 1e-14 && ev.x.abs() < 1e-14);
        let s = &tr.shocks[ev.spawned[0]];
        assert_eq!((s.left_slope, s.right_slope, s.speed), (1.0, -1.0, 0.0));
    }

    #[test]
    fn collision_spawning_a_fan() {
        let h = pl(&[(0.0, 0.0), (0.5, 0.2), (1.0, 1.0), (2.0, 0.0)], -1.0, -1.0);
        let v = pl(&[(0.0, 0.0), (1.0, 2.0)], 0.0, 1.0);
        let tr = FrontTrace::evolve(&v, &h, 3.0).unwrap();
        assert_eq!(tr.events.len(), 1);
        let ev = &tr.events[0];
        assert!((ev.time - 1.0).abs() < 1e-14 && ev.x.abs() < 1e-14);
        let speeds: Vec<f64> = ev.spawned.iter().map(|&i| tr.shocks[i].speed).collect();
        assert_eq!(speeds.len(), 2);
        assert!((speeds[0] - 0.4).abs() < 1e-14 && (speeds[1] - 1.6).abs() < 1e-14);
        for k in 0..=30 {
            tr.check_invariants(0.1 * k as f64).unwrap();
        }
    }

    #[test]
    fn grouped_triple_collision() {
        // H concave on [-1, 2]: every jump of v is a single shock
        let h = pl(&[(-1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 0.0)], 1.0, -1.0);
        // x = -1 + t, x = 0 and x = 1 - t meet at (1, 0)
        let v = pl(&[(-1.0, 1.0), (0.0, 1.0), (1.0, 2.0)], -1.0, 2.0);
        let mut tr = FrontTrace::init(&v, &h);
        let speeds: Vec<f64> = tr.shocks.iter().map(|s| s.speed).collect();
        assert_eq!(speeds, vec![1.0, 0.0, -1.0]);
        let ev = tr.next_event(0.0).unwrap();
        assert_eq!(ev.shocks, vec![0, 1, 2]);
        assert!((ev.time - 1.0).abs() < 1e-14 && ev.x.abs() < 1e-14);
        tr.resolve_collision(&ev).unwrap();
        assert!(matches!(tr.resolve_collision(&ev), Err(Error::StaleEvent(_))));
        assert!(tr.next_event(1.0).is_none());
    }

    #[test]
    fn parallel_shocks_never_meet() {
        let a = ShockTrack { birth: (0.0, 0.0), death: None, speed: 0.5, left_slope: 0.0, right_slope: 1.0 };
        let b = ShockTrack { birth: (0.0, 1.0), ..a.clone() };
        assert!(meeting(&a, &b).is_none());
        let c = ShockTrack { birth: (0.0, 1.0), speed: -0.5, ..a.clone() };
        let (t, x) = meeting(&a, &c).unwrap();
        assert!((t - 1.0).abs() < 1e-15 && (x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn initial_profile_is_reproduced() {
        let v = pl(&[(-2.0, 1.0), (-0.5, -0.5), (0.3, 0.9), (2.0, 0.1)], 1.3, -0.4);
        let h = pl_approx(|p| p.powi(4) - p * p, 40, -2.0, 2.0).unwrap();
        let tr = FrontTrace::evolve(&v, &h, 1.0).unwrap();
        for k in 0..1000 {
            let x = -5.0 + 10.0 * (k as f64 * 0.6180339887).fract();
            assert!((tr.eval(0.0, x).unwrap() - v.eval(x)).abs() <= 1e-14 * v.eval(x).abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn trace_serializes() {
        let v = pl(&[(0.0, 0.0)], 1.0, -1.0);
        let tr = FrontTrace::evolve(&v, &half_square(), 1.0).unwrap();
        let j = tr.to_json();
        assert!(j["pieces"].is_array() && j["shocks"].is_array() && j["events"].is_array());
        let back: FrontTrace = serde_json::from_value(j).unwrap();
        assert_eq!(back.shocks, tr.shocks);
    }

    prop_compose! {
        fn any_pl(max: usize, slope: f64)(pts in proptest::collection::vec((0.1f64..1.5, -slope..slope), 1..max), x0 in -2.0f64..0.0, l in -slope..slope, r in -slope..slope) -> PLFunction {
            let mut x = x0;
            let mut y = 0.0;
            let mut xs = vec![];
            let mut ys = vec![];
            for &(dx, s) in &pts {
                x += dx;
                y += s * dx;
                xs.push(x);
                ys.push(y);
            }
            PLFunction::new(xs, ys, l, r).unwrap()
        }
    }

    prop_compose! {
        fn convex_pl(max: usize)(incs in proptest::collection::vec((0.1f64..1.0, 0.05f64..1.0), 1..max), s0 in -2.0f64..0.0) -> PLFunction {
            let mut xs = vec![-1.0];
            let mut ys = vec![0.0];
            let mut s = s0;
            for &(dx, ds) in &incs {
                s += ds;
                let x = xs.last().unwrap() + dx;
                ys.push(ys.last().unwrap() + s * dx);
                xs.push(x);
            }
            PLFunction::new(xs, ys, s0 - 0.5, s + 0.5).unwrap()
        }
    }

    fn sample_points() -> Vec<(f64, f64)> {
        (1..=12)
            .flat_map(|i| (0..=24).map(move |j| (0.25 * i as f64, -4.0 + j as f64 / 3.0)))
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn invariants_hold(v in any_pl(6, 2.0), h in any_pl(7, 2.0)) {
            let tr = FrontTrace::evolve(&v, &h, 3.0).unwrap();
            let mut times: Vec<f64> = (0..=30).map(|k| 0.1 * k as f64).collect();
            times.extend(tr.event_times().iter().filter(|&&t| t <= 3.0));
            for &t in &times {
                if let Err(e) = tr.check_invariants(t) {
                    prop_assert!(false, "t = {t}: {e}");
                }
            }
            // Lipschitz non-increase and time-Lipschitz
            let lip = v.lipschitz();
            let hmax = h.max_abs_on(-lip, lip);
            for k in 0..=30 {
                let t = 0.1 * k as f64;
                let u = tr.profile_at(t).unwrap();
                prop_assert!(u.lipschitz() <= lip + 1e-12);
            }
            for (t, x) in sample_points().into_iter().filter(|p| p.0 <= 3.0) {
                let a = tr.eval(t, x).unwrap();
                let b = tr.eval(t * 0.5, x).unwrap();
                prop_assert!((a - b).abs() <= 0.5 * t * hmax + 1e-9);
            }
        }

        #[test]
        fn hopf_lax_for_convex_h(v in any_pl(6, 2.0), h in convex_pl(6)) {
            let tr = FrontTrace::evolve(&v, &h, 3.0).unwrap();
            for (t, x) in sample_points() {
                let o = hopf_lax_oracle(&v, &h, t, x);
                prop_assert!((tr.eval(t, x).unwrap() - o).abs() < 1e-9, "t={} x={} {} vs {}", t, x, tr.eval(t, x).unwrap(), o);
            }
        }

        #[test]
        fn hopf_for_convex_v(v in convex_pl(6), h in any_pl(7, 2.0)) {
            let tr = FrontTrace::evolve(&v, &h, 3.0).unwrap();
            for (t, x) in sample_points() {
                let o = hopf_oracle(&v, &h, t, x);
                prop_assert!((tr.eval(t, x).unwrap() - o).abs() < 1e-9, "t={} x={} {} vs {}", t, x, tr.eval(t, x).unwrap(), o);
            }
        }

        #[test]
        fn semigroup(v in any_pl(6, 2.0), h in any_pl(7, 2.0), t1 in 0.1f64..1.5, t2 in 0.1f64..1.5) {
            let whole = FrontTrace::evolve(&v, &h, t1 + t2).unwrap().profile_at(t1 + t2).unwrap();
            let mid = FrontTrace::evolve(&v, &h, t1).unwrap().profile_at(t1).unwrap();
            let split = FrontTrace::evolve(&mid, &h, t2).unwrap().profile_at(t2).unwrap();
            prop_assert!(whole.sup_distance(&split) < 1e-9, "{}", whole.sup_distance(&split));
        }
    }
}
