//! Two-parameter bifurcation sets: saddle-node and border-collision curves
//! by pseudo-arclength continuation, tongue-sequence classification along
//! transects, and one-parameter bifurcation diagrams.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalParams;
use crate::error::{Error, Result};
use crate::lift::{reduce, GapDescriptor, Lift, SingularSide};
use crate::roots;
use crate::sts::StsParams;

/// A two-parameter family of lifts.
pub trait MapFamily: Sync {
    fn lift(&self, params: [f64; 2]) -> Result<Lift>;
    fn param_names(&self) -> [&'static str; 2];
}

/// The sinusoidal threshold system in the `(β, α)` plane at fixed `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StsFamily {
    pub gamma: f64,
}

impl MapFamily for StsFamily {
    fn lift(&self, params: [f64; 2]) -> Result<Lift> {
        Ok(StsParams::new(params[1], params[0], self.gamma)?.lift())
    }
    fn param_names(&self) -> [&'static str; 2] {
        ["beta", "alpha"]
    }
}

/// The canonical family `F_n` in the `(a, c)` plane at fixed `n, b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalFamily {
    pub n: u32,
    pub b: f64,
}

impl MapFamily for CanonicalFamily {
    fn lift(&self, params: [f64; 2]) -> Result<Lift> {
        Ok(CanonicalParams::new(self.n, params[0], self.b, params[1])?.lift())
    }
    fn param_names(&self) -> [&'static str; 2] {
        ["a", "c"]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    #[serde(rename = "SN")]
    SaddleNode,
    /// Collision with the gap endpoint of infinite derivative.
    #[serde(rename = "BC_I")]
    BorderTypeI,
    /// Collision with the finite-derivative endpoint.
    #[serde(rename = "BC_II")]
    BorderTypeII,
}

impl CurveKind {
    pub fn label(&self) -> &'static str {
        match self {
            CurveKind::SaddleNode => "SN",
            CurveKind::BorderTypeI => "BC_I",
            CurveKind::BorderTypeII => "BC_II",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TonguePoint {
    pub params: [f64; 2],
    /// Orbit point; for border collisions the gap position.
    pub x: f64,
    pub p: i64,
    pub q: u32,
    pub kind: CurveKind,
}

/// Rectangle in the parameter plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Window {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Window { lo, hi }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi[i])
    }
}

/// Why one branch of a traced curve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceEnd {
    WindowExit,
    /// Step size fell below the floor; the curve ends (for example where a
    /// saddle-node curve runs into a border collision).
    StepCollapse,
    MaxPoints,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveTrace {
    pub points: Vec<TonguePoint>,
    /// End reasons for the backward and forward branches from the seed.
    pub ends: [TraceEnd; 2],
}

/// Continuation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_points: usize,
    pub tol: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions { ds0: 1e-3, ds_min: 1e-6, ds_max: 1e-2, max_points: 20_000, tol: 1e-11 }
    }
}

const FD_STEP: f64 = 1e-7;

/// Forward-difference Jacobian of `f` at `u`, with `f(u)` given.
fn jacobian<F>(f: &F, u: &[f64], f0: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let m = f0.len();
    let n = u.len();
    let mut j = DMatrix::zeros(m, n);
    for k in 0..n {
        let h = FD_STEP * u[k].abs().max(1.0);
        let mut up = u.to_vec();
        let mut um = u.to_vec();
        up[k] += h;
        um[k] -= h;
        let fp = f(&up)?;
        let fm = f(&um)?;
        for i in 0..m {
            j[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(j)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Minimum-norm Newton iteration onto the solution curve.
fn newton_onto_curve<F>(f: &F, u0: &[f64], tol: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut u = u0.to_vec();
    for _ in 0..30 {
        let r = f(&u)?;
        if inf_norm(&r) < tol {
            return Ok(u);
        }
        let j = jacobian(f, &u, &r)?;
        let jjt = &j * j.transpose();
        let Some(inv) = jjt.try_inverse() else {
            return Err(Error::SeedFailure("singular Jacobian at seed".into()));
        };
        let d = j.transpose() * (inv * DVector::from_vec(r));
        for k in 0..u.len() {
            u[k] -= d[k];
        }
    }
    Err(Error::SeedFailure("Newton did not converge from the seed".into()))
}

/// Unit null vector of the `m × (m+1)` matrix `j`, oriented along `prev`
/// when given.
fn tangent(j: &DMatrix<f64>, prev: Option<&DVector<f64>>) -> Option<DVector<f64>> {
    let n = j.ncols();
    let mut best: Option<DVector<f64>> = None;
    let rows: Vec<DVector<f64>> = match prev {
        Some(p) => vec![p.clone()],
        None => (0..n)
            .map(|k| {
                let mut e = DVector::zeros(n);
                e[k] = 1.0;
                e
            })
            .collect(),
    };
    let mut best_cond = 0.0;
    for r in rows {
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (n - 1, n)).copy_from(j);
        a.row_mut(n - 1).copy_from(&r.transpose());
        let mut rhs = DVector::zeros(n);
        rhs[n - 1] = 1.0;
        if let Some(v) = a.lu().solve(&rhs) {
            let nv = v.norm();
            if nv.is_finite() && nv > 0.0 {
                let cond = 1.0 / nv;
                if prev.is_some() || cond > best_cond {
                    best_cond = cond;
                    best = Some(v / nv);
                }
            }
        }
    }
    best
}

/// Pseudo-arclength continuation of `f(u) = 0`, `u` one longer than `f`.
/// The first two entries of `u` are the parameters.
fn palc<F>(f: &F, seed: &[f64], window: &Window, opts: &ContinuationOptions) -> Result<(Vec<Vec<f64>>, [TraceEnd; 2])>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let u0 = newton_onto_curve(f, seed, opts.tol)?;
    if !window.contains([u0[0], u0[1]]) {
        return Err(Error::SeedFailure("seed converged outside the window".into()));
    }
    let r0 = f(&u0)?;
    let j0 = jacobian(f, &u0, &r0)?;
    let t0 = tangent(&j0, None).ok_or_else(|| Error::SeedFailure("no tangent at seed".into()))?;
    let mut branches = Vec::new();
    let mut ends = [TraceEnd::MaxPoints; 2];
    for (bi, sign) in [-1.0, 1.0].into_iter().enumerate() {
        let mut pts = Vec::new();
        let mut u = DVector::from_vec(u0.clone());
        let mut t = &t0 * sign;
        let mut ds = opts.ds0;
        let mut successes = 0;
        let end = loop {
            if pts.len() >= opts.max_points / 2 {
                break TraceEnd::MaxPoints;
            }
            let pred = &u + &t * ds;
            match corrector(f, &pred, &t, opts.tol) {
                Some(un) if (&un - &u).norm() < 2.5 * ds => {
                    if !window.contains([un[0], un[1]]) {
                        break TraceEnd::WindowExit;
                    }
                    let rn = f(un.as_slice()).ok();
                    let jn = rn.and_then(|r| jacobian(f, un.as_slice(), &r).ok());
                    let Some(tn) = jn.and_then(|j| tangent(&j, Some(&t))) else {
                        break TraceEnd::StepCollapse;
                    };
                    let tn = if tn.dot(&t) < 0.0 { -tn } else { tn };
                    u = un;
                    t = tn;
                    pts.push(u.as_slice().to_vec());
                    successes += 1;
                    if successes >= 3 {
                        ds = (ds * 2.0).min(opts.ds_max);
                        successes = 0;
                    }
                }
                _ => {
                    ds *= 0.5;
                    successes = 0;
                    if ds < opts.ds_min {
                        break TraceEnd::StepCollapse;
                    }
                }
            }
        };
        ends[bi] = end;
        branches.push(pts);
    }
    let mut out: Vec<Vec<f64>> = branches[0].iter().rev().cloned().collect();
    out.push(u0);
    out.extend(branches[1].iter().cloned());
    Ok((out, ends))
}

/// Newton on `f(u) = 0`, `t·(u - pred) = 0`.
fn corrector<F>(f: &F, pred: &DVector<f64>, t: &DVector<f64>, tol: f64) -> Option<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = pred.len();
    let mut u = pred.clone();
    for _ in 0..10 {
        let r = f(u.as_slice()).ok()?;
        let arc = t.dot(&(&u - pred));
        if inf_norm(&r) < tol && arc.abs() < 1e-12 {
            return Some(u);
        }
        let j = jacobian(f, u.as_slice(), &r).ok()?;
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (n - 1, n)).copy_from(&j);
        a.row_mut(n - 1).copy_from(&t.transpose());
        let mut rhs = DVector::from_vec(r);
        rhs = rhs.push(arc);
        let d = a.lu().solve(&rhs)?;
        u -= d;
        if !u.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    let r = f(u.as_slice()).ok()?;
    (inf_norm(&r) < tol).then_some(u)
}

fn sn_residual<M: MapFamily + ?Sized>(family: &M, p: i64, q: u32, u: &[f64]) -> Result<Vec<f64>> {
    let lift = family.lift([u[0], u[1]])?;
    let (y, d) = lift.iterate_with_derivative(u[2], q as u64)?;
    Ok(vec![y - u[2] - p as f64, d - 1.0])
}

/// Saddle-node curve of `(p, q)` orbits: `F^q(x) = x + p`, `(F^q)'(x) = 1`.
/// `seed` is `(params, x)` near the curve.
pub fn trace_sn_curve<M: MapFamily + ?Sized>(
    family: &M,
    p: i64,
    q: u32,
    window: &Window,
    seed: ([f64; 2], f64),
    opts: &ContinuationOptions,
) -> Result<CurveTrace> {
    let f = |u: &[f64]| sn_residual(family, p, q, u);
    let (pts, ends) = palc(&f, &[seed.0[0], seed.0[1], seed.1], window, opts)?;
    let points = pts
        .into_iter()
        .map(|u| TonguePoint { params: [u[0], u[1]], x: reduce(u[2]).0, p, q, kind: CurveKind::SaddleNode })
        .collect();
    Ok(CurveTrace { points, ends })
}

/// Saddle-node point with one parameter fixed; `guess = (free parameter, x)`.
pub fn sn_point_on_line<M: MapFamily + ?Sized>(
    family: &M,
    p: i64,
    q: u32,
    free_index: usize,
    fixed_value: f64,
    guess: (f64, f64),
) -> Result<TonguePoint> {
    let params = |v: f64| {
        let mut pr = [fixed_value; 2];
        pr[free_index] = v;
        pr
    };
    let (mut v, mut x) = guess;
    for _ in 0..50 {
        let r = sn_residual(family, p, q, &[params(v)[0], params(v)[1], x])?;
        if inf_norm(&r) < 1e-13 {
            let pr = params(v);
            return Ok(TonguePoint { params: pr, x: reduce(x).0, p, q, kind: CurveKind::SaddleNode });
        }
        let f = |w: &[f64]| sn_residual(family, p, q, &[params(w[0])[0], params(w[0])[1], w[1]]);
        let j = jacobian(&f, &[v, x], &r)?;
        let d = j
            .lu()
            .solve(&DVector::from_vec(r))
            .ok_or_else(|| Error::ConvergenceFailure("singular saddle-node Jacobian".into()))?;
        v -= d[0];
        x -= d[1];
    }
    Err(Error::ConvergenceFailure("saddle-node point did not converge".into()))
}

/// Which gap endpoint a border collision uses.
fn side_for(kind: CurveKind, gap: &GapDescriptor) -> Result<SingularSide> {
    let s = gap.singular_side;
    match (kind, s) {
        (CurveKind::BorderTypeI, SingularSide::Left | SingularSide::Right) => Ok(s),
        (CurveKind::BorderTypeII, SingularSide::Left) => Ok(SingularSide::Right),
        (CurveKind::BorderTypeII, SingularSide::Right) => Ok(SingularSide::Left),
        (CurveKind::BorderTypeII, SingularSide::None) => Ok(SingularSide::Right),
        _ => Err(Error::NoGap),
    }
}

/// `F^{q-1}(L) - x_gap - p` for the chosen endpoint limit `L` of `gap`.
pub fn bc_residual_for_gap(lift: &Lift, gap: &GapDescriptor, p: i64, q: u32, kind: CurveKind) -> Result<f64> {
    let side = side_for(kind, gap)?;
    let y = lift.iterate(gap.limit(side), q as u64 - 1)?;
    Ok(y - gap.x_gap - p as f64)
}

/// The gap nearest `x_prev` (on the circle), searched locally first.
fn track_gap(lift: &Lift, x_prev: f64) -> Result<GapDescriptor> {
    let near = lift.locate_gaps_in(x_prev - 0.02, x_prev + 0.02, 32);
    let pick = |gs: Vec<GapDescriptor>| {
        gs.into_iter().min_by(|a, b| {
            let da = circ_dist(a.x_gap, x_prev);
            let db = circ_dist(b.x_gap, x_prev);
            da.partial_cmp(&db).unwrap()
        })
    };
    if let Some(g) = pick(near) {
        return Ok(g);
    }
    pick(lift.locate_gaps()).ok_or(Error::NoGap)
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (reduce(a).0 - reduce(b).0).abs();
    d.min(1.0 - d)
}

/// Border-collision residual at `params`, following the gap near `x_prev`.
pub fn bc_residual<M: MapFamily + ?Sized>(
    family: &M,
    params: [f64; 2],
    p: i64,
    q: u32,
    kind: CurveKind,
    x_prev: f64,
) -> Result<(f64, GapDescriptor)> {
    let lift = family.lift(params)?;
    let gap = track_gap(&lift, x_prev)?;
    Ok((bc_residual_for_gap(&lift, &gap, p, q, kind)?, gap))
}

/// Border-collision curve of `(p, q)` orbits at the `kind` endpoint.
pub fn trace_bc_curve<M: MapFamily + ?Sized>(
    family: &M,
    p: i64,
    q: u32,
    kind: CurveKind,
    window: &Window,
    seed: [f64; 2],
    opts: &ContinuationOptions,
) -> Result<CurveTrace> {
    if kind == CurveKind::SaddleNode {
        return Err(Error::InvalidParams("border-collision kind required".into()));
    }
    let lift = family.lift(seed)?;
    let gaps = lift.locate_gaps();
    let g0 = gaps
        .iter()
        .filter_map(|g| bc_residual_for_gap(&lift, g, p, q, kind).ok().map(|r| (r.abs(), *g)))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .ok_or(Error::NoGap)?
        .1;
    let last = Cell::new(g0.x_gap);
    let f = |u: &[f64]| -> Result<Vec<f64>> {
        let (r, g) = bc_residual(family, [u[0], u[1]], p, q, kind, last.get())?;
        last.set(g.x_gap);
        Ok(vec![r])
    };
    let (pts, ends) = palc(&f, &seed, window, opts)?;
    let mut points = Vec::with_capacity(pts.len());
    for u in pts {
        let lift = family.lift([u[0], u[1]])?;
        let g = track_gap(&lift, last.get())?;
        last.set(g.x_gap);
        points.push(TonguePoint { params: [u[0], u[1]], x: g.x_gap, p, q, kind });
    }
    Ok(CurveTrace { points, ends })
}

/// Border-collision point with one parameter fixed, bracketed in the free one.
pub fn bc_point_on_line<M: MapFamily + ?Sized>(
    family: &M,
    p: i64,
    q: u32,
    kind: CurveKind,
    free_index: usize,
    fixed_value: f64,
    bracket: (f64, f64),
) -> Result<TonguePoint> {
    let params = |v: f64| {
        let mut pr = [fixed_value; 2];
        pr[free_index] = v;
        pr
    };
    let lift0 = family.lift(params(bracket.0))?;
    let g0 = lift0.locate_gaps().first().copied().ok_or(Error::NoGap)?;
    let last = Cell::new(g0.x_gap);
    let f = |v: f64| match bc_residual(family, params(v), p, q, kind, last.get()) {
        Ok((r, g)) => {
            last.set(g.x_gap);
            r
        }
        Err(_) => f64::NAN,
    };
    let v = roots::bisect(f, bracket.0, bracket.1, 1e-15)?;
    let (r, g) = bc_residual(family, params(v), p, q, kind, last.get())?;
    if r.abs() > 1e-8 {
        return Err(Error::NotFound { p, q });
    }
    Ok(TonguePoint { params: params(v), x: g.x_gap, p, q, kind })
}

/// Defining residuals of a tongue point, re-evaluated from scratch.
pub fn tongue_residuals<M: MapFamily + ?Sized>(family: &M, pt: &TonguePoint) -> Result<Vec<f64>> {
    match pt.kind {
        CurveKind::SaddleNode => sn_residual(family, pt.p, pt.q, &[pt.params[0], pt.params[1], pt.x]),
        kind => {
            let (r, _) = bc_residual(family, pt.params, pt.p, pt.q, kind, pt.x)?;
            Ok(vec![r])
        }
    }
}

/// Straight path through parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transect {
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub samples: usize,
}

impl Transect {
    pub fn at(&self, s: f64) -> [f64; 2] {
        [
            self.from[0] + s * (self.to[0] - self.from[0]),
            self.from[1] + s * (self.to[1] - self.from[1]),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransectEvent {
    /// Path coordinate in `[0, 1]`.
    pub s: f64,
    pub params: [f64; 2],
    pub kind: CurveKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequenceLabel {
    /// border collision, border collision, saddle-node
    A,
    /// saddle-node, border collision, border collision, saddle-node
    B,
}

/// SN and BC events of `(p, q)` orbits in path order.
pub fn transect_events<M: MapFamily + ?Sized>(family: &M, p: i64, q: u32, transect: &Transect) -> Result<Vec<TransectEvent>> {
    let n = transect.samples.max(10);
    let ss: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let sample = |s: f64| -> Result<(usize, Vec<(f64, f64)>)> {
        let lift = family.lift(transect.at(s))?;
        let count = lift.find_periodic_orbits(p, q)?.len();
        let gaps = lift.locate_gaps();
        let mut rs = Vec::new();
        for g in &gaps {
            let r1 = bc_residual_for_gap(&lift, g, p, q, CurveKind::BorderTypeI).unwrap_or(f64::NAN);
            let r2 = bc_residual_for_gap(&lift, g, p, q, CurveKind::BorderTypeII).unwrap_or(f64::NAN);
            rs.push((r1, r2));
        }
        Ok((count, rs))
    };
    let data: Vec<(usize, Vec<(f64, f64)>)> = ss.par_iter().map(|&s| sample(s)).collect::<Result<_>>()?;
    let mut events = Vec::new();
    for i in 0..n {
        let (c0, r0) = &data[i];
        let (c1, r1) = &data[i + 1];
        let mut bc_here = 0;
        if r0.len() == r1.len() {
            for (g, (a, b)) in r0.iter().zip(r1).enumerate() {
                for (kind, va, vb) in [
                    (CurveKind::BorderTypeI, a.0, b.0),
                    (CurveKind::BorderTypeII, a.1, b.1),
                ] {
                    if va.is_finite() && vb.is_finite() && va.signum() != vb.signum() {
                        if let Some(ev) = refine_bc_event(family, p, q, transect, kind, g, ss[i], ss[i + 1]) {
                            events.push(ev);
                            bc_here += 1;
                        }
                    }
                }
            }
        }
        let dc = (*c1 as i64 - *c0 as i64).abs();
        if dc - bc_here >= 2 {
            let s = 0.5 * (ss[i] + ss[i + 1]);
            for _ in 0..(dc - bc_here) / 2 {
                events.push(TransectEvent { s, params: transect.at(s), kind: CurveKind::SaddleNode });
            }
        }
    }
    events.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap());
    Ok(events)
}

#[allow(clippy::too_many_arguments)]
fn refine_bc_event<M: MapFamily + ?Sized>(
    family: &M,
    p: i64,
    q: u32,
    transect: &Transect,
    kind: CurveKind,
    gap_index: usize,
    s0: f64,
    s1: f64,
) -> Option<TransectEvent> {
    let r = |s: f64| -> f64 {
        let Ok(lift) = family.lift(transect.at(s)) else { return f64::NAN };
        let gaps = lift.locate_gaps();
        gaps.get(gap_index)
            .and_then(|g| bc_residual_for_gap(&lift, g, p, q, kind).ok())
            .unwrap_or(f64::NAN)
    };
    let s = roots::bisect(r, s0, s1, 1e-13).ok()?;
    // A residual that stays large across the bracket is a jump, not a root.
    let v = r(s).abs().min(r(s - 1e-13).abs()).min(r(s + 1e-13).abs());
    (v < 1e-6).then(|| TransectEvent { s, params: transect.at(s), kind })
}

/// Matches the event sequence against the two fundamental templates.
pub fn classify_events(events: &[TransectEvent]) -> Result<SequenceLabel> {
    let is_bc = |e: &TransectEvent| e.kind != CurveKind::SaddleNode;
    let sn = |e: &TransectEvent| e.kind == CurveKind::SaddleNode;
    match events {
        [a, b, c] if is_bc(a) && is_bc(b) && sn(c) => Ok(SequenceLabel::A),
        [a, b, c] if sn(a) && is_bc(b) && is_bc(c) => Ok(SequenceLabel::A),
        [a, b, c, d] if sn(a) && is_bc(b) && is_bc(c) && sn(d) => Ok(SequenceLabel::B),
        _ => Err(Error::UnrecognizedSequence(
            events.iter().map(|e| format!("{}@{:.6}", e.kind.label(), e.s)).collect::<Vec<_>>().join(", "),
        )),
    }
}

pub fn classify_tongue_sequence<M: MapFamily + ?Sized>(family: &M, p: i64, q: u32, transect: &Transect) -> Result<SequenceLabel> {
    classify_events(&transect_events(family, p, q, transect)?)
}

/// Sampling density for [`tongue_set`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TongueSetOptions {
    /// Number of horizontal transects across the window.
    pub levels: usize,
    /// Samples along each transect.
    pub samples: usize,
    pub q_max: u32,
}

impl Default for TongueSetOptions {
    fn default() -> Self {
        TongueSetOptions { levels: 24, samples: 200, q_max: 2 }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn refine_event<M: MapFamily + ?Sized>(family: &M, p: i64, q: u32, t: &Transect, ev: &TransectEvent) -> Option<TonguePoint> {
    let level = t.from[1];
    match ev.kind {
        CurveKind::SaddleNode => {
            let h = 1.0 / t.samples.max(10) as f64;
            for s in [ev.s - h, ev.s + h] {
                let Ok(lift) = family.lift(t.at(s)) else { continue };
                let Ok(orbits) = lift.find_periodic_orbits(p, q) else { continue };
                for o in &orbits {
                    if let Ok(pt) = sn_point_on_line(family, p, q, 0, level, (ev.params[0], o.points[0])) {
                        if (pt.params[0] - ev.params[0]).abs() <= 2.0 * h * (t.to[0] - t.from[0]).abs() {
                            return Some(pt);
                        }
                    }
                }
            }
            None
        }
        kind => {
            let lift = family.lift(ev.params).ok()?;
            let best = lift
                .locate_gaps()
                .into_iter()
                .filter_map(|g| bc_residual_for_gap(&lift, &g, p, q, kind).ok().map(|r| (r.abs(), g.x_gap)))
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())?;
            (best.0 < 1e-6).then_some(TonguePoint { params: ev.params, x: reduce(best.1).0, p, q, kind })
        }
    }
}

/// Saddle-node and border-collision points of all `(p, q)` tongues with
/// `q <= q_max` met along horizontal transects of `window` (first parameter
/// free, second fixed per transect). Sorted by `(q, p, kind, p2, p1)`.
pub fn tongue_set<M: MapFamily + ?Sized>(family: &M, window: &Window, opts: &TongueSetOptions) -> Result<Vec<TonguePoint>> {
    if opts.levels == 0 || opts.samples < 2 || opts.q_max == 0 {
        return Err(Error::InvalidParams("tongue set needs levels >= 1, samples >= 2, q_max >= 1".into()));
    }
    let levels: Vec<f64> = (0..opts.levels)
        .map(|i| window.lo[1] + (i as f64 + 0.5) / opts.levels as f64 * (window.hi[1] - window.lo[1]))
        .collect();
    let per_level = |level: f64| -> Result<Vec<TonguePoint>> {
        // Open interval, so that a boundary excluded by the family is skipped.
        let inset = 1e-9 * (window.hi[0] - window.lo[0]);
        let t = Transect { from: [window.lo[0] + inset, level], to: [window.hi[0] - inset, level], samples: opts.samples };
        let rho = |s: f64| -> Option<f64> { family.lift(t.at(s)).ok()?.rotation_number(0.0, 2000).ok().map(|r| r.value) };
        let (Some(r0), Some(r1)) = (rho(0.0), rho(1.0)) else { return Ok(Vec::new()) };
        let (lo, hi) = (r0.min(r1) - 0.5, r0.max(r1) + 0.5);
        let mut out = Vec::new();
        for q in 1..=opts.q_max {
            let p_lo = (lo * q as f64).floor() as i64;
            let p_hi = (hi * q as f64).ceil() as i64;
            for p in p_lo..=p_hi {
                if gcd(p.unsigned_abs(), q as u64) != 1 {
                    continue;
                }
                for ev in transect_events(family, p, q, &t)? {
                    if let Some(pt) = refine_event(family, p, q, &t, &ev) {
                        out.push(pt);
                    }
                }
            }
        }
        Ok(out)
    };
    let chunks: Vec<Vec<TonguePoint>> = levels.par_iter().map(|&l| per_level(l)).collect::<Result<_>>()?;
    let mut all: Vec<TonguePoint> = chunks.into_iter().flatten().collect();
    let key = |t: &TonguePoint| (t.q, t.p, t.kind as u8);
    all.sort_by(|a, b| {
        key(a)
            .cmp(&key(b))
            .then(a.params[1].partial_cmp(&b.params[1]).unwrap())
            .then(a.params[0].partial_cmp(&b.params[0]).unwrap())
    });
    Ok(all)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// Restart every parameter from the same point.
    Fixed(f64),
    /// Start from the final state of the previous parameter value.
    Continue(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramConfig {
    /// Index of the swept parameter.
    pub sweep_index: usize,
    /// Value of the other parameter.
    pub fixed_value: f64,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub transient: u64,
    pub samples: usize,
    pub initial: InitialCondition,
}

impl DiagramConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.hi >= self.lo) {
            return Err(Error::InvalidParams("sweep needs step > 0 and hi >= lo".into()));
        }
        if self.sweep_index > 1 {
            return Err(Error::InvalidParams("sweep index must be 0 or 1".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagramRow {
    pub param: f64,
    /// Orbit points reduced to `[0, 1)`.
    pub samples: Vec<f64>,
}

/// Attractor samples after a transient, for each swept parameter value.
pub fn sweep_bifurcation_diagram<M: MapFamily + ?Sized>(family: &M, config: &DiagramConfig) -> Result<Vec<DiagramRow>> {
    config.validate()?;
    let values = config.values();
    let params = |v: f64| {
        let mut pr = [config.fixed_value; 2];
        pr[config.sweep_index] = v;
        pr
    };
    let run = |v: f64, x0: f64| -> Result<(DiagramRow, f64)> {
        let lift = family.lift(params(v))?;
        let mut x = lift.iterate(x0, config.transient)?;
        let mut samples = Vec::with_capacity(config.samples);
        for _ in 0..config.samples {
            x = lift.eval(x)?;
            samples.push(reduce(x).0);
        }
        Ok((DiagramRow { param: v, samples }, reduce(x).0))
    };
    match config.initial {
        InitialCondition::Fixed(x0) => values.par_iter().map(|&v| run(v, x0).map(|r| r.0)).collect(),
        InitialCondition::Continue(x0) => {
            let mut x = x0;
            let mut out = Vec::with_capacity(values.len());
            for &v in &values {
                let (row, xe) = run(v, x)?;
                x = xe;
                out.push(row);
            }
            Ok(out)
        }
    }
}

/// Largest arc of the circle containing none of `points`.
pub fn max_hole(points: &[f64]) -> f64 {
    if points.is_empty() {
        return 1.0;
    }
    let mut v: Vec<f64> = points.iter().map(|&x| reduce(x).0).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = v[0] + 1.0 - v[v.len() - 1];
    for w in v.windows(2) {
        best = best.max(w[1] - w[0]);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hole_of_uniform_points() {
        let pts: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        assert!((max_hole(&pts) - 0.1).abs() < 1e-15);
        assert!((max_hole(&[0.9, 0.1]) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rigid_rotation_diagram_is_uniform() {
        struct Rot;
        impl MapFamily for Rot {
            fn lift(&self, p: [f64; 2]) -> Result<Lift> {
                Ok(Lift::Rotation(p[0]))
            }
            fn param_names(&self) -> [&'static str; 2] {
                ["shift", "unused"]
            }
        }
        let cfg = DiagramConfig {
            sweep_index: 0,
            fixed_value: 0.0,
            lo: 0.381_966_011_250_105,
            hi: 0.381_966_011_250_105,
            step: 1.0,
            transient: 0,
            samples: 2000,
            initial: InitialCondition::Fixed(0.0),
        };
        let rows = sweep_bifurcation_diagram(&Rot, &cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(max_hole(&rows[0].samples) < 2e-3);
    }

    #[test]
    fn canonical_transect_is_case_a() {
        let fam = CanonicalFamily { n: 2, b: 0.7 };
        let t = Transect { from: [-0.1, 0.5], to: [0.45, 0.5], samples: 400 };
        let ev = transect_events(&fam, 0, 1, &t).unwrap();
        assert_eq!(classify_events(&ev).unwrap(), SequenceLabel::A, "{ev:?}");
    }

    #[test]
    fn canonical_saddle_node_on_line() {
        let fam = CanonicalFamily { n: 2, b: 0.7 };
        let pt = sn_point_on_line(&fam, 0, 1, 0, 0.5, (0.35, 0.5)).unwrap();
        let want = crate::canonical::f2_bifurcation_structure(0.7, 0.5).unwrap().sn_a;
        assert!((pt.params[0] - want).abs() < 1e-8);
    }

    #[test]
    fn seed_far_from_any_curve_fails() {
        let fam = CanonicalFamily { n: 2, b: 0.7 };
        let w = Window::new([0.9, 0.0], [1.0, 0.1]);
        let r = trace_sn_curve(&fam, 0, 1, &w, ([0.95, 0.05], 0.5), &ContinuationOptions::default());
        assert!(r.is_err());
    }
}
