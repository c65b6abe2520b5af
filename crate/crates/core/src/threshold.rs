//! Threshold systems: trajectories bounce between a lower threshold `g` and
//! an upper threshold `h`, rising under the up flow and falling under the
//! down flow. First hits define the up map `T_u` and the down map `T_d`.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::{Composition, GapDescriptor, Lift};
use crate::roots;
use crate::sts::StsParams;

/// One Fourier mode `a cos 2πkx + b sin 2πkx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: u32,
    pub cos: f64,
    pub sin: f64,
}

/// A period-one function given by a finite Fourier series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicFn {
    pub mean: f64,
    pub modes: Vec<Mode>,
}

impl PeriodicFn {
    pub fn constant(c: f64) -> Self {
        PeriodicFn { mean: c, modes: Vec::new() }
    }

    /// `offset + amp (1 + sin 2πx)`.
    pub fn shifted_sine(offset: f64, amp: f64) -> Self {
        PeriodicFn {
            mean: offset + amp,
            modes: vec![Mode { k: 1, cos: 0.0, sin: amp }],
        }
    }

    /// Value and first three derivatives.
    pub fn eval_all(&self, x: f64) -> [f64; 4] {
        let mut out = [self.mean, 0.0, 0.0, 0.0];
        for m in &self.modes {
            let w = TAU * m.k as f64;
            let (s, c) = (w * x).sin_cos();
            let v = m.cos * c + m.sin * s;
            let d = w * (m.sin * c - m.cos * s);
            out[0] += v;
            out[1] += d;
            out[2] -= w * w * v;
            out[3] -= w * w * d;
        }
        out
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval_all(x)[0]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval_all(x)[1]
    }

    /// Minimum and maximum over a period.
    pub fn range(&self) -> (f64, f64) {
        if self.modes.is_empty() {
            return (self.mean, self.mean);
        }
        let n = 2048;
        let vals: Vec<f64> = (0..n).map(|i| self.value(i as f64 / n as f64)).collect();
        let (mut imin, mut imax) = (0, 0);
        for i in 0..n {
            if vals[i] < vals[imin] {
                imin = i;
            }
            if vals[i] > vals[imax] {
                imax = i;
            }
        }
        let c = |i: usize| i as f64 / n as f64;
        let w = 1.0 / n as f64;
        let (_, vmax) = roots::golden_max(|x| self.value(x), c(imax) - w, c(imax) + w, 1e-12);
        let (_, vmin) = roots::golden_max(|x| -self.value(x), c(imin) - w, c(imin) + w, 1e-12);
        (-vmin, vmax)
    }
}

/// Closed-form flow families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Flow {
    /// `y + v τ`.
    Linear { velocity: f64 },
    /// `T + (y - T) e^{-r τ}`.
    Relaxation { target: f64, rate: f64 },
}

impl Flow {
    pub fn apply(&self, y: f64, t: f64) -> f64 {
        match *self {
            Flow::Linear { velocity } => y + velocity * t,
            Flow::Relaxation { target, rate } => target + (y - target) * (-rate * t).exp(),
        }
    }

    /// `∂/∂τ` and `∂²/∂τ²` of the flow.
    pub fn time_derivatives(&self, y: f64, t: f64) -> (f64, f64) {
        match *self {
            Flow::Linear { velocity } => (velocity, 0.0),
            Flow::Relaxation { target, rate } => {
                let e = (y - target) * (-rate * t).exp();
                (-rate * e, rate * rate * e)
            }
        }
    }

    /// `∂/∂y` of the flow.
    pub fn d_dy(&self, _y: f64, t: f64) -> f64 {
        match *self {
            Flow::Linear { .. } => 1.0,
            Flow::Relaxation { rate, .. } => (-rate * t).exp(),
        }
    }

    /// Signed time to go from `y0` to `y1`; infinite if never reached.
    pub fn time_to_reach(&self, y0: f64, y1: f64) -> f64 {
        match *self {
            Flow::Linear { velocity } => (y1 - y0) / velocity,
            Flow::Relaxation { target, rate } => {
                let r = (y1 - target) / (y0 - target);
                if r > 0.0 {
                    -r.ln() / rate
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn increasing_above(&self, y: f64) -> bool {
        match *self {
            Flow::Linear { velocity } => velocity > 0.0,
            Flow::Relaxation { target, rate } => rate > 0.0 && target > y,
        }
    }

    fn decreasing_below(&self, y: f64) -> bool {
        match *self {
            Flow::Linear { velocity } => velocity < 0.0,
            Flow::Relaxation { target, rate } => rate > 0.0 && target < y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Multiplicity {
    Simple,
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionResult {
    pub tau: f64,
    pub x_hit: f64,
    pub multiplicity: Multiplicity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TangencyKind {
    FoldVisible,
    FoldInvisible,
    Cusp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyPoint {
    pub x: f64,
    pub tau: f64,
    pub kind: TangencyKind,
}

/// `W` and its partial derivatives at a point; index 1 is `τ`, index 2 is `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WDerivatives {
    pub w: f64,
    pub w1: f64,
    pub w2: f64,
    pub w11: f64,
    pub w111: f64,
}

const SCAN_STEP: f64 = 1e-3;
const TANGENT_TOL: f64 = 1e-10;
const AGREE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSystemSpec {
    pub h: PeriodicFn,
    pub g: PeriodicFn,
    pub up_flow: Flow,
    pub down_flow: Flow,
    /// Longest admissible flight time, in periods.
    pub horizon: f64,
    h_range: (f64, f64),
    g_range: (f64, f64),
}

impl ThresholdSystemSpec {
    pub fn new(h: PeriodicFn, g: PeriodicFn, up_flow: Flow, down_flow: Flow) -> Result<Self> {
        let h_range = h.range();
        let g_range = g.range();
        let n = 1024;
        for i in 0..n {
            let x = i as f64 / n as f64;
            if g.value(x) >= h.value(x) {
                return Err(Error::InvalidParams(format!("g >= h at x = {x}")));
            }
        }
        if !up_flow.increasing_above(h_range.1) {
            return Err(Error::InvalidParams("up flow must increase through the upper threshold".into()));
        }
        if !down_flow.decreasing_below(g_range.0) {
            return Err(Error::InvalidParams("down flow must decrease through the lower threshold".into()));
        }
        Ok(ThresholdSystemSpec {
            h,
            g,
            up_flow,
            down_flow,
            horizon: 10.0,
            h_range,
            g_range,
        })
    }

    /// The sinusoidal threshold system as a generic spec.
    pub fn sts(p: &StsParams) -> Result<Self> {
        Self::new(
            PeriodicFn::shifted_sine(p.beta, p.alpha / TAU),
            PeriodicFn::constant(0.0),
            Flow::Linear { velocity: p.gamma },
            Flow::Linear { velocity: -1.0 },
        )
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    /// `W(τ, x) = φ_τ(g(x)) - h(x + τ)` with partial derivatives.
    pub fn w_up(&self, tau: f64, x: f64) -> WDerivatives {
        let g = self.g.eval_all(x);
        let h = self.h.eval_all(x + tau);
        let (ft, ftt) = self.up_flow.time_derivatives(g[0], tau);
        // Third τ-derivative of the flow, needed only for the cusp check.
        let fttt = match self.up_flow {
            Flow::Linear { .. } => 0.0,
            Flow::Relaxation { rate, .. } => -rate * ftt,
        };
        WDerivatives {
            w: self.up_flow.apply(g[0], tau) - h[0],
            w1: ft - h[1],
            w2: self.up_flow.d_dy(g[0], tau) * g[1] - h[1],
            w11: ftt - h[2],
            w111: fttt - h[3],
        }
    }

    /// `W` with derivatives by central differences of step `1e-5` scaled by
    /// the argument size.
    pub fn w_up_fd(&self, tau: f64, x: f64) -> WDerivatives {
        let w = |t: f64, x: f64| self.up_flow.apply(self.g.value(x), t) - self.h.value(x + t);
        let ht = 1e-5 * tau.abs().max(1.0);
        let hx = 1e-5 * x.abs().max(1.0);
        let w0 = w(tau, x);
        let (wp, wm) = (w(tau + ht, x), w(tau - ht, x));
        let (wpp, wmm) = (w(tau + 2.0 * ht, x), w(tau - 2.0 * ht, x));
        WDerivatives {
            w: w0,
            w1: (wp - wm) / (2.0 * ht),
            w2: (w(tau, x + hx) - w(tau, x - hx)) / (2.0 * hx),
            w11: (wp - 2.0 * w0 + wm) / (ht * ht),
            w111: (wpp - 2.0 * wp + 2.0 * wm - wmm) / (2.0 * ht.powi(3)),
        }
    }

    fn up_window(&self, x: f64) -> (f64, f64) {
        let y0 = self.g.value(x);
        let lo = self.up_flow.time_to_reach(y0, self.h_range.0).max(0.0);
        let hi = self.up_flow.time_to_reach(y0, self.h_range.1);
        (lo, if hi.is_finite() { hi.min(self.horizon) } else { self.horizon })
    }

    fn down_window(&self, x: f64) -> (f64, f64) {
        let y0 = self.h.value(x);
        let lo = self.down_flow.time_to_reach(y0, self.g_range.1).max(0.0);
        let hi = self.down_flow.time_to_reach(y0, self.g_range.0);
        (lo, if hi.is_finite() { hi.min(self.horizon) } else { self.horizon })
    }

    /// First hit of the upper threshold from `(x, g(x))`.
    pub fn first_intersection_up(&self, x: f64) -> Result<IntersectionResult> {
        let (lo, hi) = self.up_window(x);
        let f = |t: f64| {
            let d = self.w_up(t, x);
            (d.w, d.w1)
        };
        let (tau, multiplicity) =
            adaptive_first_crossing(f, lo, hi).ok_or(Error::NoIntersection { x, horizon: self.horizon })?;
        Ok(IntersectionResult { tau, x_hit: x + tau, multiplicity })
    }

    /// `-V(τ, x)` with `V = ψ_τ(h(x)) - g(x + τ)`, and its `τ`-derivative.
    fn v_down_neg(&self, tau: f64, x: f64) -> (f64, f64) {
        let y0 = self.h.value(x);
        let g = self.g.eval_all(x + tau);
        let (ft, _) = self.down_flow.time_derivatives(y0, tau);
        (g[0] - self.down_flow.apply(y0, tau), g[1] - ft)
    }

    /// First hit of the lower threshold from `(x, h(x))`.
    pub fn first_intersection_down(&self, x: f64) -> Result<IntersectionResult> {
        let (lo, hi) = self.down_window(x);
        let (tau, multiplicity) = adaptive_first_crossing(|t| self.v_down_neg(t, x), lo, hi)
            .ok_or(Error::NoIntersection { x, horizon: self.horizon })?;
        Ok(IntersectionResult { tau, x_hit: x + tau, multiplicity })
    }

    pub fn up_map(&self, x: f64) -> Result<f64> {
        Ok(self.first_intersection_up(x)?.x_hit)
    }

    pub fn down_map(&self, x: f64) -> Result<f64> {
        Ok(self.first_intersection_down(x)?.x_hit)
    }

    fn up_map_with_derivative(&self, x: f64) -> Result<(f64, f64)> {
        let r = self.first_intersection_up(x)?;
        let d = self.w_up(r.tau, x);
        if d.w1.abs() < 1e-13 {
            return Err(Error::SingularDerivative { x });
        }
        Ok((r.x_hit, 1.0 - d.w2 / d.w1))
    }

    fn down_map_with_derivative(&self, x: f64) -> Result<(f64, f64)> {
        let r = self.first_intersection_down(x)?;
        let y0 = self.h.eval_all(x);
        let g = self.g.eval_all(r.x_hit);
        let (ft, _) = self.down_flow.time_derivatives(y0[0], r.tau);
        let v1 = ft - g[1];
        let v2 = self.down_flow.d_dy(y0[0], r.tau) * y0[1] - g[1];
        if v1.abs() < 1e-13 {
            return Err(Error::SingularDerivative { x });
        }
        Ok((r.x_hit, 1.0 - v2 / v1))
    }

    /// `T_u ∘ T_d` or `T_d ∘ T_u`.
    pub fn compose(&self, x: f64, order: Composition) -> Result<f64> {
        match order {
            Composition::UpAfterDown => self.up_map(self.down_map(x)?),
            Composition::DownAfterUp => self.down_map(self.up_map(x)?),
        }
    }

    pub fn compose_with_derivative(&self, x: f64, order: Composition) -> Result<(f64, f64)> {
        let (first, second): (fn(&Self, f64) -> Result<(f64, f64)>, fn(&Self, f64) -> Result<(f64, f64)>) =
            match order {
                Composition::UpAfterDown => (Self::down_map_with_derivative, Self::up_map_with_derivative),
                Composition::DownAfterUp => (Self::up_map_with_derivative, Self::down_map_with_derivative),
            };
        let (y, d1) = first(self, x)?;
        let (z, d2) = second(self, y)?;
        Ok((z, d1 * d2))
    }

    pub fn lift(self: &Arc<Self>, order: Composition) -> Lift {
        Lift::Threshold(Arc::clone(self), order)
    }

    /// Critical points of `τ ↦ W(τ, x)` in the up window.
    fn critical_points(&self, x: f64) -> Vec<(f64, CritKind)> {
        let (lo, hi) = self.up_window(x);
        let lo = (lo - 0.01).max(0.0);
        let hi = hi + 0.01;
        let n = ((hi - lo) / SCAN_STEP).ceil().max(2.0) as usize;
        let ts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let w1: Vec<f64> = ts.iter().map(|&t| self.w_up(t, x).w1).collect();
        let mut out = Vec::new();
        for i in 0..n {
            if w1[i] > 0.0 && w1[i + 1] <= 0.0 || w1[i] < 0.0 && w1[i + 1] >= 0.0 {
                let kind = if w1[i] > 0.0 { CritKind::Max } else { CritKind::Min };
                if let Ok(t) = roots::bisect(|t| self.w_up(t, x).w1, ts[i], ts[i + 1], 1e-14) {
                    out.push((t, kind));
                }
            } else if i > 0 && w1[i].abs() < w1[i - 1].abs() && w1[i].abs() <= w1[i + 1].abs() {
                let (t, v) = roots::golden_max(|t| -self.w_up(t, x).w1.abs(), ts[i - 1], ts[i + 1], 1e-12);
                if -v < 1e-9 {
                    out.push((t, CritKind::Degenerate));
                }
            }
        }
        out
    }

    /// The critical point of kind `kind` closest to `t_guess`.
    fn critical_near(&self, x: f64, t_guess: f64, kind: CritKind) -> Option<f64> {
        self.critical_points(x)
            .into_iter()
            .filter(|c| c.1 == kind)
            .map(|c| c.0)
            .min_by(|a, b| (a - t_guess).abs().partial_cmp(&(b - t_guess).abs()).unwrap())
            .filter(|t| (t - t_guess).abs() < 0.05)
    }

    /// All tangencies `W = W_1 = 0` of the up flow with `h`, `x` in `[0, 1)`.
    pub fn detect_tangencies(&self) -> Vec<TangencyPoint> {
        let n = 400;
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let crits: Vec<Vec<(f64, CritKind)>> = xs.iter().map(|&x| self.critical_points(x)).collect();
        let mut out: Vec<TangencyPoint> = Vec::new();
        for i in 0..n {
            for &(t0, kind) in &crits[i] {
                let Some(&(t1, _)) = crits[i + 1]
                    .iter()
                    .filter(|c| c.1 == kind)
                    .min_by(|a, b| (a.0 - t0).abs().partial_cmp(&(b.0 - t0).abs()).unwrap())
                else {
                    continue;
                };
                if (t1 - t0).abs() > 0.05 {
                    continue;
                }
                let w0 = self.w_up(t0, xs[i]).w;
                let w1 = self.w_up(t1, xs[i + 1]).w;
                if w0.signum() == w1.signum() && w1 != 0.0 {
                    continue;
                }
                if let Some(tp) = self.refine_tangency(xs[i], xs[i + 1], t0, t1, kind) {
                    let dup = out.iter().any(|o| {
                        let d = (o.x - tp.x).abs();
                        d.min(1.0 - d) < 1e-7 && o.kind == tp.kind
                    });
                    if !dup {
                        out.push(tp);
                    }
                }
            }
        }
        out.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        out
    }

    fn refine_tangency(&self, xa: f64, xb: f64, ta: f64, tb: f64, kind: CritKind) -> Option<TangencyPoint> {
        let slope = (tb - ta) / (xb - xa);
        let on_branch = |x: f64| {
            let guess = ta + slope * (x - xa);
            self.critical_near(x, guess, kind)
                .map(|t| (t, self.w_up(t, x).w))
        };
        let f = |x: f64| on_branch(x).map(|v| v.1).unwrap_or(f64::NAN);
        let mut x = roots::bisect(f, xa, xb, 1e-14).ok()?;
        let (mut tau, _) = on_branch(x)?;
        // Newton polish of (W, W_1) = 0 where the Jacobian is regular.
        for _ in 0..3 {
            let d = self.w_up(tau, x);
            let det = d.w1 * self.w12(tau, x) - d.w2 * d.w11;
            if det.abs() < 1e-8 {
                break;
            }
            let w12 = self.w12(tau, x);
            let dt = (d.w * w12 - d.w2 * d.w1) / det;
            let dx = (d.w1 * d.w1 - d.w11 * d.w) / det;
            if dt.abs() > 1e-6 || dx.abs() > 1e-6 {
                break;
            }
            tau -= dt;
            x -= dx;
        }
        let d = self.w_up(tau, x);
        let kind = if d.w11.abs() < 1e-6 || kind == CritKind::Degenerate {
            TangencyKind::Cusp
        } else if d.w11 < 0.0 {
            match self.first_intersection_up(x) {
                Ok(r) if (r.tau - tau).abs() < 1e-6 => TangencyKind::FoldVisible,
                _ => TangencyKind::FoldInvisible,
            }
        } else {
            TangencyKind::FoldInvisible
        };
        let xr = crate::lift::reduce(x).0;
        Some(TangencyPoint { x: xr, tau, kind })
    }

    fn w12(&self, tau: f64, x: f64) -> f64 {
        let g = self.g.eval_all(x);
        let h = self.h.eval_all(x + tau);
        let dfy = match self.up_flow {
            Flow::Linear { .. } => 0.0,
            Flow::Relaxation { rate, .. } => -rate * (-rate * tau).exp(),
        };
        dfy * g[1] - h[2]
    }

    /// Gaps of `T_u ∘ T_d`.
    pub fn measure_gap(self: &Arc<Self>) -> Vec<GapDescriptor> {
        self.lift(Composition::UpAfterDown).locate_gaps()
    }

    /// Number of solutions `τ > 0` of `W̃(τ, x) = ψ_{-τ}(g(x)) - h(x - τ)`,
    /// i.e. of down-map pre-images of `x`, counted with multiplicity.
    pub fn preimage_count_down(&self, x: f64) -> usize {
        let y0 = self.g.value(x);
        let lo = (-self.down_flow.time_to_reach(y0, self.h_range.0)).max(0.0);
        let hi = -self.down_flow.time_to_reach(y0, self.h_range.1);
        let hi = if hi.is_finite() { hi.min(self.horizon) } else { self.horizon };
        let lo = (lo - 1e-6).max(0.0);
        let hi = hi + 1e-6;
        let wt = |t: f64| {
            let h = self.h.eval_all(x - t);
            let (ft, _) = self.down_flow.time_derivatives(y0, -t);
            (self.down_flow.apply(y0, -t) - h[0], -ft + h[1])
        };
        let n = ((hi - lo) / SCAN_STEP).ceil().max(2.0) as usize;
        let ts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let vals: Vec<(f64, f64)> = ts.iter().map(|&t| wt(t)).collect();
        let mut count = 0;
        for i in 0..n {
            let (wa, da) = vals[i];
            let (wb, db) = vals[i + 1];
            if wa == 0.0 {
                count += 1;
                continue;
            }
            if wa.signum() != wb.signum() && wb != 0.0 {
                count += 1;
            } else if da.signum() != db.signum() {
                if let Ok(m) = roots::bisect(|t| wt(t).1, ts[i], ts[i + 1], 1e-14) {
                    let wm = wt(m).0;
                    if wm.signum() != wa.signum() || wm.abs() < TANGENT_TOL {
                        count += 2;
                    }
                }
            }
        }
        count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CritKind {
    Max,
    Min,
    Degenerate,
}

/// First zero of `w` on `[lo, hi]` with `w(lo) < 0`, scanning with a fixed step.
/// `f` returns `(w, w')`.
fn first_crossing<F>(f: &F, lo: f64, hi: f64, step: f64) -> Option<(f64, Multiplicity)>
where
    F: Fn(f64) -> (f64, f64),
{
    let (w_lo, _) = f(lo);
    if w_lo >= 0.0 {
        return Some((lo, Multiplicity::Simple));
    }
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=n {
        let b = if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 };
        let fb = f(b);
        let interior_max = fa.1 > 0.0 && fb.1 < 0.0;
        let mut m = None;
        if interior_max {
            if let Ok(tm) = roots::bisect(|t| f(t).1, a, b, 1e-15) {
                m = Some((tm, f(tm).0));
            }
        }
        let solve = |x0: f64, x1: f64| roots::newton_bracketed(|t| f(t), x0, x1, 1e-14).ok();
        if let Some((tm, wm)) = m {
            if wm >= 0.0 {
                let tau = if wm == 0.0 { tm } else { solve(a, tm)? };
                let mult = if wm < TANGENT_TOL { Multiplicity::Tangent } else { Multiplicity::Simple };
                return Some((tau, mult));
            }
            if wm > -TANGENT_TOL {
                return Some((tm, Multiplicity::Tangent));
            }
            if fb.0 >= 0.0 {
                return Some((solve(tm, b)?, Multiplicity::Simple));
            }
        } else if fb.0 >= 0.0 {
            let tau = if fb.0 == 0.0 { b } else { solve(a, b)? };
            return Some((tau, Multiplicity::Simple));
        }
        a = b;
        fa = fb;
    }
    None
}

/// Repeats the scan with halved steps until two successive results agree.
fn adaptive_first_crossing<F>(f: F, lo: f64, hi: f64) -> Option<(f64, Multiplicity)>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut step = SCAN_STEP;
    let mut prev = first_crossing(&f, lo, hi, step)?;
    for _ in 0..10 {
        step *= 0.5;
        let next = first_crossing(&f, lo, hi, step)?;
        if (next.0 - prev.0).abs() <= AGREE_TOL {
            return Some(next);
        }
        prev = next;
    }
    Some(prev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sts(alpha: f64, beta: f64, gamma: f64) -> Arc<ThresholdSystemSpec> {
        Arc::new(ThresholdSystemSpec::sts(&StsParams::new(alpha, beta, gamma).unwrap()).unwrap())
    }

    #[test]
    fn flat_threshold_linear_crossing() {
        let spec = ThresholdSystemSpec::new(
            PeriodicFn::constant(0.3),
            PeriodicFn::constant(0.0),
            Flow::Linear { velocity: 0.5 },
            Flow::Linear { velocity: -1.0 },
        )
        .unwrap();
        let r = spec.first_intersection_up(0.37).unwrap();
        assert!((r.tau - 0.6).abs() < 1e-14);
        assert!((spec.down_map(0.2).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(spec.preimage_count_down(0.4), 1);
    }

    #[test]
    fn down_map_of_sts_is_x_plus_h() {
        let p = StsParams::new(0.4, 0.3, 0.5).unwrap();
        let spec = ThresholdSystemSpec::sts(&p).unwrap();
        for x in [0.0, 0.13, 0.5, 0.77] {
            assert!((spec.down_map(x).unwrap() - p.down_map(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn fd_partials_track_analytic() {
        let spec = sts(0.7, 0.15, 0.5);
        let a = spec.w_up(0.4, 0.2);
        let f = spec.w_up_fd(0.4, 0.2);
        assert!((a.w1 - f.w1).abs() < 1e-8);
        assert!((a.w2 - f.w2).abs() < 1e-8);
        assert!((a.w11 - f.w11).abs() < 1e-4);
        assert!((a.w111 - f.w111).abs() < 1e-1);
    }

    #[test]
    fn relaxation_flow_times() {
        let f = Flow::Relaxation { target: 2.0, rate: 1.5 };
        let t = f.time_to_reach(0.0, 1.0);
        assert!((f.apply(0.0, t) - 1.0).abs() < 1e-14);
        assert!(f.time_to_reach(0.0, 3.0).is_infinite());
    }

    #[test]
    fn relaxation_system_is_degree_one() {
        let spec = Arc::new(
            ThresholdSystemSpec::new(
                PeriodicFn::shifted_sine(0.8, 0.05),
                PeriodicFn::constant(0.0),
                Flow::Relaxation { target: 1.5, rate: 1.0 },
                Flow::Linear { velocity: -2.0 },
            )
            .unwrap(),
        );
        let l = spec.lift(Composition::UpAfterDown);
        for x in [0.1, 0.45, 0.9] {
            let d = l.eval(x + 1.0).unwrap() - l.eval(x).unwrap();
            assert!((d - 1.0).abs() < 1e-12);
            let fd = (l.eval(x + 1e-6).unwrap() - l.eval(x - 1e-6).unwrap()) / 2e-6;
            assert!((l.eval_derivative(x).unwrap() - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn no_tangency_in_monotone_regime() {
        assert!(sts(0.4, 0.3, 0.5).detect_tangencies().is_empty());
    }

    #[test]
    fn one_visible_fold_past_gamma() {
        let t = sts(0.7, 0.15, 0.5).detect_tangencies();
        let vis = t.iter().filter(|p| p.kind == TangencyKind::FoldVisible).count();
        assert_eq!(vis, 1, "{t:?}");
        assert_eq!(t.len() % 2, 0);
    }

    #[test]
    fn cusp_at_alpha_equal_gamma() {
        let t = sts(0.5, 0.3, 0.5).detect_tangencies();
        assert_eq!(t.len(), 1, "{t:?}");
        assert_eq!(t[0].kind, TangencyKind::Cusp);
    }
}
