//! A piecewise-smooth flow on the torus that passes from a Poincaré flow
//! (`μ > 0`) to a Cherry flow (`μ < 0`) through a saddle-node in the
//! central square.
//!
//! Region `A = (3/8, 5/8)²` carries the saddle-node normal form `U_μ`,
//! region `B = (3/8, 5/8) × (0, 3/8)` the field `(1, b - y)` and the rest
//! of the torus the constant field `(1, c)`. `B` and `C` are integrated in
//! closed form; `A` with an embedded Runge–Kutta pair.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

const LO: f64 = 0.375;
const HI: f64 = 0.625;
/// Half-width of the central square; the section offset `kε` of the local
/// analysis.
pub const K_EPSILON: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CherryParams {
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub mu: f64,
}

impl CherryParams {
    /// Checks `0 < b < 3/8`, `λ > 1/8`, `μ > -1/64`, `a > 0`, `c > 0`, which
    /// make every region boundary transverse with a consistent direction.
    pub fn new(lambda: f64, a: f64, b: f64, c: f64, mu: f64) -> Result<Self> {
        let p = CherryParams { lambda, a, b, c, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConstraintViolation(m.to_string()));
        if !(self.b > 0.0 && self.b < LO) {
            return bad("need 0 < b < 3/8");
        }
        if !(self.lambda > 0.125) {
            return bad("need lambda > 1/8");
        }
        if !(self.mu > -1.0 / 64.0) {
            return bad("need mu > -1/64");
        }
        if !(self.a > 0.0) {
            return bad("need a > 0");
        }
        if !(self.c > 0.0) {
            return bad("need c > 0");
        }
        if !(self.mu.is_finite() && self.lambda.is_finite() && self.a.is_finite() && self.c.is_finite()) {
            return bad("parameters must be finite");
        }
        Ok(())
    }

    /// The reference parameter set with the given `μ`.
    pub fn reference(mu: f64) -> Self {
        CherryParams { lambda: 1.0, a: 45.0, b: 0.66 * 0.375, c: 0.25, mu }
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        CherryParams { mu, ..*self }
    }

    pub fn sigma(&self) -> f64 {
        self.mu.abs().sqrt()
    }

    /// `U_μ` in coordinates centred on the square, `z = x - 1/2`, `w = y - 1/2`.
    #[inline]
    fn u_field(&self, z: f64, w: f64) -> [f64; 2] {
        let w2 = w * w;
        [
            self.mu + z * z + 2.0 * self.a * (self.lambda - z) * w2 + self.a * self.a * w2 * w2,
            self.lambda * w,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
    C,
}

/// Region of a point of the unit square. Boundary points are assigned to
/// the region the flow enters next.
pub fn region_of(x: f64, y: f64) -> Region {
    let x = x.rem_euclid(1.0);
    let y = y.rem_euclid(1.0);
    if (LO..HI).contains(&x) {
        if y > LO && y < HI {
            Region::A
        } else if y <= LO {
            Region::B
        } else {
            Region::C
        }
    } else {
        Region::C
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusState {
    pub x: f64,
    pub y: f64,
    pub region: Region,
}

impl TorusState {
    pub fn new(x: f64, y: f64) -> Self {
        let (x, y) = (x.rem_euclid(1.0), y.rem_euclid(1.0));
        TorusState { x, y, region: region_of(x, y) }
    }
}

/// Velocity `(dx/dt, dy/dt)` of the field of the state's region.
pub fn field_eval(params: &CherryParams, state: &TorusState) -> [f64; 2] {
    match state.region {
        Region::A => params.u_field(state.x - 0.5, state.y - 0.5),
        Region::B => [1.0, params.b - state.y],
        Region::C => [1.0, params.c],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Time budget for one passage.
    pub t_max: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions { rtol: 1e-10, atol: 1e-20, t_max: 1e4 }
    }
}

/// A crossing of a region boundary with the normal velocity on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryEvent {
    pub x: f64,
    pub y: f64,
    pub from: Region,
    pub to: Region,
    pub normal_in: f64,
    pub normal_out: f64,
}

/// Lifted position. `y` is kept as `hi + lo` so that offsets accumulated in
/// region `C` do not round away the distance to the saddle line.
#[derive(Debug, Clone, Copy)]
struct Lifted {
    x: f64,
    y_hi: f64,
    y_lo: f64,
}

impl Lifted {
    fn y(&self) -> f64 {
        self.y_hi + self.y_lo
    }

    /// `y - (k + 1/2)` for the cell `k` containing `y`.
    fn w(&self) -> f64 {
        let k = self.y().floor();
        (self.y_hi - (k + 0.5)) + self.y_lo
    }
}

enum Stop {
    Section,
    Time(f64),
}

struct Flight {
    pos: Lifted,
    events: Vec<BoundaryEvent>,
}

const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step; returns the fifth-order solution and the
/// embedded error estimate.
fn dp_step(p: &CherryParams, y: [f64; 2], h: f64) -> ([f64; 2], [f64; 2]) {
    let mut k = [[0.0f64; 2]; 7];
    for s in 0..7 {
        let mut yi = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for d in 0..2 {
                yi[d] += h * DP_A[s][j] * kj[d];
            }
        }
        k[s] = p.u_field(yi[0], yi[1]);
    }
    let mut y5 = y;
    let mut err = [0.0; 2];
    for s in 0..7 {
        for d in 0..2 {
            y5[d] += h * DP_B5[s] * k[s][d];
            err[d] += h * (DP_B5[s] - DP_B4[s]) * k[s][d];
        }
    }
    (y5, err)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Exit {
    Right,
    Top,
    Bottom,
    TimeUp,
}

fn exit_of(zw: [f64; 2]) -> Option<Exit> {
    let g = [zw[0] - K_EPSILON, zw[1] - K_EPSILON, -zw[1] - K_EPSILON];
    let (i, m) = g
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    (m >= 0.0).then_some([Exit::Right, Exit::Top, Exit::Bottom][i])
}

/// Integrates `U_μ` inside `A` from `(z, w)` until the trajectory leaves
/// the square or `t_left` runs out. Returns the end point and elapsed time.
fn integrate_square(p: &CherryParams, zw0: [f64; 2], t_left: f64, opts: &IntegrationOptions) -> Result<([f64; 2], f64, Exit)> {
    let mut y = zw0;
    let mut t = 0.0;
    let mut h: f64 = 1e-3;
    let mut steps = 0u64;
    loop {
        let v = p.u_field(y[0], y[1]);
        let speed = v[0].hypot(v[1]);
        if speed < 1e-12 {
            return Err(Error::StuckAtEquilibrium { x: 0.5 + y[0], y: 0.5 + y[1] });
        }
        if t >= t_left {
            return Ok((y, t, Exit::TimeUp));
        }
        steps += 1;
        if steps > 50_000_000 {
            return Err(Error::ConvergenceFailure("step limit in region A".into()));
        }
        let h_try = h.min(t_left - t);
        let (yn, err) = dp_step(p, y, h_try);
        let mut e: f64 = 0.0;
        for d in 0..2 {
            let sc = opts.atol + opts.rtol * y[d].abs().max(yn[d].abs());
            e = e.max((err[d] / sc).abs());
        }
        if !e.is_finite() {
            h *= 0.1;
            continue;
        }
        if e <= 1.0 {
            if exit_of(yn).is_some() {
                // Localize the crossing by bisection on the step length.
                let (mut lo, mut hi) = (0.0, h_try);
                while hi - lo > 1e-12 {
                    let m = 0.5 * (lo + hi);
                    if exit_of(dp_step(p, y, m).0).is_some() {
                        hi = m;
                    } else {
                        lo = m;
                    }
                }
                let mut ye = dp_step(p, y, hi).0;
                let exit = exit_of(ye).unwrap_or(Exit::Right);
                match exit {
                    Exit::Right => ye[0] = K_EPSILON,
                    Exit::Top => ye[1] = K_EPSILON,
                    Exit::Bottom => ye[1] = -K_EPSILON,
                    Exit::TimeUp => {}
                }
                return Ok((ye, t + hi, exit));
            }
            y = yn;
            t += h_try;
        }
        let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h_try * fac).max(1e-14);
    }
}

fn normal_velocity(p: &CherryParams, region: Region, x: f64, y: f64, vertical: bool) -> f64 {
    let v = field_eval(p, &TorusState { x, y, region });
    if vertical {
        v[0]
    } else {
        v[1]
    }
}

/// Event-driven flight from `pos` until the section `x = ceil` or a time stop.
fn fly(p: &CherryParams, start: Lifted, stop: Stop, opts: &IntegrationOptions, record: bool) -> Result<Flight> {
    let mut pos = start;
    let mut t = 0.0;
    let mut events = Vec::new();
    let x_end = start.x.floor() + 1.0;
    let budget = match stop {
        Stop::Section => opts.t_max,
        Stop::Time(s) => s.min(opts.t_max),
    };
    let push = |events: &mut Vec<BoundaryEvent>, x: f64, y: f64, from: Region, to: Region, vertical: bool| {
        if record {
            let xr = x.rem_euclid(1.0);
            let yr = y.rem_euclid(1.0);
            events.push(BoundaryEvent {
                x: xr,
                y: yr,
                from,
                to,
                normal_in: normal_velocity(p, from, xr, yr, vertical),
                normal_out: normal_velocity(p, to, xr, yr, vertical),
            });
        }
    };
    loop {
        let cell = pos.x.floor();
        let xr = pos.x - cell;
        let y = pos.y();
        let yr = y - y.floor();
        if matches!(stop, Stop::Section) && pos.x >= x_end {
            return Ok(Flight { pos, events });
        }
        let t_left = budget - t;
        if t_left <= 0.0 {
            if matches!(stop, Stop::Section) {
                return Err(Error::TimeBudgetExceeded { t_max: opts.t_max });
            }
            return Ok(Flight { pos, events });
        }
        match region_of(xr, yr) {
            Region::C => {
                let dx = if xr < LO {
                    LO - xr
                } else if xr < HI {
                    HI - xr
                } else {
                    1.0 - xr
                };
                let in_strip = (LO..HI).contains(&xr);
                let dy_t = if in_strip { (1.0 - yr) / p.c } else { f64::INFINITY };
                let dt = dx.min(dy_t).min(t_left);
                let vertical = dt == dx;
                pos = if dt == dy_t {
                    Lifted { x: pos.x + dt, y_hi: y.floor() + 1.0, y_lo: 0.0 }
                } else {
                    let x = if vertical { cell + xr + dx } else { pos.x + dt };
                    Lifted { x, y_hi: pos.y_hi, y_lo: pos.y_lo + p.c * dt }
                };
                t += dt;
                if dt < t_left {
                    let (nxr, nyr) = (pos.x - pos.x.floor(), pos.y() - pos.y().floor());
                    let to = region_of(nxr, nyr);
                    if to != Region::C {
                        push(&mut events, pos.x, pos.y(), Region::C, to, vertical);
                    }
                }
            }
            Region::B => {
                let dt = (HI - xr).min(t_left);
                let k = y.floor();
                let y0 = y - k;
                let yn = p.b + (y0 - p.b) * (-dt).exp();
                pos = Lifted { x: if dt == HI - xr { cell + HI } else { pos.x + dt }, y_hi: k + yn, y_lo: 0.0 };
                t += dt;
                if dt < t_left {
                    push(&mut events, pos.x, pos.y(), Region::B, Region::C, true);
                }
            }
            Region::A => {
                let k = y.floor();
                let zw0 = [xr - 0.5, pos.w()];
                let (zw, dt, exit) = integrate_square(p, zw0, t_left, opts)?;
                t += dt;
                pos = Lifted { x: cell + 0.5 + zw[0], y_hi: k + 0.5 + zw[1], y_lo: 0.0 };
                match exit {
                    Exit::Right => {
                        pos.x = cell + HI;
                        push(&mut events, pos.x, pos.y(), Region::A, Region::C, true);
                    }
                    Exit::Top => {
                        pos.y_hi = k + HI;
                        push(&mut events, pos.x, pos.y(), Region::A, Region::C, false);
                    }
                    Exit::Bottom => {
                        pos.y_hi = k + LO;
                        push(&mut events, pos.x, pos.y(), Region::A, Region::B, false);
                    }
                    Exit::TimeUp => {}
                }
            }
        }
    }
}

/// Integrates from `state0` to the next crossing of the section `x ≡ 0`.
pub fn integrate_to_section(params: &CherryParams, state0: &TorusState, t_max: f64) -> Result<TorusState> {
    params.validate()?;
    let opts = IntegrationOptions { t_max, ..Default::default() };
    let f = fly(params, Lifted { x: state0.x, y_hi: state0.y, y_lo: 0.0 }, Stop::Section, &opts, false)?;
    Ok(TorusState::new(0.0, f.pos.y()))
}

/// Like [`integrate_to_section`], also returning the boundary events met.
pub fn integrate_to_section_traced(
    params: &CherryParams,
    state0: &TorusState,
    opts: &IntegrationOptions,
) -> Result<(TorusState, Vec<BoundaryEvent>)> {
    params.validate()?;
    let f = fly(params, Lifted { x: state0.x, y_hi: state0.y, y_lo: 0.0 }, Stop::Section, opts, true)?;
    Ok((TorusState::new(0.0, f.pos.y()), f.events))
}

/// Advances `state0` by time `t` (or until the time budget).
pub fn flow_for(params: &CherryParams, state0: &TorusState, t: f64) -> Result<TorusState> {
    params.validate()?;
    let opts = IntegrationOptions::default();
    let f = fly(params, Lifted { x: state0.x, y_hi: state0.y, y_lo: 0.0 }, Stop::Time(t), &opts, false)?;
    Ok(TorusState::new(f.pos.x, f.pos.y()))
}

/// Lifted return `Y` on `x = 1` of the trajectory from `(0, y)`.
pub fn return_lifted(params: &CherryParams, y: f64, opts: &IntegrationOptions) -> Result<f64> {
    let f = fly(params, Lifted { x: 0.0, y_hi: y, y_lo: 0.0 }, Stop::Section, opts, false)?;
    Ok(f.pos.y())
}

/// Image interval that no return reaches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapEstimate {
    /// Domain point of the discontinuity.
    pub at: f64,
    /// Lower and upper image endpoints, reduced to `[0, 1)`.
    pub lower: f64,
    pub upper: f64,
}

impl GapEstimate {
    pub fn width(&self) -> f64 {
        (self.upper - self.lower).rem_euclid(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnMapSample {
    /// `(y_n, y_{n+1})` sorted by `y_n`, both in `[0, 1)`.
    pub entries: Vec<(f64, f64)>,
    /// Lifted images, parallel to `entries`.
    pub lifted: Vec<f64>,
    /// Initial conditions absorbed by an equilibrium.
    pub captured: Vec<f64>,
    pub gap: Option<GapEstimate>,
    pub max_slope: f64,
    pub max_slope_at: f64,
    /// Effective section offset `kε` used by the model.
    pub k_epsilon: f64,
}

impl ReturnMapSample {
    /// Piecewise-linear circle-map lift through the returning samples.
    pub fn lift(&self) -> Result<crate::Lift> {
        let xs = self.entries.iter().map(|e| e.0).collect();
        let lift = crate::lift::SampledLift::new(xs, self.lifted.clone())?;
        Ok(crate::Lift::TorusReturn(std::sync::Arc::new(lift)))
    }

    /// Continuity branch of each entry: 0 before the gap, 1 after.
    pub fn branch_ids(&self) -> Vec<u32> {
        self.entries
            .iter()
            .map(|e| match self.gap {
                Some(g) if e.0 > g.at => 1,
                _ => 0,
            })
            .collect()
    }
}

enum Sample {
    Ret(f64),
    Captured,
}

fn sample(p: &CherryParams, y: f64, opts: &IntegrationOptions) -> Result<Sample> {
    match return_lifted(p, y, opts) {
        Ok(v) => Ok(Sample::Ret(v)),
        Err(Error::StuckAtEquilibrium { .. }) => Ok(Sample::Captured),
        Err(e) => Err(e),
    }
}

/// Return map on the section `x = 0` over `y_grid`, with the gap and the
/// steepest slope refined locally.
pub fn build_return_map(params: &CherryParams, y_grid: &[f64]) -> Result<ReturnMapSample> {
    build_return_map_with(params, y_grid, &IntegrationOptions::default())
}

pub fn build_return_map_with(params: &CherryParams, y_grid: &[f64], opts: &IntegrationOptions) -> Result<ReturnMapSample> {
    params.validate()?;
    let mut ys: Vec<f64> = y_grid.iter().map(|y| y.rem_euclid(1.0)).collect();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup();
    let results: Vec<Sample> = ys.par_iter().map(|&y| sample(params, y, opts)).collect::<Result<_>>()?;
    let mut entries = Vec::new();
    let mut lifted = Vec::new();
    let mut captured = Vec::new();
    for (y, r) in ys.iter().zip(results) {
        match r {
            Sample::Ret(v) => {
                entries.push((*y, v.rem_euclid(1.0)));
                lifted.push(v);
            }
            Sample::Captured => captured.push(*y),
        }
    }
    if entries.len() < 2 {
        return Err(Error::InsufficientResolution("fewer than two returning samples".into()));
    }
    let gap = find_gap(params, &entries, &lifted, opts)?;
    let (max_slope, max_slope_at) = steepest(params, &entries, &lifted, gap.as_ref(), opts)?;
    Ok(ReturnMapSample { entries, lifted, captured, gap, max_slope, max_slope_at, k_epsilon: K_EPSILON })
}

/// Index `i` of the largest image increment from sample `i` to `i + 1`,
/// including the wrap from the last sample to the first.
fn largest_jump(entries: &[(f64, f64)], lifted: &[f64]) -> (usize, f64) {
    let n = entries.len();
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            let shift = if j == 0 { 1.0 } else { 0.0 };
            (i, lifted[j] + shift - lifted[i])
        })
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

/// Follows the largest jump by bisection. A discontinuity keeps its size
/// as the bracket shrinks; a steep continuous stretch does not.
fn find_gap(p: &CherryParams, entries: &[(f64, f64)], lifted: &[f64], opts: &IntegrationOptions) -> Result<Option<GapEstimate>> {
    let n = entries.len();
    let (i, _) = largest_jump(entries, lifted);
    let j = (i + 1) % n;
    let (mut lo, mut flo) = (entries[i].0, lifted[i]);
    let (mut hi, mut fhi) = if j == 0 { (entries[0].0 + 1.0, lifted[0] + 1.0) } else { (entries[j].0, lifted[j]) };
    let mut jump_at_1e12 = None;
    loop {
        let m = 0.5 * (lo + hi);
        if hi - lo < 1e-12 && jump_at_1e12.is_none() {
            jump_at_1e12 = Some(fhi - flo);
        }
        if hi - lo < 1e-14 || m <= lo || m >= hi {
            break;
        }
        match sample(p, m.rem_euclid(1.0), opts)? {
            Sample::Ret(v) => {
                let v = v + (m - m.rem_euclid(1.0));
                if v - flo < fhi - v {
                    lo = m;
                    flo = v;
                } else {
                    hi = m;
                    fhi = v;
                }
            }
            Sample::Captured => {
                // The capture point is the discontinuity itself.
                let (a, b) = (prev_float(m), next_float(m));
                if let (Sample::Ret(va), Sample::Ret(vb)) = (sample(p, a.rem_euclid(1.0), opts)?, sample(p, b.rem_euclid(1.0), opts)?) {
                    let off = m - m.rem_euclid(1.0);
                    lo = a;
                    flo = va + off;
                    hi = b;
                    fhi = vb + off;
                }
                jump_at_1e12.get_or_insert(fhi - flo);
                break;
            }
        }
    }
    let jump = fhi - flo;
    let coarse = jump_at_1e12.unwrap_or(jump);
    if jump > 1e-6 && jump > 0.5 * coarse {
        Ok(Some(GapEstimate { at: (0.5 * (lo + hi)).rem_euclid(1.0), lower: flo.rem_euclid(1.0), upper: fhi.rem_euclid(1.0) }))
    } else {
        Ok(None)
    }
}

fn prev_float(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

fn next_float(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

/// Largest divided difference, zooming eight-fold into the steepest cell
/// until its image spacing drops below `1e-3` or its width below `1e-14`.
fn steepest(
    p: &CherryParams,
    entries: &[(f64, f64)],
    lifted: &[f64],
    gap: Option<&GapEstimate>,
    opts: &IntegrationOptions,
) -> Result<(f64, f64)> {
    let n = entries.len();
    let mut best: Option<(f64, f64, f64, f64, f64)> = None;
    for i in 0..n - 1 {
        let (a, b) = (entries[i].0, entries[i + 1].0);
        if gap.is_some_and(|g| g.at > a && g.at < b) {
            continue;
        }
        let s = (lifted[i + 1] - lifted[i]) / (b - a);
        if best.is_none_or(|bb| s > bb.0) {
            best = Some((s, a, b, lifted[i], lifted[i + 1]));
        }
    }
    let Some((mut s_max, mut a, mut b, mut fa, mut fb)) = best else {
        return Ok((0.0, 0.0));
    };
    let mut at = 0.5 * (a + b);
    while fb - fa >= 1e-3 && b - a >= 1e-14 {
        let m = 8;
        let xs: Vec<f64> = (0..=m).map(|k| a + (b - a) * k as f64 / m as f64).collect();
        let mut fs = vec![fa; m + 1];
        fs[m] = fb;
        for k in 1..m {
            fs[k] = match sample(p, xs[k], opts)? {
                Sample::Ret(v) => v,
                Sample::Captured => return Ok((f64::INFINITY, xs[k])),
            };
        }
        let (k, s) = (0..m)
            .map(|k| (k, (fs[k + 1] - fs[k]) / (xs[k + 1] - xs[k])))
            .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
        if s > s_max {
            s_max = s;
            at = 0.5 * (xs[k] + xs[k + 1]);
        }
        a = xs[k];
        b = xs[k + 1];
        fa = fs[k];
        fb = fs[k + 1];
    }
    Ok((s_max, at))
}

/// Mean slope `(F(hi) - F(lo))/(hi - lo)` of the lifted return map.
pub fn mean_slope(params: &CherryParams, lo: f64, hi: f64) -> Result<f64> {
    let opts = IntegrationOptions::default();
    Ok((return_lifted(params, hi, &opts)? - return_lifted(params, lo, &opts)?) / (hi - lo))
}

/// Image endpoints of the gap predicted by the unstable manifold of the
/// saddle, `x = -σ + a y²`, meeting the right side of the square.
pub fn manifold_gap_endpoints(params: &CherryParams) -> Option<(f64, f64)> {
    if params.mu > 0.0 {
        return None;
    }
    let w = ((K_EPSILON + params.sigma()) / params.a).sqrt();
    if w >= K_EPSILON {
        return None;
    }
    let shift = params.c * (1.0 - HI);
    Some(((0.5 - w + shift).rem_euclid(1.0), (0.5 + w + shift).rem_euclid(1.0)))
}

/// Section coordinate whose trajectory enters the square on `y = 1/2`.
pub fn saddle_line_y(params: &CherryParams) -> f64 {
    (0.5 - params.c * LO).rem_euclid(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopePoint {
    pub mu: f64,
    pub max_slope: f64,
    /// `log(max slope) √μ / (λπ)`.
    pub normalized: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPoint {
    pub mu: f64,
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPoint {
    pub mu: f64,
    pub lower_edge: f64,
    pub upper_edge: f64,
    /// `2 sqrt|μ| / λ`.
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub slopes: Vec<SlopePoint>,
    /// Fit `log s = κ/√μ + c0`; `None` with fewer than two positive `μ`.
    pub kappa: Option<f64>,
    pub kappa_intercept: Option<f64>,
    /// `κ/(λπ)`.
    pub kappa_normalized: Option<f64>,
    pub gaps: Vec<GapPoint>,
    /// Width extrapolated to `μ = 0` by a line in `σ`.
    pub gap_limit: Option<f64>,
    pub exponents: Vec<ExponentPoint>,
    pub k_epsilon: f64,
}

/// Local exponent of `|F(y) - F(y*)| ~ C |y - y*|^α` on one side of the
/// discontinuity at `y*`, from divided differences at `Δ = 10^-6 … 10^-12`.
pub fn edge_exponent(params: &CherryParams, at: f64, side: f64) -> Result<f64> {
    let opts = IntegrationOptions::default();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 6..=12 {
        let d = 10f64.powi(-k);
        let f1 = return_lifted(params, at + side * d, &opts)?;
        let f2 = return_lifted(params, at + side * 2.0 * d, &opts)?;
        let s = ((f2 - f1) / d).abs();
        xs.push(d.ln());
        ys.push(s.ln());
    }
    let (slope, _) = roots::linear_fit(&xs, &ys);
    Ok(1.0 + slope)
}

/// Slope growth for `μ > 0`, gap widths and edge exponents for `μ < 0`.
pub fn scaling_analysis(base: &CherryParams, mu_grid: &[f64]) -> Result<ScalingReport> {
    scaling_analysis_on(base, mu_grid, 2000)
}

pub fn scaling_analysis_on(base: &CherryParams, mu_grid: &[f64], grid: usize) -> Result<ScalingReport> {
    if mu_grid.contains(&0.0) {
        return Err(Error::InvalidParams("mu grid must exclude 0".into()));
    }
    let ys: Vec<f64> = (0..grid).map(|i| i as f64 / grid as f64).collect();
    let mut slopes = Vec::new();
    let mut gaps = Vec::new();
    let mut exponents = Vec::new();
    for &mu in mu_grid {
        let p = base.with_mu(mu);
        p.validate()?;
        let map = build_return_map(&p, &ys)?;
        if mu > 0 as f64 {
            if map.max_slope_at == 0.0 || !map.max_slope.is_finite() {
                return Err(Error::InsufficientResolution(format!("steep window not resolved at mu = {mu}")));
            }
            slopes.push(SlopePoint {
                mu,
                max_slope: map.max_slope,
                normalized: map.max_slope.ln() * mu.sqrt() / (p.lambda * std::f64::consts::PI),
            });
        } else {
            let g = map.gap.ok_or_else(|| Error::InsufficientResolution(format!("no gap found at mu = {mu}")))?;
            gaps.push(GapPoint { mu, lower: g.lower, upper: g.upper, width: g.width() });
            exponents.push(ExponentPoint {
                mu,
                lower_edge: edge_exponent(&p, g.at, -1.0)?,
                upper_edge: edge_exponent(&p, g.at, 1.0)?,
                predicted: 2.0 * p.sigma() / p.lambda,
            });
        }
    }
    let (kappa, kappa_intercept) = if slopes.len() >= 2 {
        let xs: Vec<f64> = slopes.iter().map(|s| 1.0 / s.mu.sqrt()).collect();
        let ys: Vec<f64> = slopes.iter().map(|s| s.max_slope.ln()).collect();
        let (k, c0) = roots::linear_fit(&xs, &ys);
        (Some(k), Some(c0))
    } else {
        (None, None)
    };
    let gap_limit = (gaps.len() >= 2).then(|| {
        let xs: Vec<f64> = gaps.iter().map(|g| g.mu.abs().sqrt()).collect();
        let ys: Vec<f64> = gaps.iter().map(|g| g.width).collect();
        roots::linear_fit(&xs, &ys).1
    });
    Ok(ScalingReport {
        slopes,
        kappa,
        kappa_intercept,
        kappa_normalized: kappa.map(|k| k / (base.lambda * std::f64::consts::PI)),
        gaps,
        gap_limit,
        exponents,
        k_epsilon: K_EPSILON,
    })
}
