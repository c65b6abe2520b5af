//! The sinusoidal threshold system.
//!
//! Upper threshold `h(x) = β + (α/2π)(1 + sin 2πx)`, lower threshold `g = 0`,
//! up flow `y + γτ`, down flow `y - τ`. The induced lift is
//! `x_{n+1} = x_n + h(x_n) + h(x_{n+1})/γ` with the first admissible root.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::{Composition, Lift};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StsParams {
    pub alpha: f64,
    pub beta: f64,
    /// Up-flow slope; `f64::INFINITY` gives the sine-circle-map limit `x + h(x)`.
    pub gamma: f64,
}

impl StsParams {
    /// `α` may be zero (constant threshold); `β` and `γ` must be positive.
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let p = StsParams { alpha, beta, gamma };
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParams(format!("alpha = {alpha} must be >= 0")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParams(format!("beta = {beta} must be > 0")));
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidParams(format!("gamma = {gamma} must be > 0")));
        }
        Ok(p)
    }

    pub fn gamma_tilde(&self) -> f64 {
        gamma_tilde(self.gamma)
    }

    #[inline]
    pub fn h(&self, x: f64) -> f64 {
        self.beta + self.alpha / TAU * (1.0 + (TAU * x).sin())
    }

    #[inline]
    pub fn dh(&self, x: f64) -> f64 {
        self.alpha * (TAU * x).cos()
    }

    #[inline]
    pub fn d2h(&self, x: f64) -> f64 {
        -TAU * self.alpha * (TAU * x).sin()
    }

    /// Down map `T_d(x) = x + h(x)`.
    pub fn down_map(&self, x: f64) -> f64 {
        x + self.h(x)
    }

    /// Up flow time from the lower threshold at `z` to the first hit of `h`.
    pub fn up_time(&self, z: f64) -> Result<f64> {
        if self.gamma.is_infinite() {
            return Ok(0.0);
        }
        let g = self.gamma;
        let w = |t: f64| g * t - self.h(z + t);
        let t_lo = self.beta / g;
        let t_hi = (self.beta + self.alpha / PI) / g;
        let w_lo = w(t_lo);
        if w_lo >= 0.0 {
            return Ok(t_lo);
        }
        // Breakpoints: critical points of w (where cos 2πu = γ/α) and a
        // bounded piece length, so each piece is monotone.
        let mut cuts = Vec::with_capacity(8);
        if self.alpha > g {
            let th = (g / self.alpha).acos() / TAU;
            let u_lo = z + t_lo;
            let u_hi = z + t_hi;
            let mut k = u_lo.floor() - 1.0;
            while k <= u_hi.ceil() + 1.0 {
                for u in [k - th, k + th] {
                    if u > u_lo && u < u_hi {
                        cuts.push(u - z);
                    }
                }
                k += 1.0;
            }
        }
        let cap = (0.05f64).min(0.25 / g);
        let mut t = t_lo;
        while t < t_hi {
            t += cap;
            if t < t_hi {
                cuts.push(t);
            }
        }
        cuts.push(t_hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut t0 = t_lo;
        for &t1 in &cuts {
            if t1 <= t0 {
                continue;
            }
            let w1 = w(t1);
            if w1 >= 0.0 {
                if w1 == 0.0 {
                    return Ok(t1);
                }
                return roots::newton_bracketed(
                    |t| (w(t), g - self.dh(z + t)),
                    t0,
                    t1,
                    1e-15,
                );
            }
            t0 = t1;
        }
        Err(Error::SolverFailure(format!(
            "no threshold crossing bracketed for z = {z}"
        )))
    }

    /// Up map `T_u(z) = z + τ`.
    pub fn up_map(&self, z: f64) -> Result<f64> {
        Ok(z + self.up_time(z)?)
    }

    /// Slope of the up map at `z` given its image.
    fn up_slope(&self, z1: f64, x: f64) -> Result<f64> {
        if self.gamma.is_infinite() {
            return Ok(1.0);
        }
        let den = 1.0 - self.dh(z1) / self.gamma;
        if den.abs() < 1e-13 {
            return Err(Error::SingularDerivative { x });
        }
        Ok(1.0 / den)
    }

    /// One step of the implicit map, `T_u(T_d(x))`.
    pub fn step(&self, x: f64) -> Result<f64> {
        self.up_map(self.down_map(x))
    }

    /// Value and derivative of the composition in the given order.
    pub fn step_with_derivative(&self, x: f64, order: Composition) -> Result<(f64, f64)> {
        match order {
            Composition::UpAfterDown => {
                let z = self.down_map(x);
                let x1 = self.up_map(z)?;
                let d = (1.0 + self.dh(x)) * self.up_slope(x1, x)?;
                Ok((x1, d))
            }
            Composition::DownAfterUp => {
                let y = self.up_map(x)?;
                let d = self.up_slope(y, x)? * (1.0 + self.dh(y));
                Ok((self.down_map(y), d))
            }
        }
    }

    pub fn lift(&self) -> Lift {
        Lift::Sts(*self, Composition::UpAfterDown)
    }
}

pub fn gamma_tilde(gamma: f64) -> f64 {
    if gamma.is_infinite() {
        1.0
    } else {
        gamma / (1.0 + gamma)
    }
}

/// Smallest admissible `x_{n+1}` of the implicit map.
pub fn sts_step(params: &StsParams, x: f64) -> Result<f64> {
    params.step(x)
}

/// Boundary lines of the maximal `(p, 1)` existence region in the `(β, α)`
/// plane. On the first line the fixed point sits at `x = 1/4`, on the second
/// at `x = 3/4`. They are saddle-node loci only where `α < γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnLinesP1 {
    pub p: i64,
    pub gamma: f64,
    /// `p γ̃`, the tip of the region on `α = 0`.
    pub tip_beta: f64,
}

impl SnLinesP1 {
    /// `α = π(p γ̃ - β)`.
    pub fn first_alpha(&self, beta: f64) -> f64 {
        PI * (self.tip_beta - beta)
    }

    /// `β = p γ̃`.
    pub fn second_beta(&self) -> f64 {
        self.tip_beta
    }

    /// Polylines `[(β, α)]` of both lines for `α` in `[0, alpha_max]`.
    pub fn sample(&self, alpha_max: f64, n: usize) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        let n = n.max(2);
        let alphas = (0..n).map(|i| alpha_max * i as f64 / (n - 1) as f64);
        let first = alphas.clone().map(|a| (self.tip_beta - a / PI, a)).collect();
        let second = alphas.map(|a| (self.tip_beta, a)).collect();
        (first, second)
    }
}

pub fn sn_lines_p1(p: i64, gamma: f64) -> Result<SnLinesP1> {
    if p < 1 || !(gamma > 0.0) {
        return Err(Error::InvalidParams(format!("need p >= 1 and gamma > 0, got p = {p}, gamma = {gamma}")));
    }
    Ok(SnLinesP1 { p, gamma, tip_beta: p as f64 * gamma_tilde(gamma) })
}

/// Tangency point `u*` of the up flow with `h`: `cos 2πu = γ/α`, `sin 2πu < 0`.
pub fn tangency_point(alpha: f64, gamma: f64) -> Result<f64> {
    if !(alpha >= gamma) {
        return Err(Error::DomainError(format!("no tangency for alpha = {alpha} < gamma = {gamma}")));
    }
    Ok(-(gamma / alpha).min(1.0).acos() / TAU)
}

/// Type I border collision of the `(p, 1)` orbit:
/// `α = (γ² + 4π² D²)/(4π D)` with `D = p γ̃ - β`.
pub fn bc_type1_p1(p: i64, gamma: f64, beta: f64) -> Result<f64> {
    let tip = p as f64 * gamma_tilde(gamma);
    let d = tip - beta;
    let lo = (tip - gamma / TAU).max(0.0);
    if !(beta >= lo - 1e-15 && beta < tip) {
        return Err(Error::DomainError(format!(
            "beta = {beta} outside [{lo}, {tip}) for the type I curve"
        )));
    }
    Ok((gamma * gamma + 4.0 * PI * PI * d * d) / (4.0 * PI * d))
}

/// Solution of the type II border-collision system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeTwoPoint {
    pub alpha: f64,
    pub beta: f64,
    /// Tangency point.
    pub x_b: f64,
    /// Second crossing of the grazing trajectory, the finite gap endpoint.
    pub x_c: f64,
}

impl TypeTwoPoint {
    /// Residuals of `cos 2πx_b = γ/α`, `sin 2πx_c = (2π/α)(pγ̃ - β) - 1` and
    /// `sin 2πx_c - sin 2πx_b = (2πγ/α)(x_c - x_b)`.
    pub fn residuals(&self, p: i64, gamma: f64) -> [f64; 3] {
        let a = self.alpha;
        let tip = p as f64 * gamma_tilde(gamma);
        [
            (TAU * self.x_b).cos() - gamma / a,
            (TAU * self.x_c).sin() - (TAU / a * (tip - self.beta) - 1.0),
            (TAU * self.x_c).sin() - (TAU * self.x_b).sin() - TAU * gamma / a * (self.x_c - self.x_b),
        ]
    }
}

/// Second crossing after the tangency at `x_b` of the line of slope `γ`
/// through `(x_b, h(x_b))` with `h`.
fn grazing_second_crossing(alpha: f64, gamma: f64, x_b: f64) -> Result<f64> {
    let sb = (TAU * x_b).sin();
    let f = |x: f64| alpha / TAU * ((TAU * x).sin() - sb) - gamma * (x - x_b);
    let df = |x: f64| alpha * (TAU * x).cos() - gamma;
    // f > 0 just after x_b (a minimum of the threshold above the line);
    // step until it turns negative. Near α = γ the crossing sits at about
    // 3|x_b| past the tangency, so the step scales with |x_b|.
    let step = (0.5 * x_b.abs()).clamp(1e-12, 1e-3);
    let mut a = x_b + step;
    let mut b = a;
    for _ in 0..4000 {
        b += step;
        if f(b) < 0.0 {
            return roots::newton_bracketed(|x| (f(x), df(x)), a, b, 1e-15);
        }
        a = b;
    }
    Err(Error::NoSolution("grazing trajectory does not cross the threshold again".into()))
}

/// Type II border collision of the `(p, 1)` orbit at amplitude `α > γ`.
///
/// The tangency point is explicit; the second crossing is a scalar root and
/// the full three-equation system is then polished by Newton's method.
pub fn bc_type2_p1(p: i64, gamma: f64, alpha: f64) -> Result<TypeTwoPoint> {
    if !(alpha > gamma) {
        if alpha == gamma {
            let tip = p as f64 * gamma_tilde(gamma);
            return Ok(TypeTwoPoint { alpha, beta: tip - gamma / TAU, x_b: 0.0, x_c: 0.0 });
        }
        return Err(Error::NoSolution(format!("alpha = {alpha} must exceed gamma = {gamma}")));
    }
    let tip = p as f64 * gamma_tilde(gamma);
    let x_b = tangency_point(alpha, gamma)?;
    let x_c = grazing_second_crossing(alpha, gamma, x_b)?;
    let beta = tip - alpha / TAU * (1.0 + (TAU * x_c).sin());
    let mut pt = TypeTwoPoint { alpha, beta, x_b, x_c };
    // Newton on (x_b, x_c, β); the start is already exact to rounding.
    for _ in 0..3 {
        let r = pt.residuals(p, gamma);
        if r.iter().all(|v| v.abs() < 1e-15) {
            break;
        }
        let (cb, sb) = ((TAU * pt.x_b).cos(), (TAU * pt.x_b).sin());
        let cc = (TAU * pt.x_c).cos();
        let k = TAU * gamma / alpha;
        let j = nalgebra::Matrix3::new(
            -TAU * sb, 0.0, 0.0,
            0.0, TAU * cc, TAU / alpha,
            -TAU * cb + k, TAU * cc - k, 0.0,
        );
        let Some(inv) = j.try_inverse() else { break };
        let d = inv * nalgebra::Vector3::new(r[0], r[1], r[2]);
        pt.x_b -= d[0];
        pt.x_c -= d[1];
        pt.beta -= d[2];
    }
    Ok(pt)
}

/// Root of `1 + sqrt(1 - q²) = q(π/2 + arccos q)` in `(0, 1)`.
pub fn qstar() -> f64 {
    let f = |q: f64| 1.0 + (1.0 - q * q).sqrt() - q * (PI / 2.0 + q.acos());
    roots::bisect(f, 0.1, 1.0, 1e-15).expect("sign change on [0.1, 1]")
}

/// Moves `β` by `m γ̃`, carrying a `(p, q)` orbit to a `(p + m q, q)` orbit.
pub fn symmetry_translate(_p: i64, _q: u32, m: i64, params: &StsParams) -> StsParams {
    StsParams {
        beta: params.beta + m as f64 * params.gamma_tilde(),
        ..*params
    }
}

/// `x + h(x)` and its turning points.
fn turning_points(alpha: f64) -> (f64, f64) {
    let x_max = (-1.0 / alpha).acos() / TAU;
    (x_max, -x_max)
}

/// Parameters of one edge of the multi-gap wedge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WedgeEdge {
    pub beta: f64,
    /// Turning point of the down map.
    pub x_turn: f64,
    /// Integer shift in `T_d(x_turn) = z_a + k`.
    pub k: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Wedge {
    pub alpha: f64,
    pub gamma: f64,
    /// Local maximum of the map meets the singular side of the gap.
    pub left: WedgeEdge,
    /// Local minimum meets the finite side.
    pub right: WedgeEdge,
}

/// The edge `β` for a given turning point and shift: `T_d(x_t) = z_a + k`,
/// where `z_a = u* - h(u*)/γ` is the lower-threshold point whose up
/// trajectory grazes `h`.
fn wedge_edge(alpha: f64, gamma: f64, x_t: f64, k: i64) -> Result<WedgeEdge> {
    let big_h = |u: f64| alpha / TAU * (1.0 + (TAU * u).sin());
    let u = tangency_point(alpha, gamma)?;
    let gt = gamma_tilde(gamma);
    let mut beta = gt * (k as f64 + u - x_t - big_h(x_t) - big_h(u) / gamma);
    let mut x = x_t;
    // Two-condition Newton on (x, β): T_d'(x) = 0, T_d(x) - z_a(β) - k = 0.
    for _ in 0..20 {
        let p = StsParams { alpha, beta, gamma };
        let za = u - p.h(u) / gamma;
        let r0 = 1.0 + p.dh(x);
        let r1 = p.down_map(x) - za - k as f64;
        if r0.abs() < 1e-15 && r1.abs() < 1e-15 {
            break;
        }
        // d r0/dx = h'', d r0/dβ = 0; d r1/dx = r0, d r1/dβ = 1 + 1/γ.
        let j00 = p.d2h(x);
        if j00 == 0.0 {
            break;
        }
        let dx = r0 / j00;
        let db = (r1 - r0 * dx) / (1.0 + 1.0 / gamma);
        x -= dx;
        beta -= db;
        if dx.abs() < 1e-16 && db.abs() < 1e-16 {
            break;
        }
    }
    Ok(WedgeEdge { beta, x_turn: x, k })
}

/// Edges of the multi-gap wedge nearest to `beta_hint` (default `γ̃`).
pub fn wedge_boundaries_near(alpha: f64, gamma: f64, beta_hint: Option<f64>) -> Result<Wedge> {
    if !(alpha > 1.0 && alpha > gamma) {
        return Err(Error::NoWedge { alpha, gamma });
    }
    let gt = gamma_tilde(gamma);
    let hint = beta_hint.unwrap_or(gt);
    let (x_max, x_min) = turning_points(alpha);
    let base_l = wedge_edge(alpha, gamma, x_max, 0)?;
    let base_r = wedge_edge(alpha, gamma, x_min, 0)?;
    // Edges repeat with period γ̃ in β; pair each left edge with the first
    // right edge above it.
    let mut best: Option<(f64, Wedge)> = None;
    let k0 = ((hint - base_l.beta) / gt).round() as i64;
    for k in (k0 - 2)..=(k0 + 2) {
        let left = wedge_edge(alpha, gamma, x_max, k)?;
        let kr = ((left.beta - base_r.beta) / gt).floor() as i64 + 1;
        let mut right = wedge_edge(alpha, gamma, x_min, kr)?;
        if right.beta <= left.beta {
            right = wedge_edge(alpha, gamma, x_min, kr + 1)?;
        }
        let mid = 0.5 * (left.beta + right.beta);
        let d = (mid - hint).abs();
        if best.as_ref().is_none_or(|b| d < b.0) {
            best = Some((d, Wedge { alpha, gamma, left, right }));
        }
    }
    best.map(|b| b.1).ok_or(Error::NoWedge { alpha, gamma })
}

/// Edges `(β_left, β_right)` of the wedge of the `(1, 1)` region.
pub fn wedge_boundaries(alpha: f64, gamma: f64) -> Result<(f64, f64)> {
    let w = wedge_boundaries_near(alpha, gamma, None)?;
    Ok((w.left.beta, w.right.beta))
}

/// The crossing of the type I collision of `(1, 1)` with the type II
/// collision of `(2, 1)`.
///
/// `x0` is the lower-threshold point whose up trajectory grazes `h` at `c1`
/// and next crosses it at `c0`; `T_d(c1) = x0 + 1` and `T_d(c0) = x0 + 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Codim2Point {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c0: f64,
    pub c1: f64,
    pub x0: f64,
}

impl Codim2Point {
    pub fn params(&self) -> StsParams {
        StsParams { alpha: self.alpha, beta: self.beta, gamma: self.gamma }
    }

    /// Residuals of the tangency, both crossings and both return conditions.
    pub fn residuals(&self) -> [f64; 5] {
        let p = self.params();
        let g = self.gamma;
        [
            (TAU * self.c1).cos() - g / self.alpha,
            g * (self.c1 - self.x0) - p.h(self.c1),
            g * (self.c0 - self.x0) - p.h(self.c0),
            p.down_map(self.c1) - self.x0 - 1.0,
            p.down_map(self.c0) - self.x0 - 2.0,
        ]
    }

    /// `T_d'(c0) T_d'(c1)`.
    pub fn slope_product(&self) -> f64 {
        let p = self.params();
        (1.0 + p.dh(self.c0)) * (1.0 + p.dh(self.c1))
    }
}

fn codim2_at(alpha: f64, gamma: f64) -> Result<(Codim2Point, f64)> {
    let gt = gamma_tilde(gamma);
    let c1 = tangency_point(alpha, gamma)?;
    let big_h = alpha / TAU * (1.0 + (TAU * c1).sin());
    let beta = gt - big_h;
    let p = StsParams { alpha, beta, gamma };
    let x0 = c1 - p.h(c1) / gamma;
    let c0 = grazing_second_crossing(alpha, gamma, c1)?;
    let r = p.down_map(c0) - x0 - 2.0;
    Ok((Codim2Point { alpha, beta, gamma, c0, c1, x0 }, r))
}

/// Scans `α` in `(γ, alpha_max]` along the type I curve of `(1, 1)` for the
/// type II condition of `(2, 1)`.
pub fn codim2_locate_in(gamma: f64, alpha_max: f64) -> Result<Codim2Point> {
    let n = 2000;
    let lo = gamma * (1.0 + 1e-6);
    let alphas: Vec<f64> = (0..=n).map(|i| lo + (alpha_max - lo) * i as f64 / n as f64).collect();
    let mut prev: Option<(f64, f64)> = None;
    for &a in &alphas {
        let Ok((pt, r)) = codim2_at(a, gamma) else {
            prev = None;
            continue;
        };
        if let Some((a0, r0)) = prev {
            if r0.signum() != r.signum() && pt.beta > 0.0 {
                let f = |x: f64| codim2_at(x, gamma).map(|v| v.1).unwrap_or(f64::NAN);
                let root = roots::bisect(f, a0, a, 1e-15)?;
                let (pt, _) = codim2_at(root, gamma)?;
                if pt.slope_product() < 0.0 {
                    return Ok(pt);
                }
            }
        }
        prev = Some((a, r));
    }
    Err(Error::CrossingNotFound(format!(
        "no crossing for gamma = {gamma} with alpha in ({gamma}, {alpha_max}]"
    )))
}

pub fn codim2_locate(gamma: f64) -> Result<Codim2Point> {
    codim2_locate_in(gamma, 6.0)
}
