//! Lifts of degree-one circle maps: evaluation, iteration, rotation numbers,
//! periodic orbits and gap location.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalParams;
use crate::error::{Error, Result};
use crate::roots;
use crate::sts::StsParams;
use crate::threshold::ThresholdSystemSpec;

/// Order in which the two threshold maps are composed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Composition {
    /// `T_u ∘ T_d`: a map of the upper threshold.
    #[default]
    UpAfterDown,
    /// `T_d ∘ T_u`: a map of the lower threshold.
    DownAfterUp,
}

/// Piecewise-linear lift through sampled points, extended with period one.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledLift {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl SampledLift {
    /// `xs` strictly increasing in `[0, 1)`, `ys` the corresponding lifted images.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::InvalidParams("need at least two samples of equal length".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) || xs[0] < 0.0 || *xs.last().unwrap() >= 1.0 {
            return Err(Error::InvalidParams("sample abscissae must increase within [0, 1)".into()));
        }
        Ok(SampledLift { xs, ys })
    }

    fn node(&self, i: isize) -> (f64, f64) {
        let n = self.xs.len() as isize;
        let k = i.div_euclid(n);
        let j = i.rem_euclid(n) as usize;
        (self.xs[j] + k as f64, self.ys[j] + k as f64)
    }

    fn eval_unit(&self, x: f64) -> (f64, f64) {
        let i = self.xs.partition_point(|&v| v <= x) as isize - 1;
        let (x0, y0) = self.node(i);
        let (x1, y1) = self.node(i + 1);
        let slope = (y1 - y0) / (x1 - x0);
        (y0 + slope * (x - x0), slope)
    }
}

/// A lift `F` of a degree-one circle map, `F(x + 1) = F(x) + 1`.
#[derive(Debug, Clone)]
pub enum Lift {
    Canonical(CanonicalParams),
    Sts(StsParams, Composition),
    Threshold(Arc<ThresholdSystemSpec>, Composition),
    TorusReturn(Arc<SampledLift>),
    /// Rigid rotation `x + shift`.
    Rotation(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularSide {
    Left,
    Right,
    Both,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapDescriptor {
    /// Position of the jump in `[0, 1)`.
    pub x_gap: f64,
    /// `lim_{x↑x_gap} F(x)`.
    pub left_limit: f64,
    /// `lim_{x↓x_gap} F(x)`.
    pub right_limit: f64,
    pub singular_side: SingularSide,
}

impl GapDescriptor {
    pub fn size(&self) -> f64 {
        (self.right_limit - self.left_limit).abs()
    }

    /// Image limit on the given side (`Left` or `Right`).
    pub fn limit(&self, side: SingularSide) -> f64 {
        match side {
            SingularSide::Right => self.right_limit,
            _ => self.left_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub p: i64,
    pub q: u32,
    /// Orbit points reduced to `[0, 1)`, in iteration order.
    pub points: Vec<f64>,
    /// `(F^q)'` along the orbit. Infinite if the orbit sits on a singular gap endpoint.
    pub multiplier: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    pub value: f64,
    pub iterations: u64,
    pub error_bound: f64,
    /// Set when a decreasing branch was met; the bound is then not valid.
    pub non_monotone: bool,
}

/// Grid used by the orbit and gap scans.
pub const DEFAULT_GRID: usize = 4096;
const JUMP_FLOOR: f64 = 1e-4;
const GAP_MIN: f64 = 1e-6;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Reduce to `[0, 1)`, returning `(fraction, integer part)`.
#[inline]
pub fn reduce(x: f64) -> (f64, f64) {
    let k = x.floor();
    let mut f = x - k;
    if f >= 1.0 {
        f = 0.0;
        return (f, k + 1.0);
    }
    (f, k)
}

impl Lift {
    fn unit_with_derivative(&self, u: f64, x: f64) -> Result<(f64, f64)> {
        match self {
            Lift::Canonical(p) => Ok((p.eval_unit(u), p.derivative_unit(u).unwrap_or(f64::INFINITY))),
            Lift::Sts(p, order) => p.step_with_derivative(u, *order),
            Lift::Threshold(spec, order) => spec.compose_with_derivative(u, *order),
            Lift::TorusReturn(s) => Ok(s.eval_unit(u)),
            Lift::Rotation(shift) => Ok((u + shift, 1.0)),
        }
        .map_err(|e| match e {
            Error::SingularDerivative { .. } => Error::SingularDerivative { x },
            other => other,
        })
    }

    fn unit_value(&self, u: f64) -> Result<f64> {
        match self {
            Lift::Canonical(p) => Ok(p.eval_unit(u)),
            Lift::Sts(p, Composition::UpAfterDown) => p.step(u),
            Lift::Sts(p, Composition::DownAfterUp) => Ok(p.down_map(p.up_map(u)?)),
            Lift::Threshold(spec, order) => spec.compose(u, *order),
            Lift::TorusReturn(s) => Ok(s.eval_unit(u).0),
            Lift::Rotation(shift) => Ok(u + shift),
        }
    }

    /// `F(x)`, evaluated on the fundamental domain and shifted back.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::DomainError(format!("x = {x} is not finite")));
        }
        let (u, k) = reduce(x);
        Ok(self.unit_value(u)? + k)
    }

    /// `F'(x)`.
    pub fn eval_derivative(&self, x: f64) -> Result<f64> {
        Ok(self.eval_with_derivative(x)?.1)
    }

    /// `(F(x), F'(x))`. Derivative failures are reported as errors.
    pub fn eval_with_derivative(&self, x: f64) -> Result<(f64, f64)> {
        if !x.is_finite() {
            return Err(Error::DomainError(format!("x = {x} is not finite")));
        }
        let (u, k) = reduce(x);
        if let Lift::Canonical(p) = self {
            let d = p.derivative_unit(u).map_err(|_| Error::SingularDerivative { x })?;
            return Ok((p.eval_unit(u) + k, d));
        }
        if let Lift::TorusReturn(s) = self {
            if s.xs.binary_search_by(|v| v.partial_cmp(&u).unwrap()).is_ok() {
                let (_, dl) = s.eval_unit(u - 1e-15);
                let (y, dr) = s.eval_unit(u);
                if (dl - dr).abs() > 1e-9 * dl.abs().max(dr.abs()) {
                    return Err(Error::Undefined { x });
                }
                return Ok((y + k, dr));
            }
        }
        let (y, d) = self.unit_with_derivative(u, x)?;
        Ok((y + k, d))
    }

    /// Whether decreasing branches are possible for these parameters.
    pub fn may_be_non_monotone(&self) -> bool {
        match self {
            Lift::Canonical(_) | Lift::Rotation(_) => false,
            Lift::Sts(p, _) => p.alpha > 1.0,
            Lift::Threshold(..) | Lift::TorusReturn(_) => true,
        }
    }

    /// `F^n(x)`.
    pub fn iterate(&self, x: f64, n: u64) -> Result<f64> {
        let mut y = x;
        for _ in 0..n {
            y = self.eval(y)?;
        }
        Ok(y)
    }

    /// `(F^n(x), (F^n)'(x))` by the chain rule.
    pub fn iterate_with_derivative(&self, x: f64, n: u64) -> Result<(f64, f64)> {
        let mut y = x;
        let mut d = 1.0;
        for _ in 0..n {
            let (y1, dy) = self.eval_with_derivative(y)?;
            d *= dy;
            y = y1;
        }
        Ok((y, d))
    }

    /// Birkhoff estimate `(F^k(x0) - x0)/k` with bound `1/k`.
    pub fn rotation_number(&self, x0: f64, k: u64) -> Result<RotationEstimate> {
        if k == 0 {
            return Err(Error::InvalidParams("k must be >= 1".into()));
        }
        let check = self.may_be_non_monotone();
        let mut non_monotone = false;
        let mut y = x0;
        for _ in 0..k {
            if check && !non_monotone {
                match self.eval_with_derivative(y) {
                    Ok((y1, d)) => {
                        non_monotone = d < 0.0;
                        y = y1;
                        continue;
                    }
                    Err(Error::SingularDerivative { .. }) | Err(Error::Undefined { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            y = self.eval(y)?;
        }
        Ok(RotationEstimate {
            value: (y - x0) / k as f64,
            iterations: k,
            error_bound: 1.0 / k as f64,
            non_monotone,
        })
    }

    fn orbit_residual(&self, x: f64, p: i64, q: u32) -> Result<f64> {
        Ok(self.iterate(x, q as u64)? - x - p as f64)
    }

    /// All `(p, q)` orbits, found as roots of `G = F^q - x - p` on a grid of `[0, 1)`.
    pub fn find_periodic_orbits(&self, p: i64, q: u32) -> Result<Vec<PeriodicOrbit>> {
        self.find_periodic_orbits_on(p, q, DEFAULT_GRID)
    }

    pub fn find_periodic_orbits_on(&self, p: i64, q: u32, grid: usize) -> Result<Vec<PeriodicOrbit>> {
        if q == 0 {
            return Err(Error::InvalidParams("q must be positive".into()));
        }
        if gcd(p.unsigned_abs(), q as u64) != 1 {
            return Err(Error::InvalidParams(format!("p = {p} and q = {q} are not coprime")));
        }
        let n = grid.max(8);
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let gs: Vec<f64> = xs
            .iter()
            .map(|&x| self.orbit_residual(x, p, q))
            .collect::<Result<_>>()?;
        let mut roots_found: Vec<f64> = Vec::new();
        for i in 0..n {
            let (g0, g1) = (gs[i], gs[i + 1]);
            let r = if g0 == 0.0 {
                Some(xs[i])
            } else if g0.signum() != g1.signum() && g1 != 0.0 {
                let f = |x: f64| self.orbit_residual(x, p, q).unwrap_or(f64::NAN);
                let r = roots::bisect(f, xs[i], xs[i + 1], 1e-12)?;
                Some(self.polish(r, p, q, xs[i], xs[i + 1]))
            } else {
                None
            };
            if let Some(r) = r {
                let g = self.orbit_residual(r, p, q)?;
                if g.abs() <= 1e-10 {
                    roots_found.push(reduce(r).0);
                }
            }
        }
        let mut orbits: Vec<PeriodicOrbit> = Vec::new();
        roots_found.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for r in roots_found {
            let dup = orbits.iter().any(|o| {
                o.points.iter().any(|&pt| {
                    let d = (pt - r).abs();
                    d.min(1.0 - d) < 1e-8
                })
            });
            if dup {
                continue;
            }
            orbits.push(self.orbit_from(r, p, q)?);
        }
        Ok(orbits)
    }

    fn polish(&self, r: f64, p: i64, q: u32, lo: f64, hi: f64) -> f64 {
        let mut x = r;
        let mut g = match self.orbit_residual(x, p, q) {
            Ok(g) => g,
            Err(_) => return r,
        };
        for _ in 0..4 {
            let Ok((y, d)) = self.iterate_with_derivative(x, q as u64) else {
                break;
            };
            let dg = d - 1.0;
            if !dg.is_finite() || dg == 0.0 {
                break;
            }
            let xn = x - (y - x - p as f64) / dg;
            if !(xn >= lo && xn <= hi) {
                break;
            }
            match self.orbit_residual(xn, p, q) {
                Ok(gn) if gn.abs() < g.abs() => {
                    x = xn;
                    g = gn;
                }
                _ => break,
            }
        }
        x
    }

    fn orbit_from(&self, x0: f64, p: i64, q: u32) -> Result<PeriodicOrbit> {
        let mut points = Vec::with_capacity(q as usize);
        let mut y = x0;
        let mut mult = 1.0;
        for _ in 0..q {
            points.push(reduce(y).0);
            match self.eval_with_derivative(y) {
                Ok((y1, d)) => {
                    mult *= d;
                    y = y1;
                }
                Err(Error::SingularDerivative { .. }) => {
                    mult = f64::INFINITY;
                    y = self.eval(y)?;
                }
                Err(Error::Undefined { .. }) => {
                    mult = f64::NAN;
                    y = self.eval(y)?;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(PeriodicOrbit { p, q, points, multiplier: mult })
    }

    /// The `(p, q)` orbit with a point closest to `x_guess` on the circle.
    pub fn find_periodic_orbit(&self, p: i64, q: u32, x_guess: f64) -> Result<PeriodicOrbit> {
        let orbits = self.find_periodic_orbits(p, q)?;
        let g = reduce(x_guess).0;
        let dist = |o: &PeriodicOrbit| {
            o.points
                .iter()
                .map(|&pt| {
                    let d = (pt - g).abs();
                    d.min(1.0 - d)
                })
                .fold(f64::INFINITY, f64::min)
        };
        orbits
            .into_iter()
            .min_by(|a, b| dist(a).partial_cmp(&dist(b)).unwrap())
            .ok_or(Error::NotFound { p, q })
    }

    /// All discontinuities in `[0, 1)`.
    pub fn locate_gaps(&self) -> Vec<GapDescriptor> {
        self.locate_gaps_on(DEFAULT_GRID)
    }

    pub fn locate_gaps_on(&self, grid: usize) -> Vec<GapDescriptor> {
        let n = grid.max(8);
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| self.eval(x).unwrap_or(f64::NAN)).collect();
        let mut gaps: Vec<GapDescriptor> = Vec::new();
        for i in 0..n {
            let d = fs[i + 1] - fs[i];
            if !(d.abs() > JUMP_FLOOR) {
                continue;
            }
            if let Some(g) = self.gap_in_cell(xs[i], xs[i + 1], fs[i], fs[i + 1]) {
                let dup = gaps.iter().any(|h| {
                    let d = (h.x_gap - g.x_gap).abs();
                    d.min(1.0 - d) < 1e-9
                });
                if !dup {
                    gaps.push(g);
                }
            }
        }
        gaps.sort_by(|a, b| a.x_gap.partial_cmp(&b.x_gap).unwrap());
        gaps
    }

    /// Gaps inside `[lo, hi]` (lift coordinates); used to follow a known gap
    /// under parameter changes without a full scan.
    pub fn locate_gaps_in(&self, lo: f64, hi: f64, grid: usize) -> Vec<GapDescriptor> {
        let n = grid.max(4);
        let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| self.eval(x).unwrap_or(f64::NAN)).collect();
        let mut gaps = Vec::new();
        for i in 0..n {
            if let Some(g) = self.gap_in_cell(xs[i], xs[i + 1], fs[i], fs[i + 1]) {
                gaps.push(g);
            }
        }
        gaps
    }

    /// Follows the jump inside a cell by repeated halving, keeping the half
    /// with the larger increment. Smooth cells shrink their increment by two
    /// per halving and square-root cells by `sqrt(2)`; a jump keeps it.
    fn gap_in_cell(&self, lo0: f64, hi0: f64, flo0: f64, fhi0: f64) -> Option<GapDescriptor> {
        let (mut lo, mut hi, mut flo, mut fhi) = (lo0, hi0, flo0, fhi0);
        if !(flo.is_finite() && fhi.is_finite()) {
            return None;
        }
        loop {
            if (fhi - flo).abs() < 0.5 * GAP_MIN {
                return None;
            }
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            let fm = self.eval(m).ok()?;
            if (fm - flo).abs() >= (fhi - fm).abs() {
                hi = m;
                fhi = fm;
            } else {
                lo = m;
                flo = fm;
            }
        }
        let (xg, _) = reduce(hi);
        let left = self.one_sided_limit(xg, -1.0)?;
        let right = self.one_sided_limit(xg, 1.0)?;
        if (right - left).abs() < GAP_MIN {
            return None;
        }
        let sl = self.is_singular(xg, -1.0, left);
        let sr = self.is_singular(xg, 1.0, right);
        let singular_side = match (sl, sr) {
            (true, true) => SingularSide::Both,
            (true, false) => SingularSide::Left,
            (false, true) => SingularSide::Right,
            (false, false) => SingularSide::None,
        };
        Some(GapDescriptor {
            x_gap: xg,
            left_limit: left,
            right_limit: right,
            singular_side,
        })
    }

    /// Richardson extrapolation in `s = sqrt(δ)` of `F(x ± δ)`, exact for
    /// `L + A s + B s^2`.
    pub fn one_sided_limit(&self, x: f64, dir: f64) -> Option<f64> {
        let s = 1e-5;
        let f = |k: f64| self.eval(x + dir * (k * s).powi(2)).ok();
        let (f1, f2, f4) = (f(1.0)?, f(2.0)?, f(4.0)?);
        Some(8.0 / 3.0 * f1 - 2.0 * f2 + f4 / 3.0)
    }

    fn is_singular(&self, x: f64, dir: f64, limit: f64) -> bool {
        let q = |h: f64| {
            self.eval(x + dir * h)
                .map(|v| (v - limit).abs() / h)
                .unwrap_or(f64::NAN)
        };
        // A square-root side grows by sqrt(10) per decade, a finite slope
        // levels off; 1.5 separates the two.
        let (q6, q7, q8) = (q(1e-6), q(1e-7), q(1e-8));
        q8 > 1e3 && q8 > 1.5 * q7 && q7 > 1.5 * q6
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2(a: f64) -> Lift {
        CanonicalParams::new(2, a, 0.7, 0.5).unwrap().lift()
    }

    #[test]
    fn reduction_is_exact() {
        assert_eq!(reduce(2.25), (0.25, 2.0));
        assert_eq!(reduce(-0.25), (0.75, -1.0));
    }

    #[test]
    fn canonical_gap_at_integer() {
        let gaps = f2(0.4).locate_gaps();
        assert_eq!(gaps.len(), 1);
        let g = gaps[0];
        assert!(g.x_gap.abs() < 1e-12);
        assert!((g.left_limit - 0.1).abs() < 1e-6, "{g:?}");
        assert!((g.right_limit - 0.4).abs() < 1e-9);
        assert!((g.size() - 0.3).abs() < 1e-6);
        assert_eq!(g.singular_side, SingularSide::Left);
    }

    #[test]
    fn rigid_rotation_number() {
        let r = Lift::Rotation(0.25).rotation_number(0.1, 1000).unwrap();
        assert!((r.value - 0.25).abs() < 1e-15);
        assert!(Lift::Rotation(0.9).find_periodic_orbit(1, 1, 0.0).is_err());
    }

    #[test]
    fn single_fixed_point_below_unstable_collision() {
        let orbits = f2(0.15).find_periodic_orbits(0, 1).unwrap();
        assert_eq!(orbits.len(), 1);
        assert!(orbits[0].multiplier < 1.0);
    }

    #[test]
    fn stable_and_unstable_pair_inside_window() {
        let orbits = f2(0.33).find_periodic_orbits(0, 1).unwrap();
        assert_eq!(orbits.len(), 2);
        let mut m: Vec<f64> = orbits.iter().map(|o| o.multiplier).collect();
        m.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(m[0] < 1.0 && m[1] > 1.0);
    }

    #[test]
    fn rejects_non_coprime() {
        assert!(f2(0.2).find_periodic_orbits(2, 4).is_err());
    }

    #[test]
    fn sampled_lift_interpolates_periodically() {
        let s = SampledLift::new(vec![0.0, 0.5], vec![0.2, 0.6]).unwrap();
        let l = Lift::TorusReturn(Arc::new(s));
        assert!((l.eval(0.25).unwrap() - 0.4).abs() < 1e-15);
        assert!((l.eval(0.75).unwrap() - 0.9).abs() < 1e-15);
        assert!((l.eval(1.25).unwrap() - 1.4).abs() < 1e-15);
    }
}
