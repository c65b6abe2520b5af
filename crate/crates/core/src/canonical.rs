//! The canonical square-root family
//!
//! `F_n(x) = a + b(1 - c1 s + (c1 - 1) s^n)`, `s = sqrt(1 - x)` on `[0, 1)`,
//! with `c1 = (n b - 2c)/((n - 1) b)`. The map has `F_n(0) = a`,
//! `F_n'(0) = c` and a jump of size `1 - b` at the integers, approached
//! with an infinite derivative from the left.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::Lift;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalParams {
    pub n: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CanonicalParams {
    /// Validated constructor: `n >= 2`, `b` in `(0, 1)`, `0 <= c < n b / 2`.
    ///
    /// `a` is not restricted so that parameter sweeps may cross several
    /// rotation numbers; `a` and `a + 1` describe the same circle map.
    pub fn new(n: u32, a: f64, b: f64, c: f64) -> Result<Self> {
        let p = CanonicalParams { n, a, b, c };
        p.validate(false)?;
        Ok(p)
    }

    /// The degenerate member `c = n b / 2` where `c1 = 0` and the square-root
    /// term vanishes.
    pub fn new_degenerate(n: u32, a: f64, b: f64) -> Result<Self> {
        let p = CanonicalParams {
            n,
            a,
            b,
            c: n as f64 * b / 2.0,
        };
        p.validate(true)?;
        Ok(p)
    }

    fn validate(&self, allow_degenerate: bool) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!("n = {} must be >= 2", self.n)));
        }
        if !(self.b > 0.0 && self.b < 1.0) {
            return Err(Error::InvalidParams(format!("b = {} must lie in (0, 1)", self.b)));
        }
        if !self.a.is_finite() {
            return Err(Error::InvalidParams("a must be finite".into()));
        }
        let c_max = self.n as f64 * self.b / 2.0;
        let c_ok = if allow_degenerate {
            self.c >= 0.0 && self.c <= c_max
        } else {
            self.c >= 0.0 && self.c < c_max
        };
        if !c_ok {
            return Err(Error::InvalidParams(format!(
                "c = {} must lie in [0, n b / 2 = {c_max})",
                self.c
            )));
        }
        Ok(())
    }

    pub fn c1(&self) -> f64 {
        let n = self.n as f64;
        (n * self.b - 2.0 * self.c) / ((n - 1.0) * self.b)
    }

    /// `F_n` on the fundamental domain `[0, 1]`; `x = 1` returns the left
    /// limit `a + b`.
    pub fn eval_unit(&self, x: f64) -> f64 {
        let s = (1.0 - x).max(0.0).sqrt();
        if s == 0.0 {
            return self.a + self.b;
        }
        let c1 = self.c1();
        self.a + self.b * (1.0 - c1 * s + (c1 - 1.0) * s.powi(self.n as i32))
    }

    /// `F_n'` on `[0, 1)`. Diverges like `b c1 / (2 sqrt(1 - x))` at the right end.
    pub fn derivative_unit(&self, x: f64) -> Result<f64> {
        let s = (1.0 - x).max(0.0).sqrt();
        let c1 = self.c1();
        let n = self.n as f64;
        if s == 0.0 {
            if c1 == 0.0 {
                return Ok(0.0);
            }
            return Err(Error::SingularDerivative { x });
        }
        Ok(self.b / (2.0 * s) * (c1 + (1.0 - c1) * n * s.powi(self.n as i32 - 1)))
    }

    pub fn lift(&self) -> Lift {
        Lift::Canonical(*self)
    }
}

pub fn make_canonical(params: CanonicalParams) -> Result<Lift> {
    let allow = params.c == params.n as f64 * params.b / 2.0;
    params.validate(allow)?;
    Ok(Lift::Canonical(params))
}

/// Closed-form bifurcation values of the `(0, 1)` tongue of `F_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct F2Structure {
    /// Border collision creating the stable fixed point.
    pub bc_stable_a: f64,
    /// Border collision creating the unstable fixed point.
    pub bc_unstable_a: f64,
    /// Saddle-node destroying both.
    pub sn_a: f64,
}

pub fn f2_bifurcation_structure(b: f64, c: f64) -> Result<F2Structure> {
    if !(b > 0.0 && b < 1.0) || !(c >= 0.0 && c < b) {
        return Err(Error::InvalidParams(format!(
            "need 0 <= c < b < 1, got b = {b}, c = {c}"
        )));
    }
    Ok(F2Structure {
        bc_stable_a: 0.0,
        bc_unstable_a: 1.0 - b,
        sn_a: 1.0 - b + (b - c).powi(2) / (1.0 + b - 2.0 * c),
    })
}

/// Partial derivatives of `F_n(x)` with respect to the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamPartials {
    pub da: f64,
    pub db: f64,
    pub dc: f64,
}

pub fn parameter_monotonicity_check(params: &CanonicalParams, x: f64) -> ParamPartials {
    let n = params.n as f64;
    let s = (1.0 - x).max(0.0).sqrt();
    let sn = s.powi(params.n as i32);
    ParamPartials {
        da: 1.0,
        db: (n - 1.0 - n * s + sn) / (n - 1.0),
        dc: 2.0 * s * (1.0 - s.powi(params.n as i32 - 1)) / (n - 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> CanonicalParams {
        CanonicalParams::new(2, 0.4, 0.7, 0.5).unwrap()
    }

    #[test]
    fn value_and_slope_at_origin() {
        let p = f2();
        assert_eq!(p.eval_unit(0.0), 0.4);
        assert!((p.derivative_unit(0.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn left_limit_at_one() {
        let p = f2();
        assert!((p.eval_unit(1.0 - 1e-14) - 1.1).abs() < 1e-6);
        assert!((p.eval_unit(1.0) - 1.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CanonicalParams::new(2, 0.1, 1.0, 0.2).is_err());
        assert!(CanonicalParams::new(2, 0.1, 0.7, 0.7).is_err());
        assert!(CanonicalParams::new(1, 0.1, 0.7, 0.1).is_err());
        assert!(CanonicalParams::new_degenerate(2, 0.1, 0.7).is_ok());
    }

    #[test]
    fn degenerate_member_has_no_root_singularity() {
        let p = CanonicalParams::new_degenerate(3, 0.2, 0.6).unwrap();
        assert_eq!(p.c1(), 0.0);
        let d = p.derivative_unit(1.0 - 1e-12).unwrap();
        assert!(d.abs() < 1e-6);
    }

    #[test]
    fn f2_structure_values() {
        let s = f2_bifurcation_structure(0.7, 0.5).unwrap();
        assert_eq!(s.bc_stable_a, 0.0);
        assert!((s.bc_unstable_a - 0.3).abs() < 1e-15);
        assert!((s.sn_a - (0.3 + 0.04 / 0.7)).abs() < 1e-15);
        assert!(f2_bifurcation_structure(0.7, 0.7).is_err());
    }

    #[test]
    fn partials_vanish_in_c_at_origin() {
        let p = CanonicalParams::new(5, 0.5, 0.9, 1.2).unwrap();
        let d = parameter_monotonicity_check(&p, 0.0);
        assert_eq!(d.da, 1.0);
        assert!(d.dc.abs() < 1e-15);
    }
}
