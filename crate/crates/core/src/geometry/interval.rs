use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` of reals with `lo <= hi`.
///
/// Arithmetic is performed in round-to-nearest; callers that need a strict
/// enclosure widen results with [`Interval::widen`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

/// Library of scalar nonlinearities admitted in state-update functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryFn {
    Sin,
    Cos,
    Square,
}

impl UnaryFn {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            UnaryFn::Sin => x.sin(),
            UnaryFn::Cos => x.cos(),
            UnaryFn::Square => x * x,
        }
    }

    pub fn is_transcendental(self) -> bool {
        matches!(self, UnaryFn::Sin | UnaryFn::Cos)
    }
}

impl fmt::Display for UnaryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Square => "square",
        };
        f.write_str(name)
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Builds `[min(a, b), max(a, b)]`.
    pub fn spanning(a: f64, b: f64) -> Self {
        Self {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Closed intervals sharing only an endpoint overlap.
    pub fn overlaps(&self, other: &Interval) -> bool {
        !(self.hi < other.lo || other.hi < self.lo)
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn add_scalar(self, c: f64) -> Interval {
        Interval {
            lo: self.lo + c,
            hi: self.hi + c,
        }
    }

    /// Image under `x -> k * x`; a negative factor swaps the endpoints.
    pub fn scale(self, k: f64) -> Interval {
        if k >= 0.0 {
            Interval {
                lo: k * self.lo,
                hi: k * self.hi,
            }
        } else {
            Interval {
                lo: k * self.hi,
                hi: k * self.lo,
            }
        }
    }

    pub fn relu(self) -> Interval {
        Interval {
            lo: self.lo.max(0.0),
            hi: self.hi.max(0.0),
        }
    }

    /// Moves both endpoints outward by `slack`.
    pub fn widen(self, slack: f64) -> Interval {
        Interval {
            lo: self.lo - slack,
            hi: self.hi + slack,
        }
    }

    /// Tight enclosure of `{f(x) | x in self}`.
    pub fn unary(self, f: UnaryFn) -> Interval {
        match f {
            UnaryFn::Sin => self.sin(),
            UnaryFn::Cos => self.cos(),
            UnaryFn::Square => self.square(),
        }
    }

    /// Like [`Interval::unary`], with `eps_round` added outward on
    /// transcendental enclosures and the result clipped to their range.
    pub fn unary_sound(self, f: UnaryFn, eps_round: f64) -> Interval {
        let tight = self.unary(f);
        if f.is_transcendental() {
            let w = tight.widen(eps_round);
            Interval {
                lo: w.lo.max(-1.0),
                hi: w.hi.min(1.0),
            }
        } else {
            tight
        }
    }

    fn square(self) -> Interval {
        let a = self.lo * self.lo;
        let b = self.hi * self.hi;
        if self.lo <= 0.0 && self.hi >= 0.0 {
            Interval {
                lo: 0.0,
                hi: a.max(b),
            }
        } else {
            Interval::spanning(a, b)
        }
    }

    fn sin(self) -> Interval {
        // sin(x) = cos(x - pi/2): maxima at pi/2 + 2k pi, minima at -pi/2 + 2k pi
        self.periodic_extrema(f64::sin, FRAC_PI_2, -FRAC_PI_2)
    }

    fn cos(self) -> Interval {
        self.periodic_extrema(f64::cos, 0.0, PI)
    }

    fn periodic_extrema(self, f: fn(f64) -> f64, max_at: f64, min_at: f64) -> Interval {
        if !self.is_finite() || self.width() >= TAU {
            return Interval { lo: -1.0, hi: 1.0 };
        }
        let (a, b) = (f(self.lo), f(self.hi));
        let mut out = Interval::spanning(a, b);
        if self.hits_phase(max_at) {
            out.hi = 1.0;
        }
        if self.hits_phase(min_at) {
            out.lo = -1.0;
        }
        out
    }

    /// Whether some `phase + 2k pi` lies in the interval.
    fn hits_phase(&self, phase: f64) -> bool {
        let k = ((self.lo - phase) / TAU).ceil();
        phase + k * TAU <= self.hi
    }
}

impl Add for Interval {
    type Output = Interval;

    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn rejects_inverted_and_nan() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
        assert!(Interval::new(0.0, 0.0).is_ok());
    }

    #[test]
    fn add_examples() {
        assert_eq!(iv(0.0, 1.0) + iv(2.0, 3.0), iv(2.0, 4.0));
        assert_eq!(iv(-1.0, 1.0) + iv(0.0, 0.0), iv(-1.0, 1.0));
        let r = iv(-0.5, 0.5) + iv(-0.1, 0.1);
        assert!((r.lo() + 0.6).abs() < 1e-15 && (r.hi() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn scale_examples() {
        assert_eq!(iv(1.0, 2.0).scale(3.0), iv(3.0, 6.0));
        assert_eq!(iv(1.0, 2.0).scale(-1.0), iv(-2.0, -1.0));
        let z = iv(-1.0, 1.0).scale(0.0);
        assert_eq!((z.lo(), z.hi()), (0.0, 0.0));
    }

    #[test]
    fn unary_examples() {
        let s = iv(0.0, PI).unary(UnaryFn::Sin);
        assert!(s.lo().abs() < 1e-15);
        assert_eq!(s.hi(), 1.0);

        assert_eq!(iv(-1.0, 2.0).unary(UnaryFn::Square), iv(0.0, 4.0));

        let s = iv(0.0, PI / 6.0).unary(UnaryFn::Sin);
        assert_eq!(s.lo(), 0.0);
        assert!((s.hi() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cos_across_minimum() {
        let c = iv(3.0, 3.5).unary(UnaryFn::Cos);
        assert_eq!(c.lo(), -1.0);
        assert!((c.hi() - 3.5f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn wide_intervals_cover_full_range() {
        assert_eq!(iv(-10.0, 10.0).unary(UnaryFn::Sin), iv(-1.0, 1.0));
        assert_eq!(iv(-10.0, 10.0).unary(UnaryFn::Cos), iv(-1.0, 1.0));
    }

    #[test]
    fn sound_variant_widens_transcendental_only() {
        let s = iv(0.0, PI / 6.0).unary_sound(UnaryFn::Sin, 1e-9);
        assert_eq!(s.lo(), -1e-9);
        assert!(s.hi() > 0.5);
        let s = iv(0.0, PI).unary_sound(UnaryFn::Sin, 1e-9);
        assert_eq!(s.hi(), 1.0);
        assert_eq!(
            iv(-1.0, 2.0).unary_sound(UnaryFn::Square, 1e-9),
            iv(0.0, 4.0)
        );
    }

    #[test]
    fn square_of_negative_interval() {
        assert_eq!(iv(-3.0, -2.0).unary(UnaryFn::Square), iv(4.0, 9.0));
    }
}
