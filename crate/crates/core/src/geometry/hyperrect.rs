use std::fmt;

use super::Interval;
use crate::error::{check_dim, Error, Result};

/// Axis-aligned closed box in `R^n`, or the empty set of that dimension.
#[derive(Clone, Debug, PartialEq)]
pub enum Hyperrect {
    Empty { dim: usize },
    Bounded(Vec<Interval>),
}

impl Hyperrect {
    pub fn new(intervals: Vec<Interval>) -> Self {
        Hyperrect::Bounded(intervals)
    }

    pub fn empty(dim: usize) -> Self {
        Hyperrect::Empty { dim }
    }

    pub fn from_bounds(lower: &[f64], upper: &[f64]) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        let intervals = lower
            .iter()
            .zip(upper)
            .map(|(&lo, &hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Hyperrect::Bounded(intervals))
    }

    /// Degenerate box holding a single point.
    pub fn point(x: &[f64]) -> Self {
        Hyperrect::Bounded(x.iter().map(|&v| Interval::point(v)).collect())
    }

    /// `[-r, r]^dim`.
    pub fn cube(dim: usize, r: f64) -> Self {
        Hyperrect::Bounded(vec![Interval::spanning(-r, r); dim])
    }

    pub fn dim(&self) -> usize {
        match self {
            Hyperrect::Empty { dim } => *dim,
            Hyperrect::Bounded(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Hyperrect::Empty { .. })
    }

    pub fn intervals(&self) -> Option<&[Interval]> {
        match self {
            Hyperrect::Empty { .. } => None,
            Hyperrect::Bounded(v) => Some(v),
        }
    }

    pub(crate) fn require_intervals(&self) -> Result<&[Interval]> {
        self.intervals().ok_or(Error::EmptyBox)
    }

    pub fn lower(&self) -> Option<Vec<f64>> {
        self.intervals()
            .map(|v| v.iter().map(Interval::lo).collect())
    }

    pub fn upper(&self) -> Option<Vec<f64>> {
        self.intervals()
            .map(|v| v.iter().map(Interval::hi).collect())
    }

    pub fn center(&self) -> Option<Vec<f64>> {
        self.intervals()
            .map(|v| v.iter().map(Interval::mid).collect())
    }

    pub fn radii(&self) -> Option<Vec<f64>> {
        self.intervals()
            .map(|v| v.iter().map(Interval::radius).collect())
    }

    pub fn widths(&self) -> Option<Vec<f64>> {
        self.intervals()
            .map(|v| v.iter().map(Interval::width).collect())
    }

    /// Largest side length; zero for the empty box.
    pub fn max_width(&self) -> f64 {
        self.intervals()
            .map(|v| v.iter().map(Interval::width).fold(0.0, f64::max))
            .unwrap_or(0.0)
    }

    pub fn min_width(&self) -> f64 {
        self.intervals()
            .map(|v| v.iter().map(Interval::width).fold(f64::INFINITY, f64::min))
            .unwrap_or(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.intervals()
            .map(|v| v.iter().all(Interval::is_finite))
            .unwrap_or(true)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        match self.intervals() {
            None => false,
            Some(v) => v.len() == x.len() && v.iter().zip(x).all(|(i, &xi)| i.contains(xi)),
        }
    }

    /// `inner ⊆ self`. The empty box is contained in everything.
    pub fn contains(&self, inner: &Hyperrect) -> Result<bool> {
        check_dim(self.dim(), inner.dim())?;
        Ok(match (self.intervals(), inner.intervals()) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(o), Some(i)) => o.iter().zip(i).all(|(o, i)| o.contains_interval(i)),
        })
    }

    /// True iff the closed boxes share no point.
    pub fn disjoint(&self, other: &Hyperrect) -> Result<bool> {
        check_dim(self.dim(), other.dim())?;
        Ok(match (self.intervals(), other.intervals()) {
            (Some(a), Some(b)) => a.iter().zip(b).any(|(a, b)| !a.overlaps(b)),
            _ => true,
        })
    }

    pub fn hull(&self, other: &Hyperrect) -> Result<Hyperrect> {
        check_dim(self.dim(), other.dim())?;
        Ok(match (self.intervals(), other.intervals()) {
            (None, _) => other.clone(),
            (_, None) => self.clone(),
            (Some(a), Some(b)) => {
                Hyperrect::Bounded(a.iter().zip(b).map(|(a, b)| a.hull(b)).collect())
            }
        })
    }

    pub fn intersect(&self, other: &Hyperrect) -> Result<Hyperrect> {
        check_dim(self.dim(), other.dim())?;
        let dim = self.dim();
        let (Some(a), Some(b)) = (self.intervals(), other.intervals()) else {
            return Ok(Hyperrect::empty(dim));
        };
        let meet: Option<Vec<Interval>> = a.iter().zip(b).map(|(a, b)| a.intersect(b)).collect();
        Ok(meet.map_or(Hyperrect::empty(dim), Hyperrect::Bounded))
    }

    /// Splits at the midpoint of the widest side (lowest index on ties).
    /// Returns `None` for the empty box.
    pub fn bisect(&self) -> Option<(Hyperrect, Hyperrect)> {
        let v = self.intervals()?;
        let mut axis = 0;
        for (i, iv) in v.iter().enumerate() {
            if iv.width() > v[axis].width() {
                axis = i;
            }
        }
        let split = v[axis];
        let mid = split.mid().clamp(split.lo(), split.hi());
        let mut left = v.to_vec();
        let mut right = v.to_vec();
        left[axis] = Interval::spanning(split.lo(), mid);
        right[axis] = Interval::spanning(mid, split.hi());
        Some((Hyperrect::Bounded(left), Hyperrect::Bounded(right)))
    }

    /// Every side moved outward by `slack`.
    pub fn widen(&self, slack: f64) -> Hyperrect {
        match self {
            Hyperrect::Empty { .. } => self.clone(),
            Hyperrect::Bounded(v) => Hyperrect::Bounded(v.iter().map(|i| i.widen(slack)).collect()),
        }
    }

    /// `sum_i width_i(self) / width_i(reference)`; sides where the reference
    /// is degenerate contribute nothing. Zero for the empty box.
    pub fn normalized_perimeter(&self, reference: &Hyperrect) -> f64 {
        let (Some(a), Some(r)) = (self.intervals(), reference.intervals()) else {
            return 0.0;
        };
        a.iter()
            .zip(r)
            .filter(|(_, r)| r.width() > 0.0)
            .map(|(a, r)| a.width() / r.width())
            .sum()
    }

    /// Corner points, deduplicated along degenerate sides.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let Some(v) = self.intervals() else {
            return Vec::new();
        };
        let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(v.len())];
        for iv in v {
            let ends: &[f64] = if iv.width() == 0.0 {
                &[iv.lo()][..]
            } else {
                &[iv.lo(), iv.hi()][..]
            };
            out = out
                .into_iter()
                .flat_map(|p| {
                    ends.iter().map(move |&e| {
                        let mut q = p.clone();
                        q.push(e);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

impl fmt::Display for Hyperrect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hyperrect::Empty { dim } => write!(f, "empty({dim})"),
            Hyperrect::Bounded(v) => {
                for (i, iv) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" x ")?;
                    }
                    write!(f, "{iv}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(lo: &[f64], hi: &[f64]) -> Hyperrect {
        Hyperrect::from_bounds(lo, hi).unwrap()
    }

    #[test]
    fn containment() {
        let outer = Hyperrect::cube(2, 1.0);
        assert!(outer.contains(&Hyperrect::cube(2, 0.5)).unwrap());
        assert!(!bx(&[-1.0], &[1.0]).contains(&bx(&[-1.1], &[0.0])).unwrap());
        assert!(outer.contains(&Hyperrect::empty(2)).unwrap());
        assert!(Hyperrect::empty(2).contains(&Hyperrect::empty(2)).unwrap());
        assert!(matches!(
            outer.contains(&Hyperrect::cube(3, 0.1)),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn disjointness() {
        assert!(bx(&[0.0], &[1.0]).disjoint(&bx(&[2.0], &[3.0])).unwrap());
        assert!(!bx(&[0.0, 0.0], &[1.0, 1.0])
            .disjoint(&bx(&[0.5, 0.5], &[2.0, 2.0]))
            .unwrap());
        // shared boundary point counts as overlap
        assert!(!bx(&[0.0], &[1.0]).disjoint(&bx(&[1.0], &[2.0])).unwrap());
        assert!(Hyperrect::empty(1).disjoint(&bx(&[0.0], &[1.0])).unwrap());
        assert!(bx(&[0.0], &[1.0])
            .disjoint(&Hyperrect::cube(2, 1.0))
            .is_err());
    }

    #[test]
    fn bisection() {
        let (l, r) = bx(&[0.0, 0.0], &[4.0, 1.0]).bisect().unwrap();
        assert_eq!(l, bx(&[0.0, 0.0], &[2.0, 1.0]));
        assert_eq!(r, bx(&[2.0, 0.0], &[4.0, 1.0]));

        let (l, _) = bx(&[0.0, 0.0], &[2.0, 2.0]).bisect().unwrap();
        assert_eq!(l, bx(&[0.0, 0.0], &[1.0, 2.0]));

        let (l, r) = bx(&[0.0], &[1.0]).bisect().unwrap();
        assert_eq!((l, r), (bx(&[0.0], &[0.5]), bx(&[0.5], &[1.0])));

        assert!(Hyperrect::empty(3).bisect().is_none());
    }

    #[test]
    fn hulls() {
        assert_eq!(
            bx(&[0.0], &[1.0]).hull(&bx(&[2.0], &[3.0])).unwrap(),
            bx(&[0.0], &[3.0])
        );
        let b = bx(&[0.0, -1.0], &[1.0, 2.0]);
        assert_eq!(b.hull(&Hyperrect::empty(2)).unwrap(), b);
        assert_eq!(Hyperrect::empty(2).hull(&b).unwrap(), b);
        assert_eq!(
            bx(&[0.0, 0.0], &[1.0, 1.0])
                .hull(&bx(&[0.5, -1.0], &[2.0, 0.0]))
                .unwrap(),
            bx(&[0.0, -1.0], &[2.0, 1.0])
        );
    }

    #[test]
    fn intersection() {
        let a = bx(&[0.0, 0.0], &[2.0, 2.0]);
        assert_eq!(
            a.intersect(&bx(&[1.0, -1.0], &[3.0, 1.0])).unwrap(),
            bx(&[1.0, 0.0], &[2.0, 1.0])
        );
        assert!(a
            .intersect(&bx(&[3.0, 0.0], &[4.0, 1.0]))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn corners_dedupe_degenerate_sides() {
        assert_eq!(bx(&[0.0, 1.0], &[1.0, 1.0]).corners().len(), 2);
        assert_eq!(Hyperrect::cube(3, 1.0).corners().len(), 8);
        assert_eq!(
            Hyperrect::point(&[0.0, 0.0]).corners(),
            vec![vec![0.0, 0.0]]
        );
    }

    #[test]
    fn normalized_perimeter_of_half_box() {
        let over = bx(&[0.0, 0.0], &[2.0, 4.0]);
        let inner = bx(&[0.0, 0.0], &[1.0, 4.0]);
        assert_eq!(inner.normalized_perimeter(&over), 1.5);
        assert_eq!(Hyperrect::empty(2).normalized_perimeter(&over), 0.0);
    }
}
