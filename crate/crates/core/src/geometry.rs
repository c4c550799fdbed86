//! Axis-aligned boxes and the measures the insertion policies are built on.
//!
//! Boxes are closed: two boxes sharing only a boundary intersect, but their
//! overlap area is zero.

use std::fmt;

use crate::error::{Error, Result};

/// A `D`-dimensional axis-aligned box with `lo[i] <= hi[i]` on every axis.
#[derive(Clone, Copy, PartialEq)]
pub struct Rect<const D: usize> {
    lo: [f64; D],
    hi: [f64; D],
}

impl<const D: usize> fmt::Debug for Rect<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rect({:?}..{:?})", self.lo, self.hi)
    }
}

impl<const D: usize> Rect<D> {
    /// Builds a box, rejecting inverted or non-finite bounds.
    pub fn new(lo: [f64; D], hi: [f64; D]) -> Result<Self> {
        for axis in 0..D {
            if !lo[axis].is_finite() || !hi[axis].is_finite() {
                return Err(Error::InvalidRect(format!(
                    "non-finite bound on axis {axis}"
                )));
            }
            if lo[axis] > hi[axis] {
                return Err(Error::InvalidRect(format!(
                    "lo {} > hi {} on axis {axis}",
                    lo[axis], hi[axis]
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Degenerate box covering a single point.
    pub fn point(p: [f64; D]) -> Self {
        Self { lo: p, hi: p }
    }

    /// Box of side lengths `sides` centered at `center`.
    pub fn centered(center: [f64; D], sides: [f64; D]) -> Self {
        let mut lo = center;
        let mut hi = center;
        for axis in 0..D {
            let half = sides[axis].abs() * 0.5;
            lo[axis] -= half;
            hi[axis] += half;
        }
        Self { lo, hi }
    }

    pub fn lo(&self) -> &[f64; D] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64; D] {
        &self.hi
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn center(&self) -> [f64; D] {
        let mut c = [0.0; D];
        for (axis, v) in c.iter_mut().enumerate() {
            *v = 0.5 * (self.lo[axis] + self.hi[axis]);
        }
        c
    }

    /// Product of side lengths; zero for degenerate boxes.
    pub fn area(&self) -> f64 {
        (0..D).map(|axis| self.extent(axis)).product()
    }

    /// Sum of side lengths (the generalized semi-perimeter).
    pub fn margin(&self) -> f64 {
        (0..D).map(|axis| self.extent(axis)).sum()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = *self;
        out.expand(other);
        out
    }

    /// Grows `self` in place to cover `other`.
    pub fn expand(&mut self, other: &Self) {
        for axis in 0..D {
            if other.lo[axis] < self.lo[axis] {
                self.lo[axis] = other.lo[axis];
            }
            if other.hi[axis] > self.hi[axis] {
                self.hi[axis] = other.hi[axis];
            }
        }
    }

    /// Closed-box intersection test.
    pub fn intersects(&self, other: &Self) -> bool {
        (0..D).all(|axis| self.lo[axis] <= other.hi[axis] && other.lo[axis] <= self.hi[axis])
    }

    pub fn contains(&self, other: &Self) -> bool {
        (0..D).all(|axis| self.lo[axis] <= other.lo[axis] && other.hi[axis] <= self.hi[axis])
    }

    pub fn overlap_area(&self, other: &Self) -> f64 {
        let mut area = 1.0;
        for axis in 0..D {
            let lo = self.lo[axis].max(other.lo[axis]);
            let hi = self.hi[axis].min(other.hi[axis]);
            if hi <= lo {
                return 0.0;
            }
            area *= hi - lo;
        }
        area
    }

    /// Area gained by growing `self` to cover `other`.
    pub fn enlargement(&self, other: &Self) -> f64 {
        self.union(other).area() - self.area()
    }

    /// Squared minimum Euclidean distance from `p` to this box (MINDIST).
    pub fn min_dist_sq(&self, p: &[f64; D]) -> f64 {
        let mut acc = 0.0;
        for axis in 0..D {
            let d = if p[axis] < self.lo[axis] {
                self.lo[axis] - p[axis]
            } else if p[axis] > self.hi[axis] {
                p[axis] - self.hi[axis]
            } else {
                0.0
            };
            acc += d * d;
        }
        acc
    }

    /// Multiplies every coordinate by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut lo = self.lo;
        let mut hi = self.hi;
        for axis in 0..D {
            lo[axis] *= factor;
            hi[axis] *= factor;
        }
        if factor < 0.0 {
            std::mem::swap(&mut lo, &mut hi);
        }
        Self { lo, hi }
    }
}

/// Union of a non-empty sequence of boxes.
pub fn union_all<'a, const D: usize, I>(rects: I) -> Option<Rect<D>>
where
    I: IntoIterator<Item = &'a Rect<D>>,
{
    let mut iter = rects.into_iter();
    let mut acc = *iter.next()?;
    for r in iter {
        acc.expand(r);
    }
    Some(acc)
}
