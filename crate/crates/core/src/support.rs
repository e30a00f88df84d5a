//! Axis-aligned support bounds.
//!
//! On the prequantized space the circle coordinate is never bounded: a box
//! there constrains only the `(x, y)` block and spans the whole circle.

use crate::space::Space;

#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        AxisBox { lo, hi }
    }

    /// The cube `[c - r, c + r]` on every axis; for prequantized spaces the
    /// circle axis is set to `[0, 1]`.
    pub fn ball_hull(space: Space, center: &[f64], radius: f64) -> Self {
        let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
        let mut b = AxisBox { lo, hi };
        b.fix_circle(space);
        b
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn side(&self, k: usize) -> f64 {
        self.hi[k] - self.lo[k]
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn fix_circle(&mut self, space: Space) {
        if let Space::Prequantized(n) = space {
            self.lo[2 * n] = 0.0;
            self.hi[2 * n] = 1.0;
        }
    }

    /// Closed containment, ignoring the circle axis on prequantized spaces.
    pub fn contains(&self, space: Space, p: &[f64]) -> bool {
        let skip = if space.is_prequantized() {
            space.z_index()
        } else {
            None
        };
        p.iter().enumerate().all(|(k, &v)| {
            Some(k) == skip || (v >= self.lo[k] && v <= self.hi[k])
        })
    }

    /// Grow every non-circle side by `rel` of its length plus `abs`.
    pub fn inflate(&self, space: Space, rel: f64, abs: f64) -> Self {
        let mut b = AxisBox {
            lo: self
                .lo
                .iter()
                .zip(&self.hi)
                .map(|(l, h)| l - rel * (h - l) - abs)
                .collect(),
            hi: self
                .lo
                .iter()
                .zip(&self.hi)
                .map(|(l, h)| h + rel * (h - l) + abs)
                .collect(),
        };
        b.fix_circle(space);
        b
    }

    pub fn union_hull(&self, other: &AxisBox) -> AxisBox {
        AxisBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn intersects(&self, space: Space, other: &AxisBox) -> bool {
        let skip = if space.is_prequantized() {
            space.z_index()
        } else {
            None
        };
        (0..self.dim()).all(|k| {
            Some(k) == skip || (self.lo[k] <= other.hi[k] && other.lo[k] <= self.hi[k])
        })
    }

    /// Largest distance from the origin of a point in the box (circle axis ignored
    /// on prequantized spaces).
    pub fn max_radius(&self, space: Space) -> f64 {
        let skip = if space.is_prequantized() {
            space.z_index()
        } else {
            None
        };
        (0..self.dim())
            .filter(|k| Some(*k) != skip)
            .map(|k| {
                let m = self.lo[k].abs().max(self.hi[k].abs());
                m * m
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Corners and a small interior lattice; used to bound images of the box.
    pub fn sample_lattice(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let m = per_axis.max(2);
        let total = m.pow(d as u32);
        (0..total)
            .map(|mut idx| {
                (0..d)
                    .map(|k| {
                        let j = idx % m;
                        idx /= m;
                        self.lo[k] + self.side(k) * j as f64 / (m - 1) as f64
                    })
                    .collect()
            })
            .collect()
    }
}

/// Where a map may differ from the identity.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    /// Outside the union of the boxes the map is the identity.
    Compact(Vec<AxisBox>),
    Unbounded,
}

impl Support {
    pub fn empty() -> Self {
        Support::Compact(Vec::new())
    }

    pub fn boxed(b: AxisBox) -> Self {
        Support::Compact(vec![b])
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Support::Compact(v) if v.is_empty())
    }

    pub fn contains(&self, space: Space, p: &[f64]) -> bool {
        match self {
            Support::Compact(boxes) => boxes.iter().any(|b| b.contains(space, p)),
            Support::Unbounded => true,
        }
    }

    pub fn union(&self, other: &Support) -> Support {
        match (self, other) {
            (Support::Compact(a), Support::Compact(b)) => {
                let mut v = a.clone();
                v.extend(b.iter().cloned());
                Support::Compact(v)
            }
            _ => Support::Unbounded,
        }
    }

    pub fn boxes(&self) -> Option<&[AxisBox]> {
        match self {
            Support::Compact(v) => Some(v),
            Support::Unbounded => None,
        }
    }

    /// Radius of a centered ball containing the support.
    pub fn radius(&self, space: Space) -> f64 {
        match self {
            Support::Compact(v) => v.iter().map(|b| b.max_radius(space)).fold(0.0, f64::max),
            Support::Unbounded => f64::INFINITY,
        }
    }

    /// Single box containing every component, if compact and nonempty.
    pub fn hull(&self) -> Option<AxisBox> {
        let boxes = self.boxes()?;
        let mut it = boxes.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, b| acc.union_hull(b)))
    }
}
