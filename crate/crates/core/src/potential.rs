//! Piecewise-constant potentials that vanish at both infinities.

use crate::error::{contract, Result};

/// A constant-height slab on the half-open interval `[x_start, x_end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x_start: f64,
    pub x_end: f64,
    pub height: f64,
}

impl Segment {
    pub fn width(&self) -> f64 {
        self.x_end - self.x_start
    }
}

/// Ordered, non-overlapping segments; V = 0 outside all of them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PiecewisePotential {
    segments: Vec<Segment>,
}

/// One interval of the real line between the outermost barrier edges,
/// gaps included with height 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x_start: f64,
    pub x_end: f64,
    pub height: f64,
}

impl PiecewisePotential {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for s in &segments {
            if !(s.x_start.is_finite() && s.x_end.is_finite() && s.height.is_finite()) {
                return Err(contract("segment coordinates and heights must be finite"));
            }
            if !(s.x_start < s.x_end) {
                return Err(contract(format!(
                    "segment [{}, {}) has non-positive width",
                    s.x_start, s.x_end
                )));
            }
        }
        for w in segments.windows(2) {
            if w[1].x_start < w[0].x_end {
                return Err(contract(format!(
                    "segments [{}, {}) and [{}, {}) overlap or are out of order",
                    w[0].x_start, w[0].x_end, w[1].x_start, w[1].x_end
                )));
            }
        }
        Ok(Self { segments })
    }

    /// No barrier at all.
    pub fn free() -> Self {
        Self::default()
    }

    /// A single barrier of height `v0` on (0, a).
    pub fn rectangular(v0: f64, a: f64) -> Result<Self> {
        if !(v0 > 0.0) || !(a > 0.0) {
            return Err(contract(format!("rectangular barrier needs V0 > 0 and a > 0, got V0 = {v0}, a = {a}")));
        }
        Self::new(vec![Segment {
            x_start: 0.0,
            x_end: a,
            height: v0,
        }])
    }

    /// Two equal barriers on (0, a) and (L, L + a).
    pub fn double_rectangular(v0: f64, a: f64, l: f64) -> Result<Self> {
        if !(v0 > 0.0) || !(a > 0.0) {
            return Err(contract("double barrier needs V0 > 0 and a > 0"));
        }
        if !(l >= a) {
            return Err(contract(format!("second barrier start L = {l} overlaps the first barrier (a = {a})")));
        }
        Self::new(vec![
            Segment {
                x_start: 0.0,
                x_end: a,
                height: v0,
            },
            Segment {
                x_start: l,
                x_end: l + a,
                height: v0,
            },
        ])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_free(&self) -> bool {
        self.segments.is_empty()
    }

    /// V(x), with the segment's left edge included and right edge excluded.
    pub fn value_at(&self, x: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| x >= s.x_start && x < s.x_end)
            .map_or(0.0, |s| s.height)
    }

    pub fn left_edge(&self) -> Option<f64> {
        self.segments.first().map(|s| s.x_start)
    }

    pub fn right_edge(&self) -> Option<f64> {
        self.segments.last().map(|s| s.x_end)
    }

    /// Distance between the outermost barrier edges.
    pub fn total_width(&self) -> f64 {
        match (self.left_edge(), self.right_edge()) {
            (Some(l), Some(r)) => r - l,
            _ => 0.0,
        }
    }

    pub fn max_height(&self) -> f64 {
        self.segments.iter().map(|s| s.height).fold(0.0, f64::max)
    }

    /// Lowest strictly positive segment height, if any.
    pub fn min_barrier_height(&self) -> Option<f64> {
        self.segments
            .iter()
            .map(|s| s.height)
            .filter(|h| *h > 0.0)
            .min_by(f64::total_cmp)
    }

    /// Contiguous regions from the left to the right edge, gaps filled with V = 0.
    pub fn regions(&self) -> Vec<Region> {
        let mut out = Vec::with_capacity(2 * self.segments.len());
        let mut cursor: Option<f64> = None;
        for s in &self.segments {
            if let Some(c) = cursor {
                if s.x_start > c {
                    out.push(Region {
                        x_start: c,
                        x_end: s.x_start,
                        height: 0.0,
                    });
                }
            }
            out.push(Region {
                x_start: s.x_start,
                x_end: s.x_end,
                height: s.height,
            });
            cursor = Some(s.x_end);
        }
        out
    }

    /// Reflection x → −x.
    pub fn mirrored(&self) -> Self {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment {
                x_start: -s.x_end,
                x_end: -s.x_start,
                height: s.height,
            })
            .collect();
        Self { segments }
    }

    /// Translation by `d`.
    pub fn shifted(&self, d: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                x_start: s.x_start + d,
                x_end: s.x_end + d,
                height: s.height,
            })
            .collect();
        Self { segments }
    }

    /// Adds `dv` to V(x) on `[x_lo, x_hi)`, splitting segments and filling gaps as needed.
    pub fn with_offset(&self, x_lo: f64, x_hi: f64, dv: f64) -> Result<Self> {
        if !(x_hi > x_lo) {
            return Err(contract("offset interval must have positive width"));
        }
        let mut cuts: Vec<f64> = vec![x_lo, x_hi];
        for s in &self.segments {
            cuts.push(s.x_start);
            cuts.push(s.x_end);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut segments = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let inside_offset = mid >= x_lo && mid < x_hi;
            let inside_segment = self.segments.iter().any(|s| mid >= s.x_start && mid < s.x_end);
            if !(inside_offset || inside_segment) {
                continue;
            }
            let height = self.value_at(mid) + if inside_offset { dv } else { 0.0 };
            segments.push(Segment {
                x_start: lo,
                x_end: hi,
                height,
            });
        }
        Self::new(segments)
    }

    /// True when V(c + x) = V(c − x) about the midpoint of the outer edges.
    pub fn is_symmetric(&self) -> bool {
        let (Some(l), Some(r)) = (self.left_edge(), self.right_edge()) else {
            return true;
        };
        let mirrored = self.mirrored().shifted(l + r);
        let tol = 1e-12 * (r - l).abs().max(1.0);
        mirrored.segments.len() == self.segments.len()
            && mirrored.segments.iter().zip(&self.segments).all(|(m, s)| {
                (m.x_start - s.x_start).abs() <= tol && (m.x_end - s.x_end).abs() <= tol && m.height == s.height
            })
    }
}

/// Reference points before and after the barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionMarkers {
    pub x_i: f64,
    pub x_f: f64,
}

impl RegionMarkers {
    pub fn new(x_i: f64, x_f: f64) -> Result<Self> {
        if !(x_i.is_finite() && x_f.is_finite()) || x_f < x_i {
            return Err(contract(format!("markers need finite x_i ≤ x_f, got ({x_i}, {x_f})")));
        }
        Ok(Self { x_i, x_f })
    }

    /// The outer barrier edges themselves.
    pub fn barrier_edges(pot: &PiecewisePotential) -> Result<Self> {
        match (pot.left_edge(), pot.right_edge()) {
            (Some(l), Some(r)) => Self::new(l, r),
            _ => Err(contract("free potential has no barrier edges")),
        }
    }

    /// x_i before and x_f after every segment.
    pub fn check_transmission(&self, pot: &PiecewisePotential) -> Result<()> {
        if let (Some(l), Some(r)) = (pot.left_edge(), pot.right_edge()) {
            if self.x_i > l || self.x_f < r {
                return Err(contract(format!(
                    "transmission markers ({}, {}) must bracket the barrier [{l}, {r}]",
                    self.x_i, self.x_f
                )));
            }
        }
        Ok(())
    }

    /// x_i before the barrier, x_f strictly inside its span.
    pub fn check_penetration(&self, pot: &PiecewisePotential) -> Result<()> {
        match (pot.left_edge(), pot.right_edge()) {
            (Some(l), Some(r)) if self.x_i <= l && self.x_f > l && self.x_f < r => Ok(()),
            _ => Err(contract(format!(
                "penetration markers ({}, {}) need x_i before the barrier and x_f inside it",
                self.x_i, self.x_f
            ))),
        }
    }

    pub fn length(&self) -> f64 {
        self.x_f - self.x_i
    }
}
