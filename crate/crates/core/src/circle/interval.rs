use serde::{Deserialize, Serialize};

use super::frac;
use crate::error::{invalid, Result};

/// Half-open arc `[start, end)` with `0 <= start < end <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleArc {
    pub start: f64,
    pub end: f64,
}

impl CircleArc {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, x: f64) -> bool {
        self.start <= x && x < self.end
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// Canonical finite union of disjoint half-open arcs on `R / Z`.
///
/// Arcs are sorted, pairwise separated (`end_i < start_{i+1}`) and never
/// cross 1; an arc through 0 is stored as `[0, b) u [a, 1)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSetMod1 {
    arcs: Vec<CircleArc>,
}

impl IntervalSetMod1 {
    pub fn empty() -> Self {
        Self { arcs: Vec::new() }
    }

    pub fn full() -> Self {
        Self {
            arcs: vec![CircleArc {
                start: 0.0,
                end: 1.0,
            }],
        }
    }

    /// Builds the canonical set from lifted pairs `(a, b)`, `0 < b - a <= 1`.
    pub fn from_pairs(raw: &[(f64, f64)]) -> Result<Self> {
        let mut pieces = Vec::with_capacity(raw.len() + 2);
        for &(a, b) in raw {
            if !a.is_finite() || !b.is_finite() {
                return Err(invalid(format!("non-finite arc ({a}, {b})")));
            }
            let len = b - a;
            if len <= 0.0 {
                return Err(invalid(format!("arc ({a}, {b}) has non-positive length")));
            }
            if len > 1.0 + 1e-12 {
                return Err(invalid(format!("arc ({a}, {b}) longer than the circle")));
            }
            if len >= 1.0 {
                return Ok(Self::full());
            }
            let (s, e) = if (0.0..1.0).contains(&a) { (a, b) } else { (frac(a), frac(a) + len) };
            if e <= 1.0 {
                pieces.push(CircleArc { start: s, end: e });
            } else {
                pieces.push(CircleArc { start: s, end: 1.0 });
                pieces.push(CircleArc {
                    start: 0.0,
                    end: e - 1.0,
                });
            }
        }
        Ok(Self::merge_sorted(pieces))
    }

    fn merge_sorted(mut pieces: Vec<CircleArc>) -> Self {
        pieces.retain(|a| a.end > a.start);
        pieces.sort_by(|a, b| a.start.total_cmp(&b.start));
        let mut arcs: Vec<CircleArc> = Vec::with_capacity(pieces.len());
        for p in pieces {
            match arcs.last_mut() {
                Some(last) if p.start <= last.end => last.end = last.end.max(p.end),
                _ => arcs.push(p),
            }
        }
        Self { arcs }
    }

    pub fn arcs(&self) -> &[CircleArc] {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.arcs.len() == 1 && self.arcs[0].start <= 0.0 && self.arcs[0].end >= 1.0
    }

    pub fn measure(&self) -> f64 {
        self.arcs.iter().map(CircleArc::len).sum()
    }

    /// Membership of `x mod 1`.
    pub fn contains(&self, x: f64) -> bool {
        let y = frac(x);
        let idx = self.arcs.partition_point(|a| a.start <= y);
        idx > 0 && self.arcs[idx - 1].contains(y)
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.arcs.len() + 1);
        let mut cursor = 0.0;
        for a in &self.arcs {
            if a.start > cursor {
                out.push(CircleArc {
                    start: cursor,
                    end: a.start,
                });
            }
            cursor = a.end;
        }
        if cursor < 1.0 {
            out.push(CircleArc {
                start: cursor,
                end: 1.0,
            });
        }
        Self { arcs: out }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut pieces = self.arcs.clone();
        pieces.extend_from_slice(&other.arcs);
        Self::merge_sorted(pieces)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (a, b) = (&self.arcs, &other.arcs);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let s = a[i].start.max(b[j].start);
            let e = a[i].end.min(b[j].end);
            if s < e {
                out.push(CircleArc { start: s, end: e });
            }
            if a[i].end < b[j].end {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { arcs: out }
    }

    /// Joins arcs separated by less than `gap` (including across 0) and
    /// drops arcs shorter than `gap`.
    pub(crate) fn close_gaps(&self, gap: f64) -> Self {
        let mut arcs: Vec<CircleArc> = Vec::with_capacity(self.arcs.len());
        for a in &self.arcs {
            match arcs.last_mut() {
                Some(last) if a.start - last.end < gap => last.end = a.end,
                _ => arcs.push(*a),
            }
        }
        if let (Some(first), Some(last)) = (arcs.first().copied(), arcs.last().copied()) {
            if arcs.len() >= 2 && first.start < gap && 1.0 - last.end < gap {
                arcs[0].start = 0.0;
                arcs.last_mut().expect("non-empty").end = 1.0;
            } else if arcs.len() == 1 && first.start < gap && 1.0 - first.end < gap {
                return Self::full();
            }
        }
        arcs.retain(|a| a.len() >= gap);
        Self::merge_sorted(arcs)
    }

    /// Arcs as seen on the circle: an arc touching 1 is joined with one
    /// starting at 0. Returned as lifted `(start, end)` pairs.
    pub fn circular_arcs(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self.arcs.iter().map(|a| (a.start, a.end)).collect();
        if v.len() >= 2 && v[0].0 <= 0.0 && v[v.len() - 1].1 >= 1.0 {
            let first = v.remove(0);
            let last = v.last_mut().expect("len >= 1");
            last.1 = 1.0 + first.1;
        }
        v
    }

    /// Longest arc on the circle, as a lifted pair.
    pub fn largest_arc(&self) -> Option<(f64, f64)> {
        self.circular_arcs()
            .into_iter()
            .max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
    }
}

/// Canonical form of raw lifted pairs.
pub fn canonicalize_intervals(raw: &[(f64, f64)]) -> Result<IntervalSetMod1> {
    IntervalSetMod1::from_pairs(raw)
}

pub fn complement_intervals(s: &IntervalSetMod1) -> IntervalSetMod1 {
    s.complement()
}
