//! First self-crossing of a planar polyline, found incrementally with a
//! uniform spatial hash.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geodesic_flow::{GeodesicState, GeodesicTrace};

/// Crossings closer than this in arclength are ignored.
pub const MIN_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionEvent {
    /// Earlier and later arclength at the crossing point.
    pub s1: f64,
    pub s2: f64,
    pub point: [f64; 2],
    /// Angle between the two branches in the planar picture, in `[0, π/2]`.
    pub angle: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: [f64; 2],
    b: [f64; 2],
    s_a: f64,
    s_b: f64,
}

/// Feeds samples one at a time and reports the earliest crossing, measured
/// by the later of the two arclengths.
#[derive(Debug, Clone)]
pub struct IntersectionDetector {
    cell: f64,
    segments: Vec<Segment>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    last: Option<([f64; 2], f64)>,
    found: Option<IntersectionEvent>,
}

impl Default for IntersectionDetector {
    fn default() -> Self {
        Self::new(0.25)
    }
}

impl IntersectionDetector {
    pub fn new(cell: f64) -> Self {
        assert!(cell > 0.0);
        Self {
            cell,
            segments: Vec::new(),
            buckets: HashMap::new(),
            last: None,
            found: None,
        }
    }

    pub fn found(&self) -> Option<IntersectionEvent> {
        self.found
    }

    pub fn push_state(&mut self, st: &GeodesicState) -> Option<IntersectionEvent> {
        self.push(st.planar(), st.s)
    }

    /// Adds the next polyline vertex; once a crossing is found it is kept
    /// and further vertices are ignored.
    pub fn push(&mut self, p: [f64; 2], s: f64) -> Option<IntersectionEvent> {
        if self.found.is_some() {
            return self.found;
        }
        let (q, s_q) = self.last.replace((p, s))?;
        if p == q {
            return None;
        }
        let seg = Segment {
            a: q,
            b: p,
            s_a: s_q,
            s_b: s,
        };
        let idx = self.segments.len();
        let cells = self.cells(&seg);
        let mut best: Option<(f64, IntersectionEvent)> = None;
        let mut seen = Vec::new();
        for c in &cells {
            let Some(list) = self.buckets.get(c) else { continue };
            for &k in list {
                // Adjacent segments share a vertex.
                if k + 1 >= idx || seen.contains(&k) {
                    continue;
                }
                seen.push(k);
                if let Some((t, ev)) = crossing(&self.segments[k], &seg) {
                    if ev.s2 - ev.s1 > MIN_SEPARATION && best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, ev));
                    }
                }
            }
        }
        self.segments.push(seg);
        for c in cells {
            self.buckets.entry(c).or_default().push(idx);
        }
        self.found = best.map(|(_, ev)| ev);
        self.found
    }

    fn cells(&self, seg: &Segment) -> Vec<(i64, i64)> {
        let k = |x: f64| (x / self.cell).floor() as i64;
        let (x0, x1) = (k(seg.a[0].min(seg.b[0])), k(seg.a[0].max(seg.b[0])));
        let (y0, y1) = (k(seg.a[1].min(seg.b[1])), k(seg.a[1].max(seg.b[1])));
        let mut out = Vec::with_capacity(((x1 - x0 + 1) * (y1 - y0 + 1)) as usize);
        for i in x0..=x1 {
            for j in y0..=y1 {
                out.push((i, j));
            }
        }
        out
    }
}

fn cross(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

/// Intersection of an earlier segment `e` with the new segment `n`, with the
/// parameter along `n`. Collinear overlaps count, at their first point on `n`.
fn crossing(e: &Segment, n: &Segment) -> Option<(f64, IntersectionEvent)> {
    let d1 = [e.b[0] - e.a[0], e.b[1] - e.a[1]];
    let d2 = [n.b[0] - n.a[0], n.b[1] - n.a[1]];
    let w = [n.a[0] - e.a[0], n.a[1] - e.a[1]];
    let den = cross(d1, d2);
    let l1 = d1[0].hypot(d1[1]);
    let l2 = d2[0].hypot(d2[1]);
    let scale = l1 * l2;
    let (u, t) = if den.abs() > 1e-14 * scale {
        let u = cross(w, d2) / den;
        let t = cross(w, d1) / den;
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&t) {
            return None;
        }
        (u, t)
    } else {
        // Parallel: only a collinear overlap counts.
        if cross(w, d1).abs() > 1e-14 * l1 * (w[0].hypot(w[1]) + l1) {
            return None;
        }
        let proj = |p: [f64; 2]| ((p[0] - e.a[0]) * d1[0] + (p[1] - e.a[1]) * d1[1]) / (l1 * l1);
        let (pa, pb) = (proj(n.a), proj(n.b));
        let lo = pa.min(pb).max(0.0);
        let hi = pa.max(pb).min(1.0);
        if lo > hi {
            return None;
        }
        // First point of n that lies on e.
        let u = if pa <= pb { lo } else { hi };
        let t = if (pb - pa).abs() > 0.0 {
            (u - pa) / (pb - pa)
        } else {
            0.0
        };
        (u, t)
    };
    let point = [e.a[0] + u * d1[0], e.a[1] + u * d1[1]];
    let cosang = ((d1[0] * d2[0] + d1[1] * d2[1]) / scale).abs().min(1.0);
    Some((
        t,
        IntersectionEvent {
            s1: e.s_a + u * (e.s_b - e.s_a),
            s2: n.s_a + t * (n.s_b - n.s_a),
            point,
            angle: cosang.acos(),
        },
    ))
}

/// Earliest self-crossing of a finished trace.
pub fn self_intersection(trace: &GeodesicTrace) -> Option<IntersectionEvent> {
    let mut det = IntersectionDetector::default();
    for st in &trace.samples {
        if let Some(ev) = det.push_state(st) {
            return Some(ev);
        }
    }
    None
}
