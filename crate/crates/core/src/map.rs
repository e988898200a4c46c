//! Synthetic road network: closed lane centerlines built from straight and
//! circular-arc segments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Point, Polygon, Pose};

/// Spacing of the sampled centerline [m].
const RESOLUTION: f64 = 0.01;
const CLOSURE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    /// Straight line of the given length [m].
    Line(f64),
    /// Circular arc; positive `degrees` turn left.
    Arc { radius: f64, degrees: f64 },
}

impl Segment {
    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line(l) => l,
            Segment::Arc { radius, degrees } => radius * degrees.to_radians().abs(),
        }
    }

    /// Pose after travelling `s` along the segment from `start`.
    fn advance(&self, start: Pose, s: f64) -> Pose {
        match *self {
            Segment::Line(_) => start.compose(Pose::new(s, 0.0, 0.0)),
            Segment::Arc { radius, degrees } => {
                let sign = degrees.signum();
                let phi = s / radius;
                let local = Pose::new(
                    radius * phi.sin(),
                    sign * radius * (1.0 - phi.cos()),
                    sign * phi,
                );
                start.compose(local)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub start: Pose,
    pub segments: Vec<Segment>,
}

/// A closed centerline sampled at fine, uniform arc-length spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub name: String,
    spec: PathSpec,
    samples: Vec<Pose>,
    spacing: f64,
    length: f64,
}

impl Path {
    pub fn new(name: impl Into<String>, spec: PathSpec) -> Result<Self> {
        let name = name.into();
        if spec.segments.is_empty() {
            return Err(Error::Config(vec![format!("path {name}: no segments")]));
        }
        let mut problems = Vec::new();
        for (k, seg) in spec.segments.iter().enumerate() {
            let ok = match *seg {
                Segment::Line(l) => l > 0.0,
                Segment::Arc { radius, degrees } => radius > 0.0 && degrees != 0.0,
            };
            if !ok {
                problems.push(format!("path {name}: segment {k} has no positive extent"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        let length: f64 = spec.segments.iter().map(Segment::length).sum();
        let n = (length / RESOLUTION).ceil().max(1.0) as usize;
        let spacing = length / n as f64;
        let mut samples = Vec::with_capacity(n);
        let (mut seg_start, mut seg_index, mut seg_offset) = (spec.start, 0, 0.0);
        for k in 0..n {
            let s = k as f64 * spacing;
            while seg_index + 1 < spec.segments.len()
                && s >= seg_offset + spec.segments[seg_index].length()
            {
                let seg = &spec.segments[seg_index];
                seg_start = seg.advance(seg_start, seg.length());
                seg_offset += seg.length();
                seg_index += 1;
            }
            samples.push(spec.segments[seg_index].advance(seg_start, s - seg_offset));
        }
        let last = &spec.segments[seg_index];
        let end = last.advance(seg_start, last.length());
        let gap = (end.x - spec.start.x).hypot(end.y - spec.start.y);
        let turn = wrap_angle(end.psi - spec.start.psi);
        let heading_gap = turn.min(std::f64::consts::TAU - turn);
        if gap > CLOSURE_TOLERANCE || heading_gap > CLOSURE_TOLERANCE {
            return Err(Error::Config(vec![format!(
                "path {name} is not closed: end is {gap:.3e} m and {heading_gap:.3e} rad from the start"
            )]));
        }
        Ok(Self {
            name,
            spec,
            samples,
            spacing,
            length,
        })
    }

    pub fn spec(&self) -> &PathSpec {
        &self.spec
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Pose at arc length `s`, wrapping around the loop.
    pub fn pose_at(&self, s: f64) -> Pose {
        let s = s.rem_euclid(self.length);
        let idx = (s / self.spacing).floor() as usize % self.samples.len();
        let base = self.samples[idx];
        let ds = s - idx as f64 * self.spacing;
        // segments are smooth at sample resolution; interpolate along the chord
        let next = self.samples[(idx + 1) % self.samples.len()];
        let t = ds / self.spacing;
        let dpsi = wrap_angle(next.psi - base.psi);
        let dpsi = if dpsi > std::f64::consts::PI {
            dpsi - std::f64::consts::TAU
        } else {
            dpsi
        };
        Pose::new(
            base.x + t * (next.x - base.x),
            base.y + t * (next.y - base.y),
            wrap_angle(base.psi + t * dpsi),
        )
    }

    /// Arc length of the sample closest to `p`. With a `hint`, only samples
    /// within `[hint - 0.5 m, hint + 2 m]` are considered so that
    /// self-crossing paths keep their branch.
    pub fn project(&self, p: Point, hint: Option<f64>) -> f64 {
        let n = self.samples.len();
        let candidates: Box<dyn Iterator<Item = usize>> = match hint {
            None => Box::new(0..n),
            Some(h) => {
                let back = (0.5 / self.spacing).ceil() as isize;
                let ahead = (2.0 / self.spacing).ceil() as isize;
                let base = (h.rem_euclid(self.length) / self.spacing).round() as isize;
                Box::new(
                    (base - back..=base + ahead).map(move |k| k.rem_euclid(n as isize) as usize),
                )
            }
        };
        let best = candidates
            .map(|k| {
                let q = self.samples[k];
                ((q.x - p[0]).powi(2) + (q.y - p[1]).powi(2), k)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, k)| k)
            .unwrap_or(0);
        best as f64 * self.spacing
    }

    /// `h` positions spaced `speed * dt` apart, starting one spacing ahead of
    /// arc length `s`.
    pub fn reference(&self, s: f64, speed: f64, dt: f64, h: usize) -> Vec<Point> {
        (1..=h)
            .map(|l| {
                let p = self.pose_at(s + l as f64 * speed * dt);
                [p.x, p.y]
            })
            .collect()
    }

    /// Wall rectangles along both lane edges, dropping pieces that would
    /// intrude into the lane elsewhere on the loop (e.g. at self-crossings).
    pub fn lane_walls(&self, lane_width: f64, piece_length: f64, thickness: f64) -> Vec<Polygon> {
        let n_pieces = (self.length / piece_length).ceil() as usize;
        let piece = self.length / n_pieces as f64;
        let offset = lane_width / 2.0 + thickness / 2.0;
        // pieces on the inside of curves come a little closer than half the lane
        let keep_clear = lane_width / 4.0;
        let mut walls = Vec::new();
        for k in 0..n_pieces {
            let s = (k as f64 + 0.5) * piece;
            let c = self.pose_at(s);
            for side in [1.0, -1.0] {
                let center = c.apply([0.0, side * offset]);
                let wall = Polygon::rectangle(center, piece + thickness, thickness, c.psi)
                    .expect("wall pieces have positive extent");
                let intrudes = self
                    .samples
                    .iter()
                    .any(|q| wall_distance(&wall, [q.x, q.y]) < keep_clear);
                if !intrudes {
                    walls.push(wall);
                }
            }
        }
        walls
    }
}

/// Distance from `p` to a convex polygon (0 inside).
fn wall_distance(poly: &Polygon, p: Point) -> f64 {
    if poly.contains_point(p) {
        return 0.0;
    }
    let v = poly.vertices();
    (0..v.len())
        .map(|k| segment_distance(v[k], v[(k + 1) % v.len()], p))
        .fold(f64::INFINITY, f64::min)
}

fn segment_distance(a: Point, b: Point, p: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    (a[0] + t * d[0] - p[0]).hypot(a[1] + t * d[1] - p[1])
}

/// Racetrack loop: two straights of `straight` meters joined by half
/// circles of `radius`, counter-clockwise, starting at `start`.
pub fn racetrack(start: Pose, straight: f64, radius: f64) -> PathSpec {
    PathSpec {
        start,
        segments: vec![
            Segment::Line(straight),
            Segment::Arc {
                radius,
                degrees: 180.0,
            },
            Segment::Line(straight),
            Segment::Arc {
                radius,
                degrees: 180.0,
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn racetrack_closes() {
        let p = Path::new("r", racetrack(Pose::new(-2.0, 0.0, 0.0), 4.0, 1.0)).unwrap();
        assert!((p.length() - (8.0 + 2.0 * std::f64::consts::PI)).abs() < 1e-9);
        let a = p.pose_at(1.0);
        assert!((a.x + 1.0).abs() < 1e-9 && a.y.abs() < 1e-9);
        let top = p.pose_at(4.0 + std::f64::consts::PI + 1.0);
        assert!((top.x - 1.0).abs() < 1e-6 && (top.y - 2.0).abs() < 1e-6);
        assert!((top.psi - std::f64::consts::PI).abs() < 1e-6);
        let wrapped = p.pose_at(p.length() + 1.0);
        assert!((wrapped.x - a.x).abs() < 1e-9);
    }

    #[test]
    fn open_path_rejected() {
        let spec = PathSpec {
            start: Pose::default(),
            segments: vec![
                Segment::Line(1.0),
                Segment::Arc {
                    radius: 1.0,
                    degrees: 90.0,
                },
            ],
        };
        assert!(matches!(Path::new("x", spec), Err(Error::Config(_))));
    }

    #[test]
    fn projection_and_reference() {
        let p = Path::new("r", racetrack(Pose::new(-2.0, 0.0, 0.0), 4.0, 1.0)).unwrap();
        let s = p.project([0.3, 0.05], None);
        assert!((s - 2.3).abs() < 0.011);
        let s2 = p.project([0.3, 0.05], Some(2.0));
        assert_eq!(s, s2);
        let r = p.reference(s, 0.8, 0.2, 3);
        assert!((r[2][0] - (0.3 + 3.0 * 0.16)).abs() < 0.02);
    }

    #[test]
    fn walls_leave_the_lane_free() {
        let p = Path::new("r", racetrack(Pose::new(-2.0, 0.0, 0.0), 4.0, 1.0)).unwrap();
        let walls = p.lane_walls(0.5, 0.25, 0.05);
        assert!(!walls.is_empty());
        for k in 0..200 {
            let c = p.pose_at(k as f64 * p.length() / 200.0);
            let body = Polygon::rectangle([c.x, c.y], 0.22, 0.107, c.psi).unwrap();
            assert!(walls.iter().all(|w| !w.intersects(&body)));
        }
    }
}
