//! Convex polygons in the plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = Error;

    fn try_from(v: Vec<Point>) -> Result<Self> {
        Polygon::convex_hull(&v)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl Polygon {
    /// Convex hull of a point cloud (monotone chain). Fails if the hull has
    /// fewer than three vertices.
    pub fn convex_hull(points: &[Point]) -> Result<Self> {
        let mut pts: Vec<Point> = points.to_vec();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return Err(Error::DegeneratePolygon(pts.len()));
        }
        let mut lower: Vec<Point> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2
                && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0
            {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Point> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2
                && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0
            {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        if lower.len() < 3 {
            return Err(Error::DegeneratePolygon(lower.len()));
        }
        Ok(Self { vertices: lower })
    }

    /// Rectangle of `length` along heading `psi` and `width` across it.
    pub fn rectangle(center: Point, length: f64, width: f64, psi: f64) -> Result<Self> {
        let (hl, hw) = (length / 2.0, width / 2.0);
        let local = [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]];
        let pose = Pose::new(center[0], center[1], psi);
        Self::convex_hull(&local.map(|p| pose.apply(p)))
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|k| {
                let (a, b) = (self.vertices[k], self.vertices[(k + 1) % n]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
            / 2.0
    }

    /// Rotates by `pose.psi` about the origin, then translates.
    pub fn transformed(&self, pose: Pose) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&p| pose.apply(p)).collect(),
        }
    }

    /// Closed-set test: boundary points count as inside.
    pub fn contains_point(&self, p: Point) -> bool {
        let n = self.vertices.len();
        (0..n).all(|k| cross(self.vertices[k], self.vertices[(k + 1) % n], p) >= -1e-12)
    }

    /// Separating-axis test with closed-set semantics: touching polygons
    /// intersect.
    pub fn intersects(&self, other: &Polygon) -> bool {
        !(self.has_separating_axis(other) || other.has_separating_axis(self))
    }

    fn has_separating_axis(&self, other: &Polygon) -> bool {
        let n = self.vertices.len();
        (0..n).any(|k| {
            let (a, b) = (self.vertices[k], self.vertices[(k + 1) % n]);
            let axis = [b[1] - a[1], a[0] - b[0]];
            let project = |poly: &Polygon| {
                poly.vertices
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                        let d = p[0] * axis[0] + p[1] * axis[1];
                        (lo.min(d), hi.max(d))
                    })
            };
            let (lo_a, hi_a) = project(self);
            let (lo_b, hi_b) = project(other);
            hi_a < lo_b || hi_b < lo_a
        })
    }

    pub fn bounding_radius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|p| p[0].hypot(p[1]))
            .fold(0.0, f64::max)
    }
}

pub fn collision_free(a: &Polygon, b: &Polygon) -> bool {
    !a.intersects(b)
}

/// Planar rigid transform.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Self { x, y, psi }
    }

    pub fn apply(&self, p: Point) -> Point {
        let (s, c) = self.psi.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]]
    }

    /// `self` followed by the relative motion `local`.
    pub fn compose(&self, local: Pose) -> Pose {
        let [x, y] = self.apply([local.x, local.y]);
        Pose::new(x, y, wrap_angle(self.psi + local.psi))
    }
}

/// Wraps to `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(std::f64::consts::TAU);
    if w >= std::f64::consts::TAU {
        0.0
    } else {
        w
    }
}
