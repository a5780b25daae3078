//! Planar geometry: points, polylines with arclength parameterization, and
//! convex polygon clipping for lane corridors.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(math::cos(theta), math::sin(theta))
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn angle(self) -> f64 {
        math::atan2(self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// Closest point on a polyline to a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arclength of the foot point.
    pub s: f64,
    /// Signed lateral offset, positive to the left of the direction of travel.
    pub lateral: f64,
    /// Euclidean distance to the foot point.
    pub distance: f64,
    /// Heading of the segment holding the foot point.
    pub heading: f64,
    /// Distance by which the query lies before the start (negative) or past
    /// the end (positive) of the polyline; zero when it projects inside.
    pub overshoot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Vec2>,
    cumulative: Vec<f64>,
}

impl Polyline {
    /// Builds a polyline. Returns `None` for fewer than two points or when
    /// consecutive points coincide.
    pub fn new(points: Vec<Vec2>) -> Option<Self> {
        if points.len() < 2 {
            return None;
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for w in points.windows(2) {
            let d = w[0].dist(w[1]);
            if d.is_nan() || d <= 1e-9 {
                return None;
            }
            cumulative.push(cumulative.last().copied().unwrap_or(0.0) + d);
        }
        Some(Self { points, cumulative })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    pub fn end(&self) -> Vec2 {
        self.points[self.points.len() - 1]
    }

    fn segment_at(&self, s: f64) -> usize {
        let n = self.points.len() - 1;
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap_or(core::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    /// Point at arclength `s`, extrapolated linearly beyond either end.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let i = self.segment_at(s);
        let a = self.points[i];
        let b = self.points[i + 1];
        let len = self.cumulative[i + 1] - self.cumulative[i];
        a + (b - a) * ((s - self.cumulative[i]) / len)
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let i = self.segment_at(s);
        (self.points[i + 1] - self.points[i]).angle()
    }

    pub fn start_heading(&self) -> f64 {
        (self.points[1] - self.points[0]).angle()
    }

    pub fn end_heading(&self) -> f64 {
        let n = self.points.len();
        (self.points[n - 1] - self.points[n - 2]).angle()
    }

    /// Brute-force nearest-point projection over all segments.
    pub fn project(&self, p: Vec2) -> Projection {
        let mut best: Option<Projection> = None;
        let last = self.points.len() - 2;
        for i in 0..=last {
            let a = self.points[i];
            let b = self.points[i + 1];
            let ab = b - a;
            let len = self.cumulative[i + 1] - self.cumulative[i];
            let t_raw = (p - a).dot(ab) / (len * len);
            let t = t_raw.clamp(0.0, 1.0);
            let foot = a + ab * t;
            let d = p.dist(foot);
            if best.is_none_or(|b| d < b.distance - 1e-12) {
                let dir = ab * (1.0 / len);
                let overshoot = if i == 0 && t_raw < 0.0 {
                    t_raw * len
                } else if i == last && t_raw > 1.0 {
                    (t_raw - 1.0) * len
                } else {
                    0.0
                };
                best = Some(Projection {
                    s: self.cumulative[i] + t * len,
                    lateral: dir.cross(p - a),
                    distance: d,
                    heading: dir.angle(),
                    overshoot,
                });
            }
        }
        // A polyline always has at least one segment.
        best.unwrap()
    }

    /// Left and right boundary points offset by `half_width`, using mitered
    /// normals at interior vertices.
    pub fn offset_boundaries(&self, half_width: f64) -> (Vec<Vec2>, Vec<Vec2>) {
        let n = self.points.len();
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        for i in 0..n {
            let normal = if i == 0 {
                (self.points[1] - self.points[0]).normalized().perp()
            } else if i == n - 1 {
                (self.points[n - 1] - self.points[n - 2]).normalized().perp()
            } else {
                let d0 = (self.points[i] - self.points[i - 1]).normalized();
                let d1 = (self.points[i + 1] - self.points[i]).normalized();
                let nrm = (d0.perp() + d1.perp()).normalized();
                let c = nrm.dot(d1.perp()).max(0.25);
                nrm * (1.0 / c)
            };
            left.push(self.points[i] + normal * half_width);
            right.push(self.points[i] - normal * half_width);
        }
        (left, right)
    }

    /// Splits the buffered centerline into one convex quad per segment.
    pub fn corridor_quads(&self, half_width: f64) -> Vec<ConvexPolygon> {
        let (left, right) = self.offset_boundaries(half_width);
        (0..self.points.len() - 1)
            .map(|i| ConvexPolygon::from_points(alloc::vec![right[i], right[i + 1], left[i + 1], left[i]]))
            .collect()
    }

    /// Full corridor outline (left side forward, right side backward).
    pub fn corridor_outline(&self, half_width: f64) -> Vec<Vec2> {
        let (left, mut right) = self.offset_boundaries(half_width);
        right.reverse();
        let mut out = left;
        out.extend(right);
        out
    }
}

/// Circumradius of three points; `None` when they are (numerically) collinear.
pub fn circumradius(a: Vec2, b: Vec2, c: Vec2) -> Option<f64> {
    let ab = a.dist(b);
    let bc = b.dist(c);
    let ca = c.dist(a);
    let twice_area = ((b - a).cross(c - a)).abs();
    let scale = ab * bc * ca;
    if twice_area <= 1e-9 * scale.max(1e-12) || twice_area == 0.0 {
        return None;
    }
    Some(scale / (2.0 * twice_area))
}

/// Signed area (positive for counter-clockwise winding).
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * acc
}

/// Even-odd point-in-polygon test for simple polygons.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = poly[i];
        let b = poly[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Convex polygon with counter-clockwise winding.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvexPolygon {
    pub points: Vec<Vec2>,
}

impl ConvexPolygon {
    /// Takes points in either winding; they must already describe a convex shape.
    pub fn from_points(mut points: Vec<Vec2>) -> Self {
        if signed_area(&points) < 0.0 {
            points.reverse();
        }
        Self { points }
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.points).abs()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let n = self.points.len();
        if n < 3 {
            return false;
        }
        (0..n).all(|i| {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            (b - a).cross(p - a) >= -1e-9
        })
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::around(&self.points)
    }

    /// Sutherland-Hodgman intersection with another convex polygon.
    pub fn intersect(&self, clip: &ConvexPolygon) -> Option<ConvexPolygon> {
        let mut output = self.points.clone();
        let n = clip.points.len();
        for i in 0..n {
            if output.is_empty() {
                return None;
            }
            let a = clip.points[i];
            let b = clip.points[(i + 1) % n];
            let edge = b - a;
            let input = core::mem::take(&mut output);
            let m = input.len();
            for k in 0..m {
                let cur = input[k];
                let prev = input[(k + m - 1) % m];
                let cur_in = edge.cross(cur - a) >= 0.0;
                let prev_in = edge.cross(prev - a) >= 0.0;
                if cur_in {
                    if !prev_in {
                        output.push(segment_line_intersection(prev, cur, a, b));
                    }
                    output.push(cur);
                } else if prev_in {
                    output.push(segment_line_intersection(prev, cur, a, b));
                }
            }
        }
        if output.len() < 3 {
            return None;
        }
        let poly = ConvexPolygon { points: output };
        (poly.area() > 1e-9).then_some(poly)
    }
}

fn segment_line_intersection(p: Vec2, q: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let edge = b - a;
    let dp = edge.cross(p - a);
    let dq = edge.cross(q - a);
    let t = dp / (dp - dq);
    p + (q - p) * t
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn around(points: &[Vec2]) -> Self {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Self { min, max }
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn square(x0: f64, y0: f64, side: f64) -> ConvexPolygon {
        ConvexPolygon::from_points(vec![
            Vec2::new(x0, y0),
            Vec2::new(x0 + side, y0),
            Vec2::new(x0 + side, y0 + side),
            Vec2::new(x0, y0 + side),
        ])
    }

    #[test]
    fn projection_on_straight_line() {
        let pl = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(20.0, 0.0)]).unwrap();
        let p = pl.project(Vec2::new(12.0, 1.5));
        assert!((p.s - 12.0).abs() < 1e-12);
        assert!((p.lateral - 1.5).abs() < 1e-12);
        assert_eq!(p.overshoot, 0.0);
        let past = pl.project(Vec2::new(23.0, 0.0));
        assert!((past.overshoot - 3.0).abs() < 1e-12);
        assert!((past.s - 20.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_polylines() {
        assert!(Polyline::new(vec![Vec2::new(0.0, 0.0)]).is_none());
        assert!(Polyline::new(vec![Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)]).is_none());
    }

    #[test]
    fn clipping_overlapping_squares() {
        let a = square(0.0, 0.0, 2.0);
        let b = square(1.0, 1.0, 2.0);
        let c = a.intersect(&b).unwrap();
        assert!((c.area() - 1.0).abs() < 1e-12);
        assert!(square(0.0, 0.0, 1.0).intersect(&square(5.0, 5.0, 1.0)).is_none());
    }

    #[test]
    fn circumradius_of_circle_points() {
        let r = 20.0;
        let p = |t: f64| Vec2::new(r * math::cos(t), r * math::sin(t));
        let got = circumradius(p(0.1), p(0.4), p(0.9)).unwrap();
        assert!((got - r).abs() < 1e-9);
        assert!(circumradius(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)).is_none());
    }

    #[test]
    fn point_in_polygon_square() {
        let sq = square(0.0, 0.0, 2.0).points;
        assert!(point_in_polygon(Vec2::new(1.0, 1.0), &sq));
        assert!(!point_in_polygon(Vec2::new(3.0, 1.0), &sq));
    }
}
