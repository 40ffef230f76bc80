//! Planar primitives and exact collision checks.
//!
//! Agents are points. Obstacles and observation areas are closed
//! axis-aligned rectangles or closed disks, so a point on a boundary is
//! inside the region and a segment touching a boundary collides.

use std::ops::{Add, Mul, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn distance_squared(self, other: Point2) -> f64 {
        (self - other).norm_squared()
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Closed axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub const fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point2 {
        self.min.midpoint(self.max)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err("rectangle corners must be finite".into());
        }
        if !(self.min.x < self.max.x && self.min.y < self.max.y) {
            return Err(format!(
                "rectangle min {:?} must be strictly below max {:?} componentwise",
                self.min, self.max
            ));
        }
        Ok(())
    }

    pub fn intersects_rect(&self, other: &Rect) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    /// Closest point of the rectangle to `p`.
    pub fn clamp(&self, p: Point2) -> Point2 {
        Point2::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
        )
    }

    /// Liang-Barsky clip of the closed segment against the closed box.
    pub fn intersects_segment(&self, a: Point2, b: Point2) -> bool {
        let d = b - a;
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        let checks = [
            (-d.x, a.x - self.min.x),
            (d.x, self.max.x - a.x),
            (-d.y, a.y - self.min.y),
            (d.y, self.max.y - a.y),
        ];
        for (p, q) in checks {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2 {
        Point2::new(
            rng.gen_range(self.min.x..=self.max.x),
            rng.gen_range(self.min.y..=self.max.y),
        )
    }
}

/// Closed disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point2,
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, p: Point2) -> bool {
        p.distance_squared(self.center) <= self.radius * self.radius
    }

    pub fn intersects_segment(&self, a: Point2, b: Point2) -> bool {
        distance_squared_to_segment(self.center, a, b) <= self.radius * self.radius
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.center.is_finite() || !self.radius.is_finite() {
            return Err("disk parameters must be finite".into());
        }
        if self.radius <= 0.0 {
            return Err(format!("disk radius must be positive, got {}", self.radius));
        }
        Ok(())
    }

    fn bounding_rect(&self) -> Rect {
        let r = Point2::new(self.radius, self.radius);
        Rect::new(self.center - r, self.center + r)
    }
}

fn distance_squared_to_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return p.distance_squared(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.distance_squared(a + d * t)
}

/// An obstacle or an observation area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Rect(Rect),
    Disk(Disk),
}

impl Region {
    pub fn rect(min: Point2, max: Point2) -> Self {
        Region::Rect(Rect::new(min, max))
    }

    pub fn disk(center: Point2, radius: f64) -> Self {
        Region::Disk(Disk { center, radius })
    }

    pub fn contains(&self, p: Point2) -> bool {
        match self {
            Region::Rect(r) => r.contains(p),
            Region::Disk(d) => d.contains(p),
        }
    }

    pub fn intersects_segment(&self, a: Point2, b: Point2) -> bool {
        match self {
            Region::Rect(r) => r.intersects_segment(a, b),
            Region::Disk(d) => d.intersects_segment(a, b),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Region::Rect(r) => r.validate(),
            Region::Disk(d) => d.validate(),
        }
    }

    pub fn intersects_rect(&self, rect: &Rect) -> bool {
        match self {
            Region::Rect(r) => r.intersects_rect(rect),
            Region::Disk(d) => d.contains(rect.clamp(d.center)),
        }
    }

    /// Exact overlap test between two closed regions.
    pub fn intersects(&self, other: &Region) -> bool {
        match (self, other) {
            (Region::Rect(a), Region::Rect(b)) => a.intersects_rect(b),
            (Region::Rect(r), d @ Region::Disk(_)) | (d @ Region::Disk(_), Region::Rect(r)) => {
                d.intersects_rect(r)
            }
            (Region::Disk(a), Region::Disk(b)) => {
                let r = a.radius + b.radius;
                a.center.distance_squared(b.center) <= r * r
            }
        }
    }

    pub fn bounding_rect(&self) -> Rect {
        match self {
            Region::Rect(r) => *r,
            Region::Disk(d) => d.bounding_rect(),
        }
    }

    pub fn center(&self) -> Point2 {
        match self {
            Region::Rect(r) => r.center(),
            Region::Disk(d) => d.center,
        }
    }
}

pub fn point_in_region(p: Point2, region: &Region) -> bool {
    region.contains(p)
}

/// True iff the closed segment `[a, b]` touches any obstacle.
pub fn segment_collides(a: Point2, b: Point2, obstacles: &[Region]) -> bool {
    obstacles.iter().any(|o| o.intersects_segment(a, b))
}

/// Moves from `from` toward `toward` by at most `step`.
///
/// Returns `toward` itself when it is within `step`, and `from` when the
/// two coincide.
pub fn steer(from: Point2, toward: Point2, step: f64) -> Point2 {
    let d = toward - from;
    let dist = d.norm();
    if dist <= step {
        return toward;
    }
    from + d * (step / dist)
}

/// One agent's state space: a bounding box minus its obstacles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub bounds: Rect,
    #[serde(default)]
    pub obstacles: Vec<Region>,
}

impl Workspace {
    pub fn new(bounds: Rect, obstacles: Vec<Region>) -> Self {
        Self { bounds, obstacles }
    }

    pub fn is_free(&self, p: Point2) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    pub fn segment_is_free(&self, a: Point2, b: Point2) -> bool {
        self.bounds.contains(a)
            && self.bounds.contains(b)
            && !segment_collides(a, b, &self.obstacles)
    }

    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errors = Vec::new();
        if let Err(e) = self.bounds.validate() {
            errors.push(format!("bounds: {e}"));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if let Err(e) = o.validate() {
                errors.push(format!("obstacle {i}: {e}"));
            } else if !o.intersects_rect(&self.bounds) {
                errors.push(format!("obstacle {i} lies entirely outside the bounds"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}
