use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A point or vector in the plane. Serialised as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_polar(r: f64, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Vec2::new(r * c, r * s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise rotation by a quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
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

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.x, self * v.y)
    }
}

/// Smallest distance from `p` to the closed ray `origin + t*dir`, `t >= 0`.
pub fn ray_distance(origin: Vec2, dir: Vec2, p: Vec2) -> f64 {
    let t = (p - origin).dot(dir).max(0.0);
    (origin + t * dir - p).norm()
}

/// Distance from `p` to the infinite line through `point` with unit direction `dir`.
pub fn line_distance(point: Vec2, dir: Vec2, p: Vec2) -> f64 {
    (p - point).cross(dir).abs()
}

/// Infinite line `point + s direction`; `direction` is a unit vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub point: Vec2,
    pub direction: Vec2,
}

impl LineSpec {
    pub fn new(point: Vec2, direction: Vec2) -> crate::Result<Self> {
        let n = direction.norm();
        if !(point.is_finite() && n.is_finite() && n > 0.0) {
            return Err(crate::Error::Geometry("degenerate line".into()));
        }
        Ok(LineSpec {
            point,
            direction: direction.normalized(),
        })
    }

    pub fn at(&self, s: f64) -> Vec2 {
        self.point + s * self.direction
    }

    /// Coordinate of the projection of `p` onto the line.
    pub fn abscissa(&self, p: Vec2) -> f64 {
        (p - self.point).dot(self.direction)
    }

    pub fn distance(&self, p: Vec2) -> f64 {
        line_distance(self.point, self.direction, p)
    }
}
