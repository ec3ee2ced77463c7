use std::ops::{Add, Mul, Sub};

use crate::scalar::{lit, Scalar};

/// Planar world position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> T {
        (other - self).norm()
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    /// Counterclockwise bearing from +x of the vector `self -> to`, in `[0, 2π)`.
    pub fn bearing_to(self, to: Self) -> T {
        let d = to - self;
        let a = d.y.atan2(d.x);
        let tau = T::TAU();
        let a = if a < T::zero() { a + tau } else { a };
        // atan2 can round up to exactly 2π for tiny negative angles
        if a >= tau {
            T::zero()
        } else {
            a
        }
    }

    /// Point at fraction `t` along `self -> to`.
    pub fn lerp(self, to: Self, t: T) -> Self {
        Self::new(self.x + (to.x - self.x) * t, self.y + (to.y - self.y) * t)
    }

    /// Moves from `self` towards `to` by at most `max_step`.
    pub fn steer(self, to: Self, max_step: T) -> Self {
        let d = self.distance(to);
        if d <= max_step {
            to
        } else {
            self.lerp(to, max_step / d)
        }
    }

    pub fn cast<U: Scalar>(self) -> Point2<U> {
        Point2::new(lit(self.x.to_f64().unwrap()), lit(self.y.to_f64().unwrap()))
    }
}

/// Unsigned turning angle between two direction vectors, in `[0, π]`.
/// Planar distance from `p` to the closed segment `a -> b`.
pub fn segment_distance<T: Scalar>(p: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == T::zero() {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).max(T::zero()).min(T::one());
    p.distance(a + ab * t)
}

pub fn turn_angle<T: Scalar>(incoming: Point2<T>, outgoing: Point2<T>) -> T {
    incoming.cross(outgoing).atan2(incoming.dot(outgoing)).abs()
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}
