//! Small fixed-size vector used for points and directions.
//!
//! Planar problems keep `z == 0` throughout, so one type serves both
//! dimensions without generic plumbing.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub const fn planar(x: f64, y: f64) -> Self {
        Vec3 { x, y, z: 0.0 }
    }

    /// Builds a point from a coordinate slice of length 2 or 3.
    pub fn from_slice(c: &[f64]) -> Option<Self> {
        match c {
            [x, y] => Some(Vec3::planar(*x, *y)),
            [x, y, z] => Some(Vec3::new(*x, *y, *z)),
            _ => None,
        }
    }

    pub fn component(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn to_vec(self, dim: usize) -> Vec<f64> {
        [self.x, self.y, self.z][..dim].to_vec()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Orthonormal completion of a unit vector: `dim - 1` vectors spanning its
/// orthogonal complement. Deterministic for a given input.
pub fn orthonormal_complement(e: Vec3, dim: usize) -> [Vec3; 2] {
    if dim == 2 {
        // +90 degree rotation in the plane
        return [Vec3::planar(-e.y, e.x), Vec3::ZERO];
    }
    // pick the coordinate axis least aligned with e
    let ax = e.x.abs();
    let ay = e.y.abs();
    let az = e.z.abs();
    let helper = if ax <= ay && ax <= az {
        Vec3::new(1.0, 0.0, 0.0)
    } else if ay <= az {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    let n1 = e.cross(helper).normalized().expect("helper axis is not parallel to e");
    let n2 = e.cross(n1);
    [n1, n2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthonormal() {
        let dirs =
            [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 2.0, -3.0).normalized().unwrap()];
        for e in dirs {
            let [n1, n2] = orthonormal_complement(e, 3);
            assert!(e.dot(n1).abs() < 1e-15);
            assert!(e.dot(n2).abs() < 1e-15);
            assert!(n1.dot(n2).abs() < 1e-15);
            assert!((n1.norm() - 1.0).abs() < 1e-15);
            assert!((n2.norm() - 1.0).abs() < 1e-15);
        }
        let e = Vec3::planar(0.6, 0.8);
        let [n, _] = orthonormal_complement(e, 2);
        assert_eq!(n, Vec3::planar(-0.8, 0.6));
    }
}
