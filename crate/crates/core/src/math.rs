use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn from_f64(x: f64, y: f64, z: f64) -> Self {
        Self::new(T::lit(x), T::lit(y), T::lit(z))
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    #[inline]
    pub fn length_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn length(self) -> T {
        self.length_squared().sqrt()
    }

    #[inline]
    pub fn normalized(self) -> Self {
        self * self.length().recip()
    }

    #[inline]
    pub fn component_mul(self, o: Self) -> Self {
        Self::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    #[inline]
    pub fn component_div(self, o: Self) -> Self {
        Self::new(self.x / o.x, self.y / o.y, self.z / o.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min_component(self) -> T {
        self.x.min(self.y).min(self.z)
    }

    pub fn max_component(self) -> T {
        self.x.max(self.y).max(self.z)
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray<T> {
    pub origin: Vec3<T>,
    pub dir: Vec3<T>,
}

impl<T: Real> Ray<T> {
    #[inline]
    pub fn new(origin: Vec3<T>, dir: Vec3<T>) -> Self {
        Self { origin, dir }
    }

    #[inline]
    pub fn at(&self, t: T) -> Vec3<T> {
        self.origin + self.dir * t
    }
}

/// Orthonormal frame around a unit vector, used to place sampled directions.
#[derive(Debug, Clone, Copy)]
pub struct Frame<T> {
    pub tangent: Vec3<T>,
    pub bitangent: Vec3<T>,
    pub normal: Vec3<T>,
}

impl<T: Real> Frame<T> {
    /// Branchless basis construction (Duff et al.) for a unit `normal`.
    pub fn from_normal(normal: Vec3<T>) -> Self {
        let one = T::one();
        let sign = one.copysign(normal.z);
        let a = -one / (sign + normal.z);
        let b = normal.x * normal.y * a;
        let tangent = Vec3::new(one + sign * normal.x * normal.x * a, sign * b, -sign * normal.x);
        let bitangent = Vec3::new(b, sign + normal.y * normal.y * a, -normal.y);
        Self { tangent, bitangent, normal }
    }

    #[inline]
    pub fn to_world(&self, local: Vec3<T>) -> Vec3<T> {
        self.tangent * local.x + self.bitangent * local.y + self.normal * local.z
    }
}

/// Direction from polar cosine and azimuth around `axis`.
pub fn direction_around<T: Real>(axis: Vec3<T>, cos_theta: T, phi: T) -> Vec3<T> {
    let sin_theta = (T::one() - cos_theta * cos_theta).max(T::zero()).sqrt();
    let local = Vec3::new(sin_theta * phi.cos(), sin_theta * phi.sin(), cos_theta);
    Frame::from_normal(axis).to_world(local)
}

/// Cosine-weighted direction in the hemisphere around unit `axis`.
pub fn cosine_hemisphere<T: Real>(axis: Vec3<T>, u1: T, u2: T) -> Vec3<T> {
    let cos_theta = (T::one() - u1).sqrt();
    direction_around(axis, cos_theta, T::TAU() * u2)
}

/// Dielectric Fresnel reflectance for unpolarised light.
///
/// `eta` is the ratio of incident to transmitted refractive index. Returns 1
/// under total internal reflection.
pub fn fresnel_dielectric<T: Real>(cos_i: T, eta: T) -> T {
    let one = T::one();
    let cos_i = cos_i.abs().min(one);
    let sin2_t = eta * eta * (one - cos_i * cos_i);
    if sin2_t >= one {
        return one;
    }
    let cos_t = (one - sin2_t).sqrt();
    let rs = (eta * cos_i - cos_t) / (eta * cos_i + cos_t);
    let rp = (cos_i - eta * cos_t) / (cos_i + eta * cos_t);
    (rs * rs + rp * rp) * T::lit(0.5)
}

/// Snell refraction of `dir` through a surface with normal `n` facing the
/// incoming side. `None` on total internal reflection.
pub fn refract<T: Real>(dir: Vec3<T>, n: Vec3<T>, eta: T) -> Option<Vec3<T>> {
    let one = T::one();
    let cos_i = -n.dot(dir);
    let sin2_t = eta * eta * (one - cos_i * cos_i);
    if sin2_t > one {
        return None;
    }
    let cos_t = (one - sin2_t).sqrt();
    Some((dir * eta + n * (eta * cos_i - cos_t)).normalized())
}

#[inline]
pub fn reflect<T: Real>(dir: Vec3<T>, n: Vec3<T>) -> Vec3<T> {
    dir - n * (T::lit(2.0) * dir.dot(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal() {
        for n in [
            Vec3::from_f64(0.0, 0.0, 1.0),
            Vec3::from_f64(0.0, 0.0, -1.0),
            Vec3::<f64>::from_f64(0.3, -0.5, 0.2).normalized(),
        ] {
            let f = Frame::from_normal(n);
            assert!(f.tangent.dot(f.bitangent).abs() < 1e-12);
            assert!(f.tangent.dot(n).abs() < 1e-12);
            assert!((f.tangent.length() - 1.0).abs() < 1e-12);
            assert!((f.bitangent.length() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fresnel_normal_incidence() {
        let r = fresnel_dielectric(1.0_f64, 1.0 / 1.43);
        let expected = ((1.43_f64 - 1.0) / (1.43 + 1.0)).powi(2);
        assert!((r - expected).abs() < 1e-12);
        // Grazing from inside beyond the critical angle.
        assert_eq!(fresnel_dielectric(0.1_f64, 1.43), 1.0);
    }

    #[test]
    fn refraction_obeys_snell() {
        let n = Vec3::from_f64(0.0, 0.0, 1.0);
        let d = Vec3::<f64>::from_f64(0.5, 0.0, -1.0).normalized();
        let t = refract(d, n, 1.0 / 1.43).unwrap();
        let sin_i = d.x.abs();
        let sin_t = t.x.abs();
        assert!((sin_i - 1.43 * sin_t).abs() < 1e-12);
        assert!(refract(Vec3::<f64>::from_f64(0.9, 0.0, -0.1).normalized(), n, 1.43).is_none());
    }
}
