use arrayvec::ArrayVec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::material::MaterialId;
use crate::math::{Ray, Vec3};
use crate::real::Real;

/// Ray parameter plus the outward normal of the surface that produced it.
pub(crate) type SurfaceRoot<T> = (T, Vec3<T>);
pub(crate) type RootBuffer<T> = ArrayVec<SurfaceRoot<T>, 48>;

/// Rectangular slab, top face at `z = 0`, centred on the z axis, extending
/// down to `z = -size.z`. Lengths in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Slab<T> {
    pub size: Vec3<T>,
}

impl<T: Real> Slab<T> {
    pub fn half_width(&self) -> T {
        self.size.x * T::lit(0.5)
    }

    pub fn half_depth(&self) -> T {
        self.size.y * T::lit(0.5)
    }

    #[inline]
    pub fn contains(&self, p: Vec3<T>) -> bool {
        p.x.abs() <= self.half_width() && p.y.abs() <= self.half_depth() && p.z <= T::zero() && p.z >= -self.size.z
    }

    pub(crate) fn roots(&self, ray: &Ray<T>, out: &mut RootBuffer<T>) {
        let lo = Vec3::new(-self.half_width(), -self.half_depth(), -self.size.z);
        let hi = Vec3::new(self.half_width(), self.half_depth(), T::zero());
        let mut t_near = T::neg_infinity();
        let mut t_far = T::infinity();
        let mut n_near = Vec3::zero();
        let mut n_far = Vec3::zero();
        for axis in 0..3 {
            let d = ray.dir[axis];
            let o = ray.origin[axis];
            let unit = axis_normal::<T>(axis);
            if d == T::zero() {
                if o < lo[axis] || o > hi[axis] {
                    return;
                }
                continue;
            }
            let (mut t0, mut t1) = ((lo[axis] - o) / d, (hi[axis] - o) / d);
            let (mut n0, mut n1) = (-unit, unit);
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
                std::mem::swap(&mut n0, &mut n1);
            }
            if t0 > t_near {
                t_near = t0;
                n_near = n0;
            }
            if t1 < t_far {
                t_far = t1;
                n_far = n1;
            }
        }
        if t_near <= t_far {
            push_root(out, (t_near, n_near));
            push_root(out, (t_far, n_far));
        }
    }
}

fn axis_normal<T: Real>(axis: usize) -> Vec3<T> {
    let (o, z) = (T::one(), T::zero());
    match axis {
        0 => Vec3::new(o, z, z),
        1 => Vec3::new(z, o, z),
        _ => Vec3::new(z, z, o),
    }
}

#[inline]
fn push_root<T: Real>(out: &mut RootBuffer<T>, root: SurfaceRoot<T>) {
    if root.0.is_finite() {
        // Capacity covers the template limits; extra roots are dropped rather than panicking.
        let _ = out.try_push(root);
    }
}

/// Axis-aligned spheroid (ellipsoid) whose effective semi-axes are
/// `semi_axes * scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Spheroid<T> {
    pub center: Vec3<T>,
    pub semi_axes: Vec3<T>,
    pub scale: T,
    pub material: MaterialId,
}

impl<T: Real> Spheroid<T> {
    pub fn new(center: Vec3<T>, semi_axes: Vec3<T>, material: MaterialId) -> Self {
        Self { center, semi_axes, scale: T::one(), material }
    }

    #[inline]
    pub fn axes(&self) -> Vec3<T> {
        self.semi_axes * self.scale
    }

    #[inline]
    pub fn contains(&self, p: Vec3<T>) -> bool {
        let q = (p - self.center).component_div(self.axes());
        q.length_squared() <= T::one()
    }

    pub fn normal_at(&self, p: Vec3<T>) -> Vec3<T> {
        let a = self.axes();
        (p - self.center).component_div(a.component_mul(a)).normalized()
    }

    pub(crate) fn roots(&self, ray: &Ray<T>, out: &mut RootBuffer<T>) {
        let a = self.axes();
        let o = (ray.origin - self.center).component_div(a);
        let d = ray.dir.component_div(a);
        let qa = d.length_squared();
        let qb = o.dot(d);
        let qc = o.length_squared() - T::one();
        let disc = qb * qb - qa * qc;
        if disc < T::zero() {
            return;
        }
        let s = disc.sqrt();
        for t in [(-qb - s) / qa, (-qb + s) / qa] {
            push_root(out, (t, self.normal_at(ray.at(t))));
        }
    }
}

/// Hollow cylinder along +z from `z = 0` to `z = length`. `radius` is the
/// outer radius; the lumen radius is `radius - wall`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct HollowCylinder<T> {
    pub radius: T,
    pub length: T,
    pub wall: T,
    pub material: MaterialId,
}

impl<T: Real> HollowCylinder<T> {
    #[inline]
    pub fn inner_radius(&self) -> T {
        self.radius - self.wall
    }

    #[inline]
    pub fn contains(&self, p: Vec3<T>) -> bool {
        let r2 = p.x * p.x + p.y * p.y;
        let ri = self.inner_radius();
        p.z >= T::zero() && p.z <= self.length && r2 >= ri * ri && r2 <= self.radius * self.radius
    }

    pub(crate) fn roots(&self, ray: &Ray<T>, out: &mut RootBuffer<T>) {
        let (o, d) = (ray.origin, ray.dir);
        let qa = d.x * d.x + d.y * d.y;
        if qa > T::zero() {
            let qb = o.x * d.x + o.y * d.y;
            for r in [self.inner_radius(), self.radius] {
                let qc = o.x * o.x + o.y * o.y - r * r;
                let disc = qb * qb - qa * qc;
                if disc < T::zero() {
                    continue;
                }
                let s = disc.sqrt();
                for t in [(-qb - s) / qa, (-qb + s) / qa] {
                    let p = ray.at(t);
                    let n = Vec3::new(p.x, p.y, T::zero()).normalized();
                    push_root(out, (t, n));
                }
            }
        }
        if d.z != T::zero() {
            let (o1, z0) = (T::one(), T::zero());
            push_root(out, ((-o.z) / d.z, Vec3::new(z0, z0, -o1)));
            push_root(out, ((self.length - o.z) / d.z, Vec3::new(z0, z0, o1)));
        }
    }
}

/// Opaque Lambertian ground plane filling the half-space `z < height`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Backdrop<T> {
    pub height: T,
    pub albedo: T,
}

impl<T: Real> Backdrop<T> {
    #[inline]
    pub fn contains(&self, p: Vec3<T>) -> bool {
        p.z < self.height
    }

    pub(crate) fn roots(&self, ray: &Ray<T>, out: &mut RootBuffer<T>) {
        if ray.dir.z != T::zero() {
            let (o, z) = (T::one(), T::zero());
            push_root(out, ((self.height - ray.origin.z) / ray.dir.z, Vec3::new(z, z, o)));
        }
    }
}

/// Two-region partition of the slab face along `y = c0 + c1 x + c2 x² + c3 x³`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BoundaryCurve<T> {
    pub coeffs: [T; 4],
    /// Materials on the `y < curve(x)` side and the other side.
    pub materials: [MaterialId; 2],
}

impl<T: Real> BoundaryCurve<T> {
    #[inline]
    pub fn curve_y(&self, x: T) -> T {
        let [c0, c1, c2, c3] = self.coeffs;
        c0 + x * (c1 + x * (c2 + x * c3))
    }

    #[inline]
    pub fn region_at(&self, x: T, y: T) -> usize {
        usize::from(y >= self.curve_y(x))
    }
}

/// Three-region partition of the slab face along two jagged polylines.
///
/// Each polyline runs across the face at a baseline `levels[i]` with evenly
/// spaced vertices displaced in y by seeded uniform jitter. The jitter is kept
/// below half the baseline gap so the polylines never cross; a point's region
/// is the number of polylines lying below it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RaggedPartition<T> {
    pub seed: u64,
    pub levels: [T; 2],
    pub jitter: T,
    pub vertices: usize,
    pub materials: [MaterialId; 3],
    #[serde(skip)]
    pub lines: [Vec<(T, T)>; 2],
}

impl<T: Real> RaggedPartition<T> {
    pub fn new(seed: u64, levels: [T; 2], jitter: T, vertices: usize, materials: [MaterialId; 3]) -> Self {
        Self { seed, levels, jitter, vertices, materials, lines: [Vec::new(), Vec::new()] }
    }

    /// Regenerates the polylines across `[-half_width, half_width]`.
    pub fn generate(&mut self, half_width: T) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.vertices.max(2);
        let span = half_width * T::lit(2.0);
        for (line, level) in self.lines.iter_mut().zip(self.levels) {
            line.clear();
            for i in 0..n {
                let x = -half_width + span * T::from_usize(i).unwrap() / T::from_usize(n - 1).unwrap();
                let u = T::uniform(&mut rng) * T::lit(2.0) - T::one();
                line.push((x, level + u * self.jitter));
            }
        }
    }

    fn line_y(line: &[(T, T)], x: T) -> T {
        let first = line[0];
        let last = line[line.len() - 1];
        if x <= first.0 {
            return first.1;
        }
        if x >= last.0 {
            return last.1;
        }
        let idx = line.partition_point(|v| v.0 <= x).max(1);
        let (x0, y0) = line[idx - 1];
        let (x1, y1) = line[idx];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    #[inline]
    pub fn region_at(&self, x: T, y: T) -> usize {
        self.lines.iter().filter(|l| !l.is_empty() && y >= Self::line_y(l, x)).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub enum FacePartition<T> {
    Single(MaterialId),
    Curve(BoundaryCurve<T>),
    Ragged(RaggedPartition<T>),
}

impl<T: Real> FacePartition<T> {
    /// Material owning the face point `(x, y)`; the partition is extruded
    /// through the slab thickness.
    #[inline]
    pub fn material_at(&self, x: T, y: T) -> MaterialId {
        match self {
            FacePartition::Single(m) => *m,
            FacePartition::Curve(c) => c.materials[c.region_at(x, y)],
            FacePartition::Ragged(r) => r.materials[r.region_at(x, y)],
        }
    }

    pub fn materials(&self) -> Vec<MaterialId> {
        match self {
            FacePartition::Single(m) => vec![*m],
            FacePartition::Curve(c) => c.materials.to_vec(),
            FacePartition::Ragged(r) => r.materials.to_vec(),
        }
    }
}
