//! Materials, geometry, camera and projector, and the five scene templates.

mod file;
mod geometry;
mod material;
mod optics;
mod params;
mod templates;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use file::{flatten_toml, SceneFile};
pub use geometry::{Backdrop, BoundaryCurve, FacePartition, HollowCylinder, RaggedPartition, Slab, Spheroid};
pub use material::{
    FactorTriple, Material, MaterialId, DEFAULT_IOR, DEFAULT_SUBSURFACE_ALBEDO, DEFAULT_SUBSURFACE_MFP,
};
pub use optics::{Camera, ProjectionModel, Projector, DEFAULT_POWER_W, DEFAULT_RESOLUTION};
pub use params::ParamPath;
pub use templates::MAX_SPHEROIDS;

use crate::error::{Error, Result};
use crate::math::{Ray, Vec3};
use crate::real::Real;
use geometry::RootBuffer;

/// Parameter overrides keyed by parameter path, e.g.
/// `material[0].factors.final_factor` or `spheroid[1].center.x`.
pub type Overrides<T> = BTreeMap<String, T>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    Rectangular,
    RectangularCurved,
    RectangularRagged,
    RectangularTumour,
    CylinderTumour,
}

impl TemplateName {
    pub const ALL: [TemplateName; 5] = [
        TemplateName::Rectangular,
        TemplateName::RectangularCurved,
        TemplateName::RectangularRagged,
        TemplateName::RectangularTumour,
        TemplateName::CylinderTumour,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::Rectangular => "rectangular",
            TemplateName::RectangularCurved => "rectangular_curved",
            TemplateName::RectangularRagged => "rectangular_ragged",
            TemplateName::RectangularTumour => "rectangular_tumour",
            TemplateName::CylinderTumour => "cylinder_tumour",
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '+'], "_");
        TemplateName::ALL.into_iter().find(|t| t.as_str() == norm).ok_or_else(|| Error::UnknownTemplate(s.to_string()))
    }
}

/// The sample body the projector and camera look at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", rename_all = "snake_case")]
pub enum Host<T> {
    Slab { slab: Slab<T>, partition: FacePartition<T> },
    Cylinder(HollowCylinder<T>),
}

/// Which closed body a point lies in. Spheroids take precedence over the host.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BodyId {
    Background,
    Backdrop,
    Host,
    Spheroid(usize),
}

impl BodyId {
    #[inline]
    pub fn is_sample(self) -> bool {
        matches!(self, BodyId::Host | BodyId::Spheroid(_))
    }
}

/// Result of point classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Background,
    Backdrop,
    Material(MaterialId),
}

/// A ray crossing from one body into another.
#[derive(Debug, Clone, Copy)]
pub struct Crossing<T> {
    pub t: T,
    pub point: Vec3<T>,
    /// Unit surface normal facing the side the ray arrives from.
    pub normal: Vec3<T>,
    pub from: BodyId,
    pub to: BodyId,
}

/// A render-ready scene. Immutable once built; shared by render workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SceneTemplate<T> {
    pub name: TemplateName,
    pub host: Host<T>,
    pub spheroids: Vec<Spheroid<T>>,
    pub backdrop: Option<Backdrop<T>>,
    pub camera: Camera<T>,
    pub projector: Projector<T>,
    pub materials: Vec<Material<T>>,
}

/// Builds a template by name and applies parameter overrides.
///
/// `spheroid_count` is applied first so later `spheroid[k]` keys can address
/// newly added spheroids; the remaining keys apply in sorted order.
pub fn build_template<T: Real>(name: TemplateName, overrides: &Overrides<T>) -> Result<SceneTemplate<T>> {
    let mut scene = templates::default_template::<T>(name);
    if let Some(&count) = overrides.get("spheroid_count") {
        scene.set_param("spheroid_count", count)?;
    }
    for (key, &value) in overrides.iter().filter(|(k, _)| k.as_str() != "spheroid_count") {
        scene.set_param(key, value)?;
    }
    scene.refresh();
    scene.validate()?;
    Ok(scene)
}

impl<T: Real> SceneTemplate<T> {
    /// Recomputes derived geometry after parameter edits.
    pub(crate) fn refresh(&mut self) {
        if let Host::Slab { slab, partition: FacePartition::Ragged(r) } = &mut self.host {
            r.generate(slab.half_width());
        }
    }

    pub fn material(&self, id: MaterialId) -> &Material<T> {
        &self.materials[id]
    }

    #[inline]
    pub fn body_at(&self, p: Vec3<T>) -> BodyId {
        if let Some(k) = self.spheroids.iter().position(|s| s.contains(p)) {
            return BodyId::Spheroid(k);
        }
        let in_host = match &self.host {
            Host::Slab { slab, .. } => slab.contains(p),
            Host::Cylinder(c) => c.contains(p),
        };
        if in_host {
            return BodyId::Host;
        }
        match &self.backdrop {
            Some(b) if b.contains(p) => BodyId::Backdrop,
            _ => BodyId::Background,
        }
    }

    /// Material of a sample body at `p`; `None` for backdrop and background.
    #[inline]
    pub fn material_in(&self, body: BodyId, p: Vec3<T>) -> Option<MaterialId> {
        match body {
            BodyId::Spheroid(k) => Some(self.spheroids[k].material),
            BodyId::Host => Some(match &self.host {
                Host::Slab { partition, .. } => partition.material_at(p.x, p.y),
                Host::Cylinder(c) => c.material,
            }),
            BodyId::Background | BodyId::Backdrop => None,
        }
    }

    /// Single source of truth for which material owns a point. Used by both
    /// the lit and the ground-truth renders.
    #[inline]
    pub fn classify_point(&self, p: Vec3<T>) -> Region {
        let body = self.body_at(p);
        match body {
            BodyId::Background => Region::Background,
            BodyId::Backdrop => Region::Backdrop,
            _ => Region::Material(self.material_in(body, p).expect("sample body has a material")),
        }
    }

    fn surface_roots(&self, ray: &Ray<T>, out: &mut RootBuffer<T>) {
        match &self.host {
            Host::Slab { slab, .. } => slab.roots(ray, out),
            Host::Cylinder(c) => c.roots(ray, out),
        }
        for s in &self.spheroids {
            s.roots(ray, out);
        }
        if let Some(b) = &self.backdrop {
            b.roots(ray, out);
        }
    }

    /// First point along `ray` in `(t_min, t_max)` where the containing body
    /// changes.
    pub fn next_boundary(&self, ray: &Ray<T>, t_min: T, t_max: T) -> Option<Crossing<T>> {
        let mut roots = RootBuffer::new();
        self.surface_roots(ray, &mut roots);
        roots.retain(|r| r.0 > t_min && r.0 < t_max);
        roots.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let eps = T::geom_eps();
        for &(t, n) in roots.iter() {
            let before = self.body_at(ray.at(t - eps));
            let after = self.body_at(ray.at(t + eps));
            if before != after {
                let normal = if n.dot(ray.dir) > T::zero() { -n } else { n };
                return Some(Crossing { t, point: ray.at(t), normal, from: before, to: after });
            }
        }
        None
    }

    /// Image scale that maps the radiance of a white Lambertian reflector
    /// under full-intensity illumination at the default 3.5 W to 1.0.
    pub fn reference_exposure(&self) -> T {
        T::PI() * self.projector.pattern_area() / T::lit(DEFAULT_POWER_W)
    }

    pub fn validate(&self) -> Result<()> {
        if self.materials.is_empty() {
            return Err(Error::invalid("material", "scene has no materials"));
        }
        for (i, m) in self.materials.iter().enumerate() {
            m.validate(&format!("material[{i}]"))?;
        }
        let n_mat = self.materials.len();
        let check_id = |path: String, id: MaterialId| -> Result<()> {
            if id < n_mat {
                Ok(())
            } else {
                Err(Error::invalid(path, format!("material id {id} out of range (have {n_mat})")))
            }
        };
        match &self.host {
            Host::Slab { slab, partition } => {
                if !(slab.size.min_component() > T::zero()) || !slab.size.is_finite() {
                    return Err(Error::invalid("slab.size", "slab extents must be positive"));
                }
                for id in partition.materials() {
                    check_id("partition.material".into(), id)?;
                }
                match partition {
                    FacePartition::Curve(c) if !c.coeffs.iter().all(|v| v.is_finite()) => {
                        return Err(Error::invalid("partition.curve", "non-finite curve coefficient"));
                    }
                    FacePartition::Ragged(r) => {
                        let gap = r.levels[1] - r.levels[0];
                        if !(gap > T::zero()) || !(r.jitter >= T::zero()) || !(r.jitter * T::lit(2.0) < gap) {
                            return Err(Error::invalid(
                                "partition.jitter",
                                "levels must increase and jitter must stay below half the level gap",
                            ));
                        }
                    }
                    _ => {}
                }
            }
            Host::Cylinder(c) => {
                if !(c.wall > T::zero() && c.radius > c.wall) {
                    return Err(Error::invalid(
                        "cylinder.wall",
                        format!("need radius > wall > 0, got radius {} wall {}", c.radius, c.wall),
                    ));
                }
                if !(c.length > T::zero()) {
                    return Err(Error::invalid("cylinder.length", "length must be positive"));
                }
                check_id("cylinder.material".into(), c.material)?;
                if !matches!(self.projector.model, ProjectionModel::Perspective { .. }) {
                    return Err(Error::invalid("projector.model", "cylinder scenes require a perspective projector"));
                }
            }
        }
        for (k, s) in self.spheroids.iter().enumerate() {
            let path = format!("spheroid[{k}]");
            if !(s.scale > T::zero()) || !(s.semi_axes.min_component() > T::zero()) || !s.axes().is_finite() {
                return Err(Error::invalid(format!("{path}.semi_axes"), "semi-axes must be strictly positive"));
            }
            check_id(format!("{path}.material"), s.material)?;
            self.check_spheroid_center(&path, s)?;
        }
        if let Some(b) = &self.backdrop {
            if !(b.albedo >= T::zero() && b.albedo <= T::one()) {
                return Err(Error::invalid("backdrop.albedo", "albedo must lie in [0, 1]"));
            }
        }
        self.camera.validate()?;
        self.projector.validate()
    }

    fn check_spheroid_center(&self, path: &str, s: &Spheroid<T>) -> Result<()> {
        let c = s.center;
        let a = s.axes();
        let ok = match &self.host {
            Host::Slab { slab, .. } => {
                c.x.abs() <= slab.half_width() && c.y.abs() <= slab.half_depth() && c.z >= -slab.size.z && c.z <= a.z
            }
            Host::Cylinder(cyl) => {
                let r = (c.x * c.x + c.y * c.y).sqrt();
                r >= cyl.inner_radius() - a.max_component() && r <= cyl.radius && c.z >= T::zero() && c.z <= cyl.length
            }
        };
        if ok && c.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(
                format!("{path}.center"),
                format!("centre ({}, {}, {}) lies outside the host body", c.x, c.y, c.z),
            ))
        }
    }
}
