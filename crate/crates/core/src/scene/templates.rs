use super::geometry::{Backdrop, BoundaryCurve, FacePartition, HollowCylinder, RaggedPartition, Slab, Spheroid};
use super::material::Material;
use super::optics::{Camera, ProjectionModel, Projector};
use super::{Host, SceneTemplate, TemplateName};
use crate::illumination::SinusoidalPattern;
use crate::math::Vec3;
use crate::real::Real;

/// Upper bound on `spheroid_count`.
pub const MAX_SPHEROIDS: usize = 8;

const SLAB_SIZE: [f64; 3] = [50.0, 50.0, 10.0];
const CAMERA_HEIGHT: f64 = 100.0;
const PROJECTOR_HEIGHT: f64 = 120.0;
const ORTHO_EXTENT: f64 = 60.0;
const BACKDROP_GAP: f64 = 0.5;
const BACKDROP_ALBEDO: f64 = 0.5;

const CYL_RADIUS: f64 = 15.0;
const CYL_LENGTH: f64 = 100.0;
const CYL_WALL: f64 = 3.0;
const LUMEN_CAMERA_FOV: f64 = 100.0;
const LUMEN_THROW_ANGLE: f64 = 90.0;
const LUMEN_REFERENCE_DISTANCE: f64 = 20.0;

fn v<T: Real>(x: f64, y: f64, z: f64) -> Vec3<T> {
    Vec3::from_f64(x, y, z)
}

fn material<T: Real>(final_factor: f64) -> Material<T> {
    Material::from_final_factor(T::lit(final_factor))
}

fn slab_host<T: Real>(partition: FacePartition<T>) -> Host<T> {
    Host::Slab { slab: Slab { size: v(SLAB_SIZE[0], SLAB_SIZE[1], SLAB_SIZE[2]) }, partition }
}

fn curve<T: Real>() -> FacePartition<T> {
    FacePartition::Curve(BoundaryCurve {
        coeffs: [T::lit(-2.0), T::lit(0.1), T::lit(0.012), T::lit(-2e-4)],
        materials: [0, 1],
    })
}

fn overhead_camera<T: Real>() -> Camera<T> {
    // Field of view frames exactly the 50 mm slab face.
    let fov = 2.0 * (0.5 * SLAB_SIZE[0] / CAMERA_HEIGHT).atan().to_degrees();
    Camera::looking(v(0.0, 0.0, CAMERA_HEIGHT), v(0.0, 0.0, -1.0), v(0.0, 1.0, 0.0), T::lit(fov))
}

fn overhead_projector<T: Real>() -> Projector<T> {
    Projector::new(
        v(0.0, 0.0, PROJECTOR_HEIGHT),
        v(0.0, 0.0, -1.0),
        v(0.0, 1.0, 0.0),
        SinusoidalPattern::default(),
        ProjectionModel::Orthographic { width: T::lit(ORTHO_EXTENT), height: T::lit(ORTHO_EXTENT) },
    )
}

fn slab_backdrop<T: Real>() -> Option<Backdrop<T>> {
    Some(Backdrop { height: T::lit(-SLAB_SIZE[2] - BACKDROP_GAP), albedo: T::lit(BACKDROP_ALBEDO) })
}

/// Default spheroid `k` for a template. Slab tumours sit half-embedded in the
/// top face on a ring; lumen polyps sit on the inner wall along a helix.
pub(crate) fn stock_spheroid<T: Real>(name: TemplateName, k: usize, material: usize) -> Spheroid<T> {
    let kf = k as f64;
    match name {
        TemplateName::CylinderTumour => {
            let phi = (35.0 + 137.5 * kf).to_radians();
            let z = 30.0 + (11.0 * kf) % 55.0;
            let r = CYL_RADIUS - CYL_WALL;
            Spheroid::new(v(r * phi.cos(), r * phi.sin(), z), v(4.0, 4.0, 4.0), material)
        }
        _ => {
            let ang = (40.0 + 137.5 * kf).to_radians();
            let rad = 11.0 + 3.0 * (kf % 3.0);
            let axes = if k.is_multiple_of(2) { v(5.0, 5.0, 3.0) } else { v(4.0, 6.0, 3.0) };
            Spheroid::new(v(rad * ang.cos(), rad * ang.sin(), 0.0), axes, material)
        }
    }
}

pub(crate) fn tumour_material_id(name: TemplateName) -> usize {
    match name {
        TemplateName::CylinderTumour => 1,
        _ => 2,
    }
}

pub(crate) fn default_template<T: Real>(name: TemplateName) -> SceneTemplate<T> {
    match name {
        TemplateName::Rectangular => SceneTemplate {
            name,
            host: slab_host(FacePartition::Single(0)),
            spheroids: Vec::new(),
            backdrop: slab_backdrop(),
            camera: overhead_camera(),
            projector: overhead_projector(),
            materials: vec![material(0.5)],
        },
        TemplateName::RectangularCurved => SceneTemplate {
            name,
            host: slab_host(curve()),
            spheroids: Vec::new(),
            backdrop: slab_backdrop(),
            camera: overhead_camera(),
            projector: overhead_projector(),
            materials: vec![material(0.3), material(0.7)],
        },
        TemplateName::RectangularRagged => {
            let mut ragged = RaggedPartition::new(1, [T::lit(-8.0), T::lit(8.0)], T::lit(3.0), 13, [0, 1, 2]);
            ragged.generate(T::lit(0.5 * SLAB_SIZE[0]));
            SceneTemplate {
                name,
                host: slab_host(FacePartition::Ragged(ragged)),
                spheroids: Vec::new(),
                backdrop: slab_backdrop(),
                camera: overhead_camera(),
                projector: overhead_projector(),
                materials: vec![material(0.2), material(0.5), material(0.8)],
            }
        }
        TemplateName::RectangularTumour => SceneTemplate {
            name,
            host: slab_host(curve()),
            spheroids: (0..2).map(|k| stock_spheroid(name, k, 2)).collect(),
            backdrop: slab_backdrop(),
            camera: overhead_camera(),
            projector: overhead_projector(),
            materials: vec![material(0.35), material(0.75), material(0.15)],
        },
        TemplateName::CylinderTumour => {
            let mut projector = Projector::new(
                v(0.0, 2.5, 1.0),
                v(0.0, 0.0, 1.0),
                v(0.0, 1.0, 0.0),
                SinusoidalPattern::default(),
                ProjectionModel::Perspective {
                    throw_angle_deg: T::lit(LUMEN_THROW_ANGLE),
                    reference_distance: T::lit(LUMEN_REFERENCE_DISTANCE),
                },
            );
            projector.power = T::lit(super::DEFAULT_POWER_W);
            SceneTemplate {
                name,
                host: Host::Cylinder(HollowCylinder {
                    radius: T::lit(CYL_RADIUS),
                    length: T::lit(CYL_LENGTH),
                    wall: T::lit(CYL_WALL),
                    material: 0,
                }),
                spheroids: (0..2).map(|k| stock_spheroid(name, k, 1)).collect(),
                backdrop: None,
                camera: Camera::looking(
                    v(0.0, -2.5, 1.0),
                    v(0.0, 0.0, 1.0),
                    v(0.0, 1.0, 0.0),
                    T::lit(LUMEN_CAMERA_FOV),
                ),
                projector,
                materials: vec![material(0.6), material(0.2)],
            }
        }
    }
}
