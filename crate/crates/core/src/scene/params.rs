use std::fmt;

use super::geometry::FacePartition;
use super::optics::ProjectionModel;
use super::templates::{stock_spheroid, tumour_material_id, MAX_SPHEROIDS};
use super::{Host, SceneTemplate};
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::real::Real;

/// One `name` or `name[index]` component of a parameter path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub index: Option<usize>,
}

/// Dotted parameter path such as `material[0].factors.final_factor`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamPath {
    pub raw: String,
    pub segments: Vec<Segment>,
}

impl ParamPath {
    pub fn parse(raw: &str) -> Result<Self> {
        let bad = || Error::UnknownParameter(raw.to_string());
        let mut segments = Vec::new();
        for part in raw.split('.') {
            let (name, index) = match part.split_once('[') {
                Some((name, rest)) => {
                    let idx = rest.strip_suffix(']').ok_or_else(bad)?;
                    (name, Some(idx.parse::<usize>().map_err(|_| bad())?))
                }
                None => (part, None),
            };
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(bad());
            }
            segments.push(Segment { name: name.to_string(), index });
        }
        Ok(Self { raw: raw.to_string(), segments })
    }

    fn shape(&self) -> Vec<(&str, Option<usize>)> {
        self.segments.iter().map(|s| (s.name.as_str(), s.index)).collect()
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

fn axis_mut<'a, T>(v: &'a mut Vec3<T>, axis: &str) -> Option<&'a mut T> {
    match axis {
        "x" => Some(&mut v.x),
        "y" => Some(&mut v.y),
        "z" => Some(&mut v.z),
        _ => None,
    }
}

fn as_count<T: Real>(path: &str, value: T) -> Result<usize> {
    if value >= T::zero() && value.fract() == T::zero() && value < T::lit(1e9) {
        Ok(value.to_usize().unwrap())
    } else {
        Err(Error::invalid(path, format!("expected a non-negative integer, got {value}")))
    }
}

impl<T: Real> SceneTemplate<T> {
    /// Sets one parameter. Structural invariants are checked later by
    /// [`SceneTemplate::validate`].
    pub fn set_param(&mut self, path: &str, value: T) -> Result<()> {
        let p = ParamPath::parse(path)?;
        let unknown = || Error::UnknownParameter(path.to_string());
        let shape = p.shape();
        match shape.as_slice() {
            [("spheroid_count", None)] => {
                let n = as_count(path, value)?;
                if n > MAX_SPHEROIDS {
                    return Err(Error::invalid(path, format!("at most {MAX_SPHEROIDS} spheroids supported, got {n}")));
                }
                let tumour = tumour_material_id(self.name);
                if n > 0 && tumour >= self.materials.len() {
                    return Err(Error::invalid(path, format!("template `{}` has no tumour material", self.name)));
                }
                let name = self.name;
                while self.spheroids.len() < n {
                    let k = self.spheroids.len();
                    self.spheroids.push(stock_spheroid(name, k, tumour));
                }
                self.spheroids.truncate(n);
                return Ok(());
            }
            [("spheroid", Some(k)), ("material", None)] => {
                let id = as_count(path, value)?;
                self.spheroids.get_mut(*k).ok_or_else(unknown)?.material = id;
                return Ok(());
            }
            [("camera", None), (dim @ ("width" | "height"), None)] => {
                let n = as_count(path, value)?;
                if *dim == "width" {
                    self.camera.width = n;
                } else {
                    self.camera.height = n;
                }
                return Ok(());
            }
            [("pattern", None), ("orientation", None)] => {
                self.projector.pattern.set_orientation_deg(value);
                return Ok(());
            }
            [("partition", None), ("seed", None)] => {
                let seed = as_count(path, value)? as u64;
                match &mut self.host {
                    Host::Slab { partition: FacePartition::Ragged(r), .. } => r.seed = seed,
                    _ => return Err(unknown()),
                }
                return Ok(());
            }
            _ => {}
        }
        let slot = self.real_slot(&shape).ok_or_else(unknown)?;
        *slot = value;
        Ok(())
    }

    /// Reads one parameter back.
    pub fn get_param(&self, path: &str) -> Result<T> {
        let p = ParamPath::parse(path)?;
        let unknown = || Error::UnknownParameter(path.to_string());
        let shape = p.shape();
        let from_usize = |n: usize| T::from_usize(n).unwrap();
        match shape.as_slice() {
            [("spheroid_count", None)] => return Ok(from_usize(self.spheroids.len())),
            [("spheroid", Some(k)), ("material", None)] => {
                return Ok(from_usize(self.spheroids.get(*k).ok_or_else(unknown)?.material))
            }
            [("camera", None), ("width", None)] => return Ok(from_usize(self.camera.width)),
            [("camera", None), ("height", None)] => return Ok(from_usize(self.camera.height)),
            [("pattern", None), ("orientation", None)] => return Ok(self.projector.pattern.orientation_deg()),
            [("partition", None), ("seed", None)] => {
                return match &self.host {
                    Host::Slab { partition: FacePartition::Ragged(r), .. } => Ok(T::from_u64(r.seed).unwrap()),
                    _ => Err(unknown()),
                }
            }
            _ => {}
        }
        let mut copy = self.clone();
        let slot = copy.real_slot(&shape).ok_or_else(unknown)?;
        Ok(*slot)
    }

    fn real_slot(&mut self, shape: &[(&str, Option<usize>)]) -> Option<&mut T> {
        match shape {
            [("material", Some(i)), ("factors", None), (f, None)] => {
                let m = self.materials.get_mut(*i)?;
                match *f {
                    "final_factor" => Some(&mut m.factors.final_factor),
                    "absorption_factor" => Some(&mut m.factors.absorption_factor),
                    "scattering_factor" => Some(&mut m.factors.scattering_factor),
                    _ => None,
                }
            }
            [("material", Some(i)), (f, None)] => {
                let m = self.materials.get_mut(*i)?;
                match *f {
                    "gt_absorption" => Some(&mut m.gt_absorption),
                    "gt_scattering" => Some(&mut m.gt_scattering),
                    "hg_g" => Some(&mut m.hg_g),
                    "ior" => Some(&mut m.ior),
                    "subsurface_mfp" => Some(&mut m.subsurface_mfp),
                    "subsurface_albedo" => Some(&mut m.subsurface_albedo),
                    _ => None,
                }
            }
            [("spheroid", Some(k)), ("scale", None)] => Some(&mut self.spheroids.get_mut(*k)?.scale),
            [("spheroid", Some(k)), (field, None), (axis, None)] => {
                let s = self.spheroids.get_mut(*k)?;
                match *field {
                    "center" => axis_mut(&mut s.center, axis),
                    "semi_axes" => axis_mut(&mut s.semi_axes, axis),
                    _ => None,
                }
            }
            [("slab", None), ("size", None), (axis, None)] => match &mut self.host {
                Host::Slab { slab, .. } => axis_mut(&mut slab.size, axis),
                _ => None,
            },
            [("cylinder", None), (f, None)] => match &mut self.host {
                Host::Cylinder(c) => match *f {
                    "radius" => Some(&mut c.radius),
                    "length" => Some(&mut c.length),
                    "wall" => Some(&mut c.wall),
                    _ => None,
                },
                _ => None,
            },
            [("partition", None), ("jitter", None)] => match &mut self.host {
                Host::Slab { partition: FacePartition::Ragged(r), .. } => Some(&mut r.jitter),
                _ => None,
            },
            [("partition", None), ("curve", Some(i))] => match &mut self.host {
                Host::Slab { partition: FacePartition::Curve(c), .. } => c.coeffs.get_mut(*i),
                _ => None,
            },
            [("backdrop", None), ("albedo", None)] => self.backdrop.as_mut().map(|b| &mut b.albedo),
            [("camera", None), ("fov", None)] => Some(&mut self.camera.fov_deg),
            [("camera", None), ("position", None), (axis, None)] => axis_mut(&mut self.camera.position, axis),
            [("projector", None), ("position", None), (axis, None)] => axis_mut(&mut self.projector.position, axis),
            [("projector", None), (f, None)] => match (*f, &mut self.projector.model) {
                ("power", _) => Some(&mut self.projector.power),
                ("throw_angle", ProjectionModel::Perspective { throw_angle_deg, .. }) => Some(throw_angle_deg),
                ("reference_distance", ProjectionModel::Perspective { reference_distance, .. }) => {
                    Some(reference_distance)
                }
                ("width", ProjectionModel::Orthographic { width, .. }) => Some(width),
                ("height", ProjectionModel::Orthographic { height, .. }) => Some(height),
                _ => None,
            },
            [("pattern", None), (f, None)] => {
                let pat = &mut self.projector.pattern;
                match *f {
                    "frequency" => Some(&mut pat.spatial_frequency),
                    "phase" => Some(&mut pat.phase),
                    "dc_level" => Some(&mut pat.dc_level),
                    "modulation_depth" => Some(&mut pat.modulation_depth),
                    _ => None,
                }
            }
            _ => None,
        }
    }
}
