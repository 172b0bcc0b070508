use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::scene::{BodyId, MaterialId, SceneTemplate};

/// Fixed 8-bit encoding of the property channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtEncoding {
    pub channel_min: f64,
    pub channel_max: f64,
    pub pixel_min: u8,
    pub pixel_max: u8,
    pub blue: u8,
}

pub const GT_ENCODING: GtEncoding =
    GtEncoding { channel_min: 0.05, channel_max: 0.95, pixel_min: 13, pixel_max: 242, blue: 0 };

/// `round(v * 255)`, half away from zero.
pub fn factor_to_pixel<T: Real>(v: T) -> Result<u8> {
    if !(v >= T::zero() && v <= T::one()) {
        return Err(Error::Contract(format!("ground-truth value {v} outside [0, 1]")));
    }
    Ok((v * T::lit(255.0)).round().to_u8().expect("value within [0, 255]"))
}

/// RGB triple a material writes into the ground-truth map.
pub fn material_pixel<T: Real>(scene: &SceneTemplate<T>, id: MaterialId) -> Result<[u8; 3]> {
    let m = scene.material(id);
    Ok([factor_to_pixel(m.gt_absorption)?, factor_to_pixel(m.gt_scattering)?, GT_ENCODING.blue])
}

/// Material seen first along the pixel-center ray, if any.
pub fn first_hit_material<T: Real>(scene: &SceneTemplate<T>, i: usize, j: usize) -> Option<MaterialId> {
    let ray = scene.camera.pixel_center_ray(i, j);
    let eps = T::geom_eps();
    let mut t = T::zero();
    while let Some(c) = scene.next_boundary(&ray, t, T::infinity()) {
        match c.to {
            BodyId::Backdrop => return None,
            to if to.is_sample() => return scene.material_in(to, c.point + ray.dir * eps),
            _ => t = c.t,
        }
    }
    None
}

/// Flat-shaded property map: red = absorption proxy, green = scattering
/// proxy, blue = 0. One ray per pixel, no random numbers.
pub fn render_ground_truth<T: Real>(scene: &SceneTemplate<T>) -> Result<RgbImage> {
    scene.validate()?;
    let palette = (0..scene.materials.len()).map(|id| material_pixel(scene, id)).collect::<Result<Vec<_>>>()?;
    let (w, h) = (scene.camera.width, scene.camera.height);
    let rows: Vec<Vec<[u8; 3]>> = (0..h)
        .into_par_iter()
        .map(|j| (0..w).map(|i| first_hit_material(scene, i, j).map_or([0, 0, 0], |id| palette[id])).collect())
        .collect();
    let mut img = RgbImage::new(w as u32, h as u32);
    for (j, row) in rows.iter().enumerate() {
        for (i, px) in row.iter().enumerate() {
            img.put_pixel(i as u32, j as u32, image::Rgb(*px));
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{build_template, Overrides, TemplateName};

    #[test]
    fn encoding_examples() {
        assert_eq!(factor_to_pixel(0.05_f64).unwrap(), 13);
        assert_eq!(factor_to_pixel(0.95_f64).unwrap(), 242);
        assert_eq!(factor_to_pixel(0.0_f64).unwrap(), 0);
        assert_eq!(factor_to_pixel(1.0_f64).unwrap(), 255);
        assert_eq!(factor_to_pixel(0.5_f64).unwrap(), 128);
        assert_eq!(factor_to_pixel(0.05_f32).unwrap(), 13);
        assert!(factor_to_pixel(1.01_f64).is_err());
        assert!(factor_to_pixel(-0.01_f64).is_err());
        assert!(factor_to_pixel(f64::NAN).is_err());
    }

    #[test]
    fn uniform_slab_is_one_colour() {
        let mut o = Overrides::new();
        o.insert("camera.width".into(), 32.0);
        o.insert("camera.height".into(), 32.0);
        o.insert("material[0].gt_absorption".into(), 0.95);
        o.insert("material[0].gt_scattering".into(), 0.05);
        let scene = build_template::<f64>(TemplateName::Rectangular, &o).unwrap();
        let img = render_ground_truth(&scene).unwrap();
        assert!(img.pixels().all(|p| p.0 == [242, 13, 0]));
        assert_eq!(img, render_ground_truth(&scene).unwrap());
    }
}
