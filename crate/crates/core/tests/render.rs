mod common;

use sfdi_forge::illumination::SinusoidalPattern;
use sfdi_forge::scene::{build_template, FactorTriple, Overrides, TemplateName};
use sfdi_forge::transport::{render, render_on, RenderSettings};

#[test]
fn exposure_maps_white_reflector_to_one() {
    let mut scene = common::scene_with(TemplateName::Rectangular, 16, &[("backdrop.albedo", 1.0)]);
    scene.materials[0].factors = FactorTriple::new(1.0, 1.0, 0.0);
    scene.projector.pattern = SinusoidalPattern::uniform(1.0);
    let r = render(&scene, &RenderSettings::with_spp(4, 1)).unwrap();
    for v in &r.pixels {
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }
    scene.backdrop.as_mut().unwrap().albedo = 0.4;
    let r = render(&scene, &RenderSettings::with_spp(4, 1)).unwrap();
    assert!(r.to_rgb8().pixels().all(|p| p.0 == [102, 102, 102]));
}

#[test]
fn worker_count_does_not_change_pixels() {
    for name in [TemplateName::RectangularTumour, TemplateName::CylinderTumour] {
        let scene = common::scene(name, 40);
        let s = RenderSettings::with_spp(3, 42);
        let base = render_on(&scene, &s, 1).unwrap();
        for w in [2, 4, 16] {
            let other = render_on(&scene, &s, w).unwrap();
            assert!(
                base.pixels.iter().zip(&other.pixels).all(|(a, b)| a.to_bits() == b.to_bits()),
                "{name} workers {w}"
            );
        }
        let mut odd_tiles = s.clone();
        odd_tiles.tile_size = 7;
        let tiled = render_on(&scene, &odd_tiles, 4).unwrap();
        assert_eq!(base.pixels, tiled.pixels, "{name}: tile size changed pixels");
    }
}

#[test]
fn seeds_change_noise_only() {
    let scene = common::scene(TemplateName::Rectangular, 24);
    let a = render(&scene, &RenderSettings::with_spp(16, 1)).unwrap();
    let b = render(&scene, &RenderSettings::with_spp(16, 2)).unwrap();
    assert_ne!(a.pixels, b.pixels);
    assert!((a.mean() - b.mean()).abs() < 0.05 * a.mean());
}

#[test]
fn single_precision_pipeline_agrees() {
    let mut o = Overrides::<f32>::new();
    o.insert("camera.width".into(), 24.0);
    o.insert("camera.height".into(), 24.0);
    let s32 = build_template::<f32>(TemplateName::RectangularCurved, &o).unwrap();
    let s64 = common::scene(TemplateName::RectangularCurved, 24);
    let m32 = render(&s32, &RenderSettings::with_spp(32, 5)).unwrap().mean() as f64;
    let m64 = render(&s64, &RenderSettings::with_spp(32, 5)).unwrap().mean();
    assert!((m32 - m64).abs() < 0.05 * m64, "{m32} vs {m64}");
}

#[test]
fn fringes_appear_at_commanded_frequency() {
    let scene = common::scene(TemplateName::Rectangular, 64);
    let r = render(&scene, &RenderSettings::with_spp(32, 9)).unwrap();
    // 50 mm field at 0.2 mm⁻¹ is 10 periods.
    assert_eq!(common::row_fft_peak(&r.pixels, 64, 64), 10);
    let shifted = common::scene_with(TemplateName::Rectangular, 64, &[("pattern.frequency", 0.16)]);
    let r = render(&shifted, &RenderSettings::with_spp(32, 9)).unwrap();
    assert_eq!(common::row_fft_peak(&r.pixels, 64, 64), 8);
}

#[test]
fn darker_absorber_renders_darker() {
    let mut means = Vec::new();
    for a in [0.9, 0.5, 0.1] {
        let scene = common::scene_with(
            TemplateName::Rectangular,
            24,
            &[("material[0].factors.final_factor", 0.0), ("material[0].factors.absorption_factor", a)],
        );
        means.push(render(&scene, &RenderSettings::with_spp(32, 3)).unwrap().mean());
    }
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
}

#[test]
fn step_cap_terminations_are_counted() {
    let scene = common::scene_with(
        TemplateName::Rectangular,
        8,
        &[
            ("material[0].factors.final_factor", 1.0),
            ("material[0].subsurface_albedo", 1.0),
            ("material[0].subsurface_mfp", 0.01),
        ],
    );
    let mut s = RenderSettings::with_spp(4, 1);
    s.walk_step_cap = 5;
    let r = render(&scene, &s).unwrap();
    assert!(r.stats.cap_terminations > 0);
    assert!(r.stats.cap_terminations <= r.stats.walks);
    assert!(r.stats.max_throughput <= 1.0);
}
