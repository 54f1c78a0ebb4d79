use viewpack::fixtures;
use viewpack::guidance::{spread_guidance, GuidanceConfig};
use viewpack::mesh::Vec3;
use viewpack::pipeline::{render_mesh, RenderOptions};
use viewpack::raster::{ViewGBuffer, ViewId, ViewSpec};
use viewpack::{Image, Mask};

fn read3(img: &Image, x: usize, y: usize) -> Vec3 {
    let p = img.pixel(x, y);
    Vec3::new(p[0].into(), p[1].into(), p[2].into())
}

/// Linear scan over source pixels in row-major order; the first of equally
/// near pixels wins.
fn brute_nearest(src: &ViewGBuffer, p: &Vec3) -> (usize, usize, f64) {
    let mut best = (0, 0, f64::INFINITY);
    for y in 0..src.height() {
        for x in 0..src.width() {
            if src.alpha.get(x, y) {
                let d = (read3(&src.position, x, y) - p).norm();
                if d < best.2 {
                    best = (x, y, d);
                }
            }
        }
    }
    best
}

fn angle(a: &Vec3, b: &Vec3) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos().to_degrees()
}

#[test]
fn spreading_matches_a_brute_force_nearest_search() {
    let cfg = GuidanceConfig {
        record_matches: true,
        ..Default::default()
    };
    for name in ["torus", "sphere", "capsule", "l_bracket", "two_plates"] {
        let (_, g) = render_mesh(&fixtures::corpus_mesh(name), &RenderOptions { resolution: 48, margin: 0.05 }).unwrap();
        let image = fixtures::procedural_texture(48, 48);
        let f = spread_guidance(ViewId::Frontal, &image, &g, &cfg).unwrap();
        let src = &g[0];
        for t in &g[1..] {
            let (out, mask) = &f.views[t.view.id.index()];
            for y in 0..t.height() {
                for x in 0..t.width() {
                    if !t.alpha.get(x, y) {
                        assert!(!mask.get(x, y));
                        continue;
                    }
                    let (sx, sy, d) = brute_nearest(src, &read3(&t.position, x, y));
                    let a = angle(&read3(&t.normal, x, y), &read3(&src.normal, sx, sy));
                    let copy = d < 0.02 && a < 45.0;
                    assert_eq!(mask.get(x, y), copy, "{name} {} ({x}, {y}): d {d} angle {a}", t.view.id);
                    if copy {
                        assert_eq!(out.pixel(x, y), image.pixel(sx, sy), "{name} {} ({x}, {y})", t.view.id);
                    }
                }
            }
        }
        for m in &f.matches {
            let t = &g[m.view.index()];
            let (sx, sy, _) = brute_nearest(src, &read3(&t.position, m.x, m.y));
            assert_eq!((m.source_x, m.source_y), (sx, sy));
        }
    }
}

/// Six flat views where every source pixel sits at the same point.
fn degenerate_views(n: usize) -> Vec<ViewGBuffer> {
    ViewId::ALL
        .iter()
        .map(|&id| ViewGBuffer {
            view: ViewSpec::canonical(id, 1.0),
            position: Image::filled(n, n, 3, 0.25),
            normal: Image::from_fn(n, n, 3, |_, _, p| p.copy_from_slice(&[0.0, 0.0, 1.0])),
            alpha: Mask::from_fn(n, n, |x, y| (x + y) % 3 != 0),
            depth: Image::filled(n, n, 1, 2.75),
            vertex_ndc: Vec::new(),
        })
        .collect()
}

#[test]
fn ties_go_to_the_lowest_source_pixel() {
    let n = 16;
    let g = degenerate_views(n);
    let image = Image::from_fn(n, n, 3, |x, y, p| p.copy_from_slice(&[x as f32, y as f32, 0.0]));
    let cfg = GuidanceConfig {
        record_matches: true,
        ..Default::default()
    };
    let f = spread_guidance(ViewId::Frontal, &image, &g, &cfg).unwrap();
    // (1, 0) is the first foreground source pixel in row-major order
    assert!(!f.matches.is_empty());
    for m in &f.matches {
        assert_eq!((m.source_x, m.source_y), (1, 0));
        assert_eq!(m.distance, 0.0);
    }
    // identical position and normal always pass both gates
    for id in &ViewId::ALL[1..] {
        assert_eq!(f.views[id.index()].1, g[id.index()].alpha);
    }
}

#[test]
fn spreading_is_deterministic() {
    let (_, g) = render_mesh(&fixtures::corpus_mesh("torus"), &RenderOptions { resolution: 128, margin: 0.05 }).unwrap();
    let image = fixtures::procedural_texture(128, 128);
    let cfg = GuidanceConfig::default();
    let a = spread_guidance(ViewId::Frontal, &image, &g, &cfg).unwrap();
    for _ in 0..3 {
        let b = spread_guidance(ViewId::Frontal, &image, &g, &cfg).unwrap();
        for (x, y) in a.views.iter().zip(&b.views) {
            assert_eq!(x.0, y.0);
            assert_eq!(x.1, y.1);
        }
    }
}
