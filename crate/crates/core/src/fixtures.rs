//! Procedural meshes with non-overlapping UV layouts, the evaluation corpus
//! built from them, and the procedural texture used as a stand-in for
//! generated appearance.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::Image;
use crate::mesh::{Mesh, Vec2, Vec3};

/// Collects planar or parametric charts and lays their UVs out on a grid.
#[derive(Default)]
struct ChartBuilder {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    // per chart: local uv list and uv faces
    charts: Vec<(Vec<Vec2>, Vec<[u32; 3]>)>,
}

impl ChartBuilder {
    /// Adds a chart whose vertices are new (unshared) positions.
    fn add_chart(&mut self, positions: &[Vec3], local_uv: &[Vec2], tris: &[[u32; 3]]) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(positions);
        self.faces.extend(tris.iter().map(|t| t.map(|i| i + base)));
        self.charts.push((local_uv.to_vec(), tris.to_vec()));
    }

    /// Packs each chart's bounding box into its own cell of a square grid,
    /// preserving aspect, with a gap between cells.
    fn build(self) -> Mesh {
        let n = self.charts.len();
        let cols = (n as f64).sqrt().ceil() as usize;
        let rows = n.div_ceil(cols);
        let cell = 1.0 / cols.max(rows) as f64;
        let gap = cell * 0.04;
        let mut uv_coords = Vec::new();
        let mut face_uvs = Vec::new();
        for (k, (uv, tris)) in self.charts.into_iter().enumerate() {
            let (c, r) = (k % cols, k / cols);
            let lo = uv.iter().fold(Vec2::repeat(f64::INFINITY), |a, p| a.inf(p));
            let hi = uv.iter().fold(Vec2::repeat(f64::NEG_INFINITY), |a, p| a.sup(p));
            let extent = (hi - lo).max().max(1e-12);
            let s = (cell - 2.0 * gap) / extent;
            let origin = Vec2::new(c as f64 * cell + gap, r as f64 * cell + gap);
            let base = uv_coords.len() as u32;
            uv_coords.extend(uv.iter().map(|p| origin + (p - lo) * s));
            face_uvs.extend(tris.iter().map(|t| t.map(|i| i + base)));
        }
        Mesh::new(self.vertices, self.faces, uv_coords, face_uvs).expect("valid chart mesh")
    }
}

/// A single `[-1,1]²` quad at height `z`, facing +z, with identity UVs.
pub fn plate(z: f64) -> Mesh {
    let vertices = vec![
        Vec3::new(-1.0, -1.0, z),
        Vec3::new(1.0, -1.0, z),
        Vec3::new(1.0, 1.0, z),
        Vec3::new(-1.0, 1.0, z),
    ];
    let uvs = vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
    ];
    let faces = vec![[0, 1, 2], [0, 2, 3]];
    Mesh::new(vertices, faces.clone(), uvs, faces).expect("plate")
}

/// Two parallel square plates: a front one of half size `front_half` at
/// `z = +gap/2` facing +z and a rear one of half size `rear_half` at
/// `z = -gap/2` facing −z. Each plate has its own UV chart.
pub fn stacked_plates(front_half: f64, rear_half: f64, gap: f64) -> Mesh {
    let quad = |h: f64, z: f64, flip: bool| -> Vec<Vec3> {
        let mut q = vec![
            Vec3::new(-h, -h, z),
            Vec3::new(h, -h, z),
            Vec3::new(h, h, z),
            Vec3::new(-h, h, z),
        ];
        if flip {
            q.swap(1, 3);
        }
        q
    };
    let local = vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
    ];
    let local_flipped = vec![local[0], local[3], local[2], local[1]];
    let tris = [[0, 1, 2], [0, 2, 3]];
    let mut b = ChartBuilder::default();
    b.add_chart(&quad(front_half, gap / 2.0, false), &local, &tris);
    b.add_chart(&quad(rear_half, -gap / 2.0, true), &local_flipped, &tris);
    b.build()
}

/// Equal-size front/rear plates separated by `2 * half_gap`.
pub fn two_plates(half_gap: f64, half_size: f64) -> Mesh {
    stacked_plates(half_size, half_size, 2.0 * half_gap)
}

/// Axis-aligned box with the given half extents; each face is its own chart
/// with unshared vertices (flat normals).
pub fn box_mesh(half: [f64; 3]) -> Mesh {
    let h = Vec3::from(half);
    let mut b = ChartBuilder::default();
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let n = Vec3::from_fn(|i, _| if i == axis { sign } else { 0.0 });
            let (u_axis, v_axis) = ((axis + 1) % 3, (axis + 2) % 3);
            let u = Vec3::from_fn(|i, _| if i == u_axis { 1.0 } else { 0.0 });
            let v = n.cross(&u);
            let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
            let pos: Vec<Vec3> = corners
                .iter()
                .map(|&(a, c)| n * h[axis] + u * (a * h[u_axis]) + v * (c * h[v_axis]))
                .collect();
            let uv: Vec<Vec2> = corners
                .iter()
                .map(|&(a, c)| Vec2::new(a * h[u_axis], c * h[v_axis]))
                .collect();
            b.add_chart(&pos, &uv, &[[0, 1, 2], [0, 2, 3]]);
        }
    }
    b.build()
}

/// Surface of revolution about +y from a profile of `(radius, y)` points
/// ordered bottom to top. Zero-radius endpoints become single pole vertices.
/// Repeated profile points produce a crease (separate vertex rings).
pub fn revolve(profile: &[(f64, f64)], segments: usize) -> Mesh {
    let n = profile.len();
    assert!(n >= 2 && segments >= 3);
    // cumulative arc length drives v
    let mut arc = vec![0.0];
    for w in profile.windows(2) {
        let d = ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt();
        arc.push(arc.last().unwrap() + d);
    }
    let total = *arc.last().unwrap();

    let mut vertices = Vec::new();
    let mut ring_start = Vec::new();
    for &(r, y) in profile {
        ring_start.push(vertices.len() as u32);
        if r == 0.0 {
            vertices.push(Vec3::new(0.0, y, 0.0));
        } else {
            for j in 0..segments {
                let t = TAU * j as f64 / segments as f64;
                vertices.push(Vec3::new(r * t.sin(), y, r * t.cos()));
            }
        }
    }
    let pos = |k: usize, j: usize| -> u32 {
        if profile[k].0 == 0.0 {
            ring_start[k]
        } else {
            ring_start[k] + (j % segments) as u32
        }
    };

    let mut uv_coords = Vec::new();
    let mut uv_start = Vec::new();
    for k in 0..n {
        uv_start.push(uv_coords.len() as u32);
        let v = arc[k] / total;
        if profile[k].0 == 0.0 {
            uv_coords.extend((0..segments).map(|j| Vec2::new((j as f64 + 0.5) / segments as f64, v)));
        } else {
            uv_coords.extend((0..=segments).map(|j| Vec2::new(j as f64 / segments as f64, v)));
        }
    }
    let uv = |k: usize, j: usize| uv_start[k] + j as u32;

    let mut faces = Vec::new();
    let mut face_uvs = Vec::new();
    for k in 0..n - 1 {
        if profile[k] == profile[k + 1] {
            continue;
        }
        for j in 0..segments {
            let (a, b) = (k, k + 1);
            // quad (a,j) (a,j+1) (b,j+1) (b,j), outward for a bottom-to-top profile
            if profile[a].0 != 0.0 {
                // a pole has one UV per segment, at index j
                let top = if profile[b].0 == 0.0 { j } else { j + 1 };
                faces.push([pos(a, j), pos(a, j + 1), pos(b, j + 1)]);
                face_uvs.push([uv(a, j), uv(a, j + 1), uv(b, top)]);
            }
            if profile[b].0 != 0.0 {
                faces.push([pos(a, j), pos(b, j + 1), pos(b, j)]);
                face_uvs.push([uv(a, j), uv(b, j + 1), uv(b, j)]);
            }
        }
    }
    Mesh::new(vertices, faces, uv_coords, face_uvs).expect("revolved mesh")
}

/// Latitude/longitude unit sphere.
pub fn uv_sphere(segments: usize, rings: usize) -> Mesh {
    let profile: Vec<(f64, f64)> = (0..=rings)
        .map(|i| {
            let phi = PI * i as f64 / rings as f64;
            if i == 0 || i == rings {
                (0.0, -phi.cos())
            } else {
                (phi.sin(), -phi.cos())
            }
        })
        .collect();
    revolve(&profile, segments)
}

pub fn capsule(radius: f64, half_length: f64, segments: usize, cap_rings: usize) -> Mesh {
    let mut profile = Vec::new();
    for i in 0..=cap_rings {
        let phi = PI / 2.0 * i as f64 / cap_rings as f64;
        let r = if i == 0 { 0.0 } else { radius * phi.sin() };
        profile.push((r, -half_length - radius * phi.cos()));
    }
    for i in 0..=cap_rings {
        let phi = PI / 2.0 * i as f64 / cap_rings as f64;
        let r = if i == cap_rings { 0.0 } else { radius * phi.cos() };
        profile.push((r, half_length + radius * phi.sin()));
    }
    revolve(&profile, segments)
}

/// Closed cylinder with creased rims.
pub fn cylinder(radius: f64, half_height: f64, segments: usize) -> Mesh {
    let profile = [
        (0.0, -half_height),
        (radius, -half_height),
        (radius, -half_height),
        (radius, half_height),
        (radius, half_height),
        (0.0, half_height),
    ];
    revolve(&profile, segments)
}

pub fn cone(radius: f64, half_height: f64, segments: usize) -> Mesh {
    let profile = [(0.0, -half_height), (radius, -half_height), (radius, -half_height), (0.0, half_height)];
    revolve(&profile, segments)
}

pub fn torus(major: f64, minor: f64, segments: usize, sides: usize) -> Mesh {
    let mut vertices = Vec::new();
    for i in 0..segments {
        let t = TAU * i as f64 / segments as f64;
        for j in 0..sides {
            let p = TAU * j as f64 / sides as f64;
            let r = major + minor * p.cos();
            vertices.push(Vec3::new(r * t.cos(), minor * p.sin(), -r * t.sin()));
        }
    }
    let mut uv_coords = Vec::new();
    for i in 0..=segments {
        for j in 0..=sides {
            uv_coords.push(Vec2::new(i as f64 / segments as f64, j as f64 / sides as f64));
        }
    }
    let pos = |i: usize, j: usize| ((i % segments) * sides + j % sides) as u32;
    let uv = |i: usize, j: usize| (i * (sides + 1) + j) as u32;
    let mut faces = Vec::new();
    let mut face_uvs = Vec::new();
    for i in 0..segments {
        for j in 0..sides {
            faces.push([pos(i, j), pos(i + 1, j), pos(i + 1, j + 1)]);
            face_uvs.push([uv(i, j), uv(i + 1, j), uv(i + 1, j + 1)]);
            faces.push([pos(i, j), pos(i + 1, j + 1), pos(i, j + 1)]);
            face_uvs.push([uv(i, j), uv(i + 1, j + 1), uv(i, j + 1)]);
        }
    }
    Mesh::new(vertices, faces, uv_coords, face_uvs).expect("torus")
}

/// Extrudes a polygon (in the xy plane, counter-clockwise, star-shaped with
/// respect to `center`) along z by `depth`. Caps and every side wall are
/// separate UV charts.
pub fn extrude(polygon: &[[f64; 2]], center: [f64; 2], depth: f64) -> Mesh {
    let n = polygon.len();
    let mut b = ChartBuilder::default();
    let z0 = -depth / 2.0;
    let z1 = depth / 2.0;
    for (z, flip) in [(z1, false), (z0, true)] {
        let mut pos = vec![Vec3::new(center[0], center[1], z)];
        pos.extend(polygon.iter().map(|p| Vec3::new(p[0], p[1], z)));
        let uv: Vec<Vec2> = pos.iter().map(|p| Vec2::new(p.x, p.y)).collect();
        let tris: Vec<[u32; 3]> = (0..n)
            .map(|i| {
                let (a, c) = (1 + i as u32, 1 + ((i + 1) % n) as u32);
                if flip {
                    [0, c, a]
                } else {
                    [0, a, c]
                }
            })
            .collect();
        b.add_chart(&pos, &uv, &tris);
    }
    for i in 0..n {
        let p = polygon[i];
        let q = polygon[(i + 1) % n];
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        let pos = [
            Vec3::new(p[0], p[1], z0),
            Vec3::new(q[0], q[1], z0),
            Vec3::new(q[0], q[1], z1),
            Vec3::new(p[0], p[1], z1),
        ];
        let uv = [
            Vec2::new(0.0, 0.0),
            Vec2::new(len, 0.0),
            Vec2::new(len, depth),
            Vec2::new(0.0, depth),
        ];
        b.add_chart(&pos, &uv, &[[0, 1, 2], [0, 2, 3]]);
    }
    b.build()
}

pub fn l_bracket() -> Mesh {
    let poly = [[0.0, 0.0], [2.0, 0.0], [2.0, 0.6], [0.6, 0.6], [0.6, 2.0], [0.0, 2.0]];
    extrude(&poly, [0.3, 0.3], 0.8)
}

/// Random star-shaped polygon extruded to a random depth.
pub fn random_extrusion(seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..11);
    let stretch = rng.random_range(0.4..1.6);
    let poly: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let t = TAU * (i as f64 + rng.random_range(-0.3..0.3)) / n as f64;
            let r = rng.random_range(0.4..1.0);
            [r * t.cos() * stretch, r * t.sin()]
        })
        .collect();
    let depth = rng.random_range(0.1..1.5);
    extrude(&poly, [0.0, 0.0], depth)
}

pub fn scaled(mesh: Mesh, s: [f64; 3]) -> Mesh {
    let mut m = mesh;
    for v in &mut m.vertices {
        v.x *= s[0];
        v.y *= s[1];
        v.z *= s[2];
    }
    m.recompute_normals();
    m
}

/// The fixed evaluation corpus, normalized, sorted by name.
pub fn corpus() -> Vec<(String, Mesh)> {
    let mut items: Vec<(String, Mesh)> = vec![
        ("box_flat".into(), box_mesh([1.0, 0.1, 0.6])),
        ("box_long".into(), box_mesh([1.0, 0.5, 0.25])),
        ("box_tall".into(), box_mesh([0.3, 1.0, 0.3])),
        ("capsule".into(), capsule(0.4, 0.5, 32, 8)),
        ("capsule_long".into(), scaled(capsule(0.25, 0.9, 32, 8), [1.0, 1.0, 1.0])),
        ("cone".into(), cone(0.8, 0.9, 32)),
        ("cube".into(), box_mesh([1.0, 1.0, 1.0])),
        ("cylinder".into(), cylinder(0.5, 1.0, 32)),
        ("ellipsoid".into(), scaled(uv_sphere(48, 24), [1.0, 0.6, 0.35])),
        ("l_bracket".into(), l_bracket()),
        ("sphere".into(), uv_sphere(64, 32)),
        ("sphere_coarse".into(), uv_sphere(16, 8)),
        ("thin_plate".into(), box_mesh([1.0, 0.8, 0.01])),
        ("torus".into(), torus(0.7, 0.3, 48, 24)),
        ("torus_thin".into(), torus(0.8, 0.12, 48, 16)),
        ("two_plates".into(), stacked_plates(0.6, 1.0, 0.5)),
    ];
    for seed in 0..6 {
        items.push((format!("extrusion_{seed}"), random_extrusion(seed)));
    }
    items.sort_by(|a, b| a.0.cmp(&b.0));
    items
        .into_iter()
        .map(|(name, m)| (name, m.normalized().expect("corpus meshes are non-degenerate")))
        .collect()
}

/// A single corpus mesh by name.
pub fn corpus_mesh(name: &str) -> Mesh {
    corpus()
        .into_iter()
        .find(|(n, _)| n == name)
        .unwrap_or_else(|| panic!("no corpus mesh named {name}"))
        .1
}

/// Procedural RGB texture in UV space: smooth color ramps plus a band-limited
/// detail term at 16 cycles per unit UV.
pub fn procedural_texture(width: usize, height: usize) -> Image {
    Image::from_fn(width, height, 3, |x, y, p| {
        let u = (x as f64 + 0.5) / width as f64;
        let v = 1.0 - (y as f64 + 0.5) / height as f64;
        let detail = 0.12 * (TAU * 16.0 * u).sin() * (TAU * 16.0 * v).sin();
        p[0] = (0.5 + 0.3 * (TAU * 2.0 * u).sin() * (TAU * v).cos() + detail) as f32;
        p[1] = (0.5 + 0.3 * (TAU * (u + v)).cos() - detail) as f32;
        p[2] = (0.5 + 0.25 * (TAU * 3.0 * v).sin() + detail) as f32;
    })
}

/// Checkerboard in UV space with `n × n` squares.
pub fn checkerboard(width: usize, height: usize, n: usize) -> Image {
    Image::from_fn(width, height, 3, |x, y, p| {
        let on = ((x * n / width) + (y * n / height)) % 2 == 0;
        let c = if on { 0.9 } else { 0.1 };
        p.copy_from_slice(&[c, c, c]);
    })
}
