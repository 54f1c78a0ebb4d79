use proptest::prelude::*;
use viewpack::error::Error;
use viewpack::fixtures;
use viewpack::mesh::{Mesh, Vec2, Vec3};

fn coord() -> impl Strategy<Value = f64> {
    -50.0f64..50.0
}

prop_compose! {
    fn random_mesh()(n in 3usize..20)(
        verts in prop::collection::vec((coord(), coord(), coord()), n),
        uvs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), n),
        faces in prop::collection::vec((0..n as u32, 0..n as u32, 0..n as u32), 1..30),
    ) -> Mesh {
        let vertices: Vec<Vec3> = verts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
        let uv: Vec<Vec2> = uvs.iter().map(|&(u, v)| Vec2::new(u, v)).collect();
        let f: Vec<[u32; 3]> = faces.iter().map(|&(a, b, c)| [a, b, c]).collect();
        Mesh::new(vertices, f.clone(), uv, f).unwrap()
    }
}

fn spread(m: &Mesh) -> f64 {
    let (lo, hi) = m.bounds().unwrap();
    (hi - lo).max()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalization_fits_the_unit_cube_and_is_idempotent(m in random_mesh()) {
        prop_assume!(spread(&m) > 1e-3);
        let a = m.normalized().unwrap();
        let (lo, hi) = a.bounds().unwrap();
        prop_assert!((hi - lo).max() <= 2.0 + 1e-9);
        prop_assert!(((hi - lo).max() - 2.0).abs() < 1e-9);
        prop_assert!(((lo + hi) * 0.5).norm() < 1e-9);
        let b = a.normalized().unwrap();
        for (p, q) in a.vertices.iter().zip(&b.vertices) {
            prop_assert!((p - q).norm() < 1e-6);
        }
    }

    #[test]
    fn normalization_preserves_distance_ratios(m in random_mesh()) {
        prop_assume!(spread(&m) > 1e-3);
        let a = m.normalized().unwrap();
        let (d0, e0) = ((m.vertices[0] - m.vertices[1]).norm(), (a.vertices[0] - a.vertices[1]).norm());
        prop_assume!(d0 > 1e-6);
        for i in 0..m.vertices.len() {
            for j in i + 1..m.vertices.len() {
                let d = (m.vertices[i] - m.vertices[j]).norm();
                let e = (a.vertices[i] - a.vertices[j]).norm();
                prop_assert!((d / d0 - e / e0).abs() < 1e-6 * (1.0 + d / d0));
            }
        }
    }

    #[test]
    fn obj_round_trip_preserves_triangles(m in random_mesh()) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.obj");
        m.save_obj(&p).unwrap();
        let a = Mesh::load_obj(&p).unwrap();
        prop_assert_eq!(a.faces.len(), m.faces.len());
        for f in 0..m.faces.len() {
            for (x, y) in m.triangle(f).iter().zip(a.triangle(f).iter()) {
                prop_assert!((x - y).norm() < 1e-6);
            }
            for (x, y) in m.triangle_uvs(f).iter().zip(a.triangle_uvs(f).iter()) {
                prop_assert!((x - y).norm() < 1e-6);
            }
        }
        a.save_obj(&p).unwrap();
        let b = Mesh::load_obj(&p).unwrap();
        prop_assert_eq!(&a.vertices, &b.vertices);
        prop_assert_eq!(&a.uv_coords, &b.uv_coords);
        prop_assert_eq!(&a.faces, &b.faces);
        prop_assert_eq!(&a.face_uvs, &b.face_uvs);
    }
}

#[test]
fn corpus_round_trips_through_obj_files() {
    let dir = tempfile::tempdir().unwrap();
    for (name, m) in fixtures::corpus() {
        let p = dir.path().join(format!("{name}.obj"));
        m.save_obj(&p).unwrap();
        let back = Mesh::load_obj(&p).unwrap().normalized().unwrap();
        assert_eq!(back.faces.len(), m.faces.len(), "{name}");
        for f in 0..m.faces.len() {
            for (x, y) in m.triangle(f).iter().zip(back.triangle(f).iter()) {
                assert!((x - y).norm() < 1e-6, "{name}");
            }
        }
    }
}

#[test]
fn quads_are_triangulated_and_normals_are_unit() {
    let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\nf 1/1 2/2 3/3 4/4\n";
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("q.obj");
    std::fs::write(&p, text).unwrap();
    let m = Mesh::load_obj(&p).unwrap();
    assert_eq!(m.faces.len(), 2);
    for n in &m.normals {
        assert!((n.norm() - 1.0).abs() < 1e-9);
        assert!((n.z - 1.0).abs() < 1e-9);
    }
}

#[test]
fn negative_indices_and_missing_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("neg.obj");
    std::fs::write(&p, "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf -1/1 -2/1 -3/1\n").unwrap();
    assert!(matches!(Mesh::load_obj(&p), Err(Error::Parse { line: 5, .. })));
    assert!(matches!(Mesh::load_obj(dir.path().join("none.obj")), Err(Error::FileNotFound(_))));
}
