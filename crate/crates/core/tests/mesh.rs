use gamma_core::mesh::{
    build_half_disk, build_unit_disk, build_unit_square_mixed, read_mesh, validate, write_mesh,
    BoundaryTag, GradingSpec, Mesh,
};
use proptest::prelude::*;
use std::f64::consts::PI;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn euler(mesh: &Mesh) -> i64 {
    mesh.vertices.len() as i64 - mesh.edges().len() as i64 + mesh.triangles.len() as i64
}

#[test]
fn half_disk_arc_vertices_on_unit_circle() {
    let mesh = build_half_disk(GradingSpec::new(0.1, 1.0, 0.5)).unwrap();
    let mut on_arc = 0;
    for e in &mesh.boundary_edges {
        for &v in &e.v {
            let p = mesh.vertices[v];
            if p[1] > 1e-12 {
                assert!((p[0].hypot(p[1]) - 1.0).abs() <= 1e-12, "{p:?}");
                on_arc += 1;
            }
        }
    }
    assert!(on_arc > 0);
}

#[test]
fn euler_characteristic_is_one() {
    let meshes = [
        build_half_disk(GradingSpec::new(0.1, 2.0, 0.5)).unwrap(),
        build_unit_square_mixed(GradingSpec::new(0.1, 2.0, 0.5), 0.25, 0.75).unwrap(),
        build_unit_disk(0.1).unwrap(),
    ];
    for m in &meshes {
        assert_eq!(euler(m), 1);
    }
}

#[test]
fn grading_shortens_edges_at_junction() {
    let h = 0.05;
    let mesh = build_half_disk(GradingSpec::new(h, 2.0, 0.5)).unwrap();
    let o = mesh.junction_vertex(0).unwrap();
    assert_eq!(mesh.vertices[o], [0.0, 0.0]);
    let shortest = mesh
        .edges()
        .iter()
        .filter(|e| e.contains(&o))
        .map(|e| dist(mesh.vertices[e[0]], mesh.vertices[e[1]]))
        .fold(f64::INFINITY, f64::min);
    assert!(shortest < h / 4.0, "{shortest}");
}

#[test]
fn square_junction_frames() {
    let mesh = build_unit_square_mixed(GradingSpec::new(0.1, 2.0, 0.5), 0.25, 0.75).unwrap();
    assert_eq!(mesh.junctions.len(), 2);
    let mut angles: Vec<f64> = mesh.junctions.iter().map(|j| j.tangent_angle).collect();
    angles.sort_by(f64::total_cmp);
    assert_eq!(angles[0], 0.0);
    assert!((angles[1] - PI).abs() < 1e-15);
    assert!((mesh.boundary_length(BoundaryTag::RobinDirichlet) - 0.5).abs() <= 1e-12);
}

#[test]
fn square_keeps_corners_and_area() {
    for (h, a, b) in [(0.1, 0.25, 0.75), (0.05, 0.1, 0.3), (0.2, 0.6, 0.9)] {
        let mesh = build_unit_square_mixed(GradingSpec::new(h, 2.0, 0.5), a, b).unwrap();
        for c in [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] {
            assert!(mesh.vertices.contains(&c), "corner {c:?} missing");
        }
        assert!((mesh.area() - 1.0).abs() <= 1e-12);
        assert!((mesh.boundary_length(BoundaryTag::Neumann) - (4.0 - (b - a))).abs() <= 1e-12);
    }
}

#[test]
fn square_robin_edges_double_under_refinement() {
    let count = |h: f64| {
        let m = build_unit_square_mixed(GradingSpec::uniform(h), 0.25, 0.75).unwrap();
        m.boundary_edges
            .iter()
            .filter(|e| e.tag == BoundaryTag::RobinDirichlet)
            .count() as i64
    };
    let (coarse, fine) = (count(0.1), count(0.05));
    assert!((fine - 2 * coarse).abs() <= 1, "{coarse} -> {fine}");
}

#[test]
fn disk_area_converges() {
    let coarse = build_unit_disk(0.1).unwrap();
    assert!(coarse.junctions.is_empty());
    let e1 = (coarse.area() - PI).abs();
    assert!(e1 <= 2.0 * 0.01, "{e1}");
    let e2 = (build_unit_disk(0.05).unwrap().area() - PI).abs();
    assert!(e2 * 3.0 <= e1, "{e1} {e2}");
}

#[test]
fn validate_rejects_retagged_edge() {
    let mut mesh = build_half_disk(GradingSpec::new(0.1, 2.0, 0.5)).unwrap();
    validate(&mesh).unwrap();
    let k = mesh
        .boundary_edges
        .iter()
        .position(|e| e.tag == BoundaryTag::Neumann && mesh.vertices[e.v[0]][0] < -0.5)
        .unwrap();
    mesh.boundary_edges[k].tag = BoundaryTag::RobinDirichlet;
    let msg = validate(&mesh).unwrap_err().to_string();
    assert!(msg.contains("tag partition"), "{msg}");
}

#[test]
fn validate_rejects_missing_junction_vertex() {
    let mut mesh = build_unit_square_mixed(GradingSpec::new(0.1, 2.0, 0.5), 0.25, 0.75).unwrap();
    mesh.junctions[0].center = [0.3, 0.0];
    let msg = validate(&mesh).unwrap_err().to_string();
    assert!(msg.contains("junction"), "{msg}");
}

#[test]
fn file_round_trip() {
    let mesh = build_unit_square_mixed(GradingSpec::new(0.1, 2.0, 0.5), 0.3, 0.6).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    write_mesh(&mesh, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("gammamesh 1\n"));
    assert_eq!(read_mesh(&path).unwrap(), mesh);
}

#[test]
fn read_rejects_bad_tag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    std::fs::write(
        &path,
        "gammamesh 1\n3 1 3 0\n0 0\n1 0\n0 1\n0 1 2\n0 1 R\n1 2 X\n2 0 N\n",
    )
    .unwrap();
    assert!(read_mesh(&path).is_err());
}

fn diameter(mesh: &Mesh, t: usize) -> f64 {
    let p = mesh.triangle_points(t);
    dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]))
}

/// Distance from the centroid to the nearest graded (flat) junction.
fn junction_distance(mesh: &Mesh, t: usize) -> f64 {
    let p = mesh.triangle_points(t);
    let c = [
        (p[0][0] + p[1][0] + p[2][0]) / 3.0,
        (p[0][1] + p[1][1] + p[2][1]) / 3.0,
    ];
    (0..mesh.junctions.len())
        .filter(|&j| mesh.is_flat_junction(j))
        .map(|j| dist(c, mesh.junctions[j].center))
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn builders_produce_valid_meshes(h in 0.04f64..0.2, beta in 1.0f64..3.0, a in 0.15f64..0.4, w in 0.2f64..0.45) {
        let g = GradingSpec::new(h, beta, 0.5);
        validate(&build_half_disk(g).unwrap()).unwrap();
        validate(&build_unit_square_mixed(g, a, a + w).unwrap()).unwrap();
        validate(&build_unit_disk(h).unwrap()).unwrap();
    }

    #[test]
    fn meshes_are_deterministic(h in 0.05f64..0.2, beta in 1.0f64..3.0) {
        let g = GradingSpec::new(h, beta, 0.5);
        prop_assert_eq!(build_half_disk(g).unwrap(), build_half_disk(g).unwrap());
        prop_assert_eq!(build_unit_square_mixed(g, 0.25, 0.75).unwrap(), build_unit_square_mixed(g, 0.25, 0.75).unwrap());
    }

    #[test]
    fn half_disk_element_size_grows_away_from_junction(h in 0.04f64..0.15, beta in 1.0f64..3.0, seed in any::<u64>()) {
        let mesh = build_half_disk(GradingSpec::new(h, beta, 0.5)).unwrap();
        prop_assert!(worst_size_ratio(&mesh, seed) <= 1.5);
    }

    #[test]
    fn square_element_size_grows_away_from_junctions(h in 0.04f64..0.15, beta in 1.0f64..3.0, seed in any::<u64>()) {
        let mesh = build_unit_square_mixed(GradingSpec::new(h, beta, 0.5), 0.25, 0.75).unwrap();
        prop_assert!(worst_size_ratio(&mesh, seed) <= 2.5);
    }
}

/// Largest `diam(p) / diam(q)` over random pairs with `p` no farther from the junctions than `q`.
fn worst_size_ratio(mesh: &Mesh, seed: u64) -> f64 {
    let n = mesh.triangles.len() as u64;
    let mut s = seed;
    let mut next = || {
        s = s
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((s >> 33) % n) as usize
    };
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let (t, u) = (next(), next());
        let (p, q) = if junction_distance(mesh, t) <= junction_distance(mesh, u) {
            (t, u)
        } else {
            (u, t)
        };
        worst = worst.max(diameter(mesh, p) / diameter(mesh, q));
    }
    worst
}
