use std::sync::Arc;

use oum_core::mesh::structured_grid_mesh;
use oum_core::oracle::graph_value;
use oum_core::solver::{solve, sweep_to_fixed_point, Label, QueueDiscipline, SolveOptions, Solver};
use oum_core::{Point, SpeedCostModel, TriMesh, ValueField};
use proptest::prelude::*;

fn unit_grid(n: usize) -> Arc<TriMesh> {
    Arc::new(structured_grid_mesh(n, n, (0.0, 1.0), (0.0, 1.0)).unwrap())
}

fn iso() -> SpeedCostModel {
    SpeedCostModel::constant_isotropic(1.0, 1.0, 0.0).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn boundary_init(mesh: &TriMesh, model: &SpeedCostModel) -> Vec<f64> {
    let mut init = vec![f64::INFINITY; mesh.num_vertices()];
    for &b in mesh.boundary_vertices() {
        init[b] = model.terminal_cost(mesh.vertex(b));
    }
    init
}

fn assert_monotone(field: &ValueField) {
    let log = field.acceptance_order().unwrap();
    let interior: Vec<f64> = log.iter().filter(|a| a.step > 0).map(|a| a.value).collect();
    for w in interior.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "acceptance went down: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn isotropic_square_matches_boundary_distance() {
    let mesh = unit_grid(65);
    let f = solve(&mesh, &iso(), &SolveOptions::default()).unwrap();
    let h = mesh.h();
    assert!((f.interpolate(Point::new(0.5, 0.5)).unwrap() - 0.5).abs() <= 2.0 * h);
    for (v, &u) in f.values().iter().enumerate() {
        assert!((u - mesh.distance_to_boundary(mesh.vertex(v))).abs() <= 2.0 * h);
    }
    assert_monotone(&f);
}

#[test]
fn constant_cost_scales_and_terminal_shifts() {
    let mesh = unit_grid(33);
    let opts = SolveOptions::default();
    let base = solve(&mesh, &iso(), &opts).unwrap();
    let l3 = solve(&mesh, &SpeedCostModel::constant_isotropic(1.0, 3.0, 0.0).unwrap(), &opts).unwrap();
    let q5 = solve(&mesh, &SpeedCostModel::constant_isotropic(1.0, 1.0, 5.0).unwrap(), &opts).unwrap();
    for v in 0..mesh.num_vertices() {
        assert!((l3.value(v) - 3.0 * base.value(v)).abs() <= 1e-9);
        assert!((q5.value(v) - (base.value(v) + 5.0)).abs() <= 1e-9);
    }
    for &b in mesh.boundary_vertices() {
        assert_eq!(q5.value(b), 5.0);
    }
}

#[test]
fn sandwich_bounds_hold_on_position_varying_model() {
    let mesh = unit_grid(33);
    let model = SpeedCostModel::position_varying((0.5, 2.0), (1.0, 3.0), 1.0, 1.0).unwrap();
    let f = solve(&mesh, &model, &SolveOptions::default()).unwrap();
    let b = model.bounds();
    let slack = 2.0 * mesh.h() * b.l_max / b.f_min;
    for (v, &u) in f.values().iter().enumerate() {
        let d = mesh.distance_to_boundary(mesh.vertex(v));
        assert!(u >= b.l_min * d / b.f_max + b.q_min - slack);
        assert!(u <= b.l_max * d / b.f_min + b.q_max + slack);
    }
    assert_monotone(&f);
}

#[test]
fn discrete_lipschitz_on_isotropic_and_elliptic() {
    let mesh = unit_grid(33);
    for model in [iso(), SpeedCostModel::elliptic_anisotropic(2.0, 1.0, 1.0, 0.0).unwrap()] {
        let f = solve(&mesh, &model, &SolveOptions::default()).unwrap();
        let b = model.bounds();
        let k = b.l_max / b.f_min + 2.0 * mesh.h() * b.l_max / b.f_min;
        for (a, c) in mesh.edges() {
            if mesh.is_boundary(a) && mesh.is_boundary(c) {
                continue;
            }
            let len = mesh.vertex(a).dist(mesh.vertex(c));
            assert!((f.value(a) - f.value(c)).abs() <= k * len);
        }
        assert_monotone(&f);
    }
}

#[test]
fn slf_lll_close_to_exact_min() {
    let mesh = unit_grid(33);
    let exact = solve(&mesh, &iso(), &SolveOptions::default()).unwrap();
    let opts = SolveOptions { discipline: QueueDiscipline::SlfLll, ..Default::default() };
    let slf = solve(&mesh, &iso(), &opts).unwrap();
    assert!(max_diff(exact.values(), slf.values()) <= 10.0 * mesh.h());
    assert!(slf.values().iter().all(|u| u.is_finite()));
}

#[test]
fn repeated_solves_are_bit_identical() {
    let mesh = unit_grid(33);
    let model = SpeedCostModel::elliptic_rotated(3.0, 1.0, 0.4, 1.0, 0.0).unwrap();
    let a = solve(&mesh, &model, &SolveOptions::default()).unwrap();
    let b = solve(&mesh, &model, &SolveOptions::default()).unwrap();
    assert_eq!(a.values(), b.values());
    assert_eq!(a.acceptance_order(), b.acceptance_order());
    assert_eq!(a.upwind(), b.upwind());
}

#[test]
fn single_pass_is_near_mesh_fixed_point() {
    let mesh = unit_grid(33);
    let opts = SolveOptions::default();
    let f = solve(&mesh, &iso(), &opts).unwrap();
    let fp = sweep_to_fixed_point(&mesh, &iso(), f.values(), &opts, 1e-12, 100).unwrap();
    assert!(max_diff(fp.field.values(), f.values()) <= 10.0 * mesh.h());
}

#[test]
fn fixed_point_independent_of_initialization() {
    let mesh = unit_grid(17);
    let opts = SolveOptions::default();
    let model = SpeedCostModel::elliptic_anisotropic(2.0, 1.0, 1.0, 0.0).unwrap();
    let tol = 1e-12;
    let f = solve(&mesh, &model, &opts).unwrap();
    let from_solve = sweep_to_fixed_point(&mesh, &model, f.values(), &opts, tol, 200).unwrap();
    let from_inf = sweep_to_fixed_point(&mesh, &model, &boundary_init(&mesh, &model), &opts, tol, 200).unwrap();
    assert!(max_diff(from_solve.field.values(), from_inf.field.values()) <= 1e-9);
    for &b in mesh.boundary_vertices() {
        assert_eq!(from_inf.field.value(b), 0.0);
    }
}

#[test]
fn shrinking_the_near_front_radius_breaks_rotated_anisotropy() {
    let mesh = unit_grid(33);
    let model = SpeedCostModel::elliptic_rotated(4.0, 1.0, 0.5, 1.0, 0.0).unwrap();
    let reference = graph_value(&mesh, &model, 4.0);
    let full = solve(&mesh, &model, &SolveOptions::default()).unwrap();
    let narrow = solve(&mesh, &model, &SolveOptions { radius_scale: 0.1, ..Default::default() }).unwrap();
    let e_full = max_diff(full.values(), &reference);
    let e_narrow = max_diff(narrow.values(), &reference);
    assert!(e_full <= mesh.h(), "full radius error {e_full}");
    assert!(e_narrow > 3.0 * e_full, "narrow {e_narrow} vs full {e_full}");
    assert_monotone(&full);
}

#[test]
fn frozen_values_under_instrumentation() {
    let mesh = unit_grid(17);
    let model = SpeedCostModel::position_varying((0.5, 2.0), (1.0, 3.0), 1.0, 1.0).unwrap();
    let mut s = Solver::new(mesh.clone(), &model, SolveOptions::default()).unwrap();
    let mut snapshot: Vec<Option<f64>> =
        (0..mesh.num_vertices()).map(|v| (s.labels()[v] == Label::Accepted).then(|| s.values()[v])).collect();
    while let Some(v) = s.step().unwrap() {
        snapshot[v] = Some(s.values()[v]);
        for (w, frozen) in snapshot.iter().enumerate() {
            if let Some(u) = frozen {
                assert_eq!(s.values()[w], *u);
            }
        }
        for (w, &l) in s.labels().iter().enumerate() {
            if l == Label::Far {
                assert!(s.values()[w].is_infinite());
            }
        }
    }
}

#[test]
fn non_convex_domain_solves() {
    // L-shaped domain assembled from a 9x9 grid with the top-right quadrant removed.
    let full = structured_grid_mesh(9, 9, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let keep = |p: Point| !(p.x > 0.5 + 1e-12 && p.y > 0.5 + 1e-12);
    let mut remap = vec![usize::MAX; full.num_vertices()];
    let mut pts = Vec::new();
    let tris: Vec<[usize; 3]> = full
        .triangles()
        .iter()
        .filter(|t| keep(full.centroid(full.triangles().iter().position(|u| u == *t).unwrap())))
        .map(|t| {
            t.map(|v| {
                if remap[v] == usize::MAX {
                    remap[v] = pts.len();
                    pts.push(full.vertex(v));
                }
                remap[v]
            })
        })
        .collect();
    let mesh = Arc::new(TriMesh::new(pts, tris).unwrap());
    let f = solve(&mesh, &iso(), &SolveOptions::default()).unwrap();
    let h = mesh.h();
    for (v, &u) in f.values().iter().enumerate() {
        let d = mesh.distance_to_boundary(mesh.vertex(v));
        assert!(u >= d - 2.0 * h && u <= d + 2.0 * h);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn scaling_l_and_q_scales_value(c in 0.1f64..10.0, q in 0.0f64..3.0) {
        let mesh = unit_grid(9);
        let base = SpeedCostModel::position_varying((0.5, 2.0), (1.0, 3.0), q, 1.0).unwrap();
        let scaled = base.scale_costs(c).unwrap();
        let opts = SolveOptions::default();
        let u = solve(&mesh, &base, &opts).unwrap();
        let v = solve(&mesh, &scaled, &opts).unwrap();
        for (a, b) in u.values().iter().zip(v.values()) {
            prop_assert!((b - c * a).abs() <= 1e-9 * (c * a).abs().max(1.0));
        }
    }

    #[test]
    fn elliptic_values_respect_sandwich(a_axis in 0.5f64..3.0, b_axis in 0.5f64..3.0, theta in 0.0f64..3.2) {
        let mesh = unit_grid(13);
        let model = SpeedCostModel::elliptic_rotated(a_axis, b_axis, theta, 1.0, 0.0).unwrap();
        let f = solve(&mesh, &model, &SolveOptions::default()).unwrap();
        let b = model.bounds();
        let slack = 2.0 * mesh.h() * b.l_max / b.f_min;
        for (v, &u) in f.values().iter().enumerate() {
            let d = mesh.distance_to_boundary(mesh.vertex(v));
            prop_assert!(u >= b.l_min * d / b.f_max - slack);
            prop_assert!(u <= b.l_max * d / b.f_min + slack);
        }
    }
}
