//! Metric assembly against symbolic expansions, the determinant identity,
//! the transverse Poincare structure, and deformation tensors.

mod common;

use common::{graph_layer_field, strip_field, twisted_field};
use layerlab_core::geometry::{
    deformation_tensors, deformation_vs_unperturbed, fermi_metric, reduced_metric_tilde,
    GeometryError, ImmersedBase, Profile1d,
};
use layerlab_core::grid::{Axis, BaseGrid};
use layerlab_core::smat;

#[test]
fn straight_strip_metric_is_identity() {
    let (field, _, _) = strip_field(4.0, 16, 1.0, 8, Profile1d::Zero);
    for lp in 0..field.n_layer_points() {
        assert_eq!(field.metric_packed(lp), &[1.0, 0.0, 1.0]);
    }
    assert_eq!(field.max_deviation_from_unperturbed(), 0.0);
}

#[test]
fn planar_constant_curvature_matches_symbolic_expansion() {
    // G_11 = (1 - u k)^2, G_12 = 0, G_22 = 1
    let kappa = 0.7;
    let (field, _, _) = strip_field(4.0, 16, 1.0, 8, Profile1d::Constant { value: kappa });
    let mut u = [0.0f64];
    for bp in 0..field.n_base_points() {
        for fp in 0..field.n_fiber_points() {
            field.fiber.vertex_coords(fp, &mut u);
            let g = field.metric_packed(field.layer_index(bp, fp));
            let want = (1.0 - u[0] * kappa) * (1.0 - u[0] * kappa);
            assert!((g[0] - want).abs() < 1e-14);
            assert_eq!(g[1], 0.0);
            assert_eq!(g[2], 1.0);
        }
    }
}

#[test]
fn twisted_line_matches_symbolic_expansion() {
    // S = 0, tau constant: G_11 = 1 + tau^2 |u|^2, first row
    // (-tau u_2, tau u_1), identity fiber block
    let tau = 0.6;
    let (field, _, _) = twisted_field(4.0, 8, 1.0, 8, Profile1d::Constant { value: tau });
    let mut u = [0.0f64; 2];
    for bp in 0..field.n_base_points() {
        for fp in 0..field.n_fiber_points() {
            field.fiber.vertex_coords(fp, &mut u);
            let g = field.metric_packed(field.layer_index(bp, fp));
            let g11 = smat::packed_get(g, 0, 0);
            assert!((g11 - (1.0 + tau * tau * (u[0] * u[0] + u[1] * u[1]))).abs() < 1e-14);
            assert!((smat::packed_get(g, 0, 1) + tau * u[1]).abs() < 1e-14);
            assert!((smat::packed_get(g, 0, 2) - tau * u[0]).abs() < 1e-14);
            assert_eq!(smat::packed_get(g, 1, 1), 1.0);
            assert_eq!(smat::packed_get(g, 2, 2), 1.0);
            assert_eq!(smat::packed_get(g, 1, 2), 0.0);
        }
    }
}

#[test]
fn folded_tube_is_rejected() {
    // constant curvature 1 with fiber reaching |u| = 1.1 crosses the
    // focal point u = 1/kappa
    let domain = layerlab_core::cross_section::CrossSectionDomain::new(
        layerlab_core::cross_section::CrossSectionShape::Interval { length: 2.2 },
        2.2 / 16.0,
    );
    let grid = domain.build_grid().unwrap();
    let base = BaseGrid::new(vec![Axis::from_extent(0.0, 4.0, 8)]);
    let immersed =
        ImmersedBase::curve(1, vec![Profile1d::Constant { value: 1.0 }], None).unwrap();
    match fermi_metric(&immersed, None, &base, &grid) {
        Err(GeometryError::MetricNotPositive { .. }) => {}
        other => panic!("expected MetricNotPositive, got {:?}", other.map(|_| ())),
    }
}

fn det_identity_worst(field: &layerlab_core::geometry::FermiMetricField) -> f64 {
    let tilde = reduced_metric_tilde(field);
    let d = field.total_dim();
    let mut worst = 0.0f64;
    for lp in 0..field.n_layer_points() {
        let dg = smat::det_packed(d, field.metric_packed(lp));
        let dt = tilde.det(lp);
        worst = worst.max((dg - dt).abs() / dg.abs().max(1.0));
    }
    worst
}

#[test]
fn tilde_equals_unperturbed_when_shape_vanishes() {
    // S = 0 with arbitrary connection: the reduced metric is the block
    // metric, i.e. its base block equals g
    let (field, _, _) = twisted_field(4.0, 8, 1.0, 8, Profile1d::Constant { value: 0.8 });
    let tilde = reduced_metric_tilde(&field);
    for lp in 0..field.n_layer_points() {
        assert_eq!(tilde.block_packed(lp), &[1.0]);
    }
}

#[test]
fn tilde_matches_symbolic_expansion_for_planar_curve() {
    let kappa = 0.5;
    let (field, _, _) = strip_field(4.0, 8, 1.0, 8, Profile1d::Constant { value: kappa });
    let tilde = reduced_metric_tilde(&field);
    let mut u = [0.0f64];
    for bp in 0..field.n_base_points() {
        for fp in 0..field.n_fiber_points() {
            field.fiber.vertex_coords(fp, &mut u);
            let want = (1.0 - u[0] * kappa) * (1.0 - u[0] * kappa);
            let got = tilde.block_packed(field.layer_index(bp, fp))[0];
            assert!((got - want).abs() < 1e-14);
        }
    }
}

#[test]
fn determinant_identity_on_three_scenario_families() {
    // bent strip
    let (bent, _, _) = strip_field(
        16.0,
        64,
        1.0,
        8,
        Profile1d::CompactBump { amplitude: 1.1, center: 8.0, half_width: 3.0 },
    );
    assert!(det_identity_worst(&bent) <= 1e-10, "bent strip: {}", det_identity_worst(&bent));
    // twisted tube (det G = det g = 1 here as well)
    let (tw, _, _) = twisted_field(8.0, 16, 1.0, 8, Profile1d::Constant { value: 0.5 });
    assert!(det_identity_worst(&tw) <= 1e-10);
    let d = tw.total_dim();
    for lp in 0..tw.n_layer_points() {
        assert!((smat::det_packed(d, tw.metric_packed(lp)) - 1.0).abs() < 1e-12);
    }
    // graph layer
    let (gl, _, _) = graph_layer_field(4.0, 24, 1.0, 1.5, 0.8, 8);
    assert!(det_identity_worst(&gl) <= 1e-10);
}

#[test]
fn transverse_poincare_structure() {
    // fiber block of G^{-1} minus identity is positive semidefinite
    let fields = [
        twisted_field(8.0, 16, 1.0, 8, Profile1d::Constant { value: 0.7 }).0,
        strip_field(
            16.0,
            32,
            1.0,
            8,
            Profile1d::CompactBump { amplitude: 1.1, center: 8.0, half_width: 3.0 },
        )
        .0,
        graph_layer_field(4.0, 16, 1.0, 1.5, 0.8, 8).0,
    ];
    for field in &fields {
        let d = field.total_dim();
        let dim = field.dim;
        let codim = field.codim;
        let mut ginv = vec![0.0; d * d];
        let mut fiber_block = vec![0.0; smat::packed_len(codim)];
        for lp in 0..field.n_layer_points() {
            assert!(smat::inverse_packed(d, field.metric_packed(lp), &mut ginv));
            for a in 0..codim {
                for b in 0..=a {
                    let v = ginv[(dim + a) * d + (dim + b)] - if a == b { 1.0 } else { 0.0 };
                    fiber_block[smat::packed_idx(a, b)] = v;
                }
            }
            let ev = smat::sym_eigenvalues(codim, &fiber_block);
            assert!(ev[0] >= -1e-12, "fiber block eigenvalue {} at point {lp}", ev[0]);
        }
    }
}

#[test]
fn deformation_tensors_vanish_on_equal_fields() {
    let (field, _, _) = strip_field(4.0, 8, 1.0, 8, Profile1d::Zero);
    let n = field.n_layer_points();
    let defo = deformation_tensors(2, &field.gg, &field.gg, n, &vec![true; n]).unwrap();
    assert!(defo.a.iter().all(|&v| v == 0.0));
    assert!(defo.b.iter().all(|&v| v == 0.0));
    assert_eq!(defo.sup_a, 0.0);
    assert_eq!(defo.sup_b, 0.0);
}

#[test]
fn deformation_of_scaled_metric() {
    // G = 4 G_ref in total dimension 2: c = 1/4, A = I(1 - 1/4 * 4) = 0,
    // B = 3/4
    let (field, _, _) = strip_field(4.0, 8, 1.0, 8, Profile1d::Zero);
    let n = field.n_layer_points();
    let scaled: Vec<f64> = field.gg.iter().map(|v| 4.0 * v).collect();
    let defo = deformation_tensors(2, &scaled, &field.gg, n, &vec![true; n]).unwrap();
    for pt in 0..n {
        for (idx, &a) in defo.a_at(pt).iter().enumerate() {
            assert!(a.abs() < 1e-14, "A[{idx}] = {a}");
        }
        assert!((defo.b[pt] - 0.75).abs() < 1e-14);
    }
    assert!((defo.sup_b - 0.75).abs() < 1e-14);
    assert!(defo.sup_a < 1e-12);
}

#[test]
fn twisted_deformation_has_zero_b_and_positive_a() {
    // tau = 0.2, |u| <= 0.3: det G = det G0 = 1 so B = 0, but the twist
    // makes A nonzero
    let (field, _, _) = twisted_field(4.0, 8, 0.6, 8, Profile1d::Constant { value: 0.2 });
    let n = field.n_layer_points();
    let defo = deformation_vs_unperturbed(&field, &vec![true; n]).unwrap();
    assert!(defo.sup_b <= 1e-13, "sup B = {}", defo.sup_b);
    assert!(defo.sup_a > 1e-3, "sup A = {}", defo.sup_a);
}

#[test]
fn flat_reduction_is_exact() {
    let (strip, _, _) = strip_field(8.0, 16, 1.0, 8, Profile1d::Zero);
    assert_eq!(strip.max_deviation_from_unperturbed(), 0.0);
    // graph over a tilted plane: constant tangent, S = 0, Gamma = 0
    let base = BaseGrid::new(vec![
        Axis::from_extent(-1.0, 2.0, 10),
        Axis::from_extent(-1.0, 2.0, 10),
    ]);
    let mut sigma = vec![0.0; base.n_vertices()];
    let mut x = [0.0f64; 2];
    for (p, v) in sigma.iter_mut().enumerate() {
        base.vertex_coords(p, &mut x);
        *v = 0.5 * x[0];
    }
    let immersed = ImmersedBase::graph(
        1,
        layerlab_core::geometry::GraphData { grid: base.clone(), sigma: vec![sigma] },
    )
    .unwrap();
    let frames = layerlab_core::geometry::build_normal_frames(&immersed).unwrap();
    let domain = layerlab_core::cross_section::CrossSectionDomain::new(
        layerlab_core::cross_section::CrossSectionShape::Interval { length: 0.5 },
        0.5 / 8.0,
    );
    let fgrid = domain.build_grid().unwrap();
    let field = fermi_metric(&immersed, Some(&frames), &base, &fgrid).unwrap();
    assert!(field.max_deviation_from_unperturbed() < 1e-12);
}

#[test]
fn metric_export_roundtrip() {
    let (field, _, _) = strip_field(
        4.0,
        8,
        1.0,
        6,
        Profile1d::CompactBump { amplitude: 0.8, center: 2.0, half_width: 1.0 },
    );
    let dir = std::env::temp_dir().join("layerlab_export_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("field.bin");
    layerlab_core::geometry::write_metric_binary(
        &field,
        &path,
        "roundtrip",
        &serde_json::json!({"kappa": 0.8}),
    )
    .unwrap();
    let (header, data) = layerlab_core::geometry::read_metric_binary(&path).unwrap();
    assert_eq!(header.dim, 1);
    assert_eq!(header.codim, 1);
    assert_eq!(header.n_records, field.n_layer_points());
    assert_eq!(data, field.gg);
    let sidecar = std::fs::read_to_string(dir.join("field.bin.json")).unwrap();
    assert!(sidecar.contains("roundtrip"));
    std::fs::remove_dir_all(&dir).unwrap();
}
