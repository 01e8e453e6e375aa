//! Smoke-scale invariant suite covering every module; `layerlab selftest`
//! runs it and exits nonzero on failure. Summaries are deterministic
//! (no timings or machine data on stdout).

use layerlab_core::cross_section::{
    dirichlet_modes, CrossSectionDomain, CrossSectionModes, CrossSectionShape,
};
use layerlab_core::discretization::{
    assemble_forms, assemble_unperturbed, comparison_identity_residual, AssembleOptions,
    DiscreteForms, LayerGrid,
};
use layerlab_core::geometry::{
    deformation_vs_unperturbed, fermi_metric, reduced_metric_tilde, FermiMetricField,
    ImmersedBase, Profile1d,
};
use layerlab_core::grid::{Axis, BaseGrid};
use layerlab_core::smat;
use layerlab_core::sparse::CsrMatrix;
use layerlab_core::spectral::{smallest_eigenpairs, solve_spd, EigOptions};
use layerlab_core::weyl::{
    build_singular_family, dual_norm, matrix_weyl_bound, weyl_quotient, PacketParams,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub struct SelftestOutcome {
    pub passed: usize,
    pub failed: usize,
    /// The deterministic summary printed to stdout.
    pub summary: String,
}

type CheckFn = fn(&Config) -> Result<String, String>;

pub struct Config {
    /// Name of the invariant to corrupt (fault-injection hook).
    pub fuzz: Option<String>,
}

fn strip(
    l: f64,
    nx: usize,
    w: f64,
    nf: usize,
    kappa: Profile1d,
) -> Result<(FermiMetricField, LayerGrid, CrossSectionModes), String> {
    let domain = CrossSectionDomain::new(CrossSectionShape::Interval { length: w }, w / nf as f64);
    let modes = dirichlet_modes(&domain, 6).map_err(|e| e.to_string())?;
    let base = BaseGrid::new(vec![Axis::from_extent(0.0, l, nx)]);
    let immersed = ImmersedBase::curve(1, vec![kappa], None).map_err(|e| e.to_string())?;
    let field =
        fermi_metric(&immersed, None, &base, &modes.grid).map_err(|e| e.to_string())?;
    let grid = LayerGrid::new(base, modes.grid.clone());
    Ok((field, grid, modes))
}

fn twisted(
    l: f64,
    nx: usize,
    s: f64,
    nf: usize,
    tau: f64,
) -> Result<(FermiMetricField, LayerGrid, CrossSectionModes), String> {
    let domain = CrossSectionDomain::new(
        CrossSectionShape::Rectangle { width: s, height: s },
        s / nf as f64,
    );
    let modes = dirichlet_modes(&domain, 6).map_err(|e| e.to_string())?;
    let base = BaseGrid::new(vec![Axis::from_extent(0.0, l, nx)]);
    let immersed = ImmersedBase::curve(
        2,
        vec![Profile1d::Zero, Profile1d::Zero],
        Some(Profile1d::Constant { value: tau }),
    )
    .map_err(|e| e.to_string())?;
    let field =
        fermi_metric(&immersed, None, &base, &modes.grid).map_err(|e| e.to_string())?;
    let grid = LayerGrid::new(base, modes.grid.clone());
    Ok((field, grid, modes))
}

fn forms_of(field: &FermiMetricField, grid: &LayerGrid) -> Result<DiscreteForms, String> {
    assemble_forms(field, grid, &AssembleOptions::default()).map_err(|e| e.to_string())
}

fn check_flat_reduction(_c: &Config) -> Result<String, String> {
    let (field, _, _) = strip(8.0, 32, 1.0, 8, Profile1d::Zero)?;
    let dev = field.max_deviation_from_unperturbed();
    if dev == 0.0 {
        Ok("max |G - G0| = 0 exactly".into())
    } else {
        Err(format!("flat field deviates from G0 by {dev:.3e}"))
    }
}

fn check_det_identity(c: &Config) -> Result<String, String> {
    let (mut field, _, _) = strip(
        12.0,
        48,
        1.0,
        8,
        Profile1d::CompactBump { amplitude: 1.0, center: 6.0, half_width: 2.0 },
    )?;
    if c.fuzz.as_deref() == Some("det_identity") {
        // fault injection: corrupt one diagonal metric sample
        let pd = smat::packed_len(field.total_dim());
        let idx = (field.n_layer_points() / 2) * pd;
        field.gg[idx] += 1e-6;
    }
    let tilde = reduced_metric_tilde(&field);
    let d = field.total_dim();
    let mut worst = 0.0f64;
    for lp in 0..field.n_layer_points() {
        let dg = smat::det_packed(d, field.metric_packed(lp));
        worst = worst.max((dg - tilde.det(lp)).abs() / dg.abs().max(1.0));
    }
    let (tw, _, _) = twisted(6.0, 12, 1.0, 6, 0.5)?;
    let ttilde = reduced_metric_tilde(&tw);
    for lp in 0..tw.n_layer_points() {
        let dg = smat::det_packed(3, tw.metric_packed(lp));
        worst = worst.max((dg - ttilde.det(lp)).abs() / dg.abs().max(1.0));
    }
    if worst <= 1e-10 {
        Ok(format!("max relative det deviation {worst:.3e}"))
    } else {
        Err(format!("det G vs det tilde-G deviates by {worst:.3e} (> 1e-10)"))
    }
}

fn check_transverse_poincare(_c: &Config) -> Result<String, String> {
    let (field, _, _) = twisted(6.0, 12, 1.0, 6, 0.7)?;
    let d = field.total_dim();
    let (dim, codim) = (field.dim, field.codim);
    let mut ginv = vec![0.0; d * d];
    let mut block = vec![0.0; smat::packed_len(codim)];
    let mut worst = f64::INFINITY;
    for lp in 0..field.n_layer_points() {
        if !smat::inverse_packed(d, field.metric_packed(lp), &mut ginv) {
            return Err(format!("metric not invertible at point {lp}"));
        }
        for a in 0..codim {
            for b in 0..=a {
                block[smat::packed_idx(a, b)] =
                    ginv[(dim + a) * d + (dim + b)] - if a == b { 1.0 } else { 0.0 };
            }
        }
        worst = worst.min(smat::sym_eigenvalues(codim, &block)[0]);
    }
    if worst >= -1e-12 {
        Ok(format!("smallest fiber-block eigenvalue {worst:.3e}"))
    } else {
        Err(format!("fiber block of G^-1 dips below identity: {worst:.3e}"))
    }
}

fn check_frame_antisymmetry(_c: &Config) -> Result<String, String> {
    let defect = |cells: usize| -> Result<f64, String> {
        let grid = BaseGrid::new(vec![Axis::from_extent(0.0, 2.0, cells)]);
        let mut s2 = vec![0.0; grid.n_vertices()];
        let mut s3 = vec![0.0; grid.n_vertices()];
        let mut x = [0.0f64];
        for p in 0..grid.n_vertices() {
            grid.vertex_coords(p, &mut x);
            s2[p] = 0.3 * (1.7 * x[0]).sin();
            s3[p] = 0.2 * (1.3 * x[0]).cos();
        }
        let base = ImmersedBase::graph(
            2,
            layerlab_core::geometry::GraphData { grid, sigma: vec![s2, s3] },
        )
        .map_err(|e| e.to_string())?;
        let frames =
            layerlab_core::geometry::build_normal_frames(&base).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for p in 0..frames.grid.n_vertices() {
            for a in 0..2 {
                for b in 0..2 {
                    worst =
                        worst.max((frames.gamma(p, 0, a, b) + frames.gamma(p, 0, b, a)).abs());
                }
            }
        }
        Ok(worst)
    };
    let coarse = defect(48)?;
    let fine = defect(96)?;
    let order = (coarse / fine).log2();
    if order >= 1.8 {
        Ok(format!("two-grid order {order:.2}"))
    } else {
        Err(format!("antisymmetry order {order:.2} below 1.8"))
    }
}

fn check_paraboloid_normals(_c: &Config) -> Result<String, String> {
    let grid = BaseGrid::new(vec![
        Axis::from_extent(-1.0, 2.0, 20),
        Axis::from_extent(-1.0, 2.0, 20),
    ]);
    let mut sigma = vec![0.0; grid.n_vertices()];
    let mut x = [0.0f64; 2];
    for (p, v) in sigma.iter_mut().enumerate() {
        grid.vertex_coords(p, &mut x);
        *v = 0.5 * (x[0] * x[0] + x[1] * x[1]);
    }
    let base = ImmersedBase::graph(
        1,
        layerlab_core::geometry::GraphData { grid: grid.clone(), sigma: vec![sigma] },
    )
    .map_err(|e| e.to_string())?;
    let frames = layerlab_core::geometry::build_normal_frames(&base).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for p in 0..grid.n_vertices() {
        grid.vertex_coords(p, &mut x);
        let nrm = (1.0 + x[0] * x[0] + x[1] * x[1]).sqrt();
        let want = [-x[0] / nrm, -x[1] / nrm, 1.0 / nrm];
        let got = frames.frame(p, 0);
        for c in 0..3 {
            worst = worst.max((got[c] - want[c]).abs());
        }
    }
    if worst < 1e-3 {
        Ok(format!("max normal deviation {worst:.3e}"))
    } else {
        Err(format!("normals deviate from the closed form by {worst:.3e}"))
    }
}

fn check_interval_energy(_c: &Config) -> Result<String, String> {
    let d = CrossSectionDomain::new(CrossSectionShape::Interval { length: PI }, PI / 200.0);
    let m = dirichlet_modes(&d, 2).map_err(|e| e.to_string())?;
    let err = (m.energies[0] - 1.0).abs();
    if err < 1e-3 {
        Ok(format!("E1 = {:.6} (error {err:.1e})", m.energies[0]))
    } else {
        Err(format!("interval E1 error {err:.3e}"))
    }
}

fn check_square_energy(_c: &Config) -> Result<String, String> {
    let d = CrossSectionDomain::new(
        CrossSectionShape::Rectangle { width: 1.0, height: 1.0 },
        1.0 / 40.0,
    );
    let m = dirichlet_modes(&d, 1).map_err(|e| e.to_string())?;
    let want = 2.0 * PI * PI;
    let rel = (m.energies[0] - want).abs() / want;
    if rel < 1e-2 {
        Ok(format!("E1 = {:.4} vs 2 pi^2 (rel {rel:.1e})", m.energies[0]))
    } else {
        Err(format!("square E1 relative error {rel:.3e}"))
    }
}

fn check_scaling_law(_c: &Config) -> Result<String, String> {
    let da = CrossSectionDomain::new(CrossSectionShape::Interval { length: 1.0 }, 1.0 / 32.0);
    let db = CrossSectionDomain::new(CrossSectionShape::Interval { length: 2.0 }, 2.0 / 32.0);
    let ma = dirichlet_modes(&da, 3).map_err(|e| e.to_string())?;
    let mb = dirichlet_modes(&db, 3).map_err(|e| e.to_string())?;
    for k in 0..3 {
        let ratio = ma.energies[k] / mb.energies[k];
        if (ratio - 4.0).abs() / 4.0 > 1e-3 {
            return Err(format!("mode {k} scaling ratio {ratio} != 4"));
        }
    }
    Ok("E_k ratios equal c^-2 = 4 within 1e-3".into())
}

fn check_flat_stencil(_c: &Config) -> Result<String, String> {
    let (field, grid, _) = strip(2.0, 8, 1.0, 8, Profile1d::Zero)?;
    let forms = forms_of(&field, &grid)?;
    let vol = grid.cell_volume();
    let hx = grid.base.axes[0].spacing;
    let hy = grid.fiber.axes[0].spacing;
    for u in 0..forms.n_unknowns() {
        for k in forms.k.row_ptr[u]..forms.k.row_ptr[u + 1] {
            let col = forms.k.col_idx[k] as usize;
            let v = forms.k.values[k];
            let want = if col == u {
                vol * (2.0 / (hx * hx) + 2.0 / (hy * hy))
            } else {
                let (bu, fu) = grid.vertices_of_unknown(u);
                let (bc, fc) = grid.vertices_of_unknown(col);
                if fu == fc && bu != bc {
                    -vol / (hx * hx)
                } else {
                    -vol / (hy * hy)
                }
            };
            if v != want {
                return Err(format!("entry ({u},{col}) = {v}, want {want}"));
            }
        }
    }
    Ok("flat stiffness is the exact 5-point stencil".into())
}

fn check_symmetry(_c: &Config) -> Result<String, String> {
    let (field, grid, _) = twisted(6.0, 12, 1.0, 6, 0.5)?;
    let forms = forms_of(&field, &grid)?;
    let asym = forms.k.max_asymmetry();
    if asym == 0.0 {
        Ok("max |K - K^T| = 0 exactly".into())
    } else {
        Err(format!("stiffness asymmetry {asym:.3e}"))
    }
}

fn check_product_oracle(_c: &Config) -> Result<String, String> {
    let l = 8.0 * PI;
    let (nx, nf) = (96, 12);
    let (field, grid, _) = strip(l, nx, PI, nf, Profile1d::Zero)?;
    let forms = forms_of(&field, &grid)?;
    let mut opts = EigOptions::with_tol(1e-8);
    opts.max_iter = 20_000;
    let got = forms.smallest_eigenpairs(4, &opts).map_err(|e| e.to_string())?;
    // exact discrete sums
    let ex: Vec<f64> = (1..=nx - 1)
        .map(|k| {
            let t = k as f64 * PI / nx as f64;
            (2.0 - 2.0 * t.cos()) / (l / nx as f64).powi(2)
        })
        .collect();
    let ey: Vec<f64> = (1..=nf - 1)
        .map(|k| {
            let t = k as f64 * PI / nf as f64;
            (2.0 - 2.0 * t.cos()) / (PI / nf as f64).powi(2)
        })
        .collect();
    let mut sums: Vec<f64> = ex.iter().flat_map(|&a| ey.iter().map(move |&b| a + b)).collect();
    sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for i in 0..4 {
        let err = (got.values[i] - sums[i]).abs() / sums[i];
        if err > 1e-7 {
            return Err(format!("product eigenvalue {i} off by {err:.3e}"));
        }
    }
    Ok("assembled spectrum matches discrete 1D sums".into())
}

fn check_comparison_identity(_c: &Config) -> Result<String, String> {
    let residual = |nx: usize, nf: usize| -> Result<f64, String> {
        let (field, grid, modes) = strip(
            16.0,
            nx,
            1.0,
            nf,
            Profile1d::CompactBump { amplitude: 0.9, center: 8.0, half_width: 3.0 },
        )?;
        let forms = forms_of(&field, &grid)?;
        let forms0 = assemble_unperturbed(&field, &modes, &grid, &AssembleOptions::default())
            .map_err(|e| e.to_string())?;
        let n_pts = field.n_layer_points();
        let defo =
            deformation_vs_unperturbed(&field, &vec![true; n_pts]).map_err(|e| e.to_string())?;
        let n = forms.n_unknowns();
        let mut phi = vec![0.0; n];
        let mut psi = vec![0.0; n];
        let mut x = [0.0f64];
        let mut uu = [0.0f64];
        for i in 0..n {
            grid.unknown_coords(i, &mut x, &mut uu);
            let bx = layerlab_core::weyl::bump_c2((x[0] - 7.0) / 4.0);
            let bu = (PI * (uu[0] + 0.5)).sin();
            phi[i] = bx * bu * (1.3 * x[0]).cos();
            psi[i] = bx * bu * (0.7 * x[0]).sin();
        }
        Ok(comparison_identity_residual(&field, &forms, &forms0, &defo, &phi, &psi, 1.3))
    };
    let coarse = residual(96, 8)?;
    let fine = residual(192, 16)?;
    let order = (coarse / fine).log2();
    if order >= 1.8 {
        Ok(format!("two-grid order {order:.2}"))
    } else {
        Err(format!("comparison-identity order {order:.2} below 1.8"))
    }
}

fn check_dense_agreement(_c: &Config) -> Result<String, String> {
    for seed in 0..3u64 {
        let n = 120;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for _ in 0..5 {
                let j = rng.gen_range(0..n);
                let v = rng.gen::<f64>() - 0.5;
                dense[(i, j)] += v;
                dense[(j, i)] += v;
            }
        }
        for i in 0..n {
            let row: f64 = (0..n).filter(|&j| j != i).map(|j| dense[(i, j)].abs()).sum();
            dense[(i, i)] = row + 0.1;
        }
        let k = CsrMatrix::from_dense(&dense);
        let m = vec![1.0; n];
        let got = smallest_eigenpairs(&k, &m, 4, &EigOptions::with_tol(1e-9))
            .map_err(|e| e.to_string())?;
        let (want, _) = layerlab_core::spectral::dense::sym_eigen_sorted(dense);
        for i in 0..4 {
            if (got.values[i] - want[i]).abs() > 1e-8 * (1.0 + want[i].abs()) {
                return Err(format!("seed {seed} eigenvalue {i} disagrees with dense"));
            }
        }
    }
    Ok("iterative pairs match the dense oracle to 1e-8".into())
}

fn check_cg_oracle(_c: &Config) -> Result<String, String> {
    let n = 120;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() - 0.5);
    let spd = &b * b.transpose() + DMatrix::identity(n, n) * (n as f64);
    let k = CsrMatrix::from_dense(&spd);
    let rhs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let x = solve_spd(&k, None, &rhs, 1e-12).map_err(|e| e.to_string())?;
    let want = layerlab_core::spectral::dense::solve_spd_dense(&spd, &rhs)
        .ok_or("dense factorization failed")?;
    let mut worst = 0.0f64;
    for i in 0..n {
        worst = worst.max((x[i] - want[i]).abs());
    }
    if worst < 1e-8 {
        Ok(format!("CG matches dense factorization (max dev {worst:.1e})"))
    } else {
        Err(format!("CG deviates from dense solve by {worst:.3e}"))
    }
}

fn check_ritz_monotone(_c: &Config) -> Result<String, String> {
    let (field, grid, _) = strip(8.0, 48, 1.0, 8, Profile1d::Zero)?;
    let forms = forms_of(&field, &grid)?;
    let mut opts = EigOptions::with_tol(1e-8);
    opts.history = true;
    let r = forms.smallest_eigenpairs(3, &opts).map_err(|e| e.to_string())?;
    for w in r.ritz_history.windows(2) {
        for i in 0..w[0].len().min(w[1].len()) {
            if w[1][i] > w[0][i] + 1e-12 * (1.0 + w[0][i].abs()) {
                return Err(format!("Ritz value {i} increased"));
            }
        }
    }
    // M-orthonormality
    for i in 0..r.values.len() {
        for j in 0..=i {
            let dot = forms.m_inner(&r.vectors[i], &r.vectors[j]);
            let want = if i == j { 1.0 } else { 0.0 };
            if (dot - want).abs() > 1e-8 {
                return Err(format!("gram ({i},{j}) = {dot}"));
            }
        }
    }
    Ok("Ritz values nonincreasing; block M-orthonormal".into())
}

fn check_dual_norm(_c: &Config) -> Result<String, String> {
    let (field, grid, _) = strip(6.0, 24, 1.0, 8, Profile1d::Zero)?;
    let mut forms = forms_of(&field, &grid)?;
    let n = 3;
    let trip: Vec<(usize, usize, f64)> = [0.0, 1.0, 2.0]
        .iter()
        .enumerate()
        .map(|(i, &v)| (i, i, v))
        .collect();
    forms.k = CsrMatrix::from_triplets(n, n, &trip);
    forms.m = vec![1.0; n];
    let got = dual_norm(&forms, &[0.0, 0.5, 0.0]).map_err(|e| e.to_string())?;
    let want = 0.5 / 2.0f64.sqrt();
    if (got - want).abs() < 1e-10 {
        Ok(format!("diagonal dual norm {got:.6}"))
    } else {
        Err(format!("dual norm {got} != {want}"))
    }
}

fn check_dual_consistency(_c: &Config) -> Result<String, String> {
    let (field, grid, _) = strip(
        8.0,
        32,
        1.0,
        8,
        Profile1d::CompactBump { amplitude: 0.8, center: 4.0, half_width: 1.5 },
    )?;
    let forms = forms_of(&field, &grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let v: Vec<f64> = (0..forms.n_unknowns()).map(|_| rng.gen::<f64>() - 0.5).collect();
        let lhs = dual_norm(&forms, &v).map_err(|e| e.to_string())?;
        let rhs: f64 = v.iter().zip(&forms.m).map(|(x, m)| x * x / m).sum::<f64>().sqrt();
        if lhs > rhs * (1.0 + 1e-9) {
            return Err(format!("||v||_-1 = {lhs} exceeds ||v||_M-1 = {rhs}"));
        }
    }
    Ok("||v||_-1 <= ||v||_M^-1 on random vectors".into())
}

fn check_disjoint_supports(_c: &Config) -> Result<String, String> {
    let (field, grid, modes) = strip(64.0, 256, 1.0, 8, Profile1d::Zero)?;
    let forms = forms_of(&field, &grid)?;
    let params = PacketParams { r0: 4.0, box_gap: 0.5, edge_margin: 0.5 };
    let fam = build_singular_family(&forms, &modes, modes.e1() + 0.3, 3, &params)
        .map_err(|e| e.to_string())?;
    if !fam.supports_disjoint() {
        return Err("member supports overlap".into());
    }
    let rep =
        weyl_quotient(&forms, &fam, fam.lambda, 1e-10).map_err(|e| e.to_string())?;
    if rep.cross_gram_max != 0.0 {
        return Err(format!("cross gram {:.3e} nonzero", rep.cross_gram_max));
    }
    Ok("supports disjoint; psi_n^T M psi_m = 0 exactly".into())
}

fn check_quotient_decay(_c: &Config) -> Result<String, String> {
    let (field, grid, modes) = strip(64.0, 512, 1.0, 8, Profile1d::Zero)?;
    let forms = forms_of(&field, &grid)?;
    let params = PacketParams { r0: 4.0, box_gap: 0.25, edge_margin: 0.25 };
    let lambda = modes.e1() + 0.25;
    let fam = build_singular_family(&forms, &modes, lambda, 3, &params)
        .map_err(|e| e.to_string())?;
    let rep = weyl_quotient(&forms, &fam, lambda, 1e-10).map_err(|e| e.to_string())?;
    let q = &rep.quotients;
    if q[1] / q[0] <= 0.85 && q[2] / q[1] <= 0.85 {
        Ok(format!("quotient ratios {:.2}, {:.2}", q[1] / q[0], q[2] / q[1]))
    } else {
        Err(format!("quotients do not decay: {q:?}"))
    }
}

fn check_matrix_bound(_c: &Config) -> Result<String, String> {
    for seed in 0..3u64 {
        let n = 60;
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 40);
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() - 0.5);
        let h = &b * b.transpose();
        let (evals, _) = layerlab_core::spectral::dense::sym_eigen_sorted(h.clone());
        let mut gap = (0usize, 0.0f64);
        for i in 0..n - 1 {
            let g = evals[i + 1] - evals[i];
            if g > gap.1 {
                gap = (i, g);
            }
        }
        let lambda = 0.5 * (evals[gap.0] + evals[gap.0 + 1]);
        let cert = matrix_weyl_bound(&h, lambda, 50, seed).map_err(|e| e.to_string())?;
        if !cert.holds {
            return Err(format!("seed {seed}: bound violated"));
        }
    }
    Ok("gap lower bound holds on sampled matrices".into())
}

fn check_determinism(_c: &Config) -> Result<String, String> {
    let run = || -> Result<Vec<f64>, String> {
        let (field, grid, _) = strip(8.0, 64, 1.0, 8, Profile1d::Zero)?;
        let forms = forms_of(&field, &grid)?;
        let r = forms
            .smallest_eigenpairs(3, &EigOptions::with_tol(1e-9))
            .map_err(|e| e.to_string())?;
        Ok(r.values)
    };
    let a = run()?;
    let b = run()?;
    if a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()) {
        Ok("repeated eigensolves are bit-identical".into())
    } else {
        Err("eigensolver results differ between runs".into())
    }
}

const CHECKS: &[(&str, CheckFn)] = &[
    ("geometry.flat_reduction", check_flat_reduction),
    ("geometry.det_identity", check_det_identity),
    ("geometry.transverse_poincare", check_transverse_poincare),
    ("geometry.frame_antisymmetry", check_frame_antisymmetry),
    ("geometry.paraboloid_normals", check_paraboloid_normals),
    ("cross_section.interval_energy", check_interval_energy),
    ("cross_section.square_energy", check_square_energy),
    ("cross_section.scaling_law", check_scaling_law),
    ("discretization.flat_stencil", check_flat_stencil),
    ("discretization.symmetry", check_symmetry),
    ("discretization.product_oracle", check_product_oracle),
    ("discretization.comparison_identity", check_comparison_identity),
    ("spectral.dense_agreement", check_dense_agreement),
    ("spectral.cg_oracle", check_cg_oracle),
    ("spectral.ritz_monotone", check_ritz_monotone),
    ("weyl.dual_norm", check_dual_norm),
    ("weyl.dual_consistency", check_dual_consistency),
    ("weyl.disjoint_supports", check_disjoint_supports),
    ("weyl.quotient_decay", check_quotient_decay),
    ("weyl.matrix_bound", check_matrix_bound),
    ("determinism.eigensolver", check_determinism),
];

/// Run every check; the summary is deterministic line-per-check text.
pub fn run(config: &Config) -> SelftestOutcome {
    let mut summary = String::new();
    let mut passed = 0;
    let mut failed = 0;
    for (name, check) in CHECKS {
        match check(config) {
            Ok(detail) => {
                passed += 1;
                summary.push_str(&format!("[PASS] {name} - {detail}\n"));
            }
            Err(reason) => {
                failed += 1;
                summary.push_str(&format!("[FAIL] {name} - {reason}\n"));
            }
        }
    }
    summary.push_str(&format!("selftest: {passed} passed, {failed} failed\n"));
    SelftestOutcome { passed, failed, summary }
}
