//! Cross-section eigenpairs against exact values and a Bessel-root
//! oracle, plus the scaling/monotonicity/convergence properties.

mod common;

use layerlab_core::cross_section::{
    dirichlet_modes, CrossSectionDomain, CrossSectionShape,
};
use std::f64::consts::PI;

/// First positive root of the Bessel function J0, by bisection on the
/// power series: an oracle independent of the eigensolver path.
fn bessel_j0_first_root() -> f64 {
    fn j0(x: f64) -> f64 {
        // sum (-1)^m (x/2)^{2m} / (m!)^2, converges fast for x <= 4
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..60 {
            term *= -q / (m as f64 * m as f64);
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum
    }
    let (mut lo, mut hi) = (2.0, 3.0);
    assert!(j0(lo) > 0.0 && j0(hi) < 0.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn interval_modes_match_exact_eigenvalues() {
    // interval of length pi at h = pi/2000: E_k = k^2 with O(h^2) error
    let d = CrossSectionDomain::new(CrossSectionShape::Interval { length: PI }, PI / 2000.0);
    let m = dirichlet_modes(&d, 3).unwrap();
    assert!((m.energies[0] - 1.0).abs() < 1e-5, "E1 = {}", m.energies[0]);
    assert!((m.energies[1] - 4.0).abs() / 4.0 < 1e-5);
    assert!((m.energies[2] - 9.0).abs() / 9.0 < 1e-5);

    // ground state proportional to sin along the interval
    let grid = &m.grid;
    let s1 = m.ground_state();
    let mut x = [0.0f64];
    let mut dot = 0.0;
    let mut n_sin = 0.0;
    let mut n_mode = 0.0;
    for u in 0..grid.n_unknowns() {
        grid.unknown_coords(u, &mut x);
        let sin = (x[0] - grid.axes[0].origin).sin(); // zero at the left wall
        dot += sin * s1[u];
        n_sin += sin * sin;
        n_mode += s1[u] * s1[u];
    }
    let cosine = dot / (n_sin.sqrt() * n_mode.sqrt());
    assert!(cosine > 1.0 - 1e-8, "cosine similarity {cosine}");
}

#[test]
fn unit_square_ground_energy() {
    let d = CrossSectionDomain::new(
        CrossSectionShape::Rectangle { width: 1.0, height: 1.0 },
        1.0 / 100.0,
    );
    let m = dirichlet_modes(&d, 1).unwrap();
    let want = 2.0 * PI * PI;
    assert!(
        (m.energies[0] - want).abs() / want < 1e-3,
        "E1 = {} vs {}",
        m.energies[0],
        want
    );
}

#[test]
fn disk_ground_energy_against_bessel_oracle() {
    let j01 = bessel_j0_first_root();
    let want = j01 * j01; // approx. 5.7832
    let d = CrossSectionDomain::new(CrossSectionShape::Disk { radius: 1.0 }, 1.0 / 50.0);
    let m = dirichlet_modes(&d, 1).unwrap();
    assert!(
        (m.energies[0] - want).abs() / want < 3e-2,
        "disk E1 = {} vs j01^2 = {}",
        m.energies[0],
        want
    );
}

#[test]
fn scaling_law_two_grid() {
    // scaling the domain by c multiplies E_k by c^{-2}; with matched cell
    // counts the discretization error scales identically
    let c = 2.0;
    let da = CrossSectionDomain::new(CrossSectionShape::Interval { length: 1.0 }, 1.0 / 64.0);
    let db = CrossSectionDomain::new(CrossSectionShape::Interval { length: c }, c / 64.0);
    let ma = dirichlet_modes(&da, 4).unwrap();
    let mb = dirichlet_modes(&db, 4).unwrap();
    for k in 0..4 {
        let ratio = ma.energies[k] / mb.energies[k];
        assert!(
            (ratio - c * c).abs() / (c * c) < 1e-3,
            "mode {k}: ratio {ratio}"
        );
    }
}

#[test]
fn domain_monotonicity_disk_in_square() {
    // disk of radius 1/2 inside the unit square: E1(disk) >= E1(square)
    let disk = CrossSectionDomain::new(CrossSectionShape::Disk { radius: 0.5 }, 1.0 / 40.0);
    let square = CrossSectionDomain::new(
        CrossSectionShape::Rectangle { width: 1.0, height: 1.0 },
        1.0 / 40.0,
    );
    let e_disk = dirichlet_modes(&disk, 1).unwrap().energies[0];
    let e_square = dirichlet_modes(&square, 1).unwrap().energies[0];
    assert!(
        e_disk >= e_square,
        "disk {e_disk} should dominate square {e_square}"
    );
}

#[test]
fn grid_convergence_is_second_order() {
    let e_at = |h: f64| {
        let d = CrossSectionDomain::new(CrossSectionShape::Interval { length: 1.0 }, h);
        dirichlet_modes(&d, 1).unwrap().energies[0]
    };
    let e1 = e_at(1.0 / 32.0);
    let e2 = e_at(1.0 / 64.0);
    let e4 = e_at(1.0 / 128.0);
    let ratio = (e1 - e2).abs() / (e2 - e4).abs();
    assert!(
        (3.2..=4.8).contains(&ratio),
        "two-grid ratio {ratio} outside [3.2, 4.8]"
    );
}

#[test]
fn mode_count_and_normalization() {
    let d = CrossSectionDomain::new(CrossSectionShape::Interval { length: 1.0 }, 1.0 / 64.0);
    let m = dirichlet_modes(&d, 6).unwrap();
    assert_eq!(m.energies.len(), 6);
    let vol = m.grid.cell_volume();
    for k in 0..6 {
        let nrm: f64 = m.modes[k].iter().map(|v| v * v * vol).sum();
        assert!((nrm - 1.0).abs() < 1e-10, "mode {k} norm {nrm}");
    }
    // strict ground-state gap
    assert!(m.energies[1] - m.energies[0] > 1e-8);
}
