mod common;

use common::{converters, triple_infeed};
use gscr_core::boundary::uniform_grid;
use gscr_core::{
    compare_boundaries, find_approx_boundary, find_exact_boundary, gscr_contour, inhomogeneity_study, sweep,
    AnalysisOptions, ContourAxes, ContourTarget, LoadingDirection,
};

fn axes() -> ContourAxes {
    ContourAxes { solve_bus: "1".into(), grid_bus: "2".into() }
}

fn p2_direction(t: [f64; 3], lo: f64, hi: f64) -> LoadingDirection {
    LoadingDirection::new(converters(&[1.0; 3], &t), Some("2".into()), lo, hi).unwrap()
}

#[test]
fn bisection_roots_are_bracket_stable() {
    let net = triple_infeed();
    let dir = p2_direction([1.24, 1.5, 1.75], 1.0, 2.5);
    for tol in [1e-6, 1e-8] {
        let a = find_exact_boundary(&net, &dir, tol).unwrap();
        let b = find_exact_boundary(&net, &dir, tol / 10.0).unwrap();
        assert!((a - b).abs() < tol);
        let a = find_approx_boundary(&net, &dir, tol).unwrap();
        let b = find_approx_boundary(&net, &dir, tol / 10.0).unwrap();
        assert!((a - b).abs() < tol);
    }
}

#[test]
fn homogeneous_boundaries_coincide() {
    let net = triple_infeed();
    let cmp = compare_boundaries(&net, &p2_direction([1.5; 3], 1.0, 2.5), 1e-10).unwrap();
    assert!(cmp.rel_error < 1e-6, "{cmp:?}");
    // With T = 1.5 the boundary is where gSCR = 2.
    let g = gscr_core::analyze(&net, &converters(&[1.0, cmp.p_exact, 1.0], &[1.5; 3])).unwrap().gscr;
    assert!((g - 2.0).abs() < 1e-8);
}

#[test]
fn homogeneous_sweep_margin_crossing_matches_determinant() {
    let net = triple_infeed();
    let dir = p2_direction([1.5; 3], 1.0, 2.0);
    let s = sweep(&net, &dir, 201, &AnalysisOptions::default()).unwrap();
    let exact = find_exact_boundary(&net, &dir, 1e-10).unwrap();
    // Determinant sign flips between the same pair of samples as the margin.
    let pairs: Vec<(f64, f64, f64)> = s.reports().map(|(p, r)| (p, r.margin, r.lambda_crit_exact)).collect();
    let flip = pairs.windows(2).position(|w| w[0].1 > 0.0 && w[1].1 <= 0.0).unwrap();
    assert!(pairs[flip].0 <= exact && exact <= pairs[flip + 1].0);
    assert!(pairs[flip].2 < 0.0 && pairs[flip + 1].2 >= 0.0);
}

#[test]
fn sweep_gscr_decreasing_and_cgscr_flat() {
    let net = triple_infeed();
    let dir = p2_direction([1.24, 1.5, 1.75], 1.0, 1.8);
    let s = sweep(&net, &dir, 50, &AnalysisOptions::default()).unwrap();
    assert!(s.gscr_strictly_decreasing);
    assert!(s.cgscr_star_rel_variation < 0.02, "{}", s.cgscr_star_rel_variation);
}

#[test]
fn contours_are_ordered_and_disjoint() {
    let net = triple_infeed();
    let conv = converters(&[1.0; 3], &[1.24, 1.5, 1.75]);
    let grid = uniform_grid(1.0, 1.4, 9);
    let curve = |target| {
        let c = gscr_contour(&net, &conv, target, &axes(), &grid, 1e-9).unwrap();
        assert!(c.skipped.is_empty());
        c.points.iter().map(|p| p.p_solve).collect::<Vec<f64>>()
    };
    let g21 = curve(ContourTarget::Gscr(2.1));
    let g2 = curve(ContourTarget::Gscr(2.0));
    let crit = curve(ContourTarget::CgscrStar);
    for i in 0..grid.len() {
        // Larger target gSCR is reached at smaller loading.
        assert!(g21[i] < g2[i], "{i}");
        assert!(g2[i] < crit[i], "{i}");
    }
}

#[test]
fn table_rows_error_grows_with_spread() {
    let net = triple_infeed();
    let conv = converters(&[1.0; 3], &[1.5; 3]);
    let rows = vec![
        vec![1.5, 1.5, 1.5],
        vec![1.2444, 1.5, 1.7455],
        vec![1.1786, 1.5, 1.8056],
        vec![1.1118, 1.5, 1.8652],
        vec![1.0439, 1.5, 1.9245],
    ];
    let study = inhomogeneity_study(&net, &conv, &rows, &axes(), &uniform_grid(1.0, 1.4, 9), 1e-9).unwrap();
    assert!(study[0].max_rel_error < 1e-6);
    for w in study.windows(2) {
        assert!(w[1].std_dev > w[0].std_dev);
        assert!(w[1].max_rel_error > w[0].max_rel_error);
    }
    assert!(study.iter().all(|r| r.max_rel_error < 0.016));
}
