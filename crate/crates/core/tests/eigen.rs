use std::f64::consts::PI;

use nalgebra::DMatrix;
use tuckeriga::bspline::{assemble_pencil, BoundaryCondition, SplineSpace1D};
use tuckeriga::linalg::generalized_eigen;
use tuckeriga::precond::{ApproxEigen1D, TransformMode};

use BoundaryCondition::*;

const ALL_BC: [[BoundaryCondition; 2]; 4] = [
    [Dirichlet, Dirichlet],
    [Neumann, Dirichlet],
    [Dirichlet, Neumann],
    [Neumann, Neumann],
];

/// Analytic eigenfunction `j` (1-based) for the given end conditions,
/// normalized in L².
fn analytic(j: usize, bc: [BoundaryCondition; 2], x: f64) -> f64 {
    let k0 = f64::from(u8::from(bc[0] == Neumann));
    let k1 = f64::from(u8::from(bc[1] == Neumann));
    let a = j as f64 - 0.5 * (k0 + k1);
    let norm = if a == 0.0 { 1.0 } else { 2f64.sqrt() };
    norm * (a * PI * x + k0 * PI / 2.0).sin()
}

#[test]
fn smooth_eigenvectors_interpolate_sines() {
    for p in [3, 4, 5] {
        for n_el in [8, 16] {
            for bc in ALL_BC {
                let space = SplineSpace1D::new(p, n_el, bc).unwrap();
                let e = ApproxEigen1D::from_space(&space).unwrap();
                let (n1, _) = e.split_dims();
                let u = e.to_dense().unwrap();
                for j in 0..n1 {
                    for &x in e.interpolation_points() {
                        let vals = space.eval_all(x, 0).unwrap();
                        let f: f64 = vals.iter().enumerate().map(|(r, v)| v * u[(r, j)]).sum();
                        let want = analytic(j + 1, bc, x);
                        assert!(
                            (f - want).abs() < 1e-10,
                            "p={p} n_el={n_el} {bc:?} j={j} x={x}: {f} vs {want}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn interpolation_points_by_degree_parity() {
    let odd = ApproxEigen1D::from_space(&SplineSpace1D::dirichlet(3, 8).unwrap()).unwrap();
    let want: Vec<f64> = (1..8).map(|i| i as f64 / 8.0).collect();
    assert_eq!(odd.interpolation_points().len(), want.len());
    assert!(odd
        .interpolation_points()
        .iter()
        .zip(&want)
        .all(|(a, b)| (a - b).abs() < 1e-15));
    let even = ApproxEigen1D::from_space(&SplineSpace1D::dirichlet(4, 8).unwrap()).unwrap();
    assert!(even
        .interpolation_points()
        .iter()
        .enumerate()
        .all(|(i, x)| (x - (i as f64 + 0.5) / 8.0).abs() < 1e-15));
    let neu = ApproxEigen1D::from_space(&SplineSpace1D::new(3, 8, [Neumann, Neumann]).unwrap()).unwrap();
    assert_eq!(neu.interpolation_points().first(), Some(&0.0));
    assert_eq!(neu.interpolation_points().last(), Some(&1.0));
}

#[test]
fn fast_transform_matches_dense_on_larger_meshes() {
    for bc in ALL_BC {
        for p in [3, 4, 5] {
            let space = SplineSpace1D::new(p, 40, bc).unwrap();
            let e = ApproxEigen1D::from_space(&space).unwrap();
            let b = DMatrix::from_fn(e.dim(), 4, |i, j| ((3 * i + 11 * j) as f64 * 0.37).cos());
            for tr in [false, true] {
                let f = e.clone().with_mode(TransformMode::Fast).apply(&b, tr).unwrap();
                let d = e.clone().with_mode(TransformMode::Dense).apply(&b, tr).unwrap();
                assert!((&f - &d).amax() <= 1e-12 * d.amax().max(1.0), "{bc:?} p={p}");
            }
        }
    }
}

#[test]
fn boundary_part_is_m_orthogonal_to_smooth_part() {
    let space = SplineSpace1D::dirichlet(4, 12).unwrap();
    let (_, m) = assemble_pencil(&space).unwrap();
    let e = ApproxEigen1D::from_space(&space).unwrap();
    let (n1, n2) = e.split_dims();
    let u = e.to_dense().unwrap();
    let g = u.transpose() * m.to_dense() * &u;
    let cross = g.view((0, n1), (n1, n2)).amax();
    assert!(cross < 1e-12 * g.amax(), "cross block {cross:e}");
    // The boundary block is M-orthonormal.
    let b = g.view((n1, n1), (n2, n2)).into_owned();
    assert!((b - DMatrix::identity(n2, n2)).amax() < 1e-10);
}

#[test]
fn approximate_spectrum_brackets_exact_one() {
    // Rayleigh quotients of the approximate eigenvectors stay close to the
    // approximate eigenvalues for the low modes.
    let space = SplineSpace1D::dirichlet(3, 32).unwrap();
    let (k, m) = assemble_pencil(&space).unwrap();
    let (lam, _) = generalized_eigen(&k.to_dense(), &m.to_dense()).unwrap();
    let e = ApproxEigen1D::from_space(&space).unwrap();
    for j in 0..5 {
        assert!((e.eigenvalues()[j] - lam[j]).abs() < 1e-3 * lam[j]);
    }
}
