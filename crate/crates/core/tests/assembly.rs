use nalgebra::{DMatrix, Matrix3};
use proptest::prelude::*;
use tuckeriga::assembly::{
    approximate_function, assemble_operator, assemble_system, dirichlet_lift, full_spaces, lift_vector, BoundaryData,
    CoefficientGrid, Face,
};
use tuckeriga::bspline::{metric, points_per_element, SplineSpace1D};
use tuckeriga::oracle::{dense_galerkin, dense_kron_operator, dense_vector};
use tuckeriga::problems::preset_load;
use tuckeriga::GeometryPreset;

fn spaces(p: usize, n_el: usize) -> [SplineSpace1D; 3] {
    let s = SplineSpace1D::dirichlet(p, n_el).unwrap();
    [s.clone(), s.clone(), s]
}

fn grid_eval(grid: &CoefficientGrid, eta: [f64; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|k, l| grid[k][l].as_ref().map_or(0.0, |c| c.eval(eta)))
}

fn max_len(grid: &CoefficientGrid) -> usize {
    grid.iter()
        .flatten()
        .flatten()
        .map(|c| c.lengths().into_iter().max().unwrap())
        .max()
        .unwrap_or(1)
}

fn rel_max(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(f64::MIN_POSITIVE)
}

#[test]
fn tucker_assembly_matches_element_loop_on_every_preset() {
    for preset in GeometryPreset::ALL {
        for (p, n_el) in [(2, 4), (3, 3)] {
            let sp = spaces(p, n_el);
            let geo = preset.build();
            let load = preset_load(preset);
            let sys = assemble_system(&sp, geo.as_ref(), &load, 1e-10).unwrap();
            let len = max_len(&sys.coefficients).max(sys.load_weight.lengths().into_iter().max().unwrap());
            let q = points_per_element(p, len);
            let (a, f) = dense_galerkin(
                &sp,
                &sp,
                &|eta| grid_eval(&sys.coefficients, eta),
                &|eta| sys.load_weight.eval(eta),
                q,
            )
            .unwrap();
            let a_t = dense_kron_operator(&sys.operator).unwrap();
            let err = rel_max(&a_t, &a);
            assert!(err < 1e-10, "{preset} p={p}: operator {err:e}");
            let f_t = dense_vector(&sys.rhs).unwrap();
            let ferr = (&f_t - &f).amax() / f.amax();
            assert!(ferr < 1e-10, "{preset} p={p}: rhs {ferr:e}");
        }
    }
}

#[test]
fn assembled_system_approximates_exact_metric() {
    for preset in GeometryPreset::ALL {
        let sp = spaces(2, 3);
        let geo = preset.build();
        let load = preset_load(preset);
        let sys = assemble_system(&sp, geo.as_ref(), &load, 1e-10).unwrap();
        let (a, f) = dense_galerkin(
            &sp,
            &sp,
            &|eta| metric(geo.as_ref(), eta).unwrap().0,
            &|eta| metric(geo.as_ref(), eta).unwrap().1 * load(geo.eval(eta)),
            12,
        )
        .unwrap();
        let err = rel_max(&dense_kron_operator(&sys.operator).unwrap(), &a);
        assert!(err < 1e-8, "{preset}: operator {err:e}");
        let ferr = (dense_vector(&sys.rhs).unwrap() - &f).amax() / f.amax();
        assert!(ferr < 1e-8, "{preset}: rhs {ferr:e}");
    }
}

#[test]
fn assembled_operator_is_symmetric_positive_definite() {
    for preset in GeometryPreset::ALL {
        let sp = spaces(3, 4);
        let geo = preset.build();
        let sys = assemble_system(&sp, geo.as_ref(), &preset_load(preset), 1e-8).unwrap();
        let a = dense_kron_operator(&sys.operator).unwrap();
        assert!(rel_max(&a, &a.transpose()) < 1e-12, "{preset}");
        assert!(a.cholesky().is_some(), "{preset}");
    }
}

#[test]
fn unit_cube_operator_has_rank_three() {
    let sp = spaces(3, 6);
    let sys = assemble_system(&sp, GeometryPreset::UnitCube.build().as_ref(), &|_| 1.0, 1e-10).unwrap();
    assert_eq!(sys.ranks().0, [3, 3, 3]);
    assert_eq!(sys.rhs.rank().0, [1, 1, 1]);
}

#[test]
fn lift_matches_dense_boundary_coupling() {
    let sp = spaces(2, 3);
    let geo = GeometryPreset::QuarterAnnulus.build();
    let sys = assemble_system(&sp, geo.as_ref(), &|_| 1.0, 1e-10).unwrap();
    let data = BoundaryData::Constant {
        face: Face { direction: 2, end: 1 },
        value: 0.75,
    };
    let lifted = dirichlet_lift(&sp, &sys.coefficients, &sys.rhs, &data).unwrap();

    let full = full_spaces(&sp).unwrap();
    let g = dense_vector(&lift_vector(&full, &data).unwrap().unwrap()).unwrap();
    let q = points_per_element(2, max_len(&sys.coefficients));
    let (a_bd, _) = dense_galerkin(&sp, &full, &|eta| grid_eval(&sys.coefficients, eta), &|_| 0.0, q).unwrap();
    let want = dense_vector(&sys.rhs).unwrap() - a_bd * g;
    let got = dense_vector(&lifted).unwrap();
    assert!(
        (&got - &want).amax() < 1e-12 * want.amax(),
        "{:e}",
        (&got - &want).amax()
    );
}

#[test]
fn rectangular_operator_pairs_test_and_trial_spaces() {
    let sp = spaces(2, 3);
    let full = full_spaces(&sp).unwrap();
    let geo = GeometryPreset::DeformedColumn.build();
    let sys = assemble_system(&sp, geo.as_ref(), &|_| 1.0, 1e-10).unwrap();
    let op = assemble_operator(&sp, &full, &sys.coefficients).unwrap();
    assert_eq!(op.row_dims(), [3, 3, 3]);
    assert_eq!(op.col_dims(), [5, 5, 5]);
    let q = points_per_element(2, max_len(&sys.coefficients));
    let (a, _) = dense_galerkin(&sp, &full, &|eta| grid_eval(&sys.coefficients, eta), &|_| 0.0, q).unwrap();
    assert!(rel_max(&dense_kron_operator(&op).unwrap(), &a) < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn polynomials_are_reproduced(c in prop::collection::vec(-1.0f64..1.0, 9)) {
        let g = |x: [f64; 3]| {
            (c[0] + c[1] * x[0] + c[2] * x[0] * x[0]) * (c[3] + c[4] * x[1] + c[5] * x[1].powi(3))
                + c[6] * x[2] + c[7] * x[0] * x[2] + c[8]
        };
        let f = approximate_function(&g, 1e-12).unwrap();
        prop_assert!(f.rank().max() <= 3);
        for eta in [[0.1, 0.7, 0.3], [0.9, 0.2, 0.55], [0.0, 1.0, 1.0]] {
            prop_assert!((f.eval(eta) - g(eta)).abs() < 1e-11);
        }
    }
}
