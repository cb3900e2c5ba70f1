use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use sgmor::basis::{build_quadrature, default_quadrature, BasisSpec, Distribution1D, QuadratureMode};
use sgmor::circuits::{desk_netlist, mna_assemble};
use sgmor::error::Error;
use sgmor::galerkin::{
    assemble, assemble_with_limit, downsize, AssemblyMethod, GalerkinSystem, ParametricSystem, Selection,
    SystemMatrices,
};
use sgmor::sparse::CscMatrix;

fn scalar(v: f64) -> CscMatrix<f64> {
    CscMatrix::from_triplets(1, 1, &[(0, 0, v)]).unwrap()
}

/// `x' = −p x + u`, `y = x` with `p` uniform on `[lo, hi]`, evaluator only.
fn relaxation(lo: f64, hi: f64) -> ParametricSystem {
    let eval = Arc::new(|p: &[f64]| {
        Ok(SystemMatrices {
            e: scalar(1.0),
            a: scalar(-p[0]),
            b: scalar(1.0),
            c: scalar(1.0),
        })
    });
    ParametricSystem::new(1, vec![Distribution1D::uniform(lo, hi).unwrap()], eval)
}

fn dense(g: &GalerkinSystem) -> [DMatrix<f64>; 4] {
    let s = g.system();
    [s.e().to_dense(), s.a().to_dense(), s.b().to_dense(), s.c().to_dense()]
}

#[test]
fn scalar_galerkin_matrix_is_jacobi() {
    let (lo, hi, d) = (1.0, 3.0, 6);
    let psys = relaxation(lo, hi);
    let spec = BasisSpec::total_degree(psys.distributions().to_vec(), d).unwrap();
    let quad = build_quadrature(&spec, QuadratureMode::Tensor, d + 2).unwrap();
    let g = assemble(&psys, &spec, &quad).unwrap();
    assert_eq!(g.info().method, AssemblyMethod::Quadrature);
    // −E[p Φ_i Φ_j]: mean on the diagonal, half-width · k/sqrt(4k² − 1) off it.
    let (mean, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let want = DMatrix::from_fn(d + 1, d + 1, |i, j| {
        if i == j {
            -mean
        } else if i.abs_diff(j) == 1 {
            let k = i.max(j) as f64;
            -half * k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let [e, a, b, c] = dense(&g);
    assert!((a - want).abs().max() < 1e-13);
    assert!((e - DMatrix::<f64>::identity(d + 1, d + 1)).abs().max() < 1e-13);
    assert_eq!(b[(0, 0)], 1.0);
    assert!(b.rows(1, d).iter().all(|v| v.abs() < 1e-15));
    assert!((c - DMatrix::<f64>::identity(d + 1, d + 1)).abs().max() < 1e-13);
}

#[test]
fn mean_output_converges_to_expected_transfer() {
    // E[1/(s + p)] for p uniform on [1, 3] is ln((s + 3)/(s + 1))/2.
    let psys = relaxation(1.0, 3.0);
    let s = Complex64::new(0.5, 2.0);
    let want = ((s + 3.0) / (s + 1.0)).ln() * 0.5;
    let spec = BasisSpec::total_degree(psys.distributions().to_vec(), 12).unwrap();
    let quad = default_quadrature(&spec).unwrap();
    let g = assemble(&psys, &spec, &quad).unwrap();
    let got = g.system().transfer_eval(s).unwrap()[0];
    assert!((got - want).norm() < 1e-10, "{got} vs {want}");
}

#[test]
fn affine_and_quadrature_paths_agree() {
    let psys = mna_assemble(&desk_netlist()).unwrap();
    let spec = BasisSpec::total_degree(psys.distributions().to_vec(), 3).unwrap();
    let quad = build_quadrature(&spec, QuadratureMode::Tensor, 4).unwrap();
    let affine = assemble(&psys, &spec, &quad).unwrap();
    assert_eq!(affine.info().method, AssemblyMethod::Affine);
    let evaluator_only = {
        let p = psys.clone();
        ParametricSystem::new(psys.n(), psys.distributions().to_vec(), Arc::new(move |x: &[f64]| p.evaluate(x)))
    };
    let numeric = assemble(&evaluator_only, &spec, &quad).unwrap();
    assert_eq!(numeric.info().method, AssemblyMethod::Quadrature);
    for (x, y) in dense(&affine).iter().zip(dense(&numeric).iter()) {
        assert!((x - y).abs().max() < 1e-12);
    }
}

#[test]
fn dimension_limit_is_enforced() {
    let psys = mna_assemble(&desk_netlist()).unwrap();
    let spec = BasisSpec::total_degree(psys.distributions().to_vec(), 2).unwrap();
    let quad = default_quadrature(&spec).unwrap();
    let err = assemble_with_limit(&psys, &spec, &quad, 39).unwrap_err();
    assert!(matches!(err, Error::Sizing { value: 40, limit: 39, .. }), "{err:?}");
}

#[test]
fn selections_validate_indices() {
    assert!(matches!(Selection::new(5, [7]), Err(Error::Selection(_))));
    let sel = Selection::new(5, [3]).unwrap();
    assert_eq!(sel.kept(), &[0, 3]);
    assert_eq!(sel.dropped(), &[1, 2, 4]);
}

#[test]
fn write_and_read_round_trip() {
    let psys = mna_assemble(&desk_netlist()).unwrap();
    let spec = BasisSpec::total_degree(psys.distributions().to_vec(), 2).unwrap();
    let g = assemble(&psys, &spec, &default_quadrature(&spec).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    g.write(dir.path()).unwrap();
    let back = GalerkinSystem::read(dir.path()).unwrap();
    assert_eq!(back.sidecar(), g.sidecar());
    for (x, y) in dense(&g).iter().zip(dense(&back).iter()) {
        assert_eq!(x, y);
    }
}

fn desk_d2() -> GalerkinSystem {
    let psys = mna_assemble(&desk_netlist()).unwrap();
    let spec = BasisSpec::total_degree(psys.distributions().to_vec(), 2).unwrap();
    assemble(&psys, &spec, &default_quadrature(&spec).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn downsize_is_idempotent(kept in prop::collection::btree_set(0usize..10, 1..10)) {
        let g = desk_d2();
        let sel = Selection::new(g.m(), kept.iter().copied()).unwrap();
        let once = downsize(&g, &sel).unwrap();
        let twice = downsize(&once, &sel).unwrap();
        prop_assert_eq!(once.dim(), sel.kept().len() * g.block_dim());
        prop_assert_eq!(once.m(), g.m());
        for (x, y) in dense(&once).iter().zip(dense(&twice).iter()) {
            prop_assert_eq!(x, y);
        }
        let c = once.system().c().to_dense();
        for &i in sel.dropped() {
            prop_assert!(c.row(i).iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn full_selection_is_identity() {
    let g = desk_d2();
    let same = downsize(&g, &Selection::full(g.m())).unwrap();
    for (x, y) in dense(&g).iter().zip(dense(&same).iter()) {
        assert_eq!(x, y);
    }
}
