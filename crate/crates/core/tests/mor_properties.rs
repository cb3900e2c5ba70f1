use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use sgmor::basis::{default_quadrature, BasisSpec};
use sgmor::circuits::{desk_netlist, lowpass_benchmark, mna_assemble, BENCHMARK_CUTOFF};
use sgmor::descriptor::DescriptorSystem;
use sgmor::error::Error;
use sgmor::galerkin::{assemble, GalerkinSystem};
use sgmor::mor::{
    arnoldi_reduce, deflate, deflated_surrogate, krylov_basis, moment_oracle, reduced_output_surrogate, svd_basis,
    svd_of, transform_coefficients,
};

fn galerkin(net: &sgmor::circuits::CircuitNetlist, d: usize) -> (GalerkinSystem, BasisSpec) {
    let psys = mna_assemble(net).unwrap();
    let spec = BasisSpec::total_degree(psys.distributions().to_vec(), d).unwrap();
    let g = assemble(&psys, &spec, &default_quadrature(&spec).unwrap()).unwrap();
    (g, spec)
}

#[test]
fn scalar_moments_alternate() {
    let one = DMatrix::from_element(1, 1, 1.0);
    let sys = DescriptorSystem::from_dense(&one, &(-&one), &one, &one).unwrap();
    // 1/(s+1) = 1 − s + s² − … at s0 = 0.
    let m = moment_oracle(&sys, 0.0, 4).unwrap();
    for k in 0..4 {
        let want = if k % 2 == 0 { 1.0 } else { -1.0 };
        assert!((m[(0, k)] - want).abs() < 1e-15);
    }
}

#[test]
fn moments_match_finite_differences() {
    let (g, _) = galerkin(&desk_netlist(), 1);
    let s0 = 0.7;
    let m = moment_oracle(g.system(), s0, 2).unwrap();
    let h = 1e-5;
    let plus = g.system().transfer_eval(Complex64::new(s0 + h, 0.0)).unwrap();
    let minus = g.system().transfer_eval(Complex64::new(s0 - h, 0.0)).unwrap();
    for i in 0..g.m() {
        let deriv = (plus[i].re - minus[i].re) / (2.0 * h);
        assert!((deriv - m[(i, 1)]).abs() < 1e-7 * m[(i, 1)].abs().max(1e-3), "output {i}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reduced_system_matches_leading_moments(s0 in 0.3f64..5.0, r in 2usize..12) {
        let (g, _) = galerkin(&desk_netlist(), 2);
        let red = arnoldi_reduce(&g, s0, r).unwrap();
        let r = red.r();
        let full = moment_oracle(g.system(), s0, r).unwrap();
        let reduced = moment_oracle(&red.system, s0, r).unwrap();
        for k in 0..r {
            let scale = full.column(k).norm();
            prop_assert!((full.column(k) - reduced.column(k)).norm() <= 1e-7 * scale, "moment {k}");
        }
    }

    #[test]
    fn deflated_and_reduced_surrogates_agree(
        seed in prop::collection::vec(-1.0f64..1.0, 8),
        t in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let (g, spec) = galerkin(&desk_netlist(), 2);
        let red = arnoldi_reduce(&g, 1.0, 8).unwrap();
        let basis = svd_basis(&red).unwrap();
        let p: Vec<f64> = spec.distributions().iter().zip(&t).map(|(d, u)| d.lower() + u * (d.upper() - d.lower())).collect();
        let a = reduced_output_surrogate(&red, &seed, &spec, &p).unwrap();
        let b = deflated_surrogate(&basis, basis.rank(), &seed, &spec, &p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn svd_factors_reconstruct(entries in prop::collection::vec(-3.0f64..3.0, 24), r in 1usize..6) {
        let c = DMatrix::from_fn(6, r, |i, j| entries[(i * 4 + j) % 24] * 10f64.powi(-(j as i32)));
        let basis = svd_of(&c).unwrap();
        let k = basis.rank();
        let u = &basis.u;
        prop_assert!((u.transpose() * u - DMatrix::<f64>::identity(k, k)).abs().max() < 1e-12);
        let rebuilt = u * DMatrix::from_diagonal(&DVector::from_vec(basis.singular_values.clone())) * &basis.q;
        prop_assert!((rebuilt - &c).abs().max() <= 1e-12 * c.abs().max().max(1.0));
        prop_assert!(basis.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let v = DVector::from_fn(r, |i, _| entries[i] + 0.5);
        let star = transform_coefficients(&basis, v.as_slice()).unwrap();
        // ‖v̄*‖ = ‖C̄ v̄‖ because U has orthonormal columns.
        let lhs = DVector::from_vec(star).norm();
        prop_assert!((lhs - (&c * v).norm()).abs() <= 1e-12 * lhs.max(1.0));
    }
}

#[test]
fn krylov_basis_is_orthonormal_on_the_benchmark() {
    let (g, _) = galerkin(&lowpass_benchmark(), 1);
    let kb = krylov_basis(&g, BENCHMARK_CUTOFF, 40).unwrap();
    let t = &kb.t;
    let dev = (t.transpose() * t - DMatrix::<f64>::identity(t.ncols(), t.ncols())).abs().max();
    assert!(dev < 1e-12, "deviation {dev}");
    // Projection of a sub-basis equals reducing directly to that order.
    let direct = arnoldi_reduce(&g, BENCHMARK_CUTOFF, 20).unwrap();
    let sliced = kb.project(20).unwrap();
    let s = Complex64::new(0.0, 3e4);
    let (a, b) = (direct.system.transfer_eval(s).unwrap(), sliced.system.transfer_eval(s).unwrap());
    assert!((a - &b).norm() <= 1e-10 * b.norm());
}

#[test]
fn kappa_is_a_row_norm_distribution() {
    let (g, _) = galerkin(&desk_netlist(), 2);
    let red = arnoldi_reduce(&g, 1.0, 6).unwrap();
    let basis = svd_basis(&red).unwrap();
    let total: f64 = basis.kappa.iter().map(|k| k * k).sum();
    assert!((total - basis.rank() as f64).abs() < 1e-10);
    assert!(basis.kappa.iter().all(|&k| (0.0..=1.0 + 1e-12).contains(&k)));
}

#[test]
fn deflation_rejects_excessive_threshold() {
    let basis = svd_of(&DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.1, 0.0, 0.0])).unwrap();
    let vbar = vec![vec![1.0, 1.0]; 3];
    assert!(matches!(deflate(&basis, 2.0, &vbar, 0.1), Err(Error::Parameter(_))));
    let d = deflate(&basis, 0.5, &vbar, 0.1).unwrap();
    assert_eq!((d.r_prime, d.r), (1, 2));
    assert!((d.s_next - 0.1).abs() < 1e-15);
    assert!((d.pointwise[0] - 0.1 * 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn singular_shift_is_reported() {
    let one = DMatrix::from_element(1, 1, 1.0);
    let sys = DescriptorSystem::from_dense(&one, &(-&one), &one, &one).unwrap();
    assert!(matches!(moment_oracle(&sys, -1.0, 2), Err(Error::Shift { .. })));
}
