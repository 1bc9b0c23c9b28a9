use num_complex::Complex64;
use proptest::prelude::*;

use idslab_core::discretize::{assemble, quadratic_form};
use idslab_core::ids::{finite_volume_ids, floquet_ids, ThetaGrid};
use idslab_core::spectral::{dense_count, dense_eigenvalues, eigen_count};
use idslab_core::{
    mean_field, periodize, sample_field, BoundaryCondition, CoefficientSpec, Disorder,
    FieldOnGrid,
};

fn bernoulli_spec(d: usize, m: usize, v1: f64) -> CoefficientSpec {
    let law = Disorder::bernoulli(0.5, 0.0, v1).unwrap();
    CoefficientSpec::uniform_cell(d, m, 1.0, 1.0, law).unwrap()
}

fn uniform_spec(d: usize, m: usize) -> CoefficientSpec {
    let law = Disorder::uniform(0.0, 2.0).unwrap();
    CoefficientSpec::uniform_cell(d, m, 0.5, 1.0, law).unwrap()
}

fn bc_strategy() -> impl Strategy<Value = BoundaryCondition> {
    prop_oneof![
        Just(BoundaryCondition::Dirichlet),
        Just(BoundaryCondition::Neumann),
        Just(BoundaryCondition::Periodic),
    ]
}

fn periodized(spec: &CoefficientSpec, n: usize, seed: u64) -> FieldOnGrid {
    let (r, _) = sample_field(spec, n, seed, 0).unwrap();
    periodize(&r, spec).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stiffness_form_is_nonnegative(
        seed in any::<u64>(),
        d in 1usize..=2,
        n in 0usize..3,
        bc in bc_strategy(),
        u in prop::collection::vec(-1.0f64..1.0, 400),
    ) {
        let spec = uniform_spec(d, 2);
        let (_, f) = sample_field(&spec, n, seed, 0).unwrap();
        let a = assemble(&f, &bc).unwrap();
        let q = quadratic_form(&a, &u[..a.dim]).unwrap();
        let norm2: f64 = u[..a.dim].iter().map(|x| x * x).sum();
        prop_assert!(q >= -1e-12 * norm2 * a.norm_inf());
        if bc == BoundaryCondition::Dirichlet && norm2 > 1e-6 {
            prop_assert!(q > 0.0);
        }
    }

    #[test]
    fn counts_agree_with_dense(
        seed in any::<u64>(),
        d in 1usize..=2,
        theta in prop::collection::vec(-3.1f64..3.1, 2),
        energies in prop::collection::vec(0.0f64..40.0, 8),
    ) {
        let spec = bernoulli_spec(d, 3, 2.0);
        let f = periodized(&spec, 1, seed);
        let a = assemble(&f, &BoundaryCondition::floquet(&theta[..d])).unwrap();
        let ev = dense_eigenvalues(&a);
        let norm = a.norm_inf();
        for e in energies {
            if ev.iter().any(|l| (l - e).abs() < 1e-6 * norm) {
                continue;
            }
            prop_assert_eq!(eigen_count(&a, e).unwrap(), dense_count(&a, e));
        }
    }

    #[test]
    fn finite_volume_ids_is_monotone(seed in any::<u64>(), d in 1usize..=2, bc in bc_strategy()) {
        let spec = bernoulli_spec(d, 2, 1.0);
        let energies: Vec<f64> = (0..30).map(|k| 0.05 * k as f64 * k as f64).collect();
        let c = finite_volume_ids(&spec, 2, &bc, &energies, 4, seed).unwrap();
        prop_assert!(c.is_monotone());
        prop_assert!(c.values.iter().all(|v| (0.0..=(spec.cell_points() as f64)).contains(v)));
    }

    #[test]
    fn dirichlet_below_neumann(seed in any::<u64>(), d in 1usize..=2, e in 0.01f64..20.0) {
        let spec = uniform_spec(d, 2);
        let (_, f) = sample_field(&spec, 2, seed, 0).unwrap();
        let nd = eigen_count(&assemble(&f, &BoundaryCondition::Dirichlet).unwrap(), e).unwrap();
        let nn = eigen_count(&assemble(&f, &BoundaryCondition::Neumann).unwrap(), e).unwrap();
        prop_assert!(nd <= nn);
    }

    #[test]
    fn constant_coefficient_scales_spectrum(c in 0.1f64..10.0, d in 1usize..=2) {
        let f1 = mean_field(&CoefficientSpec::constant(d, 2, 1.0).unwrap()).unwrap().tile(2).unwrap();
        let fc = mean_field(&CoefficientSpec::constant(d, 2, c).unwrap()).unwrap().tile(2).unwrap();
        let bc = BoundaryCondition::floquet(&[0.3, 1.1][..d]);
        let e1 = dense_eigenvalues(&assemble(&f1, &bc).unwrap());
        let ec = dense_eigenvalues(&assemble(&fc, &bc).unwrap());
        for (a, b) in e1.iter().zip(&ec) {
            prop_assert!((b - c * a).abs() <= 1e-10 * c * a.abs().max(1e-3));
        }
    }

    #[test]
    fn band_functions_are_lipschitz_in_theta(
        seed in any::<u64>(),
        t in -3.0f64..3.0,
        dt in -0.05f64..0.05,
    ) {
        // |d lambda / d theta| <= 2 sqrt(lambda rho_max) / h per unit of phase across a face
        let spec = bernoulli_spec(1, 4, 1.0);
        let f = periodized(&spec, 1, seed);
        let a = dense_eigenvalues(&assemble(&f, &BoundaryCondition::floquet(&[t])).unwrap());
        let b = dense_eigenvalues(&assemble(&f, &BoundaryCondition::floquet(&[t + dt])).unwrap());
        let h = f.h();
        let lmax = a.last().unwrap().max(*b.last().unwrap());
        let bound = 2.0 * (lmax * spec.rho_upper).sqrt() / h * dt.abs() + 1e-9 * lmax;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= bound);
        }
    }
}

#[test]
fn quadratic_form_of_constant_vector() {
    let spec = uniform_spec(2, 2);
    let (_, f) = sample_field(&spec, 1, 9, 0).unwrap();
    let ones = vec![Complex64::new(1.0, 0.0); f.len()];
    let q = quadratic_form(&assemble(&f, &BoundaryCondition::Neumann).unwrap(), &ones).unwrap();
    assert!(q.abs() < 1e-10);
    let q = quadratic_form(&assemble(&f, &BoundaryCondition::Dirichlet).unwrap(), &ones).unwrap();
    assert!(q > 0.0);
}

#[test]
fn lowest_dirichlet_eigenvalue_converges_at_second_order() {
    // the Dirichlet walls sit one spacing beyond the outermost samples, so N
    // points span an interval of length (N + 1) h
    let errors: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&m| {
            let spec = CoefficientSpec::constant(1, m, 1.0).unwrap();
            let (_, f) = sample_field(&spec, 0, 0, 0).unwrap();
            let a = assemble(&f, &BoundaryCondition::Dirichlet).unwrap();
            let len = (a.dim + 1) as f64 * f.h();
            let ev = dense_eigenvalues(&a);
            let exact = (std::f64::consts::PI / len).powi(2);
            ((ev[0] - exact) / exact).abs()
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio / 4.0 - 1.0).abs() < 0.2, "errors {errors:?}");
    }
}

#[test]
fn tiling_trades_cells_for_theta_nodes() {
    // 5 tiled cells with 8 midpoint nodes hit the same quasimomenta as one cell with 40
    let cell = mean_field(&bernoulli_spec(1, 4, 1.0)).unwrap();
    let energies = [0.1, 0.5, 1.0, 3.0, 7.0];
    let tiled = floquet_ids(&cell.tile(2).unwrap(), &energies, ThetaGrid::midpoint(8)).unwrap();
    let single = floquet_ids(&cell, &energies, ThetaGrid::midpoint(40)).unwrap();
    for (a, b) in tiled.values.iter().zip(&single.values) {
        assert!((a - b).abs() < 1e-12, "{:?} vs {:?}", tiled.values, single.values);
    }
}
