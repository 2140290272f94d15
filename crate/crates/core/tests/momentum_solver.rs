use num_complex::Complex64;

use salpeter_core::model::{eigenfunction_momentum, KineticForm};
use salpeter_core::momentum::{
    build_hamiltonian, residual_integral_equation, residual_of, solve, MomentumGrid,
};
use salpeter_core::{LevelIndex, WellModel};

fn lvl(n: u64) -> LevelIndex {
    LevelIndex::new(n).unwrap()
}

fn l2_gap(a: &[Complex64], b: &[Complex64], dp: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
        * dp.sqrt()
}

/// Rotates `b` by the global phase that best aligns it with `a`.
fn align(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let overlap: Complex64 = b.iter().zip(a).map(|(x, y)| x.conj() * y).sum();
    let rot = overlap / overlap.norm();
    b.iter().map(|z| z * rot).collect()
}

#[test]
fn analytic_eigenfunctions_solve_the_integral_equation() {
    let model = WellModel::natural(10.0).unwrap();
    // same spacing, twice the range: the residual is set by the cutoff at
    // p_max, the quadrature in Δp being converged already
    let fine = MomentumGrid::new(40.0, 4096).unwrap();
    let coarse = MomentumGrid::new(20.0, 2048).unwrap();
    for n in 1..=5 {
        let r = residual_integral_equation(&model, lvl(n), &fine);
        assert!(r < 1e-3, "n={n}: {r}");
        let r_coarse = residual_integral_equation(&model, lvl(n), &coarse);
        assert!(r < 0.5 * r_coarse, "n={n}: {r} vs {r_coarse}");
    }
    // a smooth state that is not an eigenfunction
    let bump: Vec<Complex64> = fine
        .nodes()
        .iter()
        .map(|&p| Complex64::new((-(p - 0.3) * (p - 0.3)).exp(), 0.0))
        .collect();
    assert!(residual_of(&model, &fine, &bump) > 0.1);
}

#[test]
fn hamiltonian_is_hermitian() {
    let model = WellModel::natural(10.0).unwrap();
    let grid = MomentumGrid::new(20.0, 256).unwrap();
    let h = build_hamiltonian(&grid, &model, 1e3, KineticForm::Relativistic).unwrap();
    assert!(h.hermiticity_defect() < 1e-14);
}

fn ground_modulus_gap(kinetic: KineticForm, v0: f64, grid: MomentumGrid) -> f64 {
    let model = WellModel::natural(10.0).unwrap();
    let s = solve(&grid, &model, v0, 1, kinetic).unwrap();
    let dp = grid.spacing();
    let analytic: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&p| eigenfunction_momentum(&model, lvl(1), p).norm())
        .collect();
    let norm = analytic.iter().map(|x| x * x).sum::<f64>().sqrt() * dp.sqrt();
    s.vectors[0]
        .iter()
        .zip(&analytic)
        .map(|(z, a)| (z.norm() - a / norm).powi(2))
        .sum::<f64>()
        .sqrt()
        * dp.sqrt()
}

#[test]
fn schrodinger_ground_vector_matches_the_sine_transform() {
    let grid = MomentumGrid::new(20.0, 2048).unwrap();
    let gap = ground_modulus_gap(KineticForm::NonRelativistic, 1e3, grid);
    assert!(gap < 1e-2, "{gap}");
}

#[test]
fn salpeter_ground_vector_keeps_an_offset_from_the_sine_transform() {
    // The finite-wall Salpeter ground state stays about 4% (L²) away from
    // the transformed sine whatever the wall height or momentum range: the
    // square-root operator restricted to the well does not have sine
    // eigenfunctions. Pinned so that a change in this behaviour is noticed.
    let gaps = [
        ground_modulus_gap(
            KineticForm::Relativistic,
            1e3,
            MomentumGrid::new(20.0, 2048).unwrap(),
        ),
        ground_modulus_gap(
            KineticForm::Relativistic,
            1e3,
            MomentumGrid::new(40.0, 4096).unwrap(),
        ),
        ground_modulus_gap(
            KineticForm::Relativistic,
            1e4,
            MomentumGrid::new(80.0, 4096).unwrap(),
        ),
    ];
    assert!(gaps.iter().all(|&g| (0.02..0.06).contains(&g)), "{gaps:?}");
}

#[test]
fn kinetic_form_changes_levels_more_than_vectors() {
    let model = WellModel::natural(10.0).unwrap();
    let grid = MomentumGrid::new(20.0, 2048).unwrap();
    let rel = solve(&grid, &model, 1e3, 4, KineticForm::Relativistic).unwrap();
    let nr = solve(&grid, &model, 1e3, 4, KineticForm::NonRelativistic).unwrap();
    let dp = grid.spacing();
    for k in 0..4 {
        // parity and node count are shared; the shapes differ by a few percent
        let gap = l2_gap(&rel.vectors[k], &align(&rel.vectors[k], &nr.vectors[k]), dp);
        assert!(gap < 0.1, "level {}: {gap}", k + 1);
        assert!(rel.levels[k] < nr.levels[k]);
    }
}

#[test]
fn eigenpairs_are_consistent() {
    let model = WellModel::natural(10.0).unwrap();
    let grid = MomentumGrid::new(20.0, 1024).unwrap();
    let s = solve(&grid, &model, 1e3, 8, KineticForm::Relativistic).unwrap();
    assert!(s.rayleigh_defect < 1e-10, "{}", s.rayleigh_defect);
    for a in 0..8 {
        for b in 0..8 {
            let ip = s.inner_product(a, b);
            let expected = if a == b { 1.0 } else { 0.0 };
            assert!((ip - expected).norm() < 1e-10, "({a}, {b}): {ip}");
        }
    }
    assert!(s.levels.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn stronger_walls_approach_the_closed_form() {
    let model = WellModel::natural(10.0).unwrap();
    let grid = MomentumGrid::new(20.0, 1024).unwrap();
    let weak = solve(&grid, &model, 1e2, 6, KineticForm::Relativistic).unwrap();
    let strong = solve(&grid, &model, 2e2, 6, KineticForm::Relativistic).unwrap();
    for k in 0..6 {
        let exact = salpeter_core::model::energy(&model, lvl(k as u64 + 1));
        assert!(
            (strong.levels[k] - exact).abs() < (weak.levels[k] - exact).abs(),
            "level {}",
            k + 1
        );
    }
}

#[test]
fn bound_level_count_grows_with_width() {
    let v0 = 5.0;
    let count = |l: f64| {
        let model = WellModel::natural(l).unwrap();
        let grid = MomentumGrid::new(30.0, 1024).unwrap();
        let s = solve(&grid, &model, v0, 60, KineticForm::Relativistic).unwrap();
        s.bound_levels(&model).len()
    };
    let counts: Vec<usize> = [2.0, 4.0, 8.0].into_iter().map(count).collect();
    assert!(counts.windows(2).all(|w| w[0] < w[1]), "{counts:?}");
}
