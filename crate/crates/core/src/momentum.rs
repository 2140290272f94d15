//! Momentum-space eigenproblem of the finite square well.
//!
//! With `V(x) = V0·(1 - χ_[0,L](x))` the stationary equation becomes
//!
//! `E(p)φ(p) + V0·φ(p) - V0/(2πħ) ∫ w(p - p') φ(p') dp' = Eφ(p)`,
//! `w(q) = ∫_0^L e^{-iqx/ħ} dx = ħ(1 - e^{-iqL/ħ})/(iq)`,
//!
//! so the delta-function part of the step transform is a plain diagonal shift.
//! On a uniform grid the kernel depends only on `i - j`. Writing
//! `w(q) = e^{-iqL/2ħ}·2ħ·sin(qL/2ħ)/q`, the phase factors out as a diagonal
//! unitary, leaving a real symmetric matrix that also commutes with `p → -p`.
//! The solver diagonalizes its even and odd blocks separately.

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridState;
use crate::model::{eigenfunction_momentum, KineticForm, LevelIndex, WellModel};

/// Default wall height in units of `mc²`.
pub const DEFAULT_WALL_HEIGHT: f64 = 1e3;
pub const DEFAULT_GRID_SIZE: usize = 2048;

/// Uniform symmetric grid of `M` midpoints `p_i = -p_max + (i + 1/2)Δp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    p_max: f64,
    count: usize,
}

impl MomentumGrid {
    pub fn new(p_max: f64, count: usize) -> Result<Self> {
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(Error::invalid(format!(
                "p_max must be positive, got {p_max}"
            )));
        }
        if count < 2 || !count.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "momentum grid size {count} must be even and >= 2"
            )));
        }
        Ok(MomentumGrid { p_max, count })
    }

    /// `p_max = max(20·n_target·ħ/L, 10·mc)`, lowered if needed so that the
    /// spacing stays below an eighth of the level spacing `πħ/L`.
    pub fn for_levels(model: &WellModel, n_target: usize, count: usize) -> Result<Self> {
        let quantum = model.hbar() / model.well_width();
        let p_max = (20.0 * n_target as f64 * quantum)
            .max(10.0 * model.momentum_scale())
            .min(count as f64 * PI * quantum / 16.0);
        Self::new(p_max, count)
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.p_max / self.count as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.p_max + (i as f64 + 0.5) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.node(i)).collect()
    }
}

/// Fourier transform of the step potential, split into the part proportional
/// to `δ(q)` (folded into the diagonal as `constant`) and the sampled part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialTransform {
    /// `V0`, the coefficient of `sqrt(2πħ)·δ(q)`.
    pub constant: f64,
    /// `V0·(2πħ)^{-1/2} ∫_0^L e^{-iqx/ħ} dx`, entering with a minus sign.
    pub window: Complex64,
}

/// `∫_0^L e^{-iqx/ħ} dx`, with the limit `L` at `q = 0`.
pub fn window_integral(q: f64, width: f64, hbar: f64) -> Complex64 {
    let a = q * width / (2.0 * hbar);
    if a.abs() < 1e-8 {
        return Complex64::new(width * (1.0 - a * a / 6.0), -width * a);
    }
    Complex64::from_polar(2.0 * hbar * a.sin() / q, -a)
}

pub fn potential_fourier(model: &WellModel, q: f64, wall_height: f64) -> PotentialTransform {
    let hbar = model.hbar();
    let w = window_integral(q, model.well_width(), hbar);
    PotentialTransform {
        constant: wall_height,
        window: w * (wall_height / (2.0 * PI * hbar).sqrt()),
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    /// Largest `|H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(h, x)| h * x).sum())
            .collect()
    }
}

fn check_wall_height(wall_height: f64) -> Result<()> {
    if !(wall_height.is_finite() && wall_height >= 0.0) {
        return Err(Error::invalid(format!(
            "wall height must be finite and >= 0, got {wall_height}"
        )));
    }
    Ok(())
}

/// `H_ij = [E(p_i) + V0]δ_ij - V0·Δp/(2πħ)·w(p_i - p_j)`, symmetrized.
pub fn build_hamiltonian(
    grid: &MomentumGrid,
    model: &WellModel,
    wall_height: f64,
    kinetic: KineticForm,
) -> Result<HermitianMatrix> {
    check_wall_height(wall_height)?;
    let m = grid.len();
    let p = grid.nodes();
    let c = wall_height * grid.spacing() / (2.0 * PI * model.hbar());
    let mut data = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        for j in 0..m {
            let mut h = -c * window_integral(p[i] - p[j], model.well_width(), model.hbar());
            if i == j {
                h += kinetic.energy(model, p[i]) + wall_height;
            }
            data[i * m + j] = h;
        }
    }
    let mut h = HermitianMatrix { dim: m, data };
    let scale = h
        .data
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let defect = h.hermiticity_defect();
    if defect > 1e-14 * scale {
        return Err(Error::NotHermitian {
            deviation: defect / scale,
        });
    }
    for i in 0..m {
        for j in i..m {
            let avg = (h.data[i * m + j] + h.data[j * m + i].conj()) * 0.5;
            h.data[i * m + j] = avg;
            h.data[j * m + i] = avg.conj();
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    pub grid: MomentumGrid,
    pub wall_height: f64,
    pub kinetic: KineticForm,
    /// Ascending eigenvalues.
    pub levels: Vec<f64>,
    /// `φ_k(p_i)`, normalized so that `Σ|φ_k(p_i)|²Δp = 1`.
    pub vectors: Vec<Vec<Complex64>>,
    /// Largest `|⟨φ|H|φ⟩ - E|/|E|` over the returned pairs.
    pub rayleigh_defect: f64,
}

impl EigenSpectrum {
    /// Eigenvalues below the continuum threshold `V0 + mc²`.
    pub fn bound_levels(&self, model: &WellModel) -> &[f64] {
        let threshold = self.wall_height + model.rest_energy();
        let count = self.levels.iter().take_while(|&&e| e < threshold).count();
        &self.levels[..count]
    }

    /// `Σ conj(φ_a)φ_b Δp`.
    pub fn inner_product(&self, a: usize, b: usize) -> Complex64 {
        self.vectors[a]
            .iter()
            .zip(&self.vectors[b])
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
            * self.grid.spacing()
    }
}

struct Block {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

fn diagonalize(matrix: Mat<f64>) -> Result<Block> {
    let evd = matrix
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let dim = matrix.nrows();
    let s = evd.S().column_vector();
    let u = evd.U();
    Ok(Block {
        values: (0..dim).map(|k| s[k]).collect(),
        vectors: (0..dim)
            .map(|k| (0..dim).map(|i| u[(i, k)]).collect())
            .collect(),
    })
}

/// Lowest `k_levels` eigenpairs of [`build_hamiltonian`].
pub fn solve(
    grid: &MomentumGrid,
    model: &WellModel,
    wall_height: f64,
    k_levels: usize,
    kinetic: KineticForm,
) -> Result<EigenSpectrum> {
    check_wall_height(wall_height)?;
    let m = grid.len();
    if k_levels == 0 || k_levels > m {
        return Err(Error::invalid(format!(
            "requested {k_levels} levels from a grid of {m}"
        )));
    }
    let half = m / 2;
    let hbar = model.hbar();
    let l = model.well_width();
    let dp = grid.spacing();
    let c = wall_height * dp / (2.0 * PI * hbar);
    // real kernel 2ħ·sin(qL/2ħ)/q on the differences (i - j)·Δp
    let kernel: Vec<f64> = (0..m)
        .map(|d| {
            let q = d as f64 * dp;
            let a = q * l / (2.0 * hbar);
            if a.abs() < 1e-8 {
                l
            } else {
                2.0 * hbar * a.sin() / q
            }
        })
        .collect();
    let p = grid.nodes();
    let diag: Vec<f64> = p
        .iter()
        .map(|&pi| kinetic.energy(model, pi) + wall_height)
        .collect();
    let r = |i: usize, j: usize| {
        let d = i.abs_diff(j);
        let off = -c * kernel[d];
        if i == j {
            diag[i] + off
        } else {
            off
        }
    };

    // p_{M-1-i} = -p_i: split into vectors even and odd under this reflection.
    let even = Mat::<f64>::from_fn(half, half, |i, j| {
        r(half + i, half + j) + r(half + i, half - 1 - j)
    });
    let odd = Mat::<f64>::from_fn(half, half, |i, j| {
        r(half + i, half + j) - r(half + i, half - 1 - j)
    });
    let (even, odd) = rayon::join(|| diagonalize(even), || diagonalize(odd));
    let (even, odd) = (even?, odd?);

    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k_levels);
    let (mut ie, mut io) = (0, 0);
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    while pairs.len() < k_levels {
        let take_even = io >= half || (ie < half && even.values[ie] <= odd.values[io]);
        let (value, v, sign) = if take_even {
            ie += 1;
            (even.values[ie - 1], &even.vectors[ie - 1], 1.0)
        } else {
            io += 1;
            (odd.values[io - 1], &odd.vectors[io - 1], -1.0)
        };
        let mut u = vec![0.0; m];
        for (i, &x) in v.iter().enumerate() {
            u[half + i] = x * inv;
            u[half - 1 - i] = sign * x * inv;
        }
        pairs.push((value, u));
    }

    let scale = 1.0 / dp.sqrt();
    let mut levels = Vec::with_capacity(k_levels);
    let mut vectors = Vec::with_capacity(k_levels);
    for (value, u) in pairs {
        let mut phi: Vec<Complex64> = u
            .iter()
            .zip(&p)
            .map(|(&x, &pi)| Complex64::from_polar(x * scale, -pi * l / (2.0 * hbar)))
            .collect();
        fix_gauge(&mut phi);
        levels.push(value);
        vectors.push(phi);
    }

    let rayleigh_defect = levels
        .iter()
        .zip(&vectors)
        .map(|(&e, v)| {
            (rayleigh_quotient(grid, model, wall_height, kinetic, v) - e).abs()
                / e.abs().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);

    Ok(EigenSpectrum {
        grid: *grid,
        wall_height,
        kinetic,
        levels,
        vectors,
        rayleigh_defect,
    })
}

/// Rotates the largest-modulus component onto the positive real axis.
fn fix_gauge(phi: &mut [Complex64]) {
    let mut best = 0;
    for (i, z) in phi.iter().enumerate() {
        // strict comparison keeps the first of equal-modulus pairs
        if z.norm() > phi[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let n = phi[best].norm();
    if n > 0.0 {
        let rot = phi[best].conj() / n;
        phi.iter_mut().for_each(|z| *z *= rot);
    }
}

/// `⟨φ|H|φ⟩/⟨φ|φ⟩` with the complex kernel applied directly.
pub fn rayleigh_quotient(
    grid: &MomentumGrid,
    model: &WellModel,
    wall_height: f64,
    kinetic: KineticForm,
    phi: &[Complex64],
) -> f64 {
    let m = grid.len();
    let p = grid.nodes();
    let c = wall_height * grid.spacing() / (2.0 * PI * model.hbar());
    // w(q) for q = d·Δp, d in -(M-1)..=(M-1)
    let w: Vec<Complex64> = (0..2 * m - 1)
        .map(|k| {
            window_integral(
                (k as f64 - (m - 1) as f64) * grid.spacing(),
                model.well_width(),
                model.hbar(),
            )
        })
        .collect();
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for i in 0..m {
        let mut hphi = (kinetic.energy(model, p[i]) + wall_height) * phi[i];
        let base = i + m - 1;
        for (j, &x) in phi.iter().enumerate() {
            hphi -= c * w[base - j] * x;
        }
        num += phi[i].conj() * hphi;
        den += phi[i].norm_sqr();
    }
    num.re / den
}

/// Relative L² residual of the infinite-well integral equation
/// `φ(p) = (2πħ)^{-1} ∫ w(p - p') φ(p') dp'` for the analytic eigenfunction,
/// with the kernel's coincidence value `L/(2πħ)` on the diagonal.
pub fn residual_integral_equation(model: &WellModel, n: LevelIndex, grid: &MomentumGrid) -> f64 {
    let phi: Vec<Complex64> = grid
        .nodes()
        .iter()
        .map(|&p| eigenfunction_momentum(model, n, p))
        .collect();
    residual_of(model, grid, &phi)
}

/// Same residual for arbitrary samples `φ(p_i)`.
pub fn residual_of(model: &WellModel, grid: &MomentumGrid, phi: &[Complex64]) -> f64 {
    let m = grid.len();
    let c = grid.spacing() / (2.0 * PI * model.hbar());
    let w: Vec<Complex64> = (0..2 * m - 1)
        .map(|k| {
            window_integral(
                (k as f64 - (m - 1) as f64) * grid.spacing(),
                model.well_width(),
                model.hbar(),
            )
        })
        .collect();
    let mut res = 0.0;
    let mut norm = 0.0;
    for i in 0..m {
        let base = i + m - 1;
        let projected: Complex64 = phi
            .iter()
            .enumerate()
            .map(|(j, &x)| w[base - j] * x)
            .sum::<Complex64>()
            * c;
        res += (phi[i] - projected).norm_sqr();
        norm += phi[i].norm_sqr();
    }
    (res / norm).sqrt()
}

/// `ψ̃(p_i) = (2πħ)^{-1/2} Σ_j ψ(x_j) e^{-ip_i x_j/ħ} Δx` for a state on a
/// grid inside the well (walls carry zero amplitude, so the sum is the
/// trapezoid rule).
pub fn momentum_amplitudes(grid: &MomentumGrid, state: &GridState, hbar: f64) -> Vec<Complex64> {
    let scale = state.spacing() / (2.0 * PI * hbar).sqrt();
    let xs: Vec<f64> = state.grid.positions().collect();
    grid.nodes()
        .par_iter()
        .map(|&p| {
            state
                .samples
                .iter()
                .zip(&xs)
                .map(|(psi, &x)| psi * Complex64::from_polar(1.0, -p * x / hbar))
                .sum::<Complex64>()
                * scale
        })
        .collect()
}

/// `⟨φ_k|ψ⟩` for every numerical eigenvector, with `ψ` given in position space.
pub fn project(spectrum: &EigenSpectrum, model: &WellModel, state: &GridState) -> Vec<Complex64> {
    let psi = momentum_amplitudes(&spectrum.grid, state, model.hbar());
    let dp = spectrum.grid.spacing();
    spectrum
        .vectors
        .iter()
        .map(|phi| {
            phi.iter()
                .zip(&psi)
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
                * dp
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::energy;

    fn lvl(n: u64) -> LevelIndex {
        LevelIndex::new(n).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = MomentumGrid::new(10.0, 8).unwrap();
        assert_eq!(g.spacing(), 2.5);
        assert_eq!(g.node(0), -8.75);
        for i in 0..8 {
            assert_eq!(g.node(i), -g.node(7 - i));
        }
        assert!(MomentumGrid::new(10.0, 7).is_err());
        assert!(MomentumGrid::new(-1.0, 8).is_err());
    }

    #[test]
    fn window_transform_limits_and_symmetry() {
        let m = WellModel::natural(3.0).unwrap();
        let v = potential_fourier(&m, 0.0, 2.0);
        assert!((v.window - Complex64::new(2.0 * 3.0 / (2.0 * PI).sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(v.constant, 2.0);
        for q in [1e-9, 0.3, 2.0, 17.5] {
            let a = potential_fourier(&m, q, 1.0).window;
            let b = potential_fourier(&m, -q, 1.0).window;
            assert!((a - b.conj()).norm() < 1e-15);
            // against the direct antiderivative
            let direct =
                Complex64::new(0.0, 1.0) * (Complex64::from_polar(1.0, -q * 3.0) - 1.0) / q;
            assert!((window_integral(q, 3.0, 1.0) - direct).norm() < 1e-7 * direct.norm().max(1.0));
        }
        assert_eq!(
            potential_fourier(&m, 1.3, 0.0).window,
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn hamiltonian_entries() {
        let m = WellModel::natural(4.0).unwrap();
        let g = MomentumGrid::new(6.0, 64).unwrap();
        let v0 = 50.0;
        let h = build_hamiltonian(&g, &m, v0, KineticForm::Relativistic).unwrap();
        assert_eq!(h.hermiticity_defect(), 0.0);
        let i = 40;
        let p = g.node(i);
        let expected = (1.0 + p * p).sqrt() + v0 - v0 * g.spacing() * 4.0 / (2.0 * PI);
        assert!((h.get(i, i).re - expected).abs() < 1e-12);
        // an empty well leaves only the shifted free dispersion
        let tiny = WellModel::natural(1e-300).unwrap();
        let h0 = build_hamiltonian(&g, &tiny, v0, KineticForm::Relativistic).unwrap();
        for i in 0..64 {
            for j in 0..64 {
                let free = if i == j {
                    (1.0 + g.node(i).powi(2)).sqrt() + v0
                } else {
                    0.0
                };
                assert!((h0.get(i, j) - free).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn parity_reduction_matches_dense_hamiltonian() {
        let m = WellModel::natural(5.0).unwrap();
        let g = MomentumGrid::new(12.0, 96).unwrap();
        let v0 = 40.0;
        let h = build_hamiltonian(&g, &m, v0, KineticForm::Relativistic).unwrap();
        let s = solve(&g, &m, v0, 12, KineticForm::Relativistic).unwrap();
        assert!(s.levels.windows(2).all(|w| w[0] <= w[1]));
        for (e, v) in s.levels.iter().zip(&s.vectors) {
            let hv = h.apply(v);
            let err: f64 = hv
                .iter()
                .zip(v)
                .map(|(a, b)| (a - b * *e).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(err < 1e-9 * e.abs() * norm);
        }
        for a in 0..12 {
            for b in 0..12 {
                let ip = s.inner_product(a, b);
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((ip - target).norm() < 1e-8);
            }
        }
        assert!(s.rayleigh_defect < 1e-10);
    }

    #[test]
    fn gauge_is_fixed() {
        let m = WellModel::natural(5.0).unwrap();
        let g = MomentumGrid::new(12.0, 64).unwrap();
        let s = solve(&g, &m, 40.0, 3, KineticForm::Relativistic).unwrap();
        for v in &s.vectors {
            let big = v.iter().fold(Complex64::new(0.0, 0.0), |b, z| {
                if z.norm() > b.norm() * (1.0 + 1e-12) {
                    *z
                } else {
                    b
                }
            });
            assert!(big.im.abs() < 1e-12 && big.re > 0.0);
        }
    }

    #[test]
    fn finite_well_levels_lie_below_the_box_levels() {
        // ground state energy of any confined state is below ⟨φ₁|E(p)|φ₁⟩,
        // which in turn is below E₁ (Jensen), so levels sit below the box values
        let m = WellModel::natural(30.0).unwrap();
        let g = MomentumGrid::for_levels(&m, 5, 1024).unwrap();
        let s = solve(&g, &m, 1e3, 5, KineticForm::Relativistic).unwrap();
        for (k, e) in s.levels.iter().enumerate() {
            let exact = energy(&m, lvl(k as u64 + 1));
            assert!(
                *e < exact && (exact - e) / exact < 1e-2,
                "n={} {e} {exact}",
                k + 1
            );
        }
        assert_eq!(s.bound_levels(&m).len(), 5);
    }

    #[test]
    fn residual_separates_eigenfunctions_from_other_states() {
        let m = WellModel::natural(10.0).unwrap();
        let g = MomentumGrid::for_levels(&m, 5, 1024).unwrap();
        let r = residual_integral_equation(&m, lvl(2), &g);
        assert!(r < 1e-2, "{r}");
        let gauss: Vec<Complex64> = g
            .nodes()
            .iter()
            .map(|&p| Complex64::new((-p * p).exp(), 0.0))
            .collect();
        assert!(residual_of(&m, &g, &gauss) > 0.1);
    }

    #[test]
    fn projection_of_sine_ground_state() {
        let model = WellModel::natural(10.0).unwrap();
        let grid = MomentumGrid::new(20.0, 2048).unwrap();
        let spectrum = solve(&grid, &model, 1e3, 3, KineticForm::Relativistic).unwrap();
        let x = crate::grid::SpatialGrid::well(&model, 1024).unwrap();
        let samples = x
            .positions()
            .map(|x| {
                let x = x.clamp(0.0, model.well_width());
                Complex64::new(
                    crate::model::eigenfunction_position(&model, lvl(1), x).unwrap(),
                    0.0,
                )
            })
            .collect();
        let state = GridState::new(samples, x, 0.0).unwrap();
        let a = project(&spectrum, &model, &state);
        assert!(a[0].norm_sqr() > 0.99, "{}", a[0].norm_sqr());
        // opposite parity about L/2
        assert!(a[1].norm_sqr() < 1e-10, "{}", a[1].norm_sqr());
        assert!(a.iter().map(|z| z.norm_sqr()).sum::<f64>() <= 1.0 + 1e-6);
    }

    #[test]
    fn default_momentum_range() {
        let m = WellModel::natural(10.0).unwrap();
        assert_eq!(
            MomentumGrid::for_levels(&m, 10, 2048).unwrap().p_max(),
            20.0
        );
        assert_eq!(MomentumGrid::for_levels(&m, 1, 2048).unwrap().p_max(), 10.0);
        // wide well: the spacing limit wins
        let wide = WellModel::natural(700.0).unwrap();
        let g = MomentumGrid::for_levels(&wide, 100, 2048).unwrap();
        assert!((g.spacing() - PI / (8.0 * 700.0)).abs() < 1e-15);
    }
}
