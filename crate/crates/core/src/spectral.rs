//! Exact evolution in the analytic eigenbasis.

use num_complex::Complex64;

use crate::dst::SineTransform;
use crate::error::{Error, Result};
use crate::grid::{GridState, SpatialGrid};
use crate::model::{energy, LevelIndex, WellModel};
use crate::phase::reduced_phase;
use crate::wavepacket::CoefficientVector;

/// `E_n/ħ` for `n = 1..=n_max`.
pub fn angular_frequencies(model: &WellModel, n_max: usize) -> Vec<f64> {
    (1..=n_max as u64)
        .map(|n| energy(model, LevelIndex::new(n).expect("n >= 1")) / model.hbar())
        .collect()
}

fn rotate(amplitudes: &[Complex64], omegas: &[f64], t: f64) -> Vec<Complex64> {
    amplitudes
        .iter()
        .zip(omegas)
        .map(|(a, &w)| a * Complex64::from_polar(1.0, -reduced_phase(w, t)))
        .collect()
}

/// `a_n(t) = a_n·exp(-iE_n t/ħ)`; the time tag advances by `t`.
pub fn evolve(coeffs: &CoefficientVector, t: f64) -> CoefficientVector {
    let omegas = angular_frequencies(coeffs.model(), coeffs.n_max());
    coeffs.with_amplitudes(rotate(coeffs.amplitudes(), &omegas, t), coeffs.time() + t)
}

/// Coefficients with their frequencies cached, for evaluating many times.
#[derive(Debug, Clone)]
pub struct ExactEvolution {
    initial: CoefficientVector,
    omegas: Vec<f64>,
}

impl ExactEvolution {
    pub fn new(initial: CoefficientVector) -> Self {
        let omegas = angular_frequencies(initial.model(), initial.n_max());
        ExactEvolution { initial, omegas }
    }

    pub fn initial(&self) -> &CoefficientVector {
        &self.initial
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Coefficients at absolute time `t`.
    pub fn at(&self, t: f64) -> CoefficientVector {
        let dt = t - self.initial.time();
        self.initial
            .with_amplitudes(rotate(self.initial.amplitudes(), &self.omegas, dt), t)
    }
}

/// Inverse sine transform onto a fixed well grid.
pub struct Reconstructor {
    model: WellModel,
    grid: SpatialGrid,
    transform: SineTransform,
}

impl Reconstructor {
    pub fn new(model: &WellModel, grid: SpatialGrid) -> Result<Self> {
        let intervals = grid.require_well(model)?;
        Ok(Reconstructor {
            model: *model,
            grid,
            transform: SineTransform::new(intervals),
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// Highest level the grid represents without aliasing.
    pub fn level_limit(&self) -> usize {
        self.transform.intervals() - 1
    }

    /// `ψ(x_j) = Σ a_n·sqrt(2/L)·sin(nπx_j/L)`.
    pub fn reconstruct(&self, coeffs: &CoefficientVector) -> Result<GridState> {
        let limit = self.level_limit();
        if coeffs.n_max() > limit {
            return Err(Error::Aliasing {
                requested: coeffs.n_max(),
                limit,
            });
        }
        let k = self.transform.intervals();
        let mut samples = vec![Complex64::new(0.0, 0.0); k + 1];
        self.transform
            .apply(coeffs.amplitudes(), &mut samples[1..k]);
        let scale = (2.0 / self.model.well_width()).sqrt();
        samples.iter_mut().for_each(|z| *z *= scale);
        GridState::new(samples, self.grid, coeffs.time())
    }

    pub fn density(&self, coeffs: &CoefficientVector) -> Result<Vec<f64>> {
        Ok(self.reconstruct(coeffs)?.density())
    }
}

pub fn reconstruct(coeffs: &CoefficientVector, grid: &SpatialGrid) -> Result<GridState> {
    Reconstructor::new(coeffs.model(), *grid)?.reconstruct(coeffs)
}

/// `|ψ(x_j, t)|²` on `grid`.
pub fn density_at(coeffs: &CoefficientVector, grid: &SpatialGrid, t: f64) -> Result<Vec<f64>> {
    Reconstructor::new(coeffs.model(), *grid)?.density(&evolve(coeffs, t))
}

/// Direct summation of the eigenfunction series at one point.
pub fn wavefunction_at(coeffs: &CoefficientVector, x: f64) -> Result<Complex64> {
    let model = coeffs.model();
    model.validate_position(x)?;
    let l = model.well_width();
    let scale = (2.0 / l).sqrt();
    Ok(coeffs
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| a * (scale * ((i + 1) as f64 * std::f64::consts::PI * x / l).sin()))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::l1_distance;
    use crate::model::{eigenfunction_position, revival_times};
    use crate::wavepacket::{
        decompose, dominant_level, gaussian_state, Truncation, WavepacketSpec,
    };

    fn lvl(n: u64) -> LevelIndex {
        LevelIndex::new(n).unwrap()
    }

    fn model() -> WellModel {
        WellModel::natural(7.0).unwrap()
    }

    #[test]
    fn zero_time_is_identity_and_moduli_are_kept() {
        let m = model();
        let a =
            CoefficientVector::new(m, vec![Complex64::new(0.6, 0.1), Complex64::new(-0.2, 0.7)])
                .unwrap();
        assert_eq!(evolve(&a, 0.0).amplitudes(), a.amplitudes());
        for t in [1.0, -3.5, 1e7] {
            let b = evolve(&a, t);
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                assert!((x.norm() - y.norm()).abs() < 1e-15);
            }
            let back = evolve(&b, -t);
            for (x, y) in a.amplitudes().iter().zip(back.amplitudes()) {
                assert!((x - y).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn first_level_reconstructs_sine() {
        let m = model();
        let grid = SpatialGrid::well(&m, 64).unwrap();
        let a = CoefficientVector::eigenstate(m, lvl(1), 10).unwrap();
        let psi = reconstruct(&a, &grid).unwrap();
        for (j, x) in grid.positions().enumerate() {
            let exact = eigenfunction_position(&m, lvl(1), x.min(7.0)).unwrap();
            assert!((psi.samples[j] - exact).norm() < 1e-14);
        }
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let m = model();
        let grid = SpatialGrid::well(&m, 16).unwrap();
        let a = CoefficientVector::eigenstate(m, lvl(1), 16).unwrap();
        assert!(matches!(
            reconstruct(&a, &grid),
            Err(Error::Aliasing { .. })
        ));
    }

    #[test]
    fn gaussian_round_trip_matches_direct_sum() {
        let m = model();
        let spec = WavepacketSpec::from_fractions(&m, 0.5, 0.05, 30.0).unwrap();
        let grid = spec.default_grid(&m).unwrap();
        let psi0 = gaussian_state(&m, &spec, &grid).unwrap();
        let a = decompose(&psi0, &m, Truncation::Auto).unwrap();
        let psi = reconstruct(&a, &grid).unwrap();
        let err = psi.l2_distance(&psi0);
        assert!(err < 1e-8, "{err}");
        assert!((psi.norm_sqr() - a.total_weight()).abs() < 1e-10);
        for j in [1, 17, 200, 311, 400, 512] {
            let x = grid.position(j);
            assert!((wavefunction_at(&a, x).unwrap() - psi.samples[j]).norm() < 1e-10);
        }
    }

    #[test]
    fn stationary_state_density_is_constant() {
        let m = model();
        let grid = SpatialGrid::well(&m, 128).unwrap();
        let a = CoefficientVector::eigenstate(m, lvl(4), 20).unwrap();
        let d0 = density_at(&a, &grid, 0.0).unwrap();
        let d1 = density_at(&a, &grid, 1234.5).unwrap();
        for (x, y) in d0.iter().zip(&d1) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cached_evolution_matches_direct() {
        let m = model();
        let a = CoefficientVector::new(m, vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)])
            .unwrap();
        let ev = ExactEvolution::new(a.clone());
        let x = ev.at(42.0);
        let y = evolve(&a, 42.0);
        assert_eq!(x.amplitudes(), y.amplitudes());
        assert_eq!(x.time(), 42.0);
    }

    #[test]
    fn nonrelativistic_packet_revives() {
        // deep non-relativistic box, packet at rest
        let m = WellModel::with_compton_widths(1.0, 1.0, 1.0, 112.5).unwrap();
        let spec = WavepacketSpec::from_fractions(&m, 0.3, 0.05, 0.0).unwrap();
        let grid = spec.default_grid(&m).unwrap();
        let a = decompose(
            &gaussian_state(&m, &spec, &grid).unwrap(),
            &m,
            Truncation::Auto,
        )
        .unwrap();
        let times = revival_times(&m, dominant_level(&a).unwrap());
        let d0 = density_at(&a, &grid, 0.0).unwrap();
        let d1 = density_at(&a, &grid, times.t_revival).unwrap();
        let dist = l1_distance(&d0, &d1, grid.spacing());
        assert!(dist < 0.05, "L1 at T_rev = {dist}");
    }
}
