//! Closed-form physics of a square-root (Salpeter) particle in an infinite well.
//!
//! A [`WellModel`] keeps the user's units. Every formula below is evaluated in
//! the dimensionless combination `x = n·π·ħ/(L·m·c)` (the level momentum in
//! units of `mc`), so the same code is well conditioned from the deep
//! non-relativistic regime (`x ~ 1e-4`) to the ultra-relativistic one
//! (`x ~ 1e4`) regardless of the unit system.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest derivative order accepted by [`energy_derivative`].
pub const MAX_DERIVATIVE_ORDER: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct WellModel {
    mass: f64,
    light_speed: f64,
    hbar: f64,
    well_width: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    mass: f64,
    light_speed: f64,
    hbar: f64,
    well_width: f64,
}

impl TryFrom<RawModel> for WellModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        WellModel::new(raw.mass, raw.light_speed, raw.hbar, raw.well_width)
    }
}

impl From<WellModel> for RawModel {
    fn from(m: WellModel) -> Self {
        RawModel {
            mass: m.mass,
            light_speed: m.light_speed,
            hbar: m.hbar,
            well_width: m.well_width,
        }
    }
}

impl WellModel {
    pub fn new(mass: f64, light_speed: f64, hbar: f64, well_width: f64) -> Result<Self> {
        for (name, v) in [
            ("mass", mass),
            ("light_speed", light_speed),
            ("hbar", hbar),
            ("well_width", well_width),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(WellModel {
            mass,
            light_speed,
            hbar,
            well_width,
        })
    }

    /// `m = c = ħ = 1`, width given in units of `ħ/(mc)`.
    pub fn natural(well_width: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, well_width)
    }

    /// Width given as a multiple of the Compton wavelength `h/(mc)`.
    pub fn with_compton_widths(
        mass: f64,
        light_speed: f64,
        hbar: f64,
        widths: f64,
    ) -> Result<Self> {
        if !(mass > 0.0 && light_speed > 0.0 && hbar > 0.0) {
            return Err(Error::invalid(
                "mass, light_speed and hbar must be positive",
            ));
        }
        Self::new(
            mass,
            light_speed,
            hbar,
            widths * 2.0 * PI * hbar / (mass * light_speed),
        )
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn light_speed(&self) -> f64 {
        self.light_speed
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn well_width(&self) -> f64 {
        self.well_width
    }

    pub fn compton_wavelength(&self) -> f64 {
        2.0 * PI * self.hbar / (self.mass * self.light_speed)
    }

    pub fn rest_energy(&self) -> f64 {
        self.mass * self.light_speed * self.light_speed
    }

    /// `mc`, the momentum scale.
    pub fn momentum_scale(&self) -> f64 {
        self.mass * self.light_speed
    }

    /// `ħ/(mc²)`, the natural time unit.
    pub fn time_scale(&self) -> f64 {
        self.hbar / self.rest_energy()
    }

    /// `ħ/(mc)`, the natural length unit.
    pub fn length_scale(&self) -> f64 {
        self.hbar / self.momentum_scale()
    }

    /// Well width in units of `ħ/(mc)`.
    pub fn reduced_width(&self) -> f64 {
        self.well_width / self.length_scale()
    }

    /// Momentum quantum `ħπ/L`; level `n` carries momentum `n` times this.
    pub fn momentum_quantum(&self) -> f64 {
        self.hbar * PI / self.well_width
    }

    /// Ultra-relativistic level spacing `ħπc/L`.
    pub fn asymptotic_spacing(&self) -> f64 {
        self.momentum_quantum() * self.light_speed
    }

    /// Level momentum in units of `mc` for a (possibly fractional) level index.
    pub fn reduced_momentum(&self, n: f64) -> f64 {
        n * PI / self.reduced_width()
    }

    /// Non-relativistic revival time `4mL²/(πħ)`.
    pub fn nonrelativistic_revival_time(&self) -> f64 {
        4.0 * self.mass * self.well_width * self.well_width / (PI * self.hbar)
    }

    pub fn validate_position(&self, x: f64) -> Result<()> {
        if (0.0..=self.well_width).contains(&x) {
            Ok(())
        } else {
            Err(Error::OutsideWell {
                x,
                width: self.well_width,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct LevelIndex(u64);

impl LevelIndex {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            Err(Error::invalid("level index starts at 1"))
        } else {
            Ok(LevelIndex(n))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<u64> for LevelIndex {
    type Error = Error;
    fn try_from(n: u64) -> Result<Self> {
        LevelIndex::new(n)
    }
}

impl From<LevelIndex> for u64 {
    fn from(n: LevelIndex) -> u64 {
        n.0
    }
}

impl std::fmt::Display for LevelIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevivalTimes {
    pub n0: LevelIndex,
    pub omega0: f64,
    pub t_classical: f64,
    pub t_revival: f64,
    pub t_super: f64,
    pub gamma: f64,
    pub velocity: f64,
}

/// `E_n = mc²·sqrt(1 + n²λ_C²/(2L)²)`.
pub fn energy(model: &WellModel, n: LevelIndex) -> f64 {
    energy_at(model, n.as_f64())
}

/// Energy with `n` treated as a continuous variable.
pub fn energy_at(model: &WellModel, n: f64) -> f64 {
    model.rest_energy() * lorentz_factor_at(model, n)
}

/// `E_n - mc²` without cancellation.
pub fn kinetic_energy(model: &WellModel, n: LevelIndex) -> f64 {
    let x = model.reduced_momentum(n.as_f64());
    let x2 = x * x;
    model.rest_energy() * x2 / (1.0 + (1.0 + x2).sqrt())
}

pub fn lorentz_factor(model: &WellModel, n: LevelIndex) -> f64 {
    lorentz_factor_at(model, n.as_f64())
}

fn lorentz_factor_at(model: &WellModel, n: f64) -> f64 {
    model.reduced_momentum(n).hypot(1.0)
}

/// Group velocity `p_n/(γm)` of level `n`.
pub fn velocity(model: &WellModel, n: LevelIndex) -> f64 {
    let x = model.reduced_momentum(n.as_f64());
    model.light_speed() * x / x.hypot(1.0)
}

/// `E_{n+1} - E_n`, evaluated as a difference of squares over a sum.
pub fn level_spacing_at(model: &WellModel, n: LevelIndex) -> f64 {
    let a = model.asymptotic_spacing();
    let n = n.as_f64();
    let sum = energy_at(model, n + 1.0) + energy_at(model, n);
    a * a * (2.0 * n + 1.0) / sum
}

/// Position eigenfunction `sqrt(2/L)·sin(nπx/L)` on `[0, L]`.
pub fn eigenfunction_position(model: &WellModel, n: LevelIndex, x: f64) -> Result<f64> {
    model.validate_position(x)?;
    let l = model.well_width();
    Ok((2.0 / l).sqrt() * (n.as_f64() * PI * x / l).sin())
}

/// Momentum-space eigenfunction, normalized as the unitary Fourier transform
/// `(2πħ)^{-1/2} ∫ e^{-ipx/ħ} φ_n(x) dx` of [`eigenfunction_position`].
pub fn eigenfunction_momentum(model: &WellModel, n: LevelIndex, p: f64) -> Complex64 {
    let l = model.well_width();
    let hbar = model.hbar();
    let k = n.as_f64() * PI / l;
    let q = p / hbar;
    let sign = if n.get().is_multiple_of(2) { 1.0 } else { -1.0 };
    let norm = (2.0 / l).sqrt() * k * sign / (2.0 * PI * hbar).sqrt();

    // The numerator vanishes at q = ±k; expand it to second order there.
    let threshold = 1e-6 / l;
    for pole in [k, -k] {
        let d = q - pole;
        if d.abs() < threshold {
            let numerator = Complex64::new(-d * l * l / 2.0, -l) * sign;
            return norm * numerator / (d + 2.0 * pole);
        }
    }
    let numerator = Complex64::from_polar(1.0, -q * l) - sign;
    norm * numerator / (q * q - k * k)
}

/// N-th derivative of `E(n)` with respect to the level index, from the
/// closed-form series for `d^N/dx^N (1 + a x²)^{1/2}`:
///
/// `E^(N) = mc²·(2εx)^N/γ^{2N-1} · Π_{j<N}(1/2-j) · Σ_k [N!/(N-2k)!] / [k!·Π_{q=1..k}(1/2-N+q)] · (γ/2x)^{2k}`
///
/// with `x = p_n/(mc)`, `ε = ħπ/(Lmc)` and `γ = E_n/(mc²)`.
pub fn energy_derivative(model: &WellModel, n0: f64, order: u32) -> Result<f64> {
    if order == 0 || order > MAX_DERIVATIVE_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    if !(n0.is_finite() && n0 > 0.0) {
        return Err(Error::invalid(format!(
            "level index must be positive, got {n0}"
        )));
    }
    let big_n = order as i32;
    let eps = PI / model.reduced_width();
    let x = eps * n0;
    let gamma = x.hypot(1.0);

    let falling: f64 = (0..big_n).map(|j| 0.5 - j as f64).product();
    let prefactor = (2.0 * eps * x).powi(big_n) / gamma.powi(2 * big_n - 1) * falling;

    let sum = if x < 1.0 {
        let ratio = (gamma / (2.0 * x)).powi(2);
        series_terms(big_n)
            .iter()
            .enumerate()
            .map(|(k, c)| c.to_f64() * (4.0 * ratio).powi(k as i32))
            .sum()
    } else {
        // Past the knee the terms nearly cancel. With (γ/2x)² = (1 + u)/4,
        // u = 1/x², the series is regrouped exactly into powers of u.
        let u = 1.0 / (x * x);
        let terms = series_terms(big_n);
        let mut sum = 0.0;
        for j in (0..terms.len()).rev() {
            let mut coeff = Ratio::ZERO;
            for (k, c) in terms.iter().enumerate().skip(j) {
                coeff = coeff.add(c.scale(binomial(k as i128, j as i128)));
            }
            sum = sum * u + coeff.to_f64();
        }
        sum
    };
    Ok(model.rest_energy() * prefactor * sum)
}

/// Exact rational, enough for the series coefficients up to the sixth order.
#[derive(Debug, Clone, Copy)]
struct Ratio(i128, i128);

impl Ratio {
    const ZERO: Ratio = Ratio(0, 1);

    fn new(num: i128, den: i128) -> Ratio {
        let g = gcd(num.abs(), den.abs()).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Ratio(s * num / g, s * den / g)
    }

    fn add(self, o: Ratio) -> Ratio {
        Ratio::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }

    fn scale(self, k: i128) -> Ratio {
        Ratio::new(self.0 * k, self.1)
    }

    fn to_f64(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn binomial(n: i128, k: i128) -> i128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `[N!/(N-2k)!] / [k!·Π_{q=1..k}(1/2-N+q)] / 4^k` for `k = 0..=N/2`.
fn series_terms(big_n: i32) -> Vec<Ratio> {
    let n = big_n as i128;
    (0..=n / 2)
        .map(|k| {
            let pairs: i128 = (0..2 * k).map(|r| n - r).product();
            let factorial: i128 = (1..=k).product();
            // 1/2 - N + q = (1 - 2N + 2q)/2, so the 2^k meets the 4^k
            let odd: i128 = (1..=k).map(|q| 1 - 2 * n + 2 * q).product();
            Ratio::new(pairs, factorial * (1 << k) * odd)
        })
        .collect()
}

pub fn revival_times(model: &WellModel, n0: LevelIndex) -> RevivalTimes {
    let n = n0.as_f64();
    let two_pi_hbar = 2.0 * PI * model.hbar();
    // Orders 1..=3 are always within range and n >= 1.
    let d1 = energy_derivative(model, n, 1).expect("order 1");
    let d2 = energy_derivative(model, n, 2).expect("order 2");
    let d3 = energy_derivative(model, n, 3).expect("order 3");
    RevivalTimes {
        n0,
        omega0: energy(model, n0) / model.hbar(),
        t_classical: two_pi_hbar / d1.abs(),
        t_revival: two_pi_hbar / (d2.abs() / 2.0),
        t_super: two_pi_hbar / (d3.abs() / 6.0),
        gamma: lorentz_factor(model, n0),
        velocity: velocity(model, n0),
    }
}

/// Kinetic term of the Hamiltonian as a function of momentum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticForm {
    /// `sqrt(m²c⁴ + p²c²)`.
    #[default]
    Relativistic,
    /// `mc² + p²/2m`, sharing the rest-energy offset.
    NonRelativistic,
}

impl KineticForm {
    pub fn energy(self, model: &WellModel, p: f64) -> f64 {
        let x = p / model.momentum_scale();
        match self {
            KineticForm::Relativistic => model.rest_energy() * x.hypot(1.0),
            KineticForm::NonRelativistic => model.rest_energy() * (1.0 + 0.5 * x * x),
        }
    }
}
