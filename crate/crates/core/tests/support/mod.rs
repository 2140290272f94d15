//! Oracles shared by the integration tests.

#![allow(dead_code)]

pub mod dd;

use salpeter_core::WellModel;

/// Level energy in double-double arithmetic, `mc²·sqrt(1 + (εn)²)` with
/// `ε = π/ℓ` taken from the model in `f64`.
pub fn energy_dd(model: &WellModel, n: dd::Dd) -> dd::Dd {
    let eps = std::f64::consts::PI / model.reduced_width();
    let x = n * dd::Dd::from(eps);
    (dd::Dd::from(1.0) + x * x).sqrt() * dd::Dd::from(model.rest_energy())
}

/// Second-order central difference of order `order` (1..=4) of the level
/// energy at `n0` with step `h`, evaluated in double-double.
pub fn energy_finite_difference(model: &WellModel, n0: f64, h: f64, order: u32) -> f64 {
    let f = |k: i32| {
        energy_dd(
            model,
            dd::Dd::from(n0) + dd::Dd::from(h) * dd::Dd::from(k as f64),
        )
    };
    let hd = dd::Dd::from(h);
    let r = match order {
        1 => (f(1) - f(-1)) / (dd::Dd::from(2.0) * hd),
        2 => (f(1) - dd::Dd::from(2.0) * f(0) + f(-1)) / (hd * hd),
        3 => {
            (f(2) - dd::Dd::from(2.0) * f(1) + dd::Dd::from(2.0) * f(-1) - f(-2))
                / (dd::Dd::from(2.0) * hd * hd * hd)
        }
        4 => {
            (f(2) - dd::Dd::from(4.0) * f(1) + dd::Dd::from(6.0) * f(0) - dd::Dd::from(4.0) * f(-1)
                + f(-2))
                / (hd * hd * hd * hd)
        }
        _ => panic!("stencil order {order} not available"),
    };
    r.to_f64()
}

/// Finite-difference step for `n0`: a small fraction of the distance to the
/// nearest complex singularity `n = ±i/ε` of the energy.
pub fn fd_step(model: &WellModel, n0: f64) -> f64 {
    let knee = model.reduced_width() / std::f64::consts::PI;
    1e-5 * n0.hypot(knee)
}
