//! Phase accumulation for long evolution times.
//!
//! Revival times reach `1e6`-`1e9` natural time units, where `ω·t` loses its
//! low-order bits. The product is formed as an exact two-term sum and reduced
//! against a two-term `2π` before rounding.

const TWO_PI_HI: f64 = std::f64::consts::TAU;
const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;

/// `ω·t` reduced to `[-π, π]`.
pub fn reduced_phase(omega: f64, t: f64) -> f64 {
    let p = omega * t;
    let err = omega.mul_add(t, -p);
    let k = (p / TWO_PI_HI).round();
    let r = (-k).mul_add(TWO_PI_HI, p);
    (-k).mul_add(TWO_PI_LO, r) + err
}
