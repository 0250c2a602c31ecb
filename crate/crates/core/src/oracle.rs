//! Reference implementations kept apart from the closed forms they check.
//!
//! The transfer-matrix route matches `ψ` and `ψ'` at each of the four
//! interfaces with generic 2×2 complex matrices and never touches `r`, `φ`
//! or `Δ±`.

use num_complex::Complex64;

use crate::model::BarrierSystem;
use crate::scattering::StationaryCoefficients;

type Mat2 = [[Complex64; 2]; 2];

/// `[[e^{iqx}, e^{-iqx}], [iq e^{iqx}, -iq e^{-iqx}]]` maps plane-wave
/// amplitudes to `(ψ, ψ')` at `x`.
fn plane_wave_matrix(q: Complex64, x: f64) -> Mat2 {
    let i = Complex64::i();
    let plus = (i * q * x).exp();
    let minus = (-i * q * x).exp();
    [[plus, minus], [i * q * plus, -i * q * minus]]
}

fn inverse(m: &Mat2) -> Mat2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ]
}

fn mul_vec(m: &Mat2, v: [Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// Carries amplitudes from the region right of `x` (wavenumber `q_right`)
/// to the region left of it.
fn cross(x: f64, q_left: Complex64, q_right: Complex64, right: [Complex64; 2]) -> [Complex64; 2] {
    let state = mul_vec(&plane_wave_matrix(q_right, x), right);
    mul_vec(&inverse(&plane_wave_matrix(q_left, x)), state)
}

/// Stationary coefficients by an explicit interface-matching product over
/// {barrier, gap, barrier}.
pub fn transfer_matrix(energy: f64, sys: &BarrierSystem) -> StationaryCoefficients {
    let m = sys.mass();
    let free = Complex64::new((2.0 * m * energy).sqrt(), 0.0);
    let evanescent = Complex64::new(0.0, (2.0 * m * (sys.height() - energy)).sqrt());
    let (a, l) = (sys.width(), sys.offset());

    let outgoing = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let second_barrier = cross(l + a, evanescent, free, outgoing);
    let gap = cross(l, free, evanescent, second_barrier);
    let first_barrier = cross(a, evanescent, free, gap);
    let incident = cross(0.0, free, evanescent, first_barrier);

    let norm = incident[0];
    let k = free.re;
    StationaryCoefficients {
        transmission: norm.inv(),
        reflection: incident[1] / norm,
        cavity_right: gap[0] * Complex64::cis(k * a) / norm,
        cavity_left: gap[1] * Complex64::cis(-k * a) / norm,
    }
}
