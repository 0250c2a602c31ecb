//! Exact stationary-state coefficients of the double barrier, the
//! single-barrier coefficients, and the opaque-barrier asymptotic form with
//! its resonance factor.

use num_complex::Complex64;

use crate::error::Result;
use crate::model::{
    gaussian_weight, spectral_primitives, BarrierSystem, PacketSpec, SpectralPrimitives,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Points scanned for sign changes before bisection in [`resonance_energies`].
pub const RESONANCE_SCAN_POINTS: usize = 10_000;

/// Relative size of the resonance denominator below which the asymptotic
/// form is flagged as resonant.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// Coefficients of the stationary state with unit incident wave `e^{ikx}`:
///
/// ```text
/// x < 0      : e^{ikx} + R e^{-ikx}
/// a < x < L  : α e^{ik(x-a)} + β e^{-ik(x-a)}
/// x > L + a  : T e^{ikx}
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryCoefficients {
    pub transmission: Complex64,
    pub reflection: Complex64,
    pub cavity_right: Complex64,
    pub cavity_left: Complex64,
}

impl StationaryCoefficients {
    pub fn flux_sum(&self) -> f64 {
        self.transmission.norm_sqr() + self.reflection.norm_sqr()
    }
}

/// `cosh χa + iΔ₋ sinh χa`
fn barrier_factor(p: &SpectralPrimitives) -> Complex64 {
    Complex64::new(p.cosh_chi_a, p.delta_minus * p.sinh_chi_a)
}

pub fn stationary_coefficients(energy: f64, sys: &BarrierSystem) -> Result<StationaryCoefficients> {
    let p = spectral_primitives(energy, sys)?;
    Ok(coefficients_from(&p, sys))
}

pub(crate) fn coefficients_from(
    p: &SpectralPrimitives,
    sys: &BarrierSystem,
) -> StationaryCoefficients {
    let c = barrier_factor(p);
    let s = p.delta_plus * p.sinh_chi_a;
    let kd = p.k * sys.separation();
    let forward = Complex64::cis(kd);
    let backward = forward.conj();
    let denominator = c * c * backward + s * s * forward;

    let transmission = Complex64::cis(-p.k * sys.far_edge()) / denominator;
    let reflection = -I * s * (c.conj() * forward + c * backward) / denominator;
    let cavity_right = c * backward / denominator;
    let cavity_left = -I * s * forward / denominator;
    StationaryCoefficients {
        transmission,
        reflection,
        cavity_right,
        cavity_left,
    }
}

/// Coefficients of a single barrier of width `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleBarrierCoefficients {
    pub transmission: Complex64,
    pub reflection: Complex64,
}

pub fn single_barrier(energy: f64, sys: &BarrierSystem) -> Result<SingleBarrierCoefficients> {
    let p = spectral_primitives(energy, sys)?;
    let t0 = barrier_factor(&p).inv();
    Ok(SingleBarrierCoefficients {
        transmission: t0,
        reflection: -I * p.delta_plus * p.sinh_chi_a * t0,
    })
}

/// `2kχ cos kd + (χ² − k²) sin kd`, whose zeros are the poles of the
/// resonance factor.
pub fn resonance_denominator(energy: f64, sys: &BarrierSystem) -> Result<f64> {
    sys.check_energy(energy)?;
    Ok(denominator_unchecked(energy, sys))
}

fn denominator_unchecked(energy: f64, sys: &BarrierSystem) -> f64 {
    let k = sys.wavenumber(energy);
    let chi = sys.decay_constant(energy);
    let kd = k * sys.separation();
    2.0 * k * chi * kd.cos() + (chi * chi - k * k) * kd.sin()
}

/// Opaque-barrier limit of the transmission amplitude together with the
/// resonance factor `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrsAsymptotic {
    pub transmission: Complex64,
    /// `A = 2kχ / (2kχ cos kd + (χ² − k²) sin kd)`; real by construction.
    pub resonance_factor: f64,
    /// The denominator of `A` vanished to within [`POLE_TOLERANCE`].
    pub resonant: bool,
}

pub fn ors_asymptotic(energy: f64, sys: &BarrierSystem) -> Result<OrsAsymptotic> {
    let p = spectral_primitives(energy, sys)?;
    let (k, chi) = (p.k, p.chi);
    let denominator = denominator_unchecked(energy, sys);
    let scale = 2.0 * k * chi + (chi * chi - k * k).abs();
    let resonant = denominator.abs() < POLE_TOLERANCE * scale;
    let resonance_factor = 2.0 * k * chi / denominator;

    let ik_minus_chi = Complex64::new(-chi, k);
    let shape = -4.0 * I * k * chi / (ik_minus_chi * ik_minus_chi);
    let transmission = (-2.0 * chi * sys.width()).exp()
        * resonance_factor
        * shape
        * Complex64::cis(-k * sys.far_edge());
    Ok(OrsAsymptotic {
        transmission,
        resonance_factor,
        resonant,
    })
}

/// The spectral weight the opaque-barrier argument treats as a single
/// Gaussian: `g(E) e^{−2χa} A · 4kχ/(k² + χ²)`.
///
/// Signed; at a pole of `A` the value is an IEEE infinity.
pub fn critique_amplitude(energy: f64, sys: &BarrierSystem, spec: &PacketSpec) -> Result<f64> {
    let p = spectral_primitives(energy, sys)?;
    let (k, chi) = (p.k, p.chi);
    let a_factor = 2.0 * k * chi / denominator_unchecked(energy, sys);
    Ok(
        gaussian_weight(energy, spec) * (-2.0 * chi * sys.width()).exp() * a_factor * 4.0 * k * chi
            / (k * k + chi * chi),
    )
}

/// Bisection on a sign-changing bracket down to an absolute width `tol`.
pub(crate) fn bisect<F>(mut lo: f64, mut hi: f64, f: F, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zeros of [`resonance_denominator`] in `(ε, V0 − ε)`, ascending.
///
/// Found by a uniform sign-change scan followed by bisection to
/// `1e-12 · V0`. An empty list is a valid answer (e.g. `d = 0`).
pub fn resonance_energies(sys: &BarrierSystem) -> Vec<f64> {
    scan_roots(sys, |e| denominator_unchecked(e, sys))
}

fn scan_roots<F>(sys: &BarrierSystem, f: F) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    let guard = sys.guard();
    let lo = guard;
    let hi = sys.height() - guard;
    let tol = 1e-12 * sys.height();

    let n = RESONANCE_SCAN_POINTS;
    let h = (hi - lo) / n as f64;
    let mut roots = Vec::new();
    let mut e_prev = lo;
    let mut f_prev = f(lo);
    for i in 1..=n {
        let e = if i == n { hi } else { lo + i as f64 * h };
        let fe = f(e);
        if fe == 0.0 {
            roots.push(e);
        } else if f_prev != 0.0 && f_prev.signum() != fe.signum() {
            roots.push(bisect(e_prev, e, &f, tol));
        }
        e_prev = e;
        f_prev = fe;
    }
    roots
}

/// An energy of perfect transmission and the half width at half maximum of
/// the `|T|²` peak around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionPeak {
    pub energy: f64,
    pub half_width: f64,
}

/// Exact `|T| = 1` energies of the full double barrier, ascending.
///
/// With `θ = kd + φ`, `|T|² = 1 / (1 + 4 r² s² cos² θ)` where
/// `s = Δ₊ sinh χa`, so the peaks are the zeros of `cos θ` and their half
/// width is `1 / (2 r s θ'(E))` with `θ' = d/v + dφ/dE`.
pub fn transmission_peaks(sys: &BarrierSystem) -> Vec<TransmissionPeak> {
    if sys.width() == 0.0 {
        return Vec::new();
    }
    let d = sys.separation();
    let theta = |e: f64| {
        let p = spectral_primitives(e, sys).expect("scan stays inside the tunneling regime");
        p.k * d + p.phi
    };
    scan_roots(sys, |e| theta(e).cos())
        .into_iter()
        .map(|energy| {
            let p = spectral_primitives(energy, sys).expect("root inside the tunneling regime");
            let s = p.delta_plus * p.sinh_chi_a;
            let slope = d * sys.mass() / p.k
                + crate::spm::phase_time_exact(energy, sys)
                    .expect("root inside the tunneling regime");
            TransmissionPeak {
                energy,
                half_width: 1.0 / (2.0 * p.r * s * slope),
            }
        })
        .collect()
}
