//! The four scattering channels and their multiple-reflection series.
//!
//! Each channel is a strategy behind [`Channel`]: it knows where its wave
//! lives, which closed-form coefficient its series sums to, and the phase
//! bookkeeping of each bounce. Every term has the shape
//!
//! ```text
//! unit(n) · |term_n| · exp(i (m_d(n) k d + m_φ(n) φ))
//! ```
//!
//! with integer multipliers `m_d`, `m_φ`; the stationary-phase arrival time
//! of the term is `m_d d / v + m_φ τ`. Channels are looked up by name with
//! [`channel_by_name`].

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    gaussian_weight, spectral_primitives, BarrierSystem, PacketSpec, SpectralPrimitives,
};
use crate::scattering::{coefficients_from, StationaryCoefficients};

/// Spatial regions where the field is modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// `x ≤ 0`, incident plus reflected waves.
    IncidentSide,
    /// `a ≤ x ≤ L`, between the barriers.
    Cavity,
    /// `x ≥ L + a`.
    TransmittedSide,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::IncidentSide => "incident_side",
            Region::Cavity => "cavity",
            Region::TransmittedSide => "transmitted_side",
        }
    }

    pub fn contains(self, x: f64, sys: &BarrierSystem) -> bool {
        match self {
            Region::IncidentSide => x <= 0.0,
            Region::Cavity => x >= sys.width() && x <= sys.offset(),
            Region::TransmittedSide => x >= sys.far_edge(),
        }
    }

    /// Region containing `x`; points strictly inside a barrier slab have none.
    pub fn locate(x: f64, sys: &BarrierSystem) -> Result<Region> {
        [
            Region::IncidentSide,
            Region::Cavity,
            Region::TransmittedSide,
        ]
        .into_iter()
        .find(|r| r.contains(x, sys))
        .ok_or(Error::InsideBarrier(x))
    }

    pub fn by_name(name: &str) -> Result<Region> {
        match name {
            "incident_side" => Ok(Region::IncidentSide),
            "cavity" => Ok(Region::Cavity),
            "transmitted_side" => Ok(Region::TransmittedSide),
            other => Err(Error::Unknown {
                kind: "region",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub trait Channel: Send + Sync {
    fn name(&self) -> &'static str;

    fn region(&self) -> Region;

    /// `+1` for right-going waves `e^{+ik(x − x_ref)}`, `−1` for left-going.
    fn direction(&self) -> f64;

    /// `x_ref` in `c · e^{±ik(x − x_ref)}`; also the station at which the
    /// channel's peak schedule is reported.
    fn reference_point(&self, sys: &BarrierSystem) -> f64;

    /// The closed-form coefficient the series sums to (up to
    /// [`Channel::series_prefactor`]).
    fn closed_form(&self, c: &StationaryCoefficients) -> Complex64;

    /// Factor multiplying the series sum to give [`Channel::closed_form`].
    fn series_prefactor(&self, _p: &SpectralPrimitives, _sys: &BarrierSystem) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    /// Integer multipliers `(m_d, m_φ)` of `kd` and `φ` in the n-th phase.
    fn phase_multipliers(&self, n: usize) -> (f64, f64);

    /// Sign and factors of `i` carried by the n-th term.
    fn term_unit(&self, n: usize) -> Complex64;

    /// `|term_n|`, free of the packet weight.
    fn term_modulus(&self, n: usize, p: &SpectralPrimitives) -> f64;

    /// The n-th term; `series_prefactor · Σ terms` is the closed form.
    fn term(&self, n: usize, p: &SpectralPrimitives, separation: f64) -> Complex64 {
        let (m_d, m_phi) = self.phase_multipliers(n);
        self.term_unit(n)
            * self.term_modulus(n, p)
            * Complex64::cis(m_d * p.k * separation + m_phi * p.phi)
    }

    /// Stationary-phase time of the n-th term at the reference point.
    fn schedule_time(&self, n: usize, separation: f64, velocity: f64, tau: f64) -> f64 {
        let (m_d, m_phi) = self.phase_multipliers(n);
        m_d * separation / velocity + m_phi * tau
    }

    /// `Σ_{n>N} |term_n|`; from `n = 1` on consecutive moduli shrink by
    /// `q = |R0|²` in every channel.
    fn tail_bound(&self, big_n: usize, p: &SpectralPrimitives) -> f64 {
        let q = p.series_ratio();
        self.term_modulus(big_n + 1, p) / (1.0 - q)
    }
}

impl fmt::Debug for dyn Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Channel({})", self.name())
    }
}

fn alternating(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn reflection_power(p: &SpectralPrimitives, exponent: usize) -> f64 {
    p.reflection_modulus().powi(exponent as i32)
}

/// `x > L + a`; sums to `T e^{ik(L+a)}`.
#[derive(Debug, Clone, Copy)]
pub struct Transmitted;

impl Channel for Transmitted {
    fn name(&self) -> &'static str {
        "transmitted"
    }

    fn region(&self) -> Region {
        Region::TransmittedSide
    }

    fn direction(&self) -> f64 {
        1.0
    }

    fn reference_point(&self, sys: &BarrierSystem) -> f64 {
        sys.far_edge()
    }

    fn closed_form(&self, c: &StationaryCoefficients) -> Complex64 {
        c.transmission
    }

    fn series_prefactor(&self, p: &SpectralPrimitives, sys: &BarrierSystem) -> Complex64 {
        Complex64::cis(-p.k * sys.far_edge())
    }

    fn phase_multipliers(&self, n: usize) -> (f64, f64) {
        let n = n as f64;
        (2.0 * n + 1.0, 2.0 * n + 2.0)
    }

    fn term_unit(&self, n: usize) -> Complex64 {
        Complex64::new(alternating(n), 0.0)
    }

    fn term_modulus(&self, n: usize, p: &SpectralPrimitives) -> f64 {
        reflection_power(p, 2 * n) / (p.r * p.r)
    }
}

/// `x < 0`, left-going; sums to `R`. The n = 0 term is the direct echo off
/// the first barrier and carries no `d`.
#[derive(Debug, Clone, Copy)]
pub struct Reflected;

impl Channel for Reflected {
    fn name(&self) -> &'static str {
        "reflected"
    }

    fn region(&self) -> Region {
        Region::IncidentSide
    }

    fn direction(&self) -> f64 {
        -1.0
    }

    fn reference_point(&self, _sys: &BarrierSystem) -> f64 {
        0.0
    }

    fn closed_form(&self, c: &StationaryCoefficients) -> Complex64 {
        c.reflection
    }

    fn phase_multipliers(&self, n: usize) -> (f64, f64) {
        let n = n as f64;
        (2.0 * n, 2.0 * n + 1.0)
    }

    fn term_unit(&self, n: usize) -> Complex64 {
        if n == 0 {
            Complex64::new(0.0, -1.0)
        } else {
            Complex64::new(0.0, alternating(n))
        }
    }

    fn term_modulus(&self, n: usize, p: &SpectralPrimitives) -> f64 {
        if n == 0 {
            p.reflection_modulus()
        } else {
            reflection_power(p, 2 * n - 1) / (p.r * p.r)
        }
    }
}

/// Right-going wave in the cavity; sums to `α`.
#[derive(Debug, Clone, Copy)]
pub struct CavityRight;

impl Channel for CavityRight {
    fn name(&self) -> &'static str {
        "cavity_right"
    }

    fn region(&self) -> Region {
        Region::Cavity
    }

    fn direction(&self) -> f64 {
        1.0
    }

    fn reference_point(&self, sys: &BarrierSystem) -> f64 {
        sys.width()
    }

    fn closed_form(&self, c: &StationaryCoefficients) -> Complex64 {
        c.cavity_right
    }

    fn phase_multipliers(&self, n: usize) -> (f64, f64) {
        let n = n as f64;
        (2.0 * n, 2.0 * n + 1.0)
    }

    fn term_unit(&self, n: usize) -> Complex64 {
        Complex64::new(alternating(n), 0.0)
    }

    fn term_modulus(&self, n: usize, p: &SpectralPrimitives) -> f64 {
        reflection_power(p, 2 * n) / p.r
    }
}

/// Left-going wave in the cavity; sums to `β`.
#[derive(Debug, Clone, Copy)]
pub struct CavityLeft;

impl Channel for CavityLeft {
    fn name(&self) -> &'static str {
        "cavity_left"
    }

    fn region(&self) -> Region {
        Region::Cavity
    }

    fn direction(&self) -> f64 {
        -1.0
    }

    fn reference_point(&self, sys: &BarrierSystem) -> f64 {
        sys.width()
    }

    fn closed_form(&self, c: &StationaryCoefficients) -> Complex64 {
        c.cavity_left
    }

    fn phase_multipliers(&self, n: usize) -> (f64, f64) {
        let n = n as f64;
        (2.0 * n + 2.0, 2.0 * n + 2.0)
    }

    fn term_unit(&self, n: usize) -> Complex64 {
        Complex64::new(0.0, -alternating(n))
    }

    fn term_modulus(&self, n: usize, p: &SpectralPrimitives) -> f64 {
        reflection_power(p, 2 * n + 1) / p.r
    }
}

/// Every registered channel, in a fixed order.
pub static CHANNELS: [&dyn Channel; 4] = [&Transmitted, &Reflected, &CavityRight, &CavityLeft];

pub fn channel_by_name(name: &str) -> Result<&'static dyn Channel> {
    CHANNELS
        .iter()
        .copied()
        .find(|c| c.name() == name)
        .ok_or_else(|| Error::Unknown {
            kind: "channel",
            name: name.to_string(),
        })
}

pub fn channel_names() -> impl Iterator<Item = &'static str> {
    CHANNELS.iter().map(|c| c.name())
}

/// One bounce history of a channel at a single energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTerm {
    pub channel: &'static str,
    pub n: usize,
    pub value: Complex64,
    /// `g(E) · |value|`
    pub amplitude: f64,
}

pub fn series_term(
    channel: &dyn Channel,
    n: usize,
    energy: f64,
    sys: &BarrierSystem,
    spec: &PacketSpec,
) -> Result<SeriesTerm> {
    let p = spectral_primitives(energy, sys)?;
    let value = channel.term(n, &p, sys.separation());
    Ok(SeriesTerm {
        channel: channel.name(),
        n,
        value,
        amplitude: gaussian_weight(energy, spec) * channel.term_modulus(n, &p),
    })
}

/// Spectral amplitude `g(E) |term_n(E)|` of one series component.
pub fn term_amplitude(
    channel: &dyn Channel,
    n: usize,
    energy: f64,
    sys: &BarrierSystem,
    spec: &PacketSpec,
) -> Result<f64> {
    let p = spectral_primitives(energy, sys)?;
    Ok(gaussian_weight(energy, spec) * channel.term_modulus(n, &p))
}

/// `prefactor · Σ_{n=0}^{N} term_n`, summed in index order.
pub fn series_partial_sum(
    channel: &dyn Channel,
    big_n: usize,
    energy: f64,
    sys: &BarrierSystem,
) -> Result<Complex64> {
    let p = spectral_primitives(energy, sys)?;
    let d = sys.separation();
    let sum = (0..=big_n).fold(Complex64::new(0.0, 0.0), |acc, n| {
        acc + channel.term(n, &p, d)
    });
    Ok(channel.series_prefactor(&p, sys) * sum)
}

/// Closed-form coefficient of `channel` at `energy`.
pub fn closed_form(channel: &dyn Channel, energy: f64, sys: &BarrierSystem) -> Result<Complex64> {
    let p = spectral_primitives(energy, sys)?;
    Ok(channel.closed_form(&coefficients_from(&p, sys)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn canonical() -> BarrierSystem {
        BarrierSystem::canonical(8.0).unwrap()
    }

    #[test]
    fn registry_lookup() {
        for name in ["transmitted", "reflected", "cavity_right", "cavity_left"] {
            assert_eq!(channel_by_name(name).unwrap().name(), name);
        }
        assert!(matches!(
            channel_by_name("sideways"),
            Err(Error::Unknown {
                kind: "channel",
                ..
            })
        ));
    }

    #[test]
    fn first_transmitted_term() {
        let sys = canonical();
        let e = 0.43;
        let p = spectral_primitives(e, &sys).unwrap();
        let t = Transmitted.term(0, &p, 8.0);
        assert_abs_diff_eq!(t.norm(), 1.0 / (p.r * p.r), epsilon = 1e-15);
        let expected = Complex64::cis(p.k * 8.0 + 2.0 * p.phi) / (p.r * p.r);
        assert_abs_diff_eq!((t - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn first_reflected_term_is_separation_free() {
        let sys = canonical();
        let p = spectral_primitives(0.43, &sys).unwrap();
        let s = p.delta_plus * p.sinh_chi_a;
        let expected = Complex64::new(0.0, -1.0) * s * Complex64::cis(p.phi) / p.r;
        for d in [0.0, 8.0, 13.0] {
            assert_abs_diff_eq!(
                (Reflected.term(0, &p, d) - expected).norm(),
                0.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn transmitted_amplitude_is_weight_times_t0_r0() {
        let sys = canonical();
        let spec = PacketSpec::new(0.5, 0.1).unwrap();
        let e = 0.55;
        let single = crate::scattering::single_barrier(e, &sys).unwrap();
        for n in [0, 3, 10] {
            let term = series_term(&Transmitted, n, e, &sys, &spec).unwrap();
            let expected = gaussian_weight(e, &spec)
                * single.transmission.norm_sqr()
                * single.reflection.norm().powi(2 * n as i32);
            assert_abs_diff_eq!(
                term.amplitude,
                expected,
                epsilon = 1e-15 * expected.max(1.0)
            );
        }
    }

    #[test]
    fn partial_sums_converge_within_tail_bound() {
        let sys = canonical();
        for channel in CHANNELS {
            for e in [0.2, 0.5, 0.57, 0.8] {
                let p = spectral_primitives(e, &sys).unwrap();
                let exact = closed_form(channel, e, &sys).unwrap();
                for big_n in [0, 5, 20, 200] {
                    let sum = series_partial_sum(channel, big_n, e, &sys).unwrap();
                    let err = (sum - exact).norm();
                    let bound = channel.tail_bound(big_n, &p);
                    assert!(
                        err <= bound * (1.0 + 1e-9) + 1e-13,
                        "{} E={e} N={big_n}: {err} > {bound}",
                        channel.name()
                    );
                }
            }
        }
    }

    #[test]
    fn long_partial_sums_reach_closed_form() {
        // q^{N+1}/(1-q) < 1e-12 at E = 0.2 needs N ≈ 2·10⁴ for a = 5; use a
        // thinner barrier so the check stays fast.
        let sys = BarrierSystem::from_separation(0.5, 1.0, 1.5, 8.0).unwrap();
        let e = 0.57;
        let p = spectral_primitives(e, &sys).unwrap();
        let q = p.series_ratio();
        let big_n = ((1e-12 * (1.0 - q)).ln() / q.ln()).ceil() as usize;
        for channel in CHANNELS {
            let sum = series_partial_sum(channel, big_n, e, &sys).unwrap();
            let exact = closed_form(channel, e, &sys).unwrap();
            assert!((sum - exact).norm() < 1e-11, "{}", channel.name());
        }
    }

    #[test]
    fn transparent_barriers_need_one_term() {
        let sys = BarrierSystem::from_separation(0.5, 1.0, 0.0, 6.0).unwrap();
        let e = 0.3;
        for channel in CHANNELS {
            let sum = series_partial_sum(channel, 0, e, &sys).unwrap();
            let exact = closed_form(channel, e, &sys).unwrap();
            assert_abs_diff_eq!((sum - exact).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn schedule_multipliers() {
        let (v, tau, d) = (1.5, 2.0, 8.0);
        assert_abs_diff_eq!(Transmitted.schedule_time(0, d, v, tau), d / v + 2.0 * tau);
        assert_abs_diff_eq!(Reflected.schedule_time(0, d, v, tau), tau);
        assert_abs_diff_eq!(
            Reflected.schedule_time(2, d, v, tau),
            4.0 * d / v + 5.0 * tau
        );
        assert_abs_diff_eq!(
            CavityRight.schedule_time(1, d, v, tau),
            2.0 * d / v + 3.0 * tau
        );
        assert_abs_diff_eq!(
            CavityLeft.schedule_time(0, d, v, tau),
            2.0 * d / v + 2.0 * tau
        );
    }

    #[test]
    fn regions_and_barriers() {
        let sys = canonical();
        assert_eq!(Region::locate(-1.0, &sys), Ok(Region::IncidentSide));
        assert_eq!(Region::locate(0.0, &sys), Ok(Region::IncidentSide));
        assert_eq!(Region::locate(5.0, &sys), Ok(Region::Cavity));
        assert_eq!(Region::locate(13.0, &sys), Ok(Region::Cavity));
        assert_eq!(Region::locate(18.0, &sys), Ok(Region::TransmittedSide));
        assert_eq!(Region::locate(2.5, &sys), Err(Error::InsideBarrier(2.5)));
        assert_eq!(Region::locate(15.0, &sys), Err(Error::InsideBarrier(15.0)));
    }

    proptest! {
        #[test]
        fn consecutive_terms_decay_geometrically(e in 0.01f64..0.99, n in 1usize..40) {
            let p = spectral_primitives(e, &canonical()).unwrap();
            let q = p.series_ratio();
            prop_assert!(q < 1.0);
            for channel in CHANNELS {
                let ratio = channel.term_modulus(n + 1, &p) / channel.term_modulus(n, &p);
                prop_assert!((ratio - q).abs() <= 1e-12);
            }
            let ratio0 = Transmitted.term_modulus(1, &p) / Transmitted.term_modulus(0, &p);
            prop_assert!((ratio0 - q).abs() <= 1e-12);
        }
    }
}
