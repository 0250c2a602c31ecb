//! Applicability check for the stationary phase method.
//!
//! The method needs a spectral weight that is single-signed with one
//! dominant hump. [`audit`] measures exactly that, and the counterexample
//! functions reproduce the textbook case where ignoring the check sends the
//! method to the wrong answer.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::SpectralFunction;
use crate::quadrature::{GaussLegendrePanels, QuadratureRule};

/// Tuning of the verdict rule. Neither threshold has a canonical value; the
/// defaults are calibrated so a Gaussian passes and sign-alternating or
/// multi-humped functions fail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    /// Local maxima of `|f|` below this fraction of the global maximum are
    /// ignored.
    pub prominence_floor: f64,
    /// Required fraction of `|f|` mass inside `peak ± 3σ̂`.
    pub mass_threshold: f64,
    pub min_samples: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            prominence_floor: 0.01,
            mass_threshold: 0.99,
            min_samples: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    SharplyPeaked,
    NotSharplyPeaked,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::SharplyPeaked => "sharply_peaked",
            Verdict::NotSharplyPeaked => "not_sharply_peaked",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    pub sign_changes: usize,
    /// Local maxima of `|f|` at or above the prominence floor.
    pub extrema_count: usize,
    pub peak_energy: f64,
    /// `|f|`-weighted standard deviation σ̂.
    pub spread: f64,
    /// Fraction of `|f|` mass within `peak ± 3σ̂`; NaN when a sample is not
    /// finite.
    pub mass_concentration: f64,
    pub verdict: Verdict,
}

pub fn audit(samples: &SpectralFunction) -> Result<AuditReport> {
    audit_with(samples, &AuditConfig::default())
}

pub fn audit_with(samples: &SpectralFunction, config: &AuditConfig) -> Result<AuditReport> {
    let n = samples.len();
    if n < config.min_samples {
        return Err(Error::TooFewSamples {
            min: config.min_samples,
            got: n,
        });
    }
    let values = &samples.values;
    if values.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateFunction);
    }

    let mut sign_changes = 0;
    let mut last_sign = 0.0;
    for &v in values {
        if v != 0.0 && !v.is_nan() {
            let s = v.signum();
            if last_sign != 0.0 && s != last_sign {
                sign_changes += 1;
            }
            last_sign = s;
        }
    }

    let magnitude: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let (peak_index, peak_value) =
        magnitude
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
    let floor = config.prominence_floor * peak_value;
    let extrema_count = (0..n)
        .filter(|&i| {
            let v = magnitude[i];
            let left_ok = i == 0 || v > magnitude[i - 1];
            let right_ok = i == n - 1 || v >= magnitude[i + 1];
            left_ok && right_ok && v >= floor
        })
        .count();

    let peak_energy = samples.nodes[peak_index];
    let finite = magnitude.iter().all(|v| v.is_finite());
    let (spread, mass_concentration) = if finite {
        let mut mass = 0.0;
        let mut first = 0.0;
        for ((&e, &w), &m) in samples.nodes.iter().zip(&samples.weights).zip(&magnitude) {
            mass += w * m;
            first += w * m * e;
        }
        let mean = first / mass;
        let second = samples
            .nodes
            .iter()
            .zip(&samples.weights)
            .zip(&magnitude)
            .fold(0.0, |acc, ((&e, &w), &m)| {
                acc + w * m * (e - mean) * (e - mean)
            });
        let spread = (second / mass).sqrt();
        let inside = samples
            .nodes
            .iter()
            .zip(&samples.weights)
            .zip(&magnitude)
            .filter(|((&e, _), _)| (e - peak_energy).abs() <= 3.0 * spread)
            .fold(0.0, |acc, ((_, &w), &m)| acc + w * m);
        (spread, inside / mass)
    } else {
        (f64::NAN, f64::NAN)
    };

    let verdict =
        if sign_changes == 0 && extrema_count == 1 && mass_concentration >= config.mass_threshold {
            Verdict::SharplyPeaked
        } else {
            Verdict::NotSharplyPeaked
        };
    Ok(AuditReport {
        sign_changes,
        extrema_count,
        peak_energy,
        spread,
        mass_concentration,
        verdict,
    })
}

/// `G(E) = e^{−E²} cos(τE)`: Gaussian envelope, sign-alternating interior.
pub fn counterexample_g(energy: f64, tau: f64) -> f64 {
    (-energy * energy).exp() * (tau * energy).cos()
}

/// Half-width of the energy window used for the counterexample quadrature;
/// `e^{−64}` is far below double precision relative to the peak.
pub const COUNTEREXAMPLE_CUTOFF: f64 = 8.0;

const COUNTEREXAMPLE_NODES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleIntegral {
    /// Real part of `∫ G(E) e^{itE} dE` by quadrature on `|E| ≤ 8`.
    pub quadrature: f64,
    /// Imaginary part of the same quadrature; zero by symmetry.
    pub quadrature_imaginary: f64,
    /// `(√π/2)(e^{−(t+τ)²/4} + e^{−(t−τ)²/4})`
    pub closed_form: f64,
}

pub fn counterexample_i(t: f64, tau: f64) -> CounterexampleIntegral {
    let rule = GaussLegendrePanels::default();
    let (nodes, weights) = rule.nodes_weights(
        -COUNTEREXAMPLE_CUTOFF,
        COUNTEREXAMPLE_CUTOFF,
        COUNTEREXAMPLE_NODES,
    );
    let (re, im) = nodes
        .iter()
        .zip(&weights)
        .fold((0.0, 0.0), |(re, im), (&e, &w)| {
            let g = counterexample_g(e, tau);
            let (s, c) = (t * e).sin_cos();
            (re + w * g * c, im + w * g * s)
        });
    CounterexampleIntegral {
        quadrature: re,
        quadrature_imaginary: im,
        closed_form: counterexample_closed_form(t, tau),
    }
}

pub fn counterexample_closed_form(t: f64, tau: f64) -> f64 {
    0.5 * PI.sqrt() * ((-(t + tau).powi(2) / 4.0).exp() + (-(t - tau).powi(2) / 4.0).exp())
}

/// Where a naive stationary-phase reading puts the maximum of `I(t)`: the
/// phase `tE` is stationary only for `t = 0`.
pub fn naive_spm_prediction() -> f64 {
    0.0
}

/// Scan of `I(t)` showing where the integral is actually large.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleDemo {
    pub tau: f64,
    pub naive_prediction: f64,
    /// Local maxima of the quadrature curve, ascending in `t`.
    pub maxima: Vec<f64>,
    pub max_abs_error: f64,
    /// `I(τ) / I(0)` from the closed form.
    pub contrast: f64,
}

pub fn counterexample_demo(tau: f64, t_lo: f64, t_hi: f64, step: f64) -> CounterexampleDemo {
    let count = ((t_hi - t_lo) / step).round() as usize + 1;
    let times: Vec<f64> = (0..count).map(|i| t_lo + i as f64 * step).collect();
    let samples: Vec<CounterexampleIntegral> =
        times.iter().map(|&t| counterexample_i(t, tau)).collect();
    let max_abs_error = samples
        .iter()
        .map(|s| {
            (s.quadrature - s.closed_form)
                .abs()
                .max(s.quadrature_imaginary.abs())
        })
        .fold(0.0, f64::max);
    let curve: Vec<f64> = samples.iter().map(|s| s.quadrature).collect();
    let top = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let maxima = (1..count.saturating_sub(1))
        .filter(|&i| curve[i] > curve[i - 1] && curve[i] >= curve[i + 1] && curve[i] > 0.5 * top)
        .map(|i| times[i])
        .collect();
    CounterexampleDemo {
        tau,
        naive_prediction: naive_spm_prediction(),
        maxima,
        max_abs_error,
        contrast: counterexample_closed_form(tau, tau) / counterexample_closed_form(0.0, tau),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn gaussian() -> SpectralFunction {
        SpectralFunction::uniform(-6.0, 6.0, 401, |e| (-0.5 * e * e).exp())
    }

    #[test]
    fn gaussian_is_sharply_peaked() {
        let r = audit(&gaussian()).unwrap();
        assert_eq!(r.sign_changes, 0);
        assert_eq!(r.extrema_count, 1);
        assert_abs_diff_eq!(r.peak_energy, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.spread, 1.0, epsilon = 1e-6);
        assert!(r.mass_concentration > 0.997);
        assert_eq!(r.verdict, Verdict::SharplyPeaked);
    }

    #[test]
    fn cosine_modulated_gaussian_fails() {
        let f = SpectralFunction::uniform(-4.0, 4.0, 801, |e| counterexample_g(e, 5.0));
        let r = audit(&f).unwrap();
        assert!(r.sign_changes > 0);
        assert!(r.extrema_count > 1);
        assert_eq!(r.verdict, Verdict::NotSharplyPeaked);
    }

    #[test]
    fn two_humps_fail_on_extrema() {
        let f = SpectralFunction::uniform(-8.0, 8.0, 801, |e| {
            (-(e - 3.0).powi(2)).exp() + 0.5 * (-(e + 3.0).powi(2)).exp()
        });
        let r = audit(&f).unwrap();
        assert_eq!(r.sign_changes, 0);
        assert_eq!(r.extrema_count, 2);
        assert_eq!(r.verdict, Verdict::NotSharplyPeaked);
    }

    #[test]
    fn heavy_tails_fail_on_mass() {
        // Lorentzian: one hump, single sign, but mass leaks far past 3σ̂.
        let f = SpectralFunction::uniform(-50.0, 50.0, 2001, |e| 1.0 / (1.0 + e * e));
        let r = audit(&f).unwrap();
        assert_eq!(r.extrema_count, 1);
        assert!(r.mass_concentration < 0.99);
        assert_eq!(r.verdict, Verdict::NotSharplyPeaked);
    }

    #[test]
    fn degenerate_and_short_inputs() {
        let zeros = SpectralFunction::uniform(0.0, 1.0, 100, |_| 0.0);
        assert_eq!(audit(&zeros), Err(Error::DegenerateFunction));
        let short = SpectralFunction::uniform(0.0, 1.0, 10, |e| e);
        assert_eq!(
            audit(&short),
            Err(Error::TooFewSamples { min: 64, got: 10 })
        );
    }

    #[test]
    fn infinite_samples_are_not_sharply_peaked() {
        let f =
            SpectralFunction::uniform(
                0.0,
                1.0,
                101,
                |e| if e == 0.5 { f64::INFINITY } else { 1.0 },
            );
        let r = audit(&f).unwrap();
        assert!(r.mass_concentration.is_nan());
        assert_eq!(r.verdict, Verdict::NotSharplyPeaked);
    }

    #[test]
    fn counterexample_reference_values() {
        assert_eq!(counterexample_g(0.0, 5.0), 1.0);
        assert_relative_eq!(
            counterexample_g(1.3, 0.0),
            (-1.69f64).exp(),
            max_relative = 1e-15
        );
        let at_zero = counterexample_i(0.0, 5.0);
        assert_relative_eq!(
            at_zero.closed_form,
            PI.sqrt() * (-6.25f64).exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(at_zero.closed_form, 3.42e-3, max_relative = 5e-3);
        let at_tau = counterexample_i(5.0, 5.0);
        assert_relative_eq!(
            at_tau.closed_form,
            0.5 * PI.sqrt() * (1.0 + (-25.0f64).exp()),
            max_relative = 1e-14
        );
        assert_abs_diff_eq!(at_tau.closed_form, 0.8862, epsilon = 1e-4);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for i in 0..=240 {
            let t = -12.0 + 0.1 * i as f64;
            let c = counterexample_i(t, 5.0);
            assert_abs_diff_eq!(c.quadrature, c.closed_form, epsilon = 1e-8);
            assert_abs_diff_eq!(c.quadrature_imaginary, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn demo_finds_maxima_at_plus_minus_tau() {
        let demo = counterexample_demo(5.0, -12.0, 12.0, 1e-3);
        assert_eq!(demo.maxima.len(), 2);
        assert_abs_diff_eq!(demo.maxima[0], -5.0, epsilon = 1e-2);
        assert_abs_diff_eq!(demo.maxima[1], 5.0, epsilon = 1e-2);
        assert_eq!(demo.naive_prediction, 0.0);
        assert!(demo.contrast >= (6.25f64).exp() / 2.0);
    }

    #[test]
    fn without_modulation_naive_answer_is_right() {
        let demo = counterexample_demo(0.0, -4.0, 4.0, 1e-2);
        assert_eq!(demo.maxima.len(), 1);
        assert_abs_diff_eq!(demo.maxima[0], demo.naive_prediction, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn verdict_is_scale_invariant(scale in 1e-6f64..1e6, shift in -2.0f64..2.0, tau in 0.0f64..6.0) {
            let f = SpectralFunction::uniform(-6.0, 6.0, 301, |e| counterexample_g(e - shift, tau));
            let a = audit(&f).unwrap();
            let b = audit(&f.scaled(scale)).unwrap();
            prop_assert_eq!(a.verdict, b.verdict);
            prop_assert_eq!(a.sign_changes, b.sign_changes);
            prop_assert_eq!(a.extrema_count, b.extrema_count);
            prop_assert_eq!(a.peak_energy, b.peak_energy);
        }
    }
}
