//! Stationary-phase timing.
//!
//! Every series component is a packet whose spectral weight is sharply
//! peaked at some `E1`; expanding its phase to first order about `E1` gives
//! the time its peak passes the channel's reference point. Components whose
//! weight fails the applicability audit are refused.

use crate::audit::{audit, AuditReport, Verdict};
use crate::channel::{term_amplitude, Channel, Transmitted};
use crate::error::{Error, Result};
use crate::model::{spectral_primitives, BarrierSystem, EnergyGrid, PacketSpec, SpectralFunction};
use crate::scattering::resonance_energies;

/// Free-particle group velocity `dE/dk = k/m`.
pub fn group_velocity(energy: f64, sys: &BarrierSystem) -> Result<f64> {
    sys.check_energy(energy)?;
    Ok(sys.wavenumber(energy) / sys.mass())
}

/// Closed-form single-barrier phase time `dφ/dE`.
pub fn phase_time_exact(energy: f64, sys: &BarrierSystem) -> Result<f64> {
    let p = spectral_primitives(energy, sys)?;
    let a = sys.width();
    if a == 0.0 {
        return Ok(0.0);
    }
    let (k, chi) = (p.k, p.chi);
    let x = chi * a;
    let tanh = x.tanh();
    let cosh = x.cosh();
    let sum = k / chi + chi / k;
    let bracket = sum * sum * tanh / x - (k * k / (chi * chi) - 1.0) / (cosh * cosh);
    Ok(sys.mass() * a / (2.0 * k) * bracket / (1.0 + (p.delta_minus * tanh).powi(2)))
}

/// Opaque-limit phase time `2m/(kχ)`, independent of `a` and `L`.
pub fn ors_phase_time(energy: f64, sys: &BarrierSystem) -> Result<f64> {
    sys.check_energy(energy)?;
    Ok(2.0 * sys.mass() / (sys.wavenumber(energy) * sys.decay_constant(energy)))
}

/// Timing constants evaluated at one centre energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTimes {
    pub e1: f64,
    pub velocity: f64,
    /// Single-barrier phase time `dφ/dE(E1)`.
    pub tau: f64,
    pub tau_ors: f64,
}

impl PhaseTimes {
    pub fn at(e1: f64, sys: &BarrierSystem) -> Result<Self> {
        Ok(Self {
            e1,
            velocity: group_velocity(e1, sys)?,
            tau: phase_time_exact(e1, sys)?,
            tau_ors: ors_phase_time(e1, sys)?,
        })
    }
}

/// Strategy for reading a centre energy off a sampled amplitude.
pub trait CenterEstimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(&self, samples: &SpectralFunction) -> f64;
}

/// Largest sample refined by a three-point parabola through its neighbours.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParabolicArgmax;

impl CenterEstimator for ParabolicArgmax {
    fn name(&self) -> &'static str {
        "argmax"
    }

    fn estimate(&self, samples: &SpectralFunction) -> f64 {
        let (i, _) =
            samples
                .values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                    if v > best.1 {
                        (i, v)
                    } else {
                        best
                    }
                });
        if i == 0 || i + 1 == samples.len() {
            return samples.nodes[i];
        }
        parabolic_vertex(
            (samples.nodes[i - 1], samples.values[i - 1]),
            (samples.nodes[i], samples.values[i]),
            (samples.nodes[i + 1], samples.values[i + 1]),
        )
    }
}

/// Vertex of the parabola through three points (abscissae need not be
/// equally spaced). Falls back to the middle point on a degenerate fit.
pub fn parabolic_vertex(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> f64 {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 || !den.is_finite() {
        return x1;
    }
    let x = x1 - 0.5 * num / den;
    if x.is_finite() && x >= x0 && x <= x2 {
        x
    } else {
        x1
    }
}

/// `|f|`-weighted mean of the sampled amplitude.
#[derive(Debug, Clone, Copy, Default)]
pub struct WeightedMean;

impl CenterEstimator for WeightedMean {
    fn name(&self) -> &'static str {
        "mean"
    }

    fn estimate(&self, samples: &SpectralFunction) -> f64 {
        let (mass, first) = samples
            .nodes
            .iter()
            .zip(&samples.values)
            .zip(&samples.weights)
            .fold((0.0, 0.0), |(m, f), ((&e, &v), &w)| {
                (m + w * v.abs(), f + w * v.abs() * e)
            });
        first / mass
    }
}

pub const ESTIMATOR_NAMES: [&str; 2] = ["argmax", "mean"];

pub fn estimator_by_name(name: &str) -> Result<Box<dyn CenterEstimator>> {
    match name {
        "argmax" => Ok(Box::new(ParabolicArgmax)),
        "mean" => Ok(Box::new(WeightedMean)),
        other => Err(Error::Unknown {
            kind: "E1 estimator",
            name: other.to_string(),
        }),
    }
}

/// Centre energy of one series component.
#[derive(Debug, Clone, PartialEq)]
pub struct E1Estimate {
    pub channel: &'static str,
    pub n: usize,
    /// Value from the selected estimator.
    pub energy: f64,
    pub argmax: f64,
    pub mean: f64,
    /// The two estimators differ by more than half the packet spread.
    pub estimators_disagree: bool,
    pub audit: AuditReport,
    pub warnings: Vec<String>,
}

/// Samples `g(E)|term_n(E)|` on the grid.
pub fn sample_term_amplitude(
    channel: &dyn Channel,
    n: usize,
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
) -> Result<SpectralFunction> {
    let values = grid
        .nodes
        .iter()
        .map(|&e| term_amplitude(channel, n, e, sys, spec))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpectralFunction {
        nodes: grid.nodes.clone(),
        values,
        weights: grid.weights.clone(),
    })
}

/// Audited centre energy of an already sampled amplitude.
pub fn estimate_center(
    samples: &SpectralFunction,
    estimator: &dyn CenterEstimator,
) -> Result<(f64, AuditReport)> {
    let report = audit(samples)?;
    if report.verdict != Verdict::SharplyPeaked {
        return Err(Error::SpmInapplicable(format!(
            "amplitude is {} ({} sign changes, {} extrema, mass concentration {:.4})",
            report.verdict, report.sign_changes, report.extrema_count, report.mass_concentration
        )));
    }
    Ok((estimator.estimate(samples), report))
}

pub fn find_e1(
    channel: &dyn Channel,
    n: usize,
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
    estimator: &dyn CenterEstimator,
) -> Result<E1Estimate> {
    let samples = sample_term_amplitude(channel, n, sys, spec, grid)?;
    let (energy, audit) = estimate_center(&samples, estimator).map_err(|e| match e {
        Error::SpmInapplicable(msg) => {
            Error::SpmInapplicable(format!("{} n = {n}: {msg}", channel.name()))
        }
        other => other,
    })?;
    let argmax = ParabolicArgmax.estimate(&samples);
    let mean = WeightedMean.estimate(&samples);
    let estimators_disagree = (argmax - mean).abs() > 0.5 * spec.spread();

    let mut warnings = Vec::new();
    if estimators_disagree {
        warnings.push(format!(
            "argmax E1 = {argmax} and mean E1 = {mean} differ by more than delta/2"
        ));
    }
    if channel.name() == Transmitted.name() && energy <= spec.mean() {
        warnings.push(format!(
            "transmitted E1 = {energy} is not above E0 = {}",
            spec.mean()
        ));
    }
    // 1/r² grows steeply with E for opaque barriers and drags the weight
    // towards the barrier top
    if energy + 3.0 * audit.spread >= sys.height() {
        warnings.push(format!(
            "amplitude is pushed against V0 = {} (E1 = {energy}, spread {})",
            sys.height(),
            audit.spread
        ));
    }
    Ok(E1Estimate {
        channel: channel.name(),
        n,
        energy,
        argmax,
        mean,
        estimators_disagree,
        audit,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry {
    pub n: usize,
    pub time: f64,
}

/// Stationary-phase peak times of one channel at its reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSchedule {
    pub channel: &'static str,
    pub station: f64,
    pub entries: Vec<ScheduleEntry>,
}

impl PeakSchedule {
    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.time).collect()
    }
}

pub fn peak_schedule(
    channel: &dyn Channel,
    n_max: usize,
    sys: &BarrierSystem,
    times: &PhaseTimes,
) -> PeakSchedule {
    let d = sys.separation();
    PeakSchedule {
        channel: channel.name(),
        station: channel.reference_point(sys),
        entries: (0..=n_max)
            .map(|n| ScheduleEntry {
                n,
                time: channel.schedule_time(n, d, times.velocity, times.tau),
            })
            .collect(),
    }
}

/// One schedule row under both centre-energy conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualScheduleEntry {
    pub n: usize,
    /// Centre energy of this component's own amplitude.
    pub e1_term: f64,
    pub time_term: f64,
    /// Time using the shared `E1` of the transmitted n = 0 component.
    pub time_shared: f64,
}

/// Schedule where each component is timed at its own `E1`, next to the
/// single-`E1` schedule.
pub fn dual_schedule(
    channel: &dyn Channel,
    n_max: usize,
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
    estimator: &dyn CenterEstimator,
    shared: &PhaseTimes,
) -> Result<Vec<DualScheduleEntry>> {
    let d = sys.separation();
    (0..=n_max)
        .map(|n| {
            let e1 = find_e1(channel, n, sys, spec, grid, estimator)?;
            let own = PhaseTimes::at(e1.energy, sys)?;
            Ok(DualScheduleEntry {
                n,
                e1_term: e1.energy,
                time_term: channel.schedule_time(n, d, own.velocity, own.tau),
                time_shared: channel.schedule_time(n, d, shared.velocity, shared.tau),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrsRow {
    pub separation: f64,
    /// Opaque-limit prediction; carries no `d`.
    pub tau_ors: f64,
    /// First transmitted peak, `d/v + 2τ`.
    pub rigorous_first_peak: f64,
    pub resonances: Vec<f64>,
}

/// Opaque-limit timing against the component-resolved first-peak time.
#[derive(Debug, Clone, PartialEq)]
pub struct OrsComparison {
    pub times: PhaseTimes,
    pub rows: Vec<OrsRow>,
    /// Least-squares slope of the rigorous first-peak time against `d`.
    pub rigorous_slope: f64,
    /// Spread (max − min) of the opaque-limit column.
    pub ors_spread: f64,
    /// Rigorous time at `d = 0` divided by `τ_ors`.
    pub zero_gap_ratio: f64,
}

pub fn ors_vs_rigorous_report(
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
    separations: &[f64],
) -> Result<OrsComparison> {
    let e1 = find_e1(&Transmitted, 0, sys, spec, grid, &ParabolicArgmax)?;
    let times = PhaseTimes::at(e1.energy, sys)?;
    let rows = separations
        .iter()
        .map(|&d| {
            let s = sys.with_separation(d)?;
            Ok(OrsRow {
                separation: d,
                tau_ors: times.tau_ors,
                rigorous_first_peak: Transmitted.schedule_time(0, d, times.velocity, times.tau),
                resonances: resonance_energies(&s),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.separation).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.rigorous_first_peak).collect();
    let rigorous_slope = least_squares_slope(&xs, &ys);
    let ors_spread = rows
        .iter()
        .map(|r| r.tau_ors)
        .fold(f64::NEG_INFINITY, f64::max)
        - rows.iter().map(|r| r.tau_ors).fold(f64::INFINITY, f64::min);
    let zero_gap_ratio =
        Transmitted.schedule_time(0, 0.0, times.velocity, times.tau) / times.tau_ors;
    Ok(OrsComparison {
        times,
        rows,
        rigorous_slope,
        ors_spread,
        zero_gap_ratio,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
