//! Brute-force wave-packet synthesis and peak timing.
//!
//! Fields are built by direct energy quadrature
//! `ψ(x, t) = Σ_j w_j g(E_j) F(E_j, x) e^{−iE_j t}` with no stationary-phase
//! step, so the measured peak times are an independent check on the
//! schedules of [`crate::spm`]. Densities are relative: the incident packet
//! is not normalised.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{Channel, Region, Transmitted, CHANNELS};
use crate::error::{Error, Result};
use crate::model::{
    gaussian_weight, spectral_primitives, BarrierSystem, EnergyGrid, PacketSpec, SpectralPrimitives,
};
use crate::quadrature::{GaussLegendrePanels, QuadratureRule, DEFAULT_PANEL_ORDER};
use crate::scattering::{coefficients_from, transmission_peaks};
use crate::spm::{find_e1, parabolic_vertex, peak_schedule, ParabolicArgmax, PhaseTimes};

/// Which part of a channel's wave to synthesise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// The closed-form coefficient: every bounce at once.
    Closed,
    /// A single bounce history.
    Term(usize),
    /// Bounces `0..=N`.
    PartialSum(usize),
}

/// A field that can be evaluated at a point.
#[derive(Debug, Clone, Copy)]
pub enum Wave {
    /// The physical field of a region (on the incident side, incident plus
    /// reflected).
    Full(Region),
    Incident,
    Channel {
        channel: &'static dyn Channel,
        component: Component,
    },
}

impl Wave {
    pub fn term(channel: &'static dyn Channel, n: usize) -> Self {
        Wave::Channel {
            channel,
            component: Component::Term(n),
        }
    }

    pub fn region(&self) -> Region {
        match self {
            Wave::Full(region) => *region,
            Wave::Incident => Region::IncidentSide,
            Wave::Channel { channel, .. } => channel.region(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Wave::Full(region) => region.name().to_string(),
            Wave::Incident => "incident".to_string(),
            Wave::Channel { channel, component } => match component {
                Component::Closed => channel.name().to_string(),
                Component::Term(n) => format!("{}[{n}]", channel.name()),
                Component::PartialSum(n) => format!("{}[0..={n}]", channel.name()),
            },
        }
    }

    fn check_position(&self, x: f64, sys: &BarrierSystem) -> Result<()> {
        let found = Region::locate(x, sys)?;
        let wanted = self.region();
        // the closed intervals meet only at degenerate geometries, so test
        // membership rather than equality with the located region
        if found == wanted || wanted.contains(x, sys) {
            Ok(())
        } else {
            Err(Error::RegionMismatch {
                component: self.label(),
                region: wanted.name(),
            })
        }
    }
}

/// `e^{i·dir·k(x − x_ref)}` times the channel's coefficient with the series
/// prefactor removed, so that term `n` is its own bounce packet.
fn channel_field(
    channel: &dyn Channel,
    component: Component,
    p: &SpectralPrimitives,
    x: f64,
    sys: &BarrierSystem,
) -> Complex64 {
    let d = sys.separation();
    let coefficient = match component {
        Component::Closed => {
            channel.closed_form(&coefficients_from(p, sys)) / channel.series_prefactor(p, sys)
        }
        Component::Term(n) => channel.term(n, p, d),
        Component::PartialSum(big_n) => (0..=big_n).fold(Complex64::new(0.0, 0.0), |acc, n| {
            acc + channel.term(n, p, d)
        }),
    };
    coefficient * Complex64::cis(channel.direction() * p.k * (x - channel.reference_point(sys)))
}

/// Stationary wave of `wave` at one energy and position.
fn stationary_field(wave: &Wave, p: &SpectralPrimitives, x: f64, sys: &BarrierSystem) -> Complex64 {
    let incident = || Complex64::cis(p.k * x);
    match wave {
        Wave::Incident => incident(),
        Wave::Channel { channel, component } => channel_field(*channel, *component, p, x, sys),
        Wave::Full(region) => {
            let waves = CHANNELS
                .iter()
                .filter(|c| c.region() == *region)
                .fold(Complex64::new(0.0, 0.0), |acc, c| {
                    acc + channel_field(*c, Component::Closed, p, x, sys)
                });
            if *region == Region::IncidentSide {
                incident() + waves
            } else {
                waves
            }
        }
    }
}

/// Weighted spectral amplitudes `w_j g(E_j) F(E_j, x)`; the field at time
/// `t` is `Σ_j a_j e^{−iE_j t}`.
pub fn spectral_amplitudes(
    wave: &Wave,
    x: f64,
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
) -> Result<Vec<Complex64>> {
    wave.check_position(x, sys)?;
    grid.nodes
        .iter()
        .zip(&grid.weights)
        .map(|(&e, &w)| {
            let p = spectral_primitives(e, sys)?;
            Ok(w * gaussian_weight(e, spec) * stationary_field(wave, &p, x, sys))
        })
        .collect()
}

/// Geometric ratio of panel sizes moving away from a transmission peak.
const GRADING_RATIO: f64 = 2.0;

/// Re-panels `grid` so that every transmission peak inside it is resolved.
///
/// Closed-form fields inherit the `|T|²` Lorentzians of the double
/// barrier, whose half widths shrink like `e^{−2χa}` and fall far below any
/// practical uniform spacing at low energy. Around each peak, panels start
/// at a quarter half width and grow geometrically until they reach the base
/// panel size. Single-bounce terms carry no such poles and do not need this.
pub fn resonance_refined_grid(grid: &EnergyGrid, sys: &BarrierSystem) -> EnergyGrid {
    let order = DEFAULT_PANEL_ORDER;
    let panels = grid.len().div_ceil(order).max(1);
    let (lo, hi) = (grid.lo, grid.hi);
    let base = (hi - lo) / panels as f64;
    let mut edges: Vec<f64> = (0..=panels).map(|i| lo + i as f64 * base).collect();
    edges[panels] = hi;
    for peak in transmission_peaks(sys) {
        if peak.energy <= lo || peak.energy >= hi {
            continue;
        }
        edges.push(peak.energy);
        let mut h = 0.25 * peak.half_width;
        while h < base {
            for e in [peak.energy - h, peak.energy + h] {
                if e > lo && e < hi {
                    edges.push(e);
                }
            }
            h *= GRADING_RATIO;
        }
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let rule = GaussLegendrePanels::new(order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in edges.windows(2) {
        let (x, wt) = rule.nodes_weights(w[0], w[1], order);
        nodes.extend(x);
        weights.extend(wt);
    }
    EnergyGrid {
        nodes,
        weights,
        lo,
        hi,
    }
}

fn field_at(amplitudes: &[Complex64], energies: &[f64], t: f64) -> Complex64 {
    amplitudes
        .iter()
        .zip(energies)
        .fold(Complex64::new(0.0, 0.0), |acc, (a, &e)| {
            acc + a * Complex64::cis(-e * t)
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: f64,
    pub t: f64,
    pub psi: Complex64,
    /// `|psi|²`
    pub density: f64,
}

impl FieldSample {
    fn new(x: f64, t: f64, psi: Complex64) -> Self {
        Self {
            x,
            t,
            psi,
            density: psi.norm_sqr(),
        }
    }
}

/// Physical field of `region` at `(x, t)`.
pub fn synthesize(
    region: Region,
    x: f64,
    t: f64,
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
) -> Result<FieldSample> {
    synthesize_wave(&Wave::Full(region), x, t, sys, spec, grid)
}

pub fn synthesize_wave(
    wave: &Wave,
    x: f64,
    t: f64,
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
) -> Result<FieldSample> {
    let amplitudes = spectral_amplitudes(wave, x, sys, spec, grid)?;
    Ok(FieldSample::new(
        x,
        t,
        field_at(&amplitudes, &grid.nodes, t),
    ))
}

/// Field samples at a fixed station, one per time, in input order.
pub fn field_timeseries(
    wave: &Wave,
    x: f64,
    times: &[f64],
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
) -> Result<Vec<FieldSample>> {
    let amplitudes = spectral_amplitudes(wave, x, sys, spec, grid)?;
    Ok(times
        .par_iter()
        .map(|&t| FieldSample::new(x, t, field_at(&amplitudes, &grid.nodes, t)))
        .collect())
}

/// Density read out at a fixed station.
pub fn density_timeseries(
    wave: &Wave,
    x: f64,
    times: &[f64],
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
) -> Result<Vec<f64>> {
    Ok(field_timeseries(wave, x, times, sys, spec, grid)?
        .into_iter()
        .map(|s| s.density)
        .collect())
}

/// Density snapshot over positions at one time; each position must lie in
/// the wave's region.
pub fn density_profile(
    wave: &Wave,
    xs: &[f64],
    t: f64,
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
) -> Result<Vec<FieldSample>> {
    xs.par_iter()
        .map(|&x| synthesize_wave(wave, x, t, sys, spec, grid))
        .collect()
}

/// Uniform time grid `start + i·step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

/// Default time step as a fraction of the phase time.
pub const DEFAULT_STEP_FRACTION: f64 = 1.0 / 50.0;

/// Margin, in phase times, left after the last scheduled peak.
pub const SCHEDULE_MARGIN: f64 = 5.0;

/// Minimum lead, in phase times, kept before the first scheduled peak.
pub const LEAD_MARGIN: f64 = 2.5;

impl TimeGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid("t_step", format!("must be > 0, got {step}")));
        }
        if !(start.is_finite() && stop.is_finite() && stop >= start) {
            return Err(Error::invalid(
                "t_max",
                format!("need t_min <= t_max, got [{start}, {stop}]"),
            ));
        }
        let len = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok(Self { start, step, len })
    }

    /// Covers the channel's schedule up to `n = 3` plus five phase times,
    /// with step `τ·fraction`. Starts at 0 unless the first peak is
    /// scheduled within [`LEAD_MARGIN`] phase times of it, in which case the
    /// grid is extended back to give that peak a left flank.
    pub fn for_schedule(
        channel: &dyn Channel,
        sys: &BarrierSystem,
        times: &PhaseTimes,
        step_fraction: f64,
    ) -> Result<Self> {
        let schedule = peak_schedule(channel, 3, sys, times).times();
        let start = (schedule[0] - LEAD_MARGIN * times.tau).min(0.0);
        let stop = schedule[3] + SCHEDULE_MARGIN * times.tau;
        Self::new(start, stop, times.tau * step_fraction)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len)
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }

    pub fn stop(&self) -> f64 {
        self.start + (self.len.saturating_sub(1)) as f64 * self.step
    }
}

/// A local maximum of a station readout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakEvent {
    pub time: f64,
    pub height: f64,
    pub prominence: f64,
    /// Schedule index this peak was matched to.
    pub n_assigned: Option<usize>,
}

/// Local maxima whose topographic prominence is at least
/// `prominence × max(series)`, with times and heights refined by a
/// parabola through the sample and its neighbours. Sorted by time.
pub fn detect_peaks(series: &[f64], times: &[f64], prominence: f64) -> Result<Vec<PeakEvent>> {
    if !(prominence > 0.0 && prominence < 1.0) {
        return Err(Error::invalid(
            "prominence",
            format!("must lie in (0, 1), got {prominence}"),
        ));
    }
    if series.len() != times.len() {
        return Err(Error::invalid(
            "t_grid",
            format!("{} samples for {} times", series.len(), times.len()),
        ));
    }
    if let Some(bad) = series.iter().find(|v| !v.is_finite()) {
        return Err(Error::Detection(format!("non-finite sample {bad}")));
    }
    let top = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if series.len() < 3 || top.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Ok(Vec::new());
    }
    let threshold = prominence * top;

    let mut events = Vec::new();
    let mut i = 1;
    while i + 1 < series.len() {
        if series[i] > series[i - 1] {
            // step across a plateau to its right edge
            let mut j = i;
            while j + 1 < series.len() && series[j + 1] == series[i] {
                j += 1;
            }
            if j + 1 < series.len() && series[j + 1] < series[i] {
                let peak = (i + j) / 2;
                let p = topographic_prominence(series, i, j);
                if p >= threshold {
                    let (time, height) = refine(series, times, peak);
                    events.push(PeakEvent {
                        time,
                        height,
                        prominence: p,
                        n_assigned: None,
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    Ok(events)
}

/// Height above the higher of the two lowest points reached before the
/// series climbs above the plateau `[left, right]` on either side.
fn topographic_prominence(series: &[f64], left: usize, right: usize) -> f64 {
    let h = series[left];
    let left_base = series[..left]
        .iter()
        .rev()
        .take_while(|&&v| v <= h)
        .copied()
        .fold(h, f64::min);
    let right_base = series[right + 1..]
        .iter()
        .take_while(|&&v| v <= h)
        .copied()
        .fold(h, f64::min);
    h - left_base.max(right_base)
}

fn refine(series: &[f64], times: &[f64], i: usize) -> (f64, f64) {
    let (x0, x1, x2) = (times[i - 1], times[i], times[i + 1]);
    let (y0, y1, y2) = (series[i - 1], series[i], series[i + 1]);
    let t = parabolic_vertex((x0, y0), (x1, y1), (x2, y2));
    // Lagrange form evaluated at the vertex
    let l0 = (t - x1) * (t - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (t - x0) * (t - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (t - x0) * (t - x1) / ((x2 - x0) * (x2 - x1));
    let h = y0 * l0 + y1 * l1 + y2 * l2;
    (t, if h.is_finite() { h.max(y1) } else { y1 })
}

/// Matches each peak to the nearest schedule entry. A peak farther than half
/// the gap to that entry's nearest neighbour, or one losing the entry to a
/// closer peak, stays unassigned.
pub fn assign_branches(events: &mut [PeakEvent], schedule: &[f64]) {
    for e in events.iter_mut() {
        e.n_assigned = None;
    }
    if schedule.is_empty() {
        return;
    }
    let half_gap = |j: usize| {
        let left = j.checked_sub(1).map(|i| schedule[j] - schedule[i]);
        let right = schedule.get(j + 1).map(|s| s - schedule[j]);
        match (left, right) {
            (Some(l), Some(r)) => 0.5 * l.min(r),
            (Some(g), None) | (None, Some(g)) => 0.5 * g,
            (None, None) => f64::INFINITY,
        }
    };
    let mut claimed: Vec<Option<(usize, f64)>> = vec![None; schedule.len()];
    for (i, e) in events.iter().enumerate() {
        let (j, dist) = schedule
            .iter()
            .enumerate()
            .map(|(j, s)| (j, (e.time - s).abs()))
            .fold(
                (0, f64::INFINITY),
                |best, c| if c.1 < best.1 { c } else { best },
            );
        if dist >= half_gap(j) {
            continue;
        }
        match claimed[j] {
            Some((_, d)) if d <= dist => {}
            _ => claimed[j] = Some((i, dist)),
        }
    }
    for (j, claim) in claimed.into_iter().enumerate() {
        if let Some((i, _)) = claim {
            events[i].n_assigned = Some(j);
        }
    }
}

/// Full width at half maximum of the highest bump, by linear interpolation
/// of the half-height crossings. `None` if the bump touches an end.
pub fn full_width_half_max(series: &[f64], times: &[f64]) -> Option<f64> {
    let (peak, &top) = series
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = 0.5 * top;
    let cross = |i: usize, j: usize| {
        let (a, b) = (series[i], series[j]);
        times[i] + (half - a) / (b - a) * (times[j] - times[i])
    };
    let left = (1..=peak).rev().find(|&i| series[i - 1] < half)?;
    let right = (peak..series.len() - 1).find(|&i| series[i + 1] < half)?;
    Some(cross(right, right + 1) - cross(left - 1, left))
}

/// Peak detection settings for arrival measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionOptions {
    pub prominence: f64,
    /// Time step as a fraction of the phase time.
    pub step_fraction: f64,
}

impl Default for DetectionOptions {
    fn default() -> Self {
        Self {
            prominence: 0.05,
            step_fraction: DEFAULT_STEP_FRACTION,
        }
    }
}

/// Dominant peak of one bounce packet, read out at the channel's reference
/// point.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPeak {
    pub channel: &'static str,
    pub n: usize,
    pub station: f64,
    /// Schedule time with the shared phase times.
    pub predicted: f64,
    /// Centre energy of this term's own amplitude.
    pub own_e1: f64,
    /// Schedule time with phase times taken at `own_e1`.
    pub predicted_own: f64,
    pub measured: Option<PeakEvent>,
}

pub fn measure_component_peak(
    channel: &'static dyn Channel,
    n: usize,
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
    times: &PhaseTimes,
    opts: &DetectionOptions,
) -> Result<ComponentPeak> {
    let schedule = peak_schedule(channel, n.max(3), sys, times);
    let predicted = schedule.entries[n].time;
    let base = TimeGrid::for_schedule(channel, sys, times, opts.step_fraction)?;
    // make sure late terms still fall inside the window
    let grid_t = if predicted + SCHEDULE_MARGIN * times.tau > base.stop() {
        TimeGrid::new(
            base.start,
            predicted + SCHEDULE_MARGIN * times.tau,
            base.step,
        )?
    } else {
        base
    };
    let ts = grid_t.times();
    let station = schedule.station;
    let series = density_timeseries(&Wave::term(channel, n), station, &ts, sys, spec, grid)?;
    let measured = detect_peaks(&series, &ts, opts.prominence)?
        .into_iter()
        .max_by(|a, b| a.height.total_cmp(&b.height))
        .map(|mut e| {
            e.n_assigned = Some(n);
            e
        });
    let own_e1 = find_e1(channel, n, sys, spec, grid, &ParabolicArgmax)?.energy;
    let own = PhaseTimes::at(own_e1, sys)?;
    Ok(ComponentPeak {
        channel: channel.name(),
        n,
        station,
        predicted,
        own_e1,
        predicted_own: channel.schedule_time(n, sys.separation(), own.velocity, own.tau),
        measured,
    })
}

/// Whether adjacent transmitted bounce packets overlap at the far edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeDiagnostic {
    pub separation: f64,
    /// FWHM of the n = 0 packet's density at `x = L + a`.
    pub pulse_width: f64,
    /// `d / v`
    pub transit_time: f64,
    /// Scheduled gap between the n = 0 and n = 1 peaks.
    pub spacing: f64,
    /// `pulse_width ≥ d/v`.
    pub merged: bool,
    /// Peaks of the full transmitted density, with branch assignment.
    pub full_wave_peaks: Vec<PeakEvent>,
    pub predicted: Vec<f64>,
}

pub fn merge_diagnostic(
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
    times: &PhaseTimes,
    opts: &DetectionOptions,
) -> Result<MergeDiagnostic> {
    let tg = TimeGrid::for_schedule(&Transmitted, sys, times, opts.step_fraction)?;
    let ts = tg.times();
    let x = sys.far_edge();
    let single = density_timeseries(&Wave::term(&Transmitted, 0), x, &ts, sys, spec, grid)?;
    let pulse_width = full_width_half_max(&single, &ts).unwrap_or(f64::INFINITY);
    let refined = resonance_refined_grid(grid, sys);
    let full = density_timeseries(
        &Wave::Full(Region::TransmittedSide),
        x,
        &ts,
        sys,
        spec,
        &refined,
    )?;
    let predicted = peak_schedule(&Transmitted, 3, sys, times).times();
    let mut full_wave_peaks = detect_peaks(&full, &ts, opts.prominence)?;
    assign_branches(&mut full_wave_peaks, &predicted);
    let transit_time = sys.separation() / times.velocity;
    Ok(MergeDiagnostic {
        separation: sys.separation(),
        pulse_width,
        transit_time,
        spacing: predicted[1] - predicted[0],
        merged: pulse_width >= transit_time,
        full_wave_peaks,
        predicted,
    })
}

/// How arrival times are read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Readout {
    /// Each transmitted bounce packet is synthesised and timed on its own.
    #[default]
    Components,
    /// Peaks of the full transmitted density, matched to the schedule.
    FullWave,
}

impl Readout {
    pub fn name(self) -> &'static str {
        match self {
            Readout::Components => "components",
            Readout::FullWave => "full",
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "components" => Ok(Readout::Components),
            "full" => Ok(Readout::FullWave),
            other => Err(Error::Unknown {
                kind: "readout",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalRow {
    pub separation: f64,
    /// Scheduled `n = 0, 1` arrival times at `x = L + a`.
    pub predicted: [f64; 2],
    pub measured: [Option<f64>; 2],
    pub heights: [Option<f64>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
}

impl AffineFit {
    /// Ordinary least squares; standard errors need at least three points.
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::invalid(
                "d-list",
                format!("an affine fit needs at least 3 points, got {n}"),
            ));
        }
        let nf = n as f64;
        let mx = xs.iter().sum::<f64>() / nf;
        let my = ys.iter().sum::<f64>() / nf;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::invalid(
                "d-list",
                "needs distinct separations".to_string(),
            ));
        }
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        let s2 = rss / (nf - 2.0);
        Ok(Self {
            slope,
            intercept,
            slope_stderr: (s2 / sxx).sqrt(),
            intercept_stderr: (s2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        })
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// First-peak arrival at the far edge as a function of the gap.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalStudy {
    pub readout: Readout,
    pub times: PhaseTimes,
    pub rows: Vec<ArrivalRow>,
    /// `None` when fewer than three separations produced a first peak.
    pub fit: Option<AffineFit>,
    /// Measured minus fitted first-peak time, per successful row.
    pub residuals: Vec<f64>,
    /// Separations at which detection failed, with the reason.
    pub failures: Vec<(f64, String)>,
}

pub fn arrival_vs_separation(
    separations: &[f64],
    template: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
    readout: Readout,
    opts: &DetectionOptions,
) -> Result<ArrivalStudy> {
    let mut distinct: Vec<f64> = separations.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::invalid(
            "d-list",
            format!(
                "need at least 3 distinct separations, got {}",
                distinct.len()
            ),
        ));
    }
    // the centre energy does not depend on the gap
    let e1 = find_e1(&Transmitted, 0, template, spec, grid, &ParabolicArgmax)?;
    let times = PhaseTimes::at(e1.energy, template)?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &d in separations {
        let sys = template.with_separation(d)?;
        let row = match readout {
            Readout::Components => components_row(&sys, spec, grid, &times, opts)?,
            Readout::FullWave => full_wave_row(&sys, spec, grid, &times, opts)?,
        };
        if row.measured[0].is_none() {
            failures.push((d, format!("no {} first peak detected", readout.name())));
        }
        rows.push(row);
    }

    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| r.measured[0].map(|t| (r.separation, t)))
        .unzip();
    let fit = AffineFit::fit(&xs, &ys).ok();
    let residuals = match &fit {
        Some(f) => xs.iter().zip(&ys).map(|(x, y)| y - f.predict(*x)).collect(),
        None => Vec::new(),
    };
    Ok(ArrivalStudy {
        readout,
        times,
        rows,
        fit,
        residuals,
        failures,
    })
}

fn components_row(
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
    times: &PhaseTimes,
    opts: &DetectionOptions,
) -> Result<ArrivalRow> {
    let mut row = ArrivalRow {
        separation: sys.separation(),
        predicted: [0.0; 2],
        measured: [None; 2],
        heights: [None; 2],
    };
    for n in 0..2 {
        let peak = measure_component_peak(&Transmitted, n, sys, spec, grid, times, opts)?;
        row.predicted[n] = peak.predicted;
        row.measured[n] = peak.measured.map(|e| e.time);
        row.heights[n] = peak.measured.map(|e| e.height);
    }
    Ok(row)
}

fn full_wave_row(
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
    times: &PhaseTimes,
    opts: &DetectionOptions,
) -> Result<ArrivalRow> {
    let tg = TimeGrid::for_schedule(&Transmitted, sys, times, opts.step_fraction)?;
    let ts = tg.times();
    let series = density_timeseries(
        &Wave::Full(Region::TransmittedSide),
        sys.far_edge(),
        &ts,
        sys,
        spec,
        &resonance_refined_grid(grid, sys),
    )?;
    let predicted = peak_schedule(&Transmitted, 3, sys, times).times();
    let mut events = detect_peaks(&series, &ts, opts.prominence)?;
    assign_branches(&mut events, &predicted);
    // the first two detected peaks, in time order
    let pick = |i: usize| events.get(i);
    Ok(ArrivalRow {
        separation: sys.separation(),
        predicted: [predicted[0], predicted[1]],
        measured: [pick(0).map(|e| e.time), pick(1).map(|e| e.time)],
        heights: [pick(0).map(|e| e.height), pick(1).map(|e| e.height)],
    })
}

/// A straight piece of a packet-centre trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldLineSegment {
    pub label: &'static str,
    pub n: usize,
    pub x0: f64,
    pub t0: f64,
    pub x1: f64,
    pub t1: f64,
}

/// Packet-centre trajectories implied by the peak schedules: free flight at
/// `v` between stations and a dwell of `τ` at each barrier encounter.
/// Outgoing legs are drawn over one gap length.
pub fn world_lines(sys: &BarrierSystem, times: &PhaseTimes, n_max: usize) -> Vec<WorldLineSegment> {
    let (a, l, far) = (sys.width(), sys.offset(), sys.far_edge());
    let d = sys.separation();
    let v = times.velocity;
    let leg = d.max(a);
    let seg = |label, n, x0, t0, x1: f64| WorldLineSegment {
        label,
        n,
        x0,
        t0,
        x1,
        t1: t0 + (x1 - x0).abs() / v,
    };

    let mut out = vec![seg("incident", 0, -leg, -leg / v, 0.0)];
    let right = peak_schedule(&crate::channel::CavityRight, n_max, sys, times);
    let left = peak_schedule(&crate::channel::CavityLeft, n_max, sys, times);
    let transmitted = peak_schedule(&Transmitted, n_max, sys, times);
    let reflected = peak_schedule(&crate::channel::Reflected, n_max + 1, sys, times);
    out.push(seg("reflected", 0, 0.0, reflected.entries[0].time, -leg));
    for n in 0..=n_max {
        out.push(seg("cavity_right", n, a, right.entries[n].time, l));
        let t_back = left.entries[n].time - d / v;
        out.push(seg("cavity_left", n, l, t_back, a));
        out.push(seg(
            "transmitted",
            n,
            far,
            transmitted.entries[n].time,
            far + leg,
        ));
        out.push(seg(
            "reflected",
            n + 1,
            0.0,
            reflected.entries[n + 1].time,
            -leg,
        ));
    }
    out
}
