//! Curve data behind the six figures, one strategy per figure id.

use tunnellab::audit::{counterexample_g, counterexample_i};
use tunnellab::channel::{term_amplitude, Transmitted};
use tunnellab::model::BarrierSystem;
use tunnellab::packets::world_lines;
use tunnellab::scattering::critique_amplitude;
use tunnellab::spm::{ors_phase_time, phase_time_exact};

use crate::commands::shared_times;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Artifact, Table};

pub trait Figure: Send + Sync {
    fn id(&self) -> usize;
    fn name(&self) -> &'static str;
    fn render(&self, config: &RunConfig) -> Result<Vec<Artifact>, CliError>;
}

/// `count` equally spaced points on `[lo, hi]`.
fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + i as f64 * step).collect()
}

/// Interior points of `(0, V0)`, avoiding the singular endpoints.
fn open_energies(sys: &BarrierSystem, count: usize) -> Vec<f64> {
    let step = sys.height() / (count + 1) as f64;
    (1..=count).map(|i| i as f64 * step).collect()
}

const CURVE_POINTS: usize = 2001;

/// The sign-alternating spectral function `e^{−E²} cos τE`.
pub struct OscillatingSpectrum;

impl Figure for OscillatingSpectrum {
    fn id(&self) -> usize {
        1
    }

    fn name(&self) -> &'static str {
        "oscillating spectrum"
    }

    fn render(&self, config: &RunConfig) -> Result<Vec<Artifact>, CliError> {
        let mut t = Table::new("fig1.csv", &["E", "G"]);
        for e in linspace(-4.0, 4.0, 801) {
            t.push(vec![
                e.into(),
                counterexample_g(e, config.counterexample_tau).into(),
            ]);
        }
        Ok(vec![t.into()])
    }
}

/// Its Fourier integral, peaked at `t = ±τ` rather than at the stationary
/// point `t = 0`.
pub struct CounterexampleIntegralCurve;

impl Figure for CounterexampleIntegralCurve {
    fn id(&self) -> usize {
        2
    }

    fn name(&self) -> &'static str {
        "counterexample integral"
    }

    fn render(&self, config: &RunConfig) -> Result<Vec<Artifact>, CliError> {
        let mut t = Table::new("fig2.csv", &["t", "closed_form", "quadrature"]);
        for time in linspace(-12.0, 12.0, 481) {
            let s = counterexample_i(time, config.counterexample_tau);
            t.push(vec![time.into(), s.closed_form.into(), s.quadrature.into()]);
        }
        Ok(vec![t.into()])
    }
}

/// The opaque-limit spectral amplitude at two neighbouring gaps.
pub struct CritiqueAmplitude;

/// Gaps of the left and right panels.
pub const CRITIQUE_GAPS: [(f64, &str); 2] = [(8.0, "fig3_left.csv"), (9.0, "fig3_right.csv")];

impl Figure for CritiqueAmplitude {
    fn id(&self) -> usize {
        3
    }

    fn name(&self) -> &'static str {
        "opaque-limit amplitude"
    }

    fn render(&self, config: &RunConfig) -> Result<Vec<Artifact>, CliError> {
        let base = config.system()?;
        let spec = config.packet()?;
        CRITIQUE_GAPS
            .iter()
            .map(|&(d, file)| {
                let sys = base.with_separation(d)?;
                let mut t = Table::new(file, &["E", "amplitude"]);
                for e in open_energies(&sys, CURVE_POINTS) {
                    t.push(vec![e.into(), critique_amplitude(e, &sys, &spec)?.into()]);
                }
                Ok(t.into())
            })
            .collect()
    }
}

/// Opaque-limit phase time `2m/(kχ)` next to the exact single-barrier one.
pub struct PhaseTimeCurve;

impl Figure for PhaseTimeCurve {
    fn id(&self) -> usize {
        4
    }

    fn name(&self) -> &'static str {
        "phase time"
    }

    fn render(&self, config: &RunConfig) -> Result<Vec<Artifact>, CliError> {
        let sys = config.system()?;
        let mut t = Table::new("fig4.csv", &["E", "tau_ors", "tau_exact"]);
        for e in open_energies(&sys, 999) {
            t.push(vec![
                e.into(),
                ors_phase_time(e, &sys)?.into(),
                phase_time_exact(e, &sys)?.into(),
            ]);
        }
        Ok(vec![t.into()])
    }
}

/// Transmitted bounce amplitudes `g(E)|term_n(E)|`.
pub struct TermAmplitudes;

pub const FIGURE_TERMS: [usize; 3] = [0, 10, 20];

impl Figure for TermAmplitudes {
    fn id(&self) -> usize {
        5
    }

    fn name(&self) -> &'static str {
        "term amplitudes"
    }

    fn render(&self, config: &RunConfig) -> Result<Vec<Artifact>, CliError> {
        let sys = config.system()?;
        let spec = config.packet()?;
        let mut t = Table::new("fig5.csv", &["E", "n0", "n10", "n20"]);
        for e in open_energies(&sys, CURVE_POINTS) {
            let mut row = vec![e.into()];
            for n in FIGURE_TERMS {
                row.push(term_amplitude(&Transmitted, n, e, &sys, &spec)?.into());
            }
            t.push(row);
        }
        Ok(vec![t.into()])
    }
}

/// Packet-centre trajectories of every bounce.
pub struct BounceDiagram;

impl Figure for BounceDiagram {
    fn id(&self) -> usize {
        6
    }

    fn name(&self) -> &'static str {
        "bounce world-lines"
    }

    fn render(&self, config: &RunConfig) -> Result<Vec<Artifact>, CliError> {
        let sys = config.system()?;
        let spec = config.packet()?;
        let grid = config.grid()?;
        let times = shared_times(&sys, &spec, &grid, config)?;
        let mut t = Table::new("fig6.csv", &["segment", "n", "x0", "t0", "x1", "t1"]);
        for s in world_lines(&sys, &times, config.n_max) {
            t.push(vec![
                s.label.into(),
                s.n.into(),
                s.x0.into(),
                s.t0.into(),
                s.x1.into(),
                s.t1.into(),
            ]);
        }
        Ok(vec![t.into()])
    }
}

pub static FIGURES: [&dyn Figure; 6] = [
    &OscillatingSpectrum,
    &CounterexampleIntegralCurve,
    &CritiqueAmplitude,
    &PhaseTimeCurve,
    &TermAmplitudes,
    &BounceDiagram,
];

pub fn figure_by_id(id: usize) -> Result<&'static dyn Figure, CliError> {
    FIGURES
        .iter()
        .copied()
        .find(|f| f.id() == id)
        .ok_or_else(|| CliError::Usage(format!("unknown figure {id}; expected 1 to 6")))
}
