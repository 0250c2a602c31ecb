//! Subcommands. Each one computes everything in memory and hands back its
//! artifacts; nothing touches the disk until the caller writes them.

use std::fmt::Write as _;

use tunnellab::audit::{audit, counterexample_demo, counterexample_i, AuditReport, Verdict};
use tunnellab::channel::{closed_form, series_partial_sum, Region, Transmitted, CHANNELS};
use tunnellab::model::{
    spectral_primitives, BarrierSystem, EnergyGrid, PacketSpec, SpectralFunction,
};
use tunnellab::packets::{
    arrival_vs_separation, assign_branches, density_timeseries, detect_peaks,
    measure_component_peak, merge_diagnostic, resonance_refined_grid, ArrivalStudy, TimeGrid, Wave,
};
use tunnellab::scattering::{critique_amplitude, stationary_coefficients};
use tunnellab::spm::{dual_schedule, find_e1, peak_schedule, sample_term_amplitude, PhaseTimes};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::figures::{figure_by_id, FIGURES};
use crate::output::{format_float, Artifact, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Coeffs,
    Series,
    Audit,
    Schedule,
    Propagate,
    Peaks,
    Verdict,
    Figures,
    Counterexample,
}

/// Flags that refine a single invocation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Options {
    pub figure: Option<usize>,
    pub d_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Short human-readable summary for stdout.
    pub summary: String,
}

pub fn run(command: Command, config: &RunConfig, options: &Options) -> Result<Outcome, CliError> {
    match command {
        Command::Coeffs => cmd_coeffs(config),
        Command::Series => cmd_series(config),
        Command::Audit => cmd_audit(config),
        Command::Schedule => cmd_schedule(config),
        Command::Propagate => cmd_propagate(config),
        Command::Peaks => cmd_peaks(config),
        Command::Verdict => {
            let mut config = config.clone();
            if let Some(list) = &options.d_list {
                config.d_list = list.clone();
            }
            let report = cmd_verdict(&config)?;
            Ok(Outcome {
                artifacts: vec![Artifact::text("verdict.txt", report.clone())],
                summary: report,
            })
        }
        Command::Figures => cmd_figures(config, options.figure),
        Command::Counterexample => cmd_counterexample(config),
    }
}

fn single(table: Table) -> Outcome {
    let summary = format!("wrote {} ({} rows)\n", table.name, table.rows.len());
    Outcome {
        artifacts: vec![table.into()],
        summary,
    }
}

/// Centre energy and phase times of the transmitted n = 0 packet.
pub fn shared_times(
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
    config: &RunConfig,
) -> Result<PhaseTimes, CliError> {
    let estimator = config.center_estimator()?;
    let e1 = find_e1(&Transmitted, 0, sys, spec, grid, estimator.as_ref())?;
    Ok(PhaseTimes::at(e1.energy, sys)?)
}

pub fn cmd_coeffs(config: &RunConfig) -> Result<Outcome, CliError> {
    let sys = config.system()?;
    let grid = config.grid()?;
    let mut t = Table::new(
        "coeffs.csv",
        &[
            "E", "re_T", "im_T", "abs2_T", "re_R", "im_R", "abs2_R", "fluxsum",
        ],
    );
    for &e in &grid.nodes {
        let c = stationary_coefficients(e, &sys)?;
        t.push(vec![
            e.into(),
            c.transmission.re.into(),
            c.transmission.im.into(),
            c.transmission.norm_sqr().into(),
            c.reflection.re.into(),
            c.reflection.im.into(),
            c.reflection.norm_sqr().into(),
            c.flux_sum().into(),
        ]);
    }
    Ok(single(t))
}

/// Partial sums at `E0` against the closed forms.
pub fn cmd_series(config: &RunConfig) -> Result<Outcome, CliError> {
    let sys = config.system()?;
    let e = config.mean;
    let p = spectral_primitives(e, &sys)?;
    let mut t = Table::new(
        "series.csv",
        &[
            "channel",
            "N",
            "re_partial",
            "im_partial",
            "re_closed",
            "im_closed",
            "abs_error",
            "tail_bound",
        ],
    );
    for channel in CHANNELS {
        let exact = closed_form(channel, e, &sys)?;
        let prefactor = channel.series_prefactor(&p, &sys).norm();
        for big_n in 0..=config.series_terms {
            let partial = series_partial_sum(channel, big_n, e, &sys)?;
            t.push(vec![
                channel.name().into(),
                big_n.into(),
                partial.re.into(),
                partial.im.into(),
                exact.re.into(),
                exact.im.into(),
                (partial - exact).norm().into(),
                (prefactor * channel.tail_bound(big_n, &p)).into(),
            ]);
        }
    }
    Ok(single(t))
}

fn sample_critique(
    sys: &BarrierSystem,
    spec: &PacketSpec,
    grid: &EnergyGrid,
) -> Result<SpectralFunction, CliError> {
    let values = grid
        .nodes
        .iter()
        .map(|&e| critique_amplitude(e, sys, spec))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(SpectralFunction {
        nodes: grid.nodes.clone(),
        values,
        weights: grid.weights.clone(),
    })
}

/// Term indices whose amplitudes are audited.
pub const AUDITED_TERMS: [usize; 3] = [0, 10, 20];

/// `(subject, report)` for the critique amplitude at the config gap and at
/// every listed gap, then for the audited terms of every channel.
pub fn audit_subjects(config: &RunConfig) -> Result<Vec<(String, AuditReport)>, CliError> {
    let sys = config.system()?;
    let spec = config.packet()?;
    let grid = config.grid()?;
    let mut gaps = vec![sys.separation()];
    for &d in &config.d_list {
        if !gaps.contains(&d) {
            gaps.push(d);
        }
    }
    let mut out = Vec::new();
    for d in gaps {
        let s = sys.with_separation(d)?;
        out.push((
            format!("ors_critique[d={d}]"),
            audit(&sample_critique(&s, &spec, &grid)?)?,
        ));
    }
    for channel in CHANNELS {
        for n in AUDITED_TERMS {
            let samples = sample_term_amplitude(channel, n, &sys, &spec, &grid)?;
            out.push((format!("{}[{n}]", channel.name()), audit(&samples)?));
        }
    }
    Ok(out)
}

pub fn cmd_audit(config: &RunConfig) -> Result<Outcome, CliError> {
    let mut t = Table::new(
        "audit.csv",
        &[
            "subject",
            "sign_changes",
            "extrema_count",
            "peak_energy",
            "spread",
            "mass_concentration",
            "verdict",
        ],
    );
    let mut summary = String::new();
    for (subject, r) in audit_subjects(config)? {
        let _ = writeln!(summary, "{subject}: {}", r.verdict);
        t.push(vec![
            subject.into(),
            r.sign_changes.into(),
            r.extrema_count.into(),
            r.peak_energy.into(),
            r.spread.into(),
            r.mass_concentration.into(),
            r.verdict.name().into(),
        ]);
    }
    Ok(Outcome {
        artifacts: vec![t.into()],
        summary,
    })
}

pub fn cmd_schedule(config: &RunConfig) -> Result<Outcome, CliError> {
    let sys = config.system()?;
    let spec = config.packet()?;
    let grid = config.grid()?;
    let times = shared_times(&sys, &spec, &grid, config)?;
    let estimator = config.center_estimator()?;
    let mut t = Table::new(
        "schedule.csv",
        &[
            "channel",
            "n",
            "station",
            "time_shared",
            "e1_term",
            "time_term",
        ],
    );
    for channel in CHANNELS {
        let station = channel.reference_point(&sys);
        let rows = dual_schedule(
            channel,
            config.n_max,
            &sys,
            &spec,
            &grid,
            estimator.as_ref(),
            &times,
        )?;
        for r in rows {
            t.push(vec![
                channel.name().into(),
                r.n.into(),
                station.into(),
                r.time_shared.into(),
                r.e1_term.into(),
                r.time_term.into(),
            ]);
        }
    }
    let summary = format!(
        "E1 = {}\nv = {}\ntau = {}\ntau_ors = {}\n",
        format_float(times.e1),
        format_float(times.velocity),
        format_float(times.tau),
        format_float(times.tau_ors)
    );
    Ok(Outcome {
        artifacts: vec![t.into()],
        summary,
    })
}

/// Densities at the three stations `x = 0`, the cavity midpoint and
/// `x = L + a`, plus the transmitted bounce packets at `x = L + a`.
pub fn cmd_propagate(config: &RunConfig) -> Result<Outcome, CliError> {
    let sys = config.system()?;
    let spec = config.packet()?;
    let grid = config.grid()?;
    let refined = resonance_refined_grid(&grid, &sys);
    let times = shared_times(&sys, &spec, &grid, config)?;
    let ts = TimeGrid::for_schedule(&Transmitted, &sys, &times, config.t_step)?.times();
    let mid = 0.5 * (sys.width() + sys.offset());

    let mut columns = vec![
        density_timeseries(
            &Wave::Full(Region::IncidentSide),
            0.0,
            &ts,
            &sys,
            &spec,
            &refined,
        )?,
        density_timeseries(&Wave::Full(Region::Cavity), mid, &ts, &sys, &spec, &refined)?,
        density_timeseries(
            &Wave::Full(Region::TransmittedSide),
            sys.far_edge(),
            &ts,
            &sys,
            &spec,
            &refined,
        )?,
    ];
    let mut header: Vec<String> = [
        "t",
        "rho_incident_side",
        "rho_cavity",
        "rho_transmitted_side",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for n in 0..=config.n_max {
        columns.push(density_timeseries(
            &Wave::term(&Transmitted, n),
            sys.far_edge(),
            &ts,
            &sys,
            &spec,
            &grid,
        )?);
        header.push(format!("rho_transmitted_{n}"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new("propagate.csv", &header_refs);
    for (i, &time) in ts.iter().enumerate() {
        let mut row = vec![time.into()];
        row.extend(columns.iter().map(|c| c[i].into()));
        t.push(row);
    }
    Ok(single(t))
}

pub fn cmd_peaks(config: &RunConfig) -> Result<Outcome, CliError> {
    let sys = config.system()?;
    let spec = config.packet()?;
    let grid = config.grid()?;
    let times = shared_times(&sys, &spec, &grid, config)?;
    let opts = config.detection();
    let mut t = Table::new(
        "peaks.csv",
        &["source", "station", "n", "time", "height", "predicted"],
    );

    let ts = TimeGrid::for_schedule(&Transmitted, &sys, &times, config.t_step)?.times();
    let schedule = peak_schedule(&Transmitted, config.n_max, &sys, &times).times();
    let full = density_timeseries(
        &Wave::Full(Region::TransmittedSide),
        sys.far_edge(),
        &ts,
        &sys,
        &spec,
        &resonance_refined_grid(&grid, &sys),
    )?;
    let mut events = detect_peaks(&full, &ts, config.prominence)?;
    assign_branches(&mut events, &schedule);
    for e in &events {
        let (n, predicted) = match e.n_assigned {
            Some(n) => (n.to_string(), format_float(schedule[n])),
            None => ("unassigned".to_string(), String::new()),
        };
        t.push(vec![
            "transmitted_side".into(),
            sys.far_edge().into(),
            n.into(),
            e.time.into(),
            e.height.into(),
            predicted.into(),
        ]);
    }
    for channel in CHANNELS {
        for n in 0..=config.n_max {
            let p = measure_component_peak(channel, n, &sys, &spec, &grid, &times, &opts)?;
            let (time, height) = match p.measured {
                Some(e) => (format_float(e.time), format_float(e.height)),
                None => ("nan".to_string(), "nan".to_string()),
            };
            t.push(vec![
                channel.name().into(),
                p.station.into(),
                n.into(),
                time.into(),
                height.into(),
                p.predicted.into(),
            ]);
        }
    }
    Ok(single(t))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn relative(measured: f64, expected: f64) -> f64 {
    (measured - expected).abs() / expected.abs()
}

/// Structured verdict on the separation dependence of the transmitted peak.
pub fn cmd_verdict(config: &RunConfig) -> Result<String, CliError> {
    let sys = config.system()?;
    let spec = config.packet()?;
    let mut r = String::new();
    let _ = writeln!(r, "# tunnellab verdict");
    let _ = writeln!(
        r,
        "system: m = {}, V0 = {}, a = {}, L = {}, d = {}",
        config.mass,
        config.height,
        config.width,
        config.offset,
        sys.separation()
    );
    let _ = writeln!(r, "packet: E0 = {}, delta = {}", config.mean, config.spread);
    if sys.width() == 0.0 {
        let _ = writeln!(r, "regime: no tunneling regime");
        let _ = writeln!(
            r,
            "verdict: no tunneling regime (a = 0 gives |T| = 1 at every energy)"
        );
        return Ok(r);
    }
    let _ = writeln!(r, "regime: tunneling");

    let subjects = audit_subjects(config)?;
    let mut ors_non_gaussian = true;
    let mut terms_gaussian = true;
    let _ = writeln!(r, "\n## applicability audit");
    for (subject, a) in &subjects {
        let _ = writeln!(
            r,
            "{subject}: {} (sign_changes = {}, extrema = {}, mass = {:.6})",
            a.verdict, a.sign_changes, a.extrema_count, a.mass_concentration
        );
        if subject.starts_with("ors_critique") {
            ors_non_gaussian &= a.verdict == Verdict::NotSharplyPeaked;
        } else {
            terms_gaussian &= a.verdict == Verdict::SharplyPeaked;
        }
    }
    let _ = writeln!(
        r,
        "ors_amplitude_non_gaussian: {}",
        yes_no(ors_non_gaussian)
    );
    let _ = writeln!(
        r,
        "term_amplitudes_sharply_peaked: {}",
        yes_no(terms_gaussian)
    );

    let grid = config.grid()?;
    let study = arrival_vs_separation(
        &config.d_list,
        &sys,
        &spec,
        &grid,
        config.readout,
        &config.detection(),
    )?;
    write_study(&mut r, &study);

    let _ = writeln!(r, "\n## full-wave overlap");
    for &d in &config.d_list {
        let s = sys.with_separation(d)?;
        let m = merge_diagnostic(&s, &spec, &grid, &study.times, &config.detection())?;
        let first = m
            .full_wave_peaks
            .first()
            .map(|e| format!("{:.6}", e.time))
            .unwrap_or_else(|| "none".to_string());
        let _ = writeln!(
            r,
            "d = {d}: merged = {}, pulse_width = {:.6}, d/v = {:.6}, first_full_wave_peak = {first}, predicted_n0 = {:.6}",
            yes_no(m.merged),
            m.pulse_width,
            m.transit_time,
            m.predicted[0]
        );
    }
    Ok(r)
}

fn write_study(r: &mut String, study: &ArrivalStudy) {
    let times = &study.times;
    let _ = writeln!(
        r,
        "\n## arrival at x = L + a ({} readout)",
        study.readout.name()
    );
    let _ = writeln!(r, "E1 = {:.9}", times.e1);
    let _ = writeln!(r, "v = {:.9}", times.velocity);
    let _ = writeln!(r, "tau = {:.9}", times.tau);
    let _ = writeln!(r, "tau_ors = {:.9}", times.tau_ors);
    for row in &study.rows {
        for n in 0..2 {
            let measured = row.measured[n]
                .map(|t| format!("{t:.6}"))
                .unwrap_or_else(|| "none".to_string());
            let residual = row.measured[n]
                .map(|t| format!("{:+.6}", t - row.predicted[n]))
                .unwrap_or_else(|| "none".to_string());
            let _ = writeln!(
                r,
                "peak d = {}, n = {n}: measured = {measured}, predicted = {:.6}, residual = {residual}",
                row.separation, row.predicted[n]
            );
        }
    }
    for (d, why) in &study.failures {
        let _ = writeln!(r, "detection_failure d = {d}: {why}");
    }
    match &study.fit {
        Some(fit) => {
            let inv_v = 1.0 / times.velocity;
            let two_tau = 2.0 * times.tau;
            let _ = writeln!(
                r,
                "fit_slope = {:.6} (1/v = {inv_v:.6}, relative error {:.4})",
                fit.slope,
                relative(fit.slope, inv_v)
            );
            let _ = writeln!(
                r,
                "fit_intercept = {:.6} (2 tau = {two_tau:.6}, relative error {:.4})",
                fit.intercept,
                relative(fit.intercept, two_tau)
            );
            let _ = writeln!(r, "slope_stderr = {:.3e}", fit.slope_stderr);
            let _ = writeln!(
                r,
                "zero_slope_rejected: {} (slope / stderr = {:.3e})",
                yes_no(fit.slope > 10.0 * fit.slope_stderr),
                fit.slope / fit.slope_stderr
            );
            let residuals: Vec<String> = study
                .residuals
                .iter()
                .map(|x| format!("{x:+.3e}"))
                .collect();
            let _ = writeln!(r, "fit_residuals = [{}]", residuals.join(", "));
            let depends = fit.slope > 10.0 * fit.slope_stderr && relative(fit.slope, inv_v) < 0.05;
            let _ = writeln!(
                r,
                "verdict: arrival time {} on the barrier separation",
                if depends {
                    "depends"
                } else {
                    "does not clearly depend"
                }
            );
        }
        None => {
            let _ = writeln!(
                r,
                "verdict: inconclusive (fewer than three detected first peaks)"
            );
        }
    }
}

pub fn cmd_figures(config: &RunConfig, figure: Option<usize>) -> Result<Outcome, CliError> {
    let selected = match figure {
        Some(id) => vec![figure_by_id(id)?],
        None => FIGURES.to_vec(),
    };
    let mut artifacts = Vec::new();
    let mut summary = String::new();
    for f in selected {
        let files = f.render(config)?;
        for a in &files {
            let _ = writeln!(summary, "figure {} ({}): {}", f.id(), f.name(), a.name);
        }
        artifacts.extend(files);
    }
    Ok(Outcome { artifacts, summary })
}

pub fn cmd_counterexample(config: &RunConfig) -> Result<Outcome, CliError> {
    let tau = config.counterexample_tau;
    let (lo, hi, step) = (-12.0, 12.0, 0.01);
    let mut t = Table::new("counterexample.csv", &["t", "quadrature", "closed_form"]);
    let count = ((hi - lo) / step) as usize + 1;
    for i in 0..count {
        let time = lo + i as f64 * step;
        let s = counterexample_i(time, tau);
        t.push(vec![time.into(), s.quadrature.into(), s.closed_form.into()]);
    }
    let demo = counterexample_demo(tau, lo, hi, step);
    let maxima: Vec<String> = demo.maxima.iter().map(|m| format!("{m:.2}")).collect();
    let summary = format!(
        "tau = {tau}\nnaive stationary-phase maximum: t = {}\nactual maxima: t = [{}]\nI(tau) / I(0) = {:.6e}\nmax |quadrature - closed form| = {:.3e}\n",
        demo.naive_prediction,
        maxima.join(", "),
        demo.contrast,
        demo.max_abs_error
    );
    Ok(Outcome {
        artifacts: vec![t.into()],
        summary,
    })
}
