//! End-to-end acceptance checks. Each check prints one `[PASS]` or `[FAIL]`
//! line; the process exits non-zero if any check fails.

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;
use tunnellab::audit::{audit, counterexample_i, naive_spm_prediction, Verdict};
use tunnellab::channel::{closed_form, series_partial_sum, Reflected, Transmitted, CHANNELS};
use tunnellab::model::{
    build_energy_grid, spectral_primitives, BarrierSystem, PacketSpec, SpectralFunction,
};
use tunnellab::oracle::transfer_matrix;
use tunnellab::packets::{
    arrival_vs_separation, measure_component_peak, DetectionOptions, Readout,
};
use tunnellab::scattering::{critique_amplitude, stationary_coefficients};
use tunnellab::spm::{
    find_e1, ors_phase_time, phase_time_exact, sample_term_amplitude, ParabolicArgmax, PhaseTimes,
};

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn timed<F>(name: &'static str, budget: Option<Duration>, f: F) -> Check
where
    F: FnOnce() -> (bool, String),
{
    let start = Instant::now();
    let (ok, detail) = f();
    let elapsed = start.elapsed();
    let in_time = budget.is_none_or(|b| elapsed < b);
    let budget_note = match budget {
        Some(b) => format!("{:.3}s of {}s", elapsed.as_secs_f64(), b.as_secs()),
        None => format!("{:.3}s", elapsed.as_secs_f64()),
    };
    Check {
        name,
        passed: ok && in_time,
        detail: format!("{detail}; runtime {budget_note}"),
    }
}

fn canonical(d: f64) -> BarrierSystem {
    BarrierSystem::canonical(d).unwrap()
}

fn packet() -> PacketSpec {
    PacketSpec::new(0.5, 0.1).unwrap()
}

fn counterexample_exactness() -> (bool, String) {
    let tau = 5.0;
    let step = 0.01;
    let count = (24.0 / step) as usize + 1;
    let times: Vec<f64> = (0..count).map(|i| -12.0 + i as f64 * step).collect();
    let samples: Vec<_> = times.iter().map(|&t| counterexample_i(t, tau)).collect();
    let max_err = samples
        .iter()
        .map(|s| (s.quadrature - s.closed_form).abs())
        .fold(0.0, f64::max);
    let (arg, top) = samples
        .iter()
        .zip(&times)
        .map(|(s, &t)| (t, s.quadrature))
        .fold((0.0, f64::NEG_INFINITY), |best, c| {
            if c.1 > best.1 {
                c
            } else {
                best
            }
        });
    let naive = counterexample_i(naive_spm_prediction(), tau).quadrature;
    let ratio = top / naive;
    let bound = (25.0f64 / 4.0).exp() / 2.0;
    let ok = max_err <= 1e-8 && (arg.abs() - tau).abs() <= 0.01 && ratio >= bound;
    (
        ok,
        format!(
            "max |quadrature - closed form| = {max_err:.2e}, argmax t = {arg:.3}, I(argmax)/I(0) = {ratio:.6} (need >= {bound:.6})"
        ),
    )
}

fn flux_conservation() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let a = rng.random_range(0.1..10.0);
        let d = rng.random_range(0.0..20.0);
        let sys = BarrierSystem::from_separation(0.5, 1.0, a, d).unwrap();
        for i in 1..=1000 {
            let e = i as f64 / 1001.0;
            let c = stationary_coefficients(e, &sys).unwrap();
            worst = worst.max((c.flux_sum() - 1.0).abs());
        }
    }
    (
        worst <= 1e-10,
        format!("max ||T|^2 + |R|^2 - 1| = {worst:.2e} over 20 x 1000 samples"),
    )
}

fn series_equivalence() -> (bool, String) {
    let sys = canonical(8.0);
    let mut worst_ratio: f64 = 0.0;
    let mut ok = true;
    for i in 1..=199 {
        let e = i as f64 / 200.0;
        let p = spectral_primitives(e, &sys).unwrap();
        let q = p.series_ratio();
        for channel in CHANNELS {
            let exact = closed_form(channel, e, &sys).unwrap();
            for big_n in [5, 10, 20] {
                let err = (series_partial_sum(channel, big_n, e, &sys).unwrap() - exact).norm();
                let bound = q.powi(big_n as i32 + 1) / (1.0 - q);
                ok &= err <= bound;
                worst_ratio = worst_ratio.max(err / bound);
            }
        }
    }
    (
        ok,
        format!("all 4 channels, N = 5/10/20, 199 energies: max error / bound = {worst_ratio:.3e}"),
    )
}

fn transfer_matrix_agreement() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a11);
    let sys = canonical(8.0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let e = rng.random_range(1e-6..1.0 - 1e-6);
        let c = stationary_coefficients(e, &sys).unwrap();
        let o = transfer_matrix(e, &sys);
        for (x, y) in [
            (c.transmission, o.transmission),
            (c.reflection, o.reflection),
            (c.cavity_right, o.cavity_right),
            (c.cavity_left, o.cavity_left),
        ] {
            worst = worst.max((x - y).norm() / y.norm().max(1.0));
        }
    }
    (
        worst <= 1e-10,
        format!("max deviation of T, R, alpha, beta = {worst:.2e} at 100 energies"),
    )
}

fn audit_dichotomy() -> (bool, String) {
    let spec = packet();
    let mut notes = Vec::new();
    let mut ok = true;
    for d in [8.0, 9.0] {
        let sys = canonical(d);
        let grid = build_energy_grid(&spec, &sys, 2048, 8.0).unwrap();
        let values = grid
            .nodes
            .iter()
            .map(|&e| critique_amplitude(e, &sys, &spec).unwrap())
            .collect();
        let f = SpectralFunction {
            nodes: grid.nodes.clone(),
            values,
            weights: grid.weights.clone(),
        };
        let v = audit(&f).unwrap().verdict;
        ok &= v == Verdict::NotSharplyPeaked;
        notes.push(format!("opaque-limit d={d}: {v}"));
    }
    let sys = canonical(8.0);
    let grid = build_energy_grid(&spec, &sys, 2048, 8.0).unwrap();
    for n in [0, 10, 20] {
        let f = sample_term_amplitude(&Transmitted, n, &sys, &spec, &grid).unwrap();
        let v = audit(&f).unwrap().verdict;
        ok &= v == Verdict::SharplyPeaked;
        notes.push(format!("term n={n}: {v}"));
    }
    (ok, notes.join(", "))
}

fn hartman_plateau() -> (bool, String) {
    let base = canonical(8.0);
    let taus: Vec<f64> = (0..=400)
        .map(|i| phase_time_exact(0.5, &base.with_width(4.0 + 0.01 * i as f64).unwrap()).unwrap())
        .collect();
    let lo = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = taus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let variation = (hi - lo) / hi;
    let at5 = phase_time_exact(0.5, &base).unwrap();
    let ors = ors_phase_time(0.5, &base).unwrap();
    let gap = (at5 - ors).abs() / ors;
    (
        variation < 0.01 && gap < 0.01,
        format!("variation over a in [4, 8] = {variation:.2e}, |tau(a=5) - 2m/(k chi)| / (2m/(k chi)) = {gap:.2e}"),
    )
}

fn relative(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

fn first_peak_arrival() -> (bool, String) {
    let sys = canonical(8.0);
    let spec = packet();
    let grid = build_energy_grid(&spec, &sys, 2048, 8.0).unwrap();
    let study = arrival_vs_separation(
        &[8.0, 10.0, 12.0],
        &sys,
        &spec,
        &grid,
        Readout::Components,
        &DetectionOptions::default(),
    )
    .unwrap();
    let Some(fit) = study.fit else {
        return (false, format!("detection failed: {:?}", study.failures));
    };
    let t = study.times;
    let slope_err = relative(fit.slope, 1.0 / t.velocity);
    let intercept_err = relative(fit.intercept, 2.0 * t.tau);
    let significance = fit.slope / fit.slope_stderr;
    let mut spacing_err: f64 = 0.0;
    for row in &study.rows {
        match row.measured {
            [Some(t0), Some(t1)] => {
                let expected = 2.0 * row.separation / t.velocity + 2.0 * t.tau;
                spacing_err = spacing_err.max(relative(t1 - t0, expected));
            }
            _ => spacing_err = f64::INFINITY,
        }
    }
    let ok =
        slope_err <= 0.05 && intercept_err <= 0.10 && significance > 10.0 && spacing_err <= 0.05;
    (
        ok,
        format!(
            "slope {:.5} vs 1/v {:.5} ({:.2}%), intercept {:.4} vs 2tau {:.4} ({:.2}%), slope/stderr = {significance:.2e}, worst second-peak spacing error {:.2}%",
            fit.slope,
            1.0 / t.velocity,
            100.0 * slope_err,
            fit.intercept,
            2.0 * t.tau,
            100.0 * intercept_err,
            100.0 * spacing_err
        ),
    )
}

/// The same study on the full transmitted density, for the record.
fn full_wave_readout() -> String {
    let sys = canonical(8.0);
    let spec = packet();
    let grid = build_energy_grid(&spec, &sys, 2048, 8.0).unwrap();
    let study = arrival_vs_separation(
        &[8.0, 10.0, 12.0],
        &sys,
        &spec,
        &grid,
        Readout::FullWave,
        &DetectionOptions::default(),
    )
    .unwrap();
    let firsts: Vec<String> = study
        .rows
        .iter()
        .map(|r| match r.measured[0] {
            Some(t) => format!(
                "d={}: {t:.3} (scheduled {:.3})",
                r.separation, r.predicted[0]
            ),
            None => format!("d={}: none (scheduled {:.3})", r.separation, r.predicted[0]),
        })
        .collect();
    let fit = match study.fit {
        Some(f) => format!(
            "slope {:.4} vs 1/v {:.4}",
            f.slope,
            1.0 / study.times.velocity
        ),
        None => "no fit".to_string(),
    };
    format!("full-wave first peaks {}; {fit}", firsts.join(", "))
}

fn reflected_peaks() -> (bool, String) {
    let spec = packet();
    let base = canonical(8.0);
    let grid = build_energy_grid(&spec, &base, 2048, 8.0).unwrap();
    let e1 = find_e1(&Transmitted, 0, &base, &spec, &grid, &ParabolicArgmax).unwrap();
    let times = PhaseTimes::at(e1.energy, &base).unwrap();
    let opts = DetectionOptions::default();
    let tolerance = 3.0 * times.tau * opts.step_fraction;
    let ds = [8.0, 10.0, 12.0];
    let measure = |d: f64, n: usize| {
        let sys = base.with_separation(d).unwrap();
        measure_component_peak(&Reflected, n, &sys, &spec, &grid, &times, &opts)
            .unwrap()
            .measured
            .map(|e| e.time)
    };
    let first: Vec<Option<f64>> = ds.iter().map(|&d| measure(d, 0)).collect();
    let second: Vec<Option<f64>> = ds.iter().map(|&d| measure(d, 1)).collect();
    if first.iter().chain(&second).any(Option::is_none) {
        return (
            false,
            format!("missing reflected peaks: {first:?} {second:?}"),
        );
    }
    let first: Vec<f64> = first.into_iter().flatten().collect();
    let second: Vec<f64> = second.into_iter().flatten().collect();
    let spread = first.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - first.iter().copied().fold(f64::INFINITY, f64::min);
    let mut shift_err: f64 = 0.0;
    for i in 1..ds.len() {
        let expected = 2.0 * (ds[i] - ds[0]) / times.velocity;
        shift_err = shift_err.max(relative(second[i] - second[0], expected));
    }
    (
        spread <= tolerance && shift_err <= 0.05,
        format!(
            "first departures {:.4?} (spread {spread:.2e}, tolerance {tolerance:.3}); second-peak shift error {:.2}% of 2 delta_d / v",
            first,
            100.0 * shift_err
        ),
    )
}

fn verdict_determinism() -> (bool, String) {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "a = 5\nL = 13\nE0 = 0.5\ndelta = 0.1\n").unwrap();
    let run = |sub: &str, threads: &str| {
        let out = dir.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_tunnellab"))
            .arg("verdict")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .env("TUNNELLAB_THREADS", threads)
            .output()
            .unwrap();
        (
            status.stdout,
            fs::read(out.join("verdict.txt")).unwrap_or_default(),
        )
    };
    let (stdout1, file1) = run("first", "1");
    let (stdout2, file2) = run("second", "4");
    let ok = !file1.is_empty() && file1 == file2 && stdout1 == stdout2;
    (
        ok,
        format!("two runs, {} bytes each, identical = {ok}", file1.len()),
    )
}

fn main() {
    let checks = vec![
        timed(
            "counterexample exactness",
            Some(Duration::from_secs(1)),
            counterexample_exactness,
        ),
        timed(
            "flux conservation",
            Some(Duration::from_secs(1)),
            flux_conservation,
        ),
        timed(
            "series equivalence",
            Some(Duration::from_secs(1)),
            series_equivalence,
        ),
        timed("transfer-matrix oracle", None, transfer_matrix_agreement),
        timed("applicability audit dichotomy", None, audit_dichotomy),
        timed("single-barrier phase-time plateau", None, hartman_plateau),
        timed(
            "first-peak arrival grows with separation",
            Some(Duration::from_secs(60)),
            first_peak_arrival,
        ),
        timed(
            "reflected-channel timing",
            Some(Duration::from_secs(60)),
            reflected_peaks,
        ),
        timed("verdict determinism", None, verdict_determinism),
    ];
    let mut failed = 0;
    for (i, c) in checks.iter().enumerate() {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {}. {}: {}", i + 1, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    println!("[INFO] {}", full_wave_readout());
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
