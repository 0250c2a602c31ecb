//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Floats are written with Rust's shortest round-trip formatting, so
//! `parse(serialize(c)) == c` holds exactly.

use std::fmt::Write as _;
use std::path::PathBuf;

use tunnellab::model::{build_energy_grid, BarrierSystem, EnergyGrid, PacketSpec};
use tunnellab::packets::{DetectionOptions, Readout};
use tunnellab::spm::{estimator_by_name, CenterEstimator};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mass: f64,
    pub height: f64,
    pub width: f64,
    /// Start of the second barrier, `L`.
    pub offset: f64,
    pub mean: f64,
    pub spread: f64,
    /// Energy quadrature nodes.
    pub nodes: usize,
    /// Half width of the energy window in units of `δ`.
    pub grid_width: f64,
    pub prominence: f64,
    /// Time step as a fraction of the phase time.
    pub t_step: f64,
    pub readout: Readout,
    pub estimator: String,
    /// Separations for arrival studies.
    pub d_list: Vec<f64>,
    /// Highest bounce index reported by schedules and figures.
    pub n_max: usize,
    /// Highest partial-sum order written by `series`.
    pub series_terms: usize,
    /// `τ` of the oscillating counterexample.
    pub counterexample_tau: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mass: 0.5,
            height: 1.0,
            width: 5.0,
            offset: 13.0,
            mean: 0.5,
            spread: 0.1,
            nodes: 2048,
            grid_width: 8.0,
            prominence: 0.05,
            t_step: 0.02,
            readout: Readout::Components,
            estimator: "argmax".to_string(),
            d_list: vec![8.0, 10.0, 12.0],
            n_max: 3,
            series_terms: 20,
            counterexample_tau: 5.0,
            out: PathBuf::from("out"),
        }
    }
}

pub const KEYS: [&str; 17] = [
    "m",
    "V0",
    "a",
    "L",
    "E0",
    "delta",
    "nodes",
    "width",
    "prominence",
    "t_step",
    "readout",
    "estimator",
    "d_list",
    "n_max",
    "series_terms",
    "counterexample_tau",
    "out",
];

fn config_error(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .map_err(|_| config_error(key, format!("`{value}` is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    value
        .parse::<usize>()
        .map_err(|_| config_error(key, format!("`{value}` is not a non-negative integer")))
}

pub fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

/// Splits `key = value`; `None` for blank and comment lines.
fn split_line(line: &str) -> Result<Option<(&str, &str)>, CliError> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return Ok(None);
    }
    let (key, value) = line
        .split_once('=')
        .ok_or_else(|| config_error(line, "expected `key = value`"))?;
    Ok(Some((key.trim(), value.trim())))
}

impl RunConfig {
    /// Parses a whole config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = Self::default();
        for line in text.lines() {
            if let Some((key, value)) = split_line(line)? {
                config.set(key, value)?;
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Applies one `key=value` override. `d` is accepted as a shorthand that
    /// moves the second barrier to `L = a + d`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "m" => self.mass = parse_f64(key, value)?,
            "V0" => self.height = parse_f64(key, value)?,
            "a" => self.width = parse_f64(key, value)?,
            "L" => self.offset = parse_f64(key, value)?,
            "d" => self.offset = self.width + parse_f64(key, value)?,
            "E0" => self.mean = parse_f64(key, value)?,
            "delta" => self.spread = parse_f64(key, value)?,
            "nodes" => self.nodes = parse_usize(key, value)?,
            "width" => self.grid_width = parse_f64(key, value)?,
            "prominence" => self.prominence = parse_f64(key, value)?,
            "t_step" => self.t_step = parse_f64(key, value)?,
            "readout" => {
                self.readout =
                    Readout::by_name(value).map_err(|e| config_error(key, e.to_string()))?
            }
            "estimator" => self.estimator = value.to_string(),
            "d_list" => self.d_list = parse_list(key, value)?,
            "n_max" => self.n_max = parse_usize(key, value)?,
            "series_terms" => self.series_terms = parse_usize(key, value)?,
            "counterexample_tau" => self.counterexample_tau = parse_f64(key, value)?,
            "out" => self.out = PathBuf::from(value),
            other => return Err(config_error(other, "unknown key")),
        }
        Ok(())
    }

    /// Applies `key=value` overrides in order, then re-validates.
    pub fn with_overrides<S: AsRef<str>>(mut self, overrides: &[S]) -> Result<Self, CliError> {
        for item in overrides {
            let item = item.as_ref();
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{item}`")))?;
            self.set(key.trim(), value.trim())?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let list: Vec<String> = self.d_list.iter().map(|d| d.to_string()).collect();
        let pairs: [(&str, String); 17] = [
            ("m", self.mass.to_string()),
            ("V0", self.height.to_string()),
            ("a", self.width.to_string()),
            ("L", self.offset.to_string()),
            ("E0", self.mean.to_string()),
            ("delta", self.spread.to_string()),
            ("nodes", self.nodes.to_string()),
            ("width", self.grid_width.to_string()),
            ("prominence", self.prominence.to_string()),
            ("t_step", self.t_step.to_string()),
            ("readout", self.readout.name().to_string()),
            ("estimator", self.estimator.clone()),
            ("d_list", list.join(",")),
            ("n_max", self.n_max.to_string()),
            ("series_terms", self.series_terms.to_string()),
            ("counterexample_tau", self.counterexample_tau.to_string()),
            ("out", self.out.display().to_string()),
        ];
        for (key, value) in pairs {
            let _ = writeln!(s, "{key} = {value}");
        }
        s
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let sys = self.system()?;
        let spec = self.packet()?;
        spec.check_support(&sys)?;
        if self.nodes < tunnellab::model::MIN_GRID_NODES {
            return Err(config_error(
                "nodes",
                format!("need at least {}", tunnellab::model::MIN_GRID_NODES),
            ));
        }
        if !(self.grid_width.is_finite() && self.grid_width > 0.0) {
            return Err(config_error("width", "must be > 0"));
        }
        if !(self.prominence > 0.0 && self.prominence < 1.0) {
            return Err(config_error("prominence", "must lie in (0, 1)"));
        }
        if !(self.t_step.is_finite() && self.t_step > 0.0) {
            return Err(config_error("t_step", "must be > 0"));
        }
        estimator_by_name(&self.estimator).map_err(|e| config_error("estimator", e.to_string()))?;
        if let Some(d) = self.d_list.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(config_error(
                "d_list",
                format!("separations must be >= 0, got {d}"),
            ));
        }
        if !(self.counterexample_tau.is_finite() && self.counterexample_tau >= 0.0) {
            return Err(config_error("counterexample_tau", "must be >= 0"));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<BarrierSystem, CliError> {
        Ok(BarrierSystem::new(
            self.mass,
            self.height,
            self.width,
            self.offset,
        )?)
    }

    pub fn packet(&self) -> Result<PacketSpec, CliError> {
        Ok(PacketSpec::new(self.mean, self.spread)?)
    }

    pub fn grid(&self) -> Result<EnergyGrid, CliError> {
        Ok(build_energy_grid(
            &self.packet()?,
            &self.system()?,
            self.nodes,
            self.grid_width,
        )?)
    }

    pub fn detection(&self) -> DetectionOptions {
        DetectionOptions {
            prominence: self.prominence,
            step_fraction: self.t_step,
        }
    }

    pub fn center_estimator(&self) -> Result<Box<dyn CenterEstimator>, CliError> {
        estimator_by_name(&self.estimator).map_err(|e| config_error("estimator", e.to_string()))
    }
}
