//! Run configuration: flat key=value files overridden by command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    AsymptoticSweep,
    TimeTrace,
    CriticalDistance,
    ShortTimeCheck,
    OracleCompare,
    SlopeFit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::AsymptoticSweep => "asymptotic-sweep",
            Command::TimeTrace => "time-trace",
            Command::CriticalDistance => "critical-distance",
            Command::ShortTimeCheck => "short-time-check",
            Command::OracleCompare => "oracle-compare",
            Command::SlopeFit => "slope-fit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceKind {
    /// Where the stationary entanglement vanishes.
    D0,
    /// Where the delayed second peak vanishes.
    D1,
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceKind::D0 => "d0",
            DistanceKind::D1 => "d1",
        })
    }
}

/// Flags shared by every command; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Damping constant γ: scalar, list a,b,c or range start:stop:step
    #[arg(long, global = true)]
    pub gamma: Option<String>,
    /// Cutoff frequency Ω (scalar, list or range)
    #[arg(long, global = true)]
    pub omega_cut: Option<String>,
    /// Bath temperature (scalar, list or range)
    #[arg(long, global = true)]
    pub temperature: Option<String>,
    /// Oscillator separation r (scalar, list or range)
    #[arg(long, global = true)]
    pub distance: Option<String>,
    /// Last output time
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    /// Output time step
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Accuracy target of covariance evaluations
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Number of bath modes of the finite-bath oracle
    #[arg(long, global = true)]
    pub oracle_modes: Option<usize>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory receiving CSV files and the MANIFEST
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// key=value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Also write a matplotlib script for each CSV
    #[arg(long, global = true)]
    pub emit_plot_script: bool,
}

/// A parameter axis: a single value, a list or an arithmetic range.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub spec: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn parse(key: &str, spec: &str) -> Result<Self, CliError> {
        let bad = |why: String| CliError::Config(format!("{key} = {spec}: {why}"));
        let number = |s: &str| -> Result<f64, CliError> {
            let x: f64 = s
                .trim()
                .parse()
                .map_err(|_| bad(format!("`{}` is not a number", s.trim())))?;
            if !x.is_finite() {
                return Err(bad("values must be finite".into()));
            }
            Ok(x)
        };
        let spec = spec.trim();
        let values = if spec.contains(':') {
            let parts: Vec<&str> = spec.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("ranges are start:stop:step".into()));
            }
            let (start, stop, step) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
            if !(step > 0.0) || stop < start {
                return Err(bad("need step > 0 and start ≤ stop".into()));
            }
            let n = ((stop - start) / step * (1.0 + 1e-12) + 1e-9).floor() as usize;
            if n > 1_000_000 {
                return Err(bad("range has too many points".into()));
            }
            // k·step rather than accumulation keeps the grid reproducible
            (0..=n).map(|k| start + k as f64 * step).collect()
        } else {
            spec.split(',').map(number).collect::<Result<Vec<_>, _>>()?
        };
        if values.is_empty() {
            return Err(bad("empty axis".into()));
        }
        Ok(Self {
            spec: spec.to_string(),
            values,
        })
    }

    fn scalar(x: f64) -> Self {
        Self {
            spec: x.to_string(),
            values: vec![x],
        }
    }

    fn list(xs: &[f64]) -> Self {
        Self {
            spec: xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            values: xs.to_vec(),
        }
    }
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub gamma: Axis,
    pub omega_cut: Axis,
    pub temperature: Axis,
    pub distance: Axis,
    pub t_max: f64,
    pub dt: f64,
    pub tol: f64,
    pub oracle_modes: usize,
    pub jobs: usize,
    pub output_dir: PathBuf,
    pub emit_plot_script: bool,
    pub kind: DistanceKind,
    /// False when the distance axis is the command's default.
    pub distance_explicit: bool,
}

const KNOWN_KEYS: &[&str] = &[
    "gamma",
    "omega_cut",
    "temperature",
    "distance",
    "t_max",
    "dt",
    "tol",
    "oracle_modes",
    "jobs",
    "output_dir",
    "emit_plot_script",
    "kind",
];

/// Reads `key = value` lines; `#` starts a comment, dashes in keys are
/// accepted as underscores.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parse_scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key} = {value}: cannot parse")))
}

impl RunConfig {
    /// Merges defaults, the config file and the flags (in increasing priority).
    pub fn resolve(command: Command, kind: Option<DistanceKind>, flags: &Overrides) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        let pick = |key: &str, flag: Option<String>| flag.or_else(|| file.get(key).cloned());
        let axis = |key: &str, flag: &Option<String>, default: Axis| -> Result<Axis, CliError> {
            match pick(key, flag.clone()) {
                Some(s) => Axis::parse(key, &s),
                None => Ok(default),
            }
        };
        let default_distance = match command {
            Command::AsymptoticSweep => Axis::parse("distance", "0:0.25:0.005")?,
            Command::TimeTrace => Axis::list(&[0.0, 0.05, 0.1, 0.15]),
            Command::CriticalDistance => Axis::list(&[0.002, 2.0]),
            Command::ShortTimeCheck => Axis::list(&[0.0, 0.1, 0.2]),
            Command::OracleCompare => Axis::scalar(0.1),
            Command::SlopeFit => Axis::list(&[0.002, 2.0]),
        };
        let default_cut = match command {
            Command::SlopeFit => Axis::list(&[2.0, 5.0, 10.0, 20.0]),
            _ => Axis::scalar(10.0),
        };
        let (default_t_max, default_dt) = match command {
            Command::OracleCompare => (20.0, 0.5),
            _ => (30.0, 0.01),
        };
        let scalar_f64 = |key: &str, flag: Option<f64>, default: f64| -> Result<f64, CliError> {
            match flag {
                Some(x) => Ok(x),
                None => file.get(key).map(|v| parse_scalar(key, v)).unwrap_or(Ok(default)),
            }
        };
        let jobs = match flags.jobs {
            Some(j) => j,
            None => match file.get("jobs") {
                Some(v) => parse_scalar("jobs", v)?,
                None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            },
        };
        let oracle_modes = match flags.oracle_modes {
            Some(n) => n,
            None => file
                .get("oracle_modes")
                .map(|v| parse_scalar("oracle_modes", v))
                .unwrap_or(Ok(2000))?,
        };
        let output_dir = flags
            .output_dir
            .clone()
            .or_else(|| file.get("output_dir").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let emit_plot_script = flags.emit_plot_script
            || file
                .get("emit_plot_script")
                .map(|v| parse_scalar::<bool>("emit_plot_script", v))
                .transpose()?
                .unwrap_or(false);
        let kind = match kind {
            Some(k) => k,
            None => match file.get("kind").map(String::as_str) {
                None | Some("d0") => DistanceKind::D0,
                Some("d1") => DistanceKind::D1,
                Some(other) => return Err(CliError::Config(format!("kind = {other}: expected d0 or d1"))),
            },
        };
        let cfg = Self {
            command,
            gamma: axis("gamma", &flags.gamma, Axis::scalar(1.0))?,
            omega_cut: axis("omega_cut", &flags.omega_cut, default_cut)?,
            temperature: axis("temperature", &flags.temperature, Axis::scalar(0.0))?,
            distance: axis("distance", &flags.distance, default_distance)?,
            t_max: scalar_f64("t_max", flags.t_max, default_t_max)?,
            dt: scalar_f64("dt", flags.dt, default_dt)?,
            tol: scalar_f64("tol", flags.tol, 1e-6)?,
            oracle_modes,
            jobs,
            output_dir,
            emit_plot_script,
            kind,
            distance_explicit: pick("distance", flags.distance.clone()).is_some(),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let positive = |key: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(CliError::Config(format!("{key} must be positive and finite, got {x}")))
            }
        };
        positive("t_max", self.t_max)?;
        positive("dt", self.dt)?;
        positive("tol", self.tol)?;
        if self.dt > self.t_max {
            return Err(CliError::Config(format!(
                "dt = {} exceeds t_max = {}",
                self.dt, self.t_max
            )));
        }
        if self.jobs == 0 {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        if matches!(self.command, Command::CriticalDistance | Command::SlopeFit) && self.distance.values.len() < 2 {
            return Err(CliError::Config(
                "the distance axis is the bisection bracket and needs two values".into(),
            ));
        }
        Ok(())
    }

    /// Every resolved setting as `key = value`, in a fixed order.
    pub fn echo(&self) -> Vec<(String, String)> {
        vec![
            ("command".into(), self.command.name().into()),
            ("gamma".into(), self.gamma.spec.clone()),
            ("omega_cut".into(), self.omega_cut.spec.clone()),
            ("temperature".into(), self.temperature.spec.clone()),
            ("distance".into(), self.distance.spec.clone()),
            ("t_max".into(), self.t_max.to_string()),
            ("dt".into(), self.dt.to_string()),
            ("tol".into(), self.tol.to_string()),
            ("oracle_modes".into(), self.oracle_modes.to_string()),
            ("kind".into(), self.kind.to_string()),
            ("emit_plot_script".into(), self.emit_plot_script.to_string()),
        ]
    }

    /// All (γ, Ω, T) combinations in axis order.
    pub fn bath_points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &g in &self.gamma.values {
            for &w in &self.omega_cut.values {
                for &t in &self.temperature.values {
                    out.push((g, w, t));
                }
            }
        }
        out
    }

    /// The distance axis read as a bisection bracket.
    pub fn bracket(&self) -> (f64, f64) {
        let v = &self.distance.values;
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes() {
        assert_eq!(Axis::parse("x", "1.5").unwrap().values, vec![1.5]);
        assert_eq!(Axis::parse("x", "0, 0.1,0.2").unwrap().values, vec![0.0, 0.1, 0.2]);
        let r = Axis::parse("x", "0:0.25:0.005").unwrap().values;
        assert_eq!(r.len(), 51);
        assert_eq!(r[50], 0.25);
        assert_eq!(Axis::parse("x", "0:1:0.3").unwrap().values.len(), 4);
        for bad in ["", "a", "1:0:0.1", "0:1:0", "0:1", "nan", "1,,2"] {
            assert!(Axis::parse("x", bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_file_and_flag_priority() {
        let text = "# comment\ngamma = 10\nomega-cut = 5 # trailing\ndistance = 0.1,0.2\n";
        let map = parse_config(text).unwrap();
        assert_eq!(map["omega_cut"], "5");
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("gamma 1").is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, text).unwrap();
        let flags = Overrides {
            config: Some(path),
            gamma: Some("2".into()),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(Command::TimeTrace, None, &flags).unwrap();
        assert_eq!(cfg.gamma.values, vec![2.0]);
        assert_eq!(cfg.omega_cut.values, vec![5.0]);
        assert_eq!(cfg.distance.values, vec![0.1, 0.2]);
        assert_eq!(cfg.t_max, 30.0);
    }

    #[test]
    fn rejects_inconsistent_numerics() {
        let flags = Overrides {
            dt: Some(5.0),
            t_max: Some(1.0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(Command::TimeTrace, None, &flags).is_err());
        let flags = Overrides {
            jobs: Some(0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(Command::TimeTrace, None, &flags).is_err());
        let flags = Overrides {
            distance: Some("0.1".into()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(Command::CriticalDistance, None, &flags).is_err());
    }
}
