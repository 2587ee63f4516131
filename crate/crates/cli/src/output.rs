//! CSV files with a commented header, the MANIFEST and plot scripts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::CliError;

pub const TOOL_VERSION: &str = concat!("bathent ", env!("CARGO_PKG_VERSION"));

/// 15 significant digits in scientific notation; NaN for missing values.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.14e}")
    }
}

/// A cell: either a number or a short label.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

pub struct CsvFile {
    pub path: PathBuf,
    out: BufWriter<File>,
    columns: usize,
    pub rows: usize,
}

impl CsvFile {
    /// Creates `dir/name` and writes the comment block and header row. The
    /// first line carries the tool version; everything after it depends only
    /// on the configuration and the computed data.
    pub fn create(dir: &Path, name: &str, cfg: &RunConfig, columns: &[&str]) -> Result<Self, CliError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut out = BufWriter::new(file);
        let mut head = format!("# tool = {TOOL_VERSION}\n");
        for (k, v) in cfg.echo() {
            head.push_str(&format!("# {k} = {v}\n"));
        }
        head.push_str(&columns.join(","));
        head.push('\n');
        out.write_all(head.as_bytes()).map_err(|e| CliError::io(&path, e))?;
        Ok(Self {
            path,
            out,
            columns: columns.len(),
            rows: 0,
        })
    }

    pub fn comment(&mut self, text: &str) -> Result<(), CliError> {
        writeln!(self.out, "# {text}").map_err(|e| CliError::io(&self.path, e))
    }

    pub fn row(&mut self, cells: &[Cell]) -> Result<(), CliError> {
        debug_assert_eq!(cells.len(), self.columns);
        let line: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::Num(x) => format_number(*x),
                Cell::Text(s) => s.clone(),
            })
            .collect();
        writeln!(self.out, "{}", line.join(",")).map_err(|e| CliError::io(&self.path, e))?;
        self.rows += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(PathBuf, usize), CliError> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok((self.path, self.rows))
    }
}

/// Files written by a run and whether it completed.
#[derive(Debug, Default)]
pub struct Manifest {
    pub files: Vec<(String, Option<usize>)>,
}

impl Manifest {
    pub fn add_csv(&mut self, path: &Path, rows: usize) {
        self.files.push((file_name(path), Some(rows)));
    }

    pub fn add_file(&mut self, path: &Path) {
        self.files.push((file_name(path), None));
    }

    pub fn write(&self, cfg: &RunConfig, error: Option<&CliError>) -> Result<(), CliError> {
        let path = cfg.output_dir.join("MANIFEST");
        let mut text = format!("tool = {TOOL_VERSION}\n");
        for (k, v) in cfg.echo() {
            text.push_str(&format!("{k} = {v}\n"));
        }
        match error {
            None => text.push_str("state = complete\n"),
            Some(e) => {
                text.push_str("state = partial\n");
                text.push_str(&format!("error = {}\n", e.to_string().replace('\n', " ")));
            }
        }
        for (name, rows) in &self.files {
            match rows {
                Some(n) => text.push_str(&format!("file = {name} rows={n}\n")),
                None => text.push_str(&format!("file = {name}\n")),
            }
        }
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Kinds of figures the plot scripts reproduce.
#[derive(Debug, Clone, Copy)]
pub enum Figure {
    /// E∞ against r, one curve per temperature.
    AsymptoticSweep,
    /// E(t), one curve per distance, dashed asymptotes.
    TimeTrace,
    /// Critical distance against 1/Ω.
    CriticalDistance,
    /// Numerical E against the short-time expansion.
    ShortTime,
    /// Pipeline–oracle deviation against t.
    OracleDeviation,
    /// d₀ against 1/Ω with fitted lines.
    SlopeFit,
}

/// Writes `plot_<stem>.py`, a matplotlib script reading `csv_name`.
pub fn write_plot_script(dir: &Path, csv_name: &str, figure: Figure) -> Result<PathBuf, CliError> {
    let stem = csv_name.trim_end_matches(".csv");
    let path = dir.join(format!("plot_{stem}.py"));
    let body = match figure {
        Figure::AsymptoticSweep => {
            "for T in sorted(set(d['T'])):\n    m = d['T'] == T\n    ax.plot(d['r'][m], d['E'][m], label=f'T = {T:g}')\nax.set_xlabel('r [c/ω₀]')\nax.set_ylabel('E∞')\n"
        }
        Figure::TimeTrace => {
            "for r in sorted(set(d['r'])):\n    m = d['r'] == r\n    line, = ax.plot(d['t'][m], d['E'][m], label=f'r = {r:g}')\n    ax.plot(d['t'][m], d['E_asymptote'][m], '--', color=line.get_color())\nax.set_xlabel('t [1/ω₀]')\nax.set_ylabel('E')\n"
        }
        Figure::CriticalDistance => {
            "for T in sorted(set(d['T'])):\n    m = d['T'] == T\n    ax.plot(1 / d['omega_cut'][m], d['distance'][m], 'o', label=f'T = {T:g}')\nax.set_xlabel('1/Ω [1/ω₀]')\nax.set_ylabel('critical distance [c/ω₀]')\n"
        }
        Figure::ShortTime => {
            "for r in sorted(set(d['r'])):\n    m = d['r'] == r\n    line, = ax.plot(d['omega_t'][m], d['E'][m], label=f'r = {r:g}')\n    ax.plot(d['omega_t'][m], d['E_expansion'][m], '--', color=line.get_color())\nax.set_xscale('log')\nax.set_xlabel('Ωt')\nax.set_ylabel('E')\n"
        }
        Figure::OracleDeviation => {
            "for r in sorted(set(d['r'])):\n    for T in sorted(set(d['T'])):\n        m = (d['r'] == r) & (d['T'] == T)\n        ax.semilogy(d['t'][m], d['max_abs_dC'][m], label=f'r = {r:g}, T = {T:g}')\nax.axhline(1e-3, color='k', ls=':')\nax.set_xlabel('t [1/ω₀]')\nax.set_ylabel('max |ΔC|')\n"
        }
        Figure::SlopeFit => {
            "for T in sorted(set(d['T'])):\n    m = d['T'] == T\n    ax.plot(d['inv_omega_cut'][m], d['d0'][m], 'o', label=f'T = {T:g}')\nax.set_xlabel('1/Ω [1/ω₀]')\nax.set_ylabel('d₀ [c/ω₀]')\n"
        }
    };
    let script = format!(
        "# Generated by {TOOL_VERSION}; run with python3 from the output directory.\nimport numpy as np\nimport matplotlib.pyplot as plt\n\nrows = [line for line in open('{csv_name}', encoding='utf-8') if not line.startswith('#')]\nd = np.genfromtxt(rows, delimiter=',', names=True, dtype=None, encoding='utf-8')\nfig, ax = plt.subplots()\n{body}ax.legend()\nfig.savefig('{stem}.pdf', bbox_inches='tight')\n"
    );
    fs::write(&path, script).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_fifteen_digits() {
        assert_eq!(format_number(0.1), "1.00000000000000e-1");
        assert_eq!(format_number(-1234.5), "-1.23450000000000e3");
        assert_eq!(format_number(0.0), "0.00000000000000e0");
        assert_eq!(format_number(f64::NAN), "nan");
        let x = std::f64::consts::PI;
        let back: f64 = format_number(x).parse().unwrap();
        assert!((back - x).abs() < 1e-14);
    }
}
