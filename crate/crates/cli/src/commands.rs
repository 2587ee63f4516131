//! One function per subcommand. Parameter points run in parallel; rows
//! are written in axis order by a single writer so output is deterministic.

use rayon::prelude::*;

use bathent_core::analysis::{
    find_d0, find_d1, fit_slope, initial_slope, short_time_expansion, short_time_slope, trace_on_grid,
};
use bathent_core::covariance::{covariance_asymptotic, covariance_series, ground_state_covariance};
use bathent_core::entanglement::log_negativity;
use bathent_core::greens::greens_time;
use bathent_core::oracle::{bath_for_horizon, NormalModeOracle};
use bathent_core::{CriticalDistanceResult, DurbinSettings, ModelParams};

use crate::config::{Command, DistanceKind, RunConfig};
use crate::output::{write_plot_script, Cell, CsvFile, Figure, Manifest};
use crate::CliError;

/// Oracle comparison limits on max |ΔC| and |ΔE|.
pub const ORACLE_TOL_C: f64 = 1e-3;
pub const ORACLE_TOL_E: f64 = 2e-3;
/// Bisection tolerance on distances.
pub const DISTANCE_TOL: f64 = 1e-3;

pub fn dispatch(cfg: &RunConfig, manifest: &mut Manifest) -> Result<(), CliError> {
    match cfg.command {
        Command::AsymptoticSweep => asymptotic_sweep(cfg, manifest),
        Command::TimeTrace => time_trace(cfg, manifest),
        Command::CriticalDistance => critical_distance(cfg, manifest),
        Command::ShortTimeCheck => short_time_check(cfg, manifest),
        Command::OracleCompare => oracle_compare(cfg, manifest),
        Command::SlopeFit => slope_fit(cfg, manifest),
    }
}

fn params(gamma: f64, omega_cut: f64, temperature: f64, distance: f64) -> Result<ModelParams, CliError> {
    Ok(ModelParams::new(gamma, omega_cut, temperature, distance)?)
}

/// Writes the rows of every successful leading point, then reports the
/// first failure so that partial sweeps are flushed.
fn write_ordered<T>(
    file: &mut CsvFile,
    results: Vec<Result<T, CliError>>,
    mut emit: impl FnMut(&mut CsvFile, T) -> Result<(), CliError>,
) -> Result<(), CliError> {
    for r in results {
        emit(file, r?)?;
    }
    Ok(())
}

fn finish(
    cfg: &RunConfig,
    manifest: &mut Manifest,
    file: CsvFile,
    figure: Figure,
    outcome: Result<(), CliError>,
) -> Result<(), CliError> {
    let (path, rows) = file.finish()?;
    manifest.add_csv(&path, rows);
    if cfg.emit_plot_script {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let script = write_plot_script(&cfg.output_dir, &name, figure)?;
        manifest.add_file(&script);
    }
    outcome
}

fn asymptotic_sweep(cfg: &RunConfig, manifest: &mut Manifest) -> Result<(), CliError> {
    let mut file = CsvFile::create(&cfg.output_dir, "fig1.csv", cfg, &["gamma", "omega_cut", "T", "r", "E"])?;
    let mut points = Vec::new();
    for (g, w, t) in cfg.bath_points() {
        for &r in &cfg.distance.values {
            if r > 0.0 {
                points.push((g, w, t, r));
            }
        }
    }
    if cfg.distance.values.contains(&0.0) {
        file.comment("r = 0 omitted: the relative coordinate is undamped and has no stationary state")?;
    }
    type Point = (f64, f64, f64, f64, f64);
    let results: Vec<Result<Point, CliError>> = points
        .par_iter()
        .map(|&(g, w, t, r)| {
            let c = covariance_asymptotic(&params(g, w, t, r)?, None, cfg.tol)?;
            Ok((g, w, t, r, log_negativity(&c)?))
        })
        .collect();
    let outcome = write_ordered(&mut file, results, |f, (g, w, t, r, e)| {
        f.row(&[g.into(), w.into(), t.into(), r.into(), e.into()])
    });
    finish(cfg, manifest, file, Figure::AsymptoticSweep, outcome)
}

fn output_times(cfg: &RunConfig) -> Vec<f64> {
    let n = (cfg.t_max / cfg.dt - 1e-9).ceil() as usize;
    (0..=n).map(|k| (k as f64 * cfg.dt).min(cfg.t_max)).collect()
}

fn distance_points(cfg: &RunConfig) -> Vec<(f64, f64, f64, f64)> {
    let mut points = Vec::new();
    for (g, w, t) in cfg.bath_points() {
        for &r in &cfg.distance.values {
            points.push((g, w, t, r));
        }
    }
    points
}

fn time_trace(cfg: &RunConfig, manifest: &mut Manifest) -> Result<(), CliError> {
    let mut file = CsvFile::create(
        &cfg.output_dir,
        "fig2.csv",
        cfg,
        &["gamma", "omega_cut", "T", "r", "t", "E", "E_asymptote"],
    )?;
    let times = output_times(cfg);
    let results: Vec<_> = distance_points(cfg)
        .par_iter()
        .map(|&(g, w, t, r)| Ok(trace_on_grid(&params(g, w, t, r)?, &times, cfg.tol)?))
        .collect();
    let outcome = write_ordered(&mut file, results, |f, tr| {
        let p = tr.params;
        let asym = tr.asymptote.unwrap_or(f64::NAN);
        for (&t, &e) in tr.times.iter().zip(&tr.values) {
            f.row(&[
                p.gamma.into(),
                p.omega_cut.into(),
                p.temperature.into(),
                p.distance.into(),
                t.into(),
                e.into(),
                asym.into(),
            ])?;
        }
        Ok(())
    });
    finish(cfg, manifest, file, Figure::TimeTrace, outcome)
}

fn critical_distance(cfg: &RunConfig, manifest: &mut Manifest) -> Result<(), CliError> {
    let mut file = CsvFile::create(
        &cfg.output_dir,
        "critical.csv",
        cfg,
        &[
            "gamma",
            "omega_cut",
            "T",
            "kind",
            "distance",
            "bracket_lo",
            "bracket_hi",
            "a",
            "evaluations",
        ],
    )?;
    let results: Vec<Result<(f64, f64, f64, CriticalDistanceResult), CliError>> = cfg
        .bath_points()
        .par_iter()
        .map(|&(g, w, t)| {
            let p = params(g, w, t, 0.0)?;
            let res = match cfg.kind {
                DistanceKind::D0 => find_d0(&p, cfg.bracket(), DISTANCE_TOL)?,
                DistanceKind::D1 => {
                    let bracket = if cfg.distance_explicit {
                        cfg.bracket()
                    } else {
                        (1.5 / w, 10.0 / w)
                    };
                    find_d1(&p, bracket, DISTANCE_TOL)?
                }
            };
            Ok((g, w, t, res))
        })
        .collect();
    let kind = cfg.kind.to_string();
    let outcome = write_ordered(&mut file, results, |f, (g, w, t, res)| {
        let d = res.d0.or(res.d1).unwrap_or(f64::NAN);
        f.row(&[
            g.into(),
            w.into(),
            t.into(),
            kind.as_str().into(),
            d.into(),
            res.bracket.0.into(),
            res.bracket.1.into(),
            res.slope_a.into(),
            (res.evaluations as f64).into(),
        ])
    });
    finish(cfg, manifest, file, Figure::CriticalDistance, outcome)
}

fn short_time_check(cfg: &RunConfig, manifest: &mut Manifest) -> Result<(), CliError> {
    let mut slopes = CsvFile::create(
        &cfg.output_dir,
        "short_time_slope.csv",
        cfg,
        &[
            "gamma",
            "omega_cut",
            "T",
            "r",
            "measured_slope",
            "expansion_slope",
            "ratio",
        ],
    )?;
    let mut curves = CsvFile::create(
        &cfg.output_dir,
        "short_time.csv",
        cfg,
        &["gamma", "omega_cut", "T", "r", "omega_t", "E", "E_expansion"],
    )?;
    let omega_ts: Vec<f64> = (0..=24).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 24.0)).collect();
    type Point = (ModelParams, f64, Vec<(f64, f64, f64)>);
    let results: Vec<Result<Point, CliError>> = distance_points(cfg)
        .par_iter()
        .map(|&(g, w, t, r)| {
            let p = params(g, w, t, r)?;
            let measured = initial_slope(&p)?;
            let times: Vec<f64> = omega_ts.iter().map(|x| x / w).collect();
            let tr = trace_on_grid(&p, &times, cfg.tol)?;
            let rows = omega_ts
                .iter()
                .zip(&times)
                .zip(&tr.values)
                .map(|((&x, &time), &e)| Ok((x, e, short_time_expansion(time, &p)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok((p, measured, rows))
        })
        .collect();
    let mut outcome = Ok(());
    for r in results {
        let (p, measured, rows) = match r {
            Ok(x) => x,
            Err(e) => {
                outcome = Err(e);
                break;
            }
        };
        let base: [Cell; 4] = [
            p.gamma.into(),
            p.omega_cut.into(),
            p.temperature.into(),
            p.distance.into(),
        ];
        let expected = short_time_slope(&p);
        let mut row = base.to_vec();
        row.extend([measured.into(), expected.into(), (measured / expected).into()]);
        slopes.row(&row)?;
        for (x, e, approx) in rows {
            let mut row = base.to_vec();
            row.extend([x.into(), e.into(), approx.into()]);
            curves.row(&row)?;
        }
    }
    let (path, rows) = slopes.finish()?;
    manifest.add_csv(&path, rows);
    finish(cfg, manifest, curves, Figure::ShortTime, outcome)
}

fn oracle_compare(cfg: &RunConfig, manifest: &mut Manifest) -> Result<(), CliError> {
    let mut file = CsvFile::create(
        &cfg.output_dir,
        "deviation.csv",
        cfg,
        &[
            "gamma",
            "omega_cut",
            "T",
            "r",
            "t",
            "max_abs_dC",
            "abs_dE",
            "E_pipeline",
            "E_oracle",
        ],
    )?;
    file.comment(&format!(
        "oracle: {} modes, midpoint grid with t_rec/2 > t_max; limits |dC| <= {ORACLE_TOL_C}, |dE| <= {ORACLE_TOL_E}",
        cfg.oracle_modes
    ))?;
    let times = output_times(cfg);
    type Row = (f64, f64, f64, f64);
    let results: Vec<Result<(ModelParams, Vec<Row>), CliError>> = distance_points(cfg)
        .par_iter()
        .map(|&(g, w, t, r)| {
            let p = params(g, w, t, r)?;
            let greens = greens_time(&times, &p, &DurbinSettings::default())?;
            let pipeline = covariance_series(&times, &ground_state_covariance(), &greens, &p, cfg.tol)?;
            let bath = bath_for_horizon(&p, cfg.oracle_modes, cfg.t_max)?;
            let oracle = NormalModeOracle::new(&p, bath)?.reduced_covariance(&times)?;
            let rows = times
                .iter()
                .zip(pipeline.iter().zip(&oracle))
                .map(|(&t, (a, b))| {
                    let (ea, eb) = (log_negativity(a)?, log_negativity(b)?);
                    Ok((t, a.max_deviation(b), ea, eb))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok((p, rows))
        })
        .collect();
    let (mut max_dc, mut max_de) = (0.0f64, 0.0f64);
    let outcome = write_ordered(&mut file, results, |f, (p, rows)| {
        for (t, dc, ea, eb) in rows {
            max_dc = max_dc.max(dc);
            max_de = max_de.max((ea - eb).abs());
            f.row(&[
                p.gamma.into(),
                p.omega_cut.into(),
                p.temperature.into(),
                p.distance.into(),
                t.into(),
                dc.into(),
                (ea - eb).abs().into(),
                ea.into(),
                eb.into(),
            ])?;
        }
        Ok(())
    });
    let outcome = outcome.and_then(|_| {
        if max_dc > ORACLE_TOL_C || max_de > ORACLE_TOL_E {
            return Err(CliError::OracleDisagreement {
                max_dc,
                max_de,
                limit_dc: ORACLE_TOL_C,
                limit_de: ORACLE_TOL_E,
            });
        }
        Ok(())
    });
    finish(cfg, manifest, file, Figure::OracleDeviation, outcome)
}

fn slope_fit(cfg: &RunConfig, manifest: &mut Manifest) -> Result<(), CliError> {
    let mut samples = CsvFile::create(
        &cfg.output_dir,
        "slope_samples.csv",
        cfg,
        &["gamma", "T", "omega_cut", "inv_omega_cut", "d0"],
    )?;
    let mut fits = CsvFile::create(
        &cfg.output_dir,
        "slope_fit.csv",
        cfg,
        &["gamma", "T", "a", "residual", "samples_used", "status"],
    )?;
    let mut groups = Vec::new();
    for &g in &cfg.gamma.values {
        for &t in &cfg.temperature.values {
            groups.push((g, t));
        }
    }
    type Group = (f64, f64, Vec<(f64, f64)>);
    let results: Vec<Result<Group, CliError>> = groups
        .par_iter()
        .map(|&(g, t)| {
            let d0s = cfg
                .omega_cut
                .values
                .par_iter()
                .map(|&w| {
                    let res = find_d0(&params(g, w, t, 0.0)?, cfg.bracket(), DISTANCE_TOL)?;
                    Ok((w, res.d0.unwrap_or(f64::NAN)))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok((g, t, d0s))
        })
        .collect();
    let mut outcome = Ok(());
    for r in results {
        let (g, t, d0s) = match r {
            Ok(x) => x,
            Err(e) => {
                outcome = Err(e);
                break;
            }
        };
        for &(w, d) in &d0s {
            samples.row(&[g.into(), t.into(), w.into(), (1.0 / w).into(), d.into()])?;
        }
        let pts: Vec<(f64, f64)> = d0s.iter().map(|&(w, d)| (1.0 / w, d)).collect();
        match fit_slope(&pts) {
            Ok(fit) => fits.row(&[
                g.into(),
                t.into(),
                fit.slope.into(),
                fit.residual.into(),
                (fit.samples_used as f64).into(),
                "ok".into(),
            ])?,
            Err(e) => {
                let status = match &e {
                    bathent_core::Error::IllConditionedFit { .. } => "ill-conditioned",
                    _ => "failed",
                };
                fits.row(&[
                    g.into(),
                    t.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    0.0.into(),
                    status.into(),
                ])?;
                if outcome.is_ok() {
                    outcome = Err(e.into());
                }
            }
        }
    }
    let (path, rows) = samples.finish()?;
    manifest.add_csv(&path, rows);
    finish(cfg, manifest, fits, Figure::SlopeFit, outcome)
}
