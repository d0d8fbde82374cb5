//! Subcommand implementations. Each returns the process exit status through
//! [`CliError::exit_code`].

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mbprop::analysis::{self, integrated_signal, power_spectrum, AnalysisError, ScanResult};
use mbprop::constants::FS;
use mbprop::solver::{convergence_check, propagate, RunConfig, SimulationRecord, SolverError};
use mbprop::validate;
use thiserror::Error;

use crate::config::{self, ConfigFile};
use crate::output::{self, csv, field_csv, probes_csv, Manifest};
use crate::svg::{line_chart, Series};
use crate::fmt_f64;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: configuration, arguments, files.
    #[error("{0}")]
    Input(String),
    /// The computation itself failed or a check did not pass.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::StateDiverged { .. } | SolverError::FieldDiverged { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Scan { value, source } => {
                let inner = CliError::from(source);
                let msg = format!("run at swept value {}: {inner}", fmt_f64(value));
                match inner {
                    CliError::Input(_) => CliError::Input(msg),
                    CliError::Numerical(_) => CliError::Numerical(msg),
                }
            }
            AnalysisError::OutOfRange(_) | AnalysisError::NotIncreasing | AnalysisError::Pool(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

pub struct Globals {
    pub out: PathBuf,
    pub jobs: usize,
    pub logy: bool,
}

impl Globals {
    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        output::write(&self.out, name, contents).map_err(|e| io_err(&self.out.join(name), e))
    }
}

/// Configuration text and its parsed form; no path means reference values.
pub fn load(path: Option<&Path>) -> Result<(String, ConfigFile), CliError> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| io_err(p, e))?,
        None => String::new(),
    };
    let cfg = config::parse(&text).map_err(|e| {
        let origin = path.map(|p| p.display().to_string()).unwrap_or_else(|| "<reference>".into());
        CliError::Input(format!("{origin}: {e}"))
    })?;
    Ok((text, cfg))
}

fn write_run(g: &Globals, command: &str, text: &str, cfg: &RunConfig, rec: &SimulationRecord, start: Instant) -> Result<(), CliError> {
    let grid = &rec.grid_echo;
    g.write("omega1_out.csv", &field_csv(grid, &rec.omega1_out))?;
    g.write("omega_s_out.csv", &field_csv(grid, &rec.omega_s_out))?;
    g.write("rho_probes.csv", &probes_csv(rec))?;
    let mut m = Manifest::new(command, text);
    m.run_config(cfg);
    m.num("integrated_signal", integrated_signal(rec));
    if analysis::has_seed(cfg) {
        m.num("input_signal", analysis::input_signal(rec));
    }
    g.write("manifest.txt", &m.render(start.elapsed().as_secs_f64()))
}

pub fn run(g: &Globals, path: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let (text, cfg) = load(path)?;
    let rc = cfg.run_config();
    let rec = propagate(&rc)?;
    write_run(g, "run", &text, &rc, &rec, start)?;
    println!("nt = {}, integrated signal = {:e} rad^2/s", rec.grid_echo.nt, integrated_signal(&rec));
    Ok(())
}

pub fn seed_run(g: &Globals, path: Option<&Path>, delay_fs: Option<f64>) -> Result<(), CliError> {
    let start = Instant::now();
    let (text, mut cfg) = load(path)?;
    if let Some(d) = delay_fs {
        cfg.seed.center = cfg.pump.center + d * FS;
    }
    if !(cfg.seed.amplitude > 0.0) {
        return Err(CliError::Input("seed-run needs [pulses] seed_amplitude > 0".into()));
    }
    let rc = cfg.run_config();
    rc.validate()?;
    let rec = propagate(&rc)?;
    write_run(g, "seed-run", &text, &rc, &rec, start)?;
    let (inp, out) = (analysis::input_signal(&rec), integrated_signal(&rec));
    println!("seed energy in = {inp:e}, out = {out:e}, gain = {}", fmt_f64(out / inp));
    Ok(())
}

fn scan_plot(g: &Globals, title: &str, x_label: &str, points: &[(f64, f64)]) -> Result<(), CliError> {
    let svg = line_chart(title, x_label, "integral [rad^2/s]", &[Series { label: "signal", points }], g.logy);
    g.write("scan.svg", &svg)
}

fn scan_manifest(g: &Globals, command: &str, text: &str, base: &RunConfig, start: Instant) -> Result<(), CliError> {
    let mut m = Manifest::new(command, text);
    m.run_config(base);
    m.push("jobs", g.jobs);
    g.write("manifest.txt", &m.render(start.elapsed().as_secs_f64()))
}

pub fn delay_scan(g: &Globals, path: Option<&Path>, taus: Option<&str>, fit: Option<&str>) -> Result<(), CliError> {
    let start = Instant::now();
    let (text, cfg) = load(path)?;
    let range = match taus {
        Some(s) => config::parse_tau_range(s).map_err(|e| CliError::Input(format!("--taus: {e}")))?,
        None => cfg.sweep.taus.ok_or_else(|| CliError::Input("no delays: pass --taus or set [sweep] taus".into()))?,
    };
    let fit = match fit {
        Some(s) => Some(config::parse_fit_range(s).map_err(|e| CliError::Input(format!("--fit: {e}")))?),
        None => cfg.sweep.fit,
    };
    let base = cfg.run_config();
    let taus = config::expand_range(range);
    let ScanResult { rows, fit: fitted } = analysis::delay_scan(&base, &taus, fit, g.jobs)?;
    g.write(
        "scan.csv",
        &csv(&["tau_fs", "integral [rad^2/s]"], rows.iter().map(|r| vec![r.swept_value / FS, r.observable])),
    )?;
    if let Some(f) = fitted {
        g.write(
            "fit.txt",
            &format!(
                "rate_per_ns = {}\namplitude = {}\nresidual = {}\n",
                fmt_f64(f.rate * 1e-9),
                fmt_f64(f.amplitude),
                fmt_f64(f.residual)
            ),
        )?;
        println!("fitted decay rate {} /ns (residual {:e})", fmt_f64(f.rate * 1e-9), f.residual);
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.swept_value / FS, r.observable)).collect();
    scan_plot(g, "integrated signal vs delay", "tau [fs]", &pts)?;
    scan_manifest(g, "delay-scan", &text, &base, start)?;
    println!("{} delays written", rows.len());
    Ok(())
}

pub fn population_scan(g: &Globals, path: Option<&Path>, list: Option<&str>, tau_fs: Option<f64>) -> Result<(), CliError> {
    let start = Instant::now();
    let (text, mut cfg) = load(path)?;
    let values = match list {
        Some(s) => config::parse_fraction_list(s).map_err(|e| CliError::Input(format!("--rho-bb: {e}")))?,
        None => cfg
            .sweep
            .rho_bb
            .clone()
            .ok_or_else(|| CliError::Input("no populations: pass --rho-bb or set [sweep] rho_bb".into()))?,
    };
    if let Some(t) = tau_fs {
        cfg.delay = t * FS;
    }
    let base = cfg.run_config();
    let res = analysis::population_scan(&base, &values, g.jobs)?;
    g.write(
        "scan.csv",
        &csv(
            &["rho_bb0", "integral [rad^2/s]", "max_abs_rho_BA"],
            res.rows.iter().map(|r| vec![r.swept_value, r.observable, r.max_abs_rho_ba.unwrap_or(f64::NAN)]),
        ),
    )?;
    let pts: Vec<(f64, f64)> = res.rows.iter().map(|r| (r.swept_value, r.observable)).collect();
    scan_plot(g, &format!("integrated signal vs rho_BB(0), tau = {} fs", fmt_f64(cfg.delay / FS)), "rho_BB(0)", &pts)?;
    scan_manifest(g, "population-scan", &text, &base, start)?;
    println!("{} populations written", res.rows.len());
    Ok(())
}

fn manifest_title(entries: &[(String, String)]) -> String {
    let get = |k: &str| entries.iter().find(|(a, _)| a == k).and_then(|(_, v)| v.parse::<f64>().ok());
    match (get("delay_tau_s"), get("rho_bb0")) {
        (Some(t), Some(b)) => format!("signal spectrum, tau = {} fs, rho_BB(0) = {}", fmt_f64(t / FS), fmt_f64(b)),
        _ => "signal spectrum".into(),
    }
}

/// Spectrum of a field CSV (`t_fs, re, im, abs2`, e.g. `omega_s_out.csv`)
/// or of the exit signal of a configuration run.
pub fn spectrum(g: &Globals, input: &Path) -> Result<(), CliError> {
    let start = Instant::now();
    let is_csv = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let (series, dt, title, mut manifest) = if is_csv {
        let text = fs::read_to_string(input).map_err(|e| io_err(input, e))?;
        let (t, v) = output::read_field_csv(&text).map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
        let dt = t[1] - t[0];
        if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
            return Err(CliError::Input(format!("{}: time column is not uniformly increasing", input.display())));
        }
        (v, dt, manifest_title(&output::sibling_manifest(input)), Manifest::new("spectrum", &text))
    } else {
        let (text, cfg) = load(Some(input))?;
        let rc = cfg.run_config();
        let rec = propagate(&rc)?;
        let mut m = Manifest::new("spectrum", &text);
        m.run_config(&rc);
        let entries = vec![("delay_tau_s".into(), fmt_f64(rc.delay_tau)), ("rho_bb0".into(), fmt_f64(rc.initial_state.rho_bb))];
        (rec.omega_s_out, rc.dt, manifest_title(&entries), m)
    };
    let s = power_spectrum(&series, dt)?;
    let peak = s.power.iter().cloned().fold(0.0, f64::max);
    let norm = if peak > 0.0 { peak } else { 1.0 };
    let body = csv(
        &["offset_THz", "power [rad^2]", "normalized_power"],
        s.freq_offset.iter().zip(&s.power).map(|(f, p)| vec![f * 1e-12, *p, p / norm]),
    );
    let mut text = format!(
        "# fwhm_THz = {}\n# peak_offset_THz = {}\n# asymmetry = {}\n",
        fmt_f64(s.fwhm * 1e-12),
        fmt_f64(s.peak_offset * 1e-12),
        fmt_f64(s.asymmetry)
    );
    text.push_str(&body);
    g.write("spectrum.csv", &text)?;

    // plot a window around the peak, thinned to a few thousand points
    let half_window = (10.0 * s.fwhm).max(50.0 * s.bin_width());
    let shown: Vec<(f64, f64)> = s
        .freq_offset
        .iter()
        .zip(&s.power)
        .filter(|(f, _)| (**f - s.peak_offset).abs() <= half_window)
        .map(|(f, p)| (f * 1e-12, p / norm))
        .collect();
    let stride = shown.len().div_ceil(4000).max(1);
    let thinned: Vec<(f64, f64)> = shown.iter().step_by(stride).copied().collect();
    let svg = line_chart(&title, "frequency offset [THz]", "normalized power", &[Series { label: "|E_s|^2", points: &thinned }], g.logy);
    g.write("spectrum.svg", &svg)?;
    manifest.num("fwhm_hz", s.fwhm);
    manifest.num("asymmetry", s.asymmetry);
    g.write("manifest.txt", &manifest.render(start.elapsed().as_secs_f64()))?;
    println!("fwhm = {} THz, asymmetry = {}", fmt_f64(s.fwhm * 1e-12), fmt_f64(s.asymmetry));
    Ok(())
}

pub fn convergence(g: &Globals, path: Option<&Path>, factor: usize) -> Result<(), CliError> {
    let (_, cfg) = load(path)?;
    if factor < 2 {
        return Err(CliError::Input("--factor must be at least 2".into()));
    }
    let rep = convergence_check(&cfg.run_config(), factor)?;
    let text = format!(
        "refinement_factor = {}\nbase_signal = {}\nrefined_signal = {}\nrelative_change = {}\npassed = {}\n",
        rep.refinement_factor,
        fmt_f64(rep.base_signal),
        fmt_f64(rep.refined_signal),
        fmt_f64(rep.relative_change),
        rep.passed
    );
    g.write("convergence.txt", &text)?;
    print!("{text}");
    if rep.passed {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("refinement changed the signal by {:e}", rep.relative_change)))
    }
}

pub fn run_validate(g: &Globals, inject_fault: bool) -> Result<(), CliError> {
    let results = validate::run_suite(&validate::Options { inject_fault, jobs: g.jobs });
    let mut failed = 0;
    for r in &results {
        if !r.passed {
            failed += 1;
        }
        println!(
            "{} {} ({:.1} s): {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.elapsed.as_secs_f64(),
            r.detail
        );
    }
    println!("{} of {} checks passed", results.len() - failed, results.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{failed} checks failed")))
    }
}
