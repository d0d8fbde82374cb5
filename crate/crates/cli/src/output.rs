//! CSV and manifest writers.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use mbprop::constants::FS;
use mbprop::solver::{RunConfig, SimulationGrid, SimulationRecord};
use num_complex::Complex64 as C64;
use sha2::{Digest, Sha256};

use crate::fmt_f64;

/// CSV text with a single `#` header line.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = format!("# {}\n", header.join(", "));
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn field_csv(grid: &SimulationGrid, series: &[C64]) -> String {
    csv(
        &["t_fs", "re [rad/s]", "im [rad/s]", "abs2 [rad^2/s^2]"],
        series.iter().enumerate().map(|(k, x)| vec![grid.time(k) / FS, x.re, x.im, x.norm_sqr()]),
    )
}

pub fn probes_csv(record: &SimulationRecord) -> String {
    let mut header = vec!["t_fs".to_string()];
    for p in &record.rho_history {
        let z = fmt_f64(p.z * 1e3);
        for name in ["rho_aa", "rho_bb", "rho_ax_re", "rho_ax_im", "rho_ba_re", "rho_ba_im", "rho_bx_re", "rho_bx_im"] {
            header.push(format!("{name}@z={z}mm"));
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let g = &record.grid_echo;
    csv(
        &header,
        (0..g.nt).map(|k| {
            let mut row = vec![g.time(k) / FS];
            for p in &record.rho_history {
                let s = &p.states[k];
                row.extend([s.rho_aa, s.rho_bb, s.rho_ax.re, s.rho_ax.im, s.rho_ba.re, s.rho_ba.im, s.rho_bx.re, s.rho_bx.im]);
            }
            row
        }),
    )
}

/// Parses a field CSV (`t_fs, re, im, abs2`) back into times (s) and samples.
pub fn read_field_csv(text: &str) -> Result<(Vec<f64>, Vec<C64>), String> {
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match cells {
            Ok(c) if c.len() == 4 => {
                t.push(c[0] * FS);
                v.push(C64::new(c[1], c[2]));
            }
            _ => return Err(format!("line {}: expected four numeric columns (t_fs, re, im, abs2)", i + 1)),
        }
    }
    if t.len() < 2 {
        return Err("need at least two samples".into());
    }
    Ok((t, v))
}

pub fn digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// `key = value` manifest. Everything except `wall_time_s` is a pure
/// function of the inputs.
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str, config_text: &str) -> Self {
        let mut m = Manifest { lines: Vec::new() };
        m.push("version", env!("CARGO_PKG_VERSION"));
        m.push("command", command);
        m.push("config_sha256", digest(config_text.as_bytes()));
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn num(&mut self, key: &str, value: f64) {
        self.push(key, fmt_f64(value));
    }

    /// Resolved SI parameters and grid of a run configuration.
    pub fn run_config(&mut self, c: &RunConfig) {
        let p = &c.params;
        for (k, v) in [
            ("dipole_ax_Cm", p.dipole_ax),
            ("dipole_ia_Cm", p.dipole_ia),
            ("dipole_bi_Cm", p.dipole_bi),
            ("dipole_bx_Cm", p.dipole_bx),
            ("gamma_a_per_s", p.gamma_a),
            ("gamma_b_per_s", p.gamma_b),
            ("gamma_col_per_s", p.gamma_col),
            ("delta_rad_per_s", p.delta),
            ("density_per_m3", p.density),
            ("lambda_ax_m", p.lambda_ax),
            ("lambda_bx_m", p.lambda_bx),
            ("length_m", p.length),
        ] {
            self.num(k, v);
        }
        for role in [mbprop::PulseRole::Pump, mbprop::PulseRole::Read, mbprop::PulseRole::Seed] {
            if let Some(s) = c.pulse(role) {
                let name = format!("{role:?}").to_lowercase();
                self.num(&format!("{name}_amplitude_V_per_m"), s.peak_amplitude);
                self.num(&format!("{name}_duration_s"), s.duration_fwhm);
                self.num(&format!("{name}_center_s"), s.center_time);
            }
        }
        self.num("delay_tau_s", c.delay_tau);
        self.num("rho_aa0", c.initial_state.rho_aa);
        self.num("rho_bb0", c.initial_state.rho_bb);
        self.push("probes_m", c.probes.iter().map(|z| fmt_f64(*z)).collect::<Vec<_>>().join(","));
        let g = c.grid();
        self.push("grid_nt", g.nt);
        self.push("grid_nz", g.nz);
        self.num("grid_dt_s", g.dt);
        self.num("grid_dz_m", g.dz);
        self.num("grid_t_start_s", g.t_start);
        self.num("tail_window_s", c.tail_window);
    }

    pub fn render(&self, wall_time: f64) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "wall_time_s = {wall_time:.3}");
        s
    }
}

/// Reads `key = value` pairs from a manifest next to `path`, if any.
pub fn sibling_manifest(path: &Path) -> Vec<(String, String)> {
    let file = path.parent().unwrap_or(Path::new(".")).join("manifest.txt");
    fs::read_to_string(file)
        .map(|t| {
            t.lines()
                .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
                .collect()
        })
        .unwrap_or_default()
}

pub fn write(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    fs::write(dir.join(name), contents)
}
