//! Observables derived from simulation records: spectra, integrated signal,
//! retention-tail contrast, delay and population scans, exponential fits.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::model::PulseRole;
use crate::solver::{propagate, RunConfig, SimulationRecord, SolverError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("series has {0} samples, at least 16 are required")]
    SeriesTooShort(usize),
    #[error("tail window starting at {0:e} s contains no samples")]
    EmptyTail(f64),
    #[error("pump-band output is identically zero; tail ratio undefined")]
    ZeroPeak,
    #[error("exponential fit needs at least 3 rows, got {0}")]
    TooFewRows(usize),
    #[error("exponential fit needs y > 0, got {y:e} at t = {t:e}")]
    NonPositive { t: f64, y: f64 },
    #[error("exponential fit abscissae are all equal")]
    DegenerateAbscissa,
    #[error("swept values must be strictly increasing")]
    NotIncreasing,
    #[error("swept value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("run at swept value {value:e} failed: {source}")]
    Scan { value: f64, source: SolverError },
}

/// Power spectrum of a complex envelope.
///
/// `power[k]` is `|dt · DFT(x)[k]|²`, so that `Σ power · df = Σ|x|² · dt`
/// where `df` is the bin spacing. A component `exp(2πi f t)` peaks at
/// `freq_offset = +f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Hz, ascending, relative to the carrier
    pub freq_offset: Vec<f64>,
    pub power: Vec<f64>,
    /// Hz; 0 when the half-maximum crossings are not found
    pub fwhm: f64,
    /// Hz
    pub peak_offset: f64,
    /// |P(f > f_peak) − P(f < f_peak)| / P_total
    pub asymmetry: f64,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        self.freq_offset[1] - self.freq_offset[0]
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.bin_width()
    }
}

/// Zero-padded (8× the next power of two), rectangular-window spectrum.
pub fn power_spectrum(series: &[C64], dt: f64) -> Result<Spectrum, AnalysisError> {
    let n = series.len();
    if n < 16 {
        return Err(AnalysisError::SeriesTooShort(n));
    }
    let nfft = 8 * n.next_power_of_two();
    let mut buf = vec![C64::new(0.0, 0.0); nfft];
    buf[..n].copy_from_slice(series);
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let df = 1.0 / (nfft as f64 * dt);
    let half = nfft / 2;
    let mut freq_offset = Vec::with_capacity(nfft);
    let mut power = Vec::with_capacity(nfft);
    for i in 0..nfft {
        let k = (i + half) % nfft;
        freq_offset.push((i as f64 - half as f64) * df);
        power.push(buf[k].norm_sqr() * dt * dt);
    }

    let peak = power
        .iter()
        .enumerate()
        .fold(0, |best, (i, &p)| if p > power[best] { i } else { best });
    let peak_offset = freq_offset[peak];
    let fwhm = half_max_width(&freq_offset, &power, peak);
    let left: f64 = power[..peak].iter().sum();
    let right: f64 = power[peak + 1..].iter().sum();
    let total: f64 = power.iter().sum();
    let asymmetry = if total > 0.0 { (right - left).abs() / total } else { 0.0 };
    Ok(Spectrum { freq_offset, power, fwhm, peak_offset, asymmetry })
}

fn half_max_width(f: &[f64], p: &[f64], peak: usize) -> f64 {
    let half = 0.5 * p[peak];
    if half <= 0.0 {
        return 0.0;
    }
    let cross = |i: usize, j: usize| f[i] + (half - p[i]) * (f[j] - f[i]) / (p[j] - p[i]);
    let left = (1..=peak).rev().find(|&i| p[i - 1] < half).map(|i| cross(i - 1, i));
    let right = (peak..p.len() - 1).find(|&i| p[i + 1] < half).map(|i| cross(i, i + 1));
    match (left, right) {
        (Some(l), Some(r)) => r - l,
        _ => 0.0,
    }
}

/// `Σ|Ω_s(L)|²·dt`, rad²/s.
pub fn integrated_signal(record: &SimulationRecord) -> f64 {
    record.omega_s_out.iter().map(|o| o.norm_sqr()).sum::<f64>() * record.grid_echo.dt
}

/// Energy-like integral `Σ|Ω_s|²·dt` of the seed entering the medium.
pub fn input_signal(record: &SimulationRecord) -> f64 {
    let grid = &record.grid_echo;
    record
        .config_echo
        .input_fields(grid)
        .iter()
        .map(|f| f.omega_s.norm_sqr())
        .sum::<f64>()
        * grid.dt
}

/// Default start of the retention tail: pump center plus five
/// amplitude-FWHM (`√2 ×` intensity FWHM).
pub fn default_tail_start(config: &RunConfig) -> f64 {
    let pump = config.pump();
    pump.center_time + 5.0 * std::f64::consts::SQRT_2 * pump.duration_fwhm
}

/// Peak pump-band intensity after `tail_start` relative to the global peak.
pub fn tail_peak_ratio(record: &SimulationRecord, tail_start: f64) -> Result<f64, AnalysisError> {
    let grid = &record.grid_echo;
    let peak = record.omega1_out.iter().map(|o| o.norm_sqr()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(AnalysisError::ZeroPeak);
    }
    let tail = record
        .omega1_out
        .iter()
        .enumerate()
        .filter(|(k, _)| grid.time(*k) >= tail_start)
        .map(|(_, o)| o.norm_sqr())
        .reduce(f64::max)
        .ok_or(AnalysisError::EmptyTail(tail_start))?;
    Ok(tail / peak)
}

/// Largest `|ρ_BA|` seen at the deepest probe plane.
pub fn max_abs_rho_ba(record: &SimulationRecord) -> f64 {
    record
        .exit_probe()
        .map(|p| p.states.iter().map(|s| s.rho_ba.norm()).fold(0.0, f64::max))
        .unwrap_or(0.0)
}

/// `y ≈ amplitude · exp(−rate · t)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub amplitude: f64,
    /// 1/s (or 1/unit of t)
    pub rate: f64,
    /// RMS misfit of ln y
    pub residual: f64,
}

/// Least-squares straight line through `(t, ln y)`.
pub fn exp_fit(rows: &[(f64, f64)]) -> Result<ExpFit, AnalysisError> {
    if rows.len() < 3 {
        return Err(AnalysisError::TooFewRows(rows.len()));
    }
    if let Some(&(t, y)) = rows.iter().find(|(_, y)| !(*y > 0.0)) {
        return Err(AnalysisError::NonPositive { t, y });
    }
    let n = rows.len() as f64;
    // logs relative to the largest y, so that scaling y cancels before ln
    let y_ref = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let logs: Vec<f64> = rows.iter().map(|r| (r.1 / y_ref).ln()).collect();
    let t_mean = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let l_mean = logs.iter().sum::<f64>() / n;
    let (mut stt, mut stl) = (0.0, 0.0);
    for (&(t, _), l) in rows.iter().zip(&logs) {
        let dt = t - t_mean;
        stt += dt * dt;
        stl += dt * (l - l_mean);
    }
    if stt == 0.0 {
        return Err(AnalysisError::DegenerateAbscissa);
    }
    let slope = stl / stt;
    let intercept = l_mean - slope * t_mean;
    let residual = (rows
        .iter()
        .zip(&logs)
        .map(|(&(t, _), l)| (l - (intercept + slope * t)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ExpFit { amplitude: y_ref * intercept.exp(), rate: -slope, residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub swept_value: f64,
    pub observable: f64,
    /// Only filled by population scans.
    pub max_abs_rho_ba: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub fit: Option<ExpFit>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Runs `configs` on a pool of `jobs` workers; output order matches input.
fn run_all(
    configs: Vec<(f64, RunConfig)>,
    jobs: usize,
) -> Result<Vec<(f64, SimulationRecord)>, AnalysisError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| AnalysisError::Pool(e.to_string()))?;
    pool.install(|| {
        configs
            .into_par_iter()
            .map(|(value, cfg)| {
                propagate(&cfg)
                    .map(|r| (value, r))
                    .map_err(|source| AnalysisError::Scan { value, source })
            })
            .collect()
    })
}

/// Integrated exit signal versus read delay. When `fit_range` is given, an
/// exponential is fitted to the rows with `tau` inside the closed range.
pub fn delay_scan(
    base: &RunConfig,
    taus: &[f64],
    fit_range: Option<(f64, f64)>,
    jobs: usize,
) -> Result<ScanResult, AnalysisError> {
    if !strictly_increasing(taus) {
        return Err(AnalysisError::NotIncreasing);
    }
    let configs = taus.iter().map(|&t| (t, base.clone().with_delay(t))).collect();
    let rows: Vec<ScanRow> = run_all(configs, jobs)?
        .into_iter()
        .map(|(tau, r)| ScanRow { swept_value: tau, observable: integrated_signal(&r), max_abs_rho_ba: None })
        .collect();
    let fit = match fit_range {
        Some((lo, hi)) => {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.swept_value >= lo && r.swept_value <= hi)
                .map(|r| (r.swept_value, r.observable))
                .collect();
            Some(exp_fit(&pts)?)
        }
        None => None,
    };
    Ok(ScanResult { rows, fit })
}

/// Integrated exit signal and peak `|ρ_BA|` at z = L versus initial B
/// population, at the base configuration's delay.
pub fn population_scan(base: &RunConfig, rho_bb: &[f64], jobs: usize) -> Result<ScanResult, AnalysisError> {
    if let Some(&v) = rho_bb.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(AnalysisError::OutOfRange(v));
    }
    if !strictly_increasing(rho_bb) {
        return Err(AnalysisError::NotIncreasing);
    }
    let mut base = base.clone();
    if !base.probes.contains(&base.params.length) {
        base.probes.push(base.params.length);
    }
    let configs = rho_bb.iter().map(|&v| (v, base.clone().with_rho_bb(v))).collect();
    let rows = run_all(configs, jobs)?
        .into_iter()
        .map(|(v, r)| ScanRow {
            swept_value: v,
            observable: integrated_signal(&r),
            max_abs_rho_ba: Some(max_abs_rho_ba(&r)),
        })
        .collect();
    Ok(ScanResult { rows, fit: None })
}

/// Whether the configuration injects a seed with nonzero amplitude.
pub fn has_seed(config: &RunConfig) -> bool {
    config.pulse(PulseRole::Seed).is_some_and(|p| p.peak_amplitude > 0.0)
}
