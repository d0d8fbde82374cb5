//! Coupled Maxwell-Bloch propagation on a (z, retarded time) grid.
//!
//! In the retarded frame `t − z/c` the field equations reduce to
//! `∂Ω/∂z = i·η·ρ` at fixed time, so the medium is marched plane by plane:
//! each plane integrates its Bloch equations over the whole time axis with
//! RK4, then the pump and signal envelopes advance in z with one
//! Euler predictor and one trapezoidal corrector. The read pulse is taken
//! as undepleted and identical at every plane.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::constants::FS;
use crate::model::{
    derive_rates, BlochState, DerivedRates, FieldTriple, MediumParams, ModelError, PulseRole, PulseSpec,
    TwoPhoton,
};
use crate::ode::{rk4_step_staged, Stage};

/// Upper bound on `dt × (largest coupling rate)`.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("time step {dt:e} s violates the stability bound: dt x {rate:e} rad/s = {product:.3} >= {limit}")]
    StabilityBound { dt: f64, rate: f64, product: f64, limit: f64 },
    #[error("Bloch integration diverged at time index {time_index}{}", z_context(*.z_index))]
    StateDiverged { time_index: usize, z_index: Option<usize> },
    #[error("field became non-finite at z index {z_index}")]
    FieldDiverged { z_index: usize },
}

fn z_context(z: Option<usize>) -> String {
    z.map(|j| format!(" (z index {j})")).unwrap_or_default()
}

/// Discretisation of the (z, t) plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationGrid {
    pub nz: usize,
    pub nt: usize,
    /// m
    pub dz: f64,
    /// s
    pub dt: f64,
    /// First sample time in the retarded frame, s.
    pub t_start: f64,
}

impl SimulationGrid {
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nt).map(|k| self.time(k)).collect()
    }

    pub fn length(&self) -> f64 {
        self.nz as f64 * self.dz
    }
}

/// Test hooks that alter the integrator. All off by default.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverHooks {
    /// Skip Bloch integration and hold `ρ_BX` at this value everywhere.
    pub frozen_rho_bx: Option<C64>,
    /// Negate the AC-Stark term of the `ρ_BA` equation (mutation testing).
    pub flip_stark_sign: bool,
}

/// Everything needed to reproduce one propagation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: MediumParams,
    /// Pump and read are required, seed optional. The read pulse center is
    /// always placed at pump center + `delay_tau`.
    pub pulses: Vec<PulseSpec>,
    /// Read center minus pump center, s.
    pub delay_tau: f64,
    pub initial_state: BlochState,
    /// s
    pub dt: f64,
    pub nz: usize,
    /// Time kept after the latest pulse center, s.
    pub tail_window: f64,
    /// z positions (m) at which the full Bloch trajectory is stored.
    pub probes: Vec<f64>,
    pub hooks: SolverHooks,
}

/// 0.1 fs
pub const DEFAULT_DT: f64 = 1e-16;
pub const DEFAULT_NZ: usize = 200;
pub const DEFAULT_TAIL_WINDOW: f64 = 2000.0 * FS;

/// Pump 3×10¹⁰ V/m, read 0.7×10¹⁰ V/m, both 50 fs.
pub const REFERENCE_PUMP_AMPLITUDE: f64 = 3e10;
pub const REFERENCE_READ_AMPLITUDE: f64 = 0.7e10;
pub const REFERENCE_DURATION: f64 = 50.0 * FS;

impl RunConfig {
    /// Reference medium and pulses, pump centered at t = 0.
    pub fn reference(delay_tau: f64, rho_bb0: f64) -> Self {
        let params = MediumParams::reference();
        RunConfig {
            params,
            pulses: vec![
                PulseSpec::new(PulseRole::Pump, REFERENCE_PUMP_AMPLITUDE, REFERENCE_DURATION, 0.0),
                PulseSpec::new(PulseRole::Read, REFERENCE_READ_AMPLITUDE, REFERENCE_DURATION, delay_tau),
            ],
            delay_tau,
            initial_state: BlochState::with_populations(0.0, rho_bb0),
            dt: DEFAULT_DT,
            nz: DEFAULT_NZ,
            tail_window: DEFAULT_TAIL_WINDOW,
            probes: vec![0.0, params.length],
            hooks: SolverHooks::default(),
        }
    }

    pub fn with_delay(mut self, tau: f64) -> Self {
        self.delay_tau = tau;
        self
    }

    pub fn with_rho_bb(mut self, rho_bb0: f64) -> Self {
        self.initial_state.rho_bb = rho_bb0;
        self
    }

    pub fn pulse(&self, role: PulseRole) -> Option<PulseSpec> {
        let pump = self.pulses.iter().find(|p| p.role == PulseRole::Pump).copied();
        let mut p = self.pulses.iter().find(|p| p.role == role).copied()?;
        if role == PulseRole::Read {
            if let Some(pump) = pump {
                p.center_time = pump.center_time + self.delay_tau;
            }
        }
        Some(p)
    }

    pub fn pump(&self) -> PulseSpec {
        self.pulse(PulseRole::Pump).expect("validated config has a pump pulse")
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.params.validate()?;
        for role in [PulseRole::Pump, PulseRole::Read, PulseRole::Seed] {
            let n = self.pulses.iter().filter(|p| p.role == role).count();
            if n > 1 || (n == 0 && role != PulseRole::Seed) {
                return Err(SolverError::InvalidConfig(format!("expected exactly one {role:?} pulse, found {n}")));
            }
        }
        for p in &self.pulses {
            p.validate()?;
        }
        let s = &self.initial_state;
        if !(s.rho_aa >= 0.0 && s.rho_bb >= 0.0 && s.rho_aa + s.rho_bb <= 1.0) || !s.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "initial populations must lie in [0,1] with sum <= 1 (rho_aa = {}, rho_bb = {})",
                s.rho_aa, s.rho_bb
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || self.nz == 0 {
            return Err(SolverError::InvalidConfig("dt must be positive and nz at least 1".into()));
        }
        if !(self.tail_window >= 0.0) || !self.delay_tau.is_finite() {
            return Err(SolverError::InvalidConfig("tail_window must be non-negative, delay finite".into()));
        }
        for &z in &self.probes {
            if !(0.0..=self.params.length).contains(&z) {
                return Err(SolverError::InvalidConfig(format!("probe z = {z:e} m outside the medium")));
            }
        }
        Ok(())
    }

    /// Time axis covering [earliest pulse − 3·duration, latest center + tail].
    pub fn grid(&self) -> SimulationGrid {
        let pulses: Vec<PulseSpec> = [PulseRole::Pump, PulseRole::Read, PulseRole::Seed]
            .into_iter()
            .filter_map(|r| self.pulse(r))
            .collect();
        let t_start = pulses
            .iter()
            .map(|p| p.center_time - 3.0 * p.duration_fwhm)
            .fold(f64::INFINITY, f64::min);
        let t_end = pulses.iter().map(|p| p.center_time).fold(f64::NEG_INFINITY, f64::max) + self.tail_window;
        let nt = ((t_end - t_start) / self.dt).ceil() as usize + 1;
        SimulationGrid {
            nz: self.nz,
            nt,
            dz: self.params.length / self.nz as f64,
            dt: self.dt,
            t_start,
        }
    }

    /// Largest coupling rate the integrator has to resolve, rad/s.
    pub fn max_coupling_rate(&self) -> f64 {
        let p = &self.params;
        let amp = |r| self.pulse(r).map(|s| s.peak_amplitude).unwrap_or(0.0);
        let pump = p.pump_rabi(amp(PulseRole::Pump)).abs().max((p.dipole_ia * amp(PulseRole::Pump) / crate::constants::HBAR).abs());
        let read = p.read_rabi(amp(PulseRole::Read)).abs();
        let seed = p.signal_rabi(amp(PulseRole::Seed)).abs();
        let tp = crate::model::two_photon_terms(
            C64::new(amp(PulseRole::Pump), 0.0),
            C64::new(amp(PulseRole::Read), 0.0),
            p,
        )
        .map(|t| t.coupling.norm().max(t.stark.abs()))
        .unwrap_or(0.0);
        pump.max(read).max(seed).max(tp)
    }

    pub fn check_stability(&self) -> Result<(), SolverError> {
        let rate = self.max_coupling_rate();
        let product = self.dt * rate;
        if product >= STABILITY_LIMIT {
            return Err(SolverError::StabilityBound { dt: self.dt, rate, product, limit: STABILITY_LIMIT });
        }
        Ok(())
    }

    /// Field envelopes entering the medium at z = 0, sampled on `grid`.
    pub fn input_fields(&self, grid: &SimulationGrid) -> Vec<FieldTriple> {
        let p = &self.params;
        let pump = self.pulse(PulseRole::Pump);
        let read = self.pulse(PulseRole::Read);
        let seed = self.pulse(PulseRole::Seed);
        let env = |s: Option<PulseSpec>, t| s.map(|s| s.envelope_at(t)).unwrap_or_default();
        (0..grid.nt)
            .map(|k| {
                let t = grid.time(k);
                FieldTriple {
                    omega1: env(pump, t) * p.pump_rabi(1.0),
                    omega2: env(read, t) * p.read_rabi(1.0),
                    omega_s: env(seed, t) * p.signal_rabi(1.0),
                }
            })
            .collect()
    }
}

/// Bloch trajectory stored at one z plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSeries {
    /// m, snapped to the grid
    pub z: f64,
    pub z_index: usize,
    pub states: Vec<BlochState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRecord {
    /// Pump-band Rabi envelope at z = L, rad/s.
    pub omega1_out: Vec<C64>,
    /// Signal-band Rabi envelope at z = L, rad/s.
    pub omega_s_out: Vec<C64>,
    /// Ordered by z.
    pub rho_history: Vec<ProbeSeries>,
    pub config_echo: RunConfig,
    pub grid_echo: SimulationGrid,
}

impl SimulationRecord {
    pub fn times(&self) -> Vec<f64> {
        self.grid_echo.times()
    }

    /// Deepest stored probe plane.
    pub fn exit_probe(&self) -> Option<&ProbeSeries> {
        self.rho_history.last()
    }
}

/// Per-sample drive: fields plus the two-photon terms derived from them.
#[derive(Debug, Clone, Copy, Default)]
struct Drive {
    fields: FieldTriple,
    tp: TwoPhoton,
}

struct DriveBuilder {
    /// ℘_IA/℘_AX: converts Ω₁ into the A–I Rabi frequency.
    pump_ratio: f64,
    inv_delta: f64,
    flip_stark: bool,
}

impl DriveBuilder {
    fn new(params: &MediumParams, hooks: &SolverHooks) -> Self {
        DriveBuilder {
            pump_ratio: if params.dipole_ax != 0.0 { params.dipole_ia / params.dipole_ax } else { 0.0 },
            inv_delta: 1.0 / params.delta,
            flip_stark: hooks.flip_stark_sign,
        }
    }

    #[inline]
    fn build(&self, fields: FieldTriple) -> Drive {
        let g1 = fields.omega1 * self.pump_ratio;
        let g2 = fields.omega2;
        let stark = (g2.norm_sqr() - g1.norm_sqr()) * self.inv_delta;
        Drive {
            fields,
            tp: TwoPhoton {
                coupling: g2 * g1 * self.inv_delta,
                stark: if self.flip_stark { -stark } else { stark },
            },
        }
    }
}

fn midpoint(a: &FieldTriple, b: &FieldTriple) -> FieldTriple {
    FieldTriple {
        omega1: (a.omega1 + b.omega1) * 0.5,
        omega2: (a.omega2 + b.omega2) * 0.5,
        omega_s: (a.omega_s + b.omega_s) * 0.5,
    }
}

/// Integrates the Bloch equations at one z plane over the grid's time axis.
///
/// `fields[k]` is the drive at `grid.time(k)`; values between samples are
/// linearly interpolated. Returns one state per sample, starting with
/// `initial`.
pub fn integrate_slice(
    fields: &[FieldTriple],
    initial: &BlochState,
    rates: &DerivedRates,
    params: &MediumParams,
    grid: &SimulationGrid,
) -> Result<Vec<BlochState>, SolverError> {
    integrate_slice_with_hooks(fields, initial, rates, params, grid, &SolverHooks::default())
}

/// [`integrate_slice`] with test hooks applied.
pub fn integrate_slice_with_hooks(
    fields: &[FieldTriple],
    initial: &BlochState,
    rates: &DerivedRates,
    params: &MediumParams,
    grid: &SimulationGrid,
    hooks: &SolverHooks,
) -> Result<Vec<BlochState>, SolverError> {
    let nt = fields.len();
    if let Some(pinned) = hooks.frozen_rho_bx {
        let s = BlochState { rho_bx: pinned, ..*initial };
        return Ok(vec![s; nt]);
    }
    let builder = DriveBuilder::new(params, hooks);
    let mut out = Vec::with_capacity(nt);
    let mut state = *initial;
    out.push(state);
    if nt == 0 {
        return Ok(Vec::new());
    }
    let dt = grid.dt;
    let mut here = builder.build(fields[0]);
    for k in 0..nt - 1 {
        let next = builder.build(fields[k + 1]);
        let mid = builder.build(midpoint(&fields[k], &fields[k + 1]));
        state = rk4_step_staged(&state, dt, |stage, s| {
            let d = match stage {
                Stage::Start => &here,
                Stage::Mid => &mid,
                Stage::End => &next,
            };
            crate::model::bloch_rhs(s, &d.fields, &d.tp, rates, params)
        });
        if !state.is_finite() {
            return Err(SolverError::StateDiverged { time_index: k + 1, z_index: None });
        }
        out.push(state);
        here = next;
    }
    Ok(out)
}

/// Runs the full propagation from z = 0 to z = L.
pub fn propagate(config: &RunConfig) -> Result<SimulationRecord, SolverError> {
    config.validate()?;
    config.check_stability()?;
    let params = &config.params;
    let rates = derive_rates(params)?;
    let grid = config.grid();
    let hooks = config.hooks;

    let mut fields = config.input_fields(&grid);
    let dz = grid.dz;
    let src = |states: &[BlochState]| -> Vec<(C64, C64)> {
        states
            .iter()
            .map(|s| (C64::new(0.0, rates.eta_ax) * s.rho_ax, C64::new(0.0, rates.eta_bx) * s.rho_bx))
            .collect()
    };

    let mut probe_idx: Vec<usize> = config
        .probes
        .iter()
        .map(|&z| ((z / dz).round() as usize).min(grid.nz))
        .collect();
    probe_idx.sort_unstable();
    probe_idx.dedup();
    let mut history = Vec::with_capacity(probe_idx.len());

    let slice = |f: &[FieldTriple], j: usize| {
        integrate_slice_with_hooks(f, &config.initial_state, &rates, params, &grid, &hooks).map_err(|e| match e {
            SolverError::StateDiverged { time_index, .. } => SolverError::StateDiverged { time_index, z_index: Some(j) },
            other => other,
        })
    };

    for j in 0..grid.nz {
        let states = slice(&fields, j)?;
        let s0 = src(&states);
        if probe_idx.contains(&j) {
            history.push(ProbeSeries { z: j as f64 * dz, z_index: j, states });
        }
        let predicted: Vec<FieldTriple> = fields
            .iter()
            .zip(&s0)
            .map(|(f, s)| FieldTriple { omega1: f.omega1 + s.0 * dz, omega2: f.omega2, omega_s: f.omega_s + s.1 * dz })
            .collect();
        let s1 = src(&slice(&predicted, j + 1)?);
        for ((f, a), b) in fields.iter_mut().zip(&s0).zip(&s1) {
            f.omega1 += (a.0 + b.0) * (0.5 * dz);
            f.omega_s += (a.1 + b.1) * (0.5 * dz);
            if !f.is_finite() {
                return Err(SolverError::FieldDiverged { z_index: j + 1 });
            }
        }
    }
    if probe_idx.contains(&grid.nz) {
        let states = slice(&fields, grid.nz)?;
        history.push(ProbeSeries { z: grid.nz as f64 * dz, z_index: grid.nz, states });
    }

    Ok(SimulationRecord {
        omega1_out: fields.iter().map(|f| f.omega1).collect(),
        omega_s_out: fields.iter().map(|f| f.omega_s).collect(),
        rho_history: history,
        config_echo: config.clone(),
        grid_echo: grid,
    })
}

/// Result of a grid-refinement self-consistency check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub refinement_factor: usize,
    /// ∫|Ω_s(L)|² dt at the base grid, rad²/s.
    pub base_signal: f64,
    pub refined_signal: f64,
    pub relative_change: f64,
    pub passed: bool,
}

/// Maximum relative change of the integrated signal accepted under refinement.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-2;

/// Reruns `config` with `dt / factor` and `nz × factor` and compares the
/// integrated exit signal.
pub fn convergence_check(config: &RunConfig, refinement_factor: usize) -> Result<ConvergenceReport, SolverError> {
    if refinement_factor < 2 {
        return Err(SolverError::InvalidConfig("refinement factor must be at least 2".into()));
    }
    config.validate()?;
    config.check_stability()?;
    let base = propagate(config)?;
    let mut fine_cfg = config.clone();
    fine_cfg.dt /= refinement_factor as f64;
    fine_cfg.nz *= refinement_factor;
    let fine = propagate(&fine_cfg)?;
    let energy = |r: &SimulationRecord| r.omega_s_out.iter().map(|o| o.norm_sqr()).sum::<f64>() * r.grid_echo.dt;
    let (a, b) = (energy(&base), energy(&fine));
    let relative_change = if a == 0.0 && b == 0.0 { 0.0 } else { (b - a).abs() / a.abs().max(b.abs()) };
    Ok(ConvergenceReport {
        refinement_factor,
        base_signal: a,
        refined_signal: b,
        relative_change,
        passed: relative_change < CONVERGENCE_TOLERANCE,
    })
}
