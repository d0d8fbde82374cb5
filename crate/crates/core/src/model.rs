//! Medium parameters, pulse envelopes and the effective three-level
//! density-matrix equations with the intermediate level eliminated.
//!
//! Levels are labelled X (ground), A and B. The pump (800 nm) drives X–A
//! directly and A–I together with the read pulse (1580 nm) on I–B, where
//! the far-detuned level I only enters through two-photon coupling and
//! AC-Stark terms. The signal field drives B–X (329.3 nm).
//!
//! All field quantities are slowly varying envelopes in the rotating frame;
//! Rabi frequencies follow the `℘·E/ħ` convention (no factor of 1/2).

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::constants::HBAR;
use crate::ode::OdeState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` must be {requirement}, got {value:e}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("detuning |delta| = {delta:e} rad/s must exceed 100 x max dephasing rate {max_rate:e} 1/s")]
    DetuningTooSmall { delta: f64, max_rate: f64 },
}

fn require(name: &'static str, value: f64, ok: bool, requirement: &'static str) -> Result<(), ModelError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, requirement, value })
    }
}

/// Material description of the three-level medium, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// X–A dipole, C·m
    pub dipole_ax: f64,
    /// A–I dipole, C·m
    pub dipole_ia: f64,
    /// I–B dipole, C·m
    pub dipole_bi: f64,
    /// B–X dipole, C·m
    pub dipole_bx: f64,
    /// Spontaneous decay of A, 1/s
    pub gamma_a: f64,
    /// Spontaneous decay of B, 1/s
    pub gamma_b: f64,
    /// Collisional dephasing, 1/s
    pub gamma_col: f64,
    /// Detuning of the intermediate level from the pump, `ω_IA − ω_1`, rad/s
    pub delta: f64,
    /// Ion number density, 1/m³
    pub density: f64,
    /// X–A wavelength, m
    pub lambda_ax: f64,
    /// B–X wavelength, m
    pub lambda_bx: f64,
    /// Medium length, m
    pub length: f64,
}

impl MediumParams {
    /// Reference parameter set: 0.15 mm of ions at 4×10¹⁶ cm⁻³, all dipoles
    /// 10⁻³⁰ C·m, γ = 0.01 ns⁻¹, γ_col = 1 ns⁻¹, Δ = 10¹⁵ rad/s.
    pub fn reference() -> Self {
        MediumParams {
            dipole_ax: 1e-30,
            dipole_ia: 1e-30,
            dipole_bi: 1e-30,
            dipole_bx: 1e-30,
            gamma_a: 1e7,
            gamma_b: 1e7,
            gamma_col: 1e9,
            delta: 1e15,
            density: 4e22,
            lambda_ax: 800e-9,
            lambda_bx: 329.3e-9,
            length: 0.15e-3,
        }
    }

    /// Full check of the physical invariants, including the large-detuning
    /// condition under which level I may be eliminated.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("dipole_ax", self.dipole_ax),
            ("dipole_ia", self.dipole_ia),
            ("dipole_bi", self.dipole_bi),
            ("dipole_bx", self.dipole_bx),
        ] {
            require(name, v, v != 0.0, "nonzero")?;
        }
        for (name, v) in [
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
            ("gamma_col", self.gamma_col),
            ("length", self.length),
        ] {
            require(name, v, v > 0.0, "strictly positive")?;
        }
        let rates = derive_rates(self)?;
        let max_rate = rates.gamma_ax.max(rates.gamma_ba).max(rates.gamma_bx);
        require("delta", self.delta, self.delta != 0.0, "nonzero")?;
        if self.delta.abs() <= 100.0 * max_rate {
            return Err(ModelError::DetuningTooSmall { delta: self.delta, max_rate });
        }
        Ok(())
    }

    pub(crate) fn two_photon_coefficients(&self) -> Result<TwoPhotonCoefficients, ModelError> {
        require("delta", self.delta, self.delta != 0.0, "nonzero")?;
        let d = HBAR * HBAR * self.delta;
        Ok(TwoPhotonCoefficients {
            cross: self.dipole_bi * self.dipole_ia / d,
            read: self.dipole_bi * self.dipole_bi / d,
            pump: self.dipole_ia * self.dipole_ia / d,
        })
    }

    /// Rabi frequency `℘_AX E / ħ` for a pump-field amplitude in V/m.
    pub fn pump_rabi(&self, e: f64) -> f64 {
        self.dipole_ax * e / HBAR
    }

    /// Rabi frequency `℘_BX E / ħ` for a signal-field amplitude in V/m.
    pub fn signal_rabi(&self, e: f64) -> f64 {
        self.dipole_bx * e / HBAR
    }

    /// Rabi frequency `℘_BI E / ħ` for a read-field amplitude in V/m.
    pub fn read_rabi(&self, e: f64) -> f64 {
        self.dipole_bi * e / HBAR
    }
}

/// Dephasing rates and field–coherence coupling constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    pub gamma_ax: f64,
    pub gamma_ba: f64,
    pub gamma_bx: f64,
    /// rad/(s·m)
    pub eta_ax: f64,
    /// rad/(s·m)
    pub eta_bx: f64,
}

/// Closed-form dephasing rates and propagation couplings
/// `η = 3 n λ² γ / (8π)`.
///
/// Zero decay or dephasing rates are accepted here (reduced models use
/// them); [`MediumParams::validate`] is the strict gate for full runs.
pub fn derive_rates(params: &MediumParams) -> Result<DerivedRates, ModelError> {
    for (name, v) in [
        ("gamma_a", params.gamma_a),
        ("gamma_b", params.gamma_b),
        ("gamma_col", params.gamma_col),
    ] {
        require(name, v, v >= 0.0, "non-negative")?;
    }
    for (name, v) in [
        ("density", params.density),
        ("lambda_ax", params.lambda_ax),
        ("lambda_bx", params.lambda_bx),
    ] {
        require(name, v, v > 0.0, "strictly positive")?;
    }
    let eta = |lambda: f64, gamma: f64| {
        3.0 * params.density * lambda * lambda * gamma / (8.0 * std::f64::consts::PI)
    };
    Ok(DerivedRates {
        gamma_ax: 0.5 * params.gamma_a + params.gamma_col,
        gamma_ba: 0.5 * (params.gamma_a + params.gamma_b) + params.gamma_col,
        gamma_bx: 0.5 * params.gamma_b + params.gamma_col,
        eta_ax: eta(params.lambda_ax, params.gamma_a),
        eta_bx: eta(params.lambda_bx, params.gamma_b),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseRole {
    /// E₁, 800 nm
    Pump,
    /// E₂, 1580 nm
    Read,
    /// E_s, 329.3 nm
    Seed,
}

/// One Gaussian laser envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub role: PulseRole,
    /// Peak field amplitude, V/m.
    pub peak_amplitude: f64,
    /// Intensity FWHM, s.
    pub duration_fwhm: f64,
    /// Peak time in the retarded frame, s.
    pub center_time: f64,
}

impl PulseSpec {
    pub fn new(role: PulseRole, peak_amplitude: f64, duration_fwhm: f64, center_time: f64) -> Self {
        PulseSpec { role, peak_amplitude, duration_fwhm, center_time }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require("duration_fwhm", self.duration_fwhm, self.duration_fwhm > 0.0, "strictly positive")?;
        require("peak_amplitude", self.peak_amplitude, self.peak_amplitude >= 0.0, "non-negative")?;
        require("center_time", self.center_time, true, "finite")
    }

    /// Field amplitude at time `t`; real with zero carrier phase.
    pub fn envelope_at(&self, t: f64) -> C64 {
        let x = (t - self.center_time) / self.duration_fwhm;
        C64::new(self.peak_amplitude * (-2.0 * std::f64::consts::LN_2 * x * x).exp(), 0.0)
    }

    /// ∫ amplitude dt over all time, V·s/m.
    pub fn amplitude_area(&self) -> f64 {
        self.peak_amplitude
            * self.duration_fwhm
            * (std::f64::consts::PI / (2.0 * std::f64::consts::LN_2)).sqrt()
    }
}

/// Density-matrix state at one point; `ρ_XX = 1 − ρ_AA − ρ_BB` is implied.
///
/// Also used to carry time derivatives, in which case the implied `ρ_XX`
/// derivative is `−(ρ̇_AA + ρ̇_BB)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochState {
    pub rho_aa: f64,
    pub rho_bb: f64,
    pub rho_ax: C64,
    pub rho_ba: C64,
    pub rho_bx: C64,
}

impl BlochState {
    pub fn ground() -> Self {
        Self::default()
    }

    pub fn with_populations(rho_aa: f64, rho_bb: f64) -> Self {
        BlochState { rho_aa, rho_bb, ..Self::default() }
    }

    pub fn rho_xx(&self) -> f64 {
        1.0 - self.rho_aa - self.rho_bb
    }

    pub fn is_finite(&self) -> bool {
        self.rho_aa.is_finite()
            && self.rho_bb.is_finite()
            && self.rho_ax.is_finite()
            && self.rho_ba.is_finite()
            && self.rho_bx.is_finite()
    }

    pub fn conj(&self) -> Self {
        BlochState {
            rho_aa: self.rho_aa,
            rho_bb: self.rho_bb,
            rho_ax: self.rho_ax.conj(),
            rho_ba: self.rho_ba.conj(),
            rho_bx: self.rho_bx.conj(),
        }
    }

    /// Checks the physical-state bounds at tolerance `tol`.
    pub fn within_bounds(&self, tol: f64) -> bool {
        let pop_ok = |p: f64| p >= -tol && p <= 1.0 + tol;
        pop_ok(self.rho_aa)
            && pop_ok(self.rho_bb)
            && pop_ok(self.rho_xx())
            && self.rho_ax.norm() <= 1.0 + tol
            && self.rho_ba.norm() <= 1.0 + tol
            && self.rho_bx.norm() <= 1.0 + tol
    }
}

impl OdeState for BlochState {
    #[inline]
    fn axpy(&self, h: f64, o: &Self) -> Self {
        BlochState {
            rho_aa: self.rho_aa + h * o.rho_aa,
            rho_bb: self.rho_bb + h * o.rho_bb,
            rho_ax: self.rho_ax + o.rho_ax * h,
            rho_ba: self.rho_ba + o.rho_ba * h,
            rho_bx: self.rho_bx + o.rho_bx * h,
        }
    }
}

/// Complex Rabi-frequency envelopes at one instant, rad/s.
///
/// `omega1 = ℘_AX E₁/ħ`, `omega2 = ℘_BI E₂/ħ`, `omega_s = ℘_BX E_s/ħ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldTriple {
    pub omega1: C64,
    pub omega2: C64,
    pub omega_s: C64,
}

impl FieldTriple {
    pub fn is_finite(&self) -> bool {
        self.omega1.is_finite() && self.omega2.is_finite() && self.omega_s.is_finite()
    }
}

/// Effective two-photon coupling `℘_BI E₂ ℘_IA E₁/(ħ²Δ)` and differential
/// AC-Stark shift `(|℘_BI E₂|² − |℘_IA E₁|²)/(ħ²Δ)`, both rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoPhoton {
    pub coupling: C64,
    pub stark: f64,
}

/// Field-independent prefactors of [`TwoPhoton`], 1/(s·(V/m)²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TwoPhotonCoefficients {
    cross: f64,
    read: f64,
    pump: f64,
}

impl TwoPhotonCoefficients {
    #[inline]
    pub(crate) fn eval(&self, e1: C64, e2: C64) -> TwoPhoton {
        TwoPhoton {
            coupling: e2 * e1 * self.cross,
            stark: self.read * e2.norm_sqr() - self.pump * e1.norm_sqr(),
        }
    }
}

/// Two-photon coupling and Stark shift for pump field `e1` and read field
/// `e2` (V/m).
pub fn two_photon_terms(e1: C64, e2: C64, params: &MediumParams) -> Result<TwoPhoton, ModelError> {
    Ok(params.two_photon_coefficients()?.eval(e1, e2))
}

/// Adiabatic (steady-state) intermediate coherences `(ρ_IA, ρ_BI)` with
/// `ρ_II = 0`. Diagnostic only; the integrator never uses them.
pub fn intermediate_coherences(
    state: &BlochState,
    e1: C64,
    e2: C64,
    params: &MediumParams,
) -> Result<(C64, C64), ModelError> {
    require("delta", params.delta, params.delta != 0.0, "nonzero")?;
    let g1 = e1 * (params.dipole_ia / HBAR);
    let g2 = e2 * (params.dipole_bi / HBAR);
    let rho_ia = (g1 * state.rho_aa + g2.conj() * state.rho_ba) / params.delta;
    let rho_bi = (g2 * state.rho_bb + g1.conj() * state.rho_ba) / params.delta;
    Ok((rho_ia, rho_bi))
}

const I: C64 = C64::new(0.0, 1.0);

/// Time derivative of the effective three-level density matrix.
///
/// `tp` must be evaluated from the same instant's pump and read fields
/// (see [`two_photon_terms`]). Only `omega1` and `omega_s` of `fields` enter
/// directly; the read field acts solely through `tp`.
#[inline]
pub fn bloch_rhs(
    state: &BlochState,
    fields: &FieldTriple,
    tp: &TwoPhoton,
    rates: &DerivedRates,
    params: &MediumParams,
) -> BlochState {
    let BlochState { rho_aa, rho_bb, rho_ax, rho_ba, rho_bx } = *state;
    let rho_xx = 1.0 - rho_aa - rho_bb;
    let o1 = fields.omega1;
    let os = fields.omega_s;
    let t = tp.coupling;

    let d_ax = -rates.gamma_ax * rho_ax + I * o1 * (rho_xx - rho_aa) - I * os * rho_ba.conj();
    let d_ba = C64::new(-rates.gamma_ba, tp.stark) * rho_ba + I * t * (rho_aa - rho_bb)
        - I * o1.conj() * rho_bx
        + I * os * rho_ax.conj();
    let d_bx = -rates.gamma_bx * rho_bx + I * os * (rho_xx - rho_bb) - I * o1 * rho_ba;

    // (i·T·ρ_AB + h.c.) = −2·Im(T·ρ_AB)
    let tpa = -2.0 * (t * rho_ba.conj()).im;
    let signal = -2.0 * (os * rho_bx.conj()).im;
    let pump = -2.0 * (o1 * rho_ax.conj()).im;

    BlochState {
        rho_aa: -params.gamma_a * rho_aa - tpa + pump,
        rho_bb: -params.gamma_b * rho_bb + tpa + signal,
        rho_ax: d_ax,
        rho_ba: d_ba,
        rho_bx: d_bx,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn reference_rates() {
        let r = derive_rates(&MediumParams::reference()).unwrap();
        assert!((r.gamma_ax - 1.005e9).abs() < 1e-3);
        assert!((r.gamma_ba - 1.01e9).abs() < 1e-3);
        assert!((r.gamma_bx - 1.005e9).abs() < 1e-3);
        // frozen from an independent evaluation of 3nλ²γ/(8π)
        assert!((r.eta_bx / 5_177_556_511_476_319.0 - 1.0).abs() < 1e-12);
        assert!((r.eta_ax / 3.055_774_907_364_39e16 - 1.0).abs() < 1e-12);
        assert!((r.eta_bx / 5.19e15 - 1.0).abs() < 0.01);
    }

    #[test]
    fn rates_without_collisions() {
        let g = 3.3e8;
        let p = MediumParams { gamma_a: g, gamma_b: g, gamma_col: 0.0, ..MediumParams::reference() };
        let r = derive_rates(&p).unwrap();
        assert_eq!(r.gamma_ax, g / 2.0);
        assert_eq!(r.gamma_bx, g / 2.0);
        assert_eq!(r.gamma_ba, g);
    }

    #[test]
    fn rejects_bad_parameters() {
        let base = MediumParams::reference();
        for p in [
            MediumParams { density: -1.0, ..base },
            MediumParams { lambda_bx: 0.0, ..base },
            MediumParams { gamma_a: -1.0, ..base },
            MediumParams { gamma_col: f64::NAN, ..base },
        ] {
            assert!(derive_rates(&p).is_err());
            assert!(p.validate().is_err());
        }
        assert!(MediumParams { dipole_bi: 0.0, ..base }.validate().is_err());
        assert!(MediumParams { length: 0.0, ..base }.validate().is_err());
        assert!(matches!(
            MediumParams { delta: 5e10, ..base }.validate(),
            Err(ModelError::DetuningTooSmall { .. })
        ));
        base.validate().unwrap();
        MediumParams { delta: 2.0 * std::f64::consts::PI * 1e15, ..base }.validate().unwrap();
    }

    #[test]
    fn envelope_shape() {
        let p = PulseSpec::new(PulseRole::Pump, 3e10, 50e-15, 120e-15);
        assert_eq!(p.envelope_at(120e-15), c(3e10, 0.0));
        for t in [95e-15, 145e-15] {
            let a = p.envelope_at(t);
            assert!((a.re / 3e10 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
            assert_eq!(a.im, 0.0);
        }
        let null = PulseSpec { peak_amplitude: 0.0, ..p };
        assert_eq!(null.envelope_at(-3e-13), c(0.0, 0.0));
        assert!(PulseSpec { duration_fwhm: 0.0, ..p }.validate().is_err());
        assert!(PulseSpec { peak_amplitude: -1.0, ..p }.validate().is_err());
    }

    #[test]
    fn envelope_area_matches_quadrature() {
        let p = PulseSpec::new(PulseRole::Read, 0.7e10, 50e-15, 0.0);
        let h = 0.01e-15;
        let sum: f64 = (-40_000..=40_000).map(|k| p.envelope_at(k as f64 * h).re).sum::<f64>() * h;
        assert!((sum / p.amplitude_area() - 1.0).abs() < 1e-10);
    }

    fn ctx() -> (MediumParams, DerivedRates) {
        let p = MediumParams::reference();
        (p, derive_rates(&p).unwrap())
    }

    #[test]
    fn ground_state_is_stationary() {
        let (p, r) = ctx();
        let d = bloch_rhs(&BlochState::ground(), &FieldTriple::default(), &TwoPhoton::default(), &r, &p);
        assert_eq!(d, BlochState::default());
    }

    #[test]
    fn free_coherence_decays() {
        let (p, r) = ctx();
        let s = BlochState { rho_ax: c(0.1, 0.0), ..BlochState::ground() };
        let d = bloch_rhs(&s, &FieldTriple::default(), &TwoPhoton::default(), &r, &p);
        assert!((d.rho_ax.re + 1.005e8).abs() < 1e-4);
        assert_eq!(d.rho_ax.im, 0.0);
        assert_eq!((d.rho_ba, d.rho_bx, d.rho_aa, d.rho_bb), (c(0.0, 0.0), c(0.0, 0.0), 0.0, 0.0));

        let s = BlochState { rho_aa: 0.3, rho_bb: 0.2, ..BlochState::ground() };
        let d = bloch_rhs(&s, &FieldTriple::default(), &TwoPhoton::default(), &r, &p);
        assert_eq!(d.rho_aa, -p.gamma_a * 0.3);
        assert_eq!(d.rho_bb, -p.gamma_b * 0.2);
    }

    #[test]
    fn pump_drives_ground_state_coherence() {
        let (p, r) = ctx();
        let omega1 = p.pump_rabi(3e10);
        // ℘E/ħ with ℘ = 1e-30 C·m, E = 3e10 V/m
        assert!((omega1 / 2.844_756_470_483_224e14 - 1.0).abs() < 1e-12);
        let f = FieldTriple { omega1: c(omega1, 0.0), ..Default::default() };
        let d = bloch_rhs(&BlochState::ground(), &f, &TwoPhoton::default(), &r, &p);
        assert_eq!(d.rho_ax, c(0.0, omega1));
        assert_eq!((d.rho_ba, d.rho_bx), (c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn two_photon_reference_values() {
        let p = MediumParams::reference();
        let tp = two_photon_terms(c(3e10, 0.0), c(0.7e10, 0.0), &p).unwrap();
        assert!((tp.coupling.norm() / 18_882_825_211_497.727 - 1.0).abs() < 1e-12);
        assert!((tp.coupling.norm() / 1.89e13 - 1.0).abs() < 0.01);

        assert_eq!(two_photon_terms(c(0.0, 0.0), c(1e10, 0.0), &p).unwrap().coupling, c(0.0, 0.0));
        assert_eq!(two_photon_terms(c(1e10, 0.0), c(0.0, 0.0), &p).unwrap().coupling, c(0.0, 0.0));
        let e = c(2e10, -1e10);
        assert_eq!(two_photon_terms(e, e, &p).unwrap().stark, 0.0);
        assert!(two_photon_terms(e, e, &MediumParams { delta: 0.0, ..p }).is_err());
    }

    #[test]
    fn intermediate_coherence_cases() {
        let p = MediumParams::reference();
        let s = BlochState::with_populations(0.3, 0.1);
        assert_eq!(
            intermediate_coherences(&s, c(0.0, 0.0), c(0.0, 0.0), &p).unwrap(),
            (c(0.0, 0.0), c(0.0, 0.0))
        );
        let full = BlochState::with_populations(1.0, 0.0);
        let (ia, bi) = intermediate_coherences(&full, c(3e10, 0.0), c(0.0, 0.0), &p).unwrap();
        assert!((ia.re / (p.dipole_ia * 3e10 / (HBAR * p.delta)) - 1.0).abs() < 1e-14);
        assert_eq!(bi, c(0.0, 0.0));
        assert!(intermediate_coherences(&full, c(1.0, 0.0), c(1.0, 0.0), &MediumParams { delta: 0.0, ..p }).is_err());
    }

    fn arb_c64() -> impl Strategy<Value = C64> {
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
    }

    fn arb_state() -> impl Strategy<Value = BlochState> {
        (0.0f64..0.5, 0.0f64..0.5, arb_c64(), arb_c64(), arb_c64()).prop_map(|(aa, bb, ax, ba, bx)| BlochState {
            rho_aa: aa,
            rho_bb: bb,
            rho_ax: ax * 0.4,
            rho_ba: ba * 0.4,
            rho_bx: bx * 0.4,
        })
    }

    proptest! {
        #[test]
        fn ground_source_is_linear_in_pump(a in -1e14f64..1e14, b in -1e14f64..1e14, k in -8.0f64..8.0) {
            let (p, r) = ctx();
            let rhs = |o: C64| {
                let f = FieldTriple { omega1: o, ..Default::default() };
                bloch_rhs(&BlochState::ground(), &f, &TwoPhoton::default(), &r, &p).rho_ax
            };
            let o = C64::new(a, b);
            prop_assert_eq!(rhs(o * k), C64::new(0.0, 1.0) * o * k);
            prop_assert!((rhs(o * k) - rhs(o) * k).norm() <= 1e-12 * (o * k).norm());
        }

        #[test]
        fn two_photon_bilinear_and_quadratic(e1 in arb_c64(), e2 in arb_c64(), s in -3.0f64..3.0, t in -3.0f64..3.0) {
            let p = MediumParams::reference();
            let (e1, e2) = (e1 * 1e10, e2 * 1e10);
            let base = two_photon_terms(e1, e2, &p).unwrap();
            let scaled = two_photon_terms(e1 * s, e2 * t, &p).unwrap();
            prop_assert!((scaled.coupling - base.coupling * (s * t)).norm() <= 1e-12 * base.coupling.norm().max(1.0) * (s * t).abs().max(1.0));
            let both = two_photon_terms(e1 * s, e2 * s, &p).unwrap();
            prop_assert!((both.stark - base.stark * s * s).abs() <= 1e-12 * (base.stark.abs().max(1.0)) * (s * s).max(1.0) * 1e2);
        }

        #[test]
        fn implied_ground_population_rate(state in arb_state(), o1 in arb_c64(), os in arb_c64(), t in arb_c64(), stark in -1e13f64..1e13) {
            let (p, r) = ctx();
            let f = FieldTriple { omega1: o1 * 1e14, omega2: C64::new(0.0, 0.0), omega_s: os * 1e13 };
            let tp = TwoPhoton { coupling: t * 1e13, stark };
            let d = bloch_rhs(&state, &f, &tp, &r, &p);
            // population leaving A and B by decay plus field exchange with X
            let exchange_x = -2.0 * (f.omega1 * state.rho_ax.conj()).im - 2.0 * (f.omega_s * state.rho_bx.conj()).im;
            let expected = p.gamma_a * state.rho_aa + p.gamma_b * state.rho_bb - exchange_x;
            let implied_xx = -(d.rho_aa + d.rho_bb);
            prop_assert!((implied_xx - expected).abs() <= 1e-9 * (1e14 + expected.abs()));
        }
    }
}
