//! Weak-excitation closed forms for the stored X–A coherence, its
//! re-emitted intensity and the two-photon readout rate.
//!
//! Only proportionalities are physically meaningful for the intensity and
//! rate estimates. The coherence carries an absolute scale: to first order
//! in the pump, `ρ̇_AX = iΩ₁(t)(ρ_XX − ρ_AA)` integrates to the full pulse
//! area `∫Ω₁dt = Ω₁ᵖ·δt·√(π/(2 ln 2))` for a Gaussian-intensity pulse of
//! intensity FWHM δt. That area is the prefactor used below, which makes
//! the weak-field comparison with the solver a magnitude check rather than
//! a shape check.

use num_complex::Complex64 as C64;
use std::f64::consts::{LN_2, PI};

/// Inputs shared by the perturbative estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativeInputs {
    /// Ω₁ᵖ, rad/s
    pub peak_rabi_pump: f64,
    /// Intensity FWHM δt, s
    pub duration_fwhm: f64,
    pub rho_xx0: f64,
    pub rho_aa0: f64,
    pub rho_bb0: f64,
    /// Γ_AX, 1/s
    pub gamma_ax: f64,
    /// Ω₂ᵖ, rad/s
    pub peak_rabi_read: f64,
}

impl PerturbativeInputs {
    /// `∫Ω₁(t)dt` of a Gaussian-intensity envelope.
    pub fn pump_area(&self) -> f64 {
        self.peak_rabi_pump * self.duration_fwhm * (PI / (2.0 * LN_2)).sqrt()
    }
}

/// First-order `ρ_AX` a time `t` after the pump (t measured from the pump
/// center, valid once the pulse is over).
pub fn perturbative_coherence(input: &PerturbativeInputs, t: f64) -> C64 {
    let amplitude = input.pump_area() * (input.rho_xx0 - input.rho_aa0);
    C64::new(0.0, amplitude * (-input.gamma_ax * t).exp())
}

/// Re-emitted pump-band intensity, `|ρ_AX(t)|²`; decays at exactly `2Γ_AX`.
pub fn retained_intensity(input: &PerturbativeInputs, t: f64) -> f64 {
    perturbative_coherence(input, t).norm_sqr()
}

/// Two-photon readout rate for a read pulse delayed by `tau` (arbitrary
/// units).
pub fn tpa_rate_estimate(input: &PerturbativeInputs, tau: f64) -> f64 {
    let e = input.peak_rabi_pump * input.peak_rabi_read * input.duration_fwhm * input.duration_fwhm;
    let xa = input.rho_xx0 - input.rho_aa0;
    let ba = input.rho_bb0 - input.rho_aa0;
    e * e * xa * xa * ba * ba * (-2.0 * input.gamma_ax * tau).exp()
}
