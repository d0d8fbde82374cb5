//! Reference integrator that keeps the intermediate level I explicitly.
//!
//! Independent of the effective three-level equations: it evolves the full
//! 4×4 density matrix under the RWA Hamiltonian
//!
//! ```text
//! H/ħ = Δ|I⟩⟨I| − (Ω₁|A⟩⟨X| + g₁|I⟩⟨A| + g₂|B⟩⟨I| + Ω_s|B⟩⟨X| + h.c.)
//! ```
//!
//! with `g₁ = ℘_IA E₁/ħ`, `g₂ = ℘_BI E₂/ħ`, spontaneous decay A→X and B→X
//! and pairwise dephasing `(γ_i + γ_j)/2 + γ_col`. Used only to check the
//! adiabatic elimination; propagation is not modelled here.

use num_complex::Complex64 as C64;

use crate::constants::HBAR;
use crate::model::{BlochState, MediumParams};
use crate::ode::{rk4_step, OdeState};

const X: usize = 0;
const A: usize = 1;
const LI: usize = 2;
const B: usize = 3;

/// Full density matrix, indices ordered X, A, I, B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(pub [[C64; 4]; 4]);

impl OdeState for DensityMatrix4 {
    fn axpy(&self, h: f64, other: &Self) -> Self {
        let mut out = self.0;
        for (row, orow) in out.iter_mut().zip(other.0.iter()) {
            for (v, o) in row.iter_mut().zip(orow.iter()) {
                *v += o * h;
            }
        }
        DensityMatrix4(out)
    }
}

impl DensityMatrix4 {
    pub fn from_bloch(s: &BlochState) -> Self {
        let mut m = [[C64::new(0.0, 0.0); 4]; 4];
        m[X][X] = s.rho_xx().into();
        m[A][A] = s.rho_aa.into();
        m[B][B] = s.rho_bb.into();
        m[A][X] = s.rho_ax;
        m[X][A] = s.rho_ax.conj();
        m[B][A] = s.rho_ba;
        m[A][B] = s.rho_ba.conj();
        m[B][X] = s.rho_bx;
        m[X][B] = s.rho_bx.conj();
        DensityMatrix4(m)
    }

    /// Projection onto the three-level variables (ρ_II is dropped).
    pub fn to_bloch(&self) -> BlochState {
        let m = &self.0;
        BlochState {
            rho_aa: m[A][A].re,
            rho_bb: m[B][B].re,
            rho_ax: m[A][X],
            rho_ba: m[B][A],
            rho_bx: m[B][X],
        }
    }

    pub fn rho_ii(&self) -> f64 {
        self.0[LI][LI].re
    }

    pub fn rho_ia(&self) -> C64 {
        self.0[LI][A]
    }

    pub fn rho_bi(&self) -> C64 {
        self.0[B][LI]
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|k| self.0[k][k].re).sum()
    }
}

/// Applied field amplitudes (V/m) for pump, read and signal at time `t`.
pub trait FieldSource {
    fn fields(&self, t: f64) -> (C64, C64, C64);
}

impl<F: Fn(f64) -> (C64, C64, C64)> FieldSource for F {
    fn fields(&self, t: f64) -> (C64, C64, C64) {
        self(t)
    }
}

fn rhs(rho: &DensityMatrix4, e: (C64, C64, C64), p: &MediumParams) -> DensityMatrix4 {
    let z = C64::new(0.0, 0.0);
    let o1 = e.0 * (p.dipole_ax / HBAR);
    let g1 = e.0 * (p.dipole_ia / HBAR);
    let g2 = e.1 * (p.dipole_bi / HBAR);
    let os = e.2 * (p.dipole_bx / HBAR);

    let mut h = [[z; 4]; 4];
    h[LI][LI] = p.delta.into();
    h[A][X] = -o1;
    h[LI][A] = -g1;
    h[B][LI] = -g2;
    h[B][X] = -os;
    for i in 0..4 {
        for j in 0..i {
            h[j][i] = h[i][j].conj();
        }
    }

    let decay = [0.0, p.gamma_a, 0.0, p.gamma_b];
    let m = &rho.0;
    let mut d = [[z; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut comm = z;
            for k in 0..4 {
                comm += h[i][k] * m[k][j] - m[i][k] * h[k][j];
            }
            d[i][j] = C64::new(0.0, -1.0) * comm;
            if i == j {
                d[i][i] -= m[i][i] * decay[i];
            } else {
                d[i][j] -= m[i][j] * (0.5 * (decay[i] + decay[j]) + p.gamma_col);
            }
        }
    }
    d[X][X] += m[A][A] * p.gamma_a + m[B][B] * p.gamma_b;
    DensityMatrix4(d)
}

/// Integrates `steps` RK4 steps of size `dt` from `t0`; returns the state
/// after every step (length `steps + 1`, starting with `initial`).
pub fn integrate<F: FieldSource>(
    params: &MediumParams,
    initial: &BlochState,
    fields: &F,
    t0: f64,
    dt: f64,
    steps: usize,
) -> Vec<DensityMatrix4> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut rho = DensityMatrix4::from_bloch(initial);
    out.push(rho);
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        rho = rk4_step(&rho, t, dt, |t, r| rhs(r, fields.fields(t), params));
        out.push(rho);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_is_conserved() {
        let p = MediumParams::reference();
        let f = |t: f64| {
            let g = (-(t / 30e-15).powi(2)).exp();
            (C64::new(3e10 * g, 0.0), C64::new(0.7e10 * g, 0.0), C64::new(1e8 * g, 0.0))
        };
        let traj = integrate(&p, &BlochState::with_populations(0.0, 0.3), &f, -100e-15, 0.02e-15, 10_000);
        for r in &traj {
            assert!((r.trace() - 1.0).abs() < 1e-10);
        }
    }
}
