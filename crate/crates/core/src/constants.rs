//! Fixed physical constants (SI).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 2.997_924_58e8;

pub const FS: f64 = 1e-15;
pub const PS: f64 = 1e-12;
pub const NS: f64 = 1e-9;
