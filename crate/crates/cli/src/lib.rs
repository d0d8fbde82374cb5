//! Command-line front end for the `mbprop` simulator: configuration files,
//! sweeps, CSV/SVG output and run manifests.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

/// Shortest decimal that parses back to the same `f64`; plain notation for
/// moderate magnitudes, exponent notation otherwise.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
