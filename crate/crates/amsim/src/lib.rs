//! Forward simulation and inverse fitting for a dissipatively coupled
//! acousto-mechanical system: a high-overtone bulk acoustic resonator (HBAR)
//! whose external dissipation rate is modulated by the flexural motion of a
//! membrane electrode.
//!
//! The crate is organised around four layers:
//!
//! - [`circuit`]: the modified Butterworth-Van Dyke lumped-element network,
//!   one-port reflection, mode characterisation, and the single-photon
//!   coupling strengths derived from circuit derivatives.
//! - [`response`]: steady-state pump response, enhanced coupling rates, the
//!   induced-transparency/amplification probe spectrum, effective mechanical
//!   linewidth, and group delay.
//! - [`dynamics`] and [`comb`]: time-domain integration of the nonlinear
//!   mean-field equations under one- and two-tone driving, FFT comb analysis,
//!   phase-modulation sideband amplitudes, and Lissajous phase-coherence
//!   checks.
//! - [`fitting`]: a self-contained damped least-squares engine plus the
//!   reflection, ringdown, and transparency-window fitters built on it.
//!
//! [`config`] holds the human-readable parameter/scenario file formats shared
//! by the command-line front end.

pub mod circuit;
pub mod comb;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod lsq;
pub mod response;

pub use error::Error;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Convert a power in dBm to watts.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Convert a power in watts to dBm.
pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * watt.log10() + 30.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        assert!((dbm_to_watt(0.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watt(30.0) - 1.0).abs() < 1e-12);
        let p = dbm_to_watt(-5.0);
        assert!((watt_to_dbm(p) - (-5.0)).abs() < 1e-12);
    }
}
