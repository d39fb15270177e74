//! Characterization of RF inhomogeneity from Torrey-oscillation data.
//!
//! The RF field of an NMR probe is not perfectly uniform over the sample,
//! so a long pulse dephases the ensemble and the nutation signal decays
//! (the Torrey oscillation). This crate models that inhomogeneity as a
//! parametric asymmetric-Lorentzian distribution of RF amplitudes, forward
//! simulates the resulting q-quantum oscillation decays in 1D (single
//! channel) and 2D (two-channel correlation), and recovers the distribution
//! parameters by fitting the simulated frequency-domain profile to a
//! measured one. An exact spin-state simulator verifies the NOON-state
//! phase amplification that makes high-order coherences attractive for the
//! measurement: a z-rotation by `phi` on the M spins of an N-spin NOON
//! state shows up as a phase of `(N-1) phi` on the detected line, so the
//! oscillation runs N-1 times faster and the decay can be captured within
//! short, duty-cycle-safe pulses.
//!
//! The typical pipeline is
//!
//! ```
//! use torreyfit::{fit_1d, transform_1d, simulate_1d, Fit1DConfig, FitOptions, RfiProfile1D};
//! use torreyfit::torrey::uniform_tau_grid;
//!
//! // Forward-simulate a 9-quantum decay for a known profile ...
//! let profile = RfiProfile1D::new(21_000.0, 0.057, 0.012, 1024)?.normalize()?;
//! let tau = uniform_tau_grid(256, 1.0 / (4.0 * 9.0 * 21_000.0));
//! let series = simulate_1d(&profile, 9, &tau)?;
//! let spectrum = transform_1d(&series, 512)?;
//!
//! // ... and recover the widths from the spectrum alone.
//! let cfg = Fit1DConfig::new(21_000.0, 9, tau, 512);
//! let result = fit_1d(&spectrum, &cfg, &FitOptions::default())?;
//! assert!((result.params.lambda1 - 0.057).abs() / 0.057 < 0.02);
//! # Ok::<(), torreyfit::Error>(())
//! ```

pub mod envelope;
pub mod error;
pub mod fit;
pub mod io;
mod numeric;
pub mod rfi;
pub mod simplex;
pub mod spectral;
pub mod spin;
pub mod torrey;

pub use error::{Error, Result};
pub use fit::{
    estimate_nu0, estimate_nu0_2d, fit_1d, fit_2d, objective_1d, objective_2d, Fit1DConfig,
    Fit1DParams, Fit2DConfig, Fit2DParams, FitOptions, FitResult, FitTraceEntry,
};
pub use rfi::{RfiProfile1D, RfiProfile2D};
pub use spectral::{transform_1d, transform_2d, SpectralProfile, SpectralProfile2D};
pub use spin::{noon_cycle_phase, pfg_ratio, torrey_phase_sequence, wrap_phase, SpinState};
pub use torrey::{simulate_1d, simulate_2d, TorreySeries, TorreySeries2D};
