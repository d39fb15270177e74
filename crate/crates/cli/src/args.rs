//! Command-line surface and config-file merging.
//!
//! Every command takes its parameters from three layers: built-in defaults,
//! an optional `--config <json>` file, and flags, with flags winning. The
//! merged, fully-resolved configuration is echoed into every JSON output so
//! a result file always records how it was produced.
//!
//! Files store SI units only (seconds, hertz). Flags additionally accept
//! explicit unit suffixes: `21khz` on frequency flags, `11.1us` / `50ms` on
//! duration flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "torreyfit",
    version,
    about = "RF-inhomogeneity characterization from Torrey-oscillation data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic Torrey series (optional damping and seeded
    /// noise) plus a ground-truth sidecar JSON
    Synth(SynthArgs),
    /// Forward-simulate a noiseless Torrey series from profile parameters
    Simulate(SimulateArgs),
    /// Transform a Torrey-series CSV into a spectral-profile CSV
    Spectrum(SpectrumArgs),
    /// Recover (lambda1, lambda2) from a 1D Torrey-series CSV
    Fit1d(FitArgs),
    /// Recover (lambda0, betas) from a 2D Torrey-series CSV
    Fit2d(FitArgs),
    /// Verify the spin-system phase laws and report PFG ratios
    Oracle(OracleArgs),
}

/// Parses a frequency flag: plain numbers are Hz, `hz`/`khz` suffixes are
/// accepted case-insensitively.
pub fn parse_frequency(raw: &str) -> Result<f64, String> {
    let s = raw.trim();
    let lower = s.to_ascii_lowercase();
    let (number, scale) = if let Some(rest) = lower.strip_suffix("khz") {
        (rest, 1e3)
    } else if let Some(rest) = lower.strip_suffix("hz") {
        (rest, 1.0)
    } else {
        (lower.as_str(), 1.0)
    };
    number
        .trim()
        .parse::<f64>()
        .map(|v| v * scale)
        .map_err(|e| format!("invalid frequency {raw:?}: {e}"))
}

/// Parses a duration flag: plain numbers are seconds; `s`, `ms`, `us`
/// suffixes are accepted.
pub fn parse_duration(raw: &str) -> Result<f64, String> {
    let s = raw.trim();
    let lower = s.to_ascii_lowercase();
    let (number, scale) = if let Some(rest) = lower.strip_suffix("us") {
        (rest, 1e-6)
    } else if let Some(rest) = lower.strip_suffix("ms") {
        (rest, 1e-3)
    } else if let Some(rest) = lower.strip_suffix('s') {
        (rest, 1.0)
    } else {
        (lower.as_str(), 1.0)
    };
    number
        .trim()
        .parse::<f64>()
        .map(|v| v * scale)
        .map_err(|e| format!("invalid duration {raw:?}: {e}"))
}

macro_rules! merge_options {
    ($flags:expr, $file:expr, $($field:ident),+ $(,)?) => {{
        let mut merged = $flags;
        $( merged.$field = merged.$field.or($file.$field); )+
        merged
    }};
}

/// Profile, grid and noise parameters shared by `synth` and `simulate`;
/// which of the 1D or 2D parameter sets is present decides the mode.
#[derive(Args, Serialize, Deserialize, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    /// Nominal RF amplitude in Hz (1D)
    #[arg(long = "nu0-hz", value_parser = parse_frequency)]
    pub nu0_hz: Option<f64>,
    /// Below-nominal width (1D)
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// At-or-above-nominal width (1D)
    #[arg(long)]
    pub lambda2: Option<f64>,

    /// Nominal amplitude of the H channel in Hz (2D)
    #[arg(long = "nu0-h-hz", value_parser = parse_frequency)]
    pub nu0_h_hz: Option<f64>,
    /// Nominal amplitude of the P channel in Hz (2D)
    #[arg(long = "nu0-p-hz", value_parser = parse_frequency)]
    pub nu0_p_hz: Option<f64>,
    /// Overall width (2D)
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Quadrant asymmetry, H axis below nominal (2D)
    #[arg(long = "beta-h1")]
    pub beta_h1: Option<f64>,
    /// Quadrant asymmetry, H axis at or above nominal (2D)
    #[arg(long = "beta-h2")]
    pub beta_h2: Option<f64>,
    /// Quadrant asymmetry, P axis below nominal (2D)
    #[arg(long = "beta-p1")]
    pub beta_p1: Option<f64>,
    /// Quadrant asymmetry, P axis at or above nominal (2D)
    #[arg(long = "beta-p2")]
    pub beta_p2: Option<f64>,

    /// Quantum order (1D; default 9)
    #[arg(long)]
    pub q: Option<u32>,
    /// H-axis quantum order (2D; default 9)
    #[arg(long = "q-h")]
    pub q_h: Option<u32>,
    /// P-axis quantum order (2D; default 1)
    #[arg(long = "q-p")]
    pub q_p: Option<u32>,

    /// Number of tau samples (1D; default 256)
    #[arg(long)]
    pub points: Option<usize>,
    /// H-axis tau samples (2D; default 128)
    #[arg(long = "points-h")]
    pub points_h: Option<usize>,
    /// P-axis tau samples (2D; default 96)
    #[arg(long = "points-p")]
    pub points_p: Option<usize>,

    /// Tau increment in seconds (default 1/(4 q nu0): Nyquist at the
    /// model's support edge)
    #[arg(long = "dtau-s", value_parser = parse_duration)]
    pub dtau_s: Option<f64>,
    /// H-axis tau increment in seconds (2D)
    #[arg(long = "dtau-h-s", value_parser = parse_duration)]
    pub dtau_h_s: Option<f64>,
    /// P-axis tau increment in seconds (2D)
    #[arg(long = "dtau-p-s", value_parser = parse_duration)]
    pub dtau_p_s: Option<f64>,

    /// Profile frequency-grid resolution (default 1024 in 1D, 256 in 2D)
    #[arg(long = "grid-points")]
    pub grid_points: Option<usize>,
    /// Exponential damping time constant in seconds (default: none)
    #[arg(long = "damping-s", value_parser = parse_duration)]
    pub damping_s: Option<f64>,
    /// Additive Gaussian noise, as a fraction of the peak amplitude
    /// (synth only; default 0)
    #[arg(long = "noise-sigma")]
    pub noise_sigma: Option<f64>,
    /// RNG seed for the noise (default 0; runs are reproducible by default)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output CSV path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ground-truth sidecar path (synth only; default: output path with a
    /// .truth.json extension)
    #[arg(long = "truth-out")]
    pub truth_out: Option<PathBuf>,
}

impl SynthParams {
    pub fn merge_over(self, file: SynthParams) -> SynthParams {
        merge_options!(
            self, file, nu0_hz, lambda1, lambda2, nu0_h_hz, nu0_p_hz, lambda0, beta_h1, beta_h2,
            beta_p1, beta_p2, q, q_h, q_p, points, points_h, points_p, dtau_s, dtau_h_s, dtau_p_s,
            grid_points, damping_s, noise_sigma, seed, out, truth_out,
        )
    }
}

#[derive(Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub params: SynthParams,
    /// JSON file with the same keys as the flags (SI units, no suffixes)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: SynthParams,
    /// JSON file with the same keys as the flags (SI units, no suffixes)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumParams {
    /// Input Torrey-series CSV (1D or 2D, detected from the header)
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Output spectral-profile CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Quantum order of the input series (1D; default 9)
    #[arg(long)]
    pub q: Option<u32>,
    /// H-axis quantum order (2D; default 9)
    #[arg(long = "q-h")]
    pub q_h: Option<u32>,
    /// P-axis quantum order (2D; default 1)
    #[arg(long = "q-p")]
    pub q_p: Option<u32>,
    /// Transform length (default max(256, 2x data length))
    #[arg(long = "zero-fill")]
    pub zero_fill: Option<usize>,
    /// H-axis transform length (2D)
    #[arg(long = "zero-fill-h")]
    pub zero_fill_h: Option<usize>,
    /// P-axis transform length (2D)
    #[arg(long = "zero-fill-p")]
    pub zero_fill_p: Option<usize>,
    /// Divide the frequency axis by q, mapping nu_q to nu
    #[arg(long)]
    pub rescale: bool,
}

impl SpectrumParams {
    pub fn merge_over(self, file: SpectrumParams) -> SpectrumParams {
        let rescale = self.rescale || file.rescale;
        let mut merged = merge_options!(
            self, file, input, out, q, q_h, q_p, zero_fill, zero_fill_h, zero_fill_p,
        );
        merged.rescale = rescale;
        merged
    }
}

#[derive(Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub params: SpectrumParams,
    /// JSON file with the same keys as the flags (SI units, no suffixes)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FitParams {
    /// Input Torrey-series CSV
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Output FitResult JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Nominal RF amplitude in Hz (1D; default: estimated as
    /// spectral-peak location / q)
    #[arg(long = "nu0-hz", value_parser = parse_frequency)]
    pub nu0_hz: Option<f64>,
    /// H-channel nominal amplitude in Hz (2D; default: estimated)
    #[arg(long = "nu0-h-hz", value_parser = parse_frequency)]
    pub nu0_h_hz: Option<f64>,
    /// P-channel nominal amplitude in Hz (2D; default: estimated)
    #[arg(long = "nu0-p-hz", value_parser = parse_frequency)]
    pub nu0_p_hz: Option<f64>,
    /// Quantum order (1D; default 9)
    #[arg(long)]
    pub q: Option<u32>,
    /// H-axis quantum order (2D; default 9)
    #[arg(long = "q-h")]
    pub q_h: Option<u32>,
    /// P-axis quantum order (2D; default 1)
    #[arg(long = "q-p")]
    pub q_p: Option<u32>,
    /// Transform length (default max(256, 2x data length))
    #[arg(long = "zero-fill")]
    pub zero_fill: Option<usize>,
    /// H-axis transform length (2D)
    #[arg(long = "zero-fill-h")]
    pub zero_fill_h: Option<usize>,
    /// P-axis transform length (2D)
    #[arg(long = "zero-fill-p")]
    pub zero_fill_p: Option<usize>,
    /// Model frequency-grid resolution (default 1024 in 1D, 256 in 2D)
    #[arg(long = "grid-points")]
    pub grid_points: Option<usize>,
    /// Simplex iteration cap per start (default 2000)
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Simplex convergence tolerance in log-parameter space (default 1e-6)
    #[arg(long)]
    pub tol: Option<f64>,
}

impl FitParams {
    pub fn merge_over(self, file: FitParams) -> FitParams {
        merge_options!(
            self, file, input, out, nu0_hz, nu0_h_hz, nu0_p_hz, q, q_h, q_p, zero_fill,
            zero_fill_h, zero_fill_p, grid_points, max_iters, tol,
        )
    }
}

#[derive(Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub params: FitParams,
    /// JSON file with the same keys as the flags (SI units, no suffixes)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    /// Largest spin-system size to verify (default 10)
    #[arg(long = "n-max")]
    pub n_max: Option<usize>,
    /// Random z-rotation angles per system size (default 32)
    #[arg(long = "phi-samples")]
    pub phi_samples: Option<usize>,
    /// Pass tolerance on phase errors in radians (default 1e-10)
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// gammaM/gammaA for the PFG ratio (default: 1H/31P, about 2.46805)
    #[arg(long = "gamma-ratio")]
    pub gamma_ratio: Option<f64>,
    /// RNG seed for the phase draws (default 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report JSON path (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OracleParams {
    pub fn merge_over(self, file: OracleParams) -> OracleParams {
        merge_options!(self, file, n_max, phi_samples, tolerance, gamma_ratio, seed, out)
    }
}

#[derive(Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub params: OracleParams,
    /// JSON file with the same keys as the flags (SI units, no suffixes)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_suffixes() {
        assert_eq!(parse_frequency("21000").unwrap(), 21_000.0);
        assert_eq!(parse_frequency("21kHz").unwrap(), 21_000.0);
        assert_eq!(parse_frequency("21 khz").unwrap(), 21_000.0);
        assert_eq!(parse_frequency("2400hz").unwrap(), 2_400.0);
        assert!(parse_frequency("fast").is_err());
    }

    #[test]
    fn duration_suffixes() {
        assert_eq!(parse_duration("11.1us").unwrap(), 11.1e-6);
        assert_eq!(parse_duration("50ms").unwrap(), 0.05);
        assert_eq!(parse_duration("0.25s").unwrap(), 0.25);
        assert_eq!(parse_duration("1e-4").unwrap(), 1e-4);
        assert!(parse_duration("soon").is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let flags = SynthParams {
            lambda1: Some(0.05),
            ..Default::default()
        };
        let file = SynthParams {
            lambda1: Some(0.01),
            lambda2: Some(0.02),
            ..Default::default()
        };
        let merged = flags.merge_over(file);
        assert_eq!(merged.lambda1, Some(0.05));
        assert_eq!(merged.lambda2, Some(0.02));
    }
}
