//! Recovery of RFI parameters from measured spectral profiles.
//!
//! The objective rebuilds the forward model (profile -> Torrey series ->
//! positive-part spectrum) at candidate parameters and returns the
//! Euclidean norm of the difference to the data, with both profiles scaled
//! to unit peak height so the unknown experimental scale factor drops out.
//! Minimization runs a Nelder-Mead simplex over log-parameters (positivity
//! for free, no boundary sticking) from a fixed grid of starts; the result
//! is the best start by residual norm, ties broken by start index.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rfi::{RfiProfile1D, RfiProfile2D};
use crate::simplex::{self, SimplexOptions, SimplexResult};
use crate::spectral::{transform_2d_with, SineTransform, SpectralProfile, SpectralProfile2D};
use crate::torrey::{TorreyKernel1D, TorreyKernel2D};

/// Objective value reported for parameters outside the model domain
/// (non-positive, non-finite or absurdly large widths). Large but finite so
/// the simplex can recover instead of aborting.
pub const PENALTY: f64 = 1e12;

/// Widths above this are treated as out of domain.
const MAX_WIDTH: f64 = 1e6;

/// Fixed multi-start grid for the 1D fit, applied to both widths.
const STARTS_1D: [f64; 3] = [0.005, 0.02, 0.08];

/// Fixed multi-start values for the 2D fit: each combination of lambda0 and
/// per-axis beta (both betas of an axis tied at the start).
const STARTS_2D_LAMBDA0: [f64; 2] = [0.002, 0.01];
const STARTS_2D_BETA: [f64; 2] = [0.05, 0.2];

fn width_in_domain(value: f64) -> bool {
    value.is_finite() && value > 0.0 && value <= MAX_WIDTH
}

/// Context for a 1D fit: the model must be built on exactly the same tau
/// grid, resolution and zero-fill as the data profile.
#[derive(Debug, Clone)]
pub struct Fit1DConfig {
    pub nu0: f64,
    pub q: u32,
    pub tau_grid: Vec<f64>,
    pub zero_fill: usize,
    /// Frequency-grid resolution of the model profile.
    pub grid_points: usize,
}

impl Fit1DConfig {
    pub fn new(nu0: f64, q: u32, tau_grid: Vec<f64>, zero_fill: usize) -> Self {
        Self {
            nu0,
            q,
            tau_grid,
            zero_fill,
            grid_points: RfiProfile1D::DEFAULT_GRID_POINTS,
        }
    }
}

/// Context for a 2D fit.
#[derive(Debug, Clone)]
pub struct Fit2DConfig {
    pub nu0_h: f64,
    pub nu0_p: f64,
    pub q_h: u32,
    pub q_p: u32,
    pub tau_h_grid: Vec<f64>,
    pub tau_p_grid: Vec<f64>,
    pub zero_fill_h: usize,
    pub zero_fill_p: usize,
    /// Per-axis frequency-grid resolution of the model profile.
    pub grid_points: usize,
}

impl Fit2DConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nu0_h: f64,
        nu0_p: f64,
        q_h: u32,
        q_p: u32,
        tau_h_grid: Vec<f64>,
        tau_p_grid: Vec<f64>,
        zero_fill_h: usize,
        zero_fill_p: usize,
    ) -> Self {
        Self {
            nu0_h,
            nu0_p,
            q_h,
            q_p,
            tau_h_grid,
            tau_p_grid,
            zero_fill_h,
            zero_fill_p,
            grid_points: RfiProfile2D::DEFAULT_GRID_POINTS,
        }
    }
}

/// Optimizer controls; the defaults are the standard operating point.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the simplex spread in log-parameter space.
    pub tolerance: f64,
    /// Initial simplex step in log-parameter space.
    pub initial_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            tolerance: 1e-6,
            initial_step: 0.5,
        }
    }
}

impl FitOptions {
    fn simplex(&self) -> SimplexOptions {
        SimplexOptions {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            initial_step: self.initial_step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit1DParams {
    pub lambda1: f64,
    pub lambda2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit2DParams {
    pub lambda0: f64,
    #[serde(rename = "betaH1")]
    pub beta_h1: f64,
    #[serde(rename = "betaH2")]
    pub beta_h2: f64,
    #[serde(rename = "betaP1")]
    pub beta_p1: f64,
    #[serde(rename = "betaP2")]
    pub beta_p2: f64,
}

/// One multi-start entry: where the start was and where it ended up.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitTraceEntry<P> {
    pub start: P,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult<P> {
    pub params: P,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub starts: usize,
    pub trace: Vec<FitTraceEntry<P>>,
}

/// Peak-normalizes a non-negative profile in place; fails on an
/// identically-zero profile.
fn peak_normalize(values: &mut [f64]) -> Result<()> {
    let max = values.iter().fold(0.0f64, |m, &v| m.max(v));
    if !(max > 0.0) {
        return Err(Error::domain("profile is identically zero"));
    }
    for v in values.iter_mut() {
        *v /= max;
    }
    Ok(())
}

fn check_grid_compatibility(
    label: &str,
    data_zero_fill: usize,
    data_bins: usize,
    data_df: f64,
    data_q: u32,
    cfg_zero_fill: usize,
    cfg_q: u32,
    dtau: f64,
) -> Result<()> {
    if data_zero_fill != cfg_zero_fill {
        return Err(Error::domain(format!(
            "{label}: data zero_fill {data_zero_fill} differs from configured {cfg_zero_fill}"
        )));
    }
    if data_bins != cfg_zero_fill / 2 + 1 {
        return Err(Error::domain(format!(
            "{label}: {data_bins} bins inconsistent with zero_fill {cfg_zero_fill}"
        )));
    }
    let expected_df = 1.0 / (cfg_zero_fill as f64 * dtau);
    if ((data_df - expected_df) / expected_df).abs() > 1e-6 {
        return Err(Error::domain(format!(
            "{label}: data frequency spacing {data_df} does not match tau grid (expected {expected_df})"
        )));
    }
    if data_q != cfg_q {
        return Err(Error::domain(format!(
            "{label}: data quantum order {data_q} differs from configured {cfg_q}"
        )));
    }
    Ok(())
}

fn validate_tau(tau: &[f64]) -> Result<f64> {
    if tau.len() < 2 {
        return Err(Error::domain("tau grid needs at least 2 points"));
    }
    Ok(tau[1] - tau[0])
}

struct Model1D {
    kernel: TorreyKernel1D,
    transform: SineTransform,
    data: Vec<f64>,
    nu0: f64,
    grid_points: usize,
}

impl Model1D {
    fn new(data: &SpectralProfile, cfg: &Fit1DConfig) -> Result<Self> {
        if data.is_rescaled() {
            return Err(Error::domain(
                "fit operates in the nu_q domain; profile axis already rescaled",
            ));
        }
        let dtau = validate_tau(&cfg.tau_grid)?;
        check_grid_compatibility(
            "1d",
            data.zero_fill(),
            data.values().len(),
            data.df(),
            data.quantum_order(),
            cfg.zero_fill,
            cfg.q,
            dtau,
        )?;
        let kernel = TorreyKernel1D::new(
            &crate::rfi::frequency_grid(cfg.nu0, cfg.grid_points),
            cfg.q,
            &cfg.tau_grid,
        )?;
        let transform = SineTransform::new(cfg.zero_fill)?;
        let mut normalized = data.values().to_vec();
        peak_normalize(&mut normalized)?;
        Ok(Self {
            kernel,
            transform,
            data: normalized,
            nu0: cfg.nu0,
            grid_points: cfg.grid_points,
        })
    }

    fn objective(&self, lambda1: f64, lambda2: f64) -> f64 {
        if !width_in_domain(lambda1) || !width_in_domain(lambda2) {
            return PENALTY;
        }
        let profile = match RfiProfile1D::new(self.nu0, lambda1, lambda2, self.grid_points)
            .and_then(|p| p.normalize())
        {
            Ok(p) => p,
            Err(_) => return PENALTY,
        };
        let series = match self.kernel.apply(profile.weights()) {
            Ok(s) => s,
            Err(_) => return PENALTY,
        };
        let spectrum = match self.transform.apply(series.values()) {
            Ok(s) => s,
            Err(_) => return PENALTY,
        };
        let max = spectrum.iter().fold(0.0f64, |m, &v| m.max(v.max(0.0)));
        if !(max > 0.0) {
            return PENALTY;
        }
        let mut sum_sq = 0.0;
        for (model, &observed) in spectrum.iter().zip(&self.data) {
            let diff = model.max(0.0) / max - observed;
            sum_sq += diff * diff;
        }
        sum_sq.sqrt()
    }
}

struct Model2D {
    kernel: TorreyKernel2D,
    transform_h: SineTransform,
    transform_p: SineTransform,
    data: Vec<f64>,
    cfg: Fit2DConfig,
}

impl Model2D {
    fn new(data: &SpectralProfile2D, cfg: &Fit2DConfig) -> Result<Self> {
        if data.is_rescaled() {
            return Err(Error::domain(
                "fit operates in the nu_q domain; profile axes already rescaled",
            ));
        }
        let dtau_h = validate_tau(&cfg.tau_h_grid)?;
        let dtau_p = validate_tau(&cfg.tau_p_grid)?;
        let (bins_h, bins_p) = data.values().dim();
        check_grid_compatibility(
            "2d H axis",
            data.zero_fill().0,
            bins_h,
            data.df_h(),
            data.quantum_orders().0,
            cfg.zero_fill_h,
            cfg.q_h,
            dtau_h,
        )?;
        check_grid_compatibility(
            "2d P axis",
            data.zero_fill().1,
            bins_p,
            data.df_p(),
            data.quantum_orders().1,
            cfg.zero_fill_p,
            cfg.q_p,
            dtau_p,
        )?;
        let kernel = TorreyKernel2D::new(
            &crate::rfi::frequency_grid(cfg.nu0_h, cfg.grid_points),
            &crate::rfi::frequency_grid(cfg.nu0_p, cfg.grid_points),
            cfg.q_h,
            cfg.q_p,
            &cfg.tau_h_grid,
            &cfg.tau_p_grid,
        )?;
        let mut normalized: Vec<f64> = data.values().iter().copied().collect();
        peak_normalize(&mut normalized)?;
        Ok(Self {
            kernel,
            transform_h: SineTransform::new(cfg.zero_fill_h)?,
            transform_p: SineTransform::new(cfg.zero_fill_p)?,
            data: normalized,
            cfg: cfg.clone(),
        })
    }

    fn objective(&self, p: &Fit2DParams) -> f64 {
        for value in [p.lambda0, p.beta_h1, p.beta_h2, p.beta_p1, p.beta_p2] {
            if !width_in_domain(value) {
                return PENALTY;
            }
        }
        let profile = match RfiProfile2D::new(
            self.cfg.nu0_h,
            self.cfg.nu0_p,
            p.lambda0,
            p.beta_h1,
            p.beta_h2,
            p.beta_p1,
            p.beta_p2,
            self.cfg.grid_points,
        )
        .and_then(|p| p.normalize())
        {
            Ok(p) => p,
            Err(_) => return PENALTY,
        };
        let series = match self.kernel.apply(profile.weights().view()) {
            Ok(s) => s,
            Err(_) => return PENALTY,
        };
        let spectrum = match transform_2d_with(&self.transform_h, &self.transform_p, series.values())
        {
            Ok(s) => s,
            Err(_) => return PENALTY,
        };
        let max = spectrum.iter().fold(0.0f64, |m, &v| m.max(v));
        if !(max > 0.0) {
            return PENALTY;
        }
        let mut sum_sq = 0.0;
        for (model, &observed) in spectrum.iter().zip(&self.data) {
            let diff = model / max - observed;
            sum_sq += diff * diff;
        }
        sum_sq.sqrt()
    }
}

/// Norm objective for one 1D candidate. Non-positive or non-finite widths
/// return [`PENALTY`] rather than an error so simplex exploration survives.
pub fn objective_1d(
    lambda1: f64,
    lambda2: f64,
    data: &SpectralProfile,
    cfg: &Fit1DConfig,
) -> Result<f64> {
    Ok(Model1D::new(data, cfg)?.objective(lambda1, lambda2))
}

/// Norm objective for one 2D candidate.
pub fn objective_2d(
    params: &Fit2DParams,
    data: &SpectralProfile2D,
    cfg: &Fit2DConfig,
) -> Result<f64> {
    Ok(Model2D::new(data, cfg)?.objective(params))
}

fn select_best(runs: &[SimplexResult]) -> usize {
    let mut best = 0;
    for (idx, run) in runs.iter().enumerate() {
        if run.fx < runs[best].fx {
            best = idx;
        }
    }
    best
}

/// Fits `(lambda1, lambda2)` to a measured 1D profile by multi-start
/// simplex over log-widths. Never fails once the grids are validated; if no
/// start converges the best effort is returned with `converged = false`.
pub fn fit_1d(
    data: &SpectralProfile,
    cfg: &Fit1DConfig,
    opts: &FitOptions,
) -> Result<FitResult<Fit1DParams>> {
    let model = Model1D::new(data, cfg)?;
    let starts: Vec<Fit1DParams> = STARTS_1D
        .iter()
        .flat_map(|&l1| {
            STARTS_1D
                .iter()
                .map(move |&l2| Fit1DParams { lambda1: l1, lambda2: l2 })
        })
        .collect();
    let sim_opts = opts.simplex();
    let runs: Vec<SimplexResult> = starts
        .par_iter()
        .map(|start| {
            simplex::minimize(
                |x| model.objective(x[0].exp(), x[1].exp()),
                &[start.lambda1.ln(), start.lambda2.ln()],
                &sim_opts,
            )
        })
        .collect();

    let best = select_best(&runs);
    let trace = starts
        .iter()
        .zip(&runs)
        .map(|(start, run)| FitTraceEntry {
            start: *start,
            residual_norm: run.fx,
        })
        .collect();
    Ok(FitResult {
        params: Fit1DParams {
            lambda1: runs[best].x[0].exp(),
            lambda2: runs[best].x[1].exp(),
        },
        residual_norm: runs[best].fx,
        iterations: runs[best].iterations,
        converged: runs[best].converged,
        starts: starts.len(),
        trace,
    })
}

/// Fits `(lambda0, betaH1, betaH2, betaP1, betaP2)` to a measured 2D
/// profile; starts tie the two betas of each axis together.
pub fn fit_2d(
    data: &SpectralProfile2D,
    cfg: &Fit2DConfig,
    opts: &FitOptions,
) -> Result<FitResult<Fit2DParams>> {
    let model = Model2D::new(data, cfg)?;
    let mut starts = Vec::with_capacity(8);
    for &lambda0 in &STARTS_2D_LAMBDA0 {
        for &beta_h in &STARTS_2D_BETA {
            for &beta_p in &STARTS_2D_BETA {
                starts.push(Fit2DParams {
                    lambda0,
                    beta_h1: beta_h,
                    beta_h2: beta_h,
                    beta_p1: beta_p,
                    beta_p2: beta_p,
                });
            }
        }
    }
    let sim_opts = opts.simplex();
    let runs: Vec<SimplexResult> = starts
        .par_iter()
        .map(|start| {
            let x0 = [
                start.lambda0.ln(),
                start.beta_h1.ln(),
                start.beta_h2.ln(),
                start.beta_p1.ln(),
                start.beta_p2.ln(),
            ];
            simplex::minimize(
                |x| {
                    model.objective(&Fit2DParams {
                        lambda0: x[0].exp(),
                        beta_h1: x[1].exp(),
                        beta_h2: x[2].exp(),
                        beta_p1: x[3].exp(),
                        beta_p2: x[4].exp(),
                    })
                },
                &x0,
                &sim_opts,
            )
        })
        .collect();

    let best = select_best(&runs);
    let trace = starts
        .iter()
        .zip(&runs)
        .map(|(start, run)| FitTraceEntry {
            start: *start,
            residual_norm: run.fx,
        })
        .collect();
    let x = &runs[best].x;
    Ok(FitResult {
        params: Fit2DParams {
            lambda0: x[0].exp(),
            beta_h1: x[1].exp(),
            beta_h2: x[2].exp(),
            beta_p1: x[3].exp(),
            beta_p2: x[4].exp(),
        },
        residual_norm: runs[best].fx,
        iterations: runs[best].iterations,
        converged: runs[best].converged,
        starts: starts.len(),
        trace,
    })
}

/// Estimates the nominal amplitude as (spectral peak location) / q, for use
/// when no nominal amplitude is supplied.
pub fn estimate_nu0(data: &SpectralProfile, q: u32) -> Result<f64> {
    if q == 0 {
        return Err(Error::domain("quantum order must be >= 1"));
    }
    let peak = data.freq_grid()[data.peak_bin()];
    if !(data.values()[data.peak_bin()] > 0.0) {
        return Err(Error::domain("cannot estimate nu0 from an all-zero profile"));
    }
    Ok(peak / q as f64)
}

/// Per-axis nominal-amplitude estimate from the 2D peak location.
pub fn estimate_nu0_2d(data: &SpectralProfile2D) -> Result<(f64, f64)> {
    let (bh, bp) = data.peak_bin();
    if !(data.values()[(bh, bp)] > 0.0) {
        return Err(Error::domain("cannot estimate nu0 from an all-zero profile"));
    }
    let (q_h, q_p) = data.quantum_orders();
    Ok((
        data.freq_h_grid()[bh] / q_h as f64,
        data.freq_p_grid()[bp] / q_p as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{transform_1d, transform_2d};
    use crate::torrey::{simulate_1d, simulate_2d, uniform_tau_grid};

    fn synthetic_1d(
        nu0: f64,
        l1: f64,
        l2: f64,
        q: u32,
        points: usize,
        zero_fill: usize,
        grid_points: usize,
    ) -> (SpectralProfile, Fit1DConfig) {
        let profile = RfiProfile1D::new(nu0, l1, l2, grid_points)
            .unwrap()
            .normalize()
            .unwrap();
        let tau = uniform_tau_grid(points, 1.0 / (4.0 * q as f64 * nu0));
        let series = simulate_1d(&profile, q, &tau).unwrap();
        let data = transform_1d(&series, zero_fill).unwrap();
        let mut cfg = Fit1DConfig::new(nu0, q, tau, zero_fill);
        cfg.grid_points = grid_points;
        (data, cfg)
    }

    #[test]
    fn objective_vanishes_at_truth() {
        let (data, cfg) = synthetic_1d(21_000.0, 0.057, 0.012, 9, 256, 512, 1024);
        let at_truth = objective_1d(0.057, 0.012, &data, &cfg).unwrap();
        assert!(at_truth < 1e-9, "objective at truth = {at_truth}");
    }

    #[test]
    fn perturbing_width_increases_objective() {
        let (data, cfg) = synthetic_1d(21_000.0, 0.057, 0.012, 9, 256, 512, 1024);
        let at_truth = objective_1d(0.057, 0.012, &data, &cfg).unwrap();
        let perturbed = objective_1d(0.057 * 1.1, 0.012, &data, &cfg).unwrap();
        assert!(perturbed > at_truth, "{perturbed} vs {at_truth}");
    }

    #[test]
    fn branch_swap_is_distinguishable() {
        let (data, cfg) = synthetic_1d(21_000.0, 0.057, 0.012, 9, 256, 512, 1024);
        let swapped = objective_1d(0.012, 0.057, &data, &cfg).unwrap();
        assert!(swapped > 1e-3, "swapped-branch objective = {swapped}");
    }

    #[test]
    fn invalid_widths_get_penalty_not_error() {
        let (data, cfg) = synthetic_1d(5_400.0, 0.02, 0.02, 1, 64, 128, 128);
        assert_eq!(objective_1d(-0.1, 0.02, &data, &cfg).unwrap(), PENALTY);
        assert_eq!(objective_1d(0.02, 0.0, &data, &cfg).unwrap(), PENALTY);
        assert_eq!(objective_1d(f64::NAN, 0.02, &data, &cfg).unwrap(), PENALTY);
    }

    #[test]
    fn mismatched_zero_fill_is_an_error() {
        let (data, mut cfg) = synthetic_1d(5_400.0, 0.02, 0.02, 1, 64, 128, 128);
        cfg.zero_fill = 256;
        assert!(matches!(
            objective_1d(0.02, 0.02, &data, &cfg),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rescaled_data_is_rejected() {
        let (data, cfg) = synthetic_1d(5_400.0, 0.02, 0.02, 1, 64, 128, 128);
        let rescaled = data.rescale_axis(1).unwrap();
        assert!(objective_1d(0.02, 0.02, &rescaled, &cfg).is_err());
    }

    #[test]
    fn symmetric_truth_recovers_symmetric_widths() {
        let (data, cfg) = synthetic_1d(5_400.0, 0.02, 0.02, 9, 128, 256, 512);
        let result = fit_1d(&data, &cfg, &FitOptions::default()).unwrap();
        assert!(result.converged);
        let ratio = result.params.lambda1 / result.params.lambda2;
        assert!(
            (0.95..=1.05).contains(&ratio),
            "ratio {ratio}, params {:?}",
            result.params
        );
    }

    #[test]
    fn fit_is_bitwise_deterministic() {
        let (data, cfg) = synthetic_1d(5_400.0, 0.03, 0.015, 9, 96, 192, 256);
        let opts = FitOptions::default();
        let a = fit_1d(&data, &cfg, &opts).unwrap();
        let b = fit_1d(&data, &cfg, &opts).unwrap();
        assert_eq!(a.params.lambda1.to_bits(), b.params.lambda1.to_bits());
        assert_eq!(a.params.lambda2.to_bits(), b.params.lambda2.to_bits());
        assert_eq!(a.residual_norm.to_bits(), b.residual_norm.to_bits());
        assert_eq!(a.iterations, b.iterations);
        for (ta, tb) in a.trace.iter().zip(&b.trace) {
            assert_eq!(ta.residual_norm.to_bits(), tb.residual_norm.to_bits());
        }
    }

    #[test]
    fn fit_result_serializes_with_spec_keys() {
        let (data, cfg) = synthetic_1d(5_400.0, 0.03, 0.015, 1, 48, 96, 128);
        let result = fit_1d(&data, &cfg, &FitOptions::default()).unwrap();
        let json = serde_json::to_value(&result).unwrap();
        for key in ["params", "residual_norm", "iterations", "converged", "starts", "trace"] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        assert!(json["params"].get("lambda1").is_some());
        assert_eq!(json["starts"], 9);
        assert_eq!(json["trace"].as_array().unwrap().len(), 9);
    }

    fn synthetic_2d(
        params: &Fit2DParams,
        grid_points: usize,
        points_h: usize,
        points_p: usize,
        zero_fill: usize,
    ) -> (SpectralProfile2D, Fit2DConfig) {
        let (nu0_h, nu0_p, q_h, q_p) = (2_400.0, 2_500.0, 9, 1);
        let profile = RfiProfile2D::new(
            nu0_h, nu0_p, params.lambda0, params.beta_h1, params.beta_h2, params.beta_p1,
            params.beta_p2, grid_points,
        )
        .unwrap()
        .normalize()
        .unwrap();
        let tau_h = uniform_tau_grid(points_h, 1.0 / (4.0 * q_h as f64 * nu0_h));
        let tau_p = uniform_tau_grid(points_p, 1.0 / (4.0 * q_p as f64 * nu0_p));
        let series = simulate_2d(&profile, q_h, q_p, &tau_h, &tau_p).unwrap();
        let data = transform_2d(&series, zero_fill, zero_fill).unwrap();
        let mut cfg = Fit2DConfig::new(
            nu0_h, nu0_p, q_h, q_p, tau_h, tau_p, zero_fill, zero_fill,
        );
        cfg.grid_points = grid_points;
        (data, cfg)
    }

    #[test]
    fn objective_2d_vanishes_at_truth() {
        let truth = Fit2DParams {
            lambda0: 0.0045,
            beta_h1: 0.114,
            beta_h2: 0.226,
            beta_p1: 0.095,
            beta_p2: 0.028,
        };
        let (data, cfg) = synthetic_2d(&truth, 96, 48, 32, 96);
        let at_truth = objective_2d(&truth, &data, &cfg).unwrap();
        assert!(at_truth < 1e-6, "objective at truth = {at_truth}");
    }

    #[test]
    fn separable_2d_truth_recovers_tied_betas() {
        let truth = Fit2DParams {
            lambda0: 0.004,
            beta_h1: 0.1,
            beta_h2: 0.1,
            beta_p1: 0.05,
            beta_p2: 0.05,
        };
        let (data, cfg) = synthetic_2d(&truth, 64, 32, 24, 64);
        let result = fit_2d(&data, &cfg, &FitOptions::default()).unwrap();
        let p = result.params;
        let h_ratio = p.beta_h1 / p.beta_h2;
        let p_ratio = p.beta_p1 / p.beta_p2;
        assert!(
            (0.95..=1.05).contains(&h_ratio) && (0.95..=1.05).contains(&p_ratio),
            "quadrant pairs diverged: {p:?}"
        );
    }

    #[test]
    fn nu0_estimate_lands_near_truth() {
        let (data, cfg) = synthetic_1d(21_000.0, 0.057, 0.012, 9, 256, 512, 1024);
        let estimate = estimate_nu0(&data, cfg.q).unwrap();
        assert!(
            (estimate - 21_000.0).abs() / 21_000.0 < 0.02,
            "estimate {estimate}"
        );
    }
}
