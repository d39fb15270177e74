//! Parametric RF-inhomogeneity (RFI) probability distributions.
//!
//! An RFI profile models the spread of RF amplitudes over the sample volume
//! as a probability distribution over nutation frequencies. The 1D model is
//! an asymmetric Lorentzian with independent half-widths on either side of
//! the nominal amplitude `nu0`; the 2D model couples two channels through a
//! single overall width and four per-quadrant asymmetry scales.
//!
//! Profiles are immutable after construction and all operations are pure,
//! so they can be shared freely across threads.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::kahan_sum;

/// Asymmetric-Lorentzian RFI distribution over a single RF channel.
///
/// The unnormalized density is
/// `lambda1^2 / ((1 - nu/nu0)^2 + lambda1^2)` below the nominal amplitude
/// and the same expression with `lambda2` at or above it, discretized on a
/// uniform grid spanning `[0, 2*nu0]`. Weights are empty until
/// [`RfiProfile1D::normalize`] is called.
#[derive(Debug, Clone)]
pub struct RfiProfile1D {
    nu0: f64,
    lambda1: f64,
    lambda2: f64,
    grid: Vec<f64>,
    weights: Vec<f64>,
}

/// Quadrant-asymmetric 2D Lorentzian over two RF channels.
///
/// The density at `(nuH, nuP)` is `lambda0^2 / (d^2 + lambda0^2)` where
/// `d^2 = betaH_i (1 - nuH/nu0H)^2 + betaP_j (1 - nuP/nu0P)^2` and the
/// beta pair is selected by quadrant: subscript 1 below the nominal
/// amplitude of the axis, subscript 2 at or above it.
#[derive(Debug, Clone)]
pub struct RfiProfile2D {
    nu0_h: f64,
    nu0_p: f64,
    lambda0: f64,
    beta_h1: f64,
    beta_h2: f64,
    beta_p1: f64,
    beta_p2: f64,
    grid_h: Vec<f64>,
    grid_p: Vec<f64>,
    weights: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct Profile1DRepr {
    nu0: f64,
    lambda1: f64,
    lambda2: f64,
    grid_points: usize,
}

#[derive(Serialize, Deserialize)]
struct Profile2DRepr {
    #[serde(rename = "nu0H")]
    nu0_h: f64,
    #[serde(rename = "nu0P")]
    nu0_p: f64,
    lambda0: f64,
    #[serde(rename = "betaH1")]
    beta_h1: f64,
    #[serde(rename = "betaH2")]
    beta_h2: f64,
    #[serde(rename = "betaP1")]
    beta_p1: f64,
    #[serde(rename = "betaP2")]
    beta_p2: f64,
    grid_points: usize,
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::domain(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

/// Uniform grid of `points` frequencies over `[0, 2*nu0]`, endpoints inclusive.
pub(crate) fn frequency_grid(nu0: f64, points: usize) -> Vec<f64> {
    let step = 2.0 * nu0 / (points - 1) as f64;
    (0..points).map(|i| i as f64 * step).collect()
}

impl RfiProfile1D {
    /// Grid resolution used when none is specified; resolves widths down to
    /// roughly 0.005 (at least five grid points per half-width).
    pub const DEFAULT_GRID_POINTS: usize = 1024;

    pub fn new(nu0: f64, lambda1: f64, lambda2: f64, grid_points: usize) -> Result<Self> {
        check_positive("nu0", nu0)?;
        check_positive("lambda1", lambda1)?;
        check_positive("lambda2", lambda2)?;
        if grid_points < 2 {
            return Err(Error::domain(format!(
                "grid_points must be >= 2, got {grid_points}"
            )));
        }
        Ok(Self {
            nu0,
            lambda1,
            lambda2,
            grid: frequency_grid(nu0, grid_points),
            weights: Vec::new(),
        })
    }

    /// Unnormalized density at `nu`; always in `(0, 1]` with the maximum 1
    /// attained exactly at the nominal amplitude.
    pub fn density(&self, nu: f64) -> Result<f64> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::domain(format!(
                "frequency must be finite and non-negative, got {nu}"
            )));
        }
        // Points exactly at nu0 take the >= branch; the value is
        // branch-independent there.
        let lambda = if nu < self.nu0 {
            self.lambda1
        } else {
            self.lambda2
        };
        let x = 1.0 - nu / self.nu0;
        Ok(lambda * lambda / (x * x + lambda * lambda))
    }

    /// Populates the probability weights so they sum to one.
    pub fn normalize(mut self) -> Result<Self> {
        if self.under_resolved() {
            log::warn!(
                "RFI profile under-resolved: width {:.2e} below twice the relative grid spacing {:.2e}",
                self.lambda1.min(self.lambda2),
                2.0 * self.grid_spacing() / self.nu0
            );
        }
        let density: Vec<f64> = self
            .grid
            .iter()
            .map(|&nu| self.density(nu))
            .collect::<Result<_>>()?;
        let total = kahan_sum(density.iter().copied());
        if !(total > 0.0) {
            return Err(Error::Internal(format!(
                "density sum must be positive, got {total}"
            )));
        }
        self.weights = density.into_iter().map(|d| d / total).collect();
        Ok(self)
    }

    pub fn is_normalized(&self) -> bool {
        !self.weights.is_empty()
    }

    /// Probability-weighted mean frequency; differs from `nu0` (the mode)
    /// whenever the distribution is asymmetric.
    pub fn mean_amplitude(&self) -> Result<f64> {
        if !self.is_normalized() {
            return Err(Error::state("mean_amplitude requires a normalized profile"));
        }
        Ok(kahan_sum(
            self.weights
                .iter()
                .zip(&self.grid)
                .map(|(&w, &nu)| w * nu),
        ))
    }

    /// True when either width falls below twice the grid spacing relative to
    /// `nu0`, i.e. the grid cannot resolve the peak.
    pub fn under_resolved(&self) -> bool {
        let floor = 2.0 * self.grid_spacing() / self.nu0;
        self.lambda1 < floor || self.lambda2 < floor
    }

    fn grid_spacing(&self) -> f64 {
        2.0 * self.nu0 / (self.grid.len() - 1) as f64
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Normalized probability weights; empty before [`RfiProfile1D::normalize`].
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn grid_points(&self) -> usize {
        self.grid.len()
    }
}

impl RfiProfile2D {
    /// Per-axis grid resolution used when none is specified (square grid).
    pub const DEFAULT_GRID_POINTS: usize = 256;

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nu0_h: f64,
        nu0_p: f64,
        lambda0: f64,
        beta_h1: f64,
        beta_h2: f64,
        beta_p1: f64,
        beta_p2: f64,
        grid_points: usize,
    ) -> Result<Self> {
        check_positive("nu0H", nu0_h)?;
        check_positive("nu0P", nu0_p)?;
        check_positive("lambda0", lambda0)?;
        check_positive("betaH1", beta_h1)?;
        check_positive("betaH2", beta_h2)?;
        check_positive("betaP1", beta_p1)?;
        check_positive("betaP2", beta_p2)?;
        if grid_points < 2 {
            return Err(Error::domain(format!(
                "grid_points must be >= 2, got {grid_points}"
            )));
        }
        Ok(Self {
            nu0_h,
            nu0_p,
            lambda0,
            beta_h1,
            beta_h2,
            beta_p1,
            beta_p2,
            grid_h: frequency_grid(nu0_h, grid_points),
            grid_p: frequency_grid(nu0_p, grid_points),
            weights: Array2::zeros((0, 0)),
        })
    }

    /// Unnormalized density at `(nu_h, nu_p)`; in `(0, 1]`, equal to 1 only
    /// at the nominal point. Continuous across quadrant boundaries because
    /// the squared term multiplying the differing beta vanishes there.
    pub fn density(&self, nu_h: f64, nu_p: f64) -> Result<f64> {
        if !nu_h.is_finite() || nu_h < 0.0 || !nu_p.is_finite() || nu_p < 0.0 {
            return Err(Error::domain(format!(
                "frequencies must be finite and non-negative, got ({nu_h}, {nu_p})"
            )));
        }
        let beta_h = if nu_h < self.nu0_h {
            self.beta_h1
        } else {
            self.beta_h2
        };
        let beta_p = if nu_p < self.nu0_p {
            self.beta_p1
        } else {
            self.beta_p2
        };
        let x_h = 1.0 - nu_h / self.nu0_h;
        let x_p = 1.0 - nu_p / self.nu0_p;
        let d2 = beta_h * x_h * x_h + beta_p * x_p * x_p;
        Ok(self.lambda0 * self.lambda0 / (d2 + self.lambda0 * self.lambda0))
    }

    /// Populates the 2D probability weights so they sum to one.
    pub fn normalize(mut self) -> Result<Self> {
        if self.under_resolved() {
            log::warn!(
                "2D RFI profile under-resolved: effective width below twice the relative grid spacing"
            );
        }
        let (m_h, m_p) = (self.grid_h.len(), self.grid_p.len());
        let mut density = Array2::zeros((m_h, m_p));
        for (i, &nu_h) in self.grid_h.iter().enumerate() {
            for (j, &nu_p) in self.grid_p.iter().enumerate() {
                density[(i, j)] = self.density(nu_h, nu_p)?;
            }
        }
        let total = kahan_sum(density.iter().copied());
        if !(total > 0.0) {
            return Err(Error::Internal(format!(
                "density sum must be positive, got {total}"
            )));
        }
        density.mapv_inplace(|d| d / total);
        self.weights = density;
        Ok(self)
    }

    pub fn is_normalized(&self) -> bool {
        self.weights.len() > 0
    }

    /// True when the narrowest effective per-axis width `lambda0 / sqrt(beta)`
    /// falls below twice the relative grid spacing on that axis.
    pub fn under_resolved(&self) -> bool {
        let floor = 4.0 / (self.grid_h.len() - 1) as f64;
        let width_h = self.lambda0 / self.beta_h1.max(self.beta_h2).sqrt();
        let width_p = self.lambda0 / self.beta_p1.max(self.beta_p2).sqrt();
        width_h < floor || width_p < floor
    }

    pub fn nu0_h(&self) -> f64 {
        self.nu0_h
    }

    pub fn nu0_p(&self) -> f64 {
        self.nu0_p
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn betas(&self) -> (f64, f64, f64, f64) {
        (self.beta_h1, self.beta_h2, self.beta_p1, self.beta_p2)
    }

    pub fn grid_h(&self) -> &[f64] {
        &self.grid_h
    }

    pub fn grid_p(&self) -> &[f64] {
        &self.grid_p
    }

    /// Normalized weights, indexed `(h, p)`; empty before normalization.
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn grid_points(&self) -> usize {
        self.grid_h.len()
    }
}

// Profiles serialize as their parameters plus the grid point count; grids
// and weights are always recomputed on load.
impl Serialize for RfiProfile1D {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        Profile1DRepr {
            nu0: self.nu0,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            grid_points: self.grid.len(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RfiProfile1D {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = Profile1DRepr::deserialize(deserializer)?;
        RfiProfile1D::new(repr.nu0, repr.lambda1, repr.lambda2, repr.grid_points)
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for RfiProfile2D {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        Profile2DRepr {
            nu0_h: self.nu0_h,
            nu0_p: self.nu0_p,
            lambda0: self.lambda0,
            beta_h1: self.beta_h1,
            beta_h2: self.beta_h2,
            beta_p1: self.beta_p1,
            beta_p2: self.beta_p2,
            grid_points: self.grid_h.len(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RfiProfile2D {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = Profile2DRepr::deserialize(deserializer)?;
        RfiProfile2D::new(
            repr.nu0_h,
            repr.nu0_p,
            repr.lambda0,
            repr.beta_h1,
            repr.beta_h2,
            repr.beta_p1,
            repr.beta_p2,
            repr.grid_points,
        )
        .map_err(serde::de::Error::custom)
    }
}
