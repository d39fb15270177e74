//! Forward simulation of q-quantum Torrey oscillations.
//!
//! A Torrey series is the probability-weighted superposition of nutation
//! sinusoids: `s(tau) = sum_i w_i sin(2 pi q nu_i tau)`. The spread of
//! frequencies in the RFI profile dephases the superposition, so the
//! oscillation decays even though every term is undamped; higher coherence
//! orders `q` dephase proportionally faster.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::rfi::{RfiProfile1D, RfiProfile2D};

const TWO_PI: f64 = std::f64::consts::TAU;

/// Relative tolerance for tau-grid uniformity checks.
const GRID_TOL: f64 = 1e-6;

/// Uniform duration grid `0, dtau, 2*dtau, ...` with `points` entries.
pub fn uniform_tau_grid(points: usize, dtau: f64) -> Vec<f64> {
    (0..points).map(|k| k as f64 * dtau).collect()
}

fn validate_tau_grid(tau: &[f64]) -> Result<f64> {
    if tau.len() < 2 {
        return Err(Error::domain("tau grid needs at least 2 points"));
    }
    let dtau = tau[1] - tau[0];
    if !dtau.is_finite() || dtau <= 0.0 {
        return Err(Error::domain(format!("tau increment must be positive, got {dtau}")));
    }
    if tau[0].abs() > GRID_TOL * dtau {
        return Err(Error::domain(format!("tau grid must start at 0, got {}", tau[0])));
    }
    for (k, pair) in tau.windows(2).enumerate() {
        let step = pair[1] - pair[0];
        if (step - dtau).abs() > GRID_TOL * dtau {
            return Err(Error::domain(format!(
                "tau grid is not uniform at index {}: step {step} vs {dtau}",
                k + 1
            )));
        }
    }
    Ok(dtau)
}

fn validate_quantum_order(q: u32) -> Result<()> {
    if q == 0 {
        return Err(Error::domain("quantum order q must be >= 1"));
    }
    Ok(())
}

/// Sampled 1D Torrey oscillation `s(tau)` on a uniform grid starting at 0.
#[derive(Debug, Clone)]
pub struct TorreySeries {
    tau_grid: Vec<f64>,
    values: Vec<f64>,
    quantum_order: u32,
}

impl TorreySeries {
    /// Wraps raw samples, validating the grid. Amplitude bounds are not
    /// enforced here so noisy measured data can be ingested.
    pub fn from_samples(tau_grid: Vec<f64>, values: Vec<f64>, quantum_order: u32) -> Result<Self> {
        validate_quantum_order(quantum_order)?;
        validate_tau_grid(&tau_grid)?;
        if values.len() != tau_grid.len() {
            return Err(Error::domain(format!(
                "{} samples for {} tau points",
                values.len(),
                tau_grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite sample {v}")));
        }
        Ok(Self { tau_grid, values, quantum_order })
    }

    /// Multiplies the series by `exp(-tau / time_constant)`. A time constant
    /// of `f64::INFINITY` leaves the series unchanged.
    pub fn damped(&self, time_constant: f64) -> Result<Self> {
        check_time_constant(time_constant)?;
        let values = self
            .tau_grid
            .iter()
            .zip(&self.values)
            .map(|(&tau, &v)| v * (-tau / time_constant).exp())
            .collect();
        Ok(Self {
            tau_grid: self.tau_grid.clone(),
            values,
            quantum_order: self.quantum_order,
        })
    }

    pub fn tau_grid(&self) -> &[f64] {
        &self.tau_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn quantum_order(&self) -> u32 {
        self.quantum_order
    }

    pub fn dtau(&self) -> f64 {
        self.tau_grid[1] - self.tau_grid[0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sampled 2D Torrey oscillation `s(tauH, tauP)`, row-major in `tauH`.
#[derive(Debug, Clone)]
pub struct TorreySeries2D {
    tau_h_grid: Vec<f64>,
    tau_p_grid: Vec<f64>,
    values: Array2<f64>,
    quantum_orders: (u32, u32),
}

impl TorreySeries2D {
    pub fn from_samples(
        tau_h_grid: Vec<f64>,
        tau_p_grid: Vec<f64>,
        values: Array2<f64>,
        quantum_orders: (u32, u32),
    ) -> Result<Self> {
        validate_quantum_order(quantum_orders.0)?;
        validate_quantum_order(quantum_orders.1)?;
        validate_tau_grid(&tau_h_grid)?;
        validate_tau_grid(&tau_p_grid)?;
        if values.dim() != (tau_h_grid.len(), tau_p_grid.len()) {
            return Err(Error::domain(format!(
                "value array {:?} does not match grids ({}, {})",
                values.dim(),
                tau_h_grid.len(),
                tau_p_grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite sample {v}")));
        }
        Ok(Self { tau_h_grid, tau_p_grid, values, quantum_orders })
    }

    /// Per-axis exponential damping: each sample is scaled by
    /// `exp(-tauH / tc) * exp(-tauP / tc)`.
    pub fn damped(&self, time_constant: f64) -> Result<Self> {
        check_time_constant(time_constant)?;
        let mut values = self.values.clone();
        for (k, &tau_h) in self.tau_h_grid.iter().enumerate() {
            for (l, &tau_p) in self.tau_p_grid.iter().enumerate() {
                values[(k, l)] *= (-tau_h / time_constant).exp() * (-tau_p / time_constant).exp();
            }
        }
        Ok(Self {
            tau_h_grid: self.tau_h_grid.clone(),
            tau_p_grid: self.tau_p_grid.clone(),
            values,
            quantum_orders: self.quantum_orders,
        })
    }

    pub fn tau_h_grid(&self) -> &[f64] {
        &self.tau_h_grid
    }

    pub fn tau_p_grid(&self) -> &[f64] {
        &self.tau_p_grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn quantum_orders(&self) -> (u32, u32) {
        self.quantum_orders
    }

    pub fn dtau_h(&self) -> f64 {
        self.tau_h_grid[1] - self.tau_h_grid[0]
    }

    pub fn dtau_p(&self) -> f64 {
        self.tau_p_grid[1] - self.tau_p_grid[0]
    }
}

fn check_time_constant(tc: f64) -> Result<()> {
    if tc.is_nan() || tc <= 0.0 {
        return Err(Error::domain(format!(
            "damping time constant must be positive, got {tc}"
        )));
    }
    Ok(())
}

/// Precomputed sine table `sin(2 pi q nu_i tau_k)` for one frequency grid.
///
/// The table depends only on the frequency grid, the quantum order and the
/// tau grid, none of which change while a fit explores width parameters, so
/// building it once turns each forward simulation into a single
/// weight-vector product.
#[derive(Debug, Clone)]
pub struct TorreyKernel1D {
    sines: Array2<f64>, // (freqs, taus)
    tau_grid: Vec<f64>,
    quantum_order: u32,
}

impl TorreyKernel1D {
    pub fn new(freqs: &[f64], q: u32, tau_grid: &[f64]) -> Result<Self> {
        validate_quantum_order(q)?;
        validate_tau_grid(tau_grid)?;
        if freqs.is_empty() {
            return Err(Error::domain("frequency grid is empty"));
        }
        let mut sines = Array2::zeros((freqs.len(), tau_grid.len()));
        for (i, &nu) in freqs.iter().enumerate() {
            let omega = TWO_PI * q as f64 * nu;
            for (k, &tau) in tau_grid.iter().enumerate() {
                sines[(i, k)] = (omega * tau).sin();
            }
        }
        Ok(Self {
            sines,
            tau_grid: tau_grid.to_vec(),
            quantum_order: q,
        })
    }

    /// Weighted superposition of the table rows. `weights` must be the
    /// probability masses on the kernel's frequency grid.
    pub fn apply(&self, weights: &[f64]) -> Result<TorreySeries> {
        if weights.len() != self.sines.nrows() {
            return Err(Error::domain(format!(
                "{} weights for {} frequencies",
                weights.len(),
                self.sines.nrows()
            )));
        }
        let values = ArrayView1::from(weights).dot(&self.sines);
        debug_assert!(values.iter().all(|v| v.abs() <= 1.0 + 1e-9));
        TorreySeries::from_samples(self.tau_grid.clone(), values.to_vec(), self.quantum_order)
    }
}

/// Separable 2D sine tables; the 2D sum factorizes into two matrix products.
#[derive(Debug, Clone)]
pub struct TorreyKernel2D {
    sin_h: Array2<f64>, // (freqsH, tausH)
    sin_p: Array2<f64>, // (freqsP, tausP)
    tau_h_grid: Vec<f64>,
    tau_p_grid: Vec<f64>,
    quantum_orders: (u32, u32),
}

impl TorreyKernel2D {
    pub fn new(
        freqs_h: &[f64],
        freqs_p: &[f64],
        q_h: u32,
        q_p: u32,
        tau_h_grid: &[f64],
        tau_p_grid: &[f64],
    ) -> Result<Self> {
        let h = TorreyKernel1D::new(freqs_h, q_h, tau_h_grid)?;
        let p = TorreyKernel1D::new(freqs_p, q_p, tau_p_grid)?;
        Ok(Self {
            sin_h: h.sines,
            sin_p: p.sines,
            tau_h_grid: tau_h_grid.to_vec(),
            tau_p_grid: tau_p_grid.to_vec(),
            quantum_orders: (q_h, q_p),
        })
    }

    pub fn apply(&self, weights: ArrayView2<'_, f64>) -> Result<TorreySeries2D> {
        if weights.dim() != (self.sin_h.nrows(), self.sin_p.nrows()) {
            return Err(Error::domain(format!(
                "weight array {:?} does not match frequency grids ({}, {})",
                weights.dim(),
                self.sin_h.nrows(),
                self.sin_p.nrows()
            )));
        }
        // s[k,l] = sum_ij w[i,j] sinH[i,k] sinP[j,l]
        let values = self.sin_h.t().dot(&weights).dot(&self.sin_p);
        debug_assert!(values.iter().all(|v| v.abs() <= 1.0 + 1e-9));
        TorreySeries2D::from_samples(
            self.tau_h_grid.clone(),
            self.tau_p_grid.clone(),
            values,
            self.quantum_orders,
        )
    }
}

/// Simulates the q-quantum Torrey oscillation of a normalized 1D profile.
pub fn simulate_1d(profile: &RfiProfile1D, q: u32, tau_grid: &[f64]) -> Result<TorreySeries> {
    if !profile.is_normalized() {
        return Err(Error::state("simulate_1d requires a normalized profile"));
    }
    TorreyKernel1D::new(profile.grid(), q, tau_grid)?.apply(profile.weights())
}

/// Simulates the (qH, qP)-quantum 2D Torrey oscillation of a normalized
/// two-channel profile using the separable product-of-sines kernel.
pub fn simulate_2d(
    profile: &RfiProfile2D,
    q_h: u32,
    q_p: u32,
    tau_h_grid: &[f64],
    tau_p_grid: &[f64],
) -> Result<TorreySeries2D> {
    if !profile.is_normalized() {
        return Err(Error::state("simulate_2d requires a normalized profile"));
    }
    TorreyKernel2D::new(profile.grid_h(), profile.grid_p(), q_h, q_p, tau_h_grid, tau_p_grid)?
        .apply(profile.weights().view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn symmetric_profile(nu0: f64, lambda: f64) -> RfiProfile1D {
        RfiProfile1D::new(nu0, lambda, lambda, 1024)
            .unwrap()
            .normalize()
            .unwrap()
    }

    #[test]
    fn delta_profile_is_a_pure_sine() {
        let nu0 = 5_400.0;
        let tau = uniform_tau_grid(32, 1e-5);
        let kernel = TorreyKernel1D::new(&[nu0], 9, &tau).unwrap();
        let series = kernel.apply(&[1.0]).unwrap();
        for (k, &tau_k) in tau.iter().enumerate() {
            assert_eq!(series.values()[k], (TWO_PI * 9.0 * nu0 * tau_k).sin());
        }
    }

    #[test]
    fn value_at_tau_zero_is_zero() {
        let p = symmetric_profile(5_400.0, 0.02);
        let series = simulate_1d(&p, 9, &uniform_tau_grid(16, 1e-5)).unwrap();
        assert_eq!(series.values()[0], 0.0);
    }

    #[test]
    fn quantum_order_rescales_time() {
        let p = symmetric_profile(5_400.0, 0.02);
        let tau = uniform_tau_grid(64, 2e-6);
        let q = 9u32;
        let direct = simulate_1d(&p, q, &tau).unwrap();
        let stretched: Vec<f64> = tau.iter().map(|t| t * q as f64).collect();
        let unit = simulate_1d(&p, 1, &stretched).unwrap();
        for (a, b) in direct.values().iter().zip(unit.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_zero_quantum_order() {
        let p = symmetric_profile(5_400.0, 0.02);
        assert!(simulate_1d(&p, 0, &uniform_tau_grid(16, 1e-5)).is_err());
    }

    #[test]
    fn rejects_unnormalized_profile() {
        let p = RfiProfile1D::new(5_400.0, 0.02, 0.02, 64).unwrap();
        let err = simulate_1d(&p, 1, &uniform_tau_grid(16, 1e-5));
        assert!(matches!(err, Err(Error::State(_))));
    }

    #[test]
    fn matches_naive_double_loop() {
        // Independent brute-force oracle on a small instance.
        let nu0 = 8_000.0;
        let (l1, l2) = (0.06, 0.015);
        let m = 64;
        let p = RfiProfile1D::new(nu0, l1, l2, m).unwrap().normalize().unwrap();
        let tau = uniform_tau_grid(16, 3e-6);
        let series = simulate_1d(&p, 9, &tau).unwrap();

        for (k, &tau_k) in tau.iter().enumerate() {
            let mut expected = 0.0;
            for i in 0..m {
                let nu = 2.0 * nu0 * i as f64 / (m - 1) as f64;
                expected += p.weights()[i] * (TWO_PI * 9.0 * nu * tau_k).sin();
            }
            assert!(
                (series.values()[k] - expected).abs() < 1e-12,
                "k={k}: {} vs {expected}",
                series.values()[k]
            );
        }
    }

    #[test]
    fn symmetric_envelope_decays_at_closed_form_rate() {
        // For lambda1 = lambda2 the continuum transform of the Lorentzian
        // gives an exponential envelope exp(-2 pi lambda nu0 q tau).
        let (nu0, lambda, q) = (5_400.0, 0.02, 9u32);
        let rate = TWO_PI * lambda * nu0 * q as f64;
        let dtau = 1.0 / (16.0 * q as f64 * nu0);
        let series = simulate_1d(&symmetric_profile(nu0, lambda), q, &uniform_tau_grid(2048, dtau)).unwrap();

        let extrema = envelope::local_extrema(series.tau_grid(), series.values());
        let first = extrema.first().expect("no extrema found").1;
        let mut checked = 0;
        for &(t, mag) in &extrema {
            if mag < first * (-3.0f64).exp() {
                break;
            }
            let expected = (-rate * t).exp();
            assert!(
                ((mag - expected) / expected).abs() < 0.03,
                "t={t}: envelope {mag} vs {expected}"
            );
            checked += 1;
        }
        assert!(checked >= 10, "only {checked} extrema inside three decay constants");

        // Cross-check the default grid against a 1e5-point direct summation.
        let dense = RfiProfile1D::new(nu0, lambda, lambda, 100_000)
            .unwrap()
            .normalize()
            .unwrap();
        let coarse = simulate_1d(&symmetric_profile(nu0, lambda), q, &uniform_tau_grid(64, dtau)).unwrap();
        let fine = simulate_1d(&dense, q, &uniform_tau_grid(64, dtau)).unwrap();
        for (a, b) in coarse.values().iter().zip(fine.values()) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn symmetric_envelope_extrema_are_non_increasing() {
        // Checked over the first three decay constants; far below that the
        // ripple from truncating the distribution at [0, 2 nu0] exceeds the
        // per-period decay and strict monotonicity no longer holds.
        for &lambda in &[0.01, 0.02, 0.05] {
            let (nu0, q) = (5_400.0, 9u32);
            let dtau = 1.0 / (16.0 * q as f64 * nu0);
            let series =
                simulate_1d(&symmetric_profile(nu0, lambda), q, &uniform_tau_grid(1024, dtau)).unwrap();
            let extrema = envelope::local_extrema(series.tau_grid(), series.values());
            let cutoff = extrema[0].1 * (-3.0f64).exp();
            for pair in extrema.windows(2) {
                if pair[1].1 < cutoff {
                    break;
                }
                assert!(
                    pair[1].1 <= pair[0].1 + 1e-9,
                    "lambda={lambda}: envelope rose from {} to {}",
                    pair[0].1,
                    pair[1].1
                );
            }
        }
    }

    #[test]
    fn ninefold_quantum_order_speeds_decay_ninefold() {
        let (nu0, lambda) = (5_400.0, 0.02);
        let p = symmetric_profile(nu0, lambda);
        let mut rates = Vec::new();
        for q in [1u32, 9] {
            let dtau = 1.0 / (16.0 * q as f64 * nu0);
            let series = simulate_1d(&p, q, &uniform_tau_grid(2048, dtau)).unwrap();
            rates.push(envelope::exponential_decay_rate(series.tau_grid(), series.values()).unwrap());
        }
        let ratio = rates[1] / rates[0];
        assert!((ratio - 9.0).abs() / 9.0 < 0.05, "rate ratio {ratio}");
    }

    #[test]
    fn damping_identity_and_scaling() {
        let p = symmetric_profile(5_400.0, 0.02);
        let series = simulate_1d(&p, 1, &uniform_tau_grid(128, 1e-4)).unwrap();

        let unchanged = series.damped(f64::INFINITY).unwrap();
        assert_eq!(series.values(), unchanged.values());

        let tc = series.tau_grid()[64];
        let damped = series.damped(tc).unwrap();
        assert_relative_eq!(
            damped.values()[64],
            series.values()[64] * (-1.0f64).exp(),
            max_relative = 1e-12
        );

        assert!(series.damped(0.0).is_err());
        assert!(series.damped(-1.0).is_err());
    }

    #[test]
    fn damped_delta_series_recovers_time_constant() {
        // Pure sine times exp(-tau/tc): the regression oracle should read
        // back 1/tc to within 1%.
        let nu0 = 2_000.0;
        let tau = uniform_tau_grid(4096, 1.0 / (32.0 * nu0));
        let kernel = TorreyKernel1D::new(&[nu0], 1, &tau).unwrap();
        let tc = 20.0 / nu0;
        let series = kernel.apply(&[1.0]).unwrap().damped(tc).unwrap();
        let rate = envelope::exponential_decay_rate(series.tau_grid(), series.values()).unwrap();
        assert!(
            (rate - 1.0 / tc).abs() * tc < 0.01,
            "rate {rate} vs {}",
            1.0 / tc
        );
    }

    #[test]
    fn two_d_zero_row_and_separability() {
        let tau_h = uniform_tau_grid(12, 5e-6);
        let tau_p = uniform_tau_grid(10, 2e-5);
        let freqs_h: Vec<f64> = (0..8).map(|i| 1_000.0 + 100.0 * i as f64).collect();
        let freqs_p: Vec<f64> = (0..6).map(|j| 2_000.0 + 50.0 * j as f64).collect();

        let wh: Vec<f64> = (0..8).map(|i| (i + 1) as f64).collect();
        let wp: Vec<f64> = (0..6).map(|j| (2 * j + 1) as f64).collect();
        let total: f64 = wh.iter().sum::<f64>() * wp.iter().sum::<f64>();
        let mut weights = Array2::zeros((8, 6));
        for i in 0..8 {
            for j in 0..6 {
                weights[(i, j)] = wh[i] * wp[j] / total;
            }
        }

        let kernel = TorreyKernel2D::new(&freqs_h, &freqs_p, 9, 1, &tau_h, &tau_p).unwrap();
        let series = kernel.apply(weights.view()).unwrap();

        // tauH = 0 row vanishes because of the sin factor.
        for l in 0..10 {
            assert_eq!(series.values()[(0, l)], 0.0);
        }

        // Separable weights factorize into the product of 1D simulations.
        let wh_norm: Vec<f64> = wh.iter().map(|w| w / wh.iter().sum::<f64>()).collect();
        let wp_norm: Vec<f64> = wp.iter().map(|w| w / wp.iter().sum::<f64>()).collect();
        let sh = TorreyKernel1D::new(&freqs_h, 9, &tau_h).unwrap().apply(&wh_norm).unwrap();
        let sp = TorreyKernel1D::new(&freqs_p, 1, &tau_p).unwrap().apply(&wp_norm).unwrap();
        for k in 0..12 {
            for l in 0..10 {
                assert_relative_eq!(
                    series.values()[(k, l)],
                    sh.values()[k] * sp.values()[l],
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn two_d_damping_is_product_of_axis_factors() {
        let p = crate::rfi::RfiProfile2D::new(2_400.0, 2_500.0, 0.0045, 0.114, 0.226, 0.095, 0.028, 32)
            .unwrap()
            .normalize()
            .unwrap();
        let series = simulate_2d(&p, 9, 1, &uniform_tau_grid(8, 1e-5), &uniform_tau_grid(6, 5e-5)).unwrap();
        let tc = 1e-4;
        let damped = series.damped(tc).unwrap();
        let k = 3;
        let l = 2;
        let factor = (-series.tau_h_grid()[k] / tc).exp() * (-series.tau_p_grid()[l] / tc).exp();
        assert_relative_eq!(
            damped.values()[(k, l)],
            series.values()[(k, l)] * factor,
            max_relative = 1e-12
        );
    }

    #[test]
    fn non_uniform_grid_is_rejected() {
        let err = TorreySeries::from_samples(vec![0.0, 1e-5, 3e-5], vec![0.0, 0.1, 0.2], 1);
        assert!(matches!(err, Err(Error::Domain(_))));
        let err = TorreySeries::from_samples(vec![1e-5, 2e-5, 3e-5], vec![0.0, 0.1, 0.2], 1);
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn amplitudes_stay_bounded(
            nu0 in 5.0e2..5.0e4f64,
            l1 in 3.0e-3..0.3f64,
            l2 in 3.0e-3..0.3f64,
            q in 1u32..12,
            dtau_frac in 0.05..1.0f64,
        ) {
            let p = RfiProfile1D::new(nu0, l1, l2, 256).unwrap().normalize().unwrap();
            let dtau = dtau_frac / (4.0 * q as f64 * nu0);
            let series = simulate_1d(&p, q, &uniform_tau_grid(64, dtau)).unwrap();
            for &v in series.values() {
                prop_assert!(v.abs() <= 1.0 + 1e-12);
            }
        }
    }
}
