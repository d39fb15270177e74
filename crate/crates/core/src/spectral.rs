//! Frequency-domain profiles of Torrey series.
//!
//! The oscillation is sin-phased (it starts at zero), so the absorptive
//! line shape sits in the sine-transform channel of the spectrum: each axis
//! is transformed by a zero-filled DFT followed by the 90-degree phase that
//! maps the sin convention to absorption, i.e. `S[m] = -Im(DFT[m])`. After
//! every axis is transformed, negative amplitudes are clipped to zero to
//! form the positive-part profile used for fitting.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rustfft::{num_complex::Complex, Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::torrey::{TorreySeries, TorreySeries2D};

/// Zero-filled DFT of a real series plus the phase convention that makes a
/// sin-modulated decay absorptive. Reusable across calls so fits plan the
/// FFT once.
pub struct SineTransform {
    zero_fill: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SineTransform {
    pub fn new(zero_fill: usize) -> Result<Self> {
        if zero_fill < 2 {
            return Err(Error::domain(format!("zero_fill must be >= 2, got {zero_fill}")));
        }
        let fft = FftPlanner::new().plan_fft_forward(zero_fill);
        Ok(Self { zero_fill, fft })
    }

    pub fn zero_fill(&self) -> usize {
        self.zero_fill
    }

    /// Number of non-negative-frequency bins, DC through Nyquist.
    pub fn output_len(&self) -> usize {
        self.zero_fill / 2 + 1
    }

    /// Full complex forward DFT of `values` padded with zeros to the
    /// transform length. No normalization is applied.
    pub fn dft(&self, values: &[f64]) -> Result<Vec<Complex<f64>>> {
        if values.len() < 2 {
            return Err(Error::domain("series needs at least 2 samples"));
        }
        if values.len() > self.zero_fill {
            return Err(Error::domain(format!(
                "zero_fill {} is smaller than the {}-point series",
                self.zero_fill,
                values.len()
            )));
        }
        let mut buf: Vec<Complex<f64>> = values
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(self.zero_fill)
            .collect();
        self.fft.process(&mut buf);
        Ok(buf)
    }

    /// Unclipped absorption-channel spectrum on the non-negative-frequency
    /// half: `-Im(DFT)`, equal to `sum_k x_k sin(2 pi k m / n)`.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        let spectrum = self.dft(values)?;
        Ok(spectrum[..self.output_len()].iter().map(|c| -c.im).collect())
    }
}

/// Convenience wrapper around [`SineTransform::dft`] for one-shot use.
pub fn dft_zero_filled(values: &[f64], zero_fill: usize) -> Result<Vec<Complex<f64>>> {
    SineTransform::new(zero_fill)?.dft(values)
}

/// One-shot unclipped sine-transform spectrum.
pub fn sine_transform(values: &[f64], zero_fill: usize) -> Result<Vec<f64>> {
    SineTransform::new(zero_fill)?.apply(values)
}

/// Positive-part frequency-domain profile of a 1D Torrey series.
///
/// Frequencies are in the `nu_q` domain conjugate to `tau`; dividing by the
/// quantum order (see [`SpectralProfile::rescale_axis`]) maps them to the
/// RF-amplitude domain.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    freq_grid: Vec<f64>,
    values: Vec<f64>,
    zero_fill: usize,
    quantum_order: u32,
    rescaled: bool,
}

impl SpectralProfile {
    pub fn freq_grid(&self) -> &[f64] {
        &self.freq_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn zero_fill(&self) -> usize {
        self.zero_fill
    }

    pub fn quantum_order(&self) -> u32 {
        self.quantum_order
    }

    pub fn is_rescaled(&self) -> bool {
        self.rescaled
    }

    /// Frequency spacing `1 / (zero_fill * dtau)` (before any rescale).
    pub fn df(&self) -> f64 {
        self.freq_grid[1] - self.freq_grid[0]
    }

    /// Index of the profile maximum.
    pub fn peak_bin(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Divides the frequency axis by `q`, mapping `nu_q` to `nu`. Applying
    /// the rescale twice is refused.
    pub fn rescale_axis(mut self, q: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::domain("rescale quantum order must be >= 1"));
        }
        if self.rescaled {
            return Err(Error::state("frequency axis already rescaled"));
        }
        for f in &mut self.freq_grid {
            *f /= q as f64;
        }
        self.rescaled = true;
        Ok(self)
    }
}

/// Positive-part 2D profile, axes `(nuH_q, nuP_q)`.
#[derive(Debug, Clone)]
pub struct SpectralProfile2D {
    freq_h_grid: Vec<f64>,
    freq_p_grid: Vec<f64>,
    values: Array2<f64>,
    zero_fill: (usize, usize),
    quantum_orders: (u32, u32),
    rescaled: bool,
}

impl SpectralProfile2D {
    pub fn freq_h_grid(&self) -> &[f64] {
        &self.freq_h_grid
    }

    pub fn freq_p_grid(&self) -> &[f64] {
        &self.freq_p_grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn zero_fill(&self) -> (usize, usize) {
        self.zero_fill
    }

    pub fn quantum_orders(&self) -> (u32, u32) {
        self.quantum_orders
    }

    pub fn is_rescaled(&self) -> bool {
        self.rescaled
    }

    pub fn df_h(&self) -> f64 {
        self.freq_h_grid[1] - self.freq_h_grid[0]
    }

    pub fn df_p(&self) -> f64 {
        self.freq_p_grid[1] - self.freq_p_grid[0]
    }

    pub fn peak_bin(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_val = f64::NEG_INFINITY;
        for ((i, j), &v) in self.values.indexed_iter() {
            if v > best_val {
                best_val = v;
                best = (i, j);
            }
        }
        best
    }

    /// Divides each frequency axis by its quantum order.
    pub fn rescale_axes(mut self, q_h: u32, q_p: u32) -> Result<Self> {
        if q_h == 0 || q_p == 0 {
            return Err(Error::domain("rescale quantum orders must be >= 1"));
        }
        if self.rescaled {
            return Err(Error::state("frequency axes already rescaled"));
        }
        for f in &mut self.freq_h_grid {
            *f /= q_h as f64;
        }
        for f in &mut self.freq_p_grid {
            *f /= q_p as f64;
        }
        self.rescaled = true;
        Ok(self)
    }
}

fn frequency_axis(bins: usize, zero_fill: usize, dtau: f64) -> Vec<f64> {
    let df = 1.0 / (zero_fill as f64 * dtau);
    (0..bins).map(|m| m as f64 * df).collect()
}

/// Transforms a 1D series into its positive-part spectral profile.
pub fn transform_1d(series: &TorreySeries, zero_fill: usize) -> Result<SpectralProfile> {
    let st = SineTransform::new(zero_fill)?;
    let raw = st.apply(series.values())?;
    let values = raw.into_iter().map(|v| v.max(0.0)).collect();
    Ok(SpectralProfile {
        freq_grid: frequency_axis(st.output_len(), zero_fill, series.dtau()),
        values,
        zero_fill,
        quantum_order: series.quantum_order(),
        rescaled: false,
    })
}

/// Two-pass clipped 2D transform over preplanned per-axis transforms; the
/// fit loop reuses the plans across objective evaluations.
pub(crate) fn transform_2d_with(
    st_h: &SineTransform,
    st_p: &SineTransform,
    values: &Array2<f64>,
) -> Result<Array2<f64>> {
    let (len_h, _) = values.dim();
    let (bins_h, bins_p) = (st_h.output_len(), st_p.output_len());

    let mut mid = Array2::zeros((len_h, bins_p));
    for (k, row) in values.outer_iter().enumerate() {
        let spectrum = st_p.apply(row.as_slice().expect("row-major layout"))?;
        mid.row_mut(k).assign(&Array1::from(spectrum));
    }

    let mut out = Array2::zeros((bins_h, bins_p));
    for j in 0..bins_p {
        let column: Vec<f64> = mid.column(j).to_vec();
        let spectrum = st_h.apply(&column)?;
        for (i, v) in spectrum.into_iter().enumerate() {
            out[(i, j)] = v.max(0.0);
        }
    }
    Ok(out)
}

/// Transforms a 2D series axis by axis (P first, then H); negative
/// amplitudes are clipped only after both axes are transformed.
pub fn transform_2d(
    series: &TorreySeries2D,
    zero_fill_h: usize,
    zero_fill_p: usize,
) -> Result<SpectralProfile2D> {
    let st_h = SineTransform::new(zero_fill_h)?;
    let st_p = SineTransform::new(zero_fill_p)?;
    let values = transform_2d_with(&st_h, &st_p, series.values())?;
    let (bins_h, bins_p) = values.dim();

    Ok(SpectralProfile2D {
        freq_h_grid: frequency_axis(bins_h, zero_fill_h, series.dtau_h()),
        freq_p_grid: frequency_axis(bins_p, zero_fill_p, series.dtau_p()),
        values,
        zero_fill: (zero_fill_h, zero_fill_p),
        quantum_orders: series.quantum_orders(),
        rescaled: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rfi::RfiProfile1D;
    use crate::torrey::{simulate_1d, uniform_tau_grid, TorreyKernel1D, TorreyKernel2D};
    use proptest::prelude::*;

    fn damped_tone(freq: f64, decay: f64, points: usize, dtau: f64) -> TorreySeries {
        let tau = uniform_tau_grid(points, dtau);
        let values: Vec<f64> = tau
            .iter()
            .map(|&t| (std::f64::consts::TAU * freq * t).sin() * (-t / decay).exp())
            .collect();
        TorreySeries::from_samples(tau, values, 1).unwrap()
    }

    #[test]
    fn zero_series_transforms_to_zero_profile() {
        let series =
            TorreySeries::from_samples(uniform_tau_grid(32, 1e-4), vec![0.0; 32], 1).unwrap();
        let profile = transform_1d(&series, 64).unwrap();
        assert!(profile.values().iter().all(|&v| v == 0.0));
        assert_eq!(profile.values().len(), 33);
    }

    #[test]
    fn damped_tone_peaks_at_nearest_bin() {
        let freq = 1_000.0;
        let profile = transform_1d(&damped_tone(freq, 3e-3, 128, 1e-4), 256).unwrap();
        let peak_freq = profile.freq_grid()[profile.peak_bin()];
        assert!(
            (peak_freq - freq).abs() <= profile.df() * (1.0 + 1e-9),
            "peak at {peak_freq}"
        );
    }

    #[test]
    fn simulated_profile_peaks_at_q_times_nominal() {
        let (nu0, q) = (21_000.0, 9u32);
        let profile = RfiProfile1D::new(nu0, 0.057, 0.012, 1024)
            .unwrap()
            .normalize()
            .unwrap();
        let dtau = 1.0 / (4.0 * q as f64 * nu0);
        let series = simulate_1d(&profile, q, &uniform_tau_grid(256, dtau)).unwrap();
        let spectrum = transform_1d(&series, 512).unwrap();
        let peak_freq = spectrum.freq_grid()[spectrum.peak_bin()];
        assert!(
            (peak_freq - q as f64 * nu0).abs() <= spectrum.df() * (1.0 + 1e-9),
            "peak at {peak_freq}, expected near {}",
            q as f64 * nu0
        );
    }

    #[test]
    fn rescale_maps_peak_to_nominal_amplitude() {
        let (nu0, q) = (21_000.0, 9u32);
        let profile = RfiProfile1D::new(nu0, 0.057, 0.012, 1024)
            .unwrap()
            .normalize()
            .unwrap();
        let dtau = 1.0 / (4.0 * q as f64 * nu0);
        let series = simulate_1d(&profile, q, &uniform_tau_grid(256, dtau)).unwrap();
        let spectrum = transform_1d(&series, 512).unwrap();
        let df = spectrum.df();
        let rescaled = spectrum.rescale_axis(q).unwrap();
        let peak_freq = rescaled.freq_grid()[rescaled.peak_bin()];
        assert!((peak_freq - nu0).abs() <= df / q as f64 * (1.0 + 1e-9));

        assert!(matches!(
            rescaled.rescale_axis(q),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn rescale_by_one_is_identity_on_frequencies() {
        let profile = transform_1d(&damped_tone(500.0, 1e-2, 64, 1e-4), 128).unwrap();
        let freqs = profile.freq_grid().to_vec();
        let rescaled = profile.rescale_axis(1).unwrap();
        assert_eq!(freqs, rescaled.freq_grid());
    }

    #[test]
    fn rescale_rejects_zero_order() {
        let profile = transform_1d(&damped_tone(500.0, 1e-2, 64, 1e-4), 128).unwrap();
        assert!(matches!(profile.rescale_axis(0), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_fill_below_series_length_is_rejected() {
        let series = damped_tone(500.0, 1e-2, 64, 1e-4);
        assert!(matches!(transform_1d(&series, 32), Err(Error::Domain(_))));
    }

    #[test]
    fn doubling_zero_fill_preserves_shared_bins() {
        let series = damped_tone(900.0, 2e-3, 100, 1e-4);
        let coarse = transform_1d(&series, 128).unwrap();
        let fine = transform_1d(&series, 256).unwrap();
        assert_eq!(fine.df(), coarse.df() / 2.0);
        for m in 0..coarse.values().len() {
            let a = coarse.values()[m];
            let b = fine.values()[2 * m];
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "bin {m}: {a} vs {b}");
        }
    }

    #[test]
    fn two_d_transform_of_zero_series_is_zero() {
        let series = TorreySeries2D::from_samples(
            uniform_tau_grid(8, 1e-5),
            uniform_tau_grid(6, 5e-5),
            Array2::zeros((8, 6)),
            (9, 1),
        )
        .unwrap();
        let profile = transform_2d(&series, 16, 16).unwrap();
        assert!(profile.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn separable_series_transforms_to_outer_product() {
        let tau_h = uniform_tau_grid(12, 5e-6);
        let tau_p = uniform_tau_grid(10, 2e-5);
        let freqs_h = [9_000.0, 9_500.0, 10_000.0];
        let freqs_p = [2_400.0, 2_600.0];
        let wh = [0.2, 0.5, 0.3];
        let wp = [0.6, 0.4];
        let mut weights = Array2::zeros((3, 2));
        for i in 0..3 {
            for j in 0..2 {
                weights[(i, j)] = wh[i] * wp[j];
            }
        }
        let series = TorreyKernel2D::new(&freqs_h, &freqs_p, 1, 1, &tau_h, &tau_p)
            .unwrap()
            .apply(weights.view())
            .unwrap();

        let sh = TorreyKernel1D::new(&freqs_h, 1, &tau_h).unwrap().apply(&wh).unwrap();
        let sp = TorreyKernel1D::new(&freqs_p, 1, &tau_p).unwrap().apply(&wp).unwrap();
        let spec_h = sine_transform(sh.values(), 32).unwrap();
        let spec_p = sine_transform(sp.values(), 32).unwrap();

        // Unclipped 2D transform equals the outer product of the 1D ones.
        let st_h = SineTransform::new(32).unwrap();
        let st_p = SineTransform::new(32).unwrap();
        let mut mid = Array2::zeros((12, st_p.output_len()));
        for (k, row) in series.values().outer_iter().enumerate() {
            mid.row_mut(k)
                .assign(&Array1::from(st_p.apply(row.as_slice().unwrap()).unwrap()));
        }
        for j in 0..st_p.output_len() {
            let col: Vec<f64> = mid.column(j).to_vec();
            let spectrum = st_h.apply(&col).unwrap();
            for (i, v) in spectrum.iter().enumerate() {
                let expected = spec_h[i] * spec_p[j];
                assert!(
                    (v - expected).abs() < 1e-10,
                    "({i},{j}): {v} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn paper_sized_two_d_profile_has_single_dominant_peak() {
        let profile = crate::rfi::RfiProfile2D::new(
            2_400.0, 2_500.0, 0.0045, 0.114, 0.226, 0.095, 0.028, 128,
        )
        .unwrap()
        .normalize()
        .unwrap();
        let series = crate::torrey::simulate_2d(
            &profile,
            9,
            1,
            &uniform_tau_grid(128, 11.1e-6),
            &uniform_tau_grid(96, 50.0e-6),
        )
        .unwrap();
        let spectrum = transform_2d(&series, 256, 256).unwrap();
        let (bh, bp) = spectrum.peak_bin();
        let peak_h = spectrum.freq_h_grid()[bh];
        let peak_p = spectrum.freq_p_grid()[bp];
        assert!(
            (peak_h - 9.0 * 2_400.0).abs() <= 2.0 * spectrum.df_h(),
            "H peak at {peak_h}"
        );
        assert!(
            (peak_p - 2_500.0).abs() <= 2.0 * spectrum.df_p(),
            "P peak at {peak_p}"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn transform_is_linear_before_clipping(
            x in prop::collection::vec(-1.0..1.0f64, 16),
            y in prop::collection::vec(-1.0..1.0f64, 16),
            a in -2.0..2.0f64,
            b in -2.0..2.0f64,
        ) {
            let combo: Vec<f64> = x.iter().zip(&y).map(|(xv, yv)| a * xv + b * yv).collect();
            let tx = sine_transform(&x, 32).unwrap();
            let ty = sine_transform(&y, 32).unwrap();
            let tc = sine_transform(&combo, 32).unwrap();
            for m in 0..tc.len() {
                let expected = a * tx[m] + b * ty[m];
                prop_assert!((tc[m] - expected).abs() < 1e-10);
            }
        }

        #[test]
        fn parseval_on_unclipped_transform(
            x in prop::collection::vec(-1.0..1.0f64, 8..64),
            pad in 0usize..64,
        ) {
            let zero_fill = x.len() + pad;
            let zero_fill = zero_fill.max(2);
            let spectrum = dft_zero_filled(&x, zero_fill).unwrap();
            let time_energy: f64 = x.iter().map(|v| v * v).sum();
            let freq_energy: f64 =
                spectrum.iter().map(|c| c.norm_sqr()).sum::<f64>() / zero_fill as f64;
            prop_assert!(
                (time_energy - freq_energy).abs() <= 1e-9 * time_energy.max(1e-30)
            );
        }
    }
}
