//! Exact state-vector simulation of star-topology spin systems.
//!
//! A star system has one labelled spin A coupled to N-1 equivalent M spins.
//! The basis is the computational one with A as the most significant bit,
//! so index `a * 2^(N-1) + m` holds the amplitude of A in state `a` and the
//! M register in bit pattern `m`. All operations here are ideal unitaries;
//! they verify the phase bookkeeping of NOON-state experiments, not pulse
//! physics.

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};

const TWO_PI: f64 = std::f64::consts::TAU;

/// Pure state of an N-spin star system (1 A spin + N-1 M spins).
#[derive(Debug, Clone)]
pub struct SpinState {
    n_spins: usize,
    amplitudes: Vec<Complex<f64>>,
}

impl SpinState {
    pub const MIN_SPINS: usize = 2;
    /// Amplitude vectors grow as 2^N; 14 spins stay comfortably in memory.
    pub const MAX_SPINS: usize = 14;

    /// The single-quantum A coherence with every M spin in `|0>`:
    /// `(|0> + |1>) |0...0> / sqrt(2)`.
    pub fn prepare_initial(n_spins: usize) -> Result<Self> {
        if !(Self::MIN_SPINS..=Self::MAX_SPINS).contains(&n_spins) {
            return Err(Error::domain(format!(
                "n_spins must be in [{}, {}], got {n_spins}",
                Self::MIN_SPINS,
                Self::MAX_SPINS
            )));
        }
        let mut amplitudes = vec![Complex::new(0.0, 0.0); 1 << n_spins];
        let amp = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amplitudes[0] = amp;
        amplitudes[1 << (n_spins - 1)] = amp;
        Ok(Self { n_spins, amplitudes })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn amplitudes(&self) -> &[Complex<f64>] {
        &self.amplitudes
    }

    /// Index of `|1>_A |0...0>_M`, the extreme-line coherence partner.
    pub fn a_one_index(&self) -> usize {
        1 << (self.n_spins - 1)
    }

    /// Index of `|1...1>`, the upper component of the NOON state.
    pub fn noon_index(&self) -> usize {
        (1 << self.n_spins) - 1
    }

    fn m_mask(&self) -> usize {
        (1 << (self.n_spins - 1)) - 1
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// NOT on every M spin controlled by A: basis states with A = 1 have
    /// all M bits flipped. Involutive, so the same gate set performs both
    /// NOON preparation and back-conversion.
    pub fn cnot_all(&self) -> Self {
        let a_bit = 1 << (self.n_spins - 1);
        let m_mask = self.m_mask();
        let mut amplitudes = vec![Complex::new(0.0, 0.0); self.amplitudes.len()];
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            let target = if idx & a_bit != 0 { idx ^ m_mask } else { idx };
            amplitudes[target] = amp;
        }
        Self {
            n_spins: self.n_spins,
            amplitudes,
        }
    }

    /// z-rotation of every M spin: each basis state gains phase
    /// `exp(i phi k)` where `k` counts M spins in `|1>`. The phase sits
    /// entirely on `|1>`; only relative phases are observable.
    pub fn z_rotation_on_m(&self, phi: f64) -> Self {
        let m_mask = self.m_mask();
        let phases: Vec<Complex<f64>> = (0..self.n_spins)
            .map(|k| Complex::from_polar(1.0, phi * k as f64))
            .collect();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(idx, &amp)| amp * phases[(idx & m_mask).count_ones() as usize])
            .collect();
        Self {
            n_spins: self.n_spins,
            amplitudes,
        }
    }

    /// Phase of `amplitudes[ket]` relative to `amplitudes[bra]`, wrapped to
    /// `(-pi, pi]`. Both amplitudes must be nonzero.
    pub fn relative_phase(&self, bra: usize, ket: usize) -> Result<f64> {
        let dim = self.amplitudes.len();
        if bra >= dim || ket >= dim {
            return Err(Error::domain(format!(
                "basis index out of range for {} spins",
                self.n_spins
            )));
        }
        let (b, k) = (self.amplitudes[bra], self.amplitudes[ket]);
        if b.norm() <= 1e-12 || k.norm() <= 1e-12 {
            return Err(Error::domain(
                "relative phase undefined on vanishing amplitude",
            ));
        }
        Ok(wrap_phase(k.arg() - b.arg()))
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let wrapped = phi.rem_euclid(TWO_PI);
    if wrapped > std::f64::consts::PI {
        wrapped - TWO_PI
    } else {
        wrapped
    }
}

/// Gradient ratio `G2/G1 = (N-1) gammaM/gammaA + 1` selecting the NOON
/// coherence pathway.
pub fn pfg_ratio(n_spins: usize, gamma_ratio: f64) -> Result<f64> {
    if n_spins < 2 {
        return Err(Error::domain(format!("n_spins must be >= 2, got {n_spins}")));
    }
    if !gamma_ratio.is_finite() || gamma_ratio == 0.0 {
        return Err(Error::domain(format!(
            "gamma_ratio must be finite and nonzero, got {gamma_ratio}"
        )));
    }
    Ok((n_spins - 1) as f64 * gamma_ratio + 1.0)
}

/// Relative phase read back after one full NOON cycle
/// (prepare -> CNOT-all -> z-rotation phi -> CNOT-all), i.e. the phase of
/// the extreme spectral line.
pub fn noon_cycle_phase(n_spins: usize, phi: f64) -> Result<f64> {
    let state = SpinState::prepare_initial(n_spins)?
        .cnot_all()
        .z_rotation_on_m(phi)
        .cnot_all();
    state.relative_phase(0, state.a_one_index())
}

/// Noiseless single-frequency limit of the NOON Torrey experiment: the
/// phase accumulated by duration `tau` at nominal amplitude `nu0` is
/// `(N-1) * 2 pi nu0 tau`, wrapped.
pub fn torrey_phase_sequence(n_spins: usize, nu0: f64, tau_grid: &[f64]) -> Result<Vec<f64>> {
    if !(SpinState::MIN_SPINS..=SpinState::MAX_SPINS).contains(&n_spins) {
        return Err(Error::domain(format!(
            "n_spins must be in [{}, {}], got {n_spins}",
            SpinState::MIN_SPINS,
            SpinState::MAX_SPINS
        )));
    }
    if !nu0.is_finite() || nu0 <= 0.0 {
        return Err(Error::domain(format!("nu0 must be positive, got {nu0}")));
    }
    if let Some(t) = tau_grid.iter().find(|t| !t.is_finite()) {
        return Err(Error::domain(format!("non-finite tau {t}")));
    }
    Ok(tau_grid
        .iter()
        .map(|&tau| wrap_phase((n_spins - 1) as f64 * TWO_PI * nu0 * tau))
        .collect())
}
