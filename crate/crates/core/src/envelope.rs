//! Envelope extraction for decaying oscillations.
//!
//! The decay constant of a Torrey oscillation carries the width information
//! of the underlying RFI distribution, so pulling the envelope out of a
//! sampled series is a recurring verification step: locate the local
//! extrema of `|s(tau)|`, refine each with a parabolic fit to remove the
//! sampling bias, and regress `ln |peak|` against time.

use crate::error::{Error, Result};

/// Magnitude floor below which samples are ignored as numerical noise,
/// relative to the series maximum.
const MAGNITUDE_FLOOR: f64 = 1e-9;

/// Local extrema of `|values|` as `(tau, magnitude)` pairs, refined by a
/// three-point parabolic fit around each discrete peak.
pub fn local_extrema(tau: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    assert_eq!(tau.len(), values.len());
    let max_mag = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_mag == 0.0 {
        return Vec::new();
    }
    let floor = max_mag * MAGNITUDE_FLOOR;

    let mut extrema = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let (a, b, c) = (values[i - 1].abs(), values[i].abs(), values[i + 1].abs());
        if b < floor || b < a || b < c || (b == a && b == c) {
            continue;
        }
        let denom = a - 2.0 * b + c;
        let (dt, peak) = if denom.abs() < f64::EPSILON * b {
            (0.0, b)
        } else {
            // Vertex of the parabola through the three samples.
            let shift = 0.5 * (a - c) / denom;
            let shift = shift.clamp(-0.5, 0.5);
            (shift, b - 0.25 * (a - c) * shift)
        };
        let step = tau[i + 1] - tau[i];
        extrema.push((tau[i] + dt * step, peak));
    }
    extrema
}

/// Exponential decay rate of the envelope, from a least-squares fit of
/// `ln |peak|` versus time over the extrema within three decay constants of
/// the first one (magnitude at least `e^-3` of the first peak).
pub fn exponential_decay_rate(tau: &[f64], values: &[f64]) -> Result<f64> {
    let extrema = local_extrema(tau, values);
    let first = extrema
        .first()
        .ok_or_else(|| Error::domain("series has no envelope extrema"))?
        .1;
    let cutoff = first * (-3.0f64).exp();
    let pts: Vec<(f64, f64)> = extrema
        .iter()
        .take_while(|&&(_, mag)| mag >= cutoff)
        .map(|&(t, mag)| (t, mag.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::domain(format!(
            "only {} envelope extrema within three decay constants; series too short or too coarse",
            pts.len()
        )));
    }

    let n = pts.len() as f64;
    let sum_t: f64 = pts.iter().map(|p| p.0).sum();
    let sum_y: f64 = pts.iter().map(|p| p.1).sum();
    let sum_tt: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sum_ty: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sum_ty - sum_t * sum_y) / (n * sum_tt - sum_t * sum_t);
    Ok(-slope)
}
