//! Small numeric helpers shared across modules.

/// Compensated (Kahan) summation; keeps normalization errors near machine
/// precision even for the 65k-term 2D weight grids.
pub fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}
