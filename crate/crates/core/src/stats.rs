//! Small numeric helpers shared across modules.

/// Arithmetic mean with one refinement pass, so a constant slice returns
/// its value exactly and deviations from it are exactly zero.
pub(crate) fn mean(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let mu = values.iter().sum::<f64>() / k;
    mu + values.iter().map(|v| v - mu).sum::<f64>() / k
}

/// Population standard deviation.
pub(crate) fn population_std(values: &[f64]) -> f64 {
    let mu = mean(values);
    (values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_slices_have_zero_spread() {
        for v in [0.1, 0.4, 1.0 / 3.0, 7.77, -2.2e-5] {
            for n in 1..8 {
                let xs = vec![v; n];
                assert_eq!(mean(&xs), v);
                assert_eq!(population_std(&xs), 0.0);
            }
        }
    }

    #[test]
    fn known_std() {
        assert!((population_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]) - 2.0).abs() < 1e-15);
    }
}
