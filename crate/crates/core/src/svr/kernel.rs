use super::SvrError;

/// `exp(-gamma * |x - y|^2)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64, SvrError> {
    if x.len() != y.len() {
        return Err(SvrError::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(rbf(x, y, gamma))
}

#[inline]
pub(crate) fn rbf(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(rbf_kernel(&[0.3, -2.0], &[0.3, -2.0], 7.0).unwrap(), 1.0);
        assert!((rbf_kernel(&[0.0], &[2.0], 0.5).unwrap() - 0.135335).abs() < 1e-6);
        assert!(rbf_kernel(&[0.0], &[2.0, 1.0], 0.5).is_err());
    }
}
