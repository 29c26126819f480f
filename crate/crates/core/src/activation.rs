//! Logistic activation and its derivative.

use alloc::vec::Vec;

use crate::float::exp;

/// `1 / (1 + e^-z)`, evaluated without overflow for large `|z|`.
#[inline]
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

/// `σ(z)(1 - σ(z))`.
#[inline]
pub fn logistic_prime(z: f64) -> f64 {
    let s = logistic(z);
    s * (1.0 - s)
}

pub fn sigmoid(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&z| logistic(z)).collect()
}

pub fn sigmoid_prime(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&z| logistic_prime(z)).collect()
}

pub(crate) fn sigmoid_in_place(v: &mut [f64]) {
    v.iter_mut().for_each(|z| *z = logistic(*z));
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LN3: f64 = 1.0986122886681098;

    #[test]
    fn sigmoid_known_values() {
        assert_eq!(sigmoid(&[0.0]), [0.5]);
        assert!((sigmoid(&[LN3])[0] - 0.75).abs() < 1e-15);
        let s = sigmoid(&[-LN3, 0.0, LN3]);
        for (got, want) in s.iter().zip([0.25, 0.5, 0.75]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn sigmoid_prime_known_values() {
        assert_eq!(sigmoid_prime(&[0.0]), [0.25]);
        assert!(sigmoid_prime(&[50.0])[0] < 1e-20);
        assert!((sigmoid_prime(&[LN3])[0] - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_stays_inside_open_interval_for_moderate_inputs() {
        for z in [-30.0, -5.0, 0.0, 5.0, 30.0] {
            let s = logistic(z);
            assert!(s > 0.0 && s < 1.0);
        }
    }

    proptest! {
        #[test]
        fn sigmoid_is_antisymmetric(z in -40.0f64..40.0) {
            prop_assert!((logistic(z) + logistic(-z) - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn derivative_peaks_at_zero(z in -40.0f64..40.0) {
            prop_assert!(logistic_prime(z) <= 0.25);
        }
    }
}
