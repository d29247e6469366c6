use std::f64::consts::{PI, TAU};

use super::FeatureError;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Elementwise `phase_i - phase_j`, re-wrapped into `(-pi, pi]`.
pub fn relative_phases(phase_i: &[f64], phase_j: &[f64]) -> Result<Vec<f64>, FeatureError> {
    if phase_i.len() != phase_j.len() {
        return Err(FeatureError::LengthMismatch {
            left: phase_i.len(),
            right: phase_j.len(),
        });
    }
    Ok(phase_i
        .iter()
        .zip(phase_j)
        .map(|(a, b)| wrap_phase(a - b))
        .collect())
}

/// Phase locking value: modulus of the mean unit phasor.
pub fn plv(series: &[f64]) -> Result<f64, FeatureError> {
    if series.is_empty() {
        return Err(FeatureError::EmptySeries);
    }
    let (mut re, mut im) = (0.0, 0.0);
    for &phi in series {
        let (s, c) = phi.sin_cos();
        re += c;
        im += s;
    }
    let n = series.len() as f64;
    Ok((re / n).hypot(im / n).min(1.0))
}

/// Bin count heuristic `floor(exp(0.626 + 0.4 ln(N - 1)))`; 16 for N = 250.
pub fn default_entropy_bins(samples: usize) -> usize {
    let n = samples.max(2) as f64;
    ((0.626 + 0.4 * (n - 1.0).ln()).exp().floor() as usize).max(2)
}

/// Index of the circular bin holding `phi`. Bins have width `2 pi / K` and
/// are centred on `2 pi k / K`, so negation maps bin `k` to `(K - k) mod K`.
fn circular_bin(phi: f64, bins: usize) -> usize {
    let k = bins as f64;
    let m = (phi.abs() * k / TAU + 0.5).floor() as usize % bins;
    if phi >= 0.0 {
        m
    } else {
        (bins - m) % bins
    }
}

/// Entropy-based synchronization index `(ln K - S) / ln K`.
pub fn phase_entropy_rho(series: &[f64], num_bins: usize) -> Result<f64, FeatureError> {
    if series.is_empty() {
        return Err(FeatureError::EmptySeries);
    }
    if num_bins < 2 {
        return Err(FeatureError::TooFewBins(num_bins));
    }
    let mut counts = vec![0usize; num_bins];
    for &phi in series {
        counts[circular_bin(phi, num_bins)] += 1;
    }
    // fixed summation order over sorted counts: the result then only depends
    // on the multiset of counts
    counts.sort_unstable();
    let n = series.len() as f64;
    let entropy: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    let max = (num_bins as f64).ln();
    Ok(((max - entropy) / max).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn wrap_examples() {
        let d = relative_phases(&[3.0], &[-3.0]).unwrap();
        assert!((d[0] - (6.0 - TAU)).abs() < 1e-15);
        assert!((d[0] - -0.28318530717958645).abs() < 1e-12);
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!(relative_phases(&[0.0], &[]).is_err());
        let same = relative_phases(&[0.3, -1.0], &[0.3, -1.0]).unwrap();
        assert!(same.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn plv_closed_forms() {
        assert!((plv(&[0.7; 100]).unwrap() - 1.0).abs() < 1e-12);
        let n = 250;
        let roots: Vec<f64> = (0..n).map(|k| wrap_phase(TAU * k as f64 / n as f64)).collect();
        assert!(plv(&roots).unwrap() < 1e-12);
        let third = plv(&[0.0, PI / 2.0, PI]).unwrap();
        let oracle = (Complex64::new(1.0, 0.0) + Complex64::new(0.0, 1.0) + Complex64::new(-1.0, 0.0)).norm() / 3.0;
        assert!((third - oracle).abs() < 1e-15);
        assert!((third - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(plv(&[]), Err(FeatureError::EmptySeries));
    }

    #[test]
    fn rho_closed_forms() {
        assert!((phase_entropy_rho(&[0.1; 40], 16).unwrap() - 1.0).abs() < 1e-12);
        let k = 8;
        let uniform: Vec<f64> = (0..k * 5).map(|i| wrap_phase(TAU * (i % k) as f64 / k as f64)).collect();
        assert!(phase_entropy_rho(&uniform, k).unwrap().abs() < 1e-12);
        let two = [0.0, 0.0, PI / 2.0, PI / 2.0];
        assert!((phase_entropy_rho(&two, 4).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(phase_entropy_rho(&[], 4), Err(FeatureError::EmptySeries));
        assert_eq!(phase_entropy_rho(&[0.0], 1), Err(FeatureError::TooFewBins(1)));
    }

    #[test]
    fn bins_partition_uniformly() {
        assert_eq!(default_entropy_bins(250), 16);
        let k = 16;
        let mut counts = vec![0; k];
        let m = 16_000;
        for i in 0..m {
            let phi = -PI + TAU * (i as f64 + 0.5) / m as f64;
            counts[circular_bin(phi, k)] += 1;
        }
        assert!(counts.iter().all(|&c| c == m / k));
    }

    proptest! {
        #[test]
        fn plv_bounded_and_shift_invariant(
            s in proptest::collection::vec(-PI..PI, 1..300),
            shift in -10.0f64..10.0,
        ) {
            let p = plv(&s).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            let shifted: Vec<f64> = s.iter().map(|v| wrap_phase(v + shift)).collect();
            prop_assert!((plv(&shifted).unwrap() - p).abs() < 1e-9);
            let neg: Vec<f64> = s.iter().map(|v| wrap_phase(-v)).collect();
            prop_assert!((plv(&neg).unwrap() - p).abs() < 1e-12);
        }

        #[test]
        fn rho_bounded_permutation_and_negation_invariant(
            s in proptest::collection::vec(-PI..PI, 1..300),
            bins in 2usize..40,
        ) {
            let r = phase_entropy_rho(&s, bins).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
            let mut rev = s.clone();
            rev.reverse();
            prop_assert_eq!(phase_entropy_rho(&rev, bins).unwrap(), r);
            let neg: Vec<f64> = s.iter().map(|v| -v).collect();
            prop_assert_eq!(phase_entropy_rho(&neg, bins).unwrap(), r);
        }
    }
}
