use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// `x(t) + i H{x}(t)`. The real part is the input, bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSignal {
    pub values: Vec<Complex64>,
}

/// Instantaneous phase in `(-pi, pi]`. Samples where the analytic signal has
/// zero modulus get phase 0 and are listed in `degenerate`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub values: Vec<f64>,
    pub degenerate: Vec<usize>,
}

/// FFT, zero the negative frequencies, double the positive ones (DC and
/// Nyquist kept), inverse FFT.
pub fn analytic_signal(signal: &[f64]) -> AnalyticSignal {
    let n = signal.len();
    if n == 0 {
        return AnalyticSignal { values: Vec::new() };
    }
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let positive_end = n.div_ceil(2); // bins 1..positive_end are strictly positive
    for (k, v) in buf.iter_mut().enumerate().skip(1) {
        if k < positive_end {
            *v *= 2.0;
        } else if !(n.is_multiple_of(2) && k == n / 2) {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let values = signal
        .iter()
        .zip(&buf)
        .map(|(&x, v)| Complex64::new(x, v.im * scale))
        .collect();
    AnalyticSignal { values }
}

pub fn instantaneous_phase(analytic: &AnalyticSignal) -> Phase {
    let mut degenerate = Vec::new();
    let values = analytic
        .values
        .iter()
        .enumerate()
        .map(|(i, z)| {
            if z.re == 0.0 && z.im == 0.0 {
                degenerate.push(i);
                0.0
            } else {
                let p = z.im.atan2(z.re);
                if p <= -PI {
                    PI
                } else {
                    p
                }
            }
        })
        .collect();
    Phase { values, degenerate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wrap(x: f64) -> f64 {
        let w = x.rem_euclid(2.0 * PI);
        if w > PI {
            w - 2.0 * PI
        } else {
            w
        }
    }

    #[test]
    fn cosine_phase_and_modulus() {
        let (fs, f, n) = (250.0, 10.0, 2500);
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).cos()).collect();
        let a = analytic_signal(&x);
        let ph = instantaneous_phase(&a);
        for i in 250..n - 250 {
            assert!((a.values[i].norm() - 1.0).abs() < 0.01);
            let err = wrap(ph.values[i] - 2.0 * PI * f * i as f64 / fs).abs();
            assert!(err < 0.01, "{i}: {err}");
        }
    }

    #[test]
    fn sine_lags_by_quarter_cycle() {
        let (fs, f, n) = (250.0, 7.3, 2000);
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect();
        let ph = instantaneous_phase(&analytic_signal(&x));
        for i in 300..n - 300 {
            let err = wrap(ph.values[i] - (2.0 * PI * f * i as f64 / fs - PI / 2.0)).abs();
            assert!(err < 0.01);
        }
    }

    #[test]
    fn white_noise_quadrature_has_matching_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 512;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = analytic_signal(&x);
        let dft = |v: &[f64], k: usize| -> f64 {
            v.iter()
                .enumerate()
                .map(|(t, &s)| Complex64::from_polar(s, -2.0 * PI * (k * t) as f64 / n as f64))
                .sum::<Complex64>()
                .norm()
        };
        let im: Vec<f64> = a.values.iter().map(|z| z.im).collect();
        for k in (1..n / 2).step_by(7) {
            let (re_mag, im_mag) = (dft(&x, k), dft(&im, k));
            assert!((re_mag - im_mag).abs() < 1e-9 * re_mag.max(1.0), "bin {k}");
        }
    }

    #[test]
    fn phase_conventions() {
        let a = AnalyticSignal {
            values: vec![
                Complex64::new(2.0, 0.0),
                Complex64::new(-2.0, 0.0),
                Complex64::new(-2.0, -0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 1.0),
            ],
        };
        let p = instantaneous_phase(&a);
        assert_eq!(p.values[0], 0.0);
        assert_eq!(p.values[1], PI);
        assert_eq!(p.values[2], PI);
        assert_eq!(p.values[3], 0.0);
        assert_eq!(p.degenerate, vec![3]);
        assert!((p.values[4] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn linear_phase_ramp() {
        let w = 0.3;
        let a = AnalyticSignal {
            values: (0..100).map(|t| Complex64::from_polar(1.0, w * t as f64)).collect(),
        };
        let p = instantaneous_phase(&a);
        for t in 1..100 {
            assert!((wrap(p.values[t] - p.values[t - 1]) - w).abs() < 1e-12);
        }
    }

    #[test]
    fn odd_length_and_empty() {
        assert!(analytic_signal(&[]).values.is_empty());
        let x: Vec<f64> = (0..101).map(|i| (i as f64 * 0.4).cos()).collect();
        let a = analytic_signal(&x);
        assert_eq!(a.values.len(), 101);
    }

    proptest! {
        #[test]
        fn real_part_is_input(x in proptest::collection::vec(-1e3f64..1e3, 1..300)) {
            let a = analytic_signal(&x);
            for (z, v) in a.values.iter().zip(&x) {
                prop_assert_eq!(z.re, *v);
            }
            for p in instantaneous_phase(&a).values {
                prop_assert!(p > -PI && p <= PI);
            }
        }
    }
}
