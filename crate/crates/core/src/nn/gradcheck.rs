use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Network, NnError, Tensor};

/// Central-difference step.
pub const GRAD_CHECK_STEP: f64 = 1e-4;
const ENTRIES_PER_TENSOR: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// max |a − n| / max(|a|, |n|, 1e-7) over all checked entries.
    pub max_relative_error: f64,
    pub checked: usize,
    /// Entries skipped because ±step crossed a ReLU kink or changed a
    /// pooling argmax, where the finite difference is meaningless.
    pub skipped_at_kinks: usize,
}

/// Compares the analytic gradient of the mean loss over `(x, labels)` with
/// central differences, on up to 200 seeded random entries of every
/// parameter tensor (all entries of smaller tensors).
pub fn grad_check(net: &Network, x: &Tensor, labels: &[usize], seed: u64) -> Result<GradCheckReport, NnError> {
    if x.batch() == 0 {
        return Err(NnError::EmptyDataset);
    }
    let scale = 1.0 / x.batch() as f64;
    let analytic = net.gradients(x, labels, scale)?.params;
    let mean_loss = |n: &Network| -> Result<f64, NnError> { Ok(n.losses(x, labels)?.iter().sum::<f64>() * scale) };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = net.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        checked: 0,
        skipped_at_kinks: 0,
    };
    for (t, grad) in analytic.iter().enumerate() {
        let len = grad.len();
        // Shuffled order; walk it until enough smooth entries are found.
        let order = sample(&mut rng, len, len).into_vec();
        let wanted = ENTRIES_PER_TENSOR.min(len);
        let mut done = 0;
        for idx in order {
            if done == wanted {
                break;
            }
            let original = probe.params()[t].data()[idx];
            probe.params_mut()[t].data_mut()[idx] = original + GRAD_CHECK_STEP;
            let up = mean_loss(&probe)?;
            let up_switches = probe.switches(x)?;
            probe.params_mut()[t].data_mut()[idx] = original - GRAD_CHECK_STEP;
            let down = mean_loss(&probe)?;
            let down_switches = probe.switches(x)?;
            probe.params_mut()[t].data_mut()[idx] = original;
            if up_switches != down_switches {
                report.skipped_at_kinks += 1;
                continue;
            }
            let numeric = (up - down) / (2.0 * GRAD_CHECK_STEP);
            let a = grad[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-7);
            report.max_relative_error = report.max_relative_error.max(rel);
            report.checked += 1;
            done += 1;
        }
    }
    Ok(report)
}
