use super::{Network, NnError, Tensor};

const CHUNK: usize = 64;

/// Mean over samples of (∂Lᵢ/∂xᵢ)², one value per input entry
/// (`h · w · c`, row-major).
pub fn input_sensitivity(net: &Network, x: &Tensor, labels: &[usize]) -> Result<Vec<f64>, NnError> {
    let n = x.batch();
    if n == 0 || labels.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    if labels.len() != n {
        return Err(NnError::Shape(format!("{} labels for {n} samples", labels.len())));
    }
    let item = x.item_len();
    let mut shape = x.shape().to_vec();
    let mut acc = vec![0.0; item];
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        shape[0] = end - start;
        let chunk = Tensor::new(&shape, x.data()[start * item..end * item].to_vec())?;
        let grads = net.gradients(&chunk, &labels[start..end], 1.0)?;
        for g in grads.input.data().chunks(item) {
            acc.iter_mut().zip(g).for_each(|(a, v)| *a += v * v);
        }
    }
    acc.iter_mut().for_each(|a| *a /= n as f64);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{train, Init, LayerSpec, TrainConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn specs() -> Vec<LayerSpec> {
        use LayerSpec::*;
        vec![Conv { filters: 2, kernel: 3 }, Relu, Dense { units: 8 }, Relu, Dense { units: 2 }, Softmax]
    }

    #[test]
    fn zero_first_layer_gives_zero_map() {
        let mut net = Network::new(&specs(), [4, 3, 1], 1, Init::RandomOutput).unwrap();
        net.params_mut()[0].data_mut().fill(0.0);
        let x = Tensor::new(&[3, 4, 3, 1], (0..36).map(|i| i as f64 * 0.1).collect()).unwrap();
        let map = input_sensitivity(&net, &x, &[0, 1, 0]).unwrap();
        assert_eq!(map.len(), 12);
        assert!(map.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_set_rejected() {
        let net = Network::new(&specs(), [4, 3, 1], 1, Init::RandomOutput).unwrap();
        let x = Tensor::zeros(&[1, 4, 3, 1]);
        assert_eq!(input_sensitivity(&net, &x, &[]), Err(NnError::EmptyDataset));
    }

    #[test]
    fn map_peaks_at_the_informative_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200;
        let mut data = Vec::with_capacity(n * 12);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = i % 2;
            for j in 0..12 {
                let noise = rng.random_range(-1.0..1.0);
                data.push(if j == 0 { noise * 0.3 + if y == 1 { 1.5 } else { -1.5 } } else { noise });
            }
            labels.push(y);
        }
        let x = Tensor::new(&[n, 4, 3, 1], data).unwrap();
        let mut net = Network::new(&specs(), [4, 3, 1], 6, Init::ZeroOutput).unwrap();
        let cfg = TrainConfig {
            epochs: 20,
            batch_size: 16,
            learning_rate: 1e-2,
            validation_fraction: 0.0,
            ..TrainConfig::new(7)
        };
        train(&mut net, &x, &labels, &cfg).unwrap();
        let map = input_sensitivity(&net, &x, &labels).unwrap();
        assert!(map.iter().all(|&v| v >= 0.0));
        let argmax = (0..12).max_by(|&a, &b| map[a].total_cmp(&map[b])).unwrap();
        assert_eq!(argmax, 0, "{map:?}");
    }
}
