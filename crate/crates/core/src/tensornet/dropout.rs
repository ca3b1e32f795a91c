use ndarray::{Array, Dimension};
use rand::Rng;

use super::Mode;
use crate::error::{Error, Result};

/// Inverted dropout: survivors are scaled by `1/(1-rate)` at train time so that
/// inference is the identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub rate: f64,
    scale: Option<Vec<f64>>,
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!("dropout rate {rate} not in [0, 1)")));
        }
        Ok(Self { rate, scale: None })
    }

    pub fn forward<D: Dimension, R: Rng>(&mut self, x: &Array<f64, D>, mode: Mode, rng: &mut R) -> Array<f64, D> {
        if mode == Mode::Infer || self.rate == 0.0 {
            self.scale = None;
            return x.clone();
        }
        let keep = 1.0 / (1.0 - self.rate);
        let scale: Vec<f64> = (0..x.len())
            .map(|_| if rng.gen::<f64>() < self.rate { 0.0 } else { keep })
            .collect();
        let mut out = x.as_standard_layout().into_owned();
        for (v, s) in out.iter_mut().zip(&scale) {
            *v *= s;
        }
        self.scale = Some(scale);
        out
    }

    pub fn backward<D: Dimension>(&self, dy: &Array<f64, D>) -> Array<f64, D> {
        match &self.scale {
            None => dy.clone(),
            Some(scale) => {
                let mut out = dy.as_standard_layout().into_owned();
                for (v, s) in out.iter_mut().zip(scale) {
                    *v *= s;
                }
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_and_infer_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Array1::linspace(-1.0, 1.0, 11);
        let mut d0 = Dropout::new(0.0).unwrap();
        assert_eq!(d0.forward(&x, Mode::Train, &mut rng), x);
        assert_eq!(d0.forward(&x, Mode::Infer, &mut rng), x);
        let mut d3 = Dropout::new(0.3).unwrap();
        assert_eq!(d3.forward(&x, Mode::Infer, &mut rng), x);
        assert_eq!(d3.backward(&x), x);
    }

    #[test]
    fn rate_one_rejected() {
        assert!(Dropout::new(1.0).is_err());
        assert!(Dropout::new(-0.1).is_err());
    }

    #[test]
    fn monte_carlo_drop_fraction_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Array1::from_elem(1_000_000, 2.0);
        let mut d = Dropout::new(0.5).unwrap();
        let y = d.forward(&x, Mode::Train, &mut rng);
        let dropped = y.iter().filter(|&&v| v == 0.0).count() as f64 / 1e6;
        assert!((dropped - 0.5).abs() < 0.01, "drop fraction {dropped}");
        let mean = y.mean().unwrap();
        assert!((mean - 2.0).abs() / 2.0 < 0.02, "mean {mean}");
    }

    #[test]
    fn same_seed_same_mask() {
        let x = Array1::from_elem(100, 1.0);
        let mut d = Dropout::new(0.4).unwrap();
        let a = d.forward(&x, Mode::Train, &mut ChaCha8Rng::seed_from_u64(5));
        let b = d.forward(&x, Mode::Train, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }
}
