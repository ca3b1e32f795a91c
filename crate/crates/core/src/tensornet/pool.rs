use ndarray::Array3;

use crate::error::{Error, Result};

/// Non-overlapping max pooling over the time axis of `[batch, time, channels]`.
/// A trailing window shorter than `pool` is dropped.
#[derive(Debug, Clone)]
pub struct MaxPool1d {
    pub pool: usize,
    argmax: Option<Array3<usize>>,
    input_dims: (usize, usize, usize),
}

impl MaxPool1d {
    pub fn new(pool: usize) -> Self {
        Self {
            pool,
            argmax: None,
            input_dims: (0, 0, 0),
        }
    }

    pub fn forward(&mut self, x: &Array3<f64>) -> Result<Array3<f64>> {
        let (batch, time, channels) = x.dim();
        if self.pool == 0 {
            return Err(Error::InvalidArgument("pool size must be at least 1".into()));
        }
        if self.pool > time {
            return Err(Error::Shape(format!(
                "pool size {} exceeds input length {time}",
                self.pool
            )));
        }
        let out_len = time / self.pool;
        let mut out = Array3::<f64>::zeros((batch, out_len, channels));
        let mut argmax = Array3::<usize>::zeros((batch, out_len, channels));
        for b in 0..batch {
            for w in 0..out_len {
                let start = w * self.pool;
                for c in 0..channels {
                    let mut best = start;
                    for t in start + 1..start + self.pool {
                        // strict comparison keeps the first maximum
                        if x[[b, t, c]] > x[[b, best, c]] {
                            best = t;
                        }
                    }
                    out[[b, w, c]] = x[[b, best, c]];
                    argmax[[b, w, c]] = best;
                }
            }
        }
        self.argmax = Some(argmax);
        self.input_dims = (batch, time, channels);
        Ok(out)
    }

    pub fn backward(&mut self, dy: &Array3<f64>) -> Result<Array3<f64>> {
        let argmax = self
            .argmax
            .as_ref()
            .ok_or_else(|| Error::Shape("maxpool backward before forward".into()))?;
        if dy.dim() != argmax.dim() {
            return Err(Error::Shape(format!(
                "maxpool output gradient {:?} vs output {:?}",
                dy.shape(),
                argmax.shape()
            )));
        }
        let mut dx = Array3::<f64>::zeros(self.input_dims);
        for ((b, w, c), &t) in argmax.indexed_iter() {
            dx[[b, t, c]] += dy[[b, w, c]];
        }
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> Array3<f64> {
        Array3::from_shape_vec((1, v.len(), 1), v.to_vec()).unwrap()
    }

    #[test]
    fn max_of_windows() {
        let mut p = MaxPool1d::new(2);
        let y = p.forward(&seq(&[1.0, 3.0, 2.0, 5.0])).unwrap();
        assert_eq!(y.into_raw_vec_and_offset().0, vec![3.0, 5.0]);
    }

    #[test]
    fn trailing_window_dropped() {
        let mut p = MaxPool1d::new(2);
        let y = p.forward(&seq(&[1.0, 3.0, 9.0])).unwrap();
        assert_eq!(y.into_raw_vec_and_offset().0, vec![3.0]);
    }

    #[test]
    fn pool_one_is_identity() {
        let mut p = MaxPool1d::new(1);
        let x = seq(&[4.0, -1.0, 2.5]);
        assert_eq!(p.forward(&x).unwrap(), x);
        let g = seq(&[0.1, 0.2, 0.3]);
        assert_eq!(p.backward(&g).unwrap(), g);
    }

    #[test]
    fn ties_route_to_first() {
        let mut p = MaxPool1d::new(2);
        p.forward(&seq(&[2.0, 2.0])).unwrap();
        let dx = p.backward(&seq(&[1.0])).unwrap();
        assert_eq!(dx.into_raw_vec_and_offset().0, vec![1.0, 0.0]);
    }

    #[test]
    fn pool_longer_than_input_errors() {
        assert!(MaxPool1d::new(5).forward(&seq(&[1.0, 2.0])).is_err());
        assert!(MaxPool1d::new(0).forward(&seq(&[1.0, 2.0])).is_err());
    }
}
