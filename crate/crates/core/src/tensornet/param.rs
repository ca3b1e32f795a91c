use ndarray::{ArrayD, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, IxDyn, Ix1, Ix2};
use rand::Rng;

/// A trainable tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: ArrayD<f64>,
    pub grad: ArrayD<f64>,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: ArrayD<f64>) -> Self {
        let grad = ArrayD::zeros(value.raw_dim());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        Self::new(name, ArrayD::zeros(IxDyn(shape)))
    }

    /// Glorot/Xavier uniform initialization with the given fan sizes.
    pub fn glorot<R: Rng>(
        name: impl Into<String>,
        shape: &[usize],
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Self::uniform(name, shape, limit, rng)
    }

    pub fn uniform<R: Rng>(name: impl Into<String>, shape: &[usize], limit: f64, rng: &mut R) -> Self {
        let value = ArrayD::from_shape_simple_fn(IxDyn(shape), || rng.gen_range(-limit..=limit));
        Self::new(name, value)
    }

    pub fn shape(&self) -> &[usize] {
        self.value.shape()
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn mat(&self) -> ArrayView2<'_, f64> {
        self.value.view().into_dimensionality::<Ix2>().expect("2-D parameter")
    }

    pub fn vec(&self) -> ArrayView1<'_, f64> {
        self.value.view().into_dimensionality::<Ix1>().expect("1-D parameter")
    }

    pub fn grad_mat_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.grad
            .view_mut()
            .into_dimensionality::<Ix2>()
            .expect("2-D parameter")
    }

    pub fn grad_vec_mut(&mut self) -> ArrayViewMut1<'_, f64> {
        self.grad
            .view_mut()
            .into_dimensionality::<Ix1>()
            .expect("1-D parameter")
    }
}

/// Anything that owns trainable parameters.
pub trait HasParameters {
    fn parameters(&self) -> Vec<&Parameter>;
    fn parameters_mut(&mut self) -> Vec<&mut Parameter>;

    fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }
}
