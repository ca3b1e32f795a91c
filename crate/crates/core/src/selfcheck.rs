//! Finite-difference self-check over every layer, both losses and the three classifier
//! architectures.
//!
//! Layers are checked through the scalar `Σ y ⊙ R` for a random projection `R`, with
//! respect to both their input and all of their parameters. Architectures are checked
//! end to end through their training loss on a two-record batch: exhaustively on
//! scaled-down networks, and on sampled coordinates at full width. Every coordinate is
//! scored over the step sweep in [`STEP_SWEEP`].

use std::time::Instant;

use ndarray::{Array2, ArrayD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingMatrix, EmbeddingMode};
use crate::error::{Error, Result};
use crate::models::{batch_loss, Architecture, Classifier, ModelConfig};
use crate::seqdata::{Label, Vocabulary, PAD};
use crate::tensornet::gradcheck::{check_parameters_sweep, grad_check_sweep, STEP_SWEEP};
use crate::tensornet::{
    loss, Activation, BatchNorm, BiLstm, CellActivation, Conv1d, Dense, EmbeddingLayer, HasParameters, Lstm,
    LstmCellParams, LossKind, MaxPool1d, Mode, Padding, Parameter,
};

/// Tolerance for individual layers and activations.
pub const LAYER_TOLERANCE: f64 = 1e-5;
/// Tolerance for the two losses.
pub const LOSS_TOLERANCE: f64 = 1e-6;
/// Tolerance for end-to-end architecture checks.
pub const ARCHITECTURE_TOLERANCE: f64 = 1e-4;

/// Component names in report order.
pub const LAYER_COMPONENTS: [&str; 11] = [
    "activations",
    "dense",
    "conv1d",
    "maxpool1d",
    "batchnorm",
    "embedding",
    "lstm",
    "bilstm",
    "binary_ce",
    "categorical_ce",
    "adam",
];

/// Deliberate corruption of one component's analytic gradients, used to confirm the
/// suite detects a broken backward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fault {
    Conv1d,
}

impl std::str::FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conv1d" => Ok(Fault::Conv1d),
            other => Err(Error::InvalidArgument(format!("unknown fault {other:?} (known: conv1d)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    /// Random instances per component.
    pub instances: usize,
    /// Full-width architecture instances (sampled coordinates).
    pub full_size_instances: usize,
    /// Coordinates sampled per tensor at full width.
    pub full_size_samples: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            instances: 20,
            full_size_instances: 2,
            full_size_samples: 8,
            seed: 0,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentResult {
    pub component: String,
    pub instances: usize,
    pub coordinates: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub results: Vec<ComponentResult>,
    pub elapsed_secs: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.component.as_str())
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<16} {:>9} {:>11} {:>13} {:>9}  status\n",
            "component", "instances", "coordinates", "max rel err", "tolerance"
        );
        for r in &self.results {
            let status = match (&r.error, r.passed) {
                (Some(e), _) => format!("ERROR {e}"),
                (None, true) => "ok".to_string(),
                (None, false) => "FAIL".to_string(),
            };
            out.push_str(&format!(
                "{:<16} {:>9} {:>11} {:>13.3e} {:>9.0e}  {status}\n",
                r.component, r.instances, r.coordinates, r.max_rel_error, r.tolerance
            ));
        }
        out
    }
}

fn uniform(shape: &[usize], limit: f64, rng: &mut ChaCha8Rng) -> ArrayD<f64> {
    ArrayD::from_shape_simple_fn(IxDyn(shape), || rng.gen_range(-limit..limit))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn flat<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> Vec<f64> {
    a.iter().copied().collect()
}

fn reshape<S: ndarray::IntoDimension>(v: &[f64], shape: S) -> ndarray::Array<f64, S::Dim> {
    ndarray::Array::from_shape_vec(shape, v.to_vec()).expect("matching length")
}

fn scale_grads<L: HasParameters>(layer: &mut L, factor: f64) {
    if factor != 1.0 {
        for p in layer.parameters_mut() {
            p.grad *= factor;
        }
    }
}

/// Max relative error of the input gradient and every parameter gradient of one
/// layer instance.
fn check_layer<L, F, B>(
    layer: &mut L,
    x: &[f64],
    forward: F,
    backward: B,
    check_input: bool,
    fault: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, usize)>
where
    L: HasParameters,
    F: Fn(&mut L, &[f64]) -> Result<Vec<f64>>,
    B: Fn(&mut L, &[f64]) -> Result<Vec<f64>>,
{
    let y = forward(layer, x)?;
    let r: Vec<f64> = (0..y.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut worst = 0.0f64;
    let mut coords = 0;

    if check_input {
        layer.zero_grad();
        forward(layer, x)?;
        let dx: Vec<f64> = backward(layer, &r)?.into_iter().map(|g| g * fault).collect();
        let mut failure = None;
        let err = grad_check_sweep(x, &dx, &STEP_SWEEP, |xp| match forward(layer, xp) {
            Ok(y) => dot(&y, &r),
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        worst = worst.max(err?);
        coords += x.len();
    }

    let params: usize = layer.parameter_count();
    if params > 0 {
        let err = check_parameters_sweep(layer, &STEP_SWEEP, None, rng, |l, with_backward| {
            let y = forward(l, x)?;
            if with_backward {
                backward(l, &r)?;
                scale_grads(l, fault);
            }
            Ok(dot(&y, &r))
        })?;
        worst = worst.max(err);
        coords += params;
    }
    Ok((worst, coords))
}

fn run_component(
    name: &str,
    tolerance: f64,
    instances: usize,
    seed: u64,
    mut one: impl FnMut(&mut ChaCha8Rng) -> Result<(f64, usize)>,
) -> ComponentResult {
    let mut worst = 0.0f64;
    let mut coords = 0;
    let mut error = None;
    for i in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        match one(&mut rng) {
            Ok((e, c)) => {
                worst = worst.max(e);
                coords += c;
            }
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    ComponentResult {
        component: name.to_string(),
        instances,
        coordinates: coords,
        max_rel_error: worst,
        tolerance,
        passed: error.is_none() && worst < tolerance,
        error,
    }
}

fn activations(rng: &mut ChaCha8Rng) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut coords = 0;
    for act in [
        Activation::Identity,
        Activation::Relu,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Softmax,
    ] {
        let x = uniform(&[3, 5], 2.0, rng);
        let r = uniform(&[3, 5], 1.0, rng);
        let y = act.apply(&x);
        let dx = act.backward(&y, &r);
        let err = grad_check_sweep(&flat(&x), &flat(&dx), &STEP_SWEEP, |xp| {
            dot(&flat(&act.apply(&reshape(xp, x.raw_dim()))), &flat(&r))
        })?;
        worst = worst.max(err);
        coords += x.len();
    }
    Ok((worst, coords))
}

fn dense(rng: &mut ChaCha8Rng) -> Result<(f64, usize)> {
    let (n, i, o) = (rng.gen_range(1..5), rng.gen_range(1..7), rng.gen_range(1..6));
    let act = [Activation::Sigmoid, Activation::Tanh, Activation::Softmax, Activation::Identity][rng.gen_range(0..4)];
    let mut layer = Dense::new("dense", i, o, act, rng);
    layer.bias = Parameter::new("dense.bias", uniform(&[o], 0.5, rng));
    let x = flat(&uniform(&[n, i], 1.0, rng));
    check_layer(
        &mut layer,
        &x,
        |l, x| Ok(flat(&l.forward(&reshape(x, (n, i)))?)),
        |l, dy| Ok(flat(&l.backward(&reshape(dy, (n, o)))?)),
        true,
        1.0,
        rng,
    )
}

fn conv1d(rng: &mut ChaCha8Rng, fault: f64) -> Result<(f64, usize)> {
    let (b, c, f) = (rng.gen_range(1..4), rng.gen_range(1..5), rng.gen_range(1..5));
    let k = rng.gen_range(1..4);
    let t = rng.gen_range(k..k + 6);
    let stride = rng.gen_range(1..3);
    let padding = if rng.gen_bool(0.5) { Padding::Valid } else { Padding::Same };
    let act = if rng.gen_bool(0.5) { Activation::Tanh } else { Activation::Relu };
    let mut layer = Conv1d::new("conv", k, c, f, stride, padding, act, rng);
    layer.bias = Parameter::new("conv.bias", uniform(&[f], 0.5, rng));
    let x = flat(&uniform(&[b, t, c], 1.0, rng));
    let out_t = crate::tensornet::conv_output_len(t, k, stride, padding)?.0;
    check_layer(
        &mut layer,
        &x,
        |l, x| Ok(flat(&l.forward(&reshape(x, (b, t, c)))?)),
        |l, dy| Ok(flat(&l.backward(&reshape(dy, (b, out_t, f)))?)),
        true,
        fault,
        rng,
    )
}

/// Parameter-free wrapper so pooling fits the layer harness.
struct NoParams<T>(T);

impl<T> HasParameters for NoParams<T> {
    fn parameters(&self) -> Vec<&Parameter> {
        Vec::new()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        Vec::new()
    }
}

fn maxpool1d(rng: &mut ChaCha8Rng) -> Result<(f64, usize)> {
    let (b, c) = (rng.gen_range(1..4), rng.gen_range(1..5));
    let pool = rng.gen_range(1..4);
    let t = rng.gen_range(pool..pool + 7);
    let mut layer = NoParams(MaxPool1d::new(pool));
    let x = flat(&uniform(&[b, t, c], 1.0, rng));
    let out_t = t / pool;
    check_layer(
        &mut layer,
        &x,
        |l, x| Ok(flat(&l.0.forward(&reshape(x, (b, t, c)))?)),
        |l, dy| Ok(flat(&l.0.backward(&reshape(dy, (b, out_t, c)))?)),
        true,
        1.0,
        rng,
    )
}

fn batchnorm(rng: &mut ChaCha8Rng) -> Result<(f64, usize)> {
    let (n, f) = (rng.gen_range(2..7), rng.gen_range(1..5));
    let mut layer = BatchNorm::new("bn", f);
    layer.gain = Parameter::new("bn.gain", uniform(&[f], 1.5, rng));
    layer.bias = Parameter::new("bn.bias", uniform(&[f], 0.5, rng));
    let x = flat(&uniform(&[n, f], 2.0, rng));
    check_layer(
        &mut layer,
        &x,
        |l, x| Ok(flat(&l.forward(&reshape(x, (n, f)), Mode::Train)?)),
        |l, dy| Ok(flat(&l.backward(&reshape(dy, (n, f)))?)),
        true,
        1.0,
        rng,
    )
}

fn embedding(rng: &mut ChaCha8Rng) -> Result<(f64, usize)> {
    let (v, d) = (rng.gen_range(3..9), rng.gen_range(1..5));
    let (b, t) = (rng.gen_range(1..4), rng.gen_range(1..6));
    let mut table = uniform(&[v, d], 0.5, rng);
    table.index_axis_mut(ndarray::Axis(0), PAD).fill(0.0);
    let mut layer = EmbeddingLayer::new(Parameter::new("emb", table), true);
    // indices avoid PAD: its row is held fixed by design
    let idx = Array2::from_shape_simple_fn((b, t), || rng.gen_range(1..v));
    check_layer(
        &mut layer,
        &[],
        |l, _| Ok(flat(&l.forward(&idx)?)),
        |l, dy| {
            l.backward(&reshape(dy, (b, t, d)))?;
            Ok(Vec::new())
        },
        false,
        1.0,
        rng,
    )
}

fn random_mask(b: usize, t: usize, rng: &mut ChaCha8Rng) -> Array2<bool> {
    let mut mask = Array2::from_elem((b, t), false);
    for r in 0..b {
        let len = rng.gen_range(1..=t);
        for c in 0..len {
            mask[[r, c]] = true;
        }
    }
    mask
}

fn random_cell(name: &str, input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> LstmCellParams {
    // Unit-scale weights keep hidden states, and so recurrent gradients, well above
    // the roundoff floor of the differences.
    let mut p = LstmCellParams::new(name, input, hidden, rng);
    for q in [&mut p.input_weight, &mut p.recurrent_weight, &mut p.bias] {
        let shape = q.value.shape().to_vec();
        q.value = uniform(&shape, 1.0, rng);
    }
    p
}

fn lstm(rng: &mut ChaCha8Rng) -> Result<(f64, usize)> {
    let (b, t, d, h) = (rng.gen_range(1..4), rng.gen_range(1..6), rng.gen_range(1..5), rng.gen_range(1..5));
    let act = if rng.gen_bool(0.5) { CellActivation::Tanh } else { CellActivation::Relu };
    let reverse = rng.gen_bool(0.5);
    let mut layer = Lstm::new(random_cell("lstm", d, h, rng), act, reverse);
    let mask = random_mask(b, t, rng);
    let x = flat(&uniform(&[b, t, d], 1.0, rng));
    if rng.gen_bool(0.5) {
        check_layer(
            &mut layer,
            &x,
            |l, x| Ok(flat(&l.forward_sequence(&reshape(x, (b, t, d)), &mask)?)),
            |l, dy| Ok(flat(&l.backward_sequence(&reshape(dy, (b, t, h)))?)),
            true,
            1.0,
            rng,
        )
    } else {
        check_layer(
            &mut layer,
            &x,
            |l, x| Ok(flat(&l.forward_last(&reshape(x, (b, t, d)), &mask)?)),
            |l, dy| Ok(flat(&l.backward_last(&reshape(dy, (b, h)))?)),
            true,
            1.0,
            rng,
        )
    }
}

fn bilstm(rng: &mut ChaCha8Rng) -> Result<(f64, usize)> {
    let (b, t, d, h) = (rng.gen_range(1..4), rng.gen_range(1..6), rng.gen_range(1..5), rng.gen_range(1..4));
    let act = if rng.gen_bool(0.5) { CellActivation::Tanh } else { CellActivation::Relu };
    let f = random_cell("bi.fwd", d, h, rng);
    let r = random_cell("bi.bwd", d, h, rng);
    let mut layer = BiLstm::new(f, r, act)?;
    let mask = random_mask(b, t, rng);
    let x = flat(&uniform(&[b, t, d], 1.0, rng));
    if rng.gen_bool(0.5) {
        check_layer(
            &mut layer,
            &x,
            |l, x| Ok(flat(&l.forward_sequence(&reshape(x, (b, t, d)), &mask)?)),
            |l, dy| Ok(flat(&l.backward_sequence(&reshape(dy, (b, t, 2 * h)))?)),
            true,
            1.0,
            rng,
        )
    } else {
        check_layer(
            &mut layer,
            &x,
            |l, x| Ok(flat(&l.forward_last(&reshape(x, (b, t, d)), &mask)?)),
            |l, dy| Ok(flat(&l.backward_last(&reshape(dy, (b, 2 * h)))?)),
            true,
            1.0,
            rng,
        )
    }
}

fn loss_check(kind: LossKind, rng: &mut ChaCha8Rng) -> Result<(f64, usize)> {
    let (n, k) = match kind {
        LossKind::BinaryCe => (rng.gen_range(1..8), rng.gen_range(1..3)),
        LossKind::CategoricalCe => (rng.gen_range(1..8), rng.gen_range(2..5)),
    };
    let pred = Array2::from_shape_simple_fn((n, k), || rng.gen_range(0.05..0.95));
    let target = match kind {
        LossKind::BinaryCe => Array2::from_shape_simple_fn((n, k), || rng.gen_range(0..2) as f64),
        LossKind::CategoricalCe => {
            let mut t = Array2::zeros((n, k));
            for r in 0..n {
                t[[r, rng.gen_range(0..k)]] = 1.0;
            }
            t
        }
    };
    let (_, grad) = loss(&pred, &target, kind)?;
    let err = grad_check_sweep(&flat(&pred), &flat(&grad), &STEP_SWEEP, |p| {
        loss(&reshape(p, (n, k)), &target, kind).map_or(f64::NAN, |(l, _)| l)
    })?;
    Ok((err, pred.len()))
}

/// One Adam step against the closed-form update on random moments.
fn adam(rng: &mut ChaCha8Rng) -> Result<(f64, usize)> {
    use crate::tensornet::{AdamConfig, AdamState};
    let n = rng.gen_range(1..6);
    let cfg = AdamConfig::default();
    let mut state = AdamState::new(cfg);
    let mut p = Parameter::new("theta", uniform(&[n], 1.0, rng));
    let start = p.value.clone();
    let grads: Vec<ArrayD<f64>> = (0..3).map(|_| uniform(&[n], 1.0, rng)).collect();
    for g in &grads {
        p.grad.assign(g);
        state.step(&mut [&mut p])?;
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        let (mut m, mut v, mut theta) = (0.0, 0.0, start[i]);
        for (t, g) in grads.iter().enumerate() {
            let g = g[i];
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            let mh = m / (1.0 - cfg.beta1.powi(t as i32 + 1));
            let vh = v / (1.0 - cfg.beta2.powi(t as i32 + 1));
            theta -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
        }
        worst = worst.max(crate::tensornet::relative_error(p.value[i] - start[i], theta - start[i]));
    }
    Ok((worst, n))
}

/// A classifier over a random vocabulary of `vocab` tokens.
fn random_classifier(config: &ModelConfig, vocab: usize, dim: usize, max_len: usize, rng: &mut ChaCha8Rng) -> Result<Classifier> {
    let vocabulary = Vocabulary::from_tokens((0..vocab).map(|i| (format!("t{i}"), 1)), 1);
    let mut table = uniform(&[vocabulary.len(), dim], 1.0, rng)
        .into_dimensionality::<ndarray::Ix2>()
        .expect("2-D");
    table.row_mut(PAD).fill(0.0);
    let source = EmbeddingMatrix {
        input: table.clone(),
        output: Array2::zeros(table.raw_dim()),
        vocab: vocabulary.clone(),
        mode: EmbeddingMode::SkipGram,
        minn: 0,
        maxn: 0,
        epoch_loss: Vec::new(),
    };
    Classifier::new(config, vocabulary, table, &source, max_len)
}

fn architecture_instance(
    arch: Architecture,
    full_size: bool,
    samples: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, usize)> {
    let base = ModelConfig::for_architecture(arch);
    let (config, dim, t) = if full_size {
        (ModelConfig { seed: rng.gen(), ..base }, 16, 8)
    } else {
        (
            ModelConfig {
                seed: rng.gen(),
                cnn_filters: 4,
                lstm_units: 3,
                bilstm_units: vec![3, 2, 2],
                ..base
            },
            3,
            5,
        )
    };
    let vocab = 6;
    let mut model = random_classifier(&config, vocab, dim, t, rng)?;
    // Initial weights leave deep-layer gradients near 1e-8, where central differences
    // are dominated by roundoff, so the check runs at a random point of larger scale.
    for p in model.network_parameters_mut() {
        let shape = p.value.shape().to_vec();
        p.value = uniform(&shape, 0.8, rng);
    }
    // The CNN sees PAD vectors as ordinary inputs, so its batch is unpadded.
    let mut indices = Array2::from_shape_simple_fn((2, t), || rng.gen_range(2..vocab + 2));
    if arch != Architecture::Cnn {
        for r in 0..2 {
            let len = rng.gen_range(1..=t);
            for c in len..t {
                indices[[r, c]] = PAD;
            }
        }
    }
    let labels = [Label::Positive, Label::Negative];
    let kind = model.head.default_loss();
    let mut dummy = ChaCha8Rng::seed_from_u64(0);
    let coords = match samples {
        Some(s) => model.parameters().iter().map(|p| p.len().min(s)).sum(),
        None => model.parameter_count(),
    };
    let err = check_parameters_sweep(&mut model, &STEP_SWEEP, samples, rng, |m, with_backward| {
        batch_loss(m, &indices, &labels, kind, Mode::Infer, with_backward, &mut dummy)
    })?;
    Ok((err, coords))
}

fn architecture_component(arch: Architecture, opts: &SuiteOptions) -> ComponentResult {
    let small = run_component(arch.as_str(), ARCHITECTURE_TOLERANCE, opts.instances, opts.seed, |rng| {
        architecture_instance(arch, false, None, rng)
    });
    let full = run_component(
        arch.as_str(),
        ARCHITECTURE_TOLERANCE,
        opts.full_size_instances,
        opts.seed ^ 0xf011,
        |rng| architecture_instance(arch, true, Some(opts.full_size_samples), rng),
    );
    let error = small.error.or(full.error);
    let worst = small.max_rel_error.max(full.max_rel_error);
    ComponentResult {
        component: arch.as_str().to_string(),
        instances: small.instances + full.instances,
        coordinates: small.coordinates + full.coordinates,
        max_rel_error: worst,
        tolerance: ARCHITECTURE_TOLERANCE,
        passed: error.is_none() && worst < ARCHITECTURE_TOLERANCE,
        error,
    }
}

/// Runs every component and reports each exactly once.
pub fn run_suite(opts: &SuiteOptions) -> SuiteReport {
    let start = Instant::now();
    let n = opts.instances;
    let seed = opts.seed;
    let conv_fault = if opts.fault == Some(Fault::Conv1d) { 1.01 } else { 1.0 };
    let mut results = vec![
        run_component("activations", LAYER_TOLERANCE, n, seed, activations),
        run_component("dense", LAYER_TOLERANCE, n, seed, dense),
        run_component("conv1d", LAYER_TOLERANCE, n, seed, |rng| conv1d(rng, conv_fault)),
        run_component("maxpool1d", LAYER_TOLERANCE, n, seed, maxpool1d),
        run_component("batchnorm", LAYER_TOLERANCE, n, seed, batchnorm),
        run_component("embedding", LAYER_TOLERANCE, n, seed, embedding),
        run_component("lstm", LAYER_TOLERANCE, n, seed, lstm),
        run_component("bilstm", LAYER_TOLERANCE, n, seed, bilstm),
        run_component("binary_ce", LOSS_TOLERANCE, n, seed, |rng| loss_check(LossKind::BinaryCe, rng)),
        run_component("categorical_ce", LOSS_TOLERANCE, n, seed, |rng| {
            loss_check(LossKind::CategoricalCe, rng)
        }),
        run_component("adam", LAYER_TOLERANCE, n, seed, adam),
    ];
    for arch in Architecture::ALL {
        let mut r = architecture_component(arch, opts);
        r.component = format!("arch:{}", arch.as_str());
        results.push(r);
    }
    SuiteReport {
        results,
        elapsed_secs: start.elapsed().as_secs_f64(),
    }
}
