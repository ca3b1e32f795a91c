use rand::seq::index::sample;
use rand::Rng;

use super::HasParameters;
use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn central_difference<F: FnMut(&[f64]) -> f64>(x: &mut [f64], i: usize, eps: f64, f: &mut F) -> Result<f64> {
    let orig = x[i];
    x[i] = orig + eps;
    let plus = f(x);
    x[i] = orig - eps;
    let minus = f(x);
    x[i] = orig;
    if !plus.is_finite() || !minus.is_finite() {
        return Err(Error::NonFinite(format!("function value at coordinate {i}")));
    }
    Ok((plus - minus) / (2.0 * eps))
}

/// Step sizes for [`grad_check_sweep`] and [`check_parameters_sweep`].
pub const STEP_SWEEP: [f64; 4] = [1e-6, 1e-5, 1e-4, 1e-3];

/// Maximum relative error between `analytic` and central differences of `f` at `x`.
pub fn grad_check<F: FnMut(&[f64]) -> f64>(x: &[f64], analytic: &[f64], eps: f64, f: F) -> Result<f64> {
    grad_check_sweep(x, analytic, &[eps], f)
}

/// As [`grad_check`] over a subset of coordinates.
pub fn grad_check_coords<F: FnMut(&[f64]) -> f64>(
    x: &[f64],
    analytic: &[f64],
    coords: &[usize],
    eps: f64,
    f: F,
) -> Result<f64> {
    sweep_coords(x, analytic, coords, &[eps], f)
}

/// Each coordinate scores the smallest relative error over `steps`; the result is the
/// worst coordinate. Small steps lose precision to roundoff where the gradient is tiny,
/// large steps can straddle a ReLU or max-pool kink, but a wrong derivative disagrees
/// at every step.
pub fn grad_check_sweep<F: FnMut(&[f64]) -> f64>(x: &[f64], analytic: &[f64], steps: &[f64], f: F) -> Result<f64> {
    let coords: Vec<usize> = (0..x.len()).collect();
    sweep_coords(x, analytic, &coords, steps, f)
}

fn sweep_coords<F: FnMut(&[f64]) -> f64>(
    x: &[f64],
    analytic: &[f64],
    coords: &[usize],
    steps: &[f64],
    mut f: F,
) -> Result<f64> {
    if x.len() != analytic.len() {
        return Err(Error::Shape(format!(
            "{} inputs vs {} analytic gradients",
            x.len(),
            analytic.len()
        )));
    }
    let mut point = x.to_vec();
    let mut worst = 0.0f64;
    for &i in coords {
        if !analytic[i].is_finite() {
            return Err(Error::NonFinite(format!("analytic gradient at coordinate {i}")));
        }
        let mut best = f64::INFINITY;
        for &eps in steps {
            let numeric = central_difference(&mut point, i, eps, &mut f)?;
            best = best.min(relative_error(analytic[i], numeric));
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

/// Checks the gradients a model accumulates for its own parameters.
///
/// `loss` evaluates the model; when its flag is true it must also run the backward
/// pass so parameter gradients are populated. `sample_per_param` limits the number of
/// checked coordinates per tensor (all coordinates when `None`).
pub fn check_parameters<M, R, F>(
    model: &mut M,
    eps: f64,
    sample_per_param: Option<usize>,
    rng: &mut R,
    loss: F,
) -> Result<f64>
where
    M: HasParameters,
    R: Rng,
    F: FnMut(&mut M, bool) -> Result<f64>,
{
    check_parameters_sweep(model, &[eps], sample_per_param, rng, loss)
}

/// As [`check_parameters`], scoring each coordinate as in [`grad_check_sweep`].
pub fn check_parameters_sweep<M, R, F>(
    model: &mut M,
    steps: &[f64],
    sample_per_param: Option<usize>,
    rng: &mut R,
    mut loss: F,
) -> Result<f64>
where
    M: HasParameters,
    R: Rng,
    F: FnMut(&mut M, bool) -> Result<f64>,
{
    model.zero_grad();
    loss(model, true)?;
    let analytic: Vec<Vec<f64>> = model
        .parameters()
        .iter()
        .map(|p| p.grad.iter().copied().collect())
        .collect();

    let mut worst = 0.0f64;
    for (pi, grads) in analytic.iter().enumerate() {
        let coords: Vec<usize> = match sample_per_param {
            Some(n) if n < grads.len() => sample(rng, grads.len(), n).into_vec(),
            _ => (0..grads.len()).collect(),
        };
        for ci in coords {
            let orig = model.parameters()[pi].value.as_slice().expect("contiguous")[ci];
            let mut eval_at = |model: &mut M, v: f64| -> Result<f64> {
                model.parameters_mut()[pi].value.as_slice_mut().expect("contiguous")[ci] = v;
                loss(model, false)
            };
            let mut best = f64::INFINITY;
            for &eps in steps {
                let plus = eval_at(model, orig + eps)?;
                let minus = eval_at(model, orig - eps)?;
                if !plus.is_finite() || !minus.is_finite() || !grads[ci].is_finite() {
                    eval_at(model, orig)?;
                    return Err(Error::NonFinite(format!(
                        "parameter {} coordinate {ci}",
                        model.parameters()[pi].name
                    )));
                }
                best = best.min(relative_error(grads[ci], (plus - minus) / (2.0 * eps)));
            }
            eval_at(model, orig)?;
            worst = worst.max(best);
        }
    }
    model.zero_grad();
    Ok(worst)
}
