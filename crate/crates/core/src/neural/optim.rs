//! SGD, Adam with bias correction, and global-norm gradient clipping.

use super::params::{FloatT, Gradients, ParamSet};
use super::ModelError;

/// `p <- p - lr * g`, elementwise across every array.
pub fn sgd_step<F: FloatT>(
    params: &mut ParamSet<F>,
    grads: &Gradients<F>,
    lr: F,
) -> Result<(), ModelError> {
    params.add_scaled(grads, -lr)
}

#[derive(Clone, Debug)]
pub struct AdamState<F> {
    first: ParamSet<F>,
    second: ParamSet<F>,
    step: u64,
    pub beta1: F,
    pub beta2: F,
    pub epsilon: F,
}

impl<F: FloatT> AdamState<F> {
    /// Zeroed moments shaped like the given parameters.
    pub fn new(params: &ParamSet<F>) -> AdamState<F> {
        AdamState {
            first: params.zeros_like(),
            second: params.zeros_like(),
            step: 0,
            beta1: F::from_f64c(0.9),
            beta2: F::from_f64c(0.999),
            epsilon: F::from_f64c(1e-8),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update with bias correction.
pub fn adam_step<F: FloatT>(
    state: &mut AdamState<F>,
    params: &mut ParamSet<F>,
    grads: &Gradients<F>,
    lr: F,
) -> Result<(), ModelError> {
    params.check_congruent(grads)?;
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let corr1 = F::one() - b1.powi(t);
    let corr2 = F::one() - b2.powi(t);
    let one = F::one();

    let gviews = grads.named_arrays();
    let mut mviews = state.first.arrays_mut();
    let mut vviews = state.second.arrays_mut();
    for ((mut p, (m, v)), (_, g)) in params
        .arrays_mut()
        .into_iter()
        .zip(mviews.iter_mut().zip(vviews.iter_mut()))
        .zip(gviews)
    {
        ndarray::Zip::from(&mut p)
            .and(m)
            .and(v)
            .and(&g)
            .for_each(|p, m, v, &g| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / corr1;
                let v_hat = *v / corr2;
                *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
            });
    }
    Ok(())
}

/// Global L2 norm over every gradient array, accumulated in f64.
pub fn global_norm<F: FloatT>(grads: &Gradients<F>) -> f64 {
    let mut total = 0.0f64;
    for (_, a) in grads.named_arrays() {
        for &v in a.iter() {
            let v = v.to_f64().unwrap_or(f64::NAN);
            total += v * v;
        }
    }
    total.sqrt()
}

/// Scales the gradients down to `max_norm` when they exceed it. Returns the
/// pre-clip norm and whether clipping fired.
pub fn clip_global_norm<F: FloatT>(grads: &mut Gradients<F>, max_norm: f64) -> (f64, bool) {
    let norm = global_norm(grads);
    if norm.is_finite() && norm > max_norm {
        grads.scale(F::from_f64c(max_norm / norm));
        (norm, true)
    } else {
        (norm, false)
    }
}
