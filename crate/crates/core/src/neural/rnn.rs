//! Forward pass, masked next-token cross-entropy, and exact gradients via
//! backpropagation through time for the stacked LSTM/GRU language model.
//!
//! The input-side projections of a whole sequence are computed as one
//! `[batch*time, dim]` matrix product per layer; only the recurrent terms
//! run step by step.

use super::batch::Batch;
use super::params::{FloatT, Gradients, LayerParams, ParamSet};
use super::ModelError;
use crate::vocab::PAD;
use ndarray::{s, Array1, Array2, Array3, Axis};

/// Activations retained by the forward pass for the backward pass.
pub struct ForwardCache<F> {
    /// Softmax outputs, `[batch, time, vocab]`.
    pub probs: Array3<F>,
    embedded: Array3<F>,
    layers: Vec<LayerStates<F>>,
}

enum LayerStates<F> {
    Lstm {
        i: Array3<F>,
        f: Array3<F>,
        g: Array3<F>,
        o: Array3<F>,
        c: Array3<F>,
        tanh_c: Array3<F>,
        h: Array3<F>,
    },
    Gru {
        z: Array3<F>,
        r: Array3<F>,
        n: Array3<F>,
        /// Candidate's hidden-side preactivation `h_prev . w_h + b_h`,
        /// needed for the reset-gate gradient.
        nh: Array3<F>,
        h: Array3<F>,
    },
}

impl<F> LayerStates<F> {
    fn hidden(&self) -> &Array3<F> {
        match self {
            LayerStates::Lstm { h, .. } | LayerStates::Gru { h, .. } => h,
        }
    }
}

fn sigmoid<F: FloatT>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

impl<F: FloatT> ParamSet<F> {
    fn validate_batch(&self, batch: &Batch) -> Result<(), ModelError> {
        if let Some(&bad) = batch.tokens.iter().find(|&&t| t >= self.arch.vocab_size) {
            return Err(ModelError::ShapeMismatch(format!(
                "token id {bad} outside vocab of {}",
                self.arch.vocab_size
            )));
        }
        Ok(())
    }

    /// Runs the network over a framed batch. Returns per-position
    /// distributions over the vocabulary plus the activation cache.
    pub fn forward(&self, batch: &Batch) -> Result<ForwardCache<F>, ModelError> {
        self.validate_batch(batch)?;
        let (bsz, steps) = batch.tokens.dim();
        let hidden = self.arch.hidden_dim;

        let mut embedded = Array3::<F>::zeros((bsz, steps, self.arch.embed_dim));
        for b in 0..bsz {
            for t in 0..steps {
                embedded
                    .slice_mut(s![b, t, ..])
                    .assign(&self.embedding.row(batch.tokens[[b, t]]));
            }
        }

        let mut layers = Vec::with_capacity(self.layers.len());
        let mut input = embedded.clone();
        for layer in &self.layers {
            let states = match layer {
                LayerParams::Lstm { w_x, w_h, b } => {
                    run_lstm(&input, w_x, w_h, b, hidden)
                }
                LayerParams::Gru { w_x, w_h, b_x, b_h } => {
                    run_gru(&input, w_x, w_h, b_x, b_h, hidden)
                }
            };
            input = states.hidden().clone();
            layers.push(states);
        }

        // output projection + softmax
        let top = layers.last().unwrap().hidden();
        let flat = top.to_shape((bsz * steps, hidden)).unwrap();
        let mut logits = flat.dot(&self.w_out);
        logits += &self.b_out;
        let mut probs = logits
            .into_shape_with_order((bsz, steps, self.arch.vocab_size))
            .unwrap();
        for mut row in probs.lanes_mut(Axis(2)) {
            let max = row.iter().cloned().fold(F::neg_infinity(), F::max);
            row.mapv_inplace(|v| (v - max).exp());
            let sum = row.sum();
            row.mapv_inplace(|v| v / sum);
        }

        Ok(ForwardCache {
            probs,
            embedded,
            layers,
        })
    }

    /// Mean next-token cross-entropy over non-PAD target positions.
    pub fn loss(&self, batch: &Batch) -> Result<F, ModelError> {
        let cache = self.forward(batch)?;
        loss_from_cache(&cache, batch)
    }

    /// Exact gradient of [`loss`] with respect to every parameter array.
    pub fn backward(&self, batch: &Batch, cache: &ForwardCache<F>) -> Result<Gradients<F>, ModelError> {
        let (bsz, steps) = batch.tokens.dim();
        let hidden = self.arch.hidden_dim;
        let vocab = self.arch.vocab_size;
        let n_targets = count_targets(batch);
        if n_targets == 0 {
            return Err(ModelError::ShapeMismatch(
                "batch has no unmasked target positions".into(),
            ));
        }

        let mut grads = self.zeros_like();
        let inv_n = F::one() / F::from_f64c(n_targets as f64);

        // d loss / d logits = (softmax - onehot(target)) / n on unmasked
        // positions, zero on PAD targets
        let mut dlogits = cache.probs.clone();
        for b in 0..bsz {
            for t in 0..steps {
                let target = batch.target(b, t);
                let mut row = dlogits.slice_mut(s![b, t, ..]);
                if target == PAD.id() {
                    row.fill(F::zero());
                } else {
                    row[target] = row[target] - F::one();
                    row.mapv_inplace(|v| v * inv_n);
                }
            }
        }

        let top = cache.layers.last().unwrap().hidden();
        let top_flat = top.to_shape((bsz * steps, hidden)).unwrap();
        let dlogits_flat = dlogits.to_shape((bsz * steps, vocab)).unwrap();
        grads.w_out = top_flat.t().dot(&dlogits_flat);
        grads.b_out = dlogits_flat.sum_axis(Axis(0));
        let dh_top = dlogits_flat
            .dot(&self.w_out.t())
            .into_shape_with_order((bsz, steps, hidden))
            .unwrap();

        // walk layers top-down; each produces the gradient stream for the
        // layer below
        let mut dh_stream = dh_top;
        for l in (0..self.layers.len()).rev() {
            let input = if l == 0 {
                &cache.embedded
            } else {
                cache.layers[l - 1].hidden()
            };
            let (dx, dgrads) = match (&self.layers[l], &cache.layers[l]) {
                (LayerParams::Lstm { w_x, w_h, .. }, states @ LayerStates::Lstm { .. }) => {
                    bptt_lstm(input, states, w_x, w_h, &dh_stream)
                }
                (LayerParams::Gru { w_x, w_h, .. }, states @ LayerStates::Gru { .. }) => {
                    bptt_gru(input, states, w_x, w_h, &dh_stream)
                }
                _ => unreachable!("cache/params cell mismatch"),
            };
            grads.layers[l] = dgrads;
            dh_stream = dx;
        }

        // scatter the embedding gradient by token id
        for b in 0..bsz {
            for t in 0..steps {
                let token = batch.tokens[[b, t]];
                let dx = dh_stream.slice(s![b, t, ..]);
                let mut row = grads.embedding.row_mut(token);
                row.zip_mut_with(&dx, |acc, &v| *acc = *acc + v);
            }
        }

        Ok(grads)
    }

    /// Forward + loss + backward in one call.
    pub fn loss_and_grad(&self, batch: &Batch) -> Result<(F, Gradients<F>), ModelError> {
        let cache = self.forward(batch)?;
        let loss = loss_from_cache(&cache, batch)?;
        let grads = self.backward(batch, &cache)?;
        Ok((loss, grads))
    }
}

fn count_targets(batch: &Batch) -> usize {
    let (bsz, steps) = batch.tokens.dim();
    (0..bsz)
        .map(|b| (0..steps).filter(|&t| batch.target(b, t) != PAD.id()).count())
        .sum()
}

/// Loss from an existing forward cache.
pub fn loss_from_cache<F: FloatT>(cache: &ForwardCache<F>, batch: &Batch) -> Result<F, ModelError> {
    let (bsz, steps) = batch.tokens.dim();
    let n = count_targets(batch);
    if n == 0 {
        return Err(ModelError::ShapeMismatch(
            "batch has no unmasked target positions".into(),
        ));
    }
    let mut total = F::zero();
    for b in 0..bsz {
        for t in 0..steps {
            let target = batch.target(b, t);
            if target != PAD.id() {
                total = total - cache.probs[[b, t, target]].ln();
            }
        }
    }
    let loss = total / F::from_f64c(n as f64);
    if !loss.is_finite() {
        return Err(ModelError::NonFiniteLoss("cross-entropy".into()));
    }
    Ok(loss)
}

/// Gate order i|f|g|o. `pre = x.w_x + h.w_h + b`.
fn run_lstm<F: FloatT>(
    input: &Array3<F>,
    w_x: &Array2<F>,
    w_h: &Array2<F>,
    b: &Array1<F>,
    hidden: usize,
) -> LayerStates<F> {
    let (bsz, steps, in_dim) = input.dim();
    let width = 4 * hidden;
    let flat = input.to_shape((bsz * steps, in_dim)).unwrap();
    let mut pre_x = flat.dot(w_x);
    pre_x += b;
    let pre_x = pre_x.into_shape_with_order((bsz, steps, width)).unwrap();

    let zeros3 = || Array3::<F>::zeros((bsz, steps, hidden));
    let (mut i_s, mut f_s, mut g_s, mut o_s) = (zeros3(), zeros3(), zeros3(), zeros3());
    let (mut c_s, mut tanh_s, mut h_s) = (zeros3(), zeros3(), zeros3());

    let mut h = Array2::<F>::zeros((bsz, hidden));
    let mut c = Array2::<F>::zeros((bsz, hidden));
    for t in 0..steps {
        let mut pre = pre_x.slice(s![.., t, ..]).to_owned();
        pre += &h.dot(w_h);
        let i = pre.slice(s![.., 0..hidden]).mapv(sigmoid);
        let f = pre.slice(s![.., hidden..2 * hidden]).mapv(sigmoid);
        let g = pre.slice(s![.., 2 * hidden..3 * hidden]).mapv(F::tanh);
        let o = pre.slice(s![.., 3 * hidden..4 * hidden]).mapv(sigmoid);
        c = &f * &c + &i * &g;
        let tanh_c = c.mapv(F::tanh);
        h = &o * &tanh_c;

        i_s.slice_mut(s![.., t, ..]).assign(&i);
        f_s.slice_mut(s![.., t, ..]).assign(&f);
        g_s.slice_mut(s![.., t, ..]).assign(&g);
        o_s.slice_mut(s![.., t, ..]).assign(&o);
        c_s.slice_mut(s![.., t, ..]).assign(&c);
        tanh_s.slice_mut(s![.., t, ..]).assign(&tanh_c);
        h_s.slice_mut(s![.., t, ..]).assign(&h);
    }
    LayerStates::Lstm {
        i: i_s,
        f: f_s,
        g: g_s,
        o: o_s,
        c: c_s,
        tanh_c: tanh_s,
        h: h_s,
    }
}

/// Gate order z|r|n (update, reset, candidate):
/// `z = sig(xz + hz)`, `r = sig(xr + hr)`, `n = tanh(xn + r*hn)`,
/// `h' = (1-z)*n + z*h`, where `x* = x.w_x + b_x`, `h* = h.w_h + b_h`.
fn run_gru<F: FloatT>(
    input: &Array3<F>,
    w_x: &Array2<F>,
    w_h: &Array2<F>,
    b_x: &Array1<F>,
    b_h: &Array1<F>,
    hidden: usize,
) -> LayerStates<F> {
    let (bsz, steps, in_dim) = input.dim();
    let width = 3 * hidden;
    let flat = input.to_shape((bsz * steps, in_dim)).unwrap();
    let mut pre_x = flat.dot(w_x);
    pre_x += b_x;
    let pre_x = pre_x.into_shape_with_order((bsz, steps, width)).unwrap();

    let zeros3 = || Array3::<F>::zeros((bsz, steps, hidden));
    let (mut z_s, mut r_s, mut n_s, mut nh_s, mut h_s) =
        (zeros3(), zeros3(), zeros3(), zeros3(), zeros3());

    let mut h = Array2::<F>::zeros((bsz, hidden));
    for t in 0..steps {
        let mut pre_h = h.dot(w_h);
        pre_h += b_h;
        let xz = pre_x.slice(s![.., t, 0..hidden]);
        let xr = pre_x.slice(s![.., t, hidden..2 * hidden]);
        let xn = pre_x.slice(s![.., t, 2 * hidden..3 * hidden]);
        let hz = pre_h.slice(s![.., 0..hidden]);
        let hr = pre_h.slice(s![.., hidden..2 * hidden]);
        let hn = pre_h.slice(s![.., 2 * hidden..3 * hidden]).to_owned();

        let z = (&xz + &hz).mapv(sigmoid);
        let r = (&xr + &hr).mapv(sigmoid);
        let n = (&xn + &(&r * &hn)).mapv(F::tanh);
        h = (&n - &(&n * &z)) + &(&z * &h);

        z_s.slice_mut(s![.., t, ..]).assign(&z);
        r_s.slice_mut(s![.., t, ..]).assign(&r);
        n_s.slice_mut(s![.., t, ..]).assign(&n);
        nh_s.slice_mut(s![.., t, ..]).assign(&hn);
        h_s.slice_mut(s![.., t, ..]).assign(&h);
    }
    LayerStates::Gru {
        z: z_s,
        r: r_s,
        n: n_s,
        nh: nh_s,
        h: h_s,
    }
}

/// Hidden states shifted one step right (h_{t-1}), zeros at t=0.
fn shifted_hidden<F: FloatT>(h: &Array3<F>) -> Array3<F> {
    let (bsz, steps, hidden) = h.dim();
    let mut prev = Array3::<F>::zeros((bsz, steps, hidden));
    if steps > 1 {
        prev.slice_mut(s![.., 1.., ..])
            .assign(&h.slice(s![.., ..steps - 1, ..]));
    }
    prev
}

fn bptt_lstm<F: FloatT>(
    input: &Array3<F>,
    states: &LayerStates<F>,
    w_x: &Array2<F>,
    w_h: &Array2<F>,
    dh_stream: &Array3<F>,
) -> (Array3<F>, LayerParams<F>) {
    let LayerStates::Lstm {
        i,
        f,
        g,
        o,
        c,
        tanh_c,
        h,
    } = states
    else {
        unreachable!()
    };
    let (bsz, steps, in_dim) = input.dim();
    let hidden = i.dim().2;
    let one = F::one();

    let mut dpre = Array3::<F>::zeros((bsz, steps, 4 * hidden));
    let mut dh_next = Array2::<F>::zeros((bsz, hidden));
    let mut dc_next = Array2::<F>::zeros((bsz, hidden));
    for t in (0..steps).rev() {
        let i_t = i.slice(s![.., t, ..]);
        let f_t = f.slice(s![.., t, ..]);
        let g_t = g.slice(s![.., t, ..]);
        let o_t = o.slice(s![.., t, ..]);
        let tanh_t = tanh_c.slice(s![.., t, ..]);

        let dh = &dh_stream.slice(s![.., t, ..]) + &dh_next;
        let d_o = &dh * &tanh_t;
        let dtanh = tanh_t.mapv(|v| one - v * v);
        let dc = &dc_next + &(&(&dh * &o_t) * &dtanh);
        let di = &dc * &g_t;
        let dg = &dc * &i_t;
        let df = if t > 0 {
            &dc * &c.slice(s![.., t - 1, ..])
        } else {
            Array2::<F>::zeros((bsz, hidden))
        };
        dc_next = &dc * &f_t;

        // sigmoid' = s(1-s), tanh' = 1-tanh^2, from the cached activations
        let mut dpre_t = dpre.slice_mut(s![.., t, ..]);
        dpre_t
            .slice_mut(s![.., 0..hidden])
            .assign(&(&di * &i_t.mapv(|v| v * (one - v))));
        dpre_t
            .slice_mut(s![.., hidden..2 * hidden])
            .assign(&(&df * &f_t.mapv(|v| v * (one - v))));
        dpre_t
            .slice_mut(s![.., 2 * hidden..3 * hidden])
            .assign(&(&dg * &g_t.mapv(|v| one - v * v)));
        dpre_t
            .slice_mut(s![.., 3 * hidden..4 * hidden])
            .assign(&(&d_o * &o_t.mapv(|v| v * (one - v))));

        dh_next = dpre.slice(s![.., t, ..]).dot(&w_h.t());
    }

    let dpre_flat = dpre.to_shape((bsz * steps, 4 * hidden)).unwrap();
    let input_flat = input.to_shape((bsz * steps, in_dim)).unwrap();
    let h_prev = shifted_hidden(h);
    let h_prev_flat = h_prev.to_shape((bsz * steps, hidden)).unwrap();

    let grads = LayerParams::Lstm {
        w_x: input_flat.t().dot(&dpre_flat),
        w_h: h_prev_flat.t().dot(&dpre_flat),
        b: dpre_flat.sum_axis(Axis(0)),
    };
    let dx = dpre_flat
        .dot(&w_x.t())
        .into_shape_with_order((bsz, steps, in_dim))
        .unwrap();
    (dx, grads)
}

fn bptt_gru<F: FloatT>(
    input: &Array3<F>,
    states: &LayerStates<F>,
    w_x: &Array2<F>,
    w_h: &Array2<F>,
    dh_stream: &Array3<F>,
) -> (Array3<F>, LayerParams<F>) {
    let LayerStates::Gru { z, r, n, nh, h } = states else {
        unreachable!()
    };
    let (bsz, steps, in_dim) = input.dim();
    let hidden = z.dim().2;
    let one = F::one();

    let mut dpre_x = Array3::<F>::zeros((bsz, steps, 3 * hidden));
    let mut dpre_h = Array3::<F>::zeros((bsz, steps, 3 * hidden));
    let mut dh_next = Array2::<F>::zeros((bsz, hidden));
    for t in (0..steps).rev() {
        let z_t = z.slice(s![.., t, ..]);
        let r_t = r.slice(s![.., t, ..]);
        let n_t = n.slice(s![.., t, ..]);
        let nh_t = nh.slice(s![.., t, ..]);
        let h_prev = if t > 0 {
            h.slice(s![.., t - 1, ..]).to_owned()
        } else {
            Array2::<F>::zeros((bsz, hidden))
        };

        let dhp = &dh_stream.slice(s![.., t, ..]) + &dh_next;
        let dz = &dhp * &(&h_prev - &n_t);
        let dn = &dhp * &z_t.mapv(|v| one - v);
        let dh_direct = &dhp * &z_t;

        let dpre_n = &dn * &n_t.mapv(|v| one - v * v);
        let dr = &dpre_n * &nh_t;
        let dnh = &dpre_n * &r_t;
        let dpre_z = &dz * &z_t.mapv(|v| v * (one - v));
        let dpre_r = &dr * &r_t.mapv(|v| v * (one - v));

        let mut dx_t = dpre_x.slice_mut(s![.., t, ..]);
        dx_t.slice_mut(s![.., 0..hidden]).assign(&dpre_z);
        dx_t.slice_mut(s![.., hidden..2 * hidden]).assign(&dpre_r);
        dx_t.slice_mut(s![.., 2 * hidden..3 * hidden])
            .assign(&dpre_n);
        let mut dh_t = dpre_h.slice_mut(s![.., t, ..]);
        dh_t.slice_mut(s![.., 0..hidden]).assign(&dpre_z);
        dh_t.slice_mut(s![.., hidden..2 * hidden]).assign(&dpre_r);
        dh_t.slice_mut(s![.., 2 * hidden..3 * hidden]).assign(&dnh);

        dh_next = &dh_direct + &dpre_h.slice(s![.., t, ..]).dot(&w_h.t());
    }

    let dpre_x_flat = dpre_x.to_shape((bsz * steps, 3 * hidden)).unwrap();
    let dpre_h_flat = dpre_h.to_shape((bsz * steps, 3 * hidden)).unwrap();
    let input_flat = input.to_shape((bsz * steps, in_dim)).unwrap();
    let h_prev = shifted_hidden(h);
    let h_prev_flat = h_prev.to_shape((bsz * steps, hidden)).unwrap();

    let grads = LayerParams::Gru {
        w_x: input_flat.t().dot(&dpre_x_flat),
        w_h: h_prev_flat.t().dot(&dpre_h_flat),
        b_x: dpre_x_flat.sum_axis(Axis(0)),
        b_h: dpre_h_flat.sum_axis(Axis(0)),
    };
    let dx = dpre_x_flat
        .dot(&w_x.t())
        .into_shape_with_order((bsz, steps, in_dim))
        .unwrap();
    (dx, grads)
}
