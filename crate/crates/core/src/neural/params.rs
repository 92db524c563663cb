//! Model parameters and gradients: flat collections of named arrays whose
//! shapes are fully determined by the architecture descriptor. The array
//! order is fixed and documented; checkpoints, gradient accumulation, and
//! optimizer state all rely on it:
//!
//! 1. `embedding` `[vocab, embed]`
//! 2. per layer `l`: `layer{l}.w_x`, `layer{l}.w_h`, then `layer{l}.b`
//!    (LSTM, gates stacked input|forget|cell|output) or `layer{l}.b_x`,
//!    `layer{l}.b_h` (GRU, gates stacked update|reset|candidate)
//! 3. `out.w` `[hidden, vocab]`, `out.b` `[vocab]`

use super::arch::{ArchDescriptor, CellKind};
use super::ModelError;
use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, NdFloat};
use rand::Rng;

/// Float type the engine is generic over: f32 for training, f64 for the
/// finite-difference gradient checks.
pub trait FloatT: NdFloat + num_traits::FromPrimitive {
    fn from_f64c(v: f64) -> Self {
        Self::from_f64(v).expect("finite constant")
    }
}
impl FloatT for f32 {}
impl FloatT for f64 {}

#[derive(Clone, Debug, PartialEq)]
pub enum LayerParams<F> {
    Lstm {
        w_x: Array2<F>,
        w_h: Array2<F>,
        b: Array1<F>,
    },
    Gru {
        w_x: Array2<F>,
        w_h: Array2<F>,
        b_x: Array1<F>,
        b_h: Array1<F>,
    },
}

/// Named parameter arrays for one model. The same structure carries
/// gradients, Adam moments, and parameter deltas.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet<F> {
    pub arch: ArchDescriptor,
    pub embedding: Array2<F>,
    pub layers: Vec<LayerParams<F>>,
    pub w_out: Array2<F>,
    pub b_out: Array1<F>,
}

/// Gradients are shape-congruent with their parameters.
pub type ModelParams<F> = ParamSet<F>;
pub type Gradients<F> = ParamSet<F>;

impl<F: FloatT> ParamSet<F> {
    /// Uniform initialization in `[-1/sqrt(hidden), +1/sqrt(hidden)]` for
    /// every array, drawn in the documented array order; the LSTM forget
    /// gate bias is then set to 1.0.
    pub fn init<R: Rng>(arch: ArchDescriptor, rng: &mut R) -> ParamSet<F> {
        arch.validate().expect("valid arch");
        let bound = 1.0 / (arch.hidden_dim as f64).sqrt();
        let mut draw = |rows: usize, cols: usize| -> Array2<F> {
            Array2::from_shape_fn((rows, cols), |_| {
                F::from_f64c(rng.gen_range(-bound..=bound))
            })
        };
        let embedding = draw(arch.vocab_size, arch.embed_dim);
        let mut layers = Vec::with_capacity(arch.layers);
        for l in 0..arch.layers {
            let input = arch.layer_input_dim(l);
            let width = arch.cell.gates() * arch.hidden_dim;
            let w_x = draw(input, width);
            let w_h = draw(arch.hidden_dim, width);
            match arch.cell {
                CellKind::Lstm => {
                    let mut b = draw(1, width).row(0).to_owned();
                    // forget-gate slice set to +1 so cells start remembering
                    let h = arch.hidden_dim;
                    b.slice_mut(ndarray::s![h..2 * h]).fill(F::one());
                    layers.push(LayerParams::Lstm { w_x, w_h, b });
                }
                CellKind::Gru => {
                    let b_x = draw(1, width).row(0).to_owned();
                    let b_h = draw(1, width).row(0).to_owned();
                    layers.push(LayerParams::Gru { w_x, w_h, b_x, b_h });
                }
            }
        }
        let w_out = draw(arch.hidden_dim, arch.vocab_size);
        let b_out = draw(1, arch.vocab_size).row(0).to_owned();
        ParamSet {
            arch,
            embedding,
            layers,
            w_out,
            b_out,
        }
    }

    pub fn zeros_like(&self) -> ParamSet<F> {
        let mut z = self.clone();
        for mut a in z.arrays_mut() {
            a.fill(F::zero());
        }
        z
    }

    /// Arrays with their documented names, in the fixed order.
    pub fn named_arrays(&self) -> Vec<(String, ArrayViewD<'_, F>)> {
        let mut out: Vec<(String, ArrayViewD<'_, F>)> =
            vec![("embedding".into(), self.embedding.view().into_dyn())];
        for (l, layer) in self.layers.iter().enumerate() {
            match layer {
                LayerParams::Lstm { w_x, w_h, b } => {
                    out.push((format!("layer{l}.w_x"), w_x.view().into_dyn()));
                    out.push((format!("layer{l}.w_h"), w_h.view().into_dyn()));
                    out.push((format!("layer{l}.b"), b.view().into_dyn()));
                }
                LayerParams::Gru { w_x, w_h, b_x, b_h } => {
                    out.push((format!("layer{l}.w_x"), w_x.view().into_dyn()));
                    out.push((format!("layer{l}.w_h"), w_h.view().into_dyn()));
                    out.push((format!("layer{l}.b_x"), b_x.view().into_dyn()));
                    out.push((format!("layer{l}.b_h"), b_h.view().into_dyn()));
                }
            }
        }
        out.push(("out.w".into(), self.w_out.view().into_dyn()));
        out.push(("out.b".into(), self.b_out.view().into_dyn()));
        out
    }

    /// Mutable views in the same fixed order as [`named_arrays`].
    pub fn arrays_mut(&mut self) -> Vec<ArrayViewMutD<'_, F>> {
        let mut out: Vec<ArrayViewMutD<'_, F>> = vec![self.embedding.view_mut().into_dyn()];
        for layer in self.layers.iter_mut() {
            match layer {
                LayerParams::Lstm { w_x, w_h, b } => {
                    out.push(w_x.view_mut().into_dyn());
                    out.push(w_h.view_mut().into_dyn());
                    out.push(b.view_mut().into_dyn());
                }
                LayerParams::Gru { w_x, w_h, b_x, b_h } => {
                    out.push(w_x.view_mut().into_dyn());
                    out.push(w_h.view_mut().into_dyn());
                    out.push(b_x.view_mut().into_dyn());
                    out.push(b_h.view_mut().into_dyn());
                }
            }
        }
        out.push(self.w_out.view_mut().into_dyn());
        out.push(self.b_out.view_mut().into_dyn());
        out
    }

    pub fn check_congruent(&self, other: &ParamSet<F>) -> Result<(), ModelError> {
        let a = self.named_arrays();
        let b = other.named_arrays();
        if a.len() != b.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "{} arrays vs {}",
                a.len(),
                b.len()
            )));
        }
        for ((name, av), (_, bv)) in a.iter().zip(&b) {
            if av.shape() != bv.shape() {
                return Err(ModelError::ShapeMismatch(format!(
                    "{name}: {:?} vs {:?}",
                    av.shape(),
                    bv.shape()
                )));
            }
        }
        Ok(())
    }

    /// Elementwise `self[i] += scale * other[i]` across every array.
    pub fn add_scaled(&mut self, other: &ParamSet<F>, scale: F) -> Result<(), ModelError> {
        self.check_congruent(other)?;
        let theirs = other.named_arrays();
        for (mut mine, (_, their)) in self.arrays_mut().into_iter().zip(theirs) {
            mine.zip_mut_with(&their, |m, &t| *m = *m + scale * t);
        }
        Ok(())
    }

    /// Elementwise in-place scale.
    pub fn scale(&mut self, factor: F) {
        for mut a in self.arrays_mut() {
            a.mapv_inplace(|v| v * factor);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.named_arrays()
            .iter()
            .all(|(_, a)| a.iter().all(|v| v.is_finite()))
    }

    /// Total number of scalar parameters.
    pub fn num_params(&self) -> usize {
        self.named_arrays().iter().map(|(_, a)| a.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngs::{substream, Stream};

    fn arch(cell: CellKind) -> ArchDescriptor {
        ArchDescriptor::new(cell, 16)
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        for cell in [CellKind::Lstm, CellKind::Gru] {
            let a: ParamSet<f32> = ParamSet::init(arch(cell), &mut substream(1, Stream::ParamInit, 0));
            let b: ParamSet<f32> = ParamSet::init(arch(cell), &mut substream(1, Stream::ParamInit, 0));
            assert_eq!(a, b);
            let c: ParamSet<f32> = ParamSet::init(arch(cell), &mut substream(2, Stream::ParamInit, 0));
            assert_ne!(a, c);
        }
    }

    #[test]
    fn init_respects_bound_except_forget_bias() {
        let arch = arch(CellKind::Lstm);
        let p: ParamSet<f64> = ParamSet::init(arch, &mut substream(5, Stream::ParamInit, 0));
        let bound = 0.25; // 1/sqrt(16)
        for (name, arr) in p.named_arrays() {
            for (idx, &v) in arr.iter().enumerate() {
                let h = arch.hidden_dim;
                let in_forget_slice = name.ends_with(".b") && (h..2 * h).contains(&idx);
                if in_forget_slice {
                    assert_eq!(v, 1.0, "{name}[{idx}]");
                } else {
                    assert!(v.abs() <= bound, "{name}[{idx}] = {v}");
                }
            }
        }
    }

    #[test]
    fn array_order_is_stable() {
        let p: ParamSet<f32> =
            ParamSet::init(arch(CellKind::Gru), &mut substream(0, Stream::ParamInit, 0));
        let names: Vec<String> = p.named_arrays().into_iter().map(|(n, _)| n).collect();
        assert_eq!(
            names,
            [
                "embedding",
                "layer0.w_x",
                "layer0.w_h",
                "layer0.b_x",
                "layer0.b_h",
                "layer1.w_x",
                "layer1.w_h",
                "layer1.b_x",
                "layer1.b_h",
                "out.w",
                "out.b"
            ]
        );
    }

    #[test]
    fn add_scaled_accumulates() {
        let arch = arch(CellKind::Lstm);
        let p: ParamSet<f64> = ParamSet::init(arch, &mut substream(1, Stream::ParamInit, 0));
        let mut acc = p.zeros_like();
        acc.add_scaled(&p, 2.0).unwrap();
        acc.add_scaled(&p, -1.0).unwrap();
        for ((_, a), (_, b)) in acc.named_arrays().iter().zip(p.named_arrays().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
