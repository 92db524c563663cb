//! Sequence framing: every sequence is presented to the model as
//! `START, payload..., STOP, PAD...`, padded to the longest sequence in the
//! batch. Targets are the inputs shifted left; PAD targets are masked out of
//! the loss.

use crate::vocab::{Symbol, PAD, START, STOP};
use ndarray::Array2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    /// Token ids, `[batch, time]`.
    pub tokens: Array2<usize>,
}

impl Batch {
    /// Frames raw payload sequences. Rows shorter than the longest sequence
    /// are PAD-filled on the right.
    pub fn frame(seqs: &[Vec<Symbol>]) -> Batch {
        assert!(!seqs.is_empty(), "empty batch");
        let max_len = seqs.iter().map(Vec::len).max().unwrap();
        let t = max_len + 2; // START + payload + STOP
        let mut tokens = Array2::from_elem((seqs.len(), t), PAD.id());
        for (b, seq) in seqs.iter().enumerate() {
            tokens[[b, 0]] = START.id();
            for (i, sym) in seq.iter().enumerate() {
                tokens[[b, i + 1]] = sym.id();
            }
            tokens[[b, seq.len() + 1]] = STOP.id();
        }
        Batch { tokens }
    }

    /// Same rows with `extra` additional PAD columns (loss must not change).
    pub fn with_extra_padding(&self, extra: usize) -> Batch {
        let (b, t) = self.tokens.dim();
        let mut tokens = Array2::from_elem((b, t + extra), PAD.id());
        tokens
            .slice_mut(ndarray::s![.., ..t])
            .assign(&self.tokens);
        Batch { tokens }
    }

    pub fn batch_size(&self) -> usize {
        self.tokens.nrows()
    }

    pub fn time_steps(&self) -> usize {
        self.tokens.ncols()
    }

    /// Next-token target at `(b, t)`: the input shifted left, PAD past the
    /// end. PAD targets carry no loss.
    pub fn target(&self, b: usize, t: usize) -> usize {
        if t + 1 < self.tokens.ncols() {
            self.tokens[[b, t + 1]]
        } else {
            PAD.id()
        }
    }
}
