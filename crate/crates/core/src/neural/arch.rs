//! Architecture descriptor for the recurrent language models.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Lstm,
    Gru,
}

impl CellKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        }
    }

    /// Stacked gate count: LSTM packs input|forget|cell|output, GRU packs
    /// update|reset|candidate.
    pub fn gates(self) -> usize {
        match self {
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }
}

impl std::str::FromStr for CellKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            other => Err(format!("unknown cell '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArchDescriptor {
    pub cell: CellKind,
    pub layers: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub vocab_size: usize,
}

impl ArchDescriptor {
    /// Paper-shaped architecture: 2 layers, tied embedding and hidden dims,
    /// the shared 10-token vocabulary.
    pub fn new(cell: CellKind, hidden_dim: usize) -> ArchDescriptor {
        ArchDescriptor {
            cell,
            layers: 2,
            hidden_dim,
            embed_dim: hidden_dim,
            vocab_size: crate::vocab::VOCAB_SIZE,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.layers < 1 {
            return Err("layers must be >= 1".into());
        }
        if self.hidden_dim < 1 || self.embed_dim < 1 || self.vocab_size < 2 {
            return Err("dimensions must be positive".into());
        }
        Ok(())
    }

    /// Input width of a recurrent layer: the embedding feeds layer 0, each
    /// further layer reads the hidden state below it.
    pub fn layer_input_dim(&self, layer: usize) -> usize {
        if layer == 0 {
            self.embed_dim
        } else {
            self.hidden_dim
        }
    }
}
