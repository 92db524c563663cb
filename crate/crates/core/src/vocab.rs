//! The shared 10-token vocabulary: three reserved control tokens with fixed
//! indices and seven payload slots that languages draw their alphabets from.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Total vocabulary size, control tokens included.
pub const VOCAB_SIZE: usize = 10;
/// Number of payload slots available to language alphabets.
pub const NUM_PAYLOAD: usize = 7;
/// First payload id; payload ids are `3..=9`.
pub const PAYLOAD_BASE: u8 = 3;

/// One token of the shared vocabulary.
///
/// Ids 0..=2 are the reserved control tokens; 3..=9 are payload symbols.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(u8);

pub const START: Symbol = Symbol(0);
pub const STOP: Symbol = Symbol(1);
pub const PAD: Symbol = Symbol(2);

impl Symbol {
    pub fn new(id: u8) -> Option<Symbol> {
        (id < VOCAB_SIZE as u8).then_some(Symbol(id))
    }

    /// Payload symbol by slot number (0 maps to id 3, ..., 6 to id 9).
    pub const fn payload(slot: usize) -> Symbol {
        assert!(slot < NUM_PAYLOAD, "payload slot out of range");
        Symbol(PAYLOAD_BASE + slot as u8)
    }

    pub fn id(self) -> usize {
        self.0 as usize
    }

    pub fn is_payload(self) -> bool {
        self.0 >= PAYLOAD_BASE
    }

    /// Slot number of a payload symbol (id 3 is slot 0).
    pub fn slot(self) -> Option<usize> {
        self.is_payload().then(|| (self.0 - PAYLOAD_BASE) as usize)
    }
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            START => write!(f, "[Start]"),
            STOP => write!(f, "[Stop]"),
            PAD => write!(f, "[Pad]"),
            Symbol(id) => write!(f, "s{id}"),
        }
    }
}

/// A per-task bijection over the payload ids. Control tokens are never
/// remapped; only the seven payload slots are permuted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VocabMap {
    // forward[slot] = task-local payload symbol for canonical slot
    forward: [Symbol; NUM_PAYLOAD],
}

impl VocabMap {
    pub fn identity() -> VocabMap {
        let mut forward = [START; NUM_PAYLOAD];
        for (slot, sym) in forward.iter_mut().enumerate() {
            *sym = Symbol::payload(slot);
        }
        VocabMap { forward }
    }

    /// Uniformly random permutation of the payload ids (Fisher-Yates).
    pub fn shuffled<R: Rng>(rng: &mut R) -> VocabMap {
        let mut map = VocabMap::identity();
        for i in (1..NUM_PAYLOAD).rev() {
            let j = rng.gen_range(0..=i);
            map.forward.swap(i, j);
        }
        map
    }

    /// Maps a canonical symbol into the task vocabulary. Control tokens pass
    /// through unchanged.
    pub fn map(&self, sym: Symbol) -> Symbol {
        match sym.slot() {
            Some(slot) => self.forward[slot],
            None => sym,
        }
    }

    pub fn map_seq(&self, seq: &[Symbol]) -> Vec<Symbol> {
        seq.iter().map(|&s| self.map(s)).collect()
    }

    pub fn inverse(&self) -> VocabMap {
        let mut inv = [START; NUM_PAYLOAD];
        for (slot, sym) in self.forward.iter().enumerate() {
            inv[sym.slot().expect("payload maps to payload")] = Symbol::payload(slot);
        }
        VocabMap { forward: inv }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reserved_ids_are_fixed() {
        assert_eq!(START.id(), 0);
        assert_eq!(STOP.id(), 1);
        assert_eq!(PAD.id(), 2);
        assert_eq!(Symbol::payload(0).id(), 3);
        assert_eq!(Symbol::payload(6).id(), 9);
    }

    #[test]
    fn shuffle_is_a_payload_permutation_fixing_controls() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let map = VocabMap::shuffled(&mut rng);
            let mut seen = [false; NUM_PAYLOAD];
            for slot in 0..NUM_PAYLOAD {
                let img = map.map(Symbol::payload(slot));
                assert!(img.is_payload());
                seen[img.slot().unwrap()] = true;
            }
            assert!(seen.iter().all(|&s| s), "not a bijection");
            assert_eq!(map.map(START), START);
            assert_eq!(map.map(STOP), STOP);
            assert_eq!(map.map(PAD), PAD);
        }
    }

    #[test]
    fn inverse_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let map = VocabMap::shuffled(&mut rng);
        let inv = map.inverse();
        for slot in 0..NUM_PAYLOAD {
            let s = Symbol::payload(slot);
            assert_eq!(inv.map(map.map(s)), s);
        }
    }
}
