//! Exact slice counting and lexicographic unranking. The enumeration order
//! is lexicographic over canonical symbol ids and is frozen: corpora and
//! checkpoints depend on it.

use super::{CanonicalString, LangError, LangName, LanguageSpec};
use crate::vocab::Symbol;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::collections::HashMap;

const A: Symbol = Symbol::payload(0);
const B: Symbol = Symbol::payload(1);
const C: Symbol = Symbol::payload(2);
const BAR: Symbol = Symbol::payload(3);

const OPEN_P: Symbol = A;
const CLOSE_P: Symbol = B;
const OPEN_B: Symbol = C;
const CLOSE_B: Symbol = BAR;

/// Reusable counting tables for one language, valid for lengths up to the
/// `max_length` it was built with. Building once and sampling many draws
/// avoids recomputing the bracket-language tables per draw.
pub struct SliceTable {
    lang: LanguageSpec,
    max_length: usize,
    kind: TableKind,
}

enum TableKind {
    /// Growing languages: exactly one string per length.
    Singleton,
    /// Copy family and kleene: alphabet^length strings of w.
    PowThree,
    /// pairs_n: 2^length unit choices, or 2 homogeneous strings.
    PairUnits { homogeneous: bool },
    /// dyck: completions table indexed by (remaining tokens, depth).
    Dyck { f: Vec<Vec<BigUint>> },
    /// cross_dyck: lazy memo over (parens open, braces open, remaining).
    Cross {
        memo: std::cell::RefCell<HashMap<(u16, u16, u16), BigUint>>,
    },
}

impl SliceTable {
    pub(super) fn new(lang: LanguageSpec, max_length: usize) -> SliceTable {
        let kind = match lang.name {
            LangName::An | LangName::Anbn | LangName::Anbncn => TableKind::Singleton,
            LangName::Kleene | LangName::Wwr | LangName::Ww => TableKind::PowThree,
            LangName::PairsN => TableKind::PairUnits {
                homogeneous: lang.pairs_homogeneous,
            },
            LangName::Dyck => TableKind::Dyck {
                f: dyck_table(2 * max_length),
            },
            LangName::CrossDyck => TableKind::Cross {
                memo: std::cell::RefCell::new(HashMap::new()),
            },
        };
        SliceTable {
            lang,
            max_length,
            kind,
        }
    }

    pub fn lang(&self) -> &LanguageSpec {
        &self.lang
    }

    /// Members with `lang_length == length`. Zero for length 0: the empty
    /// string is in no language.
    pub fn count(&self, length: usize) -> BigUint {
        assert!(
            length <= self.max_length,
            "length {length} beyond table bound {}",
            self.max_length
        );
        if length == 0 {
            return BigUint::zero();
        }
        match &self.kind {
            TableKind::Singleton => BigUint::one(),
            TableKind::PowThree => BigUint::from(3u32).pow(length as u32),
            TableKind::PairUnits { homogeneous: true } => BigUint::from(2u32),
            TableKind::PairUnits { homogeneous: false } => {
                BigUint::one() << length
            }
            TableKind::Dyck { f } => f[2 * length][0].clone(),
            TableKind::Cross { memo } => {
                cross_count(&mut memo.borrow_mut(), 0, 0, 2 * length as u16)
            }
        }
    }

    /// The `rank`-th member of the slice in lexicographic canonical order.
    pub fn unrank(&self, length: usize, rank: &BigUint) -> Result<CanonicalString, LangError> {
        let count = self.count(length);
        if *rank >= count {
            return Err(LangError::RankOutOfRange {
                lang: self.lang.name,
                length,
                rank: rank.clone(),
                count,
            });
        }
        let symbols = match &self.kind {
            TableKind::Singleton => match self.lang.name {
                LangName::An => vec![A; length],
                LangName::Anbn => [vec![A; length], vec![B; length]].concat(),
                LangName::Anbncn => {
                    [vec![A; length], vec![B; length], vec![C; length]].concat()
                }
                _ => unreachable!(),
            },
            TableKind::PowThree => {
                let w = base3_word(rank, length);
                match self.lang.name {
                    LangName::Kleene => w,
                    LangName::Wwr => {
                        let mut s = w.clone();
                        s.push(BAR);
                        s.extend(w.iter().rev());
                        s
                    }
                    LangName::Ww => {
                        let mut s = w.clone();
                        s.push(BAR);
                        s.extend(&w);
                        s
                    }
                    _ => unreachable!(),
                }
            }
            TableKind::PairUnits { homogeneous } => {
                let bits = if *homogeneous {
                    // rank 0 -> all-paren units, rank 1 -> all-brace units
                    vec![*rank == BigUint::one(); length]
                } else {
                    // unit i from bit i, most significant first; () sorts
                    // before {} because '(' has the smaller id
                    (0..length)
                        .map(|i| rank.bit((length - 1 - i) as u64))
                        .collect()
                };
                bits.into_iter()
                    .flat_map(|brace| {
                        if brace {
                            [OPEN_B, CLOSE_B]
                        } else {
                            [OPEN_P, CLOSE_P]
                        }
                    })
                    .collect()
            }
            TableKind::Dyck { f } => dyck_unrank(f, length, rank),
            TableKind::Cross { memo } => {
                cross_unrank(&mut memo.borrow_mut(), length, rank)
            }
        };
        Ok(CanonicalString {
            symbols,
            lang_length: length,
        })
    }
}

/// Base-3 word of the given length, most significant digit first, mapping
/// digits 0/1/2 to a/b/c. This is lexicographic order over the slice.
fn base3_word(rank: &BigUint, length: usize) -> Vec<Symbol> {
    let digits = rank.to_radix_be(3);
    let mut w = vec![A; length - digits.len()];
    w.extend(digits.iter().map(|&d| match d {
        0 => A,
        1 => B,
        _ => C,
    }));
    w
}

/// dyck completions: f[r][d] = number of ways to extend a prefix at nesting
/// depth `d` to a member using exactly `r` more tokens. Types multiply the
/// opener branch by 2; the closer is forced by the stack top.
fn dyck_table(max_tokens: usize) -> Vec<Vec<BigUint>> {
    let mut f: Vec<Vec<BigUint>> = Vec::with_capacity(max_tokens + 1);
    for r in 0..=max_tokens {
        let mut row = vec![BigUint::zero(); max_tokens + 1];
        if r == 0 {
            row[0] = BigUint::one();
        } else {
            for d in 0..=max_tokens {
                let mut v = BigUint::zero();
                if d + 1 <= r - 1 {
                    v += f[r - 1][d + 1].clone() * 2u32;
                }
                if d >= 1 {
                    v += &f[r - 1][d - 1];
                }
                row[d] = v;
            }
        }
        f.push(row);
    }
    f
}

fn dyck_unrank(f: &[Vec<BigUint>], length: usize, rank: &BigUint) -> Vec<Symbol> {
    let mut rank = rank.clone();
    let mut out = Vec::with_capacity(2 * length);
    let mut stack: Vec<Symbol> = Vec::new();
    for pos in 0..2 * length {
        let remaining = 2 * length - pos;
        // candidates in id order: ( ) { }
        let candidates = [
            (OPEN_P, true, Some(OPEN_P)),
            (CLOSE_P, false, Some(OPEN_P)),
            (OPEN_B, true, Some(OPEN_B)),
            (CLOSE_B, false, Some(OPEN_B)),
        ];
        let mut placed = false;
        for (sym, opens, ty) in candidates {
            let ways = if opens {
                if stack.len() + 1 <= remaining - 1 {
                    f[remaining - 1][stack.len() + 1].clone()
                } else {
                    BigUint::zero()
                }
            } else if stack.last() == ty.as_ref() {
                f[remaining - 1][stack.len() - 1].clone()
            } else {
                BigUint::zero()
            };
            if ways.is_zero() {
                continue;
            }
            if rank < ways {
                if opens {
                    stack.push(sym);
                } else {
                    stack.pop();
                }
                out.push(sym);
                placed = true;
                break;
            }
            rank -= ways;
        }
        debug_assert!(placed, "rank not exhausted within slice");
    }
    out
}

/// cross_dyck completions: ways to finish with `r` tokens from `p` open
/// parens and `b` open braces, both subsequences independently balanced.
fn cross_count(
    memo: &mut HashMap<(u16, u16, u16), BigUint>,
    p: u16,
    b: u16,
    r: u16,
) -> BigUint {
    if r == 0 {
        return if p == 0 && b == 0 {
            BigUint::one()
        } else {
            BigUint::zero()
        };
    }
    if p + b > r {
        return BigUint::zero();
    }
    if let Some(v) = memo.get(&(p, b, r)) {
        return v.clone();
    }
    let mut v = cross_count(memo, p + 1, b, r - 1) + cross_count(memo, p, b + 1, r - 1);
    if p > 0 {
        v += cross_count(memo, p - 1, b, r - 1);
    }
    if b > 0 {
        v += cross_count(memo, p, b - 1, r - 1);
    }
    memo.insert((p, b, r), v.clone());
    v
}

fn cross_unrank(
    memo: &mut HashMap<(u16, u16, u16), BigUint>,
    length: usize,
    rank: &BigUint,
) -> Vec<Symbol> {
    let mut rank = rank.clone();
    let mut out = Vec::with_capacity(2 * length);
    let (mut p, mut b) = (0u16, 0u16);
    for pos in 0..2 * length {
        let r = (2 * length - pos) as u16;
        // candidates in id order: ( ) { }
        let mut placed = false;
        let candidates: [(Symbol, i32, i32); 4] = [
            (OPEN_P, 1, 0),
            (CLOSE_P, -1, 0),
            (OPEN_B, 0, 1),
            (CLOSE_B, 0, -1),
        ];
        for (sym, dp, db) in candidates {
            if (dp < 0 && p == 0) || (db < 0 && b == 0) {
                continue;
            }
            let np = (p as i32 + dp) as u16;
            let nb = (b as i32 + db) as u16;
            let ways = cross_count(memo, np, nb, r - 1);
            if ways.is_zero() {
                continue;
            }
            if rank < ways {
                p = np;
                b = nb;
                out.push(sym);
                placed = true;
                break;
            }
            rank -= ways;
        }
        debug_assert!(placed, "rank not exhausted within slice");
    }
    out
}
