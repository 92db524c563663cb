//! Per-language prefix analysis. For a live prefix this produces both the
//! exact set of valid next tokens and the language-specific length measure;
//! a dead prefix (one that no member extends) yields `None`.
//!
//! Membership falls out of the same analysis: a prefix is a member exactly
//! when STOP is among its valid continuations.

use super::{ContinuationSet, LangName, LanguageSpec};
use crate::vocab::{Symbol, STOP};

// Canonical payload symbols, named per family reading.
const A: Symbol = Symbol::payload(0); // also '('
const B: Symbol = Symbol::payload(1); // also ')'
const C: Symbol = Symbol::payload(2); // also '{'
const BAR: Symbol = Symbol::payload(3); // also '}'

const OPEN_P: Symbol = A;
const CLOSE_P: Symbol = B;
const OPEN_B: Symbol = C;
const CLOSE_B: Symbol = BAR;

pub(super) struct PrefixInfo {
    pub valid: ContinuationSet,
    pub length: usize,
}

impl PrefixInfo {
    fn new(length: usize, symbols: impl IntoIterator<Item = Symbol>) -> PrefixInfo {
        PrefixInfo {
            valid: symbols.into_iter().collect(),
            length,
        }
    }
}

pub(super) fn analyze(spec: &LanguageSpec, prefix: &[Symbol]) -> Option<PrefixInfo> {
    match spec.name {
        LangName::An => an(prefix),
        LangName::Anbn => anbn(prefix),
        LangName::Anbncn => anbncn(prefix),
        LangName::Kleene => kleene(prefix),
        LangName::Wwr => copy_lang(prefix, true),
        LangName::Ww => copy_lang(prefix, false),
        LangName::PairsN => pairs(prefix, spec.pairs_homogeneous),
        LangName::Dyck => dyck(prefix),
        LangName::CrossDyck => cross_dyck(prefix),
    }
}

/// a^n, n >= 1.
fn an(prefix: &[Symbol]) -> Option<PrefixInfo> {
    if prefix.iter().any(|&s| s != A) {
        return None;
    }
    let k = prefix.len();
    let mut info = PrefixInfo::new(k, [A]);
    if k >= 1 {
        info.valid.insert(STOP);
    }
    Some(info)
}

/// Splits a growing-language prefix into maximal runs of the given symbols
/// in order. `None` if any symbol appears out of order.
fn runs(prefix: &[Symbol], order: &[Symbol]) -> Option<Vec<usize>> {
    let mut counts = vec![0usize; order.len()];
    let mut stage = 0;
    for &s in prefix {
        let pos = order.iter().position(|&o| o == s)?;
        if pos < stage {
            return None;
        }
        stage = pos;
        counts[pos] += 1;
    }
    Some(counts)
}

/// a^n b^n, n >= 1.
fn anbn(prefix: &[Symbol]) -> Option<PrefixInfo> {
    let counts = runs(prefix, &[A, B])?;
    let (k, j) = (counts[0], counts[1]);
    if j > k {
        return None;
    }
    let info = if j == 0 {
        if k == 0 {
            PrefixInfo::new(0, [A])
        } else {
            PrefixInfo::new(k, [A, B])
        }
    } else if j < k {
        PrefixInfo::new(k, [B])
    } else {
        PrefixInfo::new(k, [STOP])
    };
    Some(info)
}

/// a^n b^n c^n, n >= 1.
fn anbncn(prefix: &[Symbol]) -> Option<PrefixInfo> {
    let counts = runs(prefix, &[A, B, C])?;
    let (k, j, i) = (counts[0], counts[1], counts[2]);
    if j > k || (i > 0 && j != k) || i > j {
        return None;
    }
    let info = if j == 0 {
        if k == 0 {
            PrefixInfo::new(0, [A])
        } else {
            PrefixInfo::new(k, [A, B])
        }
    } else if j < k {
        PrefixInfo::new(k, [B])
    } else if i < j {
        PrefixInfo::new(k, [C])
    } else {
        PrefixInfo::new(k, [STOP])
    };
    Some(info)
}

/// Nonempty strings over {a, b, c}. The family alphabet includes the bar,
/// but no member contains it, so any bar kills the prefix.
fn kleene(prefix: &[Symbol]) -> Option<PrefixInfo> {
    if prefix.iter().any(|&s| s == BAR) {
        return None;
    }
    let mut info = PrefixInfo::new(prefix.len(), [A, B, C]);
    if !prefix.is_empty() {
        info.valid.insert(STOP);
    }
    Some(info)
}

/// w|w^R (mirrored) when `reversed`, w|w (copy) otherwise, w nonempty over
/// {a, b, c}. After the bar every token is forced, so the continuation set
/// is a singleton until the copy completes.
fn copy_lang(prefix: &[Symbol], reversed: bool) -> Option<PrefixInfo> {
    let bar_pos = prefix.iter().position(|&s| s == BAR);
    match bar_pos {
        None => {
            let mut info = PrefixInfo::new(prefix.len(), [A, B, C]);
            if !prefix.is_empty() {
                info.valid.insert(BAR);
            }
            Some(info)
        }
        Some(0) => None, // w must be nonempty
        Some(m) => {
            let (w, rest) = (&prefix[..m], &prefix[m + 1..]);
            if rest.len() > m || rest.contains(&BAR) {
                return None;
            }
            for (i, &s) in rest.iter().enumerate() {
                let expect = if reversed { w[m - 1 - i] } else { w[i] };
                if s != expect {
                    return None;
                }
            }
            let valid = if rest.len() < m {
                let next = if reversed { w[m - 1 - rest.len()] } else { w[rest.len()] };
                PrefixInfo::new(m, [next])
            } else {
                PrefixInfo::new(m, [STOP])
            };
            Some(valid)
        }
    }
}

/// Nonempty concatenations of `()` and `{}` units. Mixing unit types is
/// allowed unless `homogeneous` is set.
fn pairs(prefix: &[Symbol], homogeneous: bool) -> Option<PrefixInfo> {
    let mut units = 0usize;
    let mut unit_type: Option<Symbol> = None; // opener of the established type
    let mut chunks = prefix.chunks_exact(2);
    for chunk in &mut chunks {
        let opener = chunk[0];
        let closer = match opener {
            OPEN_P => CLOSE_P,
            OPEN_B => CLOSE_B,
            _ => return None,
        };
        if chunk[1] != closer {
            return None;
        }
        if homogeneous {
            match unit_type {
                None => unit_type = Some(opener),
                Some(t) if t != opener => return None,
                Some(_) => {}
            }
        }
        units += 1;
    }
    let dangling = chunks.remainder().first().copied();
    if let Some(opener) = dangling {
        let closer = match opener {
            OPEN_P => CLOSE_P,
            OPEN_B => CLOSE_B,
            _ => return None,
        };
        if homogeneous {
            if let Some(t) = unit_type {
                if t != opener {
                    return None;
                }
            }
        }
        return Some(PrefixInfo::new(units + 1, [closer]));
    }
    let mut info = match (homogeneous, unit_type) {
        (true, Some(t)) => PrefixInfo::new(units, [t]),
        _ => PrefixInfo::new(units, [OPEN_P, OPEN_B]),
    };
    if units >= 1 {
        info.valid.insert(STOP);
    }
    Some(info)
}

/// Well-nested strings over two bracket types; each closer must match the
/// most recent unmatched opener.
fn dyck(prefix: &[Symbol]) -> Option<PrefixInfo> {
    let mut stack: Vec<Symbol> = Vec::new();
    let mut openers = 0usize;
    for &s in prefix {
        match s {
            OPEN_P | OPEN_B => {
                stack.push(s);
                openers += 1;
            }
            CLOSE_P => {
                if stack.pop() != Some(OPEN_P) {
                    return None;
                }
            }
            CLOSE_B => {
                if stack.pop() != Some(OPEN_B) {
                    return None;
                }
            }
            _ => return None,
        }
    }
    let mut info = PrefixInfo::new(openers, [OPEN_P, OPEN_B]);
    match stack.last() {
        Some(&OPEN_P) => info.valid.insert(CLOSE_P),
        Some(&OPEN_B) => info.valid.insert(CLOSE_B),
        _ => {
            if !prefix.is_empty() {
                info.valid.insert(STOP);
            }
        }
    }
    Some(info)
}

/// Brackets and parentheses balanced independently of each other; the two
/// subsequences interleave freely.
fn cross_dyck(prefix: &[Symbol]) -> Option<PrefixInfo> {
    let mut parens = 0usize;
    let mut braces = 0usize;
    let mut openers = 0usize;
    for &s in prefix {
        match s {
            OPEN_P => {
                parens += 1;
                openers += 1;
            }
            OPEN_B => {
                braces += 1;
                openers += 1;
            }
            CLOSE_P => parens = parens.checked_sub(1)?,
            CLOSE_B => braces = braces.checked_sub(1)?,
            _ => return None,
        }
    }
    let mut info = PrefixInfo::new(openers, [OPEN_P, OPEN_B]);
    if parens > 0 {
        info.valid.insert(CLOSE_P);
    }
    if braces > 0 {
        info.valid.insert(CLOSE_B);
    }
    if parens == 0 && braces == 0 && !prefix.is_empty() {
        info.valid.insert(STOP);
    }
    Some(info)
}
