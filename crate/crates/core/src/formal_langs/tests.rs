use super::*;
use crate::rngs::{substream, Stream};
use crate::vocab::{PAD, START};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lang(name: LangName) -> LanguageSpec {
    LanguageSpec::new(name)
}

fn is_member(spec: &LanguageSpec, text: &str) -> bool {
    spec.membership(&spec.parse(text).unwrap()).unwrap()
}

fn conts(spec: &LanguageSpec, text: &str) -> ContinuationSet {
    spec.valid_continuations(&spec.parse(text).unwrap()).unwrap()
}

fn set(spec: &LanguageSpec, glyphs: &str, stop: bool) -> ContinuationSet {
    let mut s: ContinuationSet = spec.parse(glyphs).unwrap().into_iter().collect();
    if stop {
        s.insert(STOP);
    }
    s
}

#[test]
fn fig_2b_triples() {
    use ChomskyLevel::*;
    use Family::*;
    let expect = [
        (LangName::An, Growing, Regular),
        (LangName::Anbn, Growing, ContextFree),
        (LangName::Anbncn, Growing, ContextSensitive),
        (LangName::Kleene, Copy, Regular),
        (LangName::Wwr, Copy, ContextFree),
        (LangName::Ww, Copy, ContextSensitive),
        (LangName::PairsN, Dyck, Regular),
        (LangName::Dyck, Dyck, ContextFree),
        (LangName::CrossDyck, Dyck, ContextSensitive),
    ];
    for (name, family, level) in expect {
        let l = lang(name);
        assert_eq!(l.family(), family, "{name}");
        assert_eq!(l.chomsky_level(), level, "{name}");
    }
}

#[test]
fn membership_spec_examples() {
    assert!(is_member(&lang(LangName::Dyck), "({})"));
    assert!(is_member(&lang(LangName::CrossDyck), "{(})"));
    assert!(!is_member(&lang(LangName::Anbn), ""));
    assert!(is_member(&lang(LangName::Ww), "ab|ab"));
}

#[test]
fn membership_paper_examples() {
    let dyck = lang(LangName::Dyck);
    for s in ["()", "({})", "()()", "(())", "{()}"] {
        assert!(is_member(&dyck, s), "{s}");
    }
    let cross = lang(LangName::CrossDyck);
    for s in ["()", "{(})", "({)}", "()()", "{()}", "{(})()"] {
        assert!(is_member(&cross, s), "{s}");
    }
    assert!(!is_member(&dyck, "{(})"));
    let wwr = lang(LangName::Wwr);
    for s in ["a|a", "b|b", "abab|baba", "ab|ba", "bcb|bcb"] {
        assert!(is_member(&wwr, s), "{s}");
    }
    assert!(!is_member(&wwr, "ab|ab"));
    let ww = lang(LangName::Ww);
    for s in ["abc|abc", "abab|abab", "abac|abac", "a|a"] {
        assert!(is_member(&ww, s), "{s}");
    }
    let pairs = lang(LangName::PairsN);
    for s in ["()", "()()", "{}{}{}", "(){}"] {
        assert!(is_member(&pairs, s), "{s}");
    }
    assert!(!is_member(&pairs, "({})"));
}

#[test]
fn pairs_homogeneous_flag() {
    let mixed = lang(LangName::PairsN);
    let homog = LanguageSpec {
        pairs_homogeneous: true,
        ..mixed
    };
    assert!(is_member(&mixed, "(){}"));
    assert!(!is_member(&homog, "(){}"));
    assert!(is_member(&homog, "()()"));
    assert!(is_member(&homog, "{}{}{}"));
    // after a paren unit, homogeneous only allows '(' or stop
    assert_eq!(conts(&homog, "()"), set(&homog, "(", true));
    assert_eq!(conts(&mixed, "()"), set(&mixed, "({", true));
    // count differs: 2 vs 2^n
    assert_eq!(homog.count_strings(3), BigUint::from(2u32));
    assert_eq!(mixed.count_strings(3), BigUint::from(8u32));
}

#[test]
fn continuation_spec_examples() {
    let dyck = lang(LangName::Dyck);
    assert_eq!(conts(&dyck, "()"), set(&dyck, "({", true));
    assert_eq!(conts(&dyck, "(){("), set(&dyck, "({)", false));
    let anbn = lang(LangName::Anbn);
    assert_eq!(conts(&anbn, "aab"), set(&anbn, "b", false));
    let ww = lang(LangName::Ww);
    assert_eq!(conts(&ww, "ab|a"), set(&ww, "b", false));
}

/// The six continuation rows for "(){()}" in dyck, exactly as published.
#[test]
fn dyck_continuation_table_rows() {
    let dyck = lang(LangName::Dyck);
    let rows: [(&str, usize, &str, bool); 6] = [
        ("(", 1, "({)", false),
        ("()", 1, "({", true),
        ("(){", 2, "({}", false),
        ("(){(", 3, "({)", false),
        ("(){()", 3, "({}", false),
        ("(){()}", 3, "({", true),
    ];
    for (prefix, length, valid, stop) in rows {
        let p = dyck.parse(prefix).unwrap();
        assert_eq!(dyck.prefix_length(&p).unwrap(), length, "{prefix}");
        assert_eq!(
            dyck.valid_continuations(&p).unwrap(),
            set(&dyck, valid, stop),
            "{prefix}"
        );
    }
}

#[test]
fn prefix_length_examples() {
    let dyck = lang(LangName::Dyck);
    assert_eq!(dyck.prefix_length(&dyck.parse("(){").unwrap()).unwrap(), 2);
    assert_eq!(
        dyck.prefix_length(&dyck.parse("(){()}").unwrap()).unwrap(),
        3
    );
    let anbncn = lang(LangName::Anbncn);
    assert_eq!(
        anbncn.prefix_length(&anbncn.parse("aabb").unwrap()).unwrap(),
        2
    );
    let wwr = lang(LangName::Wwr);
    assert_eq!(wwr.prefix_length(&wwr.parse("ab").unwrap()).unwrap(), 2);
    assert_eq!(wwr.prefix_length(&wwr.parse("ab|").unwrap()).unwrap(), 2);
    assert_eq!(wwr.prefix_length(&wwr.parse("ab|b").unwrap()).unwrap(), 2);
}

#[test]
fn dead_prefix_and_unknown_symbol() {
    let anbn = lang(LangName::Anbn);
    let dead = anbn.parse("aba").unwrap();
    assert_eq!(
        anbn.valid_continuations(&dead),
        Err(LangError::DeadPrefix(LangName::Anbn))
    );
    assert_eq!(
        anbn.prefix_length(&dead),
        Err(LangError::DeadPrefix(LangName::Anbn))
    );
    // membership of a dead string is false, not an error
    assert!(!anbn.membership(&dead).unwrap());

    for bad in [START, STOP, PAD, Symbol::payload(6)] {
        assert!(matches!(
            anbn.membership(&[bad]),
            Err(LangError::UnknownSymbol(..))
        ));
    }
    // 'c' is outside anbn's alphabet even though growing family uses it
    assert!(matches!(
        anbn.membership(&[Symbol::payload(2)]),
        Err(LangError::UnknownSymbol(..))
    ));
}

#[test]
fn empty_prefix_excludes_stop() {
    for spec in LanguageSpec::all() {
        let valid = spec.valid_continuations(&[]).unwrap();
        assert!(!valid.has_stop(), "{}", spec.name);
        assert!(!valid.is_empty(), "{}", spec.name);
    }
}

#[test]
fn count_spec_examples() {
    assert_eq!(lang(LangName::Anbncn).count_strings(5), BigUint::from(1u32));
    assert_eq!(lang(LangName::Kleene).count_strings(3), BigUint::from(27u32));
    assert_eq!(lang(LangName::Dyck).count_strings(2), BigUint::from(8u32));
}

/// Brute-force slice enumeration: all token strings of the right token
/// length over the alphabet, filtered by membership.
fn brute_slice(spec: &LanguageSpec, lang_length: usize) -> Vec<Vec<Symbol>> {
    let token_len = match spec.name {
        LangName::An | LangName::Kleene => lang_length,
        LangName::Anbn | LangName::PairsN | LangName::Dyck | LangName::CrossDyck => {
            2 * lang_length
        }
        LangName::Anbncn => 3 * lang_length,
        LangName::Wwr | LangName::Ww => 2 * lang_length + 1,
    };
    let alphabet = spec.alphabet();
    let mut out = Vec::new();
    let mut cur = vec![0usize; token_len];
    loop {
        let s: Vec<Symbol> = cur.iter().map(|&i| alphabet[i]).collect();
        if spec.membership(&s).unwrap() && spec.prefix_length(&s).unwrap() == lang_length {
            out.push(s);
        }
        // odometer
        let mut pos = token_len;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < alphabet.len() {
                break;
            }
            cur[pos] = 0;
        }
    }
}

#[test]
fn count_matches_brute_force_up_to_4() {
    for spec in LanguageSpec::all() {
        for len in 1..=4usize {
            let brute = brute_slice(&spec, len);
            assert_eq!(
                spec.count_strings(len),
                BigUint::from(brute.len()),
                "{} length {len}",
                spec.name
            );
        }
    }
}

#[test]
fn unrank_enumerates_dyck_slice_exactly() {
    let dyck = lang(LangName::Dyck);
    let brute = brute_slice(&dyck, 2);
    assert_eq!(brute.len(), 8);
    let mut seen = std::collections::HashSet::new();
    let mut prev: Option<Vec<Symbol>> = None;
    for k in 0..8u32 {
        let s = dyck.unrank(2, &BigUint::from(k)).unwrap();
        assert!(brute.contains(&s.symbols));
        if let Some(p) = &prev {
            assert!(*p < s.symbols, "lexicographic order");
        }
        prev = Some(s.symbols.clone());
        seen.insert(s.symbols);
    }
    assert_eq!(seen.len(), 8);
    assert!(dyck.unrank(2, &BigUint::from(8u32)).is_err());
}

#[test]
fn unrank_spec_examples() {
    let anbn = lang(LangName::Anbn);
    let s = anbn.unrank(3, &BigUint::from(0u32)).unwrap();
    assert_eq!(anbn.render(&s.symbols), "aaabbb");
    let kleene = lang(LangName::Kleene);
    let s = kleene.unrank(2, &BigUint::from(0u32)).unwrap();
    assert_eq!(kleene.render(&s.symbols), "aa");
}

#[test]
fn unrank_bijective_on_all_langs_len_3() {
    for spec in LanguageSpec::all() {
        let brute = brute_slice(&spec, 3);
        let count = spec.count_strings(3);
        assert_eq!(count, BigUint::from(brute.len()), "{}", spec.name);
        let mut seen = std::collections::HashSet::new();
        let mut k = BigUint::default();
        while k < count {
            let s = spec.unrank(3, &k).unwrap();
            assert!(brute.contains(&s.symbols), "{}", spec.name);
            assert!(seen.insert(s.symbols), "{} duplicate", spec.name);
            k += 1u32;
        }
    }
}

#[test]
fn sample_uniform_spec_examples() {
    let an = lang(LangName::An);
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let s = an.sample_uniform(4, &mut rng).unwrap();
    assert_eq!(an.render(&s.symbols), "aaaa");

    let dyck = lang(LangName::Dyck);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = dyck.sample_uniform(3, &mut rng).unwrap();
    assert_eq!(s.symbols.len(), 6);
    assert!(dyck.membership(&s.symbols).unwrap());
}

#[test]
fn sample_by_length_range_spec_examples() {
    let anbn = lang(LangName::Anbn);
    let mut rng = substream(9, Stream::Gen, 0);
    let strings = anbn.sample_by_length_range(1, 10, 200, &mut rng).unwrap();
    assert_eq!(strings.len(), 200);
    for s in &strings {
        assert!(anbn.membership(&s.symbols).unwrap());
        assert!((1..=10).contains(&s.lang_length));
    }

    let dyck = lang(LangName::Dyck);
    let strings = dyck.sample_by_length_range(11, 20, 20, &mut rng).unwrap();
    assert_eq!(strings.len(), 20);
    for s in &strings {
        assert!((11..=20).contains(&s.lang_length));
        assert!(dyck.membership(&s.symbols).unwrap());
    }

    let an = lang(LangName::An);
    let strings = an.sample_by_length_range(1, 1, 3, &mut rng).unwrap();
    let rendered: Vec<String> = strings.iter().map(|s| an.render(&s.symbols)).collect();
    assert_eq!(rendered, ["a", "a", "a"]);
}

#[test]
fn hierarchy_containment_up_to_10_tokens() {
    let pairs = lang(LangName::PairsN);
    let dyck = lang(LangName::Dyck);
    let cross = lang(LangName::CrossDyck);
    let alphabet = dyck.alphabet();
    let (mut n_pairs, mut n_dyck, mut n_cross) = (0u64, 0u64, 0u64);
    // walk all strings of token-length 1..=10 over the shared alphabet
    for len in 1..=10usize {
        let mut cur = vec![0usize; len];
        'odometer: loop {
            let s: Vec<Symbol> = cur.iter().map(|&i| alphabet[i]).collect();
            let in_pairs = pairs.membership(&s).unwrap();
            let in_dyck = dyck.membership(&s).unwrap();
            let in_cross = cross.membership(&s).unwrap();
            assert!(!in_pairs || in_dyck, "pairs not within dyck: {s:?}");
            assert!(!in_dyck || in_cross, "dyck not within cross: {s:?}");
            n_pairs += in_pairs as u64;
            n_dyck += in_dyck as u64;
            n_cross += in_cross as u64;
            let mut pos = len;
            loop {
                if pos == 0 {
                    break 'odometer;
                }
                pos -= 1;
                cur[pos] += 1;
                if cur[pos] < alphabet.len() {
                    break;
                }
                cur[pos] = 0;
            }
        }
    }
    assert!(n_pairs < n_dyck && n_dyck < n_cross, "containment is proper");
}

proptest! {
    /// Every proper prefix of a sampled member admits the member's next
    /// symbol, and the full member admits STOP.
    #[test]
    fn member_prefixes_follow_oracle(
        lang_idx in 0usize..9,
        length in 1usize..=8,
        seed in 0u64..1000,
    ) {
        let spec = LanguageSpec::all()[lang_idx];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = spec.sample_uniform(length, &mut rng).unwrap();
        prop_assert!(spec.membership(&s.symbols).unwrap());
        prop_assert_eq!(spec.prefix_length(&s.symbols).unwrap(), length);
        for cut in 0..s.symbols.len() {
            let valid = spec.valid_continuations(&s.symbols[..cut]).unwrap();
            prop_assert!(valid.contains(s.symbols[cut]));
            prop_assert!(!valid.is_empty());
        }
        let full = spec.valid_continuations(&s.symbols).unwrap();
        prop_assert!(full.has_stop());
    }
}
