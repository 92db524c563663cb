use super::*;
use approx::assert_relative_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lit(slot: usize) -> Rule {
    Rule::Literal(Symbol::payload(slot))
}

/// Derivation-tracking recognizer, independent of the generator: returns
/// every end position a rule can reach from `pos`. Every rule consumes at
/// least one token, so the closure over repetitions terminates.
fn match_ends(rule: &Rule, s: &[Symbol], pos: usize) -> Vec<usize> {
    let mut ends = Vec::new();
    match rule {
        Rule::Literal(sym) => {
            if s.get(pos) == Some(sym) {
                ends.push(pos + 1);
            }
        }
        Rule::Concat(l, r) => {
            for mid in match_ends(l, s, pos) {
                for end in match_ends(r, s, mid) {
                    if !ends.contains(&end) {
                        ends.push(end);
                    }
                }
            }
        }
        Rule::Union(l, r) => {
            ends = match_ends(l, s, pos);
            for end in match_ends(r, s, pos) {
                if !ends.contains(&end) {
                    ends.push(end);
                }
            }
        }
        Rule::Repeat { body, max } => {
            let mut frontier = match_ends(body, s, pos);
            for _ in 1..*max {
                let mut next = Vec::new();
                for &f in &frontier {
                    for end in match_ends(body, s, f) {
                        if !next.contains(&end) {
                            next.push(end);
                        }
                    }
                }
                for &f in &frontier {
                    if !ends.contains(&f) {
                        ends.push(f);
                    }
                }
                frontier = next;
                if frontier.is_empty() {
                    break;
                }
            }
            for f in frontier {
                if !ends.contains(&f) {
                    ends.push(f);
                }
            }
        }
        Rule::RepeatUnbounded(body) => {
            let mut frontier = match_ends(body, s, pos);
            while !frontier.is_empty() {
                let mut next = Vec::new();
                for &f in &frontier {
                    if !ends.contains(&f) {
                        ends.push(f);
                        for end in match_ends(body, s, f) {
                            if !next.contains(&end) {
                                next.push(end);
                            }
                        }
                    }
                }
                frontier = next;
            }
        }
    }
    ends
}

fn accepts(g: &PatternGrammar, s: &[Symbol]) -> bool {
    match_ends(&g.root, s, 0).contains(&s.len())
}

#[test]
fn mdl_cost_table_examples() {
    let alphabet: Vec<Symbol> = (0..3).map(Symbol::payload).collect();
    let single = PatternGrammar::new(alphabet.clone(), lit(0));
    assert_relative_eq!(single.mdl_bits, 5f64.log2() + 3f64.log2(), epsilon = 1e-12);
    assert_relative_eq!(single.mdl_bits, 3.907, epsilon = 1e-3);

    let pair = PatternGrammar::new(
        alphabet.clone(),
        Rule::Concat(Box::new(lit(0)), Box::new(lit(0))),
    );
    assert_relative_eq!(
        pair.mdl_bits,
        2.0 * (5f64.log2() + 3f64.log2()) + 5f64.log2(),
        epsilon = 1e-12
    );
    assert_relative_eq!(pair.mdl_bits, 10.136, epsilon = 1e-3);

    let rep = Rule::Repeat {
        body: Box::new(lit(1)),
        max: 4,
    };
    assert_relative_eq!(
        mdl_score(&rep, 3),
        5f64.log2() + 2.0 * (4.0f64 + 1.0).log2() + (5f64.log2() + 3f64.log2()),
        epsilon = 1e-12
    );

    // determinism: scoring twice gives identical bits
    assert_eq!(mdl_score(&rep, 3).to_bits(), mdl_score(&rep, 3).to_bits());
}

#[test]
fn zoo_histogram_is_uniform_and_reproducible() {
    let zoo = build_zoo(5000, 0.0, 100.0, 99).unwrap();
    assert_eq!(zoo.grammars.len(), 5000);
    let hist = zoo.histogram(0.0, 100.0, 10);
    for (bin, &count) in hist.iter().enumerate() {
        assert_eq!(count, 500, "bin {bin}");
    }
    for g in &zoo.grammars {
        assert!((0.0..=100.0).contains(&g.mdl_bits));
        assert!(!g.alphabet.is_empty() && g.alphabet.len() <= 7);
    }

    let again = build_zoo(5000, 0.0, 100.0, 99).unwrap();
    let a: Vec<String> = zoo.grammars.iter().map(|g| g.rules_sexpr()).collect();
    let b: Vec<String> = again.grammars.iter().map(|g| g.rules_sexpr()).collect();
    assert_eq!(a, b);
}

#[test]
fn tiny_zoo_fills_one_per_decile() {
    let zoo = build_zoo(10, 0.0, 100.0, 3).unwrap();
    assert_eq!(zoo.grammars.len(), 10);
    assert_eq!(zoo.histogram(0.0, 100.0, 10), vec![1; 10]);
}

#[test]
fn prior_shifts_sampled_complexity() {
    let zoo = build_zoo(1000, 0.0, 100.0, 5).unwrap();
    let zoo_mean = zoo.mean_mdl();
    let mut rng = ChaCha8Rng::seed_from_u64(17);

    let mut empirical = |t: f64| {
        let sampler = zoo.sampler(SamplingPrior::new(t));
        let total: f64 = (0..10_000)
            .map(|_| zoo.grammars[sampler.sample_index(&mut rng)].mdl_bits)
            .sum();
        total / 10_000.0
    };
    assert!(empirical(-5.0) < zoo_mean);
    assert!(empirical(5.0) > zoo_mean);

    // |T| -> infinity approaches uniform: every weight is 1/n
    let w = zoo.softmax_weights(SamplingPrior::new(1e9));
    for &wi in &w {
        assert_relative_eq!(wi, 1.0 / 1000.0, epsilon = 1e-9);
    }
    let w = zoo.softmax_weights(SamplingPrior::new(-1e9));
    for &wi in &w {
        assert_relative_eq!(wi, 1.0 / 1000.0, epsilon = 1e-9);
    }
}

/// Under exp(mdl/T) weights the expectation is monotone in the inverse
/// temperature 1/T: within one sign, a smaller |T| biases harder. Checked
/// at T in {-5, -1, 1, 5}, ordered by 1/T.
#[test]
fn expected_mdl_monotone_in_inverse_temperature() {
    let zoo = build_zoo(500, 0.0, 100.0, 11).unwrap();
    let temps_by_beta = [-1.0, -5.0, 5.0, 1.0];
    let means: Vec<f64> = temps_by_beta
        .iter()
        .map(|&t| zoo.expected_mdl(SamplingPrior::new(t)))
        .collect();
    for pair in means.windows(2) {
        assert!(pair[0] < pair[1], "{means:?}");
    }
    // every simplicity-biased prior sits below the zoo mean, every
    // complexity-biased one above it
    let mean = zoo.mean_mdl();
    assert!(means[0] < mean && means[1] < mean);
    assert!(means[2] > mean && means[3] > mean);
}

#[test]
fn degenerate_grammars_sample_deterministically() {
    let alphabet: Vec<Symbol> = (0..3).map(Symbol::payload).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let just_a = PatternGrammar::new(alphabet.clone(), lit(0));
    for _ in 0..5 {
        assert_eq!(just_a.sample_string(&mut rng), vec![Symbol::payload(0)]);
    }
    let ab = PatternGrammar::new(
        alphabet,
        Rule::Concat(Box::new(lit(0)), Box::new(lit(1))),
    );
    for _ in 0..5 {
        assert_eq!(
            ab.sample_string(&mut rng),
            vec![Symbol::payload(0), Symbol::payload(1)]
        );
    }
}

#[test]
fn generated_strings_are_recognized() {
    let zoo = build_zoo(200, 0.0, 100.0, 21).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for g in &zoo.grammars {
        for _ in 0..3 {
            let s = g.sample_string(&mut rng);
            assert!(!s.is_empty());
            assert!(
                accepts(g, &s),
                "generated string not accepted by its own grammar: {:?} from {}",
                s,
                g.rules_sexpr()
            );
        }
    }
}

#[test]
fn sexpr_roundtrip_and_zoo_file() {
    let zoo = build_zoo(50, 0.0, 100.0, 4).unwrap();
    for g in &zoo.grammars {
        let parsed = PatternGrammar::parse_sexpr(&g.rules_sexpr()).unwrap();
        assert_eq!(parsed, g.root);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zoo.json");
    zoo.save(&path).unwrap();
    let loaded = Zoo::load(&path).unwrap();
    assert_eq!(loaded.seed, zoo.seed);
    assert_eq!(loaded.grammars.len(), zoo.grammars.len());
    for (a, b) in loaded.grammars.iter().zip(&zoo.grammars) {
        assert_eq!(a, b);
    }
}
