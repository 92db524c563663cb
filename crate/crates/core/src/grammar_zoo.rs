//! A 5000-grammar surrogate zoo graded by description length. Pattern
//! grammars are expression trees over five primitives with an explicit bit
//! cost; the zoo is rejection-sampled so the scores spread uniformly over a
//! target range, and grammars are drawn under a temperature softmax over
//! their scores.

use crate::rngs::{substream, Stream};
use crate::vocab::Symbol;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZooError {
    #[error("bin {bin} of {nbins} could not be filled within {attempts} attempts")]
    BinUnfillable {
        bin: usize,
        nbins: usize,
        attempts: u64,
    },
    #[error("bad grammar expression: {0}")]
    Parse(String),
    #[error("stored mdl {stored} does not match recomputed {recomputed}")]
    MdlMismatch { stored: f64, recomputed: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Number of rule primitives; selecting one costs `log2(NUM_PRIMITIVES)`
/// bits at every tree node.
pub const NUM_PRIMITIVES: usize = 5;

/// Expression tree over the five pattern primitives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    Literal(Symbol),
    Concat(Box<Rule>, Box<Rule>),
    Union(Box<Rule>, Box<Rule>),
    /// Between 1 and `max` copies of the body.
    Repeat { body: Box<Rule>, max: u32 },
    /// One or more copies of the body; generation continues each copy with
    /// probability 1/2 and stops extending past 50 tokens.
    RepeatUnbounded(Box<Rule>),
}

/// Deterministic bit cost of a rule tree: every node pays the primitive
/// selector `log2(5)`, literals pay `log2(|alphabet|)`, bounded repetitions
/// pay `2*log2(max+1)` for the bound.
pub fn mdl_score(rule: &Rule, alphabet_len: usize) -> f64 {
    let selector = (NUM_PRIMITIVES as f64).log2();
    match rule {
        Rule::Literal(_) => selector + (alphabet_len as f64).log2(),
        Rule::Concat(l, r) | Rule::Union(l, r) => {
            selector + mdl_score(l, alphabet_len) + mdl_score(r, alphabet_len)
        }
        Rule::Repeat { body, max } => {
            selector + 2.0 * ((*max as f64) + 1.0).log2() + mdl_score(body, alphabet_len)
        }
        Rule::RepeatUnbounded(body) => selector + mdl_score(body, alphabet_len),
    }
}

/// Maximum token length at which unbounded repetition stops extending.
pub const GENERATION_TRUNCATION: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct PatternGrammar {
    /// Payload symbols this grammar draws literals from (2..=7 of them).
    pub alphabet: Vec<Symbol>,
    pub root: Rule,
    /// `mdl_score(root, alphabet.len())`, cached at construction.
    pub mdl_bits: f64,
}

impl PatternGrammar {
    pub fn new(alphabet: Vec<Symbol>, root: Rule) -> PatternGrammar {
        let mdl_bits = mdl_score(&root, alphabet.len());
        PatternGrammar {
            alphabet,
            root,
            mdl_bits,
        }
    }

    /// Top-down stochastic expansion: unions pick a branch uniformly,
    /// bounded repetitions pick a count uniformly in `1..=max`, unbounded
    /// repetitions flip a fair coin per extra copy. Copies are never cut
    /// mid-expansion, so the output is always in the grammar's language.
    pub fn sample_string<R: Rng>(&self, rng: &mut R) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.expand(&self.root, rng, &mut out);
        out
    }

    fn expand<R: Rng>(&self, rule: &Rule, rng: &mut R, out: &mut Vec<Symbol>) {
        match rule {
            Rule::Literal(sym) => out.push(*sym),
            Rule::Concat(l, r) => {
                self.expand(l, rng, out);
                self.expand(r, rng, out);
            }
            Rule::Union(l, r) => {
                let branch = if rng.gen_bool(0.5) { l } else { r };
                self.expand(branch, rng, out);
            }
            Rule::Repeat { body, max } => {
                let copies = rng.gen_range(1..=*max);
                for _ in 0..copies {
                    self.expand(body, rng, out);
                }
            }
            Rule::RepeatUnbounded(body) => {
                self.expand(body, rng, out);
                while out.len() < GENERATION_TRUNCATION && rng.gen_bool(0.5) {
                    self.expand(body, rng, out);
                }
            }
        }
    }

    /// S-expression form, e.g. `(cat (lit 3) (star (alt (lit 4) (lit 5))))`.
    pub fn rules_sexpr(&self) -> String {
        fn write(rule: &Rule, out: &mut String) {
            match rule {
                Rule::Literal(s) => {
                    out.push_str(&format!("(lit {})", s.id()));
                }
                Rule::Concat(l, r) => {
                    out.push_str("(cat ");
                    write(l, out);
                    out.push(' ');
                    write(r, out);
                    out.push(')');
                }
                Rule::Union(l, r) => {
                    out.push_str("(alt ");
                    write(l, out);
                    out.push(' ');
                    write(r, out);
                    out.push(')');
                }
                Rule::Repeat { body, max } => {
                    out.push_str(&format!("(rep {max} "));
                    write(body, out);
                    out.push(')');
                }
                Rule::RepeatUnbounded(body) => {
                    out.push_str("(star ");
                    write(body, out);
                    out.push(')');
                }
            }
        }
        let mut s = String::new();
        write(&self.root, &mut s);
        s
    }

    pub fn parse_sexpr(text: &str) -> Result<Rule, ZooError> {
        let tokens = tokenize(text);
        let mut pos = 0;
        let rule = parse_rule(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(ZooError::Parse("trailing tokens".into()));
        }
        Ok(rule)
    }
}

fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

fn parse_rule(tokens: &[String], pos: &mut usize) -> Result<Rule, ZooError> {
    let expect = |pos: &mut usize, tok: &str| -> Result<(), ZooError> {
        if tokens.get(*pos).map(String::as_str) == Some(tok) {
            *pos += 1;
            Ok(())
        } else {
            Err(ZooError::Parse(format!(
                "expected '{tok}' at token {}",
                *pos
            )))
        }
    };
    expect(pos, "(")?;
    let head = tokens
        .get(*pos)
        .ok_or_else(|| ZooError::Parse("unexpected end".into()))?
        .clone();
    *pos += 1;
    let rule = match head.as_str() {
        "lit" => {
            let id: u8 = tokens
                .get(*pos)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| ZooError::Parse("bad literal id".into()))?;
            *pos += 1;
            let sym = Symbol::new(id)
                .filter(|s| s.is_payload())
                .ok_or_else(|| ZooError::Parse(format!("id {id} is not a payload symbol")))?;
            Rule::Literal(sym)
        }
        "cat" => {
            let l = parse_rule(tokens, pos)?;
            let r = parse_rule(tokens, pos)?;
            Rule::Concat(Box::new(l), Box::new(r))
        }
        "alt" => {
            let l = parse_rule(tokens, pos)?;
            let r = parse_rule(tokens, pos)?;
            Rule::Union(Box::new(l), Box::new(r))
        }
        "rep" => {
            let max: u32 = tokens
                .get(*pos)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| ZooError::Parse("bad repetition bound".into()))?;
            *pos += 1;
            let body = parse_rule(tokens, pos)?;
            Rule::Repeat {
                body: Box::new(body),
                max,
            }
        }
        "star" => {
            let body = parse_rule(tokens, pos)?;
            Rule::RepeatUnbounded(Box::new(body))
        }
        other => return Err(ZooError::Parse(format!("unknown primitive '{other}'"))),
    };
    expect(pos, ")")?;
    Ok(rule)
}

/// Temperature of the softmax prior over grammar scores: negative prefers
/// simple grammars, positive prefers complex ones, large magnitudes
/// approach uniform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPrior {
    pub temperature: f64,
}

impl SamplingPrior {
    pub fn new(temperature: f64) -> SamplingPrior {
        assert!(
            temperature != 0.0 && temperature.is_finite(),
            "temperature must be nonzero and finite"
        );
        SamplingPrior { temperature }
    }
}

#[derive(Clone, Debug)]
pub struct Zoo {
    pub grammars: Vec<PatternGrammar>,
    /// Master seed the zoo was built from.
    pub seed: u64,
}

const NBINS: usize = 10;

/// Rejection-samples random rule trees, binning by score, until every decile
/// of `[mdl_lo, mdl_hi]` holds its share of `n`. Reproducible from the seed.
pub fn build_zoo(n: usize, mdl_lo: f64, mdl_hi: f64, seed: u64) -> Result<Zoo, ZooError> {
    assert!(n >= 1 && mdl_hi > mdl_lo);
    let mut rng = substream(seed, Stream::ZooBuild, 0);
    // bin targets: n split as evenly as possible, remainder to low bins
    let mut targets = [n / NBINS; NBINS];
    for target in targets.iter_mut().take(n % NBINS) {
        *target += 1;
    }
    let mut bins: Vec<Vec<PatternGrammar>> = vec![Vec::new(); NBINS];
    let max_attempts = 200_000 + 2_000 * n as u64;
    let width = (mdl_hi - mdl_lo) / NBINS as f64;
    let mut attempts = 0;
    while bins.iter().zip(&targets).any(|(b, &t)| b.len() < t) {
        if attempts >= max_attempts {
            let bin = bins
                .iter()
                .zip(&targets)
                .position(|(b, &t)| b.len() < t)
                .unwrap();
            return Err(ZooError::BinUnfillable {
                bin,
                nbins: NBINS,
                attempts,
            });
        }
        attempts += 1;
        let g = random_grammar(&mut rng);
        if g.mdl_bits < mdl_lo || g.mdl_bits > mdl_hi {
            continue;
        }
        let bin = (((g.mdl_bits - mdl_lo) / width) as usize).min(NBINS - 1);
        if bins[bin].len() < targets[bin] {
            bins[bin].push(g);
        }
    }
    Ok(Zoo {
        grammars: bins.concat(),
        seed,
    })
}

fn random_grammar<R: Rng>(rng: &mut R) -> PatternGrammar {
    let alphabet_len = rng.gen_range(2..=crate::vocab::NUM_PAYLOAD);
    let alphabet: Vec<Symbol> = (0..alphabet_len).map(Symbol::payload).collect();
    let budget = rng.gen_range(1..=48);
    let root = random_rule(rng, &alphabet, budget);
    PatternGrammar::new(alphabet, root)
}

fn random_rule<R: Rng>(rng: &mut R, alphabet: &[Symbol], budget: usize) -> Rule {
    let literal = |rng: &mut R| Rule::Literal(alphabet[rng.gen_range(0..alphabet.len())]);
    if budget <= 1 {
        return literal(rng);
    }
    // binary nodes need room for two children
    let roll = if budget >= 3 {
        rng.gen_range(0..100)
    } else {
        rng.gen_range(55..100)
    };
    match roll {
        0..=54 => {
            // concat or union, budget-1 split between the children
            let left = rng.gen_range(1..=budget - 2);
            let l = random_rule(rng, alphabet, left);
            let r = random_rule(rng, alphabet, budget - 1 - left);
            if roll < 35 {
                Rule::Concat(Box::new(l), Box::new(r))
            } else {
                Rule::Union(Box::new(l), Box::new(r))
            }
        }
        55..=69 => Rule::Repeat {
            body: Box::new(random_rule(rng, alphabet, budget - 1)),
            max: rng.gen_range(2..=8),
        },
        70..=79 => Rule::RepeatUnbounded(Box::new(random_rule(rng, alphabet, budget - 1))),
        _ => literal(rng),
    }
}

impl Zoo {
    /// Histogram of scores over `nbins` equal bins of `[lo, hi]`.
    pub fn histogram(&self, lo: f64, hi: f64, nbins: usize) -> Vec<usize> {
        let mut hist = vec![0usize; nbins];
        let width = (hi - lo) / nbins as f64;
        for g in &self.grammars {
            let bin = (((g.mdl_bits - lo) / width) as usize).min(nbins - 1);
            hist[bin] += 1;
        }
        hist
    }

    /// Softmax weights `exp(mdl_i / T)`, normalized. Max-shifted so the
    /// weights stay finite and positive at any temperature.
    pub fn softmax_weights(&self, prior: SamplingPrior) -> Vec<f64> {
        let scaled: Vec<f64> = self
            .grammars
            .iter()
            .map(|g| g.mdl_bits / prior.temperature)
            .collect();
        let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = scaled.iter().map(|&s| (s - max).exp()).collect();
        let total: f64 = unnorm.iter().sum();
        unnorm.into_iter().map(|w| w / total).collect()
    }

    /// Exact expectation of the score under the softmax prior.
    pub fn expected_mdl(&self, prior: SamplingPrior) -> f64 {
        self.softmax_weights(prior)
            .iter()
            .zip(&self.grammars)
            .map(|(w, g)| w * g.mdl_bits)
            .sum()
    }

    pub fn sampler(&self, prior: SamplingPrior) -> GrammarSampler {
        let mut cumulative = self.softmax_weights(prior);
        let mut acc = 0.0;
        for w in cumulative.iter_mut() {
            acc += *w;
            *w = acc;
        }
        GrammarSampler { cumulative }
    }

    pub fn mean_mdl(&self) -> f64 {
        self.grammars.iter().map(|g| g.mdl_bits).sum::<f64>() / self.grammars.len() as f64
    }

    pub fn save(&self, path: &Path) -> Result<(), ZooError> {
        let file = ZooFile {
            seed: self.seed,
            grammars: self
                .grammars
                .iter()
                .map(|g| GrammarRecord {
                    rules: g.rules_sexpr(),
                    mdl: g.mdl_bits,
                    alphabet: g.alphabet.iter().map(|s| s.id() as u8).collect(),
                })
                .collect(),
        };
        let json = serde_json::to_string(&file)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Zoo, ZooError> {
        let text = std::fs::read_to_string(path)?;
        let file: ZooFile = serde_json::from_str(&text)?;
        let grammars = file
            .grammars
            .into_iter()
            .map(|rec| {
                let alphabet: Option<Vec<Symbol>> = rec
                    .alphabet
                    .iter()
                    .map(|&id| Symbol::new(id).filter(|s| s.is_payload()))
                    .collect();
                let alphabet =
                    alphabet.ok_or_else(|| ZooError::Parse("bad alphabet id".into()))?;
                let root = PatternGrammar::parse_sexpr(&rec.rules)?;
                let g = PatternGrammar::new(alphabet, root);
                if (g.mdl_bits - rec.mdl).abs() > 1e-9 {
                    return Err(ZooError::MdlMismatch {
                        stored: rec.mdl,
                        recomputed: g.mdl_bits,
                    });
                }
                Ok(g)
            })
            .collect::<Result<Vec<_>, ZooError>>()?;
        Ok(Zoo {
            grammars,
            seed: file.seed,
        })
    }
}

/// Draws grammar indices with probability proportional to `exp(mdl_i / T)`.
pub struct GrammarSampler {
    cumulative: Vec<f64>,
}

impl GrammarSampler {
    pub fn sample_index<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&u).unwrap())
        {
            Ok(i) | Err(i) => i.min(self.cumulative.len() - 1),
        }
    }
}

/// One softmax draw from the zoo. Building a [`GrammarSampler`] is cheaper
/// when drawing many times.
pub fn sample_grammar<'z, R: Rng>(
    zoo: &'z Zoo,
    prior: SamplingPrior,
    rng: &mut R,
) -> &'z PatternGrammar {
    let idx = zoo.sampler(prior).sample_index(rng);
    &zoo.grammars[idx]
}

#[derive(Serialize, Deserialize)]
struct ZooFile {
    seed: u64,
    grammars: Vec<GrammarRecord>,
}

#[derive(Serialize, Deserialize)]
struct GrammarRecord {
    rules: String,
    mdl: f64,
    alphabet: Vec<u8>,
}

#[cfg(test)]
mod tests;
