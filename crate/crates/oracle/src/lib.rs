//! Brute-force reference formulas.
//!
//! Everything here is written for obviousness, not speed: nested loops,
//! linear scans and two-pass statistics. Only tokenization, stop words,
//! part-of-speech tags and word similarity are borrowed from `dqi-core`;
//! every formula above those primitives is computed independently so the
//! engine can be checked against it.

use std::collections::BTreeMap;

use dqi_core::corpus::{Dataset, Label, Split};
use dqi_core::engine::{Component, Granularity, HyperParams};
use dqi_core::textprims::{is_stopword, tokenize, PosLexicon, PosTag, SimilarityProvider};

pub type Values = BTreeMap<String, f64>;

struct Sent {
    tokens: Vec<String>,
}

impl Sent {
    fn new(text: &str) -> Sent {
        Sent { tokens: tokenize(text) }
    }

    fn content(&self) -> Vec<String> {
        self.tokens.iter().filter(|t| !is_stopword(t)).cloned().collect()
    }

    fn units(&self, g: Granularity) -> Vec<String> {
        let lex = PosLexicon::bundled();
        let tagged = |want: PosTag| -> Vec<String> {
            self.tokens.iter().filter(|t| lex.tag(t) == want).cloned().collect()
        };
        let windows = |n: usize| -> Vec<String> {
            let mut out = Vec::new();
            let mut i = 0;
            while i + n <= self.tokens.len() {
                out.push(self.tokens[i..i + n].join(" "));
                i += 1;
            }
            out
        };
        match g {
            Granularity::Words => self.content(),
            Granularity::Adjectives => tagged(PosTag::Adjective),
            Granularity::Adverbs => tagged(PosTag::Adverb),
            Granularity::Verbs => tagged(PosTag::Verb),
            Granularity::Nouns => tagged(PosTag::Noun),
            Granularity::Bigrams => windows(2),
            Granularity::Trigrams => windows(3),
            Granularity::Sentences if self.tokens.is_empty() => vec![],
            Granularity::Sentences => vec![self.tokens.join(" ")],
        }
    }
}

struct Row {
    id: String,
    label: Label,
    split: Split,
    p: Sent,
    h: Sent,
}

fn rows(ds: &Dataset) -> Vec<Row> {
    ds.samples()
        .iter()
        .map(|s| Row {
            id: s.id.clone(),
            label: s.label,
            split: s.split,
            p: Sent::new(&s.premise),
            h: Sent::new(&s.hypothesis),
        })
        .collect()
}

fn sents(rows: &[Row]) -> Vec<&Sent> {
    let mut out = Vec::new();
    for r in rows {
        out.push(&r.p);
        out.push(&r.h);
    }
    out
}

/// Two-pass sample standard deviation; 0 below two values.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for x in v {
        sum += x;
    }
    let m = sum / v.len() as f64;
    let mut ss = 0.0;
    for x in v {
        ss += (x - m) * (x - m);
    }
    (ss / (v.len() - 1) as f64).sqrt()
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Document frequencies counted by scanning every sentence per term.
struct Idf {
    docs: Vec<Vec<String>>,
}

impl Idf {
    fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.docs.iter().filter(|d| d.iter().any(|t| t == term)).count() as f64;
        ((n + 1.0) / (df + 1.0)).ln() + 1.0
    }

    fn weight(&self, tokens: &[String], term: &str) -> f64 {
        tokens.iter().filter(|t| *t == term).count() as f64 * self.idf(term)
    }

    fn cos(&self, a: &[String], b: &[String]) -> f64 {
        let mut vocab: Vec<&String> = a.iter().chain(b).collect();
        vocab.sort();
        vocab.dedup();
        let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
        for t in vocab {
            let (x, y) = (self.weight(a, t), self.weight(b, t));
            dot += x * y;
            na += x * x;
            nb += y * y;
        }
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            (dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0)
        }
    }
}

fn idf_of(rows: &[Row]) -> Idf {
    Idf {
        docs: sents(rows).iter().map(|s| s.tokens.clone()).collect(),
    }
}

/// Counts of each distinct unit, sorted by unit.
fn counts(units: &[String]) -> Vec<(String, usize)> {
    let mut sorted = units.to_vec();
    sorted.sort();
    let mut out: Vec<(String, usize)> = Vec::new();
    for u in sorted {
        match out.last_mut() {
            Some((last, n)) if *last == u => *n += 1,
            _ => out.push((u, 1)),
        }
    }
    out
}

fn spread_terms(c: &[f64], gated: bool, lo: f64, hi: f64, p: &HyperParams) -> Option<(f64, f64)> {
    let mass: f64 = c.iter().sum();
    if gated && mass < p.min_granularity_mass {
        return None;
    }
    if c.len() < 2 {
        return None;
    }
    let u = c.len() as f64;
    let sigma = std_dev(&c.iter().map(|x| x / u).collect::<Vec<_>>());
    if sigma < p.sigma_epsilon || sigma == 0.0 {
        return None;
    }
    let mut t2 = 0.0;
    for x in c {
        t2 += sgn((x - lo) * (hi - x));
    }
    Some((1.0 / sigma, t2 / u))
}

pub fn c1(ds: &Dataset, p: &HyperParams) -> Values {
    let rows = rows(ds);
    let ss = sents(&rows);
    let mut vocab: Vec<String> = ss.iter().flat_map(|s| s.content()).collect();
    vocab.sort();
    vocab.dedup();
    let lens: Vec<f64> = ss.iter().map(|s| s.tokens.len() as f64).collect();
    let mut t3 = 0.0;
    for l in &lens {
        t3 += sgn((l - p.length_min) * (p.length_max - l));
    }
    t3 /= lens.len() as f64;
    let t1 = vocab.len() as f64 / rows.len() as f64;
    let t2 = std_dev(&lens);
    let mut v = Values::new();
    v.insert("c1.T1".into(), t1);
    v.insert("c1.T2".into(), t2);
    v.insert("c1.T3".into(), t3);
    v.insert("c1".into(), t1 + t2 * t3);
    v
}

pub fn c2(ds: &Dataset, p: &HyperParams) -> Values {
    let rows = rows(ds);
    let mut v = Values::new();
    let mut total = 0.0;
    for g in Granularity::ALL {
        let units: Vec<String> = sents(&rows).iter().flat_map(|s| s.units(g)).collect();
        let c: Vec<f64> = counts(&units).iter().map(|(_, n)| *n as f64).collect();
        if !c.is_empty() {
            v.insert(format!("c2.{g}.mean_frequency"), units.len() as f64 / c.len() as f64);
        }
        let b = p.bounds_for(g);
        if let Some((t1, t2)) = spread_terms(&c, g.mass_gated(), b.c, b.d, p) {
            v.insert(format!("c2.{g}.T1"), t1);
            v.insert(format!("c2.{g}.T2"), t2);
            total += t1 * t2;
        }
    }
    v.insert("c2".into(), total);
    v
}

pub fn c3(ds: &Dataset, p: &HyperParams) -> Values {
    let rows = rows(ds);
    let idf = idf_of(&rows);
    let ss = sents(&rows);
    let n = ss.len();
    let k = {
        // smallest integer not below e * (n - 1), allowing for rounding
        let target = p.top_fraction * (n - 1) as f64;
        let mut k = 0usize;
        while (k as f64) < target - 1e-12 {
            k += 1;
        }
        k
    };
    let mut below = Vec::new();
    let mut pen_total = 0.0;
    for l in 0..n {
        let mut pens = Vec::new();
        let mut b = 0.0;
        for m in 0..n {
            if m == l {
                continue;
            }
            let s = idf.cos(&ss[l].tokens, &ss[m].tokens);
            if s < p.min_similarity {
                b += 1.0;
            }
            pens.push((s - p.min_similarity).abs() - (s - p.min_similarity));
        }
        below.push(b);
        for _ in 0..k.min(pens.len()) {
            let (mut bi, mut bv) = (0, f64::NEG_INFINITY);
            for (i, x) in pens.iter().enumerate() {
                if *x > bv {
                    bi = i;
                    bv = *x;
                }
            }
            pen_total += bv;
            pens.remove(bi);
        }
    }
    let t1 = n as f64 / (std_dev(&below) + 1.0);
    let t2 = 2.0 * n as f64 / (pen_total + 1.0);
    let mut v = Values::new();
    v.insert("c3.T1".into(), t1);
    v.insert("c3.T2".into(), t2);
    v.insert("c3".into(), t1 + t2);
    v
}

pub fn c4(ds: &Dataset, prov: &SimilarityProvider, p: &HyperParams) -> Values {
    let rows = rows(ds);
    let ss = sents(&rows);
    let mut dev = 0.0;
    for s in &ss {
        let w = s.content();
        if w.len() < 2 {
            continue;
        }
        for l in 0..w.len() {
            let mut sum = 0.0;
            for m in 0..w.len() {
                if m != l {
                    sum += prov.word_similarity(&w[l], &w[m]);
                }
            }
            dev += (sum / (w.len() - 1) as f64 - p.word_similarity_target).abs();
        }
    }
    let t1 = ss.len() as f64 / (dev + 1.0);
    let mut v = Values::new();
    v.insert("c4.deviation".into(), dev);
    v.insert("c4.T1".into(), t1);
    v.insert("c4".into(), t1);
    v
}

fn unique(v: Vec<String>) -> Vec<String> {
    let mut v = v;
    v.sort();
    v.dedup();
    v
}

pub fn c5(ds: &Dataset, prov: &SimilarityProvider, p: &HyperParams) -> Values {
    let rows = rows(ds);
    let idf = idf_of(&rows);
    let n = rows.len() as f64;
    let mut sims = Vec::new();
    let mut gaps = Vec::new();
    let mut overlap = 0.0;
    let mut align = 0.0;
    for r in &rows {
        sims.push(idf.cos(&r.p.tokens, &r.h.tokens));
        gaps.push((r.p.tokens.len() as f64 - r.h.tokens.len() as f64).abs());
        let (pc, hc) = (r.p.content(), r.h.content());
        let pu = unique(pc.clone());
        let hu = unique(hc.clone());
        let shared = hu.iter().filter(|w| pu.contains(w)).count() as f64;
        overlap += (pc.len() + hc.len()) as f64 / shared.max(p.overlap_floor);
        let mut best_sum = 0.0;
        for w in &hu {
            let mut best = 0.0f64;
            for q in &pc {
                best = best.max(prov.word_similarity(w, q));
            }
            best_sum += best;
        }
        align += 1.0 / best_sum.max(p.overlap_floor);
    }
    let mut abs_dev = 0.0;
    for s in &sims {
        abs_dev += (s - p.pair_similarity_target).abs();
    }
    let terms = [
        ("T1", n / (abs_dev + 1.0)),
        ("T2", n / (gaps.iter().sum::<f64>() + 1.0)),
        ("T3", std_dev(&gaps) / n),
        ("T4", std_dev(&sims) / n),
        ("T5", overlap / n),
        ("T6", align / n),
    ];
    let mut v = Values::new();
    let mut total = 0.0;
    for (k, x) in terms {
        v.insert(format!("c5.{k}"), x);
        total += x;
    }
    v.insert("c5".into(), total);
    v
}

pub fn c6(ds: &Dataset, p: &HyperParams) -> Values {
    let rows = rows(ds);
    let mut v = Values::new();
    let mut total = 0.0;
    for label in Label::ALL {
        let mine: Vec<&Row> = rows.iter().filter(|r| r.label == label).collect();
        if mine.is_empty() {
            continue;
        }
        for g in Granularity::ALL {
            let mut units = Vec::new();
            for r in &mine {
                units.extend(r.p.units(g));
                units.extend(r.h.units(g));
            }
            let c: Vec<f64> = counts(&units).iter().map(|(_, n)| *n as f64).collect();
            if let Some((t1, t2)) = spread_terms(&c, g.mass_gated(), 0.0, p.label_cap, p) {
                v.insert(format!("c6.{label}.{g}.T1"), t1);
                v.insert(format!("c6.{label}.{g}.T2"), t2);
                total += t1 * t2;
            }
        }
        let gaps: Vec<f64> = mine
            .iter()
            .map(|r| (r.p.tokens.len() as f64 - r.h.tokens.len() as f64).abs())
            .collect();
        let size = gaps.len() as f64;
        let t3 = size / (gaps.iter().sum::<f64>() + 1.0);
        let t4 = std_dev(&gaps) / size;
        v.insert(format!("c6.{label}.T3"), t3);
        v.insert(format!("c6.{label}.T4"), t4);
        total += t3 + t4;
    }
    for g in Granularity::ALL {
        let mut all = Vec::new();
        let mut per_label: Vec<Vec<String>> = vec![Vec::new(); 3];
        for r in &rows {
            let idx = Label::ALL.iter().position(|l| *l == r.label).unwrap();
            for u in r.p.units(g).into_iter().chain(r.h.units(g)) {
                per_label[idx].push(u.clone());
                all.push(u);
            }
        }
        if g.mass_gated() && (all.len() as f64) < p.min_granularity_mass {
            continue;
        }
        let distinct = counts(&all);
        let mut spread = 0.0;
        for (u, n) in &distinct {
            if *n < 2 {
                continue;
            }
            let excess: Vec<f64> = per_label
                .iter()
                .map(|l| {
                    let k = l.iter().filter(|x| *x == u).count();
                    if k > 0 { (k - 1) as f64 } else { 0.0 }
                })
                .collect();
            spread += std_dev(&excess);
        }
        let t5 = distinct.len() as f64 / (spread + 1.0);
        v.insert(format!("c6.{g}.T5"), t5);
        total += t5;
    }
    v.insert("c6".into(), total);
    v
}

/// Returns only `c7 = 0` when either the train or the test side is empty.
pub fn c7(ds: &Dataset, p: &HyperParams) -> Values {
    let rows = rows(ds);
    let idf = idf_of(&rows);
    let joined = |r: &Row| -> Vec<String> { r.p.tokens.iter().chain(&r.h.tokens).cloned().collect() };
    let train: Vec<&Row> = rows.iter().filter(|r| r.split == Split::Train).collect();
    let test: Vec<&Row> = rows.iter().filter(|r| r.split == Split::Test).collect();
    let mut v = Values::new();
    if train.is_empty() || test.is_empty() {
        v.insert("c7.T1".into(), 0.0);
        v.insert("c7".into(), 0.0);
        return v;
    }
    let mut dev = 0.0;
    for t in &test {
        let mut best = f64::NEG_INFINITY;
        for tr in &train {
            best = best.max(idf.cos(&joined(t), &joined(tr)));
        }
        dev += (best - p.split_similarity).abs();
    }
    let t1 = test.len() as f64 / (dev + 1.0);
    v.insert("c7.deviation".into(), dev);
    v.insert("c7.T1".into(), t1);
    v.insert("c7".into(), t1);
    v
}

/// Best train match per test id, for checking the engine's match list.
pub fn c7_best_similarity(ds: &Dataset) -> BTreeMap<String, f64> {
    let rows = rows(ds);
    let idf = idf_of(&rows);
    let joined = |r: &Row| -> Vec<String> { r.p.tokens.iter().chain(&r.h.tokens).cloned().collect() };
    let mut out = BTreeMap::new();
    for t in rows.iter().filter(|r| r.split == Split::Test) {
        let mut best = f64::NEG_INFINITY;
        for tr in rows.iter().filter(|r| r.split == Split::Train) {
            best = best.max(idf.cos(&joined(t), &joined(tr)));
        }
        if best.is_finite() {
            out.insert(t.id.clone(), best);
        }
    }
    out
}

/// All component values plus the weighted `dqi` aggregate.
pub fn all(ds: &Dataset, prov: &SimilarityProvider, p: &HyperParams) -> Values {
    let mut v = Values::new();
    v.extend(c1(ds, p));
    v.extend(c2(ds, p));
    v.extend(c3(ds, p));
    v.extend(c4(ds, prov, p));
    v.extend(c5(ds, prov, p));
    v.extend(c6(ds, p));
    v.extend(c7(ds, p));
    let mut dqi = 0.0;
    for c in Component::ALL {
        dqi += p.weight(c) * v[c.key()];
    }
    v.insert("dqi".into(), dqi);
    v
}

/// Relative closeness with an absolute floor of `tol` near zero.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Keys whose values disagree, or that only one side has.
pub fn mismatches(engine: &Values, oracle: &Values, tol: f64) -> Vec<String> {
    let mut keys: Vec<&String> = engine.keys().chain(oracle.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter(|k| match (engine.get(*k), oracle.get(*k)) {
            (Some(a), Some(b)) => !close(*a, *b, tol),
            _ => true,
        })
        .map(|k| k.to_string())
        .collect()
}

const POOL: &[&str] = &[
    "a", "the", "man", "woman", "dog", "dogs", "kids", "walks", "running", "plays", "guitar", "red",
    "quickly", "slowly", "happy", "street", "park", "ball", "is", "are", "on", "in", "two", "near",
    "painted", "jumped", "bright", "famous", "beautiful", "sleeping", "cat", "market", "boy", "girl",
    "water", "outside", "with", "of", "an", "eating", "apple", "3", "sits", "bench", "old", "young",
];

/// A random corpus of `1..=max_samples` samples drawn from a small
/// vocabulary, with random labels and splits. Some hypotheses copy their
/// premise and some samples repeat earlier ones, so overlaps, duplicates
/// and leaks all occur.
pub fn random_dataset(seed: u64, max_samples: usize) -> Dataset {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_samples);
    generate(&mut rng, n)
}

/// Like [`random_dataset`] with exactly `n` samples.
pub fn random_dataset_of(seed: u64, n: usize) -> Dataset {
    use rand::SeedableRng;
    generate(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed), n)
}

fn generate(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Dataset {
    use dqi_core::corpus::Sample;
    use rand::Rng;

    let sentence = |rng: &mut rand_chacha::ChaCha8Rng| -> String {
        let len = rng.random_range(1..=14);
        let words: Vec<&str> = (0..len).map(|_| POOL[rng.random_range(0..POOL.len())]).collect();
        let mut s = words.join(" ");
        s.push('.');
        s
    };
    let mut samples: Vec<Sample> = Vec::with_capacity(n);
    for i in 0..n {
        let label = Label::ALL[rng.random_range(0..3)];
        let split = [Split::Train, Split::Dev, Split::Test, Split::Unassigned][rng.random_range(0..4)];
        let (premise, hypothesis) = match rng.random_range(0..10) {
            0 if !samples.is_empty() => {
                let prev = &samples[rng.random_range(0..samples.len())];
                (prev.premise.clone(), prev.hypothesis.clone())
            }
            1 => {
                let p = sentence(rng);
                (p.clone(), p)
            }
            _ => (sentence(rng), sentence(rng)),
        };
        samples.push(Sample::new(format!("r{i:02}"), premise, hypothesis, label).with_split(split));
    }
    Dataset::from_samples(samples).expect("generated ids are unique")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std_dev_matches_hand_value() {
        assert!((std_dev(&[11.0, 8.0]) - 2.1213203435596424).abs() < 1e-12);
        assert_eq!(std_dev(&[4.0]), 0.0);
    }

    #[test]
    fn counts_group_sorted_units() {
        let u: Vec<String> = ["b", "a", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(counts(&u), vec![("a".to_string(), 1), ("b".to_string(), 2)]);
    }
}
