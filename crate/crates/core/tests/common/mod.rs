#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use venrec_core::{Corpus, Document, SubprofileSet, TokenizedDoc};

pub const WORDS: [&str; 12] = [
    "alpha", "bravo", "charli", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet", "kilo", "lima",
];

pub fn doc(id: &str, venue: &str, year: i32, text: &str) -> Document {
    Document {
        doc_id: id.into(),
        venue_id: venue.into(),
        year,
        title: text.into(),
        abstract_text: String::new(),
        keywords: vec![],
    }
}

/// `n_docs` documents spread over `n_items` items and `years`, with short
/// texts over [`WORDS`]. Every item gets at least one document.
pub fn random_corpus(seed: u64, n_items: usize, n_docs: usize, years: (i32, i32)) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs = (0..n_docs)
        .map(|d| {
            let item = if d < n_items { d } else { rng.random_range(0..n_items) };
            let len = rng.random_range(1..6);
            let text: Vec<&str> = (0..len).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
            doc(
                &format!("d{d:05}"),
                &format!("i{item:03}"),
                rng.random_range(years.0..=years.1),
                &text.join(" "),
            )
        })
        .collect();
    Corpus::new(docs).unwrap()
}

pub fn partition(set: &SubprofileSet) -> BTreeSet<BTreeSet<String>> {
    set.subprofiles
        .iter()
        .map(|s| s.member_doc_ids.iter().cloned().collect())
        .collect()
}

/// RSV of every subprofile computed straight from the formula over raw
/// token streams; subprofiles sharing no term with the query are omitted.
pub fn brute_force_rsv(
    set: &SubprofileSet,
    docs: &[TokenizedDoc],
    query: &[String],
    lambda: f64,
) -> BTreeMap<usize, f64> {
    let by_id: HashMap<&str, &TokenizedDoc> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let units: Vec<Vec<&str>> = set
        .subprofiles
        .iter()
        .map(|s| {
            s.member_doc_ids
                .iter()
                .flat_map(|id| by_id[id.as_str()].tokens.iter().map(String::as_str))
                .collect()
        })
        .collect();
    let total: usize = units.iter().map(Vec::len).sum();
    let cf = |t: &str| units.iter().flatten().filter(|&&w| w == t).count();
    let mut out = BTreeMap::new();
    for (s, unit) in units.iter().enumerate() {
        let mut rsv = 0.0;
        let mut matched = false;
        for t in query {
            let tf = unit.iter().filter(|&&w| w == t).count();
            if tf == 0 {
                continue;
            }
            matched = true;
            let p_doc = (1.0 - lambda) * tf as f64 / unit.len() as f64;
            let p_coll = lambda * cf(t) as f64 / total as f64;
            rsv += (1.0 + p_doc / p_coll).ln();
        }
        if matched {
            out.insert(s, rsv);
        }
    }
    out
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
