use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Collapsed Gibbs sampler state for LDA with symmetric priors.
///
/// Counts are kept as flat arrays: `doc_topic[d * k + l]` and
/// `term_topic[w * k + l]` (term-major so one token's topic weights are
/// contiguous).
pub struct GibbsSampler {
    k: usize,
    n_terms: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u32>>,
    doc_topic: Vec<u32>,
    term_topic: Vec<u32>,
    topic_total: Vec<u64>,
    rng: ChaCha8Rng,
    cumulative: Vec<f64>,
}

impl GibbsSampler {
    /// Random initial assignment of every token. `docs` hold term ids below `n_terms`.
    pub fn new(docs: Vec<Vec<u32>>, n_terms: usize, k: usize, alpha: f64, beta: f64, seed: u64) -> Self {
        assert!(k >= 1, "k must be >= 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut doc_topic = vec![0u32; docs.len() * k];
        let mut term_topic = vec![0u32; n_terms * k];
        let mut topic_total = vec![0u64; k];
        let z = docs
            .iter()
            .enumerate()
            .map(|(d, words)| {
                words
                    .iter()
                    .map(|&w| {
                        let l = rng.random_range(0..k);
                        doc_topic[d * k + l] += 1;
                        term_topic[w as usize * k + l] += 1;
                        topic_total[l] += 1;
                        l as u32
                    })
                    .collect()
            })
            .collect();
        GibbsSampler {
            k,
            n_terms,
            alpha,
            beta,
            docs,
            z,
            doc_topic,
            term_topic,
            topic_total,
            rng,
            cumulative: vec![0.0; k],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    /// Resample every token once, in document order.
    pub fn sweep(&mut self) {
        let k = self.k;
        let v_beta = self.n_terms as f64 * self.beta;
        let GibbsSampler {
            docs,
            z,
            doc_topic,
            term_topic,
            topic_total,
            rng,
            cumulative,
            alpha,
            beta,
            ..
        } = self;
        for (d, words) in docs.iter().enumerate() {
            let dt = &mut doc_topic[d * k..(d + 1) * k];
            for (i, &w) in words.iter().enumerate() {
                let w = w as usize;
                let old = z[d][i] as usize;
                dt[old] -= 1;
                term_topic[w * k + old] -= 1;
                topic_total[old] -= 1;

                let tt = &term_topic[w * k..(w + 1) * k];
                let mut acc = 0.0;
                for l in 0..k {
                    acc += (dt[l] as f64 + *alpha) * (tt[l] as f64 + *beta) / (topic_total[l] as f64 + v_beta);
                    cumulative[l] = acc;
                }
                let u = rng.random::<f64>() * acc;
                let new = cumulative.partition_point(|&c| c <= u).min(k - 1);

                z[d][i] = new as u32;
                dt[new] += 1;
                term_topic[w * k + new] += 1;
                topic_total[new] += 1;
            }
        }
    }

    /// Verify that the count tables agree with the token assignments.
    pub fn check_counts(&self) -> Result<(), String> {
        let k = self.k;
        let mut doc_topic = vec![0u32; self.doc_topic.len()];
        let mut term_topic = vec![0u32; self.term_topic.len()];
        for (d, (words, zs)) in self.docs.iter().zip(&self.z).enumerate() {
            for (&w, &l) in words.iter().zip(zs) {
                doc_topic[d * k + l as usize] += 1;
                term_topic[w as usize * k + l as usize] += 1;
            }
            let row: u64 = self.doc_topic[d * k..(d + 1) * k].iter().map(|&c| c as u64).sum();
            if row != words.len() as u64 {
                return Err(format!("doc {d}: topic counts sum to {row}, length {}", words.len()));
            }
        }
        if doc_topic != self.doc_topic {
            return Err("doc-topic counts disagree with assignments".into());
        }
        if term_topic != self.term_topic {
            return Err("term-topic counts disagree with assignments".into());
        }
        for l in 0..k {
            let column: u64 = (0..self.n_terms).map(|w| self.term_topic[w * k + l] as u64).sum();
            if column != self.topic_total[l] {
                return Err(format!(
                    "topic {l}: term counts sum to {column}, total {}",
                    self.topic_total[l]
                ));
            }
        }
        Ok(())
    }

    /// Smoothed p(term | topic), as `k` rows over term ids.
    pub fn term_given_topic(&self) -> Vec<Vec<f64>> {
        let k = self.k;
        let v_beta = self.n_terms as f64 * self.beta;
        (0..k)
            .map(|l| {
                let denom = self.topic_total[l] as f64 + v_beta;
                (0..self.n_terms)
                    .map(|w| (self.term_topic[w * k + l] as f64 + self.beta) / denom)
                    .collect()
            })
            .collect()
    }

    /// Smoothed p(topic | doc) for document `d`.
    pub fn topic_given_doc(&self, d: usize) -> Vec<f64> {
        let k = self.k;
        let denom = self.docs[d].len() as f64 + k as f64 * self.alpha;
        self.doc_topic[d * k..(d + 1) * k]
            .iter()
            .map(|&c| (c as f64 + self.alpha) / denom)
            .collect()
    }
}

/// Sample topics for one unseen document against fixed topic-term
/// probabilities, returning the mixture averaged over post-burn-in sweeps.
pub(crate) fn fold_in(
    words: &[u32],
    term_given_topic: &[Vec<f64>],
    alpha: f64,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
) -> Vec<f64> {
    let k = term_given_topic.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u32; k];
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| {
            let l = rng.random_range(0..k);
            counts[l] += 1;
            l
        })
        .collect();
    let mut cumulative = vec![0.0; k];
    let mut mean = vec![0.0; k];
    let denom = words.len() as f64 + k as f64 * alpha;
    for sweep in 0..sweeps {
        for (i, &w) in words.iter().enumerate() {
            counts[z[i]] -= 1;
            let mut acc = 0.0;
            for l in 0..k {
                acc += (counts[l] as f64 + alpha) * term_given_topic[l][w as usize];
                cumulative[l] = acc;
            }
            let u = rng.random::<f64>() * acc;
            let new = cumulative.partition_point(|&c| c <= u).min(k - 1);
            z[i] = new;
            counts[new] += 1;
        }
        if sweep >= burn_in {
            for l in 0..k {
                mean[l] += (counts[l] as f64 + alpha) / denom;
            }
        }
    }
    let total: f64 = mean.iter().sum();
    mean.iter().map(|m| m / total).collect()
}
