use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbedError, EmbeddingModel, Vocab};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub dim: usize,
    pub learning_rate: f64,
    /// Floor of the linear learning-rate decay.
    pub min_learning_rate: f64,
    pub min_count: u64,
    /// Frequent-token subsampling threshold; off when `None`.
    pub subsample: Option<f64>,
    /// 1 trains deterministically; more uses lock-free shared updates.
    pub threads: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            window: 2,
            negatives: 5,
            epochs: 5,
            dim: 100,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            min_count: 1,
            subsample: None,
            threads: 1,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |m: &str| Err(EmbedError::Config(m.to_string()));
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.epochs == 0 || self.dim == 0 || self.threads == 0 {
            return bad("epochs, dim and threads must be positive");
        }
        if !(self.min_learning_rate > 0.0 && self.learning_rate >= self.min_learning_rate) {
            return bad("need learning_rate >= min_learning_rate > 0");
        }
        if self.subsample.is_some_and(|t| t.is_nan() || t <= 0.0) {
            return bad("subsample threshold must be positive");
        }
        Ok(())
    }
}

/// Mean negative-sampling loss per training pair, one entry per epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    pub epoch_pairs: Vec<usize>,
}

/// Draws vocabulary indices with probability proportional to `count^0.75`.
#[derive(Debug, Clone)]
pub struct UnigramSampler {
    dist: WeightedIndex<f64>,
    probs: Vec<f64>,
}

impl UnigramSampler {
    pub fn new(counts: &[u64]) -> Self {
        let weights: Vec<f64> = counts.iter().map(|&c| (c.max(1) as f64).powf(0.75)).collect();
        let total: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / total).collect();
        UnigramSampler {
            dist: WeightedIndex::new(&weights).expect("non-empty positive weights"),
            probs,
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }
}

/// `(center, context)` position pairs within `±window`, centers in order.
pub fn context_pairs(len: usize, window: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..len {
        for j in i.saturating_sub(window)..(i + window + 1).min(len) {
            if j != i {
                out.push((i, j));
            }
        }
    }
    out
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Loss and gradients of one skip-gram pair with negative samples:
/// `-ln σ(u_o·v) - Σ_k ln σ(-u_k·v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub loss: f64,
    pub d_center: Vec<f64>,
    pub d_context: Vec<f64>,
    pub d_negatives: Vec<Vec<f64>>,
}

pub fn pair_gradient(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let dim = center.len();
    let mut d_center = vec![0.0; dim];
    let s = super::dot(center, context);
    let g = sigmoid(s) - 1.0;
    let mut loss = softplus(-s);
    let d_context = center.iter().map(|c| g * c).collect();
    for (dc, u) in d_center.iter_mut().zip(context) {
        *dc += g * u;
    }
    let mut d_negatives = Vec::with_capacity(negatives.len());
    for &n in negatives {
        let s = super::dot(center, n);
        let g = sigmoid(s);
        loss += softplus(s);
        d_negatives.push(center.iter().map(|c| g * c).collect());
        for (dc, u) in d_center.iter_mut().zip(n) {
            *dc += g * u;
        }
    }
    PairGradient {
        loss,
        d_center,
        d_context,
        d_negatives,
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

struct Shared {
    input: Vec<AtomicU64>,
    output: Vec<AtomicU64>,
}

impl Shared {
    fn read(m: &[AtomicU64], dim: usize, i: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(m[i * dim..(i + 1) * dim].iter().map(|a| f64::from_bits(a.load(Ordering::Relaxed))));
    }

    // Racy read-modify-write under several threads; updates may be lost.
    fn sub(m: &[AtomicU64], dim: usize, i: usize, lr: f64, grad: &[f64]) {
        for (a, g) in m[i * dim..(i + 1) * dim].iter().zip(grad) {
            let x = f64::from_bits(a.load(Ordering::Relaxed));
            a.store((x - lr * g).to_bits(), Ordering::Relaxed);
        }
    }
}

struct EpochTotals {
    loss: f64,
    pairs: usize,
}

/// Train skip-gram vectors over `sequences` (unknown tokens are dropped).
///
/// Every token within `±window` of a center is a context; each pair draws
/// `negatives` samples from the `count^0.75` distribution, skipping draws
/// equal to the context. The learning rate decays linearly with processed
/// centers down to the floor. With one thread the result is a pure function
/// of the inputs and seed.
pub fn train<S: AsRef<str> + Sync>(sequences: &[Vec<S>], vocab: Vocab, config: &TrainConfig) -> Result<(EmbeddingModel, TrainReport), EmbedError> {
    config.validate()?;
    if vocab.is_empty() {
        return Err(EmbedError::EmptyVocab {
            min_count: config.min_count,
        });
    }
    let dim = config.dim;
    let n = vocab.len();
    let mut init = ChaCha8Rng::seed_from_u64(config.seed);
    let input: Vec<AtomicU64> = (0..n * dim)
        .map(|_| AtomicU64::new(((init.gen::<f64>() - 0.5) / dim as f64).to_bits()))
        .collect();
    let output: Vec<AtomicU64> = (0..n * dim).map(|_| AtomicU64::new(0f64.to_bits())).collect();
    let shared = Shared { input, output };
    let encoded: Vec<Vec<usize>> = sequences.iter().map(|s| vocab.encode(s)).collect();
    let sampler = UnigramSampler::new(vocab.counts());
    let total_count: u64 = vocab.counts().iter().sum();
    let keep_prob: Vec<f64> = vocab
        .counts()
        .iter()
        .map(|&c| match config.subsample {
            Some(t) => {
                let f = c as f64 / total_count.max(1) as f64;
                (((f / t).sqrt() + 1.0) * t / f).min(1.0)
            }
            None => 1.0,
        })
        .collect();
    let words_per_epoch: usize = encoded.iter().map(Vec::len).sum();
    let total_words = (words_per_epoch * config.epochs).max(1);
    let progress = AtomicUsize::new(0);
    let mut report = TrainReport::default();

    for epoch in 0..config.epochs {
        let threads = config.threads.min(encoded.len()).max(1);
        let chunk = encoded.len().div_ceil(threads).max(1);
        let worker = |t: usize, part: &[Vec<usize>]| -> Result<EpochTotals, EmbedError> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0000_0000_0000);
            rng.set_stream((epoch * config.threads + t) as u64 + 1);
            let mut totals = EpochTotals { loss: 0.0, pairs: 0 };
            let (mut vc, mut uo) = (Vec::with_capacity(dim), Vec::with_capacity(dim));
            let mut negs: Vec<Vec<f64>> = Vec::new();
            let mut neg_ids: Vec<usize> = Vec::new();
            for seq in part {
                let kept: Vec<usize> = if config.subsample.is_some() {
                    seq.iter().copied().filter(|&w| rng.gen::<f64>() < keep_prob[w]).collect()
                } else {
                    seq.clone()
                };
                let done = progress.fetch_add(seq.len(), Ordering::Relaxed);
                let lr = (config.learning_rate * (1.0 - done as f64 / total_words as f64)).max(config.min_learning_rate);
                for (ci, oi) in context_pairs(kept.len(), config.window) {
                    let (c, o) = (kept[ci], kept[oi]);
                    neg_ids.clear();
                    while neg_ids.len() < config.negatives {
                        let k = sampler.sample(&mut rng);
                        if k != o || n == 1 {
                            neg_ids.push(k);
                        }
                    }
                    Shared::read(&shared.input, dim, c, &mut vc);
                    Shared::read(&shared.output, dim, o, &mut uo);
                    negs.resize_with(neg_ids.len(), Vec::new);
                    for (buf, &k) in negs.iter_mut().zip(&neg_ids) {
                        Shared::read(&shared.output, dim, k, buf);
                    }
                    let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
                    let g = pair_gradient(&vc, &uo, &neg_refs);
                    if !g.loss.is_finite() {
                        return Err(EmbedError::NonFiniteLoss {
                            epoch,
                            token: vocab.tokens()[c].clone(),
                        });
                    }
                    totals.loss += g.loss;
                    totals.pairs += 1;
                    Shared::sub(&shared.input, dim, c, lr, &g.d_center);
                    Shared::sub(&shared.output, dim, o, lr, &g.d_context);
                    for (&k, d) in neg_ids.iter().zip(&g.d_negatives) {
                        Shared::sub(&shared.output, dim, k, lr, d);
                    }
                }
            }
            Ok(totals)
        };
        let results: Vec<Result<EpochTotals, EmbedError>> = if threads == 1 {
            vec![worker(0, &encoded)]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = encoded
                    .chunks(chunk)
                    .enumerate()
                    .map(|(t, part)| {
                        let worker = &worker;
                        s.spawn(move || worker(t, part))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
            })
        };
        let mut loss = 0.0;
        let mut pairs = 0;
        for r in results {
            let t = r?;
            loss += t.loss;
            pairs += t.pairs;
        }
        let mean = if pairs == 0 { 0.0 } else { loss / pairs as f64 };
        log::info!("epoch {}: mean loss {mean:.6} over {pairs} pairs", epoch + 1);
        report.epoch_losses.push(mean);
        report.epoch_pairs.push(pairs);
    }

    let unwrap = |m: Vec<AtomicU64>| -> Vec<f64> { m.into_iter().map(|a| f64::from_bits(a.into_inner())).collect() };
    let model = EmbeddingModel {
        vocab,
        dim,
        input: unwrap(shared.input),
        output: unwrap(shared.output),
    };
    if model.input.iter().any(|x| !x.is_finite()) {
        return Err(EmbedError::NonFiniteLoss {
            epoch: config.epochs,
            token: String::new(),
        });
    }
    Ok((model, report))
}
