//! Smoothed posterior estimates and training perplexity.

use crate::error::{Error, Result};
use crate::corpus::Corpus;
use crate::sampler::GibbsState;

/// Smoothed point estimates of the model parameters.
///
/// `theta[j][k]`: topic mixture per document, `phi[k][w]`: word distribution
/// per topic, `pi[k][t]`: timestamp distribution per topic (empty outside
/// bot mode). Rows sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicEstimates {
    pub theta: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    pub pi: Vec<Vec<f64>>,
}

/// theta = (C + alpha) / (len + K alpha), phi = (C + beta) / (n_k + W beta).
/// A topic with no tokens at all gets the exact uniform row 1/W; the
/// formula's value there is beta/(W beta) = 1/W, but computing it that way
/// would round twice.
pub fn estimate(state: &GibbsState) -> TopicEstimates {
    let k = state.config.num_topics;
    let alpha = state.config.alpha;
    let beta = state.config.beta;
    let gamma = state.config.gamma;
    let w = state.vocab_size;
    let wts = state.ts_vocab_size;

    let theta = state
        .doc_topic
        .iter()
        .map(|row| {
            let len: u64 = row.iter().map(|&c| c as u64).sum();
            let denom = len as f64 + k as f64 * alpha;
            row.iter().map(|&c| (c as f64 + alpha) / denom).collect()
        })
        .collect();

    let mut phi = vec![Vec::with_capacity(w); k];
    for (t, row) in phi.iter_mut().enumerate() {
        let n = state.topic_totals[t];
        if n == 0 {
            row.resize(w, 1.0 / w as f64);
        } else {
            let denom = n as f64 + w as f64 * beta;
            row.extend((0..w).map(|word| (state.word_topic[word][t] as f64 + beta) / denom));
        }
    }

    let mut pi = vec![Vec::with_capacity(wts); if wts == 0 { 0 } else { k }];
    for (t, row) in pi.iter_mut().enumerate() {
        let n = state.ts_topic_totals[t];
        if n == 0 {
            row.resize(wts, 1.0 / wts as f64);
        } else {
            let denom = n as f64 + wts as f64 * gamma;
            row.extend((0..wts).map(|ts| (state.ts_topic[ts][t] as f64 + gamma) / denom));
        }
    }

    TopicEstimates { theta, phi, pi }
}

/// Training perplexity over the word tokens:
/// exp of the negative mean log-likelihood of each token under the mixture
/// sum_k theta[j][k] phi[k][w]. Computed in base-2 log space (identical
/// value, better behaved anchors) with compensated summation. Timestamp
/// slots do not enter the token count.
pub fn training_perplexity(corpus: &Corpus, estimates: &TopicEstimates) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut add = |x: f64| {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    };
    for (j, doc) in corpus.docs.iter().enumerate() {
        let theta = &estimates.theta[j];
        for &(word, count) in doc {
            let mut p = 0.0;
            for (&th, phi) in theta.iter().zip(&estimates.phi) {
                p += th * phi[word as usize];
            }
            add(count as f64 * p.log2());
        }
    }
    if corpus.total_tokens == 0 {
        return 1.0;
    }
    let mean = (sum + comp) / corpus.total_tokens as f64;
    (-mean).exp2()
}

/// Top `n` words of topic `k` by phi, descending; ties broken by ascending
/// word id; `n` is clamped to the vocabulary size.
pub fn top_words(estimates: &TopicEstimates, k: usize, n: usize) -> Result<Vec<(u32, f64)>> {
    if k >= estimates.phi.len() {
        return Err(Error::Dimension(format!(
            "topic {} out of range (model has {})",
            k,
            estimates.phi.len()
        )));
    }
    let row = &estimates.phi[k];
    let mut order: Vec<u32> = (0..row.len() as u32).collect();
    order.sort_by(|&a, &b| {
        row[b as usize]
            .partial_cmp(&row[a as usize])
            .expect("phi contains NaN")
            .then(a.cmp(&b))
    });
    order.truncate(n.min(row.len()));
    Ok(order.into_iter().map(|w| (w, row[w as usize])).collect())
}

/// Top `n` timestamps of topic `k` by pi, same ordering rules.
pub fn top_timestamps(estimates: &TopicEstimates, k: usize, n: usize) -> Result<Vec<(u32, f64)>> {
    if k >= estimates.pi.len() {
        return Err(Error::Dimension(format!(
            "topic {} out of range (model has {} timestamp rows)",
            k,
            estimates.pi.len()
        )));
    }
    let row = &estimates.pi[k];
    let mut order: Vec<u32> = (0..row.len() as u32).collect();
    order.sort_by(|&a, &b| {
        row[b as usize]
            .partial_cmp(&row[a as usize])
            .expect("pi contains NaN")
            .then(a.cmp(&b))
    });
    order.truncate(n.min(row.len()));
    Ok(order.into_iter().map(|t| (t, row[t as usize])).collect())
}
