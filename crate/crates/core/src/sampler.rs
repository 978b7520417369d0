//! Collapsed Gibbs sampling, sequential or partition-parallel.
//!
//! Two modes share one state layout. In `lda` each word token carries a
//! topic assignment. In `bot` every document additionally has a fixed-length
//! timestamp array whose slots carry their own assignments; timestamps feed
//! the shared document-topic counts but have a separate topic-timestamp
//! matrix with prior gamma.
//!
//! The parallel sweep walks the P diagonal epochs of a partitioning. Within
//! an epoch, worker m owns document group J_m and the column group of its
//! block, so all writes are row-disjoint; the per-topic totals are the one
//! shared vector, kept as per-worker copies and reconciled at the epoch
//! barrier by summing deltas, which is exact because no worker reads another
//! block's tokens. Each worker draws from its own seeded stream, so runs are
//! reproducible regardless of thread interleaving.

use std::mem;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, TimestampTable};
use crate::error::{Error, Result};
use crate::metrics;
use crate::rng;
use crate::scheduler::{build_schedule, verify_nonconflicting, DiagonalSchedule};
use crate::workload::Partitioning;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Lda,
    Bot,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Lda => "lda",
            Mode::Bot => "bot",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s.to_ascii_lowercase().as_str() {
            "lda" => Ok(Mode::Lda),
            "bot" => Ok(Mode::Bot),
            other => Err(Error::Config(format!(
                "unknown mode {:?} (expected lda or bot)",
                other
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub mode: Mode,
    pub num_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(mode: Mode, seed: u64) -> ModelConfig {
        ModelConfig {
            mode,
            num_topics: 256,
            alpha: 0.5,
            beta: 0.1,
            gamma: 0.1,
            iterations: 200,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_topics == 0 {
            return Err(Error::Config("num_topics must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.gamma > 0.0) {
            return Err(Error::Config("alpha, beta and gamma must be > 0".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Assignments plus the counting matrices they imply.
///
/// The topic-word and topic-timestamp matrices are stored column-major
/// (one row per word / per timestamp) so that a parallel worker's writes
/// are whole rows that can be moved out and back.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub config: ModelConfig,
    pub doc_count: usize,
    pub vocab_size: usize,
    /// 0 in lda mode.
    pub ts_vocab_size: usize,
    /// Expanded word ids, one slot per occurrence, per document.
    pub tokens: Vec<Vec<u32>>,
    /// Topic assignment per word token, parallel to `tokens`.
    pub z: Vec<Vec<u32>>,
    /// Timestamp ids per document (length L), empty rows in lda mode.
    pub ts_tokens: Vec<Vec<u32>>,
    /// Topic assignment per timestamp slot, parallel to `ts_tokens`.
    pub y: Vec<Vec<u32>>,
    /// Document-topic counts [D][K], fed by words and timestamps.
    pub doc_topic: Vec<Vec<u32>>,
    /// Word-topic counts [W][K], fed by words only.
    pub word_topic: Vec<Vec<u32>>,
    /// Timestamp-topic counts [WTS][K], fed by timestamps only.
    pub ts_topic: Vec<Vec<u32>>,
    /// Word tokens per topic, n_k.
    pub topic_totals: Vec<u64>,
    /// Timestamp slots per topic.
    pub ts_topic_totals: Vec<u64>,
}

pub(crate) fn expand_tokens(corpus: &Corpus) -> Vec<Vec<u32>> {
    corpus
        .docs
        .iter()
        .map(|doc| {
            let mut row = Vec::with_capacity(doc.iter().map(|&(_, c)| c as usize).sum());
            for &(w, c) in doc {
                row.extend(std::iter::repeat_n(w, c as usize));
            }
            row
        })
        .collect()
}

/// Assign every word token (and timestamp slot in bot mode) a uniform
/// random topic from the seeded stream and tally the counts.
pub fn init_state(
    corpus: &Corpus,
    timestamps: Option<&TimestampTable>,
    config: &ModelConfig,
) -> Result<GibbsState> {
    config.validate()?;
    match (config.mode, timestamps) {
        (Mode::Bot, None) => {
            return Err(Error::Config("bot mode requires a timestamp table".into()))
        }
        (Mode::Lda, Some(_)) => {
            return Err(Error::Config("lda mode does not accept timestamps".into()))
        }
        _ => {}
    }
    if let Some(t) = timestamps {
        if t.arrays.len() != corpus.doc_count {
            return Err(Error::Dimension(format!(
                "timestamp table covers {} documents, corpus has {}",
                t.arrays.len(),
                corpus.doc_count
            )));
        }
    }
    let k = config.num_topics;
    let d = corpus.doc_count;
    let w = corpus.vocab_size;
    let wts = timestamps.map_or(0, |t| t.timestamp_vocab_size);

    let tokens = expand_tokens(corpus);
    let ts_tokens: Vec<Vec<u32>> = match timestamps {
        Some(t) => t.arrays.clone(),
        None => vec![Vec::new(); d],
    };

    let mut state = GibbsState {
        config: *config,
        doc_count: d,
        vocab_size: w,
        ts_vocab_size: wts,
        z: tokens.iter().map(|row| vec![0u32; row.len()]).collect(),
        y: ts_tokens.iter().map(|row| vec![0u32; row.len()]).collect(),
        tokens,
        ts_tokens,
        doc_topic: vec![vec![0u32; k]; d],
        word_topic: vec![vec![0u32; k]; w],
        ts_topic: vec![vec![0u32; k]; wts],
        topic_totals: vec![0u64; k],
        ts_topic_totals: vec![0u64; k],
    };

    let mut rng = rng::stream(config.seed, &[rng::SALT_INIT]);
    for j in 0..d {
        for i in 0..state.tokens[j].len() {
            let topic = rng.gen_range(0..k as u32);
            state.z[j][i] = topic;
            let word = state.tokens[j][i] as usize;
            state.doc_topic[j][topic as usize] += 1;
            state.word_topic[word][topic as usize] += 1;
            state.topic_totals[topic as usize] += 1;
        }
    }
    for j in 0..d {
        for s in 0..state.ts_tokens[j].len() {
            let topic = rng.gen_range(0..k as u32);
            state.y[j][s] = topic;
            let ts = state.ts_tokens[j][s] as usize;
            state.doc_topic[j][topic as usize] += 1;
            state.ts_topic[ts][topic as usize] += 1;
            state.ts_topic_totals[topic as usize] += 1;
        }
    }
    Ok(state)
}

impl GibbsState {
    pub fn word_token_count(&self) -> u64 {
        self.tokens.iter().map(|r| r.len() as u64).sum()
    }

    pub fn ts_token_count(&self) -> u64 {
        self.ts_tokens.iter().map(|r| r.len() as u64).sum()
    }

    /// Recompute every counting matrix from the assignments and compare
    /// with the incrementally maintained ones; exact integer equality.
    pub fn validate(&self) -> Result<()> {
        let k = self.config.num_topics;
        let mut doc_topic = vec![vec![0u32; k]; self.doc_count];
        let mut word_topic = vec![vec![0u32; k]; self.vocab_size];
        let mut ts_topic = vec![vec![0u32; k]; self.ts_vocab_size];
        let mut totals = vec![0u64; k];
        let mut ts_totals = vec![0u64; k];
        for j in 0..self.doc_count {
            if self.z[j].len() != self.tokens[j].len() || self.y[j].len() != self.ts_tokens[j].len()
            {
                return Err(Error::State(format!(
                    "assignment arrays of doc {} do not match its tokens",
                    j
                )));
            }
            for (i, &t) in self.z[j].iter().enumerate() {
                doc_topic[j][t as usize] += 1;
                word_topic[self.tokens[j][i] as usize][t as usize] += 1;
                totals[t as usize] += 1;
            }
            for (s, &t) in self.y[j].iter().enumerate() {
                doc_topic[j][t as usize] += 1;
                ts_topic[self.ts_tokens[j][s] as usize][t as usize] += 1;
                ts_totals[t as usize] += 1;
            }
        }
        let checks: [(&str, bool); 5] = [
            ("doc_topic", doc_topic == self.doc_topic),
            ("word_topic", word_topic == self.word_topic),
            ("ts_topic", ts_topic == self.ts_topic),
            ("topic_totals", totals == self.topic_totals),
            ("ts_topic_totals", ts_totals == self.ts_topic_totals),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(Error::State(format!(
                    "{} diverged from the counts implied by assignments",
                    name
                )));
            }
        }
        Ok(())
    }
}

fn draw_categorical(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    weights.len() - 1
}

/// Resample one slot given its document-topic row, its column's topic row,
/// and the per-topic totals: decrement the current assignment, draw from
/// (dt + alpha) * (col + prior) / (total + denom), increment the new one.
#[allow(clippy::too_many_arguments)]
fn resample_slot(
    dt_row: &mut [u32],
    col_row: &mut [u32],
    totals: &mut [u64],
    slot: &mut u32,
    alpha: f64,
    prior: f64,
    denom: f64,
    buf: &mut Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> u32 {
    let old = *slot as usize;
    dt_row[old] -= 1;
    col_row[old] -= 1;
    totals[old] -= 1;
    buf.clear();
    for k in 0..dt_row.len() {
        buf.push(
            (dt_row[k] as f64 + alpha) * (col_row[k] as f64 + prior)
                / (totals[k] as f64 + denom),
        );
    }
    let new = draw_categorical(buf, rng);
    dt_row[new] += 1;
    col_row[new] += 1;
    totals[new] += 1;
    *slot = new as u32;
    new as u32
}

/// Resample word token i of document j with the caller's stream.
pub fn sample_word_token(
    state: &mut GibbsState,
    j: usize,
    i: usize,
    rng: &mut ChaCha8Rng,
) -> u32 {
    let w = state.tokens[j][i] as usize;
    let denom = state.vocab_size as f64 * state.config.beta;
    let mut buf = Vec::with_capacity(state.config.num_topics);
    resample_slot(
        &mut state.doc_topic[j],
        &mut state.word_topic[w],
        &mut state.topic_totals,
        &mut state.z[j][i],
        state.config.alpha,
        state.config.beta,
        denom,
        &mut buf,
        rng,
    )
}

/// Resample timestamp slot s of document j with the caller's stream.
pub fn sample_timestamp_token(
    state: &mut GibbsState,
    j: usize,
    s: usize,
    rng: &mut ChaCha8Rng,
) -> u32 {
    let t = state.ts_tokens[j][s] as usize;
    let denom = state.ts_vocab_size as f64 * state.config.gamma;
    let mut buf = Vec::with_capacity(state.config.num_topics);
    resample_slot(
        &mut state.doc_topic[j],
        &mut state.ts_topic[t],
        &mut state.ts_topic_totals,
        &mut state.y[j][s],
        state.config.alpha,
        state.config.gamma,
        denom,
        &mut buf,
        rng,
    )
}

/// Normalized analytic conditional for word token i of document j in its
/// current state (the token's own assignment excluded), without mutating.
pub fn word_conditional(state: &GibbsState, j: usize, i: usize) -> Vec<f64> {
    let w = state.tokens[j][i] as usize;
    let cur = state.z[j][i] as usize;
    let denom = state.vocab_size as f64 * state.config.beta;
    conditional(
        &state.doc_topic[j],
        &state.word_topic[w],
        &state.topic_totals,
        cur,
        state.config.alpha,
        state.config.beta,
        denom,
    )
}

/// Analytic conditional for timestamp slot s of document j.
pub fn timestamp_conditional(state: &GibbsState, j: usize, s: usize) -> Vec<f64> {
    let t = state.ts_tokens[j][s] as usize;
    let cur = state.y[j][s] as usize;
    let denom = state.ts_vocab_size as f64 * state.config.gamma;
    conditional(
        &state.doc_topic[j],
        &state.ts_topic[t],
        &state.ts_topic_totals,
        cur,
        state.config.alpha,
        state.config.gamma,
        denom,
    )
}

fn conditional(
    dt_row: &[u32],
    col_row: &[u32],
    totals: &[u64],
    exclude: usize,
    alpha: f64,
    prior: f64,
    denom: f64,
) -> Vec<f64> {
    let k = dt_row.len();
    let mut weights = Vec::with_capacity(k);
    for t in 0..k {
        let d = if t == exclude { 1.0 } else { 0.0 };
        weights.push(
            (dt_row[t] as f64 - d + alpha) * (col_row[t] as f64 - d + prior)
                / (totals[t] as f64 - d + denom),
        );
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// One full sweep on a single stream: every word token in document order,
/// then (bot) every timestamp slot.
pub fn sweep_sequential(state: &mut GibbsState, iteration: usize) {
    let mut rng = rng::stream(state.config.seed, &[rng::SALT_SWEEP, iteration as u64, 0, 0]);
    let alpha = state.config.alpha;
    let beta = state.config.beta;
    let gamma = state.config.gamma;
    let wbeta = state.vocab_size as f64 * beta;
    let tsgamma = state.ts_vocab_size as f64 * gamma;
    let mut buf = Vec::with_capacity(state.config.num_topics);

    let GibbsState {
        tokens,
        z,
        ts_tokens,
        y,
        doc_topic,
        word_topic,
        ts_topic,
        topic_totals,
        ts_topic_totals,
        ..
    } = state;
    for j in 0..tokens.len() {
        for i in 0..tokens[j].len() {
            let w = tokens[j][i] as usize;
            resample_slot(
                &mut doc_topic[j],
                &mut word_topic[w],
                topic_totals,
                &mut z[j][i],
                alpha,
                beta,
                wbeta,
                &mut buf,
                &mut rng,
            );
        }
    }
    for j in 0..ts_tokens.len() {
        for s in 0..ts_tokens[j].len() {
            let t = ts_tokens[j][s] as usize;
            resample_slot(
                &mut doc_topic[j],
                &mut ts_topic[t],
                ts_topic_totals,
                &mut y[j][s],
                alpha,
                gamma,
                tsgamma,
                &mut buf,
                &mut rng,
            );
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Word,
    Timestamp,
}

/// One instrumented access from a parallel sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessEvent {
    pub phase: Phase,
    pub epoch: u32,
    pub worker: u32,
    pub doc: u32,
    /// Token index within the document (or timestamp slot index).
    pub position: u32,
    /// Word id (or timestamp id).
    pub column: u32,
}

/// Access log of one instrumented parallel sweep.
#[derive(Debug, Default, Clone)]
pub struct SweepLog {
    pub events: Vec<AccessEvent>,
}

impl SweepLog {
    /// Cross-worker conflicts: pairs of workers in the same epoch and phase
    /// touching the same document row or the same column.
    pub fn conflict_count(&self) -> usize {
        use std::collections::HashMap;
        let mut docs: HashMap<(Phase, u32, u32), u32> = HashMap::new();
        let mut cols: HashMap<(Phase, u32, u32), u32> = HashMap::new();
        let mut conflicts = 0;
        for e in &self.events {
            // Word and timestamp phases share C_Theta rows within an epoch,
            // so document ownership is keyed per epoch across both phases.
            let dkey = (Phase::Word, e.epoch, e.doc);
            match docs.get(&dkey) {
                Some(&w) if w != e.worker => conflicts += 1,
                Some(_) => {}
                None => {
                    docs.insert(dkey, e.worker);
                }
            }
            let ckey = (e.phase, e.epoch, e.column);
            match cols.get(&ckey) {
                Some(&w) if w != e.worker => conflicts += 1,
                Some(_) => {}
                None => {
                    cols.insert(ckey, e.worker);
                }
            }
        }
        conflicts
    }

    /// Checks that one sweep visited every word token and every timestamp
    /// slot exactly once.
    pub fn verify_coverage(&self, state: &GibbsState) -> Result<()> {
        let mut word_seen: Vec<Vec<u32>> = state.tokens.iter().map(|r| vec![0; r.len()]).collect();
        let mut ts_seen: Vec<Vec<u32>> = state.ts_tokens.iter().map(|r| vec![0; r.len()]).collect();
        for e in &self.events {
            let seen = match e.phase {
                Phase::Word => &mut word_seen,
                Phase::Timestamp => &mut ts_seen,
            };
            seen[e.doc as usize][e.position as usize] += 1;
        }
        for (j, row) in word_seen.iter().enumerate() {
            if let Some(i) = row.iter().position(|&c| c != 1) {
                return Err(Error::State(format!(
                    "word token ({}, {}) visited {} times",
                    j, i, row[i]
                )));
            }
        }
        for (j, row) in ts_seen.iter().enumerate() {
            if let Some(s) = row.iter().position(|&c| c != 1) {
                return Err(Error::State(format!(
                    "timestamp slot ({}, {}) visited {} times",
                    j, s, row[s]
                )));
            }
        }
        Ok(())
    }
}

/// Precomputed lookup tables for partition-parallel sweeps.
#[derive(Debug, Clone)]
pub struct ParallelPlan {
    pub p: usize,
    pub partitioning: Partitioning,
    pub ts_partitioning: Option<Partitioning>,
    pub schedule: DiagonalSchedule,
    /// Document ids per row group, ascending.
    row_groups: Vec<Vec<usize>>,
    /// Word ids per column group, ascending.
    word_groups: Vec<Vec<usize>>,
    /// Timestamp ids per DTS column group, ascending.
    ts_groups: Vec<Vec<usize>>,
    /// [n][word id] -> index into that group's taken rows.
    word_local: Vec<Vec<u32>>,
    ts_local: Vec<Vec<u32>>,
    /// [doc][n] -> word token positions in column group n, ascending.
    token_buckets: Vec<Vec<Vec<u32>>>,
    /// [doc][n] -> timestamp slot positions in DTS column group n, ascending.
    ts_buckets: Vec<Vec<Vec<u32>>>,
}

fn sorted_groups(partitioning: &Partitioning, side: GroupSide) -> Vec<Vec<usize>> {
    (0..partitioning.p)
        .map(|g| {
            let mut members: Vec<usize> = match side {
                GroupSide::Row => partitioning.row_group(g).to_vec(),
                GroupSide::Col => partitioning.col_group(g).to_vec(),
            };
            members.sort_unstable();
            members
        })
        .collect()
}

#[derive(Clone, Copy)]
enum GroupSide {
    Row,
    Col,
}

fn local_index_map(groups: &[Vec<usize>], len: usize) -> Vec<Vec<u32>> {
    groups
        .iter()
        .map(|group| {
            let mut map = vec![u32::MAX; len];
            for (idx, &id) in group.iter().enumerate() {
                map[id] = idx as u32;
            }
            map
        })
        .collect()
}

impl ParallelPlan {
    /// Validate the partitionings (nonconflict proof, matching document
    /// groups between the word and timestamp sides) and precompute the
    /// per-block token buckets.
    pub fn new(
        corpus: &Corpus,
        timestamps: Option<&TimestampTable>,
        partitioning: Partitioning,
        ts_partitioning: Option<Partitioning>,
    ) -> Result<ParallelPlan> {
        partitioning.validate()?;
        if partitioning.rows() != corpus.doc_count || partitioning.cols() != corpus.vocab_size {
            return Err(Error::Dimension(format!(
                "partitioning is {}x{} but corpus is {}x{}",
                partitioning.rows(),
                partitioning.cols(),
                corpus.doc_count,
                corpus.vocab_size
            )));
        }
        let p = partitioning.p;
        let schedule = build_schedule(p);
        if !verify_nonconflicting(&schedule, &partitioning) {
            return Err(Error::State(
                "document-word partitioning failed nonconflict verification".into(),
            ));
        }
        match (timestamps, &ts_partitioning) {
            (Some(_), Some(_)) | (None, None) => {}
            (Some(_), None) => {
                return Err(Error::Config(
                    "timestamps provided without a timestamp partitioning".into(),
                ))
            }
            (None, Some(_)) => {
                return Err(Error::Config(
                    "timestamp partitioning provided without timestamps".into(),
                ))
            }
        }
        let row_groups = sorted_groups(&partitioning, GroupSide::Row);
        let word_groups = sorted_groups(&partitioning, GroupSide::Col);

        let (ts_groups, ts_local, ts_buckets) = match (&ts_partitioning, timestamps) {
            (Some(tsp), Some(table)) => {
                tsp.validate()?;
                if tsp.p != p {
                    return Err(Error::Config(format!(
                        "timestamp partitioning has P = {}, expected {}",
                        tsp.p, p
                    )));
                }
                if tsp.rows() != corpus.doc_count || tsp.cols() != table.timestamp_vocab_size {
                    return Err(Error::Dimension(format!(
                        "timestamp partitioning is {}x{} but expected {}x{}",
                        tsp.rows(),
                        tsp.cols(),
                        corpus.doc_count,
                        table.timestamp_vocab_size
                    )));
                }
                if !verify_nonconflicting(&schedule, tsp) {
                    return Err(Error::State(
                        "document-timestamp partitioning failed nonconflict verification".into(),
                    ));
                }
                let ts_rows = sorted_groups(tsp, GroupSide::Row);
                if ts_rows != row_groups {
                    return Err(Error::Config(
                        "word and timestamp partitionings must share document groups".into(),
                    ));
                }
                let ts_groups = sorted_groups(tsp, GroupSide::Col);
                let ts_local = local_index_map(&ts_groups, table.timestamp_vocab_size);
                let ts_col_ids = tsp.col_group_ids();
                let ts_buckets: Vec<Vec<Vec<u32>>> = table
                    .arrays
                    .iter()
                    .map(|arr| {
                        let mut buckets = vec![Vec::new(); p];
                        for (s, &t) in arr.iter().enumerate() {
                            buckets[ts_col_ids[t as usize] as usize].push(s as u32);
                        }
                        buckets
                    })
                    .collect();
                (ts_groups, ts_local, ts_buckets)
            }
            _ => (Vec::new(), Vec::new(), vec![Vec::new(); corpus.doc_count]),
        };

        let word_local = local_index_map(&word_groups, corpus.vocab_size);
        let col_ids = partitioning.col_group_ids();
        let token_buckets: Vec<Vec<Vec<u32>>> = expand_tokens(corpus)
            .iter()
            .map(|row| {
                let mut buckets = vec![Vec::new(); p];
                for (i, &w) in row.iter().enumerate() {
                    buckets[col_ids[w as usize] as usize].push(i as u32);
                }
                buckets
            })
            .collect();

        Ok(ParallelPlan {
            p,
            partitioning,
            ts_partitioning,
            schedule,
            row_groups,
            word_groups,
            ts_groups,
            word_local,
            ts_local,
            token_buckets,
            ts_buckets,
        })
    }

    fn check_state(&self, state: &GibbsState) -> Result<()> {
        let ok = state.doc_count == self.row_groups.iter().map(Vec::len).sum::<usize>()
            && state.vocab_size == self.partitioning.cols()
            && (self.ts_partitioning.is_none()
                || state.ts_vocab_size == self.ts_partitioning.as_ref().unwrap().cols());
        if !ok {
            return Err(Error::Dimension(
                "state dimensions do not match the parallel plan".into(),
            ));
        }
        if (state.config.mode == Mode::Bot) != self.ts_partitioning.is_some() {
            return Err(Error::Config(
                "plan and state disagree about timestamp sampling".into(),
            ));
        }
        Ok(())
    }
}

struct PhaseTask {
    worker: usize,
    col_group: usize,
    rng: ChaCha8Rng,
    /// (doc id, taken doc-topic row, taken assignment row).
    docs: Vec<(usize, Vec<u32>, Vec<u32>)>,
    /// Taken column rows of this worker's column group.
    cols: Vec<Vec<u32>>,
    totals: Vec<u64>,
    events: Vec<AccessEvent>,
}

#[allow(clippy::too_many_arguments)]
fn run_phase(
    phase: Phase,
    epoch: usize,
    p: usize,
    alpha: f64,
    prior: f64,
    denom: f64,
    num_topics: usize,
    row_groups: &[Vec<usize>],
    col_groups: &[Vec<usize>],
    col_local: &[Vec<u32>],
    buckets: &[Vec<Vec<u32>>],
    tokens: &[Vec<u32>],
    assigns: &mut [Vec<u32>],
    doc_topic: &mut [Vec<u32>],
    col_topic: &mut [Vec<u32>],
    totals: &mut [u64],
    rngs: &mut [Option<ChaCha8Rng>],
    log: Option<&mut Vec<AccessEvent>>,
) {
    let base: Vec<u64> = totals.to_vec();
    let logging = log.is_some();
    let mut tasks = Vec::with_capacity(p);
    for m in 0..p {
        let n = (m + epoch) % p;
        let docs = row_groups[m]
            .iter()
            .map(|&j| (j, mem::take(&mut doc_topic[j]), mem::take(&mut assigns[j])))
            .collect();
        let cols = col_groups[n]
            .iter()
            .map(|&c| mem::take(&mut col_topic[c]))
            .collect();
        tasks.push(PhaseTask {
            worker: m,
            col_group: n,
            rng: rngs[m].take().expect("rng present"),
            docs,
            cols,
            totals: base.clone(),
            events: Vec::new(),
        });
    }

    let finished: Vec<PhaseTask> = std::thread::scope(|scope| {
        let handles: Vec<_> = tasks
            .into_iter()
            .map(|mut task| {
                scope.spawn(move || {
                    let mut buf = Vec::with_capacity(num_topics);
                    let n = task.col_group;
                    let worker = task.worker as u32;
                    let PhaseTask {
                        docs,
                        cols,
                        totals,
                        rng,
                        events,
                        ..
                    } = &mut task;
                    for (j, dt, assign_row) in docs.iter_mut() {
                        for &pos in &buckets[*j][n] {
                            let col = tokens[*j][pos as usize];
                            let local = col_local[n][col as usize] as usize;
                            resample_slot(
                                dt,
                                &mut cols[local],
                                totals,
                                &mut assign_row[pos as usize],
                                alpha,
                                prior,
                                denom,
                                &mut buf,
                                rng,
                            );
                            if logging {
                                events.push(AccessEvent {
                                    phase,
                                    epoch: epoch as u32,
                                    worker,
                                    doc: *j as u32,
                                    position: pos,
                                    column: col,
                                });
                            }
                        }
                    }
                    task
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampling worker panicked"))
            .collect()
    });

    let mut deltas = vec![0i64; base.len()];
    let mut merged_events = log;
    for mut task in finished {
        for (j, dt, assign_row) in task.docs.drain(..) {
            doc_topic[j] = dt;
            assigns[j] = assign_row;
        }
        for (&c, row) in col_groups[task.col_group].iter().zip(task.cols.drain(..)) {
            col_topic[c] = row;
        }
        for (k, &t) in task.totals.iter().enumerate() {
            deltas[k] += t as i64 - base[k] as i64;
        }
        rngs[task.worker] = Some(task.rng);
        if let Some(events) = merged_events.as_mut() {
            events.extend(task.events);
        }
    }
    for (k, d) in deltas.iter().enumerate() {
        totals[k] = (base[k] as i64 + d) as u64;
    }
}

fn reborrow<'a>(
    log: &'a mut Option<&mut Vec<AccessEvent>>,
) -> Option<&'a mut Vec<AccessEvent>> {
    log.as_mut().map(|v| &mut **v)
}

fn sweep_parallel_impl(
    state: &mut GibbsState,
    plan: &ParallelPlan,
    iteration: usize,
    mut log: Option<&mut Vec<AccessEvent>>,
) -> Result<()> {
    plan.check_state(state)?;
    let p = plan.p;
    let num_topics = state.config.num_topics;
    let alpha = state.config.alpha;
    let beta = state.config.beta;
    let gamma = state.config.gamma;
    let wbeta = state.vocab_size as f64 * beta;
    let tsgamma = state.ts_vocab_size as f64 * gamma;
    let seed = state.config.seed;
    let bot = state.config.mode == Mode::Bot;

    let GibbsState {
        tokens,
        z,
        ts_tokens,
        y,
        doc_topic,
        word_topic,
        ts_topic,
        topic_totals,
        ts_topic_totals,
        ..
    } = state;

    for l in 0..p {
        let mut rngs: Vec<Option<ChaCha8Rng>> = (0..p)
            .map(|m| {
                Some(rng::stream(
                    seed,
                    &[rng::SALT_SWEEP, iteration as u64, l as u64, m as u64],
                ))
            })
            .collect();
        run_phase(
            Phase::Word,
            l,
            p,
            alpha,
            beta,
            wbeta,
            num_topics,
            &plan.row_groups,
            &plan.word_groups,
            &plan.word_local,
            &plan.token_buckets,
            tokens,
            z,
            doc_topic,
            word_topic,
            topic_totals,
            &mut rngs,
            reborrow(&mut log),
        );
        if bot {
            run_phase(
                Phase::Timestamp,
                l,
                p,
                alpha,
                gamma,
                tsgamma,
                num_topics,
                &plan.row_groups,
                &plan.ts_groups,
                &plan.ts_local,
                &plan.ts_buckets,
                ts_tokens,
                y,
                doc_topic,
                ts_topic,
                ts_topic_totals,
                &mut rngs,
                reborrow(&mut log),
            );
        }
    }
    Ok(())
}

/// One full sweep over all P diagonal epochs with P workers per epoch.
/// With P = 1 the trajectory is identical to `sweep_sequential`.
pub fn sweep_parallel(state: &mut GibbsState, plan: &ParallelPlan, iteration: usize) -> Result<()> {
    sweep_parallel_impl(state, plan, iteration, None)
}

/// Like `sweep_parallel` but records every access for conflict and
/// coverage checking.
pub fn sweep_parallel_logged(
    state: &mut GibbsState,
    plan: &ParallelPlan,
    iteration: usize,
) -> Result<SweepLog> {
    let mut events = Vec::new();
    sweep_parallel_impl(state, plan, iteration, Some(&mut events))?;
    Ok(SweepLog { events })
}

/// Final state plus the recorded (iteration, perplexity) trace.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub state: GibbsState,
    pub trace: Vec<(usize, f64)>,
}

/// Run `config.iterations` sweeps, recording training perplexity every
/// `eval_every` iterations (and always at the last one). `eval_every = 0`
/// records the final iteration only.
pub fn train(
    corpus: &Corpus,
    timestamps: Option<&TimestampTable>,
    config: &ModelConfig,
    plan: Option<&ParallelPlan>,
    eval_every: usize,
) -> Result<TrainOutput> {
    let mut state = init_state(corpus, timestamps, config)?;
    let mut trace = Vec::new();
    for it in 0..config.iterations {
        match plan {
            Some(plan) => sweep_parallel(&mut state, plan, it)?,
            None => sweep_sequential(&mut state, it),
        }
        let last = it + 1 == config.iterations;
        if last || (eval_every > 0 && (it + 1) % eval_every == 0) {
            let est = metrics::estimate(&state);
            let perp = metrics::training_perplexity(corpus, &est);
            trace.push((it + 1, perp));
        }
    }
    Ok(TrainOutput { state, trace })
}
