//! Permutation heuristics and the best-of-repeats partition driver.
//!
//! All four strategies permute the row order and the column order, then cut
//! both with `equal_token_cut`. The baseline shuffles uniformly. A1
//! interleaves the descending order from both ends (longest, shortest,
//! 2nd-longest, ...). A2 swaps every even 1-based position i <= M/2 of the
//! descending order with its mirror M+1-i. A3 shuffles within consecutive
//! blocks of P sorted items, deals the blocks out into P tier lists, and
//! shuffles each tier, so every tier holds at most one item per length tier
//! of the sorted order.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;
use crate::workload::{
    balance_report, equal_token_cut, BalanceReport, Partitioning, WorkloadMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Baseline,
    A1,
    A2,
    A3,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Baseline, Algorithm::A1, Algorithm::A2, Algorithm::A3];

    /// Randomized algorithms are repeated `repeats` times; deterministic
    /// ones run once.
    pub fn is_randomized(self) -> bool {
        matches!(self, Algorithm::Baseline | Algorithm::A3)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::Baseline => "baseline",
            Algorithm::A1 => "a1",
            Algorithm::A2 => "a2",
            Algorithm::A3 => "a3",
        };
        f.write_str(name)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algorithm> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Algorithm::Baseline),
            "a1" => Ok(Algorithm::A1),
            "a2" => Ok(Algorithm::A2),
            "a3" => Ok(Algorithm::A3),
            other => Err(Error::Config(format!(
                "unknown algorithm {:?} (expected baseline, a1, a2 or a3)",
                other
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PartitionerConfig {
    pub p: usize,
    /// Attempts for randomized algorithms; the best-eta result is kept.
    pub repeats: usize,
    pub seed: u64,
}

impl PartitionerConfig {
    pub fn new(p: usize, seed: u64) -> PartitionerConfig {
        PartitionerConfig {
            p,
            repeats: 100,
            seed,
        }
    }
}

/// Indices sorted by descending workload, ties by ascending index.
fn sort_desc(workloads: &[u64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..workloads.len()).collect();
    idx.sort_by_key(|&i| (Reverse(workloads[i]), i));
    idx
}

/// Interleave the descending order from both ends: longest, shortest,
/// 2nd-longest, 2nd-shortest, ..., meeting at the median.
pub fn permute_a1(workloads: &[u64]) -> Vec<usize> {
    let sorted = sort_desc(workloads);
    let mut out = Vec::with_capacity(sorted.len());
    let (mut lo, mut hi) = (0, sorted.len());
    while lo < hi {
        out.push(sorted[lo]);
        lo += 1;
        if lo < hi {
            hi -= 1;
            out.push(sorted[hi]);
        }
    }
    out
}

/// Swap every even 1-based position i <= M/2 of the descending order with
/// its mirror position M+1-i.
pub fn permute_a2(workloads: &[u64]) -> Vec<usize> {
    let mut sorted = sort_desc(workloads);
    let m = sorted.len();
    let mut i = 2;
    while i <= m / 2 {
        sorted.swap(i - 1, m - i);
        i += 2;
    }
    sorted
}

/// Tiered shuffle: shuffle the descending order within consecutive blocks
/// of P, deal item k of each block to tier list k, shuffle each tier, and
/// concatenate the tiers.
pub fn permute_a3(workloads: &[u64], p: usize, rng: &mut impl Rng) -> Vec<usize> {
    assert!(p >= 1, "P must be >= 1");
    let sorted = sort_desc(workloads);
    let mut tiers: Vec<Vec<usize>> = vec![Vec::new(); p];
    let mut block = Vec::with_capacity(p);
    for chunk in sorted.chunks(p) {
        block.clear();
        block.extend_from_slice(chunk);
        block.shuffle(rng);
        for (k, &item) in block.iter().enumerate() {
            tiers[k].push(item);
        }
    }
    let mut out = Vec::with_capacity(sorted.len());
    for tier in &mut tiers {
        tier.shuffle(rng);
        out.append(tier);
    }
    out
}

/// Uniform random permutation.
pub fn permute_baseline(workloads: &[u64], rng: &mut impl Rng) -> Vec<usize> {
    let mut out: Vec<usize> = (0..workloads.len()).collect();
    out.shuffle(rng);
    out
}

fn evaluate(
    matrix: &WorkloadMatrix,
    p: usize,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
) -> Result<(Partitioning, BalanceReport)> {
    let permuted_rows: Vec<u64> = row_perm.iter().map(|&j| matrix.row_workloads[j]).collect();
    let permuted_cols: Vec<u64> = col_perm.iter().map(|&w| matrix.col_workloads[w]).collect();
    let row_cuts = equal_token_cut(&permuted_rows, p)?;
    let col_cuts = equal_token_cut(&permuted_cols, p)?;
    let partitioning = Partitioning::new(p, row_perm, col_perm, row_cuts, col_cuts)?;
    let report = balance_report(matrix, &partitioning)?;
    Ok((partitioning, report))
}

/// Permute rows and columns with the chosen algorithm, cut both orders,
/// and evaluate. Randomized algorithms make `repeats` attempts on
/// independent seed-derived streams and keep the highest eta (ties go to
/// the lowest attempt index); A1/A2 run exactly once.
pub fn partition(
    matrix: &WorkloadMatrix,
    algorithm: Algorithm,
    config: &PartitionerConfig,
) -> Result<(Partitioning, BalanceReport)> {
    let p = config.p;
    if p == 0 {
        return Err(Error::Config("P must be >= 1".into()));
    }
    if p > matrix.rows || p > matrix.cols {
        return Err(Error::Config(format!(
            "P = {} exceeds matrix dimensions {}x{}",
            p, matrix.rows, matrix.cols
        )));
    }
    if config.repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    match algorithm {
        Algorithm::A1 => evaluate(
            matrix,
            p,
            permute_a1(&matrix.row_workloads),
            permute_a1(&matrix.col_workloads),
        ),
        Algorithm::A2 => evaluate(
            matrix,
            p,
            permute_a2(&matrix.row_workloads),
            permute_a2(&matrix.col_workloads),
        ),
        Algorithm::A3 | Algorithm::Baseline => {
            let attempts: Vec<(Partitioning, BalanceReport)> = (0..config.repeats)
                .into_par_iter()
                .map(|r| {
                    let mut rng = rng::stream(config.seed, &[rng::SALT_PARTITION, r as u64]);
                    let (row_perm, col_perm) = if algorithm == Algorithm::A3 {
                        (
                            permute_a3(&matrix.row_workloads, p, &mut rng),
                            permute_a3(&matrix.col_workloads, p, &mut rng),
                        )
                    } else {
                        (
                            permute_baseline(&matrix.row_workloads, &mut rng),
                            permute_baseline(&matrix.col_workloads, &mut rng),
                        )
                    };
                    evaluate(matrix, p, row_perm, col_perm)
                })
                .collect::<Result<_>>()?;
            Ok(attempts
                .into_iter()
                .reduce(|best, cand| if cand.1.eta > best.1.eta { cand } else { best })
                .expect("repeats >= 1"))
        }
    }
}

/// Repartition only the columns of `matrix`, keeping the document side
/// (row permutation and cuts) of `base` verbatim. Used for the timestamp
/// workload in bot mode, where both partitionings must share document
/// groups so a worker owns the same documents in both phases. Randomized
/// algorithms draw from a separate salt so the column search is
/// independent of the document-word search.
pub fn partition_with_fixed_rows(
    matrix: &WorkloadMatrix,
    base: &Partitioning,
    algorithm: Algorithm,
    config: &PartitionerConfig,
) -> Result<(Partitioning, BalanceReport)> {
    let p = config.p;
    if p == 0 {
        return Err(Error::Config("P must be >= 1".into()));
    }
    if p != base.p {
        return Err(Error::Config(format!(
            "P = {} does not match the base partitioning's {}",
            p, base.p
        )));
    }
    if matrix.rows != base.rows() {
        return Err(Error::Dimension(format!(
            "matrix has {} rows but the base partitioning covers {}",
            matrix.rows,
            base.rows()
        )));
    }
    if p > matrix.cols {
        return Err(Error::Config(format!(
            "P = {} exceeds the column count {}",
            p, matrix.cols
        )));
    }
    if config.repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let evaluate_cols = |col_perm: Vec<usize>| -> Result<(Partitioning, BalanceReport)> {
        let permuted_cols: Vec<u64> = col_perm.iter().map(|&w| matrix.col_workloads[w]).collect();
        let col_cuts = equal_token_cut(&permuted_cols, p)?;
        let partitioning = Partitioning::new(
            p,
            base.row_perm.clone(),
            col_perm,
            base.row_cuts.clone(),
            col_cuts,
        )?;
        let report = balance_report(matrix, &partitioning)?;
        Ok((partitioning, report))
    };
    match algorithm {
        Algorithm::A1 => evaluate_cols(permute_a1(&matrix.col_workloads)),
        Algorithm::A2 => evaluate_cols(permute_a2(&matrix.col_workloads)),
        Algorithm::A3 | Algorithm::Baseline => {
            let attempts: Vec<(Partitioning, BalanceReport)> = (0..config.repeats)
                .into_par_iter()
                .map(|r| {
                    let mut rng =
                        rng::stream(config.seed, &[rng::SALT_PARTITION_TS, r as u64]);
                    let col_perm = if algorithm == Algorithm::A3 {
                        permute_a3(&matrix.col_workloads, p, &mut rng)
                    } else {
                        permute_baseline(&matrix.col_workloads, &mut rng)
                    };
                    evaluate_cols(col_perm)
                })
                .collect::<Result<_>>()?;
            Ok(attempts
                .into_iter()
                .reduce(|best, cand| if cand.1.eta > best.1.eta { cand } else { best })
                .expect("repeats >= 1"))
        }
    }
}

/// Optimal assignment found by exhaustive search over all P^D x P^W
/// row/column group assignments (no contiguity constraint).
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub row_group: Vec<u32>,
    pub col_group: Vec<u32>,
    pub eta: f64,
    pub total_cost: u64,
}

fn next_assignment(assign: &mut [u32], p: u32) -> bool {
    for slot in assign.iter_mut() {
        *slot += 1;
        if *slot < p {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Exhaustive optimum for tiny instances; refuses when P^D * P^W > 10^7.
pub fn oracle_optimal(matrix: &WorkloadMatrix, p: usize) -> Result<OracleResult> {
    if p == 0 {
        return Err(Error::Config("P must be >= 1".into()));
    }
    let (d, w) = (matrix.rows, matrix.cols);
    let combos = (p as f64).powi(d as i32) * (p as f64).powi(w as i32);
    if !combos.is_finite() || combos > 1e7 {
        return Err(Error::TooLarge(format!(
            "{}^{} x {}^{} assignments exceed the 10^7 guard",
            p, d, p, w
        )));
    }
    let dense = matrix.to_dense();
    let mut best_cost = u64::MAX;
    let mut best_rows = vec![0u32; d];
    let mut best_cols = vec![0u32; w];

    let mut row_assign = vec![0u32; d];
    loop {
        // Group-by-row partial sums for this row assignment.
        let mut s = vec![vec![0u64; w]; p];
        for j in 0..d {
            let m = row_assign[j] as usize;
            for col in 0..w {
                s[m][col] += dense[j][col];
            }
        }
        let mut col_assign = vec![0u32; w];
        loop {
            let mut costs = vec![vec![0u64; p]; p];
            for col in 0..w {
                let n = col_assign[col] as usize;
                for (m, s_m) in s.iter().enumerate() {
                    costs[m][n] += s_m[col];
                }
            }
            let cost: u64 = (0..p)
                .map(|l| (0..p).map(|m| costs[m][(m + l) % p]).max().unwrap_or(0))
                .sum();
            if cost < best_cost {
                best_cost = cost;
                best_rows.copy_from_slice(&row_assign);
                best_cols.copy_from_slice(&col_assign);
            }
            if !next_assignment(&mut col_assign, p as u32) {
                break;
            }
        }
        if !next_assignment(&mut row_assign, p as u32) {
            break;
        }
    }
    let eta = if matrix.total == 0 {
        1.0
    } else {
        (matrix.total as f64 / p as f64) / best_cost as f64
    };
    Ok(OracleResult {
        row_group: best_rows,
        col_group: best_cols,
        eta,
        total_cost: best_cost,
    })
}
