//! Workload matrices, partitionings, and load-balance evaluation.
//!
//! A workload matrix counts tokens per (document, word) cell. A partitioning
//! permutes rows and columns and cuts each order into P contiguous groups,
//! inducing a P x P grid of blocks. Blocks whose indices satisfy
//! n = (m + l) mod P form diagonal l; the balance report takes the maximum
//! block cost per diagonal, sums those maxima into the total cost C, and
//! compares against the ideal C_opt = total / P.

use crate::corpus::{Corpus, TimestampTable};
use crate::error::{Error, Result};

/// Sparse nonnegative integer matrix with cached row/column sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkloadMatrix {
    pub rows: usize,
    pub cols: usize,
    /// `(row, col, weight)` triplets, weight >= 1, sorted by (row, col).
    pub entries: Vec<(u32, u32, u64)>,
    pub row_workloads: Vec<u64>,
    pub col_workloads: Vec<u64>,
    pub total: u64,
}

impl WorkloadMatrix {
    /// Build from triplets; duplicates are summed, zero weights dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (u32, u32, u64)>,
    ) -> Result<WorkloadMatrix> {
        let mut merged: std::collections::BTreeMap<(u32, u32), u64> = Default::default();
        for (r, c, v) in triplets {
            if (r as usize) >= rows || (c as usize) >= cols {
                return Err(Error::Dimension(format!(
                    "entry ({}, {}) outside {}x{}",
                    r, c, rows, cols
                )));
            }
            if v > 0 {
                *merged.entry((r, c)).or_insert(0) += v;
            }
        }
        let entries: Vec<(u32, u32, u64)> =
            merged.into_iter().map(|((r, c), v)| (r, c, v)).collect();
        let mut row_workloads = vec![0u64; rows];
        let mut col_workloads = vec![0u64; cols];
        let mut total = 0u64;
        for &(r, c, v) in &entries {
            row_workloads[r as usize] += v;
            col_workloads[c as usize] += v;
            total += v;
        }
        Ok(WorkloadMatrix {
            rows,
            cols,
            entries,
            row_workloads,
            col_workloads,
            total,
        })
    }

    /// Build from a dense matrix (tests and tiny instances).
    pub fn from_dense(dense: &[Vec<u64>]) -> Result<WorkloadMatrix> {
        let rows = dense.len();
        let cols = dense.first().map_or(0, |r| r.len());
        if dense.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged dense matrix".into()));
        }
        let triplets = dense.iter().enumerate().flat_map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(move |(c, &v)| (r as u32, c as u32, v))
        });
        WorkloadMatrix::from_triplets(rows, cols, triplets)
    }

    /// Dense copy (tests and tiny instances only).
    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        let mut dense = vec![vec![0u64; self.cols]; self.rows];
        for &(r, c, v) in &self.entries {
            dense[r as usize][c as usize] = v;
        }
        dense
    }

    /// Transposed matrix (sanity checks).
    pub fn transpose(&self) -> WorkloadMatrix {
        let triplets = self.entries.iter().map(|&(r, c, v)| (c, r, v));
        WorkloadMatrix::from_triplets(self.cols, self.rows, triplets)
            .expect("transpose preserves bounds")
    }
}

/// Count one workload unit per word occurrence: r_jw = count of word w in doc j.
pub fn build_workload(corpus: &Corpus) -> WorkloadMatrix {
    let triplets = corpus.docs.iter().enumerate().flat_map(|(j, doc)| {
        doc.iter().map(move |&(w, c)| (j as u32, w, c as u64))
    });
    WorkloadMatrix::from_triplets(corpus.doc_count, corpus.vocab_size, triplets)
        .expect("corpus ids are in range")
}

/// Document-by-timestamp workload matrix: r'_jt = multiplicity of timestamp
/// t in document j's array. Every row workload equals the array length.
pub fn build_bot_workload(timestamps: &TimestampTable, doc_count: usize) -> WorkloadMatrix {
    assert_eq!(
        timestamps.arrays.len(),
        doc_count,
        "timestamp table must cover every document"
    );
    let mut triplets = Vec::new();
    for (j, arr) in timestamps.arrays.iter().enumerate() {
        let mut counts = vec![0u64; timestamps.timestamp_vocab_size];
        for &t in arr {
            counts[t as usize] += 1;
        }
        for (t, &c) in counts.iter().enumerate() {
            if c > 0 {
                triplets.push((j as u32, t as u32, c));
            }
        }
    }
    WorkloadMatrix::from_triplets(doc_count, timestamps.timestamp_vocab_size, triplets)
        .expect("timestamp ids are in range")
}

/// Row/column permutations plus P cut boundaries on each permuted order.
///
/// Group J_m holds the permuted rows in `row_perm[row_cuts[m]..row_cuts[m+1]]`,
/// likewise V_n for columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partitioning {
    pub p: usize,
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
    pub row_cuts: Vec<usize>,
    pub col_cuts: Vec<usize>,
}

fn check_perm(perm: &[usize], what: &str) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &i in perm {
        if i >= perm.len() || seen[i] {
            return Err(Error::Dimension(format!("{} is not a permutation", what)));
        }
        seen[i] = true;
    }
    Ok(())
}

fn check_cuts(cuts: &[usize], p: usize, len: usize, what: &str) -> Result<()> {
    if cuts.len() != p + 1 || cuts[0] != 0 || cuts[p] != len {
        return Err(Error::Dimension(format!(
            "{} must be {}+1 boundaries from 0 to {}",
            what, p, len
        )));
    }
    if cuts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Dimension(format!("{} not monotone", what)));
    }
    Ok(())
}

impl Partitioning {
    pub fn new(
        p: usize,
        row_perm: Vec<usize>,
        col_perm: Vec<usize>,
        row_cuts: Vec<usize>,
        col_cuts: Vec<usize>,
    ) -> Result<Partitioning> {
        let part = Partitioning {
            p,
            row_perm,
            col_perm,
            row_cuts,
            col_cuts,
        };
        part.validate()?;
        Ok(part)
    }

    /// Build from explicit group assignments (group id per row, per column).
    /// Rows keep ascending id order within each group.
    pub fn from_assignments(p: usize, row_group: &[u32], col_group: &[u32]) -> Result<Partitioning> {
        fn side(p: usize, group: &[u32], what: &str) -> Result<(Vec<usize>, Vec<usize>)> {
            if let Some(&g) = group.iter().find(|&&g| (g as usize) >= p) {
                return Err(Error::Dimension(format!("{} group id {} >= {}", what, g, p)));
            }
            let mut perm: Vec<usize> = (0..group.len()).collect();
            perm.sort_by_key(|&i| group[i]);
            let mut cuts = Vec::with_capacity(p + 1);
            cuts.push(0);
            for g in 0..p {
                let prev = *cuts.last().unwrap();
                let end = prev + perm[prev..].iter().take_while(|&&i| group[i] as usize == g).count();
                cuts.push(end);
            }
            Ok((perm, cuts))
        }
        let (row_perm, row_cuts) = side(p, row_group, "row")?;
        let (col_perm, col_cuts) = side(p, col_group, "column")?;
        Partitioning::new(p, row_perm, col_perm, row_cuts, col_cuts)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Dimension("P must be >= 1".into()));
        }
        check_perm(&self.row_perm, "row_perm")?;
        check_perm(&self.col_perm, "col_perm")?;
        check_cuts(&self.row_cuts, self.p, self.row_perm.len(), "row_cuts")?;
        check_cuts(&self.col_cuts, self.p, self.col_perm.len(), "col_cuts")?;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.row_perm.len()
    }

    pub fn cols(&self) -> usize {
        self.col_perm.len()
    }

    /// Row ids in group J_m, in permutation order.
    pub fn row_group(&self, m: usize) -> &[usize] {
        &self.row_perm[self.row_cuts[m]..self.row_cuts[m + 1]]
    }

    /// Column ids in group V_n, in permutation order.
    pub fn col_group(&self, n: usize) -> &[usize] {
        &self.col_perm[self.col_cuts[n]..self.col_cuts[n + 1]]
    }

    /// Lookup array: row id -> group id.
    pub fn row_group_ids(&self) -> Vec<u32> {
        let mut ids = vec![0u32; self.rows()];
        for m in 0..self.p {
            for &j in self.row_group(m) {
                ids[j] = m as u32;
            }
        }
        ids
    }

    /// Lookup array: column id -> group id.
    pub fn col_group_ids(&self) -> Vec<u32> {
        let mut ids = vec![0u32; self.cols()];
        for n in 0..self.p {
            for &w in self.col_group(n) {
                ids[w] = n as u32;
            }
        }
        ids
    }

    /// The same partitioning on the transposed matrix: rows and columns swapped.
    pub fn swap_axes(&self) -> Partitioning {
        Partitioning {
            p: self.p,
            row_perm: self.col_perm.clone(),
            col_perm: self.row_perm.clone(),
            row_cuts: self.col_cuts.clone(),
            col_cuts: self.row_cuts.clone(),
        }
    }
}

/// Block costs, per-diagonal maxima, and the load-balancing ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub p: usize,
    /// C_mn: cost of block (row group m, column group n).
    pub partition_costs: Vec<Vec<u64>>,
    /// Entry l = max block cost on diagonal l (pairs with n = (m + l) mod P).
    pub epoch_max: Vec<u64>,
    /// C = sum of epoch maxima.
    pub total_cost: u64,
    /// C_opt = total / P, kept real-valued.
    pub optimum: f64,
    /// eta = C_opt / C (1.0 for an empty matrix).
    pub eta: f64,
    pub predicted_speedup: f64,
}

impl BalanceReport {
    /// Flat key=value block, one field per line.
    pub fn to_kv_block(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("p={}\n", self.p));
        out.push_str(&format!("total_cost={}\n", self.total_cost));
        out.push_str(&format!("optimum={:.6}\n", self.optimum));
        out.push_str(&format!("eta={:.6}\n", self.eta));
        out.push_str(&format!("predicted_speedup={:.6}\n", self.predicted_speedup));
        let epochs: Vec<String> = self.epoch_max.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("epoch_max={}\n", epochs.join(",")));
        let rows: Vec<String> = self
            .partition_costs
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        out.push_str(&format!("partition_costs={}\n", rows.join(";")));
        out
    }

    pub fn csv_header() -> &'static str {
        "algorithm,p,eta,predicted_speedup"
    }

    pub fn csv_row(&self, algorithm: &str) -> String {
        format!(
            "{},{},{:.6},{:.6}",
            algorithm, self.p, self.eta, self.predicted_speedup
        )
    }
}

/// Evaluate block costs and the load-balancing ratio of a partitioning.
///
/// Single sweep over the sparse entries with group-id lookup arrays; no
/// dense blocks are materialized.
pub fn balance_report(matrix: &WorkloadMatrix, partitioning: &Partitioning) -> Result<BalanceReport> {
    partitioning.validate()?;
    if partitioning.rows() != matrix.rows || partitioning.cols() != matrix.cols {
        return Err(Error::Dimension(format!(
            "partitioning is {}x{} but matrix is {}x{}",
            partitioning.rows(),
            partitioning.cols(),
            matrix.rows,
            matrix.cols
        )));
    }
    let p = partitioning.p;
    let row_ids = partitioning.row_group_ids();
    let col_ids = partitioning.col_group_ids();
    let mut partition_costs = vec![vec![0u64; p]; p];
    for &(r, c, v) in &matrix.entries {
        partition_costs[row_ids[r as usize] as usize][col_ids[c as usize] as usize] += v;
    }
    let epoch_max: Vec<u64> = (0..p)
        .map(|l| {
            (0..p)
                .map(|m| partition_costs[m][(m + l) % p])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let total_cost: u64 = epoch_max.iter().sum();
    let optimum = matrix.total as f64 / p as f64;
    let eta = if matrix.total == 0 {
        1.0
    } else {
        optimum / total_cost as f64
    };
    Ok(BalanceReport {
        p,
        partition_costs,
        epoch_max,
        total_cost,
        optimum,
        eta,
        predicted_speedup: eta * p as f64,
    })
}

/// Cut a permuted workload sequence into P contiguous groups of roughly
/// equal token totals: b_0 = 0, b_P = M, and b_k is the smallest index
/// whose prefix sum reaches k/P of the total. Integer arithmetic only.
pub fn equal_token_cut(workloads: &[u64], p: usize) -> Result<Vec<usize>> {
    let m = workloads.len();
    if p == 0 {
        return Err(Error::Config("P must be >= 1".into()));
    }
    if p > m {
        return Err(Error::Config(format!(
            "P = {} exceeds the {} rows/columns available; some group would be empty",
            p, m
        )));
    }
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(0u64);
    for &w in workloads {
        prefix.push(prefix.last().unwrap() + w);
    }
    let total = *prefix.last().unwrap() as u128;
    let mut cuts = Vec::with_capacity(p + 1);
    cuts.push(0);
    for k in 1..p {
        let quota = k as u128 * total;
        let b = prefix.partition_point(|&s| (s as u128) * (p as u128) < quota);
        cuts.push(b);
    }
    cuts.push(m);
    Ok(cuts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::rng;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn two_doc_corpus() -> Corpus {
        Corpus::from_docs(3, vec![vec![(0, 4)], vec![(2, 1)]]).unwrap()
    }

    #[test]
    fn build_workload_sums() {
        let m = build_workload(&two_doc_corpus());
        assert_eq!(m.row_workloads, vec![4, 1]);
        assert_eq!(m.col_workloads, vec![4, 0, 1]);
        assert_eq!(m.total, 5);
        assert_eq!(m.entries, vec![(0, 0, 4), (1, 2, 1)]);
    }

    #[test]
    fn empty_document_gives_zero_row() {
        let c = Corpus::from_docs(2, vec![vec![], vec![(1, 3)]]).unwrap();
        let m = build_workload(&c);
        assert_eq!(m.row_workloads, vec![0, 3]);
        assert_eq!(m.total, 3);
    }

    #[test]
    fn bot_workload_replicated_years() {
        let t = TimestampTable::from_raw(&[1990, 2003], 16).unwrap();
        let m = build_bot_workload(&t, 2);
        assert_eq!(m.to_dense(), vec![vec![16, 0], vec![0, 16]]);
        assert!(m.row_workloads.iter().all(|&r| r == 16));
    }

    #[test]
    fn bot_workload_single_timestamp() {
        let t = TimestampTable::from_raw(&[7, 7, 7], 16).unwrap();
        let m = build_bot_workload(&t, 3);
        assert_eq!(m.cols, 1);
        assert_eq!(m.col_workloads, vec![48]);
    }

    fn identity_partitioning(p: usize, rows: usize, cols: usize, row_cuts: Vec<usize>, col_cuts: Vec<usize>) -> Partitioning {
        Partitioning::new(
            p,
            (0..rows).collect(),
            (0..cols).collect(),
            row_cuts,
            col_cuts,
        )
        .unwrap()
    }

    #[test]
    fn balance_report_symmetric_2x2() {
        let m = WorkloadMatrix::from_dense(&[vec![3, 1], vec![1, 3]]).unwrap();
        let part = identity_partitioning(2, 2, 2, vec![0, 1, 2], vec![0, 1, 2]);
        let r = balance_report(&m, &part).unwrap();
        assert_eq!(r.partition_costs, vec![vec![3, 1], vec![1, 3]]);
        assert_eq!(r.epoch_max, vec![3, 1]);
        assert_eq!(r.total_cost, 4);
        assert_eq!(r.optimum, 4.0);
        assert_eq!(r.eta, 1.0);
        assert_eq!(r.predicted_speedup, 2.0);
    }

    #[test]
    fn balance_report_all_mass_in_one_block() {
        let m = WorkloadMatrix::from_dense(&[vec![4, 0], vec![0, 0]]).unwrap();
        let part = identity_partitioning(2, 2, 2, vec![0, 1, 2], vec![0, 1, 2]);
        let r = balance_report(&m, &part).unwrap();
        assert_eq!(r.total_cost, 4);
        assert_eq!(r.eta, 0.5);
        assert_eq!(r.predicted_speedup, 1.0);
    }

    #[test]
    fn balance_report_dimension_mismatch() {
        let m = WorkloadMatrix::from_dense(&[vec![1, 2], vec![3, 4]]).unwrap();
        let part = identity_partitioning(2, 3, 2, vec![0, 1, 3], vec![0, 1, 2]);
        assert!(matches!(
            balance_report(&m, &part),
            Err(Error::Dimension(_))
        ));
    }

    /// Independent dense recomputation: explicit group sets, triple loops.
    #[allow(clippy::needless_range_loop)]
    fn dense_report(dense: &[Vec<u64>], part: &Partitioning) -> (Vec<Vec<u64>>, Vec<u64>, f64) {
        let p = part.p;
        let mut costs = vec![vec![0u64; p]; p];
        for m in 0..p {
            for n in 0..p {
                let js: Vec<usize> = part.row_perm[part.row_cuts[m]..part.row_cuts[m + 1]].to_vec();
                let ws: Vec<usize> = part.col_perm[part.col_cuts[n]..part.col_cuts[n + 1]].to_vec();
                for &j in &js {
                    for &w in &ws {
                        costs[m][n] += dense[j][w];
                    }
                }
            }
        }
        let maxes: Vec<u64> = (0..p)
            .map(|l| (0..p).map(|m| costs[m][(m + l) % p]).max().unwrap())
            .collect();
        let c: u64 = maxes.iter().sum();
        let total: u64 = dense.iter().flatten().sum();
        let eta = if total == 0 {
            1.0
        } else {
            (total as f64 / p as f64) / c as f64
        };
        (costs, maxes, eta)
    }

    fn random_partitioning(rng: &mut impl Rng, p: usize, rows: usize, cols: usize) -> Partitioning {
        let mut row_perm: Vec<usize> = (0..rows).collect();
        let mut col_perm: Vec<usize> = (0..cols).collect();
        row_perm.shuffle(rng);
        col_perm.shuffle(rng);
        let mut cut = |len: usize| {
            let mut inner: Vec<usize> = (0..p - 1).map(|_| rng.gen_range(0..=len)).collect();
            inner.sort_unstable();
            let mut cuts = vec![0];
            cuts.extend(inner);
            cuts.push(len);
            cuts
        };
        let row_cuts = cut(rows);
        let col_cuts = cut(cols);
        Partitioning::new(p, row_perm, col_perm, row_cuts, col_cuts).unwrap()
    }

    #[test]
    fn matches_dense_recomputation_on_random_6x6() {
        let mut rng = rng::stream(42, &[1]);
        for _ in 0..25 {
            let dense: Vec<Vec<u64>> = (0..6)
                .map(|_| (0..6).map(|_| rng.gen_range(0..9)).collect())
                .collect();
            let m = WorkloadMatrix::from_dense(&dense).unwrap();
            let part = random_partitioning(&mut rng, 3, 6, 6);
            let r = balance_report(&m, &part).unwrap();
            let (costs, maxes, eta) = dense_report(&dense, &part);
            assert_eq!(r.partition_costs, costs);
            assert_eq!(r.epoch_max, maxes);
            assert!((r.eta - eta).abs() < 1e-12);
            let mass: u64 = r.partition_costs.iter().flatten().sum();
            assert_eq!(mass, m.total);
        }
    }

    #[test]
    fn eta_is_one_for_p1() {
        let mut rng = rng::stream(7, &[2]);
        for _ in 0..10 {
            let dense: Vec<Vec<u64>> = (0..5)
                .map(|_| (0..4).map(|_| rng.gen_range(0..20)).collect())
                .collect();
            let m = WorkloadMatrix::from_dense(&dense).unwrap();
            let part = random_partitioning(&mut rng, 1, 5, 4);
            let r = balance_report(&m, &part).unwrap();
            assert_eq!(r.eta, 1.0);
            assert_eq!(r.predicted_speedup, 1.0);
        }
    }

    #[test]
    fn eta_invariant_under_within_group_shuffle() {
        let mut rng = rng::stream(11, &[3]);
        let dense: Vec<Vec<u64>> = (0..8)
            .map(|_| (0..8).map(|_| rng.gen_range(0..15)).collect())
            .collect();
        let m = WorkloadMatrix::from_dense(&dense).unwrap();
        let part = random_partitioning(&mut rng, 3, 8, 8);
        let base = balance_report(&m, &part).unwrap();
        for _ in 0..10 {
            let mut shuffled = part.clone();
            for g in 0..part.p {
                shuffled.row_perm[part.row_cuts[g]..part.row_cuts[g + 1]].shuffle(&mut rng);
                shuffled.col_perm[part.col_cuts[g]..part.col_cuts[g + 1]].shuffle(&mut rng);
            }
            let r = balance_report(&m, &shuffled).unwrap();
            assert_eq!(r.partition_costs, base.partition_costs);
            assert_eq!(r.eta, base.eta);
        }
    }

    #[test]
    fn transpose_sanity() {
        let mut rng = rng::stream(13, &[4]);
        for _ in 0..10 {
            let dense: Vec<Vec<u64>> = (0..6)
                .map(|_| (0..5).map(|_| rng.gen_range(0..10)).collect())
                .collect();
            let m = WorkloadMatrix::from_dense(&dense).unwrap();
            let part = random_partitioning(&mut rng, 3, 6, 5);
            let r = balance_report(&m, &part).unwrap();
            let rt = balance_report(&m.transpose(), &part.swap_axes()).unwrap();
            let p = part.p;
            for a in 0..p {
                for b in 0..p {
                    assert_eq!(rt.partition_costs[a][b], r.partition_costs[b][a]);
                }
            }
            for l in 0..p {
                assert_eq!(rt.epoch_max[l], r.epoch_max[(p - l) % p]);
            }
            assert_eq!(rt.total_cost, r.total_cost);
            assert!((rt.eta - r.eta).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_token_cut_examples() {
        assert_eq!(equal_token_cut(&[5, 3, 2, 2], 2).unwrap(), vec![0, 2, 4]);
        assert_eq!(equal_token_cut(&[2, 2, 2, 2], 2).unwrap(), vec![0, 2, 4]);
        assert_eq!(equal_token_cut(&[9, 1, 7, 3, 5], 1).unwrap(), vec![0, 5]);
    }

    #[test]
    fn equal_token_cut_group_sums() {
        let w = [5u64, 3, 2, 2];
        let cuts = equal_token_cut(&w, 2).unwrap();
        let sums: Vec<u64> = cuts.windows(2).map(|c| w[c[0]..c[1]].iter().sum()).collect();
        assert_eq!(sums, vec![8, 4]);
    }

    #[test]
    fn equal_token_cut_rejects_p_over_m() {
        assert!(matches!(
            equal_token_cut(&[1, 2], 3),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn equal_token_cut_zero_total_collapses_left() {
        assert_eq!(equal_token_cut(&[0, 0, 0], 2).unwrap(), vec![0, 0, 3]);
    }

    #[test]
    fn from_assignments_round_trip() {
        let part = Partitioning::from_assignments(3, &[2, 0, 1, 0], &[1, 1, 0]).unwrap();
        assert_eq!(part.row_group_ids(), vec![2, 0, 1, 0]);
        assert_eq!(part.col_group_ids(), vec![1, 1, 0]);
        assert_eq!(part.row_group(0), &[1, 3]);
        assert_eq!(part.row_group(2), &[0]);
    }

    #[test]
    fn kv_block_and_csv() {
        let m = WorkloadMatrix::from_dense(&[vec![3, 1], vec![1, 3]]).unwrap();
        let part = identity_partitioning(2, 2, 2, vec![0, 1, 2], vec![0, 1, 2]);
        let r = balance_report(&m, &part).unwrap();
        let kv = r.to_kv_block();
        assert!(kv.contains("eta=1.000000"));
        assert!(kv.contains("epoch_max=3,1"));
        assert!(kv.contains("partition_costs=3,1;1,3"));
        assert_eq!(r.csv_row("a1"), "a1,2,1.000000,2.000000");
    }

    #[test]
    fn synthetic_column_workloads_are_skewed() {
        let c = corpus::generate_synthetic(2000, 5000, 100, 1.1, 1).unwrap();
        let m = build_workload(&c);
        let mut cols: Vec<u64> = m.col_workloads.clone();
        cols.sort_unstable();
        let median = cols[cols.len() / 2];
        let max = *cols.last().unwrap();
        assert!(
            max > 10 * median.max(1),
            "max {} median {} not skewed",
            max,
            median
        );
    }

    proptest! {
        #[test]
        fn cut_boundaries_are_minimal_and_monotone(
            workloads in proptest::collection::vec(0u64..50, 1..40),
            p_raw in 1usize..10,
        ) {
            let p = p_raw.min(workloads.len());
            let cuts = equal_token_cut(&workloads, p).unwrap();
            prop_assert_eq!(cuts[0], 0);
            prop_assert_eq!(cuts[p], workloads.len());
            let total: u128 = workloads.iter().map(|&w| w as u128).sum();
            let prefix = |b: usize| -> u128 { workloads[..b].iter().map(|&w| w as u128).sum() };
            for k in 1..p {
                let b = cuts[k];
                prop_assert!(cuts[k - 1] <= b);
                prop_assert!(prefix(b) * p as u128 >= k as u128 * total);
                if b > 0 {
                    prop_assert!(prefix(b - 1) * (p as u128) < k as u128 * total);
                }
            }
        }

        #[test]
        fn mass_conservation_random_partitioning(
            seed in 0u64..1000,
            rows in 2usize..9,
            cols in 2usize..9,
            p in 1usize..4,
        ) {
            let p = p.min(rows).min(cols);
            let mut rng = rng::stream(seed, &[99]);
            let dense: Vec<Vec<u64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_range(0..6)).collect())
                .collect();
            let m = WorkloadMatrix::from_dense(&dense).unwrap();
            let part = random_partitioning(&mut rng, p, rows, cols);
            let r = balance_report(&m, &part).unwrap();
            let mass: u64 = r.partition_costs.iter().flatten().sum();
            prop_assert_eq!(mass, m.total);
            if m.total > 0 {
                prop_assert!(r.eta > 0.0 && r.eta <= 1.0 + 1e-12);
            }
        }
    }
}
