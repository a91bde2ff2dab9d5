//! Independent reference implementations used by the integration tests:
//! dense Gaussian elimination, brute-force decoding and BFS components.
#![allow(dead_code)]

use std::collections::VecDeque;

use lsd_core::SparseBinaryMatrix;
use rand::Rng;

/// Dense row-major copy of a sparse matrix.
pub fn dense(m: &SparseBinaryMatrix) -> Vec<Vec<bool>> {
    m.to_dense()
        .into_iter()
        .map(|r| r.into_iter().map(|b| b == 1).collect())
        .collect()
}

/// Rank by textbook row reduction.
pub fn dense_rank(mut rows: Vec<Vec<bool>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][c]) else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && rows[r][c] {
                let pivot = rows[rank].clone();
                for (x, y) in rows[r].iter_mut().zip(pivot) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn rank_of(m: &SparseBinaryMatrix) -> usize {
    dense_rank(dense(m))
}

/// `s ∈ image(m)` via `rank([m | s]) == rank(m)`.
pub fn dense_in_image(m: &SparseBinaryMatrix, s: &[usize]) -> bool {
    let mut rows = dense(m);
    for (r, row) in rows.iter_mut().enumerate() {
        row.push(s.contains(&r));
    }
    dense_rank(rows) == rank_of(m)
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, density: f64) -> SparseBinaryMatrix {
    let entries: Vec<(usize, usize)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .filter(|_| rng.random::<f64>() < density)
        .collect();
    SparseBinaryMatrix::from_entries(rows, cols, entries).unwrap()
}

pub fn random_support<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<usize> {
    (0..n).filter(|_| rng.random::<f64>() < density).collect()
}

/// Every error satisfying `h·e = s`, by enumeration (`n ≤ 20`).
pub fn all_solutions(h: &SparseBinaryMatrix, s: &[usize]) -> Vec<Vec<usize>> {
    let n = h.num_cols();
    assert!(n <= 20);
    (0u32..1 << n)
        .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect::<Vec<_>>())
        .filter(|e| h.mul_support(e) == s)
        .collect()
}

/// Minimum soft weight over all solutions, or `None` if there are none.
/// Walks every error in Gray-code order (`n ≤ 24`, at most 64 rows).
pub fn min_soft_weight(h: &SparseBinaryMatrix, s: &[usize], llrs: &[f64]) -> Option<f64> {
    let n = h.num_cols();
    assert!(n <= 24 && h.num_rows() <= 64);
    let cols: Vec<u64> = (0..n).map(|c| h.col(c).iter().fold(0, |acc, &r| acc | 1 << r)).collect();
    let target = s.iter().fold(0u64, |acc, &r| acc | 1 << r);
    let (mut syn, mut mask) = (0u64, 0u32);
    let mut best = (target == 0).then_some(0.0);
    for step in 1u32..1 << n {
        let bit = step.trailing_zeros() as usize;
        syn ^= cols[bit];
        mask ^= 1 << bit;
        if syn == target {
            let exact: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| llrs[i]).sum();
            if best.is_none_or(|b| exact < b) {
                best = Some(exact);
            }
        }
    }
    best
}

/// Connected components of `error` in the fault graph of `h`, each sorted,
/// ordered by smallest element.
pub fn bfs_components(h: &SparseBinaryMatrix, error: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; error.len()];
    let mut out = Vec::new();
    for start in 0..error.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![error[start]];
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..error.len() {
                if !seen[j] && h.col(error[i]).iter().any(|d| h.col(error[j]).contains(d)) {
                    seen[j] = true;
                    comp.push(error[j]);
                    queue.push_back(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort();
    out
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}
