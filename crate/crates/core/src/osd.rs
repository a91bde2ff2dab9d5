//! Ordered-statistics decoding: order zero, exhaustive order-`w` (OSD-E)
//! and combination sweep (OSD-CS).
//!
//! Columns are ranked by ascending LLR (ties by index) and eliminated in
//! that order; the pivot columns form the information set. Higher orders
//! flip patterns on the non-pivot columns and keep the candidate with the
//! smallest soft weight `Σ llr` over its support, breaking ties by Hamming
//! weight and then by lexicographic support.

use std::cmp::Ordering;

use itertools::Itertools;
use thiserror::Error;

use crate::gf2::{plu_decompose_ordered, SparseBinaryMatrix};
use crate::scalar::{cmp_real, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum OsdMethod {
    #[default]
    Osd0,
    /// Every pattern of weight at most `w` on the non-information columns.
    Exhaustive(usize),
    /// All weight-one patterns, then all weight-two patterns among the `w`
    /// most likely non-information columns.
    CombinationSweep(usize),
}

impl OsdMethod {
    pub fn order(&self) -> usize {
        match *self {
            OsdMethod::Osd0 => 0,
            OsdMethod::Exhaustive(w) | OsdMethod::CombinationSweep(w) => w,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OsdError {
    #[error("syndrome is not in the image of the check matrix")]
    NotInImage,
    #[error("{got} LLRs for {expected} columns")]
    LlrCount { got: usize, expected: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OsdSolution<T> {
    /// Sorted support of the correction.
    pub correction: Vec<usize>,
    pub soft_weight: T,
    /// Pivot columns, in reliability order.
    pub information_set: Vec<usize>,
    /// Candidate patterns evaluated beyond order zero.
    pub patterns_tried: usize,
}

/// Soft weight of a support.
pub fn soft_weight<T: Real>(support: &[usize], llrs: &[T]) -> T {
    support.iter().map(|&i| llrs[i]).sum()
}

/// Columns ordered by ascending `(llr, index)`.
pub fn reliability_order<T: Real>(llrs: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..llrs.len()).collect();
    order.sort_by(|&a, &b| cmp_real(llrs[a], llrs[b]).then(a.cmp(&b)));
    order
}

fn compare_candidates<T: Real>(a: (T, &[usize]), b: (T, &[usize])) -> Ordering {
    cmp_real(a.0, b.0)
        .then(a.1.len().cmp(&b.1.len()))
        .then_with(|| a.1.cmp(b.1))
}

struct Bits(Vec<u64>);

impl Bits {
    fn from_support(n: usize, support: &[usize]) -> Self {
        let mut w = vec![0u64; n.div_ceil(64)];
        for &i in support {
            w[i / 64] ^= 1 << (i % 64);
        }
        Bits(w)
    }

    fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (k, &word) in self.0.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                out.push(k * 64 + b);
                w &= w - 1;
            }
        }
        out
    }
}

pub fn osd_decode<T: Real>(
    h: &SparseBinaryMatrix,
    syndrome: &[usize],
    llrs: &[T],
    method: OsdMethod,
) -> Result<Vec<usize>, OsdError> {
    osd_solve(h, syndrome, llrs, method).map(|s| s.correction)
}

pub fn osd_solve<T: Real>(
    h: &SparseBinaryMatrix,
    syndrome: &[usize],
    llrs: &[T],
    method: OsdMethod,
) -> Result<OsdSolution<T>, OsdError> {
    let n = h.num_cols();
    if llrs.len() != n {
        return Err(OsdError::LlrCount {
            got: llrs.len(),
            expected: n,
        });
    }
    let order = reliability_order(llrs);
    let fact = plu_decompose_ordered(h, order.iter().copied());
    let base = fact.solve(syndrome).map_err(|_| OsdError::NotInImage)?;
    let information_set: Vec<usize> = fact
        .pivot_map()
        .into_iter()
        .map(|(pos, _)| fact.col_order()[pos])
        .collect();
    let free: Vec<usize> = fact
        .dependent_cols()
        .into_iter()
        .map(|pos| fact.col_order()[pos])
        .collect();

    let mut best_weight = soft_weight(&base, llrs);
    let mut best = base;
    let mut patterns_tried = 0;

    let order_w = method.order().min(free.len());
    let search = match method {
        OsdMethod::Osd0 => false,
        OsdMethod::Exhaustive(_) => order_w > 0,
        OsdMethod::CombinationSweep(_) => !free.is_empty(),
    };
    if search {
        // Each free column j contributes the kernel vector e_j + H_I^{-1} h_j.
        let deltas: Vec<Bits> = free
            .iter()
            .map(|&j| {
                let mut v = fact.solve(h.col(j)).expect("every column lies in the image");
                v.push(j);
                Bits::from_support(n, &v)
            })
            .collect();
        let base_bits = Bits::from_support(n, &best);

        let mut consider = |pattern: &[usize]| {
            patterns_tried += 1;
            let mut words = base_bits.0.clone();
            for &k in pattern {
                for (w, d) in words.iter_mut().zip(&deltas[k].0) {
                    *w ^= d;
                }
            }
            let support = Bits(words).support();
            let weight = soft_weight(&support, llrs);
            if compare_candidates((weight, &support), (best_weight, &best)) == Ordering::Less {
                best_weight = weight;
                best = support;
            }
        };

        match method {
            OsdMethod::Osd0 => {}
            OsdMethod::Exhaustive(_) => {
                for k in 1..=order_w {
                    for pattern in (0..free.len()).combinations(k) {
                        consider(&pattern);
                    }
                }
            }
            OsdMethod::CombinationSweep(w) => {
                for k in 0..free.len() {
                    consider(&[k]);
                }
                let sweep = w.min(free.len());
                for pattern in (0..sweep).combinations(2) {
                    consider(&pattern);
                }
            }
        }
    }

    Ok(OsdSolution {
        correction: best,
        soft_weight: best_weight,
        information_set,
        patterns_tried,
    })
}
