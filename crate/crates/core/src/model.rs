//! Decoding-problem data model: detector models, syndromes, fault graphs and
//! the DEM-TEXT file format.
//!
//! DEM-TEXT is line oriented; `#` starts a comment:
//!
//! ```text
//! qdem 1 <num_detectors> <num_faults> <num_observables>
//! f <prob> d <d0> <d1> ... [L <l0> <l1> ...]
//! ```
//!
//! with one `f` line per fault in column order.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::gf2::{Gf2Error, SparseBinaryMatrix};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("prior of fault {fault} is {value}, expected a value in (0, 1)")]
    PriorOutOfRange { fault: usize, value: f64 },
    #[error("{priors} priors for {faults} faults")]
    PriorCount { priors: usize, faults: usize },
    #[error("observable matrix has {got} columns, detector matrix has {expected}")]
    ObservableShape { got: usize, expected: usize },
    #[error("syndrome bit {bit} is outside {num_detectors} detectors")]
    SyndromeOutOfRange { bit: usize, num_detectors: usize },
    #[error(transparent)]
    Matrix(#[from] Gf2Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Parse {
        line,
        message: message.into(),
    }
}

/// Detector matrix, per-fault priors and the fault-to-observable map.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorModel<T> {
    h: SparseBinaryMatrix,
    priors: Vec<T>,
    observables: SparseBinaryMatrix,
}

impl<T: Real> DetectorModel<T> {
    pub fn new(
        h: SparseBinaryMatrix,
        priors: Vec<T>,
        observables: SparseBinaryMatrix,
    ) -> Result<Self, ModelError> {
        if priors.len() != h.num_cols() {
            return Err(ModelError::PriorCount {
                priors: priors.len(),
                faults: h.num_cols(),
            });
        }
        if let Some((fault, &p)) = priors
            .iter()
            .enumerate()
            .find(|(_, &p)| !(p > T::zero() && p < T::one()))
        {
            return Err(ModelError::PriorOutOfRange {
                fault,
                value: p.to_f64().unwrap_or(f64::NAN),
            });
        }
        if observables.num_cols() != h.num_cols() {
            return Err(ModelError::ObservableShape {
                got: observables.num_cols(),
                expected: h.num_cols(),
            });
        }
        Ok(Self {
            h,
            priors,
            observables,
        })
    }

    /// Model with the same prior on every fault.
    pub fn uniform(h: SparseBinaryMatrix, p: T, observables: SparseBinaryMatrix) -> Result<Self, ModelError> {
        let priors = vec![p; h.num_cols()];
        Self::new(h, priors, observables)
    }

    pub fn h(&self) -> &SparseBinaryMatrix {
        &self.h
    }

    pub fn priors(&self) -> &[T] {
        &self.priors
    }

    pub fn observables(&self) -> &SparseBinaryMatrix {
        &self.observables
    }

    pub fn num_detectors(&self) -> usize {
        self.h.num_rows()
    }

    pub fn num_faults(&self) -> usize {
        self.h.num_cols()
    }

    pub fn num_observables(&self) -> usize {
        self.observables.num_rows()
    }

    /// Channel log-likelihood ratios `ln((1-p)/p)`.
    pub fn channel_llrs(&self) -> Vec<T> {
        self.priors.iter().map(|&p| T::llr_of_probability(p)).collect()
    }

    pub fn syndrome_of(&self, error: &[usize]) -> Syndrome {
        Syndrome(self.h.mul_support(error))
    }

    /// Whether `observables · (e ⊕ ê)` is nonzero.
    pub fn is_logical_failure(&self, error: &[usize], correction: &[usize]) -> bool {
        let residual = crate::gf2::xor_supports(error, correction);
        !self.observables.mul_support(&residual).is_empty()
    }

    pub fn with_priors(&self, priors: Vec<T>) -> Result<Self, ModelError> {
        Self::new(self.h.clone(), priors, self.observables.clone())
    }

    /// Parses DEM-TEXT.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut cols: Vec<Vec<usize>> = Vec::new();
        let mut obs: Vec<Vec<usize>> = Vec::new();
        let mut priors: Vec<T> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let Some((nd, nf, no)) = header else {
                let fields: Vec<&str> = tokens.collect();
                if fields.len() != 5 || fields[0] != "qdem" {
                    return Err(parse_err(line_no, "expected header `qdem 1 <detectors> <faults> <observables>`"));
                }
                if fields[1] != "1" {
                    return Err(parse_err(line_no, format!("unsupported version `{}`", fields[1])));
                }
                let num = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| parse_err(line_no, format!("invalid count `{s}`")))
                };
                header = Some((num(fields[2])?, num(fields[3])?, num(fields[4])?));
                continue;
            };

            if tokens.next() != Some("f") {
                return Err(parse_err(line_no, "expected a fault line starting with `f`"));
            }
            if cols.len() == nf {
                return Err(parse_err(line_no, format!("more than {nf} fault lines")));
            }
            let prob_tok = tokens
                .next()
                .ok_or_else(|| parse_err(line_no, "missing probability"))?;
            let prob: f64 = prob_tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("invalid probability `{prob_tok}`")))?;
            if !(prob > 0.0 && prob < 1.0) {
                return Err(parse_err(line_no, format!("probability {prob} outside (0, 1)")));
            }
            if tokens.next() != Some("d") {
                return Err(parse_err(line_no, "expected `d` after the probability"));
            }
            let mut dets = Vec::new();
            let mut lobs = Vec::new();
            let mut in_obs = false;
            for tok in tokens {
                if tok == "L" {
                    if in_obs {
                        return Err(parse_err(line_no, "repeated `L`"));
                    }
                    in_obs = true;
                    continue;
                }
                let v: usize = tok
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("invalid index `{tok}`")))?;
                let (list, bound, what) = if in_obs {
                    (&mut lobs, no, "observable")
                } else {
                    (&mut dets, nd, "detector")
                };
                if v >= bound {
                    return Err(parse_err(line_no, format!("{what} index {v} out of range (< {bound})")));
                }
                if list.contains(&v) {
                    return Err(parse_err(line_no, format!("repeated {what} index {v}")));
                }
                list.push(v);
            }
            cols.push(dets);
            obs.push(lobs);
            priors.push(T::of(prob));
        }

        let (nd, nf, no) = header.ok_or_else(|| parse_err(0, "missing header"))?;
        if cols.len() != nf {
            return Err(parse_err(
                text.lines().count(),
                format!("expected {nf} fault lines, found {}", cols.len()),
            ));
        }
        let h = SparseBinaryMatrix::from_columns(nd, cols)?;
        let observables = SparseBinaryMatrix::from_columns(no, obs)?;
        Self::new(h, priors, observables)
    }

    /// Renders DEM-TEXT.
    pub fn to_dem_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "qdem 1 {} {} {}",
            self.num_detectors(),
            self.num_faults(),
            self.num_observables()
        )
        .unwrap();
        for c in 0..self.num_faults() {
            write!(out, "f {} d", self.priors[c]).unwrap();
            for d in self.h.col(c) {
                write!(out, " {d}").unwrap();
            }
            let obs = self.observables.col(c);
            if !obs.is_empty() {
                out.push_str(" L");
                for l in obs {
                    write!(out, " {l}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn load_model<T: Real>(path: impl AsRef<Path>) -> Result<DetectorModel<T>, ModelError> {
    DetectorModel::parse(&std::fs::read_to_string(path)?)
}

pub fn save_model<T: Real>(model: &DetectorModel<T>, path: impl AsRef<Path>) -> Result<(), ModelError> {
    std::fs::write(path, model.to_dem_text())?;
    Ok(())
}

/// Sorted support of flipped detectors.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Syndrome(Vec<usize>);

impl Syndrome {
    /// Builds a syndrome from detector indices; repeated indices cancel.
    pub fn new(bits: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = bits.into_iter().collect();
        v.sort_unstable();
        let mut out: Vec<usize> = Vec::with_capacity(v.len());
        for b in v {
            if out.last() == Some(&b) {
                out.pop();
            } else {
                out.push(b);
            }
        }
        Self(out)
    }

    pub fn checked(bits: impl IntoIterator<Item = usize>, num_detectors: usize) -> Result<Self, ModelError> {
        let s = Self::new(bits);
        if let Some(&bit) = s.0.iter().find(|&&b| b >= num_detectors) {
            return Err(ModelError::SyndromeOutOfRange { bit, num_detectors });
        }
        Ok(s)
    }

    pub fn bits(&self) -> &[usize] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, d: usize) -> bool {
        self.0.binary_search(&d).is_ok()
    }

    /// Dense indicator over `n` detectors.
    pub fn to_dense(&self, n: usize) -> Vec<bool> {
        let mut v = vec![false; n];
        for &b in &self.0 {
            v[b] = true;
        }
        v
    }
}

impl From<Vec<usize>> for Syndrome {
    fn from(v: Vec<usize>) -> Self {
        Self::new(v)
    }
}

/// Projection of the Tanner graph onto fault nodes: two faults are adjacent
/// iff they share a detector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultGraph {
    adjacency: Vec<Vec<usize>>,
}

impl FaultGraph {
    pub fn from_matrix(h: &SparseBinaryMatrix) -> Self {
        let n = h.num_cols();
        let mut mark = vec![usize::MAX; n];
        let adjacency = (0..n)
            .map(|f| {
                let mut nbrs = Vec::new();
                mark[f] = f;
                for &d in h.col(f) {
                    for &g in h.row(d) {
                        if mark[g] != f {
                            mark[g] = f;
                            nbrs.push(g);
                        }
                    }
                }
                nbrs.sort_unstable();
                nbrs
            })
            .collect();
        Self { adjacency }
    }

    pub fn neighbors(&self, f: usize) -> &[usize] {
        &self.adjacency[f]
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn degree(&self, f: usize) -> usize {
        self.adjacency[f].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        self.adjacency.iter().map(Vec::len).sum::<usize>() as f64 / self.adjacency.len() as f64
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

pub fn fault_graph<T: Real>(model: &DetectorModel<T>) -> FaultGraph {
    FaultGraph::from_matrix(model.h())
}

/// Connected components of the fault graph restricted to `error`: the
/// clusters of an optimal factorization. Components are sorted internally
/// and ordered by their smallest fault.
pub fn error_clusters(h: &SparseBinaryMatrix, error: &[usize]) -> Vec<Vec<usize>> {
    let n = h.num_cols();
    let mut in_error = vec![false; n];
    for &f in error {
        in_error[f] = true;
    }
    let mut seen = vec![false; n];
    let mut sorted: Vec<usize> = error.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for &start in &sorted {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(f) = queue.pop_front() {
            comp.push(f);
            for &d in h.col(f) {
                for &g in h.row(d) {
                    if in_error[g] && !seen[g] {
                        seen[g] = true;
                        queue.push_back(g);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}
