//! Min-sum belief propagation.
//!
//! Produces posterior log-likelihood ratios (lower means more likely to be
//! in error) and a hard decision, and reports whether the hard decision
//! reproduces the syndrome. Used on its own and as the pre-decoder for OSD
//! and LSD.

use thiserror::Error;

use crate::gf2::SparseBinaryMatrix;
use crate::model::{DetectorModel, Syndrome};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Schedule {
    /// All check messages from the previous variable messages, then all
    /// variable messages.
    #[default]
    Parallel,
    /// Variables updated in index order, each seeing the latest messages.
    Serial,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpConfig<T> {
    pub max_iterations: usize,
    pub scaling_factor: T,
    pub schedule: Schedule,
    /// Bound on message magnitudes.
    pub clip: T,
}

impl<T: Real> Default for BpConfig<T> {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            scaling_factor: T::of(0.625),
            schedule: Schedule::Parallel,
            clip: T::of(50.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BpError {
    #[error("max_iterations must be at least 1")]
    NoIterations,
    #[error("scaling factor {0} outside (0, 1]")]
    ScalingFactor(f64),
    #[error("clip bound {0} must be positive")]
    Clip(f64),
    #[error("{got} channel LLRs for {expected} faults")]
    LlrCount { got: usize, expected: usize },
}

impl<T: Real> BpConfig<T> {
    pub fn validate(&self) -> Result<(), BpError> {
        if self.max_iterations == 0 {
            return Err(BpError::NoIterations);
        }
        if !(self.scaling_factor > T::zero() && self.scaling_factor <= T::one()) {
            return Err(BpError::ScalingFactor(self.scaling_factor.to_f64().unwrap_or(f64::NAN)));
        }
        if self.clip.is_nan() || self.clip <= T::zero() {
            return Err(BpError::Clip(self.clip.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpOutput<T> {
    pub converged: bool,
    /// Iterations run; equals the converging iteration when `converged`.
    pub iterations: usize,
    /// Sorted support of the hard decision.
    pub hard: Vec<usize>,
    /// Posterior LLRs at termination.
    pub llrs: Vec<T>,
}

/// Min-sum decoder bound to one detector matrix and prior vector.
#[derive(Clone, Debug)]
pub struct BpDecoder<T> {
    config: BpConfig<T>,
    channel: Vec<T>,
    // Edge e joins check edge_check[e] and variable edge_var[e].
    edge_check: Vec<usize>,
    edge_var: Vec<usize>,
    check_edges: Vec<Vec<usize>>,
    var_edges: Vec<Vec<usize>>,
}

impl<T: Real> BpDecoder<T> {
    pub fn new(h: &SparseBinaryMatrix, channel_llrs: Vec<T>, config: BpConfig<T>) -> Result<Self, BpError> {
        config.validate()?;
        if channel_llrs.len() != h.num_cols() {
            return Err(BpError::LlrCount {
                got: channel_llrs.len(),
                expected: h.num_cols(),
            });
        }
        let mut edge_check = Vec::with_capacity(h.nnz());
        let mut edge_var = Vec::with_capacity(h.nnz());
        let mut check_edges = vec![Vec::new(); h.num_rows()];
        let mut var_edges = vec![Vec::new(); h.num_cols()];
        for (c, edges) in check_edges.iter_mut().enumerate() {
            for &v in h.row(c) {
                let e = edge_var.len();
                edge_check.push(c);
                edge_var.push(v);
                edges.push(e);
                var_edges[v].push(e);
            }
        }
        Ok(Self {
            config,
            channel: channel_llrs,
            edge_check,
            edge_var,
            check_edges,
            var_edges,
        })
    }

    pub fn for_model(model: &DetectorModel<T>, config: BpConfig<T>) -> Result<Self, BpError> {
        Self::new(model.h(), model.channel_llrs(), config)
    }

    pub fn config(&self) -> &BpConfig<T> {
        &self.config
    }

    pub fn channel_llrs(&self) -> &[T] {
        &self.channel
    }

    fn clip(&self, x: T) -> T {
        let c = self.config.clip;
        x.max(-c).min(c)
    }

    /// Check-to-variable messages of check `c` computed from `q`.
    fn check_update(&self, c: usize, flipped: bool, q: &[T], r: &mut [T]) {
        let edges = &self.check_edges[c];
        let mut negative = flipped;
        let mut min1 = T::infinity();
        let mut min2 = T::infinity();
        let mut argmin = usize::MAX;
        for &e in edges {
            let m = q[e];
            if m < T::zero() {
                negative = !negative;
            }
            let a = m.abs();
            if a < min1 {
                min2 = min1;
                min1 = a;
                argmin = e;
            } else if a < min2 {
                min2 = a;
            }
        }
        for &e in edges {
            let mag = if e == argmin { min2 } else { min1 };
            let own_negative = q[e] < T::zero();
            let sign = if negative != own_negative { -T::one() } else { T::one() };
            r[e] = self.clip(sign * self.config.scaling_factor * mag);
        }
    }

    fn syndrome_matches(&self, hard: &[bool], s: &[bool]) -> bool {
        self.check_edges.iter().enumerate().all(|(c, edges)| {
            let parity = edges.iter().filter(|&&e| hard[self.edge_var[e]]).count() % 2 == 1;
            parity == s[c]
        })
    }

    pub fn decode(&self, syndrome: &Syndrome) -> BpOutput<T> {
        let n = self.channel.len();
        let s = syndrome.to_dense(self.check_edges.len());
        let mut q: Vec<T> = self.edge_var.iter().map(|&v| self.clip(self.channel[v])).collect();
        let mut r = vec![T::zero(); q.len()];
        let mut post = self.channel.clone();
        let mut hard = vec![false; n];
        let mut converged = false;
        let mut iterations = 0;

        for it in 1..=self.config.max_iterations {
            iterations = it;
            match self.config.schedule {
                Schedule::Parallel => {
                    for c in 0..self.check_edges.len() {
                        self.check_update(c, s[c], &q, &mut r);
                    }
                    for v in 0..n {
                        let total = self.var_edges[v].iter().fold(self.channel[v], |acc, &e| acc + r[e]);
                        post[v] = total;
                        for &e in &self.var_edges[v] {
                            q[e] = self.clip(total - r[e]);
                        }
                    }
                }
                Schedule::Serial => {
                    let mut scratch = r.clone();
                    for v in 0..n {
                        for &e in &self.var_edges[v] {
                            let c = self.edge_check[e];
                            self.check_update(c, s[c], &q, &mut scratch);
                            r[e] = scratch[e];
                        }
                        let total = self.var_edges[v].iter().fold(self.channel[v], |acc, &e| acc + r[e]);
                        post[v] = total;
                        for &e in &self.var_edges[v] {
                            q[e] = self.clip(total - r[e]);
                        }
                    }
                }
            }
            for v in 0..n {
                hard[v] = post[v] < T::zero();
            }
            if self.syndrome_matches(&hard, &s) {
                converged = true;
                break;
            }
        }

        BpOutput {
            converged,
            iterations,
            hard: crate::gf2::support_of(&hard),
            llrs: post,
        }
    }
}

/// One-shot convenience wrapper around [`BpDecoder`].
pub fn bp_decode<T: Real>(
    model: &DetectorModel<T>,
    syndrome: &Syndrome,
    config: BpConfig<T>,
) -> Result<BpOutput<T>, BpError> {
    Ok(BpDecoder::for_model(model, config)?.decode(syndrome))
}
