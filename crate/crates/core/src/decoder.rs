//! BP, BP+OSD and BP+LSD pipelines behind one interface.
//!
//! BP always runs first. When it converges its hard decision is returned
//! and the post-processor is skipped; otherwise OSD or LSD runs on the
//! posterior LLRs. An empty syndrome decodes to the empty correction
//! without running anything.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bp::{BpConfig, BpDecoder, BpError};
use crate::gf2::SparseBinaryMatrix;
use crate::lsd::{lsd_decode_matrix, ClusterInfo, ClusterStats, LsdConfig, LsdError};
use crate::model::{DetectorModel, Syndrome};
use crate::osd::{osd_decode, OsdError, OsdMethod};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecoderSpec<T> {
    Bp(BpConfig<T>),
    BpOsd { bp: BpConfig<T>, osd: OsdMethod },
    BpLsd { bp: BpConfig<T>, lsd: LsdConfig },
}

impl<T: Real> DecoderSpec<T> {
    pub fn bp_osd0() -> Self {
        DecoderSpec::BpOsd {
            bp: BpConfig::default(),
            osd: OsdMethod::Osd0,
        }
    }

    pub fn bp_lsd0() -> Self {
        DecoderSpec::BpLsd {
            bp: BpConfig::default(),
            lsd: LsdConfig::default(),
        }
    }

    pub fn bp_config(&self) -> &BpConfig<T> {
        match self {
            DecoderSpec::Bp(bp) | DecoderSpec::BpOsd { bp, .. } | DecoderSpec::BpLsd { bp, .. } => bp,
        }
    }

    /// Short human-readable name, e.g. `bp+lsd`.
    pub fn name(&self) -> &'static str {
        match self {
            DecoderSpec::Bp(_) => "bp",
            DecoderSpec::BpOsd { .. } => "bp+osd",
            DecoderSpec::BpLsd { .. } => "bp+lsd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error(transparent)]
    Bp(#[from] BpError),
    #[error(transparent)]
    Osd(#[from] OsdError),
    #[error(transparent)]
    Lsd(#[from] LsdError),
    #[error("BP did not converge in {iterations} iterations")]
    BpNotConverged { iterations: usize },
}

impl DecodeError {
    pub fn is_unsatisfiable(&self) -> bool {
        matches!(
            self,
            DecodeError::Osd(OsdError::NotInImage) | DecodeError::Lsd(LsdError::Unsatisfiable { .. })
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    /// Sorted support of the correction.
    pub correction: Vec<usize>,
    pub bp_converged: bool,
    pub bp_iterations: usize,
    /// LSD clusters; empty unless LSD ran.
    #[serde(skip)]
    pub clusters: Vec<ClusterInfo>,
    pub stats: ClusterStats,
}

/// A decoder bound to one detector matrix.
#[derive(Clone, Debug)]
pub struct Decoder<T> {
    h: SparseBinaryMatrix,
    bp: BpDecoder<T>,
    spec: DecoderSpec<T>,
}

impl<T: Real> Decoder<T> {
    pub fn new(model: &DetectorModel<T>, spec: DecoderSpec<T>) -> Result<Self, DecodeError> {
        Self::from_parts(model.h().clone(), model.channel_llrs(), spec)
    }

    pub fn from_parts(h: SparseBinaryMatrix, channel_llrs: Vec<T>, spec: DecoderSpec<T>) -> Result<Self, DecodeError> {
        let bp = BpDecoder::new(&h, channel_llrs, *spec.bp_config())?;
        Ok(Self { h, bp, spec })
    }

    pub fn spec(&self) -> &DecoderSpec<T> {
        &self.spec
    }

    pub fn h(&self) -> &SparseBinaryMatrix {
        &self.h
    }

    pub fn decode(&self, syndrome: &Syndrome) -> Result<DecodeOutcome, DecodeError> {
        if syndrome.is_empty() {
            return Ok(DecodeOutcome {
                correction: Vec::new(),
                bp_converged: true,
                bp_iterations: 0,
                clusters: Vec::new(),
                stats: ClusterStats::default(),
            });
        }
        let bp = self.bp.decode(syndrome);
        let mut outcome = DecodeOutcome {
            correction: Vec::new(),
            bp_converged: bp.converged,
            bp_iterations: bp.iterations,
            clusters: Vec::new(),
            stats: ClusterStats::default(),
        };
        if bp.converged {
            outcome.correction = bp.hard;
            return Ok(outcome);
        }
        match &self.spec {
            DecoderSpec::Bp(_) => {
                return Err(DecodeError::BpNotConverged {
                    iterations: bp.iterations,
                })
            }
            DecoderSpec::BpOsd { osd, .. } => {
                outcome.correction = osd_decode(&self.h, syndrome.bits(), &bp.llrs, *osd)?;
            }
            DecoderSpec::BpLsd { lsd, .. } => {
                let out = lsd_decode_matrix(&self.h, syndrome, &bp.llrs, lsd)?;
                outcome.stats = out.stats();
                outcome.correction = out.correction;
                outcome.clusters = out.clusters;
            }
        }
        Ok(outcome)
    }
}
