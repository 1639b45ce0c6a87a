//! Speaker-diarization clustering engine.
//!
//! The library turns per-segment speaker embeddings plus a
//! voice-activity segmentation into "who spoke when" labels:
//!
//! 1. embedding conditioning — centering/whitening, length normalization and
//!    per-recording PCA ([`transforms`]);
//! 2. pairwise same/different-speaker log-likelihood ratios under a
//!    two-covariance PLDA model ([`plda`]);
//! 3. average-linkage agglomerative clustering with an unsupervised
//!    two-Gaussian score-calibrated stopping threshold ([`ahc`]);
//! 4. refinement with a Bayesian HMM over the embedding sequence, including
//!    automatic speaker-count estimation by dropping redundant speakers
//!    ([`vbhmm`]);
//! 5. optional frame-level resegmentation with an eigenvoice GMM
//!    ([`framevb`]) and overlap post-processing ([`overlap`]).
//!
//! [`metrics`] scores hypotheses against references (DER and Jaccard error
//! rate), [`io`] reads and writes the corpus formats (embedding CSV, VAD
//! label files, RTTM), [`synth`] samples synthetic corpora from the same
//! generative models for testing, and [`pipeline`] wires the stages into
//! ready-made system presets.

pub mod ahc;
pub mod error;
pub mod framevb;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod overlap;
pub mod pipeline;
pub mod plda;
pub mod synth;
pub mod transforms;
pub mod vbhmm;

pub use error::{Error, Result};
