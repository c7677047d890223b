//! Analysis toolkit for phonological structure in frame-level speech
//! representations.
//!
//! The crate consumes per-layer feature dumps plus frame-indexed phone
//! alignments (see [`corpus`]) and runs four families of analyses over them:
//!
//! - phonological analogy success rates, standard and position-shifted
//!   ([`analogy`]),
//! - difference-of-means phonological vectors per relative phone position,
//!   with orthogonality and norm summaries ([`phonovec`]),
//! - boundary-window similarity curves and full-utterance traces
//!   ([`boundary`]),
//! - ZCA whitening and mask-filling similarity ([`whitening`]).
//!
//! [`synth`] generates corpora in which frame representations are exact
//! position-weighted sums of planted orthonormal feature vectors; those
//! corpora serve as ground truth for the test suites.

pub mod analogy;
pub mod boundary;
pub mod corpus;
pub mod phonology;
pub mod phonovec;
pub mod pooling;
pub mod rng;
pub mod stats;
pub mod svg;
pub mod synth;
pub mod vector;
pub mod whitening;

pub use corpus::{Corpus, FeatureMatrix, FrameRows, PhoneSegment, UtteranceRecord};
pub use phonology::{FeatureValue, NaturalClass, PhoneMapping, PhonoFeatureTable};
pub use pooling::PoolingKind;
