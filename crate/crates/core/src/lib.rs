//! Allocation-only core of the `divcap` toolkit.
//!
//! Everything here is pure computation over in-memory values: the long-video
//! data model, caption-pool generation logic (prompts, parsing, the offline
//! mock backend), text statistics, retrieval metrics, the contrastive
//! dual-encoder trainer and the annotation-study construction and
//! aggregation. File formats, networking and the CLI live in the `divcap`
//! crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod augment;
pub mod corpus;
pub mod embed;
pub mod hash;
pub mod kind;
pub mod lexicon;
pub mod math;
pub mod retrieval;
pub mod rng;
pub mod survey;
pub mod textstats;
pub mod train;

pub use kind::CaptionKind;
