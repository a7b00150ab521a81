//! Coded caching with demand privacy against colluding users.
//!
//! This crate implements the privacy-key coded-caching schemes for single
//! file retrieval (SFR) and linear function retrieval (LFR), together with
//! the machinery needed to evaluate and verify them:
//!
//! * [`gf`] — exact arithmetic over prime fields `F_q`.
//! * [`linalg`] — vectors and matrices over `F_q`: rank, leader-set
//!   selection, and exact linear solving.
//! * [`combin`] — binomial coefficients and canonical subset enumeration.
//! * [`scheme`] — the privacy-key engine: subpacketization, placement with
//!   privacy keys, multicast delivery with leader-set compression, per-user
//!   decoding, and memory sharing between corner points.
//! * [`baselines`] — comparison schemes: virtual-user and non-private corner
//!   points (analytical) and an executable leaky baseline.
//! * [`bounds`] — tradeoff curves, converse and cut-set bounds, non-private
//!   reference loads, and numeric constant-gap certification.
//! * [`audit`] — exact privacy verification by exhaustive enumeration of the
//!   server randomness and demand space.
//!
//! The crate is `no_std` (it requires `alloc`); all I/O, serialization and
//! the command-line front end live in the companion `privcache-cli` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod audit;
pub mod baselines;
pub mod bounds;
pub mod combin;
pub mod gf;
pub mod linalg;
pub mod scheme;

pub use gf::{FieldElement, Fq};
pub use linalg::{FqMatrix, FqVector};
pub use scheme::{SystemParams, Variant};
