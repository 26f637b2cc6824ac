//! Desk-scale simulator for state-of-polarization (SOP) sensing through the
//! taps of a fixed-point CMA equalizer in a coherent DP-QPSK receiver.
//!
//! The crate models the full chain: a synthetic dual-polarization QPSK
//! transmitter and impairment channel ([`channel`]), the receiver DSP
//! front end and a 2x2 MIMO constant-modulus equalizer that can run in
//! float or saturating fixed-point arithmetic ([`rxdsp`], [`fixnum`]),
//! Stokes-space extraction of the SOP trajectory from the equalizer taps
//! ([`sopsense`]), and the communication / sensing quality metrics that
//! quantify the bit-width trade-off ([`metrics`]).
//!
//! The [`harness`] module orchestrates bit-width sweeps, capture ingestion
//! and CSV/report emission; the `cmasense` binary is a thin CLI over it.
//! Start with the runnable examples (`cargo run --example bitwidth_sweep`)
//! for end-to-end usage.

pub mod channel;
pub mod error;
pub mod fixnum;
pub mod harness;
pub mod metrics;
pub mod rxdsp;
pub mod sigproc;
pub mod sopsense;

pub use error::{Error, Result};
