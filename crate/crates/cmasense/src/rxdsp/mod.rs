//! Receiver DSP chain: IQ orthogonalization, carrier frequency offset
//! estimation, Gardner timing recovery, the float/fixed-point CMA 2x2
//! MIMO equalizer with tap-trajectory capture, blind phase search, and
//! DD-LMS refinement.
//!
//! Chain order follows the reference system: GSOP -> coarse CFO ->
//! timing recovery to 1 sample/symbol -> T-spaced CMA -> BPS -> DD-LMS.
//! Only the CMA runs in the configurable arithmetic; everything around it
//! stays in floating point, which is what isolates the equalizer
//! word-width as the experiment variable.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fixnum::FxFormat;
use crate::sopsense::{taps_to_jones, JonesExtraction, JonesMatrix};

mod carrier;
mod cma;
mod frontend;

pub use carrier::{bps_recover, ddlms_run, BpsConfig};
pub use cma::{cma_init, cma_run, cma_step, CmaDiagnostics, CmaOutput, EqState};
pub use frontend::{cfo_estimate, gardner_timing, gsop_orthogonalize, CfoEstimate, GardnerConfig};

/// Which arithmetic the equalizer datapath uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arithmetic {
    /// IEEE double precision; the high-resolution benchmark.
    Float,
    /// Saturating fixed point in the given word format.
    Fixed(FxFormat),
}

impl Arithmetic {
    pub fn label(&self) -> String {
        match self {
            Arithmetic::Float => "float".to_string(),
            Arithmetic::Fixed(fmt) => fmt.to_string(),
        }
    }
}

/// Equalizer configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EqConfig {
    /// Taps per branch of the 2x2 MIMO (odd).
    pub n_taps: usize,
    /// CMA step size.
    pub mu_cma: f64,
    /// Constant-modulus target `R2`; 1 for unit-power QPSK.
    pub r2: f64,
    /// Apply the coefficient update every `update_stride` symbols.
    pub update_stride: usize,
    pub arithmetic: Arithmetic,
    /// Record a tap snapshot every `snapshot_stride` symbols.
    pub snapshot_stride: usize,
    /// Fractional guard bits of the coefficient update accumulator below
    /// the W-bit taps the filter (and the sensing read-out) sees.
    ///
    /// With 0 guard bits the accumulator *is* the W-bit register: updates
    /// below half a step round away entirely and coarse formats stall.
    /// With guard bits, sub-LSB updates accumulate and the exposed tap
    /// hops between adjacent codes as the wide value crosses rounding
    /// boundaries, which is what lets a 5-bit equalizer converge at all.
    pub update_guard_bits: u32,
}

impl Default for EqConfig {
    fn default() -> Self {
        EqConfig {
            n_taps: 5,
            mu_cma: 1.0 / 256.0,
            r2: 1.0,
            update_stride: 2,
            arithmetic: Arithmetic::Float,
            snapshot_stride: 2,
            update_guard_bits: 16,
        }
    }
}

impl EqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_taps == 0 || self.n_taps % 2 == 0 {
            return Err(Error::config(format!("n_taps must be odd, got {}", self.n_taps)));
        }
        if !(self.mu_cma > 0.0) {
            return Err(Error::config("mu_cma must be positive"));
        }
        if self.update_stride == 0 || self.snapshot_stride == 0 {
            return Err(Error::config("update/snapshot strides must be at least 1"));
        }
        Ok(())
    }

    pub fn with_arithmetic(mut self, arithmetic: Arithmetic) -> Self {
        self.arithmetic = arithmetic;
        self
    }
}

/// Time series of equalizer tap snapshots, stored flat.
///
/// Each snapshot is `4 * n_taps` complex coefficients in branch order
/// `h_xx, h_xy, h_yx, h_yy` (taps oldest-input-first within a branch). In
/// fixed mode the stored values are exact `code * step` reconstructions,
/// so CSV exports of them are bit-exact.
#[derive(Debug, Clone)]
pub struct TapTrajectory {
    pub n_taps: usize,
    /// Symbol index of each snapshot, strictly increasing.
    pub indices: Vec<u64>,
    /// Flat coefficient storage: `indices.len() * 4 * n_taps` entries.
    pub coeffs: Vec<Complex64>,
    /// Snapshots per symbol period (1 / snapshot_stride).
    pub sop_sample_rate_norm: f64,
}

impl TapTrajectory {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// All coefficients of snapshot `i`.
    pub fn snapshot(&self, i: usize) -> &[Complex64] {
        let w = 4 * self.n_taps;
        &self.coeffs[i * w..(i + 1) * w]
    }

    /// One branch (0 = xx, 1 = xy, 2 = yx, 3 = yy) of snapshot `i`.
    pub fn branch(&self, i: usize, branch: usize) -> &[Complex64] {
        let snap = self.snapshot(i);
        &snap[branch * self.n_taps..(branch + 1) * self.n_taps]
    }

    /// Inverse-Jones estimate of snapshot `i`.
    pub fn jones(&self, i: usize, mode: JonesExtraction) -> Result<JonesMatrix> {
        taps_to_jones(
            self.branch(i, 0),
            self.branch(i, 1),
            self.branch(i, 2),
            self.branch(i, 3),
            mode,
        )
    }

    /// Inverse-Jones series for the whole trajectory.
    pub fn jones_series(&self, mode: JonesExtraction) -> Result<Vec<JonesMatrix>> {
        (0..self.len()).map(|i| self.jones(i, mode)).collect()
    }
}
