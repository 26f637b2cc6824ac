//! Signed saturating fixed-point arithmetic with a runtime-configurable
//! word width.
//!
//! Values follow the signed Q-format `Qm.n`: `m` integer bits (sign
//! included) and `n` fractional bits, so a word of `W = m + n` bits covers
//! `[-2^(m-1), 2^(m-1) - 2^-n]` in steps of `2^-n`. The equalizer datapath
//! uses `Q2.(W-2)`: enough headroom for unit-modulus signals and taps near
//! one, which is why the integer part stays at 2 bits while the fractional
//! part varies with the word width under study.
//!
//! All operations compute the exact wide-precision result first and
//! requantize once per operator: round to nearest (ties away from zero by
//! default, ties-to-even selectable) and saturate on overflow. There is no
//! wraparound mode.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Rounding rule applied when a wide result is requantized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rounding {
    /// Round to nearest, ties away from zero (HLS default).
    #[default]
    NearestTiesAway,
    /// Round to nearest, ties to the even code.
    NearestTiesEven,
}

/// A signed fixed-point word format: total width, integer bits, rounding.
///
/// `int_bits` includes the sign bit. Overflow always saturates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxFormat {
    total_bits: u32,
    int_bits: u32,
    rounding: Rounding,
}

impl FxFormat {
    pub const MIN_TOTAL_BITS: u32 = 4;
    pub const MAX_TOTAL_BITS: u32 = 32;

    pub fn new(total_bits: u32, int_bits: u32, rounding: Rounding) -> Result<Self> {
        if !(Self::MIN_TOTAL_BITS..=Self::MAX_TOTAL_BITS).contains(&total_bits) {
            return Err(Error::config(format!(
                "total_bits {total_bits} outside [{}, {}]",
                Self::MIN_TOTAL_BITS,
                Self::MAX_TOTAL_BITS
            )));
        }
        if int_bits < 1 || int_bits >= total_bits {
            return Err(Error::config(format!(
                "int_bits {int_bits} must satisfy 1 <= int_bits < total_bits ({total_bits})"
            )));
        }
        Ok(FxFormat {
            total_bits,
            int_bits,
            rounding,
        })
    }

    /// The paper's datapath format: signed `Q2.(W-2)` with default rounding.
    pub fn q2(total_bits: u32) -> Result<Self> {
        Self::new(total_bits, 2, Rounding::default())
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn int_bits(&self) -> u32 {
        self.int_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.total_bits - self.int_bits
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = rounding;
        self
    }

    /// Quantization step `2^-frac_bits`.
    pub fn step(&self) -> f64 {
        f64::exp2(-(self.frac_bits() as f64))
    }

    /// Largest representable code, `2^(W-1) - 1`.
    pub fn max_code(&self) -> i64 {
        (1i64 << (self.total_bits - 1)) - 1
    }

    /// Smallest representable code, `-2^(W-1)`.
    pub fn min_code(&self) -> i64 {
        -(1i64 << (self.total_bits - 1))
    }

    /// Largest representable value.
    pub fn max_value(&self) -> f64 {
        self.max_code() as f64 * self.step()
    }

    /// Smallest representable value.
    pub fn min_value(&self) -> f64 {
        self.min_code() as f64 * self.step()
    }

    fn clamp_code(&self, code: i64) -> i64 {
        code.clamp(self.min_code(), self.max_code())
    }

    /// Round a real number to the nearest in-range code; out-of-range input
    /// saturates to the nearest extreme code. Errors on non-finite input.
    pub fn quantize(&self, x: f64) -> Result<FxValue> {
        if !x.is_finite() {
            return Err(Error::config(format!("cannot quantize non-finite value {x}")));
        }
        Ok(FxValue {
            code: self.quantize_code(x),
            fmt: *self,
        })
    }

    /// Code-level quantizer that also counts saturation events.
    pub(crate) fn quantize_code_counted(&self, x: f64, sat: &mut u64) -> i64 {
        if x >= self.max_value() {
            if x > self.max_value() {
                *sat += 1;
            }
            return self.max_code();
        }
        if x <= self.min_value() {
            if x < self.min_value() {
                *sat += 1;
            }
            return self.min_code();
        }
        self.quantize_code(x)
    }

    /// Code-level quantizer used by the arithmetic ops (input already finite).
    pub(crate) fn quantize_code(&self, x: f64) -> i64 {
        if x >= self.max_value() {
            return self.max_code();
        }
        if x <= self.min_value() {
            return self.min_code();
        }
        // x/step is exact: step is a power of two, so only the exponent moves.
        let scaled = x / self.step();
        let rounded = match self.rounding {
            Rounding::NearestTiesAway => scaled.round(),
            Rounding::NearestTiesEven => scaled.round_ties_even(),
        };
        self.clamp_code(rounded as i64)
    }

    /// Reconstruct a value from a raw code, saturating it into range.
    pub fn value_from_code(&self, code: i64) -> FxValue {
        FxValue {
            code: self.clamp_code(code),
            fmt: *self,
        }
    }

    /// Requantize an exact product of two codes (scale `step^2`) back to
    /// this format: round-shift by `frac_bits`, then saturate. Also used
    /// by the equalizer's wide multiply-accumulate datapath.
    pub(crate) fn requantize_product(&self, wide: i128, sat: &mut u64) -> i64 {
        let code = round_shift(wide, self.frac_bits(), self.rounding);
        saturate_i128(code, self.min_code(), self.max_code(), sat)
    }
}

/// Shift `p` right by `k` bits with round-to-nearest semantics.
///
/// Exact integer arithmetic; `mode` decides ties. This is the single
/// rounding primitive behind every fixed-point multiply.
fn round_shift(p: i128, k: u32, mode: Rounding) -> i128 {
    if k == 0 {
        return p;
    }
    let q = p >> k; // floor division by 2^k
    let r = p - (q << k);
    let half = 1i128 << (k - 1);
    match r.cmp(&half) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => match mode {
            // For p >= 0 the tie value q + 0.5 rounds up (away from zero);
            // for p < 0 the tie value is -(|q|+0.5)-like and floor already
            // sits on the away side.
            Rounding::NearestTiesAway => {
                if p >= 0 {
                    q + 1
                } else {
                    q
                }
            }
            Rounding::NearestTiesEven => {
                if q & 1 == 0 {
                    q
                } else {
                    q + 1
                }
            }
        },
    }
}

fn saturate_i128(code: i128, min: i64, max: i64, sat: &mut u64) -> i64 {
    if code > max as i128 {
        *sat += 1;
        max
    } else if code < (min as i128) {
        *sat += 1;
        min
    } else {
        code as i64
    }
}

/// One quantized real value: a code plus the format it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FxValue {
    code: i64,
    fmt: FxFormat,
}

impl FxValue {
    pub fn code(&self) -> i64 {
        self.code
    }

    pub fn format(&self) -> FxFormat {
        self.fmt
    }

    /// Exact real value `code * step`.
    pub fn to_real(&self) -> f64 {
        self.code as f64 * self.fmt.step()
    }

    fn check_fmt(&self, other: &FxValue) -> Result<()> {
        if self.fmt != other.fmt {
            return Err(Error::config(format!(
                "fixed-point format mismatch: {} vs {}",
                self.fmt, other.fmt
            )));
        }
        Ok(())
    }

    /// Saturating addition in-format. Sums of codes share the scale, so the
    /// only requantization step is saturation.
    pub fn add(&self, other: &FxValue) -> Result<FxValue> {
        self.check_fmt(other)?;
        let mut sat = 0;
        Ok(self.add_counted(other, &mut sat))
    }

    pub fn sub(&self, other: &FxValue) -> Result<FxValue> {
        self.check_fmt(other)?;
        let mut sat = 0;
        Ok(self.sub_counted(other, &mut sat))
    }

    /// Saturating multiplication: exact wide product, one round, one clamp.
    pub fn mul(&self, other: &FxValue) -> Result<FxValue> {
        self.check_fmt(other)?;
        let mut sat = 0;
        Ok(self.mul_counted(other, &mut sat))
    }

    pub(crate) fn add_counted(&self, other: &FxValue, sat: &mut u64) -> FxValue {
        let wide = self.code as i128 + other.code as i128;
        FxValue {
            code: saturate_i128(wide, self.fmt.min_code(), self.fmt.max_code(), sat),
            fmt: self.fmt,
        }
    }

    pub(crate) fn sub_counted(&self, other: &FxValue, sat: &mut u64) -> FxValue {
        let wide = self.code as i128 - other.code as i128;
        FxValue {
            code: saturate_i128(wide, self.fmt.min_code(), self.fmt.max_code(), sat),
            fmt: self.fmt,
        }
    }

    pub(crate) fn mul_counted(&self, other: &FxValue, sat: &mut u64) -> FxValue {
        let wide = self.code as i128 * other.code as i128;
        FxValue {
            code: self.fmt.requantize_product(wide, sat),
            fmt: self.fmt,
        }
    }
}

/// A complex value whose real and imaginary parts share one format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FxComplex {
    pub re: FxValue,
    pub im: FxValue,
}

impl FxComplex {
    pub fn quantize(re: f64, im: f64, fmt: FxFormat) -> Result<FxComplex> {
        Ok(FxComplex {
            re: fmt.quantize(re)?,
            im: fmt.quantize(im)?,
        })
    }

    pub fn format(&self) -> FxFormat {
        self.re.fmt
    }

    pub fn to_complex(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_real(), self.im.to_real())
    }

    /// Complex multiply as the hardware does it: four real multiplies and
    /// two adds, each requantized.
    pub fn cmul(&self, other: &FxComplex) -> Result<FxComplex> {
        self.re.check_fmt(&other.re)?;
        let mut sat = 0;
        Ok(self.cmul_counted(other, &mut sat))
    }

    /// Multiply-accumulate `acc + self * other` with every partial result
    /// requantized.
    pub fn cmac(&self, acc: &FxComplex, other: &FxComplex) -> Result<FxComplex> {
        self.re.check_fmt(&other.re)?;
        self.re.check_fmt(&acc.re)?;
        let mut sat = 0;
        let prod = self.cmul_counted(other, &mut sat);
        Ok(FxComplex {
            re: acc.re.add_counted(&prod.re, &mut sat),
            im: acc.im.add_counted(&prod.im, &mut sat),
        })
    }

    pub(crate) fn cmul_counted(&self, other: &FxComplex, sat: &mut u64) -> FxComplex {
        let rr = self.re.mul_counted(&other.re, sat);
        let ii = self.im.mul_counted(&other.im, sat);
        let ri = self.re.mul_counted(&other.im, sat);
        let ir = self.im.mul_counted(&other.re, sat);
        FxComplex {
            re: rr.sub_counted(&ii, sat),
            im: ri.add_counted(&ir, sat),
        }
    }
}

impl fmt::Display for FxFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.int_bits, self.frac_bits())
    }
}

/// Parses the `Q<int>.<frac>` notation used in config files and CLI flags,
/// e.g. `Q2.5` for a 7-bit word with a 2-bit integer part.
impl FromStr for FxFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let body = s
            .strip_prefix('Q')
            .or_else(|| s.strip_prefix('q'))
            .ok_or_else(|| Error::config(format!("format string `{s}` must start with 'Q'")))?;
        let (int_part, frac_part) = body
            .split_once('.')
            .ok_or_else(|| Error::config(format!("format string `{s}` must look like Q<int>.<frac>")))?;
        let int_bits: u32 = int_part
            .parse()
            .map_err(|_| Error::config(format!("bad integer bit count in `{s}`")))?;
        let frac_bits: u32 = frac_part
            .parse()
            .map_err(|_| Error::config(format!("bad fractional bit count in `{s}`")))?;
        FxFormat::new(int_bits + frac_bits, int_bits, Rounding::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(w: u32) -> FxFormat {
        FxFormat::q2(w).unwrap()
    }

    /// Exhaustive nearest-code search over every code of the format.
    /// Independent of the shift/clamp path in `quantize`.
    fn oracle_quantize(x: f64, fmt: FxFormat) -> i64 {
        let step = fmt.step();
        let mut best = fmt.min_code();
        let mut best_err = (best as f64 * step - x).abs();
        for code in fmt.min_code()..=fmt.max_code() {
            let err = (code as f64 * step - x).abs();
            if err < best_err {
                best = code;
                best_err = err;
            } else if err == best_err && code != best {
                // Tie between two adjacent codes.
                best = match fmt.rounding() {
                    Rounding::NearestTiesAway => {
                        if x >= 0.0 {
                            best.max(code)
                        } else {
                            best.min(code)
                        }
                    }
                    Rounding::NearestTiesEven => {
                        if code % 2 == 0 {
                            code
                        } else {
                            best
                        }
                    }
                };
            }
        }
        best
    }

    #[test]
    fn quantize_spec_examples() {
        let f5 = q(5);
        assert_eq!(f5.quantize(0.0).unwrap().code(), 0);
        // Saturation to 2^1 - 2^-3 = 1.875.
        assert_eq!(f5.quantize(3.0).unwrap().to_real(), 1.875);
        // 0.3/0.125 = 2.4 -> code 2 -> 0.25, confirmed by the oracle.
        assert_eq!(oracle_quantize(0.3, f5), 2);
        assert_eq!(f5.quantize(0.3).unwrap().to_real(), 0.25);
    }

    #[test]
    fn tie_handling_differs_by_mode() {
        // 0.0625 sits exactly between codes 0 and 1 of Q2.3.
        let away = q(5);
        let even = q(5).with_rounding(Rounding::NearestTiesEven);
        assert_eq!(away.quantize(0.0625).unwrap().code(), 1);
        assert_eq!(even.quantize(0.0625).unwrap().code(), 0);
        assert_eq!(away.quantize(-0.0625).unwrap().code(), -1);
        assert_eq!(even.quantize(-0.0625).unwrap().code(), 0);
        // And the oracle agrees on both.
        assert_eq!(oracle_quantize(0.0625, away), 1);
        assert_eq!(oracle_quantize(0.0625, even), 0);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        assert!(q(8).quantize(f64::NAN).is_err());
        assert!(q(8).quantize(f64::INFINITY).is_err());
    }

    #[test]
    fn to_real_spec_examples() {
        let f5 = q(5);
        assert_eq!(f5.value_from_code(2).to_real(), 0.25);
        assert_eq!(f5.value_from_code(f5.max_code()).to_real(), 1.875);
        assert_eq!(f5.value_from_code(f5.min_code()).to_real(), -2.0);
    }

    #[test]
    fn arithmetic_spec_examples() {
        let f8 = q(8);
        let one = f8.quantize(1.0).unwrap();
        assert_eq!(one.mul(&one).unwrap().to_real(), 1.0);

        let f5 = q(5);
        let top = f5.quantize(1.875).unwrap();
        let lsb = f5.quantize(0.125).unwrap();
        assert_eq!(top.add(&lsb).unwrap().to_real(), 1.875);

        let a = FxComplex::quantize(1.0, 0.0, f8).unwrap();
        let b = FxComplex::quantize(0.0, 1.0, f8).unwrap();
        let prod = a.cmul(&b).unwrap();
        assert_eq!(prod.re.to_real(), 0.0);
        assert_eq!(prod.im.to_real(), 1.0);
    }

    #[test]
    fn format_mismatch_is_config_error() {
        let a = q(5).quantize(0.5).unwrap();
        let b = q(6).quantize(0.5).unwrap();
        assert!(matches!(a.add(&b), Err(Error::Config(_))));
        assert!(matches!(a.mul(&b), Err(Error::Config(_))));
    }

    #[test]
    fn format_string_round_trip() {
        let f: FxFormat = "Q2.5".parse().unwrap();
        assert_eq!(f.total_bits(), 7);
        assert_eq!(f.int_bits(), 2);
        assert_eq!(f.to_string(), "Q2.5");
        assert!("5".parse::<FxFormat>().is_err());
        assert!("Q2".parse::<FxFormat>().is_err());
        assert!("Q0.5".parse::<FxFormat>().is_err());
    }

    #[test]
    fn invalid_formats_rejected() {
        assert!(FxFormat::new(3, 2, Rounding::default()).is_err());
        assert!(FxFormat::new(33, 2, Rounding::default()).is_err());
        assert!(FxFormat::new(8, 8, Rounding::default()).is_err());
        assert!(FxFormat::new(8, 0, Rounding::default()).is_err());
    }

    #[test]
    fn oracle_equivalence_sampled() {
        // The full 1e5-per-format version runs in the acceptance suite; this
        // is the fast per-module check.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for w in 4..=9 {
            for mode in [Rounding::NearestTiesAway, Rounding::NearestTiesEven] {
                let fmt = q(w).with_rounding(mode);
                for _ in 0..2000 {
                    let x: f64 = rng.gen_range(-3.0 * fmt.max_value()..3.0 * fmt.max_value());
                    assert_eq!(
                        fmt.quantize(x).unwrap().code(),
                        oracle_quantize(x, fmt),
                        "W={w} mode={mode:?} x={x}"
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn quantize_idempotent(x in -8.0f64..8.0, w in 4u32..=12) {
            let fmt = q(w);
            let once = fmt.quantize(x).unwrap();
            let twice = fmt.quantize(once.to_real()).unwrap();
            prop_assert_eq!(once.code(), twice.code());
        }

        #[test]
        fn quantize_half_step_bound(raw in -2.0f64..2.0, w in 4u32..=12) {
            // The bound holds for x inside the representable range.
            let fmt = q(w);
            let x = raw.clamp(fmt.min_value(), fmt.max_value());
            let v = fmt.quantize(x).unwrap();
            prop_assert!((v.to_real() - x).abs() <= fmt.step() / 2.0 + 1e-15);
        }

        #[test]
        fn quantize_monotone(a in -8.0f64..8.0, b in -8.0f64..8.0, w in 4u32..=12) {
            let fmt = q(w);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(
                fmt.quantize(lo).unwrap().to_real() <= fmt.quantize(hi).unwrap().to_real()
            );
        }

        #[test]
        fn arithmetic_closure(
            ca in -128i64..128,
            cb in -128i64..128,
            w in 4u32..=8,
        ) {
            let fmt = q(w);
            let a = fmt.value_from_code(ca);
            let b = fmt.value_from_code(cb);
            for r in [a.add(&b).unwrap(), a.sub(&b).unwrap(), a.mul(&b).unwrap()] {
                prop_assert!(r.code() >= fmt.min_code() && r.code() <= fmt.max_code());
                // Closure: the result is itself a fixed point of quantize.
                prop_assert_eq!(fmt.quantize(r.to_real()).unwrap().code(), r.code());
            }
        }
    }
}
