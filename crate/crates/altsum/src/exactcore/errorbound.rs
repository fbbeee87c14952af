//! Certified mid-rad arithmetic: a full-precision midpoint plus a
//! low-precision, upward-rounded bound on the absolute error.
//!
//! MPFR rounds every operation correctly, so a freshly rounded midpoint is
//! within one ulp of the exact result of the operation on the (already
//! perturbed) inputs. Each [`ErrorBounded`] operation adds that ulp to the
//! propagated input bounds, with every bound-side computation rounded toward
//! +infinity. The invariant `|value - true_value| <= abs_error` therefore
//! survives arbitrary composition, including the massive cancellations this
//! crate exists to survive.

use std::cmp::Ordering;

use rug::float::Round;
use rug::ops::NegAssign;
use rug::{Float, Integer};

use crate::{Error, Result};

/// Precision, in bits, of the error-bound side channel. Bounds only need a
/// couple of correct leading digits; what matters is that they are never
/// rounded down.
pub const ERR_PREC: u32 = 32;

/// A certified enclosure `value +/- abs_error`.
#[derive(Clone, Debug)]
pub struct ErrorBounded {
    value: Float,
    abs_error: Float,
}

fn err_zero() -> Float {
    Float::new(ERR_PREC)
}

/// Round `src` into an `ERR_PREC`-bit float toward +infinity.
macro_rules! up {
    ($src:expr) => {
        Float::with_val_round(ERR_PREC, $src, Round::Up).0
    };
}

/// One ulp of `v` if the rounding it was produced by was inexact, else zero.
/// With round-to-nearest the true rounding error is at most half an ulp; a
/// full ulp also covers every directed rounding mode.
fn ulp_bound(v: &Float, dir: Ordering) -> Float {
    if dir == Ordering::Equal {
        return err_zero();
    }
    let Some(exp) = v.get_exp() else {
        // An inexact result with no exponent means the rounding underflowed
        // (|true| < 2^emin). Nothing this library computes gets within a
        // hundred million orders of magnitude of MPFR's exponent floor.
        unreachable!("rounding underflow: value outside the supported magnitude range");
    };
    let mut u = Float::with_val(ERR_PREC, 1u32);
    u <<= exp - v.prec() as i32;
    u
}

impl ErrorBounded {
    /// Wrap a value that is exact by construction (no error at all).
    pub fn exact(value: Float) -> Self {
        debug_assert!(value.is_finite());
        ErrorBounded {
            value,
            abs_error: err_zero(),
        }
    }

    /// Wrap a freshly rounded value together with the `Ordering` MPFR
    /// reported for the rounding; the bound is one ulp if it was inexact.
    pub fn rounded(pair: (Float, Ordering)) -> Self {
        let (value, dir) = pair;
        debug_assert!(value.is_finite());
        let abs_error = ulp_bound(&value, dir);
        ErrorBounded { value, abs_error }
    }

    /// Wrap a value with an externally established error bound.
    pub fn with_bound(value: Float, abs_error: &Float) -> Self {
        debug_assert!(value.is_finite());
        debug_assert!(abs_error.is_finite() && *abs_error >= 0);
        ErrorBounded {
            value,
            abs_error: up!(abs_error),
        }
    }

    /// Exact zero at the given precision.
    pub fn zero(prec: u32) -> Self {
        ErrorBounded::exact(Float::new(prec))
    }

    pub fn value(&self) -> &Float {
        &self.value
    }

    pub fn abs_error(&self) -> &Float {
        &self.abs_error
    }

    pub fn prec(&self) -> u32 {
        self.value.prec()
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn abs_error_f64(&self) -> f64 {
        self.abs_error.to_f64()
    }

    /// Is the bound at most `2^-rel_bits` of the midpoint's magnitude?
    /// An exact value passes regardless of magnitude; an inexact zero fails.
    pub fn is_certified_rel(&self, rel_bits: u32) -> bool {
        if self.abs_error.is_zero() {
            return true;
        }
        if self.value.is_zero() {
            return false;
        }
        // Threshold rounded *down* so the test errs on the strict side.
        let mut threshold = Float::with_val_round(ERR_PREC, self.value.abs_ref(), Round::Down).0;
        threshold >>= rel_bits;
        self.abs_error <= threshold
    }

    /// The sign of the true value, if the enclosure pins it down:
    /// `Greater`/`Less` when the whole interval is on one side of zero,
    /// `Equal` when the enclosure is exactly zero, `None` when it straddles.
    pub fn certified_sign(&self) -> Option<Ordering> {
        if self.value.is_zero() && self.abs_error.is_zero() {
            return Some(Ordering::Equal);
        }
        if self.value.is_sign_positive() && self.value > self.abs_error {
            return Some(Ordering::Greater);
        }
        let mag = Float::with_val_round(ERR_PREC, self.value.abs_ref(), Round::Down).0;
        if self.value.is_sign_negative() && mag > self.abs_error {
            return Some(Ordering::Less);
        }
        None
    }

    /// Does the enclosure contain `x`? (Exact comparison; test helper.)
    pub fn contains(&self, x: &Float) -> bool {
        let p = self.value.prec().max(x.prec()) + 2;
        let mut d = Float::with_val(p, x - &self.value);
        d.abs_mut();
        d <= self.abs_error
    }

    pub fn add(&self, rhs: &Self, prec: u32) -> Self {
        let (v, dir) = Float::with_val_round(prec, &self.value + &rhs.value, Round::Nearest);
        let e = up!(&self.abs_error + &rhs.abs_error);
        let e = up!(&e + &ulp_bound(&v, dir));
        ErrorBounded { value: v, abs_error: e }
    }

    pub fn sub(&self, rhs: &Self, prec: u32) -> Self {
        let (v, dir) = Float::with_val_round(prec, &self.value - &rhs.value, Round::Nearest);
        let e = up!(&self.abs_error + &rhs.abs_error);
        let e = up!(&e + &ulp_bound(&v, dir));
        ErrorBounded { value: v, abs_error: e }
    }

    pub fn neg(&self) -> Self {
        let mut v = self.value.clone();
        v.neg_assign();
        ErrorBounded {
            value: v,
            abs_error: self.abs_error.clone(),
        }
    }

    /// Multiply by two (exact: only the exponent moves).
    pub fn double(&self) -> Self {
        let mut v = self.value.clone();
        v <<= 1u32;
        let mut e = self.abs_error.clone();
        e <<= 1u32;
        ErrorBounded { value: v, abs_error: e }
    }

    pub fn mul(&self, rhs: &Self, prec: u32) -> Self {
        let (v, dir) = Float::with_val_round(prec, &self.value * &rhs.value, Round::Nearest);
        // |ab~ - ab| <= |a~| e_b + |b~| e_a + e_a e_b, with a~, b~ the stored
        // midpoints.
        let a_mag = up!(self.value.abs_ref());
        let b_mag = up!(rhs.value.abs_ref());
        let mut e = up!(&a_mag * &rhs.abs_error);
        e = up!(&e + &up!(&b_mag * &self.abs_error));
        e = up!(&e + &up!(&self.abs_error * &rhs.abs_error));
        e = up!(&e + &ulp_bound(&v, dir));
        ErrorBounded { value: v, abs_error: e }
    }

    pub fn sqr(&self, prec: u32) -> Self {
        let (v, dir) = Float::with_val_round(prec, &self.value * &self.value, Round::Nearest);
        let a_mag = up!(self.value.abs_ref());
        let mut e = up!(&a_mag * &self.abs_error);
        e <<= 1u32;
        e = up!(&e + &up!(&self.abs_error * &self.abs_error));
        e = up!(&e + &ulp_bound(&v, dir));
        ErrorBounded { value: v, abs_error: e }
    }

    /// Multiply by an exact integer.
    pub fn mul_int(&self, k: &Integer, prec: u32) -> Self {
        let (v, dir) = Float::with_val_round(prec, &self.value * k, Round::Nearest);
        let k_mag = up!(&*k.as_abs());
        let e = up!(&k_mag * &self.abs_error);
        let e = up!(&e + &ulp_bound(&v, dir));
        ErrorBounded { value: v, abs_error: e }
    }

    /// Divide by an exact nonzero integer.
    pub fn div_int(&self, k: &Integer, prec: u32) -> Self {
        assert!(!k.is_zero(), "division by zero");
        let (v, dir) = Float::with_val_round(prec, &self.value / k, Round::Nearest);
        // Propagated error e/|k|, with |k| rounded down so the quotient is
        // rounded up.
        let k_mag = Float::with_val_round(ERR_PREC, &*k.as_abs(), Round::Down).0;
        let e = up!(&self.abs_error / &k_mag);
        let e = up!(&e + &ulp_bound(&v, dir));
        ErrorBounded { value: v, abs_error: e }
    }

    /// Natural log of an enclosure that certifiedly stays positive.
    pub fn ln(&self, prec: u32) -> Result<Self> {
        // Lower endpoint, rounded toward -infinity: must be positive.
        let lo = Float::with_val_round(ERR_PREC + 32, &self.value - &self.abs_error, Round::Down).0;
        if !matches!(lo.partial_cmp(&0), Some(Ordering::Greater)) {
            return Err(Error::Domain(format!(
                "ln of an enclosure not certified positive (value ~ {:.3e}, bound ~ {:.3e})",
                self.to_f64(),
                self.abs_error_f64()
            )));
        }
        let (v, dir) = Float::with_val_round(prec, self.value.ln_ref(), Round::Nearest);
        // |ln x - ln x~| <= e / min(x, x~) <= e / lo.
        let lo = up_reciprocal_denominator(&lo);
        let e = up!(&self.abs_error / &lo);
        let e = up!(&e + &ulp_bound(&v, dir));
        Ok(ErrorBounded { value: v, abs_error: e })
    }

    /// Re-round the midpoint to a (usually lower) precision, widening the
    /// bound by the rounding ulp.
    pub fn rounded_to(&self, prec: u32) -> Self {
        let (v, dir) = Float::with_val_round(prec, &self.value, Round::Nearest);
        let e = up!(&self.abs_error + &ulp_bound(&v, dir));
        ErrorBounded { value: v, abs_error: e }
    }
}

/// Shrink a positive denominator to `ERR_PREC` bits rounding toward zero, so
/// that dividing by it can only enlarge the quotient.
fn up_reciprocal_denominator(lo: &Float) -> Float {
    Float::with_val_round(ERR_PREC, lo, Round::Zero).0
}
