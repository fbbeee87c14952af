//! Double-exponential quadrature of the integral representations
//!
//! ```text
//! E[Y^m] = n * INT_0^inf (ln x)^m e^{-x} (1 - e^{-x})^{n-1} dx,   m = 1, 2
//! ```
//!
//! for the log-maximum `Y` of `n` i.i.d. standard exponentials. This is a
//! route to the same moments as `findiff`, sharing *no* machinery with the
//! alternating sums — no binomials, no cancellation — which makes it the
//! cross-check of choice.
//!
//! The integrand has a logarithmic singularity at `0` and, for large `n`, a
//! sharp shoulder near `x = ln n`, so the axis is split there: a tanh-sinh
//! rule on `(0, ln n)` absorbs the endpoint singularity, and an exp-sinh type
//! rule (Ooura's map for `e^{-x}` decay) covers `(ln n, inf)`. Both refine by
//! level doubling, reusing all previously evaluated nodes, until two
//! consecutive levels agree to the requested relative tolerance; `est_error`
//! is the last inter-level difference, an a-posteriori estimate rather than a
//! certified bound.

use rug::float::Constant;
use rug::ops::NegAssign;
use rug::Float;

use crate::exactcore::{ErrorBounded, PrecisionContext, MAX_PREC};
use crate::{Error, Result};

/// Outcome of one adaptive double-exponential integration.
#[derive(Clone, Debug)]
pub struct QuadratureResult {
    pub value: Float,
    /// Absolute difference between the last two refinement levels.
    pub est_error: Float,
    pub levels_used: u32,
    pub node_count: u64,
}

/// Levels before the agreement test may fire (guards against accidental
/// coarse-grid agreement).
const MIN_LEVEL: u32 = 3;
const MAX_LEVEL: u32 = 13;
/// Per-side node cap at level 0; doubles with each level.
const SIDE_CAP: u64 = 64;
/// A side scan stops after this many consecutive negligible terms.
const TAIL_RUN: u32 = 4;

/// Trapezoidal sums over `t = k * 2^-level` with a caller-supplied
/// double-exponential map `node: t -> (x, weight)` and integrand `f`.
///
/// `abs_floor` enters the stopping rule `diff <= tol * max(|T|, floor)`; pass
/// zero unless the piece is expected to cancel internally.
fn refine<N, F>(prec: u32, tol: &Float, abs_floor: &Float, node: N, f: F) -> Result<QuadratureResult>
where
    N: FnMut(&Float) -> Option<(Float, Float)>,
    F: FnMut(&Float) -> Float,
{
    let mut grid = Grid {
        prec,
        node,
        f,
        node_count: 0,
        max_term: Float::new(64),
        tail_tol: Float::with_val(64, tol >> 12u32),
    };

    // Level 0: h = 1, all integer nodes (k = 0 included in the first scan).
    let mut raw = Float::new(prec); // sum of g over the current grid
    grid.scan(0, false, 0, 1, &mut raw)?;
    grid.scan(0, true, 1, 1, &mut raw)?;
    let mut prev = raw.clone(); // T_0, since h_0 = 1

    for level in 1..=MAX_LEVEL {
        // New nodes are the odd multiples of h = 2^-level.
        let mut odd = Float::new(prec);
        grid.scan(level, false, 1, 2, &mut odd)?;
        grid.scan(level, true, 1, 2, &mut odd)?;
        raw += odd;
        let mut t_level = raw.clone();
        t_level >>= level;

        let mut diff = Float::with_val(prec, &t_level - &prev);
        diff.abs_mut();
        let mut scale = Float::with_val(64, t_level.abs_ref());
        if *abs_floor > scale {
            scale = abs_floor.clone();
        }
        if level >= MIN_LEVEL && diff <= Float::with_val(64, &scale * tol) {
            return Ok(QuadratureResult {
                value: t_level,
                est_error: Float::with_val(64, diff),
                levels_used: level,
                node_count: grid.node_count,
            });
        }
        prev = t_level;
    }
    Err(Error::Quadrature(format!(
        "no convergence to relative tolerance {:.3e} within {MAX_LEVEL} levels",
        tol.to_f64()
    )))
}

/// Node-evaluation state shared by every level of one integration.
struct Grid<N, F> {
    prec: u32,
    node: N,
    f: F,
    node_count: u64,
    /// Largest |weight * f| seen so far, at any level: the tail cutoff scale.
    max_term: Float,
    tail_tol: Float,
}

impl<N, F> Grid<N, F>
where
    N: FnMut(&Float) -> Option<(Float, Float)>,
    F: FnMut(&Float) -> Float,
{
    /// Scan one side (`sign`) of one level, starting at index `start` with
    /// stride `step`, accumulating node terms into `sum`. Stops once the
    /// terms have been negligible for [`TAIL_RUN`] nodes in a row.
    fn scan(&mut self, h_exp: u32, sign: bool, start: u64, step: u64, sum: &mut Float) -> Result<()> {
        let cap = SIDE_CAP << h_exp;
        let mut consecutive_small = 0u32;
        let mut k = start;
        while k <= cap {
            let mut t = Float::with_val(self.prec, k);
            t >>= h_exp;
            if sign {
                t.neg_assign();
            }
            // A degenerate node (map below the exponent range) counts as
            // negligible without being evaluated.
            let mut small = true;
            if let Some((x, w)) = (self.node)(&t) {
                self.node_count += 1;
                let g = Float::with_val(self.prec, &w * &(self.f)(&x));
                if !g.is_finite() {
                    return Err(Error::Quadrature(format!(
                        "integrand produced a non-finite value at t = {}",
                        t.to_f64()
                    )));
                }
                let mag = Float::with_val(64, g.abs_ref());
                if mag > self.max_term {
                    self.max_term = mag.clone();
                }
                small = mag <= Float::with_val(64, &self.max_term * &self.tail_tol);
                *sum += g;
            }
            consecutive_small = if small { consecutive_small + 1 } else { 0 };
            if consecutive_small >= TAIL_RUN {
                return Ok(());
            }
            k += step;
        }
        Err(Error::Quadrature(format!(
            "tail did not decay within {cap} nodes per side at level {h_exp}"
        )))
    }
}

/// Tanh-sinh rule on the finite interval `(a, b)`.
///
/// The map is evaluated in the form that measures the distance to the nearer
/// endpoint, `delta = (b-a) e^{-2|u|} / (1 + e^{-2|u|})` with
/// `u = (pi/2) sinh t`, so nodes approach the endpoints to within MPFR's
/// full exponent range instead of rounding onto them.
fn tanh_sinh_finite<F>(
    f: F,
    a: &Float,
    b: &Float,
    prec: u32,
    tol: &Float,
    abs_floor: &Float,
) -> Result<QuadratureResult>
where
    F: FnMut(&Float) -> Float,
{
    let width = Float::with_val(prec, b - a);
    debug_assert!(width.is_sign_positive() && !width.is_zero());
    let half_pi = Float::with_val(prec, Constant::Pi) >> 1u32;
    let node = |t: &Float| -> Option<(Float, Float)> {
        let u = Float::with_val(prec, t.sinh_ref()) * &half_pi;
        let mut au = Float::with_val(prec, u.abs_ref());
        au <<= 1u32;
        au.neg_assign();
        let m = au.exp(); // e^{-2|u|} in (0, 1]
        if m.is_zero() {
            return None;
        }
        let den = Float::with_val(prec, 1u32 + &m);
        let delta = Float::with_val(prec, &width * &m) / &den;
        let x = if t.is_sign_negative() {
            Float::with_val(prec, a + &delta)
        } else {
            Float::with_val(prec, b - &delta)
        };
        // w = (pi/2) cosh t * (b-a) * 2 m / den^2  (= r pi cosh t sech^2 u)
        let mut w = Float::with_val(prec, t.cosh_ref());
        w *= &half_pi;
        w *= &width;
        w *= &m;
        w <<= 1u32;
        w /= Float::with_val(prec, &den * &den);
        Some((x, w))
    };
    refine(prec, tol, abs_floor, node, f)
}

/// Ooura-type rule on `(x0, inf)` for integrands decaying like `e^{-x}`:
/// `x = x0 + phi(t)`, `phi(t) = exp(t - e^{-t})`.
fn exp_decay_halfline<F>(f: F, x0: &Float, prec: u32, tol: &Float) -> Result<QuadratureResult>
where
    F: FnMut(&Float) -> Float,
{
    let node = |t: &Float| -> Option<(Float, Float)> {
        let et = Float::with_val(prec, t.as_neg().exp_ref());
        let arg = Float::with_val(prec, t - &et);
        let phi = arg.exp();
        if phi.is_zero() {
            return None;
        }
        let x = Float::with_val(prec, x0 + &phi);
        let w = Float::with_val(prec, &et + 1u32) * &phi;
        Some((x, w))
    };
    refine(prec, tol, &Float::new(32), node, f)
}

/// `(ln x)^power * e^{-x} * (1 - e^{-x})^{n-1}` at full engine precision.
///
/// `1 - e^{-x}` is produced from `expm1`, which keeps full relative accuracy
/// arbitrarily close to `x = 0` where the naive form loses every digit.
fn moment_integrand(prec: u32, n: u64, power: u32) -> impl FnMut(&Float) -> Float {
    move |x: &Float| {
        let lnx = Float::with_val(prec, x.ln_ref());
        let mut val = lnx;
        if power == 2 {
            val.square_mut();
        }
        val *= Float::with_val(prec, x.as_neg().exp_ref());
        if n >= 2 {
            let em1 = Float::with_val(prec, x.as_neg().exp_m1_ref());
            let one_minus = Float::with_val(prec, &*em1.as_neg()); // 1 - e^{-x}, accurately
            let mut pw = one_minus.ln();
            pw *= n - 1;
            val *= pw.exp();
        }
        val
    }
}

fn engine_prec(ctx: &PrecisionContext) -> Result<u32> {
    let p = u64::from(ctx.effective()) + 64;
    if p > u64::from(MAX_PREC) {
        return Err(Error::Config(format!(
            "quadrature precision {p} exceeds the supported maximum {MAX_PREC}"
        )));
    }
    Ok(p as u32)
}

fn validate_tol(tol: &Float, prec: u32) -> Result<()> {
    if !tol.is_finite() || !(tol.is_sign_positive() && !tol.is_zero()) || *tol >= 1 {
        return Err(Error::Config(format!(
            "quadrature tolerance must be in (0, 1), got {}",
            tol.to_f64()
        )));
    }
    let mut floor = Float::with_val(64, 1u32);
    floor >>= prec - 48;
    if *tol < floor {
        return Err(Error::Config(format!(
            "tolerance {:.3e} is below the resolution of the configured precision; raise bits",
            tol.to_f64()
        )));
    }
    Ok(())
}

/// Shared core for both moments: split at `max(1, ln n)`, integrate the two
/// pieces, recombine as `n * (left + right)`.
fn moment_quad(n: u64, power: u32, tol: &Float, ctx: &PrecisionContext) -> Result<QuadratureResult> {
    if n == 0 {
        return Err(Error::Domain("moments are defined for n >= 1".into()));
    }
    let prec = engine_prec(ctx)?;
    validate_tol(tol, prec)?;

    let mut split = Float::with_val(prec, n);
    split.ln_mut();
    if split < 1u32 {
        split = Float::with_val(prec, 1u32);
    }

    // Right piece first: it never cancels internally (ln x > 0 there), so its
    // magnitude anchors the stopping rule of the possibly sign-mixed left
    // piece.
    let right = exp_decay_halfline(moment_integrand(prec, n, power), &split, prec, tol)?;
    let floor = Float::with_val(64, right.value.abs_ref());
    let zero = Float::new(prec);
    let left = tanh_sinh_finite(moment_integrand(prec, n, power), &zero, &split, prec, tol, &floor)?;

    let mut value = Float::with_val(prec, &left.value + &right.value);
    value *= n;
    let mut est_error = Float::with_val(64, &left.est_error + &right.est_error);
    est_error *= n;
    Ok(QuadratureResult {
        value,
        est_error,
        levels_used: left.levels_used.max(right.levels_used),
        node_count: left.node_count + right.node_count,
    })
}

/// `E[Y] = n INT_0^inf ln x e^{-x} (1-e^{-x})^{n-1} dx` by quadrature.
pub fn mean_y_quad(n: u64, tol: f64, ctx: &PrecisionContext) -> Result<QuadratureResult> {
    moment_quad(n, 1, &Float::with_val(64, tol), ctx)
}

/// `E[Y^2] = n INT_0^inf (ln x)^2 e^{-x} (1-e^{-x})^{n-1} dx` by quadrature.
pub fn second_moment_y_quad(n: u64, tol: f64, ctx: &PrecisionContext) -> Result<QuadratureResult> {
    moment_quad(n, 2, &Float::with_val(64, tol), ctx)
}

/// Self-test integrals for the Gamma-function derivatives at 1:
/// `INT_0^inf e^{-t} ln t dt = -gamma` and
/// `INT_0^inf e^{-t} (ln t)^2 dt = gamma^2 + pi^2/6`.
///
/// Returned as enclosures whose bounds are the (inflated) a-posteriori
/// quadrature estimates — empirical, unlike the certified bounds elsewhere.
pub fn gamma_derivative_selftest(
    ctx: &PrecisionContext,
) -> Result<(ErrorBounded, ErrorBounded)> {
    let mut tol = Float::with_val(64, 1u32);
    tol >>= ctx.bits() - 20;
    let first = moment_quad(1, 1, &tol, ctx)?;
    let second = moment_quad(1, 2, &tol, ctx)?;
    let wrap = |q: QuadratureResult| {
        let mut bound = Float::with_val(64, q.est_error.abs_ref());
        bound <<= 3u32;
        let mut noise = Float::with_val(64, q.value.abs_ref());
        noise >>= ctx.effective();
        bound += noise;
        ErrorBounded::with_bound(q.value, &bound)
    };
    Ok((wrap(first), wrap(second)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactcore::ConstantPool;
    use crate::findiff::{coeff_row, SumMethod};

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    fn abs_diff(a: &Float, b: &Float) -> Float {
        let mut d = Float::with_val(300, a - b);
        d.abs_mut();
        d
    }

    #[test]
    fn selftest_hits_gamma_derivatives() {
        let c = ctx();
        let pool = ConstantPool::new(&c).unwrap();
        let (d1, d2) = gamma_derivative_selftest(&c).unwrap();
        // Gamma'(1) = -gamma.
        let mut neg_gamma = pool.gamma().value().clone();
        neg_gamma.neg_assign();
        let e1 = abs_diff(d1.value(), &neg_gamma);
        assert!(e1 < Float::with_val(64, 1e-25), "Gamma'(1) off by {:.3e}", e1.to_f64());
        // Gamma''(1) = gamma^2 + zeta(2).
        let reference = Float::with_val(
            300,
            pool.gamma().value() * pool.gamma().value() + pool.zeta2().value(),
        );
        let e2 = abs_diff(d2.value(), &reference);
        assert!(e2 < Float::with_val(64, 1e-25), "Gamma''(1) off by {:.3e}", e2.to_f64());
        // The enclosures should cover the true values too.
        assert!(d1.contains(&neg_gamma));
        assert!(d2.contains(&reference));
    }

    #[test]
    fn mean_n2_matches_ln2_minus_gamma() {
        let c = ctx();
        let q = mean_y_quad(2, 1e-25, &c).unwrap();
        let gamma = Float::with_val(300, rug::float::Constant::Euler);
        let reference = Float::with_val(300, 2u32).ln() - gamma;
        let e = abs_diff(&q.value, &reference);
        assert!(e < Float::with_val(64, 1e-22), "E[Y](2) off by {:.3e}", e.to_f64());
        assert!(q.levels_used >= MIN_LEVEL && q.node_count > 100);
        assert!(q.est_error.is_sign_positive() || q.est_error.is_zero());
    }

    #[test]
    fn quadrature_crosses_the_sum_route() {
        let c = ctx();
        for n in [1u64, 3, 10, 75] {
            let row = coeff_row(n, &c, SumMethod::Auto).unwrap();
            let m1 = mean_y_quad(n, 1e-25, &c).unwrap();
            let m2 = second_moment_y_quad(n, 1e-25, &c).unwrap();
            let e1 = abs_diff(&m1.value, row.mean_y.value());
            let e2 = abs_diff(&m2.value, row.second_moment_y.value());
            assert!(
                e1 < Float::with_val(64, 1e-18),
                "mean mismatch at n = {n}: {:.3e}",
                e1.to_f64()
            );
            assert!(
                e2 < Float::with_val(64, 1e-18),
                "second moment mismatch at n = {n}: {:.3e}",
                e2.to_f64()
            );
        }
    }

    #[test]
    fn parameter_validation() {
        let c = ctx();
        assert!(mean_y_quad(0, 1e-20, &c).is_err());
        assert!(mean_y_quad(3, 0.0, &c).is_err());
        assert!(mean_y_quad(3, 2.0, &c).is_err());
        assert!(mean_y_quad(3, -1e-5, &c).is_err());
        // Tolerance below the precision's resolution is refused, not fudged.
        assert!(matches!(mean_y_quad(3, 1e-200, &c), Err(Error::Config(_))));
    }
}
