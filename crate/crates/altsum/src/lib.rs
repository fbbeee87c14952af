//! Certified-precision evaluation of the alternating binomial logarithmic sums
//!
//! ```text
//! S1(n) = sum_{j=1}^{n} (-1)^j C(n,j) ln j
//! S2(n) = sum_{j=1}^{n} (-1)^j C(n,j) (ln j)^2
//! ```
//!
//! and of the quantities built from them: the scaled coefficients
//! `c_n = -S1/n`, `w_n = -S2/n`, the variance form
//! `v_n = pi^2/6 - S2 - S1^2` (provably positive), and the mean and second
//! moment of the log-maximum of `n` i.i.d. exponentials,
//! `E[Y] = S1 - gamma`, `E[Y^2] = gamma^2 + pi^2/6 - 2 gamma S1 - S2`.
//!
//! The terms of these sums grow like `2^n` while the results stay `O(ln ln n)`,
//! so naive evaluation loses roughly `n` bits to cancellation. Everything here
//! is therefore computed with explicit, certified error bounds
//! ([`exactcore::ErrorBounded`]) at a working precision that pays the
//! cancellation up front, and every public result is either accepted against a
//! relative-accuracy criterion or rejected with
//! [`Error::PrecisionLoss`] — never silently wrong.
//!
//! Module map:
//! * [`exactcore`] — precision policy, certified interval arithmetic, exact
//!   binomials, factorization, high-precision constants.
//! * [`findiff`] — the alternating sums themselves, by two independent routes
//!   (direct big-float summation and exact prime-factored summation), plus the
//!   positivity verifier for `v_n`.
//! * [`integralrep`] — double-exponential quadrature of the integral
//!   representations of the same moments; a third independent route.
//! * [`asymptotics`] — truncated large-`n` expansions of `S1`, `S2` and
//!   residual scans against the exact values.
//! * [`collector`] — the coupon-collector side: exact moments of the minimum
//!   completion time across players, and Monte Carlo simulators for both that
//!   minimum and the log-maximum-exponential sample.

pub mod asymptotics;
pub mod collector;
mod error;
pub mod exactcore;
pub mod findiff;
pub mod integralrep;

pub use error::{Error, Result};
