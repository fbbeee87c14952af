//! Truncated large-`n` expansions of the alternating log-sums and residual
//! scans against the exact values.
//!
//! With `l = ln n` and `L = ln ln n`, the implemented truncations are
//!
//! ```text
//! fs1(n) = L + gamma + gamma/l - (gamma^2 + pi^2/6) / (2 l^2)
//! fs2(n) = -L^2 - 2 gamma L + pi^2/6 - gamma^2
//!          - 2 gamma L / l + (gamma^2 + pi^2/6) L / l^2
//!          - 2 gamma^2 / l - (gamma^2 - pi^2/6) / l^2
//! ```
//!
//! approximating `S1` and `S2`. The `S1` residual decays like `1/l^3`, so a
//! scan reports it rescaled by `l^3`; the `S2` residual is rescaled by
//! `l^3 / L`. Residuals are observational — nothing here asserts a rate, the
//! scan just pairs certified exact values with the truncations so the decay
//! can be checked by whoever asked.

use rug::ops::NegAssign;
use rug::Float;

use crate::exactcore::{ConstantPool, ErrorBounded, PrecisionContext};
use crate::findiff::{certified_sums, SumMethod};
use crate::{Error, Result};

/// One truncation compared against the certified exact value.
#[derive(Clone, Debug)]
pub struct ExpansionReport {
    pub n: u64,
    pub exact: ErrorBounded,
    pub truncated: Float,
    /// `exact - truncated` (midpoint arithmetic; the certified bound on
    /// `exact` is orders of magnitude below any interesting residual).
    pub residual: Float,
    /// Residual times `l^3` (for `S1`) or `l^3 / L` (for `S2`).
    pub scaled_residual: Float,
}

/// Scan output at one grid point.
#[derive(Clone, Debug)]
pub struct GridPointReport {
    pub n: u64,
    pub s1: ExpansionReport,
    pub s2: ExpansionReport,
    pub v_n: ErrorBounded,
}

fn logs(n: u64, prec: u32) -> (Float, Float) {
    let l = Float::with_val(prec, n).ln();
    let ll = Float::with_val(prec, l.ln_ref());
    (l, ll)
}

fn require_n3(n: u64, what: &str) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!(
            "{what} needs n >= 3 (ln ln n must be positive), got {n}"
        )));
    }
    Ok(())
}

/// Four-term truncation of `S1(n)`.
pub fn fs1_truncated(n: u64, ctx: &PrecisionContext) -> Result<Float> {
    require_n3(n, "fs1_truncated")?;
    let prec = ctx.effective() + 16;
    let pool = ConstantPool::new(ctx)?;
    let gamma = pool.gamma().value();
    let zeta2 = pool.zeta2().value();
    let (l, ll) = logs(n, prec);

    let mut out = ll;
    out += gamma;
    out += Float::with_val(prec, gamma / &l);
    // (gamma^2 + zeta2) / (2 l^2)
    let mut tail = Float::with_val(prec, gamma * gamma);
    tail += zeta2;
    tail /= Float::with_val(prec, &l * &l);
    tail >>= 1u32;
    out -= tail;
    Ok(out)
}

/// Eight-term truncation of `S2(n)`.
pub fn fs2_truncated(n: u64, ctx: &PrecisionContext) -> Result<Float> {
    require_n3(n, "fs2_truncated")?;
    let prec = ctx.effective() + 16;
    let pool = ConstantPool::new(ctx)?;
    let gamma = pool.gamma().value();
    let zeta2 = pool.zeta2().value();
    let (l, ll) = logs(n, prec);
    let gamma_sq = Float::with_val(prec, gamma * gamma);
    let l_sq = Float::with_val(prec, &l * &l);

    // -L^2 - 2 gamma L + zeta2 - gamma^2
    let mut out = Float::with_val(prec, &ll * &ll);
    out.neg_assign();
    let mut t = Float::with_val(prec, gamma * &ll);
    t <<= 1u32;
    out -= t;
    out += zeta2;
    out -= &gamma_sq;
    // - 2 gamma L / l
    let mut t = Float::with_val(prec, gamma * &ll);
    t <<= 1u32;
    t /= &l;
    out -= t;
    // + (gamma^2 + zeta2) L / l^2
    let mut t = Float::with_val(prec, &gamma_sq + zeta2);
    t *= &ll;
    t /= &l_sq;
    out += t;
    // - 2 gamma^2 / l
    let mut t = Float::with_val(prec, &gamma_sq / &l);
    t <<= 1u32;
    out -= t;
    // - (gamma^2 - zeta2) / l^2
    let mut t = Float::with_val(prec, &gamma_sq - zeta2);
    t /= &l_sq;
    out -= t;
    Ok(out)
}

/// Exact-vs-truncated comparison over a grid of indices.
///
/// Every grid point needs `n >= 3`; exact sums are certified (method chosen
/// automatically, i.e. prime-factored at these sizes) and `v_n` comes along
/// for free since both sums are in hand.
pub fn residual_scan(grid: &[u64], ctx: &PrecisionContext) -> Result<Vec<GridPointReport>> {
    if grid.is_empty() {
        return Err(Error::Domain("residual scan over an empty grid".into()));
    }
    for &n in grid {
        require_n3(n, "residual_scan")?;
    }
    let pool = ConstantPool::new(ctx)?;
    let prec = ctx.effective() + 16;
    grid.iter()
        .map(|&n| {
            let (s1, s2) = certified_sums(n, ctx, SumMethod::Auto)?;
            let v_n = pool.zeta2().sub(&s2, prec).sub(&s1.sqr(prec), prec);
            let (l, ll) = logs(n, prec);
            let l_cubed = Float::with_val(prec, &l * &l) * &l;

            let t1 = fs1_truncated(n, ctx)?;
            let r1 = Float::with_val(prec, s1.value() - &t1);
            let sc1 = Float::with_val(prec, &r1 * &l_cubed);
            let s1_report = ExpansionReport {
                n,
                exact: s1,
                truncated: t1,
                residual: r1,
                scaled_residual: sc1,
            };

            let t2 = fs2_truncated(n, ctx)?;
            let r2 = Float::with_val(prec, s2.value() - &t2);
            let mut sc2 = Float::with_val(prec, &r2 * &l_cubed);
            sc2 /= &ll;
            let s2_report = ExpansionReport {
                n,
                exact: s2,
                truncated: t2,
                residual: r2,
                scaled_residual: sc2,
            };

            Ok(GridPointReport {
                n,
                s1: s1_report,
                s2: s2_report,
                v_n,
            })
        })
        .collect()
}
