//! The alternating binomial logarithmic sums and everything assembled from
//! them.
//!
//! The terms of `S1(n) = sum_{j=1}^n (-1)^j C(n,j) ln j` reach `2^n` while the
//! sum itself stays below `ln ln n + 1`, so about `n` bits cancel. Both
//! evaluation routes pay for that up front by working at
//! `P = n + max(bits, 64) + guard` bits:
//!
//! * **direct big-float**: exact binomials times correctly rounded `ln j`,
//!   accumulated term by term. Simple, and the default up to `n = 64`.
//! * **prime-factored**: expand `ln j = sum_p e_p(j) ln p`. The alternating
//!   sums collapse onto *exact integer* coefficients `A_p = sum_j +/-C e_p(j)`
//!   and `B_{p,q} = sum_j +/-C e_p(j) e_q(j)`, accumulated with no rounding at
//!   all; floating point enters only in the final `O(pi(n))`-term conversion
//!   `sum_p A_p ln p` (and its `B` analogue for `S2`). The default above
//!   `n = 64` and the only practical route at `n` in the tens of thousands.
//!
//! Every result carries a certified bound and is accepted only if the bound
//! is below `2^-32` of the value; otherwise guard bits double (up to the
//! context's escalation budget) and the computation reruns. What cannot be
//! certified is reported as [`Error::PrecisionLoss`], never returned quietly.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use rug::float::Round;
use rug::{Float, Integer};

use crate::exactcore::{ConstantPool, ErrorBounded, PrecisionContext, Sieve, MAX_PREC};
use crate::{Error, Result};

/// Largest `n` for which [`SumMethod::Auto`] stays on the direct route.
pub const DIRECT_METHOD_CEILING: u64 = 64;

/// A result is accepted once its bound is below `2^-REL_BITS` of its value.
const REL_BITS: u32 = 32;

/// Evaluation route for the alternating sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumMethod {
    /// Direct up to [`DIRECT_METHOD_CEILING`], prime-factored beyond.
    #[default]
    Auto,
    DirectBigfloat,
    PrimeFactored,
}

impl SumMethod {
    /// The route actually taken for a given `n`.
    pub fn resolve(self, n: u64) -> SumMethod {
        match self {
            SumMethod::Auto => {
                if n > DIRECT_METHOD_CEILING {
                    SumMethod::PrimeFactored
                } else {
                    SumMethod::DirectBigfloat
                }
            }
            m => m,
        }
    }
}

/// One certified row of coefficients at index `n`.
///
/// `c_n = -S1/n`, `w_n = -S2/n`, `v_n = zeta(2) - S2 - S1^2` (the variance of
/// the log-maximum `Y` of `n` i.i.d. standard exponentials),
/// `mean_y = S1 - gamma = E[Y]`, and `second_moment_y = E[Y^2]`.
#[derive(Clone, Debug)]
pub struct CoeffRow {
    pub n: u64,
    pub c_n: ErrorBounded,
    pub w_n: ErrorBounded,
    pub v_n: ErrorBounded,
    pub mean_y: ErrorBounded,
    pub second_moment_y: ErrorBounded,
}

/// Positivity verdict for one `v_n`.
#[derive(Clone, Debug)]
pub struct InequalityRow {
    pub n: u64,
    pub v_n: ErrorBounded,
    /// The whole certified enclosure of `v_n` lies strictly above zero.
    pub certified_positive: bool,
}

/// One certified consecutive difference `v_{n+1} - v_n`.
#[derive(Clone, Debug)]
pub struct ConjectureRow {
    /// Lower index: the row describes `v_{n+1} - v_n`.
    pub n: u64,
    pub delta_v: ErrorBounded,
    /// The enclosure of the difference lies strictly below zero.
    pub certified_negative: bool,
}

/// Working precision for the cancellation-heavy summation phase.
fn work_prec(n: u64, ctx: &PrecisionContext) -> Result<u32> {
    let total = n
        .checked_add(u64::from(ctx.bits().max(64)))
        .and_then(|t| t.checked_add(u64::from(ctx.guard_bits())))
        .and_then(|t| t.checked_add(16));
    match total {
        Some(t) if t <= u64::from(MAX_PREC) => Ok(t as u32),
        _ => Err(Error::Config(format!(
            "n = {n} needs a working precision beyond the supported maximum {MAX_PREC} bits"
        ))),
    }
}

/// `ln x` for an exact machine integer, correctly rounded at `prec`.
fn ln_exact_u64(x: u64, prec: u32) -> ErrorBounded {
    let v = Float::with_val(64, x); // any u64 is exact in 64 bits
    ErrorBounded::rounded(Float::with_val_round(prec, v.ln_ref(), Round::Nearest))
}

/// Direct big-float route: one pass over `j`, exact binomials via the
/// multiplicative recurrence, `S2` only on request.
fn direct_sums(n: u64, prec: u32, want_s2: bool) -> (ErrorBounded, Option<ErrorBounded>) {
    let mut s1 = ErrorBounded::zero(prec);
    let mut s2 = want_s2.then(|| ErrorBounded::zero(prec));
    let mut c = Integer::from(1u32);
    for j in 1..=n {
        // C(n, j) = C(n, j-1) * (n - j + 1) / j, exactly.
        c *= n - j + 1;
        c /= j;
        let lnj = ln_exact_u64(j, prec);
        let t1 = lnj.mul_int(&c, prec);
        let negative = j & 1 == 1;
        s1 = if negative { s1.sub(&t1, prec) } else { s1.add(&t1, prec) };
        if let Some(acc) = s2.take() {
            let t2 = lnj.sqr(prec).mul_int(&c, prec);
            s2 = Some(if negative { acc.sub(&t2, prec) } else { acc.add(&t2, prec) });
        }
    }
    (s1, s2)
}

type PrimePowerMap = BTreeMap<u64, Integer>;
type PrimePairMap = BTreeMap<(u64, u64), Integer>;

/// Exact phase of the prime-factored route: `A_p` (always) and `B_{p,q}`
/// with sorted pair keys (on request), as exact big integers.
fn prime_maps(n: u64, want_b: bool) -> Result<(PrimePowerMap, PrimePairMap)> {
    let sieve = Sieve::new(n)?;
    let mut a = PrimePowerMap::new();
    let mut b = PrimePairMap::new();
    let mut c = Integer::from(1u32);
    for j in 1..=n {
        c *= n - j + 1;
        c /= j;
        let facs = sieve.factorize(j)?;
        let negative = j & 1 == 1;
        for &(p, e) in &facs {
            let entry = a.entry(p).or_default();
            if negative {
                *entry -= &c * u64::from(e);
            } else {
                *entry += &c * u64::from(e);
            }
        }
        if want_b {
            for (i, &(p, ep)) in facs.iter().enumerate() {
                for &(q, eq) in &facs[i..] {
                    let coef = u64::from(ep) * u64::from(eq);
                    let entry = b.entry((p, q)).or_default();
                    if negative {
                        *entry -= &c * coef;
                    } else {
                        *entry += &c * coef;
                    }
                }
            }
        }
    }
    Ok((a, b))
}

/// Float phase: `S1 = sum_p A_p ln p`.
fn s1_from_maps(a: &BTreeMap<u64, Integer>, prec: u32) -> ErrorBounded {
    let mut s1 = ErrorBounded::zero(prec);
    for (&p, ap) in a {
        if ap.is_zero() {
            continue;
        }
        let term = ln_exact_u64(p, prec).mul_int(ap, prec);
        s1 = s1.add(&term, prec);
    }
    s1
}

/// Float phase: `S2 = sum_{p<=q} [q>p: 2] B_{p,q} ln p ln q`, factored as
/// `sum_p ln p * (sum_{q>=p} [q>p: 2] B_{p,q} ln q)` so each map entry costs
/// one big multiplication.
fn s2_from_maps(b: &BTreeMap<(u64, u64), Integer>, prec: u32) -> ErrorBounded {
    let mut lns: BTreeMap<u64, ErrorBounded> = BTreeMap::new();
    for &(p, q) in b.keys() {
        lns.entry(p).or_insert_with(|| ln_exact_u64(p, prec));
        lns.entry(q).or_insert_with(|| ln_exact_u64(q, prec));
    }
    let mut s2 = ErrorBounded::zero(prec);
    let mut cur_p: Option<u64> = None;
    let mut inner = ErrorBounded::zero(prec);
    let flush = |p: Option<u64>, inner: &ErrorBounded, s2: &mut ErrorBounded| {
        if let Some(p) = p {
            *s2 = s2.add(&lns[&p].mul(inner, prec), prec);
        }
    };
    for (&(p, q), bpq) in b {
        if cur_p != Some(p) {
            flush(cur_p, &inner, &mut s2);
            cur_p = Some(p);
            inner = ErrorBounded::zero(prec);
        }
        if bpq.is_zero() {
            continue;
        }
        let mut term = lns[&q].mul_int(bpq, prec);
        if q != p {
            term = term.double();
        }
        inner = inner.add(&term, prec);
    }
    flush(cur_p, &inner, &mut s2);
    s2
}

/// Both sums (`S2` optional) by the resolved route, at escalable precision.
fn raw_sums(
    n: u64,
    ctx: &PrecisionContext,
    method: SumMethod,
    want_s2: bool,
) -> Result<(ErrorBounded, Option<ErrorBounded>)> {
    let prec = work_prec(n, ctx)?;
    match method.resolve(n) {
        SumMethod::DirectBigfloat => Ok(direct_sums(n, prec, want_s2)),
        SumMethod::PrimeFactored => {
            let (a, b) = prime_maps(n, want_s2)?;
            let s1 = s1_from_maps(&a, prec);
            let s2 = want_s2.then(|| s2_from_maps(&b, prec));
            Ok((s1, s2))
        }
        SumMethod::Auto => unreachable!("resolve never yields Auto"),
    }
}

/// Run `compute` with escalating guard bits until `accept` passes, up to the
/// context's escalation budget; report a certified precision loss otherwise.
fn with_escalation<T>(
    n: u64,
    ctx: &PrecisionContext,
    compute: impl Fn(&PrecisionContext) -> Result<T>,
    accept: impl Fn(&T) -> bool,
    describe: impl Fn(&T) -> (f64, f64),
) -> Result<T> {
    let mut cur = ctx.clone();
    let mut attempt = 0u32;
    loop {
        let r = compute(&cur)?;
        if accept(&r) {
            return Ok(r);
        }
        if attempt >= ctx.max_auto_escalations() {
            let (value_mag, error_mag) = describe(&r);
            return Err(Error::PrecisionLoss {
                n,
                value_mag,
                error_mag,
                escalations: attempt,
            });
        }
        cur = cur.escalated()?;
        attempt += 1;
    }
}

fn eb_mags(eb: &ErrorBounded) -> (f64, f64) {
    (eb.to_f64().abs(), eb.abs_error_f64())
}

fn scalar_sum(n: u64, ctx: &PrecisionContext, method: SumMethod, second: bool) -> Result<ErrorBounded> {
    if n == 0 {
        return Err(Error::Domain("alternating log-sums start at n = 1".into()));
    }
    with_escalation(
        n,
        ctx,
        |c| {
            let (s1, s2) = raw_sums(n, c, method, second)?;
            Ok(if second { s2.expect("requested") } else { s1 })
        },
        |eb| eb.is_certified_rel(REL_BITS),
        eb_mags,
    )
}

/// `S1(n) = sum_{j=1}^n (-1)^j C(n,j) ln j`, certified.
pub fn log_alt_sum(n: u64, ctx: &PrecisionContext, method: SumMethod) -> Result<ErrorBounded> {
    scalar_sum(n, ctx, method, false)
}

/// Both sums in one pass (one exact coefficient phase instead of two).
pub(crate) fn certified_sums(
    n: u64,
    ctx: &PrecisionContext,
    method: SumMethod,
) -> Result<(ErrorBounded, ErrorBounded)> {
    if n == 0 {
        return Err(Error::Domain("alternating log-sums start at n = 1".into()));
    }
    with_escalation(
        n,
        ctx,
        |c| {
            let (s1, s2) = raw_sums(n, c, method, true)?;
            Ok((s1, s2.expect("requested")))
        },
        |(s1, s2)| s1.is_certified_rel(REL_BITS) && s2.is_certified_rel(REL_BITS),
        |(s1, _)| eb_mags(s1),
    )
}

/// `S2(n) = sum_{j=1}^n (-1)^j C(n,j) (ln j)^2`, certified.
pub fn log2_alt_sum(n: u64, ctx: &PrecisionContext, method: SumMethod) -> Result<ErrorBounded> {
    scalar_sum(n, ctx, method, true)
}

/// Generic alternating binomial transform `sum_{j=0}^n (-1)^j C(n,j) f_j`
/// over caller-supplied certified values (`f.len() == n + 1`).
///
/// The result's bound accounts for the input bounds and every rounding; no
/// reliability policy is applied, because the inputs cannot be recomputed
/// more precisely from here.
pub fn alt_diff(n: u64, f: &[ErrorBounded], ctx: &PrecisionContext) -> Result<ErrorBounded> {
    let expected = n
        .checked_add(1)
        .and_then(|l| usize::try_from(l).ok())
        .ok_or_else(|| Error::Domain(format!("n = {n} is out of range for alt_diff")))?;
    if f.len() != expected {
        return Err(Error::Domain(format!(
            "alt_diff needs f_0..f_n inclusive: expected {expected} values, got {}",
            f.len()
        )));
    }
    let prec = work_prec(n, ctx)?;
    let mut sum = ErrorBounded::zero(prec);
    let mut c = Integer::from(1u32);
    for (j, fj) in f.iter().enumerate() {
        let term = fj.mul_int(&c, prec);
        sum = if j & 1 == 1 { sum.sub(&term, prec) } else { sum.add(&term, prec) };
        // C(n, j+1) from C(n, j).
        let j = j as u64;
        if j < n {
            c *= n - j;
            c /= j + 1;
        }
    }
    Ok(sum)
}

/// Assemble the derived quantities from certified `S1`, `S2` at the
/// context's own (small) precision.
fn assemble_row(
    n: u64,
    s1: &ErrorBounded,
    s2: &ErrorBounded,
    ctx: &PrecisionContext,
) -> Result<CoeffRow> {
    let pool = ConstantPool::new(ctx)?;
    let p = ctx.effective() + 16;
    let n_int = Integer::from(n);
    let c_n = s1.div_int(&n_int, p).neg();
    let w_n = s2.div_int(&n_int, p).neg();
    let v_n = pool.zeta2().sub(s2, p).sub(&s1.sqr(p), p);
    let mean_y = s1.sub(pool.gamma(), p);
    let second_moment_y = pool
        .gamma()
        .sqr(p)
        .add(pool.zeta2(), p)
        .sub(&pool.gamma().mul(s1, p).double(), p)
        .sub(s2, p);
    Ok(CoeffRow {
        n,
        c_n,
        w_n,
        v_n,
        mean_y,
        second_moment_y,
    })
}

/// One fully certified coefficient row.
pub fn coeff_row(n: u64, ctx: &PrecisionContext, method: SumMethod) -> Result<CoeffRow> {
    if n == 0 {
        return Err(Error::Domain("coefficient rows start at n = 1".into()));
    }
    with_escalation(
        n,
        ctx,
        |c| {
            let (s1, s2) = raw_sums(n, c, method, true)?;
            assemble_row(n, &s1, &s2.expect("requested"), c)
        },
        |row| {
            [&row.c_n, &row.w_n, &row.v_n, &row.mean_y, &row.second_moment_y]
                .into_iter()
                .all(|eb| eb.is_certified_rel(REL_BITS))
        },
        |row| eb_mags(&row.v_n),
    )
}

/// `v_n` alone (used by the sweeps, where `c_n`/`w_n` would be dead weight).
fn v_row(n: u64, ctx: &PrecisionContext) -> Result<ErrorBounded> {
    with_escalation(
        n,
        ctx,
        |c| {
            let (s1, s2) = raw_sums(n, c, SumMethod::Auto, true)?;
            let pool = ConstantPool::new(c)?;
            let p = c.effective() + 16;
            Ok(pool.zeta2().sub(&s2.expect("requested"), p).sub(&s1.sqr(p), p))
        },
        |v| v.is_certified_rel(REL_BITS) && v.certified_sign().is_some(),
        eb_mags,
    )
}

/// Certify the sign of `v_n` for every `n` up to `n_max`.
///
/// Each row's enclosure is tightened until it separates from zero;
/// `certified_positive` is false only when an enclosure lies certifiedly
/// *below* zero, which would contradict the positivity theorem. A row whose
/// sign cannot be pinned down within the escalation budget aborts the sweep
/// with [`Error::PrecisionLoss`].
pub fn verify_inequality(n_max: u64, ctx: &PrecisionContext) -> Result<Vec<InequalityRow>> {
    if n_max == 0 {
        return Err(Error::Domain("verification needs n_max >= 1".into()));
    }
    let ns: Vec<u64> = (1..=n_max).collect();
    ns.par_iter()
        .map(|&n| {
            let v_n = v_row(n, ctx)?;
            let certified_positive = v_n.certified_sign() == Some(Ordering::Greater);
            Ok(InequalityRow {
                n,
                v_n,
                certified_positive,
            })
        })
        .collect()
}

/// Certified consecutive differences `v_{n+1} - v_n` for `n < n_max`.
///
/// Reports the sign of each difference; asserts nothing about monotonicity
/// (that question is open). A difference whose sign cannot be certified
/// within the escalation budget is a precision loss.
pub fn conjecture_scan(n_max: u64, ctx: &PrecisionContext) -> Result<Vec<ConjectureRow>> {
    if n_max < 2 {
        return Err(Error::Domain("the difference scan needs n_max >= 2".into()));
    }
    let ns: Vec<u64> = (1..=n_max).collect();
    let rows: Vec<ErrorBounded> = ns.par_iter().map(|&n| v_row(n, ctx)).collect::<Result<_>>()?;
    let p = ctx.effective() + 16;
    let mut out = Vec::with_capacity(rows.len() - 1);
    for (i, pair) in rows.windows(2).enumerate() {
        let n = (i + 1) as u64;
        let mut delta = pair[1].sub(&pair[0], p);
        if delta.certified_sign().is_none() {
            // The base enclosures were tight enough for sign and relative
            // certification individually but the difference straddles zero:
            // recompute the pair with more guard bits.
            delta = with_escalation(
                n,
                ctx,
                |c| {
                    let esc = c.escalated()?;
                    let lo = v_row(n, &esc)?;
                    let hi = v_row(n + 1, &esc)?;
                    Ok(hi.sub(&lo, esc.effective() + 16))
                },
                |d| d.certified_sign().is_some(),
                eb_mags,
            )?;
        }
        let certified_negative = delta.certified_sign() == Some(Ordering::Less);
        out.push(ConjectureRow {
            n,
            delta_v: delta,
            certified_negative,
        });
    }
    Ok(out)
}
