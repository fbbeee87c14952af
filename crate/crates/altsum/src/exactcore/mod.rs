//! Precision policy, certified arithmetic, and the exact integer substrate.
//!
//! Everything downstream is parameterized by a [`PrecisionContext`]: the
//! user-visible target precision, the guard bits spent above it, and how many
//! times the library may escalate the guard on its own before giving up and
//! reporting a precision loss. A [`ConstantPool`] caches the shared
//! transcendental constants (Euler's gamma, zeta(2) = pi^2/6, logarithms of
//! primes) as certified enclosures at context precision.

mod errorbound;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rug::float::{Constant, Round};
use rug::{Float, Integer};

pub use errorbound::{ErrorBounded, ERR_PREC};

use crate::{Error, Result};

/// Largest supported working precision in bits. Far beyond anything runnable,
/// but keeps us clear of MPFR's own precision limits with room to spare.
pub const MAX_PREC: u32 = 1 << 28;

/// Headroom added on top of `bits + guard_bits` whenever a value is computed
/// so that the *stored* enclosure meets its advertised `2^-bits` bound even
/// for values with a few integer digits.
const STORE_MARGIN: u32 = 16;

/// Precision policy: target bits, guard bits, and the escalation budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecisionContext {
    bits: u32,
    guard_bits: u32,
    max_auto_escalations: u32,
}

impl PrecisionContext {
    /// A context with `bits` of target precision (64 minimum), `guard_bits`
    /// of slack, and up to `max_auto_escalations` automatic guard doublings.
    pub fn new(bits: u32, guard_bits: u32, max_auto_escalations: u32) -> Result<Self> {
        if bits < 64 {
            return Err(Error::Config(format!(
                "target precision must be at least 64 bits, got {bits}"
            )));
        }
        if bits > MAX_PREC || guard_bits > MAX_PREC || bits + guard_bits > MAX_PREC {
            return Err(Error::Config(format!(
                "requested precision {bits}+{guard_bits} exceeds the supported maximum {MAX_PREC}"
            )));
        }
        if max_auto_escalations > 16 {
            return Err(Error::Config(format!(
                "escalation budget {max_auto_escalations} is unreasonably large (max 16)"
            )));
        }
        Ok(PrecisionContext {
            bits,
            guard_bits,
            max_auto_escalations,
        })
    }

    /// Default guard (32) and escalation budget (4) at the given target.
    pub fn with_bits(bits: u32) -> Result<Self> {
        PrecisionContext::new(bits, 32, 4)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn guard_bits(&self) -> u32 {
        self.guard_bits
    }

    pub fn max_auto_escalations(&self) -> u32 {
        self.max_auto_escalations
    }

    /// Working precision: target plus guard.
    pub fn effective(&self) -> u32 {
        self.bits + self.guard_bits
    }

    /// The next escalation step: guard bits double (from a floor of 64).
    /// The escalation *budget* is not consumed here; callers count attempts.
    pub fn escalated(&self) -> Result<Self> {
        PrecisionContext::new(self.bits, (self.guard_bits * 2).max(64), self.max_auto_escalations)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext::new(128, 32, 4).expect("default context is valid")
    }
}

/// Exact binomial coefficient `C(n, k)`.
pub fn binomial_exact(n: u64, k: u64) -> Result<Integer> {
    if k > n {
        return Err(Error::Domain(format!(
            "binomial C({n}, {k}) with k > n is outside this library's domain"
        )));
    }
    let k32 = u32::try_from(k.min(n - k)).map_err(|_| {
        Error::Domain(format!("binomial C({n}, {k}) is astronomically large"))
    })?;
    Ok(Integer::from(n).binomial(k32))
}

/// Prime factorization of `j` by trial division: `(p, e)` pairs with
/// ascending `p`. `j = 1` factors into the empty product.
///
/// Deliberately independent of [`Sieve`] so the two can cross-check each
/// other.
pub fn prime_exponents(j: u64) -> Result<Vec<(u64, u32)>> {
    if j == 0 {
        return Err(Error::Domain("0 has no prime factorization".into()));
    }
    let mut rest = j;
    let mut out = Vec::new();
    let mut push = |p: u64, rest: &mut u64| {
        let mut e = 0u32;
        while (*rest).is_multiple_of(p) {
            *rest /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    };
    push(2, &mut rest);
    push(3, &mut rest);
    let mut p = 5u64;
    // 2/4 wheel over the remaining candidates.
    let mut step = 2u64;
    while p.checked_mul(p).is_some_and(|sq| sq <= rest) {
        push(p, &mut rest);
        p += step;
        step = 6 - step;
    }
    if rest > 1 {
        out.push((rest, 1));
    }
    Ok(out)
}

/// Smallest-prime-factor sieve for bulk factorization up to a fixed limit.
pub struct Sieve {
    limit: u64,
    spf: Vec<u32>,
}

impl Sieve {
    pub fn new(limit: u64) -> Result<Self> {
        if limit > u64::from(u32::MAX) {
            return Err(Error::Config(format!(
                "sieve limit {limit} exceeds the supported maximum {}",
                u32::MAX
            )));
        }
        let len = (limit as usize).saturating_add(1).max(2);
        let mut spf = vec![0u32; len];
        spf[1] = 1;
        for i in 2..len {
            if spf[i] == 0 {
                spf[i] = i as u32;
                let mut m = i * i;
                while m < len {
                    if spf[m] == 0 {
                        spf[m] = i as u32;
                    }
                    m += i;
                }
            }
        }
        Ok(Sieve { limit, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// `(p, e)` pairs with ascending `p`; `j = 1` gives the empty product.
    pub fn factorize(&self, j: u64) -> Result<Vec<(u64, u32)>> {
        if j == 0 || j > self.limit {
            return Err(Error::Domain(format!(
                "factorize({j}) outside sieve range 1..={}",
                self.limit
            )));
        }
        let mut out = Vec::new();
        let mut rest = j as usize;
        while rest > 1 {
            let p = self.spf[rest] as usize;
            let mut e = 0u32;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
        Ok(out)
    }

    /// All primes up to the limit, ascending.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..=self.limit as usize)
            .filter(move |&i| self.spf[i] == i as u32)
            .map(|i| i as u64)
    }
}

/// Natural logarithm of an exact positive input, as a certified enclosure
/// with `abs_error <= 2^-bits * max(1, |ln x|)`.
pub fn ln_hp(x: &Float, ctx: &PrecisionContext) -> Result<ErrorBounded> {
    if !x.is_finite() || !matches!((*x).partial_cmp(&0), Some(Ordering::Greater)) {
        return Err(Error::Domain(format!(
            "ln_hp requires a finite positive input, got {x}"
        )));
    }
    let prec = checked_prec(ctx.effective(), STORE_MARGIN)?;
    Ok(ErrorBounded::rounded(Float::with_val_round(
        prec,
        x.ln_ref(),
        Round::Nearest,
    )))
}

fn checked_prec(base: u32, margin: u32) -> Result<u32> {
    base.checked_add(margin)
        .filter(|&p| p <= MAX_PREC)
        .ok_or_else(|| {
            Error::Config(format!(
                "working precision {base}+{margin} exceeds the supported maximum {MAX_PREC}"
            ))
        })
}

/// Shared certified constants at context precision. Entries are computed on
/// first use and cached; the pool is safe to share across threads.
pub struct ConstantPool {
    ctx: PrecisionContext,
    store_prec: u32,
    gamma: OnceLock<ErrorBounded>,
    zeta2: OnceLock<ErrorBounded>,
    ln_primes: RwLock<HashMap<u64, Arc<ErrorBounded>>>,
}

impl ConstantPool {
    pub fn new(ctx: &PrecisionContext) -> Result<Self> {
        let store_prec = checked_prec(ctx.effective(), STORE_MARGIN)?;
        Ok(ConstantPool {
            ctx: ctx.clone(),
            store_prec,
            gamma: OnceLock::new(),
            zeta2: OnceLock::new(),
            ln_primes: RwLock::new(HashMap::new()),
        })
    }

    pub fn ctx(&self) -> &PrecisionContext {
        &self.ctx
    }

    /// Euler–Mascheroni constant. MPFR computes it correctly rounded, so the
    /// enclosure is one ulp wide at storage precision.
    pub fn gamma(&self) -> &ErrorBounded {
        self.gamma.get_or_init(|| {
            ErrorBounded::rounded(Float::with_val_round(
                self.store_prec,
                Constant::Euler,
                Round::Nearest,
            ))
        })
    }

    /// `zeta(2) = pi^2 / 6`.
    pub fn zeta2(&self) -> &ErrorBounded {
        self.zeta2.get_or_init(|| {
            let pi = ErrorBounded::rounded(Float::with_val_round(
                self.store_prec + STORE_MARGIN,
                Constant::Pi,
                Round::Nearest,
            ));
            pi.sqr(self.store_prec + STORE_MARGIN)
                .div_int(&Integer::from(6), self.store_prec)
        })
    }

    /// `ln p` for a prime `p`, cached. The returned `Arc` makes repeated use
    /// cheap even at six-figure precisions.
    pub fn ln_prime(&self, p: u64) -> Result<Arc<ErrorBounded>> {
        if p < 2 {
            return Err(Error::Domain(format!("ln_prime({p}): primes start at 2")));
        }
        if let Some(hit) = self.ln_primes.read().expect("ln cache poisoned").get(&p) {
            return Ok(Arc::clone(hit));
        }
        let x = Float::with_val(64, p); // exact: p < 2^64
        let val = Arc::new(ErrorBounded::rounded(Float::with_val_round(
            self.store_prec,
            x.ln_ref(),
            Round::Nearest,
        )));
        let mut cache = self.ln_primes.write().expect("ln cache poisoned");
        Ok(Arc::clone(cache.entry(p).or_insert(val)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::cmp::Ordering;

    #[test]
    fn context_validation() {
        assert!(PrecisionContext::new(63, 0, 0).is_err());
        assert!(PrecisionContext::new(64, 0, 0).is_ok());
        assert!(PrecisionContext::new(MAX_PREC, 64, 0).is_err());
        let ctx = PrecisionContext::default();
        assert_eq!(ctx.effective(), 160);
        let esc = ctx.escalated().unwrap();
        assert_eq!(esc.guard_bits(), 64);
        assert_eq!(esc.escalated().unwrap().guard_bits(), 128);
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial_exact(0, 0).unwrap(), 1);
        assert_eq!(binomial_exact(4, 2).unwrap(), 6);
        assert_eq!(binomial_exact(10, 3).unwrap(), 120);
        assert!(binomial_exact(3, 4).is_err());
    }

    #[test]
    fn binomial_against_pascal_triangle() {
        // Independent oracle: Pascal's rule in u128 as far as it fits.
        let n_max = 64usize;
        let mut row = vec![1u128];
        for n in 1..=n_max {
            let mut next = vec![1u128; n + 1];
            for k in 1..n {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
        }
        for (k, &expect) in row.iter().enumerate() {
            let got = binomial_exact(64, k as u64).unwrap();
            assert_eq!(got, Integer::from(expect), "C(64,{k})");
        }
        assert_eq!(
            binomial_exact(64, 32).unwrap(),
            Integer::from(1_832_624_140_942_590_534u64)
        );
    }

    #[test]
    fn trial_division_examples() {
        assert_eq!(prime_exponents(1).unwrap(), vec![]);
        assert_eq!(prime_exponents(2).unwrap(), vec![(2, 1)]);
        assert_eq!(prime_exponents(12).unwrap(), vec![(2, 2), (3, 1)]);
        assert_eq!(prime_exponents(97).unwrap(), vec![(97, 1)]);
        assert_eq!(
            prime_exponents(2 * 2 * 3 * 49 * 97).unwrap(),
            vec![(2, 2), (3, 1), (7, 2), (97, 1)]
        );
        assert!(prime_exponents(0).is_err());
    }

    #[test]
    fn sieve_agrees_with_trial_division() {
        let sieve = Sieve::new(10_000).unwrap();
        for j in 1..=10_000u64 {
            assert_eq!(sieve.factorize(j).unwrap(), prime_exponents(j).unwrap());
        }
        assert_eq!(sieve.primes().take(5).collect::<Vec<_>>(), [2, 3, 5, 7, 11]);
        assert_eq!(sieve.primes().count(), 1229); // pi(10^4)
    }

    #[test]
    fn gamma_matches_published_digits() {
        // gamma = 0.57721566490153286060651209008240243104215933593992...
        let ctx = PrecisionContext::default();
        let pool = ConstantPool::new(&ctx).unwrap();
        let reference = Float::with_val(
            200,
            Float::parse("0.57721566490153286060651209008240243104215933593992")
                .unwrap(),
        );
        let g = pool.gamma();
        assert!(g.certified_sign() == Some(Ordering::Greater));
        let mut diff = Float::with_val(200, g.value() - &reference);
        diff.abs_mut();
        assert!(diff < Float::with_val(64, 1e-45), "gamma off by {diff}");
    }

    #[test]
    fn zeta2_against_binomial_series() {
        // Independent route: zeta(2) = 3 * sum_{k>=1} 1 / (k^2 C(2k,k)),
        // summed exactly in rationals.
        use rug::Rational;
        let mut acc = Rational::new();
        for k in 1u64..=60 {
            let c = binomial_exact(2 * k, k).unwrap();
            let den = Integer::from(k * k) * c;
            acc += Rational::from((Integer::from(1), den));
        }
        acc *= 3u32;
        let reference = Float::with_val(300, acc); // series converges ~4^k: 60 terms ~ 1e-36
        let ctx = PrecisionContext::default();
        let pool = ConstantPool::new(&ctx).unwrap();
        let mut diff = Float::with_val(300, pool.zeta2().value() - &reference);
        diff.abs_mut();
        assert!(diff < Float::with_val(64, 1e-30), "zeta2 off by {diff}");
    }

    #[test]
    fn ln_prime_cache_and_ln2_series() {
        // ln 2 = 2 atanh(1/3) = 2 sum_{k>=0} (1/3)^(2k+1) / (2k+1), in exact
        // rationals with a geometric tail below 1e-45.
        use rug::Rational;
        let mut acc = Rational::new();
        let mut pow = Rational::from((1, 3));
        let nine_inv = Rational::from((1, 9));
        for k in 0..50u32 {
            acc += pow.clone() / (2 * k + 1);
            pow *= &nine_inv;
        }
        acc *= 2u32;
        let reference = Float::with_val(300, acc);

        let ctx = PrecisionContext::default();
        let pool = ConstantPool::new(&ctx).unwrap();
        let ln2 = pool.ln_prime(2).unwrap();
        let mut diff = Float::with_val(300, ln2.value() - &reference);
        diff.abs_mut();
        assert!(diff < Float::with_val(64, 1e-40), "ln 2 off by {diff}");

        // Cache: same Arc both times.
        let again = pool.ln_prime(2).unwrap();
        assert!(Arc::ptr_eq(&ln2, &again));
        assert!(pool.ln_prime(1).is_err());
    }

    #[test]
    fn ln_hp_basics() {
        let ctx = PrecisionContext::default();
        let one = Float::with_val(64, 1u32);
        let l1 = ln_hp(&one, &ctx).unwrap();
        assert!(l1.value().is_zero() && l1.abs_error().is_zero());
        assert!(ln_hp(&Float::with_val(64, 0u32), &ctx).is_err());
        assert!(ln_hp(&Float::with_val(64, -3.0), &ctx).is_err());

        // ln(e) = 1 within the advertised bound.
        let e = Float::with_val(256, 1u32).exp();
        let le = ln_hp(&e, &ctx).unwrap();
        let mut diff = Float::with_val(256, le.value() - 1u32);
        diff.abs_mut();
        assert!(diff < Float::with_val(64, 1e-38));
    }

    proptest! {
        #[test]
        fn sieve_vs_trial_division_random(j in 1u64..100_000) {
            let sieve = sieve_100k();
            prop_assert_eq!(sieve.factorize(j).unwrap(), prime_exponents(j).unwrap());
        }

        #[test]
        fn factorization_reconstructs(j in 1u64..1_000_000) {
            let facs = prime_exponents(j).unwrap();
            let mut back = 1u64;
            for (p, e) in facs {
                back *= p.pow(e);
            }
            prop_assert_eq!(back, j);
        }

        #[test]
        fn ln_hp_additivity(a in 2u64..5000, b in 2u64..5000) {
            // ln(ab) = ln a + ln b within the certified bounds.
            let ctx = PrecisionContext::default();
            let fa = Float::with_val(64, a);
            let fb = Float::with_val(64, b);
            let fab = Float::with_val(64, a * b); // exact: a*b < 2^26
            let la = ln_hp(&fa, &ctx).unwrap();
            let lb = ln_hp(&fb, &ctx).unwrap();
            let lab = ln_hp(&fab, &ctx).unwrap();
            let sum = la.add(&lb, 200);
            let diff = sum.sub(&lab, 200);
            // Enclosure of the difference must contain zero.
            let zero = Float::new(64);
            prop_assert!(diff.contains(&zero));
        }
    }

    fn sieve_100k() -> &'static Sieve {
        static SIEVE: OnceLock<Sieve> = OnceLock::new();
        SIEVE.get_or_init(|| Sieve::new(100_000).unwrap())
    }
}
