//! Probabilistic counterpart of the analytic coefficients: Monte Carlo
//! sampling of `Y = ln(max of n unit exponentials)`, simulation of the
//! n-player coupon-collector minimum, and a cancellation-free dynamic
//! program for that minimum's exact moments.
//!
//! The moments being estimated here are the same quantities the sum
//! machinery computes analytically — `E[Y]` and `V[Y]` are the `mean_y` and
//! `v_n` columns of [`crate::findiff::CoeffRow`], and the minimum completion
//! time `M` over `N` coupon types satisfies `V[M]/N² → v_n` as `N` grows —
//! so every routine cross-fills reference columns where the exact route is
//! affordable.
//!
//! Simulations are deterministic given an [`RngSpec`]: trials are split into
//! fixed 65536-trial chunks, each chunk draws from its own derived ChaCha8
//! stream, and chunk results are folded in index order, so reports are
//! bit-identical regardless of how the chunks were scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::exactcore::PrecisionContext;
use crate::findiff::{coeff_row, SumMethod};
use crate::{Error, Result};

/// Trials per Monte Carlo chunk; each chunk gets its own derived stream.
const CHUNK: u64 = 65536;

/// Largest `n` for which `sample_log_max_exp` fills its formula references.
/// The exact route needs roughly `n` bits of working precision, so past this
/// point the reference would cost far more than the simulation it annotates.
const REFERENCE_N_CEILING: u64 = 100_000;

/// Truncation tolerance used when auto-filling oracle reference columns.
const REFERENCE_TOL: f64 = 1e-10;

/// Rough flop budget above which the DP oracle is skipped as a reference.
const REFERENCE_WORK_BUDGET: f64 = 4e8;

/// Deterministic generator selector for the Monte Carlo drivers.
///
/// `algorithm_id` names the generator family — `"chacha8"` is the only one
/// registered. `stream` picks the base ChaCha stream; chunk `i` of a run
/// draws from stream `stream + i`, which is what keeps parallel runs
/// reproducible. The same triple always reproduces the identical report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngSpec {
    pub algorithm_id: String,
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    /// Spec for the ChaCha8 generator (the only registered family).
    pub fn chacha8(seed: u64, stream: u64) -> Self {
        Self {
            algorithm_id: "chacha8".into(),
            seed,
            stream,
        }
    }

    /// Rejects specs naming an unregistered generator.
    pub fn validate(&self) -> Result<()> {
        if self.algorithm_id != "chacha8" {
            return Err(Error::Config(format!(
                "unknown rng algorithm '{}' (registered: \"chacha8\")",
                self.algorithm_id
            )));
        }
        Ok(())
    }

    fn chunk_rng(&self, chunk_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream.wrapping_add(chunk_index));
        rng
    }
}

/// Summary statistics of one Monte Carlo run.
#[derive(Clone, Debug)]
pub struct SimReport {
    pub trials: u64,
    pub mean: f64,
    /// Unbiased sample variance (divides by `trials − 1`).
    pub variance: f64,
    pub mean_std_err: f64,
    /// Standard error of the variance estimate, via the fourth-central-moment
    /// plug-in for `Var(s²)`.
    pub variance_std_err: f64,
    pub rng: RngSpec,
    /// Exact value the mean should approach, when an oracle was affordable.
    pub reference_mean: Option<f64>,
    /// Exact value the variance should approach, likewise.
    pub reference_variance: Option<f64>,
}

/// Raw power sums of the samples, enough for mean, variance, and the
/// fourth-moment error bar on the variance.
#[derive(Clone, Copy, Debug, Default)]
struct PowerSums {
    count: u64,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl PowerSums {
    fn push(&mut self, y: f64) {
        let y2 = y * y;
        self.count += 1;
        self.s1 += y;
        self.s2 += y2;
        self.s3 += y2 * y;
        self.s4 += y2 * y2;
    }

    fn merge(mut self, rhs: Self) -> Self {
        self.count += rhs.count;
        self.s1 += rhs.s1;
        self.s2 += rhs.s2;
        self.s3 += rhs.s3;
        self.s4 += rhs.s4;
        self
    }
}

/// Runs `trials` samples chunk-parallel and folds the per-chunk sums in
/// chunk-index order, making the result independent of thread scheduling.
fn run_chunks<F>(trials: u64, spec: &RngSpec, sample: F) -> Result<PowerSums>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    spec.validate()?;
    if trials < 2 {
        return Err(Error::Domain(
            "a variance estimate needs at least two trials".into(),
        ));
    }
    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<PowerSums> = (0..chunks)
        .into_par_iter()
        .map(|index| {
            let mut rng = spec.chunk_rng(index);
            let lo = index * CHUNK;
            let hi = ((index + 1) * CHUNK).min(trials);
            let mut acc = PowerSums::default();
            for _ in lo..hi {
                acc.push(sample(&mut rng));
            }
            acc
        })
        .collect();
    Ok(partials.into_iter().fold(PowerSums::default(), PowerSums::merge))
}

fn report_from(spec: &RngSpec, sums: PowerSums) -> SimReport {
    let n = sums.count as f64;
    let mean = sums.s1 / n;
    let m2 = (sums.s2 / n - mean * mean).max(0.0);
    let variance = m2 * n / (n - 1.0);
    let m4 = sums.s4 / n - 4.0 * mean * sums.s3 / n + 6.0 * mean * mean * sums.s2 / n
        - 3.0 * mean * mean * mean * mean;
    let var_of_var = (m4 - variance * variance * (n - 3.0) / (n - 1.0)).max(0.0) / n;
    SimReport {
        trials: sums.count,
        mean,
        variance,
        mean_std_err: (variance / n).sqrt(),
        variance_std_err: var_of_var.sqrt(),
        rng: spec.clone(),
        reference_mean: None,
        reference_variance: None,
    }
}

/// Monte Carlo moments of `Y = ln(max of n unit exponentials)`.
///
/// Sampling is inverse-CDF with a single uniform per trial: the maximum has
/// distribution function `(1 − e^{−w})^n`, so `W = −ln(1 − U^{1/n})` and the
/// sample is `Y = ln W`. Draws where `U` lands on 0 or 1 — or where
/// `U^{1/n}` rounds onto 1 and `W` overflows — are rejected and redrawn, a
/// measure-zero guard. Reference columns hold the exact `E[Y]` and `V[Y]`
/// from the coefficient route when `n` is small enough for that to be cheap.
pub fn sample_log_max_exp(n: u64, trials: u64, rng: &RngSpec) -> Result<SimReport> {
    if n == 0 {
        return Err(Error::Domain(
            "the maximum of zero exponentials is undefined".into(),
        ));
    }
    let root = 1.0 / n as f64;
    let sums = run_chunks(trials, rng, |rng| loop {
        let u: f64 = rng.random();
        if !(u > 0.0 && u < 1.0) {
            continue;
        }
        let w = -f64::ln_1p(-u.powf(root));
        if w > 0.0 && w.is_finite() {
            return w.ln();
        }
    })?;
    let mut report = report_from(rng, sums);
    if n <= REFERENCE_N_CEILING {
        if let Ok(row) = coeff_row(n, &PrecisionContext::default(), SumMethod::Auto) {
            report.reference_mean = Some(row.mean_y.to_f64());
            report.reference_variance = Some(row.v_n.to_f64());
        }
    }
    Ok(report)
}

/// Simulates the minimum completion time of `players` independent coupon
/// collectors over `big_n` equally likely types.
///
/// Each collector tracks only its count of distinct types seen: moving from
/// `k` to `k + 1` types takes a geometric number of draws with success
/// probability `(N − k)/N`, which leaves the completion-time distribution
/// untouched while skipping the coupon labels. Reference columns are filled
/// from the exact DP oracle whenever its horizon estimate is affordable.
pub fn simulate_ccp_min(
    big_n: u64,
    players: u64,
    trials: u64,
    rng: &RngSpec,
) -> Result<SimReport> {
    if big_n == 0 {
        return Err(Error::Domain("at least one coupon type is required".into()));
    }
    if players == 0 {
        return Err(Error::Domain("at least one player is required".into()));
    }
    let sums = run_chunks(trials, rng, |rng| {
        let mut best = u64::MAX;
        for _ in 0..players {
            let mut t = 0u64;
            for k in 0..big_n {
                let fresh = (big_n - k) as f64 / big_n as f64;
                loop {
                    t += 1;
                    if rng.random::<f64>() < fresh {
                        break;
                    }
                }
            }
            best = best.min(t);
        }
        best as f64
    })?;
    let mut report = report_from(rng, sums);
    if let Some(oracle) = affordable_oracle(big_n, players) {
        report.reference_mean = Some(oracle.mean);
        report.reference_variance = Some(oracle.variance);
    }
    Ok(report)
}

fn affordable_oracle(big_n: u64, players: u64) -> Option<ExactMomentReport> {
    let work = if big_n == 1 {
        0.0
    } else {
        let n = big_n as f64;
        let m = players as f64;
        let ln_r = (1.0 - 1.0 / n).ln();
        n * ((m * n.ln() - REFERENCE_TOL.ln() + 60.0) / (m * -ln_r))
    };
    if work > REFERENCE_WORK_BUDGET {
        return None;
    }
    ccp_exact_min_moments(big_n, players, REFERENCE_TOL).ok()
}

/// Exact moments of the minimum completion time, truncated with a proven
/// geometric tail bound.
#[derive(Clone, Copy, Debug)]
pub struct ExactMomentReport {
    /// Number of coupon types (the `N` of the formulas).
    pub big_n: u64,
    /// Number of independent collectors whose minimum is taken.
    pub players: u64,
    pub mean: f64,
    pub second_moment: f64,
    /// `second_moment − mean²`, clamped at zero against rounding in the
    /// degenerate near-deterministic cases.
    pub variance: f64,
    /// Upper bound on the discarded tail of the second-moment series; the
    /// mean's discarded tail is smaller still.
    pub truncation_error: f64,
    /// Last draw count accumulated before the tail bound cleared `tol`.
    pub t_max: u64,
}

/// Distinct-coupons chain for a single collector: `q[k]` is the probability
/// of having seen exactly `k` of the `big_n` types after the draws so far.
/// Every quantity is a sum of nonnegative products, so there is no
/// cancellation anywhere and f64 keeps full relative accuracy even when the
/// survival probability has decayed below 10⁻³⁰⁰.
struct DistinctChain {
    big_n: usize,
    q: Vec<f64>,
}

impl DistinctChain {
    fn new(big_n: u64) -> Self {
        let big_n = big_n as usize;
        let mut q = vec![0.0; big_n + 1];
        q[0] = 1.0;
        Self { big_n, q }
    }

    /// One more draw: stay at `k` types with probability `k/N`, arrive from
    /// `k − 1` with probability `(N − k + 1)/N`. The downward sweep lets the
    /// update run in place.
    fn step(&mut self) {
        let n = self.big_n as f64;
        for k in (1..=self.big_n).rev() {
            self.q[k] =
                self.q[k] * (k as f64 / n) + self.q[k - 1] * ((n - (k as f64 - 1.0)) / n);
        }
        self.q[0] = 0.0;
    }

    /// P(this collector is still missing some type). Summing the live states
    /// keeps relative accuracy; `1 − q[N]` would cancel instead.
    fn survival(&self) -> f64 {
        self.q[..self.big_n].iter().sum()
    }
}

/// Exact mean and variance of the minimum completion time `M` of `players`
/// independent collectors over `big_n` coupon types.
///
/// The single-collector survival `S(t) = P(T > t)` comes from the
/// distinct-coupons chain; independence then gives
/// `E[M] = Σ_{t≥0} S(t)^players` and `E[M²] = Σ_{t≥0} (2t+1)·S(t)^players`.
/// Summation stops once the geometric bound `S(t) ≤ N·(1−1/N)^t` certifies
/// that the discarded second-moment mass is below `tol`; the horizon cap is
/// four times the analytic crossing point and is unreachable for any
/// tolerance the f64 series can express.
pub fn ccp_exact_min_moments(big_n: u64, players: u64, tol: f64) -> Result<ExactMomentReport> {
    if big_n == 0 {
        return Err(Error::Domain("at least one coupon type is required".into()));
    }
    if players == 0 {
        return Err(Error::Domain("at least one player is required".into()));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!(
            "truncation tolerance must lie in (0, 1), got {tol}"
        )));
    }
    // t = 0 contributes S(0)^players = 1 to both series.
    let mut mean = 1.0f64;
    let mut second = 1.0f64;
    if big_n == 1 {
        // The only type arrives on the first draw: M = 1 exactly.
        return Ok(ExactMomentReport {
            big_n,
            players,
            mean,
            second_moment: second,
            variance: 0.0,
            truncation_error: 0.0,
            t_max: 0,
        });
    }
    let n = big_n as f64;
    let m = players as f64;
    let ln_r = (1.0 - 1.0 / n).ln();
    let y = (m * ln_r).exp();
    let horizon = (((m * n.ln() - tol.ln() + 60.0) / (m * -ln_r)) * 4.0 + 1024.0) as u64;
    let mut chain = DistinctChain::new(big_n);
    let mut t = 0u64;
    loop {
        if t >= horizon {
            return Err(Error::Truncation(format!(
                "tail bound failed to reach {tol:.3e} within {horizon} draws \
                 for N = {big_n}, players = {players}"
            )));
        }
        t += 1;
        chain.step();
        let sm = chain.survival().powf(m);
        mean += sm;
        second += (2 * t + 1) as f64 * sm;
        // Tail past t, from S(u) ≤ N·r^u with r = 1 − 1/N, y = r^players,
        // x = N^players · y^(t+1):
        //   Σ_{u>t} S(u)^players        ≤ x/(1−y)                  =: s0
        //   Σ_{u>t} u·S(u)^players      ≤ x·((t+1) − t·y)/(1−y)²   =: s1
        // so the discarded second-moment mass is at most 2·s1 + s0.
        let x = (m * n.ln() + m * (t as f64 + 1.0) * ln_r).exp();
        if x.is_finite() {
            let gap = 1.0 - y;
            let s0 = x / gap;
            let s1 = x * ((t as f64 + 1.0) - t as f64 * y) / (gap * gap);
            let bound = 2.0 * s1 + s0;
            if bound <= tol {
                return Ok(ExactMomentReport {
                    big_n,
                    players,
                    mean,
                    second_moment: second,
                    variance: (second - mean * mean).max(0.0),
                    truncation_error: bound,
                    t_max: t,
                });
            }
        }
    }
}

/// One row of the large-`N` comparison between the scaled minimum variance
/// and its claimed limit.
#[derive(Clone, Copy, Debug)]
pub struct GapRow {
    pub big_n: u64,
    /// Exact `V[M]/N²` from the DP oracle.
    pub scaled_variance: f64,
    /// The limit value for this player count.
    pub v_n: f64,
    /// `scaled_variance / v_n`; drifts toward 1 as `N` grows.
    pub ratio: f64,
}

/// Tabulates `V[M]/N²` against its limit `v_n` over a grid of type counts.
///
/// Every grid entry needs `N ≥ 2`: with a single type the minimum is
/// deterministic and the ratio degenerates.
pub fn asymptotic_gap(
    n_grid: &[u64],
    players: u64,
    tol: f64,
    ctx: &PrecisionContext,
) -> Result<Vec<GapRow>> {
    if n_grid.is_empty() {
        return Err(Error::Domain("variance-law scan over an empty grid".into()));
    }
    if let Some(&bad) = n_grid.iter().find(|&&big_n| big_n < 2) {
        return Err(Error::Domain(format!(
            "variance-law comparison needs N >= 2, got {bad}"
        )));
    }
    if players == 0 {
        return Err(Error::Domain("at least one player is required".into()));
    }
    let v_n = coeff_row(players, ctx, SumMethod::Auto)?.v_n.to_f64();
    n_grid
        .iter()
        .map(|&big_n| {
            let oracle = ccp_exact_min_moments(big_n, players, tol)?;
            let scaled_variance = oracle.variance / (big_n as f64 * big_n as f64);
            Ok(GapRow {
                big_n,
                scaled_variance,
                v_n,
                ratio: scaled_variance / v_n,
            })
        })
        .collect()
}
