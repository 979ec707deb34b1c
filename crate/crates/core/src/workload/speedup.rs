//! Downey's speedup model for moldable jobs.

use super::job::{Job, Moldability};
use crate::error::{Error, Result};
use crate::market::InstanceType;

/// Speedup `S(n)` on `n` cores for a job with average parallelism `A` and
/// coefficient of variance `sigma`.
///
/// Low variance (`sigma <= 1`):
/// - `An / (A + sigma (n-1) / 2)` for `1 <= n <= A`
/// - `An / (sigma (A - 1/2) + n (1 - sigma/2))` for `A <= n <= 2A - 1`
/// - `A` beyond
///
/// High variance (`sigma >= 1`):
/// - `nA (sigma + 1) / (sigma (n + A - 1) + A)` for `1 <= n <= A + A sigma - sigma`
/// - `A` beyond
pub fn downey_speedup(m: Moldability, n: f64) -> Result<f64> {
    let a = m.parallelism;
    let s = m.variance;
    if !(a >= 1.0) || !(s >= 0.0) || !(n >= 1.0) || !a.is_finite() || !s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "speedup needs A >= 1, sigma >= 0, n >= 1 (got A={a}, sigma={s}, n={n})"
        )));
    }
    let speedup = if s <= 1.0 {
        if n <= a {
            a * n / (a + s * (n - 1.0) / 2.0)
        } else if n <= 2.0 * a - 1.0 {
            a * n / (s * (a - 0.5) + n * (1.0 - s / 2.0))
        } else {
            a
        }
    } else if n <= a + a * s - s {
        n * a * (s + 1.0) / (s * (n + a - 1.0) + a)
    } else {
        a
    };
    // rounding can push the curve a hair past its bounds
    Ok(speedup.clamp(1.0, n.min(a)))
}

/// Reference seconds of work completed per wall-clock second on `ty`.
pub fn execution_rate(m: Moldability, ty: &InstanceType) -> f64 {
    let s = downey_speedup(m, f64::from(ty.cores)).unwrap_or(1.0);
    s * ty.per_core_ecu()
}

/// Converts reference seconds of work to whole wall-clock seconds on `ty`.
pub fn scale_reference(reference_s: f64, m: Moldability, ty: &InstanceType) -> u64 {
    scale_by_rate(reference_s, execution_rate(m, ty))
}

/// As [`scale_reference`], with the execution rate already known.
pub fn scale_by_rate(reference_s: f64, rate: f64) -> u64 {
    if reference_s <= 0.0 {
        return 0;
    }
    let wall = reference_s / rate;
    ((wall - 1e-9).ceil() as u64).max(1)
}

pub fn runtime_on(job: &Job, ty: &InstanceType) -> u64 {
    scale_reference(job.base_runtime_s as f64, job.moldability, ty)
}
