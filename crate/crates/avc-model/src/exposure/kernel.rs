//! Discretized truncated-normal kernel over nonnegative counts.
//!
//! A cluster with location `mu` and scale `sigma` puts mass
//! `[Phi(n+1/2) - Phi(n-1/2)] / [1 - Phi(-1/2)]` on count `n`; the
//! numerator telescopes over n >= 0, so the pmf sums to one exactly.

use crate::dist::normal::{
    ln_std_normal_cdf_diff, std_normal_cdf, std_normal_cdf_diff,
};
use crate::dist::normal::check_std;
use crate::error::Result;

/// Kernel pmf at count `n`.
pub fn kernel_pmf(n: u32, mean: f64, sd: f64) -> Result<f64> {
    check_std(sd)?;
    Ok(kernel_pmf_unchecked(n, mean, sd))
}

pub(crate) fn kernel_pmf_unchecked(n: u32, mean: f64, sd: f64) -> f64 {
    let nf = f64::from(n);
    let a = (nf - 0.5 - mean) / sd;
    let b = (nf + 0.5 - mean) / sd;
    let denom = 1.0 - std_normal_cdf((-0.5 - mean) / sd);
    if denom <= 0.0 {
        // Tail mass below f64 resolution; fall back to the log form.
        return ln_kernel_pmf(n, mean, sd).exp();
    }
    std_normal_cdf_diff(a, b) / denom
}

/// log of the kernel pmf, finite far beyond the linear-space underflow point.
pub fn ln_kernel_pmf(n: u32, mean: f64, sd: f64) -> f64 {
    let nf = f64::from(n);
    let a = (nf - 0.5 - mean) / sd;
    let b = (nf + 0.5 - mean) / sd;
    let ln_num = ln_std_normal_cdf_diff(a, b);
    let lower = (-0.5 - mean) / sd;
    // ln(1 - Phi(lower)) = ln Phi(-lower) via symmetry.
    let ln_denom = crate::dist::normal::ln_std_normal_cdf(-lower);
    ln_num - ln_denom
}
