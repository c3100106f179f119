//! Small numeric helpers shared by the algorithm modules.

/// Real base-2 logarithm.
pub(crate) fn log2(n: usize) -> f64 {
    (n as f64).log2()
}

/// `max(ceil(log2 n), 1)`.
pub(crate) fn ceil_log2_clamped(n: usize) -> u64 {
    let n = n.max(1) as u64;
    let c = 64 - (n - 1).leading_zeros() as u64;
    c.max(1)
}

/// `max(log2 n, 1)^2`, the `log^2 n` factor of the harvesting loops.
pub(crate) fn log2_sq_clamped(n: usize) -> f64 {
    let l = log2(n).max(1.0);
    l * l
}

/// Ceiling of a positive real loop count, saturating at `u64::MAX` and
/// clamped below at 1.
pub(crate) fn loop_count(x: f64) -> u64 {
    if !x.is_finite() || x >= u64::MAX as f64 {
        return u64::MAX;
    }
    (x.ceil() as u64).max(1)
}

/// Smallest integer `r` with `r^den >= n^num`, i.e. `ceil(n^(num/den))`.
pub(crate) fn ceil_root_pow(n: usize, num: u32, den: u32) -> u64 {
    let target = (n as u128).pow(num);
    let guess = ((n as f64).powf(num as f64 / den as f64)).ceil() as u128;
    let mut r = guess.saturating_sub(2);
    while r.pow(den) < target {
        r += 1;
    }
    while r > 0 && (r - 1).pow(den) >= target {
        r -= 1;
    }
    r as u64
}

/// `ceil(sqrt(n) / 2^k)` computed exactly.
pub(crate) fn ceil_sqrt_over_pow2(n: usize, k: u32) -> u64 {
    // smallest p with (p * 2^k)^2 >= n
    let scale = 1u128 << (2 * k.min(60));
    let mut p = ((n as f64).sqrt() / 2f64.powi(k as i32)).ceil() as u128;
    p = p.saturating_sub(2);
    while p * p * scale < n as u128 {
        p += 1;
    }
    while p > 0 && (p - 1) * (p - 1) * scale >= n as u128 {
        p -= 1;
    }
    p as u64
}
