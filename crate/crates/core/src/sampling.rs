//! Deterministic low-discrepancy samples.

fn radical_inverse(mut k: usize, base: usize) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while k > 0 {
        x += (k % base) as f64 * f;
        k /= base;
        f *= inv;
    }
    inv = x;
    inv
}

/// Point `k` of the 3D Halton sequence (bases 2, 3, 5). Index 0 is the
/// origin; callers usually start at 1.
pub fn halton(k: usize) -> [f64; 3] {
    [radical_inverse(k, 2), radical_inverse(k, 3), radical_inverse(k, 5)]
}

/// Points `1..=n` of the Halton sequence.
pub fn halton_points(n: usize) -> Vec<[f64; 3]> {
    (1..=n).map(halton).collect()
}
