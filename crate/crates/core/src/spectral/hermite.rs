//! Probabilist's Hermite polynomials.
//!
//! `He_n` is orthogonal under the standard normal measure with
//! `E[He_n He_m] = n! δ_nm`. The orthonormal family `he_n = He_n / sqrt(n!)`
//! is evaluated with its own normalized recurrence so that it stays well
//! scaled for large `n`.

/// Largest degree accepted by [`hermite_probabilist`] without opting in
/// through [`hermite_probabilist_unbounded`].
pub const MAX_HERMITE_DEGREE: usize = 30;

/// `He_n(x)` via `He_{n+1} = x He_n - n He_{n-1}`.
///
/// Panics if `n > MAX_HERMITE_DEGREE`; coefficients grow like `n!` and the
/// caller has to opt in explicitly with [`hermite_probabilist_unbounded`].
pub fn hermite_probabilist(n: usize, x: f64) -> f64 {
    assert!(
        n <= MAX_HERMITE_DEGREE,
        "He_{n} exceeds the default degree cap {MAX_HERMITE_DEGREE}; use hermite_probabilist_unbounded"
    );
    hermite_probabilist_unbounded(n, x)
}

/// `He_n(x)` with no degree cap.
pub fn hermite_probabilist_unbounded(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev = 1.0;
            let mut cur = x;
            for k in 1..n {
                let next = x * cur - k as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `he_n(x) = He_n(x) / sqrt(n!)`, orthonormal under N(0, 1).
///
/// Uses `he_{n+1} = (x he_n - sqrt(n) he_{n-1}) / sqrt(n+1)`, which never
/// forms `n!` and so has no degree cap.
pub fn hermite_orthonormal(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev = 1.0;
            let mut cur = x;
            for k in 1..n {
                let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Fills `out[j] = he_j(x)` for `j = 0..out.len()`.
pub fn hermite_orthonormal_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 1..out.len().saturating_sub(1) {
        out[k + 1] = (x * out[k] - (k as f64).sqrt() * out[k - 1]) / ((k + 1) as f64).sqrt();
    }
}

/// `n!` as a float.
pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
