//! Paired comparisons between backends.

/// Upper tail `P(X >= k)` for `X ~ Binomial(n, 1/2)`.
pub fn binomial_upper_tail(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    // log-space pmf to stay finite for large n
    let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
    let mut ln_choose = 0.0f64;
    let mut total = 0.0;
    for i in 0..=n {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        if i >= k {
            total += (ln_choose + ln_half_n).exp();
        }
    }
    total.min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    /// Pairs where the first sample is strictly larger.
    pub positives: usize,
    pub negatives: usize,
    pub ties: usize,
    /// One-sided p-value for "first > second"; ties are dropped.
    pub p_value: f64,
}

/// One-sided paired sign test of `a > b`.
pub fn sign_test(a: &[f64], b: &[f64]) -> SignTest {
    assert_eq!(a.len(), b.len(), "paired samples differ in length");
    let mut positives = 0;
    let mut negatives = 0;
    let mut ties = 0;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            positives += 1;
        } else if x < y {
            negatives += 1;
        } else {
            ties += 1;
        }
    }
    SignTest {
        positives,
        negatives,
        ties,
        p_value: binomial_upper_tail(positives + negatives, positives),
    }
}
