//! Exponent bookkeeping: regime classification, the weight exponent
//! `alpha = 2 - n p / 2`, and the threshold `p_n`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `0 < p <= 2/n`
    LongRange,
    /// `2/n < p < 4/n`
    ShortRangeMassSubcritical,
    /// `p = 4/n`
    MassCritical,
    /// `p > 4/n`
    MassSupercritical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentData {
    pub n: u32,
    pub p: f64,
    pub alpha: f64,
    pub regime: Regime,
    pub p_threshold: f64,
}

impl ExponentData {
    pub fn is_short_range(&self) -> bool {
        self.regime == Regime::ShortRangeMassSubcritical
    }
}

/// Weight exponent `2 - n p / 2`.
pub fn alpha(n: u32, p: f64) -> f64 {
    2.0 - n as f64 * p / 2.0
}

pub fn classify_exponent(n: u32, p: f64) -> ExponentData {
    assert!(n >= 1 && p > 0.0, "need n >= 1 and p > 0");
    let np = n as f64 * p;
    let regime = if np <= 2.0 {
        Regime::LongRange
    } else if np < 4.0 {
        Regime::ShortRangeMassSubcritical
    } else if np == 4.0 {
        Regime::MassCritical
    } else {
        Regime::MassSupercritical
    };
    ExponentData { n, p, alpha: alpha(n, p), regime, p_threshold: p_threshold(n) }
}

/// Classification of `p = num/den` with exact integer comparisons at the boundaries.
pub fn classify_exponent_rational(n: u32, num: u64, den: u64) -> ExponentData {
    assert!(n >= 1 && num > 0 && den > 0, "need n >= 1 and p = num/den > 0");
    let np = n as u128 * num as u128;
    let (two, four) = (2 * den as u128, 4 * den as u128);
    let regime = if np <= two {
        Regime::LongRange
    } else if np < four {
        Regime::ShortRangeMassSubcritical
    } else if np == four {
        Regime::MassCritical
    } else {
        Regime::MassSupercritical
    };
    let p = num as f64 / den as f64;
    ExponentData { n, p, alpha: alpha(n, p), regime, p_threshold: p_threshold(n) }
}

/// Larger root of `n x^2 + (n - 2) x - 4`, i.e. `(2 - n + sqrt(n^2 + 12 n + 4)) / (2n)`.
pub fn p_threshold(n: u32) -> f64 {
    assert!(n >= 1);
    let nf = n as f64;
    let b = nf - 2.0;
    let disc = (nf * nf + 12.0 * nf + 4.0).sqrt();
    if b > 0.0 {
        // rationalised form avoids cancellation in 2 - n + sqrt(..)
        8.0 / (b + disc)
    } else {
        (disc - b) / (2.0 * nf)
    }
}

/// `n x^2 + (n - 2) x - 4`.
pub fn threshold_polynomial(n: u32, x: f64) -> f64 {
    let nf = n as f64;
    nf * x * x + (nf - 2.0) * x - 4.0
}
