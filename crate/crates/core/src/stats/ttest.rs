//! One-sided paired t-test.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::{mean, std_dev, StatsError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    #[serde(with = "crate::serde_f64")]
    pub t: f64,
    /// Upper-tail p-value for the alternative mean(a - b) > 0.
    pub p: f64,
    pub df: usize,
    pub n: usize,
    pub mean_diff: f64,
    /// All differences are equal: `t` is 0 or ±∞ and `p` is 0.5, 0 or 1.
    pub zero_variance: bool,
}

/// Upper tail `P(T > t)` of Student's t with `df` degrees of freedom.
pub fn student_t_upper(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    let tail = 0.5 * beta_reg(0.5 * df, 0.5, df / (df + t * t));
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Tests whether `a` exceeds `b` on average, pairing entries by index.
pub fn paired_t_one_sided(a: &[f64], b: &[f64]) -> Result<TTest, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(StatsError::TooFewPairs { n });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&d).expect("non-empty");
    let df = n - 1;
    if d.iter().all(|&v| v == d[0]) {
        let (t, p) = if m > 0.0 {
            (f64::INFINITY, 0.0)
        } else if m < 0.0 {
            (f64::NEG_INFINITY, 1.0)
        } else {
            (0.0, 0.5)
        };
        return Ok(TTest {
            t,
            p,
            df,
            n,
            mean_diff: m,
            zero_variance: true,
        });
    }
    let sd = std_dev(&d, 1).expect("n >= 2");
    let t = m / (sd / (n as f64).sqrt());
    Ok(TTest {
        t,
        p: student_t_upper(t, df as f64),
        df,
        n,
        mean_diff: m,
        zero_variance: false,
    })
}
