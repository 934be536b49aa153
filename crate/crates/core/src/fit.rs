//! Growth classification of monotone sequences indexed by radius.
//!
//! These fits are evidence only: a monotone limit cannot be decided from finitely many
//! terms.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "trend", rename_all = "snake_case")]
pub enum Growth {
    /// Increments decay faster than `1/R`; `limit` extrapolates the remaining tail.
    Saturating { limit: f64 },
    /// Increments decay like `1/R`.
    Logarithmic { rate: f64 },
    /// Values grow like `R^exponent`.
    Power { exponent: f64 },
    /// Too few points for a trend.
    Insufficient,
}

impl Growth {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, Growth::Logarithmic { .. } | Growth::Power { .. })
    }
}

impl fmt::Display for Growth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Growth::Saturating { limit } => write!(f, "saturating (limit ≈ {limit:.6e})"),
            Growth::Logarithmic { rate } => write!(f, "logarithmic (≈ {rate:.4} ln R)"),
            Growth::Power { exponent } if (exponent - 1.0).abs() < 0.2 => {
                write!(f, "linear (exponent {exponent:.3})")
            }
            Growth::Power { exponent } if (exponent - 2.0).abs() < 0.2 => {
                write!(f, "quadratic (exponent {exponent:.3})")
            }
            Growth::Power { exponent } => write!(f, "power (exponent {exponent:.3})"),
            Growth::Insufficient => f.write_str("insufficient data"),
        }
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Classifies the growth of a nondecreasing sequence `values[i]` at `radii[i]` from the
/// last half of the data.
pub fn classify_growth(radii: &[f64], values: &[f64]) -> Growth {
    assert_eq!(radii.len(), values.len());
    if radii.len() < 4 {
        return Growth::Insufficient;
    }
    let tail = radii.len() / 2;
    let mut lr = Vec::new();
    let mut ld = Vec::new();
    for i in tail.saturating_sub(1)..radii.len() - 1 {
        let gap = radii[i + 1] - radii[i];
        let d = (values[i + 1] - values[i]) / gap;
        let scale = values[i + 1].abs().max(f64::MIN_POSITIVE);
        if d <= 1e-15 * scale {
            // numerically flat increments
            return Growth::Saturating {
                limit: *values.last().unwrap(),
            };
        }
        lr.push(((radii[i] + radii[i + 1]) / 2.0).ln());
        ld.push(d.ln());
    }
    if lr.len() < 2 {
        return Growth::Insufficient;
    }
    let q = slope(&lr, &ld);
    let last = *values.last().unwrap();
    let r_last = *radii.last().unwrap();
    let d_last = ld.last().unwrap().exp();
    if q < -1.25 {
        // remaining mass of a d ~ R^q tail
        let extra = d_last * r_last / (-q - 1.0);
        Growth::Saturating { limit: last + extra }
    } else if q <= -0.75 {
        Growth::Logarithmic {
            rate: d_last * r_last,
        }
    } else {
        let xs: Vec<f64> = radii[tail..].iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = values[tail..].iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
        Growth::Power {
            exponent: slope(&xs, &ys),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(f: impl Fn(f64) -> f64) -> Growth {
        let r: Vec<f64> = (2..60).map(|r| r as f64).collect();
        let v: Vec<f64> = r.iter().map(|&r| f(r)).collect();
        classify_growth(&r, &v)
    }

    #[test]
    fn recognizes_trends() {
        assert!(matches!(run(|r| r), Growth::Power { exponent } if (exponent - 1.0).abs() < 0.05));
        assert!(matches!(run(|r| r * (r + 1.0) / 2.0), Growth::Power { exponent } if (exponent - 2.0).abs() < 0.1));
        assert!(matches!(run(|r| 2.0 - 2f64.powf(1.0 - r)), Growth::Saturating { limit } if (limit - 2.0).abs() < 1e-9));
        assert!(matches!(run(|r| r.ln()), Growth::Logarithmic { .. }));
        assert!(matches!(run(|r| 1.2 - 0.5 / (r * r)), Growth::Saturating { .. }));
        assert_eq!(classify_growth(&[1.0], &[1.0]), Growth::Insufficient);
    }
}
