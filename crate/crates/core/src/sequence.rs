//! Lazily evaluated positive sequences indexed by radius, and rigorous power/geometric
//! envelopes used to certify convergence or divergence of the series built from them.

use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How an explicit array continues past its last entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// Indices past the array are an error.
    None,
    RepeatLast,
    /// `v_k = v_{n-1} · ratio^{k-n+1}` for `k ≥ n`.
    Geometric(f64),
}

/// A sequence `k ↦ s_k`, `k = 0, 1, 2, ...`.
#[derive(Clone, Debug, PartialEq)]
pub enum Sequence {
    Const(f64),
    /// `coeff · (k + offset)^exponent + add`
    Power {
        coeff: f64,
        offset: f64,
        exponent: f64,
        add: f64,
    },
    /// `coeff · ratio^k`
    Geometric { coeff: f64, ratio: f64 },
    Explicit { values: Vec<f64>, extend: Extension },
    /// `1` at `k = 0`, `e^{-k} + 2` afterwards.
    HalfLineTildeMeasure,
    /// `2 e^k / (e^k + 1)`
    HalfLineMeasure,
    /// `[2 e^{k+1} / (e^{k+1} + 1)] · (k+1)^3 / (e^{-(k+1)} + 2)`
    HalfLineWeight,
}

impl Sequence {
    /// `(k + 1)^exponent`
    pub fn shifted_power(exponent: f64) -> Self {
        Sequence::Power {
            coeff: 1.0,
            offset: 1.0,
            exponent,
            add: 0.0,
        }
    }

    pub fn geometric(ratio: f64) -> Self {
        Sequence::Geometric { coeff: 1.0, ratio }
    }

    pub fn explicit(values: Vec<f64>, extend: Extension) -> Self {
        Sequence::Explicit { values, extend }
    }

    pub fn value(&self, k: usize) -> Result<f64> {
        let kf = k as f64;
        let v = match self {
            Sequence::Const(c) => *c,
            Sequence::Power {
                coeff,
                offset,
                exponent,
                add,
            } => coeff * (kf + offset).powf(*exponent) + add,
            Sequence::Geometric { coeff, ratio } => coeff * ratio.powf(kf),
            Sequence::Explicit { values, extend } => match values.get(k) {
                Some(&v) => v,
                None => match (extend, values.last()) {
                    (Extension::RepeatLast, Some(&last)) => last,
                    (Extension::Geometric(q), Some(&last)) => {
                        last * q.powf((k + 1 - values.len()) as f64)
                    }
                    _ => {
                        return Err(Error::Sequence {
                            name: self.to_string(),
                            index: k,
                            reason: format!("explicit array has {} entries", values.len()),
                        })
                    }
                },
            },
            Sequence::HalfLineTildeMeasure => {
                if k == 0 {
                    1.0
                } else {
                    (-kf).exp() + 2.0
                }
            }
            Sequence::HalfLineMeasure => 2.0 / (1.0 + (-kf).exp()),
            Sequence::HalfLineWeight => {
                let k1 = kf + 1.0;
                (2.0 / (1.0 + (-k1).exp())) * k1.powi(3) / ((-k1).exp() + 2.0)
            }
        };
        if v.is_nan() {
            return Err(Error::Sequence {
                name: self.to_string(),
                index: k,
                reason: "value is NaN".into(),
            });
        }
        Ok(v)
    }

    /// `ln s_k`, accurate where `s_k` itself over- or underflows.
    pub fn ln_value(&self, k: usize) -> Result<f64> {
        let kf = k as f64;
        match self {
            Sequence::Power {
                coeff,
                offset,
                exponent,
                add,
            } if *add == 0.0 && *coeff > 0.0 && kf + offset > 0.0 => {
                Ok(coeff.ln() + exponent * (kf + offset).ln())
            }
            Sequence::Geometric { coeff, ratio } if *coeff > 0.0 && *ratio > 0.0 => {
                Ok(coeff.ln() + kf * ratio.ln())
            }
            Sequence::Explicit {
                values,
                extend: Extension::Geometric(q),
            } if k >= values.len() && *q > 0.0 => {
                let last = *values.last().unwrap_or(&0.0);
                Ok(last.ln() + (k + 1 - values.len()) as f64 * q.ln())
            }
            _ => Ok(self.value(k)?.ln()),
        }
    }

    /// A two-sided envelope valid for all indices from `from` on, if one is known in
    /// closed form.
    pub fn envelope(&self) -> Option<Envelope> {
        match self {
            Sequence::Const(c) if *c > 0.0 => Some(Envelope::exact(*c, 0.0, 1.0)),
            Sequence::Power {
                coeff,
                offset,
                exponent,
                add,
            } if *coeff > 0.0 => {
                let p = *exponent;
                let from = first_index_above(-offset);
                let k0 = from as f64;
                let scale = |k: f64| coeff * ((k + offset) / (k + 1.0)).powf(p);
                let (a0, a_inf) = (scale(k0), *coeff);
                let (b0, b_inf) = if *add == 0.0 {
                    (0.0, 0.0)
                } else if p > 0.0 {
                    (add / (k0 + 1.0).powf(p), 0.0)
                } else if p == 0.0 {
                    (*add, *add)
                } else {
                    return None;
                };
                let lo = a0.min(a_inf) + b0.min(b_inf);
                let hi = a0.max(a_inf) + b0.max(b_inf);
                Some(Envelope {
                    lo: (lo > 0.0).then_some(lo),
                    hi: Some(hi),
                    exponent: p,
                    ratio: 1.0,
                    from,
                })
            }
            Sequence::Geometric { coeff, ratio } if *coeff > 0.0 && *ratio > 0.0 => {
                Some(Envelope::exact(*coeff, 0.0, *ratio))
            }
            Sequence::Explicit { values, extend } => {
                let last = *values.last()?;
                match extend {
                    Extension::None => None,
                    Extension::RepeatLast => {
                        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                        let hi = values.iter().copied().fold(0.0, f64::max);
                        (lo > 0.0).then_some(Envelope {
                            lo: Some(lo),
                            hi: Some(hi),
                            exponent: 0.0,
                            ratio: 1.0,
                            from: 0,
                        })
                    }
                    Extension::Geometric(q) if *q > 0.0 && last > 0.0 => {
                        let n = values.len() - 1;
                        let c = last / q.powi(n as i32);
                        Some(Envelope {
                            from: n,
                            ..Envelope::exact(c, 0.0, *q)
                        })
                    }
                    Extension::Geometric(_) => None,
                }
            }
            Sequence::HalfLineTildeMeasure => Some(Envelope {
                lo: Some(2.0),
                hi: Some(2.0 + (-1.0f64).exp()),
                exponent: 0.0,
                ratio: 1.0,
                from: 1,
            }),
            Sequence::HalfLineMeasure => Some(Envelope {
                lo: Some(1.0),
                hi: Some(2.0),
                exponent: 0.0,
                ratio: 1.0,
                from: 0,
            }),
            Sequence::HalfLineWeight => Some(Envelope {
                lo: Some(2.0 * E / (E + 1.0) / ((-1.0f64).exp() + 2.0)),
                hi: Some(1.0),
                exponent: 3.0,
                ratio: 1.0,
                from: 0,
            }),
            _ => None,
        }
    }
}

fn first_index_above(x: f64) -> usize {
    // smallest k ≥ 0 with k > x
    if x < 0.0 {
        0
    } else {
        (x.floor() as usize) + 1
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sequence::Const(c) => write!(f, "const:{c}"),
            Sequence::Power {
                coeff,
                offset,
                exponent,
                add,
            } => write!(f, "{coeff}*(k+{offset})^{exponent}+{add}"),
            Sequence::Geometric { coeff, ratio } => write!(f, "{coeff}*{ratio}^k"),
            Sequence::Explicit { values, .. } => write!(f, "explicit[{}]", values.len()),
            Sequence::HalfLineTildeMeasure => f.write_str("section4_Gtilde_m"),
            Sequence::HalfLineMeasure => f.write_str("section4_G_m"),
            Sequence::HalfLineWeight => f.write_str("section4_G_b"),
        }
    }
}

/// Wire form of a [`Sequence`]: a preset string or a tagged object.
///
/// Presets: `one`, `const:C`, `powP` / `pow:P` (`(k+1)^P`), `pow:P:O` (`(k+O)^P`),
/// `geom:Q` (`Q^k`), `section4_Gtilde_m`, `section4_G_m`, `section4_G_b`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SequenceRepr {
    Preset(String),
    Explicit {
        values: Vec<f64>,
        #[serde(default = "default_extension")]
        extend: Extension,
    },
    Power {
        power: PowerParams,
    },
    Geometric {
        geometric: GeometricParams,
    },
}

fn default_extension() -> Extension {
    Extension::None
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerParams {
    #[serde(default = "one")]
    pub coeff: f64,
    #[serde(default = "one")]
    pub offset: f64,
    pub exponent: f64,
    #[serde(default)]
    pub add: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeometricParams {
    #[serde(default = "one")]
    pub coeff: f64,
    pub ratio: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<SequenceRepr> for Sequence {
    type Error = Error;

    fn try_from(repr: SequenceRepr) -> Result<Self> {
        Ok(match repr {
            SequenceRepr::Preset(s) => parse_preset(&s)?,
            SequenceRepr::Explicit { values, extend } => {
                if values.is_empty() {
                    return Err(Error::InvalidSpec("explicit sequence is empty".into()));
                }
                Sequence::Explicit { values, extend }
            }
            SequenceRepr::Power { power: p } => Sequence::Power {
                coeff: p.coeff,
                offset: p.offset,
                exponent: p.exponent,
                add: p.add,
            },
            SequenceRepr::Geometric { geometric: g } => Sequence::Geometric {
                coeff: g.coeff,
                ratio: g.ratio,
            },
        })
    }
}

impl From<Sequence> for SequenceRepr {
    fn from(s: Sequence) -> Self {
        match s {
            Sequence::Const(c) => SequenceRepr::Preset(format!("const:{c}")),
            Sequence::Power {
                coeff,
                offset,
                exponent,
                add,
            } => SequenceRepr::Power {
                power: PowerParams {
                    coeff,
                    offset,
                    exponent,
                    add,
                },
            },
            Sequence::Geometric { coeff, ratio } => SequenceRepr::Geometric {
                geometric: GeometricParams { coeff, ratio },
            },
            Sequence::Explicit { values, extend } => SequenceRepr::Explicit { values, extend },
            other => SequenceRepr::Preset(other.to_string()),
        }
    }
}

impl Serialize for Sequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SequenceRepr::from(self.clone()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Sequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SequenceRepr::deserialize(d)?;
        Sequence::try_from(repr).map_err(serde::de::Error::custom)
    }
}

fn parse_preset(s: &str) -> Result<Sequence> {
    let bad = || Error::InvalidSpec(format!("unknown sequence preset `{s}`"));
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    match s {
        "one" => return Ok(Sequence::Const(1.0)),
        "section4_Gtilde_m" => return Ok(Sequence::HalfLineTildeMeasure),
        "section4_G_m" => return Ok(Sequence::HalfLineMeasure),
        "section4_G_b" => return Ok(Sequence::HalfLineWeight),
        _ => {}
    }
    if let Some(c) = s.strip_prefix("const:") {
        return Ok(Sequence::Const(num(c)?));
    }
    if let Some(q) = s.strip_prefix("geom:") {
        return Ok(Sequence::geometric(num(q)?));
    }
    if let Some(rest) = s.strip_prefix("pow") {
        let rest = rest.strip_prefix(':').unwrap_or(rest);
        let (p, o) = match rest.split_once(':') {
            Some((p, o)) => (num(p)?, num(o)?),
            None => (num(rest)?, 1.0),
        };
        return Ok(Sequence::Power {
            coeff: 1.0,
            offset: o,
            exponent: p,
            add: 0.0,
        });
    }
    Err(bad())
}

/// Rigorous bounds `lo·(k+1)^exponent·ratio^k ≤ s_k ≤ hi·(k+1)^exponent·ratio^k`
/// for every `k ≥ from`. A missing side means no bound is known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub exponent: f64,
    pub ratio: f64,
    pub from: usize,
}

impl Envelope {
    pub fn exact(c: f64, exponent: f64, ratio: f64) -> Self {
        Envelope {
            lo: Some(c),
            hi: Some(c),
            exponent,
            ratio,
            from: 0,
        }
    }

    /// `ln` of the shape `(k+1)^exponent ratio^k`.
    pub fn ln_shape(&self, k: usize) -> f64 {
        self.exponent * ((k + 1) as f64).ln() + k as f64 * self.ratio.ln()
    }

    pub fn mul(self, other: Envelope) -> Envelope {
        Envelope {
            lo: self.lo.zip(other.lo).map(|(a, b)| a * b),
            hi: self.hi.zip(other.hi).map(|(a, b)| a * b),
            exponent: self.exponent + other.exponent,
            ratio: self.ratio * other.ratio,
            from: self.from.max(other.from),
        }
    }

    pub fn recip(self) -> Envelope {
        Envelope {
            lo: self.hi.map(f64::recip),
            hi: self.lo.map(f64::recip),
            exponent: -self.exponent,
            ratio: 1.0 / self.ratio,
            from: self.from,
        }
    }

    pub fn scale(self, c: f64) -> Envelope {
        Envelope {
            lo: self.lo.map(|l| l * c),
            hi: self.hi.map(|h| h * c),
            ..self
        }
    }

    /// Envelope of `k ↦ s_{k+1}`, valid from `max(at, from)` on; constants tighten as
    /// `at` grows.
    pub fn shift_one(self, at: usize) -> Envelope {
        let a = at.max(self.from) as f64;
        let r = ((a + 2.0) / (a + 1.0)).powf(self.exponent);
        let (fmin, fmax) = if r >= 1.0 { (1.0, r) } else { (r, 1.0) };
        Envelope {
            lo: self.lo.map(|l| l * self.ratio * fmin),
            hi: self.hi.map(|h| h * self.ratio * fmax),
            from: at.max(self.from),
            ..self
        }
    }

    /// Envelope of the cumulative sums `M_k = prefix + Σ_{j=from}^{k} s_j` for
    /// `k ≥ max(at, from)`, where `prefix = Σ_{j<from} s_j ≥ 0`.
    pub fn partial_sums(self, prefix: f64, at: usize) -> Option<Envelope> {
        let (p, q, f) = (self.exponent, self.ratio, self.from as f64);
        let start = at.max(self.from);
        let a = start as f64;
        if q == 1.0 {
            if p > -1.0 {
                let e = p + 1.0;
                let (lo_factor, hi_factor) = if p >= 0.0 {
                    (1.0 - (f / (a + 1.0)).powf(e), ((a + 2.0) / (a + 1.0)).powf(e))
                } else {
                    (1.0 - ((f + 1.0) / (a + 1.0)).powf(e), 1.0)
                };
                Some(Envelope {
                    lo: self
                        .lo
                        .filter(|_| lo_factor > 0.0)
                        .map(|l| l * lo_factor / e),
                    hi: self
                        .hi
                        .map(|h| h * hi_factor / e + prefix / (a + 1.0).powf(e)),
                    exponent: e,
                    ratio: 1.0,
                    from: start,
                })
            } else {
                let first = (f + 1.0).powf(p);
                let lo = self.lo.map(|l| prefix + l * first);
                let hi = if p < -1.0 {
                    self.hi
                        .map(|h| prefix + h * (first + (f + 1.0).powf(p + 1.0) / (-p - 1.0)))
                } else {
                    None
                };
                Some(Envelope {
                    lo,
                    hi,
                    exponent: 0.0,
                    ratio: 1.0,
                    from: start,
                })
            }
        } else if q > 1.0 {
            if p < 0.0 {
                return None;
            }
            let base = (a + 1.0).powf(p) * q.powf(a);
            Some(Envelope {
                lo: self.lo,
                hi: self.hi.map(|h| h * q / (q - 1.0) + prefix / base),
                exponent: p,
                ratio: q,
                from: start,
            })
        } else {
            let first = (f + 1.0).powf(p) * q.powf(f);
            let hi = if p <= 0.0 {
                self.hi.map(|h| prefix + h * first / (1.0 - q))
            } else {
                None
            };
            Some(Envelope {
                lo: self.lo.map(|l| prefix + l * first),
                hi,
                exponent: 0.0,
                ratio: 1.0,
                from: start,
            })
        }
    }

    /// Envelope of the remainders `T_k = Σ_{j≥k} s_j` for `k ≥ max(at, from)`, when the
    /// series converges.
    pub fn tails(self, at: usize) -> Option<Envelope> {
        let (p, q) = (self.exponent, self.ratio);
        let start = at.max(self.from);
        if q == 1.0 && p < -1.0 {
            let start = start.max(1);
            let a = -p - 1.0;
            let s = start as f64;
            Some(Envelope {
                lo: self.lo.map(|l| l / a),
                hi: self.hi.map(|h| h * ((s + 1.0) / s).powf(a) / a),
                exponent: p + 1.0,
                ratio: 1.0,
                from: start,
            })
        } else if q < 1.0 {
            // ((k+2)/(k+1))^p q ≤ ρ < 1 from `start` on
            let mut start = start;
            let rho = if p > 0.0 {
                let rho = (1.0 + q) / 2.0;
                while ((start as f64 + 2.0) / (start as f64 + 1.0)).powf(p) * q > rho {
                    start += 1;
                }
                ((start as f64 + 2.0) / (start as f64 + 1.0)).powf(p) * q
            } else {
                q
            };
            Some(Envelope {
                lo: self.lo,
                hi: self.hi.map(|h| h / (1.0 - rho)),
                exponent: p,
                ratio: q,
                from: start,
            })
        } else {
            None
        }
    }

    /// Whether the upper side proves `Σ s_k < ∞`.
    pub fn proves_convergence(&self) -> bool {
        self.hi.is_some() && (self.ratio < 1.0 || (self.ratio == 1.0 && self.exponent < -1.0))
    }

    /// Whether the lower side proves `Σ s_k = ∞`.
    pub fn proves_divergence(&self) -> bool {
        self.lo.is_some_and(|l| l > 0.0)
            && (self.ratio > 1.0 || (self.ratio == 1.0 && self.exponent >= -1.0))
    }

    /// Bounds on `Σ_{k≥n} s_k` (requires `n ≥ from` and a convergent envelope).
    pub fn remainder_bounds(&self, n: usize) -> Option<(f64, f64)> {
        if n < self.from {
            return None;
        }
        let t = self.tails(n)?;
        if n < t.from {
            return None;
        }
        let shape = t.ln_shape(n).exp();
        Some((t.lo.map_or(0.0, |l| l * shape), t.hi? * shape))
    }

    /// Checks the envelope against tabulated `ln s_k` on `from..ln_values.len()`.
    /// Returns the first violating index.
    pub fn first_violation(&self, ln_values: &[f64]) -> Option<usize> {
        const SLACK: f64 = 1e-12;
        (self.from..ln_values.len()).find(|&k| {
            let shape = self.ln_shape(k);
            let v = ln_values[k];
            let below = self.lo.is_some_and(|l| l.ln() + shape > v + SLACK * (1.0 + v.abs()));
            let above = self.hi.is_some_and(|h| h.ln() + shape < v - SLACK * (1.0 + v.abs()));
            below || above
        })
    }
}
