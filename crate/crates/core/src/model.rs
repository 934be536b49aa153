//! Closed-form analysis of radial models.
//!
//! For a model with sphere measures `m(S_r)` and boundary weights `∂B(r)`:
//!
//! * the Green function at the root is `g(r) = Σ_{k≥r} 1/∂B(k)`; the model is parabolic
//!   iff it diverges,
//! * it is stochastically complete iff `Σ m(B_k)/∂B(k) = ∞`,
//! * it is L¹-Liouville iff `Σ g(r) m(S_r) = ∞`; reordering the double sum shows this is
//!   the same series as the previous one.
//!
//! Verdicts are decisive only when backed by an envelope: a closed form derived from the
//! sequences, or a user bound validated against every scanned term.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dirichlet::{BallSystem, ExitTable};
use crate::error::{Error, Result};
use crate::fit::{classify_growth, Growth};
use crate::generators::{GraphSpec, RadialModel};
use crate::graph::Label;
use crate::sequence::Envelope;
use crate::solver::SolverMode;

pub const DEFAULT_N_MAX: usize = 100_000;

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Compensated::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesName {
    /// `Σ 1/∂B(k)`
    Parabolic,
    /// `Σ m(B_k)/∂B(k)`
    StochasticCompleteness,
    /// `Σ g(r) m(S_r)`
    L1Liouville,
}

impl fmt::Display for SeriesName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesName::Parabolic => "sum 1/dB(k)",
            SeriesName::StochasticCompleteness => "sum m(B_k)/dB(k)",
            SeriesName::L1Liouville => "sum g(r) m(S_r)",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

/// User-declared bound on the terms of one series:
/// `t_k ≤ coeff·(k+1)^exponent·ratio^k` (or `≥`) for all `k ≥ from`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermBound {
    pub series: SeriesName,
    pub side: Side,
    pub coeff: f64,
    pub exponent: f64,
    #[serde(default = "unit")]
    pub ratio: f64,
    #[serde(default)]
    pub from: usize,
}

fn unit() -> f64 {
    1.0
}

impl TermBound {
    fn envelope(&self) -> Envelope {
        let c = Some(self.coeff);
        Envelope {
            lo: if self.side == Side::Lower { c } else { None },
            hi: if self.side == Side::Upper { c } else { None },
            exponent: self.exponent,
            ratio: self.ratio,
            from: self.from,
        }
    }
}

/// What happened to a user bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateUse {
    pub bound: TermBound,
    pub accepted: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    /// `value` is the partial sum plus the midpoint of the certified remainder bracket;
    /// `error` bounds `|value - limit|`.
    ConvergesTo {
        value: f64,
        partial_sum: f64,
        tail_lo: f64,
        tail_hi: f64,
        error: f64,
    },
    Diverges {
        evidence: String,
    },
    Inconclusive {
        partial_sum: f64,
    },
}

impl Verdict {
    pub fn is_decisive(&self) -> bool {
        !matches!(self, Verdict::Inconclusive { .. })
    }

    pub fn converges(&self) -> Option<bool> {
        match self {
            Verdict::ConvergesTo { .. } => Some(true),
            Verdict::Diverges { .. } => Some(false),
            Verdict::Inconclusive { .. } => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Verdict::ConvergesTo { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesVerdict {
    pub series: SeriesName,
    pub verdict: Verdict,
    pub terms_used: usize,
    /// Which envelope decided the verdict.
    pub certificate: Option<String>,
    /// Downsampled `(k, Σ_{j≤k} t_j)`.
    pub trajectory: Vec<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

impl Answer {
    fn from_divergence(v: &Verdict) -> Answer {
        match v.converges() {
            Some(false) => Answer::Yes,
            Some(true) => Answer::No,
            None => Answer::Unknown,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub parabolic: Answer,
    pub stochastically_complete: Answer,
    pub l1_liouville: Answer,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Classification {
    pub model: String,
    pub n_max: usize,
    pub parabolic: SeriesVerdict,
    pub stochastically_complete: SeriesVerdict,
    pub l1_liouville: SeriesVerdict,
    pub summary: Summary,
    pub certificates: Vec<CertificateUse>,
}

impl Classification {
    pub fn is_decisive(&self) -> bool {
        self.summary.parabolic != Answer::Unknown
            && self.summary.stochastically_complete != Answer::Unknown
            && self.summary.l1_liouville != Answer::Unknown
    }
}

fn sample_points(n: usize) -> Vec<usize> {
    let mut pts = Vec::new();
    let mut x = 1.0f64;
    while (x as usize) <= n + 1 {
        let k = x as usize - 1;
        if pts.last() != Some(&k) {
            pts.push(k);
        }
        x = (x * 1.1).max(x + 1.0);
    }
    if pts.last() != Some(&n) {
        pts.push(n);
    }
    pts
}

/// Sums `terms`, then decides convergence from the candidate envelopes in order.
fn decide(
    series: SeriesName,
    terms: &[f64],
    ln_terms: &[f64],
    candidates: &[(Envelope, String)],
    extra_error: f64,
) -> SeriesVerdict {
    let n = terms.len() - 1;
    let samples = sample_points(n);
    let mut acc = Compensated::default();
    let mut trajectory = Vec::with_capacity(samples.len());
    let mut next = 0;
    for (k, &t) in terms.iter().enumerate() {
        acc.add(t);
        if next < samples.len() && samples[next] == k {
            trajectory.push((k, acc.value()));
            next += 1;
        }
    }
    let partial_sum = acc.value();
    let rounding = 4.0 * f64::EPSILON * partial_sum.abs();
    for (env, source) in candidates {
        if env.proves_convergence() {
            if let Some((lo, hi)) = env.remainder_bounds(n + 1) {
                return SeriesVerdict {
                    series,
                    verdict: Verdict::ConvergesTo {
                        value: partial_sum + 0.5 * (lo + hi),
                        partial_sum,
                        tail_lo: lo,
                        tail_hi: hi,
                        error: 0.5 * (hi - lo) + rounding + extra_error,
                    },
                    terms_used: n + 1,
                    certificate: Some(source.clone()),
                    trajectory,
                };
            }
        }
        if env.proves_divergence() && env.from <= n {
            let evidence = format!(
                "terms >= {:.6e}*(k+1)^{}*{}^k for k >= {} ({source}); partial sum at N = {n} is {partial_sum:.6e}",
                env.lo.unwrap_or(0.0),
                env.exponent,
                env.ratio,
                env.from
            );
            return SeriesVerdict {
                series,
                verdict: Verdict::Diverges { evidence },
                terms_used: n + 1,
                certificate: Some(source.clone()),
                trajectory,
            };
        }
    }
    let _ = ln_terms;
    SeriesVerdict {
        series,
        verdict: Verdict::Inconclusive { partial_sum },
        terms_used: n + 1,
        certificate: None,
        trajectory,
    }
}

/// Validates user bounds for `series` against the scanned `ln` terms.
fn user_candidates(
    series: SeriesName,
    ln_terms: &[f64],
    bounds: &[TermBound],
    log: &mut Vec<CertificateUse>,
) -> Vec<(Envelope, String)> {
    let mut out = Vec::new();
    for b in bounds.iter().filter(|b| b.series == series) {
        let env = b.envelope();
        let valid_shape = b.coeff > 0.0 && b.ratio > 0.0 && b.coeff.is_finite();
        let (accepted, note) = if !valid_shape {
            (false, "coefficient and ratio must be positive".to_string())
        } else if b.from >= ln_terms.len() {
            (false, format!("starts at {} beyond the scanned range", b.from))
        } else {
            match env.first_violation(ln_terms) {
                Some(k) => (false, format!("violated at k = {k}")),
                None => (true, format!("holds on {}..{}", b.from, ln_terms.len() - 1)),
            }
        };
        log.push(CertificateUse {
            bound: b.clone(),
            accepted,
            note,
        });
        if accepted {
            out.push((env, format!("user bound on {series} from k = {}", b.from)));
        }
    }
    out
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Certified bracket on `Σ_{k≥r} 1/∂B(k)` from the closed-form envelope.
pub fn green_tail_bounds(model: &RadialModel, r: usize) -> Option<(f64, f64)> {
    let (_, b) = model.envelopes(r);
    let env = b?.recip();
    if !env.proves_convergence() {
        return None;
    }
    env.remainder_bounds(r)
}

/// `g(r) = Σ_{k≥r} 1/∂B(k)` summed up to `n_max`.
pub fn model_green(model: &RadialModel, r: usize, n_max: usize) -> Result<SeriesVerdict> {
    let n = n_max.max(r);
    let t = model.tabulate(n)?;
    let ln_terms: Vec<f64> = t.ln_boundary.iter().map(|b| -b).collect();
    let terms: Vec<f64> = ln_terms[r..].iter().map(|l| l.exp()).collect();
    let (_, b) = model.envelopes(n);
    let mut candidates = Vec::new();
    if let Some(b) = b {
        let env = b.recip();
        // shift the index so that the envelope refers to k - r
        if env.from <= n {
            candidates.push((env, "closed form".to_string()));
        }
    }
    // `decide` works with indices relative to r; re-express the envelope bracket directly
    let mut v = decide(SeriesName::Parabolic, &terms, &ln_terms[r..], &[], 0.0);
    v.trajectory.iter_mut().for_each(|p| p.0 += r);
    if let Some((env, source)) = candidates.first() {
        let partial_sum = match v.verdict {
            Verdict::Inconclusive { partial_sum } => partial_sum,
            _ => unreachable!(),
        };
        if env.proves_convergence() {
            if let Some((lo, hi)) = env.remainder_bounds(n + 1) {
                v.verdict = Verdict::ConvergesTo {
                    value: partial_sum + 0.5 * (lo + hi),
                    partial_sum,
                    tail_lo: lo,
                    tail_hi: hi,
                    error: 0.5 * (hi - lo) + 4.0 * f64::EPSILON * partial_sum,
                };
                v.certificate = Some(source.clone());
            }
        } else if env.proves_divergence() {
            v.verdict = Verdict::Diverges {
                evidence: format!("1/dB(k) >= {:.6e}*(k+1)^{}; partial sum {partial_sum:.6e}", env.lo.unwrap(), env.exponent),
            };
            v.certificate = Some(source.clone());
        }
    }
    Ok(v)
}

/// Classifies a radial model through its three series.
pub fn classify(model: &RadialModel, n_max: usize, certificates: &[TermBound]) -> Result<Classification> {
    let n = n_max.max(1);
    let t = model.tabulate(n)?;
    let mut log = Vec::new();
    let (m_env, b_env) = model.envelopes(n);

    // parabolicity
    let p_ln: Vec<f64> = t.ln_boundary.iter().map(|b| -b).collect();
    let p_terms: Vec<f64> = p_ln.iter().map(|l| l.exp()).collect();
    let mut p_cands = Vec::new();
    if let Some(b) = b_env {
        p_cands.push((b.recip(), "closed form".to_string()));
    }
    p_cands.extend(user_candidates(SeriesName::Parabolic, &p_ln, certificates, &mut log));
    let parabolic = decide(SeriesName::Parabolic, &p_terms, &p_ln, &p_cands, 0.0);

    // stochastic completeness
    let mut ln_ball = Vec::with_capacity(n + 1);
    let mut acc = f64::NEG_INFINITY;
    for &lm in &t.ln_sphere_measure {
        acc = log_sum_exp(acc, lm);
        ln_ball.push(acc);
    }
    let mut ball = Compensated::default();
    let mut sc_terms = Vec::with_capacity(n + 1);
    for k in 0..=n {
        ball.add(t.sphere_measure[k]);
        let v = ball.value();
        sc_terms.push(if v.is_finite() && t.boundary[k].is_finite() && t.boundary[k] > 0.0 {
            v / t.boundary[k]
        } else {
            (ln_ball[k] - t.ln_boundary[k]).exp()
        });
    }
    let sc_ln: Vec<f64> = (0..=n).map(|k| ln_ball[k] - t.ln_boundary[k]).collect();
    let mut sc_cands = Vec::new();
    if let (Some(m), Some(b)) = (m_env, b_env) {
        let prefix = compensated_sum(t.sphere_measure[..m.from.min(n + 1)].iter().copied()) * (1.0 + 1e-12);
        if let Some(mb) = m.partial_sums(prefix, n) {
            sc_cands.push((mb.mul(b.recip()), "closed form".to_string()));
        }
    }
    sc_cands.extend(user_candidates(SeriesName::StochasticCompleteness, &sc_ln, certificates, &mut log));
    let mut stochastically_complete =
        decide(SeriesName::StochasticCompleteness, &sc_terms, &sc_ln, &sc_cands, 0.0);

    // L¹-Liouville series Σ g(r) m(S_r)
    let mut g_tail = Compensated::default();
    let mut green = vec![0.0; n + 1];
    for k in (0..=n).rev() {
        g_tail.add(p_terms[k]);
        green[k] = g_tail.value();
    }
    let tail_bracket = match &parabolic.verdict {
        Verdict::ConvergesTo { tail_lo, tail_hi, .. } => Some((*tail_lo, *tail_hi)),
        _ => None,
    };
    let (mid, half) = tail_bracket.map_or((0.0, 0.0), |(lo, hi)| (0.5 * (lo + hi), 0.5 * (hi - lo)));
    let l1_terms: Vec<f64> = (0..=n).map(|r| (green[r] + mid) * t.sphere_measure[r]).collect();
    let l1_ln: Vec<f64> = l1_terms.iter().map(|v| v.ln()).collect();
    let ball_n = compensated_sum(t.sphere_measure.iter().copied());
    let mut l1_cands = Vec::new();
    if let (Some(m), Some(b)) = (m_env, b_env) {
        if let Some(g_env) = b.recip().tails(n) {
            l1_cands.push((g_env.mul(m), "closed form".to_string()));
        }
    }
    l1_cands.extend(user_candidates(SeriesName::L1Liouville, &l1_ln, certificates, &mut log));
    let mut l1_liouville = decide(SeriesName::L1Liouville, &l1_terms, &l1_ln, &l1_cands, ball_n * half);

    if parabolic.verdict.converges() == Some(false) {
        let forced = |name: SeriesName, v: &mut SeriesVerdict, why: &str| {
            if v.verdict.converges() != Some(false) {
                if v.verdict.converges() == Some(true) {
                    return Err(Error::Internal(format!("{name} converges on a parabolic model")));
                }
                let partial_sum = match v.verdict {
                    Verdict::Inconclusive { partial_sum } => partial_sum,
                    _ => f64::NAN,
                };
                v.verdict = Verdict::Diverges {
                    evidence: format!("{why}; partial sum at N = {n} is {partial_sum:.6e}"),
                };
                v.certificate = Some("parabolicity".into());
            }
            Ok(())
        };
        forced(
            SeriesName::StochasticCompleteness,
            &mut stochastically_complete,
            "m(B_k)/dB(k) >= m(S_0)/dB(k) and sum 1/dB(k) diverges",
        )?;
        forced(SeriesName::L1Liouville, &mut l1_liouville, "g is infinite on a parabolic model")?;
    }

    // both series are the same sum reordered
    match (
        stochastically_complete.verdict.converges(),
        l1_liouville.verdict.converges(),
    ) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Internal(format!(
                "{} and {} disagree on {}",
                SeriesName::StochasticCompleteness,
                SeriesName::L1Liouville,
                model.label()
            )))
        }
        (Some(true), Some(true)) => {
            if let (
                Verdict::ConvergesTo { value: a, error: ea, .. },
                Verdict::ConvergesTo { value: b, error: eb, .. },
            ) = (&stochastically_complete.verdict, &l1_liouville.verdict)
            {
                if (a - b).abs() > ea + eb + 1e-9 * a.abs() {
                    return Err(Error::Internal(format!(
                        "reordered series disagree on {}: {a} vs {b}",
                        model.label()
                    )));
                }
            }
        }
        _ => {}
    }

    let p = Answer::from_divergence(&parabolic.verdict);
    let sc = Answer::from_divergence(&stochastically_complete.verdict);
    let l1 = if p == Answer::Yes || sc == Answer::Yes {
        Answer::Yes
    } else {
        match l1_liouville.verdict.converges() {
            Some(false) => Answer::Yes,
            Some(true) if p == Answer::No => Answer::No,
            _ => Answer::Unknown,
        }
    };
    Ok(Classification {
        model: model.label(),
        n_max: n,
        parabolic,
        stochastically_complete,
        l1_liouville,
        summary: Summary {
            parabolic: p,
            stochastically_complete: sc,
            l1_liouville: l1,
        },
        certificates: log,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ReindexCheck {
    pub radius: usize,
    /// `Σ_{r≤R} m(S_r) Σ_{k=r}^{R} 1/∂B(k)`
    pub lhs: f64,
    /// `Σ_{k≤R} m(B_k)/∂B(k)`
    pub rhs: f64,
    pub absolute: f64,
    pub relative: f64,
}

/// Both sides of the finite reordering identity at truncation `R`.
pub fn reindex_identity_check(model: &RadialModel, radius: usize) -> Result<ReindexCheck> {
    let t = model.tabulate(radius)?;
    let mut inner = Compensated::default();
    let mut lhs = Compensated::default();
    for r in (0..=radius).rev() {
        inner.add(1.0 / t.boundary[r]);
        lhs.add(t.sphere_measure[r] * inner.value());
    }
    let mut ball = Compensated::default();
    let mut rhs = Compensated::default();
    for k in 0..=radius {
        ball.add(t.sphere_measure[k]);
        rhs.add(ball.value() / t.boundary[k]);
    }
    let (lhs, rhs) = (lhs.value(), rhs.value());
    let absolute = (lhs - rhs).abs();
    Ok(ReindexCheck {
        radius,
        lhs,
        rhs,
        absolute,
        relative: absolute / rhs.abs().max(f64::MIN_POSITIVE),
    })
}

/// Growth of `Σ_{y∈B_R} g_R(x0,y) m(y)` over an exhaustion by balls.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub source: Label,
    pub radii: Vec<usize>,
    /// `Σ_y g_R(x0,y) m(y)` per radius.
    pub green_mass: Vec<f64>,
    pub growth: Growth,
    pub conclusion: String,
}

/// Partial sums of the Green mass along balls `B_R(root)`, `R ≤ r_max`, with a growth
/// fit. Evidence only.
pub fn l1_evidence_general(spec: &GraphSpec, x0: &Label, r_max: usize) -> Result<EvidenceReport> {
    let radii: Vec<usize> = (1..=r_max).collect();
    l1_evidence_schedule(spec, x0, &radii)
}

pub fn l1_evidence_schedule(spec: &GraphSpec, x0: &Label, radii: &[usize]) -> Result<EvidenceReport> {
    let root_label = spec.root();
    let mut used = Vec::new();
    let mut mass = Vec::new();
    for &radius in radii {
        let g = spec.materialize(radius)?;
        let root = g.find(&root_label).expect("root is materialized");
        let Some(source) = g.find(x0) else { continue };
        let sys = BallSystem::new(&g, root, radius, SolverMode::Auto)?;
        if !sys.system.contains_interior(source) {
            continue;
        }
        let values = sys.green_values(source)?;
        let total = compensated_sum(
            sys.ball
                .vertices()
                .into_iter()
                .map(|y| values[y.index()] * g.measure(y)),
        );
        used.push(radius);
        mass.push(total);
    }
    let rf: Vec<f64> = used.iter().map(|&r| r as f64).collect();
    let growth = classify_growth(&rf, &mass);
    let conclusion = match growth {
        Growth::Saturating { .. } => "evidence: not L1-Liouville (Green mass saturates)",
        Growth::Insufficient => "no trend (too few radii)",
        _ => "evidence: L1-Liouville (Green mass grows without bound)",
    }
    .to_string();
    Ok(EvidenceReport {
        source: *x0,
        radii: used,
        green_mass: mass,
        growth,
        conclusion,
    })
}

/// Exit table at the root, for comparison with [`l1_evidence_general`].
pub fn root_exit(spec: &GraphSpec, radius: usize) -> Result<ExitTable> {
    let g = spec.materialize(radius)?;
    let root = g.find(&spec.root()).expect("root is materialized");
    BallSystem::new(&g, root, radius, SolverMode::Auto)?.exit()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::Sequence;

    fn model(m: Sequence, b: Sequence) -> RadialModel {
        RadialModel::new(m, b)
    }

    #[test]
    fn geometric_green() {
        let m = model(Sequence::Const(1.0), Sequence::geometric(2.0));
        let v = model_green(&m, 1, 60).unwrap();
        match v.verdict {
            Verdict::ConvergesTo { value, tail_hi, error, .. } => {
                assert!((value - 1.0).abs() <= error + 1e-15);
                assert!(tail_hi <= 2f64.powi(1 - 60) * 1.0001);
            }
            other => panic!("{other:?}"),
        }
        let v = model_green(&model(Sequence::Const(1.0), Sequence::Const(1.0)), 0, 1000).unwrap();
        assert!(matches!(v.verdict, Verdict::Diverges { .. }));
        let v = model_green(&RadialModel::section4_tilde(), 0, 100_000).unwrap();
        match v.verdict {
            Verdict::ConvergesTo { value, error, .. } => {
                assert!((value - 1.202_056_903_159_594).abs() < 1e-9);
                assert!(error < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classifier_examples() {
        let c = classify(&model(Sequence::Const(1.0), Sequence::shifted_power(2.0)), 10_000, &[]).unwrap();
        assert_eq!(c.summary.parabolic, Answer::No);
        assert_eq!(c.summary.stochastically_complete, Answer::Yes);
        assert_eq!(c.summary.l1_liouville, Answer::Yes);

        let c = classify(&model(Sequence::Const(1.0), Sequence::shifted_power(3.0)), 10_000, &[]).unwrap();
        assert_eq!(c.summary.stochastically_complete, Answer::No);
        assert_eq!(c.summary.l1_liouville, Answer::No);

        let c = classify(&model(Sequence::Const(1.0), Sequence::Const(1.0)), 1000, &[]).unwrap();
        assert_eq!(c.summary.parabolic, Answer::Yes);
        assert_eq!(c.summary.stochastically_complete, Answer::Yes);
        assert_eq!(c.summary.l1_liouville, Answer::Yes);
    }

    #[test]
    fn antitree_cubed_sums_to_a_quarter() {
        let m = RadialModel::antitree(Sequence::shifted_power(3.0));
        let c = classify(&m, DEFAULT_N_MAX, &[]).unwrap();
        match c.stochastically_complete.verdict {
            Verdict::ConvergesTo { value, error, partial_sum, .. } => {
                assert!((value - 0.25).abs() <= error + 1e-15, "{value} ± {error}");
                assert!(error < 1e-8);
                let n = DEFAULT_N_MAX as f64;
                let telescoped = 0.25 - 0.25 / (n + 2.0);
                assert!((partial_sum - telescoped).abs() <= 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.summary.l1_liouville, Answer::No);
    }

    #[test]
    fn reindex_identity_small_cases() {
        let m = model(Sequence::Const(1.0), Sequence::geometric(2.0));
        let c = reindex_identity_check(&m, 10).unwrap();
        assert!(c.absolute <= 1e-14);
        let c = reindex_identity_check(&m, 60).unwrap();
        assert!((c.rhs - 4.0).abs() < 1e-12);
        let c = reindex_identity_check(&RadialModel::section4_tilde(), 0).unwrap();
        assert_eq!(c.lhs, c.rhs);
        let c = reindex_identity_check(&RadialModel::section4_tilde(), 100).unwrap();
        assert!(c.relative <= 1e-12);
    }

    #[test]
    fn user_certificates_are_validated() {
        // curvature-given model without closed-form envelopes
        let m = RadialModel::from_curvatures(Sequence::Const(2.0), Sequence::Const(1.0), 1.0);
        let c = classify(&m, 200, &[]).unwrap();
        assert_eq!(c.summary.parabolic, Answer::Unknown);
        let good = TermBound {
            series: SeriesName::Parabolic,
            side: Side::Upper,
            coeff: 0.5,
            exponent: 0.0,
            ratio: 0.5,
            from: 0,
        };
        let bad = TermBound { coeff: 0.1, ..good.clone() };
        let c = classify(&m, 200, &[bad, good]).unwrap();
        assert_eq!(c.summary.parabolic, Answer::No);
        assert!(!c.certificates[0].accepted);
        assert!(c.certificates[1].accepted);
    }

    #[test]
    fn evidence_on_half_line_and_geometric() {
        let hl = GraphSpec::Model(RadialModel::new(Sequence::Const(1.0), Sequence::Const(1.0)));
        let e = l1_evidence_general(&hl, &Label::grid(0, 0), 30).unwrap();
        for (r, v) in e.radii.iter().zip(&e.green_mass) {
            let r = *r as f64;
            assert!((v - r * (r + 1.0) / 2.0).abs() < 1e-9 * r * r);
        }
        assert!(e.growth.is_unbounded());
        let geo = GraphSpec::Model(RadialModel::new(Sequence::Const(1.0), Sequence::geometric(2.0)));
        let e = l1_evidence_general(&geo, &Label::grid(0, 0), 40).unwrap();
        assert!(matches!(e.growth, Growth::Saturating { limit } if (limit - 4.0).abs() < 1e-6));
        let exit = root_exit(&geo, 12).unwrap();
        let idx = e.radii.iter().position(|&r| r == 12).unwrap();
        assert!((exit.table.get(&Label::grid(0, 0)).unwrap() - e.green_mass[idx]).abs() < 1e-9);
    }
}
