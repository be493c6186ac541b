//! Decision functions for the parameter ranges of the Liouville, a-priori and
//! maximum-principle statements, with the sharp constant `H`.
//!
//! Comparisons are exact for rationals. Floats use an absolute tolerance of
//! `1e-12` (scaled by the operand size) and are annotated as `boundary`
//! within `1e-9`.

use std::cmp::Ordering;
use std::fmt::{self, Debug};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FLOAT_TOL: f64 = 1e-12;
pub const BOUNDARY_BAND: f64 = 1e-9;

pub trait OracleScalar:
    Copy
    + PartialOrd
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const EXACT: bool;
    fn from_i64(v: i64) -> Self;
    fn to_f64(self) -> f64;

    fn zero() -> Self {
        Self::from_i64(0)
    }
    fn one() -> Self {
        Self::from_i64(1)
    }
}

impl OracleScalar for f64 {
    const EXACT: bool = false;
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl OracleScalar for Ratio<i64> {
    const EXACT: bool = true;
    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v)
    }
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Sign of `a − b` under the scalar's comparison rule, plus the boundary flag.
pub fn compare<S: OracleScalar>(a: S, b: S) -> (Ordering, bool) {
    let d = a - b;
    if S::EXACT {
        let ord = d.partial_cmp(&S::zero()).unwrap_or(Ordering::Equal);
        (ord, ord == Ordering::Equal)
    } else {
        let (af, bf, df) = (a.to_f64(), b.to_f64(), d.to_f64());
        let tol = FLOAT_TOL * 1f64.max(af.abs()).max(bf.abs());
        let ord = if df > tol {
            Ordering::Greater
        } else if df < -tol {
            Ordering::Less
        } else {
            Ordering::Equal
        };
        (ord, df.abs() <= BOUNDARY_BAND)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
            Relation::Eq => "==",
        })
    }
}

/// One inequality `lhs rel rhs`; `residual = lhs − rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub relation: Relation,
    pub residual: f64,
    pub satisfied: bool,
    pub boundary: bool,
}

fn check<S: OracleScalar>(name: &str, lhs: S, rel: Relation, rhs: S) -> Constraint {
    let (ord, boundary) = compare(lhs, rhs);
    let satisfied = match rel {
        Relation::Lt => ord == Ordering::Less,
        Relation::Le => ord != Ordering::Greater,
        Relation::Gt => ord == Ordering::Greater,
        Relation::Ge => ord != Ordering::Less,
        Relation::Eq => ord == Ordering::Equal,
    };
    Constraint {
        name: name.to_string(),
        relation: rel,
        residual: (lhs - rhs).to_f64(),
        satisfied,
        boundary,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthKind {
    /// `u₊ = o(r^σ)`
    #[default]
    LittleO,
    /// `u₊ = O(r^σ)`
    BigO,
    /// `u` bounded above
    Bounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet<S> {
    pub p: S,
    pub chi: S,
    pub mu: S,
    #[serde(default)]
    pub omega: Option<S>,
    #[serde(default)]
    pub sigma: Option<S>,
    #[serde(default = "default_q")]
    pub q: u32,
    /// `l(0) > 0`
    #[serde(default)]
    pub l_at_zero_positive: bool,
    #[serde(default)]
    pub growth: GrowthKind,
    /// `t f(t) ≥ C|t|^{ω+1}` certified.
    #[serde(default)]
    pub symmetric: bool,
    #[serde(default)]
    pub gamma: Option<S>,
    #[serde(default)]
    pub chi1: Option<S>,
    #[serde(default)]
    pub chi2: Option<S>,
    #[serde(default)]
    pub omega1: Option<S>,
    #[serde(default)]
    pub omega2: Option<S>,
}

fn default_q() -> u32 {
    3
}

impl<S: OracleScalar> ParamSet<S> {
    pub fn new(p: S, chi: S, mu: S, q: u32) -> Self {
        ParamSet {
            p,
            chi,
            mu,
            omega: None,
            sigma: None,
            q,
            l_at_zero_positive: false,
            growth: GrowthKind::LittleO,
            symmetric: false,
            gamma: None,
            chi1: None,
            chi2: None,
            omega1: None,
            omega2: None,
        }
    }

    pub fn with_omega(mut self, omega: S) -> Self {
        self.omega = Some(omega);
        self
    }

    pub fn with_sigma(mut self, sigma: S, growth: GrowthKind) -> Self {
        self.sigma = Some(sigma);
        self.growth = growth;
        self
    }

    /// Splits the `l` exponent as for `l(t) = t^χ/(1+t)`: `χ₁ = χ`, `χ₂ = χ − 1`.
    pub fn mean_curvature_split(mut self) -> Self {
        self.chi1 = Some(self.chi);
        self.chi2 = Some(self.chi - S::one());
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, v: S, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                value: v.to_f64(),
                reason: reason.into(),
            })
        };
        if compare(self.p, S::one()).0 != Ordering::Greater {
            return bad("p", self.p, "p > 1 required");
        }
        if compare(self.chi, S::zero()).0 == Ordering::Less {
            return bad("chi", self.chi, "chi >= 0 required");
        }
        if self.q < 1 {
            return Err(Error::InvalidParameter {
                name: "Q",
                value: self.q as f64,
                reason: "Q >= 1 required".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremTag {
    /// a-priori estimate under the Keller–Osserman range
    Apriori,
    /// slowly growing solutions
    SlowGrowth,
    /// maximum principle on superlevel sets with the constant `H`
    MaximumPrinciple,
    /// no non-constant solution on superlevel sets
    NoNonconstant,
    /// mean curvature specialisation of `Apriori` at `p = 2`
    MeanCurvature,
    FarinaSerrin,
    DambrosioMitidieri,
    #[serde(rename = "none")]
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    #[serde(rename = "bounded_above_fstar_le_0")]
    BoundedAboveFstarLe0,
    ConstantOrNonpositive,
    NoNonconstantSolution,
    HValue,
    OutOfRange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeVerdict {
    pub tag: TheoremTag,
    pub conclusion: Conclusion,
    pub h: Option<f64>,
    pub constraints: Vec<Constraint>,
    pub notes: Vec<String>,
}

impl RangeVerdict {
    pub fn applies(&self) -> bool {
        self.tag != TheoremTag::None
    }

    /// Names of the violated constraints.
    pub fn violated(&self) -> Vec<&str> {
        self.constraints.iter().filter(|c| !c.satisfied).map(|c| c.name.as_str()).collect()
    }

    pub fn on_boundary(&self) -> bool {
        self.constraints.iter().any(|c| c.boundary)
    }

    fn decide(tag: TheoremTag, conclusion: Conclusion, constraints: Vec<Constraint>, mut notes: Vec<String>) -> Self {
        if constraints.iter().all(|c| c.satisfied) {
            RangeVerdict { tag, conclusion, h: None, constraints, notes }
        } else {
            for c in constraints.iter().filter(|c| !c.satisfied) {
                notes.push(format!("violated: {}", c.name));
            }
            RangeVerdict {
                tag: TheoremTag::None,
                conclusion: Conclusion::OutOfRange,
                h: None,
                constraints,
                notes,
            }
        }
    }

    fn missing(what: &str) -> Self {
        RangeVerdict {
            tag: TheoremTag::None,
            conclusion: Conclusion::OutOfRange,
            h: None,
            constraints: Vec::new(),
            notes: vec![format!("missing parameter: {what}")],
        }
    }
}

/// `σ* = (p−χ−μ)/(p−χ−1)`.
pub fn sigma_star<S: OracleScalar>(p: S, chi: S, mu: S) -> Result<S> {
    let den = p - chi - S::one();
    if compare(den, S::zero()).0 != Ordering::Greater {
        return Err(Error::OutOfRange {
            constraint: "chi < p - 1 (sigma* denominator p - chi - 1)".into(),
            residual: den.to_f64(),
        });
    }
    Ok((p - chi - mu) / den)
}

/// `η = μ + (σ−1)(p−χ)`; for `χ < p−1`, `σ ≤ σ* ⇔ σ ≥ η`.
pub fn eta<S: OracleScalar>(p: S, chi: S, mu: S, sigma: S) -> S {
    mu + (sigma - S::one()) * (p - chi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HBranch {
    BelowCritical,
    CriticalZero,
    CriticalLowDimension,
    CriticalPositive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HConstant {
    pub h: f64,
    pub branch: HBranch,
    pub sigma_star: f64,
}

fn range_maximum<S: OracleScalar>(sigma: S, chi: S, p: S, mu: S) -> Vec<Constraint> {
    let mut cs = vec![
        check("chi >= 0", chi, Relation::Ge, S::zero()),
        check("chi < p - 1", chi, Relation::Lt, p - S::one()),
        check("mu <= p - chi", mu, Relation::Le, p - chi),
        check("sigma >= 0", sigma, Relation::Ge, S::zero()),
    ];
    if let Ok(ss) = sigma_star(p, chi, mu) {
        cs.push(check("sigma <= sigma*", sigma, Relation::Le, ss));
    }
    cs
}

/// The sharp constant `H(σ, χ, p, μ)` of the maximum principle.
pub fn h_constant<S: OracleScalar>(sigma: S, chi: S, p: S, mu: S, q: u32) -> Result<HConstant> {
    let cs = range_maximum(sigma, chi, p, mu);
    if let Some(c) = cs.iter().find(|c| !c.satisfied) {
        return Err(Error::OutOfRange {
            constraint: c.name.clone(),
            residual: c.residual,
        });
    }
    let ss = sigma_star(p, chi, mu)?;
    let out = |h: f64, branch| HConstant { h, branch, sigma_star: ss.to_f64() };
    if compare(sigma, ss).0 == Ordering::Less {
        return Ok(out(0.0, HBranch::BelowCritical));
    }
    if compare(ss, S::zero()).0 == Ordering::Equal {
        return Ok(out(0.0, HBranch::CriticalZero));
    }
    let qs = S::from_i64(q as i64);
    let lhs = (p - S::one()) * (sigma - S::one());
    let rhs = S::one() - qs;
    if compare(lhs, rhs).0 != Ordering::Greater {
        return Ok(out(0.0, HBranch::CriticalLowDimension));
    }
    let (sf, pf, cf) = (sigma.to_f64(), p.to_f64(), chi.to_f64());
    let h = sf.powf(pf - cf - 1.0) * ((pf - 1.0) * (sf - 1.0) + q as f64 - 1.0);
    Ok(out(h, HBranch::CriticalPositive))
}

fn mu_zone_note<S: OracleScalar>(p: S, chi: S, mu: S, notes: &mut Vec<String>) {
    if compare(mu, p - chi).0 == Ordering::Equal {
        notes.push("mu = p - chi: admitted by the maximum principle, excluded by the strict range".into());
    }
}

/// Maximum principle on superlevel sets: tag with `H`.
pub fn classify_maximum<S: OracleScalar>(ps: &ParamSet<S>) -> RangeVerdict {
    let Some(sigma) = ps.sigma else {
        return RangeVerdict::missing("sigma");
    };
    let cs = range_maximum(sigma, ps.chi, ps.p, ps.mu);
    let mut notes = Vec::new();
    if compare(ps.chi, ps.p - S::one()).0 == Ordering::Equal {
        notes.push("chi = p - 1: sigma* undefined (degenerate denominator)".into());
    }
    let mut v = RangeVerdict::decide(TheoremTag::MaximumPrinciple, Conclusion::HValue, cs, notes);
    if v.applies() {
        match h_constant(sigma, ps.chi, ps.p, ps.mu, ps.q) {
            Ok(h) => {
                v.h = Some(h.h);
                v.notes.push(format!("branch: {:?}", h.branch));
            }
            Err(e) => {
                v.tag = TheoremTag::None;
                v.conclusion = Conclusion::OutOfRange;
                v.notes.push(e.to_string());
            }
        }
    }
    v
}

fn main_constraints<S: OracleScalar>(p: S, chi: S, mu: S, omega: S) -> Vec<Constraint> {
    vec![
        check("chi >= 0", chi, Relation::Ge, S::zero()),
        check("chi <= p - 1", chi, Relation::Le, p - S::one()),
        check("mu < p - chi", mu, Relation::Lt, p - chi),
        check("omega > p - 1 - chi", omega, Relation::Gt, p - S::one() - chi),
    ]
}

fn main_notes<S: OracleScalar>(ps: &ParamSet<S>) -> Vec<String> {
    let mut notes = vec![if ps.l_at_zero_positive {
        "u* < +inf and f(u*) <= 0".to_string()
    } else {
        "u* < +inf and f(u*) <= 0 unless u is constant".to_string()
    }];
    if ps.symmetric {
        notes.push("equality solutions: u bounded and f(u*) <= 0 <= f(u_*)".into());
    }
    mu_zone_note(ps.p, ps.chi, ps.mu, &mut notes);
    notes
}

/// A-priori estimate: `0 ≤ χ ≤ p−1`, `μ < p−χ`, `ω > p−1−χ`.
pub fn classify_main<S: OracleScalar>(ps: &ParamSet<S>) -> RangeVerdict {
    let Some(omega) = ps.omega else {
        return RangeVerdict::missing("omega");
    };
    RangeVerdict::decide(
        TheoremTag::Apriori,
        Conclusion::BoundedAboveFstarLe0,
        main_constraints(ps.p, ps.chi, ps.mu, omega),
        main_notes(ps),
    )
}

/// Mean curvature specialisation (`p = 2`, `l ≥ C t^χ/(1+t)`); `ps.p` is ignored.
pub fn classify_mean_curvature<S: OracleScalar>(ps: &ParamSet<S>) -> RangeVerdict {
    let Some(omega) = ps.omega else {
        return RangeVerdict::missing("omega");
    };
    let two = S::from_i64(2);
    let mut q = *ps;
    q.p = two;
    RangeVerdict::decide(
        TheoremTag::MeanCurvature,
        Conclusion::BoundedAboveFstarLe0,
        main_constraints(two, ps.chi, ps.mu, omega),
        main_notes(&q),
    )
}

/// Slowly growing solutions: `0 ≤ χ < p−1`, `μ < p−χ`, growth below `r^{σ*}`.
///
/// At `μ = p−χ` boundedness above suffices. At `σ = σ*` with big-O growth
/// the statement holds when `p > Q` and `σ* ≤ (p−Q)/(p−1)`.
pub fn classify_main2<S: OracleScalar>(ps: &ParamSet<S>) -> RangeVerdict {
    let (p, chi, mu) = (ps.p, ps.chi, ps.mu);
    let mut cs = vec![
        check("chi >= 0", chi, Relation::Ge, S::zero()),
        check("chi < p - 1", chi, Relation::Lt, p - S::one()),
    ];
    let mut notes = Vec::new();
    if compare(chi, p - S::one()).0 == Ordering::Equal {
        notes.push("chi = p - 1: degenerate, sigma* undefined".into());
    }
    let mu_c = check("mu <= p - chi", mu, Relation::Le, p - chi);
    let mu_edge = mu_c.satisfied && compare(mu, p - chi).0 == Ordering::Equal;
    cs.push(mu_c);
    if !cs.iter().all(|c| c.satisfied) {
        return RangeVerdict::decide(TheoremTag::SlowGrowth, Conclusion::BoundedAboveFstarLe0, cs, notes);
    }
    let ss = match sigma_star(p, chi, mu) {
        Ok(s) => s,
        Err(e) => {
            notes.push(e.to_string());
            return RangeVerdict::decide(TheoremTag::SlowGrowth, Conclusion::BoundedAboveFstarLe0, cs, notes);
        }
    };
    if mu_edge {
        notes.push("mu = p - chi: requires u bounded above".into());
        let bounded = ps.growth == GrowthKind::Bounded
            || ps.sigma.map(|s| compare(s, S::zero()).0 != Ordering::Greater).unwrap_or(false);
        cs.push(Constraint {
            name: "u bounded above".into(),
            relation: Relation::Eq,
            residual: if bounded { 0.0 } else { 1.0 },
            satisfied: bounded,
            boundary: true,
        });
        return RangeVerdict::decide(TheoremTag::SlowGrowth, Conclusion::BoundedAboveFstarLe0, cs, notes);
    }
    if ps.growth == GrowthKind::Bounded {
        notes.push("u bounded above: sigma = 0 < sigma*".into());
        return RangeVerdict::decide(TheoremTag::SlowGrowth, Conclusion::BoundedAboveFstarLe0, cs, notes);
    }
    let Some(sigma) = ps.sigma else {
        return RangeVerdict::missing("sigma");
    };
    let at_critical = compare(sigma, ss).0 == Ordering::Equal;
    if at_critical && ps.growth == GrowthKind::BigO {
        let qs = S::from_i64(ps.q as i64);
        cs.push(check("p > Q", p, Relation::Gt, qs));
        cs.push(check("sigma* <= (p - Q)/(p - 1)", ss, Relation::Le, (p - qs) / (p - S::one())));
        notes.push("big-O growth at sigma = sigma*".into());
    } else if at_critical {
        cs.push(check("sigma <= sigma* (little-o)", sigma, Relation::Le, ss));
    } else {
        cs.push(check("sigma < sigma*", sigma, Relation::Lt, ss));
    }
    RangeVerdict::decide(TheoremTag::SlowGrowth, Conclusion::BoundedAboveFstarLe0, cs, notes)
}

/// No non-constant solution on `{u > γ}`: `0 ≤ χ ≤ p−1`, `μ < p−χ`, `ω > p−χ−1`, `γ ≥ 0`.
pub fn classify_prop31<S: OracleScalar>(ps: &ParamSet<S>) -> RangeVerdict {
    let Some(omega) = ps.omega else {
        return RangeVerdict::missing("omega");
    };
    let mut cs = main_constraints(ps.p, ps.chi, ps.mu, omega);
    cs.push(check("gamma >= 0", ps.gamma.unwrap_or(S::zero()), Relation::Ge, S::zero()));
    let mut notes = Vec::new();
    mu_zone_note(ps.p, ps.chi, ps.mu, &mut notes);
    RangeVerdict::decide(TheoremTag::NoNonconstant, Conclusion::NoNonconstantSolution, cs, notes)
}

/// Farina–Serrin constancy and the high-`χ` a-priori range, for side-by-side
/// reporting against [`classify_main`].
pub fn compare_literature<S: OracleScalar>(ps: &ParamSet<S>) -> Vec<RangeVerdict> {
    let p = ps.p;
    let mut out = Vec::new();

    let chi1 = ps.chi1.unwrap_or(ps.chi);
    let chi2 = ps.chi2.unwrap_or(ps.chi);
    let pmin = |a: S, b: S| if a < b { a } else { b };
    let pmax = |a: S, b: S| if a > b { a } else { b };
    match ps.omega.or(ps.omega1).or(ps.omega2) {
        Some(w) => {
            let w1 = ps.omega1.unwrap_or(w);
            let w2 = ps.omega2.unwrap_or(w);
            let (chi_lo, chi_hi, w_lo) = (pmin(chi1, chi2), pmax(chi1, chi2), pmin(w1, w2));
            let mut cs = vec![
                check("chi1 >= 0", chi1, Relation::Ge, S::zero()),
                check("max chi >= 0", chi_hi, Relation::Ge, S::zero()),
                check("max chi <= p - 1", chi_hi, Relation::Le, p - S::one()),
                check("mu < p - max chi", ps.mu, Relation::Lt, p - chi_hi),
                check("min omega > p - 1 - min chi", w_lo, Relation::Gt, p - S::one() - chi_lo),
            ];
            if ps.l_at_zero_positive {
                cs.push(check("chi1 = 0 when l(0) > 0", chi1, Relation::Eq, S::zero()));
            }
            out.push(RangeVerdict::decide(
                TheoremTag::FarinaSerrin,
                Conclusion::ConstantOrNonpositive,
                cs,
                vec!["C1 solutions of the equality are constant".into()],
            ));
        }
        None => {
            let mut v = RangeVerdict::missing("omega");
            v.notes.push("FarinaSerrin".into());
            out.push(v);
        }
    }

    let mut cs = vec![
        check("mu < 1", ps.mu, Relation::Lt, S::one()),
        check("p - 1 < chi", ps.chi, Relation::Gt, p - S::one()),
    ];
    if ps.q > 1 {
        let qs = S::from_i64(ps.q as i64);
        let bound = (qs - ps.mu) / (qs - S::one()) * (p - S::one());
        cs.push(check("chi <= (Q - mu)/(Q - 1) (p - 1)", ps.chi, Relation::Le, bound));
    }
    out.push(RangeVerdict::decide(
        TheoremTag::DambrosioMitidieri,
        Conclusion::BoundedAboveFstarLe0,
        cs,
        vec!["assumes l(t) >= t^chi and omega = 0".into()],
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    type R = Ratio<i64>;

    fn r(n: i64, d: i64) -> R {
        Ratio::new(n, d)
    }

    #[test]
    fn sigma_star_examples() {
        assert_eq!(sigma_star(2.0, 0.0, 0.0).unwrap(), 2.0);
        assert_eq!(sigma_star(2.0, 0.0, 2.0).unwrap(), 0.0);
        assert_eq!(sigma_star(3.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(sigma_star(r(3, 1), r(1, 2), r(1, 3)).unwrap(), r(13, 9));
        assert!(matches!(sigma_star(2.0, 1.0, 0.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(2.0, 0.0, 0.0, 2.0), 2.0);
        assert_eq!(eta(2.0, 0.0, 0.0, 1.0), 0.0);
        assert_eq!(eta(3.0, 0.5, 0.7, 1.0), 0.7);
    }

    #[test]
    fn h_examples() {
        let h = h_constant(2.0, 0.0, 2.0, 0.0, 3).unwrap();
        assert_eq!((h.h, h.branch), (6.0, HBranch::CriticalPositive));
        let h = h_constant(1.0, 0.0, 2.0, 1.0, 3).unwrap();
        assert_eq!(h.h, 2.0);
        assert_eq!(h_constant(1.5, 0.0, 2.0, 0.0, 3).unwrap().branch, HBranch::BelowCritical);
        assert_eq!(h_constant(0.0, 0.0, 2.0, 2.0, 3).unwrap().branch, HBranch::CriticalZero);
        let h = h_constant(0.5, 0.0, 2.0, 1.5, 1).unwrap();
        assert_eq!((h.h, h.branch), (0.0, HBranch::CriticalLowDimension));
        assert!(matches!(h_constant(2.5, 0.0, 2.0, 0.0, 3), Err(Error::OutOfRange { .. })));
        let v = classify_maximum(&ParamSet::new(2.0, 0.0, 0.0, 3).with_sigma(2.0, GrowthKind::BigO));
        assert_eq!((v.tag, v.h), (TheoremTag::MaximumPrinciple, Some(6.0)));
    }

    #[test]
    fn main_examples() {
        let v = classify_main(&ParamSet::new(2.0, 0.5, 1.0, 3).with_omega(1.0));
        assert_eq!(v.tag, TheoremTag::Apriori);
        let v = classify_main(&ParamSet::new(2.0, 0.5, 1.0, 3).with_omega(0.5));
        assert_eq!(v.tag, TheoremTag::None);
        assert_eq!(v.violated(), vec!["omega > p - 1 - chi"]);
        assert!(v.on_boundary());
        let v = classify_main(&ParamSet::new(2.0, 1.0, 0.9, 3).with_omega(0.1));
        assert_eq!(v.tag, TheoremTag::Apriori);
    }

    #[test]
    fn main2_examples() {
        let v = classify_main2(&ParamSet::new(2.0, 0.0, 0.0, 3).with_sigma(1.5, GrowthKind::BigO));
        assert_eq!(v.tag, TheoremTag::SlowGrowth);
        let v = classify_main2(&ParamSet::new(2.0, 0.0, 0.0, 3).with_sigma(2.0, GrowthKind::BigO));
        assert_eq!(v.tag, TheoremTag::None);
        let ps = ParamSet::new(r(5, 1), r(0, 1), r(49, 10), 3).with_sigma(r(1, 40), GrowthKind::BigO);
        assert_eq!(classify_main2(&ps).tag, TheoremTag::SlowGrowth);
        let v = classify_main2(&ParamSet::new(2.0, 1.0, 0.5, 3).with_sigma(0.0, GrowthKind::LittleO));
        assert_eq!(v.tag, TheoremTag::None);
    }

    #[test]
    fn prop31_examples() {
        assert!(classify_prop31(&ParamSet::new(2.0, 1.0, 0.5, 3).with_omega(0.1)).applies());
        assert!(classify_prop31(&ParamSet::new(2.0, 0.0, 1.5, 3).with_omega(1.25)).applies());
        // ω = p - χ - 1 exactly: strict inequality fails
        let v = classify_prop31(&ParamSet::new(2.0, 0.0, 1.5, 3).with_omega(1.0));
        assert_eq!(v.violated(), vec!["omega > p - 1 - chi"]);
        let v = classify_prop31(&ParamSet::new(2.0, 0.0, 2.0, 3).with_omega(1.5));
        assert_eq!(v.violated(), vec!["mu < p - chi"]);
    }

    #[test]
    fn literature_examples() {
        // mean curvature split: FS needs ω > 2 - χ, the a-priori range ω > 1 - χ
        let ps = ParamSet::new(2.0, 0.5, 0.0, 3).with_omega(1.0).mean_curvature_split();
        let lit = compare_literature(&ps);
        assert_eq!(lit[0].tag, TheoremTag::None);
        assert!(classify_mean_curvature(&ps).applies());
        let ps = ParamSet::new(2.0, 0.5, 0.0, 3).with_omega(1.6).mean_curvature_split();
        assert_eq!(compare_literature(&ps)[0].tag, TheoremTag::FarinaSerrin);
        let dm = &compare_literature(&ParamSet::new(2.0, 1.2, 0.5, 4))[1];
        assert_eq!(dm.violated(), vec!["chi <= (Q - mu)/(Q - 1) (p - 1)"]);
        let dm = &compare_literature(&ParamSet::new(2.0, 1.0, 0.0, 4))[1];
        assert_eq!(dm.violated(), vec!["p - 1 < chi"]);
        let dm = &compare_literature(&ParamSet::new(2.0, 1.1, 0.5, 4))[1];
        assert_eq!(dm.tag, TheoremTag::DambrosioMitidieri);
    }

    #[test]
    fn float_tolerance_and_band() {
        let (o, b) = compare(1.0 + 1e-13, 1.0);
        assert_eq!((o, b), (Ordering::Equal, true));
        let (o, b) = compare(1.0 + 1e-10, 1.0);
        assert_eq!((o, b), (Ordering::Greater, true));
        let (o, b) = compare(1.0 + 1e-8, 1.0);
        assert_eq!((o, b), (Ordering::Greater, false));
    }

    #[test]
    fn verdict_serializes() {
        let v = classify_main(&ParamSet::new(2.0, 0.0, 0.0, 3).with_omega(1.5));
        let s = serde_json::to_string(&v).unwrap();
        assert!(s.contains("\"tag\":\"Apriori\""));
        assert!(s.contains("bounded_above_fstar_le_0"));
        let ps: ParamSet<f64> = serde_json::from_str(r#"{"p":2,"chi":0,"mu":0,"omega":1}"#).unwrap();
        assert_eq!(ps.q, 3);
    }
}
