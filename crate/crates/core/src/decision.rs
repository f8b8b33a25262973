//! Verdicts with machine-checkable certificates.

use serde::{Deserialize, Serialize};

use crate::distribution::MixtureDistribution;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Member,
    NonMember,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Convex order against `U[0, n]` holds; a `D_n` claim only for `n >= 3`.
    ConvexOrder,
    #[serde(rename = "CxCharacterization_nGe3")]
    CxCharacterizationNGe3,
    BiAtomicRule,
    TriAtomicRule,
    UnimodalSufficient,
    MonotoneSufficient,
    DensityDominance,
    SupportOrMeanViolation,
    CxViolation,
    NoRuleApplies,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Declared shape of the step density, verified before it is trusted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ShapeHint {
    None,
    UnimodalDensity { mode: Rational },
    MonotoneDensity { direction: Direction },
    UnimodalSymmetricDensity,
}

/// Which branch of the equidistant tri-atomic rule applies after reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriAtomicCase {
    /// Middle atom at 1; member iff `f2 >= non_integrity(1/(2b))`.
    CenteredAtOne,
    /// `1/(2b)` is an integer; every mean-one law on the support is a member.
    EvenPeriod,
    /// `1/(2b) - 1/2` is an integer; member iff `f2 >= a + b - 1`.
    OddPeriod,
    /// `1/b` is not an integer and the middle atom is not at 1.
    NonIntegral,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Certificate {
    None,
    /// `stop_loss(F, k) - (n - k)^2 / (2n) = gap`.
    StopLossGap { k: Rational, gap: Rational },
    MeanViolation { mean: Rational, expected: Rational },
    SupportViolation { point: Rational, lo: Rational, hi: Rational },
    /// Atom spacing is `1/q`.
    UnitFraction { q: u64 },
    NotUnitFraction { b: Rational },
    TriAtomic {
        case: TriAtomicCase,
        a: Rational,
        b: Rational,
        f2: Rational,
        threshold: Option<Rational>,
        reflected: bool,
    },
    /// Density exceeds `bound = 3 * width / (4h)` a.e. on `[1-h, 1+h]`.
    DominanceWindow { h: Rational, min_density: Rational, bound: Rational },
    Shape { shape: ShapeHint },
    PointMass { loc: Rational },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub rule: Rule,
    pub certificate: Certificate,
}

impl Decision {
    pub fn member(rule: Rule, certificate: Certificate) -> Self {
        Decision { verdict: Verdict::Member, rule, certificate }
    }

    pub fn non_member(rule: Rule, certificate: Certificate) -> Self {
        Decision { verdict: Verdict::NonMember, rule, certificate }
    }

    pub fn unknown() -> Self {
        Decision {
            verdict: Verdict::Unknown,
            rule: Rule::NoRuleApplies,
            certificate: Certificate::None,
        }
    }

    pub fn is_member(&self) -> bool {
        self.verdict == Verdict::Member
    }

    /// Re-derives the certificate's claim about `f` from scratch.
    ///
    /// Certificates that carry no checkable content (`None`, `Shape`) only
    /// pass for verdicts that do not rest on them being refutations.
    pub fn recheck(&self, f: &MixtureDistribution, n: u32) -> bool {
        let nr = Rational::from(n);
        match &self.certificate {
            Certificate::None => self.verdict != Verdict::NonMember,
            Certificate::StopLossGap { k, gap } => {
                let d = &nr - k;
                let actual = f.stop_loss(k).value - &d * &d / (Rational::from(2) * &nr);
                actual == *gap && (self.verdict != Verdict::NonMember || gap.is_positive())
            }
            Certificate::MeanViolation { mean, expected } => {
                f.mean() == *mean && *expected == &nr / Rational::from(2) && mean != expected
            }
            Certificate::SupportViolation { point, lo, hi } => {
                (point < lo || point > hi)
                    && (*point == f.support_min() || *point == f.support_max())
            }
            Certificate::UnitFraction { q } => match f.atoms() {
                [x, y] if f.is_discrete() => {
                    *q > 0 && &y.loc - &x.loc == Rational::from(*q as i64).recip()
                }
                _ => false,
            },
            Certificate::NotUnitFraction { b } => match f.atoms() {
                [x, y] if f.is_discrete() => &y.loc - &x.loc == *b && !b.recip().is_integer(),
                _ => false,
            },
            Certificate::TriAtomic { case, a, b, f2, threshold, reflected } => {
                recheck_triatomic(f, *case, a, b, f2, threshold.as_ref(), *reflected, self.verdict)
            }
            Certificate::DominanceWindow { h, min_density, bound } => {
                let width = f.support_max() - f.support_min();
                let one = Rational::one();
                let lo = &one - h;
                let hi = &one + h;
                let observed = f
                    .step_density()
                    .into_iter()
                    .filter(|(l, r, _)| *l < hi && *r > lo)
                    .map(|(_, _, d)| d)
                    .min();
                h.is_positive()
                    && *bound == Rational::from(3) * &width / (Rational::from(4) * h)
                    && observed.as_ref() == Some(min_density)
                    && min_density > bound
                    && window_is_covered(f, &lo, &hi)
            }
            Certificate::Shape { .. } => self.verdict == Verdict::Member,
            Certificate::PointMass { loc } => {
                f.atoms().len() == 1 && f.is_discrete() && f.atoms()[0].loc == *loc
            }
        }
    }
}

fn window_is_covered(f: &MixtureDistribution, lo: &Rational, hi: &Rational) -> bool {
    let mut reach = lo.clone();
    for (l, r, _) in f.step_density() {
        if r <= reach {
            continue;
        }
        if l > reach {
            return false;
        }
        reach = r;
        if reach >= *hi {
            return true;
        }
    }
    false
}

#[allow(clippy::too_many_arguments)]
fn recheck_triatomic(
    f: &MixtureDistribution,
    case: TriAtomicCase,
    a: &Rational,
    b: &Rational,
    f2: &Rational,
    threshold: Option<&Rational>,
    reflected: bool,
    verdict: Verdict,
) -> bool {
    let g = if reflected { f.reflect(&Rational::from(2)) } else { f.clone() };
    let locs: Vec<&Rational> = g.atoms().iter().map(|x| &x.loc).collect();
    if !g.is_discrete() || locs.len() != 3 {
        return false;
    }
    if *locs[0] != a - b || *locs[1] != *a || *locs[2] != a + b || g.atoms()[1].mass != *f2 {
        return false;
    }
    let one = Rational::one();
    let half_period = (Rational::from(2) * b).recip();
    let expected_case = if *a == one {
        TriAtomicCase::CenteredAtOne
    } else if half_period.is_integer() {
        TriAtomicCase::EvenPeriod
    } else if (&half_period - Rational::new(1, 2)).is_integer() {
        TriAtomicCase::OddPeriod
    } else {
        TriAtomicCase::NonIntegral
    };
    if case != expected_case {
        return false;
    }
    let holds = match (case, threshold) {
        (TriAtomicCase::CenteredAtOne, Some(t)) | (TriAtomicCase::OddPeriod, Some(t)) => f2 >= t,
        (TriAtomicCase::EvenPeriod, None) => true,
        (TriAtomicCase::NonIntegral, None) => false,
        _ => return false,
    };
    holds == (verdict == Verdict::Member)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn json_shape() {
        let d = Decision::non_member(
            Rule::CxViolation,
            Certificate::StopLossGap { k: q(1, 1), gap: q(1, 4) },
        );
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        assert_eq!(v["verdict"], "NonMember");
        assert_eq!(v["rule"], "CxViolation");
        assert_eq!(v["certificate"]["kind"], "StopLossGap");
        assert_eq!(v["certificate"]["gap"], "1/4");
        let back: Decision = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
        assert_eq!(
            serde_json::to_value(Rule::CxCharacterizationNGe3).unwrap(),
            "CxCharacterization_nGe3"
        );
    }

    #[test]
    fn recheck_rejects_forged_gap() {
        let f = MixtureDistribution::discrete([(q(0, 1), q(1, 2)), (q(2, 1), q(1, 2))]).unwrap();
        let honest = Decision::non_member(
            Rule::CxViolation,
            Certificate::StopLossGap { k: q(1, 1), gap: q(1, 4) },
        );
        assert!(honest.recheck(&f, 2));
        let forged = Decision::non_member(
            Rule::CxViolation,
            Certificate::StopLossGap { k: q(1, 1), gap: q(1, 3) },
        );
        assert!(!forged.recheck(&f, 2));
    }
}
