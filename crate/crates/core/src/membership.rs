//! Membership deciders for the aggregation set of `n` standard uniforms.
//!
//! For `n >= 3` membership is exactly convex order against `U[0, n]`. For
//! `n = 2` it is strictly smaller, and only some families are decided:
//! two-point laws, equidistant three-point laws, unimodal step densities and
//! densities that dominate a uniform bump around the mean. Everything else at
//! `n = 2` that passes the necessary convex-order check is `Unknown`.

use crate::convex::convex_order_vs_uniform;
use crate::decision::{Certificate, Decision, Direction, Rule, ShapeHint, TriAtomicCase, Verdict};
use crate::distribution::MixtureDistribution;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// `min{ceil(x)/x - 1, 1 - floor(x)/x}`, i.e. `dist(x, Z) / x`.
pub fn non_integrity(x: &Rational) -> Result<Rational> {
    if !x.is_positive() {
        return Err(Error::Domain(format!("non-integrity needs x > 0, got {x}")));
    }
    let up = x.ceil() / x - Rational::one();
    let down = Rational::one() - x.floor() / x;
    Ok(up.min(down))
}

pub fn decide_n_ge_3(f: &MixtureDistribution, n: u32) -> Result<Decision> {
    if n < 3 {
        return Err(Error::Domain(format!("decide_n_ge_3 needs n >= 3, got {n}")));
    }
    let mut d = convex_order_vs_uniform(f, n);
    d.rule = Rule::CxCharacterizationNGe3;
    Ok(d)
}

/// Mean-one and support-in-`[0, 2]` checks shared by the `n = 2` rules.
fn necessary_n2(f: &MixtureDistribution) -> Option<Decision> {
    let one = Rational::one();
    let mean = f.mean();
    if mean != one {
        return Some(Decision::non_member(
            Rule::SupportOrMeanViolation,
            Certificate::MeanViolation { mean, expected: one },
        ));
    }
    let (lo, hi) = (Rational::zero(), Rational::from(2));
    f.support_outside(&lo, &hi).map(|point| {
        Decision::non_member(
            Rule::SupportOrMeanViolation,
            Certificate::SupportViolation { point, lo, hi },
        )
    })
}

/// Two atoms `{a, a + b}` with mean one: member iff `1/b` is an integer.
pub fn decide_biatomic_n2(f: &MixtureDistribution) -> Result<Decision> {
    let [x, y] = f.atoms() else {
        return Err(Error::WrongShape("expected exactly two atoms".into()));
    };
    if !f.is_discrete() {
        return Err(Error::WrongShape("expected a purely atomic law".into()));
    }
    if let Some(d) = necessary_n2(f) {
        return Ok(d);
    }
    let b = &y.loc - &x.loc;
    let inv = b.recip();
    Ok(match inv.to_i64().filter(|_| inv.is_integer()) {
        Some(q) => Decision::member(Rule::BiAtomicRule, Certificate::UnitFraction { q: q as u64 }),
        None => Decision::non_member(Rule::BiAtomicRule, Certificate::NotUnitFraction { b }),
    })
}

/// Three atoms `{a - b, a, a + b}` with mean one.
///
/// Laws with `a > 1` are reflected through `x -> 2 - x` first. The third case
/// uses the threshold `f2 >= a + b - 1`, the smallest middle mass attained by
/// the explicit odd-period coupling.
pub fn decide_triatomic_equidistant_n2(f: &MixtureDistribution) -> Result<Decision> {
    let atoms = f.atoms();
    if atoms.len() != 3 || !f.is_discrete() {
        return Err(Error::WrongShape("expected exactly three atoms".into()));
    }
    let b = &atoms[1].loc - &atoms[0].loc;
    if &atoms[2].loc - &atoms[1].loc != b {
        return Err(Error::WrongShape("atoms are not equidistant".into()));
    }
    let one = Rational::one();
    let mean = f.mean();
    if mean != one {
        return Err(Error::MeanMismatch(format!("mean is {mean}, expected 1")));
    }
    if let Some(d) = necessary_n2(f) {
        return Ok(d);
    }
    let reflected = atoms[1].loc > one;
    let g = if reflected { f.reflect(&Rational::from(2)) } else { f.clone() };
    let a = g.atoms()[1].loc.clone();
    let f2 = g.atoms()[1].mass.clone();
    let half_period = (Rational::from(2) * &b).recip();

    let (case, threshold) = if a == one {
        (TriAtomicCase::CenteredAtOne, Some(non_integrity(&half_period)?))
    } else if half_period.is_integer() {
        (TriAtomicCase::EvenPeriod, None)
    } else if (&half_period - Rational::new(1, 2)).is_integer() {
        (TriAtomicCase::OddPeriod, Some(&a + &b - &one))
    } else {
        (TriAtomicCase::NonIntegral, None)
    };
    let member = match (&case, &threshold) {
        (TriAtomicCase::EvenPeriod, _) => true,
        (TriAtomicCase::NonIntegral, _) => false,
        (_, Some(t)) => f2 >= *t,
        (_, None) => unreachable!(),
    };
    let certificate = Certificate::TriAtomic { case, a, b, f2, threshold, reflected };
    Ok(if member {
        Decision::member(Rule::TriAtomicRule, certificate)
    } else {
        Decision::non_member(Rule::TriAtomicRule, certificate)
    })
}

/// Step density over the whole line: explicit zero segments fill interior
/// gaps, and the two unbounded ends are represented by `None` bounds.
fn padded_density(f: &MixtureDistribution) -> Vec<(Option<Rational>, Option<Rational>, Rational)> {
    let steps = f.step_density();
    let mut out = Vec::with_capacity(steps.len() * 2 + 2);
    let mut cursor: Option<Rational> = None;
    for (lo, hi, d) in steps {
        match &cursor {
            None => out.push((None, Some(lo.clone()), Rational::zero())),
            Some(c) if *c < lo => out.push((Some(c.clone()), Some(lo.clone()), Rational::zero())),
            _ => {}
        }
        cursor = Some(hi.clone());
        out.push((Some(lo), Some(hi), d));
    }
    out.push((cursor, None, Rational::zero()));
    out
}

/// Whether the density is nondecreasing left of `mode` and nonincreasing right of it.
fn unimodal_about(f: &MixtureDistribution, mode: &Rational) -> bool {
    let segs = padded_density(f);
    segs.windows(2).all(|w| {
        let p = w[0].1.as_ref().expect("interior boundary");
        if p < mode {
            w[0].2 <= w[1].2
        } else if p > mode {
            w[0].2 >= w[1].2
        } else {
            true
        }
    })
}

/// A mode of the step density if it is unimodal.
fn inferred_mode(f: &MixtureDistribution) -> Option<Rational> {
    let steps = f.step_density();
    let peak = steps.iter().map(|s| &s.2).max()?;
    let mode = steps.iter().find(|s| s.2 == *peak)?.0.clone();
    unimodal_about(f, &mode).then_some(mode)
}

fn verify_shape(f: &MixtureDistribution, hint: &ShapeHint) -> Option<ShapeHint> {
    match hint {
        ShapeHint::None => inferred_mode(f).map(|mode| ShapeHint::UnimodalDensity { mode }),
        ShapeHint::UnimodalDensity { mode } => unimodal_about(f, mode).then(|| hint.clone()),
        ShapeHint::MonotoneDensity { direction } => {
            let mode = match direction {
                Direction::Increasing => f.support_max(),
                Direction::Decreasing => f.support_min(),
            };
            unimodal_about(f, &mode).then(|| hint.clone())
        }
        ShapeHint::UnimodalSymmetricDensity => {
            let symmetric = f.same_law(&f.reflect(&(Rational::from(2) * f.mean())));
            (symmetric && inferred_mode(f).is_some()).then(|| hint.clone())
        }
    }
}

/// Atomless law with a (verified) unimodal step density, mean one and
/// support in `[0, 2]` is a member. Failed shape verification is `Unknown`.
pub fn decide_unimodal_n2(f: &MixtureDistribution, hint: &ShapeHint) -> Result<Decision> {
    if !f.is_atomless() {
        return Err(Error::WrongShape("unimodal rule needs an atomless law".into()));
    }
    if let Some(d) = necessary_n2(f) {
        return Ok(d);
    }
    let rule = match hint {
        ShapeHint::MonotoneDensity { .. } => Rule::MonotoneSufficient,
        _ => Rule::UnimodalSufficient,
    };
    Ok(match verify_shape(f, hint) {
        Some(shape) => Decision::member(rule, Certificate::Shape { shape }),
        None => Decision::unknown(),
    })
}

/// Member if the density exceeds `3 w / (4h)` a.e. on `[1 - h, 1 + h]` for
/// some `h > 0`, where `w` is the length of the support hull.
///
/// The minimum density over the window only changes when `1 +- h` crosses a
/// breakpoint, while the bound decreases in `h`, so testing `h = |1 - p|` for
/// each density breakpoint `p` is exhaustive.
pub fn decide_density_dominance_n2(f: &MixtureDistribution) -> Result<Decision> {
    if !f.is_atomless() {
        return Err(Error::WrongShape("dominance rule needs an atomless law".into()));
    }
    if let Some(d) = necessary_n2(f) {
        return Ok(d);
    }
    let one = Rational::one();
    let width = f.support_max() - f.support_min();
    let steps = f.step_density();
    let mut radii: Vec<Rational> = steps
        .iter()
        .flat_map(|(lo, hi, _)| [(lo - &one).abs(), (hi - &one).abs()])
        .filter(Rational::is_positive)
        .collect();
    radii.sort();
    radii.dedup();
    for h in radii {
        let (lo, hi) = (&one - &h, &one + &h);
        let inside: Vec<&(Rational, Rational, Rational)> =
            steps.iter().filter(|(l, r, _)| *l < hi && *r > lo).collect();
        let gapless = inside.first().is_some_and(|s| s.0 <= lo)
            && inside.last().is_some_and(|s| s.1 >= hi)
            && inside.windows(2).all(|w| w[0].1 == w[1].0);
        if !gapless {
            // a zero-density stretch inside the window; larger windows keep it
            break;
        }
        let min_density = inside.iter().map(|s| s.2.clone()).min().expect("nonempty window");
        let bound = Rational::from(3) * &width / (Rational::from(4) * &h);
        if min_density > bound {
            return Ok(Decision::member(
                Rule::DensityDominance,
                Certificate::DominanceWindow { h, min_density, bound },
            ));
        }
    }
    Ok(Decision::unknown())
}

/// Dispatcher over all rules.
///
/// `n >= 3`: exact convex-order characterization. `n = 2`: necessary
/// checks, then the two- and three-atom characterizations, then the
/// sufficient density rules; the first conclusive verdict wins.
pub fn decide(f: &MixtureDistribution, n: u32, hint: &ShapeHint) -> Result<Decision> {
    match n {
        0 | 1 => Err(Error::Domain(format!("decide needs n >= 2, got {n}"))),
        2 => decide_n2(f, hint),
        _ => decide_n_ge_3(f, n),
    }
}

fn decide_n2(f: &MixtureDistribution, hint: &ShapeHint) -> Result<Decision> {
    let cx = convex_order_vs_uniform(f, 2);
    if cx.verdict == Verdict::NonMember {
        return Ok(cx);
    }
    if f.is_discrete() {
        return match f.atoms().len() {
            // X + (1 - X) = 1
            1 => Ok(Decision::member(
                Rule::BiAtomicRule,
                Certificate::PointMass { loc: f.atoms()[0].loc.clone() },
            )),
            2 => decide_biatomic_n2(f),
            3 => match decide_triatomic_equidistant_n2(f) {
                Err(Error::WrongShape(_)) => Ok(Decision::unknown()),
                other => other,
            },
            _ => Ok(Decision::unknown()),
        };
    }
    if !f.is_atomless() {
        return Ok(Decision::unknown());
    }
    let unimodal = decide_unimodal_n2(f, hint)?;
    if unimodal.verdict != Verdict::Unknown {
        return Ok(unimodal);
    }
    decide_density_dominance_n2(f)
}

/// Law of `a * S` for a centred sum `S` (margins `U[-1, 1]`, mean zero),
/// mapped to the unit frame and decided there.
pub fn scaling_closure_check(f_centered: &MixtureDistribution, n: u32, a: &Rational) -> Result<Decision> {
    if a.is_negative() || *a > Rational::one() {
        return Err(Error::Domain(format!("scaling factor {a} not in [0, 1]")));
    }
    let unit = if a.is_zero() {
        MixtureDistribution::point_mass(Rational::from(n) / Rational::from(2))
    } else {
        f_centered.scale_shift(&(a / Rational::from(2)), &(Rational::from(n) / Rational::from(2)))?
    };
    decide(&unit, n, &ShapeHint::None)
}

/// Centred-frame law (`U[-1, 1]` margins) of a unit-frame sum law.
pub fn to_centered_frame(f_unit: &MixtureDistribution, n: u32) -> MixtureDistribution {
    f_unit
        .scale_shift(&Rational::from(2), &-Rational::from(n))
        .expect("affine map with nonzero scale")
}
