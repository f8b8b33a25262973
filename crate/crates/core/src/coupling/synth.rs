//! Constructions in the frame `X ~ U[0, T]`, `Y ~ U[-T, 0]`, `Z = X + Y`.
//!
//! A unit-frame sum `S` corresponds to `Z = T (S - 1)`, so atoms at spacing
//! `1/T` in the unit frame become integer-spaced atoms `c - 2, c - 1, c`.

use serde::{Deserialize, Serialize};

use super::{CouplingSegment, Frame, PiecewiseCoupling};
use crate::distribution::MixtureDistribution;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// A coupling in the native frame and the same coupling in the unit frame,
/// each carrying its target sum law.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synthesis {
    pub native: PiecewiseCoupling,
    pub unit: PiecewiseCoupling,
}

impl Synthesis {
    fn from_native(native: PiecewiseCoupling) -> Result<Self> {
        let unit = native.to_unit_frame()?;
        Ok(Synthesis { native, unit })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriCase {
    /// Integer top atom `c = 1`, any period `T > 0`.
    A,
    /// Even integer period.
    B,
    /// Odd integer period.
    C,
}

/// `period` is `T`; `top` is the largest native-frame atom `c`; `middle_mass`
/// is `P(Z = c - 1)`, defaulting to its smallest attainable value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriAtomicParams {
    pub period: Rational,
    pub top: Rational,
    #[serde(default)]
    pub middle_mass: Option<Rational>,
}

fn integer_period(t: &Rational) -> Result<u64> {
    match t.to_i64() {
        Some(v) if v > 0 && t.is_integer() => Ok(v as u64),
        _ => Err(Error::InvalidParameter(format!("period {t} must be a positive integer"))),
    }
}

/// On each unit block `[k, k + 1)`: sum `beta - 1` on the first `beta`, `beta` after.
fn biatomic_segments(t: u64, beta: &Rational) -> Vec<CouplingSegment> {
    let one = Rational::one();
    let mut segs = Vec::with_capacity(2 * t as usize);
    for k in 0..t as i64 {
        let k = Rational::from(k);
        let mid = &k + beta;
        segs.push(CouplingSegment::constant_sum(k.clone(), mid.clone(), beta - &one));
        segs.push(CouplingSegment::constant_sum(mid, &k + &one, beta.clone()));
    }
    segs
}

/// Mean-one two-point target `{a, a + 1/b_inv}` in the unit frame.
///
/// Needs `1 - 1/b_inv < a < 1`, which is exactly when such a law exists.
pub fn synthesize_biatomic(b_inv: u64, a: &Rational) -> Result<Synthesis> {
    if b_inv == 0 {
        return Err(Error::InvalidParameter("b_inv must be positive".into()));
    }
    let one = Rational::one();
    let t = Rational::from(b_inv as i64);
    let beta = &t * &(a - &one) + &one;
    if !beta.is_positive() || beta >= one {
        return Err(Error::InvalidParameter(format!(
            "no mean-one law on {{{a}, {a} + 1/{b_inv}}}: need 1 - 1/{b_inv} < a < 1"
        )));
    }
    let target = MixtureDistribution::discrete([(&beta - &one, beta.clone()), (beta.clone(), &one - &beta)])?;
    Synthesis::from_native(
        PiecewiseCoupling::new(Frame::native(&t), biatomic_segments(b_inv, &beta)).with_target(target),
    )
}

/// As [`synthesize_biatomic`] with spacing `b`; rejects `1/b` outside the integers.
pub fn synthesize_biatomic_for_gap(a: &Rational, b: &Rational) -> Result<Synthesis> {
    if !b.is_positive() {
        return Err(Error::InvalidParameter(format!("spacing {b} must be positive")));
    }
    let inv = b.recip();
    match inv.to_i64() {
        Some(k) if inv.is_integer() => synthesize_biatomic(k as u64, a),
        _ => Err(Error::InvalidParameter(format!(
            "1/b = {inv} is not an integer; no coupling has this two-point sum"
        ))),
    }
}

/// Smallest middle mass for an integer top atom: pairs of unit blocks give
/// sums `-1, +1`; the leftover length `R = T - 2 floor(T/2)` costs `dist(T, 2Z)`.
fn case_a_min(t: &Rational) -> (Vec<CouplingSegment>, Rational) {
    let one = Rational::one();
    let two = Rational::from(2);
    let pairs = (t / &two).floor();
    let rest = t - &two * &pairs;
    let mut segs = Vec::new();
    let mut j = Rational::zero();
    while j < pairs {
        let lo = &two * &j;
        segs.push(CouplingSegment::constant_sum(lo.clone(), &lo + &one, -&one));
        segs.push(CouplingSegment::constant_sum(&lo + &one, &lo + &two, one.clone()));
        j += &one;
    }
    let base = &two * &pairs;
    let middle_len = if rest <= one {
        if rest.is_positive() {
            segs.push(CouplingSegment::constant_sum(base, t.clone(), Rational::zero()));
        }
        rest
    } else {
        let cut = &base + &rest - &one;
        segs.push(CouplingSegment::constant_sum(base.clone(), cut.clone(), -&one));
        segs.push(CouplingSegment::constant_sum(cut, &base + &one, Rational::zero()));
        segs.push(CouplingSegment::constant_sum(&base + &one, t.clone(), one.clone()));
        &two - &rest
    };
    (segs, middle_len / t)
}

/// Smallest middle mass for a top atom `c` in `(0, 1)` with integer period:
/// sums `c - 2` and `c` alternate over pairs of unit blocks; an odd period
/// leaves one block that uses `c - 1` on its first `c`.
fn periodic_min(t: u64, c: &Rational) -> (Vec<CouplingSegment>, Rational) {
    let one = Rational::one();
    let two = Rational::from(2);
    let mut segs = Vec::new();
    for k in 0..(t / 2) as i64 {
        let lo = Rational::from(2 * k);
        let mid = &lo + c;
        segs.push(CouplingSegment::constant_sum(lo.clone(), mid.clone(), c - &two));
        segs.push(CouplingSegment::constant_sum(mid, &lo + &two, c.clone()));
    }
    let middle = if t % 2 == 1 {
        let lo = Rational::from(t as i64 - 1);
        let mid = &lo + c;
        segs.push(CouplingSegment::constant_sum(lo.clone(), mid.clone(), c - &one));
        segs.push(CouplingSegment::constant_sum(mid, &lo + &one, c.clone()));
        c / Rational::from(t as i64)
    } else {
        Rational::zero()
    };
    (segs, middle)
}

/// Three-point target on `{c - 2, c - 1, c}` with mean zero.
///
/// Extreme middle masses come from explicit maps; interior values mix the
/// two extreme maps. Tops in `(1, 2)` are built for `2 - c` and reflected.
pub fn synthesize_triatomic(case: TriCase, params: &TriAtomicParams) -> Result<Synthesis> {
    let one = Rational::one();
    let two = Rational::from(2);
    let t = &params.period;
    let c = &params.top;
    if !t.is_positive() {
        return Err(Error::InvalidParameter(format!("period {t} must be positive")));
    }
    if case == TriCase::A {
        if *c != one {
            return Err(Error::InvalidParameter(format!("case A needs top atom 1, got {c}")));
        }
    } else if !c.is_positive() || *c >= two || *c == one {
        return Err(Error::InvalidParameter(format!("top atom {c} must lie in (0, 1) or (1, 2)")));
    }
    if *c > one {
        let mirrored = TriAtomicParams { period: t.clone(), top: &two - c, middle_mass: params.middle_mass.clone() };
        return Synthesis::from_native(synthesize_triatomic(case, &mirrored)?.native.reflect());
    }

    let (min_segs, p_min, max_segs, p_max) = match case {
        TriCase::A => {
            let (segs, p) = case_a_min(t);
            let anti = vec![CouplingSegment::constant_sum(Rational::zero(), t.clone(), Rational::zero())];
            (segs, p, anti, one.clone())
        }
        TriCase::B | TriCase::C => {
            let ti = integer_period(t)?;
            let even = ti % 2 == 0;
            if even != (case == TriCase::B) {
                return Err(Error::InvalidParameter(format!(
                    "case {case:?} needs an {} period, got {ti}",
                    if case == TriCase::B { "even" } else { "odd" }
                )));
            }
            let (segs, p) = periodic_min(ti, c);
            (segs, p, biatomic_segments(ti, c), c.clone())
        }
    };
    let p1 = params.middle_mass.clone().unwrap_or_else(|| p_min.clone());
    if p1 < p_min || p1 > p_max {
        return Err(Error::InvalidParameter(format!(
            "middle mass {p1} outside the attainable range [{p_min}, {p_max}]"
        )));
    }
    let target = MixtureDistribution::discrete([
        (c - &two, (c - &p1) / &two),
        (c - &one, p1.clone()),
        (c.clone(), &one - (c + &p1) / &two),
    ])?;
    let frame = Frame::native(t);
    let coupling = if p1 == p_min {
        PiecewiseCoupling::new(frame, min_segs)
    } else if p1 == p_max {
        PiecewiseCoupling::new(frame, max_segs)
    } else {
        let w = (&p1 - &p_min) / (&p_max - &p_min);
        PiecewiseCoupling::new(frame, min_segs).with_mixture(w, max_segs)
    };
    Synthesis::from_native(coupling.with_target(target))
}

/// Picks the construction for a unit-frame target with one, two or three
/// equidistant atoms and mean one.
pub fn synthesize_for_target(f: &MixtureDistribution) -> Result<Synthesis> {
    let one = Rational::one();
    if !f.is_discrete() {
        return Err(Error::WrongShape("only atomic targets have explicit couplings".into()));
    }
    if f.mean() != one {
        return Err(Error::MeanMismatch(format!("target mean is {}, expected 1", f.mean())));
    }
    let atoms = f.atoms();
    let synthesis = match atoms.len() {
        1 => {
            let anti = PiecewiseCoupling::antithetic().with_target(f.clone());
            Synthesis { native: anti.clone(), unit: anti }
        }
        2 => synthesize_biatomic_for_gap(&atoms[0].loc, &(&atoms[1].loc - &atoms[0].loc))?,
        3 => {
            let b = &atoms[1].loc - &atoms[0].loc;
            if &atoms[2].loc - &atoms[1].loc != b {
                return Err(Error::WrongShape("three atoms must be equidistant".into()));
            }
            let t = b.recip();
            let c = &t * &(&atoms[2].loc - &one);
            let case = if c == one {
                TriCase::A
            } else if !t.is_integer() {
                return Err(Error::InvalidParameter(format!(
                    "1/b = {t} is not an integer and the middle atom is not 1"
                )));
            } else if integer_period(&t)? % 2 == 0 {
                TriCase::B
            } else {
                TriCase::C
            };
            let params = TriAtomicParams { period: t, top: c, middle_mass: Some(atoms[1].mass.clone()) };
            synthesize_triatomic(case, &params)?
        }
        _ => return Err(Error::WrongShape("at most three atoms are supported".into())),
    };
    if synthesis.unit.target.as_ref() != Some(f) {
        return Err(Error::InvalidParameter("target is not attainable by these constructions".into()));
    }
    Ok(synthesis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::verify_coupling;
    use crate::rational::q;
    use proptest::prelude::*;

    fn r(n: i64) -> Rational {
        Rational::from(n)
    }

    fn check(s: &Synthesis) {
        for c in [&s.native, &s.unit] {
            let report = verify_coupling(c, c.target.as_ref().unwrap());
            assert!(report.all_ok(), "{report:?}");
        }
    }

    #[test]
    fn biatomic_examples() {
        let s = synthesize_biatomic(1, &q(1, 2)).unwrap();
        check(&s);
        let expected = MixtureDistribution::discrete([(q(1, 2), q(1, 2)), (q(3, 2), q(1, 2))]).unwrap();
        assert_eq!(s.unit.target.as_ref(), Some(&expected));
        assert_eq!(
            s.unit.segments,
            vec![
                CouplingSegment::constant_sum(r(0), q(1, 2), q(1, 2)),
                CouplingSegment::constant_sum(q(1, 2), r(1), q(3, 2)),
            ]
        );
        let s = synthesize_biatomic(2, &q(3, 4)).unwrap();
        check(&s);
        let expected = MixtureDistribution::discrete([(q(3, 4), q(1, 2)), (q(5, 4), q(1, 2))]).unwrap();
        assert_eq!(s.unit.target.as_ref(), Some(&expected));
        assert!(synthesize_biatomic_for_gap(&q(4, 5), &q(2, 5)).is_err());
        assert!(synthesize_biatomic(2, &q(1, 4)).is_err());
        assert!(synthesize_biatomic(2, &r(1)).is_err());
    }

    #[test]
    fn case_a_example() {
        let p = TriAtomicParams { period: q(5, 2), top: r(1), middle_mass: None };
        let s = synthesize_triatomic(TriCase::A, &p).unwrap();
        check(&s);
        let expected = MixtureDistribution::discrete([(r(-1), q(2, 5)), (r(0), q(1, 5)), (r(1), q(2, 5))]).unwrap();
        assert_eq!(s.native.target.as_ref(), Some(&expected));
        let below = TriAtomicParams { middle_mass: Some(q(1, 5) - q(1, 100)), ..p };
        assert!(synthesize_triatomic(TriCase::A, &below).is_err());
    }

    #[test]
    fn case_b_and_c_examples() {
        let s = synthesize_triatomic(TriCase::B, &TriAtomicParams { period: r(2), top: q(1, 2), middle_mass: Some(r(0)) }).unwrap();
        check(&s);
        let expected = MixtureDistribution::discrete([(q(-3, 2), q(1, 4)), (q(1, 2), q(3, 4))]).unwrap();
        assert_eq!(s.native.target.as_ref(), Some(&expected));
        let s = synthesize_triatomic(TriCase::C, &TriAtomicParams { period: r(3), top: q(1, 2), middle_mass: None }).unwrap();
        check(&s);
        assert_eq!(s.native.target.as_ref().unwrap().atom_mass_at(&q(-1, 2)), q(1, 6));
        let wrong = TriAtomicParams { period: r(3), top: q(1, 2), middle_mass: Some(q(1, 7)) };
        assert!(synthesize_triatomic(TriCase::C, &wrong).is_err());
        let parity = TriAtomicParams { period: r(3), top: q(1, 2), middle_mass: None };
        assert!(synthesize_triatomic(TriCase::B, &parity).is_err());
    }

    #[test]
    fn upper_tops_reflect() {
        for (case, t) in [(TriCase::B, r(4)), (TriCase::C, r(5))] {
            let s = synthesize_triatomic(case, &TriAtomicParams { period: t, top: q(3, 2), middle_mass: None }).unwrap();
            check(&s);
            let law = s.native.target.as_ref().unwrap();
            assert_eq!(law.support_max(), q(3, 2));
            assert_eq!(law.mean(), r(0));
        }
    }

    #[test]
    fn for_target_round_trips() {
        let law = MixtureDistribution::discrete([(q(2, 3), q(1, 3)), (r(1), q(1, 3)), (q(4, 3), q(1, 3))]).unwrap();
        let s = synthesize_for_target(&law).unwrap();
        check(&s);
        let even = MixtureDistribution::discrete([(q(7, 12), q(1, 12)), (q(5, 6), q(1, 6)), (q(13, 12), q(3, 4))]).unwrap();
        check(&synthesize_for_target(&even).unwrap());
        check(&synthesize_for_target(&even.reflect(&r(2))).unwrap());
        check(&synthesize_for_target(&MixtureDistribution::point_mass(r(1))).unwrap());
        let below = MixtureDistribution::discrete([(q(2, 3), q(7, 20)), (r(1), q(3, 10)), (q(4, 3), q(7, 20))]).unwrap();
        assert!(synthesize_for_target(&below).is_err());
    }

    proptest! {
        #[test]
        fn every_construction_is_exact(
            case in prop_oneof![Just(TriCase::A), Just(TriCase::B), Just(TriCase::C)],
            tn in 1i64..12, td in 1i64..4, cn in 1i64..8, frac in 0i64..=4,
        ) {
            let (t, c) = match case {
                TriCase::A => (q(tn, td), r(1)),
                TriCase::B => (r(2 * tn), q(cn, 8) * (r(1) + r(cn % 2))),
                TriCase::C => (r(2 * tn - 1), q(cn, 8) * (r(1) + r(cn % 2))),
            };
            prop_assume!(c != r(1) || case == TriCase::A);
            let base = TriAtomicParams { period: t, top: c, middle_mass: None };
            let lo = synthesize_triatomic(case, &base).unwrap();
            let p_min = lo.native.target.as_ref().unwrap().atom_mass_at(&(&base.top - r(1)));
            let c_star = base.top.clone().min(r(2) - &base.top);
            let p_max = if case == TriCase::A { r(1) } else { c_star };
            let p1 = &p_min + (&p_max - &p_min) * q(frac, 4);
            let s = synthesize_triatomic(case, &TriAtomicParams { middle_mass: Some(p1), ..base }).unwrap();
            for cpl in [&s.native, &s.unit] {
                let report = verify_coupling(cpl, cpl.target.as_ref().unwrap());
                prop_assert!(report.all_ok(), "{:?}", report);
            }
        }
    }
}
