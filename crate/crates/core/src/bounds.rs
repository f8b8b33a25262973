//! Sharp interval bounds for `S = X_1 + ... + X_n` with uniform margins.
//!
//! For `n >= 3` every law in convex order below `U[0, n]` is attainable, and
//! the extremes over intervals are reached by the three-point laws
//! `F_{u,v}`, the conditional expectations of `U[0, n]` given the blocks
//! `[0, u)`, `[u, v)`, `[v, n]`.

use serde::{Deserialize, Serialize};

use crate::distribution::MixtureDistribution;
use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttainingKind {
    PointMass,
    BiAtomic,
    TriAtomic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: Rational,
    pub attaining: MixtureDistribution,
    pub attaining_kind: AttainingKind,
}

impl BoundResult {
    fn new(value: Rational, attaining: MixtureDistribution) -> Self {
        let attaining_kind = match attaining.atoms().len() {
            1 => AttainingKind::PointMass,
            2 => AttainingKind::BiAtomic,
            _ => AttainingKind::TriAtomic,
        };
        BoundResult { value, attaining, attaining_kind }
    }
}

/// `F_{u,v} = (u/n) d_{u/2} + ((v-u)/n) d_{(u+v)/2} + ((n-v)/n) d_{(n+v)/2}`,
/// with zero-mass atoms dropped.
pub fn extremal_sum_distribution(n: u32, u: &Rational, v: &Rational) -> Result<MixtureDistribution> {
    let nr = Rational::from(n);
    if n == 0 || u.is_negative() || u > v || *v > nr {
        return Err(Error::InvalidParameter(format!("need 0 <= u <= v <= n, got u = {u}, v = {v}, n = {n}")));
    }
    let two = Rational::from(2);
    MixtureDistribution::discrete(
        [
            (u / &two, u / &nr),
            ((u + v) / &two, (v - u) / &nr),
            ((&nr + v) / &two, (&nr - v) / &nr),
        ]
        .into_iter()
        .filter(|(_, p)| !p.is_zero()),
    )
}

fn check_interval(n: u32, a: &Rational, b: &Rational) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("interval bounds need n >= 3, got {n}")));
    }
    if a.is_negative() || b.is_negative() || a + b > Rational::from(n) {
        return Err(Error::Domain(format!("interval [{a}, {}] not inside [0, {n}]", a + b)));
    }
    Ok(())
}

/// Smallest possible `P(S in (a, a + b))`, namely `(2b/n - 1)+`.
pub fn min_open_interval(n: u32, a: &Rational, b: &Rational) -> Result<BoundResult> {
    check_interval(n, a, b)?;
    let nr = Rational::from(n);
    let two = Rational::from(2);
    let excess = &two * b / &nr - Rational::one();
    if excess.is_positive() {
        let u = &two * a;
        let v = &two * (a + b) - &nr;
        return Ok(BoundResult::new(excess, extremal_sum_distribution(n, &u, &v)?));
    }
    // both atoms of F_{u,u} avoid the interval when 2a + 2b - n <= u <= 2a
    let u = (&two * a).min_of(&nr).clone();
    Ok(BoundResult::new(Rational::zero(), extremal_sum_distribution(n, &u, &u)?))
}

/// Largest possible `P(S in [a, a + b])`, namely `min{2(a+b)/n, 2(n-a)/n, 1}`.
pub fn max_closed_interval(n: u32, a: &Rational, b: &Rational) -> Result<BoundResult> {
    check_interval(n, a, b)?;
    let nr = Rational::from(n);
    let two = Rational::from(2);
    let half = &nr / &two;
    let hi = a + b;
    if *a <= half && half <= hi {
        return Ok(BoundResult::new(Rational::one(), MixtureDistribution::point_mass(half)));
    }
    let u = if hi < half { &two * &hi } else { &two * a - &nr };
    let f = extremal_sum_distribution(n, &u, &u)?;
    let value = if hi < half { &two * &hi / &nr } else { &two * (&nr - a) / &nr };
    Ok(BoundResult::new(value, f))
}

/// Upper bounds `(P(S <= x), P(S >= x))` valid for every `n >= 2`.
pub fn cdf_bounds(n: u32, x: &Rational) -> Result<(Rational, Rational)> {
    let nr = Rational::from(n);
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    if x.is_negative() || *x > nr {
        return Err(Error::Domain(format!("x = {x} outside [0, {n}]")));
    }
    let two = Rational::from(2);
    let one = Rational::one();
    let cdf = (&two * x / &nr).min_of(&one).clone();
    let tail = (&two * (&nr - x) / &nr).min_of(&one).clone();
    Ok((cdf, tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::convex_order_vs_uniform;
    use crate::rational::q;
    use proptest::prelude::*;

    fn r(n: i64) -> Rational {
        Rational::from(n)
    }

    #[test]
    fn extremal_laws() {
        let f = extremal_sum_distribution(3, &q(3, 2), &q(3, 2)).unwrap();
        assert!(f.same_law(&MixtureDistribution::discrete([(q(3, 4), q(1, 2)), (q(9, 4), q(1, 2))]).unwrap()));
        let g = extremal_sum_distribution(3, &r(0), &r(3)).unwrap();
        assert!(g.same_law(&MixtureDistribution::point_mass(q(3, 2))));
        let h = extremal_sum_distribution(4, &r(1), &r(2)).unwrap();
        assert_eq!(h.atoms().len(), 3);
        assert!(h.same_law(&MixtureDistribution::discrete([(q(1, 2), q(1, 4)), (q(3, 2), q(1, 4)), (r(3), q(1, 2))]).unwrap()));
        assert_eq!(h.mean(), r(2));
        assert!(extremal_sum_distribution(3, &r(2), &r(1)).is_err());
    }

    #[test]
    fn interval_examples() {
        let b = min_open_interval(3, &r(1), &r(2)).unwrap();
        assert_eq!(b.value, q(1, 3));
        assert_eq!(b.attaining.prob_open(&r(1), &r(3)), q(1, 3));
        let b = min_open_interval(3, &r(0), &r(1)).unwrap();
        assert_eq!(b.value, r(0));
        assert!(b.attaining.same_law(&MixtureDistribution::point_mass(q(3, 2))));
        assert_eq!(b.attaining_kind, AttainingKind::PointMass);
        assert_eq!(min_open_interval(4, &r(0), &r(4)).unwrap().value, r(1));

        let b = max_closed_interval(3, &r(1), &r(1)).unwrap();
        assert_eq!(b.value, r(1));
        assert!(b.attaining.same_law(&MixtureDistribution::point_mass(q(3, 2))));
        let b = max_closed_interval(3, &r(0), &q(1, 2)).unwrap();
        assert_eq!(b.value, q(1, 3));
        assert!(b.attaining.same_law(&MixtureDistribution::discrete([(q(1, 2), q(1, 3)), (r(2), q(2, 3))]).unwrap()));
        let b = max_closed_interval(4, &r(3), &r(1)).unwrap();
        assert_eq!(b.value, q(1, 2));
        assert_eq!(b.attaining_kind, AttainingKind::BiAtomic);
        assert!(b.attaining.same_law(&MixtureDistribution::discrete([(r(1), q(1, 2)), (r(3), q(1, 2))]).unwrap()));
    }

    #[test]
    fn endpoints_matter() {
        // the attaining law for the minimum sits on the open endpoints
        let b = min_open_interval(3, &q(1, 2), &r(1)).unwrap();
        assert_eq!(b.attaining.prob_open(&q(1, 2), &q(3, 2)), r(0));
        assert!(b.attaining.prob_closed(&q(1, 2), &q(3, 2)).is_positive());
    }

    #[test]
    fn argument_checks() {
        assert!(min_open_interval(2, &r(0), &r(1)).is_err());
        assert!(max_closed_interval(3, &r(2), &r(2)).is_err());
        assert!(min_open_interval(3, &r(-1), &r(1)).is_err());
        assert!(cdf_bounds(3, &r(4)).is_err());
        assert_eq!(cdf_bounds(2, &q(1, 2)).unwrap(), (q(1, 2), r(1)));
        assert_eq!(cdf_bounds(3, &r(0)).unwrap(), (r(0), r(1)));
        assert_eq!(cdf_bounds(3, &r(3)).unwrap(), (r(1), r(0)));
    }

    fn arb_query() -> impl Strategy<Value = (u32, Rational, Rational)> {
        (3u32..7, 0i64..=48, 0i64..=48).prop_map(|(n, x, y)| {
            let (lo, hi) = (x.min(y), x.max(y));
            let scale = q(n as i64, 48);
            (n, &scale * r(lo), &scale * r(hi - lo))
        })
    }

    proptest! {
        #[test]
        fn bounds_are_attained_by_members((n, a, b) in arb_query()) {
            let min = min_open_interval(n, &a, &b).unwrap();
            let max = max_closed_interval(n, &a, &b).unwrap();
            let hi = &a + &b;
            prop_assert_eq!(min.attaining.prob_open(&a, &hi), min.value.clone());
            prop_assert_eq!(max.attaining.prob_closed(&a, &hi), max.value.clone());
            for f in [&min.attaining, &max.attaining] {
                prop_assert!(convex_order_vs_uniform(f, n).is_member());
            }
            prop_assert!(min.value <= max.value);
            let nr = Rational::from(n);
            let two = r(2);
            let expected_max = (&two * &hi / &nr).min_of(&(&two * (&nr - &a) / &nr)).min_of(&r(1)).clone();
            prop_assert_eq!(max.value, expected_max);
        }

        #[test]
        fn tail_bounds_reproduce_the_minimum((n, a, b) in arb_query()) {
            let nr = Rational::from(n);
            prop_assume!(&b * r(2) > nr);
            let (cdf, _) = cdf_bounds(n, &a).unwrap();
            let (_, tail) = cdf_bounds(n, &(&a + &b)).unwrap();
            prop_assert_eq!(r(1) - cdf - tail, min_open_interval(n, &a, &b).unwrap().value);
        }

        #[test]
        fn extremal_laws_have_the_right_mean(n in 3u32..7, x in 0i64..=24, y in 0i64..=24) {
            let scale = q(n as i64, 24);
            let (u, v) = (&scale * r(x.min(y)), &scale * r(x.max(y)));
            let f = extremal_sum_distribution(n, &u, &v).unwrap();
            prop_assert_eq!(f.mean(), Rational::from(n) / r(2));
            prop_assert!(convex_order_vs_uniform(&f, n).is_member());
        }
    }
}
