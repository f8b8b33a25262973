//! Exact convex-order comparison against `U[0, n]`.
//!
//! With equal means, `F <=_cx U[0, n]` iff the gap
//! `g(k) = E_F[(X - k)+] - (n - k)^2 / (2n)` is nonpositive on `[0, n]`.
//! `g` is a quadratic on each segment between consecutive breakpoints of `F`,
//! so its maximum sits at a breakpoint or at the vertex of a concave segment.

use crate::decision::{Certificate, Decision, Rule};
use crate::distribution::MixtureDistribution;
use crate::rational::Rational;

/// `g(k)` for the law `f` against `U[0, n]`.
pub fn stop_loss_gap(f: &MixtureDistribution, n: u32, k: &Rational) -> Rational {
    let nr = Rational::from(n);
    let reference = if k.is_negative() {
        &nr / Rational::from(2) - k
    } else if *k < nr {
        let d = &nr - k;
        &d * &d / (Rational::from(2) * &nr)
    } else {
        Rational::zero()
    };
    f.stop_loss_value(k) - reference
}

/// Maximizer and maximum of `g` over `[0, n]`.
pub fn max_stop_loss_gap(f: &MixtureDistribution, n: u32) -> (Rational, Rational) {
    let nr = Rational::from(n);
    let zero = Rational::zero();
    let mut pts: Vec<Rational> = f
        .breakpoints()
        .into_iter()
        .filter(|p| *p > zero && *p < nr)
        .collect();
    pts.push(zero);
    pts.push(nr.clone());
    pts.sort();
    pts.dedup();

    let two = Rational::from(2);
    let mut best_k = pts[0].clone();
    let mut best = stop_loss_gap(f, n, &best_k);
    let mut consider = |k: Rational, g: Rational| {
        if g > best {
            best = g;
            best_k = k;
        }
    };
    let values: Vec<Rational> = pts.iter().map(|k| stop_loss_gap(f, n, k)).collect();
    for (k, g) in pts.iter().zip(&values).skip(1) {
        consider(k.clone(), g.clone());
    }
    for (w, gv) in pts.windows(2).zip(values.windows(2)) {
        let (l, r) = (&w[0], &w[1]);
        let h = (r - l) / &two;
        let m = l + &h;
        let gm = stop_loss_gap(f, n, &m);
        // quadratic through (l, gl), (m, gm), (r, gr)
        let curv = (&gv[0] - &gm * &two + &gv[1]) / (&two * &h * &h);
        if !curv.is_negative() {
            continue;
        }
        let slope = (&gv[1] - &gv[0]) / (&two * &h);
        let vertex = &m - &slope / (&two * &curv);
        if vertex > *l && vertex < *r {
            let gv = stop_loss_gap(f, n, &vertex);
            consider(vertex, gv);
        }
    }
    (best_k, best)
}

/// Decides `F <=_cx U[0, n]`: mean `n/2`, support in `[0, n]`, and `g <= 0`.
pub fn convex_order_vs_uniform(f: &MixtureDistribution, n: u32) -> Decision {
    let nr = Rational::from(n);
    let expected = &nr / Rational::from(2);
    let mean = f.mean();
    if mean != expected {
        return Decision::non_member(
            Rule::SupportOrMeanViolation,
            Certificate::MeanViolation { mean, expected },
        );
    }
    let zero = Rational::zero();
    if let Some(point) = f.support_outside(&zero, &nr) {
        return Decision::non_member(
            Rule::SupportOrMeanViolation,
            Certificate::SupportViolation { point, lo: zero, hi: nr },
        );
    }
    let (k, gap) = max_stop_loss_gap(f, n);
    if gap.is_positive() {
        Decision::non_member(Rule::CxViolation, Certificate::StopLossGap { k, gap })
    } else {
        Decision::member(Rule::ConvexOrder, Certificate::None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::Verdict;
    use crate::distribution::{Atom, UniformPiece};
    use crate::rational::q;
    use proptest::prelude::*;

    fn r(n: i64) -> Rational {
        Rational::from(n)
    }

    #[test]
    fn reflexive_and_point_mass() {
        for n in 1..6 {
            let u = MixtureDistribution::uniform(r(0), r(n)).unwrap();
            assert!(convex_order_vs_uniform(&u, n as u32).is_member());
            let p = MixtureDistribution::point_mass(q(n, 2));
            assert!(convex_order_vs_uniform(&p, n as u32).is_member());
        }
    }

    #[test]
    fn extreme_two_point_fails() {
        let f = MixtureDistribution::discrete([(r(0), q(1, 2)), (r(2), q(1, 2))]).unwrap();
        let d = convex_order_vs_uniform(&f, 2);
        assert_eq!(d.verdict, Verdict::NonMember);
        assert_eq!(d.rule, Rule::CxViolation);
        // g(1) = 1/2 - 1/4
        assert_eq!(stop_loss_gap(&f, 2, &r(1)), q(1, 4));
        assert!(d.recheck(&f, 2));
    }

    #[test]
    fn tangency_family_is_on_the_boundary() {
        // {p/2: p, (1+p)/2: 1-p} has mean 1/2 and spread 1/2: tangent to U[0,1]
        for p in [q(1, 5), q(1, 2), q(2, 3)] {
            let f = MixtureDistribution::discrete([(&p / r(2), p.clone()), ((r(1) + &p) / r(2), r(1) - &p)]).unwrap();
            assert!(convex_order_vs_uniform(&f, 1).is_member());
            let (_, gap) = max_stop_loss_gap(&f, 1);
            assert!(gap.is_zero());
            assert_eq!(stop_loss_gap(&f, 1, &p), r(0));
            // any wider spread with the same mean breaks it
            let eps = q(1, 100);
            let lo = &p / r(2) - &eps * (r(1) - &p);
            let hi = (r(1) + &p) / r(2) + &eps * &p;
            let wide = MixtureDistribution::discrete([(lo, p.clone()), (hi, r(1) - &p)]).unwrap();
            assert_eq!(wide.mean(), q(1, 2));
            assert_eq!(convex_order_vs_uniform(&wide, 1).verdict, Verdict::NonMember);
        }
        let scaled = MixtureDistribution::discrete([(q(3, 4), q(1, 2)), (q(9, 4), q(1, 2))]).unwrap();
        assert!(convex_order_vs_uniform(&scaled, 3).is_member());
    }

    #[test]
    fn interior_vertex_is_found() {
        // U[0,1/2] + atom: the gap peaks strictly inside a segment
        let f = MixtureDistribution::new(
            vec![Atom::new(q(7, 4), q(1, 2))],
            vec![UniformPiece::new(r(0), q(1, 2), q(1, 2))],
        )
        .unwrap();
        assert_eq!(f.mean(), r(1));
        let d = convex_order_vs_uniform(&f, 2);
        assert_eq!(d.verdict, Verdict::NonMember);
        let brute = (0..=2000)
            .map(|i| stop_loss_gap(&f, 2, &q(i, 1000)))
            .max()
            .unwrap();
        let (_, exact) = max_stop_loss_gap(&f, 2);
        assert!(exact >= brute);
    }

    fn arb_centered(n: u32) -> impl Strategy<Value = MixtureDistribution> {
        let atom = (0i64..=64, 1i64..10);
        let piece = (0i64..60, 1i64..=16, 1i64..10);
        (prop::collection::vec(atom, 0..4), prop::collection::vec(piece, 0..3))
            .prop_filter("nonempty", |(a, p)| !a.is_empty() || !p.is_empty())
            .prop_filter_map("recentred law leaves [0, n]", move |(atoms, pieces)| {
                let total: i64 = atoms.iter().map(|a| a.1).sum::<i64>() + pieces.iter().map(|p| p.2).sum::<i64>();
                let scale = q(n as i64, 64);
                let raw = MixtureDistribution::new(
                    atoms.iter().map(|&(l, m)| Atom::new(&scale * r(l), q(m, total))).collect(),
                    pieces
                        .iter()
                        .map(|&(l, w, m)| UniformPiece::new(&scale * r(l), &scale * r((l + w).min(64)), q(m, total)))
                        .filter(|p| p.lo < p.hi)
                        .collect(),
                )
                .ok()?;
                let shift = q(n as i64, 2) - raw.mean();
                let f = raw.scale_shift(&r(1), &shift).ok()?;
                f.support_outside(&r(0), &r(n as i64)).is_none().then_some(f)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn grid_agrees_with_exact_on_random_laws(f in arb_centered(3)) {
            let grid_max = (0..=10_000i64)
                .map(|i| stop_loss_gap(&f, 3, &(r(3) * q(i, 10_000))))
                .max()
                .unwrap();
            let (_, exact_max) = max_stop_loss_gap(&f, 3);
            prop_assert!(exact_max >= grid_max);
            let exact = convex_order_vs_uniform(&f, 3);
            prop_assert_eq!(exact.is_member(), !exact_max.is_positive());
            if grid_max.is_positive() {
                prop_assert!(!exact.is_member());
            }
        }
    }
}
