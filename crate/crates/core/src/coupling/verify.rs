//! Exact pushforward checks for piecewise couplings.

use serde::{Deserialize, Serialize};

use super::{CouplingSegment, PiecewiseCoupling, Slope};
use crate::distribution::{Atom, MixtureDistribution, UniformPiece};
use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub margin_x_ok: bool,
    pub margin_y_ok: bool,
    pub sum_law_ok: bool,
    pub discrepancies: Vec<String>,
}

impl VerifyReport {
    pub fn all_ok(&self) -> bool {
        self.margin_x_ok && self.margin_y_ok && self.sum_law_ok
    }
}

/// Problems with `intervals` as a tiling of `[lo, hi]`, which must be sorted by start.
fn tiling_problems(intervals: &[(Rational, Rational)], lo: &Rational, hi: &Rational, what: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cursor = lo.clone();
    for (a, b) in intervals {
        if a >= b {
            out.push(format!("{what}: empty interval [{a}, {b})"));
            continue;
        }
        if *a < cursor {
            out.push(format!("{what}: [{a}, {b}) overlaps coverage up to {cursor}"));
        } else if *a > cursor {
            out.push(format!("{what}: gap [{cursor}, {a})"));
        }
        if *b > cursor {
            cursor = b.clone();
        }
    }
    if cursor < *hi {
        out.push(format!("{what}: gap [{cursor}, {hi})"));
    } else if cursor > *hi {
        out.push(format!("{what}: coverage runs past {hi} to {cursor}"));
    }
    if intervals.first().is_some_and(|(a, _)| a < lo) {
        out.push(format!("{what}: coverage starts below {lo}"));
    }
    out
}

fn check_map(c: &PiecewiseCoupling, segs: &[CouplingSegment], label: &str, report: &mut VerifyReport) {
    let mut xs: Vec<(Rational, Rational)> = segs.iter().map(|s| (s.x_lo.clone(), s.x_hi.clone())).collect();
    xs.sort();
    let x_problems = tiling_problems(&xs, &c.frame.x.0, &c.frame.x.1, &format!("{label} x"));
    let mut ys: Vec<(Rational, Rational)> = segs.iter().filter(|s| s.x_lo < s.x_hi).map(CouplingSegment::image).collect();
    ys.sort();
    let y_problems = tiling_problems(&ys, &c.frame.y.0, &c.frame.y.1, &format!("{label} y"));
    report.margin_x_ok &= x_problems.is_empty();
    report.margin_y_ok &= y_problems.is_empty();
    report.discrepancies.extend(x_problems);
    report.discrepancies.extend(y_problems);
}

/// Law of `X + Y(X)` with `X` uniform on the frame, assuming the x-tiling holds.
pub fn sum_law(c: &PiecewiseCoupling) -> Result<MixtureDistribution> {
    let len = c.frame.length();
    if !len.is_positive() {
        return Err(Error::InvalidCoupling("empty x margin".into()));
    }
    let two = Rational::from(2);
    let mut atoms = Vec::new();
    let mut pieces = Vec::new();
    for (w, segs) in c.maps() {
        for s in segs {
            let mass = &w * &s.length() / &len;
            match s.slope {
                Slope::Minus1 => atoms.push(Atom::new(s.intercept.clone(), mass)),
                Slope::Plus1 => pieces.push(UniformPiece::new(
                    &s.intercept + &two * &s.x_lo,
                    &s.intercept + &two * &s.x_hi,
                    mass,
                )),
            }
        }
    }
    MixtureDistribution::new(atoms, pieces)
        .map_err(|e| Error::InvalidCoupling(format!("segments do not carry unit mass: {e}")))
}

/// Exact check that both margins are uniform on the frame and that the sum
/// has law `target`. Overlaps and gaps are reported, never repaired.
pub fn verify_coupling(c: &PiecewiseCoupling, target: &MixtureDistribution) -> VerifyReport {
    let mut report = VerifyReport {
        margin_x_ok: true,
        margin_y_ok: true,
        sum_law_ok: false,
        discrepancies: Vec::new(),
    };
    if c.frame.length() != &c.frame.y.1 - &c.frame.y.0 {
        report.margin_y_ok = false;
        report.discrepancies.push("x and y margins have different lengths".into());
    }
    if let Some(m) = &c.mixture {
        if m.weight.is_negative() || m.weight > Rational::one() {
            report.margin_x_ok = false;
            report.discrepancies.push(format!("mixture weight {} outside [0, 1]", m.weight));
        }
    }
    for (i, (_, segs)) in c.maps().into_iter().enumerate() {
        let label = if i == 0 { "map" } else { "mixture map" };
        check_map(c, segs, label, &mut report);
    }
    if !report.margin_x_ok {
        report.discrepancies.push("sum law not computed: x margin is not a partition".into());
        return report;
    }
    match sum_law(c) {
        Ok(law) if law.same_law(target) => report.sum_law_ok = true,
        Ok(law) => {
            let probe = law.breakpoints().into_iter().chain(target.breakpoints());
            let worst = probe
                .map(|x| {
                    let d = (law.cdf(&x) - target.cdf(&x)).abs();
                    (d, x)
                })
                .max();
            let detail = worst.map(|(d, x)| format!(" (cdf differs by {d} at {x})")).unwrap_or_default();
            report.discrepancies.push(format!("sum law differs from target{detail}"));
        }
        Err(e) => report.discrepancies.push(e.to_string()),
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::Frame;
    use crate::rational::q;

    fn r(n: i64) -> Rational {
        Rational::from(n)
    }

    #[test]
    fn reference_couplings() {
        let co = PiecewiseCoupling::comonotonic();
        assert!(verify_coupling(&co, &MixtureDistribution::uniform(r(0), r(2)).unwrap()).all_ok());
        let anti = PiecewiseCoupling::antithetic();
        assert!(verify_coupling(&anti, &MixtureDistribution::point_mass(r(1))).all_ok());
        let wrong = verify_coupling(&anti, &MixtureDistribution::point_mass(q(1, 2)));
        assert!(wrong.margin_x_ok && wrong.margin_y_ok && !wrong.sum_law_ok);
    }

    #[test]
    fn overlaps_and_gaps_are_reported() {
        let overlap = PiecewiseCoupling::new(
            Frame::unit(),
            vec![
                CouplingSegment::constant_sum(r(0), q(3, 4), r(1)),
                CouplingSegment::constant_sum(q(1, 2), r(1), r(1)),
            ],
        );
        let rep = verify_coupling(&overlap, &MixtureDistribution::point_mass(r(1)));
        assert!(!rep.margin_x_ok && !rep.sum_law_ok);
        assert!(rep.discrepancies.iter().any(|d| d.contains("overlaps")));
        // x tiles but both y images land in [0, 1/2]
        let collide = PiecewiseCoupling::new(
            Frame::unit(),
            vec![
                CouplingSegment::new(r(0), q(1, 2), Slope::Plus1, r(0)),
                CouplingSegment::constant_sum(q(1, 2), r(1), r(1)),
            ],
        );
        let law = sum_law(&collide).unwrap();
        let rep = verify_coupling(&collide, &law);
        assert!(rep.margin_x_ok && !rep.margin_y_ok && rep.sum_law_ok);
        assert!(rep.discrepancies.iter().any(|d| d.contains("gap")));
    }
}
