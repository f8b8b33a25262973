//! Finite mixtures of point masses and uniform pieces, in exact arithmetic.
//!
//! Every law the toolkit handles (targets, attaining distributions, sum laws
//! of couplings, discretized grids) is a [`MixtureDistribution`]. Pieces may
//! overlap; all functionals integrate additively over the components, and
//! [`MixtureDistribution::step_density`] gives the canonical density when a
//! shape check needs it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub loc: Rational,
    pub mass: Rational,
}

impl Atom {
    pub fn new(loc: Rational, mass: Rational) -> Self {
        Atom { loc, mass }
    }
}

/// `weight` of probability spread uniformly over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformPiece {
    pub lo: Rational,
    pub hi: Rational,
    pub weight: Rational,
}

impl UniformPiece {
    pub fn new(lo: Rational, hi: Rational, weight: Rational) -> Self {
        UniformPiece { lo, hi, weight }
    }

    pub fn density(&self) -> Rational {
        &self.weight / &(&self.hi - &self.lo)
    }

    /// Probability mass of the piece in `(-inf, x]`.
    fn mass_up_to(&self, x: &Rational) -> Rational {
        if *x <= self.lo {
            Rational::zero()
        } else if *x >= self.hi {
            self.weight.clone()
        } else {
            &self.weight * &(x - &self.lo) / (&self.hi - &self.lo)
        }
    }
}

/// `E[(X - k)+]` at threshold `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopLossValue {
    pub k: Rational,
    pub value: Rational,
}

/// Raw JSON layout; validated into [`MixtureDistribution`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawMixture {
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default)]
    pieces: Vec<UniformPiece>,
}

/// A probability law made of finitely many atoms and weighted uniform pieces.
///
/// Construction normalizes: zero-mass atoms and zero-weight pieces are
/// dropped, atoms at the same location are merged, atoms are sorted by
/// location and pieces by `lo`. The total mass is exactly one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture", into = "RawMixture")]
pub struct MixtureDistribution {
    atoms: Vec<Atom>,
    pieces: Vec<UniformPiece>,
}

impl TryFrom<RawMixture> for MixtureDistribution {
    type Error = Error;

    fn try_from(raw: RawMixture) -> Result<Self> {
        MixtureDistribution::new(raw.atoms, raw.pieces)
    }
}

impl From<MixtureDistribution> for RawMixture {
    fn from(d: MixtureDistribution) -> Self {
        RawMixture {
            atoms: d.atoms,
            pieces: d.pieces,
        }
    }
}

impl MixtureDistribution {
    /// Parses the JSON layout. Syntax and shape problems come back as
    /// [`Error::Json`], a law that is not a probability as
    /// [`Error::InvalidDistribution`].
    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawMixture = serde_json::from_str(s)?;
        Self::try_from(raw)
    }

    pub fn new(atoms: Vec<Atom>, pieces: Vec<UniformPiece>) -> Result<Self> {
        let (atoms, pieces) = normalize(atoms, pieces)?;
        let total: Rational = atoms
            .iter()
            .map(|a| &a.mass)
            .chain(pieces.iter().map(|p| &p.weight))
            .sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "total mass is {total}, expected 1"
            )));
        }
        Ok(MixtureDistribution { atoms, pieces })
    }

    pub fn point_mass(loc: Rational) -> Self {
        MixtureDistribution {
            atoms: vec![Atom::new(loc, Rational::one())],
            pieces: Vec::new(),
        }
    }

    /// `U[lo, hi]`; `lo == hi` gives the point mass.
    pub fn uniform(lo: Rational, hi: Rational) -> Result<Self> {
        if lo == hi {
            return Ok(Self::point_mass(lo));
        }
        Self::new(Vec::new(), vec![UniformPiece::new(lo, hi, Rational::one())])
    }

    /// Purely atomic law from `(location, mass)` pairs.
    pub fn discrete<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Rational, Rational)>,
    {
        Self::new(
            atoms.into_iter().map(|(l, m)| Atom::new(l, m)).collect(),
            Vec::new(),
        )
    }

    /// Absolutely continuous law from `(lo, hi, weight)` pieces.
    pub fn step<I>(pieces: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Rational, Rational, Rational)>,
    {
        Self::new(
            Vec::new(),
            pieces
                .into_iter()
                .map(|(lo, hi, w)| UniformPiece::new(lo, hi, w))
                .collect(),
        )
    }

    /// `Σ λ_i F_i` for nonnegative weights summing to one.
    pub fn mixture(components: &[(Rational, &MixtureDistribution)]) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut pieces = Vec::new();
        for (w, d) in components {
            if w.is_negative() {
                return Err(Error::InvalidParameter(format!(
                    "negative mixture weight {w}"
                )));
            }
            atoms.extend(d.atoms.iter().map(|a| Atom::new(a.loc.clone(), &a.mass * w)));
            pieces.extend(
                d.pieces
                    .iter()
                    .map(|p| UniformPiece::new(p.lo.clone(), p.hi.clone(), &p.weight * w)),
            );
        }
        Self::new(atoms, pieces)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[UniformPiece] {
        &self.pieces
    }

    pub fn is_atomless(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_discrete(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn mean(&self) -> Rational {
        let two = Rational::from(2);
        let from_atoms: Rational = self.atoms.iter().map(|a| &a.loc * &a.mass).sum();
        let from_pieces: Rational = self
            .pieces
            .iter()
            .map(|p| &p.weight * &(&p.lo + &p.hi) / &two)
            .sum();
        from_atoms + from_pieces
    }

    pub fn stop_loss(&self, k: &Rational) -> StopLossValue {
        StopLossValue {
            k: k.clone(),
            value: self.stop_loss_value(k),
        }
    }

    pub(crate) fn stop_loss_value(&self, k: &Rational) -> Rational {
        let mut total = Rational::zero();
        for a in &self.atoms {
            if a.loc > *k {
                total += (&a.loc - k) * &a.mass;
            }
        }
        let two = Rational::from(2);
        for p in &self.pieces {
            if *k <= p.lo {
                total += &p.weight * &((&p.lo + &p.hi) / &two - k);
            } else if *k < p.hi {
                let d = &p.hi - k;
                total += &p.weight * &(&d * &d) / (&two * &(&p.hi - &p.lo));
            }
        }
        total
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: &Rational) -> Rational {
        let atoms: Rational = self
            .atoms
            .iter()
            .filter(|a| a.loc <= *x)
            .map(|a| &a.mass)
            .sum();
        let pieces: Rational = self.pieces.iter().map(|p| p.mass_up_to(x)).sum();
        atoms + pieces
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: &Rational) -> Rational {
        &self.cdf(x) - &self.atom_mass_at(x)
    }

    pub fn atom_mass_at(&self, x: &Rational) -> Rational {
        self.atoms
            .binary_search_by(|a| a.loc.cmp(x))
            .map(|i| self.atoms[i].mass.clone())
            .unwrap_or_default()
    }

    /// Probability of the open interval `(lo, hi)`.
    pub fn prob_open(&self, lo: &Rational, hi: &Rational) -> Rational {
        if hi <= lo {
            return Rational::zero();
        }
        &self.cdf_left(hi) - &self.cdf(lo)
    }

    /// Probability of the closed interval `[lo, hi]`.
    pub fn prob_closed(&self, lo: &Rational, hi: &Rational) -> Rational {
        if hi < lo {
            return Rational::zero();
        }
        &self.cdf(hi) - &self.cdf_left(lo)
    }

    /// Sorted, deduplicated atom locations and piece endpoints.
    pub fn breakpoints(&self) -> Vec<Rational> {
        let mut pts: Vec<Rational> = self
            .atoms
            .iter()
            .map(|a| a.loc.clone())
            .chain(self.pieces.iter().flat_map(|p| [p.lo.clone(), p.hi.clone()]))
            .collect();
        pts.sort();
        pts.dedup();
        pts
    }

    /// `F^{-1}(t) = inf{x : F(x) >= t}` for `t` in `(0, 1]`.
    pub fn quantile(&self, t: &Rational) -> Result<Rational> {
        if !t.is_positive() || *t > Rational::one() {
            return Err(Error::Domain(format!("quantile level {t} not in (0, 1]")));
        }
        let pts = self.breakpoints();
        let mut prev: Option<(Rational, Rational)> = None;
        for x in pts {
            let fx = self.cdf(&x);
            if fx >= *t {
                let left = self.cdf_left(&x);
                if let Some((px, pf)) = prev {
                    if left >= *t {
                        // F is continuous and strictly increasing on (px, x) here.
                        let frac = (t - &pf) / (&left - &pf);
                        return Ok(&px + &(frac * (&x - &px)));
                    }
                }
                return Ok(x);
            }
            prev = Some((x, fx));
        }
        unreachable!("cdf reaches 1 at the last breakpoint")
    }

    /// Law of `scale * X + shift`.
    pub fn scale_shift(&self, scale: &Rational, shift: &Rational) -> Result<Self> {
        if scale.is_zero() {
            return Err(Error::InvalidParameter("zero scale".into()));
        }
        let map = |x: &Rational| scale * x + shift;
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom::new(map(&a.loc), a.mass.clone()))
            .collect();
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let (a, b) = (map(&p.lo), map(&p.hi));
                if a < b {
                    UniformPiece::new(a, b, p.weight.clone())
                } else {
                    UniformPiece::new(b, a, p.weight.clone())
                }
            })
            .collect();
        Self::new(atoms, pieces)
    }

    /// Law of `center2 - X`, i.e. the reflection about `center2 / 2`.
    pub fn reflect(&self, center2: &Rational) -> Self {
        self.scale_shift(&Rational::from(-1), center2)
            .expect("reflection is a valid affine map")
    }

    pub fn support_min(&self) -> Rational {
        self.atoms
            .iter()
            .map(|a| &a.loc)
            .chain(self.pieces.iter().map(|p| &p.lo))
            .min()
            .cloned()
            .expect("nonempty law")
    }

    pub fn support_max(&self) -> Rational {
        self.atoms
            .iter()
            .map(|a| &a.loc)
            .chain(self.pieces.iter().map(|p| &p.hi))
            .max()
            .cloned()
            .expect("nonempty law")
    }

    /// A support point outside the closed interval `[lo, hi]`, if any.
    pub fn support_outside(&self, lo: &Rational, hi: &Rational) -> Option<Rational> {
        let min = self.support_min();
        if min < *lo {
            return Some(min);
        }
        let max = self.support_max();
        if max > *hi {
            return Some(max);
        }
        None
    }

    /// Canonical density of the continuous part: maximal intervals of constant
    /// positive density, as `(lo, hi, density)` sorted by `lo`.
    pub fn step_density(&self) -> Vec<(Rational, Rational, Rational)> {
        let mut cuts: Vec<Rational> = self
            .pieces
            .iter()
            .flat_map(|p| [p.lo.clone(), p.hi.clone()])
            .collect();
        cuts.sort();
        cuts.dedup();
        let densities: Vec<Rational> = self.pieces.iter().map(UniformPiece::density).collect();
        let mut out: Vec<(Rational, Rational, Rational)> = Vec::new();
        for w in cuts.windows(2) {
            let (l, r) = (&w[0], &w[1]);
            let d: Rational = self
                .pieces
                .iter()
                .zip(&densities)
                .filter(|(p, _)| p.lo <= *l && p.hi >= *r)
                .map(|(_, d)| d)
                .sum();
            if d.is_zero() {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.1 == *l && last.2 == d => last.1 = r.clone(),
                _ => out.push((l.clone(), r.clone(), d)),
            }
        }
        out
    }

    /// Equality as probability laws (overlapping pieces compared via their
    /// canonical density).
    pub fn same_law(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.step_density() == other.step_density()
    }
}

fn normalize(atoms: Vec<Atom>, pieces: Vec<UniformPiece>) -> Result<(Vec<Atom>, Vec<UniformPiece>)> {
    let mut out_atoms: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        if a.mass.is_negative() {
            return Err(Error::InvalidDistribution(format!(
                "atom at {} has negative mass {}",
                a.loc, a.mass
            )));
        }
        if !a.mass.is_zero() {
            out_atoms.push(a);
        }
    }
    out_atoms.sort_by(|a, b| a.loc.cmp(&b.loc));
    let mut merged: Vec<Atom> = Vec::with_capacity(out_atoms.len());
    for a in out_atoms {
        match merged.last_mut() {
            Some(last) if last.loc == a.loc => last.mass += &a.mass,
            _ => merged.push(a),
        }
    }
    let mut out_pieces = Vec::with_capacity(pieces.len());
    for p in pieces {
        if p.lo >= p.hi {
            return Err(Error::InvalidDistribution(format!(
                "uniform piece [{}, {}] is empty",
                p.lo, p.hi
            )));
        }
        if p.weight.is_negative() {
            return Err(Error::InvalidDistribution(format!(
                "uniform piece [{}, {}] has negative weight {}",
                p.lo, p.hi, p.weight
            )));
        }
        if !p.weight.is_zero() {
            out_pieces.push(p);
        }
    }
    out_pieces.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| a.hi.cmp(&b.hi)));
    Ok((merged, out_pieces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn r(n: i64) -> Rational {
        Rational::from(n)
    }

    #[test]
    fn means() {
        assert_eq!(MixtureDistribution::uniform(r(0), r(1)).unwrap().mean(), q(1, 2));
        let sym = MixtureDistribution::discrete([(q(1, 2), q(1, 2)), (q(3, 2), q(1, 2))]).unwrap();
        assert_eq!(sym.mean(), r(1));
    }

    #[test]
    fn stop_loss_examples() {
        for n in 1..5 {
            let u = MixtureDistribution::uniform(r(0), r(n)).unwrap();
            for j in 0..=8 {
                let k = q(j * n, 8);
                let expect = (r(n) - &k) * (r(n) - &k) / r(2 * n);
                assert_eq!(u.stop_loss(&k).value, expect);
            }
        }
        assert_eq!(MixtureDistribution::point_mass(r(1)).stop_loss(&r(0)).value, r(1));
        // bi-atomic {a: p, b: 1-p} with k in [a, b]
        let (a, b, p) = (q(1, 4), q(3, 4), q(1, 3));
        let bi = MixtureDistribution::discrete([(a.clone(), p.clone()), (b.clone(), r(1) - &p)]).unwrap();
        for j in 0..=4 {
            let k = &a + &((&b - &a) * q(j, 4));
            assert_eq!(bi.stop_loss(&k).value, (&b - &k) * (r(1) - &p));
        }
    }

    #[test]
    fn quantile_examples() {
        let u = MixtureDistribution::uniform(r(0), r(1)).unwrap();
        assert_eq!(u.quantile(&q(1, 2)).unwrap(), q(1, 2));
        let coin = MixtureDistribution::discrete([(r(0), q(1, 2)), (r(1), q(1, 2))]).unwrap();
        assert_eq!(coin.quantile(&q(1, 2)).unwrap(), r(0));
        assert_eq!(coin.quantile(&q(3, 4)).unwrap(), r(1));
        assert_eq!(coin.quantile(&r(1)).unwrap(), r(1));
        assert!(coin.quantile(&r(0)).is_err());
        assert!(coin.quantile(&q(5, 4)).is_err());
        let gap = MixtureDistribution::step([(r(0), r(1), q(1, 2)), (r(2), r(3), q(1, 2))]).unwrap();
        assert_eq!(gap.quantile(&q(1, 2)).unwrap(), r(1));
        assert_eq!(gap.quantile(&q(3, 4)).unwrap(), q(5, 2));
    }

    #[test]
    fn scale_shift_examples() {
        let u = MixtureDistribution::uniform(r(0), r(1)).unwrap();
        assert_eq!(u.scale_shift(&r(2), &r(0)).unwrap(), MixtureDistribution::uniform(r(0), r(2)).unwrap());
        assert_eq!(u.scale_shift(&r(-1), &r(1)).unwrap(), u);
        let two = MixtureDistribution::discrete([(q(1, 3), q(1, 4)), (q(5, 3), q(3, 4))]).unwrap();
        let swapped = MixtureDistribution::discrete([(q(1, 3), q(3, 4)), (q(5, 3), q(1, 4))]).unwrap();
        assert_eq!(two.scale_shift(&r(-1), &r(2)).unwrap(), swapped);
        assert!(u.scale_shift(&r(0), &r(1)).is_err());
    }

    #[test]
    fn construction_normalizes_and_validates() {
        let d = MixtureDistribution::new(
            vec![
                Atom::new(r(1), q(1, 4)),
                Atom::new(r(0), r(0)),
                Atom::new(r(1), q(1, 4)),
            ],
            vec![UniformPiece::new(r(2), r(3), q(1, 2))],
        )
        .unwrap();
        assert_eq!(d.atoms(), &[Atom::new(r(1), q(1, 2))]);
        assert!(MixtureDistribution::discrete([(r(0), q(1, 2))]).is_err());
        assert!(MixtureDistribution::discrete([(r(0), q(3, 2)), (r(1), q(-1, 2))]).is_err());
        assert!(MixtureDistribution::step([(r(1), r(1), r(1))]).is_err());
    }

    #[test]
    fn json_schema() {
        let d: MixtureDistribution = serde_json::from_str(
            r#"{"atoms": [{"loc": "1/2", "mass": "1/2"}], "pieces": [{"lo": 0, "hi": "1", "weight": "1/2"}]}"#,
        )
        .unwrap();
        assert_eq!(d.mean(), q(1, 2));
        let text = serde_json::to_string(&d).unwrap();
        let back: MixtureDistribution = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<MixtureDistribution>(r#"{"atoms": [{"loc": 0, "mass": "1/2"}]}"#).is_err());
        assert!(matches!(
            MixtureDistribution::from_json(r#"{"atoms": [{"loc": 0, "mass": "1/2"}]}"#),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(MixtureDistribution::from_json(r#"{"atoms": [{"loc": 0}]}"#), Err(Error::Json(_))));
        assert!(matches!(MixtureDistribution::from_json("{"), Err(Error::Json(_))));
    }

    #[test]
    fn step_density_merges_overlaps() {
        let a = MixtureDistribution::step([(r(0), r(2), q(1, 2)), (r(1), r(2), q(1, 4)), (r(2), r(3), q(1, 4))]).unwrap();
        assert_eq!(
            a.step_density(),
            vec![(r(0), r(1), q(1, 4)), (r(1), r(2), q(1, 2)), (r(2), r(3), q(1, 4))]
        );
        let b = MixtureDistribution::step([(r(0), r(1), q(1, 4)), (r(1), r(2), q(1, 2)), (r(2), r(3), q(1, 4))]).unwrap();
        assert!(a.same_law(&b));
        let c = MixtureDistribution::step([(r(0), r(2), q(1, 2)), (r(2), r(3), q(1, 2))]).unwrap();
        let d = MixtureDistribution::step([(r(0), r(1), q(1, 4)), (r(1), r(2), q(1, 4)), (r(2), r(3), q(1, 2))]).unwrap();
        assert_eq!(d.step_density(), vec![(r(0), r(2), q(1, 4)), (r(2), r(3), q(1, 2))]);
        assert!(c.same_law(&d) && !a.same_law(&c));
    }

    pub(crate) fn arb_mixture() -> impl Strategy<Value = MixtureDistribution> {
        let atom = (0i64..40, 1i64..10);
        let piece = (0i64..40, 1i64..20, 1i64..10);
        (prop::collection::vec(atom, 0..4), prop::collection::vec(piece, 0..3))
            .prop_filter("nonempty", |(a, p)| !a.is_empty() || !p.is_empty())
            .prop_map(|(atoms, pieces)| {
                let total: i64 = atoms.iter().map(|a| a.1).sum::<i64>() + pieces.iter().map(|p| p.2).sum::<i64>();
                MixtureDistribution::new(
                    atoms.iter().map(|&(l, m)| Atom::new(q(l, 8), q(m, total))).collect(),
                    pieces
                        .iter()
                        .map(|&(l, w, m)| UniformPiece::new(q(l, 8), q(l + w, 8), q(m, total)))
                        .collect(),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn stop_loss_is_convex_nonincreasing_with_correct_tails(d in arb_mixture()) {
            let lo = d.support_min();
            let hi = d.support_max();
            let mean = d.mean();
            prop_assert_eq!(d.stop_loss(&lo).value, &mean - &lo);
            prop_assert_eq!(d.stop_loss(&(&lo - &r(1))).value, &mean - &lo + r(1));
            prop_assert!(d.stop_loss(&hi).value.is_zero());
            let grid: Vec<Rational> = (-8..=72).map(|j| q(j, 16)).collect();
            let vals: Vec<Rational> = grid.iter().map(|k| d.stop_loss(k).value).collect();
            for (k, v) in grid.iter().zip(&vals) {
                prop_assert!(!v.is_negative());
                prop_assert!(*v >= &mean - k);
            }
            for w in vals.windows(3) {
                prop_assert!(w[1] <= w[0]);
                // equally spaced: convexity is a nonnegative second difference
                prop_assert!(&w[0] + &w[2] >= &w[1] * &r(2));
            }
        }

        #[test]
        fn quantile_cdf_galois_connection(d in arb_mixture(), tn in 1i64..=64, xn in -8i64..=72) {
            let t = q(tn, 64);
            let x = q(xn, 16);
            let qt = d.quantile(&t).unwrap();
            prop_assert_eq!(d.cdf(&x) >= t, qt <= x);
        }

        #[test]
        fn scale_shift_maps_moments(d in arb_mixture(), s in prop_oneof![-4i64..=-1, 1i64..=4], t in -8i64..8) {
            let (s, t) = (q(s, 2), q(t, 3));
            let e = d.scale_shift(&s, &t).unwrap();
            let total: Rational = e.atoms().iter().map(|a| &a.mass).chain(e.pieces().iter().map(|p| &p.weight)).sum();
            prop_assert!(total.is_one());
            prop_assert_eq!(e.mean(), &s * &d.mean() + &t);
        }
    }
}
