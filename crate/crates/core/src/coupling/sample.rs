//! Seeded Monte Carlo sampling of couplings and a KS check of the sum.
//!
//! Samples are drawn in fixed-size shards, each from its own ChaCha stream
//! of the user seed, so output is identical for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PiecewiseCoupling, Slope};
use crate::distribution::MixtureDistribution;
use crate::error::{Error, Result};

const SHARD: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub samples: usize,
    pub seed: u64,
    pub ks: f64,
    /// Two-sided 99% DKW half-width.
    pub dkw_epsilon: f64,
    pub within_band: bool,
}

/// `sqrt(ln(2/alpha) / (2n))`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

struct FastSeg {
    x_lo: f64,
    plus: bool,
    intercept: f64,
}

struct FastCoupling {
    x_lo: f64,
    len: f64,
    alt_weight: f64,
    maps: Vec<Vec<FastSeg>>,
}

impl FastCoupling {
    fn new(c: &PiecewiseCoupling) -> Result<Self> {
        let maps: Vec<Vec<FastSeg>> = std::iter::once(&c.segments)
            .chain(c.mixture.as_ref().map(|m| &m.segments))
            .map(|segs| {
                let mut segs = segs.clone();
                segs.sort_by(|a, b| a.x_lo.cmp(&b.x_lo));
                let contiguous = segs.windows(2).all(|w| w[0].x_hi == w[1].x_lo)
                    && segs.first().is_some_and(|s| s.x_lo == c.frame.x.0)
                    && segs.last().is_some_and(|s| s.x_hi == c.frame.x.1);
                if !contiguous {
                    return Err(Error::InvalidCoupling("segments do not partition the x margin".into()));
                }
                Ok(segs
                    .iter()
                    .map(|s| FastSeg { x_lo: s.x_lo.to_f64(), plus: s.slope == Slope::Plus1, intercept: s.intercept.to_f64() })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(FastCoupling {
            x_lo: c.frame.x.0.to_f64(),
            len: c.frame.length().to_f64(),
            alt_weight: c.mixture.as_ref().map_or(0.0, |m| m.weight.to_f64()),
            maps,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
        let map = if self.maps.len() > 1 && rng.random::<f64>() < self.alt_weight { &self.maps[1] } else { &self.maps[0] };
        let x = self.x_lo + self.len * rng.random::<f64>();
        let i = map.partition_point(|s| s.x_lo <= x).saturating_sub(1);
        let s = &map[i];
        // keep constant-sum pieces exactly on their atom
        if s.plus {
            (x, s.intercept + x, s.intercept + 2.0 * x)
        } else {
            (x, s.intercept - x, s.intercept)
        }
    }
}

/// `n` draws of `(x, y, x + y)`, deterministic in `seed`.
pub fn sample_triples(c: &PiecewiseCoupling, n: usize, seed: u64) -> Result<Vec<(f64, f64, f64)>> {
    let fast = FastCoupling::new(c)?;
    let shards = n.div_ceil(SHARD);
    let parts: Vec<Vec<(f64, f64, f64)>> = (0..shards)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let count = SHARD.min(n - i * SHARD);
            (0..count).map(|_| fast.draw(&mut rng)).collect()
        })
        .collect();
    Ok(parts.concat())
}

struct FastLaw {
    atoms: Vec<(f64, f64)>,
    pieces: Vec<(f64, f64, f64)>,
}

impl FastLaw {
    fn new(f: &MixtureDistribution) -> Self {
        FastLaw {
            atoms: f.atoms().iter().map(|a| (a.loc.to_f64(), a.mass.to_f64())).collect(),
            pieces: f.pieces().iter().map(|p| (p.lo.to_f64(), p.hi.to_f64(), p.weight.to_f64())).collect(),
        }
    }

    /// `(P(S < x), P(S <= x))`.
    fn cdf_pair(&self, x: f64) -> (f64, f64) {
        let cont: f64 = self
            .pieces
            .iter()
            .map(|&(lo, hi, w)| w * ((x - lo) / (hi - lo)).clamp(0.0, 1.0))
            .sum();
        let below: f64 = self.atoms.iter().filter(|a| a.0 < x).map(|a| a.1).sum();
        let at: f64 = self.atoms.iter().filter(|a| a.0 == x).map(|a| a.1).sum();
        (cont + below, cont + below + at)
    }
}

/// Sup-distance between the empirical CDF of `sums` and `target`, evaluated
/// on both sides of every jump of either function.
pub fn ks_distance(sums: &mut [f64], target: &MixtureDistribution) -> f64 {
    sums.sort_unstable_by(f64::total_cmp);
    let law = FastLaw::new(target);
    let n = sums.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < sums.len() {
        let v = sums[i];
        let mut j = i;
        while j < sums.len() && sums[j] == v {
            j += 1;
        }
        let (left, right) = law.cdf_pair(v);
        worst = worst.max((i as f64 / n - left).abs()).max((j as f64 / n - right).abs());
        i = j;
    }
    // target jumps that no sample hit
    for &(loc, _) in &law.atoms {
        let k = sums.partition_point(|&s| s < loc);
        let m = sums.partition_point(|&s| s <= loc);
        let (left, right) = law.cdf_pair(loc);
        worst = worst.max((k as f64 / n - left).abs()).max((m as f64 / n - right).abs());
    }
    worst
}

/// KS distance of `n` sampled sums against `target`, with the 99% DKW band.
pub fn monte_carlo_ks(c: &PiecewiseCoupling, target: &MixtureDistribution, n: usize, seed: u64) -> Result<McReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let mut sums: Vec<f64> = sample_triples(c, n, seed)?.into_iter().map(|t| t.2).collect();
    let ks = ks_distance(&mut sums, target);
    let eps = dkw_epsilon(n, 0.01);
    Ok(McReport { samples: n, seed, ks, dkw_epsilon: eps, within_band: ks <= eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::synthesize_biatomic;
    use crate::rational::{q, Rational};

    #[test]
    fn dkw_arithmetic() {
        assert!((dkw_epsilon(1_000_000, 0.01) - 1.6276e-3).abs() < 1e-6);
        assert!(dkw_epsilon(100_000, 0.01) < 5.2e-3);
    }

    #[test]
    fn deterministic_across_runs() {
        let c = PiecewiseCoupling::comonotonic();
        let a = sample_triples(&c, 200_000, 7).unwrap();
        let b = sample_triples(&c, 200_000, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_triples(&c, 200_000, 8).unwrap());
        assert!(a.iter().all(|&(x, y, s)| (0.0..1.0).contains(&x) && x == y && s == x + y));
    }

    #[test]
    fn reference_couplings_sit_inside_the_band() {
        let anti = PiecewiseCoupling::antithetic();
        let rep = monte_carlo_ks(&anti, &MixtureDistribution::point_mass(Rational::one()), 100_000, 42).unwrap();
        assert_eq!(rep.ks, 0.0);
        let co = PiecewiseCoupling::comonotonic();
        let u02 = MixtureDistribution::uniform(q(0, 1), q(2, 1)).unwrap();
        let rep = monte_carlo_ks(&co, &u02, 100_000, 42).unwrap();
        assert!(rep.within_band, "{rep:?}");
        let wrong = monte_carlo_ks(&co, &MixtureDistribution::uniform(q(0, 1), q(1, 1)).unwrap(), 100_000, 42).unwrap();
        assert!(!wrong.within_band);
    }

    #[test]
    fn atoms_are_hit_exactly() {
        let s = synthesize_biatomic(3, &q(5, 6)).unwrap();
        let target = s.unit.target.clone().unwrap();
        let rep = monte_carlo_ks(&s.unit, &target, 50_000, 1).unwrap();
        assert!(rep.within_band, "{rep:?}");
        // one missing atom is caught even though no sample lands on it
        let shifted = MixtureDistribution::discrete([(q(5, 6), q(1, 2)), (q(4, 3), q(1, 2))]).unwrap();
        assert_eq!(target, MixtureDistribution::discrete([(q(5, 6), q(1, 2)), (q(7, 6), q(1, 2))]).unwrap());
        assert!(!monte_carlo_ks(&s.unit, &shifted, 50_000, 1).unwrap().within_band);
    }
}
