//! Explicit two-margin couplings `Y = Y(X)` built from slope `+-1` pieces.
//!
//! A coupling lives in a frame `X ~ U[x_lo, x_hi]`, `Y ~ U[y_lo, y_hi]` with
//! equal lengths, so every slope `+-1` piece carries density onto its image
//! unchanged. An optional second map mixed in with probability `weight`
//! realizes targets between two deterministic extremes.

mod sample;
mod synth;
mod verify;

pub use sample::{dkw_epsilon, ks_distance, monte_carlo_ks, sample_triples, McReport};
pub use synth::{
    synthesize_biatomic, synthesize_biatomic_for_gap, synthesize_for_target, synthesize_triatomic,
    Synthesis, TriAtomicParams, TriCase,
};
pub use verify::{sum_law, verify_coupling, VerifyReport};

use serde::{Deserialize, Serialize};

use crate::distribution::MixtureDistribution;
use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Slope {
    Plus1,
    Minus1,
}

impl Slope {
    pub fn sign(self) -> i64 {
        match self {
            Slope::Plus1 => 1,
            Slope::Minus1 => -1,
        }
    }
}

impl TryFrom<i64> for Slope {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Slope::Plus1),
            -1 => Ok(Slope::Minus1),
            other => Err(Error::InvalidCoupling(format!("slope must be 1 or -1, got {other}"))),
        }
    }
}

impl From<Slope> for i64 {
    fn from(s: Slope) -> i64 {
        s.sign()
    }
}

/// `Y = intercept + slope * X` for `X` in `[x_lo, x_hi)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingSegment {
    pub x_lo: Rational,
    pub x_hi: Rational,
    pub slope: Slope,
    pub intercept: Rational,
}

impl CouplingSegment {
    pub fn new(x_lo: Rational, x_hi: Rational, slope: Slope, intercept: Rational) -> Self {
        CouplingSegment { x_lo, x_hi, slope, intercept }
    }

    /// Antithetic piece: `X + Y = sum` on `[x_lo, x_hi)`.
    pub fn constant_sum(x_lo: Rational, x_hi: Rational, sum: Rational) -> Self {
        Self::new(x_lo, x_hi, Slope::Minus1, sum)
    }

    /// Image of `[x_lo, x_hi)` as a closed interval (endpoints are null).
    pub fn image(&self) -> (Rational, Rational) {
        match self.slope {
            Slope::Plus1 => (&self.intercept + &self.x_lo, &self.intercept + &self.x_hi),
            Slope::Minus1 => (&self.intercept - &self.x_hi, &self.intercept - &self.x_lo),
        }
    }

    pub fn length(&self) -> Rational {
        &self.x_hi - &self.x_lo
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub x: (Rational, Rational),
    pub y: (Rational, Rational),
}

impl Frame {
    pub fn new(x: (Rational, Rational), y: (Rational, Rational)) -> Self {
        Frame { x, y }
    }

    pub fn unit() -> Self {
        Frame::new((Rational::zero(), Rational::one()), (Rational::zero(), Rational::one()))
    }

    /// `X ~ U[0, t]`, `Y ~ U[-t, 0]`.
    pub fn native(t: &Rational) -> Self {
        Frame::new((Rational::zero(), t.clone()), (-t, Rational::zero()))
    }

    pub fn length(&self) -> Rational {
        &self.x.1 - &self.x.0
    }
}

/// Alternative map used with probability `weight`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingMixture {
    pub weight: Rational,
    pub segments: Vec<CouplingSegment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiecewiseCoupling {
    pub frame: Frame,
    pub segments: Vec<CouplingSegment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<CouplingMixture>,
    /// Declared law of `X + Y`, if the producer attached one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<MixtureDistribution>,
}

impl PiecewiseCoupling {
    pub fn new(frame: Frame, segments: Vec<CouplingSegment>) -> Self {
        PiecewiseCoupling { frame, segments, mixture: None, target: None }
    }

    /// `Y = X` on the unit square; the sum is `U[0, 2]`.
    pub fn comonotonic() -> Self {
        let seg = CouplingSegment::new(Rational::zero(), Rational::one(), Slope::Plus1, Rational::zero());
        Self::new(Frame::unit(), vec![seg])
    }

    /// `Y = 1 - X` on the unit square; the sum is `1`.
    pub fn antithetic() -> Self {
        Self::new(
            Frame::unit(),
            vec![CouplingSegment::constant_sum(Rational::zero(), Rational::one(), Rational::one())],
        )
    }

    pub fn with_target(mut self, target: MixtureDistribution) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_mixture(mut self, weight: Rational, segments: Vec<CouplingSegment>) -> Self {
        self.mixture = Some(CouplingMixture { weight, segments });
        self
    }

    /// `(weight, segments)` for each map with positive probability.
    pub fn maps(&self) -> Vec<(Rational, &[CouplingSegment])> {
        match &self.mixture {
            None => vec![(Rational::one(), &self.segments[..])],
            Some(m) => {
                let mut out = Vec::with_capacity(2);
                let main = Rational::one() - &m.weight;
                if main.is_positive() {
                    out.push((main, &self.segments[..]));
                }
                if m.weight.is_positive() {
                    out.push((m.weight.clone(), &m.segments[..]));
                }
                out
            }
        }
    }

    /// Same coupling in the unit frame via `X' = (X - x_lo)/L`, `Y' = (Y - y_lo)/L`.
    /// The target, if any, maps through `S' = (S - x_lo - y_lo)/L`.
    pub fn to_unit_frame(&self) -> Result<Self> {
        let len = self.frame.length();
        if len != &self.frame.y.1 - &self.frame.y.0 || !len.is_positive() {
            return Err(Error::InvalidCoupling("frame margins must have equal positive length".into()));
        }
        let (xl, yl) = (&self.frame.x.0, &self.frame.y.0);
        let map = |segs: &[CouplingSegment]| -> Vec<CouplingSegment> {
            segs.iter()
                .map(|s| {
                    let shift = Rational::from(s.slope.sign()) * xl + &s.intercept - yl;
                    CouplingSegment::new((&s.x_lo - xl) / &len, (&s.x_hi - xl) / &len, s.slope, shift / &len)
                })
                .collect()
        };
        let target = match &self.target {
            Some(t) => Some(t.scale_shift(&len.recip(), &(-(xl + yl) / &len))?),
            None => None,
        };
        Ok(PiecewiseCoupling {
            frame: Frame::unit(),
            segments: map(&self.segments),
            mixture: self.mixture.as_ref().map(|m| CouplingMixture { weight: m.weight.clone(), segments: map(&m.segments) }),
            target,
        })
    }

    /// Coupling of `(-Y, -X)`, whose sum is `-(X + Y)`.
    pub fn reflect(&self) -> Self {
        let flip = |segs: &[CouplingSegment]| -> Vec<CouplingSegment> {
            let mut out: Vec<CouplingSegment> = segs
                .iter()
                .map(|s| {
                    let d = &s.intercept;
                    match s.slope {
                        Slope::Minus1 => CouplingSegment::new(&s.x_lo - d, &s.x_hi - d, Slope::Minus1, -d),
                        Slope::Plus1 => CouplingSegment::new(-(&s.x_hi + d), -(&s.x_lo + d), Slope::Plus1, d.clone()),
                    }
                })
                .collect();
            out.sort_by(|a, b| a.x_lo.cmp(&b.x_lo));
            out
        };
        let frame = Frame::new(
            (-&self.frame.y.1, -&self.frame.y.0),
            (-&self.frame.x.1, -&self.frame.x.0),
        );
        PiecewiseCoupling {
            frame,
            segments: flip(&self.segments),
            mixture: self.mixture.as_ref().map(|m| CouplingMixture { weight: m.weight.clone(), segments: flip(&m.segments) }),
            target: self.target.as_ref().map(|t| t.reflect(&Rational::zero())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn json_layout() {
        let c = PiecewiseCoupling::antithetic();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["frame"]["x"], serde_json::json!(["0", "1"]));
        assert_eq!(v["segments"][0]["slope"], -1);
        assert!(v.get("mixture").is_none());
        let back: PiecewiseCoupling = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"frame": {"x": [0, 1], "y": [0, 1]}, "segments": [{"x_lo": 0, "x_hi": 1, "slope": 2, "intercept": 0}]}"#;
        assert!(serde_json::from_str::<PiecewiseCoupling>(bad).is_err());
    }

    #[test]
    fn reflection_is_an_involution_and_negates_the_sum() {
        let c = PiecewiseCoupling::new(
            Frame::native(&q(2, 1)),
            vec![
                CouplingSegment::constant_sum(q(0, 1), q(1, 2), q(-1, 1)),
                CouplingSegment::new(q(1, 2), q(1, 1), Slope::Plus1, q(-5, 2)),
                CouplingSegment::constant_sum(q(1, 1), q(2, 1), q(1, 1)),
            ],
        );
        assert_eq!(c.reflect().reflect(), c);
        assert!(verify_coupling(&c.reflect(), &sum_law(&c).unwrap().reflect(&q(0, 1))).all_ok());
        let law = sum_law(&c).unwrap();
        assert!(sum_law(&c.reflect()).unwrap().same_law(&law.reflect(&q(0, 1))));
    }
}
