//! Exact feasibility oracle for grid-discretized sum laws.
//!
//! Each of the `n` margins is the discrete uniform on the cell midpoints
//! `(j + 1/2)/m`, so an index tuple with index sum `s` has sum
//! `(s + n/2)/m`. The oracle decides whether some joint with those margins
//! puts prescribed masses on every index sum.
//!
//! A feasible grid joint lifts to a continuous coupling by mixing the
//! margins completely inside each cell, so `Feasible` is a proof of
//! membership for the target's atoms. `Infeasible` speaks only about the
//! grid: a continuous member whose atoms sit on the grid can still fail at
//! a particular `m`.

use serde::{Deserialize, Serialize};

use crate::distribution::MixtureDistribution;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::simplex::{solve, LinearProgram, LpOutcome, Sense};

/// Default ceiling on `m` for three margins.
pub const N3_DEFAULT_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: u32,
    pub m: usize,
}

impl GridSpec {
    pub fn new(n: u32, m: usize) -> Result<Self> {
        if n == 3 && m > N3_DEFAULT_CAP {
            return Err(Error::InvalidParameter(format!(
                "m = {m} exceeds the default cap {N3_DEFAULT_CAP} for n = 3"
            )));
        }
        Self::uncapped(n, m)
    }

    /// Like [`GridSpec::new`] without the size cap for `n = 3`.
    pub fn uncapped(n: u32, m: usize) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::InvalidParameter(format!("grid oracle supports n in {{2, 3}}, got {n}")));
        }
        if m < 2 {
            return Err(Error::InvalidParameter(format!("need m >= 2, got {m}")));
        }
        Ok(GridSpec { n, m })
    }

    pub fn cells(&self) -> usize {
        self.m.pow(self.n)
    }

    /// Largest index sum, `n (m - 1)`.
    pub fn top(&self) -> usize {
        self.n as usize * (self.m - 1)
    }

    /// Sum of the margins at index sum `s`.
    pub fn sum_value(&self, s: usize) -> Rational {
        (Rational::from(s) + Rational::from(self.n) / Rational::from(2)) / Rational::from(self.m)
    }

    /// Index sum whose value is exactly `x`, if any.
    pub fn cell_of(&self, x: &Rational) -> Option<usize> {
        let t = self.index_coord(x);
        (t.is_integer() && !t.is_negative()).then(|| t.to_i64()).flatten().map(|v| v as usize).filter(|&s| s <= self.top())
    }

    fn index_coord(&self, x: &Rational) -> Rational {
        x * &Rational::from(self.m) - Rational::from(self.n) / Rational::from(2)
    }

    /// Index sums whose values lie in `(lo, hi)`, or in `[lo, hi]` when `closed`.
    pub fn cells_in(&self, lo: &Rational, hi: &Rational, closed: bool) -> Option<(usize, usize)> {
        let (a, b) = (self.index_coord(lo), self.index_coord(hi));
        let first = if closed { a.ceil() } else { a.floor() + Rational::one() };
        let last = if closed { b.floor() } else { b.ceil() - Rational::one() };
        let first = first.max_of(&Rational::zero()).clone();
        let last = last.min_of(&Rational::from(self.top())).clone();
        if first > last {
            return None;
        }
        Some((first.to_i64()? as usize, last.to_i64()? as usize))
    }

    fn digits(&self, mut t: usize) -> Vec<usize> {
        let mut d = vec![0; self.n as usize];
        for slot in d.iter_mut().rev() {
            *slot = t % self.m;
            t /= self.m;
        }
        d
    }

    fn check_dims(&self, masses: usize) -> Result<()> {
        if masses != self.top() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "target has {masses} masses, grid n = {} m = {} needs {}",
                self.n,
                self.m,
                self.top() + 1
            )));
        }
        Ok(())
    }
}

/// Probabilities of the index sums `0..=n(m-1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridTarget {
    pub masses: Vec<Rational>,
}

impl GridTarget {
    pub fn new(masses: Vec<Rational>) -> Result<Self> {
        if let Some(bad) = masses.iter().find(|m| m.is_negative()) {
            return Err(Error::InvalidDistribution(format!("negative grid mass {bad}")));
        }
        let total: Rational = masses.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!("grid masses sum to {total}")));
        }
        Ok(GridTarget { masses })
    }

    pub fn mean_index(&self) -> Rational {
        self.masses.iter().enumerate().map(|(s, p)| p * &Rational::from(s)).sum()
    }

    /// The law on the sum values of `spec`.
    pub fn to_distribution(&self, spec: &GridSpec) -> Result<MixtureDistribution> {
        spec.check_dims(self.masses.len())?;
        MixtureDistribution::discrete(
            self.masses.iter().enumerate().filter(|(_, p)| !p.is_zero()).map(|(s, p)| (spec.sum_value(s), p.clone())),
        )
    }
}

/// Joint probabilities over index tuples, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridJoint {
    pub n: u32,
    pub m: usize,
    pub entries: Vec<Rational>,
}

impl GridJoint {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::uncapped(self.n, self.m)
    }

    /// Law of the index sum.
    pub fn sum_masses(&self) -> Result<Vec<Rational>> {
        let spec = self.spec()?;
        let mut out = vec![Rational::zero(); spec.top() + 1];
        for (t, p) in self.entries.iter().enumerate() {
            if !p.is_zero() {
                out[spec.digits(t).iter().sum::<usize>()] += p;
            }
        }
        Ok(out)
    }

    /// Every violated constraint, found by direct summation over the entries.
    pub fn problems(&self, target: &GridTarget) -> Vec<String> {
        let spec = match self.spec() {
            Ok(s) => s,
            Err(e) => return vec![e.to_string()],
        };
        if self.entries.len() != spec.cells() {
            return vec![format!("{} entries, expected {}", self.entries.len(), spec.cells())];
        }
        let mut out = Vec::new();
        if let Some(t) = self.entries.iter().position(Rational::is_negative) {
            out.push(format!("negative entry at {:?}", spec.digits(t)));
        }
        let cell = Rational::one() / Rational::from(spec.m);
        let mut margins = vec![vec![Rational::zero(); spec.m]; spec.n as usize];
        for (t, p) in self.entries.iter().enumerate() {
            for (d, j) in spec.digits(t).into_iter().enumerate() {
                margins[d][j] += p;
            }
        }
        for (d, margin) in margins.iter().enumerate() {
            for (j, v) in margin.iter().enumerate() {
                if *v != cell {
                    out.push(format!("margin {d} cell {j} has mass {v}"));
                }
            }
        }
        match self.sum_masses() {
            Ok(sums) if sums.len() == target.masses.len() => {
                for (s, (got, want)) in sums.iter().zip(&target.masses).enumerate() {
                    if got != want {
                        out.push(format!("index sum {s} has mass {got}, target {want}"));
                    }
                }
            }
            Ok(sums) => out.push(format!("{} sum cells, target has {}", sums.len(), target.masses.len())),
            Err(e) => out.push(e.to_string()),
        }
        out
    }
}

/// Dual functional separating the target from the grid polytope: every
/// index tuple has `sum_d margin[d][j_d] + sums[s] <= 0`, while the
/// constraint right-hand sides evaluate to a positive number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub margin: Vec<Vec<Rational>>,
    pub sums: Vec<Rational>,
}

impl DualCertificate {
    /// Direct evaluation over all index tuples.
    pub fn verify(&self, spec: &GridSpec, target: &GridTarget) -> bool {
        if self.margin.len() != spec.n as usize
            || self.margin.iter().any(|u| u.len() != spec.m)
            || self.sums.len() != spec.top() + 1
            || target.masses.len() != spec.top() + 1
        {
            return false;
        }
        let all_nonpositive = (0..spec.cells()).all(|t| {
            let digits = spec.digits(t);
            let s: usize = digits.iter().sum();
            let lhs: Rational = digits.iter().enumerate().map(|(d, &j)| &self.margin[d][j]).sum::<Rational>() + &self.sums[s];
            !lhs.is_positive()
        });
        let cell = Rational::one() / Rational::from(spec.m);
        let rhs: Rational = self.margin.iter().flatten().map(|u| u * &cell).sum::<Rational>()
            + self.sums.iter().zip(&target.masses).map(|(v, p)| v * p).sum::<Rational>();
        all_nonpositive && rhs.is_positive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridVerdict {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    pub verdict: GridVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<GridJoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<DualCertificate>,
    pub pivots: usize,
}

/// Bins `f` onto the sum grid. Mass between two adjacent grid values is split
/// linearly so its mean is kept; mass beyond the outermost grid values goes
/// to the end cells.
pub fn discretize(f: &MixtureDistribution, n: u32, m: usize) -> Result<GridTarget> {
    let spec = GridSpec::uncapped(n, m)?;
    let (zero, nr) = (Rational::zero(), Rational::from(n));
    if let Some(point) = f.support_outside(&zero, &nr) {
        return Err(Error::Domain(format!("support point {point} outside [0, {n}]")));
    }
    let top = Rational::from(spec.top());
    let mut masses = vec![Rational::zero(); spec.top() + 1];
    let last = spec.top();
    let two = Rational::from(2);
    for a in f.atoms() {
        let t = spec.index_coord(&a.loc);
        if !t.is_positive() {
            masses[0] += &a.mass;
        } else if t >= top {
            masses[last] += &a.mass;
        } else {
            let s = t.floor();
            let frac = &t - &s;
            let s = s.to_i64().expect("cell index fits") as usize;
            masses[s] += &a.mass * &(Rational::one() - &frac);
            masses[s + 1] += &a.mass * &frac;
        }
    }
    for p in f.pieces() {
        let (lo, hi) = (spec.index_coord(&p.lo), spec.index_coord(&p.hi));
        let density = &p.weight / &(&hi - &lo);
        if lo < zero {
            masses[0] += &density * &(hi.min_of(&zero) - &lo);
        }
        if hi > top {
            masses[last] += &density * &(&hi - lo.max_of(&top));
        }
        let start = lo.max_of(&zero).clone();
        let end = hi.min_of(&top).clone();
        if start >= end {
            continue;
        }
        let first = start.floor().to_i64().expect("cell index fits") as usize;
        let mut s = first;
        while Rational::from(s) < end {
            let base = Rational::from(s);
            let u0 = start.max_of(&base) - &base;
            let u1 = end.min_of(&(&base + Rational::one())) - &base;
            if u1 > u0 {
                let upper = (&u1 * &u1 - &u0 * &u0) / &two;
                let len = &u1 - &u0;
                masses[s] += &density * &(&len - &upper);
                masses[s + 1] += &density * &upper;
            }
            s += 1;
        }
    }
    GridTarget::new(masses)
}

/// The same target on the grid with `2m` cells per margin. Even `n` lands
/// every sum value on a finer grid value; odd `n` splits it evenly between
/// the two neighbours.
pub fn refine(spec: &GridSpec, target: &GridTarget) -> Result<(GridSpec, GridTarget)> {
    spec.check_dims(target.masses.len())?;
    let fine = GridSpec::uncapped(spec.n, 2 * spec.m)?;
    let mut masses = vec![Rational::zero(); fine.top() + 1];
    let half = Rational::one() / Rational::from(2);
    let k = spec.n as usize / 2;
    for (s, p) in target.masses.iter().enumerate() {
        if spec.n % 2 == 0 {
            masses[2 * s + k] += p;
        } else {
            masses[2 * s + k] += p * &half;
            masses[2 * s + k + 1] += p * &half;
        }
    }
    Ok((fine, GridTarget { masses }))
}

/// Carries a witness for `target` to one for `refine(target)`: each cell is
/// split into subcells and filled with a small joint whose margins are
/// uniform and whose index sums reproduce the refined target.
pub fn refine_witness(joint: &GridJoint) -> Result<GridJoint> {
    let spec = joint.spec()?;
    let fine = GridSpec::uncapped(spec.n, 2 * spec.m)?;
    let pattern: Vec<Vec<usize>> = match spec.n {
        2 => vec![vec![0, 1], vec![1, 0]],
        _ => vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]],
    };
    let share = Rational::one() / Rational::from(pattern.len());
    let mut entries = vec![Rational::zero(); fine.cells()];
    for (t, p) in joint.entries.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let digits = spec.digits(t);
        for sub in &pattern {
            let idx = digits.iter().zip(sub).fold(0, |acc, (&j, &b)| acc * fine.m + 2 * j + b);
            entries[idx] += p * &share;
        }
    }
    Ok(GridJoint { n: spec.n, m: fine.m, entries })
}

/// Decides whether some joint with uniform grid margins has index-sum law
/// `target`, returning a re-verified witness or dual certificate.
pub fn feasible(target: &GridTarget, spec: &GridSpec) -> Result<Feasibility> {
    spec.check_dims(target.masses.len())?;
    let (n, m) = (spec.n as usize, spec.m);
    // last margin row of every margin is implied by the sum rows
    let margin_rows = n * (m - 1);
    let live: Vec<usize> = (0..=spec.top()).filter(|&s| !target.masses[s].is_zero()).collect();
    let mut sum_row = vec![usize::MAX; spec.top() + 1];
    for (i, &s) in live.iter().enumerate() {
        sum_row[s] = margin_rows + i;
    }
    let mut rhs = vec![Rational::one(); margin_rows];
    rhs.extend(live.iter().map(|&s| &target.masses[s] * &Rational::from(m)));
    let mut lp = LinearProgram::new(rhs);
    let mut tuple_of = Vec::new();
    for t in 0..spec.cells() {
        let digits = spec.digits(t);
        let s: usize = digits.iter().sum();
        if sum_row[s] == usize::MAX {
            continue;
        }
        let mut col: Vec<(usize, i64)> = digits
            .iter()
            .enumerate()
            .filter(|(_, &j)| j < m - 1)
            .map(|(d, &j)| (d * (m - 1) + j, 1))
            .collect();
        col.push((sum_row[s], 1));
        lp.add_column(col);
        tuple_of.push(t);
    }
    let (outcome, stats) = solve(&lp, None);
    let pivots = stats.phase1_pivots + stats.phase2_pivots;
    let scale = Rational::one() / Rational::from(m);
    match outcome {
        LpOutcome::Optimal { x, .. } => {
            let mut entries = vec![Rational::zero(); spec.cells()];
            for (j, v) in x {
                entries[tuple_of[j]] = &v * &scale;
            }
            let joint = GridJoint { n: spec.n, m, entries };
            let problems = joint.problems(target);
            if !problems.is_empty() {
                return Err(Error::Verification(format!("grid witness: {problems:?}")));
            }
            Ok(Feasibility { verdict: GridVerdict::Feasible, witness: Some(joint), certificate: None, pivots })
        }
        LpOutcome::Infeasible { farkas } => {
            let mut margin = vec![vec![Rational::zero(); m]; n];
            for (d, u) in margin.iter_mut().enumerate() {
                u[..m - 1].clone_from_slice(&farkas[d * (m - 1)..(d + 1) * (m - 1)]);
            }
            // pruned sums carry no mass: choose their duals just low enough
            let mut sums = vec![None; spec.top() + 1];
            for (i, &s) in live.iter().enumerate() {
                sums[s] = Some(farkas[margin_rows + i].clone());
            }
            let mut needed: Vec<Option<Rational>> = vec![None; spec.top() + 1];
            for t in 0..spec.cells() {
                let digits = spec.digits(t);
                let s: usize = digits.iter().sum();
                if sums[s].is_some() {
                    continue;
                }
                let u: Rational = digits.iter().enumerate().map(|(d, &j)| &margin[d][j]).sum();
                if needed[s].as_ref().is_none_or(|v| u > *v) {
                    needed[s] = Some(u);
                }
            }
            let sums: Vec<Rational> = sums
                .into_iter()
                .zip(needed)
                .map(|(v, need)| v.unwrap_or_else(|| -need.unwrap_or_else(Rational::zero)))
                .collect();
            let cert = DualCertificate { margin, sums };
            if !cert.verify(spec, target) {
                return Err(Error::Verification("dual certificate".into()));
            }
            Ok(Feasibility { verdict: GridVerdict::Infeasible, witness: None, certificate: Some(cert), pivots })
        }
        LpOutcome::Unbounded => unreachable!("feasibility problems have no objective"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub value: Rational,
    pub witness: GridJoint,
    pub pivots: usize,
}

/// Extreme probability that the index sum lies in `lo..=hi` over all joints
/// with uniform grid margins.
pub fn grid_extreme_prob(spec: &GridSpec, lo: usize, hi: usize, sense: Sense) -> Result<GridOptimum> {
    if lo > hi || hi > spec.top() {
        return Err(Error::InvalidParameter(format!("cell range {lo}..={hi} is empty or exceeds {}", spec.top())));
    }
    let (n, m) = (spec.n as usize, spec.m);
    // first margin keeps all rows, the others drop their implied last row
    let rows = m + (n - 1) * (m - 1);
    let row = |d: usize, j: usize| -> Option<usize> {
        match d {
            0 => Some(j),
            _ if j == m - 1 => None,
            _ => Some(m + (d - 1) * (m - 1) + j),
        }
    };
    let mut lp = LinearProgram::new(vec![Rational::one(); rows]);
    let mut cost = Vec::with_capacity(spec.cells());
    for t in 0..spec.cells() {
        let digits = spec.digits(t);
        let s: usize = digits.iter().sum();
        lp.add_column(digits.iter().enumerate().filter_map(|(d, &j)| row(d, j).map(|r| (r, 1))).collect());
        cost.push(if (lo..=hi).contains(&s) { Rational::one() } else { Rational::zero() });
    }
    let (outcome, stats) = solve(&lp, Some((&cost, sense)));
    let LpOutcome::Optimal { x, value, .. } = outcome else {
        unreachable!("the uniform margin polytope is nonempty and bounded");
    };
    let scale = Rational::one() / Rational::from(m);
    let mut entries = vec![Rational::zero(); spec.cells()];
    for (j, v) in x {
        entries[j] = &v * &scale;
    }
    let witness = GridJoint { n: spec.n, m, entries };
    let sums = witness.sum_masses()?;
    let value = &value * &scale;
    let direct: Rational = sums[lo..=hi].iter().sum();
    let target = GridTarget::new(sums)?;
    if direct != value || !witness.problems(&target).is_empty() {
        return Err(Error::Verification("optimal joint".into()));
    }
    Ok(GridOptimum { value, witness, pivots: stats.phase1_pivots + stats.phase2_pivots })
}
