//! Exact revised simplex for `A x = b, x >= 0` with sparse integer columns.
//!
//! Phase 1 starts from an all-artificial basis. If the artificial sum cannot
//! be driven to zero, the phase-1 duals `y` satisfy `y^T A <= 0` and
//! `y^T b > 0`, which is returned as a Farkas certificate. Otherwise the
//! remaining artificials are pivoted out (or left on redundant rows, where
//! they stay at zero) and phase 2 optimizes the real objective.
//!
//! Pricing is Dantzig's rule, falling back to Bland's rule after a run of
//! degenerate pivots and returning to Dantzig after the next improving one.

use crate::rational::Rational;

const DEGENERATE_RUN: usize = 50;

/// Constraint system `A x = b` stored by column.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    rows: usize,
    columns: Vec<Vec<(usize, i64)>>,
    rhs: Vec<Rational>,
}

impl LinearProgram {
    pub fn new(rhs: Vec<Rational>) -> Self {
        LinearProgram { rows: rhs.len(), columns: Vec::new(), rhs }
    }

    /// Appends a column given as `(row, coefficient)` pairs; returns its index.
    pub fn add_column(&mut self, entries: Vec<(usize, i64)>) -> usize {
        debug_assert!(entries.iter().all(|&(r, _)| r < self.rows));
        self.columns.push(entries);
        self.columns.len() - 1
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[(usize, i64)] {
        &self.columns[j]
    }

    pub fn rhs(&self) -> &[Rational] {
        &self.rhs
    }

    /// `y^T A_j`.
    pub fn dot_column(&self, y: &[Rational], j: usize) -> Rational {
        let mut acc = Rational::zero();
        for &(r, a) in &self.columns[j] {
            acc += scaled(&y[r], a);
        }
        acc
    }
}

fn scaled(v: &Rational, a: i64) -> Rational {
    match a {
        1 => v.clone(),
        -1 => -v,
        _ => v * &Rational::from(a),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    /// `x` lists the nonzero structural variables.
    Optimal { x: Vec<(usize, Rational)>, value: Rational, duals: Vec<Rational> },
    /// `y` with `y^T A <= 0` and `y^T b > 0`.
    Infeasible { farkas: Vec<Rational> },
    Unbounded,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub phase1_pivots: usize,
    pub phase2_pivots: usize,
}

struct State<'a> {
    lp: &'a LinearProgram,
    /// `-1` for rows negated so that `b >= 0`.
    flip: Vec<bool>,
    basis: Vec<usize>,
    /// Row of each basic variable, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    binv: Vec<Vec<Rational>>,
    xb: Vec<Rational>,
    y: Vec<Rational>,
    cost: Vec<Rational>,
    bland: bool,
    degenerate_run: usize,
}

impl<'a> State<'a> {
    fn new(lp: &'a LinearProgram) -> Self {
        let m = lp.rows;
        let n = lp.cols();
        let flip: Vec<bool> = lp.rhs.iter().map(Rational::is_negative).collect();
        let xb: Vec<Rational> = lp.rhs.iter().map(Rational::abs).collect();
        let mut binv = vec![vec![Rational::zero(); m]; m];
        for (i, row) in binv.iter_mut().enumerate() {
            row[i] = Rational::one();
        }
        let mut row_of = vec![usize::MAX; n + m];
        for (i, slot) in row_of[n..].iter_mut().enumerate() {
            *slot = i;
        }
        let mut cost = vec![Rational::zero(); n + m];
        for c in &mut cost[n..] {
            *c = Rational::one();
        }
        State {
            lp,
            flip,
            basis: (n..n + m).collect(),
            row_of,
            binv,
            xb,
            y: vec![Rational::one(); m],
            cost,
            bland: false,
            degenerate_run: 0,
        }
    }

    fn n(&self) -> usize {
        self.lp.cols()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n()
    }

    /// Column `j` of the row-flipped system.
    fn column(&self, j: usize) -> Vec<(usize, i64)> {
        if self.is_artificial(j) {
            return vec![(j - self.n(), 1)];
        }
        self.lp.columns[j]
            .iter()
            .map(|&(r, a)| (r, if self.flip[r] { -a } else { a }))
            .collect()
    }

    fn reduced_cost(&self, j: usize) -> Rational {
        let mut d = self.cost[j].clone();
        if self.is_artificial(j) {
            return d - &self.y[j - self.n()];
        }
        for &(r, a) in &self.lp.columns[j] {
            let a = if self.flip[r] { -a } else { a };
            d -= scaled(&self.y[r], a);
        }
        d
    }

    /// `B^{-1} A_j`.
    fn ftran(&self, j: usize) -> Vec<Rational> {
        let col = self.column(j);
        self.binv
            .iter()
            .map(|row| {
                let mut acc = Rational::zero();
                for &(r, a) in &col {
                    if !row[r].is_zero() {
                        acc += scaled(&row[r], a);
                    }
                }
                acc
            })
            .collect()
    }

    fn choose_entering(&self) -> Option<(usize, Rational)> {
        let mut best: Option<(usize, Rational)> = None;
        for j in 0..self.n() {
            if self.row_of[j] != usize::MAX {
                continue;
            }
            let d = self.reduced_cost(j);
            if !d.is_negative() {
                continue;
            }
            if self.bland {
                return Some((j, d));
            }
            if best.as_ref().is_none_or(|(_, b)| d < *b) {
                best = Some((j, d));
            }
        }
        best
    }

    fn choose_leaving(&self, alpha: &[Rational]) -> Option<usize> {
        let mut best: Option<(usize, Rational)> = None;
        for (i, a) in alpha.iter().enumerate() {
            if !a.is_positive() {
                continue;
            }
            let ratio = &self.xb[i] / a;
            let better = match &best {
                None => true,
                Some((bi, br)) => {
                    if ratio != *br {
                        ratio < *br
                    } else if self.bland {
                        self.basis[i] < self.basis[*bi]
                    } else {
                        let (ai, ab) = (self.is_artificial(self.basis[i]), self.is_artificial(self.basis[*bi]));
                        (ai && !ab) || (ai == ab && self.basis[i] < self.basis[*bi])
                    }
                }
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[Rational], d_q: &Rational) {
        let m = self.lp.rows;
        let pivot = alpha[r].clone();
        let theta = &self.xb[r] / &pivot;
        if theta.is_zero() {
            self.degenerate_run += 1;
            if self.degenerate_run >= DEGENERATE_RUN {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
            for i in 0..m {
                if i != r && !alpha[i].is_zero() {
                    let delta = &theta * &alpha[i];
                    self.xb[i] -= delta;
                }
            }
        }
        self.xb[r] = theta;

        let old_row = std::mem::take(&mut self.binv[r]);
        let step = d_q / &pivot;
        let nz: Vec<usize> = (0..m).filter(|&k| !old_row[k].is_zero()).collect();
        for &k in &nz {
            let delta = &step * &old_row[k];
            self.y[k] += delta;
        }
        let new_row: Vec<Rational> = old_row.iter().map(|v| if v.is_zero() { Rational::zero() } else { v / &pivot }).collect();
        for i in 0..m {
            if i == r || alpha[i].is_zero() {
                continue;
            }
            let f = &alpha[i];
            let row = &mut self.binv[i];
            for &k in &nz {
                let delta = f * &new_row[k];
                row[k] -= delta;
            }
        }
        self.binv[r] = new_row;

        let out = self.basis[r];
        self.row_of[out] = usize::MAX;
        self.row_of[q] = r;
        self.basis[r] = q;
    }

    /// Runs pivots until no structural column prices out; `false` if unbounded.
    fn run(&mut self, pivots: &mut usize) -> bool {
        while let Some((q, d_q)) = self.choose_entering() {
            let alpha = self.ftran(q);
            let Some(r) = self.choose_leaving(&alpha) else {
                return false;
            };
            self.pivot(r, q, &alpha, &d_q);
            *pivots += 1;
        }
        true
    }

    fn objective(&self) -> Rational {
        self.basis.iter().zip(&self.xb).map(|(&j, x)| &self.cost[j] * x).sum()
    }

    /// Swaps zero-valued basic artificials for structural columns where possible.
    fn drive_out_artificials(&mut self, pivots: &mut usize) {
        for r in 0..self.lp.rows {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let row = self.binv[r].clone();
            let candidate = (0..self.n()).find(|&j| {
                self.row_of[j] == usize::MAX
                    && self.column(j).iter().any(|&(k, _)| !row[k].is_zero())
                    && !self.column(j).iter().map(|&(k, a)| scaled(&row[k], a)).sum::<Rational>().is_zero()
            });
            if let Some(q) = candidate {
                let alpha = self.ftran(q);
                let d_q = self.reduced_cost(q);
                self.pivot(r, q, &alpha, &d_q);
                *pivots += 1;
            }
        }
    }

    fn recompute_duals(&mut self) {
        let m = self.lp.rows;
        let mut y = vec![Rational::zero(); m];
        for (i, &j) in self.basis.iter().enumerate() {
            let c = &self.cost[j];
            if c.is_zero() {
                continue;
            }
            for (k, v) in self.binv[i].iter().enumerate() {
                if !v.is_zero() {
                    y[k] += c * v;
                }
            }
        }
        self.y = y;
    }

    fn unflip(&self, y: &[Rational]) -> Vec<Rational> {
        y.iter().zip(&self.flip).map(|(v, &f)| if f { -v } else { v.clone() }).collect()
    }
}

/// Solves the LP; `cost` of `None` is a pure feasibility problem.
pub fn solve(lp: &LinearProgram, cost: Option<(&[Rational], Sense)>) -> (LpOutcome, SolveStats) {
    let mut stats = SolveStats::default();
    let mut st = State::new(lp);
    st.run(&mut stats.phase1_pivots);
    if st.objective().is_positive() {
        // no structural column prices out, so y^T A <= 0, and y^T b is the positive artificial sum
        let farkas = st.unflip(&st.y);
        return (LpOutcome::Infeasible { farkas }, stats);
    }
    st.drive_out_artificials(&mut stats.phase1_pivots);

    let n = lp.cols();
    for c in &mut st.cost[n..] {
        *c = Rational::zero();
    }
    let sign = match cost {
        Some((_, Sense::Maximize)) => -1,
        _ => 1,
    };
    if let Some((c, _)) = cost {
        assert_eq!(c.len(), n, "cost vector length must match column count");
        for (dst, src) in st.cost[..n].iter_mut().zip(c) {
            *dst = scaled(src, sign);
        }
    }
    st.bland = false;
    st.degenerate_run = 0;
    st.recompute_duals();
    if !st.run(&mut stats.phase2_pivots) {
        return (LpOutcome::Unbounded, stats);
    }
    let value = scaled(&st.objective(), sign);
    let duals: Vec<Rational> = st.unflip(&st.y).iter().map(|v| scaled(v, sign)).collect();
    let mut x: Vec<(usize, Rational)> = st
        .basis
        .iter()
        .zip(&st.xb)
        .filter(|(&j, v)| j < n && !v.is_zero())
        .map(|(&j, v)| (j, v.clone()))
        .collect();
    x.sort_by_key(|e| e.0);
    (LpOutcome::Optimal { x, value, duals }, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn r(n: i64) -> Rational {
        Rational::from(n)
    }

    fn lp_from_dense(a: &[Vec<i64>], b: &[i64]) -> LinearProgram {
        let mut lp = LinearProgram::new(b.iter().map(|&v| r(v)).collect());
        for j in 0..a[0].len() {
            lp.add_column(a.iter().enumerate().filter(|(_, row)| row[j] != 0).map(|(i, row)| (i, row[j])).collect());
        }
        lp
    }

    fn check_farkas(lp: &LinearProgram, y: &[Rational]) -> bool {
        let yb: Rational = y.iter().zip(lp.rhs()).map(|(a, b)| a * b).sum();
        yb.is_positive() && (0..lp.cols()).all(|j| !lp.dot_column(y, j).is_positive())
    }

    /// Solves a square system by exact Gauss-Jordan elimination.
    fn solve_square(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
        let n = b.len();
        let mut m: Vec<Vec<Rational>> = a.iter().zip(b).map(|(row, v)| {
            let mut row = row.clone();
            row.push(v.clone());
            row
        }).collect();
        for c in 0..n {
            let p = (c..n).find(|&i| !m[i][c].is_zero())?;
            m.swap(c, p);
            let pv = m[c][c].clone();
            for v in &mut m[c] {
                *v = &*v / &pv;
            }
            for i in 0..n {
                if i != c && !m[i][c].is_zero() {
                    let f = m[i][c].clone();
                    let pivot_row = m[c].clone();
                    for (v, p) in m[i].iter_mut().zip(&pivot_row) {
                        *v = &*v - &(&f * p);
                    }
                }
            }
        }
        Some(m.into_iter().map(|row| row[n].clone()).collect())
    }

    /// Best objective over basic feasible solutions, by enumerating column subsets.
    fn brute_force(a: &[Vec<i64>], b: &[i64], c: &[i64]) -> Option<Rational> {
        let (m, n) = (a.len(), a[0].len());
        let mut best: Option<Rational> = None;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let cols: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
            let sq: Vec<Vec<Rational>> = (0..m).map(|i| cols.iter().map(|&j| r(a[i][j])).collect()).collect();
            let rhs: Vec<Rational> = b.iter().map(|&v| r(v)).collect();
            if let Some(x) = solve_square(&sq, &rhs) {
                if x.iter().all(|v| !v.is_negative()) {
                    let val: Rational = cols.iter().zip(&x).map(|(&j, v)| r(c[j]) * v).sum();
                    if best.as_ref().is_none_or(|bv| val < *bv) {
                        best = Some(val);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn small_feasible_and_infeasible() {
        // x1 + x2 = 1, x1 - x2 = 1/2 scaled by 2: 2x1 - 2x2 = 1
        let lp = lp_from_dense(&[vec![1, 1], vec![2, -2]], &[1, 1]);
        let cost = [r(0), r(1)];
        match solve(&lp, Some((&cost, Sense::Minimize))).0 {
            LpOutcome::Optimal { x, value, .. } => {
                assert_eq!(x, vec![(0, q(3, 4)), (1, q(1, 4))]);
                assert_eq!(value, q(1, 4));
            }
            other => panic!("{other:?}"),
        }
        let bad = lp_from_dense(&[vec![1, 1], vec![1, 1]], &[1, 2]);
        match solve(&bad, None).0 {
            LpOutcome::Infeasible { farkas } => assert!(check_farkas(&bad, &farkas)),
            other => panic!("{other:?}"),
        }
        let neg = lp_from_dense(&[vec![1, 1]], &[-1]);
        match solve(&neg, None).0 {
            LpOutcome::Infeasible { farkas } => assert!(check_farkas(&neg, &farkas)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_is_detected() {
        let lp = lp_from_dense(&[vec![1, -1]], &[1]);
        let cost = [r(0), r(-1)];
        assert_eq!(solve(&lp, Some((&cost, Sense::Minimize))).0, LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        // the second row is the first doubled
        let lp = lp_from_dense(&[vec![1, 1, 1], vec![2, 2, 2], vec![1, 0, -1]], &[3, 6, 0]);
        let cost = [r(1), r(2), r(3)];
        match solve(&lp, Some((&cost, Sense::Maximize))).0 {
            LpOutcome::Optimal { value, duals, .. } => {
                assert_eq!(value, r(6));
                let yb: Rational = duals.iter().zip(lp.rhs()).map(|(a, b)| a * b).sum();
                assert_eq!(yb, value);
            }
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(
            a in prop::collection::vec(prop::collection::vec(-3i64..=3, 6), 3),
            b in prop::collection::vec(-4i64..=6, 3),
            c in prop::collection::vec(-3i64..=3, 6),
        ) {
            // a bounding row keeps every feasible region a polytope
            let mut a = a;
            a.push(vec![1; 6]);
            let mut b = b;
            b.push(5);
            let lp = lp_from_dense(&a, &b);
            let cost: Vec<Rational> = c.iter().map(|&v| r(v)).collect();
            let (outcome, _) = solve(&lp, Some((&cost, Sense::Minimize)));
            match outcome {
                LpOutcome::Optimal { x, value, .. } => {
                    for (i, row) in a.iter().enumerate() {
                        let lhs: Rational = x.iter().map(|(j, v)| r(row[*j]) * v).sum();
                        prop_assert_eq!(lhs, r(b[i]));
                    }
                    prop_assert!(x.iter().all(|(_, v)| v.is_positive()));
                    let full_rank_best = brute_force(&a, &b, &c);
                    if let Some(bf) = full_rank_best {
                        prop_assert_eq!(value, bf);
                    }
                }
                LpOutcome::Infeasible { farkas } => {
                    prop_assert!(check_farkas(&lp, &farkas));
                }
                LpOutcome::Unbounded => prop_assert!(false, "bounded by construction"),
            }
        }
    }
}
