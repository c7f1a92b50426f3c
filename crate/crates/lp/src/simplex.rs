//! Bounded primal revised simplex.
//!
//! Every row `r` gets a logical column `s_r` so that `A x + s = b`, with
//! `s_r` in `[0, inf)` for `<=`, `(-inf, 0]` for `>=` and `[0, 0]` for `=`.
//! The all-logical basis is the starting point. Phase one minimizes the total
//! bound violation of the basic variables; phase two the objective.
//!
//! The basis inverse is kept as a dense matrix, updated with each pivot and
//! rebuilt from the original columns at regular intervals, after which the
//! basic values are recomputed from scratch. The ratio test is the two-pass
//! Harris test, which favours large pivots among near-ties.

use crate::{LinearProgram, LpSolution, LpStatus, Relation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Pricing {
    /// Lowest-index improving column enters; the lowest-index candidate
    /// leaves on ratio ties. Never cycles.
    Bland,
    /// Largest reduced cost enters. After a run of degenerate pivots the
    /// solver switches to Bland's rule until the objective moves again.
    #[default]
    Dantzig,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    pub pricing: Pricing,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            pricing: Pricing::default(),
        }
    }
}

/// Feasibility tolerance on returned points.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Bound violation tolerated on basic variables while iterating.
const PRIMAL_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 40;
const BLAND_PIVOT_SHARE: f64 = 1e-2;
const REINVERT_EVERY: usize = 100;
const NONBASIC: usize = usize::MAX;

pub fn solve_lp(prog: &LinearProgram) -> LpSolution {
    solve_lp_with(prog, &SimplexOptions::default())
}

/// Solves the continuous relaxation of `prog`; binary flags are ignored.
pub fn solve_lp_with(prog: &LinearProgram, opts: &SimplexOptions) -> LpSolution {
    let lower: Vec<f64> = prog.variables().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = prog.variables().iter().map(|v| v.upper).collect();
    solve_with_bounds(prog, &lower, &upper, opts)
}

pub(crate) fn solve_with_bounds(
    prog: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
    opts: &SimplexOptions,
) -> LpSolution {
    if lower.iter().zip(upper).any(|(lo, hi)| lo > hi) {
        return LpSolution::without_point(LpStatus::Infeasible);
    }
    Solver::new(prog, lower, upper).solve(prog, opts)
}

/// Basis of a solved program, enough to restart a related one from it.
#[derive(Clone, Debug)]
pub(crate) struct WarmStart {
    basis: Vec<usize>,
    at_upper: Vec<bool>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

pub(crate) struct Solver {
    m: usize,
    n: usize,
    /// Structural columns, sparse and scaled.
    cols: Vec<Vec<(usize, f64)>>,
    /// Original value of structural `j` is `col_scale[j]` times the internal one.
    col_scale: Vec<f64>,
    b: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Value of every column, basic or not.
    x: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<usize>,
    /// Row-major inverse of the basis matrix.
    binv: Vec<f64>,
    iterations: usize,
    since_reinvert: usize,
    inverted: bool,
}

impl Solver {
    pub(crate) fn new(prog: &LinearProgram, lower: &[f64], upper: &[f64]) -> Self {
        let m = prog.num_constraints();
        let n = prog.num_variables();
        let mut cols = vec![Vec::new(); n];
        let mut b = Vec::with_capacity(m);
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        for (r, c) in prog.constraints().iter().enumerate() {
            for &(j, a) in &c.terms {
                cols[j].push((r, a));
            }
            b.push(c.rhs);
            let (l, h) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(h);
        }
        let mut cost = prog.objective().to_vec();
        cost.resize(n + m, 0.0);

        let (row_scale, col_scale) = scale_factors(&cols, m);
        for (j, col) in cols.iter_mut().enumerate() {
            for (r, a) in col.iter_mut() {
                *a *= row_scale[*r] * col_scale[j];
            }
            lo[j] /= col_scale[j];
            hi[j] /= col_scale[j];
            cost[j] *= col_scale[j];
        }
        for (bi, rs) in b.iter_mut().zip(&row_scale) {
            *bi *= rs;
        }

        let mut x = vec![0.0; n + m];
        for j in 0..n {
            x[j] = if lo[j].is_finite() { lo[j] } else { hi[j] };
        }
        let basis: Vec<usize> = (n..n + m).collect();
        let mut row_of = vec![NONBASIC; n + m];
        for (r, &j) in basis.iter().enumerate() {
            row_of[j] = r;
        }
        Self {
            m,
            n,
            cols,
            col_scale,
            b,
            cost,
            lo,
            hi,
            x,
            basis,
            row_of,
            binv: vec![0.0; m * m],
            iterations: 0,
            since_reinvert: 0,
            inverted: false,
        }
    }

    /// Like `new`, but starting from the basis of an earlier solve. Nonbasic
    /// columns sit at the same side of their (possibly changed) bounds.
    pub(crate) fn with_basis(
        prog: &LinearProgram,
        lower: &[f64],
        upper: &[f64],
        warm: &WarmStart,
    ) -> Self {
        let mut s = Self::new(prog, lower, upper);
        if warm.basis.len() != s.m || warm.at_upper.len() != s.n + s.m {
            return s;
        }
        s.basis.clone_from(&warm.basis);
        s.row_of.fill(NONBASIC);
        for (p, &j) in s.basis.iter().enumerate() {
            s.row_of[j] = p;
        }
        for j in 0..s.n + s.m {
            if s.row_of[j] == NONBASIC {
                s.x[j] = s.nonbasic_value(j, warm.at_upper[j]);
            }
        }
        s
    }

    fn nonbasic_value(&self, j: usize, upper: bool) -> f64 {
        if (upper || self.lo[j].is_infinite()) && self.hi[j].is_finite() {
            self.hi[j]
        } else {
            self.lo[j]
        }
    }

    pub(crate) fn warm_start(&self) -> WarmStart {
        WarmStart {
            basis: self.basis.clone(),
            at_upper: (0..self.n + self.m)
                .map(|j| self.row_of[j] == NONBASIC && self.x[j] == self.hi[j])
                .collect(),
        }
    }

    /// Fixes structural `j` at `value` (in original units), keeping the basis.
    pub(crate) fn fix(&mut self, j: usize, value: f64) {
        let v = value / self.col_scale[j];
        self.lo[j] = v;
        self.hi[j] = v;
        if self.row_of[j] == NONBASIC && self.x[j] != v {
            let delta = v - self.x[j];
            let alpha = self.ftran(j);
            self.x[j] = v;
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    self.x[self.basis[p]] -= delta * a;
                }
            }
        }
    }

    fn reset_to_slack_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        self.basis = (n..n + m).collect();
        self.row_of.fill(NONBASIC);
        for (p, &j) in self.basis.iter().enumerate() {
            self.row_of[j] = p;
        }
        for j in 0..n {
            self.x[j] = self.nonbasic_value(j, false);
        }
    }

    pub(crate) fn solve(&mut self, prog: &LinearProgram, opts: &SimplexOptions) -> LpSolution {
        self.iterations = 0;
        if !self.inverted && !self.reinvert() {
            self.reset_to_slack_basis();
            if !self.reinvert() {
                return LpSolution::without_point(LpStatus::IterationLimit);
            }
        }
        if let Err(status) = self.run(Phase::One, opts) {
            return LpSolution::without_point(status);
        }
        if self.infeasibility() > FEASIBILITY_TOL {
            return LpSolution::without_point(LpStatus::Infeasible);
        }
        if let Err(status) = self.run(Phase::Two, opts) {
            return LpSolution::without_point(status);
        }
        let values: Vec<f64> = (0..self.n)
            .map(|j| {
                let scale = self.col_scale[j];
                (self.x[j] * scale).clamp(self.lo[j] * scale, self.hi[j] * scale)
            })
            .collect();
        LpSolution {
            status: LpStatus::Optimal,
            objective_value: prog.evaluate(&values),
            values,
        }
    }

    fn column(&self, j: usize) -> ColumnIter<'_> {
        if j < self.n {
            ColumnIter::Structural(self.cols[j].iter())
        } else {
            ColumnIter::Logical(Some(j - self.n))
        }
    }

    /// Rebuilds the basis inverse from the original columns and recomputes
    /// the basic values. Returns false on a numerically singular basis.
    fn reinvert(&mut self) -> bool {
        let (m, n) = (self.m, self.n);
        let mut logical_row = vec![false; m];
        let mut structural: Vec<usize> = Vec::new();
        for (p, &j) in self.basis.iter().enumerate() {
            if j >= n {
                logical_row[j - n] = true;
            } else {
                structural.push(p);
            }
        }
        let rest: Vec<usize> = (0..m).filter(|&r| !logical_row[r]).collect();
        let s = rest.len();
        debug_assert_eq!(s, structural.len());
        let mut rest_index = vec![usize::MAX; m];
        for (a, &r) in rest.iter().enumerate() {
            rest_index[r] = a;
        }

        // Square block of the structural basic columns on the rows that no
        // basic logical covers.
        let mut k = vec![0.0; s * s];
        for (col, &p) in structural.iter().enumerate() {
            for &(r, a) in &self.cols[self.basis[p]] {
                let row = rest_index[r];
                if row != usize::MAX {
                    k[row * s + col] = a;
                }
            }
        }
        let Some(kinv) = invert(k, s) else {
            self.inverted = false;
            return false;
        };

        self.binv.fill(0.0);
        for (col, &p) in structural.iter().enumerate() {
            let row = &mut self.binv[p * m..(p + 1) * m];
            for (a, &r) in rest.iter().enumerate() {
                row[r] = kinv[col * s + a];
            }
        }
        for (p, &j) in self.basis.iter().enumerate() {
            if j >= n {
                self.binv[p * m + (j - n)] = 1.0;
            }
        }
        for (col, &p) in structural.iter().enumerate() {
            for &(r, a) in &self.cols[self.basis[p]] {
                if !logical_row[r] {
                    continue;
                }
                let target = self.row_of[n + r];
                for (i, &rr) in rest.iter().enumerate() {
                    let v = kinv[col * s + i];
                    if v != 0.0 {
                        self.binv[target * m + rr] -= a * v;
                    }
                }
            }
        }

        // x_B = B^-1 (b - N x_N).
        let mut rhs = self.b.clone();
        for j in 0..n + m {
            if self.row_of[j] != NONBASIC || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            for (r, a) in self.column(j) {
                rhs[r] -= a * xj;
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let v: f64 = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            self.x[self.basis[p]] = v;
        }
        self.since_reinvert = 0;
        self.inverted = true;
        true
    }

    fn infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&j| (self.lo[j] - self.x[j]).max(0.0) + (self.x[j] - self.hi[j]).max(0.0))
            .sum()
    }

    /// Cost of basic position `p` in the given phase.
    fn basic_cost(&self, phase: Phase, p: usize) -> f64 {
        let j = self.basis[p];
        match phase {
            Phase::Two => self.cost[j],
            Phase::One => {
                if self.x[j] < self.lo[j] - PRIMAL_TOL {
                    -1.0
                } else if self.x[j] > self.hi[j] + PRIMAL_TOL {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for p in 0..m {
            let c = self.basic_cost(phase, p);
            if c == 0.0 {
                continue;
            }
            for (yi, &v) in y.iter_mut().zip(&self.binv[p * m..(p + 1) * m]) {
                *yi += c * v;
            }
        }
        y
    }

    /// Entering column and its direction (+1 up, -1 down).
    fn price(&self, phase: Phase, y: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n + self.m {
            if self.row_of[j] != NONBASIC || self.lo[j] == self.hi[j] {
                continue;
            }
            let c = if phase == Phase::Two {
                self.cost[j]
            } else {
                0.0
            };
            let d = c - self.column(j).map(|(r, a)| y[r] * a).sum::<f64>();
            let at_lower = self.x[j] == self.lo[j];
            let dir = if at_lower && d < -COST_TOL {
                1.0
            } else if !at_lower && d > COST_TOL {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, score)| d.abs() > score) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ftran(&self, q: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for (r, a) in self.column(q) {
            for (p, al) in alpha.iter_mut().enumerate() {
                *al += self.binv[p * m + r] * a;
            }
        }
        alpha
    }

    /// Bound a basic variable moving at `rate` stops at, in the given phase.
    fn blocking_bound(&self, phase: Phase, j: usize, rate: f64) -> Option<f64> {
        let x = self.x[j];
        if rate < 0.0 {
            if phase == Phase::One && x > self.hi[j] + PRIMAL_TOL {
                Some(self.hi[j])
            } else if phase == Phase::One && x < self.lo[j] - PRIMAL_TOL {
                None
            } else {
                self.lo[j].is_finite().then_some(self.lo[j])
            }
        } else if phase == Phase::One && x < self.lo[j] - PRIMAL_TOL {
            Some(self.lo[j])
        } else if phase == Phase::One && x > self.hi[j] + PRIMAL_TOL {
            None
        } else {
            self.hi[j].is_finite().then_some(self.hi[j])
        }
    }

    fn run(&mut self, phase: Phase, opts: &SimplexOptions) -> Result<(), LpStatus> {
        let mut degenerate_run = 0;
        let mut verified = false;
        loop {
            if self.iterations >= opts.max_iterations {
                return Err(LpStatus::IterationLimit);
            }
            if self.since_reinvert >= REINVERT_EVERY && !self.reinvert() {
                return Err(LpStatus::IterationLimit);
            }
            if phase == Phase::One && self.infeasibility() <= PRIMAL_TOL {
                return Ok(());
            }
            let bland = opts.pricing == Pricing::Bland || degenerate_run >= DEGENERATE_RUN;
            let y = self.duals(phase);
            let Some((q, dir)) = self.price(phase, &y, bland) else {
                // Confirm optimality on a freshly rebuilt basis before stopping.
                if verified || self.since_reinvert == 0 {
                    return Ok(());
                }
                if !self.reinvert() {
                    return Err(LpStatus::IterationLimit);
                }
                verified = true;
                continue;
            };
            verified = false;
            let alpha = self.ftran(q);

            // Harris pass one: largest step keeping every basic variable
            // within its bounds relaxed by the tolerance.
            let mut relaxed = self.hi[q] - self.lo[q];
            let mut any_block = false;
            for (p, &a) in alpha.iter().enumerate() {
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let rate = -dir * a;
                let j = self.basis[p];
                if let Some(bound) = self.blocking_bound(phase, j, rate) {
                    let room = if rate < 0.0 {
                        self.x[j] - bound + PRIMAL_TOL
                    } else {
                        bound - self.x[j] + PRIMAL_TOL
                    };
                    relaxed = relaxed.min(room.max(0.0) / rate.abs());
                    any_block = true;
                }
            }
            if relaxed.is_infinite() {
                return Err(if phase == Phase::One {
                    LpStatus::IterationLimit
                } else {
                    LpStatus::Unbounded
                });
            }

            // Pass two: among rows whose exact ratio fits, take the largest
            // pivot. Under Bland's rule take the lowest variable index among
            // pivots not much smaller than the largest.
            let mut eligible: Vec<(usize, f64, f64, f64)> = Vec::new();
            if any_block {
                for (p, &a) in alpha.iter().enumerate() {
                    if a.abs() <= PIVOT_TOL {
                        continue;
                    }
                    let rate = -dir * a;
                    let j = self.basis[p];
                    let Some(bound) = self.blocking_bound(phase, j, rate) else {
                        continue;
                    };
                    let ratio = ((self.x[j] - bound) / -rate).max(0.0);
                    if ratio <= relaxed {
                        eligible.push((p, ratio, a.abs(), bound));
                    }
                }
            }
            let largest = eligible.iter().map(|e| e.2).fold(0.0, f64::max);
            let leave = if bland {
                eligible
                    .into_iter()
                    .filter(|e| e.2 >= BLAND_PIVOT_SHARE * largest)
                    .min_by_key(|e| self.basis[e.0])
            } else {
                eligible.into_iter().find(|e| e.2 == largest)
            };
            let own = self.hi[q] - self.lo[q];
            let step = match leave {
                Some((_, ratio, _, _)) if ratio < own => ratio,
                _ => own,
            };

            let theta = dir * step;
            if step != 0.0 {
                self.x[q] += theta;
                for (p, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        self.x[self.basis[p]] -= theta * a;
                    }
                }
            }
            match leave {
                Some((p, ratio, _, bound)) if ratio < own => {
                    self.x[self.basis[p]] = bound;
                    self.pivot(p, q, &alpha);
                }
                _ => {
                    // Bound flip.
                    self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                }
            }
            degenerate_run = if step <= PRIMAL_TOL {
                degenerate_run + 1
            } else {
                0
            };
            self.iterations += 1;
            self.since_reinvert += 1;
        }
    }

    fn pivot(&mut self, p: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let inv = 1.0 / alpha[p];
        let (before, rest) = self.binv.split_at_mut(p * m);
        let (prow, after) = rest.split_at_mut(m);
        for v in prow.iter_mut() {
            *v *= inv;
        }
        for (i, &a) in alpha.iter().enumerate() {
            if i == p || a == 0.0 {
                continue;
            }
            let row = if i < p {
                &mut before[i * m..(i + 1) * m]
            } else {
                &mut after[(i - p - 1) * m..(i - p) * m]
            };
            for (v, &pv) in row.iter_mut().zip(prow.iter()) {
                *v -= a * pv;
            }
        }
        let leaving = self.basis[p];
        self.row_of[leaving] = NONBASIC;
        self.row_of[q] = p;
        self.basis[p] = q;
    }
}

/// Geometric-mean equilibration: alternately divides each row and each
/// column by the square root of its smallest and largest magnitudes.
fn scale_factors(cols: &[Vec<(usize, f64)>], m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut row = vec![1.0; m];
    let mut col = vec![1.0; cols.len()];
    for _ in 0..6 {
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![0.0f64; m];
        for (j, c) in cols.iter().enumerate() {
            for &(r, a) in c {
                let v = (a * col[j]).abs();
                if v > 0.0 {
                    lo[r] = lo[r].min(v);
                    hi[r] = hi[r].max(v);
                }
            }
        }
        for r in 0..m {
            if hi[r] > 0.0 {
                row[r] = 1.0 / (lo[r] * hi[r]).sqrt();
            }
        }
        for (j, c) in cols.iter().enumerate() {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for &(r, a) in c {
                let v = (a * row[r]).abs();
                if v > 0.0 {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if hi > 0.0 {
                col[j] = 1.0 / (lo * hi).sqrt();
            }
        }
    }
    // Powers of two keep the scaling itself exact.
    let round = |v: &mut f64| *v = v.log2().round().exp2();
    row.iter_mut().for_each(round);
    col.iter_mut().for_each(round);
    (row, col)
}

enum ColumnIter<'a> {
    Structural(std::slice::Iter<'a, (usize, f64)>),
    Logical(Option<usize>),
}

impl Iterator for ColumnIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColumnIter::Structural(it) => it.next().copied(),
            ColumnIter::Logical(r) => r.take().map(|r| (r, 1.0)),
        }
    }
}

/// Gauss-Jordan inverse with partial pivoting of a row-major `s x s` matrix.
fn invert(mut a: Vec<f64>, s: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; s * s];
    for i in 0..s {
        inv[i * s + i] = 1.0;
    }
    for col in 0..s {
        let pivot =
            (col..s).max_by(|&i, &j| a[i * s + col].abs().total_cmp(&a[j * s + col].abs()))?;
        let pv = a[pivot * s + col];
        if pv.abs() < 1e-11 {
            return None;
        }
        if pivot != col {
            for k in 0..s {
                a.swap(pivot * s + k, col * s + k);
                inv.swap(pivot * s + k, col * s + k);
            }
        }
        let scale = 1.0 / pv;
        for k in 0..s {
            a[col * s + k] *= scale;
            inv[col * s + k] *= scale;
        }
        for row in 0..s {
            if row == col {
                continue;
            }
            let f = a[row * s + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..s {
                a[row * s + k] -= f * a[col * s + k];
                inv[row * s + k] -= f * inv[col * s + k];
            }
        }
    }
    Some(inv)
}
