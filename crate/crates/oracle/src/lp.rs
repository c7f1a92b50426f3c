//! Enumeration oracles for tiny linear and pure-binary programs, and seeded
//! generators of such programs.

use nfms_lp::{LinearProgram, Relation, VarKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-7;

/// Minimum objective over a bounded polytope, found by visiting every basic
/// point: each choice of `n` hyperplanes (rows or bounds) with a unique
/// intersection is solved directly and kept if feasible.
///
/// Returns `None` when the program is infeasible. All bounds must be finite.
pub fn vertex_enumeration(prog: &LinearProgram) -> Option<f64> {
    let n = prog.num_variables();
    assert!(n <= 8, "vertex enumeration is only meant for tiny programs");
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in prog.constraints() {
        let mut row = vec![0.0; n];
        for &(j, a) in &c.terms {
            row[j] = a;
        }
        planes.push((row, c.rhs));
    }
    for (j, v) in prog.variables().iter().enumerate() {
        assert!(
            v.upper.is_finite(),
            "vertex enumeration needs finite bounds"
        );
        let mut row = vec![0.0; n];
        row[j] = 1.0;
        planes.push((row.clone(), v.lower));
        planes.push((row, v.upper));
    }

    let mut best: Option<f64> = None;
    let mut chosen = Vec::with_capacity(n);
    combinations(planes.len(), n, &mut chosen, &mut |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&k| planes[k].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = gauss_solve(a, b) {
            if feasible(prog, &x) {
                let value = prog.evaluate(&x);
                if best.is_none_or(|v| value < v) {
                    best = Some(value);
                }
            }
        }
    });
    best
}

/// Exhaustive search over `{0,1}^n` for programs whose columns are all binary.
pub fn binary_enumeration(prog: &LinearProgram) -> Option<(Vec<f64>, f64)> {
    let n = prog.num_variables();
    assert!(n <= 20);
    assert!(prog.variables().iter().all(|v| v.kind == VarKind::Binary));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| f64::from((mask >> j) & 1)).collect();
        if !feasible(prog, &x) {
            continue;
        }
        let value = prog.evaluate(&x);
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((x, value));
        }
    }
    best
}

fn relation(rng: &mut ChaCha8Rng) -> Relation {
    match rng.random_range(0..6) {
        0..=2 => Relation::Le,
        3 | 4 => Relation::Ge,
        _ => Relation::Eq,
    }
}

/// Up to four bounded columns and five rows with small integer data, so that
/// infeasible, degenerate and tied programs all show up.
pub fn random_lp(seed: u64) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    let m = rng.random_range(0..=5);
    let mut lp = LinearProgram::new();
    for j in 0..n {
        let lo = f64::from(rng.random_range(-3..=1));
        let hi = lo + f64::from(rng.random_range(0..=5));
        lp.add_variable(format!("x{j}"), lo, hi, VarKind::Continuous)
            .unwrap();
        lp.set_objective(j, f64::from(rng.random_range(-5..=5)))
            .unwrap();
    }
    for i in 0..m {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.7) {
                terms.push((j, f64::from(rng.random_range(-4..=4))));
            }
        }
        let rhs = f64::from(rng.random_range(-6..=8));
        lp.add_constraint(format!("r{i}"), terms, relation(&mut rng), rhs)
            .unwrap();
    }
    lp
}

pub fn random_binary(seed: u64) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=12);
    let m = rng.random_range(1..=6);
    let mut lp = LinearProgram::new();
    for j in 0..n {
        lp.add_binary(format!("b{j}")).unwrap();
        lp.set_objective(j, f64::from(rng.random_range(-9..=9)))
            .unwrap();
    }
    for i in 0..m {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.5) {
                terms.push((j, f64::from(rng.random_range(-5..=7))));
            }
        }
        let rhs = f64::from(rng.random_range(-3..=10));
        lp.add_constraint(format!("r{i}"), terms, relation(&mut rng), rhs)
            .unwrap();
    }
    lp
}

fn feasible(prog: &LinearProgram, x: &[f64]) -> bool {
    let bounds_ok = prog
        .variables()
        .iter()
        .zip(x)
        .all(|(v, &xv)| xv >= v.lower - TOL && xv <= v.upper + TOL);
    bounds_ok
        && prog.constraints().iter().all(|c| {
            let lhs: f64 = c.terms.iter().map(|&(j, a)| a * x[j]).sum();
            match c.relation {
                Relation::Le => lhs <= c.rhs + TOL,
                Relation::Ge => lhs >= c.rhs - TOL,
                Relation::Eq => (lhs - c.rhs).abs() <= TOL,
            }
        })
}

fn combinations(total: usize, k: usize, chosen: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let start = chosen.last().map_or(0, |&l| l + 1);
    let remaining = k - chosen.len();
    for i in start..=total.saturating_sub(remaining) {
        if i >= total {
            break;
        }
        chosen.push(i);
        combinations(total, k, chosen, visit);
        chosen.pop();
    }
}

/// Gaussian elimination with partial pivoting; `None` for singular systems.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let (top, bottom) = a.split_at_mut(row);
            for (x, p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_corner() {
        let mut lp = LinearProgram::new();
        let x = lp.add_continuous("x", 0.0, 4.0).unwrap();
        let y = lp.add_continuous("y", 0.0, 4.0).unwrap();
        lp.set_objective(x, -1.0).unwrap();
        lp.set_objective(y, -2.0).unwrap();
        lp.add_constraint("c", [(x, 1.0), (y, 1.0)], Relation::Le, 5.0)
            .unwrap();
        assert_eq!(vertex_enumeration(&lp), Some(-9.0));
    }

    #[test]
    fn empty_polytope() {
        let mut lp = LinearProgram::new();
        let x = lp.add_continuous("x", 0.0, 1.0).unwrap();
        lp.add_constraint("c", [(x, 1.0)], Relation::Ge, 2.0)
            .unwrap();
        assert_eq!(vertex_enumeration(&lp), None);
    }

    #[test]
    fn knapsack_by_enumeration() {
        let mut lp = LinearProgram::new();
        let values = [10.0, 13.0, 7.0, 8.0];
        let weights = [5.0, 6.0, 3.0, 4.0];
        let cols: Vec<usize> = (0..4)
            .map(|i| lp.add_binary(format!("x{i}")).unwrap())
            .collect();
        for (&c, v) in cols.iter().zip(values) {
            lp.set_objective(c, -v).unwrap();
        }
        lp.add_constraint(
            "w",
            cols.iter().zip(weights).map(|(&c, w)| (c, w)),
            Relation::Le,
            10.0,
        )
        .unwrap();
        let (x, v) = binary_enumeration(&lp).unwrap();
        // Items 1 and 3 fill the capacity exactly.
        assert_eq!(v, -21.0);
        assert_eq!(x, vec![0.0, 1.0, 0.0, 1.0]);
    }
}
