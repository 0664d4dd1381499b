mod common;

use fairtopk::lp::{self, LinearProgram, LpOutcome};
use fairtopk::rational::{dot, q, Q};
use itertools::Itertools;
use num_traits::Zero;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

const BOX: i64 = 1_000_000;

/// Solves the square system `rows x = rhs` exactly, `None` when singular.
fn solve_square(mut rows: Vec<Vec<Q>>, mut rhs: Vec<Q>) -> Option<Vec<Q>> {
    let n = rows.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !rows[r][col].is_zero())?;
        rows.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in 0..n {
            if r != col && !rows[r][col].is_zero() {
                let f = &rows[r][col] / &rows[col][col];
                for c in col..n {
                    let v = &f * &rows[col][c];
                    rows[r][c] -= v;
                }
                let v = &f * &rhs[col];
                rhs[r] -= v;
            }
        }
    }
    Some((0..n).map(|i| &rhs[i] / &rows[i][i]).collect())
}

/// Every vertex of `{a x <= b} ∩ [-size, size]^d`.
fn vertices(dim: usize, cons: &[(Vec<Q>, Q)], size: i64) -> Vec<Vec<Q>> {
    let mut all: Vec<(Vec<Q>, Q)> = cons.to_vec();
    for i in 0..dim {
        let mut e = vec![Q::zero(); dim];
        e[i] = q(1);
        all.push((e.clone(), q(size)));
        e[i] = q(-1);
        all.push((e, q(size)));
    }
    let mut out = Vec::new();
    for pick in (0..all.len()).combinations(dim) {
        let rows = pick.iter().map(|&i| all[i].0.clone()).collect();
        let rhs = pick.iter().map(|&i| all[i].1.clone()).collect();
        if let Some(x) = solve_square(rows, rhs) {
            if all.iter().all(|(a, b)| dot(a, &x) <= *b) {
                out.push(x);
            }
        }
    }
    out
}

fn random_lp(seed: u64) -> (LinearProgram, Vec<(Vec<Q>, Q)>) {
    let mut rng = common::rng(seed);
    let dim = rng.random_range(1..=3usize);
    let m = rng.random_range(0..=8usize);
    let mut lp = LinearProgram::new(dim).unwrap();
    let mut cons = Vec::new();
    for _ in 0..m {
        let a: Vec<Q> = (0..dim).map(|_| q(rng.random_range(-5..=5))).collect();
        let b = q(rng.random_range(-10..=10));
        lp.le(a.clone(), b.clone()).unwrap();
        cons.push((a, b));
    }
    if rng.random_bool(0.6) {
        lp.maximize((0..dim).map(|_| q(rng.random_range(-3..=3))).collect()).unwrap();
    }
    (lp, cons)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn answers_carry_certificates(seed in any::<u64>(), lp_seed in any::<u64>()) {
        let (prog, cons) = random_lp(seed);
        let verts = vertices(prog.dim(), &cons, BOX);
        match lp::solve(&prog, lp_seed).unwrap() {
            LpOutcome::Feasible(x) => {
                prop_assert!(prog.is_satisfied_by(&x));
                if let Some(c) = prog.objective() {
                    let best = verts.iter().map(|v| dot(c, v)).max().unwrap();
                    prop_assert_eq!(dot(c, &x), best);
                }
            }
            LpOutcome::Infeasible => prop_assert!(verts.is_empty()),
            LpOutcome::Unbounded => {
                let c = prog.objective().unwrap();
                // the optimum keeps growing with the clipping box
                let best = |vs: Vec<Vec<Q>>| vs.iter().map(|v| dot(c, v)).max().unwrap();
                prop_assert!(best(verts.clone()) > best(vertices(prog.dim(), &cons, BOX / 10)));
            }
        }
    }

    #[test]
    fn same_seed_same_answer(seed in any::<u64>(), lp_seed in any::<u64>()) {
        let (prog, _) = random_lp(seed);
        prop_assert_eq!(lp::solve(&prog, lp_seed).unwrap(), lp::solve(&prog, lp_seed).unwrap());
    }

    #[test]
    fn verdict_ignores_constraint_order(seed in any::<u64>(), shuffle in any::<u64>()) {
        let (prog, mut cons) = random_lp(seed);
        cons.shuffle(&mut common::rng(shuffle));
        let mut other = LinearProgram::new(prog.dim()).unwrap();
        for (a, b) in cons {
            other.le(a, b).unwrap();
        }
        if let Some(c) = prog.objective() {
            other.maximize(c.to_vec()).unwrap();
        }
        let x = lp::solve(&prog, 1).unwrap();
        let y = lp::solve(&other, 2).unwrap();
        // the lexicographic tie rule makes the answer unique
        prop_assert_eq!(x, y);
    }
}

#[test]
fn twelve_variable_program() {
    // x_i >= i / 12, sum x_i <= 7
    let mut prog = LinearProgram::new(12).unwrap();
    for i in 0..12 {
        let mut e = vec![Q::zero(); 12];
        e[i] = q(1);
        prog.ge(e, q(i as i64) / q(12)).unwrap();
    }
    prog.le(vec![q(1); 12], q(7)).unwrap();
    prog.maximize(vec![q(1); 12]).unwrap();
    match lp::solve(&prog, 5).unwrap() {
        LpOutcome::Feasible(x) => assert_eq!(x.iter().sum::<Q>(), q(7)),
        other => panic!("{other:?}"),
    }
}
