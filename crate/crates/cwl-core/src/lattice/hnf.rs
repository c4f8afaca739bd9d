//! Row-style Hermite normal form over Z.
//!
//! The canonical basis of a lattice given by generator rows: pivots positive,
//! each pivot strictly right of the one above, entries above a pivot reduced
//! into [0, pivot). Everything is exact big-integer arithmetic.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Canonical HNF basis of the row span; returns `rank` rows of width d.
pub fn hnf_rows(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let Some(d) = rows.first().map(|r| r.len()) else {
        return Vec::new();
    };
    assert!(rows.iter().all(|r| r.len() == d), "ragged input");
    let mut work: Vec<Vec<BigInt>> = rows
        .iter()
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .cloned()
        .collect();
    let mut result: Vec<Vec<BigInt>> = Vec::new();

    for col in 0..d {
        // gcd passes: shrink entries in this column until one row remains
        loop {
            let mut idxs: Vec<usize> = (0..work.len())
                .filter(|&i| !work[i][col].is_zero())
                .collect();
            if idxs.len() <= 1 {
                break;
            }
            let i0 = *idxs
                .iter()
                .min_by_key(|&&i| work[i][col].abs())
                .expect("nonempty");
            idxs.retain(|&i| i != i0);
            let pivot_row = work[i0].clone();
            for i in idxs {
                let q = &work[i][col] / &pivot_row[col];
                for (a, b) in work[i].iter_mut().zip(&pivot_row) {
                    *a -= &q * b;
                }
            }
            work.retain(|r| r.iter().any(|x| !x.is_zero()));
        }
        if let Some(i) = (0..work.len()).find(|&i| !work[i][col].is_zero()) {
            let mut row = work.remove(i);
            if row[col].is_negative() {
                for x in &mut row {
                    *x = -std::mem::take(x);
                }
            }
            result.push(row);
        }
    }

    // reduce entries above each pivot into [0, pivot); ascending order, so
    // later subtractions (zero left of their own pivot) cannot disturb
    // columns already reduced
    for i in 1..result.len() {
        let p = pivot_col(&result[i]).expect("result rows are nonzero");
        let pivot = result[i][p].clone();
        for j in 0..i {
            let q = result[j][p].div_floor(&pivot);
            if !q.is_zero() {
                let lower = result[i].clone();
                for (a, b) in result[j].iter_mut().zip(&lower) {
                    *a -= &q * b;
                }
            }
        }
    }
    result
}

pub fn pivot_col(row: &[BigInt]) -> Option<usize> {
    row.iter().position(|x| !x.is_zero())
}

/// Membership of a vector in the row span, by pivot elimination.
pub fn in_row_span(hnf: &[Vec<BigInt>], v: &[BigInt]) -> bool {
    let mut v = v.to_vec();
    for row in hnf {
        let p = pivot_col(row).expect("HNF rows are nonzero");
        if v[p].is_zero() {
            continue;
        }
        let (q, r) = v[p].div_rem(&row[p]);
        if !r.is_zero() {
            return false;
        }
        for (a, b) in v.iter_mut().zip(row) {
            *a -= &q * b;
        }
    }
    v.iter().all(|x| x.is_zero())
}

/// Basis (in HNF) of the integer kernel {x ∈ Zⁿ : ⟨x, c⟩ = 0 for every
/// constraint row c}. Computed by eliminating on the constraint columns of
/// the augmented rows [cᵀ | I]; the rows never consumed as pivots carry the
/// kernel in their identity part, and they span it exactly because the row
/// operations are unimodular.
pub fn int_kernel_rows(width: usize, constraints: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let k = constraints.len();
    assert!(constraints.iter().all(|c| c.len() == width), "ragged input");
    let mut work: Vec<Vec<BigInt>> = (0..width)
        .map(|i| {
            let mut row: Vec<BigInt> = constraints.iter().map(|c| c[i].clone()).collect();
            row.resize(k + width, BigInt::zero());
            row[k + i] = BigInt::one();
            row
        })
        .collect();
    for col in 0..k {
        loop {
            let mut idxs: Vec<usize> = (0..work.len())
                .filter(|&i| !work[i][col].is_zero())
                .collect();
            if idxs.len() <= 1 {
                break;
            }
            let i0 = *idxs
                .iter()
                .min_by_key(|&&i| work[i][col].abs())
                .expect("nonempty");
            idxs.retain(|&i| i != i0);
            let pivot_row = work[i0].clone();
            for i in idxs {
                let q = &work[i][col] / &pivot_row[col];
                for (a, b) in work[i].iter_mut().zip(&pivot_row) {
                    *a -= &q * b;
                }
            }
        }
        if let Some(i) = (0..work.len()).find(|&i| !work[i][col].is_zero()) {
            work.remove(i);
        }
    }
    let kernel: Vec<Vec<BigInt>> = work.into_iter().map(|r| r[k..].to_vec()).collect();
    hnf_rows(&kernel)
}

/// Canonical HNF basis of the saturation (Q-span ∩ Zⁿ) of the row span:
/// the integer kernel of the span's orthogonal complement.
pub fn saturate_rows(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let Some(n) = rows.first().map(|r| r.len()) else {
        return Vec::new();
    };
    let ortho = int_kernel_rows(n, rows);
    int_kernel_rows(n, &ortho)
}

/// Membership of a vector in the rational span of the rows.
pub fn in_rational_row_span(hnf: &[Vec<BigInt>], v: &[BigInt]) -> bool {
    if v.iter().all(|x| x.is_zero()) {
        return true;
    }
    let mut stacked: Vec<Vec<BigInt>> = hnf.to_vec();
    stacked.push(v.to_vec());
    hnf_rows(&stacked).len() == hnf.len()
}
