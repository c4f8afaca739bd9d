//! Unimodular basis constructions: extending a primitive vector to an
//! SL_n(ℤ) basis, and conjugating a unipotent subgroup of SL₃(ℤ) into the
//! upper unitriangular group.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::hnf::int_kernel_rows;
use super::{make_primitive, vec_gcd, LatticeError};
use crate::group::MatZ;

/// Extends a primitive vector v ∈ ℤⁿ to a matrix in SL_n(ℤ) whose first
/// column is v.
///
/// Row reduction by extended-gcd blocks produces U with U·v = e₁ and
/// det U = 1; the completion is U⁻¹. The second column is normalized by
/// column-1 subtractions so the result is independent of the gcd walk.
pub fn primitive_completion(v: &[BigInt]) -> Result<MatZ, LatticeError> {
    let n = v.len();
    if n < 2 {
        return Err(LatticeError::BadInput(
            "completion needs ambient dimension ≥ 2".into(),
        ));
    }
    let g = vec_gcd(v);
    if !g.is_one() {
        return Err(LatticeError::NotPrimitive {
            gcd: g.to_string(),
        });
    }

    let mut u = MatZ::identity(n);
    let mut w: Vec<BigInt> = v.to_vec();
    loop {
        let nz: Vec<usize> = (0..n).filter(|&i| !w[i].is_zero()).collect();
        if nz.len() <= 1 {
            break;
        }
        let &i = nz
            .iter()
            .min_by(|&&a, &&b| w[a].abs().cmp(&w[b].abs()).then(a.cmp(&b)))
            .expect("at least two nonzero entries");
        let j = nz.into_iter().find(|&k| k != i).expect("a second entry");
        let eg = w[i].extended_gcd(&w[j]);
        let (a, b) = (&w[i] / &eg.gcd, &w[j] / &eg.gcd);
        // rows: rᵢ' = x·rᵢ + y·rⱼ, rⱼ' = a·rⱼ − b·rᵢ, block determinant
        // x·a + y·b = 1
        for c in 0..n {
            let ri = u.at(i, c).clone();
            let rj = u.at(j, c).clone();
            u.set(i, c, &eg.x * &ri + &eg.y * &rj);
            u.set(j, c, &a * &rj - &b * &ri);
        }
        w[i] = eg.gcd;
        w[j] = BigInt::ZERO;
    }

    let k = (0..n)
        .position(|i| !w[i].is_zero())
        .expect("a primitive vector is nonzero");
    if w[k].is_negative() {
        let other = (k + 1) % n;
        for c in 0..n {
            let a = -u.at(k, c).clone();
            u.set(k, c, a);
            let b = -u.at(other, c).clone();
            u.set(other, c, b);
        }
        let flipped = -w[k].clone();
        w[k] = flipped;
    }
    debug_assert!(w[k].is_one());
    if k != 0 {
        for c in 0..n {
            let r0 = u.at(0, c).clone();
            let rk = u.at(k, c).clone();
            u.set(0, c, rk);
            u.set(k, c, -r0);
        }
    }

    let mut m = u
        .inverse_unimodular()
        .expect("row operations preserve unimodularity");
    if m.det() == BigInt::from(-1) {
        // the lemma's sign fix: negate the second basis vector
        for r in 0..n {
            let e = -m.at(r, 1).clone();
            m.set(r, 1, e);
        }
    }
    if !v[0].is_zero() {
        let modulus = v[0].abs();
        let top = m.at(0, 1).clone();
        let delta = (top.mod_floor(&modulus) - &top) / &v[0];
        if !delta.is_zero() {
            for r in 0..n {
                let e = m.at(r, 1) + &delta * m.at(r, 0);
                m.set(r, 1, e);
            }
        }
    }

    let first_col_ok = (0..n).all(|r| m.at(r, 0) == &v[r]);
    if !first_col_ok || !m.det().is_one() {
        return Err(LatticeError::VerificationFailed {
            detail: format!("completion of {v:?} produced {m:?}"),
        });
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct Triangularization {
    /// The change of basis: g·Nᵢ·g⁻¹ is upper unitriangular for every input
    /// generator Nᵢ.
    pub g: MatZ,
    pub conjugated: Vec<MatZ>,
}

fn cube_of_difference_is_zero(m: &MatZ) -> bool {
    let nil = m.sub(&MatZ::identity(3));
    nil.mul(&nil).mul(&nil).is_zero()
}

fn rows_of(m: &MatZ) -> Vec<Vec<BigInt>> {
    (0..m.n)
        .map(|i| (0..m.n).map(|j| m.at(i, j).clone()).collect())
        .collect()
}

/// Conjugates a unipotent subgroup N = ⟨gens⟩ ≤ SL₃(ℤ) into UT₃(ℤ).
///
/// The common fixed space of the generators supplies a primitive first
/// basis vector; the induced 2×2 action is handled the same way one
/// dimension down. The returned matrix is accepted only after every
/// generator conjugates to an upper unitriangular matrix.
pub fn kolchin_triangularize(gens: &[MatZ]) -> Result<Triangularization, LatticeError> {
    for (index, m) in gens.iter().enumerate() {
        if m.n != 3 {
            return Err(LatticeError::BadInput(format!(
                "generator {index} is {0}x{0}, expected 3x3",
                m.n
            )));
        }
        if !cube_of_difference_is_zero(m) {
            return Err(LatticeError::NotUnipotent { index });
        }
    }

    let mut constraints = Vec::new();
    for m in gens {
        constraints.extend(rows_of(&m.sub(&MatZ::identity(3))));
    }
    let kern = int_kernel_rows(3, &constraints);
    if kern.is_empty() {
        return Err(LatticeError::FixedSpaceTrivial);
    }
    let v1 = make_primitive(kern[0].clone())?;
    let p = primitive_completion(&v1)?;
    let p_inv = p.inverse_unimodular().expect("det 1");

    let blocks: Vec<MatZ> = gens
        .iter()
        .map(|m| {
            let h = p_inv.mul(m).mul(&p);
            MatZ {
                n: 2,
                entries: vec![
                    h.at(1, 1).clone(),
                    h.at(1, 2).clone(),
                    h.at(2, 1).clone(),
                    h.at(2, 2).clone(),
                ],
            }
        })
        .collect();
    let mut constraints2 = Vec::new();
    for b in &blocks {
        constraints2.extend(rows_of(&b.sub(&MatZ::identity(2))));
    }
    let kern2 = int_kernel_rows(2, &constraints2);
    if kern2.is_empty() {
        return Err(LatticeError::FixedSpaceTrivial);
    }
    let u2 = make_primitive(kern2[0].clone())?;
    let q2 = primitive_completion(&u2)?;
    let mut q = MatZ::identity(3);
    for r in 0..2 {
        for c in 0..2 {
            q.set(r + 1, c + 1, q2.at(r, c).clone());
        }
    }

    let g_inv = p.mul(&q);
    let g = g_inv.inverse_unimodular().expect("det 1");
    let mut conjugated = Vec::with_capacity(gens.len());
    for (index, m) in gens.iter().enumerate() {
        let c = g.mul(m).mul(&g_inv);
        if !c.is_upper_unitriangular() {
            return Err(LatticeError::VerificationFailed {
                detail: format!("generator {index} conjugates to {c:?}"),
            });
        }
        conjugated.push(c);
    }
    Ok(Triangularization { g, conjugated })
}
