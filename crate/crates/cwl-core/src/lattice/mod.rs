//! Integer lattices, Hermite normal forms, and the exact verifiers for the
//! named matrix-group constructions.

use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use thiserror::Error;

pub mod hnf;
pub mod probe;
pub mod unimodular;
pub mod verify;

pub use hnf::{hnf_rows, in_rational_row_span, in_row_span, int_kernel_rows, saturate_rows};
pub use probe::{unipotent_rank_probe, RankProbe};
pub use unimodular::{kolchin_triangularize, primitive_completion, Triangularization};
pub use verify::{
    named_example_ids, verify_named_example, CheckResult, CheckStatus, VerifierReport,
};

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("vector is not primitive: gcd of entries is {gcd}")]
    NotPrimitive { gcd: String },
    #[error("generator {index} is not unipotent: (g - I)^3 != 0")]
    NotUnipotent { index: usize },
    #[error("common fixed space is trivial; the generated subgroup cannot be unipotent")]
    FixedSpaceTrivial,
    #[error("post-verification failed: {detail}")]
    VerificationFailed { detail: String },
    #[error("{0}")]
    BadInput(String),
    #[error("unknown example id `{0}`")]
    UnknownExample(String),
    #[error(transparent)]
    Group(#[from] crate::group::GroupError),
    #[error(transparent)]
    Coset(#[from] crate::coset::CosetError),
    #[error(transparent)]
    Growth(#[from] crate::growth::GrowthError),
}

/// A subgroup of ℤ^d held as its canonical Hermite basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntLattice {
    dim: usize,
    hnf: Vec<Vec<BigInt>>,
}

impl IntLattice {
    pub fn new(dim: usize, generators: Vec<Vec<BigInt>>) -> Result<Self, LatticeError> {
        if dim == 0 {
            return Err(LatticeError::BadInput("ambient dimension must be ≥ 1".into()));
        }
        if generators.iter().any(|v| v.len() != dim) {
            return Err(LatticeError::BadInput(format!(
                "generator width differs from ambient dimension {dim}"
            )));
        }
        Ok(IntLattice {
            dim,
            hnf: hnf_rows(&generators),
        })
    }

    pub fn from_i64(dim: usize, generators: &[&[i64]]) -> Result<Self, LatticeError> {
        let rows = generators
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        Self::new(dim, rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.hnf.len()
    }

    pub fn basis(&self) -> &[Vec<BigInt>] {
        &self.hnf
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        v.len() == self.dim && in_row_span(&self.hnf, v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubgroupIndex {
    Finite(BigInt),
    Infinite,
}

impl fmt::Display for SubgroupIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubgroupIndex::Finite(m) => write!(f, "{m}"),
            SubgroupIndex::Infinite => f.write_str("infinite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankIndex {
    pub rank: usize,
    pub index: SubgroupIndex,
    /// When the index m is finite, whether m·e_i ∈ L held for every
    /// standard basis vector; vacuously true otherwise.
    pub scaled_inclusion_ok: bool,
}

/// Rank and index of L ≤ ℤ^d straight off the Hermite form: full rank means
/// finite index equal to the pivot product, and then the scaled standard
/// basis m·e_i is re-checked for membership.
pub fn hnf_rank_index(lattice: &IntLattice) -> RankIndex {
    let rank = lattice.rank();
    let d = lattice.dim();
    if rank < d {
        return RankIndex {
            rank,
            index: SubgroupIndex::Infinite,
            scaled_inclusion_ok: true,
        };
    }
    let m: BigInt = lattice
        .hnf
        .iter()
        .map(|row| {
            let p = hnf::pivot_col(row).expect("HNF rows are nonzero");
            row[p].clone()
        })
        .product();
    let scaled_inclusion_ok = (0..d).all(|i| {
        let mut v = vec![BigInt::ZERO; d];
        v[i] = m.clone();
        lattice.contains(&v)
    });
    RankIndex {
        rank,
        index: SubgroupIndex::Finite(m),
        scaled_inclusion_ok,
    }
}

fn vec_gcd(v: &[BigInt]) -> BigInt {
    use num_integer::Integer;
    v.iter().fold(BigInt::ZERO, |acc, x| acc.gcd(x))
}

/// Divides out the content of a nonzero vector.
fn make_primitive(mut v: Vec<BigInt>) -> Result<Vec<BigInt>, LatticeError> {
    let g = vec_gcd(&v);
    if g == BigInt::ZERO {
        return Err(LatticeError::NotPrimitive { gcd: "0".into() });
    }
    if !g.is_one() {
        for x in &mut v {
            *x /= &g;
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_lattice_index() {
        let lat = IntLattice::from_i64(2, &[&[2, 0], &[0, 3]]).unwrap();
        let ri = hnf_rank_index(&lat);
        assert_eq!(ri.rank, 2);
        assert_eq!(ri.index, SubgroupIndex::Finite(BigInt::from(6)));
        assert!(ri.scaled_inclusion_ok);
    }

    #[test]
    fn line_has_infinite_index() {
        let lat = IntLattice::from_i64(2, &[&[1, 1]]).unwrap();
        let ri = hnf_rank_index(&lat);
        assert_eq!(ri.rank, 1);
        assert_eq!(ri.index, SubgroupIndex::Infinite);
    }

    #[test]
    fn full_lattice_has_index_one() {
        for d in 1..=4 {
            let rows: Vec<Vec<BigInt>> = (0..d)
                .map(|i| {
                    let mut r = vec![BigInt::ZERO; d];
                    r[i] = BigInt::one();
                    r
                })
                .collect();
            let lat = IntLattice::new(d, rows).unwrap();
            let ri = hnf_rank_index(&lat);
            assert_eq!(ri.rank, d);
            assert_eq!(ri.index, SubgroupIndex::Finite(BigInt::one()));
            assert!(ri.scaled_inclusion_ok);
        }
    }

    #[test]
    fn skew_lattice_index_and_membership() {
        // span{(2,1),(0,3)}: index 6, and (1,0) is outside
        let lat = IntLattice::from_i64(2, &[&[2, 1], &[0, 3]]).unwrap();
        let ri = hnf_rank_index(&lat);
        assert_eq!(ri.index, SubgroupIndex::Finite(BigInt::from(6)));
        assert!(ri.scaled_inclusion_ok);
        assert!(!lat.contains(&[BigInt::one(), BigInt::ZERO]));
        assert!(lat.contains(&[BigInt::from(6), BigInt::ZERO]));
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(
            IntLattice::from_i64(0, &[]),
            Err(LatticeError::BadInput(_))
        ));
        assert!(matches!(
            IntLattice::from_i64(2, &[&[1, 2, 3]]),
            Err(LatticeError::BadInput(_))
        ));
        let empty = IntLattice::from_i64(3, &[]).unwrap();
        assert_eq!(empty.rank(), 0);
        assert_eq!(hnf_rank_index(&empty).index, SubgroupIndex::Infinite);
    }
}
