//! Box probe for the rank of {x ∈ ℤ^{n−1} : u_i(x) ∈ H}, the unipotent
//! slice of a subgroup along one standard line.

use num_bigint::BigInt;
use num_traits::Zero;

use super::hnf::hnf_rows;
use super::LatticeError;
use crate::coset::SubgroupOracle;
use crate::group::{Elem, GroupKind, MatZ};

#[derive(Debug, Clone)]
pub struct RankProbe {
    pub rank: usize,
    /// Hermite basis of the span of the accepted box points (or of the
    /// closed-form lattice when `exact`).
    pub basis: Vec<Vec<BigInt>>,
    /// Congruence oracles admit the closed-form answer Nℤ^{n−1}; for
    /// membership-only oracles the rank is a lower bound valid within the
    /// box.
    pub exact: bool,
    pub line: usize,
    pub box_bound: i64,
}

/// Scans the box [−B, B]^{n−1} for points x with u_i(x) ∈ H, where u_i(x)
/// is the identity plus the entries of x spread along row i. Line indices
/// are 1-based.
pub fn unipotent_rank_probe(
    oracle: &SubgroupOracle,
    line: usize,
    bound: i64,
) -> Result<RankProbe, LatticeError> {
    let GroupKind::MatrixZ { n } = *oracle.model().kind() else {
        return Err(LatticeError::BadInput(
            "rank probe needs a matrix model".into(),
        ));
    };
    if line == 0 || line > n {
        return Err(LatticeError::BadInput(format!(
            "line index must be in 1..={n}"
        )));
    }
    if bound < 1 {
        return Err(LatticeError::BadInput("box bound must be ≥ 1".into()));
    }
    let row = line - 1;
    let cols: Vec<usize> = (0..n).filter(|&j| j != row).collect();
    let width = n - 1;

    let mut points: Vec<Vec<BigInt>> = Vec::new();
    let mut x = vec![-bound; width];
    'scan: loop {
        let mut m = MatZ::identity(n);
        for (k, &j) in cols.iter().enumerate() {
            m.set(row, j, BigInt::from(x[k]));
        }
        if oracle.membership(&Elem::Matrix(m))? {
            points.push(x.iter().map(|&c| BigInt::from(c)).collect());
        }
        let mut pos = 0;
        loop {
            if pos == width {
                break 'scan;
            }
            x[pos] += 1;
            if x[pos] <= bound {
                break;
            }
            x[pos] = -bound;
            pos += 1;
        }
    }

    if let Some(level) = oracle.congruence_modulus() {
        // u_i(x) ≡ I mod N is entrywise, so the slice is exactly Nℤ^{n−1};
        // cross-check the box against that before trusting the closed form
        let nb = BigInt::from(level);
        let per_axis = 2 * (bound / level as i64) + 1;
        let expected = (per_axis as u64).pow(width as u32);
        let all_multiples = points
            .iter()
            .all(|p| p.iter().all(|e| (e % &nb).is_zero()));
        if !all_multiples || points.len() as u64 != expected {
            return Err(LatticeError::VerificationFailed {
                detail: format!(
                    "congruence probe found {} box points, expected {expected}",
                    points.len()
                ),
            });
        }
        let basis = (0..width)
            .map(|i| {
                let mut r = vec![BigInt::ZERO; width];
                r[i] = nb.clone();
                r
            })
            .collect();
        return Ok(RankProbe {
            rank: width,
            basis,
            exact: true,
            line,
            box_bound: bound,
        });
    }

    let basis = hnf_rows(&points);
    Ok(RankProbe {
        rank: basis.len(),
        basis,
        exact: false,
        line,
        box_bound: bound,
    })
}
