//! Square integer matrices with arbitrary-precision entries.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Row-major n x n matrix over Z.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatZ {
    pub n: usize,
    pub entries: Vec<BigInt>,
}

impl std::fmt::Debug for MatZ {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_row_string())
    }
}

impl MatZ {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigInt::one();
        }
        MatZ { n, entries }
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        let entries = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| BigInt::from(x)))
            .collect();
        MatZ { n, entries }
    }

    /// Elementary matrix I + c*E_{ij}, i != j.
    pub fn elementary(n: usize, i: usize, j: usize, c: i64) -> Self {
        assert!(i != j && i < n && j < n);
        let mut m = Self::identity(n);
        m.entries[i * n + j] = BigInt::from(c);
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.n + j] = v;
    }

    pub fn mul(&self, other: &MatZ) -> MatZ {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = other.at(k, j);
                    if !b.is_zero() {
                        entries[i * n + j] += a * b;
                    }
                }
            }
        }
        MatZ { n, entries }
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j) * &v[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &MatZ) -> MatZ {
        assert_eq!(self.n, other.n);
        MatZ {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &MatZ) -> MatZ {
        assert_eq!(self.n, other.n);
        MatZ {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn pow(&self, k: i64) -> MatZ {
        let base = if k < 0 {
            self.inverse_unimodular()
                .expect("negative power of a non-unimodular matrix")
        } else {
            self.clone()
        };
        let mut acc = MatZ::identity(self.n);
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    }

    pub fn is_identity(&self) -> bool {
        *self == MatZ::identity(self.n)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn transpose(&self) -> MatZ {
        let n = self.n;
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.at(i, j).clone();
            }
        }
        MatZ { n, entries }
    }

    /// Exact determinant by cofactor expansion for n <= 3, Bareiss beyond.
    pub fn det(&self) -> BigInt {
        let n = self.n;
        match n {
            0 => BigInt::one(),
            1 => self.at(0, 0).clone(),
            2 => self.at(0, 0) * self.at(1, 1) - self.at(0, 1) * self.at(1, 0),
            3 => {
                let m = |i: usize, j: usize| self.at(i, j);
                m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                    - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                    + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
            }
            _ => self.det_bareiss(),
        }
    }

    /// Fraction-free Gaussian elimination (Bareiss).
    fn det_bareiss(&self) -> BigInt {
        let n = self.n;
        let mut a: Vec<Vec<BigInt>> = (0..n)
            .map(|i| (0..n).map(|j| self.at(i, j).clone()).collect())
            .collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                let Some(swap) = (k + 1..n).find(|&r| !a[r][k].is_zero()) else {
                    return BigInt::zero();
                };
                a.swap(k, swap);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = num / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * a[n - 1][n - 1].clone()
    }

    /// Inverse of a matrix with det = ±1, via the adjugate. Returns None if
    /// the determinant is not a unit.
    pub fn inverse_unimodular(&self) -> Option<MatZ> {
        let d = self.det();
        if d.abs() != BigInt::one() {
            return None;
        }
        let n = self.n;
        let mut adj = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let minor = self.minor(i, j).det();
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                // adjugate transposes the cofactor matrix
                adj[j * n + i] = minor * sign * &d;
            }
        }
        Some(MatZ { n, entries: adj })
    }

    fn minor(&self, row: usize, col: usize) -> MatZ {
        let n = self.n;
        let mut entries = Vec::with_capacity((n - 1) * (n - 1));
        for i in 0..n {
            if i == row {
                continue;
            }
            for j in 0..n {
                if j == col {
                    continue;
                }
                entries.push(self.at(i, j).clone());
            }
        }
        MatZ { n: n - 1, entries }
    }

    /// Characteristic polynomial det(X*I - M), coefficients from constant
    /// term up to X^n, via the Faddeev-LeVerrier recurrence (exact: the
    /// divisions are by integers dividing the trace combinations).
    pub fn char_poly(&self) -> Vec<BigInt> {
        let n = self.n;
        let mut coeffs = vec![BigInt::zero(); n + 1];
        coeffs[n] = BigInt::one();
        let mut m = MatZ::identity(n);
        for k in 1..=n {
            m = self.mul(&m);
            let c = -m.trace() / BigInt::from(k as i64);
            coeffs[n - k] = c.clone();
            for i in 0..n {
                let e = m.at(i, i) + &c;
                m.set(i, i, e);
            }
        }
        coeffs
    }

    pub fn trace(&self) -> BigInt {
        (0..self.n).map(|i| self.at(i, i).clone()).sum()
    }

    pub fn is_upper_unitriangular(&self) -> bool {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let e = self.at(i, j);
                if i == j && !e.is_one() {
                    return false;
                }
                if i > j && !e.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_row_string(&self) -> String {
        let rows: Vec<String> = (0..self.n)
            .map(|i| {
                let row: Vec<String> = (0..self.n).map(|j| self.at(i, j).to_string()).collect();
                format!("[{}]", row.join(","))
            })
            .collect();
        format!("[{}]", rows.join(","))
    }

    /// Canonical byte encoding: dimension, then sign/length-prefixed
    /// big-endian magnitudes in row-major order.
    pub fn encode(&self, out: &mut Vec<u8>) {
        out.push(self.n as u8);
        for e in &self.entries {
            let (sign, mag) = e.to_bytes_be();
            let s = match sign {
                num_bigint::Sign::Minus => 0u8,
                num_bigint::Sign::NoSign => 1,
                num_bigint::Sign::Plus => 2,
            };
            out.push(s);
            out.extend_from_slice(&(mag.len() as u32).to_be_bytes());
            out.extend_from_slice(&mag);
        }
    }

    pub fn decode(bytes: &[u8]) -> Option<(MatZ, usize)> {
        let mut pos = 0;
        let n = *bytes.get(pos)? as usize;
        pos += 1;
        let mut entries = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            let s = *bytes.get(pos)?;
            pos += 1;
            let len = u32::from_be_bytes(bytes.get(pos..pos + 4)?.try_into().ok()?) as usize;
            pos += 4;
            let mag = bytes.get(pos..pos + len)?;
            pos += len;
            let v = match s {
                0 => BigInt::from_bytes_be(num_bigint::Sign::Minus, mag),
                1 => BigInt::zero(),
                2 => BigInt::from_bytes_be(num_bigint::Sign::Plus, mag),
                _ => return None,
            };
            entries.push(v);
        }
        Some((MatZ { n, entries }, pos))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_products() {
        // (I+E12)(I+E23) = I + E12 + E23 + E13
        let a = MatZ::elementary(3, 0, 1, 1);
        let b = MatZ::elementary(3, 1, 2, 1);
        let p = a.mul(&b);
        let expected =
            MatZ::from_i64_rows(&[vec![1, 1, 1], vec![0, 1, 1], vec![0, 0, 1]]);
        assert_eq!(p, expected);
    }

    #[test]
    fn inverse_and_det() {
        let a = MatZ::from_i64_rows(&[vec![2, 1], vec![1, 1]]);
        assert_eq!(a.det(), BigInt::one());
        let inv = a.inverse_unimodular().unwrap();
        assert!(a.mul(&inv).is_identity());
        assert!(inv.mul(&a).is_identity());

        let b = MatZ::from_i64_rows(&[vec![2, 0], vec![0, 3]]);
        assert_eq!(b.det(), BigInt::from(6));
        assert!(b.inverse_unimodular().is_none());
    }

    #[test]
    fn det_bareiss_matches_cofactor() {
        let m = MatZ::from_i64_rows(&[
            vec![3, -1, 2, 0],
            vec![1, 4, 0, -2],
            vec![0, 5, 1, 1],
            vec![2, 2, -3, 1],
        ]);
        // cross-check against Laplace expansion along the first row
        let mut lap = BigInt::zero();
        for j in 0..4 {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            lap += m.at(0, j) * m.minor(0, j).det() * sign;
        }
        assert_eq!(m.det(), lap);
    }

    #[test]
    fn char_poly_of_ballot_matrix() {
        // A = [[2,1],[1,1]]: X^2 - 3X + 1
        let a = MatZ::from_i64_rows(&[vec![2, 1], vec![1, 1]]);
        let cp = a.char_poly();
        assert_eq!(
            cp,
            vec![BigInt::from(1), BigInt::from(-3), BigInt::from(1)]
        );
        // 3x3 check against det(XI - M) at sample points
        let m = MatZ::from_i64_rows(&[vec![1, 2, 0], vec![0, 1, 5], vec![3, 0, 1]]);
        let cp = m.char_poly();
        for x in -3i64..=3 {
            let xi = MatZ::from_i64_rows(&[vec![x, 0, 0], vec![0, x, 0], vec![0, 0, x]]);
            let eval: BigInt = cp
                .iter()
                .enumerate()
                .map(|(k, c)| c * BigInt::from(x).pow(k as u32))
                .sum();
            assert_eq!(eval, xi.sub(&m).det());
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let m = MatZ::from_i64_rows(&[vec![-12345678901, 2], vec![0, 987654321]]);
        let mut buf = Vec::new();
        m.encode(&mut buf);
        let (back, used) = MatZ::decode(&buf).unwrap();
        assert_eq!(back, m);
        assert_eq!(used, buf.len());
    }
}
