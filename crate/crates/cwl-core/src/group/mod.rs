//! Concrete finitely generated groups with canonical element encodings.
//!
//! Three model kinds are supported: free groups (reduced words), free-abelian
//! groups (integer vectors, standard generators), and integer matrix groups
//! (determinant-one generators closed under inversion). Equality of elements
//! is byte-equality of canonical encodings in every model.

mod ball;
pub mod matrix;
pub mod word;

pub use ball::{Ball, BallCache, DEFAULT_BUDGET};
pub use matrix::MatZ;

use num_bigint::BigInt;
use num_traits::One;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("operands belong to different group models")]
    MixedModel,
    #[error("matrix has determinant {det}, expected 1")]
    NonUnimodular { det: String },
    #[error("generator `{label}` has no inverse in the generating list")]
    MissingInverse { label: String },
    #[error("coordinate arithmetic overflowed in the free-abelian model")]
    Overflow,
    #[error("ball budget exceeded at radius {radius} ({size} elements)")]
    BudgetExceeded { radius: u32, size: usize },
    #[error("cannot parse word `{input}`: {reason}")]
    BadWord { input: String, reason: String },
    #[error("bad model parameter: {0}")]
    BadModel(String),
    #[error("ball cache i/o: {0}")]
    CacheIo(#[from] std::io::Error),
}

/// A group element in the canonical encoding of its model kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elem {
    /// Freely reduced word, letters in {±1, .., ±r}.
    Word(Vec<i8>),
    /// Integer coordinate vector.
    Vector(Vec<i64>),
    /// Determinant-one integer matrix.
    Matrix(MatZ),
}

impl Elem {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Elem::Word(w) => {
                out.push(1);
                out.extend(w.iter().map(|&x| x as u8));
            }
            Elem::Vector(v) => {
                out.push(2);
                for c in v {
                    out.extend_from_slice(&c.to_be_bytes());
                }
            }
            Elem::Matrix(m) => {
                out.push(3);
                m.encode(out);
            }
        }
    }

    pub fn decode(bytes: &[u8]) -> Option<Elem> {
        match bytes.first()? {
            1 => Some(Elem::Word(bytes[1..].iter().map(|&b| b as i8).collect())),
            2 => {
                let body = &bytes[1..];
                if body.len() % 8 != 0 {
                    return None;
                }
                let v = body
                    .chunks_exact(8)
                    .map(|c| i64::from_be_bytes(c.try_into().unwrap()))
                    .collect();
                Some(Elem::Vector(v))
            }
            3 => {
                let (m, used) = MatZ::decode(&bytes[1..])?;
                if used + 1 == bytes.len() {
                    Some(Elem::Matrix(m))
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

impl std::fmt::Display for Elem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Elem::Word(w) => write!(f, "{}", word::format_word(w)),
            Elem::Vector(v) => {
                let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            Elem::Matrix(m) => write!(f, "{}", m.to_row_string()),
        }
    }
}

/// Exact word length, or the verdict that it exceeds the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Length {
    Exact(u32),
    /// Greater than the given cap.
    Beyond(u32),
}

impl Length {
    pub fn exact(self) -> Option<u32> {
        match self {
            Length::Exact(n) => Some(n),
            Length::Beyond(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupKind {
    Free { rank: usize },
    FreeAbelian { dim: usize },
    MatrixZ { n: usize },
}

/// A directed generator with its display label.
#[derive(Debug, Clone)]
pub struct Gen {
    pub label: String,
    pub elem: Elem,
}

/// A concrete group together with a symmetric generating set.
#[derive(Debug, Clone)]
pub struct GroupModel {
    kind: GroupKind,
    gens: Vec<Gen>,
    hash: String,
}

impl GroupModel {
    pub fn free(rank: usize) -> Result<Self, GroupError> {
        if rank == 0 || rank > word::MAX_RANK {
            return Err(GroupError::BadModel(format!(
                "free rank {rank} outside 1..={}",
                word::MAX_RANK
            )));
        }
        let mut gens = Vec::with_capacity(2 * rank);
        for i in 1..=rank as i8 {
            gens.push(Gen {
                label: word::letter_name(i),
                elem: Elem::Word(vec![i]),
            });
            gens.push(Gen {
                label: word::letter_name(-i),
                elem: Elem::Word(vec![-i]),
            });
        }
        Ok(Self::with_kind(GroupKind::Free { rank }, gens))
    }

    pub fn free_abelian(dim: usize) -> Result<Self, GroupError> {
        if dim == 0 {
            return Err(GroupError::BadModel("dimension must be positive".into()));
        }
        let mut gens = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for sign in [1i64, -1] {
                let mut v = vec![0i64; dim];
                v[i] = sign;
                let suffix = if sign > 0 { "" } else { "^-1" };
                gens.push(Gen {
                    label: format!("e{}{}", i + 1, suffix),
                    elem: Elem::Vector(v),
                });
            }
        }
        Ok(Self::with_kind(GroupKind::FreeAbelian { dim }, gens))
    }

    /// Matrix group G <= SL_n(Z) from labeled generators. The list must be
    /// closed under inversion and every matrix must have determinant one.
    pub fn matrix_group(n: usize, gens: Vec<(String, MatZ)>) -> Result<Self, GroupError> {
        if n < 2 {
            return Err(GroupError::BadModel("matrix dimension must be >= 2".into()));
        }
        if gens.is_empty() {
            return Err(GroupError::BadModel("empty generating set".into()));
        }
        for (label, m) in &gens {
            if m.n != n {
                return Err(GroupError::BadModel(format!(
                    "generator `{label}` is {}x{}, expected {n}x{n}",
                    m.n, m.n
                )));
            }
            let det = m.det();
            if !det.is_one() {
                return Err(GroupError::NonUnimodular {
                    det: det.to_string(),
                });
            }
        }
        for (label, m) in &gens {
            let inv = m.inverse_unimodular().expect("det checked above");
            if !gens.iter().any(|(_, g)| *g == inv) {
                return Err(GroupError::MissingInverse {
                    label: label.clone(),
                });
            }
        }
        let gens = gens
            .into_iter()
            .map(|(label, m)| Gen {
                label,
                elem: Elem::Matrix(m),
            })
            .collect();
        Ok(Self::with_kind(GroupKind::MatrixZ { n }, gens))
    }

    /// SL_n(Z) with the elementary generators u_ij(±1). The paper-side
    /// choice of generating set is a convention; reports record it.
    pub fn sl_n_elementary(n: usize) -> Result<Self, GroupError> {
        let mut gens = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for c in [1i64, -1] {
                    let suffix = if c > 0 { "" } else { "^-1" };
                    gens.push((
                        format!("u{}{}{}", i + 1, j + 1, suffix),
                        MatZ::elementary(n, i, j, c),
                    ));
                }
            }
        }
        Self::matrix_group(n, gens)
    }

    fn with_kind(kind: GroupKind, gens: Vec<Gen>) -> Self {
        let mut hasher = Sha256::new();
        match &kind {
            GroupKind::Free { rank } => {
                hasher.update(b"free");
                hasher.update((*rank as u64).to_be_bytes());
            }
            GroupKind::FreeAbelian { dim } => {
                hasher.update(b"abelian");
                hasher.update((*dim as u64).to_be_bytes());
            }
            GroupKind::MatrixZ { n } => {
                hasher.update(b"matrix");
                hasher.update((*n as u64).to_be_bytes());
            }
        }
        for g in &gens {
            hasher.update(g.label.as_bytes());
            hasher.update(g.elem.encode());
        }
        let digest = hasher.finalize();
        let hash = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        GroupModel { kind, gens, hash }
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    /// Directed symmetric generator list; BFS and scatter loops follow this
    /// order, which makes every enumeration deterministic.
    pub fn generators(&self) -> &[Gen] {
        &self.gens
    }

    /// 16-hex-digit model hash; keys the on-disk ball caches.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn id(&self) -> Elem {
        match &self.kind {
            GroupKind::Free { .. } => Elem::Word(Vec::new()),
            GroupKind::FreeAbelian { dim } => Elem::Vector(vec![0; *dim]),
            GroupKind::MatrixZ { n } => Elem::Matrix(MatZ::identity(*n)),
        }
    }

    pub fn contains_kind(&self, g: &Elem) -> bool {
        matches!(
            (&self.kind, g),
            (GroupKind::Free { .. }, Elem::Word(_))
                | (GroupKind::FreeAbelian { .. }, Elem::Vector(_))
                | (GroupKind::MatrixZ { .. }, Elem::Matrix(_))
        )
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Result<Elem, GroupError> {
        match (&self.kind, a, b) {
            (GroupKind::Free { .. }, Elem::Word(x), Elem::Word(y)) => {
                Ok(Elem::Word(word::mul_reduced(x, y)))
            }
            (GroupKind::FreeAbelian { dim }, Elem::Vector(x), Elem::Vector(y)) => {
                if x.len() != *dim || y.len() != *dim {
                    return Err(GroupError::MixedModel);
                }
                let mut out = Vec::with_capacity(*dim);
                for (p, q) in x.iter().zip(y) {
                    out.push(p.checked_add(*q).ok_or(GroupError::Overflow)?);
                }
                Ok(Elem::Vector(out))
            }
            (GroupKind::MatrixZ { n }, Elem::Matrix(x), Elem::Matrix(y)) => {
                if x.n != *n || y.n != *n {
                    return Err(GroupError::MixedModel);
                }
                Ok(Elem::Matrix(x.mul(y)))
            }
            _ => Err(GroupError::MixedModel),
        }
    }

    pub fn inv(&self, a: &Elem) -> Result<Elem, GroupError> {
        match (&self.kind, a) {
            (GroupKind::Free { .. }, Elem::Word(x)) => Ok(Elem::Word(word::inv(x))),
            (GroupKind::FreeAbelian { dim }, Elem::Vector(x)) => {
                if x.len() != *dim {
                    return Err(GroupError::MixedModel);
                }
                let mut out = Vec::with_capacity(*dim);
                for p in x {
                    out.push(p.checked_neg().ok_or(GroupError::Overflow)?);
                }
                Ok(Elem::Vector(out))
            }
            (GroupKind::MatrixZ { n }, Elem::Matrix(x)) => {
                if x.n != *n {
                    return Err(GroupError::MixedModel);
                }
                match x.inverse_unimodular() {
                    Some(inv) => Ok(Elem::Matrix(inv)),
                    None => Err(GroupError::NonUnimodular {
                        det: x.det().to_string(),
                    }),
                }
            }
            _ => Err(GroupError::MixedModel),
        }
    }

    /// Validates a user-supplied element for this model (free reduction,
    /// dimensions, determinant one). Canonical constructors and `mul`/`inv`
    /// preserve these properties, so the check runs once at the boundary.
    pub fn check_element(&self, g: &Elem) -> Result<(), GroupError> {
        match (&self.kind, g) {
            (GroupKind::Free { rank }, Elem::Word(w)) => {
                if !word::is_reduced(w) || w.iter().any(|&x| x.unsigned_abs() as usize > *rank) {
                    return Err(GroupError::BadWord {
                        input: format!("{g}"),
                        reason: "not a reduced word over the model alphabet".into(),
                    });
                }
                Ok(())
            }
            (GroupKind::FreeAbelian { dim }, Elem::Vector(v)) => {
                if v.len() != *dim {
                    return Err(GroupError::MixedModel);
                }
                Ok(())
            }
            (GroupKind::MatrixZ { n }, Elem::Matrix(m)) => {
                if m.n != *n {
                    return Err(GroupError::MixedModel);
                }
                if !m.det().is_one() {
                    return Err(GroupError::NonUnimodular {
                        det: m.det().to_string(),
                    });
                }
                Ok(())
            }
            _ => Err(GroupError::MixedModel),
        }
    }

    /// Word length with respect to the model's generating set. Free and
    /// free-abelian lengths are closed-form; matrix lengths come from the
    /// cached ball (hence the cap).
    pub fn word_length(
        &self,
        g: &Elem,
        cap: u32,
        cache: &mut BallCache,
    ) -> Result<Length, GroupError> {
        if !self.contains_kind(g) {
            return Err(GroupError::MixedModel);
        }
        match (&self.kind, g) {
            (GroupKind::Free { .. }, Elem::Word(w)) => {
                let len = w.len() as u32;
                Ok(if len <= cap {
                    Length::Exact(len)
                } else {
                    Length::Beyond(cap)
                })
            }
            (GroupKind::FreeAbelian { .. }, Elem::Vector(v)) => {
                let len: u64 = v.iter().map(|c| c.unsigned_abs()).sum();
                Ok(if len <= cap as u64 {
                    Length::Exact(len as u32)
                } else {
                    Length::Beyond(cap)
                })
            }
            (GroupKind::MatrixZ { .. }, _) => {
                // the cached ball may exceed the cap, so re-check the length
                let ball = cache.ball(self, cap)?;
                Ok(match ball.length_of(g) {
                    Some(len) if len <= cap => Length::Exact(len),
                    _ => Length::Beyond(cap),
                })
            }
            _ => unreachable!("kind checked above"),
        }
    }

    /// Convenience: parse a free-group word in this model.
    pub fn parse_word(&self, input: &str) -> Result<Elem, GroupError> {
        match &self.kind {
            GroupKind::Free { rank } => Ok(Elem::Word(word::parse_word(*rank, input)?)),
            _ => Err(GroupError::BadModel(
                "word syntax applies to free-group models only".into(),
            )),
        }
    }

    /// u(a, b) = I + a*E21 + b*E31: the first-column unipotents of the
    /// semidirect-product example (they stabilize the plane <e2, e3>).
    pub fn col_unipotent(v: &[i64]) -> MatZ {
        let n = v.len() + 1;
        let mut m = MatZ::identity(n);
        for (k, &c) in v.iter().enumerate() {
            m.set(k + 1, 0, BigInt::from(c));
        }
        m
    }

    /// u_i(x) = I + sum_j x_j E_{i,j}: the row-i unipotents; for the i-th
    /// standard line these form the unipotent radical of its stabilizer.
    pub fn row_unipotent(n: usize, i: usize, x: &[i64]) -> MatZ {
        assert_eq!(x.len(), n - 1);
        let mut m = MatZ::identity(n);
        let mut k = 0;
        for j in 0..n {
            if j == i {
                continue;
            }
            m.set(i, j, BigInt::from(x[k]));
            k += 1;
        }
        m
    }
}

/// Mass-produced products for tests and spot checks: multiplies the listed
/// generators left to right.
pub fn product_of(model: &GroupModel, gen_indices: &[usize]) -> Result<Elem, GroupError> {
    let mut acc = model.id();
    for &i in gen_indices {
        acc = model.mul(&acc, &model.generators()[i].elem)?;
    }
    Ok(acc)
}
