//! Subgroup oracles and coset canonicalization for X = G/H.
//!
//! An oracle answers three questions about a subgroup H of the ambient model:
//! is g a member, which coset does g lie in (as an opaque canonical
//! [`CosetKey`]), and where does the left action send a given coset. Keys obey
//!
//! ```text
//! key(g) = key(g')  ⇔  g⁻¹g' ∈ H
//! ```
//!
//! and are stable across runs for the same oracle construction. Most families
//! compute keys in O(1) from canonical data (a normalized vector image, a
//! column-reduced matrix, an automaton state); families without a canonical
//! form fall back to a first-seen representative table scanned linearly with
//! the membership predicate.

pub mod schreier;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::group::matrix::MatZ;
use crate::group::{word, Elem, Gen, GroupError, GroupKind, GroupModel};
use crate::lattice::hnf::{hnf_rows, in_rational_row_span, pivot_col, saturate_rows};
use crate::stallings::StallingsGraph;

#[derive(Debug, Error)]
pub enum CosetError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("{op} is unsupported for oracle family {family}")]
    UnsupportedFamily {
        family: &'static str,
        op: &'static str,
    },
    #[error("fallback representative table exceeded {cap} entries")]
    FallbackTooSlow { cap: usize },
    #[error("coset key was not produced by this oracle")]
    UnknownKey,
    #[error("subgroup oracle failed its construction spot-check: {detail}")]
    OracleInconsistent { detail: String },
    #[error("bad oracle specification: {0}")]
    BadOracle(String),
}

/// Opaque canonical identifier of a coset gH.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CosetKey(Vec<u8>);

impl CosetKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(2 * self.0.len());
        for b in &self.0 {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}

impl std::fmt::Debug for CosetKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CosetKey({})", self.to_hex())
    }
}

/// A homomorphism from a free group into another model, given by the images
/// of the positive generators.
pub struct Homomorphism {
    domain: GroupModel,
    target: GroupModel,
    images: Vec<Elem>,
    inv_images: Vec<Elem>,
}

impl Homomorphism {
    pub fn new(
        domain: GroupModel,
        target: GroupModel,
        images: Vec<Elem>,
    ) -> Result<Self, CosetError> {
        let GroupKind::Free { rank } = *domain.kind() else {
            return Err(CosetError::BadOracle(
                "homomorphism domain must be a free group".into(),
            ));
        };
        if images.len() != rank {
            return Err(CosetError::BadOracle(format!(
                "need {rank} generator images, got {}",
                images.len()
            )));
        }
        let mut inv_images = Vec::with_capacity(images.len());
        for g in &images {
            target.check_element(g)?;
            inv_images.push(target.inv(g)?);
        }
        Ok(Homomorphism {
            domain,
            target,
            images,
            inv_images,
        })
    }

    pub fn domain(&self) -> &GroupModel {
        &self.domain
    }

    pub fn target(&self) -> &GroupModel {
        &self.target
    }

    /// Image of a word under the homomorphism.
    pub fn apply(&self, g: &Elem) -> Result<Elem, CosetError> {
        let Elem::Word(w) = g else {
            return Err(GroupError::MixedModel.into());
        };
        let mut acc = self.target.id();
        for &letter in w {
            let factor = if letter > 0 {
                &self.images[(letter - 1) as usize]
            } else {
                &self.inv_images[(-letter - 1) as usize]
            };
            acc = self.target.mul(&acc, factor)?;
        }
        Ok(acc)
    }
}

pub type MatrixPred = Arc<dyn Fn(&MatZ) -> bool + Send + Sync>;

enum MatrixFamily {
    UpperUnitriangular,
    LineStabilizer { line: Vec<BigInt> },
    SubspaceStabilizer { span: Vec<Vec<BigInt>> },
    CongruenceLevel { modulus: u64 },
    Custom { pred: Option<MatrixPred> },
}

enum CyclicFamily {
    FreeLetter { letter: i8 },
    FreeWord { word: Vec<i8> },
    VectorLine { base: Vec<i64> },
    // base = I + nil with nil² = 0, so baseᵏ = I + k·nil and cosets reduce
    // in closed form
    MatrixNilpotent { nil: MatZ },
}

enum Family {
    Trivial,
    WholeGroup,
    FreeGroupGens { graph: StallingsGraph },
    Matrix(MatrixFamily),
    Pullback {
        hom: Homomorphism,
        inner: Box<SubgroupOracle>,
    },
    Cyclic(CyclicFamily),
}

#[derive(Default)]
struct FallbackTable {
    reps: Vec<Elem>,
    by_key: HashMap<CosetKey, usize>,
}

/// Threshold from the design budget: a fallback table past this size means
/// the oracle needs a real key function, not a bigger scan.
pub const FALLBACK_CAP: usize = 1_000_000;

pub struct SubgroupOracle {
    model: GroupModel,
    family: Family,
    gens: Option<Vec<Elem>>,
    fallback: Mutex<FallbackTable>,
    fallback_cap: usize,
}

impl std::fmt::Debug for SubgroupOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubgroupOracle")
            .field("family", &self.family_name())
            .field("model", &self.model.hash())
            .finish_non_exhaustive()
    }
}

impl SubgroupOracle {
    fn assemble(
        model: GroupModel,
        family: Family,
        gens: Option<Vec<Elem>>,
    ) -> Result<Self, CosetError> {
        let oracle = SubgroupOracle {
            model,
            family,
            gens,
            fallback: Mutex::new(FallbackTable::default()),
            fallback_cap: FALLBACK_CAP,
        };
        oracle.spot_check()?;
        Ok(oracle)
    }

    /// H = {e}; every element is its own coset.
    pub fn trivial(model: GroupModel) -> Result<Self, CosetError> {
        Self::assemble(model, Family::Trivial, None)
    }

    /// H = G; the coset space is a single point.
    pub fn whole_group(model: GroupModel) -> Result<Self, CosetError> {
        Self::assemble(model, Family::WholeGroup, None)
    }

    /// Finitely generated subgroup of a free group, backed by the folded
    /// Stallings automaton. Keys are automaton states (core vertices plus
    /// lazily traversed hanging trees), so no representative table is needed.
    pub fn free_group_gens(model: GroupModel, gens: &[&str]) -> Result<Self, CosetError> {
        let words: Result<Vec<Vec<i8>>, _> = gens
            .iter()
            .map(|s| match model.parse_word(s) {
                Ok(Elem::Word(w)) => Ok(w),
                Ok(_) => Err(CosetError::Group(GroupError::MixedModel)),
                Err(e) => Err(CosetError::Group(e)),
            })
            .collect();
        Self::free_group_words(model, words?)
    }

    pub fn free_group_words(
        model: GroupModel,
        words: Vec<Vec<i8>>,
    ) -> Result<Self, CosetError> {
        let GroupKind::Free { rank } = *model.kind() else {
            return Err(CosetError::BadOracle(
                "free-group oracle on a non-free model".into(),
            ));
        };
        let graph = StallingsGraph::fold(rank, &words)
            .map_err(|e| CosetError::BadOracle(e.to_string()))?;
        let gens = words.into_iter().map(Elem::Word).collect();
        Self::assemble(model, Family::FreeGroupGens { graph }, Some(gens))
    }

    /// Upper unitriangular subgroup of a matrix model.
    pub fn upper_unitriangular(model: GroupModel) -> Result<Self, CosetError> {
        require_matrix(&model)?;
        Self::assemble(
            model,
            Family::Matrix(MatrixFamily::UpperUnitriangular),
            None,
        )
    }

    /// Stabilizer of the line through `line` (columns: g·v = ±v).
    pub fn line_stabilizer(model: GroupModel, line: &[i64]) -> Result<Self, CosetError> {
        let n = require_matrix(&model)?;
        if line.len() != n || line.iter().all(|&x| x == 0) {
            return Err(CosetError::BadOracle(format!(
                "line vector must be nonzero of length {n}"
            )));
        }
        let line = line.iter().map(|&x| BigInt::from(x)).collect();
        Self::assemble(
            model,
            Family::Matrix(MatrixFamily::LineStabilizer { line }),
            None,
        )
    }

    /// Stabilizer of the rational span of the given vectors (columns).
    pub fn subspace_stabilizer(
        model: GroupModel,
        basis: &[Vec<i64>],
    ) -> Result<Self, CosetError> {
        let n = require_matrix(&model)?;
        if basis.is_empty() || basis.iter().any(|v| v.len() != n) {
            return Err(CosetError::BadOracle(format!(
                "subspace basis must be nonempty vectors of length {n}"
            )));
        }
        let rows: Vec<Vec<BigInt>> = basis
            .iter()
            .map(|v| v.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let span = hnf_rows(&rows);
        if span.is_empty() {
            return Err(CosetError::BadOracle("subspace basis spans nothing".into()));
        }
        Self::assemble(
            model,
            Family::Matrix(MatrixFamily::SubspaceStabilizer { span }),
            None,
        )
    }

    /// Principal congruence subgroup: g ≡ I mod N.
    pub fn congruence_level(model: GroupModel, modulus: u64) -> Result<Self, CosetError> {
        require_matrix(&model)?;
        if modulus == 0 {
            return Err(CosetError::BadOracle("congruence level must be ≥ 1".into()));
        }
        Self::assemble(
            model,
            Family::Matrix(MatrixFamily::CongruenceLevel { modulus }),
            None,
        )
    }

    /// Membership by an arbitrary predicate; keys go through the linear-scan
    /// fallback. `pred = None` declares the family without a usable predicate
    /// (as happens when an oracle is named in a config file), in which case
    /// membership reports `UnsupportedFamily`.
    pub fn custom_matrix(
        model: GroupModel,
        pred: Option<MatrixPred>,
    ) -> Result<Self, CosetError> {
        require_matrix(&model)?;
        Self::assemble(model, Family::Matrix(MatrixFamily::Custom { pred }), None)
    }

    /// H = π⁻¹(L) for a homomorphism π out of a free group and an oracle for
    /// L in the target.
    pub fn pullback(hom: Homomorphism, inner: SubgroupOracle) -> Result<Self, CosetError> {
        if hom.target().hash() != inner.model.hash() {
            return Err(CosetError::BadOracle(
                "pullback target model differs from the inner oracle's model".into(),
            ));
        }
        let model = hom.domain().clone();
        Self::assemble(
            model,
            Family::Pullback {
                hom,
                inner: Box::new(inner),
            },
            None,
        )
    }

    /// The cyclic subgroup ⟨base⟩. Supported bases: any word in a free
    /// model, any vector, and matrices of the form I + M with M² = 0 (which
    /// covers the unipotent one-parameter subgroups used throughout). Other
    /// matrix bases are rejected at construction.
    pub fn cyclic_powers(model: GroupModel, base: Elem) -> Result<Self, CosetError> {
        model.check_element(&base)?;
        let fam = match &base {
            Elem::Word(w) => {
                if w.is_empty() {
                    return Err(CosetError::BadOracle(
                        "cyclic base is the identity; use the trivial oracle".into(),
                    ));
                }
                if w.len() == 1 {
                    CyclicFamily::FreeLetter { letter: w[0] }
                } else {
                    CyclicFamily::FreeWord { word: w.clone() }
                }
            }
            Elem::Vector(v) => {
                if v.iter().all(|&x| x == 0) {
                    return Err(CosetError::BadOracle(
                        "cyclic base is the identity; use the trivial oracle".into(),
                    ));
                }
                CyclicFamily::VectorLine { base: v.clone() }
            }
            Elem::Matrix(m) => {
                let nil = m.sub(&MatZ::identity(m.n));
                if nil.is_zero() {
                    return Err(CosetError::BadOracle(
                        "cyclic base is the identity; use the trivial oracle".into(),
                    ));
                }
                if !nil.mul(&nil).is_zero() {
                    return Err(CosetError::BadOracle(
                        "cyclic matrix base must be I + M with M² = 0".into(),
                    ));
                }
                CyclicFamily::MatrixNilpotent { nil }
            }
        };
        let gens = vec![base];
        Self::assemble(model, Family::Cyclic(fam), Some(gens))
    }

    /// Attach (or replace) the optional generator list. Each generator is
    /// checked against the membership predicate where one is available.
    pub fn with_generators(mut self, gens: Vec<Elem>) -> Result<Self, CosetError> {
        for g in &gens {
            self.model.check_element(g)?;
            match self.membership(g) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(CosetError::OracleInconsistent {
                        detail: format!("declared generator {g} fails membership"),
                    })
                }
                Err(CosetError::UnsupportedFamily { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        self.gens = Some(gens);
        Ok(self)
    }

    pub fn with_fallback_cap(mut self, cap: usize) -> Self {
        self.fallback_cap = cap;
        self
    }

    pub fn model(&self) -> &GroupModel {
        &self.model
    }

    pub fn generator_list(&self) -> Option<&[Elem]> {
        self.gens.as_deref()
    }

    /// The level N when this oracle is a principal congruence subgroup;
    /// closed-form lattice answers key off this.
    pub fn congruence_modulus(&self) -> Option<u64> {
        match &self.family {
            Family::Matrix(MatrixFamily::CongruenceLevel { modulus }) => Some(*modulus),
            _ => None,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match &self.family {
            Family::Trivial => "trivial",
            Family::WholeGroup => "whole-group",
            Family::FreeGroupGens { .. } => "free-group-gens",
            Family::Matrix(MatrixFamily::UpperUnitriangular) => "upper-unitriangular",
            Family::Matrix(MatrixFamily::LineStabilizer { .. }) => "line-stabilizer",
            Family::Matrix(MatrixFamily::SubspaceStabilizer { .. }) => "subspace-stabilizer",
            Family::Matrix(MatrixFamily::CongruenceLevel { .. }) => "congruence-level",
            Family::Matrix(MatrixFamily::Custom { .. }) => "custom",
            Family::Pullback { .. } => "pullback",
            Family::Cyclic(_) => "cyclic-powers",
        }
    }

    /// Exact membership g ∈ H.
    pub fn membership(&self, g: &Elem) -> Result<bool, CosetError> {
        self.model.check_element(g)?;
        match &self.family {
            Family::Trivial => Ok(*g == self.model.id()),
            Family::WholeGroup => Ok(true),
            Family::FreeGroupGens { graph } => {
                let Elem::Word(w) = g else {
                    return Err(GroupError::MixedModel.into());
                };
                Ok(graph.accepts(w))
            }
            Family::Matrix(fam) => {
                let Elem::Matrix(m) = g else {
                    return Err(GroupError::MixedModel.into());
                };
                self.matrix_membership(fam, m)
            }
            Family::Pullback { hom, inner } => inner.membership(&hom.apply(g)?),
            Family::Cyclic(fam) => self.cyclic_membership(fam, g),
        }
    }

    fn matrix_membership(&self, fam: &MatrixFamily, m: &MatZ) -> Result<bool, CosetError> {
        match fam {
            MatrixFamily::UpperUnitriangular => Ok(m.is_upper_unitriangular()),
            MatrixFamily::LineStabilizer { line } => {
                let image = m.mul_vec(line);
                let neg: Vec<BigInt> = line.iter().map(|x| -x).collect();
                Ok(image == *line || image == neg)
            }
            MatrixFamily::SubspaceStabilizer { span } => {
                for row in span {
                    if !in_rational_row_span(span, &m.mul_vec(row)) {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            MatrixFamily::CongruenceLevel { modulus } => {
                let n = m.n;
                let modulus = BigInt::from(*modulus);
                for i in 0..n {
                    for j in 0..n {
                        let want: i64 = if i == j { 1 } else { 0 };
                        if (m.at(i, j) - want).mod_floor(&modulus) != BigInt::zero() {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            MatrixFamily::Custom { pred } => match pred {
                Some(p) => Ok(p(m)),
                None => Err(CosetError::UnsupportedFamily {
                    family: "custom",
                    op: "membership",
                }),
            },
        }
    }

    fn cyclic_membership(&self, fam: &CyclicFamily, g: &Elem) -> Result<bool, CosetError> {
        match (fam, g) {
            (CyclicFamily::FreeLetter { letter }, Elem::Word(w)) => {
                // a reduced word cannot mix x and x⁻¹, so matching absolute
                // values means the word is a pure power
                Ok(w.iter().all(|l| l.abs() == letter.abs()))
            }
            (CyclicFamily::FreeWord { word: base }, Elem::Word(w)) => {
                Ok(free_power_of(base, w))
            }
            (CyclicFamily::VectorLine { base }, Elem::Vector(v)) => {
                let p = base.iter().position(|&x| x != 0).expect("base nonzero");
                if v[p] % base[p] != 0 {
                    return Ok(false);
                }
                let k = v[p] / base[p];
                Ok(v.iter()
                    .zip(base)
                    .all(|(&vi, &bi)| (vi as i128) == (k as i128) * (bi as i128)))
            }
            (CyclicFamily::MatrixNilpotent { nil }, Elem::Matrix(m)) => {
                let diff = m.sub(&MatZ::identity(m.n));
                if diff.is_zero() {
                    return Ok(true);
                }
                let Some((i, j)) = first_nonzero_entry(nil) else {
                    unreachable!("nil is nonzero by construction");
                };
                let (k, rem) = diff.at(i, j).div_rem(nil.at(i, j));
                if !rem.is_zero() {
                    return Ok(false);
                }
                Ok(diff == scalar_mul(nil, &k))
            }
            _ => Err(GroupError::MixedModel.into()),
        }
    }

    /// Canonical key of the coset gH.
    pub fn coset_key(&self, g: &Elem) -> Result<CosetKey, CosetError> {
        self.model.check_element(g)?;
        match &self.family {
            Family::Trivial => Ok(CosetKey(g.encode())),
            Family::WholeGroup => Ok(CosetKey(Vec::new())),
            Family::FreeGroupGens { graph } => {
                let Elem::Word(w) = g else {
                    return Err(GroupError::MixedModel.into());
                };
                let mut st = SchState::Core(0);
                for &letter in w.iter().rev() {
                    st = sch_step(graph, st, -letter);
                }
                Ok(st.encode())
            }
            Family::Matrix(fam) => {
                let Elem::Matrix(m) = g else {
                    return Err(GroupError::MixedModel.into());
                };
                self.matrix_key(fam, m)
            }
            Family::Pullback { hom, inner } => inner.coset_key(&hom.apply(g)?),
            Family::Cyclic(fam) => self.cyclic_key(fam, g),
        }
    }

    fn matrix_key(&self, fam: &MatrixFamily, m: &MatZ) -> Result<CosetKey, CosetError> {
        match fam {
            MatrixFamily::UpperUnitriangular => Ok(encode_matrix_key(&ut_canonical(m))),
            MatrixFamily::LineStabilizer { line } => {
                let mut image = m.mul_vec(line);
                normalize_sign(&mut image);
                Ok(encode_bigint_rows_key(std::slice::from_ref(&image)))
            }
            MatrixFamily::SubspaceStabilizer { span } => {
                let rows: Vec<Vec<BigInt>> = span.iter().map(|r| m.mul_vec(r)).collect();
                Ok(encode_bigint_rows_key(&saturate_rows(&rows)))
            }
            MatrixFamily::CongruenceLevel { modulus } => {
                Ok(encode_residues_key(&mat_residues(m, *modulus)))
            }
            MatrixFamily::Custom { .. } => self.fallback_key(&Elem::Matrix(m.clone())),
        }
    }

    fn cyclic_key(&self, fam: &CyclicFamily, g: &Elem) -> Result<CosetKey, CosetError> {
        match (fam, g) {
            (CyclicFamily::FreeLetter { letter }, Elem::Word(w)) => {
                let stripped = strip_trailing_letter(w, *letter);
                Ok(CosetKey(stripped.iter().map(|&l| l as u8).collect()))
            }
            (CyclicFamily::FreeWord { .. }, Elem::Word(_)) => self.fallback_key(g),
            (CyclicFamily::VectorLine { base }, Elem::Vector(v)) => {
                let reduced = reduce_vector_mod_line(v, base)?;
                Ok(encode_i64s_key(&reduced))
            }
            (CyclicFamily::MatrixNilpotent { nil }, Elem::Matrix(m)) => {
                Ok(encode_matrix_key(&nilpotent_canonical(m, nil)))
            }
            _ => Err(GroupError::MixedModel.into()),
        }
    }

    /// The coset g·x under the left action on X.
    pub fn coset_act(&self, g: &Elem, x: &CosetKey) -> Result<CosetKey, CosetError> {
        self.model.check_element(g)?;
        match &self.family {
            Family::Trivial => {
                let rep = Elem::decode(&x.0).ok_or(CosetError::UnknownKey)?;
                self.model.check_element(&rep).map_err(|_| CosetError::UnknownKey)?;
                Ok(CosetKey(self.model.mul(g, &rep)?.encode()))
            }
            Family::WholeGroup => {
                if x.0.is_empty() {
                    Ok(CosetKey(Vec::new()))
                } else {
                    Err(CosetError::UnknownKey)
                }
            }
            Family::FreeGroupGens { graph } => {
                let Elem::Word(w) = g else {
                    return Err(GroupError::MixedModel.into());
                };
                let rank = match *self.model.kind() {
                    GroupKind::Free { rank } => rank,
                    _ => unreachable!("family requires a free model"),
                };
                let mut st = SchState::decode(&x.0, graph, rank).ok_or(CosetError::UnknownKey)?;
                for &letter in w.iter().rev() {
                    st = sch_step(graph, st, -letter);
                }
                Ok(st.encode())
            }
            Family::Matrix(fam) => {
                let Elem::Matrix(m) = g else {
                    return Err(GroupError::MixedModel.into());
                };
                self.matrix_act(fam, m, x)
            }
            Family::Pullback { hom, inner } => inner.coset_act(&hom.apply(g)?, x),
            Family::Cyclic(fam) => self.cyclic_act(fam, g, x),
        }
    }

    fn matrix_act(&self, fam: &MatrixFamily, m: &MatZ, x: &CosetKey) -> Result<CosetKey, CosetError> {
        let n = self.model_dim();
        match fam {
            MatrixFamily::UpperUnitriangular => {
                let rep = decode_matrix_key(&x.0, n).ok_or(CosetError::UnknownKey)?;
                Ok(encode_matrix_key(&ut_canonical(&m.mul(&rep))))
            }
            MatrixFamily::LineStabilizer { .. } => {
                let rows = decode_bigint_rows_key(&x.0).ok_or(CosetError::UnknownKey)?;
                let [image]: [Vec<BigInt>; 1] =
                    rows.try_into().map_err(|_| CosetError::UnknownKey)?;
                if image.len() != n {
                    return Err(CosetError::UnknownKey);
                }
                let mut moved = m.mul_vec(&image);
                normalize_sign(&mut moved);
                Ok(encode_bigint_rows_key(std::slice::from_ref(&moved)))
            }
            MatrixFamily::SubspaceStabilizer { .. } => {
                let rows = decode_bigint_rows_key(&x.0).ok_or(CosetError::UnknownKey)?;
                if rows.is_empty() || rows.iter().any(|r| r.len() != n) {
                    return Err(CosetError::UnknownKey);
                }
                let moved: Vec<Vec<BigInt>> = rows.iter().map(|r| m.mul_vec(r)).collect();
                Ok(encode_bigint_rows_key(&saturate_rows(&moved)))
            }
            MatrixFamily::CongruenceLevel { modulus } => {
                let rep = decode_residues_key(&x.0, n, *modulus).ok_or(CosetError::UnknownKey)?;
                let lhs = mat_residues(m, *modulus);
                Ok(encode_residues_key(&residue_mul(&lhs, &rep, n, *modulus)))
            }
            MatrixFamily::Custom { .. } => self.fallback_act(&Elem::Matrix(m.clone()), x),
        }
    }

    fn cyclic_act(&self, fam: &CyclicFamily, g: &Elem, x: &CosetKey) -> Result<CosetKey, CosetError> {
        match (fam, g) {
            (CyclicFamily::FreeLetter { letter }, Elem::Word(w)) => {
                let rep: Vec<i8> = x.0.iter().map(|&b| b as i8).collect();
                let rank = match *self.model.kind() {
                    GroupKind::Free { rank } => rank,
                    _ => unreachable!("family requires a free model"),
                };
                if !word::is_reduced(&rep)
                    || rep.iter().any(|&l| l == 0 || l.unsigned_abs() as usize > rank)
                {
                    return Err(CosetError::UnknownKey);
                }
                let moved = word::mul_reduced(w, &rep);
                let stripped = strip_trailing_letter(&moved, *letter);
                Ok(CosetKey(stripped.iter().map(|&l| l as u8).collect()))
            }
            (CyclicFamily::FreeWord { .. }, Elem::Word(_)) => self.fallback_act(g, x),
            (CyclicFamily::VectorLine { base }, Elem::Vector(_)) => {
                let dim = base.len();
                let rep = decode_i64s_key(&x.0, dim).ok_or(CosetError::UnknownKey)?;
                let moved = self.model.mul(g, &Elem::Vector(rep))?;
                let Elem::Vector(v) = moved else { unreachable!() };
                Ok(encode_i64s_key(&reduce_vector_mod_line(&v, base)?))
            }
            (CyclicFamily::MatrixNilpotent { nil }, Elem::Matrix(m)) => {
                let rep = decode_matrix_key(&x.0, m.n).ok_or(CosetError::UnknownKey)?;
                Ok(encode_matrix_key(&nilpotent_canonical(&m.mul(&rep), nil)))
            }
            _ => Err(GroupError::MixedModel.into()),
        }
    }

    /// Key of the basepoint o = eH.
    pub fn base_point(&self) -> Result<CosetKey, CosetError> {
        self.coset_key(&self.model.id())
    }

    fn model_dim(&self) -> usize {
        match *self.model.kind() {
            GroupKind::MatrixZ { n } => n,
            GroupKind::Free { rank } => rank,
            GroupKind::FreeAbelian { dim } => dim,
        }
    }

    fn fallback_key(&self, g: &Elem) -> Result<CosetKey, CosetError> {
        let mut table = self.fallback.lock().expect("fallback table poisoned");
        for rep in &table.reps {
            let shifted = self.model.mul(&self.model.inv(rep)?, g)?;
            if self.membership(&shifted)? {
                return Ok(CosetKey(rep.encode()));
            }
        }
        if table.reps.len() >= self.fallback_cap {
            return Err(CosetError::FallbackTooSlow {
                cap: self.fallback_cap,
            });
        }
        let key = CosetKey(g.encode());
        let idx = table.reps.len();
        table.reps.push(g.clone());
        table.by_key.insert(key.clone(), idx);
        Ok(key)
    }

    fn fallback_act(&self, g: &Elem, x: &CosetKey) -> Result<CosetKey, CosetError> {
        let rep = {
            let table = self.fallback.lock().expect("fallback table poisoned");
            let idx = *table.by_key.get(x).ok_or(CosetError::UnknownKey)?;
            table.reps[idx].clone()
        };
        let moved = self.model.mul(g, &rep)?;
        self.fallback_key(&moved)
    }

    /// 200 random triples exercising the subgroup axioms through the
    /// membership predicate. Construction aborts on any violation.
    fn spot_check(&self) -> Result<(), CosetError> {
        let id = self.model.id();
        match self.membership(&id) {
            Ok(true) => {}
            Ok(false) => {
                return Err(CosetError::OracleInconsistent {
                    detail: "identity fails membership".into(),
                })
            }
            // no predicate to check (Custom without a closure)
            Err(CosetError::UnsupportedFamily { .. }) => return Ok(()),
            Err(e) => return Err(e),
        }
        let seed = u64::from_str_radix(self.model.hash(), 16).unwrap_or(0xC05E7);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for trial in 0..200 {
            let g = random_product(&self.model, &mut rng, 6)?;
            let h = if trial % 2 == 1 {
                match self.random_member(&mut rng)? {
                    Some(h) => h,
                    None => random_product(&self.model, &mut rng, 6)?,
                }
            } else {
                random_product(&self.model, &mut rng, 6)?
            };
            let mg = self.membership(&g)?;
            if mg && !self.membership(&self.model.inv(&g)?)? {
                return Err(CosetError::OracleInconsistent {
                    detail: format!("member {g} has a non-member inverse"),
                });
            }
            let mh = self.membership(&h)?;
            if trial % 2 == 1 && self.gens.is_some() && !mh {
                return Err(CosetError::OracleInconsistent {
                    detail: format!("product of declared generators {h} fails membership"),
                });
            }
            if mg && mh && !self.membership(&self.model.mul(&g, &h)?)? {
                return Err(CosetError::OracleInconsistent {
                    detail: format!("members {g} and {h} have a non-member product"),
                });
            }
        }
        Ok(())
    }

    fn random_member(&self, rng: &mut ChaCha8Rng) -> Result<Option<Elem>, CosetError> {
        let Some(gens) = &self.gens else {
            return Ok(None);
        };
        let mut acc = self.model.id();
        for _ in 0..rng.gen_range(0..=6usize) {
            let pick = &gens[rng.gen_range(0..gens.len())];
            let factor = if rng.gen_bool(0.5) {
                pick.clone()
            } else {
                self.model.inv(pick)?
            };
            acc = self.model.mul(&acc, &factor)?;
        }
        Ok(Some(acc))
    }
}

fn require_matrix(model: &GroupModel) -> Result<usize, CosetError> {
    match *model.kind() {
        GroupKind::MatrixZ { n } => Ok(n),
        _ => Err(CosetError::BadOracle(
            "this family needs a matrix model".into(),
        )),
    }
}

fn random_product(
    model: &GroupModel,
    rng: &mut ChaCha8Rng,
    max_len: usize,
) -> Result<Elem, CosetError> {
    let gens: &[Gen] = model.generators();
    let mut acc = model.id();
    for _ in 0..rng.gen_range(0..=max_len) {
        let pick = &gens[rng.gen_range(0..gens.len())];
        acc = model.mul(&acc, &pick.elem)?;
    }
    Ok(acc)
}

// ---- Schreier automaton states (free-group families) ----
//
// The folded core graph is immutable; cosets outside the core live on trees
// hanging at core vertices, encoded as the core anchor plus the freely
// reduced excursion word.

enum SchState {
    Core(u32),
    Tree(u32, Vec<i8>),
}

impl SchState {
    fn encode(&self) -> CosetKey {
        match self {
            SchState::Core(v) => {
                let mut out = Vec::with_capacity(5);
                out.push(0);
                out.extend_from_slice(&v.to_be_bytes());
                CosetKey(out)
            }
            SchState::Tree(v, w) => {
                let mut out = Vec::with_capacity(5 + w.len());
                out.push(1);
                out.extend_from_slice(&v.to_be_bytes());
                out.extend(w.iter().map(|&l| l as u8));
                CosetKey(out)
            }
        }
    }

    fn decode(bytes: &[u8], graph: &StallingsGraph, rank: usize) -> Option<SchState> {
        let (&tag, rest) = bytes.split_first()?;
        if rest.len() < 4 {
            return None;
        }
        let v = u32::from_be_bytes(rest[..4].try_into().unwrap());
        if (v as usize) >= graph.vertex_count() {
            return None;
        }
        let w: Vec<i8> = rest[4..].iter().map(|&b| b as i8).collect();
        match tag {
            0 if w.is_empty() => Some(SchState::Core(v)),
            1 if !w.is_empty()
                && word::is_reduced(&w)
                && w.iter().all(|&l| l != 0 && (l.unsigned_abs() as usize) <= rank)
                && graph.step(v, w[0]).is_none() =>
            {
                Some(SchState::Tree(v, w))
            }
            _ => None,
        }
    }
}

fn sch_step(graph: &StallingsGraph, st: SchState, letter: i8) -> SchState {
    match st {
        SchState::Core(v) => match graph.step(v, letter) {
            Some(v2) => SchState::Core(v2),
            None => SchState::Tree(v, vec![letter]),
        },
        SchState::Tree(v, mut w) => {
            if *w.last().expect("tree excursions are nonempty") == -letter {
                w.pop();
                if w.is_empty() {
                    SchState::Core(v)
                } else {
                    SchState::Tree(v, w)
                }
            } else {
                w.push(letter);
                SchState::Tree(v, w)
            }
        }
    }
}

// ---- canonical forms ----

/// Canonical representative of g·UTₙ. Right multiplication by the
/// unitriangular group adds integer multiples of earlier columns to later
/// ones, so column j is reduced into the Hermite fundamental domain of the
/// lattice spanned by columns 0..j. Unique per coset because that lattice
/// is itself a coset invariant.
fn ut_canonical(m: &MatZ) -> MatZ {
    let n = m.n;
    let mut cols: Vec<Vec<BigInt>> = (0..n)
        .map(|j| (0..n).map(|i| m.at(i, j).clone()).collect())
        .collect();
    for j in 1..n {
        let lat = hnf_rows(&cols[..j]);
        cols[j] = reduce_mod_hnf(&cols[j], &lat);
    }
    let mut out = MatZ::identity(n);
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            out.set(i, j, v.clone());
        }
    }
    out
}

fn reduce_mod_hnf(v: &[BigInt], hnf: &[Vec<BigInt>]) -> Vec<BigInt> {
    let mut v = v.to_vec();
    for row in hnf {
        let p = pivot_col(row).expect("HNF rows are nonzero");
        let q = v[p].div_floor(&row[p]);
        if !q.is_zero() {
            for (a, b) in v.iter_mut().zip(row) {
                *a -= &q * b;
            }
        }
    }
    v
}

/// Canonical representative of g·⟨I + nil⟩ with nil² = 0: the coset is
/// {g + k·(g·nil)}, an arithmetic progression of matrices, and we pin k by
/// reducing the entry at the first nonzero position of g·nil.
fn nilpotent_canonical(g: &MatZ, nil: &MatZ) -> MatZ {
    let step = g.mul(nil);
    let (i, j) = first_nonzero_entry(&step)
        .expect("g invertible and nil nonzero force g·nil nonzero");
    let s = step.at(i, j);
    let r = g.at(i, j).mod_floor(&s.abs());
    let k = (&r - g.at(i, j)) / s;
    g.add(&scalar_mul(&step, &k))
}

fn first_nonzero_entry(m: &MatZ) -> Option<(usize, usize)> {
    let n = m.n;
    (0..n * n)
        .map(|idx| (idx / n, idx % n))
        .find(|&(i, j)| !m.at(i, j).is_zero())
}

fn scalar_mul(m: &MatZ, k: &BigInt) -> MatZ {
    let n = m.n;
    let mut out = m.clone();
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, m.at(i, j) * k);
        }
    }
    out
}

fn normalize_sign(v: &mut [BigInt]) {
    if let Some(first) = v.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in v {
                *x = -std::mem::take(x);
            }
        }
    }
}

fn strip_trailing_letter(w: &[i8], letter: i8) -> Vec<i8> {
    let a = letter.abs();
    let mut end = w.len();
    while end > 0 && w[end - 1].abs() == a {
        end -= 1;
    }
    w[..end].to_vec()
}

fn free_power_of(base: &[i8], g: &[i8]) -> bool {
    if g.is_empty() {
        return true;
    }
    // base = s · c · s⁻¹ with c cyclically reduced, so ℓ(baseᵏ) = |k|·ℓ(c) + 2ℓ(s)
    // and the candidate exponent is forced by the length
    let mut a = 0;
    let mut b = base.len();
    while b - a >= 2 && base[a] == -base[b - 1] {
        a += 1;
        b -= 1;
    }
    let core = b - a;
    let pad = 2 * a;
    if g.len() < pad + core || (g.len() - pad) % core != 0 {
        return false;
    }
    let k = (g.len() - pad) / core;
    let mut pow: Vec<i8> = Vec::new();
    for _ in 0..k {
        pow = word::mul_reduced(&pow, base);
    }
    pow == g || word::inv(&pow) == g
}

fn reduce_vector_mod_line(v: &[i64], base: &[i64]) -> Result<Vec<i64>, CosetError> {
    let p = base.iter().position(|&x| x != 0).expect("base nonzero");
    let k = v[p].div_euclid(base[p]);
    v.iter()
        .zip(base)
        .map(|(&vi, &bi)| {
            let r = (vi as i128) - (k as i128) * (bi as i128);
            i64::try_from(r).map_err(|_| CosetError::Group(GroupError::Overflow))
        })
        .collect()
}

// ---- key byte codecs ----

fn push_bigint(out: &mut Vec<u8>, x: &BigInt) {
    let bytes = x.to_signed_bytes_be();
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(&bytes);
}

fn read_bigint(bytes: &[u8], pos: &mut usize) -> Option<BigInt> {
    let len = u32::from_be_bytes(bytes.get(*pos..*pos + 4)?.try_into().unwrap()) as usize;
    *pos += 4;
    let raw = bytes.get(*pos..*pos + len)?;
    *pos += len;
    Some(BigInt::from_signed_bytes_be(raw))
}

fn encode_matrix_key(m: &MatZ) -> CosetKey {
    let mut out = Vec::new();
    m.encode(&mut out);
    CosetKey(out)
}

fn decode_matrix_key(bytes: &[u8], n: usize) -> Option<MatZ> {
    let (m, used) = MatZ::decode(bytes)?;
    (used == bytes.len() && m.n == n).then_some(m)
}

fn encode_bigint_rows_key(rows: &[Vec<BigInt>]) -> CosetKey {
    let mut out = Vec::new();
    out.push(rows.len() as u8);
    out.push(rows.first().map_or(0, |r| r.len()) as u8);
    for row in rows {
        for x in row {
            push_bigint(&mut out, x);
        }
    }
    CosetKey(out)
}

fn decode_bigint_rows_key(bytes: &[u8]) -> Option<Vec<Vec<BigInt>>> {
    if bytes.len() < 2 {
        return None;
    }
    let (k, width) = (bytes[0] as usize, bytes[1] as usize);
    let mut pos = 2;
    let mut rows = Vec::with_capacity(k);
    for _ in 0..k {
        let mut row = Vec::with_capacity(width);
        for _ in 0..width {
            row.push(read_bigint(bytes, &mut pos)?);
        }
        rows.push(row);
    }
    (pos == bytes.len()).then_some(rows)
}

fn encode_i64s_key(v: &[i64]) -> CosetKey {
    let mut out = Vec::with_capacity(8 * v.len());
    for x in v {
        out.extend_from_slice(&x.to_be_bytes());
    }
    CosetKey(out)
}

fn decode_i64s_key(bytes: &[u8], dim: usize) -> Option<Vec<i64>> {
    if bytes.len() != 8 * dim {
        return None;
    }
    Some(
        bytes
            .chunks_exact(8)
            .map(|c| i64::from_be_bytes(c.try_into().unwrap()))
            .collect(),
    )
}

fn mat_residues(m: &MatZ, modulus: u64) -> Vec<u64> {
    let n = m.n;
    let big = BigInt::from(modulus);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(m.at(i, j).mod_floor(&big).to_u64().expect("residue fits"));
        }
    }
    out
}

fn residue_mul(a: &[u64], b: &[u64], n: usize, modulus: u64) -> Vec<u64> {
    let m = modulus as u128;
    let mut out = vec![0u64; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc: u128 = 0;
            for k in 0..n {
                acc = (acc + (a[i * n + k] as u128) * (b[k * n + j] as u128)) % m;
            }
            out[i * n + j] = acc as u64;
        }
    }
    out
}

fn encode_residues_key(res: &[u64]) -> CosetKey {
    let mut out = Vec::with_capacity(8 * res.len());
    for x in res {
        out.extend_from_slice(&x.to_be_bytes());
    }
    CosetKey(out)
}

fn decode_residues_key(bytes: &[u8], n: usize, modulus: u64) -> Option<Vec<u64>> {
    if bytes.len() != 8 * n * n {
        return None;
    }
    let vals: Vec<u64> = bytes
        .chunks_exact(8)
        .map(|c| u64::from_be_bytes(c.try_into().unwrap()))
        .collect();
    vals.iter().all(|&x| x < modulus).then_some(vals)
}
