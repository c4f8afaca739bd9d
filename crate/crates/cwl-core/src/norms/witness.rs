//! Falsification testing of rapid-decay-style witnesses.
//!
//! A witness asserts an upper bound ‖λ_{X,q}(f)‖ ≤ rhs(f, q) of one of
//! three shapes. Testing pits certified lower bounds (operator norm from
//! test vectors, Herz ratio from a chosen φ) against that rhs: a single
//! violation refutes the witness; absence of violations is reported as
//! "consistent" and never as a proof.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{element_length, herz_lower, lorentz_norm, opnorm_lower, FinFunc, NormError};
use crate::coset::SubgroupOracle;
use crate::group::{BallCache, Elem, GroupModel};
use crate::walk::{Kahan, Value};

#[derive(Debug, Clone)]
pub enum RDWitness {
    /// ‖λ_{X,q}(f)‖ ≤ C_h^θ ‖π_#(f·(1+ℓ)^{s₁θ})‖_{ℓ^q(X)}.
    Polynomial { c_h: f64, s1: u32 },
    /// ‖λ_{X,q}(f)‖ ≤ C^θ (R+1)^{Dθ} ‖f‖_{(q,1)} for supp f ⊆ B(R).
    PolynomialBall { c: f64, d: f64 },
    /// ‖λ_{X,q}(f)‖ ≤ ‖π_#(f·w)‖-style bound with an explicit weight
    /// table; elements outside the table fall back to the radial majorant
    /// at their length.
    WeightTable {
        w: BTreeMap<Elem, f64>,
        radial: Vec<f64>,
    },
}

impl RDWitness {
    pub fn validate(&self) -> Result<(), NormError> {
        match self {
            RDWitness::Polynomial { c_h, .. } => {
                if !(*c_h > 0.0) {
                    return Err(NormError::BadFunction("witness constant must be positive".into()));
                }
            }
            RDWitness::PolynomialBall { c, d } => {
                if !(*c > 0.0) || *d < 0.0 {
                    return Err(NormError::BadFunction("witness constants out of range".into()));
                }
            }
            RDWitness::WeightTable { w, radial } => {
                if radial.is_empty() {
                    return Err(NormError::BadFunction("empty radial majorant".into()));
                }
                if w.values().any(|&v| !(v >= 1.0)) {
                    return Err(NormError::BadFunction("weights must be ≥ 1".into()));
                }
                if radial.windows(2).any(|p| p[1] < p[0]) || radial[0] < 1.0 {
                    return Err(NormError::BadFunction(
                        "radial majorant must be non-decreasing and ≥ 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The claimed upper bound for this f at exponent q, with θ fixed by
    /// 1/q = 1 − θ/2.
    pub fn rhs<V: Value>(
        &self,
        f: &FinFunc<V>,
        oracle: &SubgroupOracle,
        q: f64,
    ) -> Result<f64, NormError> {
        if !(q > 1.0 && q <= 2.0) {
            return Err(NormError::BadOrder(q));
        }
        let theta = 2.0 * (q - 1.0) / q;
        let model = oracle.model();
        let mut cache = BallCache::ephemeral();
        match self {
            RDWitness::Polynomial { c_h, s1 } => {
                let mut buckets: BTreeMap<_, f64> = BTreeMap::new();
                for (g, v) in f.values() {
                    let len = element_length(model, g, &mut cache)?;
                    let weighted = v.to_f64() * ((1 + len) as f64).powf(*s1 as f64 * theta);
                    *buckets.entry(oracle.coset_key(g)?).or_insert(0.0) += weighted;
                }
                let mut s = Kahan::default();
                for b in buckets.values() {
                    s.add(b.powf(q));
                }
                Ok(c_h.powf(theta) * s.total().powf(1.0 / q))
            }
            RDWitness::PolynomialBall { c, d } => {
                let r = f.radius() as f64;
                Ok(c.powf(theta)
                    * (r + 1.0).powf(d * theta)
                    * lorentz_norm(f, oracle, q)?)
            }
            RDWitness::WeightTable { w, radial } => {
                let mut buckets: BTreeMap<_, f64> = BTreeMap::new();
                for (g, v) in f.values() {
                    let weight = match w.get(g) {
                        Some(&x) => x,
                        None => {
                            let len = element_length(model, g, &mut cache)? as usize;
                            radial[len.min(radial.len() - 1)]
                        }
                    };
                    *buckets.entry(oracle.coset_key(g)?).or_insert(0.0) +=
                        v.to_f64() * weight;
                }
                let mut s = Kahan::default();
                for b in buckets.values() {
                    s.add(b.powf(q));
                }
                Ok(s.total().powf(1.0 / q))
            }
        }
    }
}

/// A sampled test function, optionally with a companion φ for the Herz
/// ratio route.
#[derive(Debug, Clone)]
pub struct TestFunction<V: Value> {
    pub label: String,
    pub f: FinFunc<V>,
    pub phi: Option<FinFunc<V>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessRow {
    pub label: String,
    pub radius: u32,
    pub q: f64,
    /// Certified lower bound for the left-hand side.
    pub lhs_lower: f64,
    /// The witness's claimed upper bound.
    pub rhs: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub rows: Vec<WitnessRow>,
    pub refuted: bool,
}

impl WitnessReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "verdict": if self.refuted { "refuted" } else { "consistent" },
            "rows": self.rows.iter().map(|r| serde_json::json!({
                "label": r.label,
                "radius": r.radius,
                "q": r.q,
                "lhs_lower": r.lhs_lower,
                "rhs": r.rhs,
                "violated": r.violated,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Pits every family member against the witness at every q. The vector
/// search for the operator-norm lower bound runs inside B_X(vec_radius).
pub fn rd_witness_test<V: Value>(
    oracle: &SubgroupOracle,
    witness: &RDWitness,
    family: &[TestFunction<V>],
    q_list: &[f64],
    vec_radius: u32,
    trials: u32,
    seed: u64,
) -> Result<WitnessReport, NormError> {
    witness.validate()?;
    let mut rows = Vec::new();
    for (i, tf) in family.iter().enumerate() {
        for &q in q_list {
            let mut lhs =
                opnorm_lower(&tf.f, oracle, q, vec_radius, trials, seed.wrapping_add(i as u64))?;
            if let Some(phi) = &tf.phi {
                if (q - 2.0).abs() < 1e-12 {
                    lhs = lhs.max(herz_lower(&tf.f, phi, oracle)?);
                }
            }
            let rhs = witness.rhs(&tf.f, oracle, q)?;
            rows.push(WitnessRow {
                label: tf.label.clone(),
                radius: tf.f.radius(),
                q,
                lhs_lower: lhs,
                rhs,
                violated: lhs > rhs * (1.0 + 1e-9),
            });
        }
    }
    let refuted = rows.iter().any(|r| r.violated);
    Ok(WitnessReport { rows, refuted })
}

/// The f_R/φ_R family: f_R is the indicator of (⟨letters⟩ ∩ B(R))·c and
/// φ_R the indicator of its inverses. For free letters the translates sit
/// in pairwise distinct cosets of ⟨letters⟩, so herz_lower(f_R, φ_R)
/// recovers the subgroup ball count.
pub fn translated_ball_family<V: Value>(
    model: &GroupModel,
    letters: &[&str],
    translator: &str,
    radii: &[u32],
) -> Result<Vec<TestFunction<V>>, NormError> {
    let c = model.parse_word(translator)?;
    let mut family = Vec::new();
    for &r in radii {
        let ball = free_letter_ball(model, letters, r)?;
        let f_support: Vec<Elem> = ball
            .iter()
            .map(|h| model.mul(h, &c))
            .collect::<Result<_, _>>()?;
        let phi_support: Vec<Elem> = f_support
            .iter()
            .map(|g| model.inv(g))
            .collect::<Result<_, _>>()?;
        family.push(TestFunction {
            label: format!("translated-ball R={r}"),
            f: FinFunc::indicator(model, f_support)?,
            phi: Some(FinFunc::indicator(model, phi_support)?),
        });
    }
    Ok(family)
}

/// All reduced words over the given free-group letters up to length R,
/// enumerated by BFS. Counts follow the free-group ball formula in the
/// sub-rank.
pub fn free_letter_ball(
    model: &GroupModel,
    letters: &[&str],
    radius: u32,
) -> Result<Vec<Elem>, NormError> {
    let mut steps = Vec::new();
    for name in letters {
        let g = model.parse_word(name)?;
        if !matches!(&g, Elem::Word(w) if w.len() == 1) {
            return Err(NormError::BadFunction(format!(
                "{name} is not a single generator letter"
            )));
        }
        steps.push(g.clone());
        steps.push(model.inv(&g)?);
    }
    let mut cache = BallCache::ephemeral();
    let mut seen: std::collections::HashSet<Elem> = std::collections::HashSet::new();
    seen.insert(model.id());
    let mut out = vec![model.id()];
    let mut frontier = vec![model.id()];
    for r in 1..=radius {
        let mut next = Vec::new();
        for w in &frontier {
            for s in &steps {
                let v = model.mul(w, s)?;
                if element_length(model, &v, &mut cache)? == r && seen.insert(v.clone()) {
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(out)
}

/// Random nonnegative functions on subsets of B_G(radius), for witness
/// survival runs.
pub fn random_ball_functions(
    model: &GroupModel,
    radius: u32,
    count: u32,
    seed: u64,
) -> Result<Vec<TestFunction<f64>>, NormError> {
    let mut cache = BallCache::ephemeral();
    let ball = cache.ball(model, radius)?;
    let elems: Vec<Elem> = ball.iter().map(|(g, _)| g.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut family = Vec::new();
    for i in 0..count {
        let size = rng.gen_range(1..=elems.len().min(12));
        let support: Vec<Elem> = elems
            .choose_multiple(&mut rng, size)
            .cloned()
            .collect();
        let entries: Vec<(Elem, f64)> = support
            .into_iter()
            .map(|g| (g, rng.gen_range(0.1..2.0)))
            .collect();
        family.push(TestFunction {
            label: format!("random-{i}"),
            f: FinFunc::new(model, entries)?,
            phi: None,
        });
    }
    Ok(family)
}

/// Exact crossover search for the translated-ball refutation in rank 2:
/// the smallest R ≤ r_cap with N_R > C·(R+3)^D·√N_R, where N_R = 2·3^R − 1,
/// decided in integer arithmetic as N_R·c_den² > c_num²·(R+3)^{2D}.
pub fn ball_witness_crossover(
    c_num: u64,
    c_den: u64,
    d: u32,
    r_cap: u32,
) -> Option<u32> {
    assert!(c_den > 0, "denominator must be positive");
    let num2 = BigInt::from(c_num) * BigInt::from(c_num);
    let den2 = BigInt::from(c_den) * BigInt::from(c_den);
    let mut n_r = BigInt::from(1); // N_0 = 2·3^0 − 1
    for r in 0..=r_cap {
        let poly = BigInt::from(r as u64 + 3).pow(2 * d);
        if &n_r * &den2 > &num2 * poly {
            return Some(r);
        }
        n_r = n_r * 3 + 2; // N_{R+1} = 3·N_R + 2
    }
    None
}
