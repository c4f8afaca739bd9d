//! Lorentz mixed norms on the pair (G, H), convolution of finitely
//! supported functions, Herz-norm lower bounds and operator-norm lower
//! bounds for the translation action on ℓ^q(G/H).
//!
//! Everything here is one-sided on purpose. The Herz norm is a supremum
//! over infinitely many test functions and the operator norm lives on an
//! infinite space, so the artifact only ever certifies lower bounds (a
//! concrete φ or test vector) and witness-conditional upper bounds.

pub mod spectral;
pub mod witness;

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coset::schreier::coset_ball_keys;
use crate::coset::{CosetError, CosetKey, SubgroupOracle};
use crate::group::{BallCache, Elem, GroupError, GroupModel, DEFAULT_BUDGET};
use crate::walk::{Kahan, LiftedDistribution, Value, WalkError};

#[derive(Debug, Error)]
pub enum NormError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Coset(#[from] CosetError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("bad function: {0}")]
    BadFunction(String),
    #[error("denominator norm is zero")]
    ZeroDenominator,
    #[error("norm exponent {0} out of range")]
    BadOrder(f64),
    #[error("convolution support size {size} exceeds the budget")]
    SupportBudget { size: usize },
    #[error("need at least {need} data points, got {got}")]
    InsufficientData { need: usize, got: usize },
}

/// Finitely supported nonnegative function on the group, with its support
/// radius recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct FinFunc<V: Value> {
    values: BTreeMap<Elem, V>,
    radius: u32,
}

impl<V: Value> FinFunc<V> {
    pub fn new(model: &GroupModel, entries: Vec<(Elem, V)>) -> Result<Self, NormError> {
        let mut cache = BallCache::ephemeral();
        Self::new_with_cache(model, entries, &mut cache)
    }

    pub fn new_with_cache(
        model: &GroupModel,
        entries: Vec<(Elem, V)>,
        cache: &mut BallCache,
    ) -> Result<Self, NormError> {
        let mut values: BTreeMap<Elem, V> = BTreeMap::new();
        for (g, v) in entries {
            model.check_element(&g)?;
            match v.partial_cmp(&V::zero()) {
                Some(std::cmp::Ordering::Greater) => {
                    let entry = values.entry(g).or_insert_with(V::zero);
                    *entry = entry.add(&v);
                }
                Some(std::cmp::Ordering::Equal) => {}
                _ => {
                    return Err(NormError::BadFunction(format!(
                        "value at {g} is negative"
                    )))
                }
            }
        }
        let mut radius = 0;
        for g in values.keys() {
            radius = radius.max(element_length(model, g, cache)?);
        }
        Ok(FinFunc { values, radius })
    }

    pub fn delta(model: &GroupModel, g: Elem) -> Result<Self, NormError> {
        Self::new(model, vec![(g, V::one())])
    }

    /// Indicator function of a finite set.
    pub fn indicator(model: &GroupModel, elems: Vec<Elem>) -> Result<Self, NormError> {
        Self::new(model, elems.into_iter().map(|g| (g, V::one())).collect())
    }

    /// The walk law μ^{*n} viewed as a test function.
    pub fn from_lifted(model: &GroupModel, lam: &LiftedDistribution<V>) -> Result<Self, NormError> {
        Self::new(
            model,
            lam.masses().map(|(g, m)| (g.clone(), m.clone())).collect(),
        )
    }

    pub fn scale(&self, c: &V) -> Result<Self, NormError> {
        if c.partial_cmp(&V::zero()) == Some(std::cmp::Ordering::Less) {
            return Err(NormError::BadFunction("negative scale factor".into()));
        }
        Ok(FinFunc {
            values: self
                .values
                .iter()
                .filter(|(_, v)| !v.is_zero())
                .map(|(g, v)| (g.clone(), v.mul(c)))
                .collect(),
            radius: self.radius,
        })
    }

    pub fn values(&self) -> impl Iterator<Item = (&Elem, &V)> {
        self.values.iter()
    }

    pub fn support_size(&self) -> usize {
        self.values.len()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Total mass Σ f(g).
    pub fn l1(&self) -> V {
        let mut acc = V::acc_zero();
        for v in self.values.values() {
            V::acc_add(&mut acc, v);
        }
        V::acc_finish(acc)
    }
}

fn element_length(
    model: &GroupModel,
    g: &Elem,
    cache: &mut BallCache,
) -> Result<u32, NormError> {
    let mut cap = 16;
    loop {
        match model.word_length(g, cap, cache)?.exact() {
            Some(l) => return Ok(l),
            None if cap >= 1024 => {
                return Err(NormError::BadFunction(format!(
                    "support element {g} is farther than length 1024"
                )))
            }
            None => cap *= 2,
        }
    }
}

/// Fiber sums Σ_{g ∈ π⁻¹(x)} f(g) per coset.
pub fn fiber_sums<V: Value>(
    f: &FinFunc<V>,
    oracle: &SubgroupOracle,
) -> Result<BTreeMap<CosetKey, V>, NormError> {
    let mut buckets: BTreeMap<CosetKey, V> = BTreeMap::new();
    for (g, v) in &f.values {
        let x = oracle.coset_key(g)?;
        let entry = buckets.entry(x).or_insert_with(V::zero);
        *entry = entry.add(v);
    }
    Ok(buckets)
}

/// Exact q-th power of the mixed norm: Σ_x (Σ_{g∈π⁻¹(x)} f(g))^q for an
/// integer exponent.
pub fn lorentz_pow<V: Value>(
    f: &FinFunc<V>,
    oracle: &SubgroupOracle,
    q: u32,
) -> Result<V, NormError> {
    if q == 0 {
        return Err(NormError::BadOrder(0.0));
    }
    let mut acc = V::acc_zero();
    for b in fiber_sums(f, oracle)?.values() {
        V::acc_add(&mut acc, &b.pow_u32(q));
    }
    Ok(V::acc_finish(acc))
}

/// ‖f‖_{(q,1)}: the ℓ^q norm over cosets of the ℓ¹ fiber sums. Bucketing
/// is exact in rational mode; the final root is f64.
pub fn lorentz_norm<V: Value>(
    f: &FinFunc<V>,
    oracle: &SubgroupOracle,
    q: f64,
) -> Result<f64, NormError> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(NormError::BadOrder(q));
    }
    let mut s = Kahan::default();
    for b in fiber_sums(f, oracle)?.values() {
        let b = b.to_f64();
        if b > 0.0 {
            s.add(b.powf(q));
        }
    }
    Ok(s.total().powf(1.0 / q))
}

/// Exact convolution (f∗φ)(x) = Σ_y f(y) φ(y⁻¹x) on the group.
pub fn convolve_funcs<V: Value>(
    model: &GroupModel,
    f: &FinFunc<V>,
    phi: &FinFunc<V>,
) -> Result<FinFunc<V>, NormError> {
    convolve_funcs_with_budget(model, f, phi, DEFAULT_BUDGET)
}

pub fn convolve_funcs_with_budget<V: Value>(
    model: &GroupModel,
    f: &FinFunc<V>,
    phi: &FinFunc<V>,
    budget: usize,
) -> Result<FinFunc<V>, NormError> {
    let mut out: BTreeMap<Elem, V::Acc> = BTreeMap::new();
    for (y, a) in &f.values {
        for (z, b) in &phi.values {
            let x = model.mul(y, z)?;
            V::acc_add(out.entry(x).or_insert_with(V::acc_zero), &a.mul(b));
            if out.len() > budget {
                return Err(NormError::SupportBudget { size: out.len() });
            }
        }
    }
    FinFunc::new(
        model,
        out.into_iter().map(|(g, acc)| (g, V::acc_finish(acc))).collect(),
    )
}

/// Certified lower bound ‖f∗φ‖_{(2,1)} / ‖φ‖_{(2,1)} ≤ ‖f‖_h for the chosen
/// test function φ.
///
/// The numerator never materializes f∗φ: the fiber sums of a convolution
/// equal the coset action of f applied to the fiber sums of φ (re-index
/// g ↦ y⁻¹g inside each fiber), which costs |supp f|·|cosets of φ| products
/// instead of |supp f|·|supp φ|. `herz_lower_sq` keeps the direct
/// convolution, so the two routes stay comparable in tests.
pub fn herz_lower<V: Value>(
    f: &FinFunc<V>,
    phi: &FinFunc<V>,
    oracle: &SubgroupOracle,
) -> Result<f64, NormError> {
    if phi.is_zero() {
        return Err(NormError::ZeroDenominator);
    }
    let phi_fibers = fiber_sums(phi, oracle)?;
    let mut conv_fibers: BTreeMap<CosetKey, V::Acc> = BTreeMap::new();
    for (y, a) in &f.values {
        for (x, b) in &phi_fibers {
            let z = oracle.coset_act(y, x)?;
            V::acc_add(
                conv_fibers.entry(z).or_insert_with(V::acc_zero),
                &a.mul(b),
            );
        }
    }
    let mut num = Kahan::default();
    for acc in conv_fibers.into_values() {
        let v = V::acc_finish(acc).to_f64();
        if v > 0.0 {
            num.add(v * v);
        }
    }
    let mut den = Kahan::default();
    for b in phi_fibers.values() {
        let b = b.to_f64();
        if b > 0.0 {
            den.add(b * b);
        }
    }
    Ok(num.total().sqrt() / den.total().sqrt())
}

/// Square of `herz_lower` as an exact value: Σ-of-squares ratio, usable
/// for equality assertions in rational mode.
pub fn herz_lower_sq<V: Value>(
    f: &FinFunc<V>,
    phi: &FinFunc<V>,
    oracle: &SubgroupOracle,
) -> Result<V, NormError> {
    if phi.is_zero() {
        return Err(NormError::ZeroDenominator);
    }
    let conv = convolve_funcs(oracle.model(), f, phi)?;
    let num = lorentz_pow(&conv, oracle, 2)?;
    let den = lorentz_pow(phi, oracle, 2)?;
    Ok(num.div(&den))
}

/// Lower bound for ‖λ_{X,q}(f)‖: the best ratio ‖λ(f)ξ‖_q / ‖ξ‖_q over
/// `trials` random nonnegative vectors supported in B_X(radius), plus the
/// deterministic candidate ξ = δ_o.
pub fn opnorm_lower<V: Value>(
    f: &FinFunc<V>,
    oracle: &SubgroupOracle,
    q: f64,
    radius: u32,
    trials: u32,
    seed: u64,
) -> Result<f64, NormError> {
    if !(q > 1.0 && q <= 2.0) {
        return Err(NormError::BadOrder(q));
    }
    let keys = coset_ball_keys(oracle, radius, DEFAULT_BUDGET)?;
    let steps: Vec<(&Elem, f64)> = f.values.iter().map(|(g, v)| (g, v.to_f64())).collect();

    let apply_ratio = |xi: &[f64]| -> Result<f64, NormError> {
        let mut out: BTreeMap<CosetKey, f64> = BTreeMap::new();
        for (g, w) in &steps {
            for (x, v) in keys.iter().zip(xi) {
                if *v == 0.0 {
                    continue;
                }
                let y = oracle.coset_act(g, x)?;
                *out.entry(y).or_insert(0.0) += w * v;
            }
        }
        let mut num = Kahan::default();
        for v in out.values() {
            num.add(v.abs().powf(q));
        }
        let mut den = Kahan::default();
        for v in xi {
            den.add(v.abs().powf(q));
        }
        Ok(num.total().powf(1.0 / q) / den.total().powf(1.0 / q))
    };

    let mut delta = vec![0.0; keys.len()];
    delta[0] = 1.0;
    let mut best = apply_ratio(&delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let xi: Vec<f64> = (0..keys.len()).map(|_| rng.gen::<f64>()).collect();
        best = best.max(apply_ratio(&xi)?);
    }
    Ok(best)
}
