//! Random walks: exact convolution of finitely supported measures on G and
//! on X = G/H, in two value modes.
//!
//! Rational mode keeps every mass as an exact big rational, so conservation
//! laws and pushforward coherence can be asserted with equality. Float mode
//! trades that for speed at larger step counts and accumulates through
//! Kahan-compensated sums to keep mass drift below 1e-10 over dozens of
//! steps.

pub mod diagnostic;
pub mod entropy;
pub mod mc;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::coset::{CosetError, CosetKey, SubgroupOracle};
use crate::group::{BallCache, Elem, GroupError, GroupModel};

#[derive(Debug, Error)]
pub enum WalkError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Coset(#[from] CosetError),
    #[error("bad measure: {0}")]
    BadMeasure(String),
    #[error("support size {size} at step {step} exceeds the budget")]
    SupportBudget { step: u32, size: usize },
    #[error("need at least {need} data points, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error(
        "no collisions in {trials} trials; H₂ is at least {lower_bound} but unbounded above"
    )]
    ZeroCollisions { trials: u64, lower_bound: f64 },
}

/// Mass values for walk distributions: exact rationals or compensated
/// floats. The associated accumulator hides the difference between plain
/// summation and Kahan summation.
pub trait Value: Clone + PartialEq + PartialOrd + std::fmt::Debug {
    type Acc;

    /// True when arithmetic is exact and equalities may be asserted.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_f64(v: f64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;

    fn acc_zero() -> Self::Acc;
    fn acc_add(acc: &mut Self::Acc, v: &Self);
    fn acc_finish(acc: Self::Acc) -> Self;

    fn pow_u32(&self, k: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    fn mode_name() -> &'static str {
        if Self::EXACT {
            "rational"
        } else {
            "float"
        }
    }
}

impl Value for BigRational {
    type Acc = BigRational;
    const EXACT: bool = true;

    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite float converts to rational")
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).expect("rational converts to f64")
    }
    fn acc_zero() -> Self::Acc {
        <BigRational as Zero>::zero()
    }
    fn acc_add(acc: &mut Self::Acc, v: &Self) {
        *acc += v;
    }
    fn acc_finish(acc: Self::Acc) -> Self {
        acc
    }
}

/// Kahan-compensated accumulator.
#[derive(Debug, Clone, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

impl Value for f64 {
    type Acc = Kahan;
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn acc_zero() -> Self::Acc {
        Kahan::default()
    }
    fn acc_add(acc: &mut Self::Acc, v: &Self) {
        acc.add(*v);
    }
    fn acc_finish(acc: Self::Acc) -> Self {
        acc.total()
    }
}

/// Finitely supported probability measure on the group.
#[derive(Debug, Clone)]
pub struct Measure<V: Value> {
    weights: BTreeMap<Elem, V>,
    radius: u32,
    symmetric: bool,
}

impl<V: Value> Measure<V> {
    /// Validates positivity and total mass one (exactly in rational mode,
    /// within 1e-12 in float mode) and computes the support radius.
    pub fn new(model: &GroupModel, weights: Vec<(Elem, V)>) -> Result<Self, WalkError> {
        let mut cache = BallCache::ephemeral();
        Self::new_with_cache(model, weights, &mut cache)
    }

    pub fn new_with_cache(
        model: &GroupModel,
        weights: Vec<(Elem, V)>,
        cache: &mut BallCache,
    ) -> Result<Self, WalkError> {
        if weights.is_empty() {
            return Err(WalkError::BadMeasure("empty support".into()));
        }
        let mut map: BTreeMap<Elem, V> = BTreeMap::new();
        for (g, w) in weights {
            model.check_element(&g)?;
            if w.partial_cmp(&V::zero()) != Some(std::cmp::Ordering::Greater) {
                return Err(WalkError::BadMeasure(format!(
                    "weight at {g} is not positive"
                )));
            }
            let entry = map.entry(g).or_insert_with(V::zero);
            *entry = entry.add(&w);
        }
        let mut acc = V::acc_zero();
        for w in map.values() {
            V::acc_add(&mut acc, w);
        }
        let total = V::acc_finish(acc);
        let off = (total.to_f64() - 1.0).abs();
        if (V::EXACT && total != V::one()) || off > 1e-12 {
            return Err(WalkError::BadMeasure(format!(
                "total mass {} is not 1",
                total.to_f64()
            )));
        }
        let mut radius = 0;
        for g in map.keys() {
            let mut cap = 16;
            let len = loop {
                match model.word_length(g, cap, cache)?.exact() {
                    Some(l) => break l,
                    None if cap >= 1024 => {
                        return Err(WalkError::BadMeasure(format!(
                            "support element {g} is farther than length 1024"
                        )))
                    }
                    None => cap *= 2,
                }
            };
            radius = radius.max(len);
        }
        let symmetric = map.iter().try_fold(true, |ok, (g, w)| {
            let gi = model.inv(g)?;
            Ok::<bool, WalkError>(ok && map.get(&gi) == Some(w))
        })?;
        Ok(Measure {
            weights: map,
            radius,
            symmetric,
        })
    }

    /// Simple random walk: uniform on the model's generator list.
    pub fn uniform_on_generators(model: &GroupModel) -> Result<Self, WalkError> {
        let k = model.generators().len() as i64;
        let weights = model
            .generators()
            .iter()
            .map(|g| (g.elem.clone(), V::from_ratio(1, k)))
            .collect();
        Self::new(model, weights)
    }

    pub fn support(&self) -> impl Iterator<Item = (&Elem, &V)> {
        self.weights.iter()
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

/// Law of the walk on the coset space at a given step.
#[derive(Debug, Clone, PartialEq)]
pub struct CosetDistribution<V: Value> {
    masses: BTreeMap<CosetKey, V>,
    step: u32,
}

impl<V: Value> CosetDistribution<V> {
    /// δ_o at the basepoint.
    pub fn delta(oracle: &SubgroupOracle) -> Result<Self, WalkError> {
        let mut masses = BTreeMap::new();
        masses.insert(oracle.base_point()?, V::one());
        Ok(CosetDistribution { masses, step: 0 })
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn support_size(&self) -> usize {
        self.masses.len()
    }

    pub fn mass(&self, x: &CosetKey) -> Option<&V> {
        self.masses.get(x)
    }

    pub fn masses(&self) -> impl Iterator<Item = (&CosetKey, &V)> {
        self.masses.iter()
    }

    pub fn total_mass(&self) -> V {
        let mut acc = V::acc_zero();
        for v in self.masses.values() {
            V::acc_add(&mut acc, v);
        }
        V::acc_finish(acc)
    }
}

/// The exact law μ^{*n} upstairs on G.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedDistribution<V: Value> {
    masses: BTreeMap<Elem, V>,
    step: u32,
}

impl<V: Value> LiftedDistribution<V> {
    /// δ_e at the identity.
    pub fn delta(model: &GroupModel) -> Self {
        let mut masses = BTreeMap::new();
        masses.insert(model.id(), V::one());
        LiftedDistribution { masses, step: 0 }
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn support_size(&self) -> usize {
        self.masses.len()
    }

    pub fn mass(&self, g: &Elem) -> Option<&V> {
        self.masses.get(g)
    }

    pub fn masses(&self) -> impl Iterator<Item = (&Elem, &V)> {
        self.masses.iter()
    }

    pub fn total_mass(&self) -> V {
        let mut acc = V::acc_zero();
        for v in self.masses.values() {
            V::acc_add(&mut acc, v);
        }
        V::acc_finish(acc)
    }
}

/// One convolution step downstairs: ν′(x) = Σ_g μ(g) ν(g⁻¹x), realized by
/// scattering each mass along x ↦ g·x.
pub fn convolve_step<V: Value>(
    mu: &Measure<V>,
    nu: &CosetDistribution<V>,
    oracle: &SubgroupOracle,
) -> Result<CosetDistribution<V>, WalkError> {
    convolve_step_with_budget(mu, nu, oracle, crate::group::DEFAULT_BUDGET)
}

pub fn convolve_step_with_budget<V: Value>(
    mu: &Measure<V>,
    nu: &CosetDistribution<V>,
    oracle: &SubgroupOracle,
    budget: usize,
) -> Result<CosetDistribution<V>, WalkError> {
    let mut out: BTreeMap<CosetKey, V::Acc> = BTreeMap::new();
    for (x, m) in &nu.masses {
        for (g, w) in &mu.weights {
            let y = oracle.coset_act(g, x)?;
            let contribution = w.mul(m);
            V::acc_add(out.entry(y).or_insert_with(V::acc_zero), &contribution);
            if out.len() > budget {
                return Err(WalkError::SupportBudget {
                    step: nu.step + 1,
                    size: out.len(),
                });
            }
        }
    }
    Ok(CosetDistribution {
        masses: out
            .into_iter()
            .map(|(k, acc)| (k, V::acc_finish(acc)))
            .collect(),
        step: nu.step + 1,
    })
}

/// One convolution step upstairs: μ^{*(n+1)}(g) = Σ_s μ(s) μ^{*n}(s⁻¹g).
pub fn convolve_lifted<V: Value>(
    model: &GroupModel,
    mu: &Measure<V>,
    lambda: &LiftedDistribution<V>,
) -> Result<LiftedDistribution<V>, WalkError> {
    convolve_lifted_with_budget(model, mu, lambda, crate::group::DEFAULT_BUDGET)
}

pub fn convolve_lifted_with_budget<V: Value>(
    model: &GroupModel,
    mu: &Measure<V>,
    lambda: &LiftedDistribution<V>,
    budget: usize,
) -> Result<LiftedDistribution<V>, WalkError> {
    let mut out: BTreeMap<Elem, V::Acc> = BTreeMap::new();
    for (z, m) in &lambda.masses {
        for (g, w) in &mu.weights {
            let y = model.mul(g, z)?;
            let contribution = w.mul(m);
            V::acc_add(out.entry(y).or_insert_with(V::acc_zero), &contribution);
            if out.len() > budget {
                return Err(WalkError::SupportBudget {
                    step: lambda.step + 1,
                    size: out.len(),
                });
            }
        }
    }
    Ok(LiftedDistribution {
        masses: out
            .into_iter()
            .map(|(k, acc)| (k, V::acc_finish(acc)))
            .collect(),
        step: lambda.step + 1,
    })
}

/// π_#: collapse μ^{*n} onto the coset space through the oracle's keys.
pub fn pushforward<V: Value>(
    lambda: &LiftedDistribution<V>,
    oracle: &SubgroupOracle,
) -> Result<CosetDistribution<V>, WalkError> {
    let mut out: BTreeMap<CosetKey, V::Acc> = BTreeMap::new();
    for (g, m) in &lambda.masses {
        let x = oracle.coset_key(g)?;
        V::acc_add(out.entry(x).or_insert_with(V::acc_zero), m);
    }
    Ok(CosetDistribution {
        masses: out
            .into_iter()
            .map(|(k, acc)| (k, V::acc_finish(acc)))
            .collect(),
        step: lambda.step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coset::SubgroupOracle;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Value::from_ratio(n, d)
    }

    #[test]
    fn z_srw_two_steps() {
        let model = GroupModel::free_abelian(1).unwrap();
        let oracle = SubgroupOracle::trivial(model.clone()).unwrap();
        let mu: Measure<Q> = Measure::uniform_on_generators(&model).unwrap();
        let mut nu = CosetDistribution::delta(&oracle).unwrap();
        for _ in 0..2 {
            nu = convolve_step(&mu, &nu, &oracle).unwrap();
        }
        let at = |v: i64| {
            let key = oracle.coset_key(&Elem::Vector(vec![v])).unwrap();
            nu.mass(&key).cloned()
        };
        assert_eq!(at(-2), Some(q(1, 4)));
        assert_eq!(at(0), Some(q(1, 2)));
        assert_eq!(at(2), Some(q(1, 4)));
        assert_eq!(at(1), None);
        assert_eq!(nu.support_size(), 3);
        assert_eq!(nu.total_mass(), q(1, 1));
    }

    #[test]
    fn f2_one_step_uniform_on_generators() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::trivial(model.clone()).unwrap();
        let mu: Measure<Q> = Measure::uniform_on_generators(&model).unwrap();
        let nu = convolve_step(&mu, &CosetDistribution::delta(&oracle).unwrap(), &oracle)
            .unwrap();
        assert_eq!(nu.support_size(), 4);
        for (_, m) in nu.masses() {
            assert_eq!(*m, q(1, 4));
        }
    }

    #[test]
    fn f2_mod_a_one_step_masses() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::free_group_gens(model.clone(), &["a"]).unwrap();
        let mu: Measure<Q> = Measure::uniform_on_generators(&model).unwrap();
        let nu = convolve_step(&mu, &CosetDistribution::delta(&oracle).unwrap(), &oracle)
            .unwrap();
        let key = |s: &str| oracle.coset_key(&model.parse_word(s).unwrap()).unwrap();
        assert_eq!(nu.mass(&key("e")), Some(&q(1, 2)));
        assert_eq!(nu.mass(&key("b")), Some(&q(1, 4)));
        assert_eq!(nu.mass(&key("b^-1")), Some(&q(1, 4)));
        assert_eq!(nu.support_size(), 3);
    }

    #[test]
    fn f2_two_step_return_mass() {
        let model = GroupModel::free(2).unwrap();
        let mu: Measure<Q> = Measure::uniform_on_generators(&model).unwrap();
        let mut lam = LiftedDistribution::delta(&model);
        for _ in 0..2 {
            lam = convolve_lifted(&model, &mu, &lam).unwrap();
        }
        assert_eq!(lam.mass(&model.id()), Some(&q(1, 4)));
        // 4 two-letter reduced products of the same sign pair, 12 distinct
        // length-2 words, plus the identity
        assert_eq!(lam.support_size(), 13);
    }

    #[test]
    fn pushforward_matches_iterated_convolution_exactly() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::free_group_gens(model.clone(), &["a"]).unwrap();
        let mu: Measure<Q> = Measure::uniform_on_generators(&model).unwrap();
        let mut lam = LiftedDistribution::delta(&model);
        let mut nu = CosetDistribution::delta(&oracle).unwrap();
        for _ in 0..5 {
            lam = convolve_lifted(&model, &mu, &lam).unwrap();
            nu = convolve_step(&mu, &nu, &oracle).unwrap();
            assert_eq!(pushforward(&lam, &oracle).unwrap(), nu);
        }
    }

    #[test]
    fn lifted_support_stays_in_the_ball() {
        let model = GroupModel::free(2).unwrap();
        let mu: Measure<Q> = Measure::uniform_on_generators(&model).unwrap();
        assert_eq!(mu.radius(), 1);
        assert!(mu.is_symmetric());
        let mut lam = LiftedDistribution::delta(&model);
        let mut cache = BallCache::ephemeral();
        for n in 1..=5u32 {
            lam = convolve_lifted(&model, &mu, &lam).unwrap();
            for (g, _) in lam.masses() {
                let len = model
                    .word_length(g, n * mu.radius(), &mut cache)
                    .unwrap()
                    .exact()
                    .expect("support must stay within B(nR)");
                assert!(len <= n * mu.radius());
            }
        }
    }

    #[test]
    fn float_mass_conservation_over_fifty_steps() {
        let model = GroupModel::free_abelian(1).unwrap();
        let oracle = SubgroupOracle::trivial(model.clone()).unwrap();
        let mu: Measure<f64> = Measure::uniform_on_generators(&model).unwrap();
        let mut nu = CosetDistribution::delta(&oracle).unwrap();
        for _ in 0..50 {
            nu = convolve_step(&mu, &nu, &oracle).unwrap();
        }
        assert!((nu.total_mass() - 1.0).abs() < 1e-10);
        assert_eq!(nu.step(), 50);
    }

    #[test]
    fn rational_mass_conservation_is_exact() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::trivial(model.clone()).unwrap();
        let mu: Measure<Q> = Measure::uniform_on_generators(&model).unwrap();
        let mut nu = CosetDistribution::delta(&oracle).unwrap();
        for _ in 0..6 {
            nu = convolve_step(&mu, &nu, &oracle).unwrap();
        }
        assert_eq!(nu.total_mass(), q(1, 1));
    }

    #[test]
    fn budget_trips_on_support_growth() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::trivial(model.clone()).unwrap();
        let mu: Measure<Q> = Measure::uniform_on_generators(&model).unwrap();
        let nu = CosetDistribution::delta(&oracle).unwrap();
        let nu = convolve_step(&mu, &nu, &oracle).unwrap();
        let err = convolve_step_with_budget(&mu, &nu, &oracle, 5).unwrap_err();
        assert!(matches!(err, WalkError::SupportBudget { step: 2, .. }));
    }

    #[test]
    fn measure_validation() {
        let model = GroupModel::free(2).unwrap();
        let a = model.parse_word("a").unwrap();
        let b = model.parse_word("b").unwrap();
        let err = Measure::new(&model, vec![(a.clone(), q(1, 2))]).unwrap_err();
        assert!(matches!(err, WalkError::BadMeasure(_)));
        let err = Measure::new(&model, vec![(a.clone(), q(3, 2)), (b.clone(), q(-1, 2))])
            .unwrap_err();
        assert!(matches!(err, WalkError::BadMeasure(_)));
        // duplicate support entries merge
        let mu = Measure::new(
            &model,
            vec![(a.clone(), q(1, 4)), (a.clone(), q(1, 4)), (b.clone(), q(1, 2))],
        )
        .unwrap();
        assert_eq!(mu.support_size(), 2);
        assert!(!mu.is_symmetric());
        // lazy walk: identity plus two letters
        let lazy = Measure::new(
            &model,
            vec![
                (model.id(), q(1, 2)),
                (a.clone(), q(1, 4)),
                (model.inv(&a).unwrap(), q(1, 4)),
            ],
        )
        .unwrap();
        assert!(lazy.is_symmetric());
        assert_eq!(lazy.radius(), 1);
    }
}
