//! Length-weighted fiber diagnostics.
//!
//! For the walk law λ_n = μ^{*n} upstairs and its pushforward ν_n
//! downstairs, computes
//!
//!   a_{n,p}(x) = Σ_{g ↦ x} λ_n(g) (1 + ℓ(g))^{s/p}
//!   ω_n(x)     = Σ_{g ↦ x} λ_n(g) (1 + ℓ(g))^s / ν_n(x)
//!
//! and checks the Jensen comparison a ≤ ν · ω^{1/p} together with the a
//! priori envelope 1 ≤ ω ≤ (1 + nR)^s. When p divides s both maps are
//! rational in rational mode and the Jensen check is the exact inequality
//! a^p ≤ ν^p · ω; otherwise everything runs through f64 with a relative
//! slack of 1e-9.

use std::collections::BTreeMap;

use super::{pushforward, LiftedDistribution, Value, WalkError};
use crate::coset::{CosetKey, SubgroupOracle};
use crate::group::BallCache;

#[derive(Debug, Clone)]
pub struct WeightedDiagnostic<V: Value> {
    pub s: u32,
    pub p: u32,
    /// a_{n,p} per coset.
    pub a: BTreeMap<CosetKey, V>,
    /// ω_n per coset.
    pub omega: BTreeMap<CosetKey, V>,
    pub jensen_ok: bool,
    pub omega_bounds_ok: bool,
    /// Whether the checks were exact comparisons or float comparisons with
    /// slack.
    pub exact: bool,
}

pub fn weighted_diagnostic<V: Value>(
    lam: &LiftedDistribution<V>,
    oracle: &SubgroupOracle,
    s: u32,
    p: u32,
    walk_radius: u32,
    cache: &mut BallCache,
) -> Result<WeightedDiagnostic<V>, WalkError> {
    if p == 0 {
        return Err(WalkError::BadMeasure("exponent p must be positive".into()));
    }
    if s % p != 0 && V::EXACT {
        return Err(WalkError::BadMeasure(
            "fractional exponent s/p needs float mode".into(),
        ));
    }
    let model = oracle.model();
    let n = lam.step();
    let cap = n * walk_radius;

    // fiber sums of λ·(1+ℓ)^t for t = s/p (when integral) and t = s
    let exact_route = s % p == 0;
    let mut nu: BTreeMap<CosetKey, V> = BTreeMap::new();
    for (x, m) in pushforward(lam, oracle)?.masses() {
        nu.insert(x.clone(), m.clone());
    }
    let mut a: BTreeMap<CosetKey, V> = BTreeMap::new();
    let mut a_float: BTreeMap<CosetKey, f64> = BTreeMap::new();
    let mut omega_num: BTreeMap<CosetKey, V> = BTreeMap::new();
    for (g, m) in lam.masses() {
        let len = model
            .word_length(g, cap.max(1), cache)?
            .exact()
            .ok_or_else(|| {
                WalkError::BadMeasure(format!("support element {g} escaped B(nR)"))
            })?;
        debug_assert!(len <= cap.max(1));
        let x = oracle.coset_key(g)?;
        let weight = V::from_ratio(1 + len as i64, 1);
        let ws = weight.pow_u32(s);
        let entry = omega_num.entry(x.clone()).or_insert_with(V::zero);
        *entry = entry.add(&m.mul(&ws));
        if exact_route {
            let wt = weight.pow_u32(s / p);
            let entry = a.entry(x.clone()).or_insert_with(V::zero);
            *entry = entry.add(&m.mul(&wt));
        } else {
            let contribution = m.to_f64() * ((1 + len) as f64).powf(s as f64 / p as f64);
            *a_float.entry(x).or_insert(0.0) += contribution;
        }
    }
    if !exact_route {
        a = a_float
            .into_iter()
            .map(|(k, v)| (k, V::from_f64(v)))
            .collect();
    }

    let mut omega: BTreeMap<CosetKey, V> = BTreeMap::new();
    for (x, num) in &omega_num {
        let mass = nu.get(x).expect("same fibers");
        omega.insert(x.clone(), num.div(mass));
    }

    let one = V::one();
    let envelope = V::from_ratio(1 + cap as i64, 1).pow_u32(s);
    let mut omega_bounds_ok = true;
    for w in omega.values() {
        let lo = ge_with_slack(w, &one);
        let hi = ge_with_slack(&envelope, w);
        if !(lo && hi) {
            omega_bounds_ok = false;
        }
    }

    let mut jensen_ok = true;
    for (x, ax) in &a {
        let mass = nu.get(x).expect("same fibers");
        let w = omega.get(x).expect("same fibers");
        if exact_route {
            // a ≤ ν·ω^{1/p}  ⇔  a^p ≤ ν^p·ω  (all quantities nonnegative)
            let lhs = ax.pow_u32(p);
            let rhs = mass.pow_u32(p).mul(w);
            if !ge_with_slack(&rhs, &lhs) {
                jensen_ok = false;
            }
        } else {
            let rhs = mass.to_f64() * w.to_f64().powf(1.0 / p as f64);
            if !(ax.to_f64() <= rhs * (1.0 + 1e-9) + 1e-18) {
                jensen_ok = false;
            }
        }
    }

    Ok(WeightedDiagnostic {
        s,
        p,
        a,
        omega,
        jensen_ok,
        omega_bounds_ok,
        exact: V::EXACT && exact_route,
    })
}

fn ge_with_slack<V: Value>(big: &V, small: &V) -> bool {
    if V::EXACT {
        big.partial_cmp(small) != Some(std::cmp::Ordering::Less)
    } else {
        big.to_f64() >= small.to_f64() * (1.0 - 1e-9) - 1e-18
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coset::SubgroupOracle;
    use crate::group::GroupModel;
    use crate::walk::{convolve_lifted, Measure};
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Value::from_ratio(n, d)
    }

    #[test]
    fn one_step_schreier_equality_case() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::free_group_gens(model.clone(), &["a"]).unwrap();
        let mu: Measure<Q> = Measure::uniform_on_generators(&model).unwrap();
        let lam = convolve_lifted(&model, &mu, &LiftedDistribution::delta(&model)).unwrap();
        let mut cache = BallCache::ephemeral();
        let d = weighted_diagnostic(&lam, &oracle, 2, 2, mu.radius(), &mut cache).unwrap();
        assert!(d.exact);
        assert!(d.jensen_ok);
        assert!(d.omega_bounds_ok);
        let base = oracle.base_point().unwrap();
        // fiber over H is {a, a^-1}, both of length 1: a(H) = 2·(1/4)·2 = 1,
        // ω(H) = (2·(1/4)·4)/(1/2) = 4, and ν·ω^{1/2} = 1 exactly
        assert_eq!(d.a.get(&base), Some(&q(1, 1)));
        assert_eq!(d.omega.get(&base), Some(&q(4, 1)));
        let lhs = d.a.get(&base).unwrap().pow_u32(2);
        let rhs = q(1, 2).pow_u32(2).mul(d.omega.get(&base).unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn delta_measure_has_unit_omega() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::free_group_gens(model.clone(), &["a"]).unwrap();
        let lam: LiftedDistribution<Q> = LiftedDistribution::delta(&model);
        let mut cache = BallCache::ephemeral();
        let d = weighted_diagnostic(&lam, &oracle, 3, 1, 1, &mut cache).unwrap();
        assert_eq!(d.omega.len(), 1);
        for w in d.omega.values() {
            assert_eq!(*w, q(1, 1));
        }
        assert!(d.jensen_ok && d.omega_bounds_ok);
    }

    #[test]
    fn multi_step_bounds_hold_exactly() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::free_group_gens(model.clone(), &["a"]).unwrap();
        let mu: Measure<Q> = Measure::uniform_on_generators(&model).unwrap();
        let mut lam = LiftedDistribution::delta(&model);
        for _ in 0..4 {
            lam = convolve_lifted(&model, &mu, &lam).unwrap();
        }
        let mut cache = BallCache::ephemeral();
        for (s, p) in [(2u32, 2u32), (4, 2), (3, 3), (1, 1)] {
            let d =
                weighted_diagnostic(&lam, &oracle, s, p, mu.radius(), &mut cache).unwrap();
            assert!(d.exact, "s={s} p={p}");
            assert!(d.jensen_ok, "Jensen fails at s={s} p={p}");
            assert!(d.omega_bounds_ok, "envelope fails at s={s} p={p}");
            let envelope = q(1 + 4, 1).pow_u32(s);
            for w in d.omega.values() {
                assert!(*w >= q(1, 1));
                assert!(*w <= envelope);
            }
        }
    }

    #[test]
    fn float_route_with_fractional_exponent() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::free_group_gens(model.clone(), &["a"]).unwrap();
        let mu: Measure<f64> = Measure::uniform_on_generators(&model).unwrap();
        let mut lam = LiftedDistribution::delta(&model);
        for _ in 0..3 {
            lam = convolve_lifted(&model, &mu, &lam).unwrap();
        }
        let mut cache = BallCache::ephemeral();
        let d = weighted_diagnostic(&lam, &oracle, 3, 2, mu.radius(), &mut cache).unwrap();
        assert!(!d.exact);
        assert!(d.jensen_ok);
        assert!(d.omega_bounds_ok);
    }

    #[test]
    fn zero_p_is_rejected() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::trivial(model.clone()).unwrap();
        let lam: LiftedDistribution<Q> = LiftedDistribution::delta(&model);
        let mut cache = BallCache::ephemeral();
        let err = weighted_diagnostic(&lam, &oracle, 2, 0, 1, &mut cache).unwrap_err();
        assert!(matches!(err, WalkError::BadMeasure(_)));
    }
}
