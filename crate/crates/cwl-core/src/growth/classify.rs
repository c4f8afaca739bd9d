//! Subgroup and conjugate-intersection growth, the covering decomposition
//! check, and the rule-based verdict engine for the subexponential
//! lower-control property.

use sha2::{Digest, Sha256};

use super::fit::GrowthClass;
use super::{GrowthError, GrowthSeries, GrowthSource};
use crate::coset::SubgroupOracle;
use crate::group::{BallCache, Elem};

/// Counts |H ∩ B_G(r)| for r ≤ radius by filtering the ball through the
/// membership oracle.
pub fn subgroup_growth(
    oracle: &SubgroupOracle,
    radius: u32,
    cache: &mut BallCache,
) -> Result<GrowthSeries, GrowthError> {
    let ball = cache.ball(oracle.model(), radius)?;
    let mut spheres = vec![0u64; radius as usize + 1];
    for (g, len) in ball.iter() {
        // the cache may hand back a larger ball than requested
        if len <= radius && oracle.membership(g)? {
            spheres[len as usize] += 1;
        }
    }
    let mut counts = Vec::with_capacity(spheres.len());
    let mut total = 0;
    for s in spheres {
        total += s;
        counts.push(total);
    }
    GrowthSeries::new(counts, GrowthSource::SubgroupBall)
}

/// Counts |H ∩ xHx⁻¹ ∩ B_G(r)|: elements of the ball lying in H whose
/// conjugate x⁻¹gx also lies in H.
pub fn conj_intersection_growth(
    oracle: &SubgroupOracle,
    x: &Elem,
    radius: u32,
    cache: &mut BallCache,
) -> Result<GrowthSeries, GrowthError> {
    let model = oracle.model();
    let x_inv = model.inv(x)?;
    let ball = cache.ball(model, radius)?;
    let mut spheres = vec![0u64; radius as usize + 1];
    for (g, len) in ball.iter() {
        if len <= radius && oracle.membership(g)? {
            let conj = model.mul(&model.mul(&x_inv, g)?, x)?;
            if oracle.membership(&conj)? {
                spheres[len as usize] += 1;
            }
        }
    }
    let mut counts = Vec::with_capacity(spheres.len());
    let mut total = 0;
    for s in spheres {
        total += s;
        counts.push(total);
    }
    GrowthSeries::new(counts, GrowthSource::IntersectionBall)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringCheck {
    /// Whether H∩B(R) ⊆ ⋃_{s∈S_R} s·(K_x∩B(2R)) held on this instance.
    /// This inclusion is a theorem; false indicates a defect.
    pub ok: bool,
    /// |S_R|: one representative per left K_x-coset meeting H∩B(R).
    pub reps: u64,
}

/// Builds the representative set S_R greedily over H∩B(R) in length-then-
/// lexicographic order and verifies the covering with the ℓ(s⁻¹h) ≤ 2R
/// bound.
pub fn covering_check(
    oracle: &SubgroupOracle,
    x: &Elem,
    radius: u32,
    cache: &mut BallCache,
) -> Result<CoveringCheck, GrowthError> {
    let model = oracle.model();
    let x_inv = model.inv(x)?;
    let in_kx = |g: &Elem| -> Result<bool, GrowthError> {
        if !oracle.membership(g)? {
            return Ok(false);
        }
        let conj = model.mul(&model.mul(&x_inv, g)?, x)?;
        Ok(oracle.membership(&conj)?)
    };

    let ball = cache.ball(model, radius)?;
    let mut members: Vec<(u32, Elem)> = Vec::new();
    for (g, len) in ball.iter() {
        if len <= radius && oracle.membership(g)? {
            members.push((len, g.clone()));
        }
    }
    members.sort();

    let mut reps: Vec<Elem> = Vec::new();
    let mut ok = true;
    for (_, h) in &members {
        let mut covered = false;
        for s in &reps {
            let k = model.mul(&model.inv(s)?, h)?;
            if in_kx(&k)? {
                // the covering bound: k = s⁻¹h must lie in B(2R)
                let len = model
                    .word_length(&k, 2 * radius, cache)?
                    .exact();
                if len.is_none() {
                    ok = false;
                }
                covered = true;
                break;
            }
        }
        if !covered {
            reps.push(h.clone());
        }
    }
    Ok(CoveringCheck {
        ok,
        reps: reps.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlcVerdict {
    ConsistentViaSubexpSchreier,
    RefutedNonSNormalSuperpoly,
    RefutedCoAmenableExpSchreier,
    Undetermined,
}

#[derive(Debug, Clone, Default)]
pub struct SlcInputs {
    pub schreier: Option<GrowthClass>,
    pub subgroup: Option<GrowthClass>,
    /// Per-sample conjugate-intersection classes, keyed by a label for the
    /// conjugator.
    pub intersections: Vec<(String, GrowthClass)>,
    /// User-declared co-amenability with a provenance note; never
    /// computed.
    pub co_amenable: Option<(bool, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlcReport {
    pub verdict: SlcVerdict,
    /// Machine-readable rule identifier backing the verdict.
    pub rule: &'static str,
    /// Digest of the inputs the verdict was computed from.
    pub inputs_digest: String,
}

const RULE_SUBEXP: &str = "subexp-schreier-implies-slc";
const RULE_NON_S_NORMAL: &str = "bounded-intersection-and-exponential-subgroup";
const RULE_CO_AMENABLE: &str = "co-amenable-and-exponential-schreier";
const RULE_NONE: &str = "no-rule-applicable";

fn digest_inputs(inputs: &SlcInputs) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("{inputs:?}").as_bytes());
    let out = hasher.finalize();
    out.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Applies the implication rules to the supplied growth evidence. Rules
/// firing in both directions raise `ConflictingEvidence`, since the
/// underlying statements cannot both hold.
pub fn slc_verdict(inputs: &SlcInputs) -> Result<SlcReport, GrowthError> {
    if inputs.schreier.is_none() && inputs.subgroup.is_none() && inputs.intersections.is_empty()
    {
        return Err(GrowthError::NoInputs);
    }
    let digest = digest_inputs(inputs);

    let consistent = inputs
        .schreier
        .as_ref()
        .is_some_and(|c| c.is_subexponential());
    let refuted_non_s_normal = inputs.subgroup.as_ref().is_some_and(|s| s.is_exponential())
        && inputs.intersections.iter().any(|(_, c)| c.is_bounded());
    let refuted_co_amenable = matches!(inputs.co_amenable, Some((true, _)))
        && inputs.schreier.as_ref().is_some_and(|c| c.is_exponential());

    let refuted_rule = if refuted_non_s_normal {
        Some((
            SlcVerdict::RefutedNonSNormalSuperpoly,
            RULE_NON_S_NORMAL,
        ))
    } else if refuted_co_amenable {
        Some((
            SlcVerdict::RefutedCoAmenableExpSchreier,
            RULE_CO_AMENABLE,
        ))
    } else {
        None
    };

    match (consistent, refuted_rule) {
        (true, Some((_, rule))) => Err(GrowthError::ConflictingEvidence {
            consistent_rule: RULE_SUBEXP,
            refuted_rule: rule,
        }),
        (true, None) => Ok(SlcReport {
            verdict: SlcVerdict::ConsistentViaSubexpSchreier,
            rule: RULE_SUBEXP,
            inputs_digest: digest,
        }),
        (false, Some((verdict, rule))) => Ok(SlcReport {
            verdict,
            rule,
            inputs_digest: digest,
        }),
        (false, None) => Ok(SlcReport {
            verdict: SlcVerdict::Undetermined,
            rule: RULE_NONE,
            inputs_digest: digest,
        }),
    }
}

impl SlcReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "verdict": format!("{:?}", self.verdict),
            "rule": self.rule,
            "inputs_digest": self.inputs_digest,
        })
    }
}
