//! Turns config specs into live models, oracles, measures, and witnesses.
//!
//! Element strings are free-group words for free models and JSON row lists
//! for vectors and matrices; the grammar is documented in the README.

use std::collections::BTreeMap;

use cwl_core::coset::SubgroupOracle;
use cwl_core::group::{Elem, GroupKind, GroupModel, MatZ};
use cwl_core::norms::witness::{
    random_ball_functions, translated_ball_family, RDWitness, TestFunction,
};
use cwl_core::norms::FinFunc;
use cwl_core::walk::{Measure, Value};

use crate::config::{FamilySpec, GroupSpec, MeasureSpec, SubgroupSpec, WitnessSpec};
use crate::error::CliError;

pub fn build_model(spec: &GroupSpec) -> Result<GroupModel, CliError> {
    match spec {
        GroupSpec::Free { rank } => Ok(GroupModel::free(*rank)?),
        GroupSpec::FreeAbelian { rank } => Ok(GroupModel::free_abelian(*rank)?),
        GroupSpec::SlElementary { dim } => Ok(GroupModel::sl_n_elementary(*dim)?),
        GroupSpec::Matrix { dim, generators } => {
            let gens = generators
                .iter()
                .map(|(label, rows)| Ok((label.clone(), mat_from_rows(*dim, rows)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(GroupModel::matrix_group(*dim, gens)?)
        }
    }
}

pub fn build_oracle(model: GroupModel, spec: &SubgroupSpec) -> Result<SubgroupOracle, CliError> {
    match spec {
        SubgroupSpec::Trivial => Ok(SubgroupOracle::trivial(model)?),
        SubgroupSpec::WholeGroup => Ok(SubgroupOracle::whole_group(model)?),
        SubgroupSpec::FreeGens { words } => {
            let refs: Vec<&str> = words.iter().map(String::as_str).collect();
            Ok(SubgroupOracle::free_group_gens(model, &refs)?)
        }
        SubgroupSpec::CyclicPowers { element } => {
            let base = parse_element(&model, element)?;
            Ok(SubgroupOracle::cyclic_powers(model, base)?)
        }
        SubgroupSpec::UpperUnitriangular => Ok(SubgroupOracle::upper_unitriangular(model)?),
        SubgroupSpec::LineStabilizer { line } => {
            Ok(SubgroupOracle::line_stabilizer(model, line)?)
        }
        SubgroupSpec::SubspaceStabilizer { basis } => {
            Ok(SubgroupOracle::subspace_stabilizer(model, basis)?)
        }
        SubgroupSpec::CongruenceLevel { modulus } => {
            Ok(SubgroupOracle::congruence_level(model, *modulus)?)
        }
    }
}

pub fn build_measure<V: Value>(
    model: &GroupModel,
    spec: &MeasureSpec,
) -> Result<Measure<V>, CliError> {
    match spec {
        MeasureSpec::Named(name) if name == "srw" => {
            Ok(Measure::uniform_on_generators(model)?)
        }
        MeasureSpec::Named(name) => Err(CliError::Config(format!(
            "measure `{name}` is not recognized"
        ))),
        MeasureSpec::Weights(map) => {
            let entries = map
                .iter()
                .map(|(el, mass)| Ok((parse_element(model, el)?, parse_mass::<V>(mass)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(Measure::new(model, entries)?)
        }
    }
}

/// `"3"`, `"-2"`, or `"num/den"` with a positive denominator, within i64.
pub fn parse_mass<V: Value>(s: &str) -> Result<V, CliError> {
    let bad = |detail: &str| {
        CliError::Config(format!("cannot parse mass `{s}`: {detail}"))
    };
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (
            n.trim().parse::<i64>().map_err(|e| bad(&e.to_string()))?,
            d.trim().parse::<i64>().map_err(|e| bad(&e.to_string()))?,
        ),
        None => (s.trim().parse::<i64>().map_err(|e| bad(&e.to_string()))?, 1),
    };
    if den <= 0 {
        return Err(bad("denominator must be positive"));
    }
    Ok(V::from_ratio(num, den))
}

pub fn parse_element(model: &GroupModel, s: &str) -> Result<Elem, CliError> {
    let elem = match model.kind() {
        GroupKind::Free { .. } => model.parse_word(s)?,
        GroupKind::FreeAbelian { .. } => {
            let coords: Vec<i64> = serde_json::from_str(s).map_err(|e| {
                CliError::Config(format!("cannot parse `{s}` as an integer vector: {e}"))
            })?;
            Elem::Vector(coords)
        }
        GroupKind::MatrixZ { n } => {
            let rows: Vec<Vec<i64>> = serde_json::from_str(s).map_err(|e| {
                CliError::Config(format!("cannot parse `{s}` as a matrix row list: {e}"))
            })?;
            Elem::Matrix(mat_from_rows(*n, &rows)?)
        }
    };
    model.check_element(&elem)?;
    Ok(elem)
}

fn mat_from_rows(dim: usize, rows: &[Vec<i64>]) -> Result<MatZ, CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Config(format!(
            "matrix must be given as {dim} rows of {dim} integers"
        )));
    }
    Ok(MatZ::from_i64_rows(rows))
}

pub fn build_witness(
    model: &GroupModel,
    spec: &WitnessSpec,
) -> Result<RDWitness, CliError> {
    let witness = match spec {
        WitnessSpec::Polynomial { c_h, s1 } => RDWitness::Polynomial {
            c_h: *c_h,
            s1: *s1,
        },
        WitnessSpec::PolynomialBall { c, d } => RDWitness::PolynomialBall { c: *c, d: *d },
        WitnessSpec::WeightTable { w, radial } => {
            let mut table = BTreeMap::new();
            for (el, weight) in w {
                table.insert(parse_element(model, el)?, *weight);
            }
            RDWitness::WeightTable {
                w: table,
                radial: radial.clone(),
            }
        }
    };
    Ok(witness)
}

pub fn build_family<V: Value>(
    model: &GroupModel,
    spec: &FamilySpec,
    seed: u64,
) -> Result<Vec<TestFunction<V>>, CliError> {
    match spec {
        FamilySpec::TranslatedBall {
            letters,
            translator,
            radii,
        } => {
            let refs: Vec<&str> = letters.iter().map(String::as_str).collect();
            Ok(translated_ball_family(model, &refs, translator, radii)?)
        }
        FamilySpec::RandomBall { radius, count } => {
            let raw = random_ball_functions(model, *radius, *count, seed)?;
            raw.into_iter()
                .map(|tf| {
                    let entries: Vec<(Elem, V)> = tf
                        .f
                        .values()
                        .map(|(g, v)| (g.clone(), V::from_f64(*v)))
                        .collect();
                    Ok(TestFunction {
                        label: tf.label,
                        f: FinFunc::new(model, entries)?,
                        phi: None,
                    })
                })
                .collect()
        }
    }
}
