//! Schreier ball enumeration: BFS over coset keys from the basepoint o = eH
//! along the model's generators.

use std::collections::HashSet;
use std::io::{self, Write};

use crate::coset::{CosetError, CosetKey, SubgroupOracle};
use crate::group::{GroupError, DEFAULT_BUDGET};
use crate::growth::{GrowthSeries, GrowthSource};

#[derive(Debug, Clone)]
pub struct SchreierEdge {
    pub src: CosetKey,
    pub label: String,
    pub dst: CosetKey,
}

#[derive(Debug, Clone)]
pub struct SchreierBall {
    pub radius: u32,
    pub series: GrowthSeries,
    /// One record per (coset, generator) pair with the coset inside
    /// B(radius − 1), i.e. every vertex whose star is fully explored.
    /// Includes loops and parallel edges.
    pub edges: Option<Vec<SchreierEdge>>,
}

pub fn schreier_ball(
    oracle: &SubgroupOracle,
    radius: u32,
    collect_edges: bool,
) -> Result<SchreierBall, CosetError> {
    schreier_ball_with_budget(oracle, radius, collect_edges, DEFAULT_BUDGET)
}

pub fn schreier_ball_with_budget(
    oracle: &SubgroupOracle,
    radius: u32,
    collect_edges: bool,
    budget: usize,
) -> Result<SchreierBall, CosetError> {
    let base = oracle.base_point()?;
    let mut visited: HashSet<CosetKey> = HashSet::new();
    visited.insert(base.clone());
    let mut frontier = vec![base];
    let mut balls: Vec<u64> = vec![1];
    let mut edges = collect_edges.then(Vec::new);

    for r in 1..=radius {
        let mut next = Vec::new();
        for x in &frontier {
            for gen in oracle.model().generators() {
                let y = oracle.coset_act(&gen.elem, x)?;
                if !visited.contains(&y) {
                    if visited.len() >= budget {
                        return Err(CosetError::Group(GroupError::BudgetExceeded {
                            radius: r,
                            size: visited.len(),
                        }));
                    }
                    visited.insert(y.clone());
                    next.push(y.clone());
                }
                if let Some(list) = edges.as_mut() {
                    list.push(SchreierEdge {
                        src: x.clone(),
                        label: gen.label.clone(),
                        dst: y,
                    });
                }
            }
        }
        balls.push(balls[r as usize - 1] + next.len() as u64);
        frontier = next;
    }

    let series = GrowthSeries::new(balls, GrowthSource::SchreierBall)
        .expect("BFS ball counts are monotone from 1");
    Ok(SchreierBall {
        radius,
        series,
        edges,
    })
}

/// Keys of B_X(radius) in BFS discovery order (deterministic).
pub fn coset_ball_keys(
    oracle: &SubgroupOracle,
    radius: u32,
    budget: usize,
) -> Result<Vec<CosetKey>, CosetError> {
    let base = oracle.base_point()?;
    let mut visited: HashSet<CosetKey> = HashSet::new();
    visited.insert(base.clone());
    let mut order = vec![base.clone()];
    let mut frontier = vec![base];
    for r in 1..=radius {
        let mut next = Vec::new();
        for x in &frontier {
            for gen in oracle.model().generators() {
                let y = oracle.coset_act(&gen.elem, x)?;
                if visited.insert(y.clone()) {
                    if visited.len() > budget {
                        return Err(CosetError::Group(GroupError::BudgetExceeded {
                            radius: r,
                            size: visited.len(),
                        }));
                    }
                    order.push(y.clone());
                    next.push(y);
                }
            }
        }
        frontier = next;
    }
    Ok(order)
}

/// CSV rows `src_key_hex,gen_label,dst_key_hex`.
pub fn write_edge_csv<W: Write>(out: &mut W, edges: &[SchreierEdge]) -> io::Result<()> {
    writeln!(out, "src_key_hex,gen_label,dst_key_hex")?;
    for e in edges {
        writeln!(out, "{},{},{}", e.src.to_hex(), e.label, e.dst.to_hex())?;
    }
    Ok(())
}

/// CSV rows `radius,ball,sphere`.
pub fn write_ball_csv<W: Write>(out: &mut W, series: &GrowthSeries) -> io::Result<()> {
    writeln!(out, "radius,ball,sphere")?;
    for r in 0..=series.max_radius() {
        let ball = series.ball(r).expect("radius in range");
        let sphere = series.sphere(r).expect("radius in range");
        writeln!(out, "{r},{ball},{sphere}")?;
    }
    Ok(())
}
