//! Deterministic ball enumeration with an on-disk cache.
//!
//! Balls are produced by breadth-first search from the identity, expanding
//! each frontier element by the model's generator list in order. The cache
//! file layout is:
//!
//! ```text
//! magic "CWLB1", model hash (16 ascii hex), radius u32,
//! sphere count u32, sphere sizes u64*,
//! element count u64, records (length u8, byte-size u32, encoding bytes)
//! sorted lexicographically by encoding
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Arc;

use super::{Elem, GroupError, GroupModel};

const MAGIC: &[u8; 5] = b"CWLB1";
pub const DEFAULT_BUDGET: usize = 10_000_000;

/// All elements of B(R) with exact word lengths and sphere sizes.
#[derive(Debug)]
pub struct Ball {
    pub radius: u32,
    pub sphere_sizes: Vec<u64>,
    lengths: HashMap<Elem, u32>,
}

impl Ball {
    pub fn length_of(&self, g: &Elem) -> Option<u32> {
        self.lengths.get(g).copied()
    }

    pub fn contains(&self, g: &Elem) -> bool {
        self.lengths.contains_key(g)
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    /// Unordered view of (element, length) pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&Elem, u32)> {
        self.lengths.iter().map(|(e, &l)| (e, l))
    }

    /// Ball sizes |B(0)|..=|B(r)| for r = min(radius, cap).
    pub fn ball_sizes(&self, cap: u32) -> Vec<u64> {
        let mut out = Vec::new();
        let mut acc = 0;
        for (r, &s) in self.sphere_sizes.iter().enumerate() {
            if r as u32 > cap {
                break;
            }
            acc += s;
            out.push(acc);
        }
        out
    }

    fn compute(model: &GroupModel, radius: u32, budget: usize) -> Result<Ball, GroupError> {
        let mut lengths = HashMap::new();
        let mut sphere_sizes = vec![1u64];
        lengths.insert(model.id(), 0);
        let mut frontier = vec![model.id()];
        for r in 1..=radius {
            let mut next = Vec::new();
            for g in &frontier {
                for gen in model.generators() {
                    let h = model.mul(g, &gen.elem)?;
                    if !lengths.contains_key(&h) {
                        lengths.insert(h.clone(), r);
                        next.push(h);
                        if lengths.len() > budget {
                            return Err(GroupError::BudgetExceeded {
                                radius: r,
                                size: lengths.len(),
                            });
                        }
                    }
                }
            }
            sphere_sizes.push(next.len() as u64);
            frontier = next;
        }
        Ok(Ball {
            radius,
            sphere_sizes,
            lengths,
        })
    }

    fn write_to(&self, model_hash: &str, path: &PathBuf) -> Result<(), GroupError> {
        let mut records: Vec<(Vec<u8>, u32)> = self
            .lengths
            .iter()
            .map(|(e, &l)| (e.encode(), l))
            .collect();
        records.sort();
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(model_hash.as_bytes());
        buf.extend_from_slice(&self.radius.to_le_bytes());
        buf.extend_from_slice(&(self.sphere_sizes.len() as u32).to_le_bytes());
        for s in &self.sphere_sizes {
            buf.extend_from_slice(&s.to_le_bytes());
        }
        buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
        for (enc, l) in &records {
            buf.push(*l as u8);
            buf.extend_from_slice(&(enc.len() as u32).to_le_bytes());
            buf.extend_from_slice(enc);
        }
        let tmp = path.with_extension("tmp");
        fs::File::create(&tmp)?.write_all(&buf)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    fn read_from(model_hash: &str, path: &PathBuf) -> Result<Option<Ball>, GroupError> {
        let mut buf = Vec::new();
        fs::File::open(path)?.read_to_end(&mut buf)?;
        let bad = || {
            GroupError::CacheIo(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("corrupt ball cache {}", path.display()),
            ))
        };
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8], GroupError> {
            let s = buf.get(pos..pos + n).ok_or_else(bad)?;
            pos += n;
            Ok(s)
        };
        if take(5)? != MAGIC {
            return Err(bad());
        }
        if take(16)? != model_hash.as_bytes() {
            // hash mismatch: treat as a miss, the caller recomputes
            return Ok(None);
        }
        let radius = u32::from_le_bytes(take(4)?.try_into().unwrap());
        let n_spheres = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let mut sphere_sizes = Vec::with_capacity(n_spheres);
        for _ in 0..n_spheres {
            sphere_sizes.push(u64::from_le_bytes(take(8)?.try_into().unwrap()));
        }
        let count = u64::from_le_bytes(take(8)?.try_into().unwrap());
        let mut lengths = HashMap::with_capacity(count as usize);
        for _ in 0..count {
            let l = take(1)?[0] as u32;
            let sz = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
            let elem = Elem::decode(take(sz)?).ok_or_else(bad)?;
            lengths.insert(elem, l);
        }
        Ok(Some(Ball {
            radius,
            sphere_sizes,
            lengths,
        }))
    }
}

/// Loader and store for enumerated balls, keyed by (model hash, radius).
/// A cached ball of radius R serves every request with radius <= R.
pub struct BallCache {
    dir: Option<PathBuf>,
    budget: usize,
    loaded: HashMap<String, Arc<Ball>>,
}

impl BallCache {
    /// In-memory cache only; nothing touches the filesystem.
    pub fn ephemeral() -> Self {
        BallCache {
            dir: None,
            budget: DEFAULT_BUDGET,
            loaded: HashMap::new(),
        }
    }

    pub fn at_dir(dir: impl Into<PathBuf>) -> Self {
        BallCache {
            dir: Some(dir.into()),
            budget: DEFAULT_BUDGET,
            loaded: HashMap::new(),
        }
    }

    pub fn with_budget(mut self, max_elements: usize) -> Self {
        self.budget = max_elements;
        self
    }

    /// The ball of the requested radius (or larger, when already cached).
    pub fn ball(&mut self, model: &GroupModel, radius: u32) -> Result<Arc<Ball>, GroupError> {
        if let Some(b) = self.loaded.get(model.hash()) {
            if b.radius >= radius {
                return Ok(Arc::clone(b));
            }
        }
        if let Some(found) = self.best_file(model.hash(), radius)? {
            if let Some(ball) = Ball::read_from(model.hash(), &found)? {
                if ball.radius >= radius {
                    let ball = Arc::new(ball);
                    self.loaded.insert(model.hash().to_string(), Arc::clone(&ball));
                    return Ok(ball);
                }
            }
        }
        let ball = Arc::new(Ball::compute(model, radius, self.budget)?);
        if let Some(dir) = &self.dir {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("ball-{}-r{}.bin", model.hash(), radius));
            ball.write_to(model.hash(), &path)?;
        }
        self.loaded
            .insert(model.hash().to_string(), Arc::clone(&ball));
        Ok(ball)
    }

    /// Largest cached radius >= the request for this model hash, if any.
    fn best_file(&self, hash: &str, radius: u32) -> Result<Option<PathBuf>, GroupError> {
        let Some(dir) = &self.dir else {
            return Ok(None);
        };
        if !dir.exists() {
            return Ok(None);
        }
        let prefix = format!("ball-{hash}-r");
        let mut best: Option<(u32, PathBuf)> = None;
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().to_string();
            if let Some(rest) = name.strip_prefix(&prefix) {
                if let Some(r) = rest
                    .strip_suffix(".bin")
                    .and_then(|s| s.parse::<u32>().ok())
                {
                    if r >= radius && best.as_ref().map_or(true, |(b, _)| r > *b) {
                        best = Some((r, entry.path()));
                    }
                }
            }
        }
        Ok(best.map(|(_, p)| p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f2_ball_two_has_17_elements() {
        let f2 = GroupModel::free(2).unwrap();
        let mut cache = BallCache::ephemeral();
        let ball = cache.ball(&f2, 2).unwrap();
        assert_eq!(ball.sphere_sizes, vec![1, 4, 12]);
        assert_eq!(ball.len(), 17);
    }

    #[test]
    fn free_sphere_law() {
        // a_n = 2r(2r-1)^(n-1)
        for rank in [2usize, 3] {
            let model = GroupModel::free(rank).unwrap();
            let mut cache = BallCache::ephemeral();
            let ball = cache.ball(&model, 5).unwrap();
            for n in 1..=5usize {
                let expected = 2 * rank as u64 * (2 * rank as u64 - 1).pow(n as u32 - 1);
                assert_eq!(ball.sphere_sizes[n], expected);
            }
        }
    }

    #[test]
    fn z2_ball_one_has_5_elements() {
        let z2 = GroupModel::free_abelian(2).unwrap();
        let mut cache = BallCache::ephemeral();
        let ball = cache.ball(&z2, 1).unwrap();
        assert_eq!(ball.ball_sizes(1), vec![1, 5]);
    }

    #[test]
    fn budget_trips() {
        let f2 = GroupModel::free(2).unwrap();
        let mut cache = BallCache::ephemeral().with_budget(10);
        let err = cache.ball(&f2, 3).unwrap_err();
        assert!(matches!(err, GroupError::BudgetExceeded { .. }));
    }

    #[test]
    fn disk_round_trip_and_reuse() {
        let dir = tempfile::tempdir().unwrap();
        let heis = GroupModel::matrix_group(
            3,
            vec![
                ("u".into(), super::super::MatZ::elementary(3, 0, 1, 1)),
                ("u^-1".into(), super::super::MatZ::elementary(3, 0, 1, -1)),
                ("v".into(), super::super::MatZ::elementary(3, 1, 2, 1)),
                ("v^-1".into(), super::super::MatZ::elementary(3, 1, 2, -1)),
            ],
        )
        .unwrap();
        let counts = {
            let mut cache = BallCache::at_dir(dir.path());
            let ball = cache.ball(&heis, 5).unwrap();
            ball.ball_sizes(5)
        };
        // a fresh cache instance must read the same ball back from disk
        let mut cache = BallCache::at_dir(dir.path());
        let ball = cache.ball(&heis, 4).unwrap();
        assert_eq!(ball.radius, 5);
        assert_eq!(ball.ball_sizes(5), counts);
    }

    #[test]
    fn lengths_are_subadditive_on_sample() {
        let f2 = GroupModel::free(2).unwrap();
        let mut cache = BallCache::ephemeral();
        let ball = cache.ball(&f2, 4).unwrap();
        let elems: Vec<Elem> = ball.iter().map(|(e, _)| e.clone()).collect();
        for g in elems.iter().take(40) {
            for h in elems.iter().take(40) {
                let gh = f2.mul(g, h).unwrap();
                if let Some(lgh) = ball.length_of(&gh) {
                    assert!(lgh <= ball.length_of(g).unwrap() + ball.length_of(h).unwrap());
                }
            }
        }
    }
}
