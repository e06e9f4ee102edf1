//! Gelfand duality for commutative towers with finitely many characters per
//! level.
//!
//! A commutative tower has `A_p = ℂ^{k_p}`, so `Δ(A_p)` is the set of block
//! indices. The connecting map `A_{p+1} → A_p` reads target block `j` from
//! source block `s(j)`; dually the character `j` of `A_p` becomes the
//! character `s(j)` of `A_{p+1}`. Characters are identified across levels
//! along these injections and the union is `Δ(A)`.

use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::BlockAlgebra;
use crate::blockmap::{BlockMap, BlockSource};
use crate::calculus::seminorm;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::random;
use crate::tower::{CoherentElement, ConnectingMap, Tower};

/// A character of the limit, identified by where it first appears.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Character {
    pub birth_level: usize,
    pub birth_block: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacterSpace {
    /// `Δ(A)`, ordered by level of first appearance.
    pub points: Vec<Character>,
    /// `levels[p-1][j]` is the index in `points` of coordinate `j` of `A_p`.
    pub levels: Vec<Vec<usize>>,
}

impl CharacterSpace {
    pub fn horizon(&self) -> usize {
        self.levels.len()
    }

    /// `Δ(A_p)` as indices into `points`.
    pub fn level(&self, p: usize) -> &[usize] {
        &self.levels[p - 1]
    }

    /// The injection `Δ(A_p) ↪ Δ(A_q)` in coordinates: position in `A_q` of
    /// each coordinate of `A_p`.
    pub fn injection(&self, p: usize, q: usize) -> Result<Vec<usize>> {
        if p == 0 || p > q || q > self.horizon() {
            return Err(Error::InvalidArgument(format!(
                "injection needs 1 ≤ p ≤ q ≤ {}, got p={p}, q={q}",
                self.horizon()
            )));
        }
        let upper = &self.levels[q - 1];
        self.levels[p - 1]
            .iter()
            .map(|id| {
                upper.iter().position(|x| x == id).ok_or_else(|| {
                    Error::Structural(format!("character {id} of level {p} is missing at level {q}"))
                })
            })
            .collect()
    }

    /// `Φ(A) = {Δ(A_p)}` as sets of point indices.
    pub fn family(&self) -> Vec<BTreeSet<usize>> {
        self.levels.iter().map(|l| l.iter().copied().collect()).collect()
    }
}

fn require_commutative(tower: &Tower, horizon: usize) -> Result<usize> {
    let top = tower.max_level().map_or(horizon, |m| m.min(horizon));
    if !tower.is_commutative_up_to(top)? {
        return Err(Error::Precondition(
            "character spaces need a commutative tower (all blocks 1x1)".into(),
        ));
    }
    Ok(top)
}

pub fn character_space(tower: &Tower, horizon: usize) -> Result<CharacterSpace> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let top = require_commutative(tower, horizon)?;
    let mut points = Vec::new();
    let mut levels: Vec<Vec<usize>> = Vec::with_capacity(top);
    for p in 1..=top {
        let k = tower.algebra(p)?.num_blocks();
        let mut ids: Vec<Option<usize>> = vec![None; k];
        if p > 1 {
            let map = tower.connecting_map(p - 1)?;
            for (j, a) in map.map().assignment().iter().enumerate() {
                let s = a.as_ref().expect("connecting maps are surjective").block;
                ids[s] = Some(levels[p - 2][j]);
            }
        }
        let ids = ids
            .into_iter()
            .enumerate()
            .map(|(j, id)| {
                id.unwrap_or_else(|| {
                    points.push(Character {
                        birth_level: p,
                        birth_block: j,
                    });
                    points.len() - 1
                })
            })
            .collect();
        levels.push(ids);
    }
    Ok(CharacterSpace { points, levels })
}

/// `ev(a)`: the value of `a` at every character, read at its birth level.
pub fn evaluation(space: &CharacterSpace, e: &CoherentElement) -> Result<Vec<Complex64>> {
    space
        .points
        .iter()
        .map(|c| Ok(e.block(c.birth_level, c.birth_block)?[(0, 0)]))
        .collect()
}

/// `evaluation_iso`: checks commutativity, then evaluates.
pub fn evaluation_iso(tower: &Tower, e: &CoherentElement, horizon: usize) -> Result<(CharacterSpace, Vec<Complex64>)> {
    let space = character_space(tower, horizon)?;
    let values = evaluation(&space, e)?;
    Ok((space, values))
}

/// The element of the tower with the given values on `Δ(A)`.
pub fn from_function(tower: &Tower, space: &CharacterSpace, values: &[Complex64]) -> Result<CoherentElement> {
    if values.len() != space.points.len() {
        return Err(Error::Structural(format!(
            "{} values for {} characters",
            values.len(),
            space.points.len()
        )));
    }
    let levels = space
        .levels
        .iter()
        .enumerate()
        .map(|(i, ids)| {
            let blocks = ids.iter().map(|&id| CMatrix::from_element(1, 1, values[id])).collect();
            tower.algebra(i + 1)?.element(blocks)
        })
        .collect::<Result<Vec<_>>>()?;
    CoherentElement::explicit(tower, levels)
}

/// `max_p |p(a) − max_{ρ ∈ Δ(A_p)} |ρ(a)||`.
pub fn seminorm_identity_residual(space: &CharacterSpace, e: &CoherentElement) -> Result<f64> {
    let values = evaluation(space, e)?;
    let mut worst = 0.0f64;
    for p in 1..=space.horizon() {
        let via_chars = space.level(p).iter().map(|&id| values[id].norm()).fold(0.0, f64::max);
        worst = worst.max((seminorm(e, p)? - via_chars).abs());
    }
    Ok(worst)
}

/// A countable set materialized up to a horizon, with a covering chain
/// `F_1 ⊆ F_2 ⊆ …` of finite subsets.
#[derive(Clone, Debug, PartialEq)]
pub struct CoveredSpace {
    pub points: Vec<String>,
    /// `chain[k]` lists indices into `points`; its order fixes the block
    /// order of level `k + 1`.
    pub chain: Vec<Vec<usize>>,
}

impl CoveredSpace {
    pub fn new(points: Vec<String>, chain: Vec<Vec<usize>>) -> Result<Self> {
        if chain.is_empty() {
            return Err(Error::Structural("a covering family needs at least one set".into()));
        }
        let mut seen_labels = BTreeSet::new();
        for x in &points {
            if !seen_labels.insert(x) {
                return Err(Error::Structural(format!("point {x:?} is listed twice")));
            }
        }
        for (k, f) in chain.iter().enumerate() {
            if f.is_empty() {
                return Err(Error::Structural(format!("F_{} is empty", k + 1)));
            }
            let set: BTreeSet<usize> = f.iter().copied().collect();
            if set.len() != f.len() {
                return Err(Error::Structural(format!("F_{} repeats a point", k + 1)));
            }
            if let Some(&bad) = set.iter().find(|&&i| i >= points.len()) {
                return Err(Error::Structural(format!("F_{} refers to unknown point {bad}", k + 1)));
            }
            if k > 0 {
                let prev: BTreeSet<usize> = chain[k - 1].iter().copied().collect();
                if !prev.is_subset(&set) {
                    return Err(Error::Structural(format!("F_{k} is not contained in F_{}", k + 1)));
                }
            }
        }
        let last: BTreeSet<usize> = chain.last().expect("nonempty").iter().copied().collect();
        if last.len() != points.len() {
            let missing: Vec<&str> = (0..points.len())
                .filter(|i| !last.contains(i))
                .map(|i| points[i].as_str())
                .collect();
            return Err(Error::Structural(format!("the family does not cover {missing:?}")));
        }
        Ok(Self { points, chain })
    }

    /// `X = {x_1, …, x_n}` with `F_k = {x_1, …, x_k}`.
    pub fn initial_segments(n: usize) -> Result<Self> {
        let points = (1..=n).map(|i| format!("x{i}")).collect();
        let chain = (1..=n).map(|k| (0..k).collect()).collect();
        Self::new(points, chain)
    }
}

/// `C_F(X)`: level `k` is the algebra of functions on `F_k`, with restriction
/// maps between levels.
pub fn cf_algebra(space: &CoveredSpace) -> Result<Tower> {
    let algebras = space
        .chain
        .iter()
        .map(|f| BlockAlgebra::commutative(f.len()))
        .collect::<Result<Vec<_>>>()?;
    let maps = (0..space.chain.len() - 1)
        .map(|k| {
            let (lower, upper) = (&space.chain[k], &space.chain[k + 1]);
            let assignment = lower
                .iter()
                .map(|x| Some(BlockSource::plain(upper.iter().position(|y| y == x).expect("chain"))))
                .collect();
            ConnectingMap::new(BlockMap::new(algebras[k + 1].clone(), algebras[k].clone(), assignment)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Tower::finite(algebras, maps)
}

/// The element of `C_F(X)` given by a function on `X`.
pub fn function_element(space: &CoveredSpace, tower: &Tower, g: &[Complex64]) -> Result<CoherentElement> {
    let levels = space
        .chain
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let blocks = f.iter().map(|&x| CMatrix::from_element(1, 1, g[x])).collect();
            tower.algebra(k + 1)?.element(blocks)
        })
        .collect::<Result<Vec<_>>>()?;
    CoherentElement::explicit(tower, levels)
}

/// `Δ(A)` with the chain `Φ(A)` as a covered space; points are labelled by
/// their birth level and block.
pub fn character_covered_space(space: &CharacterSpace) -> Result<CoveredSpace> {
    let labels = space
        .points
        .iter()
        .map(|c| format!("χ[{},{}]", c.birth_level, c.birth_block))
        .collect();
    CoveredSpace::new(labels, space.levels.clone())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualityReport {
    pub points: usize,
    /// `x ↦ ev_x` is a bijection `X → Δ(C_F(X))`.
    pub bijective: bool,
    /// Every member of `Φ(C_F(X))` equals some `F_k` under the bijection.
    pub family_recovered: bool,
    /// `X`-side round trip `g ↦ ev ↦ g`.
    pub space_residual: f64,
    /// Algebra-side round trip `A → C_{Φ(A)}(Δ(A)) → A`.
    pub algebra_residual: f64,
    pub seminorm_residual: f64,
    pub passed: bool,
}

/// Both round trips of the duality for `C_F(X)`, on random probes.
pub fn duality_roundtrip<R: Rng>(space: &CoveredSpace, probes: usize, tol: f64, rng: &mut R) -> Result<DualityReport> {
    let tower = cf_algebra(space)?;
    let horizon = space.chain.len();
    let chars = character_space(&tower, horizon)?;

    // x ↦ ev_x: the character at the first level containing x
    let mut point_to_char = Vec::with_capacity(space.points.len());
    for x in 0..space.points.len() {
        let (k, pos) = space
            .chain
            .iter()
            .enumerate()
            .find_map(|(k, f)| f.iter().position(|&y| y == x).map(|pos| (k, pos)))
            .expect("covering family");
        point_to_char.push(chars.levels[k][pos]);
    }
    let distinct: BTreeSet<usize> = point_to_char.iter().copied().collect();
    let bijective = distinct.len() == space.points.len() && chars.points.len() == space.points.len();
    let char_to_point: HashMap<usize, usize> =
        point_to_char.iter().enumerate().map(|(x, &c)| (c, x)).collect();

    let family_recovered = chars.family().iter().zip(&space.chain).all(|(delta, f)| {
        let pulled: BTreeSet<usize> = delta.iter().filter_map(|c| char_to_point.get(c).copied()).collect();
        pulled.len() == delta.len() && pulled == f.iter().copied().collect()
    });

    let mut space_residual = 0.0f64;
    let mut algebra_residual = 0.0f64;
    let mut seminorm_residual = 0.0f64;
    let rebuilt_space = character_covered_space(&chars)?;
    let rebuilt = cf_algebra(&rebuilt_space)?;
    for _ in 0..probes {
        let g: Vec<Complex64> = (0..space.points.len()).map(|_| random::gaussian(rng)).collect();
        let e = function_element(space, &tower, &g)?;
        let ev = evaluation(&chars, &e)?;
        for (x, &c) in point_to_char.iter().enumerate() {
            space_residual = space_residual.max((ev[c] - g[x]).norm());
        }
        // A → C_{Φ(A)}(Δ(A)): same values, read in the rebuilt tower
        let image = function_element(&rebuilt_space, &rebuilt, &ev)?;
        for p in 1..=horizon {
            let back = image.project(p)?;
            let orig = e.project(p)?;
            if back.parent() != orig.parent() {
                algebra_residual = f64::INFINITY;
                continue;
            }
            for (b, o) in back.blocks().iter().zip(orig.blocks()) {
                algebra_residual = algebra_residual.max((b[(0, 0)] - o[(0, 0)]).norm());
            }
        }
        seminorm_residual = seminorm_residual.max(seminorm_identity_residual(&chars, &e)?);
    }
    let passed = bijective
        && family_recovered
        && space_residual <= tol
        && algebra_residual <= tol
        && seminorm_residual <= tol;
    Ok(DualityReport {
        points: space.points.len(),
        bijective,
        family_recovered,
        space_residual,
        algebra_residual,
        seminorm_residual,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TowerRoundtripReport {
    pub characters: usize,
    pub injections_consistent: bool,
    /// `A → C_{Φ(A)}(Δ(A)) → A` on random coherent elements.
    pub algebra_residual: f64,
    /// Defect of `ev(ab) = ev(a)ev(b)` and `ev(a*) = conj ev(a)`.
    pub homomorphism_residual: f64,
    pub seminorm_residual: f64,
    pub passed: bool,
}

/// The dual round trip, starting from a commutative tower.
pub fn tower_roundtrip<R: Rng>(tower: &Tower, horizon: usize, probes: usize, tol: f64, rng: &mut R) -> Result<TowerRoundtripReport> {
    let chars = character_space(tower, horizon)?;
    let top = chars.horizon();
    let mut injections_consistent = true;
    for p in 1..=top {
        for q in p..=top {
            let pq = chars.injection(p, q)?;
            let distinct: BTreeSet<usize> = pq.iter().copied().collect();
            injections_consistent &= distinct.len() == pq.len();
            for r in q..=top {
                let qr = chars.injection(q, r)?;
                let pr = chars.injection(p, r)?;
                injections_consistent &= pq.iter().map(|&i| qr[i]).eq(pr.iter().copied());
            }
        }
        if p > 1 {
            injections_consistent &= chars.levels[p - 1].len() >= chars.levels[p - 2].len();
        }
    }
    let rebuilt_space = character_covered_space(&chars)?;
    let rebuilt = cf_algebra(&rebuilt_space)?;
    let top_alg = tower.algebra(top)?;
    let mut algebra_residual = 0.0f64;
    let mut homomorphism_residual = 0.0f64;
    let mut seminorm_residual = 0.0f64;
    for _ in 0..probes {
        let a = CoherentElement::from_top(tower, top, random::element(&top_alg, rng))?;
        let b = CoherentElement::from_top(tower, top, random::element(&top_alg, rng))?;
        let (ea, eb) = (evaluation(&chars, &a)?, evaluation(&chars, &b)?);
        let image = function_element(&rebuilt_space, &rebuilt, &ea)?;
        let back = from_function(tower, &chars, &evaluation(&character_space(&rebuilt, top)?, &image)?)?;
        for p in 1..=top {
            algebra_residual = algebra_residual.max(back.project(p)?.distance(&a.project(p)?)?);
        }
        let ab = a.zip_with(&b, |x, y| x * y)?;
        let eab = evaluation(&chars, &ab)?;
        let eadj = evaluation(&chars, &a.adjoint())?;
        for i in 0..ea.len() {
            homomorphism_residual = homomorphism_residual
                .max((eab[i] - ea[i] * eb[i]).norm())
                .max((eadj[i] - ea[i].conj()).norm());
        }
        seminorm_residual = seminorm_residual.max(seminorm_identity_residual(&chars, &a)?);
    }
    let passed = injections_consistent
        && algebra_residual <= tol
        && homomorphism_residual <= tol
        && seminorm_residual <= tol;
    Ok(TowerRoundtripReport {
        characters: chars.points.len(),
        injections_consistent,
        algebra_residual,
        homomorphism_residual,
        seminorm_residual,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements;

    fn repeated_block_tower() -> Tower {
        // ℂ → ℂ² (the level-1 point survives as block 1) → ℂ³
        let algs: Vec<BlockAlgebra> = (1..=3).map(|k| BlockAlgebra::commutative(k).unwrap()).collect();
        let m1 = BlockMap::new(algs[1].clone(), algs[0].clone(), vec![Some(BlockSource::plain(1))]).unwrap();
        let m2 = BlockMap::new(
            algs[2].clone(),
            algs[1].clone(),
            vec![Some(BlockSource::plain(2)), Some(BlockSource::plain(0))],
        )
        .unwrap();
        Tower::finite(algs, vec![ConnectingMap::new(m1).unwrap(), ConnectingMap::new(m2).unwrap()]).unwrap()
    }

    #[test]
    fn character_counts() {
        let c2 = Tower::single(BlockAlgebra::commutative(2).unwrap());
        assert_eq!(character_space(&c2, 5).unwrap().points.len(), 2);

        let t = Tower::product(|_| 1, 4).unwrap();
        let s = character_space(&t, 4).unwrap();
        assert_eq!(s.points.len(), 4);
        for p in 1..=4 {
            assert_eq!(s.level(p).len(), p);
        }

        let r = repeated_block_tower();
        let s = character_space(&r, 3).unwrap();
        assert_eq!(s.points.len(), 3);
        // the level-1 character is coordinate 1 of level 2, which level 3
        // carries in coordinate 0
        assert_eq!(s.injection(1, 2).unwrap(), vec![1]);
        assert_eq!(s.injection(1, 3).unwrap(), vec![0]);
        assert_eq!(s.injection(2, 3).unwrap(), vec![2, 0]);
    }

    #[test]
    fn noncommutative_tower_is_rejected() {
        let t = Tower::product(|k| k, 3).unwrap();
        assert!(matches!(character_space(&t, 3), Err(Error::Precondition(_))));
    }

    #[test]
    fn evaluation_examples() {
        let t = Tower::product(|_| 1, 6).unwrap();
        let (space, ev) = evaluation_iso(&t, &CoherentElement::identity(&t), 6).unwrap();
        assert!(ev.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
        let e = elements::diag_sequence(&t, |j| Complex64::new((j + 1) as f64, 0.0));
        let ev = evaluation(&space, &e).unwrap();
        for (id, c) in space.points.iter().enumerate() {
            assert_eq!(ev[id].re, c.birth_level as f64);
        }
        assert!(seminorm_identity_residual(&space, &e).unwrap() < 1e-12);
    }

    #[test]
    fn covered_space_validation() {
        let pts = vec!["a".to_string(), "b".to_string()];
        assert!(CoveredSpace::new(pts.clone(), vec![vec![0]]).is_err());
        assert!(CoveredSpace::new(pts.clone(), vec![vec![1], vec![0]]).is_err());
        assert!(CoveredSpace::new(pts, vec![vec![1], vec![1, 0]]).is_ok());
        let one = CoveredSpace::initial_segments(1).unwrap();
        let t = cf_algebra(&one).unwrap();
        assert_eq!(t.max_level(), Some(1));
    }

    #[test]
    fn roundtrips() {
        let mut rng = random::rng(21, 0);
        for n in [1, 5] {
            let space = CoveredSpace::initial_segments(n).unwrap();
            let r = duality_roundtrip(&space, 20, 1e-12, &mut rng).unwrap();
            assert!(r.passed, "{r:?}");
            assert_eq!(r.points, n);
        }
        let t = Tower::product(|_| 1, 5).unwrap();
        let r = tower_roundtrip(&t, 5, 20, 1e-12, &mut rng).unwrap();
        assert!(r.passed, "{r:?}");
        let r = tower_roundtrip(&repeated_block_tower(), 3, 20, 1e-12, &mut rng).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
