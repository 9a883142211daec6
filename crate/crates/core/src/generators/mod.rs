//! Generator tilings built along a hamiltonian path: `t_p` fills a plug with
//! dominoes that respect the path, `t_f` lifts a single floor to a cylinder
//! tiling, and `t_{d,p}` is the lift of the floor holding only `d`. Tilings of
//! even height decompose into words over the `t_{d,p}`, and the reduction
//! engine in [`reduce`] rewrites such words down to powers of one generator.

pub mod probe;
pub mod reduce;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Disk, Domino, SquareSet};
use crate::hamilton::HamiltonCycle;
use crate::tiling::{Floor, Tiling, TilingError};
use crate::twist::{flux, FluxTriple, TwistError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("plug is not balanced")]
    Unbalanced,
    #[error("invalid floor: {0}")]
    InvalidFloor(#[from] TilingError),
    #[error("tiling height {0} is odd")]
    OddHeight(usize),
    #[error("no plug with the requested flux")]
    Unachievable,
    #[error("plug meets the domino")]
    Incompatible,
    #[error("domino respects the path")]
    RespectsPath,
    #[error("tiling lives on another disk")]
    DiskMismatch,
    #[error("hypotheses not met: {0}")]
    HypothesesNotMet(String),
    #[error("rule verification failed: {0}")]
    RuleVerificationFailed(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}

impl From<TwistError> for GenError {
    fn from(e: TwistError) -> Self {
        match e {
            TwistError::Incompatible => GenError::Incompatible,
            TwistError::RespectsPath => GenError::RespectsPath,
            TwistError::NonIntegerResult(r) => GenError::RuleVerificationFailed(format!("non-integer twist {r}")),
        }
    }
}

/// One letter `t_{d, p_{d,φ}}^{exp}` of a generator word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GeneratorSymbol {
    pub d: Domino,
    pub flux: FluxTriple,
    pub exp: i8,
}

impl GeneratorSymbol {
    pub fn inverse(self) -> Self {
        GeneratorSymbol { exp: -self.exp, ..self }
    }
}

/// A letter that still carries the concrete plug it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlugSymbol {
    pub d: Domino,
    pub plug: SquareSet,
    pub exp: i8,
}

/// A product of generator symbols, read left to right as concatenation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GeneratorWord(pub Vec<GeneratorSymbol>);

impl GeneratorWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> GeneratorWord {
        GeneratorWord(self.0.iter().rev().map(|s| s.inverse()).collect())
    }

    pub fn concat(&self, other: &GeneratorWord) -> GeneratorWord {
        GeneratorWord(self.0.iter().chain(&other.0).copied().collect())
    }
}

/// What a canonical plug has to achieve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxTarget {
    Triple(FluxTriple),
    /// Only `flux_0` is prescribed; the balance goes to `D_{d,+1}` first.
    Zero(i64),
}

/// A disk together with the hamiltonian path the generators follow.
#[derive(Debug, Clone)]
pub struct Generators {
    disk: Arc<Disk>,
    gamma: HamiltonCycle,
}

impl Generators {
    pub fn new(disk: Arc<Disk>, gamma: HamiltonCycle) -> Self {
        Generators { disk, gamma }
    }

    pub fn disk(&self) -> &Arc<Disk> {
        &self.disk
    }

    pub fn gamma(&self) -> &HamiltonCycle {
        &self.gamma
    }

    /// Horizontal dominoes of `t` that do not respect the path, with floors.
    pub fn non_respecting(&self, t: &Tiling) -> Vec<(usize, Domino)> {
        t.horizontal_dominoes().into_iter().filter(|&(_, d)| !self.gamma.respects(d)).collect()
    }

    pub fn respects_all(&self, t: &Tiling) -> bool {
        self.non_respecting(t).is_empty()
    }

    /// Dominoes along `s_lo, s_{lo+1}, …, s_hi`, paired from the start.
    fn along(&self, lo: usize, hi: usize) -> Vec<Domino> {
        (lo..hi).step_by(2).map(|i| Domino::new(self.gamma.s(i), self.gamma.s(i + 1))).collect()
    }

    /// `t_p`, a tiling of the cork `R_{0,|p|;p,∅}`. Each step removes the pair
    /// of opposite `col` squares of `p` closest along the path (earliest pair
    /// on ties) using two floors.
    pub fn t_p(&self, p: SquareSet) -> Result<Tiling, GenError> {
        let disk = &*self.disk;
        if !p.is_subset(disk.full()) || !disk.is_balanced_set(p) {
            return Err(GenError::Unbalanced);
        }
        let g = &self.gamma;
        let mut floors = Vec::with_capacity(p.len());
        let mut cur = p;
        while !cur.is_empty() {
            let mut pos: Vec<usize> = cur.iter().map(|s| g.index_of(s)).collect();
            pos.sort_unstable();
            let (i, j) = pos
                .windows(2)
                .filter(|w| g.col(g.s(w[0])) != g.col(g.s(w[1])))
                .map(|w| (w[0], w[1]))
                .min_by_key(|&(i, j)| (j - i, i))
                .expect("a balanced plug has a pair of opposite colors");
            let inner = g.span(i + 1, j - 1);
            let q1 = disk.full().difference(cur.union(inner));
            let pair = SquareSet::from_indices([g.s(i), g.s(j)]);
            floors.push(Floor::new(disk, cur, &self.along(i + 1, j - 1), q1)?);
            let rest = cur.difference(pair);
            floors.push(Floor::new(disk, q1, &self.along(i, j), rest)?);
            cur = rest;
        }
        Ok(Tiling::new(self.disk.clone(), floors)?)
    }

    /// `t_f = t_{p_1}^{-1} * f * f_vert * t_{p_2^{-1}}` with `f_vert = (p_2, ∅, p_2^{-1})`.
    pub fn t_f(&self, f: &Floor) -> Result<Tiling, GenError> {
        let disk = &*self.disk;
        f.check(disk, 0)?;
        if !disk.is_balanced_set(f.down) || !disk.is_balanced_set(f.up) {
            return Err(GenError::Unbalanced);
        }
        let lower = self.t_p(f.down)?.inverse();
        let upper = self.t_p(disk.full().difference(f.up))?;
        let mut floors = lower.floors().to_vec();
        floors.push(*f);
        floors.push(Floor::vertical(disk, f.up));
        floors.extend_from_slice(upper.floors());
        Ok(Tiling::new(self.disk.clone(), floors)?)
    }

    /// The floor `(p, {d}, (p ∪ d)^{-1})`.
    pub fn generator_floor(&self, d: Domino, p: SquareSet) -> Result<Floor, GenError> {
        let disk = &*self.disk;
        if !p.is_disjoint(d.squares()) {
            return Err(GenError::Incompatible);
        }
        if !disk.is_balanced_set(p) {
            return Err(GenError::Unbalanced);
        }
        let up = disk.full().difference(p.union(d.squares()));
        Ok(Floor::new(disk, p, &[d], up)?)
    }

    /// `t_{d,p}`, of height `2|p| + 4`.
    pub fn t_dp(&self, d: Domino, p: SquareSet) -> Result<Tiling, GenError> {
        self.t_f(&self.generator_floor(d, p)?)
    }

    /// A plug compatible with `d` whose flux meets `target`, built from the
    /// lowest-index squares of the needed `col` in each region.
    pub fn canonical_plug(&self, d: Domino, target: FluxTarget) -> Result<SquareSet, GenError> {
        let g = &self.gamma;
        let sp = g.split(d).map_err(|_| GenError::RespectsPath)?;
        let pick = |region: SquareSet, amount: i64| -> Result<SquareSet, GenError> {
            let want = amount.signum();
            let mut pos: Vec<usize> = region.iter().filter(|&s| g.col(s) == want).map(|s| g.index_of(s)).collect();
            pos.sort_unstable();
            let k = amount.unsigned_abs() as usize;
            if pos.len() < k {
                return Err(GenError::Unachievable);
            }
            Ok(SquareSet::from_indices(pos[..k].iter().map(|&i| g.s(i))))
        };
        let plug = match target {
            FluxTarget::Triple(phi) => {
                if phi.sum() != 0 {
                    return Err(GenError::Unachievable);
                }
                pick(sp.minus, phi.minus)?.union(pick(sp.zero, phi.zero)?).union(pick(sp.plus, phi.plus)?)
            }
            FluxTarget::Zero(f0) => {
                let core = pick(sp.zero, f0)?;
                let avail = |region: SquareSet| region.iter().filter(|&s| g.col(s) == -f0.signum()).count() as i64;
                let from_plus = avail(sp.plus).min(f0.abs());
                let from_minus = f0.abs() - from_plus;
                core.union(pick(sp.plus, -f0.signum() * from_plus)?)
                    .union(pick(sp.minus, -f0.signum() * from_minus)?)
            }
        };
        debug_assert!(self.disk.is_balanced_set(plug));
        Ok(plug)
    }

    pub fn flux(&self, d: Domino, p: SquareSet) -> Result<FluxTriple, GenError> {
        Ok(flux(&self.gamma, d, p)?)
    }

    pub fn flux_zero(&self, d: Domino, p: SquareSet) -> Result<i64, GenError> {
        Ok(self.flux(d, p)?.zero)
    }

    /// The symbol for `t_{d,p}^{exp}`.
    pub fn symbol(&self, d: Domino, p: SquareSet, exp: i8) -> Result<GeneratorSymbol, GenError> {
        Ok(GeneratorSymbol { d, flux: self.flux(d, p)?, exp })
    }

    /// `t_{d, p}^{±1}` for a concrete plug.
    pub fn realize_plug_symbol(&self, s: &PlugSymbol) -> Result<Tiling, GenError> {
        let t = self.t_dp(s.d, s.plug)?;
        Ok(if s.exp < 0 { t.inverse() } else { t })
    }

    pub fn realize_symbol(&self, s: &GeneratorSymbol) -> Result<Tiling, GenError> {
        let p = self.canonical_plug(s.d, FluxTarget::Triple(s.flux))?;
        self.realize_plug_symbol(&PlugSymbol { d: s.d, plug: p, exp: s.exp })
    }

    /// Concatenation of the symbol realizations; `t_vert,2` for the empty word.
    pub fn realize(&self, w: &GeneratorWord) -> Result<Tiling, GenError> {
        if w.is_empty() {
            return Ok(Tiling::vertical(self.disk.clone(), SquareSet::EMPTY, 2)?);
        }
        let parts = w.0.iter().map(|s| self.realize_symbol(s)).collect::<Result<Vec<_>, _>>()?;
        let base = Tiling::empty(self.disk.clone(), SquareSet::EMPTY);
        Ok(Tiling::concat_all(base, &parts)?)
    }

    pub fn realize_plug_word(&self, w: &[PlugSymbol]) -> Result<Tiling, GenError> {
        if w.is_empty() {
            return Ok(Tiling::vertical(self.disk.clone(), SquareSet::EMPTY, 2)?);
        }
        let parts = w.iter().map(|s| self.realize_plug_symbol(s)).collect::<Result<Vec<_>, _>>()?;
        Ok(Tiling::concat_all(Tiling::empty(self.disk.clone(), SquareSet::EMPTY), &parts)?)
    }

    /// Splits every floor into single-domino generators: odd floors `f` give
    /// `t_f`, even floors give `t_{f^{-1}}^{-1}`, and `t_f` expands to
    /// `t_{d_1,p_1} * … * t_{d_k,p_k}` with `p_{i+1} = p_i ∪ d_i`. Dominoes are
    /// taken in canonical order except that those in `first` lead. Letters on
    /// dominoes that respect the path are dropped.
    pub fn decompose_with(&self, t: &Tiling, first: &[Domino]) -> Result<Vec<PlugSymbol>, GenError> {
        if **t.disk_arc() != *self.disk {
            return Err(GenError::DiskMismatch);
        }
        if t.height() % 2 == 1 {
            return Err(GenError::OddHeight(t.height()));
        }
        let mut out = Vec::new();
        for (i, f) in t.floors().iter().enumerate() {
            let mut dominoes = f.horiz(&self.disk);
            dominoes.sort_by_key(|d| (!first.contains(d), first.iter().position(|x| x == d), *d));
            let odd = i % 2 == 0;
            let mut plug = if odd { f.down } else { f.up };
            let mut letters = Vec::with_capacity(dominoes.len());
            for d in dominoes {
                if !self.gamma.respects(d) {
                    letters.push(PlugSymbol { d, plug, exp: if odd { 1 } else { -1 } });
                }
                plug = plug.union(d.squares());
            }
            if !odd {
                letters.reverse();
            }
            out.extend(letters);
        }
        Ok(out)
    }

    pub fn decompose_plugs(&self, t: &Tiling) -> Result<Vec<PlugSymbol>, GenError> {
        self.decompose_with(t, &[])
    }

    /// The generator word of a tiling of even height, with each letter
    /// recorded by the flux of its plug.
    pub fn decompose(&self, t: &Tiling) -> Result<GeneratorWord, GenError> {
        let raw = self.decompose_plugs(t)?;
        let syms = raw.iter().map(|s| self.symbol(s.d, s.plug, s.exp)).collect::<Result<Vec<_>, _>>()?;
        Ok(GeneratorWord(syms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamilton::find_hamilton;
    use crate::twist::twist;

    fn gens(w: i32, h: i32) -> Generators {
        let disk = Arc::new(Disk::rectangle(w, h).unwrap());
        let g = find_hamilton(&disk, true, true).unwrap();
        Generators::new(disk, g)
    }

    #[test]
    fn t_p_of_a_consecutive_pair() {
        let gs = gens(2, 3);
        let p = SquareSet::from_indices([gs.gamma().s(2), gs.gamma().s(3)]);
        let t = gs.t_p(p).unwrap();
        assert_eq!(t.height(), 2);
        assert_eq!(t.floors()[0].horiz_count(), 0);
        assert_eq!(t.floors()[1].horiz(gs.disk()), vec![Domino::new(gs.gamma().s(2), gs.gamma().s(3))]);
        assert!(gs.respects_all(&t));
        assert_eq!(gs.t_p(SquareSet::EMPTY).unwrap().height(), 0);
    }

    #[test]
    fn t_dp_shape() {
        let gs = gens(4, 4);
        for d in gs.gamma().d_gamma(gs.disk()) {
            let t = gs.t_dp(d, SquareSet::EMPTY).unwrap();
            assert_eq!(t.height(), 4);
            assert!(t.is_cylinder());
            assert_eq!(gs.non_respecting(&t), vec![(0, d)]);
        }
    }

    #[test]
    fn canonical_plug_hits_target() {
        let gs = gens(3, 4);
        for d in gs.gamma().d_gamma(gs.disk()) {
            for f0 in -3..=3 {
                if let Ok(p) = gs.canonical_plug(d, FluxTarget::Zero(f0)) {
                    assert_eq!(gs.flux_zero(d, p).unwrap(), f0);
                }
            }
        }
        let d = gs.gamma().d_gamma(gs.disk())[0];
        assert_eq!(gs.canonical_plug(d, FluxTarget::Zero(0)).unwrap(), SquareSet::EMPTY);
    }

    #[test]
    fn decompose_vertical_is_empty() {
        let gs = gens(3, 4);
        let t = Tiling::vertical(gs.disk().clone(), SquareSet::EMPTY, 4).unwrap();
        assert!(gs.decompose(&t).unwrap().is_empty());
        let w = gs.decompose(&t).unwrap();
        assert_eq!(twist(&gs.realize(&w).unwrap()).unwrap(), 0);
        assert_eq!(gs.decompose(&Tiling::vertical(gs.disk().clone(), SquareSet::EMPTY, 2).unwrap().concat(&t).unwrap()).unwrap().len(), 0);
    }

    #[test]
    fn odd_height_rejected() {
        let gs = gens(2, 2);
        let t = Tiling::new(gs.disk().clone(), vec![Floor::new(gs.disk(), SquareSet::EMPTY, &[Domino::new(0, 1), Domino::new(2, 3)], SquareSet::EMPTY).unwrap()]).unwrap();
        assert_eq!(gs.decompose(&t).unwrap_err(), GenError::OddHeight(1));
    }
}
