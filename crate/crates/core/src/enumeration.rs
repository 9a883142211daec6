//! Exhaustive enumeration of cylinder tilings floor by floor, and exact
//! counting with a transfer matrix over interface states.

use std::sync::Arc;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::grid::{Dir, Disk, SquareSet};
use crate::tiling::{Floor, Tiling};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumError {
    #[error("budget of {0} tilings exceeded")]
    BudgetExceeded(u64),
    #[error("more than {0} interface states")]
    StateSpaceTooLarge(usize),
    #[error("tiling count does not fit in 128 bits")]
    CountOverflow,
}

/// Default cap on the number of interface states a transfer matrix may hold.
pub const DEFAULT_STATE_CAP: usize = 1 << 20;

/// All floors `(p, f*, q)` over a disk, in the order produced by filling the
/// lowest uncovered square with an up square, then an east domino, then a
/// north domino.
pub fn enumerate_floors(disk: &Disk, p: SquareSet) -> Vec<Floor> {
    let mut out = Vec::new();
    let start = Floor { down: p, up: SquareSet::EMPTY, east: SquareSet::EMPTY, north: SquareSet::EMPTY };
    fill(disk, p, start, &mut out);
    out
}

fn fill(disk: &Disk, covered: SquareSet, cur: Floor, out: &mut Vec<Floor>) {
    let Some(s) = disk.full().difference(covered).first() else {
        out.push(cur);
        return;
    };
    let mut f = cur;
    f.up.insert(s);
    fill(disk, covered.union(SquareSet::single(s)), f, out);
    for (dir, east) in [(Dir::East, true), (Dir::North, false)] {
        if let Some(t) = disk.neighbor(s, dir) {
            if !covered.contains(t) {
                let mut f = cur;
                if east {
                    f.east.insert(s);
                } else {
                    f.north.insert(s);
                }
                fill(disk, covered.union(SquareSet::from_indices([s, t])), f, out);
            }
        }
    }
}

/// Number of floors from `p` to each reachable `q`, aggregated.
fn floor_counts(disk: &Disk, p: SquareSet) -> Vec<(SquareSet, u64)> {
    let mut m: FxHashMap<SquareSet, u64> = FxHashMap::default();
    for f in enumerate_floors(disk, p) {
        *m.entry(f.up).or_insert(0) += 1;
    }
    let mut v: Vec<_> = m.into_iter().collect();
    v.sort();
    v
}

/// Sparse transfer matrix over the interface states reachable from `∅`.
/// Entry `[p][q]` counts the floors `(p, f*, q)`.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    states: Vec<SquareSet>,
    index: FxHashMap<SquareSet, usize>,
    rows: Vec<Vec<(usize, u64)>>,
}

impl TransferMatrix {
    pub fn build(disk: &Disk, state_cap: usize) -> Result<TransferMatrix, EnumError> {
        let mut tm = TransferMatrix { states: vec![SquareSet::EMPTY], index: FxHashMap::default(), rows: Vec::new() };
        tm.index.insert(SquareSet::EMPTY, 0);
        let mut i = 0;
        while i < tm.states.len() {
            let p = tm.states[i];
            let mut row = Vec::new();
            for (q, c) in floor_counts(disk, p) {
                let j = match tm.index.get(&q) {
                    Some(&j) => j,
                    None => {
                        if tm.states.len() >= state_cap {
                            return Err(EnumError::StateSpaceTooLarge(state_cap));
                        }
                        tm.states.push(q);
                        tm.index.insert(q, tm.states.len() - 1);
                        tm.states.len() - 1
                    }
                };
                row.push((j, c));
            }
            row.sort();
            tm.rows.push(row);
            i += 1;
        }
        Ok(tm)
    }

    pub fn states(&self) -> &[SquareSet] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Entry `[p][q]`, zero when absent.
    pub fn entry(&self, p: SquareSet, q: SquareSet) -> u64 {
        let (Some(&i), Some(&j)) = (self.index.get(&p), self.index.get(&q)) else {
            return 0;
        };
        self.rows[i].iter().find(|&&(k, _)| k == j).map(|&(_, c)| c).unwrap_or(0)
    }

    pub fn row(&self, p: SquareSet) -> impl Iterator<Item = (SquareSet, u64)> + '_ {
        let i = self.index.get(&p).copied();
        i.into_iter().flat_map(move |i| self.rows[i].iter().map(move |&(j, c)| (self.states[j], c)))
    }

    /// `(A^n)[∅][∅]`.
    pub fn count(&self, n: usize) -> BigUint {
        let mut v: Vec<BigUint> = vec![BigUint::default(); self.len()];
        v[0] = BigUint::from(1u32);
        for _ in 0..n {
            let mut w: Vec<BigUint> = vec![BigUint::default(); self.len()];
            for (i, x) in v.iter().enumerate() {
                if x.bits() == 0 {
                    continue;
                }
                for &(j, c) in &self.rows[i] {
                    w[j] += x * c;
                }
            }
            v = w;
        }
        v[0].clone()
    }

    /// `layers[k]` = states reachable from `∅` in exactly `k` floors.
    pub fn layers(&self, n: usize) -> Vec<FxHashSet<SquareSet>> {
        let mut layers = Vec::with_capacity(n + 1);
        let mut cur: FxHashSet<SquareSet> = [SquareSet::EMPTY].into_iter().collect();
        for _ in 0..n {
            let mut next = FxHashSet::default();
            for p in &cur {
                let i = self.index[p];
                next.extend(self.rows[i].iter().map(|&(j, _)| self.states[j]));
            }
            layers.push(std::mem::replace(&mut cur, next));
        }
        layers.push(cur);
        layers
    }
}

/// Exact number of tilings of `D × [0, n]` by the transfer matrix.
pub fn count_tm(disk: &Disk, n: usize) -> Result<BigUint, EnumError> {
    Ok(TransferMatrix::build(disk, DEFAULT_STATE_CAP)?.count(n))
}

/// Depth-first floor-sequence walker. Floors from each state are computed
/// once; states that cannot return to `∅` in the remaining floors are pruned
/// using the layer sets (floor inversion makes reachability symmetric).
pub struct TilingWalker {
    disk: Arc<Disk>,
    n: usize,
    layers: Vec<FxHashSet<SquareSet>>,
    cache: FxHashMap<SquareSet, Arc<Vec<Floor>>>,
}

impl TilingWalker {
    pub fn new(disk: Arc<Disk>, n: usize) -> Result<TilingWalker, EnumError> {
        let tm = TransferMatrix::build(&disk, DEFAULT_STATE_CAP)?;
        let layers = tm.layers(n);
        Ok(TilingWalker { disk, n, layers, cache: FxHashMap::default() })
    }

    fn floors_from(&mut self, p: SquareSet) -> Arc<Vec<Floor>> {
        if let Some(v) = self.cache.get(&p) {
            return v.clone();
        }
        let v = Arc::new(enumerate_floors(&self.disk, p));
        self.cache.insert(p, v.clone());
        v
    }

    /// Calls `visit` with the floor stack of every tiling, in lexicographic
    /// floor-enumeration order; stops early when `visit` returns false.
    pub fn walk(&mut self, visit: &mut dyn FnMut(&[Floor]) -> bool) {
        let mut stack = Vec::with_capacity(self.n);
        if self.n == 0 {
            visit(&stack);
            return;
        }
        self.step(SquareSet::EMPTY, &mut stack, visit);
    }

    fn step(&mut self, p: SquareSet, stack: &mut Vec<Floor>, visit: &mut dyn FnMut(&[Floor]) -> bool) -> bool {
        let level = stack.len();
        let remaining = self.n - level - 1;
        let floors = self.floors_from(p);
        for f in floors.iter() {
            if !self.layers[remaining].contains(&f.up) {
                continue;
            }
            stack.push(*f);
            let go_on = if remaining == 0 { visit(stack) } else { self.step(f.up, stack, visit) };
            stack.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
}

/// Calls `visit` on every tiling of `D × [0, n]`; stops when it returns false.
pub fn for_each_tiling(disk: Arc<Disk>, n: usize, mut visit: impl FnMut(Tiling) -> bool) -> Result<(), EnumError> {
    let mut w = TilingWalker::new(disk.clone(), n)?;
    w.walk(&mut |floors| visit(Tiling::from_floors_unchecked(disk.clone(), floors.to_vec())));
    Ok(())
}

/// All tilings of `D × [0, n]`, failing if there are more than `budget`.
pub fn enumerate_tilings(disk: Arc<Disk>, n: usize, budget: u64) -> Result<Vec<Tiling>, EnumError> {
    let mut out = Vec::new();
    let mut over = false;
    for_each_tiling(disk, n, |t| {
        if out.len() as u64 >= budget {
            over = true;
            return false;
        }
        out.push(t);
        true
    })?;
    if over {
        return Err(EnumError::BudgetExceeded(budget));
    }
    Ok(out)
}

/// Number of tilings found by the depth-first walk, failing past `budget`.
pub fn count_dfs(disk: Arc<Disk>, n: usize, budget: u64) -> Result<u64, EnumError> {
    let mut w = TilingWalker::new(disk, n)?;
    let mut count = 0u64;
    w.walk(&mut |_| {
        count += 1;
        count <= budget
    });
    if count > budget {
        return Err(EnumError::BudgetExceeded(budget));
    }
    Ok(count)
}

/// Uniform sampler over the tilings of `D × [0, n]`, drawing floor by floor
/// with weights given by the number of ways to finish the tiling.
pub struct Sampler {
    disk: Arc<Disk>,
    tm: TransferMatrix,
    /// `to_end[r][i]`: tilings of `r` more floors from state `i` to `∅`.
    to_end: Vec<Vec<u128>>,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(disk: Arc<Disk>, n: usize, seed: u64) -> Result<Sampler, EnumError> {
        let tm = TransferMatrix::build(&disk, DEFAULT_STATE_CAP)?;
        let mut to_end = vec![vec![0u128; tm.len()]];
        to_end[0][0] = 1;
        for r in 1..=n {
            let prev = &to_end[r - 1];
            let mut cur = vec![0u128; tm.len()];
            for (i, row) in tm.rows.iter().enumerate() {
                let mut acc = 0u128;
                for &(j, c) in row {
                    acc = prev[j].checked_mul(c as u128).and_then(|x| x.checked_add(acc)).ok_or(EnumError::CountOverflow)?;
                }
                cur[i] = acc;
            }
            to_end.push(cur);
        }
        Ok(Sampler { disk, tm, to_end, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    /// Number of tilings of the full height.
    pub fn total(&self) -> u128 {
        self.to_end.last().expect("at least height zero")[0]
    }

    /// One uniformly random tiling, or `None` when there is none.
    pub fn sample(&mut self) -> Option<Tiling> {
        let n = self.to_end.len() - 1;
        if self.total() == 0 {
            return None;
        }
        let mut floors = Vec::with_capacity(n);
        let mut i = 0usize;
        for r in (1..=n).rev() {
            let mut x = self.rng.gen_range(0..self.to_end[r][i]);
            let p = self.tm.states[i];
            let mut next = None;
            for &(j, c) in &self.tm.rows[i] {
                let w = self.to_end[r - 1][j] * c as u128;
                if x < w {
                    next = Some((j, (x / self.to_end[r - 1][j]) as usize));
                    break;
                }
                x -= w;
            }
            let (j, k) = next.expect("weights sum to the total");
            let q = self.tm.states[j];
            let f = enumerate_floors(&self.disk, p)
                .into_iter()
                .filter(|f| f.up == q)
                .nth(k)
                .expect("row entry counts these floors");
            floors.push(f);
            i = j;
        }
        Some(Tiling::from_floors_unchecked(self.disk.clone(), floors))
    }
}

/// `k` independent uniform samples, reproducible from `seed`.
pub fn sample_tilings(disk: Arc<Disk>, n: usize, k: usize, seed: u64) -> Result<Vec<Tiling>, EnumError> {
    let mut s = Sampler::new(disk, n, seed)?;
    Ok((0..k).map_while(|_| s.sample()).collect())
}
