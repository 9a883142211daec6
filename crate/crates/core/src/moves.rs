//! Flips, the flip graph, its connected components, and bounded searches
//! for equivalence after vertical padding.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::enumeration::{for_each_tiling, EnumError};
use crate::grid::{Dir, Disk, Domino};
use crate::tiling::{Floor, Tiling, TilingKey};
use crate::twist::twist;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoveError {
    #[error("flip is not applicable to this tiling")]
    IllegalFlip,
    #[error("heights {0} and {1} have different parity")]
    ParityMismatch(usize, usize),
    #[error("tilings live on different disks")]
    DiskMismatch,
    #[error("boundary plugs differ")]
    PlugMismatch,
    #[error("padding must be even, got {0}")]
    OddPadding(usize),
    #[error(transparent)]
    Enumeration(#[from] EnumError),
}

/// A local move inside a `2 × 2 × 1` box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Flip {
    /// Two parallel horizontal dominoes of one floor filling the 2×2 block
    /// with south-west square `sw` are rotated by a quarter turn.
    InFloor { floor: usize, sw: usize },
    /// The domino `d`, horizontal in floors `floor` and `floor + 1`, becomes
    /// two vertical dominoes.
    HorizToVert { floor: usize, d: Domino },
    /// Two vertical dominoes crossing the interface above `floor` on the
    /// squares of `d` become the horizontal domino `d` in both floors.
    VertToHoriz { floor: usize, d: Domino },
}

impl Flip {
    pub fn inverse(self) -> Flip {
        match self {
            Flip::InFloor { .. } => self,
            Flip::HorizToVert { floor, d } => Flip::VertToHoriz { floor, d },
            Flip::VertToHoriz { floor, d } => Flip::HorizToVert { floor, d },
        }
    }

    /// Floors touched by the move.
    pub fn floors(self) -> std::ops::RangeInclusive<usize> {
        match self {
            Flip::InFloor { floor, .. } => floor..=floor,
            Flip::HorizToVert { floor, .. } | Flip::VertToHoriz { floor, .. } => floor..=floor + 1,
        }
    }
}

fn has_domino(disk: &Disk, f: &Floor, d: Domino) -> bool {
    if disk.is_x_domino(d) {
        f.east.contains(d.a)
    } else {
        f.north.contains(d.a)
    }
}

fn set_domino(disk: &Disk, f: &mut Floor, d: Domino, on: bool) {
    let field = if disk.is_x_domino(d) { &mut f.east } else { &mut f.north };
    if on {
        field.insert(d.a);
    } else {
        field.remove(d.a);
    }
}

/// The four squares of the 2×2 block with south-west corner `sw`, as
/// `(sw, se, nw, ne)`, when the block lies in the disk.
fn block(disk: &Disk, sw: usize) -> Option<(usize, usize, usize, usize)> {
    let se = disk.neighbor(sw, Dir::East)?;
    let nw = disk.neighbor(sw, Dir::North)?;
    let ne = disk.neighbor(se, Dir::North)?;
    Some((sw, se, nw, ne))
}

/// Every flip available in `t`, ordered by floor: in-floor rotations of
/// floor `i`, then the vertical moves across the interface above it.
pub fn enumerate_flips(t: &Tiling) -> Vec<Flip> {
    let disk = t.disk();
    let floors = t.floors();
    let mut out = Vec::new();
    for (i, f) in floors.iter().enumerate() {
        for sw in f.east.union(f.north) {
            if let Some((sw, _se, nw, _ne)) = block(disk, sw) {
                let stacked_x = f.east.contains(sw) && f.east.contains(nw);
                let side_y = f.north.contains(sw) && disk.neighbor(sw, Dir::East).is_some_and(|se| f.north.contains(se));
                if stacked_x || side_y {
                    out.push(Flip::InFloor { floor: i, sw });
                }
            }
        }
        if i + 1 < floors.len() {
            let g = &floors[i + 1];
            let mut vs = Vec::new();
            for s in f.east.intersection(g.east) {
                vs.push(Flip::HorizToVert { floor: i, d: Domino::new(s, disk.neighbor(s, Dir::East).unwrap()) });
            }
            for s in f.north.intersection(g.north) {
                vs.push(Flip::HorizToVert { floor: i, d: Domino::new(s, disk.neighbor(s, Dir::North).unwrap()) });
            }
            for s in f.up {
                for dir in [Dir::East, Dir::North] {
                    if let Some(u) = disk.neighbor(s, dir) {
                        if f.up.contains(u) {
                            vs.push(Flip::VertToHoriz { floor: i, d: Domino::new(s, u) });
                        }
                    }
                }
            }
            vs.sort();
            out.extend(vs);
        }
    }
    out
}

/// Applies a flip in place to a floor slice; returns false if illegal.
pub(crate) fn apply_to_floors(disk: &Disk, floors: &mut [Floor], flip: Flip) -> bool {
    match flip {
        Flip::InFloor { floor, sw } => {
            let Some(f) = floors.get_mut(floor) else { return false };
            let Some((sw, se, nw, _)) = block(disk, sw) else { return false };
            if f.east.contains(sw) && f.east.contains(nw) {
                f.east.remove(sw);
                f.east.remove(nw);
                f.north.insert(sw);
                f.north.insert(se);
                true
            } else if f.north.contains(sw) && f.north.contains(se) {
                f.north.remove(sw);
                f.north.remove(se);
                f.east.insert(sw);
                f.east.insert(nw);
                true
            } else {
                false
            }
        }
        Flip::HorizToVert { floor, d } => {
            if floor + 1 >= floors.len() || !disk.are_adjacent(d.a, d.b) {
                return false;
            }
            if !has_domino(disk, &floors[floor], d) || !has_domino(disk, &floors[floor + 1], d) {
                return false;
            }
            set_domino(disk, &mut floors[floor], d, false);
            set_domino(disk, &mut floors[floor + 1], d, false);
            floors[floor].up = floors[floor].up.union(d.squares());
            floors[floor + 1].down = floors[floor].up;
            true
        }
        Flip::VertToHoriz { floor, d } => {
            if floor + 1 >= floors.len() || !disk.are_adjacent(d.a, d.b) {
                return false;
            }
            if !d.squares().is_subset(floors[floor].up) {
                return false;
            }
            floors[floor].up = floors[floor].up.difference(d.squares());
            floors[floor + 1].down = floors[floor].up;
            set_domino(disk, &mut floors[floor], d, true);
            set_domino(disk, &mut floors[floor + 1], d, true);
            true
        }
    }
}

/// The tiling after a flip.
pub fn apply_flip(t: &Tiling, flip: Flip) -> Result<Tiling, MoveError> {
    let mut floors = t.floors().to_vec();
    if !apply_to_floors(t.disk(), &mut floors, flip) {
        return Err(MoveError::IllegalFlip);
    }
    Ok(Tiling::from_floors_unchecked(t.disk_arc().clone(), floors))
}

/// All tilings one flip away, in flip order.
pub fn neighbors(t: &Tiling) -> Vec<Tiling> {
    enumerate_flips(t).into_iter().map(|f| apply_flip(t, f).expect("listed flip applies")).collect()
}

/// One flip component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    pub size: u64,
    pub twist: i64,
    #[serde(skip)]
    pub representative: Tiling,
}

/// Partition of all tilings of `D × [0, N]` into flip components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentReport {
    pub n: usize,
    pub total_tilings: u64,
    pub exhaustive: bool,
    pub components: Vec<Component>,
}

impl ComponentReport {
    pub fn largest_fraction(&self) -> f64 {
        let max = self.components.iter().map(|c| c.size).max().unwrap_or(0);
        if self.total_tilings == 0 {
            0.0
        } else {
            max as f64 / self.total_tilings as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("component,size,twist\n");
        for (i, c) in self.components.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", i, c.size, c.twist));
        }
        s
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

/// Flip components of the tilings of `D × [0, N]`, by enumeration and
/// union-find over flip edges. Components are listed in the order of their
/// first tiling in enumeration order. When more than `budget` tilings exist
/// the report covers the first `budget` only and is flagged non-exhaustive;
/// edges leaving that set are ignored.
pub fn components(disk: Arc<Disk>, n: usize, budget: u64) -> Result<ComponentReport, MoveError> {
    let mut tilings: Vec<Tiling> = Vec::new();
    let mut exhaustive = true;
    for_each_tiling(disk, n, |t| {
        if tilings.len() as u64 >= budget {
            exhaustive = false;
            return false;
        }
        tilings.push(t);
        true
    })?;
    let index: FxHashMap<TilingKey, u32> = tilings.iter().enumerate().map(|(i, t)| (t.key(), i as u32)).collect();
    let edges: Vec<Vec<u32>> = tilings
        .par_iter()
        .map(|t| neighbors(t).iter().filter_map(|u| index.get(&u.key()).copied()).collect())
        .collect();
    let mut parent: Vec<u32> = (0..tilings.len() as u32).collect();
    for (i, es) in edges.iter().enumerate() {
        for &j in es {
            let (a, b) = (find(&mut parent, i as u32), find(&mut parent, j));
            if a != b {
                let (lo, hi) = (a.min(b), a.max(b));
                parent[hi as usize] = lo;
            }
        }
    }
    let mut comp_of_root: FxHashMap<u32, usize> = FxHashMap::default();
    let mut comps: Vec<Component> = Vec::new();
    for i in 0..tilings.len() {
        let r = find(&mut parent, i as u32);
        let c = *comp_of_root.entry(r).or_insert_with(|| {
            comps.push(Component {
                size: 0,
                twist: twist(&tilings[i]).unwrap_or(i64::MIN),
                representative: tilings[i].clone(),
            });
            comps.len() - 1
        });
        comps[c].size += 1;
    }
    Ok(ComponentReport { n, total_tilings: tilings.len() as u64, exhaustive, components: comps })
}

/// Outcome of a bounded equivalence search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    /// `t₁ * t_vert,m1` and `t₂ * t_vert,m2` are joined by `path`.
    Connected { m1: usize, m2: usize, path: Vec<Flip> },
    /// No connection found within the padding and state budgets.
    Unknown { pad_max: usize, states: u64 },
}

impl Equivalence {
    pub fn is_connected(&self) -> bool {
        matches!(self, Equivalence::Connected { .. })
    }
}

/// Per-cube labels used by the search heuristic: for each floor, the
/// direction each square's domino takes.
fn cube_labels(t: &Tiling) -> Vec<u8> {
    let disk = t.disk();
    let mut out = Vec::with_capacity(t.height() * disk.len());
    for f in t.floors() {
        let e = disk.shift(f.east, Dir::East);
        let nn = disk.shift(f.north, Dir::North);
        for s in 0..disk.len() {
            let l = if f.up.contains(s) {
                1
            } else if f.down.contains(s) {
                2
            } else if f.east.contains(s) {
                3
            } else if e.contains(s) {
                4
            } else if f.north.contains(s) {
                5
            } else if nn.contains(s) {
                6
            } else {
                0
            };
            out.push(l);
        }
    }
    out
}

fn mismatch(a: &[u8], b: &[u8]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}

/// Search limits for [`equiv_bounded`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    /// Maximum number of distinct tilings stored per padding level.
    pub states: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { states: 2_000_000 }
    }
}

/// Looks for `M₁, M₂ ≤ pad_max` (even, `N₁ + M₁ = N₂ + M₂`) and a flip path
/// between the padded tilings, trying the smallest paddings first. The
/// search is a bidirectional best-first walk guided by the number of cubes
/// whose dominoes differ. A returned path is replayed and checked before it
/// is reported; failure to connect is always reported as `Unknown`.
pub fn equiv_bounded(t1: &Tiling, t2: &Tiling, pad_max: usize, budget: SearchBudget) -> Result<Equivalence, MoveError> {
    if t1.disk() != t2.disk() {
        return Err(MoveError::DiskMismatch);
    }
    let (n1, n2) = (t1.height(), t2.height());
    if n1 % 2 != n2 % 2 {
        return Err(MoveError::ParityMismatch(n1, n2));
    }
    if pad_max % 2 == 1 {
        return Err(MoveError::OddPadding(pad_max));
    }
    if t1.bottom() != t2.bottom() || t1.top() != t2.top() {
        return Err(MoveError::PlugMismatch);
    }
    if t1.is_cylinder() && twist(t1).ok() != twist(t2).ok() {
        // a flip path would preserve the twist
        return Ok(Equivalence::Unknown { pad_max, states: 0 });
    }
    let mut states_used = 0;
    for h in (n1.max(n2)..=n1.min(n2) + pad_max).step_by(2) {
        let (m1, m2) = (h - n1, h - n2);
        let a = t1.pad(m1).expect("even padding");
        let b = t2.pad(m2).expect("even padding");
        let (path, used) = connect(&a, &b, budget.states);
        states_used += used;
        if let Some(path) = path {
            if replay(&a, &path).as_ref() == Some(&b) {
                return Ok(Equivalence::Connected { m1, m2, path });
            }
        }
    }
    Ok(Equivalence::Unknown { pad_max, states: states_used })
}

/// Applies a flip sequence, returning `None` if any flip is illegal.
pub fn replay(t: &Tiling, path: &[Flip]) -> Option<Tiling> {
    let mut floors = t.floors().to_vec();
    for &f in path {
        if !apply_to_floors(t.disk(), &mut floors, f) {
            return None;
        }
    }
    Some(Tiling::from_floors_unchecked(t.disk_arc().clone(), floors))
}

struct Side {
    parent: FxHashMap<TilingKey, (TilingKey, Flip)>,
    heap: BinaryHeap<Reverse<(u32, u64, TilingKey)>>,
    seq: u64,
}

/// Bidirectional best-first search between two tilings of equal height.
fn connect(a: &Tiling, b: &Tiling, max_states: u64) -> (Option<Vec<Flip>>, u64) {
    let disk = a.disk_arc().clone();
    let height = a.height();
    let (ka, kb) = (a.key(), b.key());
    if ka == kb {
        return (Some(Vec::new()), 1);
    }
    let la = cube_labels(a);
    let lb = cube_labels(b);
    let root_flip = Flip::InFloor { floor: usize::MAX, sw: usize::MAX };
    let mut sides = [
        Side { parent: FxHashMap::default(), heap: BinaryHeap::new(), seq: 0 },
        Side { parent: FxHashMap::default(), heap: BinaryHeap::new(), seq: 0 },
    ];
    sides[0].parent.insert(ka.clone(), (ka.clone(), root_flip));
    sides[0].heap.push(Reverse((mismatch(&la, &lb), 0, ka.clone())));
    sides[1].parent.insert(kb.clone(), (kb.clone(), root_flip));
    sides[1].heap.push(Reverse((mismatch(&la, &lb), 0, kb.clone())));
    let goals = [lb, la];
    let mut turn = 0;
    loop {
        let total = (sides[0].parent.len() + sides[1].parent.len()) as u64;
        if total >= max_states || (sides[0].heap.is_empty() && sides[1].heap.is_empty()) {
            return (None, total);
        }
        if sides[turn].heap.is_empty() {
            turn = 1 - turn;
        }
        let Reverse((_, _, key)) = sides[turn].heap.pop().unwrap();
        let t = Tiling::from_key(disk.clone(), &key, height);
        for flip in enumerate_flips(&t) {
            let u = apply_flip(&t, flip).expect("listed flip applies");
            let ku = u.key();
            if sides[turn].parent.contains_key(&ku) {
                continue;
            }
            sides[turn].parent.insert(ku.clone(), (key.clone(), flip));
            if sides[1 - turn].parent.contains_key(&ku) {
                let mut path = trace(&sides[0].parent, &ku);
                let mut back = trace(&sides[1].parent, &ku);
                back.reverse();
                path.extend(back.into_iter().map(Flip::inverse));
                let total = (sides[0].parent.len() + sides[1].parent.len()) as u64;
                return (Some(path), total);
            }
            let score = mismatch(&cube_labels(&u), &goals[turn]);
            let side = &mut sides[turn];
            side.seq += 1;
            side.heap.push(Reverse((score, side.seq, ku)));
        }
        turn = 1 - turn;
    }
}

/// Flips from the root of a search tree to `key`.
fn trace(parent: &FxHashMap<TilingKey, (TilingKey, Flip)>, key: &TilingKey) -> Vec<Flip> {
    let mut out = Vec::new();
    let mut k = key.clone();
    loop {
        let (p, f) = &parent[&k];
        if *p == k {
            break;
        }
        out.push(*f);
        k = p.clone();
    }
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::enumerate_tilings;
    use crate::grid::SquareSet;

    #[test]
    fn flips_of_vertical() {
        let d = Arc::new(Disk::rectangle(2, 2).unwrap());
        let t = Tiling::vertical(d, SquareSet::EMPTY, 2).unwrap();
        let fl = enumerate_flips(&t);
        assert_eq!(fl.len(), 4);
        for f in fl {
            let u = apply_flip(&t, f).unwrap();
            u.validate().unwrap();
            assert_eq!(apply_flip(&u, f.inverse()).unwrap(), t);
        }
        assert_eq!(
            apply_flip(&t, Flip::InFloor { floor: 0, sw: 0 }).unwrap_err(),
            MoveError::IllegalFlip
        );
    }

    #[test]
    fn two_by_two_components() {
        let d = Arc::new(Disk::rectangle(2, 2).unwrap());
        let r = components(d.clone(), 2, 1000).unwrap();
        assert_eq!(r.components.len(), 1);
        assert_eq!(r.components[0].size, 9);
        for t in enumerate_tilings(d, 2, 100).unwrap() {
            for f in enumerate_flips(&t) {
                let u = apply_flip(&t, f).unwrap();
                u.validate().unwrap();
                assert!(enumerate_flips(&u).contains(&f.inverse()));
                assert_eq!(apply_flip(&u, f.inverse()).unwrap(), t);
            }
        }
    }

    #[test]
    fn equiv_self() {
        let d = Arc::new(Disk::rectangle(2, 3).unwrap());
        let t = Tiling::vertical(d, SquareSet::EMPTY, 2).unwrap();
        assert_eq!(
            equiv_bounded(&t, &t, 0, SearchBudget::default()).unwrap(),
            Equivalence::Connected { m1: 0, m2: 0, path: vec![] }
        );
    }
}
