//! Hamiltonian paths and cycles on disks, the three regions cut out by a
//! domino that does not respect the path, interior/exterior classification,
//! and chains of dominoes linked by the good-pair conditions.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::grid::{Disk, Domino, SquareSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HamiltonError {
    #[error("sequence has {0} squares, disk has {1}")]
    WrongLength(usize, usize),
    #[error("square index {0} repeated or out of range")]
    BadSquare(usize),
    #[error("squares at positions {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("not a cycle")]
    NotACycle,
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("domino respects the path")]
    RespectsPath,
    #[error("domino is not in the set of non-respecting dominoes")]
    NotInDGamma,
    #[error("the two dominoes must be distinct")]
    SameDomino,
    #[error("precondition violated: {0}")]
    PreconditionViolated(&'static str),
    #[error("no chain of good pairs found between the dominoes")]
    InternalSearchFailure,
}

/// An ordering `(s_1, …, s_n)` of all squares of a disk along a hamiltonian
/// path, closed into a cycle when `is_cycle` holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HamiltonCycle {
    order: Vec<usize>,
    pos: Vec<usize>,
    is_cycle: bool,
}

impl HamiltonCycle {
    /// Validates an ordering of square indices.
    pub fn new(disk: &Disk, order: Vec<usize>, is_cycle: bool) -> Result<Self, HamiltonError> {
        let n = disk.len();
        if order.len() != n {
            return Err(HamiltonError::WrongLength(order.len(), n));
        }
        let mut pos = vec![usize::MAX; n];
        for (p, &s) in order.iter().enumerate() {
            if s >= n || pos[s] != usize::MAX {
                return Err(HamiltonError::BadSquare(s));
            }
            pos[s] = p;
        }
        for p in 1..n {
            if !disk.are_adjacent(order[p - 1], order[p]) {
                return Err(HamiltonError::NotAdjacent(p, p + 1));
            }
        }
        if is_cycle && (n < 2 || !disk.are_adjacent(order[0], order[n - 1])) {
            return Err(HamiltonError::NotAdjacent(n, 1));
        }
        Ok(HamiltonCycle { order, pos, is_cycle })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn is_cycle(&self) -> bool {
        self.is_cycle
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// The square `s_i`, 1-based.
    pub fn s(&self, i: usize) -> usize {
        self.order[i - 1]
    }

    /// 1-based position of a square along the path.
    pub fn index_of(&self, square: usize) -> usize {
        self.pos[square] + 1
    }

    /// `col(s_i) = (−1)^i`.
    pub fn col(&self, square: usize) -> i64 {
        if self.index_of(square) % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Sum of `col` over a set of squares.
    pub fn col_sum(&self, set: SquareSet) -> i64 {
        set.iter().map(|s| self.col(s)).sum()
    }

    /// Squares `s_i` for `i` in `lo..=hi` (1-based, inclusive; empty if `lo > hi`).
    pub fn span(&self, lo: usize, hi: usize) -> SquareSet {
        if lo > hi {
            return SquareSet::EMPTY;
        }
        SquareSet::from_indices(self.order[lo - 1..hi].iter().copied())
    }

    /// Positions `(k, l)` of a domino's squares with `k < l`.
    pub fn positions(&self, d: Domino) -> (usize, usize) {
        let (p, q) = (self.index_of(d.a), self.index_of(d.b));
        (p.min(q), p.max(q))
    }

    /// A domino respects the path when it joins two consecutive squares.
    pub fn respects(&self, d: Domino) -> bool {
        let (k, l) = self.positions(d);
        l - k == 1
    }

    /// The domino `s_1 ∪ s_n` of a cycle.
    pub fn closing_domino(&self) -> Option<Domino> {
        self.is_cycle
            .then(|| Domino::new(self.order[0], self.order[self.len() - 1]))
    }

    pub fn is_closing(&self, d: Domino) -> bool {
        self.closing_domino() == Some(d)
    }

    /// Dominoes of the disk that do not respect the path, in canonical order.
    pub fn d_gamma(&self, disk: &Disk) -> Vec<Domino> {
        disk.dominoes().into_iter().filter(|&d| !self.respects(d)).collect()
    }

    /// The regions `D_{d,−1}, D_{d,0}, D_{d,+1}` of a non-respecting domino.
    pub fn split(&self, d: Domino) -> Result<DominoSplit, HamiltonError> {
        let (k, l) = self.positions(d);
        if l - k == 1 {
            return Err(HamiltonError::RespectsPath);
        }
        let n = self.len();
        Ok(DominoSplit {
            domino: d,
            k,
            l,
            minus: self.span(1, k - 1),
            zero: self.span(k + 1, l - 1),
            plus: self.span(l + 1, n),
        })
    }

    /// Re-indexes a cycle as `(s_{k+1}, s_k, …, s_1, s_n, s_{n−1}, …, s_{k+2})`.
    pub fn rebase(&self, k: usize) -> Result<HamiltonCycle, HamiltonError> {
        if !self.is_cycle {
            return Err(HamiltonError::NotACycle);
        }
        let n = self.len();
        if k == 0 || k >= n {
            return Err(HamiltonError::IndexOutOfRange(k));
        }
        let mut order = Vec::with_capacity(n);
        for i in (1..=k + 1).rev() {
            order.push(self.s(i));
        }
        for i in (k + 2..=n).rev() {
            order.push(self.s(i));
        }
        let mut pos = vec![0; n];
        for (p, &s) in order.iter().enumerate() {
            pos[s] = p;
        }
        Ok(HamiltonCycle { order, pos, is_cycle: true })
    }

    /// The same cycle traversed backwards from the same initial square.
    pub fn reversed(&self) -> HamiltonCycle {
        let mut order = vec![self.order[0]];
        order.extend(self.order[1..].iter().rev());
        let mut pos = vec![0; order.len()];
        for (p, &s) in order.iter().enumerate() {
            pos[s] = p;
        }
        HamiltonCycle { order, pos, is_cycle: self.is_cycle }
    }

    /// Classifies every non-respecting domino of a cycle by the side of the
    /// closed curve through the square centers that its center segment lies on.
    pub fn non_respecting(&self, disk: &Disk) -> Result<Vec<(Domino, Side)>, HamiltonError> {
        if !self.is_cycle {
            return Err(HamiltonError::NotACycle);
        }
        Ok(self
            .d_gamma(disk)
            .into_iter()
            .map(|d| {
                let side = if self.is_closing(d) {
                    Side::Closing
                } else if self.segment_inside(disk, d) {
                    Side::Interior
                } else {
                    Side::Exterior
                };
                (d, side)
            })
            .collect())
    }

    /// Exact crossing-number test in doubled coordinates, where square centers
    /// sit at odd lattice points.
    fn segment_inside(&self, disk: &Disk, d: Domino) -> bool {
        let (sa, sb) = disk.domino_squares(d);
        let mx = sa.x + sb.x + 1;
        let my = sa.y + sb.y + 1;
        let vertical_domino = sa.x == sb.x;
        let n = self.len();
        let mut crossings = 0;
        for i in 0..n {
            let p = disk.square(self.order[i]);
            let q = disk.square(self.order[(i + 1) % n]);
            let (px, py, qx, qy) = (2 * p.x + 1, 2 * p.y + 1, 2 * q.x + 1, 2 * q.y + 1);
            if vertical_domino {
                // ray towards +x, count vertical edges
                if px == qx && px > mx && py.min(qy) < my && my < py.max(qy) {
                    crossings += 1;
                }
            } else if py == qy && py > my && px.min(qx) < mx && mx < px.max(qx) {
                crossings += 1;
            }
        }
        crossings % 2 == 1
    }
}

/// Position of a non-respecting domino relative to a hamiltonian cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Interior,
    Exterior,
    Closing,
}

/// The three regions into which a non-respecting domino `d = s_k ∪ s_l`
/// splits the rest of the disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DominoSplit {
    pub domino: Domino,
    pub k: usize,
    pub l: usize,
    pub minus: SquareSet,
    pub zero: SquareSet,
    pub plus: SquareSet,
}

impl DominoSplit {
    /// `D_{d,±1}`.
    pub fn pm(&self) -> SquareSet {
        self.minus.union(self.plus)
    }

    pub fn region(&self, j: i32) -> SquareSet {
        match j {
            -1 => self.minus,
            0 => self.zero,
            _ => self.plus,
        }
    }
}

/// Which of the three good-pair conditions links two consecutive dominoes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GoodPairCase {
    /// The next domino has one square in `D_{d,0}` and one in `D_{d,±1}`.
    Straddle,
    /// Nested inside `D_{d,0}` with a disk in between.
    NestedZero,
    /// Nested inside `D_{d,±1}` with a disk in between.
    NestedOuter,
}

/// Checks which good-pair condition (if any) holds for the step `current → next`.
pub fn good_pair_case(
    disk: &Disk,
    gamma: &HamiltonCycle,
    current: Domino,
    next: Domino,
) -> Option<GoodPairCase> {
    let cur = gamma.split(current).ok()?;
    let nxt = gamma.split(next).ok()?;
    let sq = next.squares();
    let in_zero = sq.intersection(cur.zero).len();
    let in_pm = sq.intersection(cur.pm()).len();
    if in_zero == 1 && in_pm == 1 {
        return Some(GoodPairCase::Straddle);
    }
    if in_zero == 2 && disk.is_disk_region(cur.zero.difference(nxt.zero)) {
        return Some(GoodPairCase::NestedZero);
    }
    if in_pm == 2 && disk.is_disk_region(cur.pm().difference(nxt.pm())) {
        return Some(GoodPairCase::NestedOuter);
    }
    None
}

/// A chain `d̃ = d_1, …, d_n = d` of non-respecting dominoes where every step
/// satisfies one of the good-pair conditions. Breadth-first over the condition
/// graph, so the chain is a shortest one; ties follow canonical domino order.
pub fn good_pair_sequence(
    disk: &Disk,
    gamma: &HamiltonCycle,
    from: Domino,
    to: Domino,
) -> Result<Vec<Domino>, HamiltonError> {
    if !gamma.is_cycle() {
        return Err(HamiltonError::NotACycle);
    }
    if from == to {
        return Err(HamiltonError::SameDomino);
    }
    let dg = gamma.d_gamma(disk);
    if !dg.contains(&from) || !dg.contains(&to) {
        return Err(HamiltonError::NotInDGamma);
    }
    shortest_chain(&dg, from, to, |a, b| good_pair_case(disk, gamma, a, b).is_some())
        .ok_or(HamiltonError::InternalSearchFailure)
}

/// Breadth-first search for a chain over `nodes` under a step predicate.
pub(crate) fn shortest_chain<F>(nodes: &[Domino], from: Domino, to: Domino, step: F) -> Option<Vec<Domino>>
where
    F: Fn(Domino, Domino) -> bool,
{
    let mut parent: FxHashMap<Domino, Domino> = FxHashMap::default();
    let mut queue = VecDeque::from([from]);
    parent.insert(from, from);
    while let Some(cur) = queue.pop_front() {
        if cur == to {
            let mut path = vec![to];
            let mut c = to;
            while c != from {
                c = parent[&c];
                path.push(c);
            }
            path.reverse();
            return Some(path);
        }
        for &nx in nodes {
            if !parent.contains_key(&nx) && step(cur, nx) {
                parent.insert(nx, cur);
                queue.push_back(nx);
            }
        }
    }
    None
}

/// Evaluates the interleaving statement for two non-respecting dominoes on a
/// cycle: when their endpoints interleave and `l − k ≥ 5`, one of the two
/// offsets between them is at least 3.
pub fn lemma31_holds(
    gamma: &HamiltonCycle,
    other: Domino,
    d: Domino,
) -> Result<bool, HamiltonError> {
    if !gamma.is_cycle() {
        return Err(HamiltonError::NotACycle);
    }
    if gamma.respects(other) || gamma.respects(d) {
        return Err(HamiltonError::NotInDGamma);
    }
    let (k, l) = gamma.positions(d);
    if l - k < 5 {
        return Err(HamiltonError::PreconditionViolated("l − k ≥ 5"));
    }
    let (a, b) = gamma.positions(other);
    if a < k && k < b && b < l {
        return Ok((k - a).max(l - b) >= 3);
    }
    if k < a && a < l && l < b {
        return Ok((a - k).max(b - l) >= 3);
    }
    Ok(true)
}

/// Backtracking search for a hamiltonian cycle or path. Neighbors are tried in
/// east, north, west, south order. Cycles start at `s_SW` when requested and at
/// square 0 otherwise; paths try every start in index order unless pinned.
pub fn find_hamilton(disk: &Disk, want_cycle: bool, start_at_ssw: bool) -> Option<HamiltonCycle> {
    let starts: Vec<usize> = if start_at_ssw {
        vec![disk.s_sw()]
    } else if want_cycle {
        vec![0]
    } else {
        (0..disk.len()).collect()
    };
    for s in starts {
        let mut found = None;
        Backtrack::new(disk, s, want_cycle).run(&mut |order| {
            found = Some(order.to_vec());
            false
        });
        if let Some(order) = found {
            return Some(HamiltonCycle::new(disk, order, want_cycle).expect("search yields valid paths"));
        }
    }
    None
}

/// Every directed hamiltonian cycle starting at `s_SW` (each undirected cycle
/// appears once per orientation), up to `limit`.
pub fn all_hamilton_cycles(disk: &Disk, limit: usize) -> Vec<HamiltonCycle> {
    let mut out = Vec::new();
    if disk.len() < 4 || !disk.is_balanced() {
        return out;
    }
    Backtrack::new(disk, disk.s_sw(), true).run(&mut |order| {
        out.push(HamiltonCycle::new(disk, order.to_vec(), true).expect("valid cycle"));
        out.len() < limit
    });
    out
}

struct Backtrack<'a> {
    disk: &'a Disk,
    start: usize,
    cycle: bool,
    order: Vec<usize>,
    visited: SquareSet,
}

impl<'a> Backtrack<'a> {
    fn new(disk: &'a Disk, start: usize, cycle: bool) -> Self {
        Backtrack { disk, start, cycle, order: vec![start], visited: SquareSet::single(start) }
    }

    /// Calls `emit` on every completed ordering; stops when it returns false.
    fn run(&mut self, emit: &mut dyn FnMut(&[usize]) -> bool) {
        let n = self.disk.len();
        if self.cycle && (n < 4 || !self.disk.is_balanced()) {
            if n == 1 {
                return;
            }
            if n < 4 || !self.disk.is_balanced() {
                return;
            }
        }
        self.step(emit);
    }

    fn step(&mut self, emit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        let n = self.disk.len();
        let head = *self.order.last().unwrap();
        if self.order.len() == n {
            if !self.cycle || self.disk.are_adjacent(head, self.start) {
                return emit(&self.order);
            }
            return true;
        }
        if !self.feasible(head) {
            return true;
        }
        for next in self.disk.neighbors(head).collect::<Vec<_>>() {
            if self.visited.contains(next) {
                continue;
            }
            self.visited.insert(next);
            self.order.push(next);
            let keep_going = self.step(emit);
            self.order.pop();
            self.visited.remove(next);
            if !keep_going {
                return false;
            }
        }
        true
    }

    fn feasible(&self, head: usize) -> bool {
        let free = self.disk.full().difference(self.visited);
        let mut ends = SquareSet::single(head);
        if self.cycle {
            ends.insert(self.start);
        }
        let open = free.union(ends);
        let mut dead_ends = 0;
        for s in free {
            let deg = self.disk.neighbor_set(s).intersection(open).len();
            if deg == 0 {
                return false;
            }
            if deg == 1 {
                if self.cycle {
                    return false;
                }
                dead_ends += 1;
                if dead_ends > 1 {
                    return false;
                }
            }
        }
        self.disk.is_connected(free.union(SquareSet::single(head)))
    }
}
