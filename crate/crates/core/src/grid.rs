//! Quadriculated disks: unit squares of the integer grid, their checkerboard
//! coloring, adjacency, and the shape predicates used throughout the crate.

use std::collections::VecDeque;
use std::fmt;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest disk supported; square sets are stored as `u64` bitmasks.
pub const MAX_SQUARES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("empty input: no squares marked")]
    EmptyInput,
    #[error("region is not connected")]
    NotConnected,
    #[error("region is not simply connected")]
    NotSimplyConnected,
    #[error("region has {0} squares, at most {MAX_SQUARES} are supported")]
    TooLarge(usize),
    #[error("unexpected character {0:?} at row {1}, column {2}")]
    BadCharacter(char, usize, usize),
    #[error("duplicate square ({0}, {1})")]
    DuplicateSquare(i32, i32),
}

/// The unit square `[x, x+1] × [y, y+1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Square {
    pub x: i32,
    pub y: i32,
}

impl Square {
    pub const fn new(x: i32, y: i32) -> Self {
        Square { x, y }
    }

    /// Geometric checkerboard color: white iff `x + y` is even.
    pub fn is_white(self) -> bool {
        (self.x + self.y).rem_euclid(2) == 0
    }

    pub fn is_adjacent(self, other: Square) -> bool {
        (self.x - other.x).abs() + (self.y - other.y).abs() == 1
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Neighbor directions, in the fixed order east, north, west, south.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    East = 0,
    North = 1,
    West = 2,
    South = 3,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::East, Dir::North, Dir::West, Dir::South];

    pub fn offset(self) -> (i32, i32) {
        match self {
            Dir::East => (1, 0),
            Dir::North => (0, 1),
            Dir::West => (-1, 0),
            Dir::South => (0, -1),
        }
    }
}

/// A set of squares of one disk, indexed by the disk's canonical square order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SquareSet(pub u64);

impl SquareSet {
    pub const EMPTY: SquareSet = SquareSet(0);

    pub fn single(i: usize) -> Self {
        SquareSet(1u64 << i)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        SquareSet(it.into_iter().fold(0u64, |m, i| m | (1u64 << i)))
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1u64 << i;
    }

    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1u64 << i);
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: SquareSet) -> SquareSet {
        SquareSet(self.0 | other.0)
    }

    pub fn intersection(self, other: SquareSet) -> SquareSet {
        SquareSet(self.0 & other.0)
    }

    pub fn difference(self, other: SquareSet) -> SquareSet {
        SquareSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: SquareSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: SquareSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Lowest index in the set.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> SquareSetIter {
        SquareSetIter(self.0)
    }
}

impl IntoIterator for SquareSet {
    type Item = usize;
    type IntoIter = SquareSetIter;
    fn into_iter(self) -> SquareSetIter {
        SquareSetIter(self.0)
    }
}

pub struct SquareSetIter(u64);

impl Iterator for SquareSetIter {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

/// A planar domino given by two adjacent square indices with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Domino {
    pub a: usize,
    pub b: usize,
}

impl Domino {
    /// Builds the domino in canonical order. Adjacency is not checked here.
    pub fn new(i: usize, j: usize) -> Self {
        if i < j {
            Domino { a: i, b: j }
        } else {
            Domino { a: j, b: i }
        }
    }

    pub fn squares(self) -> SquareSet {
        SquareSet((1u64 << self.a) | (1u64 << self.b))
    }

    pub fn contains(self, i: usize) -> bool {
        self.a == i || self.b == i
    }

    pub fn is_disjoint(self, other: Domino) -> bool {
        self.squares().is_disjoint(other.squares())
    }
}

/// A finite, edge-connected, simply connected set of unit squares.
#[derive(Clone)]
pub struct Disk {
    squares: Vec<Square>,
    index: FxHashMap<Square, usize>,
    nbrs: Vec<[Option<usize>; 4]>,
    white: SquareSet,
}

impl PartialEq for Disk {
    fn eq(&self, other: &Self) -> bool {
        self.squares == other.squares
    }
}

impl Eq for Disk {}

impl fmt::Debug for Disk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Disk").field("squares", &self.squares).finish()
    }
}

/// Shape summary returned by [`Disk::classify`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub balanced: bool,
    pub trivial: bool,
    pub corners: Vec<Square>,
    pub s_sw: Square,
}

impl Disk {
    /// Validates and builds a disk from a list of squares.
    pub fn from_squares<I: IntoIterator<Item = Square>>(squares: I) -> Result<Disk, GridError> {
        let mut squares: Vec<Square> = squares.into_iter().collect();
        squares.sort();
        for w in squares.windows(2) {
            if w[0] == w[1] {
                return Err(GridError::DuplicateSquare(w[0].x, w[0].y));
            }
        }
        if squares.is_empty() {
            return Err(GridError::EmptyInput);
        }
        if squares.len() > MAX_SQUARES {
            return Err(GridError::TooLarge(squares.len()));
        }
        let disk = Self::build_unchecked(squares);
        if !disk.is_connected(disk.full()) {
            return Err(GridError::NotConnected);
        }
        if !disk.is_simply_connected(disk.full()) {
            return Err(GridError::NotSimplyConnected);
        }
        Ok(disk)
    }

    fn build_unchecked(squares: Vec<Square>) -> Disk {
        let index: FxHashMap<Square, usize> =
            squares.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let nbrs = squares
            .iter()
            .map(|s| {
                let mut out = [None; 4];
                for d in Dir::ALL {
                    let (dx, dy) = d.offset();
                    out[d as usize] = index.get(&Square::new(s.x + dx, s.y + dy)).copied();
                }
                out
            })
            .collect();
        let white = SquareSet::from_indices(
            squares.iter().enumerate().filter(|(_, s)| s.is_white()).map(|(i, _)| i),
        );
        Disk { squares, index, nbrs, white }
    }

    /// An axis-aligned `width × height` rectangle with its south-west corner at the origin.
    pub fn rectangle(width: i32, height: i32) -> Result<Disk, GridError> {
        let sq = (0..width).flat_map(|x| (0..height).map(move |y| Square::new(x, y)));
        Disk::from_squares(sq)
    }

    pub fn len(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    pub fn squares(&self) -> &[Square] {
        &self.squares
    }

    pub fn square(&self, i: usize) -> Square {
        self.squares[i]
    }

    pub fn index_of(&self, s: Square) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn neighbor(&self, i: usize, d: Dir) -> Option<usize> {
        self.nbrs[i][d as usize]
    }

    /// Neighbors of square `i` in east, north, west, south order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.nbrs[i].iter().flatten().copied()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.nbrs[i].iter().flatten().count()
    }

    pub fn neighbor_set(&self, i: usize) -> SquareSet {
        SquareSet::from_indices(self.neighbors(i))
    }

    pub fn are_adjacent(&self, i: usize, j: usize) -> bool {
        self.nbrs[i].contains(&Some(j))
    }

    pub fn full(&self) -> SquareSet {
        if self.squares.len() == 64 {
            SquareSet(u64::MAX)
        } else {
            SquareSet((1u64 << self.squares.len()) - 1)
        }
    }

    pub fn white(&self) -> SquareSet {
        self.white
    }

    pub fn is_white(&self, i: usize) -> bool {
        self.white.contains(i)
    }

    /// `#white − #black` over a set of squares.
    pub fn color_excess(&self, set: SquareSet) -> i64 {
        let w = set.intersection(self.white).len() as i64;
        w - (set.len() as i64 - w)
    }

    pub fn is_balanced_set(&self, set: SquareSet) -> bool {
        self.color_excess(set) == 0
    }

    pub fn is_balanced(&self) -> bool {
        self.is_balanced_set(self.full())
    }

    /// Image of a set under a unit step; squares whose neighbor lies outside
    /// the disk are dropped.
    pub fn shift(&self, set: SquareSet, d: Dir) -> SquareSet {
        let mut out = SquareSet::EMPTY;
        for i in set {
            if let Some(j) = self.nbrs[i][d as usize] {
                out.insert(j);
            }
        }
        out
    }

    /// Builds the domino on two squares, if they are adjacent squares of this disk.
    pub fn domino(&self, s: Square, t: Square) -> Option<Domino> {
        let (i, j) = (self.index_of(s)?, self.index_of(t)?);
        self.are_adjacent(i, j).then(|| Domino::new(i, j))
    }

    pub fn domino_squares(&self, d: Domino) -> (Square, Square) {
        (self.squares[d.a], self.squares[d.b])
    }

    /// True for dominoes parallel to the x axis.
    pub fn is_x_domino(&self, d: Domino) -> bool {
        self.squares[d.a].y == self.squares[d.b].y
    }

    /// All planar dominoes of the disk in canonical order.
    pub fn dominoes(&self) -> Vec<Domino> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for d in [Dir::East, Dir::North] {
                if let Some(j) = self.neighbor(i, d) {
                    out.push(Domino::new(i, j));
                }
            }
        }
        out.sort();
        out
    }

    /// Edge connectivity of a subset; the empty set counts as connected.
    pub fn is_connected(&self, set: SquareSet) -> bool {
        let Some(start) = set.first() else {
            return true;
        };
        let mut seen = SquareSet::single(start);
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for j in self.neighbors(i) {
                if set.contains(j) && !seen.contains(j) {
                    seen.insert(j);
                    stack.push(j);
                }
            }
        }
        seen == set
    }

    /// True when the complement of `set` has no bounded component (4-adjacency
    /// flood fill inside a one-cell padded bounding box).
    pub fn is_simply_connected(&self, set: SquareSet) -> bool {
        if set.is_empty() {
            return true;
        }
        let pts: Vec<Square> = set.iter().map(|i| self.squares[i]).collect();
        let minx = pts.iter().map(|s| s.x).min().unwrap() - 1;
        let maxx = pts.iter().map(|s| s.x).max().unwrap() + 1;
        let miny = pts.iter().map(|s| s.y).min().unwrap() - 1;
        let maxy = pts.iter().map(|s| s.y).max().unwrap() + 1;
        let w = (maxx - minx + 1) as usize;
        let h = (maxy - miny + 1) as usize;
        let mut occupied = vec![false; w * h];
        for s in &pts {
            occupied[(s.y - miny) as usize * w + (s.x - minx) as usize] = true;
        }
        let mut seen = vec![false; w * h];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(c) = queue.pop_front() {
            let (cx, cy) = (c % w, c / w);
            let mut push = |nx: usize, ny: usize| {
                let n = ny * w + nx;
                if !occupied[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            };
            if cx + 1 < w {
                push(cx + 1, cy);
            }
            if cx > 0 {
                push(cx - 1, cy);
            }
            if cy + 1 < h {
                push(cx, cy + 1);
            }
            if cy > 0 {
                push(cx, cy - 1);
            }
        }
        (0..w * h).all(|c| occupied[c] || seen[c])
    }

    /// Connected and simply connected, and nonempty.
    pub fn is_disk_region(&self, set: SquareSet) -> bool {
        !set.is_empty() && self.is_connected(set) && self.is_simply_connected(set)
    }

    /// The southwesternmost square: minimal `y`, then minimal `x`.
    pub fn s_sw(&self) -> usize {
        (0..self.len())
            .min_by_key(|&i| (self.squares[i].y, self.squares[i].x))
            .expect("disk is nonempty")
    }

    pub fn is_trivial(&self) -> bool {
        let is_2x2 = self.len() == 4 && {
            let s = &self.squares;
            let (x0, y0) = (s[0].x, s[0].y);
            s.iter().all(|q| (q.x - x0) <= 1 && (q.y - y0) <= 1 && q.x >= x0 && q.y >= y0)
        };
        is_2x2 || (0..self.len()).all(|i| self.degree(i) <= 2)
    }

    pub fn classify(&self) -> Classification {
        Classification {
            balanced: self.is_balanced(),
            trivial: self.is_trivial(),
            corners: (0..self.len())
                .filter(|&i| self.degree(i) <= 2)
                .map(|i| self.squares[i])
                .collect(),
            s_sw: self.squares[self.s_sw()],
        }
    }

    /// Dominoes whose removal disconnects the disk.
    pub fn bottlenecks(&self) -> Vec<Domino> {
        let full = self.full();
        self.dominoes()
            .into_iter()
            .filter(|d| !self.is_connected(full.difference(d.squares())))
            .collect()
    }

    pub fn is_bottleneck(&self, d: Domino) -> bool {
        !self.is_connected(self.full().difference(d.squares()))
    }

    /// ASCII form: `#` for squares, `.` for absences, top row first. The grid
    /// starts at the origin when all coordinates are nonnegative.
    pub fn to_ascii(&self) -> String {
        let minx = self.squares.iter().map(|s| s.x).min().unwrap().min(0);
        let miny = self.squares.iter().map(|s| s.y).min().unwrap().min(0);
        let maxx = self.squares.iter().map(|s| s.x).max().unwrap();
        let maxy = self.squares.iter().map(|s| s.y).max().unwrap();
        let mut out = String::new();
        for y in (miny..=maxy).rev() {
            for x in minx..=maxx {
                out.push(if self.index.contains_key(&Square::new(x, y)) { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the ASCII disk format: `#` marks a square, `.` an absence; row `r`
/// and column `c` map to the square `(c, rows − 1 − r)`.
pub fn parse_disk(text: &str) -> Result<Disk, GridError> {
    parse_annotated_disk(text).map(|(d, _)| d)
}

/// Like [`parse_disk`] but also accepts digits `0`–`9` as squares, returning the
/// digit of every square (`#` counts as part 0). Used to annotate a disk with
/// a decomposition into parts.
pub fn parse_annotated_disk(text: &str) -> Result<(Disk, Vec<u8>), GridError> {
    let rows: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end())
        .filter(|l| !l.is_empty())
        .collect();
    let n = rows.len() as i32;
    let mut cells = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        for (c, ch) in row.chars().enumerate() {
            let part = match ch {
                '#' => 0,
                '0'..='9' => ch as u8 - b'0',
                '.' | ' ' => continue,
                _ => return Err(GridError::BadCharacter(ch, r, c)),
            };
            cells.push((Square::new(c as i32, n - 1 - r as i32), part));
        }
    }
    let disk = Disk::from_squares(cells.iter().map(|&(s, _)| s))?;
    let mut parts = vec![0u8; disk.len()];
    for (s, p) in cells {
        parts[disk.index_of(s).unwrap()] = p;
    }
    Ok((disk, parts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn connected_oracle(disk: &Disk, set: SquareSet) -> bool {
        // flood fill over coordinates, independent of the neighbor table
        let pts: Vec<Square> = set.iter().map(|i| disk.square(i)).collect();
        if pts.is_empty() {
            return true;
        }
        let mut seen = vec![pts[0]];
        let mut changed = true;
        while changed {
            changed = false;
            for p in &pts {
                if !seen.contains(p) && seen.iter().any(|q| q.is_adjacent(*p)) {
                    seen.push(*p);
                    changed = true;
                }
            }
        }
        seen.len() == pts.len()
    }

    #[test]
    fn parse_square_grids() {
        let d = parse_disk("####\n####\n####\n####").unwrap();
        assert_eq!(d.len(), 16);
        assert!(d.is_balanced());
        let d = parse_disk("##\n##").unwrap();
        assert_eq!(d.len(), 4);
        assert!(d.is_balanced());
        assert_eq!(d.square(0), Square::new(0, 0));
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_disk("#.\n.#").unwrap_err(), GridError::NotConnected);
        assert_eq!(parse_disk("...\n...").unwrap_err(), GridError::EmptyInput);
        assert_eq!(parse_disk("###\n#.#\n###").unwrap_err(), GridError::NotSimplyConnected);
        assert!(matches!(parse_disk("#x"), Err(GridError::BadCharacter('x', 0, 1))));
    }

    #[test]
    fn diagonal_pinch_is_a_hole() {
        // (1,1) is enclosed: its four neighbors are squares
        let text = ".#.\n#.#\n.#.";
        assert!(parse_disk(text).is_err());
        let ring = "##.\n#.#\n###";
        assert_eq!(parse_disk(ring).unwrap_err(), GridError::NotSimplyConnected);
    }

    #[test]
    fn classify_examples() {
        let c = Disk::rectangle(2, 2).unwrap().classify();
        assert!(c.trivial && c.balanced);
        let c = Disk::rectangle(3, 4).unwrap().classify();
        assert!(!c.trivial);
        assert_eq!(c.s_sw, Square::new(0, 0));
        assert_eq!(c.corners.len(), 4);
        let c = Disk::rectangle(1, 6).unwrap().classify();
        assert!(c.trivial);
    }

    #[test]
    fn s_sw_is_a_corner() {
        for text in [".##\n###\n##.", "#...\n####\n.##.", "..#\n###\n#.."] {
            let d = parse_disk(text).unwrap();
            let c = d.classify();
            assert!(c.corners.contains(&c.s_sw), "{text}");
        }
    }

    #[test]
    fn bottleneck_examples() {
        assert!(Disk::rectangle(3, 4).unwrap().bottlenecks().is_empty());
        assert!(Disk::rectangle(2, 2).unwrap().bottlenecks().is_empty());
        // D0 = [0,3]x[0,4] with D1 = [3,5]x[1,3] attached
        let d = parse_disk("###..\n#####\n#####\n###..").unwrap();
        let b = d.domino(Square::new(3, 1), Square::new(3, 2)).unwrap();
        let found = d.bottlenecks();
        assert!(found.contains(&b));
        for dom in d.dominoes() {
            let rest = d.full().difference(dom.squares());
            assert_eq!(found.contains(&dom), !connected_oracle(&d, rest));
        }
    }

    #[test]
    fn ascii_round_trip_keeps_origin() {
        let text = "..#\n.##\n##.\n";
        let d = parse_disk(text).unwrap();
        assert_eq!(d.to_ascii(), text);
        assert_eq!(parse_disk(&d.to_ascii()).unwrap(), d);
    }

    #[test]
    fn annotation_parts() {
        let (d, parts) = parse_annotated_disk("000..\n00011\n00011\n000..").unwrap();
        assert_eq!(d.len(), 16);
        assert_eq!(parts.iter().filter(|&&p| p == 1).count(), 4);
    }
}
