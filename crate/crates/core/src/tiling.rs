//! Floors, plugs and tilings of corks `D × [0, N]` with plug-shaped notches
//! at the bottom and top. A cylinder is a cork whose two boundary plugs are
//! empty.

use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

use crate::grid::{Dir, Disk, Domino, SquareSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TilingError {
    #[error("floor {0}: up plug does not match the down plug of floor {}", .0 + 1)]
    PlugMismatch(usize),
    #[error("floor {0}: pieces overlap")]
    Overlap(usize),
    #[error("floor {0}: square {1} is not covered")]
    UncoveredSquare(usize, usize),
    #[error("floor {0}: boundary plug is not balanced")]
    UnbalancedPlug(usize),
    #[error("floor {0}: domino is not a pair of adjacent disk squares")]
    BadDomino(usize),
    #[error("tilings live on different disks")]
    DiskMismatch,
    #[error("height must be even, got {0}")]
    OddHeight(usize),
    #[error("plug is not balanced")]
    Unbalanced,
}

/// One unit-height slab `(down, horizontal dominoes, up)`. Horizontal
/// dominoes are stored by their west halves (`east`) and south halves
/// (`north`); a square in `up` is the lower half of a vertical domino that
/// continues into the next floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Floor {
    pub down: SquareSet,
    pub up: SquareSet,
    pub east: SquareSet,
    pub north: SquareSet,
}

impl Floor {
    /// Builds a floor from its horizontal dominoes, checking the exact cover.
    pub fn new(disk: &Disk, down: SquareSet, horiz: &[Domino], up: SquareSet) -> Result<Floor, TilingError> {
        let mut f = Floor { down, up, east: SquareSet::EMPTY, north: SquareSet::EMPTY };
        for &d in horiz {
            if d.b >= disk.len() || !disk.are_adjacent(d.a, d.b) {
                return Err(TilingError::BadDomino(0));
            }
            if disk.is_x_domino(d) {
                f.east.insert(d.a);
            } else {
                f.north.insert(d.a);
            }
        }
        f.check(disk, 0)?;
        if f.horiz_count() != horiz.len() {
            return Err(TilingError::Overlap(0));
        }
        Ok(f)
    }

    /// The floor `(p, ∅, D ∖ p)` made only of vertical dominoes.
    pub fn vertical(disk: &Disk, p: SquareSet) -> Floor {
        Floor { down: p, up: disk.full().difference(p), east: SquareSet::EMPTY, north: SquareSet::EMPTY }
    }

    /// `(p₂, f*, p₁)` for `(p₁, f*, p₂)`.
    pub fn inverse(self) -> Floor {
        Floor { down: self.up, up: self.down, ..self }
    }

    pub fn horiz_count(&self) -> usize {
        self.east.len() + self.north.len()
    }

    /// Horizontal dominoes in canonical order.
    pub fn horiz(&self, disk: &Disk) -> Vec<Domino> {
        let mut out: Vec<Domino> = self
            .east
            .iter()
            .map(|s| Domino::new(s, disk.neighbor(s, Dir::East).expect("x-domino inside disk")))
            .chain(
                self.north
                    .iter()
                    .map(|s| Domino::new(s, disk.neighbor(s, Dir::North).expect("y-domino inside disk"))),
            )
            .collect();
        out.sort();
        out
    }

    /// Squares covered by horizontal dominoes.
    pub fn horiz_squares(&self, disk: &Disk) -> SquareSet {
        self.east
            .union(disk.shift(self.east, Dir::East))
            .union(self.north)
            .union(disk.shift(self.north, Dir::North))
    }

    /// Exact-cover check of one floor. `index` is only used in errors.
    pub fn check(&self, disk: &Disk, index: usize) -> Result<(), TilingError> {
        let full = disk.full();
        let parts = [
            self.down,
            self.up,
            self.east,
            disk.shift(self.east, Dir::East),
            self.north,
            disk.shift(self.north, Dir::North),
        ];
        if !self.east.is_subset(full)
            || !self.north.is_subset(full)
            || disk.shift(self.east, Dir::East).len() != self.east.len()
            || disk.shift(self.north, Dir::North).len() != self.north.len()
        {
            return Err(TilingError::BadDomino(index));
        }
        let mut seen = SquareSet::EMPTY;
        for p in parts {
            if !p.is_subset(full) {
                return Err(TilingError::BadDomino(index));
            }
            if !seen.is_disjoint(p) {
                return Err(TilingError::Overlap(index));
            }
            seen = seen.union(p);
        }
        if let Some(s) = full.difference(seen).first() {
            return Err(TilingError::UncoveredSquare(index, s));
        }
        Ok(())
    }
}

/// A tiling of a cork over a disk, as a sequence of floors. Floor `i`
/// occupies `D × [i, i+1]`. `bottom` is kept explicitly so that height-zero
/// tilings still know their plug.
#[derive(Debug, Clone)]
pub struct Tiling {
    disk: Arc<Disk>,
    bottom: SquareSet,
    floors: Vec<Floor>,
}

impl PartialEq for Tiling {
    fn eq(&self, other: &Self) -> bool {
        self.bottom == other.bottom && self.floors == other.floors && self.disk == other.disk
    }
}

impl Eq for Tiling {}

impl Hash for Tiling {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bottom.hash(state);
        self.floors.hash(state);
    }
}

impl Tiling {
    /// Builds and validates a tiling.
    pub fn new(disk: Arc<Disk>, floors: Vec<Floor>) -> Result<Tiling, TilingError> {
        let bottom = floors.first().map(|f| f.down).unwrap_or(SquareSet::EMPTY);
        let t = Tiling { disk, bottom, floors };
        t.validate()?;
        Ok(t)
    }

    /// Builds without validation; callers guarantee the invariants.
    pub fn from_floors_unchecked(disk: Arc<Disk>, floors: Vec<Floor>) -> Tiling {
        let bottom = floors.first().map(|f| f.down).unwrap_or(SquareSet::EMPTY);
        Tiling { disk, bottom, floors }
    }

    /// The height-zero tiling of the cork `R_{0,0;p,p}`.
    pub fn empty(disk: Arc<Disk>, plug: SquareSet) -> Tiling {
        Tiling { disk, bottom: plug, floors: Vec::new() }
    }

    pub fn disk(&self) -> &Disk {
        &self.disk
    }

    pub fn disk_arc(&self) -> &Arc<Disk> {
        &self.disk
    }

    pub fn floors(&self) -> &[Floor] {
        &self.floors
    }

    pub fn height(&self) -> usize {
        self.floors.len()
    }

    pub fn bottom(&self) -> SquareSet {
        self.bottom
    }

    pub fn top(&self) -> SquareSet {
        self.floors.last().map(|f| f.up).unwrap_or(self.bottom)
    }

    pub fn is_cylinder(&self) -> bool {
        self.bottom.is_empty() && self.top().is_empty()
    }

    /// Checks every floor and interface. Boundary plugs must be balanced;
    /// interior interfaces are then balanced automatically on balanced disks.
    pub fn validate(&self) -> Result<(), TilingError> {
        let disk = &*self.disk;
        if !disk.is_balanced_set(self.bottom) {
            return Err(TilingError::UnbalancedPlug(0));
        }
        let mut below = self.bottom;
        for (i, f) in self.floors.iter().enumerate() {
            if f.down != below {
                return Err(TilingError::PlugMismatch(i.saturating_sub(1)));
            }
            f.check(disk, i)?;
            below = f.up;
        }
        if !disk.is_balanced_set(below) {
            return Err(TilingError::UnbalancedPlug(self.floors.len().saturating_sub(1)));
        }
        Ok(())
    }

    /// `t₁ * t₂`: `t₂` translated on top of `t₁`.
    pub fn concat(&self, other: &Tiling) -> Result<Tiling, TilingError> {
        if self.disk != other.disk {
            return Err(TilingError::DiskMismatch);
        }
        if self.top() != other.bottom {
            return Err(TilingError::PlugMismatch(self.height().saturating_sub(1)));
        }
        let mut floors = self.floors.clone();
        floors.extend_from_slice(&other.floors);
        Ok(Tiling { disk: self.disk.clone(), bottom: self.bottom, floors })
    }

    /// Concatenates a sequence of tilings; `base` is returned for an empty list.
    pub fn concat_all<'a, I>(base: Tiling, parts: I) -> Result<Tiling, TilingError>
    where
        I: IntoIterator<Item = &'a Tiling>,
    {
        let mut acc = base;
        for p in parts {
            acc = acc.concat(p)?;
        }
        Ok(acc)
    }

    /// Reflection in the `xy` plane.
    pub fn inverse(&self) -> Tiling {
        let floors: Vec<Floor> = self.floors.iter().rev().map(|f| f.inverse()).collect();
        Tiling { disk: self.disk.clone(), bottom: self.top(), floors }
    }

    /// `t_vert` of height `k` with both boundary plugs equal to `p`.
    pub fn vertical(disk: Arc<Disk>, p: SquareSet, k: usize) -> Result<Tiling, TilingError> {
        if k % 2 == 1 {
            return Err(TilingError::OddHeight(k));
        }
        if !disk.is_balanced_set(p) {
            return Err(TilingError::Unbalanced);
        }
        let mut floors = Vec::with_capacity(k);
        let mut cur = p;
        for _ in 0..k {
            let f = Floor::vertical(&disk, cur);
            cur = f.up;
            floors.push(f);
        }
        Ok(Tiling { disk, bottom: p, floors })
    }

    /// `t * t_vert,M` for a tiling whose top plug is `p` (vertical padding on top).
    pub fn pad(&self, m: usize) -> Result<Tiling, TilingError> {
        let v = Tiling::vertical(self.disk.clone(), self.top(), m)?;
        self.concat(&v)
    }

    /// All horizontal dominoes with their floor index.
    pub fn horizontal_dominoes(&self) -> Vec<(usize, Domino)> {
        let mut out = Vec::new();
        for (i, f) in self.floors.iter().enumerate() {
            out.extend(f.horiz(&self.disk).into_iter().map(|d| (i, d)));
        }
        out
    }

    /// Every domino as a pair of unit cubes `(x, y, z)`, with the vertical
    /// dominoes of the boundary notches excluded.
    pub fn dominoes_3d(&self) -> Vec<[(i32, i32, i32); 2]> {
        let disk = &*self.disk;
        let mut out = Vec::new();
        for (i, f) in self.floors.iter().enumerate() {
            let z = i as i32;
            for d in f.horiz(disk) {
                let (a, b) = disk.domino_squares(d);
                out.push([(a.x, a.y, z), (b.x, b.y, z)]);
            }
            if i + 1 < self.floors.len() {
                for s in f.up {
                    let q = disk.square(s);
                    out.push([(q.x, q.y, z), (q.x, q.y, z + 1)]);
                }
            }
        }
        out
    }

    /// Canonical key: three bit fields `(up, east, north)` per floor plus the
    /// bottom plug, packed densely into 64-bit words.
    pub fn key(&self) -> TilingKey {
        let n = self.disk.len();
        let mut w = BitWriter::with_capacity((3 * n * self.floors.len() + n).div_ceil(64));
        w.push(self.bottom.0, n);
        for f in &self.floors {
            w.push(f.up.0, n);
            w.push(f.east.0, n);
            w.push(f.north.0, n);
        }
        TilingKey(w.finish())
    }

    /// Inverse of [`Tiling::key`].
    pub fn from_key(disk: Arc<Disk>, key: &TilingKey, height: usize) -> Tiling {
        let n = disk.len();
        let mut r = BitReader::new(&key.0);
        let bottom = SquareSet(r.take(n));
        let mut floors = Vec::with_capacity(height);
        let mut down = bottom;
        for _ in 0..height {
            let up = SquareSet(r.take(n));
            let east = SquareSet(r.take(n));
            let north = SquareSet(r.take(n));
            floors.push(Floor { down, up, east, north });
            down = up;
        }
        Tiling { disk, bottom, floors }
    }

}

/// Packed canonical encoding of a tiling, used for hashing and dedup.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TilingKey(pub Box<[u64]>);

struct BitWriter {
    words: Vec<u64>,
    used: usize,
}

impl BitWriter {
    fn with_capacity(words: usize) -> Self {
        BitWriter { words: Vec::with_capacity(words.max(1)), used: 64 }
    }

    fn push(&mut self, value: u64, bits: usize) {
        if bits == 0 {
            return;
        }
        if self.used == 64 {
            self.words.push(0);
            self.used = 0;
        }
        let free = 64 - self.used;
        let last = self.words.len() - 1;
        self.words[last] |= value << self.used;
        if bits <= free {
            self.used += bits;
        } else {
            self.words.push(value >> free);
            self.used = bits - free;
        }
    }

    fn finish(self) -> Box<[u64]> {
        self.words.into_boxed_slice()
    }
}

struct BitReader<'a> {
    words: &'a [u64],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(words: &'a [u64]) -> Self {
        BitReader { words, pos: 0 }
    }

    fn take(&mut self, bits: usize) -> u64 {
        if bits == 0 {
            return 0;
        }
        let (w, off) = (self.pos / 64, self.pos % 64);
        let mut v = self.words[w] >> off;
        if off + bits > 64 {
            v |= self.words[w + 1] << (64 - off);
        }
        self.pos += bits;
        if bits == 64 {
            v
        } else {
            v & ((1u64 << bits) - 1)
        }
    }
}
