//! Text formats: tiling, cycle and word JSON, the per-floor ASCII picture
//! and an SVG drawing of the same picture.
//!
//! JSON uses square coordinates `[x, y]` rather than indices, so files do not
//! depend on the internal square order.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{GeneratorSymbol, GeneratorWord};
use crate::grid::{Dir, Disk, Domino, GridError, Square, SquareSet};
use crate::hamilton::{HamiltonCycle, HamiltonError};
use crate::tiling::{Floor, Tiling, TilingError};
use crate::twist::FluxTriple;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid tiling: {0}")]
    InvalidTiling(#[from] TilingError),
    #[error(transparent)]
    Hamilton(#[from] HamiltonError),
    #[error("square ({0}, {1}) is not in the disk")]
    UnknownSquare(i32, i32),
    #[error("({0}, {1}) and ({2}, {3}) are not adjacent")]
    NotADomino(i32, i32, i32, i32),
    #[error("ascii picture: {0}")]
    Ascii(String),
}

pub type Point = [i32; 2];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FloorJson {
    pub down: Vec<Point>,
    pub horiz: Vec<[Point; 2]>,
    pub up: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingJson {
    pub disk: Vec<Point>,
    pub floors: Vec<FloorJson>,
    /// Only needed for height-zero corks.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bottom: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolJson {
    pub d: [Point; 2],
    pub flux: [i64; 3],
    pub exp: i8,
}

fn point(disk: &Disk, i: usize) -> Point {
    let s = disk.square(i);
    [s.x, s.y]
}

fn index(disk: &Disk, p: Point) -> Result<usize, IoError> {
    disk.index_of(Square::new(p[0], p[1])).ok_or(IoError::UnknownSquare(p[0], p[1]))
}

fn points(disk: &Disk, set: SquareSet) -> Vec<Point> {
    set.iter().map(|i| point(disk, i)).collect()
}

fn set(disk: &Disk, ps: &[Point]) -> Result<SquareSet, IoError> {
    let mut s = SquareSet::EMPTY;
    for &p in ps {
        s.insert(index(disk, p)?);
    }
    Ok(s)
}

fn domino_points(disk: &Disk, d: Domino) -> [Point; 2] {
    [point(disk, d.a), point(disk, d.b)]
}

fn domino(disk: &Disk, d: [Point; 2]) -> Result<Domino, IoError> {
    let (a, b) = (index(disk, d[0])?, index(disk, d[1])?);
    if !disk.are_adjacent(a, b) {
        return Err(IoError::NotADomino(d[0][0], d[0][1], d[1][0], d[1][1]));
    }
    Ok(Domino::new(a, b))
}

pub fn disk_points(disk: &Disk) -> Vec<Point> {
    disk.squares().iter().map(|s| [s.x, s.y]).collect()
}

pub fn disk_from_points(ps: &[Point]) -> Result<Disk, IoError> {
    Ok(Disk::from_squares(ps.iter().map(|p| Square::new(p[0], p[1])))?)
}

pub fn tiling_to_json(t: &Tiling) -> TilingJson {
    let disk = t.disk();
    TilingJson {
        disk: disk_points(disk),
        floors: t
            .floors()
            .iter()
            .map(|f| FloorJson {
                down: points(disk, f.down),
                horiz: f.horiz(disk).into_iter().map(|d| domino_points(disk, d)).collect(),
                up: points(disk, f.up),
            })
            .collect(),
        bottom: if t.height() == 0 { points(disk, t.bottom()) } else { Vec::new() },
    }
}

/// Rebuilds and validates a tiling. When `disk` is given the file must
/// describe the same disk and the returned tiling shares it.
pub fn tiling_from_json(j: &TilingJson, disk: Option<Arc<Disk>>) -> Result<Tiling, IoError> {
    let own = Arc::new(disk_from_points(&j.disk)?);
    let disk = match disk {
        Some(d) if *d == *own => d,
        Some(_) => return Err(IoError::InvalidTiling(TilingError::DiskMismatch)),
        None => own,
    };
    if j.floors.is_empty() {
        return Ok(Tiling::empty(disk.clone(), set(&disk, &j.bottom)?));
    }
    let mut floors = Vec::with_capacity(j.floors.len());
    for (k, f) in j.floors.iter().enumerate() {
        let horiz = f.horiz.iter().map(|&d| domino(&disk, d)).collect::<Result<Vec<_>, _>>()?;
        let floor = Floor::new(&disk, set(&disk, &f.down)?, &horiz, set(&disk, &f.up)?).map_err(|e| match e {
            TilingError::Overlap(_) => TilingError::Overlap(k),
            TilingError::BadDomino(_) => TilingError::BadDomino(k),
            TilingError::UncoveredSquare(_, s) => TilingError::UncoveredSquare(k, s),
            e => e,
        })?;
        floors.push(floor);
    }
    Ok(Tiling::new(disk, floors)?)
}

pub fn tiling_to_string(t: &Tiling) -> String {
    serde_json::to_string(&tiling_to_json(t)).expect("plain data serializes")
}

pub fn tiling_from_str(s: &str, disk: Option<Arc<Disk>>) -> Result<Tiling, IoError> {
    tiling_from_json(&serde_json::from_str(s)?, disk)
}

pub fn cycle_to_json(disk: &Disk, gamma: &HamiltonCycle) -> Vec<Point> {
    gamma.order().iter().map(|&i| point(disk, i)).collect()
}

/// Reads a square sequence; it is taken as a cycle when its ends are
/// adjacent.
pub fn cycle_from_json(disk: &Disk, ps: &[Point]) -> Result<HamiltonCycle, IoError> {
    let order = ps.iter().map(|&p| index(disk, p)).collect::<Result<Vec<_>, _>>()?;
    let closed = order.len() > 2 && disk.are_adjacent(order[0], order[order.len() - 1]);
    Ok(HamiltonCycle::new(disk, order, closed)?)
}

pub fn symbol_to_json(disk: &Disk, s: &GeneratorSymbol) -> SymbolJson {
    SymbolJson { d: domino_points(disk, s.d), flux: s.flux.into(), exp: s.exp }
}

pub fn word_to_json(disk: &Disk, w: &GeneratorWord) -> Vec<SymbolJson> {
    w.0.iter().map(|s| symbol_to_json(disk, s)).collect()
}

pub fn word_from_json(disk: &Disk, js: &[SymbolJson]) -> Result<GeneratorWord, IoError> {
    let mut out = Vec::with_capacity(js.len());
    for s in js {
        if s.exp != 1 && s.exp != -1 {
            return Err(IoError::Ascii(format!("exponent {} is not ±1", s.exp)));
        }
        out.push(GeneratorSymbol { d: domino(disk, s.d)?, flux: FluxTriple::from(s.flux), exp: s.exp });
    }
    Ok(GeneratorWord(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    Ascii,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderSpec {
    pub mode: RenderMode,
    pub floors_per_row: usize,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec { mode: RenderMode::Ascii, floors_per_row: 8 }
    }
}

pub fn render(t: &Tiling, spec: RenderSpec) -> String {
    match spec.mode {
        RenderMode::Ascii => render_ascii(t, spec.floors_per_row),
        RenderMode::Svg => render_svg(t, spec.floors_per_row),
    }
}

struct Frame {
    minx: i32,
    miny: i32,
    w: usize,
    h: usize,
}

fn frame(disk: &Disk) -> Frame {
    let minx = disk.squares().iter().map(|s| s.x).min().unwrap_or(0).min(0);
    let miny = disk.squares().iter().map(|s| s.y).min().unwrap_or(0).min(0);
    let maxx = disk.squares().iter().map(|s| s.x).max().unwrap_or(0);
    let maxy = disk.squares().iter().map(|s| s.y).max().unwrap_or(0);
    Frame { minx, miny, w: (maxx - minx + 1) as usize, h: (maxy - miny + 1) as usize }
}

fn floor_chars(disk: &Disk, f: &Floor) -> Vec<char> {
    let e = disk.shift(f.east, Dir::East);
    let n = disk.shift(f.north, Dir::North);
    (0..disk.len())
        .map(|s| {
            if f.up.contains(s) {
                'U'
            } else if f.down.contains(s) {
                'D'
            } else if f.east.contains(s) {
                'L'
            } else if e.contains(s) {
                'R'
            } else if f.north.contains(s) {
                'B'
            } else if n.contains(s) {
                'T'
            } else {
                '?'
            }
        })
        .collect()
}

/// One character per square, top row first; floors sit side by side
/// separated by a space, bottom floor first, and wrap after
/// `floors_per_row` floors with a blank line between blocks.
pub fn render_ascii(t: &Tiling, floors_per_row: usize) -> String {
    let disk = t.disk();
    let fr = frame(disk);
    let pics: Vec<Vec<char>> = t.floors().iter().map(|f| floor_chars(disk, f)).collect();
    let mut out = String::new();
    for (b, block) in pics.chunks(floors_per_row.max(1)).enumerate() {
        if b > 0 {
            out.push('\n');
        }
        for r in 0..fr.h {
            let y = fr.miny + (fr.h - 1 - r) as i32;
            let row: Vec<String> = block
                .iter()
                .map(|pic| {
                    (0..fr.w)
                        .map(|c| match disk.index_of(Square::new(fr.minx + c as i32, y)) {
                            Some(i) => pic[i],
                            None => '.',
                        })
                        .collect()
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

/// Inverse of [`render_ascii`]. Squares are read off the first floor with
/// the same coordinates as the disk text format.
pub fn parse_ascii(text: &str) -> Result<Tiling, IoError> {
    let mut grids: Vec<Vec<Vec<char>>> = Vec::new();
    let mut block: Vec<Vec<&str>> = Vec::new();
    let flush = |block: &mut Vec<Vec<&str>>, grids: &mut Vec<Vec<Vec<char>>>| -> Result<(), IoError> {
        if block.is_empty() {
            return Ok(());
        }
        let k = block[0].len();
        if block.iter().any(|r| r.len() != k) {
            return Err(IoError::Ascii("rows hold different numbers of floors".into()));
        }
        for f in 0..k {
            grids.push(block.iter().map(|r| r[f].chars().collect()).collect());
        }
        block.clear();
        Ok(())
    };
    for line in text.lines() {
        if line.trim().is_empty() {
            flush(&mut block, &mut grids)?;
        } else {
            block.push(line.split_whitespace().collect());
        }
    }
    flush(&mut block, &mut grids)?;
    let first = grids.first().ok_or_else(|| IoError::Ascii("no floors".into()))?;
    let h = first.len();
    let w = first[0].len();
    if grids.iter().any(|g| g.len() != h || g.iter().any(|r| r.len() != w)) {
        return Err(IoError::Ascii("floors have different shapes".into()));
    }
    let at = |r: usize, c: usize| Square::new(c as i32, (h - 1 - r) as i32);
    let mut sq = Vec::new();
    for (r, row) in first.iter().enumerate() {
        for (c, &ch) in row.iter().enumerate() {
            if ch != '.' {
                sq.push(at(r, c));
            }
        }
    }
    let disk = Arc::new(Disk::from_squares(sq)?);
    let mut floors = Vec::with_capacity(grids.len());
    for (k, g) in grids.iter().enumerate() {
        let mut f = Floor { down: SquareSet::EMPTY, up: SquareSet::EMPTY, east: SquareSet::EMPTY, north: SquareSet::EMPTY };
        for (r, row) in g.iter().enumerate() {
            for (c, &ch) in row.iter().enumerate() {
                let i = disk.index_of(at(r, c));
                let i = match (i, ch) {
                    (None, '.') => continue,
                    (Some(i), ch) if ch != '.' => i,
                    _ => return Err(IoError::Ascii(format!("floor {}: square shape differs at row {r}, column {c}", k + 1))),
                };
                match ch {
                    'U' => f.up.insert(i),
                    'D' => f.down.insert(i),
                    'L' => f.east.insert(i),
                    'B' => f.north.insert(i),
                    'R' | 'T' => {}
                    _ => return Err(IoError::Ascii(format!("floor {}: unexpected {ch:?}", k + 1))),
                }
            }
        }
        // halves must agree with their partners
        for (set, dir, partner) in [(f.east, Dir::East, 'R'), (f.north, Dir::North, 'T')] {
            for s in set.iter() {
                let ok = disk.neighbor(s, dir).is_some_and(|j| {
                    let q = disk.square(j);
                    g[h - 1 - q.y as usize][q.x as usize] == partner
                });
                if !ok {
                    return Err(IoError::Ascii(format!("floor {}: unmatched domino half", k + 1)));
                }
            }
        }
        f.check(&disk, k)?;
        floors.push(f);
    }
    Ok(Tiling::new(disk, floors)?)
}

const CELL: i32 = 24;
const GAP: i32 = 16;

/// SVG 1.1 drawing: one panel per floor in the ASCII layout, horizontal
/// dominoes as outlined rectangles, vertical halves as squares marked with a
/// dot (continues up) or a ring (continues down).
pub fn render_svg(t: &Tiling, floors_per_row: usize) -> String {
    let disk = t.disk();
    let fr = frame(disk);
    let per_row = floors_per_row.max(1);
    let nf = t.height().max(1);
    let cols = nf.min(per_row) as i32;
    let rows = nf.div_ceil(per_row) as i32;
    let (pw, ph) = (fr.w as i32 * CELL, fr.h as i32 * CELL);
    let width = GAP + cols * (pw + GAP);
    let height = GAP + rows * (ph + GAP + 12);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (k, f) in t.floors().iter().enumerate() {
        let ox = GAP + (k % per_row) as i32 * (pw + GAP);
        let oy = GAP + 12 + (k / per_row) as i32 * (ph + GAP + 12);
        let _ = writeln!(s, r#"<g transform="translate({ox},{oy})">"#);
        let _ = writeln!(s, r#"<text x="0" y="-4" font-family="monospace" font-size="10">z={k}</text>"#);
        let xy = |i: usize| {
            let q = disk.square(i);
            ((q.x - fr.minx) * CELL, (fr.h as i32 - 1 - (q.y - fr.miny)) * CELL)
        };
        for i in 0..disk.len() {
            let (x, y) = xy(i);
            let _ = writeln!(s, r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#eeeeee" stroke="#bbbbbb"/>"##);
        }
        for d in f.horiz(disk) {
            let (xa, ya) = xy(d.a);
            let (xb, yb) = xy(d.b);
            let (x, y) = (xa.min(xb) + 2, ya.min(yb) + 2);
            let (w, h) = ((xa - xb).abs() + CELL - 4, (ya - yb).abs() + CELL - 4);
            let fill = if disk.is_x_domino(d) { "#9ecae1" } else { "#fdae6b" };
            let _ = writeln!(s, r#"<rect x="{x}" y="{y}" width="{w}" height="{h}" rx="3" fill="{fill}" stroke="black"/>"#);
        }
        for (set, filled) in [(f.up, true), (f.down, false)] {
            for i in set.iter() {
                let (x, y) = xy(i);
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" rx="3" fill="{}" stroke="black"/>"#,
                    x + 2,
                    y + 2,
                    CELL - 4,
                    CELL - 4,
                    if filled { "#a1d99b" } else { "#c7e9c0" }
                );
                let (cx, cy) = (x + CELL / 2, y + CELL / 2);
                let fill = if filled { "black" } else { "none" };
                let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="4" fill="{fill}" stroke="black"/>"#);
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}
