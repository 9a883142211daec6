//! The twist of a tiling and the flux of a (domino, plug) pair along a
//! hamiltonian path.
//!
//! Cubes are colored white when `x + y + z` is even and every domino carries
//! the unit vector `v(d)` from its black cube to its white cube. For an upper
//! horizontal domino `d` and a lower horizontal domino `d'` whose projections
//! share a square, the pair contributes `det[v(d), v(d'), e_z]`; parallel
//! pairs contribute nothing. The twist is a quarter of the total.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Dir, Disk, Domino, SquareSet};
use crate::hamilton::HamiltonCycle;
use crate::tiling::Tiling;

/// Overall sign, chosen so that the reference generator on the 4×4 disk has
/// twist `+1`.
pub const TWIST_SIGN: i64 = 1;

/// The raw pair sum is divided by this.
pub const TWIST_DIVISOR: i64 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TwistError {
    #[error("pair sum {0} is not divisible by {TWIST_DIVISOR}")]
    NonIntegerResult(i64),
    #[error("plug meets the domino")]
    Incompatible,
    #[error("domino respects the path")]
    RespectsPath,
}

/// `v(d)` along its axis for the horizontal domino whose west or south cube
/// is at `(x, y, z)`: `−1` when that cube is white.
fn axis_sign(x: i32, y: i32, z: i32) -> i64 {
    if (x + y + z).rem_euclid(2) == 0 {
        -1
    } else {
        1
    }
}

/// The undivided pair sum, computed square by square with running sums of
/// the x- and y-domino signs seen below.
pub fn raw_pair_sum(t: &Tiling) -> i64 {
    let disk = t.disk();
    let n = disk.len();
    let mut below_x = vec![0i64; n];
    let mut below_y = vec![0i64; n];
    let mut raw = 0i64;
    for (z, f) in t.floors().iter().enumerate() {
        let z = z as i32;
        for s in f.east {
            let e = disk.neighbor(s, Dir::East).expect("x-domino inside disk");
            let q = disk.square(s);
            let sx = axis_sign(q.x, q.y, z);
            for c in [s, e] {
                raw += sx * below_y[c];
            }
            for c in [s, e] {
                below_x[c] += sx;
            }
        }
        for s in f.north {
            let nn = disk.neighbor(s, Dir::North).expect("y-domino inside disk");
            let q = disk.square(s);
            let sy = axis_sign(q.x, q.y, z);
            for c in [s, nn] {
                raw -= sy * below_x[c];
            }
            for c in [s, nn] {
                below_y[c] += sy;
            }
        }
    }
    raw
}

/// The twist of a tiling of a cylinder. The pair sum alone is not a flip
/// invariant of corks with nonempty boundary plugs.
pub fn twist(t: &Tiling) -> Result<i64, TwistError> {
    let raw = raw_pair_sum(t);
    if raw % TWIST_DIVISOR != 0 {
        return Err(TwistError::NonIntegerResult(raw));
    }
    Ok(TWIST_SIGN * raw / TWIST_DIVISOR)
}

/// `(flux_{−1}, flux_0, flux_{+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i64; 3]", into = "[i64; 3]")]
pub struct FluxTriple {
    pub minus: i64,
    pub zero: i64,
    pub plus: i64,
}

impl FluxTriple {
    pub const ZERO: FluxTriple = FluxTriple { minus: 0, zero: 0, plus: 0 };

    pub fn new(minus: i64, zero: i64, plus: i64) -> Self {
        FluxTriple { minus, zero, plus }
    }

    pub fn sum(&self) -> i64 {
        self.minus + self.zero + self.plus
    }

    pub fn get(&self, j: i32) -> i64 {
        match j {
            -1 => self.minus,
            0 => self.zero,
            _ => self.plus,
        }
    }
}

impl From<[i64; 3]> for FluxTriple {
    fn from(a: [i64; 3]) -> Self {
        FluxTriple::new(a[0], a[1], a[2])
    }
}

impl From<FluxTriple> for [i64; 3] {
    fn from(f: FluxTriple) -> Self {
        [f.minus, f.zero, f.plus]
    }
}

/// Sums of `col` over the plug inside each of the three regions of `d`.
pub fn flux(gamma: &HamiltonCycle, d: Domino, p: SquareSet) -> Result<FluxTriple, TwistError> {
    if !p.is_disjoint(d.squares()) {
        return Err(TwistError::Incompatible);
    }
    let sp = gamma.split(d).map_err(|_| TwistError::RespectsPath)?;
    Ok(FluxTriple::new(
        gamma.col_sum(p.intersection(sp.minus)),
        gamma.col_sum(p.intersection(sp.zero)),
        gamma.col_sum(p.intersection(sp.plus)),
    ))
}

/// Explicit double loop over ordered pairs of 3D dominoes, used to cross-check
/// [`raw_pair_sum`].
pub fn raw_pair_sum_naive(t: &Tiling) -> i64 {
    let disk: &Disk = t.disk();
    let dominoes: Vec<(usize, Domino)> = t.horizontal_dominoes();
    let v = |z: usize, d: Domino| -> (i64, i64) {
        let (a, _) = disk.domino_squares(d);
        let s = axis_sign(a.x, a.y, z as i32);
        if disk.is_x_domino(d) {
            (s, 0)
        } else {
            (0, s)
        }
    };
    let mut raw = 0;
    for &(z1, d1) in &dominoes {
        for &(z2, d2) in &dominoes {
            if z2 < z1 && !d1.squares().is_disjoint(d2.squares()) {
                let (a, b) = (v(z1, d1), v(z2, d2));
                raw += a.0 * b.1 - a.1 * b.0;
            }
        }
    }
    raw
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn vertical_has_zero_twist() {
        let d = Arc::new(Disk::rectangle(4, 4).unwrap());
        let t = Tiling::vertical(d, SquareSet::EMPTY, 6).unwrap();
        assert_eq!(twist(&t).unwrap(), 0);
    }

    #[test]
    fn flux_triple_json() {
        let f = FluxTriple::new(0, -1, 1);
        assert_eq!(serde_json::to_string(&f).unwrap(), "[0,-1,1]");
        let g: FluxTriple = serde_json::from_str("[2,0,-2]").unwrap();
        assert_eq!(g.sum(), 0);
    }
}
