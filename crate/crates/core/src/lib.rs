//! Three-dimensional domino tilings of cylinders `D × [0, N]` over planar
//! quadriculated disks: floors and plugs, flips, the twist invariant,
//! hamiltonian-cycle generators and their reduction to a single generator.

pub mod grid;
pub mod hamilton;
pub mod tiling;
pub mod enumeration;
pub mod moves;
pub mod twist;
pub mod generators;
pub mod io;
