//! Bounded regularity probes: for each even height, all tilings are grouped
//! by twist and every flip component is joined to the first component of
//! its twist class with a padded search.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::grid::Disk;
use crate::moves::{components, equiv_bounded, Equivalence, MoveError, SearchBudget};

/// Limits for [`regularity_probe`].
#[derive(Debug, Clone, Copy)]
pub struct ProbeOptions {
    pub n_max: usize,
    pub pad_max: usize,
    pub search: SearchBudget,
    /// Maximum number of tilings enumerated per height.
    pub tilings: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { n_max: 2, pad_max: 4, search: SearchBudget::default(), tilings: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Verified,
    Unknown,
}

/// One twist class at one height.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub twist: i64,
    pub tilings: u64,
    /// Flip components at zero padding.
    pub components: usize,
    /// Components that could not be joined to the class representative.
    pub unjoined: usize,
    /// Largest padding used by a successful join.
    pub pad_used: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub n: usize,
    pub total_tilings: u64,
    pub exhaustive: bool,
    pub components: usize,
    pub largest_fraction: f64,
    pub classes: Vec<ClassReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub pad_max: usize,
    pub levels: Vec<LevelReport>,
}

impl ProbeReport {
    pub fn all_verified(&self) -> bool {
        self.levels.iter().all(|l| l.exhaustive && l.classes.iter().all(|c| c.verdict == Verdict::Verified))
    }
}

/// Runs the probe for `N = 2, 4, …, n_max`. Unbalanced disks are accepted
/// since the boxes of even height are balanced anyway; a level whose
/// enumeration hit the tiling budget is reported with `exhaustive = false`
/// and its classes cover only the tilings seen.
pub fn regularity_probe(disk: Arc<Disk>, opts: ProbeOptions) -> Result<ProbeReport, MoveError> {
    let mut levels = Vec::new();
    for n in (2..=opts.n_max).step_by(2) {
        let rep = components(disk.clone(), n, opts.tilings)?;
        let mut twists: Vec<i64> = rep.components.iter().map(|c| c.twist).collect();
        twists.sort_unstable();
        twists.dedup();
        let mut classes = Vec::new();
        for tw in twists {
            let members: Vec<_> = rep.components.iter().filter(|c| c.twist == tw).collect();
            let root = &members[0].representative;
            let joins: Vec<Result<Equivalence, MoveError>> = members[1..]
                .par_iter()
                .map(|c| equiv_bounded(root, &c.representative, opts.pad_max, opts.search))
                .collect();
            let mut unjoined = 0;
            let mut pad_used = 0;
            for j in joins {
                match j? {
                    Equivalence::Connected { m1, m2, .. } => pad_used = pad_used.max(m1.max(m2)),
                    Equivalence::Unknown { .. } => unjoined += 1,
                }
            }
            classes.push(ClassReport {
                twist: tw,
                tilings: members.iter().map(|c| c.size).sum(),
                components: members.len(),
                unjoined,
                pad_used,
                verdict: if unjoined == 0 && rep.exhaustive { Verdict::Verified } else { Verdict::Unknown },
            });
        }
        levels.push(LevelReport {
            n,
            total_tilings: rep.total_tilings,
            exhaustive: rep.exhaustive,
            components: rep.components.len(),
            largest_fraction: rep.largest_fraction(),
            classes,
        });
    }
    Ok(ProbeReport { pad_max: opts.pad_max, levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_is_flip_connected() {
        let d = Arc::new(Disk::rectangle(2, 2).unwrap());
        let r = regularity_probe(d, ProbeOptions { n_max: 2, pad_max: 0, ..Default::default() }).unwrap();
        assert_eq!(r.levels[0].total_tilings, 9);
        assert_eq!(r.levels[0].components, 1);
        assert!(r.all_verified());
    }
}
