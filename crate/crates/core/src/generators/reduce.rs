//! Rewriting generator words down to powers of the base generator
//! `τ = t_{d_base, p}` with `flux_0(d_base, p) = +1`.
//!
//! Every rewriting rule is carried out on actual tilings: the left-hand
//! generator is built, vertical floors are inserted where needed, a short
//! list of flips (or a flip path found inside a two-floor slab) produces a
//! retiled version, and that tiling is decomposed floor by floor. The
//! resulting letters are checked against the expected shape of the rule and
//! against the twist before they are used.

use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use super::{FluxTarget, GenError, GeneratorSymbol, GeneratorWord, Generators, PlugSymbol};
use crate::grid::{Dir, Disk, Domino, SquareSet};
use crate::hamilton::{find_hamilton, HamiltonCycle};
use crate::moves::{apply_flip, equiv_bounded, Equivalence, Flip, SearchBudget};
use crate::tiling::{Floor, Tiling};
use crate::twist::twist;

/// A part `D_i` (`i ≥ 1`) attached to `D_0` along two unit edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Junction {
    pub part: u8,
    /// The domino of `D_0` along the shared segment.
    pub inner: Domino,
    /// The domino of `D_i` along the shared segment.
    pub outer: Domino,
}

/// A decomposition `D = D_0 ∪ D_1 ∪ … ∪ D_k` that passed the checks of
/// [`check_parts`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Parts {
    pub labels: Vec<u8>,
    pub junctions: Vec<Junction>,
}

/// Checks the hypotheses for disks without bottlenecks: balanced,
/// nontrivial, and `γ` a cycle starting at `s_SW`.
pub fn check_cycle_disk(disk: &Disk, gamma: &HamiltonCycle) -> Result<(), GenError> {
    if !disk.is_balanced() {
        return Err(GenError::HypothesesNotMet("disk is not balanced".into()));
    }
    if disk.is_trivial() {
        return Err(GenError::HypothesesNotMet("disk is trivial".into()));
    }
    if !gamma.is_cycle() {
        return Err(GenError::HypothesesNotMet("path is not a cycle".into()));
    }
    if gamma.s(1) != disk.s_sw() {
        return Err(GenError::HypothesesNotMet("cycle does not start at the south-west square".into()));
    }
    Ok(())
}

/// Checks a labelled decomposition: `D_0` is a nontrivial hamiltonian disk
/// without bottlenecks, every other part is a disk with
/// `|D_i| < |D_0| − 2` meeting `D_0` in a straight segment of two unit edges.
pub fn check_parts(disk: &Disk, labels: &[u8]) -> Result<Parts, GenError> {
    let fail = |m: String| Err(GenError::HypothesesNotMet(m));
    if labels.len() != disk.len() {
        return fail("one label per square is required".into());
    }
    let part = |i: u8| SquareSet::from_indices((0..disk.len()).filter(|&s| labels[s] == i));
    let d0 = part(0);
    if d0.is_empty() {
        return fail("part 0 is empty".into());
    }
    let sub = Disk::from_squares(d0.iter().map(|s| disk.square(s)))
        .map_err(|e| GenError::HypothesesNotMet(format!("part 0 is not a disk: {e}")))?;
    if !sub.is_balanced() || sub.is_trivial() {
        return fail("part 0 must be balanced and nontrivial".into());
    }
    if !sub.bottlenecks().is_empty() {
        return fail("part 0 has a bottleneck".into());
    }
    if find_hamilton(&sub, true, true).is_none() {
        return fail("part 0 has no hamiltonian cycle".into());
    }
    let top = labels.iter().copied().max().unwrap_or(0);
    let mut junctions = Vec::new();
    for i in 1..=top {
        let di = part(i);
        if di.is_empty() {
            continue;
        }
        if !disk.is_disk_region(di) {
            return fail(format!("part {i} is not a disk"));
        }
        if di.len() + 2 >= d0.len() {
            return fail(format!("part {i} has {} squares, needs fewer than {}", di.len(), d0.len() - 2));
        }
        let contacts: Vec<(usize, usize)> = d0
            .iter()
            .flat_map(|u| disk.neighbors(u).filter(|&v| di.contains(v)).map(move |v| (u, v)))
            .collect();
        let segment = contacts.len() == 2
            && disk.are_adjacent(contacts[0].0, contacts[1].0)
            && disk.are_adjacent(contacts[0].1, contacts[1].1);
        if !segment {
            return fail(format!("part {i} does not meet part 0 in a line segment of length two"));
        }
        junctions.push(Junction {
            part: i,
            inner: Domino::new(contacts[0].0, contacts[1].0),
            outer: Domino::new(contacts[0].1, contacts[1].1),
        });
    }
    Ok(Parts { labels: labels.to_vec(), junctions })
}

/// The domino adjacent and parallel to `s_1 ∪ s_n` that does not respect `γ`.
pub fn base_domino(disk: &Disk, gamma: &HamiltonCycle) -> Option<Domino> {
    let c = gamma.closing_domino()?;
    let dirs = if disk.is_x_domino(c) { [Dir::North, Dir::South] } else { [Dir::East, Dir::West] };
    dirs.into_iter().find_map(|dir| {
        let a = disk.neighbor(c.a, dir)?;
        let b = disk.neighbor(c.b, dir)?;
        let d = Domino::new(a, b);
        (!gamma.respects(d)).then_some(d)
    })
}

/// How a rewriting step was justified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// `|flux_0| ≥ 2` split along a domino `d̃` contained in the plug.
    SplitInside,
    /// `|flux_0| ≥ 2` split along a domino `d̃` outside the plug.
    SplitOutside,
    /// `|flux_0| = 1` moved to a domino crossing `d`.
    Crossing,
    /// `|flux_0| = 1` moved to a domino nested with `d`, retiling the disk between them.
    Nested,
    /// Flips next to the junction domino of a bottleneck.
    Junction,
}

/// One applied rule instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleRecord {
    pub rule: Rule,
    pub d: Domino,
    pub flux_zero: i64,
    /// Letters `(domino, flux_0, exp)` produced, zero-flux ones included.
    pub rhs: Vec<(Domino, i64, i8)>,
    /// Outcome of the optional bounded check: `Some(true)` when connected,
    /// `Some(false)` when the budget ran out.
    pub oracle: Option<bool>,
}

#[derive(Debug, Clone, Copy)]
pub struct ReduceOptions {
    /// Budget for the slab searches of nested steps and the base-domino
    /// inverse identity.
    pub search: SearchBudget,
    /// Padding allowed when establishing the base-domino inverse identity.
    pub base_pad_max: usize,
    /// When set, every rule instance is also checked with a bounded search
    /// under this padding and budget.
    pub oracle: Option<(usize, SearchBudget)>,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions { search: SearchBudget { states: 1_000_000 }, base_pad_max: 6, oracle: None }
    }
}

/// Result of [`Reducer::reduce`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reduced {
    pub k: i64,
    pub word: GeneratorWord,
}

/// Memoizing rewriting engine for one disk and cycle.
pub struct Reducer {
    gens: Generators,
    base: Domino,
    tau: GeneratorSymbol,
    parts: Option<Parts>,
    bottlenecks: FxHashSet<Domino>,
    nodes: Vec<Domino>,
    /// Next domino on a shortest transport path to the base domino.
    next_hop: FxHashMap<Domino, Domino>,
    memo: FxHashMap<(Domino, i64), i64>,
    active: FxHashSet<(Domino, i64)>,
    base_inverse: Option<Vec<Flip>>,
    log: Vec<RuleRecord>,
    opts: ReduceOptions,
}

impl Reducer {
    pub fn new(gens: Generators, parts: Option<Parts>, opts: ReduceOptions) -> Result<Reducer, GenError> {
        let disk = gens.disk().clone();
        let gamma = gens.gamma().clone();
        check_cycle_disk(&disk, &gamma)?;
        let bottlenecks: FxHashSet<Domino> = disk.bottlenecks().into_iter().collect();
        if !bottlenecks.is_empty() && parts.is_none() {
            return Err(GenError::HypothesesNotMet("disk has bottlenecks and no part decomposition".into()));
        }
        if let Some(p) = &parts {
            let again = check_parts(&disk, &p.labels)?;
            if &again != p {
                return Err(GenError::HypothesesNotMet("part decomposition does not match the disk".into()));
            }
        }
        let base = base_domino(&disk, &gamma)
            .ok_or_else(|| GenError::HypothesesNotMet("no non-respecting domino next to s_1 ∪ s_n".into()))?;
        let plug = gens.canonical_plug(base, FluxTarget::Zero(1))?;
        let tau = gens.symbol(base, plug, 1)?;
        let nodes: Vec<Domino> = gamma.d_gamma(&disk).into_iter().filter(|d| !gamma.is_closing(*d)).collect();
        let mut r = Reducer {
            gens,
            base,
            tau,
            parts,
            bottlenecks,
            nodes,
            next_hop: FxHashMap::default(),
            memo: FxHashMap::default(),
            active: FxHashSet::default(),
            base_inverse: None,
            log: Vec::new(),
            opts,
        };
        r.next_hop = r.transport_tree();
        Ok(r)
    }

    pub fn generators(&self) -> &Generators {
        &self.gens
    }

    pub fn base(&self) -> Domino {
        self.base
    }

    /// The base generator `τ`.
    pub fn tau(&self) -> GeneratorSymbol {
        self.tau
    }

    pub fn log(&self) -> &[RuleRecord] {
        &self.log
    }

    /// The flip path establishing `t_{d_base,p}^{-1} ~ t_{d_base,q}` for
    /// `flux_0(p) = +1`, `flux_0(q) = −1`, once it has been needed.
    pub fn base_inverse_path(&self) -> Option<&[Flip]> {
        self.base_inverse.as_deref()
    }

    /// Rewrites a word to `τ^k`.
    pub fn reduce(&mut self, w: &GeneratorWord) -> Result<Reduced, GenError> {
        let mut k = 0;
        for s in &w.0 {
            k += s.exp as i64 * self.exponent(s.d, s.flux.zero)?;
        }
        let letter = if k < 0 { self.tau.inverse() } else { self.tau };
        Ok(Reduced { k, word: GeneratorWord(vec![letter; k.unsigned_abs() as usize]) })
    }

    /// The power of `τ` equivalent to `t_{d,p}` for any plug with `flux_0 = f0`.
    pub fn exponent(&mut self, d: Domino, f0: i64) -> Result<i64, GenError> {
        let g = self.gens.gamma();
        if f0 == 0 || g.respects(d) || g.is_closing(d) {
            return Ok(0);
        }
        if let Some(&k) = self.memo.get(&(d, f0)) {
            return Ok(k);
        }
        if !self.active.insert((d, f0)) {
            return Err(GenError::RuleVerificationFailed(format!("rewriting of {d:?} with flux {f0} loops")));
        }
        let k = if d == self.base && f0.abs() == 1 {
            if f0 == -1 {
                self.establish_base_inverse()?;
            }
            f0
        } else {
            let (_, rhs) = self.step(d, f0)?;
            let mut k = 0;
            for s in rhs {
                let f = self.gens.flux_zero(s.d, s.plug)?;
                k += s.exp as i64 * self.exponent(s.d, f)?;
            }
            k
        };
        self.active.remove(&(d, f0));
        self.memo.insert((d, f0), k);
        Ok(k)
    }

    /// Rewrites only the letters on bottleneck dominoes, leaving a word whose
    /// letters all avoid bottlenecks.
    pub fn eliminate_bottlenecks(&mut self, w: &GeneratorWord) -> Result<GeneratorWord, GenError> {
        let mut out = Vec::new();
        for s in &w.0 {
            self.expand_bottleneck(*s, 0, &mut out)?;
        }
        Ok(GeneratorWord(out))
    }

    fn expand_bottleneck(&mut self, s: GeneratorSymbol, depth: usize, out: &mut Vec<GeneratorSymbol>) -> Result<(), GenError> {
        if s.flux.zero == 0 || self.gens.gamma().respects(s.d) {
            return Ok(());
        }
        if !self.bottlenecks.contains(&s.d) {
            out.push(s);
            return Ok(());
        }
        if depth > self.nodes.len() {
            return Err(GenError::RuleVerificationFailed(format!("bottleneck rewriting of {:?} loops", s.d)));
        }
        let (_, rhs) = self.bottleneck_step(s.d, s.flux.zero)?;
        let mut letters = rhs.iter().map(|p| self.gens.symbol(p.d, p.plug, p.exp)).collect::<Result<Vec<_>, _>>()?;
        if s.exp < 0 {
            letters = letters.into_iter().rev().map(|l| l.inverse()).collect();
        }
        for l in letters {
            self.expand_bottleneck(l, depth + 1, out)?;
        }
        Ok(())
    }

    /// One rewriting step for a letter that is not yet a power of `τ`.
    fn step(&mut self, d: Domino, f0: i64) -> Result<(SquareSet, Vec<PlugSymbol>), GenError> {
        if self.bottlenecks.contains(&d) {
            return self.bottleneck_step(d, f0);
        }
        if f0.abs() >= 2 {
            return self.split_step(d, f0);
        }
        let Some(&next) = self.next_hop.get(&d) else {
            return Err(GenError::HypothesesNotMet(format!("no transport path from {d:?} to the base domino")));
        };
        self.transport_step(d, next, f0)
    }

    fn bottleneck_step(&mut self, d: Domino, f0: i64) -> Result<(SquareSet, Vec<PlugSymbol>), GenError> {
        let parts = self
            .parts
            .clone()
            .ok_or_else(|| GenError::HypothesesNotMet("bottleneck without part decomposition".into()))?;
        if let Some(j) = parts.junctions.iter().find(|j| j.inner == d) {
            return self.junction_step(*j, f0, &parts);
        }
        let label = parts.labels[d.a].max(parts.labels[d.b]);
        let j = parts
            .junctions
            .iter()
            .find(|j| j.part == label)
            .copied()
            .ok_or_else(|| GenError::HypothesesNotMet(format!("bottleneck {d:?} lies in no attached part")))?;
        let all: Vec<Domino> = self.nodes.clone();
        let path = crate::hamilton::shortest_chain(&all, d, j.inner, |a, b| self.movable(a, b))
            .ok_or_else(|| GenError::HypothesesNotMet(format!("bottleneck {d:?} cannot reach its junction")))?;
        self.transport_step(d, path[1], f0)
    }

    /// Breadth-first tree of transport moves rooted at the base domino, over
    /// the non-respecting dominoes that are neither closing nor bottlenecks.
    fn transport_tree(&self) -> FxHashMap<Domino, Domino> {
        let nodes: Vec<Domino> = self.nodes.iter().copied().filter(|d| !self.bottlenecks.contains(d)).collect();
        let mut next = FxHashMap::default();
        let mut queue = std::collections::VecDeque::from([self.base]);
        let mut seen: FxHashSet<Domino> = [self.base].into_iter().collect();
        while let Some(cur) = queue.pop_front() {
            for &n in &nodes {
                if !seen.contains(&n) && self.movable(n, cur) {
                    seen.insert(n);
                    next.insert(n, cur);
                    queue.push_back(n);
                }
            }
        }
        next
    }

    /// Whether a letter on `a` with `|flux_0| = 1` can be moved to `b` in one step.
    fn movable(&self, a: Domino, b: Domino) -> bool {
        if a == b {
            return false;
        }
        if self.crossing_square(a, b).is_some() {
            return true;
        }
        let Some(m) = self.between(a, b) else { return false };
        self.gens.disk().is_disk_region(m)
            && [1, -1].iter().all(|&f| self.plug_avoiding(a, f, m).is_ok())
            && self.cycle_walk(m, a, b).is_some()
    }

    /// For crossing dominoes, the square of `b` inside `D_{a,0}`.
    fn crossing_square(&self, a: Domino, b: Domino) -> Option<usize> {
        let sp = self.gens.gamma().split(a).ok()?;
        let inside: Vec<usize> = b.squares().intersection(sp.zero).iter().collect();
        (inside.len() == 1 && b.squares().intersection(sp.pm()).len() == 1).then(|| inside[0])
    }

    /// The squares between two non-crossing dominoes: everything except the
    /// side of each that does not contain the other.
    fn between(&self, a: Domino, b: Domino) -> Option<SquareSet> {
        let g = self.gens.gamma();
        let (sa, sb) = (g.split(a).ok()?, g.split(b).ok()?);
        if !a.is_disjoint(b) {
            return None;
        }
        let far = |sp: &crate::hamilton::DominoSplit, other: Domino| {
            if other.squares().is_subset(sp.zero) {
                Some(sp.pm())
            } else if other.squares().is_subset(sp.pm()) {
                Some(sp.zero)
            } else {
                None
            }
        };
        let fa = far(&sa, b)?;
        let fb = far(&sb, a)?;
        Some(self.gens.disk().full().difference(fa).difference(fb))
    }

    /// The cycle bounding `m`, made of path edges inside `m` and the two
    /// chords, walked from one square of `a` around to the other.
    fn cycle_walk(&self, m: SquareSet, a: Domino, b: Domino) -> Option<Vec<usize>> {
        let g = self.gens.gamma();
        let n = g.len();
        let mut adj: FxHashMap<usize, Vec<usize>> = FxHashMap::default();
        let mut link = |u: usize, v: usize| {
            adj.entry(u).or_default().push(v);
            adj.entry(v).or_default().push(u);
        };
        for i in 1..=n {
            let j = if i == n { 1 } else { i + 1 };
            if (i < n || g.is_cycle()) && m.contains(g.s(i)) && m.contains(g.s(j)) {
                link(g.s(i), g.s(j));
            }
        }
        link(b.a, b.b);
        if m.iter().any(|s| adj.get(&s).map_or(true, |v| v.len() != if a.contains(s) { 1 } else { 2 })) {
            return None;
        }
        let mut walk = vec![a.a];
        let mut prev = usize::MAX;
        let mut cur = a.a;
        while cur != a.b {
            let nx = *adj[&cur].iter().find(|&&v| v != prev)?;
            prev = cur;
            cur = nx;
            walk.push(cur);
            if walk.len() > m.len() {
                return None;
            }
        }
        (walk.len() == m.len()).then_some(walk)
    }

    /// A plug compatible with `d`, avoiding `avoid`, with `|f0|` squares of
    /// `col = sign(f0)` in `D_{d,0}` and `|f0|` of the other `col` in `D_{d,±1}`.
    fn plug_avoiding(&self, d: Domino, f0: i64, avoid: SquareSet) -> Result<SquareSet, GenError> {
        let g = self.gens.gamma();
        let sp = g.split(d).map_err(|_| GenError::RespectsPath)?;
        let k = f0.unsigned_abs() as usize;
        let pick = |region: SquareSet, col: i64| -> Result<Vec<usize>, GenError> {
            let mut pos: Vec<usize> =
                region.difference(avoid).iter().filter(|&s| g.col(s) == col).map(|s| g.index_of(s)).collect();
            pos.sort_unstable();
            if pos.len() < k {
                return Err(GenError::Unachievable);
            }
            Ok(pos[..k].iter().map(|&i| g.s(i)).collect())
        };
        let z = pick(sp.zero, f0.signum())?;
        let mut outer = pick(sp.plus, -f0.signum()).or_else(|_| pick(sp.minus, -f0.signum()))?;
        outer.extend(z);
        Ok(SquareSet::from_indices(outer))
    }

    fn tiling(&self, floors: Vec<Floor>) -> Tiling {
        Tiling::from_floors_unchecked(self.gens.disk().clone(), floors)
    }

    fn flip(&self, t: Tiling, f: Flip) -> Result<Tiling, GenError> {
        apply_flip(&t, f).map_err(|_| GenError::RuleVerificationFailed(format!("flip {f:?} does not apply")))
    }

    /// `t_p^{-1} * (p, ∅, p^{-1}) * (p^{-1}, ∅, p) * f * f_vert * (p̂, ∅, p̂^{-1})
    /// * (p̂^{-1}, ∅, p̂) * t_p̂` with `d̃ ⊂ p`, then three flips on `d̃`.
    fn split_inside(&self, d: Domino, dt: Domino, p: SquareSet) -> Result<Vec<PlugSymbol>, GenError> {
        let disk = &**self.gens.disk();
        let full = disk.full();
        let phat = p.union(d.squares());
        let mut floors = self.gens.t_p(p)?.inverse().floors().to_vec();
        let h = floors.len();
        floors.push(Floor::vertical(disk, p));
        floors.push(Floor::vertical(disk, full.difference(p)));
        floors.push(self.gens.generator_floor(d, p)?);
        floors.push(Floor::vertical(disk, full.difference(phat)));
        floors.push(Floor::vertical(disk, phat));
        floors.push(Floor::vertical(disk, full.difference(phat)));
        floors.extend_from_slice(self.gens.t_p(phat)?.floors());
        let mut t = self.tiling(floors);
        for f in [
            Flip::VertToHoriz { floor: h + 1, d: dt },
            Flip::VertToHoriz { floor: h + 3, d: dt },
            Flip::HorizToVert { floor: h + 2, d: dt },
        ] {
            t = self.flip(t, f)?;
        }
        t.validate().map_err(GenError::from)?;
        self.gens.decompose_plugs(&t)
    }

    /// `t_p^{-1} * f * f_vert * (p̂, ∅, p̂^{-1}) * (p̂^{-1}, ∅, p̂) * t_p̂` with
    /// `d̃ ⊂ p^{-1} ∖ d`, then three flips on `d̃`; `d̃` leads in its floor.
    fn split_outside(&self, d: Domino, dt: Domino, p: SquareSet) -> Result<Vec<PlugSymbol>, GenError> {
        let disk = &**self.gens.disk();
        let full = disk.full();
        let phat = p.union(d.squares());
        let mut floors = self.gens.t_p(p)?.inverse().floors().to_vec();
        let h = floors.len();
        floors.push(self.gens.generator_floor(d, p)?);
        floors.push(Floor::vertical(disk, full.difference(phat)));
        floors.push(Floor::vertical(disk, phat));
        floors.push(Floor::vertical(disk, full.difference(phat)));
        floors.extend_from_slice(self.gens.t_p(phat)?.floors());
        let mut t = self.tiling(floors);
        for f in [
            Flip::VertToHoriz { floor: h, d: dt },
            Flip::VertToHoriz { floor: h + 2, d: dt },
            Flip::HorizToVert { floor: h + 1, d: dt },
        ] {
            t = self.flip(t, f)?;
        }
        t.validate().map_err(GenError::from)?;
        self.gens.decompose_with(&t, &[dt])
    }

    /// Conditions on the plug for an inside split with `s_i ∈ D_{d,±1}`,
    /// `s_j ∈ D_{d,0}`, stated for `s_i ∈ D_{d,−1}` and mirrored otherwise.
    fn preferred_plug(&self, d: Domino, i: usize, j: usize, p: SquareSet) -> bool {
        let g = self.gens.gamma();
        let n = g.len();
        let (k, l) = g.positions(d);
        let meets = |lo: usize, hi: usize| !p.intersection(g.span(lo, hi)).is_empty();
        let col = |m: usize| g.col(g.s(m));
        if i < k {
            if col(k) == col(j) {
                (l - j < 3 || meets(j + 1, l - 1)) && (k - i < 3 || meets(i + 1, k - 1))
            } else if i > 2 {
                meets(1, i - 1)
            } else {
                i != 2 || p.contains(g.s(n))
            }
        } else if col(l) == col(j) {
            (j - k < 3 || meets(k + 1, j - 1)) && (i - l < 3 || meets(l + 1, i - 1))
        } else if i + 1 < n {
            meets(i + 1, n)
        } else {
            p.contains(g.s(1))
        }
    }

    /// Splits a letter with `|flux_0| ≥ 2` into letters of smaller `|flux_0|`.
    fn split_step(&mut self, d: Domino, f0: i64) -> Result<(SquareSet, Vec<PlugSymbol>), GenError> {
        let g = self.gens.gamma().clone();
        let sp = g.split(d).map_err(|_| GenError::RespectsPath)?;
        let disk = self.gens.disk().clone();
        let c = f0.signum();
        let k = f0.unsigned_abs() as usize;
        let by_col = |region: SquareSet, col: i64, skip: usize| -> Vec<usize> {
            let mut v: Vec<usize> =
                region.iter().filter(|&s| s != skip && g.col(s) == col).map(|s| g.index_of(s)).collect();
            v.sort_unstable();
            v.into_iter().map(|i| g.s(i)).collect()
        };
        for dt in disk.dominoes() {
            if self.bottlenecks.contains(&dt) {
                continue;
            }
            let Some(sj) = self.crossing_square(d, dt) else { continue };
            let si = if dt.a == sj { dt.b } else { dt.a };
            let (i, j) = (g.index_of(si), g.index_of(sj));
            let inside = g.col(sj) == c;
            let mut fallback = None;
            let (zero_pool, pm_pool, extra) = if inside {
                (by_col(sp.zero, c, sj), by_col(sp.pm(), -c, si), k - 1)
            } else {
                (by_col(sp.zero, c, usize::MAX), by_col(sp.pm(), -c, usize::MAX), k)
            };
            for zs in combinations(&zero_pool, extra) {
                for ms in combinations(&pm_pool, extra) {
                    let mut p = SquareSet::from_indices(zs.iter().chain(&ms).copied());
                    if inside {
                        p = p.union(dt.squares());
                    }
                    let expected = if inside {
                        let phat = p.union(d.squares());
                        [(dt, p.difference(dt.squares()), -1), (d, p.difference(dt.squares()), 1), (dt, phat.difference(dt.squares()), 1)]
                    } else {
                        [(dt, p, 1), (d, p.union(dt.squares()), 1), (dt, p.union(d.squares()), -1)]
                    };
                    let smaller = expected
                        .iter()
                        .all(|&(e, q, _)| self.gens.flux_zero(e, q).map_or(false, |f| f.abs() < f0.abs()));
                    if !smaller {
                        continue;
                    }
                    if !inside || self.preferred_plug(d, i, j, p) {
                        return self.finish_split(d, f0, dt, p, inside, &expected);
                    }
                    fallback.get_or_insert((p, expected));
                }
            }
            if let Some((p, expected)) = fallback {
                return self.finish_split(d, f0, dt, p, inside, &expected);
            }
        }
        Err(GenError::HypothesesNotMet(format!("no splitting domino and plug for {d:?} with flux {f0}")))
    }

    fn finish_split(
        &mut self,
        d: Domino,
        f0: i64,
        dt: Domino,
        p: SquareSet,
        inside: bool,
        expected: &[(Domino, SquareSet, i8); 3],
    ) -> Result<(SquareSet, Vec<PlugSymbol>), GenError> {
        let rhs = if inside { self.split_inside(d, dt, p)? } else { self.split_outside(d, dt, p)? };
        let want: Vec<PlugSymbol> = expected.iter().map(|&(d, plug, exp)| PlugSymbol { d, plug, exp }).collect();
        if rhs != want {
            return Err(GenError::RuleVerificationFailed(format!("split of {d:?} decomposed to {rhs:?}")));
        }
        let rule = if inside { Rule::SplitInside } else { Rule::SplitOutside };
        self.record(rule, d, f0, p, &rhs)?;
        Ok((p, rhs))
    }

    /// Moves a letter from `a` to `b`, where the two dominoes cross or are
    /// nested around a disk.
    fn transport_step(&mut self, a: Domino, b: Domino, f0: i64) -> Result<(SquareSet, Vec<PlugSymbol>), GenError> {
        let g = self.gens.gamma().clone();
        let full = self.gens.disk().full();
        if let Some(x) = self.crossing_square(a, b) {
            let (p, rhs) = if g.col(x) == f0.signum() && f0.abs() == 1 {
                let p = b.squares();
                (p, self.split_inside(a, b, p)?)
            } else if f0.abs() == 1 {
                let p = full.difference(a.squares().union(b.squares()));
                (p, self.split_outside(a, b, p)?)
            } else {
                return Err(GenError::RuleVerificationFailed("crossing step needs |flux_0| = 1".into()));
            };
            self.check_moved(a, f0, b, &rhs)?;
            self.record(Rule::Crossing, a, f0, p, &rhs)?;
            return Ok((p, rhs));
        }
        let m = self.between(a, b).ok_or_else(|| GenError::HypothesesNotMet(format!("{a:?} and {b:?} are not nested")))?;
        let walk = self
            .cycle_walk(m, a, b)
            .ok_or_else(|| GenError::HypothesesNotMet(format!("no cycle between {a:?} and {b:?}")))?;
        let p = self.plug_avoiding(a, f0, m)?;
        let disk = &**self.gens.disk();
        let t = self.gens.t_dp(a, p)?;
        let h = p.len();
        let pairs = |w: &[usize]| -> Vec<Domino> { w.chunks(2).map(|c| Domino::new(c[0], c[1])).collect() };
        let mid = full.difference(m.union(p));
        let f1 = Floor::new(disk, p, &pairs(&walk), mid)?;
        let f2 = Floor::new(disk, mid, &pairs(&walk[1..walk.len() - 1]), p.union(a.squares()))?;
        let mut floors = t.floors().to_vec();
        let before = self.tiling(floors[h..h + 2].to_vec());
        floors[h] = f1;
        floors[h + 1] = f2;
        let after = self.tiling(floors[h..h + 2].to_vec());
        match equiv_bounded(&before, &after, 0, self.opts.search) {
            Ok(Equivalence::Connected { .. }) => {}
            _ => {
                return Err(GenError::BudgetExceeded(format!("no flip path inside the slab between {a:?} and {b:?}")))
            }
        }
        let retiled = Tiling::new(self.gens.disk().clone(), floors)?;
        let rhs = self.gens.decompose_plugs(&retiled)?;
        self.check_moved(a, f0, b, &rhs)?;
        self.record(Rule::Nested, a, f0, p, &rhs)?;
        Ok((p, rhs))
    }

    /// After a move, the only letters with nonzero flux sit on `b` with the same `|flux_0|`.
    fn check_moved(&self, a: Domino, f0: i64, b: Domino, rhs: &[PlugSymbol]) -> Result<(), GenError> {
        for s in rhs {
            let f = self.gens.flux_zero(s.d, s.plug)?;
            if f != 0 && (s.d != b || f.abs() != f0.abs()) {
                return Err(GenError::RuleVerificationFailed(format!(
                    "moving {a:?} to {b:?} left {:?} with flux {f}",
                    s.d
                )));
            }
        }
        Ok(())
    }

    /// A letter on the junction domino `d_1` of a part: the parallel domino
    /// `d_2` of `D_0` next to it is flipped up from the vertical floor, then
    /// `d_1 ∪ d_2` is rotated inside the generator floor.
    fn junction_step(&mut self, j: Junction, f0: i64, parts: &Parts) -> Result<(SquareSet, Vec<PlugSymbol>), GenError> {
        let disk = self.gens.disk().clone();
        let d1 = j.inner;
        let (a, _) = disk.domino_squares(d1);
        let (o, _) = disk.domino_squares(j.outer);
        let away = if disk.is_x_domino(d1) {
            if o.y > a.y { Dir::South } else { Dir::North }
        } else if o.x > a.x {
            Dir::West
        } else {
            Dir::East
        };
        let d2 = match (disk.neighbor(d1.a, away), disk.neighbor(d1.b, away)) {
            (Some(x), Some(y)) if parts.labels[x] == 0 && parts.labels[y] == 0 => Domino::new(x, y),
            _ => return Err(GenError::HypothesesNotMet(format!("no parallel domino next to {d1:?} in part 0"))),
        };
        let p = self.plug_avoiding(d1, f0, d2.squares())?;
        let h = p.len();
        let t = self.gens.t_dp(d1, p)?;
        let sw = d1.squares().union(d2.squares()).first().expect("nonempty block");
        let t = self.flip(t, Flip::VertToHoriz { floor: h, d: d2 })?;
        let t = self.flip(t, Flip::InFloor { floor: h, sw })?;
        t.validate().map_err(GenError::from)?;
        let rhs = self.gens.decompose_plugs(&t)?;
        if rhs.iter().any(|s| s.d == d1) {
            return Err(GenError::RuleVerificationFailed(format!("junction step kept {d1:?}")));
        }
        self.record(Rule::Junction, d1, f0, p, &rhs)?;
        Ok((p, rhs))
    }

    /// Twist bookkeeping for a rule instance, plus the optional bounded check.
    fn record(&mut self, rule: Rule, d: Domino, f0: i64, p: SquareSet, rhs: &[PlugSymbol]) -> Result<(), GenError> {
        let lhs = self.gens.t_dp(d, p)?;
        let canon = self.gens.t_dp(d, self.gens.canonical_plug(d, FluxTarget::Zero(f0))?)?;
        let right = self.gens.realize_plug_word(rhs)?;
        let (tl, tc, tr) = (twist(&lhs)?, twist(&canon)?, twist(&right)?);
        if tl != tr || tl != tc {
            return Err(GenError::RuleVerificationFailed(format!(
                "{rule:?} on {d:?} with flux {f0}: twists {tl}, {tc}, {tr}"
            )));
        }
        let oracle = match self.opts.oracle {
            Some((pad, budget)) => {
                // both sides are cylinders of even height; match heights first
                let h = lhs.height().max(right.height());
                let a = lhs.pad(h - lhs.height())?;
                let b = right.pad(h - right.height())?;
                let r = equiv_bounded(&a, &b, pad, budget).map_err(|e| GenError::RuleVerificationFailed(e.to_string()))?;
                Some(r.is_connected())
            }
            None => None,
        };
        let rhs = rhs
            .iter()
            .map(|s| Ok((s.d, self.gens.flux_zero(s.d, s.plug)?, s.exp)))
            .collect::<Result<Vec<_>, GenError>>()?;
        self.log.push(RuleRecord { rule, d, flux_zero: f0, rhs, oracle });
        Ok(())
    }

    /// Searches for `t_{d_base,p}^{-1} ~ t_{d_base,q}` with `flux_0(p) = +1`
    /// and `flux_0(q) = −1`; the flip path is kept once found.
    fn establish_base_inverse(&mut self) -> Result<(), GenError> {
        if self.base_inverse.is_some() {
            return Ok(());
        }
        let p = self.gens.canonical_plug(self.base, FluxTarget::Zero(1))?;
        let q = self.gens.canonical_plug(self.base, FluxTarget::Zero(-1))?;
        let a = self.gens.t_dp(self.base, p)?.inverse();
        let b = self.gens.t_dp(self.base, q)?;
        match equiv_bounded(&a, &b, self.opts.base_pad_max, self.opts.search) {
            Ok(Equivalence::Connected { path, .. }) => {
                self.base_inverse = Some(path);
                Ok(())
            }
            _ => Err(GenError::BudgetExceeded("base-domino inverse identity not found within budget".into())),
        }
    }
}

/// All `k`-subsets of `items`, in lexicographic order of positions.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    items.iter().copied().combinations(k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_annotated_disk;
    use std::sync::Arc;

    fn setup(w: i32, h: i32) -> Reducer {
        let disk = Arc::new(Disk::rectangle(w, h).unwrap());
        let g = find_hamilton(&disk, true, true).unwrap();
        Reducer::new(Generators::new(disk, g), None, ReduceOptions::default()).unwrap()
    }

    #[test]
    fn base_of_four_by_four() {
        let r = setup(4, 4);
        let d = r.generators().disk().clone();
        let (a, b) = d.domino_squares(r.base());
        assert_eq!(((a.x, a.y), (b.x, b.y)), ((1, 0), (1, 1)));
        assert_eq!(r.tau().flux.zero, 1);
    }

    #[test]
    fn empty_and_zero_flux_words() {
        let mut r = setup(4, 4);
        assert_eq!(r.reduce(&GeneratorWord::default()).unwrap().k, 0);
        let d = r.generators().gamma().d_gamma(r.generators().disk())[3];
        let p = r.generators().canonical_plug(d, FluxTarget::Zero(0)).unwrap();
        let w = GeneratorWord(vec![r.generators().symbol(d, p, 1).unwrap()]);
        let out = r.reduce(&w).unwrap();
        assert_eq!(out.k, 0);
        assert!(out.word.is_empty());
    }

    #[test]
    fn every_unit_letter_reduces_to_its_twist() {
        let mut r = setup(4, 4);
        let gs = r.generators().clone();
        for d in gs.gamma().d_gamma(gs.disk()) {
            for f0 in [-2, -1, 1, 2] {
                let Ok(p) = gs.canonical_plug(d, FluxTarget::Zero(f0)) else { continue };
                let k = r.exponent(d, f0).unwrap();
                assert_eq!(k, twist(&gs.t_dp(d, p).unwrap()).unwrap(), "{d:?} {f0}");
            }
        }
    }

    #[test]
    fn parts_checks() {
        let (disk, labels) = parse_annotated_disk("000..\n00011\n00011\n000..").unwrap();
        let parts = check_parts(&disk, &labels).unwrap();
        assert_eq!(parts.junctions.len(), 1);
        let (a, b) = disk.domino_squares(parts.junctions[0].inner);
        assert_eq!(((a.x, a.y), (b.x, b.y)), ((2, 1), (2, 2)));
        let (disk, labels) = parse_annotated_disk("00..\n0011\n0011\n00..").unwrap();
        assert!(matches!(check_parts(&disk, &labels), Err(GenError::HypothesesNotMet(_))));
    }
}
