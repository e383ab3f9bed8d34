//! Classical inflation of the triangle network.
//!
//! The level-n inflation has n copies of every source. Party `A_ij` reads
//! `β_i` and `γ_j`, `B_jl` reads `γ_j` and `α_l`, `C_li` reads `α_l` and
//! `β_i`. Events are bit strings over the 3n² parties with party 0 as the
//! most significant bit, so at n = 1 the event index is `4a + 2b + c`.

mod certificate;
mod lp;
mod simplex;

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::dists::{Party, Visibility};
use crate::error::{Error, Result};

pub use certificate::{exact_certificate, rationalize, verify_certificate, verify_exact, Certificate, RATIONAL_MAX_DEN};
pub use lp::{assemble_lp, assemble_reduced_lp, exact_target, exact_w_target, ExactTarget, InflationLP, Row, RowKind};
pub use simplex::{solve, SimplexOptions, Verdict};

/// Largest level whose event space is enumerated explicitly.
pub const MAX_ENUMERATED_LEVEL: usize = 2;
pub const DEFAULT_LEVEL: usize = 2;
pub const DEFAULT_MAX_INJECTABLE: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Alpha,
    Beta,
    Gamma,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Alpha, Source::Beta, Source::Gamma];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InflationParty {
    pub kind: Party,
    /// The two parent source copies.
    pub sources: [(Source, usize); 2],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InflationScenario {
    level: usize,
    parties: Vec<InflationParty>,
}

pub fn build_scenario(n: usize) -> Result<InflationScenario> {
    if n == 0 {
        return Err(Error::InvalidArgument("inflation level must be at least 1".into()));
    }
    // 3n² parties must fit in a u64 event index for anything we enumerate;
    // construction itself only needs the list.
    if n > 16 {
        return Err(Error::ScaleGuard(alloc::format!("inflation level {n} is too large")));
    }
    let mut parties = Vec::with_capacity(3 * n * n);
    for i in 0..n {
        for j in 0..n {
            parties.push(InflationParty {
                kind: Party::A,
                sources: [(Source::Beta, i), (Source::Gamma, j)],
            });
        }
    }
    for j in 0..n {
        for l in 0..n {
            parties.push(InflationParty {
                kind: Party::B,
                sources: [(Source::Gamma, j), (Source::Alpha, l)],
            });
        }
    }
    for l in 0..n {
        for i in 0..n {
            parties.push(InflationParty {
                kind: Party::C,
                sources: [(Source::Alpha, l), (Source::Beta, i)],
            });
        }
    }
    Ok(InflationScenario { level: n, parties })
}

impl InflationScenario {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn parties(&self) -> &[InflationParty] {
        &self.parties
    }

    pub fn party_count(&self) -> usize {
        self.parties.len()
    }

    /// `log2` of the number of events, `3n²`.
    pub fn event_bits(&self) -> usize {
        self.parties.len()
    }

    /// `2^(3n²)`, or `None` if it does not fit in a u64.
    pub fn event_count(&self) -> Option<u64> {
        1u64.checked_shl(self.event_bits() as u32).filter(|_| self.event_bits() < 64)
    }

    fn index_of(&self, kind: Party, first: usize, second: usize) -> usize {
        let n = self.level;
        let block = match kind {
            Party::A => 0,
            Party::B => 1,
            Party::C => 2,
        };
        block * n * n + first * n + second
    }

    /// Image of every party under a relabelling of source copies
    /// (`perms[s][k]` is the new copy index of copy `k` of source `s`).
    pub fn party_permutation(&self, perms: &[Vec<usize>; 3]) -> Vec<usize> {
        self.parties
            .iter()
            .map(|p| {
                let [(s0, c0), (s1, c1)] = p.sources;
                self.index_of(p.kind, perms[s0.index()][c0], perms[s1.index()][c1])
            })
            .collect()
    }

    /// Adjacent transpositions of copy indices, one family per source.
    pub fn generators(&self) -> Vec<Vec<usize>> {
        let n = self.level;
        let id: Vec<usize> = (0..n).collect();
        let mut out = Vec::new();
        for s in 0..3 {
            for k in 0..n.saturating_sub(1) {
                let mut perms = [id.clone(), id.clone(), id.clone()];
                perms[s].swap(k, k + 1);
                out.push(self.party_permutation(&perms));
            }
        }
        out
    }

    /// Every element of S_n × S_n × S_n as a party permutation.
    pub fn group_elements(&self) -> Vec<Vec<usize>> {
        let perms = permutations(self.level);
        let mut out = Vec::with_capacity(perms.len().pow(3));
        for pa in &perms {
            for pb in &perms {
                for pg in &perms {
                    out.push(self.party_permutation(&[pa.clone(), pb.clone(), pg.clone()]));
                }
            }
        }
        out
    }

    /// Apply a party permutation to an event.
    pub fn act(&self, perm: &[usize], event: u64) -> u64 {
        let p = self.parties.len();
        let mut out = 0u64;
        for (k, &img) in perm.iter().enumerate() {
            let bit = (event >> (p - 1 - k)) & 1;
            out |= bit << (p - 1 - img);
        }
        out
    }

    fn check_enumerable(&self) -> Result<u64> {
        if self.level > MAX_ENUMERATED_LEVEL {
            return Err(Error::ScaleGuard(alloc::format!(
                "level {} has 2^{} events; explicit enumeration is limited to level {}",
                self.level,
                self.event_bits(),
                MAX_ENUMERATED_LEVEL
            )));
        }
        Ok(self.event_count().expect("small level"))
    }

    /// Orbit label of every event under the source-copy group, labels
    /// numbered in order of each orbit's smallest event.
    pub fn event_orbits(&self) -> Result<Vec<usize>> {
        let count = self.check_enumerable()? as usize;
        let gens = self.generators();
        let mut label = vec![usize::MAX; count];
        let mut next = 0;
        let mut stack = Vec::new();
        for e in 0..count {
            if label[e] != usize::MAX {
                continue;
            }
            label[e] = next;
            stack.push(e as u64);
            while let Some(x) = stack.pop() {
                for g in &gens {
                    let y = self.act(g, x) as usize;
                    if label[y] == usize::MAX {
                        label[y] = next;
                        stack.push(y as u64);
                    }
                }
            }
            next += 1;
        }
        Ok(label)
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// An injectable party set with its decomposition into connected components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectableSet {
    pub parties: Vec<usize>,
    pub components: Vec<Vec<usize>>,
}

impl InjectableSet {
    /// Original party types of a component, in A, B, C order.
    pub fn component_kinds(&self, s: &InflationScenario, component: usize) -> Vec<Party> {
        let mut k: Vec<Party> = self.components[component].iter().map(|&p| s.parties[p].kind).collect();
        k.sort();
        k
    }
}

fn components(s: &InflationScenario, set: &[usize]) -> Vec<Vec<usize>> {
    let mut comp: Vec<Vec<usize>> = Vec::new();
    let mut seen = vec![false; set.len()];
    for start in 0..set.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut members = vec![start];
        let mut k = 0;
        while k < members.len() {
            let cur = s.parties[set[members[k]]].sources;
            for (other, flag) in seen.iter_mut().enumerate() {
                if !*flag && s.parties[set[other]].sources.iter().any(|src| cur.contains(src)) {
                    *flag = true;
                    members.push(other);
                }
            }
            k += 1;
        }
        let mut parties: Vec<usize> = members.iter().map(|&m| set[m]).collect();
        parties.sort_unstable();
        comp.push(parties);
    }
    comp.sort();
    comp
}

fn component_ok(s: &InflationScenario, comp: &[usize]) -> bool {
    let mut kinds = [false; 3];
    let mut copies: [Option<usize>; 3] = [None; 3];
    for &p in comp {
        let party = &s.parties[p];
        let k = party.kind as usize;
        if kinds[k] {
            return false;
        }
        kinds[k] = true;
        for (src, c) in party.sources {
            match copies[src.index()] {
                Some(prev) if prev != c => return false,
                _ => copies[src.index()] = Some(c),
            }
        }
    }
    true
}

/// Decomposition of `set` if it is injectable.
pub fn injectable(s: &InflationScenario, set: &[usize]) -> Option<InjectableSet> {
    let mut parties = set.to_vec();
    parties.sort_unstable();
    parties.dedup();
    if parties.len() != set.len() || parties.iter().any(|&p| p >= s.party_count()) {
        return None;
    }
    let comps = components(s, &parties);
    comps.iter().all(|c| component_ok(s, c)).then_some(InjectableSet {
        parties,
        components: comps,
    })
}

/// Every nonempty injectable party set of size at most `max_size`, in
/// lexicographic order of sorted party lists.
pub fn injectable_sets(s: &InflationScenario, max_size: usize) -> Result<Vec<InjectableSet>> {
    if max_size > s.party_count() {
        return Err(Error::InvalidArgument(alloc::format!(
            "max_size {max_size} exceeds the {} parties",
            s.party_count()
        )));
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    // Injectability is inherited by subsets, so grow sets depth-first and
    // prune as soon as one fails.
    fn grow(s: &InflationScenario, max: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<InjectableSet>) {
        for p in from..s.party_count() {
            cur.push(p);
            if let Some(set) = injectable(s, cur) {
                out.push(set);
                if cur.len() < max {
                    grow(s, max, p + 1, cur, out);
                }
            }
            cur.pop();
        }
    }
    grow(s, max_size, 0, &mut current, &mut out);
    out.sort_by(|a, b| a.parties.cmp(&b.parties));
    Ok(out)
}

/// Sets in `sets` not strictly contained in another member. Constraints of
/// the others follow from these by marginalization.
pub fn maximal_sets(sets: &[InjectableSet]) -> Vec<InjectableSet> {
    let masks: Vec<u64> = sets.iter().map(|s| s.parties.iter().fold(0u64, |m, &p| m | 1 << p)).collect();
    sets.iter()
        .zip(&masks)
        .filter(|(_, &m)| !masks.iter().any(|&o| o != m && o & m == m))
        .map(|(s, _)| s.clone())
        .collect()
}

/// One representative per orbit of `sets` under the source-copy group.
pub fn orbit_representatives(s: &InflationScenario, sets: &[InjectableSet]) -> Vec<InjectableSet> {
    let group = s.group_elements();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for set in sets {
        let canon = group
            .iter()
            .map(|g| {
                let mut img: Vec<usize> = set.parties.iter().map(|&p| g[p]).collect();
                img.sort_unstable();
                img
            })
            .min()
            .expect("group is nonempty");
        if seen.insert(canon) {
            out.push(set.clone());
        }
    }
    out
}

/// Outcome of deciding one W_v at a given level.
pub fn w_verdict(n: usize, v: &Visibility, max_injectable: usize) -> Result<Verdict> {
    let s = build_scenario(n)?;
    let lp = assemble_reduced_lp(&s, &exact_w_target(v), max_injectable)?;
    solve(&lp, &SimplexOptions::default())
}

/// Bracket of the level-n detection threshold over the W_v family.
pub fn bisect_threshold(
    n: usize,
    v_lo: &Visibility,
    v_hi: &Visibility,
    depth: usize,
    max_injectable: usize,
) -> Result<(Visibility, Visibility)> {
    if v_lo.ratio() >= v_hi.ratio() {
        return Err(Error::InvalidArgument("need v_lo < v_hi".into()));
    }
    if depth == 0 {
        return Ok((*v_lo, *v_hi));
    }
    if !matches!(w_verdict(n, v_lo, max_injectable)?, Verdict::Feasible { .. }) {
        return Err(Error::InvalidArgument(alloc::format!("W_{v_lo} is not feasible at level {n}")));
    }
    if !matches!(w_verdict(n, v_hi, max_injectable)?, Verdict::Infeasible(_)) {
        return Err(Error::InvalidArgument(alloc::format!("W_{v_hi} is not infeasible at level {n}")));
    }
    let (mut lo, mut hi) = (v_lo.ratio(), v_hi.ratio());
    for _ in 0..depth {
        let mid = (lo + hi) / 2;
        let vm = Visibility::new(*mid.numer(), *mid.denom())?;
        match w_verdict(n, &vm, max_injectable)? {
            Verdict::Feasible { .. } => lo = mid,
            Verdict::Infeasible(_) => hi = mid,
        }
    }
    Ok((Visibility::new(*lo.numer(), *lo.denom())?, Visibility::new(*hi.numer(), *hi.denom())?))
}
