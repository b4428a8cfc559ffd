//! Equivalence classes of single laws, logically closed sets of class
//! representatives, and the lattice they form.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::oracle::{Oracle, Query, Verdict};
use crate::par;
use crate::terms::LAW_COUNT;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClosureError {
    #[error("{} implication queries stayed unresolved, first {}", .0.len(), .0[0])]
    UnresolvedPairs(Vec<String>),
    #[error("{0} classes do not fit a 64-bit closed set")]
    TooManyClasses(usize),
}

/// Partition of the 990 laws into equivalence classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTable {
    /// class position per law index (slot 0 unused)
    class_of: Vec<usize>,
    /// members of each class, ascending; the first is the representative
    members: Vec<Vec<usize>>,
    unresolved: Vec<Query>,
}

impl ClassTable {
    /// Builds a table from explicit classes; they must partition 1..=990.
    pub fn from_classes(mut classes: Vec<Vec<usize>>) -> ClassTable {
        for c in &mut classes {
            c.sort_unstable();
        }
        classes.sort();
        let mut class_of = vec![usize::MAX; LAW_COUNT + 1];
        for (k, c) in classes.iter().enumerate() {
            for &i in c {
                assert_eq!(class_of[i], usize::MAX, "law {i} in two classes");
                class_of[i] = k;
            }
        }
        assert!(class_of[1..].iter().all(|&k| k != usize::MAX), "classes must cover every law");
        ClassTable { class_of, members: classes, unresolved: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Representatives (lowest member of each class), ascending.
    pub fn reps(&self) -> Vec<usize> {
        self.members.iter().map(|m| m[0]).collect()
    }

    pub fn rep(&self, class: usize) -> usize {
        self.members[class][0]
    }

    pub fn members(&self, class: usize) -> &[usize] {
        &self.members[class]
    }

    pub fn class_of(&self, law: usize) -> usize {
        self.class_of[law]
    }

    pub fn rep_of(&self, law: usize) -> usize {
        self.rep(self.class_of[law])
    }

    /// Queries left Unknown while building (only in provisional mode).
    pub fn unresolved(&self) -> &[Query] {
        &self.unresolved
    }
}

/// Splits laws into classes by mutual implication. Laws are first grouped by
/// fingerprint (when the oracle has a table); inside a group each remaining
/// law is compared both ways with the group's lowest remaining law only,
/// relying on transitivity for the rest.
pub fn build_classes(oracle: &mut Oracle, provisional: bool) -> Result<ClassTable, ClosureError> {
    let mut groups: BTreeMap<Vec<u64>, Vec<usize>> = BTreeMap::new();
    for i in 1..=LAW_COUNT {
        let key = oracle.table().map_or_else(Vec::new, |t| t.get(i).bits.clone());
        groups.entry(key).or_default().push(i);
    }
    let mut classes = Vec::new();
    let mut unresolved = Vec::new();
    for mut pending in groups.into_values() {
        while let Some((&rep, rest)) = pending.split_first() {
            let queries: Vec<Query> =
                rest.iter().flat_map(|&m| [Query::single(rep, m), Query::single(m, rep)]).collect();
            let verdicts = oracle.decide_batch(&queries);
            let mut class = vec![rep];
            let mut next = Vec::new();
            for (k, &m) in rest.iter().enumerate() {
                let (there, back) = (&verdicts[2 * k], &verdicts[2 * k + 1]);
                for (q, v) in [(&queries[2 * k], there), (&queries[2 * k + 1], back)] {
                    if v.is_unknown() {
                        unresolved.push(q.clone());
                    }
                }
                if there.is_implies() && back.is_implies() {
                    class.push(m);
                } else {
                    next.push(m);
                }
            }
            classes.push(class);
            pending = next;
        }
    }
    if !unresolved.is_empty() && !provisional {
        return Err(ClosureError::UnresolvedPairs(unresolved.iter().map(Query::to_string).collect()));
    }
    let mut table = ClassTable::from_classes(classes);
    table.unresolved = unresolved;
    Ok(table)
}

/// A set of class positions (bit `k` = class `k` of a [`ClassTable`]).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClosedSet(pub u64);

impl ClosedSet {
    pub const EMPTY: ClosedSet = ClosedSet(0);

    pub fn singleton(k: usize) -> ClosedSet {
        ClosedSet(1 << k)
    }

    pub fn full(n: usize) -> ClosedSet {
        ClosedSet(if n >= 64 { u64::MAX } else { (1u64 << n) - 1 })
    }

    pub fn contains(self, k: usize) -> bool {
        self.0 >> k & 1 == 1
    }

    pub fn with(self, k: usize) -> ClosedSet {
        ClosedSet(self.0 | 1 << k)
    }

    pub fn union(self, o: ClosedSet) -> ClosedSet {
        ClosedSet(self.0 | o.0)
    }

    pub fn intersection(self, o: ClosedSet) -> ClosedSet {
        ClosedSet(self.0 & o.0)
    }

    pub fn is_subset(self, o: ClosedSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&k| self.contains(k))
    }

    pub fn from_positions(ks: impl IntoIterator<Item = usize>) -> ClosedSet {
        ks.into_iter().fold(ClosedSet::EMPTY, ClosedSet::with)
    }

    /// Every law in the member classes, ascending.
    pub fn expanded(self, classes: &ClassTable) -> Vec<usize> {
        let mut out: Vec<usize> = self.iter().flat_map(|k| classes.members(k).iter().copied()).collect();
        out.sort_unstable();
        out
    }
}

impl fmt::Display for ClosedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ks: Vec<String> = self.iter().map(|k| k.to_string()).collect();
        write!(f, "{{{}}}", ks.join(","))
    }
}

/// Counters for oracle use while closing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CloseStats {
    pub queries: usize,
    /// candidates settled by transitivity without an oracle call
    pub skipped: usize,
}

/// Closure computation over representatives, reusing single-law closures
/// and known closed sets to skip queries decided by transitivity.
pub struct Closer<'a> {
    oracle: &'a mut Oracle,
    classes: &'a ClassTable,
    reps: Vec<usize>,
    singles: Vec<Option<ClosedSet>>,
    known: Vec<ClosedSet>,
    provisional: bool,
    unresolved: Vec<Query>,
    stats: CloseStats,
}

impl<'a> Closer<'a> {
    pub fn new(oracle: &'a mut Oracle, classes: &'a ClassTable, provisional: bool) -> Result<Closer<'a>, ClosureError> {
        if classes.len() > 64 {
            return Err(ClosureError::TooManyClasses(classes.len()));
        }
        Ok(Closer {
            oracle,
            classes,
            reps: classes.reps(),
            singles: vec![None; classes.len()],
            known: Vec::new(),
            provisional,
            unresolved: Vec::new(),
            stats: CloseStats::default(),
        })
    }

    pub fn stats(&self) -> CloseStats {
        self.stats
    }

    pub fn unresolved(&self) -> &[Query] {
        &self.unresolved
    }

    pub fn oracle(&mut self) -> &mut Oracle {
        self.oracle
    }

    /// Closure of one representative, memoized.
    pub fn single(&mut self, k: usize) -> Result<ClosedSet, ClosureError> {
        if let Some(s) = self.singles[k] {
            return Ok(s);
        }
        let s = self.close(ClosedSet::singleton(k))?;
        self.singles[k] = Some(s);
        Ok(s)
    }

    /// All single-law closures.
    pub fn singles(&mut self) -> Result<Vec<ClosedSet>, ClosureError> {
        (0..self.reps.len()).map(|k| self.single(k)).collect()
    }

    /// Every representative implied by the generators. Known closures give
    /// both a lower bound (consequences of implied laws) and an upper bound
    /// (a known closed superset of the generators excludes everything it
    /// lacks); only the gap is sent to the oracle.
    pub fn close(&mut self, gens: ClosedSet) -> Result<ClosedSet, ClosureError> {
        self.close_from(gens, gens)
    }

    /// As [`Closer::close`], starting from a set already known to follow
    /// from `gens`.
    pub fn close_from(&mut self, gens: ClosedSet, lower: ClosedSet) -> Result<ClosedSet, ClosureError> {
        let n = self.reps.len();
        let mut lower = gens.union(lower);
        for k in lower.iter() {
            if let Some(s) = self.singles[k] {
                lower = lower.union(s);
            }
        }
        let mut upper =
            self.known.iter().filter(|c| lower.is_subset(**c)).fold(ClosedSet::full(n), |a, c| a.intersection(*c));
        let width = par::width().max(1);
        let gap = upper.iter().filter(|&k| !lower.contains(k)).count();
        let mut asked = 0;
        loop {
            let open: Vec<usize> = upper.iter().filter(|&k| !lower.contains(k)).collect();
            if open.is_empty() {
                break;
            }
            // strongest candidates first: their closures settle the most
            let mut batch = open.clone();
            batch.sort_by_key(|&k| std::cmp::Reverse(self.singles[k].map_or(0, ClosedSet::len)));
            batch.truncate(width);
            // everything in `lower` follows from `gens`, so it may be assumed
            let hyps: Vec<usize> = lower.iter().map(|k| self.reps[k]).collect();
            let queries: Vec<Query> =
                batch.iter().map(|&k| Query::new(hyps.iter().copied(), self.reps[k]).expect("valid indices")).collect();
            let verdicts = self.oracle.decide_batch(&queries);
            asked += queries.len();
            for ((k, q), v) in batch.into_iter().zip(queries).zip(verdicts) {
                match v {
                    Verdict::Implies(_) => {
                        lower = lower.with(k).union(self.singles[k].unwrap_or_default());
                    }
                    Verdict::NotImplies(_) => {
                        // anything implying k is out as well
                        upper = ClosedSet(upper.0 & !(1 << k));
                        for j in upper.iter().collect::<Vec<_>>() {
                            if !lower.contains(j) && self.singles[j].is_some_and(|s| s.contains(k)) {
                                upper = ClosedSet(upper.0 & !(1 << j));
                            }
                        }
                    }
                    Verdict::Unknown(_) => {
                        self.unresolved.push(q);
                        if !self.provisional {
                            return Err(ClosureError::UnresolvedPairs(
                                self.unresolved.iter().map(Query::to_string).collect(),
                            ));
                        }
                        upper = ClosedSet(upper.0 & !(1 << k));
                    }
                }
            }
        }
        self.stats.queries += asked;
        self.stats.skipped += gap - asked;
        debug_assert!(lower.is_subset(upper));
        if !self.known.contains(&lower) {
            self.known.push(lower);
        }
        Ok(lower)
    }

    /// Worklist search over conjunctions: start from the empty set and every
    /// single-law closure, then close each known set extended by each
    /// representative it lacks, until nothing new appears.
    pub fn enumerate(&mut self) -> Result<SemilatticeModel, ClosureError> {
        let singles = self.singles()?;
        let mut family: Vec<(ClosedSet, ClosedSet)> = vec![(ClosedSet::EMPTY, ClosedSet::EMPTY)];
        let mut seen: HashMap<ClosedSet, usize> = HashMap::from([(ClosedSet::EMPTY, 0)]);
        for (k, &s) in singles.iter().enumerate() {
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(s) {
                e.insert(family.len());
                family.push((s, ClosedSet::singleton(k)));
            }
        }
        let mut memo: HashMap<ClosedSet, ClosedSet> = HashMap::new();
        let mut i = 0;
        while i < family.len() {
            let (a, gens) = family[i];
            for (k, &single) in singles.iter().enumerate() {
                if a.contains(k) {
                    continue;
                }
                let lower = a.union(single);
                let b = if seen.contains_key(&lower) {
                    lower
                } else if let Some(&b) = memo.get(&lower) {
                    b
                } else if a.is_subset(single) {
                    single
                } else {
                    let b = self.close_from(gens.with(k), lower)?;
                    memo.insert(lower, b);
                    b
                };
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(b) {
                    e.insert(family.len());
                    family.push((b, gens.with(k)));
                }
            }
            i += 1;
        }
        let mut model = SemilatticeModel::new(self.classes.clone(), family);
        model.unresolved = self.unresolved.clone();
        Ok(model)
    }
}

/// All closed sets with their lattice operations.
#[derive(Debug, Clone)]
pub struct SemilatticeModel {
    classes: ClassTable,
    /// sorted by expanded size, then by expanded law list
    sets: Vec<ClosedSet>,
    /// generators each set was discovered from
    generators: Vec<ClosedSet>,
    unresolved: Vec<Query>,
}

impl SemilatticeModel {
    /// Wraps `(set, generators)` pairs, sorting them into canonical order.
    pub fn new(classes: ClassTable, family: Vec<(ClosedSet, ClosedSet)>) -> SemilatticeModel {
        let mut keyed: Vec<(Vec<usize>, ClosedSet, ClosedSet)> =
            family.into_iter().map(|(s, g)| (s.expanded(&classes), s, g)).collect();
        keyed.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        keyed.dedup_by(|a, b| a.1 == b.1);
        SemilatticeModel {
            sets: keyed.iter().map(|k| k.1).collect(),
            generators: keyed.iter().map(|k| k.2).collect(),
            classes,
            unresolved: Vec::new(),
        }
    }

    pub fn classes(&self) -> &ClassTable {
        &self.classes
    }

    pub fn sets(&self) -> &[ClosedSet] {
        &self.sets
    }

    pub fn generators(&self, i: usize) -> ClosedSet {
        self.generators[i]
    }

    pub fn unresolved(&self) -> &[Query] {
        &self.unresolved
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn position(&self, s: ClosedSet) -> Option<usize> {
        self.sets.iter().position(|&x| x == s)
    }

    /// Smallest member containing `s` (the closure of `s`, given that the
    /// family is complete).
    pub fn closure_of(&self, s: ClosedSet) -> ClosedSet {
        self.sets
            .iter()
            .filter(|c| s.is_subset(**c))
            .fold(ClosedSet::full(self.classes.len()), |a, c| a.intersection(*c))
    }

    pub fn join(&self, a: ClosedSet, b: ClosedSet) -> ClosedSet {
        self.closure_of(a.union(b))
    }

    pub fn meet(&self, a: ClosedSet, b: ClosedSet) -> ClosedSet {
        a.intersection(b)
    }

    /// `a` implies `b` when every law of `b` is in `a`.
    pub fn implies(&self, a: ClosedSet, b: ClosedSet) -> bool {
        b.is_subset(a)
    }

    /// Covering pairs `(lower, upper)` of the containment order, as indices
    /// into [`SemilatticeModel::sets`].
    pub fn hasse_edges(&self) -> Vec<(usize, usize)> {
        let n = self.sets.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (self.sets[i], self.sets[j]);
                if a == b || !a.is_subset(b) {
                    continue;
                }
                let covered = (0..n).any(|k| {
                    let c = self.sets[k];
                    c != a && c != b && a.is_subset(c) && c.is_subset(b)
                });
                if !covered {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// All smallest generator sets of `s`, each as a set of class positions.
    pub fn minimal_generators(&self, s: ClosedSet) -> Vec<ClosedSet> {
        let members: Vec<usize> = s.iter().collect();
        for size in 0..=members.len() {
            let mut found = Vec::new();
            for_each_subset(&members, size, &mut |g| {
                if self.closure_of(g) == s {
                    found.push(g);
                }
            });
            if !found.is_empty() {
                return found;
            }
        }
        unreachable!("a closed set generates itself")
    }

    /// Minimal generator count per set, in model order.
    pub fn generator_counts(&self) -> Vec<usize> {
        self.sets.iter().map(|&s| self.minimal_generators(s)[0].len()).collect()
    }

    /// Number of sets needing exactly `k` generators, for `k = 0..`.
    pub fn histogram(&self) -> Vec<usize> {
        let counts = self.generator_counts();
        let mut h = vec![0; counts.iter().max().map_or(0, |m| m + 1)];
        for c in counts {
            h[c] += 1;
        }
        h
    }
}

fn for_each_subset(items: &[usize], size: usize, f: &mut impl FnMut(ClosedSet)) {
    fn go(items: &[usize], size: usize, acc: ClosedSet, f: &mut impl FnMut(ClosedSet)) {
        if size == 0 {
            f(acc);
            return;
        }
        if items.len() < size {
            return;
        }
        go(&items[1..], size - 1, acc.with(items[0]), f);
        go(&items[1..], size, acc, f);
    }
    go(items, size, ClosedSet::EMPTY, f)
}
