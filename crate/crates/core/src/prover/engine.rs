//! Unfailing completion with a given-pair loop.
//!
//! Equations live in an append-only store together with how they were
//! derived (input, critical pair, or re-simplification of an earlier entry)
//! and the rewrite steps applied afterwards. Active equations rewrite terms
//! and produce critical pairs; passive critical pairs are recorded lazily
//! (parents and position only) and recomputed when selected. The goal's
//! variables are frozen to constants and the goal is proved once both sides
//! rewrite to the same term.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::time::{Duration, Instant};

use super::flat::*;
use super::proof::{Inference, ProofObject, ProofStep, Side, Subst};
use super::{quasigroup_axioms, ProveResult, ProverConfig, UnknownReason};
use crate::terms::{Equation, Var};

/// Constant below every other ground term; fills unbound right-hand-side
/// variables when rewriting the (ground) goal.
const MIN_CONST: Sym = VAR_BASE - 1;

#[derive(Debug, Clone, Copy)]
enum Origin {
    Axiom(usize),
    Hypothesis(usize),
    CriticalPair { outer: EqRef, inner: EqRef, path: Path },
    Simplified(u32),
}

/// A store entry used in a given direction (`rev`: right to left).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct EqRef {
    id: u32,
    rev: bool,
}

#[derive(Debug, Clone, Copy)]
struct RewriteRec {
    path: Path,
    side: Side,
    by: EqRef,
}

#[derive(Debug, Clone)]
struct Stored {
    lhs: Vec<Sym>,
    rhs: Vec<Sym>,
    origin: Origin,
    rewrites: Vec<RewriteRec>,
}

#[derive(Debug, Clone)]
struct Active {
    id: u32,
    /// `Some(rev)` for an oriented rule, `None` for an unoriented equation.
    orientation: Option<bool>,
    alive: bool,
}

impl Active {
    fn dirs(&self) -> &'static [bool] {
        match self.orientation {
            Some(false) => &[false],
            Some(true) => &[true],
            None => &[false, true],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Pending {
    Reprocess(u32),
    Pair { outer: u32, outer_rev: bool, inner: u32, inner_rev: bool, path: (u64, u8) },
}

struct CpResult {
    lhs: Vec<Sym>,
    rhs: Vec<Sym>,
    outer_subst: Vec<(usize, Vec<Sym>)>,
    inner_subst: Vec<(usize, Vec<Sym>)>,
}

pub(super) struct Engine {
    cfg: ProverConfig,
    store: Vec<Stored>,
    active: Vec<Active>,
    /// active slot of each store id, if currently active
    slot_of: Vec<Option<usize>>,
    /// rewriter slots bucketed by the head symbol of their left side
    /// (ops 0..3, variable-headed 3)
    index: [Vec<(usize, bool)>; 4],
    passive: BinaryHeap<Reverse<(u32, u64, Pending)>>,
    seq: u64,
    matcher: Matcher,
    unifier: Unifier,
    goal: [Vec<Sym>; 2],
    goal_start: [Vec<Sym>; 2],
    goal_log: [Vec<RewriteRec>; 2],
    hyp_count: usize,
}

fn path_of(p: (u64, u8)) -> Path {
    let mut path = Path::ROOT;
    for i in 0..p.1 {
        path = path.child((p.0 >> i & 1) as u8);
    }
    path
}

fn pack(p: Path) -> (u64, u8) {
    let steps = p.steps();
    let bits = steps.iter().enumerate().fold(0u64, |acc, (i, &s)| acc | (s as u64) << i);
    (bits, steps.len() as u8)
}

impl Engine {
    pub(super) fn new(cfg: ProverConfig, hypotheses: &[Equation], goal: &Equation) -> Engine {
        let mut e = Engine {
            cfg,
            store: Vec::new(),
            active: Vec::new(),
            slot_of: Vec::new(),
            index: Default::default(),
            passive: BinaryHeap::new(),
            seq: 0,
            matcher: Matcher::default(),
            unifier: Unifier::default(),
            goal: [freeze(&goal.lhs), freeze(&goal.rhs)],
            goal_start: [freeze(&goal.lhs), freeze(&goal.rhs)],
            goal_log: [Vec::new(), Vec::new()],
            hyp_count: hypotheses.len(),
        };
        for (i, ax) in quasigroup_axioms().iter().enumerate() {
            e.add_input(ax, Origin::Axiom(i));
        }
        for (i, h) in hypotheses.iter().enumerate() {
            e.add_input(h, Origin::Hypothesis(i));
        }
        e
    }

    fn add_input(&mut self, eq: &Equation, origin: Origin) {
        let id = self.push_store(Stored { lhs: flatten(&eq.lhs), rhs: flatten(&eq.rhs), origin, rewrites: Vec::new() });
        let w = (self.store[id as usize].lhs.len() + self.store[id as usize].rhs.len()) as u32;
        self.push_pending(w, Pending::Reprocess(id));
    }

    fn push_store(&mut self, s: Stored) -> u32 {
        self.store.push(s);
        self.slot_of.push(None);
        (self.store.len() - 1) as u32
    }

    fn push_pending(&mut self, weight: u32, p: Pending) {
        self.seq += 1;
        self.passive.push(Reverse((weight, self.seq, p)));
    }

    fn sides(&self, r: EqRef) -> (&[Sym], &[Sym]) {
        let s = &self.store[r.id as usize];
        if r.rev {
            (&s.rhs, &s.lhs)
        } else {
            (&s.lhs, &s.rhs)
        }
    }

    fn is_oriented(&self, id: u32) -> bool {
        self.slot_of[id as usize].is_some_and(|k| self.active[k].orientation.is_some())
    }

    /// Tries every rewriter at the root of `t`.
    fn rewrite_root(&mut self, t: &[Sym], ground: bool) -> Option<(Vec<Sym>, EqRef)> {
        let head = if is_op(t[0]) { t[0] as usize } else { usize::MAX };
        for bucket in [head, 3] {
            if bucket == usize::MAX {
                continue;
            }
            for k in 0..self.index[bucket].len() {
                let (slot, rev) = self.index[bucket][k];
                let a = &self.active[slot];
                if !a.alive {
                    continue;
                }
                let by = EqRef { id: a.id, rev };
                let oriented = a.orientation.is_some();
                let s = &self.store[by.id as usize];
                let (l, r) = if rev { (&s.rhs, &s.lhs) } else { (&s.lhs, &s.rhs) };
                if !self.matcher.matches(l, t, 0) {
                    continue;
                }
                let mut out = Vec::with_capacity(r.len() + t.len());
                if !self.matcher.instantiate(r, t, &mut out) {
                    if !ground {
                        continue;
                    }
                    out.clear();
                    for &x in r.iter() {
                        if is_var(x) {
                            let mut one = Vec::new();
                            if self.matcher.instantiate(&[x], t, &mut one) {
                                out.extend(one);
                            } else {
                                out.push(MIN_CONST);
                            }
                        } else {
                            out.push(x);
                        }
                    }
                }
                if !oriented && !kbo_gt(t, &out) {
                    continue;
                }
                return Some((out, by));
            }
        }
        None
    }

    fn normalize(&mut self, t: Vec<Sym>, path: Path, side: Side, ground: bool, log: &mut Vec<RewriteRec>) -> Vec<Sym> {
        let mut t = t;
        loop {
            if is_op(t[0]) {
                let e1 = subterm_end(&t, 1);
                let l = self.normalize(t[1..e1].to_vec(), path.child(0), side, ground, log);
                let r = self.normalize(t[e1..].to_vec(), path.child(1), side, ground, log);
                let op = t[0];
                t.clear();
                t.push(op);
                t.extend(l);
                t.extend(r);
            }
            match self.rewrite_root(&t, ground) {
                Some((new, by)) => {
                    log.push(RewriteRec { path, side, by });
                    t = new;
                }
                None => return t,
            }
        }
    }

    /// Whether `t` has a subterm rewritable by `by` (non-ground rules only).
    fn reducible_by(&mut self, t: &[Sym], by: EqRef, oriented: bool) -> bool {
        let s = &self.store[by.id as usize];
        let (l, r) = if by.rev { (&s.rhs, &s.lhs) } else { (&s.lhs, &s.rhs) };
        let mut i = 0;
        while i < t.len() {
            if (is_var(l[0]) || t[i] == l[0]) && self.matcher.matches(l, t, i) {
                let mut out = Vec::new();
                if self.matcher.instantiate(r, t, &mut out) {
                    let end = subterm_end(t, i);
                    if oriented || kbo_gt(&t[i..end], &out) {
                        return true;
                    }
                }
            }
            i += 1;
        }
        false
    }

    fn subsumed(&mut self, s: &[Sym], t: &[Sym]) -> bool {
        let mut pair = Vec::with_capacity(s.len() + t.len() + 1);
        pair.push(0);
        pair.extend_from_slice(s);
        pair.extend_from_slice(t);
        for k in 0..self.active.len() {
            if !self.active[k].alive {
                continue;
            }
            let id = self.active[k].id;
            for rev in [false, true] {
                let (l, r) = self.sides(EqRef { id, rev });
                let mut pat = Vec::with_capacity(l.len() + r.len() + 1);
                pat.push(0);
                pat.extend_from_slice(l);
                pat.extend_from_slice(r);
                if self.matcher.matches(&pat, &pair, 0) {
                    return true;
                }
            }
        }
        false
    }

    fn compute_cp(&mut self, outer: EqRef, inner: EqRef, path: Path) -> Option<CpResult> {
        let (l1, r1) = self.sides(outer);
        let (l1, r1) = (l1.to_vec(), r1.to_vec());
        let (l2, r2) = self.sides(inner);
        let (l2, r2) = (shift_vars(l2, RENAME_OFFSET), shift_vars(r2, RENAME_OFFSET));
        let at = path.offset_in(&l1);
        let end = subterm_end(&l1, at);
        self.unifier.clear();
        if !self.unifier.unify(&l1[at..end], &l2) {
            return None;
        }
        let big = self.unifier.resolved(&l1);
        let rhs = self.unifier.resolved(&r1);
        if !self.is_oriented(outer.id) && kbo_gt(&rhs, &big) {
            return None;
        }
        let inner_l = self.unifier.resolved(&l2);
        let inner_r = self.unifier.resolved(&r2);
        if !self.is_oriented(inner.id) && kbo_gt(&inner_r, &inner_l) {
            return None;
        }
        let lhs = replace(&big, path.offset_in(&big), &inner_r);
        // rename to 0.. by first occurrence, then cover any variable that
        // only survives inside the substitution
        let mut map = first_occurrence_renaming([lhs.as_slice(), rhs.as_slice()]);
        let mut next = map.iter().flatten().count() as u32;
        let mut subst_of = |terms: &[Sym], shift: u32, unifier: &Unifier| -> Vec<(usize, Vec<Sym>)> {
            let mut vars: Vec<usize> = terms.iter().filter(|&&s| is_var(s)).map(|&s| var_id(s)).collect();
            vars.sort();
            vars.dedup();
            vars.into_iter()
                .map(|v| {
                    let img = unifier.resolved(&[var_sym(v + shift as usize)]);
                    for &s in &img {
                        if is_var(s) && map[var_id(s)].is_none() {
                            map[var_id(s)] = Some(next);
                            next += 1;
                        }
                    }
                    (v, rename(&img, &map))
                })
                .collect()
        };
        let (ol, or) = self.sides(outer);
        let outer_vars: Vec<Sym> = ol.iter().chain(or).copied().collect();
        let (il, ir) = self.sides(inner);
        let inner_vars: Vec<Sym> = il.iter().chain(ir).copied().collect();
        let outer_subst = subst_of(&outer_vars, 0, &self.unifier);
        let inner_subst = subst_of(&inner_vars, RENAME_OFFSET, &self.unifier);
        Some(CpResult { lhs: rename(&lhs, &map), rhs: rename(&rhs, &map), outer_subst, inner_subst })
    }

    fn generate_pairs(&mut self, new_slot: usize) {
        let new = self.active[new_slot].clone();
        let others: Vec<Active> = self.active.iter().filter(|a| a.alive).cloned().collect();
        for other in &others {
            for &nd in new.dirs() {
                for &od in other.dirs() {
                    let n_ref = EqRef { id: new.id, rev: nd };
                    let o_ref = EqRef { id: other.id, rev: od };
                    self.overlaps(n_ref, o_ref);
                    if other.id != new.id {
                        self.overlaps(o_ref, n_ref);
                    }
                }
            }
        }
    }

    /// Queues every critical pair of `inner` into `outer`'s left side.
    fn overlaps(&mut self, outer: EqRef, inner: EqRef) {
        let l1 = self.sides(outer).0.to_vec();
        let inner_head = self.sides(inner).0[0];
        for (at, path) in positions(&l1) {
            if outer == inner && path == Path::ROOT {
                continue;
            }
            if !is_var(inner_head) && l1[at] != inner_head {
                continue;
            }
            if let Some(cp) = self.compute_cp(outer, inner, path) {
                if cp.lhs == cp.rhs || cp.lhs.len().max(cp.rhs.len()) > self.cfg.max_weight {
                    continue;
                }
                let w = (cp.lhs.len() + cp.rhs.len()) as u32;
                self.push_pending(
                    w,
                    Pending::Pair {
                        outer: outer.id,
                        outer_rev: outer.rev,
                        inner: inner.id,
                        inner_rev: inner.rev,
                        path: pack(path),
                    },
                );
            }
        }
    }

    fn is_alive(&self, id: u32) -> bool {
        self.slot_of[id as usize].is_some_and(|k| self.active[k].alive)
    }

    fn advance_goal(&mut self) -> bool {
        for side in 0..2 {
            let t = std::mem::take(&mut self.goal[side]);
            let mut log = std::mem::take(&mut self.goal_log[side]);
            self.goal[side] = self.normalize(t, Path::ROOT, Side::Rhs, true, &mut log);
            self.goal_log[side] = log;
        }
        self.goal[0] == self.goal[1]
    }

    pub(super) fn run(&mut self) -> ProveResult {
        let start = Instant::now();
        let limit = Duration::from_millis(self.cfg.timeout_ms);
        let mut steps = 0u64;
        if self.advance_goal() {
            return ProveResult::Proved(self.extract());
        }
        while let Some(Reverse((_, _, pending))) = self.passive.pop() {
            let (s, t, origin) = match pending {
                Pending::Reprocess(id) => {
                    let st = &self.store[id as usize];
                    let origin = match st.origin {
                        Origin::Axiom(_) | Origin::Hypothesis(_) if st.rewrites.is_empty() => None,
                        _ => Some(Origin::Simplified(id)),
                    };
                    (st.lhs.clone(), st.rhs.clone(), origin.ok_or(id))
                }
                Pending::Pair { outer, outer_rev, inner, inner_rev, path } => {
                    if !self.is_alive(outer) || !self.is_alive(inner) {
                        continue;
                    }
                    let o = EqRef { id: outer, rev: outer_rev };
                    let i = EqRef { id: inner, rev: inner_rev };
                    let path = path_of(path);
                    let Some(cp) = self.compute_cp(o, i, path) else { continue };
                    (cp.lhs, cp.rhs, Ok(Origin::CriticalPair { outer: o, inner: i, path }))
                }
            };
            steps += 1;
            if steps > self.cfg.max_steps {
                return ProveResult::Unknown(UnknownReason::StepLimit);
            }
            if steps.is_multiple_of(64) && start.elapsed() > limit {
                return ProveResult::Unknown(UnknownReason::Timeout);
            }
            let mut log = Vec::new();
            let s = self.normalize(s, Path::ROOT, Side::Lhs, false, &mut log);
            let t = self.normalize(t, Path::ROOT, Side::Rhs, false, &mut log);
            if s == t || self.subsumed(&s, &t) {
                continue;
            }
            let id = match origin {
                // untouched input: activate the input entry itself
                Err(id) if log.is_empty() => id,
                Err(id) => self.push_store(Stored { lhs: s, rhs: t, origin: Origin::Simplified(id), rewrites: log }),
                Ok(origin) => self.push_store(Stored { lhs: s, rhs: t, origin, rewrites: log }),
            };
            let (s, t) = (&self.store[id as usize].lhs, &self.store[id as usize].rhs);
            let orientation = if kbo_gt(s, t) {
                Some(false)
            } else if kbo_gt(t, s) {
                Some(true)
            } else {
                None
            };
            self.interreduce(id, orientation);
            let slot = self.active.len();
            self.active.push(Active { id, orientation, alive: true });
            self.slot_of[id as usize] = Some(slot);
            for &rev in self.active[slot].dirs() {
                let (l, _) = self.sides(EqRef { id, rev });
                let bucket = if is_var(l[0]) { 3 } else { l[0] as usize };
                self.index[bucket].push((slot, rev));
            }
            if self.advance_goal() {
                return ProveResult::Proved(self.extract());
            }
            self.generate_pairs(slot);
        }
        ProveResult::Unknown(UnknownReason::Saturated)
    }

    /// Retires active equations that the new one can simplify and queues
    /// them for re-simplification.
    fn interreduce(&mut self, id: u32, orientation: Option<bool>) {
        let dirs: &[bool] = match orientation {
            Some(false) => &[false],
            Some(true) => &[true],
            None => &[false, true],
        };
        for k in 0..self.active.len() {
            if !self.active[k].alive {
                continue;
            }
            let other = self.active[k].id;
            let (l, r) = (self.store[other as usize].lhs.clone(), self.store[other as usize].rhs.clone());
            let hit = dirs.iter().any(|&rev| {
                let by = EqRef { id, rev };
                self.reducible_by(&l, by, orientation.is_some()) || self.reducible_by(&r, by, orientation.is_some())
            });
            if hit {
                self.active[k].alive = false;
                let w = (l.len() + r.len()) as u32;
                self.push_pending(w, Pending::Reprocess(other));
            }
        }
    }

    fn extract(&mut self) -> ProofObject {
        let mut needed = BTreeSet::new();
        let mut stack: Vec<u32> = self.goal_log.iter().flatten().map(|r| r.by.id).collect();
        while let Some(id) = stack.pop() {
            if !needed.insert(id) {
                continue;
            }
            let st = &self.store[id as usize];
            match st.origin {
                Origin::CriticalPair { outer, inner, .. } => stack.extend([outer.id, inner.id]),
                Origin::Simplified(src) => stack.push(src),
                Origin::Axiom(_) | Origin::Hypothesis(_) => {}
            }
            stack.extend(st.rewrites.iter().map(|r| r.by.id));
        }
        let mut b = ProofBuilder {
            steps: Vec::new(),
            step_of: vec![None; self.store.len()],
            flipped: vec![None; self.store.len()],
        };
        let axioms = quasigroup_axioms();
        for &id in &needed {
            let st = self.store[id as usize].clone();
            let mut cur = match st.origin {
                Origin::Axiom(i) => {
                    let (l, r) = (flatten(&axioms[i].lhs), flatten(&axioms[i].rhs));
                    (b.push(Inference::Axiom(i + 1), &l, &r), l, r)
                }
                Origin::Hypothesis(i) => {
                    debug_assert!(i < self.hyp_count && st.rewrites.is_empty());
                    (b.push(Inference::Hypothesis(i + 1), &st.lhs, &st.rhs), st.lhs.clone(), st.rhs.clone())
                }
                Origin::Simplified(src) => {
                    let s = &self.store[src as usize];
                    (
                        b.step_of[src as usize].expect("sources precede their simplifications"),
                        s.lhs.clone(),
                        s.rhs.clone(),
                    )
                }
                Origin::CriticalPair { outer, inner, path } => {
                    let cp = self.compute_cp(outer, inner, path).expect("recorded critical pair recomputes");
                    let o = b.reference(outer, &self.store);
                    let i = b.reference(inner, &self.store);
                    let step = b.push(
                        Inference::CriticalPair {
                            outer: o,
                            inner: i,
                            path: path.steps(),
                            outer_subst: to_subst(&cp.outer_subst),
                            inner_subst: to_subst(&cp.inner_subst),
                        },
                        &cp.lhs,
                        &cp.rhs,
                    );
                    (step, cp.lhs, cp.rhs)
                }
            };
            for rw in &st.rewrites {
                cur = self.replay_rewrite(&mut b, cur, *rw, false);
            }
            debug_assert_eq!((&cur.1, &cur.2), (&st.lhs, &st.rhs));
            b.step_of[id as usize] = Some(cur.0);
        }
        // goal chains: t = t, rewritten on the right to the normal form
        let mut ends = Vec::new();
        for side in 0..2 {
            let t0 = self.goal_start[side].clone();
            let mut cur = (b.push(Inference::Reflexivity, &t0, &t0), t0.clone(), t0);
            for rw in self.goal_log[side].clone() {
                cur = self.replay_rewrite(&mut b, cur, rw, true);
            }
            ends.push(cur);
        }
        if ends[0].1 == ends[1].1
            && ends[0].2 == ends[1].2
            && self.goal_log[0].is_empty()
            && self.goal_log[1].is_empty()
        {
            return ProofObject { steps: b.steps };
        }
        let back = b.push(Inference::Symmetry(ends[1].0), &ends[1].2.clone(), &ends[1].1.clone());
        let (l, r) = (ends[0].1.clone(), ends[1].1.clone());
        b.push(Inference::Transitivity(ends[0].0, back), &l, &r);
        ProofObject { steps: b.steps }
    }

    fn replay_rewrite(
        &mut self,
        b: &mut ProofBuilder,
        cur: (usize, Vec<Sym>, Vec<Sym>),
        rw: RewriteRec,
        ground: bool,
    ) -> (usize, Vec<Sym>, Vec<Sym>) {
        let (step, lhs, rhs) = cur;
        let target = if rw.side == Side::Lhs { &lhs } else { &rhs };
        let at = rw.path.offset_in(target);
        let (l, r) = self.sides(rw.by);
        let (l, r) = (l.to_vec(), r.to_vec());
        assert!(self.matcher.matches(&l, target, at), "recorded rewrite no longer matches");
        let mut subst: Vec<(usize, Vec<Sym>)> = self.matcher.bindings(target);
        let mut inst = Vec::new();
        for &x in &r {
            if is_var(x) {
                match subst.iter().find(|(v, _)| *v == var_id(x)) {
                    Some((_, img)) => inst.extend_from_slice(img),
                    None => {
                        assert!(ground, "extra rule variable outside the goal");
                        subst.push((var_id(x), vec![MIN_CONST]));
                        inst.push(MIN_CONST);
                    }
                }
            } else {
                inst.push(x);
            }
        }
        let new_target = replace(target, at, &inst);
        let (new_l, new_r) = if rw.side == Side::Lhs { (new_target, rhs) } else { (lhs, new_target) };
        let rule = b.reference(rw.by, &self.store);
        subst.sort();
        subst.dedup();
        let s = b.push(
            Inference::Rewrite { premise: step, rule, side: rw.side, path: rw.path.steps(), subst: to_subst(&subst) },
            &new_l,
            &new_r,
        );
        (s, new_l, new_r)
    }
}

fn to_subst(pairs: &[(usize, Vec<Sym>)]) -> Subst {
    Subst(pairs.iter().map(|(v, t)| (Var(*v as u32), to_term(t))).collect())
}

struct ProofBuilder {
    steps: Vec<ProofStep>,
    step_of: Vec<Option<usize>>,
    flipped: Vec<Option<usize>>,
}

impl ProofBuilder {
    fn push(&mut self, inference: Inference, l: &[Sym], r: &[Sym]) -> usize {
        let conclusion = Equation::new(to_term(l), to_term(r));
        self.steps.push(ProofStep { inference, conclusion });
        self.steps.len() - 1
    }

    fn reference(&mut self, r: EqRef, store: &[Stored]) -> usize {
        let base = self.step_of[r.id as usize].expect("premises are emitted first");
        if !r.rev {
            return base;
        }
        if let Some(s) = self.flipped[r.id as usize] {
            return s;
        }
        let st = &store[r.id as usize];
        let s = self.push(Inference::Symmetry(base), &st.rhs, &st.lhs);
        self.flipped[r.id as usize] = Some(s);
        s
    }
}
