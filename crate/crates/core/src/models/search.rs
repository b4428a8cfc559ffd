//! Targeted countermodel search: depth-first filling of a multiplication
//! table under Latin constraints, with the hypotheses used as propagators.
//!
//! Every constraint is expressed on the multiplication table alone. A
//! division `a // b` is known once column `a` contains `b`, and `a \\ b` once
//! row `b` contains `a`, so evaluation and propagation only ever read or
//! write `mul` cells.

use thiserror::Error;

use super::{Assignment, Elem, Quasigroup, Witness, MAX_ORDER};
use crate::terms::{Equation, Op, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SearchFailure {
    #[error("node budget exhausted after {nodes} nodes")]
    BudgetExhausted { nodes: u64 },
    #[error("no countermodel of order at most {max_order}")]
    ExhaustedAllOrders { max_order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub min_order: usize,
    pub max_order: usize,
    pub node_budget: u64,
}

impl SearchLimits {
    pub fn up_to(max_order: usize, node_budget: u64) -> SearchLimits {
        SearchLimits { min_order: 1, max_order, node_budget }
    }
}

/// Looks for a finite quasigroup satisfying every hypothesis and violating
/// `goal`, trying orders `1..=max_order` in turn.
pub fn find_countermodel(
    hypotheses: &[Equation],
    goal: &Equation,
    max_order: usize,
    node_budget: u64,
) -> Result<Witness, SearchFailure> {
    find_countermodel_within(hypotheses, goal, SearchLimits::up_to(max_order, node_budget))
}

pub fn find_countermodel_within(
    hypotheses: &[Equation],
    goal: &Equation,
    limits: SearchLimits,
) -> Result<Witness, SearchFailure> {
    let mut nodes = Vec::new();
    let hyps: Vec<Constraint> = hypotheses.iter().map(|h| Constraint::compile(h, &mut nodes)).collect();
    let goal_c = Constraint::compile(goal, &mut nodes);
    let mut spent = 0u64;
    for n in limits.min_order.max(1)..=limits.max_order.min(MAX_ORDER) {
        for pattern in restricted_growth_strings(goal_c.arity, n) {
            let mut s = Search::new(n, &nodes, &hyps, goal_c, pattern, limits.node_budget - spent);
            let found = s.run();
            spent += s.visited;
            match found {
                Ok(true) => {
                    let model = Quasigroup::from_mul(n, s.cells.clone()).expect("completed table is Latin");
                    let w = Witness { model, assignment: Assignment(s.goal_vals.clone()) };
                    assert!(w.verify(hypotheses, goal), "countermodel search produced an invalid witness");
                    return Ok(w);
                }
                Ok(false) => {}
                Err(Budget) => return Err(SearchFailure::BudgetExhausted { nodes: spent }),
            }
        }
    }
    Err(SearchFailure::ExhaustedAllOrders { max_order: limits.max_order })
}

/// Value patterns for the goal's variables, one per isomorphism type: the
/// first occurrence of each value is the smallest unused one.
fn restricted_growth_strings(len: usize, n: usize) -> Vec<Vec<Elem>> {
    fn go(len: usize, n: usize, used: usize, cur: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for v in 0..=used.min(n - 1) {
            cur.push(v as Elem);
            go(len, n, used.max(v + 1), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(len, n, 0, &mut Vec::with_capacity(len), &mut out);
    out
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Var(u8),
    App(Op, u16, u16),
}

#[derive(Debug, Clone, Copy)]
struct Constraint {
    lhs: u16,
    rhs: u16,
    arity: usize,
}

impl Constraint {
    fn compile(e: &Equation, nodes: &mut Vec<Node>) -> Constraint {
        fn go(t: &Term, nodes: &mut Vec<Node>) -> u16 {
            let node = match t {
                Term::Var(v) => Node::Var(v.0 as u8),
                Term::App(op, l, r) => {
                    let a = go(l, nodes);
                    let b = go(r, nodes);
                    Node::App(*op, a, b)
                }
            };
            nodes.push(node);
            (nodes.len() - 1) as u16
        }
        let lhs = go(&e.lhs, nodes);
        let rhs = go(&e.rhs, nodes);
        Constraint { lhs, rhs, arity: e.var_bound() as usize }
    }
}

const EMPTY: Elem = Elem::MAX;

struct Budget;
struct Conflict;

/// A table fact an evaluation can wait for. With `N = n * n`:
/// `a * n + b` is cell `(a, b)`; `N + c * n + v` is "column `c` contains
/// `v`"; `2N + r * n + v` is "row `r` contains `v`".
type Key = u32;

struct Search<'a> {
    n: usize,
    nodes: &'a [Node],
    hyps: &'a [Constraint],
    goal: Constraint,
    goal_vals: Vec<Elem>,
    cells: Vec<Elem>,
    row_used: Vec<u32>,
    col_used: Vec<u32>,
    // rowpos[r * n + v] = c  iff  mul[r][c] = v
    rowpos: Vec<Elem>,
    // colpos[c * n + v] = r  iff  mul[r][c] = v
    colpos: Vec<Elem>,
    trail: Vec<u16>,
    tuples: Vec<Vec<Elem>>,
    // hypothesis instance `h * stride + t` waits in `watch[key]` until that
    // fact is known; `watch_trail` undoes registrations on backtrack
    stride: u32,
    watch: Vec<Vec<u32>>,
    watch_trail: Vec<Key>,
    queue: Vec<Key>,
    stuck: Vec<Key>,
    visited: u64,
    budget: u64,
}

impl<'a> Search<'a> {
    fn new(
        n: usize,
        nodes: &'a [Node],
        hyps: &'a [Constraint],
        goal: Constraint,
        goal_vals: Vec<Elem>,
        budget: u64,
    ) -> Search<'a> {
        let max_arity = hyps.iter().map(|h| h.arity).max().unwrap_or(0);
        let tuples = (0..=max_arity)
            .map(|k| {
                let total = n.pow(k as u32);
                let mut flat = Vec::with_capacity(total * k);
                for code in 0..total {
                    let mut c = code;
                    let mut t = vec![0; k];
                    for slot in t.iter_mut().rev() {
                        *slot = (c % n) as Elem;
                        c /= n;
                    }
                    flat.extend(t);
                }
                flat
            })
            .collect();
        Search {
            n,
            nodes,
            hyps,
            goal,
            goal_vals,
            cells: vec![EMPTY; n * n],
            row_used: vec![0; n],
            col_used: vec![0; n],
            rowpos: vec![EMPTY; n * n],
            colpos: vec![EMPTY; n * n],
            trail: Vec::with_capacity(n * n),
            tuples,
            stride: n.pow(max_arity as u32) as u32,
            watch: vec![Vec::new(); 3 * n * n],
            watch_trail: Vec::new(),
            queue: Vec::new(),
            stuck: Vec::new(),
            visited: 0,
            budget,
        }
    }

    fn run(&mut self) -> Result<bool, Budget> {
        let mut all = Vec::new();
        for (h, c) in self.hyps.iter().enumerate() {
            let count = self.n.pow(c.arity as u32) as u32;
            all.extend((0..count).map(|t| h as u32 * self.stride + t));
        }
        for inst in all {
            if self.examine(inst).is_err() {
                return Ok(false);
            }
        }
        if self.propagate().is_err() {
            return Ok(false);
        }
        self.dfs()
    }

    #[inline]
    fn lookup(&self, op: Op, a: Elem, b: Elem) -> Result<Elem, Key> {
        let n = self.n;
        let (a, b) = (a as usize, b as usize);
        let (v, key) = match op {
            Op::Mul => (self.cells[a * n + b], a * n + b),
            Op::RDiv => (self.colpos[a * n + b], n * n + a * n + b),
            Op::LDiv => (self.rowpos[b * n + a], 2 * n * n + b * n + a),
        };
        if v == EMPTY {
            Err(key as Key)
        } else {
            Ok(v)
        }
    }

    /// Value of a node, or the first missing fact it needs.
    fn val(&self, id: u16, vals: &[Elem]) -> Result<Elem, Key> {
        match self.nodes[id as usize] {
            Node::Var(v) => Ok(vals[v as usize]),
            Node::App(op, a, b) => {
                let x = self.val(a, vals)?;
                let y = self.val(b, vals)?;
                self.lookup(op, x, y)
            }
        }
    }

    fn assign(&mut self, r: Elem, c: Elem, v: Elem) -> Result<(), Conflict> {
        let n = self.n;
        let (r, c) = (r as usize, c as usize);
        let i = r * n + c;
        let cur = self.cells[i];
        if cur == v {
            return Ok(());
        }
        let bit = 1u32 << v;
        if cur != EMPTY || (self.row_used[r] | self.col_used[c]) & bit != 0 {
            return Err(Conflict);
        }
        self.cells[i] = v;
        self.row_used[r] |= bit;
        self.col_used[c] |= bit;
        self.rowpos[r * n + v as usize] = c as Elem;
        self.colpos[c * n + v as usize] = r as Elem;
        self.trail.push(i as u16);
        let v = v as usize;
        self.queue.extend([i as Key, (n * n + c * n + v) as Key, (2 * n * n + r * n + v) as Key]);
        Ok(())
    }

    fn undo(&mut self, mark: usize, watch_mark: usize) {
        let n = self.n;
        while self.trail.len() > mark {
            let i = self.trail.pop().unwrap() as usize;
            let (r, c) = (i / n, i % n);
            let v = self.cells[i];
            let bit = 1u32 << v;
            self.row_used[r] &= !bit;
            self.col_used[c] &= !bit;
            self.rowpos[r * n + v as usize] = EMPTY;
            self.colpos[c * n + v as usize] = EMPTY;
            self.cells[i] = EMPTY;
        }
        while self.watch_trail.len() > watch_mark {
            let k = self.watch_trail.pop().unwrap();
            self.watch[k as usize].pop();
        }
        self.queue.clear();
    }

    /// Makes `op(a, b) = want` hold by fixing the corresponding `mul` cell.
    fn set_op(&mut self, op: Op, a: Elem, b: Elem, want: Elem) -> Result<(), Conflict> {
        match op {
            Op::Mul => self.assign(a, b, want),
            // a // b = want  <=>  want * a = b
            Op::RDiv => self.assign(want, a, b),
            // a \\ b = want  <=>  b * want = a
            Op::LDiv => self.assign(b, want, a),
        }
    }

    /// The `b` with `op(a, b) = want`, when the table already determines it.
    fn solve_right(&self, op: Op, a: Elem, want: Elem) -> Result<Elem, Key> {
        let n = self.n;
        let (a, w) = (a as usize, want as usize);
        let (v, key) = match op {
            Op::Mul => (self.rowpos[a * n + w], 2 * n * n + a * n + w),
            Op::RDiv => (self.cells[w * n + a], w * n + a),
            Op::LDiv => (self.colpos[w * n + a], n * n + w * n + a),
        };
        if v == EMPTY {
            Err(key as Key)
        } else {
            Ok(v)
        }
    }

    /// The `a` with `op(a, b) = want`, when the table already determines it.
    fn solve_left(&self, op: Op, b: Elem, want: Elem) -> Result<Elem, Key> {
        let n = self.n;
        let (b, w) = (b as usize, want as usize);
        let (v, key) = match op {
            Op::Mul => (self.colpos[b * n + w], n * n + b * n + w),
            Op::RDiv => (self.rowpos[w * n + b], 2 * n * n + w * n + b),
            Op::LDiv => (self.cells[b * n + w], b * n + w),
        };
        if v == EMPTY {
            Err(key as Key)
        } else {
            Ok(v)
        }
    }

    /// Pushes the requirement `node = want` down into the table, noting in
    /// `stuck` every missing fact that would let it go further.
    fn force(&mut self, id: u16, want: Elem, vals: &[Elem]) -> Result<(), Conflict> {
        match self.nodes[id as usize] {
            Node::Var(v) => {
                if vals[v as usize] == want {
                    Ok(())
                } else {
                    Err(Conflict)
                }
            }
            Node::App(op, a, b) => match (self.val(a, vals), self.val(b, vals)) {
                (Ok(x), Ok(y)) => self.set_op(op, x, y, want),
                (Ok(x), Err(kb)) => {
                    self.stuck.push(kb);
                    match self.solve_right(op, x, want) {
                        Ok(y) => self.force(b, y, vals),
                        Err(k) => {
                            self.stuck.push(k);
                            Ok(())
                        }
                    }
                }
                (Err(ka), Ok(y)) => {
                    self.stuck.push(ka);
                    match self.solve_left(op, y, want) {
                        Ok(x) => self.force(a, x, vals),
                        Err(k) => {
                            self.stuck.push(k);
                            Ok(())
                        }
                    }
                }
                (Err(ka), Err(kb)) => {
                    self.stuck.extend([ka, kb]);
                    Ok(())
                }
            },
        }
    }

    /// Checks one hypothesis instance, propagating what it forces, and
    /// registers it to be looked at again when a fact it lacks appears.
    fn examine(&mut self, inst: u32) -> Result<(), Conflict> {
        let (h, t) = ((inst / self.stride) as usize, (inst % self.stride) as usize);
        let c = self.hyps[h];
        let k = c.arity;
        let tuples = std::mem::take(&mut self.tuples);
        let vals = &tuples[k][t * k..(t + 1) * k];
        self.stuck.clear();
        let res = match (self.val(c.lhs, vals), self.val(c.rhs, vals)) {
            (Ok(l), Ok(r)) => {
                if l == r {
                    Ok(())
                } else {
                    Err(Conflict)
                }
            }
            (Ok(l), Err(_)) => self.force(c.rhs, l, vals),
            (Err(_), Ok(r)) => self.force(c.lhs, r, vals),
            (Err(kl), Err(kr)) => {
                self.stuck.extend([kl, kr]);
                Ok(())
            }
        };
        let res = res.and_then(|()| {
            // anything forced may already settle the instance
            match (self.val(c.lhs, vals), self.val(c.rhs, vals)) {
                (Ok(l), Ok(r)) => {
                    self.stuck.clear();
                    if l == r {
                        Ok(())
                    } else {
                        Err(Conflict)
                    }
                }
                (Err(kl), Ok(_)) | (Ok(_), Err(kl)) => {
                    self.stuck.push(kl);
                    Ok(())
                }
                (Err(kl), Err(kr)) => {
                    self.stuck.extend([kl, kr]);
                    Ok(())
                }
            }
        });
        self.tuples = tuples;
        res?;
        let mut stuck = std::mem::take(&mut self.stuck);
        stuck.sort_unstable();
        stuck.dedup();
        for &key in &stuck {
            // a fact may have appeared during forcing; its queue entry
            // will wake the instance anyway
            self.watch[key as usize].push(inst);
            self.watch_trail.push(key);
        }
        self.stuck = stuck;
        Ok(())
    }

    fn known(&self, key: Key) -> bool {
        let nn = (self.n * self.n) as Key;
        let k = (key % nn) as usize;
        match key / nn {
            0 => self.cells[k] != EMPTY,
            1 => self.colpos[k] != EMPTY,
            _ => self.rowpos[k] != EMPTY,
        }
    }

    fn drain(&mut self) -> Result<(), Conflict> {
        while let Some(key) = self.queue.pop() {
            debug_assert!(self.known(key));
            let len = self.watch[key as usize].len();
            for j in 0..len {
                let inst = self.watch[key as usize][j];
                self.examine(inst)?;
            }
        }
        Ok(())
    }

    fn propagate(&mut self) -> Result<(), Conflict> {
        let n = self.n;
        let full = (1u32 << n) - 1;
        loop {
            let before = self.trail.len();
            self.drain()?;
            // Latin singles
            for r in 0..n {
                for c in 0..n {
                    if self.cells[r * n + c] != EMPTY {
                        continue;
                    }
                    let cand = full & !(self.row_used[r] | self.col_used[c]);
                    if cand == 0 {
                        return Err(Conflict);
                    }
                    if cand.count_ones() == 1 {
                        self.assign(r as Elem, c as Elem, cand.trailing_zeros() as Elem)?;
                    }
                }
            }
            for line in 0..n {
                for v in 0..n {
                    let bit = 1u32 << v;
                    if self.row_used[line] & bit == 0 {
                        let mut spots =
                            (0..n).filter(|&c| self.cells[line * n + c] == EMPTY && self.col_used[c] & bit == 0);
                        match (spots.next(), spots.next()) {
                            (None, _) => return Err(Conflict),
                            (Some(c), None) => self.assign(line as Elem, c as Elem, v as Elem)?,
                            _ => {}
                        }
                    }
                    if self.col_used[line] & bit == 0 {
                        let mut spots =
                            (0..n).filter(|&r| self.cells[r * n + line] == EMPTY && self.row_used[r] & bit == 0);
                        match (spots.next(), spots.next()) {
                            (None, _) => return Err(Conflict),
                            (Some(r), None) => self.assign(r as Elem, line as Elem, v as Elem)?,
                            _ => {}
                        }
                    }
                }
            }
            let g = self.goal;
            let same = matches!((self.val(g.lhs, &self.goal_vals), self.val(g.rhs, &self.goal_vals)), (Ok(a), Ok(b)) if a == b);
            if same {
                return Err(Conflict);
            }
            if self.trail.len() == before && self.queue.is_empty() {
                return Ok(());
            }
        }
    }

    fn dfs(&mut self) -> Result<bool, Budget> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(Budget);
        }
        let n = self.n;
        let full = (1u32 << n) - 1;
        let mut best: Option<(usize, u32)> = None;
        for i in 0..n * n {
            if self.cells[i] == EMPTY {
                let cand = full & !(self.row_used[i / n] | self.col_used[i % n]);
                if best.is_none_or(|(_, b)| cand.count_ones() < b.count_ones()) {
                    best = Some((i, cand));
                }
            }
        }
        let Some((i, mut cand)) = best else {
            // complete table: the goal must actually fail
            let g = self.goal;
            let l = self.val(g.lhs, &self.goal_vals);
            let r = self.val(g.rhs, &self.goal_vals);
            return Ok(l != r);
        };
        // elements not yet mentioned anywhere are interchangeable, so one
        // fresh value stands for all of them
        let mut touched = (1u32 << (i / n)) | (1u32 << (i % n));
        for &g in &self.goal_vals {
            touched |= 1 << g;
        }
        for k in 0..n {
            if self.row_used[k] != 0 {
                touched |= self.row_used[k] | (1 << k);
            }
            if self.col_used[k] != 0 {
                touched |= 1 << k;
            }
        }
        let fresh = cand & !touched;
        if fresh != 0 {
            cand = (cand & touched) | (fresh & fresh.wrapping_neg());
        }
        while cand != 0 {
            let v = cand.trailing_zeros() as Elem;
            cand &= cand - 1;
            let (mark, watch_mark) = (self.trail.len(), self.watch_trail.len());
            if self.assign((i / n) as Elem, (i % n) as Elem, v).is_ok() && self.propagate().is_ok() && self.dfs()? {
                return Ok(true);
            }
            self.undo(mark, watch_mark);
        }
        Ok(false)
    }
}
