//! Flat (preorder) terms used inside the prover, with the Knuth–Bendix
//! order, matching and unification.
//!
//! A term is a `Vec<Sym>` in Polish notation. Symbols below [`CONST_BASE`]
//! are the three binary operations, `CONST_BASE..VAR_BASE` are constants
//! (frozen goal variables) and everything from [`VAR_BASE`] up is a variable.

use crate::terms::{Op, Term, Var};

pub type Sym = u32;

pub const CONST_BASE: Sym = 3;
pub const VAR_BASE: Sym = 16;
/// Variable ids stay below this bound inside the engine.
pub const MAX_VARS: usize = 128;
/// Offset applied to the inner equation's variables when renaming apart.
pub const RENAME_OFFSET: u32 = 64;

#[inline]
pub fn is_op(s: Sym) -> bool {
    s < CONST_BASE
}

#[inline]
pub fn is_var(s: Sym) -> bool {
    s >= VAR_BASE
}

#[inline]
pub fn var_id(s: Sym) -> usize {
    (s - VAR_BASE) as usize
}

#[inline]
pub fn var_sym(id: usize) -> Sym {
    VAR_BASE + id as Sym
}

pub fn op_sym(op: Op) -> Sym {
    op.index() as Sym
}

/// Index one past the end of the subterm starting at `i`.
#[inline]
pub fn subterm_end(t: &[Sym], mut i: usize) -> usize {
    let mut need = 1usize;
    while need > 0 {
        if is_op(t[i]) {
            need += 2;
        }
        need -= 1;
        i += 1;
    }
    i
}

/// Preorder index of the child `which` (0 or 1) of the application at `i`.
#[inline]
pub fn child(t: &[Sym], i: usize, which: u8) -> usize {
    if which == 0 {
        i + 1
    } else {
        subterm_end(t, i + 1)
    }
}

/// A position as a sequence of child choices, packed into a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Path {
    bits: u64,
    len: u8,
}

impl Path {
    pub const ROOT: Path = Path { bits: 0, len: 0 };

    pub fn child(self, which: u8) -> Path {
        debug_assert!(self.len < 64);
        Path { bits: self.bits | ((which as u64) << self.len), len: self.len + 1 }
    }

    pub fn steps(self) -> Vec<u8> {
        (0..self.len).map(|i| (self.bits >> i & 1) as u8).collect()
    }

    /// Preorder index of this position in `t`.
    pub fn offset_in(self, t: &[Sym]) -> usize {
        let mut i = 0;
        for k in 0..self.len {
            i = child(t, i, (self.bits >> k & 1) as u8);
        }
        i
    }
}

/// Positions of every non-variable subterm in preorder, as `(index, path)`.
pub fn positions(t: &[Sym]) -> Vec<(usize, Path)> {
    fn go(t: &[Sym], i: usize, p: Path, out: &mut Vec<(usize, Path)>) -> usize {
        if is_op(t[i]) {
            out.push((i, p));
            let j = go(t, i + 1, p.child(0), out);
            go(t, j, p.child(1), out)
        } else {
            if !is_var(t[i]) {
                out.push((i, p));
            }
            i + 1
        }
    }
    let mut out = Vec::new();
    go(t, 0, Path::ROOT, &mut out);
    out
}

pub fn from_term(t: &Term, out: &mut Vec<Sym>) {
    match t {
        Term::Var(v) => out.push(var_sym(v.0 as usize)),
        Term::App(op, l, r) => {
            out.push(op_sym(*op));
            from_term(l, out);
            from_term(r, out);
        }
    }
}

pub fn flatten(t: &Term) -> Vec<Sym> {
    let mut out = Vec::new();
    from_term(t, &mut out);
    out
}

/// Freezes variable `v` into constant `v` (goal skolemization).
pub fn freeze(t: &Term) -> Vec<Sym> {
    flatten(t).into_iter().map(|s| if is_var(s) { CONST_BASE + var_id(s) as Sym } else { s }).collect()
}

/// Converts back to a tree; constants thaw into the variable with the same id.
pub fn to_term(t: &[Sym]) -> Term {
    fn go(t: &[Sym], i: &mut usize) -> Term {
        let s = t[*i];
        *i += 1;
        if is_op(s) {
            let l = go(t, i);
            let r = go(t, i);
            Term::app(Op::from_index(s as usize), l, r)
        } else if is_var(s) {
            Term::Var(Var(var_id(s) as u32))
        } else {
            Term::Var(Var(s - CONST_BASE))
        }
    }
    let mut i = 0;
    go(t, &mut i)
}

fn precedence(s: Sym) -> u32 {
    // LDIV > RDIV > MUL > constants
    if is_op(s) {
        100 + s
    } else {
        VAR_BASE - s
    }
}

/// `occ(s) >= occ(t)` for every variable.
fn var_condition(s: &[Sym], t: &[Sym]) -> bool {
    let mut counts = [0i16; MAX_VARS];
    for &x in s {
        if is_var(x) {
            counts[var_id(x)] += 1;
        }
    }
    for &x in t {
        if is_var(x) {
            let c = &mut counts[var_id(x)];
            *c -= 1;
            if *c < 0 {
                return false;
            }
        }
    }
    true
}

/// Knuth–Bendix order with unit weights: `s > t`.
pub fn kbo_gt(s: &[Sym], t: &[Sym]) -> bool {
    if s.len() < t.len() || !var_condition(s, t) {
        return false;
    }
    if s.len() > t.len() {
        return true;
    }
    kbo_gt_same_weight(s, t)
}

fn kbo_gt_same_weight(s: &[Sym], t: &[Sym]) -> bool {
    let (hs, ht) = (s[0], t[0]);
    if is_var(hs) || is_var(ht) {
        // equal weight forces both to be single symbols here
        return false;
    }
    if hs != ht {
        return precedence(hs) > precedence(ht);
    }
    if !is_op(hs) {
        return false;
    }
    let (s1e, t1e) = (subterm_end(s, 1), subterm_end(t, 1));
    let (s1, t1) = (&s[1..s1e], &t[1..t1e]);
    if s1 != t1 {
        kbo_gt(s1, t1)
    } else {
        kbo_gt(&s[s1e..], &t[t1e..])
    }
}

/// Variable bindings as ranges into a subject term.
#[derive(Clone)]
pub struct Matcher {
    bound: Vec<(u32, u32)>,
    touched: Vec<usize>,
}

const UNBOUND: (u32, u32) = (u32::MAX, u32::MAX);

impl Default for Matcher {
    fn default() -> Self {
        Matcher { bound: vec![UNBOUND; MAX_VARS], touched: Vec::new() }
    }
}

impl Matcher {
    fn reset(&mut self) {
        for &v in &self.touched {
            self.bound[v] = UNBOUND;
        }
        self.touched.clear();
    }

    /// Matches `pattern` against the subterm of `subject` starting at `at`.
    pub fn matches(&mut self, pattern: &[Sym], subject: &[Sym], at: usize) -> bool {
        self.reset();
        let mut si = at;
        for &p in pattern {
            if is_var(p) {
                let end = subterm_end(subject, si);
                let v = var_id(p);
                let b = self.bound[v];
                if b == UNBOUND {
                    self.bound[v] = (si as u32, end as u32);
                    self.touched.push(v);
                } else if subject[b.0 as usize..b.1 as usize] != subject[si..end] {
                    return false;
                }
                si = end;
            } else {
                if subject[si] != p {
                    return false;
                }
                si += 1;
            }
        }
        true
    }

    /// Instantiates `t` with the current bindings; `None` if `t` has a
    /// variable the match did not bind.
    pub fn instantiate(&self, t: &[Sym], subject: &[Sym], out: &mut Vec<Sym>) -> bool {
        for &s in t {
            if is_var(s) {
                let b = self.bound[var_id(s)];
                if b == UNBOUND {
                    return false;
                }
                out.extend_from_slice(&subject[b.0 as usize..b.1 as usize]);
            } else {
                out.push(s);
            }
        }
        true
    }

    /// Current bindings as `(var, term)` pairs, sorted by variable.
    pub fn bindings(&self, subject: &[Sym]) -> Vec<(usize, Vec<Sym>)> {
        let mut out: Vec<_> = self
            .touched
            .iter()
            .map(|&v| {
                let b = self.bound[v];
                (v, subject[b.0 as usize..b.1 as usize].to_vec())
            })
            .collect();
        out.sort();
        out
    }
}

/// Syntactic unifier as a triangular substitution.
pub struct Unifier {
    bind: Vec<Option<Vec<Sym>>>,
}

impl Default for Unifier {
    fn default() -> Self {
        Unifier { bind: vec![None; 2 * MAX_VARS] }
    }
}

impl Unifier {
    pub fn clear(&mut self) {
        for b in &mut self.bind {
            *b = None;
        }
    }

    fn occurs(&self, v: usize, t: &[Sym]) -> bool {
        t.iter()
            .any(|&s| is_var(s) && (var_id(s) == v || self.bind[var_id(s)].as_ref().is_some_and(|b| self.occurs(v, b))))
    }

    pub fn unify(&mut self, a: &[Sym], b: &[Sym]) -> bool {
        if is_var(a[0]) {
            if let Some(ba) = self.bind[var_id(a[0])].clone() {
                return self.unify(&ba, b);
            }
        }
        if is_var(b[0]) {
            if let Some(bb) = self.bind[var_id(b[0])].clone() {
                return self.unify(a, &bb);
            }
        }
        match (is_var(a[0]), is_var(b[0])) {
            (true, true) if a[0] == b[0] => true,
            (true, _) => {
                let v = var_id(a[0]);
                if self.occurs(v, b) {
                    return false;
                }
                self.bind[v] = Some(b.to_vec());
                true
            }
            (_, true) => self.unify(b, a),
            _ => {
                if a[0] != b[0] {
                    return false;
                }
                if !is_op(a[0]) {
                    return true;
                }
                let (ae, be) = (subterm_end(a, 1), subterm_end(b, 1));
                self.unify(&a[1..ae], &b[1..be]) && self.unify(&a[ae..], &b[be..])
            }
        }
    }

    /// Applies the substitution exhaustively.
    pub fn apply(&self, t: &[Sym], out: &mut Vec<Sym>) {
        for &s in t {
            if is_var(s) {
                if let Some(b) = &self.bind[var_id(s)] {
                    self.apply(b, out);
                    continue;
                }
            }
            out.push(s);
        }
    }

    pub fn resolved(&self, t: &[Sym]) -> Vec<Sym> {
        let mut out = Vec::with_capacity(t.len());
        self.apply(t, &mut out);
        out
    }
}

/// Shifts every variable id by `by`.
pub fn shift_vars(t: &[Sym], by: u32) -> Vec<Sym> {
    t.iter().map(|&s| if is_var(s) { s + by } else { s }).collect()
}

/// Replaces the subterm at `[at, subterm_end(at))` with `with`.
pub fn replace(t: &[Sym], at: usize, with: &[Sym]) -> Vec<Sym> {
    let end = subterm_end(t, at);
    let mut out = Vec::with_capacity(t.len() - (end - at) + with.len());
    out.extend_from_slice(&t[..at]);
    out.extend_from_slice(with);
    out.extend_from_slice(&t[end..]);
    out
}

/// Renaming of variables to `0, 1, ...` in order of first occurrence across
/// the given terms; returns the renaming table (old id -> new id).
pub fn first_occurrence_renaming<'a>(terms: impl IntoIterator<Item = &'a [Sym]>) -> Vec<Option<u32>> {
    let mut map = vec![None; 2 * MAX_VARS];
    let mut next = 0;
    for t in terms {
        for &s in t {
            if is_var(s) && map[var_id(s)].is_none() {
                map[var_id(s)] = Some(next);
                next += 1;
            }
        }
    }
    map
}

pub fn rename(t: &[Sym], map: &[Option<u32>]) -> Vec<Sym> {
    t.iter()
        .map(|&s| if is_var(s) { var_sym(map[var_id(s)].expect("renaming covers every variable") as usize) } else { s })
        .collect()
}
