//! Finite quasigroup semantics: Cayley tables, conjugate divisions,
//! evaluation, Latin square enumeration, satisfaction fingerprints and a
//! targeted countermodel search.

mod fingerprint;
mod search;

pub use fingerprint::{
    fingerprint, read_fingerprint_cache, write_fingerprint_cache, Fingerprint, FingerprintTable, ModelPool,
};
pub use search::{find_countermodel, find_countermodel_within, SearchFailure, SearchLimits};

use std::fmt;

use thiserror::Error;

use crate::terms::{Equation, Op, Term};

pub type Elem = u8;

/// Largest supported order (row masks are `u32`).
pub const MAX_ORDER: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("table is not a Latin square: {0}")]
    NotLatin(String),
    #[error("unsupported order {0}")]
    BadOrder(usize),
}

/// A finite quasigroup given by its multiplication table, with both
/// conjugate divisions derived from it.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Quasigroup {
    n: usize,
    mul: Vec<Elem>,
    rdiv: Vec<Elem>,
    ldiv: Vec<Elem>,
}

/// Derives `x // y` (the `u` with `u * x = y`) and `x \\ y` (the `v` with
/// `y * v = x`) from a row-major multiplication table.
pub fn derive_divisions(n: usize, mul: &[Elem]) -> Result<(Vec<Elem>, Vec<Elem>), ModelError> {
    if n == 0 || n > MAX_ORDER {
        return Err(ModelError::BadOrder(n));
    }
    if mul.len() != n * n {
        return Err(ModelError::NotLatin(format!("expected {} cells, got {}", n * n, mul.len())));
    }
    const UNSET: Elem = Elem::MAX;
    let mut rdiv = vec![UNSET; n * n];
    let mut ldiv = vec![UNSET; n * n];
    for a in 0..n {
        for b in 0..n {
            let v = mul[a * n + b] as usize;
            if v >= n {
                return Err(ModelError::NotLatin(format!("entry {v} out of range at ({a},{b})")));
            }
            // a * b = v  gives  b // v = a  and  v \\ a = b
            let r = &mut rdiv[b * n + v];
            if *r != UNSET {
                return Err(ModelError::NotLatin(format!("column {b} repeats {v}")));
            }
            *r = a as Elem;
            let l = &mut ldiv[v * n + a];
            if *l != UNSET {
                return Err(ModelError::NotLatin(format!("row {a} repeats {v}")));
            }
            *l = b as Elem;
        }
    }
    Ok((rdiv, ldiv))
}

impl Quasigroup {
    pub fn from_mul(n: usize, mul: Vec<Elem>) -> Result<Quasigroup, ModelError> {
        let (rdiv, ldiv) = derive_divisions(n, &mul)?;
        Ok(Quasigroup { n, mul, rdiv, ldiv })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> usize) -> Result<Quasigroup, ModelError> {
        let mul = (0..n * n).map(|i| f(i / n, i % n) as Elem).collect();
        Quasigroup::from_mul(n, mul)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn mul_table(&self) -> &[Elem] {
        &self.mul
    }

    pub fn rdiv_table(&self) -> &[Elem] {
        &self.rdiv
    }

    pub fn ldiv_table(&self) -> &[Elem] {
        &self.ldiv
    }

    #[inline]
    pub fn apply(&self, op: Op, a: Elem, b: Elem) -> Elem {
        let i = a as usize * self.n + b as usize;
        match op {
            Op::Mul => self.mul[i],
            Op::RDiv => self.rdiv[i],
            Op::LDiv => self.ldiv[i],
        }
    }
}

impl fmt::Debug for Quasigroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Quasigroup({}, {:?})", self.n, self.mul)
    }
}

impl fmt::Display for Quasigroup {
    /// Rows of the multiplication table, one per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.mul.chunks(self.n) {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Values for the variables of a term, indexed by variable id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(pub Vec<Elem>);

impl Assignment {
    pub fn xyz(x: Elem, y: Elem, z: Elem) -> Assignment {
        Assignment(vec![x, y, z])
    }
}

pub fn eval(q: &Quasigroup, t: &Term, a: &Assignment) -> Elem {
    match t {
        Term::Var(v) => a.0[v.0 as usize],
        Term::App(op, l, r) => q.apply(*op, eval(q, l, a), eval(q, r, a)),
    }
}

/// A term flattened to postfix for fast repeated evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Program(Vec<Instr>);

#[derive(Debug, Clone, Copy)]
enum Instr {
    Load(u8),
    Apply(Op),
}

impl Program {
    pub(crate) fn compile(t: &Term) -> Program {
        fn go(t: &Term, out: &mut Vec<Instr>) {
            match t {
                Term::Var(v) => out.push(Instr::Load(v.0 as u8)),
                Term::App(op, l, r) => {
                    go(l, out);
                    go(r, out);
                    out.push(Instr::Apply(*op));
                }
            }
        }
        let mut out = Vec::new();
        go(t, &mut out);
        Program(out)
    }

    #[inline]
    pub(crate) fn run(&self, q: &Quasigroup, vals: &[Elem]) -> Elem {
        let mut stack = [0 as Elem; 32];
        let mut sp = 0;
        for ins in &self.0 {
            match *ins {
                Instr::Load(v) => {
                    stack[sp] = vals[v as usize];
                    sp += 1;
                }
                Instr::Apply(op) => {
                    sp -= 1;
                    stack[sp - 1] = q.apply(op, stack[sp - 1], stack[sp]);
                }
            }
        }
        stack[0]
    }
}

/// An equation compiled for repeated model checking.
#[derive(Debug, Clone)]
pub struct CompiledEquation {
    lhs: Program,
    rhs: Program,
    arity: usize,
}

impl CompiledEquation {
    pub fn new(e: &Equation) -> CompiledEquation {
        CompiledEquation { lhs: Program::compile(&e.lhs), rhs: Program::compile(&e.rhs), arity: e.var_bound() as usize }
    }

    /// First assignment (in lexicographic order) where the sides differ.
    pub fn violation(&self, q: &Quasigroup) -> Option<Assignment> {
        let n = q.order();
        let k = self.arity;
        let mut vals = vec![0 as Elem; k];
        let total = n.pow(k as u32);
        for code in 0..total {
            let mut c = code;
            for slot in vals.iter_mut().rev() {
                *slot = (c % n) as Elem;
                c /= n;
            }
            if self.lhs.run(q, &vals) != self.rhs.run(q, &vals) {
                return Some(Assignment(vals));
            }
        }
        None
    }

    pub fn holds(&self, q: &Quasigroup) -> bool {
        self.violation(q).is_none()
    }
}

/// True iff both sides agree at every assignment.
pub fn satisfies(q: &Quasigroup, e: &Equation) -> bool {
    CompiledEquation::new(e).holds(q)
}

/// A quasigroup together with an assignment where the goal's sides differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub model: Quasigroup,
    pub assignment: Assignment,
}

impl Witness {
    /// Re-checks the witness from scratch: every hypothesis holds and the
    /// goal fails at the assignment.
    pub fn verify(&self, hypotheses: &[Equation], goal: &Equation) -> bool {
        let vals = &self.assignment;
        if vals.0.len() < goal.var_bound() as usize || vals.0.iter().any(|&v| v as usize >= self.model.order()) {
            return false;
        }
        eval(&self.model, &goal.lhs, vals) != eval(&self.model, &goal.rhs, vals)
            && hypotheses.iter().all(|h| satisfies(&self.model, h))
    }
}

/// Every Latin square of order `n`, in row-major lexicographic order of the
/// flattened table.
pub struct LatinSquares {
    n: usize,
    cells: Vec<Elem>,
    row_used: Vec<u32>,
    col_used: Vec<u32>,
    // next candidate value per cell while backtracking
    next: Vec<u8>,
    pos: usize,
    done: bool,
}

pub fn enumerate_latin_squares(n: usize) -> LatinSquares {
    assert!((1..=MAX_ORDER).contains(&n), "order {n} out of range");
    LatinSquares {
        n,
        cells: vec![0; n * n],
        row_used: vec![0; n],
        col_used: vec![0; n],
        next: vec![0; n * n],
        pos: 0,
        done: false,
    }
}

impl LatinSquares {
    fn unplace(&mut self, pos: usize) {
        let (r, c) = (pos / self.n, pos % self.n);
        let bit = 1u32 << self.cells[pos];
        self.row_used[r] &= !bit;
        self.col_used[c] &= !bit;
    }
}

impl Iterator for LatinSquares {
    type Item = Quasigroup;

    fn next(&mut self) -> Option<Quasigroup> {
        let n = self.n;
        let total = n * n;
        if self.done {
            return None;
        }
        if self.pos == total {
            // resume after the previously yielded square
            self.pos = total - 1;
            self.unplace(self.pos);
        }
        loop {
            let pos = self.pos;
            let (r, c) = (pos / n, pos % n);
            let used = self.row_used[r] | self.col_used[c];
            let mut v = self.next[pos] as usize;
            while v < n && used & (1 << v) != 0 {
                v += 1;
            }
            if v < n {
                self.cells[pos] = v as Elem;
                self.row_used[r] |= 1 << v;
                self.col_used[c] |= 1 << v;
                self.next[pos] = v as u8 + 1;
                self.pos += 1;
                if self.pos == total {
                    return Some(
                        Quasigroup::from_mul(n, self.cells.clone()).expect("search keeps rows and columns Latin"),
                    );
                }
                self.next[self.pos] = 0;
            } else {
                if pos == 0 {
                    self.done = true;
                    return None;
                }
                self.pos -= 1;
                self.unplace(self.pos);
            }
        }
    }
}

/// Z_n addition, the usual small test model.
pub fn cyclic_group(n: usize) -> Quasigroup {
    Quasigroup::from_fn(n, |a, b| (a + b) % n).expect("cyclic group table is Latin")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{parse_equation, parse_term, schroeder_laws};

    fn z3_sub() -> Quasigroup {
        Quasigroup::from_fn(3, |a, b| (a + 3 - b) % 3).unwrap()
    }

    #[test]
    fn divisions_of_small_tables() {
        let (r, l) = derive_divisions(1, &[0]).unwrap();
        assert_eq!((r, l), (vec![0], vec![0]));
        let q = cyclic_group(3);
        for x in 0..3 {
            for y in 0..3 {
                // brute-force inversion
                let u = (0..3).find(|&u| q.mul_table()[u * 3 + x] as usize == y).unwrap();
                assert_eq!(q.rdiv_table()[x * 3 + y] as usize, u);
                assert_eq!(u, (y + 3 - x) % 3);
            }
        }
        let (r, _) = derive_divisions(2, &[1, 0, 0, 1]).unwrap();
        assert_eq!(r, vec![1, 0, 0, 1]);
        assert!(matches!(derive_divisions(2, &[0, 0, 1, 1]), Err(ModelError::NotLatin(_))));
        assert!(matches!(derive_divisions(2, &[0, 1, 0, 1]), Err(ModelError::NotLatin(_))));
    }

    #[test]
    fn eval_examples() {
        let q = cyclic_group(3);
        let t = parse_term("x * (y * z)").unwrap();
        assert_eq!(eval(&q, &t, &Assignment::xyz(1, 1, 1)), 0);
        assert_eq!(eval(&q, &parse_term("x // y").unwrap(), &Assignment::xyz(1, 0, 0)), 2);
        assert_eq!(eval(&q, &parse_term("x").unwrap(), &Assignment::xyz(2, 0, 0)), 2);
    }

    #[test]
    fn satisfies_examples() {
        let sch1 = &schroeder_laws()[0];
        assert!(satisfies(&cyclic_group(2), sch1));
        let assoc = parse_equation("x * (y * z) = (x * y) * z").unwrap();
        let q = Quasigroup::from_fn(3, |a, b| (2 * a + 2 * b) % 3).unwrap();
        let a = Assignment::xyz(1, 0, 0);
        assert_eq!((eval(&q, &assoc.lhs, &a), eval(&q, &assoc.rhs, &a)), (2, 1));
        assert!(!satisfies(&q, &assoc));
        let trivial = cyclic_group(1);
        assert!(schroeder_laws().iter().all(|e| satisfies(&trivial, e)));
        assert!(!satisfies(&z3_sub(), sch1));
    }

    #[test]
    fn enumeration_counts() {
        let counts: Vec<usize> = (1..=4).map(|n| enumerate_latin_squares(n).count()).collect();
        assert_eq!(counts, vec![1, 2, 12, 576]);
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let tables: Vec<Vec<Elem>> = enumerate_latin_squares(4).map(|q| q.mul_table().to_vec()).collect();
        assert!(tables.windows(2).all(|w| w[0] < w[1]));
    }
}
