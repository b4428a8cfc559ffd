//! Term and equation syntax, the generator for the 990 Schröder laws, and
//! their canonical forms under side swap and variable relabeling.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("malformed law: {0}")]
    MalformedLaw(String),
    #[error("not one of the 990 laws: {0}")]
    NotInList(String),
}

/// The three quasigroup operations, ordered `Mul < RDiv < LDiv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    /// `x * y`
    Mul,
    /// `x // y`, the unique `u` with `u * x = y`.
    RDiv,
    /// `x \\ y`, the unique `v` with `y * v = x`.
    LDiv,
}

impl Op {
    pub const ALL: [Op; 3] = [Op::Mul, Op::RDiv, Op::LDiv];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Mul => "*",
            Op::RDiv => "//",
            Op::LDiv => "\\\\",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Op {
        Op::ALL[i]
    }
}

/// A variable. Ids 0, 1, 2 print as `x`, `y`, `z`; larger ids as `v3`, `v4`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

impl Var {
    pub const X: Var = Var(0);
    pub const Y: Var = Var(1);
    pub const Z: Var = Var(2);
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => f.write_str("x"),
            1 => f.write_str("y"),
            2 => f.write_str("z"),
            n => write!(f, "v{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    App(Op, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(v: u32) -> Term {
        Term::Var(Var(v))
    }

    pub fn app(op: Op, left: Term, right: Term) -> Term {
        Term::App(op, Box::new(left), Box::new(right))
    }

    /// Number of symbols (variables plus operations).
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Variables in left-to-right reading order, with repetitions.
    pub fn var_occurrences(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => out.push(*v),
            Term::App(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn map_vars(&self, f: &mut impl FnMut(Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(*v),
            Term::App(op, l, r) => Term::app(*op, l.map_vars(f), r.map_vars(f)),
        }
    }

    /// Subterm at a path of child indices (0 = left, 1 = right).
    pub fn at(&self, path: &[u8]) -> Option<&Term> {
        let mut t = self;
        for &step in path {
            match t {
                Term::Var(_) => return None,
                Term::App(_, l, r) => t = if step == 0 { l } else { r },
            }
        }
        Some(t)
    }

    /// Copy of `self` with the subterm at `path` replaced.
    pub fn replace_at(&self, path: &[u8], with: Term) -> Option<Term> {
        match path.split_first() {
            None => Some(with),
            Some((&step, rest)) => match self {
                Term::Var(_) => None,
                Term::App(op, l, r) => {
                    if step == 0 {
                        Some(Term::app(*op, l.replace_at(rest, with)?, (**r).clone()))
                    } else {
                        Some(Term::app(*op, (**l).clone(), r.replace_at(rest, with)?))
                    }
                }
            },
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_term(self))
    }
}

/// Renders a term with every nested application parenthesized and the
/// outermost one bare: `x * (y // z)`.
pub fn render_term(t: &Term) -> String {
    let mut out = String::new();
    render_into(t, true, &mut out);
    out
}

fn render_into(t: &Term, top: bool, out: &mut String) {
    match t {
        Term::Var(v) => out.push_str(&v.to_string()),
        Term::App(op, l, r) => {
            if !top {
                out.push('(');
            }
            render_into(l, false, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            render_into(r, false, out);
            if !top {
                out.push(')');
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Open,
    Close,
    Var(u32),
    Op(Op),
    Eq,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, TermError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' => {
                i += 1;
                continue;
            }
            b'(' => out.push((start, Token::Open)),
            b')' => out.push((start, Token::Close)),
            b'=' => out.push((start, Token::Eq)),
            b'*' => out.push((start, Token::Op(Op::Mul))),
            b'x' => out.push((start, Token::Var(0))),
            b'y' => out.push((start, Token::Var(1))),
            b'z' => out.push((start, Token::Var(2))),
            b'/' | b'\\' => {
                if bytes.get(i + 1) != Some(&c) {
                    return Err(TermError::Parse { pos: i, msg: format!("expected '{0}{0}'", c as char) });
                }
                let op = if c == b'/' { Op::RDiv } else { Op::LDiv };
                out.push((start, Token::Op(op)));
                i += 2;
                continue;
            }
            b'v' => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let id: u32 = text[i + 1..j]
                    .parse()
                    .map_err(|_| TermError::Parse { pos: i, msg: "expected variable number after 'v'".into() })?;
                out.push((start, Token::Var(id)));
                i = j;
                continue;
            }
            _ => return Err(TermError::Parse { pos: i, msg: format!("unexpected character {:?}", c as char) }),
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |(p, _)| *p)
    }

    fn error<T>(&self, msg: &str) -> Result<T, TermError> {
        Err(TermError::Parse { pos: self.offset(), msg: msg.to_string() })
    }

    // expr := atom (OP atom)?
    fn expr(&mut self) -> Result<Term, TermError> {
        let left = self.atom()?;
        if let Some(Token::Op(op)) = self.peek().cloned() {
            self.pos += 1;
            let right = self.atom()?;
            Ok(Term::app(op, left, right))
        } else {
            Ok(left)
        }
    }

    fn atom(&mut self) -> Result<Term, TermError> {
        match self.peek().cloned() {
            Some(Token::Var(v)) => {
                self.pos += 1;
                Ok(Term::var(v))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let t = self.expr()?;
                if self.peek() != Some(&Token::Close) {
                    return self.error("expected ')'");
                }
                self.pos += 1;
                Ok(t)
            }
            _ => self.error("expected variable or '('"),
        }
    }
}

/// Parses a term such as `x * (y // z)`. Nested applications must be
/// parenthesized.
pub fn parse_term(text: &str) -> Result<Term, TermError> {
    let mut p = Parser { tokens: tokenize(text)?, pos: 0, len: text.len() };
    let t = p.expr()?;
    if p.peek().is_some() {
        return p.error("unexpected trailing input");
    }
    Ok(t)
}

/// Parses `TERM = TERM`.
pub fn parse_equation(text: &str) -> Result<Equation, TermError> {
    let mut p = Parser { tokens: tokenize(text)?, pos: 0, len: text.len() };
    let lhs = p.expr()?;
    if p.peek() != Some(&Token::Eq) {
        return p.error("expected '='");
    }
    p.pos += 1;
    let rhs = p.expr()?;
    if p.peek().is_some() {
        return p.error("unexpected trailing input");
    }
    Ok(Equation::new(lhs, rhs))
}

#[derive(Debug, Clone)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
    /// Position (1-based) in the generated list, when known.
    pub index: Option<usize>,
}

impl PartialEq for Equation {
    fn eq(&self, other: &Self) -> bool {
        self.lhs == other.lhs && self.rhs == other.rhs
    }
}

impl Eq for Equation {}

impl std::hash::Hash for Equation {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.lhs.hash(state);
        self.rhs.hash(state);
    }
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term) -> Equation {
        Equation { lhs, rhs, index: None }
    }

    pub fn flipped(&self) -> Equation {
        Equation::new(self.rhs.clone(), self.lhs.clone())
    }

    /// Largest variable id plus one.
    pub fn var_bound(&self) -> u32 {
        self.lhs.var_occurrences().into_iter().chain(self.rhs.var_occurrences()).map(|v| v.0 + 1).max().unwrap_or(0)
    }

    /// Renames variables to 0, 1, 2, ... in order of first occurrence.
    pub fn normalized_vars(&self) -> Equation {
        let mut map: HashMap<Var, u32> = HashMap::new();
        let mut f = |v: Var| {
            let n = map.len() as u32;
            Term::var(*map.entry(v).or_insert(n))
        };
        let lhs = self.lhs.map_vars(&mut f);
        let rhs = self.rhs.map_vars(&mut f);
        Equation::new(lhs, rhs)
    }

    /// Equal up to a bijective renaming of variables.
    pub fn is_variant_of(&self, other: &Equation) -> bool {
        self.normalized_vars() == other.normalized_vars()
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// Association shape of one side of a Schröder law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Shape {
    /// `a ? (b ? c)`
    Right,
    /// `(a ? b) ? c`
    Left,
}

/// One side of a Schröder law: two operations in written order and the
/// variables in reading order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SideForm {
    pub shape: Shape,
    pub ops: [Op; 2],
    pub vars: [Var; 3],
}

impl SideForm {
    pub fn of(t: &Term) -> Option<SideForm> {
        let Term::App(outer, l, r) = t else { return None };
        let (shape, ops, vars) = match (&**l, &**r) {
            (Term::Var(a), Term::App(inner, b, c)) => match (&**b, &**c) {
                (Term::Var(b), Term::Var(c)) => (Shape::Right, [*outer, *inner], [*a, *b, *c]),
                _ => return None,
            },
            (Term::App(inner, a, b), Term::Var(c)) => match (&**a, &**b) {
                (Term::Var(a), Term::Var(b)) => (Shape::Left, [*inner, *outer], [*a, *b, *c]),
                _ => return None,
            },
            _ => return None,
        };
        let mut sorted = vars;
        sorted.sort();
        if sorted != [Var::X, Var::Y, Var::Z] {
            return None;
        }
        Some(SideForm { shape, ops, vars })
    }

    pub fn to_term(&self) -> Term {
        let [a, b, c] = self.vars.map(Term::Var);
        match self.shape {
            Shape::Right => Term::app(self.ops[0], a, Term::app(self.ops[1], b, c)),
            Shape::Left => Term::app(self.ops[1], Term::app(self.ops[0], a, b), c),
        }
    }

    fn relabeled(&self, map: &[Var; 3]) -> SideForm {
        SideForm { vars: self.vars.map(|v| map[v.0 as usize]), ..*self }
    }
}

/// Association-shape block of a law: `x?(y?z)=α?(β?γ)`, then
/// `x?(y?z)=(α?β)?γ`, then `(x?y)?z=(α?β)?γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Block {
    RightRight,
    RightLeft,
    LeftLeft,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::RightRight, Block::RightLeft, Block::LeftLeft];

    fn shapes(self) -> (Shape, Shape) {
        match self {
            Block::RightRight => (Shape::Right, Shape::Right),
            Block::RightLeft => (Shape::Right, Shape::Left),
            Block::LeftLeft => (Shape::Left, Shape::Left),
        }
    }

    fn of(lhs: Shape, rhs: Shape) -> Option<Block> {
        match (lhs, rhs) {
            (Shape::Right, Shape::Right) => Some(Block::RightRight),
            (Shape::Right, Shape::Left) => Some(Block::RightLeft),
            (Shape::Left, Shape::Left) => Some(Block::LeftLeft),
            (Shape::Left, Shape::Right) => None,
        }
    }
}

/// Sort key of a law in generation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LawKey {
    pub block: Block,
    pub ops: [Op; 4],
    /// Right-hand-side variables in reading order.
    pub perm: [Var; 3],
}

impl LawKey {
    pub fn equation(&self) -> Equation {
        let (ls, rs) = self.block.shapes();
        let lhs = SideForm { shape: ls, ops: [self.ops[0], self.ops[1]], vars: [Var::X, Var::Y, Var::Z] };
        let rhs = SideForm { shape: rs, ops: [self.ops[2], self.ops[3]], vars: self.perm };
        Equation::new(lhs.to_term(), rhs.to_term())
    }
}

const PERMS: [[Var; 3]; 6] = [
    [Var::X, Var::Y, Var::Z],
    [Var::X, Var::Z, Var::Y],
    [Var::Y, Var::X, Var::Z],
    [Var::Y, Var::Z, Var::X],
    [Var::Z, Var::X, Var::Y],
    [Var::Z, Var::Y, Var::X],
];

/// Result of canonicalizing a Schröder-shaped law.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Canonical {
    Law(Equation),
    Tautology,
}

fn key_of(lhs: &SideForm, rhs: &SideForm) -> Option<LawKey> {
    // relabel so that the left side reads x, y, z
    let mut map = [Var::X; 3];
    for (i, v) in lhs.vars.iter().enumerate() {
        map[v.0 as usize] = PERMS[0][i];
    }
    let rhs = rhs.relabeled(&map);
    let block = Block::of(lhs.shape, rhs.shape)?;
    Some(LawKey { block, ops: [lhs.ops[0], lhs.ops[1], rhs.ops[0], rhs.ops[1]], perm: rhs.vars })
}

fn canonical_key(e: &Equation) -> Result<Option<LawKey>, TermError> {
    let malformed = || TermError::MalformedLaw(e.to_string());
    let l = SideForm::of(&e.lhs).ok_or_else(malformed)?;
    let r = SideForm::of(&e.rhs).ok_or_else(malformed)?;
    let keys = [key_of(&l, &r), key_of(&r, &l)];
    let best = keys.into_iter().flatten().min().expect("one orientation is always admissible");
    let (ls, rs) = best.block.shapes();
    let tautology = ls == rs && best.ops[..2] == best.ops[2..] && best.perm == PERMS[0];
    Ok(if tautology { None } else { Some(best) })
}

/// Representative of `e`'s orbit under side swap and variable bijections, as
/// it appears in [`schroeder_laws`], with its index filled in.
pub fn canonical_form(e: &Equation) -> Result<Canonical, TermError> {
    Ok(match canonical_key(e)? {
        None => Canonical::Tautology,
        Some(key) => {
            let mut eq = key.equation();
            eq.index = law_table().by_key.get(&key).copied();
            Canonical::Law(eq)
        }
    })
}

/// Generates the 990 laws in order: association block, then the four
/// operations lexicographically, then the right-hand-side variable order.
pub fn generate_schroeder_laws() -> Vec<Equation> {
    let mut out = Vec::with_capacity(990);
    for block in Block::ALL {
        for code in 0..81 {
            let ops = [code / 27, (code / 9) % 3, (code / 3) % 3, code % 3].map(Op::from_index);
            for perm in PERMS {
                let key = LawKey { block, ops, perm };
                let eq = key.equation();
                if canonical_key(&eq).expect("generated sides are well formed") == Some(key) {
                    let mut eq = eq;
                    eq.index = Some(out.len() + 1);
                    out.push(eq);
                }
            }
        }
    }
    out
}

struct LawTable {
    laws: Vec<Equation>,
    by_key: HashMap<LawKey, usize>,
}

fn law_table() -> &'static LawTable {
    static TABLE: OnceLock<LawTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let laws = generate_schroeder_laws();
        let by_key = laws.iter().map(|e| (canonical_key(e).unwrap().unwrap(), e.index.unwrap())).collect();
        LawTable { laws, by_key }
    })
}

/// The cached list of the 990 laws; `schroeder_laws()[i - 1]` has index `i`.
pub fn schroeder_laws() -> &'static [Equation] {
    &law_table().laws
}

pub const LAW_COUNT: usize = 990;

/// Law by 1-based index.
pub fn law(index: usize) -> &'static Equation {
    &schroeder_laws()[index - 1]
}

/// Position of a law in the generated list. Accepts any member of the law's
/// symmetry orbit.
pub fn index_of(e: &Equation) -> Result<usize, TermError> {
    match canonical_form(e) {
        Ok(Canonical::Law(c)) => c.index.ok_or_else(|| TermError::NotInList(e.to_string())),
        _ => Err(TermError::NotInList(e.to_string())),
    }
}

/// Looks up a law given as text, e.g. `"x * (y * z) = (x * y) * z"`.
pub fn index_of_text(text: &str) -> Result<usize, TermError> {
    index_of(&parse_equation(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(text: &str) -> Equation {
        parse_equation(text).unwrap()
    }

    #[test]
    fn parse_and_render() {
        let t = parse_term("x * (y // z)").unwrap();
        assert_eq!(t, Term::app(Op::Mul, Term::var(0), Term::app(Op::RDiv, Term::var(1), Term::var(2))));
        assert_eq!(render_term(&t), "x * (y // z)");
        assert!(matches!(parse_term("x * y z"), Err(TermError::Parse { pos: 6, .. })));
        assert!(parse_term("x * y * z").is_err());
        assert!(parse_term("x / y").is_err());
        assert!(parse_term("(x \\\\ v12)").is_ok());
        assert_eq!(render_term(&parse_term("((x \\\\ v12))").unwrap()), "x \\\\ v12");
    }

    #[test]
    fn first_and_counted_laws() {
        let laws = schroeder_laws();
        assert_eq!(laws.len(), 990);
        assert_eq!(laws[0].to_string(), "x * (y * z) = x * (z * y)");
        let rr = laws.iter().filter(|e| canonical_key(e).unwrap().unwrap().block == Block::RightRight).count();
        let rl = laws.iter().filter(|e| canonical_key(e).unwrap().unwrap().block == Block::RightLeft).count();
        assert_eq!((rr, rl, 990 - rr - rl), (252, 486, 252));
    }

    #[test]
    fn canonical_examples() {
        let c = canonical_form(&eq("y * (x * z) = x * (y * z)")).unwrap();
        assert_eq!(c, Canonical::Law(eq("x * (y * z) = y * (x * z)")));
        let c = canonical_form(&eq("x * (y * z) = z * (x * y)")).unwrap();
        assert_eq!(c, Canonical::Law(eq("x * (y * z) = y * (z * x)")));
        assert_eq!(canonical_form(&eq("x * (y * z) = x * (y * z)")).unwrap(), Canonical::Tautology);
        assert!(matches!(canonical_form(&eq("x * y = y * x")), Err(TermError::MalformedLaw(_))));
        assert!(matches!(canonical_form(&eq("x * (x * z) = y * (x * z)")), Err(TermError::MalformedLaw(_))));
    }

    #[test]
    fn index_examples() {
        assert_eq!(index_of(&eq("x * (y * z) = x * (z * y)")).unwrap(), 1);
        assert!(matches!(index_of(&eq("x * (y * z) = x * (y * z)")), Err(TermError::NotInList(_))));
        assert_eq!(index_of(schroeder_laws().last().unwrap()).unwrap(), 990);
        // a few formulas from the published representative list
        assert_eq!(index_of_text("x * (y * z) = (z * y) // x").unwrap(), 264);
        assert_eq!(index_of_text("x // (y * z) = (z * y) \\\\ x").unwrap(), 432);
        assert_eq!(index_of_text("x * (y * z) = x // (y // z)").unwrap(), 23);
        assert_eq!(index_of_text("x * (y * z) = (x * y) * z").unwrap(), 253);
    }

    #[test]
    fn generated_laws_are_canonical_and_round_trip() {
        for e in schroeder_laws() {
            assert_eq!(canonical_form(e).unwrap(), Canonical::Law(e.clone()));
            assert_eq!(parse_equation(&e.to_string()).unwrap(), *e);
        }
    }

    #[test]
    fn no_two_laws_related_by_symmetry() {
        let laws = schroeder_laws();
        let set: HashMap<(Term, Term), usize> =
            laws.iter().map(|e| ((e.lhs.clone(), e.rhs.clone()), e.index.unwrap())).collect();
        for e in laws {
            for perm in PERMS {
                for swap in [false, true] {
                    let mut f = |v: Var| Term::Var(perm[v.0 as usize]);
                    let (l, r) = (e.lhs.map_vars(&mut f), e.rhs.map_vars(&mut f));
                    let img = if swap { (r, l) } else { (l, r) };
                    if let Some(&other) = set.get(&img) {
                        assert_eq!(other, e.index.unwrap(), "{e} maps onto law {other}");
                    }
                }
            }
        }
    }
}
