//! Equational prover for quasigroup laws: unfailing completion over the six
//! axioms plus hypotheses, producing checkable proof objects.

mod engine;
mod flat;
mod proof;

use std::sync::OnceLock;

use thiserror::Error;

pub use proof::{check_proof, Inference, ProofObject, ProofParseError, ProofStep, Side, Subst};

use crate::terms::{parse_equation, Equation, Term};
use flat::{flatten, kbo_gt, subterm_end, to_term, Matcher, Sym};

/// The six quasigroup axioms in the conjugate basis.
pub fn quasigroup_axioms() -> &'static [Equation] {
    static AXIOMS: OnceLock<Vec<Equation>> = OnceLock::new();
    AXIOMS.get_or_init(|| {
        [
            "(y // x) * y = x",
            "y // (x * y) = x",
            "x * (y \\\\ x) = y",
            "(x * y) \\\\ x = y",
            "x \\\\ (y // x) = y",
            "(x \\\\ y) // x = y",
        ]
        .iter()
        .map(|s| parse_equation(s).expect("axiom text parses"))
        .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProverConfig {
    /// Given-pair selections before giving up.
    pub max_steps: u64,
    pub timeout_ms: u64,
    /// Critical pairs with a side longer than this (in symbols) are dropped.
    pub max_weight: usize,
}

impl Default for ProverConfig {
    fn default() -> Self {
        ProverConfig { max_steps: 50_000, timeout_ms: 1000, max_weight: 31 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnknownReason {
    Timeout,
    StepLimit,
    /// Passive set ran dry without joining the goal (possibly incomplete
    /// because of the weight limit).
    Saturated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProveResult {
    Proved(ProofObject),
    Unknown(UnknownReason),
}

impl ProveResult {
    pub fn proof(&self) -> Option<&ProofObject> {
        match self {
            ProveResult::Proved(p) => Some(p),
            ProveResult::Unknown(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProverError {
    #[error("goal uses too many distinct variables")]
    GoalTooWide,
    #[error("hypothesis variables must be numbered below 64")]
    HypothesisTooWide,
}

/// Tries to derive `goal` from the quasigroup axioms and `hypotheses`.
pub fn prove(hypotheses: &[Equation], goal: &Equation, config: &ProverConfig) -> Result<ProveResult, ProverError> {
    if goal.var_bound() > 12 {
        return Err(ProverError::GoalTooWide);
    }
    if hypotheses.iter().any(|h| h.var_bound() > 64) {
        return Err(ProverError::HypothesisTooWide);
    }
    if let Some(i) = hypotheses.iter().position(|h| h == goal) {
        let step = ProofStep { inference: Inference::Hypothesis(i + 1), conclusion: hypotheses[i].clone() };
        return Ok(ProveResult::Proved(ProofObject { steps: vec![step] }));
    }
    Ok(engine::Engine::new(*config, hypotheses, goal).run())
}

/// A rewrite rule; unoriented rules only fire on instances that decrease in
/// the term order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    lhs: Vec<Sym>,
    rhs: Vec<Sym>,
    oriented: bool,
}

impl Rule {
    /// Builds a rule from an equation, orienting it left to right or right to
    /// left when the term order allows.
    pub fn from_equation(e: &Equation) -> Rule {
        let (l, r) = (flatten(&e.lhs), flatten(&e.rhs));
        if kbo_gt(&r, &l) {
            Rule { lhs: r, rhs: l, oriented: true }
        } else {
            let oriented = kbo_gt(&l, &r);
            Rule { lhs: l, rhs: r, oriented }
        }
    }

    pub fn is_oriented(&self) -> bool {
        self.oriented
    }

    pub fn lhs(&self) -> Term {
        to_term(&self.lhs)
    }

    pub fn rhs(&self) -> Term {
        to_term(&self.rhs)
    }
}

/// Innermost normal form of `t` under `rules` (first applicable rule wins).
pub fn normalize(t: &Term, rules: &[Rule]) -> Term {
    fn go(t: Vec<Sym>, rules: &[Rule], m: &mut Matcher) -> Vec<Sym> {
        let mut t = t;
        loop {
            if flat::is_op(t[0]) {
                let e1 = subterm_end(&t, 1);
                let l = go(t[1..e1].to_vec(), rules, m);
                let r = go(t[e1..].to_vec(), rules, m);
                let op = t[0];
                t = std::iter::once(op).chain(l).chain(r).collect();
            }
            let next = rules.iter().find_map(|rule| {
                if !m.matches(&rule.lhs, &t, 0) {
                    return None;
                }
                let mut out = Vec::new();
                (m.instantiate(&rule.rhs, &t, &mut out) && (rule.oriented || kbo_gt(&t, &out))).then_some(out)
            });
            match next {
                Some(n) => t = n,
                None => return t,
            }
        }
    }
    to_term(&go(flatten(t), rules, &mut Matcher::default()))
}

/// The axioms as rules.
pub fn axiom_rules() -> Vec<Rule> {
    quasigroup_axioms().iter().map(Rule::from_equation).collect()
}
