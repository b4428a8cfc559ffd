//! Staged implication oracle over the 990 laws: quick countermodel search,
//! prover, deep countermodel search, escalated prover. Verdicts are cached
//! and every conclusive verdict carries a checkable certificate.

mod cache;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use cache::{cache_load, cache_merge, VerdictCache, CACHE_FILE};

use crate::models::{find_countermodel_within, CompiledEquation, FingerprintTable, Quasigroup, SearchLimits, Witness};
use crate::par;
use crate::prover::{check_proof, prove, Inference, ProofObject, ProofStep, ProveResult, ProverConfig};
use crate::terms::{law, Equation, LAW_COUNT};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("law index {0} is outside 1..=990")]
    BadIndex(usize),
    #[error("conflicting verdicts for query {0}")]
    CorruptCache(String),
    #[error("unsupported cache format {0:?}")]
    VersionMismatch(String),
    #[error("cache line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// "Do these hypotheses imply the goal?" over law indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Query {
    hyps: Vec<usize>,
    goal: usize,
}

impl Query {
    pub fn new(hyps: impl IntoIterator<Item = usize>, goal: usize) -> Result<Query, OracleError> {
        let mut hyps: Vec<usize> = hyps.into_iter().collect();
        hyps.sort_unstable();
        hyps.dedup();
        if let Some(&bad) = hyps.iter().chain([&goal]).find(|&&i| i == 0 || i > LAW_COUNT) {
            return Err(OracleError::BadIndex(bad));
        }
        Ok(Query { hyps, goal })
    }

    pub fn single(hyp: usize, goal: usize) -> Query {
        Query::new([hyp], goal).expect("valid law indices")
    }

    pub fn hyps(&self) -> &[usize] {
        &self.hyps
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn is_trivial(&self) -> bool {
        self.hyps.contains(&self.goal)
    }

    pub fn hyp_equations(&self) -> Vec<Equation> {
        self.hyps.iter().map(|&i| law(i).clone()).collect()
    }

    pub fn goal_equation(&self) -> &'static Equation {
        law(self.goal)
    }
}

impl fmt::Display for Query {
    /// `HYPS|GOAL` with comma-separated hypotheses.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hyps: Vec<String> = self.hyps.iter().map(usize::to_string).collect();
        write!(f, "{}|{}", hyps.join(","), self.goal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Implies(ProofObject),
    NotImplies(Witness),
    /// What each stage reported.
    Unknown(Vec<String>),
}

impl Verdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Implies(_) => "IMPLIES",
            Verdict::NotImplies(_) => "NOT_IMPLIES",
            Verdict::Unknown(_) => "UNKNOWN",
        }
    }

    pub fn is_implies(&self) -> bool {
        matches!(self, Verdict::Implies(_))
    }

    pub fn is_not_implies(&self) -> bool {
        matches!(self, Verdict::NotImplies(_))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown(_))
    }

    /// Re-checks the certificate: the proof replays, or the witness is a
    /// model of the hypotheses violating the goal. Unknown never verifies.
    pub fn verify(&self, q: &Query) -> bool {
        let hyps = q.hyp_equations();
        match self {
            Verdict::Implies(p) => check_proof(p, &hyps, q.goal_equation()),
            Verdict::NotImplies(w) => w.verify(&hyps, q.goal_equation()),
            Verdict::Unknown(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub quick_order: usize,
    pub quick_nodes: u64,
    pub prover: ProverConfig,
    pub deep_order: usize,
    /// Node budget for each deep order separately.
    pub deep_nodes: u64,
    /// Last-resort prover budget; `None` skips the fourth stage.
    pub escalated: Option<ProverConfig>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let prover = ProverConfig::default();
        OracleConfig {
            quick_order: 4,
            quick_nodes: 1_000_000,
            prover,
            deep_order: 9,
            deep_nodes: 1_000_000,
            escalated: Some(ProverConfig {
                max_steps: prover.max_steps * 10,
                timeout_ms: prover.timeout_ms * 10,
                ..prover
            }),
        }
    }
}

fn trivial_proof(q: &Query) -> ProofObject {
    let i = q.hyps.iter().position(|&h| h == q.goal).expect("goal among hypotheses");
    ProofObject { steps: vec![ProofStep { inference: Inference::Hypothesis(i + 1), conclusion: law(q.goal).clone() }] }
}

/// Runs the stages in order and returns the first conclusive answer.
/// `skip_quick` omits the quick search when it is known to be futile.
fn run_stages(q: &Query, cfg: &OracleConfig, skip_quick: bool) -> Verdict {
    if q.is_trivial() {
        return Verdict::Implies(trivial_proof(q));
    }
    let hyps = q.hyp_equations();
    let goal = q.goal_equation();
    let mut log = Vec::new();
    let search = |min_order: usize, max_order: usize, nodes: u64, log: &mut Vec<String>| {
        if min_order > max_order {
            return None;
        }
        match find_countermodel_within(&hyps, goal, SearchLimits { min_order, max_order, node_budget: nodes }) {
            Ok(w) => Some(Verdict::NotImplies(w)),
            Err(e) => {
                log.push(format!("search {min_order}..={max_order}: {e}"));
                None
            }
        }
    };
    let attempt = |pcfg: &ProverConfig, log: &mut Vec<String>| match prove(&hyps, goal, pcfg) {
        Ok(ProveResult::Proved(p)) => Some(Verdict::Implies(p)),
        Ok(ProveResult::Unknown(reason)) => {
            log.push(format!("prover: {reason:?}"));
            None
        }
        Err(e) => {
            log.push(format!("prover: {e}"));
            None
        }
    };
    if !skip_quick {
        if let Some(v) = search(1, cfg.quick_order, cfg.quick_nodes, &mut log) {
            return v;
        }
    }
    if let Some(v) = attempt(&cfg.prover, &mut log) {
        return v;
    }
    // one budget per order, so a fruitless exhaustive order cannot starve
    // the next one
    for order in cfg.quick_order + 1..=cfg.deep_order {
        if let Some(v) = search(order, order, cfg.deep_nodes, &mut log) {
            return v;
        }
    }
    if let Some(esc) = &cfg.escalated {
        if let Some(v) = attempt(esc, &mut log) {
            return v;
        }
    }
    Verdict::Unknown(log)
}

/// Decides one query with no cache and no pre-filtering.
pub fn decide(q: &Query, cfg: &OracleConfig) -> Verdict {
    run_stages(q, cfg, false)
}

/// Maps [`decide`] over `queries`, answering from fingerprints where
/// possible: a pool model of the hypotheses that violates the goal is
/// returned at once, and the quick search is skipped when the pool already
/// covers its orders without finding one.
pub fn decide_batch(queries: &[Query], cfg: &OracleConfig, table: Option<&FingerprintTable>) -> Vec<Verdict> {
    let mut oracle = Oracle::new(*cfg, table.cloned());
    oracle.decide_batch(queries)
}

/// Counters for how queries were answered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleStats {
    pub cached: usize,
    pub trivial: usize,
    pub fingerprint: usize,
    pub learned: usize,
    pub staged: usize,
}

/// Decision procedure with a verdict cache, a fingerprint table and a pool
/// of countermodels learned from earlier deep searches.
pub struct Oracle {
    cfg: OracleConfig,
    table: Option<FingerprintTable>,
    cache: VerdictCache,
    learned: Vec<Quasigroup>,
    stats: OracleStats,
}

impl Oracle {
    pub fn new(cfg: OracleConfig, table: Option<FingerprintTable>) -> Oracle {
        Oracle { cfg, table, cache: VerdictCache::default(), learned: Vec::new(), stats: OracleStats::default() }
    }

    pub fn with_cache(mut self, cache: VerdictCache) -> Oracle {
        for (_, v) in cache.iter() {
            self.learn(v);
        }
        self.cache = cache;
        self
    }

    pub fn config(&self) -> &OracleConfig {
        &self.cfg
    }

    pub fn table(&self) -> Option<&FingerprintTable> {
        self.table.as_ref()
    }

    pub fn cache(&self) -> &VerdictCache {
        &self.cache
    }

    pub fn into_cache(self) -> VerdictCache {
        self.cache
    }

    pub fn stats(&self) -> OracleStats {
        self.stats
    }

    fn learn(&mut self, v: &Verdict) {
        if let Verdict::NotImplies(w) = v {
            let pool_order = self.table.as_ref().map_or(0, |t| t.pool().max_order());
            if w.model.order() > pool_order && !self.learned.contains(&w.model) {
                self.learned.push(w.model.clone());
            }
        }
    }

    fn prefilter(&self, q: &Query) -> Option<(Verdict, bool)> {
        if q.is_trivial() {
            return Some((Verdict::Implies(trivial_proof(q)), false));
        }
        let goal = CompiledEquation::new(q.goal_equation());
        if let Some(t) = &self.table {
            if let Some(i) = t.first_separating_model(&q.hyps, q.goal) {
                let model = t.pool().models()[i].clone();
                let assignment = goal.violation(&model).expect("fingerprint bit says the goal fails");
                return Some((Verdict::NotImplies(Witness { model, assignment }), true));
            }
        }
        let hyps: Vec<CompiledEquation> = q.hyp_equations().iter().map(CompiledEquation::new).collect();
        for m in &self.learned {
            if let Some(assignment) = goal.violation(m) {
                if hyps.iter().all(|h| h.holds(m)) {
                    return Some((Verdict::NotImplies(Witness { model: m.clone(), assignment }), false));
                }
            }
        }
        None
    }

    pub fn decide(&mut self, q: &Query) -> Verdict {
        self.decide_batch(std::slice::from_ref(q)).pop().expect("one verdict per query")
    }

    /// Answers every query, consulting the cache first; new verdicts are
    /// added to the cache. Cached Unknown verdicts are recomputed.
    pub fn decide_batch(&mut self, queries: &[Query]) -> Vec<Verdict> {
        let mut out: Vec<Option<Verdict>> = vec![None; queries.len()];
        let mut todo: BTreeMap<&Query, Vec<usize>> = BTreeMap::new();
        for (k, q) in queries.iter().enumerate() {
            match self.cache.get(q) {
                Some(v) if !v.is_unknown() => {
                    self.stats.cached += 1;
                    out[k] = Some(v.clone());
                }
                _ => todo.entry(q).or_default().push(k),
            }
        }
        let skip_quick = self.table.as_ref().is_some_and(|t| t.pool().max_order() >= self.cfg.quick_order);
        let cfg = self.cfg;
        let mut pending: Vec<(&Query, &Vec<usize>)> = todo.iter().map(|(q, s)| (*q, s)).collect();
        // one round per worker-width chunk, so countermodels found in one
        // round answer later queries without a search
        while !pending.is_empty() {
            let mut staged = Vec::new();
            let mut rest = Vec::new();
            for (q, slots) in pending {
                if staged.len() >= par::width().max(1) {
                    rest.push((q, slots));
                    continue;
                }
                match self.prefilter(q) {
                    Some((v, from_table)) => {
                        match (&v, from_table) {
                            (Verdict::Implies(_), _) => self.stats.trivial += 1,
                            (_, true) => self.stats.fingerprint += 1,
                            _ => self.stats.learned += 1,
                        }
                        for &k in slots {
                            out[k] = Some(v.clone());
                        }
                        self.cache.insert(q.clone(), v);
                    }
                    None => staged.push((q, slots)),
                }
            }
            let results = par::map(&staged, |(q, _)| run_stages(q, &cfg, skip_quick));
            self.stats.staged += staged.len();
            for ((q, slots), v) in staged.into_iter().zip(results) {
                self.learn(&v);
                for &k in slots {
                    out[k] = Some(v.clone());
                }
                self.cache.insert(q.clone(), v);
            }
            pending = rest;
        }
        out.into_iter().map(|v| v.expect("every query answered")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelPool;
    use crate::terms::index_of_text;

    fn assoc() -> usize {
        index_of_text("x * (y * z) = (x * y) * z").unwrap()
    }

    #[test]
    fn commutativity_does_not_give_associativity() {
        let q = Query::single(1, assoc());
        let v = decide(&q, &OracleConfig::default());
        let Verdict::NotImplies(w) = &v else { panic!("{v:?}") };
        assert_eq!(w.model.order(), 3);
        assert!(v.verify(&q));
    }

    #[test]
    fn law_three_gives_law_one() {
        let q = Query::single(3, 1);
        let v = decide(&q, &OracleConfig::default());
        assert!(v.is_implies());
        assert!(v.verify(&q));
    }

    #[test]
    fn trivial_query_needs_no_stage() {
        let q = Query::new([9, 4], 9).unwrap();
        assert_eq!(q.hyps(), &[4, 9]);
        let v = decide(
            &q,
            &OracleConfig { prover: ProverConfig { max_steps: 0, ..ProverConfig::default() }, ..Default::default() },
        );
        assert!(v.verify(&q));
        assert_eq!(v, Verdict::Implies(trivial_proof(&q)));
    }

    #[test]
    fn batch_uses_fingerprints_and_deduplicates() {
        let table = FingerprintTable::build(ModelPool::latin(3));
        let q = Query::single(1, assoc());
        let mut o = Oracle::new(OracleConfig::default(), Some(table));
        let vs = o.decide_batch(&[q.clone(), q.clone()]);
        assert_eq!(vs[0], vs[1]);
        assert!(vs[0].verify(&q));
        assert_eq!(o.cache().len(), 1);
        assert_eq!(o.stats().fingerprint, 1);
        assert!(o.decide_batch(&[]).is_empty());
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(matches!(Query::new([0], 1), Err(OracleError::BadIndex(0))));
        assert!(matches!(Query::new([1], 991), Err(OracleError::BadIndex(991))));
        assert_eq!(Query::new([5, 2, 5], 7).unwrap().to_string(), "2,5|7");
    }
}
