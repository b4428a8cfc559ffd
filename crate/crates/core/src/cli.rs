//! Command-line front end: argument parsing and the file emitters.

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::closure::{build_classes, ClassTable, ClosedSet, Closer, ClosureError, SemilatticeModel};
use crate::models::{
    read_fingerprint_cache, satisfies, write_fingerprint_cache, FingerprintTable, ModelPool, Quasigroup,
};
use crate::oracle::{cache_load, Oracle, OracleConfig, OracleError, Query, Verdict, VerdictCache};
use crate::par;
use crate::prover::ProverConfig;
use crate::terms::{law, schroeder_laws};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing artifact {0}")]
    MissingArtifacts(PathBuf),
    #[error("verification failed: {0}")]
    VerificationFailure(String),
}

#[derive(Parser, Debug)]
#[command(name = "schroder", version, about = "Implications among the 990 Schroder quasigroup laws")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Largest order for the quick countermodel pass (and the fingerprint pool)
    #[arg(long, global = true, env = "SCHRODER_QUICK_ORDER", default_value_t = 4)]
    pub quick_order: usize,
    /// Largest order for the deep countermodel pass
    #[arg(long, global = true, env = "SCHRODER_DEEP_ORDER", default_value_t = 9)]
    pub deep_order: usize,
    /// Prover wall-clock budget per query, in milliseconds
    #[arg(long, global = true, env = "SCHRODER_PROVER_MS", default_value_t = 1000)]
    pub prover_ms: u64,
    /// Prover budget per query, in processed pairs
    #[arg(long, global = true, env = "SCHRODER_PROVER_STEPS", default_value_t = 50_000)]
    pub prover_steps: u64,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "SCHRODER_JOBS")]
    pub jobs: Option<usize>,
    /// Directory for the verdict and fingerprint caches
    #[arg(long, global = true, env = "SCHRODER_CACHE", default_value = ".schroder-cache")]
    pub cache: PathBuf,
    /// Directory for emitted files
    #[arg(long, global = true, env = "SCHRODER_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Keep going when some queries stay Unknown, treating them as non-implications
    #[arg(long, global = true, env = "SCHRODER_PROVISIONAL")]
    pub provisional: bool,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Write the numbered list of laws
    Gen,
    /// Build (or load) the fingerprint cache
    Fingerprint,
    /// Compute equivalence classes of single laws
    Classes,
    /// Compute every closed set of representatives
    Closures,
    /// Export the closed sets
    Export {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Re-check every cached verdict and the closed-set invariants
    Verify,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Dot,
}

/// Validated run settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub quick_order: usize,
    pub deep_order: usize,
    pub prover_ms: u64,
    pub prover_steps: u64,
    pub jobs: usize,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    pub provisional: bool,
}

impl RunConfig {
    pub fn from_args(a: &RunArgs) -> Result<RunConfig, CliError> {
        let jobs = a.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if a.quick_order == 0 || a.deep_order == 0 {
            return Err(CliError::Config("orders must be at least 1".into()));
        }
        if a.quick_order > 5 {
            return Err(CliError::Config("the fingerprint pool is limited to order 5".into()));
        }
        if jobs == 0 {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        Ok(RunConfig {
            quick_order: a.quick_order,
            deep_order: a.deep_order,
            prover_ms: a.prover_ms,
            prover_steps: a.prover_steps,
            jobs,
            cache_dir: a.cache.clone(),
            output_dir: a.out.clone(),
            provisional: a.provisional,
        })
    }

    pub fn oracle_config(&self) -> OracleConfig {
        let prover =
            ProverConfig { max_steps: self.prover_steps, timeout_ms: self.prover_ms, ..ProverConfig::default() };
        OracleConfig {
            quick_order: self.quick_order,
            deep_order: self.deep_order,
            prover,
            escalated: Some(ProverConfig {
                max_steps: prover.max_steps * 10,
                timeout_ms: prover.timeout_ms * 10,
                ..prover
            }),
            ..OracleConfig::default()
        }
    }

    fn out_file(&self, name: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.output_dir)?;
        Ok(self.output_dir.join(name))
    }
}

pub const EQUATIONS_FILE: &str = "quasigroup-equations.txt";
pub const REPRESENTATIVES_FILE: &str = "quasigroup-representatives.txt";
pub const CLASSES_FILE: &str = "quasigroup-classes.txt";
pub const IMPLICATIONS_FILE: &str = "quasigroup-implications.txt";
pub const CLOSED_SETS_FILE: &str = "quasigroup-closed-sets.txt";
pub const LONG_CLASSES_FILE: &str = "quasigroup_long_classes.json";
pub const EQ_TO_LONG_CLASS_FILE: &str = "quasigroup_eq_to_long_class.json";
pub const DOT_FILE: &str = "semilattice.dot";

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::from_args(&cli.run)?;
    par::with_jobs(cfg.jobs, || match &cli.command {
        Command::Gen => cmd_gen(&cfg).map(|_| ()),
        Command::Fingerprint => cmd_fingerprint(&cfg).map(|_| ()),
        Command::Classes => cmd_classes(&cfg).map(|_| ()),
        Command::Closures => cmd_closures(&cfg).map(|_| ()),
        Command::Export { format } => cmd_export(&cfg, *format).map(|_| ()),
        Command::Verify => cmd_verify(&cfg).map(|r| println!("{r}")),
    })
}

/// `N<TAB>EQUATION` for every law, in index order.
pub fn equations_text() -> String {
    schroeder_laws().iter().enumerate().map(|(i, e)| format!("{}\t{e}\n", i + 1)).collect()
}

pub fn cmd_gen(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let path = cfg.out_file(EQUATIONS_FILE)?;
    fs::write(&path, equations_text())?;
    Ok(path)
}

fn fingerprint_path(cfg: &RunConfig) -> PathBuf {
    cfg.cache_dir.join(format!("fingerprints-{}.bin", cfg.quick_order))
}

/// Loads the fingerprint table for the quick order, building and caching
/// it when absent or stale.
pub fn cmd_fingerprint(cfg: &RunConfig) -> Result<FingerprintTable, CliError> {
    let pool = ModelPool::latin(cfg.quick_order);
    let path = fingerprint_path(cfg);
    if path.exists() {
        let (order, len, prints) = read_fingerprint_cache(BufReader::new(fs::File::open(&path)?))?;
        if order == cfg.quick_order && len == pool.len() && prints.len() == schroeder_laws().len() {
            return Ok(FingerprintTable::from_parts(pool, prints));
        }
    }
    let table = FingerprintTable::build(pool);
    fs::create_dir_all(&cfg.cache_dir)?;
    let mut w = BufWriter::new(fs::File::create(&path)?);
    write_fingerprint_cache(&table, &mut w)?;
    w.flush()?;
    Ok(table)
}

fn open_oracle(cfg: &RunConfig) -> Result<Oracle, CliError> {
    let table = cmd_fingerprint(cfg)?;
    let cache = cache_load(&cfg.cache_dir)?;
    Ok(Oracle::new(cfg.oracle_config(), Some(table)).with_cache(cache))
}

fn classes_with(cfg: &RunConfig, oracle: &mut Oracle) -> Result<ClassTable, CliError> {
    let classes = build_classes(oracle, cfg.provisional);
    oracle.cache().save(&cfg.cache_dir)?;
    let classes = classes?;
    eprintln!("{} classes ({} unresolved queries)", classes.len(), classes.unresolved().len());
    Ok(classes)
}

pub fn cmd_classes(cfg: &RunConfig) -> Result<ClassTable, CliError> {
    let mut oracle = open_oracle(cfg)?;
    let classes = classes_with(cfg, &mut oracle)?;
    let reps: String = classes.reps().iter().map(|&r| format!("{r}\t{}\n", law(r))).collect();
    fs::write(cfg.out_file(REPRESENTATIVES_FILE)?, reps)?;
    fs::write(cfg.out_file(CLASSES_FILE)?, classes_text(&classes))?;
    Ok(classes)
}

/// One line per class: the representative, a colon, then every member.
pub fn classes_text(classes: &ClassTable) -> String {
    (0..classes.len())
        .map(|k| {
            let ms: Vec<String> = classes.members(k).iter().map(usize::to_string).collect();
            format!("{}: {}\n", classes.rep(k), ms.join(" "))
        })
        .collect()
}

/// Everything the closure stage produces.
pub struct ClosureRun {
    pub model: SemilatticeModel,
    pub singles: Vec<ClosedSet>,
}

fn compute_closures(cfg: &RunConfig) -> Result<ClosureRun, CliError> {
    let mut oracle = open_oracle(cfg)?;
    let classes = classes_with(cfg, &mut oracle)?;
    let mut closer = Closer::new(&mut oracle, &classes, cfg.provisional)?;
    let result = closer.singles().and_then(|singles| {
        let model = closer.enumerate()?;
        certify_generators(&mut closer, &model)?;
        Ok((singles, model))
    });
    let stats = closer.stats();
    oracle.cache().save(&cfg.cache_dir)?;
    let (singles, model) = result?;
    eprintln!(
        "{} closed sets; {} closure queries, {} settled by transitivity",
        model.len(),
        stats.queries,
        stats.skipped
    );
    Ok(ClosureRun { model, singles })
}

/// Re-closes the reported minimal generating set of every closed set, so
/// the cache holds the implications `cmd_verify` needs to rebuild each set
/// from its generators.
fn certify_generators(closer: &mut Closer, model: &SemilatticeModel) -> Result<(), ClosureError> {
    for &s in model.sets() {
        let gens = model.minimal_generators(s)[0];
        let got = closer.close(gens)?;
        assert_eq!(got, s, "closure of minimal generators {gens} disagrees with the enumerated set");
    }
    Ok(())
}

/// `A<TAB>B` for every pair of distinct representatives with A implying B.
pub fn implications_text(model: &SemilatticeModel, singles: &[ClosedSet]) -> String {
    let classes = model.classes();
    let mut out = String::new();
    for (a, s) in singles.iter().enumerate() {
        for b in s.iter().filter(|&b| b != a) {
            out.push_str(&format!("{}\t{}\n", classes.rep(a), classes.rep(b)));
        }
    }
    out
}

fn rep_list(s: ClosedSet, classes: &ClassTable) -> String {
    let reps: Vec<String> = s.iter().map(|k| classes.rep(k).to_string()).collect();
    format!("{{{}}}", reps.join(","))
}

/// One line per closed set: position, minimal generator count, one minimal
/// generating set, the member representatives, and the expanded size.
pub fn closed_sets_text(model: &SemilatticeModel) -> String {
    let classes = model.classes();
    model
        .sets()
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let gens = model.minimal_generators(s)[0];
            format!(
                "{i}\t{}\t{}\t{}\t{}\n",
                gens.len(),
                rep_list(gens, classes),
                rep_list(s, classes),
                s.expanded(classes).len()
            )
        })
        .collect()
}

/// A closed set as listed in the closed-sets file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedSetLine {
    pub generators: Vec<usize>,
    pub members: Vec<usize>,
    pub size: usize,
}

fn parse_rep_list(text: &str) -> Option<Vec<usize>> {
    let inner = text.strip_prefix('{')?.strip_suffix('}')?;
    inner.split(',').filter(|t| !t.is_empty()).map(|t| t.parse().ok()).collect()
}

pub fn parse_closed_sets(text: &str) -> Result<Vec<ClosedSetLine>, CliError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let bad = || CliError::VerificationFailure(format!("{CLOSED_SETS_FILE} line {}: {line:?}", i + 1));
            let f: Vec<&str> = line.split('\t').collect();
            let [pos, count, gens, members, size] = f[..] else { return Err(bad()) };
            let generators = parse_rep_list(gens).ok_or_else(bad)?;
            if pos.parse() != Ok(i) || count.parse() != Ok(generators.len()) {
                return Err(bad());
            }
            Ok(ClosedSetLine {
                generators,
                members: parse_rep_list(members).ok_or_else(bad)?,
                size: size.parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn parse_classes(text: &str) -> Result<ClassTable, CliError> {
    let mut classes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let bad = || CliError::VerificationFailure(format!("{CLASSES_FILE} line {}: {line:?}", i + 1));
        let (rep, members) = line.split_once(':').ok_or_else(bad)?;
        let members: Vec<usize> =
            members.split_whitespace().map(|t| t.parse::<usize>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        if rep.trim().parse::<usize>().ok() != members.first().copied() {
            return Err(bad());
        }
        classes.push(members);
    }
    let mut all: Vec<usize> = classes.iter().flatten().copied().collect();
    all.sort_unstable();
    if all != (1..=schroeder_laws().len()).collect::<Vec<_>>() {
        return Err(CliError::VerificationFailure(format!("{CLASSES_FILE} does not partition the laws")));
    }
    Ok(ClassTable::from_classes(classes))
}

pub fn cmd_closures(cfg: &RunConfig) -> Result<ClosureRun, CliError> {
    let run = compute_closures(cfg)?;
    fs::write(cfg.out_file(IMPLICATIONS_FILE)?, implications_text(&run.model, &run.singles))?;
    fs::write(cfg.out_file(CLOSED_SETS_FILE)?, closed_sets_text(&run.model))?;
    Ok(run)
}

/// Array of expanded closed sets, in model order.
pub fn long_classes_json(model: &SemilatticeModel) -> Value {
    Value::Array(model.sets().iter().map(|s| json!(s.expanded(model.classes()))).collect())
}

/// Each law (through its representative) to the position of that
/// representative's single-law closure.
pub fn eq_to_long_class_json(model: &SemilatticeModel, singles: &[ClosedSet]) -> Value {
    let classes = model.classes();
    let mut map = Map::new();
    for i in 1..=schroeder_laws().len() {
        let pos = model.position(singles[classes.class_of(i)]).expect("single closures are in the model");
        map.insert(i.to_string(), json!(pos));
    }
    Value::Object(map)
}

/// Hasse diagram of the containment order; nodes are model positions.
pub fn dot_text(model: &SemilatticeModel) -> String {
    let classes = model.classes();
    let mut out = String::from("digraph semilattice {\n  rankdir=BT;\n");
    for (i, s) in model.sets().iter().enumerate() {
        out.push_str(&format!("  n{i} [label=\"{i} ({})\"];\n", s.expanded(classes).len()));
    }
    for (a, b) in model.hasse_edges() {
        out.push_str(&format!("  n{a} -> n{b};\n"));
    }
    out.push_str("}\n");
    out
}

pub fn cmd_export(cfg: &RunConfig, format: Format) -> Result<Vec<PathBuf>, CliError> {
    let run = compute_closures(cfg)?;
    match format {
        Format::Json => {
            let a = cfg.out_file(LONG_CLASSES_FILE)?;
            fs::write(&a, serde_json::to_string(&long_classes_json(&run.model)).expect("json") + "\n")?;
            let b = cfg.out_file(EQ_TO_LONG_CLASS_FILE)?;
            fs::write(
                &b,
                serde_json::to_string_pretty(&eq_to_long_class_json(&run.model, &run.singles)).expect("json") + "\n",
            )?;
            Ok(vec![a, b])
        }
        Format::Dot => {
            let p = cfg.out_file(DOT_FILE)?;
            fs::write(&p, dot_text(&run.model))?;
            Ok(vec![p])
        }
    }
}

/// Counts from a verification pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub proofs: usize,
    pub countermodels: usize,
    pub unknown: usize,
    pub closed_sets: usize,
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "verified {} proofs, {} countermodels, {} closed sets; {} unknown verdicts",
            self.proofs, self.countermodels, self.closed_sets, self.unknown
        )
    }
}

/// Re-checks a finished run from its artifacts and certificates alone:
/// every cached proof is replayed and every countermodel re-evaluated; no
/// proved implication may fail in a quasigroup of order at most 3; each
/// class must be linked by cached proofs; each closed set must be derivable
/// from its listed generators by cached proofs, and every representative
/// outside it must fail in some cached countermodel satisfying all of it.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    if !cfg.cache_dir.join(crate::oracle::CACHE_FILE).exists() {
        return Err(CliError::MissingArtifacts(cfg.cache_dir.join(crate::oracle::CACHE_FILE)));
    }
    let classes = parse_classes(&read_artifact(&cfg.output_dir, CLASSES_FILE)?)?;
    let sets = parse_closed_sets(&read_artifact(&cfg.output_dir, CLOSED_SETS_FILE)?)?;
    let cache = cache_load(&cfg.cache_dir)?;
    let small = FingerprintTable::build(ModelPool::latin(3));
    let entries: Vec<(&Query, &Verdict)> = cache.iter().collect();
    let failures = par::map(&entries, |(q, v)| {
        if v.is_unknown() {
            return None;
        }
        if !v.verify(q) {
            return Some(format!("certificate for {q} does not check"));
        }
        if v.is_implies() && small.first_separating_model(q.hyps(), q.goal()).is_some() {
            return Some(format!("proved {q} has a small countermodel"));
        }
        None
    });
    if let Some(f) = failures.into_iter().flatten().next() {
        return Err(CliError::VerificationFailure(f));
    }
    let unknown = entries.iter().filter(|(_, v)| v.is_unknown()).count();
    if unknown > 0 && !cfg.provisional {
        return Err(CliError::VerificationFailure(format!("{unknown} unknown verdicts in the cache")));
    }
    check_classes(&classes, &cache)?;
    check_closed_sets(&classes, &sets, &cache)?;
    Ok(VerifyReport {
        proofs: entries.iter().filter(|(_, v)| v.is_implies()).count(),
        countermodels: entries.iter().filter(|(_, v)| v.is_not_implies()).count(),
        unknown,
        closed_sets: sets.len(),
    })
}

fn check_classes(classes: &ClassTable, cache: &VerdictCache) -> Result<(), CliError> {
    let proved = |h: usize, g: usize| cache.get(&Query::single(h, g)).is_some_and(Verdict::is_implies);
    for k in 0..classes.len() {
        let r = classes.rep(k);
        if let Some(&m) = classes.members(k).iter().find(|&&m| m != r && !(proved(r, m) && proved(m, r))) {
            return Err(CliError::VerificationFailure(format!("no proof that {m} is equivalent to {r}")));
        }
    }
    Ok(())
}

/// Checks every listed closed set against the cached certificates, using
/// only set containment and satisfaction.
pub fn check_closed_sets(classes: &ClassTable, sets: &[ClosedSetLine], cache: &VerdictCache) -> Result<(), CliError> {
    let reps = classes.reps();
    let position = |law: usize| reps.binary_search(&law).ok();
    let as_set = |laws: &[usize]| -> Result<ClosedSet, CliError> {
        laws.iter()
            .map(|&l| position(l).ok_or_else(|| CliError::VerificationFailure(format!("{l} is not a representative"))))
            .collect::<Result<Vec<_>, _>>()
            .map(ClosedSet::from_positions)
    };
    // proved facts lifted to representatives: (hypothesis classes, goal class)
    let facts: Vec<(ClosedSet, usize)> = cache
        .iter()
        .filter(|(_, v)| v.is_implies())
        .map(|(q, _)| {
            (ClosedSet::from_positions(q.hyps().iter().map(|&h| classes.class_of(h))), classes.class_of(q.goal()))
        })
        .collect();
    // which representatives each cached countermodel satisfies and violates
    let mut models: Vec<&Quasigroup> = cache
        .iter()
        .filter_map(|(_, v)| match v {
            Verdict::NotImplies(w) => Some(&w.model),
            _ => None,
        })
        .collect();
    models.sort_by_key(|m| (m.order(), m.mul_table().to_vec()));
    models.dedup();
    let profiles: Vec<ClosedSet> =
        par::map(&models, |m| ClosedSet::from_positions((0..reps.len()).filter(|&k| satisfies(m, law(reps[k])))));
    let mut seen = HashSet::new();
    for (i, line) in sets.iter().enumerate() {
        let fail = |msg: String| Err(CliError::VerificationFailure(format!("closed set {i}: {msg}")));
        let s = as_set(&line.members)?;
        let gens = as_set(&line.generators)?;
        if !seen.insert(s) {
            return fail("listed twice".into());
        }
        if s.expanded(classes).len() != line.size {
            return fail(format!("size {} does not match its members", line.size));
        }
        let mut derived = gens;
        loop {
            let next = facts.iter().filter(|(h, _)| h.is_subset(derived)).fold(derived, |d, &(_, g)| d.with(g));
            if next == derived {
                break;
            }
            derived = next;
        }
        if derived != s {
            return fail(format!("generators {} derive {} instead", line.generators.len(), ClosedSet(derived.0 ^ s.0)));
        }
        for k in (0..reps.len()).filter(|&k| !s.contains(k)) {
            if !profiles.iter().any(|p| s.is_subset(*p) && !p.contains(k)) {
                return fail(format!("no countermodel shows {} lies outside", reps[k]));
            }
        }
    }
    for a in &seen {
        for b in &seen {
            if !seen.contains(&a.intersection(*b)) {
                return Err(CliError::VerificationFailure(format!("meet of {a} and {b} is not listed")));
            }
        }
    }
    Ok(())
}

/// Reads a file written by one of the emitters, for round-trip checks.
pub fn read_artifact(dir: &Path, name: &str) -> Result<String, CliError> {
    let p = dir.join(name);
    if !p.exists() {
        return Err(CliError::MissingArtifacts(p));
    }
    Ok(fs::read_to_string(p)?)
}
