//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Criteria 3 to 7 share one full run of the pipeline (classes, closures,
//! exports, verification) in a fresh directory under the cargo target dir.

use std::collections::{BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use schroder::cli::{
    cmd_classes, cmd_closures, cmd_export, cmd_gen, cmd_verify, parse_closed_sets, read_artifact, ClosureRun, Format,
    RunConfig, CLOSED_SETS_FILE, EQUATIONS_FILE, EQ_TO_LONG_CLASS_FILE, LONG_CLASSES_FILE, REPRESENTATIVES_FILE,
};
use schroder::closure::{ClassTable, ClosedSet, SemilatticeModel};
use schroder::models::{enumerate_latin_squares, satisfies, Elem, Quasigroup};
use schroder::oracle::{cache_load, cache_merge, Verdict, VerdictCache};
use schroder::prover::{prove, quasigroup_axioms, ProveResult, ProverConfig};
use schroder::terms::{index_of_text, schroeder_laws, Op, Shape, SideForm, Var};

/// The 47 class representatives, as formulas.
const REPRESENTATIVES: [(usize, &str); 47] = [
    (1, "x * (y * z) = x * (z * y)"),
    (2, "x * (y * z) = y * (x * z)"),
    (3, "x * (y * z) = y * (z * x)"),
    (4, "x * (y * z) = z * (y * x)"),
    (5, "x * (y * z) = x * (y // z)"),
    (6, "x * (y * z) = x * (z // y)"),
    (7, "x * (y * z) = y * (x // z)"),
    (8, "x * (y * z) = y * (z // x)"),
    (9, "x * (y * z) = z * (x // y)"),
    (10, "x * (y * z) = z * (y // x)"),
    (12, r"x * (y * z) = x * (z \\ y)"),
    (14, r"x * (y * z) = y * (z \\ x)"),
    (15, r"x * (y * z) = z * (x \\ y)"),
    (18, "x * (y * z) = x // (z * y)"),
    (20, "x * (y * z) = y // (z * x)"),
    (23, "x * (y * z) = x // (y // z)"),
    (24, "x * (y * z) = x // (z // y)"),
    (25, "x * (y * z) = y // (x // z)"),
    (29, r"x * (y * z) = x // (y \\ z)"),
    (34, r"x * (y * z) = z // (y \\ x)"),
    (38, r"x * (y * z) = y \\ (z * x)"),
    (54, "x * (y // z) = y * (x // z)"),
    (56, "x * (y // z) = z * (y // x)"),
    (60, r"x * (y // z) = y * (z \\ x)"),
    (65, "x * (y // z) = y // (x * z)"),
    (79, r"x * (y // z) = z // (x \\ y)"),
    (88, r"x * (y // z) = x \\ (z // y)"),
    (93, r"x * (y // z) = x \\ (y \\ z)"),
    (100, r"x * (y \\ z) = y * (x \\ z)"),
    (101, r"x * (y \\ z) = y * (z \\ x)"),
    (102, r"x * (y \\ z) = z * (y \\ x)"),
    (103, r"x * (y \\ z) = x // (y * z)"),
    (105, r"x * (y \\ z) = y // (x * z)"),
    (123, r"x * (y \\ z) = y \\ (x * z)"),
    (127, r"x * (y \\ z) = x \\ (y // z)"),
    (140, "x // (y * z) = y // (x * z)"),
    (156, r"x // (y * z) = x \\ (z * y)"),
    (161, r"x // (y * z) = x \\ (y // z)"),
    (183, r"x // (y // z) = x \\ (y * z)"),
    (202, r"x // (y \\ z) = y // (x \\ z)"),
    (224, r"x \\ (y * z) = y \\ (x * z)"),
    (264, "x * (y * z) = (z * y) // x"),
    (336, "x * (y // z) = (z // y) // x"),
    (408, r"x * (y \\ z) = (z \\ y) // x"),
    (432, r"x // (y * z) = (z * y) \\ x"),
    (504, r"x // (y // z) = (z // y) \\ x"),
    (654, r"x \\ (y // z) = (z // y) * x"),
];

/// Varieties needing exactly two generators, by representative number.
const TWO_GENERATORS: [[usize; 2]; 50] = [
    [2, 18],
    [2, 54],
    [2, 56],
    [4, 29],
    [4, 56],
    [4, 100],
    [4, 101],
    [4, 102],
    [4, 183],
    [4, 224],
    [4, 408],
    [25, 54],
    [29, 56],
    [29, 93],
    [34, 54],
    [34, 56],
    [34, 93],
    [34, 102],
    [34, 140],
    [34, 432],
    [54, 100],
    [54, 102],
    [54, 127],
    [54, 202],
    [54, 224],
    [54, 264],
    [54, 408],
    [54, 504],
    [54, 654],
    [56, 102],
    [56, 202],
    [56, 654],
    [102, 202],
    [102, 224],
    [102, 336],
    [103, 127],
    [103, 202],
    [103, 654],
    [127, 140],
    [127, 432],
    [161, 224],
    [161, 408],
    [202, 224],
    [202, 408],
    [202, 432],
    [224, 432],
    [224, 654],
    [408, 432],
    [408, 654],
    [432, 654],
];

const THREE_GENERATORS: [[usize; 3]; 15] = [
    [4, 29, 56],
    [4, 102, 224],
    [34, 54, 102],
    [54, 102, 202],
    [54, 102, 224],
    [54, 202, 224],
    [54, 202, 408],
    [54, 224, 654],
    [54, 408, 654],
    [56, 102, 202],
    [102, 202, 224],
    [202, 224, 432],
    [202, 408, 432],
    [224, 432, 654],
    [408, 432, 654],
];

const FOUR_GENERATORS: [usize; 4] = [54, 102, 202, 224];

const ASSOCIATIVITY: &str = "x * (y * z) = (x * y) * z";
const C00: &str = "x * (y * z) = x // (y // z)";

type Outcome = Result<String, String>;
type Criterion = (usize, &'static str, fn(&Sweep) -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Law index of a representative given by its formula.
fn rep_law(number: usize) -> usize {
    let (_, text) = REPRESENTATIVES.iter().find(|(n, _)| *n == number).expect("listed representative");
    index_of_text(text).expect("representative formula is a law")
}

// ---------------------------------------------------------------- 1

/// Orbit key of an equation given as two sides, under side swap and the six
/// renamings of x, y, z.
type SideKey = (u8, [usize; 2], [u32; 3]);

fn orbit_key(l: SideKey, r: SideKey) -> (SideKey, SideKey) {
    const PERMS: [[u32; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let rename = |s: SideKey, p: [u32; 3]| (s.0, s.1, s.2.map(|v| p[v as usize]));
    let mut best = None;
    for p in PERMS {
        for (a, b) in [(l, r), (r, l)] {
            let img = (rename(a, p), rename(b, p));
            if best.is_none_or(|b| img < b) {
                best = Some(img);
            }
        }
    }
    best.unwrap()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    // independent enumeration of all shapes, operations and orders
    let mut orbits: HashSet<(SideKey, SideKey)> = HashSet::new();
    let mut by_block = [0usize; 3];
    for (block, (ls, rs)) in [(0u8, 0u8), (0, 1), (1, 1)].into_iter().enumerate() {
        let mut seen = HashSet::new();
        for code in 0..81usize {
            let ops = [code / 27, code / 9 % 3, code / 3 % 3, code % 3];
            for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let l = (ls, [ops[0], ops[1]], [0, 1, 2]);
                let r = (rs, [ops[2], ops[3]], perm);
                if l == r {
                    continue;
                }
                let key = orbit_key(l, r);
                if seen.insert(key) {
                    orbits.insert(key);
                    by_block[block] += 1;
                }
            }
        }
    }
    check(orbits.len() == 990, || format!("independent orbit count {}", orbits.len()))?;
    let laws = schroeder_laws();
    check(laws.len() == 990, || format!("{} laws generated", laws.len()))?;
    let side = |t| {
        let s = SideForm::of(t).expect("Schroder side");
        let shape = if s.shape == Shape::Right { 0u8 } else { 1 };
        (shape, s.ops.map(Op::index), s.vars.map(|v: Var| v.0))
    };
    let keys: HashSet<_> = laws.iter().map(|e| orbit_key(side(&e.lhs), side(&e.rhs))).collect();
    check(keys.len() == 990, || format!("{} duplicates under the symmetry group", 990 - keys.len()))?;
    check(keys == orbits, || "generated laws differ from the independent orbit list".into())?;
    let mut blocks = [0usize; 3];
    for e in laws {
        let (l, r) = (side(&e.lhs).0, side(&e.rhs).0);
        blocks[(l + r) as usize] += 1;
    }
    blocks.sort();
    let mut expect = by_block;
    expect.sort();
    check(blocks == [252, 252, 486] && expect == blocks, || {
        format!("block sizes {blocks:?}, independent {by_block:?}")
    })?;
    let secs = t.elapsed().as_secs_f64();
    check(secs < 1.0, || format!("took {secs:.2} s"))?;
    Ok(format!("990 laws, blocks 252/486/252, no duplicates ({secs:.2} s)"))
}

// ---------------------------------------------------------------- 2

fn permutations(n: usize) -> Vec<Vec<Elem>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, (n - 1) as Elem);
            out.push(q);
        }
    }
    out
}

/// Latin squares of order `n` by choosing every row as a permutation and
/// keeping tables whose columns are permutations too.
fn naive_latin_count(n: usize) -> usize {
    let perms = permutations(n);
    let mut count = 0;
    let mut rows = vec![0usize; n];
    loop {
        let ok = (0..n).all(|c| {
            let mut seen = 0u32;
            rows.iter().all(|&r| {
                let bit = 1 << perms[r][c];
                let fresh = seen & bit == 0;
                seen |= bit;
                fresh
            })
        });
        count += ok as usize;
        let mut i = 0;
        while i < n {
            rows[i] += 1;
            if rows[i] < perms.len() {
                break;
            }
            rows[i] = 0;
            i += 1;
        }
        if i == n {
            return count;
        }
    }
}

fn criterion_2() -> Outcome {
    let mut counts = Vec::new();
    for n in 1..=4 {
        let squares: Vec<Quasigroup> = enumerate_latin_squares(n).collect();
        let naive = naive_latin_count(n);
        check(squares.len() == naive, || format!("order {n}: {} squares, naive count {naive}", squares.len()))?;
        for q in &squares {
            let mul = q.mul_table();
            // divisions found by search in the multiplication table
            let rdiv = |x: usize, y: usize| (0..n).find(|&u| mul[u * n + x] as usize == y).unwrap();
            let ldiv = |x: usize, y: usize| (0..n).find(|&v| mul[y * n + v] as usize == x).unwrap();
            let m = |a: usize, b: usize| mul[a * n + b] as usize;
            for x in 0..n {
                for y in 0..n {
                    check(q.apply(Op::RDiv, x as Elem, y as Elem) as usize == rdiv(x, y), || format!("x//y in {q:?}"))?;
                    check(q.apply(Op::LDiv, x as Elem, y as Elem) as usize == ldiv(x, y), || {
                        format!("x\\\\y in {q:?}")
                    })?;
                    let ok = m(rdiv(y, x), y) == x
                        && rdiv(y, m(x, y)) == x
                        && m(x, ldiv(y, x)) == y
                        && ldiv(m(x, y), x) == y
                        && ldiv(x, rdiv(y, x)) == y
                        && rdiv(ldiv(x, y), x) == y;
                    check(ok, || format!("an axiom fails at ({x},{y}) in {q:?}"))?;
                }
            }
            for ax in quasigroup_axioms() {
                check(satisfies(q, ax), || format!("axiom {ax} fails in {q:?}"))?;
            }
        }
        counts.push(squares.len());
    }
    check(counts == [1, 2, 12, 576], || format!("counts {counts:?}"))?;
    Ok(format!("six identities hold on all {} squares of order <= 4 ({counts:?})", counts.iter().sum::<usize>()))
}

// ---------------------------------------------------------------- sweep

struct Sweep {
    cfg: RunConfig,
    classes: ClassTable,
    run: ClosureRun,
    seconds: f64,
}

fn sweep() -> Result<Sweep, String> {
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = std::fs::remove_dir_all(&root);
    let cfg = RunConfig {
        quick_order: 4,
        deep_order: 9,
        prover_ms: 1000,
        prover_steps: 50_000,
        jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        cache_dir: root.join("cache"),
        output_dir: root.join("out"),
        provisional: false,
    };
    let t = Instant::now();
    cmd_gen(&cfg).map_err(|e| e.to_string())?;
    let classes = cmd_classes(&cfg).map_err(|e| e.to_string())?;
    let run = cmd_closures(&cfg).map_err(|e| e.to_string())?;
    cmd_export(&cfg, Format::Json).map_err(|e| e.to_string())?;
    cmd_export(&cfg, Format::Dot).map_err(|e| e.to_string())?;
    Ok(Sweep { cfg, classes, run, seconds: t.elapsed().as_secs_f64() })
}

fn unknown_count(cache: &VerdictCache) -> usize {
    cache.iter().filter(|(_, v)| v.is_unknown()).count()
}

// ---------------------------------------------------------------- 3

fn criterion_3(s: &Sweep) -> Outcome {
    let classes = &s.classes;
    check(classes.len() == 47, || format!("{} classes", classes.len()))?;
    let ours: BTreeSet<usize> = classes.reps().into_iter().collect();
    let expected: BTreeSet<usize> = REPRESENTATIVES.iter().map(|(_, f)| index_of_text(f).unwrap()).collect();
    check(ours == expected, || {
        format!("representatives differ: {:?}", ours.symmetric_difference(&expected).collect::<Vec<_>>())
    })?;
    let equations = read_artifact(&s.cfg.output_dir, EQUATIONS_FILE).map_err(|e| e.to_string())?;
    check(equations.lines().count() == 990, || "equations file does not have 990 lines".into())?;
    check(equations.lines().next() == Some("1\tx * (y * z) = x * (z * y)"), || {
        "unexpected first equation line".into()
    })?;
    let reps_file = read_artifact(&s.cfg.output_dir, REPRESENTATIVES_FILE).map_err(|e| e.to_string())?;
    check(reps_file.lines().count() == 47, || "representatives file does not have 47 lines".into())?;
    let cache = cache_load(&s.cfg.cache_dir).map_err(|e| e.to_string())?;
    let unknown = unknown_count(&cache);
    check(unknown == 0, || format!("{unknown} unknown verdicts"))?;
    Ok(format!("47 classes, representatives match by formula, 0 unknown (full sweep {:.0} s)", s.seconds))
}

// ---------------------------------------------------------------- 4

fn single(s: &Sweep, law_index: usize) -> ClosedSet {
    s.run.singles[s.classes.class_of(law_index)]
}

fn criterion_4(s: &Sweep) -> Outcome {
    let m = &s.run.model;
    let a1 = single(s, index_of_text(ASSOCIATIVITY).unwrap());
    let c1 = single(s, rep_law(1));
    let c00 = single(s, index_of_text(C00).unwrap());
    let sizes = [a1, c1, m.join(a1, c1), c00].map(|x| x.expanded(&s.classes).len());
    check(sizes == [16, 30, 150, 18], || format!("sizes {sizes:?}"))?;
    Ok(format!("associativity 16, Sch-1 30, join 150, C00 18 (each law counted among its consequences); got {sizes:?}"))
}

// ---------------------------------------------------------------- 5

fn family_matches(m: &SemilatticeModel, classes: &ClassTable, family: &[Vec<usize>]) -> Result<(), String> {
    let k = family[0].len();
    let mut closures = HashSet::new();
    for gens in family {
        let g = ClosedSet::from_positions(gens.iter().map(|&n| classes.class_of(rep_law(n))));
        let c = m.closure_of(g);
        let minimal = m.minimal_generators(c);
        check(minimal[0].len() == k, || format!("{gens:?} generates a set needing {} generators", minimal[0].len()))?;
        check(minimal.contains(&g), || format!("{gens:?} is not a minimal generating set"))?;
        check(closures.insert(c), || format!("{gens:?} generates a set already listed"))?;
    }
    let count = m.generator_counts().into_iter().filter(|&c| c == k).count();
    check(count == family.len(), || format!("{count} sets need {k} generators, {} listed", family.len()))
}

fn criterion_5(s: &Sweep) -> Outcome {
    let m = &s.run.model;
    check(m.len() == 114, || format!("{} closed sets", m.len()))?;
    let h = m.histogram();
    check(h == [1, 47, 50, 15, 1], || format!("histogram {h:?}"))?;
    family_matches(m, &s.classes, &TWO_GENERATORS.map(|g| g.to_vec()))?;
    family_matches(m, &s.classes, &THREE_GENERATORS.map(|g| g.to_vec()))?;
    family_matches(m, &s.classes, &[FOUR_GENERATORS.to_vec()])?;
    let json: serde_json::Value =
        serde_json::from_str(&read_artifact(&s.cfg.output_dir, LONG_CLASSES_FILE).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let arrays = json.as_array().ok_or("long classes is not an array")?;
    check(arrays.len() == 114, || format!("long classes has {} entries", arrays.len()))?;
    let lists: Vec<Vec<u64>> =
        arrays.iter().map(|a| a.as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect()).collect();
    check(lists.iter().all(|l| l.windows(2).all(|w| w[0] < w[1])), || "inner arrays not ascending".into())?;
    check(lists.windows(2).all(|w| (w[0].len(), &w[0]) < (w[1].len(), &w[1])), || "outer array not sorted".into())?;
    let map: serde_json::Value =
        serde_json::from_str(&read_artifact(&s.cfg.output_dir, EQ_TO_LONG_CLASS_FILE).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    check(map.as_object().map(|o| o.len()) == Some(990), || "equation map does not cover 990 laws".into())?;
    let text = read_artifact(&s.cfg.output_dir, CLOSED_SETS_FILE).map_err(|e| e.to_string())?;
    check(parse_closed_sets(&text).map(|v| v.len()).ok() == Some(114), || {
        "closed-sets file does not round-trip".into()
    })?;
    Ok(format!("114 closed sets, histogram {h:?}, 2-, 3- and 4-generator families match"))
}

// ---------------------------------------------------------------- 6

fn criterion_6(s: &Sweep) -> Outcome {
    let m = &s.run.model;
    let a1 = single(s, index_of_text(ASSOCIATIVITY).unwrap());
    let c1 = single(s, rep_law(1));
    let c00 = single(s, index_of_text(C00).unwrap());
    let (x, y, z) = (m.meet(a1, c00), m.meet(c1, c00), m.meet(m.join(a1, c1), c00));
    check(x.is_empty() && y.is_empty() && !z.is_empty(), || format!("meets {x} {y} {z}"))?;
    Ok(format!("meet(A1,C00) and meet(C1,C00) empty, meet(A1 v C1, C00) has {} laws", z.expanded(&s.classes).len()))
}

// ---------------------------------------------------------------- 7

fn criterion_7(s: &Sweep) -> Outcome {
    let report = cmd_verify(&s.cfg).map_err(|e| e.to_string())?;
    check(report.unknown == 0, || format!("{} unknown", report.unknown))?;
    let cache = cache_load(&s.cfg.cache_dir).map_err(|e| e.to_string())?;
    let small: Vec<Quasigroup> = (1..=3).flat_map(enumerate_latin_squares).collect();
    let mut checked = 0;
    for (q, v) in cache.iter() {
        check(v.verify(q), || format!("certificate for {q} fails"))?;
        if v.is_implies() {
            let hyps = q.hyp_equations();
            let goal = q.goal_equation();
            let bad = small.iter().find(|m| hyps.iter().all(|h| satisfies(m, h)) && !satisfies(m, goal));
            check(bad.is_none(), || format!("proved {q} fails in {:?}", bad.unwrap()))?;
            checked += 1;
        }
    }
    Ok(format!("{report}; {checked} implications survive all {} models of order <= 3", small.len()))
}

// ---------------------------------------------------------------- 8

fn criterion_8(s: &Sweep) -> Outcome {
    let m = &s.run.model;
    let n = s.classes.len();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for _ in 0..100 {
        let a = ClosedSet(rng.random::<u64>() & ClosedSet::full(n).0 & rng.random::<u64>());
        let b = a.union(ClosedSet(rng.random::<u64>() & ClosedSet::full(n).0 & rng.random::<u64>()));
        let (ca, cb) = (m.closure_of(a), m.closure_of(b));
        check(a.is_subset(ca), || format!("closure of {a} is not extensive"))?;
        check(ca.is_subset(cb), || format!("closure is not monotone on {a} <= {b}"))?;
        check(m.closure_of(ca) == ca, || format!("closure of {a} is not idempotent"))?;
        check(m.position(ca).is_some(), || format!("closure of {a} is not a listed set"))?;
    }
    for &a in m.sets() {
        for &b in m.sets() {
            check(m.join(a, m.meet(a, b)) == a && m.meet(a, m.join(a, b)) == a, || {
                format!("absorption fails on {a}, {b}")
            })?;
            check(m.join(a, a) == a && m.meet(a, a) == a, || format!("idempotence fails on {a}"))?;
            check(m.join(a, b) == m.join(b, a), || format!("join not commutative on {a}, {b}"))?;
        }
    }
    let cache = cache_load(&s.cfg.cache_dir).map_err(|e| e.to_string())?;
    let proved: Vec<_> = cache.iter().filter(|(q, v)| v.is_implies() && !q.is_trivial()).collect();
    check(proved.len() >= 50, || format!("only {} proved queries", proved.len()))?;
    let small = ProverConfig { max_steps: 50_000, timeout_ms: 60_000, ..ProverConfig::default() };
    let large = ProverConfig { max_steps: 200_000, timeout_ms: 120_000, ..small };
    for _ in 0..50 {
        let (q, _) = proved[rng.random_range(0..proved.len())];
        let (hyps, goal) = (q.hyp_equations(), q.goal_equation());
        if let Ok(ProveResult::Proved(_)) = prove(&hyps, goal, &small) {
            let r = prove(&hyps, goal, &large).map_err(|e| e.to_string())?;
            check(matches!(r, ProveResult::Proved(_)), || format!("{q} proved with the small budget only"))?;
        }
    }
    let entries: Vec<_> = cache.iter().map(|(q, v)| (q.clone(), v.clone())).collect();
    let (mut left, mut right) = (VerdictCache::default(), VerdictCache::default());
    for (i, (q, v)) in entries.iter().enumerate() {
        if i % 3 != 0 {
            left.insert(q.clone(), v.clone());
        }
        if i % 3 == 0 || i % 2 == 0 {
            right.insert(q.clone(), v.clone());
        }
    }
    let merge = |a: &VerdictCache, b: &VerdictCache| cache_merge(a, b).map_err(|e| e.to_string());
    check(merge(&cache, &cache)? == cache, || "merge is not idempotent".into())?;
    check(merge(&left, &right)? == merge(&right, &left)?, || "merge is not commutative".into())?;
    check(merge(&left, &right)? == cache, || "halves do not merge back to the cache".into())?;
    let (q, w) = entries
        .iter()
        .find_map(|(q, v)| match v {
            Verdict::NotImplies(w) => Some((q.clone(), w.clone())),
            _ => None,
        })
        .ok_or("no countermodel in the cache")?;
    let proof = entries.iter().find_map(|(_, v)| v.is_implies().then(|| v.clone())).unwrap();
    let mut forged = VerdictCache::default();
    forged.insert(q.clone(), proof);
    check(cache_merge(&cache, &forged).is_err(), || "conflicting verdicts merged silently".into())?;
    check(Verdict::NotImplies(w).verify(&q), || "countermodel no longer verifies".into())?;
    Ok("closure laws on 100 random sets, lattice laws on all pairs, budget monotonicity on 50 proofs, merge laws"
        .into())
}

fn main() {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, r: std::thread::Result<Outcome>| {
        let line = match r {
            Ok(Ok(msg)) => format!("[PASS] {id} {name}: {msg}"),
            Ok(Err(msg)) => {
                failed += 1;
                format!("[FAIL] {id} {name}: {msg}")
            }
            Err(_) => {
                failed += 1;
                format!("[FAIL] {id} {name}: panicked")
            }
        };
        println!("{line}");
    };
    report(1, "law generation", catch_unwind(criterion_1));
    report(2, "quasigroup semantics", catch_unwind(criterion_2));
    let sweep = catch_unwind(sweep);
    let criteria: [Criterion; 6] = [
        (3, "equivalence classes", criterion_3),
        (4, "closure sizes", criterion_4),
        (5, "closed-set census", criterion_5),
        (6, "non-distributivity", criterion_6),
        (7, "soundness audit", criterion_7),
        (8, "property suites", criterion_8),
    ];
    for (id, name, f) in criteria {
        let r = match &sweep {
            Ok(Ok(s)) => catch_unwind(AssertUnwindSafe(|| f(s))),
            Ok(Err(e)) => Ok(Err(format!("pipeline failed: {e}"))),
            Err(_) => Ok(Err("pipeline panicked".into())),
        };
        report(id, name, r);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
