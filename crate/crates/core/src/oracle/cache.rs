use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{OracleError, Query, Verdict};
use crate::models::{Assignment, Elem, Quasigroup, Witness};
use crate::prover::ProofObject;

/// Index file inside a cache directory; payloads sit next to it.
pub const CACHE_FILE: &str = "verdicts.txt";
const HEADER: &str = "# schroder verdict cache v1";

/// Verdicts keyed by query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerdictCache {
    entries: BTreeMap<Query, Verdict>,
}

impl VerdictCache {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, q: &Query) -> Option<&Verdict> {
        self.entries.get(q)
    }

    /// Inserts `v`; an Unknown never replaces a conclusive verdict.
    pub fn insert(&mut self, q: Query, v: Verdict) {
        match self.entries.get(&q) {
            Some(old) if !old.is_unknown() && v.is_unknown() => {}
            _ => {
                self.entries.insert(q, v);
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Query, &Verdict)> {
        self.entries.iter()
    }

    /// Writes the index and any missing payload files into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), OracleError> {
        fs::create_dir_all(dir)?;
        let mut lines = Vec::with_capacity(self.entries.len());
        for (q, v) in &self.entries {
            let (name, text) = payload(v);
            let path = dir.join(&name);
            if !path.exists() {
                fs::write(&path, &text)?;
            }
            lines.push(format!("{q}|{}|{name}", v.tag()));
        }
        lines.sort();
        let mut out = String::from(HEADER);
        out.push('\n');
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
        let tmp = dir.join(format!("{CACHE_FILE}.tmp"));
        fs::write(&tmp, out)?;
        fs::rename(tmp, dir.join(CACHE_FILE))?;
        Ok(())
    }
}

fn payload_text(v: &Verdict) -> String {
    match v {
        Verdict::Implies(p) => p.to_string(),
        Verdict::NotImplies(w) => {
            let vals: Vec<String> = w.assignment.0.iter().map(|a| a.to_string()).collect();
            format!("order {}\nassignment {}\n{}", w.model.order(), vals.join(" "), w.model)
        }
        Verdict::Unknown(log) => log.iter().map(|l| format!("{l}\n")).collect(),
    }
}

/// Content-addressed file name and text of a verdict's payload.
fn payload(v: &Verdict) -> (String, String) {
    let text = payload_text(v);
    let ext = match v {
        Verdict::Implies(_) => "proof",
        Verdict::NotImplies(_) => "model",
        Verdict::Unknown(_) => "log",
    };
    (format!("{}.{ext}", hex::encode(Sha256::digest(text.as_bytes()))), text)
}

fn parse_witness(text: &str) -> Option<Witness> {
    let mut lines = text.lines();
    let n: usize = lines.next()?.strip_prefix("order ")?.trim().parse().ok()?;
    let assignment = lines
        .next()?
        .strip_prefix("assignment")?
        .split_whitespace()
        .map(|t| t.parse::<Elem>().ok())
        .collect::<Option<Vec<_>>>()?;
    let mul = lines.flat_map(str::split_whitespace).map(|t| t.parse::<Elem>().ok()).collect::<Option<Vec<_>>>()?;
    if mul.len() != n * n {
        return None;
    }
    Some(Witness { model: Quasigroup::from_mul(n, mul).ok()?, assignment: Assignment(assignment) })
}

/// Loads the cache in `dir`; a missing index means an empty cache.
pub fn cache_load(dir: &Path) -> Result<VerdictCache, OracleError> {
    let index = dir.join(CACHE_FILE);
    if !index.exists() {
        return Ok(VerdictCache::default());
    }
    let text = fs::read_to_string(index)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        other => return Err(OracleError::VersionMismatch(other.map_or("", |(_, h)| h).to_string())),
    }
    let mut cache = VerdictCache::default();
    for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |msg: &str| OracleError::Malformed { line: i + 1, msg: msg.to_string() };
        let parts: Vec<&str> = line.split('|').collect();
        let [hyps, goal, tag, name] = parts[..] else { return Err(bad("expected four fields")) };
        let hyps = hyps
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>().map_err(|_| bad("bad hypothesis index")))
            .collect::<Result<Vec<_>, _>>()?;
        let goal = goal.parse::<usize>().map_err(|_| bad("bad goal index"))?;
        let q = Query::new(hyps, goal)?;
        if name.contains(['/', '\\']) {
            return Err(bad("payload reference must be a plain file name"));
        }
        let body = fs::read_to_string(dir.join(name))?;
        let v = match tag {
            "IMPLIES" => Verdict::Implies(ProofObject::parse(&body).map_err(|e| bad(&e.to_string()))?),
            "NOT_IMPLIES" => Verdict::NotImplies(parse_witness(&body).ok_or_else(|| bad("bad countermodel payload"))?),
            "UNKNOWN" => Verdict::Unknown(body.lines().map(str::to_string).collect()),
            _ => return Err(bad("unknown verdict tag")),
        };
        if let Some(old) = cache.get(&q) {
            if conflicting(old, &v) {
                return Err(OracleError::CorruptCache(q.to_string()));
            }
        }
        cache.insert(q, v);
    }
    Ok(cache)
}

fn conflicting(a: &Verdict, b: &Verdict) -> bool {
    (a.is_implies() && b.is_not_implies()) || (a.is_not_implies() && b.is_implies())
}

/// Union of two caches. Conclusive verdicts win over Unknown; when both
/// sides agree the smaller payload is kept so the result does not depend on
/// argument order. Implies against NotImplies is a `CorruptCache` error.
pub fn cache_merge(a: &VerdictCache, b: &VerdictCache) -> Result<VerdictCache, OracleError> {
    let mut out = a.clone();
    for (q, vb) in &b.entries {
        let chosen = match a.entries.get(q) {
            None => vb.clone(),
            Some(va) if conflicting(va, vb) => return Err(OracleError::CorruptCache(q.to_string())),
            Some(va) if va.is_unknown() != vb.is_unknown() => {
                if va.is_unknown() {
                    vb.clone()
                } else {
                    va.clone()
                }
            }
            Some(va) => {
                if payload_text(vb) < payload_text(va) {
                    vb.clone()
                } else {
                    va.clone()
                }
            }
        };
        out.entries.insert(q.clone(), chosen);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::cyclic_group;
    use crate::oracle::{decide, OracleConfig};

    fn sample() -> VerdictCache {
        let mut c = VerdictCache::default();
        for q in [Query::single(3, 1), Query::single(1, 3), Query::new([2, 7], 7).unwrap()] {
            let v = decide(&q, &OracleConfig::default());
            c.insert(q, v);
        }
        c.insert(Query::single(5, 6), Verdict::Unknown(vec!["prover: Timeout".into()]));
        c
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = sample();
        c.save(dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(CACHE_FILE)).unwrap();
        let body: Vec<&str> = text.lines().skip(1).collect();
        let mut sorted = body.clone();
        sorted.sort();
        assert_eq!(body, sorted);
        assert!(body.iter().any(|l| l.starts_with("3|1|IMPLIES|") && l.ends_with(".proof")));
        let back = cache_load(dir.path()).unwrap();
        assert_eq!(back, c);
        for (q, v) in back.iter() {
            assert_eq!(v.verify(q), !v.is_unknown());
        }
    }

    #[test]
    fn load_rejects_other_versions() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(CACHE_FILE), "# schroder verdict cache v0\n").unwrap();
        assert!(matches!(cache_load(dir.path()), Err(OracleError::VersionMismatch(_))));
        assert!(cache_load(&dir.path().join("absent")).unwrap().is_empty());
    }

    #[test]
    fn merge_laws() {
        let c = sample();
        let empty = VerdictCache::default();
        assert_eq!(cache_merge(&c, &empty).unwrap(), c);
        assert_eq!(cache_merge(&empty, &c).unwrap(), c);
        assert_eq!(cache_merge(&c, &c).unwrap(), c);

        let mut conflict = VerdictCache::default();
        let w = Witness { model: cyclic_group(1), assignment: Assignment::xyz(0, 0, 0) };
        conflict.insert(Query::single(3, 1), Verdict::NotImplies(w));
        assert!(matches!(cache_merge(&c, &conflict), Err(OracleError::CorruptCache(_))));

        let mut resolved = VerdictCache::default();
        resolved.insert(Query::single(5, 6), Verdict::Unknown(vec!["other".into()]));
        let ab = cache_merge(&c, &resolved).unwrap();
        let ba = cache_merge(&resolved, &c).unwrap();
        assert_eq!(ab, ba);
    }
}
