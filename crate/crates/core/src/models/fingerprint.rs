use std::io::{self, Read, Write};

use super::{enumerate_latin_squares, CompiledEquation, Quasigroup};
use crate::par;
use crate::terms::{schroeder_laws, Equation};

/// A fixed, ordered list of finite quasigroups used for satisfaction
/// fingerprints: every Latin square of order `1..=max_order` in enumeration
/// order, optionally followed by extra models.
#[derive(Debug, Clone)]
pub struct ModelPool {
    max_order: usize,
    models: Vec<Quasigroup>,
}

impl ModelPool {
    pub fn latin(max_order: usize) -> ModelPool {
        let models = (1..=max_order).flat_map(enumerate_latin_squares).collect();
        ModelPool { max_order, models }
    }

    /// Appends models after the enumerated squares.
    pub fn with_extra(mut self, extra: impl IntoIterator<Item = Quasigroup>) -> ModelPool {
        self.models.extend(extra);
        self
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn models(&self) -> &[Quasigroup] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

/// One bit per pool model, set iff the model satisfies the equation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub index: Option<usize>,
    pub max_order: usize,
    pub len: usize,
    pub bits: Vec<u64>,
}

impl Fingerprint {
    pub fn compute(e: &Equation, pool: &ModelPool) -> Fingerprint {
        let compiled = CompiledEquation::new(e);
        let len = pool.len();
        let mut bits = vec![0u64; len.div_ceil(64)];
        for (i, q) in pool.models().iter().enumerate() {
            if compiled.holds(q) {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        Fingerprint { index: e.index, max_order: pool.max_order(), len, bits }
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Every model with a bit here also has it in `other`.
    pub fn subset_of(&self, other: &Fingerprint) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }
}

/// Fingerprint of `e` over every Latin square of order at most `max_order`.
pub fn fingerprint(e: &Equation, max_order: usize) -> Fingerprint {
    Fingerprint::compute(e, &ModelPool::latin(max_order))
}

/// Fingerprints of all 990 laws over one pool.
#[derive(Debug, Clone)]
pub struct FingerprintTable {
    pool: ModelPool,
    prints: Vec<Fingerprint>,
}

impl FingerprintTable {
    pub fn build(pool: ModelPool) -> FingerprintTable {
        let prints = par::map(schroeder_laws(), |e| Fingerprint::compute(e, &pool));
        FingerprintTable { pool, prints }
    }

    /// Reassembles a table from a pool and fingerprints read back from a cache.
    pub fn from_parts(pool: ModelPool, mut prints: Vec<Fingerprint>) -> FingerprintTable {
        assert_eq!(prints.len(), schroeder_laws().len());
        for (i, p) in prints.iter_mut().enumerate() {
            assert_eq!(p.len, pool.len());
            p.index = Some(i + 1);
        }
        FingerprintTable { pool, prints }
    }

    pub fn pool(&self) -> &ModelPool {
        &self.pool
    }

    /// Fingerprint of law `index` (1-based).
    pub fn get(&self, index: usize) -> &Fingerprint {
        &self.prints[index - 1]
    }

    pub fn prints(&self) -> &[Fingerprint] {
        &self.prints
    }

    /// Pool models satisfying every listed law.
    pub fn common_models(&self, hyps: &[usize]) -> Vec<u64> {
        let words = self.pool.len().div_ceil(64);
        let mut acc = vec![u64::MAX; words];
        if let Some(last) = acc.last_mut() {
            let rem = self.pool.len() % 64;
            if rem != 0 {
                *last = (1u64 << rem) - 1;
            }
        }
        for &h in hyps {
            for (a, b) in acc.iter_mut().zip(&self.get(h).bits) {
                *a &= b;
            }
        }
        acc
    }

    /// Index of the first pool model satisfying all `hyps` but not `goal`.
    pub fn first_separating_model(&self, hyps: &[usize], goal: usize) -> Option<usize> {
        let common = self.common_models(hyps);
        let g = &self.get(goal).bits;
        common.iter().zip(g).enumerate().find_map(|(w, (a, b))| {
            let diff = a & !b;
            (diff != 0).then(|| w * 64 + diff.trailing_zeros() as usize)
        })
    }
}

const MAGIC: &[u8; 7] = b"SCHRFP1";

/// Writes the binary fingerprint cache: magic, `max_order` (u32 LE), model
/// count (u64 LE), then one LSB-first bit vector per law in index order.
pub fn write_fingerprint_cache(table: &FingerprintTable, mut out: impl Write) -> io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(table.pool.max_order() as u32).to_le_bytes())?;
    out.write_all(&(table.pool.len() as u64).to_le_bytes())?;
    let nbytes = table.pool.len().div_ceil(8);
    for fp in &table.prints {
        let bytes: Vec<u8> = fp.bits.iter().flat_map(|w| w.to_le_bytes()).take(nbytes).collect();
        out.write_all(&bytes)?;
    }
    Ok(())
}

/// Reads a cache written by [`write_fingerprint_cache`]; returns
/// `(max_order, model_count, per-law bit vectors)`.
pub fn read_fingerprint_cache(mut input: impl Read) -> io::Result<(usize, usize, Vec<Fingerprint>)> {
    let mut magic = [0u8; 7];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad fingerprint cache magic"));
    }
    let mut b4 = [0u8; 4];
    input.read_exact(&mut b4)?;
    let max_order = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let len = u64::from_le_bytes(b8) as usize;
    let nbytes = len.div_ceil(8);
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if nbytes == 0 || rest.len() % nbytes != 0 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "truncated fingerprint cache"));
    }
    let prints = rest
        .chunks(nbytes)
        .enumerate()
        .map(|(i, chunk)| {
            let mut bits = vec![0u64; len.div_ceil(64)];
            for (j, &byte) in chunk.iter().enumerate() {
                bits[j / 8] |= (byte as u64) << (8 * (j % 8));
            }
            Fingerprint { index: Some(i + 1), max_order, len, bits }
        })
        .collect();
    Ok((max_order, len, prints))
}
