//! Exact checks of identities `sum_j sign_j * A_j * B_j = 0` between products
//! of q-characters, without materialising the products.
//!
//! Monomials are packed as biased exponent fields in a few machine words, so
//! a product of two monomials is plain word addition. The work is split by an
//! additive grading, one target grade at a time, which keeps the accumulator
//! small.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::monomial::{Monomial, QCharacter, Var};

const MAX_PRODUCTS: usize = 3;
const MAX_WORDS: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityReport {
    /// Distinct monomials of each product.
    pub product_terms: Vec<usize>,
    /// Number of monomials whose total coefficient is nonzero.
    pub residue_count: usize,
    /// A few of them.
    pub residue: Vec<(Monomial, BigInt)>,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.residue_count == 0
    }
}

struct Layout {
    vars: Vec<Var>,
    bias: i64,
    width: u32,
    per_word: usize,
    words: usize,
}

impl Layout {
    fn new(chars: &[&QCharacter]) -> Result<Self> {
        let mut vars = BTreeSet::new();
        let mut bias = 0i64;
        for c in chars {
            for (m, _) in c.terms() {
                for (v, e) in m.iter() {
                    vars.insert(v);
                    bias = bias.max(e.abs());
                }
            }
        }
        let width = 64 - (4 * bias as u64).leading_zeros().min(63);
        let per_word = (64 / width) as usize;
        let words = vars.len().div_ceil(per_word).max(1);
        if words > MAX_WORDS {
            return Err(Error::Unsupported(format!(
                "{} variables do not fit the packed form",
                vars.len()
            )));
        }
        Ok(Layout {
            vars: vars.into_iter().collect(),
            bias,
            width,
            per_word,
            words,
        })
    }

    fn pack(&self, index: &FxHashMap<Var, usize>, m: &Monomial, out: &mut [u64]) {
        let mut fields = vec![self.bias; self.vars.len()];
        for (v, e) in m.iter() {
            fields[index[&v]] += e;
        }
        out.iter_mut().for_each(|w| *w = 0);
        for (x, e) in fields.into_iter().enumerate() {
            out[x / self.per_word] |= (e as u64) << (self.width as usize * (x % self.per_word));
        }
    }

    /// Unpacks a sum of two packed monomials.
    fn unpack2(&self, key: &[u64]) -> Monomial {
        let mask = (1u64 << self.width) - 1;
        Monomial::from_pairs(self.vars.iter().enumerate().map(|(x, v)| {
            let f = key[x / self.per_word] >> (self.width as usize * (x % self.per_word)) & mask;
            (v.node(), v.param(), f as i64 - 2 * self.bias)
        }))
    }
}

struct Packed {
    keys: Vec<u64>,
    coeffs: Vec<i64>,
    /// `(grade, start, end)` over terms sorted by grade.
    groups: Vec<(i64, usize, usize)>,
}

fn grade_weight(x: usize) -> i64 {
    (x * 7919 % 2003) as i64 - 1001
}

fn pack_char(layout: &Layout, c: &QCharacter) -> Result<Packed> {
    let index: FxHashMap<Var, usize> = layout.vars.iter().enumerate().map(|(x, v)| (*v, x)).collect();
    let mut rows: Vec<(i64, Vec<u64>, i64)> = Vec::with_capacity(c.len());
    for (m, k) in c.terms() {
        let k = k
            .to_i64()
            .ok_or_else(|| Error::Unsupported("coefficient exceeds 64 bits".into()))?;
        let grade = m.iter().map(|(v, e)| e * grade_weight(index[&v])).sum();
        let mut key = vec![0u64; layout.words];
        layout.pack(&index, m, &mut key);
        rows.push((grade, key, k));
    }
    rows.sort_by_key(|r| r.0);
    let mut out = Packed {
        keys: Vec::new(),
        coeffs: Vec::new(),
        groups: Vec::new(),
    };
    for (x, (g, key, k)) in rows.into_iter().enumerate() {
        match out.groups.last_mut() {
            Some(last) if last.0 == g => last.2 = x + 1,
            _ => out.groups.push((g, x, x + 1)),
        }
        out.keys.extend(key);
        out.coeffs.push(k);
    }
    Ok(out)
}

/// Open addressing accumulator, reused across grades.
struct Table<const W: usize> {
    keys: Vec<[u64; W]>,
    vals: Vec<[i64; MAX_PRODUCTS]>,
    used: Vec<u32>,
    bits: u32,
}

const EMPTY: u64 = u64::MAX;

#[inline]
fn hash<const W: usize>(key: &[u64; W]) -> u64 {
    let mut h = 0u64;
    for &k in key {
        h = (h.rotate_left(5) ^ k).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
    }
    h
}

impl<const W: usize> Table<W> {
    fn new(bits: u32) -> Self {
        Table {
            keys: vec![[EMPTY; W]; 1 << bits],
            vals: vec![[0; MAX_PRODUCTS]; 1 << bits],
            used: Vec::new(),
            bits,
        }
    }

    #[inline]
    fn slot(&self, key: &[u64; W]) -> usize {
        (hash(key) >> (64 - self.bits)) as usize
    }

    #[inline]
    fn add(&mut self, key: [u64; W], j: usize, c: i64) {
        if 2 * self.used.len() >= 1 << self.bits {
            self.grow();
        }
        let mask = (1 << self.bits) - 1;
        let mut s = self.slot(&key);
        loop {
            if self.keys[s][0] == EMPTY {
                self.keys[s] = key;
                self.used.push(s as u32);
                self.vals[s][j] += c;
                return;
            }
            if self.keys[s] == key {
                self.vals[s][j] += c;
                return;
            }
            s = (s + 1) & mask;
        }
    }

    /// Uses the first `2^bits` slots. Only called while empty.
    fn resize(&mut self, bits: u32) {
        if 1 << bits > self.keys.len() {
            *self = Table::new(bits);
        }
        self.bits = bits;
    }

    fn grow(&mut self) {
        let old: Vec<([u64; W], [i64; MAX_PRODUCTS])> = self
            .used
            .iter()
            .map(|&s| (self.keys[s as usize], self.vals[s as usize]))
            .collect();
        self.drain(|_, _| {});
        self.resize(self.bits + 1);
        for (k, v) in old {
            for (j, c) in v.into_iter().enumerate() {
                if c != 0 {
                    self.add(k, j, c);
                }
            }
            if v.iter().all(|&c| c == 0) {
                self.add(k, 0, 0);
            }
        }
    }

    fn drain(&mut self, mut f: impl FnMut(&[u64; W], &[i64; MAX_PRODUCTS])) {
        for &s in &self.used {
            let s = s as usize;
            f(&self.keys[s], &self.vals[s]);
            self.keys[s] = [EMPTY; W];
            self.vals[s] = [0; MAX_PRODUCTS];
        }
        self.used.clear();
    }
}

type Entry<const W: usize> = ([u64; W], u8, i64);

fn settle<const W: usize>(
    report: &mut IdentityReport,
    layout: &Layout,
    signs: &[i64],
    key: &[u64; W],
    vals: &[i64; MAX_PRODUCTS],
) {
    let mut total = 0i64;
    for (j, v) in vals.iter().take(signs.len()).enumerate() {
        if *v != 0 {
            report.product_terms[j] += 1;
        }
        total += signs[j] * v;
    }
    if total != 0 {
        report.residue_count += 1;
        if report.residue.len() < 8 {
            report.residue.push((layout.unpack2(key), BigInt::from(total)));
        }
    }
}

fn run<const W: usize>(layout: &Layout, signs: &[i64], packed: &[(Packed, Packed)]) -> IdentityReport {
    // group pairs of all products, ordered by the grade of their product
    let mut plan: Vec<(i64, u8, u32, u32)> = Vec::new();
    for (j, (a, b)) in packed.iter().enumerate() {
        for (ia, ga) in a.groups.iter().enumerate() {
            for (ib, gb) in b.groups.iter().enumerate() {
                plan.push((ga.0 + gb.0, j as u8, ia as u32, ib as u32));
            }
        }
    }
    plan.sort_unstable();
    let mut report = IdentityReport {
        product_terms: vec![0; packed.len()],
        residue_count: 0,
        residue: Vec::new(),
    };
    let mut acc: Table<W> = Table::new(10);
    let mut buffers: Vec<Vec<Entry<W>>> = Vec::new();
    for run in plan.chunk_by(|x, y| x.0 == y.0) {
        let pairs: usize = run
            .iter()
            .map(|&(_, j, ia, ib)| {
                let (a, b) = &packed[j as usize];
                let (ga, gb) = (a.groups[ia as usize], b.groups[ib as usize]);
                (ga.2 - ga.1) * (gb.2 - gb.1)
            })
            .sum();
        let parts = (pairs / 2048).next_power_of_two().min(4096);
        let emit = |acc: &mut Table<W>, parts_buf: &mut Vec<Vec<Entry<W>>>| {
            for &(_, j, ia, ib) in run {
                let (a, b) = &packed[j as usize];
                let (_, sa, ea) = a.groups[ia as usize];
                let (_, sb, eb) = b.groups[ib as usize];
                for x in sa..ea {
                    let ka: &[u64] = &a.keys[x * W..x * W + W];
                    let ca = a.coeffs[x];
                    for y in sb..eb {
                        let kb = &b.keys[y * W..y * W + W];
                        let mut key = [0u64; W];
                        for w in 0..W {
                            key[w] = ka[w] + kb[w];
                        }
                        let c = ca * b.coeffs[y];
                        if parts == 1 {
                            acc.add(key, j as usize, c);
                        } else {
                            parts_buf[hash(&key) as usize & (parts - 1)].push((key, j, c));
                        }
                    }
                }
            }
        };
        if parts == 1 {
            acc.resize(pairs.next_power_of_two().trailing_zeros().clamp(8, 24));
            emit(&mut acc, &mut buffers);
            acc.drain(|key, vals| settle(&mut report, layout, signs, key, vals));
            continue;
        }
        if buffers.len() < parts {
            buffers.resize_with(parts, Vec::new);
        }
        emit(&mut acc, &mut buffers);
        for buf in buffers.iter_mut().take(parts) {
            acc.resize((2 * buf.len()).next_power_of_two().trailing_zeros().clamp(8, 24));
            for &(key, j, c) in buf.iter() {
                acc.add(key, j as usize, c);
            }
            buf.clear();
            acc.drain(|key, vals| settle(&mut report, layout, signs, key, vals));
        }
    }
    report
}

/// Checks `sum_j sign_j * left_j * right_j = 0` exactly.
pub fn check_product_identity(products: &[(i64, &QCharacter, &QCharacter)]) -> Result<IdentityReport> {
    if products.len() > MAX_PRODUCTS {
        return Err(Error::Unsupported(format!("at most {MAX_PRODUCTS} products")));
    }
    let chars: Vec<&QCharacter> = products.iter().flat_map(|(_, a, b)| [*a, *b]).collect();
    let layout = Layout::new(&chars)?;
    let signs: Vec<i64> = products.iter().map(|p| p.0).collect();
    let packed: Vec<(Packed, Packed)> = products
        .iter()
        .map(|(_, a, b)| {
            // the smaller factor goes inside the inner loop
            let (a, b) = if a.len() >= b.len() { (a, b) } else { (b, a) };
            Ok((pack_char(&layout, a)?, pack_char(&layout, b)?))
        })
        .collect::<Result<_>>()?;
    Ok(match layout.words {
        1 => run::<1>(&layout, &signs, &packed),
        2 => run::<2>(&layout, &signs, &packed),
        3 => run::<3>(&layout, &signs, &packed),
        4 => run::<4>(&layout, &signs, &packed),
        5 => run::<5>(&layout, &signs, &packed),
        6 => run::<6>(&layout, &signs, &packed),
        7 => run::<7>(&layout, &signs, &packed),
        _ => run::<8>(&layout, &signs, &packed),
    })
}

/// Dominant part of `sum_j sign_j * left_j * right_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DominantPart {
    /// Dominant monomials of each product, with coefficients.
    pub per_product: Vec<Vec<(Monomial, BigInt)>>,
    /// Dominant monomials of the signed sum with nonzero coefficient.
    pub residue: Vec<(Monomial, BigInt)>,
    /// Term pairs that passed the support filter.
    pub pairs_checked: u64,
}

impl DominantPart {
    /// No dominant monomial survives in the signed sum.
    pub fn holds(&self) -> bool {
        self.residue.is_empty()
    }
}

struct Dense {
    exps: Vec<i8>,
    coeffs: Vec<i64>,
}

fn dense_char(c: &QCharacter, index: &FxHashMap<Var, usize>, stride: usize) -> Result<Dense> {
    let mut exps = vec![0i8; c.len() * stride];
    let mut coeffs = Vec::with_capacity(c.len());
    for (x, (m, k)) in c.terms().enumerate() {
        for (v, e) in m.iter() {
            exps[x * stride + index[&v]] =
                i8::try_from(e).map_err(|_| Error::Unsupported(format!("exponent {e} in {m}")))?;
        }
        coeffs.push(
            k.to_i64()
                .ok_or_else(|| Error::Unsupported(format!("coefficient {k}")))?,
        );
    }
    Ok(Dense { exps, coeffs })
}

/// For each variable and threshold `e >= 1`, the monomials with exponent
/// at least `e`, as a bitset.
struct Postings {
    words: usize,
    sets: FxHashMap<(usize, i8), Vec<u64>>,
}

impl Postings {
    fn new(d: &Dense, stride: usize) -> Self {
        let n = d.coeffs.len();
        let words = n.div_ceil(64);
        let mut sets: FxHashMap<(usize, i8), Vec<u64>> = FxHashMap::default();
        for x in 0..n {
            for (v, &e) in d.exps[x * stride..][..stride].iter().enumerate() {
                for t in 1..=e {
                    sets.entry((v, t)).or_insert_with(|| vec![0; words])[x / 64] |= 1 << (x % 64);
                }
            }
        }
        Postings { words, sets }
    }

    /// Monomials whose positive part covers `need`.
    fn covering(&self, need: &[(usize, i8)]) -> Option<Vec<u64>> {
        let mut lists: Vec<&Vec<u64>> = Vec::with_capacity(need.len());
        for key in need {
            lists.push(self.sets.get(key)?);
        }
        let mut acc = vec![u64::MAX; self.words];
        for l in lists {
            let mut any = 0;
            for (w, x) in acc.iter_mut().zip(l) {
                *w &= x;
                any |= *w;
            }
            if any == 0 {
                return None;
            }
        }
        Some(acc)
    }
}

/// Dominant monomials of each product `a * b` and of their signed sum,
/// computed without expanding the products.
///
/// When every product is a product of q-characters of modules, the signed
/// sum vanishes exactly when its dominant part does, so `holds` is an exact
/// test of the identity.
pub fn dominant_part(products: &[(i64, &QCharacter, &QCharacter)]) -> Result<DominantPart> {
    let mut vars = BTreeSet::new();
    for (_, a, b) in products {
        for c in [a, b] {
            for (m, _) in c.terms() {
                vars.extend(m.iter().map(|(v, _)| v));
            }
        }
    }
    let vars: Vec<Var> = vars.into_iter().collect();
    let index: FxHashMap<Var, usize> = vars.iter().enumerate().map(|(x, v)| (*v, x)).collect();
    let stride = vars.len().max(1);
    let to_mono = |e: &[i8]| {
        Monomial::from_pairs(
            vars.iter()
                .zip(e)
                .filter(|(_, e)| **e != 0)
                .map(|(v, e)| (v.node(), v.param(), *e as i64)),
        )
    };
    let mut out = DominantPart {
        per_product: Vec::new(),
        residue: Vec::new(),
        pairs_checked: 0,
    };
    let mut total: FxHashMap<Vec<i8>, i64> = FxHashMap::default();
    let mut sum = vec![0i8; stride];
    for (sign, a, b) in products {
        let da = dense_char(a, &index, stride)?;
        let db = dense_char(b, &index, stride)?;
        let post = Postings::new(&db, stride);
        // monomials of `a` grouped by their negative part
        let mut by_neg: FxHashMap<Vec<(usize, i8)>, Vec<usize>> = FxHashMap::default();
        for x in 0..da.coeffs.len() {
            let neg: Vec<(usize, i8)> = da.exps[x * stride..][..stride]
                .iter()
                .enumerate()
                .filter(|e| *e.1 < 0)
                .map(|(v, e)| (v, -e))
                .collect();
            by_neg.entry(neg).or_default().push(x);
        }
        let mut found: FxHashMap<Vec<i8>, i64> = FxHashMap::default();
        for (neg, xs) in &by_neg {
            let Some(cands) = post.covering(neg) else { continue };
            for (w, &bits) in cands.iter().enumerate() {
                let mut bits = bits;
                while bits != 0 {
                    let y = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    if y >= db.coeffs.len() {
                        break;
                    }
                    let eb = &db.exps[y * stride..][..stride];
                    for &x in xs {
                        out.pairs_checked += 1;
                        let ea = &da.exps[x * stride..][..stride];
                        let mut ok = true;
                        for f in 0..stride {
                            sum[f] = ea[f] + eb[f];
                            ok &= sum[f] >= 0;
                        }
                        if ok {
                            *found.entry(sum.clone()).or_default() += da.coeffs[x] * db.coeffs[y];
                        }
                    }
                }
            }
        }
        let mut terms: Vec<(Monomial, BigInt)> = Vec::new();
        for (e, k) in found {
            if k != 0 {
                *total.entry(e.clone()).or_default() += sign * k;
                terms.push((to_mono(&e), BigInt::from(k)));
            }
        }
        terms.sort_by(|x, y| x.0.lex_cmp(&y.0).reverse());
        out.per_product.push(terms);
    }
    let mut residue: Vec<(Monomial, BigInt)> = total
        .into_iter()
        .filter(|(_, k)| *k != 0)
        .map(|(e, k)| (to_mono(&e), BigInt::from(k)))
        .collect();
    residue.sort_by(|x, y| x.0.lex_cmp(&y.0).reverse());
    out.residue = residue;
    Ok(out)
}
