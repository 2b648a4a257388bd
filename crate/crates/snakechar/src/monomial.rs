//! Laurent monomials in the variables `Y_{i,s}` and integer combinations of them.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Root system type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    A,
    B,
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Kind::A),
            "B" | "b" => Ok(Kind::B),
            _ => Err(Error::Parse(format!("unknown type `{s}`"))),
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::A => write!(f, "A"),
            Kind::B => write!(f, "B"),
        }
    }
}

/// Cartan matrix and symmetrizers. Nodes are numbered `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CartanData {
    pub kind: Kind,
    pub n: usize,
    c: Vec<Vec<i64>>,
    d: Vec<i64>,
}

impl CartanData {
    pub fn new(kind: Kind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("rank must be positive".into()));
        }
        if kind == Kind::B && n < 2 {
            return Err(Error::Domain("type B needs rank at least 2".into()));
        }
        let mut c = vec![vec![0; n]; n];
        for (i, row) in c.iter_mut().enumerate() {
            row[i] = 2;
            if i > 0 {
                row[i - 1] = -1;
            }
            if i + 1 < n {
                row[i + 1] = -1;
            }
        }
        let d = match kind {
            Kind::A => vec![1; n],
            Kind::B => {
                // C_{n,n-1} = -2 with 1-based indices
                c[n - 1][n - 2] = -2;
                let mut d = vec![2; n];
                d[n - 1] = 1;
                d
            }
        };
        Ok(CartanData { kind, n, c, d })
    }

    pub fn a(n: usize) -> Self {
        Self::new(Kind::A, n).expect("valid rank")
    }

    pub fn b(n: usize) -> Self {
        Self::new(Kind::B, n).expect("valid rank")
    }

    /// `C_{ij}` for 1-based nodes.
    pub fn c(&self, i: usize, j: usize) -> i64 {
        self.c[i - 1][j - 1]
    }

    /// Symmetrizer `d_i`.
    pub fn d(&self, i: usize) -> i64 {
        self.d[i - 1]
    }

    /// `b_{ij} = d_i C_{ij}`.
    pub fn b_entry(&self, i: usize, j: usize) -> i64 {
        self.d(i) * self.c(i, j)
    }

    /// `max d_i`.
    pub fn t_max(&self) -> i64 {
        *self.d.iter().max().unwrap()
    }

    pub fn check_node(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            Err(Error::Domain(format!("node {i} outside 1..={}", self.n)))
        } else {
            Ok(())
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> {
        1..=self.n
    }
}

/// A variable `Y_{i,s}`. Ordered by `s` first, then `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var {
    pub s: i32,
    pub i: u32,
}

impl Var {
    pub fn new(i: usize, s: i64) -> Self {
        Var {
            s: s as i32,
            i: i as u32,
        }
    }

    pub fn node(&self) -> usize {
        self.i as usize
    }

    pub fn param(&self) -> i64 {
        self.s as i64
    }
}

/// Sparse Laurent monomial, stored as `(var, exponent)` pairs sorted by variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    exps: Vec<(Var, i32)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dominance {
    Dominant,
    AntiDominant,
    Both,
    Neither,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn y(i: usize, s: i64) -> Self {
        Monomial {
            exps: vec![(Var::new(i, s), 1)],
        }
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, i64, i64)>>(it: I) -> Self {
        let mut map: BTreeMap<Var, i64> = BTreeMap::new();
        for (i, s, e) in it {
            *map.entry(Var::new(i, s)).or_default() += e;
        }
        Monomial {
            exps: map
                .into_iter()
                .filter(|(_, e)| *e != 0)
                .map(|(v, e)| (v, e as i32))
                .collect(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (Var, i64)> + '_ {
        self.exps.iter().map(|&(v, e)| (v, e as i64))
    }

    pub fn exponent(&self, i: usize, s: i64) -> i64 {
        let v = Var::new(i, s);
        self.exps
            .binary_search_by(|(w, _)| w.cmp(&v))
            .map(|k| self.exps[k].1 as i64)
            .unwrap_or(0)
    }

    /// Greatest variable present.
    pub fn top(&self) -> Option<(Var, i64)> {
        self.exps.last().map(|&(v, e)| (v, e as i64))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.exps, &other.exps);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut x, mut y) = (0, 0);
        while x < a.len() && y < b.len() {
            match a[x].0.cmp(&b[y].0) {
                Ordering::Less => {
                    out.push(a[x]);
                    x += 1;
                }
                Ordering::Greater => {
                    out.push(b[y]);
                    y += 1;
                }
                Ordering::Equal => {
                    let e = a[x].1 + b[y].1;
                    if e != 0 {
                        out.push((a[x].0, e));
                    }
                    x += 1;
                    y += 1;
                }
            }
        }
        out.extend_from_slice(&a[x..]);
        out.extend_from_slice(&b[y..]);
        Monomial { exps: out }
    }

    pub fn inv(&self) -> Monomial {
        Monomial {
            exps: self.exps.iter().map(|&(v, e)| (v, -e)).collect(),
        }
    }

    pub fn div(&self, other: &Monomial) -> Monomial {
        self.mul(&other.inv())
    }

    pub fn pow(&self, k: i64) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        Monomial {
            exps: self.exps.iter().map(|&(v, e)| (v, e * k as i32)).collect(),
        }
    }

    pub fn classify(&self) -> Dominance {
        let pos = self.exps.iter().any(|&(_, e)| e > 0);
        let neg = self.exps.iter().any(|&(_, e)| e < 0);
        match (pos, neg) {
            (false, false) => Dominance::Both,
            (true, false) => Dominance::Dominant,
            (false, true) => Dominance::AntiDominant,
            (true, true) => Dominance::Neither,
        }
    }

    pub fn is_dominant(&self) -> bool {
        self.exps.iter().all(|&(_, e)| e > 0)
    }

    pub fn is_anti_dominant(&self) -> bool {
        self.exps.iter().all(|&(_, e)| e < 0)
    }

    /// All exponents of node `i` are nonnegative.
    pub fn is_i_dominant(&self, i: usize) -> bool {
        self.exps.iter().all(|&(v, e)| v.node() != i || e > 0)
    }

    /// Right negativity. With a single base point every parameter lies on one
    /// chain, so only the largest parameter present has to be inspected.
    pub fn is_right_negative(&self) -> Result<bool> {
        let Some((top, _)) = self.top() else {
            return Err(Error::Domain("right negativity of the empty monomial".into()));
        };
        Ok(self.exps.iter().filter(|(v, _)| v.s == top.s).all(|&(_, e)| e <= 0))
    }

    /// Keep only the variables of node `j` (the projection `beta_j`).
    pub fn restrict_node(&self, j: usize) -> Monomial {
        Monomial {
            exps: self.exps.iter().filter(|(v, _)| v.node() == j).copied().collect(),
        }
    }

    /// Total order used by division: compare exponents at the greatest
    /// variable where the monomials differ.
    pub fn lex_cmp(&self, other: &Monomial) -> Ordering {
        let (a, b) = (&self.exps, &other.exps);
        let (mut x, mut y) = (a.len(), b.len());
        loop {
            match (x, y) {
                (0, 0) => return Ordering::Equal,
                (0, _) => {
                    return if b[y - 1].1 > 0 {
                        Ordering::Less
                    } else {
                        Ordering::Greater
                    }
                }
                (_, 0) => {
                    return if a[x - 1].1 > 0 {
                        Ordering::Greater
                    } else {
                        Ordering::Less
                    }
                }
                _ => {}
            }
            let (va, ea) = a[x - 1];
            let (vb, eb) = b[y - 1];
            match va.cmp(&vb) {
                Ordering::Greater => return if ea > 0 { Ordering::Greater } else { Ordering::Less },
                Ordering::Less => return if eb > 0 { Ordering::Less } else { Ordering::Greater },
                Ordering::Equal => {
                    if ea != eb {
                        return ea.cmp(&eb);
                    }
                    x -= 1;
                    y -= 1;
                }
            }
        }
    }

    /// Shift every spectral parameter by `ds`.
    pub fn shift(&self, ds: i64) -> Monomial {
        Monomial {
            exps: self
                .exps
                .iter()
                .map(|&(v, e)| {
                    (
                        Var {
                            s: v.s + ds as i32,
                            i: v.i,
                        },
                        e,
                    )
                })
                .collect(),
        }
    }

    pub fn to_triples(&self) -> Vec<(usize, i64, i64)> {
        self.iter().map(|(v, e)| (v.node(), v.param(), e)).collect()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exps.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for &(v, e) in &self.exps {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{}_{}", v.i, v.s)?;
            if e != 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Monomial {
    type Err = Error;

    /// Parses whitespace-separated tokens `i_s` or `i_s^e`; `1` is the unit.
    fn from_str(text: &str) -> Result<Self> {
        let mut triples = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "1" {
                continue;
            }
            triples.push(parse_token(tok)?);
        }
        Ok(Monomial::from_pairs(triples))
    }
}

fn parse_token(tok: &str) -> Result<(usize, i64, i64)> {
    let bad = || Error::Parse(format!("malformed variable `{tok}`"));
    let (body, e) = match tok.split_once('^') {
        Some((b, e)) => (b, e.parse::<i64>().map_err(|_| bad())?),
        None => (tok, 1),
    };
    let (i, s) = body.split_once('_').ok_or_else(bad)?;
    let i = i.parse::<usize>().map_err(|_| bad())?;
    let s = s.parse::<i64>().map_err(|_| bad())?;
    if i == 0 {
        return Err(bad());
    }
    Ok((i, s, e))
}

/// `A_{i,s}`.
pub fn a_monomial(cd: &CartanData, i: usize, s: i64) -> Result<Monomial> {
    cd.check_node(i)?;
    let di = cd.d(i);
    let mut t = vec![(i, s + di, 1), (i, s - di, 1)];
    for j in cd.nodes() {
        if j == i {
            continue;
        }
        match cd.c(j, i) {
            -1 => t.push((j, s, -1)),
            -2 => {
                t.push((j, s + 1, -1));
                t.push((j, s - 1, -1));
            }
            -3 => {
                t.push((j, s + 2, -1));
                t.push((j, s, -1));
                t.push((j, s - 2, -1));
            }
            _ => {}
        }
    }
    Ok(Monomial::from_pairs(t))
}

/// Multiplicities of the `A_{i,s}` factors with `m2 = m * prod A^{v}`, if
/// the ratio lies in the lattice generated by the `A`'s.
pub fn a_expansion(cd: &CartanData, m: &Monomial, m2: &Monomial) -> Option<BTreeMap<Var, i64>> {
    let mut r = m2.div(m);
    let mut out = BTreeMap::new();
    // the bottom variable of the lowest factor never cancels
    let floor = r.iter().map(|(v, _)| v.param()).min().unwrap_or(0);
    // every A_{i,s} has top variable Y_{i,s+d_i} with exponent one
    while let Some((v, e)) = r.top() {
        let i = v.node();
        if i > cd.n {
            return None;
        }
        let s = v.param() - cd.d(i);
        if s <= floor {
            return None;
        }
        let a = a_monomial(cd, i, s).ok()?;
        r = r.mul(&a.pow(-e));
        out.insert(Var::new(i, s), e);
    }
    Some(out)
}

/// `m <= m2` in the partial order: `m2 / m` is a product of `A`'s.
pub fn leq(cd: &CartanData, m: &Monomial, m2: &Monomial) -> bool {
    a_expansion(cd, m, m2).is_some_and(|v| v.values().all(|&e| e >= 0))
}

/// Integer combination of monomials with no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QCharacter {
    terms: BTreeMap<Monomial, BigInt>,
}

impl QCharacter {
    pub fn zero() -> Self {
        QCharacter::default()
    }

    pub fn one() -> Self {
        Self::monomial(Monomial::one())
    }

    pub fn monomial(m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(m, BigInt::one());
        QCharacter { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, BigInt)>>(it: I) -> Self {
        let mut c = QCharacter::zero();
        for (m, k) in it {
            c.add_term(m, k);
        }
        c
    }

    pub fn add_term(&mut self, m: Monomial, k: BigInt) {
        if k.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(k);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += k;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// Greatest term in the division order.
    pub fn leading(&self) -> Option<(&Monomial, &BigInt)> {
        self.terms.iter().max_by(|a, b| a.0.lex_cmp(b.0))
    }

    pub fn trailing(&self) -> Option<(&Monomial, &BigInt)> {
        self.terms.iter().min_by(|a, b| a.0.lex_cmp(b.0))
    }

    pub fn add(&self, other: &QCharacter) -> QCharacter {
        let mut out = self.clone();
        for (m, k) in &other.terms {
            out.add_term(m.clone(), k.clone());
        }
        out
    }

    pub fn sub(&self, other: &QCharacter) -> QCharacter {
        let mut out = self.clone();
        for (m, k) in &other.terms {
            out.add_term(m.clone(), -k.clone());
        }
        out
    }

    pub fn scale(&self, k: &BigInt) -> QCharacter {
        if k.is_zero() {
            return QCharacter::zero();
        }
        QCharacter {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> QCharacter {
        QCharacter {
            terms: self.terms.iter().map(|(x, c)| (x.mul(m), c.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &QCharacter) -> QCharacter {
        qc_mul(self, other)
    }

    pub fn dominant_terms(&self) -> Vec<(Monomial, BigInt)> {
        self.terms
            .iter()
            .filter(|(m, _)| m.is_dominant())
            .map(|(m, k)| (m.clone(), k.clone()))
            .collect()
    }

    pub fn anti_dominant_terms(&self) -> Vec<(Monomial, BigInt)> {
        self.terms
            .iter()
            .filter(|(m, _)| m.is_anti_dominant())
            .map(|(m, k)| (m.clone(), k.clone()))
            .collect()
    }

    pub fn restrict_classical(&self) -> ClassicalCharacter {
        let mut out = ClassicalCharacter::default();
        for (m, k) in &self.terms {
            let mut w: BTreeMap<u32, i64> = BTreeMap::new();
            for (v, e) in m.iter() {
                *w.entry(v.i).or_default() += e;
            }
            let w: Vec<(u32, i64)> = w.into_iter().filter(|(_, e)| *e != 0).collect();
            out.add_term(w, k.clone());
        }
        out
    }

    /// Every coefficient equals one.
    pub fn is_thin(&self) -> bool {
        self.terms.values().all(|k| k.is_one())
    }

    pub fn shift(&self, ds: i64) -> QCharacter {
        QCharacter {
            terms: self.terms.iter().map(|(m, k)| (m.shift(ds), k.clone())).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(m, k)| {
                let m: Vec<[i64; 3]> = m.iter().map(|(v, e)| [v.node() as i64, v.param(), e]).collect();
                serde_json::json!({ "m": m, "c": k.to_string() })
            })
            .collect();
        serde_json::json!({ "terms": terms })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Term {
            m: Vec<(usize, i64, i64)>,
            c: String,
        }
        #[derive(Deserialize)]
        struct Doc {
            terms: Vec<Term>,
        }
        let doc: Doc = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mut out = QCharacter::zero();
        for t in doc.terms {
            if t.m.iter().any(|&(i, _, _)| i == 0) {
                return Err(Error::Parse("node index 0".into()));
            }
            let k: BigInt =
                t.c.parse()
                    .map_err(|_| Error::Parse(format!("bad coefficient `{}`", t.c)))?;
            out.add_term(Monomial::from_pairs(t.m), k);
        }
        Ok(out)
    }
}

impl fmt::Display for QCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest terms first
        let mut ts: Vec<_> = self.terms.iter().collect();
        ts.sort_by(|a, b| b.0.lex_cmp(a.0));
        for (n, (m, k)) in ts.into_iter().enumerate() {
            let neg = k.is_negative();
            if n > 0 {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            } else if neg {
                write!(f, "- ")?;
            }
            let a = k.abs();
            if a.is_one() {
                write!(f, "{m}")?;
            } else if m.is_one() {
                write!(f, "{a}")?;
            } else {
                write!(f, "{a} {m}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for QCharacter {
    type Err = Error;

    /// Parses `m + m - 3 m ...` with monomials in the token grammar.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "0" {
            return Ok(QCharacter::zero());
        }
        let mut out = QCharacter::zero();
        let mut sign = BigInt::one();
        let mut cur: Vec<&str> = Vec::new();
        let flush = |cur: &mut Vec<&str>, sign: &BigInt, out: &mut QCharacter| -> Result<()> {
            if cur.is_empty() {
                return Err(Error::Parse("empty term".into()));
            }
            let mut k = sign.clone();
            let mut toks: &[&str] = cur;
            if !toks[0].contains('_') && toks[0] != "1" || (toks[0] == "1" && toks.len() > 1) {
                let c: BigInt = toks[0]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coefficient `{}`", toks[0])))?;
                k *= c;
                toks = &toks[1..];
            }
            let m: Monomial = toks.join(" ").parse()?;
            out.add_term(m, k);
            cur.clear();
            Ok(())
        };
        let mut first = true;
        for tok in text.split_whitespace() {
            match tok {
                "+" | "-" => {
                    if !(first && cur.is_empty()) {
                        flush(&mut cur, &sign, &mut out)?;
                    }
                    sign = if tok == "-" { -BigInt::one() } else { BigInt::one() };
                }
                _ => cur.push(tok),
            }
            first = false;
        }
        flush(&mut cur, &sign, &mut out)?;
        Ok(out)
    }
}

/// Exact product. Coefficients are accumulated in `i128` and promoted to
/// big integers only on overflow.
pub fn qc_mul(a: &QCharacter, b: &QCharacter) -> QCharacter {
    if a.is_zero() || b.is_zero() {
        return QCharacter::zero();
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let small_terms: Vec<(&Monomial, Option<i128>, &BigInt)> =
        small.terms.iter().map(|(m, k)| (m, k.to_i128(), k)).collect();
    let large_terms: Vec<(&Monomial, Option<i128>, &BigInt)> =
        large.terms.iter().map(|(m, k)| (m, k.to_i128(), k)).collect();
    let chunk = |part: &[(&Monomial, Option<i128>, &BigInt)]| {
        let mut fast: HashMap<Monomial, i128> = HashMap::new();
        let mut slow: HashMap<Monomial, BigInt> = HashMap::new();
        for &(ma, ka, kba) in part {
            for &(mb, kb, kbb) in &large_terms {
                let m = ma.mul(mb);
                let prod = match (ka, kb) {
                    (Some(x), Some(y)) => x.checked_mul(y),
                    _ => None,
                };
                match prod {
                    Some(p) => {
                        let slot = fast.entry(m).or_insert(0);
                        match slot.checked_add(p) {
                            Some(v) => *slot = v,
                            None => {
                                let m = ma.mul(mb);
                                *slow.entry(m).or_default() += BigInt::from(p);
                            }
                        }
                    }
                    None => *slow.entry(m).or_default() += kba * kbb,
                }
            }
        }
        (fast, slow)
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<(HashMap<Monomial, i128>, HashMap<Monomial, BigInt>)> =
        if small_terms.len() * large_terms.len() > 1 << 16 {
            use rayon::prelude::*;
            let size = (small_terms.len() / rayon::current_num_threads().max(1)).max(1);
            small_terms.par_chunks(size).map(chunk).collect()
        } else {
            vec![chunk(&small_terms)]
        };
    #[cfg(not(feature = "parallel"))]
    let parts = vec![chunk(&small_terms)];
    let mut total: HashMap<Monomial, BigInt> = HashMap::new();
    for (fast, slow) in parts {
        for (m, k) in fast {
            if k != 0 {
                *total.entry(m).or_default() += BigInt::from(k);
            }
        }
        for (m, k) in slow {
            *total.entry(m).or_default() += k;
        }
    }
    QCharacter {
        terms: total.into_iter().filter(|(_, k)| !k.is_zero()).collect(),
    }
}

/// Exponent ranges any exact quotient must respect: Newton polytopes add
/// under multiplication, so per variable `max(num) = max(q) + max(den)`.
struct QuotientBox {
    range: BTreeMap<Var, (i64, i64)>,
}

impl QuotientBox {
    fn admits(&self, m: &Monomial) -> bool {
        m.iter().all(|(v, _)| self.range.contains_key(&v))
            && self.range.iter().all(|(v, &(lo, hi))| {
                let e = m.exponent(v.node(), v.param());
                lo <= e && e <= hi
            })
    }
}

fn exponent_hull(c: &QCharacter, vars: &[Var]) -> BTreeMap<Var, (i64, i64)> {
    let mut out: BTreeMap<Var, (i64, i64)> = vars.iter().map(|&v| (v, (i64::MAX, i64::MIN))).collect();
    for (m, _) in c.terms() {
        for (v, (lo, hi)) in out.iter_mut() {
            let e = m.exponent(v.node(), v.param());
            *lo = (*lo).min(e);
            *hi = (*hi).max(e);
        }
    }
    out
}

fn quotient_box(num: &QCharacter, den: &QCharacter) -> QuotientBox {
    let mut vars: Vec<Var> = num
        .terms()
        .chain(den.terms())
        .flat_map(|(m, _)| m.iter().map(|(v, _)| v))
        .collect();
    vars.sort_unstable();
    vars.dedup();
    let hn = exponent_hull(num, &vars);
    let hd = exponent_hull(den, &vars);
    let range = vars
        .iter()
        .map(|v| {
            let (nlo, nhi) = hn[v];
            let (dlo, dhi) = hd[v];
            (*v, (nlo - dlo, nhi - dhi))
        })
        .collect();
    QuotientBox { range }
}

#[derive(Clone, PartialEq, Eq)]
struct Lex(Monomial);

impl Ord for Lex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.lex_cmp(&other.0)
    }
}

impl PartialOrd for Lex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact quotient `num / den` by leading-term elimination.
pub fn qc_div_exact(num: &QCharacter, den: &QCharacter) -> Result<QCharacter> {
    let Some((lead_m, lead_k)) = den.leading() else {
        return Err(Error::DivisionByZero);
    };
    let (lead_m, lead_k) = (lead_m.clone(), lead_k.clone());
    let mut rem: BTreeMap<Lex, BigInt> = num.terms.iter().map(|(m, k)| (Lex(m.clone()), k.clone())).collect();
    let bounds = quotient_box(num, den);
    let mut quot = QCharacter::zero();
    while let Some((Lex(m), k)) = rem.iter().next_back().map(|(m, k)| (m.clone(), k.clone())) {
        let q_m = m.div(&lead_m);
        if !bounds.admits(&q_m) {
            return Err(Error::InexactDivision(format!(
                "remainder term {m} outside the quotient support"
            )));
        }
        let (q_k, r) = num_integer::Integer::div_rem(&k, &lead_k);
        if !r.is_zero() {
            return Err(Error::InexactDivision(format!(
                "coefficient {k} of {m} not divisible by {lead_k}"
            )));
        }
        for (dm, dk) in &den.terms {
            let key = Lex(dm.mul(&q_m));
            let delta = dk * &q_k;
            match rem.entry(key) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(-delta);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    *e.get_mut() -= delta;
                    if e.get().is_zero() {
                        e.remove();
                    }
                }
            }
        }
        quot.add_term(q_m, q_k);
    }
    Ok(quot)
}

/// Characters after forgetting spectral parameters: `Y_{i,s} -> y_i`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassicalCharacter {
    terms: BTreeMap<Vec<(u32, i64)>, BigInt>,
}

impl ClassicalCharacter {
    pub fn add_term(&mut self, w: Vec<(u32, i64)>, k: BigInt) {
        if k.is_zero() {
            return;
        }
        let e = self.terms.entry(w.clone()).or_default();
        *e += k;
        if e.is_zero() {
            self.terms.remove(&w);
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, w: &[(u32, i64)]) -> BigInt {
        self.terms.get(w).cloned().unwrap_or_default()
    }

    pub fn mul(&self, other: &ClassicalCharacter) -> ClassicalCharacter {
        let mut out = ClassicalCharacter::default();
        for (a, ka) in &self.terms {
            for (b, kb) in &other.terms {
                let mut w: BTreeMap<u32, i64> = a.iter().copied().collect();
                for &(i, e) in b {
                    *w.entry(i).or_default() += e;
                }
                let w = w.into_iter().filter(|(_, e)| *e != 0).collect();
                out.add_term(w, ka * kb);
            }
        }
        out
    }

    pub fn add(&self, other: &ClassicalCharacter) -> ClassicalCharacter {
        let mut out = self.clone();
        for (w, k) in &other.terms {
            out.add_term(w.clone(), k.clone());
        }
        out
    }
}
