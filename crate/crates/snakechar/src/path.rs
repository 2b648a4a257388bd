//! Lattice paths whose non-overlapping tuples enumerate snake q-characters.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::monomial::{CartanData, Kind, Monomial, QCharacter};
use crate::snake::{in_x, iota_inv, Point, Snake};

/// The height `u + e * eps` for a fixed `0 < eps < 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PlaneY {
    pub u: i64,
    pub e: i8,
}

impl PlaneY {
    pub fn int(u: i64) -> Self {
        PlaneY { u, e: 0 }
    }
}

impl fmt::Display for PlaneY {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.e {
            0 => write!(f, "{}", self.u),
            1 => write!(f, "{}+e", self.u),
            _ => write!(f, "{}-e", self.u),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Path {
    pub pts: Vec<(i64, PlaneY)>,
}

impl Path {
    pub fn to_json(&self) -> serde_json::Value {
        let pts: Vec<serde_json::Value> = self.pts.iter().map(|(x, y)| serde_json::json!([x, y.u, y.e])).collect();
        serde_json::Value::Array(pts)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CornerSets {
    pub upper: Vec<Point>,
    pub lower: Vec<Point>,
}

fn steps(count: usize) -> impl Iterator<Item = Vec<i64>> {
    (0u64..1 << count).map(move |bits| {
        (0..count)
            .map(|b| if bits >> (count - 1 - b) & 1 == 1 { 1 } else { -1 })
            .collect()
    })
}

/// Node-`n` half paths in type B; `l` even.
fn node_n_paths(n: usize, l: i64) -> Vec<Path> {
    let n2 = 2 * n as i64;
    let xs: Vec<i64> = if l.rem_euclid(4) == 2 {
        (0..n as i64).map(|r| 2 * r).chain([n2 - 1]).collect()
    } else {
        (0..n as i64).map(|r| 2 * n2 - 2 - 2 * r).chain([n2 - 1]).collect()
    };
    let mut out = Vec::new();
    for word in steps(n) {
        let mut y = l + n2 - 1;
        let mut pts = vec![(xs[0], PlaneY::int(y))];
        for (r, &s) in word[..n - 1].iter().enumerate() {
            y += 2 * s;
            pts.push((xs[r + 1], PlaneY::int(y)));
        }
        let last = word[n - 1];
        pts.push((
            n2 - 1,
            PlaneY {
                u: y + last,
                e: last as i8,
            },
        ));
        out.push(Path { pts });
    }
    out
}

/// All paths of `P_{i,k}`, in step-word order.
pub fn enumerate_paths(cd: &CartanData, p: Point) -> Result<Vec<Path>> {
    if !in_x(cd, p) {
        return Err(Error::Domain(format!("{p} is not in X")));
    }
    let n = cd.n;
    Ok(match cd.kind {
        Kind::A => {
            let (i, k) = (p.i as i64, p.k);
            let (start, end) = (i + k, n as i64 + 1 - i + k);
            steps(n + 1)
                .filter(|w| start + w.iter().sum::<i64>() == end)
                .map(|w| {
                    let mut y = start;
                    let mut pts = vec![(0, PlaneY::int(y))];
                    for (r, s) in w.into_iter().enumerate() {
                        y += s;
                        pts.push((r as i64 + 1, PlaneY::int(y)));
                    }
                    Path { pts }
                })
                .collect()
        }
        Kind::B if p.i == n => node_n_paths(n, p.k),
        Kind::B => {
            let off = 2 * (n - p.i) as i64 - 1;
            let firsts = node_n_paths(n, p.k - off);
            let seconds = node_n_paths(n, p.k + off);
            let mut out = Vec::new();
            for a in &firsts {
                for b in &seconds {
                    let (ya, yb) = (a.pts[n].1, b.pts[n].1);
                    if ya <= yb {
                        continue;
                    }
                    let mut pts = a.pts.clone();
                    pts.extend(b.pts.iter().rev().copied());
                    out.push(Path { pts });
                }
            }
            out
        }
    })
}

/// Upper and lower corners. Upper corners are local minima of the height.
pub fn corners(cd: &CartanData, p: &Path) -> CornerSets {
    let mut out = CornerSets::default();
    let pts = &p.pts;
    match cd.kind {
        Kind::A => {
            for r in 1..pts.len() - 1 {
                let (a, b, c) = (pts[r - 1].1.u, pts[r].1.u, pts[r + 1].1.u);
                let at = Point::new(pts[r].0 as usize, b);
                if a == b + 1 && c == b + 1 {
                    out.upper.push(at);
                } else if a == b - 1 && c == b - 1 {
                    out.lower.push(at);
                }
            }
        }
        Kind::B => {
            let n2 = 2 * cd.n as i64;
            for r in 1..pts.len().saturating_sub(1) {
                let x = pts[r].0;
                if x == 0 || x == n2 - 1 || x == 2 * n2 - 2 {
                    continue;
                }
                let (a, b, c) = (pts[r - 1].1, pts[r].1, pts[r + 1].1);
                let up = a > b && c > b;
                let down = a < b && c < b;
                if up || down {
                    if let Some(q) = iota_inv(cd, x, b.u) {
                        if up {
                            out.upper.push(q);
                        } else {
                            out.lower.push(q);
                        }
                    }
                }
            }
            let mid: Vec<PlaneY> = pts.iter().filter(|(x, _)| *x == n2 - 1).map(|(_, y)| *y).collect();
            for y in &mid {
                let twin = PlaneY { u: y.u, e: -y.e };
                if mid.contains(&twin) {
                    continue;
                }
                match y.e {
                    -1 => out.upper.push(Point::new(cd.n, y.u)),
                    1 => out.lower.push(Point::new(cd.n, y.u)),
                    _ => {}
                }
            }
        }
    }
    out.upper.sort();
    out.lower.sort();
    out
}

pub fn path_monomial(cd: &CartanData, p: &Path) -> Monomial {
    let c = corners(cd, p);
    Monomial::from_pairs(
        c.upper
            .iter()
            .map(|q| (q.i, q.k, 1))
            .chain(c.lower.iter().map(|q| (q.i, q.k, -1))),
    )
}

/// `p` is strictly above `q`: at every shared abscissa `p` is lower in height.
pub fn strictly_above(p: &Path, q: &Path) -> bool {
    p.pts.iter().all(|&(x, y)| {
        q.pts
            .iter()
            .filter(|(x2, _)| *x2 == x)
            .all(|&(_, z)| y.cmp(&z) == Ordering::Less)
    })
}

struct PathList {
    paths: Vec<Path>,
    monomials: Vec<Monomial>,
}

type CacheKey = (Kind, usize, usize, i64);

fn path_cache() -> &'static Mutex<HashMap<CacheKey, Arc<PathList>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<PathList>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Paths are translation invariant with period 4 in `k`, so lists are cached
/// at a representative and shifted on use.
fn cached_paths(cd: &CartanData, p: Point) -> Result<(Arc<PathList>, i64)> {
    let rep = p.k.rem_euclid(4);
    let shift = p.k - rep;
    let key = (cd.kind, cd.n, p.i, rep);
    if let Some(hit) = path_cache().lock().unwrap().get(&key) {
        return Ok((hit.clone(), shift));
    }
    let paths = enumerate_paths(cd, Point::new(p.i, rep))?;
    let monomials = paths.iter().map(|x| path_monomial(cd, x)).collect();
    let list = Arc::new(PathList { paths, monomials });
    path_cache().lock().unwrap().insert(key, list.clone());
    Ok((list, shift))
}

/// Bitset rows: `ok[a]` holds the indices `b` such that path `a` is strictly
/// above path `b` (after the two shifts).
fn compatibility(p: &PathList, sp: i64, q: &PathList, sq: i64) -> Vec<Vec<u64>> {
    let words = q.paths.len().div_ceil(64);
    let shifted = |path: &Path, s: i64| Path {
        pts: path
            .pts
            .iter()
            .map(|&(x, y)| (x, PlaneY { u: y.u + s, e: y.e }))
            .collect(),
    };
    let qs: Vec<Path> = q.paths.iter().map(|x| shifted(x, sq)).collect();
    p.paths
        .iter()
        .map(|a| {
            let a = shifted(a, sp);
            let mut row = vec![0u64; words];
            for (b, qb) in qs.iter().enumerate() {
                if strictly_above(&a, qb) {
                    row[b / 64] |= 1 << (b % 64);
                }
            }
            row
        })
        .collect()
}

/// Sum over non-overlapping tuples of path monomials.
pub fn snake_qchar(s: &Snake) -> QCharacter {
    snake_qchar_with(s, false).expect("snake points lie in X")
}

/// With `adjacent_only` the non-overlap test is applied to neighbours in
/// the tuple only.
pub fn snake_qchar_with(s: &Snake, adjacent_only: bool) -> Result<QCharacter> {
    snake_qchar_filtered(s, adjacent_only, &|_| true)
}

/// The terms of `snake_qchar(s)` whose variables all have parameter at
/// most `ceiling`.
pub fn snake_qchar_below(s: &Snake, ceiling: i64) -> QCharacter {
    snake_qchar_filtered(s, false, &|m: &Monomial| m.iter().all(|(v, _)| v.param() <= ceiling))
        .expect("snake points lie in X")
}

fn snake_qchar_filtered(s: &Snake, adjacent_only: bool, keep: &dyn Fn(&Monomial) -> bool) -> Result<QCharacter> {
    let cd = s.cartan();
    let pts = s.points();
    if pts.is_empty() {
        return Ok(QCharacter::one());
    }
    let lists: Vec<(Arc<PathList>, i64)> = pts.iter().map(|&p| cached_paths(cd, p)).collect::<Result<_>>()?;
    let t = lists.len();
    // compat[b][a]: rows for earlier tuple entry a against later entry b
    let mut compat: Vec<Vec<Option<Vec<Vec<u64>>>>> = vec![vec![None; t]; t];
    for b in 1..t {
        let lo = if adjacent_only { b - 1 } else { 0 };
        for a in lo..b {
            compat[b][a] = Some(compatibility(&lists[a].0, lists[a].1, &lists[b].0, lists[b].1));
        }
    }
    let shifted_mono: Vec<Vec<Monomial>> = lists
        .iter()
        .map(|(l, sh)| l.monomials.iter().map(|m| m.shift(*sh)).collect())
        .collect();
    let mut out = QCharacter::zero();
    let mut chosen = vec![0usize; t];
    let mut partial = vec![Monomial::one(); t + 1];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        level: usize,
        t: usize,
        compat: &[Vec<Option<Vec<Vec<u64>>>>],
        mono: &[Vec<Monomial>],
        chosen: &mut Vec<usize>,
        partial: &mut Vec<Monomial>,
        out: &mut QCharacter,
        keep: &dyn Fn(&Monomial) -> bool,
    ) {
        if level == t {
            if keep(&partial[t]) {
                out.add_term(partial[t].clone(), BigInt::one());
            }
            return;
        }
        let count = mono[level].len();
        let words = count.div_ceil(64);
        let mut allowed = vec![u64::MAX; words];
        if !count.is_multiple_of(64) {
            allowed[words - 1] = (1u64 << (count % 64)) - 1;
        }
        for (a, row) in compat[level].iter().enumerate() {
            if let Some(m) = row {
                for (w, bits) in allowed.iter_mut().zip(&m[chosen[a]]) {
                    *w &= bits;
                }
            }
        }
        for (w, &bits) in allowed.iter().enumerate() {
            let mut bits = bits;
            while bits != 0 {
                let b = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                chosen[level] = b;
                partial[level + 1] = partial[level].mul(&mono[level][b]);
                rec(level + 1, t, compat, mono, chosen, partial, out, keep);
            }
        }
    }
    rec(0, t, &compat, &shifted_mono, &mut chosen, &mut partial, &mut out, keep);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Tsa {
    pub thin: bool,
    pub special: bool,
    pub anti_special: bool,
}

impl Tsa {
    pub fn all(&self) -> bool {
        self.thin && self.special && self.anti_special
    }
}

pub fn tsa_report(c: &QCharacter) -> Tsa {
    Tsa {
        thin: c.is_thin(),
        special: c.dominant_terms().len() == 1,
        anti_special: c.anti_dominant_terms().len() == 1,
    }
}
