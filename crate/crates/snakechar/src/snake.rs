//! The lattice `X`, snake positions, segment notation and neighbouring points.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monomial::{CartanData, Kind, Monomial};

/// A point `(i, k)` of `I x Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point {
    pub i: usize,
    pub k: i64,
}

impl Point {
    pub fn new(i: usize, k: i64) -> Self {
        Point { i, k }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.i, self.k)
    }
}

pub fn in_x(cd: &CartanData, p: Point) -> bool {
    if p.i == 0 || p.i > cd.n {
        return false;
    }
    match cd.kind {
        Kind::A => (p.i as i64 - p.k).rem_euclid(2) == 0,
        Kind::B => {
            if p.i == cd.n {
                p.k.rem_euclid(2) == 0
            } else {
                p.k.rem_euclid(2) == 1
            }
        }
    }
}

fn check_x(cd: &CartanData, p: Point) -> Result<()> {
    if in_x(cd, p) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{p} is not in X for {}{}", cd.kind, cd.n)))
    }
}

/// The embedding of `X` in the plane.
pub fn iota(cd: &CartanData, p: Point) -> Result<(i64, i64)> {
    check_x(cd, p)?;
    let (n, i) = (cd.n as i64, p.i as i64);
    Ok(match cd.kind {
        Kind::A => (i, p.k),
        Kind::B if p.i == cd.n => (2 * n - 1, p.k),
        Kind::B => {
            if (2 * n + p.k - 2 * i).rem_euclid(4) == 1 {
                (2 * i, p.k)
            } else {
                (4 * n - 2 - 2 * i, p.k)
            }
        }
    })
}

/// Inverse of [`iota`] on its image.
pub fn iota_inv(cd: &CartanData, x: i64, k: i64) -> Option<Point> {
    let n = cd.n as i64;
    let cand = match cd.kind {
        Kind::A => Point::new(usize::try_from(x).ok()?, k),
        Kind::B => {
            if x == 2 * n - 1 {
                Point::new(cd.n, k)
            } else if x > 0 && x < 2 * n - 1 && x % 2 == 0 {
                Point::new((x / 2) as usize, k)
            } else if x > 2 * n - 1 && x < 4 * n - 2 && x % 2 == 0 {
                Point::new(((4 * n - 2 - x) / 2) as usize, k)
            } else {
                return None;
            }
        }
    };
    (in_x(cd, cand) && iota(cd, cand).ok()? == (x, k)).then_some(cand)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Position {
    NotSnake,
    Snake,
    Prime,
    Minimal,
    PrimeAndMinimal,
}

impl Position {
    pub fn is_snake(self) -> bool {
        self != Position::NotSnake
    }

    pub fn is_prime(self) -> bool {
        matches!(self, Position::Prime | Position::PrimeAndMinimal)
    }
}

/// `(lower bound, modulus, residue, prime upper bound)` for `k' - k`.
fn position_data(cd: &CartanData, p: Point, q: Point) -> (i64, i64, i64, i64) {
    let n = cd.n as i64;
    let (i, j) = (p.i as i64, q.i as i64);
    let di = (i - j).abs();
    match cd.kind {
        Kind::A => (di + 2, 2, di % 2, (2 * n + 2 - i - j).min(i + j)),
        Kind::B => {
            let (pn, qn) = (p.i == cd.n, q.i == cd.n);
            match (pn, qn) {
                (true, true) => (2, 4, 2, 4 * n - 2),
                (true, false) | (false, true) => (2 * di + 3, 4, (2 * di - 1).rem_euclid(4), 2 * i + 2 * j - 1),
                (false, false) => (2 * di + 4, 4, (2 * di) % 4, 2 * i + 2 * j),
            }
        }
    }
}

/// Where `q` sits relative to `p`.
pub fn position_class(cd: &CartanData, p: Point, q: Point) -> Result<Position> {
    check_x(cd, p)?;
    check_x(cd, q)?;
    let (lower, modulus, residue, upper) = position_data(cd, p, q);
    let gap = q.k - p.k;
    if gap < lower || gap.rem_euclid(modulus) != residue {
        return Ok(Position::NotSnake);
    }
    Ok(match (gap <= upper, gap == lower) {
        (true, true) => Position::PrimeAndMinimal,
        (true, false) => Position::Prime,
        (false, true) => Position::Minimal,
        (false, false) => Position::Snake,
    })
}

/// A sequence of points, each in snake position with respect to the previous one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Snake {
    cd: CartanData,
    points: Vec<Point>,
}

impl Snake {
    pub fn new(cd: &CartanData, points: Vec<Point>) -> Result<Self> {
        for &p in &points {
            check_x(cd, p)?;
        }
        for w in points.windows(2) {
            if !position_class(cd, w[0], w[1])?.is_snake() {
                return Err(Error::NotSnake(format!(
                    "{} is not in snake position after {}",
                    w[1], w[0]
                )));
            }
        }
        Ok(Snake { cd: cd.clone(), points })
    }

    pub fn empty(cd: &CartanData) -> Self {
        Snake {
            cd: cd.clone(),
            points: Vec::new(),
        }
    }

    /// Parses `i_s` tokens, e.g. `3_-5 1_-1`. Points are sorted by parameter.
    pub fn parse(cd: &CartanData, text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        for tok in text.split_whitespace() {
            let m: Monomial = tok.parse()?;
            let (v, e) = m
                .top()
                .filter(|_| m.len() == 1)
                .ok_or_else(|| Error::Parse(format!("`{tok}` is not a single variable")))?;
            if e <= 0 {
                return Err(Error::Parse(format!("`{tok}` has a nonpositive exponent")));
            }
            for _ in 0..e {
                pts.push(Point::new(v.node(), v.param()));
            }
        }
        pts.sort_by_key(|p| (p.k, p.i));
        Snake::new(cd, pts)
    }

    pub fn from_monomial(cd: &CartanData, m: &Monomial) -> Result<Self> {
        Snake::parse(cd, &m.to_string())
    }

    pub fn cartan(&self) -> &CartanData {
        &self.cd
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn monomial(&self) -> Monomial {
        Monomial::from_pairs(self.points.iter().map(|p| (p.i, p.k, 1)))
    }

    pub fn is_prime(&self) -> bool {
        self.points.windows(2).all(|w| {
            position_class(&self.cd, w[0], w[1])
                .map(Position::is_prime)
                .unwrap_or(false)
        })
    }

    pub fn shift(&self, ds: i64) -> Result<Snake> {
        Snake::new(
            &self.cd,
            self.points.iter().map(|p| Point::new(p.i, p.k + ds)).collect(),
        )
    }
}

impl fmt::Display for Snake {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.points.is_empty() {
            return write!(f, "1");
        }
        let s: Vec<String> = self.points.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", s.join(" "))
    }
}

/// One block `k^{(i, j)}` of the segment notation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub k: i64,
    pub i: usize,
    pub j: i64,
}

impl Segment {
    pub fn new(k: i64, i: usize, j: i64) -> Self {
        Segment { k, i, j }
    }
}

/// `S^{(t)}_{k_1^{(i_1,j_1)}, ..., k_m^{(i_m)}}`. The `j` of the last segment is ignored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SnakeSpec {
    pub t: i64,
    pub segments: Vec<Segment>,
}

impl SnakeSpec {
    pub fn new(t: i64, segments: Vec<Segment>) -> Self {
        let mut s = SnakeSpec { t, segments };
        if let Some(last) = s.segments.last_mut() {
            last.j = 0;
        }
        s
    }

    /// Parses `[[k,i,j],...]` triples; a two-element last entry is allowed.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            t: i64,
            segments: Vec<Vec<i64>>,
        }
        let doc: Doc = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mut segs = Vec::new();
        for s in doc.segments {
            let (k, i, j) = match s.as_slice() {
                [k, i] => (*k, *i, 0),
                [k, i, j] => (*k, *i, *j),
                _ => return Err(Error::Parse("segment needs [k, i, j]".into())),
            };
            if i < 1 || k < 0 || j < 0 {
                return Err(Error::Parse(format!("bad segment [{k}, {i}, {j}]")));
            }
            segs.push(Segment::new(k, i as usize, j));
        }
        Ok(SnakeSpec::new(doc.t, segs))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let segs: Vec<[i64; 3]> = self.segments.iter().map(|s| [s.k, s.i as i64, s.j]).collect();
        serde_json::json!({ "t": self.t, "segments": segs })
    }
}

impl fmt::Display for SnakeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.segments.len();
        let parts: Vec<String> = self
            .segments
            .iter()
            .enumerate()
            .map(|(x, s)| {
                if x + 1 == m || s.j == 0 {
                    format!("{}^({})", s.k, s.i)
                } else {
                    format!("{}^({},{})", s.k, s.i, s.j)
                }
            })
            .collect();
        write!(f, "S^({})_{{{}}}", self.t, parts.join(", "))
    }
}

/// `n_l`: distance from the start of a segment to the start of the next one.
pub fn n_ell(cd: &CartanData, seg: &Segment, next_i: usize) -> i64 {
    let di = (next_i as i64 - seg.i as i64).abs();
    match cd.kind {
        Kind::A => 2 * seg.k + di + 2 * seg.j,
        Kind::B => {
            let d = cd.d(seg.i);
            let eps = -((seg.i == cd.n) as i64) - ((next_i == cd.n) as i64);
            2 * d * seg.k + 2 * di + 4 - 2 * d + 4 * seg.j + eps
        }
    }
}

/// Points of a spec, without validation. Empty segments only shift what follows.
pub fn spec_points(cd: &CartanData, spec: &SnakeSpec) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    let mut start = spec.t;
    for (x, seg) in spec.segments.iter().enumerate() {
        cd.check_node(seg.i)?;
        if seg.k < 0 || seg.j < 0 {
            return Err(Error::Domain(format!("negative entry in {spec}")));
        }
        let step = 2 * cd.d(seg.i);
        out.extend((0..seg.k).map(|r| Point::new(seg.i, start + step * r)));
        if let Some(next) = spec.segments.get(x + 1) {
            start += n_ell(cd, seg, next.i);
        }
    }
    Ok(out)
}

pub fn spec_to_snake(cd: &CartanData, spec: &SnakeSpec) -> Result<Snake> {
    Snake::new(cd, spec_points(cd, spec)?)
}

/// Canonical segment notation: adjacent equal nodes with `j = 0` are merged.
pub fn snake_to_spec(s: &Snake) -> Result<SnakeSpec> {
    let cd = &s.cd;
    let pts = &s.points;
    let Some(&first) = pts.first() else {
        return Err(Error::Domain("the empty snake has no segment notation".into()));
    };
    let mut segs = vec![Segment::new(1, first.i, 0)];
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let gap = q.k - p.k;
        let di = (q.i as i64 - p.i as i64).abs();
        let j = match cd.kind {
            Kind::A => (gap - 2 - di) / 2,
            Kind::B => {
                let eps = -((p.i == cd.n) as i64) - ((q.i == cd.n) as i64);
                (gap - 2 * di - 4 - eps) / 4
            }
        };
        if p.i == q.i && j == 0 {
            segs.last_mut().unwrap().k += 1;
        } else {
            segs.last_mut().unwrap().j = j;
            segs.push(Segment::new(1, q.i, 0));
        }
    }
    let spec = SnakeSpec::new(first.k, segs);
    debug_assert_eq!(spec_points(cd, &spec).ok().as_deref(), Some(&pts[..]));
    Ok(spec)
}

/// Every prime snake with at most `max_len` points, starting at parameter 0
/// or -1 and spanning at most `max_span`.
pub fn prime_snakes(cd: &CartanData, max_len: usize, max_span: i64) -> Vec<Snake> {
    fn grow(cd: &CartanData, pts: &mut Vec<Point>, max_len: usize, limit: i64, out: &mut Vec<Snake>) {
        out.push(Snake {
            cd: cd.clone(),
            points: pts.clone(),
        });
        if pts.len() == max_len {
            return;
        }
        let last = *pts.last().unwrap();
        for k in last.k + 1..=limit {
            for i in cd.nodes() {
                let q = Point::new(i, k);
                if in_x(cd, q) && position_class(cd, last, q).is_ok_and(|c| c.is_prime()) {
                    pts.push(q);
                    grow(cd, pts, max_len, limit, out);
                    pts.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    for k in [-1, 0] {
        for i in cd.nodes() {
            let p = Point::new(i, k);
            if in_x(cd, p) && max_len > 0 {
                grow(cd, &mut vec![p], max_len, k + max_span, &mut out);
            }
        }
    }
    out
}

/// Splits at every consecutive pair that is not in prime snake position.
pub fn prime_factorize(s: &Snake) -> Vec<Snake> {
    let mut out: Vec<Snake> = Vec::new();
    let mut cur: Vec<Point> = Vec::new();
    for &p in &s.points {
        if let Some(&last) = cur.last() {
            let prime = position_class(&s.cd, last, p).map(Position::is_prime).unwrap_or(false);
            if !prime {
                out.push(Snake {
                    cd: s.cd.clone(),
                    points: std::mem::take(&mut cur),
                });
            }
        }
        cur.push(p);
    }
    if !cur.is_empty() {
        out.push(Snake {
            cd: s.cd.clone(),
            points: cur,
        });
    }
    out
}

fn half(x: i64) -> Result<i64> {
    if x % 2 != 0 {
        return Err(Error::Domain(format!("{x} is odd")));
    }
    Ok(x / 2)
}

fn quarter(x: i64) -> Result<i64> {
    if x % 4 != 0 {
        return Err(Error::Domain(format!("{x} is not divisible by 4")));
    }
    Ok(x / 4)
}

fn pt(i: i64, k: i64) -> Result<Point> {
    usize::try_from(i)
        .ok()
        .filter(|&i| i > 0)
        .map(|i| Point::new(i, k))
        .ok_or_else(|| Error::Domain(format!("node {i} out of range")))
}

/// The neighbouring points `(X, Y)` of a pair in prime snake position.
pub fn neighboring_points(cd: &CartanData, p: Point, q: Point) -> Result<(Vec<Point>, Vec<Point>)> {
    if !position_class(cd, p, q)?.is_prime() {
        return Err(Error::Domain(format!("{q} is not in prime snake position after {p}")));
    }
    let n = cd.n as i64;
    let (i, k, i2, k2) = (p.i as i64, p.k, q.i as i64, q.k);
    let out = match cd.kind {
        Kind::A => {
            let x = if k + i > k2 - i2 {
                vec![pt(half(i + k + i2 - k2)?, half(i + k - i2 + k2)?)?]
            } else {
                vec![]
            };
            let y = if k + n + 1 - i > k2 - n - 1 + i2 {
                vec![pt(half(i2 + k2 + i - k)?, half(i2 + k2 - i + k)?)?]
            } else {
                vec![]
            };
            (x, y)
        }
        Kind::B => {
            let (pn, qn) = (p.i == cd.n, q.i == cd.n);
            let gap = k2 - k;
            let b = match (pn, qn) {
                (false, false) if gap == 2 * i + 2 * i2 => vec![],
                (false, false) => vec![pt(quarter(2 * i + k + 2 * i2 - k2)?, half(2 * i + k - 2 * i2 + k2)?)?],
                (false, true) if gap == 2 * i + 2 * n - 1 => vec![],
                (false, true) => vec![pt(
                    quarter(2 * i + k + 2 * n - 1 - k2)?,
                    half(2 * i + k - 2 * n + 1 + k2)?,
                )?],
                (true, false) => vec![pt(n, k2 - 2 * n + 1 + 2 * i2)?],
                (true, true) => vec![],
            };
            let f = match (pn, qn) {
                (false, false) if gap <= 4 * n - 4 - 2 * i - 2 * i2 => {
                    vec![pt(quarter(2 * i2 + k2 + 2 * i - k)?, half(2 * i2 + k2 - 2 * i + k)?)?]
                }
                (false, false) => vec![pt(n, k + 2 * n - 1 - 2 * i)?, pt(n, k2 - 2 * n + 1 + 2 * i2)?],
                (false, true) => vec![pt(n, k + 2 * n - 1 - 2 * i)?],
                (true, false) if gap < 2 * n + 2 * i2 - 1 => vec![pt(
                    quarter(2 * n - 1 + k + 2 * i2 - k2)?,
                    half(2 * n - 1 + k - 2 * i2 + k2)?,
                )?],
                (true, false) => vec![],
                (true, true) if gap == 4 * n - 2 => vec![],
                (true, true) => vec![pt(quarter(4 * n - 2 + k - k2)?, half(k + k2)?)?],
            };
            let bf = if pn {
                k.rem_euclid(4) == 0
            } else {
                (2 * n + k - 2 * i).rem_euclid(4) == 1
            };
            if bf {
                (b, f)
            } else {
                (f, b)
            }
        }
    };
    for &x in out.0.iter().chain(out.1.iter()) {
        check_x(cd, x)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sn(cd: &CartanData, s: &str) -> Snake {
        Snake::parse(cd, s).unwrap()
    }

    fn spec(t: i64, segs: &[(i64, usize, i64)]) -> SnakeSpec {
        SnakeSpec::new(t, segs.iter().map(|&(k, i, j)| Segment::new(k, i, j)).collect())
    }

    #[test]
    fn iota_examples() {
        assert_eq!(iota(&CartanData::a(4), Point::new(2, -4)).unwrap(), (2, -4));
        let b3 = CartanData::b(3);
        assert_eq!(iota(&b3, Point::new(3, 0)).unwrap(), (5, 0));
        assert_eq!(iota(&b3, Point::new(2, -1)).unwrap(), (4, -1));
        assert_eq!(iota(&b3, Point::new(2, -3)).unwrap(), (6, -3));
        assert!(iota(&b3, Point::new(2, 0)).is_err());
        assert_eq!(iota_inv(&b3, 6, -3), Some(Point::new(2, -3)));
        assert_eq!(iota_inv(&b3, 4, -3), None);
    }

    #[test]
    fn iota_injective_on_window() {
        for cd in [CartanData::a(4), CartanData::b(2), CartanData::b(4)] {
            let mut seen = std::collections::HashSet::new();
            for i in cd.nodes() {
                for k in -30..=0 {
                    let p = Point::new(i, k);
                    if in_x(&cd, p) {
                        let x = iota(&cd, p).unwrap();
                        assert!(seen.insert(x));
                        assert_eq!(iota_inv(&cd, x.0, x.1), Some(p));
                    }
                }
            }
        }
    }

    #[test]
    fn positions() {
        let a3 = CartanData::a(3);
        let p = |i, k| Point::new(i, k);
        assert_eq!(
            position_class(&a3, p(3, -3), p(3, -1)).unwrap(),
            Position::PrimeAndMinimal
        );
        assert_eq!(
            position_class(&a3, p(3, -5), p(2, -2)).unwrap(),
            Position::PrimeAndMinimal
        );
        assert_eq!(position_class(&a3, p(3, -9), p(3, -1)).unwrap(), Position::Snake);
        assert_eq!(position_class(&a3, p(3, -3), p(3, -3)).unwrap(), Position::NotSnake);
        let b3 = CartanData::b(3);
        assert_eq!(position_class(&b3, p(3, -6), p(3, -2)).unwrap(), Position::NotSnake);
        assert_eq!(
            position_class(&b3, p(3, -6), p(3, -4)).unwrap(),
            Position::PrimeAndMinimal
        );
        assert_eq!(position_class(&b3, p(3, -12), p(3, -6)).unwrap(), Position::Prime);
        assert!(position_class(&b3, p(3, -1), p(3, 1)).is_err());
    }

    #[test]
    fn spec_round_trips() {
        let a3 = CartanData::a(3);
        assert_eq!(
            spec_to_snake(&a3, &spec(-5, &[(1, 3, 0), (1, 1, 0)])).unwrap(),
            sn(&a3, "3_-5 1_-1")
        );
        assert_eq!(
            spec_to_snake(&a3, &spec(-3, &[(2, 3, 0)])).unwrap(),
            sn(&a3, "3_-3 3_-1")
        );
        assert_eq!(
            snake_to_spec(&sn(&a3, "2_-6 1_-3 2_0")).unwrap(),
            spec(-6, &[(1, 2, 0), (1, 1, 0), (1, 2, 0)])
        );
        assert_eq!(snake_to_spec(&sn(&a3, "3_-3 3_-1")).unwrap(), spec(-3, &[(2, 3, 0)]));
        let b3 = CartanData::b(3);
        assert_eq!(
            spec_to_snake(&b3, &spec(-12, &[(1, 3, 1), (1, 3, 0)])).unwrap(),
            sn(&b3, "3_-12 3_-6")
        );
        let b4 = CartanData::b(4);
        assert_eq!(
            snake_to_spec(&sn(&b4, "4_-10 4_-8 4_-6 3_-1")).unwrap(),
            spec(-10, &[(3, 4, 0), (1, 3, 0)])
        );
        // an empty segment contributes only its offset
        assert_eq!(
            spec_to_snake(&a3, &spec(-7, &[(1, 3, 0), (0, 2, 0), (1, 1, 0), (1, 2, 0)])).unwrap(),
            sn(&a3, "3_-7 1_-3 2_0")
        );
    }

    #[test]
    fn factorization_examples() {
        let a3 = CartanData::a(3);
        let f = prime_factorize(&sn(&a3, "3_-9 3_-1"));
        assert_eq!(f, vec![sn(&a3, "3_-9"), sn(&a3, "3_-1")]);
        let s = sn(&a3, "3_-5 3_-3 3_-1");
        assert_eq!(prime_factorize(&s), vec![s]);
    }

    #[test]
    fn neighbours_type_a() {
        let a3 = CartanData::a(3);
        let p = |i, k| Point::new(i, k);
        assert_eq!(
            neighboring_points(&a3, p(3, -5), p(3, -3)).unwrap(),
            (vec![p(2, -4)], vec![])
        );
        assert_eq!(
            neighboring_points(&a3, p(2, -6), p(2, -4)).unwrap(),
            (vec![p(1, -5)], vec![p(3, -5)])
        );
        assert!(neighboring_points(&a3, p(3, -9), p(3, -1)).is_err());
    }

    #[test]
    fn neighbours_type_b() {
        let b4 = CartanData::b(4);
        let p = |i, k| Point::new(i, k);
        // node n, k = 2 mod 4: X is the F part
        assert_eq!(
            neighboring_points(&b4, p(4, -10), p(4, -8)).unwrap(),
            (vec![p(3, -9)], vec![])
        );
        let (x, y) = neighboring_points(&b4, p(4, -8), p(4, -6)).unwrap();
        assert_eq!((x, y), (vec![], vec![p(3, -7)]));
    }

    fn arb_snake(cd: CartanData) -> impl Strategy<Value = Snake> {
        let cd2 = cd.clone();
        (
            1..=cd.n,
            -20i64..0,
            proptest::collection::vec((1..=cd.n, 0i64..4), 0..4),
        )
            .prop_filter_map("start must lie in X", move |(i, k, steps)| {
                if !in_x(&cd2, Point::new(i, k)) {
                    return None;
                }
                let mut pts = vec![Point::new(i, k)];
                for (j, extra) in steps {
                    let last = *pts.last().unwrap();
                    let (lower, modulus, _, _) = position_data(&cd2, last, Point::new(j, 0));
                    let next = (lower..lower + 2 * modulus)
                        .map(|g| Point::new(j, last.k + g))
                        .find(|&q| in_x(&cd2, q) && position_class(&cd2, last, q).unwrap().is_snake())?;
                    pts.push(Point::new(j, next.k + modulus * extra));
                }
                Snake::new(&cd2, pts).ok()
            })
    }

    proptest! {
        #[test]
        fn spec_bijection_a(s in arb_snake(CartanData::a(4))) {
            let sp = snake_to_spec(&s).unwrap();
            prop_assert_eq!(spec_to_snake(s.cartan(), &sp).unwrap(), s.clone());
            for w in sp.segments.windows(2) {
                prop_assert!(w[0].j > 0 || w[0].i != w[1].i);
            }
        }

        #[test]
        fn spec_bijection_b(s in arb_snake(CartanData::b(3))) {
            let sp = snake_to_spec(&s).unwrap();
            prop_assert_eq!(spec_to_snake(s.cartan(), &sp).unwrap(), s);
        }

        #[test]
        fn factors_concatenate(s in arb_snake(CartanData::b(3))) {
            let f = prime_factorize(&s);
            let joined: Vec<Point> = f.iter().flat_map(|x| x.points().to_vec()).collect();
            prop_assert_eq!(&joined[..], s.points());
            for x in &f {
                prop_assert!(x.is_prime());
            }
        }

        #[test]
        fn neighbours_lie_in_x(s in arb_snake(CartanData::b(4))) {
            for w in s.points().windows(2) {
                if position_class(s.cartan(), w[0], w[1]).unwrap().is_prime() {
                    let (x, y) = neighboring_points(s.cartan(), w[0], w[1]).unwrap();
                    for q in x.into_iter().chain(y) {
                        prop_assert!(in_x(s.cartan(), q));
                    }
                }
            }
        }
    }
}
