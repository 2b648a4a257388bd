//! Fundamental segments of a prime snake and the mutation sequence that
//! produces its snake module.

use std::fmt;

use serde::Serialize;

use super::lines::tau_pow;
use super::{EvalStats, Label, Module, Part, Seed, Tau};
use crate::error::{Error, Result};
use crate::monomial::{CartanData, Kind};
use crate::path::snake_qchar;
use crate::snake::{n_ell, snake_to_spec, spec_points, Point, Segment, Snake, SnakeSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SegmentKind {
    /// The last segment, a Kirillov–Reshetikhin module.
    Kr,
    /// A monotone run of nodes.
    Run { increasing: bool },
    /// A segment with a gap `j >= 1` followed by one point.
    Gap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FundamentalSegment {
    pub kind: SegmentKind,
    /// Index of the first segment of the snake it covers.
    pub first: usize,
    /// Number of segments of the snake it covers, the last one by one point.
    pub len: usize,
    #[serde(skip)]
    pub spec: SnakeSpec,
    pub points: Vec<Point>,
}

impl FundamentalSegment {
    /// Its last point.
    pub fn distinguished(&self) -> Point {
        *self.points.last().expect("segments are nonempty")
    }
}

impl fmt::Display for FundamentalSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.points.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", s.join(" "))
    }
}

/// Segment starts `t_1, ..., t_m` of a spec.
fn starts(cd: &CartanData, spec: &SnakeSpec) -> Vec<i64> {
    let mut out = vec![spec.t];
    for w in spec.segments.windows(2) {
        let last = *out.last().unwrap();
        out.push(last + n_ell(cd, &w[0], w[1].i));
    }
    out
}

fn make(cd: &CartanData, kind: SegmentKind, first: usize, len: usize, spec: SnakeSpec) -> Result<FundamentalSegment> {
    let points = spec_points(cd, &spec)?;
    Ok(FundamentalSegment {
        kind,
        first,
        len,
        spec,
        points,
    })
}

/// The Kirillov–Reshetikhin segment first, then the others by strictly
/// decreasing parameter of their last point.
pub fn fundamental_segments(s: &Snake) -> Result<Vec<FundamentalSegment>> {
    if s.is_empty() || !s.is_prime() {
        return Err(Error::NotPrime(s.to_string()));
    }
    let cd = s.cartan();
    let spec = snake_to_spec(s)?;
    let segs = &spec.segments;
    let m = segs.len();
    let t = starts(cd, &spec);
    let node = |x: usize| segs[x].i;

    let mut rest = Vec::new();
    // maximal strictly monotone runs whose inner gaps are all zero
    let mut l = 0;
    while l + 1 < m {
        if segs[l].j != 0 || node(l) == node(l + 1) {
            l += 1;
            continue;
        }
        let inc = node(l + 1) > node(l);
        let mut e = l + 1;
        while e + 1 < m && segs[e].j == 0 && (node(e + 1) > node(e)) == inc && node(e + 1) != node(e) {
            e += 1;
        }
        let mut parts: Vec<Segment> = segs[l..e].iter().map(|g| Segment::new(g.k, g.i, 0)).collect();
        parts.push(Segment::new(1, node(e), 0));
        rest.push(make(
            cd,
            SegmentKind::Run { increasing: inc },
            l,
            e - l + 1,
            SnakeSpec::new(t[l], parts),
        )?);
        l = e;
    }
    for l in 0..m.saturating_sub(1) {
        if segs[l].j >= 1 {
            let parts = vec![segs[l], Segment::new(1, node(l + 1), 0)];
            rest.push(make(cd, SegmentKind::Gap, l, 2, SnakeSpec::new(t[l], parts))?);
        }
    }
    rest.sort_by_key(|f| std::cmp::Reverse(f.distinguished().k));
    if rest
        .windows(2)
        .any(|w| w[0].distinguished().k == w[1].distinguished().k)
    {
        return Err(Error::Unsupported(format!(
            "two fundamental segments of {s} end together"
        )));
    }
    let last = segs[m - 1];
    let kr = SnakeSpec::new(t[m - 1], vec![Segment::new(last.k, last.i, 0)]);
    let mut out = vec![make(cd, SegmentKind::Kr, m - 1, 1, kr)?];
    out.extend(rest);
    Ok(out)
}

/// `tau`-powers applied to `L(base)`, outermost first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Anchor {
    pub taus: Vec<(Tau, i64)>,
    pub base: Label,
}

impl Anchor {
    pub fn at(base: Label) -> Self {
        Anchor { taus: Vec::new(), base }
    }

    fn with(base: Label, taus: &[(Tau, i64)]) -> Self {
        Anchor {
            taus: taus.iter().copied().filter(|e| e.1 != 0).collect(),
            base,
        }
    }

    pub fn resolve(&self, cd: &CartanData) -> Result<Label> {
        let mut at = self.base;
        for &(which, m) in self.taus.iter().rev() {
            at = tau_pow(cd, which, m, at).ok_or_else(|| Error::Domain(format!("{self} leaves the diagram")))?;
        }
        Ok(at)
    }
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(which, m) in &self.taus {
            let name = match which {
                Tau::L => "tau_l",
                Tau::R => "tau_r",
                Tau::Plain => "tau",
            };
            if m == 1 {
                write!(f, "{name} ")?;
            } else {
                write!(f, "{name}^{m} ")?;
            }
        }
        write!(f, "L({},{})", self.base.0, self.base.1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Step {
    Vertex(Label),
    Column(Label),
    Line(Part, Anchor),
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Vertex((i, t)) => write!(f, "M {i} {t}"),
            Step::Column((i, t)) => write!(f, "C {i} {t}"),
            Step::Line(Part::Left, a) => write!(f, "Lp {a}"),
            Step::Line(Part::Right, a) => write!(f, "R {a}"),
            Step::Line(Part::Full, a) => write!(f, "L {a}"),
        }
    }
}

fn parse_anchor(words: &[&str]) -> Result<Anchor> {
    let bad = |w: &str| Error::Parse(format!("bad anchor word {w:?}"));
    let (last, taus) = words
        .split_last()
        .ok_or_else(|| Error::Parse("missing anchor".into()))?;
    let inner = last
        .strip_prefix("L(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| bad(last))?;
    let (i, t) = inner.split_once(',').ok_or_else(|| bad(last))?;
    let base = (
        i.trim().parse().map_err(|_| bad(last))?,
        t.trim().parse().map_err(|_| bad(last))?,
    );
    let mut out = Vec::new();
    for w in taus {
        let (name, pow) = match w.split_once('^') {
            Some((a, p)) => (a, p.parse::<i64>().map_err(|_| bad(w))?),
            None => (*w, 1),
        };
        let which = match name {
            "tau_l" => Tau::L,
            "tau_r" => Tau::R,
            "tau" => Tau::Plain,
            _ => return Err(bad(w)),
        };
        out.push((which, pow));
    }
    Ok(Anchor { taus: out, base })
}

/// One step per line: `C i t`, `M i t`, `Lp <anchor>`, `R <anchor>` or
/// `L <anchor>`, where an anchor reads like `tau_l^2 L(5,-5)`. `#` starts a
/// comment.
pub fn parse_sequence(text: &str) -> Result<Vec<Step>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        let err = |m: &str| Error::Parse(format!("line {}: {m}", no + 1));
        let pair = |w: &[&str]| -> Result<Label> {
            match w {
                [i, t] => Ok((
                    i.parse().map_err(|_| err("bad node"))?,
                    t.parse().map_err(|_| err("bad parameter"))?,
                )),
                _ => Err(err("expected a node and a parameter")),
            }
        };
        let step = match words[0] {
            "C" => Step::Column(pair(&words[1..])?),
            "M" => Step::Vertex(pair(&words[1..])?),
            "Lp" => Step::Line(Part::Left, parse_anchor(&words[1..]).map_err(|e| err(&e.to_string()))?),
            "R" => Step::Line(Part::Right, parse_anchor(&words[1..]).map_err(|e| err(&e.to_string()))?),
            "L" => Step::Line(Part::Full, parse_anchor(&words[1..]).map_err(|e| err(&e.to_string()))?),
            w => return Err(err(&format!("unknown step {w:?}"))),
        };
        out.push(step);
    }
    Ok(out)
}

fn col(i: usize, t: i64) -> Step {
    Step::Column((i, t))
}

/// Mutations that bring the Kirillov–Reshetikhin module `S^{(t)}_{k^{(i)}}`
/// to the vertex `(i, t)`.
pub fn kr_sequence(cd: &CartanData, i: usize, k: i64, t: i64) -> Result<Vec<Step>> {
    let n = cd.n;
    let mut out = Vec::new();
    let bad = || Error::Domain(format!("S^({t})_{{{k}^({i})}} is not reachable from the initial seed"));
    match cd.kind {
        Kind::A => {
            let twice = if i.is_multiple_of(2) {
                2 - 2 * k - t
            } else {
                1 - 2 * k - t
            };
            if twice < 0 || twice % 2 != 0 {
                return Err(bad());
            }
            for l in 0..twice / 2 {
                out.extend((1..=n / 2).map(|r| col(2 * r, -2 * l)));
                out.extend((1..=n.div_ceil(2)).map(|r| col(2 * r - 1, -2 * l - 1)));
            }
        }
        Kind::B => {
            let kr = |l: i64, out: &mut Vec<Step>| {
                let odd: Vec<usize> = (0..n / 2).map(|r| n - 1 - 2 * r).collect();
                let even: Vec<usize> = (0..(n.div_ceil(2)).saturating_sub(1)).map(|r| n - 2 - 2 * r).collect();
                out.push(col(n, -4 * l));
                out.extend(odd.iter().map(|&x| col(x, -4 * l - 1)));
                out.extend(even.iter().map(|&x| col(x, -4 * l - 3)));
                out.push(col(n, -4 * l - 2));
                out.extend(even.iter().map(|&x| col(x, -4 * l - 1)));
                out.extend(odd.iter().map(|&x| col(x, -4 * l - 3)));
            };
            if i != n {
                let twice = 3 - 4 * k - t;
                if twice < 0 || twice % 2 != 0 {
                    return Err(bad());
                }
                for l in 0..(twice / 2) / 2 {
                    kr(l, &mut out);
                }
            } else {
                let twice = 4 - 2 * k - t;
                if twice < 2 || twice % 2 != 0 {
                    return Err(bad());
                }
                let j = twice / 2;
                for l in 0..(j + 1) / 2 - 1 {
                    kr(l, &mut out);
                }
                if j % 2 == 0 {
                    let odd: Vec<usize> = (0..n / 2).map(|r| n - 1 - 2 * r).collect();
                    let even: Vec<usize> = (0..(n.div_ceil(2)).saturating_sub(1)).map(|r| n - 2 - 2 * r).collect();
                    out.push(col(n, -2 * j + 4));
                    out.extend(odd.iter().map(|&x| col(x, -2 * j + 3)));
                    out.extend(even.iter().map(|&x| col(x, -2 * j + 1)));
                }
            }
        }
    }
    Ok(out)
}

/// The full mutation sequence of a prime snake with parameters `<= 0`,
/// and the label of the vertex where the snake module appears.
pub fn snake_mutation_sequence(s: &Snake) -> Result<(Vec<Step>, Label)> {
    let cd = s.cartan().clone();
    if s.points().iter().any(|p| p.k > 0) {
        return Err(Error::Domain(format!("{s} has positive parameters")));
    }
    let fs = fundamental_segments(s)?;
    let spec = snake_to_spec(s)?;
    let segs = &spec.segments;
    let n = cd.n;
    let first = s.points()[0];
    let m1 = &fs[0];
    let kr = m1.spec.segments[0];
    let mut out = kr_sequence(&cd, kr.i, kr.k, m1.spec.t)?;

    let side = |l: usize, sp: i64| (2 * n as i64 + sp - 2 * l as i64).rem_euclid(4);
    for seg in &fs[1..] {
        let d = seg.distinguished();
        let (lp, sp) = (d.i, d.k);
        let base = (lp, sp);
        let line = |part: Part, taus: &[(Tau, i64)]| Step::Line(part, Anchor::with(base, taus));
        // s_x with L_{x, s_x} = tau^{|x - lp|}(L_{lp, sp}), checked to land on node x
        let anchor_on = |which: Tau, x: usize| -> Result<i64> {
            let m = (x as i64 - lp as i64).abs();
            match tau_pow(&cd, which, m, base) {
                Some((y, s)) if y == x => Ok(s),
                _ => Err(Error::Unsupported(format!("no anchor on node {x} from L({lp},{sp})"))),
            }
        };
        match seg.kind {
            SegmentKind::Kr => unreachable!("only the first segment is Kirillov–Reshetikhin"),
            SegmentKind::Run { increasing } => {
                let (l, r) = (seg.first, seg.len - 1);
                // tails of k's inside the run: sum_{x=u}^{l+r-1} k_x
                let tail = |u: usize| -> i64 { (u..l + r).map(|x| segs[x].k).sum() };
                let step_t = 2 * cd.t_max();
                match (cd.kind, increasing) {
                    (Kind::A, false) => {
                        out.extend((0..n - lp).map(|h| line(Part::Right, &[(Tau::R, h as i64)])));
                    }
                    (Kind::A, true) => {
                        out.extend((0..lp.saturating_sub(1)).map(|h| line(Part::Left, &[(Tau::L, h as i64)])));
                    }
                    (Kind::B, true) => {
                        let left = (lp != n && side(lp, sp) == 1) || (lp == n && sp.rem_euclid(4) == 0);
                        let (part, which) = if left {
                            (Part::Left, Tau::L)
                        } else {
                            (Part::Right, Tau::R)
                        };
                        out.extend((0..lp.saturating_sub(1)).map(|h| line(part, &[(which, h as i64)])));
                    }
                    (Kind::B, false) => {
                        let (part, which) = if side(lp, sp) == 1 {
                            (Part::Right, Tau::R)
                        } else {
                            (Part::Left, Tau::L)
                        };
                        out.extend((0..n - lp).map(|h| line(part, &[(which, h as i64)])));
                    }
                }
                if r >= 2 {
                    for u in (l + 1..l + r).rev() {
                        for j in tail(u + 1) + 1..=tail(u) {
                            let iu = segs[u].i;
                            match (cd.kind, increasing) {
                                (_, true) => {
                                    for x in (1..iu).rev() {
                                        out.push(col(x, anchor_on(Tau::L, x)? - step_t * j));
                                    }
                                }
                                (Kind::A, false) => {
                                    for x in iu + 1..=n {
                                        out.push(col(x, anchor_on(Tau::R, x)? - step_t * j));
                                    }
                                }
                                (Kind::B, false) => {
                                    let (part, which) = if side(lp, sp) == 1 {
                                        (Part::Right, Tau::R)
                                    } else {
                                        (Part::Left, Tau::L)
                                    };
                                    let sn = anchor_on(which, n)?;
                                    out.push(Step::Line(part, Anchor::at((n, sn - 4 * j + 4))));
                                    for x in iu + 1..=n {
                                        out.push(col(x, anchor_on(which, x)? - 4 * j));
                                    }
                                }
                            }
                        }
                    }
                }
            }
            SegmentKind::Gap => {
                let g = segs[seg.first];
                let (il, jl) = (g.i, g.j);
                let dist = (il as i64 - lp as i64).abs();
                let right = match cd.kind {
                    Kind::A => il >= lp,
                    Kind::B => {
                        (lp != n && side(lp, sp) == 1 && il >= lp)
                            || (lp != n && side(lp, sp) == 3 && il <= lp)
                            || (lp == n && sp.rem_euclid(4) == 2)
                    }
                };
                let (part, which) = if right {
                    (Part::Right, Tau::R)
                } else {
                    (Part::Left, Tau::L)
                };
                out.extend((0..dist).map(|h| line(part, &[(which, h)])));
                out.extend((0..jl).map(|h| line(Part::Full, &[(Tau::Plain, h), (which, dist)])));
            }
        }
    }
    Ok((out, (first.i, first.k)))
}

/// Outcome of running a sequence.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub module: Module,
    pub stats: EvalStats,
    pub mutations: usize,
    pub warnings: Vec<String>,
    pub depth: i64,
}

impl Seed {
    pub fn apply(&mut self, step: &Step) -> Result<()> {
        match step {
            Step::Vertex(l) => self.mutate_label(*l),
            Step::Column((i, t)) => {
                self.mutate_column(*i, *t);
                Ok(())
            }
            Step::Line(part, a) => {
                let at = a.resolve(&self.cd)?;
                self.mutate_part(*part, at)
            }
        }
    }
}

/// Runs `steps` from the initial seed of depth `depth` and expands the
/// variable at `target`.
pub fn run_sequence(cd: &CartanData, steps: &[Step], target: Label, depth: i64) -> Result<RunReport> {
    let mut seed = Seed::initial(cd, depth)?;
    seed.run(steps, target)
}

impl Seed {
    /// Applies `steps` to this seed and expands the variable at `target`.
    pub fn run(&mut self, steps: &[Step], target: Label) -> Result<RunReport> {
        for s in steps {
            self.apply(s)?;
        }
        let (module, stats) = self.module(target)?;
        Ok(RunReport {
            module,
            stats,
            mutations: self.mutations,
            warnings: self.warnings.clone(),
            depth: self.depth,
        })
    }
}

/// A comparison of the mutation result with the path description.
#[derive(Clone, Debug)]
pub struct HlReport {
    pub steps: Vec<Step>,
    pub target: Label,
    pub run: RunReport,
    /// Depth of the re-run and whether it gave the same variable.
    pub stability: Option<(i64, bool)>,
    /// The variable at the target is the snake module of the input.
    pub matches: bool,
}

impl HlReport {
    pub fn passed(&self) -> bool {
        self.matches && self.stability.is_none_or(|s| s.1)
    }
}

/// The lowest parameter of the snake, plus the guard band.
pub fn default_depth(s: &Snake) -> i64 {
    let low = s.points().iter().map(|p| -p.k).max().unwrap_or(0);
    low + guard_band(s.cartan())
}

/// `2 (n + 1) max d_i`.
pub fn guard_band(cd: &CartanData) -> i64 {
    2 * (cd.n as i64 + 1) * cd.t_max()
}

/// Builds the mutation sequence of `s`, runs it, compares with the path
/// description and, when `delta` is given, re-runs `delta` deeper.
///
/// Every exchange along the way is checked exactly, so a snake at the
/// target means its full q-character is the variable there.
pub fn verify_hl(s: &Snake, depth: Option<i64>, delta: Option<i64>) -> Result<HlReport> {
    let cd = s.cartan();
    let (steps, target) = snake_mutation_sequence(s)?;
    let depth = depth.unwrap_or_else(|| default_depth(s));
    let run = run_sequence(cd, &steps, target, depth)?;
    let matches = match &run.module {
        Module::Snake(t) => t == s,
        Module::Character(c) => **c == snake_qchar(s),
    };
    let stability = match delta {
        Some(dd) => {
            let again = run_sequence(cd, &steps, target, depth + dd)?;
            Some((depth + dd, again.module == run.module))
        }
        None => None,
    };
    Ok(HlReport {
        steps,
        target,
        run,
        stability,
        matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(cd: &CartanData, s: &str) -> Vec<String> {
        let s = Snake::parse(cd, s).unwrap();
        fundamental_segments(&s)
            .unwrap()
            .iter()
            .map(|f| f.to_string())
            .collect()
    }

    fn dist(cd: &CartanData, s: &str) -> Vec<String> {
        let s = Snake::parse(cd, s).unwrap();
        let mut out: Vec<String> = Vec::new();
        for f in fundamental_segments(&s).unwrap() {
            let d = f.distinguished().to_string();
            if !out.contains(&d) {
                out.push(d);
            }
        }
        out
    }

    #[test]
    fn segments_a5() {
        let cd = CartanData::a(5);
        assert_eq!(
            fs(&cd, "2_-12 4_-8 5_-5 5_-3 4_0"),
            ["4_0", "5_-5 5_-3 4_0", "2_-12 4_-8 5_-5"]
        );
        assert_eq!(dist(&cd, "2_-12 4_-8 5_-5 5_-3 4_0"), ["4_0", "5_-5"]);
    }

    #[test]
    fn segments_a4() {
        let cd = CartanData::a(4);
        let s = "2_-16 3_-13 3_-11 2_-8 2_-4 3_-1";
        assert_eq!(
            fs(&cd, s),
            ["3_-1", "2_-4 3_-1", "2_-8 2_-4", "3_-13 3_-11 2_-8", "2_-16 3_-13"]
        );
        assert_eq!(dist(&cd, s), ["3_-1", "2_-4", "2_-8", "3_-13"]);
        let s = "2_-30 2_-26 1_-23 1_-21 2_-18 3_-15 2_-12 2_-10 2_-6 4_-2 4_0";
        assert_eq!(
            fs(&cd, s),
            [
                "4_-2 4_0",
                "2_-6 4_-2",
                "2_-12 2_-10 2_-6",
                "3_-15 2_-12",
                "1_-23 1_-21 2_-18 3_-15",
                "2_-26 1_-23",
                "2_-30 2_-26"
            ]
        );
    }

    #[test]
    fn segments_b3() {
        let cd = CartanData::b(3);
        let s = "1_-31 2_-25 2_-17 3_-12 3_-6 2_-1";
        assert_eq!(
            fs(&cd, s),
            [
                "2_-1",
                "3_-6 2_-1",
                "3_-12 3_-6",
                "2_-17 3_-12",
                "2_-25 2_-17",
                "1_-31 2_-25"
            ]
        );
        assert_eq!(dist(&cd, s), ["2_-1", "3_-6", "3_-12", "2_-17", "2_-25"]);
        let s = "2_-43 2_-35 2_-31 1_-25 3_-18 3_-8 3_-2 3_0";
        assert_eq!(
            fs(&cd, s),
            [
                "3_-2 3_0",
                "3_-8 3_-2",
                "3_-18 3_-8",
                "1_-25 3_-18",
                "2_-35 2_-31 1_-25",
                "2_-43 2_-35"
            ]
        );
    }

    fn seq(cd: &CartanData, s: &str) -> (Vec<String>, Label) {
        let (steps, target) = snake_mutation_sequence(&Snake::parse(cd, s).unwrap()).unwrap();
        (steps.iter().map(|x| x.to_string()).collect(), target)
    }

    #[test]
    fn sequences_type_a() {
        let cd = CartanData::a(5);
        let (got, target) = seq(&cd, "2_-12 4_-8 5_-5 5_-3 4_0");
        let want =
            "R L(4,0)\nLp L(5,-5)\nLp tau_l L(5,-5)\nLp tau_l^2 L(5,-5)\nLp tau_l^3 L(5,-5)\nC 3 -9\nC 2 -10\nC 1 -11";
        assert_eq!(got.join("\n"), want);
        assert_eq!(target, (2, -12));
        let (got, _) = seq(&cd, "2_-18 4_-14 5_-11 5_-9 4_-6");
        assert_eq!(got.len(), 15 + 8);
        assert_eq!(got[..5], ["C 2 0", "C 4 0", "C 1 -1", "C 3 -1", "C 5 -1"]);
        assert_eq!(got[15], "R L(4,-6)");
        assert_eq!(got[22], "C 1 -17");

        let cd = CartanData::a(4);
        let (got, target) = seq(&cd, "3_-25 3_-21 2_-16 2_-12 3_-9 2_-6 2_-4 1_-1");
        let want = [
            "R L(1,-1)",
            "R tau_r L(1,-1)",
            "R tau_r^2 L(1,-1)",
            "C 3 -5",
            "C 4 -6",
            "C 3 -7",
            "C 4 -8",
            "Lp L(3,-9)",
            "Lp tau_l L(3,-9)",
            "L L(2,-12)",
            "R L(2,-16)",
            "L tau_r L(2,-16)",
            "L L(3,-21)",
        ];
        assert_eq!(got, want);
        assert_eq!(target, (3, -25));
    }

    #[test]
    fn sequences_type_b() {
        let cd = CartanData::b(3);
        let (got, target) = seq(&cd, "1_-35 2_-29 2_-21 3_-16 3_-10 2_-5");
        let want = [
            "C 3 0",
            "C 2 -1",
            "C 1 -3",
            "C 3 -2",
            "C 1 -1",
            "C 2 -3",
            "R L(2,-5)",
            "L L(3,-10)",
            "Lp L(3,-16)",
            "Lp tau_l L(3,-16)",
            "L L(2,-21)",
            "Lp L(2,-29)",
        ];
        assert_eq!(got, want);
        assert_eq!(target, (1, -35));
        let (got, target) = seq(&cd, "2_-43 2_-35 2_-31 1_-25 3_-18 3_-8 3_-2 3_0");
        let want = [
            "L L(3,-2)",
            "L L(3,-8)",
            "L tau L(3,-8)",
            "R L(3,-18)",
            "R tau_r L(3,-18)",
            "Lp L(1,-25)",
            "Lp tau_l L(1,-25)",
            "L L(2,-35)",
        ];
        assert_eq!(got, want);
        assert_eq!(target, (2, -43));
    }

    #[test]
    fn parse_round_trip() {
        let cd = CartanData::b(3);
        let (steps, _) =
            snake_mutation_sequence(&Snake::parse(&cd, "2_-43 2_-35 2_-31 1_-25 3_-18 3_-8 3_-2 3_0").unwrap())
                .unwrap();
        let text: Vec<String> = steps.iter().map(|s| s.to_string()).collect();
        assert_eq!(parse_sequence(&text.join("\n")).unwrap(), steps);
        assert!(parse_sequence("Q 1 2").is_err());
        assert!(parse_sequence("R tau_x L(1,2)").is_err());
        assert_eq!(parse_sequence("# nothing\n\n").unwrap(), vec![]);
    }

    #[test]
    fn kr_prefixes() {
        let cd = CartanData::a(3);
        assert!(kr_sequence(&cd, 2, 1, 0).unwrap().is_empty());
        assert_eq!(kr_sequence(&cd, 2, 1, -2).unwrap().len(), 3);
        let cd = CartanData::b(3);
        assert!(kr_sequence(&cd, 3, 2, -2).unwrap().is_empty());
        assert!(kr_sequence(&cd, 2, 1, -3).unwrap().is_empty());
        assert_eq!(kr_sequence(&cd, 2, 1, -5).unwrap().len(), 6);
    }

    #[test]
    fn kr_via_mutation_a3() {
        let cd = CartanData::a(3);
        let s = Snake::parse(&cd, "3_-5 3_-3").unwrap();
        let r = verify_hl(&s, Some(24), None).unwrap();
        assert!(r.matches, "{:?}", r.run.module);
    }

    #[test]
    fn a5_example_by_mutation() {
        let cd = CartanData::a(5);
        let s = Snake::parse(&cd, "2_-12 4_-8 5_-5 5_-3 4_0").unwrap();
        let r = verify_hl(&s, None, Some(guard_band(&cd))).unwrap();
        assert!(r.passed());
        assert_eq!(r.target, (2, -12));
        assert_eq!(r.run.stats.exact_divisions, r.run.stats.snake_quotients);
        assert_eq!(*r.run.module.character(), snake_qchar(&s));
        for t in &r.run.stats.snakes {
            let chi = snake_qchar(&Snake::parse(&cd, t).unwrap());
            assert!(crate::path::tsa_report(&chi).all(), "{t}");
        }
    }

    #[test]
    fn shallow_window_taints_the_target() {
        let cd = CartanData::a(5);
        let s = Snake::parse(&cd, "2_-12 4_-8 5_-5 5_-3 4_0").unwrap();
        let (steps, target) = snake_mutation_sequence(&s).unwrap();
        assert!(matches!(
            run_sequence(&cd, &steps, target, 12),
            Err(Error::TaintedTarget(_))
        ));
    }

    #[test]
    fn empty_sequence_gives_the_initial_variable() {
        let cd = CartanData::a(3);
        let r = run_sequence(&cd, &[], (2, -2), 12).unwrap();
        assert_eq!(r.module, Module::Snake(Snake::parse(&cd, "2_-2 2_0").unwrap()));
    }
}
