//! Distinguished sub-quivers `L_{i,t}`, their left and right parts, and the
//! maps `tau_l`, `tau_r`, `tau` on anchors.

use serde::Serialize;

use super::{Label, Seed};
use crate::error::{Error, Result};
use crate::monomial::{CartanData, Kind};
use crate::snake::{iota, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Part {
    Left,
    Right,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Tau {
    L,
    R,
    Plain,
}

fn in_y(cd: &CartanData, (i, t): Label) -> bool {
    match cd.kind {
        Kind::A => (i as i64 - t).rem_euclid(2) == 0,
        Kind::B if i == cd.n => t.rem_euclid(2) == 0 && t <= 0,
        Kind::B => t.rem_euclid(2) == 1,
    }
}

fn x_of(cd: &CartanData, (i, t): Label) -> Result<i64> {
    Ok(iota(cd, Point::new(i, t))?.0)
}

/// One application of `tau_l`, `tau_r` or `tau`. `None` when the anchor
/// leaves the diagram.
pub fn tau(cd: &CartanData, which: Tau, (i, t): Label) -> Option<Label> {
    let n = cd.n;
    let (i2, t2): (i64, i64) = match cd.kind {
        Kind::A => match which {
            Tau::L => (i as i64 - 1, t - 1),
            Tau::R => (i as i64 + 1, t - 1),
            Tau::Plain => (i as i64, t - 2),
        },
        Kind::B => {
            let side = (2 * n as i64 + t - 2 * i as i64).rem_euclid(4);
            let ii = i as i64;
            let nn = n as i64;
            match which {
                Tau::Plain => (ii, t - 4),
                Tau::L if i == n && t.rem_euclid(4) == 2 => (nn - 1, t - 3),
                Tau::L if i == n => (nn - 1, t - 1),
                Tau::L if side == 1 => (ii - 1, t - 2),
                Tau::L if i == n - 1 => (nn, t - 3),
                Tau::L => (ii + 1, t - 2),
                Tau::R if i == n && t.rem_euclid(4) == 2 => (nn - 1, t - 1),
                Tau::R if i == n => (nn - 1, t - 3),
                Tau::R if side == 3 => (ii - 1, t - 2),
                Tau::R if i == n - 1 => (nn, t - 3),
                Tau::R => (ii + 1, t - 2),
            }
        }
    };
    (i2 >= 1 && i2 <= n as i64).then_some((i2 as usize, t2))
}

/// `tau^m`; negative powers give `None`.
pub fn tau_pow(cd: &CartanData, which: Tau, m: i64, mut at: Label) -> Option<Label> {
    if m < 0 {
        return None;
    }
    for _ in 0..m {
        at = tau(cd, which, at)?;
    }
    Some(at)
}

/// Labels of `L_{i,t}` in an unbounded quiver.
pub fn line_labels(cd: &CartanData, (i, t): Label) -> Result<Vec<Label>> {
    cd.check_node(i)?;
    if !in_y(cd, (i, t)) {
        return Err(Error::Domain(format!(
            "({i}, {t}) does not anchor a distinguished sub-quiver"
        )));
    }
    let n = cd.n;
    let mut out = Vec::new();
    match cd.kind {
        Kind::A => {
            for j in 1..=n {
                out.push((j, t - 2 + (j as i64 - i as i64).abs()));
            }
        }
        Kind::B => {
            // an arm ending at node n, climbing by 3 then by 2 towards node 1
            let arm = |yn: i64, out: &mut Vec<Label>| {
                out.push((n, yn));
                for j in 1..n {
                    out.push((j, yn + 3 + 2 * (n - 1 - j) as i64));
                }
            };
            if i == n {
                arm(t - 4, &mut out);
                arm(t - 6, &mut out);
            } else {
                for j in 1..n {
                    out.push((j, t - 4 + 2 * (j as i64 - i as i64).abs()));
                }
                out.push((n, t - 4 + 2 * (n - 1 - i) as i64 + 1));
                arm(t + 2 * n as i64 - 2 * i as i64 - 7, &mut out);
            }
        }
    }
    out.retain(|&l| in_y(cd, l));
    Ok(out)
}

/// `L_{i,t}` read off a seed. `left` and `right` are listed in mutation
/// order, far end first, and already have the node-n vertex dropped where
/// required; `center` is the column mutated last by the full line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LineParts {
    pub anchor: Label,
    pub full: Vec<Label>,
    pub left: Vec<Label>,
    pub right: Vec<Label>,
    pub left_unprimed: Vec<Label>,
    pub right_unprimed: Vec<Label>,
    pub center: Label,
}

pub fn line_parts(seed: &Seed, anchor: Label) -> Result<LineParts> {
    let cd = seed.cartan();
    let (i, t) = anchor;
    let mut full = line_labels(cd, anchor)?;
    full.retain(|&l| seed.has_label(l));
    let cx = x_of(cd, anchor)?;
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &l in &full {
        let x = x_of(cd, l)?;
        if x < cx {
            left.push((x, l));
        } else if x > cx {
            right.push((x, l));
        }
    }
    left.sort();
    right.sort_by(|a, b| b.cmp(a));
    let left_unprimed: Vec<Label> = left.iter().map(|e| e.1).collect();
    let right_unprimed: Vec<Label> = right.iter().map(|e| e.1).collect();
    if cd.kind == Kind::B && i != cd.n {
        let n = cd.n as i64;
        let drop = (cd.n, t + 2 * n - 2 * i as i64 - 7);
        match (2 * n - 2 * i as i64 + t).rem_euclid(4) {
            3 => left.retain(|e| e.1 != drop),
            _ => right.retain(|e| e.1 != drop),
        }
    }
    for part in [&left, &right] {
        if part.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Unsupported(format!("two vertices share a column in L({i},{t})")));
        }
    }
    let l2: Vec<Label> = left.into_iter().map(|e| e.1).collect();
    let r2: Vec<Label> = right.into_iter().map(|e| e.1).collect();
    let center = match cd.kind {
        Kind::A => (i, t - 2),
        Kind::B => (i, t - 4),
    };
    Ok(LineParts {
        anchor,
        full,
        left: l2,
        right: r2,
        left_unprimed,
        right_unprimed,
        center,
    })
}

impl Seed {
    /// Column mutations along part of `L_{i,t}`.
    pub fn mutate_part(&mut self, part: Part, anchor: Label) -> Result<()> {
        let lp = line_parts(self, anchor)?;
        let cols: Vec<Label> = match part {
            Part::Left => lp.left,
            Part::Right => lp.right,
            Part::Full => lp.left.into_iter().chain(lp.right).chain([lp.center]).collect(),
        };
        for (j, s) in cols {
            self.mutate_column(j, s);
        }
        Ok(())
    }
}
