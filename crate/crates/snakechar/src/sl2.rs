//! `U_q(sl_2)` characters and the maps `beta_i`, `phi_i` built from them.
//!
//! sl2 monomials are ordinary [`Monomial`]s supported on node 1.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::monomial::{a_expansion, a_monomial, leq, CartanData, Monomial, QCharacter};

/// The string `{s + k - 2i - 1 : 0 <= i < k}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QString {
    pub k: i64,
    pub s: i64,
}

impl QString {
    pub fn new(k: i64, s: i64) -> Result<Self> {
        if k < 1 {
            return Err(Error::Domain(format!("string length {k} < 1")));
        }
        Ok(QString { k, s })
    }

    pub fn params(&self) -> Vec<i64> {
        (0..self.k).map(|i| self.s + self.k - 2 * i - 1).collect()
    }

    pub fn top(&self) -> i64 {
        self.s + self.k - 1
    }

    pub fn bottom(&self) -> i64 {
        self.s - self.k + 1
    }

    fn contains(&self, o: &QString) -> bool {
        self.bottom() <= o.bottom() && o.top() <= self.top() && (self.top() - o.top()).rem_euclid(2) == 0
    }

    pub fn monomial(&self) -> Monomial {
        Monomial::from_pairs(self.params().into_iter().map(|p| (1, p, 1)))
    }
}

/// Two strings are in general position if their union is not a string or
/// one contains the other.
pub fn in_general_position(a: &QString, b: &QString) -> bool {
    if a.contains(b) || b.contains(a) {
        return true;
    }
    let mut u: Vec<i64> = a.params();
    u.extend(b.params());
    u.sort_unstable();
    u.dedup();
    let is_string = u.windows(2).all(|w| w[1] - w[0] == 2);
    !is_string
}

/// sl2 `A_a = Y_{a-1} Y_{a+1}`.
pub fn a_sl2(a: i64) -> Monomial {
    Monomial::from_pairs([(1, a - 1, 1), (1, a + 1, 1)])
}

/// `chi_q(W_k^{(s)})`: `X * sum_{i=0}^{k} prod_{j<i} A^{-1}_{s+k-2j}`.
pub fn kr_qchar_sl2(k: i64, s: i64) -> Result<QCharacter> {
    let st = QString::new(k, s)?;
    let mut cur = st.monomial();
    let mut out = QCharacter::monomial(cur.clone());
    for j in 0..k {
        cur = cur.div(&a_sl2(s + k - 2 * j));
        out.add_term(cur.clone(), BigInt::one());
    }
    Ok(out)
}

/// Splits a dominant sl2 monomial into strings pairwise in general position.
pub fn decompose_strings(m: &Monomial) -> Result<Vec<QString>> {
    if !m.is_dominant() {
        return Err(Error::Domain(format!("{m} is not dominant")));
    }
    let mut left: BTreeMap<i64, i64> = BTreeMap::new();
    for (v, e) in m.iter() {
        if v.node() != 1 {
            return Err(Error::Domain(format!("{m} is not an sl2 monomial")));
        }
        left.insert(v.param(), e);
    }
    let mut out = Vec::new();
    while let Some((&top, _)) = left.iter().next_back() {
        let mut p = top;
        let mut k = 0;
        while let Some(e) = left.get_mut(&p) {
            *e -= 1;
            if *e == 0 {
                left.remove(&p);
            }
            k += 1;
            p -= 2;
        }
        out.push(QString { k, s: top - k + 1 });
    }
    debug_assert!(out
        .iter()
        .enumerate()
        .all(|(x, a)| out[x + 1..].iter().all(|b| in_general_position(a, b))));
    Ok(out)
}

/// `chi_q(L(m))` for a dominant sl2 monomial.
pub fn sl2_qchar(m: &Monomial) -> Result<QCharacter> {
    let mut out = QCharacter::one();
    for st in decompose_strings(m)? {
        out = out.mul(&kr_qchar_sl2(st.k, st.s)?);
    }
    Ok(out)
}

/// `beta_j`: erase every variable not attached to node `j`, as an sl2 monomial.
pub fn beta_project(m: &Monomial, j: usize) -> Monomial {
    Monomial::from_pairs(m.iter().filter(|(v, _)| v.node() == j).map(|(v, e)| (1, v.param(), e)))
}

/// `phi_i(m)`: the sl2 character of the node-`i` part of `m`, with each sl2
/// `A^{-1}` lifted to `A_{i,.}^{-1}` and parameters scaled by `d_i`.
pub fn phi(cd: &CartanData, i: usize, m: &Monomial) -> Result<QCharacter> {
    cd.check_node(i)?;
    if !m.is_i_dominant(i) {
        return Err(Error::Domain(format!("{m} is not {i}-dominant")));
    }
    let d = cd.d(i);
    let mut classes: BTreeMap<i64, Vec<(usize, i64, i64)>> = BTreeMap::new();
    for (v, e) in m.iter().filter(|(v, _)| v.node() == i) {
        let r = v.param().rem_euclid(d);
        classes.entry(r).or_default().push((1, (v.param() - r) / d, e));
    }
    let a1 = CartanData::a(1);
    let mut out = QCharacter::monomial(m.clone());
    for (r, ys) in classes {
        let top = Monomial::from_pairs(ys);
        let chi = sl2_qchar(&top)?;
        let mut lifted = QCharacter::zero();
        for (t, k) in chi.terms() {
            let ex = a_expansion(&a1, t, &top).expect("sl2 terms lie below the top");
            let mut lm = Monomial::one();
            for (a, e) in ex {
                lm = lm.mul(&a_monomial(cd, i, r + d * a.param())?.pow(-e));
            }
            lifted.add_term(lm, k.clone());
        }
        out = out.mul(&lifted);
    }
    Ok(out)
}

/// How the next block of an i-decomposition is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PickOrder {
    /// Greatest remaining i-dominant monomial in the division order.
    Greatest,
    /// Smallest (in the division order) among the maximal ones for the partial order.
    MaximalSmallest,
}

/// Writes `c` as a positive combination of `phi_i` blocks.
pub fn i_decomposition(cd: &CartanData, c: &QCharacter, i: usize) -> Result<Vec<(Monomial, BigInt)>> {
    i_decomposition_with(cd, c, i, PickOrder::Greatest)
}

pub fn i_decomposition_with(
    cd: &CartanData,
    c: &QCharacter,
    i: usize,
    order: PickOrder,
) -> Result<Vec<(Monomial, BigInt)>> {
    cd.check_node(i)?;
    let mut rem = c.clone();
    let mut out = Vec::new();
    loop {
        let cands: Vec<&Monomial> = rem.terms().map(|(m, _)| m).filter(|m| m.is_i_dominant(i)).collect();
        let pick = match order {
            PickOrder::Greatest => cands.iter().max_by(|a, b| a.lex_cmp(b)).copied(),
            PickOrder::MaximalSmallest => cands
                .iter()
                .filter(|m| !cands.iter().any(|o| o != *m && leq(cd, m, o)))
                .min_by(|a, b| a.lex_cmp(b))
                .copied(),
        };
        let Some(m) = pick.cloned() else { break };
        let k = rem.coefficient(&m);
        if k.is_negative() {
            return Err(Error::NegativeMultiplicity(m.to_string()));
        }
        rem = rem.sub(&phi(cd, i, &m)?.scale(&k));
        out.push((m, k));
    }
    if !rem.is_zero() {
        return Err(Error::NegativeMultiplicity(format!(
            "{} terms left without an {i}-dominant block",
            rem.len()
        )));
    }
    out.sort_by(|a, b| b.0.lex_cmp(&a.0));
    debug_assert!(out.iter().all(|(_, k)| !k.is_zero()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(s: &str) -> Monomial {
        s.parse().unwrap()
    }

    fn q(s: &str) -> QCharacter {
        s.parse().unwrap()
    }

    /// Independent expansion: enumerate subsets of A-factors that stay on one chain.
    fn kr_oracle(k: i64, s: i64) -> QCharacter {
        let mut out = QCharacter::zero();
        for i in 0..=k {
            let mut mono: Vec<(usize, i64, i64)> = (0..k).map(|r| (1, s + k - 2 * r - 1, 1)).collect();
            for j in 0..i {
                let a = s + k - 2 * j;
                mono.push((1, a - 1, -1));
                mono.push((1, a + 1, -1));
            }
            out.add_term(Monomial::from_pairs(mono), BigInt::one());
        }
        out
    }

    #[test]
    fn kr_examples() {
        assert_eq!(kr_qchar_sl2(1, 0).unwrap(), q("1_0 + 1_2^-1"));
        assert_eq!(kr_qchar_sl2(2, 0).unwrap(), q("1_-1 1_1 + 1_-1 1_3^-1 + 1_1^-1 1_3^-1"));
        for k in 1..=10 {
            assert_eq!(kr_qchar_sl2(k, 3).unwrap().len(), k as usize + 1);
            assert_eq!(kr_qchar_sl2(k, -3).unwrap(), kr_oracle(k, -3));
        }
        assert!(kr_qchar_sl2(0, 0).is_err());
    }

    #[test]
    fn general_position() {
        let s = |k, s| QString::new(k, s).unwrap();
        assert!(!in_general_position(&s(1, 0), &s(1, 2)));
        assert!(in_general_position(&s(1, 0), &s(1, 4)));
        assert!(in_general_position(&s(3, 0), &s(1, 0)));
        assert!(in_general_position(&s(1, 0), &s(1, 1)));
    }

    #[test]
    fn string_decomposition() {
        assert_eq!(decompose_strings(&m("1_0 1_2")).unwrap(), vec![QString { k: 2, s: 1 }]);
        let mut d = decompose_strings(&m("1_0 1_4")).unwrap();
        d.sort();
        assert_eq!(d, vec![QString { k: 1, s: 0 }, QString { k: 1, s: 4 }]);
        assert_eq!(
            decompose_strings(&m("1_0^2")).unwrap(),
            vec![QString { k: 1, s: 0 }, QString { k: 1, s: 0 }]
        );
        assert!(decompose_strings(&m("1_0^-1")).is_err());
    }

    #[test]
    fn sl2_characters() {
        assert_eq!(sl2_qchar(&m("1_0")).unwrap(), q("1_0 + 1_2^-1"));
        assert_eq!(sl2_qchar(&m("1_-1 1_1")).unwrap().len(), 3);
        assert_eq!(sl2_qchar(&m("1_0 1_4")).unwrap().len(), 4);
        assert_eq!(sl2_qchar(&Monomial::one()).unwrap(), QCharacter::one());
    }

    #[test]
    fn projections() {
        assert_eq!(beta_project(&m("1_0 2_3"), 1), m("1_0"));
        assert!(beta_project(&m("2_3^-1"), 1).is_one());
        let a = a_monomial(&CartanData::a(3), 2, 0).unwrap();
        assert_eq!(beta_project(&a, 2), m("1_-1 1_1"));
    }

    #[test]
    fn phi_examples() {
        let a3 = CartanData::a(3);
        let a = a_monomial(&a3, 1, 1).unwrap();
        let want = QCharacter::from_terms([(m("1_0"), BigInt::one()), (m("1_0").div(&a), BigInt::one())]);
        assert_eq!(phi(&a3, 1, &m("1_0")).unwrap(), want);
        assert_eq!(phi(&a3, 2, &m("1_0 3_4")).unwrap(), q("1_0 3_4"));
        let b3 = CartanData::b(3);
        let a = a_monomial(&b3, 1, 2).unwrap();
        let want = QCharacter::from_terms([(m("1_0"), BigInt::one()), (m("1_0").div(&a), BigInt::one())]);
        assert_eq!(phi(&b3, 1, &m("1_0")).unwrap(), want);
        assert!(phi(&a3, 1, &m("1_0^-1")).is_err());
    }

    #[test]
    fn decomposition_of_fundamental_sl2() {
        let a1 = CartanData::a(1);
        let c = kr_qchar_sl2(1, 0).unwrap();
        assert_eq!(i_decomposition(&a1, &c, 1).unwrap(), vec![(m("1_0"), BigInt::one())]);
        let two = c.scale(&BigInt::from(2));
        assert_eq!(
            i_decomposition(&a1, &two, 1).unwrap(),
            vec![(m("1_0"), BigInt::from(2))]
        );
        let bad = q("1_2^-1");
        assert!(matches!(
            i_decomposition(&a1, &bad, 1),
            Err(Error::NegativeMultiplicity(_))
        ));
    }

    proptest! {
        #[test]
        fn kr_has_one_dominant_and_one_antidominant(k in 1i64..=10, s in -8i64..=8) {
            let c = kr_qchar_sl2(k, s).unwrap();
            prop_assert_eq!(c.len(), k as usize + 1);
            prop_assert_eq!(c.dominant_terms().len(), 1);
            prop_assert_eq!(c.anti_dominant_terms().len(), 1);
        }

        #[test]
        fn decomposition_reproduces_monomial(ps in proptest::collection::vec((-6i64..6, 1i64..3), 1..5)) {
            let mono = Monomial::from_pairs(ps.into_iter().map(|(p, e)| (1, p, e)));
            let d = decompose_strings(&mono).unwrap();
            let mut back = Monomial::one();
            for st in &d {
                back = back.mul(&st.monomial());
            }
            prop_assert_eq!(back, mono);
            for (x, a) in d.iter().enumerate() {
                for b in &d[x + 1..] {
                    prop_assert!(in_general_position(a, b));
                }
            }
        }

        #[test]
        fn decomposition_order_independent(ps in proptest::collection::vec((-4i64..4, 1i64..3), 1..4)) {
            let a1 = CartanData::a(1);
            let mono = Monomial::from_pairs(ps.into_iter().map(|(p, e)| (1, p, e)));
            let c = sl2_qchar(&mono).unwrap();
            let mut x = i_decomposition_with(&a1, &c, 1, PickOrder::Greatest).unwrap();
            let mut y = i_decomposition_with(&a1, &c, 1, PickOrder::MaximalSmallest).unwrap();
            x.sort();
            y.sort();
            prop_assert_eq!(x, y);
        }
    }
}
