//! Cluster algebras on a finite window of the Hernandez–Leclerc quiver, with
//! q-characters as cluster variables.
//!
//! The infinite quiver is cut at `t >= -depth`. Vertices whose arrows reach
//! below the cut are tainted, and taint spreads through mutations. Variables
//! are kept as a lazy expression graph, so only what a target needs is ever
//! expanded, and an untainted target never touches the truncated part.

mod lines;
mod sequence;

pub use lines::{line_labels, line_parts, tau, LineParts, Part, Tau};
pub use sequence::{
    default_depth, fundamental_segments, guard_band, kr_sequence, parse_sequence, run_sequence,
    snake_mutation_sequence, verify_hl, Anchor, FundamentalSegment, HlReport, RunReport, SegmentKind, Step,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::identity::dominant_part;
use crate::monomial::{qc_div_exact, qc_mul, CartanData, Kind, Monomial, QCharacter};
use crate::path::{snake_qchar, snake_qchar_below};
use crate::snake::{spec_to_snake, Segment, Snake, SnakeSpec};

pub type Label = (usize, i64);

/// Vertex labels of the initial quiver inside the window.
fn initial_labels(cd: &CartanData, depth: i64) -> Vec<Label> {
    let mut out = Vec::new();
    for i in cd.nodes() {
        for t in (-depth..=0).rev() {
            if in_component(cd, (i, t)) {
                out.push((i, t));
            }
        }
    }
    out
}

fn in_component(cd: &CartanData, (i, t): Label) -> bool {
    match cd.kind {
        Kind::A => (i as i64 - t).rem_euclid(2) == 0,
        Kind::B if i == cd.n => t.rem_euclid(2) == 0,
        Kind::B => t.rem_euclid(2) == 1,
    }
}

/// Heads of the arrows leaving `(i, t)` in the infinite initial quiver.
fn initial_out(cd: &CartanData, (i, t): Label) -> Vec<Label> {
    cd.nodes()
        .filter(|&j| cd.b_entry(i, j) != 0)
        .map(|j| (j, t + cd.b_entry(i, j) + cd.d(j) - cd.d(i)))
        .filter(|&(_, s)| s <= 0)
        .collect()
}

/// Tails of the arrows entering `(i, t)` in the infinite initial quiver.
fn initial_in(cd: &CartanData, (i, t): Label) -> Vec<Label> {
    cd.nodes()
        .filter(|&j| cd.b_entry(j, i) != 0)
        .map(|j| (j, t - cd.b_entry(j, i) - cd.d(i) + cd.d(j)))
        .collect()
}

/// The Kirillov–Reshetikhin snake sitting at `(i, t)` in the initial seed.
pub fn initial_kr(cd: &CartanData, (i, t): Label) -> Result<SnakeSpec> {
    if !in_component(cd, (i, t)) || t > 0 {
        return Err(Error::Domain(format!("({i}, {t}) is not an initial vertex")));
    }
    let k = match cd.kind {
        Kind::A if i % 2 == 0 => (2 - t) / 2,
        Kind::A => (1 - t) / 2,
        Kind::B if i == cd.n => (2 - t) / 2,
        Kind::B => (3 - t).div_euclid(4),
    };
    Ok(SnakeSpec::new(t, vec![Segment::new(k, i, 0)]))
}

pub type VarId = usize;

#[derive(Clone, Debug)]
enum VarNode {
    Initial(Label),
    Exchange {
        old: VarId,
        plus: Vec<(VarId, u32)>,
        minus: Vec<(VarId, u32)>,
    },
}

/// A cluster variable, known through its module.
#[derive(Clone, Debug)]
struct Value {
    /// The terms whose variables all have parameter `<= 0`.
    low: Arc<QCharacter>,
    whole: Module,
}

/// What a cluster variable is known to be.
#[derive(Clone, Debug, PartialEq)]
pub enum Module {
    /// The character of this snake module.
    Snake(Snake),
    /// Only the character is known.
    Character(Arc<QCharacter>),
}

impl Module {
    /// The full q-character.
    pub fn character(&self) -> Arc<QCharacter> {
        match self {
            Module::Snake(s) => Arc::new(snake_qchar(s)),
            Module::Character(c) => c.clone(),
        }
    }

    pub fn snake(&self) -> Option<&Snake> {
        match self {
            Module::Snake(s) => Some(s),
            Module::Character(_) => None,
        }
    }
}

impl Value {
    fn full(&self) -> Arc<QCharacter> {
        self.whole.character()
    }
}

/// Expression graph of every variable ever produced, with a memo of the
/// evaluated ones.
#[derive(Clone, Debug, Default)]
struct Store {
    nodes: Vec<VarNode>,
    memo: Vec<Option<Value>>,
}

impl Store {
    fn push(&mut self, v: VarNode) -> VarId {
        self.nodes.push(v);
        self.memo.push(None);
        self.nodes.len() - 1
    }
}

/// Terms of `c` whose variables all have parameter `<= 0`. On characters of
/// modules whose highest monomial has that property this is an injective
/// ring homomorphism.
pub fn truncate(c: &QCharacter) -> QCharacter {
    QCharacter::from_terms(
        c.terms()
            .filter(|(m, _)| m.iter().all(|(v, _)| v.param() <= 0))
            .map(|(m, k)| (m.clone(), k.clone())),
    )
}

/// Compare by the exponent at the variable of greatest parameter, then
/// greatest node, where the monomials differ. Highest monomials of modules
/// are maximal for this order.
fn weight_cmp(a: &Monomial, b: &Monomial) -> std::cmp::Ordering {
    match a.div(b).iter().max_by_key(|(v, _)| (v.param(), v.node())) {
        None => std::cmp::Ordering::Equal,
        Some((_, e)) => e.cmp(&0),
    }
}

fn highest(c: &QCharacter) -> Option<&Monomial> {
    c.terms().map(|t| t.0).max_by(|a, b| weight_cmp(a, b))
}

/// Counters of one evaluation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EvalStats {
    pub initial: usize,
    /// Exchange relations whose division came out exact.
    pub exact_divisions: usize,
    /// Of those, the ones settled by checking `old * snake = plus + minus`
    /// for the snake read off the highest monomial.
    pub snake_quotients: usize,
    /// Those snakes, in evaluation order.
    pub snakes: Vec<String>,
}

/// A seed on the window `t >= -depth`.
#[derive(Clone, Debug)]
pub struct Seed {
    cd: CartanData,
    depth: i64,
    labels: Vec<Label>,
    /// `b[u][v] > 0` means `b[u][v]` arrows `u -> v`.
    b: Vec<BTreeMap<usize, i32>>,
    vars: Vec<VarId>,
    tainted: Vec<bool>,
    store: Store,
    pub mutations: usize,
    pub warnings: Vec<String>,
}

impl Seed {
    pub fn initial(cd: &CartanData, depth: i64) -> Result<Seed> {
        if depth <= 0 {
            return Err(Error::Domain(format!("depth must be positive, got {depth}")));
        }
        let labels = initial_labels(cd, depth);
        let index: BTreeMap<Label, usize> = labels.iter().enumerate().map(|(x, l)| (*l, x)).collect();
        let mut b = vec![BTreeMap::new(); labels.len()];
        let mut tainted = vec![false; labels.len()];
        for (u, &l) in labels.iter().enumerate() {
            for h in initial_out(cd, l) {
                match index.get(&h) {
                    Some(&v) => {
                        *b[u].entry(v).or_insert(0) += 1;
                        *b[v].entry(u).or_insert(0) -= 1;
                    }
                    None => tainted[u] = true,
                }
            }
            if initial_in(cd, l).iter().any(|&(_, s)| s < -depth) {
                tainted[u] = true;
            }
        }
        let mut store = Store::default();
        let vars = labels.iter().map(|&l| store.push(VarNode::Initial(l))).collect();
        Ok(Seed {
            cd: cd.clone(),
            depth,
            labels,
            b,
            vars,
            tainted,
            store,
            mutations: 0,
            warnings: Vec::new(),
        })
    }

    pub fn cartan(&self) -> &CartanData {
        &self.cd
    }

    pub fn depth(&self) -> i64 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: usize) -> Label {
        self.labels[v]
    }

    pub fn is_tainted(&self, v: usize) -> bool {
        self.tainted[v]
    }

    /// The vertex carrying `label`. Labels are unique between steps.
    pub fn find(&self, label: Label) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn has_label(&self, label: Label) -> bool {
        self.find(label).is_some()
    }

    /// Arrows `u -> v` with multiplicity, sorted.
    pub fn arrows(&self) -> Vec<(Label, Label, i32)> {
        let mut out: Vec<(Label, Label, i32)> = Vec::new();
        for (u, row) in self.b.iter().enumerate() {
            for (&v, &m) in row {
                if m > 0 {
                    out.push((self.labels[u], self.labels[v], m));
                }
            }
        }
        out.sort();
        out
    }

    /// `b` is skew-symmetric with an empty diagonal, so the quiver has no
    /// loops and no 2-cycles.
    pub fn is_valid_quiver(&self) -> bool {
        self.b.iter().enumerate().all(|(u, row)| {
            !row.contains_key(&u) && row.iter().all(|(&v, &m)| m != 0 && self.b[v].get(&u) == Some(&-m))
        })
    }

    /// Mutates vertex `k`; the variable is recorded lazily.
    pub fn mutate(&mut self, k: usize) {
        let row: Vec<(usize, i32)> = self.b[k].iter().map(|(&v, &m)| (v, m)).collect();
        let ins: Vec<(usize, i32)> = row.iter().filter(|e| e.1 < 0).map(|&(v, m)| (v, -m)).collect();
        let outs: Vec<(usize, i32)> = row.iter().filter(|e| e.1 > 0).copied().collect();

        let was_tainted = self.tainted[k];
        let touched = was_tainted || row.iter().any(|&(v, _)| self.tainted[v]);
        let node = VarNode::Exchange {
            old: self.vars[k],
            plus: ins.iter().map(|&(v, m)| (self.vars[v], m as u32)).collect(),
            minus: outs.iter().map(|&(v, m)| (self.vars[v], m as u32)).collect(),
        };
        self.vars[k] = self.store.push(node);

        for &(i, bik) in &ins {
            for &(j, bkj) in &outs {
                self.add_arrows(i, j, bik * bkj);
            }
        }
        for &(v, m) in &row {
            self.b[k].insert(v, -m);
            self.b[v].insert(k, m);
        }
        self.tainted[k] = touched;
        if was_tainted {
            for &(v, _) in &row {
                self.tainted[v] = true;
            }
        }
        let (i, t) = self.labels[k];
        self.labels[k] = (i, t - 2 * self.cd.d(i));
        self.mutations += 1;
    }

    fn add_arrows(&mut self, u: usize, v: usize, m: i32) {
        let e = self.b[u].entry(v).or_insert(0);
        *e += m;
        if *e == 0 {
            self.b[u].remove(&v);
            self.b[v].remove(&u);
        } else {
            let e = *e;
            self.b[v].insert(u, -e);
        }
    }

    pub fn mutate_label(&mut self, label: Label) -> Result<()> {
        let v = self.find(label).ok_or(Error::MissingLabel(label.0, label.1))?;
        self.mutate(v);
        Ok(())
    }

    /// Mutates `(i, t)` and then every lower vertex of its column, top first.
    /// A missing label is a no-op recorded in `warnings`.
    pub fn mutate_column(&mut self, i: usize, t: i64) {
        if !self.has_label((i, t)) {
            self.warnings.push(format!("column C({i},{t}) is empty"));
            return;
        }
        let step = 2 * self.cd.d(i);
        let mut col: Vec<(i64, usize)> = self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &(j, s))| j == i && s <= t && (t - s) % step == 0)
            .map(|(v, &(_, s))| (s, v))
            .collect();
        col.sort_by_key(|a| std::cmp::Reverse(a.0));
        for (_, v) in col {
            self.mutate(v);
        }
    }

    /// The variable at `label`, expanded.
    pub fn variable(&mut self, label: Label) -> Result<(Arc<QCharacter>, EvalStats)> {
        let (value, stats) = self.value(label)?;
        Ok((value.full(), stats))
    }

    /// The variable at `label`, as a module.
    pub fn module(&mut self, label: Label) -> Result<(Module, EvalStats)> {
        let (value, stats) = self.value(label)?;
        Ok((value.whole, stats))
    }

    fn value(&mut self, label: Label) -> Result<(Value, EvalStats)> {
        let v = self.find(label).ok_or(Error::MissingLabel(label.0, label.1))?;
        if self.tainted[v] {
            return Err(Error::TaintedTarget(format!(
                "({}, {}) at depth {}",
                label.0, label.1, self.depth
            )));
        }
        let root = self.vars[v];
        let stats = self.eval(root)?;
        Ok((self.store.memo[root].clone().expect("evaluated"), stats))
    }

    /// Initial labels and exchange count in the dependency closure of the
    /// variable at `label`.
    pub fn footprint(&self, label: Label) -> Result<(Vec<Label>, usize)> {
        let v = self.find(label).ok_or(Error::MissingLabel(label.0, label.1))?;
        let mut seen = vec![false; self.store.nodes.len()];
        let mut stack = vec![self.vars[v]];
        let mut initial = Vec::new();
        let mut exchanges = 0;
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                continue;
            }
            match &self.store.nodes[id] {
                VarNode::Initial(l) => initial.push(*l),
                VarNode::Exchange { old, plus, minus } => {
                    exchanges += 1;
                    stack.push(*old);
                    stack.extend(plus.iter().chain(minus).map(|e| e.0));
                }
            }
        }
        initial.sort();
        Ok((initial, exchanges))
    }

    fn eval(&mut self, root: VarId) -> Result<EvalStats> {
        let mut stats = EvalStats::default();
        // pending readers of each value, so that intermediate ones can be dropped
        let mut readers: BTreeMap<VarId, usize> = BTreeMap::new();
        let mut seen = vec![false; self.store.nodes.len()];
        let mut todo = vec![root];
        while let Some(id) = todo.pop() {
            if self.store.memo[id].is_some() || std::mem::replace(&mut seen[id], true) {
                continue;
            }
            if let VarNode::Exchange { old, plus, minus } = &self.store.nodes[id] {
                let mut deps: Vec<VarId> = std::iter::once(*old)
                    .chain(plus.iter().chain(minus).map(|e| e.0))
                    .collect();
                deps.sort_unstable();
                deps.dedup();
                for d in deps {
                    *readers.entry(d).or_default() += 1;
                    todo.push(d);
                }
            }
        }
        let mut stack = vec![(root, false)];
        while let Some((id, ready)) = stack.pop() {
            if self.store.memo[id].is_some() {
                continue;
            }
            match self.store.nodes[id].clone() {
                VarNode::Initial(label) => {
                    let spec = initial_kr(&self.cd, label)?;
                    let s = spec_to_snake(&self.cd, &spec)?;
                    let low = Arc::new(snake_qchar_below(&s, 0));
                    self.store.memo[id] = Some(Value {
                        low,
                        whole: Module::Snake(s),
                    });
                    stats.initial += 1;
                }
                VarNode::Exchange { old, plus, minus } => {
                    let deps = std::iter::once(old).chain(plus.iter().chain(&minus).map(|e| e.0));
                    if !ready {
                        stack.push((id, true));
                        stack.extend(deps.filter(|&d| self.store.memo[d].is_none()).map(|d| (d, false)));
                        continue;
                    }
                    let value = self.exchange(old, &plus, &minus, &mut stats)?;
                    self.store.memo[id] = Some(value);
                    stats.exact_divisions += 1;
                    let mut deps: Vec<VarId> = std::iter::once(old)
                        .chain(plus.iter().chain(&minus).map(|e| e.0))
                        .collect();
                    deps.sort_unstable();
                    deps.dedup();
                    for d in deps {
                        let left = readers.get_mut(&d).expect("counted");
                        *left -= 1;
                        if *left == 0 && d != root {
                            self.store.memo[d] = None;
                        }
                    }
                }
            }
        }
        Ok(stats)
    }

    fn memo(&self, id: VarId) -> &Value {
        self.store.memo[id].as_ref().expect("evaluated")
    }

    /// The new variable of `old * new = prod(plus) + prod(minus)`.
    ///
    /// The highest monomial of `new` is read off the others. When it is a
    /// snake with parameters `<= 0`, the identity is checked on the dominant
    /// terms of the truncated characters, which is exact for characters of
    /// modules. Otherwise the full characters are divided.
    fn exchange(
        &self,
        old: VarId,
        plus: &[(VarId, u32)],
        minus: &[(VarId, u32)],
        stats: &mut EvalStats,
    ) -> Result<Value> {
        let top = |f: &[(VarId, u32)]| {
            f.iter().fold(Monomial::one(), |acc, &(id, m)| {
                let h = highest(&self.memo(id).low).expect("nonzero").pow(m as i64);
                acc.mul(&h)
            })
        };
        let (tp, tm) = (top(plus), top(minus));
        let num_top = if weight_cmp(&tp, &tm).is_ge() { tp } else { tm };
        let hw = num_top.div(highest(&self.memo(old).low).expect("nonzero"));
        if hw.iter().all(|(v, _)| v.param() <= 0) {
            if let Ok(s) = Snake::from_monomial(&self.cd, &hw) {
                let low = snake_qchar_below(&s, 0);
                let p = self.low_pair(plus);
                let m = self.low_pair(minus);
                let r = dominant_part(&[(1, &self.memo(old).low, &low), (-1, &p.0, &p.1), (-1, &m.0, &m.1)])?;
                if r.holds() {
                    stats.snake_quotients += 1;
                    stats.snakes.push(s.to_string());
                    return Ok(Value {
                        low: Arc::new(low),
                        whole: Module::Snake(s),
                    });
                }
            }
        }
        let full = |f: &[(VarId, u32)]| {
            let mut acc = QCharacter::one();
            for &(id, m) in f {
                let chi = self.memo(id).full();
                for _ in 0..m {
                    acc = qc_mul(&acc, &chi);
                }
            }
            acc
        };
        let num = full(plus).add(&full(minus));
        let q = qc_div_exact(&num, &self.memo(old).full())?;
        Ok(Value {
            low: Arc::new(truncate(&q)),
            whole: Module::Character(Arc::new(q)),
        })
    }

    /// The truncated product of `factors` as two characters, the largest
    /// kept apart.
    fn low_pair(&self, factors: &[(VarId, u32)]) -> (Arc<QCharacter>, Arc<QCharacter>) {
        let mut all: Vec<&Arc<QCharacter>> = Vec::new();
        for &(id, m) in factors {
            all.extend(std::iter::repeat_n(&self.memo(id).low, m as usize));
        }
        all.sort_by_key(|c| std::cmp::Reverse(c.len()));
        match all.split_first() {
            None => (Arc::new(QCharacter::one()), Arc::new(QCharacter::one())),
            Some((big, [])) => ((*big).clone(), Arc::new(QCharacter::one())),
            Some((big, [other])) => ((*big).clone(), (*other).clone()),
            Some((big, rest)) => {
                let small = rest.iter().fold(QCharacter::one(), |acc, c| qc_mul(&acc, c));
                ((*big).clone(), Arc::new(small))
            }
        }
    }

    pub fn snapshot(&self) -> serde_json::Value {
        let vertices: Vec<serde_json::Value> = self
            .labels
            .iter()
            .enumerate()
            .map(|(v, l)| {
                let digest = self.store.memo[self.vars[v]].as_ref().map(|x| match &x.whole {
                    Module::Snake(s) => serde_json::json!({ "snake": s.to_string(), "truncated_terms": x.low.len() }),
                    Module::Character(c) => digest(c),
                });
                serde_json::json!({
                    "label": [l.0, l.1],
                    "tainted": self.tainted[v],
                    "variable": digest,
                })
            })
            .collect();
        let arrows: Vec<serde_json::Value> = self
            .arrows()
            .into_iter()
            .map(|(a, b, m)| serde_json::json!([[a.0, a.1], [b.0, b.1], m]))
            .collect();
        serde_json::json!({
            "type": format!("{}{}", self.cd.kind, self.cd.n),
            "depth": self.depth,
            "vertices": vertices,
            "arrows": arrows,
        })
    }
}

/// Term count, highest monomial and a checksum of a character.
pub fn digest(c: &QCharacter) -> serde_json::Value {
    let mut sum = BigInt::from(0);
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (m, k) in c.terms() {
        sum += k;
        for b in format!("{m}:{k};").bytes() {
            h = (h ^ b as u64).wrapping_mul(0x100_0000_01b3);
        }
    }
    serde_json::json!({
        "terms": c.len(),
        "highest": c.leading().map(|(m, _)| m.to_string()),
        "dimension": sum.to_string(),
        "fnv": format!("{h:016x}"),
    })
}
