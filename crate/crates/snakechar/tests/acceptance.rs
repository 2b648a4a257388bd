use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use snakechar::cluster::{fundamental_segments, guard_band, snake_mutation_sequence, verify_hl, Module};
use snakechar::path::enumerate_paths;
use snakechar::sl2::kr_qchar_sl2;
use snakechar::snake::{in_x, position_class, prime_factorize, prime_snakes};
use snakechar::ssystem::{
    classify_product_dominants, parse_equation_file, s_system_equation, square_dominants, verify_snake_identity, Method,
};
use snakechar::{qc_div_exact, qc_mul, snake_qchar, tsa_report, CartanData, Error, Point, QCharacter, Snake};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, u64, Box<dyn Fn() -> Outcome + 'a>);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sn(cd: &CartanData, s: &str) -> Snake {
    Snake::parse(cd, s).unwrap()
}

fn c1_sl2_kr() -> Outcome {
    let mut count = 0;
    for k in 1..=10 {
        for s in -8..=8 {
            let Ok(c) = kr_qchar_sl2(k, s) else { continue };
            count += 1;
            check(c.len() == k as usize + 1, || {
                format!("W_{k}^({s}) has {} terms", c.len())
            })?;
            check(c.dominant_terms().len() == 1, || format!("W_{k}^({s}) dominants"))?;
            check(c.anti_dominant_terms().len() == 1, || {
                format!("W_{k}^({s}) anti-dominants")
            })?;
        }
    }
    Ok(format!("{count} characters"))
}

fn count_a(len: usize, from: i64, to: i64) -> usize {
    if len == 0 {
        return (from == to) as usize;
    }
    count_a(len - 1, from + 1, to) + count_a(len - 1, from - 1, to)
}

/// End heights `4u + e` of node-`n` half paths starting at `y`.
fn half_ends(steps_left: usize, y: i64, out: &mut BTreeMap<i64, usize>) {
    if steps_left == 1 {
        for s in [1, -1] {
            *out.entry(4 * (y + s) + s).or_default() += 1;
        }
        return;
    }
    for s in [2, -2] {
        half_ends(steps_left - 1, y + s, out);
    }
}

fn count_b(n: usize, i: usize, k: i64) -> usize {
    let n2 = 2 * n as i64;
    let ends = |l: i64| {
        let mut m = BTreeMap::new();
        half_ends(n, l + n2 - 1, &mut m);
        m
    };
    if i == n {
        return ends(k).values().sum();
    }
    let off = 2 * (n - i) as i64 - 1;
    let (a, b) = (ends(k - off), ends(k + off));
    a.iter()
        .map(|(ya, ca)| ca * b.range(..ya).map(|(_, cb)| cb).sum::<usize>())
        .sum()
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, j| acc * (n - j) / (j + 1))
}

fn c2_path_counts() -> Outcome {
    let mut checked = 0;
    for n in 1..=6 {
        let cd = CartanData::a(n);
        for i in 1..=n {
            for k in (-12..=12).filter(|k| in_x(&cd, Point::new(i, *k))) {
                let got = enumerate_paths(&cd, Point::new(i, k)).map_err(|e| e.to_string())?.len();
                let oracle = count_a(n + 1, i as i64 + k, n as i64 + 1 - i as i64 + k);
                check(got == oracle && got == binom(n + 1, i), || {
                    format!("A{n} P({i},{k}): {got} vs {oracle}")
                })?;
                checked += 1;
            }
        }
    }
    for n in 2..=4 {
        let cd = CartanData::b(n);
        for i in 1..=n {
            for k in (-12..=12).filter(|k| in_x(&cd, Point::new(i, *k))) {
                let got = enumerate_paths(&cd, Point::new(i, k)).map_err(|e| e.to_string())?.len();
                let oracle = count_b(n, i, k);
                check(got == oracle, || format!("B{n} P({i},{k}): {got} vs {oracle}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} path sets"))
}

fn corpus() -> Vec<Snake> {
    let mut out = Vec::new();
    for cd in [CartanData::a(2), CartanData::a(3), CartanData::b(2), CartanData::b(3)] {
        out.extend(prime_snakes(&cd, 3, 20));
    }
    out
}

fn c3_tsa(corpus: &[Snake]) -> Outcome {
    for s in corpus {
        let r = tsa_report(&snake_qchar(s));
        check(r.all(), || format!("{s} ({:?}): {r:?}", s.cartan().kind))?;
    }
    Ok(format!("{} prime snakes", corpus.len()))
}

fn c4_real(corpus: &[Snake]) -> Outcome {
    let mut expanded = 0;
    for s in corpus {
        let d = square_dominants(s).map_err(|e| e.to_string())?;
        let want = s.monomial().pow(2);
        check(d.len() == 1 && d[0].0 == want, || {
            format!("{s}: square has dominants {d:?}")
        })?;
        let c = snake_qchar(s);
        if c.len() <= 300 {
            check(qc_mul(&c, &c).dominant_terms() == d, || {
                format!("{s}: expanded square disagrees")
            })?;
            expanded += 1;
        }
    }
    Ok(format!("{} squares, {expanded} also expanded in full", corpus.len()))
}

fn c5_ssystem() -> Outcome {
    let root = env!("CARGO_MANIFEST_DIR");
    let a3 = std::fs::read_to_string(format!("{root}/fixtures/a3_equations.txt")).map_err(|e| e.to_string())?;
    let b4 = std::fs::read_to_string(format!("{root}/fixtures/b4_equations.txt")).map_err(|e| e.to_string())?;
    let (_, a3) = parse_equation_file(&a3).map_err(|e| e.to_string())?;
    let (_, b4) = parse_equation_file(&b4).map_err(|e| e.to_string())?;
    for e in &a3 {
        e.verify(Method::Expand).map_err(|x| x.to_string())?;
        e.verify_classical().map_err(|x| x.to_string())?;
        let s2 = e.s2().ok_or("missing S2")?;
        let built = s_system_equation(s2).map_err(|x| x.to_string())?;
        snakechar::ssystem::verify_equation(&built).map_err(|x| x.to_string())?;
        snakechar::ssystem::verify_classical(&built).map_err(|x| x.to_string())?;
    }
    let mut b4_ok = 0;
    for e in &b4 {
        e.verify(Method::Dominant).map_err(|x| x.to_string())?;
        let built = s_system_equation(e.s2().ok_or("missing S2")?).map_err(|x| x.to_string())?;
        check(e.matches(&built), || format!("{e} is not the built equation {built}"))?;
        b4_ok += 1;
    }
    let classical = [2, 3, 5, 8];
    for &x in &classical {
        b4[x].verify_classical().map_err(|e| e.to_string())?;
    }
    Ok(format!(
        "A3 {}/{} exact and classical, B4 {b4_ok}/{} exact, {} B4 classical",
        a3.len(),
        a3.len(),
        b4.len(),
        classical.len()
    ))
}

fn c6_dominant_sets() -> Outcome {
    let mut by_k1: BTreeMap<(String, i64), usize> = BTreeMap::new();
    for cd in [CartanData::a(3), CartanData::b(2)] {
        for s in prime_snakes(&cd, 3, 14).into_iter().filter(|s| s.len() >= 2) {
            let Ok(eq) = s_system_equation(&s) else { continue };
            let k1 = eq.spec.segments[0].k;
            let key = (format!("{:?}{}", cd.kind, cd.n), k1);
            if !(1..=3).contains(&k1) || by_k1.get(&key).copied().unwrap_or(0) >= 4 {
                continue;
            }
            classify_product_dominants(&eq).map_err(|e| e.to_string())?;
            *by_k1.entry(key).or_default() += 1;
        }
    }
    let total: usize = by_k1.values().sum();
    check(total >= 10, || format!("only {total} instances"))?;
    for k1 in 1..=3 {
        check(by_k1.keys().any(|(_, k)| *k == k1), || {
            format!("no instance with k1 = {k1}")
        })?;
    }
    let summary: Vec<String> = by_k1.iter().map(|((t, k), c)| format!("{t}/k1={k}:{c}")).collect();
    Ok(format!("{total} instances ({})", summary.join(" ")))
}

struct Example {
    cd: CartanData,
    snake: &'static str,
    segments: &'static [&'static str],
    distinguished: &'static [&'static str],
    sequence: &'static [&'static str],
    target: (usize, i64),
}

fn examples() -> Vec<Example> {
    vec![
        Example {
            cd: CartanData::a(5),
            snake: "2_-12 4_-8 5_-5 5_-3 4_0",
            segments: &["4_0", "5_-5 5_-3 4_0", "2_-12 4_-8 5_-5"],
            distinguished: &["4_0", "5_-5"],
            sequence: &[
                "R L(4,0)",
                "Lp L(5,-5)",
                "Lp tau_l L(5,-5)",
                "Lp tau_l^2 L(5,-5)",
                "Lp tau_l^3 L(5,-5)",
                "C 3 -9",
                "C 2 -10",
                "C 1 -11",
            ],
            target: (2, -12),
        },
        Example {
            cd: CartanData::a(5),
            snake: "2_-18 4_-14 5_-11 5_-9 4_-6",
            segments: &["4_-6", "5_-11 5_-9 4_-6", "2_-18 4_-14 5_-11"],
            distinguished: &["4_-6", "5_-11"],
            sequence: &[
                "C 2 0",
                "C 4 0",
                "C 1 -1",
                "C 3 -1",
                "C 5 -1",
                "C 2 -2",
                "C 4 -2",
                "C 1 -3",
                "C 3 -3",
                "C 5 -3",
                "C 2 -4",
                "C 4 -4",
                "C 1 -5",
                "C 3 -5",
                "C 5 -5",
                "R L(4,-6)",
                "Lp L(5,-11)",
                "Lp tau_l L(5,-11)",
                "Lp tau_l^2 L(5,-11)",
                "Lp tau_l^3 L(5,-11)",
                "C 3 -15",
                "C 2 -16",
                "C 1 -17",
            ],
            target: (2, -18),
        },
        Example {
            cd: CartanData::a(4),
            snake: "3_-25 3_-21 2_-16 2_-12 3_-9 2_-6 2_-4 1_-1",
            segments: &[
                "1_-1",
                "3_-9 2_-6 2_-4 1_-1",
                "2_-12 3_-9",
                "2_-16 2_-12",
                "3_-21 2_-16",
                "3_-25 3_-21",
            ],
            distinguished: &["1_-1", "3_-9", "2_-12", "2_-16", "3_-21"],
            sequence: &[
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
            ],
            target: (3, -25),
        },
        Example {
            cd: CartanData::a(4),
            snake: "2_-16 3_-13 3_-11 2_-8 2_-4 3_-1",
            segments: &[],
            distinguished: &["3_-1", "2_-4", "2_-8", "3_-13"],
            sequence: &[],
            target: (0, 0),
        },
        Example {
            cd: CartanData::b(3),
            snake: "1_-35 2_-29 2_-21 3_-16 3_-10 2_-5",
            segments: &[
                "2_-5",
                "3_-10 2_-5",
                "3_-16 3_-10",
                "2_-21 3_-16",
                "2_-29 2_-21",
                "1_-35 2_-29",
            ],
            distinguished: &["2_-5", "3_-10", "3_-16", "2_-21", "2_-29"],
            sequence: &[
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
            ],
            target: (1, -35),
        },
        Example {
            cd: CartanData::b(3),
            snake: "2_-43 2_-35 2_-31 1_-25 3_-18 3_-8 3_-2 3_0",
            segments: &[
                "3_-2 3_0",
                "3_-8 3_-2",
                "3_-18 3_-8",
                "1_-25 3_-18",
                "2_-35 2_-31 1_-25",
                "2_-43 2_-35",
            ],
            distinguished: &["3_0", "3_-2", "3_-8", "3_-18", "1_-25", "2_-35"],
            sequence: &[
                "L L(3,-2)",
                "L L(3,-8)",
                "L tau L(3,-8)",
                "R L(3,-18)",
                "R tau_r L(3,-18)",
                "Lp L(1,-25)",
                "Lp tau_l L(1,-25)",
                "L L(2,-35)",
            ],
            target: (2, -43),
        },
        Example {
            cd: CartanData::b(3),
            snake: "1_-31 2_-25 2_-17 3_-12 3_-6 2_-1",
            segments: &[],
            distinguished: &["2_-1", "3_-6", "3_-12", "2_-17", "2_-25"],
            sequence: &[],
            target: (0, 0),
        },
    ]
}

fn set<S: ToString>(v: impl IntoIterator<Item = S>) -> BTreeSet<String> {
    v.into_iter().map(|s| s.to_string()).collect()
}

fn c7_segments() -> Outcome {
    let all = examples();
    for ex in &all {
        let s = sn(&ex.cd, ex.snake);
        let fs = fundamental_segments(&s).map_err(|e| e.to_string())?;
        if !ex.segments.is_empty() {
            check(set(&fs) == set(ex.segments), || {
                format!("{}: segments {:?}", ex.snake, set(&fs))
            })?;
        }
        let dist = set(fs.iter().map(|f| f.distinguished()));
        check(dist == set(ex.distinguished), || {
            format!("{}: distinguished {dist:?}", ex.snake)
        })?;
        if !ex.sequence.is_empty() {
            let (steps, target) = snake_mutation_sequence(&s).map_err(|e| e.to_string())?;
            let got: Vec<String> = steps.iter().map(|x| x.to_string()).collect();
            check(got == ex.sequence, || format!("{}: sequence {got:?}", ex.snake))?;
            check(target == ex.target, || format!("{}: target {target:?}", ex.snake))?;
        }
    }
    Ok(format!("{} snakes", all.len()))
}

fn c8_mutation() -> Outcome {
    let mut notes = Vec::new();
    for (cd, text) in [
        (CartanData::a(3), "3_-5 3_-3"),
        (CartanData::a(5), "2_-12 4_-8 5_-5 5_-3 4_0"),
        (CartanData::b(3), "1_-35 2_-29 2_-21 3_-16 3_-10 2_-5"),
    ] {
        let s = sn(&cd, text);
        let r = verify_hl(&s, None, Some(guard_band(&cd))).map_err(|e| e.to_string())?;
        check(r.passed(), || {
            format!("{text}: matches {} stability {:?}", r.matches, r.stability)
        })?;
        let chi = r.run.module.character();
        check(*chi == snake_qchar(&s), || {
            format!("{text}: character differs from the path model")
        })?;
        if let Module::Snake(t) = &r.run.module {
            check(*t == s, || format!("{text}: got {t}"))?;
        }
        for t in &r.run.stats.snakes {
            let tsa = tsa_report(&snake_qchar(&sn(&cd, t)));
            check(tsa.all(), || format!("{text}: intermediate {t} is {tsa:?}"))?;
        }
        notes.push(format!(
            "{text} at {:?}: {} exact exchanges, {} terms, stable at depth {}",
            r.target,
            r.run.stats.exact_divisions,
            chi.len(),
            r.stability.map(|s| s.0).unwrap_or(r.run.depth)
        ));
    }
    Ok(notes.join("; "))
}

fn random_snake(cd: &CartanData, rng: &mut ChaCha8Rng) -> Snake {
    let len = rng.gen_range(1..=4);
    let starts: Vec<Point> = (-20..=-14)
        .flat_map(|k| cd.nodes().map(move |i| Point::new(i, k)))
        .filter(|p| in_x(cd, *p))
        .collect();
    let mut pts = vec![starts[rng.gen_range(0..starts.len())]];
    while pts.len() < len {
        let last = *pts.last().unwrap();
        let next: Vec<Point> = (last.k + 1..=last.k + 12)
            .flat_map(|k| cd.nodes().map(move |i| Point::new(i, k)))
            .filter(|q| in_x(cd, *q) && position_class(cd, last, *q).is_ok_and(|c| c.is_snake()))
            .collect();
        pts.push(next[rng.gen_range(0..next.len())]);
    }
    Snake::new(cd, pts).unwrap()
}

fn c9_factorization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut split = 0;
    for x in 0..100 {
        let cd = if x % 2 == 0 { CartanData::a(3) } else { CartanData::b(2) };
        let s = random_snake(&cd, &mut rng);
        let factors = prime_factorize(&s);
        let joined: Vec<Point> = factors.iter().flat_map(|f| f.points().to_vec()).collect();
        check(joined == s.points(), || format!("{s}: factors do not concatenate"))?;
        check(factors.iter().all(Snake::is_prime), || {
            format!("{s}: a factor is not prime")
        })?;
        let product = factors
            .iter()
            .fold(QCharacter::one(), |acc, f| qc_mul(&acc, &snake_qchar(f)));
        check(product == snake_qchar(&s), || {
            format!("{s}: product of prime factors differs")
        })?;
        split += (factors.len() > 1) as usize;
    }
    Ok(format!("100 snakes, {split} with several prime factors"))
}

fn c10_negative() -> Outcome {
    let cd = CartanData::a(3);
    let eq = s_system_equation(&sn(&cd, "3_-5 3_-3")).map_err(|e| e.to_string())?;
    let six: Vec<Snake> = eq.snakes().into_iter().cloned().collect();
    let holds = |v: &[Snake], m: Method| verify_snake_identity(&[&v[0], &v[1]], [&[&v[2], &v[3]], &[&v[4], &v[5]]], m);
    holds(&six, Method::Expand).map_err(|e| e.to_string())?;
    for x in 0..6 {
        let mut bad = six.clone();
        bad[x] = if bad[x].is_empty() {
            sn(&cd, "1_-1")
        } else {
            bad[x].shift(2).unwrap()
        };
        for m in [Method::Expand, Method::Dominant] {
            let r = holds(&bad, m);
            check(matches!(r, Err(Error::Mismatch(_))), || {
                format!("factor {} corrupted, {m:?}: {r:?}", x + 1)
            })?;
        }
    }
    let num = snake_qchar(&sn(&cd, "3_-5 3_-3"));
    let den = snake_qchar(&sn(&cd, "2_-2"));
    let r = qc_div_exact(&num, &den);
    check(matches!(r, Err(Error::InexactDivision(_))), || {
        format!("division gave {r:?}")
    })?;
    Ok("6 corrupted factors x 2 methods, 1 inexact division".into())
}

fn main() -> ExitCode {
    let corpus = corpus();
    let criteria: Vec<Criterion> = vec![
        ("sl2 KR characters", 1, Box::new(c1_sl2_kr)),
        ("path counts", 5, Box::new(c2_path_counts)),
        ("thin, special, anti-special", 60, Box::new(|| c3_tsa(&corpus))),
        ("realness", 120, Box::new(|| c4_real(&corpus))),
        ("S-system fixtures", 300, Box::new(c5_ssystem)),
        ("dominant classification", 120, Box::new(c6_dominant_sets)),
        ("fundamental segments and sequences", 1, Box::new(c7_segments)),
        ("mutation correspondence", 600, Box::new(c8_mutation)),
        ("prime factorization", 300, Box::new(c9_factorization)),
        ("negative controls", 1, Box::new(c10_negative)),
    ];
    let mut failed = Vec::new();
    for (x, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let out = match out {
            Ok(note) if took > Duration::from_secs(*budget) => Err(format!("{note}; over the {budget} s budget")),
            o => o,
        };
        match &out {
            Ok(note) => println!("criterion {}: PASS  {name} ({:.2} s) {note}", x + 1, took.as_secs_f64()),
            Err(why) => {
                println!("criterion {}: FAIL  {name} ({:.2} s) {why}", x + 1, took.as_secs_f64());
                failed.push(x + 1);
            }
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
