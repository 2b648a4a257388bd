use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use snakechar::cluster::{default_depth, guard_band, parse_sequence, verify_hl, Module, RunReport, Seed};
use snakechar::snake::{position_class, prime_factorize, snake_to_spec};
use snakechar::ssystem::{
    parse_equation, parse_type_header, s_system_equation, verify_classical, verify_equation_with, Method,
};
use snakechar::{snake_qchar, tsa_report, CartanData, Kind, Monomial, Snake};

#[derive(Parser)]
#[command(
    name = "snakechar",
    version,
    about = "q-characters of snake modules, S-systems and mutation sequences"
)]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for `corpus`.
    #[arg(long, global = true, env = "SNAKECHAR_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Algebra {
    /// Type, A or B.
    #[arg(short = 't', long = "type")]
    kind: Kind,
    /// Rank.
    #[arg(short, long)]
    n: usize,
}

impl Algebra {
    fn cartan(&self) -> Result<CartanData, CliError> {
        Ok(CartanData::new(self.kind, self.n)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Expand,
    Dominant,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Expand => Method::Expand,
            MethodArg::Dominant => Method::Dominant,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// q-character of a snake module.
    Qchar {
        #[command(flatten)]
        alg: Algebra,
        snake: String,
        /// Counts and extreme monomials only.
        #[arg(long)]
        summary: bool,
    },
    /// Positions, prime factors and segment data of a snake.
    Check {
        #[command(flatten)]
        alg: Algebra,
        snake: String,
    },
    /// The S-system equation of a prime snake, verified.
    Ssystem {
        #[command(flatten)]
        alg: Algebra,
        snake: String,
        #[arg(long, value_enum, default_value = "dominant")]
        method: MethodArg,
        /// Also check the identity of classical characters.
        #[arg(long)]
        classical: bool,
    },
    /// Runs a mutation sequence file from the initial seed.
    Mutate {
        #[command(flatten)]
        alg: Algebra,
        /// One step per line, `-` for stdin.
        sequence: PathBuf,
        /// Vertex label `i,t` to read off.
        #[arg(long, value_parser = parse_label, allow_hyphen_values = true)]
        target: (usize, i64),
        #[arg(long)]
        depth: Option<i64>,
        #[arg(long)]
        stability_delta: Option<i64>,
        /// Include the final seed.
        #[arg(long)]
        snapshot: bool,
    },
    /// Builds the mutation sequence of a prime snake and checks the result.
    VerifyHl {
        #[command(flatten)]
        alg: Algebra,
        snake: String,
        #[arg(long)]
        depth: Option<i64>,
        /// Defaults to the guard band.
        #[arg(long)]
        stability_delta: Option<i64>,
    },
    /// Runs every fixture under a file or directory.
    Corpus {
        #[arg(long)]
        fixtures: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] snakechar::Error),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        use snakechar::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Parse(_)) => 2,
            CliError::Core(E::Mismatch(_) | E::InexactDivision(_)) => 1,
            CliError::Core(E::TaintedTarget(_)) | CliError::Io(..) => 4,
            CliError::Core(_) => 3,
        }
    }
}

fn parse_label(s: &str) -> Result<(usize, i64), String> {
    let (i, t) = s.split_once(',').ok_or("expected `i,t`")?;
    Ok((
        i.trim().parse().map_err(|_| format!("bad node `{i}`"))?,
        t.trim().parse().map_err(|_| format!("bad parameter `{t}`"))?,
    ))
}

fn parse_snake(cd: &CartanData, text: &str) -> Result<Snake, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Usage("empty snake".into()));
    }
    Ok(Snake::parse(cd, text)?)
}

/// What a command printed, and whether every check in it passed.
struct Output {
    json: Value,
    text: String,
    passed: bool,
}

fn qchar(alg: &Algebra, text: &str, summary: bool) -> Result<Output, CliError> {
    let cd = alg.cartan()?;
    let (s, c) = match parse_snake(&cd, text) {
        Ok(s) => {
            let c = snake_qchar(&s);
            (s.to_string(), c)
        }
        Err(CliError::Core(snakechar::Error::Domain(why))) => {
            // a snake on the odd sublattice is a shift of one on X
            let m: Monomial = text.parse()?;
            let s =
                Snake::from_monomial(&cd, &m.shift(-1)).map_err(|_| CliError::Core(snakechar::Error::Domain(why)))?;
            (m.to_string(), snake_qchar(&s).shift(1))
        }
        Err(e) => return Err(e),
    };
    let tsa = tsa_report(&c);
    let highest = c.leading().map(|(m, _)| m.to_string()).unwrap_or_default();
    let lowest = c.trailing().map(|(m, _)| m.to_string()).unwrap_or_default();
    let (dom, anti) = (c.dominant_terms().len(), c.anti_dominant_terms().len());
    let mut json = json!({
        "snake": s,
        "terms": c.len(),
        "highest": highest,
        "lowest": lowest,
        "dominant": dom,
        "anti_dominant": anti,
        "thin": tsa.thin,
    });
    let text = if summary {
        format!(
            "terms: {}\nhighest: {highest}\nlowest: {lowest}\ndominant: {dom}\nanti-dominant: {anti}\nthin: {}",
            c.len(),
            tsa.thin
        )
    } else {
        json["character"] = Value::String(c.to_string());
        c.to_string()
    };
    Ok(Output {
        json,
        text,
        passed: true,
    })
}

fn check(alg: &Algebra, text: &str) -> Result<Output, CliError> {
    let cd = alg.cartan()?;
    let s = parse_snake(&cd, text)?;
    let mut pairs = Vec::new();
    for w in s.points().windows(2) {
        pairs.push(json!({ "from": w[0].to_string(), "to": w[1].to_string(), "position": format!("{:?}", position_class(&cd, w[0], w[1])?) }));
    }
    let factors: Vec<Value> = prime_factorize(&s)
        .iter()
        .map(|f| json!({ "snake": f.to_string(), "spec": snake_to_spec(f).map(|sp| sp.to_string()).ok() }))
        .collect();
    let prime = s.is_prime();
    let mut text = format!("snake: {s}\nprime: {prime}\n");
    for p in &pairs {
        text += &format!(
            "  {} {}: {}\n",
            p["from"].as_str().unwrap(),
            p["to"].as_str().unwrap(),
            p["position"].as_str().unwrap()
        );
    }
    for f in &factors {
        text += &format!("factor [{}]", f["snake"].as_str().unwrap());
        if let Some(sp) = f["spec"].as_str() {
            text += &format!(" = {sp}");
        }
        text.push('\n');
    }
    let json = json!({ "snake": s.to_string(), "prime": prime, "pairs": pairs, "factors": factors });
    Ok(Output {
        json,
        text: text.trim_end().into(),
        passed: true,
    })
}

fn ssystem(alg: &Algebra, text: &str, method: Method, classical: bool) -> Result<Output, CliError> {
    let cd = alg.cartan()?;
    let s = parse_snake(&cd, text)?;
    if !s.is_prime() {
        let f: Vec<String> = prime_factorize(&s).iter().map(|f| format!("[{f}]")).collect();
        return Err(CliError::Core(snakechar::Error::NotPrime(format!(
            "{s}; prime factors {}",
            f.join("")
        ))));
    }
    let eq = s_system_equation(&s)?;
    let result = verify_equation_with(&eq, method);
    let classical = classical.then(|| verify_classical(&eq).is_ok());
    let passed = result.is_ok() && classical != Some(false);
    let mut text = format!("{eq}\nrow: {}\n", eq.row);
    match &result {
        Ok(r) => text += &format!("terms compared: {} {} {}\n", r.lhs_terms, r.rhs34_terms, r.rhs56_terms),
        Err(e) => text += &format!("{e}\n"),
    }
    if let Some(c) = classical {
        text += &format!("classical: {}\n", if c { "PASS" } else { "FAIL" });
    }
    text += if passed { "PASS" } else { "FAIL" };
    let json = json!({
        "equation": eq.to_string(),
        "factors": eq.snakes().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        "row": eq.row,
        "method": format!("{method:?}").to_lowercase(),
        "holds": result.is_ok(),
        "classical": classical,
        "passed": passed,
    });
    Ok(Output { json, text, passed })
}

fn module_json(m: &Module) -> Value {
    match m {
        Module::Snake(s) => json!({ "snake": s.to_string() }),
        Module::Character(c) => snakechar::cluster::digest(c),
    }
}

fn run_json(r: &RunReport) -> Value {
    json!({
        "module": module_json(&r.module),
        "depth": r.depth,
        "mutations": r.mutations,
        "exact_divisions": r.stats.exact_divisions,
        "snake_quotients": r.stats.snake_quotients,
        "initial_variables": r.stats.initial,
        "warnings": r.warnings,
    })
}

fn module_text(m: &Module) -> String {
    match m {
        Module::Snake(s) => format!("L({s})"),
        Module::Character(c) => format!("character with {} terms", c.len()),
    }
}

fn tainted(e: snakechar::Error, depth: i64, cd: &CartanData) -> CliError {
    match e {
        snakechar::Error::TaintedTarget(m) => CliError::Core(snakechar::Error::TaintedTarget(format!(
            "{m}; try --depth {}",
            depth + guard_band(cd)
        ))),
        e => e.into(),
    }
}

fn mutate(
    alg: &Algebra,
    path: &Path,
    target: (usize, i64),
    depth: Option<i64>,
    delta: Option<i64>,
    snapshot: bool,
) -> Result<Output, CliError> {
    let cd = alg.cartan()?;
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| CliError::Io("stdin".into(), e))?
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?
    };
    let steps = parse_sequence(&text)?;
    let depth = depth.unwrap_or(-target.1 + guard_band(&cd));
    let mut seed = Seed::initial(&cd, depth)?;
    let run = seed.run(&steps, target).map_err(|e| tainted(e, depth, &cd))?;
    let mut json = json!({ "steps": steps.len(), "target": [target.0, target.1], "run": run_json(&run) });
    let mut out = format!(
        "{} steps, {} mutations\n({}, {}): {}\nexact exchanges: {}",
        steps.len(),
        run.mutations,
        target.0,
        target.1,
        module_text(&run.module),
        run.stats.exact_divisions
    );
    let mut passed = true;
    if let Some(dd) = delta {
        let again = Seed::initial(&cd, depth + dd)?.run(&steps, target)?;
        let stable = again.module == run.module;
        passed = stable;
        json["stable"] = json!(stable);
        out += &format!("\nstable at depth {}: {stable}", depth + dd);
    }
    if snapshot {
        json["seed"] = seed.snapshot();
        out += &format!("\n{}", serde_json::to_string_pretty(&json["seed"]).unwrap());
    }
    Ok(Output {
        json,
        text: out,
        passed,
    })
}

fn verify(cd: &CartanData, s: &Snake, depth: Option<i64>, delta: Option<i64>) -> Result<Output, CliError> {
    let depth = depth.unwrap_or_else(|| default_depth(s));
    let delta = delta.unwrap_or_else(|| guard_band(cd));
    let r = verify_hl(s, Some(depth), Some(delta)).map_err(|e| tainted(e, depth, cd))?;
    let steps: Vec<String> = r.steps.iter().map(|x| x.to_string()).collect();
    let (stable_depth, stable) = r.stability.unwrap_or((depth, true));
    let passed = r.passed();
    let json = json!({
        "snake": s.to_string(),
        "sequence": steps,
        "target": [r.target.0, r.target.1],
        "run": run_json(&r.run),
        "matches": r.matches,
        "stability": { "depth": stable_depth, "stable": stable },
        "passed": passed,
    });
    let text = format!(
        "{}\n{} steps, {} mutations, {} exact exchanges\n({}, {}): {}\nstable at depth {stable_depth}: {stable}\n{}",
        steps.join("\n"),
        steps.len(),
        r.run.mutations,
        r.run.stats.exact_divisions,
        r.target.0,
        r.target.1,
        module_text(&r.run.module),
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(Output { json, text, passed })
}

enum Job {
    Equation(CartanData, String),
    Hl(CartanData, String),
}

fn fixture_files(root: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |e| CliError::Io(root.display().to_string(), e);
    if root.is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(root).map_err(io)? {
        let p = entry.map_err(io)?.path();
        if p.extension().is_some_and(|e| e == "txt") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn jobs(path: &Path) -> Result<Vec<(String, Job)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
    let mut cd = None;
    let mut out = Vec::new();
    for (x, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(h) = parse_type_header(line) {
                cd = Some(h?);
            }
            continue;
        }
        let cd = cd
            .clone()
            .ok_or_else(|| CliError::Usage(format!("{name}:{}: no type header", x + 1)))?;
        let id = format!("{name}:{}", x + 1);
        if line.contains('=') {
            out.push((id, Job::Equation(cd, line.into())));
        } else {
            out.push((id, Job::Hl(cd, line.into())));
        }
    }
    Ok(out)
}

fn run_job(job: &Job) -> Result<String, String> {
    match job {
        Job::Equation(cd, line) => {
            let eq = parse_equation(cd, line).map_err(|e| e.to_string())?;
            eq.verify(Method::Dominant).map_err(|e| e.to_string())?;
            Ok(eq.to_string())
        }
        Job::Hl(cd, line) => {
            let s = Snake::parse(cd, line).map_err(|e| e.to_string())?;
            let o = verify(cd, &s, None, None).map_err(|e| e.to_string())?;
            if o.passed {
                Ok(format!("verify-hl {s}"))
            } else {
                Err(format!("verify-hl {s}: {}", o.json["run"]["module"]))
            }
        }
    }
}

fn corpus(root: &Path) -> Result<Output, CliError> {
    let mut all = Vec::new();
    for f in fixture_files(root)? {
        all.extend(jobs(&f)?);
    }
    if all.is_empty() {
        return Err(CliError::Usage(format!("no fixtures under {}", root.display())));
    }
    let results: Vec<(String, Result<String, String>)> =
        all.par_iter().map(|(id, job)| (id.clone(), run_job(job))).collect();
    let failed = results.iter().filter(|r| r.1.is_err()).count();
    let mut text = String::new();
    let mut rows = Vec::new();
    for (id, r) in &results {
        let (status, what) = match r {
            Ok(w) => ("PASS", w),
            Err(w) => ("FAIL", w),
        };
        text += &format!("{status} {id} {what}\n");
        rows.push(json!({ "fixture": id, "passed": r.is_ok(), "detail": what }));
    }
    text += &format!("{} fixtures, {failed} failed", results.len());
    let json = json!({ "fixtures": rows, "total": results.len(), "failed": failed });
    Ok(Output {
        json,
        text,
        passed: failed == 0,
    })
}

fn dispatch(cli: &Cli) -> Result<Output, CliError> {
    match &cli.cmd {
        Cmd::Qchar { alg, snake, summary } => qchar(alg, snake, *summary),
        Cmd::Check { alg, snake } => check(alg, snake),
        Cmd::Ssystem {
            alg,
            snake,
            method,
            classical,
        } => ssystem(alg, snake, (*method).into(), *classical),
        Cmd::Mutate {
            alg,
            sequence,
            target,
            depth,
            stability_delta,
            snapshot,
        } => mutate(alg, sequence, *target, *depth, *stability_delta, *snapshot),
        Cmd::VerifyHl {
            alg,
            snake,
            depth,
            stability_delta,
        } => {
            let cd = alg.cartan()?;
            let s = parse_snake(&cd, snake)?;
            if !s.is_prime() {
                return Err(snakechar::Error::NotPrime(s.to_string()).into());
            }
            verify(&cd, &s, *depth, *stability_delta)
        }
        Cmd::Corpus { fixtures } => corpus(fixtures),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    match dispatch(&cli) {
        Ok(out) => {
            let body = if cli.json {
                serde_json::to_string_pretty(&out.json).unwrap()
            } else {
                out.text
            };
            let _ = writeln!(std::io::stdout().lock(), "{body}");
            ExitCode::from(if out.passed { 0 } else { 1 })
        }
        Err(e) => {
            if cli.json {
                println!("{}", json!({ "error": e.to_string(), "code": e.code() }));
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}
