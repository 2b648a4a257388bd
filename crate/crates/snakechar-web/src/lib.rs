//! Browser bindings: each export takes the algebra and a snake in `i_k`
//! notation and returns a JSON string.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use snakechar::cluster::{fundamental_segments, snake_mutation_sequence, verify_hl, Module};
use snakechar::snake::prime_factorize;
use snakechar::ssystem::{s_system_equation, verify_equation_with, Method};
use snakechar::{snake_qchar, tsa_report, CartanData, Snake};

const MAX_POINTS: usize = 8;
const SHOWN_TERMS: usize = 200;

fn snake(kind: &str, n: usize, text: &str) -> Result<Snake, String> {
    let cd = CartanData::new(kind.trim().parse().map_err(|e: snakechar::Error| e.to_string())?, n)
        .map_err(|e| e.to_string())?;
    if text.trim().is_empty() {
        return Err("enter a snake such as 3_-3 3_-1".into());
    }
    let s = Snake::parse(&cd, text).map_err(|e| e.to_string())?;
    if s.len() > MAX_POINTS {
        return Err(format!("at most {MAX_POINTS} points here"));
    }
    Ok(s)
}

pub fn qchar_value(kind: &str, n: usize, text: &str) -> Result<Value, String> {
    let s = snake(kind, n, text)?;
    let c = snake_qchar(&s);
    let tsa = tsa_report(&c);
    let rendered = c.to_string();
    let terms: Vec<&str> = rendered.split(" + ").take(SHOWN_TERMS).collect();
    let factors: Vec<String> = prime_factorize(&s).iter().map(|f| f.to_string()).collect();
    Ok(json!({
        "snake": s.to_string(),
        "terms": c.len(),
        "shown": terms,
        "thin": tsa.thin,
        "special": tsa.special,
        "anti_special": tsa.anti_special,
        "prime": s.is_prime(),
        "factors": factors,
    }))
}

pub fn ssystem_value(kind: &str, n: usize, text: &str) -> Result<Value, String> {
    let s = snake(kind, n, text)?;
    let eq = s_system_equation(&s).map_err(|e| e.to_string())?;
    let check = verify_equation_with(&eq, Method::Dominant);
    Ok(json!({
        "equation": eq.to_string(),
        "row": eq.row,
        "holds": check.is_ok(),
        "detail": match &check {
            Ok(r) => format!("dominant terms compared: {} = {} + {}", r.lhs_terms, r.rhs34_terms, r.rhs56_terms),
            Err(e) => e.to_string(),
        },
    }))
}

pub fn mutation_value(kind: &str, n: usize, text: &str, run: bool) -> Result<Value, String> {
    let s = snake(kind, n, text)?;
    let fs = fundamental_segments(&s).map_err(|e| e.to_string())?;
    let (steps, target) = snake_mutation_sequence(&s).map_err(|e| e.to_string())?;
    let mut distinguished: Vec<String> = Vec::new();
    for f in &fs {
        let d = f.distinguished().to_string();
        if !distinguished.contains(&d) {
            distinguished.push(d);
        }
    }
    let mut out = json!({
        "segments": fs.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        "distinguished": distinguished,
        "sequence": steps.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        "target": [target.0, target.1],
    });
    if run {
        let r = verify_hl(&s, None, None).map_err(|e| e.to_string())?;
        out["result"] = json!({
            "module": match &r.run.module {
                Module::Snake(t) => format!("L({t})"),
                Module::Character(c) => format!("a character with {} terms", c.len()),
            },
            "matches": r.matches,
            "mutations": r.run.mutations,
            "exchanges": r.run.stats.exact_divisions,
        });
    }
    Ok(out)
}

/// q-character of a snake module, with the first terms.
#[wasm_bindgen]
pub fn qchar(kind: &str, n: usize, snake: &str) -> Result<String, String> {
    qchar_value(kind, n, snake).map(|v| v.to_string())
}

/// The S-system equation of a prime snake, checked.
#[wasm_bindgen]
pub fn ssystem(kind: &str, n: usize, snake: &str) -> Result<String, String> {
    ssystem_value(kind, n, snake).map(|v| v.to_string())
}

/// Fundamental segments and mutation sequence; `run` also executes it.
#[wasm_bindgen]
pub fn mutation(kind: &str, n: usize, snake: &str, run: bool) -> Result<String, String> {
    mutation_value(kind, n, snake, run).map(|v| v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qchar_of_a_kr_module() {
        let v = qchar_value("A", 3, "3_-3 3_-1").unwrap();
        assert_eq!(v["terms"], 10);
        assert_eq!(v["shown"][0], "3_-3 3_-1");
        assert_eq!(v["thin"], true);
        assert_eq!(v["prime"], true);
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(qchar_value("C", 3, "1_0").is_err());
        assert!(qchar_value("A", 3, "").is_err());
        assert!(qchar_value("A", 3, "3_-3 3_-2").is_err());
    }

    #[test]
    fn ssystem_equation() {
        let v = ssystem_value("B", 4, "4_-10 3_-1").unwrap();
        assert_eq!(v["holds"], true);
        assert!(v["equation"]
            .as_str()
            .unwrap()
            .starts_with("[4_-8 4_-6 3_-1][4_-10 3_-1]"));
    }

    #[test]
    fn mutation_sequence_and_run() {
        let v = mutation_value("A", 5, "2_-12 4_-8 5_-5 5_-3 4_0", true).unwrap();
        assert_eq!(v["distinguished"], json!(["4_0", "5_-5"]));
        assert_eq!(v["sequence"][0], "R L(4,0)");
        assert_eq!(v["target"], json!([2, -12]));
        assert_eq!(v["result"]["matches"], true);
    }
}
