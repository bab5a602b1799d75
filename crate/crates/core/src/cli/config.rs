//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments run to end of line
//! problem = inline        # or a builtin name
//! f1 = 0.5*(x1^2 + x2^2)
//! f2 = 0.5*((x1-1)^2 + x2^2)
//! x0 = 2, 2
//! beta = 0.5
//! sigma = 0.25
//! eps_critical = 1e-8
//! max_iter = 10000
//! output = runs/quad
//! x_tilde = 0.5, 0
//! ```
//!
//! Every value is validated while parsing; errors carry a one-based line and
//! column.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::expr::Expr;
use crate::objective::MultiObjective;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Inline objective `x ↦ (f1(x), …, fm(x))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InlineProblem {
    pub n: usize,
    pub sources: Vec<String>,
    #[serde(skip)]
    pub exprs: Vec<Expr>,
}

impl InlineProblem {
    /// Derivative-free objective; Jacobians come from central differences.
    pub fn to_objective(&self) -> MultiObjective {
        let exprs = Arc::new(self.exprs.clone());
        MultiObjective::derivative_free(self.n, self.exprs.len(), move |x| {
            exprs.iter().map(|e| e.eval(x)).collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ProblemSource {
    Builtin(String),
    Inline(InlineProblem),
}

impl ProblemSource {
    pub fn name(&self) -> &str {
        match self {
            ProblemSource::Builtin(name) => name,
            ProblemSource::Inline(_) => "inline",
        }
    }
}

/// A parsed configuration; absent keys are `None` and fall back to flags or
/// defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunConfigFile {
    pub problem: Option<ProblemSource>,
    pub x0: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
    pub eps_critical: Option<f64>,
    pub max_iter: Option<usize>,
    pub output: Option<String>,
    pub x_tilde: Option<Vec<f64>>,
}

struct Entry<'a> {
    line: usize,
    key_col: usize,
    value_col: usize,
    value: &'a str,
}

impl Entry<'_> {
    fn err(&self, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.line,
            column: self.value_col,
            message: message.into(),
        }
    }
}

const KEYS: [&str; 8] = [
    "problem",
    "x0",
    "beta",
    "sigma",
    "eps_critical",
    "max_iter",
    "output",
    "x_tilde",
];

fn is_function_key(key: &str) -> Option<usize> {
    let idx = key.strip_prefix('f')?;
    if idx.is_empty() || !idx.bytes().all(|b| b.is_ascii_digit()) || idx.starts_with('0') {
        return None;
    }
    idx.parse().ok()
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        let mut functions: BTreeMap<usize, Entry> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let key_col = content.len() - content.trim_start().len() + 1;
            let Some(eq) = content.find('=') else {
                return Err(ConfigError {
                    line,
                    column: key_col,
                    message: "expected `key = value`".to_string(),
                });
            };
            let key = content[..eq].trim();
            let after = &content[eq + 1..];
            let value = after.trim();
            let value_col = eq + 2 + (after.len() - after.trim_start().len());
            let entry = Entry {
                line,
                key_col,
                value_col,
                value,
            };
            let duplicate = |prev: &Entry| ConfigError {
                line,
                column: key_col,
                message: format!("duplicate key `{key}` (first set on line {})", prev.line),
            };
            if let Some(idx) = is_function_key(key) {
                if let Some(prev) = functions.get(&idx) {
                    return Err(duplicate(prev));
                }
                functions.insert(idx, entry);
            } else if KEYS.contains(&key) {
                if let Some(prev) = entries.get(key) {
                    return Err(duplicate(prev));
                }
                entries.insert(key.to_string(), entry);
            } else {
                return Err(ConfigError {
                    line,
                    column: key_col,
                    message: format!("unknown key `{key}`"),
                });
            }
        }

        let mut cfg = RunConfigFile::default();
        if let Some(e) = entries.get("x0") {
            cfg.x0 = Some(parse_vector(e)?);
        }
        if let Some(e) = entries.get("x_tilde") {
            cfg.x_tilde = Some(parse_vector(e)?);
        }
        if let Some(e) = entries.get("beta") {
            let b = parse_real(e)?;
            check_beta(b).map_err(|m| e.err(m))?;
            cfg.beta = Some(b);
        }
        if let Some(e) = entries.get("sigma") {
            let s = parse_real(e)?;
            check_sigma(s).map_err(|m| e.err(m))?;
            cfg.sigma = Some(s);
        }
        if let Some(e) = entries.get("eps_critical") {
            let s = parse_real(e)?;
            check_eps(s).map_err(|m| e.err(m))?;
            cfg.eps_critical = Some(s);
        }
        if let Some(e) = entries.get("max_iter") {
            cfg.max_iter = Some(
                e.value
                    .parse()
                    .map_err(|_| e.err(format!("expected a non-negative integer, got `{}`", e.value)))?,
            );
        }
        if let Some(e) = entries.get("output") {
            if e.value.is_empty() {
                return Err(e.err("empty output prefix"));
            }
            cfg.output = Some(e.value.to_string());
        }

        match entries.get("problem") {
            Some(e) if e.value == "inline" => {
                cfg.problem = Some(ProblemSource::Inline(parse_inline(e, &functions, cfg.x0.as_deref())?));
            }
            Some(e) => {
                if let Some(f) = functions.values().next() {
                    return Err(ConfigError {
                        line: f.line,
                        column: f.key_col,
                        message: "function definitions require `problem = inline`".to_string(),
                    });
                }
                if e.value.is_empty() {
                    return Err(e.err("empty problem name"));
                }
                cfg.problem = Some(ProblemSource::Builtin(e.value.to_string()));
            }
            None => {
                if let Some(f) = functions.values().next() {
                    return Err(ConfigError {
                        line: f.line,
                        column: f.key_col,
                        message: "function definitions require `problem = inline`".to_string(),
                    });
                }
            }
        }
        Ok(cfg)
    }
}

fn parse_inline(
    problem: &Entry,
    functions: &BTreeMap<usize, Entry>,
    x0: Option<&[f64]>,
) -> Result<InlineProblem, ConfigError> {
    if functions.is_empty() {
        return Err(problem.err("inline problem needs at least `f1 = ...`"));
    }
    for (expected, (idx, e)) in (1..).zip(functions) {
        if *idx != expected {
            return Err(ConfigError {
                line: e.line,
                column: e.key_col,
                message: format!("function keys must be f1..fm without gaps; missing f{expected}"),
            });
        }
    }
    let Some(x0) = x0 else {
        return Err(problem.err("inline problem needs `x0` to fix the dimension"));
    };
    let mut exprs = Vec::with_capacity(functions.len());
    let mut sources = Vec::with_capacity(functions.len());
    for e in functions.values() {
        let expr = Expr::parse(e.value).map_err(|err| ConfigError {
            line: e.line,
            column: e.value_col + err.offset,
            message: err.message,
        })?;
        if expr.arity() > x0.len() {
            return Err(e.err(format!(
                "expression uses x{} but x0 has dimension {}",
                expr.arity(),
                x0.len()
            )));
        }
        exprs.push(expr);
        sources.push(e.value.to_string());
    }
    Ok(InlineProblem {
        n: x0.len(),
        sources,
        exprs,
    })
}

fn parse_real(e: &Entry) -> Result<f64, ConfigError> {
    match e.value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(e.err(format!("expected a finite number, got `{}`", e.value))),
    }
}

fn parse_vector(e: &Entry) -> Result<Vec<f64>, ConfigError> {
    parse_list(e.value).map_err(|(offset, message)| ConfigError {
        line: e.line,
        column: e.value_col + offset,
        message,
    })
}

/// Comma-separated finite reals; errors carry a byte offset.
pub fn parse_list(s: &str) -> Result<Vec<f64>, (usize, String)> {
    let mut out = Vec::new();
    let mut offset = 0;
    for part in s.split(',') {
        let lead = part.len() - part.trim_start().len();
        let item = part.trim();
        match item.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => return Err((offset + lead, format!("expected a finite number, got `{item}`"))),
        }
        offset += part.len() + 1;
    }
    Ok(out)
}

pub fn check_beta(b: f64) -> Result<(), String> {
    if b > 0.0 && b < 1.0 {
        Ok(())
    } else {
        Err(format!("beta must lie in (0, 1), got {b}"))
    }
}

pub fn check_sigma(s: f64) -> Result<(), String> {
    if (0.0..1.0).contains(&s) {
        Ok(())
    } else {
        Err(format!("sigma must lie in [0, 1), got {s}"))
    }
}

pub fn check_eps(e: f64) -> Result<(), String> {
    if e > 0.0 && e.is_finite() {
        Ok(())
    } else {
        Err(format!("eps_critical must be positive, got {e}"))
    }
}
