//! Plain-text system files.
//!
//! ```text
//! # damped pendulum
//! name = pendulum
//! dim = 1
//! form = delta-nabla
//! grid = 0, 10, 100      # or: h = 0.1
//! XQ1 = P1/m
//! XP1 = -sin(Q1)
//! H = P1^2/(2*m) - cos(Q1)
//!
//! [constants]
//! m = 1.5
//! ```
//!
//! Keys may appear in any order. `H` is optional and is taken as the
//! closed-form Hamiltonian of the system when present.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::expr::{Expr, ParseContext};
use crate::field::{FieldDef, Form};
use crate::grid::TimeGrid;
use crate::reconstruct::HamiltonianFn;
use crate::system::SystemDef;

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    // 1-based column where the value starts
    col: usize,
    value: String,
}

fn err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn number(e: &Entry, key: &str) -> Result<f64> {
    e.value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
        err(
            e.line,
            format_args!("`{key}` must be a finite number, got `{}`", e.value),
        )
    })
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn load(path: &Path) -> Result<SystemDef> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("system");
    parse_str(&text, stem)
}

/// Parses a system file; `default_name` is used without a `name` key.
pub fn parse_str(text: &str, default_name: &str) -> Result<SystemDef> {
    let mut top: BTreeMap<String, Entry> = BTreeMap::new();
    let mut constants: BTreeMap<String, f64> = BTreeMap::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim();
            if name != "constants" && name != "system" {
                return Err(err(line, format_args!("unknown section `[{name}]`")));
            }
            section = name.to_string();
            continue;
        }
        let eq = content
            .find('=')
            .ok_or_else(|| err(line, format_args!("expected `key = value`, got `{trimmed}`")))?;
        let key = content[..eq].trim();
        let after = &content[eq + 1..];
        let value = after.trim();
        if key.is_empty() || value.is_empty() {
            return Err(err(line, "empty key or value"));
        }
        let lead = after.len() - after.trim_start().len();
        let col = content[..eq + 1 + lead].chars().count() + 1;
        let entry = Entry {
            line,
            col,
            value: value.to_string(),
        };
        if section == "constants" {
            if !is_ident(key) {
                return Err(err(line, format_args!("invalid constant name `{key}`")));
            }
            if constants.insert(key.to_string(), number(&entry, key)?).is_some() {
                return Err(err(line, format_args!("duplicate constant `{key}`")));
            }
        } else if top.insert(key.to_string(), entry).is_some() {
            return Err(err(line, format_args!("duplicate key `{key}`")));
        }
    }

    let get = |key: &str| top.get(key);
    let dim_entry = get("dim").ok_or_else(|| Error::Config("missing key `dim`".into()))?;
    let dim = dim_entry
        .value
        .parse::<usize>()
        .ok()
        .filter(|&d| d >= 1)
        .ok_or_else(|| err(dim_entry.line, "`dim` must be a positive integer"))?;
    let form = match get("form") {
        Some(e) => e.value.parse::<Form>().map_err(|_| {
            err(
                e.line,
                format_args!("`form` must be delta-nabla or delta-delta, got `{}`", e.value),
            )
        })?,
        None => return Err(Error::Config("missing key `form`".into())),
    };

    let grid = match get("grid") {
        Some(e) => {
            let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(err(e.line, "`grid` must be `a, b, N`"));
            }
            let a = number(
                &Entry {
                    value: parts[0].into(),
                    ..e.clone()
                },
                "grid.a",
            )?;
            let b = number(
                &Entry {
                    value: parts[1].into(),
                    ..e.clone()
                },
                "grid.b",
            )?;
            let n = parts[2]
                .parse::<usize>()
                .map_err(|_| err(e.line, "grid N must be an integer"))?;
            Some(TimeGrid::new(a, b, n).map_err(|x| err(e.line, x))?)
        }
        None => None,
    };
    let h = match (get("h"), grid) {
        (Some(e), Some(g)) => {
            let h = number(e, "h")?;
            if (h - g.h()).abs() > 1e-12 * g.h() {
                return Err(err(
                    e.line,
                    format_args!("`h = {h}` disagrees with the grid step {}", g.h()),
                ));
            }
            h
        }
        (Some(e), None) => {
            let h = number(e, "h")?;
            if h <= 0.0 {
                return Err(err(e.line, "`h` must be positive"));
            }
            h
        }
        (None, Some(g)) => g.h(),
        (None, None) => return Err(Error::Config("one of `h` or `grid` is required".into())),
    };
    constants.entry("h".to_string()).or_insert(h);

    let ctx = ParseContext::phase(dim, &constants);
    let parse = |e: &Entry| -> Result<Expr> {
        Expr::parse(&e.value, &ctx.clone().at_line(e.line)).map_err(|x| match x {
            Error::Parse(mut p) => {
                p.pos.col += e.col - 1;
                Error::Parse(p)
            }
            other => other,
        })
    };
    let block = |prefix: &str| -> Result<Vec<Expr>> {
        (1..=dim)
            .map(|i| {
                let key = format!("{prefix}{i}");
                let e = get(&key).ok_or_else(|| Error::Config(format!("missing key `{key}`")))?;
                parse(e)
            })
            .collect()
    };
    let xq = block("XQ")?;
    let xp = block("XP")?;

    let known = ["name", "dim", "form", "grid", "h", "H"];
    for (key, e) in &top {
        let component = ["XQ", "XP"]
            .iter()
            .any(|p| (1..=dim).any(|i| *key == format!("{p}{i}")));
        if !component && !known.contains(&key.as_str()) {
            return Err(err(e.line, format_args!("unknown key `{key}`")));
        }
    }

    let name = get("name")
        .map(|e| e.value.clone())
        .unwrap_or_else(|| default_name.to_string());
    let hamiltonian = match get("H") {
        Some(e) => Some(HamiltonianFn::closed_form(parse(e)?, dim)),
        None => None,
    };
    let field = FieldDef::new(name, form, h, constants, xq, xp)?;
    Ok(SystemDef {
        field,
        hamiltonian,
        grid,
    })
}
