//! TOML scene files.
//!
//! ```toml
//! id = "r4_remark1"
//! dim = 4
//! box = [[-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0]]
//! notes = "..."
//! nearly_kahler = false
//! J = [["0", "-1", "0", "0"], ["1", "0", "0", "0"], ...]   # row k, column i: J^k_i
//! h = [["1", "0", "0", "0"], ...]                          # optional
//!
//! [forms.omega]
//! degree = 2
//! terms = [{ idx = [1, 2], expr = "exp(x1*x3)" }, { idx = [3, 4], expr = "1" }]
//! ```
//!
//! Form indices are 1-based.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Scene;
use crate::error::{Error, Result};
use crate::exprlang::{parse, Expr, ExprError};
use crate::fields::{ChartDomain, FieldK, JField, MetricField};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    id: String,
    dim: usize,
    #[serde(rename = "box")]
    bounds: Vec<[f64; 2]>,
    #[serde(default)]
    notes: String,
    #[serde(default)]
    nearly_kahler: bool,
    #[serde(rename = "J")]
    j: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    forms: BTreeMap<String, FormSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormSpec {
    degree: usize,
    terms: Vec<Term>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Term {
    idx: Vec<usize>,
    expr: String,
}

fn line_col(text: &str, byte: usize) -> (usize, usize) {
    let byte = byte.min(text.len());
    let before = &text[..byte];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(byte, |nl| byte - nl - 1) + 1;
    (line, col)
}

fn parse_error(text: &str, message: String, byte: Option<usize>) -> Error {
    Error::SceneParse {
        message,
        location: byte.map(|b| line_col(text, b)),
    }
}

fn expr_offset(e: &ExprError) -> usize {
    match e {
        ExprError::Syntax { offset, .. }
        | ExprError::UnknownIdentifier { offset, .. }
        | ExprError::VariableOutOfRange { offset, .. } => *offset,
        _ => 0,
    }
}

struct Ctx<'a> {
    text: &'a str,
    cursor: usize,
}

impl Ctx<'_> {
    /// Parses an expression string, locating errors in the source text.
    /// Expressions are searched for in file order so repeated strings map
    /// to the right occurrence as long as fields appear in schema order.
    fn expr(&mut self, src: &str, dim: usize, what: &str) -> Result<Expr> {
        let quoted = [format!("\"{src}\""), format!("'{src}'")];
        let found = quoted
            .iter()
            .filter_map(|q| self.text[self.cursor..].find(q.as_str()).map(|i| self.cursor + i + 1))
            .min()
            .or_else(|| quoted.iter().filter_map(|q| self.text.find(q.as_str()).map(|i| i + 1)).min());
        if let Some(pos) = found {
            self.cursor = pos;
        }
        parse(src, dim).map_err(|e| {
            parse_error(
                self.text,
                format!("{what}: {e}"),
                found.map(|p| p + expr_offset(&e)),
            )
        })
    }
}

fn matrix(ctx: &mut Ctx, rows: &[Vec<String>], n: usize, what: &str) -> Result<Vec<Expr>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(parse_error(
            ctx.text,
            format!("`{what}` must be a {n}x{n} matrix of expression strings"),
            ctx.text.find(&format!("{what} =")),
        ));
    }
    let mut out = Vec::with_capacity(n * n);
    for (a, row) in rows.iter().enumerate() {
        for (b, s) in row.iter().enumerate() {
            out.push(ctx.expr(s, n, &format!("{what}[{}][{}]", a + 1, b + 1))?);
        }
    }
    Ok(out)
}

/// Parses scene text and runs the load-time checks.
pub fn parse_scene(text: &str) -> Result<Scene> {
    let file: SceneFile = toml::from_str(text).map_err(|e| {
        parse_error(text, e.message().to_string(), e.span().map(|s| s.start))
    })?;
    let n = file.dim;
    if n == 0 || n % 2 != 0 || n > crate::pointwise::forms::MAX_DIM {
        return Err(parse_error(
            text,
            format!("dim must be even and at most {}, got {n}", crate::pointwise::forms::MAX_DIM),
            text.find("dim"),
        ));
    }
    if file.bounds.len() != n {
        return Err(parse_error(
            text,
            format!("box has {} intervals, expected {n}", file.bounds.len()),
            text.find("box"),
        ));
    }
    let chart = ChartDomain::new(file.bounds.iter().map(|b| (b[0], b[1])).collect())
        .map_err(|e| parse_error(text, e.to_string(), text.find("box")))?;
    let mut ctx = Ctx { text, cursor: 0 };
    let j = JField::new(chart.clone(), matrix(&mut ctx, &file.j, n, "J")?)?;
    let h = match &file.h {
        Some(rows) => {
            let entries = matrix(&mut ctx, rows, n, "h")?;
            Some(MetricField::new(chart.clone(), entries).map_err(|e| {
                parse_error(text, e.to_string(), text.find("h ="))
            })?)
        }
        None => None,
    };
    let mut forms = BTreeMap::new();
    for (name, spec) in &file.forms {
        let mut terms = Vec::with_capacity(spec.terms.len());
        for t in &spec.terms {
            let here = text.find(&format!("forms.{name}"));
            if t.idx.len() != spec.degree || t.idx.iter().any(|&i| i == 0 || i > n) {
                return Err(parse_error(
                    text,
                    format!("form `{name}`: index tuple {:?} is not {} indices in 1..={n}", t.idx, spec.degree),
                    here,
                ));
            }
            let e = ctx.expr(&t.expr, n, &format!("form `{name}`"))?;
            terms.push((t.idx.iter().map(|i| i - 1).collect(), e));
        }
        let field = FieldK::from_terms(chart.clone(), spec.degree, terms)
            .map_err(|e| parse_error(text, format!("form `{name}`: {e}"), text.find(&format!("forms.{name}"))))?;
        forms.insert(name.clone(), field);
    }
    let scene = Scene {
        id: file.id,
        j,
        h,
        forms,
        notes: file.notes,
        nearly_kahler: file.nearly_kahler,
    };
    scene.validate()?;
    Ok(scene)
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path)?;
    parse_scene(&text)
}

fn rows(entries: &[Expr], n: usize) -> Vec<Vec<String>> {
    (0..n)
        .map(|a| (0..n).map(|b| entries[a * n + b].to_string()).collect())
        .collect()
}

pub fn scene_to_toml(scene: &Scene) -> String {
    let n = scene.dim();
    let file = SceneFile {
        id: scene.id.clone(),
        dim: n,
        bounds: scene.chart().bounds().iter().map(|&(a, b)| [a, b]).collect(),
        notes: scene.notes.clone(),
        nearly_kahler: scene.nearly_kahler,
        j: rows(scene.j.entries(), n),
        h: scene.h.as_ref().map(|h| rows(h.entries(), n)),
        forms: scene
            .forms
            .iter()
            .map(|(name, f)| {
                let terms = f
                    .terms()
                    .into_iter()
                    .map(|(idx, e)| Term {
                        idx: idx.iter().map(|i| i + 1).collect(),
                        expr: e.to_string(),
                    })
                    .collect();
                (name.clone(), FormSpec { degree: f.degree(), terms })
            })
            .collect(),
    };
    toml::to_string(&file).expect("scene serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin, BUILTIN};

    #[test]
    fn builtins_round_trip() {
        for name in BUILTIN {
            let s = builtin(name).unwrap();
            let text = scene_to_toml(&s);
            let back = parse_scene(&text).unwrap();
            assert_eq!(back.j, s.j, "{name}");
            assert_eq!(back.h, s.h, "{name}");
            assert_eq!(back.forms, s.forms, "{name}");
            assert_eq!(back.id, s.id);
        }
    }

    const GOOD_HEAD: &str = "id = \"t\"\ndim = 2\nbox = [[-1.0, 1.0], [-1.0, 1.0]]\n";

    #[test]
    fn located_expression_error() {
        let text = format!("{GOOD_HEAD}J = [[\"0\", \"-1\"], [\"1\", \"x1 + * 2\"]]\n");
        match parse_scene(&text) {
            Err(Error::SceneParse { location: Some((line, col)), .. }) => {
                assert_eq!(line, 4);
                // opening quote of the expression, plus the offset inside it
                let start = text.lines().nth(3).unwrap().find("x1 + *").unwrap() + 1;
                assert_eq!(col, start + 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn located_toml_error() {
        let text = format!("{GOOD_HEAD}J = [[\"0\", \"-1\"], [\"1\" \"0\"]]\n");
        assert!(matches!(parse_scene(&text), Err(Error::SceneParse { location: Some((4, _)), .. })));
    }

    #[test]
    fn bad_square_names_worst_point() {
        let text = format!("{GOOD_HEAD}J = [[\"0\", \"-1\"], [\"1\", \"x1\"]]\n");
        match parse_scene(&text) {
            Err(Error::SceneInvariant { check, point, residual }) => {
                assert!(check.contains("J^2"));
                assert_eq!(point.len(), 2);
                assert!(residual > 0.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
