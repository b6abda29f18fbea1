//! Reading and writing the plain-text spacetime document.
//!
//! ```text
//! # comment
//! name = schwarzschild
//! coordinates = t, r, theta, phi
//! signature = 1, -1, -1, -1
//!
//! [parameters]
//! M = 1
//!
//! [domain]
//! r = 2*M, inf
//!
//! [metric]
//! g[t][t] = 1 - 2*M/r
//! g[r][r] = -1/(1 - 2*M/r)
//! ...
//! ```
//!
//! Indices are integers or coordinate names. Optional sections are
//! `[torsion]` (`T[k][i][j]` with `i < j`) and `[frame]` (`e[mu][a]`, plus
//! `orthonormal = true|false`).

use super::{
    CoordinateChart, FrameFieldSpec, Interval, MetricField, SpacetimeSpec, TorsionField,
};
use crate::error::{Error, Result};
use crate::expr::{Expression, Scope};
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Parameters,
    Domain,
    Metric,
    Torsion,
    Frame,
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    key_column: usize,
    value: &'a str,
    value_column: usize,
}

pub fn parse_spacetime_spec(text: &str) -> Result<SpacetimeSpec> {
    parse_spacetime_spec_with(text, &BTreeMap::new())
}

/// Parses a document, replacing the listed parameter values.
pub fn parse_spacetime_spec_with(
    text: &str,
    overrides: &BTreeMap<String, f64>,
) -> Result<SpacetimeSpec> {
    let (sections, seen) = split_sections(text)?;
    let get = |s: Section| sections.iter().filter(move |(sec, _)| *sec == s).map(|(_, e)| e);

    let mut name = None;
    let mut coordinates: Option<Vec<String>> = None;
    let mut signature = None;
    for e in get(Section::Preamble) {
        match e.key {
            "name" => name = Some(e.value.to_string()),
            "coordinates" => {
                coordinates = Some(e.value.split(',').map(|s| s.trim().to_string()).collect())
            }
            "signature" => signature = Some(parse_signature(e)?),
            other => {
                return Err(syntax(e.line, e.key_column, format!("unknown key `{other}`")));
            }
        }
    }
    let name = name.ok_or_else(|| Error::InvalidSpec("missing `name`".into()))?;
    let coordinates = coordinates.ok_or_else(|| Error::InvalidSpec("missing `coordinates`".into()))?;
    let signature: Vec<i8> = signature.ok_or_else(|| Error::InvalidSpec("missing `signature`".into()))?;
    let mut chart = CoordinateChart::new(coordinates)?;
    let n = chart.dimension();
    if signature.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "signature has {} entries, coordinates has {n}",
            signature.len()
        )));
    }

    let mut parameters = BTreeMap::new();
    for e in get(Section::Parameters) {
        if !is_identifier(e.key) {
            return Err(syntax(e.line, e.key_column, format!("invalid parameter name `{}`", e.key)));
        }
        if chart.index_of(e.key).is_some() || parameters.contains_key(e.key) {
            return Err(syntax(e.line, e.key_column, format!("`{}` is already defined", e.key)));
        }
        let value = match overrides.get(e.key) {
            Some(v) => *v,
            None => constant(e.value, e.line, e.value_column, &parameters)?,
        };
        parameters.insert(e.key.to_string(), value);
    }
    if let Some(unknown) = overrides.keys().find(|k| !parameters.contains_key(*k)) {
        return Err(Error::InvalidArgument(format!(
            "spacetime `{name}` has no parameter `{unknown}`"
        )));
    }

    for e in get(Section::Domain) {
        let idx = chart
            .index_of(e.key)
            .ok_or_else(|| unknown(e.key, e.line, e.key_column))?;
        let bounds: Vec<&str> = e.value.split(',').collect();
        if bounds.len() != 2 {
            return Err(syntax(e.line, e.value_column, "domain needs `lower, upper`".into()));
        }
        let lo = bound(bounds[0], e.line, e.value_column, &parameters)?;
        let hi_column = e.value_column + bounds[0].chars().count() + 1;
        let hi = bound(bounds[1], e.line, hi_column, &parameters)?;
        if !(lo < hi) {
            return Err(syntax(e.line, e.value_column, format!("empty interval ({lo}, {hi})")));
        }
        chart = chart.with_domain(idx, Interval { lo, hi });
    }

    let scope = Scope {
        coordinates: chart.names(),
        parameters: &parameters,
    };

    let mut metric: Vec<Option<Expression>> = vec![None; n * n];
    for e in get(Section::Metric) {
        let idx = parse_indices(e, "g", 2, &chart)?;
        let (i, j) = (idx[0], idx[1]);
        let expr = Expression::parse_at(e.value, scope, e.line, e.value_column)?;
        if metric[i * n + j].is_some() {
            return Err(syntax(e.line, e.key_column, format!("duplicate entry g[{i}][{j}]")));
        }
        if let Some(other) = &metric[j * n + i] {
            if *other != expr {
                return Err(Error::MetricNotSymmetric { i: i.min(j), j: i.max(j) });
            }
        }
        metric[i * n + j] = Some(expr);
    }
    if !seen.contains(&Section::Metric) {
        return Err(Error::InvalidSpec("missing [metric] section".into()));
    }
    let mut components = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let e = metric[i * n + j]
                .clone()
                .or_else(|| metric[j * n + i].clone())
                .unwrap_or_else(Expression::zero);
            components.push(e);
        }
    }
    let metric = MetricField::new(components, signature)?;

    let torsion = if seen.contains(&Section::Torsion) {
        let mut entries: Vec<((usize, usize, usize), Expression)> = Vec::new();
        for e in get(Section::Torsion) {
            let idx = parse_indices(e, "T", 3, &chart)?;
            let (k, i, j) = (idx[0], idx[1], idx[2]);
            if i >= j {
                return Err(syntax(
                    e.line,
                    e.key_column,
                    format!("torsion entries need i < j, got T[{k}][{i}][{j}]"),
                ));
            }
            if entries.iter().any(|(key, _)| *key == (k, i, j)) {
                return Err(syntax(e.line, e.key_column, format!("duplicate entry T[{k}][{i}][{j}]")));
            }
            let expr = Expression::parse_at(e.value, scope, e.line, e.value_column)?;
            entries.push(((k, i, j), expr));
        }
        entries.sort_by_key(|(k, _)| *k);
        Some(TorsionField::new(n, entries)?)
    } else {
        None
    };

    let frame = if seen.contains(&Section::Frame) {
        let mut vectors = vec![vec![None; n]; n];
        let mut declared_orthonormal = false;
        for e in get(Section::Frame) {
            if e.key == "orthonormal" {
                declared_orthonormal = match e.value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(syntax(e.line, e.value_column, "expected true or false".into())),
                };
                continue;
            }
            let idx = parse_indices(e, "e", 2, &chart)?;
            let (mu, a) = (idx[0], idx[1]);
            if vectors[mu][a].is_some() {
                return Err(syntax(e.line, e.key_column, format!("duplicate entry e[{mu}][{a}]")));
            }
            vectors[mu][a] = Some(Expression::parse_at(e.value, scope, e.line, e.value_column)?);
        }
        Some(FrameFieldSpec {
            vectors: vectors
                .into_iter()
                .map(|v| v.into_iter().map(|c| c.unwrap_or_else(Expression::zero)).collect())
                .collect(),
            declared_orthonormal,
        })
    } else {
        None
    };

    Ok(SpacetimeSpec {
        name,
        chart,
        metric,
        torsion,
        frame,
        parameters,
    })
}

pub(super) fn print_spacetime_spec(spec: &SpacetimeSpec) -> String {
    let n = spec.dimension();
    let mut out = String::new();
    let _ = writeln!(out, "name = {}", spec.name);
    let _ = writeln!(out, "coordinates = {}", spec.chart.names().join(", "));
    let sig: Vec<String> = spec.signature().iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "signature = {}", sig.join(", "));
    if !spec.parameters.is_empty() {
        out.push_str("\n[parameters]\n");
        for (k, v) in &spec.parameters {
            let _ = writeln!(out, "{k} = {v:?}");
        }
    }
    if spec.chart.domain_hints().iter().any(Option::is_some) {
        out.push_str("\n[domain]\n");
        for (name, hint) in spec.chart.names().iter().zip(spec.chart.domain_hints()) {
            if let Some(d) = hint {
                let _ = writeln!(out, "{name} = {}, {}", fmt_bound(d.lo), fmt_bound(d.hi));
            }
        }
    }
    out.push_str("\n[metric]\n");
    for i in 0..n {
        for j in i..n {
            let e = spec.metric.component(i, j);
            if !e.is_zero_literal() {
                let _ = writeln!(out, "g[{i}][{j}] = {e}");
            }
        }
    }
    if let Some(t) = &spec.torsion {
        out.push_str("\n[torsion]\n");
        for ((k, i, j), e) in t.entries() {
            let _ = writeln!(out, "T[{k}][{i}][{j}] = {e}");
        }
    }
    if let Some(f) = &spec.frame {
        out.push_str("\n[frame]\n");
        let _ = writeln!(out, "orthonormal = {}", f.declared_orthonormal);
        for (mu, v) in f.vectors.iter().enumerate() {
            for (a, e) in v.iter().enumerate() {
                if !e.is_zero_literal() {
                    let _ = writeln!(out, "e[{mu}][{a}] = {e}");
                }
            }
        }
    }
    out
}

fn fmt_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

fn split_sections(text: &str) -> Result<(Vec<(Section, Entry<'_>)>, Vec<Section>)> {
    let mut out = Vec::new();
    let mut current = Section::Preamble;
    let mut seen = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let column_of =
            |s: &str| content[..s.as_ptr() as usize - content.as_ptr() as usize].chars().count() + 1;
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| syntax(line, column_of(trimmed), "unterminated section header".into()))?
                .trim();
            current = match name {
                "parameters" => Section::Parameters,
                "domain" => Section::Domain,
                "metric" => Section::Metric,
                "torsion" => Section::Torsion,
                "frame" => Section::Frame,
                other => {
                    return Err(syntax(line, column_of(trimmed), format!("unknown section `{other}`")))
                }
            };
            if seen.contains(&current) {
                return Err(syntax(line, column_of(trimmed), format!("duplicate section `{name}`")));
            }
            seen.push(current);
            continue;
        }
        let eq = content
            .find('=')
            .ok_or_else(|| syntax(line, column_of(trimmed), "expected `key = value`".into()))?;
        let key = content[..eq].trim();
        let value = content[eq + 1..].trim();
        if key.is_empty() {
            return Err(syntax(line, column_of(trimmed), "missing key before `=`".into()));
        }
        if value.is_empty() {
            return Err(syntax(line, content[..=eq].chars().count() + 1, "missing value".into()));
        }
        out.push((
            current,
            Entry {
                line,
                key,
                key_column: column_of(key),
                value,
                value_column: column_of(value),
            },
        ));
    }
    Ok((out, seen))
}

fn syntax(line: usize, column: usize, message: String) -> Error {
    Error::Syntax {
        line,
        column,
        message,
    }
}

fn unknown(name: &str, line: usize, column: usize) -> Error {
    Error::UnknownIdentifier {
        name: name.to_string(),
        line,
        column,
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

fn parse_signature(e: &Entry<'_>) -> Result<Vec<i8>> {
    e.value
        .split(',')
        .map(|s| match s.trim() {
            "1" | "+1" | "+" => Ok(1),
            "-1" | "-" => Ok(-1),
            other => Err(syntax(
                e.line,
                e.value_column,
                format!("signature entries must be 1 or -1, got `{other}`"),
            )),
        })
        .collect()
}

fn constant(text: &str, line: usize, column: usize, params: &BTreeMap<String, f64>) -> Result<f64> {
    let scope = Scope {
        coordinates: &[],
        parameters: params,
    };
    let v = Expression::parse_at(text, scope, line, column)?.eval(&[]);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(syntax(line, column, format!("`{text}` is not finite")))
    }
}

fn bound(text: &str, line: usize, column: usize, params: &BTreeMap<String, f64>) -> Result<f64> {
    match text.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => constant(t, line, column, params),
    }
}

/// Parses `name[i][j]...` into indices, accepting integers or coordinate names.
fn parse_indices(e: &Entry<'_>, head: &str, count: usize, chart: &CoordinateChart) -> Result<Vec<usize>> {
    let n = chart.dimension();
    let bad = |msg: String| syntax(e.line, e.key_column, msg);
    let rest = e
        .key
        .strip_prefix(head)
        .ok_or_else(|| bad(format!("expected `{head}[..]` entry, got `{}`", e.key)))?;
    let mut indices = Vec::with_capacity(count);
    let mut rest = rest.trim_start();
    while let Some(r) = rest.strip_prefix('[') {
        let close = r.find(']').ok_or_else(|| bad("missing `]`".into()))?;
        let tok = r[..close].trim();
        let idx = match tok.parse::<usize>() {
            Ok(i) => i,
            Err(_) => chart
                .index_of(tok)
                .ok_or_else(|| unknown(tok, e.line, e.key_column))?,
        };
        if idx >= n {
            return Err(Error::DimensionMismatch(format!(
                "index {idx} in `{}` at line {} exceeds dimension {n}",
                e.key, e.line
            )));
        }
        indices.push(idx);
        rest = r[close + 1..].trim_start();
    }
    if !rest.is_empty() || indices.len() != count {
        return Err(bad(format!("`{head}` entries need {count} indices, got `{}`", e.key)));
    }
    Ok(indices)
}
