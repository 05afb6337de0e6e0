//! JSON certificate files.
//!
//! ```json
//! {
//!   "prime": 5,
//!   "domain": { "box": 1 },
//!   "cells": [{ "levels": [{ "center": "0", "upper": { "expr": "1", "strict": false },
//!                            "coset": { "lambda": "1", "n": 1 } }] }],
//!   "functions": ["x1^2 - 1"],
//!   "descriptions": [{ "cell": 0, "function": 0, "level": 0, "delta": "1", "a": 2 }],
//!   "terms": [{ "cell": 0, "coefficient": "1", "factors": [{ "a": 1, "l": 0 }] }]
//! }
//! ```
//!
//! Polynomials are DSL strings; `lambda` and `coefficient` are rationals.
//! A domain is `{"box": n}` for `Z_p^n` or `{"tower": {"levels": [...]}}`.

use std::path::Path;

use serde::Deserialize;

use qexp_core::cells::{BoundSpec, CellLevel, CellTower, CosetSpec, DecompositionCertificate, Domain, NormDescription};
use qexp_core::dsl::{parse_poly, PolyExpr};
use qexp_core::qexp::{LevelFactor, TowerTerm};
use qexp_core::{PadicScalar, RootScaledValue};

use crate::error::{CliError, CliResult};

/// A number or a string, read as text.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Text {
    Int(i64),
    Str(String),
}

impl Text {
    fn as_string(&self) -> String {
        match self {
            Text::Int(i) => i.to_string(),
            Text::Str(s) => s.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertFile {
    prime: Option<u64>,
    domain: DomainFile,
    cells: Vec<CellFile>,
    #[serde(default)]
    functions: Vec<String>,
    #[serde(default)]
    descriptions: Vec<DescriptionFile>,
    #[serde(default)]
    terms: Vec<TermFile>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum DomainFile {
    Box(usize),
    Tower(CellFile),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellFile {
    levels: Vec<LevelFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelFile {
    center: Text,
    #[serde(default)]
    lower: Option<BoundFile>,
    #[serde(default)]
    upper: Option<BoundFile>,
    coset: CosetFile,
}

fn strict_default() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundFile {
    expr: Text,
    #[serde(default = "strict_default")]
    strict: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CosetFile {
    lambda: Text,
    n: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptionFile {
    cell: usize,
    function: usize,
    #[serde(default)]
    level: usize,
    delta: Text,
    a: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermFile {
    cell: usize,
    #[serde(default)]
    coefficient: Option<Text>,
    factors: Vec<FactorFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorFile {
    #[serde(default)]
    a: i64,
    #[serde(default)]
    l: u32,
}

/// A loaded certificate with its optional prime and integrand terms.
#[derive(Debug)]
pub struct Certificate {
    pub prime: Option<u64>,
    pub cert: DecompositionCertificate,
    terms: Vec<TermFile>,
}

pub fn scalar(text: &str) -> CliResult<PadicScalar> {
    text.parse().map_err(|_| CliError::Parse(format!("not a rational: `{text}`")))
}

fn poly(t: &Text) -> CliResult<PolyExpr> {
    Ok(parse_poly(&t.as_string())?)
}

fn level(l: &LevelFile) -> CliResult<CellLevel> {
    let bound = |b: &Option<BoundFile>| -> CliResult<Option<BoundSpec>> {
        b.as_ref().map(|b| Ok(BoundSpec { expr: poly(&b.expr)?, strict: b.strict })).transpose()
    };
    Ok(CellLevel::new(
        poly(&l.center)?,
        bound(&l.lower)?,
        bound(&l.upper)?,
        CosetSpec::new(scalar(&l.coset.lambda.as_string())?, l.coset.n),
    ))
}

fn tower(c: &CellFile) -> CliResult<CellTower> {
    Ok(CellTower::new(c.levels.iter().map(level).collect::<CliResult<_>>()?)?)
}

impl Certificate {
    pub fn parse(text: &str) -> CliResult<Self> {
        let file: CertFile =
            serde_json::from_str(text).map_err(|e| CliError::certificate(format!("malformed certificate: {e}")))?;
        let domain = match &file.domain {
            DomainFile::Box(arity) => Domain::Box { arity: *arity },
            DomainFile::Tower(c) => Domain::Tower(tower(c)?),
        };
        let cells = file.cells.iter().map(tower).collect::<CliResult<_>>()?;
        let functions = file.functions.iter().map(|f| Ok(parse_poly(f)?)).collect::<CliResult<_>>()?;
        let descriptions = file
            .descriptions
            .iter()
            .map(|d| {
                Ok(NormDescription {
                    cell: d.cell,
                    function: d.function,
                    level: d.level,
                    delta: poly(&d.delta)?,
                    a: d.a,
                })
            })
            .collect::<CliResult<_>>()?;
        let cert = DecompositionCertificate::new(domain, cells, functions, descriptions)?;
        Ok(Self { prime: file.prime, cert, terms: file.terms })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn terms(&self, prime: u64) -> CliResult<Vec<TowerTerm>> {
        self.terms
            .iter()
            .map(|t| {
                let c = match &t.coefficient {
                    Some(c) => scalar(&c.as_string())?.value().clone(),
                    None => qexp_core::Rational::from_integer(1.into()),
                };
                let factors = t.factors.iter().map(|f| LevelFactor::new(f.a, f.l)).collect();
                Ok(TowerTerm::new(t.cell, RootScaledValue::from_rational(prime, c), factors))
            })
            .collect()
    }

    pub fn has_terms(&self) -> bool {
        !self.terms.is_empty()
    }
}
