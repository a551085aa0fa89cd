//! Problem documents: a versioned TOML file describing a space, a self-map,
//! a coefficient family and a certificate.
//!
//! ```toml
//! format = "polycert/1"
//! kind = "polynomial"
//!
//! [space]
//! type = "finite"
//! points = ["x1", "x2", "x3"]
//! dist = "discrete"
//!
//! [map]
//! table = ["x1", "x2", "x1"]
//!
//! [family]
//! a0 = 0
//! a1 = 1
//!
//! [certificate]
//! lambda = "2/3"
//! j = 1
//! a_j = 1
//! ```

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;
use toml::{Table, Value};

use crate::contraction::{Coefficient, CoefficientFamily};
use crate::expr::{parse, Expression};
use crate::mapping::{Branch, Domain, PiecewiseMap, TableMap};
use crate::metricspace::{FiniteMetricSpace, IntervalGridSpace, MetricError, MAX_DEGREE};
use crate::rational::Rational;

pub const FORMAT: &str = "polycert/1";

/// Largest interval grid accepted; a verify scan is quadratic in this.
pub const MAX_GRID: usize = 100_001;

pub const MAX_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Field { path: String, message: String },
}

fn field(path: impl Into<String>, message: impl Into<String>) -> DocumentError {
    DocumentError::Field { path: path.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Banach,
    Kannan,
    Almost,
    Polynomial,
    AlmostPolynomial,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Banach => "banach",
            Kind::Kannan => "kannan",
            Kind::Almost => "almost",
            Kind::Polynomial => "polynomial",
            Kind::AlmostPolynomial => "almost-polynomial",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Kind::Banach, Kind::Kannan, Kind::Almost, Kind::Polynomial, Kind::AlmostPolynomial]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpaceSpec {
    Finite { labels: Vec<String>, dist: Vec<Vec<Rational>> },
    Interval { lo: Rational, hi: Rational, grid: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapSpec {
    /// Image label of each point, in point order.
    Table(Vec<String>),
    /// `(point, image)` label pairs.
    Assignments(Vec<(String, String)>),
    Branches(Vec<Branch>),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CertificateSpec {
    pub lambda: Option<Rational>,
    pub j: Option<usize>,
    pub a_j: Option<Rational>,
    pub l: Option<Vec<Rational>>,
    pub ell: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StartSpec {
    Label(String),
    Value(Rational),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemDocument {
    pub name: Option<String>,
    pub kind: Option<Kind>,
    pub space: SpaceSpec,
    pub map: Option<MapSpec>,
    pub family: Option<Vec<Coefficient>>,
    pub certificate: Option<CertificateSpec>,
    pub start: Option<StartSpec>,
}

fn line_column(source: &str, offset: usize) -> (usize, usize) {
    let mut end = offset.min(source.len());
    while !source.is_char_boundary(end) {
        end -= 1;
    }
    let before = &source[..end];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn check_keys(table: &Table, allowed: &[&str], path: &str) -> Result<(), DocumentError> {
    match table.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(field(join(path, k), format!("unknown key; expected one of {}", allowed.join(", ")))),
        None => Ok(()),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "a string",
        Value::Integer(_) => "an integer",
        Value::Float(_) => "a float",
        Value::Boolean(_) => "a boolean",
        Value::Datetime(_) => "a datetime",
        Value::Array(_) => "an array",
        Value::Table(_) => "a table",
    }
}

fn rational(v: &Value, path: &str) -> Result<Rational, DocumentError> {
    match v {
        Value::Integer(i) => Ok(Rational::from_integer(*i)),
        Value::String(s) => s.parse().map_err(|e| field(path, format!("{e}"))),
        Value::Float(f) => Err(field(path, format!("float {f} is not exact; write it as a string such as \"{f}\""))),
        other => Err(field(path, format!("expected a rational, found {}", type_name(other)))),
    }
}

fn string<'a>(v: &'a Value, path: &str) -> Result<&'a str, DocumentError> {
    v.as_str().ok_or_else(|| field(path, format!("expected a string, found {}", type_name(v))))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a [Value], DocumentError> {
    v.as_array().map(Vec::as_slice).ok_or_else(|| field(path, format!("expected an array, found {}", type_name(v))))
}

fn table<'a>(v: &'a Value, path: &str) -> Result<&'a Table, DocumentError> {
    v.as_table().ok_or_else(|| field(path, format!("expected a table, found {}", type_name(v))))
}

fn count(v: &Value, path: &str) -> Result<usize, DocumentError> {
    match v {
        Value::Integer(i) if *i >= 0 => usize::try_from(*i).map_err(|_| field(path, "too large")),
        Value::Integer(i) => Err(field(path, format!("expected a non-negative integer, got {i}"))),
        other => Err(field(path, format!("expected an integer, found {}", type_name(other)))),
    }
}

fn matrix(v: &Value, path: &str) -> Result<Vec<Vec<Rational>>, DocumentError> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let p = format!("{path}[{r}]");
            array(row, &p)?.iter().enumerate().map(|(c, x)| rational(x, &format!("{p}[{c}]"))).collect()
        })
        .collect()
}

fn expression(source: &str, path: &str) -> Result<Expression, DocumentError> {
    parse(source).map_err(|e| field(path, format!("{e} in {source:?}")))
}

impl ProblemDocument {
    pub fn parse(source: &str) -> Result<Self, DocumentError> {
        let root: Table = toml::from_str(source).map_err(|e| {
            let (line, column) = line_column(source, e.span().map_or(0, |s| s.start));
            DocumentError::Syntax { line, column, message: e.message().trim().to_string() }
        })?;
        check_keys(&root, &["format", "name", "kind", "space", "map", "family", "certificate", "iterate"], "")?;
        match root.get("format") {
            Some(v) if string(v, "format")? == FORMAT => {}
            Some(v) => return Err(field("format", format!("unsupported format {:?}; expected {FORMAT:?}", string(v, "format")?))),
            None => return Err(field("format", format!("missing; the first line should be format = {FORMAT:?}"))),
        }
        let name = root.get("name").map(|v| string(v, "name").map(str::to_string)).transpose()?;
        let kind = match root.get("kind") {
            Some(v) => {
                let s = string(v, "kind")?;
                Some(Kind::parse(s).ok_or_else(|| {
                    field("kind", format!("unknown kind {s:?}; expected banach, kannan, almost, polynomial or almost-polynomial"))
                })?)
            }
            None => None,
        };
        let space = parse_space(root.get("space").ok_or_else(|| field("space", "missing"))?)?;
        let map = root.get("map").map(parse_map).transpose()?;
        let family = root.get("family").map(parse_family).transpose()?;
        let certificate = root.get("certificate").map(parse_certificate).transpose()?;
        let start = match root.get("iterate") {
            Some(v) => {
                let t = table(v, "iterate")?;
                check_keys(t, &["start"], "iterate")?;
                t.get("start").map(|s| parse_start(s, "iterate.start")).transpose()?
            }
            None => None,
        };
        let doc = ProblemDocument { name, kind, space, map, family, certificate, start };
        doc.check_kind()?;
        Ok(doc)
    }

    /// The declared kind, or the one implied by the certificate fields.
    pub fn effective_kind(&self) -> Option<Kind> {
        if self.kind.is_some() {
            return self.kind;
        }
        let cert = self.certificate.as_ref()?;
        if cert.l.is_some() {
            Some(Kind::AlmostPolynomial)
        } else if cert.ell.is_some() {
            Some(Kind::Almost)
        } else if self.family.is_some() {
            Some(Kind::Polynomial)
        } else {
            None
        }
    }

    fn check_kind(&self) -> Result<(), DocumentError> {
        let Some(kind) = self.kind else { return Ok(()) };
        let cert = self.certificate.clone().unwrap_or_default();
        let stray = |name: &str| field(format!("certificate.{name}"), format!("not used by kind {}", kind.name()));
        let polynomial = matches!(kind, Kind::Polynomial | Kind::AlmostPolynomial);
        if !polynomial {
            if cert.j.is_some() {
                return Err(stray("j"));
            }
            if cert.a_j.is_some() {
                return Err(stray("a_j"));
            }
        }
        if kind != Kind::AlmostPolynomial && cert.l.is_some() {
            return Err(stray("L"));
        }
        if kind != Kind::Almost && cert.ell.is_some() {
            return Err(stray("ell"));
        }
        Ok(())
    }
}

fn parse_space(v: &Value) -> Result<SpaceSpec, DocumentError> {
    let t = table(v, "space")?;
    let ty = string(t.get("type").ok_or_else(|| field("space.type", "missing; use \"finite\" or \"interval\""))?, "space.type")?;
    match ty {
        "finite" => {
            check_keys(t, &["type", "points", "dist"], "space")?;
            let points = array(t.get("points").ok_or_else(|| field("space.points", "missing"))?, "space.points")?;
            if points.is_empty() {
                return Err(field("space.points", "a space needs at least one point"));
            }
            if points.len() > MAX_POINTS {
                return Err(field("space.points", format!("{} points exceeds the limit {MAX_POINTS}", points.len())));
            }
            let labels = points
                .iter()
                .enumerate()
                .map(|(i, p)| string(p, &format!("space.points[{i}]")).map(str::to_string))
                .collect::<Result<Vec<_>, _>>()?;
            for (i, l) in labels.iter().enumerate() {
                if labels[..i].contains(l) {
                    return Err(field(format!("space.points[{i}]"), format!("duplicate label {l:?}")));
                }
            }
            let n = labels.len();
            let dist = match t.get("dist").ok_or_else(|| field("space.dist", "missing; use \"discrete\" or a matrix"))? {
                Value::String(s) if s == "discrete" => (0..n)
                    .map(|p| (0..n).map(|q| if p == q { Rational::zero() } else { Rational::one() }).collect())
                    .collect(),
                Value::String(s) => return Err(field("space.dist", format!("unknown metric {s:?}; expected \"discrete\""))),
                other => {
                    let m = matrix(other, "space.dist")?;
                    if m.len() != n {
                        return Err(field("space.dist", format!("{} rows for {n} points", m.len())));
                    }
                    if let Some((r, row)) = m.iter().enumerate().find(|(_, row)| row.len() != n) {
                        return Err(field(format!("space.dist[{r}]"), format!("{} entries for {n} points", row.len())));
                    }
                    m
                }
            };
            Ok(SpaceSpec::Finite { labels, dist })
        }
        "interval" => {
            check_keys(t, &["type", "lo", "hi", "grid"], "space")?;
            let get = |k: &str| t.get(k).ok_or_else(|| field(format!("space.{k}"), "missing"));
            let lo = rational(get("lo")?, "space.lo")?;
            let hi = rational(get("hi")?, "space.hi")?;
            if lo >= hi {
                return Err(field("space", format!("need lo < hi, got [{lo}, {hi}]")));
            }
            let grid = count(get("grid")?, "space.grid")?;
            if !(2..=MAX_GRID).contains(&grid) {
                return Err(field("space.grid", format!("grid must lie in 2..={MAX_GRID}, got {grid}")));
            }
            Ok(SpaceSpec::Interval { lo, hi, grid })
        }
        other => Err(field("space.type", format!("unknown space type {other:?}; expected \"finite\" or \"interval\""))),
    }
}

fn parse_map(v: &Value) -> Result<MapSpec, DocumentError> {
    let t = table(v, "map")?;
    check_keys(t, &["table", "branch"], "map")?;
    match (t.get("table"), t.get("branch")) {
        (Some(_), Some(_)) => Err(field("map", "give either table or branch, not both")),
        (None, None) => Err(field("map", "missing table or branch")),
        (Some(Value::Table(images)), None) => {
            let mut out = Vec::with_capacity(images.len());
            for (k, v) in images {
                out.push((k.clone(), string(v, &format!("map.table.{k}"))?.to_string()));
            }
            Ok(MapSpec::Assignments(out))
        }
        (Some(images), None) => Ok(MapSpec::Table(
            array(images, "map.table")?
                .iter()
                .enumerate()
                .map(|(i, v)| string(v, &format!("map.table[{i}]")).map(str::to_string))
                .collect::<Result<_, _>>()?,
        )),
        (None, Some(branches)) => {
            let out = array(branches, "map.branch")?
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let path = format!("map.branch[{i}]");
                    let bt = table(b, &path)?;
                    check_keys(bt, &["domain", "expr"], &path)?;
                    let domain_path = format!("{path}.domain");
                    let domain_src = string(bt.get("domain").ok_or_else(|| field(&domain_path, "missing"))?, &domain_path)?;
                    let domain = Domain::parse(domain_src).map_err(|e| field(&domain_path, e.to_string()))?;
                    let expr_path = format!("{path}.expr");
                    let expr = match bt.get("expr").ok_or_else(|| field(&expr_path, "missing"))? {
                        Value::String(s) => expression(s, &expr_path)?,
                        other => Expression::Const(rational(other, &expr_path)?),
                    };
                    Ok(Branch { domain, expr })
                })
                .collect::<Result<_, DocumentError>>()?;
            Ok(MapSpec::Branches(out))
        }
    }
}

fn parse_coefficient(v: &Value, path: &str) -> Result<Coefficient, DocumentError> {
    match v {
        Value::Table(t) => {
            if t.len() != 1 {
                return Err(field(path, "expected exactly one of const, table or expr"));
            }
            let (k, inner) = t.iter().next().expect("one entry");
            let p = join(path, k);
            match k.as_str() {
                "const" => Ok(Coefficient::Constant(rational(inner, &p)?)),
                "table" => Ok(Coefficient::Table(matrix(inner, &p)?)),
                "expr" => Ok(Coefficient::Expr(expression(string(inner, &p)?, &p)?)),
                _ => Err(field(p, "unknown key; expected const, table or expr")),
            }
        }
        other => Ok(Coefficient::Constant(rational(other, path)?)),
    }
}

fn parse_family(v: &Value) -> Result<Vec<Coefficient>, DocumentError> {
    let t = table(v, "family")?;
    let mut by_index = BTreeMap::new();
    for (k, c) in t {
        let path = format!("family.{k}");
        let i = k
            .strip_prefix('a')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) && (d.len() == 1 || !d.starts_with('0')))
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&i| i <= MAX_DEGREE)
            .ok_or_else(|| field(&path, format!("keys are a0, a1, ..., a{MAX_DEGREE}")))?;
        by_index.insert(i, parse_coefficient(c, &path)?);
    }
    let k = by_index.keys().next_back().copied().unwrap_or(0);
    if let Some(missing) = (0..=k).find(|i| !by_index.contains_key(i)) {
        return Err(field(format!("family.a{missing}"), format!("missing; a0..a{k} must all be given")));
    }
    if k == 0 {
        return Err(field("family", "needs at least a0 and a1"));
    }
    Ok(by_index.into_values().collect())
}

fn parse_certificate(v: &Value) -> Result<CertificateSpec, DocumentError> {
    let t = table(v, "certificate")?;
    check_keys(t, &["lambda", "j", "a_j", "L", "ell"], "certificate")?;
    let r = |k: &str| t.get(k).map(|v| rational(v, &format!("certificate.{k}"))).transpose();
    Ok(CertificateSpec {
        lambda: r("lambda")?,
        j: t.get("j").map(|v| count(v, "certificate.j")).transpose()?,
        a_j: r("a_j")?,
        l: t.get("L")
            .map(|v| {
                array(v, "certificate.L")?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| rational(x, &format!("certificate.L[{i}]")))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?,
        ell: r("ell")?,
    })
}

fn parse_start(v: &Value, path: &str) -> Result<StartSpec, DocumentError> {
    match v {
        Value::String(s) => Ok(StartSpec::Label(s.clone())),
        other => Ok(StartSpec::Value(rational(other, path)?)),
    }
}

/// A document resolved against its space: labels looked up, metric checked.
pub enum Problem {
    Finite { space: FiniteMetricSpace, map: Option<TableMap> },
    Interval { space: IntervalGridSpace, map: Option<PiecewiseMap> },
}

/// Why a document could not be turned into a [`Problem`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error(transparent)]
    Input(#[from] DocumentError),
    /// The distance matrix is well formed but violates a metric axiom.
    #[error("{0}")]
    NotAMetric(String),
}

impl ProblemDocument {
    pub fn build(&self) -> Result<Problem, BuildError> {
        match &self.space {
            SpaceSpec::Finite { labels, dist } => {
                let space = FiniteMetricSpace::new(labels.clone(), dist.clone()).map_err(|e| match e {
                    MetricError::Violation(v) => BuildError::NotAMetric(v.describe(labels)),
                    other => BuildError::Input(field("space", other.to_string())),
                })?;
                let map = match &self.map {
                    None => None,
                    Some(MapSpec::Branches(_)) => {
                        return Err(field("map.branch", "branches apply to interval spaces; use map.table").into())
                    }
                    Some(MapSpec::Table(entries)) => Some(resolve_table(&space, entries)?),
                    Some(MapSpec::Assignments(pairs)) => Some(resolve_assignments(&space, pairs)?),
                };
                Ok(Problem::Finite { space, map })
            }
            SpaceSpec::Interval { lo, hi, grid } => {
                let space = IntervalGridSpace::new(lo.clone(), hi.clone(), *grid)
                    .map_err(|e| BuildError::Input(field("space", e.to_string())))?;
                let map = match &self.map {
                    None => None,
                    Some(MapSpec::Table(_) | MapSpec::Assignments(_)) => {
                        return Err(field("map.table", "tables apply to finite spaces; use [[map.branch]]").into())
                    }
                    Some(MapSpec::Branches(b)) => Some(
                        PiecewiseMap::new(&space, b.clone()).map_err(|e| BuildError::Input(field("map", e.to_string())))?,
                    ),
                };
                Ok(Problem::Interval { space, map })
            }
        }
    }

    pub fn family(&self) -> Result<Option<CoefficientFamily>, DocumentError> {
        self.family
            .as_ref()
            .map(|f| CoefficientFamily::new(f.clone()).map_err(|e| field("family", e.to_string())))
            .transpose()
    }
}

fn lookup(space: &FiniteMetricSpace, label: &str, path: String) -> Result<usize, DocumentError> {
    space.index_of(label).ok_or_else(|| field(path, format!("unknown point {label:?}")))
}

fn resolve_table(space: &FiniteMetricSpace, entries: &[String]) -> Result<TableMap, DocumentError> {
    let n = space.len();
    if entries.len() != n {
        return Err(field("map.table", format!("{} images for {n} points", entries.len())));
    }
    let images =
        entries.iter().enumerate().map(|(i, l)| lookup(space, l, format!("map.table[{i}]"))).collect::<Result<_, _>>()?;
    TableMap::new(images, n).map_err(|e| field("map.table", e.to_string()))
}

fn resolve_assignments(space: &FiniteMetricSpace, pairs: &[(String, String)]) -> Result<TableMap, DocumentError> {
    let mut images = vec![None; space.len()];
    for (from, to) in pairs {
        let path = format!("map.table.{from}");
        let (p, image) = (lookup(space, from, path.clone())?, lookup(space, to, path)?);
        images[p] = Some(image);
    }
    if let Some(p) = images.iter().position(Option::is_none) {
        return Err(field("map.table", format!("no image given for {:?}", space.labels()[p])));
    }
    TableMap::new(images.into_iter().flatten().collect(), space.len()).map_err(|e| field("map.table", e.to_string()))
}
