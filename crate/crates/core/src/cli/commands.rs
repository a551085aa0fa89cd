//! The five subcommands. Each returns a [`Report`]; none of them panics on
//! bad input, which is reported with exit code 2.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use super::document::{BuildError, CertificateSpec, Kind, Problem, ProblemDocument, SpaceSpec, StartSpec};
use super::report::{fields, table, Report, Section};
use crate::certsearch::{
    default_lambda_tol, synthesize_almost, synthesize_polynomial, Probe, SearchMode, SynthesisResult, SynthesisStatus,
};
use crate::contraction::{
    check_continuity_hypotheses, check_lower_bound_condition, verify_almost_contraction, verify_almost_polynomial,
    verify_banach, verify_kannan, verify_polynomial, AlmostPolynomialCertificate, Coefficient, CoefficientDomain,
    CoefficientFamily, LowerBound, PairWitness, PolynomialCertificate, RatioBound, Verdict,
};
use crate::mapping::{is_picard_continuous, is_weakly_picard, Mapping, TableMap};
use crate::metricspace::{validate_metric, MetricVerdict};
use crate::picard::{check_bound_against_trace, iterate, sigma_j0, BoundParams, PicardTrace, StopRule, TraceStatus};
use crate::rational::Rational;

/// A document and the name it was loaded under.
#[derive(Debug, Clone)]
pub struct Input {
    pub name: String,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Constant,
    Full,
    /// Constant-coefficient almost-polynomial search.
    Almost,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub tolerance: Rational,
    pub max_iter: usize,
    pub k: usize,
    pub mode: Mode,
    pub lambda_tol: Rational,
    pub bound_check: bool,
    pub kind: Option<Kind>,
    pub start: Option<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tolerance: Rational::zero(),
            max_iter: crate::picard::DEFAULT_MAX_ITER,
            k: 1,
            mode: Mode::Full,
            lambda_tol: default_lambda_tol(),
            bound_check: false,
            kind: None,
            start: None,
        }
    }
}

pub(super) type Step<T> = Result<T, String>;

pub(super) fn load(report: &mut Report, input: &Input) -> Option<ProblemDocument> {
    match ProblemDocument::parse(&input.source) {
        Ok(d) => Some(d),
        Err(e) => {
            report.reject(e.to_string());
            None
        }
    }
}

/// Build the problem; a metric violation is a failed check, anything else
/// an input error.
pub(super) fn build(report: &mut Report, doc: &ProblemDocument) -> Option<Problem> {
    match doc.build() {
        Ok(p) => Some(p),
        Err(BuildError::NotAMetric(m)) => {
            report.push(Section::new("metric").line(format!("not a metric: {m}")));
            report.fail(format!("metric axioms: {m}"));
            None
        }
        Err(BuildError::Input(e)) => {
            report.reject(e.to_string());
            None
        }
    }
}

pub(super) fn finish(report: &mut Report, result: Step<()>) {
    if let Err(e) = result {
        report.reject(e);
    }
}

pub fn pair(w: &PairWitness) -> String {
    format!("({}, {})", w.p_label, w.q_label)
}

pub fn validate(input: &Input) -> Report {
    let mut report = Report::new("validate", &input.name, input.source.as_bytes());
    let Some(doc) = load(&mut report, input) else { return report };
    let result = (|| -> Step<()> {
        match &doc.space {
            SpaceSpec::Finite { labels, dist } => {
                let verdict = validate_metric(dist, labels).map_err(|e| format!("space: {e}"))?;
                match &verdict {
                    MetricVerdict::Valid => {
                        report.push(
                            Section::new("metric")
                                .line(format!("valid metric on {} points", labels.len()))
                                .data(json!({ "valid": true, "points": labels.len() })),
                        );
                    }
                    MetricVerdict::Invalid(v) => {
                        let text = v.describe(labels);
                        report.push(
                            Section::new("metric")
                                .line(format!("not a metric: {text}"))
                                .data(json!({ "valid": false, "violation": v, "description": text })),
                        );
                        report.fail(format!("metric axioms: {text}"));
                        return Ok(());
                    }
                }
            }
            SpaceSpec::Interval { lo, hi, grid } => {
                report.push(
                    Section::new("metric")
                        .line(format!("interval [{lo}, {hi}] with d(x, y) = |x - y|, {grid} grid points"))
                        .data(json!({ "valid": true, "lo": lo, "hi": hi, "grid": grid })),
                );
            }
        }
        let Some(problem) = build(&mut report, &doc) else { return Ok(()) };
        let family = doc.family().map_err(|e| e.to_string())?;
        let mut parts = vec!["space".to_string()];
        if doc.map.is_some() {
            parts.push("map".into());
        }
        if let Some(f) = &family {
            match &problem {
                Problem::Finite { space, .. } => f.check_domain(space),
                Problem::Interval { space, .. } => f.check_domain(space),
            }
            .map_err(|e| format!("family: {e}"))?;
            parts.push(format!("family (k = {})", f.k()));
        }
        if doc.certificate.is_some() {
            parts.push("certificate".into());
        }
        let kind = doc.effective_kind().map(Kind::name);
        report.push(
            Section::new("document")
                .lines(fields(&[
                    ("well-formed", parts.join(", ")),
                    ("kind", kind.unwrap_or("none").to_string()),
                ]))
                .data(json!({ "parts": parts, "kind": kind })),
        );
        Ok(())
    })();
    finish(&mut report, result);
    report
}

pub fn verdict_lines(v: &Verdict, space_points: usize, grid: bool) -> Vec<String> {
    let min = match &v.min_feasible_lambda {
        Some(m) => m.to_string(),
        None => "none (a pair has rhs = 0 < lhs)".to_string(),
    };
    let worst = match &v.worst_pair {
        Some(w) => format!("{}  lhs = {}  rhs = {}", pair(w), v.lhs, v.rhs),
        None => "none".to_string(),
    };
    let scope = if grid {
        format!("{} ordered grid pairs ({space_points} grid points; proof on the grid only)", v.pairs_checked)
    } else {
        format!("{} ordered pairs", v.pairs_checked)
    };
    fields(&[
        ("status", format!("{:?}", v.status).to_lowercase()),
        ("lambda", v.lambda.to_string()),
        ("min feasible lambda", min),
        ("worst pair", worst),
        ("checked", scope),
    ])
}

fn ratio_lines(name: &str, bound: &RatioBound, required: &str) -> Vec<String> {
    match bound {
        RatioBound::Bounded { ratio, witness } => {
            let at = witness.as_ref().map(pair).unwrap_or_else(|| "none".to_string());
            fields(&[
                (name, ratio.to_string()),
                ("attained at", at),
                ("required", required.to_string()),
            ])
        }
        RatioBound::Unbounded { witness } => fields(&[
            (name, "unbounded".to_string()),
            ("attained at", format!("{} (zero denominator, positive numerator)", pair(witness))),
        ]),
    }
}

fn need<'a, T>(v: &'a Option<T>, what: &str, kind: Kind) -> Step<&'a T> {
    v.as_ref().ok_or_else(|| format!("kind {} needs {what}", kind.name()))
}

pub(super) fn polynomial_certificate(doc: &ProblemDocument, kind: Kind) -> Step<PolynomialCertificate> {
    let cert = need(&doc.certificate, "a [certificate] table", kind)?;
    let family = doc.family().map_err(|e| e.to_string())?.ok_or_else(|| format!("kind {} needs a [family] table", kind.name()))?;
    let lambda = need(&cert.lambda, "certificate.lambda", kind)?;
    let j = need(&cert.j, "certificate.j", kind)?;
    let a_j = need(&cert.a_j, "certificate.a_j", kind)?;
    PolynomialCertificate::new(lambda.clone(), family, *j, a_j.clone()).map_err(|e| format!("certificate: {e}"))
}

/// `L` may list `L_0..L_k`, or `L_1..L_k` with `L_0 = 1` implied.
pub(super) fn almost_certificate(doc: &ProblemDocument) -> Step<(AlmostPolynomialCertificate, bool)> {
    let base = polynomial_certificate(doc, Kind::AlmostPolynomial)?;
    let cert: &CertificateSpec = doc.certificate.as_ref().expect("checked above");
    let l = need(&cert.l, "certificate.L", Kind::AlmostPolynomial)?;
    let k = base.family().k();
    let (l, implied) = if l.len() == k { ([vec![Rational::one()], l.clone()].concat(), true) } else { (l.clone(), false) };
    let c = AlmostPolynomialCertificate::new(base, l).map_err(|e| format!("certificate: {e}"))?;
    Ok((c, implied))
}

fn lower_bound_section(r: &mut Report, lb: &LowerBound, declared: &Rational) {
    match lb {
        LowerBound::Holds { j, a_j_min, at, grid_evidence } => {
            let ok = a_j_min >= declared;
            let scope = if *grid_evidence { " on the grid" } else { "" };
            r.push(
                Section::new("lower bound")
                    .lines(fields(&[
                        ("condition", format!("a_{j} >= A_{j} = {declared}")),
                        (&format!("min a_{j}"), format!("{a_j_min} at {}{scope}", pair(at))),
                        ("holds", ok.to_string()),
                    ]))
                    .data(json!({ "result": lb, "declared": declared, "holds": ok })),
            );
            r.check(ok, format!("lower bound: min a_{j} = {a_j_min} < A_{j} = {declared}"));
        }
        LowerBound::Fails { j, value, at } => {
            r.push(
                Section::new("lower bound")
                    .lines(fields(&[
                        ("condition", format!("a_{j} >= A_{j} = {declared}")),
                        (&format!("min a_{j}"), format!("{value} at {}", pair(at))),
                        ("holds", "false".to_string()),
                    ]))
                    .data(json!({ "result": lb, "declared": declared, "holds": false })),
            );
            r.fail(format!("lower bound: a_{j} = {value} at {}", pair(at)));
        }
    }
}

fn hypotheses_section<S: CoefficientDomain>(r: &mut Report, space: &S, family: &CoefficientFamily) -> Step<()> {
    let h = check_continuity_hypotheses(space, family).map_err(|e| e.to_string())?;
    let bounds: Vec<String> = h.upper_bounds.iter().enumerate().map(|(i, b)| format!("B_{} = {b}", i + 1)).collect();
    let best = match &h.best_lower_bound {
        Some((j, b)) => format!("a_{j} >= {b}"),
        None => "none".to_string(),
    };
    let a0 = if h.a0_vanishes {
        "yes".to_string()
    } else {
        format!("no (nonzero at {})", h.a0_witness.as_ref().map(pair).unwrap_or_default())
    };
    r.push(
        Section::new("continuity hypotheses")
            .lines(fields(&[
                ("a_0 = 0", a0),
                ("upper bounds", bounds.join(", ")),
                ("best lower bound", best),
                ("continuity guaranteed", h.continuity_guaranteed.to_string()),
            ]))
            .data(&h),
    );
    Ok(())
}

pub(super) fn map_section_finite(r: &mut Report, labels: &[String], map: &TableMap) {
    let pc = is_picard_continuous(map);
    let wp = is_weakly_picard(map);
    let fixed: Vec<&str> = wp.fixed_points.iter().map(|&p| labels[p].as_str()).collect();
    r.push(
        Section::new("map")
            .lines(fields(&[
                ("fixed points", format!("{{{}}}", fixed.join(", "))),
                ("picard-continuous", pc.holds.to_string()),
                ("weakly picard", wp.holds.to_string()),
            ]))
            .data(json!({ "fixed_points": fixed, "picard_continuous": pc.holds, "weakly_picard": wp.holds })),
    );
}

pub(super) fn map_section_grid(r: &mut Report, space: &crate::metricspace::IntervalGridSpace, map: &crate::mapping::PiecewiseMap) {
    match map.to_table(space) {
        Ok(t) => {
            let pc = is_picard_continuous(&t);
            let fixed: Vec<String> = crate::mapping::fixed_points(&t).iter().map(|&p| space.point(p).to_string()).collect();
            r.push(
                Section::new("map")
                    .lines(fields(&[
                        ("grid fixed points", format!("{{{}}}", fixed.join(", "))),
                        ("picard-continuous on grid", pc.holds.to_string()),
                    ]))
                    .data(json!({ "grid_fixed_points": fixed, "grid_picard_continuous": pc.holds })),
            );
        }
        Err(e) => {
            r.push(Section::new("map").line(format!("map leaves the grid ({e}); grid properties skipped")));
        }
    }
}

pub(super) fn verify_on<S, M>(r: &mut Report, space: &S, map: &M, doc: &ProblemDocument, kind: Kind) -> Step<()>
where
    S: CoefficientDomain,
    M: Mapping<S>,
{
    let n = space.scan_points().len();
    // a declared lambda belongs to the document's own kind
    let lambda = doc.certificate.as_ref().and_then(|c| c.lambda.clone()).filter(|_| doc.effective_kind() == Some(kind));
    match kind {
        Kind::Banach | Kind::Kannan => {
            let (name, limit, bound) = if kind == Kind::Banach {
                ("lipschitz ratio", Rational::one(), verify_banach(space, map))
            } else {
                ("kannan ratio", Rational::new(1, 2), verify_kannan(space, map))
            };
            let bound = bound.map_err(|e| e.to_string())?;
            let (ok, required) = match lambda {
                Some(l) if !l.is_positive() || l >= limit => {
                    return Err(format!("certificate.lambda = {l} must lie in (0, {limit})"))
                }
                Some(l) => (bound.ratio().is_some_and(|x| *x <= l), format!("<= {l}")),
                None => (bound.below(&limit), format!("< {limit}")),
            };
            r.push(Section::new(kind.name()).lines(ratio_lines(name, &bound, &required)).data(&bound));
            let got = bound.ratio().map_or("unbounded".to_string(), |x| x.to_string());
            r.check(ok, format!("{}: {name} {got} is not {required}", kind.name()));
        }
        Kind::Almost => {
            let cert = need(&doc.certificate, "a [certificate] table", kind)?;
            let lambda = need(&cert.lambda, "certificate.lambda", kind)?;
            let ell = need(&cert.ell, "certificate.ell", kind)?;
            let v = verify_almost_contraction(space, map, lambda, ell).map_err(|e| format!("certificate: {e}"))?;
            let mut lines = vec![format!("d(Tx,Ty) <= {lambda} d(x,y) + {ell} d(y,Tx)")];
            lines.extend(verdict_lines(&v, n, space.is_grid()));
            r.push(Section::new("almost contraction").lines(lines).data(&v));
            r.check(v.passed(), "almost contraction inequality");
        }
        Kind::Polynomial => {
            let cert = polynomial_certificate(doc, kind)?;
            let v = verify_polynomial(space, map, &cert).map_err(|e| format!("certificate: {e}"))?;
            r.push(Section::new("polynomial contraction").lines(verdict_lines(&v, n, space.is_grid())).data(&v));
            r.check(v.passed(), "polynomial contraction inequality");
            let lb = check_lower_bound_condition(space, cert.family(), cert.witness_j()).map_err(|e| e.to_string())?;
            lower_bound_section(r, &lb, cert.witness_aj());
            hypotheses_section(r, space, cert.family())?;
        }
        Kind::AlmostPolynomial => {
            let (cert, implied) = almost_certificate(doc)?;
            let v = verify_almost_polynomial(space, map, &cert).map_err(|e| format!("certificate: {e}"))?;
            let l: Vec<String> = cert.l().iter().enumerate().map(|(i, x)| format!("L_{i} = {x}")).collect();
            let mut lines = vec![format!("{}{}", l.join(", "), if implied { "  (L_0 = 1 implied)" } else { "" })];
            lines.extend(verdict_lines(&v, n, space.is_grid()));
            r.push(Section::new("almost-polynomial contraction").lines(lines).data(&v));
            r.check(v.passed(), "almost-polynomial contraction inequality");
            let p = cert.polynomial();
            let lb = check_lower_bound_condition(space, p.family(), p.witness_j()).map_err(|e| e.to_string())?;
            lower_bound_section(r, &lb, p.witness_aj());
        }
    }
    Ok(())
}

pub fn verify(input: &Input, settings: &Settings) -> Report {
    let mut report = Report::new("verify", &input.name, input.source.as_bytes());
    let Some(doc) = load(&mut report, input) else { return report };
    let Some(problem) = build(&mut report, &doc) else { return report };
    let result = (|| -> Step<()> {
        let kind = settings
            .kind
            .or_else(|| doc.effective_kind())
            .ok_or("no kind: set kind in the document or pass --kind")?;
        let polynomial = matches!(kind, Kind::Polynomial | Kind::AlmostPolynomial);
        match &problem {
            Problem::Finite { space, map } => {
                let map = map.as_ref().ok_or("verify needs a [map]")?;
                verify_on(&mut report, space, map, &doc, kind)?;
                if polynomial {
                    map_section_finite(&mut report, space.labels(), map);
                }
            }
            Problem::Interval { space, map } => {
                let map = map.as_ref().ok_or("verify needs a [map]")?;
                verify_on(&mut report, space, map, &doc, kind)?;
                if polynomial {
                    map_section_grid(&mut report, space, map);
                }
            }
        }
        Ok(())
    })();
    finish(&mut report, result);
    report
}

fn status_name(s: TraceStatus) -> &'static str {
    match s {
        TraceStatus::ConvergedToFixedPoint => "converged to fixed point",
        TraceStatus::CycleDetected => "cycle detected",
        TraceStatus::MaxIter => "max-iter reached",
    }
}

#[derive(Serialize)]
struct TraceData<'a> {
    start: &'a str,
    iterates: &'a [String],
    step_dist: &'a [Rational],
    status: TraceStatus,
    limit: Option<&'a str>,
    steps_to_limit: Option<usize>,
    bound_params: Option<&'a BoundParams>,
}

pub fn trace_section<P: PartialEq>(trace: &PicardTrace<P>) -> Section {
    let rows: Vec<Vec<String>> = trace
        .labels
        .iter()
        .enumerate()
        .map(|(n, z)| {
            let step = trace.step_dist.get(n).map(|d| d.to_string()).unwrap_or_else(|| "-".to_string());
            vec![n.to_string(), z.clone(), step]
        })
        .collect();
    let mut lines = table(&["n", "z_n", "d(z_n, z_n+1)"], &rows);
    lines.push(String::new());
    lines.extend(fields(&[
        ("status", status_name(trace.status).to_string()),
        ("limit", trace.limit_label().unwrap_or("none").to_string()),
        ("steps", trace.steps_to_limit().map_or("-".to_string(), |s| s.to_string())),
    ]));
    Section::new(format!("orbit from {}", trace.labels[0])).lines(lines).data(TraceData {
        start: &trace.labels[0],
        iterates: &trace.labels,
        step_dist: &trace.step_dist,
        status: trace.status,
        limit: trace.limit_label(),
        steps_to_limit: trace.steps_to_limit(),
        bound_params: trace.bound_params.as_ref(),
    })
}

pub(super) fn iterate_on<S, M>(
    r: &mut Report,
    space: &S,
    map: &M,
    starts: &[S::Point],
    settings: &Settings,
    certificate: Option<&PolynomialCertificate>,
    reverify: bool,
) -> Step<Vec<PicardTrace<S::Point>>>
where
    S: CoefficientDomain,
    M: Mapping<S>,
{
    let stop = StopRule { tolerance: settings.tolerance.clone(), max_iter: settings.max_iter };
    if let Some(cert) = certificate.filter(|_| reverify) {
        let v = verify_polynomial(space, map, cert).map_err(|e| format!("certificate: {e}"))?;
        r.push(
            Section::new("certificate")
                .lines(verdict_lines(&v, space.scan_points().len(), space.is_grid()))
                .data(&v),
        );
        r.check(v.passed(), "polynomial contraction inequality (bound check needs a valid certificate)");
    }
    let mut limits = Vec::new();
    let mut traces = Vec::with_capacity(starts.len());
    for z0 in starts {
        let mut trace = iterate(space, map, z0, &stop).map_err(|e| e.to_string())?;
        let start = trace.labels[0].clone();
        if trace.status != TraceStatus::ConvergedToFixedPoint {
            r.fail(format!("orbit from {start}: {}", status_name(trace.status)));
        }
        limits.push(vec![start.clone(), trace.limit_label().unwrap_or("none").to_string(), trace.steps_to_limit().map_or("-".into(), |s| s.to_string())]);
        let bound = match certificate {
            Some(cert) if trace.limit.is_some() => {
                let sigma = sigma_j0(space, map, cert.family(), cert.witness_aj(), z0).map_err(|e| e.to_string())?;
                let params = BoundParams { j: cert.witness_j(), lambda: cert.lambda().clone(), sigma_j0: sigma };
                trace.bound_params = Some(params.clone());
                Some(check_bound_against_trace(space, &trace, &params).map_err(|e| e.to_string())?)
            }
            _ => None,
        };
        r.push(trace_section(&trace));
        if let Some(b) = bound {
            let rows: Vec<Vec<String>> = b
                .rows
                .iter()
                .map(|row| vec![row.n.to_string(), row.observed.to_string(), row.bound.to_string(), row.holds.to_string()])
                .collect();
            let mut lines = fields(&[
                ("j", b.params.j.to_string()),
                ("lambda", b.params.lambda.to_string()),
                ("sigma_j0", b.params.sigma_j0.to_string()),
            ]);
            lines.push(String::new());
            lines.extend(table(&["n", "d(z_n, limit)", "bound", "holds"], &rows));
            if !b.binding && !b.holds() {
                lines.push(format!("{} violation(s) reported as observations (j >= 2)", b.violations.len()));
            }
            r.push(Section::new(format!("a-priori bound from {start}")).lines(lines).data(&b));
            r.check(!b.binding || b.holds(), format!("a-priori bound from {start} violated at n = {:?}", b.violations));
        }
        traces.push(trace);
    }
    if starts.len() > 1 {
        let mut distinct: Vec<&str> = limits.iter().map(|l| l[1].as_str()).collect();
        distinct.sort();
        distinct.dedup();
        let mut lines = table(&["start", "limit", "steps"], &limits);
        lines.push(format!("distinct limits: {}", distinct.join(", ")));
        r.push(Section::new("limits").lines(lines).data(json!({ "limits": limits, "distinct": distinct })));
    }
    Ok(traces)
}

pub fn iterate_cmd(input: &Input, settings: &Settings) -> Report {
    let mut report = Report::new("iterate", &input.name, input.source.as_bytes());
    let Some(doc) = load(&mut report, input) else { return report };
    let Some(problem) = build(&mut report, &doc) else { return report };
    let result = (|| -> Step<()> {
        if settings.tolerance.is_negative() {
            return Err(format!("--tolerance {} must be non-negative", settings.tolerance));
        }
        let start = match &settings.start {
            Some(s) => Some(StartSpec::Label(s.clone())),
            None => doc.start.clone(),
        };
        let certificate = if settings.bound_check {
            match settings.kind.or_else(|| doc.effective_kind()) {
                Some(Kind::Polynomial) => Some(polynomial_certificate(&doc, Kind::Polynomial)?),
                _ => return Err("--bound-check needs a polynomial certificate ([family] and [certificate] with lambda, j, a_j)".into()),
            }
        } else {
            None
        };
        match &problem {
            Problem::Finite { space, map } => {
                let map = map.as_ref().ok_or("iterate needs a [map]")?;
                let starts = match start {
                    None => (0..space.len()).collect(),
                    Some(StartSpec::Label(l)) => vec![space.index_of(&l).ok_or_else(|| format!("start: unknown point {l:?}"))?],
                    Some(StartSpec::Value(v)) => {
                        vec![space.index_of(&v.to_string()).ok_or_else(|| format!("start: unknown point {v:?}"))?]
                    }
                };
                iterate_on(&mut report, space, map, &starts, settings, certificate.as_ref(), true).map(drop)
            }
            Problem::Interval { space, map } => {
                let map = map.as_ref().ok_or("iterate needs a [map]")?;
                let z0 = match start {
                    None => return Err("iterate on an interval needs a start ([iterate] start or --start)".into()),
                    Some(StartSpec::Value(v)) => v,
                    Some(StartSpec::Label(l)) => l.parse().map_err(|e| format!("start: {e}"))?,
                };
                if !space.contains(&z0) {
                    return Err(format!("start {z0} lies outside [{}, {}]", space.lo(), space.hi()));
                }
                iterate_on(&mut report, space, map, &[z0], settings, certificate.as_ref(), true).map(drop)
            }
        }
    })();
    finish(&mut report, result);
    report
}

fn coefficient_toml(c: &Coefficient) -> String {
    match c {
        Coefficient::Constant(v) => format!("\"{v}\""),
        Coefficient::Expr(e) => format!("{{ expr = \"{e}\" }}"),
        Coefficient::Table(t) => {
            let rows: Vec<String> = t
                .iter()
                .map(|row| format!("[{}]", row.iter().map(|v| format!("\"{v}\"")).collect::<Vec<_>>().join(", ")))
                .collect();
            format!("{{ table = [{}] }}", rows.join(", "))
        }
    }
}

/// The `[family]` and `[certificate]` tables of a document carrying this
/// certificate.
pub fn certificate_toml(cert: &PolynomialCertificate, l: Option<&[Rational]>) -> String {
    let mut s = String::from("[family]\n");
    for (i, c) in cert.family().coefficients().iter().enumerate() {
        let _ = writeln!(s, "a{i} = {}", coefficient_toml(c));
    }
    let _ = write!(s, "\n[certificate]\nlambda = \"{}\"\nj = {}\na_j = \"{}\"\n", cert.lambda(), cert.witness_j(), cert.witness_aj());
    if let Some(l) = l {
        let l: Vec<String> = l.iter().map(|x| format!("\"{x}\"")).collect();
        let _ = writeln!(s, "L = [{}]", l.join(", "));
    }
    s
}

fn probes_section(probes: &[Probe]) -> Section {
    let rows: Vec<Vec<String>> = probes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            vec![
                i.to_string(),
                p.lambda.to_string(),
                if p.feasible { "feasible" } else { "infeasible" }.to_string(),
                p.j_star.map_or("-".into(), |j| j.to_string()),
            ]
        })
        .collect();
    Section::new("probes").lines(table(&["#", "lambda", "result", "j*"], &rows)).data(probes)
}

fn search_result<C>(r: &mut Report, res: &SynthesisResult<C>, mode: &str, k: usize, tol: &Rational) {
    let found = res.status == SynthesisStatus::Found;
    r.push(probes_section(&res.probes));
    r.push(
        Section::new("search")
            .lines(fields(&[
                ("mode", mode.to_string()),
                ("k", k.to_string()),
                ("lambda tolerance", tol.to_string()),
                ("status", if found { "found" } else { "infeasible below one" }.to_string()),
                ("lambda", res.lambda.as_ref().map_or("-".into(), |l| format!("{l} (~{:.9})", l.to_f64()))),
            ]))
            .data(json!({ "mode": mode, "k": k, "lambda_tol": tol, "status": res.status, "lambda": res.lambda })),
    );
    r.check(found, format!("search: no certificate with lambda <= 1 - {tol}"));
}

pub fn search(input: &Input, settings: &Settings) -> Report {
    let mut report = Report::new("search", &input.name, input.source.as_bytes());
    let Some(doc) = load(&mut report, input) else { return report };
    let Some(problem) = build(&mut report, &doc) else { return report };
    let result = (|| -> Step<()> {
        let Problem::Finite { space, map } = &problem else {
            return Err("search supports finite spaces only".into());
        };
        let map = map.as_ref().ok_or("search needs a [map]")?;
        let (k, tol) = (settings.k, &settings.lambda_tol);
        match settings.mode {
            Mode::Constant | Mode::Full => {
                let (mode, name) =
                    if settings.mode == Mode::Full { (SearchMode::Full, "full") } else { (SearchMode::Constant, "constant") };
                let res = synthesize_polynomial(space, map, k, mode, tol).map_err(|e| e.to_string())?;
                search_result(&mut report, &res, name, k, tol);
                if let Some(cert) = &res.certificate {
                    let v = verify_polynomial(space, map, cert).map_err(|e| e.to_string())?;
                    report.push(
                        Section::new("certificate")
                            .lines(certificate_toml(cert, None).lines().map(str::to_string))
                            .data(json!({ "toml": certificate_toml(cert, None) })),
                    );
                    report.push(Section::new("re-verification").lines(verdict_lines(&v, space.len(), false)).data(&v));
                    report.check(v.passed(), "re-verification of the synthesized certificate");
                }
            }
            Mode::Almost => {
                let res = synthesize_almost(space, map, k, tol).map_err(|e| e.to_string())?;
                search_result(&mut report, &res, "almost", k, tol);
                if let Some(cert) = &res.certificate {
                    let v = verify_almost_polynomial(space, map, cert).map_err(|e| e.to_string())?;
                    let text = certificate_toml(cert.polynomial(), Some(cert.l()));
                    report.push(
                        Section::new("certificate")
                            .lines(text.lines().map(str::to_string))
                            .data(json!({ "toml": text })),
                    );
                    report.push(Section::new("re-verification").lines(verdict_lines(&v, space.len(), false)).data(&v));
                    report.check(v.passed(), "re-verification of the synthesized certificate");
                }
            }
        }
        Ok(())
    })();
    finish(&mut report, result);
    report
}
