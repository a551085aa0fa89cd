//! Built-in example documents and their end-to-end pipelines. Each pipeline
//! validates, verifies, iterates and checks bounds, then lines computed values
//! up against the expected ones.

use serde_json::json;

use super::commands::{
    build, finish, iterate_on, load, map_section_finite, map_section_grid, pair, verify_on, Input, Settings, Step,
};
use super::document::{Kind, Problem, ProblemDocument};
use super::report::{fields, records, table, Report, Section};
use crate::contraction::{almost_polynomial_terms, polynomial_terms, verify_banach, RatioBound};
use crate::mapping::{grid_jump, is_picard_continuous, is_weakly_picard, Mapping, PiecewiseMap};
use crate::metricspace::{validate_metric, IntervalGridSpace, MetricVerdict, MetricViolation};
use crate::rational::Rational;

/// `(name, document source)` for every compiled-in document.
pub const DOCUMENTS: &[(&str, &str)] = &[
    ("ex2.7", include_str!("../../demos/ex2.7.toml")),
    ("ex2.7-nonmetric", include_str!("../../demos/ex2.7-nonmetric.toml")),
    ("ex2.9", include_str!("../../demos/ex2.9.toml")),
    ("ex2.10", include_str!("../../demos/ex2.10.toml")),
    ("ex3.6", include_str!("../../demos/ex3.6.toml")),
    ("ex3.7", include_str!("../../demos/ex3.7.toml")),
];

/// Names accepted by `demo`.
pub const DEMOS: &[&str] = &["ex2.7", "ex2.9", "ex2.10", "ex3.6", "ex3.7"];

pub fn document(name: &str) -> Option<Input> {
    DOCUMENTS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, src)| Input { name: format!("demo:{n}"), source: src.to_string() })
}

fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn q(s: &str) -> Rational {
    s.parse().expect("demo literal")
}

fn mark(ok: bool) -> String {
    if ok { "ok" } else { "MISMATCH" }.to_string()
}

pub fn run(name: &str, settings: &Settings) -> Report {
    let Some(input) = document(name).filter(|_| DEMOS.contains(&name)) else {
        let mut report = Report::new("demo", name, name.as_bytes());
        report.reject(format!("unknown demo {name:?}; expected one of {}", DEMOS.join(", ")));
        return report;
    };
    let mut report = Report::new("demo", &input.name, input.source.as_bytes());
    let Some(doc) = load(&mut report, &input) else { return report };
    let Some(problem) = build(&mut report, &doc) else { return report };
    let result = match (name, &problem) {
        ("ex2.7", Problem::Finite { space, map: Some(map) }) => ex27(&mut report, &doc, space, map, settings),
        ("ex3.6", Problem::Finite { space, map: Some(map) }) => ex36(&mut report, &doc, space, map, settings),
        ("ex2.9", Problem::Interval { space, map: Some(map) }) => ex29(&mut report, space, map, settings),
        ("ex2.10", Problem::Interval { space, map: Some(map) }) => ex210(&mut report, &doc, space, map, settings),
        ("ex3.7", Problem::Interval { space, map: Some(map) }) => ex37(&mut report, &doc, space, map, settings),
        _ => Err(format!("demo {name} has an unexpected document shape")),
    };
    finish(&mut report, result);
    report
}

fn metric_section(r: &mut Report, space: &crate::metricspace::FiniteMetricSpace) -> Step<()> {
    let v = validate_metric(space.matrix(), space.labels()).map_err(|e| e.to_string())?;
    r.push(Section::new("metric").line(format!("valid metric: {}", v.is_valid())).data(json!({ "valid": v.is_valid() })));
    r.check(v.is_valid(), "metric axioms");
    Ok(())
}

fn ex27(
    r: &mut Report,
    doc: &ProblemDocument,
    space: &crate::metricspace::FiniteMetricSpace,
    map: &crate::mapping::TableMap,
    settings: &Settings,
) -> Step<()> {
    metric_section(r, space)?;

    // d + a0 is not a metric
    let other = document("ex2.7-nonmetric").ok_or("missing nonmetric document")?;
    let other = ProblemDocument::parse(&other.source).map_err(|e| e.to_string())?;
    let (labels, dist) = match &other.space {
        super::document::SpaceSpec::Finite { labels, dist } => (labels, dist),
        _ => return Err("nonmetric document must be finite".into()),
    };
    let verdict = validate_metric(dist, labels).map_err(|e| e.to_string())?;
    let (found, ok) = match &verdict {
        MetricVerdict::Invalid(v @ MetricViolation::Triangle { from, via, to, direct, detour }) => {
            let ok = (*from, *via, *to) == (1, 0, 3) && *direct == int(7) && *detour == int(6);
            (v.describe(labels), ok)
        }
        MetricVerdict::Invalid(v) => (v.describe(labels), false),
        MetricVerdict::Valid => ("valid".to_string(), false),
    };
    r.push(
        Section::new("d + a0 as a metric")
            .lines(fields(&[
                ("expected", "triangle (x2, x1, x4): 7 > 6".to_string()),
                ("computed", found.clone()),
                ("match", mark(ok)),
            ]))
            .data(json!({ "computed": found, "match": ok })),
    );
    r.check(ok, "d + a0 triangle witness");

    // pair table
    let family = doc.family().map_err(|e| e.to_string())?.ok_or("missing family")?;
    let expected = [((0, 1), 3, 4), ((0, 2), 2, 3), ((1, 2), 3, 4), ((1, 3), 3, 7), ((2, 3), 2, 3)];
    let mut rows = Vec::new();
    let mut all = true;
    for ((p, qq), el, er) in expected {
        let (lhs, rhs) = polynomial_terms(space, map, &family, &p, &qq).map_err(|e| e.to_string())?;
        let ok = lhs == int(el) && rhs == int(er);
        all &= ok;
        rows.push(vec![
            format!("({}, {})", space.labels()[p], space.labels()[qq]),
            el.to_string(),
            lhs.to_string(),
            er.to_string(),
            rhs.to_string(),
            (&lhs / &rhs).to_string(),
            mark(ok),
        ]);
    }
    r.push(
        Section::new("pair table: a0(Tx,Ty) + d(Tx,Ty) vs a0(x,y) + d(x,y)")
            .lines(table(&["pair", "lhs exp", "lhs", "rhs exp", "rhs", "ratio", "match"], &rows))
            .data(records(&["pair", "lhs_expected", "lhs", "rhs_expected", "rhs", "ratio", "match"], &rows)),
    );
    r.check(all, "pair table");

    verify_on(r, space, map, doc, Kind::Polynomial)?;

    let banach = verify_banach(space, map).map_err(|e| e.to_string())?;
    let ok = matches!(&banach, RatioBound::Bounded { ratio, .. } if *ratio == int(1));
    let at = match &banach {
        RatioBound::Bounded { witness: Some(w), .. } | RatioBound::Unbounded { witness: w } => pair(w),
        RatioBound::Bounded { witness: None, .. } => "none".into(),
    };
    r.push(
        Section::new("banach")
            .lines(fields(&[
                ("expected ratio", "1 (no Banach certificate)".to_string()),
                ("computed ratio", banach.ratio().map_or("unbounded".into(), |x| x.to_string())),
                ("attained at", at),
                ("match", mark(ok)),
            ]))
            .data(&banach),
    );
    r.check(ok, "Lipschitz ratio equals 1");

    map_section_finite(r, space.labels(), map);
    let cert = super::commands::polynomial_certificate(doc, Kind::Polynomial)?;
    let all_starts: Vec<usize> = (0..space.len()).collect();
    let traces = iterate_on(r, space, map, &all_starts, settings, Some(&cert), false)?;
    let ok = traces.iter().all(|t| t.limit == Some(0) && t.steps_to_limit().is_some_and(|s| s <= 3));
    r.check(ok, "every orbit reaches x1 within 3 steps");

    let sigma = traces[1].bound_params.as_ref().map(|b| b.sigma_j0.clone());
    let ok = sigma == Some(int(4));
    r.push(
        Section::new("sigma from x2")
            .lines(fields(&[
                ("expected", "4".to_string()),
                ("computed", sigma.map_or("-".into(), |s| s.to_string())),
                ("match", mark(ok)),
            ]))
            .data(json!({ "match": ok })),
    );
    r.check(ok, "sigma from x2");
    Ok(())
}

fn ex36(
    r: &mut Report,
    doc: &ProblemDocument,
    space: &crate::metricspace::FiniteMetricSpace,
    map: &crate::mapping::TableMap,
    settings: &Settings,
) -> Step<()> {
    metric_section(r, space)?;
    let (cert, _) = super::commands::almost_certificate(doc)?;
    let mut rows = Vec::new();
    let mut all = true;
    for (p, qq) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
        let (lhs, rhs) = almost_polynomial_terms(space, map, &cert, &p, &qq).map_err(|e| e.to_string())?;
        let ok = lhs == int(2) && rhs == int(3);
        all &= ok;
        rows.push(vec![
            format!("({}, {})", space.labels()[p], space.labels()[qq]),
            "2".into(),
            lhs.to_string(),
            "3".into(),
            rhs.to_string(),
            mark(ok),
        ]);
    }
    r.push(
        Section::new("pair table: d + d^2 at (Tx,Ty) vs d + L1 d(y,Tx) + d^2 + L2 d^2(y,Tx)")
            .lines(table(&["pair", "lhs exp", "lhs", "rhs exp", "rhs", "match"], &rows))
            .data(records(&["pair", "lhs_expected", "lhs", "rhs_expected", "rhs", "match"], &rows)),
    );
    r.check(all, "pair table");

    verify_on(r, space, map, doc, Kind::AlmostPolynomial)?;
    map_section_finite(r, space.labels(), map);
    let wp = is_weakly_picard(map);
    let ok = wp.holds && wp.fixed_points == [0, 1];
    r.check(ok, "fixed points {x1, x2} and weakly Picard");

    let traces = iterate_on(r, space, map, &[2, 1], settings, None, false)?;
    let limits: Vec<Option<usize>> = traces.iter().map(|t| t.limit).collect();
    let ok = limits == [Some(0), Some(1)];
    r.push(
        Section::new("two limits")
            .lines(fields(&[
                ("expected", "x3 -> x1, x2 -> x2".to_string()),
                (
                    "computed",
                    format!(
                        "x3 -> {}, x2 -> {}",
                        traces[0].limit_label().unwrap_or("none"),
                        traces[1].limit_label().unwrap_or("none")
                    ),
                ),
                ("match", mark(ok)),
            ]))
            .data(json!({ "match": ok })),
    );
    r.check(ok, "orbits from x3 and x2 reach different fixed points");
    Ok(())
}

fn ex29(r: &mut Report, space: &IntervalGridSpace, map: &PiecewiseMap, settings: &Settings) -> Step<()> {
    let (a, b) = (space.lo().clone(), space.hi().clone());
    let t = map.to_table(space).map_err(|e| e.to_string())?;
    let pc = is_picard_continuous(&t);
    let a_index = space.grid_index(&a).ok_or("lo is a grid point")?;
    let settled = (0..t.len()).all(|z| t.image(t.image(z)) == a_index);
    r.push(
        Section::new("picard-continuity on the grid")
            .lines(fields(&[
                ("picard-continuous", pc.holds.to_string()),
                ("T^2 z = a for all grid z", settled.to_string()),
            ]))
            .data(json!({ "picard_continuous": pc.holds, "settles_at_a": settled })),
    );
    r.check(pc.holds, "grid Picard-continuity");
    r.check(settled, "T^2 z = a on the grid");

    // the jump at b survives refinement; elsewhere it vanishes
    let expected = map.apply(space, &b).map_err(|e| e.to_string())? - &a;
    let mut rows = Vec::new();
    let mut all = true;
    for n in [11, 101, 1001] {
        let g = IntervalGridSpace::new(a.clone(), b.clone(), n).map_err(|e| e.to_string())?;
        let g_map = PiecewiseMap::new(&g, map.branches().to_vec()).map_err(|e| e.to_string())?;
        let at_b = grid_jump(&g, &g_map, n - 1).map_err(|e| e.to_string())?;
        let mut away = Rational::zero();
        for t in 0..n - 2 {
            away = away.max(grid_jump(&g, &g_map, t).map_err(|e| e.to_string())?);
        }
        let ok = at_b == expected && away.is_zero();
        all &= ok;
        rows.push(vec![n.to_string(), expected.to_string(), at_b.to_string(), away.to_string(), mark(ok)]);
    }
    r.push(
        Section::new("continuity at b")
            .lines(table(&["grid", "jump at b exp", "jump at b", "max jump below b - h", "match"], &rows))
            .data(records(&["grid", "jump_at_b_expected", "jump_at_b", "max_jump_elsewhere", "match"], &rows)),
    );
    r.check(all, "discontinuity at b");

    let start = b.clone();
    iterate_on(r, space, map, &[start], settings, None, false)?;
    Ok(())
}

fn ex210(
    r: &mut Report,
    doc: &ProblemDocument,
    space: &IntervalGridSpace,
    map: &PiecewiseMap,
    settings: &Settings,
) -> Step<()> {
    verify_on(r, space, map, doc, Kind::Polynomial)?;
    map_section_grid(r, space, map);
    let cert = super::commands::polynomial_certificate(doc, Kind::Polynomial)?;
    let traces = iterate_on(r, space, map, &[Rational::one()], settings, Some(&cert), false)?;
    let expected = [int(1), int(0), q("1/4"), q("1/4")];
    let ok = traces[0].iterates == expected;
    r.push(
        Section::new("orbit from 1")
            .lines(fields(&[
                ("expected", "1, 0, 1/4, 1/4".to_string()),
                ("computed", traces[0].labels.join(", ")),
                ("match", mark(ok)),
            ]))
            .data(json!({ "match": ok })),
    );
    r.check(ok, "orbit from 1 reaches 1/4");
    Ok(())
}

fn ex37(
    r: &mut Report,
    doc: &ProblemDocument,
    space: &IntervalGridSpace,
    map: &PiecewiseMap,
    settings: &Settings,
) -> Step<()> {
    verify_on(r, space, map, doc, Kind::AlmostPolynomial)?;
    let (cert, _) = super::commands::almost_certificate(doc)?;
    let (x, y) = (Rational::zero(), Rational::one());
    let (lhs, _) = almost_polynomial_terms(space, map, &cert, &x, &y).map_err(|e| e.to_string())?;
    let tx = map.apply(space, &x).map_err(|e| e.to_string())?;
    let e = (&y - &tx).abs();
    let ok = lhs == q("3/4") && e == q("3/4");
    r.push(
        Section::new("tight case x < 1, y = 1")
            .lines(table(
                &["x", "y", "lhs exp", "lhs", "d(y,Tx) exp", "d(y,Tx)", "match"],
                &[vec![x.to_string(), y.to_string(), "3/4".into(), lhs.to_string(), "3/4".into(), e.to_string(), mark(ok)]],
            ))
            .data(json!({ "lhs": lhs, "d_y_tx": e, "match": ok })),
    );
    r.check(ok, "tight case lhs = d(y,Tx) = 3/4");
    map_section_grid(r, space, map);
    let traces = iterate_on(r, space, map, &[Rational::one()], settings, None, false)?;
    r.check(traces[0].limit == Some(q("1/4")), "orbit from 1 reaches 1/4");
    Ok(())
}
