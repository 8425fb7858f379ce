//! JSON projections of the library's report types.
//!
//! Bounds are written as `{"value": <shortest round-trip>, "display": <7 digits>}`;
//! non-finite reals become the strings `"inf"`, `"-inf"` or `"nan"`.

use bcclace::bootstrap::{DimensionSummary, DivergenceSource, PointResult, SearchReport};
use bcclace::checks::CheckResult;
use bcclace::diagrams::DiagramBoundSet;
use bcclace::lace::{LaceBoundReport, TermValue};
use bcclace::sim::{Estimate, SimStats};
use bcclace::{BootstrapConstants, GBoundReport, RwTable, UpperBound};
use serde_json::{json, Map, Value};

pub fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn bound(u: UpperBound) -> Value {
    json!({ "value": real(u.value()), "display": u.display7() })
}

pub fn constants(k: &BootstrapConstants) -> Value {
    json!({ "k1": k.k1, "k2": k.k2, "k3": k.k3 })
}

pub fn rw_table(t: &RwTable) -> Value {
    let rows: Vec<Value> = (1..=t.nu_max())
        .map(|nu| {
            json!({
                "nu": nu,
                "eps1": bound(t.eps1(nu).expect("nu within table")),
                "eps2": bound(t.eps2(nu).expect("nu within table")),
            })
        })
        .collect();
    json!({
        "d": t.dimension().get(),
        "truncation": t.truncation(),
        "policy": t.policy().as_str(),
        "rows": rows,
    })
}

pub fn diagrams(set: &DiagramBoundSet) -> Value {
    let mut bounds = Map::new();
    for (kind, idx, v) in set.entries() {
        bounds.insert(format!("{}_{}", kind.letter(), idx), bound(v));
    }
    json!({
        "d": set.d.get(),
        "policy": set.policy.as_str(),
        "constants": constants(&set.constants),
        "bounds": bounds,
    })
}

pub fn lace(r: &LaceBoundReport, breakdown: Option<&[TermValue]>) -> Value {
    let mut v = json!({
        "pi_even": bound(r.pi_even),
        "pi_odd": bound(r.pi_odd),
        "pi_t": bound(r.pi_t),
        "pi_cos": bound(r.pi_cos),
        "two_t11": bound(r.small_t),
        "policy": r.policy().as_str(),
    });
    if let Some(terms) = breakdown {
        let rows: Vec<Value> = terms
            .iter()
            .map(|t| json!({ "formula": t.formula, "term": t.index, "value": real(t.value) }))
            .collect();
        v["breakdown"] = Value::Array(rows);
    }
    v
}

pub fn divergence(src: &DivergenceSource) -> Value {
    json!(src.to_string())
}

pub fn g_report(r: &GBoundReport, breakdown: Option<&[TermValue]>) -> Value {
    let rw: Vec<Value> = r
        .provenance
        .rw
        .iter()
        .map(|(nu, e1, e2)| json!({ "nu": nu, "eps1": bound(*e1), "eps2": bound(*e2) }))
        .collect();
    json!({
        "d": r.d.get(),
        "constants": constants(&r.constants),
        "mode": r.mode.as_str(),
        "policy": r.policy.as_str(),
        "g1": bound(r.g1),
        "g2": bound(r.g2),
        "g3": bound(r.g3),
        "max_ratio": real(r.max_ratio()),
        "verdict": r.verdict.as_str(),
        "divergence": r.divergence.as_ref().map(divergence),
        "provenance": {
            "truncation": r.provenance.truncation,
            "rw": rw,
            "diagrams": r.provenance.diagrams.as_ref().map(diagrams),
            "lace": r.provenance.lace.as_ref().map(|l| lace(l, breakdown)),
        },
    })
}

pub fn point(p: &PointResult) -> Value {
    json!({
        "d": p.d,
        "index": p.index,
        "constants": constants(&p.constants),
        "g": p.g.map(real),
        "max_ratio": real(p.max_ratio),
        "verdict": p.verdict.as_str(),
    })
}

fn dimension_summary(s: &DimensionSummary) -> Value {
    json!({
        "d": s.d,
        "evaluated": s.evaluated,
        "passing": s.passing,
        "first_pass": s.first_pass.as_ref().map(point),
        "best": s.best.as_ref().map(point),
    })
}

pub fn search(r: &SearchReport, grid: Value) -> Value {
    json!({
        "policy": r.policy.as_str(),
        "grid": grid,
        "dimensions": r.dimensions.iter().map(dimension_summary).collect::<Vec<_>>(),
        "minimal_passing_d": r.minimal_passing_d,
    })
}

pub fn check(r: &CheckResult, parameters: Value) -> Value {
    json!({
        "lemma": r.lemma.as_str(),
        "parameters": parameters,
        "points_checked": r.points_checked,
        "min_margin": real(r.min_margin),
        "worst_index": r.worst_index,
        "worst_point": r.worst_point.iter().map(|&x| real(x)).collect::<Vec<_>>(),
        "tolerance": r.tolerance,
        "pass": r.pass,
        "description": r.description,
    })
}

pub fn estimate(e: Estimate) -> Value {
    json!({ "mean": real(e.mean), "stderr": real(e.stderr) })
}

pub fn sim_stats(s: &SimStats) -> Value {
    let c = &s.config;
    let survival: Vec<Value> = (0..=c.t_max)
        .map(|t| json!({ "t": t, "estimate": estimate(s.survival(t).expect("t within horizon")) }))
        .collect();
    let two_point: Vec<Value> = s
        .two_point_entries()
        .map(|(t, x, e)| json!({ "t": t, "x": x, "estimate": estimate(e) }))
        .collect();
    json!({
        "config": {
            "d": c.d.get(),
            "p": c.p,
            "bond_probability": c.bond_probability(),
            "t_max": c.t_max,
            "trials": c.trials,
            "seed": c.seed,
            "site_budget": (c.site_budget != usize::MAX).then_some(c.site_budget),
        },
        "completed": s.counts.completed,
        "truncated": s.counts.truncated,
        "chi_trunc": estimate(s.chi_trunc()),
        "survival": survival,
        "two_point": two_point,
    })
}
