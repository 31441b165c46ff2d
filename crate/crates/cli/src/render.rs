//! Plain-text tables. Numbers carry 6 significant digits; JSON output keeps
//! full precision.

use std::fmt::Write;

use crate::report::{Payload, ReportEnvelope, StructurePayload};

/// `x` rounded to 6 significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mut mag = x.abs().log10().floor() as i32;
    for _ in 0..2 {
        if !(-5..=9).contains(&mag) {
            break;
        }
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let shown: f64 = s.parse().unwrap_or(x);
        if shown != 0.0 && (shown.abs().log10().floor() as i32) > mag {
            mag += 1;
            continue;
        }
        return s;
    }
    format!("{x:.5e}")
}

fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(
        &mut out,
        &headers.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
    );
    line(
        &mut out,
        &widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>(),
    );
    for row in rows {
        line(&mut out, row);
    }
    out
}

fn list(names: &[String]) -> String {
    if names.is_empty() {
        "{}".into()
    } else {
        format!("{{{}}}", names.join(", "))
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn render_table(env: &ReportEnvelope) -> String {
    let mut out = String::new();
    match &env.payload {
        Payload::Shapley(p) => {
            let _ = writeln!(
                out,
                "Shapley values for target {} ({:?} game, {:?})",
                p.target, p.game, p.method
            );
            let mut players: Vec<_> = p.players.iter().collect();
            players.sort_by_key(|v| v.rank);
            let with_se = players.iter().any(|v| v.standard_error.is_some());
            let mut headers = vec!["rank", "variable", "phi"];
            if with_se {
                headers.push("std_err");
            }
            headers.extend(["relevance", "role"]);
            let rows: Vec<Vec<String>> = players
                .iter()
                .map(|v| {
                    let mut row = vec![v.rank.to_string(), v.name.clone(), sig6(v.value)];
                    if with_se {
                        row.push(v.standard_error.map_or("-".into(), sig6));
                    }
                    row.push(
                        serde_json::to_value(v.relevance)
                            .map_or(String::new(), |x| x.as_str().unwrap_or_default().to_owned()),
                    );
                    row.push(v.role.clone());
                    row
                })
                .collect();
            out.push_str(&table(&headers, &rows));
            let _ = writeln!(
                out,
                "v(empty) = {}, v(all) = {}",
                sig6(p.baseline),
                sig6(p.grand_value)
            );
            let _ = writeln!(out, "summands: {}", p.summand_count);
            if let Some(samples) = p.samples {
                let _ = writeln!(
                    out,
                    "samples: {samples}, seed: {}",
                    env.seed.unwrap_or_default()
                );
                if !p.stratified_on.is_empty() {
                    let _ = writeln!(
                        out,
                        "stratified on {} ({} strata)",
                        list(&p.stratified_on),
                        p.strata.unwrap_or_default()
                    );
                }
            }
            let _ = writeln!(out, "efficiency residual: {}", sig6(p.efficiency_residual));
        }
        Payload::Structure(s) => match s {
            StructurePayload::MarkovBoundary {
                target,
                markov_boundary,
                parents,
                children,
                spouses,
            } => {
                let _ = writeln!(
                    out,
                    "Markov boundary of {target}: {}",
                    list(markov_boundary)
                );
                let _ = writeln!(out, "  parents:  {}", list(parents));
                let _ = writeln!(out, "  children: {}", list(children));
                let _ = writeln!(out, "  spouses:  {}", list(spouses));
            }
            StructurePayload::Dsep {
                x,
                y,
                given,
                d_separated,
            } => {
                let _ = writeln!(
                    out,
                    "{x} and {y} given {}: d-separated: {d_separated}",
                    list(given)
                );
            }
            StructurePayload::Relevance { target, variables } => {
                let _ = writeln!(out, "Relevance to {target}");
                let rows: Vec<Vec<String>> = variables
                    .iter()
                    .map(|v| {
                        let class = serde_json::to_value(v.class)
                            .ok()
                            .and_then(|x| x.as_str().map(str::to_owned))
                            .unwrap_or_default();
                        vec![v.name.clone(), class, v.role.clone()]
                    })
                    .collect();
                out.push_str(&table(&["variable", "class", "role"], &rows));
            }
            StructurePayload::Faithfulness {
                scope,
                tol,
                faithful,
                violations,
            } => {
                let _ = writeln!(
                    out,
                    "faithfulness ({scope:?} scope, tol {}): {}",
                    sig6(*tol),
                    if *faithful {
                        "no violations"
                    } else {
                        "violated"
                    }
                );
                let rows: Vec<Vec<String>> = violations
                    .iter()
                    .map(|v| {
                        vec![
                            v.x.clone(),
                            v.y.clone(),
                            list(&v.given),
                            format!("{:?}", v.kind),
                        ]
                    })
                    .collect();
                if !rows.is_empty() {
                    out.push_str(&table(&["x", "y", "given", "kind"], &rows));
                }
            }
        },
        Payload::Selection(p) => {
            let r = &p.result;
            let _ = writeln!(out, "{:?} selected {}", r.strategy, list(&r.selected_names));
            let _ = writeln!(out, "performance: {}", sig6(r.performance));
            let c = &p.comparison;
            let _ = writeln!(
                out,
                "Markov boundary {} performance: {}",
                list(&c.markov_boundary),
                sig6(c.oracle_performance)
            );
            for s in &c.strategies {
                let _ = writeln!(
                    out,
                    "gap: {}, optimal: {}, minimal: {}, missed: {}, redundant: {}",
                    sig6(s.gap),
                    s.optimal,
                    s.minimal_optimal,
                    list(&s.missed),
                    list(&s.redundant)
                );
            }
            if !r.trace.is_empty() {
                let rows: Vec<Vec<String>> = r
                    .trace
                    .iter()
                    .map(|t| {
                        let values: Vec<String> = t
                            .values
                            .iter()
                            .map(|(n, v)| format!("{n}={}", sig6(*v)))
                            .collect();
                        vec![
                            t.step.to_string(),
                            format!("{:?}", t.action),
                            t.player.clone(),
                            values.join(" "),
                        ]
                    })
                    .collect();
                out.push_str(&table(&["step", "action", "variable", "values"], &rows));
            }
        }
        Payload::Theorems(p) => {
            let _ = writeln!(out, "checks at tol {} ({:?} game)", sig6(p.tol), p.game);
            match p.faithful {
                Some(f) => {
                    let _ = writeln!(out, "model faithful for the target: {f}");
                }
                None => {
                    let _ = writeln!(out, "model faithful for the target: not checked");
                }
            }
            let mut rows: Vec<Vec<String>> = Vec::new();
            for s in &p.summand_structure {
                let zeros: Vec<String> = s.zero_at.iter().map(|z| list(z)).collect();
                rows.push(vec![
                    "summands".into(),
                    format!("{} ({:?})", s.variable, s.role),
                    format!(
                        "expected {:?}, observed {:?}{}",
                        s.expected,
                        s.observed,
                        if zeros.is_empty() {
                            String::new()
                        } else {
                            format!(", zero at {}", zeros.join(" "))
                        }
                    ),
                    verdict(s.matches).into(),
                ]);
            }
            for d in &p.dominance {
                rows.push(vec![
                    "dominance".into(),
                    format!("{} > {}", d.stronger, d.weaker),
                    format!("margin {}", sig6(d.margin)),
                    verdict(d.passed).into(),
                ]);
            }
            for a in &p.axioms.findings {
                rows.push(vec![
                    "axiom".into(),
                    format!("{:?} {}", a.axiom, a.players.join(" "))
                        .trim_end()
                        .to_owned(),
                    format!("residual {}", sig6(a.residual)),
                    verdict(a.passed).into(),
                ]);
            }
            out.push_str(&table(&["check", "instance", "detail", "result"], &rows));
            let _ = writeln!(out, "overall: {}", verdict(p.all_passed));
        }
        Payload::Prevalence(r) => {
            let _ = writeln!(
                out,
                "{} networks ({:?}, n_vars {}, edge probability {}, seed {})",
                r.records.len(),
                r.config.parameterization,
                r.config.n_vars,
                sig6(r.config.edge_probability),
                r.config.seed
            );
            let rows: Vec<Vec<String>> = [
                (
                    "E1",
                    "a non-boundary variable outranks a boundary member",
                    &r.e1,
                ),
                (
                    "E2",
                    "a non-boundary variable outranks the whole boundary",
                    &r.e2,
                ),
                ("E3", "top-|MB| ranking differs from the boundary", &r.e3),
            ]
            .into_iter()
            .map(|(name, what, f)| {
                vec![
                    name.into(),
                    f.count.to_string(),
                    sig6(f.rate),
                    format!("[{}, {}]", sig6(f.ci_low), sig6(f.ci_high)),
                    what.into(),
                ]
            })
            .collect();
            out.push_str(&table(
                &["event", "count", "rate", "95% CI", "meaning"],
                &rows,
            ));
            let failed = r.records.iter().filter(|x| !x.axioms_passed).count();
            let _ = writeln!(out, "axiom re-verification failures: {failed}");
        }
    }
    out
}
