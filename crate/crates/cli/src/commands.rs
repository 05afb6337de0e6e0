use std::io::Write;
use std::path::{Path, PathBuf};

use num_traits::ToPrimitive;
use serde_json::{json, Value};

use qexp_core::cells::{check_norm_description, check_partition, Domain, PartitionReport};
use qexp_core::dsl::{format_expr, parse_expr, parse_poly, PolyExpr};
use qexp_core::expsums::{
    bound_check, decay_sweep, exp_sum, looks_dominant, normalized_kloosterman, singular_series_levels, CharacterValue,
};
use qexp_core::oracle::{monte_carlo_integrate, riemann_integrate_on, stabilization_check};
use qexp_core::qexp::integrate_explicit_tower;
use qexp_core::{PadicScalar, PrimeContext, Rational};

use crate::cert::{scalar, Certificate};
use crate::config::{parse_range, Command, RunConfig};
use crate::error::{CliError, CliResult};

const MAX_DEFAULT_LEVEL: u32 = 8;
const VIOLATION_DUMP: usize = 20;

pub fn run(cmd: &Command, cfg: &RunConfig) -> CliResult<()> {
    match cmd {
        Command::Parse { expr } => {
            println!("{}", format_expr(&parse_expr(expr)?));
            Ok(())
        }
        Command::Integrate(_) => integrate(cfg),
        Command::CellsCheck(_) => cells_check(cfg),
        Command::Oracle(_) => oracle(cfg),
        Command::Expsum(_) => expsum(cfg),
        Command::Kloosterman(_) => kloosterman(cfg),
        Command::Singular(_) => singular(cfg),
        Command::Decay(_) => decay(cfg),
    }
}

struct Output<'a> {
    dir: Option<&'a Path>,
    name: &'a str,
}

impl Output<'_> {
    fn new<'a>(cfg: &'a RunConfig, name: &'a str) -> Output<'a> {
        Output { dir: cfg.out.as_deref(), name }
    }

    fn path(&self, ext: &str) -> CliResult<Option<PathBuf>> {
        let Some(dir) = self.dir else { return Ok(None) };
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Some(dir.join(format!("{}.{ext}", self.name))))
    }

    /// Prints the summary and writes it to `<out>/<name>.json`.
    fn summary(&self, value: &Value) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        // A closed stdout (e.g. piped into `head`) is not an error.
        let _ = writeln!(std::io::stdout(), "{text}");
        if let Some(path) = self.path("json")? {
            std::fs::write(&path, format!("{text}\n")).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }

    /// Writes `<out>/<name>.csv` when an output directory is set.
    fn rows(&self, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let Some(path) = self.path("csv")? else { return Ok(()) };
        let io = |e: csv::Error| CliError::Usage(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }
}

fn context(prime: Option<u64>, cfg: &RunConfig) -> CliResult<PrimeContext> {
    let p = prime.ok_or_else(|| CliError::Usage("no prime given; use --prime or `prime` in the config".into()))?;
    Ok(PrimeContext::new(p, 1)?.with_budget(cfg.budget))
}

/// The prime from flags or config, else from the certificate; they must agree.
fn certificate_context(cfg: &RunConfig) -> CliResult<(Certificate, PrimeContext)> {
    let path = cfg.payload.certificate.as_ref().ok_or_else(|| CliError::Usage("no certificate given".into()))?;
    let cert = Certificate::load(path)?;
    if let (Some(a), Some(b)) = (cfg.prime, cert.prime) {
        if a != b {
            return Err(CliError::certificate(format!("certificate is for p = {b}, run uses p = {a}")));
        }
    }
    let ctx = context(cfg.prime.or(cert.prime), cfg)?;
    Ok((cert, ctx))
}

/// The largest level up to `MAX_DEFAULT_LEVEL` whose `p^(m n)` points fit the budget.
fn default_level(ctx: &PrimeContext, arity: usize) -> u32 {
    let fits = |m: u32| (ctx.p() as f64).powi((m as usize * arity) as i32) <= ctx.budget() as f64;
    (1..=MAX_DEFAULT_LEVEL).take_while(|m| fits(*m)).last().unwrap_or(1)
}

fn float(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn log_p(x: f64, p: u64) -> f64 {
    x.ln() / (p as f64).ln()
}

fn complex_row(label: String, m: u32, e: CharacterValue, p: u64) -> Vec<String> {
    let abs = e.norm();
    vec![label, m.to_string(), e.re.to_string(), e.im.to_string(), abs.to_string(), log_p(abs, p).to_string()]
}

fn vector(text: &str) -> CliResult<Vec<PadicScalar>> {
    text.split(',').map(|s| scalar(s.trim())).collect()
}

fn integers<T: std::str::FromStr>(text: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| CliError::Parse(format!("not an integer list: `{text}`"))))
        .collect()
}

fn join(v: &[PadicScalar]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

struct Map {
    fs: Vec<PolyExpr>,
    arity: usize,
    sources: Vec<String>,
}

fn map(cfg: &RunConfig) -> CliResult<Map> {
    let sources = cfg.payload.map.clone();
    if sources.is_empty() {
        return Err(CliError::Usage("no map given; use --map or `map` in the config".into()));
    }
    let fs = sources.iter().map(|s| parse_poly(s)).collect::<Result<Vec<_>, _>>()?;
    let needed = fs.iter().map(PolyExpr::arity).max().unwrap_or(0).max(1);
    let arity = cfg.payload.arity.unwrap_or(needed);
    if arity < needed {
        return Err(CliError::Usage(format!("the map reads {needed} variables but arity is {arity}")));
    }
    Ok(Map { fs, arity, sources })
}

fn partition_json(r: &PartitionReport) -> Value {
    json!({
        "ok": r.ok,
        "level": r.level,
        "checked": r.checked,
        "ambiguous": r.ambiguous,
        "violation_count": r.violation_count,
        "violations": r.violations.iter().take(VIOLATION_DUMP).map(|v| json!({
            "point": v.point, "in_domain": v.in_domain, "cells": v.cells,
        })).collect::<Vec<_>>(),
    })
}

fn partition_failure(report: &PartitionReport) -> CliError {
    CliError::Certificate {
        message: format!("certificate fails the partition check with {} violations", report.violation_count),
        dump: Some(serde_json::to_string_pretty(&partition_json(report)).expect("JSON values serialize")),
    }
}

fn integrate(cfg: &RunConfig) -> CliResult<()> {
    let (cert, ctx) = certificate_context(cfg)?;
    if !cert.has_terms() {
        return Err(CliError::certificate("certificate has no integrand terms"));
    }
    let arity = cert.cert.arity();
    let level = cfg.payload.level.unwrap_or_else(|| default_level(&ctx, arity));
    let report = check_partition(&cert.cert, level, &ctx)?;
    if !report.ok {
        return Err(partition_failure(&report));
    }
    let (value, integrable) = integrate_explicit_tower(&cert.terms(ctx.p())?, &cert.cert, &ctx)?;
    let real_value = value.real_value() + 0.0;
    let mut summary = json!({
        "prime": ctx.p(),
        "closed_form": value.to_string(),
        "real_value": real_value,
        "integrable": integrable,
        "partition": { "level": level, "checked": report.checked, "ambiguous": report.ambiguous },
        "oracle_value": null,
        "oracle_level": null,
        "oracle_ambiguous": null,
        "abs_diff": null,
    });
    if let Some(src) = &cfg.payload.integrand {
        let e = parse_expr(src)?;
        let r = riemann_integrate_on(&e, &cert.cert.domain, level, &ctx)?;
        let oracle_value = r.value.real_value();
        summary["oracle_value"] = json!(oracle_value);
        summary["oracle_level"] = json!(level);
        summary["oracle_ambiguous"] = json!(r.ambiguous_count);
        if integrable {
            summary["abs_diff"] = json!((real_value - oracle_value).abs());
        }
    }
    Output::new(cfg, "integrate").summary(&summary)
}

fn cells_check(cfg: &RunConfig) -> CliResult<()> {
    let (cert, ctx) = certificate_context(cfg)?;
    let level = cfg.payload.level.unwrap_or_else(|| default_level(&ctx, cert.cert.arity()).min(6));
    let partition = check_partition(&cert.cert, level, &ctx)?;
    let mut ok = partition.ok;
    let mut descriptions = Vec::new();
    for (j, f) in cert.cert.functions.iter().enumerate() {
        let r = check_norm_description(f, &cert.cert, level, &ctx)?;
        ok &= r.ok;
        descriptions.push(json!({
            "function": j,
            "ok": r.ok,
            "checked": r.checked,
            "ambiguous": r.ambiguous,
            "mismatch_count": r.mismatch_count,
            "missing_cells": r.missing_cells,
            "mismatches": r.mismatches.iter().take(VIOLATION_DUMP).map(|m| json!({
                "cell": m.cell, "point": m.point, "lhs": m.lhs.to_string(), "rhs": m.rhs.to_string(),
            })).collect::<Vec<_>>(),
        }));
    }
    let measures = cert
        .cert
        .cells
        .iter()
        .map(|c| c.measure(&ctx).map(|m| m.to_string()).map_err(CliError::from))
        .collect::<CliResult<Vec<_>>>()
        .unwrap_or_default();
    let summary = json!({
        "prime": ctx.p(),
        "ok": ok,
        "partition": partition_json(&partition),
        "cell_measures": measures,
        "descriptions": descriptions,
    });
    Output::new(cfg, "cells-check").summary(&summary)?;
    if ok {
        Ok(())
    } else {
        Err(CliError::certificate("certificate verification failed"))
    }
}

fn oracle(cfg: &RunConfig) -> CliResult<()> {
    let src = cfg.payload.integrand.as_ref().ok_or_else(|| CliError::Usage("no integrand given".into()))?;
    let e = parse_expr(src)?;
    let (domain, ctx) = match &cfg.payload.certificate {
        Some(_) => {
            let (cert, ctx) = certificate_context(cfg)?;
            (cert.cert.domain, ctx)
        }
        None => {
            let ctx = context(cfg.prime, cfg)?;
            (Domain::Box { arity: cfg.payload.arity.unwrap_or(e.arity().max(1)) }, ctx)
        }
    };
    let arity = domain.arity();
    let (m1, m2) = match &cfg.payload.m_range {
        Some(r) => parse_range(r)?,
        None => {
            let m = cfg.payload.level.unwrap_or_else(|| default_level(&ctx, arity));
            (m, m)
        }
    };
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    let mut series = Vec::new();
    for m in m1..=m2 {
        let r = riemann_integrate_on(&e, &domain, m, &ctx)?;
        let real = r.value.real_value();
        series.push((m, real));
        rows.push(vec![
            m.to_string(),
            r.value.to_string(),
            real.to_string(),
            r.ambiguous_count.to_string(),
            r.points.to_string(),
        ]);
        levels.push(json!({
            "m": m, "value": r.value.to_string(), "real_value": real,
            "ambiguous": r.ambiguous_count, "points": r.points,
        }));
    }
    let stable = if series.len() >= 3 { Some(stabilization_check(&series, ctx.p())?) } else { None };
    let monte_carlo = match cfg.payload.samples {
        Some(s) if matches!(domain, Domain::Box { .. }) => {
            let mc_ctx = PrimeContext::new(ctx.p(), m2)?.with_budget(ctx.budget());
            let (mean, stderr) = monte_carlo_integrate(&e, arity, s, cfg.seed, &mc_ctx)?;
            json!({ "samples": s, "seed": cfg.seed, "level": m2, "mean": mean, "stderr": stderr })
        }
        Some(_) => return Err(CliError::Usage("Monte-Carlo estimates are only available on Z_p^n".into())),
        None => Value::Null,
    };
    let out = Output::new(cfg, "oracle");
    out.rows(&["m", "value", "real_value", "ambiguous", "points"], &rows)?;
    out.summary(&json!({
        "prime": ctx.p(),
        "integrand": format_expr(&e),
        "arity": arity,
        "levels": levels,
        "stable": stable,
        "monte_carlo": monte_carlo,
    }))
}

fn expsum(cfg: &RunConfig) -> CliResult<()> {
    let ctx = context(cfg.prime, cfg)?;
    let m = map(cfg)?;
    if cfg.payload.y.is_empty() {
        return Err(CliError::Usage("no y given; use --y or `y` in the config".into()));
    }
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for text in &cfg.payload.y {
        let y = vector(text)?;
        let r = exp_sum(&m.fs, m.arity, &y, &ctx)?;
        rows.push(complex_row(join(&y), r.level, r.value, ctx.p()));
        results.push(json!({
            "y": join(&y), "m": r.level, "re": r.value.re, "im": r.value.im, "abs": r.value.norm(),
        }));
    }
    let out = Output::new(cfg, "expsum");
    out.rows(&["y", "m", "re", "im", "abs", "log_p_abs"], &rows)?;
    out.summary(&json!({ "prime": ctx.p(), "map": m.sources, "arity": m.arity, "results": results }))
}

fn kloosterman(cfg: &RunConfig) -> CliResult<()> {
    let ctx = context(cfg.prime, cfg)?;
    let m = map(cfg)?;
    let a_grid = cfg.payload.a.iter().map(|s| integers::<i64>(s)).collect::<CliResult<Vec<_>>>()?;
    let m_grid = cfg.payload.m.iter().map(|s| integers::<u32>(s)).collect::<CliResult<Vec<_>>>()?;
    if a_grid.is_empty() || m_grid.is_empty() {
        return Err(CliError::Usage("kloosterman needs at least one --a and one --m".into()));
    }
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for a in &a_grid {
        for levels in &m_grid {
            let e = normalized_kloosterman(&m.fs, m.arity, a, levels, &ctx)?;
            let label = |v: &[String]| v.join(",");
            let a_text = label(&a.iter().map(|x| x.to_string()).collect::<Vec<_>>());
            let m_text = label(&levels.iter().map(|x| x.to_string()).collect::<Vec<_>>());
            let top = levels.iter().copied().max().unwrap_or(0);
            let mut row = complex_row(a_text.clone(), top, e, ctx.p());
            row.insert(1, m_text.clone());
            rows.push(row);
            results.push(json!({ "a": a_text, "levels": m_text, "re": e.re, "im": e.im, "abs": e.norm() }));
        }
    }
    let out = Output::new(cfg, "kloosterman");
    out.rows(&["a", "levels", "m", "re", "im", "abs", "log_p_abs"], &rows)?;
    out.summary(&json!({ "prime": ctx.p(), "map": m.sources, "arity": m.arity, "results": results }))
}

/// Every vector in `{0..p-1}^r`, in lexicographic order.
fn residue_grid(p: u64, r: usize) -> Vec<Vec<PadicScalar>> {
    let mut out = vec![Vec::new()];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|v| (0..p).map(move |d| [v.clone(), vec![PadicScalar::from(d)]].concat()))
            .collect();
    }
    out
}

fn singular(cfg: &RunConfig) -> CliResult<()> {
    let ctx = context(cfg.prime, cfg)?;
    let m = map(cfg)?;
    let (m1, m2) = parse_range(cfg.payload.m_range.as_deref().unwrap_or("1:4"))?;
    let grid = if cfg.payload.z.is_empty() {
        residue_grid(ctx.p(), m.fs.len())
    } else {
        cfg.payload.z.iter().map(|s| vector(s)).collect::<CliResult<_>>()?
    };
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for z in &grid {
        let rep = singular_series_levels(&m.fs, m.arity, z, m1..=m2, &ctx)?;
        for (level, v) in &rep.values {
            rows.push(vec![join(z), level.to_string(), v.to_string(), float(v).to_string()]);
        }
        let last = &rep.values.last().expect("nonempty range").1;
        results.push(json!({
            "z": join(z),
            "values": rep.values.iter().map(|(l, v)| json!({ "m": l, "F": v.to_string() })).collect::<Vec<_>>(),
            "F": last.to_string(),
            "F_real": float(last),
            "stable": rep.stable,
        }));
    }
    let out = Output::new(cfg, "singular");
    out.rows(&["z", "m", "F", "F_real"], &rows)?;
    out.summary(&json!({ "prime": ctx.p(), "map": m.sources, "arity": m.arity, "results": results }))
}

fn decay(cfg: &RunConfig) -> CliResult<()> {
    let ctx = context(cfg.prime, cfg)?;
    let m = map(cfg)?;
    let (m1, m2) = match &cfg.payload.m_range {
        Some(r) => parse_range(r)?,
        None => (1, default_level(&ctx, m.arity)),
    };
    let directions = if cfg.payload.directions.is_empty() {
        vec![vec![PadicScalar::from(1i64); m.fs.len()]]
    } else {
        cfg.payload.directions.iter().map(|s| vector(s)).collect::<CliResult<_>>()?
    };
    let sweep = decay_sweep(&m.fs, m.arity, &directions, m1..=m2, &ctx)?;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut violations = 0;
    for (i, fit) in &sweep.fits {
        let label = join(&directions[*i]);
        for s in &fit.samples {
            rows.push(complex_row(label.clone(), s.m, s.value, ctx.p()));
        }
        let ok = bound_check(fit);
        violations += usize::from(!ok);
        fits.push(json!({
            "direction": label,
            "alpha_hat": fit.alpha_hat,
            "c_hat": fit.c_hat,
            "max_bound_violation": fit.max_bound_violation,
            "bound_ok": ok,
        }));
    }
    let (wi, worst) = &sweep.fits[sweep.worst];
    let out = Output::new(cfg, "decay");
    out.rows(&["direction", "m", "re", "im", "abs", "log_p_abs"], &rows)?;
    out.summary(&json!({
        "prime": ctx.p(),
        "map": m.sources,
        "arity": m.arity,
        "m_range": [m1, m2],
        "alpha_hat": worst.alpha_hat,
        "c_hat": worst.c_hat,
        "worst_direction": join(&directions[*wi]),
        "violations": violations,
        "fits": fits,
        "vanished": sweep.vanished.iter().map(|i| join(&directions[*i])).collect::<Vec<_>>(),
        "looks_dominant": looks_dominant(&m.fs, m.arity, 16, cfg.seed)?,
    }))
}
