use std::fs;
use std::path::{Path, PathBuf};

use prufer_embed::analysis::{self, fit_decay_with, sum_rule_check, Verdict, VerdictPolicy};
use prufer_embed::constants::{phase_extremum, sharp_a, sharp_b, Extremum};
use prufer_embed::embed::{embed, plan, Construction, EmbedParams};
use prufer_embed::energy::KClass;
use prufer_embed::io::{self, fmt};
use prufer_embed::par::{par_map, Exec};
use prufer_embed::potentials::{glue_multi, Activation, Coupling, GlueParams, Growth, SegmentParams, Target};
use prufer_embed::prufer::BoundaryCondition;
use prufer_embed::solver::{integrate, Stride};
use prufer_embed::verify;
use serde_json::json;

use crate::config::Config;
use crate::CliError;

pub type Outcome = Result<i32, CliError>;

fn parse_stride(s: &str) -> Result<Stride, CliError> {
    let bad = || CliError::validation(format!("stride `{s}`: expected geometric:<ratio> or every:<k>"));
    let (kind, v) = s.split_once(':').ok_or_else(bad)?;
    match kind {
        "geometric" => match v.parse::<f64>() {
            Ok(r) if r > 1.0 => Ok(Stride::Geometric(r)),
            _ => Err(bad()),
        },
        "every" => v.parse::<u64>().map(Stride::Every).map_err(|_| bad()),
        _ => Err(bad()),
    }
}

fn parse_growth(s: &str) -> Result<Option<Growth>, CliError> {
    let bad = || CliError::validation(format!("h `{s}`: expected none, log:<offset> or const:<value>"));
    if s == "none" {
        return Ok(None);
    }
    let (kind, v) = s.split_once(':').ok_or_else(bad)?;
    let x: f64 = v.parse().map_err(|_| bad())?;
    match kind {
        "log" if x > 1.0 => Ok(Some(Growth::Log { offset: x })),
        "const" if x > 0.0 => Ok(Some(Growth::Constant { value: x })),
        _ => Err(bad()),
    }
}

fn parse_coupling(s: &str) -> Result<Coupling, CliError> {
    let bad = || CliError::validation(format!("coupling `{s}`: expected gamma:<exponent> or m:<M>"));
    let (kind, v) = s.split_once(':').ok_or_else(bad)?;
    let x: f64 = v.parse().map_err(|_| bad())?;
    match kind {
        "gamma" if x > 0.0 => Ok(Coupling::Exponent(x)),
        "m" if x > 0.0 => Ok(Coupling::M(x)),
        _ => Err(bad()),
    }
}

fn parse_exec(s: &str) -> Result<Exec, CliError> {
    match s {
        "parallel" => Ok(Exec::available()),
        "sequential" => Ok(Exec::Sequential),
        _ => Err(CliError::validation(format!("exec `{s}`: expected parallel or sequential"))),
    }
}

/// `lo:hi:step` or a comma-separated list; empty means no points.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| CliError::validation(format!("grid `{s}`: {m}"));
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("expected lo:hi:step"))?;
        let [lo, hi, step] = parts[..] else {
            return Err(bad("expected lo:hi:step"));
        };
        if !(step > 0.0) || hi < lo {
            return Err(bad("need step > 0 and hi >= lo"));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| lo + step * i as f64).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad("expected numbers")))
        .collect()
}

fn policy(c: &Config) -> Result<VerdictPolicy, CliError> {
    Ok(VerdictPolicy {
        cutoff: c.get("cutoff")?,
        sigma_guard: c.get("sigma_guard")?,
        tail_tol: c.get("tail_tol")?,
        min_samples: c.get("min_samples")?,
    })
}

pub const POLICY_DEFAULTS: [(&str, &str); 4] =
    [("cutoff", "-1"), ("sigma_guard", "2"), ("tail_tol", "0.01"), ("min_samples", "50")];

fn prepare(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::validation(format!("cannot create {}: {e}", out.display())))
}

fn file(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}

pub const CONSTANTS_KEYS: [(&str, &str); 2] = [("q_min", "2"), ("q_max", "10")];

pub fn constants(c: &Config, out: &Path) -> Outcome {
    let (lo, hi): (u64, u64) = (c.get("q_min")?, c.get("q_max")?);
    if hi < lo || hi < 2 {
        return Err(CliError::validation(format!("empty q range {lo}..{hi}")));
    }
    prepare(out)?;
    let qs: Vec<u64> = (lo..=hi).filter(|&q| q != 1).collect();
    let rows = par_map(Exec::available(), &qs, |&q| -> prufer_embed::Result<Vec<String>> {
        if q == 0 {
            let a = sharp_a(0)?;
            let brute = verify::mean_abs_sin(1_000_000);
            return Ok(vec![
                "0".into(),
                fmt(a),
                fmt(brute),
                fmt((a - brute).abs()),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
        let a = sharp_a(q)?;
        let (amax, _) = phase_extremum(q, Extremum::Max)?;
        let mut row = vec![q.to_string(), fmt(a), fmt(amax), fmt((a - amax).abs())];
        if q % 2 == 1 {
            let b = sharp_b(q)?;
            let (bmin, _) = phase_extremum(q, Extremum::Min)?;
            row.extend([fmt(b), fmt(bmin), fmt((b - bmin).abs())]);
        } else {
            row.extend([String::new(), String::new(), String::new()]);
        }
        Ok(row)
    })
    .into_iter()
    .collect::<prufer_embed::Result<Vec<_>>>()?;
    let path = file(out, "constants.csv");
    io::write_table_csv(
        &path,
        &["q", "A_q", "A_brute", "A_err", "B_q", "B_brute", "B_err"],
        &rows,
        &c.echo(),
    )?;
    eprintln!("wrote {} rows to {}", rows.len(), path.display());
    Ok(0)
}

pub const EMBED_KEYS: [(&str, &str); 9] = [
    ("e", "0"),
    ("a", "2"),
    ("theta0", "0.3"),
    ("n_max", "1000000"),
    ("fit_min", "1000"),
    ("stride", "geometric:1.05"),
    ("q_max", "1000000"),
    ("tol", "1e-10"),
    ("exec", "parallel"),
];

fn embed_params(c: &Config) -> Result<EmbedParams, CliError> {
    Ok(EmbedParams {
        e: c.get("e")?,
        a: c.get("a")?,
        theta0: c.get("theta0")?,
        n_max: c.get("n_max")?,
        fit_min: c.get("fit_min")?,
        stride: parse_stride(c.raw("stride"))?,
        q_max: c.get("q_max")?,
        tol: c.get("tol")?,
        policy: policy(c)?,
    })
}

pub fn embed_cmd(c: &Config, out: &Path) -> Outcome {
    let p = embed_params(c)?;
    let pl = plan(p.e, p.a, p.q_max, p.tol)?;
    if !pl.super_critical {
        eprintln!(
            "warning: a = {} is sub-critical (a*C = {:.6} <= 1 with C = {:.6}); expecting {:?}",
            p.a,
            p.a * pl.sharp,
            pl.sharp,
            pl.predicted
        );
    }
    let run = embed(&p)?;
    prepare(out)?;
    let echo = c.echo();
    io::write_potential_csv(&file(out, "potential.csv"), &run.potential, &echo)?;
    io::write_trajectory_csv(&file(out, "trajectory.csv"), &run.trajectory, &echo)?;
    let met = run.prediction_met();
    io::write_json(
        &file(out, "report.json"),
        &json!({
            "config": c.echo_json(),
            "plan": run.plan,
            "spec": run.spec,
            "report": run.report,
            "prediction_met": met,
        }),
    )?;
    println!(
        "E={} k={:.12} ({}) via {}: beta={:.4}±{:.4} (designed {:.4}), tail={:.3e}, verdict={:?}, predicted={:?}",
        run.plan.energy.e,
        run.plan.energy.k,
        match run.plan.energy.class {
            KClass::Rational { p, q, .. } => format!("{p}/{q}"),
            KClass::Irrational => "irrational".to_string(),
        },
        match run.plan.construction {
            Construction::SignType => "sign-type",
            Construction::EvenQ => "even-q",
        },
        run.report.beta,
        run.report.stderr,
        run.plan.predicted_beta,
        run.report.tail_increment,
        run.report.verdict,
        run.plan.predicted
    );
    Ok(if met { 0 } else { 1 })
}

pub const MULTI_KEYS: [(&str, &str); 13] = [
    ("targets", ""),
    ("targets_file", ""),
    ("h", "none"),
    ("n_start", "1000"),
    ("n_max", "1000000"),
    ("b", "0"),
    ("coupling", "gamma:3"),
    ("factor", "2"),
    ("max_segments", "200"),
    ("max_doublings", "24"),
    ("fit_min", "1000"),
    ("stride", "geometric:1.05"),
    ("exec", "parallel"),
];

/// `E@theta0` pairs separated by `;`.
pub fn parse_targets(s: &str) -> Result<Vec<Target>, CliError> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (e, t) = p
                .split_once('@')
                .ok_or_else(|| CliError::validation(format!("target `{p}`: expected E@theta0")))?;
            let e: f64 = e.trim().parse().map_err(|_| CliError::validation(format!("target `{p}`")))?;
            let t: f64 = t.trim().parse().map_err(|_| CliError::validation(format!("target `{p}`")))?;
            Ok(Target { e, theta0: t })
        })
        .collect()
}

/// Lines `E theta0` (whitespace or comma separated); `#` starts a comment.
pub fn read_targets_file(path: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(|ch: char| ch == ',' || ch.is_whitespace()).filter(|x| !x.is_empty()).collect();
        if f.len() != 2 {
            return Err(CliError::validation(format!("targets file line `{line}`: expected E theta0")));
        }
        pairs.push(format!("{}@{}", f[0], f[1]));
    }
    Ok(pairs.join(";"))
}

pub fn multi_embed(c: &mut Config, out: &Path) -> Outcome {
    // the resolved targets are echoed inline so the artifact stands alone
    let tf = c.raw("targets_file").to_string();
    if !tf.is_empty() {
        if !c.raw("targets").is_empty() {
            return Err(CliError::validation("give targets or targets_file, not both"));
        }
        let inline = read_targets_file(Path::new(&tf))?;
        c.set("targets", inline);
    }
    c.remove("targets_file");
    let targets = parse_targets(c.raw("targets"))?;
    if targets.is_empty() {
        return Err(CliError::validation("no targets given"));
    }
    let activation = match parse_growth(c.raw("h"))? {
        None => Activation::All,
        Some(h) => Activation::Streamed { h },
    };
    let params = GlueParams {
        segment: SegmentParams {
            coupling: parse_coupling(c.raw("coupling"))?,
            exec: parse_exec(c.raw("exec"))?,
            ..SegmentParams::default()
        },
        n_start: c.get("n_start")?,
        n_max: c.get("n_max")?,
        b: c.get("b")?,
        factor: c.get("factor")?,
        max_segments: c.get("max_segments")?,
        max_doublings: c.get("max_doublings")?,
        activation,
    };
    let fit_min: u64 = c.get("fit_min")?;
    let stride = parse_stride(c.raw("stride"))?;
    let pol = policy(c)?;
    let glue = glue_multi(&targets, &params)?;
    prepare(out)?;
    let echo = c.echo();
    io::write_potential_csv(&file(out, "potential.csv"), &glue.potential, &echo)?;

    let mut all = true;
    let mut summaries = Vec::new();
    for (i, t) in targets.iter().enumerate() {
        let energy = prufer_embed::energy::Energy::new(t.e)?;
        let traj = integrate(&glue.potential, energy, BoundaryCondition::new(t.theta0)?, params.n_max, stride)?;
        let report = fit_decay_with(&traj, fit_min, params.n_max, &pol)?;
        io::write_trajectory_csv(&file(out, &format!("target_{i}_trajectory.csv")), &traj, &echo)?;
        io::write_json(
            &file(out, &format!("target_{i}_report.json")),
            &json!({ "config": c.echo_json(), "target": t, "report": report }),
        )?;
        println!(
            "target {i}: E={} theta0={}: beta={:.4}±{:.4}, tail={:.3e}, verdict={:?}",
            t.e, t.theta0, report.beta, report.stderr, report.tail_increment, report.verdict
        );
        all &= report.verdict == Verdict::Ell2;
        summaries.push(json!({"e": t.e, "theta0": t.theta0, "beta": report.beta, "verdict": report.verdict}));
    }
    let n = glue.potential.len() as u64 - 1;
    let measured_a = analysis::measured_coupling(&glue.potential.values, n / 10, n);
    let energies: Vec<f64> = targets.iter().map(|t| t.e).collect();
    let sum_rule = sum_rule_check(&energies, measured_a)?;
    io::write_json(
        &file(out, "schedule.json"),
        &json!({
            "config": c.echo_json(),
            "spec": glue.spec,
            "segments": glue.reports,
            "checkpoints": glue.checkpoints,
            "activated_at": glue.activated_at,
            "envelope": glue.envelope,
            "h_compliance": glue.h_compliance,
            "measured_a": measured_a,
            "sum_rule": sum_rule,
            "targets": summaries,
        }),
    )?;
    println!(
        "{} segments, envelope max|V|(1+n) = {:.4}{}",
        glue.reports.len(),
        glue.envelope,
        glue.h_compliance.map_or(String::new(), |h| format!(", max|V|(1+n)/h = {h:.4}"))
    );
    Ok(if all { 0 } else { 1 })
}

pub const SWEEP_KEYS: [(&str, &str); 12] = [
    ("axis", "a"),
    ("grid", "0.5:2.0:0.1"),
    ("e", "0"),
    ("a", "1"),
    ("theta0", "0.3"),
    ("n_max", "1000000"),
    ("fit_min", "1000"),
    ("stride", "geometric:1.05"),
    ("q_max", "1000000"),
    ("tol", "1e-10"),
    ("seed", "0"),
    ("exec", "parallel"),
];

pub fn sweep(c: &Config, out: &Path) -> Outcome {
    let base = EmbedParams {
        e: c.get("e")?,
        a: c.get("a")?,
        ..embed_params_partial(c)?
    };
    let axis = c.raw("axis").to_string();
    if axis != "a" && axis != "e" {
        return Err(CliError::validation(format!("axis `{axis}`: expected a or e")));
    }
    let grid = parse_grid(c.raw("grid"))?;
    let exec = parse_exec(c.raw("exec"))?;
    prepare(out)?;
    let cells = par_map(exec, &grid, |&x| {
        let mut p = base;
        if axis == "a" {
            p.a = x;
        } else {
            p.e = x;
        }
        (p, embed(&p))
    });
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|(p, r)| match r {
            Ok(run) => vec![
                fmt(p.e),
                fmt(p.a),
                fmt(run.plan.energy.k),
                run.plan.energy.class.q().to_string(),
                match run.plan.construction {
                    Construction::SignType => "sign_type".into(),
                    Construction::EvenQ => "even_q".into(),
                },
                fmt(run.report.beta),
                fmt(run.report.stderr),
                fmt(run.report.tail_increment),
                verdict_str(run.report.verdict).into(),
                verdict_str(run.plan.predicted).into(),
                String::new(),
            ],
            Err(e) => {
                let mut row = vec![fmt(p.e), fmt(p.a)];
                row.extend(std::iter::repeat(String::new()).take(8));
                row.push(e.to_string());
                row
            }
        })
        .collect();
    let path = file(out, "sweep.csv");
    io::write_table_csv(
        &path,
        &["E", "a", "k", "q", "construction", "beta", "stderr", "tail", "verdict", "predicted", "error"],
        &rows,
        &c.echo(),
    )?;
    let failed = rows.iter().filter(|r| !r[10].is_empty()).count();
    eprintln!("wrote {} cells ({failed} failed) to {}", rows.len(), path.display());
    Ok(0)
}

fn embed_params_partial(c: &Config) -> Result<EmbedParams, CliError> {
    Ok(EmbedParams {
        e: 0.0,
        a: 0.0,
        theta0: c.get("theta0")?,
        n_max: c.get("n_max")?,
        fit_min: c.get("fit_min")?,
        stride: parse_stride(c.raw("stride"))?,
        q_max: c.get("q_max")?,
        tol: c.get("tol")?,
        policy: policy(c)?,
    })
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Ell2 => "ell2",
        Verdict::NotEll2 => "not_ell2",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub const ANALYZE_KEYS: [(&str, &str); 5] =
    [("input", ""), ("input2", ""), ("fit_min", "1000"), ("fit_max", "auto"), ("sums", "false")];

pub fn analyze(c: &Config, out: &Path) -> Outcome {
    let input = c.raw("input");
    if input.is_empty() {
        return Err(CliError::validation("analyze needs input=<trajectory.csv>"));
    }
    let (t, _) = io::read_trajectory_csv(Path::new(input))?;
    let fit_min: u64 = c.get("fit_min")?;
    let fit_max: u64 = c.opt("fit_max")?.unwrap_or(t.n_range.1);
    let report = fit_decay_with(&t, fit_min, fit_max, &policy(c)?)?;
    prepare(out)?;
    let mut doc = json!({ "config": c.echo_json(), "energy": t.energy, "boundary": t.boundary, "report": report });
    if c.get::<bool>("sums")? {
        let t2 = match c.raw("input2") {
            "" => None,
            p => Some(io::read_trajectory_csv(Path::new(p))?.0),
        };
        let n_max = t.n_range.1;
        let sums = analysis::oscillatory_sums(&t, t2.as_ref(), n_max)?;
        let mut names = vec!["S1"];
        let mut series: Vec<&[(u64, f64)]> = vec![&sums.s1];
        if let Some(s2) = &sums.s2 {
            names.push("S2");
            series.push(s2);
        }
        io::write_series_csv(&file(out, "sums.csv"), &names, &series, &c.echo())?;
        doc["oscillatory"] = json!({ "ratio1": sums.ratio1, "ratio2": sums.ratio2 });
        println!("S1 ratio={:.4}{}", sums.ratio1, sums.ratio2.map_or(String::new(), |r| format!(", S2 ratio={r:.4}")));
    }
    io::write_json(&file(out, "analysis.json"), &doc)?;
    println!(
        "beta={:.4}±{:.4} over [{fit_min}, {fit_max}], tail={:.3e}, verdict={}",
        report.beta,
        report.stderr,
        report.tail_increment,
        verdict_str(report.verdict)
    );
    Ok(0)
}

pub const VERIFY_KEYS: [(&str, &str); 2] = [("criteria", "all"), ("exec", "parallel")];

pub fn verify_cmd(c: &Config, out: &Path) -> Outcome {
    let exec = parse_exec(c.raw("exec"))?;
    let ids: Vec<u32> = match c.raw("criteria") {
        "all" => (1..=10).collect(),
        s => s
            .split(',')
            .map(|x| x.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::validation(format!("criteria `{s}`: expected all or a list of 1..10")))?,
    };
    let mut results = Vec::new();
    for id in ids {
        let r = verify::run_criterion(id, exec)
            .ok_or_else(|| CliError::validation(format!("no criterion {id}")))?;
        println!("{}", r.line());
        results.push(r);
    }
    prepare(out)?;
    io::write_json(&file(out, "verify.json"), &json!({ "config": c.echo_json(), "results": results }))?;
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    Ok(if failed == 0 { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("").unwrap(), Vec::<f64>::new());
        assert_eq!(parse_grid("0.5:2.0:0.1").unwrap().len(), 16);
        assert_eq!(parse_grid("1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_grid("1:0:0.1").is_err());
    }

    #[test]
    fn target_forms() {
        let t = parse_targets("1.0@0.3;-0.6@1.1").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].e, -0.6);
        assert!(parse_targets("1.0").is_err());
    }

    #[test]
    fn stride_forms() {
        assert_eq!(parse_stride("every:3").unwrap(), Stride::Every(3));
        assert!(parse_stride("geometric:0.9").is_err());
    }
}
