use std::path::Path;

use brwcrit_core::branching::{
    extinction_probs_with, survival_probs_with, survival_verdict, IterOptions, Method, OffspringLaw,
    Verdict, DELTA_EXTINCT, DELTA_SURVIVE,
};
use brwcrit_core::brw::BrwLaw;
use brwcrit_core::corpus::{self, BuiltKernel, Params, Produces, REGISTRY};
use brwcrit_core::critical::{
    boundary_for, check_certificate, critical_report, default_iter_options, part_a_diagnostic, BracketOptions,
    Certificate, CertificateKind, TailCertificate,
};
use brwcrit_core::genfun::{estimate_parameters, Parameter, DEFAULT_NMAX_FINITE, DEFAULT_NMAX_GENERATED};
use brwcrit_core::io::{read_kernel, KernelFile};
use brwcrit_core::sim::{estimate_survival, Censor, Mode, SimConfig, DEFAULT_G_MAX, DEFAULT_HORIZON, MIN_REPLICAS, Z99};
use brwcrit_core::{SiteVector, WeightedKernel, Window};
use clap::CommandFactory;
use serde_json::{json, Value};

use crate::output::{emit, num, Header};
use crate::{
    reproduce, CertificateArgs, Cli, Command, CriticalArgs, ExampleArgs, FixedPointArgs, FixedPointMode, Invalid,
    KindArg, MethodArg, ParamsArgs, Res, SimulateArgs, EXIT_CHECK_FAILED, EXIT_OK, EXIT_UNDECIDED,
};

/// Window used on generated kernels when none is given.
const DEFAULT_GENERATED_WINDOW: usize = 512;

pub fn dispatch(command: Command) -> Res<i32> {
    match command {
        Command::Params(a) => params(a),
        Command::FixedPoint(a) => fixed_point(a),
        Command::Critical(a) => critical(a),
        Command::Certificate(a) => certificate(a),
        Command::Simulate(a) => simulate(a),
        Command::Example(a) => example(a),
        Command::Reproduce(a) => reproduce::run(a),
    }
}

fn load(path: &Path) -> Res<BuiltKernel> {
    read_kernel(path).map_err(|e| Invalid(format!("{}: {e}", path.display())))
}

fn resolve_window(k: &WeightedKernel, requested: Option<usize>) -> Res<Window> {
    match k.num_sites() {
        Some(n) => {
            let size = requested.unwrap_or(n);
            if size > n {
                return Err(Invalid(format!("window {size} exceeds the {n} sites of the kernel")));
            }
            Ok(Window::new(size)?)
        }
        None => Ok(Window::new(requested.unwrap_or(DEFAULT_GENERATED_WINDOW))?),
    }
}

fn resolve_nmax(k: &WeightedKernel, requested: Option<usize>) -> usize {
    requested.unwrap_or(if k.is_finite() {
        DEFAULT_NMAX_FINITE
    } else {
        DEFAULT_NMAX_GENERATED
    })
}

fn check_lambda(lambda: f64) -> Res<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Invalid(format!("lambda must be positive and finite, got {lambda}")))
    }
}

fn tail_for(built: &BuiltKernel, no_tail: bool) -> Option<&TailCertificate> {
    if no_tail {
        None
    } else {
        built.tail.as_ref()
    }
}

fn boundary_note(tail: Option<&TailCertificate>, lambda: f64) -> String {
    match tail {
        Some(t) if t.valid_at(lambda) => format!("tail: {}", t.description),
        _ => "never_born".into(),
    }
}

fn params(a: ParamsArgs) -> Res<i32> {
    let built = load(&a.kernel)?;
    let k = &built.kernel;
    let w = resolve_window(k, a.window)?;
    let n_max = resolve_nmax(k, a.nmax);
    let target = a.target.unwrap_or(a.site);
    w.check(a.site)?;
    w.check(target)?;
    let ms = estimate_parameters(k, Parameter::Ms, a.site, target, n_max, w)?;
    let mw_minus = estimate_parameters(k, Parameter::MwMinus, a.site, a.site, n_max, w)?;
    let mw = estimate_parameters(k, Parameter::Mw, a.site, a.site, n_max, w)?;

    let mut header = Header::new("params", &a, None)?;
    header.resolve("window", w.size())?;
    header.resolve("nmax", n_max)?;
    header.resolve("target", target)?;
    let warnings: Vec<&String> = [&ms, &mw_minus, &mw].iter().filter_map(|e| e.warning.as_ref()).collect();
    let notes = [
        (
            "estimates",
            json!({ "ms": ms.estimate, "mw_minus": mw_minus.estimate, "mw": mw.estimate }),
        ),
        ("warnings", json!(warnings)),
        (
            "rows",
            json!("ms: roots of k^n(x, target); mw: roots of the total weight T^n(x), shared by M_w and M_w^-"),
        ),
    ];
    let mut rows = Vec::new();
    for (label, est) in [("ms", &ms), ("mw", &mw)] {
        for &(n, r) in &est.roots {
            rows.push(vec![n.to_string(), num(r), label.to_string()]);
        }
    }
    emit(a.out.as_deref(), &header.csv(&notes, &["n", "root", "which"], &rows)?)?;
    Ok(EXIT_OK)
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::Auto => Method::Auto,
        MethodArg::Picard => Method::Picard,
        MethodArg::Newton => Method::Newton,
    }
}

fn fixed_point(a: FixedPointArgs) -> Res<i32> {
    check_lambda(a.lambda)?;
    if !(a.tol > 0.0) || a.max_iter == 0 {
        return Err("tol must be positive and max-iter at least 1".into());
    }
    let built = load(&a.kernel)?;
    let k = &built.kernel;
    let w = resolve_window(k, a.window)?;
    w.check(a.site)?;
    let tail = tail_for(&built, a.no_tail);
    let boundary = boundary_for(tail, a.lambda);
    let opts = IterOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        method: a.method.map_or(default_iter_options(w.size()).method, method),
    };
    let law = BrwLaw::new(k.clone(), a.lambda)?;
    let (report, verdict) = match a.mode {
        FixedPointMode::V => {
            let h = law.h_map(w, &boundary)?;
            let report = survival_probs_with(&OffspringLaw::Brw(law), w, &boundary, &opts)?;
            let verdict = survival_verdict(&report, &h, a.site);
            (report, verdict)
        }
        FixedPointMode::Q => {
            let report = extinction_probs_with(&OffspringLaw::Brw(law), w, &boundary, &opts)?;
            let qx = report.limit.get(a.site);
            // iterates from 0 stay below q, so an unconverged run only ever proves extinction
            let verdict = if report.converged {
                if 1.0 - qx > DELTA_SURVIVE {
                    Verdict::Survives
                } else {
                    Verdict::Extinct
                }
            } else if 1.0 - qx < DELTA_EXTINCT {
                Verdict::ExtinctNumerical
            } else {
                Verdict::Undecided
            };
            (report, verdict)
        }
    };

    let mut header = Header::new("fixed-point", &a, None)?;
    header.resolve("window", w.size())?;
    header.resolve("method", opts.method)?;
    header.resolve("boundary", boundary_note(tail, a.lambda))?;
    let notes = [
        ("verdict", json!({ "site": a.site, "verdict": verdict })),
        (
            "run",
            json!({
                "converged": report.converged,
                "iterations": report.iterations,
                "residual": report.residual,
                "rate": report.rate,
                "method": report.method,
                "monotone_ok": report.monotone_ok,
            }),
        ),
    ];
    let rows: Vec<Vec<String>> = report
        .limit
        .as_slice()
        .iter()
        .enumerate()
        .map(|(x, v)| vec![x.to_string(), num(*v), report.iterations.to_string(), num(report.residual)])
        .collect();
    emit(
        a.out.as_deref(),
        &header.csv(&notes, &["site", "value", "iterations", "residual"], &rows)?,
    )?;
    Ok(if verdict == Verdict::Undecided {
        EXIT_UNDECIDED
    } else {
        EXIT_OK
    })
}

fn critical(a: CriticalArgs) -> Res<i32> {
    if !(a.tol > 0.0) || a.grid < 2 {
        return Err("tol must be positive and grid at least 2".into());
    }
    let built = load(&a.kernel)?;
    let k = &built.kernel;
    let w = resolve_window(k, a.window)?;
    w.check(a.site)?;
    let n_max = resolve_nmax(k, a.nmax);
    let tail = tail_for(&built, a.no_tail).cloned();
    let mut header = Header::new("critical", &a, None)?;
    header.resolve("window", w.size())?;
    header.resolve("nmax", n_max)?;
    header.resolve(
        "tail",
        tail.as_ref().map(|t| t.description.clone()).unwrap_or_else(|| "none".into()),
    )?;
    let opts = BracketOptions {
        n_max,
        grid_points: a.grid,
        tol: a.tol,
        tail,
        ..Default::default()
    };
    let report = critical_report(k, a.site, w, &opts)?;
    emit(a.out.as_deref(), &header.json(&report)?)?;
    // an exact value settles a finite kernel even when the windowed search gave up
    let undecided = report.lambda_w_upper.is_infinite()
        && report.lambda_w_lower.is_finite()
        && report.lambda_w_exact.is_none();
    Ok(if undecided { EXIT_UNDECIDED } else { EXIT_OK })
}

fn read_vector(path: &Path) -> Res<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text)?;
    let values = match &value {
        Value::Array(_) => value,
        Value::Object(obj) => obj
            .get("v")
            .cloned()
            .ok_or_else(|| Invalid(format!("{}: expected an array or an object with `v`", path.display())))?,
        _ => return Err(Invalid(format!("{}: expected an array of numbers", path.display()))),
    };
    Ok(serde_json::from_value(values)?)
}

fn certificate(a: CertificateArgs) -> Res<i32> {
    check_lambda(a.lambda)?;
    let built = load(&a.kernel)?;
    let k = &built.kernel;
    let (values, source) = match &a.vector {
        Some(path) => (read_vector(path)?, format!("file {}", path.display())),
        None => {
            let tail = built
                .tail
                .as_ref()
                .ok_or("this kernel has no built-in tail certificate; pass --vector")?;
            let w = resolve_window(k, a.window)?;
            let v = (0..w.size()).map(|y| tail.value(y, a.lambda)).collect();
            (v, format!("tail: {}", tail.description))
        }
    };
    if let Some(n) = k.num_sites() {
        if values.len() > n {
            return Err(Invalid(format!("{} values for a kernel with {n} sites", values.len())));
        }
    }
    let kind = match a.kind {
        KindArg::Nonlinear => CertificateKind::Nonlinear,
        KindArg::Linear => CertificateKind::Linear,
        KindArg::Iterated => CertificateKind::Iterated,
    };
    let window = values.len();
    let cert = Certificate::new(SiteVector::new(values)?, a.lambda, a.order, kind, a.site)?;
    let check = check_certificate(&cert, k)?;
    let holds = check.holds();
    let part_a = if holds {
        Some(part_a_diagnostic(k, &cert, a.site)?)
    } else {
        None
    };
    let mut header = Header::new("certificate", &a, None)?;
    header.resolve("window", window)?;
    header.resolve("source", source)?;
    let result = json!({
        "holds": holds,
        "check": check,
        "kind": kind,
        "order": a.order,
        "lambda": a.lambda,
        "window": window,
        "reachable_infimum": part_a,
    });
    emit(a.out.as_deref(), &header.json(&result)?)?;
    Ok(if holds { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn usage(sub: &str) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    cmd.find_subcommand_mut(sub)
        .map(|c| c.render_usage().to_string())
        .unwrap_or_default()
}

fn simulate(a: SimulateArgs) -> Res<i32> {
    if a.replicas < MIN_REPLICAS {
        return Err(Invalid(format!(
            "--replicas must be at least {MIN_REPLICAS}, got {}\n\n{}",
            a.replicas,
            usage("simulate")
        )));
    }
    check_lambda(a.lambda)?;
    let built = load(&a.kernel)?;
    let mode = if a.continuous {
        let horizon = a.horizon.unwrap_or(DEFAULT_HORIZON);
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Invalid(format!("--horizon must be positive, got {horizon}")));
        }
        Mode::Continuous { horizon }
    } else {
        Mode::Generations {
            g_max: a.gens.unwrap_or(DEFAULT_G_MAX),
        }
    };
    let mut cfg = SimConfig::new(a.site, mode, a.replicas, a.seed);
    cfg.p_max = a.pmax;
    cfg.local_threshold = a.local_threshold;
    cfg.validate()
        .map_err(|e| Invalid(format!("{e}\n\n{}", usage("simulate"))))?;
    if let Some(n) = built.kernel.num_sites() {
        if a.site >= n {
            return Err(Invalid(format!("site {} outside 0..{n}", a.site)));
        }
    }
    let law = BrwLaw::new(built.kernel.clone(), a.lambda)?;
    let out = estimate_survival(&law, &cfg)?;

    let mut header = Header::new("simulate", &a, Some(a.seed))?;
    header.resolve("mode", cfg.mode)?;
    let result = json!({
        "lambda": a.lambda,
        "replicas": out.replicas.len(),
        "survivors": out.survivors,
        "p_hat": out.p_hat,
        "ci_level": 0.95,
        "ci_low": out.ci95.low,
        "ci_high": out.ci95.high,
        "censored": { "cap": out.censored_cap, "horizon": out.censored_horizon },
        "local": {
            "survivors": out.local_survivors,
            "p_hat": out.local_p_hat,
            "ci_low": out.local_ci95.low,
            "ci_high": out.local_ci95.high,
            "proxy": out.local_proxy,
        },
        "ci99": out.interval(Z99),
    });
    if let Some(path) = &a.replicas_out {
        let rows: Vec<Vec<String>> = out
            .replicas
            .iter()
            .map(|r| {
                vec![
                    r.replica.to_string(),
                    r.global_alive.to_string(),
                    r.local.to_string(),
                    match r.censored {
                        Some(Censor::Cap) => "cap".into(),
                        Some(Censor::Horizon) => "horizon".into(),
                        None => String::new(),
                    },
                    r.extinction_time.map(num).unwrap_or_default(),
                    r.total_births.to_string(),
                    r.births_at_start.to_string(),
                    r.steps.to_string(),
                ]
            })
            .collect();
        let columns = [
            "replica",
            "global_alive",
            "local",
            "censored",
            "extinction_time",
            "total_births",
            "births_at_start",
            "steps",
        ];
        emit(Some(path), &header.csv(&[], &columns, &rows)?)?;
    }
    emit(a.out.as_deref(), &header.json(&result)?)?;
    Ok(EXIT_OK)
}

fn parse_params(raw: &[String]) -> Res<Params> {
    let mut params = Params::new();
    for item in raw {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Invalid(format!("parameter `{item}` is not of the form key=value")))?;
        let value = if let Ok(b) = value.parse::<bool>() {
            Value::Bool(b)
        } else if let Some(n) = value.parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
            Value::Number(n)
        } else {
            Value::String(value.to_string())
        };
        if params.insert(key.to_string(), value).is_some() {
            return Err(Invalid(format!("parameter `{key}` given twice")));
        }
    }
    Ok(params)
}

fn example(a: ExampleArgs) -> Res<i32> {
    let header = Header::new("example", &a, None)?;
    if a.list {
        emit(None, &header.json(&REGISTRY)?)?;
        return Ok(EXIT_OK);
    }
    let name = a.name.as_deref().expect("clap requires --name without --list");
    let params = parse_params(&a.param)?;
    let info = REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Invalid(format!("unknown example `{name}`; see `brwcrit example --list`")))?;
    if info.produces == Produces::Law {
        if a.emit.is_some() {
            return Err(Invalid(format!(
                "`{name}` is an offspring law, not a kernel, and has no kernel file form"
            )));
        }
        return law_rows(&header, &params, a.rows);
    }
    let built = corpus::build_kernel(name, &params)?;
    let file = KernelFile::from_kernel(&built.kernel)?;
    let mut doc = serde_json::to_value(&file)?;
    if let Value::Object(obj) = &mut doc {
        obj.insert("header".into(), header.to_value());
    }
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    emit(a.emit.as_deref(), &text)?;
    Ok(EXIT_OK)
}

/// The first offspring distributions of the half-line law, as JSON.
fn law_rows(header: &Header, params: &Params, rows: usize) -> Res<i32> {
    let mut params = params.clone();
    let dominated = match params.remove("dominated") {
        None => false,
        Some(Value::Bool(b)) => b,
        Some(v) => return Err(Invalid(format!("dominated = {v} is not a boolean"))),
    };
    if let Some(k) = params.keys().find(|k| k.as_str() != "p") {
        return Err(Invalid(format!("unknown parameter `{k}`")));
    }
    let ex = corpus::example1(corpus::death_sequence(&params)?)?;
    let law = if dominated { ex.dominated } else { ex.law };
    let listed = (0..rows)
        .map(|x| {
            let outcomes: Vec<Value> = law
                .row(x)?
                .into_iter()
                .map(|(children, p)| json!({ "children": children, "probability": p }))
                .collect();
            Ok(json!({ "site": x, "outcomes": outcomes }))
        })
        .collect::<Res<Vec<_>>>()?;
    emit(None, &header.json(&json!({ "dominated": dominated, "rows": listed }))?)?;
    Ok(EXIT_OK)
}
