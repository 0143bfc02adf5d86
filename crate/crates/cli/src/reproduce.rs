//! Reproduction runs for the worked examples: each check recomputes a
//! statement from scratch and reports PASS or FAIL with the numbers behind it.

use brwcrit_core::branching::{
    extinction_probs_with, ibp_irreducible, monotone_iterate_observed, Boundary, IterOptions, Method, OffspringLaw,
    Start,
};
use brwcrit_core::brw::{brw_H, BrwLaw};
use brwcrit_core::corpus::{self, DeathSequence};
use brwcrit_core::critical::{
    check_certificate, cond_u_holds, lambda_s, lambda_w_bracket, part_a_diagnostic, survival_at, BracketOptions,
    Certificate, CertificateCheck, CertificateKind, LambdaSMethod,
};
use brwcrit_core::genfun::{estimate_all, estimate_parameters, Parameter};
use brwcrit_core::{SiteVector, Window};
use serde_json::json;

use crate::output::{emit, Header};
use crate::{Invalid, ReproduceArgs, Res, EXIT_CHECK_FAILED, EXIT_OK};

type Outcome = Result<String, String>;

struct Check {
    name: &'static str,
    outcome: Outcome,
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn run(a: ReproduceArgs) -> Res<i32> {
    let checks: Vec<Check> = match a.paper_example {
        1 => example1(),
        2 => example2(),
        4 => example4(),
        n => return Err(Invalid(format!("no reproduction for example {n}; choose 1, 2 or 4"))),
    };
    let header = Header::new("reproduce", &a, None)?;
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            let (status, detail) = match &c.outcome {
                Ok(d) => ("PASS", d.clone()),
                Err(d) => ("FAIL", d.clone()),
            };
            vec![c.name.to_string(), status.to_string(), detail]
        })
        .collect();
    let passed = checks.iter().filter(|c| c.outcome.is_ok()).count();
    let notes = [("summary", json!({ "passed": passed, "checks": checks.len() }))];
    emit(a.out.as_deref(), &header.csv(&notes, &["check", "status", "detail"], &rows)?)?;
    Ok(if passed == checks.len() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn exact_iterates(max_iter: usize) -> IterOptions {
    IterOptions {
        tol: 1e-300,
        max_iter,
        method: Method::Picard,
    }
}

fn example1() -> Vec<Check> {
    vec![
        Check {
            name: "dominated_law_iterates",
            outcome: e1_dominated(),
        },
        Check {
            name: "mean_offspring_below_one",
            outcome: e1_means(),
        },
        Check {
            name: "law_is_irreducible",
            outcome: e1_irreducible(),
        },
        Check {
            name: "summable_death_rates_survive",
            outcome: e1_summable(),
        },
        Check {
            name: "harmonic_death_rates_die_out",
            outcome: e1_harmonic(),
        },
    ]
}

fn e1_dominated() -> Outcome {
    let p = DeathSequence::Geometric;
    let law = OffspringLaw::from(corpus::example1(p).map_err(fail)?.dominated);
    let w = Window::new(80).map_err(fail)?;
    let g = law.g_map(w, &Boundary::NeverBorn).map_err(fail)?;
    let mut worst = 0.0f64;
    monotone_iterate_observed(&g, Start::Zero, &exact_iterates(50), &mut |n, z| {
        for (j, zj) in z.iter().enumerate().take(21) {
            worst = worst.max((zj - corpus::example1_dominated_q(p, n, j)).abs());
        }
    })
    .map_err(fail)?;
    ensure(worst <= 1e-12, || format!("generation-n extinction off by {worst:.2e}"))?;
    Ok(format!("50 generations on types 0..=20 match the product formula within {worst:.1e}"))
}

fn e1_means() -> Outcome {
    let ex = corpus::example1(DeathSequence::Geometric).map_err(fail)?;
    // 1 - mean, summed term by term; 1 - p_x/2 itself rounds to 1 for large x
    let mut smallest = f64::INFINITY;
    for x in 0..200 {
        let deficit: f64 = ex
            .law
            .row(x)
            .map_err(fail)?
            .iter()
            .map(|(children, p)| p * (1.0 - children.iter().map(|&(_, c)| c as f64).sum::<f64>()))
            .sum();
        ensure(deficit > 0.0, || format!("type {x} has mean offspring 1 - {deficit}"))?;
        smallest = smallest.min(deficit);
    }
    Ok(format!("mean offspring below 1 on types 0..200, smallest gap {smallest:.2e}"))
}

fn e1_irreducible() -> Outcome {
    let law = OffspringLaw::from(corpus::example1(DeathSequence::Geometric).map_err(fail)?.law);
    let ok = ibp_irreducible(&law, Window::new(100).map_err(fail)?).map_err(fail)?;
    ensure(ok, || "type graph is not strongly connected on 100 types".into())?;
    Ok("type graph strongly connected on 100 types".into())
}

fn e1_summable() -> Outcome {
    let p = DeathSequence::Geometric;
    let law = OffspringLaw::from(corpus::example1(p).map_err(fail)?.law);
    let q0 = extinction_probs_with(
        &law,
        Window::new(200).map_err(fail)?,
        &corpus::example1_boundary(p),
        &IterOptions::default(),
    )
    .map_err(fail)?
    .limit
    .get(0);
    let q_dominated = 1.0 - corpus::example1_forward_survival(p, 0);
    ensure(q0 < 1.0 - 1e-3 && q0 <= q_dominated + 1e-9, || {
        format!("q(0) = {q0}, dominated law {q_dominated}")
    })?;
    Ok(format!("q(0) <= {q0:.4} (upper bound), forward-only law {q_dominated:.4}"))
}

fn e1_harmonic() -> Outcome {
    let law = OffspringLaw::from(corpus::example1(DeathSequence::Harmonic).map_err(fail)?.law);
    let g = law
        .g_map(Window::new(1100).map_err(fail)?, &Boundary::NeverBorn)
        .map_err(fail)?;
    let marks = [64usize, 256, 1024];
    let mut seen = Vec::new();
    monotone_iterate_observed(&g, Start::Zero, &exact_iterates(1024), &mut |n, z| {
        if marks.contains(&n) {
            seen.push(z[0]);
        }
    })
    .map_err(fail)?;
    ensure(seen.len() == marks.len(), || "iteration stopped early".into())?;
    for pair in seen.windows(2) {
        let (a, b) = (1.0 - pair[0], 1.0 - pair[1]);
        ensure(b < 0.75 * a, || format!("survival to generation n not decaying: {a} then {b}"))?;
    }
    Ok(format!(
        "q_n(0) = {:.4}, {:.4}, {:.4} at n = 64, 256, 1024",
        seen[0], seen[1], seen[2]
    ))
}

fn example2() -> Vec<Check> {
    vec![
        Check {
            name: "closed_form_at_origin",
            outcome: e2_closed_form(),
        },
        Check {
            name: "oscillating_roots",
            outcome: e2_roots(),
        },
        Check {
            name: "no_return_so_lambda_s_infinite",
            outcome: e2_lambda_s(),
        },
        Check {
            name: "uniformity_condition_fails",
            outcome: e2_cond_u(),
        },
    ]
}

fn e2_closed_form() -> Outcome {
    let w = Window::new(48).map_err(fail)?;
    let mut worst = 0.0f64;
    for c in [1.0f64, 2.0] {
        let k = corpus::example2_constant(c).map_err(fail)?;
        for lambda in [0.4f64, 1.7] {
            let law = BrwLaw::new(k.clone(), lambda).map_err(fail)?;
            let mut v = SiteVector::ones(w);
            let lc = (lambda * c).ln();
            for n in 1..=40 {
                v = brw_H(&law, &v).map_err(fail)?;
                // beta_n / beta_{n-r} = c^r
                let num = (n as f64 * lc).exp();
                let den = 1.0 + (1..=n).map(|r| (r as f64 * lc).exp()).sum::<f64>();
                worst = worst.max((v.get(0) - num / den).abs());
            }
        }
    }
    ensure(worst <= 1e-10, || format!("v_n(0) off by {worst:.2e}"))?;
    Ok(format!("v_n(0) for n <= 40 within {worst:.1e}"))
}

fn e2_roots() -> Outcome {
    let k = corpus::example2_oscillating().map_err(fail)?;
    let est = estimate_parameters(&k, Parameter::Mw, 0, 0, 240, Window::new(256).map_err(fail)?).map_err(fail)?;
    let root = |n: usize| est.roots.iter().find(|r| r.0 == n).map(|r| r.1);
    let mut notes = Vec::new();
    for (r, low_at, high_at) in [(1usize, 2usize, 8usize), (2, 32, 224)] {
        let lo = root(low_at).ok_or("missing root")?;
        let hi = root(high_at).ok_or("missing root")?;
        ensure(lo <= 1.0 + 1.0 / (2 * r) as f64, || format!("root {lo} at {low_at}"))?;
        ensure(hi > 2.0 - 1.0 / (2 * r + 1) as f64, || format!("root {hi} at {high_at}"))?;
        notes.push(format!("{lo:.4} at {low_at}, {hi:.4} at {high_at}"));
    }
    Ok(notes.join("; "))
}

fn e2_lambda_s() -> Outcome {
    let k = corpus::example2_oscillating().map_err(fail)?;
    let ls = lambda_s(&k, 0, LambdaSMethod::Phi, Window::new(256).map_err(fail)?, 128, 1e-6).map_err(fail)?;
    ensure(ls.is_infinite(), || format!("lambda_s = {ls}"))?;
    Ok("lambda_s(0) = inf".into())
}

fn e2_cond_u() -> Outcome {
    let k = corpus::example2_oscillating().map_err(fail)?;
    let w = Window::new(1200).map_err(fail)?;
    let m = estimate_all(&k.restrict(w).map_err(fail)?, 0, 128).map_err(fail)?.mw_minus.estimate;
    let u = cond_u_holds(&k, 0.1, 64, w, m).map_err(fail)?;
    ensure(!u.holds, || format!("condition holds with N = {:?}", u.witness))?;
    Ok(format!(
        "no N <= 64 with T^N >= (M - 0.1)^N on {} sites, M estimate {m:.4}",
        u.sites_checked
    ))
}

fn example4() -> Vec<Check> {
    vec![
        Check {
            name: "certificate_at_lambda_1",
            outcome: e4_certificate(1.0),
        },
        Check {
            name: "certificate_at_lambda_2",
            outcome: e4_certificate(2.0),
        },
        Check {
            name: "bracket_contains_1",
            outcome: e4_bracket(),
        },
        Check {
            name: "survives_at_lambda_w",
            outcome: e4_survival(),
        },
    ]
}

fn e4_certificate(lambda: f64) -> Outcome {
    let k = corpus::example4().map_err(fail)?;
    let v = SiteVector::new((0..600).map(corpus::example4_certificate_value).collect()).map_err(fail)?;
    let cert = Certificate::new(v, lambda, 1, CertificateKind::Nonlinear, 0).map_err(fail)?;
    match check_certificate(&cert, &k).map_err(fail)? {
        CertificateCheck::Holds {
            sites_checked,
            min_slack,
        } => {
            let inf = part_a_diagnostic(&k, &cert, 0).map_err(fail)?;
            Ok(format!(
                "holds on {sites_checked} sites, min slack {min_slack:.1e}, smallest value {inf:.2e}"
            ))
        }
        violated => Err(format!("{violated:?}")),
    }
}

fn e4_bracket() -> Outcome {
    let k = corpus::example4().map_err(fail)?;
    let mut notes = Vec::new();
    for n in [128usize, 256, 512] {
        let opts = BracketOptions {
            n_max: n,
            tail: Some(corpus::example4_tail()),
            ..Default::default()
        };
        let b = lambda_w_bracket(&k, 0, Window::new(n).map_err(fail)?, &opts).map_err(fail)?;
        ensure(b.contains(1.0), || format!("N = {n}: [{}, {}]", b.lower, b.upper))?;
        notes.push(format!("N = {n}: [{:.4}, {:.4}]", b.lower, b.upper));
        if n == 512 {
            ensure(b.width() <= 0.05, || format!("width {} at N = 512", b.width()))?;
        }
    }
    Ok(notes.join("; "))
}

fn e4_survival() -> Outcome {
    let k = corpus::example4().map_err(fail)?;
    let tail = corpus::example4_tail();
    let opts = BracketOptions::default().iter;
    let w = Window::new(256).map_err(fail)?;
    let (verdict, rep) = survival_at(&k, 1.0, 0, w, Some(&tail), &opts).map_err(fail)?;
    let v0 = rep.limit.get(0);
    ensure(verdict.survives() && v0 >= 0.4, || format!("verdict {verdict:?}, v(0) = {v0}"))?;
    Ok(format!("v(0) >= {v0:.4} on 256 sites with the certificate as tail"))
}
