//! Acceptance criteria 1 to 10. Prints one line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::HashMap;
use std::time::Instant;

use brwcrit_core::branching::{
    extinction_probs, extinction_probs_with, monotone_iterate_observed, IterOptions, Method, OffspringLaw, Start,
};
use brwcrit_core::brw::{brw_G, brw_H, BrwLaw};
use brwcrit_core::corpus;
use brwcrit_core::critical::{
    check_certificate, critical_behavior_probe, lambda_s, lambda_w_bracket, lambda_w_finite, survival_at,
    BracketOptions, Certificate, CertificateCheck, CertificateKind, LambdaSMethod, Survival,
};
use brwcrit_core::genfun::{estimate_all, estimate_parameters, series, Parameter, Series};
use brwcrit_core::branching::Boundary;
use brwcrit_core::graph::{first_passage_sequence, kernel_power_row};
use brwcrit_core::sim::{estimate_survival, sample_offspring, Mode, SimConfig};
use brwcrit_core::{SiteVector, WeightedKernel, Window};
use common::{eigen_rho, kernel, matrix, random_irreducible, weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn c1_single_site() -> Outcome {
    let k = corpus::single_site(1.0).map_err(e)?;
    let mut worst = 0.0f64;
    for (i, lambda) in [1.5f64, 2.0, 4.0].into_iter().enumerate() {
        // q = 1/(1 + λ(1 − q)), i.e. λq² − (1+λ)q + 1 = 0, smaller root
        let b = 1.0 + lambda;
        let oracle = (b - (b * b - 4.0 * lambda).sqrt()) / (2.0 * lambda);
        let law = BrwLaw::new(k.clone(), lambda).map_err(e)?;
        let rep = extinction_probs(&OffspringLaw::Brw(law.clone()), Window::new(1).unwrap(), &IterOptions::default())
            .map_err(e)?;
        let q = rep.limit.get(0);
        worst = worst.max((q - oracle).abs());
        ensure((q - oracle).abs() <= 1e-8, || format!("lambda {lambda}: q = {q}, oracle {oracle}"))?;
        let cfg = SimConfig::new(0, Mode::Generations { g_max: 200 }, 10_000, 100 + i as u64);
        let out = estimate_survival(&law, &cfg).map_err(e)?;
        ensure(out.ci95.contains(1.0 - oracle), || {
            format!(
                "lambda {lambda}: 1-q = {} outside [{:.4}, {:.4}]",
                1.0 - oracle,
                out.ci95.low,
                out.ci95.high
            )
        })?;
    }
    Ok(format!("max |q - 1/lambda| = {worst:.1e}, simulated 1-q inside every 95% interval"))
}

fn random_kernels(count: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(3..=8);
            random_irreducible(&mut rng, n)
        })
        .collect()
}

fn c2_finite_exactness(kernels: &[Vec<Vec<f64>>]) -> Outcome {
    let (mut dw, mut ds) = (0.0f64, 0.0f64);
    for (i, m) in kernels.iter().enumerate() {
        let k = kernel(m);
        let w = Window::new(m.len()).unwrap();
        let rho = eigen_rho(m);
        let lw = lambda_w_finite(&k, 0).map_err(e)?.value;
        let ls = lambda_s(&k, 0, LambdaSMethod::Spectral, w, 64, 1e-10).map_err(e)?;
        let lphi = lambda_s(&k, 0, LambdaSMethod::Phi, w, 2048, 1e-10).map_err(e)?;
        dw = dw.max((lw - 1.0 / rho).abs());
        ds = ds.max((ls - lphi).abs());
        ensure((lw - 1.0 / rho).abs() <= 1e-9, || format!("kernel {i}: lambda_w {lw} vs 1/rho {}", 1.0 / rho))?;
        ensure((ls - lphi).abs() <= 1e-6, || format!("kernel {i}: spectral {ls} vs phi {lphi}"))?;
        ensure((lw - ls).abs() <= 1e-9, || format!("kernel {i}: lambda_w {lw} != lambda_s {ls}"))?;
    }
    Ok(format!(
        "{} kernels, max |lambda_w - 1/rho| = {dw:.1e}, max |spectral - phi| = {ds:.1e}",
        kernels.len()
    ))
}

fn c3_min_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for t in 0..20 {
        let blocks: Vec<usize> = (0..rng.random_range(2..=4)).map(|_| rng.random_range(1..=3)).collect();
        let n: usize = blocks.iter().sum();
        let mut start = Vec::new();
        let mut acc = 0;
        for &b in &blocks {
            start.push(acc);
            acc += b;
        }
        let block_of: Vec<usize> = (0..n).map(|s| start.iter().rposition(|&a| a <= s).unwrap()).collect();
        let mut m = vec![vec![0.0; n]; n];
        for (b, &size) in blocks.iter().enumerate() {
            let s0 = start[b];
            let sub = if size == 1 {
                vec![vec![if rng.random_bool(0.6) { weight(&mut rng) } else { 0.0 }]]
            } else {
                random_irreducible(&mut rng, size)
            };
            for i in 0..size {
                for j in 0..size {
                    m[s0 + i][s0 + j] = sub[i][j];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if block_of[j] > block_of[i] && rng.random_bool(0.4) {
                    m[i][j] = weight(&mut rng);
                }
            }
        }
        let k = kernel(&m);
        let block_rho: Vec<f64> = blocks
            .iter()
            .enumerate()
            .map(|(b, &size)| {
                let s0 = start[b];
                let sub: Vec<Vec<f64>> = (0..size).map(|i| m[s0 + i][s0..s0 + size].to_vec()).collect();
                eigen_rho(&sub)
            })
            .collect();
        for x in 0..n {
            // breadth-first reachability
            let mut seen = vec![false; n];
            let mut stack = vec![x];
            seen[x] = true;
            while let Some(u) = stack.pop() {
                for v in 0..n {
                    if m[u][v] > 0.0 && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            let oracle = (0..n)
                .filter(|&v| seen[v])
                .map(|v| block_rho[block_of[v]])
                .map(|r| if r > 1e-300 { 1.0 / r } else { f64::INFINITY })
                .fold(f64::INFINITY, f64::min);
            let got = lambda_w_finite(&k, x).map_err(e)?.value;
            let ok = if oracle.is_infinite() {
                got.is_infinite()
            } else {
                (got - oracle).abs() <= 1e-9 * oracle.max(1.0)
            };
            ensure(ok, || format!("kernel {t}, site {x}: {got} vs min rule {oracle}"))?;
            checked += 1;
        }
    }
    Ok(format!("20 kernels, {checked} start sites match the per-class minimum"))
}

fn c4_example1() -> Outcome {
    let p = corpus::DeathSequence::Geometric;
    let ex = corpus::example1(p).map_err(e)?;
    let dominated = OffspringLaw::from(ex.dominated);
    let w = Window::new(80).unwrap();
    let g = dominated.g_map(w, &Boundary::NeverBorn).map_err(e)?;
    let opts = IterOptions {
        tol: 1e-300,
        max_iter: 50,
        method: Method::Picard,
    };
    let mut iterates: Vec<Vec<f64>> = vec![vec![0.0; 80]];
    monotone_iterate_observed(&g, Start::Zero, &opts, &mut |_, z| iterates.push(z.to_vec())).map_err(e)?;
    while iterates.len() <= 50 {
        iterates.push(iterates.last().unwrap().clone());
    }
    let pn = |i: usize| 0.5f64.powi(i as i32 + 2);
    let mut worst = 0.0f64;
    for (n, z) in iterates.iter().enumerate() {
        for j in 0..=20 {
            let oracle = 1.0 - (j..j + n).map(|i| 1.0 - pn(i)).product::<f64>();
            worst = worst.max((z[j] - oracle).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("dominated iterates off by {worst:.2e}"))?;

    // beyond the window, survival is at least that of the straight forward run;
    // the windowed q is then an upper bound for the true one
    let law = OffspringLaw::from(ex.law);
    let q0 = extinction_probs_with(
        &law,
        Window::new(200).unwrap(),
        &corpus::example1_boundary(p),
        &IterOptions::default(),
    )
    .map_err(e)?
    .limit
    .get(0);
    let q_dominated = 1.0 - (0..200).map(|i| 1.0 - pn(i)).product::<f64>();
    ensure(q0 < 1.0 - 1e-3 && q0 <= q_dominated + 1e-9, || {
        format!("summable p: windowed q(0) = {q0}, dominated law {q_dominated}")
    })?;

    // harmonic p: generation-n extinction probabilities from 0, window wide enough to be exact
    let harm = OffspringLaw::from(corpus::example1(corpus::DeathSequence::Harmonic).map_err(e)?.law);
    let gh = harm.g_map(Window::new(4200).unwrap(), &Boundary::NeverBorn).map_err(e)?;
    let marks = [64usize, 256, 1024, 4096];
    let mut seen = Vec::new();
    let opts = IterOptions {
        tol: 1e-300,
        max_iter: 4096,
        method: Method::Picard,
    };
    monotone_iterate_observed(&gh, Start::Zero, &opts, &mut |n, z| {
        if marks.contains(&n) {
            seen.push(z[0]);
        }
    })
    .map_err(e)?;
    ensure(seen.len() == marks.len(), || "harmonic run stopped early".into())?;
    for pair in seen.windows(2) {
        let (a, b) = (1.0 - pair[0], 1.0 - pair[1]);
        ensure(b < 0.75 * a, || format!("harmonic survival not decaying: {a} then {b}"))?;
    }
    Ok(format!(
        "dominated iterates within {worst:.1e}; summable q(0) <= {q0:.4}; harmonic q_n(0) = {}",
        seen.iter().map(|q| format!("{q:.4}")).collect::<Vec<_>>().join(", ")
    ))
}

/// Rates `k_i` of the oscillating shift, from the recursion for `c_n`.
fn oscillating_rates(len: usize) -> Vec<f64> {
    let ln2 = std::f64::consts::LN_2;
    let mut c: Vec<u64> = vec![0, 1];
    let mut n = 1u64;
    while (*c.last().unwrap() as usize) < len {
        n += 1;
        let nf = n as f64;
        let f = if n % 2 == 0 {
            (ln2 / (1.0 + 1.0 / nf).ln()).ceil()
        } else {
            (ln2 / (ln2 - (2.0 - 1.0 / nf).ln())).ceil()
        };
        c.push(c.last().unwrap() * f as u64);
    }
    let mut k = vec![0.0; len];
    k[0] = 1.0;
    for (j, pair) in c.windows(2).enumerate() {
        // sites in (c_j, c_{j+1}] get 2 when j+1 is odd
        for i in (pair[0] + 1)..=pair[1] {
            if (i as usize) < len {
                k[i as usize] = if (j + 1) % 2 == 1 { 2.0 } else { 1.0 };
            }
        }
    }
    k
}

fn c5_example2() -> Outcome {
    let mut worst = 0.0f64;
    let w = Window::new(64).unwrap();
    let osc = oscillating_rates(64);
    let mut cases: Vec<(WeightedKernel, Vec<f64>)> = Vec::new();
    for c in [1.0, 1.5, 2.0] {
        cases.push((corpus::example2_constant(c).map_err(e)?, vec![c; 64]));
    }
    cases.push((corpus::example2_oscillating().map_err(e)?, osc));
    for (k, rates) in &cases {
        let ln_beta: Vec<f64> = std::iter::once(0.0)
            .chain(rates.iter().scan(0.0, |s, r| {
                *s += r.ln();
                Some(*s)
            }))
            .collect();
        for lambda in [0.4f64, 1.0, 1.7] {
            let law = BrwLaw::new(k.clone(), lambda).map_err(e)?;
            let mut v = SiteVector::ones(w);
            for n in 1..=40 {
                v = brw_H(&law, &v).map_err(e)?;
                for i in 0..=20 {
                    let num = (n as f64 * lambda.ln() + ln_beta[i + n] - ln_beta[i]).exp();
                    let den = 1.0
                        + (1..=n)
                            .map(|r| (r as f64 * lambda.ln() + ln_beta[i + n] - ln_beta[i + n - r]).exp())
                            .sum::<f64>();
                    let oracle = num / den;
                    worst = worst.max((v.get(i) - oracle).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-10, || format!("closed form off by {worst:.2e}"))?;

    let k = corpus::example2_oscillating().map_err(e)?;
    let est = estimate_parameters(&k, Parameter::Mw, 0, 0, 240, Window::new(256).unwrap()).map_err(e)?;
    let roots: HashMap<usize, f64> = est.roots.iter().cloned().collect();
    let rates = oscillating_rates(240);
    let mut notes = Vec::new();
    for (r, n_even, n_odd) in [(1usize, 2usize, 8usize), (2, 32, 224)] {
        let lo = roots[&n_even];
        let hi = roots[&n_odd];
        for (n, got) in [(n_even, lo), (n_odd, hi)] {
            let oracle = (rates[..n].iter().map(|r| r.ln()).sum::<f64>() / n as f64).exp();
            ensure((got - oracle).abs() <= 1e-12, || format!("root at {n}: {got} vs {oracle}"))?;
        }
        ensure(lo <= 1.0 + 1.0 / (2 * r) as f64, || format!("root at c_{} = {lo}", 2 * r))?;
        ensure(hi > 2.0 - 1.0 / (2 * r + 1) as f64, || format!("root at c_{} = {hi}", 2 * r + 1))?;
        notes.push(format!("{lo:.4}@{n_even}, {hi:.4}@{n_odd}"));
    }
    Ok(format!("closed form within {worst:.1e}; roots {}", notes.join(", ")))
}

fn c6_example4() -> Outcome {
    let k = corpus::example4().map_err(e)?;
    let w = Window::new(600).unwrap();
    let v = SiteVector::new((0..600).map(corpus::example4_certificate_value).collect()).map_err(e)?;
    let cert = Certificate::new(v, 1.0, 1, CertificateKind::Nonlinear, 0).map_err(e)?;
    let check = check_certificate(&cert, &k).map_err(e)?;
    let CertificateCheck::Holds { sites_checked, min_slack } = check else {
        return Err(format!("certificate fails: {check:?}"));
    };
    ensure(min_slack >= 0.0, || format!("min slack {min_slack}"))?;
    let _ = w;

    let tail = corpus::example4_tail();
    let mut widths = Vec::new();
    let mut v0 = Vec::new();
    for n in [128usize, 256, 512] {
        let win = Window::new(n).unwrap();
        let opts = BracketOptions {
            n_max: n,
            tail: Some(tail.clone()),
            ..Default::default()
        };
        let b = lambda_w_bracket(&k, 0, win, &opts).map_err(e)?;
        ensure(b.contains(1.0), || format!("N = {n}: bracket [{}, {}] misses 1", b.lower, b.upper))?;
        widths.push(b.width());
        let (_, rep) = survival_at(&k, 1.0, 0, win, Some(&tail), &opts.iter).map_err(e)?;
        v0.push(rep.limit.get(0));
    }
    ensure(widths[2] <= 0.05, || format!("width at N = 512 is {}", widths[2]))?;
    ensure(v0.windows(2).all(|p| p[1] >= p[0] - 1e-12), || format!("v(0) not monotone: {v0:?}"))?;
    ensure(v0.iter().all(|&a| a >= 0.4), || format!("v(0) below 0.4: {v0:?}"))?;
    Ok(format!(
        "certificate holds on {sites_checked} sites (min slack {min_slack:.1e}); widths {:.4}, {:.4}, {:.4}; v(0) = {:.4}, {:.4}, {:.4}",
        widths[0], widths[1], widths[2], v0[0], v0[1], v0[2]
    ))
}

fn c7_critical_extinction(kernels: &[Vec<Vec<f64>>]) -> Outcome {
    let opts = IterOptions::default();
    let mut max_v_crit = 0.0f64;
    let mut min_v_super = f64::INFINITY;
    for (i, m) in kernels.iter().enumerate() {
        let k = kernel(m);
        let probe = critical_behavior_probe(&k, 0, Survival::Weak, &opts).map_err(e)?;
        ensure(probe.verdict.extinct(), || format!("kernel {i}: verdict {:?} at lambda_w", probe.verdict))?;
        let w = Window::new(m.len()).unwrap();
        let (_, rep) = survival_at(&k, probe.lambda, 0, w, None, &opts).map_err(e)?;
        let vmax = rep.limit.sup_norm();
        max_v_crit = max_v_crit.max(vmax);
        ensure(vmax <= 1e-6, || format!("kernel {i}: survival {vmax} at lambda_w"))?;
        let (verdict, rep) = survival_at(&k, 1.001 * probe.lambda, 0, w, None, &opts).map_err(e)?;
        ensure(verdict.survives(), || format!("kernel {i}: verdict {verdict:?} at 1.001 lambda_w"))?;
        min_v_super = min_v_super.min(rep.limit.get(0));
    }
    Ok(format!(
        "max survival at lambda_w {max_v_crit:.1e}; min v(0) at 1.001 lambda_w {min_v_super:.2e}"
    ))
}

fn c8_sampler() -> Outcome {
    let k = WeightedKernel::finite(vec![vec![(1, 0.5), (2, 1.0), (3, 0.25)], vec![], vec![], vec![]], None)
        .map_err(e)?;
    let law = BrwLaw::new(k, 1.0).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 100_000;
    let mut freq: HashMap<Vec<(usize, u32)>, usize> = HashMap::new();
    for _ in 0..n {
        *freq.entry(sample_offspring(&law, 0, &mut rng).map_err(e)?).or_default() += 1;
    }
    let mut tv = 0.0;
    for a in 0..=6u32 {
        for b in 0..=6 - a {
            for c in 0..=6 - a - b {
                let f: Vec<(usize, u32)> = [(1, a), (2, b), (3, c)].into_iter().filter(|&(_, k)| k > 0).collect();
                let p = law.offspring_prob(0, &f).map_err(e)?;
                let q = *freq.get(&f).unwrap_or(&0) as f64 / n as f64;
                tv += (p - q).abs();
            }
        }
    }
    let tv = 0.5 * tv;
    ensure(tv < 0.01, || format!("TV = {tv}"))?;
    Ok(format!("TV = {tv:.4}"))
}

fn c9_cross_simulator() -> Outcome {
    let cases: Vec<(&str, WeightedKernel, f64)> = vec![
        ("single site", corpus::single_site(1.0).map_err(e)?, 1.0),
        ("two sites", corpus::twosite().map_err(e)?, 0.5),
        ("3-cycle", kernel(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 2.0], vec![0.5, 0.0, 0.0]]), 1.0),
        ("reducible pair", kernel(&[vec![0.5, 1.0], vec![0.0, 1.0]]), 1.0),
        ("tree line m=3", corpus::tree_line(3).map_err(e)?, 1.0 / 3.0),
    ];
    let mut lines = Vec::new();
    for (i, (name, k, lambda_c)) in cases.into_iter().enumerate() {
        for (j, factor) in [1.5, 3.0].into_iter().enumerate() {
            let law = BrwLaw::new(k.clone(), factor * lambda_c).map_err(e)?;
            let seed = 900 + 10 * i as u64 + j as u64;
            let gen = estimate_survival(&law, &SimConfig::new(0, Mode::Generations { g_max: 200 }, 10_000, seed))
                .map_err(e)?;
            let cont = estimate_survival(&law, &SimConfig::new(0, Mode::Continuous { horizon: 50.0 }, 10_000, seed))
                .map_err(e)?;
            ensure(gen.ci95.overlaps(&cont.ci95), || {
                format!("{name} at {factor} x lambda_c: {} vs {}", gen.p_hat, cont.p_hat)
            })?;
            lines.push(format!("{:.3}/{:.3}", gen.p_hat, cont.p_hat));
        }
    }
    Ok(format!("generation/continuous p_hat: {}", lines.join(" ")))
}

fn c10_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut worst_theta, mut worst_fp, mut worst_h) = (0.0f64, 0.0f64, 0.0f64);
    let mut estimates = 0;
    for _ in 0..20 {
        let n = rng.random_range(3..=6);
        let m = random_irreducible(&mut rng, n);
        let k = kernel(&m);
        let w = Window::new(n).unwrap();
        let rho = eigen_rho(&m);
        let lambda = 0.5 / rho;
        // Γ(λ) = (I − λK)^{-1}
        let a = nalgebra::DMatrix::<f64>::identity(n, n) - matrix(&m) * lambda;
        let gamma = a.try_inverse().ok_or("singular I - lambda K")?;
        for x in 0..n {
            for y in 0..n {
                let g_xy = series(&k, Series::Gamma, x, y, lambda, 400, w).map_err(e)?.partial_sum;
                let g_yy = series(&k, Series::Gamma, y, y, lambda, 400, w).map_err(e)?.partial_sum;
                let phi = series(&k, Series::Phi, x, y, lambda, 400, w).map_err(e)?.partial_sum;
                let delta = if x == y { 1.0 } else { 0.0 };
                let rhs = phi * g_yy + delta;
                worst_theta = worst_theta.max(((g_xy - rhs) / g_xy).abs());
                worst_theta = worst_theta.max(((g_xy - gamma[(x, y)]) / gamma[(x, y)]).abs());

                let phis = first_passage_sequence(&k.restrict(w).map_err(e)?, x, y, 12).map_err(e)?;
                let mut kp = matrix(&m).pow(0);
                for steps in 1..=12usize {
                    kp *= matrix(&m);
                    let direct = kp[(x, y)];
                    let mut sum = 0.0;
                    for i in 1..=steps {
                        let k_yy = kernel_power_row(&k, y, steps - i, w).map_err(e)?.get(y).value();
                        sum += phis[i].value() * k_yy;
                    }
                    if direct > 0.0 {
                        worst_fp = worst_fp.max(((direct - sum) / direct).abs());
                    } else {
                        worst_fp = worst_fp.max(sum.abs());
                    }
                }
            }
        }
        let law = BrwLaw::new(k.clone(), rng.random_range(0.1..3.0)).map_err(e)?;
        for _ in 0..20 {
            let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let h = brw_H(&law, &SiteVector::new(v.clone()).map_err(e)?).map_err(e)?;
            let one_minus = SiteVector::new(v.iter().map(|a| 1.0 - a).collect()).map_err(e)?;
            for x in 0..n {
                let g = brw_G(&law, &one_minus, x).map_err(e)?;
                worst_h = worst_h.max((h.get(x) - (1.0 - g)).abs());
            }
        }
        let sub = k.restrict(w).map_err(e)?;
        for x in 0..n {
            let p = estimate_all(&sub, x, 64).map_err(e)?;
            let (ms, mwm, mw) = (p.ms.estimate, p.mw_minus.estimate, p.mw.estimate);
            ensure(ms <= mwm && mwm <= mw, || format!("ordering fails: {ms} {mwm} {mw}"))?;
            estimates += 1;
        }
    }
    ensure(worst_theta <= 1e-8, || format!("Gamma identity off by {worst_theta:.2e}"))?;
    ensure(worst_fp <= 1e-8, || format!("first-passage decomposition off by {worst_fp:.2e}"))?;
    ensure(worst_h <= 1e-12, || format!("H = 1 - G(1 - v) off by {worst_h:.2e}"))?;
    Ok(format!(
        "Gamma identity {worst_theta:.1e}, first passage {worst_fp:.1e}, H vs G {worst_h:.1e}, ordering on {estimates} estimates"
    ))
}

fn main() {
    let kernels = random_kernels(50, 2);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("single-site oracle", Box::new(c1_single_site)),
        ("finite exactness", Box::new(|| c2_finite_exactness(&kernels))),
        ("reducible min rule", Box::new(c3_min_rule)),
        ("example 1", Box::new(c4_example1)),
        ("example 2", Box::new(c5_example2)),
        ("example 4", Box::new(c6_example4)),
        ("critical extinction", Box::new(|| c7_critical_extinction(&kernels))),
        ("sampler validation", Box::new(c8_sampler)),
        ("cross-simulator agreement", Box::new(c9_cross_simulator)),
        ("identity suite", Box::new(c10_identities)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS in {secs:.1}s: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL in {secs:.1}s: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
