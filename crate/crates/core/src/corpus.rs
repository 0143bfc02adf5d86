//! Named example kernels and laws, buildable from a name and JSON parameters.

use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::branching::{Boundary, LawRow, TableLaw};
use crate::critical::TailCertificate;
use crate::error::{Error, Result};
use crate::graph::{GeneratorSpec, LogWeight, WeightedKernel};

pub type Params = Map<String, Value>;

/// `p_n` for the one-dimensional law with forward, backward and death moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeathSequence {
    /// `p_n = 2^{-n-2}`: summable.
    Geometric,
    /// `p_n = 1/(n+2)`: not summable.
    Harmonic,
    Constant { p: f64 },
}

impl DeathSequence {
    pub fn get(&self, n: usize) -> f64 {
        match *self {
            DeathSequence::Geometric => 0.5f64.powi(n as i32 + 2),
            DeathSequence::Harmonic => 1.0 / (n as f64 + 2.0),
            DeathSequence::Constant { p } => p,
        }
    }

    fn validate(&self) -> Result<()> {
        if let DeathSequence::Constant { p } = *self {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("p = {p} must lie in [0, 1)")));
            }
        }
        Ok(())
    }
}

/// The two laws built on a sequence `p_n`.
pub struct Example1 {
    /// Type `n` has one child at `n+1` w.p. `1−p_n`, one at `n−1` (at `0` when
    /// `n = 0`) w.p. `p_n/2`, none w.p. `p_n/2`.
    pub law: TableLaw,
    /// One child at `n+1` w.p. `1−p_n`, none otherwise.
    pub dominated: TableLaw,
}

pub fn example1(p: DeathSequence) -> Result<Example1> {
    p.validate()?;
    let law = TableLaw::new(Arc::new(move |n: usize| -> LawRow {
        let pn = p.get(n);
        let back = n.saturating_sub(1);
        vec![(vec![], pn / 2.0), (vec![(back, 1)], pn / 2.0), (vec![(n + 1, 1)], 1.0 - pn)]
    }));
    let dominated = TableLaw::new(Arc::new(move |n: usize| -> LawRow {
        let pn = p.get(n);
        vec![(vec![], pn), (vec![(n + 1, 1)], 1.0 - pn)]
    }));
    Ok(Example1 { law, dominated })
}

/// `1 − Π_{i=j}^{j+n−1} (1 − p_i)`: extinction by generation `n` from type `j`
/// for the dominated law.
pub fn example1_dominated_q(p: DeathSequence, n: usize, j: usize) -> f64 {
    1.0 - (j..j + n).map(|i| 1.0 - p.get(i)).product::<f64>()
}

/// `Π_{i≥n} (1 − p_i)`: the chance that a lineage started at `n` only ever
/// steps forward and never dies. Survival from `n` is at least this for both
/// laws, and `1 − ·` beyond a window is a valid extinction boundary.
pub fn example1_forward_survival(p: DeathSequence, n: usize) -> f64 {
    match p {
        DeathSequence::Geometric => {
            let mut ln = 0.0;
            let mut i = n;
            loop {
                let pi = p.get(i);
                if pi < 1e-18 {
                    break;
                }
                ln += (-pi).ln_1p();
                i += 1;
            }
            ln.exp()
        }
        DeathSequence::Harmonic => 0.0,
        DeathSequence::Constant { p } => {
            if p == 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

pub fn example1_boundary(p: DeathSequence) -> Boundary {
    Boundary::Tail(Arc::new(move |n| example1_forward_survival(p, n)))
}

/// `a_n = ⌈ln 2 / ln(1 + 1/n)⌉`.
pub fn oscillating_a(n: u64) -> u64 {
    (std::f64::consts::LN_2 / (1.0 + 1.0 / n as f64).ln()).ceil() as u64
}

/// `b_n = ⌈ln 2 / (ln 2 − ln(2 − 1/n))⌉`.
pub fn oscillating_b(n: u64) -> u64 {
    let ln2 = std::f64::consts::LN_2;
    (ln2 / (ln2 - (2.0 - 1.0 / n as f64).ln())).ceil() as u64
}

/// `c_1 = 1`, `c_{2r} = a_{2r} c_{2r−1}`, `c_{2r+1} = b_{2r+1} c_{2r}`, up to the
/// first term beyond `limit`. Index 0 holds `c_0 = 0`.
pub fn oscillating_breaks(limit: u64) -> Vec<u64> {
    let mut c = vec![0u64, 1];
    let mut n = 1u64;
    while *c.last().unwrap() <= limit {
        n += 1;
        let factor = if n % 2 == 0 { oscillating_a(n) } else { oscillating_b(n) };
        let next = c.last().unwrap().saturating_mul(factor);
        c.push(next);
        if next == u64::MAX {
            break;
        }
    }
    c
}

/// Rate `k_i` of the oscillating shift: 1 on `(c_{2r−1}, c_{2r}]`, 2 on
/// `(c_{2r}, c_{2r+1}]`, with `k_0 = 1` and `k_1 = 2`.
pub fn oscillating_rate(breaks: &[u64], i: u64) -> f64 {
    if i == 0 {
        return 1.0;
    }
    // index of the interval (c_{j−1}, c_j] containing i
    let j = breaks.partition_point(|&c| c < i);
    if j % 2 == 0 {
        1.0
    } else {
        2.0
    }
}

fn shift_kernel(rate: Arc<dyn Fn(usize) -> f64 + Send + Sync>, bound: f64, spec: GeneratorSpec) -> Result<WeightedKernel> {
    WeightedKernel::generated(Arc::new(move |i: usize| vec![(i + 1, rate(i))]), bound, Some(spec))
}

/// Shift kernel `k_{i,i+1} = c`.
pub fn example2_constant(c: f64) -> Result<WeightedKernel> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("rate {c} must be positive")));
    }
    let mut params = Params::new();
    params.insert("c".into(), json!(c));
    shift_kernel(Arc::new(move |_| c), c, spec("example2", params))
}

/// Shift kernel with the oscillating rates `k_i ∈ {1, 2}`.
pub fn example2_oscillating() -> Result<WeightedKernel> {
    let breaks = Arc::new(oscillating_breaks(1 << 40));
    let mut params = Params::new();
    params.insert("oscillating".into(), json!(true));
    shift_kernel(
        Arc::new(move |i| oscillating_rate(&breaks, i as u64)),
        2.0,
        spec("example2", params),
    )
}

/// `β_n = Π_{i<n} k_i` of a shift kernel, in the log domain.
pub fn shift_beta(k: &WeightedKernel, n: usize) -> Result<LogWeight> {
    let mut ln = 0.0;
    for i in 0..n {
        let row = k.row(i)?;
        let rate = row
            .iter()
            .find(|&&(y, _)| y == i + 1)
            .map(|&(_, w)| w)
            .ok_or_else(|| Error::InvalidParameter(format!("site {i} has no forward edge")))?;
        ln += rate.ln();
    }
    Ok(LogWeight::from_ln(ln))
}

/// Row bound of the half-line kernel with forward rates `(1+1/n)²` and backward rates `3^{-(n+1)}`.
pub const EXAMPLE4_ROW_BOUND: f64 = 4.0 + 1.0 / 9.0;

/// `k_{01} = 2`, `k_{n,n+1} = (1+1/n)²`, `k_{n,n−1} = 3^{-(n+1)}` for `n ≥ 1`.
pub fn example4() -> Result<WeightedKernel> {
    WeightedKernel::generated(
        Arc::new(|n: usize| {
            if n == 0 {
                vec![(1, 2.0)]
            } else {
                let f = 1.0 + 1.0 / n as f64;
                vec![(n + 1, f * f), (n - 1, 3f64.powi(-(n as i32 + 1)))]
            }
        }),
        EXAMPLE4_ROW_BOUND,
        Some(spec("example4", Params::new())),
    )
}

/// `v(0) = 1/2`, `v(n) = 1/(n+1)`: satisfies `λKv ≥ v/(1−v)` for every `λ ≥ 1`.
pub fn example4_certificate_value(n: usize) -> f64 {
    if n == 0 {
        0.5
    } else {
        1.0 / (n as f64 + 1.0)
    }
}

pub fn example4_tail() -> TailCertificate {
    TailCertificate::new(
        Arc::new(|n, _| example4_certificate_value(n)),
        1.0,
        true,
        "v(0) = 1/2, v(n) = 1/(n+1), a sub-solution for lambda >= 1",
    )
}

/// Half-line quotient of the homogeneous tree of degree `m`:
/// `k_{01} = m`, `k_{n,n+1} = m − 1`, `k_{n,n−1} = 1`.
pub fn tree_line(m: u32) -> Result<WeightedKernel> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("degree {m} must be at least 2")));
    }
    let mf = m as f64;
    let mut params = Params::new();
    params.insert("m".into(), json!(m));
    WeightedKernel::generated(
        Arc::new(move |n: usize| {
            if n == 0 {
                vec![(1, mf)]
            } else {
                vec![(n + 1, mf - 1.0), (n - 1, 1.0)]
            }
        }),
        mf,
        Some(spec("tree_line", params)),
    )
}

/// The constant `1 − 1/(λm)`: a fixed point of `H^λ` on the tree line for `λ > 1/m`.
pub fn tree_line_tail(m: u32) -> TailCertificate {
    let mf = m as f64;
    TailCertificate::new(
        Arc::new(move |_, lambda| 1.0 - 1.0 / (lambda * mf)),
        1.0 / mf,
        false,
        "constant 1 - 1/(lambda m), lifted from the one-site quotient",
    )
}

/// Half-line image of a radial tree: vertices at distance `n` have `a_n`
/// children, outward rate `k⁺_n` and inward rate `k⁻_n`, so that
/// `k_{n,n+1} = a_n k⁺_n` and `k_{n+1,n} = k⁻_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialParams {
    pub a0: u32,
    pub a: u32,
    pub k_plus: f64,
    pub k_minus: f64,
}

pub fn radial_tree_line(p: RadialParams) -> Result<WeightedKernel> {
    if p.a0 < 1 || p.a < 1 || !(p.k_plus > 0.0) || !(p.k_minus > 0.0) {
        return Err(Error::InvalidParameter(
            "radial tree needs a_n >= 1 and positive rates".into(),
        ));
    }
    let bound = (p.a0 as f64 * p.k_plus).max(p.a as f64 * p.k_plus + p.k_minus);
    let mut params = Params::new();
    params.insert("a0".into(), json!(p.a0));
    params.insert("a".into(), json!(p.a));
    params.insert("k_plus".into(), json!(p.k_plus));
    params.insert("k_minus".into(), json!(p.k_minus));
    WeightedKernel::generated(
        Arc::new(move |n: usize| {
            let a = if n == 0 { p.a0 } else { p.a } as f64;
            let mut row = vec![(n + 1, a * p.k_plus)];
            if n > 0 {
                row.push((n - 1, p.k_minus));
            }
            row
        }),
        bound,
        Some(spec("radial_tree_line", params)),
    )
}

/// Two sites exchanging at rate 2 in both directions.
pub fn twosite() -> Result<WeightedKernel> {
    WeightedKernel::from_dense(&[vec![0.0, 2.0], vec![2.0, 0.0]])
}

pub fn single_site(c: f64) -> Result<WeightedKernel> {
    WeightedKernel::finite(vec![vec![(0, c)]], None)
}

fn spec(name: &str, params: Params) -> GeneratorSpec {
    GeneratorSpec {
        name: name.into(),
        params,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Produces {
    Kernel,
    Law,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExampleInfo {
    pub name: &'static str,
    pub produces: Produces,
    pub params: &'static str,
    pub note: &'static str,
}

pub const REGISTRY: &[ExampleInfo] = &[
    ExampleInfo {
        name: "example1",
        produces: Produces::Law,
        params: "p=geometric|harmonic|<number>, dominated=false",
        note: "irreducible law on the half-line that survives although every type has fewer than one child on average; also its reducible forward-only minorant",
    },
    ExampleInfo {
        name: "example2",
        produces: Produces::Kernel,
        params: "c=1.0 | oscillating=true",
        note: "shift k_{i,i+1} = k_i; the oscillating rates alternate long runs of 1 and 2, so liminf and limsup of the root of beta_n are 1 and 2",
    },
    ExampleInfo {
        name: "example4",
        produces: Produces::Kernel,
        params: "(none)",
        note: "half-line with k_01 = 2, k_{n,n+1} = (1+1/n)^2, k_{n,n-1} = 3^-(n+1); lambda_w = 1 and the process survives globally at lambda_w",
    },
    ExampleInfo {
        name: "tree_line",
        produces: Produces::Kernel,
        params: "m=4",
        note: "homogeneous tree of degree m collapsed onto the half-line; row sums all m",
    },
    ExampleInfo {
        name: "radial_tree_line",
        produces: Produces::Kernel,
        params: "a0=4, a=3, k_plus=1, k_minus=1",
        note: "radial tree collapsed onto the half-line: k_{n,n+1} = a_n k+_n, k_{n+1,n} = k-_n",
    },
    ExampleInfo {
        name: "twosite",
        produces: Produces::Kernel,
        params: "(none)",
        note: "two sites with k_01 = k_10 = 2; lambda_w = lambda_s = 1/2",
    },
    ExampleInfo {
        name: "single_site",
        produces: Produces::Kernel,
        params: "c=1.0",
        note: "one site with a self-loop of weight c; extinction probability 1/(lambda c) above criticality",
    },
];

fn get_f64(params: &Params, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| Error::InvalidParameter(format!("{key} is not a number"))),
        Some(Value::String(s)) => s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("{key} = {s} is not a number"))),
        Some(v) => Err(Error::InvalidParameter(format!("{key} = {v} is not a number"))),
    }
}

fn get_u32(params: &Params, key: &str, default: u32) -> Result<u32> {
    let v = get_f64(params, key, default as f64)?;
    if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
        return Err(Error::InvalidParameter(format!("{key} = {v} is not a nonnegative integer")));
    }
    Ok(v as u32)
}

fn get_bool(params: &Params, key: &str) -> Result<bool> {
    match params.get(key) {
        None => Ok(false),
        Some(Value::Bool(b)) => Ok(*b),
        Some(Value::String(s)) => s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("{key} = {s} is not a boolean"))),
        Some(v) => Err(Error::InvalidParameter(format!("{key} = {v} is not a boolean"))),
    }
}

fn check_keys(params: &Params, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::InvalidParameter(format!("unknown parameter `{k}`")));
        }
    }
    Ok(())
}

pub fn death_sequence(params: &Params) -> Result<DeathSequence> {
    Ok(match params.get("p") {
        None => DeathSequence::Geometric,
        Some(Value::String(s)) if s == "geometric" => DeathSequence::Geometric,
        Some(Value::String(s)) if s == "harmonic" => DeathSequence::Harmonic,
        Some(_) => DeathSequence::Constant {
            p: get_f64(params, "p", 0.0)?,
        },
    })
}

/// A kernel together with a tail certificate, when one is known.
pub struct BuiltKernel {
    pub kernel: WeightedKernel,
    pub tail: Option<TailCertificate>,
}

/// Builds a registered kernel example.
pub fn build_kernel(name: &str, params: &Params) -> Result<BuiltKernel> {
    let plain = |kernel| BuiltKernel { kernel, tail: None };
    match name {
        "example1" => Err(Error::InvalidParameter(
            "example1 is an offspring law, not a kernel; it has no kernel file form".into(),
        )),
        "example2" => {
            check_keys(params, &["c", "oscillating"])?;
            if get_bool(params, "oscillating")? {
                Ok(plain(example2_oscillating()?))
            } else {
                Ok(plain(example2_constant(get_f64(params, "c", 1.0)?)?))
            }
        }
        "example4" => {
            check_keys(params, &[])?;
            Ok(BuiltKernel {
                kernel: example4()?,
                tail: Some(example4_tail()),
            })
        }
        "tree_line" => {
            check_keys(params, &["m"])?;
            let m = get_u32(params, "m", 4)?;
            Ok(BuiltKernel {
                kernel: tree_line(m)?,
                tail: Some(tree_line_tail(m)),
            })
        }
        "radial_tree_line" => {
            check_keys(params, &["a0", "a", "k_plus", "k_minus"])?;
            Ok(plain(radial_tree_line(RadialParams {
                a0: get_u32(params, "a0", 4)?,
                a: get_u32(params, "a", 3)?,
                k_plus: get_f64(params, "k_plus", 1.0)?,
                k_minus: get_f64(params, "k_minus", 1.0)?,
            })?))
        }
        "twosite" => {
            check_keys(params, &[])?;
            Ok(plain(twosite()?))
        }
        "single_site" => {
            check_keys(params, &["c"])?;
            Ok(plain(single_site(get_f64(params, "c", 1.0)?)?))
        }
        other => Err(Error::UnknownExample(other.into())),
    }
}

/// Rebuilds a generated kernel from its stored specification.
pub fn from_spec(spec: &GeneratorSpec) -> Result<BuiltKernel> {
    build_kernel(&spec.name, &spec.params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{check_local_isomorphism, Window};

    #[test]
    fn oscillating_breaks_match_the_recursion() {
        assert_eq!(oscillating_a(2), 2);
        let c = oscillating_breaks(10_000);
        assert_eq!(&c[..7], &[0, 1, 2, 8, 32, 224, 1120]);
    }

    #[test]
    fn oscillating_beta_values() {
        let k = example2_oscillating().unwrap();
        let beta = |n| shift_beta(&k, n).unwrap().ln() / std::f64::consts::LN_2;
        assert!((beta(2) - 1.0).abs() < 1e-12);
        assert!((beta(8) - 6.0).abs() < 1e-12);
        assert!((beta(32) - 7.0).abs() < 1e-12);
        assert!((beta(224) - 198.0).abs() < 1e-9);
        for n in 1..600 {
            let r = shift_beta(&k, n).unwrap().root(n);
            assert!((1.0..=2.0).contains(&r));
        }
    }

    #[test]
    fn example4_rows() {
        let k = example4().unwrap();
        assert_eq!(k.row_sum(0).unwrap(), 2.0);
        assert!((k.row_sum(1).unwrap() - (4.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn radial_reproduces_tree_line() {
        let r = radial_tree_line(RadialParams {
            a0: 4,
            a: 3,
            k_plus: 1.0,
            k_minus: 1.0,
        })
        .unwrap();
        let t = tree_line(4).unwrap();
        for n in 0..50 {
            let mut a = r.row(n).unwrap();
            let mut b = t.row(n).unwrap();
            a.sort_by(|x, y| x.0.cmp(&y.0));
            b.sort_by(|x, y| x.0.cmp(&y.0));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn tree_line_is_locally_isomorphic_to_a_point() {
        for m in [2, 3, 4, 7] {
            let q = single_site(m as f64).unwrap();
            let r = check_local_isomorphism(&tree_line(m).unwrap(), &q, &|_| 0, Window::new(200).unwrap()).unwrap();
            assert!(r.is_verified());
        }
    }

    #[test]
    fn registry_builds_every_kernel() {
        for info in REGISTRY {
            let r = build_kernel(info.name, &Params::new());
            match info.produces {
                Produces::Kernel => assert!(r.is_ok(), "{}", info.name),
                Produces::Law => assert!(r.is_err()),
            }
        }
        assert!(matches!(build_kernel("nope", &Params::new()), Err(Error::UnknownExample(_))));
        let mut bad = Params::new();
        bad.insert("zzz".into(), json!(1));
        assert!(build_kernel("tree_line", &bad).is_err());
    }

    #[test]
    fn example1_rejects_p_one() {
        assert!(example1(DeathSequence::Constant { p: 1.0 }).is_err());
    }
}
