mod common;

use brwcrit_core::branching::{
    extinction_probs, ibp_irreducible, is_super_solution, monotone_iterate_observed, survival_probs, Boundary,
    IterOptions, Method, MonotoneMap, OffspringLaw, Start,
};
use brwcrit_core::brw::{apply_K, brw_G, brw_H, BrwLaw};
use brwcrit_core::{SiteVector, Window};
use common::{kernel, random_dense, random_irreducible};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_law(seed: u64, n: usize, irreducible: bool) -> BrwLaw {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = if irreducible {
        random_irreducible(&mut rng, n)
    } else {
        random_dense(&mut rng, n, 0.4)
    };
    BrwLaw::new(kernel(&m), rng.random_range(0.05..2.0)).unwrap()
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_is_nondecreasing(seed in any::<u64>(), n in 1usize..7) {
        let law = random_law(seed, n, false);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let w = Window::new(n).unwrap();
        let g = law.g_map(w, &Boundary::NeverBorn).unwrap();
        for _ in 0..100 {
            let z = unit_vector(&mut rng, n);
            let z2: Vec<f64> = z.iter().map(|a| a + (1.0 - a) * rng.random::<f64>()).collect();
            let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
            g.apply(&z, &mut a);
            g.apply(&z2, &mut b);
            for x in 0..n {
                prop_assert!(a[x] <= b[x] + 1e-15);
            }
        }
    }

    #[test]
    fn iterates_move_one_way(seed in any::<u64>(), n in 1usize..7) {
        let law = OffspringLaw::from(random_law(seed, n, false));
        let w = Window::new(n).unwrap();
        let opts = IterOptions { method: Method::Picard, max_iter: 5000, ..Default::default() };
        for (start, map) in [
            (Start::Zero, law.g_map(w, &Boundary::NeverBorn).unwrap()),
            (Start::One, law.h_map(w, &Boundary::NeverBorn).unwrap()),
        ] {
            let mut prev = vec![if start == Start::Zero { 0.0 } else { 1.0 }; n];
            let mut ok = true;
            monotone_iterate_observed(&map, start, &opts, &mut |_, z| {
                for x in 0..n {
                    let d = z[x] - prev[x];
                    if (start == Start::Zero && d < 0.0) || (start == Start::One && d > 0.0) {
                        ok = false;
                    }
                }
                prev = z.to_vec();
            })
            .unwrap();
            prop_assert!(ok);
        }
    }

    #[test]
    fn extinction_is_the_smallest_fixed_point(seed in any::<u64>(), n in 1usize..7) {
        let law = OffspringLaw::from(random_law(seed, n, false));
        let w = Window::new(n).unwrap();
        let q = extinction_probs(&law, w, &IterOptions::default()).unwrap().limit.into_vec();
        let g = law.g_map(w, &Boundary::NeverBorn).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 77);
        // iterates from 𝟙 are super-solutions, and so are random vectors that pass the test
        let mut y = vec![1.0; n];
        let mut next = vec![0.0; n];
        let mut candidates = Vec::new();
        for _ in 0..50 {
            g.apply(&y, &mut next);
            std::mem::swap(&mut y, &mut next);
            candidates.push(y.clone());
        }
        for _ in 0..200 {
            candidates.push(unit_vector(&mut rng, n));
        }
        for y in candidates.iter().filter(|y| is_super_solution(&g, y)) {
            for x in 0..n {
                prop_assert!(q[x] <= y[x] + 1e-9);
            }
        }
    }

    #[test]
    fn survival_and_extinction_are_dual(seed in any::<u64>(), n in 1usize..7) {
        let law = OffspringLaw::from(random_law(seed, n, false));
        let w = Window::new(n).unwrap();
        let opts = IterOptions::default();
        let q = extinction_probs(&law, w, &opts).unwrap();
        let v = survival_probs(&law, w, &opts).unwrap();
        if q.converged && v.converged {
            for x in 0..n {
                prop_assert!((q.limit.get(x) + v.limit.get(x) - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn irreducible_laws_survive_everywhere_or_nowhere(seed in any::<u64>(), n in 2usize..7) {
        let law = OffspringLaw::from(random_law(seed, n, true));
        let w = Window::new(n).unwrap();
        prop_assert!(ibp_irreducible(&law, w).unwrap());
        let q = extinction_probs(&law, w, &IterOptions::default()).unwrap().limit.into_vec();
        if q.iter().any(|&a| a < 1.0 - 1e-6) {
            prop_assert!(q.iter().all(|&a| a < 1.0));
        }
    }

    #[test]
    fn h_is_below_the_linearisation(seed in any::<u64>(), n in 1usize..7) {
        let law = random_law(seed, n, false);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
        for _ in 0..20 {
            let v = SiteVector::new(unit_vector(&mut rng, n)).unwrap();
            let h = brw_H(&law, &v).unwrap();
            let kv = apply_K(law.kernel(), &v).unwrap();
            let one_minus = SiteVector::new(v.as_slice().iter().map(|a| 1.0 - a).collect()).unwrap();
            for x in 0..n {
                prop_assert!(kv.get(x) >= 0.0);
                prop_assert!(h.get(x) <= law.lambda() * kv.get(x) + 1e-15);
                let g = brw_G(&law, &one_minus, x).unwrap();
                prop_assert!((h.get(x) - (1.0 - g)).abs() <= 1e-12);
            }
        }
    }
}
