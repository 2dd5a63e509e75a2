//! Property suites: kernel values against the exact rational oracle,
//! monotonicity laws, bound sandwiches, and stabilizer-algebra closure.

use num::rational::BigRational;
use proptest::prelude::*;
use qcert_core::adversarial::{eps_bar, Strategy};
use qcert_core::iid::eps_bar_iid;
use qcert_core::oracle::{binom_tail_exact, rational_ln, rational_to_f64};
use qcert_core::sim::graph::GraphSpec;
use qcert_core::sim::pauli::{stabilizer_element, PauliString};
use qcert_core::sim::state::{strategy_operator, test_projector};
use qcert_core::stats::{binom_tail, chernoff_lower, chernoff_upper, ln_binom_tail, rel_entropy};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn strategy(lambda: f64) -> Strategy {
    Strategy::new(lambda).unwrap()
}

proptest! {
    #![proptest_config(config(1000))]

    /// Tail values match the exact rational oracle to 1e-12 relative, and the
    /// three monotonicity laws hold in exact arithmetic.
    #[test]
    fn tail_oracle_and_monotonicity(
        z in 2u64..=200,
        k_frac in 0.0f64..1.0,
        p in 0.01f64..0.99,
    ) {
        let k = ((z - 1) as f64 * k_frac) as u64; // k < z so strictness applies
        let exact = binom_tail_exact(z, k, p).unwrap();
        let fast = binom_tail(z, k, p).unwrap();
        let exact_f = rational_to_f64(&exact);
        prop_assert!(
            (fast - exact_f).abs() <= 1e-12 * exact_f.max(1e-300),
            "z={z} k={k} p={p}: fast={fast:e} exact={exact_f:e}"
        );

        // Strictly increasing in k (k < z), strictly decreasing in z, and
        // strictly decreasing in p for k < z, all checked exactly.
        prop_assert!(binom_tail_exact(z, k + 1, p).unwrap() > exact);
        prop_assert!(binom_tail_exact(z + 1, k, p).unwrap() < exact);
        let p_shift = p + 0.5 * (1.0 - p);
        prop_assert!(binom_tail_exact(z, k, p_shift).unwrap() < exact);
    }

    /// Chernoff bounds sandwich the tail wherever both sides are defined.
    #[test]
    fn chernoff_sandwich(
        z in 2u64..=500,
        p in 0.05f64..0.95,
        k_frac in 0.0f64..1.0,
    ) {
        let k_max = (p * z as f64).floor() as u64;
        prop_assume!(k_max >= 1);
        let k = 1 + ((k_max - 1) as f64 * k_frac) as u64;
        let tail = binom_tail(z, k, p).unwrap();
        prop_assert!(chernoff_upper(z, k, p).unwrap() >= tail * (1.0 - 1e-12));
        if k <= z - 1 {
            prop_assert!(chernoff_lower(z, k, p).unwrap() <= tail * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(config(60))]

    /// The log-space tail stays accurate at trial counts far beyond linear
    /// range, judged against the rational oracle's logarithm.
    #[test]
    fn ln_tail_large_z_accuracy(
        z in 1_000u64..=20_000,
        k in 0u64..=50,
        p in 0.05f64..0.95,
    ) {
        prop_assume!(k < z);
        let exact_ln = rational_ln(&binom_tail_exact(z, k, p).unwrap());
        let fast_ln = ln_binom_tail(z, k, p).unwrap();
        // 1e-12 relative on the tail is 1e-12 absolute on its log.
        prop_assert!(
            (fast_ln - exact_ln).abs() <= 1e-11 + 1e-13 * exact_ln.abs(),
            "z={z} k={k} p={p}: fast_ln={fast_ln} exact_ln={exact_ln}"
        );
    }
}

proptest! {
    #![proptest_config(config(300))]

    /// Relative entropy monotonicity: for p < q it increases in q and
    /// decreases in p; the pattern flips for q < p.
    #[test]
    fn rel_entropy_monotonicity(a in 0.02f64..0.98, b in 0.02f64..0.98) {
        prop_assume!((a - b).abs() > 0.02);
        let (p, q) = (a.min(b), a.max(b));
        let base = rel_entropy(p, q).unwrap();
        let dq = 0.5 * (1.0 - q);
        let dp = 0.5 * (q - p);
        prop_assert!(rel_entropy(p, q + dq).unwrap() > base);
        prop_assert!(rel_entropy(p + dp, q).unwrap() < base);
        // Flipped ordering.
        let base_rev = rel_entropy(q, p).unwrap();
        let dq2 = 0.5 * p;
        prop_assert!(rel_entropy(q, p - dq2).unwrap() > base_rev);
        prop_assert!(rel_entropy(q - dp, p).unwrap() < base_rev);
    }
}

proptest! {
    #![proptest_config(config(500))]

    /// Guaranteed infidelity is nonincreasing in delta and N, nondecreasing
    /// in k.
    #[test]
    fn eps_bar_monotonicity(
        n in 3u64..=120,
        k_frac in 0.0f64..1.0,
        delta in 0.01f64..0.9,
        lambda in 0.1f64..0.9,
    ) {
        let k = ((n - 2) as f64 * k_frac) as u64; // k <= n-2 so k is valid at n and k+1 too
        let st = strategy(lambda);
        let base = eps_bar(k, n, delta, st).unwrap();
        prop_assert!(eps_bar(k, n, delta * 1.1, st).unwrap() <= base + 1e-12);
        prop_assert!(eps_bar(k, n + 5, delta, st).unwrap() <= base + 1e-12);
        prop_assert!(eps_bar(k + 1, n, delta, st).unwrap() >= base - 1e-12);
    }

    /// i.i.d. guaranteed infidelity: strictly decreasing in delta and N,
    /// strictly increasing in k, away from the saturation-at-1 regime.
    #[test]
    fn eps_bar_iid_strict_monotonicity(
        n in 3u64..=150,
        k_frac in 0.0f64..1.0,
        delta in 0.01f64..0.7,
        lambda in 0.0f64..0.9,
    ) {
        let k = ((n - 2) as f64 * k_frac * 0.5) as u64;
        let st = strategy(lambda);
        let base = eps_bar_iid(k, n, delta, st).unwrap();
        prop_assume!(base < 1.0);
        prop_assert!(eps_bar_iid(k, n, delta * 1.5, st).unwrap() < base - 1e-10);
        prop_assert!(eps_bar_iid(k, n + n.max(10) / 10, delta, st).unwrap() < base - 1e-10);
        if eps_bar_iid(k + 1, n, delta, st).unwrap() < 1.0 {
            prop_assert!(eps_bar_iid(k + 1, n, delta, st).unwrap() > base + 1e-10);
        }
    }

    /// i.i.d. guaranteed infidelity never exceeds the adversarial one.
    #[test]
    fn iid_below_adversarial(
        n in 2u64..=100,
        k_frac in 0.0f64..1.0,
        delta in 0.01f64..0.99,
        lambda in 0.05f64..0.95,
    ) {
        let k = ((n - 1) as f64 * k_frac) as u64;
        let st = strategy(lambda);
        let iid = eps_bar_iid(k, n, delta, st).unwrap();
        let adv = eps_bar(k, n, delta, st).unwrap();
        prop_assert!(iid <= adv + 1e-10, "iid={iid} adv={adv}");
    }

    /// Conditional-infidelity floor: above the gap line the guaranteed
    /// infidelity saturates at 1; below it, it stays above k/(nu N).
    #[test]
    fn eps_bar_floor(
        n in 2u64..=100,
        k_frac in 0.0f64..1.0,
        delta in 0.01f64..0.5,
        lambda in 0.1f64..0.9,
    ) {
        let k = ((n - 1) as f64 * k_frac) as u64;
        let st = strategy(lambda);
        let v = eps_bar(k, n, delta, st).unwrap();
        if k as f64 >= st.nu() * n as f64 {
            prop_assert!(v == 1.0, "expected saturation, got {v}");
        } else {
            prop_assert!(v > k as f64 / (st.nu() * n as f64), "floor broken: {v}");
        }
    }
}

proptest! {
    #![proptest_config(config(200))]

    /// Stabilizer closure: the product of two stabilizer elements is the
    /// element of the summed label, both symbolically and at matrix level.
    #[test]
    fn stabilizer_closure(
        d_pick in 0..=1usize,
        n in 2usize..=4,
        seed_a in 0u64..1_000_000,
        seed_b in 0u64..1_000_000,
    ) {
        let d = [2u32, 3][d_pick];
        prop_assume!((d as usize).pow(n as u32) <= 128);
        // Path graph with seed-dependent multiplicities, closed into a cycle
        // when that adds a new pair.
        let mut edges: Vec<(usize, usize, u32)> = (0..n - 1)
            .map(|i| (i, i + 1, 1 + ((seed_a >> i) as u32) % (d - 1).max(1)))
            .collect();
        if n >= 3 {
            edges.push((0, n - 1, 1 + ((seed_b >> 1) as u32) % (d - 1).max(1)));
        }
        let spec = GraphSpec::new(d, n, edges).unwrap();
        let ka: Vec<u32> = (0..n).map(|i| ((seed_a >> (3 * i)) % d as u64) as u32).collect();
        let kb: Vec<u32> = (0..n).map(|i| ((seed_b >> (3 * i)) % d as u64) as u32).collect();
        let ksum: Vec<u32> = ka.iter().zip(&kb).map(|(&a, &b)| (a + b) % d).collect();

        let ga = stabilizer_element(&spec, &ka).unwrap();
        let gb = stabilizer_element(&spec, &kb).unwrap();
        let gsum = stabilizer_element(&spec, &ksum).unwrap();
        let product = ga.mul(&gb).unwrap();
        prop_assert_eq!(&product, &gsum);
        let matrix_product = ga.matrix().unwrap() * gb.matrix().unwrap();
        prop_assert!((matrix_product - gsum.matrix().unwrap()).norm() < 1e-12);
    }
}

/// All test projectors commute pairwise and average to the bare verification
/// operator with gap 1/d.
#[test]
fn projectors_commute_and_average() {
    for spec in [
        GraphSpec::new(2, 3, vec![(0, 1, 1), (1, 2, 1)]).unwrap(),
        GraphSpec::new(3, 2, vec![(0, 1, 2)]).unwrap(),
    ] {
        let d = spec.d();
        let dim = spec.dimension();
        let total = dim as u64;
        let mut projectors = Vec::new();
        let mut k_vec = vec![0u32; spec.n()];
        for code in 0..total {
            let mut c = code;
            for digit in k_vec.iter_mut().rev() {
                *digit = (c % d as u64) as u32;
                c /= d as u64;
            }
            projectors.push(test_projector(&spec, &k_vec).unwrap());
        }
        for i in 0..projectors.len() {
            for j in (i + 1)..projectors.len() {
                let comm = &projectors[i] * &projectors[j] - &projectors[j] * &projectors[i];
                assert!(comm.norm() < 1e-10, "projectors {i},{j} do not commute");
            }
        }
        let mut avg = projectors[0].clone();
        for p in &projectors[1..] {
            avg += p;
        }
        avg /= num_complex::Complex64::new(total as f64, 0.0);
        let omega_tilde = strategy_operator(&spec, 1.0 / d as f64).unwrap();
        assert!((avg - omega_tilde).norm() < 1e-10);
    }
}

/// Self-products of generators close exactly: S_i^d is the identity string.
#[test]
fn generator_order() {
    for spec in [GraphSpec::triangle(3).unwrap(), GraphSpec::linear_cluster(2, 4).unwrap()] {
        for v in 0..spec.n() {
            let s = qcert_core::sim::pauli::stabilizer_generator(&spec, v).unwrap();
            let id = s.pow(spec.d()).unwrap();
            assert_eq!(id, PauliString::identity(spec.d(), spec.n()));
        }
    }
}

/// The exact-oracle tail stays consistent with itself through the complement
/// identity sum_j pmf = 1.
#[test]
fn oracle_total_mass() {
    let full = binom_tail_exact(37, 37, 0.613).unwrap();
    assert_eq!(full, BigRational::from_integer(1.into()));
}
