//! Property tests and independent oracles for the metric set.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spdc_metrics::{jsd, kl_divergence, mae, mse, wasserstein_1d, wemd};

/// Independent 1-D optimal transport oracle: greedy mass matching, which is
/// exact for convex costs such as |i - j| (solves the transport LP).
fn transport_lp_oracle(p: &[f64], q: &[f64]) -> f64 {
    let mut supply: Vec<f64> = p.to_vec();
    let mut demand: Vec<f64> = q.to_vec();
    let mut cost = 0.0f64;
    let mut i = 0;
    let mut j = 0;
    while i < supply.len() && j < demand.len() {
        if supply[i] <= 1e-15 {
            i += 1;
            continue;
        }
        if demand[j] <= 1e-15 {
            j += 1;
            continue;
        }
        let moved = supply[i].min(demand[j]);
        cost += moved * (i as f64 - j as f64).abs();
        supply[i] -= moved;
        demand[j] -= moved;
    }
    cost
}

fn normalized(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

#[test]
fn w1_matches_lp_oracle_on_8_bins() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..200 {
        let p = normalized(8, &mut rng);
        let q = normalized(8, &mut rng);
        let cdf = wasserstein_1d(&p, &q).unwrap();
        let lp = transport_lp_oracle(&p, &q);
        assert!(
            (cdf - lp).abs() < 1e-9,
            "CDF form {cdf} vs LP oracle {lp}"
        );
    }
}

#[test]
fn jsd_bounded_by_ln2_on_1000_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ln2 = std::f64::consts::LN_2;
    for _ in 0..1000 {
        let p = normalized(25, &mut rng);
        let q = normalized(25, &mut rng);
        let v = jsd(&p, &q).unwrap();
        assert!(v >= -1e-12 && v <= ln2 + 1e-9, "jsd {v} out of [0, ln2]");
    }
}

#[test]
fn wemd_triangle_inequality_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..300 {
        let a = normalized(8 * 5, &mut rng);
        let b = normalized(8 * 5, &mut rng);
        let c = normalized(8 * 5, &mut rng);
        let ab = wemd(&a, &b, 8, 5).unwrap();
        let bc = wemd(&b, &c, 8, 5).unwrap();
        let ac = wemd(&a, &c, 8, 5).unwrap();
        assert!(ac <= ab + bc + 1e-12);
    }
}

proptest! {
    #[test]
    fn divergences_zero_iff_equal(v in prop::collection::vec(1e-6f64..1.0, 6..40)) {
        let s: f64 = v.iter().sum();
        let p: Vec<f64> = v.iter().map(|x| x / s).collect();
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-10);
        prop_assert!(jsd(&p, &p).unwrap().abs() < 1e-10);
        prop_assert!(mse(&p, &p).unwrap() == 0.0);
        prop_assert!(mae(&p, &p).unwrap() == 0.0);
        // perturb one bin: every metric must move off zero
        let mut q = p.clone();
        let delta = 0.5 * q[0];
        q[0] -= delta;
        q[1] += delta;
        prop_assert!(jsd(&p, &q).unwrap() > 0.0);
        prop_assert!(kl_divergence(&p, &q).unwrap() > 0.0);
        prop_assert!(mse(&p, &q).unwrap() > 0.0);
    }

    #[test]
    fn jsd_and_wemd_symmetric(
        a in prop::collection::vec(1e-9f64..1.0, 24),
        b in prop::collection::vec(1e-9f64..1.0, 24),
    ) {
        let sa: f64 = a.iter().sum();
        let sb: f64 = b.iter().sum();
        let p: Vec<f64> = a.iter().map(|x| x / sa).collect();
        let q: Vec<f64> = b.iter().map(|x| x / sb).collect();
        prop_assert!((jsd(&p, &q).unwrap() - jsd(&q, &p).unwrap()).abs() < 1e-12);
        prop_assert!((wemd(&p, &q, 4, 6).unwrap() - wemd(&q, &p, 4, 6).unwrap()).abs() < 1e-12);
        prop_assert!((mse(&p, &q).unwrap() - mse(&q, &p).unwrap()).abs() < 1e-15);
        prop_assert!((mae(&p, &q).unwrap() - mae(&q, &p).unwrap()).abs() < 1e-15);
    }
}
