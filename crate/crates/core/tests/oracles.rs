mod common;

use aoii_core::markov::{
    absorption_probabilities, embed_dtmc, expected_visits, fundamental_matrix,
    half_second_moment_absorption_time, mean_absorption_time,
};
use aoii_core::metrics::{cycle_stats, stationary_distribution};
use aoii_core::pull::{build_pull_cycle_chain, insync_samples, pull_cycle_stats};
use aoii_core::push::{build_push_cycle_chain, push_cycle_stats};
use aoii_core::{
    analyze, sources, AbsorbingChain, ChannelModel, Matrix, Policy, PullPolicy, PushPolicy,
};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn oracle_expm_matches_scalar_exponential() {
    let a = Matrix::from_rows(&[[-3.0, 3.0], [0.0, -3.0]]).unwrap();
    // e^{tA} for a Jordan block: e^{-3t} [[1, 3t], [0, 1]]
    let t: f64 = 1.7;
    let e = expm(&a.scale(t));
    let s = (-3.0 * t).exp();
    assert!((e[(0, 0)] - s).abs() < 1e-14);
    assert!((e[(0, 1)] - 3.0 * t * s).abs() < 1e-14);
}

#[test]
fn moments_match_density_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let chain = random_chain(&mut rng);
        let (m1, m2) = quadrature_moments(&chain);
        let mean = mean_absorption_time(&chain).unwrap();
        let half = half_second_moment_absorption_time(&chain).unwrap();
        assert!(rel_err(mean, m1) < 1e-6, "mean {mean} vs {m1}");
        assert!(
            rel_err(2.0 * half, m2) < 1e-6,
            "second {} vs {m2}",
            2.0 * half
        );
        assert!(2.0 * half >= mean * mean);
    }
}

#[test]
fn cycle_chain_moments_match_quadrature() {
    let ch = ChannelModel::new(1.0).unwrap();
    let q = sources::q2();
    for i in 0..3 {
        let push =
            build_push_cycle_chain(&q, i, &PushPolicy::uniform(3, 0.7, 3).unwrap(), &ch).unwrap();
        let pull =
            build_pull_cycle_chain(&q, i, &PullPolicy::new(vec![0.4, 1.1, 2.0]).unwrap(), &ch)
                .unwrap();
        for c in [push, pull] {
            let (m1, m2) = quadrature_moments(&c);
            assert!(rel_err(mean_absorption_time(&c).unwrap(), m1) < 1e-6);
            assert!(rel_err(2.0 * half_second_moment_absorption_time(&c).unwrap(), m2) < 1e-6);
        }
    }
}

#[test]
fn fundamental_matrix_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let chain = random_chain(&mut rng);
        let e = embed_dtmc(&chain);
        let f = fundamental_matrix(&e).unwrap();
        let rhs = Matrix::identity(f.rows()).add(&e.d.matmul(&f));
        assert!(f.max_abs_diff(&rhs) < 1e-10);
        for i in 0..f.rows() {
            assert!(f[(i, i)] >= 1.0);
            assert!(f.row(i).iter().all(|&v| v >= 0.0));
        }
        for i in 0..e.d.rows() {
            let s: f64 = e.d.row(i).iter().chain(e.e.row(i)).sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert_eq!(e.d[(i, i)], 0.0);
        }
    }
}

#[test]
fn erlang_chain_visits_every_stage_once() {
    for k in 1..=6 {
        let rate = 1.3;
        let mut a = Matrix::zeros(k, k);
        let mut b = Matrix::zeros(k, 1);
        for s in 0..k {
            a[(s, s)] = -rate;
            if s + 1 < k {
                a[(s, s + 1)] = rate;
            } else {
                b[(s, 0)] = rate;
            }
        }
        let mut beta = vec![0.0; k];
        beta[0] = 1.0;
        let chain = AbsorbingChain::new(a, b, beta).unwrap();
        let f = fundamental_matrix(&embed_dtmc(&chain)).unwrap();
        for s in 0..k {
            assert_eq!(f[(0, s)], 1.0);
            let mut ind = vec![false; k];
            ind[s] = true;
            assert_eq!(expected_visits(&chain, &ind).unwrap(), 1.0);
        }
    }
}

#[test]
fn stationary_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for n in [2, 3, 5, 5, 5, 8] {
        let p = random_stochastic(&mut rng, n);
        let pi = stationary_distribution(&p).unwrap();
        let oracle = power_iteration(&p, 1e-15);
        for (a, b) in pi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9);
        }
    }
    // every SP chain the reference sources produce
    let ch = ChannelModel::new(1.0).unwrap();
    for (_, q) in sources::all() {
        let n = q.n();
        let policies = [
            Policy::Push(PushPolicy::uniform(1, 0.5, n).unwrap()),
            Policy::Push(PushPolicy::uniform(3, 4.0, n).unwrap()),
            Policy::Pull(PullPolicy::uniform(0.25, n).unwrap()),
            Policy::Pull(PullPolicy::new((0..n).map(|i| 0.3 + i as f64).collect()).unwrap()),
        ];
        for pol in &policies {
            let stats = cycle_stats(&q, pol, &ch).unwrap();
            let rows: Vec<Vec<f64>> = stats.iter().map(|s| s.p_row.clone()).collect();
            let p = Matrix::from_rows(&rows).unwrap();
            let pi = stationary_distribution(&p).unwrap();
            let oracle = power_iteration(&p, 1e-15);
            for (a, b) in pi.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9, "{pi:?} vs {oracle:?}");
            }
        }
    }
}

#[test]
fn push_k1_and_pull_coincide_for_two_states() {
    let q = sources::q3();
    let ch = ChannelModel::new(1.0).unwrap();
    for (t1, t2) in [(1.0, 1.0), (0.3, 2.5), (4.0, 0.2)] {
        let push = PushPolicy::new(1, vec![t1, t2]).unwrap();
        let pull = PullPolicy::new(vec![1.0 / t1, 1.0 / t2]).unwrap();
        for i in 0..2 {
            let a = push_cycle_stats(&q, i, &push, &ch).unwrap();
            let b = pull_cycle_stats(&q, i, &pull, &ch).unwrap();
            assert!((a.a - b.a).abs() < 1e-12);
            assert!((a.d - b.d).abs() < 1e-12);
            for (x, y) in a.p_row.iter().zip(&b.p_row) {
                assert!((x - y).abs() < 1e-12);
            }
            let insync = insync_samples(q.holding_rate(i), pull.rate(i), 1.0);
            assert!((b.r - a.r - insync).abs() < 1e-12);
        }
    }
}

#[test]
fn no_sampling_limit() {
    // Once the threshold essentially never fires, each cycle is a holding time
    // plus a first passage back to i, and every SP transition is a self-loop.
    let q = sources::q3();
    let ch = ChannelModel::new(1.0).unwrap();
    // first passage from the other state is Exp(q_ji)
    let no_sampling: Vec<(f64, f64)> = (0..2)
        .map(|i| {
            let j = 1 - i;
            let ret = q.rate(j, i);
            (1.0 / (ret * ret), 1.0 / ret + 1.0 / q.holding_rate(i))
        })
        .collect();
    let m = analyze(
        &q,
        &Policy::Push(PushPolicy::uniform(3, 1e3, 2).unwrap()),
        &ch,
    )
    .unwrap();
    assert!(m.rate < 1e-6);
    let num: f64 = m.pi.iter().zip(&no_sampling).map(|(p, s)| p * s.0).sum();
    let den: f64 = m.pi.iter().zip(&no_sampling).map(|(p, s)| p * s.1).sum();
    assert!(rel_err(m.aoii, num / den) < 1e-4);

    // further out P is the identity to machine precision
    let err = analyze(
        &q,
        &Policy::Push(PushPolicy::uniform(3, 1e9, 2).unwrap()),
        &ch,
    )
    .unwrap_err();
    assert!(err.is_degenerate(), "{err}");
    let pol = PushPolicy::uniform(3, 1e9, 2).unwrap();
    for (i, &(a0, d0)) in no_sampling.iter().enumerate() {
        let s = push_cycle_stats(&q, i, &pol, &ch).unwrap();
        assert!(s.r < 1e-6);
        assert!(rel_err(s.a, a0) < 1e-6);
        assert!(rel_err(s.d, d0) < 1e-6);
    }
}

#[test]
fn relabeling_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let ch = ChannelModel::new(1.3).unwrap();
    let q = random_generator(&mut rng, 4);
    let perm = [2, 0, 3, 1];
    let permute = |v: &[f64]| {
        let mut out = vec![0.0; v.len()];
        for (s, &x) in v.iter().enumerate() {
            out[perm[s]] = x;
        }
        out
    };
    let qp = q.permuted(&perm);
    let thetas = vec![0.4, 1.0, 2.2, 0.8];
    let lambdas = vec![0.3, 1.7, 0.9, 2.4];
    let cases = [
        (
            Policy::Push(PushPolicy::new(2, thetas.clone()).unwrap()),
            Policy::Push(PushPolicy::new(2, permute(&thetas)).unwrap()),
        ),
        (
            Policy::Pull(PullPolicy::new(lambdas.clone()).unwrap()),
            Policy::Pull(PullPolicy::new(permute(&lambdas)).unwrap()),
        ),
    ];
    for (orig, relabeled) in cases {
        let a = analyze(&q, &orig, &ch).unwrap();
        let b = analyze(&qp, &relabeled, &ch).unwrap();
        assert!(rel_err(b.aoii, a.aoii) < 1e-12);
        assert!(rel_err(b.rate, a.rate) < 1e-12);
        let pi_back: Vec<f64> = (0..4).map(|s| b.pi[perm[s]]).collect();
        for (x, y) in pi_back.iter().zip(&a.pi) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn push_samples_bounded_by_transmission_jumps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ch = ChannelModel::new(0.8).unwrap();
    for n in [3, 4, 5] {
        let q = random_generator(&mut rng, n);
        for k in [1, 2, 3] {
            let pol = PushPolicy::uniform(k, 0.6, n).unwrap();
            for i in 0..n {
                let chain = build_push_cycle_chain(&q, i, &pol, &ch).unwrap();
                let stats = push_cycle_stats(&q, i, &pol, &ch).unwrap();
                // expected occupation times: −β·A⁻¹, via the oracle solver
                let occ = gauss_jordan_solve(
                    &chain.a().transpose(),
                    &Matrix::from_row_major(chain.transient_count(), 1, chain.beta().to_vec()),
                );
                let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                let jumps: f64 = others
                    .iter()
                    .enumerate()
                    .map(|(r, &j)| -occ[(k * (n - 1) + r, 0)] * q.holding_rate(j))
                    .sum();
                assert!(
                    stats.r <= 1.0 + jumps + 1e-12,
                    "r {} jumps {jumps}",
                    stats.r
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn absorption_probabilities_sum_to_one(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chain = random_chain(&mut rng);
        let p = absorption_probabilities(&chain).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(p.iter().all(|&v| v >= -1e-15));
    }

    #[test]
    fn push_rows_are_stochastic(
        seed in any::<u64>(), n in 2usize..6, k in 1usize..5,
        theta in 0.01f64..50.0, mu in 0.05f64..20.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_generator(&mut rng, n);
        let pol = PushPolicy::uniform(k, theta, n).unwrap();
        let ch = ChannelModel::new(mu).unwrap();
        for i in 0..n {
            let s = push_cycle_stats(&q, i, &pol, &ch).unwrap();
            prop_assert!((s.p_row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(s.a > 0.0 && s.d > 1.0 / q.holding_rate(i) && s.r >= 0.0);
        }
    }

    #[test]
    fn pull_rows_stochastic_and_rate_bounded(
        seed in any::<u64>(), n in 2usize..6, mu in 0.05f64..20.0,
        lambdas in prop::collection::vec(0.0f64..20.0, 5),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_generator(&mut rng, n);
        let pol = PullPolicy::new(lambdas[..n].to_vec()).unwrap();
        let ch = ChannelModel::new(mu).unwrap();
        for i in 0..n {
            let s = pull_cycle_stats(&q, i, &pol, &ch).unwrap();
            prop_assert!((s.p_row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(s.r <= pol.rate(i) * s.d + 1.0 + 1e-12);
        }
    }
}
