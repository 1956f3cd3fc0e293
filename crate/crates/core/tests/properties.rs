use proptest::prelude::*;

use synclab::analytics::{
    d_closed_form, moments_closed_form, ode_derivative, stationary_limits, u_functions,
};
use synclab::conditional::{
    conditional_given_count, conditional_moments, free_moment_step, ConditionalState,
    EpochSequence,
};
use synclab::model::{
    derived_scalars, expected_post_jump_moments, jump_map, moments_of_config, pair_distribution, NodePair,
};
use synclab::phase::phi_exponent;
use synclab::phi::{g2, g2_prime, phi2};
use synclab::{ClockConfig, ModelParams, MomentVector};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn moments_close(a: MomentVector, b: MomentVector, tol: f64) -> bool {
    a.to_array().iter().zip(b.to_array()).all(|(x, y)| close(*x, y, tol))
}

prop_compose! {
    fn arb_params(max_n: usize)(
        n in 2..=max_n,
        skew in -1.0..1.0f64,
        sigma in 0.0..2.0f64,
        alpha in 0.05..5.0f64,
        beta in 0.0..5.0f64,
    ) -> ModelParams {
        ModelParams::new(n, 1.0, 1.0 + skew, sigma, alpha, beta).unwrap()
    }
}

prop_compose! {
    fn arb_config(max_n: usize)(n in 2..=max_n)(
        x in prop::collection::vec(-10.0..10.0f64, n + 1)
    ) -> ClockConfig {
        ClockConfig::new(x).unwrap()
    }
}

proptest! {
    #[test]
    fn moments_ignore_a_common_shift(cfg in arb_config(12), c in -100.0..100.0f64) {
        let shifted = ClockConfig::new(cfg.as_slice().iter().map(|x| x + c).collect()).unwrap();
        prop_assert!(moments_close(moments_of_config(&cfg), moments_of_config(&shifted), 1e-9));
    }

    #[test]
    fn moments_ignore_sensor_order(cfg in arb_config(12), seed in any::<u64>()) {
        let mut x = cfg.clone().into_vec();
        let k = x.len() - 1;
        x[1..].rotate_left((seed as usize) % k);
        x[1..].reverse();
        let permuted = ClockConfig::new(x).unwrap();
        prop_assert!(moments_close(moments_of_config(&cfg), moments_of_config(&permuted), 1e-12));
    }

    #[test]
    fn pairwise_moment_is_twice_the_sample_variance(cfg in arb_config(12)) {
        let y = cfg.sensors();
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m = moments_of_config(&cfg);
        prop_assert!(close(m.pairwise_sq, 2.0 * var, 1e-10));
        prop_assert!(m.offset_sq >= 0.0 && m.pairwise_sq >= 0.0);
    }

    #[test]
    fn jump_copies_the_sender_and_leaves_the_rest(cfg in arb_config(8), s in 1usize..=9, r in 2usize..=9) {
        let len = cfg.as_slice().len();
        prop_assume!(s <= len && r <= len && s != r);
        let out = jump_map(&cfg, NodePair::new(s, r).unwrap()).unwrap();
        for i in 1..=len {
            let want = if i == r { cfg.node(s) } else { cfg.node(i) };
            prop_assert_eq!(out.node(i), want);
        }
        prop_assert_eq!(out.server(), cfg.server());
    }

    #[test]
    fn pair_distribution_is_a_probability_law(p in arb_params(15)) {
        let dist = pair_distribution(&p).unwrap();
        prop_assert_eq!(dist.len(), p.n * p.n);
        let total: f64 = dist.iter().map(|(_, w)| w).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(dist.iter().all(|(pair, w)| pair.receiver != 1 && *w >= 0.0));
    }

    #[test]
    fn expected_jump_is_linear_in_the_moments(p in arb_params(10), seed in any::<u64>()) {
        let n = p.n;
        let x: Vec<f64> = (0..=n)
            .map(|i| ((seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64 * 1442695040888963407)) >> 11) as f64
                / (1u64 << 53) as f64 * 8.0 - 4.0)
            .collect();
        let cfg = ClockConfig::new(x).unwrap();
        let s = derived_scalars(&p).unwrap();
        let m = moments_of_config(&cfg);
        let kv = s.k.unwrap() * m.quadratic();
        let got = expected_post_jump_moments(&cfg, &p).unwrap();
        prop_assert!(close(got.offset_sq, kv[0], 1e-12));
        prop_assert!(close(got.pairwise_sq, kv[1], 1e-12));
        prop_assert!(close(got.displacement, s.k_n.unwrap() * m.displacement, 1e-12));
    }

    #[test]
    fn closed_form_starts_at_the_initial_state(p in arb_params(50), r0 in 0.0..5.0f64, d0 in -2.0..2.0f64) {
        let init = MomentVector::new(r0 + d0 * d0, r0, d0);
        let m = moments_closed_form(&p, init, 0.0).unwrap();
        prop_assert!(moments_close(m, init, 1e-14));
    }

    #[test]
    fn closed_form_second_moments_stay_nonnegative(p in arb_params(200), t in 0.0..500.0f64) {
        let m = moments_closed_form(&p, MomentVector::ZERO, t).unwrap();
        prop_assert!(m.offset_sq >= -1e-12 && m.pairwise_sq >= -1e-12);
        prop_assert!(m.offset_sq >= m.displacement * m.displacement * (1.0 - 1e-9) - 1e-12);
    }

    #[test]
    fn closed_form_is_a_flow(p in arb_params(30), t1 in 0.0..20.0f64, t2 in 0.0..20.0f64) {
        let mid = moments_closed_form(&p, MomentVector::ZERO, t1).unwrap();
        let direct = moments_closed_form(&p, MomentVector::ZERO, t1 + t2).unwrap();
        let stepped = moments_closed_form(&p, mid, t2).unwrap();
        prop_assert!(moments_close(direct, stepped, 1e-10));
        prop_assert!(close(d_closed_form(&p, 0.0, t1 + t2), d_closed_form(&p, mid.displacement, t2), 1e-12));
    }

    #[test]
    fn stationary_limit_is_a_fixed_point(p in arb_params(100)) {
        let lim = stationary_limits(&p).unwrap().exact;
        let s = derived_scalars(&p).unwrap();
        let dv = ode_derivative(&s, lim.quadratic(), lim.displacement);
        let scale = lim.offset_sq.max(lim.pairwise_sq).max(1.0) * p.total_rate();
        prop_assert!(dv.abs().max() <= 1e-10 * scale);
    }

    #[test]
    fn free_steps_compose(p in arb_params(20), a in 0.0..5.0f64, b in 0.0..5.0f64, r0 in 0.0..3.0f64, d0 in -1.0..1.0f64) {
        let s = derived_scalars(&p).unwrap();
        let init = ConditionalState::from(MomentVector::new(r0, r0, d0));
        let two = free_moment_step(free_moment_step(init, a, &s), b, &s);
        let one = free_moment_step(init, a + b, &s);
        prop_assert!(moments_close(two.to_moments(p.n), one.to_moments(p.n), 1e-12));
    }

    #[test]
    fn count_conditioned_moments_average_the_epoch_recursion(p in arb_params(10), t in 0.1..3.0f64) {
        let s = derived_scalars(&p).unwrap();
        let zero = conditional_given_count(ConditionalState::ZERO, 0, t, &s).unwrap();
        let free = conditional_moments(ConditionalState::ZERO, &EpochSequence::new(vec![], t).unwrap(), &s).unwrap();
        prop_assert!(moments_close(zero.to_moments(p.n), free.to_moments(p.n), 1e-12));

        // One epoch is uniform on (0, t): average the recursion by Simpson's rule.
        let one = conditional_given_count(ConditionalState::ZERO, 1, t, &s).unwrap();
        let m = 400;
        let h = t / m as f64;
        let mut acc = [0.0; 3];
        for i in 0..=m {
            let tau = (i as f64 * h).clamp(1e-12 * t, t * (1.0 - 1e-12));
            let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let st = conditional_moments(ConditionalState::ZERO, &EpochSequence::new(vec![tau], t).unwrap(), &s).unwrap();
            for (a, v) in acc.iter_mut().zip([st.v[0], st.v[1], st.d]) {
                *a += w * v * h / 3.0 / t;
            }
        }
        prop_assert!(close(one.v[0], acc[0], 1e-9));
        prop_assert!(close(one.v[1], acc[1], 1e-9));
        prop_assert!(close(one.d, acc[2], 1e-9));
    }

    #[test]
    fn u_functions_are_symmetric(a1 in 0.01..0.99f64, a2 in 0.01..0.99f64, delta in 0.1..20.0f64, t in 0.01..10.0f64) {
        let (u1, u2) = u_functions(a1, a2, delta, t).unwrap();
        let (v1, v2) = u_functions(a2, a1, delta, t).unwrap();
        prop_assert!(close(u1, v1, 1e-12) && close(u2, v2, 1e-12));
        prop_assert!(u1 > 0.0 && u2 > 0.0);
    }

    #[test]
    fn phi_functions_are_smooth_across_branches(y in -40.0..40.0f64) {
        let h = 1e-7 * y.abs().max(1.0);
        for f in [g2 as fn(f64) -> f64, phi2, g2_prime] {
            let (a, b) = (f(y), f(y + h));
            prop_assert!(a.is_finite() && (a - b).abs() <= 1e-5 * a.abs().max(1.0));
        }
        prop_assert!(g2(y) > 0.0);
    }

    #[test]
    fn growth_exponent_is_continuous_and_monotone(g in 0.0..3.0f64) {
        let h = 1e-9;
        prop_assert!(phi_exponent(g + h) >= phi_exponent(g));
        prop_assert!((phi_exponent(g + h) - phi_exponent(g)).abs() <= 1e-8);
    }
}
