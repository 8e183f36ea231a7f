use proptest::prelude::*;
use resonance_core::bump::{Bump, DecayEnvelope};
use resonance_core::dirichlet::{eval_dn, grid_sup_window, SearchOptions};
use resonance_core::moments::{
    diagonal_sum, m1_exact, m2_exact, min_offdiag_gap, offdiag_bounds, rankin_tail_identity_check, DEFAULT_BUDGET_TERMS,
};
use resonance_core::multfn::UnimodularCmf;
use resonance_core::ntcore::FactorTable;
use resonance_core::oracle::{diagonal_sum_bruteforce, ToyResonator};
use resonance_core::resonator::{PrimeWeights, Resonator};
use std::sync::OnceLock;

fn table() -> &'static FactorTable {
    static T: OnceLock<FactorTable> = OnceLock::new();
    T.get_or_init(|| FactorTable::new(20_000).unwrap())
}

fn toy_weights() -> impl Strategy<Value = Vec<(u32, f64)>> {
    proptest::collection::vec(0.0..1.5f64, 4)
        .prop_map(|w| [2u32, 3, 5, 7].into_iter().zip(w).filter(|&(_, r)| r > 0.05).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The exact moments sit inside the main term plus or minus the off-diagonal bound.
    #[test]
    fn moments_inside_bracket(
        weights in toy_weights(),
        cap in 2u64..60,
        n in 1u64..20,
        log_t in 4.6f64..9.2,
        seed in any::<u64>(),
    ) {
        let toy = ToyResonator::from_prime_weights(cap, &weights).unwrap();
        let support = toy.to_support().unwrap();
        let bump = Bump::default();
        let env = DecayEnvelope::shared(3).unwrap();
        let t = log_t.exp();
        let f = UnimodularCmf::steinhaus(seed, 64).unwrap();
        let phi0 = bump.phi_hat_zero().unwrap();
        let off = offdiag_bounds(&support, n, t, &env, DEFAULT_BUDGET_TERMS).unwrap();
        let diag = diagonal_sum(&support, n, DEFAULT_BUDGET_TERMS).unwrap();
        let s2: f64 = support.entries().iter().map(|e| e.r * e.r).sum();
        let (main1, main2) = (t * phi0 * s2, t / n as f64 * phi0 * diag);
        let m1 = m1_exact(&support, &f, t, &bump, DEFAULT_BUDGET_TERMS).unwrap();
        let m2 = m2_exact(&support, &f, n, t, &bump, DEFAULT_BUDGET_TERMS, table()).unwrap();
        let tol = 1e-9;
        prop_assert!((m1 - main1).abs() <= off.m1 + tol * main1, "M1 {m1} main {main1} off {}", off.m1);
        prop_assert!((m2 - main2).abs() <= off.m2 + tol * main2, "M2 {m2} main {main2} off {}", off.m2);
    }

    /// No point of the window beats the search value by more than the slack.
    #[test]
    fn search_certificate_covers_window(
        seed in any::<u64>(),
        n in 2u64..40,
        t0 in -1e5f64..1e5,
        probes in proptest::collection::vec(0.0f64..1.0, 16),
    ) {
        let f = UnimodularCmf::steinhaus(seed, 64).unwrap();
        let (lo, hi) = (t0, t0 + 20.0);
        let (res, _) = grid_sup_window(&f, n, lo, hi, 0.05, table(), &SearchOptions::default()).unwrap();
        let slack = res.certified_slack.unwrap();
        for u in probes {
            let t = lo + u * (hi - lo);
            let v = eval_dn(&f, n, t, table()).unwrap().norm();
            prop_assert!(v <= res.value + slack + 1e-9, "|D({t})| = {v} > {} + {slack}", res.value);
        }
    }

    #[test]
    fn diagonal_matches_bruteforce(weights in toy_weights(), n in 1u64..15, x in 1u64..15) {
        let toy = ToyResonator::from_prime_weights(x, &weights).unwrap();
        let fast = diagonal_sum(&toy.to_support().unwrap(), n, DEFAULT_BUDGET_TERMS).unwrap();
        let slow = diagonal_sum_bruteforce(&toy, n, x).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-12 * slow);
    }

    #[test]
    fn offdiag_gap_floor(n in 1u64..80, x in 1u64..80) {
        if let Some(g) = min_offdiag_gap(n, x).unwrap() {
            prop_assert!(g >= 1.0 / (n * x) as f64);
        }
    }

    #[test]
    fn rankin_bound_holds(ab in 1u64..100_000, log_cap in 0.0f64..6.0, alpha in 0.01f64..0.6) {
        let res = Resonator::from_log_x(40.0, table()).unwrap();
        let c = rankin_tail_identity_check(&res, ab, 10f64.powf(log_cap), alpha, DEFAULT_BUDGET_TERMS).unwrap();
        prop_assert!(c.holds, "tail {} bound {}", c.exact_tail, c.rankin_bound);
    }

    #[test]
    fn resonator_weights(log_x in 8.0f64..60.0) {
        let res = Resonator::from_log_x(log_x, table()).unwrap();
        let (lo, hi) = res.support_window();
        for &(p, r) in res.prime_weights() {
            let pf = p as f64;
            prop_assert!(lo <= pf && pf <= hi);
            prop_assert!(r > 0.0);
            if res.lambda() >= 2.0 {
                prop_assert!(r < 1.0);
            }
            let t = res.t_value(p as u64, table()).unwrap();
            prop_assert!((t - r / (1.0 + r * r)).abs() <= 1e-15);
        }
    }
}
