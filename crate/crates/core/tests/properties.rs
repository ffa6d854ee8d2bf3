mod common;

use ctc_core::dctc::solver::lazy_fixed_point_full;
use ctc_core::dctc::{solve_max_entropy, SolverOptions};
use ctc_core::graphs::{all_cut_plans, causal_set_to_graph, graph_to_causal_set};
use ctc_core::linalg::{self, invert_permutation};
use ctc_core::pctc::mixsym_lift;
use ctc_core::random::{self, random_channel, split_seed};
use ctc_core::{
    dctc_apply, pctc_apply, trace_distance, DensityMatrix, ElementaryMorphism, Model, PctcOutcome, QChannel,
};
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = usize> {
    2usize..=3
}

fn assert_state(rho: &DensityMatrix) {
    let tr = linalg::trace(rho.matrix());
    assert!((tr.re - 1.0).abs() < 1e-9 && tr.im.abs() < 1e-9, "trace {tr}");
    assert!(linalg::hermiticity_defect(rho.matrix()) < 1e-9);
    assert!(rho.eigenvalues()[0] > -1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_channels_are_cptp(a in dims(), b in dims(), seed in any::<u64>()) {
        let t = random_channel(vec![a], vec![b], seed);
        prop_assert!(t.is_cptp(1e-9));
        let rho = random::random_density(&mut common::rng(seed), vec![a]);
        assert_state(&t.apply(&rho).unwrap());
    }

    #[test]
    fn trace_distance_is_a_metric(d in dims(), seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let x = random::random_density(&mut r, vec![d]);
        let y = random::random_density(&mut r, vec![d]);
        let z = random::random_pure_state(&mut r, vec![d]);
        let xy = trace_distance(&x, &y).unwrap();
        prop_assert!((xy - trace_distance(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&xy));
        prop_assert!(trace_distance(&x, &x).unwrap() < 1e-12);
        prop_assert!(xy <= trace_distance(&x, &z).unwrap() + trace_distance(&z, &y).unwrap() + 1e-12);
    }

    #[test]
    fn channels_contract_trace_distance(d in dims(), seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let x = random::random_density(&mut r, vec![d]);
        let y = random::random_density(&mut r, vec![d]);
        let t = random_channel(vec![d], vec![d], split_seed(seed, 1));
        let before = trace_distance(&x, &y).unwrap();
        let after = trace_distance(&t.apply(&x).unwrap(), &t.apply(&y).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-10);
    }

    #[test]
    fn permutations_invert(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let rho = random::random_density(&mut r, vec![2, 3, 2]);
        let mut perm = vec![0, 1, 2];
        perm.rotate_left((seed % 3) as usize);
        let back = rho.permute(&perm).unwrap().permute(&invert_permutation(&perm)).unwrap();
        prop_assert!(trace_distance(&rho, &back).unwrap() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let a = random::random_density(&mut r, vec![2]);
        let b = random::random_density(&mut r, vec![3]);
        let ab = a.tensor(&b);
        prop_assert!(trace_distance(&ab.partial_trace(&[0]).unwrap(), &a).unwrap() < 1e-12);
        prop_assert!(trace_distance(&ab.partial_trace(&[1]).unwrap(), &b).unwrap() < 1e-12);
    }

    #[test]
    fn solver_returns_a_fixed_state(d in dims(), kind in 0usize..5, seed in any::<u64>()) {
        let t = common::structured_channel(d, kind, seed);
        let sol = solve_max_entropy(&t, &SolverOptions::default()).unwrap();
        assert_state(&sol.state);
        prop_assert!(trace_distance(&t.apply(&sol.state).unwrap(), &sol.state).unwrap() < 1e-8);
        let anchor = lazy_fixed_point_full(&t).unwrap().state;
        prop_assert!(sol.state.entropy() >= anchor.entropy() - 1e-9);
    }

    #[test]
    fn dctc_outputs_states(cv in dims(), seed in any::<u64>()) {
        let phi = random_channel(vec![2, cv], vec![2, cv], seed);
        let e = ElementaryMorphism::new(phi, vec![cv]).unwrap();
        let rho = random::random_density(&mut common::rng(seed), vec![2]);
        assert_state(&dctc_apply(&e, &rho).unwrap());
    }

    #[test]
    fn trivial_loop_is_the_channel(seed in any::<u64>()) {
        // A loop that carries nothing back leaves the channel unchanged.
        let f = random_channel(vec![2], vec![2], seed);
        let phi = f.tensor(&QChannel::identity(vec![2]));
        let rho = random::random_density(&mut common::rng(seed), vec![2]);
        let want = f.apply(&rho).unwrap();
        let e = ElementaryMorphism::new(phi.clone(), vec![2]).unwrap();
        prop_assert!(trace_distance(&dctc_apply(&e, &rho).unwrap(), &want).unwrap() < 1e-9);
        match pctc_apply(&phi, &[2], &rho).unwrap() {
            PctcOutcome::State { state, .. } => prop_assert!(trace_distance(&state, &want).unwrap() < 1e-9),
            PctcOutcome::NonNormalizable { .. } => prop_assert!(false, "identity loop cannot fail"),
        }
    }

    #[test]
    fn pctc_outputs_are_normalized(cv in dims(), seed in any::<u64>()) {
        let phi = random_channel(vec![2, cv], vec![2, cv], seed);
        let rho = random::random_density(&mut common::rng(seed), vec![2]);
        if let PctcOutcome::State { state, .. } = pctc_apply(&phi, &[cv], &rho).unwrap() {
            assert_state(&state);
        }
        let lifted = mixsym_lift(&ctc_core::pctc::pctc_superop(&phi, &[cv]).unwrap()).unwrap();
        prop_assert!(lifted.is_zero() || (lifted.normalizer() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn posets_round_trip(seed in any::<u64>()) {
        let c = common::random_poset(seed, 9);
        let back = graph_to_causal_set(&causal_set_to_graph(&c)).unwrap();
        prop_assert_eq!(back.relation(), c.relation());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cut_plans_agree(seed in any::<u64>()) {
        let d = common::random_cv_local_diagram(seed);
        let plans = all_cut_plans(d.graph()).unwrap();
        let probes = common::probes_with_ancilla(&d.in_dims(), 1, seed);
        for model in Model::ALL {
            for p in &plans[1..] {
                prop_assert!(common::plan_deviation(&d, model, &plans[0], p, &probes) < 1e-6);
            }
        }
    }
}
