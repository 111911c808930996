//! Property tests. Each strategy draws a seed and a few shape parameters;
//! instances are then built from seeded random streams.

use dynent_core::channels::{
    apply, choi_reference_marginal, diamond_distance, diamond_norm_sdp, is_ppt, stinespring_isometry, QuantumChannel,
};
use dynent_core::decoupling::{decouple_states_mc, HaarSampler};
use dynent_core::dynamical::{channel_min_entropy, channel_min_entropy_sdp};
use dynent_core::entropies::{
    cond_min_entropy_down, cond_min_entropy_up, cond_sandwiched_half_up, d_hypothesis, d_max, d_zero, petz_renyi,
    sandwiched_renyi, RenyiOrder,
};
use dynent_core::linalg::{
    fidelity, herm_eig, hermitian_part, identity, partial_trace, tensor, trace_distance, trace_norm, DensityOperator,
    HermitianOperator,
};
use dynent_core::random::{ginibre, haar_unitary, random_density, random_pure_state, stream_rng, StreamRng};
use dynent_core::sdp::{solve, Sense, SdpProblem};
use dynent_core::thermo::{WorkCost, BOLTZMANN};
use dynent_core::ComplexMatrix;
use proptest::prelude::*;

fn rng(seed: u64) -> StreamRng {
    stream_rng(seed, 0)
}

fn hermitian(d: usize, rng: &mut StreamRng) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()).scale(0.5)
}

fn channel(din: usize, dout: usize, nk: usize, seed: u64) -> QuantumChannel {
    QuantumChannel::random(din, dout, nk, &mut rng(seed))
}

fn pushed(n: &QuantumChannel, rho: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::single(hermitian_part(&n.apply_matrix(rho.matrix()))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eig_reconstructs(seed: u64, d in 1usize..=24) {
        let h = hermitian(d, &mut rng(seed));
        let residual = (herm_eig(&h).unwrap().reconstruct() - &h).norm();
        prop_assert!(residual < 1e-10, "residual {residual}");
    }

    #[test]
    fn trace_norm_dominates_trace(seed: u64, d in 1usize..=6) {
        let m = ginibre(d, d, &mut rng(seed));
        prop_assert!(trace_norm(&m).unwrap() >= m.trace().norm() - 1e-12);
    }

    #[test]
    fn fuchs_van_de_graaf(seed: u64, d in 2usize..=4) {
        let mut r = rng(seed);
        let a = random_density(d, &mut r);
        let b = random_density(d, &mut r);
        let f = fidelity(&a, &b).unwrap();
        let t = trace_distance(&a, &b).unwrap();
        prop_assert!(1.0 - f.sqrt() <= t + 1e-10);
        prop_assert!(t <= (1.0 - f).max(0.0).sqrt() + 1e-10);
    }

    #[test]
    fn partial_trace_recovers_factor(seed: u64, da in 1usize..=3, db in 1usize..=3) {
        let mut r = rng(seed);
        let a = random_density(da, &mut r);
        let b = random_density(db, &mut r);
        let back = partial_trace(&tensor(&a, &b), &[0]).unwrap();
        prop_assert!((back.matrix() - a.matrix()).norm() < 1e-12);
    }

    #[test]
    fn sdp_weak_duality_and_scaling(seed: u64, d in 2usize..=4, c in 0.1f64..50.0) {
        let cost = hermitian(d, &mut rng(seed));
        let base = solve(&SdpProblem::single(Sense::Minimize, cost.clone(), vec![(identity(d), 1.0)])).unwrap();
        prop_assert!(base.dual_value <= base.primal_value + 1e-8 * (1.0 + base.primal_value.abs()));
        let scaled = solve(&SdpProblem::single(Sense::Minimize, cost.scale(c), vec![(identity(d), 1.0)])).unwrap();
        let dev = (scaled.primal_value - c * base.primal_value).abs() / (c * base.primal_value.abs()).max(1.0);
        prop_assert!(dev < 1e-6, "relative deviation {dev}");
    }

    #[test]
    fn choi_marginal_is_maximally_mixed(seed: u64, din in 1usize..=3, dout in 1usize..=3, nk in 1usize..=4) {
        let n = channel(din, dout, nk, seed);
        let dev = (choi_reference_marginal(&n).matrix() - identity(din).unscale(din as f64)).norm();
        prop_assert!(dev < 1e-10, "deviation {dev}");
    }

    #[test]
    fn kraus_matches_stinespring(seed: u64, nk in 1usize..=4) {
        let n = channel(2, 3, nk, seed);
        let rho = random_density(2, &mut stream_rng(seed, 1));
        let out = stinespring_isometry(&n).apply(&rho).unwrap();
        let via_v = partial_trace(&out, &[0]).unwrap();
        prop_assert!((via_v.matrix() - n.apply_matrix(rho.matrix())).norm() < 1e-10);
    }

    #[test]
    fn ppt_channels_have_nonnegative_entropy(seed: u64, w in 0.0f64..1.0) {
        let n = channel(2, 2, 2, seed).kraus().to_vec();
        let mixed: Vec<ComplexMatrix> = n
            .iter()
            .map(|k| k.scale((1.0 - w).sqrt()))
            .chain(QuantumChannel::completely_depolarizing(2).kraus().iter().map(|k| k.scale(w.sqrt())))
            .collect();
        let n = QuantumChannel::new(mixed).unwrap();
        if is_ppt(&n) {
            prop_assert!(channel_min_entropy(&n) >= -1e-9);
        }
    }

    #[test]
    fn d_max_data_processing(seed: u64, nk in 1usize..=3) {
        let mut r = rng(seed);
        let rho = random_density(2, &mut r);
        let sigma = random_density(2, &mut r);
        let n = QuantumChannel::random(2, 3, nk, &mut r);
        let after = d_max(&pushed(&n, &rho), &pushed(&n, &sigma)).unwrap();
        prop_assert!(after <= d_max(&rho, &sigma).unwrap() + 1e-9);
    }

    #[test]
    fn renyi_orders_are_monotone(seed: u64) {
        let mut r = rng(seed);
        let a = random_density(2, &mut r);
        let b = random_density(2, &mut r);
        let mut sw = Vec::new();
        let mut pz = Vec::new();
        for alpha in [0.5, 0.9, 1.1, 2.0] {
            sw.push(sandwiched_renyi(RenyiOrder::Alpha(alpha), &a, &b).unwrap());
            pz.push(petz_renyi(RenyiOrder::Alpha(alpha), &a, &b).unwrap());
        }
        sw.push(sandwiched_renyi(RenyiOrder::Infinity, &a, &b).unwrap());
        for v in [&sw, &pz] {
            for w in v.windows(2) {
                prop_assert!(w[0] <= w[1] + 1e-9, "{v:?}");
            }
        }
    }

    #[test]
    fn down_variant_below_up(seed: u64) {
        let rho = random_density(4, &mut rng(seed)).with_dims(vec![2, 2]).unwrap();
        prop_assert!(cond_min_entropy_down(&rho).unwrap() <= cond_min_entropy_up(&rho).unwrap() + 1e-9);
    }

    #[test]
    fn hypothesis_chain(seed: u64, eps in 0.01f64..0.5) {
        let mut r = rng(seed);
        let a = random_density(2, &mut r);
        let b = random_density(2, &mut r);
        let slack = (1.0 / (1.0 - eps)).log2();
        let dh = d_hypothesis(eps, &a, &b).unwrap();
        prop_assert!(d_zero(&a, &b).unwrap() + slack <= dh + 1e-6);
        prop_assert!(dh <= d_max(&a, &b).unwrap() + slack + 1e-6);
    }

    #[test]
    fn channel_min_entropy_range(seed: u64, din in 1usize..=3, dout in 1usize..=3, nk in 1usize..=4) {
        let n = channel(din, dout, nk, seed);
        let s = channel_min_entropy(&n);
        prop_assert!(s >= -(din.min(dout) as f64).log2() - 1e-9);
        prop_assert!(s <= (dout as f64).log2() + 1e-9);
    }

    #[test]
    fn work_cost_units(bits in -5.0f64..5.0, t in 1.0f64..1000.0) {
        let w = WorkCost::new(bits, t).unwrap();
        let want = bits * BOLTZMANN * t * std::f64::consts::LN_2;
        prop_assert!((w.joules - want).abs() <= 4.0 * f64::EPSILON * want.abs());
        prop_assert_eq!(w.is_extractable(), bits < 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_form_matches_sdp(seed: u64, din in 1usize..=3, dout in 2usize..=3, nk in 1usize..=3) {
        let n = channel(din, dout, nk, seed);
        let diff = (channel_min_entropy(&n) - channel_min_entropy_sdp(&n).unwrap()).abs();
        prop_assert!(diff < 1e-6, "difference {diff}");
    }

    #[test]
    fn min_entropy_duality(seed: u64) {
        let psi = random_pure_state(&[2, 2, 2], &mut rng(seed));
        let ab = partial_trace(&psi, &[0, 1]).unwrap();
        let ac = partial_trace(&psi, &[0, 2]).unwrap();
        let sum = cond_min_entropy_up(&ab).unwrap() + cond_sandwiched_half_up(&ac).unwrap();
        prop_assert!(sum.abs() < 1e-6, "sum {sum}");
    }

    #[test]
    fn sampled_inputs_below_diamond(seed: u64) {
        let n = channel(2, 2, 2, seed);
        let m = channel(2, 2, 3, seed.wrapping_add(1));
        let dd = diamond_distance(&n, &m).unwrap();
        let sol = diamond_norm_sdp(&n, &m).unwrap();
        prop_assert!(sol.dual_value >= sol.primal_value - 1e-8 * (1.0 + sol.primal_value.abs()));
        for k in 0..8 {
            let psi = random_pure_state(&[2, 2], &mut stream_rng(seed, 10 + k));
            let a = apply(&n, &psi, 1).unwrap();
            let b = apply(&m, &psi, 1).unwrap();
            prop_assert!(trace_distance(&a, &b).unwrap() <= dd + 1e-7);
        }
    }

    #[test]
    fn haar_unitaries_are_unitary(seed: u64, d in 1usize..=8) {
        let u = haar_unitary(d, &mut rng(seed));
        prop_assert!((u.adjoint() * &u - identity(d)).norm() < 1e-10);
    }

    #[test]
    fn state_decoupling_reports_pass(seed: u64) {
        let psi = random_pure_state(&[2, 2], &mut rng(seed));
        let sampler = HaarSampler::new(2, seed).unwrap();
        for t in [QuantumChannel::identity(2), QuantumChannel::partial_trace(1, 2)] {
            let r = decouple_states_mc(&psi, &t, 40, 0.0, &sampler).unwrap();
            prop_assert!(r.mean_lhs >= 0.0 && r.bound_rhs >= 0.0);
            prop_assert!(r.pass, "{r:?}");
        }
        let phi = DensityOperator::maximally_entangled(2);
        let r = decouple_states_mc(&phi, &QuantumChannel::identity(2), 40, 0.0, &sampler).unwrap();
        prop_assert!((r.mean_lhs - 1.5).abs() < 1e-9 && r.std_err < 1e-9);
    }
}
