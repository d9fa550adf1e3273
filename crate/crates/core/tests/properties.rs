use cvqkd::analysis::distance_to_transmittance;
use cvqkd::gaussian::{
    apply, beam_splitter, cnot_gate, condition_on_homodyne, direct_sum, epr_cm, reduce, symplectic_defect,
    symplectic_spectrum_generic, von_neumann_entropy, CovarianceMatrix, Quadrature, SymplecticTransform,
};
use cvqkd::{key_rate, ChannelParams, ProtocolScenario, Variant};
use proptest::prelude::*;

/// Two EPR pairs and a thermal mode, mixed by a beam splitter and a C-NOT.
fn mixed_state(v1: f64, v2: f64, w: f64, t: f64, k: f64) -> CovarianceMatrix {
    let base = direct_sum(&[epr_cm(v1).unwrap(), epr_cm(v2).unwrap(), CovarianceMatrix::thermal(w, "T").unwrap()]).unwrap();
    let s = cnot_gate(k, 1, 2, 5).unwrap().compose(&beam_splitter(t, 0, 4, 5).unwrap()).unwrap();
    apply(&s, &base).unwrap()
}

fn gates(t: f64, k: f64, i: usize, j: usize) -> SymplecticTransform {
    let bs = beam_splitter(t, i, j, 4).unwrap();
    let cn = cnot_gate(k, j, i, 4).unwrap();
    cn.compose(&bs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composed_gates_stay_symplectic(t in 0.0f64..=1.0, k in -3.0f64..3.0, i in 0usize..4, j in 0usize..4) {
        prop_assume!(i != j);
        let s = gates(t, k, i, j);
        prop_assert!(symplectic_defect(s.matrix()) < 1e-12);
        prop_assert!(symplectic_defect(s.inverse().matrix()) < 1e-12);
    }

    #[test]
    fn spectrum_is_symplectic_invariant(
        v1 in 1.0f64..50.0, v2 in 1.0f64..50.0, w in 1.0f64..5.0, t in 0.05f64..0.95, k in -2.0f64..2.0,
        t2 in 0.0f64..=1.0, k2 in -2.0f64..2.0,
    ) {
        let cm = mixed_state(v1, v2, w, t, k);
        let before = symplectic_spectrum_generic(&cm).unwrap();
        let s = cnot_gate(k2, 3, 0, 5).unwrap().compose(&beam_splitter(t2, 2, 4, 5).unwrap()).unwrap();
        let after = symplectic_spectrum_generic(&apply(&s, &cm).unwrap()).unwrap();
        for (a, b) in before.eigenvalues.iter().zip(&after.eigenvalues) {
            prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn pure_state_partitions_share_entropy(v1 in 1.0f64..100.0, v2 in 1.0f64..100.0, t in 0.0f64..=1.0, k in -2.0f64..2.0) {
        // w = 1 keeps the global state pure
        let cm = mixed_state(v1, v2, 1.0, t, k);
        let a = von_neumann_entropy(&reduce(&cm, &[0, 2]).unwrap()).unwrap();
        let b = von_neumann_entropy(&reduce(&cm, &[1, 3, 4]).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        prop_assert!(von_neumann_entropy(&cm).unwrap().abs() < 1e-8);
    }

    #[test]
    fn homodyne_conditioning_never_increases_variance(
        v1 in 1.0f64..50.0, v2 in 1.0f64..50.0, w in 1.0f64..5.0, t in 0.0f64..=1.0, k in -2.0f64..2.0,
        mode in 0usize..5, px in any::<bool>(),
    ) {
        let cm = mixed_state(v1, v2, w, t, k);
        let q = if px { Quadrature::P } else { Quadrature::X };
        let cond = condition_on_homodyne(&cm, mode, q).unwrap();
        let kept: Vec<usize> = (0..5).filter(|&m| m != mode).collect();
        for (new, &old) in kept.iter().enumerate() {
            for o in 0..2 {
                let before = cm.entry(2 * old + o, 2 * old + o);
                let after = cond.entry(2 * new + o, 2 * new + o);
                prop_assert!(after <= before + 1e-9 * before, "{after} > {before}");
            }
        }
        cond.check_physical().unwrap();
    }

    #[test]
    fn key_rate_monotone_in_noise_and_efficiency(
        d in 0.0f64..40.0, eps in 0.0f64..0.3, de in 0.001f64..0.1, beta in 0.5f64..0.95, db in 0.001f64..0.05,
        v in prop::sample::select(vec![Variant::Het2M, Variant::Hom2M, Variant::HomHetM, Variant::HetHomM]),
    ) {
        let t = distance_to_transmittance(d, 0.2).unwrap();
        let s = |beta: f64, eps: f64| {
            let ch = ChannelParams::new(t, eps).unwrap();
            key_rate(&ProtocolScenario::symmetric(v, 20.0, 20.0, 0.8, beta, ch).unwrap()).unwrap().k_r
        };
        let base = s(beta, eps);
        prop_assert!(s(beta, eps + de) <= base + 1e-12);
        prop_assert!(s(beta + db, eps) >= base - 1e-12);
    }
}
