//! Property tests over random parameters and data.

use gibc_core::forward::{energy_identity_residual, solve_defective, AnnulusConfig, ImpedancePair};
use gibc_core::fourier::FourierCoefficients;
use gibc_core::impedance::{complete_data, recover_constants, synthetic_pair};
use gibc_core::operator::{apply_noise, assemble_gap_matrix, HermitianEigen, NoiseSpec};
use gibc_core::Complex64;
use proptest::prelude::*;

fn impedance() -> impl Strategy<Value = ImpedancePair> {
    (0.1f64..20.0, 0.0f64..5.0, 0.1f64..20.0, 0.0f64..5.0)
        .prop_map(|(a, b, c, d)| ImpedancePair::new(Complex64::new(a, b), Complex64::new(c, d)).unwrap())
}

fn data(order: usize) -> impl Strategy<Value = FourierCoefficients> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * order + 1).prop_map(move |v| {
        FourierCoefficients::from_vec(order, v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_identity_holds(imp in impedance(), rho in 0.15f64..0.85, f in data(6)) {
        let cfg = AnnulusConfig::new(rho, 30, 96).unwrap();
        let id = energy_identity_residual(&f, &cfg, &imp).unwrap();
        prop_assert!(id.relative_residual() < 1e-8, "{:?}", id);
        // absorption makes the pairing's imaginary part nonnegative
        prop_assert!(id.lhs.im >= -1e-12 * id.lhs.norm());
    }

    #[test]
    fn imaginary_part_is_psd(imp in impedance(), rho in 0.2f64..0.8) {
        let cfg = AnnulusConfig::new(rho, 20, 64).unwrap();
        let a = assemble_gap_matrix(&cfg, &imp).unwrap();
        let eig = HermitianEigen::decompose(&a.imaginary_part()).unwrap();
        let max = eig.values()[0];
        prop_assert!(*eig.values().last().unwrap() >= -1e-10 * max.max(1e-300));
    }

    #[test]
    fn zero_noise_leaves_matrix_unchanged(seed in any::<u64>()) {
        let cfg = AnnulusConfig::new(0.5, 6, 16).unwrap();
        let imp = ImpedancePair::new(Complex64::new(1.0, 1.0), Complex64::new(1.0, 1.0)).unwrap();
        let a = assemble_gap_matrix(&cfg, &imp).unwrap();
        let noisy = apply_noise(&a, NoiseSpec::new(0.0, seed).unwrap());
        prop_assert_eq!(noisy.entries(), a.entries());
    }

    #[test]
    fn completion_inverts_the_forward_map(imp in impedance(), rho in 0.3f64..0.8, f in data(10)) {
        let cfg = AnnulusConfig::with_radius(rho).unwrap();
        let h = complete_data(&synthetic_pair(&f, &cfg, &imp).unwrap(), 10, rho).unwrap();
        let want = solve_defective(&f, &cfg, &imp).unwrap();
        for n in -10..=10i64 {
            // b_n scales like ρ^{|n|} relative to f_n; compare at that scale
            let scale = 1.0 + want.b.get(n).norm();
            prop_assert!((h.a.get(n) - want.a.get(n)).norm() < 1e-10);
            prop_assert!((h.b.get(n) - want.b.get(n)).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn exact_data_recovers_any_constants(imp in impedance(), p in 1i64..4, q in 4i64..7) {
        let cfg = AnnulusConfig::with_radius(0.5).unwrap();
        let pairs: Vec<_> = [p, q]
            .iter()
            .map(|&k| synthetic_pair(&FourierCoefficients::single_mode(10, k, Complex64::new(1.0, 0.0)).unwrap(), &cfg, &imp).unwrap())
            .collect();
        let r = recover_constants(&pairs, 0.5, 256, 10).unwrap();
        prop_assert!((r.eta - imp.eta).norm() / imp.eta.norm() < 1e-6);
        prop_assert!((r.gamma - imp.gamma).norm() / imp.gamma.norm() < 1e-6);
    }
}
