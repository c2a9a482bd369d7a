use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wqpt::numkit::{
    hermitian_deviation, identity, kron, max_abs_diff, partial_trace, validate_density, CMatrix,
    Dims,
};
use wqpt::pointer::{custom_pointer, gaussian_pointer, qubit_pointer};
use wqpt::process::{amplitude_damping, apply_chi, apply_kraus, chi_from_channel, depolarizing};
use wqpt::random::{random_density, random_hermitian, random_unitary};
use wqpt::variants::{ancilla_input, reconstruct_qubit_sigma_x, SigmaXExtraction};
use wqpt::weak::{collect_records, reconstruct};
use wqpt::{BasisQuartet, Coupling, Exec, KrausChannel, Mode, WeakRun};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_channel(d: usize, seed: u64) -> KrausChannel {
    let mut r = rng(seed);
    match seed % 3 {
        0 => KrausChannel::unitary(random_unitary(d, &mut r)).unwrap(),
        1 => amplitude_damping(0.1 + 0.8 * ((seed % 97) as f64 / 97.0), d).unwrap(),
        _ => depolarizing((seed % 89) as f64 / 89.0, d).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_of_product_state(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut r = rng(seed);
        let a = random_density(da, &mut r);
        let b = random_density(db, &mut r);
        let dims = Dims::new(vec![da, db]).unwrap();
        let ab = kron(&a, &b);
        prop_assert!(max_abs_diff(&partial_trace(&ab, &dims, &[0]).unwrap(), &a) < 1e-12);
        prop_assert!(max_abs_diff(&partial_trace(&ab, &dims, &[1]).unwrap(), &b) < 1e-12);
    }

    #[test]
    fn channel_output_is_a_density(seed in any::<u64>(), d in 2usize..5) {
        let ch = random_channel(d, seed);
        let rho = random_density(d, &mut rng(seed ^ 0xabc));
        validate_density(&apply_kraus(&ch, &rho).unwrap()).unwrap();
    }

    #[test]
    fn chi_preserves_hermiticity(seed in any::<u64>(), d in 2usize..4) {
        let ch = random_channel(d, seed);
        let chi = chi_from_channel(&ch, &BasisQuartet::default_for(d, d)).unwrap();
        let h = random_hermitian(d, &mut rng(seed.wrapping_add(1)));
        let out = apply_chi(&chi, &h).unwrap();
        prop_assert!(hermitian_deviation(&out) < 1e-10);
        prop_assert!(max_abs_diff(&out, &apply_kraus(&ch, &h).unwrap()) < 1e-10);
    }

    #[test]
    fn perturbative_reconstruction_is_exact(seed in any::<u64>(), d in 2usize..4) {
        let ch = random_channel(d, seed);
        let bases = BasisQuartet::default_for(d, d);
        let q = qubit_pointer();
        let mut rep = reconstruct(&WeakRun::new(&ch, &bases, &q, &q)).unwrap();
        let truth = chi_from_channel(&ch, &bases).unwrap();
        prop_assert!(rep.compare_to(&truth).unwrap().max_abs < 1e-10);
        prop_assert_eq!(rep.setup_count, d);
        prop_assert_eq!(rep.values_per_parameter, 5);
    }

    #[test]
    fn exact_records_are_probabilities_and_reproducible(seed in any::<u64>(), s in 1e-4f64..5e-2) {
        let ch = random_channel(2, seed);
        let bases = BasisQuartet::default_for(2, 2);
        let q = qubit_pointer();
        let run = WeakRun::new(&ch, &bases, &q, &q).mode(Mode::Exact).coupling(Coupling::symmetric(s));
        let a = collect_records(&run).unwrap();
        let b = collect_records(&run.exec(Exec::Serial)).unwrap();
        prop_assert_eq!(&a, &b);
        for rec in &a {
            prop_assert!((0.0..=1.0).contains(&rec.p_f));
        }
    }

    #[test]
    fn sigma_x_exact_mode_determines_every_entry(seed in any::<u64>()) {
        let ch = random_channel(2, seed);
        let q = qubit_pointer();
        let rep = reconstruct_qubit_sigma_x(
            &ch, &q, &q, Coupling::default(), Mode::Exact, SigmaXExtraction::Full, Exec::Serial,
        ).unwrap();
        prop_assert!(rep.missing.is_empty());
    }

    #[test]
    fn ancilla_input_is_a_density(seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = random_unitary(2, &mut r);
        let gamma = CMatrix::from_fn(2, 2, |i, j| u[(i, j)] / 2f64.sqrt());
        let bases = BasisQuartet::default_for(2, 2);
        match ancilla_input(gamma.clone(), bases) {
            Ok(cfg) => validate_density(&cfg.rho_sr).unwrap(),
            Err(err) => prop_assert!(matches!(err, wqpt::QptError::InvalidGamma(_)), "{err}"),
        }
    }
}

#[test]
fn pointers_start_centered() {
    let custom = custom_pointer(
        identity(2).scale(0.5),
        wqpt::numkit::pauli_x(),
        wqpt::numkit::pauli_y(),
        "centered",
    );
    let pointers = [qubit_pointer(), gaussian_pointer(1.0, 12).unwrap()]
        .into_iter()
        .chain(custom.ok());
    for p in pointers {
        for o in [p.p_obs(), p.q_obs()] {
            assert!(wqpt::numkit::trace_of_product(o, p.sigma()).norm() < 1e-12, "{}", p.label());
        }
        assert!(p.constants().c2 > 0.0);
    }
}
