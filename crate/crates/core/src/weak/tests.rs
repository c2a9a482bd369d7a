use super::*;
use crate::numkit::{basis_ket, c, identity, ONE, ZERO};
use crate::pointer::{gaussian_pointer, qubit_pointer};
use crate::process::{
    amplitude_damping, chi_distance, chi_from_channel, chi_tilde_from_channel, hadamard_gate,
    x_value_analytic,
};

fn plus_setting() -> Setting {
    let plus = CVector::from_vec(vec![c(0.5f64.sqrt(), 0.0), c(0.5f64.sqrt(), 0.0)]);
    Setting {
        rho: projector(&basis_ket(2, 0)),
        a: projector(&plus),
        b: projector(&plus),
        post: identity(2),
        post_index: 0,
    }
}

#[test]
fn exact_run_recovers_half() {
    let ch = KrausChannel::identity(2);
    let q = qubit_pointer();
    let k = q.constants();
    let cp = Coupling::symmetric(1e-3);
    let rec = simulate_run_exact(&ch, &plus_setting(), &q, &q, cp).unwrap();
    let (x, _) = x_from_r(&rec, &k, &k, cp).unwrap();
    assert!((x - c(0.5, 0.0)).norm() / 0.5 < 5e-3);
}

#[test]
fn zero_coupling_gives_zero_r_and_bare_probability() {
    let ch = amplitude_damping(0.3, 2).unwrap();
    let q = qubit_pointer();
    let mut s = plus_setting();
    s.rho = projector(&basis_ket(2, 1));
    let rec = simulate_run_exact(&ch, &s, &q, &q, Coupling::new(0.0, 1e-3)).unwrap();
    assert_eq!(rec.r, [0.0; 4]);
    let rec = simulate_run_perturbative(&ch, &s, &q, &q, Coupling::symmetric(0.0)).unwrap();
    assert_eq!(rec.r, [0.0; 4]);
    assert!((rec.p_f - 0.3).abs() < 1e-15);
}

#[test]
fn perturbative_inverts_exactly_for_arbitrary_observables() {
    let ch = amplitude_damping(0.4, 2).unwrap();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
    let rho = crate::random::random_density(2, &mut rng);
    let a = crate::random::random_hermitian(2, &mut rng);
    let b = crate::random::random_hermitian(2, &mut rng);
    let gp = gaussian_pointer(0.8, 12).unwrap();
    let q = qubit_pointer();
    let cp = Coupling::new(2e-3, 5e-4);
    let s = Setting {
        rho: rho.clone(),
        a: a.clone(),
        b: b.clone(),
        post: crate::process::fourier_basis(2),
        post_index: 1,
    };
    let rec = simulate_run_perturbative(&ch, &s, &gp, &q, cp).unwrap();
    let (x, xt) = x_from_r(&rec, &gp.constants(), &q.constants(), cp).unwrap();
    let pf = projector(&s.post_ket(1));
    let (xa, xta) = x_value_analytic(&ch, &rho, &a, &b, &pf).unwrap();
    assert!((x - xa).norm() < 1e-12, "{x} vs {xa}");
    assert!((xt - xta).norm() < 1e-12);
}

#[test]
fn perturbative_reconstruction_matches_oracle_in_both_representations() {
    let ch = KrausChannel::unitary(hadamard_gate()).unwrap();
    let bases = BasisQuartet::default_for(2, 2);
    let q = qubit_pointer();
    let rep = reconstruct(&WeakRun::new(&ch, &bases, &q, &q)).unwrap();
    let truth = chi_from_channel(&ch, &bases).unwrap();
    assert!(chi_distance(&rep.chi_hat, &truth).unwrap().max_abs < 1e-10);
    let tilde = chi_tilde_from_channel(&ch, &bases).unwrap();
    let got = rep.chi_tilde_hat.as_ref().unwrap();
    assert!(chi_distance(got, &tilde).unwrap().max_abs < 1e-10);
    assert_eq!((rep.setup_count, rep.values_per_parameter), (2, 5));
}

#[test]
fn chi_entry_examples() {
    let bases = BasisQuartet::default_for(2, 2);
    let chi = chi_entry(c(0.5, 0.0), &bases, [0, 0, 0, 0]).unwrap();
    assert!((chi - ONE).norm() < 1e-15);
    assert_eq!(chi_entry(ZERO, &bases, [1, 1, 0, 1]).unwrap(), ZERO);
    let bad = BasisQuartet::computational(2, 2);
    assert!(matches!(
        chi_entry(ONE, &bad, [0, 1, 0, 0]),
        Err(QptError::DegenerateOverlap { .. })
    ));
}

#[test]
fn probabilities_sum_to_one_in_exact_mode() {
    let ch = amplitude_damping(0.2, 3).unwrap();
    let bases = BasisQuartet::default_for(3, 3);
    let q = qubit_pointer();
    let run = WeakRun::new(&ch, &bases, &q, &q)
        .mode(Mode::Exact)
        .coupling(Coupling::symmetric(0.05));
    let recs = run.outcomes(2, 1, 0).unwrap();
    let total: f64 = recs.iter().map(|r| r.p_f).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn sampled_records_are_seed_deterministic() {
    let ch = KrausChannel::identity(2);
    let q = qubit_pointer();
    let s = plus_setting();
    let cp = Coupling::symmetric(0.1);
    let a = simulate_run_sampled(&ch, &s, &q, &q, cp, 20_000, 5).unwrap();
    let b = simulate_run_sampled(&ch, &s, &q, &q, cp, 20_000, 5).unwrap();
    assert_eq!(a, b);
    let one = outcomes_sampled(&ch, &s, &q, &q, cp, 1, 5, 0).unwrap();
    for rec in &one {
        assert!(rec.samples.unwrap().iter().all(|&n| n <= 1));
        assert_eq!(rec.status, RecordStatus::Empty);
    }
}

#[test]
fn single_setup_guards() {
    let ch = KrausChannel::identity(2);
    let bases = BasisQuartet::default_for(2, 2);
    let q = qubit_pointer();
    let bad = SetupStrengths {
        g: vec![1e-2, 1e-4],
        lam: vec![1e-2, 1e-2],
    };
    assert!(simulate_parallel_setup(&ch, &bases, 0, &q, &q, &bad, DEFAULT_JOINT_CAP).is_err());
    let ok = SetupStrengths::uniform(Coupling::symmetric(1e-2), 2, 2);
    assert!(matches!(
        simulate_parallel_setup(&ch, &bases, 0, &q, &q, &ok, 16),
        Err(QptError::ResourceCap { dim: 32, cap: 16 })
    ));
    let zero = SetupStrengths::uniform(Coupling::symmetric(0.0), 2, 2);
    let recs = simulate_parallel_setup(&ch, &bases, 1, &q, &q, &zero, DEFAULT_JOINT_CAP).unwrap();
    assert!(recs.iter().filter(|r| r.is_usable()).all(|r| r.r == [0.0; 4]));
}
