mod common;

use common::*;
use mvps::error::Error;
use mvps::partition::{conditional_kernel, Partition};
use mvps::process::Coefficients;
use mvps::scalar::{q, Rational};
use mvps::verify::{self, Verdict, Verifier};
use mvps::{Kernel, Measure, PredictiveFamily};

fn skew_family(coeffs: Vec<Rational>) -> PredictiveFamily<Rational> {
    PredictiveFamily::sufficientness(
        Measure::uniform(space(2)),
        skew_kernel(),
        Coefficients::List(coeffs),
    )
    .unwrap()
}

#[test]
fn partition_mvps_is_exchangeable_to_length_five() {
    let f = partition_mvps(q(2, 1), &nu3(), &split3());
    let report = verify::check_exchangeable(&f, 5).unwrap();
    assert!(report.exchangeable);
    assert_eq!(report.max_length_checked, 5);
    assert!(report.counterexample.is_none());
}

#[test]
fn skew_kernel_counterexample_at_length_two() {
    let report = verify::check_exchangeable(&skew_family(vec![q(1, 2)]), 2).unwrap();
    assert!(!report.exchangeable);
    let c = report.counterexample.unwrap();
    assert_eq!(c.trajectory, vec![0, 1]);
    assert_eq!(c.swapped_trajectory(), vec![1, 0]);
    assert_eq!(c.probability, q(1, 4));
    assert_eq!(c.swapped_probability, q(1, 8));
}

#[test]
fn counterexamples_persist_at_longer_lengths() {
    let f = skew_family(vec![q(1, 2), q(2, 3), q(3, 4), q(4, 5)]);
    let short = verify::check_exchangeable(&f, 2).unwrap();
    for len in 2..=5 {
        let r = verify::check_exchangeable(&f, len).unwrap();
        assert!(!r.exchangeable);
        assert_eq!(r.counterexample, short.counterexample);
    }
}

#[test]
fn iid_is_always_exchangeable() {
    let f = PredictiveFamily::iid(nu3()).unwrap();
    for len in 0..=5 {
        assert!(verify::check_exchangeable(&f, len).unwrap().exchangeable);
    }
}

#[test]
fn exchangeability_guard() {
    let f = PredictiveFamily::iid(nu3()).unwrap();
    assert!(matches!(
        verify::check_exchangeable(&f, 15),
        Err(Error::OutOfRange { .. })
    ));
}

#[test]
fn float_mode_agrees_with_exact_mode() {
    let f = partition_mvps(q(1, 2), &nu3(), &split3()).to_f64();
    assert!(
        Verifier::default()
            .check_exchangeable(&f, 5)
            .unwrap()
            .exchangeable
    );
    let g = skew_family(vec![q(1, 2)]).to_f64();
    let c = verify::check_exchangeable(&g, 2)
        .unwrap()
        .counterexample
        .unwrap();
    assert_eq!(c.trajectory, vec![0, 1]);
    assert!((c.probability - 0.25).abs() < 1e-15);
}

#[test]
fn detailed_balance_examples() {
    let nu = nu3();
    let r = conditional_kernel(&nu, &split3()).unwrap();
    // ν(x2) R_{x2}(x3) = 3/10 · 5/8 = 3/16 = 1/2 · 3/8 = ν(x3) R_{x3}(x2)
    assert_eq!(nu.weight(1).clone() * r.row(1)[2].clone(), q(3, 16));
    assert_eq!(nu.weight(2).clone() * r.row(2)[1].clone(), q(3, 16));
    assert_eq!(verify::check_detailed_balance(&nu, &r).unwrap(), q(0, 1));
    assert_eq!(
        verify::check_detailed_balance(&nu, &Kernel::identity(space(3))).unwrap(),
        q(0, 1)
    );
    assert_eq!(
        verify::check_detailed_balance(&Measure::uniform(space(2)), &skew_kernel()).unwrap(),
        q(1, 4)
    );
}

#[test]
fn cstar_examples() {
    assert_eq!(verify::cstar(&q(1, 2), &q(2, 3)).unwrap(), q(0, 1));
    assert_eq!(verify::cstar(&q(1, 2), &q(1, 2)).unwrap(), q(-1, 1));
    assert_eq!(verify::cstar(&q(1, 6), &q(2, 7)).unwrap(), q(0, 1));
    assert!(verify::cstar(&q(0, 1), &q(1, 2)).is_err());
    assert!(verify::cstar(&q(1, 2), &q(1, 1)).is_err());
}

#[test]
fn kernel_identity_examples() {
    let nu = nu3();
    let r = conditional_kernel(&nu, &split3()).unwrap();
    assert_eq!(
        verify::check_kernel_identity(&nu, &r, &q(0, 1)).unwrap(),
        q(0, 1)
    );
    assert_eq!(
        verify::check_kernel_identity(&nu, &Kernel::identity(space(3)), &q(0, 1)).unwrap(),
        q(0, 1)
    );
    let flat = Kernel::constant(&nu);
    for c in [q(0, 1), q(-3, 2), q(1, 3), q(7, 1)] {
        assert_eq!(
            verify::check_kernel_identity(&nu, &flat, &c).unwrap(),
            q(0, 1)
        );
    }
    // the skew kernel is not idempotent: R∘R row x1 = (1/4, 3/4) vs (1/2, 1/2)
    assert_eq!(
        verify::check_kernel_identity(&Measure::uniform(space(2)), &skew_kernel(), &q(0, 1))
            .unwrap(),
        q(1, 4)
    );
}

#[test]
fn coefficient_solution_examples() {
    assert_eq!(
        verify::coefficient_solution(&q(1, 4), &q(0, 1), 2).unwrap(),
        q(2, 5)
    );
    assert_eq!(
        verify::coefficient_solution(&q(1, 4), &q(0, 1), 1).unwrap(),
        q(1, 4)
    );
    assert!(matches!(
        verify::coefficient_solution(&q(1, 4), &q(1, 1), 3),
        Err(Error::Degenerate(_))
    ));
    // c = 0 reproduces n / (n + a_1^{-1} − 1)
    for n in 1..20 {
        let expected = q(n as i64, n as i64 + 3);
        assert_eq!(
            verify::coefficient_solution(&q(1, 4), &q(0, 1), n).unwrap(),
            expected
        );
    }
}

#[test]
fn characterize_forced_coefficients() {
    let nu = nu3();
    let r = conditional_kernel(&nu, &split3()).unwrap();
    let f = PredictiveFamily::sufficientness(
        nu.clone(),
        r.clone(),
        Coefficients::closed_form(|n| q(n as i64, n as i64 + 2)),
    )
    .unwrap();
    let res = verify::characterize(&f, 4).unwrap();
    assert_eq!(res.verdict, Verdict::Mvps);
    assert_eq!(res.theta_hat, Some(q(2, 1)));
    assert!(!res.degenerate_iid);
    assert!(res.coefficient_trace.iter().all(|t| t.observed == t.forced));
    assert_eq!(res.coefficient_trace.len(), 3);
}

#[test]
fn characterize_wrong_coefficients() {
    let nu = nu3();
    let r = conditional_kernel(&nu, &split3()).unwrap();
    let f = PredictiveFamily::sufficientness(nu, r, Coefficients::List(vec![q(1, 3), q(1, 3)]))
        .unwrap();
    let res = verify::characterize(&f, 3).unwrap();
    assert_eq!(res.verdict, Verdict::NonExchangeable);
    let c = res.counterexample.unwrap();
    assert!(c.trajectory.len() <= 3);
    assert_ne!(c.probability, c.swapped_probability);
}

#[test]
fn characterize_degenerate_iid_case() {
    let nu = nu3();
    let f = PredictiveFamily::sufficientness(
        nu.clone(),
        Kernel::constant(&nu),
        Coefficients::List(vec![q(1, 3), q(1, 3), q(9, 10), q(1, 100)]),
    )
    .unwrap();
    let res = verify::characterize(&f, 5).unwrap();
    assert_eq!(res.verdict, Verdict::Mvps);
    assert!(res.degenerate_iid);
    assert!(verify::check_iid_degenerate(&f, 5).unwrap());
}

#[test]
fn characterize_mvps_and_unbalanced_inputs() {
    let f = partition_mvps(q(1, 2), &nu3(), &split3());
    let res = verify::characterize(&f, 4).unwrap();
    assert_eq!(res.verdict, Verdict::Mvps);
    assert_eq!(res.theta_hat, Some(q(1, 2)));

    let s = space(2);
    let doubled = Kernel::identity(s.clone()).scale(&q(2, 1));
    let f = PredictiveFamily::mvps(q(4, 1), Measure::uniform(s.clone()), doubled).unwrap();
    assert_eq!(
        verify::characterize(&f, 4).unwrap().theta_hat,
        Some(q(2, 1))
    );

    let uneven = Kernel::new(
        s.clone(),
        vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(2, 1)]],
    )
    .unwrap();
    let f = PredictiveFamily::mvps(q(1, 1), Measure::uniform(s.clone()), uneven).unwrap();
    assert_eq!(
        verify::characterize(&f, 3).unwrap().verdict,
        Verdict::NotSufficientnessForm
    );

    let iid = PredictiveFamily::iid(Measure::<Rational>::uniform(s)).unwrap();
    assert!(matches!(
        verify::characterize(&iid, 3),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn johnson_postulate_examples() {
    let nu = nu3();
    let p = split3();
    let f = partition_mvps(q(2, 1), &nu, &p);
    assert!(
        verify::check_johnson_sufficientness(&f, &p, 6)
            .unwrap()
            .holds
    );

    // the MVPS reinforces {x2,x3} separately from x1, so block counts of the
    // coarser trivial partition do not determine its predictive
    let report = verify::check_johnson_sufficientness(&f, &Partition::trivial(3), 6).unwrap();
    assert!(!report.holds);
    let c = report.counterexample.unwrap();
    assert_eq!(c.first.len(), 1);
    assert_eq!(c.first, vec![0]);
    assert_eq!(c.second, vec![1]);
    assert_eq!(c.state, 0);
    assert_eq!(c.first_mass, q(7, 15));
    assert_eq!(c.second_mass, q(2, 15));

    let iid = PredictiveFamily::iid(nu).unwrap();
    for part in [Partition::trivial(3), p, Partition::discrete(3)] {
        assert!(
            verify::check_johnson_sufficientness(&iid, &part, 4)
                .unwrap()
                .holds
        );
    }
}

#[test]
fn hill_postulate_examples() {
    let w = [q(1, 1), q(2, 1), q(4, 1)];
    let w_total = q(7, 1);
    let nu = Measure::probability(
        space(3),
        w.iter().map(|x| x.clone() / w_total.clone()).collect(),
    )
    .unwrap();
    let p = split3();
    let f = partition_mvps(w_total.clone(), &nu, &p);
    assert!(
        verify::check_hill_sufficientness(&f, &w, &p, 6)
            .unwrap()
            .holds
    );
    assert_eq!(
        Verifier::default()
            .hill_block_violation(&f, &w, &p, 6)
            .unwrap(),
        q(0, 1)
    );

    // mismatched weights break the functional form
    let wrong = [q(1, 1), q(1, 1), q(1, 1)];
    assert!(
        !verify::check_hill_sufficientness(&f, &wrong, &p, 3)
            .unwrap()
            .holds
    );

    let iid = PredictiveFamily::iid(nu3()).unwrap();
    assert!(
        verify::check_hill_sufficientness(&iid, &w, &p, 4)
            .unwrap()
            .holds
    );
    assert!(verify::check_hill_sufficientness(&f, &[q(1, 1), q(0, 1), q(1, 1)], &p, 2).is_err());
}

#[test]
fn extract_g_examples() {
    let nu = nu3();
    let p = split3();
    let f = partition_mvps(q(2, 1), &nu, &p);
    assert_eq!(verify::extract_g(&f, &p, 1, 1, 1).unwrap(), q(13, 15));
    assert_eq!(q(13, 40) + q(13, 24), q(13, 15));
    assert_eq!(verify::extract_g(&f, &p, 0, 0, 0).unwrap(), q(1, 5));
    assert_eq!(verify::extract_g(&f, &p, 1, 0, 0).unwrap(), q(4, 5));
    let t = Partition::trivial(3);
    let g = partition_mvps(q(2, 1), &nu, &t);
    assert_eq!(verify::extract_g(&g, &t, 0, 4, 4).unwrap(), q(1, 1));
    assert!(verify::extract_g(&g, &t, 0, 4, 2).is_err());
    assert!(verify::extract_g(&f, &p, 0, 2, 3).is_err());
}

#[test]
fn extract_g_detects_non_sufficient_families() {
    // three states, one block {x1,x2} and {x3}: the identity-kernel MVPS
    // reinforces x1 and x2 separately, but block masses still depend only on
    // block counts, so use a skewed kernel where they do not
    let s = space(3);
    let r = Kernel::probability(
        s.clone(),
        vec![
            vec![q(1, 1), q(0, 1), q(0, 1)],
            vec![q(0, 1), q(0, 1), q(1, 1)],
            vec![q(0, 1), q(0, 1), q(1, 1)],
        ],
    )
    .unwrap();
    let f = PredictiveFamily::mvps(q(1, 1), Measure::uniform(s), r).unwrap();
    let p = Partition::from_blocks(3, &[vec![0, 1], vec![2]]).unwrap();
    assert!(matches!(
        verify::extract_g(&f, &p, 0, 1, 1),
        Err(Error::NotSufficient(_))
    ));
}

#[test]
fn iid_degeneracy_examples() {
    let nu = nu3();
    assert!(
        verify::check_iid_degenerate(&partition_mvps(q(2, 1), &nu, &Partition::trivial(3)), 5)
            .unwrap()
    );
    let s = space(2);
    let dp = PredictiveFamily::mvps(
        q(1, 1),
        Measure::uniform(s.clone()),
        Kernel::identity(s.clone()),
    )
    .unwrap();
    assert!(verify::check_iid_degenerate(&dp, 1).unwrap());
    assert!(!verify::check_iid_degenerate(&dp, 2).unwrap());
    assert!(verify::check_iid_degenerate(&PredictiveFamily::iid(nu).unwrap(), 5).unwrap());
}

#[test]
fn sequential_and_parallel_verifiers_agree() {
    let f = skew_family(vec![q(1, 2), q(1, 3), q(1, 4), q(1, 5)]);
    let seq = Verifier::sequential();
    let par = Verifier::default();
    assert_eq!(
        seq.check_exchangeable(&f, 5).unwrap(),
        par.check_exchangeable(&f, 5).unwrap()
    );
    let g = partition_mvps(q(2, 1), &nu3(), &split3());
    let t = Partition::trivial(3);
    assert_eq!(
        seq.check_johnson_sufficientness(&g, &t, 5).unwrap(),
        par.check_johnson_sufficientness(&g, &t, 5).unwrap()
    );
}
