mod common;

use common::*;
use mvps::process::{joint_probability, sample, Trajectory};
use mvps::scalar::{q, Rational, Scalar};
use mvps::{Kernel, Measure, PredictiveFamily};

fn dp2() -> PredictiveFamily<Rational> {
    PredictiveFamily::mvps(
        q(1, 1),
        Measure::uniform(space(2)),
        Kernel::identity(space(2)),
    )
    .unwrap()
}

#[test]
fn short_paths_match_the_exact_law() {
    let f = partition_mvps(q(2, 1), &nu3(), &split3());
    let reps = 30_000u64;
    let mut counts = vec![0u64; 27];
    for seed in 0..reps {
        let t = sample(&f, 3, seed).unwrap();
        counts[t.values().iter().fold(0, |acc, &x| acc * 3 + x)] += 1;
    }
    let mut tv = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let t = vec![i / 9, (i / 3) % 3, i % 3];
        let p = joint_probability(&f, &Trajectory::new(space(3), t).unwrap())
            .unwrap()
            .to_f64();
        tv += 0.5 * (c as f64 / reps as f64 - p).abs();
    }
    assert!(tv < 3.0 * (27.0 / reps as f64).sqrt(), "TV {tv}");
}

#[test]
fn dirichlet_process_frequency_follows_the_arcsine_law() {
    // θ = 1, ν = (1/2, 1/2): the limiting frequency of x1 is Beta(1/2, 1/2)
    let f = dp2();
    let reps = 300;
    let freqs: Vec<f64> = (0..reps)
        .map(|r| {
            let t = sample(&f, 10_000, 500 + r).unwrap();
            t.values().iter().filter(|&&x| x == 0).count() as f64 / 10_000.0
        })
        .collect();
    let arcsine = |x: f64| 2.0 / std::f64::consts::PI * x.sqrt().asin();
    let se = (0.25 / reps as f64).sqrt();
    for x in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let emp = freqs.iter().filter(|&&v| v <= x).count() as f64 / reps as f64;
        assert!(
            (emp - arcsine(x)).abs() < 4.0 * se,
            "x={x}: {emp} vs {}",
            arcsine(x)
        );
    }
}

#[test]
fn sampling_is_seeded() {
    let f = dp2();
    assert_eq!(sample(&f, 500, 7).unwrap(), sample(&f, 500, 7).unwrap());
    assert_ne!(sample(&f, 500, 7).unwrap(), sample(&f, 500, 8).unwrap());
    assert!(sample(&f, 0, 7).unwrap().is_empty());
    // exact and float images of the same model draw the same path
    assert_eq!(
        sample(&f, 200, 3).unwrap(),
        sample(&f.to_f64(), 200, 3).unwrap()
    );
}

#[test]
fn listed_coefficients_bound_the_path_length() {
    let nu = Measure::<Rational>::uniform(space(2));
    let f = PredictiveFamily::sufficientness(
        nu,
        skew_kernel(),
        mvps::Coefficients::List(vec![q(1, 2); 3]),
    )
    .unwrap();
    assert_eq!(sample(&f, 4, 1).unwrap().len(), 4);
    assert!(sample(&f, 5, 1).is_err());
}
