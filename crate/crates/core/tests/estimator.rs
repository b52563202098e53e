use ddestab::estimator::{classify, classify_slices, fit_exponential, Class, EstimatorError};
use ddestab::model::DelayEquation;
use ddestab::solver::{ensemble_decay, fundamental_slices, random_histories, StepControl};

fn eq(terms: &[(&str, &str)]) -> DelayEquation {
    DelayEquation::parse(terms, 0.0).unwrap()
}

#[test]
fn fit_bounds_every_sampled_pair() {
    let e = eq(&[("1", "t - 0.5")]);
    let slices = fundamental_slices(&e, &[0.0, 0.3, 1.1], 30.0, &StepControl::default()).unwrap();
    let fit = fit_exponential(&slices).unwrap();
    assert!(fit.lambda > 0.0 && fit.k >= 1.0, "{fit:?}");
    for sl in &slices {
        for (&t, &x) in sl.trajectory.times().iter().zip(sl.trajectory.values()) {
            assert!(x.abs() <= fit.k * (-fit.lambda * (t - sl.s)).exp() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn unstable_delay_grows() {
    let e = eq(&[("1", "t - 2")]);
    let runs: Vec<_> = ensemble_decay(&e, &random_histories(3, 0.0, 5), 80.0, &StepControl::default()).into_iter().map(Result::unwrap).collect();
    assert_eq!(classify(&runs).unwrap().class, Class::Growing);
    let slices = fundamental_slices(&e, &[0.0], 80.0, &StepControl::default()).unwrap();
    assert_eq!(classify_slices(&slices).unwrap().class, Class::Growing);
    assert!(matches!(fit_exponential(&slices), Err(EstimatorError::NotDecaying { .. })));
}

#[test]
fn empty_input() {
    assert_eq!(classify(&[]).unwrap_err(), EstimatorError::Empty);
    assert_eq!(fit_exponential(&[]).unwrap_err(), EstimatorError::Empty);
}
