use nvcap::montecarlo::{draw_params, mean_std, quantile, run_mc, sample_rng, DrawnParameters, McExperiment};
use nvcap::{Error, ModelParams, Result};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;

#[test]
fn same_seed_same_report() {
    let p = ModelParams::nominal_with_variability();
    let exp = DrawnParameters::varied(&p);
    let a = run_mc(&exp, &p, 500, 42).unwrap();
    let b = run_mc(&exp, &p, 500, 42).unwrap();
    assert_eq!(a, b);
    let c = run_mc(&exp, &p, 500, 43).unwrap();
    assert_ne!(a.column("n_depl"), c.column("n_depl"));
}

#[test]
fn sample_streams_do_not_depend_on_run_size() {
    let p = ModelParams::nominal_with_variability();
    let exp = DrawnParameters::varied(&p);
    let small = run_mc(&exp, &p, 10, 7).unwrap();
    let large = run_mc(&exp, &p, 1000, 7).unwrap();
    assert_eq!(small.samples[..], large.samples[..10]);
    let direct = draw_params(&p, &mut sample_rng(7, 3));
    assert_eq!(direct.n_depl, small.samples[3].values[0]);
    assert!(direct.variability.is_empty());
}

#[test]
fn zero_sigma_reproduces_the_nominal_device() {
    let mut p = ModelParams::nominal_with_variability();
    p.variability.insert("n_depl".into(), 0.0);
    let r = run_mc(&DrawnParameters::varied(&p), &p, 20, 1).unwrap();
    let s = r.summary_of("n_depl").unwrap();
    // summation rounding only
    assert!((s.mean / p.n_depl - 1.0).abs() < 1e-14);
    assert!(s.std < 1e-14 * p.n_depl);
    assert_eq!((s.lo_3sigma, s.hi_3sigma), (p.n_depl, p.n_depl));
}

#[test]
fn draws_are_truncated_to_the_physical_range() {
    let mut p = ModelParams::nominal();
    // sigma comparable to the mean would produce negative densities and
    // fractions outside [0,1] without truncation
    p.variability.insert("n_depl".into(), 2.0 * p.n_depl);
    p.variability.insert("alpha_fe".into(), 0.8);
    let r = run_mc(&DrawnParameters::varied(&p), &p, 3000, 9).unwrap();
    assert!(r.column("n_depl").unwrap().iter().all(|&v| v > 0.0));
    let a = r.column("alpha_fe").unwrap();
    assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(a.iter().any(|&v| v < 0.3) && a.iter().any(|&v| v > 0.95));
}

#[test]
fn spread_matches_requested_sigma() {
    let p = ModelParams::nominal_with_variability();
    let r = run_mc(&DrawnParameters::varied(&p), &p, 10_000, 1).unwrap();
    let s = r.summary_of("n_depl").unwrap();
    assert!((s.mean / p.n_depl - 1.0).abs() < 0.01);
    assert!((s.std / 3.9e20 - 1.0).abs() < 0.03, "std {}", s.std);
    assert!(s.lo_3sigma < s.mean - 2.5 * s.std && s.hi_3sigma > s.mean + 2.5 * s.std);
}

struct Flaky {
    every: usize,
}

impl McExperiment for Flaky {
    fn name(&self) -> &str {
        "flaky"
    }
    fn scalar_names(&self) -> Vec<String> {
        vec!["x".into()]
    }
    fn evaluate(&self, p: &ModelParams, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let k = rand::Rng::random_range(rng, 0..self.every);
        if k == 0 {
            Err(Error::MonteCarlo("synthetic failure".into()))
        } else {
            Ok(vec![p.n_depl])
        }
    }
    fn pass(&self, x: &[f64]) -> bool {
        x[0] > 1.2e22
    }
}

#[test]
fn failures_are_counted_and_bounded() {
    let p = ModelParams::nominal_with_variability();
    let tolerated = run_mc(&Flaky { every: 1000 }, &p, 2000, 3).unwrap();
    assert_eq!(tolerated.samples.len() + tolerated.failures.len(), 2000);
    assert!(tolerated.yield_fraction > 0.3 && tolerated.yield_fraction < 0.7);
    let err = run_mc(&Flaky { every: 10 }, &p, 2000, 3).unwrap_err();
    assert!(err.to_string().contains("samples failed"), "{err}");
}

#[test]
fn rejects_degenerate_runs() {
    let p = ModelParams::nominal_with_variability();
    assert!(run_mc(&DrawnParameters::varied(&p), &p, 1, 0).is_err());
    let mut bad = p.clone();
    bad.t_fe = -1.0;
    assert!(matches!(
        run_mc(&DrawnParameters::varied(&bad), &bad, 10, 0),
        Err(Error::Validation(_))
    ));
}

#[test]
fn quantile_and_moments() {
    let x: Vec<f64> = (0..=100).map(f64::from).collect();
    assert_eq!(quantile(&x, 0.5), 50.0);
    assert_eq!(quantile(&x, 0.255), 25.5);
    assert_eq!(quantile(&x, 1.0), 100.0);
    assert!(quantile(&[], 0.5).is_nan());
    let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
    assert_eq!(m, 5.0);
    assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
}

proptest! {
    #[test]
    fn quantile_is_monotone_and_bracketed(mut x in prop::collection::vec(-1e3f64..1e3, 1..50), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        x.sort_by(f64::total_cmp);
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(quantile(&x, lo) <= quantile(&x, hi));
        prop_assert!(quantile(&x, lo) >= x[0] && quantile(&x, hi) <= *x.last().unwrap());
    }
}
