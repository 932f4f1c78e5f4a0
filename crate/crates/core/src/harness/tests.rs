use super::*;
use crate::functional::NormConstant;
use crate::geom::{polar_quadrature, ReferenceMeasure, Region};
use crate::spectra::{bergman_kernel, fredholm_det, hole_probability_disc, nystrom_restrict, Sign};
use num_complex::Complex64;

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        name: "small".into(),
        master_seed: 11,
        samples: 40,
        degree: 96,
        window: 0.9,
        ..ExperimentConfig::default()
    }
}

#[test]
fn defaults_validate() {
    let c = ExperimentConfig::default();
    c.validate().unwrap();
    assert_eq!(c.degree, 1024);
    assert_eq!(c.grid, (12, 24));
    assert_eq!(c.norm_mode, NormMode::FiniteRadius);
}

#[test]
fn kv_round_trip() {
    let mut c = small_config();
    c.region = Region::disc(Complex64::new(0.1, -0.2), 0.25);
    c.norm_mode = NormMode::Calibrated(Some(1.5262));
    c.out = Some("report.json".into());
    c.format = OutputFormat::Json;
    c.grid = (6, 10);
    let text = c.to_kv_string();
    assert_eq!(ExperimentConfig::from_kv_str(&text).unwrap(), c);

    let json = serde_json::to_string(&c).unwrap();
    assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), c);
}

#[test]
fn kv_parsing_and_errors() {
    let c = ExperimentConfig::from_kv_str("# comment\n\nseed = 5\nsamples=10\nregion = 0.3\nnorm_mode = stated\n").unwrap();
    assert_eq!(c.master_seed, 5);
    assert_eq!(c.samples, 10);
    assert_eq!(c.region, Region::centered_disc(0.3));
    assert_eq!(c.norm_mode, NormMode::Stated);
    assert!(ExperimentConfig::from_kv_str("bogus = 1").is_err());
    assert!(ExperimentConfig::from_kv_str("samples 10").is_err());
    assert!(ExperimentConfig::from_kv_str("samples = ten").is_err());
    assert!(ExperimentConfig::from_kv_str("grid = 12by24").is_err());
    assert!(ExperimentConfig::from_kv_str("region = 0.1,0.2").is_err());
    assert!(ExperimentConfig::from_kv_str("norm_mode = magic").is_err());
}

#[test]
fn norm_modes() {
    for (s, m) in [
        ("stated", NormMode::Stated),
        ("oracle", NormMode::Oracle),
        ("finite-radius", NormMode::FiniteRadius),
        ("calibrated", NormMode::Calibrated(None)),
        ("calibrated:2.5", NormMode::Calibrated(Some(2.5))),
    ] {
        let parsed: NormMode = s.parse().unwrap();
        assert_eq!(parsed, m);
        assert_eq!(parsed.to_string(), s);
    }
    // accepted alias of the stated preset
    assert_eq!("paper".parse::<NormMode>().unwrap(), NormMode::Stated);
    assert_eq!(NormMode::Calibrated(None).resolve(None), None);
    assert_eq!(NormMode::Calibrated(None).resolve(Some(1.4)), Some(NormConstant::Calibrated(1.4)));
    assert_eq!(NormMode::Stated.resolve(Some(1.4)), Some(NormConstant::Stated));
}

#[test]
fn validation_rejects_bad_values() {
    let ok = small_config();
    type Mutation = Box<dyn Fn(&mut ExperimentConfig)>;
    let cases: Vec<Mutation> = vec![
        Box::new(|c| c.samples = 0),
        Box::new(|c| c.degree = 0),
        Box::new(|c| c.window = 1.0),
        Box::new(|c| c.window = 0.35),
        Box::new(|c| c.region = Region::annulus(Complex64::new(0.0, 0.0), 0.1, 0.2)),
        Box::new(|c| c.r_step = 0.0),
        Box::new(|c| c.grid = (0, 4)),
        Box::new(|c| c.psi_offset = 0.95),
        Box::new(|c| c.norm_mode = NormMode::Calibrated(Some(-1.0))),
    ];
    for f in cases {
        let mut c = ok.clone();
        f(&mut c);
        assert!(c.validate().is_err(), "{c:?}");
    }
}

#[test]
fn batches_are_reproducible() {
    let c = ExperimentConfig { samples: 6, ..small_config() };
    let a = sample_batch(&c, 0).unwrap();
    let b = sample_batch(&c, 0).unwrap();
    assert_eq!(a, b);
    let other = sample_batch(&c, 1).unwrap();
    assert_ne!(a, other);
    // sample i does not depend on the batch size
    let longer = sample_batch(&ExperimentConfig { samples: 8, ..c.clone() }, 0).unwrap();
    assert_eq!(&longer[..6], &a[..]);
}

#[test]
fn rows_and_verdict() {
    let r = ReportRow::monte_carlo("x", 1.2, 0.1, 1.0, "p");
    assert!((r.z - 2.0).abs() < 1e-12 && r.pass && r.gating);
    let r = ReportRow::monte_carlo("x", 1.4, 0.1, 1.0, "p");
    assert!(!r.pass);
    let e = ReportRow::exact("y", 1.0 + 1e-12, 1.0, 1e-10, "p");
    assert!(e.pass && e.z.is_nan() && e.std_error == 0.0);
    let mut report = ExperimentReport::new("s", &small_config());
    report.rows.push(e);
    report.rows.push(r.clone().informational());
    assert!(report.passed());
    report.rows.push(r);
    assert!(!report.passed());

    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("quantity,estimate,std_error,oracle,provenance,z,pass,gating\n"));
    assert_eq!(text.lines().count(), 4);
    let mut buf = Vec::new();
    report.write_json(&mut buf).unwrap();
    let back: ExperimentReport = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back.rows.len(), 3);
    assert!(back.rows[0].z.is_nan());
    assert_eq!(back.config, report.config);

    let mut all = ExperimentReport::new("all", &small_config());
    all.absorb(report);
    assert_eq!(all.rows[0].quantity, "s/y");
}

#[test]
fn pseudo_radius_of_discs() {
    assert!((disc_pseudo_radius(&Region::centered_disc(0.4)).unwrap() - 0.4).abs() < 1e-15);
    // the hole probability of an off-center disc equals that of the centered
    // disc with the same pseudo-radius
    let off = Region::disc(Complex64::new(0.3, 0.2), 0.25);
    let rho = disc_pseudo_radius(&off).unwrap();
    let km = nystrom_restrict(bergman_kernel, &polar_quadrature(off, 12, 24, ReferenceMeasure::Lebesgue).unwrap());
    let nys = fredholm_det(&km, Sign::Minus).unwrap();
    assert!((nys - hole_probability_disc(rho).unwrap()).abs() < 1e-6, "{nys}");
    assert!((km.trace() - rho * rho / (1.0 - rho * rho)).abs() < 1e-8);
}

#[test]
fn pearson_pools_small_cells() {
    let law = vec![0.5, 0.3, 0.2];
    let obs: Vec<usize> = (0..100).map(|i| if i < 50 { 0 } else if i < 80 { 1 } else { 2 }).collect();
    let (stat, dof) = suites_pearson(&obs, &law, 100);
    assert!(stat < 1e-12);
    assert_eq!(dof, 2);
    // a law with negligible tail cells pools them
    let law = vec![0.9, 0.0999, 0.0001];
    let obs: Vec<usize> = (0..1000).map(|i| if i < 900 { 0 } else { 1 }).collect();
    let (_, dof) = suites_pearson(&obs, &law, 1000);
    assert_eq!(dof, 1);
}

fn suites_pearson(o: &[usize], law: &[f64], n: usize) -> (f64, usize) {
    super::suites::pearson(o, law, n)
}

#[test]
fn mean_and_standard_error() {
    let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
    assert!((m - 2.5).abs() < 1e-15);
    assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    assert!(mean_se(&[1.0]).1.is_infinite());
}

#[test]
fn small_suites_run() {
    let c = small_config();
    let samples = sample_batch(&c, 0).unwrap();
    let r = intensity_from(&c, &samples).unwrap();
    assert_eq!(r.rows.len(), 4);
    assert!(r.rows.iter().all(|row| row.estimate.is_finite() && row.oracle > 0.0));
    assert!(!r.notes.is_empty());

    let cond = conditional_from(&ExperimentConfig { grid: (4, 8), ..c.clone() }, &samples[..8], None).unwrap();
    assert_eq!(cond.rows.len(), 4);
    assert!(cond.rows[3].pass, "{:?}", cond.rows[3]);

    assert!(matches!(
        psi_expectation_from(&c, &samples),
        Err(HarnessError::TooFewSamples { suite: "psi", .. })
    ));
}
