//! Statistical behaviour of the harness on short runs.

use gafzeros::harness::{intensity_from, run_conditional_verification, sample_batch, ExperimentConfig};

fn config(samples: usize) -> ExperimentConfig {
    ExperimentConfig { master_seed: 21, samples, degree: 160, window: 0.9, ..ExperimentConfig::default() }
}

#[test]
fn standard_errors_shrink_like_root_n() {
    let small = sample_batch(&config(150), 0).unwrap();
    let large = sample_batch(&config(600), 0).unwrap();
    let a = intensity_from(&config(150), &small).unwrap();
    let b = intensity_from(&config(600), &large).unwrap();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        // the count-based rows; the pair and chi2 rows have heavy-tailed spreads
        if !ra.quantity.starts_with("rho1") {
            continue;
        }
        let ratio = ra.std_error / rb.std_error;
        // four times the samples: ratio 2, up to sampling noise in the estimates
        assert!((1.5..2.7).contains(&ratio), "{}: {ratio}", ra.quantity);
    }
}

#[test]
fn conditional_suite_on_a_short_run() {
    let c = ExperimentConfig { samples: 60, grid: (6, 12), ..config(60) };
    let r = run_conditional_verification(&c).unwrap();
    assert_eq!(r.rows.len(), 4);
    // the density forms agree regardless of sample size
    assert!(r.rows[3].pass);
    for row in &r.rows[..3] {
        assert!(row.estimate > 0.0 && row.estimate < 1.0);
        assert!(row.z.abs() < 5.0, "{row:?}");
    }
}
