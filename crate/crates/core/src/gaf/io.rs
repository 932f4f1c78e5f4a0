use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Configuration, GafError, SampleSource};
use crate::geom::Point;

#[derive(Debug, Serialize, Deserialize)]
struct ParticleRow {
    sample_id: usize,
    seed: u64,
    degree: usize,
    window_radius: f64,
    re: f64,
    im: f64,
}

/// One particle per row: `sample_id,seed,degree,window_radius,re,im`.
///
/// Configurations without particles leave no rows.
pub fn configurations_to_csv<W: Write>(configs: &[Configuration], out: W) -> Result<(), GafError> {
    let mut w = csv::Writer::from_writer(out);
    for (sample_id, c) in configs.iter().enumerate() {
        for p in &c.particles {
            w.serialize(ParticleRow {
                sample_id,
                seed: c.source.seed,
                degree: c.source.degree,
                window_radius: c.window_radius,
                re: p.z().re,
                im: p.z().im,
            })?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Inverse of [`configurations_to_csv`] for the configurations that have rows.
pub fn configurations_from_csv<R: Read>(input: R) -> Result<Vec<Configuration>, GafError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out: Vec<(usize, Configuration)> = Vec::new();
    for row in r.deserialize() {
        let row: ParticleRow = row?;
        let p = Point::from_re_im(row.re, row.im)?;
        match out.last_mut() {
            Some((id, c)) if *id == row.sample_id => c.particles.push(p),
            _ => out.push((
                row.sample_id,
                Configuration::new(
                    vec![p],
                    row.window_radius,
                    SampleSource { seed: row.seed, degree: row.degree },
                ),
            )),
        }
    }
    Ok(out.into_iter().map(|(_, c)| c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let configs = vec![
            Configuration::new(
                vec![Point::from_re_im(0.1, 0.2).unwrap(), Point::from_re_im(-0.3, 0.0).unwrap()],
                0.9,
                SampleSource { seed: 11, degree: 64 },
            ),
            Configuration::new(vec![Point::from_re_im(0.0, -0.5).unwrap()], 0.9, SampleSource { seed: 12, degree: 64 }),
        ];
        let mut buf = Vec::new();
        configurations_to_csv(&configs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("sample_id,seed,degree,window_radius,re,im\n"));
        assert_eq!(configurations_from_csv(buf.as_slice()).unwrap(), configs);
    }
}
