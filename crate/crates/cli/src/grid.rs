//! Parameter points: Cartesian grids (last axis fastest) or seeded uniform
//! draws from the bounding box of the axes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Axis;
use crate::error::CliError;

pub struct PointSet {
    pub names: Vec<&'static str>,
    axes: Vec<Vec<f64>>,
    random: Option<(usize, u64)>,
}

impl PointSet {
    pub fn grid(axes: Vec<(&'static str, &Axis)>) -> Result<Self, CliError> {
        let mut names = Vec::new();
        let mut vals = Vec::new();
        for (n, a) in axes {
            names.push(n);
            vals.push(a.values()?);
        }
        Ok(PointSet {
            names,
            axes: vals,
            random: None,
        })
    }

    pub fn random(axes: Vec<(&'static str, &Axis)>, samples: usize, seed: u64) -> Result<Self, CliError> {
        let mut s = Self::grid(axes)?;
        s.random = Some((samples, seed));
        Ok(s)
    }

    pub fn len(&self) -> usize {
        match self.random {
            Some((n, _)) => n,
            None => self.axes.iter().map(|a| a.len()).product(),
        }
    }

    pub fn check_cap(&self, cap: usize, rows_per_point: usize) -> Result<(), CliError> {
        let rows = self.len().saturating_mul(rows_per_point);
        if rows > cap {
            return Err(CliError::Usage(format!("grid has {rows} rows, above the cap of {cap}")));
        }
        Ok(())
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        match self.random {
            Some((_, seed)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                self.axes
                    .iter()
                    .map(|a| {
                        let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
                        let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        if hi > lo {
                            rng.gen_range(lo..hi)
                        } else {
                            lo
                        }
                    })
                    .collect()
            }
            None => {
                let mut rem = i;
                let mut out = vec![0.0; self.axes.len()];
                for (k, a) in self.axes.iter().enumerate().rev() {
                    out[k] = a[rem % a.len()];
                    rem /= a.len();
                }
                out
            }
        }
    }
}
