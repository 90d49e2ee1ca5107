use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeoError, Result};

/// Draw `count` points uniformly from the box, skipping rejected ones.
/// Gives up after `50 * count` attempts.
pub fn sample_box(
    domain: &[(f64, f64)],
    count: usize,
    seed: u64,
    accept: impl Fn(&[f64]) -> bool,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 50 * count.max(1) {
            return Err(GeoError::TooFewSamples {
                needed: count,
                got: out.len(),
            });
        }
        let p: Vec<f64> = domain
            .iter()
            .map(|(lo, hi)| {
                if hi > lo {
                    rng.gen_range(*lo..*hi)
                } else {
                    *lo
                }
            })
            .collect();
        if accept(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Running maximum with the index of the sample that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Worst {
    pub value: f64,
    pub index: Option<usize>,
}

impl Worst {
    pub fn push(&mut self, value: f64, index: usize) {
        if self.index.is_none() || value > self.value || (value.is_nan() && !self.value.is_nan()) {
            self.value = value;
            self.index = Some(index);
        }
    }

    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut w = Worst::default();
        for (i, v) in values.into_iter().enumerate() {
            w.push(v, i);
        }
        w
    }
}
