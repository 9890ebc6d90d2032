use super::{enumerate_distribution, Frame, ProcessDistribution};
use crate::error::Result;
use crate::exterior::{combo_unrank, IndexCombo};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Inverse-CDF sampler over the lexicographic oracle table.
#[derive(Debug, Clone)]
pub struct Sampler {
    n: usize,
    p: usize,
    cdf: Vec<f64>,
}

impl Sampler {
    pub fn new(f: &Frame) -> Result<Self> {
        Ok(Self::from_distribution(&enumerate_distribution(f)?))
    }

    pub fn from_distribution(d: &ProcessDistribution) -> Self {
        let mut acc = 0.0;
        let cdf = d
            .raw()
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        Self { n: d.n(), p: d.p(), cdf }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> IndexCombo {
        let total = *self.cdf.last().expect("at least one subset");
        let u = rng.random::<f64>() * total;
        let r = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        combo_unrank(self.n, self.p, r)
    }
}

/// One exact draw, deterministic in `seed`.
pub fn sample(f: &Frame, seed: u64) -> Result<IndexCombo> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Sampler::new(f)?.draw(&mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn example1_frequencies() {
        let s = Sampler::new(&Frame::example1()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let draws = 100_000;
        for _ in 0..draws {
            *counts.entry(s.draw(&mut rng).to_string()).or_default() += 1;
        }
        assert_eq!(counts.len(), 4);
        for key in ["1-2", "1-4", "2-3", "3-4"] {
            let freq = counts[key] as f64 / draws as f64;
            assert!((freq - 0.25).abs() < 0.01, "{key}: {freq}");
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let f = Frame::example1();
        assert_eq!(sample(&f, 5).unwrap(), sample(&f, 5).unwrap());
    }

    #[test]
    fn single_support_always_drawn() {
        let f = Frame::new(vec![vec![0.0, 1.0, 0.0]]).unwrap();
        for seed in 0..20 {
            assert_eq!(sample(&f, seed).unwrap().as_slice(), &[2]);
        }
    }
}
