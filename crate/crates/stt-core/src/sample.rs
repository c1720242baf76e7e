//! Scattered (multi-index, value) observations for completion-based
//! surrogate building, with optional train/validation/test split tags.

use crate::error::{Result, SttError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub index: Vec<usize>,
    pub value: f64,
    pub split: Split,
}

#[derive(Debug, Clone, Default)]
pub struct SampleSet {
    samples: Vec<Sample>,
}

impl SampleSet {
    /// Build from samples, rejecting duplicate multi-indices within a split.
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let mut seen: HashSet<(u8, &[usize])> = HashSet::with_capacity(samples.len());
        for (row, s) in samples.iter().enumerate() {
            let tag = match s.split {
                Split::Train => 0u8,
                Split::Valid => 1,
                Split::Test => 2,
            };
            if !seen.insert((tag, &s.index)) {
                return Err(SttError::DuplicateSample { line: row as u64 + 1 });
            }
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn of_split(&self, split: Split) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.split == split)
    }

    /// Smallest dims containing every index: max index + 1 per axis.
    pub fn infer_dims(&self) -> Result<Vec<usize>> {
        let first = self
            .samples
            .first()
            .ok_or_else(|| SttError::InvalidArgument("empty sample set".into()))?;
        let mut dims = vec![0usize; first.index.len()];
        for s in &self.samples {
            if s.index.len() != dims.len() {
                return Err(SttError::ShapeMismatch("inconsistent index arity".into()));
            }
            for (d, &i) in dims.iter_mut().zip(&s.index) {
                *d = (*d).max(i + 1);
            }
        }
        Ok(dims)
    }

    /// Reassign splits at the given fractions (the remainder goes to test),
    /// with a seeded shuffle. Fractions must be nonnegative and sum to <= 1.
    pub fn assign_splits(&mut self, train: f64, valid: f64, seed: u64) -> Result<()> {
        if !(0.0..=1.0).contains(&train) || !(0.0..=1.0).contains(&valid) || train + valid > 1.0 {
            return Err(SttError::InvalidArgument("bad split fractions".into()));
        }
        let n = self.samples.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let n_train = (train * n as f64).round() as usize;
        let n_valid = (valid * n as f64).round() as usize;
        for (pos, &i) in order.iter().enumerate() {
            self.samples[i].split = if pos < n_train {
                Split::Train
            } else if pos < (n_train + n_valid).min(n) {
                Split::Valid
            } else {
                Split::Test
            };
        }
        Ok(())
    }

    /// Natural-log transform of all values; every value must be positive.
    pub fn log_values(&mut self) -> Result<()> {
        for (row, s) in self.samples.iter_mut().enumerate() {
            if s.value <= 0.0 {
                return Err(SttError::MalformedRow {
                    line: row as u64 + 1,
                    message: format!("log transform needs positive values, got {}", s.value),
                });
            }
            s.value = s.value.ln();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize) -> SampleSet {
        let samples = (0..n)
            .map(|i| Sample {
                index: vec![i % 4, i / 4],
                value: i as f64,
                split: Split::Train,
            })
            .collect();
        SampleSet::new(samples).unwrap()
    }

    #[test]
    fn rejects_duplicates_within_split() {
        let s = Sample {
            index: vec![1, 2],
            value: 0.5,
            split: Split::Train,
        };
        let err = SampleSet::new(vec![s.clone(), s.clone()]);
        assert!(matches!(err, Err(SttError::DuplicateSample { line: 2 })));
        // same index in a different split is fine
        let mut t = s.clone();
        t.split = Split::Test;
        assert!(SampleSet::new(vec![s, t]).is_ok());
    }

    #[test]
    fn split_fractions_are_deterministic() {
        let mut a = set(100);
        let mut b = set(100);
        a.assign_splits(0.7, 0.15, 42).unwrap();
        b.assign_splits(0.7, 0.15, 42).unwrap();
        assert_eq!(a.of_split(Split::Train).count(), 70);
        assert_eq!(a.of_split(Split::Valid).count(), 15);
        assert_eq!(a.of_split(Split::Test).count(), 15);
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert_eq!(x.split, y.split);
        }
    }

    #[test]
    fn infer_dims_covers_all_indices() {
        let s = set(12);
        assert_eq!(s.infer_dims().unwrap(), vec![4, 3]);
    }

    #[test]
    fn log_values_requires_positive() {
        let mut s = set(5);
        assert!(s.log_values().is_err()); // value 0 at row 1
    }
}
