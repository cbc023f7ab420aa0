//! Gaussian class-conditional datasets for desk-scale runs.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::library::data::{Dataset, Features};
use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// Labels `+-1` with equal probability, class means `+-(separation/2) u`
    /// for `u = (1, ..., 1)/sqrt(d)`, and a minority mask of exactly
    /// `round(minority_fraction n)` rows. Minority rows are shifted by
    /// `group_shift` along the first coordinate.
    Fairness {
        minority_fraction: f64,
        separation: f64,
        group_shift: f64,
    },
    /// `classes` datasets of `n` rows each; class `k` has mean
    /// `separation e_{k mod d}`.
    NeymanPearson { classes: usize, separation: f64 },
}

impl SyntheticKind {
    pub fn fairness(minority_fraction: f64, separation: f64) -> Self {
        Self::Fairness {
            minority_fraction,
            separation,
            group_shift: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticData {
    Single(Dataset),
    Classes(Vec<Dataset>),
}

impl SyntheticData {
    pub fn into_single(self) -> Result<Dataset> {
        match self {
            Self::Single(d) => Ok(d),
            Self::Classes(_) => Err(Error::Config("expected a single dataset".into())),
        }
    }

    pub fn into_classes(self) -> Result<Vec<Dataset>> {
        match self {
            Self::Classes(c) => Ok(c),
            Self::Single(_) => Err(Error::Config("expected per-class datasets".into())),
        }
    }
}

/// The class means the generator draws around: `[mean(+1), mean(-1)]` for
/// the fairness kind, one per class otherwise.
pub fn class_means(d: usize, kind: &SyntheticKind) -> Vec<Vector> {
    match *kind {
        SyntheticKind::Fairness { separation, .. } => {
            let u = separation / 2.0 / (d as f64).sqrt();
            vec![vec![u; d], vec![-u; d]]
        }
        SyntheticKind::NeymanPearson { classes, separation } => (0..classes)
            .map(|k| {
                let mut m = vec![0.0; d];
                m[k % d] = separation;
                m
            })
            .collect(),
    }
}

pub fn generate_synthetic(n: usize, d: usize, seed: u64, kind: SyntheticKind) -> Result<SyntheticData> {
    if n < 1 || d < 1 {
        return Err(Error::Config("synthetic data needs n, d >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = class_means(d, &kind);
    let draw_rows = |rng: &mut ChaCha8Rng, mean_of: &dyn Fn(usize, &mut ChaCha8Rng) -> usize| {
        let mut data = Vec::with_capacity(n * d);
        let mut which = Vec::with_capacity(n);
        for i in 0..n {
            let c = mean_of(i, rng);
            which.push(c);
            for m in &means[c] {
                let z: f64 = rng.sample(StandardNormal);
                data.push(m + z);
            }
        }
        (data, which)
    };
    match kind {
        SyntheticKind::Fairness {
            minority_fraction,
            group_shift,
            ..
        } => {
            if !(0.0..=1.0).contains(&minority_fraction) {
                return Err(Error::Config(format!(
                    "minority fraction must lie in [0, 1], got {minority_fraction}"
                )));
            }
            let (mut data, which) = draw_rows(&mut rng, &|_, r| usize::from(r.random_bool(0.5)));
            let labels: Vec<f64> = which.iter().map(|c| if *c == 0 { 1.0 } else { -1.0 }).collect();
            let count = (minority_fraction * n as f64).round() as usize;
            let mut mask = vec![false; n];
            for i in sample(&mut rng, n, count.min(n)) {
                mask[i] = true;
                data[i * d] += group_shift;
            }
            Ok(SyntheticData::Single(Dataset::new(
                Features::dense(n, d, data)?,
                Some(labels),
                Some(mask),
            )?))
        }
        SyntheticKind::NeymanPearson { classes, .. } => {
            if classes < 2 {
                return Err(Error::Config("need at least 2 classes".into()));
            }
            let mut out = Vec::with_capacity(classes);
            for k in 0..classes {
                let (data, _) = draw_rows(&mut rng, &|_, _| k);
                out.push(Dataset::new(Features::dense(n, d, data)?, None, None)?);
            }
            Ok(SyntheticData::Classes(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let kind = SyntheticKind::fairness(0.3, 2.0);
        let a = generate_synthetic(200, 5, 7, kind).unwrap();
        let b = generate_synthetic(200, 5, 7, kind).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(200, 5, 8, kind).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn exact_minority_count() {
        let d = generate_synthetic(1000, 3, 1, SyntheticKind::fairness(0.3, 1.0))
            .unwrap()
            .into_single()
            .unwrap();
        assert_eq!(d.group_mask.unwrap().iter().filter(|m| **m).count(), 300);
    }

    #[test]
    fn zero_separation_means_coincide() {
        let m = class_means(4, &SyntheticKind::fairness(0.3, 0.0));
        assert_eq!(m[0], m[1]);
        let m = class_means(4, &SyntheticKind::NeymanPearson {
            classes: 3,
            separation: 0.0,
        });
        assert!(m.iter().all(|v| v == &m[0]));
    }

    #[test]
    fn empirical_means_follow_separation() {
        let d = generate_synthetic(20_000, 2, 3, SyntheticKind::fairness(0.0, 4.0))
            .unwrap()
            .into_single()
            .unwrap();
        let labels = d.labels.unwrap();
        let mut sum = [0.0; 2];
        let mut cnt = 0.0;
        for (i, l) in labels.iter().enumerate() {
            if *l > 0.0 {
                let r = d.features.row_dense(i);
                sum[0] += r[0];
                sum[1] += r[1];
                cnt += 1.0;
            }
        }
        let expect = 2.0 / 2f64.sqrt();
        assert!((sum[0] / cnt - expect).abs() < 0.05 && (sum[1] / cnt - expect).abs() < 0.05);
    }

    #[test]
    fn neyman_pearson_classes() {
        let c = generate_synthetic(10, 3, 0, SyntheticKind::NeymanPearson {
            classes: 4,
            separation: 1.0,
        })
        .unwrap()
        .into_classes()
        .unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|d| d.len() == 10 && d.dim() == 3));
    }
}
