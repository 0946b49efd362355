//! Scoring a clustering against ground truth.
//!
//! Accuracy is the best fraction of correctly placed points over injective
//! matchings of predicted clusters to true labels. The confusion matrix is
//! padded to square with zeros when the two label counts differ.

use std::fmt;

use crate::error::{Error, Result};

/// Square matrices up to this size are matched by trying every permutation.
pub const EXHAUSTIVE_LIMIT: usize = 6;

/// Refuse exhaustive search beyond this size (10! permutations).
const EXHAUSTIVE_MAX: usize = 10;

/// `k_pred x k_true` contingency counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k_pred: usize,
    k_true: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn k_pred(&self) -> usize {
        self.k_pred
    }

    pub fn k_true(&self) -> usize {
        self.k_true
    }

    pub fn get(&self, pred: usize, truth: usize) -> u64 {
        self.counts[pred * self.k_true + truth]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn square_size(&self) -> usize {
        self.k_pred.max(self.k_true)
    }

    /// Entry of the zero-padded square matrix.
    fn padded(&self, pred: usize, truth: usize) -> u64 {
        if pred < self.k_pred && truth < self.k_true {
            self.get(pred, truth)
        } else {
            0
        }
    }
}

impl fmt::Display for ConfusionMatrix {
    /// CSV: a header `pred,t0,t1,...` then one row per predicted cluster.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pred")?;
        for t in 0..self.k_true {
            write!(f, ",t{t}")?;
        }
        writeln!(f)?;
        for p in 0..self.k_pred {
            write!(f, "{p}")?;
            for t in 0..self.k_true {
                write!(f, ",{}", self.get(p, t))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn confusion(pred: &[usize], truth: &[usize]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::domain(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    let k_pred = pred.iter().max().map_or(0, |m| m + 1);
    let k_true = truth.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0u64; k_pred * k_true];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p * k_true + t] += 1;
    }
    Ok(ConfusionMatrix { k_pred, k_true, counts })
}

/// Maximum matching weight by enumerating all permutations (Heap's algorithm).
pub fn matching_weight_exhaustive(cm: &ConfusionMatrix) -> Result<u64> {
    let m = cm.square_size();
    if m > EXHAUSTIVE_MAX {
        return Err(Error::config(format!("exhaustive matching of size {m} is too large")));
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let score = |perm: &[usize]| -> u64 { perm.iter().enumerate().map(|(p, &t)| cm.padded(p, t)).sum() };
    let mut best = score(&perm);
    let mut c = vec![0usize; m];
    let mut i = 1;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.max(score(&perm));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

/// Maximum matching weight by the Hungarian method (shortest augmenting
/// paths with potentials, O(m^3)) on the negated counts.
pub fn matching_weight_hungarian(cm: &ConfusionMatrix) -> u64 {
    let m = cm.square_size();
    if m == 0 {
        return 0;
    }
    let cost = |p: usize, t: usize| -(cm.padded(p, t) as i64);
    // 1-based arrays; column 0 is a virtual root.
    let mut u = vec![0i64; m + 1];
    let mut v = vec![0i64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=m {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![i64::MAX; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[col0] = true;
            let row0 = owner[col0];
            let mut delta = i64::MAX;
            let mut col1 = 0;
            for col in 1..=m {
                if used[col] {
                    continue;
                }
                let reduced = cost(row0 - 1, col - 1) - u[row0] - v[col];
                if reduced < minv[col] {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=m {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    (1..=m).map(|col| cm.padded(owner[col] - 1, col - 1)).sum()
}

/// Best injective matching weight divided by the point count.
pub fn accuracy_from_confusion(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.total();
    if n == 0 {
        return Err(Error::domain("accuracy of an empty labelling"));
    }
    let weight = if cm.square_size() <= EXHAUSTIVE_LIMIT {
        matching_weight_exhaustive(cm)?
    } else {
        matching_weight_hungarian(cm)
    };
    Ok(weight as f64 / n as f64)
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    accuracy_from_confusion(&confusion(pred, truth)?)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::rng::Stream;

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap();
        assert_eq!((cm.get(0, 0), cm.get(0, 1), cm.get(1, 0), cm.get(1, 1)), (2, 0, 0, 2));

        let cm = confusion(&[0, 0, 0, 0], &[0, 1, 1, 0]).unwrap();
        assert_eq!(cm.k_pred(), 1);
        assert_eq!(cm.total(), 4);

        // tallied by hand
        let pred = [2, 0, 1, 1, 0, 2, 2, 0];
        let truth = [0, 0, 1, 1, 1, 0, 1, 0];
        let cm = confusion(&pred, &truth).unwrap();
        let expected = [[2, 1], [0, 2], [2, 1]];
        for (p, row) in expected.iter().enumerate() {
            for (t, &e) in row.iter().enumerate() {
                assert_eq!(cm.get(p, t), e, "({p},{t})");
            }
        }
        assert!(confusion(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let truth = [0, 0, 1, 1, 2];
        assert_eq!(accuracy(&truth, &truth).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1, 0, 0], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.5);
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn random_prediction_is_near_half() {
        let mut rng = Stream::from_key(17);
        let truth: Vec<usize> = (0..10_000).map(|i| i % 2).collect();
        let pred: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
        let a = accuracy(&pred, &truth).unwrap();
        assert!((a - 0.5).abs() <= 0.02, "{a}");
    }

    #[test]
    fn display_is_csv() {
        let cm = confusion(&[0, 1], &[1, 1]).unwrap();
        assert_eq!(cm.to_string(), "pred,t0,t1\n0,0,1\n1,0,1\n");
    }

    #[test]
    fn hungarian_handles_rectangular_and_large() {
        let mut rng = Stream::from_key(3);
        for m in [1usize, 2, 5, 8, 9] {
            let pred: Vec<usize> = (0..200).map(|_| rng.random_range(0..m)).collect();
            let truth: Vec<usize> = (0..200).map(|_| rng.random_range(0..(m + 1).min(9))).collect();
            let cm = confusion(&pred, &truth).unwrap();
            assert_eq!(matching_weight_hungarian(&cm), matching_weight_exhaustive(&cm).unwrap());
        }
    }
}
