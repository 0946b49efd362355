//! Lloyd's k-means on one-hot encodings, used as the Euclidean baseline.

use rand::Rng;
use rayon::prelude::*;

use super::{ClusteringConfig, LloydResult, TraceRecord};
use crate::dataset::OneHotMatrix;
use crate::error::Result;
use crate::evaluation::accuracy;
use crate::rng::{purpose, Streams};
use crate::seeding::{distance_indices, uniform_indices, SeedingSpec};

/// Rows per partial sum in the centroid update. Fixed so that the floating
/// point summation order does not depend on the thread count.
const SUM_CHUNK: usize = 1024;

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd iteration with squared-Euclidean assignment (ties go to the lowest
/// center index) and mean centroids. Stops when the assignment repeats or
/// after `max_iter` rounds. `config.rounding` is ignored.
///
/// Seeding uses the same streams as SoftModes; on one-hot rows squared
/// distance is twice the Hamming distance, so both engines pick the same
/// seed rows for the same configuration.
pub fn run_lloyd(onehot: &OneHotMatrix, config: &ClusteringConfig) -> Result<LloydResult> {
    config.validate(onehot.n())?;
    config.parallelism.install(|| lloyd(onehot, config))?
}

fn lloyd(x: &OneHotMatrix, config: &ClusteringConfig) -> Result<LloydResult> {
    let (n, w, k) = (x.n(), x.width(), config.k);
    let streams = Streams::new(config.seed);
    let mut rng = streams.stream(&[purpose::SEEDING]);
    let seeds = match config.seeding {
        SeedingSpec::UniformRandom => uniform_indices(n, k, &mut rng),
        SeedingSpec::DistanceSampling => {
            distance_indices(n, k, &mut rng, |i, j| squared_distance(x.row(i), x.row(j)))
        }
    };
    let mut centroids: Vec<f64> = seeds.iter().flat_map(|&i| x.row(i).iter().copied()).collect();

    let mut trace = Vec::new();
    let mut previous: Option<Vec<usize>> = None;
    let mut round = 0usize;
    loop {
        round += 1;
        let picks: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .with_min_len(256)
            .map(|i| {
                let row = x.row(i);
                let mut best = (0, f64::INFINITY);
                for (c, centroid) in centroids.chunks_exact(w).enumerate() {
                    let dist = squared_distance(row, centroid);
                    if dist < best.1 {
                        best = (c, dist);
                    }
                }
                best
            })
            .collect();
        let objective = picks.iter().map(|p| p.1).sum();
        let assignment: Vec<usize> = picks.into_iter().map(|p| p.0).collect();
        trace.push(TraceRecord {
            iteration: round,
            objective,
            accuracy: x.labels().map(|l| accuracy(&assignment, l)).transpose()?,
        });

        let repeated = previous.as_ref() == Some(&assignment);
        if repeated || round >= config.max_iter {
            return Ok(LloydResult {
                assignment,
                centers: centroids.chunks_exact(w).map(<[f64]>::to_vec).collect(),
                iterations: round,
                converged: repeated,
                trace,
            });
        }

        let partials: Vec<(Vec<f64>, Vec<usize>)> = x
            .data()
            .par_chunks(SUM_CHUNK * w)
            .zip(assignment.par_chunks(SUM_CHUNK))
            .map(|(rows, labels)| {
                let mut sums = vec![0.0; k * w];
                let mut sizes = vec![0usize; k];
                for (row, &c) in rows.chunks_exact(w).zip(labels) {
                    sizes[c] += 1;
                    for (s, v) in sums[c * w..(c + 1) * w].iter_mut().zip(row) {
                        *s += v;
                    }
                }
                (sums, sizes)
            })
            .collect();
        let mut sums = vec![0.0; k * w];
        let mut sizes = vec![0usize; k];
        for (ps, pz) in partials {
            sums.iter_mut().zip(ps).for_each(|(a, b)| *a += b);
            sizes.iter_mut().zip(pz).for_each(|(a, b)| *a += b);
        }
        for c in 0..k {
            let target = &mut centroids[c * w..(c + 1) * w];
            if sizes[c] == 0 {
                let row = streams
                    .stream(&[purpose::RESEED, round as u64, c as u64])
                    .random_range(0..n);
                target.copy_from_slice(x.row(row));
            } else {
                let size = sizes[c] as f64;
                for (t, s) in target.iter_mut().zip(&sums[c * w..(c + 1) * w]) {
                    *t = s / size;
                }
            }
        }
        previous = Some(assignment);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{one_hot, CategoricalDataset};

    #[test]
    fn single_cluster_centroid_is_column_mean() {
        let rows = vec![vec![0, 1], vec![1, 1], vec![1, 0], vec![1, 2]];
        let ds = CategoricalDataset::from_rows(&rows).unwrap();
        let x = one_hot(&ds);
        let r = run_lloyd(&x, &ClusteringConfig::new(1).seed(3)).unwrap();
        assert!(r.converged);
        // one update reaches the mean; the second pass only confirms it
        assert_eq!(r.iterations, 2);
        let mean: Vec<f64> = (0..x.width())
            .map(|c| (0..4).map(|i| x.row(i)[c]).sum::<f64>() / 4.0)
            .collect();
        assert_eq!(r.centers[0], mean);
        assert!(r.assignment.iter().all(|&a| a == 0));
    }

    #[test]
    fn separated_clouds_split_in_one_assignment() {
        let d = 16;
        let mut rows = Vec::new();
        for i in 0..20 {
            let mut a = vec![0; d];
            a[i % d] = 1;
            rows.push(a);
            let mut b = vec![1; d];
            b[i % d] = 0;
            rows.push(b);
        }
        let ds = CategoricalDataset::from_rows(&rows).unwrap();
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let ds = ds.with_labels(labels).unwrap();
        let x = one_hot(&ds);
        for seed in 0..5 {
            let r = run_lloyd(&x, &ClusteringConfig::new(2).seed(seed)).unwrap();
            assert_eq!(r.trace[0].accuracy, Some(1.0), "seed {seed}");
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let ds = CategoricalDataset::from_rows(&[vec![0], vec![1], vec![2]]).unwrap();
        let x = one_hot(&ds);
        let r = run_lloyd(&x, &ClusteringConfig::new(2).seed(0).max_iter(1)).unwrap();
        // every non-seed row is equidistant from both seeds
        let seeded: Vec<usize> = r
            .centers
            .iter()
            .map(|c| (0..3).find(|&i| x.row(i) == c.as_slice()).unwrap())
            .collect();
        let other = (0..3).find(|i| !seeded.contains(i)).unwrap();
        assert_eq!(r.assignment[other], 0);
    }
}
