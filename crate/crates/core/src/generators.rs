//! Synthetic labelled binary datasets.
//!
//! * Boolean block model: points in cluster `i` have each feature of block
//!   `j` set independently with probability `P[i][j]`.
//! * Corrupted codewords: `k` uniform random binary centers, clean points
//!   are centers with each bit flipped with probability `epsilon`, and a
//!   `rho` fraction of points is uniform noise with a uniform random label.
//!
//! Rows are generated from per-row streams and shuffled at the end, so the
//! output is identical for any thread count.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeDomain, CategoricalDataset, Category};
use crate::engine::Center;
use crate::error::{Error, Result};
use crate::rng::{purpose, Streams};

/// Splits `total` into `parts` sizes differing by at most one; the first
/// `total % parts` parts get the extra element.
pub fn even_split(total: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|i| total / parts + usize::from(i < total % parts))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BbmSpec {
    pub n: usize,
    pub d: usize,
    pub cluster_sizes: Vec<usize>,
    pub feature_block_sizes: Vec<usize>,
    /// `k x k`; row = point cluster, column = feature block.
    pub p: Vec<Vec<f64>>,
    pub seed: u64,
}

impl BbmSpec {
    /// Equal-sized blocks with `p` on the diagonal and `q` elsewhere.
    pub fn symmetric(n: usize, d: usize, k: usize, p: f64, q: f64, seed: u64) -> Self {
        let matrix = (0..k)
            .map(|i| (0..k).map(|j| if i == j { p } else { q }).collect())
            .collect();
        Self::with_matrix(n, d, matrix, seed)
    }

    /// Equal-sized blocks with an explicit probability matrix.
    pub fn with_matrix(n: usize, d: usize, p: Vec<Vec<f64>>, seed: u64) -> Self {
        let k = p.len();
        Self {
            n,
            d,
            cluster_sizes: even_split(n, k.max(1)),
            feature_block_sizes: even_split(d, k.max(1)),
            p,
            seed,
        }
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::config("block model needs at least one block"));
        }
        if self.n == 0 || self.d == 0 {
            return Err(Error::config("block model needs n >= 1 and d >= 1"));
        }
        if self.p.iter().any(|row| row.len() != k) {
            return Err(Error::config("probability matrix must be square"));
        }
        if let Some(v) = self.p.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::config(format!("probability {v} outside [0, 1]")));
        }
        for (name, sizes, total) in [
            ("cluster", &self.cluster_sizes, self.n),
            ("feature block", &self.feature_block_sizes, self.d),
        ] {
            if sizes.len() != k {
                return Err(Error::config(format!("{} {name} sizes for k = {k}", sizes.len())));
            }
            if sizes.contains(&0) {
                return Err(Error::config(format!("{name} sizes must be positive")));
            }
            if sizes.iter().sum::<usize>() != total {
                return Err(Error::config(format!("{name} sizes do not sum to {total}")));
            }
        }
        Ok(())
    }
}

/// Maps each index in `0..sum(sizes)` to its block.
fn block_of(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect()
}

/// Shuffles rows (and labels) with the dataset's shuffle stream.
fn shuffled(
    streams: &Streams,
    d: usize,
    values: Vec<Category>,
    labels: Vec<usize>,
) -> Result<CategoricalDataset> {
    let n = labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut streams.stream(&[purpose::SHUFFLE]));
    let mut out = Vec::with_capacity(values.len());
    for &r in &order {
        out.extend_from_slice(&values[r * d..(r + 1) * d]);
    }
    let labels = order.iter().map(|&r| labels[r]).collect();
    CategoricalDataset::new(vec![AttributeDomain::binary(); d], n, out)?.with_labels(labels)
}

pub fn generate_bbm(spec: &BbmSpec) -> Result<CategoricalDataset> {
    spec.validate()?;
    let streams = Streams::new(spec.seed);
    let d = spec.d;
    let cluster = block_of(&spec.cluster_sizes);
    let feature_block = block_of(&spec.feature_block_sizes);
    let mut values = vec![0 as Category; spec.n * d];
    values.par_chunks_mut(d).enumerate().for_each(|(r, row)| {
        let probs = &spec.p[cluster[r]];
        let mut rng = streams.stream(&[purpose::GENERATE_ROW, r as u64]);
        for (v, &b) in row.iter_mut().zip(&feature_block) {
            *v = Category::from(rng.random::<f64>() < probs[b]);
        }
    });
    shuffled(&streams, d, values, cluster)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcmSpec {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    /// Bit-flip probability of clean points, in `[0, 0.5)`.
    pub epsilon: f64,
    /// Fraction of uniform noise points, in `[0, 1]`.
    #[serde(default)]
    pub rho: f64,
    pub seed: u64,
}

impl CcmSpec {
    pub fn new(n: usize, d: usize, k: usize, epsilon: f64, rho: f64, seed: u64) -> Self {
        Self { n, d, k, epsilon, rho, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.k == 0 {
            return Err(Error::config("codeword model needs n, d and k >= 1"));
        }
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(Error::config(format!("epsilon {} outside [0, 0.5)", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::config(format!("rho {} outside [0, 1]", self.rho)));
        }
        Ok(())
    }

    /// `floor((1 - rho) n)`, guarded against representation error in `1 - rho`.
    pub fn clean_count(&self) -> usize {
        (((1.0 - self.rho) * self.n as f64) + 1e-9).floor() as usize
    }
}

/// Generates a corrupted-codewords dataset.
pub fn generate_ccm(spec: &CcmSpec) -> Result<CategoricalDataset> {
    generate_ccm_with_centers(spec).map(|(ds, _)| ds)
}

/// Like [`generate_ccm`] but also returns the codewords.
pub fn generate_ccm_with_centers(spec: &CcmSpec) -> Result<(CategoricalDataset, Vec<Center>)> {
    spec.validate()?;
    let streams = Streams::new(spec.seed);
    let (n, d, k) = (spec.n, spec.d, spec.k);
    let codewords: Vec<Vec<Category>> = (0..k)
        .map(|c| {
            let mut rng = streams.stream(&[purpose::GENERATE_CENTER, c as u64]);
            (0..d).map(|_| Category::from(rng.random::<bool>())).collect()
        })
        .collect();
    let clean = spec.clean_count();

    let mut values = vec![0 as Category; n * d];
    let labels: Vec<usize> = values
        .par_chunks_mut(d)
        .enumerate()
        .map(|(r, row)| {
            let mut rng = streams.stream(&[purpose::GENERATE_ROW, r as u64]);
            if r < clean {
                let c = r % k;
                for (v, &bit) in row.iter_mut().zip(&codewords[c]) {
                    let flip = rng.random::<f64>() < spec.epsilon;
                    *v = bit ^ Category::from(flip);
                }
                c
            } else {
                let c = rng.random_range(0..k);
                for v in row.iter_mut() {
                    *v = Category::from(rng.random::<bool>());
                }
                c
            }
        })
        .collect();
    let ds = shuffled(&streams, d, values, labels)?;
    let centers = codewords.iter().map(|c| Center::from_row(c)).collect();
    Ok((ds, centers))
}

/// Best achievable accuracy with a `rho` fraction of uniformly labelled noise.
pub fn max_noise_accuracy(rho: f64, k: usize) -> f64 {
    rho / k as f64 + 1.0 - rho
}
