//! Initial centers.
//!
//! Distance seeding is the Hamming-metric analogue of k-means++: each new
//! center is drawn with probability proportional to its distance (D¹) to
//! the nearest center chosen so far. On binary one-hot data D¹ and D²
//! weights are proportional, so the same routine also seeds Lloyd.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::CategoricalDataset;
use crate::engine::{hamming, Center};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeedingSpec {
    #[serde(rename = "random")]
    UniformRandom,
    #[default]
    #[serde(rename = "dsample")]
    DistanceSampling,
}

impl SeedingSpec {
    pub fn label(&self) -> &'static str {
        match self {
            SeedingSpec::UniformRandom => "random",
            SeedingSpec::DistanceSampling => "dsample",
        }
    }
}

impl std::str::FromStr for SeedingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "uniform" => Ok(SeedingSpec::UniformRandom),
            "dsample" | "distance" => Ok(SeedingSpec::DistanceSampling),
            other => Err(Error::config(format!("unknown seeding method {other:?}"))),
        }
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::config(format!("cannot seed {k} centers from {n} points")));
    }
    Ok(())
}

/// `k` distinct indices drawn uniformly without replacement.
pub(crate) fn uniform_indices<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    rand::seq::index::sample(rng, n, k).into_vec()
}

/// D¹ sampling over an arbitrary non-negative point-to-point distance.
/// Consumes exactly one uniform draw per center after the first.
pub(crate) fn distance_indices<R, F>(n: usize, k: usize, rng: &mut R, dist: F) -> Vec<usize>
where
    R: Rng + ?Sized,
    F: Fn(usize, usize) -> f64 + Sync,
{
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    let mut picks = vec![first];
    chosen[first] = true;
    let mut nearest: Vec<f64> = (0..n).into_par_iter().map(|i| dist(i, first)).collect();

    while picks.len() < k {
        let total: f64 = nearest
            .iter()
            .zip(&chosen)
            .filter(|(_, &c)| !c)
            .map(|(w, _)| *w)
            .sum();
        let u = rng.random::<f64>();
        let next = if total > 0.0 {
            let target = u * total;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last_positive = None;
            for i in 0..n {
                if chosen[i] || nearest[i] <= 0.0 {
                    continue;
                }
                acc += nearest[i];
                last_positive = Some(i);
                if target < acc {
                    pick = Some(i);
                    break;
                }
            }
            pick.or(last_positive).expect("positive total implies a candidate")
        } else {
            // every unchosen point duplicates a center: uniform among them
            let remaining = n - picks.len();
            let r = ((u * remaining as f64) as usize).min(remaining - 1);
            (0..n).filter(|&i| !chosen[i]).nth(r).expect("r < remaining")
        };
        chosen[next] = true;
        picks.push(next);
        nearest
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, w)| *w = w.min(dist(i, next)));
    }
    picks
}

fn centers_at(ds: &CategoricalDataset, indices: &[usize]) -> Vec<Center> {
    indices.iter().map(|&i| Center::from_row(ds.row(i))).collect()
}

/// Centers copied from `k` rows drawn uniformly without replacement.
pub fn seed_uniform<R: Rng + ?Sized>(ds: &CategoricalDataset, k: usize, rng: &mut R) -> Result<Vec<Center>> {
    check_k(ds.n(), k)?;
    Ok(centers_at(ds, &uniform_indices(ds.n(), k, rng)))
}

/// D¹ (Hamming-distance-proportional) seeding.
pub fn seed_distance<R: Rng + ?Sized>(ds: &CategoricalDataset, k: usize, rng: &mut R) -> Result<Vec<Center>> {
    check_k(ds.n(), k)?;
    Ok(centers_at(ds, &seed_distance_indices(ds, k, rng)))
}

pub(crate) fn seed_distance_indices<R: Rng + ?Sized>(ds: &CategoricalDataset, k: usize, rng: &mut R) -> Vec<usize> {
    distance_indices(ds.n(), k, rng, |i, j| {
        hamming(ds.row(i), ds.row(j)).expect("rows share a width") as f64
    })
}

pub(crate) fn seed_indices<R: Rng + ?Sized>(
    ds: &CategoricalDataset,
    k: usize,
    spec: SeedingSpec,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_k(ds.n(), k)?;
    Ok(match spec {
        SeedingSpec::UniformRandom => uniform_indices(ds.n(), k, rng),
        SeedingSpec::DistanceSampling => seed_distance_indices(ds, k, rng),
    })
}

pub fn seed<R: Rng + ?Sized>(
    ds: &CategoricalDataset,
    k: usize,
    spec: SeedingSpec,
    rng: &mut R,
) -> Result<Vec<Center>> {
    Ok(centers_at(ds, &seed_indices(ds, k, spec, rng)?))
}
