//! Clustering engines: SoftModes (k-modes with a pluggable rounding step)
//! and Lloyd's k-means on one-hot encodings.

mod kernel;
mod lloyd;
mod softmodes;

use std::num::NonZeroUsize;

use rand::Rng;

use crate::dataset::{AttributeDomain, CategoricalDataset, Category};
use crate::error::{Error, Result};
use crate::rounding::{sample_weights, RoundingSpec};
use crate::seeding::SeedingSpec;

pub use lloyd::run_lloyd;
pub use softmodes::{assign, run_softmodes, SoftModes, StepOutcome};

pub const DEFAULT_MAX_ITER: usize = 100;

/// A cluster center: one category per attribute.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Center {
    values: Vec<Category>,
}

impl Center {
    pub fn new(values: Vec<Category>, domains: &[AttributeDomain]) -> Result<Self> {
        if values.len() != domains.len() {
            return Err(Error::domain(format!(
                "center has {} values for {} attributes",
                values.len(),
                domains.len()
            )));
        }
        if let Some((j, v)) = values
            .iter()
            .enumerate()
            .find(|(j, v)| **v as usize >= domains[*j].arity())
        {
            return Err(Error::domain(format!("center value {v} outside attribute {j}")));
        }
        Ok(Self { values })
    }

    /// Copies a dataset row. Rows are valid by construction.
    pub fn from_row(row: &[Category]) -> Self {
        Self { values: row.to_vec() }
    }

    pub fn values(&self) -> &[Category] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Worker count for the data-parallel steps. Results never depend on it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    /// Use the ambient rayon pool.
    #[default]
    Auto,
    Threads(NonZeroUsize),
}

impl Parallelism {
    pub fn threads(n: usize) -> Result<Self> {
        NonZeroUsize::new(n)
            .map(Parallelism::Threads)
            .ok_or_else(|| Error::config("thread count must be positive"))
    }

    pub(crate) fn install<T: Send>(self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self {
            Parallelism::Auto => Ok(f()),
            Parallelism::Threads(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.get())
                    .build()
                    .map_err(|e| Error::config(format!("cannot build thread pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringConfig {
    pub k: usize,
    pub rounding: RoundingSpec,
    pub seeding: SeedingSpec,
    pub max_iter: usize,
    pub seed: u64,
    pub parallelism: Parallelism,
}

impl ClusteringConfig {
    /// k-modes defaults: plurality rounding, distance seeding, 100 iterations.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            rounding: RoundingSpec::Plurality,
            seeding: SeedingSpec::default(),
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            parallelism: Parallelism::Auto,
        }
    }

    pub fn rounding(mut self, rounding: RoundingSpec) -> Self {
        self.rounding = rounding;
        self
    }

    pub fn seeding(mut self, seeding: SeedingSpec) -> Self {
        self.seeding = seeding;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if self.k > n {
            return Err(Error::config(format!("k = {} exceeds the {n} data points", self.k)));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter must be at least 1"));
        }
        self.rounding.validate()
    }
}

/// One row of the per-iteration trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    /// 1-based iteration number.
    pub iteration: usize,
    /// k-median (Hamming) objective for SoftModes, sum of squared Euclidean
    /// distances for Lloyd. Measured against the centers used for assignment.
    pub objective: f64,
    /// Present only when the data carries ground-truth labels.
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringResult<C = Center> {
    /// Partition from the last completed assignment.
    pub assignment: Vec<usize>,
    /// Centers the final assignment was computed against, so that the last
    /// trace objective is the objective of `(centers, assignment)`.
    pub centers: Vec<C>,
    pub iterations: usize,
    /// The final partition repeated the previous one.
    pub converged: bool,
    pub trace: Vec<TraceRecord>,
}

impl<C> ClusteringResult<C> {
    pub fn final_accuracy(&self) -> Option<f64> {
        self.trace.last().and_then(|t| t.accuracy)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.trace.last().map(|t| t.objective)
    }
}

/// Lloyd results carry real-valued centroids.
pub type LloydResult = ClusteringResult<Vec<f64>>;

/// Number of coordinates on which `a` and `b` differ.
pub fn hamming(a: &[Category], b: &[Category]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::domain(format!(
            "hamming distance of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(kernel::hamming_slices(a, b) as usize)
}

/// k-median objective: summed Hamming distance of each point to its center.
pub fn objective(ds: &CategoricalDataset, centers: &[Center], assignment: &[usize]) -> Result<u64> {
    if assignment.len() != ds.n() {
        return Err(Error::domain("assignment length differs from point count"));
    }
    let mut total = 0u64;
    for (row, &c) in ds.rows().zip(assignment) {
        let center = centers
            .get(c)
            .ok_or_else(|| Error::domain(format!("cluster id {c} without a center")))?;
        total += hamming(row, center.values())? as u64;
    }
    Ok(total)
}

/// Rounds one attribute's category counts and samples a value.
/// `scratch` holds two buffers of at least `counts.len()` entries.
pub(crate) fn sample_attribute<R: Rng + ?Sized>(
    counts: &[u32],
    size: usize,
    rounding: RoundingSpec,
    scratch: &mut (Vec<f64>, Vec<f64>),
    rng: &mut R,
) -> Category {
    let (freq, rounded) = scratch;
    freq.clear();
    let size = size as f64;
    freq.extend(counts.iter().map(|&c| f64::from(c) / size));
    rounded.resize(counts.len(), 0.0);
    rounding.apply(freq, rounded);
    sample_weights(rounded, rng) as Category
}

/// Builds one center from the rows of a cluster: per attribute, round the
/// empirical frequency vector and sample a category from the result.
pub fn update_center<'a, I, R>(
    rows: I,
    domains: &[AttributeDomain],
    rounding: RoundingSpec,
    rng: &mut R,
) -> Result<Center>
where
    I: IntoIterator<Item = &'a [Category]>,
    R: Rng + ?Sized,
{
    rounding.validate()?;
    let mut counts: Vec<Vec<u32>> = domains.iter().map(|d| vec![0; d.arity()]).collect();
    let mut size = 0usize;
    for row in rows {
        if row.len() != domains.len() {
            return Err(Error::domain("cluster row has the wrong number of attributes"));
        }
        for (j, &v) in row.iter().enumerate() {
            let slot = counts[j]
                .get_mut(v as usize)
                .ok_or_else(|| Error::domain(format!("value {v} outside attribute {j}")))?;
            *slot += 1;
        }
        size += 1;
    }
    if size == 0 {
        return Err(Error::domain("cannot update the center of an empty cluster"));
    }
    let mut scratch = (Vec::new(), Vec::new());
    let values = counts
        .iter()
        .map(|c| sample_attribute(c, size, rounding, &mut scratch, rng))
        .collect();
    Ok(Center { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(&[0, 1, 2, 1], &[0, 2, 2, 0]).unwrap(), 2);
        assert_eq!(hamming(&[1, 0, 1], &[1, 0, 1]).unwrap(), 0);
        let a = [0u16, 1, 1, 0, 1];
        let b: Vec<u16> = a.iter().map(|v| 1 - v).collect();
        assert_eq!(hamming(&a, &b).unwrap(), 5);
        assert!(matches!(hamming(&[0, 1], &[0]), Err(Error::Domain(_))));
    }

    #[test]
    fn objective_examples() {
        let ds = CategoricalDataset::from_rows(&[vec![0, 0, 0], vec![1, 1, 1], vec![0, 0, 0]]).unwrap();
        let centers = vec![Center::from_row(&[0, 0, 0]), Center::from_row(&[1, 1, 1])];
        assert_eq!(objective(&ds, &centers, &[0, 1, 0]).unwrap(), 0);
        assert_eq!(objective(&ds, &centers, &[0, 0, 0]).unwrap(), 3);
        assert!(objective(&ds, &centers, &[0, 2, 0]).is_err());
    }

    fn binary_domains(d: usize) -> Vec<AttributeDomain> {
        vec![AttributeDomain::binary(); d]
    }

    #[test]
    fn plurality_update_takes_majority() {
        // 6 of 10 rows have a one
        let rows: Vec<Vec<u16>> = (0..10).map(|i| vec![u16::from(i < 6)]).collect();
        let mut rng = Stream::from_key(5);
        for _ in 0..100 {
            let c = update_center(rows.iter().map(Vec::as_slice), &binary_domains(1), RoundingSpec::Plurality, &mut rng)
                .unwrap();
            assert_eq!(c.values(), &[1]);
        }
    }

    #[test]
    fn uniform_update_samples_fraction() {
        let rows: Vec<Vec<u16>> = (0..10).map(|i| vec![u16::from(i < 3)]).collect();
        let mut rng = Stream::from_key(6);
        let ones = (0..10_000)
            .filter(|_| {
                update_center(rows.iter().map(Vec::as_slice), &binary_domains(1), RoundingSpec::Uniform, &mut rng)
                    .unwrap()
                    .values()[0]
                    == 1
            })
            .count();
        let f = ones as f64 / 10_000.0;
        assert!((f - 0.3).abs() <= 0.02, "{f}");
    }

    #[test]
    fn single_point_cluster_reproduces_point() {
        let domains = vec![AttributeDomain::new(4).unwrap(); 3];
        let row: [u16; 3] = [3, 0, 2];
        let mut rng = Stream::from_key(8);
        for spec in [
            RoundingSpec::Plurality,
            RoundingSpec::Uniform,
            RoundingSpec::Soft { t: 1.7 },
        ] {
            for _ in 0..50 {
                let c = update_center([&row[..]], &domains, spec, &mut rng).unwrap();
                assert_eq!(c.values(), &row);
            }
        }
    }

    #[test]
    fn empty_cluster_is_an_error() {
        let mut rng = Stream::from_key(1);
        let rows: [&[u16]; 0] = [];
        assert!(update_center(rows, &binary_domains(2), RoundingSpec::Uniform, &mut rng).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ClusteringConfig::new(0).validate(5).is_err());
        assert!(ClusteringConfig::new(6).validate(5).is_err());
        assert!(ClusteringConfig::new(2).max_iter(0).validate(5).is_err());
        assert!(ClusteringConfig::new(2)
            .rounding(RoundingSpec::Soft { t: 0.9 })
            .validate(5)
            .is_err());
        assert!(ClusteringConfig::new(5).validate(5).is_ok());
        assert!(Parallelism::threads(0).is_err());
    }
}
