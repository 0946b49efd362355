use rand::Rng;
use rayon::prelude::*;

use super::kernel::PointSet;
use super::{sample_attribute, Center, ClusteringConfig, ClusteringResult, TraceRecord};
use crate::dataset::{CategoricalDataset, Category};
use crate::error::{Error, Result};
use crate::evaluation::accuracy;
use crate::rng::{purpose, Streams};
use crate::seeding::seed_indices;

/// Output of one assignment pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub assignment: Vec<usize>,
    /// Summed distance of every point to its assigned center.
    pub objective: u64,
}

/// An in-progress SoftModes run that can be driven one step at a time.
///
/// Each round is an [`assign_step`](Self::assign_step) followed by an
/// [`update_step`](Self::update_step). Randomness is drawn from streams
/// addressed by `(purpose, round, index)`, so the steps give the same result
/// on any rayon pool.
pub struct SoftModes<'a> {
    points: PointSet<'a>,
    config: ClusteringConfig,
    streams: Streams,
    offsets: Vec<usize>,
    /// `k * d` center values, row-major.
    centers: Vec<Category>,
    round: u64,
}

impl<'a> SoftModes<'a> {
    /// Seeds `config.k` centers with `config.seeding`.
    pub fn new(ds: &'a CategoricalDataset, config: &ClusteringConfig) -> Result<Self> {
        config.validate(ds.n())?;
        let streams = Streams::new(config.seed);
        let mut rng = streams.stream(&[purpose::SEEDING]);
        let picks = seed_indices(ds, config.k, config.seeding, &mut rng)?;
        let centers = picks.iter().flat_map(|&i| ds.row(i).iter().copied()).collect();
        Ok(Self::from_parts(ds, config, streams, centers))
    }

    /// Starts from explicit centers instead of seeding.
    pub fn with_centers(ds: &'a CategoricalDataset, config: &ClusteringConfig, centers: &[Center]) -> Result<Self> {
        config.validate(ds.n())?;
        if centers.len() != config.k {
            return Err(Error::config(format!("{} centers given for k = {}", centers.len(), config.k)));
        }
        let mut flat = Vec::with_capacity(config.k * ds.d());
        for c in centers {
            flat.extend_from_slice(Center::new(c.values().to_vec(), ds.domains())?.values());
        }
        Ok(Self::from_parts(ds, config, Streams::new(config.seed), flat))
    }

    fn from_parts(ds: &'a CategoricalDataset, config: &ClusteringConfig, streams: Streams, centers: Vec<Category>) -> Self {
        Self {
            points: PointSet::new(ds),
            config: config.clone(),
            streams,
            offsets: ds.category_offsets(),
            centers,
            round: 0,
        }
    }

    pub fn centers(&self) -> Vec<Center> {
        self.centers
            .chunks(self.points.dataset().d())
            .map(Center::from_row)
            .collect()
    }

    /// Number of assignment passes performed so far.
    pub fn round(&self) -> usize {
        self.round as usize
    }

    /// Assigns every point to a nearest current center (random tie-breaks).
    pub fn assign_step(&mut self) -> StepOutcome {
        self.round += 1;
        let block = self.points.centers(&self.centers);
        let (assignment, objective) = self.points.assign(&block, &self.streams, self.round);
        StepOutcome { assignment, objective }
    }

    /// Recomputes every center from `assignment`: per attribute, round the
    /// cluster's frequency vector and sample. A cluster with no points gets
    /// a uniformly random data row instead.
    pub fn update_step(&mut self, assignment: &[usize]) {
        let ds = self.points.dataset();
        let (k, d, n) = (self.config.k, ds.d(), ds.n());
        let round = self.round;
        let rounding = self.config.rounding;
        let offsets = &self.offsets;
        let width = offsets[d];
        let (sizes, counts) = self.points.category_counts(assignment, k, offsets);
        let streams = &self.streams;

        let mut next: Vec<Category> = (0..k * d)
            .into_par_iter()
            .with_min_len(64)
            .map_init(
                || (Vec::new(), Vec::new()),
                |scratch, idx| {
                    let (c, j) = (idx / d, idx % d);
                    if sizes[c] == 0 {
                        return 0;
                    }
                    let base = c * width;
                    let slice = &counts[base + offsets[j]..base + offsets[j + 1]];
                    let mut rng = streams.stream(&[purpose::CENTER_SAMPLE, round, c as u64, j as u64]);
                    sample_attribute(slice, sizes[c], rounding, scratch, &mut rng)
                },
            )
            .collect();

        for c in (0..k).filter(|&c| sizes[c] == 0) {
            let row = streams
                .stream(&[purpose::RESEED, round, c as u64])
                .random_range(0..n);
            next[c * d..(c + 1) * d].copy_from_slice(ds.row(row));
        }
        self.centers = next;
    }
}

/// Nearest-center assignment with uniformly random tie-breaks drawn from the
/// `(tie-break, round, point)` streams of `streams`.
pub fn assign(ds: &CategoricalDataset, centers: &[Center], streams: &Streams, round: u64) -> Result<Vec<usize>> {
    if centers.is_empty() {
        return Err(Error::config("assignment needs at least one center"));
    }
    let mut flat = Vec::with_capacity(centers.len() * ds.d());
    for c in centers {
        if c.len() != ds.d() {
            return Err(Error::domain("center width differs from the dataset"));
        }
        flat.extend_from_slice(c.values());
    }
    let points = PointSet::new(ds);
    let block = points.centers(&flat);
    Ok(points.assign(&block, streams, round).0)
}

/// Runs SoftModes until the partition repeats or `max_iter` rounds pass.
/// With plurality rounding this is k-modes.
pub fn run_softmodes(ds: &CategoricalDataset, config: &ClusteringConfig) -> Result<ClusteringResult> {
    config.validate(ds.n())?;
    config.parallelism.install(|| {
        let mut session = SoftModes::new(ds, config)?;
        drive(&mut session, ds, config.max_iter)
    })?
}

fn drive(session: &mut SoftModes<'_>, ds: &CategoricalDataset, max_iter: usize) -> Result<ClusteringResult> {
    let labels = ds.labels();
    let mut trace = Vec::new();
    let mut previous: Option<Vec<usize>> = None;
    loop {
        let used_centers = session.centers();
        let step = session.assign_step();
        trace.push(TraceRecord {
            iteration: session.round(),
            objective: step.objective as f64,
            accuracy: labels.map(|l| accuracy(&step.assignment, l)).transpose()?,
        });
        let repeated = previous.as_ref() == Some(&step.assignment);
        if repeated || session.round() >= max_iter {
            return Ok(ClusteringResult {
                assignment: step.assignment,
                centers: used_centers,
                iterations: session.round(),
                converged: repeated,
                trace,
            });
        }
        session.update_step(&step.assignment);
        previous = Some(step.assignment);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::objective;
    use crate::rounding::RoundingSpec;

    fn blocks() -> CategoricalDataset {
        let protos = [vec![0, 0, 0, 0], vec![1, 1, 2, 0], vec![2, 0, 1, 1]];
        let rows: Vec<Vec<usize>> = (0..30).map(|i| protos[i % 3].clone()).collect();
        CategoricalDataset::from_rows(&rows)
            .unwrap()
            .with_labels((0..30).map(|i| i % 3).collect())
            .unwrap()
    }

    #[test]
    fn fixed_point_converges_in_two_rounds() {
        let ds = blocks();
        let seeds: Vec<Center> = (0..3).map(|i| Center::from_row(ds.row(i))).collect();
        for rounding in [RoundingSpec::Plurality, RoundingSpec::Uniform, RoundingSpec::Soft { t: 2.0 }] {
            let cfg = ClusteringConfig::new(3).rounding(rounding).seed(4);
            let mut s = SoftModes::with_centers(&ds, &cfg, &seeds).unwrap();
            let result = drive(&mut s, &ds, 100).unwrap();
            assert_eq!(result.iterations, 2);
            assert!(result.converged);
            assert_eq!(result.final_accuracy(), Some(1.0));
            assert_eq!(result.trace.len(), 2);
        }
    }

    #[test]
    fn point_at_center_goes_there() {
        let ds = blocks();
        let centers: Vec<Center> = [1usize, 2, 0].iter().map(|&i| Center::from_row(ds.row(i))).collect();
        let a = assign(&ds, &centers, &Streams::new(1), 1).unwrap();
        assert_eq!(a[0], 2);
        assert_eq!(a[1], 0);
        assert_eq!(a[2], 1);
    }

    #[test]
    fn single_center_takes_everything() {
        let ds = blocks();
        let a = assign(&ds, &[Center::from_row(ds.row(1))], &Streams::new(1), 1).unwrap();
        assert!(a.iter().all(|&c| c == 0));
    }

    #[test]
    fn ties_split_evenly() {
        // point (0,0) is at distance 1 from both (1,0) and (0,1)
        let ds = CategoricalDataset::from_rows(&[vec![0, 0]]).unwrap().with_declared_arities(&[2, 2]).unwrap();
        let centers = [Center::from_row(&[1, 0]), Center::from_row(&[0, 1])];
        let streams = Streams::new(2);
        let zeros = (0..10_000u64)
            .filter(|&r| assign(&ds, &centers, &streams, r).unwrap()[0] == 0)
            .count();
        let f = zeros as f64 / 10_000.0;
        assert!((f - 0.5).abs() <= 0.02, "{f}");
    }

    #[test]
    fn empty_cluster_is_reseeded_from_a_row() {
        let ds = blocks();
        let cfg = ClusteringConfig::new(3).seed(9);
        let seeds: Vec<Center> = (0..3).map(|i| Center::from_row(ds.row(i))).collect();
        let mut s = SoftModes::with_centers(&ds, &cfg, &seeds).unwrap();
        s.assign_step();
        // everything in cluster 0 leaves clusters 1 and 2 empty
        s.update_step(&vec![0; ds.n()]);
        let centers = s.centers();
        for c in &centers[1..] {
            assert!(ds.rows().any(|r| r == c.values()));
        }
    }

    #[test]
    fn final_objective_matches_returned_centers() {
        let ds = blocks();
        for seed in 0..10 {
            let cfg = ClusteringConfig::new(2).rounding(RoundingSpec::Soft { t: 1.5 }).seed(seed).max_iter(7);
            let r = run_softmodes(&ds, &cfg).unwrap();
            let obj = objective(&ds, &r.centers, &r.assignment).unwrap();
            assert_eq!(r.final_objective(), Some(obj as f64));
            assert!(r.iterations <= 7);
            assert_eq!(r.trace.len(), r.iterations);
            assert!(r.assignment.iter().all(|&c| c < 2));
        }
    }

    #[test]
    fn no_labels_no_accuracy() {
        let rows: Vec<Vec<usize>> = (0..10).map(|i| vec![i % 2, i % 3]).collect();
        let ds = CategoricalDataset::from_rows(&rows).unwrap();
        let r = run_softmodes(&ds, &ClusteringConfig::new(2).seed(1)).unwrap();
        assert!(r.trace.iter().all(|t| t.accuracy.is_none()));
    }
}
