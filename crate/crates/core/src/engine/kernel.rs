//! Hamming distance kernels and the nearest-center assignment pass.
//!
//! Binary datasets are bit-packed into `u64` words so a distance is a few
//! XOR + popcount operations; everything else compares `u16` category
//! slices directly.

use rand::Rng;
use rayon::prelude::*;

use crate::dataset::{CategoricalDataset, Category};
use crate::rng::{purpose, Streams};

/// Points below this count are processed without splitting work further.
const MIN_PAR_LEN: usize = 512;

#[inline]
pub(crate) fn hamming_slices(a: &[Category], b: &[Category]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| u32::from(x != y)).sum()
}

#[inline]
fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

fn pack_row(row: &[Category], out: &mut [u64]) {
    out.fill(0);
    for (j, &v) in row.iter().enumerate() {
        if v != 0 {
            out[j / 64] |= 1u64 << (j % 64);
        }
    }
}

/// A dataset prepared for repeated distance queries.
pub(crate) struct PointSet<'a> {
    ds: &'a CategoricalDataset,
    /// Bit-packed rows, present for binary datasets.
    packed: Option<Vec<u64>>,
    words: usize,
}

/// Centers in the layout matching a [`PointSet`].
pub(crate) struct CenterBlock {
    k: usize,
    stride: usize,
    data: CenterData,
}

enum CenterData {
    Packed(Vec<u64>),
    Plain(Vec<Category>),
}

impl<'a> PointSet<'a> {
    pub(crate) fn new(ds: &'a CategoricalDataset) -> Self {
        let d = ds.d();
        if !ds.is_binary() {
            return Self { ds, packed: None, words: 0 };
        }
        let words = d.div_ceil(64);
        let mut packed = vec![0u64; ds.n() * words];
        packed
            .par_chunks_mut(words)
            .zip(ds.values().par_chunks(d))
            .for_each(|(out, row)| pack_row(row, out));
        Self {
            ds,
            packed: Some(packed),
            words,
        }
    }

    pub(crate) fn dataset(&self) -> &'a CategoricalDataset {
        self.ds
    }

    /// Lays out `k` flattened centers (`k * d` values) for this point set.
    pub(crate) fn centers(&self, flat: &[Category]) -> CenterBlock {
        let d = self.ds.d();
        let k = flat.len() / d;
        match self.packed {
            Some(_) => {
                let mut data = vec![0u64; k * self.words];
                for (out, row) in data.chunks_mut(self.words).zip(flat.chunks(d)) {
                    pack_row(row, out);
                }
                CenterBlock {
                    k,
                    stride: self.words,
                    data: CenterData::Packed(data),
                }
            }
            None => CenterBlock {
                k,
                stride: d,
                data: CenterData::Plain(flat.to_vec()),
            },
        }
    }

    #[inline]
    pub(crate) fn distance(&self, i: usize, centers: &CenterBlock, c: usize) -> u32 {
        let s = centers.stride;
        match (&self.packed, &centers.data) {
            (Some(p), CenterData::Packed(cd)) => {
                hamming_words(&p[i * self.words..(i + 1) * self.words], &cd[c * s..(c + 1) * s])
            }
            (None, CenterData::Plain(cd)) => hamming_slices(self.ds.row(i), &cd[c * s..(c + 1) * s]),
            _ => unreachable!("center block built for a different point set"),
        }
    }

    /// Assigns every point to a nearest center, breaking ties uniformly at
    /// random with the `(TIE_BREAK, iteration, point)` stream. Returns the
    /// assignment and the summed distance.
    pub(crate) fn assign(
        &self,
        centers: &CenterBlock,
        streams: &Streams,
        iteration: u64,
    ) -> (Vec<usize>, u64) {
        let k = centers.k;
        let picks: Vec<(usize, u32)> = (0..self.ds.n())
            .into_par_iter()
            .with_min_len(MIN_PAR_LEN)
            .map_init(
                || Vec::with_capacity(k),
                |ties, i| {
                    ties.clear();
                    let mut best = u32::MAX;
                    for c in 0..k {
                        let dist = self.distance(i, centers, c);
                        if dist < best {
                            best = dist;
                            ties.clear();
                            ties.push(c);
                        } else if dist == best {
                            ties.push(c);
                        }
                    }
                    let chosen = if ties.len() == 1 {
                        ties[0]
                    } else {
                        let mut rng = streams.stream(&[purpose::TIE_BREAK, iteration, i as u64]);
                        ties[rng.random_range(0..ties.len())]
                    };
                    (chosen, best)
                },
            )
            .collect();
        let objective = picks.iter().map(|&(_, d)| u64::from(d)).sum();
        (picks.into_iter().map(|(c, _)| c).collect(), objective)
    }

    /// Per-cluster sizes and per-(cluster, category) counts laid out as
    /// `counts[c * width + offsets[j] + v]`.
    pub(crate) fn category_counts(
        &self,
        assignment: &[usize],
        k: usize,
        offsets: &[usize],
    ) -> (Vec<usize>, Vec<u32>) {
        let d = self.ds.d();
        let width = offsets[d];
        let chunk = 1024;
        let zero = || (vec![0usize; k], vec![0u32; k * width]);
        self.ds
            .values()
            .par_chunks(chunk * d)
            .zip(assignment.par_chunks(chunk))
            .fold(zero, |(mut sizes, mut counts), (rows, labels)| {
                for (row, &c) in rows.chunks_exact(d).zip(labels) {
                    sizes[c] += 1;
                    let base = &mut counts[c * width..(c + 1) * width];
                    for (j, &v) in row.iter().enumerate() {
                        base[offsets[j] + v as usize] += 1;
                    }
                }
                (sizes, counts)
            })
            .reduce(zero, |(mut s1, mut c1), (s2, c2)| {
                s1.iter_mut().zip(s2).for_each(|(a, b)| *a += b);
                c1.iter_mut().zip(c2).for_each(|(a, b)| *a += b);
                (s1, c1)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn random_dataset(n: usize, d: usize, arity: usize, key: u64) -> CategoricalDataset {
        let mut rng = Stream::from_key(key);
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(0..arity)).collect())
            .collect();
        let ds = CategoricalDataset::from_rows(&rows).unwrap();
        let arities = vec![arity; d];
        ds.with_declared_arities(&arities).unwrap()
    }

    #[test]
    fn packed_and_plain_distances_agree() {
        for d in [1, 63, 64, 65, 130] {
            let ds = random_dataset(40, d, 2, d as u64);
            let ps = PointSet::new(&ds);
            assert!(ps.packed.is_some());
            let flat: Vec<Category> = (0..3).flat_map(|i| ds.row(i * 7).to_vec()).collect();
            let block = ps.centers(&flat);
            for i in 0..ds.n() {
                for c in 0..3 {
                    let direct = hamming_slices(ds.row(i), &flat[c * d..(c + 1) * d]);
                    assert_eq!(ps.distance(i, &block, c), direct);
                }
            }
        }
    }

    #[test]
    fn counts_match_direct_tally() {
        let ds = random_dataset(3000, 5, 4, 9);
        let assignment: Vec<usize> = (0..ds.n()).map(|i| (i * 7 + i / 3) % 3).collect();
        let offsets = ds.category_offsets();
        let (sizes, counts) = PointSet::new(&ds).category_counts(&assignment, 3, &offsets);
        let width = offsets[5];
        let mut expect_sizes = vec![0; 3];
        let mut expect = vec![0u32; 3 * width];
        for (i, &c) in assignment.iter().enumerate() {
            expect_sizes[c] += 1;
            for (j, &v) in ds.row(i).iter().enumerate() {
                expect[c * width + offsets[j] + v as usize] += 1;
            }
        }
        assert_eq!(sizes, expect_sizes);
        assert_eq!(counts, expect);
    }
}
