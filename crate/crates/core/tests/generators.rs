use statrs::distribution::{ChiSquared, ContinuousCDF};

use softmodes::generators::{even_split, generate_ccm_with_centers};
use softmodes::{generate_bbm, hamming, BbmSpec, CcmSpec};

#[test]
fn bbm_block_frequencies_match_the_matrix() {
    let (n, d, p, q) = (2000, 2000, 0.3, 0.1);
    let ds = generate_bbm(&BbmSpec::symmetric(n, d, 2, p, q, 17)).unwrap();
    let labels = ds.labels().unwrap();
    // column blocks are contiguous; row blocks are given by the labels
    let col_block = |j: usize| usize::from(j >= d / 2);
    let mut ones = [[0u64; 2]; 2];
    let mut cells = [[0u64; 2]; 2];
    for (i, row) in ds.rows().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let (a, b) = (labels[i], col_block(j));
            cells[a][b] += 1;
            ones[a][b] += u64::from(v);
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            let prob = if a == b { p } else { q };
            assert_eq!(cells[a][b], 1_000_000);
            let freq = ones[a][b] as f64 / cells[a][b] as f64;
            let tol = 3.0 * (prob * (1.0 - prob) / 1e6).sqrt();
            assert!((freq - prob).abs() <= tol, "block ({a},{b}): {freq} vs {prob}");
        }
    }
}

#[test]
fn bbm_constant_matrix_has_homogeneous_columns() {
    // with every entry 0.5 each column is Binomial(n, 0.5); test the
    // column totals together with a chi-square statistic
    let (n, d) = (400, 300);
    let ds = generate_bbm(&BbmSpec::with_matrix(n, d, vec![vec![0.5; 3]; 3], 5)).unwrap();
    let mut totals = vec![0u64; d];
    for row in ds.rows() {
        for (t, &v) in totals.iter_mut().zip(row) {
            *t += u64::from(v);
        }
    }
    let expected = n as f64 / 2.0;
    let stat: f64 = totals
        .iter()
        .map(|&t| {
            let (ones, zeros) = (t as f64, n as f64 - t as f64);
            (ones - expected).powi(2) / expected + (zeros - expected).powi(2) / expected
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new(d as f64).unwrap().cdf(stat);
    assert!(p_value > 0.001, "chi-square {stat}, p = {p_value}");
}

#[test]
fn generated_rows_are_shuffled() {
    for ds in [
        generate_bbm(&BbmSpec::symmetric(3000, 8, 3, 0.5, 0.1, 2)).unwrap(),
        softmodes::generate_ccm(&CcmSpec::new(3000, 8, 3, 0.1, 0.2, 2)).unwrap(),
    ] {
        let labels = ds.labels().unwrap();
        // consecutive labels agree about 1/3 of the time when shuffled
        let same = labels.windows(2).filter(|w| w[0] == w[1]).count() as f64 / (labels.len() - 1) as f64;
        assert!((same - 1.0 / 3.0).abs() < 0.04, "{same}");
    }
}

#[test]
fn ccm_points_stay_near_their_codewords() {
    let spec = CcmSpec::new(600, 1000, 3, 0.05, 0.0, 9);
    let (ds, centers) = generate_ccm_with_centers(&spec).unwrap();
    let labels = ds.labels().unwrap();
    let sizes: Vec<usize> = (0..3).map(|c| labels.iter().filter(|&&l| l == c).count()).collect();
    assert_eq!(sizes, even_split(600, 3));
    for (i, row) in ds.rows().enumerate() {
        let own = hamming(row, centers[labels[i]].values()).unwrap();
        // mean 50, sd about 6.9
        assert!(own < 100, "point {i} at {own}");
        for (c, center) in centers.iter().enumerate() {
            if c != labels[i] {
                assert!(hamming(row, center.values()).unwrap() > 350);
            }
        }
    }
}

#[test]
fn generators_are_reproducible() {
    let a = generate_bbm(&BbmSpec::symmetric(100, 50, 2, 0.4, 0.2, 77)).unwrap();
    let b = generate_bbm(&BbmSpec::symmetric(100, 50, 2, 0.4, 0.2, 77)).unwrap();
    let c = generate_bbm(&BbmSpec::symmetric(100, 50, 2, 0.4, 0.2, 78)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
