//! Rounding functions on the probability simplex.
//!
//! A rounding function maps a simplex point to another simplex point while
//! preserving the order of coordinates. Three families are provided:
//!
//! * [`RoundingSpec::Plurality`] puts equal mass on the maximal coordinates.
//! * [`RoundingSpec::Uniform`] is the identity.
//! * [`RoundingSpec::Soft`] raises coordinates to the power `t` and
//!   renormalises. `t = 1` is the identity and `t -> inf` tends to plurality.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the coordinate sum of a [`SimplexPoint`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Scaled weights below this are flushed to zero before normalisation.
const FLUSH_THRESHOLD: f64 = 1e-300;

/// A probability vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexPoint {
    weights: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("simplex point needs at least one coordinate"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::domain(format!("invalid simplex weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::domain(format!("simplex weights sum to {sum}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Empirical frequencies of `counts`. At least one count must be non-zero.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::domain("frequency vector of an empty sample"));
        }
        let total = total as f64;
        Ok(Self {
            weights: counts.iter().map(|&c| c as f64 / total).collect(),
        })
    }

    /// The barycentre `(1/s, ..., 1/s)`.
    pub fn center(len: usize) -> Self {
        assert!(len > 0);
        Self {
            weights: vec![1.0 / len as f64; len],
        }
    }

    /// The point mass on coordinate `i`.
    pub fn vertex(len: usize, i: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[i] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}

/// Member of the rounding family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RoundingSpec {
    Plurality,
    Uniform,
    Soft { t: f64 },
}

impl RoundingSpec {
    pub fn soft(t: f64) -> Result<Self> {
        let spec = RoundingSpec::Soft { t };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RoundingSpec::Soft { t } if !t.is_finite() || t < 1.0 => Err(Error::domain(format!(
                "soft rounding exponent must be finite and >= 1, got {t}"
            ))),
            _ => Ok(()),
        }
    }

    /// Short display name, e.g. `soft(3)`.
    pub fn label(&self) -> String {
        match self {
            RoundingSpec::Plurality => "plurality".into(),
            RoundingSpec::Uniform => "uniform".into(),
            RoundingSpec::Soft { t } => format!("soft({t})"),
        }
    }

    /// Applies the rounding to raw weights without validating them.
    /// `x` must be a probability vector and `out` must have the same length.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), out.len());
        match *self {
            RoundingSpec::Uniform => out.copy_from_slice(x),
            RoundingSpec::Soft { t: 1.0 } => out.copy_from_slice(x),
            RoundingSpec::Plurality => {
                let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let ties = x.iter().filter(|&&v| v == max).count();
                let share = 1.0 / ties as f64;
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = if v == max { share } else { 0.0 };
                }
            }
            RoundingSpec::Soft { t } => {
                // (x_i / x_max)^t keeps the largest term at exactly 1, so the
                // sum never underflows however large t is.
                let max = x.iter().copied().fold(0.0, f64::max);
                let mut sum = 0.0;
                for (o, &v) in out.iter_mut().zip(x) {
                    let s = (v / max).powf(t);
                    *o = if s < FLUSH_THRESHOLD { 0.0 } else { s };
                    sum += *o;
                }
                for o in out.iter_mut() {
                    *o /= sum;
                }
            }
        }
    }
}

/// Applies `spec` to a simplex point.
pub fn round(x: &SimplexPoint, spec: RoundingSpec) -> Result<SimplexPoint> {
    spec.validate()?;
    let mut out = vec![0.0; x.len()];
    spec.apply(&x.weights, &mut out);
    Ok(SimplexPoint { weights: out })
}

/// Inverse-CDF draw from a weight vector that sums to (approximately) one.
/// Zero-weight indices are never returned.
pub fn sample_weights<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Draws category `i` with probability `x_i`.
pub fn sample_category<R: Rng + ?Sized>(x: &SimplexPoint, rng: &mut R) -> usize {
    sample_weights(&x.weights, rng)
}

/// One arrow of a rounding vector field on the 2-simplex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub point: [f64; 3],
    pub displacement: [f64; 3],
}

/// Barycentric grid `(i, j, r - i - j) / r` over the 2-simplex with each
/// point's displacement under `spec`.
pub fn field_grid(spec: RoundingSpec, resolution: usize) -> Result<Vec<FieldSample>> {
    spec.validate()?;
    if resolution < 2 {
        return Err(Error::config("field resolution must be at least 2"));
    }
    let r = resolution as f64;
    let mut samples = Vec::with_capacity((resolution + 1) * (resolution + 2) / 2);
    let mut out = [0.0; 3];
    for i in 0..=resolution {
        for j in 0..=resolution - i {
            let k = resolution - i - j;
            let point = [i as f64 / r, j as f64 / r, k as f64 / r];
            spec.apply(&point, &mut out);
            samples.push(FieldSample {
                point,
                displacement: [out[0] - point[0], out[1] - point[1], out[2] - point[2]],
            });
        }
    }
    Ok(samples)
}

/// Writes a field as CSV with columns `x1,x2,x3,dx1,dx2,dx3`.
pub fn write_field_csv<W: Write>(samples: &[FieldSample], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x1", "x2", "x3", "dx1", "dx2", "dx3"])?;
    for s in samples {
        let cells = s.point.iter().chain(&s.displacement).map(|v| v.to_string());
        w.write_record(cells)?;
    }
    w.flush().map_err(|e| Error::io("<field writer>", e))?;
    Ok(())
}
