//! Mutual information between the channels of a low-dimensional dataset.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use super::knn::KdTree;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const MIN_MI_SAMPLES: usize = 1000;
pub const MAX_MI_DIM: usize = 3;

/// `Knn` is the Kraskov–Stögbauer–Grassberger estimator (first variant,
/// max norm); `Histogram` is the plug-in estimate on an equal-width grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MiMethod {
    Knn { k: usize },
    Histogram { bins: Option<usize> },
}

impl Default for MiMethod {
    fn default() -> Self {
        MiMethod::Knn { k: 5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiMethodKind {
    KnnKl,
    Histogram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    /// Estimate clamped below at zero.
    pub value: f64,
    /// Estimate before clamping.
    pub raw: f64,
    pub method: MiMethodKind,
    pub dimension: usize,
    /// Set when `raw > 0.9 ln(⌈T^{1/3}⌉)`, i.e. the channels are nearly
    /// functions of one another.
    pub near_deterministic: bool,
}

/// Total correlation `KLD(P_Y ‖ ∏ P_{Y_i})` for `N ∈ {2, 3}` channels.
pub fn mutual_information(data: &Dataset, method: MiMethod) -> Result<MiEstimate> {
    let n = data.n_channels();
    if n > MAX_MI_DIM {
        return Err(Error::DimensionTooHigh(n));
    }
    if n < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: n });
    }
    let t = data.n_samples();
    if t < MIN_MI_SAMPLES {
        return Err(Error::TooFewSamples {
            got: t,
            need: MIN_MI_SAMPLES,
        });
    }
    let (raw, kind) = match method {
        MiMethod::Knn { k } => {
            if k == 0 || k >= t {
                return Err(Error::InvalidConfig(format!("k={k} out of range")));
            }
            let raw = if n == 2 { ksg::<2>(data, k) } else { ksg::<3>(data, k) };
            (raw, MiMethodKind::KnnKl)
        }
        MiMethod::Histogram { bins } => {
            let bins = bins.unwrap_or_else(|| default_mi_bins(t));
            if bins < 2 {
                return Err(Error::InvalidConfig(format!("bin count must be >= 2, got {bins}")));
            }
            (histogram_mi(data, bins)?, MiMethodKind::Histogram)
        }
    };
    let threshold = 0.9 * (default_mi_bins(t) as f64).ln();
    Ok(MiEstimate {
        value: raw.max(0.0),
        raw,
        method: kind,
        dimension: n,
        near_deterministic: raw > threshold,
    })
}

pub fn default_mi_bins(t: usize) -> usize {
    ((t as f64).cbrt().ceil() as usize).max(2)
}

fn ksg<const D: usize>(data: &Dataset, k: usize) -> f64 {
    let t = data.n_samples();
    let points: Vec<[f64; D]> = (0..t)
        .map(|i| std::array::from_fn(|a| data.samples()[(i, a)]))
        .collect();
    let tree = KdTree::new(&points);
    let sorted: Vec<Vec<f64>> = (0..D)
        .map(|a| {
            let mut c = data.channel(a).to_vec();
            c.sort_by(f64::total_cmp);
            c
        })
        .collect();
    let mut acc = 0.0;
    for i in 0..t {
        let eps = tree.kth_distance(i, k);
        for a in 0..D {
            let x = points[i][a];
            let col = &sorted[a];
            // points strictly within eps, excluding the query itself
            let hi = col.partition_point(|&v| v < x + eps);
            let lo = col.partition_point(|&v| v <= x - eps);
            let count = hi.saturating_sub(lo).saturating_sub(1);
            acc += digamma(count as f64 + 1.0);
        }
    }
    digamma(k as f64) + (D as f64 - 1.0) * digamma(t as f64) - acc / t as f64
}

fn histogram_mi(data: &Dataset, bins: usize) -> Result<f64> {
    let t = data.n_samples();
    let n = data.n_channels();
    let mut cell = vec![0usize; t];
    let mut marginals = Vec::with_capacity(n);
    let mut stride = 1usize;
    for a in 0..n {
        let col = data.channel(a);
        let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        if hi <= lo {
            return Err(Error::DegenerateSample);
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for (i, &v) in col.iter().enumerate() {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
            cell[i] += b * stride;
        }
        marginals.push(counts);
        stride *= bins;
    }
    let mut joint = vec![0usize; stride];
    for &c in &cell {
        joint[c] += 1;
    }
    let tf = t as f64;
    let mut mi = 0.0;
    for (idx, &c) in joint.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let p = c as f64 / tf;
        let mut rem = idx;
        let mut prod = 1.0;
        for m in &marginals {
            prod *= m[rem % bins] as f64 / tf;
            rem /= bins;
        }
        mi += p * (p / prod).ln();
    }
    Ok(mi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::source::SourceSpec;

    fn pair(a: SourceSpec, b: SourceSpec, t: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut r = Rng::new(seed);
        let x = (0..t).map(|_| a.sample(&mut r)).collect();
        let y = (0..t).map(|_| b.sample(&mut r)).collect();
        (x, y)
    }

    fn correlated_gaussian(rho: f64, t: usize, seed: u64) -> Dataset {
        let (z1, z2) = pair(SourceSpec::Gaussian, SourceSpec::Gaussian, t, seed);
        let y: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| rho * a + (1.0 - rho * rho).sqrt() * b).collect();
        Dataset::from_columns(&[z1, y]).unwrap()
    }

    #[test]
    fn independent_pair_is_zero() {
        let (u, l) = pair(SourceSpec::Uniform, SourceSpec::Laplace, 100_000, 1);
        let d = Dataset::from_columns(&[u, l]).unwrap();
        let mi = mutual_information(&d, MiMethod::default()).unwrap();
        assert!(mi.value < 0.02, "{mi:?}");
        assert!(!mi.near_deterministic);
    }

    #[test]
    fn gaussian_pair_matches_closed_form() {
        let d = correlated_gaussian(0.5, 100_000, 2);
        let exact = -0.5 * 0.75_f64.ln();
        let knn = mutual_information(&d, MiMethod::default()).unwrap();
        assert!((knn.value - exact).abs() < 0.02, "{knn:?}");
        let hist = mutual_information(&d, MiMethod::Histogram { bins: None }).unwrap();
        assert!((hist.value - exact).abs() < 0.05, "{hist:?}");
    }

    #[test]
    fn duplicated_channel_is_flagged() {
        let (s, _) = pair(SourceSpec::Laplace, SourceSpec::Gaussian, 100_000, 3);
        let d = Dataset::from_columns(&[s.clone(), s]).unwrap();
        let mi = mutual_information(&d, MiMethod::default()).unwrap();
        assert!(mi.near_deterministic, "{mi:?}");
        assert!(mi.value > 5.0);
        let h = mutual_information(&d, MiMethod::Histogram { bins: None }).unwrap();
        assert!(h.value > 2.0, "{h:?}");
    }

    #[test]
    fn trivariate_gaussian() {
        // independent third channel adds nothing
        let d2 = correlated_gaussian(0.5, 20_000, 4);
        let (w, _) = pair(SourceSpec::Gaussian, SourceSpec::Gaussian, 20_000, 5);
        let d3 = Dataset::from_columns(&[d2.channel(0).to_vec(), d2.channel(1).to_vec(), w]).unwrap();
        let mi = mutual_information(&d3, MiMethod::default()).unwrap();
        assert!((mi.value - 0.1438).abs() < 0.03, "{mi:?}");
    }

    #[test]
    fn monotone_channel_maps() {
        let d = correlated_gaussian(0.5, 100_000, 6);
        let base = mutual_information(&d, MiMethod::default()).unwrap().value;
        for f in [|v: f64| 2.0 * v, |v: f64| v * v * v] {
            let x: Vec<f64> = d.channel(0).iter().map(|&v| f(v)).collect();
            let m = Dataset::from_columns(&[x, d.channel(1).to_vec()]).unwrap();
            let mi = mutual_information(&m, MiMethod::default()).unwrap().value;
            assert!((mi - base).abs() < 0.03, "{mi} vs {base}");
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let cols: Vec<Vec<f64>> = (0..4).map(|j| (0..2000).map(|i| ((i * (j + 3)) % 17) as f64).collect()).collect();
        let d = Dataset::from_columns(&cols).unwrap();
        assert!(matches!(mutual_information(&d, MiMethod::default()), Err(Error::DimensionTooHigh(4))));
        let small = Dataset::from_columns(&cols[..2].iter().map(|c| c[..500].to_vec()).collect::<Vec<_>>()).unwrap();
        assert!(matches!(
            mutual_information(&small, MiMethod::default()),
            Err(Error::TooFewSamples { .. })
        ));
    }
}
