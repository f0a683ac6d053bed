//! Mode degree histograms and log-log power-law fits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::CooTensor;

/// Frequency of each degree on one mode, where the degree of an index value
/// is the number of nonzeros carrying it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    pub mode: usize,
    pub counts: BTreeMap<u64, u64>,
}

impl DegreeHistogram {
    /// Sum of degree times frequency.
    pub fn nnz(&self) -> u64 {
        self.counts.iter().map(|(d, f)| d * f).sum()
    }

    /// Number of index values with nonzero degree.
    pub fn support(&self) -> u64 {
        self.counts.values().sum()
    }
}

pub fn mode_degree_histogram<V: Scalar>(t: &CooTensor<V>, mode: usize) -> DegreeHistogram {
    let mut idx = t.inds(mode).to_vec();
    idx.sort_unstable();
    let mut counts = BTreeMap::new();
    let mut start = 0;
    while start < idx.len() {
        let end = start + idx[start..].partition_point(|&i| i == idx[start]);
        *counts.entry((end - start) as u64).or_insert(0) += 1;
        start = end;
    }
    DegreeHistogram { mode, counts }
}

/// Least-squares line through `(ln degree, ln frequency)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl PowerLawFit {
    /// Negative slope with `r2 >= 0.8`.
    pub fn is_power_law(&self) -> bool {
        self.slope < 0.0 && self.r2 >= 0.8
    }
}

fn least_squares(points: &[(f64, f64)]) -> PowerLawFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        0.0
    } else {
        let ss_res: f64 = points
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        1.0 - ss_res / syy
    };
    PowerLawFit {
        slope,
        intercept,
        r2,
    }
}

/// Fits every distinct degree as one point.
pub fn powerlaw_fit(h: &DegreeHistogram) -> Result<PowerLawFit> {
    if h.counts.len() < 3 {
        return Err(Error::DegenerateHistogram(format!(
            "{} distinct degrees, need at least 3",
            h.counts.len()
        )));
    }
    let points: Vec<(f64, f64)> = h
        .counts
        .iter()
        .map(|(&d, &f)| ((d as f64).ln(), (f as f64).ln()))
        .collect();
    Ok(least_squares(&points))
}

/// Fits frequency densities over logarithmic degree bins `[2^k, 2^(k+1))`.
///
/// Sampled histograms have a long tail of degrees seen once each, which
/// flattens the raw fit; binning averages that tail out.
pub fn powerlaw_fit_binned(h: &DegreeHistogram) -> Result<PowerLawFit> {
    let mut bins: BTreeMap<u32, u64> = BTreeMap::new();
    for (&d, &f) in &h.counts {
        if d > 0 {
            *bins.entry(63 - d.leading_zeros()).or_insert(0) += f;
        }
    }
    if bins.len() < 3 {
        return Err(Error::DegenerateHistogram(format!(
            "{} occupied logarithmic bins, need at least 3",
            bins.len()
        )));
    }
    let points: Vec<(f64, f64)> = bins
        .iter()
        .map(|(&k, &f)| {
            let lo = (1u64 << k) as f64;
            let width = lo;
            let center = (lo * (2.0 * lo - 1.0)).sqrt();
            (center.ln(), (f as f64 / width).ln())
        })
        .collect();
    Ok(least_squares(&points))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(pairs: &[(u64, u64)]) -> DegreeHistogram {
        DegreeHistogram {
            mode: 0,
            counts: pairs.iter().copied().collect(),
        }
    }

    #[test]
    fn singleton() {
        let t = CooTensor::from_entries(vec![2, 2, 2], [(vec![0, 0, 0], 1.0f32)]).unwrap();
        assert_eq!(mode_degree_histogram(&t, 0), hist(&[(1, 1)]));
    }

    #[test]
    fn shared_index() {
        let t = CooTensor::from_entries(
            vec![2, 2, 2],
            [(vec![0, 0, 0], 1.0f32), (vec![0, 1, 1], 1.0)],
        )
        .unwrap();
        assert_eq!(mode_degree_histogram(&t, 0), hist(&[(2, 1)]));
        assert_eq!(mode_degree_histogram(&t, 1).counts, hist(&[(1, 2)]).counts);
    }

    #[test]
    fn exact_power_law_recovered() {
        let counts: Vec<(u64, u64)> = [1u64, 2, 4, 10, 20, 50, 100]
            .iter()
            .map(|&d| (d, (1e6 * (d as f64).powf(-1.5)).round() as u64))
            .collect();
        let fit = powerlaw_fit(&hist(&counts)).unwrap();
        assert!((fit.slope + 1.5).abs() < 0.01, "{fit:?}");
        assert!(fit.r2 > 0.999);
        assert!(fit.is_power_law());
    }

    #[test]
    fn uniform_degrees_flagged() {
        let fit = powerlaw_fit(&hist(&[(1, 10), (2, 10), (3, 10), (4, 10)])).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!(!fit.is_power_law());
    }

    #[test]
    fn single_degree_rejected() {
        assert!(matches!(
            powerlaw_fit(&hist(&[(3, 7)])),
            Err(Error::DegenerateHistogram(_))
        ));
        assert!(powerlaw_fit_binned(&hist(&[(1, 7), (2, 3)])).is_err());
    }

    #[test]
    fn binned_fit_of_exact_law() {
        let counts: Vec<(u64, u64)> = (1..4096u64)
            .map(|d| (d, (1e9 * (d as f64).powf(-2.0)).round() as u64))
            .filter(|&(_, f)| f > 0)
            .collect();
        let fit = powerlaw_fit_binned(&hist(&counts)).unwrap();
        assert!((fit.slope + 2.0).abs() < 0.1, "{fit:?}");
        assert!(fit.is_power_law());
    }
}
