//! Verification scores shared by the experiments.

use crate::error::{Error, Result};
use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalRecord {
    pub lower: f64,
    pub upper: f64,
    pub truth: f64,
}

impl IntervalRecord {
    pub fn new(lower: f64, upper: f64, truth: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::Domain(format!("interval [{lower}, {upper}] is reversed")));
        }
        Ok(Self { lower, upper, truth })
    }

    pub fn contains(&self) -> bool {
        self.lower <= self.truth && self.truth <= self.upper
    }
}

pub fn rmse(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.is_empty() || estimates.len() != truths.len() {
        return Err(Error::Domain(format!(
            "rmse needs equal non-empty inputs, got {} and {}",
            estimates.len(),
            truths.len()
        )));
    }
    let ss: f64 = estimates.iter().zip(truths).map(|(e, t)| (e - t) * (e - t)).sum();
    Ok((ss / estimates.len() as f64).sqrt())
}

/// Fraction of intervals containing their truth; `NaN` for no records.
pub fn coverage(intervals: &[IntervalRecord]) -> f64 {
    let hit = intervals.iter().filter(|r| r.contains()).count();
    hit as f64 / intervals.len() as f64
}

/// Ensemble CRPS, `mean|X_i - y| - 1/2 mean_{i,j}|X_i - X_j|`, with the pair
/// mean over all `N^2` ordered pairs. `O(N log N)` via sorting.
pub fn crps_ensemble(samples: &[f64], truth: f64) -> f64 {
    let n = samples.len() as f64;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let a: f64 = xs.iter().map(|x| (x - truth).abs()).sum::<f64>() / n;
    // sum_{i,j} |x_i - x_j| = 2 sum_i (2i - N + 1) x_(i)
    let pairs: f64 = xs
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * i as f64 - n + 1.0) * x)
        .sum::<f64>()
        * 2.0;
    (a - 0.5 * pairs / (n * n)).max(0.0)
}

/// Closed-form CRPS of `N(mean, sd^2)` at `truth`.
pub fn crps_gaussian(mean: f64, sd: f64, truth: f64) -> f64 {
    if sd <= 0.0 {
        return (mean - truth).abs();
    }
    let z = (truth - mean) / sd;
    let n = Normal::new(0.0, 1.0).unwrap();
    sd * (z * (2.0 * n.cdf(z) - 1.0) + 2.0 * n.pdf(z) - 1.0 / std::f64::consts::PI.sqrt())
}

/// Counts of the truth's rank among the members of each forecast, in
/// `members + 1` bins. Ties are broken uniformly at random.
pub fn rank_histogram<R: Rng + ?Sized>(forecasts: &[Vec<f64>], truths: &[f64], rng: &mut R) -> Result<Vec<usize>> {
    if forecasts.len() != truths.len() || forecasts.is_empty() {
        return Err(Error::Domain("rank histogram needs one truth per forecast".into()));
    }
    let n = forecasts[0].len();
    let mut counts = vec![0; n + 1];
    for (f, &t) in forecasts.iter().zip(truths) {
        if f.len() != n {
            return Err(Error::Domain("forecasts must share the ensemble size".into()));
        }
        let below = f.iter().filter(|&&x| x < t).count();
        let ties = f.iter().filter(|&&x| x == t).count();
        counts[below + rng.gen_range(0..=ties)] += 1;
    }
    Ok(counts)
}

/// Weighted quantile with linear interpolation between the weight midpoints
/// of the sorted samples (plotting position `(S_i - w_i/2) / S`). Beyond the
/// outermost midpoints the extreme sample is returned.
pub fn weighted_quantile(xs: &[f64], weights: &[f64], q: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&x, &w)| (x, w))
        .collect();
    if pairs.is_empty() {
        return f64::NAN;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut cum = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &(x, w) in &pairs {
        let pos = (cum + 0.5 * w) / total;
        cum += w;
        if q <= pos {
            return match prev {
                None => x,
                Some((px, pp)) => px + (x - px) * (q - pp) / (pos - pp),
            };
        }
        prev = Some((x, pos));
    }
    pairs.last().unwrap().0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastics::RngStream;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use statrs::distribution::ChiSquared;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 3.5355339059327378).abs() < 1e-12);
        assert!(matches!(rmse(&[], &[]), Err(Error::Domain(_))));
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn coverage_examples() {
        let r = |l, u, t| IntervalRecord::new(l, u, t).unwrap();
        assert_eq!(coverage(&[r(0.0, 1.0, 0.5), r(0.0, 1.0, 1.0)]), 1.0);
        assert_eq!(coverage(&[r(0.0, 1.0, 2.0), r(0.0, 1.0, -1.0)]), 0.0);
        let four = [r(0.0, 1.0, 0.5), r(0.0, 1.0, 0.0), r(0.0, 1.0, 0.9), r(0.0, 1.0, 1.5)];
        assert_eq!(coverage(&four), 0.75);
        assert!(IntervalRecord::new(1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn crps_examples() {
        assert_eq!(crps_ensemble(&[1.5, 1.5, 1.5], 1.5), 0.0);
        assert!((crps_ensemble(&[0.0, 2.0], 1.0) - 0.5).abs() < 1e-15);
        assert!((crps_ensemble(&[3.0, 3.0], -1.0) - 4.0).abs() < 1e-15);
    }

    fn crps_brute(xs: &[f64], y: f64) -> f64 {
        let n = xs.len() as f64;
        let a: f64 = xs.iter().map(|x| (x - y).abs()).sum::<f64>() / n;
        let b: f64 = xs.iter().flat_map(|x| xs.iter().map(move |z| (x - z).abs())).sum::<f64>() / (n * n);
        a - 0.5 * b
    }

    #[test]
    fn crps_gaussian_matches_large_ensemble() {
        let mut rng = RngStream::new(5, 0);
        let xs: Vec<f64> = (0..20000).map(|_| 0.3 + 1.7 * rng.sample::<f64, _>(StandardNormal)).collect();
        let e = crps_ensemble(&xs, 1.1);
        let g = crps_gaussian(0.3, 1.7, 1.1);
        assert!((e - g).abs() < 0.02 * g, "{e} vs {g}");
        assert_eq!(crps_gaussian(2.0, 0.0, 0.5), 1.5);
    }

    proptest! {
        #[test]
        fn crps_sorted_formula_matches_pairs(xs in prop::collection::vec(-10.0f64..10.0, 2..30), y in -10.0f64..10.0) {
            let c = crps_ensemble(&xs, y);
            prop_assert!(c >= 0.0);
            prop_assert!((c - crps_brute(&xs, y).max(0.0)).abs() < 1e-10);
        }

        #[test]
        fn crps_zero_iff_all_equal_truth(xs in prop::collection::vec(-3.0f64..3.0, 2..10)) {
            prop_assert!(crps_ensemble(&xs, xs[0]) > 0.0 || xs.iter().all(|&x| x == xs[0]));
        }

        #[test]
        fn weighted_quantile_monotone_and_bounded(
            data in prop::collection::vec((-5.0f64..5.0, 0.01f64..1.0), 1..40),
            q1 in 0.0f64..1.0, q2 in 0.0f64..1.0,
        ) {
            let (xs, ws): (Vec<f64>, Vec<f64>) = data.into_iter().unzip();
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            let a = weighted_quantile(&xs, &ws, lo);
            let b = weighted_quantile(&xs, &ws, hi);
            let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(a <= b + 1e-12);
            prop_assert!(a >= min - 1e-12 && b <= max + 1e-12);
        }
    }

    #[test]
    fn weighted_quantile_examples() {
        // Equal weights on 1..4: midpoints at 1/8, 3/8, 5/8, 7/8.
        let xs = [4.0, 1.0, 3.0, 2.0];
        let w = [0.25; 4];
        assert!((weighted_quantile(&xs, &w, 0.5) - 2.5).abs() < 1e-15);
        assert!((weighted_quantile(&xs, &w, 0.25) - 1.5).abs() < 1e-15);
        assert_eq!(weighted_quantile(&xs, &w, 0.05), 1.0);
        assert_eq!(weighted_quantile(&xs, &w, 0.95), 4.0);
        // Zero-weight samples are ignored.
        assert_eq!(weighted_quantile(&[0.0, 100.0], &[1.0, 0.0], 0.9), 0.0);
        // A dominant weight pulls the median.
        assert!((weighted_quantile(&[0.0, 1.0], &[0.9, 0.1], 0.5) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rank_histogram_examples() {
        let mut rng = RngStream::new(1, 0);
        let f = vec![vec![1.0, 2.0, 3.0]; 5];
        assert_eq!(rank_histogram(&f, &[0.0; 5], &mut rng).unwrap(), vec![5, 0, 0, 0]);
        assert_eq!(rank_histogram(&[vec![0.0]], &[1.0], &mut rng).unwrap(), vec![0, 1]);
        let ties = rank_histogram(&vec![vec![1.0, 1.0]; 3000], &[1.0; 3000], &mut rng).unwrap();
        assert!(ties.iter().all(|&c| (850..1150).contains(&c)), "{ties:?}");
    }

    #[test]
    fn rank_histogram_flat_for_calibrated_ensemble() {
        let mut rng = RngStream::new(2, 0);
        let (nf, nm) = (10_000, 9);
        let mut f = Vec::with_capacity(nf);
        let mut t = Vec::with_capacity(nf);
        for _ in 0..nf {
            let c: f64 = rng.sample(StandardNormal);
            f.push((0..nm).map(|_| c + rng.sample::<f64, _>(StandardNormal)).collect());
            t.push(c + rng.sample::<f64, _>(StandardNormal));
        }
        let h = rank_histogram(&f, &t, &mut rng).unwrap();
        let e = nf as f64 / (nm + 1) as f64;
        let chi2: f64 = h.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        let p = 1.0 - ChiSquared::new(nm as f64).unwrap().cdf(chi2);
        assert!(p > 1e-3, "p = {p}, {h:?}");
    }
}
