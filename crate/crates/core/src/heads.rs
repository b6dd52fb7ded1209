//! Numerical kernels for the nine evaluated prediction heads.
//!
//! Everything here is a pure function over explicit vectors: soft-label
//! construction (Gaussian and squared-distance softmax), distribution losses
//! (KL, expectation-weighted KL, mean-variance), rank encodings and their
//! decoders, and the expectation/median age decoders. No training loop, no
//! backbone; the kernels exist so every head's math can be exercised and
//! verified at desk scale.
//!
//! Distribution-producing heads decode with the median (the MAE-minimizing
//! estimator); the expectation decoder covers heads defined through it; rank
//! heads threshold at 0.5 unless told otherwise.

use thiserror::Error;

/// Sum tolerance for a valid probability vector.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Floor applied to predicted probabilities inside log terms. Oracle
/// comparisons must apply the same floor.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HeadsError {
    #[error("input vector is empty")]
    EmptyInput,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probabilities sum to {0}, expected 1 within {PROB_SUM_TOLERANCE:e}")]
    NotNormalized(f64),
    #[error("probability {value} at index {index} outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("expected vector of length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("age {0} is not on the grid")]
    AgeOffGrid(u32),
    #[error("invalid grid bounds [{lo}, {hi}]")]
    InvalidGridBounds { lo: u32, hi: u32 },
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("{name} must be nonnegative, got {value}")]
    NegativeParameter { name: &'static str, value: f64 },
    #[error("epsilon {0} outside supported range (1e-8, 1e-2)")]
    EpsilonOutOfRange(f64),
}

/// Contiguous inclusive range of integer ages, the class grid shared by all
/// heads. The benchmark grid is `AgeGrid::full()` = 0..=101 (K = 102).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgeGrid {
    ages: Vec<u32>,
}

impl AgeGrid {
    /// The full evaluation grid, ages 0 through 101.
    pub fn full() -> Self {
        Self {
            ages: (0..=101).collect(),
        }
    }

    pub fn new(lo: u32, hi: u32) -> Result<Self, HeadsError> {
        if lo > hi {
            return Err(HeadsError::InvalidGridBounds { lo, hi });
        }
        Ok(Self {
            ages: (lo..=hi).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.ages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ages.is_empty()
    }

    pub fn ages(&self) -> &[u32] {
        &self.ages
    }

    pub fn index_of(&self, age: u32) -> Option<usize> {
        let first = self.ages[0];
        if age < first || age > *self.ages.last().unwrap() {
            None
        } else {
            Some((age - first) as usize)
        }
    }
}

/// Nonnegative vector summing to 1 within [`PROB_SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    p: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self, HeadsError> {
        if p.is_empty() {
            return Err(HeadsError::EmptyInput);
        }
        let mut sum = 0.0;
        for (i, &v) in p.iter().enumerate() {
            if !v.is_finite() {
                return Err(HeadsError::NonFinite(i));
            }
            if v < 0.0 {
                return Err(HeadsError::NegativeProbability { index: i, value: v });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(HeadsError::NotNormalized(sum));
        }
        Ok(Self { p })
    }

    pub fn one_hot(len: usize, index: usize) -> Self {
        let mut p = vec![0.0; len];
        p[index] = 1.0;
        Self { p }
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            p: vec![1.0 / len as f64; len],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// A soft training target: a distribution over the grid with its mode at (or
/// truncated next to) `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabel {
    pub q: ProbabilityVector,
    pub target: u32,
    /// Sigma for Gaussian targets, metric scale for ordinal soft labels.
    pub spread: f64,
}

/// Binary threshold encoding of an age: entry k is 1 iff `target > age_k`,
/// over the first K-1 grid ages. Always a run of ones followed by zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankVector {
    b: Vec<bool>,
}

impl RankVector {
    pub fn bits(&self) -> &[bool] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// The encoding as {0.0, 1.0} probabilities, for feeding rank decoders.
    pub fn to_probs(&self) -> Vec<f64> {
        self.b.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect()
    }
}

fn check_len(expected: usize, actual: usize) -> Result<(), HeadsError> {
    if expected != actual {
        return Err(HeadsError::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// Numerically stable softmax (max subtraction), shift-invariant by
/// construction.
pub fn softmax(logits: &[f64]) -> Result<ProbabilityVector, HeadsError> {
    if logits.is_empty() {
        return Err(HeadsError::EmptyInput);
    }
    if let Some(i) = logits.iter().position(|v| !v.is_finite()) {
        return Err(HeadsError::NonFinite(i));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    Ok(ProbabilityVector {
        p: exp.into_iter().map(|e| e / sum).collect(),
    })
}

/// Expectation of the age under `p`.
pub fn expected_age(p: &ProbabilityVector, grid: &AgeGrid) -> Result<f64, HeadsError> {
    check_len(grid.len(), p.len())?;
    Ok(p.values()
        .iter()
        .zip(grid.ages())
        .map(|(&pi, &a)| pi * a as f64)
        .sum())
}

/// Smallest grid age whose cumulative probability reaches 0.5. Ties at
/// exactly 0.5 resolve to the smaller age.
pub fn median_age(p: &ProbabilityVector, grid: &AgeGrid) -> Result<u32, HeadsError> {
    check_len(grid.len(), p.len())?;
    let mut cum = 0.0;
    for (&pi, &age) in p.values().iter().zip(grid.ages()) {
        cum += pi;
        if cum >= 0.5 {
            return Ok(age);
        }
    }
    // Reachable only through accumulated rounding; the tail age is correct.
    Ok(*grid.ages().last().unwrap())
}

/// Gaussian soft label: q_i proportional to exp(-(age_i - target)^2 / (2 sigma^2)),
/// renormalized over the truncated grid.
pub fn gaussian_label(target: u32, sigma: f64, grid: &AgeGrid) -> Result<SoftLabel, HeadsError> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(HeadsError::NonPositiveParameter {
            name: "sigma",
            value: sigma,
        });
    }
    grid.index_of(target)
        .ok_or(HeadsError::AgeOffGrid(target))?;
    let weights: Vec<f64> = grid
        .ages()
        .iter()
        .map(|&a| {
            let d = a as f64 - target as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    Ok(SoftLabel {
        q: ProbabilityVector {
            p: weights.into_iter().map(|w| w / sum).collect(),
        },
        target,
        spread: sigma,
    })
}

/// Ordinal soft label: softmax over -(age_i - target)^2 / scale. Approaches a
/// one-hot at the target as the scale shrinks.
pub fn sord_label(target: u32, scale: f64, grid: &AgeGrid) -> Result<SoftLabel, HeadsError> {
    if scale.is_nan() || scale <= 0.0 {
        return Err(HeadsError::NonPositiveParameter {
            name: "scale",
            value: scale,
        });
    }
    grid.index_of(target)
        .ok_or(HeadsError::AgeOffGrid(target))?;
    let logits: Vec<f64> = grid
        .ages()
        .iter()
        .map(|&a| {
            let d = a as f64 - target as f64;
            -d * d / scale
        })
        .collect();
    Ok(SoftLabel {
        q: softmax(&logits)?,
        target,
        spread: scale,
    })
}

/// KL divergence of `p` from the soft target `q`, with `p` floored at
/// [`PROB_FLOOR`] inside the log. Zero-probability target entries contribute
/// nothing.
pub fn kl_loss(q: &SoftLabel, p: &ProbabilityVector) -> Result<f64, HeadsError> {
    check_len(q.q.len(), p.len())?;
    let mut total = 0.0;
    for (&qi, &pi) in q.q.values().iter().zip(p.values()) {
        if qi > 0.0 {
            total += qi * (qi.ln() - pi.max(PROB_FLOOR).ln());
        }
    }
    Ok(total)
}

/// KL plus a weighted absolute expectation error:
/// `kl_loss + lambda * |expected_age(p) - target|`.
pub fn dldl_v2_loss(
    q: &SoftLabel,
    p: &ProbabilityVector,
    lambda: f64,
    grid: &AgeGrid,
) -> Result<f64, HeadsError> {
    if lambda < 0.0 {
        return Err(HeadsError::NegativeParameter {
            name: "lambda",
            value: lambda,
        });
    }
    let kl = kl_loss(q, p)?;
    let exp = expected_age(p, grid)?;
    Ok(kl + lambda * (exp - q.target as f64).abs())
}

/// Weighted squared expectation error plus distribution variance:
/// `w_m (E[age] - target)^2 + w_v Var[age]`.
pub fn mean_variance_loss(
    p: &ProbabilityVector,
    target: u32,
    w_m: f64,
    w_v: f64,
    grid: &AgeGrid,
) -> Result<f64, HeadsError> {
    if w_m < 0.0 {
        return Err(HeadsError::NegativeParameter {
            name: "w_m",
            value: w_m,
        });
    }
    if w_v < 0.0 {
        return Err(HeadsError::NegativeParameter {
            name: "w_v",
            value: w_v,
        });
    }
    let mean = expected_age(p, grid)?;
    let variance: f64 = p
        .values()
        .iter()
        .zip(grid.ages())
        .map(|(&pi, &a)| pi * (a as f64 - mean) * (a as f64 - mean))
        .sum();
    let err = mean - target as f64;
    Ok(w_m * err * err + w_v * variance)
}

/// Threshold encoding of a target age over the first K-1 grid ages.
pub fn rank_encode(target: u32, grid: &AgeGrid) -> Result<RankVector, HeadsError> {
    grid.index_of(target)
        .ok_or(HeadsError::AgeOffGrid(target))?;
    let b = grid.ages()[..grid.len() - 1]
        .iter()
        .map(|&a| target > a)
        .collect();
    Ok(RankVector { b })
}

fn check_rank_probs(probs: &[f64], grid: &AgeGrid) -> Result<(), HeadsError> {
    check_len(grid.len() - 1, probs.len())?;
    for (i, &v) in probs.iter().enumerate() {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(HeadsError::ProbabilityOutOfRange { index: i, value: v });
        }
    }
    Ok(())
}

/// Decode per-threshold probabilities: the predicted age is the grid age
/// indexed by the number of entries strictly above the threshold.
pub fn rank_decode(probs: &[f64], threshold: f64, grid: &AgeGrid) -> Result<u32, HeadsError> {
    check_rank_probs(probs, grid)?;
    let count = probs.iter().filter(|&&v| v > threshold).count();
    Ok(grid.ages()[count])
}

/// Decode conditional per-threshold probabilities by chaining them into
/// cumulative products first. The cumulative vector is monotone
/// nonincreasing, so the count-based decode is always rank-consistent.
pub fn corn_decode(
    conditionals: &[f64],
    threshold: f64,
    grid: &AgeGrid,
) -> Result<u32, HeadsError> {
    check_rank_probs(conditionals, grid)?;
    let mut cumulative = 1.0;
    let mut count = 0;
    for &c in conditionals {
        cumulative *= c;
        if cumulative > threshold {
            count += 1;
        }
    }
    Ok(grid.ages()[count])
}

/// Plain squared-error regression loss on a scalar prediction.
pub fn squared_error(prediction: f64, target: f64) -> f64 {
    (prediction - target) * (prediction - target)
}

pub fn squared_error_grad(prediction: f64, target: f64) -> f64 {
    2.0 * (prediction - target)
}

/// Analytic gradient of [`kl_loss`] with respect to the logits producing `p`
/// via softmax: p - q.
pub fn kl_grad_wrt_logits(q: &SoftLabel, logits: &[f64]) -> Result<Vec<f64>, HeadsError> {
    let p = softmax(logits)?;
    check_len(q.q.len(), p.len())?;
    Ok(p.values()
        .iter()
        .zip(q.q.values())
        .map(|(&pi, &qi)| pi - qi)
        .collect())
}

/// Analytic gradient of [`dldl_v2_loss`] with respect to the logits. The
/// absolute-error term contributes sign(E - target) * dE/dz, undefined only
/// at E == target exactly.
pub fn dldl_v2_grad_wrt_logits(
    q: &SoftLabel,
    logits: &[f64],
    lambda: f64,
    grid: &AgeGrid,
) -> Result<Vec<f64>, HeadsError> {
    if lambda < 0.0 {
        return Err(HeadsError::NegativeParameter {
            name: "lambda",
            value: lambda,
        });
    }
    let p = softmax(logits)?;
    check_len(q.q.len(), p.len())?;
    check_len(grid.len(), p.len())?;
    let mean = expected_age(&p, grid)?;
    let sign = (mean - q.target as f64).signum();
    Ok(p.values()
        .iter()
        .zip(q.q.values())
        .zip(grid.ages())
        .map(|((&pi, &qi), &a)| (pi - qi) + lambda * sign * pi * (a as f64 - mean))
        .collect())
}

/// Analytic gradient of [`mean_variance_loss`] with respect to the logits.
pub fn mean_variance_grad_wrt_logits(
    target: u32,
    logits: &[f64],
    w_m: f64,
    w_v: f64,
    grid: &AgeGrid,
) -> Result<Vec<f64>, HeadsError> {
    if w_m < 0.0 {
        return Err(HeadsError::NegativeParameter {
            name: "w_m",
            value: w_m,
        });
    }
    if w_v < 0.0 {
        return Err(HeadsError::NegativeParameter {
            name: "w_v",
            value: w_v,
        });
    }
    let p = softmax(logits)?;
    check_len(grid.len(), p.len())?;
    let mean = expected_age(&p, grid)?;
    let variance: f64 = p
        .values()
        .iter()
        .zip(grid.ages())
        .map(|(&pi, &a)| pi * (a as f64 - mean) * (a as f64 - mean))
        .sum();
    let err = mean - target as f64;
    Ok(p.values()
        .iter()
        .zip(grid.ages())
        .map(|(&pi, &a)| {
            let d = a as f64 - mean;
            2.0 * w_m * err * pi * d + w_v * pi * (d * d - variance)
        })
        .collect())
}

/// Compare an analytic gradient against central finite differences and
/// return the worst per-component deviation `|analytic - numeric| /
/// max(1, |analytic|, |numeric|)`.
pub fn grad_check<F, G>(f: F, grad: G, x: &[f64], epsilon: f64) -> Result<f64, HeadsError>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    if !(epsilon > 1e-8 && epsilon < 1e-2) {
        return Err(HeadsError::EpsilonOutOfRange(epsilon));
    }
    let analytic = grad(x);
    check_len(x.len(), analytic.len())?;
    if let Some(i) = analytic.iter().position(|v| !v.is_finite()) {
        return Err(HeadsError::NonFinite(i));
    }
    let mut worst: f64 = 0.0;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + epsilon;
        let hi = f(&probe);
        probe[i] = x[i] - epsilon;
        let lo = f(&probe);
        probe[i] = x[i];
        let numeric = (hi - lo) / (2.0 * epsilon);
        if !numeric.is_finite() {
            return Err(HeadsError::NonFinite(i));
        }
        let scale = 1.0f64.max(analytic[i].abs()).max(numeric.abs());
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual} (tol {tol})"
        );
    }

    #[test]
    fn softmax_uniform_on_equal_logits() {
        let p = softmax(&[0.7; 102]).unwrap();
        for &v in p.values() {
            assert_close(v, 1.0 / 102.0, 1e-15);
        }
    }

    #[test]
    fn softmax_shift_invariant() {
        let logits = [0.3, -1.2, 2.5, 0.0];
        let shifted: Vec<f64> = logits.iter().map(|z| z + 17.0).collect();
        let a = softmax(&logits).unwrap();
        let b = softmax(&shifted).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_close(*x, *y, 1e-12);
        }
    }

    #[test]
    fn softmax_two_class_closed_form() {
        let p = softmax(&[0.0, 3.0f64.ln()]).unwrap();
        assert_close(p.values()[0], 0.25, 1e-12);
        assert_close(p.values()[1], 0.75, 1e-12);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(matches!(
            softmax(&[0.0, f64::NAN]),
            Err(HeadsError::NonFinite(1))
        ));
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn expected_age_one_hot_and_midpoint() {
        let grid = AgeGrid::full();
        let one_hot = ProbabilityVector::one_hot(grid.len(), 30);
        assert_close(expected_age(&one_hot, &grid).unwrap(), 30.0, 0.0);

        let mut p = vec![0.0; grid.len()];
        p[20] = 0.5;
        p[30] = 0.5;
        let p = ProbabilityVector::new(p).unwrap();
        assert_close(expected_age(&p, &grid).unwrap(), 25.0, 1e-12);
    }

    #[test]
    fn expected_age_uniform_full_grid() {
        let grid = AgeGrid::full();
        let p = ProbabilityVector::uniform(grid.len());
        assert_close(expected_age(&p, &grid).unwrap(), 50.5, 1e-9);
    }

    #[test]
    fn median_one_hot() {
        let grid = AgeGrid::full();
        let p = ProbabilityVector::one_hot(grid.len(), 30);
        assert_eq!(median_age(&p, &grid).unwrap(), 30);
    }

    #[test]
    fn median_uniform_over_four_ages() {
        let grid = AgeGrid::new(10, 13).unwrap();
        let p = ProbabilityVector::uniform(4);
        assert_eq!(median_age(&p, &grid).unwrap(), 11);
    }

    #[test]
    fn median_hand_cdf() {
        let grid = AgeGrid::new(20, 22).unwrap();
        let p = ProbabilityVector::new(vec![0.3, 0.3, 0.4]).unwrap();
        assert_eq!(median_age(&p, &grid).unwrap(), 21);
    }

    #[test]
    fn gaussian_label_normalizes_and_peaks_at_target() {
        let grid = AgeGrid::full();
        for (target, sigma) in [(0u32, 2.0), (50, 1.0), (50, 7.5), (101, 3.0)] {
            let label = gaussian_label(target, sigma, &grid).unwrap();
            let sum: f64 = label.q.values().iter().sum();
            assert_close(sum, 1.0, 1e-9);
            let argmax = label
                .q
                .values()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, grid.index_of(target).unwrap());
        }
        // Mid-grid targets are symmetric around the mode.
        let label = gaussian_label(50, 3.0, &grid).unwrap();
        assert_close(label.q.values()[49], label.q.values()[51], 1e-15);
        assert_close(label.q.values()[45], label.q.values()[55], 1e-15);
    }

    #[test]
    fn gaussian_label_truncated_at_grid_edge() {
        // Frozen from an independent density evaluation of exp(-i^2/8) over
        // 0..=101, normalized.
        let grid = AgeGrid::full();
        let label = gaussian_label(0, 2.0, &grid).unwrap();
        let q = label.q.values();
        assert!(q[0] > q[1] && q[1] > q[2]);
        assert_close(q[0], 0.33259848197320924, 1e-12);
        assert_close(q[1], 0.2935171301456955, 1e-12);
        assert_close(q[2], 0.201731176690631, 1e-12);
    }

    #[test]
    fn gaussian_label_rejects_bad_sigma() {
        let grid = AgeGrid::full();
        assert!(gaussian_label(0, 0.0, &grid).is_err());
        assert!(gaussian_label(0, -1.0, &grid).is_err());
        assert!(gaussian_label(200, 2.0, &grid).is_err());
    }

    #[test]
    fn sord_label_matches_softmax_oracle() {
        // Frozen from an independent softmax evaluation of -(i-50)^2/10 over
        // 0..=101.
        let grid = AgeGrid::full();
        let label = sord_label(50, 10.0, &grid).unwrap();
        let q = label.q.values();
        assert_close(q[50], 0.17841241161527707, 1e-12);
        assert_close(q[49], 0.16143422587153614, 1e-12);
        assert_close(q[48], 0.11959341596728196, 1e-12);
        assert_close(q[45], 0.014644982561926485, 1e-12);
        assert_close(q[49], q[51], 1e-15);
    }

    #[test]
    fn sord_label_sharpens_to_one_hot() {
        let grid = AgeGrid::full();
        let label = sord_label(40, 1e-3, &grid).unwrap();
        assert!(label.q.values()[40] > 1.0 - 1e-9);
        assert!(sord_label(40, 0.0, &grid).is_err());
    }

    #[test]
    fn kl_zero_at_equal_distributions() {
        let grid = AgeGrid::full();
        let label = gaussian_label(30, 2.0, &grid).unwrap();
        let p = label.q.clone();
        assert_close(kl_loss(&label, &p).unwrap(), 0.0, 1e-12);
    }

    #[test]
    fn kl_one_hot_closed_form() {
        let grid = AgeGrid::new(0, 3).unwrap();
        let q = SoftLabel {
            q: ProbabilityVector::one_hot(4, 2),
            target: 2,
            spread: 0.0,
        };
        let p = ProbabilityVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_close(kl_loss(&q, &p).unwrap(), -(0.3f64.ln()), 1e-12);
        let _ = grid;
    }

    #[test]
    fn kl_frozen_pair() {
        // Frozen from an independent summation of q ln(q/p).
        let q = SoftLabel {
            q: ProbabilityVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
            target: 3,
            spread: 1.0,
        };
        let p = ProbabilityVector::uniform(4);
        assert_close(kl_loss(&q, &p).unwrap(), 0.10644013528622318, 1e-12);
    }

    #[test]
    fn dldl_v2_composition() {
        let grid = AgeGrid::new(0, 3).unwrap();
        let q = SoftLabel {
            q: ProbabilityVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
            target: 3,
            spread: 1.0,
        };
        let p = ProbabilityVector::uniform(4);
        // E[p] = 1.5 so the expectation term adds |1.5 - 3| = 1.5.
        assert_close(
            dldl_v2_loss(&q, &p, 1.0, &grid).unwrap(),
            1.6064401352862232,
            1e-12,
        );
        // Zero weight reduces to plain KL.
        assert_close(
            dldl_v2_loss(&q, &p, 0.0, &grid).unwrap(),
            kl_loss(&q, &p).unwrap(),
            0.0,
        );
        assert!(dldl_v2_loss(&q, &p, -0.1, &grid).is_err());
    }

    #[test]
    fn dldl_v2_zero_when_aligned() {
        let grid = AgeGrid::new(0, 4).unwrap();
        let q = SoftLabel {
            q: ProbabilityVector::one_hot(5, 2),
            target: 2,
            spread: 1.0,
        };
        let p = ProbabilityVector::one_hot(5, 2);
        assert_close(dldl_v2_loss(&q, &p, 1.0, &grid).unwrap(), 0.0, 1e-12);
    }

    #[test]
    fn mean_variance_hand_cases() {
        let grid = AgeGrid::full();
        let one_hot = ProbabilityVector::one_hot(grid.len(), 33);
        assert_close(
            mean_variance_loss(&one_hot, 33, 0.2, 0.05, &grid).unwrap(),
            0.0,
            1e-12,
        );

        // Half mass at target +/- 5: zero mean error, variance 25.
        let mut p = vec![0.0; grid.len()];
        p[15] = 0.5;
        p[25] = 0.5;
        let p = ProbabilityVector::new(p).unwrap();
        assert_close(
            mean_variance_loss(&p, 20, 0.2, 0.05, &grid).unwrap(),
            0.05 * 25.0,
            1e-12,
        );
        assert_close(
            mean_variance_loss(&p, 20, 0.0, 0.0, &grid).unwrap(),
            0.0,
            0.0,
        );
        assert!(mean_variance_loss(&p, 20, -0.1, 0.0, &grid).is_err());
    }

    #[test]
    fn rank_encode_boundaries() {
        let grid = AgeGrid::full();
        assert!(rank_encode(0, &grid).unwrap().bits().iter().all(|&b| !b));
        assert!(rank_encode(101, &grid).unwrap().bits().iter().all(|&b| b));
        let bits = rank_encode(18, &grid).unwrap();
        assert_eq!(bits.bits().iter().filter(|&&b| b).count(), 18);
        assert!(bits.bits()[..18].iter().all(|&b| b));
        assert!(rank_encode(102, &grid).is_err());
    }

    #[test]
    fn rank_decode_extremes_and_count() {
        let grid = AgeGrid::full();
        assert_eq!(rank_decode(&[0.9; 101], 0.5, &grid).unwrap(), 101);
        assert_eq!(rank_decode(&[0.1; 101], 0.5, &grid).unwrap(), 0);

        let mut probs = vec![0.1; 101];
        probs[0] = 0.9;
        probs[1] = 0.8;
        probs[2] = 0.3;
        probs[3] = 0.7;
        assert_eq!(rank_decode(&probs, 0.5, &grid).unwrap(), 3);
        assert!(rank_decode(&probs[..50], 0.5, &grid).is_err());
        probs[5] = 1.2;
        assert!(rank_decode(&probs, 0.5, &grid).is_err());
    }

    #[test]
    fn corn_decode_chains_conditionals() {
        let grid = AgeGrid::new(0, 3).unwrap();
        // Cumulative products (0.9, 0.72, 0.288): two entries above 0.5.
        assert_eq!(corn_decode(&[0.9, 0.8, 0.4], 0.5, &grid).unwrap(), 2);
        assert_eq!(corn_decode(&[1.0, 1.0, 1.0], 0.5, &grid).unwrap(), 3);
        assert_eq!(corn_decode(&[0.0, 1.0, 1.0], 0.5, &grid).unwrap(), 0);
        let full = AgeGrid::full();
        assert_eq!(corn_decode(&[1.0; 101], 0.5, &full).unwrap(), 101);
    }

    #[test]
    fn grad_check_stationary_squared_error() {
        let dev = grad_check(
            |x| squared_error(x[0], 30.0),
            |x| vec![squared_error_grad(x[0], 30.0)],
            &[30.0],
            1e-5,
        )
        .unwrap();
        assert_close(dev, 0.0, 1e-12);
    }

    #[test]
    fn grad_check_epsilon_bounds() {
        let f = |x: &[f64]| x[0] * x[0];
        let g = |x: &[f64]| vec![2.0 * x[0]];
        assert!(grad_check(f, g, &[1.0], 1e-9).is_err());
        assert!(grad_check(f, g, &[1.0], 0.5).is_err());
    }

    #[test]
    fn kl_gradient_vanishes_at_p_equals_q() {
        let grid = AgeGrid::full();
        let label = gaussian_label(40, 2.0, &grid).unwrap();
        // Logits reproducing q exactly: ln q is a valid preimage of softmax.
        let logits: Vec<f64> = label.q.values().iter().map(|&v| v.ln()).collect();
        let grad = kl_grad_wrt_logits(&label, &logits).unwrap();
        for g in grad {
            assert!(g.abs() < 1e-9, "residual gradient {g}");
        }
    }

    proptest! {
        #[test]
        fn decoded_ages_stay_on_grid(probs in proptest::collection::vec(0.0f64..=1.0, 101), threshold in 0.0f64..1.0) {
            let grid = AgeGrid::full();
            let rank = rank_decode(&probs, threshold, &grid).unwrap();
            let corn = corn_decode(&probs, threshold, &grid).unwrap();
            prop_assert!(rank <= 101);
            prop_assert!(corn <= 101);
        }

        #[test]
        fn corn_cumulative_is_monotone(conds in proptest::collection::vec(0.0f64..=1.0, 101)) {
            let mut cumulative = 1.0;
            let mut previous = 1.0;
            for &c in &conds {
                cumulative *= c;
                prop_assert!(cumulative <= previous + 1e-15);
                previous = cumulative;
            }
        }

        #[test]
        fn soft_labels_always_normalized(target in 0u32..=101, sigma in 0.2f64..20.0, scale in 0.2f64..50.0) {
            let grid = AgeGrid::full();
            let g = gaussian_label(target, sigma, &grid).unwrap();
            let s = sord_label(target, scale, &grid).unwrap();
            prop_assert!((g.q.values().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!((s.q.values().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn kl_nonnegative(seed in proptest::num::u64::ANY) {
            let grid = AgeGrid::full();
            let mut state = seed;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 6.0 - 3.0
            };
            let logits: Vec<f64> = (0..grid.len()).map(|_| next()).collect();
            let p = softmax(&logits).unwrap();
            let q = gaussian_label(((seed % 102) as u32).min(101), 2.0, &grid).unwrap();
            prop_assert!(kl_loss(&q, &p).unwrap() >= -1e-12);
        }
    }
}
