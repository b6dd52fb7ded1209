//! Self-test battery for the prediction-head kernels.
//!
//! Runs the decode/encode identities over every grid target, the soft-label
//! normalization and KL identities, and finite-difference checks of every
//! differentiable loss gradient at randomized points. The `kernels` CLI
//! subcommand prints the outcome as a pass/fail table.

use crate::heads::{
    corn_decode, dldl_v2_grad_wrt_logits, dldl_v2_loss, expected_age, gaussian_label, grad_check,
    kl_grad_wrt_logits, kl_loss, mean_variance_grad_wrt_logits, mean_variance_loss, median_age,
    rank_decode, rank_encode, softmax, sord_label, squared_error, squared_error_grad, AgeGrid,
    ProbabilityVector,
};
use crate::rng::SplitMix64;

pub const GRAD_CHECK_POINTS: usize = 100;
pub const GRAD_CHECK_EPSILON: f64 = 1e-5;
pub const GRAD_CHECK_MAX_DEVIATION: f64 = 1e-4;

#[derive(Debug, Clone, serde::Serialize)]
pub struct SelfTestEntry {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SelfTestReport {
    pub entries: Vec<SelfTestEntry>,
}

impl SelfTestReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&format!(
                "{:<44} {}  {}\n",
                entry.name,
                if entry.passed { "PASS" } else { "FAIL" },
                entry.detail
            ));
        }
        out.push_str(&format!(
            "{} of {} kernel checks passed\n",
            self.entries.iter().filter(|e| e.passed).count(),
            self.entries.len()
        ));
        out
    }
}

fn random_logits(rng: &mut SplitMix64, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.next_f64() * 6.0 - 3.0).collect()
}

/// Run the whole battery. Deterministic: the random points come from a fixed
/// seed.
pub fn run_kernel_self_test() -> SelfTestReport {
    let grid = AgeGrid::full();
    let k = grid.len();
    let mut entries = Vec::new();
    let mut push = |name: &'static str, passed: bool, detail: String| {
        entries.push(SelfTestEntry {
            name,
            passed,
            detail,
        });
    };

    // Rank round trip: encode every target, decode its {0,1} probabilities.
    {
        let mut failures = 0;
        for &target in grid.ages() {
            let encoded = rank_encode(target, &grid).unwrap();
            let decoded = rank_decode(&encoded.to_probs(), 0.5, &grid).unwrap();
            if decoded != target {
                failures += 1;
            }
        }
        push(
            "rank encode/decode round trip (102 targets)",
            failures == 0,
            format!("{failures} failures"),
        );
    }

    // Median equals expectation on one-hot inputs for every target.
    {
        let mut failures = 0;
        for (index, &target) in grid.ages().iter().enumerate() {
            let p = ProbabilityVector::one_hot(k, index);
            let median = median_age(&p, &grid).unwrap();
            let expectation = expected_age(&p, &grid).unwrap();
            if median != target || (expectation - target as f64).abs() > 1e-12 {
                failures += 1;
            }
        }
        push(
            "one-hot median equals expectation",
            failures == 0,
            format!("{failures} failures"),
        );
    }

    // Decode outputs stay on the grid for random inputs.
    {
        let mut rng = SplitMix64::new(0xDEC0DE);
        let mut failures = 0;
        for _ in 0..200 {
            let probs: Vec<f64> = (0..k - 1).map(|_| rng.next_f64()).collect();
            let threshold = rng.next_f64();
            let a = rank_decode(&probs, threshold, &grid).unwrap();
            let b = corn_decode(&probs, threshold, &grid).unwrap();
            if a > 101 || b > 101 {
                failures += 1;
            }
        }
        push(
            "decoded ages stay on the grid",
            failures == 0,
            format!("{failures} failures"),
        );
    }

    // Soft labels normalize within 1e-9 and peak at the target.
    {
        let mut rng = SplitMix64::new(0x50F7);
        let mut worst: f64 = 0.0;
        let mut mode_failures = 0;
        for _ in 0..100 {
            let target = rng.below(102) as u32;
            let sigma = 0.5 + rng.next_f64() * 9.5;
            let scale = 0.5 + rng.next_f64() * 49.5;
            for label in [
                gaussian_label(target, sigma, &grid).unwrap(),
                sord_label(target, scale, &grid).unwrap(),
            ] {
                let sum: f64 = label.q.values().iter().sum();
                worst = worst.max((sum - 1.0).abs());
                let argmax = label
                    .q
                    .values()
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                if argmax != grid.index_of(target).unwrap() {
                    mode_failures += 1;
                }
            }
        }
        push(
            "soft labels normalized with mode at target",
            worst <= 1e-9 && mode_failures == 0,
            format!("worst |sum-1| = {worst:.2e}, {mode_failures} mode failures"),
        );
    }

    // KL of a distribution against itself is zero.
    {
        let mut rng = SplitMix64::new(0x4B4C);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let target = rng.below(102) as u32;
            let label = gaussian_label(target, 1.0 + rng.next_f64() * 5.0, &grid).unwrap();
            let p = label.q.clone();
            worst = worst.max(kl_loss(&label, &p).unwrap().abs());
        }
        push(
            "kl(p, p) = 0",
            worst <= 1e-9,
            format!("worst |kl| = {worst:.2e}"),
        );
    }

    // Gradient checks at random points, one entry per differentiable loss.
    let mut rng = SplitMix64::new(0x6AD5);

    {
        let mut worst: f64 = 0.0;
        for _ in 0..GRAD_CHECK_POINTS {
            let x = vec![rng.next_f64() * 200.0 - 50.0];
            let target = rng.next_f64() * 101.0;
            let dev = grad_check(
                |v| squared_error(v[0], target),
                |v| vec![squared_error_grad(v[0], target)],
                &x,
                GRAD_CHECK_EPSILON,
            )
            .unwrap();
            worst = worst.max(dev);
        }
        push(
            "grad check: squared error",
            worst < GRAD_CHECK_MAX_DEVIATION,
            format!("max deviation {worst:.2e}"),
        );
    }

    {
        let mut worst: f64 = 0.0;
        for _ in 0..GRAD_CHECK_POINTS {
            let logits = random_logits(&mut rng, k);
            let label = gaussian_label(rng.below(102) as u32, 2.0, &grid).unwrap();
            let dev = grad_check(
                |z| kl_loss(&label, &softmax(z).unwrap()).unwrap(),
                |z| kl_grad_wrt_logits(&label, z).unwrap(),
                &logits,
                GRAD_CHECK_EPSILON,
            )
            .unwrap();
            worst = worst.max(dev);
        }
        push(
            "grad check: kl loss",
            worst < GRAD_CHECK_MAX_DEVIATION,
            format!("max deviation {worst:.2e}"),
        );
    }

    {
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        while checked < GRAD_CHECK_POINTS {
            let logits = random_logits(&mut rng, k);
            let label = gaussian_label(rng.below(102) as u32, 2.0, &grid).unwrap();
            let p = softmax(&logits).unwrap();
            let mean = expected_age(&p, &grid).unwrap();
            // The |E - target| term is non-differentiable where E hits the
            // target exactly; stay clear of the kink.
            if (mean - label.target as f64).abs() < 1e-2 {
                continue;
            }
            let dev = grad_check(
                |z| dldl_v2_loss(&label, &softmax(z).unwrap(), 1.0, &grid).unwrap(),
                |z| dldl_v2_grad_wrt_logits(&label, z, 1.0, &grid).unwrap(),
                &logits,
                GRAD_CHECK_EPSILON,
            )
            .unwrap();
            worst = worst.max(dev);
            checked += 1;
        }
        push(
            "grad check: expectation-weighted kl",
            worst < GRAD_CHECK_MAX_DEVIATION,
            format!("max deviation {worst:.2e}"),
        );
    }

    {
        let mut worst: f64 = 0.0;
        for _ in 0..GRAD_CHECK_POINTS {
            let logits = random_logits(&mut rng, k);
            let target = rng.below(102) as u32;
            let dev = grad_check(
                |z| mean_variance_loss(&softmax(z).unwrap(), target, 0.2, 0.05, &grid).unwrap(),
                |z| mean_variance_grad_wrt_logits(target, z, 0.2, 0.05, &grid).unwrap(),
                &logits,
                GRAD_CHECK_EPSILON,
            )
            .unwrap();
            worst = worst.max(dev);
        }
        push(
            "grad check: mean-variance loss",
            worst < GRAD_CHECK_MAX_DEVIATION,
            format!("max deviation {worst:.2e}"),
        );
    }

    SelfTestReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes() {
        let report = run_kernel_self_test();
        assert!(report.all_passed(), "{}", report.render_text());
    }

    #[test]
    fn battery_is_deterministic() {
        let a = run_kernel_self_test();
        let b = run_kernel_self_test();
        let details: Vec<&String> = a.entries.iter().map(|e| &e.detail).collect();
        let details_b: Vec<&String> = b.entries.iter().map(|e| &e.detail).collect();
        assert_eq!(details, details_b);
    }
}
