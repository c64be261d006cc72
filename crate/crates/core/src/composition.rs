//! Closed-form composition and subsampling-amplification calculators.
//!
//! Every function here is a total, deterministic map on its stated domain.
//! A composed delta reaching 1 is an error, never a clamp: a clamped value
//! would misstate the guarantee.

use serde::{Deserialize, Serialize};

use crate::accountant::check_delta_open;
use crate::error::{Error, Result};

/// An `(epsilon, delta)` privacy guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::NegativeEpsilon(epsilon));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidDelta {
                value: delta,
                range: "[0, 1)",
            });
        }
        Ok(Self { epsilon, delta })
    }
}

/// Sampling ratio `q = m/n` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleParams {
    pub q: f64,
}

impl SubsampleParams {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q <= 0.0 || q > 1.0 {
            return Err(Error::InvalidSamplingRatio(q));
        }
        Ok(Self { q })
    }
}

fn check_steps(steps: u64) -> Result<f64> {
    if steps < 1 {
        return Err(Error::InvalidSteps);
    }
    Ok(steps as f64)
}

fn check_composed_delta(delta: f64) -> Result<f64> {
    if delta >= 1.0 {
        return Err(Error::DeltaOverflow(delta));
    }
    Ok(delta)
}

/// Basic composition: `T` applications of an `(eps, delta)` mechanism give
/// `(T eps, T delta)`.
pub fn compose_basic(p: PrivacyParams, steps: u64) -> Result<PrivacyParams> {
    let t = check_steps(steps)?;
    let delta = check_composed_delta(t * p.delta)?;
    Ok(PrivacyParams {
        epsilon: t * p.epsilon,
        delta,
    })
}

/// Composition with varying per-step parameters: sums both coordinates.
pub fn compose_heterogeneous(eps_list: &[f64], delta_list: &[f64]) -> Result<PrivacyParams> {
    if eps_list.len() != delta_list.len() {
        return Err(Error::LengthMismatch {
            eps: eps_list.len(),
            deltas: delta_list.len(),
        });
    }
    for (&e, &d) in eps_list.iter().zip(delta_list) {
        PrivacyParams::new(e, d)?;
    }
    let delta = check_composed_delta(delta_list.iter().sum())?;
    Ok(PrivacyParams {
        epsilon: eps_list.iter().sum(),
        delta,
    })
}

/// Advanced composition:
/// `eps' = sqrt(2 T ln(1/delta')) eps + T eps (e^eps - 1)`,
/// `delta'' = T delta + delta'`.
pub fn compose_advanced(p: PrivacyParams, steps: u64, delta_prime: f64) -> Result<PrivacyParams> {
    let t = check_steps(steps)?;
    check_delta_open(delta_prime)?;
    let epsilon = (2.0 * t * (1.0 / delta_prime).ln()).sqrt() * p.epsilon
        + t * p.epsilon * p.epsilon.exp_m1();
    let delta = check_composed_delta(t * p.delta + delta_prime)?;
    Ok(PrivacyParams { epsilon, delta })
}

/// Per-step budget that advanced composition stretches to `epsilon_total`:
/// `eps = eps_total / (sqrt(2 T ln(1/delta')) + T (e^(eps_total/T) - 1))`.
pub fn per_step_budget(epsilon_total: f64, steps: u64, delta_prime: f64) -> Result<f64> {
    if epsilon_total.is_nan() || epsilon_total < 0.0 {
        return Err(Error::NegativeEpsilon(epsilon_total));
    }
    let t = check_steps(steps)?;
    check_delta_open(delta_prime)?;
    if epsilon_total == 0.0 {
        return Ok(0.0);
    }
    let denom = (2.0 * t * (1.0 / delta_prime).ln()).sqrt() + t * (epsilon_total / t).exp_m1();
    Ok(epsilon_total / denom)
}

/// Uniform-subsampling amplification:
/// `eps' = ln(1 + q (e^eps - 1))`, `delta' = q delta`.
pub fn subsample_amplify(p: PrivacyParams, s: SubsampleParams) -> Result<PrivacyParams> {
    if s.q == 1.0 {
        return Ok(p);
    }
    let epsilon = (s.q * p.epsilon.exp_m1()).ln_1p();
    debug_assert!(epsilon <= p.epsilon);
    Ok(PrivacyParams {
        epsilon,
        delta: s.q * p.delta,
    })
}

/// Smallest `eps_0` with `q (1 - e^(-eps_0)) = delta`, found by bisection on
/// `[0, 1400]` to absolute tolerance 1e-12. The left side is strictly
/// increasing with supremum `q`, so a solution exists only when `delta < q`.
pub fn poisson_epsilon_zero(q: f64, delta: f64) -> Result<f64> {
    SubsampleParams::new(q)?;
    if delta.is_nan() || !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidDelta {
            value: delta,
            range: "[0, 1)",
        });
    }
    if delta >= q {
        return Err(Error::NoFiniteEpsilonZero { q, delta });
    }
    let f = |eps0: f64| q * (-(-eps0).exp_m1()) - delta;
    let mut low = 0.0_f64;
    let mut high = 1400.0_f64;
    while high - low > 1e-12 {
        let mid = 0.5 * (low + high);
        if f(mid) < 0.0 {
            low = mid;
        } else {
            high = mid;
        }
    }
    Ok(0.5 * (low + high))
}

/// Poisson-subsampling amplification: solves for `eps_0` and returns
/// `eps' = ln((1 - q) + q e^(eps_0))`.
///
/// The defining equation does not involve the base mechanism's epsilon;
/// `p.epsilon` is accepted for interface symmetry and echoed by callers.
pub fn poisson_amplify(p: PrivacyParams, s: SubsampleParams) -> Result<f64> {
    let _ = p.epsilon;
    let eps0 = poisson_epsilon_zero(s.q, p.delta)?;
    Ok((s.q * eps0.exp_m1()).ln_1p())
}

/// Sampling ratio that stretches a budget across `T` iterations:
/// `q* = min(1, (e^(eps/T) - 1) / (e^eps - 1))`.
pub fn optimal_sampling_ratio(epsilon: f64, steps: u64) -> Result<f64> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::NonPositive {
            name: "epsilon",
            value: epsilon,
        });
    }
    let t = check_steps(steps)?;
    Ok(((epsilon / t).exp_m1() / epsilon.exp_m1()).min(1.0))
}

/// Largest sampling probability reaching a target amplified epsilon:
/// `q* = (e^(eps') - 1) / (e^eps - 1)`.
pub fn optimal_sampling_prob(epsilon_prime: f64, epsilon: f64) -> Result<f64> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::NonPositive {
            name: "epsilon",
            value: epsilon,
        });
    }
    if epsilon_prime.is_nan() || epsilon_prime < 0.0 {
        return Err(Error::NegativeEpsilon(epsilon_prime));
    }
    if epsilon_prime > epsilon {
        return Err(Error::EpsilonPrimeExceedsEpsilon {
            eps_prime: epsilon_prime,
            eps: epsilon,
        });
    }
    Ok(epsilon_prime.exp_m1() / epsilon.exp_m1())
}

/// Parameter-wise composition over `K` groups and `T` iterations:
/// `eps_total = sqrt(2 T ln(1/delta)) sum(eps_i) + T sum(eps_i) (e^max(eps_i) - 1)`,
/// `delta_total = 1 - (1 - delta) (1 - sum(delta_i))^T`.
pub fn compose_paramwise(
    eps_list: &[f64],
    delta_list: &[f64],
    steps: u64,
    delta: f64,
) -> Result<PrivacyParams> {
    if eps_list.len() != delta_list.len() {
        return Err(Error::LengthMismatch {
            eps: eps_list.len(),
            deltas: delta_list.len(),
        });
    }
    if eps_list.is_empty() {
        return Err(Error::InvalidConfig(
            "parameter-wise composition needs at least one group".into(),
        ));
    }
    for (&e, &d) in eps_list.iter().zip(delta_list) {
        PrivacyParams::new(e, d)?;
    }
    let t = check_steps(steps)?;
    check_delta_open(delta)?;
    let sum: f64 = eps_list.iter().sum();
    let max = eps_list.iter().cloned().fold(0.0_f64, f64::max);
    let delta_sum: f64 = delta_list.iter().sum();
    check_composed_delta(delta_sum)?;
    let epsilon = (2.0 * t * (1.0 / delta).ln()).sqrt() * sum + t * sum * max.exp_m1();
    // delta_total = 1 - (1 - delta)(1 - delta_sum)^T, expanded around the
    // group survival probability u = (1 - delta_sum)^T to avoid cancellation
    // (and to keep the K = 1, delta_sum = 0 case bit-exact).
    let one_minus_u = -(t * (-delta_sum).ln_1p()).exp_m1();
    let delta_total = one_minus_u + delta * (1.0 - one_minus_u);
    Ok(PrivacyParams {
        epsilon,
        delta: delta_total,
    })
}

/// Budget for the next step under adaptive allocation: the remaining budget
/// divided by the advanced-composition stretch over the remaining steps.
pub fn adaptive_allocate(
    epsilon_total: f64,
    epsilon_spent: f64,
    step: u64,
    steps: u64,
    delta_star: f64,
) -> Result<f64> {
    if !epsilon_total.is_finite() || epsilon_total <= 0.0 {
        return Err(Error::NonPositive {
            name: "epsilon_total",
            value: epsilon_total,
        });
    }
    if epsilon_spent.is_nan() || epsilon_spent < 0.0 {
        return Err(Error::NegativeEpsilon(epsilon_spent));
    }
    if epsilon_spent > epsilon_total {
        return Err(Error::SpentExceedsBudget {
            spent: epsilon_spent,
            total: epsilon_total,
        });
    }
    check_steps(steps)?;
    if step >= steps {
        return Err(Error::StepBeyondHorizon { step, steps });
    }
    check_delta_open(delta_star)?;
    let remaining = epsilon_total - epsilon_spent;
    if remaining == 0.0 {
        return Ok(0.0);
    }
    let r = (steps - step) as f64;
    let denom = (2.0 * r * (1.0 / delta_star).ln()).sqrt() + r * (remaining / r).exp_m1();
    Ok(remaining / denom)
}

/// Closed-form whole-run bounds for the adaptive mechanism variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AdaptiveBound {
    /// Advanced composition at the worst per-step parameters.
    AdaptiveMax {
        max_epsilon: f64,
        max_delta: f64,
        steps: u64,
        delta_star: f64,
    },
    /// Two-sided bound built from the cap parameters; the per-step term
    /// enters squared, `T (2 ln(...))^2`.
    AdaptiveTwoSided {
        clip_max: f64,
        block_max: usize,
        dim: usize,
        steps: u64,
        delta: f64,
    },
    /// Adaptive-max with the subsampled effective epsilon
    /// `ln(1 + q (e^eps_max - 1))` and `delta' = T q delta_max + delta*`.
    SampledAdaptive {
        max_epsilon: f64,
        max_delta: f64,
        q: f64,
        steps: u64,
        delta_star: f64,
    },
}

/// Evaluate one of the adaptive whole-run bounds.
pub fn adaptive_epsilon_bound(mode: &AdaptiveBound) -> Result<PrivacyParams> {
    match *mode {
        AdaptiveBound::AdaptiveMax {
            max_epsilon,
            max_delta,
            steps,
            delta_star,
        } => compose_advanced(PrivacyParams::new(max_epsilon, max_delta)?, steps, delta_star),
        AdaptiveBound::AdaptiveTwoSided {
            clip_max,
            block_max,
            dim,
            steps,
            delta,
        } => {
            let t = check_steps(steps)? ;
            check_delta_open(delta)?;
            let parts = crate::accountant::epsilon_group(dim, block_max, clip_max)?;
            let stretch = (2.0 * t * (1.0 / delta).ln()).sqrt();
            let eps1 = stretch * parts.eps1 + t * parts.eps1 * parts.eps1;
            let eps2 = stretch * parts.eps2 + t * parts.eps2 * parts.eps2;
            Ok(PrivacyParams {
                epsilon: eps1.min(eps2),
                delta,
            })
        }
        AdaptiveBound::SampledAdaptive {
            max_epsilon,
            max_delta,
            q,
            steps,
            delta_star,
        } => {
            let s = SubsampleParams::new(q)?;
            PrivacyParams::new(max_epsilon, max_delta)?;
            let t = check_steps(steps)?;
            check_delta_open(delta_star)?;
            let effective = if s.q == 1.0 {
                max_epsilon
            } else {
                (s.q * max_epsilon.exp_m1()).ln_1p()
            };
            let epsilon = (2.0 * t * (1.0 / delta_star).ln()).sqrt() * effective
                + t * effective * effective.exp_m1();
            let delta = check_composed_delta(t * s.q * max_delta + delta_star)?;
            Ok(PrivacyParams { epsilon, delta })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with 50-digit arithmetic.
    const ADVANCED_01_100: f64 = 5.850_235_092_944_557_5;
    const ADVANCED_001_1: f64 = 0.048_085_760_792_722_49;
    const PER_STEP_1_100: f64 = 0.020_412_214_119_063_167;
    const PER_STEP_1_1: f64 = 0.153_449_363_522_376_8;
    const SUBSAMPLE_1_Q01: f64 = 0.158_565_078_740_429_1;
    const POISSON_EPS0_A: f64 = 0.105_360_515_657_826_3;
    const POISSON_EPS_PRIME_A: f64 = 0.001_110_494_284_027_163_6;
    const Q_STAR_1_10: f64 = 0.061_207_024_560_089_12;
    const Q_STAR_2_2: f64 = 0.268_941_421_369_995_1;
    const PARAMWISE_EXAMPLE: f64 = 0.980_739_366_052_745_8;
    const ADAPTIVE_MID: f64 = 0.014_520_864_975_526_385;
    const TWO_SIDED_EPS1: f64 = 36.834_479_987_921_31;
    const TWO_SIDED_EPS2: f64 = 3.940_601_745_190_933;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    fn pp(e: f64, d: f64) -> PrivacyParams {
        PrivacyParams::new(e, d).unwrap()
    }

    #[test]
    fn basic_composition() {
        let single = compose_basic(pp(0.5, 1e-6), 1).unwrap();
        assert_eq!((single.epsilon, single.delta), (0.5, 1e-6));
        let ten = compose_basic(pp(0.5, 1e-6), 10).unwrap();
        assert!((ten.epsilon - 5.0).abs() < 1e-12);
        assert!((ten.delta - 1e-5).abs() < 1e-18);
        let null = compose_basic(pp(0.0, 0.0), 1000).unwrap();
        assert_eq!((null.epsilon, null.delta), (0.0, 0.0));
    }

    #[test]
    fn basic_rejects_delta_overflow() {
        assert!(matches!(
            compose_basic(pp(0.1, 0.2), 5),
            Err(Error::DeltaOverflow(_))
        ));
    }

    #[test]
    fn heterogeneous_composition() {
        let c = compose_heterogeneous(&[0.1, 0.2], &[1e-6, 1e-6]).unwrap();
        assert!((c.epsilon - 0.3).abs() < 1e-15);
        assert!((c.delta - 2e-6).abs() < 1e-18);
        let empty = compose_heterogeneous(&[], &[]).unwrap();
        assert_eq!((empty.epsilon, empty.delta), (0.0, 0.0));
        let single = compose_heterogeneous(&[0.7], &[1e-7]).unwrap();
        assert_eq!((single.epsilon, single.delta), (0.7, 1e-7));
        assert!(compose_heterogeneous(&[0.1], &[]).is_err());
    }

    #[test]
    fn advanced_composition_documented_points() {
        let c = compose_advanced(pp(0.1, 1e-6), 100, 1e-5).unwrap();
        assert!(rel_close(c.epsilon, ADVANCED_01_100, 1e-12));
        assert!((c.delta - 1.1e-4).abs() < 1e-16);

        let zero = compose_advanced(pp(0.0, 0.0), 50, 1e-5).unwrap();
        assert_eq!(zero.epsilon, 0.0);
        assert!((zero.delta - 1e-5).abs() < 1e-18);

        let tiny = compose_advanced(pp(0.01, 0.0), 1, 1e-5).unwrap();
        assert!(rel_close(tiny.epsilon, ADVANCED_001_1, 1e-12));
    }

    #[test]
    fn per_step_budget_documented_points() {
        assert!(rel_close(
            per_step_budget(1.0, 100, 1e-5).unwrap(),
            PER_STEP_1_100,
            1e-12
        ));
        assert!(rel_close(
            per_step_budget(1.0, 1, 1e-5).unwrap(),
            PER_STEP_1_1,
            1e-12
        ));
        assert_eq!(per_step_budget(0.0, 10, 1e-5).unwrap(), 0.0);
        assert!(per_step_budget(1e-12, 10, 1e-5).unwrap() < 1e-12);
    }

    #[test]
    fn subsample_amplification() {
        let a = subsample_amplify(pp(1.0, 1e-6), SubsampleParams::new(0.1).unwrap()).unwrap();
        assert!(rel_close(a.epsilon, SUBSAMPLE_1_Q01, 1e-12));
        assert!((a.delta - 1e-7).abs() < 1e-20);

        let id = subsample_amplify(pp(0.7, 1e-6), SubsampleParams::new(1.0).unwrap()).unwrap();
        assert_eq!((id.epsilon, id.delta), (0.7, 1e-6));

        let zero = subsample_amplify(pp(0.0, 1e-6), SubsampleParams::new(0.3).unwrap()).unwrap();
        assert_eq!(zero.epsilon, 0.0);
        assert!((zero.delta - 3e-7).abs() < 1e-20);
    }

    #[test]
    fn poisson_amplification_documented_points() {
        let eps0 = poisson_epsilon_zero(0.01, 0.001).unwrap();
        assert!((eps0 - POISSON_EPS0_A).abs() < 1e-11);
        let eps_prime =
            poisson_amplify(pp(1.0, 0.001), SubsampleParams::new(0.01).unwrap()).unwrap();
        assert!(rel_close(eps_prime, POISSON_EPS_PRIME_A, 1e-9));

        let eps0b = poisson_epsilon_zero(0.5, 0.25).unwrap();
        assert!((eps0b - std::f64::consts::LN_2).abs() < 1e-11);
        let eps_primeb =
            poisson_amplify(pp(1.0, 0.25), SubsampleParams::new(0.5).unwrap()).unwrap();
        assert!(rel_close(eps_primeb, 0.405_465_108_108_164_4, 1e-11));
    }

    #[test]
    fn poisson_amplification_vanishes_with_q() {
        // With delta = q/2 the solved eps0 is constant (ln 2), so the
        // amplified epsilon ln(1 + q) decays to zero with q.
        let mut prev = f64::INFINITY;
        for q in [0.5, 0.1, 0.01, 1e-4, 1e-8] {
            let eps = poisson_amplify(pp(1.0, q / 2.0), SubsampleParams::new(q).unwrap()).unwrap();
            assert!(eps < prev);
            assert!(rel_close(eps, q.ln_1p(), 1e-9), "q={q}: {eps}");
            prev = eps;
        }
        assert!(prev < 1e-7);
    }

    #[test]
    fn poisson_rejects_delta_at_or_above_q() {
        assert!(matches!(
            poisson_epsilon_zero(0.01, 0.01),
            Err(Error::NoFiniteEpsilonZero { .. })
        ));
        assert!(poisson_epsilon_zero(0.01, 0.02).is_err());
    }

    #[test]
    fn optimal_sampling_ratio_documented_points() {
        assert!(rel_close(
            optimal_sampling_ratio(1.0, 10).unwrap(),
            Q_STAR_1_10,
            1e-12
        ));
        assert_eq!(optimal_sampling_ratio(1.0, 1).unwrap(), 1.0);
        assert!(rel_close(
            optimal_sampling_ratio(2.0, 2).unwrap(),
            Q_STAR_2_2,
            1e-12
        ));
    }

    #[test]
    fn optimal_sampling_prob_round_trip() {
        for q in [0.01, 0.1, 0.5, 1.0] {
            let amplified =
                subsample_amplify(pp(1.0, 0.0), SubsampleParams::new(q).unwrap()).unwrap();
            let recovered = optimal_sampling_prob(amplified.epsilon, 1.0).unwrap();
            assert!((recovered - q).abs() < 1e-9, "q {q} gave {recovered}");
        }
        assert_eq!(optimal_sampling_prob(0.5, 0.5).unwrap(), 1.0);
        assert!(optimal_sampling_prob(0.0, 1.0).unwrap() == 0.0);
        assert!(optimal_sampling_prob(2.0, 1.0).is_err());
    }

    #[test]
    fn paramwise_documented_points() {
        let c = compose_paramwise(&[0.1, 0.1], &[0.0, 0.0], 1, 1e-5).unwrap();
        assert!(rel_close(c.epsilon, PARAMWISE_EXAMPLE, 1e-12));
        assert!((c.delta - 1e-5).abs() < 1e-18);

        let null = compose_paramwise(&[0.0], &[0.0], 7, 1e-5).unwrap();
        assert_eq!(null.epsilon, 0.0);
        assert!((null.delta - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn paramwise_singleton_matches_advanced() {
        for (eps, t) in [(0.1, 10u64), (0.5, 3), (1.0, 1)] {
            let pw = compose_paramwise(&[eps], &[0.0], t, 1e-5).unwrap();
            let adv = compose_advanced(pp(eps, 0.0), t, 1e-5).unwrap();
            assert_eq!(pw.epsilon, adv.epsilon);
            assert_eq!(pw.delta, adv.delta);
        }
    }

    #[test]
    fn adaptive_allocation_documented_points() {
        let fresh = adaptive_allocate(1.0, 0.0, 0, 100, 1e-5).unwrap();
        assert!(rel_close(fresh, PER_STEP_1_100, 1e-12));
        assert_eq!(fresh, per_step_budget(1.0, 100, 1e-5).unwrap());

        assert_eq!(adaptive_allocate(1.0, 1.0, 10, 100, 1e-5).unwrap(), 0.0);

        let mid = adaptive_allocate(1.0, 0.5, 50, 100, 1e-5).unwrap();
        assert!(rel_close(mid, ADAPTIVE_MID, 1e-12));
    }

    #[test]
    fn adaptive_allocation_rejects_bad_state() {
        assert!(matches!(
            adaptive_allocate(1.0, 0.0, 100, 100, 1e-5),
            Err(Error::StepBeyondHorizon { .. })
        ));
        assert!(matches!(
            adaptive_allocate(1.0, 1.5, 0, 100, 1e-5),
            Err(Error::SpentExceedsBudget { .. })
        ));
    }

    #[test]
    fn adaptive_max_matches_advanced() {
        let bound = adaptive_epsilon_bound(&AdaptiveBound::AdaptiveMax {
            max_epsilon: 0.1,
            max_delta: 1e-6,
            steps: 100,
            delta_star: 1e-5,
        })
        .unwrap();
        let adv = compose_advanced(pp(0.1, 1e-6), 100, 1e-5).unwrap();
        assert_eq!(bound, adv);
    }

    #[test]
    fn sampled_adaptive_at_q1_reduces_to_max() {
        let sampled = adaptive_epsilon_bound(&AdaptiveBound::SampledAdaptive {
            max_epsilon: 0.1,
            max_delta: 1e-6,
            q: 1.0,
            steps: 100,
            delta_star: 1e-5,
        })
        .unwrap();
        let max = adaptive_epsilon_bound(&AdaptiveBound::AdaptiveMax {
            max_epsilon: 0.1,
            max_delta: 1e-6,
            steps: 100,
            delta_star: 1e-5,
        })
        .unwrap();
        assert_eq!(sampled, max);
    }

    #[test]
    fn two_sided_documented_point() {
        let bound = adaptive_epsilon_bound(&AdaptiveBound::AdaptiveTwoSided {
            clip_max: 1.0,
            block_max: 1,
            dim: 4,
            steps: 1,
            delta: 1e-5,
        })
        .unwrap();
        assert!(rel_close(bound.epsilon, TWO_SIDED_EPS2, 1e-12));
        assert!(bound.epsilon < TWO_SIDED_EPS1);
        assert_eq!(bound.delta, 1e-5);
    }

    #[test]
    fn amplification_strict_below_inverse_e() {
        let q = SubsampleParams::new(0.3).unwrap();
        for k in 0..50 {
            let eps = 0.01 + k as f64 * (10.0 - 0.01) / 49.0;
            let amplified = subsample_amplify(pp(eps, 0.0), q).unwrap();
            assert!(amplified.epsilon < eps);
        }
    }

    #[test]
    fn advanced_beats_basic_at_scale() {
        let p = pp(0.01, 0.0);
        for steps in [10_000u64, 100_000, 1_000_000] {
            let adv = compose_advanced(p, steps, 1e-5).unwrap();
            let basic = compose_basic(p, steps).unwrap();
            assert!(adv.epsilon < basic.epsilon, "failed at T={steps}");
        }
    }
}
