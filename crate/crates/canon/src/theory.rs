//! Analytic model of expected advantages under a probabilistic condition,
//! the inter-vs-mean amplification ratios, the equal-split region check, and
//! an independent Monte-Carlo oracle for all of it.
//!
//! The model: a response satisfies condition c with probability `p`; its
//! success probability is `a_plus` when it satisfies c and `a_minus`
//! otherwise. The group is sorted by a metric that separates the two classes
//! and split so that the top `lambda` fraction forms the plus half. The
//! analytic expectations below are population-level (the within-group
//! satisfier fraction is treated as exactly `p`).

use crate::rng::substream;
use crate::{Error, Result};

/// Parameters of the two-class condition model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionModel {
    /// Probability that a response satisfies the condition.
    pub p: f64,
    /// Success probability given the condition holds.
    pub a_plus: f64,
    /// Success probability given the condition does not hold.
    pub a_minus: f64,
    /// Fraction of the group assigned to the metric-high half.
    pub lambda: f64,
}

impl ConditionModel {
    pub fn new(p: f64, a_plus: f64, a_minus: f64, lambda: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "p must lie strictly inside (0, 1), got {p}"
            )));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must lie strictly inside (0, 1), got {lambda}"
            )));
        }
        for (name, a) in [("a_plus", a_plus), ("a_minus", a_minus)] {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be within [0, 1], got {a}"
                )));
            }
        }
        Ok(Self {
            p,
            a_plus,
            a_minus,
            lambda,
        })
    }
}

/// Expected advantages of condition-satisfying (`*_sat`) and non-satisfying
/// (`*_nonsat`) responses under mean-centering (`dr_*`) and inter-group
/// (`inter_*`) estimation. Also used to carry the matching empirical means
/// and standard errors of the Monte-Carlo oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticAdvantages {
    pub dr_sat: f64,
    pub dr_nonsat: f64,
    pub inter_sat: f64,
    pub inter_nonsat: f64,
}

/// Closed-form expected advantages for the model.
pub fn analytic_advantages(model: &ConditionModel) -> AnalyticAdvantages {
    let ConditionModel {
        p,
        a_plus,
        a_minus,
        lambda,
    } = *model;
    let gap = a_plus - a_minus;
    let (inter_sat, inter_nonsat) = if lambda >= p {
        (gap, (p * (1.0 - lambda)) / (lambda * (1.0 - p)) * -gap)
    } else {
        ((lambda * (1.0 - p)) / (p * (1.0 - lambda)) * gap, -gap)
    };
    AnalyticAdvantages {
        dr_sat: gap * (1.0 - p),
        dr_nonsat: -gap * p,
        inter_sat,
        inter_nonsat,
    }
}

/// |inter| / |mean-centered| amplification for satisfying (`sat`) and
/// non-satisfying (`nonsat`) responses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplificationRatios {
    pub sat: f64,
    pub nonsat: f64,
}

pub fn amplification_ratios(p: f64, lambda: f64) -> AmplificationRatios {
    if lambda >= p {
        AmplificationRatios {
            sat: 1.0 / (1.0 - p),
            nonsat: (1.0 - lambda) / (lambda * (1.0 - p)),
        }
    } else {
        AmplificationRatios {
            sat: lambda / ((1.0 - lambda) * p),
            nonsat: 1.0 / p,
        }
    }
}

/// True iff both amplification ratios exceed 1 at this (p, lambda):
/// `lambda < 1/(2-p)` on the `lambda >= p` branch and
/// `lambda > p/(1+p)` on the `lambda < p` branch.
pub fn amplification_region(p: f64, lambda: f64) -> bool {
    if lambda >= p {
        lambda < 1.0 / (2.0 - p)
    } else {
        lambda > p / (1.0 + p)
    }
}

/// True iff the region check holds for every p in the grid. Over a dense
/// grid this singles out the equal split lambda = 1/2.
pub fn amplification_universal(lambda: f64, p_grid: &[f64]) -> Result<bool> {
    if p_grid.is_empty() {
        return Err(Error::InvalidConfig("empty p grid".into()));
    }
    Ok(p_grid.iter().all(|&p| amplification_region(p, lambda)))
}

/// Empirical counterpart of [`AnalyticAdvantages`] with per-quantity
/// standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub means: AnalyticAdvantages,
    pub std_errors: AnalyticAdvantages,
    pub n_groups: usize,
}

impl McEstimate {
    /// Largest |empirical - analytic| / std_error over the four quantities.
    pub fn max_abs_z(&self, analytic: &AnalyticAdvantages) -> f64 {
        let z = |e: f64, a: f64, se: f64| ((e - a) / se).abs();
        z(self.means.dr_sat, analytic.dr_sat, self.std_errors.dr_sat)
            .max(z(
                self.means.dr_nonsat,
                analytic.dr_nonsat,
                self.std_errors.dr_nonsat,
            ))
            .max(z(
                self.means.inter_sat,
                analytic.inter_sat,
                self.std_errors.inter_sat,
            ))
            .max(z(
                self.means.inter_nonsat,
                analytic.inter_nonsat,
                self.std_errors.inter_nonsat,
            ))
    }
}

/// Per-group simulation output, kept in group order so that the final
/// reduction is a sequential fold and the estimate is bit-identical across
/// the parallel and sequential paths.
#[derive(Debug, Clone, Copy, Default)]
struct GroupStats {
    dr_sat_mean: Option<f64>,
    dr_nonsat_mean: Option<f64>,
    inter_sat_sum: f64,
    inter_sat_n: u32,
    inter_nonsat_sum: f64,
    inter_nonsat_n: u32,
}

fn simulate_group(
    model: &ConditionModel,
    group_size: usize,
    split: usize,
    seed: u64,
    index: u64,
) -> GroupStats {
    let mut rng = substream(seed, 0, index);
    use rand::Rng;

    // Satisfier count: floor(p*G) plus one more with probability frac(p*G),
    // so the expected satisfier fraction is exactly p. Drawing each
    // response's condition independently instead would let the count
    // fluctuate across the split boundary and shift the empirical means by a
    // finite-group-size term that is not a property of the estimators under
    // test.
    let ideal = model.p * group_size as f64;
    let base = ideal.floor();
    let k = base as usize + usize::from(rng.gen_bool(ideal - base));

    // metric supports are disjoint, so sorting stacks satisfiers on top
    let mut responses: Vec<(f64, f64, bool)> = Vec::with_capacity(group_size);
    let mut reward_sum = 0.0;
    for i in 0..group_size {
        let sat = i < k;
        let metric = if sat {
            1.0 + rng.gen::<f64>()
        } else {
            rng.gen::<f64>()
        };
        let accuracy = if sat { model.a_plus } else { model.a_minus };
        let reward = f64::from(rng.gen_bool(accuracy));
        reward_sum += reward;
        responses.push((metric, reward, sat));
    }
    responses.sort_by(|a, b| a.0.total_cmp(&b.0));

    let group_mean = reward_sum / group_size as f64;
    let boundary = group_size - split;
    let mut plus_sum = 0.0;
    let mut minus_sum = 0.0;
    for (i, &(_, reward, _)) in responses.iter().enumerate() {
        if i >= boundary {
            plus_sum += reward;
        } else {
            minus_sum += reward;
        }
    }
    let mean_plus = plus_sum / split as f64;
    let mean_minus = minus_sum / (group_size - split) as f64;

    let mut stats = GroupStats::default();
    let mut dr_sat_sum = 0.0;
    let mut dr_nonsat_sum = 0.0;
    for (i, &(_, reward, sat)) in responses.iter().enumerate() {
        let dr = reward - group_mean;
        let inter = if i >= boundary {
            reward - mean_minus
        } else {
            reward - mean_plus
        };
        if sat {
            dr_sat_sum += dr;
            stats.inter_sat_sum += inter;
            stats.inter_sat_n += 1;
        } else {
            dr_nonsat_sum += dr;
            stats.inter_nonsat_sum += inter;
            stats.inter_nonsat_n += 1;
        }
    }
    if stats.inter_sat_n > 0 {
        stats.dr_sat_mean = Some(dr_sat_sum / f64::from(stats.inter_sat_n));
    }
    if stats.inter_nonsat_n > 0 {
        stats.dr_nonsat_mean = Some(dr_nonsat_sum / f64::from(stats.inter_nonsat_n));
    }
    stats
}

/// Running mean/variance over per-group class means.
#[derive(Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Pooled mean over responses with a cluster-robust standard error that
/// treats each group as one cluster.
#[derive(Default)]
struct Pooled {
    sum: f64,
    n: f64,
    sum_sq: f64,
    sum_cross: f64,
    n_sq: f64,
}

impl Pooled {
    fn push(&mut self, group_sum: f64, group_n: u32) {
        let gn = f64::from(group_n);
        self.sum += group_sum;
        self.n += gn;
        self.sum_sq += group_sum * group_sum;
        self.sum_cross += group_sum * gn;
        self.n_sq += gn * gn;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    fn std_error(&self) -> f64 {
        if self.n < 2.0 {
            return f64::INFINITY;
        }
        let m = self.mean();
        let ss = self.sum_sq - 2.0 * m * self.sum_cross + m * m * self.n_sq;
        ss.max(0.0).sqrt() / self.n
    }
}

fn aggregate(stats: &[GroupStats]) -> McEstimate {
    let mut dr_sat = Welford::default();
    let mut dr_nonsat = Welford::default();
    let mut inter_sat = Pooled::default();
    let mut inter_nonsat = Pooled::default();
    for s in stats {
        if let Some(m) = s.dr_sat_mean {
            dr_sat.push(m);
        }
        if let Some(m) = s.dr_nonsat_mean {
            dr_nonsat.push(m);
        }
        if s.inter_sat_n > 0 {
            inter_sat.push(s.inter_sat_sum, s.inter_sat_n);
        }
        if s.inter_nonsat_n > 0 {
            inter_nonsat.push(s.inter_nonsat_sum, s.inter_nonsat_n);
        }
    }
    McEstimate {
        means: AnalyticAdvantages {
            dr_sat: dr_sat.mean,
            dr_nonsat: dr_nonsat.mean,
            inter_sat: inter_sat.mean(),
            inter_nonsat: inter_nonsat.mean(),
        },
        std_errors: AnalyticAdvantages {
            dr_sat: dr_sat.std_error(),
            dr_nonsat: dr_nonsat.std_error(),
            inter_sat: inter_sat.std_error(),
            inter_nonsat: inter_nonsat.std_error(),
        },
        n_groups: stats.len(),
    }
}

fn oracle_split(model: &ConditionModel, group_size: usize, n_groups: usize) -> Result<usize> {
    if n_groups == 0 {
        return Err(Error::InvalidConfig("n_groups must be at least 1".into()));
    }
    if group_size < 2 {
        return Err(Error::InvalidConfig(format!(
            "group size must be at least 2, got {group_size}"
        )));
    }
    if model.lambda == 0.5 {
        if !group_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "group size must be even for the equal split, got {group_size}"
            )));
        }
        return Ok(group_size / 2);
    }
    let split = (model.lambda * group_size as f64).round() as usize;
    Ok(split.clamp(1, group_size - 1))
}

/// Monte-Carlo estimate of the model's expected advantages.
///
/// Each group draws its satisfier count as described in [`simulate_group`],
/// gives satisfiers metrics in (1, 2) and non-satisfiers metrics in (0, 1),
/// draws Bernoulli rewards, sorts by metric, and splits the top
/// `round(lambda * G)` responses into the plus half. Mean-centered
/// advantages are averaged per group and then across groups; inter-group
/// advantages are pooled across responses with cluster-robust standard
/// errors. Deterministic given the seed, including across the parallel and
/// sequential paths.
pub fn mc_oracle(
    model: &ConditionModel,
    group_size: usize,
    n_groups: usize,
    seed: u64,
) -> Result<McEstimate> {
    let split = oracle_split(model, group_size, n_groups)?;
    #[cfg(feature = "parallel")]
    let stats: Vec<GroupStats> = {
        use rayon::prelude::*;
        (0..n_groups as u64)
            .into_par_iter()
            .map(|i| simulate_group(model, group_size, split, seed, i))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let stats: Vec<GroupStats> = (0..n_groups as u64)
        .map(|i| simulate_group(model, group_size, split, seed, i))
        .collect();
    Ok(aggregate(&stats))
}

/// Always-sequential variant of [`mc_oracle`]. Returns bit-identical output;
/// kept public as the reference path for the benchmark suite and for builds
/// without the `parallel` feature comparison.
pub fn mc_oracle_seq(
    model: &ConditionModel,
    group_size: usize,
    n_groups: usize,
    seed: u64,
) -> Result<McEstimate> {
    let split = oracle_split(model, group_size, n_groups)?;
    let stats: Vec<GroupStats> = (0..n_groups as u64)
        .map(|i| simulate_group(model, group_size, split, seed, i))
        .collect();
    Ok(aggregate(&stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn analytic_reference_point() {
        let model = ConditionModel::new(0.5, 0.8, 0.2, 0.5).unwrap();
        let adv = analytic_advantages(&model);
        assert!(close(adv.dr_sat, 0.3));
        assert!(close(adv.inter_sat, 0.6));
        assert!(close(adv.dr_nonsat, -0.3));
        assert!(close(adv.inter_nonsat, -0.6));
    }

    #[test]
    fn degenerate_gap_gives_zeroes() {
        let model = ConditionModel::new(0.4, 0.6, 0.6, 0.5).unwrap();
        let adv = analytic_advantages(&model);
        assert_eq!(adv.dr_sat, 0.0);
        assert_eq!(adv.dr_nonsat, 0.0);
        assert_eq!(adv.inter_sat, 0.0);
        assert_eq!(adv.inter_nonsat, 0.0);
    }

    #[test]
    fn inter_branches_agree_at_lambda_equals_p() {
        for p in [0.2, 0.5, 0.8] {
            let below = analytic_advantages(&ConditionModel::new(p, 0.9, 0.1, p - 1e-9).unwrap());
            let above = analytic_advantages(&ConditionModel::new(p, 0.9, 0.1, p + 1e-9).unwrap());
            assert!((below.inter_sat - above.inter_sat).abs() < 1e-6);
            assert!((below.inter_sat - 0.8).abs() < 1e-6);
        }
    }

    #[test]
    fn ratio_reference_points() {
        let r = amplification_ratios(0.5, 0.5);
        assert!(close(r.sat, 2.0) && close(r.nonsat, 2.0));

        let r = amplification_ratios(0.3, 0.5);
        assert!(close(r.sat, 1.0 / 0.7) && close(r.nonsat, 1.0 / 0.7));

        let r = amplification_ratios(0.3, 0.6);
        assert!(close(r.sat, 1.0 / 0.7));
        assert!(close(r.nonsat, 0.4 / 0.42));
    }

    #[test]
    fn region_reference_points() {
        for i in 1..100 {
            assert!(amplification_region(i as f64 / 100.0, 0.5));
        }
        assert!(!amplification_region(0.3, 0.6));
        assert!(!amplification_region(0.7, 0.4));
    }

    #[test]
    fn universality_singles_out_the_equal_split() {
        let grid: Vec<f64> = (1..20).map(|i| i as f64 * 0.05).collect();
        assert!(amplification_universal(0.5, &grid).unwrap());
        assert!(!amplification_universal(0.45, &grid).unwrap());
        assert!(!amplification_universal(0.55, &grid).unwrap());
        assert!(amplification_universal(0.5, &[]).is_err());
    }

    #[test]
    fn ratios_match_analytic_advantage_quotients() {
        for &p in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            for &lambda in &[0.2, 0.4, 0.5, 0.6, 0.8] {
                for &(ap, am) in &[(0.8, 0.2), (0.6, 0.1), (0.3, 0.9)] {
                    let model = ConditionModel::new(p, ap, am, lambda).unwrap();
                    let adv = analytic_advantages(&model);
                    let r = amplification_ratios(p, lambda);
                    assert!(
                        ((adv.inter_sat / adv.dr_sat).abs() - r.sat).abs() < 1e-12,
                        "sat ratio mismatch at p={p} lambda={lambda}"
                    );
                    assert!(
                        ((adv.inter_nonsat / adv.dr_nonsat).abs() - r.nonsat).abs() < 1e-12,
                        "nonsat ratio mismatch at p={p} lambda={lambda}"
                    );
                }
            }
        }
    }

    #[test]
    fn oracle_is_deterministic_and_matches_sequential_path() {
        let model = ConditionModel::new(0.4, 0.8, 0.2, 0.5).unwrap();
        let a = mc_oracle(&model, 8, 500, 11).unwrap();
        let b = mc_oracle(&model, 8, 500, 11).unwrap();
        let c = mc_oracle_seq(&model, 8, 500, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn oracle_converges_to_analytic_values() {
        for g in [4usize, 8, 16] {
            let model = ConditionModel::new(0.5, 0.8, 0.2, 0.5).unwrap();
            let est = mc_oracle(&model, g, 40_000, 3).unwrap();
            let ana = analytic_advantages(&model);
            assert!(
                est.max_abs_z(&ana) < 4.0,
                "G={g}: z={} means={:?}",
                est.max_abs_z(&ana),
                est.means
            );
        }
    }

    #[test]
    fn oracle_zero_gap_estimates_vanish() {
        let model = ConditionModel::new(0.5, 0.5, 0.5, 0.5).unwrap();
        let est = mc_oracle(&model, 16, 20_000, 5).unwrap();
        for v in [
            est.means.dr_sat,
            est.means.dr_nonsat,
            est.means.inter_sat,
            est.means.inter_nonsat,
        ] {
            assert!(v.abs() < 0.01, "expected ~0, got {v}");
        }
    }

    #[test]
    fn oracle_input_validation() {
        let model = ConditionModel::new(0.5, 0.8, 0.2, 0.5).unwrap();
        assert!(mc_oracle(&model, 16, 0, 0).is_err());
        assert!(mc_oracle(&model, 15, 100, 0).is_err());
        assert!(ConditionModel::new(0.0, 0.8, 0.2, 0.5).is_err());
        assert!(ConditionModel::new(0.5, 0.8, 0.2, 1.0).is_err());
        assert!(ConditionModel::new(0.5, 1.2, 0.2, 0.5).is_err());
    }

    #[test]
    fn oracle_supports_unequal_splits() {
        // lambda away from 1/2 still follows the analytic branches
        let model = ConditionModel::new(0.25, 0.9, 0.1, 0.75).unwrap();
        let est = mc_oracle(&model, 16, 40_000, 9).unwrap();
        let ana = analytic_advantages(&model);
        assert!((est.means.dr_sat - ana.dr_sat).abs() < 0.02);
        assert!((est.means.inter_sat - ana.inter_sat).abs() < 0.02);
    }
}
