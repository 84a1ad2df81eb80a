//! Seeded Monte Carlo experiments over the corruption pipeline.
//!
//! Trials are independent tasks keyed by (master_seed, trial index) and run
//! in parallel; results are collected in trial order, so output is
//! bit-identical regardless of worker count. Per-trial error is computed
//! exactly (weights of misclassified support points) — the only randomness
//! is over transcripts and learner coins.
//!
//! For the pair class the projected graph on an all-0-labeled sample is
//! always a star at the all-zero vertex (two distinct pair-singleton
//! patterns are at Hamming distance >= 2), so predictions have closed
//! forms evaluated here instead of rebuilding the graph per test point.
//! The fast path is checked against the generic graph predictor in tests.

use crate::adversary::{run_adaptive, run_oblivious, Adversary, Distribution, LabeledExample};
use crate::domain::{
    build_class_majority_lb, build_class_majority_lb_rand, build_class_oig_lb, Hypothesis, Point,
    PointKind,
};
use crate::error::{Error, Result};
use crate::learners::{
    erm_first_consistent, erm_random_consistent, majority_vote, scheme_bagging, scheme_hanneke,
    scheme_majority_of_three, worst_consistent_error, ErmRule, SubsampleScheme,
};
use crate::oig::{build_oig, loo_errors, min_max_out_degree_orientation, OrientationRule};
use crate::pattern::BitPattern;
use crate::rng::{stage_stream, substream, trial_seed, Stage};
use rand::Rng;
use rayon::prelude::*;
use std::fmt::Write as _;

const Z_99: f64 = 2.5758293035489004;
/// Path element for per-experiment (not per-trial) streams, e.g. bootstrap
/// subsample schemes.
const SCHEME_STREAM: u64 = u64::MAX;

/// Mean error with Monte Carlo uncertainty over trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub mean: f64,
    pub trials: u64,
    pub std_error: f64,
    pub ci99_low: f64,
    pub ci99_high: f64,
}

impl ErrorEstimate {
    pub fn from_samples(samples: &[f64]) -> ErrorEstimate {
        let trials = samples.len() as u64;
        assert!(trials > 0, "estimate needs at least one sample");
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = if trials > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0)
        } else {
            0.0
        };
        let std_error = (var / trials as f64).sqrt();
        ErrorEstimate {
            mean,
            trials,
            std_error,
            ci99_low: (mean - Z_99 * std_error).max(0.0),
            ci99_high: (mean + Z_99 * std_error).min(1.0),
        }
    }

    fn exact(value: f64) -> ErrorEstimate {
        ErrorEstimate {
            mean: value,
            trials: 1,
            std_error: 0.0,
            ci99_low: value,
            ci99_high: value,
        }
    }
}

/// How [`estimate_error`] evaluates a predictor against the target.
#[derive(Debug, Clone, Copy)]
pub enum ErrorMode {
    /// Sum the weights of misclassified support points.
    Exact,
    /// Monte Carlo over fresh test draws.
    Sampled { draws: u64 },
}

/// Error of a prediction rule against the target under a distribution.
pub fn estimate_error(
    predict: &dyn Fn(&Point) -> bool,
    dist: &Distribution,
    target: &Hypothesis,
    mode: ErrorMode,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> ErrorEstimate {
    match mode {
        ErrorMode::Exact => {
            let err: f64 = dist
                .support()
                .iter()
                .zip(dist.weights())
                .filter(|(p, _)| predict(p) != target.eval(p))
                .map(|(_, &w)| w)
                .sum();
            ErrorEstimate::exact(err)
        }
        ErrorMode::Sampled { draws } => {
            let samples: Vec<f64> = (0..draws)
                .map(|_| {
                    let p = dist.sample(rng);
                    f64::from(predict(&p) != target.eval(&p))
                })
                .collect();
            ErrorEstimate::from_samples(&samples)
        }
    }
}

/// p-value of the chi-square test for uniformity over the given cells.
pub fn chi_square_uniform_p(counts: &[u64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let cells = counts.len();
    assert!(cells > 1);
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / cells as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

/// Occurrence summary of an all-0-labeled sample over the pair class.
#[derive(Debug, Clone)]
pub struct PairCounts {
    pub pairs: usize,
    /// Occurrences of either point of pair j.
    pub counts: Vec<usize>,
    /// Pairs occurring exactly once (the star's leaves).
    pub leaves: usize,
    /// Smallest point id over the leaves' single occurrences.
    pub min_leaf_id: Option<usize>,
}

pub fn pair_counts(pairs: usize, sample: &[LabeledExample]) -> Result<PairCounts> {
    let mut counts = vec![0usize; pairs];
    let mut leaf_id = vec![usize::MAX; pairs];
    for ex in sample {
        if ex.label {
            return Err(Error::InvalidParameters(
                "pair-class fast path requires an all-0-labeled sample".into(),
            ));
        }
        let j = match ex.point.kind {
            PointKind::X(j) | PointKind::Y(j) if j < pairs => j,
            _ => {
                return Err(Error::DomainMismatch {
                    point_id: ex.point.id,
                    reason: "not a pair-class point".into(),
                })
            }
        };
        counts[j] += 1;
        leaf_id[j] = leaf_id[j].min(ex.point.id);
    }
    let mut leaves = 0;
    let mut min_leaf_id = None;
    for j in 0..pairs {
        if counts[j] == 1 {
            leaves += 1;
            min_leaf_id = Some(min_leaf_id.map_or(leaf_id[j], |m: usize| m.min(leaf_id[j])));
        }
    }
    Ok(PairCounts {
        pairs,
        counts,
        leaves,
        min_leaf_id,
    })
}

/// Closed-form graph prediction probability at test point x_i for the pair
/// class: with the test added, the star gains the test's leaf; the min-max
/// solver tails the earliest-id leaf edge at the center, and the uniform
/// optimal orientation tails any one edge (or none) there.
pub fn pair_class_predict_prob(counts: &PairCounts, test_x: usize, rule: OrientationRule) -> f64 {
    assert!(test_x < counts.pairs);
    if counts.counts[test_x] > 0 {
        // the 1-completion is not a realized pattern: forced prediction 0
        return 0.0;
    }
    match rule {
        OrientationRule::MinMax => {
            let blocked = counts.min_leaf_id.is_some_and(|m| m < test_x);
            f64::from(!blocked)
        }
        OrientationRule::UniformOptimal => 1.0 / (counts.leaves as f64 + 2.0),
    }
}

/// Exact error under the uniform x-distribution of the pair-class graph
/// predictor given the training occurrences.
pub fn pair_class_exact_error(counts: &PairCounts, rule: OrientationRule) -> f64 {
    let total: f64 = (0..counts.pairs)
        .map(|i| pair_class_predict_prob(counts, i, rule))
        .sum();
    total / counts.pairs as f64
}

/// One per-trial output row.
#[derive(Debug, Clone)]
pub struct TrialRow {
    pub trial: u64,
    pub seed: u64,
    pub values: Vec<f64>,
}

/// Experiment output: per-trial rows plus a summary.
#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: String,
    /// Names for `TrialRow::values`, in order.
    pub value_columns: Vec<&'static str>,
    pub rows: Vec<TrialRow>,
    pub summary: Vec<(String, String)>,
    pub estimate: ErrorEstimate,
}

impl Report {
    fn build(
        experiment: &str,
        value_columns: Vec<&'static str>,
        rows: Vec<TrialRow>,
        error_column: &str,
        mut summary: Vec<(String, String)>,
    ) -> Report {
        let idx = value_columns
            .iter()
            .position(|c| *c == error_column)
            .expect("error column present");
        let samples: Vec<f64> = rows.iter().map(|r| r.values[idx]).collect();
        let estimate = ErrorEstimate::from_samples(&samples);
        let mut prefix = vec![
            ("mean".to_string(), format!("{}", estimate.mean)),
            ("se".to_string(), format!("{}", estimate.std_error)),
            ("ci99_low".to_string(), format!("{}", estimate.ci99_low)),
            ("ci99_high".to_string(), format!("{}", estimate.ci99_high)),
            ("trials".to_string(), format!("{}", estimate.trials)),
        ];
        prefix.append(&mut summary);
        Report {
            experiment: experiment.to_string(),
            value_columns,
            rows,
            summary: prefix,
            estimate,
        }
    }

    /// Values of a named per-trial column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.value_columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r.values[idx]).collect())
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// CSV: one row per trial, then a `summary` row of key=value fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        write!(out, "trial,seed").unwrap();
        for c in &self.value_columns {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
        for r in &self.rows {
            write!(out, "{},{}", r.trial, r.seed).unwrap();
            for v in &r.values {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        write!(out, "summary").unwrap();
        for (k, v) in &self.summary {
            write!(out, ",{k}={v}").unwrap();
        }
        out.push('\n');
        out
    }
}

fn run_trials<F>(trials: u64, seed: u64, f: F) -> Result<Vec<TrialRow>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            Ok(TrialRow {
                trial,
                seed: trial_seed(seed, trial),
                values: f(trial)?,
            })
        })
        .collect()
}

fn exact_hypothesis_error(h: &Hypothesis, dist: &Distribution, target: &Hypothesis) -> f64 {
    dist.support()
        .iter()
        .zip(dist.weights())
        .filter(|(p, _)| h.eval(p) != target.eval(p))
        .map(|(_, &w)| w)
        .sum()
}

fn ceil_ratio(num: f64, den: f64) -> Result<usize> {
    if !den.is_finite() || den <= 0.0 {
        return Err(Error::InvalidParameters(format!(
            "derived ratio denominator {den} must be positive"
        )));
    }
    Ok((num / den).ceil() as usize)
}

/// Pair-class lower bound: n clean draws over 2n pairs, the pairing
/// adversary mirrors each clean point (m=n), and the randomized graph
/// predictor faces a fresh uniform test draw. Per-trial error is exact:
/// the graph on train+test has at most one edge, mispredicted with
/// probability 1/2.
pub fn exp_oig_lower_bound(n: usize, trials: u64, seed: u64) -> Result<Report> {
    if n < 1 || trials < 1 {
        return Err(Error::InvalidParameters("need n >= 1, trials >= 1".into()));
    }
    let class = build_class_oig_lb(2 * n)?;
    let dist = Distribution::uniform_x(class.domain());
    let rows = run_trials(trials, seed, |trial| {
        let t = run_adaptive(&dist, &class, &Adversary::Pairing, n, n, seed, trial)?;
        let pc = pair_counts(2 * n, &t.shuffled)?;
        let unseen = pc.counts.iter().filter(|&&c| c == 0).count();
        let error = pair_class_exact_error(&pc, OrientationRule::UniformOptimal);
        let baseline = erm_first_consistent(&class, &t.shuffled)
            .map(|h| exact_hypothesis_error(&h, &dist, &class.target()))?;
        Ok(vec![
            unseen as f64,
            pc.leaves as f64,
            baseline,
            error,
        ])
    })?;
    let closed_form = (1.0 - 1.0 / (2.0 * n as f64)).powi(n as i32) / 2.0;
    Ok(Report::build(
        "oig_lb",
        vec!["unseen", "leaves", "baseline_error", "error"],
        rows,
        "error",
        vec![
            ("n".into(), format!("{n}")),
            ("m".into(), format!("{n}")),
            ("closed_form".into(), format!("{closed_form}")),
        ],
    ))
}

/// Generalized pair-class lower bound: r = ceil(c*n/ln(n/k)) pairs, the
/// coupon-pairing adversary pins every seen pair shut (m=r), and the
/// summary reports the error ratio against k*ln(n/k)/n.
pub fn exp_oig_lower_bound_general(
    n: usize,
    k: usize,
    c: f64,
    trials: u64,
    seed: u64,
) -> Result<Report> {
    if k < 1 || (k as f64) > n as f64 / c {
        return Err(Error::InvalidParameters(format!(
            "need 1 <= k <= n/c, got n={n}, k={k}, c={c}"
        )));
    }
    let log_ratio = (n as f64 / k as f64).ln();
    let r = ceil_ratio(c * n as f64, log_ratio)?;
    let class = build_class_oig_lb(r)?;
    let dist = Distribution::uniform_x(class.domain());
    let adversary = Adversary::CouponPairing { r, m: r };
    let rows = run_trials(trials, seed, |trial| {
        let t = run_adaptive(&dist, &class, &adversary, n, r, seed, trial)?;
        let pc = pair_counts(r, &t.shuffled)?;
        let unseen = pc.counts.iter().filter(|&&c| c == 0).count();
        let error = pair_class_exact_error(&pc, OrientationRule::UniformOptimal);
        let baseline = erm_first_consistent(&class, &t.shuffled)
            .map(|h| exact_hypothesis_error(&h, &dist, &class.target()))?;
        Ok(vec![
            unseen as f64,
            f64::from(unseen >= k),
            baseline,
            error,
        ])
    })?;
    let target_rate = k as f64 * log_ratio / n as f64;
    let report = Report::build(
        "oig_lb_general",
        vec!["unseen", "missing_ge_k", "baseline_error", "error"],
        rows,
        "error",
        vec![
            ("n".into(), format!("{n}")),
            ("k".into(), format!("{k}")),
            ("c".into(), format!("{c}")),
            ("r".into(), format!("{r}")),
            ("target_rate".into(), format!("{target_rate}")),
        ],
    );
    let mut report = report;
    let ratio = report.estimate.mean / target_rate;
    let frac = report
        .column("missing_ge_k")
        .unwrap()
        .iter()
        .sum::<f64>()
        / trials as f64;
    report.summary.push(("ratio".into(), format!("{ratio}")));
    report
        .summary
        .push(("frac_missing_ge_k".into(), format!("{frac}")));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeId {
    MajorityOfThree,
    Bagging,
    Hanneke,
}

impl SchemeId {
    pub fn parse(s: &str) -> Option<SchemeId> {
        match s {
            "majority_of_three" => Some(SchemeId::MajorityOfThree),
            "bagging" => Some(SchemeId::Bagging),
            "hanneke" => Some(SchemeId::Hanneke),
            _ => None,
        }
    }
}

/// Builds the scheme for dataset size `n`. Bagging draws its bootstrap
/// lists from an experiment-level stream, fixed before any data exists.
pub fn build_scheme(id: SchemeId, n: usize, delta: f64, seed: u64) -> Result<SubsampleScheme> {
    match id {
        SchemeId::MajorityOfThree => scheme_majority_of_three(n),
        SchemeId::Hanneke => scheme_hanneke(n),
        SchemeId::Bagging => {
            let k = crate::learners::default_bagging_k(n, delta);
            let mut rng = substream(seed, &[SCHEME_STREAM]);
            scheme_bagging(n, k, &mut rng)
        }
    }
}

/// Smallest m with m * t(n+m) >= 2n, where t(N) is the scheme's minimum
/// distinct-index count at dataset size N.
pub fn derive_m(n: usize, scheme: SchemeId, delta: f64, seed: u64) -> Result<usize> {
    for m in 1..=4 * n {
        let s = build_scheme(scheme, n + m, delta, seed)?;
        if s.min_distinct >= 1 && m * s.min_distinct >= 2 * n {
            return Ok(m);
        }
    }
    Err(Error::InvalidParameters(format!(
        "no corruption budget m <= 4n satisfies m*t(n+m) >= 2n at n={n}"
    )))
}

#[derive(Debug, Clone)]
pub struct MajorityLbParams {
    pub n: usize,
    pub d: usize,
    pub c: f64,
    /// `Some(K)` selects the K-copies class and is required for the
    /// random-consistent ERM claim.
    pub copies: Option<usize>,
    pub scheme: SchemeId,
    pub erm: ErmRule,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    /// Overrides the derived corruption budget (e.g. 0 disables the
    /// adversary).
    pub m_override: Option<usize>,
}

/// Majority-voting lower bound: subset-missing adversary against a voter
/// over index-based subsamples. Reports the exact committee error per
/// trial plus the worst consistent hypothesis on the same dataset.
pub fn exp_majority_lower_bound(p: &MajorityLbParams) -> Result<Report> {
    if p.d < 1 || p.n <= p.d || p.trials < 1 {
        return Err(Error::InvalidParameters(format!(
            "need n > d >= 1 and trials >= 1, got n={}, d={}",
            p.n, p.d
        )));
    }
    let r = ceil_ratio(p.c * p.n as f64, (p.n as f64 / p.d as f64).ln())?;
    if r < p.d {
        return Err(Error::InvalidParameters(format!("derived r={r} < d={}", p.d)));
    }
    let class = match p.copies {
        None => build_class_majority_lb(r, p.d)?,
        Some(k) => build_class_majority_lb_rand(r, p.d, k)?,
    };
    let dist = Distribution::uniform_x(class.domain());
    let m = match p.m_override {
        Some(m) => m,
        None => derive_m(p.n, p.scheme, p.delta, p.seed)?,
    };
    let big_n = p.n + m;
    let scheme = build_scheme(p.scheme, big_n, p.delta, p.seed)?;
    let adversary = Adversary::SubsetMissing { r, d: p.d, m };
    let target = class.target();
    let rows = run_trials(p.trials, p.seed, |trial| {
        let t = run_adaptive(&dist, &class, &adversary, p.n, m, p.seed, trial)?;
        let mut rng = stage_stream(p.seed, trial, Stage::Learner);
        let committee = majority_vote(&class, &scheme, p.erm, &t.shuffled, &mut rng)?;
        let error: f64 = dist
            .support()
            .iter()
            .zip(dist.weights())
            .filter(|(x, _)| committee.predict(x) != target.eval(x))
            .map(|(_, &w)| w)
            .sum();
        let missing_present = f64::from(matches!(
            t.corrupted.first().map(|ex| ex.point.kind),
            Some(PointKind::Y(_))
        ));
        // subsample lists holding at least one adversarial example
        let corrupted_position: Vec<bool> = t.permutation.iter().map(|&j| j >= p.n).collect();
        let hit_lists = scheme
            .lists
            .iter()
            .filter(|l| l.iter().any(|&i| corrupted_position[i]))
            .count();
        let worst = worst_consistent_error(&class, &t.shuffled, &dist)?;
        Ok(vec![missing_present, hit_lists as f64, worst, error])
    })?;
    let rate = p.d as f64 * (p.n as f64 / p.d as f64).ln() / p.n as f64;
    let mut report = Report::build(
        "majority_lb",
        vec!["missing_present", "hit_lists", "worst_erm_error", "error"],
        rows,
        "error",
        vec![
            ("n".into(), format!("{}", p.n)),
            ("d".into(), format!("{}", p.d)),
            ("m".into(), format!("{m}")),
            ("r".into(), format!("{r}")),
            ("d_over_r".into(), format!("{}", p.d as f64 / r as f64)),
            ("k_lists".into(), format!("{}", scheme.lists.len())),
        ],
    );
    let ratio = report.estimate.mean / rate;
    report.summary.push(("ratio".into(), format!("{ratio}")));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErmUbClass {
    /// Subset-indicator class with the subset-missing adversary.
    Majority,
    /// Pair class with the pairing adversary (m=n).
    Pairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErmUbMode {
    WorstConsistent,
    First,
    Random,
}

#[derive(Debug, Clone)]
pub struct ErmUbParams {
    pub n: usize,
    pub d: usize,
    pub c: f64,
    pub class: ErmUbClass,
    pub mode: ErmUbMode,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    /// Corruption budget for the subset-missing adversary (default d).
    pub m_override: Option<usize>,
}

/// ERM upper bound: per trial, the exact error of the chosen ERM flavor,
/// the closed-form per-trial ceiling, and the realizable-PAC-style bound
/// 100(d*ln(n/d) + ln(1/delta))/n for the summary comparison.
pub fn exp_erm_upper_bound(p: &ErmUbParams) -> Result<Report> {
    if p.d < 1 || p.n <= p.d || p.trials < 1 {
        return Err(Error::InvalidParameters(format!(
            "need n > d >= 1 and trials >= 1, got n={}, d={}",
            p.n, p.d
        )));
    }
    let (class, adversary, m) = match p.class {
        ErmUbClass::Majority => {
            let r = ceil_ratio(p.c * p.n as f64, (p.n as f64 / p.d as f64).ln())?;
            let m = p.m_override.unwrap_or(p.d);
            (
                build_class_majority_lb(r, p.d)?,
                Adversary::SubsetMissing { r, d: p.d, m },
                m,
            )
        }
        ErmUbClass::Pairs => (
            build_class_oig_lb(2 * p.n)?,
            Adversary::Pairing,
            p.m_override.unwrap_or(p.n),
        ),
    };
    if matches!(p.class, ErmUbClass::Pairs) && m != p.n {
        return Err(Error::InvalidParameters(
            "the pairing adversary forces m = n".into(),
        ));
    }
    let dist = Distribution::uniform_x(class.domain());
    let x_count = class.domain().x_count();
    let rows = run_trials(p.trials, p.seed, |trial| {
        let t = run_adaptive(&dist, &class, &adversary, p.n, m, p.seed, trial)?;
        let error = match p.mode {
            ErmUbMode::WorstConsistent => worst_consistent_error(&class, &t.shuffled, &dist)?,
            ErmUbMode::First => {
                let h = erm_first_consistent(&class, &t.shuffled)?;
                exact_hypothesis_error(&h, &dist, &class.target())
            }
            ErmUbMode::Random => {
                let mut rng = stage_stream(p.seed, trial, Stage::Learner);
                let h = erm_random_consistent(&class, &t.shuffled, &mut rng)?;
                exact_hypothesis_error(&h, &dist, &class.target())
            }
        };
        // independent closed-form ceiling: some non-target hypothesis stays
        // consistent iff enough of its footprint is absent from the dataset
        let ceiling = match p.class {
            ErmUbClass::Majority => {
                let mut seen = vec![false; x_count];
                for ex in &t.shuffled {
                    if let PointKind::X(i) = ex.point.kind {
                        seen[i] = true;
                    }
                }
                let miss = seen.iter().filter(|&&s| !s).count();
                if miss >= p.d {
                    p.d as f64 / x_count as f64
                } else {
                    0.0
                }
            }
            ErmUbClass::Pairs => {
                let pc = pair_counts(x_count, &t.shuffled)?;
                if pc.counts.contains(&0) {
                    1.0 / x_count as f64
                } else {
                    0.0
                }
            }
        };
        Ok(vec![ceiling, error])
    })?;
    let bound =
        100.0 * (p.d as f64 * (p.n as f64 / p.d as f64).ln() + (1.0 / p.delta).ln()) / p.n as f64;
    let mut report = Report::build(
        "erm_ub",
        vec!["ceiling", "error"],
        rows,
        "error",
        vec![
            ("n".into(), format!("{}", p.n)),
            ("d".into(), format!("{}", p.d)),
            ("m".into(), format!("{m}")),
            ("bound".into(), format!("{bound}")),
        ],
    );
    let max = report
        .column("error")
        .unwrap()
        .into_iter()
        .fold(0.0f64, f64::max);
    report.summary.push(("max_error".into(), format!("{max}")));
    report
        .summary
        .push(("within_bound".into(), format!("{}", max <= bound)));
    Ok(report)
}

/// Oblivious upper bound: the adversary commits to y_1..y_m before the
/// clean draw; the deterministic graph predictor is measured against
/// d/(n+1), and each trial's leave-one-out identity is audited on the
/// shared train graph.
pub fn exp_oblivious_oig_upper_bound(
    n: usize,
    m: usize,
    trials: u64,
    seed: u64,
) -> Result<Report> {
    if n < 1 || trials < 1 {
        return Err(Error::InvalidParameters("need n >= 1, trials >= 1".into()));
    }
    let pairs = 2 * n;
    if m >= pairs {
        return Err(Error::InvalidParameters(format!(
            "need m < 2n distinct committed points, got m={m}"
        )));
    }
    let class = build_class_oig_lb(pairs)?;
    let dist = Distribution::uniform_x(class.domain());
    let points: Vec<Point> = (1..=m).map(|j| class.domain().y(j)).collect();
    let adversary = Adversary::ObliviousFixed { points };
    let rows = run_trials(trials, seed, |trial| {
        let t = run_oblivious(&dist, &class, &adversary, n, m, seed, trial)?;
        let pc = pair_counts(pairs, &t.shuffled)?;
        let error = pair_class_exact_error(&pc, OrientationRule::MinMax);
        // leave-one-out audit on the shared train graph
        let train_points: Vec<Point> = t.shuffled.iter().map(|ex| ex.point).collect();
        let graph = build_oig(&class, &train_points)?;
        let orientation = min_max_out_degree_orientation(&graph);
        let truth = BitPattern::zeros(train_points.len());
        let loo = loo_errors(&graph, &orientation, &truth)?;
        let v = graph.vertex_index(&truth).unwrap();
        Ok(vec![
            error,
            loo as f64,
            orientation.out_degree[v] as f64,
            orientation.max_out_degree as f64,
        ])
    })?;
    let bound = 1.0 / (n as f64 + 1.0);
    let mut report = Report::build(
        "oblivious_ub",
        vec!["error", "loo_sum", "target_out_degree", "tau"],
        rows,
        "error",
        vec![
            ("n".into(), format!("{n}")),
            ("m".into(), format!("{m}")),
            ("bound".into(), format!("{bound}")),
        ],
    );
    let pass = report.estimate.mean <= bound + 3.0 * report.estimate.std_error;
    report
        .summary
        .push(("within_bound".into(), format!("{pass}")));
    Ok(report)
}

/// Coupon-collector event: with n uniform draws from r = ceil(c*n/ln(n/d))
/// elements, at least d remain unsampled. Reports the event frequency.
pub fn exp_coupon(n: usize, d: usize, c: f64, trials: u64, seed: u64) -> Result<Report> {
    if d < 1 || n <= d || trials < 1 {
        return Err(Error::InvalidParameters(format!(
            "need n > d >= 1 and trials >= 1, got n={n}, d={d}"
        )));
    }
    let r = ceil_ratio(c * n as f64, (n as f64 / d as f64).ln())?;
    if r < d || (n as f64) < c * d as f64 {
        return Err(Error::InvalidParameters(format!(
            "need r >= d and n >= c*d, got r={r}, n={n}, d={d}, c={c}"
        )));
    }
    let rows = run_trials(trials, seed, |trial| {
        let mut rng = stage_stream(seed, trial, Stage::CleanDraw);
        let mut seen = vec![false; r];
        for _ in 0..n {
            seen[rng.gen_range(0..r)] = true;
        }
        let missing = seen.iter().filter(|&&s| !s).count();
        Ok(vec![missing as f64, f64::from(missing >= d)])
    })?;
    let expected_missing = r as f64 * (1.0 - 1.0 / r as f64).powi(n as i32);
    Ok(Report::build(
        "coupon",
        vec!["missing", "event"],
        rows,
        "event",
        vec![
            ("n".into(), format!("{n}")),
            ("d".into(), format!("{d}")),
            ("r".into(), format!("{r}")),
            ("expected_missing".into(), format!("{expected_missing}")),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_class_oig_lb;
    use crate::oig::predict_prob_one;

    #[test]
    fn estimate_error_examples() {
        let class = build_class_oig_lb(6).unwrap();
        let dist = Distribution::uniform_x(class.domain());
        let target = class.target();
        let mut rng = substream(0, &[0]);
        // the target itself: zero error
        let e = estimate_error(
            &|p| target.eval(p),
            &dist,
            &target,
            ErrorMode::Exact,
            &mut rng,
        );
        assert_eq!(e.mean, 0.0);
        // a pair singleton errs on exactly one of the 6 support points
        let h = Hypothesis::PairSingleton { index: 2 };
        let e = estimate_error(&|p| h.eval(p), &dist, &target, ErrorMode::Exact, &mut rng);
        assert!((e.mean - 1.0 / 6.0).abs() < 1e-12);
        // subset indicator: exactly d/r
        let mlb = build_class_majority_lb(5, 2).unwrap();
        let mdist = Distribution::uniform_x(mlb.domain());
        let h = Hypothesis::SubsetIndicator { subset: vec![1, 3] };
        let e = estimate_error(
            &|p| h.eval(p),
            &mdist,
            &mlb.target(),
            ErrorMode::Exact,
            &mut rng,
        );
        assert!((e.mean - 0.4).abs() < 1e-12);
        // sampled mode agrees within CI
        let e = estimate_error(
            &|p| h.eval(p),
            &mdist,
            &mlb.target(),
            ErrorMode::Sampled { draws: 20_000 },
            &mut rng,
        );
        assert!(e.ci99_low <= 0.4 && 0.4 <= e.ci99_high);
    }

    #[test]
    fn pair_fast_path_matches_generic_predictor() {
        let pairs = 5;
        let class = build_class_oig_lb(pairs).unwrap();
        let d = class.domain();
        let mut rng = substream(31, &[0]);
        for _ in 0..40 {
            let len = rng.gen_range(0..=7);
            let train: Vec<LabeledExample> = (0..len)
                .map(|_| LabeledExample {
                    point: d.point(rng.gen_range(0..d.len())),
                    label: false,
                })
                .collect();
            let pc = pair_counts(pairs, &train).unwrap();
            for i in 0..pairs {
                for rule in [OrientationRule::MinMax, OrientationRule::UniformOptimal] {
                    let fast = pair_class_predict_prob(&pc, i, rule);
                    let generic = predict_prob_one(&class, &train, &d.x(i), rule).unwrap();
                    assert!(
                        (fast - generic).abs() < 1e-12,
                        "rule {rule:?}, test x_{i}, train {train:?}: fast {fast} generic {generic}"
                    );
                }
            }
        }
    }

    #[test]
    fn oig_lower_bound_n1_is_exactly_quarter() {
        // n=1: test misses the clean pair w.p. 1/2, then a single-edge coin
        let report = exp_oig_lower_bound(1, 50, 3).unwrap();
        assert!((report.estimate.mean - 0.25).abs() < 1e-12);
        for row in &report.rows {
            assert_eq!(*row.values.last().unwrap(), 0.25);
        }
    }

    #[test]
    fn oig_lower_bound_matches_closed_form_small() {
        let n = 20;
        let report = exp_oig_lower_bound(n, 4000, 11).unwrap();
        let closed: f64 = report.summary_value("closed_form").unwrap().parse().unwrap();
        assert!((closed - (1.0 - 1.0 / 40.0f64).powi(20) / 2.0).abs() < 1e-12);
        assert!(
            (report.estimate.mean - closed).abs() < 5.0 * report.estimate.std_error.max(1e-4),
            "mean {} vs closed form {closed}",
            report.estimate.mean
        );
        // baseline ERM never exceeds the single-hypothesis ceiling
        for b in report.column("baseline_error").unwrap() {
            assert!(b <= 1.0 / (2.0 * n as f64) + 1e-15);
        }
    }

    #[test]
    fn coupon_edge_case_and_derived_r() {
        // two draws from r=3 elements always leave one missing
        let report = exp_coupon(2, 1, 1.0, 30, 5).unwrap();
        assert_eq!(report.summary_value("r").unwrap(), "3");
        assert_eq!(report.estimate.mean, 1.0);
        assert!(exp_coupon(3, 4, 4.0, 10, 0).is_err());
    }

    #[test]
    fn derive_m_solves_the_budget_inequality() {
        // n=300 with thirds of N: smallest m with m*floor((300+m)/3) >= 600
        assert_eq!(derive_m(300, SchemeId::MajorityOfThree, 0.01, 0).unwrap(), 6);
        let m = derive_m(40, SchemeId::MajorityOfThree, 0.01, 0).unwrap();
        assert!(m * ((40 + m) / 3) >= 80);
        assert!((m - 1) * ((40 + m - 1) / 3) < 80);
    }

    #[test]
    fn majority_lower_bound_with_adversary_disabled_is_zero() {
        let p = MajorityLbParams {
            n: 30,
            d: 1,
            c: 4.0,
            copies: None,
            scheme: SchemeId::MajorityOfThree,
            erm: ErmRule::Adversarial,
            delta: 0.01,
            trials: 40,
            seed: 9,
            m_override: Some(0),
        };
        let report = exp_majority_lower_bound(&p).unwrap();
        assert_eq!(report.estimate.mean, 0.0);
    }

    #[test]
    fn majority_lower_bound_small_run_is_sane() {
        let p = MajorityLbParams {
            n: 40,
            d: 1,
            c: 4.0,
            copies: None,
            scheme: SchemeId::MajorityOfThree,
            erm: ErmRule::Adversarial,
            delta: 0.01,
            trials: 300,
            seed: 12,
            m_override: None,
        };
        let report = exp_majority_lower_bound(&p).unwrap();
        let d_over_r: f64 = report.summary_value("d_over_r").unwrap().parse().unwrap();
        // every committee error is 0 or exactly d/r, never above the worst ERM
        let worst = report.column("worst_erm_error").unwrap();
        for (e, w) in report.column("error").unwrap().iter().zip(&worst) {
            assert!(*e == 0.0 || (*e - d_over_r).abs() < 1e-15);
            assert!(*e <= *w + 1e-15);
        }
        assert!(report.estimate.mean >= 0.25 * d_over_r);
    }

    #[test]
    fn erm_upper_bound_ceiling_is_exact() {
        for class in [ErmUbClass::Majority, ErmUbClass::Pairs] {
            let p = ErmUbParams {
                n: 25,
                d: 1,
                c: 4.0,
                class,
                mode: ErmUbMode::WorstConsistent,
                delta: 0.01,
                trials: 200,
                seed: 21,
                m_override: None,
            };
            let report = exp_erm_upper_bound(&p).unwrap();
            let errors = report.column("error").unwrap();
            let ceilings = report.column("ceiling").unwrap();
            for (e, c) in errors.iter().zip(&ceilings) {
                assert_eq!(e, c, "worst consistent error differs from the ceiling");
            }
            assert_eq!(report.summary_value("within_bound").unwrap(), "true");
        }
    }

    #[test]
    fn oblivious_upper_bound_small_run() {
        let report = exp_oblivious_oig_upper_bound(12, 6, 400, 17).unwrap();
        let bound: f64 = report.summary_value("bound").unwrap().parse().unwrap();
        assert!(report.estimate.mean <= bound + 3.0 * report.estimate.std_error);
        let loo = report.column("loo_sum").unwrap();
        let outdeg = report.column("target_out_degree").unwrap();
        for (l, o) in loo.iter().zip(&outdeg) {
            assert_eq!(l, o);
            assert!(*l <= 1.0);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let a = exp_oig_lower_bound(5, 50, 77).unwrap().to_csv();
        let b = exp_oig_lower_bound(5, 50, 77).unwrap().to_csv();
        assert_eq!(a, b);
        let a = exp_coupon(50, 1, 4.0, 100, 3).unwrap().to_csv();
        let b = exp_coupon(50, 1, 4.0, 100, 3).unwrap().to_csv();
        assert_eq!(a, b);
        // row count equals the configured trial count
        assert_eq!(a.lines().count(), 100 + 2);
    }

    #[test]
    fn chi_square_p_values_behave() {
        let p = chi_square_uniform_p(&[100, 101, 99, 100]);
        assert!(p > 0.5);
        let p = chi_square_uniform_p(&[400, 0, 0, 0]);
        assert!(p < 1e-6);
    }

    use crate::domain::build_class_majority_lb;
}
