//! Data distributions, monotone adversaries, and the corruption pipeline.
//!
//! A pipeline run draws n clean points i.i.d., lets the adversary append m
//! corrupted points (after seeing the clean points, or before for the
//! oblivious variant), labels everything by the target h*, and applies a
//! uniformly random permutation. Each stage draws from its own derived
//! substream, so obliviousness and reproducibility are testable: the
//! corrupted sequence of an oblivious run is a function of the adversary
//! substream alone.

use crate::domain::{Domain, HypothesisClass, Point, PointKind, Structure};
use crate::error::{Error, Result};
use crate::rng::{stage_stream, Stage};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// A distribution over a finite support.
#[derive(Debug, Clone)]
pub struct Distribution {
    support: Vec<Point>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Distribution {
    pub fn new(support: Vec<Point>, weights: Vec<f64>) -> Result<Distribution> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::InvalidParameters(
                "support empty or weight count mismatch".into(),
            ));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidParameters("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidParameters(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Distribution {
            support,
            weights,
            cumulative,
        })
    }

    /// Uniform over the x-points of a domain (the distribution used by all
    /// the lower-bound constructions).
    pub fn uniform_x(domain: &Domain) -> Distribution {
        let support: Vec<Point> = domain.x_points().collect();
        let w = 1.0 / support.len() as f64;
        let weights = vec![w; support.len()];
        Distribution::new(support, weights).expect("uniform weights are valid")
    }

    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        let u: f64 = rng.gen();
        let idx = self
            .cumulative
            .partition_point(|&c| c < u)
            .min(self.support.len() - 1);
        self.support[idx]
    }
}

/// The adversaries used by the lower-bound constructions, plus the fixed
/// oblivious list.
#[derive(Debug, Clone, PartialEq)]
pub enum Adversary {
    /// Looks for a d-subset T of the x-range with no clean representative;
    /// outputs m copies of y_T (lexicographically smallest such T), or m
    /// copies of x_0 if every subset is hit.
    SubsetMissing { r: usize, d: usize, m: usize },
    /// Emits the partner y_i for every clean occurrence of x_i; m = n.
    Pairing,
    /// Emits y_i once per distinct sampled index i (ascending), padded with
    /// repeats of the first emitted y (or y_0 if none) to exactly m = r.
    CouponPairing { r: usize, m: usize },
    /// Oblivious: a fixed list chosen without seeing the clean sample.
    ObliviousFixed { points: Vec<Point> },
}

impl Adversary {
    pub fn id(&self) -> &'static str {
        match self {
            Adversary::SubsetMissing { .. } => "subset_missing",
            Adversary::Pairing => "pairing",
            Adversary::CouponPairing { .. } => "coupon_pairing",
            Adversary::ObliviousFixed { .. } => "oblivious_fixed",
        }
    }

    /// Declared output arity for a clean sample of size n.
    pub fn arity(&self, n: usize) -> usize {
        match self {
            Adversary::SubsetMissing { m, .. } => *m,
            Adversary::Pairing => n,
            Adversary::CouponPairing { m, .. } => *m,
            Adversary::ObliviousFixed { points } => points.len(),
        }
    }

    pub fn is_oblivious(&self) -> bool {
        matches!(self, Adversary::ObliviousFixed { .. })
    }

    /// The corrupted points for a given clean sample. Pure given the clean
    /// points; none of the built-in adversaries use randomness, but the
    /// substream is threaded through for adversaries that might.
    pub fn corrupt(
        &self,
        clean: &[Point],
        domain: &Domain,
        _rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Point>> {
        match self {
            Adversary::SubsetMissing { r, d, m } => {
                let mut present = vec![false; *r];
                for p in clean {
                    match p.kind {
                        PointKind::X(i) if i < *r => present[i] = true,
                        _ => {
                            return Err(Error::ProtocolViolation(
                                "subset_missing expects clean x-points".into(),
                            ))
                        }
                    }
                }
                let missing: Vec<usize> =
                    (0..*r).filter(|&i| !present[i]).take(*d).collect();
                let target = if missing.len() == *d {
                    // lexicographically smallest all-missing subset = the d
                    // smallest missing indices
                    let rank = crate::combin::subset_rank(&missing, *r);
                    domain.y(rank as usize)
                } else {
                    domain.x(0)
                };
                Ok(vec![target; *m])
            }
            Adversary::Pairing => clean
                .iter()
                .map(|p| match p.kind {
                    PointKind::X(i) => Ok(domain.y(i)),
                    _ => Err(Error::ProtocolViolation(
                        "pairing expects clean x-points".into(),
                    )),
                })
                .collect(),
            Adversary::CouponPairing { r, m } => {
                if *m != *r {
                    return Err(Error::InvalidParameters(format!(
                        "coupon_pairing requires m = r, got m={m}, r={r}"
                    )));
                }
                let mut present = vec![false; *r];
                for p in clean {
                    match p.kind {
                        PointKind::X(i) if i < *r => present[i] = true,
                        _ => {
                            return Err(Error::ProtocolViolation(
                                "coupon_pairing expects clean x-points".into(),
                            ))
                        }
                    }
                }
                let mut out: Vec<Point> = (0..*r)
                    .filter(|&i| present[i])
                    .map(|i| domain.y(i))
                    .collect();
                let pad = out.first().copied().unwrap_or_else(|| domain.y(0));
                out.resize(*m, pad);
                Ok(out)
            }
            Adversary::ObliviousFixed { points } => {
                for p in points {
                    domain.check(p)?;
                }
                Ok(points.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledExample {
    pub point: Point,
    pub label: bool,
}

/// Audit record of one pipeline run.
#[derive(Debug, Clone)]
pub struct AdversaryTranscript {
    pub clean: Vec<LabeledExample>,
    pub corrupted: Vec<LabeledExample>,
    /// `shuffled[i] = combined[permutation[i]]` where combined = clean ++ corrupted.
    pub permutation: Vec<usize>,
    pub shuffled: Vec<LabeledExample>,
    pub master_seed: u64,
    pub trial: u64,
    pub n: usize,
    pub m: usize,
    pub adversary_id: String,
    pub class_desc: String,
    pub oblivious: bool,
}

impl AdversaryTranscript {
    /// Final shuffled position of combined index `j`.
    pub fn position_after_shuffle(&self, j: usize) -> usize {
        self.permutation.iter().position(|&p| p == j).unwrap()
    }
}

/// Printable description of a class for transcript headers.
pub fn class_desc(class: &HypothesisClass) -> String {
    match class.structure() {
        Structure::Generic => "generic".to_string(),
        Structure::MajorityLb { r, d } => format!("majority_lb r={r} d={d}"),
        Structure::MajorityLbRand { r, d, copies } => {
            format!("majority_lb_rand r={r} d={d} copies={copies}")
        }
        Structure::OigLb { pairs } => format!("oig_lb pairs={pairs}"),
    }
}

fn fisher_yates(len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    class: &HypothesisClass,
    clean_points: Vec<Point>,
    corrupted_points: Vec<Point>,
    adversary: &Adversary,
    n: usize,
    m: usize,
    master_seed: u64,
    trial: u64,
    oblivious: bool,
) -> Result<AdversaryTranscript> {
    if corrupted_points.len() != m {
        return Err(Error::ProtocolViolation(format!(
            "adversary emitted {} points, declared arity {m}",
            corrupted_points.len()
        )));
    }
    for p in &corrupted_points {
        class.domain().check(p)?;
    }
    let target = class.target();
    let label = |p: &Point| LabeledExample {
        point: *p,
        label: target.eval(p),
    };
    let clean: Vec<LabeledExample> = clean_points.iter().map(&label).collect();
    let corrupted: Vec<LabeledExample> = corrupted_points.iter().map(&label).collect();
    let mut shuffle_rng = stage_stream(master_seed, trial, Stage::Shuffle);
    let permutation = fisher_yates(n + m, &mut shuffle_rng);
    let combined: Vec<LabeledExample> =
        clean.iter().chain(corrupted.iter()).copied().collect();
    let shuffled: Vec<LabeledExample> = permutation.iter().map(|&j| combined[j]).collect();
    Ok(AdversaryTranscript {
        clean,
        corrupted,
        permutation,
        shuffled,
        master_seed,
        trial,
        n,
        m,
        adversary_id: adversary.id().to_string(),
        class_desc: class_desc(class),
        oblivious,
    })
}

/// Adaptive pipeline: clean draw first, then the adversary sees the clean
/// points, then labeling and a uniform shuffle.
pub fn run_adaptive(
    dist: &Distribution,
    class: &HypothesisClass,
    adversary: &Adversary,
    n: usize,
    m: usize,
    master_seed: u64,
    trial: u64,
) -> Result<AdversaryTranscript> {
    if n < 1 {
        return Err(Error::InvalidParameters("need n >= 1".into()));
    }
    if adversary.arity(n) != m {
        return Err(Error::ProtocolViolation(format!(
            "adversary arity {} does not match m={m}",
            adversary.arity(n)
        )));
    }
    let mut clean_rng = stage_stream(master_seed, trial, Stage::CleanDraw);
    let clean_points: Vec<Point> = (0..n).map(|_| dist.sample(&mut clean_rng)).collect();
    let mut adv_rng = stage_stream(master_seed, trial, Stage::Adversary);
    let corrupted_points = adversary.corrupt(&clean_points, class.domain(), &mut adv_rng)?;
    assemble(
        class,
        clean_points,
        corrupted_points,
        adversary,
        n,
        m,
        master_seed,
        trial,
        false,
    )
}

/// Oblivious pipeline: the adversary is invoked before the clean draw and
/// receives no clean points.
pub fn run_oblivious(
    dist: &Distribution,
    class: &HypothesisClass,
    adversary: &Adversary,
    n: usize,
    m: usize,
    master_seed: u64,
    trial: u64,
) -> Result<AdversaryTranscript> {
    if n < 1 {
        return Err(Error::InvalidParameters("need n >= 1".into()));
    }
    if !adversary.is_oblivious() {
        return Err(Error::ProtocolViolation(format!(
            "adversary {} needs to see the clean sample",
            adversary.id()
        )));
    }
    if adversary.arity(n) != m {
        return Err(Error::ProtocolViolation(format!(
            "adversary arity {} does not match m={m}",
            adversary.arity(n)
        )));
    }
    let mut adv_rng = stage_stream(master_seed, trial, Stage::Adversary);
    let corrupted_points = adversary.corrupt(&[], class.domain(), &mut adv_rng)?;
    let mut clean_rng = stage_stream(master_seed, trial, Stage::CleanDraw);
    let clean_points: Vec<Point> = (0..n).map(|_| dist.sample(&mut clean_rng)).collect();
    assemble(
        class,
        clean_points,
        corrupted_points,
        adversary,
        n,
        m,
        master_seed,
        trial,
        true,
    )
}
