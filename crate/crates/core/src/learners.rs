//! ERM variants and majority voters over data-independent subsample schemes.
//!
//! Consistent-set queries are closed-form for the structured classes (the
//! copies class has C(r,d)*K members; materializing it per subsample would
//! dominate every experiment) and fall back to enumeration otherwise. The
//! closed form requires an all-0-labeled dataset, which is what the
//! monotone pipeline always produces for these constructions.

use crate::adversary::LabeledExample;
use crate::combin::{binomial, subset_rank, subset_unrank};
use crate::domain::{Domain, Hypothesis, HypothesisClass, Point, PointKind, Structure};
use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn is_consistent(h: &Hypothesis, dataset: &[LabeledExample]) -> bool {
    dataset.iter().all(|ex| h.eval(&ex.point) == ex.label)
}

/// The set of class members consistent with a dataset, queryable by count
/// and by rank in canonical order (h* first, then lexicographic parameters).
pub struct ConsistentSet<'a> {
    class: &'a HypothesisClass,
    inner: Inner,
}

enum Inner {
    /// Hypothesis indices in canonical order.
    Enumerated(Vec<usize>),
    /// h* plus SubsetIndicator(T) for every d-subset T of `missing`.
    MajorityLb { missing: Vec<usize>, d: usize },
    /// h* plus SubsetIndicatorCopy(T, j) for T in `subsets` (actual index
    /// sets, lex order) and j in `copies` (ascending).
    MajorityLbRand {
        r: usize,
        subsets: SubsetChoices,
        copies: Vec<usize>,
    },
    /// h* plus PairSingleton(i) for i in `free`.
    OigLb { free: Vec<usize> },
}

enum SubsetChoices {
    /// All d-subsets of this index list.
    AllOf { missing: Vec<usize>, d: usize },
    /// Exactly these subsets (each sorted), in lex order.
    Listed(Vec<Vec<usize>>),
}

impl SubsetChoices {
    fn count(&self) -> u64 {
        match self {
            SubsetChoices::AllOf { missing, d } => binomial(missing.len(), *d),
            SubsetChoices::Listed(v) => v.len() as u64,
        }
    }

    fn nth(&self, k: u64) -> Vec<usize> {
        match self {
            SubsetChoices::AllOf { missing, d } => subset_unrank(k, missing.len(), *d)
                .into_iter()
                .map(|i| missing[i])
                .collect(),
            SubsetChoices::Listed(v) => v[k as usize].clone(),
        }
    }
}

impl<'a> ConsistentSet<'a> {
    pub fn count(&self) -> u64 {
        match &self.inner {
            Inner::Enumerated(v) => v.len() as u64,
            Inner::MajorityLb { missing, d } => 1 + binomial(missing.len(), *d),
            Inner::MajorityLbRand {
                subsets, copies, ..
            } => 1 + subsets.count() * copies.len() as u64,
            Inner::OigLb { free } => 1 + free.len() as u64,
        }
    }

    /// The k-th consistent hypothesis in canonical order.
    pub fn nth(&self, k: u64) -> Hypothesis {
        assert!(k < self.count(), "consistent-set rank out of range");
        match &self.inner {
            Inner::Enumerated(v) => self.class.hypothesis(v[k as usize]),
            Inner::MajorityLb { missing, d } => {
                if k == 0 {
                    Hypothesis::AllZero
                } else {
                    let local = subset_unrank(k - 1, missing.len(), *d);
                    Hypothesis::SubsetIndicator {
                        subset: local.into_iter().map(|i| missing[i]).collect(),
                    }
                }
            }
            Inner::MajorityLbRand { r, subsets, copies } => {
                if k == 0 {
                    Hypothesis::AllZero
                } else {
                    let q = k - 1;
                    let subset = subsets.nth(q / copies.len() as u64);
                    let copy = copies[(q % copies.len() as u64) as usize];
                    let rank = subset_rank(&subset, *r);
                    Hypothesis::SubsetIndicatorCopy {
                        subset,
                        subset_rank: rank,
                        copy,
                    }
                }
            }
            Inner::OigLb { free } => {
                if k == 0 {
                    Hypothesis::AllZero
                } else {
                    Hypothesis::PairSingleton {
                        index: free[(k - 1) as usize],
                    }
                }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Hypothesis> + '_ {
        (0..self.count()).map(move |k| self.nth(k))
    }
}

/// Builds the consistent set for a dataset. Closed-form for structured
/// classes on all-0-labeled data, enumeration otherwise.
pub fn consistent_set<'a>(
    class: &'a HypothesisClass,
    dataset: &[LabeledExample],
) -> Result<ConsistentSet<'a>> {
    for ex in dataset {
        class.domain().check(&ex.point)?;
    }
    let all_zero = dataset.iter().all(|ex| !ex.label);
    let inner = match (class.structure(), all_zero) {
        (Structure::MajorityLb { r, d }, true) => Inner::MajorityLb {
            missing: missing_x_indices(dataset, r),
            d,
        },
        (Structure::MajorityLbRand { r, d, copies }, true) => {
            let missing = missing_x_indices(dataset, r);
            let mut y_ranks: Vec<usize> = dataset
                .iter()
                .filter_map(|ex| match ex.point.kind {
                    PointKind::Y(t) => Some(t),
                    _ => None,
                })
                .collect();
            y_ranks.sort_unstable();
            y_ranks.dedup();
            // a copy labels every y 1 except its own y_T, so two distinct
            // 0-labeled y's rule out every copy
            let subsets = match y_ranks.as_slice() {
                [] => SubsetChoices::AllOf { missing, d },
                [t] => {
                    let subset = subset_unrank(*t as u64, r, d);
                    if subset.iter().all(|i| missing.binary_search(i).is_ok()) {
                        SubsetChoices::Listed(vec![subset])
                    } else {
                        SubsetChoices::Listed(vec![])
                    }
                }
                _ => SubsetChoices::Listed(vec![]),
            };
            let mut z_seen: Vec<usize> = dataset
                .iter()
                .filter_map(|ex| match ex.point.kind {
                    PointKind::Z(j) => Some(j),
                    _ => None,
                })
                .collect();
            z_seen.sort_unstable();
            z_seen.dedup();
            let valid_copies: Vec<usize> =
                (0..copies).filter(|j| z_seen.binary_search(j).is_err()).collect();
            if valid_copies.is_empty() {
                Inner::Enumerated(vec![class.target_index()])
            } else {
                Inner::MajorityLbRand {
                    r,
                    subsets,
                    copies: valid_copies,
                }
            }
        }
        (Structure::OigLb { pairs }, true) => {
            let mut used = vec![false; pairs];
            for ex in dataset {
                match ex.point.kind {
                    PointKind::X(i) | PointKind::Y(i) => used[i] = true,
                    PointKind::Z(_) => {}
                }
            }
            Inner::OigLb {
                free: (0..pairs).filter(|&i| !used[i]).collect(),
            }
        }
        _ => {
            let indices: Vec<usize> = (0..class.len())
                .filter(|&i| is_consistent(&class.hypothesis(i), dataset))
                .collect();
            Inner::Enumerated(indices)
        }
    };
    Ok(ConsistentSet { class, inner })
}

fn missing_x_indices(dataset: &[LabeledExample], r: usize) -> Vec<usize> {
    let mut present = vec![false; r];
    for ex in dataset {
        if let PointKind::X(i) = ex.point.kind {
            present[i] = true;
        }
    }
    (0..r).filter(|&i| !present[i]).collect()
}

/// First hypothesis in canonical enumeration order consistent with every
/// example.
pub fn erm_first_consistent(
    class: &HypothesisClass,
    dataset: &[LabeledExample],
) -> Result<Hypothesis> {
    let cs = consistent_set(class, dataset)?;
    if cs.count() == 0 {
        return Err(Error::RealizabilityViolation);
    }
    Ok(cs.nth(0))
}

/// The designed-to-fail ERM for the subset-indicator class: if the dataset
/// holds some y_T and no x_i with i in T, answer the indicator of T (for
/// the first y in dataset order); otherwise answer h*.
pub fn erm_adversarial(dataset: &[LabeledExample], r: usize, d: usize) -> Hypothesis {
    let first_y = dataset.iter().find_map(|ex| match ex.point.kind {
        PointKind::Y(t) => Some(t),
        _ => None,
    });
    if let Some(t) = first_y {
        let subset = subset_unrank(t as u64, r, d);
        let conflicts = dataset.iter().any(|ex| match ex.point.kind {
            PointKind::X(i) => subset.binary_search(&i).is_ok(),
            _ => false,
        });
        if !conflicts {
            return Hypothesis::SubsetIndicator { subset };
        }
    }
    Hypothesis::AllZero
}

/// Uniform draw from the consistent set.
pub fn erm_random_consistent(
    class: &HypothesisClass,
    dataset: &[LabeledExample],
    rng: &mut ChaCha8Rng,
) -> Result<Hypothesis> {
    let cs = consistent_set(class, dataset)?;
    let count = cs.count();
    if count == 0 {
        return Err(Error::RealizabilityViolation);
    }
    Ok(cs.nth(rng.gen_range(0..count)))
}

/// Largest exact error over the consistent set under `dist` (weights summed
/// over each hypothesis's disagreement points with h*).
pub fn worst_consistent_error(
    class: &HypothesisClass,
    dataset: &[LabeledExample],
    dist: &crate::adversary::Distribution,
) -> Result<f64> {
    let cs = consistent_set(class, dataset)?;
    if cs.count() == 0 {
        return Err(Error::RealizabilityViolation);
    }
    let weight_of = |idx: usize| -> f64 {
        // support is the x-range in all constructions; generic classes fall
        // back to a scan
        dist.support()
            .iter()
            .zip(dist.weights())
            .find(|(p, _)| matches!(p.kind, PointKind::X(i) if i == idx))
            .map(|(_, &w)| w)
            .unwrap_or(0.0)
    };
    match &cs.inner {
        Inner::MajorityLb { missing, d } => {
            // every consistent indicator errs exactly on its subset; the
            // worst picks the d heaviest missing indices
            if binomial(missing.len(), *d) == 0 {
                return Ok(0.0);
            }
            let mut weights: Vec<f64> = missing.iter().map(|&i| weight_of(i)).collect();
            weights.sort_by(|a, b| b.partial_cmp(a).unwrap());
            Ok(weights.iter().take(*d).sum())
        }
        Inner::MajorityLbRand { subsets, .. } => {
            let k = subsets.count();
            let mut worst = 0.0f64;
            for idx in 0..k {
                let e: f64 = subsets.nth(idx).iter().map(|&i| weight_of(i)).sum();
                worst = worst.max(e);
            }
            Ok(worst)
        }
        Inner::OigLb { free } => Ok(free
            .iter()
            .map(|&i| weight_of(i))
            .fold(0.0, f64::max)),
        Inner::Enumerated(_) => {
            let target = class.target();
            let mut worst = 0.0f64;
            for h in cs.iter() {
                let e: f64 = dist
                    .support()
                    .iter()
                    .zip(dist.weights())
                    .filter(|(p, _)| h.eval(p) != target.eval(p))
                    .map(|(_, &w)| w)
                    .sum();
                worst = worst.max(e);
            }
            Ok(worst)
        }
    }
}

/// Index-based subsample scheme, a function of the dataset size alone.
#[derive(Debug, Clone)]
pub struct SubsampleScheme {
    pub name: String,
    pub lists: Vec<Vec<usize>>,
    /// Declared t: every list has at least this many distinct indices.
    pub min_distinct: usize,
}

/// Three contiguous blocks partitioning [N]; the remainder goes to the
/// earlier blocks.
pub fn scheme_majority_of_three(n: usize) -> Result<SubsampleScheme> {
    if n < 3 {
        return Err(Error::InvalidParameters(format!(
            "majority-of-three needs N >= 3, got {n}"
        )));
    }
    let base = n / 3;
    let rem = n % 3;
    let mut lists = Vec::with_capacity(3);
    let mut start = 0;
    for b in 0..3 {
        let size = base + usize::from(b < rem);
        lists.push((start..start + size).collect());
        start += size;
    }
    Ok(SubsampleScheme {
        name: "majority_of_three".into(),
        lists,
        min_distinct: base,
    })
}

/// k bootstrap lists of N indices drawn with replacement from a
/// scheme-local stream fixed before seeing any data.
pub fn scheme_bagging(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<SubsampleScheme> {
    if n < 1 || k < 1 {
        return Err(Error::InvalidParameters("bagging needs N >= 1, k >= 1".into()));
    }
    let lists: Vec<Vec<usize>> = (0..k)
        .map(|_| (0..n).map(|_| rng.gen_range(0..n)).collect())
        .collect();
    let min_distinct = lists
        .iter()
        .map(|l| {
            let mut v = l.clone();
            v.sort_unstable();
            v.dedup();
            v.len()
        })
        .min()
        .unwrap();
    Ok(SubsampleScheme {
        name: "bagging".into(),
        lists,
        min_distinct,
    })
}

/// Default committee size for bagging at confidence delta.
pub fn default_bagging_k(n: usize, delta: f64) -> usize {
    (10.0 * (n as f64 / delta).ln()).ceil() as usize
}

/// Recursive quarter-split scheme: split the head block into four parts,
/// recurse on the first while carrying two of the quarter blocks as fixed
/// context; yields 3^ceil(log4(N/3)) lists, each of size >= N/2 for N >= 4.
pub fn scheme_hanneke(n: usize) -> Result<SubsampleScheme> {
    if n < 1 {
        return Err(Error::InvalidParameters("need N >= 1".into()));
    }
    fn sub(head: &[usize], context: &[usize], out: &mut Vec<Vec<usize>>) {
        if head.len() <= 3 {
            let mut list: Vec<usize> = head.iter().chain(context).copied().collect();
            list.sort_unstable();
            out.push(list);
            return;
        }
        let q = head.len() / 4;
        let b0 = &head[..head.len() - 3 * q];
        let b1 = &head[head.len() - 3 * q..head.len() - 2 * q];
        let b2 = &head[head.len() - 2 * q..head.len() - q];
        let b3 = &head[head.len() - q..];
        for (u, v) in [(b2, b3), (b1, b3), (b1, b2)] {
            let ctx: Vec<usize> = context.iter().chain(u).chain(v).copied().collect();
            sub(b0, &ctx, out);
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let mut lists = Vec::new();
    sub(&all, &[], &mut lists);
    let min_distinct = lists.iter().map(|l| l.len()).min().unwrap();
    Ok(SubsampleScheme {
        name: "hanneke".into(),
        lists,
        min_distinct,
    })
}

/// A prediction rule: a single hypothesis or a majority committee.
#[derive(Debug, Clone)]
pub enum Predictor {
    Single(Hypothesis),
    Committee(Vec<Hypothesis>),
}

impl Predictor {
    pub fn predict(&self, point: &Point) -> bool {
        match self {
            Predictor::Single(h) => h.eval(point),
            Predictor::Committee(members) => {
                let ones = members.iter().filter(|h| h.eval(point)).count();
                // even-split ties predict 1
                2 * ones >= members.len()
            }
        }
    }

    /// Explicit label table over a domain, for audit dumps.
    pub fn label_table(&self, domain: &Domain) -> Vec<bool> {
        domain.points().map(|p| self.predict(&p)).collect()
    }
}

/// Which base ERM a voter runs on each subsample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErmRule {
    FirstConsistent,
    Adversarial,
    RandomConsistent,
}

impl ErmRule {
    pub fn id(&self) -> &'static str {
        match self {
            ErmRule::FirstConsistent => "first_consistent",
            ErmRule::Adversarial => "adversarial",
            ErmRule::RandomConsistent => "random_consistent",
        }
    }
}

pub fn run_erm(
    class: &HypothesisClass,
    rule: ErmRule,
    dataset: &[LabeledExample],
    rng: &mut ChaCha8Rng,
) -> Result<Hypothesis> {
    match rule {
        ErmRule::FirstConsistent => erm_first_consistent(class, dataset),
        ErmRule::Adversarial => {
            let (r, d) = match class.structure() {
                Structure::MajorityLb { r, d } | Structure::MajorityLbRand { r, d, .. } => (r, d),
                _ => {
                    return Err(Error::InvalidParameters(
                        "adversarial ERM is defined on the subset-indicator classes".into(),
                    ))
                }
            };
            Ok(erm_adversarial(dataset, r, d))
        }
        ErmRule::RandomConsistent => erm_random_consistent(class, dataset, rng),
    }
}

/// Materializes each scheme list (with multiplicity), trains the base ERM
/// on it, and returns the majority committee in list order.
pub fn majority_vote(
    class: &HypothesisClass,
    scheme: &SubsampleScheme,
    rule: ErmRule,
    dataset: &[LabeledExample],
    rng: &mut ChaCha8Rng,
) -> Result<Predictor> {
    let n = dataset.len();
    let mut members = Vec::with_capacity(scheme.lists.len());
    for list in &scheme.lists {
        if list.iter().any(|&i| i >= n) {
            return Err(Error::InvalidParameters(format!(
                "scheme built for a different dataset size (index out of range for N={n})"
            )));
        }
        let sub: Vec<LabeledExample> = list.iter().map(|&i| dataset[i]).collect();
        members.push(run_erm(class, rule, &sub, rng)?);
    }
    Ok(Predictor::Committee(members))
}
