//! Finite point domains, hypotheses, and hypothesis classes.
//!
//! All the corrupted-learning constructions live over a finite domain laid
//! out as `x_0..x_{r-1}, y_0.., z_0..`. The x-points are always the support
//! of the data distribution; y-points index either d-subsets of the x-range
//! or x-partners, depending on the construction; z-points only appear in
//! the near-identical-copies class.
//!
//! Hypotheses in the structured classes are stored as closed-form
//! descriptors rather than bit tables: the copies class has C(r,d)*K
//! members, which is far too many to materialize, but evaluation and
//! consistent-set queries are cheap per descriptor.

use crate::combin::{binomial, subset_unrank};
use crate::error::{Error, Result};
use crate::pattern::BitPattern;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointKind {
    /// Distribution support point x_i.
    X(usize),
    /// y-point; the index is a subset rank or a pair index, depending on
    /// the construction.
    Y(usize),
    /// Copy-tag point z_j.
    Z(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Point {
    pub id: usize,
    pub kind: PointKind,
}

/// Finite domain laid out as all x-points, then y-points, then z-points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Domain {
    x_count: usize,
    y_count: usize,
    z_count: usize,
}

impl Domain {
    pub fn new(x_count: usize, y_count: usize, z_count: usize) -> Domain {
        Domain {
            x_count,
            y_count,
            z_count,
        }
    }

    pub fn len(&self) -> usize {
        self.x_count + self.y_count + self.z_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_count(&self) -> usize {
        self.x_count
    }

    pub fn point(&self, id: usize) -> Point {
        assert!(id < self.len(), "point id {id} out of domain");
        let kind = if id < self.x_count {
            PointKind::X(id)
        } else if id < self.x_count + self.y_count {
            PointKind::Y(id - self.x_count)
        } else {
            PointKind::Z(id - self.x_count - self.y_count)
        };
        Point { id, kind }
    }

    pub fn id_of(&self, kind: PointKind) -> Option<usize> {
        match kind {
            PointKind::X(i) if i < self.x_count => Some(i),
            PointKind::Y(i) if i < self.y_count => Some(self.x_count + i),
            PointKind::Z(i) if i < self.z_count => Some(self.x_count + self.y_count + i),
            _ => None,
        }
    }

    /// Kind/id round-trip check; rejects points from other domains.
    pub fn contains(&self, point: &Point) -> bool {
        self.id_of(point.kind) == Some(point.id)
    }

    pub fn check(&self, point: &Point) -> Result<()> {
        if self.contains(point) {
            Ok(())
        } else {
            Err(Error::DomainMismatch {
                point_id: point.id,
                reason: format!("kind {:?} does not match this domain's layout", point.kind),
            })
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |id| self.point(id))
    }

    pub fn x_points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.x_count).map(move |i| self.point(i))
    }

    pub fn x(&self, i: usize) -> Point {
        assert!(i < self.x_count);
        self.point(i)
    }

    pub fn y(&self, i: usize) -> Point {
        assert!(i < self.y_count);
        self.point(self.x_count + i)
    }

    pub fn z(&self, i: usize) -> Point {
        assert!(i < self.z_count);
        self.point(self.x_count + self.y_count + i)
    }
}

/// A total binary labeling of a domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// The constant-0 target h*.
    AllZero,
    /// 1 exactly on x_i for i in `subset`; 0 on every y and z point.
    SubsetIndicator { subset: Vec<usize> },
    /// Near-identical copy: 1 on x_i for i in `subset`, 1 on every y_T'
    /// except the one whose rank equals `subset_rank`, and 1 on z_copy only.
    SubsetIndicatorCopy {
        subset: Vec<usize>,
        subset_rank: u64,
        copy: usize,
    },
    /// 1 exactly on the pair x_i, y_i.
    PairSingleton { index: usize },
    /// Arbitrary labeling by domain point id.
    Explicit { labels: BitPattern },
}

impl Hypothesis {
    /// Evaluates the hypothesis at a point of its domain. Total and
    /// deterministic; membership is the caller's responsibility (see
    /// [`HypothesisClass::evaluate`] for the checked form).
    #[inline]
    pub fn eval(&self, point: &Point) -> bool {
        match self {
            Hypothesis::AllZero => false,
            Hypothesis::SubsetIndicator { subset } => match point.kind {
                PointKind::X(i) => subset.binary_search(&i).is_ok(),
                _ => false,
            },
            Hypothesis::SubsetIndicatorCopy {
                subset,
                subset_rank,
                copy,
            } => match point.kind {
                PointKind::X(i) => subset.binary_search(&i).is_ok(),
                PointKind::Y(t) => t as u64 != *subset_rank,
                PointKind::Z(j) => j == *copy,
            },
            Hypothesis::PairSingleton { index } => match point.kind {
                PointKind::X(i) | PointKind::Y(i) => i == *index,
                PointKind::Z(_) => false,
            },
            Hypothesis::Explicit { labels } => labels.get(point.id),
        }
    }
}

/// Which construction built a class; drives closed-form consistent-set
/// queries and canonical enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    Generic,
    /// h* plus every d-subset indicator over r x-points.
    MajorityLb { r: usize, d: usize },
    /// h* plus `copies` near-identical copies of each d-subset template.
    MajorityLbRand { r: usize, d: usize, copies: usize },
    /// h* plus one pair-singleton per x/y pair.
    OigLb { pairs: usize },
}

/// An enumerable finite hypothesis class with a designated target h*.
///
/// Canonical enumeration order: h* first, then structured descriptors in
/// lexicographic parameter order.
#[derive(Debug, Clone)]
pub struct HypothesisClass {
    domain: Domain,
    structure: Structure,
    explicit: Vec<Hypothesis>, // empty for structured classes
    target_index: usize,
}

impl HypothesisClass {
    /// Generic class from an explicit hypothesis list. The hypotheses must
    /// be distinct as labelings of the domain.
    pub fn from_explicit(
        domain: Domain,
        hypotheses: Vec<Hypothesis>,
        target_index: usize,
    ) -> Result<HypothesisClass> {
        if target_index >= hypotheses.len() {
            return Err(Error::InvalidParameters(
                "target index out of range".into(),
            ));
        }
        let points: Vec<Point> = domain.points().collect();
        let mut seen = BTreeSet::new();
        for h in &hypotheses {
            let pat = BitPattern::from_bits(&points.iter().map(|p| h.eval(p)).collect::<Vec<_>>());
            if !seen.insert(pat) {
                return Err(Error::InvalidParameters(
                    "hypotheses are not distinct as labelings".into(),
                ));
            }
        }
        Ok(HypothesisClass {
            domain,
            structure: Structure::Generic,
            explicit: hypotheses,
            target_index,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn len(&self) -> usize {
        match self.structure {
            Structure::Generic => self.explicit.len(),
            Structure::MajorityLb { r, d } => 1 + binomial(r, d) as usize,
            Structure::MajorityLbRand { r, d, copies } => 1 + binomial(r, d) as usize * copies,
            Structure::OigLb { pairs } => 1 + pairs,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The idx-th hypothesis in canonical order.
    pub fn hypothesis(&self, idx: usize) -> Hypothesis {
        assert!(idx < self.len(), "hypothesis index out of range");
        match self.structure {
            Structure::Generic => self.explicit[idx].clone(),
            Structure::MajorityLb { r, d } => {
                if idx == 0 {
                    Hypothesis::AllZero
                } else {
                    Hypothesis::SubsetIndicator {
                        subset: subset_unrank((idx - 1) as u64, r, d),
                    }
                }
            }
            Structure::MajorityLbRand { r, d, copies } => {
                if idx == 0 {
                    Hypothesis::AllZero
                } else {
                    let q = idx - 1;
                    let rank = (q / copies) as u64;
                    Hypothesis::SubsetIndicatorCopy {
                        subset: subset_unrank(rank, r, d),
                        subset_rank: rank,
                        copy: q % copies,
                    }
                }
            }
            Structure::OigLb { .. } => {
                if idx == 0 {
                    Hypothesis::AllZero
                } else {
                    Hypothesis::PairSingleton { index: idx - 1 }
                }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Hypothesis> + '_ {
        (0..self.len()).map(move |i| self.hypothesis(i))
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }

    pub fn target(&self) -> Hypothesis {
        self.hypothesis(self.target_index)
    }

    /// Checked evaluation: errors if the point is not in this class's domain.
    pub fn evaluate(&self, h: &Hypothesis, point: &Point) -> Result<bool> {
        self.domain.check(point)?;
        Ok(h.eval(point))
    }

    /// Distinct label patterns of the class members on an ordered point
    /// list. Duplicated points contribute duplicated coordinates. The
    /// target's pattern is always present.
    pub fn project(&self, points: &[Point]) -> Result<Vec<BitPattern>> {
        for p in points {
            self.domain.check(p)?;
        }
        let mut set = BTreeSet::new();
        let mut bits = vec![false; points.len()];
        for h in self.iter() {
            for (b, p) in bits.iter_mut().zip(points.iter()) {
                *b = h.eval(p);
            }
            set.insert(BitPattern::from_bits(&bits));
        }
        Ok(set.into_iter().collect())
    }

    /// Exact brute-force VC dimension, capped. Reports `AtLeast(cap)` when
    /// a cap-sized subset is shattered.
    pub fn vc_dimension(&self, cap: usize) -> VcBound {
        let n = self.domain.len();
        let mut best = 0;
        for s in 1..=cap.min(n) {
            if self.any_subset_shattered(s) {
                best = s;
            } else {
                return VcBound::Exact(best);
            }
        }
        if best == cap {
            VcBound::AtLeast(cap)
        } else {
            VcBound::Exact(best)
        }
    }

    fn any_subset_shattered(&self, s: usize) -> bool {
        let n = self.domain.len();
        let full = 1usize << s;
        let mut found = false;
        for_each_combination(n, s, &mut |ids| {
            if found {
                return;
            }
            let pts: Vec<Point> = ids.iter().map(|&i| self.domain.point(i)).collect();
            let mut patterns = std::collections::HashSet::with_capacity(full);
            for h in self.iter() {
                let mut code = 0usize;
                for (b, p) in pts.iter().enumerate() {
                    if h.eval(p) {
                        code |= 1 << b;
                    }
                }
                patterns.insert(code);
                if patterns.len() == full {
                    found = true;
                    return;
                }
            }
        });
        found
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VcBound {
    Exact(usize),
    AtLeast(usize),
}

impl VcBound {
    /// The certified lower bound on the dimension.
    pub fn value(&self) -> usize {
        match *self {
            VcBound::Exact(v) | VcBound::AtLeast(v) => v,
        }
    }
}

/// Class for the fixed-ERM voting lower bound: domain x_0..x_{r-1} plus one
/// y_T per d-subset T; hypotheses are h* and every SubsetIndicator(T).
pub fn build_class_majority_lb(r: usize, d: usize) -> Result<HypothesisClass> {
    if d < 1 || r < d {
        return Err(Error::InvalidParameters(format!(
            "need r >= d >= 1, got r={r}, d={d}"
        )));
    }
    let subsets = binomial(r, d);
    if subsets > 1 << 32 {
        return Err(Error::InvalidParameters(format!(
            "C({r},{d}) = {subsets} is too large"
        )));
    }
    Ok(HypothesisClass {
        domain: Domain::new(r, subsets as usize, 0),
        structure: Structure::MajorityLb { r, d },
        explicit: Vec::new(),
        target_index: 0,
    })
}

/// Class for the random-ERM voting lower bound: as [`build_class_majority_lb`]
/// but with `copies` z-points and `copies` near-identical copies of each
/// subset template.
pub fn build_class_majority_lb_rand(r: usize, d: usize, copies: usize) -> Result<HypothesisClass> {
    if d < 1 || r < d || copies < 1 {
        return Err(Error::InvalidParameters(format!(
            "need r >= d >= 1 and copies >= 1, got r={r}, d={d}, copies={copies}"
        )));
    }
    let subsets = binomial(r, d);
    if subsets > 1 << 32 {
        return Err(Error::InvalidParameters(format!(
            "C({r},{d}) = {subsets} is too large"
        )));
    }
    Ok(HypothesisClass {
        domain: Domain::new(r, subsets as usize, copies),
        structure: Structure::MajorityLbRand { r, d, copies },
        explicit: Vec::new(),
        target_index: 0,
    })
}

/// Class for the leave-one-out lower bound: `pairs` x/y pairs; hypotheses
/// are h* and one pair singleton per index.
pub fn build_class_oig_lb(pairs: usize) -> Result<HypothesisClass> {
    if pairs < 1 {
        return Err(Error::InvalidParameters("need at least one pair".into()));
    }
    Ok(HypothesisClass {
        domain: Domain::new(pairs, pairs, 0),
        structure: Structure::OigLb { pairs },
        explicit: Vec::new(),
        target_index: 0,
    })
}

/// Calls `f` on every k-combination of `{0, .., n-1}` in lexicographic order.
pub fn for_each_combination(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut ids: Vec<usize> = (0..k).collect();
    loop {
        f(&ids);
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if ids[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        ids[i] += 1;
        for j in i + 1..k {
            ids[j] = ids[j - 1] + 1;
        }
    }
}
