//! One-inclusion graphs, min-max out-degree orientations, and the
//! transductive predictor built on them.
//!
//! The graph is built on an ordered point list (train points then the test
//! point): vertices are the distinct label patterns the class realizes on
//! the list, edges join patterns at Hamming distance one, and each edge
//! carries the coordinate where its endpoints differ. Prediction reads the
//! orientation of the edge between the two candidate completions of the
//! train labels in the test coordinate: the head's bit is the prediction.

use crate::adversary::LabeledExample;
use crate::domain::{HypothesisClass, Point};
use crate::error::{Error, Result};
use crate::pattern::BitPattern;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Undirected edge between vertex indices `a < b`, differing exactly at
/// coordinate `coord`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub coord: usize,
}

#[derive(Debug, Clone)]
pub struct OneInclusionGraph {
    /// Distinct realized patterns in lexicographic order.
    pub vertices: Vec<BitPattern>,
    pub edges: Vec<Edge>,
    /// Incident edge indices per vertex.
    pub adjacency: Vec<Vec<usize>>,
}

impl OneInclusionGraph {
    pub fn from_patterns(vertices: Vec<BitPattern>) -> OneInclusionGraph {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        // patterns at Hamming distance 1 differ by exactly 1 in popcount,
        // so only adjacent popcount buckets need pairwise scans
        let max_ones = vertices.iter().map(|v| v.count_ones()).max().unwrap_or(0);
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_ones + 1];
        for (i, v) in vertices.iter().enumerate() {
            buckets[v.count_ones()].push(i);
        }
        let mut edges = Vec::new();
        for k in 0..max_ones {
            for &i in &buckets[k] {
                for &j in &buckets[k + 1] {
                    if let Some(coord) = vertices[i].single_difference(&vertices[j]) {
                        let (a, b) = if i < j { (i, j) } else { (j, i) };
                        edges.push(Edge { a, b, coord });
                    }
                }
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for (idx, e) in edges.iter().enumerate() {
            adjacency[e.a].push(idx);
            adjacency[e.b].push(idx);
        }
        OneInclusionGraph {
            vertices,
            edges,
            adjacency,
        }
    }

    /// Index of the vertex equal to `pattern`, if realized.
    pub fn vertex_index(&self, pattern: &BitPattern) -> Option<usize> {
        self.vertices.binary_search(pattern).ok()
    }

    /// Edge between two vertex indices, if present.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.adjacency[a]
            .iter()
            .copied()
            .find(|&e| self.edges[e].a == a && self.edges[e].b == b)
    }
}

/// Projects the class onto the point list and builds the graph.
pub fn build_oig(class: &HypothesisClass, points: &[Point]) -> Result<OneInclusionGraph> {
    let patterns = class.project(points)?;
    Ok(OneInclusionGraph::from_patterns(patterns))
}

/// An orientation: each edge is assigned a tail, and points out of it.
#[derive(Debug, Clone)]
pub struct Orientation {
    /// Tail vertex index per edge.
    pub tails: Vec<usize>,
    pub out_degree: Vec<usize>,
    pub max_out_degree: usize,
}

impl Orientation {
    fn from_tails(num_vertices: usize, edges: &[Edge], tails: Vec<usize>) -> Orientation {
        let mut out_degree = vec![0usize; num_vertices];
        for &t in &tails {
            out_degree[t] += 1;
        }
        let max_out_degree = out_degree.iter().copied().max().unwrap_or(0);
        debug_assert_eq!(tails.len(), edges.len());
        Orientation {
            tails,
            out_degree,
            max_out_degree,
        }
    }

    /// Head (the vertex the edge points to) of edge `idx`.
    pub fn head(&self, edges: &[Edge], idx: usize) -> usize {
        let e = edges[idx];
        if self.tails[idx] == e.a {
            e.b
        } else {
            e.a
        }
    }
}

/// Assigns every edge a tail so that no vertex exceeds out-degree `cap`,
/// via augmenting paths; `None` if infeasible. Deterministic: edges are
/// processed in index order and endpoints in (a, b) order.
fn assign_with_cap(
    num_vertices: usize,
    edges: &[Edge],
    adjacency: &[Vec<usize>],
    cap: usize,
) -> Option<Vec<usize>> {
    if cap == 0 {
        return edges.is_empty().then(Vec::new);
    }
    let mut state = AssignState {
        edges,
        adjacency,
        cap,
        assign: vec![None; edges.len()],
        load: vec![0usize; num_vertices],
    };
    for e in 0..edges.len() {
        let mut visited = vec![false; edges.len()];
        visited[e] = true;
        let placed = [edges[e].a, edges[e].b]
            .into_iter()
            .any(|v| state.place(e, v, &mut visited));
        if !placed {
            return None;
        }
    }
    debug_assert!(state.load.iter().all(|&l| l <= cap));
    Some(state.assign.into_iter().map(|a| a.unwrap()).collect())
}

struct AssignState<'a> {
    edges: &'a [Edge],
    adjacency: &'a [Vec<usize>],
    cap: usize,
    assign: Vec<Option<usize>>,
    load: Vec<usize>,
}

impl AssignState<'_> {
    /// Puts edge `e` at vertex `v`, evicting a current occupant toward its
    /// other endpoint if `v` is full.
    fn place(&mut self, e: usize, v: usize, visited: &mut Vec<bool>) -> bool {
        if self.load[v] >= self.cap && !self.evict_one(v, visited) {
            return false;
        }
        self.assign[e] = Some(v);
        self.load[v] += 1;
        true
    }

    /// Frees one slot at `v` by moving some edge assigned here to its
    /// other endpoint (possibly evicting there in turn).
    fn evict_one(&mut self, v: usize, visited: &mut Vec<bool>) -> bool {
        for i in 0..self.adjacency[v].len() {
            let e2 = self.adjacency[v][i];
            if self.assign[e2] != Some(v) || visited[e2] {
                continue;
            }
            visited[e2] = true;
            let other = if self.edges[e2].a == v {
                self.edges[e2].b
            } else {
                self.edges[e2].a
            };
            if self.load[other] < self.cap || self.evict_one(other, visited) {
                self.assign[e2] = Some(other);
                self.load[other] += 1;
                self.load[v] -= 1;
                return true;
            }
        }
        false
    }
}

/// Minimizes the maximum out-degree: binary search on the cap with an
/// augmenting-path feasibility check. The returned orientation's
/// `max_out_degree` is the graph's orientation number.
pub fn min_max_out_degree_orientation(graph: &OneInclusionGraph) -> Orientation {
    let nv = graph.vertices.len();
    if graph.edges.is_empty() {
        return Orientation::from_tails(nv, &graph.edges, Vec::new());
    }
    let max_degree = graph.adjacency.iter().map(|a| a.len()).max().unwrap();
    let (mut lo, mut hi) = (1usize, max_degree);
    let mut best = None;
    while lo <= hi {
        let mid = lo + (hi - lo) / 2;
        match assign_with_cap(nv, &graph.edges, &graph.adjacency, mid) {
            Some(tails) => {
                best = Some(tails);
                hi = mid - 1;
            }
            None => lo = mid + 1,
        }
    }
    Orientation::from_tails(nv, &graph.edges, best.expect("cap = max degree is feasible"))
}

const ENUMERATION_EDGE_CAP: usize = 20;

/// Exhaustive statistics over orientations achieving the minimum possible
/// maximum out-degree. Refuses graphs with more than 20 edges.
#[derive(Debug, Clone)]
pub struct OptimalOrientationStats {
    pub tau: usize,
    /// Number of optimal orientations.
    pub count: u64,
    /// Per edge: in how many optimal orientations vertex `a` is the tail.
    pub tail_a_count: Vec<u64>,
}

fn for_each_optimal_mask(graph: &OneInclusionGraph, mut f: impl FnMut(u32)) -> Result<usize> {
    let ne = graph.edges.len();
    if ne > ENUMERATION_EDGE_CAP {
        return Err(Error::CapacityExceeded(format!(
            "{ne} edges exceeds the exhaustive-orientation cap of {ENUMERATION_EDGE_CAP}"
        )));
    }
    let nv = graph.vertices.len();
    let mut tau = usize::MAX;
    let mut masks: Vec<u32> = Vec::new();
    let mut out = vec![0usize; nv];
    for mask in 0u32..1 << ne {
        out.iter_mut().for_each(|o| *o = 0);
        for (i, e) in graph.edges.iter().enumerate() {
            // bit set: tail is a
            let tail = if mask >> i & 1 == 1 { e.a } else { e.b };
            out[tail] += 1;
        }
        let worst = out.iter().copied().max().unwrap_or(0);
        if worst < tau {
            tau = worst;
            masks.clear();
        }
        if worst == tau {
            masks.push(mask);
        }
    }
    for m in masks {
        f(m);
    }
    Ok(tau)
}

pub fn optimal_orientation_stats(graph: &OneInclusionGraph) -> Result<OptimalOrientationStats> {
    let ne = graph.edges.len();
    let mut count = 0u64;
    let mut tail_a_count = vec![0u64; ne];
    let tau = for_each_optimal_mask(graph, |mask| {
        count += 1;
        for (i, c) in tail_a_count.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *c += 1;
            }
        }
    })?;
    Ok(OptimalOrientationStats {
        tau,
        count,
        tail_a_count,
    })
}

/// Uniform draw from the optimal orientations (exhaustive; 20-edge cap).
pub fn sample_uniform_optimal_orientation(
    graph: &OneInclusionGraph,
    rng: &mut ChaCha8Rng,
) -> Result<Orientation> {
    let mut masks = Vec::new();
    for_each_optimal_mask(graph, |m| masks.push(m))?;
    let mask = masks[rng.gen_range(0..masks.len())];
    let tails = graph
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| if mask >> i & 1 == 1 { e.a } else { e.b })
        .collect();
    Ok(Orientation::from_tails(
        graph.vertices.len(),
        &graph.edges,
        tails,
    ))
}

/// How the predictor orients the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrientationRule {
    /// Deterministic minimizer of the maximum out-degree.
    MinMax,
    /// Uniform over all optimal orientations (exhaustive; 20-edge cap).
    UniformOptimal,
}

/// Probability that the one-inclusion predictor outputs 1 on `test` after
/// seeing `train`. Deterministic rules return 0 or 1; the randomized rule
/// returns the exact probability over its orientation draw.
///
/// The point list is canonicalized (sorted by point id) before the graph
/// is built, so the prediction is a function of the train/test multiset
/// alone. That symmetry is what makes the predictor exchangeable over the
/// combined sample, which the leave-one-out error bound relies on.
pub fn predict_prob_one(
    class: &HypothesisClass,
    train: &[LabeledExample],
    test: &Point,
    rule: OrientationRule,
) -> Result<f64> {
    let mut items: Vec<(Point, Option<bool>)> =
        train.iter().map(|ex| (ex.point, Some(ex.label))).collect();
    items.push((*test, None));
    items.sort_by_key(|(p, _)| p.id);
    let points: Vec<Point> = items.iter().map(|(p, _)| *p).collect();
    let graph = build_oig(class, &points)?;
    // which duplicate of the test's id carries the test bit is immaterial:
    // equal points have equal bits in every realized pattern
    let bits: Vec<bool> = items
        .iter()
        .map(|(_, label)| label.unwrap_or(false))
        .collect();
    let test_coord = items.iter().position(|(_, l)| l.is_none()).unwrap();
    let mut pattern = BitPattern::from_bits(&bits);
    let v0 = graph.vertex_index(&pattern);
    pattern.set(test_coord, true);
    let v1 = graph.vertex_index(&pattern);
    match (v0, v1) {
        (None, None) => Err(Error::RealizabilityViolation),
        (Some(_), None) => Ok(0.0),
        (None, Some(_)) => Ok(1.0),
        (Some(u), Some(w)) => {
            let e = graph
                .edge_between(u, w)
                .expect("completions differ in one coordinate");
            match rule {
                OrientationRule::MinMax => {
                    let o = min_max_out_degree_orientation(&graph);
                    Ok(if o.head(&graph.edges, e) == w { 1.0 } else { 0.0 })
                }
                OrientationRule::UniformOptimal => {
                    let stats = optimal_orientation_stats(&graph)?;
                    // head is v1 when the tail is the other endpoint
                    let toward_one = if graph.edges[e].a == u {
                        stats.tail_a_count[e]
                    } else {
                        stats.count - stats.tail_a_count[e]
                    };
                    Ok(toward_one as f64 / stats.count as f64)
                }
            }
        }
    }
}

/// Leave-one-out error count on a shared graph: for each coordinate,
/// predict the held-out bit of `truth` from the rest using the given
/// orientation, and count mistakes. Equals the out-degree of the truth
/// vertex; computed independently here so the identity is checkable.
pub fn loo_errors(
    graph: &OneInclusionGraph,
    orientation: &Orientation,
    truth: &BitPattern,
) -> Result<usize> {
    let v = graph
        .vertex_index(truth)
        .ok_or(Error::RealizabilityViolation)?;
    let mut errors = 0;
    for coord in 0..truth.len() {
        let mut flipped = truth.clone();
        flipped.set(coord, !truth.get(coord));
        let prediction = match graph.vertex_index(&flipped) {
            // the alternative completion is not realized: forced correct
            None => truth.get(coord),
            Some(w) => {
                let e = graph.edge_between(v, w).expect("flip is distance 1");
                debug_assert_eq!(graph.edges[e].coord, coord);
                let head = orientation.head(&graph.edges, e);
                graph.vertices[head].get(coord)
            }
        };
        if prediction != truth.get(coord) {
            errors += 1;
        }
    }
    Ok(errors)
}

/// Plain-text dump: vertices with their patterns, then directed edges.
pub fn graph_to_text(graph: &OneInclusionGraph, orientation: &Orientation) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    writeln!(
        out,
        "vertices {} edges {} max_out_degree {}",
        graph.vertices.len(),
        graph.edges.len(),
        orientation.max_out_degree
    )
    .unwrap();
    for (i, v) in graph.vertices.iter().enumerate() {
        writeln!(out, "vertex {i} {v}").unwrap();
    }
    for (i, e) in graph.edges.iter().enumerate() {
        let (tail, head) = (orientation.tails[i], orientation.head(&graph.edges, i));
        writeln!(out, "edge {tail} -> {head} coord {}", e.coord).unwrap();
    }
    out
}
