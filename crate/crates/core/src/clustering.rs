//! Feature clustering under the mutual-information distance.
//!
//! Clusters are always represented by an actual feature (the member nearest
//! the cluster mean), never by the mean itself: a mean of feature vectors is
//! not a feature and cannot be handed to the QP. Every metric evaluation is
//! tallied in a [`DistanceCounter`] so that the clustering cost can be checked
//! against closed-form counts.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::dataset::DiscretizedDataset;
use crate::infotheory::PairwiseMi;
use crate::{Error, Result};

/// A set of features with a metric between them and coordinates for
/// computing means.
pub trait FeatureSpace {
    fn n_features(&self) -> usize;

    /// Dimension of the coordinate space (the number of instances).
    fn dim(&self) -> usize;

    fn distance(&self, i: usize, j: usize) -> f64;

    /// `acc += coordinates(i)`.
    fn accumulate(&self, i: usize, acc: &mut [f64]);

    /// Squared Euclidean distance from feature `i` to `point`.
    fn sq_dist_to(&self, i: usize, point: &[f64]) -> f64;
}

/// Discretized features under `d = 1 − MI / max(H, H)`.
#[derive(Debug, Clone)]
pub struct MiSpace<'a> {
    pairwise: PairwiseMi<'a>,
}

impl<'a> MiSpace<'a> {
    pub fn new(dd: &'a DiscretizedDataset) -> Self {
        Self {
            pairwise: PairwiseMi::new(dd),
        }
    }

    pub fn pairwise(&self) -> &PairwiseMi<'a> {
        &self.pairwise
    }
}

impl FeatureSpace for MiSpace<'_> {
    fn n_features(&self) -> usize {
        self.pairwise.n_features()
    }

    fn dim(&self) -> usize {
        self.pairwise.dataset().n_instances()
    }

    #[inline]
    fn distance(&self, i: usize, j: usize) -> f64 {
        self.pairwise.distance(i, j)
    }

    fn accumulate(&self, i: usize, acc: &mut [f64]) {
        for (a, &c) in acc.iter_mut().zip(self.pairwise.dataset().feature(i)) {
            *a += f64::from(c);
        }
    }

    fn sq_dist_to(&self, i: usize, point: &[f64]) -> f64 {
        self.pairwise
            .dataset()
            .feature(i)
            .iter()
            .zip(point)
            .map(|(&c, p)| (f64::from(c) - p) * (f64::from(c) - p))
            .sum()
    }
}

/// Running tally of distance evaluations.
#[derive(Debug, Default)]
pub struct DistanceCounter(AtomicU64);

impl DistanceCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCluster {
    pub members: Vec<usize>,
    pub representative: usize,
    /// `max d(member, representative)`, once computed.
    pub radius: Option<f64>,
}

impl FeatureCluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub clusters: Vec<FeatureCluster>,
    /// Every distance evaluation made while producing this result.
    pub distance_count: u64,
    /// k-means tallies per level.
    pub level_counts: Vec<u64>,
    /// Tallies spent computing radii.
    pub radius_count: u64,
}

impl ClusteringResult {
    pub fn representatives(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.representative).collect()
    }
}

/// `2Mk − 2k² + 2M`: distance evaluations made by [`variant_macqueen`].
pub fn macqueen_distance_count(m: usize, k: usize) -> u64 {
    let (m, k) = (m as u64, k as u64);
    2 * m * k - 2 * k * k + 2 * m
}

struct Assignment {
    members: Vec<Vec<usize>>,
    means: Vec<Vec<f64>>,
}

/// Nearest representative by distance, lowest cluster index on ties.
fn nearest<S: FeatureSpace>(
    space: &S,
    f: usize,
    reps: &[usize],
    counter: &DistanceCounter,
) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &r) in reps.iter().enumerate() {
        let d = space.distance(f, r);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    counter.add(reps.len() as u64);
    best
}

/// One MacQueen pass: every representative seeds its own cluster, then the
/// remaining features join the nearest representative in input order while
/// the cluster means are updated incrementally.
fn assignment_pass<S: FeatureSpace>(
    space: &S,
    features: &[usize],
    reps: &[usize],
    counter: &DistanceCounter,
) -> Assignment {
    let dim = space.dim();
    let mut members: Vec<Vec<usize>> = reps.iter().map(|&r| vec![r]).collect();
    let mut sums: Vec<Vec<f64>> = reps
        .iter()
        .map(|&r| {
            let mut acc = vec![0.0; dim];
            space.accumulate(r, &mut acc);
            acc
        })
        .collect();
    let mut is_rep = reps.to_vec();
    is_rep.sort_unstable();
    for &f in features {
        if is_rep.binary_search(&f).is_ok() {
            continue;
        }
        let c = nearest(space, f, reps, counter);
        members[c].push(f);
        space.accumulate(f, &mut sums[c]);
    }
    let means = sums
        .into_iter()
        .zip(&members)
        .map(|(mut s, m)| {
            let n = m.len() as f64;
            s.iter_mut().for_each(|v| *v /= n);
            s
        })
        .collect();
    Assignment { members, means }
}

/// Member nearest to each cluster mean; one tally per member.
fn nearest_to_means<S: FeatureSpace>(
    space: &S,
    a: &Assignment,
    counter: &DistanceCounter,
) -> Vec<usize> {
    a.members
        .iter()
        .zip(&a.means)
        .map(|(members, mean)| {
            counter.add(members.len() as u64);
            let mut best = members[0];
            let mut best_d = f64::INFINITY;
            for &f in members {
                let d = space.sq_dist_to(f, mean);
                if d < best_d || (d == best_d && f < best) {
                    best = f;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

/// Two-pass MacQueen k-means over `features` returning representative
/// features.
///
/// Pass one seeds the clusters with the first `k` features and assigns the
/// rest; pass two reassigns every non-representative feature against the
/// representatives chosen after pass one. After each pass the member nearest
/// the cluster mean (squared Euclidean in code space) becomes the
/// representative. Each pass costs `k(M − k)` metric evaluations plus `M`
/// mean-distance evaluations, `2Mk − 2k² + 2M` in total.
pub fn variant_macqueen<S: FeatureSpace>(
    space: &S,
    features: &[usize],
    k: usize,
    counter: &DistanceCounter,
) -> Result<ClusteringResult> {
    if features.is_empty() {
        return Err(Error::param(
            "features",
            "cannot cluster an empty feature set",
        ));
    }
    if k == 0 || k > features.len() {
        return Err(Error::param(
            "k",
            format!("{k} clusters requested for {} features", features.len()),
        ));
    }
    let start = counter.get();

    let seeds = &features[..k];
    let first = assignment_pass(space, features, seeds, counter);
    let reps = nearest_to_means(space, &first, counter);

    let second = assignment_pass(space, features, &reps, counter);
    let reps = nearest_to_means(space, &second, counter);

    let clusters = second
        .members
        .into_iter()
        .zip(reps)
        .map(|(members, representative)| FeatureCluster {
            members,
            representative,
            radius: None,
        })
        .collect();
    let spent = counter.get() - start;
    Ok(ClusteringResult {
        clusters,
        distance_count: spent,
        level_counts: vec![spent],
        radius_count: 0,
    })
}

/// `max d(member, representative)`; tallies one evaluation per member other
/// than the representative.
pub fn cluster_radius<S: FeatureSpace>(
    space: &S,
    c: &FeatureCluster,
    counter: &DistanceCounter,
) -> f64 {
    let others = c.members.iter().filter(|&&f| f != c.representative);
    counter.add(others.clone().count() as u64);
    others
        .map(|&f| space.distance(f, c.representative))
        .fold(0.0, f64::max)
}

/// Sub-cluster count `min(size, ⌈(r/τ)^N⌉)`, evaluated in log space so that
/// large `N` saturates instead of overflowing.
pub fn split_count(radius: f64, tau: f64, n: usize, size: usize) -> usize {
    if size <= 1 || radius <= tau {
        return size.min(1);
    }
    let log_count = n as f64 * libm::log(radius / tau);
    if log_count >= libm::log(size as f64) {
        return size;
    }
    let c = libm::ceil(libm::exp(log_count)) as usize;
    c.clamp(2, size)
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::param("tau", format!("{tau} is outside (0, 1]")));
    }
    Ok(())
}

/// Two-level k-means: MacQueen with `k_init` clusters, then every cluster
/// whose radius exceeds `tau` is split again with MacQueen into
/// [`split_count`] sub-clusters. All output clusters carry their radius.
pub fn tlkm<S: FeatureSpace>(
    space: &S,
    features: &[usize],
    k_init: usize,
    tau: f64,
    counter: &DistanceCounter,
) -> Result<ClusteringResult> {
    check_tau(tau)?;
    let start = counter.get();
    let level1 = variant_macqueen(space, features, k_init, counter)?;
    let mut level2_count = 0u64;
    let mut radius_count = 0u64;
    let mut clusters = Vec::with_capacity(level1.clusters.len());

    for mut c in level1.clusters {
        let before = counter.get();
        let r = cluster_radius(space, &c, counter);
        radius_count += counter.get() - before;
        if r <= tau {
            c.radius = Some(r);
            clusters.push(c);
            continue;
        }
        let n_sub = split_count(r, tau, space.dim(), c.len());
        let sub = variant_macqueen(space, &c.members, n_sub, counter)?;
        level2_count += sub.distance_count;
        for mut sc in sub.clusters {
            let before = counter.get();
            sc.radius = Some(cluster_radius(space, &sc, counter));
            radius_count += counter.get() - before;
            clusters.push(sc);
        }
    }
    Ok(ClusteringResult {
        clusters,
        distance_count: counter.get() - start,
        level_counts: vec![level1.distance_count, level2_count],
        radius_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `max(R / k^{1/N}, R / (M − k)^{1/N}) ≤ τ ≤ R`.
pub fn tau_bounds(r: f64, k: usize, m: usize, n: usize) -> Result<TauBounds> {
    if !(r > 0.0) {
        return Err(Error::param("R", "must be positive"));
    }
    if k == 0 || k >= m {
        return Err(Error::param(
            "k",
            format!("need 0 < k < M, got k = {k}, M = {m}"),
        ));
    }
    if n == 0 {
        return Err(Error::param("N", "must be positive"));
    }
    let root = |x: usize| libm::pow(x as f64, 1.0 / n as f64);
    let lower = (r / root(k)).max(r / root(m - k));
    Ok(TauBounds { lower, upper: r })
}

/// Approximate enclosing radius `R`: the largest distance from the feature
/// nearest the global mean. Lies between the optimal 1-center radius and
/// twice it.
pub fn enclosing_radius<S: FeatureSpace>(space: &S, features: &[usize]) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::param("features", "must be nonempty"));
    }
    let mut mean = vec![0.0; space.dim()];
    for &f in features {
        space.accumulate(f, &mut mean);
    }
    let n = features.len() as f64;
    mean.iter_mut().for_each(|v| *v /= n);
    let center = features
        .iter()
        .copied()
        .map(|f| (space.sq_dist_to(f, &mean), f))
        .fold((f64::INFINITY, features[0]), |best, cur| {
            if cur.0 < best.0 {
                cur
            } else {
                best
            }
        })
        .1;
    Ok(features
        .iter()
        .map(|&f| space.distance(f, center))
        .fold(0.0, f64::max))
}
