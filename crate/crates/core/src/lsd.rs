//! Localized statistics decoding.
//!
//! One cluster is seeded on every flipped detector. While some cluster is
//! invalid (its local syndrome is outside the image of its sub-matrix),
//! every invalid cluster picks its most likely candidate fault (lowest LLR,
//! ties to the lower index). The picks of one sweep are then applied
//! together: clusters that would share a detector after growth are merged
//! through a union-find forest, with the lowest id as representative, and
//! each merged group is rebuilt by concatenating the member factorizations
//! and eliminating the new columns. Validity is read off the tracked
//! syndrome, so no cluster is ever re-eliminated.
//!
//! When every cluster is valid the correction is the union of the local
//! solutions. Higher-order decoding (LSD-μ) first grows every cluster by up
//! to μ further faults and then runs OSD inside each cluster.
//!
//! Merge groups within one sweep touch disjoint clusters, so the parallel
//! mode hands them to rayon unchanged and produces the same output as the
//! serial mode.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::gf2::{OtfFactorization, SparseBinaryMatrix};
use crate::model::{DetectorModel, Syndrome};
use crate::osd::{osd_decode, OsdMethod};
use crate::scalar::{cmp_real, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LsdError {
    #[error("syndrome is not in the image of the detector matrix (stuck cluster on detectors {detectors:?})")]
    Unsatisfiable { detectors: Vec<usize> },
    #[error("{got} LLRs for {expected} faults")]
    LlrCount { got: usize, expected: usize },
    #[error("LLR of fault {fault} is not finite")]
    NonFiniteLlr { fault: usize },
    #[error("detector {detector} out of range for {num_detectors} detectors")]
    SyndromeOutOfRange { detector: usize, num_detectors: usize },
    #[error("growth fraction {0} outside [0, 1]")]
    Budget(f64),
}

/// Extra growth after every cluster is valid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GrowthBudget {
    /// Up to this many growth steps per root cluster.
    Steps(usize),
    /// Steps equal to this fraction of the fault count, rounded up.
    FractionOfFaults(f64),
}

impl Default for GrowthBudget {
    fn default() -> Self {
        GrowthBudget::Steps(0)
    }
}

impl GrowthBudget {
    pub fn steps(&self, num_faults: usize) -> Result<usize, LsdError> {
        match *self {
            GrowthBudget::Steps(mu) => Ok(mu),
            GrowthBudget::FractionOfFaults(f) if (0.0..=1.0).contains(&f) => {
                Ok((f * num_faults as f64).ceil() as usize)
            }
            GrowthBudget::FractionOfFaults(f) => Err(LsdError::Budget(f)),
        }
    }
}

/// Solver applied inside each cluster once growth is over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LocalReprocessing {
    /// Local solve with free variables set to zero.
    #[default]
    None,
    OsdE(usize),
    OsdCs(usize),
}

impl LocalReprocessing {
    fn method(&self) -> Option<OsdMethod> {
        match *self {
            LocalReprocessing::None => None,
            LocalReprocessing::OsdE(w) => Some(OsdMethod::Exhaustive(w)),
            LocalReprocessing::OsdCs(w) => Some(OsdMethod::CombinationSweep(w)),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LsdConfig {
    pub mu: GrowthBudget,
    pub local_reprocessing: LocalReprocessing,
    pub parallel: bool,
}

/// Cluster count `ν`, largest cluster `κ` and mean cluster size `κ_α`,
/// sizes counted in fault columns.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClusterStats {
    pub nu: usize,
    pub kappa: usize,
    pub kappa_alpha: f64,
}

impl ClusterStats {
    pub fn from_sizes(sizes: &[usize]) -> Self {
        if sizes.is_empty() {
            return Self::default();
        }
        Self {
            nu: sizes.len(),
            kappa: sizes.iter().copied().max().unwrap_or(0),
            kappa_alpha: sizes.iter().sum::<usize>() as f64 / sizes.len() as f64,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate<T> {
    llr: T,
    fault: usize,
}

impl<T: Real> PartialEq for Candidate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Candidate<T> {}

impl<T: Real> PartialOrd for Candidate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Candidate<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_real(self.llr, other.llr).then(self.fault.cmp(&other.fault))
    }
}

/// Read-only decoding problem shared by every cluster.
struct Problem<'a, T> {
    h: &'a SparseBinaryMatrix,
    llrs: &'a [T],
    flipped: Vec<bool>,
}

impl<T: Real> Problem<'_, T> {
    fn candidate(&self, fault: usize) -> Candidate<T> {
        Candidate {
            llr: self.llrs[fault],
            fault,
        }
    }
}

/// A connected region of the decoding graph and its factorized sub-matrix.
#[derive(Clone, Debug)]
pub struct Cluster<T> {
    id: usize,
    fact: OtfFactorization,
    boundary: BTreeSet<usize>,
    candidates: BTreeSet<Candidate<T>>,
    valid: bool,
}

impl<T: Real> Cluster<T> {
    fn seed(id: usize, detector: usize, problem: &Problem<'_, T>) -> Self {
        let fact = OtfFactorization::with_rows([detector], |d| problem.flipped[d]);
        let row = problem.h.row(detector);
        let mut cluster = Self {
            id,
            valid: fact.is_valid(),
            fact,
            boundary: BTreeSet::new(),
            candidates: row.iter().map(|&f| problem.candidate(f)).collect(),
        };
        if !row.is_empty() {
            cluster.boundary.insert(detector);
        }
        cluster
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// Fault columns in insertion order.
    pub fn faults(&self) -> &[usize] {
        self.fact.col_order()
    }

    /// Detector rows in enclosure order.
    pub fn detectors(&self) -> &[usize] {
        self.fact.row_universe()
    }

    pub fn boundary(&self) -> &BTreeSet<usize> {
        &self.boundary
    }

    /// Candidate faults in growth order.
    pub fn candidates(&self) -> Vec<usize> {
        self.candidates.iter().map(|c| c.fault).collect()
    }

    pub fn factorization(&self) -> &OtfFactorization {
        &self.fact
    }

    /// The next fault this cluster would grow by.
    pub fn best_candidate(&self) -> Option<usize> {
        self.candidates.first().map(|c| c.fault)
    }

    fn refresh_boundary(&mut self, detector: usize, h: &SparseBinaryMatrix) {
        if h.row(detector).iter().any(|&f| !self.fact.contains_col(f)) {
            self.boundary.insert(detector);
        } else {
            self.boundary.remove(&detector);
        }
    }

    /// Adds `fault` and returns the detectors it brought into the cluster.
    fn add_fault(&mut self, fault: usize, problem: &Problem<'_, T>) -> Vec<usize> {
        if self.fact.contains_col(fault) {
            return Vec::new();
        }
        let support = problem.h.col(fault);
        let fresh: Vec<usize> = support
            .iter()
            .copied()
            .filter(|&d| !self.fact.contains_row(d))
            .collect();
        self.fact
            .add_column(fault, support, |d| problem.flipped[d])
            .expect("fault is new to the cluster and its column is well-formed");
        self.candidates.remove(&problem.candidate(fault));
        for &d in &fresh {
            for &g in problem.h.row(d) {
                if !self.fact.contains_col(g) {
                    self.candidates.insert(problem.candidate(g));
                }
            }
        }
        for &d in support {
            self.refresh_boundary(d, problem.h);
        }
        fresh
    }

    fn absorb(&mut self, other: Cluster<T>, problem: &Problem<'_, T>) {
        self.fact
            .absorb(other.fact)
            .expect("live clusters are disjoint");
        self.boundary.extend(other.boundary);
        self.candidates.extend(other.candidates);
        let fact = &self.fact;
        self.candidates.retain(|c| !fact.contains_col(c.fault));
        let stale: Vec<usize> = self.boundary.iter().copied().collect();
        for d in stale {
            self.refresh_boundary(d, problem.h);
        }
    }

    fn local_solution(&self, problem: &Problem<'_, T>, method: Option<OsdMethod>) -> Result<Vec<usize>, LsdError> {
        let unsat = || LsdError::Unsatisfiable {
            detectors: self.fact.syndrome_rows(),
        };
        let Some(method) = method else {
            return self.fact.solve_tracked().map_err(|_| unsat());
        };
        let local_h = self.fact.assembled();
        let local_s: Vec<usize> = (0..self.fact.num_rows())
            .filter(|&r| problem.flipped[self.fact.row_universe()[r]])
            .collect();
        let local_llrs: Vec<T> = self.faults().iter().map(|&f| problem.llrs[f]).collect();
        let x = osd_decode(&local_h, &local_s, &local_llrs, method).map_err(|_| unsat())?;
        let mut out: Vec<usize> = x.into_iter().map(|i| self.faults()[i]).collect();
        out.sort_unstable();
        Ok(out)
    }
}

/// Summary of one cluster at termination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterInfo {
    pub id: usize,
    pub faults: Vec<usize>,
    pub detectors: Vec<usize>,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsdOutput {
    /// Sorted support of the correction.
    pub correction: Vec<usize>,
    /// Root clusters at termination, by id.
    pub clusters: Vec<ClusterInfo>,
    /// Growth sweeps until every cluster was valid.
    pub sweeps: usize,
}

impl LsdOutput {
    pub fn stats(&self) -> ClusterStats {
        let sizes: Vec<usize> = self.clusters.iter().map(|c| c.faults.len()).collect();
        ClusterStats::from_sizes(&sizes)
    }
}

/// Union-find forest over clusters plus the detector ownership map.
pub struct ClusterForest<'a, T> {
    problem: Problem<'a, T>,
    parent: Vec<usize>,
    clusters: Vec<Option<Cluster<T>>>,
    roots: BTreeSet<usize>,
    owner: Vec<Option<usize>>,
    parallel: bool,
    sweeps: usize,
}

struct MergeJob<T> {
    root: Cluster<T>,
    members: Vec<Cluster<T>>,
    faults: Vec<usize>,
}

impl<'a, T: Real> ClusterForest<'a, T> {
    /// Seeds one cluster per flipped detector, ids in ascending detector order.
    pub fn new(h: &'a SparseBinaryMatrix, syndrome: &Syndrome, llrs: &'a [T], parallel: bool) -> Result<Self, LsdError> {
        if llrs.len() != h.num_cols() {
            return Err(LsdError::LlrCount {
                got: llrs.len(),
                expected: h.num_cols(),
            });
        }
        if let Some(fault) = llrs.iter().position(|l| !l.is_finite()) {
            return Err(LsdError::NonFiniteLlr { fault });
        }
        if let Some(&detector) = syndrome.bits().iter().find(|&&d| d >= h.num_rows()) {
            return Err(LsdError::SyndromeOutOfRange {
                detector,
                num_detectors: h.num_rows(),
            });
        }
        let problem = Problem {
            h,
            llrs,
            flipped: syndrome.to_dense(h.num_rows()),
        };
        let mut owner = vec![None; h.num_rows()];
        let clusters: Vec<Option<Cluster<T>>> = syndrome
            .bits()
            .iter()
            .enumerate()
            .map(|(id, &d)| {
                owner[d] = Some(id);
                Some(Cluster::seed(id, d, &problem))
            })
            .collect();
        let n = clusters.len();
        Ok(Self {
            problem,
            parent: (0..n).collect(),
            clusters,
            roots: (0..n).collect(),
            owner,
            parallel,
            sweeps: 0,
        })
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        lo
    }

    /// Root cluster owning `detector`, if any.
    pub fn owner_of(&mut self, detector: usize) -> Option<usize> {
        self.owner[detector].map(|c| self.find(c))
    }

    /// Live root clusters in ascending id.
    pub fn clusters(&self) -> impl Iterator<Item = &Cluster<T>> {
        self.roots
            .iter()
            .map(move |&r| self.clusters[r].as_ref().expect("roots are live"))
    }

    pub fn cluster(&self, id: usize) -> Option<&Cluster<T>> {
        self.clusters.get(id).and_then(Option::as_ref)
    }

    pub fn num_clusters(&self) -> usize {
        self.roots.len()
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn all_valid(&self) -> bool {
        self.clusters().all(Cluster::is_valid)
    }

    /// Applies one sweep of growth, `growers` listing `(root, fault)` picks.
    /// Clusters that would share a detector are merged; each merge group
    /// absorbs its members in ascending id and then adds the picked faults
    /// in the order given.
    fn apply_growth(&mut self, growers: &[(usize, usize)]) {
        if growers.is_empty() {
            return;
        }
        let mut touched: BTreeSet<usize> = growers.iter().map(|&(c, _)| c).collect();
        let mut claimed: HashMap<usize, usize> = HashMap::new();
        for &(c, f) in growers {
            for &d in self.problem.h.col(f) {
                if let Some(o) = self.owner_of(d) {
                    if o != self.find(c) {
                        touched.insert(o);
                        self.union(o, c);
                    }
                } else {
                    match claimed.get(&d) {
                        Some(&other) => {
                            self.union(other, c);
                        }
                        None => {
                            claimed.insert(d, c);
                        }
                    }
                }
            }
        }

        let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for &c in &touched {
            let r = self.find(c);
            groups.entry(r).or_default().0.push(c);
        }
        for &(c, f) in growers {
            let r = self.find(c);
            groups.get_mut(&r).expect("grower is touched").1.push(f);
        }

        let mut jobs = Vec::with_capacity(groups.len());
        for (root, (members, faults)) in groups {
            let root_cluster = self.clusters[root].take().expect("group root is live");
            let members = members
                .into_iter()
                .filter(|&m| m != root)
                .map(|m| {
                    self.roots.remove(&m);
                    self.clusters[m].take().expect("group member is live")
                })
                .collect();
            jobs.push(MergeJob {
                root: root_cluster,
                members,
                faults,
            });
        }

        let problem = &self.problem;
        let run = |job: MergeJob<T>| {
            let MergeJob {
                mut root,
                members,
                faults,
            } = job;
            for m in members {
                root.absorb(m, problem);
            }
            let mut fresh = Vec::new();
            for f in faults {
                fresh.extend(root.add_fault(f, problem));
            }
            root.valid = root.fact.is_valid();
            (root, fresh)
        };
        let done: Vec<(Cluster<T>, Vec<usize>)> = if self.parallel {
            jobs.into_par_iter().map(run).collect()
        } else {
            jobs.into_iter().map(run).collect()
        };

        for (cluster, fresh) in done {
            let id = cluster.id;
            for d in fresh {
                debug_assert!(self.owner[d].is_none());
                self.owner[d] = Some(id);
            }
            self.clusters[id] = Some(cluster);
        }
        self.sweeps += 1;
    }

    /// Grows the single root cluster `id` by its best candidate and returns
    /// the chosen fault.
    pub fn grow_cluster(&mut self, id: usize) -> Result<usize, LsdError> {
        let root = self.find(id);
        let cluster = self.clusters[root].as_ref().expect("root is live");
        let fault = cluster.best_candidate().ok_or_else(|| LsdError::Unsatisfiable {
            detectors: cluster.fact.syndrome_rows(),
        })?;
        self.apply_growth(&[(root, fault)]);
        Ok(fault)
    }

    /// One sweep of LSD-0: every invalid cluster grows by one fault.
    /// Returns `false` once every cluster is valid.
    pub fn step(&mut self) -> Result<bool, LsdError> {
        let mut growers = Vec::new();
        for c in self.clusters().filter(|c| !c.valid) {
            match c.best_candidate() {
                Some(f) => growers.push((c.id, f)),
                None => {
                    return Err(LsdError::Unsatisfiable {
                        detectors: c.fact.syndrome_rows(),
                    })
                }
            }
        }
        if growers.is_empty() {
            return Ok(false);
        }
        self.apply_growth(&growers);
        Ok(true)
    }

    /// Runs LSD-0 sweeps until every cluster is valid.
    pub fn run(&mut self) -> Result<(), LsdError> {
        while self.step()? {}
        Ok(())
    }

    /// One growth sweep over every root that still has candidates, valid or
    /// not. Returns `false` when no cluster can grow.
    pub fn grow_all(&mut self) -> bool {
        let growers: Vec<(usize, usize)> = self
            .clusters()
            .filter_map(|c| c.best_candidate().map(|f| (c.id, f)))
            .collect();
        if growers.is_empty() {
            return false;
        }
        self.apply_growth(&growers);
        true
    }

    /// Assembles the correction from the local solutions of every root.
    pub fn finish(&self, reprocessing: LocalReprocessing) -> Result<LsdOutput, LsdError> {
        let method = reprocessing.method();
        let roots: Vec<&Cluster<T>> = self.clusters().collect();
        let solve = |c: &&Cluster<T>| c.local_solution(&self.problem, method);
        let parts: Vec<Result<Vec<usize>, LsdError>> = if self.parallel {
            roots.par_iter().map(solve).collect()
        } else {
            roots.iter().map(solve).collect()
        };
        let mut correction = Vec::new();
        for p in parts {
            correction.extend(p?);
        }
        correction.sort_unstable();
        let clusters = roots
            .iter()
            .map(|c| ClusterInfo {
                id: c.id,
                faults: c.faults().to_vec(),
                detectors: c.detectors().to_vec(),
                rank: c.fact.rank(),
            })
            .collect();
        Ok(LsdOutput {
            correction,
            clusters,
            sweeps: self.sweeps,
        })
    }

    /// Checks every structural invariant of the forest; returns a
    /// description of the first violation.
    pub fn check_invariants(&mut self) -> Result<(), String> {
        let h = self.problem.h;
        let mut fault_owner: HashMap<usize, usize> = HashMap::new();
        let mut row_owner: HashMap<usize, usize> = HashMap::new();
        let roots: Vec<usize> = self.roots.iter().copied().collect();
        for &r in &roots {
            if self.find(r) != r {
                return Err(format!("cluster {r} is listed as a root but is not"));
            }
            let c = self.clusters[r].as_ref().ok_or(format!("root {r} is not live"))?;
            for &f in c.faults() {
                if let Some(o) = fault_owner.insert(f, r) {
                    return Err(format!("fault {f} in clusters {o} and {r}"));
                }
            }
            for &d in c.detectors() {
                if let Some(o) = row_owner.insert(d, r) {
                    return Err(format!("detector {d} in clusters {o} and {r}"));
                }
            }
            for &f in c.faults() {
                if let Some(&d) = h.col(f).iter().find(|&&d| !c.fact.contains_row(d)) {
                    return Err(format!("cluster {r} holds fault {f} without its detector {d}"));
                }
            }
            let boundary: BTreeSet<usize> = c
                .detectors()
                .iter()
                .copied()
                .filter(|&d| h.row(d).iter().any(|&f| !c.fact.contains_col(f)))
                .collect();
            if boundary != c.boundary {
                return Err(format!("cluster {r} boundary {:?} expected {:?}", c.boundary, boundary));
            }
            let candidates: BTreeSet<usize> = boundary
                .iter()
                .flat_map(|&d| h.row(d).iter().copied())
                .filter(|&f| !c.fact.contains_col(f))
                .collect();
            let held: BTreeSet<usize> = c.candidates.iter().map(|x| x.fault).collect();
            if candidates != held {
                return Err(format!("cluster {r} candidates {held:?} expected {candidates:?}"));
            }
            let local_s: Vec<usize> = c
                .detectors()
                .iter()
                .copied()
                .filter(|&d| self.problem.flipped[d])
                .collect();
            if c.valid != c.fact.in_image(&local_s) || c.valid != c.fact.is_valid() {
                return Err(format!("cluster {r} validity flag is stale"));
            }
            if !c.fact.replay_matches() {
                return Err(format!("cluster {r} factorization fails replay"));
            }
        }
        for d in 0..self.problem.flipped.len() {
            let flipped = self.problem.flipped[d];
            let held = row_owner.get(&d).copied();
            if held != self.owner_of(d) {
                return Err(format!("detector {d} owner map disagrees with clusters"));
            }
            if flipped && held.is_none() {
                return Err(format!("flipped detector {d} belongs to no cluster"));
            }
        }
        Ok(())
    }
}

/// LSD on a bare matrix: LSD-0 sweeps, then the growth budget and local
/// reprocessing from `config`.
pub fn lsd_decode_matrix<T: Real>(
    h: &SparseBinaryMatrix,
    syndrome: &Syndrome,
    llrs: &[T],
    config: &LsdConfig,
) -> Result<LsdOutput, LsdError> {
    let mut forest = ClusterForest::new(h, syndrome, llrs, config.parallel)?;
    forest.run()?;
    lsd_mu_reprocess(&mut forest, config)
}

/// LSD on a detector model with externally supplied LLRs.
pub fn lsd_decode<T: Real>(
    model: &DetectorModel<T>,
    syndrome: &Syndrome,
    llrs: &[T],
    config: &LsdConfig,
) -> Result<LsdOutput, LsdError> {
    lsd_decode_matrix(model.h(), syndrome, llrs, config)
}

/// Higher-order stage on a forest whose clusters are all valid: up to `μ`
/// growth sweeps over every root, then the local solver. A zero budget
/// returns the plain LSD-0 solution.
pub fn lsd_mu_reprocess<T: Real>(forest: &mut ClusterForest<'_, T>, config: &LsdConfig) -> Result<LsdOutput, LsdError> {
    debug_assert!(forest.all_valid());
    let sweeps = forest.sweeps();
    let mu = config.mu.steps(forest.problem.h.num_cols())?;
    if mu == 0 {
        return forest.finish(LocalReprocessing::None);
    }
    for _ in 0..mu {
        if !forest.grow_all() {
            break;
        }
    }
    let mut out = forest.finish(config.local_reprocessing)?;
    out.sweeps = sweeps;
    Ok(out)
}
