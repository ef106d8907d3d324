//! Search for reduced symmetry generators over expression DAGs.
//!
//! Candidates are generated by iterative deepening on the number of operator
//! nodes: for each size every canonical [`Skeleton`] is enumerated and its
//! slots labeled. Labelings are screened on probe points (see
//! [`labeler`]), deduplicated by [`fingerprint`], filtered for triviality,
//! scored with the loss and finally verified symbolically. A candidate is
//! accepted only if it raises the independence rank of the accepted set.

pub mod fingerprint;
mod labeler;
pub mod skeleton;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalPoint, Expr};
use crate::odeint::{OdeSystem, TrajectoryDataset};
use crate::symmetry::{
    matrix_rank, symbolic_zero, GeneratorCandidate, LossContext, Provenance, Scratch,
    SymmetryError, DEFAULT_ACCEPT_LOSS, DEFAULT_RANK_TOL, DEFAULT_TRIVIAL_EPS,
};

pub use fingerprint::{box_probes, fingerprint};
pub use skeleton::{
    build_expr, enumerate_skeletons, label_skeleton, leaf_alphabet, permutations, Child,
    LeafSymbol, Labeling, OperatorSet, Skeleton, Slot, UnaryLabel,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error("dataset has no points")]
    EmptyDataset,
    #[error("dataset dimension {data} does not match system dimension {system}")]
    Dimension { system: usize, data: usize },
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub max_operator_nodes: usize,
    pub operators: OperatorSet,
    /// Constant leaves; `t, y1..yd` are always available.
    pub leaf_constants: Vec<f64>,
    pub trivial_eps: f64,
    pub accept_loss: f64,
    pub time_budget: Option<Duration>,
    pub max_generators: usize,
    pub seed: u64,
    /// Accept only candidates whose residual simplifies to zero.
    pub require_symbolic: bool,
    /// Random points in the data's bounding box used for fingerprints.
    pub n_box_probes: usize,
    /// Dataset points used to screen labelings.
    pub n_data_probes: usize,
    /// Skeletons handed to the worker pool at a time.
    pub batch_size: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_operator_nodes: 7,
            operators: OperatorSet::standard(),
            leaf_constants: vec![1.0, 2.0],
            trivial_eps: DEFAULT_TRIVIAL_EPS,
            accept_loss: DEFAULT_ACCEPT_LOSS,
            time_budget: Some(Duration::from_secs(600)),
            max_generators: 1,
            seed: 0,
            require_symbolic: true,
            n_box_probes: 16,
            n_data_probes: 8,
            batch_size: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoundGenerator {
    pub candidate: GeneratorCandidate,
    /// Simplified form of the generator, used for printing.
    pub simplified: Expr,
    pub symbolic_zero: Vec<bool>,
    pub n_ops: usize,
}

impl FoundGenerator {
    pub fn is_symbolically_zero(&self) -> bool {
        self.symbolic_zero.iter().all(|&z| z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `max_generators` generators were accepted.
    Found,
    /// Every skeleton up to `max_operator_nodes` was searched.
    Exhausted,
    TimeBudget,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    /// Accepted generators, loss ascending.
    pub generators: Vec<FoundGenerator>,
    pub skeletons_enumerated: u64,
    pub candidates_scored: u64,
    pub candidates_deduplicated: u64,
    /// Candidates below the loss threshold whose residual did not simplify
    /// to zero.
    pub rejected_symbolic: u64,
    /// Largest operator count searched completely.
    pub completed_ops: Option<usize>,
    pub stop_reason: StopReason,
    pub wall_time: Duration,
}

/// Serializable view of a found generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorSummary {
    pub eta_star: String,
    pub simplified: String,
    pub loss: f64,
    pub symbolic_zero: Vec<bool>,
    pub n_ops: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl From<&FoundGenerator> for GeneratorSummary {
    fn from(g: &FoundGenerator) -> Self {
        GeneratorSummary {
            eta_star: g.candidate.eta_star.to_string(),
            simplified: g.simplified.to_string(),
            loss: g.candidate.loss,
            symbolic_zero: g.symbolic_zero.clone(),
            n_ops: g.n_ops,
            provenance: g.candidate.provenance,
        }
    }
}

/// Serializable view of a [`SearchResult`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchSummary {
    pub generators: Vec<GeneratorSummary>,
    pub skeletons_enumerated: u64,
    pub candidates_scored: u64,
    pub candidates_deduplicated: u64,
    pub rejected_symbolic: u64,
    pub completed_ops: Option<usize>,
    pub stop_reason: StopReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl SearchResult {
    /// JSON view; wall time is omitted unless `include_time`, which keeps
    /// the output byte-identical across runs.
    pub fn summary(&self, include_time: bool) -> SearchSummary {
        SearchSummary {
            generators: self.generators.iter().map(GeneratorSummary::from).collect(),
            skeletons_enumerated: self.skeletons_enumerated,
            candidates_scored: self.candidates_scored,
            candidates_deduplicated: self.candidates_deduplicated,
            rejected_symbolic: self.rejected_symbolic,
            completed_ops: self.completed_ops,
            stop_reason: self.stop_reason,
            wall_time_s: include_time.then(|| self.wall_time.as_secs_f64()),
        }
    }
}

/// Dataset points spread evenly over the sample order.
fn data_probe_points(ctx: &LossContext, n: usize) -> Vec<Vec<f64>> {
    let total = ctx.n_points();
    let n = n.min(total).max(1);
    (0..n)
        .map(|i| {
            let idx = if n == 1 { 0 } else { i * (total - 1) / (n - 1) };
            ctx.point(idx).to_vec()
        })
        .collect()
}

struct Accepted {
    found: Vec<FoundGenerator>,
    rows: Vec<Vec<f64>>,
}

/// Iterative-deepening search for generators of `sys` on `data`.
pub fn discover(
    sys: &OdeSystem,
    data: &TrajectoryDataset,
    cfg: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let start = Instant::now();
    let d = sys.dim();
    if data.dim != d {
        return Err(SearchError::Dimension {
            system: d,
            data: data.dim,
        });
    }
    if data.n_total() == 0 {
        return Err(SearchError::EmptyDataset);
    }
    let ctx = LossContext::new(sys, data)?;
    let alphabet = leaf_alphabet(d, &cfg.leaf_constants);
    let per_point_limit = cfg.accept_loss * (ctx.n_points() * d) as f64;
    let probe_points = data_probe_points(&ctx, cfg.n_data_probes);
    let probes = labeler::ProbeSet::new(sys, &probe_points, &alphabet, per_point_limit)
        .map_err(SymmetryError::from)?;
    let mut fp_points = box_probes(&data.bounding_box(), cfg.n_box_probes, cfg.seed);
    fp_points.extend(probe_points.iter().map(|p| EvalPoint::new(p[0], p[1..].to_vec())));

    let mut result = SearchResult {
        generators: Vec::new(),
        skeletons_enumerated: 0,
        candidates_scored: 0,
        candidates_deduplicated: 0,
        rejected_symbolic: 0,
        completed_ops: None,
        stop_reason: StopReason::Exhausted,
        wall_time: Duration::ZERO,
    };
    let mut accepted = Accepted {
        found: Vec::new(),
        rows: Vec::new(),
    };
    let mut seen: HashSet<u64> = HashSet::new();
    let mut scratch = Scratch::default();
    let mut skeleton_id: u64 = 0;
    let perms: Vec<Vec<Vec<u8>>> = (0..=alphabet.len())
        .map(|k| permutations(alphabet.len(), k))
        .collect();

    'deepening: for n_ops in 0..=cfg.max_operator_nodes {
        let skeletons = enumerate_skeletons(d, n_ops, alphabet.len());
        for batch in skeletons.chunks(cfg.batch_size.max(1)) {
            if let Some(budget) = cfg.time_budget {
                if start.elapsed() >= budget {
                    result.stop_reason = StopReason::TimeBudget;
                    break 'deepening;
                }
            }
            let scans: Vec<labeler::SkeletonScan> = batch
                .par_iter()
                .map(|sk| labeler::scan_skeleton(sk, &probes, &cfg.operators, &perms[sk.n_leaves]))
                .collect();
            for (sk, scan) in batch.iter().zip(scans) {
                let id = skeleton_id;
                skeleton_id += 1;
                result.skeletons_enumerated += 1;
                result.candidates_scored += scan.scored;
                for hit in scan.hits {
                    let eta = build_expr(sk, &hit.labeling, &alphabet, &cfg.operators);
                    if !seen.insert(fingerprint(&eta, &fp_points)) {
                        result.candidates_deduplicated += 1;
                        continue;
                    }
                    if ctx.is_trivial(&eta, cfg.trivial_eps, &mut scratch) {
                        continue;
                    }
                    let loss = ctx.loss(&eta);
                    if !(loss < cfg.accept_loss) {
                        continue;
                    }
                    let Some(row) = ctx.values(&eta, &mut scratch) else {
                        continue;
                    };
                    let mut rows = accepted.rows.clone();
                    rows.push(row);
                    if matrix_rank(&rows, DEFAULT_RANK_TOL) <= accepted.rows.len() {
                        continue;
                    }
                    let symbolic = symbolic_zero(sys, &eta)?;
                    if cfg.require_symbolic && !symbolic.iter().all(|&z| z) {
                        result.rejected_symbolic += 1;
                        continue;
                    }
                    let provenance = Provenance {
                        skeleton: id,
                        labeling: hit.labeling.id(sk, alphabet.len(), &cfg.operators),
                    };
                    accepted.rows = rows;
                    accepted.found.push(FoundGenerator {
                        simplified: eta.simplify(),
                        candidate: GeneratorCandidate {
                            eta_star: eta,
                            loss,
                            provenance: Some(provenance),
                        },
                        symbolic_zero: symbolic,
                        n_ops,
                    });
                    if accepted.found.len() >= cfg.max_generators {
                        result.stop_reason = StopReason::Found;
                        break 'deepening;
                    }
                }
            }
        }
        result.completed_ops = Some(n_ops);
    }

    let mut gens = accepted.found;
    gens.sort_by(|a, b| {
        a.candidate
            .loss
            .total_cmp(&b.candidate.loss)
            .then(a.candidate.provenance.cmp(&b.candidate.provenance))
    });
    result.generators = gens;
    result.wall_time = start.elapsed();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odeint::{build_dataset, IntegratorOptions};

    #[test]
    fn intro_finds_a_symbolically_verified_generator() {
        let sys = OdeSystem::parse("intro", &["-y2", "y1"], (1.0, 2.0), (0.0, 2.0)).unwrap();
        let data = build_dataset(&sys, 3, &IntegratorOptions::default(), 42).unwrap();
        let res = discover(&sys, &data, &SearchConfig::default()).unwrap();
        assert_eq!(res.stop_reason, StopReason::Found);
        let g = &res.generators[0];
        assert!(g.is_symbolically_zero());
        assert!(g.candidate.loss < 1e-10);
        assert_eq!(g.simplified.to_string(), "[y1, y2]");
        let again = discover(&sys, &data, &SearchConfig::default()).unwrap();
        assert_eq!(again.generators, res.generators);
        assert_eq!(again.candidates_scored, res.candidates_scored);
    }
}
