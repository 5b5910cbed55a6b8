//! PageRank, CheiRank and the PageRank-CheiRank trade balance.
//!
//! PageRank mass on `(u, t)` measures how much user `u` accumulates token `t`;
//! CheiRank, the PageRank of the reversed network, measures how much it spreads
//! it. Balances follow `(p* - p) / (p* + p)`, so spreading-dominant keys score
//! positive and accumulation-dominant keys negative.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::network::{Direction, MultiTokenNetwork};

/// Below this node count the power-iteration sweep runs on one thread.
const PARALLEL_SWEEP_MIN_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

impl PageRankParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(invalid("damping", self.damping, "must lie in (0, 1)"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid("tol", self.tol, "must be positive and finite"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", self.max_iter, "must be at least 1"));
        }
        Ok(())
    }
}

/// Stationary probability per node plus solver metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreVector {
    pub values: Vec<f64>,
    pub damping: f64,
    pub iterations: usize,
    /// L1 change of the final iteration.
    pub residual: f64,
    pub converged: bool,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        compensated_sum(self.values.iter().copied())
    }
}

/// Neumaier-compensated summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Compensated::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// PageRank by power iteration on the weight-normalised transition matrix.
///
/// Dangling nodes spread their mass uniformly and teleportation is uniform over
/// all nodes. Iteration stops once the L1 change drops below `tol`; if
/// `max_iter` is hit first the result comes back with `converged = false`.
pub fn pagerank(net: &MultiTokenNetwork, params: &PageRankParams) -> Result<ScoreVector> {
    params.validate()?;
    let n = net.node_count();
    if n == 0 {
        return Err(Error::Degenerate("PageRank of an empty network"));
    }
    let d = params.damping;
    let inv_n = 1.0 / n as f64;

    let out_strength: Vec<f64> = (0..n).map(|i| net.strength(i, Direction::Out) as f64).collect();
    let dangling: Vec<usize> = (0..n).filter(|&i| out_strength[i] == 0.0).collect();
    // Incoming (source, transition probability) lists, one per node.
    let incoming: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|j| {
            net.in_edges(j)
                .map(|e| (e.source, e.weight as f64 / out_strength[e.source]))
                .collect()
        })
        .collect();

    let mut rank = vec![inv_n; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    let sweep = |j: usize, rank: &[f64], base: f64| -> f64 {
        base + d * incoming[j].iter().map(|&(i, p)| rank[i] * p).sum::<f64>()
    };

    while iterations < params.max_iter {
        iterations += 1;
        let dangling_mass: f64 = dangling.iter().map(|&i| rank[i]).sum();
        let base = (1.0 - d) * inv_n + d * dangling_mass * inv_n;
        if n >= PARALLEL_SWEEP_MIN_NODES {
            next.par_iter_mut()
                .enumerate()
                .for_each(|(j, slot)| *slot = sweep(j, &rank, base));
        } else {
            for (j, slot) in next.iter_mut().enumerate() {
                *slot = sweep(j, &rank, base);
            }
        }
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < params.tol {
            converged = true;
            break;
        }
    }

    Ok(ScoreVector {
        values: rank,
        damping: d,
        iterations,
        residual,
        converged,
    })
}

/// PageRank of the transposed network.
pub fn cheirank(net: &MultiTokenNetwork, params: &PageRankParams) -> Result<ScoreVector> {
    pagerank(&net.transpose(), params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    User,
    Token,
}

/// Sum node mass per user (entity index) or per token (token index).
pub fn aggregate(net: &MultiTokenNetwork, scores: &ScoreVector, axis: Axis) -> Vec<f64> {
    let len = match axis {
        Axis::User => net.entities().len(),
        Axis::Token => net.tokens().len(),
    };
    let mut acc = vec![Compensated::default(); len];
    for (node, &mass) in net.nodes().iter().zip(&scores.values) {
        let key = match axis {
            Axis::User => node.entity,
            Axis::Token => node.token,
        };
        acc[key].add(mass);
    }
    acc.into_iter().map(Compensated::value).collect()
}

/// `(spread - accumulate) / (spread + accumulate)`, or `None` for a zero denominator.
pub fn balance(spread: f64, accumulate: f64) -> Option<f64> {
    let denom = spread + accumulate;
    (denom > 0.0).then(|| (spread - accumulate) / denom)
}

/// Balance per aggregated key. Keys with a zero denominator are `None`.
pub fn pctb(pr_agg: &[f64], cr_agg: &[f64]) -> Vec<Option<f64>> {
    assert_eq!(pr_agg.len(), cr_agg.len(), "aggregates must cover the same keys");
    pr_agg
        .iter()
        .zip(cr_agg)
        .enumerate()
        .map(|(key, (&p, &c))| {
            let b = balance(c, p);
            if b.is_none() {
                log::warn!("trade balance undefined for key {key}: zero PageRank and CheiRank mass");
            }
            b
        })
        .collect()
}

/// Per-node contribution `(p*_ut - p_ut) / (p*_u + p_u)`, sharing the user
/// denominator so that contributions over a user's tokens sum to its balance.
pub fn pctb_ut(
    net: &MultiTokenNetwork,
    pr: &ScoreVector,
    cr: &ScoreVector,
    pr_users: &[f64],
    cr_users: &[f64],
) -> Vec<Option<f64>> {
    net.nodes()
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let denom = cr_users[node.entity] + pr_users[node.entity];
            if denom > 0.0 {
                Some((cr.values[i] - pr.values[i]) / denom)
            } else {
                log::warn!("trade balance undefined for node {i}: zero user mass");
                None
            }
        })
        .collect()
}

/// PageRank, CheiRank, their aggregates and balances at every granularity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityReport {
    pub pagerank: ScoreVector,
    pub cheirank: ScoreVector,
    pub user_pagerank: Vec<f64>,
    pub user_cheirank: Vec<f64>,
    pub token_pagerank: Vec<f64>,
    pub token_cheirank: Vec<f64>,
    pub node_balance: Vec<Option<f64>>,
    pub user_balance: Vec<Option<f64>>,
    pub token_balance: Vec<Option<f64>>,
}

impl CentralityReport {
    pub fn compute(net: &MultiTokenNetwork, params: &PageRankParams) -> Result<Self> {
        let pagerank = pagerank(net, params)?;
        let cheirank = cheirank(net, params)?;
        let user_pagerank = aggregate(net, &pagerank, Axis::User);
        let user_cheirank = aggregate(net, &cheirank, Axis::User);
        let token_pagerank = aggregate(net, &pagerank, Axis::Token);
        let token_cheirank = aggregate(net, &cheirank, Axis::Token);
        let node_balance = pctb_ut(net, &pagerank, &cheirank, &user_pagerank, &user_cheirank);
        let user_balance = pctb(&user_pagerank, &user_cheirank);
        let token_balance = pctb(&token_pagerank, &token_cheirank);
        Ok(CentralityReport {
            pagerank,
            cheirank,
            user_pagerank,
            user_cheirank,
            token_pagerank,
            token_cheirank,
            node_balance,
            user_balance,
            token_balance,
        })
    }

    pub fn converged(&self) -> bool {
        self.pagerank.converged && self.cheirank.converged
    }
}
