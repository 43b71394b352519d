//! Discrete diffusion over binary node and edge states.
//!
//! Every node and every unordered node pair carries a category in `{0, 1}`.
//! The forward process applies uniform transition matrices
//! `Q^t = α^t I + (1 − α^t) 11ᵀ/2` independently to each entry; the
//! cumulative product `Q̄^t = Q^1 ⋯ Q^t` stays of the same form with
//! `ᾱ^t = ∏ α^s`. Nodes and edges share one schedule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairs::pair_count;
use crate::placement::PlacementGraph;

pub type Matrix2 = [[f64; 2]; 2];

const IDENTITY: Matrix2 = [[1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Linear,
    #[default]
    Cosine,
}

fn uniform_transition(alpha: f64) -> Matrix2 {
    let off = (1.0 - alpha) / 2.0;
    [[alpha + off, off], [off, alpha + off]]
}

fn matmul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    alpha: Vec<f64>,
    /// `q[t-1]` is `Q^t`.
    q: Vec<Matrix2>,
    /// `q_bar[t]` is `Q̄^t`; `q_bar[0]` is the identity.
    q_bar: Vec<Matrix2>,
}

impl DiffusionSchedule {
    /// Schedule with `steps` steps. `Linear` makes `ᾱ^t = 1 − t/T`; `Cosine`
    /// makes `ᾱ^t` follow a squared cosine with a small offset. Both end at
    /// `ᾱ^T = 0` up to rounding.
    pub fn new(steps: usize, kind: ScheduleKind) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument("diffusion needs at least one step".into()));
        }
        let t_max = steps as f64;
        let bar = |t: usize| -> f64 {
            let x = t as f64 / t_max;
            match kind {
                ScheduleKind::Linear => 1.0 - x,
                ScheduleKind::Cosine => {
                    const S: f64 = 0.008;
                    let f = |x: f64| ((x + S) / (1.0 + S) * std::f64::consts::FRAC_PI_2).cos().powi(2);
                    (f(x) / f(0.0)).clamp(0.0, 1.0)
                }
            }
        };
        let alpha = (1..=steps)
            .map(|t| {
                let prev = bar(t - 1);
                if prev <= 0.0 {
                    0.0
                } else {
                    (bar(t) / prev).clamp(0.0, 1.0)
                }
            })
            .collect();
        Self::from_alphas(alpha)
    }

    /// Schedule from explicit per-step `α^1 … α^T`, each in `[0, 1]`.
    pub fn from_alphas(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidArgument("diffusion needs at least one step".into()));
        }
        if let Some(a) = alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidArgument(format!("alpha {a} outside [0, 1]")));
        }
        let q: Vec<Matrix2> = alpha.iter().map(|&a| uniform_transition(a)).collect();
        let mut q_bar = Vec::with_capacity(q.len() + 1);
        q_bar.push(IDENTITY);
        for m in &q {
            let next = matmul(q_bar.last().expect("seeded with identity"), m);
            q_bar.push(next);
        }
        Ok(Self { alpha, q, q_bar })
    }

    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t - 1]
    }

    /// `Q^t`, for `1 <= t <= T`.
    pub fn q(&self, t: usize) -> &Matrix2 {
        &self.q[t - 1]
    }

    /// `Q̄^t`, for `0 <= t <= T`.
    pub fn q_bar(&self, t: usize) -> &Matrix2 {
        &self.q_bar[t]
    }

    fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::InvalidArgument(format!(
                "timestep {t} outside [1, {}]",
                self.steps()
            )));
        }
        Ok(())
    }

    /// `q(z^{t-1} | z^t, z^0) ∝ (z^t Q^tᵀ) ⊙ (z^0 Q̄^{t-1})`.
    pub fn posterior(&self, z_t: u8, z0: u8, t: usize) -> Result<[f64; 2]> {
        self.check_step(t)?;
        let q = self.q(t);
        let qb = self.q_bar(t - 1);
        let un = [
            q[0][z_t as usize] * qb[z0 as usize][0],
            q[1][z_t as usize] * qb[z0 as usize][1],
        ];
        let norm = un[0] + un[1];
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "posterior undefined: z_t={z_t} unreachable from z0={z0} at t={t}"
            )));
        }
        Ok([un[0] / norm, un[1] / norm])
    }

    /// For an observed transition `z^t -> z^{t-1}`, the vector
    /// `c[v] = q(z^{t-1} | z^t, z^0 = v)`, so that the denoising
    /// probability of the transition is `Σ_v p̂(v) c[v]`. Unreachable `v`
    /// contribute 0.
    pub fn transition_coefficients(&self, z_t: u8, z_prev: u8, t: usize) -> Result<[f64; 2]> {
        self.check_step(t)?;
        let mut c = [0.0; 2];
        for (v, slot) in c.iter_mut().enumerate() {
            if let Ok(p) = self.posterior(z_t, v as u8, t) {
                *slot = p[z_prev as usize];
            }
        }
        Ok(c)
    }

    /// Denoising distribution of one entry: the posterior mixed over the
    /// predicted clean state.
    pub fn mixed_posterior(&self, z_t: u8, predicted: [f64; 2], t: usize) -> Result<[f64; 2]> {
        self.check_step(t)?;
        let mut out = [0.0; 2];
        for v in 0..2 {
            if predicted[v] == 0.0 {
                continue;
            }
            let p = self.posterior(z_t, v as u8, t)?;
            out[0] += predicted[v] * p[0];
            out[1] += predicted[v] * p[1];
        }
        let norm = out[0] + out[1];
        Ok([out[0] / norm, out[1] / norm])
    }
}

/// Categorical node and edge states at a diffusion timestep.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphState {
    pub nodes: Vec<u8>,
    /// Pair-indexed over `i < j`.
    pub edges: Vec<u8>,
    pub t: usize,
}

impl GraphState {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn from_placement(p: &PlacementGraph, t: usize) -> Self {
        Self {
            nodes: p.node_mask().iter().map(|&b| b as u8).collect(),
            edges: p.link_mask().iter().map(|&b| b as u8).collect(),
            t,
        }
    }

    pub fn to_placement(&self) -> PlacementGraph {
        PlacementGraph::from_parts(
            self.nodes.iter().map(|&v| v == 1).collect(),
            self.edges.iter().map(|&v| v == 1).collect(),
        )
        .expect("edge vector sized for node count")
    }

    /// Independent fair coin per node and pair: the `t = T` limit of the
    /// forward process.
    pub fn sample_prior<R: Rng + ?Sized>(n: usize, steps: usize, rng: &mut R) -> Self {
        Self {
            nodes: (0..n).map(|_| rng.gen_range(0..2u8)).collect(),
            edges: (0..pair_count(n)).map(|_| rng.gen_range(0..2u8)).collect(),
            t: steps,
        }
    }
}

fn draw<R: Rng + ?Sized>(p: &[f64; 2], rng: &mut R) -> u8 {
    let u: f64 = rng.gen();
    (u >= p[0]) as u8
}

/// Samples `G^t ~ q(G^t | G^0)` entrywise from rows of `Q̄^t`.
pub fn forward_sample<R: Rng + ?Sized>(
    g0: &GraphState,
    sched: &DiffusionSchedule,
    t: usize,
    rng: &mut R,
) -> Result<GraphState> {
    if g0.t != 0 {
        return Err(Error::InvalidArgument(format!("forward process starts at t=0, got {}", g0.t)));
    }
    sched.check_step(t)?;
    let qb = sched.q_bar(t);
    let mut step = |z: &u8| draw(&qb[*z as usize], rng);
    Ok(GraphState {
        nodes: g0.nodes.iter().map(&mut step).collect(),
        edges: g0.edges.iter().map(&mut step).collect(),
        t,
    })
}

fn check_rows(rows: &[[f64; 2]], offset: usize) -> Result<()> {
    for (k, r) in rows.iter().enumerate() {
        let ok = r.iter().all(|p| p.is_finite() && *p >= 0.0) && (r[0] + r[1] - 1.0).abs() <= 1e-6;
        if !ok {
            return Err(Error::InvalidDistribution {
                row: offset + k,
                detail: format!("{r:?}"),
            });
        }
    }
    Ok(())
}

/// Per-entry denoising distributions `p_θ(· | G^t)` for nodes and edges.
pub fn step_distributions(
    g_t: &GraphState,
    node_pred: &[[f64; 2]],
    edge_pred: &[[f64; 2]],
    sched: &DiffusionSchedule,
) -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>)> {
    if node_pred.len() != g_t.nodes.len() || edge_pred.len() != g_t.edges.len() {
        return Err(Error::InvalidArgument("prediction shape does not match graph".into()));
    }
    check_rows(node_pred, 0)?;
    check_rows(edge_pred, node_pred.len())?;
    let t = g_t.t;
    let nodes = g_t
        .nodes
        .iter()
        .zip(node_pred)
        .map(|(&z, &p)| sched.mixed_posterior(z, p, t))
        .collect::<Result<_>>()?;
    let edges = g_t
        .edges
        .iter()
        .zip(edge_pred)
        .map(|(&z, &p)| sched.mixed_posterior(z, p, t))
        .collect::<Result<_>>()?;
    Ok((nodes, edges))
}

/// One reverse step `G^t -> G^{t-1}`. Returns the new state and the
/// log-probability of the sampled transition, which factorizes over nodes
/// and edges.
pub fn denoise_step<R: Rng + ?Sized>(
    g_t: &GraphState,
    node_pred: &[[f64; 2]],
    edge_pred: &[[f64; 2]],
    sched: &DiffusionSchedule,
    rng: &mut R,
) -> Result<(GraphState, f64)> {
    let (nd, ed) = step_distributions(g_t, node_pred, edge_pred, sched)?;
    let mut logp = 0.0;
    let mut sample = |p: &[f64; 2]| {
        let z = draw(p, rng);
        logp += p[z as usize].ln();
        z
    };
    let nodes = nd.iter().map(&mut sample).collect();
    let edges = ed.iter().map(&mut sample).collect();
    Ok((
        GraphState {
            nodes,
            edges,
            t: g_t.t - 1,
        },
        logp,
    ))
}
