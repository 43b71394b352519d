//! Graph-transformer denoiser predicting clean node and edge states.
//!
//! Pipeline per call: one-hot state, the scalar `t/T` and fixed problem
//! context features for every node and every pair → two-layer ReLU input
//! maps → `L` attention blocks → two-layer
//! output heads → row softmax. In each block, node queries and keys are
//! combined per channel and modulated by the pair's edge embedding
//! (`Y_ij = (Q_i ⊙ K_j)/√h ⊙ (1 + E¹_ij) + E²_ij`); the attention weights
//! are a softmax over `j` per channel, and the symmetrized `Y` feeds the
//! edge update. Both streams use dropout, residual adds and layer norms.
//!
//! Parameter count for width `h` and `L` blocks:
//! `4h² + 21h + 4 + L·(11h² + 19h)`, independent of the node count.
//!
//! Without context the network is fully permutation-equivariant and cannot
//! tell nodes apart; the context features are what tie a prediction to a
//! particular bus or link.

mod checkpoint;
mod optim;
pub mod tape;

use std::rc::Rc;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use optim::{Optimizer, OptimizerKind};
use tape::{Mat, Tape, Var};

use crate::diffusion::GraphState;
use crate::error::{Error, Result};
use crate::pairs::{pair_count, pair_index};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiserHyper {
    pub hidden: usize,
    pub layers: usize,
    pub dropout: f64,
}

impl Default for DenoiserHyper {
    fn default() -> Self {
        Self {
            hidden: 32,
            layers: 2,
            dropout: 0.1,
        }
    }
}

impl DenoiserHyper {
    pub fn validate(&self) -> Result<()> {
        if self.hidden < 2 || self.layers < 1 || !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!("invalid denoiser hyperparameters {self:?}")));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        let h = self.hidden;
        4 * h * h + 21 * h + 4 + self.layers * (11 * h * h + 19 * h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub value: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserParams {
    pub hyper: DenoiserHyper,
    pub seed: u64,
    pub tensors: Vec<Tensor>,
}

/// Per-node context width.
pub const NODE_CONTEXT: usize = 2;
/// Per-pair context width.
pub const EDGE_CONTEXT: usize = 3;
const NODE_IN: usize = 3 + NODE_CONTEXT;
const EDGE_IN: usize = 3 + EDGE_CONTEXT;

/// Fixed features describing the placement instance, appended to the
/// state features of every node and pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphContext {
    pub nodes: Vec<[f64; NODE_CONTEXT]>,
    /// Pair-indexed over `i < j`.
    pub edges: Vec<[f64; EDGE_CONTEXT]>,
}

impl GraphContext {
    /// All-zero context for `n` nodes.
    pub fn blank(n: usize) -> Self {
        Self {
            nodes: vec![[0.0; NODE_CONTEXT]; n],
            edges: vec![[0.0; EDGE_CONTEXT]; pair_count(n)],
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Names and shapes in the order the forward pass consumes them.
fn layout(hyper: &DenoiserHyper) -> Vec<(String, usize, usize, Init)> {
    let h = hyper.hidden;
    let mut out = Vec::new();
    let linear = |out: &mut Vec<_>, name: &str, fan_in: usize, fan_out: usize| {
        out.push((format!("{name}.w"), fan_in, fan_out, Init::FanIn));
        out.push((format!("{name}.b"), 1, fan_out, Init::Zero));
    };
    for (stream, width) in [("node", NODE_IN), ("edge", EDGE_IN)] {
        linear(&mut out, &format!("{stream}_in.0"), width, h);
        linear(&mut out, &format!("{stream}_in.1"), h, h);
    }
    for l in 0..hyper.layers {
        for part in ["q", "k", "v", "e_mul", "e_add", "node_attn_out", "edge_attn_out"] {
            linear(&mut out, &format!("block{l}.{part}"), h, h);
        }
        for stream in ["node", "edge"] {
            out.push((format!("block{l}.{stream}_norm1.g"), 1, h, Init::One));
            out.push((format!("block{l}.{stream}_norm1.b"), 1, h, Init::Zero));
            linear(&mut out, &format!("block{l}.{stream}_ffn.0"), h, h);
            linear(&mut out, &format!("block{l}.{stream}_ffn.1"), h, h);
            out.push((format!("block{l}.{stream}_norm2.g"), 1, h, Init::One));
            out.push((format!("block{l}.{stream}_norm2.b"), 1, h, Init::Zero));
        }
    }
    for stream in ["node", "edge"] {
        linear(&mut out, &format!("{stream}_out.0"), h, h);
        linear(&mut out, &format!("{stream}_out.1"), h, 2);
    }
    out
}

#[derive(Clone, Copy)]
enum Init {
    FanIn,
    Zero,
    One,
}

impl DenoiserParams {
    /// Seeded initialization: weights uniform in `±1/√fan_in`, biases zero,
    /// normalization gains one.
    pub fn init(hyper: DenoiserHyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = layout(&hyper)
            .into_iter()
            .map(|(name, r, c, init)| {
                let data = match init {
                    Init::Zero => vec![0.0; r * c],
                    Init::One => vec![1.0; r * c],
                    Init::FanIn => {
                        let bound = 1.0 / (r as f64).sqrt();
                        (0..r * c).map(|_| rng.gen_range(-bound..bound)).collect()
                    }
                };
                Tensor {
                    name,
                    value: Mat::from_vec(r, c, data),
                }
            })
            .collect();
        Ok(Self { hyper, seed, tensors })
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.value.data.len()).sum()
    }

    pub fn get(&self, name: &str) -> Option<&Mat> {
        self.tensors.iter().find(|t| t.name == name).map(|t| &t.value)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Mat> {
        self.tensors.iter_mut().find(|t| t.name == name).map(|t| &mut t.value)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.value.data.iter().all(|v| v.is_finite()))
    }

    /// Same tensor names and shapes, all zeros.
    pub fn zeros_like(&self) -> Vec<Mat> {
        self.tensors
            .iter()
            .map(|t| Mat::zeros(t.value.rows, t.value.cols))
            .collect()
    }

    /// Node and edge clean-state distributions for `g` at its timestep.
    pub fn forward(&self, g: &GraphState, steps: usize, ctx: &GraphContext) -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>)> {
        let net = Graph::build(self, g, steps, ctx, None)?;
        Ok((softmax_rows(net.tape.value(net.node_logits)), softmax_rows(net.tape.value(net.edge_logits))))
    }
}

fn softmax_rows(m: &Mat) -> Vec<[f64; 2]> {
    (0..m.rows)
        .map(|r| {
            let (a, b) = (m.at(r, 0), m.at(r, 1));
            let mx = a.max(b);
            let (ea, eb) = ((a - mx).exp(), (b - mx).exp());
            [ea / (ea + eb), eb / (ea + eb)]
        })
        .collect()
}

struct Graph {
    tape: Tape,
    leaves: Vec<Var>,
    node_logits: Var,
    edge_logits: Var,
}

struct Dropout<'a> {
    rate: f64,
    rng: &'a mut ChaCha8Rng,
}

impl Graph {
    fn build(
        params: &DenoiserParams,
        g: &GraphState,
        steps: usize,
        ctx: &GraphContext,
        mut dropout: Option<Dropout<'_>>,
    ) -> Result<Self> {
        let n = g.node_count();
        if n == 0 {
            return Err(Error::InvalidArgument("graph has no nodes".into()));
        }
        if ctx.nodes.len() != n || ctx.edges.len() != pair_count(n) {
            return Err(Error::InvalidArgument("context does not match graph size".into()));
        }
        if g.edges.len() != pair_count(n) {
            return Err(Error::InvalidArgument(format!("{} edge states for {n} nodes", g.edges.len())));
        }
        if g.t == 0 || g.t > steps {
            return Err(Error::InvalidArgument(format!("timestep {} outside [1, {steps}]", g.t)));
        }
        let h = params.hyper.hidden;
        let tt = g.t as f64 / steps as f64;
        let mut tape = Tape::new();
        let leaves: Vec<Var> = params.tensors.iter().map(|t| tape.leaf(t.value.clone())).collect();
        let mut cursor = leaves.iter().copied();
        let mut next = move || cursor.next().expect("layout and forward agree");

        fn features<const C: usize>(states: &[u8], tt: f64, ctx: &[[f64; C]]) -> Mat {
            let w = 3 + C;
            let mut m = Mat::zeros(states.len(), w);
            for (r, (&z, c)) in states.iter().zip(ctx).enumerate() {
                m.data[r * w + z as usize] = 1.0;
                m.data[r * w + 2] = tt;
                m.data[r * w + 3..(r + 1) * w].copy_from_slice(c);
            }
            m
        }

        fn linear(t: &mut Tape, x: Var, w: Var, b: Var) -> Var {
            let y = t.matmul(x, w);
            t.add_row(y, b)
        }

        let mut drop = |t: &mut Tape, x: Var| -> Var {
            match dropout.as_mut() {
                Some(d) if d.rate > 0.0 => {
                    let len = t.value(x).data.len();
                    let keep = 1.0 / (1.0 - d.rate);
                    let mask = (0..len)
                        .map(|_| if d.rng.gen::<f64>() < d.rate { 0.0 } else { keep })
                        .collect();
                    t.mul_const(x, Rc::new(mask))
                }
                _ => x,
            }
        };

        let embed = |t: &mut Tape, input: Mat, next: &mut dyn FnMut() -> Var| {
            let x = t.leaf(input);
            let (w0, b0) = (next(), next());
            let hdn = linear(t, x, w0, b0);
            let hdn = t.relu(hdn);
            let (w1, b1) = (next(), next());
            linear(t, hdn, w1, b1)
        };
        let mut x = embed(&mut tape, features(&g.nodes, tt, &ctx.nodes), &mut next);
        let mut e = embed(&mut tape, features(&g.edges, tt, &ctx.edges), &mut next);

        let pair_rows = n * n;
        let row_i: Rc<Vec<Option<usize>>> = Rc::new((0..pair_rows).map(|r| Some(r / n)).collect());
        let row_j: Rc<Vec<Option<usize>>> = Rc::new((0..pair_rows).map(|r| Some(r % n)).collect());
        let row_edge: Rc<Vec<Option<usize>>> = Rc::new(
            (0..pair_rows)
                .map(|r| {
                    let (i, j) = (r / n, r % n);
                    (i != j).then(|| pair_index(n, i, j))
                })
                .collect(),
        );
        let mut fwd_idx = Vec::with_capacity(pair_count(n));
        let mut rev_idx = Vec::with_capacity(pair_count(n));
        for (i, j) in crate::pairs::pairs(n) {
            fwd_idx.push(Some(i * n + j));
            rev_idx.push(Some(j * n + i));
        }
        let (fwd_idx, rev_idx) = (Rc::new(fwd_idx), Rc::new(rev_idx));
        let inv_sqrt_h = 1.0 / (h as f64).sqrt();

        for _ in 0..params.hyper.layers {
            let mut lin = |t: &mut Tape, v: Var| {
                let (w, b) = (next(), next());
                linear(t, v, w, b)
            };
            let q = lin(&mut tape, x);
            let k = lin(&mut tape, x);
            let v = lin(&mut tape, x);
            let e_mul = lin(&mut tape, e);
            let e_add = lin(&mut tape, e);

            let qi = tape.gather(q, row_i.clone());
            let kj = tape.gather(k, row_j.clone());
            let y0 = tape.mul(qi, kj);
            let y0 = tape.scale(y0, inv_sqrt_h);
            let m1 = tape.gather(e_mul, row_edge.clone());
            let m2 = tape.gather(e_add, row_edge.clone());
            let film = tape.mul(y0, m1);
            let y = tape.add(y0, film);
            let y = tape.add(y, m2);

            let attn = tape.segment_softmax(y, n);
            let vj = tape.gather(v, row_j.clone());
            let weighted = tape.mul(attn, vj);
            let msg = tape.segment_sum(weighted, n);

            let y_fwd = tape.gather(y, fwd_idx.clone());
            let y_rev = tape.gather(y, rev_idx.clone());
            let y_sym = tape.add(y_fwd, y_rev);
            let y_sym = tape.scale(y_sym, 0.5);

            let node_upd = lin(&mut tape, msg);
            let edge_upd = lin(&mut tape, y_sym);

            let mut block_tail = |t: &mut Tape, base: Var, upd: Var, next: &mut dyn FnMut() -> Var| {
                let upd = drop(t, upd);
                let r = t.add(base, upd);
                let (g1, b1) = (next(), next());
                let h1 = t.layer_norm(r, g1, b1);
                let (w0, c0) = (next(), next());
                let f = linear(t, h1, w0, c0);
                let f = t.relu(f);
                let (w1, c1) = (next(), next());
                let f = linear(t, f, w1, c1);
                let f = drop(t, f);
                let r2 = t.add(h1, f);
                let (g2, b2) = (next(), next());
                t.layer_norm(r2, g2, b2)
            };
            x = block_tail(&mut tape, x, node_upd, &mut next);
            e = block_tail(&mut tape, e, edge_upd, &mut next);
        }

        let head = |t: &mut Tape, v: Var, next: &mut dyn FnMut() -> Var| {
            let (w0, b0) = (next(), next());
            let hdn = linear(t, v, w0, b0);
            let hdn = t.relu(hdn);
            let (w1, b1) = (next(), next());
            linear(t, hdn, w1, b1)
        };
        let node_logits = head(&mut tape, x, &mut next);
        let edge_logits = head(&mut tape, e, &mut next);
        Ok(Self {
            tape,
            leaves,
            node_logits,
            edge_logits,
        })
    }
}

/// One weighted likelihood term: per entry, the probability assigned is
/// `Σ_v p̂(v) · coef[v]`. One-hot coefficients give cross-entropy against a
/// fixed graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub nodes: Vec<[f64; 2]>,
    pub edges: Vec<[f64; 2]>,
    pub weight: f64,
}

impl Target {
    /// Cross-entropy target against the states of `g`.
    pub fn one_hot(g: &GraphState, weight: f64) -> Self {
        let hot = |z: &u8| if *z == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
        Self {
            nodes: g.nodes.iter().map(hot).collect(),
            edges: g.edges.iter().map(hot).collect(),
            weight,
        }
    }
}

/// A noisy state with the likelihood terms evaluated on its prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub state: GraphState,
    pub steps: usize,
    pub context: Arc<GraphContext>,
    pub targets: Vec<Target>,
    /// Seeds the dropout masks, so repeated calls differentiate the same
    /// function.
    pub dropout_seed: u64,
}

/// `Σ_examples Σ_targets weight · (−Σ log p(node) − Σ log p(edge))` and its
/// gradient for every parameter tensor, in `params.tensors` order.
pub fn loss_and_grad(params: &DenoiserParams, batch: &[Example]) -> Result<(f64, Vec<Mat>)> {
    let parts: Vec<Result<(f64, Vec<Mat>)>> = batch
        .par_iter()
        .enumerate()
        .map(|(k, ex)| example_loss(params, ex, k))
        .collect();
    let mut total = 0.0;
    let mut grads = params.zeros_like();
    for part in parts {
        let (l, g) = part?;
        total += l;
        for (acc, gi) in grads.iter_mut().zip(g) {
            for (a, b) in acc.data.iter_mut().zip(gi.data) {
                *a += b;
            }
        }
    }
    Ok((total, grads))
}

fn example_loss(params: &DenoiserParams, ex: &Example, index: usize) -> Result<(f64, Vec<Mat>)> {
    let active: Vec<&Target> = ex.targets.iter().filter(|t| t.weight != 0.0).collect();
    if active.is_empty() {
        return Ok((0.0, params.zeros_like()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ex.dropout_seed);
    let dropout = Some(Dropout {
        rate: params.hyper.dropout,
        rng: &mut rng,
    });
    let mut net = Graph::build(params, &ex.state, ex.steps, &ex.context, dropout)?;
    let n = ex.state.nodes.len();
    let m = ex.state.edges.len();
    let mut terms = Vec::new();
    for (ti, t) in active.iter().enumerate() {
        if t.nodes.len() != n || t.edges.len() != m {
            return Err(Error::InvalidArgument(format!("target {ti} of example {index} has the wrong shape")));
        }
        let offending = |kind: &str| Error::NonFiniteLoss(format!("example {index}, target {ti}, {kind} term"));
        let nw = Rc::new(vec![t.weight; n]);
        let ew = Rc::new(vec![t.weight; m]);
        let ln = net
            .tape
            .mixture_nll(net.node_logits, Rc::new(t.nodes.clone()), nw)
            .ok_or_else(|| offending("node"))?;
        let le = net
            .tape
            .mixture_nll(net.edge_logits, Rc::new(t.edges.clone()), ew)
            .ok_or_else(|| offending("edge"))?;
        terms.push(ln);
        terms.push(le);
    }
    let mut root = terms[0];
    for &v in &terms[1..] {
        root = net.tape.add(root, v);
    }
    let loss = net.tape.value(root).data[0];
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss(format!("example {index}")));
    }
    let mut all = net.tape.backward(root);
    let grads = net
        .leaves
        .iter()
        .zip(&params.tensors)
        .map(|(&v, t)| all[v].take().unwrap_or_else(|| Mat::zeros(t.value.rows, t.value.cols)))
        .collect();
    Ok((loss, grads))
}
