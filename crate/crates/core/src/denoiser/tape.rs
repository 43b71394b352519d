//! Minimal reverse-mode differentiation over dense row-major matrices.
//!
//! Only the operations the denoiser needs are provided. Every value lives
//! on a [`Tape`]; [`Tape::backward`] returns the gradient of a 1×1 output
//! with respect to every recorded value.

use std::rc::Rc;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        Self { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn add_assign(&mut self, other: &Mat) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// `self · other`
    fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let o = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (oj, bj) in o.iter_mut().zip(other.row(k)) {
                    *oj += a * bj;
                }
            }
        }
        out
    }

    /// `selfᵀ · other`
    fn t_matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut out = Mat::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let b = other.row(r);
            for i in 0..self.cols {
                let a = self.data[r * self.cols + i];
                if a == 0.0 {
                    continue;
                }
                for (oj, bj) in out.data[i * other.cols..(i + 1) * other.cols].iter_mut().zip(b) {
                    *oj += a * bj;
                }
            }
        }
        out
    }

    /// `self · otherᵀ`
    fn matmul_t(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        let mut out = Mat::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = a.iter().zip(other.row(j)).map(|(x, y)| x * y).sum();
            }
        }
        out
    }
}

pub type Var = usize;

const LN_EPS: f64 = 1e-5;

enum Op {
    Leaf,
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    MulConst(Var, Rc<Vec<f64>>),
    Scale(Var, f64),
    AddConst(Var),
    Relu(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        normed: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Gather(Var, Rc<Vec<Option<usize>>>),
    SegmentSoftmax(Var, usize),
    SegmentSum(Var, usize),
    ConcatCols(Var, Var),
    MixtureNll {
        logits: Var,
        coef: Rc<Vec<[f64; 2]>>,
        weights: Rc<Vec<f64>>,
    },
}

struct Node {
    value: Mat,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v].value
    }

    fn push(&mut self, value: Mat, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn leaf(&mut self, value: Mat) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    /// Adds the 1×c row `bias` to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Var {
        let (x, b) = (self.value(a), self.value(bias));
        assert_eq!((b.rows, b.cols), (1, x.cols));
        let mut v = x.clone();
        for r in 0..v.rows {
            for (o, bb) in v.data[r * v.cols..(r + 1) * v.cols].iter_mut().zip(&b.data) {
                *o += bb;
            }
        }
        self.push(v, Op::AddRow(a, bias))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        self.push(v, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!((x.rows, x.cols), (y.rows, y.cols));
        let data = x.data.iter().zip(&y.data).map(|(p, q)| p * q).collect();
        let v = Mat::from_vec(x.rows, x.cols, data);
        self.push(v, Op::Mul(a, b))
    }

    /// Elementwise product with a constant of the same shape.
    pub fn mul_const(&mut self, a: Var, c: Rc<Vec<f64>>) -> Var {
        let x = self.value(a);
        assert_eq!(x.data.len(), c.len());
        let data = x.data.iter().zip(c.iter()).map(|(p, q)| p * q).collect();
        let v = Mat::from_vec(x.rows, x.cols, data);
        self.push(v, Op::MulConst(a, c))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let x = self.value(a);
        let v = Mat::from_vec(x.rows, x.cols, x.data.iter().map(|p| p * s).collect());
        self.push(v, Op::Scale(a, s))
    }

    /// Adds a constant matrix (no gradient flows into it).
    pub fn add_const(&mut self, a: Var, c: &Mat) -> Var {
        let mut v = self.value(a).clone();
        v.add_assign(c);
        self.push(v, Op::AddConst(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let v = Mat::from_vec(x.rows, x.cols, x.data.iter().map(|p| p.max(0.0)).collect());
        self.push(v, Op::Relu(a))
    }

    /// Row-wise layer normalization with learned gain and bias (1×c each).
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Var {
        let (xv, g, b) = (self.value(x), self.value(gain), self.value(bias));
        let c = xv.cols;
        let mut normed = vec![0.0; xv.data.len()];
        let mut inv_std = vec![0.0; xv.rows];
        let mut out = Mat::zeros(xv.rows, c);
        for r in 0..xv.rows {
            let row = xv.row(r);
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c as f64;
            let is = 1.0 / (var + LN_EPS).sqrt();
            inv_std[r] = is;
            for k in 0..c {
                let nk = (row[k] - mean) * is;
                normed[r * c + k] = nk;
                out.data[r * c + k] = nk * g.data[k] + b.data[k];
            }
        }
        self.push(
            out,
            Op::LayerNorm {
                x,
                gain,
                bias,
                normed,
                inv_std,
            },
        )
    }

    /// Row gather; `None` yields a zero row.
    pub fn gather(&mut self, a: Var, idx: Rc<Vec<Option<usize>>>) -> Var {
        let x = self.value(a);
        let mut v = Mat::zeros(idx.len(), x.cols);
        for (r, src) in idx.iter().enumerate() {
            if let Some(s) = *src {
                v.data[r * x.cols..(r + 1) * x.cols].copy_from_slice(x.row(s));
            }
        }
        self.push(v, Op::Gather(a, idx))
    }

    /// Softmax down each column within consecutive blocks of `group` rows.
    pub fn segment_softmax(&mut self, a: Var, group: usize) -> Var {
        let x = self.value(a);
        assert_eq!(x.rows % group, 0);
        let c = x.cols;
        let mut v = Mat::zeros(x.rows, c);
        for block in 0..x.rows / group {
            for k in 0..c {
                let at = |j: usize| (block * group + j) * c + k;
                let m = (0..group).map(|j| x.data[at(j)]).fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for j in 0..group {
                    let e = (x.data[at(j)] - m).exp();
                    v.data[at(j)] = e;
                    z += e;
                }
                for j in 0..group {
                    v.data[at(j)] /= z;
                }
            }
        }
        self.push(v, Op::SegmentSoftmax(a, group))
    }

    /// Sums each block of `group` consecutive rows into one row.
    pub fn segment_sum(&mut self, a: Var, group: usize) -> Var {
        let x = self.value(a);
        assert_eq!(x.rows % group, 0);
        let c = x.cols;
        let mut v = Mat::zeros(x.rows / group, c);
        for r in 0..x.rows {
            let o = r / group;
            for k in 0..c {
                v.data[o * c + k] += x.data[r * c + k];
            }
        }
        self.push(v, Op::SegmentSum(a, group))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.rows, y.rows);
        let c = x.cols + y.cols;
        let mut v = Mat::zeros(x.rows, c);
        for r in 0..x.rows {
            v.data[r * c..r * c + x.cols].copy_from_slice(x.row(r));
            v.data[r * c + x.cols..(r + 1) * c].copy_from_slice(y.row(r));
        }
        self.push(v, Op::ConcatCols(a, b))
    }

    /// `Σ_r w_r · −log(Σ_k softmax(logits_r)_k · coef_rk)` over two-class
    /// logits. One-hot coefficients give the weighted cross-entropy.
    /// Returns a 1×1 value, or `None` when some weighted row has zero
    /// probability.
    pub fn mixture_nll(&mut self, logits: Var, coef: Rc<Vec<[f64; 2]>>, weights: Rc<Vec<f64>>) -> Option<Var> {
        let x = self.value(logits);
        assert_eq!(x.cols, 2);
        assert_eq!(x.rows, coef.len());
        assert_eq!(x.rows, weights.len());
        let mut total = 0.0;
        for r in 0..x.rows {
            let w = weights[r];
            if w == 0.0 {
                continue;
            }
            let (a, b) = (x.at(r, 0), x.at(r, 1));
            let m = a.max(b);
            let lse = m + ((a - m).exp() + (b - m).exp()).ln();
            let s = coef[r][0] * (a - lse).exp() + coef[r][1] * (b - lse).exp();
            if !(s > 0.0) {
                return None;
            }
            total -= w * s.ln();
        }
        Some(self.push(
            Mat::from_vec(1, 1, vec![total]),
            Op::MixtureNll {
                logits,
                coef,
                weights,
            },
        ))
    }

    /// Gradients of the scalar `root` with respect to every node. Entries
    /// for nodes the root does not depend on are `None`.
    pub fn backward(&self, root: Var) -> Vec<Option<Mat>> {
        assert_eq!(self.value(root).data.len(), 1, "backward needs a scalar root");
        let mut grads: Vec<Option<Mat>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root] = Some(Mat::from_vec(1, 1, vec![1.0]));

        fn acc(grads: &mut [Option<Mat>], v: Var, g: Mat) {
            match &mut grads[v] {
                Some(existing) => existing.add_assign(&g),
                slot => *slot = Some(g),
            }
        }

        for id in (0..=root).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            match &node.op {
                Op::Leaf => {
                    grads[id] = Some(g);
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    acc(&mut grads, *a, g.matmul_t(bv));
                    acc(&mut grads, *b, av.t_matmul(&g));
                }
                Op::AddRow(a, bias) => {
                    let mut gb = Mat::zeros(1, g.cols);
                    for r in 0..g.rows {
                        for (o, v) in gb.data.iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    acc(&mut grads, *bias, gb);
                    acc(&mut grads, *a, g.clone());
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g.clone());
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let ga = g.data.iter().zip(&bv.data).map(|(p, q)| p * q).collect();
                    let gb = g.data.iter().zip(&av.data).map(|(p, q)| p * q).collect();
                    acc(&mut grads, *a, Mat::from_vec(g.rows, g.cols, ga));
                    acc(&mut grads, *b, Mat::from_vec(g.rows, g.cols, gb));
                }
                Op::MulConst(a, c) => {
                    let ga = g.data.iter().zip(c.iter()).map(|(p, q)| p * q).collect();
                    acc(&mut grads, *a, Mat::from_vec(g.rows, g.cols, ga));
                }
                Op::Scale(a, s) => {
                    let ga = g.data.iter().map(|p| p * s).collect();
                    acc(&mut grads, *a, Mat::from_vec(g.rows, g.cols, ga));
                }
                Op::AddConst(a) => acc(&mut grads, *a, g.clone()),
                Op::Relu(a) => {
                    let av = self.value(*a);
                    let ga = g
                        .data
                        .iter()
                        .zip(&av.data)
                        .map(|(p, x)| if *x > 0.0 { *p } else { 0.0 })
                        .collect();
                    acc(&mut grads, *a, Mat::from_vec(g.rows, g.cols, ga));
                }
                Op::LayerNorm {
                    x,
                    gain,
                    bias,
                    normed,
                    inv_std,
                } => {
                    let gv = self.value(*gain);
                    let c = g.cols;
                    let mut gx = Mat::zeros(g.rows, c);
                    let mut gg = Mat::zeros(1, c);
                    let mut gbias = Mat::zeros(1, c);
                    for r in 0..g.rows {
                        let gr = g.row(r);
                        let nr = &normed[r * c..(r + 1) * c];
                        // gradient w.r.t. the normalized row
                        let dn: Vec<f64> = (0..c).map(|k| gr[k] * gv.data[k]).collect();
                        let mean_dn = dn.iter().sum::<f64>() / c as f64;
                        let mean_dn_n = dn.iter().zip(nr).map(|(a, b)| a * b).sum::<f64>() / c as f64;
                        for k in 0..c {
                            gx.data[r * c + k] = inv_std[r] * (dn[k] - mean_dn - nr[k] * mean_dn_n);
                            gg.data[k] += gr[k] * nr[k];
                            gbias.data[k] += gr[k];
                        }
                    }
                    acc(&mut grads, *x, gx);
                    acc(&mut grads, *gain, gg);
                    acc(&mut grads, *bias, gbias);
                }
                Op::Gather(a, idx) => {
                    let av = self.value(*a);
                    let mut ga = Mat::zeros(av.rows, av.cols);
                    let c = av.cols;
                    for (r, src) in idx.iter().enumerate() {
                        if let Some(s) = *src {
                            for (o, v) in ga.data[s * c..(s + 1) * c].iter_mut().zip(g.row(r)) {
                                *o += v;
                            }
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::SegmentSoftmax(a, group) => {
                    let y = &node.value;
                    let c = y.cols;
                    let mut ga = Mat::zeros(y.rows, c);
                    for block in 0..y.rows / group {
                        for k in 0..c {
                            let at = |j: usize| (block * group + j) * c + k;
                            let dot: f64 = (0..*group).map(|j| g.data[at(j)] * y.data[at(j)]).sum();
                            for j in 0..*group {
                                ga.data[at(j)] = y.data[at(j)] * (g.data[at(j)] - dot);
                            }
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::SegmentSum(a, group) => {
                    let av = self.value(*a);
                    let c = av.cols;
                    let mut ga = Mat::zeros(av.rows, c);
                    for r in 0..av.rows {
                        ga.data[r * c..(r + 1) * c].copy_from_slice(g.row(r / group));
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::ConcatCols(a, b) => {
                    let (ca, cb) = (self.value(*a).cols, self.value(*b).cols);
                    let mut ga = Mat::zeros(g.rows, ca);
                    let mut gb = Mat::zeros(g.rows, cb);
                    for r in 0..g.rows {
                        ga.data[r * ca..(r + 1) * ca].copy_from_slice(&g.row(r)[..ca]);
                        gb.data[r * cb..(r + 1) * cb].copy_from_slice(&g.row(r)[ca..]);
                    }
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::MixtureNll {
                    logits,
                    coef,
                    weights,
                } => {
                    let x = self.value(*logits);
                    let up = g.data[0];
                    let mut gl = Mat::zeros(x.rows, 2);
                    for r in 0..x.rows {
                        let w = weights[r];
                        if w == 0.0 {
                            continue;
                        }
                        let (a, b) = (x.at(r, 0), x.at(r, 1));
                        let m = a.max(b);
                        let lse = m + ((a - m).exp() + (b - m).exp()).ln();
                        let p = [(a - lse).exp(), (b - lse).exp()];
                        let s = coef[r][0] * p[0] + coef[r][1] * p[1];
                        for k in 0..2 {
                            // d/dlogit_k of −log s
                            gl.data[r * 2 + k] = up * w * (p[k] - p[k] * coef[r][k] / s);
                        }
                    }
                    acc(&mut grads, *logits, gl);
                }
            }
        }
        grads
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central-difference check of d(f)/d(leaf) for a scalar graph built by
    /// `build` from one leaf matrix.
    fn check(leaf: Mat, build: impl Fn(&mut Tape, Var) -> Var) {
        let mut tape = Tape::new();
        let x = tape.leaf(leaf.clone());
        let y = build(&mut tape, x);
        let grads = tape.backward(y);
        let g = grads[x].clone().unwrap_or_else(|| Mat::zeros(leaf.rows, leaf.cols));
        let h = 1e-6;
        for k in 0..leaf.data.len() {
            let eval = |delta: f64| {
                let mut m = leaf.clone();
                m.data[k] += delta;
                let mut t = Tape::new();
                let xv = t.leaf(m);
                let out = build(&mut t, xv);
                t.value(out).data[0]
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            assert!((fd - g.data[k]).abs() < 1e-6 * (1.0 + fd.abs()), "entry {k}: fd {fd} vs {}", g.data[k]);
        }
    }

    fn sample(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut s = seed;
        let data = (0..rows * cols)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect();
        Mat::from_vec(rows, cols, data)
    }

    /// Reduce any matrix to a scalar through a fixed two-class NLL.
    fn reduce(t: &mut Tape, v: Var) -> Var {
        let m = t.value(v).clone();
        let w = t.leaf(sample(m.cols, 2, 99));
        let logits = t.matmul(v, w);
        let rows = m.rows;
        let coef = Rc::new((0..rows).map(|r| if r % 2 == 0 { [1.0, 0.0] } else { [0.3, 0.7] }).collect());
        let weights = Rc::new((0..rows).map(|r| 0.5 + r as f64).collect());
        t.mixture_nll(logits, coef, weights).unwrap()
    }

    #[test]
    fn layer_norm_grad() {
        check(sample(3, 5, 1), |t, x| {
            let g = t.leaf(sample(1, 5, 2));
            let b = t.leaf(sample(1, 5, 3));
            let y = t.layer_norm(x, g, b);
            reduce(t, y)
        });
    }

    #[test]
    fn softmax_gather_sum_grad() {
        check(sample(6, 3, 4), |t, x| {
            let idx = Rc::new(vec![Some(0), Some(1), None, Some(2), Some(5), Some(5)]);
            let gx = t.gather(x, idx);
            let prod = t.mul(gx, x);
            let s = t.segment_softmax(prod, 3);
            let weighted = t.mul(s, gx);
            let summed = t.segment_sum(weighted, 3);
            reduce(t, summed)
        });
    }

    #[test]
    fn dense_ops_grad() {
        check(sample(4, 3, 5), |t, x| {
            let w = t.leaf(sample(3, 3, 6));
            let b = t.leaf(sample(1, 3, 7));
            let h = t.matmul(x, w);
            let h = t.add_row(h, b);
            let h = t.relu(h);
            let h = t.scale(h, 1.7);
            let h = t.add(h, x);
            let h = t.mul_const(h, Rc::new((0..12).map(|k| k as f64 * 0.1).collect()));
            let cat = t.concat_cols(h, x);
            reduce(t, cat)
        });
    }

    #[test]
    fn zero_probability_is_reported() {
        let mut t = Tape::new();
        let x = t.leaf(Mat::from_vec(1, 2, vec![0.0, 0.0]));
        assert!(t.mixture_nll(x, Rc::new(vec![[0.0, 0.0]]), Rc::new(vec![1.0])).is_none());
    }
}
