use ndarray::{Array2, Axis};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss((usize, usize)),
    #[error("dropout probability {0} outside [0, 1)")]
    InvalidDropout(f64),
    #[error("column index {col} out of bounds for {cols} columns")]
    ColumnOutOfBounds { col: usize, cols: usize },
    #[error("row index {row} out of bounds for {rows} rows")]
    RowOutOfBounds { row: usize, rows: usize },
    #[error("concat requires at least one column")]
    EmptyConcat,
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(usize);

enum Op {
    Add(TensorId, TensorId),
    Sub(TensorId, TensorId),
    Mul(TensorId, TensorId),
    MatMul(TensorId, TensorId),
    Transpose(TensorId),
    Sigmoid(TensorId),
    Tanh(TensorId),
    Relu(TensorId),
    /// mask already carries the 1/(1-p) survivor scaling.
    Dropout {
        src: TensorId,
        mask: Array2<f64>,
    },
    SoftmaxRows(TensorId),
    Sum(TensorId),
    Mean(TensorId),
    /// a (m×n) + broadcast row v (1×n)
    AddRowVec(TensorId, TensorId),
    /// a (m×n) with row i scaled by c[i] (c is m×1)
    MulColVec(TensorId, TensorId),
    /// a (m×n) with column j scaled by r[j] (r is 1×n)
    MulRowVec(TensorId, TensorId),
    /// row sums, m×n -> m×1
    RowSum(TensorId),
    Powf(TensorId, f64),
    AddScalar(TensorId),
    MulScalar(TensorId, f64),
    /// a scaled by the single entry of s (1×1)
    Scale {
        a: TensorId,
        s: TensorId,
    },
    /// horizontal stack of m×1 columns
    ConcatCols(Vec<TensorId>),
    SliceCol {
        src: TensorId,
        col: usize,
    },
    SliceRow {
        src: TensorId,
        row: usize,
    },
    /// elementwise product with a constant 0/1 mask
    MaskMul {
        src: TensorId,
        mask: Array2<f64>,
    },
}

struct Node {
    value: Array2<f64>,
    grad: Option<Array2<f64>>,
    requires_grad: bool,
    op: Option<Op>,
}

/// Append-only computation tape. One tape per training step; parameters
/// are re-inserted as leaves each time and their gradients read back
/// after [`Tape::backward`].
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn dims(a: &Array2<f64>) -> (usize, usize) {
    (a.nrows(), a.ncols())
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, requires_grad: bool, op: Option<Op>) -> TensorId {
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        TensorId(self.nodes.len() - 1)
    }

    fn rg(&self, id: TensorId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// Insert a constant (no gradient tracked).
    pub fn constant(&mut self, value: Array2<f64>) -> TensorId {
        self.push(value, false, None)
    }

    /// Insert a trainable leaf.
    pub fn leaf(&mut self, value: Array2<f64>) -> TensorId {
        self.push(value, true, None)
    }

    pub fn value(&self, id: TensorId) -> &Array2<f64> {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: TensorId) -> (usize, usize) {
        dims(&self.nodes[id.0].value)
    }

    /// Accumulated gradient, if any backward pass has reached this node.
    pub fn grad(&self, id: TensorId) -> Option<&Array2<f64>> {
        self.nodes[id.0].grad.as_ref()
    }

    pub fn zero_grads(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    fn binary_same_shape(
        &mut self,
        opname: &'static str,
        a: TensorId,
        b: TensorId,
        make: impl Fn(TensorId, TensorId) -> Op,
        f: impl Fn(&Array2<f64>, &Array2<f64>) -> Array2<f64>,
    ) -> Result<TensorId, AdError> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(AdError::ShapeMismatch {
                op: opname,
                lhs: sa,
                rhs: sb,
            });
        }
        let v = f(self.value(a), self.value(b));
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, rg, Some(make(a, b))))
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, AdError> {
        self.binary_same_shape("add", a, b, Op::Add, |x, y| x + y)
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, AdError> {
        self.binary_same_shape("sub", a, b, Op::Sub, |x, y| x - y)
    }

    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, AdError> {
        self.binary_same_shape("mul", a, b, Op::Mul, |x, y| x * y)
    }

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, AdError> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.1 != sb.0 {
            return Err(AdError::ShapeMismatch {
                op: "matmul",
                lhs: sa,
                rhs: sb,
            });
        }
        let v = self.value(a).dot(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, rg, Some(Op::MatMul(a, b))))
    }

    pub fn transpose(&mut self, a: TensorId) -> TensorId {
        let v = self.value(a).t().to_owned();
        let rg = self.rg(a);
        self.push(v, rg, Some(Op::Transpose(a)))
    }

    pub fn sigmoid(&mut self, a: TensorId) -> TensorId {
        let v = self.value(a).mapv(stable_sigmoid);
        let rg = self.rg(a);
        self.push(v, rg, Some(Op::Sigmoid(a)))
    }

    pub fn tanh(&mut self, a: TensorId) -> TensorId {
        let v = self.value(a).mapv(f64::tanh);
        let rg = self.rg(a);
        self.push(v, rg, Some(Op::Tanh(a)))
    }

    pub fn relu(&mut self, a: TensorId) -> TensorId {
        let v = self.value(a).mapv(|x| x.max(0.0));
        let rg = self.rg(a);
        self.push(v, rg, Some(Op::Relu(a)))
    }

    /// Inverted dropout: in training mode each entry is zeroed with
    /// probability `p` and survivors are scaled by 1/(1-p); in eval mode
    /// this is the identity.
    pub fn dropout<R: Rng>(
        &mut self,
        a: TensorId,
        p: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<TensorId, AdError> {
        if !(0.0..1.0).contains(&p) {
            return Err(AdError::InvalidDropout(p));
        }
        if !training || p == 0.0 {
            // identity node keeps the graph uniform between modes
            let v = self.value(a).clone();
            let rg = self.rg(a);
            let mask = Array2::ones(dims(&v));
            return Ok(self.push(v, rg, Some(Op::Dropout { src: a, mask })));
        }
        let scale = 1.0 / (1.0 - p);
        let shape = self.shape(a);
        let mask = Array2::from_shape_fn(shape, |_| {
            if rng.gen::<f64>() < p {
                0.0
            } else {
                scale
            }
        });
        let v = self.value(a) * &mask;
        let rg = self.rg(a);
        Ok(self.push(v, rg, Some(Op::Dropout { src: a, mask })))
    }

    /// Numerically stable softmax along each row.
    pub fn softmax_rows(&mut self, a: TensorId) -> TensorId {
        let x = self.value(a);
        let mut v = x.clone();
        for mut row in v.rows_mut() {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|e| (e - m).exp());
            let s: f64 = row.sum();
            row.mapv_inplace(|e| e / s);
        }
        let rg = self.rg(a);
        self.push(v, rg, Some(Op::SoftmaxRows(a)))
    }

    pub fn sum(&mut self, a: TensorId) -> TensorId {
        let s = self.value(a).sum();
        let rg = self.rg(a);
        self.push(Array2::from_elem((1, 1), s), rg, Some(Op::Sum(a)))
    }

    pub fn mean(&mut self, a: TensorId) -> TensorId {
        let x = self.value(a);
        let m = x.sum() / (x.len() as f64);
        let rg = self.rg(a);
        self.push(Array2::from_elem((1, 1), m), rg, Some(Op::Mean(a)))
    }

    /// a (m×n) + v (1×n) broadcast over rows.
    pub fn add_rowvec(&mut self, a: TensorId, v: TensorId) -> Result<TensorId, AdError> {
        let (sa, sv) = (self.shape(a), self.shape(v));
        if sv.0 != 1 || sv.1 != sa.1 {
            return Err(AdError::ShapeMismatch {
                op: "add_rowvec",
                lhs: sa,
                rhs: sv,
            });
        }
        let out = self.value(a) + &self.value(v).row(0);
        let rg = self.rg(a) || self.rg(v);
        Ok(self.push(out, rg, Some(Op::AddRowVec(a, v))))
    }

    /// Row i of a scaled by c[i]; c is m×1.
    pub fn mul_colvec(&mut self, a: TensorId, c: TensorId) -> Result<TensorId, AdError> {
        let (sa, sc) = (self.shape(a), self.shape(c));
        if sc.1 != 1 || sc.0 != sa.0 {
            return Err(AdError::ShapeMismatch {
                op: "mul_colvec",
                lhs: sa,
                rhs: sc,
            });
        }
        let out = self.value(a) * self.value(c);
        let rg = self.rg(a) || self.rg(c);
        Ok(self.push(out, rg, Some(Op::MulColVec(a, c))))
    }

    /// Column j of a scaled by r[j]; r is 1×n.
    pub fn mul_rowvec(&mut self, a: TensorId, r: TensorId) -> Result<TensorId, AdError> {
        let (sa, sr) = (self.shape(a), self.shape(r));
        if sr.0 != 1 || sr.1 != sa.1 {
            return Err(AdError::ShapeMismatch {
                op: "mul_rowvec",
                lhs: sa,
                rhs: sr,
            });
        }
        let out = self.value(a) * self.value(r);
        let rg = self.rg(a) || self.rg(r);
        Ok(self.push(out, rg, Some(Op::MulRowVec(a, r))))
    }

    /// Row sums: m×n -> m×1.
    pub fn row_sum(&mut self, a: TensorId) -> TensorId {
        let s = self.value(a).sum_axis(Axis(1));
        let m = s.len();
        let v = s.into_shape((m, 1)).expect("row_sum reshape");
        let rg = self.rg(a);
        self.push(v, rg, Some(Op::RowSum(a)))
    }

    pub fn powf(&mut self, a: TensorId, p: f64) -> TensorId {
        let v = self.value(a).mapv(|x| x.powf(p));
        let rg = self.rg(a);
        self.push(v, rg, Some(Op::Powf(a, p)))
    }

    pub fn add_scalar(&mut self, a: TensorId, c: f64) -> TensorId {
        let v = self.value(a).mapv(|x| x + c);
        let rg = self.rg(a);
        self.push(v, rg, Some(Op::AddScalar(a)))
    }

    pub fn mul_scalar(&mut self, a: TensorId, c: f64) -> TensorId {
        let v = self.value(a).mapv(|x| x * c);
        let rg = self.rg(a);
        self.push(v, rg, Some(Op::MulScalar(a, c)))
    }

    /// a scaled by a 1×1 tensor.
    pub fn scale(&mut self, a: TensorId, s: TensorId) -> Result<TensorId, AdError> {
        let ss = self.shape(s);
        if ss != (1, 1) {
            return Err(AdError::ShapeMismatch {
                op: "scale",
                lhs: self.shape(a),
                rhs: ss,
            });
        }
        let c = self.value(s)[(0, 0)];
        let v = self.value(a).mapv(|x| x * c);
        let rg = self.rg(a) || self.rg(s);
        Ok(self.push(v, rg, Some(Op::Scale { a, s })))
    }

    /// Horizontal stack of m×1 columns into m×k.
    pub fn concat_cols(&mut self, cols: &[TensorId]) -> Result<TensorId, AdError> {
        if cols.is_empty() {
            return Err(AdError::EmptyConcat);
        }
        let m = self.shape(cols[0]).0;
        for &c in cols {
            let s = self.shape(c);
            if s != (m, 1) {
                return Err(AdError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: (m, 1),
                    rhs: s,
                });
            }
        }
        let mut v = Array2::zeros((m, cols.len()));
        for (j, &c) in cols.iter().enumerate() {
            v.column_mut(j).assign(&self.value(c).column(0));
        }
        let rg = cols.iter().any(|&c| self.rg(c));
        Ok(self.push(v, rg, Some(Op::ConcatCols(cols.to_vec()))))
    }

    pub fn slice_col(&mut self, a: TensorId, col: usize) -> Result<TensorId, AdError> {
        let (m, n) = self.shape(a);
        if col >= n {
            return Err(AdError::ColumnOutOfBounds { col, cols: n });
        }
        let v = self
            .value(a)
            .column(col)
            .to_owned()
            .into_shape((m, 1))
            .expect("slice_col reshape");
        let rg = self.rg(a);
        Ok(self.push(v, rg, Some(Op::SliceCol { src: a, col })))
    }

    pub fn slice_row(&mut self, a: TensorId, row: usize) -> Result<TensorId, AdError> {
        let (m, n) = self.shape(a);
        if row >= m {
            return Err(AdError::RowOutOfBounds { row, rows: m });
        }
        let v = self
            .value(a)
            .row(row)
            .to_owned()
            .into_shape((1, n))
            .expect("slice_row reshape");
        let rg = self.rg(a);
        Ok(self.push(v, rg, Some(Op::SliceRow { src: a, row })))
    }

    /// Elementwise product with a fixed 0/1 mask. Gradients flow only
    /// through unmasked entries.
    pub fn mask_mul(&mut self, a: TensorId, mask: Array2<f64>) -> Result<TensorId, AdError> {
        let sa = self.shape(a);
        if dims(&mask) != sa {
            return Err(AdError::ShapeMismatch {
                op: "mask_mul",
                lhs: sa,
                rhs: dims(&mask),
            });
        }
        let v = self.value(a) * &mask;
        let rg = self.rg(a);
        Ok(self.push(v, rg, Some(Op::MaskMul { src: a, mask })))
    }

    /// Reverse sweep from a scalar loss. Gradients accumulate into every
    /// `requires_grad` ancestor; calling twice without `zero_grads`
    /// doubles them.
    pub fn backward(&mut self, loss: TensorId) -> Result<(), AdError> {
        if self.shape(loss) != (1, 1) {
            return Err(AdError::NonScalarLoss(self.shape(loss)));
        }
        let n = self.nodes.len();
        let mut adj: Vec<Option<Array2<f64>>> = (0..n).map(|_| None).collect();
        adj[loss.0] = Some(Array2::ones((1, 1)));

        for i in (0..=loss.0).rev() {
            let seed = match adj[i].take() {
                Some(g) => g,
                None => continue,
            };
            if !self.nodes[i].requires_grad {
                continue;
            }
            {
                let slot = &mut self.nodes[i].grad;
                match slot {
                    Some(g) => *g += &seed,
                    None => *slot = Some(seed.clone()),
                }
            }
            let acc = |adj: &mut Vec<Option<Array2<f64>>>,
                           tape: &Tape,
                           id: TensorId,
                           g: Array2<f64>| {
                if !tape.nodes[id.0].requires_grad {
                    return;
                }
                match &mut adj[id.0] {
                    Some(a) => *a += &g,
                    slot @ None => *slot = Some(g),
                }
            };
            let op = match &self.nodes[i].op {
                Some(op) => op,
                None => continue,
            };
            match op {
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    acc(&mut adj, self, a, seed.clone());
                    acc(&mut adj, self, b, seed);
                }
                Op::Sub(a, b) => {
                    let (a, b) = (*a, *b);
                    acc(&mut adj, self, a, seed.clone());
                    acc(&mut adj, self, b, -seed);
                }
                Op::Mul(a, b) => {
                    let (a, b) = (*a, *b);
                    let ga = &seed * self.value(b);
                    let gb = &seed * self.value(a);
                    acc(&mut adj, self, a, ga);
                    acc(&mut adj, self, b, gb);
                }
                Op::MatMul(a, b) => {
                    let (a, b) = (*a, *b);
                    let ga = seed.dot(&self.value(b).t());
                    let gb = self.value(a).t().dot(&seed);
                    acc(&mut adj, self, a, ga);
                    acc(&mut adj, self, b, gb);
                }
                Op::Transpose(a) => {
                    let a = *a;
                    acc(&mut adj, self, a, seed.t().to_owned());
                }
                Op::Sigmoid(a) => {
                    let a = *a;
                    let y = &self.nodes[i].value;
                    let g = &seed * &(y * &y.mapv(|v| 1.0 - v));
                    acc(&mut adj, self, a, g);
                }
                Op::Tanh(a) => {
                    let a = *a;
                    let y = &self.nodes[i].value;
                    let g = &seed * &y.mapv(|v| 1.0 - v * v);
                    acc(&mut adj, self, a, g);
                }
                Op::Relu(a) => {
                    let a = *a;
                    let x = self.value(a);
                    let g = &seed * &x.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                    acc(&mut adj, self, a, g);
                }
                Op::Dropout { src, mask } => {
                    let (src, g) = (*src, &seed * mask);
                    acc(&mut adj, self, src, g);
                }
                Op::SoftmaxRows(a) => {
                    let a = *a;
                    let y = &self.nodes[i].value;
                    let mut g = Array2::zeros(dims(y));
                    for r in 0..y.nrows() {
                        let yr = y.row(r);
                        let sr = seed.row(r);
                        let dot: f64 = yr.iter().zip(sr.iter()).map(|(u, v)| u * v).sum();
                        for c in 0..y.ncols() {
                            g[(r, c)] = yr[c] * (sr[c] - dot);
                        }
                    }
                    acc(&mut adj, self, a, g);
                }
                Op::Sum(a) => {
                    let a = *a;
                    let g = Array2::from_elem(self.shape(a), seed[(0, 0)]);
                    acc(&mut adj, self, a, g);
                }
                Op::Mean(a) => {
                    let a = *a;
                    let shape = self.shape(a);
                    let g = Array2::from_elem(shape, seed[(0, 0)] / ((shape.0 * shape.1) as f64));
                    acc(&mut adj, self, a, g);
                }
                Op::AddRowVec(a, v) => {
                    let (a, v) = (*a, *v);
                    let gv = seed
                        .sum_axis(Axis(0))
                        .into_shape((1, self.shape(v).1))
                        .expect("add_rowvec grad reshape");
                    acc(&mut adj, self, a, seed.clone());
                    acc(&mut adj, self, v, gv);
                }
                Op::MulColVec(a, c) => {
                    let (a, c) = (*a, *c);
                    let ga = &seed * self.value(c);
                    let gc = (&seed * self.value(a))
                        .sum_axis(Axis(1))
                        .into_shape((self.shape(c).0, 1))
                        .expect("mul_colvec grad reshape");
                    acc(&mut adj, self, a, ga);
                    acc(&mut adj, self, c, gc);
                }
                Op::MulRowVec(a, r) => {
                    let (a, r) = (*a, *r);
                    let ga = &seed * self.value(r);
                    let gr = (&seed * self.value(a))
                        .sum_axis(Axis(0))
                        .into_shape((1, self.shape(r).1))
                        .expect("mul_rowvec grad reshape");
                    acc(&mut adj, self, a, ga);
                    acc(&mut adj, self, r, gr);
                }
                Op::RowSum(a) => {
                    let a = *a;
                    let (m, n) = self.shape(a);
                    let mut g = Array2::zeros((m, n));
                    for r in 0..m {
                        let s = seed[(r, 0)];
                        g.row_mut(r).fill(s);
                    }
                    acc(&mut adj, self, a, g);
                }
                Op::Powf(a, p) => {
                    let (a, p) = (*a, *p);
                    let g = &seed * &self.value(a).mapv(|x| p * x.powf(p - 1.0));
                    acc(&mut adj, self, a, g);
                }
                Op::AddScalar(a) => {
                    let a = *a;
                    acc(&mut adj, self, a, seed);
                }
                Op::MulScalar(a, c) => {
                    let (a, c) = (*a, *c);
                    acc(&mut adj, self, a, seed.mapv(|v| v * c));
                }
                Op::Scale { a, s } => {
                    let (a, s) = (*a, *s);
                    let c = self.value(s)[(0, 0)];
                    let ga = seed.mapv(|v| v * c);
                    let gs = Array2::from_elem((1, 1), (&seed * self.value(a)).sum());
                    acc(&mut adj, self, a, ga);
                    acc(&mut adj, self, s, gs);
                }
                Op::ConcatCols(cols) => {
                    let cols = cols.clone();
                    for (j, c) in cols.iter().enumerate() {
                        let m = self.shape(*c).0;
                        let g = seed
                            .column(j)
                            .to_owned()
                            .into_shape((m, 1))
                            .expect("concat grad reshape");
                        acc(&mut adj, self, *c, g);
                    }
                }
                Op::SliceCol { src, col } => {
                    let (src, col) = (*src, *col);
                    let (m, n) = self.shape(src);
                    let mut g = Array2::zeros((m, n));
                    g.column_mut(col).assign(&seed.column(0));
                    acc(&mut adj, self, src, g);
                }
                Op::SliceRow { src, row } => {
                    let (src, row) = (*src, *row);
                    let (m, n) = self.shape(src);
                    let mut g = Array2::zeros((m, n));
                    g.row_mut(row).assign(&seed.row(0));
                    acc(&mut adj, self, src, g);
                }
                Op::MaskMul { src, mask } => {
                    let (src, g) = (*src, &seed * mask);
                    acc(&mut adj, self, src, g);
                }
            }
        }
        Ok(())
    }
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
