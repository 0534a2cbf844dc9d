//! Differentiable models, datasets and μP initialisation.
//!
//! Every model exposes the stacked outputs `g(θ)` over a dataset, the exact
//! output Jacobian `J(θ)` (n × m), Jacobian-transpose products and
//! output-Hessian contractions. The two toys are analytic; the MLP uses an
//! analytic per-output pass over its layers.

use nalgebra::{DMatrix, DMatrixView, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{GeoflowError, Result};

/// Parameter vector θ.
pub type Params = DVector<f64>;

/// Training inputs and scalar targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: DVector<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(GeoflowError::InvalidDataset("dataset must contain at least one point".into()));
        }
        if inputs.len() != targets.len() {
            return Err(GeoflowError::InvalidDataset(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let dim = inputs[0].len();
        if dim == 0 || inputs.iter().any(|x| x.len() != dim) {
            return Err(GeoflowError::InvalidDataset(
                "inputs must share one non-zero dimension".into(),
            ));
        }
        for i in 0..inputs.len() {
            for j in (i + 1)..inputs.len() {
                if inputs[i] == inputs[j] {
                    return Err(GeoflowError::InvalidDataset(format!("inputs {i} and {j} coincide")));
                }
            }
        }
        if inputs.iter().flatten().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(GeoflowError::InvalidDataset("non-finite value".into()));
        }
        Ok(Dataset {
            inputs,
            targets: DVector::from_vec(targets),
        })
    }

    /// One-dimensional inputs.
    pub fn scalar(xs: &[f64], ys: &[f64]) -> Result<Self> {
        Dataset::new(xs.iter().map(|&x| vec![x]).collect(), ys.to_vec())
    }

    /// The singleton dataset `{(1, 1)}` used by the two-parameter toys.
    pub fn unit() -> Self {
        Dataset::scalar(&[1.0], &[1.0]).expect("valid")
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    /// Same inputs, different targets (surrogate-target probes).
    pub fn with_targets(&self, targets: DVector<f64>) -> Result<Self> {
        if targets.len() != self.len() {
            return Err(GeoflowError::DimensionMismatch {
                what: "targets",
                expected: self.len(),
                actual: targets.len(),
            });
        }
        Ok(Dataset {
            inputs: self.inputs.clone(),
            targets,
        })
    }

    /// Splits off every `k`-th point (by index) into a second dataset.
    pub fn split_every(&self, k: usize) -> Result<(Dataset, Dataset)> {
        let (mut a, mut b) = ((vec![], vec![]), (vec![], vec![]));
        for (i, x) in self.inputs.iter().enumerate() {
            let dst = if k > 0 && i % k == k - 1 { &mut b } else { &mut a };
            dst.0.push(x.clone());
            dst.1.push(self.targets[i]);
        }
        Ok((Dataset::new(a.0, a.1)?, Dataset::new(b.0, b.1)?))
    }
}

/// Smooth hidden activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    /// tanh approximation of GELU (smooth).
    Gelu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Gelu => {
                let u = GELU_C * (z + 0.044715 * z * z * z);
                0.5 * z * (1.0 + u.tanh())
            }
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Gelu => {
                let u = GELU_C * (z + 0.044715 * z * z * z);
                let t = u.tanh();
                0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * z * z)
            }
        }
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

/// Forward multipliers applied to each parameter block.
///
/// The defaults give the μP readout `1/width`; the others stay at 1. They
/// double as the optional effective-parameter scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerMultipliers {
    pub w1: f64,
    pub b1: f64,
    pub w2: f64,
    pub b2: f64,
    pub readout: f64,
}

/// Two-hidden-layer scalar-output MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub widths: [usize; 2],
    pub activation: Activation,
    pub multipliers: LayerMultipliers,
}

impl MlpSpec {
    pub fn new(input_dim: usize, width: usize, activation: Activation) -> Self {
        MlpSpec {
            input_dim,
            widths: [width, width],
            activation,
            multipliers: LayerMultipliers {
                w1: 1.0,
                b1: 1.0,
                w2: 1.0,
                b2: 1.0,
                readout: 1.0 / width as f64,
            },
        }
    }

    pub fn num_params(&self) -> usize {
        let [w1, w2] = self.widths;
        w1 * self.input_dim + w1 + w2 * w1 + w2 + w2
    }

    /// Offsets of (W1, b1, W2, b2, v) inside θ.
    fn offsets(&self) -> [usize; 6] {
        let [w1, w2] = self.widths;
        let d = self.input_dim;
        let o1 = w1 * d;
        let o2 = o1 + w1;
        let o3 = o2 + w2 * w1;
        let o4 = o3 + w2;
        [0, o1, o2, o3, o4, o4 + w2]
    }
}

/// Exact output Jacobian, stored transposed (m × n) so that each column is
/// the gradient of one output.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    jt: DMatrix<f64>,
}

impl JacobianMatrix {
    /// From an `n × m` matrix.
    pub fn from_matrix(j: DMatrix<f64>) -> Self {
        JacobianMatrix { jt: j.transpose() }
    }

    pub fn from_transposed(jt: DMatrix<f64>) -> Self {
        JacobianMatrix { jt }
    }

    /// Number of outputs n.
    pub fn nrows(&self) -> usize {
        self.jt.ncols()
    }

    /// Number of parameters m.
    pub fn ncols(&self) -> usize {
        self.jt.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.jt[(j, i)]
    }

    /// Gradient of output `i`.
    pub fn row(&self, i: usize) -> DVector<f64> {
        self.jt.column(i).into_owned()
    }

    pub fn transposed(&self) -> &DMatrix<f64> {
        &self.jt
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        self.jt.transpose()
    }

    /// `J v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.jt.tr_mul(v)
    }

    /// `Jᵀ w`.
    pub fn apply_transpose(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.jt * w
    }
}

/// The model zoo.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// f(x; θ) = θ₁θ₂x
    BilinearToy,
    /// f(x; θ) = (θ₁ + θ₂)x
    LinearToy,
    Mlp(MlpSpec),
}

impl Model {
    pub fn num_params(&self) -> usize {
        match self {
            Model::BilinearToy | Model::LinearToy => 2,
            Model::Mlp(spec) => spec.num_params(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::BilinearToy => "bilinear",
            Model::LinearToy => "linear",
            Model::Mlp(_) => "mlp",
        }
    }

    /// Constant Jacobian (kernel regime).
    pub fn is_kernel_regime(&self) -> bool {
        matches!(self, Model::LinearToy)
    }

    /// Two-parameter analytic toy.
    pub fn is_toy(&self) -> bool {
        matches!(self, Model::BilinearToy | Model::LinearToy)
    }

    fn check(&self, theta: &Params, data: &Dataset) -> Result<()> {
        let m = self.num_params();
        if theta.len() != m {
            return Err(GeoflowError::DimensionMismatch {
                what: "parameter vector",
                expected: m,
                actual: theta.len(),
            });
        }
        let d = match self {
            Model::Mlp(spec) => spec.input_dim,
            _ => 1,
        };
        if data.input_dim() != d {
            return Err(GeoflowError::DimensionMismatch {
                what: "input dimension",
                expected: d,
                actual: data.input_dim(),
            });
        }
        Ok(())
    }

    /// Stacked outputs `g(θ)`.
    pub fn eval_outputs(&self, theta: &Params, data: &Dataset) -> Result<DVector<f64>> {
        self.check(theta, data)?;
        let xs = data.inputs();
        Ok(match self {
            Model::BilinearToy => DVector::from_iterator(xs.len(), xs.iter().map(|x| theta[0] * theta[1] * x[0])),
            Model::LinearToy => DVector::from_iterator(xs.len(), xs.iter().map(|x| (theta[0] + theta[1]) * x[0])),
            Model::Mlp(spec) => mlp::forward(spec, theta, data).outputs,
        })
    }

    /// Exact Jacobian `J(θ)`.
    pub fn eval_jacobian(&self, theta: &Params, data: &Dataset) -> Result<JacobianMatrix> {
        self.check(theta, data)?;
        let xs = data.inputs();
        let n = xs.len();
        Ok(match self {
            Model::BilinearToy => {
                let mut jt = DMatrix::zeros(2, n);
                for (a, x) in xs.iter().enumerate() {
                    jt[(0, a)] = theta[1] * x[0];
                    jt[(1, a)] = theta[0] * x[0];
                }
                JacobianMatrix::from_transposed(jt)
            }
            Model::LinearToy => {
                let mut jt = DMatrix::zeros(2, n);
                for (a, x) in xs.iter().enumerate() {
                    jt[(0, a)] = x[0];
                    jt[(1, a)] = x[0];
                }
                JacobianMatrix::from_transposed(jt)
            }
            Model::Mlp(spec) => JacobianMatrix::from_transposed(mlp::jacobian_transposed(spec, theta, data)),
        })
    }

    /// NTK Gram matrix `J Jᵀ`; the MLP path never forms `J`.
    pub fn ntk_matrix(&self, theta: &Params, data: &Dataset) -> Result<DMatrix<f64>> {
        match self {
            Model::Mlp(spec) => {
                self.check(theta, data)?;
                Ok(mlp::ntk(spec, theta, data))
            }
            _ => {
                let jt = self.eval_jacobian(theta, data)?.transposed().clone();
                let k = jt.tr_mul(&jt);
                Ok((&k + k.transpose()) * 0.5)
            }
        }
    }

    /// `J(θ)ᵀ w` without forming the Jacobian.
    pub fn vjp(&self, theta: &Params, data: &Dataset, w: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(theta, data)?;
        if w.len() != data.len() {
            return Err(GeoflowError::DimensionMismatch {
                what: "output weights",
                expected: data.len(),
                actual: w.len(),
            });
        }
        match self {
            Model::Mlp(spec) => {
                let fw = mlp::forward(spec, theta, data);
                Ok(mlp::backward(spec, theta, data, &fw, w))
            }
            _ => Ok(self.eval_jacobian(theta, data)?.apply_transpose(w)),
        }
    }

    /// Output-Hessian contraction `Σᵢ wᵢ ∇²gᵢ(θ) v`.
    pub fn hvp(&self, theta: &Params, data: &Dataset, w: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(theta, data)?;
        match self {
            Model::BilinearToy => {
                let s: f64 = data.inputs().iter().zip(w.iter()).map(|(x, wi)| wi * x[0]).sum();
                Ok(DVector::from_vec(vec![s * v[1], s * v[0]]))
            }
            Model::LinearToy => Ok(DVector::zeros(2)),
            Model::Mlp(_) => {
                // central differences of Jᵀw along v
                let scale = 1e-5 * (1.0 + theta.amax()) / v.norm().max(1e-300);
                let plus = self.vjp(&(theta + v * scale), data, w)?;
                let minus = self.vjp(&(theta - v * scale), data, w)?;
                Ok((plus - minus) / (2.0 * scale))
            }
        }
    }

    /// SSE loss, its gradient and the residual `g(θ) - Y`.
    pub fn loss_and_gradient(&self, theta: &Params, data: &Dataset) -> Result<(f64, DVector<f64>, DVector<f64>)> {
        match self {
            Model::Mlp(spec) => {
                self.check(theta, data)?;
                let fw = mlp::forward(spec, theta, data);
                let r = &fw.outputs - data.targets();
                let grad = mlp::backward(spec, theta, data, &fw, &(&r * 2.0));
                Ok((r.norm_squared(), grad, r))
            }
            _ => {
                let r = self.eval_outputs(theta, data)? - data.targets();
                let grad = self.eval_jacobian(theta, data)?.apply_transpose(&(&r * 2.0));
                Ok((r.norm_squared(), grad, r))
            }
        }
    }

    pub fn loss(&self, theta: &Params, data: &Dataset) -> Result<f64> {
        Ok((self.eval_outputs(theta, data)? - data.targets()).norm_squared())
    }
}

/// Gaussian μP initialisation: weights `N(0, 1/fan_in)` (biases count as
/// fan-in 1), readout weights `N(0, 1)` under the `1/width` multiplier.
pub fn mup_init(model: &Model, seed: u64) -> Result<Params> {
    let spec = match model {
        Model::Mlp(spec) => spec,
        other => {
            return Err(GeoflowError::Unsupported(format!(
                "mup_init requires an MLP, got {}",
                other.name()
            )))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [w1, _] = spec.widths;
    let off = spec.offsets();
    let std_w1 = (1.0 / spec.input_dim as f64).sqrt();
    let std_w2 = (1.0 / w1 as f64).sqrt();
    let stds = [std_w1, 1.0, std_w2, 1.0, 1.0];
    let mut theta = DVector::zeros(spec.num_params());
    for (block, std) in stds.iter().enumerate() {
        let normal = Normal::new(0.0, *std).expect("positive std");
        for i in off[block]..off[block + 1] {
            theta[i] = normal.sample(&mut rng);
        }
    }
    Ok(theta)
}

/// Standard deviation the initialiser uses for hidden-to-hidden weights.
pub fn hidden_weight_std(spec: &MlpSpec) -> f64 {
    (1.0 / spec.widths[0] as f64).sqrt()
}

/// Index range of the hidden-to-hidden weight block.
pub fn hidden_weight_range(spec: &MlpSpec) -> std::ops::Range<usize> {
    let off = spec.offsets();
    off[2]..off[3]
}

mod mlp {
    use super::*;

    pub(super) struct Forward {
        pub outputs: DVector<f64>,
        x: DMatrix<f64>,
        h1: DMatrix<f64>,
        a1: DMatrix<f64>,
        h2: DMatrix<f64>,
        a2: DMatrix<f64>,
    }

    struct Blocks<'a> {
        /// W1ᵀ as a d × w1 view
        w1t: DMatrixView<'a, f64>,
        b1: &'a [f64],
        /// W2ᵀ as a w1 × w2 view
        w2t: DMatrixView<'a, f64>,
        b2: &'a [f64],
        v: &'a [f64],
    }

    fn blocks<'a>(spec: &MlpSpec, theta: &'a Params) -> Blocks<'a> {
        let [w1, w2] = spec.widths;
        let d = spec.input_dim;
        let off = spec.offsets();
        let s = theta.as_slice();
        Blocks {
            w1t: DMatrixView::from_slice(&s[off[0]..off[1]], d, w1),
            b1: &s[off[1]..off[2]],
            w2t: DMatrixView::from_slice(&s[off[2]..off[3]], w1, w2),
            b2: &s[off[3]..off[4]],
            v: &s[off[4]..off[5]],
        }
    }

    pub(super) fn forward(spec: &MlpSpec, theta: &Params, data: &Dataset) -> Forward {
        let m = spec.multipliers;
        let act = spec.activation;
        let b = blocks(spec, theta);
        let n = data.len();
        let x = DMatrix::from_fn(spec.input_dim, n, |k, a| data.inputs()[a][k]);
        let mut h1 = b.w1t.tr_mul(&x) * m.w1;
        for (j, mut row) in h1.row_iter_mut().enumerate() {
            row.add_scalar_mut(m.b1 * b.b1[j]);
        }
        let a1 = h1.map(|z| act.apply(z));
        let mut h2 = b.w2t.tr_mul(&a1) * m.w2;
        for (i, mut row) in h2.row_iter_mut().enumerate() {
            row.add_scalar_mut(m.b2 * b.b2[i]);
        }
        let a2 = h2.map(|z| act.apply(z));
        let v = DVector::from_column_slice(b.v);
        let outputs = a2.tr_mul(&v) * m.readout;
        Forward {
            outputs,
            x,
            h1,
            a1,
            h2,
            a2,
        }
    }

    /// Output deltas at both hidden pre-activations, one column per point,
    /// each scaled by the corresponding weight in `w`.
    fn deltas(spec: &MlpSpec, theta: &Params, fw: &Forward, w: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let m = spec.multipliers;
        let act = spec.activation;
        let b = blocks(spec, theta);
        let e2 = DMatrix::from_fn(fw.h2.nrows(), fw.h2.ncols(), |i, a| {
            m.readout * b.v[i] * w[a] * act.derivative(fw.h2[(i, a)])
        });
        let mut e1 = (b.w2t * &e2) * m.w2;
        for a in 0..e1.ncols() {
            for j in 0..e1.nrows() {
                e1[(j, a)] *= act.derivative(fw.h1[(j, a)]);
            }
        }
        (e1, e2)
    }

    pub(super) fn backward(spec: &MlpSpec, theta: &Params, _data: &Dataset, fw: &Forward, w: &DVector<f64>) -> DVector<f64> {
        let m = spec.multipliers;
        let [w1, w2] = spec.widths;
        let d = spec.input_dim;
        let off = spec.offsets();
        let (e1, e2) = deltas(spec, theta, fw, w);
        let mut grad = DVector::zeros(spec.num_params());
        let g = grad.as_mut_slice();
        // W1ᵀ block (d × w1, column-major) = X E1ᵀ
        let gw1 = (&fw.x * e1.transpose()) * m.w1;
        g[off[0]..off[1]].copy_from_slice(gw1.as_slice());
        for j in 0..w1 {
            g[off[1] + j] = m.b1 * e1.row(j).sum();
        }
        // W2ᵀ block (w1 × w2) = A1 E2ᵀ
        let gw2 = (&fw.a1 * e2.transpose()) * m.w2;
        g[off[2]..off[3]].copy_from_slice(gw2.as_slice());
        for i in 0..w2 {
            g[off[3] + i] = m.b2 * e2.row(i).sum();
        }
        let gv = &fw.a2 * w * m.readout;
        g[off[4]..off[5]].copy_from_slice(gv.as_slice());
        debug_assert_eq!(gw1.len(), d * w1);
        grad
    }

    /// `J Jᵀ` assembled per layer: each weight block contributes the
    /// Hadamard product of its delta and input Gram matrices, so the cost
    /// is `O(n²·width + n·width²)` instead of `O(n²·P)`.
    pub(super) fn ntk(spec: &MlpSpec, theta: &Params, data: &Dataset) -> DMatrix<f64> {
        let m = spec.multipliers;
        let n = data.len();
        let fw = forward(spec, theta, data);
        let (e1, e2) = deltas(spec, theta, &fw, &DVector::from_element(n, 1.0));
        let g1 = e1.tr_mul(&e1);
        let g2 = e2.tr_mul(&e2);
        let k = g1.component_mul(&fw.x.tr_mul(&fw.x)) * (m.w1 * m.w1)
            + &g1 * (m.b1 * m.b1)
            + g2.component_mul(&fw.a1.tr_mul(&fw.a1)) * (m.w2 * m.w2)
            + &g2 * (m.b2 * m.b2)
            + fw.a2.tr_mul(&fw.a2) * (m.readout * m.readout);
        (&k + k.transpose()) * 0.5
    }

    pub(super) fn jacobian_transposed(spec: &MlpSpec, theta: &Params, data: &Dataset) -> DMatrix<f64> {
        let m = spec.multipliers;
        let [w1, w2] = spec.widths;
        let d = spec.input_dim;
        let off = spec.offsets();
        let n = data.len();
        let fw = forward(spec, theta, data);
        let (e1, e2) = deltas(spec, theta, &fw, &DVector::from_element(n, 1.0));
        let mut jt = DMatrix::zeros(spec.num_params(), n);
        for a in 0..n {
            let mut col = jt.column_mut(a);
            let c = col.as_mut_slice();
            for j in 0..w1 {
                for k in 0..d {
                    c[off[0] + j * d + k] = m.w1 * e1[(j, a)] * fw.x[(k, a)];
                }
                c[off[1] + j] = m.b1 * e1[(j, a)];
            }
            for i in 0..w2 {
                let e = m.w2 * e2[(i, a)];
                let row = &mut c[off[2] + i * w1..off[2] + (i + 1) * w1];
                for (dst, a1) in row.iter_mut().zip(fw.a1.column(a).iter()) {
                    *dst = e * a1;
                }
                c[off[3] + i] = m.b2 * e2[(i, a)];
                c[off[4] + i] = m.readout * fw.a2[(i, a)];
            }
        }
        jt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jacobian(model: &Model, theta: &Params, data: &Dataset) -> DMatrix<f64> {
        let m = theta.len();
        let n = data.len();
        let mut j = DMatrix::zeros(n, m);
        for k in 0..m {
            let h = 1e-5 * (1.0 + theta[k].abs());
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[k] += h;
            tm[k] -= h;
            let d = (model.eval_outputs(&tp, data).unwrap() - model.eval_outputs(&tm, data).unwrap()) / (2.0 * h);
            j.set_column(k, &d);
        }
        j
    }

    #[test]
    fn bilinear_outputs_and_jacobian() {
        let data = Dataset::unit();
        let theta = DVector::from_vec(vec![2.0, 0.1]);
        let g = Model::BilinearToy.eval_outputs(&theta, &data).unwrap();
        assert!((g[0] - 0.2).abs() < 1e-15);
        let j = Model::BilinearToy.eval_jacobian(&theta, &data).unwrap();
        assert_eq!(j.get(0, 0), 0.1);
        assert_eq!(j.get(0, 1), 2.0);
    }

    #[test]
    fn linear_toy_constant_jacobian() {
        let data = Dataset::unit();
        for theta in [[0.0, 0.0], [3.0, -7.0], [1e3, 2.0]] {
            let theta = DVector::from_vec(theta.to_vec());
            let j = Model::LinearToy.eval_jacobian(&theta, &data).unwrap();
            assert_eq!(j.to_matrix(), DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
        }
        let g = Model::LinearToy.eval_outputs(&DVector::zeros(2), &data).unwrap();
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn dimension_mismatch_names_sizes() {
        let err = Model::BilinearToy
            .eval_outputs(&DVector::zeros(3), &Dataset::unit())
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 2") && msg.contains("got 3"), "{msg}");
    }

    #[test]
    fn zero_mlp_outputs_zero() {
        let model = Model::Mlp(MlpSpec::new(1, 8, Activation::Tanh));
        let data = Dataset::scalar(&[-1.0, 0.3, 2.0], &[0.0, 0.0, 0.0]).unwrap();
        let g = model.eval_outputs(&DVector::zeros(model.num_params()), &data).unwrap();
        assert_eq!(g, DVector::zeros(3));
    }

    #[test]
    fn mlp_jacobian_matches_finite_differences() {
        for act in [Activation::Tanh, Activation::Gelu] {
            let model = Model::Mlp(MlpSpec::new(2, 6, act));
            let data = Dataset::new(vec![vec![0.1, -0.4], vec![0.7, 0.2], vec![-1.0, 0.5]], vec![0.0; 3]).unwrap();
            let theta = mup_init(&model, 11).unwrap();
            let j = model.eval_jacobian(&theta, &data).unwrap().to_matrix();
            let fd = fd_jacobian(&model, &theta, &data);
            let err = (&j - &fd).amax() / j.amax();
            assert!(err < 1e-6, "{act:?}: {err}");
        }
    }

    #[test]
    fn vjp_matches_jacobian_transpose() {
        let model = Model::Mlp(MlpSpec::new(1, 5, Activation::Gelu));
        let data = Dataset::scalar(&[-0.5, 0.0, 0.5, 1.0], &[0.0; 4]).unwrap();
        let theta = mup_init(&model, 3).unwrap();
        let w = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5]);
        let a = model.vjp(&theta, &data, &w).unwrap();
        let b = model.eval_jacobian(&theta, &data).unwrap().apply_transpose(&w);
        assert!((a - b).amax() < 1e-13);
    }

    #[test]
    fn mup_init_is_deterministic_and_seed_sensitive() {
        let model = Model::Mlp(MlpSpec::new(1, 16, Activation::Tanh));
        let a = mup_init(&model, 7).unwrap();
        assert_eq!(a, mup_init(&model, 7).unwrap());
        assert_ne!(a, mup_init(&model, 8).unwrap());
        assert!(mup_init(&Model::LinearToy, 0).is_err());
    }

    #[test]
    fn dataset_rejects_duplicates() {
        assert!(Dataset::scalar(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(Dataset::scalar(&[], &[]).is_err());
        assert!(Dataset::scalar(&[1.0], &[0.0, 1.0]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn structured_ntk_matches_jacobian_gram(width in 2usize..12, seed in 0u64..1000, gelu: bool) {
            let act = if gelu { Activation::Gelu } else { Activation::Tanh };
            let model = Model::Mlp(MlpSpec::new(2, width, act));
            let data = Dataset::new(vec![vec![0.3, -1.0], vec![0.5, 0.2], vec![-0.7, 0.9]], vec![0.0, 1.0, 0.5]).unwrap();
            let theta = mup_init(&model, seed).unwrap();
            let jt = model.eval_jacobian(&theta, &data).unwrap().transposed().clone();
            let k = model.ntk_matrix(&theta, &data).unwrap();
            let reference = jt.tr_mul(&jt);
            proptest::prop_assert!((k - &reference).amax() <= 1e-12 * reference.amax().max(1.0));
        }
    }
}
