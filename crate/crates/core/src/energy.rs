//! Minimum-energy horizontal transport, fibre geodesics and geodesic ridge.
//!
//! The horizontal control problem moves parameters along
//! `θ̇ = J(θ)ᵀu(t)`, `t ∈ [0, 1]`, from `θ_start` to a point with outputs
//! `c`, minimising `∫ uᵀK(θ)u dt = ∫ ‖θ̇‖² dt`. Controls are piecewise
//! constant on `K` uniform segments; each segment is integrated with one RK4
//! step and contributes `‖Δθ_k‖² / Δt` to the energy. The endpoint
//! constraint is enforced by an augmented-Lagrangian penalty continuation
//! and the inner problems are solved with BFGS using exact adjoint
//! gradients.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{GeoflowError, Result};
use crate::flow::TrajectoryRecord;
use crate::geometry::{ntk_gram, representative};
use crate::linalg::{spd_solve, symmetric_extremes};
use crate::model::{Dataset, JacobianMatrix, Model, Params};
use crate::optim::{minimize, BfgsOptions};

/// A horizontal minimum-energy problem.
#[derive(Debug, Clone)]
pub struct EnergyProblem<'a> {
    pub model: &'a Model,
    pub data: &'a Dataset,
    pub theta_start: Params,
    pub c_target: DVector<f64>,
    /// Number of control segments (≥ 8).
    pub segments: usize,
    pub penalty_schedule: Vec<f64>,
    /// Gradient tolerance of the inner BFGS solves.
    pub inner_tol: f64,
    /// Required endpoint residual `‖g(θ_K) − c‖`.
    pub residual_tol: f64,
    /// Optional parameter-space endpoint; when set, a second solve with the
    /// endpoint pinned to it is reported alongside.
    pub representative: Option<Params>,
    pub max_inner_iter: usize,
}

impl<'a> EnergyProblem<'a> {
    pub fn new(model: &'a Model, data: &'a Dataset, theta_start: Params, c_target: DVector<f64>) -> Self {
        EnergyProblem {
            model,
            data,
            theta_start,
            c_target,
            segments: 64,
            penalty_schedule: vec![1e2, 1e3, 1e4, 1e5],
            inner_tol: 1e-8,
            residual_tol: 1e-8,
            representative: None,
            max_inner_iter: 2000,
        }
    }

    /// Checks that `c_target` lies inside the bounding box of a ridgeless
    /// run's outputs, expanded by 20% of its extent per output.
    pub fn validate_reachable(&self, reference: &TrajectoryRecord) -> Result<()> {
        let n = self.c_target.len();
        for i in 0..n {
            let (lo, hi) = reference
                .steps
                .iter()
                .map(|s| s.outputs[i])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            let pad = 0.2 * (hi - lo);
            let c = self.c_target[i];
            if c < lo - pad || c > hi + pad {
                return Err(GeoflowError::Config(format!(
                    "target output {i} = {c} outside reachable box [{}, {}]",
                    lo - pad,
                    hi + pad
                )));
            }
        }
        Ok(())
    }
}

/// Discretised horizontal path.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath {
    pub controls: Vec<DVector<f64>>,
    /// `K + 1` points.
    pub thetas: Vec<Params>,
    pub dt: f64,
}

impl ControlPath {
    /// `Σ ‖Δθ_k‖² / Δt`.
    pub fn energy(&self) -> f64 {
        self.thetas.windows(2).map(|w| (&w[1] - &w[0]).norm_squared()).sum::<f64>() / self.dt
    }

    /// `Σ ‖Δθ_k‖`.
    pub fn length(&self) -> f64 {
        self.thetas.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySolveResult {
    pub energy: f64,
    pub path_length: f64,
    pub endpoint_residual: f64,
    pub converged: bool,
    /// Final inner gradient norm.
    pub grad_norm: f64,
    pub path: ControlPath,
    /// Extremes of `λ(K)` over the path points.
    pub lambda_min_along: f64,
    pub lambda_max_along: f64,
    /// Energy of the variant pinned to the representative endpoint.
    pub representative_energy: Option<f64>,
    pub representative_residual: Option<f64>,
}

/// `T · energy / length²` of a path over horizon `T`; 1 exactly for
/// constant speed, larger otherwise.
pub fn constant_speed_check(path: &ControlPath) -> f64 {
    let len = path.length();
    if len == 0.0 {
        return 1.0;
    }
    let horizon = path.dt * path.thetas.len().saturating_sub(1) as f64;
    horizon * path.energy() / (len * len)
}

enum Endpoint<'p> {
    Outputs(&'p DVector<f64>),
    Params(&'p Params),
}

struct Forward {
    thetas: Vec<Params>,
    /// RK4 stage points and their Jacobians, per segment.
    stages: Vec<[(Params, JacobianMatrix); 4]>,
}

struct Transcription<'a, 'p> {
    model: &'a Model,
    data: &'a Dataset,
    theta_start: &'p Params,
    segments: usize,
    endpoint: Endpoint<'p>,
}

impl Transcription<'_, '_> {
    fn n(&self) -> usize {
        self.data.len()
    }

    fn control(&self, u: &DVector<f64>, k: usize) -> DVector<f64> {
        let n = self.n();
        DVector::from_column_slice(&u.as_slice()[k * n..(k + 1) * n])
    }

    fn forward(&self, u: &DVector<f64>) -> Result<Forward> {
        let h = 1.0 / self.segments as f64;
        let mut thetas = Vec::with_capacity(self.segments + 1);
        let mut stages = Vec::with_capacity(self.segments);
        let mut th = self.theta_start.clone();
        thetas.push(th.clone());
        for k in 0..self.segments {
            let uk = self.control(u, k);
            let stage = |x: Params| -> Result<(Params, JacobianMatrix, DVector<f64>)> {
                let j = self.model.eval_jacobian(&x, self.data)?;
                let f = j.apply_transpose(&uk);
                Ok((x, j, f))
            };
            let (x1, j1, k1) = stage(th.clone())?;
            let (x2, j2, k2) = stage(&th + &k1 * (0.5 * h))?;
            let (x3, j3, k3) = stage(&th + &k2 * (0.5 * h))?;
            let (x4, j4, k4) = stage(&th + &k3 * h)?;
            th += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            thetas.push(th.clone());
            stages.push([(x1, j1), (x2, j2), (x3, j3), (x4, j4)]);
        }
        Ok(Forward { thetas, stages })
    }

    fn residual(&self, theta_end: &Params) -> Result<DVector<f64>> {
        Ok(match self.endpoint {
            Endpoint::Outputs(c) => self.model.eval_outputs(theta_end, self.data)? - c,
            Endpoint::Params(p) => theta_end - p,
        })
    }

    /// Augmented Lagrangian `E + μ‖r‖² + νᵀr` and its gradient.
    fn objective(&self, u: &DVector<f64>, mu: f64, nu: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let h = 1.0 / self.segments as f64;
        let fw = self.forward(u)?;
        let theta_end = fw.thetas.last().expect("non-empty");
        let r = self.residual(theta_end)?;
        let mut value = mu * r.norm_squared() + nu.dot(&r);
        let w = &r * (2.0 * mu) + nu;
        let mut adj = match self.endpoint {
            Endpoint::Outputs(_) => self.model.eval_jacobian(theta_end, self.data)?.apply_transpose(&w),
            Endpoint::Params(_) => w,
        };
        let n = self.n();
        let mut grad = DVector::zeros(u.len());
        for k in (0..self.segments).rev() {
            let d = &fw.thetas[k + 1] - &fw.thetas[k];
            value += d.norm_squared() / h;
            adj += &d * (2.0 / h);
            let uk = self.control(u, k);
            let (gu, gth) = self.step_adjoint(&fw.stages[k], &uk, &adj, h)?;
            grad.as_mut_slice()[k * n..(k + 1) * n].copy_from_slice(gu.as_slice());
            adj = gth - d * (2.0 / h);
        }
        Ok((value, grad))
    }

    /// Reverse pass through one RK4 step given `∂Φ/∂θ_{k+1}`.
    fn step_adjoint(
        &self,
        st: &[(Params, JacobianMatrix); 4],
        u: &DVector<f64>,
        a: &DVector<f64>,
        h: f64,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let hvp = |x: &Params, v: &DVector<f64>| self.model.hvp(x, self.data, u, v);
        let mut gu = DVector::zeros(u.len());
        let mut gth = a.clone();
        let ak4 = a * (h / 6.0);
        let mut ak3 = a * (h / 3.0);
        let mut ak2 = a * (h / 3.0);
        let mut ak1 = a * (h / 6.0);
        gu += st[3].1.apply(&ak4);
        let ax4 = hvp(&st[3].0, &ak4)?;
        gth += &ax4;
        ak3 += ax4 * h;
        gu += st[2].1.apply(&ak3);
        let ax3 = hvp(&st[2].0, &ak3)?;
        gth += &ax3;
        ak2 += ax3 * (0.5 * h);
        gu += st[1].1.apply(&ak2);
        let ax2 = hvp(&st[1].0, &ak2)?;
        gth += &ax2;
        ak1 += ax2 * (0.5 * h);
        gu += st[0].1.apply(&ak1);
        gth += hvp(&st[0].0, &ak1)?;
        Ok((gu, gth))
    }

    fn path(&self, u: &DVector<f64>, fw: Forward) -> ControlPath {
        ControlPath {
            controls: (0..self.segments).map(|k| self.control(u, k)).collect(),
            thetas: fw.thetas,
            dt: 1.0 / self.segments as f64,
        }
    }

    /// Penalty continuation followed by extra multiplier rounds at the
    /// final weight until the residual target is met.
    fn solve(&self, u0: DVector<f64>, prob: &EnergyProblem) -> Result<(DVector<f64>, f64, f64)> {
        let mut u = u0;
        let dim_r = match self.endpoint {
            Endpoint::Outputs(_) => self.n(),
            Endpoint::Params(p) => p.len(),
        };
        let mut nu = DVector::zeros(dim_r);
        let opts = BfgsOptions {
            max_iter: prob.max_inner_iter,
            grad_tol: prob.inner_tol,
            ..BfgsOptions::default()
        };
        let last_mu = *prob.penalty_schedule.last().expect("validated non-empty");
        let mut grad_norm = f64::INFINITY;
        let mut residual = f64::INFINITY;
        let schedule = prob.penalty_schedule.iter().cloned().chain(std::iter::repeat_n(last_mu, 12));
        for (round, mu) in schedule.enumerate() {
            let res = minimize(
                |x| match self.objective(x, mu, &nu) {
                    Ok(v) if v.0.is_finite() => v,
                    _ => (f64::INFINITY, DVector::zeros(x.len())),
                },
                u.clone(),
                &opts,
            );
            log::debug!("mu {mu}: {} iterations, grad {:.3e}", res.iterations, res.grad_norm);
            u = res.x;
            grad_norm = res.grad_norm;
            let fw = self.forward(&u)?;
            let r = self.residual(fw.thetas.last().expect("non-empty"))?;
            residual = r.norm();
            nu += r * (2.0 * mu);
            let past_schedule = round + 1 >= prob.penalty_schedule.len();
            if past_schedule && residual < prob.residual_tol && res.converged {
                break;
            }
        }
        Ok((u, grad_norm, residual))
    }
}

/// Solves the horizontal minimum-energy problem.
pub fn solve_horizontal_energy(prob: &EnergyProblem) -> Result<EnergySolveResult> {
    if prob.segments < 8 {
        return Err(GeoflowError::Config(format!(
            "need at least 8 segments, got {}",
            prob.segments
        )));
    }
    if prob.penalty_schedule.is_empty() || prob.penalty_schedule.iter().any(|&m| !(m > 0.0)) {
        return Err(GeoflowError::Config("penalty schedule must be non-empty and positive".into()));
    }
    let n = prob.data.len();
    if prob.c_target.len() != n {
        return Err(GeoflowError::DimensionMismatch {
            what: "output target",
            expected: n,
            actual: prob.c_target.len(),
        });
    }
    let j0 = prob.model.eval_jacobian(&prob.theta_start, prob.data)?;
    let k0 = ntk_gram(&j0);
    let g0 = prob.model.eval_outputs(&prob.theta_start, prob.data)?;
    let u0 = spd_solve(&k0.matrix, &(&prob.c_target - &g0))?;
    let init = DVector::from_fn(prob.segments * n, |i, _| u0[i % n]);

    let tr = Transcription {
        model: prob.model,
        data: prob.data,
        theta_start: &prob.theta_start,
        segments: prob.segments,
        endpoint: Endpoint::Outputs(&prob.c_target),
    };
    let (u, grad_norm, residual) = tr.solve(init, prob)?;
    let fw = tr.forward(&u)?;
    let path = tr.path(&u, fw);

    let (mut lmin, mut lmax) = (f64::INFINITY, 0.0f64);
    for (k, th) in path.thetas.iter().enumerate() {
        let kk = ntk_gram(&prob.model.eval_jacobian(th, prob.data)?);
        let (lo, hi) = symmetric_extremes(&kk.matrix);
        if lo <= 1e-8 {
            return Err(GeoflowError::RankCollapse {
                segment: k,
                lambda_min: lo,
            });
        }
        lmin = lmin.min(lo);
        lmax = lmax.max(hi);
    }

    let (representative_energy, representative_residual) = match &prob.representative {
        Some(rep) => {
            let tr_rep = Transcription {
                endpoint: Endpoint::Params(rep),
                ..tr
            };
            let (u_rep, _, res_rep) = tr_rep.solve(u.clone(), prob)?;
            let fw = tr_rep.forward(&u_rep)?;
            (Some(tr_rep.path(&u_rep, fw).energy()), Some(res_rep))
        }
        None => (None, None),
    };
    Ok(EnergySolveResult {
        energy: path.energy(),
        path_length: path.length(),
        endpoint_residual: residual,
        converged: residual < prob.residual_tol && grad_norm < prob.inner_tol,
        grad_norm,
        path,
        lambda_min_along: lmin,
        lambda_max_along: lmax,
        representative_energy,
        representative_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FibreDistanceResult {
    pub d2_fibre: f64,
    pub path: Vec<Params>,
}

/// Squared geodesic distance between two points of one output fibre.
///
/// In the kernel regime fibres are flat and the distance is the chord. For
/// one-dimensional fibres (`m − n = 1`) the curve is traced from `theta_rep`
/// by predictor steps along `ker J` followed by Gauss–Newton reprojection
/// onto `g = c`; the length is the sum of chords.
pub fn fibre_distance(
    model: &Model,
    data: &Dataset,
    theta_rep: &Params,
    theta: &Params,
    fibre_tol: f64,
) -> Result<FibreDistanceResult> {
    let c = model.eval_outputs(theta_rep, data)?;
    let gap = (model.eval_outputs(theta, data)? - &c).norm();
    if !(gap < fibre_tol) {
        return Err(GeoflowError::DifferentFibres {
            gap,
            tolerance: fibre_tol,
        });
    }
    let total = (theta - theta_rep).norm();
    if total == 0.0 {
        return Ok(FibreDistanceResult {
            d2_fibre: 0.0,
            path: vec![theta.clone()],
        });
    }
    if model.is_kernel_regime() {
        return Ok(FibreDistanceResult {
            d2_fibre: total * total,
            path: vec![theta_rep.clone(), theta.clone()],
        });
    }
    let m = model.num_params();
    let n = data.len();
    if m != n + 1 {
        return Err(GeoflowError::Unsupported(format!(
            "fibre tracing needs one-dimensional fibres (m - n = 1), got m = {m}, n = {n}"
        )));
    }
    let h = (total / 20.0).min(1e-2);
    let max_steps = 1_000_000;
    let mut cur = theta_rep.clone();
    let mut length = 0.0;
    let mut path = vec![cur.clone()];
    for _ in 0..max_steps {
        let remaining = theta - &cur;
        if remaining.norm() <= h {
            length += remaining.norm();
            path.push(theta.clone());
            return Ok(FibreDistanceResult {
                d2_fibre: length * length,
                path,
            });
        }
        let j = model.eval_jacobian(&cur, data)?;
        let k = ntk_gram(&j);
        let (lo, hi) = symmetric_extremes(&k.matrix);
        if lo <= 1e-10 * hi.max(1.0) {
            return Err(GeoflowError::Continuation(format!(
                "Jacobian lost rank at {:?} (lambda_min = {lo:.3e})",
                cur.as_slice()
            )));
        }
        let tangent = &remaining - j.apply_transpose(&spd_solve(&k.matrix, &j.apply(&remaining))?);
        if tangent.norm() < 1e-3 * remaining.norm() {
            return Err(GeoflowError::Continuation("target is not ahead along the fibre".into()));
        }
        let tn = tangent.norm();
        let mut x = &cur + tangent * (h / tn);
        let mut ok = false;
        for _ in 0..30 {
            let r = model.eval_outputs(&x, data)? - &c;
            if r.norm() < 1e-13 * (1.0 + c.norm()) {
                ok = true;
                break;
            }
            let j = model.eval_jacobian(&x, data)?;
            let k = ntk_gram(&j);
            x -= j.apply_transpose(&spd_solve(&k.matrix, &r)?);
        }
        if !ok {
            return Err(GeoflowError::Continuation("corrector did not return to the fibre".into()));
        }
        length += (&x - &cur).norm();
        cur = x;
        path.push(cur.clone());
    }
    Err(GeoflowError::Continuation(format!("no arrival after {max_steps} steps")))
}

/// Tabulated `E(c)` for one output with cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable {
    pub cs: Vec<f64>,
    pub energies: Vec<f64>,
    slopes: Vec<f64>,
}

impl EnergyTable {
    /// Builds a table from energies on a uniform grid; slopes come from
    /// second-order differences (exact for quadratic `E`).
    pub fn from_values(cs: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        let k = cs.len();
        if k < 3 || energies.len() != k {
            return Err(GeoflowError::Config("energy table needs >= 3 matching points".into()));
        }
        let h = cs[1] - cs[0];
        if !(h > 0.0) || cs.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
            return Err(GeoflowError::Config(
                "energy table grid must be uniform and increasing".into(),
            ));
        }
        let e = &energies;
        let slopes = (0..k)
            .map(|i| match i {
                0 => (-3.0 * e[0] + 4.0 * e[1] - e[2]) / (2.0 * h),
                i if i == k - 1 => (3.0 * e[k - 1] - 4.0 * e[k - 2] + e[k - 3]) / (2.0 * h),
                i => (e[i + 1] - e[i - 1]) / (2.0 * h),
            })
            .collect();
        Ok(EnergyTable { cs, energies, slopes })
    }

    /// Solves `E(c)` at `grid` concurrently.
    pub fn build(
        model: &Model,
        data: &Dataset,
        theta0: &Params,
        grid: &[f64],
        segments: usize,
    ) -> Result<(Self, Vec<EnergySolveResult>)> {
        if data.len() != 1 {
            return Err(GeoflowError::Unsupported("energy tables need a single output".into()));
        }
        let results: Vec<Result<EnergySolveResult>> = grid
            .par_iter()
            .map(|&c| {
                let mut prob = EnergyProblem::new(model, data, theta0.clone(), DVector::from_element(1, c));
                prob.segments = segments;
                solve_horizontal_energy(&prob)
            })
            .collect();
        let mut failed = vec![];
        let mut ok = vec![];
        for (c, r) in grid.iter().zip(results) {
            match r {
                Ok(r) if r.endpoint_residual < 1e-6 => ok.push(r),
                Ok(r) => {
                    log::warn!("energy solve at c = {c} left residual {:.3e}", r.endpoint_residual);
                    failed.push(*c);
                }
                Err(e) => {
                    log::warn!("energy solve at c = {c} failed: {e}");
                    failed.push(*c);
                }
            }
        }
        if !failed.is_empty() {
            return Err(GeoflowError::EnergyGrid { failed });
        }
        let table = EnergyTable::from_values(grid.to_vec(), ok.iter().map(|r| r.energy).collect())?;
        Ok((table, ok))
    }

    pub fn range(&self) -> (f64, f64) {
        (self.cs[0], *self.cs.last().expect("non-empty"))
    }

    pub fn value(&self, c: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(c >= lo && c <= hi) {
            return Err(GeoflowError::Unsupported(format!(
                "c = {c} outside energy table [{lo}, {hi}]"
            )));
        }
        let h = self.cs[1] - self.cs[0];
        let i = (((c - lo) / h).floor() as usize).min(self.cs.len() - 2);
        let s = (c - self.cs[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(h00 * self.energies[i] + h10 * h * self.slopes[i] + h01 * self.energies[i + 1] + h11 * h * self.slopes[i + 1])
    }
}

/// How geodesic ridge obtains `E(c)`.
#[derive(Debug, Clone)]
pub enum EnergyMode {
    /// A fresh horizontal solve per evaluation.
    Direct {
        segments: usize,
    },
    Table(EnergyTable),
}

/// Geodesic ridge `d²_flow(θ₀, θ′(c)) + d²_fibre(θ′(c), θ)`, `c = g(θ)`,
/// with `θ′` the representative map of a ridgeless reference run.
#[derive(Debug, Clone)]
pub struct GeodesicRidge {
    model: Model,
    data: Dataset,
    theta0: Params,
    reference: TrajectoryRecord,
    mode: EnergyMode,
    pub fibre_tol: f64,
}

/// The two terms of geodesic ridge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicTerms {
    pub d2_flow: f64,
    pub d2_fibre: f64,
}

impl GeodesicRidge {
    pub fn new(model: Model, data: Dataset, theta0: Params, reference: TrajectoryRecord, mode: EnergyMode) -> Result<Self> {
        if !model.is_toy() {
            return Err(GeoflowError::Unsupported(
                "geodesic ridge is available for the two-parameter toys only; use arc ridge for MLPs".into(),
            ));
        }
        if reference.steps.first().and_then(|s| s.theta.as_ref()).is_none() {
            return Err(GeoflowError::Config("reference trajectory must store parameters".into()));
        }
        Ok(GeodesicRidge {
            model,
            data,
            theta0,
            reference,
            mode,
            fibre_tol: 1e-6,
        })
    }

    pub fn theta0(&self) -> &Params {
        &self.theta0
    }

    pub fn terms(&self, theta: &Params) -> Result<GeodesicTerms> {
        let c = self.model.eval_outputs(theta, &self.data)?;
        let rep = representative(&self.model, &self.data, &self.reference, &c)?;
        let d2_flow = match &self.mode {
            EnergyMode::Direct { segments } => {
                let mut prob = EnergyProblem::new(&self.model, &self.data, self.theta0.clone(), c.clone());
                prob.segments = *segments;
                solve_horizontal_energy(&prob)?.energy
            }
            EnergyMode::Table(t) => t.value(c[0])?,
        };
        let d2_fibre = fibre_distance(&self.model, &self.data, &rep.theta, theta, self.fibre_tol)?.d2_fibre;
        Ok(GeodesicTerms { d2_flow, d2_fibre })
    }

    pub fn value(&self, theta: &Params) -> Result<f64> {
        let t = self.terms(theta)?;
        Ok(t.d2_flow + t.d2_fibre)
    }

    /// Central finite differences of [`value`](Self::value).
    pub fn gradient(&self, theta: &Params) -> Result<DVector<f64>> {
        let mut grad = DVector::zeros(theta.len());
        for k in 0..theta.len() {
            let h = 1e-5 * (1.0 + theta[k].abs());
            let (mut p, mut m) = (theta.clone(), theta.clone());
            p[k] += h;
            m[k] -= h;
            let (vp, vm) = (self.value(&p)?, self.value(&m)?);
            let scale = vp.abs().max(vm.abs());
            if scale > 1e-6 && (vp - vm).abs() > 0.1 * scale {
                log::warn!(
                    "geodesic ridge: possible branch switch near {:?} ({vp} vs {vm})",
                    theta.as_slice()
                );
            }
            grad[k] = (vp - vm) / (2.0 * h);
        }
        Ok(grad)
    }
}

/// Geodesic ridge evaluated with a direct energy solve.
pub fn geodesic_ridge_value(
    model: &Model,
    data: &Dataset,
    theta0: &Params,
    theta: &Params,
    reference: &TrajectoryRecord,
) -> Result<f64> {
    GeodesicRidge::new(
        model.clone(),
        data.clone(),
        theta0.clone(),
        reference.clone(),
        EnergyMode::Direct { segments: 64 },
    )?
    .value(theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn linear_toy_energy_is_kernel_closed_form() {
        let data = Dataset::unit();
        let prob = EnergyProblem::new(&Model::LinearToy, &data, v(&[0.0, 0.0]), v(&[1.0]));
        let res = solve_horizontal_energy(&prob).unwrap();
        assert!((res.energy - 0.5).abs() < 1e-6, "{}", res.energy);
        assert!(res.converged, "{res:?}");
    }

    #[test]
    fn no_transport_needs_no_energy() {
        let data = Dataset::unit();
        let prob = EnergyProblem::new(&Model::BilinearToy, &data, v(&[2.0, 0.1]), v(&[0.2]));
        let res = solve_horizontal_energy(&prob).unwrap();
        assert!(res.energy < 1e-20);
        assert!(res.path.controls.iter().all(|u| u.norm() < 1e-12));
    }

    #[test]
    fn adjoint_gradient_matches_finite_differences() {
        let data = Dataset::scalar(&[1.0], &[1.0]).unwrap();
        let theta = v(&[2.0, 0.1]);
        let c = v(&[1.0]);
        let tr = Transcription {
            model: &Model::BilinearToy,
            data: &data,
            theta_start: &theta,
            segments: 8,
            endpoint: Endpoint::Outputs(&c),
        };
        let u = DVector::from_fn(8, |i, _| 0.1 + 0.02 * i as f64);
        let nu = v(&[0.3]);
        let (_, g) = tr.objective(&u, 10.0, &nu).unwrap();
        for i in 0..8 {
            let h = 1e-6;
            let (mut up, mut um) = (u.clone(), u.clone());
            up[i] += h;
            um[i] -= h;
            let fd = (tr.objective(&up, 10.0, &nu).unwrap().0 - tr.objective(&um, 10.0, &nu).unwrap().0) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + fd.abs()), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn constant_speed_examples() {
        let k = 8;
        let dt = 1.0 / k as f64;
        let straight = ControlPath {
            controls: vec![v(&[0.0]); k],
            thetas: (0..=k).map(|i| v(&[i as f64 * dt, 0.0])).collect(),
            dt,
        };
        assert!((constant_speed_check(&straight) - 1.0).abs() < 1e-10);
        let mut x = 0.0;
        let mut thetas = vec![v(&[0.0, 0.0])];
        for i in 0..k {
            x += if i < k / 2 { dt } else { 3.0 * dt };
            thetas.push(v(&[x, 0.0]));
        }
        let uneven = ControlPath {
            controls: vec![v(&[0.0]); k],
            thetas,
            dt,
        };
        assert!((constant_speed_check(&uneven) - 1.25).abs() < 1e-12);
    }

    #[test]
    fn fibre_distance_examples() {
        let data = Dataset::unit();
        let p = v(&[0.5, 0.5]);
        let d = fibre_distance(&Model::LinearToy, &data, &p, &p, 1e-8).unwrap();
        assert_eq!(d.d2_fibre, 0.0);
        let d = fibre_distance(&Model::LinearToy, &data, &p, &v(&[1.5, -0.5]), 1e-8).unwrap();
        assert!((d.d2_fibre - 2.0).abs() < 1e-14);
        let err = fibre_distance(&Model::LinearToy, &data, &p, &v(&[1.0, 1.0]), 1e-8).unwrap_err();
        assert!(matches!(err, GeoflowError::DifferentFibres { .. }));
    }

    #[test]
    fn hyperbola_arc_length_matches_quadrature() {
        let data = Dataset::unit();
        let d = fibre_distance(&Model::BilinearToy, &data, &v(&[1.0, 1.0]), &v(&[2.0, 0.5]), 1e-8).unwrap();
        // ∫₁² sqrt(1 + 1/x⁴) dx by composite Simpson
        let n = 20000;
        let h = 1.0 / n as f64;
        let f = |x: f64| (1.0 + 1.0 / x.powi(4)).sqrt();
        let mut s = f(1.0) + f(2.0);
        for i in 1..n {
            let x = 1.0 + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        let oracle = (s * h / 3.0).powi(2);
        assert!((d.d2_fibre - oracle).abs() < 1e-4 * oracle, "{} vs {oracle}", d.d2_fibre);
        for p in &d.path {
            assert!((p[0] * p[1] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn table_interpolation_is_exact_for_quadratics() {
        let cs: Vec<f64> = (0..11).map(|i| -2.0 + 0.4 * i as f64).collect();
        let es = cs.iter().map(|c| 0.5 * c * c + 0.3 * c).collect();
        let t = EnergyTable::from_values(cs, es).unwrap();
        for c in [-1.93, -0.2, 0.0, 1.11, 2.0] {
            assert!((t.value(c).unwrap() - (0.5 * c * c + 0.3 * c)).abs() < 1e-12);
        }
        assert!(t.value(2.5).is_err());
    }
}
