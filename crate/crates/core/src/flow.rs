//! Fixed-step integration of (regularised) gradient flow
//! `θ̇ = −(∇L(θ) + λ∇R(θ))` with trajectory recording.
//!
//! Arc ridge is integrated in the time variable of the unregularised flow:
//! its field is `−(1 − 2λs/‖∇L‖)∇L`, a positive rescaling of the ridgeless
//! field, so the visited points are those of the `λ = 0` run and only the
//! clock differs. The run stops where `2λs` crosses `‖∇L‖`, located by
//! linear interpolation and reached with a fractional step.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{GeoflowError, Result};
use crate::geometry::{ntk_gram_at, project_tangent, spectrum};
use crate::linalg::symmetric_extremes;
use crate::model::{Dataset, Model, Params};
use crate::regularisers::{reg_gradient, RegState, RegulariserKind, RegulariserSpec};

/// Largest parameter count for which spectral records carry the fibre split.
pub const FIBRE_SPLIT_MAX_PARAMS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub step_size: f64,
    pub max_time: f64,
    pub integrator: Integrator,
    /// Converged once `‖g(θ) − Y‖ < residual_tol`.
    pub residual_tol: f64,
    /// Stop once the total gradient norm falls below this.
    pub equilibrium_tol: f64,
    pub record_every: usize,
    pub spectral_every: usize,
    /// Keep θ in every record (disable for very wide models).
    pub store_params: bool,
    /// Step halvings allowed by the stability guard.
    pub max_halvings: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            step_size: 1e-2,
            max_time: 100.0,
            integrator: Integrator::Rk4,
            residual_tol: 1e-8,
            equilibrium_tol: 1e-8,
            record_every: 1,
            spectral_every: 1,
            store_params: true,
            max_halvings: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ResidualTol,
    ArcStop,
    /// Total gradient below `equilibrium_tol` (regularised equilibrium).
    Equilibrium,
    MaxTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub theta: Option<Params>,
    pub outputs: DVector<f64>,
    pub loss: f64,
    pub residual_norm: f64,
    /// Cumulative path length `s(t)`.
    pub arc_length: f64,
    /// `‖∇L‖`.
    pub grad_norm: f64,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    /// Norm of the `ker J` component of the total descent direction.
    pub fibre_grad_norm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcStopInfo {
    pub t_star: f64,
    pub s_star: f64,
    /// `‖∇L‖` at the stopping point.
    pub grad_norm: f64,
    /// Fraction of the final step taken.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub steps: Vec<StepRecord>,
    pub converged: bool,
    pub theta_final: Params,
    pub stop_reason: StopReason,
    /// Step size actually used after the stability guard.
    pub step_size: f64,
    pub halvings: usize,
    pub lambda: f64,
    pub regulariser: &'static str,
    pub arc_stop: Option<ArcStopInfo>,
}

impl TrajectoryRecord {
    pub fn last(&self) -> &StepRecord {
        self.steps.last().expect("at least the initial record")
    }

    /// Whether θ lies in the bounding box of the recorded parameters,
    /// expanded by `margin` in every coordinate.
    pub fn param_box_contains(&self, theta: &Params, margin: f64) -> bool {
        let mut lo = DVector::from_element(theta.len(), f64::INFINITY);
        let mut hi = DVector::from_element(theta.len(), f64::NEG_INFINITY);
        let mut any = false;
        for th in self.steps.iter().filter_map(|s| s.theta.as_ref()) {
            any = true;
            lo = lo.inf(th);
            hi = hi.sup(th);
        }
        any && theta
            .iter()
            .enumerate()
            .all(|(i, &v)| v >= lo[i] - margin && v <= hi[i] + margin)
    }

    /// Output velocity `ċ` at a record by central (one-sided at the ends)
    /// differencing.
    pub fn output_velocity(&self, index: usize) -> Option<DVector<f64>> {
        let n = self.steps.len();
        if n < 2 || index >= n {
            return None;
        }
        let (a, b) = match index {
            0 => (0, 1),
            i if i == n - 1 => (n - 2, n - 1),
            i => (i - 1, i + 1),
        };
        let dt = self.steps[b].t - self.steps[a].t;
        (dt > 0.0).then(|| (&self.steps[b].outputs - &self.steps[a].outputs) / dt)
    }

    /// Least-squares slope of `log ‖r(t)‖` over records whose residual is
    /// above `floor`.
    pub fn log_residual_slope(&self, floor: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .steps
            .iter()
            .filter(|s| s.residual_norm > floor)
            .map(|s| (s.t, s.residual_norm.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let k = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }
}

/// Everything the integrator needs at one point.
struct Eval {
    loss: f64,
    data_grad: DVector<f64>,
    residual: DVector<f64>,
    /// `∇L + λ∇R`
    total: DVector<f64>,
}

struct Field<'a> {
    model: &'a Model,
    data: &'a Dataset,
    reg: &'a RegulariserSpec,
    lambda: f64,
    /// Arc ridge: integrate the unregularised field.
    ridgeless: bool,
}

impl Field<'_> {
    fn eval(&self, theta: &Params) -> Result<Eval> {
        let (loss, data_grad, residual) = self.model.loss_and_gradient(theta, self.data)?;
        let total = if self.ridgeless || self.lambda == 0.0 || matches!(self.reg.kind, RegulariserKind::None) {
            data_grad.clone()
        } else {
            let rg = reg_gradient(self.reg, &RegState::new(), theta, self.model, self.data, &data_grad)?;
            &data_grad + rg.grad * self.lambda
        };
        Ok(Eval {
            loss,
            data_grad,
            residual,
            total,
        })
    }

    fn direction(&self, theta: &Params) -> Result<DVector<f64>> {
        Ok(-self.eval(theta)?.total)
    }

    /// One step of size `h` from `theta`, whose evaluation `e0` is known.
    fn step(&self, integrator: Integrator, theta: &Params, e0: &Eval, h: f64) -> Result<Params> {
        let k1 = -&e0.total;
        Ok(match integrator {
            Integrator::Euler => theta + k1 * h,
            Integrator::Rk4 => {
                let k2 = self.direction(&(theta + &k1 * (0.5 * h)))?;
                let k3 = self.direction(&(theta + &k2 * (0.5 * h)))?;
                let k4 = self.direction(&(theta + &k3 * h))?;
                theta + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
            }
        })
    }
}

/// Curvature the regulariser adds to the loss Hessian, in units of `2λ`.
fn reg_stiffness(reg: &RegulariserSpec, k_max: f64) -> f64 {
    match &reg.kind {
        RegulariserKind::Standard | RegulariserKind::Anchored => 1.0,
        RegulariserKind::QuadraticAB { a, b } => a + symmetric_extremes(b).1.max(0.0) * k_max,
        _ => 0.0,
    }
}

/// Integrates gradient flow from `theta0`.
pub fn integrate(
    model: &Model,
    data: &Dataset,
    theta0: &Params,
    reg: &RegulariserSpec,
    lambda: f64,
    cfg: &FlowConfig,
) -> Result<TrajectoryRecord> {
    integrate_from(model, data, theta0, reg, lambda, cfg, 0.0)
}

fn integrate_from(
    model: &Model,
    data: &Dataset,
    theta0: &Params,
    reg: &RegulariserSpec,
    lambda: f64,
    cfg: &FlowConfig,
    t0: f64,
) -> Result<TrajectoryRecord> {
    if !(lambda >= 0.0) {
        return Err(GeoflowError::InvalidRegulariser(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(cfg.step_size > 0.0) || cfg.record_every == 0 || cfg.spectral_every == 0 {
        return Err(GeoflowError::Config(
            "step_size must be positive and record/spectral cadences >= 1".into(),
        ));
    }
    if theta0.len() != model.num_params() {
        return Err(GeoflowError::DimensionMismatch {
            what: "parameter vector",
            expected: model.num_params(),
            actual: theta0.len(),
        });
    }
    let is_arc = matches!(reg.kind, RegulariserKind::Arc);
    let field = Field {
        model,
        data,
        reg,
        lambda,
        ridgeless: is_arc,
    };

    // stability guard
    let k0 = ntk_gram_at(model, theta0, data)?;
    let k_max = spectrum(&k0)?.lambda_max;
    let lmax = k_max + lambda * reg_stiffness(reg, k_max);
    let mut h = cfg.step_size;
    let mut halvings = 0;
    while h * 2.0 * lmax >= 1.0 {
        if halvings == cfg.max_halvings {
            return Err(GeoflowError::StepSizeGuard {
                step_size: h,
                lambda_max: lmax,
                halvings,
            });
        }
        h *= 0.5;
        halvings += 1;
    }
    if halvings > 0 {
        log::warn!(
            "step size {} violates the stability guard; halved {halvings} times to {h}",
            cfg.step_size
        );
    }

    let mut theta = theta0.clone();
    let mut t = t0;
    let mut s = 0.0;
    let mut e = field.eval(&theta)?;
    let mut steps = Vec::new();
    let mut n_steps = 0usize;
    let mut arc_stop = None;
    let record = |theta: &Params, e: &Eval, t: f64, s: f64, spectral: bool| -> Result<StepRecord> {
        let outputs = &e.residual + data.targets();
        let (lambda_min, lambda_max, fibre_grad_norm) = if spectral {
            let sp = spectrum(&ntk_gram_at(model, theta, data)?)?;
            // the fibre split needs J itself; skipped for wide networks
            let fibre = if model.num_params() <= FIBRE_SPLIT_MAX_PARAMS {
                let j = model.eval_jacobian(theta, data)?;
                project_tangent(&j, &e.total).ok().map(|split| split.v_fibre.norm())
            } else {
                None
            };
            (Some(sp.lambda_min), Some(sp.lambda_max), fibre)
        } else {
            (None, None, None)
        };
        Ok(StepRecord {
            t,
            theta: cfg.store_params.then(|| theta.clone()),
            outputs,
            loss: e.loss,
            residual_norm: e.residual.norm(),
            arc_length: s,
            grad_norm: e.data_grad.norm(),
            lambda_min,
            lambda_max,
            fibre_grad_norm,
        })
    };
    steps.push(record(&theta, &e, t, s, true)?);
    let horizon = t0 + cfg.max_time;

    let stop_reason = loop {
        if e.residual.norm() < cfg.residual_tol {
            break StopReason::ResidualTol;
        }
        if !is_arc && e.total.norm() < cfg.equilibrium_tol {
            break StopReason::Equilibrium;
        }
        if t >= horizon - 1e-12 * horizon.abs().max(1.0) {
            break StopReason::MaxTime;
        }
        let next = field.step(cfg.integrator, &theta, &e, h)?;
        n_steps += 1;
        let diverged = |quantity| GeoflowError::Divergence {
            step: n_steps,
            t,
            quantity,
            last_good: theta.iter().cloned().collect(),
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(diverged("parameter"));
        }
        let e_next = field.eval(&next)?;
        if !e_next.loss.is_finite() {
            return Err(diverged("loss"));
        }
        let ds = (&next - &theta).norm();

        if is_arc {
            let g0 = e.data_grad.norm();
            let g1 = e_next.data_grad.norm();
            let phi0 = 2.0 * lambda * s - g0;
            let phi1 = 2.0 * lambda * (s + ds) - g1;
            // clock: dt = dτ / (1 − 2λs/‖∇L‖), trapezoid over the step
            let rate = |s: f64, g: f64| {
                if g > 0.0 {
                    1.0 / (1.0 - 2.0 * lambda * s / g).max(1e-300)
                } else {
                    1.0
                }
            };
            if lambda > 0.0 && phi0 < 0.0 && phi1 >= 0.0 {
                let alpha = -phi0 / (phi1 - phi0);
                let stop = field.step(cfg.integrator, &theta, &e, alpha * h)?;
                let e_stop = field.eval(&stop)?;
                t += alpha * h * rate(s, g0);
                s += (&stop - &theta).norm();
                theta = stop;
                e = e_stop;
                arc_stop = Some(ArcStopInfo {
                    t_star: t,
                    s_star: s,
                    grad_norm: e.data_grad.norm(),
                    alpha,
                });
                steps.push(record(&theta, &e, t, s, true)?);
                break StopReason::ArcStop;
            }
            let r1 = if phi1 < 0.0 { rate(s + ds, g1) } else { rate(s, g0) };
            t += 0.5 * h * (rate(s, g0) + r1);
        } else {
            t += h;
        }
        s += ds;
        theta = next;
        e = e_next;
        if n_steps.is_multiple_of(cfg.record_every) {
            let spectral = n_steps.is_multiple_of(cfg.spectral_every);
            steps.push(record(&theta, &e, t, s, spectral)?);
        }
    };
    if stop_reason != StopReason::ArcStop && !n_steps.is_multiple_of(cfg.record_every) {
        steps.push(record(&theta, &e, t, s, true)?);
    }
    Ok(TrajectoryRecord {
        converged: stop_reason == StopReason::ResidualTol,
        steps,
        theta_final: theta,
        stop_reason,
        step_size: h,
        halvings,
        lambda,
        regulariser: reg.name(),
        arc_stop,
    })
}

/// Cumulative motion along the output fibres after convergence.
#[derive(Debug, Clone, PartialEq)]
pub struct FibreDrift {
    /// Some record had residual below ε.
    pub reached: bool,
    /// `(t, ‖Σ (I − P)Δθ‖)` from the first record below ε onwards.
    pub points: Vec<(f64, f64)>,
}

impl FibreDrift {
    pub fn final_drift(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }
}

/// Accumulates the `ker J` component of every recorded increment after the
/// residual first drops below `eps`, projecting each increment at its
/// midpoint. Needs parameters in the records; dense recording
/// (`record_every = 1`) gives the most faithful value.
pub fn fibre_drift(model: &Model, data: &Dataset, traj: &TrajectoryRecord, eps: f64) -> Result<FibreDrift> {
    let Some(start) = traj.steps.iter().position(|s| s.residual_norm < eps) else {
        return Ok(FibreDrift {
            reached: false,
            points: vec![],
        });
    };
    let params = |i: usize| {
        traj.steps[i]
            .theta
            .as_ref()
            .ok_or_else(|| GeoflowError::Unsupported("fibre drift needs a trajectory recorded with parameters".into()))
    };
    let mut acc = DVector::zeros(params(start)?.len());
    let mut points = vec![(traj.steps[start].t, 0.0)];
    for i in start..traj.steps.len() - 1 {
        let (a, b) = (params(i)?, params(i + 1)?);
        let mid = (a + b) * 0.5;
        let j = model.eval_jacobian(&mid, data)?;
        acc += project_tangent(&j, &(b - a))?.v_fibre;
        points.push((traj.steps[i + 1].t, acc.norm()));
    }
    Ok(FibreDrift { reached: true, points })
}

/// Regularised equilibrium for one λ of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitPoint {
    pub lambda: f64,
    pub theta: Params,
    /// Total gradient norm fell below the equilibrium tolerance.
    pub equilibrium: bool,
    /// Integration time used.
    pub time: f64,
}

/// Integrates each λ of `schedule` to equilibrium, doubling the horizon
/// (continuing from the last state) until `horizon_cap` is reached.
/// Runs execute in parallel; results keep schedule order.
pub fn vanishing_lambda_limit(
    model: &Model,
    data: &Dataset,
    theta0: &Params,
    reg: &RegulariserSpec,
    schedule: &[f64],
    cfg: &FlowConfig,
    horizon_cap: f64,
) -> Result<Vec<LimitPoint>> {
    if schedule.iter().any(|&l| !(l > 0.0)) {
        return Err(GeoflowError::Config("vanishing-limit schedule must be positive".into()));
    }
    let cfg = FlowConfig {
        residual_tol: 0.0,
        record_every: usize::MAX,
        spectral_every: usize::MAX,
        store_params: false,
        ..cfg.clone()
    };
    schedule
        .par_iter()
        .map(|&lambda| {
            let mut theta = theta0.clone();
            let mut t = 0.0;
            let mut span = cfg.max_time;
            loop {
                let run_cfg = FlowConfig {
                    max_time: span.min(horizon_cap - t),
                    ..cfg.clone()
                };
                let traj = integrate_from(model, data, &theta, reg, lambda, &run_cfg, t)?;
                t = traj.last().t;
                theta = traj.theta_final;
                let done = traj.stop_reason != StopReason::MaxTime;
                if done || t >= horizon_cap * (1.0 - 1e-12) {
                    if !done {
                        log::warn!("lambda = {lambda}: no equilibrium before horizon cap {horizon_cap}");
                    }
                    return Ok(LimitPoint {
                        lambda,
                        theta,
                        equilibrium: done,
                        time: t,
                    });
                }
                span *= 2.0;
            }
        })
        .collect()
}

/// Polynomial extrapolation to `λ = 0` through the (up to) three
/// smallest-λ equilibria: Lagrange interpolation evaluated at zero.
pub fn extrapolate_to_zero(points: &[LimitPoint]) -> Option<Params> {
    let mut sorted: Vec<&LimitPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    sorted.dedup_by(|a, b| a.lambda == b.lambda);
    sorted.truncate(3);
    if sorted.len() < 2 {
        return None;
    }
    let mut out = Params::zeros(sorted[0].theta.len());
    for (i, p) in sorted.iter().enumerate() {
        let w: f64 = sorted
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| q.lambda / (q.lambda - p.lambda))
            .product();
        out += &p.theta * w;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn linear_toy_reaches_symmetric_minimum() {
        let theta0 = v(&[0.0, 0.0]);
        let traj = integrate(
            &Model::LinearToy,
            &Dataset::unit(),
            &theta0,
            &RegulariserSpec::none(theta0.clone()),
            0.0,
            &FlowConfig::default(),
        )
        .unwrap();
        assert!(traj.converged);
        assert!((&traj.theta_final - v(&[0.5, 0.5])).amax() < 1e-6);
        // straight chord
        assert!((traj.last().arc_length - 0.5f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn loss_is_monotone_for_ridgeless_flow() {
        let theta0 = v(&[2.0, 0.1]);
        let traj = integrate(
            &Model::BilinearToy,
            &Dataset::unit(),
            &theta0,
            &RegulariserSpec::none(theta0.clone()),
            0.0,
            &FlowConfig::default(),
        )
        .unwrap();
        for w in traj.steps.windows(2) {
            assert!(w[1].loss <= w[0].loss);
            assert!(w[1].arc_length >= w[0].arc_length);
        }
    }

    #[test]
    fn stability_guard_halves_then_errors() {
        let theta0 = v(&[0.0, 0.0]);
        let reg = RegulariserSpec::none(theta0.clone());
        let cfg = FlowConfig {
            step_size: 0.5,
            max_time: 1.0,
            ..FlowConfig::default()
        };
        let traj = integrate(&Model::LinearToy, &Dataset::unit(), &theta0, &reg, 0.0, &cfg).unwrap();
        assert_eq!(traj.halvings, 2);
        let cfg = FlowConfig { step_size: 100.0, ..cfg };
        let err = integrate(&Model::LinearToy, &Dataset::unit(), &theta0, &reg, 0.0, &cfg).unwrap_err();
        assert!(matches!(err, GeoflowError::StepSizeGuard { halvings: 6, .. }));
    }

    #[test]
    fn extrapolation_is_exact_for_linear_paths() {
        let pts = [
            LimitPoint {
                lambda: 0.1,
                theta: v(&[1.1, 2.0]),
                equilibrium: true,
                time: 0.0,
            },
            LimitPoint {
                lambda: 0.2,
                theta: v(&[1.2, 2.0]),
                equilibrium: true,
                time: 0.0,
            },
        ];
        let z = extrapolate_to_zero(&pts).unwrap();
        assert!((z - v(&[1.0, 2.0])).amax() < 1e-14);
    }

    #[test]
    fn extrapolation_is_exact_for_quadratic_paths() {
        let f = |l: f64| v(&[0.5 - 0.3 * l + 2.0 * l * l, 1.0 + l * l]);
        let pts: Vec<LimitPoint> = [0.3, 0.01, 0.1, 0.03]
            .iter()
            .map(|&lambda| LimitPoint {
                lambda,
                theta: f(lambda),
                equilibrium: true,
                time: 0.0,
            })
            .collect();
        let z = extrapolate_to_zero(&pts).unwrap();
        assert!((z - v(&[0.5, 1.0])).amax() < 1e-13);
    }
}
