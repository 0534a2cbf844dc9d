//! NTK Gram matrices, spectra, the flow-tangent / fibre split, the
//! representative map and the metric-gap decomposition.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoflowError, Result};
use crate::flow::TrajectoryRecord;
use crate::linalg::{asymmetry, spd_inverse, spd_solve, symmetric_extremes};
use crate::model::{Dataset, JacobianMatrix, Model, Params};

/// `K = J Jᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NtkGram {
    pub matrix: DMatrix<f64>,
}

/// `K(θ)` straight from the model, which for the MLP avoids forming `J`.
pub fn ntk_gram_at(model: &Model, theta: &Params, data: &Dataset) -> Result<NtkGram> {
    Ok(NtkGram {
        matrix: model.ntk_matrix(theta, data)?,
    })
}

pub fn ntk_gram(j: &JacobianMatrix) -> NtkGram {
    let jt = j.transposed();
    let k = jt.tr_mul(jt);
    NtkGram {
        matrix: (&k + k.transpose()) * 0.5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `sqrt(lambda_min)`, the lower conditioning constant.
    pub c_est: f64,
    /// `sqrt(lambda_max)`, the upper conditioning constant.
    pub big_c_est: f64,
}

/// Extreme eigenvalues of `K`. Negative round-off down to `-1e-10·λ_max`
/// is clamped to zero.
pub fn spectrum(k: &NtkGram) -> Result<SpectralReport> {
    let scale = k.matrix.amax().max(f64::MIN_POSITIVE);
    let asym = asymmetry(&k.matrix);
    if asym > 1e-12 * scale {
        return Err(GeoflowError::NotSymmetric {
            asymmetry: asym,
            tolerance: 1e-12 * scale,
        });
    }
    let (lo, hi) = symmetric_extremes(&k.matrix);
    let lo = if lo < 0.0 && lo >= -1e-10 * hi.abs() { 0.0 } else { lo };
    Ok(SpectralReport {
        lambda_min: lo,
        lambda_max: hi,
        c_est: lo.max(0.0).sqrt(),
        big_c_est: hi.max(0.0).sqrt(),
    })
}

/// Orthogonal split of a parameter-space vector into `Im(Jᵀ)` and `ker J`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSplit {
    pub v_flow: DVector<f64>,
    pub v_fibre: DVector<f64>,
}

pub fn project_tangent(j: &JacobianMatrix, v: &DVector<f64>) -> Result<TangentSplit> {
    if v.len() != j.ncols() {
        return Err(GeoflowError::DimensionMismatch {
            what: "tangent vector",
            expected: j.ncols(),
            actual: v.len(),
        });
    }
    let k = ntk_gram(j);
    let (lo, hi) = symmetric_extremes(&k.matrix);
    if lo <= 1e-10 * hi.max(1.0) {
        return Err(GeoflowError::SingularKernel { lambda_min: lo });
    }
    let coeff = spd_solve(&k.matrix, &j.apply(v))?;
    let v_flow = j.apply_transpose(&coeff);
    let v_fibre = v - &v_flow;
    Ok(TangentSplit { v_flow, v_fibre })
}

/// A point `θ′(c)` of the representative map.
#[derive(Debug, Clone, PartialEq)]
pub struct Representative {
    pub theta: Params,
    /// Trajectory record the horizontal transport started from.
    pub start_index: usize,
    /// The point lies outside the bounding box of the recorded parameters.
    pub left_box: bool,
}

/// Representative map `θ′(c)` near a ridgeless trajectory.
///
/// Starts from the recorded point whose outputs are closest to `c` and
/// transports it horizontally, `dθ/ds = Jᵀ K⁻¹ (c − c_start)`, so that the
/// outputs move on a straight segment to `c`. For one output this traces the
/// recorded flow curve itself.
pub fn representative(model: &Model, data: &Dataset, traj: &TrajectoryRecord, c: &DVector<f64>) -> Result<Representative> {
    if c.len() != data.len() {
        return Err(GeoflowError::DimensionMismatch {
            what: "output target",
            expected: data.len(),
            actual: c.len(),
        });
    }
    let probe_err = |reason: String| GeoflowError::ProbeFailed {
        c: c.iter().cloned().collect(),
        reason,
    };
    let (start_index, _) = traj
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.theta.is_some())
        .map(|(i, s)| (i, (&s.outputs - c).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| probe_err("trajectory carries no parameters".into()))?;
    let theta0 = traj.steps[start_index].theta.clone().expect("filtered");
    let c0 = model.eval_outputs(&theta0, data)?;
    let delta = c - &c0;
    let theta = transport(model, data, &theta0, &delta).map_err(|e| probe_err(e.to_string()))?;
    let gap = (model.eval_outputs(&theta, data)? - c).norm();
    if !(gap < 1e-8 * (1.0 + c.norm())) {
        return Err(probe_err(format!("output misses target by {gap:.3e}")));
    }
    Ok(Representative {
        left_box: !traj.param_box_contains(&theta, 1e-9),
        theta,
        start_index,
    })
}

/// RK4 transport along `dθ/ds = Jᵀ K⁻¹ δ`, `s ∈ [0, 1]`, followed by
/// Gauss–Newton polishing of the endpoint outputs.
fn transport(model: &Model, data: &Dataset, theta: &Params, delta: &DVector<f64>) -> Result<Params> {
    let target = model.eval_outputs(theta, data)? + delta;
    let field = |th: &Params| -> Result<DVector<f64>> {
        let j = model.eval_jacobian(th, data)?;
        let k = ntk_gram(&j);
        Ok(j.apply_transpose(&spd_solve(&k.matrix, delta)?))
    };
    let k0 = ntk_gram(&model.eval_jacobian(theta, data)?);
    let lmin = symmetric_extremes(&k0.matrix).0.max(1e-300);
    // parameter distance ~ |δ| / sqrt(λ_min); keep each step ≲ 1e-3
    let steps = ((delta.norm() / lmin.sqrt()) / 1e-3).ceil().clamp(1.0, 1e6) as usize;
    let h = 1.0 / steps as f64;
    let mut th = theta.clone();
    for _ in 0..steps {
        let k1 = field(&th)?;
        let k2 = field(&(&th + &k1 * (0.5 * h)))?;
        let k3 = field(&(&th + &k2 * (0.5 * h)))?;
        let k4 = field(&(&th + &k3 * h))?;
        th += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    for _ in 0..8 {
        let r = model.eval_outputs(&th, data)? - &target;
        if r.norm() < 1e-14 * (1.0 + target.norm()) {
            break;
        }
        let j = model.eval_jacobian(&th, data)?;
        let k = ntk_gram(&j);
        th -= j.apply_transpose(&spd_solve(&k.matrix, &r)?);
    }
    Ok(th)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricGapReport {
    /// Output point `c` the gap was evaluated at.
    pub c: DVector<f64>,
    /// Pullback metric `G = AᵀA`, `A = Dθ′(c)`.
    pub g: DMatrix<f64>,
    pub k_inv: DMatrix<f64>,
    /// `NᵀN` with `N = (I − P)A`.
    pub n_gram: DMatrix<f64>,
    /// Smallest eigenvalue of `G − K⁻¹`.
    pub psd_residual: f64,
    /// `‖N ċ‖ / ‖ċ‖` with `ċ` from differencing the recorded outputs.
    pub velocity_leak: Option<f64>,
    /// Any probe left the recorded bounding box.
    pub probes_left_box: bool,
}

/// Metric-gap decomposition at a recorded trajectory point.
///
/// `A = Dθ′(c)` is estimated column by column with a fourth-order central
/// stencil of step `δc = 1e-4·(1 + |c_i|)`.
pub fn metric_gap(model: &Model, data: &Dataset, traj: &TrajectoryRecord, index: usize) -> Result<MetricGapReport> {
    let rec = traj.steps.get(index).ok_or_else(|| {
        GeoflowError::Config(format!(
            "trajectory index {index} out of range ({} records)",
            traj.steps.len()
        ))
    })?;
    let n = data.len();
    if n > 8 {
        return Err(GeoflowError::Unsupported(format!(
            "metric gap needs at most 8 outputs, dataset has {n}"
        )));
    }
    let c = rec.outputs.clone();
    let theta_c = representative(model, data, traj, &c)?;
    let m = model.num_params();
    let mut a = DMatrix::zeros(m, n);
    let mut left_box = theta_c.left_box;
    for i in 0..n {
        let dc = 1e-4 * (1.0 + c[i].abs());
        // probes are transported from θ′(c) itself so all share one start
        let mut probe = |s: f64| -> Result<Params> {
            let mut delta = DVector::zeros(n);
            delta[i] = s * dc;
            let theta = transport(model, data, &theta_c.theta, &delta).map_err(|e| GeoflowError::ProbeFailed {
                c: c.iter().cloned().collect(),
                reason: e.to_string(),
            })?;
            left_box |= !traj.param_box_contains(&theta, 1e-9);
            Ok(theta)
        };
        let (p1, m1, p2, m2) = (probe(1.0)?, probe(-1.0)?, probe(2.0)?, probe(-2.0)?);
        let col = ((p1 - m1) * 8.0 - (p2 - m2)) / (12.0 * dc);
        a.set_column(i, &col);
    }
    let j = model.eval_jacobian(&theta_c.theta, data)?;
    let k = ntk_gram(&j);
    let k_inv = spd_inverse(&k.matrix)?;
    let g = a.tr_mul(&a);
    // N = (I − P) A
    let pa = j.transposed() * (&k_inv * j.transposed().tr_mul(&a));
    let nmat = &a - pa;
    let n_gram = nmat.tr_mul(&nmat);
    let diff = &g - &k_inv;
    let psd_residual = symmetric_extremes(&((&diff + diff.transpose()) * 0.5)).0;
    let velocity_leak = traj.output_velocity(index).and_then(|cdot| {
        let norm = cdot.norm();
        (norm > 0.0).then(|| (&nmat * &cdot).norm() / norm)
    });
    Ok(MetricGapReport {
        c,
        g,
        k_inv,
        n_gram,
        psd_residual,
        velocity_leak,
        probes_left_box: left_box,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gram_examples() {
        let j = JacobianMatrix::from_matrix(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
        assert_eq!(ntk_gram(&j).matrix[(0, 0)], 2.0);
        let j = JacobianMatrix::from_matrix(DMatrix::from_row_slice(1, 2, &[0.1, 2.0]));
        assert!((ntk_gram(&j).matrix[(0, 0)] - 4.01).abs() < 1e-14);
    }

    #[test]
    fn gram_matches_row_dot_products() {
        let jm = DMatrix::from_row_slice(2, 3, &[0.3, -1.2, 2.0, 0.7, 0.1, -0.4]);
        let k = ntk_gram(&JacobianMatrix::from_matrix(jm.clone()));
        for a in 0..2 {
            for b in 0..2 {
                let mut dot = 0.0;
                for p in 0..3 {
                    dot += jm[(a, p)] * jm[(b, p)];
                }
                assert!((k.matrix[(a, b)] - dot).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spectrum_examples() {
        let r = spectrum(&NtkGram {
            matrix: DMatrix::from_element(1, 1, 2.0),
        })
        .unwrap();
        assert_eq!((r.lambda_min, r.lambda_max), (2.0, 2.0));
        let r = spectrum(&NtkGram {
            matrix: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])),
        })
        .unwrap();
        assert!((r.lambda_min - 1.0).abs() < 1e-14 && (r.big_c_est - 2.0).abs() < 1e-14);
        let bad = NtkGram {
            matrix: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]),
        };
        assert!(matches!(spectrum(&bad), Err(GeoflowError::NotSymmetric { .. })));
    }

    /// Power iteration on K (largest) and on λ_max·I − K (smallest).
    fn power_extremes(k: &DMatrix<f64>) -> (f64, f64) {
        let n = k.nrows();
        let power = |m: &DMatrix<f64>| {
            let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64);
            let mut lam = 0.0;
            for _ in 0..20000 {
                let w = m * &v;
                lam = v.dot(&w) / v.norm_squared();
                v = &w / w.norm();
            }
            lam
        };
        let hi = power(k);
        let shifted = DMatrix::identity(n, n) * hi - k;
        (hi - power(&shifted), hi)
    }

    #[test]
    fn spectrum_matches_power_iteration() {
        let b = DMatrix::from_fn(5, 5, |i, j| {
            ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.5 + if i == j { 1.0 } else { 0.0 }
        });
        let k = &b * b.transpose() + DMatrix::identity(5, 5) * 0.2;
        let r = spectrum(&NtkGram { matrix: k.clone() }).unwrap();
        let (lo, hi) = power_extremes(&k);
        assert!((r.lambda_min - lo).abs() < 1e-8, "{} vs {lo}", r.lambda_min);
        assert!((r.lambda_max - hi).abs() < 1e-8);
    }

    #[test]
    fn linear_toy_split() {
        let j = JacobianMatrix::from_matrix(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
        let s = project_tangent(&j, &DVector::from_vec(vec![1.0, -1.0])).unwrap();
        assert!(s.v_flow.norm() < 1e-15);
        assert_eq!(s.v_fibre, DVector::from_vec(vec![1.0, -1.0]));
        let s = project_tangent(&j, &DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert!((s.v_flow - DVector::from_vec(vec![1.0, 1.0])).norm() < 1e-15);
        assert!(s.v_fibre.norm() < 1e-15);
    }

    #[test]
    fn rank_deficient_split_errors() {
        let j = JacobianMatrix::from_matrix(DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]));
        let err = project_tangent(&j, &DVector::from_vec(vec![1.0, 1.0, 1.0])).unwrap_err();
        assert!(matches!(err, GeoflowError::SingularKernel { .. }));
    }

    proptest! {
        #[test]
        fn split_is_orthogonal_and_idempotent(
            entries in proptest::collection::vec(-2.0f64..2.0, 8),
            v in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let jm = DMatrix::from_row_slice(2, 4, &entries);
            let j = JacobianMatrix::from_matrix(jm);
            let k = ntk_gram(&j);
            let (lo, hi) = symmetric_extremes(&k.matrix);
            prop_assume!(lo > 1e-3 * hi);
            let v = DVector::from_vec(v);
            let s = project_tangent(&j, &v).unwrap();
            let scale = v.norm().max(1e-12);
            prop_assert!((&s.v_flow + &s.v_fibre - &v).norm() <= 1e-10 * scale);
            prop_assert!(s.v_flow.dot(&s.v_fibre).abs() <= 1e-10 * scale * scale);
            let again = project_tangent(&j, &s.v_flow).unwrap();
            prop_assert!((again.v_flow - &s.v_flow).norm() <= 1e-10 * scale);
        }
    }
}
