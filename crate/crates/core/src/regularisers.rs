//! Regulariser values and gradients.
//!
//! | kind          | value                                   |
//! |---------------|-----------------------------------------|
//! | `Standard`    | `‖θ‖²`                                  |
//! | `Anchored`    | `‖θ − θ₀‖²`                             |
//! | `QuadraticAB` | `a‖Δθ‖² + (J₀Δθ)ᵀ B (J₀Δθ)`, `Δθ = θ − θ₀` |
//! | `Arc`         | `s²`, `s` the accumulated path length   |
//! | `Geodesic`    | `d²_flow + d²_fibre` (toy models only)  |

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::energy::{EnergySolveResult, GeodesicRidge};
use crate::error::{GeoflowError, Result};
use crate::linalg::{asymmetry, symmetric_extremes};
use crate::model::{Dataset, JacobianMatrix, Model, Params};

#[derive(Debug, Clone)]
pub enum RegulariserKind {
    None,
    Standard,
    Anchored,
    QuadraticAB { a: f64, b: DMatrix<f64> },
    Arc,
    Geodesic,
}

impl RegulariserKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegulariserKind::None => "none",
            RegulariserKind::Standard => "standard",
            RegulariserKind::Anchored => "anchored",
            RegulariserKind::QuadraticAB { .. } => "quadratic_ab",
            RegulariserKind::Arc => "arc",
            RegulariserKind::Geodesic => "geodesic",
        }
    }
}

/// An immutable regulariser; `anchor` is θ₀.
#[derive(Debug, Clone)]
pub struct RegulariserSpec {
    pub kind: RegulariserKind,
    pub anchor: Params,
    /// `J(θ₀)`, evaluated once for `QuadraticAB`.
    j0: Option<JacobianMatrix>,
    geodesic: Option<Arc<GeodesicRidge>>,
}

impl RegulariserSpec {
    pub fn none(anchor: Params) -> Self {
        Self::plain(RegulariserKind::None, anchor)
    }

    pub fn standard(anchor: Params) -> Self {
        Self::plain(RegulariserKind::Standard, anchor)
    }

    pub fn anchored(anchor: Params) -> Self {
        Self::plain(RegulariserKind::Anchored, anchor)
    }

    pub fn arc(anchor: Params) -> Self {
        Self::plain(RegulariserKind::Arc, anchor)
    }

    fn plain(kind: RegulariserKind, anchor: Params) -> Self {
        RegulariserSpec {
            kind,
            anchor,
            j0: None,
            geodesic: None,
        }
    }

    /// `a‖Δθ‖² + (J₀Δθ)ᵀ B (J₀Δθ)` with `J₀ = J(anchor)`.
    pub fn quadratic_ab(model: &Model, data: &Dataset, anchor: Params, a: f64, b: DMatrix<f64>) -> Result<Self> {
        if !(a > 0.0) {
            return Err(GeoflowError::InvalidRegulariser(format!("a must be positive, got {a}")));
        }
        let n = data.len();
        if b.nrows() != n || b.ncols() != n {
            return Err(GeoflowError::DimensionMismatch {
                what: "B matrix",
                expected: n,
                actual: b.nrows().max(b.ncols()),
            });
        }
        let scale = b.amax().max(f64::MIN_POSITIVE);
        if asymmetry(&b) > 1e-12 * scale {
            return Err(GeoflowError::InvalidRegulariser("B must be symmetric".into()));
        }
        if n > 0 && symmetric_extremes(&b).0 < -1e-10 * scale {
            return Err(GeoflowError::InvalidRegulariser("B must be positive semi-definite".into()));
        }
        let j0 = model.eval_jacobian(&anchor, data)?;
        Ok(RegulariserSpec {
            kind: RegulariserKind::QuadraticAB { a, b },
            anchor,
            j0: Some(j0),
            geodesic: None,
        })
    }

    /// Geodesic ridge backed by an evaluator; the anchor is the evaluator's θ₀.
    pub fn geodesic(ridge: Arc<GeodesicRidge>) -> Self {
        RegulariserSpec {
            kind: RegulariserKind::Geodesic,
            anchor: ridge.theta0().clone(),
            j0: None,
            geodesic: Some(ridge),
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn geodesic_ridge(&self) -> Option<&Arc<GeodesicRidge>> {
        self.geodesic.as_ref()
    }
}

/// Per-run mutable regulariser state.
#[derive(Debug, Clone, Default)]
pub struct RegState {
    /// Accumulated path length `s`.
    pub s_accum: f64,
    pub energy_cache: Option<EnergySolveResult>,
}

impl RegState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Gradient of a regulariser.
#[derive(Debug, Clone, PartialEq)]
pub struct RegGradient {
    pub grad: DVector<f64>,
    /// Arc ridge was asked for a direction at a vanishing data gradient.
    pub at_interpolation: bool,
}

/// Value of the regulariser.
///
/// The model and data are part of the signature for symmetry with
/// [`reg_gradient`]; the geodesic evaluator carries its own copies.
pub fn reg_value(spec: &RegulariserSpec, state: &RegState, theta: &Params, _model: &Model, _data: &Dataset) -> Result<f64> {
    check_len(spec, theta)?;
    Ok(match &spec.kind {
        RegulariserKind::None => 0.0,
        RegulariserKind::Standard => theta.norm_squared(),
        RegulariserKind::Anchored => (theta - &spec.anchor).norm_squared(),
        RegulariserKind::QuadraticAB { a, b } => {
            let d = theta - &spec.anchor;
            let jd = spec.j0.as_ref().expect("constructed with J0").apply(&d);
            a * d.norm_squared() + jd.dot(&(b * &jd))
        }
        RegulariserKind::Arc => state.s_accum * state.s_accum,
        RegulariserKind::Geodesic => geodesic(spec)?.value(theta)?,
    })
}

/// Gradient of the regulariser. `data_grad` is `∇L(θ)`, used by arc ridge.
pub fn reg_gradient(
    spec: &RegulariserSpec,
    state: &RegState,
    theta: &Params,
    _model: &Model,
    _data: &Dataset,
    data_grad: &DVector<f64>,
) -> Result<RegGradient> {
    check_len(spec, theta)?;
    let plain = |grad| RegGradient {
        grad,
        at_interpolation: false,
    };
    Ok(match &spec.kind {
        RegulariserKind::None => plain(DVector::zeros(theta.len())),
        RegulariserKind::Standard => plain(theta * 2.0),
        RegulariserKind::Anchored => plain((theta - &spec.anchor) * 2.0),
        RegulariserKind::QuadraticAB { a, b } => {
            let d = theta - &spec.anchor;
            let j0 = spec.j0.as_ref().expect("constructed with J0");
            let jd = j0.apply(&d);
            plain(&d * (2.0 * a) + j0.apply_transpose(&(b * jd)) * 2.0)
        }
        RegulariserKind::Arc => {
            let norm = data_grad.norm();
            if norm < 1e-14 {
                RegGradient {
                    grad: DVector::zeros(theta.len()),
                    at_interpolation: true,
                }
            } else {
                plain(data_grad * (-2.0 * state.s_accum / norm))
            }
        }
        RegulariserKind::Geodesic => plain(geodesic(spec)?.gradient(theta)?),
    })
}

/// `s ← s + ‖Δθ‖`.
pub fn arc_update(state: &mut RegState, delta: &DVector<f64>) {
    state.s_accum += delta.norm();
}

/// Early-stopping rule `2λs ≥ ‖∇L‖`.
pub fn arc_stop_check(state: &RegState, lambda: f64, grad_norm: f64) -> bool {
    2.0 * lambda * state.s_accum >= grad_norm
}

/// Ridge strength matching a Gaussian likelihood with noise std `sigma`
/// under the SSE loss: `λ = σ² / n`.
pub fn map_lambda(sigma: f64, n: usize) -> f64 {
    sigma * sigma / n as f64
}

fn geodesic(spec: &RegulariserSpec) -> Result<&GeodesicRidge> {
    spec.geodesic
        .as_deref()
        .ok_or_else(|| GeoflowError::InvalidRegulariser("geodesic ridge needs an evaluator".into()))
}

fn check_len(spec: &RegulariserSpec, theta: &Params) -> Result<()> {
    if theta.len() != spec.anchor.len() {
        return Err(GeoflowError::DimensionMismatch {
            what: "parameter vector",
            expected: spec.anchor.len(),
            actual: theta.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::project_tangent;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn anchored_value() {
        let spec = RegulariserSpec::anchored(v(&[0.0, 0.0]));
        let val = reg_value(&spec, &RegState::new(), &v(&[1.0, 1.0]), &Model::LinearToy, &Dataset::unit()).unwrap();
        assert_eq!(val, 2.0);
    }

    #[test]
    fn arc_value_is_square() {
        let spec = RegulariserSpec::arc(v(&[0.0, 0.0]));
        let state = RegState {
            s_accum: 0.5,
            energy_cache: None,
        };
        assert_eq!(
            reg_value(&spec, &state, &v(&[3.0, 1.0]), &Model::LinearToy, &Dataset::unit()).unwrap(),
            0.25
        );
    }

    #[test]
    fn arc_gradient_example() {
        let spec = RegulariserSpec::arc(v(&[0.0, 0.0]));
        let state = RegState {
            s_accum: 0.5,
            energy_cache: None,
        };
        let g = reg_gradient(
            &spec,
            &state,
            &v(&[0.0, 0.0]),
            &Model::LinearToy,
            &Dataset::unit(),
            &v(&[3.0, 4.0]),
        )
        .unwrap();
        assert!((g.grad - v(&[-0.6, -0.8])).norm() < 1e-15);
        let g = reg_gradient(
            &spec,
            &state,
            &v(&[0.0, 0.0]),
            &Model::LinearToy,
            &Dataset::unit(),
            &v(&[0.0, 0.0]),
        )
        .unwrap();
        assert!(g.at_interpolation && g.grad.norm() == 0.0);
    }

    #[test]
    fn anchored_gradient_vanishes_at_anchor() {
        let spec = RegulariserSpec::anchored(v(&[2.0, 0.1]));
        let g = reg_gradient(
            &spec,
            &RegState::new(),
            &v(&[2.0, 0.1]),
            &Model::BilinearToy,
            &Dataset::unit(),
            &v(&[1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(g.grad, v(&[0.0, 0.0]));
    }

    #[test]
    fn arc_updates_accumulate_length() {
        let mut s = RegState::new();
        arc_update(&mut s, &v(&[3.0, 4.0]));
        assert_eq!(s.s_accum, 5.0);
        let mut s = RegState::new();
        arc_update(&mut s, &v(&[1.0, 0.0]));
        arc_update(&mut s, &v(&[0.0, 1.0]));
        assert_eq!(s.s_accum, 2.0);
    }

    #[test]
    fn stop_check_examples() {
        let s = |x| RegState {
            s_accum: x,
            energy_cache: None,
        };
        assert!(arc_stop_check(&s(1.0), 0.1, 0.2));
        assert!(!arc_stop_check(&s(0.5), 0.1, 0.2));
    }

    #[test]
    fn quadratic_ab_validation() {
        let data = Dataset::unit();
        let anchor = v(&[2.0, 0.1]);
        let b = DMatrix::from_element(1, 1, -1.0);
        assert!(RegulariserSpec::quadratic_ab(&Model::BilinearToy, &data, anchor.clone(), 1.0, b).is_err());
        let b = DMatrix::from_element(1, 1, 1.0);
        assert!(RegulariserSpec::quadratic_ab(&Model::BilinearToy, &data, anchor, 0.0, b).is_err());
    }

    #[test]
    fn map_lambda_formula() {
        assert!((map_lambda(0.2, 16) - 0.0025).abs() < 1e-18);
    }

    fn fd_grad(spec: &RegulariserSpec, model: &Model, data: &Dataset, theta: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(theta.len(), |k, _| {
            let h = 1e-5 * (1.0 + theta[k].abs());
            let (mut p, mut m) = (theta.clone(), theta.clone());
            p[k] += h;
            m[k] -= h;
            let st = RegState::new();
            (reg_value(spec, &st, &p, model, data).unwrap() - reg_value(spec, &st, &m, model, data).unwrap()) / (2.0 * h)
        })
    }

    proptest! {
        #[test]
        fn static_gradients_match_finite_differences(
            t in proptest::collection::vec(-3.0f64..3.0, 2),
            anchor in proptest::collection::vec(-1.0f64..1.0, 2),
            a in 0.1f64..3.0,
            bdiag in 0.0f64..2.0,
        ) {
            let data = Dataset::scalar(&[0.5], &[1.0]).unwrap();
            let model = Model::BilinearToy;
            let theta = v(&t);
            let anchor = v(&anchor);
            let specs = [
                RegulariserSpec::standard(anchor.clone()),
                RegulariserSpec::anchored(anchor.clone()),
                RegulariserSpec::quadratic_ab(&model, &data, anchor, a, DMatrix::from_element(1, 1, bdiag)).unwrap(),
            ];
            for spec in &specs {
                let g = reg_gradient(spec, &RegState::new(), &theta, &model, &data, &v(&[1.0, 1.0])).unwrap().grad;
                let fd = fd_grad(spec, &model, &data, &theta);
                prop_assert!((&g - &fd).norm() <= 1e-7 * g.norm().max(1.0), "{}: {g} vs {fd}", spec.name());
            }
        }

        #[test]
        fn arc_gradient_is_horizontal_and_antiparallel(
            t in proptest::collection::vec(0.2f64..3.0, 2),
            s in 0.0f64..5.0,
        ) {
            let data = Dataset::unit();
            let model = Model::BilinearToy;
            let theta = v(&t);
            let (_, grad, _) = model.loss_and_gradient(&theta, &data).unwrap();
            prop_assume!(grad.norm() > 1e-10);
            let state = RegState { s_accum: s, energy_cache: None };
            let spec = RegulariserSpec::arc(theta.clone());
            let rg = reg_gradient(&spec, &state, &theta, &model, &data, &grad).unwrap().grad;
            prop_assert!(rg.dot(&grad) <= 0.0);
            let split = project_tangent(&model.eval_jacobian(&theta, &data).unwrap(), &rg).unwrap();
            prop_assert!(split.v_fibre.norm() <= 1e-10 * rg.norm().max(1.0));
        }
    }
}
