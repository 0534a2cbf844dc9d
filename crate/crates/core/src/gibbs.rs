//! Partition function of the energy Gibbs prior `p(c) ∝ exp(−βE(c))` for
//! single-output problems.

use nalgebra::DMatrix;
use statrs::function::erf::erfc;

use crate::energy::{EnergySolveResult, EnergyTable};
use crate::error::{GeoflowError, Result};
use crate::flow::TrajectoryRecord;
use crate::model::{Dataset, Model, Params};

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsConfig {
    pub beta: f64,
    /// Output interval; defaults to `g(θ₀) ± 6·C₀/√β` with `C₀` from the
    /// reference run's spectra.
    pub domain: Option<(f64, f64)>,
    /// Total quadrature nodes (≥ 64, rounded up to whole 8-point panels).
    pub quad_points: usize,
    /// Energy solves on a uniform grid over the domain.
    pub grid_points: usize,
    pub segments: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            beta: 1.0,
            domain: None,
            quad_points: 256,
            grid_points: 41,
            segments: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PartitionResult {
    pub z: f64,
    /// `(π C² / β)^{1/2}`.
    pub bound: f64,
    /// Empirical `C²`: largest `λ_max(K)` met on the grid solves and the
    /// reference run.
    pub c_squared: f64,
    /// Gaussian-bound mass outside the domain.
    pub tail_mass_estimate: f64,
    pub domain: (f64, f64),
    pub table: EnergyTable,
    /// `min_i E(c_i) − (c_i − g₀)²/C²` over the grid.
    pub lower_bound_margin: f64,
    pub solves: Vec<EnergySolveResult>,
}

/// Nodes and weights of the `k`-point Gauss–Legendre rule on `[−1, 1]`
/// (Golub–Welsch).
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::zeros(k, k);
    for i in 1..k {
        let b = i as f64 / ((4 * i * i - 1) as f64).sqrt();
        jac[(i, i - 1)] = b;
        jac[(i - 1, i)] = b;
    }
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Composite Gauss–Legendre quadrature with 8-point panels.
pub fn composite_gauss_legendre<F: FnMut(f64) -> Result<f64>>(a: f64, b: f64, points: usize, mut f: F) -> Result<f64> {
    let (x, w) = gauss_legendre(8);
    let panels = points.div_ceil(8).max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            total += wi * f(mid + 0.5 * h * xi)?;
        }
    }
    Ok(total * 0.5 * h)
}

/// Partition function `Z = ∫ exp(−βE(c)) dc` over the configured domain.
pub fn partition_function(
    model: &Model,
    data: &Dataset,
    theta0: &Params,
    cfg: &GibbsConfig,
    reference: &TrajectoryRecord,
) -> Result<PartitionResult> {
    if data.len() != 1 {
        return Err(GeoflowError::Unsupported("partition functions need a single output".into()));
    }
    if !(cfg.beta > 0.0) || cfg.quad_points < 64 || cfg.grid_points < 3 {
        return Err(GeoflowError::Config(
            "gibbs needs beta > 0, quad_points >= 64 and grid_points >= 3".into(),
        ));
    }
    let g0 = model.eval_outputs(theta0, data)?[0];
    let c0_sq = reference.steps.iter().filter_map(|s| s.lambda_max).fold(0.0f64, f64::max);
    let (lo, hi) = match cfg.domain {
        Some(d) => d,
        None => {
            let half = 6.0 * c0_sq.sqrt() / cfg.beta.sqrt();
            (g0 - half, g0 + half)
        }
    };
    if !(lo < g0 && g0 < hi) {
        return Err(GeoflowError::Config(format!("domain [{lo}, {hi}] must contain g(θ₀) = {g0}")));
    }
    let grid: Vec<f64> = (0..cfg.grid_points)
        .map(|i| lo + (hi - lo) * i as f64 / (cfg.grid_points - 1) as f64)
        .collect();
    let (table, solves) = EnergyTable::build(model, data, theta0, &grid, cfg.segments)?;
    let c_squared = solves.iter().map(|s| s.lambda_max_along).fold(c0_sq, f64::max);
    let lower_bound_margin = grid
        .iter()
        .zip(&table.energies)
        .map(|(c, e)| e - (c - g0).powi(2) / c_squared)
        .fold(f64::INFINITY, f64::min);
    let z = composite_gauss_legendre(lo, hi, cfg.quad_points, |c| Ok((-cfg.beta * table.value(c)?).exp()))?;
    let bound = (std::f64::consts::PI * c_squared / cfg.beta).sqrt();
    let scale = (cfg.beta / c_squared).sqrt();
    let tail_mass_estimate = 0.5 * bound * (erfc(scale * (g0 - lo)) + erfc(scale * (hi - g0)));
    Ok(PartitionResult {
        z,
        bound,
        c_squared,
        tail_mass_estimate,
        domain: (lo, hi),
        table,
        lower_bound_margin,
        solves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((int - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_on_gaussian() {
        let z = composite_gauss_legendre(-8.0, 8.0, 128, |c| Ok((-c * c / 2.0).exp())).unwrap();
        assert!((z - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn linear_toy_partition_is_gaussian() {
        let model = Model::LinearToy;
        let data = Dataset::unit();
        let theta0 = Params::zeros(2);
        let reference = crate::flow::integrate(
            &model,
            &data,
            &theta0,
            &crate::regularisers::RegulariserSpec::none(theta0.clone()),
            0.0,
            &crate::flow::FlowConfig::default(),
        )
        .unwrap();
        let res = partition_function(&model, &data, &theta0, &GibbsConfig::default(), &reference).unwrap();
        assert!((res.z - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-6, "{}", res.z);
        assert!((res.c_squared - 2.0).abs() < 1e-9);
        assert!(res.z <= res.bound * (1.0 + 1e-12));
        assert!(res.tail_mass_estimate < 1e-12);
    }
}
